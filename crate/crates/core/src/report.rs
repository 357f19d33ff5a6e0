//! Simulation report tables and the rate-region SVG plot.

use std::fmt::Write as _;

use serde::Serialize;

use crate::harness::{relative_gap, Estimate, RegionCheck, SchemeSpec};
use crate::region::RateRegion;
use crate::scalar::{format_rational, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub scheme: String,
    #[serde(rename = "M")]
    pub m: usize,
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub p: String,
    #[serde(rename = "dist-kind")]
    pub dist_kind: String,
    #[serde(rename = "N_B")]
    pub block_len: usize,
    pub blocks: usize,
    pub trials: usize,
    pub mean_r1: f64,
    pub mean_r2: f64,
    /// Larger of the two 95% half-widths.
    pub ci: f64,
    pub formula_r1: String,
    pub formula_r2: String,
    pub gap: f64,
    pub verdict: String,
}

impl ReportRow {
    /// `pass` when the relative gap is within `tolerance`, the run is inside
    /// the region after the margin, and no trial failed.
    pub fn new(spec: &SchemeSpec, est: &Estimate, check: &RegionCheck, tolerance: f64) -> Self {
        let cfgs = spec.cfgs();
        let formula = spec.formula();
        let gap = relative_gap(est.mean, &formula);
        let (block_len, blocks) = spec.blocks();
        let ok = gap <= tolerance && check.passed && est.failures() == 0;
        ReportRow {
            scheme: spec.name(),
            m: cfgs.len(),
            n: cfgs.iter().map(|c| c.n()).collect(),
            k: cfgs.iter().map(|c| c.k()).collect(),
            p: format_rational(&spec.p()),
            dist_kind: spec.distribution().kind().as_str().to_string(),
            block_len,
            blocks,
            trials: est.trials.len(),
            mean_r1: est.mean[0],
            mean_r2: est.mean[1],
            ci: est.ci[0].max(est.ci[1]),
            formula_r1: format_rational(&formula[0]),
            formula_r2: format_rational(&formula[1]),
            gap,
            verdict: if ok { "pass" } else { "fail" }.to_string(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }
}

const COLUMNS: &str = "scheme,M,n,k,p,dist-kind,N_B,blocks,trials,mean_r1,mean_r2,ci,formula_r1,formula_r2,gap,verdict";

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut out = format!("{COLUMNS}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{},{},{:.6},{}",
            r.scheme,
            r.m,
            join(&r.n),
            join(&r.k),
            r.p,
            r.dist_kind,
            r.block_len,
            r.blocks,
            r.trials,
            r.mean_r1,
            r.mean_r2,
            r.ci,
            r.formula_r1,
            r.formula_r2,
            r.gap,
            r.verdict
        );
    }
    out
}

pub fn rows_to_json(rows: &[ReportRow]) -> serde_json::Value {
    serde_json::to_value(rows).expect("report rows serialize")
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Self-contained SVG of a two-user region: the polygon, an active sum
/// bound drawn dashed, applicable labeled corners marked. Axis units are
/// level-slots.
pub fn region_svg<T: Scalar>(region: &RateRegion<T>, title: &str) -> String {
    let region = region.map(|x| x.to_f64());
    let verts = region.vertices();
    let extent = verts
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .chain(region.corners.iter().flat_map(|c| [c.r1, c.r2]))
        .fold(1.0f64, f64::max)
        * 1.1;
    let (size, pad) = (480.0, 60.0);
    let scale = size / extent;
    let x = |r: f64| pad + r * scale;
    let y = |r: f64| pad + size - r * scale;
    let mut s = String::new();
    let total = size + 2.0 * pad;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, total / 2.0, esc(title));
    // axes with unit ticks
    let _ = writeln!(
        s,
        r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><line x1="{0}" y1="{1}" x2="{0}" y2="{3}" stroke="black"/>"#,
        x(0.0),
        y(0.0),
        x(extent),
        y(extent)
    );
    let step = if extent > 12.0 { (extent / 10.0).ceil() } else { 1.0 };
    let mut t = 0.0;
    while t <= extent {
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="black"/><text x="{0:.2}" y="{3:.2}" text-anchor="middle">{4}</text>"#,
            x(t),
            y(0.0),
            y(0.0) + 5.0,
            y(0.0) + 18.0,
            t
        );
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="black"/><text x="{3:.2}" y="{4:.2}" text-anchor="end">{5}</text>"#,
            x(0.0) - 5.0,
            y(t),
            x(0.0),
            x(0.0) - 8.0,
            y(t) + 4.0,
            t
        );
        t += step;
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">R1</text>"#, x(extent / 2.0), total - 12.0);
    let _ = writeln!(s, r#"<text x="16" y="{}" text-anchor="middle">R2</text>"#, y(extent / 2.0));
    if !verts.is_empty() {
        let points: Vec<String> = verts.iter().map(|&(a, b)| format!("{:.2},{:.2}", x(a), y(b))).collect();
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="#cfe0f5" stroke="#1f4e8c" stroke-width="2"/>"##,
            points.join(" ")
        );
    }
    // the sum bound, clipped to the plot square
    let sum = region
        .halfplanes
        .iter()
        .find(|h| h.active && h.a1 > 0.0 && (h.a1 - h.a2).abs() < 1e-12);
    if let Some(h) = sum {
        let mut ends = Vec::new();
        if h.a2.abs() > 1e-12 {
            for r1 in [0.0, extent] {
                let r2 = (h.b - h.a1 * r1) / h.a2;
                if (0.0..=extent).contains(&r2) {
                    ends.push((r1, r2));
                }
            }
        }
        if h.a1.abs() > 1e-12 {
            for r2 in [0.0, extent] {
                let r1 = (h.b - h.a2 * r2) / h.a1;
                if (0.0..=extent).contains(&r1) {
                    ends.push((r1, r2));
                }
            }
        }
        if ends.len() >= 2 {
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="6 4"/>"##,
                x(ends[0].0),
                y(ends[0].1),
                x(ends[1].0),
                y(ends[1].1)
            );
        }
    }
    for c in region.corners.iter().filter(|c| c.applicable) {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#c0392b"/><text x="{:.2}" y="{:.2}">{}</text>"##,
            x(c.r1),
            y(c.r2),
            x(c.r1) + 6.0,
            y(c.r2) - 6.0,
            esc(&c.label)
        );
    }
    if let Some(tag) = &region.tag {
        let _ = writeln!(s, r#"<text x="{}" y="44" text-anchor="middle" fill="gray">{}</text>"#, total / 2.0, esc(tag));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::region;
    use crate::channel::SubcarrierConfig;
    use crate::scalar::rat;

    #[test]
    fn svg_marks_applicable_corners() {
        let cfgs = [SubcarrierConfig::new(1, 1), SubcarrierConfig::new(1, 4)];
        let svg = region_svg(&region(&cfgs, &rat(1, 2)), "example");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains(">D1<") && svg.contains(">R_NC<"));
        assert!(!svg.contains(">R_C<"));
        assert!(svg.contains("<polygon"));
    }

    #[test]
    fn active_sum_bound_is_dashed() {
        let toy = [SubcarrierConfig::new(1, 1), SubcarrierConfig::new(1, 3)];
        let svg = region_svg(&region(&toy, &rat(1, 2)), "toy");
        assert!(!svg.contains("stroke-dasharray"));
        let ex2 = [SubcarrierConfig::new(1, 1), SubcarrierConfig::new(1, 4)];
        assert!(region_svg(&region(&ex2, &rat(1, 2)), "ex2").contains("stroke-dasharray"));
    }
}
