//! Two-user rate regions as intersections of halfplanes `a1·R1 + a2·R2 ≤ b`.

use std::fmt::Write as _;

use crate::error::ParseError;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Halfplane<T> {
    pub a1: T,
    pub a2: T,
    pub b: T,
    pub label: String,
    /// `false` when the constraint is known to be implied by the others.
    pub active: bool,
}

impl<T: Scalar> Halfplane<T> {
    pub fn new(a1: T, a2: T, b: T, label: impl Into<String>) -> Self {
        Halfplane {
            a1,
            a2,
            b,
            label: label.into(),
            active: true,
        }
    }

    /// `b - a1·r1 - a2·r2`; nonnegative iff the point satisfies the constraint.
    pub fn slack(&self, r1: &T, r2: &T) -> T {
        self.b.clone() - self.a1.clone() * r1.clone() - self.a2.clone() * r2.clone()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corner<T> {
    pub label: String,
    pub r1: T,
    pub r2: T,
    /// Whether the point is a corner of the region for this parameter set.
    pub applicable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateRegion<T> {
    pub halfplanes: Vec<Halfplane<T>>,
    pub corners: Vec<Corner<T>>,
    /// Free-form provenance tag written into exports, e.g. `outer-bound-only`.
    pub tag: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Membership<T> {
    pub inside: bool,
    /// Slack per halfplane, in the order of [`RateRegion::halfplanes`].
    pub slacks: Vec<T>,
}

impl<T> Membership<T> {
    /// Index of the first violated halfplane.
    pub fn first_violation(&self) -> Option<usize>
    where
        T: Scalar,
    {
        self.slacks.iter().position(|s| *s < -T::epsilon())
    }
}

impl<T: Scalar> RateRegion<T> {
    pub fn new(halfplanes: Vec<Halfplane<T>>) -> Self {
        RateRegion {
            halfplanes,
            corners: Vec::new(),
            tag: None,
        }
    }

    pub fn contains(&self, r1: &T, r2: &T) -> Membership<T> {
        let slacks: Vec<T> = self.halfplanes.iter().map(|h| h.slack(r1, r2)).collect();
        let floor = -T::epsilon();
        let inside = slacks.iter().all(|s| *s >= floor);
        Membership { inside, slacks }
    }

    pub fn is_inside(&self, r1: &T, r2: &T) -> bool {
        let floor = -T::epsilon();
        self.halfplanes.iter().all(|h| h.slack(r1, r2) >= floor)
    }

    /// Number of halfplanes on which the point has zero slack.
    pub fn tight_count(&self, r1: &T, r2: &T) -> usize {
        let eps = T::epsilon();
        self.halfplanes
            .iter()
            .filter(|h| {
                let s = h.slack(r1, r2);
                s <= eps.clone() && s >= -eps.clone()
            })
            .count()
    }

    /// Vertices of the polygon, counter-clockwise from the origin side.
    pub fn vertices(&self) -> Vec<(T, T)> {
        vertices_of(self.halfplanes.iter().collect::<Vec<_>>().as_slice())
    }

    /// Maximum of `a1·r1 + a2·r2` over the region (the support function).
    pub fn support(&self, a1: &T, a2: &T) -> Option<T> {
        self.vertices()
            .into_iter()
            .map(|(x, y)| a1.clone() * x + a2.clone() * y)
            .fold(None, |best: Option<T>, v| match best {
                Some(b) if b >= v => Some(b),
                _ => Some(v),
            })
    }

    /// Whether halfplane `idx` is implied by the remaining ones.
    pub fn is_redundant(&self, idx: usize) -> bool {
        let others: Vec<&Halfplane<T>> = self
            .halfplanes
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != idx)
            .map(|(_, h)| h)
            .collect();
        let verts = vertices_of(&others);
        if verts.is_empty() {
            return false;
        }
        // an unbounded remainder shows up as vertices that are not enclosed
        if !bounded(&others) {
            return false;
        }
        let h = &self.halfplanes[idx];
        verts
            .iter()
            .all(|(x, y)| h.slack(x, y) >= -T::epsilon())
    }

    pub fn corner(&self, label: &str) -> Option<&Corner<T>> {
        self.corners.iter().find(|c| c.label == label)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let halfplanes: Vec<_> = self
            .halfplanes
            .iter()
            .map(|h| {
                serde_json::json!({
                    "a1": h.a1.to_json(),
                    "a2": h.a2.to_json(),
                    "b": h.b.to_json(),
                    "label": h.label,
                    "active": h.active,
                })
            })
            .collect();
        let corners: Vec<_> = self
            .corners
            .iter()
            .map(|c| {
                serde_json::json!({
                    "label": c.label,
                    "r1": c.r1.to_json(),
                    "r2": c.r2.to_json(),
                    "applicable": c.applicable,
                })
            })
            .collect();
        let mut v = serde_json::json!({ "halfplanes": halfplanes, "corners": corners });
        if let Some(tag) = &self.tag {
            v["tag"] = serde_json::Value::String(tag.clone());
        }
        v
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, ParseError> {
        let schema = |msg: &str| ParseError::Schema(format!("region: {msg}"));
        let field = |obj: &serde_json::Value, key: &str| -> Result<T, ParseError> {
            T::from_json(obj.get(key).ok_or_else(|| schema(&format!("missing `{key}`")))?)
        };
        let label = |obj: &serde_json::Value| -> String {
            obj.get("label").and_then(|l| l.as_str()).unwrap_or("").to_string()
        };
        let flag = |obj: &serde_json::Value, key: &str| obj.get(key).and_then(|a| a.as_bool()).unwrap_or(true);
        let mut halfplanes = Vec::new();
        for h in v
            .get("halfplanes")
            .and_then(|h| h.as_array())
            .ok_or_else(|| schema("missing halfplanes array"))?
        {
            halfplanes.push(Halfplane {
                a1: field(h, "a1")?,
                a2: field(h, "a2")?,
                b: field(h, "b")?,
                label: label(h),
                active: flag(h, "active"),
            });
        }
        let mut corners = Vec::new();
        if let Some(list) = v.get("corners").and_then(|c| c.as_array()) {
            for c in list {
                corners.push(Corner {
                    label: label(c),
                    r1: field(c, "r1")?,
                    r2: field(c, "r2")?,
                    applicable: flag(c, "applicable"),
                });
            }
        }
        Ok(RateRegion {
            halfplanes,
            corners,
            tag: v.get("tag").and_then(|t| t.as_str()).map(str::to_string),
        })
    }

    /// CSV with one row per halfplane and per corner.
    pub fn to_csv(&self) -> String {
        let cell = |x: &T| match x.to_json() {
            serde_json::Value::String(s) => s,
            other => other.to_string(),
        };
        let mut out = String::from("kind,label,a1,a2,b,r1,r2,flag\n");
        for h in &self.halfplanes {
            let _ = writeln!(
                out,
                "halfplane,{},{},{},{},,,{}",
                h.label,
                cell(&h.a1),
                cell(&h.a2),
                cell(&h.b),
                if h.active { "active" } else { "inactive" }
            );
        }
        for c in &self.corners {
            let _ = writeln!(
                out,
                "corner,{},,,,{},{},{}",
                c.label,
                cell(&c.r1),
                cell(&c.r2),
                if c.applicable { "applicable" } else { "not-applicable" }
            );
        }
        out
    }

    /// Converts every coefficient, e.g. exact to `f64` for plotting.
    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> RateRegion<U> {
        RateRegion {
            halfplanes: self
                .halfplanes
                .iter()
                .map(|h| Halfplane {
                    a1: f(&h.a1),
                    a2: f(&h.a2),
                    b: f(&h.b),
                    label: h.label.clone(),
                    active: h.active,
                })
                .collect(),
            corners: self
                .corners
                .iter()
                .map(|c| Corner {
                    label: c.label.clone(),
                    r1: f(&c.r1),
                    r2: f(&c.r2),
                    applicable: c.applicable,
                })
                .collect(),
            tag: self.tag.clone(),
        }
    }
}

fn intersect<T: Scalar>(h: &Halfplane<T>, g: &Halfplane<T>) -> Option<(T, T)> {
    let det = h.a1.clone() * g.a2.clone() - h.a2.clone() * g.a1.clone();
    if det.is_zero() {
        return None;
    }
    let x = (h.b.clone() * g.a2.clone() - h.a2.clone() * g.b.clone()) / det.clone();
    let y = (h.a1.clone() * g.b.clone() - h.b.clone() * g.a1.clone()) / det;
    Some((x, y))
}

fn vertices_of<T: Scalar>(planes: &[&Halfplane<T>]) -> Vec<(T, T)> {
    let floor = -T::epsilon();
    let mut pts: Vec<(T, T)> = Vec::new();
    for i in 0..planes.len() {
        for j in i + 1..planes.len() {
            let Some((x, y)) = intersect(planes[i], planes[j]) else {
                continue;
            };
            if planes.iter().all(|h| h.slack(&x, &y) >= floor) {
                let dup = pts.iter().any(|(px, py)| {
                    close(px, &x) && close(py, &y)
                });
                if !dup {
                    pts.push((x, y));
                }
            }
        }
    }
    sort_ccw(&mut pts);
    pts
}

fn close<T: Scalar>(a: &T, b: &T) -> bool {
    let d = a.clone() - b.clone();
    let eps = T::epsilon();
    d <= eps.clone() && d >= -eps
}

/// Orders points counter-clockwise around their centroid.
fn sort_ccw<T: Scalar>(pts: &mut [(T, T)]) {
    if pts.len() < 3 {
        return;
    }
    let n = T::from_i64(pts.len() as i64);
    let cx = pts.iter().fold(T::zero(), |a, p| a + p.0.clone()) / n.clone();
    let cy = pts.iter().fold(T::zero(), |a, p| a + p.1.clone()) / n;
    pts.sort_by(|a, b| {
        let ax = (a.0.clone() - cx.clone()).to_f64();
        let ay = (a.1.clone() - cy.clone()).to_f64();
        let bx = (b.0.clone() - cx.clone()).to_f64();
        let by = (b.1.clone() - cy.clone()).to_f64();
        ay.atan2(ax)
            .partial_cmp(&by.atan2(bx))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
}

/// Whether the normals positively span the plane, i.e. the intersection is
/// bounded whenever it is nonempty.
fn bounded<T: Scalar>(planes: &[&Halfplane<T>]) -> bool {
    let mut angles: Vec<f64> = planes
        .iter()
        .filter(|h| !(h.a1.is_zero() && h.a2.is_zero()))
        .map(|h| h.a2.to_f64().atan2(h.a1.to_f64()))
        .collect();
    if angles.len() < 3 {
        return false;
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut max_gap = angles[0] + 2.0 * std::f64::consts::PI - angles[angles.len() - 1];
    for w in angles.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    max_gap < std::f64::consts::PI - 1e-12
}

/// Constraints `R1 ≥ 0` and `R2 ≥ 0`.
pub fn nonnegativity<T: Scalar>() -> [Halfplane<T>; 2] {
    [
        Halfplane::new(-T::one(), T::zero(), T::zero(), "nonneg R1"),
        Halfplane::new(T::zero(), -T::one(), T::zero(), "nonneg R2"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat, Rational};

    fn square() -> RateRegion<Rational> {
        let mut hs = vec![
            Halfplane::new(int(1), int(0), int(2), "R1"),
            Halfplane::new(int(0), int(1), int(2), "R2"),
            Halfplane::new(int(1), int(1), int(3), "sum"),
        ];
        hs.extend(nonnegativity());
        RateRegion::new(hs)
    }

    #[test]
    fn membership_and_slack() {
        let r = square();
        let m = r.contains(&int(1), &int(2));
        assert!(m.inside);
        assert_eq!(m.slacks[2], int(0));
        let m = r.contains(&rat(5, 2), &int(0));
        assert!(!m.inside);
        assert_eq!(m.first_violation(), Some(0));
        assert!(r.is_inside(&int(0), &int(0)));
    }

    #[test]
    fn pentagon_vertices() {
        let v = square().vertices();
        assert_eq!(v.len(), 5);
        for p in [(int(0), int(0)), (int(2), int(0)), (int(2), int(1)), (int(1), int(2)), (int(0), int(2))] {
            assert!(v.contains(&p), "missing {p:?}");
        }
    }

    #[test]
    fn redundancy_detection() {
        let mut r = square();
        r.halfplanes.push(Halfplane::new(int(1), int(1), int(5), "loose sum"));
        assert!(r.is_redundant(5));
        assert!(!r.is_redundant(2));
        assert!(!r.is_redundant(0));
    }

    #[test]
    fn json_round_trip_preserves_membership() {
        let mut r = square();
        r.corners.push(Corner {
            label: "A".into(),
            r1: rat(3, 2),
            r2: rat(3, 2),
            applicable: true,
        });
        r.tag = Some("test".into());
        let back = RateRegion::<Rational>::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn float_region_uses_tolerance() {
        let r = square().map(|x| x.to_f64());
        assert!(r.is_inside(&(1.0 + 1e-12), &2.0));
        assert!(!r.is_inside(&1.01, &2.0));
        assert_eq!(r.vertices().len(), 5);
        let csv = r.to_csv();
        assert!(csv.starts_with("kind,label"));
        assert_eq!(csv.lines().count(), 6);
    }
}
