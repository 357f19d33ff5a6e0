//! Acceptance run: one line per criterion with its tolerance and time limit.

use std::time::{Duration, Instant};

use bil::capacity::{delta, region, sym_capacity};
use bil::gn::{gdof, GdofProfile};
use bil::harness::{default_margin, estimate_rates, relative_gap, verify_against_region, Estimate, SchemeSpec};
use bil::scalar::{common_denominator, format_rational, int, rat, Rational};
use bil::schemes::{simulate, EngineConfig, SchemeTarget};
use bil::{JointStateDistribution, StateVector, SubcarrierConfig};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TRIALS: usize = 10;

fn cfgs(v: &[(usize, usize)]) -> Vec<SubcarrierConfig> {
    v.iter().map(|&(n, k)| SubcarrierConfig::new(n, k)).collect()
}

fn toy() -> Vec<SubcarrierConfig> {
    cfgs(&[(1, 1), (1, 3)])
}

fn example1() -> Vec<SubcarrierConfig> {
    cfgs(&[(2, 2), (1, 3)])
}

fn example2() -> Vec<SubcarrierConfig> {
    cfgs(&[(1, 1), (1, 4)])
}

struct Run {
    spec: SchemeSpec,
    est: Estimate,
}

#[derive(Default)]
struct Ledger {
    runs: Vec<Run>,
}

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Runs `spec` and compares the mean against its formula at `tolerance`.
fn simulate_spec(ledger: &mut Ledger, spec: SchemeSpec, tolerance: f64, seed: u64) -> Outcome {
    let est = estimate_rates(&spec, TRIALS, seed).map_err(|e| format!("{}: {e}", spec.name()))?;
    let formula = spec.formula();
    let gap = relative_gap(est.mean, &formula);
    let detail = format!(
        "{} ({:.4}, {:.4}) vs ({}, {}) gap {:.2}%",
        spec.name(),
        est.mean[0],
        est.mean[1],
        format_rational(&formula[0]),
        format_rational(&formula[1]),
        100.0 * gap
    );
    ledger.runs.push(Run { spec, est });
    check(gap <= tolerance, detail)
}

fn all(results: Vec<Outcome>) -> Outcome {
    let ok = results.iter().all(Result::is_ok);
    let joined = results
        .into_iter()
        .map(|r| match r {
            Ok(s) => s,
            Err(s) => format!("FAILED {s}"),
        })
        .collect::<Vec<_>>()
        .join("; ");
    check(ok, joined)
}

fn exact_pins() -> Outcome {
    let half = rat(1, 2);
    let cases = [
        ("toy", toy(), 0, int(2)),
        ("example 1", example1(), -1, rat(8, 3)),
        ("example 2", example2(), 1, rat(9, 4)),
    ];
    all(cases
        .into_iter()
        .map(|(name, c, d, cap)| {
            let got = sym_capacity(&c, &half);
            check(
                delta(&c) == d && got == cap,
                format!("{name} Δ={} C_sym={}", delta(&c), format_rational(&got)),
            )
        })
        .collect())
}

fn gdof_pins() -> Outcome {
    let half = rat(1, 2);
    let cases = [(vec![int(1)], rat(2, 3)), (vec![int(3)], rat(5, 4)), (vec![int(1), int(3)], int(1))];
    all(cases
        .into_iter()
        .map(|(betas, want)| {
            let got = gdof(&GdofProfile::new(betas.clone(), half.clone()).expect("valid profile"));
            let shown: Vec<_> = betas.iter().map(format_rational).collect();
            check(got == want, format!("β={shown:?} → {}", format_rational(&got)))
        })
        .collect())
}

fn scaled_ld(betas: &[Rational], p: &Rational) -> Rational {
    let scale = common_denominator(betas).to_i64().expect("small denominators");
    let c: Vec<SubcarrierConfig> = betas
        .iter()
        .map(|b| SubcarrierConfig::new(scale as usize, (b * int(scale)).to_integer().to_usize().expect("integral")))
        .collect();
    sym_capacity(&c, p) / int(scale * betas.len() as i64)
}

fn gdof_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ps = [rat(0, 1), rat(1, 4), rat(1, 2), rat(3, 4), rat(1, 1)];
    let mut checked = 0;
    for _ in 0..200 {
        let m = rng.gen_range(1..=4);
        let betas: Vec<Rational> = (0..m)
            .map(|_| {
                let den = rng.gen_range(1..=6);
                rat(rng.gen_range(0..=4 * den), den)
            })
            .collect();
        for p in &ps {
            let g = gdof(&GdofProfile::new(betas.clone(), p.clone()).expect("valid profile"));
            let ld = scaled_ld(&betas, p);
            if g != ld {
                return Err(format!("β={betas:?} p={p}: gdof {g} vs LD {ld}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} exact matches"))
}

fn single_carrier(ledger: &mut Ledger) -> Outcome {
    let half = rat(1, 2);
    let n = 200_000;
    let mut out = Vec::new();
    for (i, (nn, k)) in [(2, 1), (1, 1), (2, 3)].into_iter().enumerate() {
        out.push(simulate_spec(ledger, SchemeSpec::single(nn, k, half.clone(), n, 1), 0.02, 40 + i as u64));
    }
    let relay = SchemeSpec::BurstyRelay { n: 1, k: 3, p: half, block_len: 10_000, blocks: 20 };
    out.push(simulate_spec(ledger, relay, 0.02, 44));
    all(out)
}

fn multicarrier(ledger: &mut Ledger) -> Outcome {
    let half = rat(1, 2);
    let cases = [
        (toy(), JointStateDistribution::make_iid(2, half.clone())),
        (toy(), JointStateDistribution::make_identical(2, half.clone())),
        (example1(), JointStateDistribution::make_iid(2, half.clone())),
        (example2(), JointStateDistribution::make_iid(2, half.clone())),
    ];
    all(cases
        .into_iter()
        .enumerate()
        .map(|(i, (c, dist))| {
            let spec = SchemeSpec::Multicarrier { cfgs: c, dist, block_len: 5000, blocks: 20 };
            simulate_spec(ledger, spec, 0.03, 50 + i as u64)
        })
        .collect())
}

fn corners(ledger: &mut Ledger) -> Outcome {
    let half = rat(1, 2);
    let d1 = SchemeSpec::Corner {
        cfgs: example2(),
        dist: JointStateDistribution::make_iid(2, half.clone()),
        target: SchemeTarget::D1,
        block_len: 5000,
        blocks: 20,
    };
    let q1 = SchemeSpec::Corner {
        cfgs: cfgs(&[(2, 1)]),
        dist: JointStateDistribution::make_iid(1, half),
        target: SchemeTarget::Q1,
        block_len: 5000,
        blocks: 20,
    };
    all(vec![simulate_spec(ledger, d1, 0.03, 60), simulate_spec(ledger, q1, 0.03, 61)])
}

fn soundness(ledger: &Ledger) -> Outcome {
    let mut checked = 0;
    for run in &ledger.runs {
        let c = run.spec.cfgs();
        let r = region(&c, &run.spec.p());
        let margin = default_margin(&c);
        for (label, rates) in std::iter::once(("mean".to_string(), run.est.mean))
            .chain(run.est.trials.iter().map(|t| (format!("seed {}", t.seed), t.rates)))
        {
            let v = verify_against_region(rates, &r, &margin);
            if !v.passed {
                return Err(format!("{} {label}: {:?} violates {:?}", run.spec.name(), rates, v.violated));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} rate pairs inside after a 1% shrink"))
}

/// A random pmf symmetrized over cyclic rotations of the subcarriers, so all
/// marginals agree.
fn random_equal_marginal(rng: &mut impl Rng) -> JointStateDistribution {
    let m = rng.gen_range(1..=4usize);
    let states = 1u64 << m;
    let raw: Vec<i64> = (0..states).map(|_| rng.gen_range(0..=12)).collect();
    let raw = if raw.iter().all(|&w| w == 0) { vec![1; states as usize] } else { raw };
    let total: i64 = raw.iter().sum::<i64>() * m as i64;
    let mask = states - 1;
    let mut pmf = Vec::new();
    for (bits, &w) in raw.iter().enumerate() {
        for r in 0..m {
            let b = bits as u64;
            let rotated = ((b << r) | (b >> (m - r))) & mask;
            pmf.push((StateVector::from_bits(rotated, m), rat(w, total)));
        }
    }
    let p: Rational = pmf.iter().filter(|(s, _)| s.get(0)).map(|(_, w)| w.clone()).sum();
    JointStateDistribution::from_parts(m, p, pmf)
}

fn fractional_partitions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    for _ in 0..200 {
        let dist = random_equal_marginal(&mut rng);
        dist.validate().map_err(|e| e.to_string())?;
        if dist.p().is_zero() {
            continue;
        }
        let part = dist.fractional_partition().map_err(|e| e.to_string())?;
        for j in 0..dist.m() {
            let cover: Rational = part.weights().filter(|(e, _)| e.get(j)).map(|(_, w)| w.clone()).sum();
            if !cover.is_one() {
                return Err(format!("subcarrier {j} covered {cover} for {:?}", dist.to_json()));
            }
        }
        checked += 1;
    }
    Ok(format!("{checked} partitions cover every subcarrier exactly once"))
}

fn failures_and_audit(ledger: &Ledger) -> Outcome {
    let runs: usize = ledger.runs.iter().map(|r| r.est.trials.len()).sum();
    let failures: u64 = ledger.runs.iter().map(|r| r.est.failures()).sum();
    let config = EngineConfig::new(toy(), 1000, 10, SchemeTarget::Symmetric).with_audit(true);
    let dist = JointStateDistribution::make_iid(2, rat(1, 2));
    let audited = simulate(&config, &dist, "audit", 9, None).map_err(|e| e.to_string())?;
    let audit = audited.diagnostics.audit.expect("audit requested");
    check(
        failures == 0 && audited.failures == 0 && audit.passed(),
        format!(
            "{failures} decode failures in {runs} trials; audit of {} slots checked {} sends, {} violations",
            audited.slots,
            audit.checked,
            audit.violations.len()
        ),
    )
}

fn main() {
    let mut ledger = Ledger::default();
    let mut failed = 0;
    let mut report = |id: u32, limit: Option<Duration>, f: &mut dyn FnMut(&mut Ledger) -> Outcome, ledger: &mut Ledger| {
        let start = Instant::now();
        let outcome = f(ledger);
        let elapsed = start.elapsed();
        let late = limit.is_some_and(|l| elapsed > l);
        let (ok, detail) = match outcome {
            Ok(d) if !late => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} limit", limit.unwrap())),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id}: {} [{:.2}s] {detail}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    };
    let secs = |s| Some(Duration::from_secs(s));
    report(1, secs(1), &mut |_| exact_pins(), &mut ledger);
    report(2, None, &mut |_| gdof_pins(), &mut ledger);
    report(3, secs(5), &mut |_| gdof_equivalence(), &mut ledger);
    report(4, secs(30), &mut single_carrier, &mut ledger);
    report(5, secs(60), &mut multicarrier, &mut ledger);
    report(6, None, &mut corners, &mut ledger);
    report(7, None, &mut |l| soundness(l), &mut ledger);
    report(8, secs(2), &mut |_| fractional_partitions(), &mut ledger);
    report(9, None, &mut |l| failures_and_audit(l), &mut ledger);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
