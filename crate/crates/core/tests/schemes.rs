use bil::capacity::{region, sym_capacity};
use bil::harness::{verify_against_region, SchemeSpec};
use bil::scalar::{int, rat, Rational, Scalar};
use bil::schemes::{
    run_bursty_relay, run_corner, run_multicarrier, run_single_strong, run_single_weak, simulate, EngineConfig,
    SchemeTarget, SimResult,
};
use bil::{JointStateDistribution, SchemeError, SubcarrierConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfgs(v: &[(usize, usize)]) -> Vec<SubcarrierConfig> {
    v.iter().map(|&(n, k)| SubcarrierConfig::new(n, k)).collect()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn assert_near(result: &SimResult, target: f64, tol: f64) {
    for r in result.rates {
        assert!((r - target).abs() <= tol * target, "{} rate {r} vs {target}", result.scheme);
    }
}

fn formula(v: &[(usize, usize)], p: &Rational) -> f64 {
    sym_capacity(&cfgs(v), p).to_f64()
}

#[test]
fn weak_single_carrier_rates() {
    let half = rat(1, 2);
    for (n, k) in [(1, 0), (2, 1), (1, 1), (3, 2), (4, 3), (2, 2), (3, 1), (5, 4)] {
        let r = run_single_weak(n, k, &half, 30_000, &mut rng(1)).unwrap();
        assert_near(&r, formula(&[(n, k)], &half), 0.02);
    }
}

#[test]
fn strong_single_carrier_rates() {
    let half = rat(1, 2);
    for (n, k) in [(2, 3), (1, 2), (3, 4), (3, 5), (2, 4), (4, 5)] {
        let r = run_single_strong(n, k, &half, 30_000, &mut rng(2)).unwrap();
        assert_near(&r, formula(&[(n, k)], &half), 0.02);
    }
}

#[test]
fn bursty_relay_rates() {
    let half = rat(1, 2);
    for (n, k) in [(1, 3), (1, 4), (2, 5)] {
        // the last block's relayed symbols are lost, so run enough blocks
        let r = run_bursty_relay(n, k, &half, 1000, 40, &mut rng(3)).unwrap();
        assert_near(&r, formula(&[(n, k)], &half), 0.02);
    }
}

#[test]
fn deterministic_extremes() {
    let zero = rat(0, 1);
    assert_eq!(run_single_weak(2, 1, &zero, 1000, &mut rng(4)).unwrap().rates, [2.0, 2.0]);
    assert_eq!(run_single_strong(2, 3, &zero, 1000, &mut rng(4)).unwrap().rates, [2.0, 2.0]);
    assert_eq!(run_bursty_relay(1, 3, &zero, 100, 4, &mut rng(4)).unwrap().rates, [1.0, 1.0]);
    // with the link always on the chain alternates F, R and the rate is k/2
    let one = rat(1, 1);
    let r = run_single_strong(2, 3, &one, 10_000, &mut rng(4)).unwrap();
    assert_near(&r, 1.5, 0.001);
    assert_eq!(r.f_occupancy(), Some(0.5));
}

#[test]
fn preconditions_are_enforced() {
    let half = rat(1, 2);
    let precondition = |r: Result<SimResult, SchemeError>| matches!(r, Err(SchemeError::Precondition(_)));
    assert!(precondition(run_single_weak(1, 2, &half, 10, &mut rng(0))));
    assert!(precondition(run_single_weak(1, 1, &half, 0, &mut rng(0))));
    assert!(precondition(run_single_strong(2, 2, &half, 10, &mut rng(0))));
    assert!(precondition(run_single_strong(1, 3, &half, 10, &mut rng(0))));
    assert!(precondition(run_bursty_relay(1, 2, &half, 100, 2, &mut rng(0))));
    assert!(precondition(run_bursty_relay(1, 3, &half, 99, 2, &mut rng(0))));
    assert!(precondition(run_bursty_relay(1, 3, &half, 100, 1, &mut rng(0))));
    let toy = cfgs(&[(1, 1), (1, 3)]);
    let dist = JointStateDistribution::make_iid(2, half.clone());
    // D1 and D2 exist only with a positive surplus; the toy profile has Δ = 0
    assert!(precondition(run_corner(&toy, &dist, SchemeTarget::D1, 100, 2, &mut rng(0))));
    assert!(precondition(run_corner(&toy, &dist, SchemeTarget::Symmetric, 100, 2, &mut rng(0))));
    let wrong_m = JointStateDistribution::make_iid(3, half);
    assert!(precondition(run_multicarrier(&toy, &wrong_m, 100, 2, &mut rng(0))));
}

#[test]
fn phase_f_occupancy_matches_stationary_law() {
    for (p, seed) in [(rat(1, 2), 5), (rat(1, 4), 6), (rat(3, 4), 7)] {
        let slots = 100_000;
        let r = run_single_weak(1, 1, &p, slots, &mut rng(seed)).unwrap();
        let pf = p.to_f64();
        let expected = 1.0 / (1.0 + pf);
        // renewal argument: one F slot per cycle of mean length 1 + p
        let sigma = (pf * (1.0 - pf) / ((1.0 + pf).powi(3) * slots as f64)).sqrt();
        let got = r.f_occupancy().unwrap();
        assert!((got - expected).abs() <= 3.0 * sigma, "p={pf}: {got} vs {expected} ± {sigma}");
    }
}

#[test]
fn multicarrier_examples() {
    let half = rat(1, 2);
    for v in [vec![(1, 1), (1, 3)], vec![(2, 2), (1, 3)], vec![(1, 1), (1, 4)]] {
        for dist in [
            JointStateDistribution::make_iid(2, half.clone()),
            JointStateDistribution::make_identical(2, half.clone()),
        ] {
            let r = run_multicarrier(&cfgs(&v), &dist, 2000, 12, &mut rng(8)).unwrap();
            assert_near(&r, formula(&v, &half), 0.03);
        }
    }
}

#[test]
fn audit_passes_on_helping_and_relaying_runs() {
    let half = rat(1, 2);
    let cases = [
        (vec![(1, 1), (1, 3)], SchemeTarget::Symmetric),
        (vec![(2, 2), (1, 3)], SchemeTarget::Symmetric),
        (vec![(1, 1), (1, 4)], SchemeTarget::Symmetric),
        (vec![(1, 1), (1, 4)], SchemeTarget::D1),
        (vec![(1, 1), (1, 4)], SchemeTarget::D2),
        (vec![(2, 1), (2, 3)], SchemeTarget::Q1),
        (vec![(3, 2), (3, 1), (1, 6)], SchemeTarget::Symmetric),
    ];
    for (v, target) in cases {
        let dist = JointStateDistribution::make_iid(v.len(), half.clone());
        let config = EngineConfig::new(cfgs(&v), 500, 20, target).with_audit(true);
        let r = simulate(&config, &dist, "audit", 21, None).unwrap();
        let audit = r.diagnostics.audit.unwrap();
        assert!(audit.passed(), "{v:?} {target}: {audit:?}");
        assert!(audit.checked > 0);
        if target.leader().is_none() && v != [(1, 1), (1, 4)] {
            assert!(audit.ledger[0] > 0 && audit.ledger[1] > 0);
        }
    }
}

#[test]
fn corner_targets() {
    let half = rat(1, 2);
    let ex2 = cfgs(&[(1, 1), (1, 4)]);
    let dist = JointStateDistribution::make_iid(2, half.clone());
    let d1 = run_corner(&ex2, &dist, SchemeTarget::D1, 2000, 15, &mut rng(9)).unwrap();
    assert!((d1.rates[0] - 2.5).abs() < 0.075 && (d1.rates[1] - 2.0).abs() < 0.06, "{:?}", d1.rates);
    let d2 = run_corner(&ex2, &dist, SchemeTarget::D2, 2000, 15, &mut rng(9)).unwrap();
    assert!((d2.rates[1] - 2.5).abs() < 0.075 && (d2.rates[0] - 2.0).abs() < 0.06, "{:?}", d2.rates);

    let one = JointStateDistribution::make_iid(1, half.clone());
    let q1 = run_corner(&cfgs(&[(2, 1)]), &one, SchemeTarget::Q1, 2000, 10, &mut rng(10)).unwrap();
    assert_eq!(q1.rates[0], 2.0);
    assert!((q1.rates[1] - 1.0).abs() < 1e-3, "{:?}", q1.rates);
    let q2 = run_corner(&cfgs(&[(2, 1)]), &one, SchemeTarget::Q2, 2000, 10, &mut rng(10)).unwrap();
    assert_eq!(q2.rates[1], 2.0);
    assert!((q2.rates[0] - 1.0).abs() < 1e-3, "{:?}", q2.rates);

    // every subcarrier above α = 1: the follower only relays
    let strong = cfgs(&[(2, 3), (1, 4)]);
    let two = JointStateDistribution::make_iid(2, half);
    let q = run_corner(&strong, &two, SchemeTarget::Q1, 2000, 10, &mut rng(11)).unwrap();
    assert_eq!(q.rates[1], 0.0);
    // (n + (k − n)p) per subcarrier
    assert!((q.rates[0] - 5.0).abs() < 0.1, "{:?}", q.rates);
}

#[test]
fn random_profiles_decode_and_stay_inside_the_region() {
    let mut gen = rng(12);
    for trial in 0..40 {
        let m = gen.gen_range(1..=3);
        let v: Vec<(usize, usize)> = (0..m).map(|_| (gen.gen_range(1..=3), gen.gen_range(0..=8))).collect();
        let p = rat(gen.gen_range(1..=3), 4);
        let c = cfgs(&v);
        let dist = if gen.gen_bool(0.5) {
            JointStateDistribution::make_iid(m, p.clone())
        } else {
            JointStateDistribution::make_identical(m, p.clone())
        };
        let delta = bil::capacity::delta(&c);
        let mut targets = vec![SchemeTarget::Symmetric, SchemeTarget::Q1, SchemeTarget::Q2];
        if delta > 0 {
            targets.extend([SchemeTarget::D1, SchemeTarget::D2]);
        }
        let r_exact = region(&c, &p);
        for target in targets {
            let config = EngineConfig::new(c.clone(), 600, 8, target).with_audit(true);
            let r = simulate(&config, &dist, "random", trial, None)
                .unwrap_or_else(|e| panic!("{v:?} p={p} {target}: {e}"));
            assert!(r.diagnostics.audit.as_ref().unwrap().passed(), "{v:?} {target}");
            // relay gains scale with k, so does their sampling noise
            let scale: usize = c.iter().map(|s| s.n().max(s.k())).sum();
            let margin = int(scale as i64) * rat(3, 100);
            let check = verify_against_region(r.rates, &r_exact, &margin);
            assert!(check.passed, "{v:?} p={p} {target}: {:?} outside ({:?})", r.rates, check.violated);
            if target == SchemeTarget::Symmetric {
                let goal = sym_capacity(&c, &p).to_f64();
                // the last block's helping and relaying never completes
                assert!(r.rates[0] >= 0.8 * goal, "{v:?} p={p}: {:?} vs {goal}", r.rates);
            }
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let spec = SchemeSpec::Multicarrier {
        cfgs: cfgs(&[(2, 2), (1, 3)]),
        dist: JointStateDistribution::make_iid(2, rat(1, 2)),
        block_len: 300,
        blocks: 4,
    };
    assert_eq!(spec.run(5).unwrap(), spec.run(5).unwrap());
    assert_ne!(spec.run(5).unwrap().delivered, spec.run(6).unwrap().delivered);
}

#[test]
fn rates_are_delivered_over_slots() {
    let r = run_multicarrier(
        &cfgs(&[(1, 1), (1, 3)]),
        &JointStateDistribution::make_iid(2, rat(1, 2)),
        200,
        3,
        &mut rng(13),
    )
    .unwrap();
    assert_eq!(r.slots, 600);
    for u in 0..2 {
        assert_eq!(r.rates[u], r.delivered[u] as f64 / 600.0);
    }
    assert_eq!(r.failures, 0);
}

#[test]
fn trace_has_one_record_per_slot() {
    let config = EngineConfig::new(cfgs(&[(1, 1), (1, 3)]), 10, 2, SchemeTarget::Symmetric);
    let dist = JointStateDistribution::make_iid(2, rat(1, 2));
    let mut buf = Vec::new();
    simulate(&config, &dist, "trace", 3, Some(&mut buf)).unwrap();
    let lines: Vec<serde_json::Value> = String::from_utf8(buf)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 20);
    for (t, rec) in lines.iter().enumerate() {
        assert_eq!(rec["t"], t as u64);
        assert_eq!(rec["s"].as_str().unwrap().len(), 2);
        assert_eq!(rec["tx"].as_array().unwrap().len(), 2);
        assert_eq!(rec["rx"][0][1].as_array().unwrap().len(), 3);
        assert!(rec["phase"].is_array());
    }
}
