use std::sync::Arc;

use hullswarm::analysis::{
    check_contraction, check_dini_bound, check_g2_sandwich, check_hull_drift, compute_metrics, detect_set_tracking,
    verify_jlc_recursion, verify_siiss_ujlc, verify_siss, MetricSeries, VerdictReport,
};
use hullswarm::certificates::{siiss_envelope_ujlc, siiss_recursion_jlc, siss_envelope, CertificateBundle};
use hullswarm::dynamics::{simulate, Points, SystemSpec, WeightBounds};
use hullswarm::error::Error;
use hullswarm::scenarios::{
    default_counterexample, jlc_params, make_inputs_c1, make_inputs_c2, make_jlc_acyclic, make_jlc_bidirectional,
    make_jlc_broken, make_ujlc, scenario_suite, GenParams, InputModel, Profile, Scenario, ScenarioClass, Shape,
    WeightModel,
};
use hullswarm::topology::{Digraph, SwitchingSchedule};
use proptest::prelude::*;

fn breaks(sc: &Scenario) -> Vec<f64> {
    sc.schedule.boundaries().collect()
}

fn bundle_for(sc: &Scenario) -> CertificateBundle {
    CertificateBundle::new(sc.bounds, sc.n(), sc.schedule.dwell(), sc.window.unwrap()).unwrap()
}

#[test]
fn generic_checks_hold_across_the_suite() {
    let suite = scenario_suite().unwrap();
    assert!(suite.len() >= 20);
    for sc in &suite {
        let run = sc.simulate(None, None).unwrap();
        let m = &run.metrics;
        for i in 0..m.len() {
            let max = m.psi[i].iter().copied().fold(0.0, f64::max);
            assert_eq!(m.psi_max[i], max);
            assert_eq!(m.dist[i], max.sqrt());
            assert!(m.q[i] >= m.r[i] && m.r[i] >= 0.0);
        }
        let g2 = check_g2_sandwich(m, sc.n(), sc.k());
        let dini = check_dini_bound(m, &breaks(sc));
        let drift = check_hull_drift(&run.traj, m, 0.0).unwrap();
        assert!(g2.holds, "{}: {g2:?}", sc.name);
        assert!(dini.holds, "{}: {:?}", sc.name, dini.first_violation_time);
        assert!(drift.holds, "{}: {:?}", sc.name, drift.first_violation_time);
        // drift from a mid-run reference time as well
        let mid = run.traj.times[run.traj.len() / 2];
        assert!(check_hull_drift(&run.traj, m, mid).unwrap().holds);
    }
}

#[test]
fn uniform_scenarios_satisfy_both_envelopes() {
    let mut contraction_runs = 0;
    for sc in scenario_suite().unwrap().iter().filter(|s| s.class == ScenarioClass::Ujlc) {
        let run = sc.simulate(None, None).unwrap();
        let bundle = bundle_for(sc);
        let env = siss_envelope(&bundle).unwrap();
        let siss = verify_siss(&run.metrics, &run.spec, &bundle, &env, run.metrics.z_sup()).unwrap();
        assert!(siss.holds && siss.margin.iter().all(|&m| m >= 0.0), "{}", sc.name);
        let (cont, disc) = verify_siiss_ujlc(&run.metrics, &run.spec, &bundle, &siiss_envelope_ujlc(&bundle).unwrap())
            .unwrap();
        assert!(cont.holds && disc.holds, "{}", sc.name);
        assert!(!disc.margin.is_empty());
        if sc.inputs == InputModel::Zero {
            let (v, ratio) = check_contraction(&run.metrics, &run.spec, &bundle).unwrap();
            assert!(v.holds, "{}", sc.name);
            assert!(ratio <= bundle.eta_star.value());
            contraction_runs += 1;
        } else {
            assert!(matches!(check_contraction(&run.metrics, &run.spec, &bundle), Err(Error::Precondition(_))));
        }
    }
    assert!(contraction_runs >= 5);
}

#[test]
fn counterexample_escapes_every_envelope() {
    let sc = default_counterexample(3, 2, 2).unwrap();
    let run = sc.simulate(None, None).unwrap();
    let m = &run.metrics;
    // distance grows at the drift rate sqrt(d) through each empty window
    let pieces = sc.schedule.pieces();
    let mut ends = Vec::new();
    for (i, p) in pieces.iter().enumerate() {
        if p.graph.arc_count() == 0 {
            let (a, b) = (m.index_at(p.start).unwrap(), m.index_at(sc.schedule.piece_end(i)).unwrap());
            for j in a..b {
                assert!(m.dist[j + 1] > m.dist[j]);
            }
            assert!(m.dist[b] - m.dist[a] >= 0.9 * (m.times[b] - m.times[a]));
            ends.push(m.dist[b]);
        }
    }
    assert!(ends.windows(2).all(|w| w[1] > w[0]));
    let (tracked, _) = detect_set_tracking(m, *ends.last().unwrap() * 0.5);
    assert!(!tracked);
    assert!(!sc.schedule.classify_jlc());
    assert!(sc.schedule.ujlc_witness(sc.horizon()).is_none());
    let b = CertificateBundle::new(sc.bounds, 3, sc.schedule.dwell(), 10.0).unwrap();
    let env = siss_envelope(&b).unwrap();
    assert!(matches!(verify_siss(m, &run.spec, &b, &env, m.z_sup()), Err(Error::Precondition(_))));
    assert!(check_dini_bound(m, &breaks(&sc)).holds);
}

fn jlc_checks(sc: &Scenario, expect_tracking: bool) {
    let run = sc.simulate(None, None).unwrap();
    let (tracked, entry) = detect_set_tracking(&run.metrics, 1e-3);
    assert_eq!(tracked, expect_tracking, "{} entry {entry:?}", sc.name);
    if expect_tracking {
        let marks = sc.schedule.jlc_marks(sc.n());
        assert!(marks.len() >= 2, "{}", sc.name);
        let rec = siiss_recursion_jlc(sc.bounds, sc.n(), sc.schedule.dwell(), &marks).unwrap();
        let v = verify_jlc_recursion(&run.metrics, &run.spec, &rec).unwrap();
        assert!(v.holds, "{}", sc.name);
        assert_eq!(v.margin.len(), marks.len());
    }
}

#[test]
fn jointly_connected_runs_track_and_broken_ones_do_not() {
    for seed in 0..2 {
        let p = jlc_params(seed);
        jlc_checks(&make_jlc_bidirectional(&p).unwrap(), true);
        jlc_checks(&make_jlc_acyclic(&p).unwrap(), true);
        jlc_checks(&make_jlc_broken(&p, false).unwrap(), false);
        jlc_checks(&make_jlc_broken(&p, true).unwrap(), false);
    }
}

#[test]
fn vanishing_inputs_track_under_uniform_connectivity() {
    let p = GenParams {
        n: 3,
        k: 2,
        window: 1.5,
        horizon: Some(600.0),
        inputs: make_inputs_c2(Shape::Rotating, 1.0),
        ..GenParams::default()
    };
    let sc = make_ujlc(&p).unwrap();
    let run = sc.simulate(Some(0.02), None).unwrap();
    let (tracked, entry) = detect_set_tracking(&run.metrics, 0.05);
    assert!(tracked, "final distance {}", run.metrics.dist.last().unwrap());
    assert!(entry.unwrap() < 600.0);
}

#[test]
fn input_integral_matches_closed_form() {
    for inputs in [
        make_inputs_c1(Shape::Uniform, 2.0),
        make_inputs_c2(Shape::Rotating, 1.0),
        InputModel::Shaped {
            profile: Profile::Constant,
            shape: Shape::LeadersOnly,
            scale: 0.5,
        },
    ] {
        let p = GenParams {
            inputs,
            ..GenParams::default()
        };
        let sc = make_ujlc(&p).unwrap();
        let run = sc.simulate(None, None).unwrap();
        let got = *run.metrics.running_integral(&run.metrics.z_norm).last().unwrap();
        let want = inputs.z_integral(sc.k(), sc.d, sc.horizon());
        assert!((got - want).abs() <= 0.01 * want, "{got} vs {want}");
        assert!((run.metrics.z_norm[0] - inputs_scale(inputs)).abs() < 1e-12);
    }
}

fn inputs_scale(m: InputModel) -> f64 {
    match m {
        InputModel::Shaped { scale, .. } => scale,
        _ => 0.0,
    }
}

#[test]
fn q_adds_the_largest_disturbance_to_the_largest_leader_speed() {
    let sched = SwitchingSchedule::constant(Digraph::leader_fanout(1, 2), 1.0, 0.5).unwrap();
    let spec = SystemSpec::new(sched, 2, WeightBounds::default())
        .unwrap()
        .with_leader_input(Arc::new(|l, _, _, out: &mut [f64]| {
            out.fill(0.0);
            out[l] = 1.0;
        }))
        .with_disturbance(Arc::new(|_, _, out: &mut [f64]| {
            out.fill(0.0);
            out[0] = 0.5;
        }));
    let tr = simulate(&spec, &Points::zeros(1, 2), &Points::zeros(2, 2), 0.1, 1.0).unwrap();
    let m = compute_metrics(&tr, &spec).unwrap();
    assert!(m.q.iter().all(|&q| (q - 1.5).abs() < 1e-15));
    assert!(m.z_norm.iter().all(|&z| (z - 1.5).abs() < 1e-15));
    assert!(check_g2_sandwich(&m, 1, 2).holds);
}

#[test]
fn outputs_round_trip_losslessly() {
    let sc = scenario_suite().unwrap().swap_remove(7);
    let text = sc.to_toml();
    let back = Scenario::from_toml(&text).unwrap();
    assert_eq!(back.to_toml(), text);
    let (a, b) = (sc.simulate(None, None).unwrap(), back.simulate(None, None).unwrap());
    assert_eq!(a.traj, b.traj);
    let mut buf = Vec::new();
    a.metrics.write_csv(&mut buf).unwrap();
    assert_eq!(MetricSeries::read_csv(&buf[..]).unwrap(), a.metrics);
    let bundle = bundle_for(&sc);
    let report = VerdictReport {
        verdicts: vec![check_g2_sandwich(&a.metrics, sc.n(), sc.k()).entry()],
        tracking_entry_time: detect_set_tracking(&a.metrics, 1e-3).1,
        contraction_ratio: None,
    };
    assert_eq!(VerdictReport::from_toml(&report.to_toml()).unwrap(), report);
    assert!(bundle.report().to_toml().contains("eta_star"));
}

#[test]
fn generators_are_deterministic() {
    let p = GenParams {
        seed: 9,
        weights: WeightModel::DistanceDependent,
        inputs: make_inputs_c1(Shape::Rotating, 1.0),
        ..GenParams::default()
    };
    assert_eq!(make_ujlc(&p).unwrap().to_toml(), make_ujlc(&p).unwrap().to_toml());
    let q = jlc_params(4);
    assert_eq!(make_jlc_acyclic(&q).unwrap().to_toml(), make_jlc_acyclic(&q).unwrap().to_toml());
    let mut other = p.clone();
    other.seed = 10;
    assert_ne!(make_ujlc(&p).unwrap().to_toml(), make_ujlc(&other).unwrap().to_toml());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn random_uniform_scenarios_respect_rate_and_drift_bounds(
        seed in any::<u64>(),
        n in 2usize..=5,
        k in 1usize..=4,
        d in 1usize..=3,
        which in 0usize..4,
    ) {
        let inputs = [
            InputModel::Zero,
            make_inputs_c1(Shape::Rotating, 2.0),
            make_inputs_c2(Shape::Uniform, 1.0),
            InputModel::Shaped { profile: Profile::Constant, shape: Shape::FollowersOnly, scale: 0.7 },
        ][which];
        let p = GenParams {
            n, k, d, seed,
            window: 0.5 * n as f64,
            weights: if seed % 2 == 0 { WeightModel::DistanceDependent } else { WeightModel::Periodic { period: 1.3 } },
            inputs,
            horizon: Some(12.0),
            ..GenParams::default()
        };
        let sc = make_ujlc(&p).unwrap();
        let run = sc.simulate(None, None).unwrap();
        prop_assert!(check_dini_bound(&run.metrics, &breaks(&sc)).holds);
        prop_assert!(check_hull_drift(&run.traj, &run.metrics, 0.0).unwrap().holds);
        prop_assert!(check_g2_sandwich(&run.metrics, n, k).holds);
    }
}
