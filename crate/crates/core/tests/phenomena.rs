//! Moving-observer phenomenology and cross-run audits that span several
//! modules.

use freefront_core::classify::{self, ClassifyRules, Verdict};
use freefront_core::model::{self, ModelParams};
use freefront_core::pde::{self, InitialData, SolverConfig, TimeStep};

/// In the prey-faster regime there is a window of observer speeds
/// (between the predator's upper speed scale c4 and the prey's) where only
/// the prey is visible: the predator series collapses while the prey stays
/// bounded below.
#[test]
fn observer_window_sees_only_the_prey() {
    // d(mu + c) = 0.1 <= lambda - b/m = 2.75, so the window exists
    let p = ModelParams::new(3.0, 0.3, 0.5, 0.2, 0.2, 2.0, 50.0).unwrap();
    assert!(p.prey_faster());
    let sc = model::speed_constants(&p, 1.0).unwrap();
    let c5 = sc.c5.unwrap();
    assert!(sc.c4 < c5, "window (c4, c5) must exist: {} vs {c5}", sc.c4);

    // h0 above the barrier makes the run spread for any rho
    let barrier = model::spreading_barrier(&p).unwrap().lambda_barrier;
    let init = InitialData::cosine(1.0, 0.3, 0.3).unwrap();
    assert!(init.h0 > barrier);
    let cfg = SolverConfig::new(300, TimeStep::Auto { cap: None }, 12.0).with_snapshots(1.0);
    let traj = pde::simulate(&p, &init, &cfg).unwrap();
    assert!(traj.error.is_none(), "{:?}", traj.error);

    let k = 1.5; // inside (c4, c5) = (0.316.., 3.3..) and behind the front
    assert!(sc.c4 < k && k < c5);
    let series = classify::moving_frame_sample(&traj, k).unwrap();
    let t_end = traj.t_end();
    let mut checked = 0;
    for &(t, u, v) in &series {
        if t >= 0.75 * t_end {
            checked += 1;
            assert!(v <= 1e-3, "predator visible at t = {t}: v = {v}");
            assert!(u >= 1.0, "prey collapsed at t = {t}: u = {u}");
        }
    }
    assert!(checked >= 3, "need snapshots in the final quarter");
}

/// Dichotomy audit over a small (h0, rho) grid: no vanishing verdict ever
/// records a front beyond Lambda*(1 + margin), and fronts above Lambda
/// spread for every rho.
#[test]
fn sweep_grid_respects_the_barrier() {
    let base = ModelParams::new(2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    let rules_probe = ClassifyRules::defaults(&base, 60.0).unwrap();
    let barrier = rules_probe.lambda_barrier;
    let cfg = SolverConfig::new(80, TimeStep::Auto { cap: None }, 60.0);
    for &h0 in &[0.4, 0.8, 1.05 * barrier] {
        for &rho in &[1e-3, 1.0, 100.0] {
            let p = ModelParams { rho, ..base };
            let init = InitialData::cosine(h0, 0.1, 0.1).unwrap();
            let rules = ClassifyRules::defaults(&p, cfg.t_max).unwrap();
            let (traj, outcome) = classify::run_classified(&p, &init, &cfg, &rules).unwrap();
            match outcome.verdict {
                Verdict::Vanishing => {
                    let h_inf = outcome.h_inf_estimate.unwrap();
                    assert!(
                        h_inf <= barrier * (1.0 + rules.margin_lambda),
                        "vanishing run exceeded the barrier: h_inf = {h_inf} at h0 = {h0}, rho = {rho}"
                    );
                }
                Verdict::Spreading => {
                    assert!(traj.h_end() >= barrier * (1.0 + rules.margin_lambda) || traj.fronts[0] >= barrier);
                }
                Verdict::Undetermined => {
                    panic!("undetermined at h0 = {h0}, rho = {rho}: {}", outcome.evidence.rule)
                }
            }
            if h0 >= barrier {
                assert_eq!(outcome.verdict, Verdict::Spreading, "h0 above Lambda must spread");
            }
        }
    }
}

/// The measured front speed of a spreading run stays inside its own
/// semi-wave bracket (checked at a moderate rho distinct from the
/// acceptance configuration).
#[test]
fn measured_speed_within_semiwave_bracket() {
    let p = ModelParams::new(1.5, 1.0, 1.0, 1.0, 1.0, 1.0, 10.0).unwrap();
    let init = InitialData::cosine(2.3, 0.5, 0.5).unwrap();
    let cfg = SolverConfig::new(300, TimeStep::Auto { cap: None }, 40.0);
    let traj = pde::simulate(&p, &init, &cfg).unwrap();
    assert!(traj.error.is_none());
    let speed = classify::estimate_speed(&traj, 0.25).unwrap();
    let (lo, hi) = freefront_core::semiwave::speed_bracket(&p).unwrap();
    assert!(
        speed >= lo * 0.98 && speed <= hi * 1.02,
        "speed {speed} outside [{lo}, {hi}]"
    );
}
