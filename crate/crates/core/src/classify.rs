//! Turns trajectories into spreading/vanishing verdicts, locates critical
//! parameters by bisection, estimates asymptotic front speeds, and samples
//! profiles along moving observers.
//!
//! The dichotomy makes a barrier crossing conclusive: a front that exceeds
//! `Lambda = (pi/2) sqrt(m/(m lambda - b))` never stops, while a bounded
//! front stays below `Lambda` and the prey collapses. The vanishing rule
//! demands both a stalled front and a collapsed prey for a sustained
//! window, which avoids misclassifying slow transients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, ModelParams};
use crate::pde::{self, InitialData, SimulationState, SolverConfig, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Spreading,
    Vanishing,
    Undetermined,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Spreading => write!(f, "spreading"),
            Verdict::Vanishing => write!(f, "vanishing"),
            Verdict::Undetermined => write!(f, "undetermined"),
        }
    }
}

/// Which rule fired and when.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Evidence {
    pub rule: String,
    pub t: f64,
}

/// Verdict plus the quantities the verdict licenses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Outcome {
    pub verdict: Verdict,
    /// Final front position (vanishing verdicts only).
    pub h_inf_estimate: Option<f64>,
    /// `max(|u(t,0) - u*|, |v(t,0) - v*|)` at the end of a spreading run in
    /// the coexist regime.
    pub equilibrium_error: Option<f64>,
    /// Least-squares front slope (spreading verdicts with enough data).
    pub speed_estimate: Option<f64>,
    pub evidence: Evidence,
}

/// Classification tolerances. Defaults follow the barrier scale.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassifyRules {
    /// Spreading barrier `Lambda` for the parameter set.
    pub lambda_barrier: f64,
    /// Relative margin above `Lambda` that triggers the spreading verdict
    /// (absorbs discretization drift near the ambiguous case `h_inf = Lambda`).
    pub margin_lambda: f64,
    /// Front-speed stall threshold.
    pub tol_h: f64,
    /// Collapsed-prey threshold.
    pub tol_u: f64,
    /// How long both vanishing conditions must hold, in time units.
    pub sustain_time: f64,
    /// Fraction of the run used by the speed estimator.
    pub window_fraction: f64,
}

impl ClassifyRules {
    /// Defaults: 5% barrier margin, `tol_h = 1e-6 Lambda / t_max`,
    /// `tol_u = 1e-4 lambda`, sustained window 5% of `t_max`, speed window
    /// the last quarter.
    pub fn defaults(p: &ModelParams, t_max: f64) -> Result<Self> {
        let barrier = model::spreading_barrier(p)?;
        Ok(Self {
            lambda_barrier: barrier.lambda_barrier,
            margin_lambda: 0.05,
            tol_h: 1e-6 * barrier.lambda_barrier / t_max,
            tol_u: 1e-4 * p.lambda,
            sustain_time: 0.05 * t_max,
            window_fraction: 0.25,
        })
    }

    fn spreading_threshold(&self) -> f64 {
        self.lambda_barrier * (1.0 + self.margin_lambda)
    }
}

/// Incremental verdict detector fed one record at a time; shared by the
/// post-hoc classifier and the early-stopping simulation driver so both
/// produce identical verdicts.
struct VerdictTracker {
    rules: ClassifyRules,
    window_start: Option<f64>,
    fired: Option<(Verdict, Evidence)>,
}

impl VerdictTracker {
    fn new(rules: ClassifyRules) -> Self {
        Self {
            rules,
            window_start: None,
            fired: None,
        }
    }

    fn feed(&mut self, t: f64, h: f64, h_prime: f64, sup_u: f64) -> bool {
        if self.fired.is_some() {
            return true;
        }
        if h >= self.rules.spreading_threshold() {
            self.fired = Some((
                Verdict::Spreading,
                Evidence {
                    rule: format!(
                        "front crossed Lambda*(1+{}) = {}",
                        self.rules.margin_lambda,
                        self.rules.spreading_threshold()
                    ),
                    t,
                },
            ));
            return true;
        }
        if h_prime < self.rules.tol_h && sup_u < self.rules.tol_u {
            let start = *self.window_start.get_or_insert(t);
            if t - start >= self.rules.sustain_time {
                self.fired = Some((
                    Verdict::Vanishing,
                    Evidence {
                        rule: format!(
                            "front stalled (h' < {:.3e}) and prey collapsed (sup u < {:.3e}) since t = {start}",
                            self.rules.tol_h, self.rules.tol_u
                        ),
                        t,
                    },
                ));
                return true;
            }
        } else {
            self.window_start = None;
        }
        false
    }
}

/// Classifies a completed (or early-stopped) trajectory.
///
/// `Undetermined` is a value, not an error: it reports the closest rule so
/// borderline runs near `h_inf = Lambda` are surfaced rather than guessed.
pub fn classify_run(traj: &Trajectory, p: &ModelParams, rules: &ClassifyRules) -> Outcome {
    let mut tracker = VerdictTracker::new(*rules);
    for i in 0..traj.times.len() {
        if tracker.feed(
            traj.times[i],
            traj.fronts[i],
            traj.front_speeds[i],
            traj.sup_u[i],
        ) {
            break;
        }
    }
    match tracker.fired {
        Some((Verdict::Spreading, evidence)) => {
            let speed_estimate = estimate_speed(traj, rules.window_fraction).ok();
            let equilibrium_error = if p.coexist_regime() {
                model::equilibrium_closed_form(p).ok().and_then(|eq| {
                    traj.snapshots.last().map(|snap| {
                        (snap.u[0] - eq.u_star)
                            .abs()
                            .max((snap.v[0] - eq.v_star).abs())
                    })
                })
            } else {
                None
            };
            Outcome {
                verdict: Verdict::Spreading,
                h_inf_estimate: None,
                equilibrium_error,
                speed_estimate,
                evidence,
            }
        }
        Some((Verdict::Vanishing, evidence)) => Outcome {
            verdict: Verdict::Vanishing,
            h_inf_estimate: Some(traj.h_end()),
            equilibrium_error: None,
            speed_estimate: None,
            evidence,
        },
        _ => {
            let rule = match &traj.error {
                Some(e) => format!("run failed: {e}"),
                None => format!(
                    "no rule fired by t = {}: h_end/Lambda = {:.4}, final sup u = {:.3e}, final h' = {:.3e}",
                    traj.t_end(),
                    traj.h_end() / rules.lambda_barrier,
                    traj.sup_u.last().unwrap(),
                    traj.front_speeds.last().unwrap()
                ),
            };
            Outcome {
                verdict: Verdict::Undetermined,
                h_inf_estimate: None,
                equilibrium_error: None,
                speed_estimate: None,
                evidence: Evidence {
                    rule,
                    t: traj.t_end(),
                },
            }
        }
    }
}

/// Simulates with the verdict rules installed as an early-stop callback and
/// classifies the result.
pub fn run_classified(
    p: &ModelParams,
    init: &InitialData,
    cfg: &SolverConfig,
    rules: &ClassifyRules,
) -> Result<(Trajectory, Outcome)> {
    let mut tracker = VerdictTracker::new(*rules);
    let traj = pde::simulate_until(p, init, cfg, |state: &SimulationState| {
        tracker.feed(state.t, state.h, state.h_prime, state.sup_u())
    })?;
    let outcome = classify_run(&traj, p, rules);
    Ok((traj, outcome))
}

/// Least-squares slope of `h` versus `t` over the trailing
/// `window_fraction` of the run.
pub fn estimate_speed(traj: &Trajectory, window_fraction: f64) -> Result<f64> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "window fraction must lie in (0, 1], got {window_fraction}"
        )));
    }
    let t_end = traj.t_end();
    let t_start = traj.times[0];
    let cut = t_end - window_fraction * (t_end - t_start);
    let mut ts = Vec::new();
    let mut hs = Vec::new();
    for i in 0..traj.times.len() {
        if traj.times[i] >= cut {
            ts.push(traj.times[i]);
            hs.push(traj.fronts[i]);
        }
    }
    if ts.len() < 8 || ts.last().unwrap() - ts[0] <= 0.0 {
        return Err(Error::EstimateUnavailable(format!(
            "only {} records in the trailing window",
            ts.len()
        )));
    }
    let n = ts.len() as f64;
    let t_mean = ts.iter().sum::<f64>() / n;
    let h_mean = hs.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, h) in ts.iter().zip(&hs) {
        num += (t - t_mean) * (h - h_mean);
        den += (t - t_mean) * (t - t_mean);
    }
    Ok(num / den)
}

/// Profile values seen by an observer moving at speed `k`: one
/// `(t, u(t, kt), v(t, kt))` tuple per snapshot, zero beyond the front.
pub fn moving_frame_sample(traj: &Trajectory, k: f64) -> Result<Vec<(f64, f64, f64)>> {
    if k < 0.0 {
        return Err(Error::Domain(format!("observer speed must be >= 0, got {k}")));
    }
    Ok(traj
        .snapshots
        .iter()
        .map(|snap| {
            let x = k * snap.t;
            if x > snap.h {
                return (snap.t, 0.0, 0.0);
            }
            let n = snap.u.len() - 1;
            let pos = x / snap.h * n as f64;
            let j = (pos.floor() as usize).min(n - 1);
            let w = pos - j as f64;
            let u = snap.u[j] * (1.0 - w) + snap.u[j + 1] * w;
            let v = snap.v[j] * (1.0 - w) + snap.v[j + 1] * w;
            (snap.t, u, v)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    RhoCritical,
    H0Band,
}

/// One evaluated bisection run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluatedRun {
    pub rho: f64,
    pub verdict: Verdict,
    pub h_end: f64,
    pub t_end: f64,
}

/// Bracket produced by [`find_rho_critical`] (or a sweep-derived h0 band).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub kind: ThresholdKind,
    pub lower: f64,
    pub upper: f64,
    pub runs: Vec<EvaluatedRun>,
    /// True when bisection stopped early on an undetermined midpoint.
    pub halted_undetermined: bool,
}

impl ThresholdEstimate {
    /// A spreading verdict below a vanishing verdict among the evaluated
    /// runs. Verdict monotonicity in `rho` is an empirical hypothesis, not
    /// a theorem, so observations are reported rather than suppressed.
    pub fn non_monotone(&self) -> bool {
        self.runs.iter().any(|a| {
            a.verdict == Verdict::Spreading
                && self
                    .runs
                    .iter()
                    .any(|b| b.verdict == Verdict::Vanishing && b.rho > a.rho)
        })
    }
}

/// Bisects (geometrically) on `rho` between a vanishing run at `rho_lo`
/// and a spreading run at `rho_hi`.
///
/// Endpoint verdicts are verified first; `BracketError` names the failing
/// endpoint. An undetermined midpoint halts refinement early with the
/// bracket so far (recorded in `halted_undetermined`).
pub fn find_rho_critical(
    p: &ModelParams,
    init: &InitialData,
    cfg: &SolverConfig,
    bracket: (f64, f64),
    n_bisect: usize,
) -> Result<ThresholdEstimate> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::BracketError(format!(
            "need 0 < rho_lo < rho_hi, got ({lo}, {hi})"
        )));
    }
    let evaluate = |rho: f64, runs: &mut Vec<EvaluatedRun>| -> Result<Verdict> {
        let pr = ModelParams { rho, ..*p };
        let rules = ClassifyRules::defaults(&pr, cfg.t_max)?;
        let (traj, outcome) = run_classified(&pr, init, cfg, &rules)?;
        runs.push(EvaluatedRun {
            rho,
            verdict: outcome.verdict,
            h_end: traj.h_end(),
            t_end: traj.t_end(),
        });
        Ok(outcome.verdict)
    };

    let mut runs = Vec::new();
    let v_lo = evaluate(lo, &mut runs)?;
    if v_lo != Verdict::Vanishing {
        return Err(Error::BracketError(format!(
            "expected vanishing at rho_lo = {lo}, got {v_lo}"
        )));
    }
    let v_hi = evaluate(hi, &mut runs)?;
    if v_hi != Verdict::Spreading {
        return Err(Error::BracketError(format!(
            "expected spreading at rho_hi = {hi}, got {v_hi}"
        )));
    }

    let mut halted = false;
    for _ in 0..n_bisect {
        let mid = (lo * hi).sqrt();
        match evaluate(mid, &mut runs)? {
            Verdict::Vanishing => lo = mid,
            Verdict::Spreading => hi = mid,
            Verdict::Undetermined => {
                halted = true;
                break;
            }
        }
    }
    Ok(ThresholdEstimate {
        kind: ThresholdKind::RhoCritical,
        lower: lo,
        upper: hi,
        runs,
        halted_undetermined: halted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::TimeStep;

    fn desk_params(rho: f64) -> ModelParams {
        ModelParams::new(2.0, 1.0, 1.0, 1.0, 1.0, 1.0, rho).unwrap()
    }

    #[test]
    fn initial_crossing_classifies_spreading_at_t0() {
        let p = desk_params(0.5);
        let rules = ClassifyRules::defaults(&p, 10.0).unwrap();
        let h0 = 1.05 * rules.lambda_barrier;
        let init = InitialData::cosine(h0, 0.1, 0.1).unwrap();
        let cfg = SolverConfig::new(64, TimeStep::Auto { cap: None }, 10.0);
        let (traj, outcome) = run_classified(&p, &init, &cfg, &rules).unwrap();
        assert_eq!(outcome.verdict, Verdict::Spreading);
        assert_eq!(outcome.evidence.t, 0.0);
        assert_eq!(traj.times.len(), 1, "stopped before stepping");
    }

    #[test]
    fn small_rho_small_habitat_vanishes() {
        let p = desk_params(1e-3);
        let rules = ClassifyRules::defaults(&p, 60.0).unwrap();
        let init = InitialData::cosine(0.5, 0.1, 0.1).unwrap();
        let cfg = SolverConfig::new(100, TimeStep::Auto { cap: None }, 60.0);
        let (traj, outcome) = run_classified(&p, &init, &cfg, &rules).unwrap();
        assert_eq!(outcome.verdict, Verdict::Vanishing);
        let h_inf = outcome.h_inf_estimate.unwrap();
        assert!(h_inf <= rules.lambda_barrier * 1.02, "h_inf = {h_inf}");
        assert!(traj.t_end() < 60.0, "early stop expected");
    }

    #[test]
    fn large_rho_spreads_from_the_same_data() {
        let p = desk_params(1e3);
        let rules = ClassifyRules::defaults(&p, 60.0).unwrap();
        let init = InitialData::cosine(0.5, 0.1, 0.1).unwrap();
        let cfg = SolverConfig::new(100, TimeStep::Auto { cap: None }, 60.0);
        let (_, outcome) = run_classified(&p, &init, &cfg, &rules).unwrap();
        assert_eq!(outcome.verdict, Verdict::Spreading);
    }

    #[test]
    fn speed_estimate_needs_enough_data() {
        let p = desk_params(1.0);
        let init = InitialData::cosine(1.0, 0.5, 0.5).unwrap();
        let cfg = SolverConfig::new(64, TimeStep::Auto { cap: None }, 2.0);
        let traj = pde::simulate(&p, &init, &cfg).unwrap();
        assert!(estimate_speed(&traj, 0.25).is_ok());
        assert!(estimate_speed(&traj, 0.0).is_err());
        let stub = Trajectory {
            times: vec![0.0, 1.0],
            fronts: vec![1.0, 1.1],
            front_speeds: vec![0.1, 0.1],
            front_gradients: vec![-0.1, -0.1],
            sup_u: vec![1.0, 1.0],
            sup_v: vec![1.0, 1.0],
            ..traj
        };
        assert!(matches!(
            estimate_speed(&stub, 0.9),
            Err(Error::EstimateUnavailable(_))
        ));
    }

    #[test]
    fn moving_frame_zero_speed_tracks_left_boundary() {
        let p = desk_params(1.0);
        let init = InitialData::cosine(1.0, 0.5, 0.5).unwrap();
        let cfg = SolverConfig::new(64, TimeStep::Auto { cap: None }, 1.0).with_snapshots(0.25);
        let traj = pde::simulate(&p, &init, &cfg).unwrap();
        let series = moving_frame_sample(&traj, 0.0).unwrap();
        assert_eq!(series.len(), traj.snapshots.len());
        for (s, snap) in series.iter().zip(&traj.snapshots) {
            assert_eq!(s.1, snap.u[0]);
            assert_eq!(s.2, snap.v[0]);
        }
        assert!(moving_frame_sample(&traj, -1.0).is_err());
    }

    #[test]
    fn moving_frame_ahead_of_front_is_zero() {
        let p = desk_params(1.0);
        let init = InitialData::cosine(1.0, 0.5, 0.5).unwrap();
        let cfg = SolverConfig::new(64, TimeStep::Auto { cap: None }, 4.0).with_snapshots(0.5);
        let traj = pde::simulate(&p, &init, &cfg).unwrap();
        // faster than any front: h(t) <= h0 + rho*K*t stays behind x = 100 t
        let series = moving_frame_sample(&traj, 100.0).unwrap();
        for &(t, u, v) in &series {
            if t > 0.1 {
                assert_eq!((u, v), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn rho_bisection_brackets_the_critical_value() {
        let p = desk_params(1.0);
        let init = InitialData::cosine(0.5, 0.1, 0.1).unwrap();
        let cfg = SolverConfig::new(80, TimeStep::Auto { cap: None }, 60.0);
        let est = find_rho_critical(&p, &init, &cfg, (1e-3, 1e3), 6).unwrap();
        assert!(est.lower < est.upper);
        assert!(est.lower > 1e-3 && est.upper < 1e3, "bracket tightened");
        assert!(!est.non_monotone());
        assert!(!est.halted_undetermined);
        assert_eq!(est.kind, ThresholdKind::RhoCritical);
        // endpoint verdicts recorded
        assert_eq!(est.runs[0].verdict, Verdict::Vanishing);
        assert_eq!(est.runs[1].verdict, Verdict::Spreading);
    }

    #[test]
    fn bracket_error_when_habitat_exceeds_barrier() {
        let p = desk_params(1.0);
        let rules = ClassifyRules::defaults(&p, 10.0).unwrap();
        let init = InitialData::cosine(rules.lambda_barrier * 1.1, 0.1, 0.1).unwrap();
        let cfg = SolverConfig::new(64, TimeStep::Auto { cap: None }, 10.0);
        let err = find_rho_critical(&p, &init, &cfg, (1e-3, 1e3), 4).unwrap_err();
        assert!(matches!(err, Error::BracketError(_)), "{err}");
    }
}
