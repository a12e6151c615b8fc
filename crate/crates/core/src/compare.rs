//! Executable comparison-principle checks.
//!
//! Two harnesses: an explicit decaying upper solution
//! `w(t,x) = C e^{-alpha t} cos(pi x / (2 sigma(t)))` with expanding support
//! `sigma(t) = h0 (1 + delta - (delta/2) e^{-gamma t})`, valid for
//! `rho <= rho0 = delta gamma h0^2/(C pi)`, which dominates the prey and
//! traps the front below `h0 (1 + delta)`; and the logistic sandwich
//!
//! ```text
//! (lambda - b/m) u - u^2  <=  lambda u - u^2 - b u v/(u+mv)  <=  lambda u - u^2
//! mu v - v^2              <=  mu v - v^2 + c u v/(u+mv)      <=  (mu+c) v - v^2
//! ```
//!
//! whose side problems are logistic runs sharing the coupled run's data.
//! The orderings are unconditional theorems; violations beyond the
//! discretization tolerance fail the check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::pde::{
    self, FrontPath, InitialData, ProfileSnapshot, SolverConfig, Trajectory,
};

/// Lemma-style explicit upper solution for small `rho`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExplicitUpperSolution {
    /// Amplitude chosen as the smallest `C` dominating the initial prey.
    pub amplitude: f64,
    /// Support expansion fraction: `sigma` grows from `h0(1+delta/2)` to `h0(1+delta)`.
    pub delta: f64,
    /// Front relaxation rate (equal to `alpha`).
    pub gamma: f64,
    /// Amplitude decay rate `alpha = ((pi/2)^2 h0^-2 - lambda)/2`.
    pub alpha: f64,
    /// Admissible Stefan bound `rho0 = delta gamma h0^2 / (C pi)`.
    pub rho0: f64,
    pub h0: f64,
}

impl ExplicitUpperSolution {
    /// Support radius at time `t`.
    pub fn sigma(&self, t: f64) -> f64 {
        self.h0 * (1.0 + self.delta - 0.5 * self.delta * (-self.gamma * t).exp())
    }

    /// Upper-solution value at `(t, x)` (zero outside the support).
    pub fn w(&self, t: f64, x: f64) -> f64 {
        let sigma = self.sigma(t);
        if x >= sigma {
            return 0.0;
        }
        self.amplitude
            * (-self.alpha * t).exp()
            * (std::f64::consts::FRAC_PI_2 * x / sigma).cos()
    }

    /// Limit of the support, `h0 (1 + delta)`; vanishing fronts under
    /// `rho <= rho0` never exceed it.
    pub fn sigma_limit(&self) -> f64 {
        self.h0 * (1.0 + self.delta)
    }
}

/// Builds the explicit upper solution for initial data `init`.
///
/// Requires the premise `lambda < (pi/2)^2 h0^-2` (equivalently
/// `h0 < (pi/2) lambda^(-1/2)`). `delta` solves
/// `(pi/2)^2 (1+delta)^-2 h0^-2 - lambda = alpha` and `C` is found by a
/// grid max of `u0(x) / cos(pi x / (2 h0 (1 + delta/2)))`.
pub fn build_lemma_upper(p: &ModelParams, init: &InitialData) -> Result<ExplicitUpperSolution> {
    let h0 = init.h0;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let a = (half_pi / h0) * (half_pi / h0);
    if !(p.lambda < a) {
        return Err(Error::OutOfRegime(format!(
            "upper-solution premise violated: requires h0 < (pi/2) lambda^(-1/2) \
             (h0 = {h0}, bound = {})",
            half_pi / p.lambda.sqrt()
        )));
    }
    let alpha = 0.5 * (a - p.lambda);
    let delta = (2.0 * a / (a + p.lambda)).sqrt() - 1.0;
    let gamma = alpha;

    // smallest dominating amplitude on a fine sample of [0, h0]
    let n = 4096;
    let (u0, _) = init.sample(n);
    let stretched = h0 * (1.0 + 0.5 * delta);
    let mut amplitude = 0.0f64;
    for (j, &u) in u0.iter().enumerate() {
        let x = h0 * j as f64 / (n + 1) as f64;
        let denom = (half_pi * x / stretched).cos();
        amplitude = amplitude.max(u / denom);
    }
    let rho0 = delta * gamma * h0 * h0 / (amplitude * std::f64::consts::PI);
    Ok(ExplicitUpperSolution {
        amplitude,
        delta,
        gamma,
        alpha,
        rho0,
        h0,
    })
}

/// Outcome of one pointwise ordering check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderingReport {
    pub check: String,
    /// Worst signed violation, normalized by the comparison scale
    /// (nonpositive means the ordering held everywhere).
    pub worst_margin: f64,
    /// Location of the worst margin.
    pub t: f64,
    pub x: f64,
    pub pass: bool,
}

impl OrderingReport {
    fn build(check: &str, tol: f64, worst: (f64, f64, f64)) -> Self {
        OrderingReport {
            check: check.to_string(),
            worst_margin: worst.0,
            t: worst.1,
            x: worst.2,
            pass: worst.0 <= tol,
        }
    }

    fn ensure(self) -> Result<Self> {
        if self.pass {
            Ok(self)
        } else {
            Err(Error::PropertyViolation {
                check: self.check,
                margin: self.worst_margin,
                t: self.t,
                x: self.x,
            })
        }
    }
}

/// Default relative ordering tolerance at matched resolution.
pub const DEFAULT_ORDER_TOL: f64 = 1e-3;

fn profile_value(snap: &ProfileSnapshot, prey: bool, x: f64) -> f64 {
    if x > snap.h {
        return 0.0;
    }
    let arr = if prey { &snap.u } else { &snap.v };
    let n = arr.len() - 1;
    let pos = (x / snap.h * n as f64).clamp(0.0, n as f64);
    let j = (pos.floor() as usize).min(n - 1);
    let w = pos - j as f64;
    arr[j] * (1.0 - w) + arr[j + 1] * w
}

/// Verifies `u(t,x) <= w(t,x)` on every snapshot and `h(t) <= sigma(t)` on
/// every recorded step, for a run with `rho <= rho0` and matching data.
pub fn verify_upper_ordering(
    traj: &Trajectory,
    upper: &ExplicitUpperSolution,
    tol: f64,
) -> Result<OrderingReport> {
    if traj.params.rho > upper.rho0 * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "upper ordering requires rho <= rho0 ({} > {})",
            traj.params.rho, upper.rho0
        )));
    }
    if let Some(e) = &traj.error {
        return Err(Error::RunFailed(e.clone()));
    }
    let scale = upper.amplitude;
    let mut worst = (f64::NEG_INFINITY, 0.0, 0.0);
    for snap in &traj.snapshots {
        let n = snap.u.len() - 1;
        for j in 0..=n {
            let x = snap.h * j as f64 / n as f64;
            let margin = (snap.u[j] - upper.w(snap.t, x)) / scale;
            if margin > worst.0 {
                worst = (margin, snap.t, x);
            }
        }
    }
    for (i, &t) in traj.times.iter().enumerate() {
        let margin = (traj.fronts[i] - upper.sigma(t)) / upper.sigma_limit();
        if margin > worst.0 {
            worst = (margin, t, traj.fronts[i]);
        }
    }
    OrderingReport::build("prey below explicit upper solution", tol, worst).ensure()
}

/// All pointwise orderings of one sandwich verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SandwichReport {
    pub tol: f64,
    pub checks: Vec<OrderingReport>,
}

impl SandwichReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Largest positive violation over all checks (0 when none).
    pub fn worst_violation(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.worst_margin.max(0.0))
            .fold(0.0, f64::max)
    }
}

fn ensure_clean(traj: Trajectory) -> Result<Trajectory> {
    match &traj.error {
        Some(e) => Err(Error::RunFailed(e.clone())),
        None => Ok(traj),
    }
}

/// Runs the coupled system plus four logistic bounds and checks the
/// pointwise sandwiches.
///
/// The prey bounds are free-boundary logistic runs (rates `lambda - b/m`
/// and `lambda`) with the coupled run's `rho` and initial prey; their
/// fronts must bracket the coupled front. The predator bounds (rates `mu`
/// and `mu + c`, diffusivity `d`) run on the coupled run's own recorded
/// front path, imposed as a prescribed moving Dirichlet boundary, because
/// the predator inequalities compare reaction terms at identical `(t, x)`.
pub fn verify_logistic_sandwich(
    p: &ModelParams,
    init: &InitialData,
    cfg: &SolverConfig,
    tol: f64,
) -> Result<SandwichReport> {
    if !p.prey_survives() {
        return Err(Error::OutOfRegime(format!(
            "sandwich requires m*lambda > b (m*lambda = {}, b = {})",
            p.m * p.lambda,
            p.b
        )));
    }
    let coupled = ensure_clean(pde::simulate(p, init, cfg)?)?;
    let u_lower = ensure_clean(pde::simulate_logistic(p.depressed_rate(), p.rho, init, cfg)?)?;
    let u_upper = ensure_clean(pde::simulate_logistic(p.lambda, p.rho, init, cfg)?)?;
    let path = FrontPath::of(&coupled);
    let v_lower = ensure_clean(pde::simulate_logistic_prescribed(
        p.mu, p.d, p.rho, &path, init, cfg,
    )?)?;
    let v_upper = ensure_clean(pde::simulate_logistic_prescribed(
        p.mu + p.c,
        p.d,
        p.rho,
        &path,
        init,
        cfg,
    )?)?;

    let u_scale = coupled
        .k_observed()
        .max(u_upper.k_observed())
        .max(u_lower.k_observed());
    let v_scale = coupled
        .k_observed()
        .max(v_upper.k_observed())
        .max(v_lower.k_observed());
    let h_scale = u_upper.h_end();

    // prey profiles live on different domains: compare on a fine common
    // x grid per matched snapshot, extending every profile by zero
    let matched = |a: &Trajectory, b: &Trajectory| -> Result<Vec<(usize, usize)>> {
        let mut pairs = Vec::new();
        let mut j = 0;
        for (i, sa) in a.snapshots.iter().enumerate() {
            while j < b.snapshots.len() && b.snapshots[j].t < sa.t {
                j += 1;
            }
            if j < b.snapshots.len() && b.snapshots[j].t == sa.t {
                pairs.push((i, j));
            }
        }
        if pairs.len() < 2 {
            return Err(Error::InvalidParameter(
                "runs share too few matched snapshot times".into(),
            ));
        }
        Ok(pairs)
    };

    let compare_profiles = |low: &Trajectory,
                            high: &Trajectory,
                            prey: bool,
                            scale: f64|
     -> Result<(f64, f64, f64)> {
        let pairs = matched(low, high)?;
        let mut worst = (f64::NEG_INFINITY, 0.0, 0.0);
        let samples = 2048;
        for (i, j) in pairs {
            let (sl, sh) = (&low.snapshots[i], &high.snapshots[j]);
            let span = sl.h.max(sh.h);
            for k in 0..=samples {
                let x = span * k as f64 / samples as f64;
                let margin =
                    (profile_value(sl, prey, x) - profile_value(sh, prey, x)) / scale;
                if margin > worst.0 {
                    worst = (margin, sl.t, x);
                }
            }
        }
        Ok(worst)
    };

    let compare_fronts = |low: &Trajectory, high: &Trajectory| -> Result<(f64, f64, f64)> {
        let pairs = matched(low, high)?;
        let mut worst = (f64::NEG_INFINITY, 0.0, 0.0);
        for (i, j) in pairs {
            let (sl, sh) = (&low.snapshots[i], &high.snapshots[j]);
            let margin = (sl.h - sh.h) / h_scale;
            if margin > worst.0 {
                worst = (margin, sl.t, sl.h);
            }
        }
        Ok(worst)
    };

    let checks = vec![
        OrderingReport::build(
            "prey above depressed logistic",
            tol,
            compare_profiles(&u_lower, &coupled, true, u_scale)?,
        ),
        OrderingReport::build(
            "prey below free logistic",
            tol,
            compare_profiles(&coupled, &u_upper, true, u_scale)?,
        ),
        OrderingReport::build(
            "front above depressed-logistic front",
            tol,
            compare_fronts(&u_lower, &coupled)?,
        ),
        OrderingReport::build(
            "front below free-logistic front",
            tol,
            compare_fronts(&coupled, &u_upper)?,
        ),
        OrderingReport::build(
            "predator above mu-logistic",
            tol,
            compare_profiles(&v_lower, &coupled, false, v_scale)?,
        ),
        OrderingReport::build(
            "predator below (mu+c)-logistic",
            tol,
            compare_profiles(&coupled, &v_upper, false, v_scale)?,
        ),
    ];
    let report = SandwichReport {
        tol,
        checks,
    };
    if let Some(bad) = report.checks.iter().find(|c| !c.pass) {
        return Err(Error::PropertyViolation {
            check: bad.check.clone(),
            margin: bad.worst_margin,
            t: bad.t,
            x: bad.x,
        });
    }
    Ok(report)
}
