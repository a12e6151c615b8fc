//! Front-fixed finite-difference integration of the coupled system on the
//! moving domain `[0, h(t)]`.
//!
//! The change of variable `xi = x/h(t)` maps the domain to `[0, 1]`. With
//! `U(t, xi) = u(t, xi h(t))` the prey equation becomes
//!
//! ```text
//! U_t = U_xixi / h^2 + xi (h'/h) U_xi + lambda U - U^2 - b U V/(U + m V)
//! ```
//!
//! (likewise for `V` with diffusivity `d` and reaction
//! `mu V - V^2 + c U V/(U + m V)`), and the Stefan condition becomes the
//! boundary evaluation `h' = -rho U_xi(t, 1) / h`.
//!
//! Scheme: the front speed is computed from a one-sided second-order
//! three-point difference at `xi = 1`, `h` advances by forward Euler,
//! diffusion is treated implicitly (backward Euler, Thomas solve per
//! species) and advection + reaction explicitly at the old state. The
//! left boundary row encodes `U_xi(t, 0) = 0` by ghost reflection and the
//! right value is pinned to `U(t, 1) = 0`.

pub(crate) mod tridiag;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Fraction of the fastest reaction time scale allowed per auto step.
const REACT_FRACTION: f64 = 0.02;
/// Advective CFL safety factor for auto steps.
const ADV_CFL: f64 = 0.4;
/// Fraction of grid-steps that may be clamped before the run is failed.
const CLAMP_BUDGET: f64 = 1e-3;

/// Initial profiles on `[0, h0]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ProfileSpec {
    /// The canonical compatible family `amp * cos(pi x / (2 h0))`.
    Cosine { amp_u: f64, amp_v: f64 },
    /// Uniformly sampled values on `[0, h0]`; resampled onto the solver grid
    /// by monotone cubic interpolation with endpoints forced exactly.
    Samples { u0: Vec<f64>, v0: Vec<f64> },
}

/// Initial front position and species profiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialData {
    pub h0: f64,
    pub profile: ProfileSpec,
}

impl InitialData {
    /// Cosine bumps `amp cos(pi x/(2 h0))`: positive on `[0, h0)`, zero at
    /// `h0`, flat at 0 — the compatibility conditions hold exactly.
    pub fn cosine(h0: f64, amp_u: f64, amp_v: f64) -> Result<Self> {
        if !(h0 > 0.0) {
            return Err(Error::InvalidParameter(format!("h0 must be positive, got {h0}")));
        }
        if !(amp_u > 0.0) || !(amp_v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cosine amplitudes must be positive, got ({amp_u}, {amp_v})"
            )));
        }
        Ok(Self {
            h0,
            profile: ProfileSpec::Cosine { amp_u, amp_v },
        })
    }

    /// Sampled profiles on a uniform grid over `[0, h0]`. The last sample
    /// must be (numerically) zero and interior samples strictly positive.
    pub fn from_samples(h0: f64, u0: Vec<f64>, v0: Vec<f64>) -> Result<Self> {
        if !(h0 > 0.0) {
            return Err(Error::InvalidParameter(format!("h0 must be positive, got {h0}")));
        }
        if u0.len() != v0.len() || u0.len() < 4 {
            return Err(Error::InvalidParameter(format!(
                "sampled profiles need equal lengths >= 4, got {} and {}",
                u0.len(),
                v0.len()
            )));
        }
        for (name, arr) in [("u0", &u0), ("v0", &v0)] {
            let last = *arr.last().unwrap();
            if last.abs() > 1e-8 * arr.iter().fold(0.0f64, |a, x| a.max(x.abs())) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must vanish at h0 (got {last})"
                )));
            }
            if arr[..arr.len() - 1].iter().any(|&x| !(x > 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be strictly positive on [0, h0)"
                )));
            }
        }
        Ok(Self {
            h0,
            profile: ProfileSpec::Samples { u0, v0 },
        })
    }

    /// Samples both species on the solver grid `xi_j = j/(n_grid+1)`.
    pub fn sample(&self, n_grid: usize) -> (Vec<f64>, Vec<f64>) {
        let n = n_grid + 1;
        match &self.profile {
            ProfileSpec::Cosine { amp_u, amp_v } => {
                let one = |amp: f64| -> Vec<f64> {
                    let mut out: Vec<f64> = (0..=n)
                        .map(|j| {
                            amp * (std::f64::consts::FRAC_PI_2 * j as f64 / n as f64).cos()
                        })
                        .collect();
                    out[n] = 0.0;
                    out
                };
                (one(*amp_u), one(*amp_v))
            }
            ProfileSpec::Samples { u0, v0 } => {
                let resample = |src: &[f64]| -> Vec<f64> {
                    let mut out: Vec<f64> = (0..=n)
                        .map(|j| pchip_uniform(src, j as f64 / n as f64).max(0.0))
                        .collect();
                    out[0] = src[0];
                    out[n] = 0.0;
                    out
                };
                (resample(u0), resample(v0))
            }
        }
    }
}

/// Monotone cubic (Fritsch-Carlson) interpolation of uniformly spaced
/// samples at relative position `s` in `[0, 1]`. The left endpoint
/// derivative is forced to zero (compatibility `u0'(0) = 0`).
fn pchip_uniform(y: &[f64], s: f64) -> f64 {
    let n = y.len() - 1;
    let pos = s * n as f64;
    let i = (pos.floor() as usize).min(n - 1);
    let t = pos - i as f64;
    let delta = |k: usize| (y[k + 1] - y[k]) * n as f64;
    let deriv = |k: usize| -> f64 {
        if k == 0 {
            return 0.0; // forced compatibility
        }
        if k == n {
            return delta(n - 1);
        }
        let (d0, d1) = (delta(k - 1), delta(k));
        if d0 * d1 <= 0.0 {
            0.0
        } else {
            2.0 * d0 * d1 / (d0 + d1) // harmonic mean (uniform spacing)
        }
    };
    let (y0, y1) = (y[i], y[i + 1]);
    let (m0, m1) = (deriv(i) / n as f64, deriv(i + 1) / n as f64);
    let t2 = t * t;
    let t3 = t2 * t;
    y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + m0 * (t3 - 2.0 * t2 + t)
        + y1 * (-2.0 * t3 + 3.0 * t2)
        + m1 * (t3 - t2)
}

/// Time-step selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeStep {
    /// Constant step (caller is responsible for CFL headroom).
    Fixed(f64),
    /// `dt = min(0.02/rate_scale, 0.4 dxi h / h', cap)`, clamped to land
    /// exactly on snapshot times and the horizon.
    Auto { cap: Option<f64> },
}

/// Discretization and recording settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Interior grid points on `xi` in `(0, 1)`; at least 16.
    pub n_grid: usize,
    pub time_step: TimeStep,
    /// Simulation horizon.
    pub t_max: f64,
    /// Time between full profile snapshots (0 records endpoints only).
    /// Auto runs land on these times exactly, so snapshots of runs sharing
    /// a config are time-aligned.
    pub snapshot_dt: f64,
    /// Zero out negative densities after each step (counted against a
    /// 0.1% budget); with this off, negatives are left for inspection.
    pub clamp_negatives: bool,
}

impl SolverConfig {
    pub fn new(n_grid: usize, time_step: TimeStep, t_max: f64) -> Self {
        Self {
            n_grid,
            time_step,
            t_max,
            snapshot_dt: 0.0,
            clamp_negatives: true,
        }
    }

    pub fn with_snapshots(mut self, snapshot_dt: f64) -> Self {
        self.snapshot_dt = snapshot_dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid < 16 {
            return Err(Error::InvalidParameter(format!(
                "n_grid must be at least 16, got {}",
                self.n_grid
            )));
        }
        if !(self.t_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if let TimeStep::Fixed(dt) = self.time_step {
            if !(dt > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "fixed dt must be positive, got {dt}"
                )));
            }
        }
        if let TimeStep::Auto { cap: Some(cap) } = self.time_step {
            if !(cap > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "auto dt cap must be positive, got {cap}"
                )));
            }
        }
        if self.snapshot_dt < 0.0 {
            return Err(Error::InvalidParameter(
                "snapshot_dt must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    fn dxi(&self) -> f64 {
        1.0 / (self.n_grid + 1) as f64
    }
}

/// Profiles on the normalized grid plus the front state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationState {
    pub t: f64,
    /// Front position.
    pub h: f64,
    /// Prey on `xi_j = j/(n_grid+1)`, `j = 0..=n_grid+1`; last entry 0.
    pub u: Vec<f64>,
    /// Predator on the same grid; last entry 0.
    pub v: Vec<f64>,
    /// Last computed front speed.
    pub h_prime: f64,
}

impl SimulationState {
    pub fn new(init: &InitialData, n_grid: usize) -> Result<Self> {
        if n_grid < 16 {
            return Err(Error::InvalidParameter(format!(
                "n_grid must be at least 16, got {n_grid}"
            )));
        }
        let (u, v) = init.sample(n_grid);
        // reject degenerate prey data here, not inside step
        if !u[..u.len() - 1].iter().any(|&x| x > 0.0) {
            return Err(Error::InvalidParameter(
                "initial prey profile is identically zero".into(),
            ));
        }
        Ok(Self {
            t: 0.0,
            h: init.h0,
            u,
            v,
            h_prime: 0.0,
        })
    }

    pub fn n_grid(&self) -> usize {
        self.u.len() - 2
    }

    pub fn sup_u(&self) -> f64 {
        self.u.iter().cloned().fold(0.0, f64::max)
    }

    pub fn sup_v(&self) -> f64 {
        self.v.iter().cloned().fold(0.0, f64::max)
    }
}

/// One-sided second-order gradient of the prey at the front,
/// `u_x(t, h) ~ (3 U_N - 4 U_(N-1) + U_(N-2)) / (2 dxi h)` with `U_N = 0`.
///
/// Nonpositive for valid profiles; a NaN here must be raised as
/// `NumericalBlowup` by the caller.
pub fn front_gradient(state: &SimulationState) -> f64 {
    let n = state.u.len() - 1;
    let dxi = 1.0 / n as f64;
    (3.0 * state.u[n] - 4.0 * state.u[n - 1] + state.u[n - 2]) / (2.0 * dxi * state.h)
}

/// How the front advances during a step.
enum FrontDriver<'a> {
    /// Stefan condition `h' = -rho u_x(t, h)`.
    Stefan { rho: f64 },
    /// Recorded front path replayed from another run (used by the
    /// comparison harness to impose a moving Dirichlet boundary).
    Prescribed { path: &'a FrontPath, index: usize },
}

/// Per-step front series extracted from a [`Trajectory`].
#[derive(Debug, Clone)]
pub struct FrontPath {
    pub times: Vec<f64>,
    pub fronts: Vec<f64>,
    pub speeds: Vec<f64>,
}

impl FrontPath {
    pub fn of(traj: &Trajectory) -> Self {
        Self {
            times: traj.times.clone(),
            fronts: traj.fronts.clone(),
            speeds: traj.front_speeds.clone(),
        }
    }
}

/// Coupling coefficients actually used by the stepper. `b = c = 0`
/// decouples the species exactly (the interaction terms multiply to zero).
#[derive(Debug, Clone, Copy)]
struct Coupling {
    lambda: f64,
    mu: f64,
    b: f64,
    c: f64,
    d: f64,
    m: f64,
}

impl Coupling {
    fn of(p: &ModelParams) -> Self {
        Self {
            lambda: p.lambda,
            mu: p.mu,
            b: p.b,
            c: p.c,
            d: p.d,
            m: p.m,
        }
    }

    fn rate_scale(&self) -> f64 {
        self.lambda.max(self.mu + self.c)
    }
}

/// Advances one species: explicit advection + reaction into the right-hand
/// side, then an implicit diffusion solve with Neumann-left (ghost
/// reflection) and Dirichlet-right rows. `work` must provide 4 scratch
/// vectors of length `n = unknown count`.
fn step_species(
    w: &mut [f64],
    react: &[f64],
    adv_coef: f64, // h'/h at the old time
    dt: f64,
    diffusivity: f64,
    h_new: f64,
    dxi: f64,
    work: &mut [Vec<f64>; 4],
) {
    let n = w.len() - 1; // unknowns j = 0..n-1, w[n] pinned to 0
    let [sub, diag, sup, rhs] = work;
    sub.clear();
    diag.clear();
    sup.clear();
    rhs.clear();

    rhs.push(w[0] + dt * react[0]); // xi = 0: advection coefficient vanishes
    for j in 1..n {
        let xi = j as f64 * dxi;
        let adv = xi * adv_coef * (w[j + 1] - w[j - 1]) / (2.0 * dxi);
        rhs.push(w[j] + dt * (adv + react[j]));
    }

    let r = dt * diffusivity / (h_new * h_new * dxi * dxi);
    sub.resize(n, -r);
    diag.resize(n, 1.0 + 2.0 * r);
    sup.resize(n, -r);
    sup[0] = -2.0 * r; // ghost reflection w[-1] = w[1]

    tridiag::solve_in_place(sub, diag, sup, rhs);
    w[..n].copy_from_slice(rhs);
    w[n] = 0.0;
}

struct StepOutcome {
    clamped: u64,
}

/// One IMEX step of the coupled (or decoupled) system.
fn step_inner(
    state: &mut SimulationState,
    cp: &Coupling,
    driver: &mut FrontDriver,
    dt: f64,
    dxi: f64,
    clamp: bool,
    work: &mut [Vec<f64>; 4],
    react_u: &mut Vec<f64>,
    react_v: &mut Vec<f64>,
    single_species: bool,
) -> Result<StepOutcome> {
    let n = state.u.len() - 1;
    let (hp, h_new) = match driver {
        FrontDriver::Stefan { rho } => {
            let g = front_gradient(state);
            if !g.is_finite() {
                return Err(Error::NumericalBlowup {
                    t: state.t,
                    index: n,
                });
            }
            let hp = -*rho * g;
            // h' = 0 is tolerated: a numerically extinct prey has a flat
            // profile and a stationary front. Negative speed is a bug.
            if hp < 0.0 {
                return Err(Error::StefanViolation {
                    t: state.t,
                    h_prime: hp,
                });
            }
            (hp, state.h + dt * hp)
        }
        FrontDriver::Prescribed { path, index } => {
            let hp = path.speeds[*index];
            let h_new = path.fronts[*index + 1];
            (hp, h_new)
        }
    };
    let adv_coef = hp / state.h;

    react_u.clear();
    react_v.clear();
    if single_species {
        for j in 0..n {
            let u = state.u[j];
            react_u.push(cp.lambda * u - u * u);
        }
    } else {
        for j in 0..n {
            let (u, v) = (state.u[j], state.v[j]);
            let den = u + cp.m * v;
            let f = if den > 0.0 { u * v / den } else { 0.0 };
            react_u.push(cp.lambda * u - u * u - cp.b * f);
            react_v.push(cp.mu * v - v * v + cp.c * f);
        }
    }

    step_species(&mut state.u, react_u, adv_coef, dt, 1.0, h_new, dxi, work);
    if !single_species {
        step_species(&mut state.v, react_v, adv_coef, dt, cp.d, h_new, dxi, work);
    }

    let mut clamped = 0u64;
    let species: &mut [&mut Vec<f64>] = if single_species {
        &mut [&mut state.u]
    } else {
        &mut [&mut state.u, &mut state.v]
    };
    for w in species.iter_mut() {
        for (j, x) in w.iter_mut().enumerate() {
            if !x.is_finite() {
                return Err(Error::NumericalBlowup {
                    t: state.t,
                    index: j,
                });
            }
            if clamp && *x < 0.0 {
                *x = 0.0;
                clamped += 1;
            }
        }
    }

    state.t += dt;
    state.h = h_new;
    state.h_prime = hp;
    Ok(StepOutcome { clamped })
}

/// One time step of the full coupled system under the Stefan condition.
pub fn step(state: &mut SimulationState, p: &ModelParams, cfg: &SolverConfig, dt: f64) -> Result<()> {
    cfg.validate()?;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let cp = Coupling::of(p);
    let mut driver = FrontDriver::Stefan { rho: p.rho };
    let mut work: [Vec<f64>; 4] = Default::default();
    let (mut ru, mut rv) = (Vec::new(), Vec::new());
    step_inner(
        state,
        &cp,
        &mut driver,
        dt,
        cfg.dxi(),
        cfg.clamp_negatives,
        &mut work,
        &mut ru,
        &mut rv,
        false,
    )
    .map(|_| ())
}

/// Full profile at a recorded time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileSnapshot {
    pub t: f64,
    pub h: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Time series of one run: per-step scalars, sparse profile snapshots, and
/// the inputs that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: ModelParams,
    pub config: SolverConfig,
    pub times: Vec<f64>,
    pub fronts: Vec<f64>,
    /// Instantaneous front speed at each recorded time.
    pub front_speeds: Vec<f64>,
    /// Prey gradient at the front at each recorded time.
    pub front_gradients: Vec<f64>,
    pub sup_u: Vec<f64>,
    pub sup_v: Vec<f64>,
    pub snapshots: Vec<ProfileSnapshot>,
    /// Negative-density entries zeroed over the whole run.
    pub clamped: u64,
    /// Total grid-steps (interior points times steps), the clamp budget base.
    pub grid_steps: u64,
    /// Set when the run aborted early on a numerical failure; the recorded
    /// prefix is kept for post-mortem.
    pub error: Option<String>,
}

impl Trajectory {
    /// Running density bound observed over the run.
    pub fn k_observed(&self) -> f64 {
        self.sup_u
            .iter()
            .chain(self.sup_v.iter())
            .cloned()
            .fold(0.0, f64::max)
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn h_end(&self) -> f64 {
        *self.fronts.last().unwrap()
    }

    /// Fronts must increase while the prey is alive; callers may assert this.
    pub fn fronts_monotone(&self) -> bool {
        self.fronts.windows(2).all(|w| w[1] >= w[0])
    }
}

struct Recorder {
    traj: Trajectory,
    snapshot_dt: f64,
    next_snapshot: f64,
    density_cap: f64,
}

impl Recorder {
    fn new(p: &ModelParams, cfg: &SolverConfig, state: &SimulationState, cp: &Coupling) -> Self {
        let density_cap =
            state.sup_u().max(state.sup_v()).max(cp.lambda).max(cp.mu + cp.c) + 1e-6;
        Self {
            traj: Trajectory {
                params: *p,
                config: *cfg,
                times: Vec::new(),
                fronts: Vec::new(),
                front_speeds: Vec::new(),
                front_gradients: Vec::new(),
                sup_u: Vec::new(),
                sup_v: Vec::new(),
                snapshots: Vec::new(),
                clamped: 0,
                grid_steps: 0,
                error: None,
            },
            snapshot_dt: cfg.snapshot_dt,
            next_snapshot: if cfg.snapshot_dt > 0.0 {
                cfg.snapshot_dt
            } else {
                f64::INFINITY
            },
            density_cap,
        }
    }

    fn record(&mut self, state: &SimulationState, gradient: f64, hp: f64, force_snapshot: bool) {
        self.traj.times.push(state.t);
        self.traj.fronts.push(state.h);
        self.traj.front_speeds.push(hp);
        self.traj.front_gradients.push(gradient);
        self.traj.sup_u.push(state.sup_u());
        self.traj.sup_v.push(state.sup_v());
        let due = state.t >= self.next_snapshot - 1e-12 * self.snapshot_dt.max(1.0);
        if force_snapshot || due {
            self.traj.snapshots.push(ProfileSnapshot {
                t: state.t,
                h: state.h,
                u: state.u.clone(),
                v: state.v.clone(),
            });
            if due {
                self.next_snapshot += self.snapshot_dt;
            }
        }
    }

    fn check_bounds(&self, state: &SimulationState) -> Result<()> {
        let sup = state.sup_u().max(state.sup_v());
        if sup > self.density_cap {
            return Err(Error::PropertyViolation {
                check: "density bound".into(),
                margin: sup - self.density_cap,
                t: state.t,
                x: 0.0,
            });
        }
        Ok(())
    }
}

fn run_driver(
    p: &ModelParams,
    init: &InitialData,
    cfg: &SolverConfig,
    mut prescribed: Option<FrontPath>,
    single_species: bool,
    mut stop: impl FnMut(&SimulationState) -> bool,
) -> Result<Trajectory> {
    cfg.validate()?;
    p.validate()?;
    let cp = Coupling::of(p);
    let mut state = SimulationState::new(init, cfg.n_grid)?;
    if single_species {
        state.v.iter_mut().for_each(|x| *x = 0.0);
    }
    if let Some(path) = &prescribed {
        if path.times.len() < 2 || (path.fronts[0] - init.h0).abs() > 1e-12 * init.h0 {
            return Err(Error::InvalidParameter(
                "prescribed front path must start at h0 and contain at least two samples".into(),
            ));
        }
    }

    let dxi = cfg.dxi();
    let mut recorder = Recorder::new(p, cfg, &state, &cp);
    let rate_scale = cp.rate_scale();
    let mut work: [Vec<f64>; 4] = Default::default();
    let (mut ru, mut rv) = (Vec::new(), Vec::new());

    let instantaneous = |state: &SimulationState, path_idx: usize, prescribed: &Option<FrontPath>| {
        let g = front_gradient(state);
        let hp = match prescribed {
            Some(path) => path.speeds[path_idx.min(path.speeds.len() - 1)],
            None => -p.rho * g,
        };
        (g, hp)
    };

    let (mut g, mut hp) = instantaneous(&state, 0, &prescribed);
    state.h_prime = hp;
    recorder.record(&state, g, hp, true);

    let mut index = 0usize;
    let t_end = match &prescribed {
        Some(path) => *path.times.last().unwrap(),
        None => cfg.t_max,
    };

    loop {
        if state.t >= t_end - 1e-12 * t_end.max(1.0) || stop(&state) {
            break;
        }
        let dt = match &prescribed {
            Some(path) => {
                // replay the recorded step sequence exactly
                let dt = path.times[index + 1] - path.times[index];
                if dt <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "prescribed front path times must be strictly increasing".into(),
                    ));
                }
                dt
            }
            None => {
                let mut dt = match cfg.time_step {
                    TimeStep::Fixed(dt) => dt,
                    TimeStep::Auto { cap } => {
                        let mut dt = REACT_FRACTION / rate_scale;
                        let cfl = ADV_CFL * dxi * state.h / hp.max(1e-300);
                        dt = dt.min(cfl);
                        if let Some(cap) = cap {
                            dt = dt.min(cap);
                        }
                        dt
                    }
                };
                // land exactly on the horizon and (for auto stepping) on
                // snapshot times so runs sharing a config stay time-aligned
                dt = dt.min(t_end - state.t);
                if matches!(cfg.time_step, TimeStep::Auto { .. })
                    && recorder.next_snapshot < t_end
                {
                    dt = dt.min(recorder.next_snapshot - state.t);
                }
                dt.max(1e-300)
            }
        };

        let mut driver = match &prescribed {
            Some(_) => FrontDriver::Prescribed {
                path: prescribed.as_ref().unwrap(),
                index,
            },
            None => FrontDriver::Stefan { rho: p.rho },
        };
        let out = match step_inner(
            &mut state,
            &cp,
            &mut driver,
            dt,
            dxi,
            cfg.clamp_negatives,
            &mut work,
            &mut ru,
            &mut rv,
            single_species,
        ) {
            Ok(out) => out,
            Err(e) => {
                recorder.traj.error = Some(e.to_string());
                return Ok(recorder.traj);
            }
        };
        drop(driver);
        index += 1;

        // snap the clock to targets hit by a clamped step
        if prescribed.is_none() {
            if recorder.next_snapshot.is_finite()
                && (state.t - recorder.next_snapshot).abs()
                    <= 1e-9 * recorder.next_snapshot.max(1.0)
            {
                state.t = recorder.next_snapshot;
            }
            if (state.t - t_end).abs() <= 1e-9 * t_end.max(1.0) {
                state.t = t_end;
            }
        } else {
            state.t = prescribed.as_ref().unwrap().times[index];
        }

        recorder.traj.clamped += out.clamped;
        recorder.traj.grid_steps += cfg.n_grid as u64;
        if recorder.traj.clamped as f64 > CLAMP_BUDGET * recorder.traj.grid_steps as f64
            && recorder.traj.grid_steps > 10 * cfg.n_grid as u64
        {
            recorder.traj.error = Some(
                Error::ClampBudget {
                    clamped: recorder.traj.clamped,
                    total: recorder.traj.grid_steps,
                }
                .to_string(),
            );
            return Ok(recorder.traj);
        }
        if let Err(e) = recorder.check_bounds(&state) {
            recorder.traj.error = Some(e.to_string());
            return Ok(recorder.traj);
        }

        let (g2, hp2) = instantaneous(&state, index, &prescribed);
        g = g2;
        hp = hp2;
        state.h_prime = hp;
        let last = state.t >= t_end - 1e-12 * t_end.max(1.0);
        recorder.record(&state, g, hp, last);
    }
    // make sure the final state has a snapshot even on early stop
    if recorder
        .traj
        .snapshots
        .last()
        .map(|s| s.t < state.t)
        .unwrap_or(true)
    {
        recorder.traj.snapshots.push(ProfileSnapshot {
            t: state.t,
            h: state.h,
            u: state.u.clone(),
            v: state.v.clone(),
        });
    }
    let _ = &mut prescribed;
    Ok(recorder.traj)
}

/// Integrates the coupled system through `cfg.t_max`.
///
/// Numerical failures mid-run abort the stepping and are recorded in
/// [`Trajectory::error`] together with the prefix computed so far;
/// invalid inputs fail immediately.
pub fn simulate(p: &ModelParams, init: &InitialData, cfg: &SolverConfig) -> Result<Trajectory> {
    run_driver(p, init, cfg, None, false, |_| false)
}

/// Like [`simulate`] but stops early once `stop` returns true (checked at
/// recording points; the classifier installs its verdict rules here).
pub fn simulate_until(
    p: &ModelParams,
    init: &InitialData,
    cfg: &SolverConfig,
    stop: impl FnMut(&SimulationState) -> bool,
) -> Result<Trajectory> {
    run_driver(p, init, cfg, None, false, stop)
}

/// Dedicated single-species logistic free-boundary run
/// (`w_t - w_xx = w(rate - w)`, `s' = -rho w_x(t, s)`), using the prey
/// channel of the same stepper. Bit-identical to a coupled run with
/// `b = c = 0` and matching rate scales.
pub fn simulate_logistic(
    rate: f64,
    rho: f64,
    init: &InitialData,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    let p = ModelParams {
        lambda: rate,
        mu: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
        m: 1.0,
        rho,
    };
    run_driver(&p, init, cfg, None, true, |_| false)
}

/// Logistic run `w_t - d w_xx = w(rate - w)` on a prescribed moving domain:
/// the front path (times, positions, speeds) of a previously computed run
/// is replayed exactly, so both runs share step times and the `xi` grid.
/// The `v` channel of `init` provides the initial profile.
pub fn simulate_logistic_prescribed(
    rate: f64,
    diffusivity: f64,
    rho: f64,
    path: &FrontPath,
    init: &InitialData,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    if !(diffusivity > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "diffusivity must be positive, got {diffusivity}"
        )));
    }
    // swap the species so the prescribed profile rides the v channel with
    // its own diffusivity; the u channel is zeroed and decoupled.
    let p = ModelParams {
        lambda: 1.0,
        mu: rate,
        b: 0.0,
        c: 0.0,
        d: diffusivity,
        m: 1.0,
        rho,
    };
    let swapped = InitialData {
        h0: init.h0,
        profile: match &init.profile {
            ProfileSpec::Cosine { amp_u: _, amp_v } => ProfileSpec::Cosine {
                amp_u: *amp_v,
                amp_v: *amp_v,
            },
            ProfileSpec::Samples { u0: _, v0 } => ProfileSpec::Samples {
                u0: v0.clone(),
                v0: v0.clone(),
            },
        },
    };
    run_driver(&p, &swapped, cfg, Some(path.clone()), false, |_| false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(lambda: f64, mu: f64, b: f64, c: f64, d: f64, m: f64, rho: f64) -> ModelParams {
        ModelParams {
            lambda,
            mu,
            b,
            c,
            d,
            m,
            rho,
        }
    }

    #[test]
    fn cosine_profile_examples() {
        let init = InitialData::cosine(2.0, 0.7, 0.3).unwrap();
        let (u, v) = init.sample(64);
        assert_eq!(u[0], 0.7);
        assert_eq!(*u.last().unwrap(), 0.0);
        assert_eq!(v[0], 0.3);
        // u0'(0) = 0: symmetric quadratic fit through the first samples is flat
        let dxi = 1.0 / 65.0;
        let slope = (u[1] - u[0]) / dxi;
        assert!(slope.abs() < 0.03, "left slope {slope}");
        // midpoint value amp/sqrt(2) at x = h0/2 (xi = 1/2 is not a grid
        // point for this n, so evaluate the analytic family directly)
        let mid = 0.7 * (std::f64::consts::FRAC_PI_2 * 0.5).cos();
        assert_abs_diff_eq!(mid, 0.7 / 2.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn sampled_profile_resamples_monotone() {
        let n_src = 33;
        let u0: Vec<f64> = (0..n_src)
            .map(|j| {
                let x = j as f64 / (n_src - 1) as f64;
                (1.0 - x * x).max(0.0)
            })
            .collect();
        let mut v0 = u0.clone();
        *v0.last_mut().unwrap() = 0.0;
        let mut u0 = u0;
        *u0.last_mut().unwrap() = 0.0;
        let init = InitialData::from_samples(1.5, u0, v0).unwrap();
        let (u, _) = init.sample(100);
        assert_eq!(*u.last().unwrap(), 0.0);
        assert!(u.windows(2).all(|w| w[1] <= w[0] + 1e-12), "not monotone");
        assert!(u[..u.len() - 1].iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn rejects_degenerate_initial_data() {
        assert!(InitialData::cosine(0.0, 1.0, 1.0).is_err());
        assert!(InitialData::cosine(1.0, 0.0, 1.0).is_err());
        // interior zero is rejected
        assert!(InitialData::from_samples(1.0, vec![1.0, 0.0, 1.0, 0.0], vec![1.0; 4]).is_err());
        // nonzero endpoint is rejected
        assert!(InitialData::from_samples(1.0, vec![1.0, 1.0, 1.0, 1.0], vec![1.0; 4]).is_err());
    }

    #[test]
    fn front_gradient_examples() {
        let init = InitialData::cosine(1.0, 1.0, 1.0).unwrap();
        let mut state = SimulationState::new(&init, 200).unwrap();
        // cosine with h = 1: u_x(1) = -pi/2, second-order accurate
        let g = front_gradient(&state);
        assert!(
            (g + std::f64::consts::FRAC_PI_2).abs() < 1e-3,
            "gradient {g}"
        );
        // flat zero tail
        let n = state.u.len();
        state.u[n - 2] = 0.0;
        state.u[n - 3] = 0.0;
        assert_eq!(front_gradient(&state), 0.0);
        // exact for linear data
        let m = state.u.len() - 1;
        for j in 0..=m {
            state.u[j] = 1.0 - j as f64 / m as f64;
        }
        state.h = 2.0;
        assert_abs_diff_eq!(front_gradient(&state), -0.5, epsilon = 1e-13);
    }

    #[test]
    fn single_step_increases_front() {
        let p = params(2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        let init = InitialData::cosine(1.0, 1.0, 1.0).unwrap();
        let cfg = SolverConfig::new(200, TimeStep::Fixed(1e-4), 1.0);
        let mut state = SimulationState::new(&init, 200).unwrap();
        let h0 = state.h;
        step(&mut state, &p, &cfg, 1e-4).unwrap();
        assert!(state.h > h0);
        assert!(state.h_prime > 0.0);
        let k = state.sup_u().max(state.sup_v());
        assert!(state.h_prime <= p.rho * k.max(front_gradient(&state).abs().max(1.0)) * 10.0);
        assert_eq!(*state.u.last().unwrap(), 0.0);
    }

    #[test]
    fn decoupled_run_is_bit_identical_to_logistic_path() {
        // rate scales match (mu + c = 1 + 0 <= lambda), so the dt sequences
        // and the u-channel arithmetic agree exactly
        let p = params(2.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0);
        let init = InitialData::cosine(1.0, 0.5, 0.5).unwrap();
        let cfg = SolverConfig::new(64, TimeStep::Auto { cap: None }, 0.5);
        let coupled = simulate(&p, &init, &cfg).unwrap();
        let logistic = simulate_logistic(2.0, 1.0, &init, &cfg).unwrap();
        assert!(coupled.error.is_none() && logistic.error.is_none());
        assert_eq!(coupled.times, logistic.times);
        assert_eq!(coupled.fronts, logistic.fronts);
        let a = &coupled.snapshots.last().unwrap().u;
        let b = &logistic.snapshots.last().unwrap().u;
        assert_eq!(a, b, "u profiles differ bit-for-bit");
    }

    #[test]
    fn fronts_monotone_and_bounded_density() {
        let p = params(2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        let init = InitialData::cosine(1.0, 0.5, 0.5).unwrap();
        let cfg = SolverConfig::new(64, TimeStep::Auto { cap: None }, 2.0);
        let traj = simulate(&p, &init, &cfg).unwrap();
        assert!(traj.error.is_none());
        assert!(traj.fronts_monotone());
        assert!(traj.fronts.windows(2).all(|w| w[1] > w[0]));
        let cap = 0.5f64.max(p.lambda).max(p.mu + p.c) + 1e-6;
        assert!(traj.k_observed() <= cap);
        for hp in &traj.front_speeds {
            assert!(*hp > 0.0);
        }
    }

    #[test]
    fn negatives_stay_at_discretization_noise_without_clamping() {
        let p = params(2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        let init = InitialData::cosine(1.0, 0.5, 0.5).unwrap();
        let mut cfg = SolverConfig::new(64, TimeStep::Auto { cap: None }, 1.0);
        cfg.clamp_negatives = false;
        let traj = simulate(&p, &init, &cfg).unwrap();
        assert!(traj.error.is_none());
        let last = traj.snapshots.last().unwrap();
        let min = last
            .u
            .iter()
            .chain(last.v.iter())
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-9, "negative density {min}");
    }

    #[test]
    fn auto_steps_land_on_snapshot_times() {
        let p = params(1.5, 1.0, 1.0, 1.0, 1.0, 1.0, 10.0);
        let init = InitialData::cosine(1.0, 0.5, 0.5).unwrap();
        let cfg = SolverConfig::new(64, TimeStep::Auto { cap: None }, 1.0).with_snapshots(0.25);
        let traj = simulate(&p, &init, &cfg).unwrap();
        let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn prescribed_replay_shares_times_and_respects_source_front() {
        let p = params(1.5, 1.0, 1.0, 1.0, 1.0, 1.0, 5.0);
        let init = InitialData::cosine(1.0, 0.5, 0.5).unwrap();
        let cfg = SolverConfig::new(64, TimeStep::Auto { cap: None }, 1.0).with_snapshots(0.5);
        let source = simulate(&p, &init, &cfg).unwrap();
        let path = FrontPath::of(&source);
        let replay =
            simulate_logistic_prescribed(p.mu + p.c, p.d, p.rho, &path, &init, &cfg).unwrap();
        assert!(replay.error.is_none());
        assert_eq!(replay.times, source.times);
        assert_eq!(replay.fronts, source.fronts);
        for (a, b) in replay.snapshots.iter().zip(&source.snapshots) {
            assert_eq!(a.t, b.t);
        }
    }

    #[test]
    fn grid_refinement_consistency() {
        // halving dt and doubling n_grid moves h(t_max) by O(dt) + O(dxi^2)
        let p = params(1.5, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        let init = InitialData::cosine(1.0, 0.5, 0.5).unwrap();
        let run = |n: usize, dt: f64| {
            let cfg = SolverConfig::new(n, TimeStep::Fixed(dt), 1.0);
            simulate(&p, &init, &cfg).unwrap().h_end()
        };
        let coarse = run(50, 2e-3);
        let fine = run(100, 1e-3);
        let finest = run(200, 5e-4);
        let d1 = (coarse - fine).abs();
        let d2 = (fine - finest).abs();
        assert!(d2 < d1, "refinement must contract: {d1} -> {d2}");
        assert!(d1 < 5e-3, "first-order scale: {d1}");
    }

    #[test]
    fn instability_is_recorded_not_panicked() {
        // absurd fixed step destroys positivity; the clamp budget (or a
        // blow-up) fails the run cleanly with a partial trajectory kept
        let p = params(2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1000.0);
        let init = InitialData::cosine(0.5, 0.1, 0.1).unwrap();
        let cfg = SolverConfig::new(64, TimeStep::Fixed(5.0), 500.0);
        let traj = simulate(&p, &init, &cfg).unwrap();
        assert!(traj.error.is_some(), "expected recorded failure");
        assert!(!traj.times.is_empty());
    }
}
