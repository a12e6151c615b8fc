//! Parameters, the ratio-dependent response, closed-form equilibria,
//! iteration maps, and the eigenvalue/threshold/speed formulas.
//!
//! Everything here is plain algebra over the seven model constants; no PDE
//! is solved. The governing system on the moving domain `0 < x < h(t)` is
//!
//! ```text
//! u_t -   u_xx = lambda*u - u^2 - b*u*v/(u + m*v)
//! v_t - d*v_xx = mu*v     - v^2 + c*u*v/(u + m*v)
//! h'(t) = -rho * u_x(t, h(t))
//! ```
//!
//! with prey `u`, predator `v`, and prey-driven free boundary `h`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The seven positive model constants.
///
/// Units: `lambda`, `mu` are rates (1/time); `d` is a diffusivity
/// (length^2/time); `b`, `c`, `m` are dimensionless coefficients; `rho`
/// is the Stefan (front-response) constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Prey growth rate.
    pub lambda: f64,
    /// Predator growth rate.
    pub mu: f64,
    /// Predation coefficient.
    pub b: f64,
    /// Conversion coefficient.
    pub c: f64,
    /// Predator diffusivity (prey diffusivity is normalized to 1).
    pub d: f64,
    /// Ratio-dependence saturation.
    pub m: f64,
    /// Front-response (Stefan) coefficient.
    pub rho: f64,
}

impl ModelParams {
    /// Validates positivity of all seven constants.
    pub fn new(lambda: f64, mu: f64, b: f64, c: f64, d: f64, m: f64, rho: f64) -> Result<Self> {
        let p = Self {
            lambda,
            mu,
            b,
            c,
            d,
            m,
            rho,
        };
        p.validate()?;
        Ok(p)
    }

    /// Positivity of the rates, diffusivity, saturation, and Stefan
    /// constant. The interaction coefficients `b` and `c` may be zero,
    /// which decouples the species (the single-species logistic runs the
    /// comparison harness is built on).
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("d", self.d),
            ("m", self.m),
            ("rho", self.rho),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        for (name, v) in [("b", self.b), ("c", self.c)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be nonnegative and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Prey persists under predation pressure: `m*lambda > b`.
    pub fn prey_survives(&self) -> bool {
        self.m * self.lambda > self.b
    }

    /// Coexistence regime `0 < m*lambda - b < b*mu/c`, under which the
    /// positive equilibrium `(u*, v*)` exists and attracts spreading
    /// solutions. Decoupled parameter sets (`b = 0` or `c = 0`) have no
    /// interaction equilibrium and are excluded.
    pub fn coexist_regime(&self) -> bool {
        if self.b == 0.0 || self.c == 0.0 {
            return false;
        }
        let excess = self.m * self.lambda - self.b;
        0.0 < excess && excess < self.b * self.mu / self.c
    }

    /// Prey spreads at least as fast as the predator:
    /// `d*(mu + c) <= lambda - b/m`.
    pub fn prey_faster(&self) -> bool {
        self.d * (self.mu + self.c) <= self.lambda - self.b / self.m
    }

    /// Effective low-density prey growth rate `lambda - b/m`.
    pub fn depressed_rate(&self) -> f64 {
        self.lambda - self.b / self.m
    }

    fn require_prey_survives(&self) -> Result<()> {
        if !self.prey_survives() {
            return Err(Error::OutOfRegime(format!(
                "prey persistence requires m*lambda > b (m*lambda = {}, b = {})",
                self.m * self.lambda,
                self.b
            )));
        }
        Ok(())
    }

    fn require_coexist(&self) -> Result<()> {
        if self.b == 0.0 || self.c == 0.0 {
            return Err(Error::OutOfRegime(
                "coexist regime requires interacting species (b > 0 and c > 0)".into(),
            ));
        }
        let excess = self.m * self.lambda - self.b;
        if !(excess > 0.0) {
            return Err(Error::OutOfRegime(format!(
                "coexist regime requires 0 < m*lambda - b, got m*lambda - b = {excess}"
            )));
        }
        if !(excess < self.b * self.mu / self.c) {
            return Err(Error::OutOfRegime(format!(
                "coexist regime requires m*lambda - b < b*mu/c ({excess} >= {})",
                self.b * self.mu / self.c
            )));
        }
        Ok(())
    }
}

/// Ratio-dependent interaction term `u*v/(u + m*v)`.
///
/// The value at the origin is taken to be 0 (the only extension continuous
/// along trajectories entering extinction: along `u = k*v` the limit is
/// `k/(k + m) * v -> 0`).
pub fn response(u: f64, v: f64, m: f64) -> Result<f64> {
    if u < 0.0 || v < 0.0 {
        return Err(Error::Domain(format!(
            "response requires nonnegative densities, got u = {u}, v = {v}"
        )));
    }
    if !(m > 0.0) {
        return Err(Error::Domain(format!("response requires m > 0, got {m}")));
    }
    let den = u + m * v;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(u * v / den)
}

/// Closed-form positive equilibrium and its defining residuals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EquilibriumResult {
    /// Prey equilibrium density `u* = (A + sqrt(Delta1)) / (2(b + c m^2))`.
    pub u_star: f64,
    /// Predator equilibrium density `v* = u*(lambda - u*)/(b - m(lambda - u*))`.
    pub v_star: f64,
    /// Intermediate coefficient `A = lambda(2 c m^2 + b) - m b (mu + 2c)`.
    pub a_coef: f64,
    /// Discriminant `Delta1 = A^2 + 4(b + c m^2)[b(mu + c) - m c lambda](m lambda - b)`.
    pub delta1: f64,
    /// `|lambda - u - b v/(u + m v)|` at the equilibrium.
    pub residual1: f64,
    /// `|mu - v + c u/(u + m v)|` at the equilibrium.
    pub residual2: f64,
}

/// Evaluates the equilibrium's defining system and returns the two absolute
/// residuals.
pub fn equilibrium_residuals(p: &ModelParams, u: f64, v: f64) -> (f64, f64) {
    let den = u + p.m * v;
    let r1 = p.lambda - u - p.b * v / den;
    let r2 = p.mu - v + p.c * u / den;
    (r1.abs(), r2.abs())
}

/// Closed-form coexistence equilibrium `(u*, v*)`.
///
/// Requires the coexist regime `0 < m*lambda - b < b*mu/c`; outside it the
/// positive root does not exist and an `OutOfRegime` error names the failed
/// inequality.
pub fn equilibrium_closed_form(p: &ModelParams) -> Result<EquilibriumResult> {
    p.require_coexist()?;
    let (lambda, mu, b, c, m) = (p.lambda, p.mu, p.b, p.c, p.m);
    let a_coef = lambda * (2.0 * c * m * m + b) - m * b * (mu + 2.0 * c);
    let delta1 =
        a_coef * a_coef + 4.0 * (b + c * m * m) * (b * (mu + c) - m * c * lambda) * (m * lambda - b);
    let u_star = (a_coef + delta1.sqrt()) / (2.0 * (b + c * m * m));
    let v_star = u_star * (lambda - u_star) / (b - m * (lambda - u_star));
    let (residual1, residual2) = equilibrium_residuals(p, u_star, v_star);
    Ok(EquilibriumResult {
        u_star,
        v_star,
        a_coef,
        delta1,
        residual1,
        residual2,
    })
}

/// `phi(s)`: positive root of `u^2 - (lambda - m s) u - (m lambda - b) s = 0`,
///
/// ```text
/// phi(s) = [lambda - m s + sqrt((lambda - m s)^2 + 4 (m lambda - b) s)] / 2.
/// ```
pub fn phi_map(s: f64, p: &ModelParams) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::Domain(format!("phi requires s >= 0, got {s}")));
    }
    p.require_prey_survives()?;
    let lin = p.lambda - p.m * s;
    Ok(0.5 * (lin + (lin * lin + 4.0 * (p.m * p.lambda - p.b) * s).sqrt()))
}

/// `psi(s)`: positive root of `m v^2 - (m mu - s) v - s (mu + c) = 0`,
///
/// ```text
/// psi(s) = [m mu - s + sqrt((m mu - s)^2 + 4 m (mu + c) s)] / (2m),
/// ```
///
/// equivalently the predator level solving `mu - v + c s/(s + m v) = 0`
/// when the prey sits at `s` (so a fixed point of the phi/psi alternation
/// solves the full equilibrium system). `psi(0) = mu` and `psi` is
/// nondecreasing.
pub fn psi_map(s: f64, p: &ModelParams) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::Domain(format!("psi requires s >= 0, got {s}")));
    }
    let lin = p.m * p.mu - s;
    Ok((lin + (lin * lin + 4.0 * p.m * (p.mu + p.c) * s).sqrt()) / (2.0 * p.m))
}

/// Record of the monotone upper/lower iteration toward `(u*, v*)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationTrace {
    /// Non-increasing prey upper sequence, seeded with `lambda`.
    pub u_upper: Vec<f64>,
    /// Non-increasing predator upper sequence.
    pub v_upper: Vec<f64>,
    /// Non-decreasing prey lower sequence.
    pub u_lower: Vec<f64>,
    /// Non-decreasing predator lower sequence.
    pub v_lower: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl IterationTrace {
    /// True when every recorded step respects the sandwich ordering
    /// `lower[i] <= lower[i+1] <= upper[i+1] <= upper[i]` for both species,
    /// up to a few ulps of slack (the sequences coincide at the fixed point
    /// and rounding may reorder them there).
    pub fn monotone(&self) -> bool {
        let le = |a: f64, b: f64| a <= b + 1e-13 * (1.0 + b.abs());
        let ordered = |lo: &[f64], hi: &[f64]| {
            lo.windows(2).all(|w| le(w[0], w[1]))
                && hi.windows(2).all(|w| le(w[1], w[0]))
                && lo.iter().zip(hi).all(|(&l, &h)| le(l, h))
        };
        ordered(&self.u_lower, &self.u_upper) && ordered(&self.v_lower, &self.v_upper)
    }
}

/// Runs the iteration
///
/// ```text
/// v_up[i] = psi(u_up[i]),  u_lo[i] = phi(v_up[i]),
/// v_lo[i] = psi(u_lo[i]),  u_up[i+1] = phi(v_lo[i]),
/// ```
///
/// from the seed `u_up[1] = lambda` until both gaps `|u_up - u_lo|` and
/// `|v_up - v_lo|` drop below `tol`, or `max_iter` is exhausted (which
/// returns the partial trace with `converged = false`, not an error).
pub fn iterate_equilibrium(p: &ModelParams, tol: f64, max_iter: usize) -> Result<IterationTrace> {
    p.require_coexist()?;
    let mut trace = IterationTrace {
        u_upper: Vec::new(),
        v_upper: Vec::new(),
        u_lower: Vec::new(),
        v_lower: Vec::new(),
        iterations: 0,
        converged: false,
    };
    let mut u_up = p.lambda;
    for i in 0..max_iter {
        let v_up = psi_map(u_up, p)?;
        let u_lo = phi_map(v_up, p)?;
        let v_lo = psi_map(u_lo, p)?;
        trace.u_upper.push(u_up);
        trace.v_upper.push(v_up);
        trace.u_lower.push(u_lo);
        trace.v_lower.push(v_lo);
        trace.iterations = i + 1;
        if (u_up - u_lo).abs() <= tol && (v_up - v_lo).abs() <= tol {
            trace.converged = true;
            break;
        }
        u_up = phi_map(v_lo, p)?;
    }
    Ok(trace)
}

/// Default absolute tolerance for [`iterate_equilibrium`].
pub const ITERATION_TOL: f64 = 1e-10;
/// Default iteration budget for [`iterate_equilibrium`].
pub const ITERATION_MAX: usize = 10_000;

/// First eigenvalue of `-phi_xx - (lambda - b/m) phi = sigma phi` on `(0, l)`
/// with `phi_x(0) = 0 = phi(l)`:
///
/// ```text
/// sigma_1(l) = -(lambda - b/m) + (pi / (2 l))^2.
/// ```
pub fn principal_eigenvalue(l: f64, p: &ModelParams) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::Domain(format!("sigma_1 requires l > 0, got {l}")));
    }
    p.require_prey_survives()?;
    let half_pi_over_l = std::f64::consts::FRAC_PI_2 / l;
    Ok(-p.depressed_rate() + half_pi_over_l * half_pi_over_l)
}

/// Spreading barrier and the companion lower bound on the critical habitat.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// `Lambda = (pi/2) sqrt(m / (m lambda - b))`; a front that crosses it
    /// never stops.
    pub lambda_barrier: f64,
    /// `(pi/2) lambda^(-1/2)`, a lower bound for the vanishing-side critical
    /// habitat `h_*`.
    pub h_star_lower: f64,
    /// Effective rate `lambda - b/m` retained so `sigma_1` can be evaluated
    /// on request.
    effective_rate: f64,
}

impl ThresholdReport {
    /// Evaluates `sigma_1(l)` for this parameter set.
    pub fn sigma1(&self, l: f64) -> f64 {
        let half_pi_over_l = std::f64::consts::FRAC_PI_2 / l;
        -self.effective_rate + half_pi_over_l * half_pi_over_l
    }
}

/// Computes the spreading barrier `Lambda` and `h_*`'s lower bound.
pub fn spreading_barrier(p: &ModelParams) -> Result<ThresholdReport> {
    p.require_prey_survives()?;
    let lambda_barrier =
        std::f64::consts::FRAC_PI_2 * (p.m / (p.m * p.lambda - p.b)).sqrt();
    let h_star_lower = std::f64::consts::FRAC_PI_2 / p.lambda.sqrt();
    Ok(ThresholdReport {
        lambda_barrier,
        h_star_lower,
        effective_rate: p.depressed_rate(),
    })
}

/// The asymptotic speed scales and the density-ratio bound `s`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpeedConstants {
    /// `c1 = 2 sqrt(lambda - b/m)`: prey lower speed scale.
    pub c1: f64,
    /// `c2 = 2 sqrt(lambda)`: prey upper speed scale.
    pub c2: f64,
    /// `c3 = 2 sqrt(d mu)`: predator lower speed scale.
    pub c3: f64,
    /// `c4 = 2 sqrt(d (mu + c))`: predator upper speed scale.
    pub c4: f64,
    /// `c5 = 2 sqrt(lambda - b s/(1 + m s))`, absent when the radicand is
    /// nonpositive.
    pub c5: Option<f64>,
    /// Ratio bound `s = 2 K / (lambda - b/m)` dominating `v/u` in the wake.
    pub s: f64,
    /// The density bound used to form `s` (callers pass the observed sup of
    /// the simulated densities plus headroom).
    pub k: f64,
    /// Diagnostic: the radicand `lambda - b s/(1+m s)` always exceeds
    /// `lambda - b/m`, so `c5 > c1` whenever `c5` exists. Recorded rather
    /// than asserted away.
    pub c5_exceeds_c1: bool,
}

/// Computes `c1..c5` and `s` from the parameters and a density bound `K`.
pub fn speed_constants(p: &ModelParams, k: f64) -> Result<SpeedConstants> {
    p.require_prey_survives()?;
    if !(k > 0.0) {
        return Err(Error::Domain(format!(
            "speed constants require K > 0, got {k}"
        )));
    }
    let depressed = p.depressed_rate();
    let c1 = 2.0 * depressed.sqrt();
    let c2 = 2.0 * p.lambda.sqrt();
    let c3 = 2.0 * (p.d * p.mu).sqrt();
    let c4 = 2.0 * (p.d * (p.mu + p.c)).sqrt();
    let s = 2.0 * k / depressed;
    let radicand = p.lambda - p.b * s / (1.0 + p.m * s);
    let c5 = (radicand > 0.0).then(|| 2.0 * radicand.sqrt());
    Ok(SpeedConstants {
        c1,
        c2,
        c3,
        c4,
        c5,
        s,
        k,
        c5_exceeds_c1: c5.map(|v| v > c1).unwrap_or(false),
    })
}
