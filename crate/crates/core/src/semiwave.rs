//! The semi-wave problem
//!
//! ```text
//! d q'' - c q' + q (a - b q) = 0,   0 < y < inf,
//! q(0) = 0,  q'(0) = c/rho,  q(inf) = a/b,  c in (0, 2 sqrt(a d)),  q' > 0,
//! ```
//!
//! whose speed `c` is the asymptotic speed of the logistic free-boundary
//! front. It is solved by shooting from `y = 0` and bisecting on `c`: a
//! trial orbit either OVERSHOOTS (`q` exceeds `a/b` while still rising) or
//! UNDERSHOOTS (`q'` hits zero below `a/b`); the two behaviors are
//! separated by the unique connection speed. The connection approaches the
//! saddle at `q = a/b`, so the reported profile is truncated at the orbit's
//! closest approach (after which any finite-precision orbit diverges).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Coefficients of the semi-wave ODE.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SemiWaveProblem {
    /// Growth rate.
    pub a: f64,
    /// Self-limitation.
    pub b: f64,
    /// Diffusivity.
    pub d: f64,
    /// Stefan coefficient (enters through the slope condition `q'(0) = c/rho`).
    pub rho: f64,
}

impl SemiWaveProblem {
    pub fn new(a: f64, b: f64, d: f64, rho: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("d", d), ("rho", rho)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "semi-wave coefficient {name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self { a, b, d, rho })
    }

    /// KPP speed bound `2 sqrt(a d)`; the semi-wave speed lies strictly below.
    pub fn speed_cap(&self) -> f64 {
        2.0 * (self.a * self.d).sqrt()
    }

    /// Default integration range `50 sqrt(d/a)`.
    pub fn default_y_max(&self) -> f64 {
        50.0 * (self.d / self.a).sqrt()
    }
}

/// Wave speed and monotone profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemiWaveSolution {
    pub c: f64,
    pub y_grid: Vec<f64>,
    pub q: Vec<f64>,
    pub q_prime: Vec<f64>,
    pub converged: bool,
    /// `|q - a/b|` at the end of the reported profile (the orbit's closest
    /// approach to the saddle).
    pub tail_gap: f64,
}

/// Default bisection tolerance on `c`.
pub const DEFAULT_C_TOL: f64 = 1e-8;
/// Relative overshoot margin above `a/b`.
const OVERSHOOT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    Overshoot,
    Undershoot,
}

/// One adaptive Cash-Karp RK45 step attempt; returns (new state, error estimate).
fn rk45_step(c: f64, prob: &SemiWaveProblem, y: [f64; 2], h: f64) -> ([f64; 2], f64) {
    let f = |z: [f64; 2]| -> [f64; 2] {
        [z[1], (c * z[1] - z[0] * (prob.a - prob.b * z[0])) / prob.d]
    };
    let add = |z: [f64; 2], terms: &[(f64, [f64; 2])]| -> [f64; 2] {
        let mut out = z;
        for (w, k) in terms {
            out[0] += h * w * k[0];
            out[1] += h * w * k[1];
        }
        out
    };
    let k1 = f(y);
    let k2 = f(add(y, &[(1.0 / 5.0, k1)]));
    let k3 = f(add(y, &[(3.0 / 40.0, k1), (9.0 / 40.0, k2)]));
    let k4 = f(add(y, &[(3.0 / 10.0, k1), (-9.0 / 10.0, k2), (6.0 / 5.0, k3)]));
    let k5 = f(add(
        y,
        &[
            (-11.0 / 54.0, k1),
            (5.0 / 2.0, k2),
            (-70.0 / 27.0, k3),
            (35.0 / 27.0, k4),
        ],
    ));
    let k6 = f(add(
        y,
        &[
            (1631.0 / 55296.0, k1),
            (175.0 / 512.0, k2),
            (575.0 / 13824.0, k3),
            (44275.0 / 110592.0, k4),
            (253.0 / 4096.0, k5),
        ],
    ));
    let y5 = add(
        y,
        &[
            (37.0 / 378.0, k1),
            (250.0 / 621.0, k3),
            (125.0 / 594.0, k4),
            (512.0 / 1771.0, k6),
        ],
    );
    let y4 = add(
        y,
        &[
            (2825.0 / 27648.0, k1),
            (18575.0 / 48384.0, k3),
            (13525.0 / 55296.0, k4),
            (277.0 / 14336.0, k5),
            (1.0 / 4.0, k6),
        ],
    );
    let scale_q = prob.a / prob.b;
    let scale_p = scale_q * (prob.a / prob.d).sqrt();
    let err = ((y5[0] - y4[0]) / scale_q)
        .abs()
        .max(((y5[1] - y4[1]) / scale_p).abs());
    (y5, err)
}

/// Integrates a trial orbit, classifying it and optionally recording samples.
fn shoot(
    c: f64,
    prob: &SemiWaveProblem,
    y_max: f64,
    record: Option<&mut Vec<(f64, f64, f64)>>,
) -> Shot {
    let q_bar = prob.a / prob.b;
    let tol = 1e-11;
    let mut state = [0.0, c / prob.rho];
    let mut y = 0.0;
    let mut h = 1e-3 * (prob.d / prob.a).sqrt();
    let h_max = 0.05 * (prob.d / prob.a).sqrt();
    let mut sink = Vec::new();
    let rec = match record {
        Some(r) => r,
        None => &mut sink,
    };
    rec.push((y, state[0], state[1]));
    while y < y_max {
        h = h.min(y_max - y).min(h_max);
        let (next, err) = rk45_step(c, prob, state, h);
        if err > tol {
            h *= (0.9 * (tol / err).powf(0.2)).max(0.2);
            continue;
        }
        y += h;
        state = next;
        rec.push((y, state[0], state[1]));
        if err > 0.0 {
            h *= (0.9 * (tol / err).powf(0.2)).min(5.0);
        } else {
            h *= 5.0;
        }
        if state[0] > q_bar * (1.0 + OVERSHOOT_MARGIN) && state[1] > 0.0 {
            return Shot::Overshoot;
        }
        if state[1] <= 0.0 {
            return if state[0] < q_bar {
                Shot::Undershoot
            } else {
                Shot::Overshoot
            };
        }
    }
    if state[0] < q_bar {
        Shot::Undershoot
    } else {
        Shot::Overshoot
    }
}

/// Solves the semi-wave problem by bisection on `c in (0, 2 sqrt(a d))`.
///
/// `y_max` doubles automatically (up to 3 times) if the initial bracket
/// endpoints classify identically; a persistent failure signals that the
/// requested tolerance cannot separate the two behaviors.
pub fn solve_semi_wave(prob: &SemiWaveProblem, y_max: f64, tol: f64) -> Result<SemiWaveSolution> {
    if !(y_max > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "y_max and tol must be positive, got {y_max}, {tol}"
        )));
    }
    let cap = prob.speed_cap();
    let mut y_span = y_max;
    let mut doubles = 0;
    let (mut lo, mut hi) = loop {
        let lo = 1e-12 * cap;
        let hi = cap;
        let s_lo = shoot(lo, prob, y_span, None);
        let s_hi = shoot(hi, prob, y_span, None);
        if s_lo != s_hi {
            break (lo, hi);
        }
        doubles += 1;
        if doubles > 3 {
            return Err(Error::BracketFailure(format!(
                "both endpoints classify as {s_lo:?} up to y_max = {y_span} \
                 (y_max too small or tolerance too loose)"
            )));
        }
        y_span *= 2.0;
    };
    let shot_lo = shoot(lo, prob, y_span, None);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if shoot(mid, prob, y_span, None) == shot_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);

    // final orbit on a uniform fine grid (classic RK4), truncated at its
    // closest approach to the saddle; uniform spacing keeps finite
    // differences of the recorded q' second-order for residual checks
    let q_bar = prob.a / prob.b;
    let h = 1e-3 * (prob.d / prob.a).sqrt();
    let f = |z: [f64; 2]| -> [f64; 2] {
        [z[1], (c * z[1] - z[0] * (prob.a - prob.b * z[0])) / prob.d]
    };
    let mut samples: Vec<(f64, f64, f64)> = Vec::new();
    let mut z = [0.0, c / prob.rho];
    let mut y = 0.0;
    samples.push((y, z[0], z[1]));
    let steps = (y_span / h).ceil() as usize;
    for _ in 0..steps {
        let k1 = f(z);
        let k2 = f([z[0] + 0.5 * h * k1[0], z[1] + 0.5 * h * k1[1]]);
        let k3 = f([z[0] + 0.5 * h * k2[0], z[1] + 0.5 * h * k2[1]]);
        let k4 = f([z[0] + h * k3[0], z[1] + h * k3[1]]);
        z = [
            z[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            z[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        y += h;
        samples.push((y, z[0], z[1]));
        if z[1] <= 0.0 || z[0] > q_bar * (1.0 + OVERSHOOT_MARGIN) {
            break;
        }
    }
    let mut best = samples.len() - 1;
    let mut best_gap = f64::INFINITY;
    for (i, &(_, q, _)) in samples.iter().enumerate() {
        let gap = (q - q_bar).abs();
        if gap < best_gap {
            best_gap = gap;
            best = i;
        }
    }
    samples.truncate(best + 1);
    let mut y_grid = Vec::with_capacity(samples.len());
    let mut q = Vec::with_capacity(samples.len());
    let mut q_prime = Vec::with_capacity(samples.len());
    for (y, qv, pv) in samples {
        y_grid.push(y);
        q.push(qv);
        q_prime.push(pv);
    }
    Ok(SemiWaveSolution {
        c,
        y_grid,
        q,
        q_prime,
        converged: true,
        tail_gap: best_gap,
    })
}

/// Semi-wave speeds bracketing the coupled front:
/// `c(rho, 1, lambda - b/m, 1)` below and `c(rho, 1, lambda, 1)` above.
pub fn speed_bracket(p: &ModelParams) -> Result<(f64, f64)> {
    if !(p.m * p.lambda > p.b) {
        return Err(Error::OutOfRegime(format!(
            "speed bracket requires m*lambda > b (m*lambda = {}, b = {})",
            p.m * p.lambda,
            p.b
        )));
    }
    let lower_prob = SemiWaveProblem::new(p.depressed_rate(), 1.0, 1.0, p.rho)?;
    let upper_prob = SemiWaveProblem::new(p.lambda, 1.0, 1.0, p.rho)?;
    let lower = solve_semi_wave(&lower_prob, lower_prob.default_y_max(), DEFAULT_C_TOL)?;
    let upper = solve_semi_wave(&upper_prob, upper_prob.default_y_max(), DEFAULT_C_TOL)?;
    Ok((lower.c, upper.c))
}

/// Matrix of semi-wave speeds over sorted `rho` and `a` grids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub rhos: Vec<f64>,
    pub a_values: Vec<f64>,
    /// `speeds[i][j] = c(rhos[i], d, a_values[j], b)`.
    pub speeds: Vec<Vec<f64>>,
}

/// Solves the matrix of problems and verifies strict monotonicity of the
/// speed in both `rho` and `a` (violations beyond `2 * tol` are property
/// violations that flag solver miscalibration).
pub fn monotone_in_rho_and_a(
    base: &SemiWaveProblem,
    rhos: &[f64],
    a_values: &[f64],
    tol: f64,
) -> Result<MonotoneReport> {
    for grid in [rhos, a_values] {
        if grid.len() < 2 || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "rho and a grids must be ascending with at least two entries".into(),
            ));
        }
    }
    let mut speeds = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let mut row = Vec::with_capacity(a_values.len());
        for &a in a_values {
            let prob = SemiWaveProblem::new(a, base.b, base.d, rho)?;
            let sol = solve_semi_wave(&prob, prob.default_y_max(), tol)?;
            if !(sol.c < prob.speed_cap()) {
                return Err(Error::PropertyViolation {
                    check: "semi-wave speed cap".into(),
                    margin: sol.c - prob.speed_cap(),
                    t: rho,
                    x: a,
                });
            }
            row.push(sol.c);
        }
        speeds.push(row);
    }
    for (i, row) in speeds.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if i > 0 && speeds[i - 1][j] - c > 2.0 * tol {
                return Err(Error::PropertyViolation {
                    check: "semi-wave speed monotone in rho".into(),
                    margin: speeds[i - 1][j] - c,
                    t: rhos[i],
                    x: a_values[j],
                });
            }
            if j > 0 && row[j - 1] - c > 2.0 * tol {
                return Err(Error::PropertyViolation {
                    check: "semi-wave speed monotone in a".into(),
                    margin: row[j - 1] - c,
                    t: rhos[i],
                    x: a_values[j],
                });
            }
        }
    }
    Ok(MonotoneReport {
        rhos: rhos.to_vec(),
        a_values: a_values.to_vec(),
        speeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_problem(rho: f64) -> SemiWaveProblem {
        SemiWaveProblem::new(1.0, 1.0, 1.0, rho).unwrap()
    }

    #[test]
    fn slope_condition_holds_by_construction() {
        let prob = unit_problem(1.0);
        let sol = solve_semi_wave(&prob, prob.default_y_max(), 1e-10).unwrap();
        // q'(0) * rho = c exactly: the initial condition is c/rho
        assert_eq!(sol.q_prime[0] * prob.rho, sol.c);
        assert_eq!(sol.q[0], 0.0);
        assert!(sol.c > 0.0 && sol.c < prob.speed_cap());
    }

    #[test]
    fn profile_monotone_with_small_tail_gap() {
        let prob = unit_problem(10.0);
        let sol = solve_semi_wave(&prob, prob.default_y_max(), 1e-10).unwrap();
        assert!(sol.converged);
        for w in sol.q.windows(2) {
            assert!(w[1] > w[0], "q not strictly increasing");
        }
        assert!(sol.q_prime.iter().all(|&p| p > 0.0));
        // closest approach to the saddle; the flyby sensitivity limits this
        // to far above the c-tolerance (see ODE residual test for accuracy)
        assert!(sol.tail_gap < 2e-3, "tail gap {}", sol.tail_gap);
    }

    #[test]
    fn tail_gap_shrinks_with_tolerance() {
        let prob = unit_problem(1.0);
        let loose = solve_semi_wave(&prob, prob.default_y_max(), 1e-4).unwrap();
        let tight = solve_semi_wave(&prob, prob.default_y_max(), 1e-12).unwrap();
        assert!(tight.tail_gap < loose.tail_gap);
        assert!(tight.tail_gap < 1e-4, "tail gap {}", tight.tail_gap);
    }

    #[test]
    fn ode_residual_along_profile() {
        let prob = unit_problem(2.0);
        let sol = solve_semi_wave(&prob, prob.default_y_max(), 1e-10).unwrap();
        // central differences of the recorded q' against the ODE
        let mut worst = 0.0f64;
        for i in 1..sol.y_grid.len() - 1 {
            let dy = sol.y_grid[i + 1] - sol.y_grid[i - 1];
            let q2 = (sol.q_prime[i + 1] - sol.q_prime[i - 1]) / dy;
            let r = prob.d * q2 - sol.c * sol.q_prime[i]
                + sol.q[i] * (prob.a - prob.b * sol.q[i]);
            worst = worst.max(r.abs());
        }
        assert!(worst <= 1e-6, "ODE residual {worst}");
    }

    /// Frozen from two independent prototype computations (forward shooting
    /// and backward saddle-manifold integration agree to 8 digits): the
    /// normalized speed depends only on R = a rho/(b d) and
    /// C(10^3)/2 = 0.86118707, C(10^-3)/R = 0.576981.
    #[test]
    fn large_rho_ratio_matches_independent_oracle() {
        let prob = unit_problem(1000.0);
        let sol = solve_semi_wave(&prob, prob.default_y_max(), 1e-9).unwrap();
        let ratio = sol.c / prob.speed_cap();
        assert!(
            (ratio - 0.86118707).abs() < 5e-5,
            "c/(2 sqrt(ad)) = {ratio}"
        );
    }

    #[test]
    fn small_rho_limit_matches_paper_constant() {
        // (c/sqrt(ad)) * (bd/(a rho)) -> 1/sqrt(3) as a rho/(bd) -> 0
        let prob = unit_problem(1e-3);
        let sol = solve_semi_wave(&prob, prob.default_y_max(), 1e-12).unwrap();
        let ratio = (sol.c / (prob.a * prob.d).sqrt()) * (prob.b * prob.d / (prob.a * prob.rho));
        let target = 1.0 / 3.0f64.sqrt();
        assert!(
            ((ratio - target) / target).abs() < 0.05,
            "small-rho ratio {ratio} vs {target}"
        );
    }

    #[test]
    fn scale_invariance_in_physical_parameters() {
        // same R = a rho/(bd) must give the same c/sqrt(ad)
        let p1 = SemiWaveProblem::new(2.0, 1.0, 1.0, 5.0).unwrap(); // R = 10
        let p2 = SemiWaveProblem::new(1.0, 2.0, 0.5, 10.0).unwrap(); // R = 10
        let s1 = solve_semi_wave(&p1, p1.default_y_max(), 1e-10).unwrap();
        let s2 = solve_semi_wave(&p2, p2.default_y_max(), 1e-10).unwrap();
        let r1 = s1.c / (p1.a * p1.d).sqrt();
        let r2 = s2.c / (p2.a * p2.d).sqrt();
        assert!((r1 - r2).abs() < 1e-6, "{r1} vs {r2}");
    }

    #[test]
    fn speed_bracket_ordered_and_capped() {
        let p = ModelParams::new(2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10.0).unwrap();
        let (lo, hi) = speed_bracket(&p).unwrap();
        assert!(lo < hi, "bracket must be ordered: {lo} vs {hi}");
        assert!(lo > 0.0 && lo < 2.0 * (p.lambda - p.b / p.m).sqrt());
        assert!(hi < 2.0 * p.lambda.sqrt());
    }

    #[test]
    fn monotone_matrix_passes() {
        let base = unit_problem(1.0);
        let rhos = [0.5, 1.0, 2.0];
        let a_values = [0.5, 1.0, 2.0];
        let report = monotone_in_rho_and_a(&base, &rhos, &a_values, 1e-9).unwrap();
        assert_eq!(report.speeds.len(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let c = report.speeds[i][j];
                assert!(c > 0.0 && c < 2.0 * (a_values[j] * base.d).sqrt());
                if i > 0 {
                    assert!(c > report.speeds[i - 1][j]);
                }
                if j > 0 {
                    assert!(c > report.speeds[i][j - 1]);
                }
            }
        }
    }

    #[test]
    fn rejects_invalid_problems() {
        assert!(SemiWaveProblem::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(SemiWaveProblem::new(1.0, 1.0, 1.0, -2.0).is_err());
        let prob = unit_problem(1.0);
        assert!(solve_semi_wave(&prob, 0.0, 1e-8).is_err());
        assert!(solve_semi_wave(&prob, 10.0, 0.0).is_err());
    }
}
