//! Stationary logistic two-point boundary value problems,
//!
//! ```text
//! -d V_xx = V (rate - V)  on (0, l),   V_x(0) = V(l) = 0,
//! ```
//!
//! which arise as the t -> infinity limit objects of vanishing runs. A
//! positive solution exists iff `l > (pi/2) sqrt(d/rate)`; below that
//! threshold only the trivial zero solution remains.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A steady profile on a uniform grid over `[0, l]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyProfile {
    /// Domain length.
    pub l: f64,
    /// Abscissae `x_j = j * l / n`.
    pub grid: Vec<f64>,
    /// Values `V(x_j)`; the last entry is exactly 0.
    pub values: Vec<f64>,
    /// False means only the trivial zero solution exists at this length.
    pub positive: bool,
}

impl SteadyProfile {
    pub fn sup(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Linear interpolation of the profile at `x` (0 outside `[0, l]`).
    pub fn at(&self, x: f64) -> f64 {
        if x < 0.0 || x > self.l {
            return 0.0;
        }
        let n = self.values.len() - 1;
        let s = x / self.l * n as f64;
        let j = (s.floor() as usize).min(n - 1);
        let w = s - j as f64;
        self.values[j] * (1.0 - w) + self.values[j + 1] * w
    }
}

/// Default interior resolution for [`solve_logistic_bvp`].
pub const DEFAULT_N_GRID: usize = 512;
/// Default residual tolerance for [`solve_logistic_bvp`].
pub const DEFAULT_TOL: f64 = 1e-10;

/// Solves the stationary logistic problem by damped Newton on the
/// central-difference discretization.
///
/// Below the threshold length the zero profile is returned with
/// `positive = false`; the threshold comparison is done on
/// `(pi/2)^2 d / rate` versus `l^2` to avoid square-root rounding at the
/// boundary case. The positive branch is reached from a plateau-with-edge
/// initial guess that reduces to `0.9 * rate * cos(pi x/(2l))` near the
/// threshold length.
pub fn solve_logistic_bvp(
    d: f64,
    rate: f64,
    l: f64,
    n_grid: usize,
    tol: f64,
) -> Result<SteadyProfile> {
    if !(d > 0.0) || !(rate > 0.0) || !(l > 0.0) {
        return Err(Error::Domain(format!(
            "solve_logistic_bvp requires positive d, rate, l (got {d}, {rate}, {l})"
        )));
    }
    if n_grid < 8 {
        return Err(Error::InvalidParameter(format!(
            "n_grid must be at least 8, got {n_grid}"
        )));
    }
    let n = n_grid;
    let dx = l / n as f64;
    let grid: Vec<f64> = (0..=n).map(|j| j as f64 * dx).collect();

    let half_pi = std::f64::consts::FRAC_PI_2;
    if l * l <= half_pi * half_pi * d / rate {
        return Ok(SteadyProfile {
            l,
            grid,
            values: vec![0.0; n + 1],
            positive: false,
        });
    }

    // unknowns j = 0..n-1; V_n = 0 (Dirichlet), ghost reflection at j = 0.
    // Initial guess: 0.9*rate plateau with a quarter-cosine edge of width
    // ~ the threshold length. For short domains the edge spans the whole
    // interval and this is exactly the 0.9*rate*cos(pi x/(2l)) eigenfunction
    // shape; on long domains the plateau keeps Newton on the positive
    // branch (the bare cosine guess lands on spurious wiggly branches there).
    let edge = (2.5 * half_pi * (d / rate).sqrt()).min(l);
    let mut v: Vec<f64> = grid
        .iter()
        .map(|&x| {
            let z = ((x - (l - edge)) / edge).max(0.0);
            0.9 * rate * (half_pi * z).cos()
        })
        .collect();
    v[n] = 0.0;

    let residual = |v: &[f64]| -> Vec<f64> {
        let inv_dx2 = 1.0 / (dx * dx);
        let mut f = vec![0.0; n];
        f[0] = d * (2.0 * v[1] - 2.0 * v[0]) * inv_dx2 + v[0] * (rate - v[0]);
        for j in 1..n {
            f[j] = d * (v[j + 1] - 2.0 * v[j] + v[j - 1]) * inv_dx2 + v[j] * (rate - v[j]);
        }
        f
    };
    let max_abs = |f: &[f64]| f.iter().fold(0.0f64, |a, x| a.max(x.abs()));

    let mut res = residual(&v);
    let mut res_norm = max_abs(&res);
    let mut stagnant = 0usize;
    for _ in 0..200 {
        if res_norm <= tol {
            break;
        }
        // tridiagonal Jacobian: sub = d/dx^2, diag = -2d/dx^2 + rate - 2V,
        // sup = d/dx^2 (doubled on row 0 by the Neumann reflection).
        let inv_dx2 = d / (dx * dx);
        let mut sub = vec![inv_dx2; n];
        let mut diag: Vec<f64> = (0..n)
            .map(|j| -2.0 * inv_dx2 + rate - 2.0 * v[j])
            .collect();
        let mut sup = vec![inv_dx2; n];
        sup[0] = 2.0 * inv_dx2;
        let mut rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        crate::pde::tridiag::solve_in_place(&mut sub, &mut diag, &mut sup, &mut rhs);
        let delta = rhs;

        // backtracking damping, halving until the residual decreases
        let mut damp = 1.0;
        let mut improved = false;
        for _ in 0..20 {
            let mut trial = v.clone();
            for j in 0..n {
                trial[j] += damp * delta[j];
            }
            let trial_res = residual(&trial);
            let trial_norm = max_abs(&trial_res);
            if trial_norm < res_norm {
                v = trial;
                res = trial_res;
                res_norm = trial_norm;
                improved = true;
                break;
            }
            damp *= 0.5;
        }
        if improved {
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= 20 {
                return Err(Error::SolverFailure { residual: res_norm });
            }
        }
    }
    if res_norm > tol {
        return Err(Error::SolverFailure { residual: res_norm });
    }
    v[n] = 0.0;
    Ok(SteadyProfile {
        l,
        grid,
        values: v,
        positive: true,
    })
}

/// Maximum over interior nodes of `|d V''_h + V (rate - V)|` by central
/// differences; the boundary conditions are not part of this residual.
pub fn residual_logistic(profile: &SteadyProfile, d: f64, rate: f64) -> f64 {
    let n = profile.values.len() - 1;
    let dx = profile.l / n as f64;
    let v = &profile.values;
    let mut worst = 0.0f64;
    for j in 1..n {
        let second = (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (dx * dx);
        worst = worst.max((d * second + v[j] * (rate - v[j])).abs());
    }
    worst
}
