//! File formats shared with the `freefront` CLI: CSV series and JSON
//! reports. Every format carries a `schema_version` (CSV files as a
//! leading `# schema_version=N` comment line) and floats are written with
//! Rust's shortest round-trip formatting, so identical inputs produce
//! byte-identical files.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::classify::{Evidence, Verdict};
use crate::compare::OrderingReport;
use crate::model::ModelParams;
use crate::pde::{InitialData, ProfileSnapshot, SolverConfig, Trajectory};
use crate::semiwave::SemiWaveSolution;
use crate::steady_state::SteadyProfile;

pub const SCHEMA_VERSION: u32 = 1;

fn version_line<W: Write>(w: &mut W) -> io::Result<()> {
    writeln!(w, "# schema_version={SCHEMA_VERSION}")
}

/// Columns: `t,h,h_prime,front_gradient,sup_u,sup_v`.
pub fn write_trajectory_csv<W: Write>(w: &mut W, traj: &Trajectory) -> io::Result<()> {
    version_line(w)?;
    writeln!(w, "t,h,h_prime,front_gradient,sup_u,sup_v")?;
    for i in 0..traj.times.len() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            traj.times[i],
            traj.fronts[i],
            traj.front_speeds[i],
            traj.front_gradients[i],
            traj.sup_u[i],
            traj.sup_v[i]
        )?;
    }
    Ok(())
}

/// Columns: `xi,x,u,v` for one snapshot.
pub fn write_snapshot_csv<W: Write>(w: &mut W, snap: &ProfileSnapshot) -> io::Result<()> {
    version_line(w)?;
    writeln!(w, "xi,x,u,v")?;
    let n = snap.u.len() - 1;
    for j in 0..=n {
        let xi = j as f64 / n as f64;
        writeln!(w, "{},{},{},{}", xi, xi * snap.h, snap.u[j], snap.v[j])?;
    }
    Ok(())
}

/// Columns: `x,V` for a steady profile.
pub fn write_steady_csv<W: Write>(w: &mut W, profile: &SteadyProfile) -> io::Result<()> {
    version_line(w)?;
    writeln!(w, "x,V")?;
    for (x, v) in profile.grid.iter().zip(&profile.values) {
        writeln!(w, "{},{}", x, v)?;
    }
    Ok(())
}

/// Columns: `y,q,qprime` for a semi-wave profile.
pub fn write_semiwave_csv<W: Write>(w: &mut W, sol: &SemiWaveSolution) -> io::Result<()> {
    version_line(w)?;
    writeln!(w, "y,q,qprime")?;
    for i in 0..sol.y_grid.len() {
        writeln!(w, "{},{},{}", sol.y_grid[i], sol.q[i], sol.q_prime[i])?;
    }
    Ok(())
}

/// One row of a sweep summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub h0: f64,
    pub rho: f64,
    pub verdict: String,
    pub h_final: f64,
    pub speed: Option<f64>,
}

/// Columns: `h0,rho,verdict,h_final,speed` (speed empty when absent).
pub fn write_sweep_csv<W: Write>(w: &mut W, rows: &[SweepRow]) -> io::Result<()> {
    version_line(w)?;
    writeln!(w, "h0,rho,verdict,h_final,speed")?;
    for r in rows {
        let speed = r.speed.map(|s| s.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{}", r.h0, r.rho, r.verdict, r.h_final, speed)?;
    }
    Ok(())
}

/// Verdict report for one classified run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictReport {
    pub schema_version: u32,
    pub params: ModelParams,
    pub init: InitialData,
    pub verdict: Verdict,
    pub evidence: Evidence,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_inf_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equilibrium_error: Option<f64>,
}

/// Semi-wave asymptotics report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemiwaveReport {
    pub schema_version: u32,
    pub rho: f64,
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub c: f64,
    /// `c / (2 sqrt(a d))`, which approaches 1 as `a rho/(b d)` grows.
    pub c_over_2sqrtad: f64,
    /// `(c / sqrt(a d)) * (b d / (a rho))`, which approaches `1/sqrt(3)`
    /// as `a rho/(b d)` shrinks.
    pub small_rho_ratio: f64,
    pub tail_gap: f64,
    pub converged: bool,
}

impl SemiwaveReport {
    pub fn new(rho: f64, a: f64, b: f64, d: f64, sol: &SemiWaveSolution) -> Self {
        let sqrt_ad = (a * d).sqrt();
        Self {
            schema_version: SCHEMA_VERSION,
            rho,
            a,
            b,
            d,
            c: sol.c,
            c_over_2sqrtad: sol.c / (2.0 * sqrt_ad),
            small_rho_ratio: (sol.c / sqrt_ad) * (b * d / (a * rho)),
            tail_gap: sol.tail_gap,
            converged: sol.converged,
        }
    }
}

/// Comparison-check report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub tol: f64,
    pub checks: Vec<OrderingReport>,
    pub pass: bool,
}

/// Run metadata; `timestamp_unix` is the only wall-clock field emitted
/// anywhere and is excluded from determinism comparisons.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetadataDoc {
    pub schema_version: u32,
    pub command: String,
    pub code_version: String,
    pub seed: u64,
    pub params: Option<ModelParams>,
    pub init: Option<InitialData>,
    pub solver: Option<SolverConfig>,
    pub timestamp_unix: u64,
}

/// Serializes any report as pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    s.push('\n');
    s
}
