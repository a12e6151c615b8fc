//! Command implementations: each takes a validated [`RunConfig`], writes
//! its artifacts under the output directory, and maps failures onto the
//! exit-code contract (1 validation, 2 numerical, 3 property violation).

use std::fs;
use std::path::Path;

use freefront_core::classify::{self, ClassifyRules};
use freefront_core::compare;
use freefront_core::error::Error as CoreError;
use freefront_core::io as ffio;
use freefront_core::model::{self, ModelParams};
use freefront_core::pde::{self, InitialData, SolverConfig};
use freefront_core::semiwave::{self, SemiWaveProblem};
use serde::Serialize;

use crate::config::{CommandKind, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Property(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Property(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) | CliError::Property(m) => m,
        }
    }
}

fn from_core(e: CoreError) -> CliError {
    match e {
        CoreError::InvalidParameter(_)
        | CoreError::OutOfRegime(_)
        | CoreError::Domain(_)
        | CoreError::BracketError(_) => CliError::Validation(e.to_string()),
        CoreError::PropertyViolation { .. } => CliError::Property(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Validation(format!("i/o error: {e}"))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    fs::write(path, bytes).map_err(io_err)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_bytes(path, ffio::to_json_pretty(value).as_bytes())
}

fn metadata(cfg: &RunConfig) -> ffio::MetadataDoc {
    ffio::MetadataDoc {
        schema_version: ffio::SCHEMA_VERSION,
        command: cfg.command.name().to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        params: cfg.params,
        init: cfg.init.clone(),
        solver: cfg.solver,
        timestamp_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    }
}

fn write_trajectory(dir: &Path, traj: &pde::Trajectory) -> Result<(), CliError> {
    let mut buf = Vec::new();
    ffio::write_trajectory_csv(&mut buf, traj).map_err(io_err)?;
    write_bytes(&dir.join("trajectory.csv"), &buf)?;
    for (i, snap) in traj.snapshots.iter().enumerate() {
        let mut buf = Vec::new();
        ffio::write_snapshot_csv(&mut buf, snap).map_err(io_err)?;
        write_bytes(&dir.join(format!("snapshots/snapshot_{i:04}.csv")), &buf)?;
    }
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out_dir).map_err(io_err)?;
    write_json(&cfg.out_dir.join("metadata.json"), &metadata(cfg))?;
    match cfg.command {
        CommandKind::Simulate => run_simulate(cfg),
        CommandKind::Classify => run_classify(cfg),
        CommandKind::Sweep => run_sweep(cfg),
        CommandKind::Semiwave => run_semiwave(cfg),
        CommandKind::Equilibrium => run_equilibrium(cfg),
        CommandKind::Thresholds => run_thresholds(cfg),
        CommandKind::Compare => run_compare(cfg),
    }
}

fn pde_inputs(cfg: &RunConfig) -> (&ModelParams, &InitialData, &SolverConfig) {
    (
        cfg.params.as_ref().expect("validated"),
        cfg.init.as_ref().expect("validated"),
        cfg.solver.as_ref().expect("validated"),
    )
}

fn run_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let (p, init, solver) = pde_inputs(cfg);
    let traj = pde::simulate(p, init, solver).map_err(from_core)?;
    write_trajectory(&cfg.out_dir, &traj)?;
    match &traj.error {
        Some(e) => Err(CliError::Numerical(format!(
            "run aborted at t = {} ({e}); partial trajectory written",
            traj.t_end()
        ))),
        None => Ok(()),
    }
}

fn run_classify(cfg: &RunConfig) -> Result<(), CliError> {
    let (p, init, solver) = pde_inputs(cfg);
    let rules = ClassifyRules::defaults(p, solver.t_max).map_err(from_core)?;
    let (traj, outcome) = classify::run_classified(p, init, solver, &rules).map_err(from_core)?;
    write_trajectory(&cfg.out_dir, &traj)?;
    let report = ffio::VerdictReport {
        schema_version: ffio::SCHEMA_VERSION,
        params: *p,
        init: init.clone(),
        verdict: outcome.verdict,
        evidence: outcome.evidence,
        h_inf_estimate: outcome.h_inf_estimate,
        speed_estimate: outcome.speed_estimate,
        equilibrium_error: outcome.equilibrium_error,
    };
    write_json(&cfg.out_dir.join("verdict.json"), &report)?;
    match &traj.error {
        Some(e) => Err(CliError::Numerical(format!("run aborted: {e}"))),
        None => Ok(()),
    }
}

fn run_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let (p, init, solver) = pde_inputs(cfg);
    let (h0_grid, rho_grid) = cfg.sweep_axes.as_ref().expect("validated");
    let (amp_u, amp_v) = match &init.profile {
        pde::ProfileSpec::Cosine { amp_u, amp_v } => (*amp_u, *amp_v),
        _ => unreachable!("validated: sweep requires cosine init"),
    };

    let pairs: Vec<(usize, usize)> = (0..h0_grid.len())
        .flat_map(|i| (0..rho_grid.len()).map(move |j| (i, j)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    let results: Vec<(ffio::SweepRow, Option<pde::Trajectory>)> = pool.install(|| {
        use rayon::prelude::*;
        pairs
            .par_iter()
            .map(|&(i, j)| {
                let h0 = h0_grid[i];
                let rho = rho_grid[j];
                let row = |verdict: String, h_final: f64, speed: Option<f64>| ffio::SweepRow {
                    h0,
                    rho,
                    verdict,
                    h_final,
                    speed,
                };
                let pr = ModelParams { rho, ..*p };
                let init_ij = match InitialData::cosine(h0, amp_u, amp_v) {
                    Ok(v) => v,
                    Err(e) => return (row(format!("error({e})"), f64::NAN, None), None),
                };
                let rules = match ClassifyRules::defaults(&pr, solver.t_max) {
                    Ok(v) => v,
                    Err(e) => return (row(format!("error({e})"), f64::NAN, None), None),
                };
                match classify::run_classified(&pr, &init_ij, solver, &rules) {
                    Ok((traj, outcome)) => {
                        let verdict = match &traj.error {
                            Some(e) => format!("error({e})"),
                            None => outcome.verdict.to_string(),
                        };
                        let h_end = traj.h_end();
                        (row(verdict, h_end, outcome.speed_estimate), Some(traj))
                    }
                    Err(e) => (row(format!("error({e})"), f64::NAN, None), None),
                }
            })
            .collect()
    });

    let rows: Vec<ffio::SweepRow> = results.iter().map(|(r, _)| r.clone()).collect();
    let mut buf = Vec::new();
    ffio::write_sweep_csv(&mut buf, &rows).map_err(io_err)?;
    write_bytes(&cfg.out_dir.join("sweep.csv"), &buf)?;

    for (k, (_, traj)) in results.iter().enumerate() {
        if let Some(traj) = traj {
            let (i, j) = pairs[k];
            let mut buf = Vec::new();
            ffio::write_trajectory_csv(&mut buf, traj).map_err(io_err)?;
            write_bytes(
                &cfg.out_dir.join(format!("runs/run_{i:03}_{j:03}.csv")),
                &buf,
            )?;
        }
    }
    Ok(())
}

fn run_semiwave(cfg: &RunConfig) -> Result<(), CliError> {
    let sw = cfg.semiwave.as_ref().expect("validated");
    let prob = SemiWaveProblem::new(sw.a, sw.b, sw.d, sw.rho).map_err(from_core)?;
    let y_max = sw.y_max.filter(|&y| y > 0.0).unwrap_or(prob.default_y_max());
    let tol = sw.tol.unwrap_or(semiwave::DEFAULT_C_TOL);
    let sol = semiwave::solve_semi_wave(&prob, y_max, tol).map_err(from_core)?;
    let mut buf = Vec::new();
    ffio::write_semiwave_csv(&mut buf, &sol).map_err(io_err)?;
    write_bytes(&cfg.out_dir.join("semiwave.csv"), &buf)?;
    write_json(
        &cfg.out_dir.join("semiwave.json"),
        &ffio::SemiwaveReport::new(sw.rho, sw.a, sw.b, sw.d, &sol),
    )?;
    if let (Some(rhos), Some(a_values)) = (&sw.rhos, &sw.a_values) {
        let report =
            semiwave::monotone_in_rho_and_a(&prob, rhos, a_values, tol).map_err(from_core)?;
        write_json(&cfg.out_dir.join("monotone.json"), &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EquilibriumReport {
    schema_version: u32,
    params: ModelParams,
    closed_form: model::EquilibriumResult,
    iterations: usize,
    converged: bool,
    monotone: bool,
    u_gap: f64,
    v_gap: f64,
    iteration_vs_closed_form: f64,
}

fn run_equilibrium(cfg: &RunConfig) -> Result<(), CliError> {
    let p = cfg
        .params
        .as_ref()
        .ok_or_else(|| CliError::Validation("[params] is required for equilibrium".into()))?;
    let opts = cfg.equilibrium;
    let tol = opts.and_then(|o| o.tol).unwrap_or(model::ITERATION_TOL);
    let max_iter = opts.and_then(|o| o.max_iter).unwrap_or(model::ITERATION_MAX);
    let eq = model::equilibrium_closed_form(p).map_err(from_core)?;
    let trace = model::iterate_equilibrium(p, tol, max_iter).map_err(from_core)?;
    let u_up = *trace.u_upper.last().unwrap();
    let u_lo = *trace.u_lower.last().unwrap();
    let v_up = *trace.v_upper.last().unwrap();
    let v_lo = *trace.v_lower.last().unwrap();
    let report = EquilibriumReport {
        schema_version: ffio::SCHEMA_VERSION,
        params: *p,
        closed_form: eq,
        iterations: trace.iterations,
        converged: trace.converged,
        monotone: trace.monotone(),
        u_gap: u_up - u_lo,
        v_gap: v_up - v_lo,
        iteration_vs_closed_form: (u_up - eq.u_star).abs().max((v_up - eq.v_star).abs()),
    };
    write_json(&cfg.out_dir.join("equilibrium.json"), &report)
}

#[derive(Serialize)]
struct ThresholdsReport {
    schema_version: u32,
    params: ModelParams,
    lambda_barrier: f64,
    h_star_lower: f64,
    sigma1: Vec<(f64, f64)>,
}

fn run_thresholds(cfg: &RunConfig) -> Result<(), CliError> {
    let p = cfg
        .params
        .as_ref()
        .ok_or_else(|| CliError::Validation("[params] is required for thresholds".into()))?;
    let barrier = model::spreading_barrier(p).map_err(from_core)?;
    let lengths = cfg
        .thresholds
        .as_ref()
        .and_then(|t| t.lengths.clone())
        .unwrap_or_else(|| {
            (1..=8)
                .map(|k| barrier.lambda_barrier * k as f64 / 4.0)
                .collect()
        });
    for &l in &lengths {
        if !(l > 0.0) {
            return Err(CliError::Validation(format!(
                "sigma1 sample length must be positive, got {l}"
            )));
        }
    }
    let report = ThresholdsReport {
        schema_version: ffio::SCHEMA_VERSION,
        params: *p,
        lambda_barrier: barrier.lambda_barrier,
        h_star_lower: barrier.h_star_lower,
        sigma1: lengths.iter().map(|&l| (l, barrier.sigma1(l))).collect(),
    };
    write_json(&cfg.out_dir.join("thresholds.json"), &report)
}

fn run_compare(cfg: &RunConfig) -> Result<(), CliError> {
    let (p, init, solver) = pde_inputs(cfg);
    let tol = cfg
        .compare
        .and_then(|c| c.tol)
        .unwrap_or(compare::DEFAULT_ORDER_TOL);
    let mut checks = Vec::new();
    let mut violation: Option<CoreError> = None;
    match compare::verify_logistic_sandwich(p, init, solver, tol) {
        Ok(report) => checks.extend(report.checks),
        Err(e @ CoreError::PropertyViolation { .. }) => violation = Some(e),
        Err(e) => return Err(from_core(e)),
    }
    if cfg.compare.map(|c| c.upper_ordering).unwrap_or(false) {
        let upper = compare::build_lemma_upper(p, init).map_err(from_core)?;
        if p.rho > upper.rho0 {
            return Err(CliError::Validation(format!(
                "upper_ordering requires rho <= rho0 = {} (got rho = {})",
                upper.rho0, p.rho
            )));
        }
        let traj = pde::simulate(p, init, solver).map_err(from_core)?;
        match compare::verify_upper_ordering(&traj, &upper, tol) {
            Ok(report) => checks.push(report),
            Err(e @ CoreError::PropertyViolation { .. }) => violation = Some(e),
            Err(e) => return Err(from_core(e)),
        }
    }
    let pass = violation.is_none() && checks.iter().all(|c| c.pass);
    let report = ffio::CompareReport {
        schema_version: ffio::SCHEMA_VERSION,
        tol,
        checks,
        pass,
    };
    write_json(&cfg.out_dir.join("compare.json"), &report)?;
    match violation {
        Some(e) => Err(from_core(e)),
        None => Ok(()),
    }
}
