//! Config parsing and validation.
//!
//! A run is described by one TOML document whose `command` must match the
//! CLI subcommand. Validation happens eagerly with diagnostics that name
//! the violated inequality (positivity, regime conditions, block/command
//! consistency).

use std::path::PathBuf;

use serde::Deserialize;

use freefront_core::model::ModelParams;
use freefront_core::pde::{InitialData, SolverConfig, TimeStep};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Simulate,
    Classify,
    Sweep,
    Semiwave,
    Equilibrium,
    Thresholds,
    Compare,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Simulate => "simulate",
            CommandKind::Classify => "classify",
            CommandKind::Sweep => "sweep",
            CommandKind::Semiwave => "semiwave",
            CommandKind::Equilibrium => "equilibrium",
            CommandKind::Thresholds => "thresholds",
            CommandKind::Compare => "compare",
        }
    }

    fn parse(s: &str) -> Result<Self, String> {
        Ok(match s {
            "simulate" => CommandKind::Simulate,
            "classify" => CommandKind::Classify,
            "sweep" => CommandKind::Sweep,
            "semiwave" => CommandKind::Semiwave,
            "equilibrium" => CommandKind::Equilibrium,
            "thresholds" => CommandKind::Thresholds,
            "compare" => CommandKind::Compare,
            other => return Err(format!("unknown command {other:?}")),
        })
    }

    /// Commands that integrate the PDE and therefore need params + init + solver.
    fn needs_pde_inputs(&self) -> bool {
        matches!(
            self,
            CommandKind::Simulate | CommandKind::Classify | CommandKind::Sweep | CommandKind::Compare
        )
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    schema_version: u32,
    command: String,
    #[serde(default)]
    seed: u64,
    output: Option<String>,
    threads: Option<usize>,
    params: Option<ParamsDoc>,
    init: Option<InitDoc>,
    solver: Option<SolverDoc>,
    sweep: Option<SweepDoc>,
    semiwave: Option<SemiwaveDoc>,
    equilibrium: Option<EquilibriumDoc>,
    thresholds: Option<ThresholdsDoc>,
    compare: Option<CompareDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    lambda: f64,
    mu: f64,
    b: f64,
    c: f64,
    d: f64,
    m: f64,
    rho: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitDoc {
    h0: f64,
    kind: String,
    amp_u: Option<f64>,
    amp_v: Option<f64>,
    u0: Option<Vec<f64>>,
    v0: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DtDoc {
    Named(String),
    Fixed(f64),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverDoc {
    n_grid: usize,
    dt: DtDoc,
    dt_cap: Option<f64>,
    t_max: f64,
    #[serde(default)]
    snapshot_dt: f64,
    #[serde(default = "default_true")]
    clamp_negatives: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepDoc {
    h0: Vec<f64>,
    rho: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiwaveDoc {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub rho: f64,
    pub y_max: Option<f64>,
    pub tol: Option<f64>,
    /// Optional monotonicity matrix grids.
    pub rhos: Option<Vec<f64>>,
    pub a_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumDoc {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsDoc {
    /// Lengths at which to sample sigma_1(l).
    pub lengths: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareDoc {
    pub tol: Option<f64>,
    /// Also build and check the explicit upper solution (requires the
    /// small-habitat premise and rho <= rho0).
    #[serde(default)]
    pub upper_ordering: bool,
}

/// Fully validated run description.
#[derive(Debug)]
pub struct RunConfig {
    pub command: CommandKind,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub threads: usize,
    pub params: Option<ModelParams>,
    pub init: Option<InitialData>,
    pub solver: Option<SolverConfig>,
    pub sweep_axes: Option<(Vec<f64>, Vec<f64>)>,
    pub semiwave: Option<SemiwaveDoc>,
    pub equilibrium: Option<EquilibriumDoc>,
    pub thresholds: Option<ThresholdsDoc>,
    pub compare: Option<CompareDoc>,
}

/// Parses and validates a config document for the given subcommand.
///
/// `out_override` and `threads_override` come from the command line, which
/// wins over the `FREEFRONT_OUT`/`FREEFRONT_THREADS` environment variables,
/// which win over the document.
pub fn parse_config(
    text: &str,
    subcommand: CommandKind,
    out_override: Option<PathBuf>,
    threads_override: Option<usize>,
) -> Result<RunConfig, String> {
    let doc: ConfigDoc = toml::from_str(text).map_err(|e| format!("config parse error: {e}"))?;
    if doc.schema_version != CONFIG_SCHEMA_VERSION {
        return Err(format!(
            "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
            doc.schema_version
        ));
    }
    let command = CommandKind::parse(&doc.command)?;
    if command != subcommand {
        return Err(format!(
            "config command {:?} does not match CLI subcommand {:?}",
            doc.command,
            subcommand.name()
        ));
    }

    let params = doc
        .params
        .map(|p| {
            ModelParams::new(p.lambda, p.mu, p.b, p.c, p.d, p.m, p.rho)
                .map_err(|e| e.to_string())
        })
        .transpose()?;

    let init = doc.init.map(|i| build_init(i)).transpose()?;
    let solver = doc.solver.map(|s| build_solver(s)).transpose()?;

    if command.needs_pde_inputs() {
        if params.is_none() {
            return Err(format!("[params] is required for {}", command.name()));
        }
        if init.is_none() {
            return Err(format!("[init] is required for {}", command.name()));
        }
        if solver.is_none() {
            return Err(format!("[solver] is required for {}", command.name()));
        }
    }
    if matches!(
        command,
        CommandKind::Equilibrium | CommandKind::Thresholds | CommandKind::Semiwave
    ) && command != CommandKind::Semiwave
        && params.is_none()
    {
        return Err(format!("[params] is required for {}", command.name()));
    }

    // sweep axes only with the sweep command, and required there
    let sweep_axes = match (&doc.sweep, command) {
        (Some(s), CommandKind::Sweep) => {
            for (name, grid) in [("h0", &s.h0), ("rho", &s.rho)] {
                if grid.is_empty() {
                    return Err(format!("[sweep].{name} must be a nonempty grid"));
                }
                if grid.iter().any(|&v| !(v > 0.0)) {
                    return Err(format!("[sweep].{name} entries must be positive"));
                }
            }
            Some((s.h0.clone(), s.rho.clone()))
        }
        (Some(_), _) => {
            return Err(format!(
                "[sweep] axes are only valid with the sweep command, not {}",
                command.name()
            ));
        }
        (None, CommandKind::Sweep) => {
            return Err("[sweep] with h0 and rho grids is required for sweep".into());
        }
        (None, _) => None,
    };
    if command == CommandKind::Sweep {
        if let Some(init) = &init {
            if !matches!(init.profile, freefront_core::pde::ProfileSpec::Cosine { .. }) {
                return Err(
                    "sweep requires a cosine [init] (sampled profiles cannot rescale to the h0 grid)"
                        .into(),
                );
            }
        }
    }

    if command == CommandKind::Semiwave {
        let sw = doc
            .semiwave
            .as_ref()
            .ok_or("[semiwave] block is required for the semiwave command")?;
        for (name, v) in [("a", sw.a), ("b", sw.b), ("d", sw.d), ("rho", sw.rho)] {
            if !(v > 0.0) {
                return Err(format!("[semiwave].{name} must be positive, got {v}"));
            }
        }
    } else if doc.semiwave.is_some() {
        return Err("[semiwave] block is only valid with the semiwave command".into());
    }

    let out_dir = out_override
        .or_else(|| std::env::var("FREEFRONT_OUT").ok().map(PathBuf::from))
        .or_else(|| doc.output.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let threads = threads_override
        .or_else(|| {
            std::env::var("FREEFRONT_THREADS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .or(doc.threads)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        });
    if threads == 0 {
        return Err("threads must be at least 1".into());
    }

    Ok(RunConfig {
        command,
        seed: doc.seed,
        out_dir,
        threads,
        params,
        init,
        solver,
        sweep_axes,
        semiwave: doc.semiwave,
        equilibrium: doc.equilibrium,
        thresholds: doc.thresholds,
        compare: doc.compare,
    })
}

fn build_init(doc: InitDoc) -> Result<InitialData, String> {
    match doc.kind.as_str() {
        "cosine" => {
            let amp_u = doc.amp_u.ok_or("[init] cosine requires amp_u")?;
            let amp_v = doc.amp_v.ok_or("[init] cosine requires amp_v")?;
            if doc.u0.is_some() || doc.v0.is_some() {
                return Err("[init] cosine does not take u0/v0 arrays".into());
            }
            InitialData::cosine(doc.h0, amp_u, amp_v).map_err(|e| e.to_string())
        }
        "samples" => {
            let u0 = doc.u0.ok_or("[init] samples requires u0")?;
            let v0 = doc.v0.ok_or("[init] samples requires v0")?;
            InitialData::from_samples(doc.h0, u0, v0).map_err(|e| e.to_string())
        }
        other => Err(format!(
            "[init].kind must be \"cosine\" or \"samples\", got {other:?}"
        )),
    }
}

fn build_solver(doc: SolverDoc) -> Result<SolverConfig, String> {
    let time_step = match doc.dt {
        DtDoc::Fixed(dt) => {
            if doc.dt_cap.is_some() {
                return Err("[solver].dt_cap only applies to dt = \"auto\"".into());
            }
            TimeStep::Fixed(dt)
        }
        DtDoc::Named(ref s) if s == "auto" => TimeStep::Auto { cap: doc.dt_cap },
        DtDoc::Named(other) => {
            return Err(format!(
                "[solver].dt must be a number or \"auto\", got {other:?}"
            ));
        }
    };
    let cfg = SolverConfig {
        n_grid: doc.n_grid,
        time_step,
        t_max: doc.t_max,
        snapshot_dt: doc.snapshot_dt,
        clamp_negatives: doc.clamp_negatives,
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
command = "simulate"

[params]
lambda = 2.0
mu = 1.0
b = 1.0
c = 1.0
d = 1.0
m = 1.0
rho = 0.01

[init]
h0 = 0.5
kind = "cosine"
amp_u = 0.1
amp_v = 0.1

[solver]
n_grid = 64
dt = "auto"
t_max = 1.0
"#;

    #[test]
    fn minimal_simulate_config_is_valid() {
        let cfg = parse_config(MINIMAL, CommandKind::Simulate, None, None).unwrap();
        assert_eq!(cfg.command, CommandKind::Simulate);
        assert!(cfg.params.is_some() && cfg.init.is_some() && cfg.solver.is_some());
        assert_eq!(cfg.out_dir, PathBuf::from("out"));
    }

    #[test]
    fn zero_rho_is_named_in_the_error() {
        let text = MINIMAL.replace("rho = 0.01", "rho = 0.0");
        let err = parse_config(&text, CommandKind::Simulate, None, None).unwrap_err();
        assert!(err.contains("rho must be positive"), "{err}");
    }

    #[test]
    fn sweep_axes_under_simulate_are_rejected() {
        let text = format!("{MINIMAL}\n[sweep]\nh0 = [0.5]\nrho = [1.0]\n");
        let err = parse_config(&text, CommandKind::Simulate, None, None).unwrap_err();
        assert!(err.contains("only valid with the sweep command"), "{err}");
    }

    #[test]
    fn command_mismatch_is_rejected() {
        let err = parse_config(MINIMAL, CommandKind::Classify, None, None).unwrap_err();
        assert!(err.contains("does not match"), "{err}");
    }

    #[test]
    fn fixed_dt_and_dt_cap_conflict() {
        let text = MINIMAL.replace("dt = \"auto\"", "dt = 0.001\ndt_cap = 0.01");
        let err = parse_config(&text, CommandKind::Simulate, None, None).unwrap_err();
        assert!(err.contains("dt_cap"), "{err}");
    }
}
