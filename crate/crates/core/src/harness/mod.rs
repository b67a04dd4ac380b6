//! Config-driven runs: each task writes its artifacts plus `manifest.json`
//! into one output directory.

pub mod config;
pub mod studies;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::assumptions::{check_all, check_burgers_neutrality, check_coercivity, AssumptionReport, SamplePlan};
use crate::error::{Error, Result};
use crate::moments::{apriori_bound_check, estimate, uniqueness_study, MomentRequest};
use crate::operators::{ConstantsLedger, DiffusionSpec, DriftSpec, Equation};
use crate::solver::{galerkin_consistency_residual, solve_path, write_binary, write_csv};

pub use config::{ExperimentConfig, TaskConfig, TrajectoryFormat};
use config::EquationConfig;
use studies::{
    convergence_study, sharpness_sweep, write_convergence_csv, write_sharpness_csv, ConvergenceParams,
    SharpnessParams,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.toml";

/// Process exit status of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitKind {
    Ok,
    Failure,
    Config,
    Explosion,
    Violation,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Ok => 0,
            ExitKind::Failure => 1,
            ExitKind::Config => 2,
            ExitKind::Explosion => 3,
            ExitKind::Violation => 4,
        }
    }

    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter { .. } | Error::Dimension(_) | Error::BasisMismatch(_) => {
                ExitKind::Config
            }
            Error::Overflow { .. } => ExitKind::Explosion,
            Error::NoiseMismatch(_) | Error::Io(_) | Error::Json(_) => ExitKind::Failure,
        }
    }
}

#[derive(Debug)]
pub struct HarnessError {
    pub kind: ExitKind,
    pub error: Error,
}

impl std::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for HarnessError {}

impl From<Error> for HarnessError {
    fn from(error: Error) -> Self {
        Self {
            kind: ExitKind::of_error(&error),
            error,
        }
    }
}

/// Command-line adjustments applied before the config is hashed.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    /// Required task kind; a config with a different task is rejected.
    pub task: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub task: String,
    pub config_hash: String,
    pub seed: u64,
    pub equation: String,
    pub m: usize,
    pub dt: f64,
    pub t_end: f64,
    pub ledger: ConstantsLedger,
    pub conventions: Vec<String>,
    pub outputs: Vec<String>,
    pub summary: BTreeMap<String, Value>,
    pub status: ExitKind,
    pub exit_code: i32,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub out_dir: PathBuf,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.manifest.exit_code
    }
}

/// Loads `config_path` and runs it. A relative `frozen_ledger` path is taken
/// relative to the config file.
pub fn run(config_path: &Path, out_dir: &Path, overrides: &Overrides) -> std::result::Result<RunOutcome, HarnessError> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(frozen) = &cfg.frozen_ledger {
        let p = Path::new(frozen);
        if p.is_relative() {
            if let Some(dir) = config_path.parent() {
                cfg.frozen_ledger = Some(dir.join(p).to_string_lossy().into_owned());
            }
        }
    }
    run_config(cfg, out_dir, overrides)
}

pub fn resolve(mut cfg: ExperimentConfig, overrides: &Overrides) -> Result<ExperimentConfig> {
    if let Some(seed) = overrides.seed {
        cfg.solver.seed = seed;
    }
    match (&cfg.task, &overrides.task) {
        (Some(t), Some(want)) if t.name() != want => {
            return Err(Error::Config(format!(
                "config task is `{}` but `{want}` was requested",
                t.name()
            )))
        }
        (None, want) => cfg.task = Some(TaskConfig::default_for(want.as_deref().unwrap_or("simulate"))?),
        _ => {}
    }
    if let (Some(n), Some(task)) = (overrides.paths, cfg.task.as_mut()) {
        task.set_paths(n);
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run_config(
    cfg: ExperimentConfig,
    out_dir: &Path,
    overrides: &Overrides,
) -> std::result::Result<RunOutcome, HarnessError> {
    Ok(execute(cfg, out_dir, overrides)?)
}

fn execute(cfg: ExperimentConfig, out_dir: &Path, overrides: &Overrides) -> Result<RunOutcome> {
    let start = Instant::now();
    let cfg = resolve(cfg, overrides)?;
    let mut eq = Equation::new(cfg.equation_spec()?)?;
    if let Some(path) = &cfg.frozen_ledger {
        let frozen = RunManifest::load(Path::new(path))
            .map_err(|e| Error::Config(format!("frozen_ledger {path}: {e}")))?;
        *eq.ledger_mut() = frozen.ledger;
    }
    fs::create_dir_all(out_dir)?;
    let mut out = Outputs::new(out_dir);
    out.text(RESOLVED_CONFIG_FILE, &cfg.to_toml()?)?;

    let task = cfg.task.clone().expect("resolved config has a task");
    let mut summary = BTreeMap::new();
    let status = match &task {
        TaskConfig::Simulate {
            paths,
            format,
            fail_on_explosion,
        } => simulate(&cfg, &eq, *paths, *format, *fail_on_explosion, &mut out, &mut summary)?,
        TaskConfig::Moments {
            p_list,
            n_paths,
            track_mode,
            c_budget,
            fail_on_explosion,
        } => {
            let u0 = cfg.initial_field(&eq)?;
            let solver = cfg.solver_config(&eq)?;
            let mut req = MomentRequest::new(p_list.clone(), eq.ledger().p0, eq.ledger().alpha, *n_paths);
            req.track_mode = *track_mode;
            let report = estimate(&eq, &u0, &solver, &req)?;
            out.text("moments.json", &report.to_json()?)?;
            out.with("moments.csv", |w| report.write_csv(w))?;
            summary.insert("paths_used".into(), json!(report.paths_used));
            summary.insert("explosion_fraction".into(), json!(report.explosion_fraction));
            let mut status = ExitKind::Ok;
            if let Some(c) = c_budget {
                let check = apriori_bound_check(&report, &u0, eq.ledger().f, *c);
                out.text("bound_check.json", &serde_json::to_string_pretty(&check)?)?;
                summary.insert("bound_check_pass".into(), json!(check.pass));
                if !check.pass {
                    status = ExitKind::Violation;
                }
            }
            if *fail_on_explosion && report.explosion_fraction > 0.0 {
                status = ExitKind::Explosion;
            }
            status
        }
        TaskConfig::Check {
            samples,
            p0,
            sample_seed,
        } => {
            let plan = SamplePlan::new(*samples, sample_seed.unwrap_or(cfg.solver.seed));
            let report = run_checks(&eq, &plan, *p0)?;
            out.text("assumptions.json", &report.to_json()?)?;
            report.freeze_into(eq.ledger_mut());
            let violations = report.violations();
            summary.insert("violations".into(), json!(violations));
            if violations.is_empty() {
                ExitKind::Ok
            } else {
                ExitKind::Violation
            }
        }
        TaskConfig::Sharpness {
            gamma2_grid,
            p_grid,
            k,
            n_paths,
        } => {
            let rows = sharpness_sweep(&SharpnessParams {
                gamma2_grid: gamma2_grid.clone(),
                p_grid: p_grid.clone(),
                k: *k,
                dt: cfg.solver.dt,
                t_end: cfg.solver.t_end,
                n_paths: *n_paths,
                seed: cfg.solver.seed,
            })?;
            out.with("sharpness.csv", |w| write_sharpness_csv(&rows, w))?;
            out.text("sharpness.json", &serde_json::to_string_pretty(&rows)?)?;
            let flips: Vec<f64> = rows
                .windows(2)
                .filter(|w| w[0].p == w[1].p && w[0].bounded != w[1].bounded)
                .map(|w| 0.5 * (w[0].gamma2 + w[1].gamma2))
                .collect();
            summary.insert("bounded_flip_gamma2".into(), json!(flips));
            ExitKind::Ok
        }
        TaskConfig::Convergence { dt_list, n_paths, k } => {
            let EquationConfig::Fractional { gamma, .. } = cfg.equation else {
                return Err(Error::Config("convergence study requires the fractional equation".into()));
            };
            let report = convergence_study(&ConvergenceParams {
                gamma,
                k: *k,
                dt_list: dt_list.clone(),
                t_end: cfg.solver.t_end,
                n_paths: *n_paths,
                seed: cfg.solver.seed,
                scheme: cfg.scheme(eq.spec()),
            })?;
            out.with("convergence.csv", |w| write_convergence_csv(&report, w))?;
            out.text("convergence.json", &serde_json::to_string_pretty(&report)?)?;
            summary.insert("slope".into(), json!(report.slope));
            summary.insert("degenerate".into(), json!(report.degenerate));
            ExitKind::Ok
        }
        TaskConfig::UniqueMonitor { n_paths, delta } => {
            let u0 = cfg.initial_field(&eq)?;
            let solver = cfg.solver_config(&eq)?;
            let report = uniqueness_study(&eq, &u0, *delta, &solver, *n_paths)?;
            out.with("monitor.csv", |w| report.write_csv(w))?;
            out.text("monitor.json", &serde_json::to_string_pretty(&report)?)?;
            summary.insert("paths_used".into(), json!(report.paths_used));
            summary.insert("worst_increase".into(), json!(report.worst_increase()));
            ExitKind::Ok
        }
    };

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        task: task.name().to_string(),
        config_hash: cfg.hash(),
        seed: cfg.solver.seed,
        equation: equation_name(&cfg.equation).to_string(),
        m: eq.basis().m(),
        dt: cfg.solver.dt,
        t_end: cfg.solver.t_end,
        ledger: eq.ledger().clone(),
        conventions: conventions(&eq),
        outputs: out.written.clone(),
        summary,
        status,
        exit_code: status.code(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    out.text(MANIFEST_FILE, &serde_json::to_string_pretty(&manifest)?)?;
    Ok(RunOutcome {
        manifest,
        out_dir: out_dir.to_path_buf(),
    })
}

fn equation_name(e: &EquationConfig) -> &'static str {
    match e {
        EquationConfig::Semilinear { .. } => "semilinear",
        EquationConfig::Burgers { .. } => "burgers",
        EquationConfig::Fractional { .. } => "fractional",
    }
}

fn conventions(eq: &Equation) -> Vec<String> {
    let mut v = vec!["time steps are in model time; Itô calculus; one scalar Wiener process per diffusion".to_string()];
    for d in &eq.spec().diffusions {
        if let DiffusionSpec::FractionalHalf { .. } = d {
            v.push(
                "mode SDE dû_k = −k²û_k dt + 2γ|k|û_k dW, so E|û_k(t)|^p = |û_k(0)|^p exp(p k² (2γ²(p−1) − 1) t)"
                    .to_string(),
            );
        }
    }
    if matches!(eq.spec().drift, DriftSpec::Burgers) {
        v.push("Burgers drift Δu + u∂ₓu evaluated pseudo-spectrally with 3/2 dealiasing".to_string());
    }
    v
}

fn run_checks(eq: &Equation, plan: &SamplePlan, p0: Option<f64>) -> Result<AssumptionReport> {
    let mut report = check_all(eq, plan)?;
    if let Some(p0) = p0 {
        report.merge(check_coercivity(eq, p0, plan)?);
    }
    if matches!(eq.spec().drift, DriftSpec::Burgers) {
        report.merge(check_burgers_neutrality(eq, plan)?);
    }
    Ok(report)
}

#[derive(Serialize)]
struct PathRecord {
    path_id: u64,
    steps: usize,
    exploded: Option<u64>,
    sup_h_norm: f64,
    max_abs_energy_residual: f64,
    max_galerkin_consistency_residual: f64,
}

fn simulate(
    cfg: &ExperimentConfig,
    eq: &Equation,
    paths: usize,
    format: TrajectoryFormat,
    fail_on_explosion: bool,
    out: &mut Outputs,
    summary: &mut BTreeMap<String, Value>,
) -> Result<ExitKind> {
    let u0 = cfg.initial_field(eq)?;
    let base = cfg.solver_config(eq)?;
    let mut records = Vec::with_capacity(paths);
    let mut residual_rows = String::from("path_id,step,residual\n");
    for p in 0..paths as u64 {
        let solver = base.clone().with_path(p);
        let (traj, diag) = solve_path(eq, &u0, &solver)?;
        if matches!(format, TrajectoryFormat::Csv | TrajectoryFormat::Both) {
            out.with(&format!("trajectory_{p:04}.csv"), |w| write_csv(&traj, w))?;
        }
        if matches!(format, TrajectoryFormat::Binary | TrajectoryFormat::Both) {
            out.with(&format!("trajectory_{p:04}.bin"), |w| write_binary(&traj, w))?;
        }
        for (n, r) in diag.energy_residual.iter().enumerate() {
            residual_rows.push_str(&format!("{p},{n},{r}\n"));
        }
        let consistency = galerkin_consistency_residual(eq, &traj, &solver)?;
        records.push(PathRecord {
            path_id: p,
            steps: traj.increments.len(),
            exploded: diag.exploded,
            sup_h_norm: diag.sup_h_norm,
            max_abs_energy_residual: diag.energy_residual.iter().fold(0.0, |a: f64, x| a.max(x.abs())),
            max_galerkin_consistency_residual: consistency.iter().fold(0.0, |a: f64, x| a.max(*x)),
        });
    }
    out.text("energy_residual.csv", &residual_rows)?;
    out.text("diagnostics.json", &serde_json::to_string_pretty(&records)?)?;
    let exploded = records.iter().filter(|r| r.exploded.is_some()).count();
    summary.insert("paths".into(), json!(paths));
    summary.insert("exploded_paths".into(), json!(exploded));
    Ok(if fail_on_explosion && exploded > 0 {
        ExitKind::Explosion
    } else {
        ExitKind::Ok
    })
}

/// Tracks files written into the output directory.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        }
    }

    fn with(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(self.dir.join(name))?);
        f(&mut w)?;
        w.flush()?;
        if name != MANIFEST_FILE {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    fn text(&mut self, name: &str, s: &str) -> Result<()> {
        self.with(name, |w| Ok(w.write_all(s.as_bytes())?))
    }
}
