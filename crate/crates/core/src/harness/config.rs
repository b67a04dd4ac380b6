//! Experiment configuration schema (TOML, or JSON with the same layout).
//!
//! ```toml
//! [equation]
//! name = "fractional"          # semilinear | burgers | fractional
//! gamma = 0.316227766
//! p0 = 4.0
//!
//! [basis]
//! m = 3                        # torus: m = 2K+1
//!
//! [initial]
//! kind = "single-mode"
//! k = 1
//! amplitude = 1.0
//!
//! [solver]
//! dt = 5e-4                    # model time
//! t_end = 0.5
//! seed = 2024
//!
//! [task]
//! kind = "moments"
//! p_list = [2.0]
//! n_paths = 10000
//! track_mode = 1
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::functions::ScalarFn;
use crate::noise::CounterStream;
use crate::operators::{EquationSpec, DEFAULT_EPSILON};
use crate::solver::{Scheme, SolverConfig, DEFAULT_TAMING_THRESHOLD};
use crate::spectral::{BasisKind, BasisSpec, SpectralField};
use crate::operators::Equation;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub equation: EquationConfig,
    pub basis: BasisConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskConfig>,
    /// Manifest of an earlier run whose constants ledger is reused verbatim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen_ledger: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EquationConfig {
    Semilinear {
        gamma: f64,
        #[serde(default)]
        g: ScalarFn,
        #[serde(default)]
        f: ScalarFn,
        #[serde(default)]
        h: ScalarFn,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f_const: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p0: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    Burgers {
        gamma: f64,
        #[serde(default)]
        h: ScalarFn,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f_const: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p0: Option<f64>,
    },
    Fractional {
        gamma: f64,
        #[serde(default = "default_p0")]
        p0: f64,
    },
}

fn default_p0() -> f64 {
    4.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    /// Galerkin dimension; odd (2K+1) on the torus.
    pub m: usize,
    /// Quadrature grid size N; dealiased default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    Zero,
    SingleMode { k: usize, amplitude: f64 },
    Random { decay: f64, amplitude: f64, seed: u64 },
    /// Packed real coefficients (torus: c_0, Re c_1, Im c_1, ...).
    Coefficients { values: Vec<f64> },
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::SingleMode {
            k: 1,
            amplitude: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    /// Tamed for Burgers, semi-implicit otherwise, when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_taming")]
    pub taming_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_truncation: Option<usize>,
}

fn default_taming() -> f64 {
    DEFAULT_TAMING_THRESHOLD
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryFormat {
    Csv,
    Binary,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskConfig {
    Simulate {
        #[serde(default = "one")]
        paths: usize,
        #[serde(default = "default_format")]
        format: TrajectoryFormat,
        #[serde(default = "yes")]
        fail_on_explosion: bool,
    },
    Moments {
        #[serde(default = "default_p_list")]
        p_list: Vec<f64>,
        #[serde(default = "default_paths")]
        n_paths: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        track_mode: Option<usize>,
        /// Frozen constant for the a priori bound check.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c_budget: Option<f64>,
        #[serde(default)]
        fail_on_explosion: bool,
    },
    Check {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p0: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sample_seed: Option<u64>,
    },
    Sharpness {
        gamma2_grid: Vec<f64>,
        #[serde(default = "default_p_grid")]
        p_grid: Vec<f64>,
        #[serde(default = "one")]
        k: usize,
        /// Monte Carlo paths per subcritical cell; 0 reports the oracle only.
        #[serde(default)]
        n_paths: usize,
    },
    Convergence {
        dt_list: Vec<f64>,
        #[serde(default = "default_paths")]
        n_paths: usize,
        #[serde(default = "one")]
        k: usize,
    },
    UniqueMonitor {
        #[serde(default = "default_paths")]
        n_paths: usize,
        #[serde(default = "default_delta")]
        delta: f64,
    },
}

fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_format() -> TrajectoryFormat {
    TrajectoryFormat::Csv
}
fn default_p_list() -> Vec<f64> {
    vec![2.0]
}
fn default_paths() -> usize {
    100
}
fn default_samples() -> usize {
    1000
}
fn default_p_grid() -> Vec<f64> {
    vec![4.0]
}
fn default_delta() -> f64 {
    1e-3
}

impl TaskConfig {
    pub fn name(&self) -> &'static str {
        match self {
            TaskConfig::Simulate { .. } => "simulate",
            TaskConfig::Moments { .. } => "moments",
            TaskConfig::Check { .. } => "check",
            TaskConfig::Sharpness { .. } => "sharpness",
            TaskConfig::Convergence { .. } => "convergence",
            TaskConfig::UniqueMonitor { .. } => "unique-monitor",
        }
    }

    /// Task of the given kind with every parameter at its default.
    pub fn default_for(name: &str) -> Result<Self> {
        let toml = format!("kind = \"{name}\"\n{}", match name {
            "sharpness" => "gamma2_grid = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45]",
            "convergence" => "dt_list = [2e-3, 1e-3, 5e-4, 2.5e-4]",
            _ => "",
        });
        toml::from_str(&toml).map_err(|e| Error::Config(format!("task: {e}")))
    }

    /// Replaces the path or sample count.
    pub fn set_paths(&mut self, n: usize) {
        match self {
            TaskConfig::Simulate { paths, .. } => *paths = n,
            TaskConfig::Moments { n_paths, .. }
            | TaskConfig::Sharpness { n_paths, .. }
            | TaskConfig::Convergence { n_paths, .. }
            | TaskConfig::UniqueMonitor { n_paths, .. } => *n_paths = n,
            TaskConfig::Check { samples, .. } => *samples = n,
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML, or JSON when the text starts with '{'.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(format!("json: {e}")))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(format!("toml: {e}")))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("serialize: {e}")))
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let eq = self.equation_spec()?;
        let equation = Equation::new(eq)?;
        self.solver_config(&equation)?.validate(&equation)?;
        self.initial_field(&equation)?;
        if let Some(task) = &self.task {
            validate_task(task)?;
        }
        Ok(())
    }

    pub fn equation_spec(&self) -> Result<EquationSpec> {
        let m = self.basis.m;
        let mut spec = match &self.equation {
            EquationConfig::Semilinear {
                gamma,
                g,
                f,
                h,
                f_const,
                p0,
                epsilon,
            } => {
                for (name, func) in [("g", g), ("f", f), ("h", h)] {
                    func.validate(name).map_err(Error::Config)?;
                }
                let mut s = EquationSpec::semilinear(m, *gamma, *g, *f, *h)?;
                s.f_const = *f_const;
                s.p0 = p0.unwrap_or(s.p0);
                s.epsilon = epsilon.unwrap_or(DEFAULT_EPSILON);
                s
            }
            EquationConfig::Burgers {
                gamma,
                h,
                f_const,
                p0,
            } => {
                h.validate("h").map_err(Error::Config)?;
                let mut s = EquationSpec::burgers(m, *gamma, *h)?;
                s.f_const = *f_const;
                s.p0 = p0.unwrap_or(s.p0);
                s
            }
            EquationConfig::Fractional { gamma, p0 } => {
                if m.is_multiple_of(2) {
                    return Err(Error::Config(format!(
                        "basis.m: torus dimension must be odd (2K+1), got {m}"
                    )));
                }
                EquationSpec::fractional((m - 1) / 2, *gamma, *p0)?
            }
        };
        if let Some(n) = self.basis.grid_points {
            let kind = spec.basis.kind;
            spec = spec.with_basis(BasisSpec::new(kind, m, n)?);
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn scheme(&self, spec: &EquationSpec) -> Scheme {
        self.solver.scheme.unwrap_or_else(|| Scheme::default_for(&spec.drift))
    }

    pub fn solver_config(&self, eq: &Equation) -> Result<SolverConfig> {
        let s = &self.solver;
        let cfg = SolverConfig {
            dt: s.dt,
            t_end: s.t_end,
            scheme: self.scheme(eq.spec()),
            taming_threshold: s.taming_threshold,
            noise_truncation: s.noise_truncation,
            seed: s.seed,
            path_id: 0,
        };
        cfg.validate(eq)?;
        Ok(cfg)
    }

    pub fn initial_field(&self, eq: &Equation) -> Result<SpectralField> {
        let basis = eq.basis();
        match &self.initial {
            InitialConfig::Zero => Ok(SpectralField::zeros(basis)),
            InitialConfig::SingleMode { k, amplitude } => {
                SpectralField::single_mode(basis, *k, *amplitude)
            }
            InitialConfig::Random {
                decay,
                amplitude,
                seed,
            } => {
                let mut stream = CounterStream::new(*seed, 0, 0);
                Ok(SpectralField::random(basis, *decay, *amplitude, &mut stream))
            }
            InitialConfig::Coefficients { values } => SpectralField::from_real_vec(basis, values),
        }
    }

    pub fn basis_kind(&self) -> BasisKind {
        match self.equation {
            EquationConfig::Fractional { .. } => BasisKind::FourierTorus,
            _ => BasisKind::DirichletSine,
        }
    }
}

fn validate_task(task: &TaskConfig) -> Result<()> {
    let bad = |field: &str, why: &str| Err(Error::Config(format!("task.{field}: {why}")));
    match task {
        TaskConfig::Simulate { paths, .. } if *paths == 0 => bad("paths", "must be at least 1"),
        TaskConfig::Moments { n_paths, .. } if *n_paths < 2 => bad("n_paths", "must be at least 2"),
        TaskConfig::Check { samples, .. } if *samples == 0 => bad("samples", "must be at least 1"),
        TaskConfig::Sharpness {
            gamma2_grid,
            p_grid,
            k,
            ..
        } => {
            if gamma2_grid.is_empty() || p_grid.is_empty() {
                return bad("gamma2_grid/p_grid", "grids must be nonempty");
            }
            if gamma2_grid.iter().any(|g| !(*g >= 0.0)) {
                return bad("gamma2_grid", "entries must be nonnegative");
            }
            if p_grid.iter().any(|p| !(*p >= 2.0)) {
                return bad("p_grid", "entries must be at least 2");
            }
            if *k == 0 {
                return bad("k", "must be at least 1");
            }
            Ok(())
        }
        TaskConfig::Convergence { dt_list, n_paths, k } => {
            if dt_list.len() < 3 {
                return bad("dt_list", "need at least 3 step sizes");
            }
            if dt_list.iter().any(|d| !(*d > 0.0)) {
                return bad("dt_list", "step sizes must be positive");
            }
            if *n_paths == 0 || *k == 0 {
                return bad("n_paths/k", "must be at least 1");
            }
            Ok(())
        }
        TaskConfig::UniqueMonitor { n_paths, delta } => {
            if *n_paths < 2 {
                return bad("n_paths", "must be at least 2");
            }
            if !delta.is_finite() {
                return bad("delta", "must be finite");
            }
            Ok(())
        }
        _ => Ok(()),
    }
}
