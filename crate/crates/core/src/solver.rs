//! Time stepping for the Galerkin system.
//!
//! The Laplacian is diagonal in both bases, so the semi-implicit scheme is a
//! per-mode division by (1 + dt·λ_k). Everything else is explicit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{CounterIncrements, IncrementSource};
use crate::operators::{ConstantsLedger, DriftSpec, Equation};
use crate::spectral::{BasisKind, BasisSpec, SpectralField};

/// |u|_H beyond which a path is flagged as exploded.
pub const EXPLOSION_THRESHOLD: f64 = 1e12;
pub const DEFAULT_TAMING_THRESHOLD: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    SemiImplicitEm,
    ExplicitEm,
    /// Semi-implicit with N replaced by N/(1+dt|N|_H) once dt|N|_H exceeds the threshold.
    TamedEm,
}

impl Scheme {
    /// Tamed for Burgers, semi-implicit otherwise.
    pub fn default_for(drift: &DriftSpec) -> Self {
        match drift {
            DriftSpec::Burgers => Scheme::TamedEm,
            _ => Scheme::SemiImplicitEm,
        }
    }
}

/// Time-stepping parameters. The Galerkin dimension is carried by the
/// equation's basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    #[serde(default = "default_taming")]
    pub taming_threshold: f64,
    /// Number of Wiener drivers kept; all when absent.
    #[serde(default)]
    pub noise_truncation: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub path_id: u64,
}

fn default_taming() -> f64 {
    DEFAULT_TAMING_THRESHOLD
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64, scheme: Scheme) -> Self {
        Self {
            dt,
            t_end,
            scheme,
            taming_threshold: DEFAULT_TAMING_THRESHOLD,
            noise_truncation: None,
            seed: 0,
            path_id: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_path(mut self, path_id: u64) -> Self {
        self.path_id = path_id;
        self
    }

    /// Number of steps T/dt; rejects horizons that are not a whole number of steps.
    pub fn steps(&self) -> Result<u64> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid("t_end", "must be nonnegative and finite"));
        }
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(Error::invalid(
                "t_end",
                format!("{} is not a whole number of steps of {}", self.t_end, self.dt),
            ));
        }
        Ok(n as u64)
    }

    pub fn active_drivers(&self, eq: &Equation) -> Result<usize> {
        let total = eq.drivers();
        match self.noise_truncation {
            None => Ok(total),
            Some(0) => Err(Error::invalid("noise_truncation", "must be at least 1")),
            Some(j) if j > total => Err(Error::invalid(
                "noise_truncation",
                format!("{j} exceeds the {total} configured diffusions"),
            )),
            Some(j) => Ok(j),
        }
    }

    pub fn validate(&self, eq: &Equation) -> Result<()> {
        self.steps()?;
        self.active_drivers(eq)?;
        if !(self.taming_threshold >= 0.0) {
            return Err(Error::invalid("taming_threshold", "must be nonnegative"));
        }
        Ok(())
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        Ok((0..=self.steps()?).map(|n| n as f64 * self.dt).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Advanced(SpectralField),
    Exploded { reason: String },
}

impl StepOutcome {
    pub fn field(self) -> Option<SpectralField> {
        match self {
            StepOutcome::Advanced(u) => Some(u),
            StepOutcome::Exploded { .. } => None,
        }
    }
}

fn advance(eq: &Equation, u: &SpectralField, dw: &[f64], cfg: &SolverConfig) -> Result<SpectralField> {
    let dt = cfg.dt;
    let basis = eq.basis().clone();
    let nonlinear = eq.drift_nonlinear(u)?;
    let mut rhs = u.clone();

    if let Some(n) = &nonlinear {
        let factor = match cfg.scheme {
            Scheme::TamedEm => {
                let size = dt * n.h_norm();
                if size > cfg.taming_threshold {
                    1.0 / (1.0 + size)
                } else {
                    1.0
                }
            }
            _ => 1.0,
        };
        rhs.axpy(dt * factor, n);
    }
    for (j, &w) in dw.iter().enumerate() {
        let b = eq.apply_diffusion(j, u)?;
        rhs.axpy(w, &b);
    }
    match cfg.scheme {
        Scheme::SemiImplicitEm | Scheme::TamedEm => {
            rhs.scale_modes(|i| 1.0 / (1.0 + dt * basis.eigenvalue(i)));
        }
        Scheme::ExplicitEm => {
            rhs.axpy(dt, &eq.laplacian(u));
        }
    }
    Ok(rhs)
}

fn blown_up(u: &SpectralField) -> Option<String> {
    if !u.is_finite() {
        return Some("non-finite coefficient".into());
    }
    let h = u.h_norm();
    (h > EXPLOSION_THRESHOLD).then(|| format!("|u|_H = {h:.3e} exceeds {EXPLOSION_THRESHOLD:e}"))
}

fn check_increments(eq: &Equation, cfg: &SolverConfig, dw: &[f64]) -> Result<()> {
    let active = cfg.active_drivers(eq)?;
    if dw.len() != active {
        return Err(Error::NoiseMismatch(format!(
            "expected {active} increments, got {}",
            dw.len()
        )));
    }
    Ok(())
}

/// One step of the configured scheme. Blow-up is reported as an outcome.
pub fn step(eq: &Equation, u: &SpectralField, dw: &[f64], cfg: &SolverConfig) -> Result<StepOutcome> {
    check_increments(eq, cfg, dw)?;
    match advance(eq, u, dw, cfg) {
        Ok(next) => Ok(match blown_up(&next) {
            Some(reason) => StepOutcome::Exploded { reason },
            None => StepOutcome::Advanced(next),
        }),
        Err(Error::Overflow { context, magnitude }) => Ok(StepOutcome::Exploded {
            reason: format!("overflow in {context} (magnitude {magnitude:e})"),
        }),
        Err(e) => Err(e),
    }
}

/// Π_m u0 expressed in the equation's basis.
pub fn initial_projection(eq: &Equation, u0: &SpectralField) -> Result<SpectralField> {
    if u0.basis() == eq.basis() {
        return Ok(u0.clone());
    }
    if u0.basis().kind() != eq.basis().kind() {
        return Err(Error::BasisMismatch(format!(
            "initial data in {:?}, equation in {:?}",
            u0.basis().kind(),
            eq.basis().kind()
        )));
    }
    let mut v = u0.to_real_vec();
    v.resize(eq.basis().m(), 0.0);
    SpectralField::from_real_vec(eq.basis(), &v)
}

#[derive(Clone, Debug)]
pub struct PathSummary {
    pub final_state: SpectralField,
    pub steps_taken: u64,
    pub exploded: Option<u64>,
    pub sup_h_norm: f64,
}

/// Runs one path, calling `observer(n, u_n)` for n = 0 and after every
/// successful step. Stops at the first exploded step.
pub fn integrate<S, F>(
    eq: &Equation,
    u0: &SpectralField,
    cfg: &SolverConfig,
    source: &S,
    mut observer: F,
) -> Result<PathSummary>
where
    S: IncrementSource + ?Sized,
    F: FnMut(u64, &SpectralField, &[f64]),
{
    cfg.validate(eq)?;
    check_source(source, cfg)?;
    let steps = cfg.steps()?;
    let drivers = cfg.active_drivers(eq)?;
    let mut u = initial_projection(eq, u0)?;
    let mut sup = u.h_norm();
    let mut dw = Vec::with_capacity(drivers);
    observer(0, &u, &[]);
    for n in 0..steps {
        source.increments(cfg.path_id, n, drivers, &mut dw);
        match step(eq, &u, &dw, cfg)? {
            StepOutcome::Advanced(next) => {
                u = next;
                sup = sup.max(u.h_norm());
                observer(n + 1, &u, &dw);
            }
            StepOutcome::Exploded { .. } => {
                return Ok(PathSummary {
                    final_state: u,
                    steps_taken: n,
                    exploded: Some(n + 1),
                    sup_h_norm: sup,
                });
            }
        }
    }
    Ok(PathSummary {
        final_state: u,
        steps_taken: steps,
        exploded: None,
        sup_h_norm: sup,
    })
}

fn check_source<S: IncrementSource + ?Sized>(source: &S, cfg: &SolverConfig) -> Result<()> {
    if (source.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
        return Err(Error::NoiseMismatch(format!(
            "increment source has dt = {}, solver dt = {}",
            source.dt(),
            cfg.dt
        )));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dt: f64,
    pub seed: u64,
    pub path_id: u64,
    pub times: Vec<f64>,
    /// u_0 .. u_n for every completed step.
    pub fields: Vec<SpectralField>,
    /// increments[n] drove the step from fields[n] to fields[n+1].
    pub increments: Vec<Vec<f64>>,
    pub exploded: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PathDiagnostics {
    pub energy_residual: Vec<f64>,
    pub sup_h_norm: f64,
    pub exploded: Option<u64>,
}

/// Path driven by counter-based increments keyed on (seed, path_id, step, driver).
pub fn solve_path(
    eq: &Equation,
    u0: &SpectralField,
    cfg: &SolverConfig,
) -> Result<(Trajectory, PathDiagnostics)> {
    solve_path_with(eq, u0, cfg, &CounterIncrements::new(cfg.seed, cfg.dt))
}

pub fn solve_path_with<S: IncrementSource + ?Sized>(
    eq: &Equation,
    u0: &SpectralField,
    cfg: &SolverConfig,
    source: &S,
) -> Result<(Trajectory, PathDiagnostics)> {
    let mut fields = Vec::new();
    let mut increments = Vec::new();
    let summary = integrate(eq, u0, cfg, source, |n, u, dw| {
        fields.push(u.clone());
        if n > 0 {
            increments.push(dw.to_vec());
        }
    })?;
    let times = (0..fields.len()).map(|n| n as f64 * cfg.dt).collect();
    let traj = Trajectory {
        dt: cfg.dt,
        seed: cfg.seed,
        path_id: cfg.path_id,
        times,
        fields,
        increments,
        exploded: summary.exploded,
    };
    let energy_residual = energy_residual(eq, &traj)?;
    let diag = PathDiagnostics {
        energy_residual,
        sup_h_norm: summary.sup_h_norm,
        exploded: summary.exploded,
    };
    Ok((traj, diag))
}

/// Per-step residual of the discrete Itô identity for |u|_H²:
///
///   |u_{n+1}|² − |u_n|² − dt(2⟨A(u_n),u_n⟩ + Σ|B^j(u_n)|²) − 2Σ(u_n,B^j(u_n))ΔW^j_n
pub fn energy_residual(eq: &Equation, traj: &Trajectory) -> Result<Vec<f64>> {
    let basis = eq.basis();
    traj.increments
        .iter()
        .enumerate()
        .map(|(n, dw)| {
            let u = &traj.fields[n];
            let next = &traj.fields[n + 1];
            let drift = eq.drift_nonlinear(u)?.map_or(0.0, |nl| nl.inner(u))
                - u.weighted_sq_sum(|i| basis.eigenvalue(i));
            let mut b_sq = 0.0;
            let mut mart = 0.0;
            for (j, &w) in dw.iter().enumerate() {
                let b = eq.apply_diffusion(j, u)?;
                b_sq += b.h_norm_sq();
                mart += u.inner(&b) * w;
            }
            Ok(next.h_norm_sq() - u.h_norm_sq() - traj.dt * (2.0 * drift + b_sq) - 2.0 * mart)
        })
        .collect()
}

/// Max-norm defect of each recorded step against the scheme re-evaluated with
/// nonlinear terms computed on a quadrature grid twice as fine. With exact
/// dealiasing this is roundoff.
pub fn galerkin_consistency_residual(
    eq: &Equation,
    traj: &Trajectory,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let spec = eq.basis().spec();
    let fine_points = match spec.kind {
        BasisKind::DirichletSine => 2 * (spec.grid_points + 1) - 1,
        BasisKind::FourierTorus => 2 * spec.grid_points,
    };
    let fine_basis = BasisSpec::new(spec.kind, spec.m, fine_points)?;
    let fine = Equation::new(eq.spec().clone().with_basis(fine_basis))?;
    traj.increments
        .iter()
        .enumerate()
        .map(|(n, dw)| {
            let u = SpectralField::from_real_vec(fine.basis(), &traj.fields[n].to_real_vec())?;
            let next = advance(&fine, &u, dw, cfg)?.to_real_vec();
            let have = traj.fields[n + 1].to_real_vec();
            let scale = 1.0 + have.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            Ok(next
                .iter()
                .zip(&have)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
                / scale)
        })
        .collect()
}

/// M_n = exp(−Σ_{i<n} ρ(b_i)·dt)·|a_n − b_n|_H² for two paths sharing noise.
pub fn uniqueness_monitor(
    ledger: &ConstantsLedger,
    a: &Trajectory,
    b: &Trajectory,
) -> Result<Vec<f64>> {
    if a.dt != b.dt {
        return Err(Error::NoiseMismatch(format!("dt {} vs {}", a.dt, b.dt)));
    }
    if a.fields.len() != b.fields.len() || a.increments != b.increments {
        return Err(Error::NoiseMismatch(
            "trajectories are not driven by the same increments".into(),
        ));
    }
    if ledger.l.is_none() {
        return Err(Error::invalid("L", "ledger has no finite local-monotonicity constant"));
    }
    let mut log_weight: f64 = 0.0;
    let mut out = Vec::with_capacity(a.fields.len());
    for (ua, ub) in a.fields.iter().zip(&b.fields) {
        out.push(log_weight.exp() * ua.sub(ub).h_norm_sq());
        log_weight -= ledger.rho_from_norms(ub.v_norm(), ub.h_norm()) * a.dt;
    }
    Ok(out)
}

/// Writes `time,mode,re,im`, one row per stored coefficient. Torus modes are
/// the wavenumbers k = 0..K of the stored half spectrum.
pub fn write_csv<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    writeln!(w, "time,mode,re,im")?;
    for (t, u) in traj.times.iter().zip(&traj.fields) {
        let basis = u.basis();
        for i in 0..u.stored_len() {
            let c = u.coefficient(i);
            writeln!(w, "{t},{},{},{}", basis.wavenumber(i), c.re, c.im)?;
        }
    }
    Ok(())
}

pub const BINARY_MAGIC: &[u8; 4] = b"SGTR";
pub const BINARY_VERSION: u32 = 1;

/// Contents of a binary trajectory file.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryFile {
    pub kind: BasisKind,
    pub m: usize,
    pub dt: f64,
    /// One packed real vector (see `SpectralField::to_real_vec`) per time.
    pub values: Vec<Vec<f64>>,
}

/// Little-endian layout: magic "SGTR", u32 version, u32 kind (0 sine,
/// 1 Fourier), u64 m, u64 number of time points, f64 dt, then m f64 values
/// per time point.
pub fn write_binary<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    let first = &traj.fields[0];
    let kind: u32 = match first.basis().kind() {
        BasisKind::DirichletSine => 0,
        BasisKind::FourierTorus => 1,
    };
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    w.write_all(&kind.to_le_bytes())?;
    w.write_all(&(first.basis().m() as u64).to_le_bytes())?;
    w.write_all(&(traj.fields.len() as u64).to_le_bytes())?;
    w.write_all(&traj.dt.to_le_bytes())?;
    for u in &traj.fields {
        for x in u.to_real_vec() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<TrajectoryFile> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Config("not a trajectory file (bad magic)".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != BINARY_VERSION {
        return Err(Error::Config(format!("unsupported trajectory version {version}")));
    }
    r.read_exact(&mut b4)?;
    let kind = match u32::from_le_bytes(b4) {
        0 => BasisKind::DirichletSine,
        1 => BasisKind::FourierTorus,
        other => return Err(Error::Config(format!("unknown basis code {other}"))),
    };
    r.read_exact(&mut b8)?;
    let m = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let steps = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let dt = f64::from_le_bytes(b8);
    let mut values = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut row = Vec::with_capacity(m);
        for _ in 0..m {
            r.read_exact(&mut b8)?;
            row.push(f64::from_le_bytes(b8));
        }
        values.push(row);
    }
    Ok(TrajectoryFile { kind, m, dt, values })
}
