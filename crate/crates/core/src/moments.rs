//! Monte Carlo estimates of moment functionals of the Galerkin solution.
//!
//! Paths are processed in fixed-size chunks in parallel; chunk sums are then
//! folded in ascending path order, so every number in a report is independent
//! of the number of worker threads.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{CounterIncrements, CounterStream};
use crate::operators::{ConstantsLedger, Equation, EquationSpec};
use crate::solver::{integrate, solve_path_with, uniqueness_monitor, SolverConfig};
use crate::spectral::SpectralField;

/// Paths per reduction chunk. Fixed so sums do not depend on the thread pool.
const CHUNK: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentRequest {
    /// Exponents p for E sup_t |u_t|_H^p and the E|u_t|_H^p series.
    pub p_list: Vec<f64>,
    pub p0: f64,
    pub alpha: f64,
    pub n_paths: usize,
    /// Wavenumber whose coefficient moments E|c_k(t)|^p are tracked, for p₀
    /// and every p in `p_list`.
    #[serde(default)]
    pub track_mode: Option<usize>,
}

impl MomentRequest {
    pub fn new(p_list: Vec<f64>, p0: f64, alpha: f64, n_paths: usize) -> Self {
        Self {
            p_list,
            p0,
            alpha,
            n_paths,
            track_mode: None,
        }
    }

    pub fn tracking(mut self, k: usize) -> Self {
        self.track_mode = Some(k);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::invalid("n_paths", "need at least 2 paths for a standard error"));
        }
        if !(self.p0 >= 2.0 && self.alpha > 1.0) {
            return Err(Error::invalid("p0/alpha", "need p0 ≥ 2 and alpha > 1"));
        }
        for &p in &self.p_list {
            if !(2.0..=self.p0).contains(&p) {
                return Err(Error::invalid("p_list", format!("p = {p} outside [2, p0 = {}]", self.p0)));
            }
            if p == self.p0 && self.p0 > 2.0 {
                return Err(Error::invalid(
                    "p_list",
                    format!(
                        "E sup_t |u_t|^p is only covered by the a priori bound for p < p0 when p0 > 2 (got p = p0 = {p})"
                    ),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation / √n.
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PEstimate {
    pub p: f64,
    pub mean: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub p: f64,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub m: usize,
    pub n_paths: usize,
    pub paths_used: usize,
    pub explosion_fraction: f64,
    pub p0: f64,
    pub alpha: f64,
    pub t_end: f64,
    /// max over the grid of the sample mean of |u_t|_H^{p₀}, with its SE.
    pub sup_t_mean_hp: Option<Estimate>,
    pub sup_t_argmax: Option<f64>,
    pub mean_sup_hp: Vec<PEstimate>,
    /// E Σ_n |u_n|_V^α dt (left endpoint).
    pub int_v_alpha: Option<Estimate>,
    /// E Σ_n |u_n|_H^{p₀−2}|u_n|_V^α dt (left endpoint).
    pub mixed: Option<Estimate>,
    pub times: Vec<f64>,
    pub series: Vec<Series>,
    pub ledger: ConstantsLedger,
}

/// Per-path values, kept until the path is known not to have exploded.
struct PathValues {
    exploded: bool,
    /// Row-major [time][series]
    series: Vec<f64>,
    sup: Vec<f64>,
    int_v: f64,
    mixed: f64,
}

#[derive(Clone)]
struct Sums {
    used: usize,
    exploded: usize,
    series: Vec<(f64, f64)>,
    sup: Vec<(f64, f64)>,
    int_v: (f64, f64),
    mixed: (f64, f64),
}

impl Sums {
    fn new(n_series: usize, n_sup: usize) -> Self {
        Self {
            used: 0,
            exploded: 0,
            series: vec![(0.0, 0.0); n_series],
            sup: vec![(0.0, 0.0); n_sup],
            int_v: (0.0, 0.0),
            mixed: (0.0, 0.0),
        }
    }

    fn add_path(&mut self, v: &PathValues) {
        if v.exploded {
            self.exploded += 1;
            return;
        }
        self.used += 1;
        let acc = |s: &mut (f64, f64), x: f64| {
            s.0 += x;
            s.1 += x * x;
        };
        for (s, &x) in self.series.iter_mut().zip(&v.series) {
            acc(s, x);
        }
        for (s, &x) in self.sup.iter_mut().zip(&v.sup) {
            acc(s, x);
        }
        acc(&mut self.int_v, v.int_v);
        acc(&mut self.mixed, v.mixed);
    }

    fn fold(&mut self, other: &Sums) {
        self.used += other.used;
        self.exploded += other.exploded;
        let add = |a: &mut (f64, f64), b: &(f64, f64)| {
            a.0 += b.0;
            a.1 += b.1;
        };
        for (a, b) in self.series.iter_mut().zip(&other.series) {
            add(a, b);
        }
        for (a, b) in self.sup.iter_mut().zip(&other.sup) {
            add(a, b);
        }
        add(&mut self.int_v, &other.int_v);
        add(&mut self.mixed, &other.mixed);
    }
}

fn finish(s: (f64, f64), n: usize) -> Estimate {
    let nf = n as f64;
    let mean = s.0 / nf;
    let var = if n > 1 {
        ((s.1 - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Estimate {
        mean,
        se: (var / nf).sqrt(),
    }
}

/// Runs `f` for path ids first..first+n in fixed chunks and folds the chunk
/// results in path order.
pub(crate) fn chunked<T, F, G>(n: usize, init: impl Fn() -> T + Sync, f: F, fold: G) -> Result<T>
where
    T: Send,
    F: Fn(&mut T, usize) -> Result<()> + Sync,
    G: Fn(&mut T, &T),
{
    let chunks: Vec<Result<T>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                f(&mut acc, i)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = init();
    for c in chunks {
        fold(&mut total, &c?);
    }
    Ok(total)
}

/// Moment functionals over `req.n_paths` independent paths with path ids
/// `cfg.path_id .. cfg.path_id + n_paths`.
pub fn estimate(
    eq: &Equation,
    u0: &SpectralField,
    cfg: &SolverConfig,
    req: &MomentRequest,
) -> Result<MomentReport> {
    req.validate()?;
    cfg.validate(eq)?;
    let steps = cfg.steps()? as usize;
    let n_times = steps + 1;
    let mut names: Vec<(String, f64)> = vec![("E|u|_H^p".into(), req.p0)];
    for &p in &req.p_list {
        if p != req.p0 {
            names.push(("E|u|_H^p".into(), p));
        }
    }
    let mode_slot = match req.track_mode {
        Some(k) => {
            let probe = SpectralField::single_mode(eq.basis(), k, 1.0)?;
            let slot = (0..probe.stored_len())
                .find(|&i| probe.mode_sq(i) > 0.0)
                .expect("single mode has one slot");
            let exps: Vec<f64> = names.iter().map(|(_, p)| *p).collect();
            for p in exps {
                names.push((format!("E|c_{k}|^p"), p));
            }
            Some(slot)
        }
        None => None,
    };
    let n_series = names.len();
    let source = CounterIncrements::new(cfg.seed, cfg.dt);
    let dt = cfg.dt;

    let sums = chunked(
        req.n_paths,
        || Sums::new(n_series * n_times, req.p_list.len()),
        |acc, i| {
            let path_cfg = cfg.clone().with_path(cfg.path_id + i as u64);
            let mut v = PathValues {
                exploded: false,
                series: vec![0.0; n_series * n_times],
                sup: vec![0.0; req.p_list.len()],
                int_v: 0.0,
                mixed: 0.0,
            };
            let summary = integrate(eq, u0, &path_cfg, &source, |n, u, _| {
                let n = n as usize;
                let h = u.h_norm();
                let row = &mut v.series[n * n_series..(n + 1) * n_series];
                for (slot, (name, p)) in row.iter_mut().zip(&names) {
                    *slot = if name.starts_with("E|c_") {
                        u.mode_sq(mode_slot.unwrap()).sqrt().powf(*p)
                    } else {
                        h.powf(*p)
                    };
                }
                for (s, &p) in v.sup.iter_mut().zip(&req.p_list) {
                    *s = s.max(h.powf(p));
                }
                if n < steps {
                    let va = u.v_norm().powf(req.alpha);
                    v.int_v += va * dt;
                    v.mixed += h.powf(req.p0 - 2.0) * va * dt;
                }
            })?;
            v.exploded = summary.exploded.is_some();
            acc.add_path(&v);
            Ok(())
        },
        |a, b| a.fold(b),
    )?;

    let times: Vec<f64> = (0..n_times).map(|n| n as f64 * dt).collect();
    let used = sums.used;
    let mut report = MomentReport {
        m: eq.basis().m(),
        n_paths: req.n_paths,
        paths_used: used,
        explosion_fraction: sums.exploded as f64 / req.n_paths as f64,
        p0: req.p0,
        alpha: req.alpha,
        t_end: cfg.t_end,
        sup_t_mean_hp: None,
        sup_t_argmax: None,
        mean_sup_hp: Vec::new(),
        int_v_alpha: None,
        mixed: None,
        times: times.clone(),
        series: Vec::new(),
        ledger: eq.ledger().clone(),
    };
    if used == 0 {
        return Ok(report);
    }
    for (j, (name, p)) in names.iter().enumerate() {
        let est: Vec<Estimate> = (0..n_times)
            .map(|n| finish(sums.series[n * n_series + j], used))
            .collect();
        report.series.push(Series {
            name: name.clone(),
            p: *p,
            mean: est.iter().map(|e| e.mean).collect(),
            se: est.iter().map(|e| e.se).collect(),
        });
    }
    let hp0 = &report.series[0];
    let (arg, _) = hp0
        .mean
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    report.sup_t_mean_hp = Some(Estimate {
        mean: hp0.mean[arg],
        se: hp0.se[arg],
    });
    report.sup_t_argmax = Some(times[arg]);
    report.mean_sup_hp = req
        .p_list
        .iter()
        .zip(&sums.sup)
        .map(|(&p, &s)| {
            let e = finish(s, used);
            PEstimate { p, mean: e.mean, se: e.se }
        })
        .collect();
    report.int_v_alpha = Some(finish(sums.int_v, used));
    report.mixed = Some(finish(sums.mixed, used));
    Ok(report)
}

impl MomentReport {
    pub fn series(&self, name: &str, p: f64) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name && s.p == p)
    }

    /// Index of the grid point closest to `t`.
    pub fn time_index(&self, t: f64) -> usize {
        self.times
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bd), (i, &s)| {
                let d = (s - t).abs();
                if d < bd {
                    (i, d)
                } else {
                    (bi, bd)
                }
            })
            .0
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Columns `functional,p,t,mean,se`; time-independent functionals leave `t` empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "functional,p,t,mean,se")?;
        let p0 = self.p0;
        if let Some(e) = self.sup_t_mean_hp {
            writeln!(w, "sup_t_mean_hp,{p0},{},{},{}", self.sup_t_argmax.unwrap_or(0.0), e.mean, e.se)?;
        }
        for e in &self.mean_sup_hp {
            writeln!(w, "mean_sup_hp,{},,{},{}", e.p, e.mean, e.se)?;
        }
        if let Some(e) = self.int_v_alpha {
            writeln!(w, "int_v_alpha,{},,{},{}", self.alpha, e.mean, e.se)?;
        }
        if let Some(e) = self.mixed {
            writeln!(w, "mixed,{p0},,{},{}", e.mean, e.se)?;
        }
        writeln!(w, "explosion_fraction,,,{},", self.explosion_fraction)?;
        for s in &self.series {
            let name = csv_field(&s.name);
            for (n, t) in self.times.iter().enumerate() {
                writeln!(w, "{name},{},{t},{},{}", s.p, s.mean[n], s.se[n])?;
            }
        }
        Ok(())
    }
}

/// RFC 4180 quoting for a text field.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One report per Galerkin dimension with identical seeds and path ids.
pub fn uniform_in_m_study(
    spec: &EquationSpec,
    u0: &SpectralField,
    cfg: &SolverConfig,
    req: &MomentRequest,
    m_list: &[usize],
) -> Result<Vec<MomentReport>> {
    if m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("m_list", "must be strictly increasing"));
    }
    m_list
        .iter()
        .map(|&m| {
            let eq = Equation::new(spec.with_m(m)?)?;
            estimate(&eq, u0, cfg, req)
        })
        .collect()
}

/// Relative spread (max − min)/max of sup_t mean |u|^{p₀} across reports.
pub fn relative_spread(reports: &[MomentReport]) -> Option<f64> {
    let vals: Vec<f64> = reports
        .iter()
        .map(|r| r.sup_t_mean_hp.map(|e| e.mean))
        .collect::<Option<_>>()?;
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    Some(if max > 0.0 { (max - min) / max } else { 0.0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// rhs − lhs
    pub margin: f64,
    pub pass: bool,
}

fn apriori_lhs(report: &MomentReport) -> Option<f64> {
    Some(report.sup_t_mean_hp?.mean + report.int_v_alpha?.mean + report.mixed?.mean)
}

fn apriori_base(report: &MomentReport, u0: &SpectralField, f: f64) -> f64 {
    u0.h_norm().powf(report.p0) + report.t_end * f.powf(report.p0 / 2.0)
}

/// sup_t E|u|^{p₀} + E∫|u|_V^α + E∫|u|^{p₀−2}|u|_V^α ≤ C_budget·(|u₀|^{p₀} + T·f^{p₀/2}).
/// A report without estimates (all paths exploded) fails.
pub fn apriori_bound_check(report: &MomentReport, u0: &SpectralField, f: f64, c_budget: f64) -> BoundCheck {
    let rhs = c_budget * apriori_base(report, u0, f);
    match apriori_lhs(report) {
        Some(lhs) => BoundCheck {
            lhs,
            rhs,
            margin: rhs - lhs,
            pass: lhs <= rhs,
        },
        None => BoundCheck {
            lhs: f64::INFINITY,
            rhs,
            margin: f64::NEG_INFINITY,
            pass: false,
        },
    }
}

/// C_budget = safety × lhs / base on a calibration report; frozen afterwards.
pub fn calibrate_c_budget(report: &MomentReport, u0: &SpectralField, f: f64, safety: f64) -> Option<f64> {
    let base = apriori_base(report, u0, f);
    let lhs = apriori_lhs(report)?;
    (base > 0.0).then(|| safety * lhs / base)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub n_paths: usize,
    pub paths_used: usize,
    pub perturbation: f64,
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

impl MonitorReport {
    /// Largest increase mean[n+1] − mean[n] beyond the combined standard error.
    pub fn worst_increase(&self) -> f64 {
        self.mean
            .windows(2)
            .zip(self.se.windows(2))
            .map(|(m, s)| (m[1] - m[0]) - (s[0] * s[0] + s[1] * s[1]).sqrt())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,mean,se")?;
        for ((t, m), s) in self.times.iter().zip(&self.mean).zip(&self.se) {
            writeln!(w, "{t},{m},{s}")?;
        }
        Ok(())
    }
}

/// Direction of the initial perturbation: a fixed random field of unit H norm.
pub fn perturbation_direction(eq: &Equation, seed: u64) -> SpectralField {
    let mut stream = CounterStream::new(seed, u64::MAX, 0);
    SpectralField::random(eq.basis(), 1.5, 1.0, &mut stream)
}

/// Sample mean of M_n for pairs (u₀, u₀ + δ·e) driven by common noise.
pub fn uniqueness_study(
    eq: &Equation,
    u0: &SpectralField,
    delta: f64,
    cfg: &SolverConfig,
    n_paths: usize,
) -> Result<MonitorReport> {
    if n_paths < 2 {
        return Err(Error::invalid("n_paths", "need at least 2 paths"));
    }
    let steps = cfg.steps()? as usize;
    let a0 = crate::solver::initial_projection(eq, u0)?;
    let mut b0 = a0.clone();
    b0.axpy(delta, &perturbation_direction(eq, cfg.seed));
    let source = CounterIncrements::new(cfg.seed, cfg.dt);
    let ledger = eq.ledger();
    let sums = chunked(
        n_paths,
        || (vec![(0.0, 0.0); steps + 1], 0usize),
        |acc, i| {
            let path_cfg = cfg.clone().with_path(cfg.path_id + i as u64);
            let (a, _) = solve_path_with(eq, &a0, &path_cfg, &source)?;
            let (b, _) = solve_path_with(eq, &b0, &path_cfg, &source)?;
            if a.exploded.is_some() || b.exploded.is_some() {
                return Ok(());
            }
            let m = uniqueness_monitor(ledger, &a, &b)?;
            for (s, x) in acc.0.iter_mut().zip(m) {
                s.0 += x;
                s.1 += x * x;
            }
            acc.1 += 1;
            Ok(())
        },
        |a, b| {
            for (x, y) in a.0.iter_mut().zip(&b.0) {
                x.0 += y.0;
                x.1 += y.1;
            }
            a.1 += b.1;
        },
    )?;
    let used = sums.1;
    let est: Vec<Estimate> = sums.0.iter().map(|&s| finish(s, used.max(1))).collect();
    Ok(MonitorReport {
        n_paths,
        paths_used: used,
        perturbation: delta,
        times: (0..=steps).map(|n| n as f64 * cfg.dt).collect(),
        mean: est.iter().map(|e| e.mean).collect(),
        se: est.iter().map(|e| e.se).collect(),
    })
}
