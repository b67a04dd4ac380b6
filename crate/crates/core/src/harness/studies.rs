//! Sharpness sweep and strong-convergence study for the torus equation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{chunked, csv_field, estimate, MomentRequest};
use crate::noise::{CounterIncrements, IncrementSource, RefinedIncrements};
use crate::operators::{Equation, EquationSpec};
use crate::oracle::{exact_mode_moment, exact_mode_path, moment_exponent, wellposed_predicates, ModeParams};
use crate::solver::{integrate, Scheme, SolverConfig};
use crate::spectral::SpectralField;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub gamma2: f64,
    pub p: f64,
    pub k: usize,
    /// p·k²·(2γ²(p−1) − 1)
    pub exponent: f64,
    /// E|û_k(T)|^p for |c₀| = 1.
    pub oracle_moment: f64,
    /// Moment nonincreasing in t.
    pub bounded: bool,
    pub coercivity_ok: bool,
    pub stochastic_parabolicity_ok: bool,
    pub brz_veraar_illposed: bool,
    /// Monte Carlo estimate at T, subcritical cells only.
    pub mc_mean: Option<f64>,
    pub mc_se: Option<f64>,
    pub explosion_fraction: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SharpnessParams {
    pub gamma2_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub k: usize,
    pub dt: f64,
    pub t_end: f64,
    /// 0 skips the solver entirely.
    pub n_paths: usize,
    pub seed: u64,
}

/// Oracle verdicts per (γ², p), plus solver runs when `n_paths > 0`:
/// Monte Carlo moments in subcritical cells, explosion fractions elsewhere.
pub fn sharpness_sweep(params: &SharpnessParams) -> Result<Vec<SharpnessRow>> {
    if params.gamma2_grid.is_empty() || params.p_grid.is_empty() {
        return Err(Error::invalid("grid", "sharpness grids must be nonempty"));
    }
    let mut rows = Vec::new();
    for &p in &params.p_grid {
        for &g2 in &params.gamma2_grid {
            let gamma = g2.sqrt();
            let mode = ModeParams::new(params.k as u32, gamma, 1.0);
            let exponent = moment_exponent(params.k as u32, gamma, p);
            let pred = wellposed_predicates(gamma, p);
            let mut row = SharpnessRow {
                gamma2: g2,
                p,
                k: params.k,
                exponent,
                oracle_moment: exact_mode_moment(&mode, p, params.t_end),
                bounded: exponent <= 0.0,
                coercivity_ok: pred.coercivity_ok,
                stochastic_parabolicity_ok: pred.stochastic_parabolicity_ok,
                brz_veraar_illposed: pred.brz_veraar_illposed,
                mc_mean: None,
                mc_se: None,
                explosion_fraction: None,
            };
            if params.n_paths > 0 {
                let eq = Equation::new(EquationSpec::fractional(params.k, gamma, p)?)?;
                let u0 = SpectralField::single_mode(eq.basis(), params.k, 1.0)?;
                let cfg = SolverConfig::new(params.dt, params.t_end, Scheme::SemiImplicitEm)
                    .with_seed(params.seed);
                if pred.coercivity_ok {
                    let req = MomentRequest::new(vec![2.0], p, 2.0, params.n_paths.max(2)).tracking(params.k);
                    let r = estimate(&eq, &u0, &cfg, &req)?;
                    let name = format!("E|c_{}|^p", params.k);
                    if let Some(s) = r.series(&name, p) {
                        row.mc_mean = s.mean.last().copied();
                        row.mc_se = s.se.last().copied();
                    }
                    row.explosion_fraction = Some(r.explosion_fraction);
                } else {
                    row.explosion_fraction = Some(explosion_fraction(&eq, &u0, &cfg, params.n_paths)?);
                }
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

fn explosion_fraction(eq: &Equation, u0: &SpectralField, cfg: &SolverConfig, n: usize) -> Result<f64> {
    let source = CounterIncrements::new(cfg.seed, cfg.dt);
    let count = chunked(
        n,
        || 0usize,
        |acc, i| {
            let s = integrate(eq, u0, &cfg.clone().with_path(i as u64), &source, |_, _, _| {})?;
            *acc += s.exploded.is_some() as usize;
            Ok(())
        },
        |a, b| *a += b,
    )?;
    Ok(count as f64 / n as f64)
}

pub fn write_sharpness_csv<W: Write>(rows: &[SharpnessRow], mut w: W) -> Result<()> {
    writeln!(
        w,
        "gamma2,p,k,exponent,oracle_moment,bounded,coercivity_ok,stochastic_parabolicity_ok,brz_veraar_illposed,mc_mean,mc_se,explosion_fraction"
    )?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.gamma2,
            r.p,
            r.k,
            r.exponent,
            r.oracle_moment,
            r.bounded,
            r.coercivity_ok,
            r.stochastic_parabolicity_ok,
            r.brz_veraar_illposed,
            opt(r.mc_mean),
            opt(r.mc_se),
            opt(r.explosion_fraction)
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub dt: f64,
    /// E|X_N − X(T)| over paths.
    pub strong_error: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub gamma: f64,
    pub k: usize,
    pub t_end: f64,
    pub n_paths: usize,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of log error against log dt.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Set when some error is exactly zero and no slope can be fitted.
    pub degenerate: bool,
}

#[derive(Clone, Debug)]
pub struct ConvergenceParams {
    pub gamma: f64,
    pub k: usize,
    pub dt_list: Vec<f64>,
    pub t_end: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

/// Least-squares fit y = a + s·x; returns (s, a).
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let s = sxy / sxx;
    (s, my - s * mx)
}

/// Strong error of the solver on mode k against the exact GBM path. All step
/// sizes are driven by one fine Brownian path at the smallest dt, summed up
/// to each coarser dt.
pub fn convergence_study(params: &ConvergenceParams) -> Result<ConvergenceReport> {
    if params.dt_list.len() < 3 {
        return Err(Error::invalid("dt_list", "need at least 3 step sizes"));
    }
    let fine_dt = params.dt_list.iter().copied().fold(f64::INFINITY, f64::min);
    let mut factors = Vec::new();
    for &dt in &params.dt_list {
        let f = (dt / fine_dt).round();
        if (f * fine_dt - dt).abs() > 1e-9 * dt {
            return Err(Error::invalid(
                "dt_list",
                format!("{dt} is not an integer multiple of {fine_dt}"),
            ));
        }
        factors.push(f as u64);
    }
    let eq = Equation::new(EquationSpec::fractional(params.k, params.gamma, 4.0)?)?;
    let u0 = SpectralField::single_mode(eq.basis(), params.k, 1.0)?;
    let slot = params.k;
    let mode = ModeParams::new(params.k as u32, params.gamma, 1.0);
    let fine = CounterIncrements::new(params.seed, fine_dt);
    let fine_steps = SolverConfig::new(fine_dt, params.t_end, params.scheme).steps()?;
    let n_dt = params.dt_list.len();

    let sums = chunked(
        params.n_paths,
        || vec![(0.0, 0.0); n_dt],
        |acc, i| {
            let path = i as u64;
            let w_t: f64 = (0..fine_steps).map(|s| fine.increment(path, s, 0)).sum();
            let exact = exact_mode_path(&mode, &[w_t], params.t_end)[1];
            for (j, (&dt, &factor)) in params.dt_list.iter().zip(&factors).enumerate() {
                let cfg = SolverConfig::new(dt, params.t_end, params.scheme).with_path(path);
                let source = RefinedIncrements::new(fine, factor);
                let s = integrate(&eq, &u0, &cfg, &source, |_, _, _| {})?;
                let err = (s.final_state.coefficient(slot) - exact).norm();
                acc[j].0 += err;
                acc[j].1 += err * err;
            }
            Ok(())
        },
        |a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                x.0 += y.0;
                x.1 += y.1;
            }
        },
    )?;
    let n = params.n_paths as f64;
    let rows: Vec<ConvergenceRow> = params
        .dt_list
        .iter()
        .zip(&sums)
        .map(|(&dt, &(s1, s2))| {
            let mean = s1 / n;
            let var = if n > 1.0 { ((s2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
            ConvergenceRow {
                dt,
                strong_error: mean,
                se: (var / n).sqrt(),
            }
        })
        .collect();
    let degenerate = rows.iter().any(|r| r.strong_error == 0.0);
    let (slope, intercept) = if degenerate {
        (None, None)
    } else {
        let x: Vec<f64> = rows.iter().map(|r| r.dt.ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.strong_error.ln()).collect();
        let (s, a) = fit_line(&x, &y);
        (Some(s), Some(a))
    };
    Ok(ConvergenceReport {
        gamma: params.gamma,
        k: params.k,
        t_end: params.t_end,
        n_paths: params.n_paths,
        rows,
        slope,
        intercept,
        degenerate,
    })
}

pub fn write_convergence_csv<W: Write>(report: &ConvergenceReport, mut w: W) -> Result<()> {
    writeln!(w, "dt,strong_error,se")?;
    for r in &report.rows {
        writeln!(w, "{},{},{}", r.dt, r.strong_error, r.se)?;
    }
    writeln!(
        w,
        "{},{},",
        csv_field("slope"),
        report.slope.map(|s| s.to_string()).unwrap_or_else(|| "degenerate".into())
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_slope() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 + 0.5 * v).collect();
        let (s, a) = fit_line(&x, &y);
        assert!((s - 0.5).abs() < 1e-14 && (a - 1.5).abs() < 1e-14);
    }

    #[test]
    fn sweep_boundary_and_extremes() {
        let rows = sharpness_sweep(&SharpnessParams {
            gamma2_grid: vec![0.0, 1.0 / 6.0, 1.0 / 3.0],
            p_grid: vec![4.0],
            k: 1,
            dt: 1e-3,
            t_end: 0.5,
            n_paths: 0,
            seed: 0,
        })
        .unwrap();
        assert_eq!(rows[0].exponent, -4.0);
        assert!(rows[1].exponent.abs() < 1e-14 && rows[1].bounded);
        assert!((rows[1].oracle_moment - 1.0).abs() < 1e-12);
        assert!(!rows[2].bounded && rows[2].brz_veraar_illposed && !rows[2].coercivity_ok);
    }

    #[test]
    fn heat_mode_converges_first_order() {
        let r = convergence_study(&ConvergenceParams {
            gamma: 0.0,
            k: 1,
            dt_list: vec![2e-3, 1e-3, 5e-4],
            t_end: 1.0,
            n_paths: 2,
            seed: 1,
            scheme: Scheme::SemiImplicitEm,
        })
        .unwrap();
        let s = r.slope.unwrap();
        assert!((s - 1.0).abs() < 0.05, "slope {s}");
    }

    #[test]
    fn rejects_incommensurate_steps() {
        let p = ConvergenceParams {
            gamma: 0.1,
            k: 1,
            dt_list: vec![3e-3, 2e-3, 1e-3],
            t_end: 0.06,
            n_paths: 2,
            seed: 1,
            scheme: Scheme::SemiImplicitEm,
        };
        assert!(convergence_study(&p).is_ok());
        let q = ConvergenceParams { dt_list: vec![1e-3, 1.5e-3, 2e-3], ..p };
        assert!(convergence_study(&q).is_err());
    }
}
