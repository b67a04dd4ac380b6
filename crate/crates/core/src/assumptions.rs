//! Sampling-based checks of the structural conditions on (A, B).
//!
//! Each check evaluates both sides of an inequality on fields drawn from a
//! [`SamplePlan`], fits the smallest admissible constant over the samples and
//! reports the worst residual at the ledger constant. Sampling can only
//! falsify: a clean report means no violation was found over the plan.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{uniform, CounterStream};
use crate::operators::{ConstantsLedger, DriftSpec, Equation};
use crate::spectral::SpectralField;

pub const RELATIVE_TOLERANCE: f64 = 1e-8;
pub const THETA_BISECTION_TOL: f64 = 1e-6;
pub const NO_VIOLATION_NOTE: &str =
    "sampling can only falsify: no violation found over plan is not a proof";

/// Number of ε = ±2^{-j} levels probed by the hemicontinuity check.
const HEMI_LEVELS: i32 = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplePlan {
    pub count: usize,
    /// Spectral decay exponents q of the random fields, coefficients ~ (1+k)^{-q}.
    #[serde(default = "default_decays")]
    pub decays: Vec<f64>,
    #[serde(default = "default_amp_min")]
    pub amp_min: f64,
    #[serde(default = "default_amp_max")]
    pub amp_max: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_decays() -> Vec<f64> {
    vec![1.0, 1.5, 2.0]
}

fn default_amp_min() -> f64 {
    1e-2
}

fn default_amp_max() -> f64 {
    1e2
}

impl SamplePlan {
    pub fn new(count: usize, seed: u64) -> Self {
        Self {
            count,
            decays: default_decays(),
            amp_min: default_amp_min(),
            amp_max: default_amp_max(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("count", "sample plan needs at least one sample"));
        }
        if !(self.amp_min > 0.0 && self.amp_max >= self.amp_min && self.amp_max.is_finite()) {
            return Err(Error::invalid("amplitudes", "need 0 < amp_min ≤ amp_max < ∞"));
        }
        if self.decays.iter().any(|q| !q.is_finite()) {
            return Err(Error::invalid("decays", "must be finite"));
        }
        Ok(())
    }

    /// Field `role` of sample `i`. Samples depend only on (seed, i, role), so a
    /// larger plan extends a smaller one.
    ///
    /// Sample kinds cycle through one random field per decay exponent and then
    /// a single-mode field on a uniformly drawn wavenumber.
    pub fn field(&self, eq: &Equation, i: usize, role: u64) -> SpectralField {
        let basis = eq.basis();
        let key = [self.seed, i as u64, role];
        let u = uniform(&[key[0], key[1], key[2], 0]);
        let amp = (self.amp_min.ln() + u * (self.amp_max / self.amp_min).ln()).exp();
        let kind = i % (self.decays.len() + 1);
        if kind < self.decays.len() {
            let mut stream = CounterStream::new(self.seed, i as u64, 16 + role);
            SpectralField::random(basis, self.decays[kind], amp, &mut stream)
        } else {
            let n = basis.stored_len();
            let slot = ((uniform(&[key[0], key[1], key[2], 1]) * n as f64) as usize).min(n - 1);
            let sign = if uniform(&[key[0], key[1], key[2], 2]) < 0.5 { -1.0 } else { 1.0 };
            let mut f = SpectralField::single_mode(basis, basis.wavenumber(slot), 1.0)
                .expect("slot inside basis");
            f.scale(sign * amp / f.h_norm());
            f
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub sample: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionResult {
    /// max over samples of LHS − RHS at the ledger constant.
    pub worst_residual: f64,
    /// 1e-8 × max(|LHS|, |RHS|) at the worst sample.
    pub tolerance: f64,
    pub worst_sample: Option<usize>,
    pub fitted_constants: BTreeMap<String, f64>,
    pub samples_used: usize,
    pub excluded: Vec<Exclusion>,
    pub violated: bool,
    /// False when samples had to be excluded.
    pub complete: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub note: String,
    pub plan: SamplePlan,
    pub ledger: ConstantsLedger,
    pub results: BTreeMap<String, AssumptionResult>,
    pub rho_stats: Option<RhoStats>,
}

impl AssumptionReport {
    fn new(eq: &Equation, plan: &SamplePlan) -> Self {
        Self {
            note: NO_VIOLATION_NOTE.to_string(),
            plan: plan.clone(),
            ledger: eq.ledger().clone(),
            results: BTreeMap::new(),
            rho_stats: None,
        }
    }

    pub fn violated(&self) -> bool {
        self.results.values().any(|r| r.violated)
    }

    pub fn violations(&self) -> Vec<&str> {
        self.results
            .iter()
            .filter(|(_, r)| r.violated)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn merge(&mut self, other: AssumptionReport) {
        self.results.extend(other.results);
        if other.rho_stats.is_some() {
            self.rho_stats = other.rho_stats;
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Copies every fitted constant into `ledger.fitted` as "<assumption>.<name>".
    pub fn freeze_into(&self, ledger: &mut ConstantsLedger) {
        for (name, r) in &self.results {
            for (k, v) in &r.fitted_constants {
                ledger.fitted.insert(format!("{name}.{k}"), *v);
            }
        }
    }
}

/// Two sides of an inequality at one sample.
#[derive(Clone, Copy, Debug)]
struct Sides {
    lhs: f64,
    rhs: f64,
}

type Evaluated<T> = std::result::Result<T, String>;

fn exclusion_reason(e: Error) -> String {
    e.to_string()
}

/// Evaluates `f` on every sample in parallel, keeping sample order.
fn evaluate<T: Send>(plan: &SamplePlan, f: impl Fn(usize) -> Result<T> + Sync) -> Vec<Evaluated<T>> {
    (0..plan.count)
        .into_par_iter()
        .map(|i| f(i).map_err(exclusion_reason))
        .collect()
}

fn summarize(
    values: &[Evaluated<Sides>],
    fitted: BTreeMap<String, f64>,
    always_violated: bool,
) -> AssumptionResult {
    let mut worst = f64::NEG_INFINITY;
    let mut worst_sample = None;
    let mut tolerance = 0.0;
    let mut excluded = Vec::new();
    let mut used = 0;
    for (i, v) in values.iter().enumerate() {
        match v {
            Ok(s) => {
                used += 1;
                let r = s.lhs - s.rhs;
                if r > worst || worst_sample.is_none() {
                    worst = r;
                    worst_sample = Some(i);
                    tolerance = RELATIVE_TOLERANCE * s.lhs.abs().max(s.rhs.abs());
                }
            }
            Err(reason) => excluded.push(Exclusion {
                sample: i,
                reason: reason.clone(),
            }),
        }
    }
    if used == 0 {
        worst = f64::NAN;
    }
    AssumptionResult {
        worst_residual: worst,
        tolerance,
        worst_sample,
        fitted_constants: fitted,
        samples_used: used,
        complete: excluded.is_empty(),
        excluded,
        violated: always_violated || worst > tolerance,
    }
}

fn fit_max(values: impl Iterator<Item = f64>) -> f64 {
    values.filter(|x| x.is_finite()).fold(0.0, f64::max)
}

/// 2⟨A(x)−A(x̄), x−x̄⟩ + Σ|B^j(x)−B^j(x̄)|² ≤ ρ(x̄)|x−x̄|_H²
pub fn check_local_monotonicity(eq: &Equation, plan: &SamplePlan) -> Result<AssumptionReport> {
    plan.validate()?;
    let ledger = eq.ledger();
    let evals = evaluate(plan, |i| {
        let xb = plan.field(eq, i, 0);
        let x = xb.add(&plan.field(eq, i, 1));
        let d = x.sub(&xb);
        let mut lhs = 2.0 * eq.apply_drift(&x)?.sub(&eq.apply_drift(&xb)?).inner(&d);
        for j in 0..eq.drivers() {
            lhs += eq.apply_diffusion(j, &x)?.sub(&eq.apply_diffusion(j, &xb)?).h_norm_sq();
        }
        let weight = (1.0 + xb.v_norm().powf(ledger.alpha)) * (1.0 + xb.h_norm().powf(ledger.beta));
        Ok((lhs, weight, d.h_norm_sq()))
    });
    let l_fit = fit_max(
        evals
            .iter()
            .flatten()
            .filter(|(_, _, d2)| *d2 > 0.0)
            .map(|(lhs, w, d2)| lhs / (w * d2)),
    );
    let l_ref = ledger.l.unwrap_or(l_fit);
    let sides: Vec<_> = evals
        .into_iter()
        .map(|e| {
            e.map(|(lhs, w, d2)| Sides {
                lhs,
                rhs: l_ref * w * d2,
            })
        })
        .collect();
    let mut fitted = BTreeMap::new();
    fitted.insert("L".to_string(), l_fit);
    let mut report = AssumptionReport::new(eq, plan);
    report
        .results
        .insert("local_monotonicity".into(), summarize(&sides, fitted, false));
    Ok(report)
}

/// 2⟨A(x),x⟩ + (p₀−1)Σ|B^j(x)|² + θ|x|_V^α ≤ f + K|x|_H²
///
/// K and f come from the ledger at `p0`; θ is the largest value with no
/// sampled violation, found by bisection. Residuals are reported at the
/// ledger θ when it is positive and at θ = 1e-6 otherwise.
pub fn check_coercivity(eq: &Equation, p0: f64, plan: &SamplePlan) -> Result<AssumptionReport> {
    plan.validate()?;
    if !(p0 >= eq.ledger().beta + 2.0) {
        return Err(Error::invalid(
            "p0",
            format!("must be at least β + 2 = {}", eq.ledger().beta + 2.0),
        ));
    }
    let mut spec = eq.spec().clone();
    spec.p0 = p0;
    let at_p0 = Equation::new(spec)?;
    let ledger = at_p0.ledger();
    let evals = evaluate(plan, |i| {
        let x = plan.field(eq, i, 0);
        let mut base = 2.0 * eq.drift_pairing_with_self(&x)?;
        for j in 0..eq.drivers() {
            base += (p0 - 1.0) * eq.apply_diffusion(j, &x)?.h_norm_sq();
        }
        let v = x.v_norm().powf(ledger.alpha);
        let rhs = ledger.f + ledger.k * x.h_norm_sq();
        Ok((base, v, rhs))
    });
    let ok: Vec<_> = evals.iter().flatten().copied().collect();
    let admissible = |theta: f64| {
        ok.iter().all(|&(base, v, rhs)| {
            let lhs = base + theta * v;
            lhs - rhs <= RELATIVE_TOLERANCE * lhs.abs().max(rhs.abs())
        })
    };
    let (mut lo, mut hi) = (-1.0, 4.0);
    while !admissible(lo) && lo > -1e6 {
        hi = lo;
        lo *= 2.0;
    }
    while admissible(hi) && hi < 1e6 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > THETA_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if admissible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta_ref = if ledger.theta > 0.0 {
        ledger.theta
    } else {
        THETA_BISECTION_TOL
    };
    let sides: Vec<_> = evals
        .into_iter()
        .map(|e| {
            e.map(|(base, v, rhs)| Sides {
                lhs: base + theta_ref * v,
                rhs,
            })
        })
        .collect();
    let mut fitted = BTreeMap::new();
    fitted.insert("theta".to_string(), lo);
    fitted.insert("K".to_string(), ledger.k);
    fitted.insert("p0".to_string(), p0);
    let result = summarize(&sides, fitted, lo <= 0.0);
    let mut report = AssumptionReport::new(&at_p0, plan);
    report.results.insert("coercivity".into(), result);
    Ok(report)
}

/// |A(x)|_{V*}^{α/(α−1)} ≤ (f + K|x|_V^α)(1 + |x|_H^β)
pub fn check_growth(eq: &Equation, plan: &SamplePlan) -> Result<AssumptionReport> {
    plan.validate()?;
    let ledger = eq.ledger();
    let q = ledger.alpha / (ledger.alpha - 1.0);
    let evals = evaluate(plan, |i| {
        let x = plan.field(eq, i, 0);
        let lhs = eq.apply_drift(&x)?.vstar_norm().powf(q);
        Ok((lhs, x.v_norm().powf(ledger.alpha), 1.0 + x.h_norm().powf(ledger.beta)))
    });
    let k_fit = fit_max(
        evals
            .iter()
            .flatten()
            .filter(|(_, v, _)| *v > 0.0)
            .map(|(lhs, v, w)| (lhs / w - ledger.f) / v),
    );
    let sides: Vec<_> = evals
        .into_iter()
        .map(|e| {
            e.map(|(lhs, v, w)| Sides {
                lhs,
                rhs: (ledger.f + ledger.k * v) * w,
            })
        })
        .collect();
    let mut fitted = BTreeMap::new();
    fitted.insert("K".to_string(), k_fit);
    let mut report = AssumptionReport::new(eq, plan);
    report.results.insert("growth".into(), summarize(&sides, fitted, false));
    Ok(report)
}

/// Σ|B^j(x)|² ≤ C(1 + f^{p₀/2} + |x|_H^{p₀} + |x|_V^α + |x|_V^α|x|_H^β), with the ledger's c_b as C.
pub fn check_b_growth_remark(eq: &Equation, plan: &SamplePlan) -> Result<AssumptionReport> {
    plan.validate()?;
    let l = eq.ledger();
    let evals = evaluate(plan, |i| {
        let x = plan.field(eq, i, 0);
        let mut lhs = 0.0;
        for j in 0..eq.drivers() {
            lhs += eq.apply_diffusion(j, &x)?.h_norm_sq();
        }
        let (h, v) = (x.h_norm(), x.v_norm().powf(l.alpha));
        let bracket = 1.0 + l.f.powf(l.p0 / 2.0) + h.powf(l.p0) + v + v * h.powf(l.beta);
        Ok((lhs, bracket))
    });
    let c_fit = fit_max(evals.iter().flatten().map(|(lhs, b)| lhs / b));
    let sides: Vec<_> = evals
        .into_iter()
        .map(|e| e.map(|(lhs, b)| Sides { lhs, rhs: l.c_b * b }))
        .collect();
    let mut fitted = BTreeMap::new();
    fitted.insert("C".to_string(), c_fit);
    let mut report = AssumptionReport::new(eq, plan);
    report
        .results
        .insert("b_growth".into(), summarize(&sides, fitted, false));
    Ok(report)
}

/// Deviations |⟨A(x+εx̄), y⟩ − ⟨A(x), y⟩| for ε = ±2^{-j}, j = 1..levels.
pub fn hemicontinuity_profile(
    eq: &Equation,
    x: &SpectralField,
    xb: &SpectralField,
    y: &SpectralField,
    levels: i32,
) -> Result<(f64, Vec<f64>)> {
    let at = |eps: f64| -> Result<f64> {
        let mut z = x.clone();
        z.axpy(eps, xb);
        Ok(eq.apply_drift(&z)?.inner(y))
    };
    let phi0 = at(0.0)?;
    let mut devs = Vec::with_capacity(levels as usize);
    for j in 1..=levels {
        let eps = 2f64.powi(-j);
        devs.push((at(eps)? - phi0).abs().max((at(-eps)? - phi0).abs()));
    }
    Ok((phi0, devs))
}

/// Continuity of ε ↦ ⟨A(x+εx̄), y⟩ at 0: the deviation at the finest ε must
/// not exceed twice the coarse-level Lipschitz ratio times ε, up to roundoff.
pub fn check_hemicontinuity(eq: &Equation, plan: &SamplePlan) -> Result<AssumptionReport> {
    plan.validate()?;
    let evals = evaluate(plan, |i| {
        let x = plan.field(eq, i, 0);
        let xb = plan.field(eq, i, 1);
        let y = plan.field(eq, i, 2);
        let (phi0, devs) = hemicontinuity_profile(eq, &x, &xb, &y, HEMI_LEVELS)?;
        let coarse = (0..HEMI_LEVELS / 2)
            .map(|j| devs[j as usize] * 2f64.powi(j + 1))
            .fold(0.0, f64::max);
        let eps = 2f64.powi(-HEMI_LEVELS);
        let finest = devs[HEMI_LEVELS as usize - 1];
        // roundoff floor of ⟨A(·), y⟩ for operands of this size
        let roundoff = 1e3 * f64::EPSILON * (phi0.abs() + eq.apply_drift(&x)?.vstar_norm() * y.v_norm());
        Ok((finest, 2.0 * coarse * eps + roundoff, finest / eps))
    });
    let modulus = fit_max(evals.iter().flatten().map(|(_, _, m)| *m));
    let sides: Vec<_> = evals
        .into_iter()
        .map(|e| e.map(|(lhs, rhs, _)| Sides { lhs, rhs }))
        .collect();
    let mut fitted = BTreeMap::new();
    fitted.insert("modulus".to_string(), modulus);
    let mut report = AssumptionReport::new(eq, plan);
    report
        .results
        .insert("hemicontinuity".into(), summarize(&sides, fitted, false));
    Ok(report)
}

/// |⟨N(u), u⟩| for the Burgers drift, which vanishes by skew-symmetry, against
/// the bound 1e-10·(1 + |u|_V³).
pub fn check_burgers_neutrality(eq: &Equation, plan: &SamplePlan) -> Result<AssumptionReport> {
    plan.validate()?;
    if eq.spec().drift != DriftSpec::Burgers {
        return Err(Error::invalid("drift", "neutrality check applies to the Burgers drift"));
    }
    let sides = evaluate(plan, |i| {
        let u = plan.field(eq, i, 0);
        let n = eq.drift_nonlinear(&u)?.expect("Burgers has a nonlinear part");
        Ok(Sides {
            lhs: n.inner(&u).abs(),
            rhs: 1e-10 * (1.0 + u.v_norm().powi(3)),
        })
    });
    let mut fitted = BTreeMap::new();
    let worst_ratio = fit_max(sides.iter().flatten().map(|s| s.lhs / (1.0 + s.rhs * 1e10)));
    fitted.insert("ratio".to_string(), worst_ratio);
    let mut report = AssumptionReport::new(eq, plan);
    report
        .results
        .insert("burgers_neutrality".into(), summarize(&sides, fitted, false));
    Ok(report)
}

/// ρ(ψ) = L(1+|ψ|_V^α)(1+|ψ|_H^β) with the ledger constants.
pub fn rho(eq: &Equation, psi: &SpectralField) -> f64 {
    eq.rho(psi)
}

pub fn rho_stats(eq: &Equation, plan: &SamplePlan) -> Option<RhoStats> {
    eq.ledger().l?;
    let values: Vec<f64> = (0..plan.count)
        .into_par_iter()
        .map(|i| eq.rho(&plan.field(eq, i, 0)))
        .collect();
    let n = values.len();
    let sum: f64 = values.iter().sum();
    Some(RhoStats {
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(0.0, f64::max),
        mean: sum / n as f64,
        samples: n,
    })
}

/// All checks at the ledger p₀, plus ρ statistics.
pub fn check_all(eq: &Equation, plan: &SamplePlan) -> Result<AssumptionReport> {
    let mut report = check_local_monotonicity(eq, plan)?;
    report.merge(check_coercivity(eq, eq.ledger().p0, plan)?);
    report.merge(check_growth(eq, plan)?);
    report.merge(check_b_growth_remark(eq, plan)?);
    report.merge(check_hemicontinuity(eq, plan)?);
    report.rho_stats = rho_stats(eq, plan);
    report.ledger = eq.ledger().clone();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::ScalarFn;
    use crate::operators::EquationSpec;

    fn fractional(k: usize, g2: f64, p0: f64) -> Equation {
        Equation::new(EquationSpec::fractional(k, g2.sqrt(), p0).unwrap()).unwrap()
    }

    #[test]
    fn samples_are_prefix_stable() {
        let eq = fractional(4, 0.1, 4.0);
        let small = SamplePlan::new(5, 3);
        let big = SamplePlan::new(50, 3);
        for i in 0..5 {
            assert_eq!(small.field(&eq, i, 1), big.field(&eq, i, 1));
        }
        let h = big.field(&eq, 7, 0).h_norm();
        assert!((1e-2..=1e2).contains(&h));
    }

    #[test]
    fn fractional_monotonicity_is_nonpositive() {
        let eq = fractional(8, 0.5, 2.0);
        let r = check_local_monotonicity(&eq, &SamplePlan::new(200, 1)).unwrap();
        let res = &r.results["local_monotonicity"];
        assert!(!res.violated);
        assert!(res.worst_residual <= res.tolerance);
        assert!(res.fitted_constants["L"] < 1e-10);
    }

    #[test]
    fn fractional_coercivity_theta_and_sharp_side() {
        let eq = fractional(32, 0.1, 4.0);
        let r = check_coercivity(&eq, 4.0, &SamplePlan::new(400, 2)).unwrap();
        let theta = r.results["coercivity"].fitted_constants["theta"];
        assert!((theta - 0.8).abs() < 5e-3, "θ = {theta}");
        assert!(!r.violated());
        let eq = fractional(32, 0.2, 4.0);
        let r = check_coercivity(&eq, 4.0, &SamplePlan::new(400, 2)).unwrap();
        assert!(r.results["coercivity"].fitted_constants["theta"] <= 0.0);
        assert!(r.violated());
    }

    #[test]
    fn heat_theta_close_to_two() {
        let eq = Equation::new(EquationSpec::heat(16, 0.0).unwrap()).unwrap();
        let r = check_coercivity(&eq, 4.0, &SamplePlan::new(200, 5)).unwrap();
        let theta = r.results["coercivity"].fitted_constants["theta"];
        assert!(theta >= 2.0 - eq.ledger().epsilon, "θ = {theta}");
    }

    #[test]
    fn laplacian_growth_and_b_growth() {
        let eq = Equation::new(EquationSpec::heat(16, 1.0).unwrap()).unwrap();
        let plan = SamplePlan::new(200, 7);
        let g = check_growth(&eq, &plan).unwrap();
        assert!(!g.violated());
        assert!(g.results["growth"].fitted_constants["K"] <= 1.0 + 1e-12);
        let b = check_b_growth_remark(&eq, &plan).unwrap();
        assert!(!b.violated());
        assert!(b.results["b_growth"].fitted_constants["C"] <= 2.0);
    }

    #[test]
    fn hemicontinuity_polynomial_structure() {
        let burgers = Equation::new(EquationSpec::burgers(12, 0.0, ScalarFn::Zero).unwrap()).unwrap();
        let plan = SamplePlan::new(6, 8);
        let (x, xb, y) = (plan.field(&burgers, 0, 0), plan.field(&burgers, 0, 1), plan.field(&burgers, 0, 2));
        let phi = |e: f64| {
            let mut z = x.clone();
            z.axpy(e, &xb);
            burgers.apply_drift(&z).unwrap().inner(&y)
        };
        // quadratic in ε: second differences are constant
        let (a, b, c, d) = (phi(-1.0), phi(0.0), phi(1.0), phi(2.0));
        let scale = a.abs() + b.abs() + c.abs() + d.abs();
        assert!(((c - 2.0 * b + a) - (d - 2.0 * c + b)).abs() <= 1e-10 * scale);
        let heat = Equation::new(EquationSpec::heat(12, 0.0).unwrap()).unwrap();
        let r = check_hemicontinuity(&heat, &plan).unwrap();
        assert!(!r.violated());
        let r = check_hemicontinuity(&burgers, &plan).unwrap();
        assert!(!r.violated());
    }

    #[test]
    fn rho_values() {
        let eq = Equation::new(EquationSpec::burgers(8, 0.2f64.sqrt(), ScalarFn::Zero).unwrap()).unwrap();
        let l = eq.ledger().l.unwrap();
        assert_eq!(rho(&eq, &SpectralField::zeros(eq.basis())), l);
        let plan = SamplePlan::new(10, 1);
        let psi = plan.field(&eq, 3, 0);
        let (v, h) = (psi.v_norm(), psi.h_norm());
        assert!((rho(&eq, &psi) - l * (1.0 + v * v) * (1.0 + h * h)).abs() <= 1e-12 * rho(&eq, &psi));
        let s = rho_stats(&eq, &plan).unwrap();
        assert!(s.min <= s.mean && s.mean <= s.max);
    }

    #[test]
    fn report_is_deterministic_json() {
        let eq = fractional(4, 0.1, 4.0);
        let plan = SamplePlan::new(30, 4);
        let a = check_all(&eq, &plan).unwrap().to_json().unwrap();
        let b = check_all(&eq, &plan).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        assert!(a.contains(NO_VIOLATION_NOTE));
    }
}
