//! Drift A: V → V* and diffusions B^j: V → H in coefficient space.
//!
//! Three equations are supported:
//!
//! * semilinear: A(u) = Δu + g(u)Du + f(u), B(u) = γDu + h(u) on (0,1)
//! * Burgers:    A(u) = Δu + uDu,           B(u) = γDu + h(u) on (0,1)
//! * fractional: A(u) = Δu,                 B(u) = 2γ(−Δ)^{1/2}u on 𝕋
//!
//! Every operator output is the coefficient vector (⟨A(u), φ_k⟩)_k, i.e. the
//! Galerkin projection of the functional.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::ScalarFn;
use crate::spectral::{
    analyze, synthesize, synthesize_derivative, Basis, BasisKind, BasisSpec, Coeffs,
    SpectralField,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum DriftSpec {
    Laplacian,
    Burgers,
    SemiLinear { g: ScalarFn, f: ScalarFn },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum DiffusionSpec {
    /// B(u) = γDu + h(u)
    GradientNoise { gamma: f64, h: ScalarFn },
    /// B(u) = 2γ(−Δ)^{1/2}u
    FractionalHalf { gamma: f64 },
}

impl DiffusionSpec {
    pub fn gamma(&self) -> f64 {
        match *self {
            DiffusionSpec::GradientNoise { gamma, .. } | DiffusionSpec::FractionalHalf { gamma } => {
                gamma
            }
        }
    }
}

pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationSpec {
    pub drift: DriftSpec,
    /// One independent scalar Wiener driver per entry.
    pub diffusions: Vec<DiffusionSpec>,
    pub basis: BasisSpec,
    /// Deterministic f of the coercivity/growth conditions; derived when absent.
    pub f_const: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub p0: f64,
    /// Young's-inequality slack used when deriving θ for the semilinear drift.
    pub epsilon: f64,
}

impl EquationSpec {
    /// Semilinear equation with gradient noise on (0,1): α = β = 2, p₀ = 4, grid sized for exact L⁴ quadrature.
    pub fn semilinear(m: usize, gamma: f64, g: ScalarFn, f: ScalarFn, h: ScalarFn) -> Result<Self> {
        Ok(Self {
            drift: DriftSpec::SemiLinear { g, f },
            diffusions: vec![DiffusionSpec::GradientNoise { gamma, h }],
            basis: BasisSpec::dealiased(BasisKind::DirichletSine, m, 3.0)?,
            f_const: None,
            alpha: 2.0,
            beta: 2.0,
            p0: 4.0,
            epsilon: DEFAULT_EPSILON,
        })
    }

    /// Stochastic Burgers on (0,1): α = β = 2, p₀ = 4.
    pub fn burgers(m: usize, gamma: f64, h: ScalarFn) -> Result<Self> {
        Ok(Self {
            drift: DriftSpec::Burgers,
            diffusions: vec![DiffusionSpec::GradientNoise { gamma, h }],
            basis: BasisSpec::dealiased(BasisKind::DirichletSine, m, 2.0)?,
            f_const: None,
            alpha: 2.0,
            beta: 2.0,
            p0: 4.0,
            epsilon: DEFAULT_EPSILON,
        })
    }

    /// Heat equation with fractional-gradient noise on 𝕋, wavenumbers |k| ≤ `max_k`: α = 2, β = 0.
    pub fn fractional(max_k: usize, gamma: f64, p0: f64) -> Result<Self> {
        Ok(Self {
            drift: DriftSpec::Laplacian,
            diffusions: vec![DiffusionSpec::FractionalHalf { gamma }],
            basis: BasisSpec::dealiased(BasisKind::FourierTorus, 2 * max_k + 1, 2.0)?,
            f_const: None,
            alpha: 2.0,
            beta: 0.0,
            p0,
            epsilon: DEFAULT_EPSILON,
        })
    }

    /// Linear heat equation on (0,1) with gradient noise γDu.
    pub fn heat(m: usize, gamma: f64) -> Result<Self> {
        Ok(Self {
            drift: DriftSpec::Laplacian,
            diffusions: vec![DiffusionSpec::GradientNoise {
                gamma,
                h: ScalarFn::Zero,
            }],
            basis: BasisSpec::dealiased(BasisKind::DirichletSine, m, 2.0)?,
            f_const: None,
            alpha: 2.0,
            beta: 2.0,
            p0: 4.0,
            epsilon: DEFAULT_EPSILON,
        })
    }

    pub fn with_basis(mut self, basis: BasisSpec) -> Self {
        self.basis = basis;
        self
    }

    /// Same equation with Galerkin dimension `m`, grid resized to keep the
    /// same dealiasing degree.
    pub fn with_m(&self, m: usize) -> Result<Self> {
        let degree = match self.drift {
            DriftSpec::SemiLinear { .. } => 3.0,
            _ => 2.0,
        };
        let mut out = self.clone();
        out.basis = BasisSpec::dealiased(self.basis.kind, m, degree)?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0) {
            return Err(Error::invalid("alpha", "must satisfy α > 1"));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::invalid("beta", "must satisfy β ≥ 0"));
        }
        if !(self.p0 >= self.beta + 2.0) {
            return Err(Error::invalid(
                "p0",
                format!("must satisfy p₀ ≥ β + 2 = {}", self.beta + 2.0),
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        if let Some(f) = self.f_const {
            if !(f >= 0.0) || !f.is_finite() {
                return Err(Error::invalid("f_const", "must be a finite nonnegative constant"));
            }
        }
        if self.diffusions.is_empty() {
            return Err(Error::invalid("diffusions", "at least one Wiener driver is required"));
        }
        for d in &self.diffusions {
            if !d.gamma().is_finite() {
                return Err(Error::invalid("gamma", "must be finite"));
            }
            if let DiffusionSpec::GradientNoise { h, .. } = d {
                h.validate("h").map_err(|e| Error::invalid("h", e))?;
            }
        }
        let m = self.basis.m;
        match (self.basis.kind, self.drift) {
            (BasisKind::FourierTorus, DriftSpec::Laplacian) => {
                if self
                    .diffusions
                    .iter()
                    .any(|d| !matches!(d, DiffusionSpec::FractionalHalf { .. }))
                {
                    return Err(Error::invalid(
                        "diffusions",
                        "the torus equation supports fractional-half noise only",
                    ));
                }
            }
            (BasisKind::FourierTorus, _) => {
                return Err(Error::invalid(
                    "basis",
                    "Burgers and semilinear drifts require the Dirichlet sine basis",
                ))
            }
            (BasisKind::DirichletSine, DriftSpec::SemiLinear { g, f }) => {
                g.validate("g").map_err(|e| Error::invalid("g", e))?;
                f.validate("f").map_err(|e| Error::invalid("f", e))?;
                if !f.spot_check_growth() {
                    return Err(Error::invalid("f", "growth bound failed the spot check"));
                }
                if self.basis.grid_points < 2 * m {
                    return Err(Error::invalid(
                        "grid_points",
                        format!("semilinear drift needs N ≥ 2m = {}", 2 * m),
                    ));
                }
            }
            (BasisKind::DirichletSine, _) => {}
        }
        Ok(())
    }
}

/// Constants of the structural conditions for an equation.
///
/// `theta`, `k`, `l`, `f` and `c_b` are derived analytically from the
/// registry constants; `fitted` collects sample-fitted values recorded by the
/// assumption checker so later runs reuse the same numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsLedger {
    pub alpha: f64,
    pub beta: f64,
    pub p0: f64,
    pub epsilon: f64,
    /// Predicted coercivity margin at `p0`.
    pub theta: f64,
    /// K shared by the coercivity and growth conditions.
    pub k: f64,
    /// Local-monotonicity constant; `None` when no finite L exists.
    pub l: Option<f64>,
    pub f: f64,
    /// Constant of the derived bound on Σ|B^j(x)|².
    pub c_b: f64,
    #[serde(default)]
    pub fitted: BTreeMap<String, f64>,
}

impl ConstantsLedger {
    /// ρ(x) = L(1+|x|_V^α)(1+|x|_H^β)
    pub fn rho_from_norms(&self, v: f64, h: f64) -> f64 {
        let l = self.l.unwrap_or(f64::INFINITY);
        if l == 0.0 {
            return 0.0;
        }
        l * (1.0 + v.powf(self.alpha)) * (1.0 + h.powf(self.beta))
    }
}

fn analytic_ledger(spec: &EquationSpec) -> ConstantsLedger {
    let p0 = spec.p0;
    let eps = spec.epsilon;
    // per-driver bounds |B_j(x)|² ≤ a|x|_V² + kh|x|_H² + fh and
    // |B_j(x)−B_j(y)|² ≤ a|x−y|_V² + bh|x−y|_H²
    let mut a_sum = 0.0;
    let mut kh_sum = 0.0;
    let mut fh_sum = 0.0;
    let mut bh_sum = 0.0;
    for d in &spec.diffusions {
        match *d {
            DiffusionSpec::GradientNoise { gamma, h } => {
                if h.is_zero() {
                    a_sum += gamma * gamma;
                } else {
                    let lh = h.lipschitz();
                    let h0 = h.at_zero();
                    a_sum += 2.0 * gamma * gamma;
                    kh_sum += 4.0 * lh * lh;
                    fh_sum += 4.0 * h0 * h0;
                    bh_sum += 2.0 * lh * lh;
                }
            }
            DiffusionSpec::FractionalHalf { gamma } => a_sum += 4.0 * gamma * gamma,
        }
    }
    let c_b = a_sum + kh_sum + fh_sum;

    let (theta, k, l, f) = match (spec.basis.kind, spec.drift) {
        (BasisKind::FourierTorus, _) => {
            // exact quadratic forms: 2⟨Δx,x⟩ = −2Σk²|x_k|², |Bx|² = 4γ²Σk²|x_k|²
            let theta = 2.0 - (p0 - 1.0) * a_sum;
            let l = if a_sum <= 2.0 { Some(0.0) } else { None };
            (theta, 2.0, l, 0.0)
        }
        (BasisKind::DirichletSine, drift) => {
            let budget = 2.0 - a_sum;
            let (theta_drift, k_coer, f_coer, k_growth, f_growth, l_drift) = match drift {
                DriftSpec::Laplacian => {
                    let l = (budget >= 0.0).then_some(0.0);
                    (0.0, 0.0, 0.0, 1.0, 0.0, l)
                }
                DriftSpec::Burgers => {
                    // 2|⟨v w, Dw⟩| ≤ 2|v|_{L4}|w|_{L4}|w|_V with
                    // |w|_{L4} ≤ |w|_H^{3/4}|w|_V^{1/4}, then Young (8/5, 8/3)
                    let l = (budget > 0.0).then(|| {
                        0.375 * 2f64.powf(8.0 / 3.0) * (1.6 * budget).powf(-5.0 / 3.0)
                    });
                    (0.0, 0.0, 0.0, 2.0, 0.0, l)
                }
                DriftSpec::SemiLinear { g, f } => {
                    let mg = g.bound();
                    let lg = g.lipschitz();
                    let lf = f.lipschitz();
                    let f0 = f.at_zero();
                    let g_on = !g.is_zero();
                    let f_on = !f.is_zero();
                    let theta_drift = if g_on { eps } else { 0.0 };
                    let k_coer = if g_on { mg * mg / eps } else { 0.0 }
                        + if f_on { 2.0 * lf + 1.0 } else { 0.0 };
                    let f_coer = if f_on { f0 * f0 } else { 0.0 };
                    let a = 1.0 + mg / PI + lf / (PI * PI);
                    let k_growth = 2.0 * a * a;
                    let f_growth = 2.0 * f0 * f0 / (PI * PI);
                    let l = if g_on {
                        (budget > 0.0).then(|| {
                            2.0 * mg * mg / budget
                                + 0.75 * (2.0 * budget).powf(-1.0 / 3.0) * (2.0 * lg).powf(4.0 / 3.0)
                                + 2.0 * lf
                        })
                    } else {
                        (budget >= 0.0).then_some(2.0 * lf)
                    };
                    (theta_drift, k_coer, f_coer, k_growth, f_growth, l)
                }
            };
            let theta = 2.0 - theta_drift - (p0 - 1.0) * a_sum;
            let k = (k_coer + (p0 - 1.0) * kh_sum).max(k_growth);
            let f = (f_coer + (p0 - 1.0) * fh_sum).max(f_growth);
            (theta, k, l_drift.map(|l| l + bh_sum), f)
        }
    };

    ConstantsLedger {
        alpha: spec.alpha,
        beta: spec.beta,
        p0,
        epsilon: eps,
        theta,
        k,
        l,
        f: spec.f_const.unwrap_or(f),
        c_b,
        fitted: BTreeMap::new(),
    }
}

/// Matrix entries ⟨Dφ_k, φ_j⟩ = 4jk/(j²−k²) for j+k odd, else 0 (1-based).
#[inline]
fn gradient_entry(j: usize, k: usize) -> f64 {
    if (j + k) % 2 == 1 {
        let (jf, kf) = (j as f64, k as f64);
        4.0 * jf * kf / (jf * jf - kf * kf)
    } else {
        0.0
    }
}

/// Sine-basis coefficients of Π(Du) for u = Σ c_k φ_k.
pub fn gradient_projection(c: &[f64]) -> Vec<f64> {
    let m = c.len();
    (1..=m)
        .map(|j| (1..=m).map(|k| gradient_entry(j, k) * c[k - 1]).sum())
        .collect()
}

/// An equation with its basis, precomputed matrices and constants ledger.
#[derive(Clone, Debug)]
pub struct Equation {
    spec: EquationSpec,
    basis: Basis,
    /// Row-major m×m projection of D onto the sine modes (Dirichlet only).
    gradient: Option<Vec<f64>>,
    ledger: ConstantsLedger,
}

fn overflow_check(values: &[f64], context: &str) -> Result<()> {
    if let Some(bad) = values.iter().find(|x| !x.is_finite()) {
        let magnitude = values
            .iter()
            .filter(|x| x.is_finite())
            .fold(0.0f64, |a, x| a.max(x.abs()));
        return Err(Error::Overflow {
            context: context.to_string(),
            magnitude: if bad.is_nan() { magnitude } else { f64::INFINITY },
        });
    }
    Ok(())
}

impl Equation {
    pub fn new(spec: EquationSpec) -> Result<Self> {
        spec.validate()?;
        let basis = Basis::new(spec.basis);
        let gradient = (spec.basis.kind == BasisKind::DirichletSine).then(|| {
            let m = spec.basis.m;
            let mut mat = vec![0.0; m * m];
            for j in 1..=m {
                for k in 1..=m {
                    mat[(j - 1) * m + (k - 1)] = gradient_entry(j, k);
                }
            }
            mat
        });
        let ledger = analytic_ledger(&spec);
        Ok(Self {
            spec,
            basis,
            gradient,
            ledger,
        })
    }

    pub fn spec(&self) -> &EquationSpec {
        &self.spec
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn ledger(&self) -> &ConstantsLedger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut ConstantsLedger {
        &mut self.ledger
    }

    pub fn drivers(&self) -> usize {
        self.spec.diffusions.len()
    }

    fn check_basis(&self, u: &SpectralField) -> Result<()> {
        if u.basis() != &self.basis {
            return Err(Error::BasisMismatch(format!(
                "field in {:?}, equation in {:?}",
                u.basis().spec(),
                self.basis.spec()
            )));
        }
        Ok(())
    }

    /// Δu in coefficient space: −λ_k c_k.
    pub fn laplacian(&self, u: &SpectralField) -> SpectralField {
        let mut out = u.clone();
        let b = u.basis().clone();
        out.scale_modes(|i| -b.eigenvalue(i));
        out
    }

    /// Non-Laplacian part N(u) of the drift; `None` when it vanishes identically.
    pub fn drift_nonlinear(&self, u: &SpectralField) -> Result<Option<SpectralField>> {
        self.check_basis(u)?;
        nonlinear_part(&self.spec.drift, u)
    }

    pub fn apply_drift(&self, u: &SpectralField) -> Result<SpectralField> {
        let mut out = self.laplacian(u);
        if let Some(n) = self.drift_nonlinear(u)? {
            out.axpy(1.0, &n);
        }
        Ok(out)
    }

    /// B^j(u) projected onto the basis.
    pub fn apply_diffusion(&self, j: usize, u: &SpectralField) -> Result<SpectralField> {
        self.check_basis(u)?;
        let spec = self
            .spec
            .diffusions
            .get(j)
            .ok_or_else(|| Error::invalid("driver", format!("no diffusion with index {j}")))?;
        match *spec {
            DiffusionSpec::GradientNoise { gamma, h } => {
                let c = u.sine_coeffs().expect("gradient noise runs on the sine basis");
                let m = c.len();
                let mat = self.gradient.as_ref().expect("gradient matrix");
                let mut out: Vec<f64> = (0..m)
                    .map(|r| gamma * mat[r * m..(r + 1) * m].iter().zip(c).map(|(a, b)| a * b).sum::<f64>())
                    .collect();
                if !h.is_zero() {
                    let hp = project_pointwise(u, |x| h.eval(x), "h(u)")?;
                    for (o, v) in out.iter_mut().zip(hp.sine_coeffs().unwrap()) {
                        *o += v;
                    }
                }
                SpectralField::from_sine(&self.basis, out)
            }
            DiffusionSpec::FractionalHalf { gamma } => Ok(fractional(gamma, u)),
        }
    }

    pub fn apply_diffusions(&self, u: &SpectralField) -> Result<Vec<SpectralField>> {
        (0..self.drivers()).map(|j| self.apply_diffusion(j, u)).collect()
    }

    /// ⟨A(u), u⟩
    pub fn drift_pairing_with_self(&self, u: &SpectralField) -> Result<f64> {
        Ok(self.apply_drift(u)?.inner(u))
    }

    /// ρ(ψ) with the ledger's L, α, β.
    pub fn rho(&self, psi: &SpectralField) -> f64 {
        self.ledger.rho_from_norms(psi.v_norm(), psi.h_norm())
    }
}

fn fractional(gamma: f64, u: &SpectralField) -> SpectralField {
    let mut out = u.clone();
    let b = u.basis().clone();
    out.scale_modes(|i| 2.0 * gamma * b.eigenvalue(i).sqrt());
    out
}

/// Projection of x ↦ F(u(x)) computed on the quadrature grid.
fn project_pointwise(u: &SpectralField, f: impl Fn(f64) -> f64, context: &str) -> Result<SpectralField> {
    let vals: Vec<f64> = synthesize(u).into_iter().map(f).collect();
    overflow_check(&vals, context)?;
    analyze(&vals, u.basis())
}

fn nonlinear_part(drift: &DriftSpec, u: &SpectralField) -> Result<Option<SpectralField>> {
    match *drift {
        DriftSpec::Laplacian => Ok(None),
        DriftSpec::Burgers => {
            let vals = synthesize(u);
            let dvals = synthesize_derivative(u);
            let prod: Vec<f64> = vals.iter().zip(&dvals).map(|(a, b)| a * b).collect();
            overflow_check(&prod, "u·Du")?;
            Ok(Some(analyze(&prod, u.basis())?))
        }
        DriftSpec::SemiLinear { g, f } => {
            if g.is_zero() && f.is_zero() {
                return Ok(None);
            }
            let vals = synthesize(u);
            let dvals = synthesize_derivative(u);
            let prod: Vec<f64> = vals
                .iter()
                .zip(&dvals)
                .map(|(&x, &dx)| g.eval(x) * dx + f.eval(x))
                .collect();
            overflow_check(&prod, "g(u)·Du + f(u)")?;
            Ok(Some(analyze(&prod, u.basis())?))
        }
    }
}

/// A(u) for a drift alone (no precomputed state needed).
pub fn apply_drift(drift: &DriftSpec, u: &SpectralField) -> Result<SpectralField> {
    if !matches!(drift, DriftSpec::Laplacian) && u.basis().kind() != BasisKind::DirichletSine {
        return Err(Error::BasisMismatch(
            "nonlinear drifts are defined on the Dirichlet sine basis".into(),
        ));
    }
    let mut out = u.clone();
    let b = u.basis().clone();
    out.scale_modes(|i| -b.eigenvalue(i));
    if let Some(n) = nonlinear_part(drift, u)? {
        out.axpy(1.0, &n);
    }
    Ok(out)
}

/// B(u) for a single diffusion, computing the gradient projection on the fly.
pub fn apply_diffusion(diffusion: &DiffusionSpec, u: &SpectralField) -> Result<SpectralField> {
    match *diffusion {
        DiffusionSpec::FractionalHalf { gamma } => Ok(fractional(gamma, u)),
        DiffusionSpec::GradientNoise { gamma, h } => {
            let Coeffs::Sine(c) = u.coeffs() else {
                return Err(Error::BasisMismatch(
                    "gradient noise is defined on the Dirichlet sine basis".into(),
                ));
            };
            let mut out: Vec<f64> = gradient_projection(c).into_iter().map(|x| gamma * x).collect();
            if !h.is_zero() {
                let hp = project_pointwise(u, |x| h.eval(x), "h(u)")?;
                for (o, v) in out.iter_mut().zip(hp.sine_coeffs().unwrap()) {
                    *o += v;
                }
            }
            SpectralField::from_sine(u.basis(), out)
        }
    }
}

/// ⟨A(u), u⟩ for a drift alone.
pub fn drift_pairing_with_self(drift: &DriftSpec, u: &SpectralField) -> Result<f64> {
    Ok(apply_drift(drift, u)?.inner(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::CounterStream;
    use crate::spectral::{norms, Basis};
    use rustfft::num_complex::Complex64;

    fn sine(m: usize) -> Basis {
        Basis::new(BasisSpec::dealiased(BasisKind::DirichletSine, m, 2.0).unwrap())
    }

    /// Trapezoid quadrature of ∫₀¹ F(x) φ_k(x) dx on a fine grid.
    fn quad_sine_coeff(f: impl Fn(f64) -> f64, k: usize) -> f64 {
        let n = 200_000;
        let h = 1.0 / n as f64;
        (1..n)
            .map(|i| {
                let x = i as f64 * h;
                f(x) * 2f64.sqrt() * (k as f64 * PI * x).sin()
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn laplacian_on_eigenfunction() {
        let b = sine(6);
        let u = SpectralField::single_mode(&b, 1, 1.0).unwrap();
        let a = apply_drift(&DriftSpec::Laplacian, &u).unwrap();
        let c = a.sine_coeffs().unwrap();
        assert!((c[0] + PI * PI).abs() < 1e-12);
        assert!(c[1..].iter().all(|&x| x == 0.0));
        assert!((drift_pairing_with_self(&DriftSpec::Laplacian, &u).unwrap() + PI * PI).abs() < 1e-12);
    }

    #[test]
    fn burgers_single_mode_lands_on_second_mode() {
        let b = sine(8);
        let amp = 0.7;
        let u = SpectralField::single_mode(&b, 1, amp).unwrap();
        let a = apply_drift(&DriftSpec::Burgers, &u).unwrap();
        let lap = apply_drift(&DriftSpec::Laplacian, &u).unwrap();
        let nl = a.sub(&lap);
        // quadrature oracle for ∫ u u' φ_k
        let uf = |x: f64| amp * 2f64.sqrt() * (PI * x).sin();
        let duf = |x: f64| amp * 2f64.sqrt() * PI * (PI * x).cos();
        for k in 1..=8 {
            let oracle = quad_sine_coeff(|x| uf(x) * duf(x), k);
            assert!((nl.sine_coeffs().unwrap()[k - 1] - oracle).abs() < 1e-8, "k={k}");
        }
        let c2 = nl.sine_coeffs().unwrap()[1];
        assert!((c2 - amp * amp * PI / 2f64.sqrt()).abs() < 1e-12);
        for (i, &c) in nl.sine_coeffs().unwrap().iter().enumerate() {
            if i != 1 {
                assert!(c.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_field_zero_outputs() {
        let b = sine(8);
        let z = SpectralField::zeros(&b);
        assert_eq!(apply_drift(&DriftSpec::Burgers, &z).unwrap(), z);
        assert_eq!(drift_pairing_with_self(&DriftSpec::Burgers, &z).unwrap(), 0.0);
        let d = DiffusionSpec::GradientNoise {
            gamma: 0.4,
            h: ScalarFn::Sin {
                amplitude: 1.0,
                frequency: 2.0,
            },
        };
        assert_eq!(apply_diffusion(&d, &z).unwrap(), z);
    }

    #[test]
    fn gradient_projection_matches_quadrature() {
        let b = sine(10);
        let u = SpectralField::single_mode(&b, 1, 1.0).unwrap();
        let d = DiffusionSpec::GradientNoise {
            gamma: 1.0,
            h: ScalarFn::Zero,
        };
        let out = apply_diffusion(&d, &u).unwrap();
        for k in 1..=10 {
            let oracle = quad_sine_coeff(|x| 2f64.sqrt() * PI * (PI * x).cos(), k);
            let got = out.sine_coeffs().unwrap()[k - 1];
            assert!((got - oracle).abs() < 1e-8, "k={k}: {got} vs {oracle}");
            if k % 2 == 1 {
                assert_eq!(got, 0.0);
            } else {
                let kf = k as f64;
                assert!((got - 4.0 * kf / (kf * kf - 1.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_projection_is_skew() {
        let b = sine(12);
        let mut s = CounterStream::new(4, 0, 0);
        let u = SpectralField::random(&b, 1.0, 1.0, &mut s);
        let d = DiffusionSpec::GradientNoise {
            gamma: 1.0,
            h: ScalarFn::Zero,
        };
        let du = apply_diffusion(&d, &u).unwrap();
        assert!(du.inner(&u).abs() < 1e-12);
        // |Π Du|_H ≤ |u|_V
        assert!(du.h_norm() <= u.v_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn fractional_multiplier() {
        let eq = Equation::new(EquationSpec::fractional(3, 0.5, 4.0).unwrap()).unwrap();
        let b = eq.basis().clone();
        let u = SpectralField::single_mode(&b, 1, 1.0).unwrap();
        let out = eq.apply_diffusion(0, &u).unwrap();
        let c = out.fourier_coeffs().unwrap();
        assert!((c[1] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(c[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn fractional_identity_on_random_fields() {
        let gamma = 0.37;
        let eq = Equation::new(EquationSpec::fractional(6, gamma, 4.0).unwrap()).unwrap();
        let mut s = CounterStream::new(9, 0, 0);
        for _ in 0..50 {
            let u = SpectralField::random(eq.basis(), 1.0, 3.0, &mut s);
            let bu = eq.apply_diffusion(0, &u).unwrap();
            let n = norms(&u);
            let expect = 4.0 * gamma * gamma * (n.v * n.v - n.h * n.h);
            assert!((bu.h_norm_sq() - expect).abs() <= 1e-12 * expect.max(1.0));
        }
    }

    #[test]
    fn burgers_energy_neutrality() {
        let b = sine(24);
        let mut s = CounterStream::new(2, 0, 0);
        for i in 0..200 {
            let u = SpectralField::random(&b, 1.0 + (i % 3) as f64 * 0.5, 10f64.powf((i % 5) as f64 - 2.0), &mut s);
            let a = apply_drift(&DriftSpec::Burgers, &u).unwrap();
            let residual = a.inner(&u) + u.v_norm_sq();
            assert!(residual.abs() <= 1e-10 * (1.0 + u.v_norm().powi(3)));
        }
    }

    #[test]
    fn laplacian_linearity() {
        let b = sine(16);
        let mut s = CounterStream::new(3, 0, 0);
        let u = SpectralField::random(&b, 1.0, 1.0, &mut s);
        let v = SpectralField::random(&b, 1.5, 2.0, &mut s);
        let mut comb = u.scaled(0.3);
        comb.axpy(-1.7, &v);
        let lhs = apply_drift(&DriftSpec::Laplacian, &comb).unwrap();
        let mut rhs = apply_drift(&DriftSpec::Laplacian, &u).unwrap().scaled(0.3);
        rhs.axpy(-1.7, &apply_drift(&DriftSpec::Laplacian, &v).unwrap());
        assert!(lhs.sub(&rhs).h_norm() <= 1e-12 * lhs.h_norm());
    }

    #[test]
    fn equation_validation() {
        let mut spec = EquationSpec::burgers(8, 0.3, ScalarFn::Zero).unwrap();
        spec.p0 = 3.0;
        assert!(Equation::new(spec).is_err());
        let spec = EquationSpec::burgers(8, 0.3, ScalarFn::Zero)
            .unwrap()
            .with_basis(BasisSpec::new(BasisKind::FourierTorus, 9, 16).unwrap());
        assert!(Equation::new(spec).is_err());
        let spec = EquationSpec::semilinear(8, 0.3, ScalarFn::Zero, ScalarFn::Zero, ScalarFn::Zero)
            .unwrap()
            .with_basis(BasisSpec::new(BasisKind::DirichletSine, 8, 12).unwrap());
        assert!(Equation::new(spec).is_err());
    }

    #[test]
    fn ledger_values() {
        let eq = Equation::new(EquationSpec::fractional(4, 0.1f64.sqrt(), 4.0).unwrap()).unwrap();
        assert!((eq.ledger().theta - 0.8).abs() < 1e-12);
        assert_eq!(eq.ledger().l, Some(0.0));
        let h = ScalarFn::Sin {
            amplitude: 0.5,
            frequency: 1.0,
        };
        let eq = Equation::new(
            EquationSpec::semilinear(8, 0.2f64.sqrt(), ScalarFn::TanhScaled { amplitude: 1.0, rate: 1.0 }, ScalarFn::Zero, h)
                .unwrap(),
        )
        .unwrap();
        // 2 − ε − 6γ²
        assert!((eq.ledger().theta - 0.75).abs() < 1e-12);
    }
}
