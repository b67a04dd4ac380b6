//! Concrete Gelfand triple V ↪ H ↪ V* on two eigenbases.
//!
//! * `DirichletSine`: φ_k(x) = √2 sin(kπx) on (0,1), k = 1..m, with
//!   −Δφ_k = (kπ)² φ_k. |u|_V is the W₀^{1,2} seminorm (equivalent to the full
//!   norm by Friedrichs' inequality).
//! * `FourierTorus`: e_k(x) = e^{ikx}/√(2π) on ℝ/2πℤ, |k| ≤ K, m = 2K+1.
//!   |u|_V is the full W^{1,2}(𝕋) norm. Only k ≥ 0 coefficients are stored,
//!   negative wavenumbers are their conjugates, so fields are real-valued.
//!
//! Nonlinear terms are evaluated on a physical grid of N points through
//! FFT-based sine/Fourier transforms and projected back.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::CounterStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    DirichletSine,
    FourierTorus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    /// Galerkin dimension (number of retained real modes).
    pub m: usize,
    /// Physical quadrature size N.
    pub grid_points: usize,
}

/// Smallest grid size that projects products of degree `degree` exactly.
pub fn min_grid_points(m: usize, degree: f64) -> usize {
    (((degree + 1.0) * m as f64) / 2.0).ceil() as usize
}

impl BasisSpec {
    pub fn new(kind: BasisKind, m: usize, grid_points: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("m", "Galerkin dimension must be positive"));
        }
        if kind == BasisKind::FourierTorus && m.is_multiple_of(2) {
            return Err(Error::invalid(
                "m",
                format!("FourierTorus needs m = 2K+1 (odd), got {m}"),
            ));
        }
        let floor = min_grid_points(m, 2.0);
        if grid_points < floor {
            return Err(Error::invalid(
                "grid_points",
                format!("N = {grid_points} is below the dealiasing floor ceil(3m/2) = {floor}"),
            ));
        }
        Ok(Self {
            kind,
            m,
            grid_points,
        })
    }

    /// Grid sized for nonlinearities of polynomial degree `degree` (at least
    /// quadratic), rounded up to an FFT-friendly size.
    pub fn dealiased(kind: BasisKind, m: usize, degree: f64) -> Result<Self> {
        let need = min_grid_points(m, degree.max(2.0)).max(1);
        let n = match kind {
            // FFT length is 2(N+1): make N+1 a power of two.
            BasisKind::DirichletSine => (need + 1).next_power_of_two() - 1,
            BasisKind::FourierTorus => need.next_power_of_two(),
        };
        Self::new(kind, m, n)
    }

    /// K for FourierTorus (m = 2K+1); m for DirichletSine.
    pub fn max_wavenumber(&self) -> usize {
        match self.kind {
            BasisKind::DirichletSine => self.m,
            BasisKind::FourierTorus => (self.m - 1) / 2,
        }
    }

    /// Number of stored coefficients.
    pub fn stored_len(&self) -> usize {
        match self.kind {
            BasisKind::DirichletSine => self.m,
            BasisKind::FourierTorus => self.max_wavenumber() + 1,
        }
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    len: usize,
}

/// A basis together with its transform plans. Cheap to clone.
#[derive(Clone)]
pub struct Basis {
    spec: BasisSpec,
    plans: Arc<Plans>,
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Basis").field("spec", &self.spec).finish()
    }
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Basis {
    pub fn new(spec: BasisSpec) -> Self {
        let len = match spec.kind {
            BasisKind::DirichletSine => 2 * (spec.grid_points + 1),
            BasisKind::FourierTorus => spec.grid_points,
        };
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            len,
        };
        Self {
            spec,
            plans: Arc::new(plans),
        }
    }

    pub fn from_parts(kind: BasisKind, m: usize, grid_points: usize) -> Result<Self> {
        Ok(Self::new(BasisSpec::new(kind, m, grid_points)?))
    }

    pub fn spec(&self) -> BasisSpec {
        self.spec
    }

    pub fn kind(&self) -> BasisKind {
        self.spec.kind
    }

    pub fn m(&self) -> usize {
        self.spec.m
    }

    pub fn grid_points(&self) -> usize {
        self.spec.grid_points
    }

    pub fn stored_len(&self) -> usize {
        self.spec.stored_len()
    }

    /// Quadrature nodes: interior points i/(N+1) on (0,1), or 2πj/N on 𝕋.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.grid_points();
        match self.kind() {
            BasisKind::DirichletSine => (1..=n).map(|i| i as f64 / (n + 1) as f64).collect(),
            BasisKind::FourierTorus => (0..n).map(|j| TAU * j as f64 / n as f64).collect(),
        }
    }

    /// Quadrature weight of each grid node.
    pub fn quadrature_weight(&self) -> f64 {
        let n = self.grid_points() as f64;
        match self.kind() {
            BasisKind::DirichletSine => 1.0 / (n + 1.0),
            BasisKind::FourierTorus => TAU / n,
        }
    }

    /// Wavenumber of stored slot `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> usize {
        match self.kind() {
            BasisKind::DirichletSine => i + 1,
            BasisKind::FourierTorus => i,
        }
    }

    /// Eigenvalue of −Δ for stored slot `i`.
    #[inline]
    pub fn eigenvalue(&self, i: usize) -> f64 {
        let k = self.wavenumber(i) as f64;
        match self.kind() {
            BasisKind::DirichletSine => (k * PI) * (k * PI),
            BasisKind::FourierTorus => k * k,
        }
    }

    /// Weight of slot `i` in |·|_V².
    #[inline]
    pub fn v_weight(&self, i: usize) -> f64 {
        match self.kind() {
            BasisKind::DirichletSine => self.eigenvalue(i),
            BasisKind::FourierTorus => 1.0 + self.eigenvalue(i),
        }
    }

    /// How many physical modes slot `i` stands for (±k on the torus).
    #[inline]
    pub fn multiplicity(&self, i: usize) -> f64 {
        match self.kind() {
            BasisKind::FourierTorus if i > 0 => 2.0,
            _ => 1.0,
        }
    }

    /// Same grid, fewer modes.
    pub fn truncated(&self, m_target: usize) -> Result<Basis> {
        if m_target > self.m() {
            return Err(Error::Dimension(format!(
                "cannot project onto {m_target} modes from a {}-mode basis",
                self.m()
            )));
        }
        Ok(Basis::new(BasisSpec::new(
            self.kind(),
            m_target,
            self.grid_points(),
        )?))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coeffs {
    Sine(Vec<f64>),
    /// c_0, c_1, ..., c_K; c_{-k} = conj(c_k).
    Fourier(Vec<Complex64>),
}

/// Coefficients of a function (or a functional) in a chosen eigenbasis.
#[derive(Clone, Debug)]
pub struct SpectralField {
    basis: Basis,
    coeffs: Coeffs,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis && self.coeffs == other.coeffs
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleNorms {
    pub h: f64,
    pub v: f64,
    pub vstar: f64,
    pub l4: f64,
}

impl SpectralField {
    pub fn zeros(basis: &Basis) -> Self {
        let coeffs = match basis.kind() {
            BasisKind::DirichletSine => Coeffs::Sine(vec![0.0; basis.stored_len()]),
            BasisKind::FourierTorus => {
                Coeffs::Fourier(vec![Complex64::new(0.0, 0.0); basis.stored_len()])
            }
        };
        Self {
            basis: basis.clone(),
            coeffs,
        }
    }

    pub fn from_sine(basis: &Basis, coeffs: Vec<f64>) -> Result<Self> {
        if basis.kind() != BasisKind::DirichletSine {
            return Err(Error::BasisMismatch("sine coefficients for a non-sine basis".into()));
        }
        if coeffs.len() != basis.stored_len() {
            return Err(Error::Dimension(format!(
                "expected {} sine coefficients, got {}",
                basis.stored_len(),
                coeffs.len()
            )));
        }
        Ok(Self {
            basis: basis.clone(),
            coeffs: Coeffs::Sine(coeffs),
        })
    }

    /// Builds a torus field from c_0..c_K. The imaginary part of c_0 is
    /// dropped so the represented function is real.
    pub fn from_fourier(basis: &Basis, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if basis.kind() != BasisKind::FourierTorus {
            return Err(Error::BasisMismatch(
                "Fourier coefficients for a non-Fourier basis".into(),
            ));
        }
        if coeffs.len() != basis.stored_len() {
            return Err(Error::Dimension(format!(
                "expected {} Fourier coefficients (k = 0..K), got {}",
                basis.stored_len(),
                coeffs.len()
            )));
        }
        coeffs[0].im = 0.0;
        Ok(Self {
            basis: basis.clone(),
            coeffs: Coeffs::Fourier(coeffs),
        })
    }

    /// Field with a single real coefficient `value` on wavenumber `k`.
    pub fn single_mode(basis: &Basis, k: usize, value: f64) -> Result<Self> {
        let mut u = Self::zeros(basis);
        let slot = match basis.kind() {
            BasisKind::DirichletSine => k.checked_sub(1),
            BasisKind::FourierTorus => Some(k),
        }
        .filter(|&i| i < basis.stored_len())
        .ok_or_else(|| Error::invalid("k", format!("wavenumber {k} not in basis")))?;
        match &mut u.coeffs {
            Coeffs::Sine(c) => c[slot] = value,
            Coeffs::Fourier(c) => c[slot] = Complex64::new(value, 0.0),
        }
        Ok(u)
    }

    /// Random field with coefficient decay (1+k)^{-q}, rescaled to |u|_H = amplitude.
    pub fn random(basis: &Basis, decay: f64, amplitude: f64, stream: &mut CounterStream) -> Self {
        let mut u = Self::zeros(basis);
        match &mut u.coeffs {
            Coeffs::Sine(c) => {
                for (i, ci) in c.iter_mut().enumerate() {
                    *ci = stream.next_normal() * ((i + 1) as f64).powf(-decay);
                }
            }
            Coeffs::Fourier(c) => {
                for (k, ck) in c.iter_mut().enumerate() {
                    let w = (1.0 + k as f64).powf(-decay);
                    *ck = if k == 0 {
                        Complex64::new(stream.next_normal() * w, 0.0)
                    } else {
                        let re = stream.next_normal();
                        let im = stream.next_normal();
                        Complex64::new(re, im) * (w / 2f64.sqrt())
                    };
                }
            }
        }
        let h = u.h_norm();
        if h > 0.0 {
            u.scale(amplitude / h);
        }
        u
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn coeffs(&self) -> &Coeffs {
        &self.coeffs
    }

    pub fn sine_coeffs(&self) -> Option<&[f64]> {
        match &self.coeffs {
            Coeffs::Sine(c) => Some(c),
            Coeffs::Fourier(_) => None,
        }
    }

    pub fn fourier_coeffs(&self) -> Option<&[Complex64]> {
        match &self.coeffs {
            Coeffs::Fourier(c) => Some(c),
            Coeffs::Sine(_) => None,
        }
    }

    /// Coefficient of stored slot `i` as a complex number.
    pub fn coefficient(&self, i: usize) -> Complex64 {
        match &self.coeffs {
            Coeffs::Sine(c) => Complex64::new(c[i], 0.0),
            Coeffs::Fourier(c) => c[i],
        }
    }

    /// |c_i|².
    #[inline]
    pub fn mode_sq(&self, i: usize) -> f64 {
        match &self.coeffs {
            Coeffs::Sine(c) => c[i] * c[i],
            Coeffs::Fourier(c) => c[i].norm_sqr(),
        }
    }

    pub fn stored_len(&self) -> usize {
        self.basis.stored_len()
    }

    /// Σ_k w(k)|c_k|² over all physical wavenumbers (±k counted on the torus).
    pub fn weighted_sq_sum(&self, weight: impl Fn(usize) -> f64) -> f64 {
        (0..self.stored_len())
            .map(|i| self.basis.multiplicity(i) * weight(i) * self.mode_sq(i))
            .sum()
    }

    pub fn h_norm_sq(&self) -> f64 {
        self.weighted_sq_sum(|_| 1.0)
    }

    pub fn h_norm(&self) -> f64 {
        self.h_norm_sq().sqrt()
    }

    pub fn v_norm_sq(&self) -> f64 {
        self.weighted_sq_sum(|i| self.basis.v_weight(i))
    }

    pub fn v_norm(&self) -> f64 {
        self.v_norm_sq().sqrt()
    }

    pub fn vstar_norm_sq(&self) -> f64 {
        self.weighted_sq_sum(|i| 1.0 / self.basis.v_weight(i))
    }

    pub fn vstar_norm(&self) -> f64 {
        self.vstar_norm_sq().sqrt()
    }

    /// H inner product (u, v); also the V*–V pairing for coefficient functionals.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        match (&self.coeffs, &other.coeffs) {
            (Coeffs::Sine(a), Coeffs::Sine(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            (Coeffs::Fourier(a), Coeffs::Fourier(b)) => a
                .iter()
                .zip(b)
                .enumerate()
                .map(|(i, (x, y))| self.basis.multiplicity(i) * (x * y.conj()).re)
                .sum(),
            _ => panic!("inner product across basis kinds"),
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.scale_modes(|_| a);
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// Multiplies slot `i` by the real factor `factor(i)`.
    pub fn scale_modes(&mut self, factor: impl Fn(usize) -> f64) {
        match &mut self.coeffs {
            Coeffs::Sine(c) => c.iter_mut().enumerate().for_each(|(i, x)| *x *= factor(i)),
            Coeffs::Fourier(c) => c.iter_mut().enumerate().for_each(|(i, x)| *x *= factor(i)),
        }
    }

    /// self += a·other
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        debug_assert_eq!(self.basis, other.basis);
        match (&mut self.coeffs, &other.coeffs) {
            (Coeffs::Sine(x), Coeffs::Sine(y)) => {
                x.iter_mut().zip(y).for_each(|(xi, yi)| *xi += a * yi)
            }
            (Coeffs::Fourier(x), Coeffs::Fourier(y)) => {
                x.iter_mut().zip(y).for_each(|(xi, yi)| *xi += yi * a)
            }
            _ => panic!("axpy across basis kinds"),
        }
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &SpectralField) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn is_finite(&self) -> bool {
        match &self.coeffs {
            Coeffs::Sine(c) => c.iter().all(|x| x.is_finite()),
            Coeffs::Fourier(c) => c.iter().all(|x| x.re.is_finite() && x.im.is_finite()),
        }
    }

    /// Coefficients as a flat real vector: sine coefficients, or
    /// (c_0, Re c_1, Im c_1, …, Re c_K, Im c_K) on the torus. Length m.
    pub fn to_real_vec(&self) -> Vec<f64> {
        match &self.coeffs {
            Coeffs::Sine(c) => c.clone(),
            Coeffs::Fourier(c) => {
                let mut out = Vec::with_capacity(2 * c.len() - 1);
                out.push(c[0].re);
                for z in &c[1..] {
                    out.push(z.re);
                    out.push(z.im);
                }
                out
            }
        }
    }

    /// Inverse of [`SpectralField::to_real_vec`].
    pub fn from_real_vec(basis: &Basis, values: &[f64]) -> Result<Self> {
        if values.len() != basis.m() {
            return Err(Error::Dimension(format!(
                "expected {} real values, got {}",
                basis.m(),
                values.len()
            )));
        }
        match basis.kind() {
            BasisKind::DirichletSine => Self::from_sine(basis, values.to_vec()),
            BasisKind::FourierTorus => {
                let mut c = vec![Complex64::new(values[0], 0.0)];
                c.extend(values[1..].chunks(2).map(|p| Complex64::new(p[0], p[1])));
                Self::from_fourier(basis, c)
            }
        }
    }
}

fn check_len(values: &[f64], basis: &Basis) -> Result<()> {
    if values.len() != basis.grid_points() {
        return Err(Error::Dimension(format!(
            "expected {} grid values, got {}",
            basis.grid_points(),
            values.len()
        )));
    }
    Ok(())
}

/// Galerkin projection of grid values onto span{φ_1..φ_m} by discrete
/// sine/Fourier transform.
pub fn analyze(values: &[f64], basis: &Basis) -> Result<SpectralField> {
    check_len(values, basis)?;
    let n = basis.grid_points();
    let len = basis.plans.len;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    match basis.kind() {
        BasisKind::DirichletSine => {
            // odd extension to a 2(N+1)-periodic sequence
            for (j, &v) in values.iter().enumerate() {
                buf[j + 1] = Complex64::new(v, 0.0);
                buf[len - j - 1] = Complex64::new(-v, 0.0);
            }
            basis.plans.forward.process(&mut buf);
            let scale = -(2f64.sqrt()) / (2.0 * (n + 1) as f64);
            let c = (1..=basis.m()).map(|k| scale * buf[k].im).collect();
            Ok(SpectralField {
                basis: basis.clone(),
                coeffs: Coeffs::Sine(c),
            })
        }
        BasisKind::FourierTorus => {
            for (b, &v) in buf.iter_mut().zip(values) {
                *b = Complex64::new(v, 0.0);
            }
            basis.plans.forward.process(&mut buf);
            let scale = TAU.sqrt() / n as f64;
            let mut c: Vec<Complex64> = buf[..basis.stored_len()].iter().map(|z| z * scale).collect();
            c[0].im = 0.0;
            Ok(SpectralField {
                basis: basis.clone(),
                coeffs: Coeffs::Fourier(c),
            })
        }
    }
}

/// Evaluates Σ_k c_k·mult_k·ψ_k on the grid, where ψ_k is the sine (or cosine
/// when `derivative`) family for Dirichlet, and e^{ikx} for the torus.
fn synthesize_with(u: &SpectralField, derivative: bool) -> Vec<f64> {
    let basis = &u.basis;
    let n = basis.grid_points();
    let len = basis.plans.len;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    match &u.coeffs {
        Coeffs::Sine(c) => {
            for (i, &ci) in c.iter().enumerate() {
                let k = (i + 1) as f64;
                buf[i + 1] = Complex64::new(if derivative { ci * k * PI } else { ci }, 0.0);
            }
            basis.plans.inverse.process(&mut buf);
            let s = 2f64.sqrt();
            (1..=n)
                .map(|j| if derivative { s * buf[j].re } else { s * buf[j].im })
                .collect()
        }
        Coeffs::Fourier(c) => {
            for (k, &ck) in c.iter().enumerate() {
                let z = if derivative {
                    ck * Complex64::new(0.0, k as f64)
                } else {
                    ck
                };
                buf[k] += z;
                if k > 0 {
                    buf[len - k] += z.conj();
                }
            }
            basis.plans.inverse.process(&mut buf);
            let s = 1.0 / TAU.sqrt();
            buf.iter().map(|z| s * z.re).collect()
        }
    }
}

/// Pointwise values of Σ c_k φ_k on the quadrature grid.
pub fn synthesize(u: &SpectralField) -> Vec<f64> {
    synthesize_with(u, false)
}

/// Pointwise values of the spatial derivative Du on the quadrature grid.
pub fn synthesize_derivative(u: &SpectralField) -> Vec<f64> {
    synthesize_with(u, true)
}

/// L⁴ norm by grid quadrature of |u|⁴.
pub fn l4_norm(u: &SpectralField) -> f64 {
    let w = u.basis.quadrature_weight();
    let s: f64 = synthesize(u).iter().map(|x| x.powi(4)).sum();
    (w * s).powf(0.25)
}

pub fn norms(u: &SpectralField) -> TripleNorms {
    TripleNorms {
        h: u.h_norm(),
        v: u.v_norm(),
        vstar: u.vstar_norm(),
        l4: l4_norm(u),
    }
}

/// Π_m: keeps the lowest `m_target` modes.
pub fn project(u: &SpectralField, m_target: usize) -> Result<SpectralField> {
    let basis = u.basis.truncated(m_target)?;
    let keep = basis.stored_len();
    let coeffs = match &u.coeffs {
        Coeffs::Sine(c) => Coeffs::Sine(c[..keep].to_vec()),
        Coeffs::Fourier(c) => Coeffs::Fourier(c[..keep].to_vec()),
    };
    Ok(SpectralField { basis, coeffs })
}

/// Re-expresses `u` in a larger (or equal) basis of the same kind by zero padding.
pub fn embed(u: &SpectralField, target: &Basis) -> Result<SpectralField> {
    if target.kind() != u.basis.kind() || target.stored_len() < u.stored_len() {
        return Err(Error::BasisMismatch(format!(
            "cannot embed {:?} into {:?}",
            u.basis.spec(),
            target.spec()
        )));
    }
    let mut out = SpectralField::zeros(target);
    match (&mut out.coeffs, &u.coeffs) {
        (Coeffs::Sine(dst), Coeffs::Sine(src)) => dst[..src.len()].copy_from_slice(src),
        (Coeffs::Fourier(dst), Coeffs::Fourier(src)) => dst[..src.len()].copy_from_slice(src),
        _ => unreachable!(),
    }
    Ok(out)
}

/// Duality pairing ⟨a, v⟩ = Σ ⟨a, φ_k⟩ c_k(v).
pub fn pairing(a: &SpectralField, v: &SpectralField) -> Result<f64> {
    if a.basis != v.basis {
        return Err(Error::BasisMismatch(format!(
            "{:?} vs {:?}",
            a.basis.spec(),
            v.basis.spec()
        )));
    }
    Ok(a.inner(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(m: usize) -> Basis {
        Basis::new(BasisSpec::dealiased(BasisKind::DirichletSine, m, 2.0).unwrap())
    }

    fn torus(m: usize) -> Basis {
        Basis::new(BasisSpec::dealiased(BasisKind::FourierTorus, m, 2.0).unwrap())
    }

    #[test]
    fn spec_validation() {
        assert!(BasisSpec::new(BasisKind::DirichletSine, 0, 10).is_err());
        assert!(BasisSpec::new(BasisKind::FourierTorus, 4, 10).is_err());
        assert!(BasisSpec::new(BasisKind::DirichletSine, 8, 11).is_err());
        assert!(BasisSpec::new(BasisKind::DirichletSine, 8, 12).is_ok());
        let d = BasisSpec::dealiased(BasisKind::DirichletSine, 64, 2.0).unwrap();
        assert_eq!(d.grid_points, 127);
        let f = BasisSpec::dealiased(BasisKind::FourierTorus, 9, 2.0).unwrap();
        assert_eq!(f.grid_points, 16);
    }

    #[test]
    fn analyze_basis_function() {
        let b = sine(8);
        let vals: Vec<f64> = b
            .grid()
            .iter()
            .map(|x| 2f64.sqrt() * (PI * x).sin())
            .collect();
        let u = analyze(&vals, &b).unwrap();
        let c = u.sine_coeffs().unwrap();
        assert!((c[0] - 1.0).abs() < 1e-14);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn analyze_two_mode_signal_matches_quadrature() {
        let b = sine(8);
        let grid = b.grid();
        let vals: Vec<f64> = grid
            .iter()
            .map(|x| (PI * x).sin() + 0.5 * (3.0 * PI * x).sin())
            .collect();
        let u = analyze(&vals, &b).unwrap();
        // direct inner-product quadrature oracle
        let n1 = (b.grid_points() + 1) as f64;
        for k in 1..=8 {
            let direct: f64 = grid
                .iter()
                .zip(&vals)
                .map(|(x, v)| v * 2f64.sqrt() * (k as f64 * PI * x).sin())
                .sum::<f64>()
                / n1;
            assert!((u.sine_coeffs().unwrap()[k - 1] - direct).abs() < 1e-13);
        }
        let c = u.sine_coeffs().unwrap();
        assert!((c[0] - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        assert!((c[2] - 0.5 / 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn analyze_rejects_wrong_length() {
        let b = sine(4);
        assert!(matches!(analyze(&[0.0; 3], &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn zero_values_zero_field() {
        let b = torus(5);
        let u = analyze(&vec![0.0; b.grid_points()], &b).unwrap();
        assert_eq!(u, SpectralField::zeros(&b));
        assert!(synthesize(&u).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn synthesize_fourier_cosine() {
        let b = torus(5);
        let c = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let u = SpectralField::from_fourier(&b, c).unwrap();
        let vals = synthesize(&u);
        for (x, v) in b.grid().iter().zip(vals) {
            // direct summation oracle: (1/√2π)(½e^{ix} + ½e^{-ix})
            let expect = x.cos() / TAU.sqrt() * 2.0 * 0.5;
            assert!((v - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn synthesize_sine_unit() {
        let b = sine(6);
        let u = SpectralField::single_mode(&b, 1, 1.0).unwrap();
        for (x, v) in b.grid().iter().zip(synthesize(&u)) {
            assert!((v - 2f64.sqrt() * (PI * x).sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_values() {
        let b = sine(6);
        let u = SpectralField::from_sine(&b, vec![0.3, 0.0, -1.2, 0.0, 0.0, 0.7]).unwrap();
        let du = synthesize_derivative(&u);
        for (x, d) in b.grid().iter().zip(du) {
            let expect: f64 = [(1.0, 0.3), (3.0, -1.2), (6.0, 0.7)]
                .iter()
                .map(|(k, c)| c * 2f64.sqrt() * k * PI * (k * PI * x).cos())
                .sum();
            assert!((d - expect).abs() < 1e-12);
        }
        let bt = torus(7);
        let c = vec![
            Complex64::new(0.4, 0.0),
            Complex64::new(0.1, -0.3),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.2, 0.5),
        ];
        let ut = SpectralField::from_fourier(&bt, c.clone()).unwrap();
        for (x, d) in bt.grid().iter().zip(synthesize_derivative(&ut)) {
            let expect: f64 = (1..4)
                .map(|k| {
                    let e = Complex64::new(0.0, k as f64 * x).exp();
                    2.0 * (c[k] * Complex64::new(0.0, k as f64) * e).re
                })
                .sum::<f64>()
                / TAU.sqrt();
            assert!((d - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn norms_closed_forms() {
        let b = sine(8);
        let u = SpectralField::single_mode(&b, 1, 1.0).unwrap();
        let n = norms(&u);
        assert!((n.h - 1.0).abs() < 1e-15);
        assert!((n.v - PI).abs() < 1e-14);
        assert!((n.vstar - 1.0 / PI).abs() < 1e-15);

        let mut c = vec![0.0; 8];
        c[0] = 1.0;
        c[1] = 1.0;
        let u = SpectralField::from_sine(&b, c).unwrap();
        let n = norms(&u);
        assert!((n.h - 2f64.sqrt()).abs() < 1e-14);
        assert!((n.v - PI * 5f64.sqrt()).abs() < 1e-13);

        let z = norms(&SpectralField::zeros(&b));
        assert_eq!((z.h, z.v, z.vstar, z.l4), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn l4_of_sine_mode() {
        // ∫ (√2 sin πx)^4 = 4·3/8 = 3/2
        let b = sine(4);
        let u = SpectralField::single_mode(&b, 1, 1.0).unwrap();
        assert!((l4_norm(&u) - 1.5f64.powf(0.25)).abs() < 1e-13);
    }

    #[test]
    fn project_truncates() {
        let b = sine(3);
        let u = SpectralField::from_sine(&b, vec![1.0, 0.5, 0.25]).unwrap();
        let p = project(&u, 2).unwrap();
        assert_eq!(p.sine_coeffs().unwrap(), &[1.0, 0.5]);
        assert!((p.h_norm_sq() - 1.25).abs() < 1e-15);
        assert_eq!(project(&u, 3).unwrap(), u);
        assert!(matches!(project(&u, 4), Err(Error::Dimension(_))));
    }

    #[test]
    fn pairing_examples() {
        let b = sine(2);
        let a = SpectralField::from_sine(&b, vec![1.0, 2.0]).unwrap();
        let v = SpectralField::from_sine(&b, vec![3.0, 4.0]).unwrap();
        assert_eq!(pairing(&a, &v).unwrap(), 11.0);
        assert_eq!(pairing(&a, &SpectralField::zeros(&b)).unwrap(), 0.0);
        assert!((pairing(&a, &a).unwrap() - a.h_norm_sq()).abs() < 1e-15);
        let other = sine(3);
        assert!(matches!(
            pairing(&a, &SpectralField::zeros(&other)),
            Err(Error::BasisMismatch(_))
        ));
    }

    #[test]
    fn real_vec_round_trip() {
        let b = torus(7);
        let mut s = CounterStream::new(1, 2, 3);
        let u = SpectralField::random(&b, 1.0, 2.0, &mut s);
        let back = SpectralField::from_real_vec(&b, &u.to_real_vec()).unwrap();
        assert_eq!(u, back);
    }
}
