//! Closed-form references for the torus equation du = Δu dt + 2γ(−Δ)^{1/2}u dW.
//!
//! The equation is diagonal in Fourier space. Mode k solves the scalar linear
//! SDE dû = −k²û dt + 2γ|k|û dW, a geometric Brownian motion with
//!
//!   û(t) = c₀ exp((−k² − 2γ²k²)t + 2γ|k|W_t)
//!   E|û(t)|^p = |c₀|^p exp(p·k²·(2γ²(p−1) − 1)·t)
//!
//! The moment formula follows from E exp(σpW_t) = exp(σ²p²t/2) with σ = 2γ|k|:
//! the exponent is p(−k² − σ²/2) + σ²p²/2 = p k²(2γ²(p−1) − 1).

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeParams {
    pub k: u32,
    pub gamma: f64,
    pub c0: Complex64,
}

impl ModeParams {
    pub fn new(k: u32, gamma: f64, c0: f64) -> Self {
        assert!(k >= 1, "mode k = 0 is constant in time");
        Self {
            k,
            gamma,
            c0: Complex64::new(c0, 0.0),
        }
    }

    fn k2(&self) -> f64 {
        (self.k as f64).powi(2)
    }

    /// Multiplier of the noise term, 2γ|k|.
    pub fn sigma(&self) -> f64 {
        2.0 * self.gamma * self.k as f64
    }
}

/// Exact mode path on the grid t_n = n·dt driven by the given increments.
pub fn exact_mode_path(p: &ModeParams, increments: &[f64], dt: f64) -> Vec<Complex64> {
    let drift = -p.k2() * (1.0 + 2.0 * p.gamma * p.gamma);
    let sigma = p.sigma();
    let mut w = 0.0;
    let mut out = Vec::with_capacity(increments.len() + 1);
    out.push(p.c0);
    for (n, dw) in increments.iter().enumerate() {
        w += dw;
        let t = (n + 1) as f64 * dt;
        out.push(p.c0 * (drift * t + sigma * w).exp());
    }
    out
}

/// p k²(2γ²(p−1) − 1), the growth rate of E|û_k|^p.
pub fn moment_exponent(k: u32, gamma: f64, moment_p: f64) -> f64 {
    moment_p * (k as f64).powi(2) * (2.0 * gamma * gamma * (moment_p - 1.0) - 1.0)
}

pub fn exact_mode_moment(p: &ModeParams, moment_p: f64, t: f64) -> f64 {
    assert!(t >= 0.0);
    p.c0.norm().powf(moment_p) * (moment_exponent(p.k, p.gamma, moment_p) * t).exp()
}

/// Deterministic heat decay of a coefficient with −Δ eigenvalue λ.
pub fn heat_decay(c0: f64, eigenvalue: f64, t: f64) -> f64 {
    c0 * (-eigenvalue * t).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicates {
    /// 2γ²(p₀−1) < 1
    pub coercivity_ok: bool,
    /// 1 − γ²/2 > 0, in the gradient-noise normalization γDu.
    pub stochastic_parabolicity_ok: bool,
    /// 2γ²(p₀−1) > 1: known ill-posedness in L^p((0,T)×Ω; L²(𝕋)).
    pub brz_veraar_illposed: bool,
}

pub fn wellposed_predicates(gamma: f64, p0: f64) -> Predicates {
    assert!(p0 >= 2.0, "p0 must be at least 2");
    let s = 2.0 * gamma * gamma * (p0 - 1.0);
    Predicates {
        coercivity_ok: s < 1.0,
        stochastic_parabolicity_ok: 1.0 - gamma * gamma / 2.0 > 0.0,
        brz_veraar_illposed: s > 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::standard_normal;

    #[test]
    fn heat_and_drift_only_paths() {
        let p = ModeParams::new(2, 0.0, 1.5);
        let path = exact_mode_path(&p, &[0.3, -0.1, 0.4], 0.01);
        for (n, z) in path.iter().enumerate() {
            assert!((z.re - 1.5 * (-4.0 * 0.01 * n as f64).exp()).abs() < 1e-15);
        }
        let p = ModeParams::new(3, 0.4, 1.0);
        let path = exact_mode_path(&p, &[0.0; 4], 0.1);
        let expect = (-(9.0 + 2.0 * 0.16 * 9.0) * 0.4f64).exp();
        assert!((path[4].re - expect).abs() < 1e-15);
    }

    #[test]
    fn moment_closed_forms() {
        let p = ModeParams::new(1, 0.0, 2.0);
        assert!((exact_mode_moment(&p, 2.0, 0.3) - 4.0 * (-0.6f64).exp()).abs() < 1e-14);
        // boundary 2γ²(p−1) = 1 → constant
        let g = (1.0f64 / 6.0).sqrt();
        let p = ModeParams::new(3, g, 1.2);
        assert!((exact_mode_moment(&p, 4.0, 5.0) - 1.2f64.powi(4)).abs() < 1e-12);
        let p = ModeParams::new(1, 0.1f64.sqrt(), 1.0);
        let v = exact_mode_moment(&p, 4.0, 0.5);
        assert!((v - (-0.8f64).exp()).abs() < 1e-14);
        assert!((v - 0.4493).abs() < 1e-4);
    }

    #[test]
    fn exponent_sign_matches_threshold() {
        for k in 1..4 {
            for i in 0..50 {
                let g2 = 0.01 * i as f64;
                for &p in &[2.0, 3.0, 4.0, 6.0] {
                    let e = moment_exponent(k, g2.sqrt(), p);
                    assert_eq!(e <= 0.0, 2.0 * g2 * (p - 1.0) <= 1.0 + 1e-15);
                }
            }
        }
    }

    #[test]
    fn predicates() {
        let p = wellposed_predicates((1.0f64 / 3.0).sqrt(), 4.0);
        assert!(!p.coercivity_ok);
        assert!(p.brz_veraar_illposed);
        let p = wellposed_predicates(0.0, 4.0);
        assert!(p.coercivity_ok && p.stochastic_parabolicity_ok && !p.brz_veraar_illposed);
        let p = wellposed_predicates(0.15f64.sqrt(), 4.0);
        assert!(p.coercivity_ok);
    }

    /// Second moment from exact-path sampling, 10⁵ paths, five (k, γ) pairs.
    #[test]
    fn second_moment_matches_sampling() {
        let n = 100_000u64;
        let t: f64 = 0.2;
        for (idx, &(k, g2)) in [(1u32, 0.05), (1, 0.1), (2, 0.1), (1, 0.2), (3, 0.02)]
            .iter()
            .enumerate()
        {
            let p = ModeParams::new(k, f64::sqrt(g2), 1.0);
            let (mut s1, mut s2) = (0.0, 0.0);
            for i in 0..n {
                let w = t.sqrt() * standard_normal(&[77, idx as u64, i, 0]);
                let x = exact_mode_path(&p, &[w], t)[1].norm_sqr();
                s1 += x;
                s2 += x * x;
            }
            let mean = s1 / n as f64;
            let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
            let oracle = exact_mode_moment(&p, 2.0, t);
            assert!((mean - oracle).abs() < 3.0 * se, "k={k} γ²={g2}: {mean} vs {oracle} ± {se}");
        }
    }

    /// Fourth moment against a fine-step Euler–Maruyama run of the scalar SDE.
    #[test]
    fn fourth_moment_matches_fine_step_sde() {
        let p = ModeParams::new(1, 0.1f64.sqrt(), 1.0);
        let t = 0.5;
        let steps = 1000u64;
        let dt = t / steps as f64;
        let n = 20_000u64;
        let sigma = p.sigma();
        let (mut s1, mut s2) = (0.0, 0.0);
        for i in 0..n {
            let mut x = 1.0f64;
            for s in 0..steps {
                let dw = dt.sqrt() * standard_normal(&[78, i, s, 0]);
                x += -x * dt + sigma * x * dw;
            }
            let y = x.powi(4);
            s1 += y;
            s2 += y * y;
        }
        let mean = s1 / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        let oracle = exact_mode_moment(&p, 4.0, t);
        assert!((mean - oracle).abs() < 3.0 * se + 2e-3, "{mean} vs {oracle} ± {se}");
    }
}
