//! Registry of scalar nonlinearities with exactly known constants.

use serde::{Deserialize, Serialize};

/// Named scalar function. Bounds and Lipschitz constants are exact, which is
/// what the assumption checker's analytic ledger relies on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarFn {
    #[default]
    Zero,
    /// x ↦ value
    Constant { value: f64 },
    /// x ↦ clamp(x, −clip, clip)
    ClippedIdentity { clip: f64 },
    /// x ↦ amplitude·sin(frequency·x)
    Sin { amplitude: f64, frequency: f64 },
    /// x ↦ amplitude·tanh(rate·x)
    TanhScaled { amplitude: f64, rate: f64 },
}

impl ScalarFn {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ScalarFn::Zero => 0.0,
            ScalarFn::Constant { value } => value,
            ScalarFn::ClippedIdentity { clip } => x.clamp(-clip, clip),
            ScalarFn::Sin {
                amplitude,
                frequency,
            } => amplitude * (frequency * x).sin(),
            ScalarFn::TanhScaled { amplitude, rate } => amplitude * (rate * x).tanh(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            ScalarFn::Zero => true,
            ScalarFn::Constant { value } => value == 0.0,
            ScalarFn::ClippedIdentity { clip } => clip == 0.0,
            ScalarFn::Sin { amplitude, .. } | ScalarFn::TanhScaled { amplitude, .. } => {
                amplitude == 0.0
            }
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            ScalarFn::Zero | ScalarFn::Constant { .. } => 0.0,
            ScalarFn::ClippedIdentity { clip } => {
                if clip > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarFn::Sin {
                amplitude,
                frequency,
            } => (amplitude * frequency).abs(),
            ScalarFn::TanhScaled { amplitude, rate } => (amplitude * rate).abs(),
        }
    }

    /// sup |f|; every registry entry is bounded.
    pub fn bound(&self) -> f64 {
        match *self {
            ScalarFn::Zero => 0.0,
            ScalarFn::Constant { value } => value.abs(),
            ScalarFn::ClippedIdentity { clip } => clip.abs(),
            ScalarFn::Sin { amplitude, .. } | ScalarFn::TanhScaled { amplitude, .. } => {
                amplitude.abs()
            }
        }
    }

    pub fn at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    /// Growth exponent r in |f(x)| ≤ K(1+|x|^r). Bounded functions have r = 0.
    pub fn growth_exponent(&self) -> f64 {
        0.0
    }

    /// Constant K in |f(x)| ≤ K(1+|x|^r) and (f(x)−f(y))(x−y) ≤ K(1+|y|^s)|x−y|², s = 0.
    pub fn growth_constant(&self) -> f64 {
        self.bound().max(self.lipschitz())
    }

    pub fn validate(&self, name: &str) -> Result<(), String> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name}: {what} must be finite"))
            }
        };
        match *self {
            ScalarFn::Zero => Ok(()),
            ScalarFn::Constant { value } => finite(value, "value"),
            ScalarFn::ClippedIdentity { clip } => {
                finite(clip, "clip")?;
                if clip < 0.0 {
                    return Err(format!("{name}: clip must be nonnegative"));
                }
                Ok(())
            }
            ScalarFn::Sin {
                amplitude,
                frequency,
            } => finite(amplitude, "amplitude").and(finite(frequency, "frequency")),
            ScalarFn::TanhScaled { amplitude, rate } => {
                finite(amplitude, "amplitude").and(finite(rate, "rate"))
            }
        }
    }

    /// Spot-checks |f(x)| ≤ K(1+|x|^r) on [−10, 10].
    pub fn spot_check_growth(&self) -> bool {
        let k = self.growth_constant();
        let r = self.growth_exponent();
        (0..=400).all(|i| {
            let x = -10.0 + 0.05 * i as f64;
            self.eval(x).abs() <= k * (1.0 + x.abs().powf(r)) * (1.0 + 1e-12) + 1e-300
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_honest() {
        let fns = [
            ScalarFn::Zero,
            ScalarFn::Constant { value: -0.3 },
            ScalarFn::ClippedIdentity { clip: 2.0 },
            ScalarFn::Sin {
                amplitude: 0.7,
                frequency: 3.0,
            },
            ScalarFn::TanhScaled {
                amplitude: -1.5,
                rate: 0.4,
            },
        ];
        for f in fns {
            assert!(f.spot_check_growth(), "{f:?}");
            let lip = f.lipschitz();
            for i in 0..2000 {
                let x = -20.0 + 0.02 * i as f64;
                let y = x + 0.013;
                assert!(f.eval(x).abs() <= f.bound() + 1e-15);
                assert!((f.eval(x) - f.eval(y)).abs() <= lip * 0.013 * (1.0 + 1e-9) + 1e-15);
            }
        }
    }

    #[test]
    fn serde_tagging() {
        let f: ScalarFn = toml::from_str("kind = \"tanh-scaled\"\namplitude = 0.5\nrate = 2.0").unwrap();
        assert_eq!(
            f,
            ScalarFn::TanhScaled {
                amplitude: 0.5,
                rate: 2.0
            }
        );
        assert!(toml::from_str::<ScalarFn>("kind = \"sin\"\namplitude = 1.0\nfrequency = 1.0\nextra = 1").is_err());
        assert!(toml::from_str::<ScalarFn>("kind = \"cubic\"").is_err());
    }
}
