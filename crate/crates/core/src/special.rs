//! Gamma-function machinery, spectral multipliers, sphere volumes and the
//! sharp constant, plus the regime classification of the pair (n, s).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Absolute tolerance for snapping arguments to nonpositive integers (and
/// `s` to `n/2 + N`). User-supplied decimal parameters that land this close
/// to a pole are treated as exactly on it.
pub const POLE_TOL: f64 = 1e-9;

/// Dimension and order of the operator, `n >= 1`, `s > n/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub n: u32,
    pub s: f64,
}

impl SpectralParams {
    pub fn new(n: u32, s: f64) -> Result<Self, Error> {
        if n < 1 {
            return Err(Error::ParameterOutOfRange("n must be >= 1".into()));
        }
        if !(s > n as f64 / 2.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "s must be > n/2 = {}, got {}",
                n as f64 / 2.0,
                s
            )));
        }
        Ok(Self { n, s })
    }

    /// `n/2` as a float.
    pub fn half_n(&self) -> f64 {
        self.n as f64 / 2.0
    }

    /// The exponent `2n/(2s-n)` of the negative-power integral.
    pub fn neg_power_exponent(&self) -> f64 {
        2.0 * self.n as f64 / (2.0 * self.s - self.n as f64)
    }
}

/// A real value stored as `sign * exp(log_abs)`. `sign == 0` encodes an
/// exact zero (a gamma-ratio denominator pole).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLogValue {
    pub log_abs: f64,
    pub sign: i8,
}

impl SignedLogValue {
    pub fn zero() -> Self {
        Self { log_abs: f64::NEG_INFINITY, sign: 0 }
    }

    pub fn value(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            self.sign as f64 * self.log_abs.exp()
        }
    }
}

// Lanczos approximation, g = 7, 9 coefficients. Relative error of ln Gamma
// is a few ulps over the positive axis, well inside the 1e-13 budget for
// |arg| <= 200.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `sin(pi x)` computed with argument reduction to the nearest integer,
/// accurate for large |x|.
pub fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let f = x - n;
    let s = (PI * f).sin();
    if (n as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

/// True when `x` is within `POLE_TOL` of a nonpositive integer.
pub fn is_nonpositive_integer(x: f64) -> bool {
    x < 0.5 && (x - x.round()).abs() <= POLE_TOL
}

/// ln Gamma(x) for x > 0.
fn ln_gamma_pos(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let z = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

/// ln |Gamma(x)| together with the sign of Gamma(x). Errors on poles
/// (nonpositive integer arguments).
pub fn ln_gamma_signed(x: f64) -> Result<SignedLogValue, Error> {
    if is_nonpositive_integer(x) {
        return Err(Error::GammaPole(x));
    }
    if x > 0.0 {
        return Ok(SignedLogValue { log_abs: ln_gamma_pos(x), sign: 1 });
    }
    // Reflection: Gamma(x) = pi / (sin(pi x) Gamma(1 - x)), 1 - x > 1 > 0.
    let s = sin_pi(x);
    let log_abs = PI.ln() - s.abs().ln() - ln_gamma_pos(1.0 - x);
    let sign = if s > 0.0 { 1 } else { -1 };
    Ok(SignedLogValue { log_abs, sign })
}

/// Gamma(a) / Gamma(b) in signed-log form. A denominator pole gives sign 0
/// (value 0 by convention); a numerator pole is an error.
pub fn gamma_ratio(a: f64, b: f64) -> Result<SignedLogValue, Error> {
    let a_pole = is_nonpositive_integer(a);
    let b_pole = is_nonpositive_integer(b);
    match (a_pole, b_pole) {
        (true, true) => Err(Error::IndeterminateRatio { a, b }),
        (true, false) => Err(Error::NumeratorPole(a)),
        (false, true) => Ok(SignedLogValue::zero()),
        (false, false) => {
            let ga = ln_gamma_signed(a)?;
            let gb = ln_gamma_signed(b)?;
            Ok(SignedLogValue {
                log_abs: ga.log_abs - gb.log_abs,
                sign: ga.sign * gb.sign,
            })
        }
    }
}

/// The spectral multiplier `alpha_{2s,n}(l) = Gamma(l + n/2 + s) / Gamma(l + n/2 - s)`,
/// equal to 0 exactly at denominator poles.
pub fn multiplier(p: SpectralParams, ell: u32) -> f64 {
    let a = ell as f64 + p.half_n() + p.s;
    let b = ell as f64 + p.half_n() - p.s;
    // a > 0 always since s > n/2 > 0, so the numerator cannot hit a pole.
    gamma_ratio(a, b).expect("numerator pole impossible for l + n/2 + s > 0").value()
}

/// Surface measure of the unit n-sphere, `2 pi^{(n+1)/2} / Gamma((n+1)/2)`.
pub fn sphere_volume(n: u32) -> f64 {
    let half = (n as f64 + 1.0) / 2.0;
    2.0 * PI.powf(half) / ln_gamma_pos(half).exp()
}

/// The sharp constant `S_{s,n} = alpha_{2s,n}(0) |S^n|^{2s/n}`.
pub fn sharp_constant(p: SpectralParams) -> f64 {
    multiplier(p, 0) * sphere_volume(p.n).powf(2.0 * p.s / p.n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `s in (n/2, (n+4)/2) \ {(n+2)/2}`: the infimum is attained on the
    /// conformal orbit of constants.
    AttainedConformal,
    /// `s in n/2 + N`: the form vanishes on low harmonics; equality on their
    /// span.
    IntegerFamily,
    /// `s in ((n+4)/2, inf) \ (n/2 + N)`: no minimizer; the infimum is
    /// -infinity for n >= 2.
    NotAttained,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::AttainedConformal => "attained-conformal",
            Regime::IntegerFamily => "integer-family",
            Regime::NotAttained => "not-attained",
        };
        f.write_str(s)
    }
}

/// Classify (n, s). `s` is snapped to `n/2 + N` within `POLE_TOL`.
pub fn regime_classify(p: SpectralParams) -> Regime {
    let d = p.s - p.half_n();
    if d > 0.5 && (d - d.round()).abs() <= POLE_TOL {
        return Regime::IntegerFamily;
    }
    // s = (n+2)/2 is d = 1, already captured by the integer ladder above;
    // its equality set is the span of harmonics of degree <= 1.
    if d < 2.0 {
        Regime::AttainedConformal
    } else {
        Regime::NotAttained
    }
}
