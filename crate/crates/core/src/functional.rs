//! The quadratic form `a_{2s}[u]` on zonal functions, the conformal
//! quotient, the second variation at the constant function, the Funk-Hecke
//! consistency check, and the divergent test-function constructions with
//! their exact rational inequality certificate.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::gegenbauer::{equator_volume, gegenbauer_at_one, gegenbauer_eval, quadrature_rule};
use crate::special::{gamma_ratio, multiplier, SpectralParams};
use crate::zonal::{adaptive_gauss15, ZonalFunction};
use crate::Error;

/// Extended real. Serializes as `{"finite": x}` | `"+inf"` | `"-inf"` |
/// `"indeterminate"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
    NegInf,
    Indeterminate,
}

impl ExtReal {
    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

impl std::fmt::Display for ExtReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v:.17e}"),
            ExtReal::PosInf => f.write_str("+inf"),
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::Indeterminate => f.write_str("indeterminate"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => {
                use serde::ser::SerializeMap;
                let mut map = ser.serialize_map(Some(1))?;
                map.serialize_entry("finite", v)?;
                map.end()
            }
            ExtReal::PosInf => ser.serialize_str("+inf"),
            ExtReal::NegInf => ser.serialize_str("-inf"),
            ExtReal::Indeterminate => ser.serialize_str("indeterminate"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(de)?;
        match &v {
            serde_json::Value::String(s) => match s.as_str() {
                "+inf" => Ok(ExtReal::PosInf),
                "-inf" => Ok(ExtReal::NegInf),
                "indeterminate" => Ok(ExtReal::Indeterminate),
                other => Err(de::Error::custom(format!("unknown extended real: {other}"))),
            },
            serde_json::Value::Object(m) => m
                .get("finite")
                .and_then(|x| x.as_f64())
                .map(ExtReal::Finite)
                .ok_or_else(|| de::Error::custom("expected {\"finite\": number}")),
            _ => Err(de::Error::custom("expected extended real")),
        }
    }
}

/// Default bound on the relative truncation residual accepted by the form.
pub const DEFAULT_RESIDUAL_BOUND: f64 = 1e-10;

/// Evaluated form, negative-power integral and quotient, with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub a_value: f64,
    pub integral: ExtReal,
    pub quotient: ExtReal,
    pub truncation_residual: f64,
    pub divergence_certified: bool,
}

/// The truncated spectral sum with a one-sided tail bound. Beyond
/// `l0 = ceil(s - n/2) + 1` all multipliers are positive, so the truncated
/// value is a lower bound up to the reported tail term.
#[derive(Debug, Clone, Copy)]
pub struct QuadFormValue {
    pub value: f64,
    /// `multiplier(L_max) * (tail L2 mass)`.
    pub tail_bound: f64,
    /// Sum of `|alpha(l)| ||P_l u||^2`: the natural scale of the form.
    pub abs_scale: f64,
}

/// `a_{2s}[u] = sum_l alpha(l) ||P_l u||^2`, truncated at `L_max`.
pub fn quad_form_detailed(
    u: &ZonalFunction,
    p: SpectralParams,
    residual_bound: f64,
) -> Result<QuadFormValue, Error> {
    let residual = u.truncation_residual();
    if residual > residual_bound {
        return Err(Error::InsufficientBandLimit { residual, bound: residual_bound });
    }
    let mut value = 0.0;
    let mut abs_scale = 0.0;
    for ell in 0..=u.l_max() {
        let m = multiplier(p, ell);
        let norm = u.sphere_l2_norm_sq(ell)?;
        value += m * norm;
        abs_scale += m.abs() * norm;
    }
    let total_mass = equator_volume(u.n) * u.l2_mass();
    let tail_bound = multiplier(p, u.l_max()).abs() * residual * total_mass;
    Ok(QuadFormValue { value, tail_bound, abs_scale })
}

/// `a_{2s}[u]` with the default truncation bound.
pub fn quad_form(u: &ZonalFunction, p: SpectralParams) -> Result<f64, Error> {
    Ok(quad_form_detailed(u, p, DEFAULT_RESIDUAL_BOUND)?.value)
}

/// Truncation-limit estimate of the form on a profile with algebraic
/// spectral decay, such as the boundary-degenerate `(1+t)^{(2s-n)/2}`. The
/// partial sums behave like `a - c L^{-p}` with small `p`, so no fixed
/// truncation reaches a tight tolerance; Aitken extrapolation over
/// truncations `L/4, L/2, L` recovers the limit. Returns the extrapolated
/// value and the absolute scale at the largest truncation.
pub fn quad_form_extrapolated(
    p: SpectralParams,
    profile: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static,
    l_top: u32,
) -> Result<(f64, f64), Error> {
    assert!(l_top >= 16, "need room for three truncation levels");
    let mut vals = Vec::new();
    let mut scale = 0.0;
    for &l in &[l_top / 4, l_top / 2, l_top] {
        let rule = Arc::new(crate::gegenbauer::quadrature_rule(p.n, l as usize + 48)?);
        let u = ZonalFunction::make_zonal(p.n, profile.clone(), rule, l)?;
        let f = quad_form_detailed(&u, p, 1.0)?;
        vals.push(f.value);
        scale = f.abs_scale;
    }
    let (v0, v1, v2) = (vals[0], vals[1], vals[2]);
    let denom = (v2 - v1) - (v1 - v0);
    let limit = if denom.abs() < 1e-300 {
        v2
    } else {
        v2 - (v2 - v1) * (v2 - v1) / denom
    };
    Ok((limit, scale))
}

/// Assemble the conformal quotient `a_{2s}[u] * I^{(2s-n)/n}` under
/// extended-real arithmetic.
pub fn quotient(
    u: &ZonalFunction,
    p: SpectralParams,
    residual_bound: f64,
) -> Result<FunctionalReport, Error> {
    let form = quad_form_detailed(u, p, residual_bound)?;
    let integ = u.neg_power_integral(p)?;
    let a = form.value;
    let q = match integ.value {
        ExtReal::Finite(i) => {
            ExtReal::Finite(a * i.powf((2.0 * p.s - p.n as f64) / p.n as f64))
        }
        ExtReal::PosInf => {
            // A value of the truncated form that is indistinguishable from
            // zero at the scale of its own truncation error cannot have its
            // sign trusted.
            let zero_tol = 10.0 * form.tail_bound + 1e-12 * form.abs_scale.max(1.0);
            if a < -zero_tol {
                ExtReal::NegInf
            } else if a > zero_tol {
                ExtReal::PosInf
            } else {
                ExtReal::Indeterminate
            }
        }
        other => other,
    };
    Ok(FunctionalReport {
        a_value: a,
        integral: integ.value,
        quotient: q,
        truncation_residual: u.truncation_residual(),
        divergence_certified: integ.divergence_certified,
    })
}

/// Second variation of the quotient at the constant function on an
/// L2-normalized mean-zero harmonic of degree `ell`:
/// `alpha(l) + ((2s+n)/(2s-n)) alpha(0)`.
pub fn second_variation(p: SpectralParams, ell: u32) -> f64 {
    assert!(ell >= 1, "second variation is defined for mean-zero harmonics");
    let (n, s) = (p.n as f64, p.s);
    multiplier(p, ell) + ((2.0 * s + n) / (2.0 * s - n)) * multiplier(p, 0)
}

/// Max relative residual of the zonal kernel identity
/// `int |w - w'|^{2s-n} Y_l(w') dw' = [2^{2s} pi^{n/2} Gamma(s)/Gamma(n/2-s)] alpha(l)^{-1} Y_l(w)`
/// at 5 sample latitudes.
pub fn funk_hecke_residual(p: SpectralParams, ell: u32) -> Result<f64, Error> {
    let (n, s) = (p.n as f64, p.s);
    let d = p.s - p.half_n();
    if d > 0.0 && (d - d.round()).abs() <= crate::special::POLE_TOL {
        return Err(Error::ParameterOutOfRange(
            "kernel identity requires s not in n/2 + N".into(),
        ));
    }
    // Zonal reduction of the spherical convolution to one dimension:
    // mu_l = |S^{n-1}| int_0^pi (2 - 2 cos th)^{(2s-n)/2} C_l(cos th)/C_l(1) sin^{n-1} th dth.
    let c_one = gegenbauer_at_one(p.n, ell);
    let kernel_pow = (2.0 * s - n) / 2.0;
    let nn = p.n;
    let integrand = move |theta: f64| {
        let t = theta.cos();
        (2.0 - 2.0 * t).powf(kernel_pow) * gegenbauer_eval(nn, ell, t) / c_one
            * theta.sin().powf(n - 1.0)
    };
    let rough = crate::zonal::gauss15(&integrand, 0.0, PI).abs();
    let mu = equator_volume(p.n)
        * adaptive_gauss15(&integrand, 0.0, PI, 1e-12 * rough.max(1.0), 40);
    let constant = 2f64.powf(2.0 * s) * PI.powf(n / 2.0) * gamma_ratio(s, n / 2.0 - s)?.value();
    let alpha = multiplier(p, ell);
    let rhs_factor = constant / alpha;
    // Both sides are proportional to C_l(t); compare them at sample points.
    let mut worst: f64 = 0.0;
    for &t in &[-0.9, -0.35, 0.1, 0.55, 0.95] {
        let y = gegenbauer_eval(p.n, ell, t);
        let lhs = mu * y;
        let rhs = rhs_factor * y;
        let denom = rhs.abs().max(rhs_factor.abs() * 1e-3);
        worst = worst.max((lhs - rhs).abs() / denom);
    }
    Ok(worst)
}

fn instability_report(
    p: SpectralParams,
    profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
    degree: u32,
) -> Result<FunctionalReport, Error> {
    let l_max = degree + 4;
    let rule = Arc::new(quadrature_rule(p.n, (l_max as usize) + 12)?);
    let u = ZonalFunction::make_zonal(p.n, profile, rule, l_max)?;
    quotient(&u, p, DEFAULT_RESIDUAL_BOUND)
}

/// The even-window test function `u = t^{2K}`, valid when
/// `2K < s - n/2 < 2K + 1` and n >= 2. Its form value is strictly negative
/// and its negative-power integral diverges.
pub fn instability_even(p: SpectralParams, big_k: u32) -> Result<FunctionalReport, Error> {
    let d = p.s - p.half_n();
    if p.n < 2 || big_k < 1 || !(2.0 * (big_k as f64) < d && d < 2.0 * (big_k as f64) + 1.0) {
        return Err(Error::RegimeMismatch(format!(
            "even window needs 2K < s - n/2 < 2K+1 with n >= 2, K >= 1; got n={}, s={}, K={}",
            p.n, p.s, big_k
        )));
    }
    let k2 = 2 * big_k as i32;
    instability_report(p, move |t| t.powi(k2), 2 * big_k)
}

/// The odd-window test function `u = t^{2K} - t^{2K+1}`, valid when
/// `2K+1 < s - n/2 < 2K + 2` and n >= 2.
pub fn instability_odd(p: SpectralParams, big_k: u32) -> Result<FunctionalReport, Error> {
    let d = p.s - p.half_n();
    if p.n < 2 || big_k < 1 || !(2.0 * (big_k as f64) + 1.0 < d && d < 2.0 * (big_k as f64) + 2.0) {
        return Err(Error::RegimeMismatch(format!(
            "odd window needs 2K+1 < s - n/2 < 2K+2 with n >= 2, K >= 1; got n={}, s={}, K={}",
            p.n, p.s, big_k
        )));
    }
    let k2 = 2 * big_k as i32;
    instability_report(p, move |t| t.powi(k2) - t.powi(k2 + 1), 2 * big_k + 1)
}

/// Left side of the key rational inequality, as a float:
/// `[(2K+2+n+2k)/(2K+2-2k)] * [(2K+1)^2 (2k+n-1)(4k+n+1)] / [(2K+2k+n+1)^2 (2k+1)(4k+n-1)]`.
pub fn ineq2_lhs(n: u32, big_k: u32, k: u32) -> f64 {
    let (num, den) = ineq2_fraction(n as i128, big_k as i128, k as i128);
    num as f64 / den as f64
}

fn ineq2_fraction(n: i128, big_k: i128, k: i128) -> (i128, i128) {
    let num = (2 * big_k + 2 + n + 2 * k)
        * (2 * big_k + 1).pow(2)
        * (2 * k + n - 1)
        * (4 * k + n + 1);
    let den = (2 * big_k + 2 - 2 * k)
        * (2 * big_k + 2 * k + n + 1).pow(2)
        * (2 * k + 1)
        * (4 * k + n - 1);
    (num, den)
}

/// Exact-arithmetic verification report.
#[derive(Debug, Clone, Serialize)]
pub struct Ineq2Report {
    pub n_max: u32,
    pub k_cap: u32,
    /// Triples (n, K, k) where the inequality LHS >= 1 fails.
    pub violations: Vec<(u32, u32, u32)>,
    /// Triples (n, K, k), k <= K-1, where the structural factor fails to be
    /// nondecreasing from n to n+1.
    pub monotonicity_violations: Vec<(u32, u32, u32)>,
    /// Minimum of the LHS over the tested range, as an exact fraction.
    pub min_lhs: (i64, i64),
}

impl Ineq2Report {
    pub fn all_pass(&self) -> bool {
        self.violations.is_empty() && self.monotonicity_violations.is_empty()
    }
}

/// Verify `ineq2_lhs >= 1` for all `2 <= n <= n_max`, `1 <= K <= k_cap`,
/// `0 <= k <= K` by integer cross-multiplication, plus the monotonicity in
/// n of the structural factor for `k <= K-1`.
pub fn ineq2_verify(n_max: u32, k_cap: u32) -> Result<Ineq2Report, Error> {
    if n_max < 2 || k_cap < 1 {
        return Err(Error::ParameterOutOfRange("need n_max >= 2 and K_max >= 1".into()));
    }
    let mut violations = Vec::new();
    let mut monotonicity_violations = Vec::new();
    let mut min_frac: Option<(i128, i128)> = None;
    for n in 2..=n_max {
        for big_k in 1..=k_cap {
            for k in 0..=big_k {
                let (num, den) = ineq2_fraction(n as i128, big_k as i128, k as i128);
                debug_assert!(den > 0);
                if num < den {
                    violations.push((n, big_k, k));
                }
                // min over fractions by cross-multiplication
                match min_frac {
                    Some((mn, md)) if num * md >= mn * den => {}
                    _ => min_frac = Some((num, den)),
                }
                // Monotonicity of g(n) = (4k+n+1)(2K+2+n+2k)/(2K+2k+n+1)^2
                // from n to n+1, for k <= K-1.
                if k + 1 <= big_k && n + 1 <= n_max {
                    let (ni, ki, kk) = (n as i128, k as i128, big_k as i128);
                    let lhs = (4 * ki + ni + 2)
                        * (2 * kk + 4 + ni + 2 * ki)
                        * (2 * kk + 2 * ki + ni + 1).pow(2);
                    let rhs = (4 * ki + ni + 1)
                        * (2 * kk + 2 + ni + 2 * ki)
                        * (2 * kk + 2 * ki + ni + 2).pow(2);
                    if lhs < rhs {
                        monotonicity_violations.push((n, big_k, k));
                    }
                }
            }
        }
    }
    // Reduce the minimum fraction for readability.
    let (min_num, min_den) = min_frac.expect("nonempty range");
    let g = gcd(min_num, min_den);
    Ok(Ineq2Report {
        n_max,
        k_cap,
        violations,
        monotonicity_violations,
        min_lhs: ((min_num / g) as i64, (min_den / g) as i64),
    })
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a.max(1)
}
