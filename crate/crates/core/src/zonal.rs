//! Zonal (axially symmetric) functions on the n-sphere: grid/spectral
//! representation, conformal dilation, stereographic transfer, and the
//! negative-power integral with divergence certification.

use std::io::{BufRead, Write};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::functional::ExtReal;
use crate::gegenbauer::{
    equator_volume, gegenbauer_norm_sq, quadrature_rule, GegenbauerCoeffs,
    QuadratureRule,
};
use crate::special::SpectralParams;
use crate::Error;

/// The one-parameter conformal map obtained by conjugating Euclidean
/// dilation by lambda with stereographic projection. Acts on the zonal
/// coordinate t by a Moebius map; lambda = 1 is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalDilation {
    pub lambda: f64,
}

impl ConformalDilation {
    pub fn new(lambda: f64) -> Result<Self, Error> {
        if !(lambda > 0.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "dilation parameter must be > 0, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    /// Image of the zonal coordinate under the map.
    pub fn map_t(&self, t: f64) -> f64 {
        let l2 = self.lambda * self.lambda;
        ((1.0 + t) - l2 * (1.0 - t)) / ((1.0 + t) + l2 * (1.0 - t))
    }

    /// Jacobian of the map on the sphere, as a function of t.
    pub fn jacobian(&self, t: f64, n: u32) -> f64 {
        let l2 = self.lambda * self.lambda;
        (2.0 * self.lambda / ((1.0 + t) + l2 * (1.0 - t))).powi(n as i32)
    }
}

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An axially symmetric function on the n-sphere, stored as profile values
/// on a quadrature grid together with its zonal spectrum up to `l_max`.
/// The exact profile closure is kept so transformed functions evaluate
/// exactly off-grid.
#[derive(Clone)]
pub struct ZonalFunction {
    pub n: u32,
    rule: Arc<QuadratureRule>,
    values: Vec<f64>,
    profile: Profile,
    spectrum: Vec<f64>,
    l_max: u32,
    truncation_residual: f64,
}

impl std::fmt::Debug for ZonalFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ZonalFunction")
            .field("n", &self.n)
            .field("l_max", &self.l_max)
            .field("grid_order", &self.rule.len())
            .field("truncation_residual", &self.truncation_residual)
            .finish()
    }
}

/// Evaluate all basis polynomials of degree 0..=l_max at t in one
/// recurrence pass.
pub fn basis_row(n: u32, l_max: u32, t: f64) -> Vec<f64> {
    let mut row = Vec::with_capacity(l_max as usize + 1);
    if n == 1 {
        let theta = t.clamp(-1.0, 1.0).acos();
        for ell in 0..=l_max {
            row.push((ell as f64 * theta).cos());
        }
        return row;
    }
    let alpha = (n as f64 - 1.0) / 2.0;
    row.push(1.0);
    if l_max >= 1 {
        row.push(2.0 * alpha * t);
    }
    for l in 2..=l_max {
        let lf = l as f64;
        let next = (2.0 * (lf + alpha - 1.0) * t * row[(l - 1) as usize]
            - (lf + 2.0 * alpha - 2.0) * row[(l - 2) as usize])
            / lf;
        row.push(next);
    }
    row
}

impl ZonalFunction {
    /// Sample a profile on the rule's grid and project onto the zonal basis.
    pub fn make_zonal(
        n: u32,
        profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
        rule: Arc<QuadratureRule>,
        l_max: u32,
    ) -> Result<Self, Error> {
        assert_eq!(rule.n, n, "quadrature rule dimension mismatch");
        let profile: Profile = Arc::new(profile);
        let values: Vec<f64> = rule.nodes.iter().map(|&t| profile(t)).collect();
        for (&t, &v) in rule.nodes.iter().zip(&values) {
            if !v.is_finite() {
                return Err(Error::NonFiniteSample { t });
            }
        }
        let mut spectrum = vec![0.0f64; l_max as usize + 1];
        for ((&t, &w), &v) in rule.nodes.iter().zip(&rule.weights).zip(&values) {
            let row = basis_row(n, l_max, t);
            let wv = w * v;
            for (ell, coef) in spectrum.iter_mut().enumerate() {
                *coef += wv * row[ell];
            }
        }
        let mut captured = 0.0;
        for (ell, coef) in spectrum.iter_mut().enumerate() {
            let norm = gegenbauer_norm_sq(n, ell as u32);
            *coef /= norm;
            captured += *coef * *coef * norm;
        }
        let total: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .zip(&values)
            .map(|((_, &w), &v)| w * v * v)
            .sum();
        let truncation_residual = if total > 0.0 {
            ((total - captured) / total).max(0.0)
        } else {
            0.0
        };
        Ok(Self { n, rule, values, profile, spectrum, l_max, truncation_residual })
    }

    pub fn rule(&self) -> &Arc<QuadratureRule> {
        &self.rule
    }

    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    pub fn truncation_residual(&self) -> f64 {
        self.truncation_residual
    }

    pub fn grid_values(&self) -> &[f64] {
        &self.values
    }

    /// Spectral coefficient of degree `ell`.
    pub fn coeff(&self, ell: u32) -> Result<f64, Error> {
        if ell > self.l_max {
            return Err(Error::DegreeOutOfRange { ell, l_max: self.l_max });
        }
        Ok(self.spectrum[ell as usize])
    }

    pub fn spectrum(&self) -> GegenbauerCoeffs {
        GegenbauerCoeffs {
            n: self.n,
            degrees: (0..=self.l_max).collect(),
            values: self.spectrum.clone(),
        }
    }

    /// Exact profile evaluation (closure-backed).
    pub fn eval(&self, t: f64) -> f64 {
        (self.profile)(t)
    }

    /// Weighted L2 mass of the profile on the grid,
    /// `int u(t)^2 (1-t^2)^{(n-2)/2} dt`.
    pub fn l2_mass(&self) -> f64 {
        self.rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .zip(&self.values)
            .map(|((_, &w), &v)| w * v * v)
            .sum()
    }

    /// `||P_l u||^2` on the n-sphere.
    pub fn sphere_l2_norm_sq(&self, ell: u32) -> Result<f64, Error> {
        let c = self.coeff(ell)?;
        Ok(equator_volume(self.n) * c * c * gegenbauer_norm_sq(self.n, ell))
    }

    /// Conformal dilation: `u_Phi(t) = J(t)^{-(2s-n)/(2n)} u(t')`. The
    /// spectrum is recomputed since conformal images are not band-limited.
    pub fn conformal_dilate(
        &self,
        d: ConformalDilation,
        p: SpectralParams,
    ) -> Result<Self, Error> {
        let src = self.profile.clone();
        let exponent = (2.0 * p.s - p.n as f64) / 2.0;
        let n = self.n;
        let profile = move |t: f64| {
            let l2 = d.lambda * d.lambda;
            let denom = (1.0 + t) + l2 * (1.0 - t);
            let t_image = ((1.0 + t) - l2 * (1.0 - t)) / denom;
            // J^{-(2s-n)/(2n)} = (denom / (2 lambda))^{(2s-n)/2}
            (denom / (2.0 * d.lambda)).powf(exponent) * src(t_image)
        };
        Self::make_zonal(n, profile, self.rule.clone(), self.l_max)
    }

    /// Value of the stereographic transfer `u_S` at radius r:
    /// `((1+r^2)/2)^{(2s-n)/2} u((1-r^2)/(1+r^2))`.
    pub fn stereographic_value(&self, p: SpectralParams, r: f64) -> f64 {
        let r2 = r * r;
        ((1.0 + r2) / 2.0).powf((2.0 * p.s - p.n as f64) / 2.0)
            * self.eval((1.0 - r2) / (1.0 + r2))
    }

    /// `int_{S^n} u^{-2n/(2s-n)} d omega` as an extended real, with
    /// divergence certified by vanishing-order analysis at profile zeros.
    pub fn neg_power_integral(&self, p: SpectralParams) -> Result<NegPowerIntegral, Error> {
        let max_grid = self.values.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
        for (&t, &v) in self.rule.nodes.iter().zip(&self.values) {
            if v < -1e-12 * max_grid.max(1.0) {
                return Err(Error::ProfileNotNonnegative { t, value: v });
            }
        }
        let p_exp = p.neg_power_exponent();
        let zeros = locate_zeros(&*self.profile);
        for z in &zeros {
            let q = z.order;
            let threshold = if z.boundary {
                1.0 + (p.n as f64 - 2.0) / 2.0
            } else {
                1.0
            };
            if q * p_exp >= threshold - 1e-9 {
                return Ok(NegPowerIntegral { value: ExtReal::PosInf, divergence_certified: true });
            }
        }
        // Integrate in theta = arccos t; the weight becomes sin^{n-1} theta
        // and the boundary singularity of the n = 1 weight disappears.
        let profile = self.profile.clone();
        let nf = self.n as f64;
        let integrand = move |theta: f64| {
            let u = profile(theta.cos()).max(0.0);
            if u == 0.0 {
                return 0.0; // measure-zero touch point of a certified-finite integral
            }
            u.powf(-p_exp) * theta.sin().powf(nf - 1.0)
        };
        let rough = gauss15(&integrand, 0.0, std::f64::consts::PI);
        let tol = 1e-10 * rough.abs().max(1.0);
        let value = adaptive_gauss15(&integrand, 0.0, std::f64::consts::PI, tol, 40);
        Ok(NegPowerIntegral {
            value: ExtReal::Finite(equator_volume(self.n) * value),
            divergence_certified: false,
        })
    }
}

/// Result of the negative-power integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegPowerIntegral {
    pub value: ExtReal,
    pub divergence_certified: bool,
}

/// The equality profile `t -> c (1 - zeta t)^{(2s-n)/2}`.
pub fn equality_profile(
    p: SpectralParams,
    zeta: f64,
    c: f64,
    rule: Arc<QuadratureRule>,
    l_max: u32,
) -> Result<ZonalFunction, Error> {
    if !(zeta.abs() < 1.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "zeta must satisfy |zeta| < 1, got {zeta}"
        )));
    }
    if !(c > 0.0) {
        return Err(Error::ParameterOutOfRange(format!("c must be > 0, got {c}")));
    }
    let exponent = (2.0 * p.s - p.n as f64) / 2.0;
    ZonalFunction::make_zonal(p.n, move |t| c * (1.0 - zeta * t).powf(exponent), rule, l_max)
}

/// Profiles vanishing at the south pole: order 1 is `(1+t)^{(2s-n)/2}`
/// (the equality case of the positivity statement); order 2 multiplies by
/// `(1-t)` to vanish at both poles.
pub fn vanishing_profile(
    p: SpectralParams,
    order: u8,
    rule: Arc<QuadratureRule>,
    l_max: u32,
) -> Result<ZonalFunction, Error> {
    let exponent = (2.0 * p.s - p.n as f64) / 2.0;
    match order {
        1 => ZonalFunction::make_zonal(p.n, move |t| (1.0 + t).powf(exponent), rule, l_max),
        2 => ZonalFunction::make_zonal(
            p.n,
            move |t| (1.0 + t).powf(exponent) * (1.0 - t),
            rule,
            l_max,
        ),
        _ => Err(Error::ParameterOutOfRange("vanishing order must be 1 or 2".into())),
    }
}

// ---------------------------------------------------------------------------
// Zero location and vanishing-order estimation

#[derive(Debug, Clone, Copy)]
struct ProfileZero {
    #[allow(dead_code)] // kept for Debug output when certification surprises
    t: f64,
    order: f64,
    boundary: bool,
}

const ZERO_SCAN_POINTS: usize = 2049;
const ZERO_REL_THRESHOLD: f64 = 1e-7;

fn locate_zeros(profile: &(dyn Fn(f64) -> f64 + Send + Sync)) -> Vec<ProfileZero> {
    let mut ts = Vec::with_capacity(ZERO_SCAN_POINTS);
    for j in 0..ZERO_SCAN_POINTS {
        ts.push(-1.0 + 2.0 * j as f64 / (ZERO_SCAN_POINTS - 1) as f64);
    }
    let vals: Vec<f64> = ts.iter().map(|&t| profile(t).abs()).collect();
    let max = vals.iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        // Identically zero profile: certainly divergent.
        return vec![ProfileZero { t: 0.0, order: f64::INFINITY, boundary: false }];
    }
    let thresh = ZERO_REL_THRESHOLD * max;
    let mut zeros = Vec::new();
    let mut j = 0usize;
    while j < ZERO_SCAN_POINTS {
        if vals[j] <= thresh {
            // Cluster of small values; refine within its bracket.
            let start = j;
            while j + 1 < ZERO_SCAN_POINTS && vals[j + 1] <= thresh {
                j += 1;
            }
            let lo = if start == 0 { ts[0] } else { ts[start - 1] };
            let hi = if j + 1 >= ZERO_SCAN_POINTS { ts[ZERO_SCAN_POINTS - 1] } else { ts[j + 1] };
            let t0 = refine_min(profile, lo, hi);
            let boundary = t0.abs() > 1.0 - 1e-6;
            let t0 = if boundary { t0.signum() } else { t0 };
            let order = fit_vanishing_order(profile, t0);
            zeros.push(ProfileZero { t: t0, order, boundary });
        }
        j += 1;
    }
    zeros
}

fn refine_min(profile: &(dyn Fn(f64) -> f64 + Send + Sync), mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..80 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if profile(m1).abs() <= profile(m2).abs() {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}

// Vanishing order from the log-log slope on three nested neighborhoods of
// the zero; both sides are used when they fit in [-1, 1].
fn fit_vanishing_order(profile: &(dyn Fn(f64) -> f64 + Send + Sync), t0: f64) -> f64 {
    let offsets = [1e-3, 1e-4, 1e-5];
    let mut slopes = Vec::new();
    for side in [1.0, -1.0] {
        let mut pts = Vec::new();
        for &h in &offsets {
            let t = t0 + side * h;
            if !(-1.0..=1.0).contains(&t) {
                continue;
            }
            let v = profile(t).abs();
            if v > 0.0 && v.is_finite() {
                pts.push((h.ln(), v.ln()));
            }
        }
        for w in pts.windows(2) {
            slopes.push((w[0].1 - w[1].1) / (w[0].0 - w[1].0));
        }
    }
    if slopes.is_empty() {
        return f64::INFINITY; // cannot see past the zero: treat as maximally singular
    }
    slopes.iter().sum::<f64>() / slopes.len() as f64
}

// ---------------------------------------------------------------------------
// Adaptive Gauss integration (15-point kernel, interval bisection)

fn gauss15_rule() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| quadrature_rule(2, 15).expect("Legendre 15-point rule"))
}

pub(crate) fn gauss15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let rule = gauss15_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

pub(crate) fn adaptive_gauss15(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> f64 {
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let mid = 0.5 * (a + b);
        let left = gauss15(f, a, mid);
        let right = gauss15(f, mid, b);
        let sum = left + right;
        if depth == 0 || (sum - whole).abs() <= tol.max(1e-13 * sum.abs()) {
            return sum;
        }
        recurse(f, a, mid, left, 0.5 * tol, depth - 1)
            + recurse(f, mid, b, right, 0.5 * tol, depth - 1)
    }
    let whole = gauss15(f, a, b);
    recurse(f, a, b, whole, tol, max_depth)
}

// ---------------------------------------------------------------------------
// Import/export

#[derive(Debug, Serialize, Deserialize)]
struct SpectrumEntry {
    degree: u32,
    coeff: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridEntry {
    t: f64,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileJson {
    n: u32,
    #[serde(rename = "L_max")]
    l_max: u32,
    spectrum: Vec<SpectrumEntry>,
    grid: Vec<GridEntry>,
}

impl ZonalFunction {
    /// Export grid values as CSV rows `t,value`.
    pub fn to_csv(&self, mut w: impl Write) -> Result<(), Error> {
        writeln!(w, "t,value")?;
        for (&t, &v) in self.rule.nodes.iter().zip(&self.values) {
            writeln!(w, "{:.16e},{:.16e}", t, v)?;
        }
        Ok(())
    }

    /// Import a profile from CSV rows `t,value`. The data points are
    /// interpolated (barycentric Lagrange) to form the exact closure.
    pub fn from_csv(n: u32, l_max: u32, r: impl BufRead) -> Result<Self, Error> {
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("t")) {
                continue;
            }
            let mut parts = line.split(',');
            let t: f64 = parts
                .next()
                .ok_or_else(|| Error::InvalidProfileData(format!("line {}: missing t", lineno + 1)))?
                .trim()
                .parse()
                .map_err(|e| Error::InvalidProfileData(format!("line {}: {e}", lineno + 1)))?;
            let v: f64 = parts
                .next()
                .ok_or_else(|| {
                    Error::InvalidProfileData(format!("line {}: missing value", lineno + 1))
                })?
                .trim()
                .parse()
                .map_err(|e| Error::InvalidProfileData(format!("line {}: {e}", lineno + 1)))?;
            ts.push(t);
            vs.push(v);
        }
        if ts.len() < 2 {
            return Err(Error::InvalidProfileData("need at least 2 rows".into()));
        }
        // Barycentric weights.
        let m = ts.len();
        let mut bw = vec![1.0f64; m];
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    bw[i] /= ts[i] - ts[j];
                }
            }
        }
        let ts_c = ts.clone();
        let vs_c = vs.clone();
        let profile = move |t: f64| {
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..ts_c.len() {
                let d = t - ts_c[i];
                if d.abs() < 1e-300 {
                    return vs_c[i];
                }
                let w = bw[i] / d;
                num += w * vs_c[i];
                den += w;
            }
            num / den
        };
        let rule = Arc::new(quadrature_rule(n, (l_max as usize + 8).max(m))?);
        Self::make_zonal(n, profile, rule, l_max)
    }

    /// Export spectrum and grid as JSON.
    pub fn to_json(&self) -> Result<String, Error> {
        let doc = ProfileJson {
            n: self.n,
            l_max: self.l_max,
            spectrum: self
                .spectrum
                .iter()
                .enumerate()
                .map(|(d, &c)| SpectrumEntry { degree: d as u32, coeff: c })
                .collect(),
            grid: self
                .rule
                .nodes
                .iter()
                .zip(&self.values)
                .map(|(&t, &v)| GridEntry { t, value: v })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Import a profile from its JSON form; the closure is the spectral
    /// synthesis of the recorded coefficients.
    pub fn from_json(s: &str) -> Result<Self, Error> {
        let doc: ProfileJson = serde_json::from_str(s)?;
        let n = doc.n;
        let l_max = doc.l_max;
        let mut coeffs = vec![0.0f64; l_max as usize + 1];
        for e in &doc.spectrum {
            if e.degree > l_max {
                return Err(Error::InvalidProfileData(format!(
                    "spectrum degree {} exceeds L_max {}",
                    e.degree, l_max
                )));
            }
            coeffs[e.degree as usize] = e.coeff;
        }
        let profile = move |t: f64| {
            basis_row(n, l_max, t)
                .iter()
                .zip(&coeffs)
                .map(|(b, c)| b * c)
                .sum()
        };
        let order = (l_max as usize + 8).max(doc.grid.len()).max(16);
        let rule = Arc::new(quadrature_rule(n, order)?);
        Self::make_zonal(n, profile, rule, l_max)
    }
}
