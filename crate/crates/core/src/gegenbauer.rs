//! Gegenbauer (ultraspherical) polynomials with parameter `(n-1)/2`, Gauss
//! quadrature for the weight `(1 - t^2)^{(n-2)/2}` on [-1, 1], closed-form
//! norms, and the monomial expansion coefficients.
//!
//! The circle `n = 1` is a fully separate branch: the basis is
//! `cos(l arccos t)` and the quadrature rule is the closed-form
//! Chebyshev-Gauss rule. The gamma factors of the general norm and
//! coefficient formulas are singular at n = 1 and are never applied there.

use std::f64::consts::PI;

use crate::special::{ln_gamma_signed, sphere_volume};
use crate::Error;

/// Gauss nodes/weights on (-1, 1) for the weight `(1 - t^2)^{(n-2)/2}`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub n: u32,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Coefficients of a zonal expansion, one value per listed degree.
#[derive(Debug, Clone, PartialEq)]
pub struct GegenbauerCoeffs {
    pub n: u32,
    pub degrees: Vec<u32>,
    pub values: Vec<f64>,
}

/// `C_l^{((n-1)/2)}(t)` for n >= 2 via the three-term recurrence; for n = 1
/// the circle basis `cos(l arccos t)`.
pub fn gegenbauer_eval(n: u32, ell: u32, t: f64) -> f64 {
    if n == 1 {
        return (ell as f64 * t.clamp(-1.0, 1.0).acos()).cos();
    }
    let alpha = (n as f64 - 1.0) / 2.0;
    if ell == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * alpha * t;
    for l in 2..=ell {
        let lf = l as f64;
        let next = (2.0 * (lf + alpha - 1.0) * t * cur - (lf + 2.0 * alpha - 2.0) * prev) / lf;
        prev = cur;
        cur = next;
    }
    cur
}

/// `C_l^{((n-1)/2)}(1)`; the normalization used in the zonal Funk-Hecke
/// reduction.
pub fn gegenbauer_at_one(n: u32, ell: u32) -> f64 {
    if n == 1 {
        return 1.0;
    }
    if n == 2 {
        return 1.0; // Legendre
    }
    // binom(l + n - 2, l) = Gamma(l + n - 1) / (Gamma(n - 1) l!)
    let lg = ln_gamma_signed((ell + n - 1) as f64).unwrap().log_abs
        - ln_gamma_signed((n - 1) as f64).unwrap().log_abs
        - ln_gamma_signed(ell as f64 + 1.0).unwrap().log_abs;
    lg.exp()
}

/// Total mass of the weight, `int_{-1}^{1} (1 - t^2)^{(n-2)/2} dt`.
pub fn weight_mass(n: u32) -> f64 {
    // sqrt(pi) Gamma(n/2) / Gamma((n+1)/2) = |S^n| / |S^{n-1}|
    let lg = 0.5 * PI.ln() + ln_gamma_signed(n as f64 / 2.0).unwrap().log_abs
        - ln_gamma_signed((n as f64 + 1.0) / 2.0).unwrap().log_abs;
    lg.exp()
}

/// Surface measure of `S^{n-1}`; `|S^0| = 2`.
pub fn equator_volume(n: u32) -> f64 {
    if n == 1 {
        2.0
    } else {
        sphere_volume(n - 1)
    }
}

// Recurrence coefficient beta_k of the monic orthogonal polynomials for the
// weight (1 - t^2)^mu, mu = (n-2)/2: t p_k = p_{k+1} + beta_k p_{k-1}.
fn beta_coeff(mu: f64, k: u32) -> f64 {
    let kf = k as f64;
    kf * (kf + 2.0 * mu) / ((2.0 * kf + 2.0 * mu + 1.0) * (2.0 * kf + 2.0 * mu - 1.0))
}

// Orthonormal recurrence evaluation: returns (p_m(t), p_m'(t)) and the
// Christoffel sum over k < m of p_k(t)^2.
fn orthonormal_eval(mu: f64, mu0: f64, m: usize, t: f64, b: &[f64]) -> (f64, f64, f64) {
    let _ = mu;
    let mut p_prev = 0.0f64;
    let mut p_cur = 1.0 / mu0.sqrt();
    let mut d_prev = 0.0f64;
    let mut d_cur = 0.0f64;
    let mut christoffel = p_cur * p_cur;
    for k in 0..m {
        let bk = if k == 0 { 0.0 } else { b[k] };
        let bk1 = b[k + 1];
        let p_next = (t * p_cur - bk * p_prev) / bk1;
        let d_next = (p_cur + t * d_cur - bk * d_prev) / bk1;
        p_prev = p_cur;
        p_cur = p_next;
        d_prev = d_cur;
        d_cur = d_next;
        if k + 1 < m {
            christoffel += p_cur * p_cur;
        }
    }
    (p_cur, d_cur, christoffel)
}

/// Build the m-point Gauss rule for the weight `(1 - t^2)^{(n-2)/2}`.
///
/// Nodes are found by Newton iteration on the orthonormal recurrence with
/// bracketed Chebyshev-point initial guesses (tolerance 1e-14, at most 100
/// iterations per node); weights come from the Christoffel function.
pub fn quadrature_rule(n: u32, m: usize) -> Result<QuadratureRule, Error> {
    if n < 1 {
        return Err(Error::ParameterOutOfRange("n must be >= 1".into()));
    }
    if m < 2 {
        return Err(Error::ParameterOutOfRange("order must be >= 2".into()));
    }
    if n == 1 {
        // Chebyshev-Gauss in closed form.
        let mut nodes = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for j in 1..=m {
            nodes.push((PI * (2.0 * j as f64 - 1.0) / (2.0 * m as f64)).cos());
            weights.push(PI / m as f64);
        }
        nodes.reverse();
        return Ok(QuadratureRule { n, nodes, weights });
    }

    let mu = (n as f64 - 2.0) / 2.0;
    let mu0 = weight_mass(n);
    let b: Vec<f64> = (0..=m).map(|k| beta_coeff(mu, k as u32).max(0.0).sqrt()).collect();

    // Bracket the m roots of p_m by a sign scan on a Chebyshev-distributed
    // grid, then polish each with safeguarded Newton.
    let grid_len = 8 * m + 16;
    let mut grid = Vec::with_capacity(grid_len);
    for j in 0..grid_len {
        grid.push(-(PI * (j as f64 + 0.5) / grid_len as f64).cos());
    }
    let pm = |t: f64| orthonormal_eval(mu, mu0, m, t, &b);

    let mut brackets = Vec::with_capacity(m);
    let mut prev_t = grid[0];
    let mut prev_v = pm(prev_t).0;
    for &t in grid.iter().skip(1) {
        let v = pm(t).0;
        if prev_v == 0.0 {
            brackets.push((prev_t, prev_t));
        } else if prev_v * v < 0.0 {
            brackets.push((prev_t, t));
        }
        prev_t = t;
        prev_v = v;
    }
    if brackets.len() != m {
        return Err(Error::QuadratureNoConvergence(format!(
            "found {} sign changes for {} expected roots (n={}, m={})",
            brackets.len(),
            m,
            n,
            m
        )));
    }

    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for &(mut lo, mut hi) in &brackets {
        let mut x = 0.5 * (lo + hi);
        let mut converged = false;
        let mut iters = 0usize;
        let v_lo = pm(lo).0;
        for _ in 0..100 {
            iters += 1;
            let (v, dv, _) = pm(x);
            // Maintain the bracket for the bisection fallback.
            if v * v_lo > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let step = v / dv;
            let mut x_new = x - step;
            if !(x_new > lo && x_new < hi) || !x_new.is_finite() {
                x_new = 0.5 * (lo + hi);
            }
            if (x_new - x).abs() <= 1e-14 * (1.0 + x.abs()) {
                x = x_new;
                converged = true;
                break;
            }
            x = x_new;
        }
        if !converged {
            return Err(Error::QuadratureNoConvergence(format!(
                "node near {x} did not converge after {iters} iterations (n={n}, m={m})"
            )));
        }
        let (_, _, christoffel) = pm(x);
        nodes.push(x);
        weights.push(1.0 / christoffel);
    }
    Ok(QuadratureRule { n, nodes, weights })
}

impl QuadratureRule {
    /// Integrate `f(t) (1 - t^2)^{(n-2)/2}` over [-1, 1].
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Squared weighted L2 norm of the degree-l basis polynomial on [-1, 1]:
/// `int |C_l^{((n-1)/2)}|^2 (1 - t^2)^{(n-2)/2} dt`. For n = 1 these are the
/// cosine-basis norms with the Chebyshev weight.
pub fn gegenbauer_norm_sq(n: u32, ell: u32) -> f64 {
    if n == 1 {
        return if ell == 0 { PI } else { PI / 2.0 };
    }
    let nf = n as f64;
    let lf = ell as f64;
    let alpha = (nf - 1.0) / 2.0;
    let lg = PI.ln() + (2.0 - nf) * 2f64.ln()
        + ln_gamma_signed(nf - 1.0 + lf).unwrap().log_abs
        - ln_gamma_signed(lf + 1.0).unwrap().log_abs
        - (lf + alpha).ln()
        - 2.0 * ln_gamma_signed(alpha).unwrap().log_abs;
    lg.exp()
}

/// Coefficients c_k of `t^{2K} = sum_{k=0}^{K} c_k C_{2k}^{((n-1)/2)}(t)`.
pub fn monomial_even_coeffs(n: u32, big_k: u32) -> GegenbauerCoeffs {
    assert!(n >= 2, "monomial expansions require n >= 2");
    let nf = n as f64;
    let kk = big_k as f64;
    let lg_fixed = -2.0 * kk * 2f64.ln()
        + ln_gamma_signed(2.0 * kk + 1.0).unwrap().log_abs
        + ln_gamma_signed((nf - 1.0) / 2.0).unwrap().log_abs;
    let mut degrees = Vec::with_capacity(big_k as usize + 1);
    let mut values = Vec::with_capacity(big_k as usize + 1);
    for k in 0..=big_k {
        let kf = k as f64;
        let lg = lg_fixed + (2.0 * kf + (nf - 1.0) / 2.0).ln()
            - ln_gamma_signed(kk + kf + (nf + 1.0) / 2.0).unwrap().log_abs
            - ln_gamma_signed(kk - kf + 1.0).unwrap().log_abs;
        degrees.push(2 * k);
        values.push(lg.exp());
    }
    GegenbauerCoeffs { n, degrees, values }
}

/// Coefficients d_k of `t^{2K+1} = sum_{k=0}^{K} d_k C_{2k+1}^{((n-1)/2)}(t)`.
pub fn monomial_odd_coeffs(n: u32, big_k: u32) -> GegenbauerCoeffs {
    assert!(n >= 2, "monomial expansions require n >= 2");
    let nf = n as f64;
    let kk = big_k as f64;
    let lg_fixed = -(2.0 * kk + 1.0) * 2f64.ln()
        + ln_gamma_signed(2.0 * kk + 2.0).unwrap().log_abs
        + ln_gamma_signed((nf - 1.0) / 2.0).unwrap().log_abs;
    let mut degrees = Vec::with_capacity(big_k as usize + 1);
    let mut values = Vec::with_capacity(big_k as usize + 1);
    for k in 0..=big_k {
        let kf = k as f64;
        let lg = lg_fixed + (2.0 * kf + (nf + 1.0) / 2.0).ln()
            - ln_gamma_signed(kk + kf + (nf + 3.0) / 2.0).unwrap().log_abs
            - ln_gamma_signed(kk - kf + 1.0).unwrap().log_abs;
        degrees.push(2 * k + 1);
        values.push(lg.exp());
    }
    GegenbauerCoeffs { n, degrees, values }
}
