//! Derivative-free minimization of the conformal quotient over positive
//! zonal functions, and the epsilon-descent curves on the divergent test
//! functions.
//!
//! Positivity is enforced structurally by the log parametrization
//! `u = exp(v)` with `v` a low-degree zonal polynomial; the scaling gauge is
//! fixed by normalizing `max u = 1` after every accepted step. The conformal
//! flat directions are left free, so convergence is asserted on the quotient
//! value, never on the profile.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::functional::{quotient, ExtReal, FunctionalReport};
use crate::gegenbauer::quadrature_rule;
use crate::special::{regime_classify, Regime, SpectralParams};
use crate::zonal::{basis_row, ZonalFunction};
use crate::Error;

/// Initial iterate for the search.
#[derive(Debug, Clone, Serialize)]
pub enum InitProfile {
    Constant,
    /// Constant plus a single-harmonic perturbation of the log profile.
    PerturbedConstant { degree: u32, amplitude: f64 },
    EqualityProfile { zeta: f64 },
    /// Explicit log-profile coefficients (degree 0, 1, 2, ...).
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizeConfig {
    pub l_max: u32,
    pub grid_order: usize,
    pub max_iters: usize,
    pub step_tolerance: f64,
    pub seed: u64,
    pub init: InitProfile,
    /// Degree of the log-profile polynomial being searched.
    pub search_degree: u32,
    /// Relative truncation residual accepted when evaluating the form.
    pub residual_bound: f64,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            l_max: 32,
            grid_order: 48,
            max_iters: 400,
            step_tolerance: 1e-5,
            seed: 42,
            init: InitProfile::Constant,
            search_degree: 10,
            residual_bound: 1e-7,
        }
    }
}

impl MinimizeConfig {
    fn validate(&self) -> Result<(), Error> {
        if self.grid_order < self.l_max as usize + 8 {
            return Err(Error::ParameterOutOfRange(
                "grid_order must be at least L_max + 8".into(),
            ));
        }
        if self.max_iters < 1 {
            return Err(Error::ParameterOutOfRange("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// One accepted iterate of the search.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub quotient: f64,
    pub a_value: f64,
    pub integral: ExtReal,
}

#[derive(Debug, Clone, Serialize)]
pub struct DescentTrace {
    pub iterates: Vec<TracePoint>,
    pub best: FunctionalReport,
    /// Gauge-fixed log-profile coefficients of the best iterate
    /// (degree 0, 1, ...); the profile is `exp` of their zonal synthesis.
    pub best_coeffs: Vec<f64>,
    pub converged: bool,
}

struct Evaluator {
    p: SpectralParams,
    rule: Arc<crate::gegenbauer::QuadratureRule>,
    l_max: u32,
    residual_bound: f64,
}

impl Evaluator {
    fn build(&self, coeffs: &[f64]) -> Result<ZonalFunction, Error> {
        let n = self.p.n;
        let c: Vec<f64> = coeffs.to_vec();
        let deg = (c.len() - 1) as u32;
        let profile = move |t: f64| {
            let row = basis_row(n, deg, t);
            let v: f64 = row.iter().zip(&c).map(|(b, a)| b * a).sum();
            v.exp()
        };
        ZonalFunction::make_zonal(n, profile, self.rule.clone(), self.l_max)
    }

    /// Quotient of exp(v); None when the step is rejected (non-finite value
    /// or residual overflow).
    fn eval(&self, coeffs: &[f64]) -> Option<(f64, FunctionalReport)> {
        let u = self.build(coeffs).ok()?;
        let rep = quotient(&u, self.p, self.residual_bound).ok()?;
        match rep.quotient {
            ExtReal::Finite(q) if q.is_finite() => Some((q, rep)),
            _ => None,
        }
    }

    /// Subtract max_t v(t) from the constant coefficient so that max u = 1.
    fn gauge_fix(&self, coeffs: &mut [f64]) {
        let n = self.p.n;
        let deg = (coeffs.len() - 1) as u32;
        let mut vmax = f64::NEG_INFINITY;
        for j in 0..=256 {
            let t = -1.0 + 2.0 * j as f64 / 256.0;
            let row = basis_row(n, deg, t);
            let v: f64 = row.iter().zip(coeffs.iter()).map(|(b, a)| b * a).sum();
            vmax = vmax.max(v);
        }
        coeffs[0] -= vmax;
    }
}

/// Minimize the conformal quotient by pattern search over the log-profile
/// coefficients.
pub fn minimize_quotient(p: SpectralParams, cfg: &MinimizeConfig) -> Result<DescentTrace, Error> {
    cfg.validate()?;
    match regime_classify(p) {
        Regime::AttainedConformal | Regime::NotAttained => {}
        other => {
            return Err(Error::ParameterOutOfRange(format!(
                "minimization requires the attained or not-attained regime, got {other}"
            )))
        }
    }
    let rule = Arc::new(quadrature_rule(p.n, cfg.grid_order)?);
    let ev = Evaluator { p, rule, l_max: cfg.l_max, residual_bound: cfg.residual_bound };

    let dim = cfg.search_degree as usize + 1;
    let mut coeffs = vec![0.0f64; dim];
    match &cfg.init {
        InitProfile::Constant => {}
        InitProfile::PerturbedConstant { degree, amplitude } => {
            let idx = (*degree as usize).min(dim - 1);
            coeffs[idx] = *amplitude;
        }
        InitProfile::EqualityProfile { zeta } => {
            // log of c (1 - zeta t)^{(2s-n)/2}, projected onto the basis.
            let exponent = (2.0 * p.s - p.n as f64) / 2.0;
            let z = *zeta;
            let log_profile = move |t: f64| exponent * (1.0 - z * t).ln();
            let tmp = ZonalFunction::make_zonal(
                p.n,
                log_profile,
                ev.rule.clone(),
                cfg.search_degree,
            )?;
            for (ell, c) in coeffs.iter_mut().enumerate() {
                *c = tmp.coeff(ell as u32)?;
            }
        }
        InitProfile::Custom(c) => {
            for (dst, src) in coeffs.iter_mut().zip(c) {
                *dst = *src;
            }
        }
    }
    ev.gauge_fix(&mut coeffs);

    let (mut best_q, mut best_rep) = ev
        .eval(&coeffs)
        .ok_or_else(|| Error::ParameterOutOfRange("initial iterate is infeasible".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = vec![TracePoint {
        iteration: 0,
        quotient: best_q,
        a_value: best_rep.a_value,
        integral: best_rep.integral,
    }];

    let mut step = 0.25f64;
    let mut converged = false;
    const RANDOM_DIRECTIONS: usize = 4;

    for iter in 1..=cfg.max_iters {
        // Coordinate directions plus a few random zonal directions.
        let mut directions: Vec<Vec<f64>> = (0..dim)
            .map(|i| {
                let mut d = vec![0.0; dim];
                d[i] = 1.0;
                d
            })
            .collect();
        for _ in 0..RANDOM_DIRECTIONS {
            let mut d: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                d.iter_mut().for_each(|x| *x /= norm);
                directions.push(d);
            }
        }

        let mut improved: Option<(f64, FunctionalReport, Vec<f64>)> = None;
        for d in &directions {
            for sign in [1.0f64, -1.0] {
                let mut cand: Vec<f64> = coeffs
                    .iter()
                    .zip(d)
                    .map(|(c, dc)| c + sign * step * dc)
                    .collect();
                ev.gauge_fix(&mut cand);
                if let Some((q, rep)) = ev.eval(&cand) {
                    let current_best = improved.as_ref().map(|(q, _, _)| *q).unwrap_or(best_q);
                    if q < current_best {
                        improved = Some((q, rep, cand));
                    }
                }
            }
        }

        match improved {
            Some((q, rep, cand)) => {
                coeffs = cand;
                best_q = q;
                best_rep = rep;
                trace.push(TracePoint {
                    iteration: iter,
                    quotient: q,
                    a_value: rep.a_value,
                    integral: rep.integral,
                });
            }
            None => {
                step *= 0.5;
                if step < cfg.step_tolerance {
                    converged = true;
                    break;
                }
            }
        }
    }

    Ok(DescentTrace { iterates: trace, best: best_rep, best_coeffs: coeffs, converged })
}

/// Quotients of the divergent-window test function plus a constant, along a
/// strictly decreasing list of epsilons.
pub fn descent_curve(
    p: SpectralParams,
    big_k: u32,
    eps_list: &[f64],
) -> Result<Vec<(f64, FunctionalReport)>, Error> {
    if regime_classify(p) != Regime::NotAttained {
        return Err(Error::RegimeMismatch(format!(
            "descent curve requires the not-attained regime, got {}",
            regime_classify(p)
        )));
    }
    let d = p.s - p.half_n();
    let even = 2.0 * (big_k as f64) < d && d < 2.0 * (big_k as f64) + 1.0;
    let odd = 2.0 * (big_k as f64) + 1.0 < d && d < 2.0 * (big_k as f64) + 2.0;
    if !(even || odd) || p.n < 2 {
        return Err(Error::RegimeMismatch(format!(
            "K = {} does not match either parity window of s - n/2 = {}",
            big_k, d
        )));
    }
    if eps_list.is_empty() || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::ParameterOutOfRange(
            "epsilon list must be nonempty and strictly decreasing".into(),
        ));
    }
    if eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::ParameterOutOfRange("epsilons must be > 0".into()));
    }
    let degree = if even { 2 * big_k } else { 2 * big_k + 1 };
    let l_max = degree + 4;
    let rule = Arc::new(quadrature_rule(p.n, l_max as usize + 12)?);
    let k2 = 2 * big_k as i32;
    let mut out = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let profile: Box<dyn Fn(f64) -> f64 + Send + Sync> = if even {
            Box::new(move |t: f64| t.powi(k2) + eps)
        } else {
            Box::new(move |t: f64| t.powi(k2) - t.powi(k2 + 1) + eps)
        };
        let u = ZonalFunction::make_zonal(p.n, profile, rule.clone(), l_max)?;
        let rep = quotient(&u, p, 1e-9)?;
        out.push((eps, rep));
    }
    Ok(out)
}
