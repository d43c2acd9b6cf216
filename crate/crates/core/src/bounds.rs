//! Explicit constants and factorial-decay inequalities for geometric
//! β-Hölder rough paths.
//!
//! With `‖y^i_{s,t}‖ ≤ C (t−s)^{iβ}` for `i = 1, 2`, every level of the
//! signature obeys
//!
//! ```text
//! ‖y^k_{0,t}‖ ≤ (KT)^{kβ} / (α Γ(kβ)),
//! α = β^{-2} (1 + Σ_{r≥3} (2/(r−2))^{3β}),
//! K = max{(α Γ(β) C)^{1/β}, (α Γ(2β) C)^{1/(2β)}}.
//! ```
//!
//! Quantities that can leave the `f64` range are carried as logarithms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{ln_gamma, sum_log_series, zeta};

pub use crate::special::gamma_fn;

/// Default summation cap for the series in this module.
pub const DEFAULT_KMAX: usize = 1 << 40;

/// Constants for one bound evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParams {
    pub beta: f64,
    pub gamma: f64,
    /// Hölder constant of the lift.
    pub c: f64,
    /// Coefficient growth scale.
    pub m: f64,
    /// Horizon.
    pub t: f64,
    pub alpha: f64,
    pub k: f64,
}

impl BoundParams {
    pub fn new(beta: f64, gamma: f64, c: f64, m: f64, t: f64) -> Result<Self> {
        if !(beta > 1.0 / 3.0 && beta < 0.5) {
            return Err(Error::InvalidArgument(format!("beta must lie in (1/3, 1/2), got {beta}")));
        }
        if !(gamma > 0.0 && gamma < beta) {
            return Err(Error::InvalidArgument(format!("gamma must lie in (0, beta), got {gamma}")));
        }
        if !(c > 0.0 && m > 0.0 && t > 0.0) {
            return Err(Error::InvalidArgument("C, M and T must be positive".into()));
        }
        let alpha = alpha_const(beta)?;
        let k = k_const(alpha, beta, c)?;
        Ok(BoundParams { beta, gamma, c, m, t, alpha, k })
    }

    /// `x = M K^β T^β`, the ratio governing the truncation bound.
    pub fn growth_ratio(&self) -> f64 {
        self.m * (self.k * self.t).powf(self.beta)
    }
}

/// `α(β) = β^{-2}(1 + 2^{3β} ζ(3β))`, the resummed form of
/// `β^{-2}(1 + Σ_{r≥3} (2/(r−2))^{3β})`.
pub fn alpha_const(beta: f64) -> Result<f64> {
    if !(beta > 1.0 / 3.0) {
        return Err(Error::InvalidArgument(format!("the series defining alpha diverges for beta = {beta} ≤ 1/3")));
    }
    let s = 3.0 * beta;
    Ok((1.0 + 2f64.powf(s) * zeta(s)?) / (beta * beta))
}

/// `K = max{(αΓ(β)C)^{1/β}, (αΓ(2β)C)^{1/(2β)}}`.
pub fn k_const(alpha: f64, beta: f64, c: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0 && c >= 0.0) {
        return Err(Error::InvalidArgument("alpha, beta and C must be positive".into()));
    }
    let first = (alpha * gamma_fn(beta)? * c).powf(1.0 / beta);
    let second = (alpha * gamma_fn(2.0 * beta)? * c).powf(1.0 / (2.0 * beta));
    Ok(first.max(second))
}

/// `ln` of `(KT)^{kβ} / (αΓ(kβ))`.
pub fn log_level_bound(k: usize, params: &BoundParams) -> f64 {
    let kb = k as f64 * params.beta;
    kb * (params.k * params.t).ln() - params.alpha.ln() - ln_gamma(kb)
}

/// `(KT)^{kβ} / (αΓ(kβ))`; may be `+inf` when the value leaves `f64` range.
pub fn level_bound(k: usize, params: &BoundParams) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("level bound needs k ≥ 1".into()));
    }
    Ok(log_level_bound(k, params).exp())
}

/// `Σ_{k>N} Γ(kγ)/Γ(kβ) x^{k−1}` together with the comparison shape
/// `x^N e^{2x^{1/(β−γ)}} / Γ((β−γ)N)` (`e^{2x^{1/(β−γ)}}` when `N = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailSum {
    pub value: f64,
    pub log_value: f64,
    pub shape: f64,
    pub log_shape: f64,
    /// Index past the last explicitly summed term.
    pub terms: usize,
}

impl TailSum {
    /// `value / shape`, the empirical constant at this `(N, x)`.
    pub fn shape_ratio(&self) -> f64 {
        (self.log_value - self.log_shape).exp()
    }
}

fn check_exponents(beta: f64, gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < beta) {
        return Err(Error::InvalidArgument(format!("need 0 < gamma < beta, got gamma = {gamma}, beta = {beta}")));
    }
    Ok(())
}

pub fn tail_sum(n: usize, x: f64, beta: f64, gamma: f64, kmax: usize) -> Result<TailSum> {
    check_exponents(beta, gamma)?;
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("x must be non-negative, got {x}")));
    }
    let e = beta - gamma;
    let log_shape =
        if n == 0 { 2.0 * x.powf(1.0 / e) } else { n as f64 * x.ln() + 2.0 * x.powf(1.0 / e) - ln_gamma(e * n as f64) };
    let (log_value, terms) = if x == 0.0 {
        if n == 0 {
            (ln_gamma(gamma) - ln_gamma(beta), 2)
        } else {
            (f64::NEG_INFINITY, n + 1)
        }
    } else {
        let lx = x.ln();
        let series = sum_log_series(
            |k| {
                let k = k as f64;
                ln_gamma(k * gamma) - ln_gamma(k * beta) + (k - 1.0) * lx
            },
            n + 1,
            kmax,
        )?;
        (series.log_sum, series.last_index)
    };
    Ok(TailSum { value: log_value.exp(), log_value, shape: log_shape.exp(), log_shape, terms })
}

/// `Σ_{k≥0} x^k / Γ((1+k)e)` and the comparison value `(4e²/e) e^{2x^{1/e}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MlSum {
    pub value: f64,
    pub log_value: f64,
    pub closed_form_bound: f64,
    pub log_closed_form_bound: f64,
}

impl MlSum {
    pub fn within_bound(&self) -> bool {
        self.log_value <= self.log_closed_form_bound
    }
}

pub fn ml_sum(x: f64, exponent: f64) -> Result<MlSum> {
    if !(exponent > 0.0) {
        return Err(Error::InvalidArgument(format!("exponent must be positive, got {exponent}")));
    }
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("x must be non-negative, got {x}")));
    }
    let log_value = if x == 0.0 {
        -ln_gamma(exponent)
    } else {
        let lx = x.ln();
        sum_log_series(|k| k as f64 * lx - ln_gamma((k as f64 + 1.0) * exponent), 0, DEFAULT_KMAX)?.log_sum
    };
    let log_closed_form_bound = (4.0 / exponent).ln() + 2.0 + 2.0 * x.powf(1.0 / exponent);
    Ok(MlSum {
        value: log_value.exp(),
        log_value,
        closed_form_bound: log_closed_form_bound.exp(),
        log_closed_form_bound,
    })
}

/// Empirical tail constant: the largest `tail / shape` over the given grid of
/// `(N, x)`, `N ≥ 1`.
pub fn tail_constant_estimate(
    beta: f64,
    gamma: f64,
    xs: &[f64],
    ns: impl IntoIterator<Item = usize> + Clone,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for &x in xs {
        for n in ns.clone() {
            worst = worst.max(tail_sum(n, x, beta, gamma, DEFAULT_KMAX)?.shape_ratio());
        }
    }
    Ok(worst)
}
