//! Special functions and log-space series summation.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
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

/// Lanczos sum `A(z)` for `Γ(z + 1) = √(2π) t^{z+1/2} e^{-t} A(z)`, `t = z + g + 1/2`.
fn lanczos_sum(z: f64) -> f64 {
    LANCZOS_COEFFS[1..].iter().enumerate().fold(LANCZOS_COEFFS[0], |acc, (i, &c)| acc + c / (z + i as f64 + 1.0))
}

/// Largest argument for which `Γ(x)` is finite in `f64`.
pub const GAMMA_MAX_ARG: f64 = 171.624_376_956_302_7;

/// `Γ(x)` for `x > 0`; overflow past ~171.6 is reported as an error.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidArgument(format!("Γ(x) requires x > 0, got {x}")));
    }
    if x > GAMMA_MAX_ARG {
        return Err(Error::InvalidArgument(format!("Γ({x}) overflows f64; use ln_gamma")));
    }
    if x < 0.5 {
        // reflection keeps the Lanczos sum in its accurate range
        let pi = std::f64::consts::PI;
        return Ok(pi / ((pi * x).sin() * gamma_fn(1.0 - x)?));
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    // split the power so t^{z+1/2} e^{-t} does not overflow before Γ does
    let half = t.powf(0.5 * (z + 0.5));
    Ok((2.0 * std::f64::consts::PI).sqrt() * half * (half * (-t).exp()) * lanczos_sum(z))
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
}

/// Riemann zeta `ζ(s)` for `s > 1`: direct sum of the first terms plus an
/// Euler–Maclaurin correction for the tail.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::InvalidArgument(format!("ζ(s) diverges for s = {s} ≤ 1")));
    }
    const N: usize = 1000;
    // sum small terms first
    let head: f64 = (1..N).rev().map(|n| (n as f64).powf(-s)).sum();
    let n = N as f64;
    let ns = n.powf(-s);
    let tail = n * ns / (s - 1.0) + 0.5 * ns + s * ns / (12.0 * n)
        - s * (s + 1.0) * (s + 2.0) * ns / (720.0 * n.powi(3))
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * ns / (30240.0 * n.powi(5));
    Ok(head + tail)
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Result of summing `Σ_{k ≥ k0} exp(log_term(k))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSeries {
    /// Natural log of the sum (`-inf` for an all-zero series).
    pub log_sum: f64,
    /// Index past the last explicitly summed term.
    pub last_index: usize,
}

const DIRECT_TERMS: usize = 4096;
const LOG_NEGLIGIBLE: f64 = 50.0;

/// Sums a series given by the logs of its terms.
///
/// The first terms are added one by one until the ratio test
/// (`term_{k+1}/term_k < 1/2` and the next term below `e^{-40}` of the running
/// sum) stops the sum; the remainder is then majorised geometrically. Series
/// that are still growing after the direct phase must have log-concave terms
/// from there on: the sum is restricted to the window where terms exceed
/// `e^{-50}` times the peak, with both flanks majorised. Exceeding `kmax`
/// before the terms start to decay is an error.
pub fn sum_log_series<F>(log_term: F, k0: usize, kmax: usize) -> Result<LogSeries>
where
    F: Fn(usize) -> f64,
{
    let mut log_sum = f64::NEG_INFINITY;
    let mut k = k0;
    let direct_end = k0.saturating_add(DIRECT_TERMS).min(kmax);
    let mut current = log_term(k);
    while k < direct_end {
        log_sum = log_add_exp(log_sum, current);
        let next = log_term(k + 1);
        let delta = next - current;
        if next == f64::NEG_INFINITY || (delta < -std::f64::consts::LN_2 && next < log_sum - 40.0) {
            if next > f64::NEG_INFINITY {
                let remainder = next - (-delta.exp()).ln_1p();
                log_sum = log_add_exp(log_sum, remainder);
            }
            return Ok(LogSeries { log_sum, last_index: k + 1 });
        }
        k += 1;
        current = next;
    }
    if k >= kmax {
        return Err(Error::SeriesCap { kmax });
    }

    // log-concave regime: Δ(k) = log_term(k+1) - log_term(k) is decreasing
    let slope = |k: usize| log_term(k + 1) - log_term(k);
    let peak = first_index(k, kmax, |j| slope(j) < 0.0).ok_or(Error::SeriesCap { kmax })?;
    let top = log_term(peak);
    let left = first_index(k, peak, |j| log_term(j) >= top - LOG_NEGLIGIBLE).unwrap_or(peak);
    let right = first_index(peak, kmax, |j| log_term(j) < top - LOG_NEGLIGIBLE).ok_or(Error::SeriesCap { kmax })?;
    if left > k {
        // skipped rising flank: every term is below the left window edge
        log_sum = log_add_exp(log_sum, log_term(left) + ((left - k) as f64).ln());
    }
    for j in left..right {
        log_sum = log_add_exp(log_sum, log_term(j));
    }
    let last = log_term(right);
    let decay = slope(right);
    log_sum = log_add_exp(log_sum, last - (-decay.exp()).ln_1p());
    Ok(LogSeries { log_sum, last_index: right })
}

/// Smallest `j` in `[lo, hi]` with `pred(j)`, for predicates that switch
/// from false to true once; `None` when `pred(hi)` is false.
fn first_index<P: Fn(usize) -> bool>(lo: usize, hi: usize, pred: P) -> Option<usize> {
    if pred(lo) {
        return Some(lo);
    }
    // exponential probe to bracket, then bisect
    let mut a = lo;
    let mut step = 1usize;
    let mut b = loop {
        let cand = a.saturating_add(step).min(hi);
        if pred(cand) {
            break cand;
        }
        if cand == hi {
            return None;
        }
        a = cand;
        step = step.saturating_mul(2);
    };
    while b - a > 1 {
        let mid = a + (b - a) / 2;
        if pred(mid) {
            b = mid;
        } else {
            a = mid;
        }
    }
    Some(b)
}
