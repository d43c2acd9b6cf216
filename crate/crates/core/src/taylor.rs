//! Truncated Taylor expansion `x0 + Σ_k g_k(t)` of the solution, its
//! stopping time, and the truncation error bound.

use std::io::Write;

use serde::Serialize;

use crate::bounds::{tail_sum, BoundParams, DEFAULT_KMAX};
use crate::csv::{fmt_f64, row};
use crate::error::{Error, Result};
use crate::signature::{path_signature, PiecewiseLinearPath, RoughLift};
use crate::tensor::TruncatedTensor;
use crate::vector_fields::TaylorTable;

/// Default number of explicit terms in the stopping-time majorant.
pub const DEFAULT_N_CAP: usize = 30;

/// Anything that can supply signatures of every degree. For a rough lift the
/// levels above its degree come from its piecewise-linear approximant.
pub trait Driver {
    fn linear_path(&self) -> &PiecewiseLinearPath;

    fn signature(&self, t: f64, degree: usize) -> Result<TruncatedTensor> {
        let p = self.linear_path();
        path_signature(p, p.start(), t, degree)
    }
}

impl Driver for PiecewiseLinearPath {
    fn linear_path(&self) -> &PiecewiseLinearPath {
        self
    }
}

impl Driver for RoughLift {
    fn linear_path(&self) -> &PiecewiseLinearPath {
        self.path()
    }
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `g_k` with components `Σ_{|I|=k} P^j_I · sig_I`.
pub fn taylor_term(table: &TaylorTable, sig: &TruncatedTensor, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidArgument("Taylor terms start at k = 1".into()));
    }
    if sig.degree() < k {
        return Err(Error::InvalidArgument(format!("signature degree {} is below level {k}", sig.degree())));
    }
    if table.max_len() < k {
        return Err(Error::InvalidArgument(format!("table holds words up to length {}, need {k}", table.max_len())));
    }
    if sig.dim() != table.d() {
        return Err(Error::DimensionMismatch(format!(
            "signature over R^{}, table for {} fields",
            sig.dim(),
            table.d()
        )));
    }
    let mut g = vec![0.0; table.n()];
    for (p, &s) in table.level(k).iter().zip(sig.level(k)) {
        if s == 0.0 {
            continue;
        }
        for (gj, pj) in g.iter_mut().zip(p) {
            *gj += pj * s;
        }
    }
    Ok(g)
}

/// Truncation bound evaluated from the summed tail, with the closed-form
/// shape `x^N e^{2x^{1/(β−γ)}} / Γ((β−γ)N)` for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationBound {
    pub value: f64,
    pub log_value: f64,
    pub shape: f64,
    pub log_shape: f64,
}

/// `(x/α) Σ_{k>N} Γ(kγ)/Γ(kβ) x^{k−1}` with `x = M K^β T^β`.
pub fn bound_truncation(params: &BoundParams, n: usize) -> Result<TruncationBound> {
    let x = params.growth_ratio();
    let tail = tail_sum(n, x, params.beta, params.gamma, DEFAULT_KMAX)?;
    let log_value = x.ln() - params.alpha.ln() + tail.log_value;
    Ok(TruncationBound { value: log_value.exp(), log_value, shape: tail.shape, log_shape: tail.log_shape })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorEvaluation {
    pub t: f64,
    pub n: usize,
    /// `partial_sums[j] = x0 + Σ_{k≤j} g_k(t)`.
    pub partial_sums: Vec<Vec<f64>>,
    /// `‖g_k(t)‖` for `k = 1..=N`.
    pub term_norms: Vec<f64>,
    pub error_bound: f64,
    pub signature_used: TruncatedTensor,
}

impl TaylorEvaluation {
    pub fn value(&self) -> &[f64] {
        self.partial_sums.last().expect("partial sums start with x0")
    }

    /// Rows `t,N,j,partial_sum,term_norm,error_bound`; `N` is the partial-sum
    /// index and the term norm of index 0 is written as 0.
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> Result<()> {
        if header {
            w.write_all(b"t,N,j,partial_sum,term_norm,error_bound\n")?;
        }
        for (k, state) in self.partial_sums.iter().enumerate() {
            let norm = if k == 0 { 0.0 } else { self.term_norms[k - 1] };
            for (j, v) in state.iter().enumerate() {
                let fields = [
                    fmt_f64(self.t),
                    k.to_string(),
                    (j + 1).to_string(),
                    fmt_f64(*v),
                    fmt_f64(norm),
                    fmt_f64(self.error_bound),
                ];
                w.write_all(row(fields).as_bytes())?;
            }
        }
        Ok(())
    }
}

/// Partial sums up to order `n` at time `t`, with the tail bounded by
/// [`bound_truncation`] under `params`.
pub fn taylor_evaluate<D: Driver + ?Sized>(
    table: &TaylorTable,
    driver: &D,
    t: f64,
    n: usize,
    params: &BoundParams,
) -> Result<TaylorEvaluation> {
    if n > table.max_len() {
        return Err(Error::InvalidArgument(format!("order {n} exceeds table length {}", table.max_len())));
    }
    let sig = driver.signature(t, n)?;
    if sig.dim() != table.d() {
        return Err(Error::DimensionMismatch(format!("driver in R^{}, table for {} fields", sig.dim(), table.d())));
    }
    let mut partial_sums = vec![table.x0().to_vec()];
    let mut term_norms = Vec::with_capacity(n);
    for k in 1..=n {
        let g = taylor_term(table, &sig, k)?;
        term_norms.push(euclid(&g));
        let next = partial_sums[k - 1].iter().zip(&g).map(|(a, b)| a + b).collect();
        partial_sums.push(next);
    }
    let error_bound = bound_truncation(params, n)?.value;
    Ok(TaylorEvaluation { t, n, partial_sums, term_norms, error_bound, signature_used: sig })
}

/// How the majorant `Σ_{k>N} r^k‖g_k(t)‖` beyond the explicit terms is estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailMode {
    /// Geometric continuation of the ratio of the last two explicit terms;
    /// infinite when that ratio is at least 1.
    Geometric,
    /// `Σ_{k>N} r^k Γ(kγ) M^k ‖y^k‖` with `‖y^k‖` replaced by the level bound.
    Bound(BoundParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoppingTime {
    pub time: f64,
    /// False when the majorant stays below `C/2` on the whole grid.
    pub crossed: bool,
}

/// `Σ_{k≤N} r^k‖g_k(t)‖` plus the tail estimate.
pub fn majorant<D: Driver + ?Sized>(
    table: &TaylorTable,
    driver: &D,
    t: f64,
    r: f64,
    n_cap: usize,
    tail: TailMode,
) -> Result<f64> {
    let n = n_cap.min(table.max_len());
    let sig = driver.signature(t, n)?;
    let mut terms = Vec::with_capacity(n);
    for k in 1..=n {
        terms.push(r.powi(k as i32) * euclid(&taylor_term(table, &sig, k)?));
    }
    let head: f64 = terms.iter().sum();
    let rest = match tail {
        TailMode::Geometric => match terms.as_slice() {
            [.., a, b] if *b > 0.0 => {
                let rho = b / a;
                if a.is_finite() && rho < 1.0 {
                    b * rho / (1.0 - rho)
                } else {
                    f64::INFINITY
                }
            }
            _ => 0.0,
        },
        TailMode::Bound(p) => {
            // r^k Γ(kγ) M^k (KT)^{kβ}/(αΓ(kβ)) summed over k > n
            let x = r * p.growth_ratio();
            let s = tail_sum(n, x, p.beta, p.gamma, DEFAULT_KMAX)?;
            (x.ln() - p.alpha.ln() + s.log_value).exp()
        }
    };
    Ok(head + rest)
}

/// First time on `t_grid` at which the majorant reaches `C/2`, refined by
/// bisection between the bracketing grid points. Returns the end of the
/// grid when no crossing occurs.
#[allow(clippy::too_many_arguments)]
pub fn stopping_time<D: Driver + ?Sized>(
    table: &TaylorTable,
    driver: &D,
    r: f64,
    c_radius: f64,
    n_cap: usize,
    t_grid: &[f64],
    tail: TailMode,
) -> Result<StoppingTime> {
    if !(r > 1.0) {
        return Err(Error::InvalidArgument(format!("radius r must exceed 1, got {r}")));
    }
    if !(c_radius > 0.0) {
        return Err(Error::InvalidArgument("analyticity radius must be positive".into()));
    }
    let (&first, &last) = match (t_grid.first(), t_grid.last()) {
        (Some(a), Some(b)) if b > a => (a, b),
        _ => return Err(Error::InvalidArgument("time grid needs two increasing points".into())),
    };
    let level = 0.5 * c_radius;
    let crosses = |t: f64| -> Result<bool> { Ok(majorant(table, driver, t, r, n_cap, tail)? >= level) };
    let tol = 1e-9 * (last - first);
    let mut prev = first;
    for &t in t_grid.iter().skip(1) {
        if crosses(t)? {
            let (mut lo, mut hi) = (prev, t);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if crosses(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let time = if lo > first { lo } else { hi };
            return Ok(StoppingTime { time, crossed: true });
        }
        prev = t;
    }
    Ok(StoppingTime { time: last, crossed: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MultiPoly;
    use crate::signature::segment_signature;
    use crate::tensor::Word;
    use crate::vector_fields::{taylor_coefficients, PolyVectorField};

    fn linear_1d(a: f64) -> PolyVectorField {
        PolyVectorField::linear(&[vec![a]], 1.0).unwrap()
    }

    fn params() -> BoundParams {
        BoundParams::new(0.4, 0.1, 0.5, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_table_gives_zero_terms() {
        let f = PolyVectorField::new(2, vec![vec![MultiPoly::zero(2), MultiPoly::zero(2)]], 1.0).unwrap();
        let table = taylor_coefficients(&f, &[1.0, 2.0], 3).unwrap();
        let sig = segment_signature(&[0.7], 3);
        assert_eq!(taylor_term(&table, &sig, 2).unwrap(), vec![0.0, 0.0]);
        assert!(taylor_term(&table, &sig, 4).is_err());
        assert!(taylor_term(&table, &segment_signature(&[0.7], 1), 2).is_err());
    }

    #[test]
    fn linear_terms_match_closed_form() {
        let (a, x0, dy) = (1.3, 0.8, 0.45);
        let table = taylor_coefficients(&linear_1d(a), &[x0], 8).unwrap();
        let sig = segment_signature(&[dy], 8);
        let mut fact = 1.0;
        for k in 1..=8 {
            fact *= k as f64;
            let expect = a.powi(k as i32) * x0 * dy.powi(k as i32) / fact;
            let g = taylor_term(&table, &sig, k).unwrap();
            assert!((g[0] - expect).abs() < 1e-15 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn noncommuting_second_term() {
        let x = MultiPoly::var(1, 0);
        let f = PolyVectorField::new(1, vec![vec![MultiPoly::constant(1, 1.0)], vec![x]], 1.0).unwrap();
        let table = taylor_coefficients(&f, &[0.0], 2).unwrap();
        assert_eq!(table.coeff(&Word::new(vec![1, 2], 2).unwrap()).unwrap(), &[1.0]);
        let path = PiecewiseLinearPath::new(vec![0.0, 1.0, 2.0], vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]])
            .unwrap();
        let sig = path.signature(2.0, 2).unwrap();
        let g2 = taylor_term(&table, &sig, 2).unwrap();
        assert!((g2[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn evaluation_shape_and_exponential() {
        let table = taylor_coefficients(&linear_1d(1.0), &[1.0], 12).unwrap();
        let path = PiecewiseLinearPath::linear(&[0.5], 1.0).unwrap();
        let e0 = taylor_evaluate(&table, &path, 1.0, 0, &params()).unwrap();
        assert_eq!(e0.partial_sums, vec![vec![1.0]]);
        assert!(e0.term_norms.is_empty());
        let e = taylor_evaluate(&table, &path, 1.0, 12, &params()).unwrap();
        assert!((e.value()[0] - 0.5f64.exp()).abs() < 1e-8);
        assert_eq!(e.partial_sums.len(), 13);
        assert!(e.error_bound >= 0.0);
        let mut buf = Vec::new();
        e.write_csv(&mut buf, true).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 14);
    }

    #[test]
    fn bound_decreases_to_zero() {
        // M chosen so that x = M K^β T^β is close to 1
        let p = BoundParams::new(0.4, 0.1, 0.5, 0.01, 1.0).unwrap();
        assert!((0.5..2.0).contains(&p.growth_ratio()));
        let mut prev = f64::INFINITY;
        for n in 1..40 {
            let b = bound_truncation(&p, n).unwrap().log_value;
            assert!(b < prev, "n = {n}: {b} vs {prev}");
            prev = b;
        }
        assert!(bound_truncation(&p, 4000).unwrap().log_value < -30.0);
    }

    #[test]
    fn stopping_time_zero_table_and_closed_form() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let path = PiecewiseLinearPath::linear(&[2.0], 1.0).unwrap();
        let zero = taylor_coefficients(&linear_1d(0.0), &[1.0], 10).unwrap();
        let st = stopping_time(&zero, &path, 2.0, 1.0, 10, &grid, TailMode::Geometric).unwrap();
        assert_eq!(st, StoppingTime { time: 1.0, crossed: false });

        let (a, x0, c, r, v) = (1.0, 1.0, 1.0, 2.0, 2.0);
        let table = taylor_coefficients(&linear_1d(a), &[x0], 30).unwrap();
        let st = stopping_time(&table, &path, r, c, 30, &grid, TailMode::Geometric).unwrap();
        let exact = (1.0 + c / (2.0 * x0)).ln() / (r * a * v);
        assert!(st.crossed);
        assert!((st.time - exact).abs() < 1e-6, "{} vs {exact}", st.time);
        assert!(stopping_time(&table, &path, 1.0, c, 30, &grid, TailMode::Geometric).is_err());
    }
}
