//! Reference solutions of `dX = Σ_i V_i(X) dy^i` along piecewise-linear
//! drivers, and a quadrature cross-check of the Taylor terms.

use std::io::Write;

use crate::csv::{fmt_f64, row};
use crate::error::{Error, Result};
use crate::signature::{path_signature, PiecewiseLinearPath};
use crate::taylor::taylor_term;
use crate::tensor::Word;
use crate::vector_fields::{taylor_coefficients, PolyVectorField};

pub const MIN_TOL: f64 = 1e-13;
pub const MAX_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Driver knots up to `t_end`, then `t_end` itself.
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Dyadic level of the driver, when known.
    pub driver_level: Option<u32>,
    pub tol: f64,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory starts at x0")
    }

    pub fn with_driver_level(mut self, m: u32) -> Self {
        self.driver_level = Some(m);
        self
    }

    /// `t,x1,...,xn`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.states[0].len();
        let header: Vec<String> = std::iter::once("t".to_string()).chain((1..=n).map(|j| format!("x{j}"))).collect();
        w.write_all(row(header).as_bytes())?;
        for (t, x) in self.times.iter().zip(&self.states) {
            let fields = std::iter::once(fmt_f64(*t)).chain(x.iter().map(|v| fmt_f64(*v)));
            w.write_all(row(fields).as_bytes())?;
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau; the fields are autonomous so the nodes are unused
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

const SAFETY: f64 = 0.9;
const PI_ALPHA: f64 = 0.7 / 5.0;
const PI_BETA: f64 = 0.4 / 5.0;

struct Stepper<'a> {
    field: &'a PolyVectorField,
    slope: Vec<f64>,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl Stepper<'_> {
    fn rhs(&self, x: &[f64], out: &mut [f64]) {
        self.field.drift(x, &self.slope, out);
    }

    /// One step from `x`; writes the new state and returns the scaled error.
    fn step(&mut self, x: &[f64], h: f64, tol: f64, out: &mut [f64]) -> f64 {
        let n = x.len();
        let mut k = std::mem::take(&mut self.k);
        self.rhs(x, &mut k[0]);
        for s in 1..7 {
            for j in 0..n {
                self.tmp[j] = x[j] + h * (0..s).map(|r| A[s][r] * k[r][j]).sum::<f64>();
            }
            let tmp = std::mem::take(&mut self.tmp);
            self.rhs(&tmp, &mut k[s]);
            self.tmp = tmp;
        }
        // stage 7 is evaluated at the fifth-order solution
        out.copy_from_slice(&self.tmp);
        let mut err = 0.0f64;
        for j in 0..n {
            let e = h * (0..7).map(|s| E[s] * k[s][j]).sum::<f64>();
            let scale = tol * x[j].abs().max(out[j].abs()).max(1.0);
            err = err.max(e.abs() / scale);
        }
        self.k = k;
        err
    }
}

/// Adaptive Dormand–Prince 5(4) with PI step control. Each driver segment is
/// integrated separately with constant slope, so knots are always step
/// boundaries. The local error per step is kept below `tol` relative to
/// `max(1, |x|)` componentwise.
pub fn solve(
    field: &PolyVectorField,
    x0: &[f64],
    driver: &PiecewiseLinearPath,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory> {
    if !(MIN_TOL..=MAX_TOL).contains(&tol) {
        return Err(Error::InvalidArgument(format!("tol must lie in [{MIN_TOL:e}, {MAX_TOL:e}], got {tol:e}")));
    }
    if x0.len() != field.n() || driver.dim() != field.d() {
        return Err(Error::DimensionMismatch(format!(
            "x0 in R^{}, driver in R^{}, fields {} on R^{}",
            x0.len(),
            driver.dim(),
            field.d(),
            field.n()
        )));
    }
    let (start, end) = (driver.start(), driver.end());
    if !(t_end > start && t_end <= end) {
        return Err(Error::OutOfDomain { s: start, t: t_end, start, end });
    }
    let n = x0.len();
    let mut stepper =
        Stepper { field, slope: vec![0.0; field.d()], k: std::array::from_fn(|_| vec![0.0; n]), tmp: vec![0.0; n] };
    let times = driver.times();
    let values = driver.values();
    let mut out_times = vec![start];
    let mut states = vec![x0.to_vec()];
    let mut x = x0.to_vec();
    let mut next = vec![0.0; n];
    let (mut steps, mut rejected) = (0, 0);
    let mut h_prev: Option<f64> = None;
    for seg in 0..times.len() - 1 {
        let (a, b_knot) = (times[seg], times[seg + 1]);
        if a >= t_end {
            break;
        }
        let b = b_knot.min(t_end);
        for (s, (y1, y0)) in stepper.slope.iter_mut().zip(values[seg + 1].iter().zip(&values[seg])) {
            *s = (y1 - y0) / (b_knot - a);
        }
        let mut t = a;
        let mut h = h_prev.unwrap_or(b - a).min(b - a);
        let mut err_prev = 1.0f64;
        while t < b {
            let last = t + h >= b;
            if last {
                h = b - t;
            }
            let err = stepper.step(&x, h, tol, &mut next);
            if !err.is_finite() || next.iter().any(|v| !v.is_finite()) {
                h *= 0.1;
                rejected += 1;
            } else if err <= 1.0 {
                t = if last { b } else { t + h };
                std::mem::swap(&mut x, &mut next);
                steps += 1;
                let fac = if err == 0.0 { 5.0 } else { SAFETY * err.powf(-PI_ALPHA) * err_prev.powf(PI_BETA) };
                err_prev = err.max(1e-4);
                if !last {
                    h *= fac.clamp(0.2, 5.0);
                }
                h_prev = Some(h);
            } else {
                h *= (SAFETY * err.powf(-PI_ALPHA)).max(0.2);
                rejected += 1;
            }
            if t < b && h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t });
            }
        }
        out_times.push(b);
        states.push(x.clone());
    }
    Ok(Trajectory { times: out_times, states, driver_level: None, tol, steps, rejected })
}

/// Per-level comparison of the Taylor terms against quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardCheck {
    /// `‖Σ_{|I|=k} P_I ∫dy^I (quadrature) − g_k‖` for `k = 1..=N`.
    pub per_level: Vec<f64>,
    pub max: f64,
}

/// Sub-intervals per driver segment used by the quadrature.
pub const PICARD_POINTS_PER_SEGMENT: usize = 4000;

/// Rebuilds the level-`k` expansion terms over the whole driver from
/// iterated integrals computed by nested trapezoidal quadrature
/// (`∫_0^t I_w dy^i` for the word `w` followed by `i`), and compares them with
/// [`taylor_term`] on the exact signature.
pub fn picard_expansion_check(
    field: &PolyVectorField,
    x0: &[f64],
    driver: &PiecewiseLinearPath,
    n_levels: usize,
) -> Result<PicardCheck> {
    let table = taylor_coefficients(field, x0, n_levels)?;
    if driver.dim() != field.d() {
        return Err(Error::DimensionMismatch(format!("driver in R^{}, {} fields", driver.dim(), field.d())));
    }
    let d = field.d();
    let sig = path_signature(driver, driver.start(), driver.end(), n_levels)?;

    // fine grid aligned to the knots, with the driver increment on each cell
    let mut du: Vec<Vec<f64>> = Vec::new();
    let values = driver.values();
    for seg in 0..driver.segments() {
        let inc: Vec<f64> =
            values[seg + 1].iter().zip(&values[seg]).map(|(b, a)| (b - a) / PICARD_POINTS_PER_SEGMENT as f64).collect();
        du.extend(std::iter::repeat_n(inc, PICARD_POINTS_PER_SEGMENT));
    }
    let cells = du.len();

    // integrals along the grid for every word of the current length
    let mut prev: Vec<Vec<f64>> = vec![vec![1.0; cells + 1]];
    let mut per_level = Vec::with_capacity(n_levels);
    for k in 1..=n_levels {
        let mut cur = Vec::with_capacity(prev.len() * d);
        for w in &prev {
            for i in 0..d {
                let mut acc = vec![0.0; cells + 1];
                for c in 0..cells {
                    acc[c + 1] = acc[c] + 0.5 * (w[c] + w[c + 1]) * du[c][i];
                }
                cur.push(acc);
            }
        }
        // cur is ordered by (prefix offset, last letter), i.e. word offset order
        let mut quad = vec![0.0; table.n()];
        for (offset, integral) in cur.iter().enumerate() {
            let p = table.coeff(&Word::from_offset(offset, k, d)).expect("word within table");
            let v = integral[cells];
            for (q, pj) in quad.iter_mut().zip(p) {
                *q += pj * v;
            }
        }
        let g = taylor_term(&table, &sig, k)?;
        let diff = quad.iter().zip(&g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        per_level.push(diff);
        prev = cur;
    }
    let max = per_level.iter().copied().fold(0.0, f64::max);
    Ok(PicardCheck { per_level, max })
}
