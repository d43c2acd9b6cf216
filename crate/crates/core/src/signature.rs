//! Signatures of piecewise-linear paths and the rough lifts built on them.
//!
//! A linear segment with increment `δ` has signature `exp(δ) = (1, δ, δ^{⊗2}/2!, ...)`;
//! the signature of a piecewise-linear path over `[s, t]` is the Chen product of
//! the signatures of the (possibly clipped) segments that meet `[s, t]`.

use std::io::{BufRead, Write};

use crate::csv::{fmt_f64, row};
use crate::error::{Error, Result};
use crate::tensor::TruncatedTensor;

/// Grid depth used when a lift estimates its own Hölder constant.
pub const DEFAULT_HOLDER_DEPTH: u32 = 8;
/// Dyadic depth of the partition family searched by [`p_variation_distance`].
pub const DEFAULT_PVAR_DEPTH: u32 = 10;

/// A continuous path that is linear between consecutive knots.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearPath {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl PiecewiseLinearPath {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidArgument("a path needs at least two knots".into()));
        }
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch(format!("{} times but {} values", times.len(), values.len())));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("knot times must be finite and strictly increasing".into()));
        }
        let dim = values[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument("path dimension must be positive".into()));
        }
        for v in &values {
            if v.len() != dim {
                return Err(Error::DimensionMismatch("all knots must share one dimension".into()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("knot values must be finite".into()));
            }
        }
        Ok(PiecewiseLinearPath { times, values })
    }

    /// The path `t ↦ start + slope·t` sampled at its two endpoints.
    pub fn linear(slope: &[f64], t_end: f64) -> Result<Self> {
        let end: Vec<f64> = slope.iter().map(|v| v * t_end).collect();
        Self::new(vec![0.0, t_end], vec![vec![0.0; slope.len()], end])
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn segments(&self) -> usize {
        self.times.len() - 1
    }

    /// Index of the segment containing `t`, preferring the left one at knots.
    fn segment_index(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&k| k < t);
        i.clamp(1, self.segments()) - 1
    }

    /// Value at `t` by linear interpolation; knots are returned exactly.
    pub fn value_at(&self, t: f64) -> Result<Vec<f64>> {
        self.check_interval(t, t)?;
        let k = self.segment_index(t);
        Ok(self.interpolate(k, t))
    }

    fn interpolate(&self, k: usize, t: f64) -> Vec<f64> {
        let (a, b) = (self.times[k], self.times[k + 1]);
        if t == a {
            return self.values[k].clone();
        }
        if t == b {
            return self.values[k + 1].clone();
        }
        let w = (t - a) / (b - a);
        self.values[k].iter().zip(&self.values[k + 1]).map(|(x, y)| x + w * (y - x)).collect()
    }

    fn check_interval(&self, s: f64, t: f64) -> Result<()> {
        if !(s <= t && s >= self.start() && t <= self.end()) {
            return Err(Error::OutOfDomain { s, t, start: self.start(), end: self.end() });
        }
        Ok(())
    }

    /// Increments of the linear pieces covering `[s, t]`, clipped at both ends.
    pub fn increments(&self, s: f64, t: f64) -> Result<Vec<Vec<f64>>> {
        self.check_interval(s, t)?;
        if s == t {
            return Ok(Vec::new());
        }
        let first = self.segment_index(s);
        let mut out = Vec::new();
        for k in first..self.segments() {
            let (a, b) = (self.times[k], self.times[k + 1]);
            if a >= t {
                break;
            }
            let lo = s.max(a);
            let hi = t.min(b);
            if hi <= lo {
                continue;
            }
            let left = if lo == a { self.values[k].clone() } else { self.interpolate(k, lo) };
            let right = if hi == b { self.values[k + 1].clone() } else { self.interpolate(k, hi) };
            out.push(right.iter().zip(&left).map(|(r, l)| r - l).collect());
        }
        Ok(out)
    }

    /// Writes the `t,x1,...,xd` CSV representation.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim()).map(|i| format!("x{i}")));
        w.write_all(row(header).as_bytes())?;
        for (t, v) in self.times.iter().zip(&self.values) {
            let fields = std::iter::once(fmt_f64(*t)).chain(v.iter().map(|x| fmt_f64(*x)));
            w.write_all(row(fields).as_bytes())?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty path CSV".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.first() != Some(&"t") || cols.len() < 2 {
            return Err(Error::Parse(format!("unexpected path CSV header `{header}`")));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let nums = line
                .trim()
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", lineno + 2)))?;
            if nums.len() != cols.len() {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, expected {}",
                    lineno + 2,
                    nums.len(),
                    cols.len()
                )));
            }
            times.push(nums[0]);
            values.push(nums[1..].to_vec());
        }
        Self::new(times, values)
    }
}

/// Signature `exp(δ)` of a single linear segment: level `k` is `δ^{⊗k}/k!`.
pub fn segment_signature(delta: &[f64], degree: usize) -> TruncatedTensor {
    let d = delta.len();
    let mut sig = TruncatedTensor::identity(d, degree);
    for k in 1..=degree {
        let prev = sig.level(k - 1).to_vec();
        let block = sig.level_mut(k);
        let inv_k = 1.0 / k as f64;
        for (i, &p) in prev.iter().enumerate() {
            for (j, &x) in delta.iter().enumerate() {
                block[i * d + j] = p * x * inv_k;
            }
        }
    }
    sig
}

/// Degree-`degree` signature of `path` over `[s, t]`.
pub fn path_signature(path: &PiecewiseLinearPath, s: f64, t: f64, degree: usize) -> Result<TruncatedTensor> {
    let mut sig = TruncatedTensor::identity(path.dim(), degree);
    for delta in path.increments(s, t)? {
        sig.mul_assign(&segment_signature(&delta, degree))?;
    }
    Ok(sig)
}

/// `n = 2^depth` equal cells on `[start, end]`, returned as `n + 1` times.
pub fn dyadic_grid(start: f64, end: f64, depth: u32) -> Vec<f64> {
    let n = 1usize << depth;
    let h = (end - start) / n as f64;
    (0..=n).map(|i| if i == n { end } else { start + i as f64 * h }).collect()
}

/// A rough path realised by the signature of a piecewise-linear path.
///
/// Every such lift is geometric and satisfies Chen's identity exactly up to
/// rounding; `beta` records the Hölder exponent the lift is used with.
#[derive(Debug, Clone)]
pub struct RoughLift {
    path: PiecewiseLinearPath,
    degree: usize,
    beta: f64,
    holder_const: Option<f64>,
}

impl RoughLift {
    pub fn new(path: PiecewiseLinearPath, degree: usize, beta: f64) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidArgument("lift degree must be at least 1".into()));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidArgument(format!("Hölder exponent {beta} must lie in (0, 1)")));
        }
        Ok(RoughLift { path, degree, beta, holder_const: None })
    }

    /// Attaches the grid estimate of the Hölder constant (see [`holder_constant`]).
    pub fn with_holder_estimate(mut self, depth: u32) -> Result<Self> {
        let grid = dyadic_grid(self.path.start(), self.path.end(), depth);
        self.holder_const = Some(holder_constant(&self, &grid, self.beta)?);
        Ok(self)
    }

    pub fn eval(&self, s: f64, t: f64) -> Result<TruncatedTensor> {
        path_signature(&self.path, s, t, self.degree)
    }

    /// Signature over `[s, t]` at a degree other than the lift's own.
    pub fn eval_degree(&self, s: f64, t: f64, degree: usize) -> Result<TruncatedTensor> {
        path_signature(&self.path, s, t, degree)
    }

    pub fn path(&self) -> &PiecewiseLinearPath {
        &self.path
    }

    pub fn dim(&self) -> usize {
        self.path.dim()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn holder_const(&self) -> Option<f64> {
        self.holder_const
    }

    pub fn start(&self) -> f64 {
        self.path.start()
    }

    pub fn end(&self) -> f64 {
        self.path.end()
    }

    /// Prefix signatures on a grid, for bulk evaluation of grid increments.
    pub fn on_grid(&self, grid: &[f64]) -> Result<GridLift> {
        GridLift::new(self, grid)
    }
}

/// Prefix signatures `y_{t_0, t_i}` on a fixed grid. Increments between grid
/// points come from Chen's identity, `y_{t_i,t_j} = y_{t_0,t_i}^{-1} ⊗ y_{t_0,t_j}`.
#[derive(Debug, Clone)]
pub struct GridLift {
    times: Vec<f64>,
    prefix: Vec<TruncatedTensor>,
    prefix_inv: Vec<TruncatedTensor>,
}

impl GridLift {
    fn new(lift: &RoughLift, grid: &[f64]) -> Result<Self> {
        if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("grid must hold at least two increasing times".into()));
        }
        let mut prefix = Vec::with_capacity(grid.len());
        let mut acc = lift.eval(lift.start(), grid[0])?;
        prefix.push(acc.clone());
        for w in grid.windows(2) {
            acc.mul_assign(&lift.eval(w[0], w[1])?)?;
            prefix.push(acc.clone());
        }
        let prefix_inv = prefix.iter().map(|p| p.inverse()).collect::<Result<Vec<_>>>()?;
        Ok(GridLift { times: grid.to_vec(), prefix, prefix_inv })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Increment over `[t_i, t_j]`, `i ≤ j`.
    pub fn increment(&self, i: usize, j: usize) -> TruncatedTensor {
        self.prefix_inv[i].mul(&self.prefix[j]).expect("grid tensors share one shape")
    }
}

fn check_beta_regime(beta: f64) -> Result<()> {
    if !(beta > 1.0 / 3.0 && beta < 0.5) {
        return Err(Error::InvalidArgument(format!("beta must lie in (1/3, 1/2), got {beta}")));
    }
    Ok(())
}

/// Grid suprema `sup_{s<t} ‖y^i_{s,t}‖ / (t−s)^{iβ}` for levels `i = 1, 2`
/// (only level 1 for degree-1 lifts).
#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    pub per_level: Vec<f64>,
}

impl HolderEstimate {
    /// `max_i (sup ‖y^i‖/(t−s)^{iβ})^{1/i}`: the constant `C` for which
    /// `‖y^i_{s,t}‖ ≤ C^i (t−s)^{iβ}` on the grid.
    pub fn rooted(&self) -> f64 {
        self.per_level.iter().enumerate().map(|(i, &c)| c.powf(1.0 / (i + 1) as f64)).fold(0.0, f64::max)
    }

    /// `max_i sup ‖y^i‖/(t−s)^{iβ}`: a single `C` with `‖y^i_{s,t}‖ ≤ C (t−s)^{iβ}`.
    pub fn uniform(&self) -> f64 {
        self.per_level.iter().copied().fold(0.0, f64::max)
    }
}

/// Per-level Hölder suprema over all grid pairs; a lower bound on the true constant.
pub fn holder_estimate(lift: &RoughLift, grid: &[f64], beta: f64) -> Result<HolderEstimate> {
    check_beta_regime(beta)?;
    let levels = lift.degree().min(2);
    let g = lift.on_grid(grid)?;
    let mut per_level = vec![0.0f64; levels];
    for i in 0..g.len() {
        for j in i + 1..g.len() {
            let inc = g.increment(i, j);
            let dt = g.times[j] - g.times[i];
            for (lvl, best) in per_level.iter_mut().enumerate() {
                let k = lvl + 1;
                let ratio = inc.level_norm(k) / dt.powf(k as f64 * beta);
                *best = best.max(ratio);
            }
        }
    }
    Ok(HolderEstimate { per_level })
}

/// Grid estimate of the Hölder constant, `max_{i ≤ 2} (‖y^i_{s,t}‖/(t−s)^{iβ})^{1/i}`
/// maximised over grid pairs.
pub fn holder_constant(lift: &RoughLift, grid: &[f64], beta: f64) -> Result<f64> {
    Ok(holder_estimate(lift, grid, beta)?.rooted())
}

/// p-variation distance with `p = 1/β`, the supremum taken over every
/// partition whose points lie on the dyadic grid of the given depth.
///
/// For each level the supremum over grid partitions is exact (dynamic
/// programming over the last partition point), so the result is
/// non-decreasing in `depth`.
pub fn p_variation_distance(a: &RoughLift, b: &RoughLift, depth: u32) -> Result<f64> {
    if a.dim() != b.dim() || a.degree() != b.degree() {
        return Err(Error::DimensionMismatch("lifts must share dimension and degree".into()));
    }
    if a.start() != b.start() || a.end() != b.end() {
        return Err(Error::DimensionMismatch("lifts must share their time domain".into()));
    }
    if a.beta() != b.beta() {
        return Err(Error::InvalidArgument("lifts must share the Hölder exponent".into()));
    }
    let p = 1.0 / a.beta();
    let levels = (p.floor() as usize).min(a.degree()).max(1);
    let grid = dyadic_grid(a.start(), a.end(), depth);
    let ga = a.on_grid(&grid)?;
    let gb = b.on_grid(&grid)?;
    let n = grid.len();
    // best[lvl][j] = sup over grid partitions of [t_0, t_j] of Σ ‖Δ‖^{p/lvl}
    let mut best = vec![vec![0.0f64; n]; levels];
    for j in 1..n {
        for i in 0..j {
            let diff = ga.increment(i, j).sub(&gb.increment(i, j))?;
            for (lvl, row) in best.iter_mut().enumerate() {
                let k = lvl + 1;
                let cand = row[i] + diff.level_norm(k).powf(p / k as f64);
                if cand > row[j] {
                    row[j] = cand;
                }
            }
        }
    }
    Ok(best.iter().enumerate().map(|(lvl, row)| row[n - 1].powf((lvl + 1) as f64 / p)).fold(0.0, f64::max))
}

/// Largest coefficient-wise defect of `Sym(y²) = ½ y¹ ⊗ y¹`.
pub fn geometric_defect(sig: &TruncatedTensor) -> f64 {
    if sig.degree() < 2 {
        return 0.0;
    }
    let d = sig.dim();
    let l1 = sig.level(1);
    let l2 = sig.level(2);
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let sym = 0.5 * (l2[i * d + j] + l2[j * d + i]);
            worst = worst.max((sym - 0.5 * l1[i] * l1[j]).abs());
        }
    }
    worst
}

/// Lévy area `½(y²_{ij} − y²_{ji})` between coordinates `i` and `j` (1-based).
pub fn levy_area(sig: &TruncatedTensor, i: usize, j: usize) -> f64 {
    let d = sig.dim();
    let l2 = sig.level(2);
    0.5 * (l2[(i - 1) * d + (j - 1)] - l2[(j - 1) * d + (i - 1)])
}
