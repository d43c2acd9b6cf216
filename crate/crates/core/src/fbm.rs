//! Fractional Brownian motion: exact sampling on a uniform grid, dyadic
//! interpolation, the rough lift of the interpolants, and grid estimates of
//! the Garsia-type functionals that control the level-2 Hölder norm.
//!
//! Random stream layout: one ChaCha20 generator seeded from the 64-bit seed;
//! component `c` reads stream `c` from word position 0 and draws its `n`
//! standard normals in grid order. Normals come from `rand_distr::StandardNormal`.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signature::{dyadic_grid, PiecewiseLinearPath, RoughLift};

/// Largest grid size accepted by the Cholesky sampler.
pub const MAX_GRID: usize = 4096;

/// `R(s, t) = ½(s^{2H} + t^{2H} − |t − s|^{2H})`.
pub fn fbm_covariance(s: f64, t: f64, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2))
}

/// Metadata written next to a sample's CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbmMeta {
    pub hurst: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
}

/// `d` independent fBm paths on the grid `i·T/n`, `i = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmSample {
    meta: FbmMeta,
    times: Vec<f64>,
    /// `values[c][i]`: component `c` at grid index `i`.
    values: Vec<Vec<f64>>,
}

impl FbmSample {
    pub fn meta(&self) -> FbmMeta {
        self.meta
    }

    pub fn hurst(&self) -> f64 {
        self.meta.hurst
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.values[c]
    }

    /// Linear interpolation through every grid point.
    pub fn to_path(&self) -> PiecewiseLinearPath {
        let knots = (0..self.times.len()).map(|i| self.values.iter().map(|comp| comp[i]).collect()).collect();
        PiecewiseLinearPath::new(self.times.clone(), knots).expect("fBm grids are valid paths")
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.to_path().write_csv(w)
    }

    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&self.meta).expect("metadata always serialises")
    }
}

/// Cholesky factor of the grid covariance, reusable across seeds.
#[derive(Debug, Clone)]
pub struct FbmSampler {
    hurst: f64,
    horizon: f64,
    n: usize,
    /// Row-major lower-triangular factor, `n × n`.
    factor: Vec<f64>,
}

impl FbmSampler {
    pub fn new(hurst: f64, horizon: f64, n: usize) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidArgument(format!("Hurst index must lie in (0, 1), got {hurst}")));
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("grid needs at least one step".into()));
        }
        if n > MAX_GRID {
            return Err(Error::InvalidArgument(format!(
                "grid size {n} exceeds the Cholesky cap {MAX_GRID}; use a smaller n"
            )));
        }
        let times = grid_times(horizon, n);
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let c = fbm_covariance(times[i + 1], times[j + 1], hurst);
                cov[i * n + j] = c;
                cov[j * n + i] = c;
            }
        }
        let factor = match cholesky(&cov, n) {
            Some(f) => f,
            None => {
                let max_diag = (0..n).map(|i| cov[i * n + i]).fold(0.0, f64::max);
                let jitter = 1e-12 * max_diag;
                for i in 0..n {
                    cov[i * n + i] += jitter;
                }
                cholesky(&cov, n).ok_or(Error::NotPositiveDefinite { jitter })?
            }
        };
        Ok(FbmSampler { hurst, horizon, n, factor })
    }

    pub fn sample(&self, d: usize, seed: u64) -> Result<FbmSample> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let n = self.n;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(d);
        let mut z = vec![0.0; n];
        for c in 0..d {
            rng.set_stream(c as u64);
            rng.set_word_pos(0);
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            let mut comp = vec![0.0; n + 1];
            for i in 0..n {
                let row = &self.factor[i * n..i * n + i + 1];
                comp[i + 1] = row.iter().zip(&z).map(|(l, x)| l * x).sum();
            }
            values.push(comp);
        }
        Ok(FbmSample {
            meta: FbmMeta { hurst: self.hurst, horizon: self.horizon, n, d, seed },
            times: grid_times(self.horizon, n),
            values,
        })
    }
}

fn grid_times(horizon: f64, n: usize) -> Vec<f64> {
    let h = horizon / n as f64;
    (0..=n).map(|i| if i == n { horizon } else { i as f64 * h }).collect()
}

/// Lower-triangular `L` with `L Lᵀ = a`, or `None` if a pivot is not positive.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let row_j = &l[j * n..j * n + j];
        let diag = a[j * n + j] - row_j.iter().map(|x| x * x).sum::<f64>();
        if !(diag > 0.0) {
            return None;
        }
        let ljj = diag.sqrt();
        l[j * n + j] = ljj;
        for i in j + 1..n {
            let dot: f64 = l[i * n..i * n + j].iter().zip(&l[j * n..j * n + j]).map(|(a, b)| a * b).sum();
            l[i * n + j] = (a[i * n + j] - dot) / ljj;
        }
    }
    Some(l)
}

/// Exact-law fBm sample on `n + 1` uniform grid points.
pub fn sample_fbm(hurst: f64, horizon: f64, n: usize, d: usize, seed: u64) -> Result<FbmSample> {
    FbmSampler::new(hurst, horizon, n)?.sample(d, seed)
}

/// Finest dyadic level of a sample whose grid size is a power of two.
pub fn max_level(sample: &FbmSample) -> Result<u32> {
    let n = sample.meta.n;
    if !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("grid size {n} is not a power of two")));
    }
    Ok(n.trailing_zeros())
}

/// Piecewise-linear interpolation of the sample at the dyadic times
/// `i·2^{-m}·T`.
pub fn dyadic_interpolation(sample: &FbmSample, m: u32) -> Result<PiecewiseLinearPath> {
    let m_max = max_level(sample)?;
    if m > m_max {
        return Err(Error::InvalidArgument(format!("level {m} exceeds the sample's finest level {m_max}")));
    }
    let stride = 1usize << (m_max - m);
    let idx: Vec<usize> = (0..=sample.meta.n).step_by(stride).collect();
    let times = idx.iter().map(|&i| sample.times[i]).collect();
    let knots = idx.iter().map(|&i| sample.values.iter().map(|comp| comp[i]).collect()).collect();
    PiecewiseLinearPath::new(times, knots)
}

/// Degree-2 lift of the level-`m` dyadic interpolation.
pub fn lift_fbm(sample: &FbmSample, m: u32, beta: f64) -> Result<RoughLift> {
    RoughLift::new(dyadic_interpolation(sample, m)?, 2, beta)
}

/// Settings for [`estimate_garsia`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarsiaConfig {
    pub beta: f64,
    pub p: f64,
    pub depth: u32,
    pub hurst: f64,
}

/// Grid estimates of the Garsia functionals for the level-2 process
/// `R = y²` with `γ = 2β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GarsiaEstimate {
    pub u_gamma_p: f64,
    pub v_gamma_p: f64,
    /// `U + V` (the lemma's constant normalised to 1).
    pub xi: f64,
    /// Level-1 Hölder estimate.
    pub eta: f64,
    pub c_beta_t: f64,
}

/// Discretises
/// `U = (∫∫ ‖R_{s,t}‖^p / |t−s|^{pγ+2} ds dt)^{1/p}` by the midpoint rule on
/// the dyadic cells of the given depth (diagonal cells excluded) and
/// `V = sup_{s<t} sup_{s≤u≤v≤r≤t} ‖R_{ur} − R_{uv} − R_{vr}‖ / (t−s)^γ`
/// by exhaustive search over dyadic nodes.
pub fn estimate_garsia(lift: &RoughLift, cfg: &GarsiaConfig) -> Result<GarsiaEstimate> {
    let GarsiaConfig { beta, p, depth, hurst } = *cfg;
    if !(beta > 0.0 && beta < hurst) {
        return Err(Error::InvalidArgument(format!("need 0 < beta < H, got beta = {beta}, H = {hurst}")));
    }
    let threshold = 1.0 / (2.0 * (hurst - beta));
    if !(p > threshold) {
        return Err(Error::InvalidArgument(format!(
            "p = {p} must exceed 1/(2(H−β)) = {threshold}; below it E[U^p] diverges"
        )));
    }
    if lift.degree() < 2 {
        return Err(Error::InvalidArgument("Garsia estimates need a degree-2 lift".into()));
    }
    let gamma = 2.0 * beta;
    let (a, b) = (lift.start(), lift.end());

    // U: cell midpoints are the odd nodes of the next finer grid
    let fine = lift.on_grid(&dyadic_grid(a, b, depth + 1))?;
    let cells = 1usize << depth;
    let h = (b - a) / cells as f64;
    let mut integral = 0.0;
    for i in 0..cells {
        for j in i + 1..cells {
            let (si, tj) = (2 * i + 1, 2 * j + 1);
            let r = fine.increment(si, tj).level_norm(2);
            let dt = fine.times()[tj] - fine.times()[si];
            integral += 2.0 * r.powf(p) / dt.powf(p * gamma + 2.0) * h * h;
        }
    }
    let u = integral.powf(1.0 / p);

    // V and eta on the nodes of the depth grid
    let nodes = lift.on_grid(&dyadic_grid(a, b, depth))?;
    let n = nodes.len();
    let d = lift.dim();
    let times = nodes.times();
    let mut level2 = vec![vec![0.0; d * d]; n * n];
    let mut eta = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let inc = nodes.increment(i, j);
            eta = eta.max(inc.level_norm(1) / (times[j] - times[i]).powf(beta));
            level2[i * n + j] = inc.level(2).to_vec();
        }
    }
    let defect = |u: usize, v: usize, r: usize| -> f64 {
        let (ur, uv, vr) = (&level2[u * n + r], &level2[u * n + v], &level2[v * n + r]);
        (0..d * d).map(|k| (ur[k] - uv[k] - vr[k]).abs()).sum()
    };
    // w[s][t] = max defect over triples inside [t_s, t_t]
    let mut w = vec![0.0f64; n * n];
    let mut v_sup = 0.0f64;
    for len in 2..n {
        for s in 0..n - len {
            let t = s + len;
            let mut best = w[(s + 1) * n + t].max(w[s * n + t - 1]);
            for mid in s + 1..t {
                best = best.max(defect(s, mid, t));
            }
            w[s * n + t] = best;
            v_sup = v_sup.max(best / (times[t] - times[s]).powf(gamma));
        }
    }
    let xi = u + v_sup;
    Ok(GarsiaEstimate { u_gamma_p: u, v_gamma_p: v_sup, xi, eta, c_beta_t: xi.max(eta) })
}
