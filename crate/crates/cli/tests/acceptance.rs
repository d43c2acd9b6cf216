//! End-to-end acceptance checks, one line per criterion.
//!
//! Run with `cargo test --test acceptance`. Every oracle here is computed
//! independently of the library code it checks.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rough_taylor::bounds::{level_bound, ml_sum, tail_constant_estimate, BoundParams};
use rough_taylor::fbm::{dyadic_interpolation, lift_fbm, FbmSampler};
use rough_taylor::ode::{picard_expansion_check, solve};
use rough_taylor::poly::MultiPoly;
use rough_taylor::signature::{
    dyadic_grid, geometric_defect, holder_estimate, p_variation_distance, path_signature, PiecewiseLinearPath,
    RoughLift,
};
use rough_taylor::taylor::{bound_truncation, stopping_time, taylor_evaluate, TailMode};
use rough_taylor::vector_fields::{fit_growth, taylor_coefficients, PolyVectorField};
use rough_taylor::{TruncatedTensor, Word};
use rough_taylor_cli::ExperimentConfig;

type Check = fn(&mut Suite) -> Result<String, String>;

/// Shared state: every lift built anywhere in the suite records its defect.
#[derive(Default)]
struct Suite {
    defects: Vec<f64>,
}

impl Suite {
    fn record(&mut self, sig: &TruncatedTensor) {
        self.defects.push(geometric_defect(sig));
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let used = start.elapsed();
    ensure(used < limit, || format!("runtime {used:.1?} exceeds {limit:?}"))
}

fn random_path(rng: &mut ChaCha8Rng, d: usize, segments: usize) -> PiecewiseLinearPath {
    let mut times = vec![0.0];
    for _ in 0..segments {
        let last = *times.last().unwrap();
        times.push(last + rng.random_range(0.05..1.0));
    }
    let mut values = vec![vec![0.0; d]];
    for _ in 0..segments {
        let prev = values.last().unwrap().clone();
        values.push(prev.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect());
    }
    PiecewiseLinearPath::new(times, values).unwrap()
}

fn linear_field(a: &[Vec<f64>], radius: f64) -> PolyVectorField {
    PolyVectorField::linear(a, radius).unwrap()
}

/// `V1 = 1`, `V2 = x` on R.
fn noncommuting_field(radius: f64) -> PolyVectorField {
    let x = MultiPoly::var(1, 0);
    PolyVectorField::new(1, vec![vec![MultiPoly::constant(1, 1.0)], vec![x]], radius).unwrap()
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

// --- 1 ---------------------------------------------------------------------

fn chen_identity(suite: &mut Suite) -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let d = rng.random_range(1..=3);
        let degree = rng.random_range(1..=5);
        let segments = rng.random_range(1..=20);
        let path = random_path(&mut rng, d, segments);
        let (a, b) = (path.start(), path.end());
        let mut pts = [rng.random_range(a..=b), rng.random_range(a..=b), rng.random_range(a..=b)];
        pts.sort_by(f64::total_cmp);
        let [s, u, t] = pts;
        let left = path_signature(&path, s, u, degree).map_err(|e| e.to_string())?;
        let right = path_signature(&path, u, t, degree).map_err(|e| e.to_string())?;
        let whole = path_signature(&path, s, t, degree).map_err(|e| e.to_string())?;
        let joined = left.mul(&right).map_err(|e| e.to_string())?;
        let diff = joined.sub(&whole).map_err(|e| e.to_string())?.norm().total;
        worst = worst.max(diff / whole.norm().total);
        suite.record(&whole);
    }
    ensure(worst <= 1e-10, || format!("relative discrepancy {worst:e}"))?;
    within(start, Duration::from_secs(10))?;
    Ok(format!("max relative discrepancy {worst:.2e}"))
}

// --- 2 ---------------------------------------------------------------------

/// Nested Riemann sums for every word of length ≤ 3. The integrand is tagged
/// at the value midway between the cell's endpoint values, which continuity
/// places at some point of the cell.
fn riemann_levels(path: &PiecewiseLinearPath, points: usize) -> Vec<Vec<f64>> {
    let d = path.dim();
    let (a, b) = (path.start(), path.end());
    let grid: Vec<Vec<f64>> = (0..=points)
        .map(|i| path.value_at(if i == points { b } else { a + (b - a) * i as f64 / points as f64 }).unwrap())
        .collect();
    // running integrals for words of the current length, indexed by word offset
    let mut levels = Vec::new();
    let mut prev: Vec<Vec<f64>> = vec![vec![1.0; points + 1]];
    for _ in 1..=3 {
        let mut cur = Vec::new();
        for w in &prev {
            for i in 0..d {
                let mut acc = vec![0.0; points + 1];
                for m in 0..points {
                    acc[m + 1] = acc[m] + 0.5 * (w[m] + w[m + 1]) * (grid[m + 1][i] - grid[m][i]);
                }
                cur.push(acc);
            }
        }
        levels.push(cur.iter().map(|v| v[points]).collect());
        prev = cur;
    }
    levels
}

fn riemann_oracle(suite: &mut Suite) -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let d = rng.random_range(1..=3);
        let path = random_path(&mut rng, d, 3);
        let sig = path_signature(&path, path.start(), path.end(), 3).map_err(|e| e.to_string())?;
        suite.record(&sig);
        let oracle = riemann_levels(&path, 10_000);
        for k in 1..=3 {
            for (offset, expect) in oracle[k - 1].iter().enumerate() {
                let got = sig.coeff(&Word::from_offset(offset, k, d));
                worst = worst.max((got - expect).abs());
            }
        }
    }
    ensure(worst <= 1e-3, || format!("max deviation {worst:e}"))?;
    within(start, Duration::from_secs(60))?;
    Ok(format!("max deviation {worst:.2e}"))
}

// --- 3 ---------------------------------------------------------------------

fn geometric_symmetry(suite: &mut Suite) -> Result<String, String> {
    ensure(!suite.defects.is_empty(), || "no lifts recorded".into())?;
    let worst = suite.defects.iter().copied().fold(0.0, f64::max);
    ensure(worst <= 1e-12, || format!("max defect {worst:e}"))?;
    Ok(format!("{} lifts, max defect {worst:.2e}", suite.defects.len()))
}

// --- 4 ---------------------------------------------------------------------

fn covariance(s: f64, t: f64, h: f64) -> f64 {
    0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
}

fn fbm_law(_: &mut Suite) -> Result<String, String> {
    let start = Instant::now();
    let n = 16;
    let pairs = [(1, 1), (2, 5), (4, 4), (3, 8), (8, 16), (16, 16), (5, 12), (10, 11), (1, 16), (12, 13)];
    let seeds = 5000u64;
    let mut worst = 0.0f64;
    for h in [0.35, 0.4, 0.45] {
        let sampler = FbmSampler::new(h, 1.0, n).map_err(|e| e.to_string())?;
        let mut sums = [0.0f64; 10];
        let mut squares = [0.0f64; 10];
        for seed in 0..seeds {
            let s = sampler.sample(1, seed).map_err(|e| e.to_string())?;
            let x = s.component(0);
            for (k, &(i, j)) in pairs.iter().enumerate() {
                let prod = x[i] * x[j];
                sums[k] += prod;
                squares[k] += prod * prod;
            }
        }
        let count = seeds as f64;
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let mean = sums[k] / count;
            let var = (squares[k] / count - mean * mean) * count / (count - 1.0);
            let se = (var / count).sqrt();
            let expect = covariance(i as f64 / n as f64, j as f64 / n as f64, h);
            let z = (mean - expect).abs() / se;
            worst = worst.max(z);
            ensure(z <= 3.0, || format!("H = {h}, pair ({i}, {j}): {z:.2} standard errors"))?;
        }
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!("30 covariances, worst {worst:.2} standard errors"))
}

// --- 5 ---------------------------------------------------------------------

fn factorial_decay(suite: &mut Suite) -> Result<String, String> {
    let start = Instant::now();
    let (h, beta, m, depth) = (0.4, 0.35, 10u32, 8u32);
    let sampler = FbmSampler::new(h, 1.0, 1 << m).map_err(|e| e.to_string())?;
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..100 {
        let sample = sampler.sample(2, seed).map_err(|e| e.to_string())?;
        let lift = lift_fbm(&sample, m, beta).map_err(|e| e.to_string())?;
        let c = holder_estimate(&lift, &dyadic_grid(0.0, 1.0, depth), beta).map_err(|e| e.to_string())?.uniform();
        let params = BoundParams::new(beta, 0.1, c, 1.0, 1.0).map_err(|e| e.to_string())?;
        let sig = path_signature(lift.path(), 0.0, 1.0, 6).map_err(|e| e.to_string())?;
        suite.record(&sig);
        for k in 1..=6 {
            let bound = level_bound(k, &params).map_err(|e| e.to_string())?;
            let measured = sig.level_norm(k);
            if measured > bound {
                violations += 1;
            }
            worst = worst.max(measured / bound);
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    within(start, Duration::from_secs(300))?;
    Ok(format!("600 level checks, max measured/bound {worst:.2e}"))
}

// --- 6 ---------------------------------------------------------------------

/// `exp(M)` for a 2×2 matrix by scaling and squaring.
fn expm2(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let norm = m.iter().flatten().map(|x| x.abs()).sum::<f64>();
    let s = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let scale = 0.5f64.powi(s);
    let a = m.map(|r| r.map(|x| x * scale));
    let mul = |p: [[f64; 2]; 2], q: [[f64; 2]; 2]| {
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = p[i][0] * q[0][j] + p[i][1] * q[1][j];
            }
        }
        out
    };
    let mut term = [[1.0, 0.0], [0.0, 1.0]];
    let mut sum = term;
    for k in 1..20 {
        term = mul(term, a).map(|r| r.map(|x| x / k as f64));
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        sum = mul(sum, sum);
    }
    sum
}

fn linear_closed_form(suite: &mut Suite) -> Result<String, String> {
    let start = Instant::now();
    let params = BoundParams::new(0.4, 0.1, 1.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (a, x0, dy) in [(1.0, 1.0, 0.5), (1.0, 2.0, 1.0), (-0.8, 1.5, 1.2), (2.0, 0.3, -0.5)] {
        let table = taylor_coefficients(&linear_field(&[vec![a]], 1.0), &[x0], 12).map_err(|e| e.to_string())?;
        let path = PiecewiseLinearPath::linear(&[dy], 1.0).map_err(|e| e.to_string())?;
        let eval = taylor_evaluate(&table, &path, 1.0, 12, &params).map_err(|e| e.to_string())?;
        suite.record(&eval.signature_used);
        let err = (eval.value()[0] - x0 * (a * dy).exp()).abs();
        worst = worst.max(err);
        ensure(err <= 1e-8, || format!("a = {a}, Δy = {dy}: error {err:e}"))?;
    }
    let a = [[0.3, -0.5], [0.4, 0.1]];
    let x0 = [1.0, -0.5];
    let table =
        taylor_coefficients(&linear_field(&[a[0].to_vec(), a[1].to_vec()], 1.0), &x0, 12).map_err(|e| e.to_string())?;
    for dy in [1.0, -1.2, 0.7] {
        let path = PiecewiseLinearPath::new(vec![0.0, 0.5, 1.0], vec![vec![0.0], vec![2.0 * dy], vec![dy]])
            .map_err(|e| e.to_string())?;
        let eval = taylor_evaluate(&table, &path, 1.0, 12, &params).map_err(|e| e.to_string())?;
        let e = expm2(a.map(|r| r.map(|v| v * dy)));
        let expect = [e[0][0] * x0[0] + e[0][1] * x0[1], e[1][0] * x0[0] + e[1][1] * x0[1]];
        let err = euclid(&[eval.value()[0] - expect[0], eval.value()[1] - expect[1]]);
        worst = worst.max(err);
        ensure(err <= 1e-8, || format!("matrix case Δy = {dy}: error {err:e}"))?;
    }
    within(start, Duration::from_secs(1))?;
    Ok(format!("max error {worst:.2e}"))
}

// --- 7 ---------------------------------------------------------------------

struct Benchmark {
    name: &'static str,
    field: PolyVectorField,
    x0: Vec<f64>,
    path: PiecewiseLinearPath,
    /// Exact solution at `t`, when known in closed form.
    exact: Option<fn(&PiecewiseLinearPath, f64) -> f64>,
}

fn dominance(suite: &mut Suite) -> Result<String, String> {
    let start = Instant::now();
    let (beta, order, tol) = (0.4, 12, 1e-12);
    let exp_solution: fn(&PiecewiseLinearPath, f64) -> f64 = |p, t| p.value_at(t).unwrap()[0].exp();
    let sample = FbmSampler::new(0.4, 1.0, 16).and_then(|s| s.sample(2, 7)).map_err(|e| e.to_string())?;
    let fbm_path = dyadic_interpolation(&sample, 4).map_err(|e| e.to_string())?;
    let scaled = PiecewiseLinearPath::new(
        fbm_path.times().to_vec(),
        fbm_path.values().iter().map(|v| v.iter().map(|x| 0.3 * x).collect()).collect(),
    )
    .map_err(|e| e.to_string())?;
    let benchmarks = vec![
        Benchmark {
            name: "linear, slope 0.01",
            field: linear_field(&[vec![1.0]], 1.0),
            x0: vec![1.0],
            path: PiecewiseLinearPath::linear(&[0.01], 1.0).unwrap(),
            exact: Some(exp_solution),
        },
        Benchmark {
            name: "linear, slope 0.5",
            field: linear_field(&[vec![1.0]], 1.0),
            x0: vec![1.0],
            path: PiecewiseLinearPath::linear(&[0.5], 1.0).unwrap(),
            exact: Some(exp_solution),
        },
        Benchmark {
            name: "linear, zigzag",
            field: linear_field(&[vec![1.0]], 4.0),
            x0: vec![1.0],
            path: PiecewiseLinearPath::new(
                vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
                vec![vec![0.0], vec![0.4], vec![-0.2], vec![0.3]],
            )
            .unwrap(),
            exact: Some(exp_solution),
        },
        Benchmark {
            name: "noncommuting, square",
            field: noncommuting_field(4.0),
            x0: vec![0.5],
            path: PiecewiseLinearPath::new(
                vec![0.0, 0.25, 0.5, 0.75, 1.0],
                vec![vec![0.0, 0.0], vec![0.3, 0.0], vec![0.3, 0.3], vec![0.0, 0.3], vec![0.0, 0.0]],
            )
            .unwrap(),
            exact: None,
        },
        Benchmark {
            name: "noncommuting, fBm",
            field: noncommuting_field(4.0),
            x0: vec![0.5],
            path: scaled,
            exact: None,
        },
    ];
    let mut rows = 0;
    let mut tightest = f64::NEG_INFINITY;
    for b in &benchmarks {
        let (a, t_end) = (b.path.start(), b.path.end());
        let lift = RoughLift::new(b.path.clone(), 2, beta).map_err(|e| e.to_string())?;
        suite.record(&lift.eval(a, t_end).map_err(|e| e.to_string())?);
        let c = holder_estimate(&lift, &dyadic_grid(a, t_end, 8), beta).map_err(|e| e.to_string())?.uniform();
        let mut table = taylor_coefficients(&b.field, &b.x0, order).map_err(|e| e.to_string())?;
        let growth = fit_growth(&mut table, &[0.05, 0.1, 0.15, 0.2]).map_err(|e| e.to_string())?;
        let params = BoundParams::new(beta, growth.gamma, c, growth.m, t_end - a).map_err(|e| e.to_string())?;
        let st = stopping_time(
            &table,
            &b.path,
            2.0,
            b.field.analyticity_radius(),
            30.min(order),
            &dyadic_grid(a, t_end, 6),
            TailMode::Geometric,
        )
        .map_err(|e| e.to_string())?;
        ensure(st.time > a, || format!("{}: stopping time {} not positive", b.name, st.time))?;
        for t in [0.25, 0.5, 0.75, 1.0].map(|f| a + f * (t_end - a)) {
            if st.crossed && t >= st.time {
                continue;
            }
            let (truth, floor) = match b.exact {
                Some(f) => (vec![b.x0[0] * f(&b.path, t)], 0.0),
                None => {
                    let tr = solve(&b.field, &b.x0, &b.path, t, tol).map_err(|e| e.to_string())?;
                    let x = tr.final_state().to_vec();
                    let floor = 10.0 * tol * euclid(&x).max(1.0);
                    (x, floor)
                }
            };
            let eval = taylor_evaluate(&table, &b.path, t, order, &params).map_err(|e| e.to_string())?;
            for n in 1..=order {
                let diff: Vec<f64> = truth.iter().zip(&eval.partial_sums[n]).map(|(x, y)| x - y).collect();
                let measured = euclid(&diff);
                let bound = bound_truncation(&params, n).map_err(|e| e.to_string())?;
                let excess = measured - floor;
                ensure(excess <= 0.0 || excess.ln() <= bound.log_value, || {
                    format!("{} at t = {t}, N = {n}: error {measured:e} above bound e^{}", b.name, bound.log_value)
                })?;
                if measured > 0.0 {
                    tightest = tightest.max(measured.ln() - bound.log_value);
                }
                rows += 1;
            }
        }
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("{rows} (t, N) pairs over {} benchmarks, max ln(error/bound) {tightest:.1}", benchmarks.len()))
}

// --- 8 ---------------------------------------------------------------------

/// Inverse of a monotone increasing piecewise-linear scalar driver.
fn invert(path: &PiecewiseLinearPath, level: f64) -> f64 {
    let (t, v) = (path.times(), path.values());
    for k in 0..t.len() - 1 {
        let (y0, y1) = (v[k][0] - v[0][0], v[k + 1][0] - v[0][0]);
        if level <= y1 {
            return t[k] + (level - y0) / (y1 - y0) * (t[k + 1] - t[k]);
        }
    }
    f64::INFINITY
}

fn stopping_closed_form(suite: &mut Suite) -> Result<String, String> {
    let drivers = [
        PiecewiseLinearPath::linear(&[2.0], 1.0).unwrap(),
        PiecewiseLinearPath::new(vec![0.0, 0.3, 0.6, 1.0], vec![vec![0.0], vec![0.2], vec![0.9], vec![1.5]]).unwrap(),
    ];
    let mut worst = 0.0f64;
    let mut runs = 0;
    for path in &drivers {
        for (a, x0, c, r) in [(1.0, 1.0, 1.0, 2.0), (0.7, 2.0, 3.0, 1.5), (1.5, 0.5, 0.8, 3.0)] {
            let field = linear_field(&[vec![a]], c);
            let table = taylor_coefficients(&field, &[x0], 30).map_err(|e| e.to_string())?;
            let grid: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
            let st = stopping_time(&table, path, r, c, 30, &grid, TailMode::Geometric).map_err(|e| e.to_string())?;
            let exact = invert(path, (1.0 + c / (2.0 * x0)).ln() / (r * a));
            ensure(st.time > 0.0, || "stopping time not positive".into())?;
            ensure(st.crossed == (exact < 1.0), || format!("crossing flag wrong for exact time {exact}"))?;
            let expect = exact.min(1.0);
            let err = (st.time - expect).abs();
            worst = worst.max(err);
            ensure(err <= 1e-6, || format!("a = {a}, x0 = {x0}, C = {c}, r = {r}: {} vs {expect}", st.time))?;
            runs += 1;
        }
    }
    // positivity on random drivers with a nonlinear field
    let sampler = FbmSampler::new(0.4, 1.0, 64).map_err(|e| e.to_string())?;
    let field = noncommuting_field(1.0);
    let table = taylor_coefficients(&field, &[0.5], 12).map_err(|e| e.to_string())?;
    for seed in 0..20 {
        let path = sampler.sample(2, seed).and_then(|s| dyadic_interpolation(&s, 6)).map_err(|e| e.to_string())?;
        suite.record(&path_signature(&path, 0.0, 1.0, 2).map_err(|e| e.to_string())?);
        let st = stopping_time(&table, &path, 2.0, 1.0, 12, &dyadic_grid(0.0, 1.0, 5), TailMode::Geometric)
            .map_err(|e| e.to_string())?;
        ensure(st.time > 0.0, || format!("seed {seed}: stopping time {}", st.time))?;
        runs += 1;
    }
    Ok(format!("{runs} runs all positive, closed-form max error {worst:.2e} (T = 1)"))
}

// --- 9 ---------------------------------------------------------------------

fn word_order(suite: &mut Suite) -> Result<String, String> {
    let field = noncommuting_field(1.0);
    let table = taylor_coefficients(&field, &[0.0], 4).map_err(|e| e.to_string())?;
    let p12 = table.coeff(&Word::new(vec![1, 2], 2).unwrap()).unwrap()[0];
    let p21 = table.coeff(&Word::new(vec![2, 1], 2).unwrap()).unwrap()[0];
    ensure(p12 == 1.0 && p21 == 0.0, || format!("P(1,2) = {p12}, P(2,1) = {p21}"))?;
    let path = PiecewiseLinearPath::new(
        vec![0.0, 0.4, 0.7, 1.0],
        vec![vec![0.0, 0.0], vec![0.8, -0.3], vec![0.5, 0.6], vec![1.1, 0.9]],
    )
    .unwrap();
    suite.record(&path_signature(&path, 0.0, 1.0, 2).map_err(|e| e.to_string())?);
    let mut worst = 0.0f64;
    for x0 in [0.0, 0.7] {
        for n in 1..=4 {
            let check = picard_expansion_check(&field, &[x0], &path, n).map_err(|e| e.to_string())?;
            worst = worst.max(check.max);
        }
    }
    ensure(worst <= 1e-4, || format!("discrepancy {worst:e}"))?;
    Ok(format!("P(1,2) = 1, P(2,1) = 0, quadrature discrepancy {worst:.2e}"))
}

// --- 10 --------------------------------------------------------------------

fn tail_shape(_: &mut Suite) -> Result<String, String> {
    let k = tail_constant_estimate(0.4, 0.1, &[0.2, 0.5, 1.0], 1..=30).map_err(|e| e.to_string())?;
    ensure(k.is_finite() && k > 0.0, || format!("empirical constant {k}"))?;
    let mut points = 0;
    for x in [0.0, 0.2, 0.5, 1.0, 2.0, 5.0] {
        for e in [0.1, 0.3, 0.5, 0.9] {
            let s = ml_sum(x, e).map_err(|e| e.to_string())?;
            ensure(s.within_bound(), || {
                format!("ml_sum({x}, {e}) = e^{} above e^{}", s.log_value, s.log_closed_form_bound)
            })?;
            points += 1;
        }
    }
    Ok(format!("empirical tail constant {k:.4}, {points} series points within bound"))
}

// --- 11 --------------------------------------------------------------------

fn refinement(suite: &mut Suite) -> Result<String, String> {
    let start = Instant::now();
    let beta = 0.35;
    let sampler = FbmSampler::new(0.4, 1.0, 1024).map_err(|e| e.to_string())?;
    let field = noncommuting_field(1.0);
    let x0 = [0.5];
    let levels = [4u32, 6, 8];
    let (mut bad_dist, mut bad_gaps) = (Vec::new(), Vec::new());
    for seed in 0..20 {
        let sample = sampler.sample(2, seed).map_err(|e| e.to_string())?;
        let finest = lift_fbm(&sample, 10, beta).map_err(|e| e.to_string())?;
        let target = solve(&field, &x0, finest.path(), 1.0, 1e-11).map_err(|e| e.to_string())?.final_state()[0];
        let mut dist = Vec::new();
        let mut gaps = Vec::new();
        for &m in &levels {
            let lift = lift_fbm(&sample, m, beta).map_err(|e| e.to_string())?;
            suite.record(&lift.eval(0.0, 1.0).map_err(|e| e.to_string())?);
            dist.push(p_variation_distance(&lift, &finest, 10).map_err(|e| e.to_string())?);
            let x = solve(&field, &x0, lift.path(), 1.0, 1e-11).map_err(|e| e.to_string())?.final_state()[0];
            gaps.push((x - target).abs());
        }
        let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
        if !decreasing(&dist) {
            bad_dist.push(seed);
        }
        if !decreasing(&gaps) {
            bad_gaps.push(seed);
        }
    }
    within(start, Duration::from_secs(120))?;
    ensure(bad_dist.is_empty() && bad_gaps.is_empty(), || {
        format!("non-monotone p-variation distances on seeds {bad_dist:?}, solution gaps on seeds {bad_gaps:?}")
    })?;
    Ok("20 seeds, distances and solution gaps decrease over m = 4, 6, 8".into())
}

// --- 12 --------------------------------------------------------------------

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn determinism(_: &mut Suite) -> Result<String, String> {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    // field documents live next to the experiment configs; only the latter parse
    let mut entries: Vec<(PathBuf, ExperimentConfig)> = std::fs::read_dir(&configs)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter_map(|p| ExperimentConfig::load(&p).ok().map(|c| (p, c)))
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (config, parsed) in &entries {
        let kind = parsed.kind.name();
        let stem = config.file_stem().unwrap().to_string_lossy().into_owned();
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = scratch.path().join(format!("{stem}-{rep}"));
            let status = Command::new(env!("CARGO_BIN_EXE_rough-taylor"))
                .args([kind, "--quiet", "--config"])
                .arg(config)
                .arg("--out")
                .arg(&out)
                .status()
                .map_err(|e| e.to_string())?;
            ensure(status.success(), || format!("{stem}: exit status {status}"))?;
            outputs.push(files(&out));
        }
        ensure(outputs[0] == outputs[1], || format!("{stem}: outputs differ between runs"))?;
        compared += outputs[0].len();
    }
    ensure(entries.len() >= 6, || format!("only {} experiment configs found", entries.len()))?;
    Ok(format!("{} configs, {compared} files byte-identical across reruns", entries.len()))
}

fn main() {
    let checks: [(usize, &str, Check); 12] = [
        (1, "Chen identity", chen_identity),
        (2, "Riemann oracle", riemann_oracle),
        (3, "geometric symmetry", geometric_symmetry),
        (4, "fBm covariance law", fbm_law),
        (5, "factorial decay", factorial_decay),
        (6, "linear closed form", linear_closed_form),
        (7, "error-bound dominance", dominance),
        (8, "stopping-time closed form", stopping_closed_form),
        (9, "word-order convention", word_order),
        (10, "tail lemma shape", tail_shape),
        (11, "refinement convergence", refinement),
        (12, "determinism", determinism),
    ];
    let mut suite = Suite::default();
    let mut results = Vec::new();
    // symmetry is judged after every other check has contributed its lifts
    let order = [1, 2, 4, 5, 6, 7, 8, 9, 10, 11, 12, 3];
    for id in order {
        let (_, name, check) = checks[id - 1];
        let t = Instant::now();
        let outcome = check(&mut suite);
        results.push((id, name, outcome, t.elapsed()));
    }
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (id, name, outcome, took) in &results {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {id:>2} {tag}  {name}: {detail} [{:.2} s]", took.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
