//! The pipelines behind each experiment kind.

use std::io::BufReader;
use std::path::Path;

use serde_json::{json, Value};

use rough_taylor::bounds::{log_level_bound, BoundParams};
use rough_taylor::csv::{fmt_f64, row};
use rough_taylor::fbm::{dyadic_interpolation, estimate_garsia, lift_fbm, max_level, FbmSampler, GarsiaConfig};
use rough_taylor::ode::solve;
use rough_taylor::signature::{
    dyadic_grid, geometric_defect, holder_estimate, levy_area, path_signature, PiecewiseLinearPath, RoughLift,
};
use rough_taylor::taylor::{bound_truncation, stopping_time, taylor_evaluate, TailMode, DEFAULT_N_CAP};
use rough_taylor::vector_fields::{fit_growth, taylor_coefficients, PolyVectorField};
use rough_taylor::{Error, Word};

use crate::config::{ExperimentConfig, Kind, Parameters};
use crate::report::{Outputs, RunError};
use crate::CliError;

pub const DEFAULT_HORIZON: f64 = 1.0;
pub const DEFAULT_DEPTH: u32 = 8;
pub const DEFAULT_ORDER: usize = 12;
pub const DEFAULT_R: f64 = 2.0;
pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_GRID_POINTS: usize = 64;
pub const DEFAULT_LEVELS: usize = 6;
pub const DEFAULT_GAMMA_GRID: [f64; 4] = [0.05, 0.1, 0.15, 0.2];

/// Accumulates everything a kind produces.
pub struct Run<'a> {
    pub config: &'a ExperimentConfig,
    pub base_dir: &'a Path,
    pub out: Outputs,
}

fn seed_tag(seed: Option<u64>) -> String {
    seed.map(|s| format!("_seed{s}")).unwrap_or_default()
}

fn seed_field(seed: Option<u64>) -> String {
    seed.map(|s| s.to_string()).unwrap_or_default()
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sorted_seeds(p: &Parameters) -> Vec<u64> {
    let mut seeds = p.seeds.clone().unwrap_or_default();
    seeds.sort_unstable();
    seeds.dedup();
    seeds
}

impl Run<'_> {
    fn params(&self) -> &Parameters {
        &self.config.parameters
    }

    fn horizon(&self) -> f64 {
        self.params().horizon.unwrap_or(DEFAULT_HORIZON)
    }

    fn read(&self, name: &str) -> Result<String, CliError> {
        let path = self.base_dir.join(name);
        std::fs::read_to_string(&path).map_err(|source| CliError::Io { path, source })
    }

    fn field(&self) -> Result<PolyVectorField, CliError> {
        let p = self.params();
        let text = match (&p.field, &p.field_file) {
            (Some(v), _) => v.to_string(),
            (None, Some(f)) => self.read(f)?,
            (None, None) => unreachable!("validated"),
        };
        Ok(PolyVectorField::from_json(&text)?)
    }

    fn sampler(&self) -> Result<FbmSampler, CliError> {
        let p = self.params();
        Ok(FbmSampler::new(p.hurst.unwrap(), self.horizon(), p.n.unwrap())?)
    }

    fn level(&self, n: usize) -> u32 {
        self.params().m.unwrap_or(n.trailing_zeros())
    }

    /// Driver paths keyed by seed (`None` for a deterministic driver).
    fn drivers(&self, d: usize) -> Result<Vec<(Option<u64>, Result<PiecewiseLinearPath, Error>)>, CliError> {
        let p = self.params();
        if let Some(file) = &p.driver_file {
            let path = self.base_dir.join(file);
            let f = std::fs::File::open(&path).map_err(|source| CliError::Io { path, source })?;
            return Ok(vec![(None, PiecewiseLinearPath::read_csv(BufReader::new(f)))]);
        }
        if let Some(slope) = &p.slope {
            return Ok(vec![(None, PiecewiseLinearPath::linear(slope, self.horizon()))]);
        }
        let sampler = self.sampler()?;
        let m = self.level(p.n.unwrap());
        Ok(sorted_seeds(p)
            .into_iter()
            .map(|seed| (Some(seed), sampler.sample(d, seed).and_then(|s| dyadic_interpolation(&s, m))))
            .collect())
    }

    fn fail(&mut self, seed: Option<u64>, e: impl ToString) {
        self.out.errors.push(RunError { seed, message: e.to_string() });
    }

    pub fn execute(&mut self) -> Result<(), CliError> {
        match self.config.kind {
            Kind::FbmSample => self.fbm_sample(),
            Kind::Signature => self.signature(),
            Kind::TaylorConverge => self.taylor_converge(),
            Kind::BoundsCheck => self.bounds_check(),
            Kind::Garsia => self.garsia(),
            Kind::StoppingTime => self.stopping_time(),
        }
    }

    fn fbm_sample(&mut self) -> Result<(), CliError> {
        let p = self.params().clone();
        let sampler = self.sampler()?;
        let d = p.d.unwrap_or(1);
        let (mut sum_sq, mut count) = (0.0, 0usize);
        for seed in sorted_seeds(&p) {
            let sample = match sampler.sample(d, seed) {
                Ok(s) => s,
                Err(e) => {
                    self.fail(Some(seed), e);
                    continue;
                }
            };
            let mut csv = Vec::new();
            sample.write_csv(&mut csv)?;
            self.out.file(format!("fbm_seed{seed}.csv"), csv);
            self.out.file(format!("fbm_seed{seed}.json"), (sample.sidecar_json() + "\n").into_bytes());
            let end: Vec<f64> = (0..d).map(|c| *sample.component(c).last().unwrap()).collect();
            sum_sq += end.iter().map(|x| x * x).sum::<f64>();
            count += d;
            self.out.records.push(json!({ "seed": seed, "final": end }));
        }
        if count > 0 {
            self.out.aggregate("mean_final_square", sum_sq / count as f64);
            self.out.aggregate("expected_final_square", self.horizon().powf(2.0 * p.hurst.unwrap()));
        }
        Ok(())
    }

    fn signature(&mut self) -> Result<(), CliError> {
        let p = self.params().clone();
        let degree = p.order.unwrap();
        let d = p.slope.as_ref().map_or(p.d.unwrap_or(2), Vec::len);
        let mut max_defect = 0.0f64;
        for (seed, path) in self.drivers(d)? {
            let sig = match path.and_then(|path| path_signature(&path, path.start(), path.end(), degree)) {
                Ok(s) => s,
                Err(e) => {
                    self.fail(seed, e);
                    continue;
                }
            };
            let mut csv = b"word,value\n".to_vec();
            for k in 1..=degree {
                for (offset, v) in sig.level(k).iter().enumerate() {
                    let word = Word::from_offset(offset, k, sig.dim()).to_string();
                    csv.extend(row([word, fmt_f64(*v)]).into_bytes());
                }
            }
            self.out.file(format!("signature{}.csv", seed_tag(seed)), csv);
            let defect = if degree >= 2 { geometric_defect(&sig) } else { 0.0 };
            let scale = 1.0 + sig.level_norm(1).powi(2);
            if defect > 1e-12 * scale {
                self.out.violations += 1;
            }
            max_defect = max_defect.max(defect);
            let levels: Vec<f64> = (1..=degree).map(|k| sig.level_norm(k)).collect();
            let mut rec = json!({ "seed": seed, "level_norms": levels, "geometric_defect": defect });
            if degree >= 2 && sig.dim() >= 2 {
                rec["levy_area_12"] = json!(levy_area(&sig, 1, 2));
            }
            self.out.records.push(rec);
        }
        self.out.aggregate("max_geometric_defect", max_defect);
        Ok(())
    }

    fn taylor_converge(&mut self) -> Result<(), CliError> {
        let p = self.params().clone();
        let field = self.field()?;
        let x0 = p.x0.clone().unwrap();
        let beta = p.beta.unwrap();
        let order = p.order.unwrap_or(DEFAULT_ORDER);
        let tol = p.tol.unwrap_or(DEFAULT_TOL);
        let depth = p.depth.unwrap_or(DEFAULT_DEPTH);
        let gammas = match (&p.gamma, &p.gamma_grid) {
            (Some(g), _) => vec![*g],
            (None, Some(grid)) => grid.clone(),
            (None, None) => DEFAULT_GAMMA_GRID.iter().copied().filter(|&g| g < beta).collect(),
        };
        let mut table = taylor_coefficients(&field, &x0, order)?;
        let growth = fit_growth(&mut table, &gammas)?;
        let mut conv = b"seed,t,N,measured_error,bound,log_bound\n".to_vec();
        let mut eval_csv = b"seed,t,N,j,partial_sum,term_norm,error_bound\n".to_vec();
        let mut max_ratio = f64::NEG_INFINITY;
        let mut rows = 0usize;
        for (seed, path) in self.drivers(field.d())? {
            let outcome = (|| -> Result<Value, Error> {
                let path = path?;
                let (a, b) = (path.start(), path.end());
                let lift = RoughLift::new(path.clone(), 2, beta)?;
                let c = holder_estimate(&lift, &dyadic_grid(a, b, depth), beta)?.uniform();
                let params = BoundParams::new(beta, growth.gamma, c, growth.m, b - a)?;
                let grid = dyadic_grid(a, b, 6);
                let st = stopping_time(
                    &table,
                    &path,
                    p.r.unwrap_or(DEFAULT_R),
                    field.analyticity_radius(),
                    p.n_cap.unwrap_or(DEFAULT_N_CAP),
                    &grid,
                    TailMode::Geometric,
                )?;
                let times: Vec<f64> = match &p.times {
                    Some(ts) => ts.clone(),
                    None => [0.25, 0.5, 0.75, 1.0].iter().map(|f| a + f * (b - a)).collect(),
                };
                let inside: Vec<f64> =
                    times.into_iter().filter(|&t| t > a && (t < st.time || (!st.crossed && t <= st.time))).collect();
                let bounds = (1..=order).map(|n| bound_truncation(&params, n)).collect::<Result<Vec<_>, _>>()?;
                let mut local_violations = 0usize;
                for &t in &inside {
                    let reference = solve(&field, &x0, &path, t, tol)?;
                    let truth = reference.final_state();
                    let floor = 10.0 * tol * euclid(truth).max(1.0);
                    let eval = taylor_evaluate(&table, &path, t, order, &params)?;
                    for line in csv_lines(&eval)? {
                        eval_csv.extend(format!("{},{line}", seed_field(seed)).into_bytes());
                    }
                    for (n, bound) in (1..=order).zip(&bounds) {
                        let diff: Vec<f64> = truth.iter().zip(&eval.partial_sums[n]).map(|(x, y)| x - y).collect();
                        let measured = euclid(&diff);
                        // the reference is only trusted down to its own tolerance
                        let excess = measured - floor;
                        if excess > 0.0 && excess.ln() > bound.log_value {
                            local_violations += 1;
                        }
                        max_ratio = max_ratio.max(measured.ln() - bound.log_value);
                        rows += 1;
                        conv.extend(
                            row([
                                seed_field(seed),
                                fmt_f64(t),
                                n.to_string(),
                                fmt_f64(measured),
                                fmt_f64(bound.value),
                                fmt_f64(bound.log_value),
                            ])
                            .into_bytes(),
                        );
                    }
                }
                self.out.violations += local_violations;
                Ok(json!({
                    "seed": seed,
                    "C": c,
                    "K": params.k,
                    "M": growth.m,
                    "gamma": growth.gamma,
                    "x": params.growth_ratio(),
                    "stopping_time": st.time,
                    "crossed": st.crossed,
                    "times": inside,
                    "violations": local_violations,
                }))
            })();
            match outcome {
                Ok(rec) => self.out.records.push(rec),
                Err(e) => self.fail(seed, e),
            }
        }
        self.out.file("taylor_converge.csv".into(), conv);
        self.out.file("taylor_eval.csv".into(), eval_csv);
        self.out.aggregate("rows", rows as f64);
        self.out.aggregate("max_log_error_over_bound", max_ratio);
        Ok(())
    }

    fn bounds_check(&mut self) -> Result<(), CliError> {
        let p = self.params().clone();
        let sampler = self.sampler()?;
        let beta = p.beta.unwrap();
        let levels = p.order.unwrap_or(DEFAULT_LEVELS);
        let depth = p.depth.unwrap_or(DEFAULT_DEPTH);
        let d = p.d.unwrap_or(2);
        let t_end = self.horizon();
        let m_param = p.m;
        let mut csv = b"seed,k,measured,bound,log_bound\n".to_vec();
        let mut worst = f64::NEG_INFINITY;
        for seed in sorted_seeds(&p) {
            let outcome = (|| -> Result<Value, Error> {
                let sample = sampler.sample(d, seed)?;
                let m = m_param.unwrap_or(max_level(&sample)?);
                let lift = lift_fbm(&sample, m, beta)?;
                let c = holder_estimate(&lift, &dyadic_grid(0.0, t_end, depth), beta)?.uniform();
                // γ and M do not enter the level bound
                let params = BoundParams::new(beta, 0.5 * beta, c, 1.0, t_end)?;
                let sig = path_signature(lift.path(), 0.0, t_end, levels)?;
                let mut local = 0usize;
                let mut local_worst = f64::NEG_INFINITY;
                for k in 1..=levels {
                    let measured = sig.level_norm(k);
                    let log_bound = log_level_bound(k, &params);
                    if measured.ln() > log_bound {
                        local += 1;
                    }
                    local_worst = local_worst.max(measured.ln() - log_bound);
                    csv.extend(
                        row([
                            seed.to_string(),
                            k.to_string(),
                            fmt_f64(measured),
                            fmt_f64(log_bound.exp()),
                            fmt_f64(log_bound),
                        ])
                        .into_bytes(),
                    );
                }
                self.out.violations += local;
                worst = worst.max(local_worst);
                Ok(json!({ "seed": seed, "C": c, "K": params.k, "violations": local, "max_log_ratio": local_worst }))
            })();
            match outcome {
                Ok(rec) => self.out.records.push(rec),
                Err(e) => self.fail(Some(seed), e),
            }
        }
        self.out.file("bounds_check.csv".into(), csv);
        self.out.aggregate("max_log_measured_over_bound", worst);
        Ok(())
    }

    fn garsia(&mut self) -> Result<(), CliError> {
        let p = self.params().clone();
        let sampler = self.sampler()?;
        let cfg = GarsiaConfig {
            beta: p.beta.unwrap(),
            p: p.p.unwrap(),
            depth: p.depth.unwrap_or(6),
            hurst: p.hurst.unwrap(),
        };
        let d = p.d.unwrap_or(2);
        let mut csv = b"seed,U,V,xi,eta,C\n".to_vec();
        let mut xis = Vec::new();
        let mut cs = Vec::new();
        for seed in sorted_seeds(&p) {
            let outcome = sampler.sample(d, seed).and_then(|sample| {
                let m = self.level(sample.meta().n);
                estimate_garsia(&lift_fbm(&sample, m, cfg.beta)?, &cfg)
            });
            let g = match outcome {
                Ok(g) => g,
                Err(e) => {
                    self.fail(Some(seed), e);
                    continue;
                }
            };
            if g.v_gamma_p > g.eta * g.eta * (1.0 + 1e-12) {
                self.out.violations += 1;
            }
            xis.push(g.xi);
            cs.push(g.c_beta_t);
            csv.extend(
                row([
                    seed.to_string(),
                    fmt_f64(g.u_gamma_p),
                    fmt_f64(g.v_gamma_p),
                    fmt_f64(g.xi),
                    fmt_f64(g.eta),
                    fmt_f64(g.c_beta_t),
                ])
                .into_bytes(),
            );
            self.out.records.push(json!({ "seed": seed, "estimate": g }));
        }
        self.out.file("garsia.csv".into(), csv);
        if !xis.is_empty() {
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            self.out.aggregate("mean_xi", mean(&xis));
            self.out.aggregate("max_xi", xis.iter().copied().fold(0.0, f64::max));
            self.out.aggregate("mean_xi_p", mean(&xis.iter().map(|x| x.powf(cfg.p)).collect::<Vec<_>>()));
            self.out.aggregate("mean_C", mean(&cs));
        }
        Ok(())
    }

    fn stopping_time(&mut self) -> Result<(), CliError> {
        let p = self.params().clone();
        let field = self.field()?;
        let n_cap = p.n_cap.unwrap_or(DEFAULT_N_CAP);
        let table = taylor_coefficients(&field, p.x0.as_ref().unwrap(), n_cap)?;
        let mut csv = b"seed,time,crossed\n".to_vec();
        let mut times = Vec::new();
        for (seed, path) in self.drivers(field.d())? {
            let outcome = path.and_then(|path| {
                let (a, b) = (path.start(), path.end());
                let k = p.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
                let grid: Vec<f64> =
                    (0..=k).map(|i| if i == k { b } else { a + (b - a) * i as f64 / k as f64 }).collect();
                stopping_time(
                    &table,
                    &path,
                    p.r.unwrap_or(DEFAULT_R),
                    field.analyticity_radius(),
                    n_cap,
                    &grid,
                    TailMode::Geometric,
                )
                .map(|st| (st, a))
            });
            let (st, start) = match outcome {
                Ok(v) => v,
                Err(e) => {
                    self.fail(seed, e);
                    continue;
                }
            };
            if !(st.time > start) {
                self.out.violations += 1;
            }
            times.push(st.time);
            csv.extend(row([seed_field(seed), fmt_f64(st.time), st.crossed.to_string()]).into_bytes());
            self.out.records.push(json!({ "seed": seed, "time": st.time, "crossed": st.crossed }));
        }
        self.out.file("stopping_time.csv".into(), csv);
        if !times.is_empty() {
            self.out.aggregate("min_time", times.iter().copied().fold(f64::INFINITY, f64::min));
            self.out.aggregate("mean_time", times.iter().sum::<f64>() / times.len() as f64);
        }
        Ok(())
    }
}

fn csv_lines(eval: &rough_taylor::taylor::TaylorEvaluation) -> Result<Vec<String>, Error> {
    let mut buf = Vec::new();
    eval.write_csv(&mut buf, false)?;
    Ok(String::from_utf8(buf).expect("csv is ascii").lines().map(|l| format!("{l}\n")).collect())
}
