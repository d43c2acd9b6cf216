//! Polynomial vector fields and their Taylor coefficients.
//!
//! A field `V_i` acts on functions as the first-order operator
//! `V_i f = Σ_l V_i^l ∂_l f`. For a word `I = (i_1, ..., i_k)` the Taylor
//! coefficient is `P^j_I = (V_{i_1} ⋯ V_{i_k} π^j)(x_0)`: the last letter acts
//! first, and `P_I` pairs with the iterated integral `∫ dy^{i_1}_{t_1} ⋯ dy^{i_k}_{t_k}`
//! over `t_1 < ⋯ < t_k`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::csv::{fmt_f64, row};
use crate::error::{Error, Result};
use crate::poly::{MultiPoly, Term};
use crate::special::ln_gamma;
use crate::tensor::Word;

/// Largest number of words of maximal length a table may hold.
pub const MAX_TABLE_WORDS: usize = 1_000_000;

/// `d` polynomial vector fields on `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyVectorField {
    n: usize,
    /// `fields[i][l]` is component `l` of `V_{i+1}`.
    fields: Vec<Vec<MultiPoly>>,
    analyticity_radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FieldDocument {
    n: usize,
    d: usize,
    fields: Vec<Vec<Vec<Term>>>,
    #[serde(default)]
    analyticity_radius: Option<f64>,
}

impl PolyVectorField {
    pub fn new(n: usize, fields: Vec<Vec<MultiPoly>>, analyticity_radius: f64) -> Result<Self> {
        if n == 0 || fields.is_empty() {
            return Err(Error::InvalidArgument("need n ≥ 1 and at least one field".into()));
        }
        for (i, f) in fields.iter().enumerate() {
            if f.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "field {} has {} components, expected {n}",
                    i + 1,
                    f.len()
                )));
            }
            if f.iter().any(|p| p.nvars() != n) {
                return Err(Error::DimensionMismatch(format!("field {} uses the wrong variable count", i + 1)));
            }
        }
        if !(analyticity_radius > 0.0) {
            return Err(Error::InvalidArgument("analyticity radius must be positive".into()));
        }
        Ok(PolyVectorField { n, fields, analyticity_radius })
    }

    /// Linear field `x ↦ A x` for a single driver (`d = 1`).
    pub fn linear(a: &[Vec<f64>], analyticity_radius: f64) -> Result<Self> {
        let n = a.len();
        let comps = a
            .iter()
            .map(|row| {
                if row.len() != n {
                    return Err(Error::DimensionMismatch("matrix must be square".into()));
                }
                Ok(row
                    .iter()
                    .enumerate()
                    .fold(MultiPoly::zero(n), |acc, (l, &c)| acc.add(&MultiPoly::var(n, l).scale(c))))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, vec![comps], analyticity_radius)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FieldDocument = serde_json::from_str(text)?;
        if doc.fields.len() != doc.d {
            return Err(Error::DimensionMismatch(format!(
                "document declares d = {} but lists {} fields",
                doc.d,
                doc.fields.len()
            )));
        }
        let fields = doc
            .fields
            .iter()
            .map(|f| f.iter().map(|terms| MultiPoly::from_terms(doc.n, terms)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        Self::new(doc.n, fields, doc.analyticity_radius.unwrap_or(1.0))
    }

    pub fn to_json(&self) -> String {
        let doc = FieldDocument {
            n: self.n,
            d: self.d(),
            fields: self.fields.iter().map(|f| f.iter().map(MultiPoly::to_terms).collect()).collect(),
            analyticity_radius: Some(self.analyticity_radius),
        };
        serde_json::to_string_pretty(&doc).expect("field documents always serialise")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.fields.len()
    }

    pub fn analyticity_radius(&self) -> f64 {
        self.analyticity_radius
    }

    /// Components of `V_i`, 1-based `i`.
    pub fn field(&self, i: usize) -> &[MultiPoly] {
        &self.fields[i - 1]
    }

    /// Every field multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        PolyVectorField {
            n: self.n,
            fields: self.fields.iter().map(|f| f.iter().map(|p| p.scale(lambda)).collect()).collect(),
            analyticity_radius: self.analyticity_radius,
        }
    }

    /// `Σ_i V_i(x) u_i`, the velocity along a driver with derivative `u`.
    pub fn drift(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (field, &ui) in self.fields.iter().zip(u) {
            if ui == 0.0 {
                continue;
            }
            for (o, comp) in out.iter_mut().zip(field) {
                *o += ui * comp.eval(x);
            }
        }
    }
}

/// `V f = Σ_l V^l ∂_l f` for one field given by its components.
pub fn apply_field(field: &[MultiPoly], f: &MultiPoly) -> MultiPoly {
    field.iter().enumerate().fold(MultiPoly::zero(f.nvars()), |acc, (l, vl)| {
        let df = f.derivative(l);
        if df.is_zero() {
            acc
        } else {
            acc.add(&vl.mul(&df))
        }
    })
}

/// Taylor coefficients `P_I` for all words of length `1..=max_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorTable {
    x0: Vec<f64>,
    d: usize,
    max_len: usize,
    /// `levels[k-1][offset]` is the vector `P_I` for the word at `offset`.
    levels: Vec<Vec<Vec<f64>>>,
    growth: Option<Growth>,
}

/// Parameters `(M, γ)` of the growth criterion `‖P_I‖ ≤ Γ(γ|I|) M^{|I|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Growth {
    pub m: f64,
    pub gamma: f64,
}

impl TaylorTable {
    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn n(&self) -> usize {
        self.x0.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn growth(&self) -> Option<Growth> {
        self.growth
    }

    /// All `P_I` with `|I| = k`, in word-offset order.
    pub fn level(&self, k: usize) -> &[Vec<f64>] {
        &self.levels[k - 1]
    }

    pub fn coeff(&self, word: &Word) -> Option<&[f64]> {
        if word.len() == 0 || word.len() > self.max_len {
            return None;
        }
        self.levels[word.len() - 1].get(word.offset(self.d)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Exports `word,j,value` rows; words are written as `(i1 i2 ...)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"word,j,value\n")?;
        for (k, level) in self.levels.iter().enumerate() {
            for (offset, p) in level.iter().enumerate() {
                let word = Word::from_offset(offset, k + 1, self.d).to_string();
                for (j, v) in p.iter().enumerate() {
                    w.write_all(row([word.clone(), (j + 1).to_string(), fmt_f64(*v)]).as_bytes())?;
                }
            }
        }
        Ok(())
    }
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Builds the table by suffix sharing: the polynomials for all words of
/// length `k − 1` are kept and each is extended on the left by every letter.
pub fn taylor_coefficients(field: &PolyVectorField, x0: &[f64], max_len: usize) -> Result<TaylorTable> {
    if max_len == 0 {
        return Err(Error::InvalidArgument("maximal word length must be at least 1".into()));
    }
    if x0.len() != field.n() {
        return Err(Error::DimensionMismatch(format!("x0 has length {}, fields live on R^{}", x0.len(), field.n())));
    }
    let d = field.d();
    let words = (d as f64).powi(max_len as i32);
    if words > MAX_TABLE_WORDS as f64 {
        return Err(Error::InvalidArgument(format!(
            "d^N = {words} exceeds the table guard {MAX_TABLE_WORDS}; lower N"
        )));
    }
    let n = field.n();
    // polys[offset][j] for the current word length
    let mut polys: Vec<Vec<MultiPoly>> = (1..=d).map(|i| field.field(i).to_vec()).collect();
    let mut levels = Vec::with_capacity(max_len);
    for k in 1..=max_len {
        levels.push(polys.iter().map(|comps| comps.iter().map(|p| p.eval(x0)).collect()).collect::<Vec<Vec<f64>>>());
        if k == max_len {
            break;
        }
        let width = polys.len();
        let mut next = Vec::with_capacity(width * d);
        for i in 1..=d {
            let v = field.field(i);
            for comps in &polys {
                next.push(comps.iter().map(|p| apply_field(v, p)).collect());
            }
        }
        debug_assert_eq!(next.len(), width * d);
        polys = next;
    }
    debug_assert!(levels.iter().all(|l| l.iter().all(|p| p.len() == n)));
    Ok(TaylorTable { x0: x0.to_vec(), d, max_len, levels, growth: None })
}

/// Chooses `γ` from the grid minimising `M(γ) = max_I (‖P_I‖/Γ(γ|I|))^{1/|I|}`
/// and stores the pair in the table. The criterion is guaranteed for the
/// stored words only.
pub fn fit_growth(table: &mut TaylorTable, gamma_grid: &[f64]) -> Result<Growth> {
    if gamma_grid.is_empty() {
        return Err(Error::InvalidArgument("gamma grid is empty".into()));
    }
    if table.is_empty() {
        return Err(Error::InvalidArgument("table is empty".into()));
    }
    if let Some(g) = gamma_grid.iter().find(|&&g| !(g > 0.0)) {
        return Err(Error::InvalidArgument(format!("gamma candidates must be positive, got {g}")));
    }
    let log_norms: Vec<(usize, f64)> = table
        .levels
        .iter()
        .enumerate()
        .flat_map(|(k, level)| level.iter().map(move |p| (k + 1, euclid(p).ln())))
        .filter(|(_, ln)| *ln > f64::NEG_INFINITY)
        .collect();
    let mut best: Option<Growth> = None;
    for &gamma in gamma_grid {
        let log_m = log_norms
            .iter()
            .map(|&(k, ln)| (ln - ln_gamma(gamma * k as f64)) / k as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        let m = log_m.exp();
        if best.is_none_or(|b| m < b.m) {
            best = Some(Growth { m, gamma });
        }
    }
    let growth = best.unwrap();
    table.growth = Some(growth);
    Ok(growth)
}

/// Whether `‖P_I‖ ≤ Γ(γ|I|) M^{|I|}` holds for every stored word (with a
/// relative slack of `1e-12` for rounding).
pub fn growth_holds(table: &TaylorTable, growth: Growth) -> bool {
    table.levels.iter().enumerate().all(|(k, level)| {
        let k = (k + 1) as f64;
        let log_cap = ln_gamma(growth.gamma * k) + k * growth.m.ln();
        level.iter().all(|p| {
            let nrm = euclid(p);
            nrm == 0.0 || nrm.ln() <= log_cap + 1e-12
        })
    })
}
