//! Truncated tensor algebra `T^N(R^d)`.
//!
//! An element is stored as `N + 1` dense blocks; block `k` holds the `d^k`
//! coefficients of the words of length `k`. Words map to offsets by reading
//! their letters as base-`d` digits, first letter most significant, so the
//! coefficient of `e_{i_1} ⊗ ... ⊗ e_{i_k}` lives at
//! `Σ (i_j - 1) d^{k-j}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite sequence of letters drawn from `{1, ..., d}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(Vec<usize>);

impl Word {
    /// Builds a word, checking every letter lies in `1..=dim`.
    pub fn new(letters: Vec<usize>, dim: usize) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidArgument("words must be non-empty".into()));
        }
        if let Some(bad) = letters.iter().find(|&&l| l == 0 || l > dim) {
            return Err(Error::InvalidArgument(format!("letter {bad} outside alphabet 1..={dim}")));
        }
        Ok(Word(letters))
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Offset of this word inside its level block.
    pub fn offset(&self, dim: usize) -> usize {
        self.0.iter().fold(0, |acc, &l| acc * dim + (l - 1))
    }

    /// Inverse of [`Word::offset`].
    pub fn from_offset(mut offset: usize, len: usize, dim: usize) -> Self {
        let mut letters = vec![0; len];
        for slot in letters.iter_mut().rev() {
            *slot = offset % dim + 1;
            offset /= dim;
        }
        Word(letters)
    }

    /// All words of length `len` in offset order.
    pub fn all(len: usize, dim: usize) -> impl Iterator<Item = Word> {
        (0..dim.pow(len as u32)).map(move |o| Word::from_offset(o, len, dim))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str(")")
    }
}

/// Per-level ℓ1 norms of a tensor together with their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorNorm {
    pub levels: Vec<f64>,
    pub total: f64,
}

/// Element of the truncated tensor algebra `T^N(R^d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedTensor {
    dim: usize,
    degree: usize,
    levels: Vec<Vec<f64>>,
}

impl TruncatedTensor {
    pub fn zero(dim: usize, degree: usize) -> Self {
        assert!(dim > 0, "tensor dimension must be positive");
        let levels = (0..=degree).map(|k| vec![0.0; dim.pow(k as u32)]).collect();
        TruncatedTensor { dim, degree, levels }
    }

    /// The unit `(1, 0, ..., 0)`.
    pub fn identity(dim: usize, degree: usize) -> Self {
        let mut t = Self::zero(dim, degree);
        t.levels[0][0] = 1.0;
        t
    }

    pub fn from_levels(dim: usize, levels: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("tensor dimension must be positive".into()));
        }
        if levels.is_empty() {
            return Err(Error::InvalidArgument("a tensor needs at least level 0".into()));
        }
        for (k, block) in levels.iter().enumerate() {
            let want = dim.pow(k as u32);
            if block.len() != want {
                return Err(Error::DimensionMismatch(format!(
                    "level {k} has {} coefficients, expected {want}",
                    block.len()
                )));
            }
        }
        Ok(TruncatedTensor { dim, degree: levels.len() - 1, levels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    pub fn level_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.levels[k]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn scalar(&self) -> f64 {
        self.levels[0][0]
    }

    /// Coefficient of a word; zero above the truncation degree.
    pub fn coeff(&self, word: &Word) -> f64 {
        if word.len() > self.degree {
            return 0.0;
        }
        self.levels[word.len()][word.offset(self.dim)]
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.degree != other.degree {
            return Err(Error::DimensionMismatch(format!(
                "T^{}(R^{}) vs T^{}(R^{})",
                self.degree, self.dim, other.degree, other.dim
            )));
        }
        Ok(())
    }

    /// Truncated product: level `k` of the result is `Σ_j a^j ⊗ b^{k-j}`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = Self::zero(self.dim, self.degree);
        for k in 0..=self.degree {
            let target = &mut out.levels[k];
            for j in 0..=k {
                outer_add(&self.levels[j], &other.levels[k - j], target);
            }
        }
        Ok(out)
    }

    /// In-place `self = self ⊗ other`, computed from the top level down so
    /// lower levels are still the old values when they are read.
    pub fn mul_assign(&mut self, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        for k in (0..=self.degree).rev() {
            let (lower, upper) = self.levels.split_at_mut(k);
            let target = &mut upper[0];
            let b0 = other.levels[0][0];
            target.iter_mut().for_each(|c| *c *= b0);
            for (j, block) in lower.iter().enumerate() {
                outer_add(block, &other.levels[k - j], target);
            }
        }
        Ok(())
    }

    /// Per-level ℓ1 norms and their sum.
    pub fn norm(&self) -> TensorNorm {
        let levels: Vec<f64> = self.levels.iter().map(|b| b.iter().map(|c| c.abs()).sum()).collect();
        let total = levels.iter().sum();
        TensorNorm { levels, total }
    }

    /// ℓ1 norm of a single level.
    pub fn level_norm(&self, k: usize) -> f64 {
        self.levels[k].iter().map(|c| c.abs()).sum()
    }

    /// Inverse of a tensor whose level-0 coefficient is 1.
    pub fn inverse(&self) -> Result<Self> {
        if self.levels[0][0] != 1.0 {
            return Err(Error::NotGroupLike(self.levels[0][0]));
        }
        let mut inv = Self::identity(self.dim, self.degree);
        for k in 1..=self.degree {
            let mut block = vec![0.0; self.levels[k].len()];
            for j in 1..=k {
                outer_add(&self.levels[j], &inv.levels[k - j], &mut block);
            }
            block.iter_mut().for_each(|c| *c = -*c);
            inv.levels[k] = block;
        }
        Ok(inv)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let levels =
            self.levels.iter().zip(&other.levels).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
        Ok(TruncatedTensor { dim: self.dim, degree: self.degree, levels })
    }

    /// Largest absolute coefficient difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .levels
            .iter()
            .zip(&other.levels)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }

    /// Drops every level above `degree`.
    pub fn truncate(&self, degree: usize) -> Self {
        let degree = degree.min(self.degree);
        TruncatedTensor { dim: self.dim, degree, levels: self.levels[..=degree].to_vec() }
    }
}

/// `target += a ⊗ b` for blocks of lengths `d^j` and `d^l`.
fn outer_add(a: &[f64], b: &[f64], target: &mut [f64]) {
    let width = b.len();
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        let row = &mut target[i * width..(i + 1) * width];
        for (t, &bm) in row.iter_mut().zip(b) {
            *t += ai * bm;
        }
    }
}
