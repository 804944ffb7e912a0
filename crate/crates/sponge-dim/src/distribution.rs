//! Column weight vectors: probability distributions on the `(i, j)` index
//! pairs of a sponge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};
use crate::spec::SpongeSpec;

/// How far the total mass may stray from 1.
pub const MASS_TOL: f64 = 1e-12;

/// A probability distribution on column indices `(i, j)`, stored with the
/// same nesting as the `b` ratios of a spec.
///
/// Invariants: entries are finite and nonnegative, and the total mass is 1
/// within [`MASS_TOL`]. Entries may be exactly zero; every consumer applies
/// the `0 * ln(0) = 0` convention and skips unsupported columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NestedDistribution<R: Real> {
    weights: Vec<Vec<R>>,
}

impl<R: Real> NestedDistribution<R> {
    /// Validates entries and total mass.
    pub fn new(weights: Vec<Vec<R>>) -> Result<Self> {
        let mut total = CompensatedSum::new();
        for (i, row) in weights.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if !(w >= R::zero()) || !w.is_finite() {
                    return Err(Error::Precondition(format!(
                        "weight p[{}][{}] = {} must be finite and nonnegative",
                        i + 1,
                        j + 1,
                        w
                    )));
                }
                total.add(w);
            }
        }
        let total = total.value();
        if (total - R::one()).abs() > R::of(MASS_TOL) {
            return Err(Error::Precondition(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { weights })
    }

    /// The uniform distribution on the columns of `spec`.
    pub fn uniform(spec: &SpongeSpec<R>) -> Self {
        let n = R::of(spec.pair_count() as f64);
        Self {
            weights: spec
                .b
                .iter()
                .map(|row| vec![R::one() / n; row.len()])
                .collect(),
        }
    }

    /// Rebuilds nested weights from a row-major flat slice, renormalizing to
    /// unit mass. Used by optimizers that work on flat coordinates.
    pub fn from_flat(spec: &SpongeSpec<R>, flat: &[R]) -> Result<Self> {
        if flat.len() != spec.pair_count() {
            return Err(Error::Precondition(format!(
                "expected {} weights, got {}",
                spec.pair_count(),
                flat.len()
            )));
        }
        let mut total = R::zero();
        for &w in flat {
            if !(w >= R::zero()) || !w.is_finite() {
                return Err(Error::Precondition(format!(
                    "flat weight {w} must be finite and nonnegative"
                )));
            }
            total = total + w;
        }
        if total <= R::zero() {
            return Err(Error::Precondition("all weights are zero".into()));
        }
        let mut it = flat.iter();
        let weights = spec
            .b
            .iter()
            .map(|row| row.iter().map(|_| *it.next().unwrap() / total).collect())
            .collect();
        Ok(Self { weights })
    }

    /// Checks that the nesting matches the columns of `spec`.
    pub fn matches(&self, spec: &SpongeSpec<R>) -> bool {
        self.weights.len() == spec.m()
            && self
                .weights
                .iter()
                .enumerate()
                .all(|(i, row)| row.len() == spec.m_i(i))
    }

    pub fn require_match(&self, spec: &SpongeSpec<R>) -> Result<()> {
        if self.matches(spec) {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "distribution shape does not match the columns of '{}'",
                spec.name
            )))
        }
    }

    /// Weight of column `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> R {
        self.weights[i][j]
    }

    pub fn rows(&self) -> &[Vec<R>] {
        &self.weights
    }

    /// Slab marginals `p_i = sum_j p_ij`.
    pub fn marginals(&self) -> Vec<R> {
        self.weights
            .iter()
            .map(|row| row.iter().fold(R::zero(), |s, &w| s + w))
            .collect()
    }

    /// Row-major flattening.
    pub fn flat(&self) -> Vec<R> {
        self.weights.iter().flatten().copied().collect()
    }

    /// Iterates `(i, j, p_ij)` over supported columns only (`p_ij > 0`).
    pub fn support(&self) -> impl Iterator<Item = (usize, usize, R)> + '_ {
        self.weights.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &w)| w > R::zero())
                .map(move |(j, &w)| (i, j, w))
        })
    }
}
