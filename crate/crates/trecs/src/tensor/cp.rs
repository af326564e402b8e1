//! Rank-r Kruskal (CP) models: per-mode factor matrices with unit-norm
//! columns plus scale weights.
//!
//! Every constructor canonicalizes: factor columns are normalized with the
//! scale absorbed into the weights, each column's largest-magnitude entry is
//! made nonnegative (sign absorbed into the weight), and columns are sorted
//! by decreasing |weight| with a stable index tie-break. The canonical form
//! is unique up to exactly tied |weight| values, which makes model equality
//! testable.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{outer_vectors, DenseTensor};
use crate::error::{Error, Result};

/// Tolerance for the unit-column invariant.
pub const UNIT_COLUMN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CpModel {
    dims: Vec<usize>,
    weights: DVector<f64>,
    factors: Vec<DMatrix<f64>>,
}

impl CpModel {
    /// Builds a model from unit-column factors and weights, then canonicalizes.
    pub fn new(factors: Vec<DMatrix<f64>>, weights: DVector<f64>) -> Result<Self> {
        let rank = weights.len();
        if factors.len() < 2 {
            return Err(Error::Shape("a CP model needs at least two modes".into()));
        }
        let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
        for (k, f) in factors.iter().enumerate() {
            if f.ncols() != rank {
                return Err(Error::Shape(format!(
                    "factor {} has {} columns, expected rank {}",
                    k,
                    f.ncols(),
                    rank
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("factor {} has non-finite entries", k)));
            }
            for l in 0..rank {
                let norm = f.column(l).norm();
                if (norm - 1.0).abs() > UNIT_COLUMN_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "factor {} column {} has norm {} (must be 1 within {})",
                        k, l, norm, UNIT_COLUMN_TOL
                    )));
                }
            }
        }
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("weights must be finite".into()));
        }
        let min_dim = *dims.iter().min().expect("nonempty dims");
        if rank > min_dim {
            return Err(Error::InvalidArgument(format!(
                "rank {} exceeds smallest dimension {}",
                rank, min_dim
            )));
        }
        let mut model = Self {
            dims,
            weights,
            factors,
        };
        model.canonicalize();
        Ok(model)
    }

    /// Builds a model from arbitrary nonzero factor columns: column norms are
    /// absorbed into the weights (all-one weights when `None`), then the
    /// result is canonicalized.
    pub fn from_unnormalized(factors: Vec<DMatrix<f64>>, weights: Option<DVector<f64>>) -> Result<Self> {
        let rank = factors.first().map(|f| f.ncols()).unwrap_or(0);
        let mut weights = weights.unwrap_or_else(|| DVector::from_element(rank, 1.0));
        if weights.len() != rank {
            return Err(Error::Shape(format!(
                "{} weights for rank {}",
                weights.len(),
                rank
            )));
        }
        let mut normalized = Vec::with_capacity(factors.len());
        for (k, f) in factors.into_iter().enumerate() {
            let mut f = f;
            for l in 0..rank {
                let norm = f.column(l).norm();
                if norm == 0.0 || !norm.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "factor {} column {} has norm {}",
                        k, l, norm
                    )));
                }
                f.column_mut(l).scale_mut(1.0 / norm);
                weights[l] *= norm;
            }
            normalized.push(f);
        }
        Self::new(normalized, weights)
    }

    /// Rank-r model with i.i.d. standard normal factor entries, canonicalized.
    pub fn random<R: Rng>(dims: &[usize], rank: usize, rng: &mut R) -> Result<Self> {
        if rank == 0 {
            let factors = dims.iter().map(|&n| DMatrix::zeros(n, 0)).collect();
            return Self::new(factors, DVector::zeros(0));
        }
        let factors: Vec<DMatrix<f64>> = dims
            .iter()
            .map(|&n| DMatrix::from_fn(n, rank, |_, _| rng.sample(StandardNormal)))
            .collect();
        Self::from_unnormalized(factors, None)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn factor(&self, mode: usize) -> &DMatrix<f64> {
        &self.factors[mode]
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    /// Evaluates the model to a dense tensor: sum of weighted rank-one terms.
    pub fn evaluate(&self) -> Result<DenseTensor> {
        let mut out = DenseTensor::zeros(self.dims.clone())?;
        for l in 0..self.rank() {
            let cols: Vec<DVector<f64>> = self
                .factors
                .iter()
                .map(|f| f.column(l).clone_owned())
                .collect();
            let term = outer_vectors(&cols)?;
            out = DenseTensor::linear_combination(1.0, &out, self.weights[l], &term)?;
        }
        Ok(out)
    }

    /// Largest-magnitude entry of each column made nonnegative (sign folded
    /// into the weight), columns sorted by decreasing |weight|, stable.
    fn canonicalize(&mut self) {
        let rank = self.rank();
        for l in 0..rank {
            for f in &mut self.factors {
                let col = f.column(l);
                let mut arg = 0usize;
                let mut best = -1.0f64;
                for (i, &v) in col.iter().enumerate() {
                    if v.abs() > best {
                        best = v.abs();
                        arg = i;
                    }
                }
                if col[arg] < 0.0 {
                    f.column_mut(l).neg_mut();
                    self.weights[l] = -self.weights[l];
                }
            }
        }
        let mut order: Vec<usize> = (0..rank).collect();
        order.sort_by(|&a, &b| {
            self.weights[b]
                .abs()
                .partial_cmp(&self.weights[a].abs())
                .expect("finite weights")
                .then(a.cmp(&b))
        });
        let already = order.iter().enumerate().all(|(i, &j)| i == j);
        if already {
            return;
        }
        let weights = DVector::from_fn(rank, |i, _| self.weights[order[i]]);
        let factors = self
            .factors
            .iter()
            .map(|f| {
                let mut g = DMatrix::zeros(f.nrows(), rank);
                for (i, &j) in order.iter().enumerate() {
                    g.set_column(i, &f.column(j));
                }
                g
            })
            .collect();
        self.weights = weights;
        self.factors = factors;
    }
}
