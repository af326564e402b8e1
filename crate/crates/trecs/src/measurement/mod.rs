//! Separable measurement operators: construction, forward application to
//! tensors, the induced inner operator acting on contraction-sized matrices,
//! and its adjoint.
//!
//! A separable operator with mode pair `(k, k+1)`, weight tensor `W` and
//! inner operator `T` maps a tensor `X` to `T(contract(X, k, W))`; with a
//! coordinate (slice) weight the contraction is the slice itself. Designs
//! draw all randomness from a single seed in a documented order: for each
//! mode pair in ascending order, first the weight object(s), then the inner
//! operator's randomness.

mod io;

pub use io::{read_mset, write_mset};

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::{complement_dims, contract, slice, DenseTensor, SliceIndex};

/// Inner operator acting on `n_k x n_{k+1}` matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum InnerOperator {
    /// `T(Z)_i = <G_i, Z>` for dense i.i.d. N(0,1) matrices `G_i`, stored
    /// packed as one row per measurement (column-major vectorization).
    GaussianProjection {
        nrows: usize,
        ncols: usize,
        packed: DMatrix<f64>,
    },
    /// `T(Z) = entries of Z at omega` (unique in-bounds `(row, col)` pairs).
    EntrySampling {
        nrows: usize,
        ncols: usize,
        omega: Vec<(usize, usize)>,
    },
    /// `T(Z)_i = a_i^T Z b_i` with a fresh vector pair per measurement.
    RankOneProjection {
        pairs: Vec<(DVector<f64>, DVector<f64>)>,
    },
    /// `T(Z) = A Z B^T`, flattened row-major (left index slow).
    Sketch {
        left: DMatrix<f64>,
        right: DMatrix<f64>,
    },
}

impl InnerOperator {
    pub fn gaussian<R: Rng>(nrows: usize, ncols: usize, m: usize, rng: &mut R) -> Self {
        let mut packed = DMatrix::zeros(m, nrows * ncols);
        for i in 0..m {
            // Entries drawn column-major per measurement matrix.
            for c in 0..nrows * ncols {
                packed[(i, c)] = rng.sample(StandardNormal);
            }
        }
        InnerOperator::GaussianProjection { nrows, ncols, packed }
    }

    pub fn entry_sampling(nrows: usize, ncols: usize, omega: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(omega.len());
        for &(r, c) in &omega {
            if r >= nrows || c >= ncols {
                return Err(Error::Shape(format!(
                    "sampled entry ({}, {}) out of bounds {}x{}",
                    r, c, nrows, ncols
                )));
            }
            if !seen.insert((r, c)) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate sampled entry ({}, {})",
                    r, c
                )));
            }
        }
        Ok(InnerOperator::EntrySampling { nrows, ncols, omega })
    }

    pub fn rank_one<R: Rng>(nrows: usize, ncols: usize, m: usize, rng: &mut R) -> Self {
        let pairs = (0..m)
            .map(|_| {
                let a = DVector::from_fn(nrows, |_, _| rng.sample(StandardNormal));
                let b = DVector::from_fn(ncols, |_, _| rng.sample(StandardNormal));
                (a, b)
            })
            .collect();
        InnerOperator::RankOneProjection { pairs }
    }

    pub fn sketch<R: Rng>(nrows: usize, ncols: usize, m1: usize, m2: usize, rng: &mut R) -> Self {
        let mut left = DMatrix::zeros(m1, nrows);
        for c in 0..nrows {
            for r in 0..m1 {
                left[(r, c)] = rng.sample(StandardNormal);
            }
        }
        let mut right = DMatrix::zeros(m2, ncols);
        for c in 0..ncols {
            for r in 0..m2 {
                right[(r, c)] = rng.sample(StandardNormal);
            }
        }
        InnerOperator::Sketch { left, right }
    }

    /// Shape of matrices this operator accepts.
    pub fn domain(&self) -> (usize, usize) {
        match self {
            InnerOperator::GaussianProjection { nrows, ncols, .. } => (*nrows, *ncols),
            InnerOperator::EntrySampling { nrows, ncols, .. } => (*nrows, *ncols),
            InnerOperator::RankOneProjection { pairs } => pairs
                .first()
                .map(|(a, b)| (a.len(), b.len()))
                .unwrap_or((0, 0)),
            InnerOperator::Sketch { left, right } => (left.ncols(), right.ncols()),
        }
    }

    pub fn output_len(&self) -> usize {
        match self {
            InnerOperator::GaussianProjection { packed, .. } => packed.nrows(),
            InnerOperator::EntrySampling { omega, .. } => omega.len(),
            InnerOperator::RankOneProjection { pairs } => pairs.len(),
            InnerOperator::Sketch { left, right } => left.nrows() * right.nrows(),
        }
    }

    fn check_domain(&self, z: &DMatrix<f64>) -> Result<()> {
        let (nr, nc) = self.domain();
        if z.nrows() != nr || z.ncols() != nc {
            return Err(Error::Shape(format!(
                "matrix {}x{} does not match operator domain {}x{}",
                z.nrows(),
                z.ncols(),
                nr,
                nc
            )));
        }
        Ok(())
    }

    pub fn apply(&self, z: &DMatrix<f64>) -> Result<DVector<f64>> {
        self.check_domain(z)?;
        match self {
            InnerOperator::GaussianProjection { packed, .. } => {
                let zvec = DVector::from_column_slice(z.as_slice());
                Ok(packed * zvec)
            }
            InnerOperator::EntrySampling { omega, .. } => {
                Ok(DVector::from_iterator(omega.len(), omega.iter().map(|&(r, c)| z[(r, c)])))
            }
            InnerOperator::RankOneProjection { pairs } => Ok(DVector::from_iterator(
                pairs.len(),
                pairs.iter().map(|(a, b)| (a.transpose() * z * b)[(0, 0)]),
            )),
            InnerOperator::Sketch { left, right } => {
                let y = left * z * right.transpose();
                let (m1, m2) = (y.nrows(), y.ncols());
                Ok(DVector::from_fn(m1 * m2, |t, _| y[(t / m2, t % m2)]))
            }
        }
    }

    /// Adjoint of `apply`: `<apply(Z), y> = <Z, adjoint(y)>` for all Z, y.
    pub fn adjoint(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        if y.len() != self.output_len() {
            return Err(Error::Shape(format!(
                "adjoint input length {} for operator with {} outputs",
                y.len(),
                self.output_len()
            )));
        }
        let (nr, nc) = self.domain();
        match self {
            InnerOperator::GaussianProjection { packed, .. } => {
                let v = packed.transpose() * y;
                Ok(DMatrix::from_column_slice(nr, nc, v.as_slice()))
            }
            InnerOperator::EntrySampling { omega, .. } => {
                let mut m = DMatrix::zeros(nr, nc);
                for (t, &(r, c)) in omega.iter().enumerate() {
                    m[(r, c)] += y[t];
                }
                Ok(m)
            }
            InnerOperator::RankOneProjection { pairs } => {
                let mut m = DMatrix::zeros(nr, nc);
                for (t, (a, b)) in pairs.iter().enumerate() {
                    m += a * b.transpose() * y[t];
                }
                Ok(m)
            }
            InnerOperator::Sketch { left, right } => {
                let m2 = right.nrows();
                let y_mat = DMatrix::from_fn(left.nrows(), m2, |q, s| y[q * m2 + s]);
                Ok(left.transpose() * y_mat * right)
            }
        }
    }

    /// The i-th measurement matrix `E_i` with `T(Z)_i = <E_i, Z>`.
    pub fn measurement_matrix(&self, i: usize) -> Result<DMatrix<f64>> {
        if i >= self.output_len() {
            return Err(Error::Shape(format!(
                "measurement index {} out of {}",
                i,
                self.output_len()
            )));
        }
        let (nr, nc) = self.domain();
        match self {
            InnerOperator::GaussianProjection { packed, .. } => Ok(DMatrix::from_iterator(
                nr,
                nc,
                packed.row(i).iter().copied(),
            )),
            InnerOperator::EntrySampling { omega, .. } => {
                let mut m = DMatrix::zeros(nr, nc);
                let (r, c) = omega[i];
                m[(r, c)] = 1.0;
                Ok(m)
            }
            InnerOperator::RankOneProjection { pairs } => {
                let (a, b) = &pairs[i];
                Ok(a * b.transpose())
            }
            InnerOperator::Sketch { left, right } => {
                let m2 = right.nrows();
                let (q, s) = (i / m2, i % m2);
                Ok(left.row(q).transpose() * right.row(s))
            }
        }
    }

    /// Squared operator norm of `T` (largest eigenvalue of `T* T`), used as
    /// the Lipschitz constant of the smooth solver term. Entry sampling is a
    /// coordinate projection with norm exactly 1; sketches factor exactly
    /// through the two sides; the rest use power iteration.
    pub fn operator_norm_sq(&self, iters: usize) -> Result<f64> {
        match self {
            InnerOperator::EntrySampling { omega, .. } => {
                Ok(if omega.is_empty() { 0.0 } else { 1.0 })
            }
            InnerOperator::Sketch { left, right } => {
                let sl = crate::linalg::spectral_norm(left)?;
                let sr = crate::linalg::spectral_norm(right)?;
                Ok((sl * sr).powi(2))
            }
            _ => {
                let (nr, nc) = self.domain();
                if nr == 0 || nc == 0 || self.output_len() == 0 {
                    return Ok(0.0);
                }
                // Deterministic start vector.
                let mut state = 0x9e3779b97f4a7c15u64 ^ ((nr as u64) << 32 | nc as u64);
                let mut z = DMatrix::from_fn(nr, nc, |_, _| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
                });
                z /= z.norm();
                let mut lambda = 0.0f64;
                for _ in 0..iters.max(1) {
                    let w = self.adjoint(&self.apply(&z)?)?;
                    let next = w.norm();
                    if next == 0.0 {
                        return Ok(0.0);
                    }
                    let new_lambda = z.dot(&w);
                    let done = (new_lambda - lambda).abs() <= 1e-6 * new_lambda.abs();
                    lambda = new_lambda;
                    z = w / next;
                    if done {
                        break;
                    }
                }
                Ok(lambda.max(0.0))
            }
        }
    }
}

/// Weight object of a separable operator: a dense order-(K-2) tensor, or the
/// coordinate tensor selecting one slice (kept implicit).
#[derive(Debug, Clone, PartialEq)]
pub enum ContractionWeight {
    Dense(DenseTensor),
    Slice(SliceIndex),
}

impl ContractionWeight {
    /// The contraction this weight induces on a tensor.
    pub fn contract(&self, x: &DenseTensor, mode_pair: usize) -> Result<DMatrix<f64>> {
        match self {
            ContractionWeight::Dense(w) => contract(x, mode_pair, w),
            ContractionWeight::Slice(s) => {
                if s.mode_pair() != mode_pair {
                    return Err(Error::Shape(format!(
                        "slice weight is for mode pair {}, operator uses {}",
                        s.mode_pair(),
                        mode_pair
                    )));
                }
                slice(x, s)
            }
        }
    }
}

/// A linear map on tensors that factors through one contraction.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableOperator {
    pub mode_pair: usize,
    pub weight: ContractionWeight,
    pub inner: InnerOperator,
}

impl SeparableOperator {
    pub fn sample_count(&self) -> usize {
        self.inner.output_len()
    }

    /// Forward application via the contraction route.
    pub fn apply_tensor(&self, x: &DenseTensor) -> Result<DVector<f64>> {
        let z = self.weight.contract(x, self.mode_pair)?;
        self.inner.apply(&z)
    }
}

/// One operator with its observed vector.
#[derive(Debug, Clone)]
pub struct MeasurementGroup {
    pub op: SeparableOperator,
    pub y: DVector<f64>,
}

/// The two weight groups sharing a mode pair.
#[derive(Debug, Clone)]
pub struct ModeGroups {
    pub mode_pair: usize,
    pub groups: [MeasurementGroup; 2],
}

/// All observations of one tensor, grouped by mode pair and weight index.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub dims: Vec<usize>,
    pub modes: Vec<ModeGroups>,
}

impl MeasurementSet {
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn total_samples(&self) -> usize {
        self.modes
            .iter()
            .map(|m| m.groups[0].y.len() + m.groups[1].y.len())
            .sum()
    }

    /// Structural validation: one entry per mode pair `0..K-1`, matching
    /// shapes, distinct weights within each pair.
    pub fn validate(&self) -> Result<()> {
        let k_max = self.dims.len().checked_sub(1).unwrap_or(0);
        if self.modes.len() != k_max {
            return Err(Error::Shape(format!(
                "{} mode groups for order {} (need {})",
                self.modes.len(),
                self.dims.len(),
                k_max
            )));
        }
        for (k, mode) in self.modes.iter().enumerate() {
            if mode.mode_pair != k {
                return Err(Error::Shape(format!(
                    "mode group {} carries mode pair {}",
                    k, mode.mode_pair
                )));
            }
            for g in &mode.groups {
                if g.op.mode_pair != k {
                    return Err(Error::Shape(format!(
                        "operator in mode group {} uses mode pair {}",
                        k, g.op.mode_pair
                    )));
                }
                if g.y.len() != g.op.sample_count() {
                    return Err(Error::Shape(format!(
                        "observed length {} vs {} samples (mode pair {})",
                        g.y.len(),
                        g.op.sample_count(),
                        k
                    )));
                }
            }
            if mode.groups[0].op.weight == mode.groups[1].op.weight {
                return Err(Error::InvalidArgument(format!(
                    "mode pair {} has identical weights in both groups",
                    k
                )));
            }
        }
        Ok(())
    }
}

/// Measurement operators without observations; `measure` produces the
/// observed set for a given tensor.
#[derive(Debug, Clone)]
pub struct MeasurementDesign {
    pub dims: Vec<usize>,
    pub pairs: Vec<(SeparableOperator, SeparableOperator)>,
}

impl MeasurementDesign {
    /// Gaussian random-projection design: for each mode pair, one set of m_k
    /// i.i.d. N(0,1) projection matrices shared across both weight groups,
    /// and two independent unit-norm dense weight tensors. When
    /// `m_per_mode` is `None`, m_k = ceil(3 r (n_k + n_{k+1} - r)).
    pub fn gaussian(dims: &[usize], rank: usize, m_per_mode: Option<&[usize]>, seed: u64) -> Result<Self> {
        let order = dims.len();
        if order < 3 {
            return Err(Error::Shape(format!(
                "designs need order >= 3, got {}",
                order
            )));
        }
        if dims.iter().any(|&n| n == 0) {
            return Err(Error::Shape(format!("zero-sized mode in dims {:?}", dims)));
        }
        let n_pairs = order - 1;
        let counts: Vec<usize> = match m_per_mode {
            Some(ms) => {
                if ms.len() != n_pairs {
                    return Err(Error::Shape(format!(
                        "{} sample counts for {} mode pairs",
                        ms.len(),
                        n_pairs
                    )));
                }
                if ms.iter().any(|&m| m == 0) {
                    return Err(Error::InvalidArgument("zero samples in a group".into()));
                }
                ms.to_vec()
            }
            None => {
                if rank == 0 {
                    return Err(Error::InvalidArgument(
                        "rank must be positive to derive default sample counts".into(),
                    ));
                }
                (0..n_pairs)
                    .map(|k| {
                        let free = (dims[k] + dims[k + 1]) as f64;
                        (3.0 * rank as f64 * (free - rank as f64)).ceil() as usize
                    })
                    .collect()
            }
        };

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::with_capacity(n_pairs);
        for k in 0..n_pairs {
            let w1 = random_unit_weight(dims, k, &mut rng)?;
            let w2 = random_unit_weight(dims, k, &mut rng)?;
            let inner = InnerOperator::gaussian(dims[k], dims[k + 1], counts[k], &mut rng);
            let op1 = SeparableOperator {
                mode_pair: k,
                weight: ContractionWeight::Dense(w1),
                inner: inner.clone(),
            };
            let op2 = SeparableOperator {
                mode_pair: k,
                weight: ContractionWeight::Dense(w2),
                inner,
            };
            pairs.push((op1, op2));
        }
        Ok(Self {
            dims: dims.to_vec(),
            pairs,
        })
    }

    /// Slice-restricted completion design: for each mode pair, two distinct
    /// slices, each observed at `m_per_slice` positions drawn uniformly
    /// without replacement. Slice pairs default to the first two distinct
    /// slices per mode pair.
    pub fn slice_sampling(
        dims: &[usize],
        slice_pairs: Option<&[(SliceIndex, SliceIndex)]>,
        m_per_slice: usize,
        seed: u64,
    ) -> Result<Self> {
        let order = dims.len();
        if order < 3 {
            return Err(Error::Shape(format!(
                "designs need order >= 3, got {}",
                order
            )));
        }
        let n_pairs = order - 1;
        let chosen: Vec<(SliceIndex, SliceIndex)> = match slice_pairs {
            Some(sp) => {
                if sp.len() != n_pairs {
                    return Err(Error::Shape(format!(
                        "{} slice pairs for {} mode pairs",
                        sp.len(),
                        n_pairs
                    )));
                }
                sp.to_vec()
            }
            None => default_slice_pairs(dims)?,
        };
        for (k, (sa, sb)) in chosen.iter().enumerate() {
            sa.validate(dims)?;
            sb.validate(dims)?;
            if sa.mode_pair() != k || sb.mode_pair() != k {
                return Err(Error::Shape(format!(
                    "slice pair {} does not use mode pair {}",
                    k, k
                )));
            }
            if sa == sb {
                return Err(Error::InvalidArgument(format!(
                    "mode pair {}: the two designated slices must be distinct",
                    k
                )));
            }
            let area = dims[k] * dims[k + 1];
            if m_per_slice == 0 || m_per_slice > area {
                return Err(Error::InvalidArgument(format!(
                    "{} samples per slice outside 1..={} (mode pair {})",
                    m_per_slice, area, k
                )));
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::with_capacity(n_pairs);
        for (k, (sa, sb)) in chosen.into_iter().enumerate() {
            let op1 = slice_sampling_operator(dims, k, sa, m_per_slice, &mut rng)?;
            let op2 = slice_sampling_operator(dims, k, sb, m_per_slice, &mut rng)?;
            pairs.push((op1, op2));
        }
        Ok(Self {
            dims: dims.to_vec(),
            pairs,
        })
    }

    /// Applies every operator to `x`.
    pub fn measure(&self, x: &DenseTensor) -> Result<MeasurementSet> {
        if x.dims() != self.dims.as_slice() {
            return Err(Error::Shape(format!(
                "tensor dims {:?} do not match design dims {:?}",
                x.dims(),
                self.dims
            )));
        }
        let modes = self
            .pairs
            .iter()
            .enumerate()
            .map(|(k, (op1, op2))| {
                Ok(ModeGroups {
                    mode_pair: k,
                    groups: [
                        MeasurementGroup {
                            op: op1.clone(),
                            y: op1.apply_tensor(x)?,
                        },
                        MeasurementGroup {
                            op: op2.clone(),
                            y: op2.apply_tensor(x)?,
                        },
                    ],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let set = MeasurementSet {
            dims: self.dims.clone(),
            modes,
        };
        set.validate()?;
        Ok(set)
    }
}

/// Unit-Frobenius-norm weight tensor with i.i.d. normal entries.
fn random_unit_weight<R: Rng>(dims: &[usize], mode_pair: usize, rng: &mut R) -> Result<DenseTensor> {
    let comp = complement_dims(dims, mode_pair)?;
    let w = DenseTensor::from_fn(comp, |_| rng.sample(StandardNormal))?;
    let norm = w.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::Numerical("zero weight draw".into()));
    }
    DenseTensor::new(w.dims().to_vec(), w.data().iter().map(|v| v / norm).collect())
}

fn slice_sampling_operator<R: Rng>(
    dims: &[usize],
    mode_pair: usize,
    s: SliceIndex,
    m_per_slice: usize,
    rng: &mut R,
) -> Result<SeparableOperator> {
    let (nr, nc) = (dims[mode_pair], dims[mode_pair + 1]);
    let mut lin = rand::seq::index::sample(rng, nr * nc, m_per_slice).into_vec();
    lin.sort_unstable();
    let omega = lin.into_iter().map(|t| (t / nc, t % nc)).collect();
    Ok(SeparableOperator {
        mode_pair,
        weight: ContractionWeight::Slice(s),
        inner: InnerOperator::entry_sampling(nr, nc, omega)?,
    })
}

/// The first two distinct slices per mode pair: all frozen coordinates zero,
/// and the same with the first frozen mode of dimension > 1 set to one.
pub fn default_slice_pairs(dims: &[usize]) -> Result<Vec<(SliceIndex, SliceIndex)>> {
    let order = dims.len();
    let mut out = Vec::with_capacity(order - 1);
    for k in 0..order - 1 {
        let comp = complement_dims(dims, k)?;
        let first = SliceIndex::new(k, vec![0; comp.len()]);
        let mut second_fixed = vec![0usize; comp.len()];
        let slot = comp.iter().position(|&n| n > 1).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "mode pair {} admits a single slice only (complement dims {:?})",
                k, comp
            ))
        })?;
        second_fixed[slot] = 1;
        out.push((first, SliceIndex::new(k, second_fixed)));
    }
    Ok(out)
}
