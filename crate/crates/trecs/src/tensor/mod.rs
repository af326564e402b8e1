//! Dense tensor storage, slicing, contractions, outer products and inner
//! products.
//!
//! Layout: one fixed linear layout for all orders, row-major with the *last*
//! index fastest. For dims `[n_0, ..., n_{K-1}]` the entry at multi-index
//! `(i_0, ..., i_{K-1})` lives at `((i_0*n_1 + i_1)*n_2 + i_2)*... + i_{K-1}`.
//!
//! Slices and contractions are taken over contiguous mode pairs `(k, k+1)`
//! (zero-based): the result is an `n_k x n_{k+1}` matrix and the remaining
//! K-2 modes are either frozen (slice) or summed against a weight tensor
//! (contraction). Non-contiguous mode pairs are rejected.

mod cp;
pub(crate) mod io;

pub use cp::CpModel;
pub use io::{read_cpm, read_dtns, write_cpm, write_dtns};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dense real tensor of order >= 1 with an owned flat buffer.
///
/// Ambient tensors handled by the recovery pipeline have order >= 3; order-1
/// and order-2 values appear as contraction weights (order K-2).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    /// Builds a tensor, validating dimensions, buffer length and finiteness.
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = checked_len(&dims)?;
        if data.len() != len {
            return Err(Error::Shape(format!(
                "data length {} does not match dims {:?} (expected {})",
                data.len(),
                dims,
                len
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("tensor entries must be finite".into()));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = checked_len(&dims)?;
        Ok(Self {
            dims,
            data: vec![0.0; len],
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in layout order.
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = checked_len(&dims)?;
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            advance_index(&mut idx, &dims);
        }
        Self::new(dims, data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.dims.len() {
            return Err(Error::Shape(format!(
                "index of length {} for order-{} tensor",
                idx.len(),
                self.dims.len()
            )));
        }
        let mut lin = 0usize;
        for (&i, &n) in idx.iter().zip(&self.dims) {
            if i >= n {
                return Err(Error::Shape(format!("index {:?} out of bounds {:?}", idx, self.dims)));
            }
            lin = lin * n + i;
        }
        Ok(lin)
    }

    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        Ok(self.data[self.linear_index(idx)?])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `alpha * a + beta * b`, elementwise; dims must match.
    pub fn linear_combination(alpha: f64, a: &DenseTensor, beta: f64, b: &DenseTensor) -> Result<DenseTensor> {
        if a.dims != b.dims {
            return Err(Error::Shape(format!(
                "dims {:?} vs {:?} in linear combination",
                a.dims, b.dims
            )));
        }
        let data = a
            .data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| alpha * x + beta * y)
            .collect();
        DenseTensor::new(a.dims.clone(), data)
    }
}

fn checked_len(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::Shape("tensor must have at least one mode".into()));
    }
    if dims.iter().any(|&n| n == 0) {
        return Err(Error::Shape(format!("zero-sized mode in dims {:?}", dims)));
    }
    let mut len = 1usize;
    for &n in dims {
        len = len
            .checked_mul(n)
            .ok_or_else(|| Error::Capacity(format!("dims {:?} overflow addressable size", dims)))?;
    }
    // f64 buffer allocation guard; desk scale is orders of magnitude below this.
    if len > (1usize << 34) {
        return Err(Error::Capacity(format!("dims {:?} give {} entries", dims, len)));
    }
    Ok(len)
}

fn advance_index(idx: &mut [usize], dims: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < dims[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Identifies one slice: the contiguous free mode pair `(mode_pair, mode_pair+1)`
/// plus the frozen coordinates of the remaining modes, in increasing mode order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceIndex {
    mode_pair: usize,
    fixed: Vec<usize>,
}

impl SliceIndex {
    pub fn new(mode_pair: usize, fixed: Vec<usize>) -> Self {
        Self { mode_pair, fixed }
    }

    pub fn mode_pair(&self) -> usize {
        self.mode_pair
    }

    pub fn fixed(&self) -> &[usize] {
        &self.fixed
    }

    /// Checks this slice against a tensor's dims.
    pub fn validate(&self, dims: &[usize]) -> Result<()> {
        let order = dims.len();
        if order < 3 {
            return Err(Error::Shape(format!("slices need order >= 3, got {}", order)));
        }
        if self.mode_pair + 1 >= order {
            return Err(Error::Shape(format!(
                "mode pair ({}, {}) invalid for order {}",
                self.mode_pair,
                self.mode_pair + 1,
                order
            )));
        }
        if self.fixed.len() != order - 2 {
            return Err(Error::Shape(format!(
                "{} fixed indices for order-{} tensor (need {})",
                self.fixed.len(),
                order,
                order - 2
            )));
        }
        for (slot, &i) in self.fixed.iter().enumerate() {
            let mode = frozen_mode(self.mode_pair, slot);
            if i >= dims[mode] {
                return Err(Error::Shape(format!(
                    "fixed index {} out of bounds for mode {} (dim {})",
                    i, mode, dims[mode]
                )));
            }
        }
        Ok(())
    }
}

/// Mode frozen by fixed-slot `slot` for the given mode pair.
fn frozen_mode(mode_pair: usize, slot: usize) -> usize {
    if slot < mode_pair {
        slot
    } else {
        slot + 2
    }
}

/// Dimensions of the weight tensor of a mode-pair contraction: every mode
/// except `(k, k+1)`, in increasing mode order.
pub fn complement_dims(dims: &[usize], mode_pair: usize) -> Result<Vec<usize>> {
    if dims.len() < 3 {
        return Err(Error::Shape(format!(
            "contractions need order >= 3, got {}",
            dims.len()
        )));
    }
    if mode_pair + 1 >= dims.len() {
        return Err(Error::Shape(format!(
            "mode pair ({}, {}) invalid for order {}",
            mode_pair,
            mode_pair + 1,
            dims.len()
        )));
    }
    let mut out = Vec::with_capacity(dims.len() - 2);
    out.extend_from_slice(&dims[..mode_pair]);
    out.extend_from_slice(&dims[mode_pair + 2..]);
    Ok(out)
}

/// Sum of elementwise products; dims must match.
pub fn inner_product(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!(
            "dims {:?} vs {:?} in inner product",
            a.dims(),
            b.dims()
        )));
    }
    Ok(a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum())
}

/// The matrix obtained by freezing all modes outside the slice's mode pair.
pub fn slice(t: &DenseTensor, s: &SliceIndex) -> Result<DMatrix<f64>> {
    s.validate(t.dims())?;
    let (prefix_len, a, b, suffix_len) = split_dims(t.dims(), s.mode_pair);
    let k = s.mode_pair;
    let prefix_lin = linearize(&s.fixed[..k], &t.dims()[..k]);
    let suffix_lin = linearize(&s.fixed[k..], &t.dims()[k + 2..]);
    let _ = prefix_len;
    let mut m = DMatrix::zeros(a, b);
    for i in 0..a {
        for j in 0..b {
            let lin = (((prefix_lin * a + i) * b + j) * suffix_len) + suffix_lin;
            m[(i, j)] = t.data()[lin];
        }
    }
    Ok(m)
}

/// Weighted sum of all slices over the mode pair: an `n_k x n_{k+1}` matrix.
///
/// The weight tensor has the complement dims (every mode except `k, k+1`).
pub fn contract(t: &DenseTensor, mode_pair: usize, weight: &DenseTensor) -> Result<DMatrix<f64>> {
    let comp = complement_dims(t.dims(), mode_pair)?;
    if weight.dims() != comp.as_slice() {
        return Err(Error::Shape(format!(
            "weight dims {:?} do not match complement {:?} of mode pair ({}, {})",
            weight.dims(),
            comp,
            mode_pair,
            mode_pair + 1
        )));
    }
    let (prefix_len, a, b, suffix_len) = split_dims(t.dims(), mode_pair);
    let x = t.data();
    let w = weight.data();
    let mut m = DMatrix::zeros(a, b);
    for p in 0..prefix_len {
        for i in 0..a {
            for j in 0..b {
                let base = ((p * a + i) * b + j) * suffix_len;
                let wbase = p * suffix_len;
                let mut acc = 0.0;
                for s in 0..suffix_len {
                    acc += w[wbase + s] * x[base + s];
                }
                m[(i, j)] += acc;
            }
        }
    }
    Ok(m)
}

/// `(prefix product, n_k, n_{k+1}, suffix product)` around the mode pair.
fn split_dims(dims: &[usize], mode_pair: usize) -> (usize, usize, usize, usize) {
    let prefix: usize = dims[..mode_pair].iter().product();
    let suffix: usize = dims[mode_pair + 2..].iter().product();
    (prefix, dims[mode_pair], dims[mode_pair + 1], suffix)
}

fn linearize(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &n)| acc * n + i)
}

/// Outer product of tensors: order is the sum of part orders, entries are
/// products of the part entries.
pub fn outer_tensor(parts: &[DenseTensor]) -> Result<DenseTensor> {
    if parts.is_empty() {
        return Err(Error::InvalidArgument("outer product of empty list".into()));
    }
    let mut dims = Vec::new();
    for p in parts {
        dims.extend_from_slice(p.dims());
    }
    let len = checked_len(&dims)?;
    let mut data = vec![1.0f64; 1];
    data.reserve(len);
    for p in parts {
        let mut next = Vec::with_capacity(data.len() * p.len());
        for &lhs in &data {
            for &rhs in p.data() {
                next.push(lhs * rhs);
            }
        }
        data = next;
    }
    DenseTensor::new(dims, data)
}

/// Rank-one tensor from column vectors, one per mode.
pub fn outer_vectors(vecs: &[DVector<f64>]) -> Result<DenseTensor> {
    let parts: Vec<DenseTensor> = vecs
        .iter()
        .map(|v| DenseTensor::new(vec![v.len()], v.as_slice().to_vec()))
        .collect::<Result<_>>()?;
    outer_tensor(&parts)
}

/// The weight tensor `e_S` selecting a single slice: 1 at the slice's frozen
/// coordinates, 0 elsewhere.
pub fn coordinate_weight(dims: &[usize], s: &SliceIndex) -> Result<DenseTensor> {
    s.validate(dims)?;
    let comp = complement_dims(dims, s.mode_pair())?;
    let mut w = DenseTensor::zeros(comp.clone())?;
    let lin = linearize(s.fixed(), &comp);
    w.data[lin] = 1.0;
    Ok(w)
}
