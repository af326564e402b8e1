//! Factor extraction from contraction pairs by simultaneous diagonalization,
//! eigenvalue-based column pairing, cross-mode alignment, degeneracy checks,
//! and full-tensor CP decomposition.
//!
//! For a rank-r tensor, a pair of contractions over the same mode pair
//! factors as `Z_a = U D_a V^T`, `Z_b = U D_b V^T` with shared factor
//! matrices. The eigenvectors of `Z_a * pinv(Z_b)` recover the columns of
//! `U`, the eigenvectors of `(pinv(Z_b) * Z_a)^T` recover `V`, and both
//! matrices share the eigenvalue list `D_a D_b^{-1}`, which pairs the
//! columns when its entries are distinct.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    eig_diagonalizable, eig_values, pinv, svd, DEFAULT_EIG_IMAG_TOL, DEFAULT_RANK_TOL,
};
use crate::tensor::{complement_dims, contract, outer_vectors, CpModel, DenseTensor};

/// Tolerances for factor extraction and alignment.
#[derive(Debug, Clone)]
pub struct FactorTolerances {
    /// Relative rank/eigenvalue truncation tolerance.
    pub rank_tol: f64,
    /// Relative bound on imaginary parts of kept eigenvalues.
    pub eig_imag_tol: f64,
    /// Minimum relative gap between consecutive pairing eigenvalues.
    pub gap_tol: f64,
    /// Minimum |cosine| for a column match during alignment.
    pub match_tol: f64,
}

impl Default for FactorTolerances {
    fn default() -> Self {
        Self {
            rank_tol: DEFAULT_RANK_TOL,
            eig_imag_tol: DEFAULT_EIG_IMAG_TOL,
            gap_tol: 1e-6,
            match_tol: 0.9,
        }
    }
}

/// Two same-shape contractions over one mode pair, with spectral diagnostics
/// of `Z_a * pinv(Z_b)` computed on construction.
#[derive(Debug, Clone)]
pub struct ContractionPair {
    pub za: DMatrix<f64>,
    pub zb: DMatrix<f64>,
    pub mode_pair: usize,
    /// Common numerical rank of the two contractions.
    pub common_rank: usize,
    /// Minimum relative gap between consecutive pairing eigenvalues.
    pub min_eig_gap: f64,
    /// Eigenvalues of `Z_a * pinv(Z_b)` as (re, im), decreasing real part.
    pub condition_diag: Vec<(f64, f64)>,
}

impl ContractionPair {
    pub fn new(
        za: DMatrix<f64>,
        zb: DMatrix<f64>,
        mode_pair: usize,
        tols: &FactorTolerances,
    ) -> Result<Self> {
        if za.shape() != zb.shape() {
            return Err(Error::Shape(format!(
                "contraction shapes differ: {:?} vs {:?}",
                za.shape(),
                zb.shape()
            )));
        }
        let ra = svd(&za)?.rank(tols.rank_tol);
        let rb = svd(&zb)?.rank(tols.rank_tol);
        if ra != rb {
            return Err(Error::Degeneracy(format!(
                "contraction ranks differ over mode pair {}: {} vs {} (a component is \
                 missing from one contraction)",
                mode_pair, ra, rb
            )));
        }
        let m1 = &za * pinv(&zb, tols.rank_tol)?;
        let condition_diag = eig_values(&m1, tols.rank_tol)?;
        let min_eig_gap = min_relative_gap(&condition_diag);
        Ok(Self {
            za,
            zb,
            mode_pair,
            common_rank: ra,
            min_eig_gap,
            condition_diag,
        })
    }
}

fn min_relative_gap(values: &[(f64, f64)]) -> f64 {
    let max_mod = values
        .iter()
        .map(|&(re, im)| (re * re + im * im).sqrt())
        .fold(0.0f64, f64::max);
    if values.len() < 2 || max_mod == 0.0 {
        return f64::INFINITY;
    }
    values
        .windows(2)
        .map(|w| (w[0].0 - w[1].0).abs() / max_mod)
        .fold(f64::INFINITY, f64::min)
}

/// Factor matrices extracted from one contraction pair: `left` for mode k,
/// `right` for mode k+1, columns paired by the shared eigenvalues.
#[derive(Debug, Clone)]
pub struct ModeFactors {
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
    /// Eigenvalues used to order and pair the columns; strictly decreasing
    /// at extraction time (alignment later permutes them).
    pub pairing_eigenvalues: DVector<f64>,
}

impl ModeFactors {
    pub fn rank(&self) -> usize {
        self.pairing_eigenvalues.len()
    }
}

/// Extracts the two factor matrices of a contraction pair.
pub fn factors_from_pair(pair: &ContractionPair, tols: &FactorTolerances) -> Result<ModeFactors> {
    let zb_pinv = pinv(&pair.zb, tols.rank_tol)?;
    let left_map = &pair.za * &zb_pinv;
    let right_map = (&zb_pinv * &pair.za).transpose();

    let left = eig_diagonalizable(&left_map, tols.rank_tol, tols.eig_imag_tol)?;
    let right = eig_diagonalizable(&right_map, tols.rank_tol, tols.eig_imag_tol)?;

    if left.effective_rank != right.effective_rank || left.effective_rank != pair.common_rank {
        return Err(Error::Degeneracy(format!(
            "rank mismatch over mode pair {}: left map {}, right map {}, contractions {}",
            pair.mode_pair, left.effective_rank, right.effective_rank, pair.common_rank
        )));
    }
    let r = left.effective_rank;
    let max_mod = left.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));

    if r > 1 {
        let mut min_gap_abs = f64::INFINITY;
        for i in 1..r {
            min_gap_abs = min_gap_abs.min((left.values[i - 1] - left.values[i]).abs());
        }
        if max_mod == 0.0 || min_gap_abs / max_mod <= tols.gap_tol {
            return Err(Error::Genericity(format!(
                "pairing eigenvalues too close over mode pair {} (relative gap {:.3e} <= {:.3e})",
                pair.mode_pair,
                if max_mod == 0.0 { 0.0 } else { min_gap_abs / max_mod },
                tols.gap_tol
            )));
        }
        // The two maps must expose the same spectrum; sorted order pairs them.
        let agree_tol = (0.25 * min_gap_abs).max(1e-6 * max_mod);
        for i in 0..r {
            if (left.values[i] - right.values[i]).abs() > agree_tol {
                return Err(Error::Degeneracy(format!(
                    "eigenvalue lists disagree over mode pair {}: {} vs {} at position {}",
                    pair.mode_pair, left.values[i], right.values[i], i
                )));
            }
        }
    }

    Ok(ModeFactors {
        left: left.vectors,
        right: right.vectors,
        pairing_eigenvalues: left.values,
    })
}

/// Permutes and sign-flips the candidate's columns (same permutation and
/// signs applied to `left` and `right` simultaneously) so that column j of
/// the aligned `left` best matches column j of `reference`, with the
/// assignment solved globally over the |cosine| matrix.
pub fn align_factors(
    reference: &DMatrix<f64>,
    candidate: &ModeFactors,
    match_tol: f64,
) -> Result<ModeFactors> {
    let r = reference.ncols();
    if candidate.left.shape() != reference.shape() {
        return Err(Error::Shape(format!(
            "alignment reference {:?} vs candidate {:?}",
            reference.shape(),
            candidate.left.shape()
        )));
    }
    if r == 0 {
        return Ok(candidate.clone());
    }
    if r > 20 {
        return Err(Error::InvalidArgument(format!(
            "alignment supports rank <= 20, got {}",
            r
        )));
    }
    let mut cosines = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            cosines[(i, j)] = reference.column(i).dot(&candidate.left.column(j));
        }
    }
    let perm = best_assignment(&cosines.map(f64::abs));
    for (i, &j) in perm.iter().enumerate() {
        if cosines[(i, j)].abs() < match_tol {
            return Err(Error::Alignment(format!(
                "column {} best match has |cosine| {:.4} < {:.4}",
                i,
                cosines[(i, j)].abs(),
                match_tol
            )));
        }
    }

    let mut left = DMatrix::zeros(candidate.left.nrows(), r);
    let mut right = DMatrix::zeros(candidate.right.nrows(), r);
    let mut eigs = DVector::zeros(r);
    for (i, &j) in perm.iter().enumerate() {
        let sign = if cosines[(i, j)] < 0.0 { -1.0 } else { 1.0 };
        left.set_column(i, &(candidate.left.column(j) * sign));
        right.set_column(i, &(candidate.right.column(j) * sign));
        eigs[i] = candidate.pairing_eigenvalues[j];
    }
    Ok(ModeFactors {
        left,
        right,
        pairing_eigenvalues: eigs,
    })
}

/// Maximum-total-weight assignment of rows to columns (bitmask DP, exact).
fn best_assignment(weights: &DMatrix<f64>) -> Vec<usize> {
    let r = weights.nrows();
    let full = 1usize << r;
    let mut dp = vec![f64::NEG_INFINITY; full];
    let mut choice = vec![usize::MAX; full];
    dp[0] = 0.0;
    for mask in 0..full {
        if dp[mask] == f64::NEG_INFINITY {
            continue;
        }
        let i = mask.count_ones() as usize;
        if i == r {
            continue;
        }
        for j in 0..r {
            if mask & (1 << j) != 0 {
                continue;
            }
            let next = mask | (1 << j);
            let v = dp[mask] + weights[(i, j)];
            if v > dp[next] {
                dp[next] = v;
                choice[next] = j;
            }
        }
    }
    let mut perm = vec![0usize; r];
    let mut mask = full - 1;
    for i in (0..r).rev() {
        let j = choice[mask];
        perm[i] = j;
        mask &= !(1 << j);
    }
    perm
}

/// Chains per-mode-pair factors into one factor matrix per mode: the shared
/// mode between consecutive pairs is used as the alignment reference, and
/// mode k+1 is taken from pair k's aligned right factors.
pub fn chain_align(per_pair: &[ModeFactors], match_tol: f64) -> Result<Vec<DMatrix<f64>>> {
    if per_pair.is_empty() {
        return Err(Error::InvalidArgument("no mode pairs to align".into()));
    }
    let mut factors = Vec::with_capacity(per_pair.len() + 1);
    factors.push(per_pair[0].left.clone());
    factors.push(per_pair[0].right.clone());
    for k in 1..per_pair.len() {
        let reference = &factors[k];
        let aligned = align_factors(reference, &per_pair[k], match_tol)?;
        factors.push(aligned.right);
    }
    Ok(factors)
}

/// Decomposition settings: factor tolerances, the relative reconstruction
/// residual accepted as success, and the weight-redraw budget on degeneracy.
#[derive(Debug, Clone)]
pub struct DecomposeConfig {
    pub tols: FactorTolerances,
    pub recon_tol: f64,
    pub max_redraws: usize,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            tols: FactorTolerances::default(),
            recon_tol: 1e-8,
            max_redraws: 3,
        }
    }
}

/// Full CP decomposition of an exactly low-rank tensor via random
/// contractions and simultaneous diagonalization.
///
/// For each mode pair, two random unit-norm weight tensors are drawn and the
/// contraction pair is processed; random weights are non-degenerate almost
/// surely, so a degeneracy or genericity failure triggers a redraw (up to
/// `max_redraws`) before the error propagates with the offending mode pair
/// identified.
pub fn leurgans_decompose(x: &DenseTensor, seed: u64, cfg: &DecomposeConfig) -> Result<CpModel> {
    let order = x.order();
    if order < 3 {
        return Err(Error::Shape(format!(
            "decomposition needs order >= 3, got {}",
            order
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_pair = Vec::with_capacity(order - 1);
    for k in 0..order - 1 {
        let mut attempt = 0usize;
        let factors = loop {
            let wa = random_unit_weight(x.dims(), k, &mut rng)?;
            let wb = random_unit_weight(x.dims(), k, &mut rng)?;
            let za = contract(x, k, &wa)?;
            let zb = contract(x, k, &wb)?;
            let outcome = ContractionPair::new(za, zb, k, &cfg.tols)
                .and_then(|pair| factors_from_pair(&pair, &cfg.tols));
            match outcome {
                Ok(f) => break f,
                Err(e @ (Error::Degeneracy(_) | Error::Genericity(_))) => {
                    if attempt >= cfg.max_redraws {
                        return Err(match e {
                            Error::Degeneracy(msg) => Error::Degeneracy(format!(
                                "mode pair {}: still degenerate after {} redraws: {}",
                                k, cfg.max_redraws, msg
                            )),
                            Error::Genericity(msg) => Error::Genericity(format!(
                                "mode pair {}: still non-generic after {} redraws: {}",
                                k, cfg.max_redraws, msg
                            )),
                            other => other,
                        });
                    }
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        };
        per_pair.push(factors);
    }

    let rank = per_pair[0].rank();
    for (k, f) in per_pair.iter().enumerate() {
        if f.rank() != rank {
            return Err(Error::Degeneracy(format!(
                "mode pair {} extracted rank {} but mode pair 0 extracted {}",
                k,
                f.rank(),
                rank
            )));
        }
    }

    if rank == 0 {
        let factors = x.dims().iter().map(|&n| DMatrix::zeros(n, 0)).collect();
        return CpModel::new(factors, DVector::zeros(0));
    }

    let factors = chain_align(&per_pair, cfg.tols.match_tol)?;
    let weights = solve_weights_against_tensor(&factors, x)?;
    let model = CpModel::from_unnormalized(factors, Some(weights))?;

    let reconstructed = model.evaluate()?;
    let x_norm = x.frobenius_norm();
    let diff = DenseTensor::linear_combination(1.0, &reconstructed, -1.0, x)?;
    let rel = diff.frobenius_norm() / x_norm.max(f64::MIN_POSITIVE);
    if rel > cfg.recon_tol {
        return Err(Error::DecompositionFailed(format!(
            "relative reconstruction residual {:.3e} exceeds {:.3e}",
            rel, cfg.recon_tol
        )));
    }
    Ok(model)
}

/// Least-squares scale weights against the full tensor: one design column per
/// component, the vectorized rank-one term of that component's factor columns.
pub fn solve_weights_against_tensor(
    factors: &[DMatrix<f64>],
    x: &DenseTensor,
) -> Result<DVector<f64>> {
    let rank = factors.first().map(|f| f.ncols()).unwrap_or(0);
    if rank == 0 {
        return Ok(DVector::zeros(0));
    }
    let n = x.len();
    let mut design = DMatrix::zeros(n, rank);
    for l in 0..rank {
        let cols: Vec<DVector<f64>> = factors.iter().map(|f| f.column(l).clone_owned()).collect();
        let term = outer_vectors(&cols)?;
        design.set_column(l, &DVector::from_column_slice(term.data()));
    }
    let target = DVector::from_column_slice(x.data());
    let sol = crate::linalg::lstsq(&design, &target)?;
    if sol.rank_deficient {
        return Err(Error::RankDeficient(format!(
            "weight system has rank {} < {} (factors not linearly independent)",
            sol.rank, rank
        )));
    }
    Ok(sol.x)
}

/// Unit-Frobenius-norm random weight tensor over the complement dims.
fn random_unit_weight<R: Rng>(dims: &[usize], mode_pair: usize, rng: &mut R) -> Result<DenseTensor> {
    let comp = complement_dims(dims, mode_pair)?;
    let w = DenseTensor::from_fn(comp, |_| rng.sample(StandardNormal))?;
    let norm = w.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::Numerical("zero weight draw".into()));
    }
    DenseTensor::new(w.dims().to_vec(), w.data().iter().map(|v| v / norm).collect())
}

/// Congruence of two canonical CP models up to column permutation: columns
/// are matched globally on the product of per-mode |cosines|.
#[derive(Debug, Clone, Copy)]
pub struct ModelCongruence {
    /// Smallest matched per-mode |cosine| over all components and modes.
    pub worst_cosine: f64,
    /// Largest relative weight error over matched components.
    pub max_weight_rel_err: f64,
}

pub fn model_congruence(a: &CpModel, b: &CpModel) -> Result<ModelCongruence> {
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!(
            "model dims differ: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    if a.rank() != b.rank() {
        return Err(Error::Shape(format!(
            "model ranks differ: {} vs {}",
            a.rank(),
            b.rank()
        )));
    }
    let r = a.rank();
    if r == 0 {
        return Ok(ModelCongruence {
            worst_cosine: 1.0,
            max_weight_rel_err: 0.0,
        });
    }
    let mut score = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            let mut product = 1.0;
            for k in 0..a.order() {
                product *= a.factor(k).column(i).dot(&b.factor(k).column(j)).abs();
            }
            score[(i, j)] = product;
        }
    }
    let perm = best_assignment(&score);
    let mut worst_cosine = 1.0f64;
    let mut max_weight_rel_err = 0.0f64;
    for (i, &j) in perm.iter().enumerate() {
        for k in 0..a.order() {
            worst_cosine =
                worst_cosine.min(a.factor(k).column(i).dot(&b.factor(k).column(j)).abs());
        }
        let denom = a.weights()[i].abs().max(f64::MIN_POSITIVE);
        max_weight_rel_err =
            max_weight_rel_err.max((a.weights()[i] - b.weights()[j]).abs() / denom);
    }
    Ok(ModelCongruence {
        worst_cosine,
        max_weight_rel_err,
    })
}
