//! Dense matrix kernels: SVD, Moore-Penrose pseudoinverse, eigendecomposition
//! of diagonalizable real matrices, singular-value thresholding, and least
//! squares.
//!
//! SVD and Schur reductions delegate to nalgebra; everything else is built on
//! top of them. The eigensolver targets matrices of the form `U D U^+` (real
//! spectrum, diagonalizable): the range of the matrix is an invariant subspace
//! containing every eigenvector with nonzero eigenvalue, so the problem is
//! reduced to the range via an orthonormal SVD basis before running Schur and
//! extracting eigenvectors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative numerical-rank tolerance: singular values below
/// `tol * sigma_max * max(m, n)` are treated as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Relative bound on the imaginary part of kept eigenvalues. In exact
/// arithmetic the matrices we decompose have real spectra; anything above
/// this is a failed non-degeneracy/genericity assumption, not noise.
pub const DEFAULT_EIG_IMAG_TOL: f64 = 1e-6;

const SVD_MAX_NITER: usize = 10_000;
const SCHUR_MAX_NITER: usize = 10_000;

/// Thin SVD with singular values sorted in nonincreasing order.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl SvdResult {
    /// `U * diag(S) * V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, &sv) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(sv);
        }
        us * self.v.transpose()
    }

    /// Count of singular values above `tol * sigma_max * max(m, n)`.
    pub fn rank(&self, rank_tol: f64) -> usize {
        numerical_rank(self.s.as_slice(), self.u.nrows(), self.v.nrows(), rank_tol)
    }
}

pub fn numerical_rank(s: &[f64], nrows: usize, ncols: usize, rank_tol: f64) -> usize {
    let smax = s.first().copied().unwrap_or(0.0);
    let cut = rank_tol * smax * nrows.max(ncols) as f64;
    s.iter().take_while(|&&v| v > cut).count()
}

pub fn svd(a: &DMatrix<f64>) -> Result<SvdResult> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("svd input has non-finite entries".into()));
    }
    let svd = a
        .clone()
        .try_svd(true, true, f64::EPSILON, SVD_MAX_NITER)
        .ok_or_else(|| Error::Numerical("svd did not converge".into()))?;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    Ok(SvdResult {
        u,
        s: svd.singular_values,
        v: v_t.transpose(),
    })
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> Result<f64> {
    Ok(svd(a)?.s.max())
}

/// Moore-Penrose pseudoinverse with relative rank tolerance `rank_tol`
/// (`DEFAULT_RANK_TOL` is the conventional choice).
pub fn pinv(a: &DMatrix<f64>, rank_tol: f64) -> Result<DMatrix<f64>> {
    let SvdResult { u, s, v } = svd(a)?;
    let rank = numerical_rank(s.as_slice(), a.nrows(), a.ncols(), rank_tol);
    let mut vs = v;
    for j in 0..s.len() {
        let inv = if j < rank { 1.0 / s[j] } else { 0.0 };
        vs.column_mut(j).scale_mut(inv);
    }
    Ok(vs * u.transpose())
}

/// Eigendecomposition restricted to the numerically nonzero spectrum.
///
/// `values` are the kept eigenvalues (real parts) sorted in decreasing order;
/// `values_im` retains the imaginary parts for diagnostics; `vectors` holds
/// the matching unit-norm eigenvectors with canonical sign
/// (largest-magnitude entry nonnegative).
#[derive(Debug, Clone)]
pub struct EigResult {
    pub values: DVector<f64>,
    pub values_im: DVector<f64>,
    pub vectors: DMatrix<f64>,
    pub effective_rank: usize,
}

/// Eigenvalues of the numerically nonzero part of the spectrum as
/// `(re, im)` pairs sorted by decreasing real part. Never errors on complex
/// values; used for diagnostics.
pub fn eig_values(m: &DMatrix<f64>, rank_tol: f64) -> Result<Vec<(f64, f64)>> {
    let (reduced, _) = reduce_to_range(m, rank_tol)?;
    let reduced = match reduced {
        Some(r) => r,
        None => return Ok(Vec::new()),
    };
    let mut vals = schur_eigenvalues(&reduced)?;
    let max_mod = vals
        .iter()
        .map(|&(re, im)| (re * re + im * im).sqrt())
        .fold(0.0f64, f64::max);
    vals.retain(|&(re, im)| (re * re + im * im).sqrt() > rank_tol * max_mod);
    vals.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite eigenvalues"));
    Ok(vals)
}

/// Eigendecomposition of a diagonalizable real matrix with real spectrum
/// (typically `U D U^+`). Kept eigenvalues with an imaginary magnitude of at
/// least `eig_imag_tol * max|lambda|` raise a degeneracy error.
pub fn eig_diagonalizable(m: &DMatrix<f64>, rank_tol: f64, eig_imag_tol: f64) -> Result<EigResult> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let (reduced, basis) = reduce_to_range(m, rank_tol)?;
    let (reduced, basis) = match (reduced, basis) {
        (Some(r), Some(q)) => (r, q),
        _ => {
            return Ok(EigResult {
                values: DVector::zeros(0),
                values_im: DVector::zeros(0),
                vectors: DMatrix::zeros(m.nrows(), 0),
                effective_rank: 0,
            })
        }
    };

    let all = schur_eigenvalues(&reduced)?;
    let max_mod = all
        .iter()
        .map(|&(re, im)| (re * re + im * im).sqrt())
        .fold(0.0f64, f64::max);
    let mut kept: Vec<(f64, f64)> = all
        .iter()
        .copied()
        .filter(|&(re, im)| (re * re + im * im).sqrt() > rank_tol * max_mod)
        .collect();
    kept.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite eigenvalues"));

    for &(re, im) in &kept {
        if im.abs() >= eig_imag_tol * max_mod {
            return Err(Error::Degeneracy(format!(
                "kept eigenvalue {} + {}i has imaginary magnitude >= {} * {}",
                re, im, eig_imag_tol, max_mod
            )));
        }
    }

    let r = kept.len();
    let mut values = DVector::zeros(r);
    let mut values_im = DVector::zeros(r);
    let mut vectors = DMatrix::zeros(m.nrows(), r);
    for (j, &(re, im)) in kept.iter().enumerate() {
        values[j] = re;
        values_im[j] = im;
        let small = eigenvector_for(&reduced, re)?;
        let mut full = &basis * small;
        canonical_sign(&mut full);
        let norm = full.norm();
        if norm == 0.0 {
            return Err(Error::Numerical("zero eigenvector".into()));
        }
        full.scale_mut(1.0 / norm);
        vectors.set_column(j, &full);
    }

    Ok(EigResult {
        values,
        values_im,
        vectors,
        effective_rank: r,
    })
}

/// Orthonormal basis `Q` of the numerical range plus the compression
/// `Q^T M Q`. The range is invariant under `M`, and every eigenvector with a
/// nonzero eigenvalue lies inside it.
fn reduce_to_range(
    m: &DMatrix<f64>,
    rank_tol: f64,
) -> Result<(Option<DMatrix<f64>>, Option<DMatrix<f64>>)> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape("range reduction needs a square matrix".into()));
    }
    let dec = svd(m)?;
    let rank = dec.rank(rank_tol);
    if rank == 0 {
        return Ok((None, None));
    }
    let q = dec.u.columns(0, rank).clone_owned();
    let reduced = q.transpose() * m * &q;
    Ok((Some(reduced), Some(q)))
}

fn schur_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    let schur = m
        .clone()
        .try_schur(f64::EPSILON, SCHUR_MAX_NITER)
        .ok_or_else(|| Error::Numerical("schur iteration did not converge".into()))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|c| (c.re, c.im))
        .collect())
}

/// Unit eigenvector of `m` for the (simple, real) eigenvalue `lambda`:
/// null-space direction of `m - lambda I` from the SVD, sharpened by inverse
/// iteration when the shifted solve is well posed.
fn eigenvector_for(m: &DMatrix<f64>, lambda: f64) -> Result<DVector<f64>> {
    let n = m.nrows();
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] -= lambda;
    }
    let dec = svd(&shifted)?;
    let mut v = dec.v.column(n - 1).clone_owned();

    let scale = dec.s.max().max(lambda.abs()).max(1.0);
    let mut best = v.clone();
    let mut best_res = eig_residual(m, lambda, &v);
    for _ in 0..2 {
        let mut jittered = shifted.clone();
        let delta = 1e-13 * scale;
        for i in 0..n {
            jittered[(i, i)] -= delta;
        }
        match jittered.lu().solve(&v) {
            Some(mut next) => {
                let norm = next.norm();
                if !norm.is_finite() || norm == 0.0 {
                    break;
                }
                next.scale_mut(1.0 / norm);
                let res = eig_residual(m, lambda, &next);
                if res < best_res {
                    best_res = res;
                    best = next.clone();
                }
                v = next;
            }
            None => break,
        }
    }
    Ok(best)
}

fn eig_residual(m: &DMatrix<f64>, lambda: f64, v: &DVector<f64>) -> f64 {
    (m * v - v * lambda).norm() / v.norm().max(f64::MIN_POSITIVE)
}

fn canonical_sign(v: &mut DVector<f64>) {
    let mut arg = 0usize;
    let mut best = -1.0f64;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            arg = i;
        }
    }
    if v[arg] < 0.0 {
        v.neg_mut();
    }
}

/// Singular-value soft thresholding: the proximal operator of
/// `tau * ||.||_*`, i.e. the unique minimizer of
/// `tau*||Z||_* + 0.5*||Z - A||_F^2`.
pub fn svt(a: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if tau < 0.0 {
        return Err(Error::InvalidArgument(format!("svt threshold {} < 0", tau)));
    }
    if tau == 0.0 {
        return Ok(a.clone());
    }
    let SvdResult { u, s, v } = svd(a)?;
    let mut us = u;
    let mut any = false;
    for (j, &sv) in s.iter().enumerate() {
        let t = (sv - tau).max(0.0);
        us.column_mut(j).scale_mut(t);
        any |= t > 0.0;
    }
    if !any {
        return Ok(DMatrix::zeros(a.nrows(), a.ncols()));
    }
    Ok(us * v.transpose())
}

/// Least-squares solution of an overdetermined system via SVD.
#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: DVector<f64>,
    pub rank: usize,
    pub rank_deficient: bool,
    pub residual: f64,
}

/// Minimizer of `||A x - b||_2` for `rows(A) >= cols(A)`. A rank-deficient
/// system is reported in the diagnostics and the minimum-norm solution is
/// returned.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<LstsqSolution> {
    if a.nrows() < a.ncols() {
        return Err(Error::Shape(format!(
            "least squares needs rows >= cols, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.len() != a.nrows() {
        return Err(Error::Shape(format!(
            "rhs length {} for {} rows",
            b.len(),
            a.nrows()
        )));
    }
    let SvdResult { u, s, v } = svd(a)?;
    let rank = numerical_rank(s.as_slice(), a.nrows(), a.ncols(), DEFAULT_RANK_TOL);
    let coeffs = u.transpose() * b;
    let mut x = DVector::zeros(a.ncols());
    for j in 0..rank {
        x += v.column(j) * (coeffs[j] / s[j]);
    }
    let residual = (a * &x - b).norm();
    Ok(LstsqSolution {
        x,
        rank,
        rank_deficient: rank < a.ncols(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_matrix(nr: usize, nc: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(nr, nc, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn svd_diagonal() {
        let a = DMatrix::from_partial_diagonal(2, 2, &[3.0, 1.0]);
        let dec = svd(&a).unwrap();
        assert!((dec.s[0] - 3.0).abs() < 1e-14);
        assert!((dec.s[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn svd_zero_matrix() {
        let a = DMatrix::zeros(3, 2);
        let dec = svd(&a).unwrap();
        assert!(dec.s.iter().all(|&v| v == 0.0));
        assert_eq!(dec.rank(DEFAULT_RANK_TOL), 0);
    }

    #[test]
    fn svd_reconstruction_and_orthogonality() {
        let mut r = rng(31);
        let a = random_matrix(5, 3, &mut r);
        let dec = svd(&a).unwrap();
        let rel = (dec.reconstruct() - &a).norm() / a.norm();
        assert!(rel < 1e-10, "reconstruction error {}", rel);
        let utu = dec.u.transpose() * &dec.u;
        let vtv = dec.v.transpose() * &dec.v;
        assert!((utu - DMatrix::identity(3, 3)).norm() < 1e-10);
        assert!((vtv - DMatrix::identity(3, 3)).norm() < 1e-10);
        // Nonincreasing order.
        for j in 1..dec.s.len() {
            assert!(dec.s[j - 1] >= dec.s[j]);
        }
    }

    #[test]
    fn pinv_diagonal() {
        let a = DMatrix::from_partial_diagonal(2, 2, &[2.0, 0.0]);
        let p = pinv(&a, DEFAULT_RANK_TOL).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-14);
        assert_eq!(p[(1, 1)], 0.0);
    }

    #[test]
    fn pinv_orthogonal_is_transpose() {
        // Householder reflector: orthogonal and symmetric.
        let mut r = rng(32);
        let v = DVector::from_fn(4, |_, _| r.random::<f64>() - 0.5).normalize();
        let q = DMatrix::identity(4, 4) - &v * v.transpose() * 2.0;
        let p = pinv(&q, DEFAULT_RANK_TOL).unwrap();
        assert!((p - q.transpose()).norm() < 1e-10);
    }

    #[test]
    fn pinv_penrose_identity_rank2() {
        let mut r = rng(33);
        let a = random_matrix(4, 2, &mut r) * random_matrix(2, 4, &mut r);
        let p = pinv(&a, DEFAULT_RANK_TOL).unwrap();
        assert!((&a * &p * &a - &a).norm() < 1e-9);
        assert!((&p * &a * &p - &p).norm() < 1e-9);
        assert!(((&a * &p).transpose() - &a * &p).norm() < 1e-8);
        assert!(((&p * &a).transpose() - &p * &a).norm() < 1e-8);
    }

    #[test]
    fn pinv_involution_full_rank() {
        let mut r = rng(34);
        let a = random_matrix(4, 4, &mut r) + DMatrix::identity(4, 4) * 2.0;
        let back = pinv(&pinv(&a, DEFAULT_RANK_TOL).unwrap(), DEFAULT_RANK_TOL).unwrap();
        assert!((back - &a).norm() < 1e-8 * a.norm());
    }

    #[test]
    fn eig_diagonal() {
        let m = DMatrix::from_partial_diagonal(2, 2, &[2.0, 3.0]);
        let e = eig_diagonalizable(&m, DEFAULT_RANK_TOL, DEFAULT_EIG_IMAG_TOL).unwrap();
        assert_eq!(e.effective_rank, 2);
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 2.0).abs() < 1e-12);
        assert!((e.vectors.column(0)[1].abs() - 1.0).abs() < 1e-12);
        assert!((e.vectors.column(1)[0].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_rank_one_projector() {
        let mut r = rng(35);
        let u = DVector::from_fn(5, |_, _| r.random::<f64>() - 0.5).normalize();
        let m = &u * u.transpose();
        let e = eig_diagonalizable(&m, DEFAULT_RANK_TOL, DEFAULT_EIG_IMAG_TOL).unwrap();
        assert_eq!(e.effective_rank, 1);
        assert!((e.values[0] - 1.0).abs() < 1e-10);
        assert!(e.vectors.column(0).dot(&u).abs() > 1.0 - 1e-10);
    }

    #[test]
    fn eig_construct_then_recover() {
        // M = U diag(2, 0.5) U^+ from random independent 5x2 U: eigenvectors
        // must match the columns of U up to sign.
        let mut r = rng(36);
        let u = random_matrix(5, 2, &mut r);
        let d = DMatrix::from_partial_diagonal(2, 2, &[2.0, 0.5]);
        let m = &u * d * pinv(&u, DEFAULT_RANK_TOL).unwrap();
        let e = eig_diagonalizable(&m, DEFAULT_RANK_TOL, DEFAULT_EIG_IMAG_TOL).unwrap();
        assert_eq!(e.effective_rank, 2);
        assert!((e.values[0] - 2.0).abs() < 1e-8);
        assert!((e.values[1] - 0.5).abs() < 1e-8);
        for (j, col) in [0usize, 1].iter().enumerate() {
            let got = e.vectors.column(j);
            let want = u.column(*col).normalize();
            assert!(
                got.dot(&want).abs() > 1.0 - 1e-8,
                "cosine {}",
                got.dot(&want).abs()
            );
        }
        // Residual bound from the result invariants.
        for j in 0..2 {
            let v = e.vectors.column(j).clone_owned();
            let res = (&m * &v - &v * e.values[j]).norm();
            assert!(res < 1e-8 * m.norm());
        }
    }

    #[test]
    fn eig_recovers_constructed_diagonal_values() {
        let mut r = rng(37);
        let n = 7;
        let k = 3;
        let u = random_matrix(n, k, &mut r);
        let diag = [3.0, 1.5, 0.7];
        let d = DMatrix::from_partial_diagonal(k, k, &diag);
        let m = &u * d * pinv(&u, DEFAULT_RANK_TOL).unwrap();
        let e = eig_diagonalizable(&m, DEFAULT_RANK_TOL, DEFAULT_EIG_IMAG_TOL).unwrap();
        assert_eq!(e.effective_rank, k);
        for (got, want) in e.values.iter().zip(diag.iter()) {
            assert!((got - want).abs() < 1e-8 * want.abs());
        }
    }

    #[test]
    fn eig_rejects_rotation_spectrum() {
        // A rotation by 90 degrees has eigenvalues +-i; kept eigenvalues are
        // complex far beyond tolerance, which must raise a degeneracy error.
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(
            eig_diagonalizable(&m, DEFAULT_RANK_TOL, DEFAULT_EIG_IMAG_TOL),
            Err(Error::Degeneracy(_))
        ));
    }

    #[test]
    fn eig_zero_matrix() {
        let m = DMatrix::zeros(4, 4);
        let e = eig_diagonalizable(&m, DEFAULT_RANK_TOL, DEFAULT_EIG_IMAG_TOL).unwrap();
        assert_eq!(e.effective_rank, 0);
        assert_eq!(e.vectors.ncols(), 0);
    }

    #[test]
    fn svt_diagonal() {
        let a = DMatrix::from_partial_diagonal(2, 2, &[3.0, 1.0]);
        let z = svt(&a, 2.0).unwrap();
        assert!((z[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(z[(1, 1)].abs() < 1e-12);
    }

    #[test]
    fn svt_zero_threshold_is_identity() {
        let mut r = rng(38);
        let a = random_matrix(3, 4, &mut r);
        assert_eq!(svt(&a, 0.0).unwrap(), a);
    }

    #[test]
    fn svt_minimizes_prox_objective() {
        // Random-probe optimality: the prox objective at the svt output beats
        // 10,000 random perturbations of it.
        let mut r = rng(39);
        let a = random_matrix(2, 2, &mut r);
        let tau = 0.3;
        let z = svt(&a, tau).unwrap();
        let objective = |m: &DMatrix<f64>| -> f64 {
            let nuc: f64 = svd(m).unwrap().s.iter().sum();
            tau * nuc + 0.5 * (m - &a).norm_squared()
        };
        let base = objective(&z);
        for trial in 0..10_000 {
            let scale = if trial % 2 == 0 { 1e-3 } else { 1e-1 };
            let pert = &z + random_matrix(2, 2, &mut r) * scale;
            assert!(objective(&pert) >= base - 1e-12);
        }
    }

    #[test]
    fn lstsq_identity() {
        let a = DMatrix::identity(3, 3);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let sol = lstsq(&a, &b).unwrap();
        assert!((sol.x - b).norm() < 1e-14);
        assert!(!sol.rank_deficient);
    }

    #[test]
    fn lstsq_mean() {
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 3.0]);
        let sol = lstsq(&a, &b).unwrap();
        assert!((sol.x[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lstsq_consistent_system() {
        let mut r = rng(40);
        let a = random_matrix(20, 5, &mut r);
        let x_true = DVector::from_fn(5, |_, _| r.random::<f64>() - 0.5);
        let b = &a * &x_true;
        let sol = lstsq(&a, &b).unwrap();
        assert!(sol.residual < 1e-10 * b.norm());
        assert!((sol.x - x_true).norm() < 1e-9);
    }

    #[test]
    fn lstsq_underdetermined_rejected() {
        let a = DMatrix::zeros(2, 3);
        let b = DVector::zeros(2);
        assert!(matches!(lstsq(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn lstsq_rank_deficient_reports() {
        let mut r = rng(41);
        let col = DVector::from_fn(6, |_, _| r.random::<f64>() - 0.5);
        let mut a = DMatrix::zeros(6, 2);
        a.set_column(0, &col);
        a.set_column(1, &(col * 2.0));
        let b = DVector::from_fn(6, |_, _| r.random::<f64>() - 0.5);
        let sol = lstsq(&a, &b).unwrap();
        assert!(sol.rank_deficient);
        assert_eq!(sol.rank, 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn svt_firmly_nonexpansive(seed in 0u64..1000, tau in 0.0f64..2.0) {
            let mut r = rng(seed);
            let a = random_matrix(4, 3, &mut r);
            let b = random_matrix(4, 3, &mut r);
            let za = svt(&a, tau).unwrap();
            let zb = svt(&b, tau).unwrap();
            prop_assert!((za - zb).norm() <= (a - b).norm() + 1e-12);
        }

        #[test]
        fn eig_construct_identity_random(seed in 0u64..1000) {
            let mut r = rng(seed);
            let n = 6;
            let k = 2;
            let u = random_matrix(n, k, &mut r);
            // Distinct positive diagonal.
            let d0 = 1.0 + r.random::<f64>();
            let d1 = 3.0 + r.random::<f64>();
            let d = DMatrix::from_partial_diagonal(k, k, &[d1, d0]);
            let m = &u * d * pinv(&u, DEFAULT_RANK_TOL).unwrap();
            let e = eig_diagonalizable(&m, DEFAULT_RANK_TOL, DEFAULT_EIG_IMAG_TOL).unwrap();
            prop_assert_eq!(e.effective_rank, k);
            prop_assert!((e.values[0] - d1).abs() < 1e-8 * d1);
            prop_assert!((e.values[1] - d0).abs() < 1e-8 * d0);
        }
    }
}
