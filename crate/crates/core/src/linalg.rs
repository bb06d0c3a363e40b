//! Small dense Hermitian kernels.
//!
//! Everything here works on `DMatrix<Complex64>` and targets the tiny
//! dimensions that show up in relay problems (a handful of antennas per
//! node). Conditional covariances are generalized Schur complements with a
//! thresholded pseudoinverse, and pairs of covariances are simultaneously
//! diagonalized by congruence.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{precondition, Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;

/// Relative eigenvalue threshold for pseudoinverses inside Schur complements.
pub const PINV_REL_TOL: f64 = 1e-12;
/// Relative tolerance on `M - M†` for Hermitian inputs.
pub const HERMITIAN_REL_TOL: f64 = 1e-12;
/// Negative eigenvalues down to `-PSD_REL_SLACK * λ_max` still count as PSD.
pub const PSD_REL_SLACK: f64 = 1e-9;
/// Relative floor for positive definiteness in [`simdiag_congruence`].
pub const PD_REL_TOL: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { c(0.0, 0.0) })
}

/// Real matrix given in row-major order.
pub fn real(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols);
    CMatrix::from_fn(rows, cols, |i, j| c(entries[i * cols + j], 0.0))
}

/// `(M + M†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Real part of `tr(A† B)`, the Frobenius inner product on Hermitian matrices.
pub fn inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

pub fn check_hermitian(m: &CMatrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "{what} is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let skew = (m - m.adjoint()).norm();
    if skew > HERMITIAN_REL_TOL * scale * 2.0 {
        return precondition(format!("{what} is not Hermitian (skew {skew:.3e})"));
    }
    Ok(())
}

pub fn check_psd(m: &CMatrix, what: &str) -> Result<()> {
    check_hermitian(m, what)?;
    if m.nrows() == 0 {
        return Ok(());
    }
    let eig = eigh(m);
    let max = eig.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let min = *eig.values.last().unwrap();
    if min < -PSD_REL_SLACK * max {
        return precondition(format!("{what} is indefinite (min eigenvalue {min:.3e})"));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            for i in 0..n {
                scaled[(i, j)] *= fv;
            }
        }
        hermitian_part(&(scaled * self.vectors.adjoint()))
    }
}

pub fn eigh(m: &CMatrix) -> HermitianEigen {
    let n = m.nrows();
    if n == 0 {
        return HermitianEigen {
            values: Vec::new(),
            vectors: zeros(0, 0),
        };
    }
    let se = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep the solver's order
    order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
    let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| se.eigenvectors[(i, order[j])]);
    HermitianEigen { values, vectors }
}

/// Moore–Penrose pseudoinverse of a Hermitian matrix by eigenvalue
/// thresholding at `rel_tol * max|λ|`.
pub fn pinv_hermitian(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let eig = eigh(m);
    let max = eig.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if max == 0.0 {
        return zeros(m.nrows(), m.ncols());
    }
    let cut = rel_tol * max;
    eig.map(|v| if v.abs() > cut { 1.0 / v } else { 0.0 })
}

/// Hermitian square root of a PSD matrix (negative rounding clipped).
pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    eigh(m).map(|v| v.max(0.0).sqrt())
}

/// `log2 |M|` for positive definite `M`; `None` when Cholesky fails.
pub fn logdet2_pd(m: &CMatrix) -> Option<f64> {
    if m.nrows() == 0 {
        return Some(0.0);
    }
    let chol = Cholesky::new(hermitian_part(m))?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        let d = l[(i, i)].re;
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        acc += d.log2();
    }
    Some(2.0 * acc)
}

/// `log2 |M|` for PSD `M`, falling back to eigenvalues (and `-inf`) when the
/// matrix is numerically singular.
pub fn logdet2_psd(m: &CMatrix) -> f64 {
    logdet2_pd(m).unwrap_or_else(|| {
        eigh(m)
            .values
            .iter()
            .map(|&v| if v > 0.0 { v.log2() } else { f64::NEG_INFINITY })
            .sum()
    })
}

pub fn inverse_pd(m: &CMatrix) -> Option<CMatrix> {
    if m.nrows() == 0 {
        return Some(zeros(0, 0));
    }
    Cholesky::new(hermitian_part(m)).map(|ch| hermitian_part(&ch.inverse()))
}

/// Generalized Schur complement `S_U − S_UV · pinv(S_V) · S_VU` with no input
/// validation. The first `split` coordinates are retained.
pub(crate) fn schur_unchecked(joint: &CMatrix, split: usize, rel_tol: f64) -> CMatrix {
    let n = joint.nrows();
    let keep = joint.view((0, 0), (split, split)).into_owned();
    if split == n {
        return hermitian_part(&keep);
    }
    let cross = joint.view((0, split), (split, n - split)).into_owned();
    let cond = joint.view((split, split), (n - split, n - split)).into_owned();
    let pinv = pinv_hermitian(&cond, rel_tol);
    hermitian_part(&(keep - &cross * pinv * cross.adjoint()))
}

/// Covariance of the first `block_split` coordinates given the rest.
///
/// `joint` must be Hermitian PSD.
pub fn conditional_covariance(joint: &CMatrix, block_split: usize) -> Result<CMatrix> {
    check_psd(joint, "joint covariance")?;
    if block_split > joint.nrows() {
        return Err(Error::Dimension(format!(
            "block split {block_split} exceeds dimension {}",
            joint.nrows()
        )));
    }
    Ok(schur_unchecked(joint, block_split, PINV_REL_TOL))
}

/// Congruence `C` with `C† A C = I` and `C† B C = diag(λ)`, `λ` descending.
#[derive(Debug, Clone)]
pub struct GenEigSystem {
    pub transform: CMatrix,
    pub eigenvalues: Vec<f64>,
}

impl GenEigSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Simultaneous diagonalization of a PD pencil `(A, B)` with `B ⪰ A`.
///
/// Factors `A = G G†`, eigendecomposes `G⁻¹ B G⁻† = V Λ V†` and returns
/// `C = G⁻† V`. Eigenvalues are floored at exactly 1.
pub fn simdiag_congruence(a: &CMatrix, b: &CMatrix) -> Result<GenEigSystem> {
    check_hermitian(b, "B")?;
    let bmax = if b.nrows() == 0 { 0.0 } else { eigh(b).values[0].abs() };
    simdiag_with_slack(a, b, PSD_REL_SLACK * bmax)
}

/// As [`simdiag_congruence`], tolerating `B − A` eigenvalues down to `-slack`.
pub(crate) fn simdiag_with_slack(a: &CMatrix, b: &CMatrix, slack: f64) -> Result<GenEigSystem> {
    check_hermitian(a, "A")?;
    check_hermitian(b, "B")?;
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "pencil sizes differ: {} vs {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(GenEigSystem {
            transform: zeros(0, 0),
            eigenvalues: Vec::new(),
        });
    }
    let ea = eigh(a);
    let amax = ea.values[0].abs();
    let amin = ea.values[n - 1];
    if !(amin > PD_REL_TOL * amax) {
        return Err(Error::Singular(format!(
            "A is not positive definite (eigenvalues in [{amin:.3e}, {amax:.3e}])"
        )));
    }
    let diff = eigh(&(b - a));
    if diff.values[n - 1] < -slack {
        return precondition(format!(
            "B - A is indefinite (min eigenvalue {:.3e})",
            diff.values[n - 1]
        ));
    }

    let g = Cholesky::new(hermitian_part(a))
        .ok_or_else(|| Error::Singular("Cholesky of A failed".into()))?
        .unpack();
    // M = G⁻¹ B G⁻†
    let gib = g
        .solve_lower_triangular(b)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let m = g
        .solve_lower_triangular(&gib.adjoint())
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let em = eigh(&m);
    let transform = g
        .adjoint()
        .solve_upper_triangular(&em.vectors)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let eigenvalues = em.values.iter().map(|&v| v.max(1.0)).collect();
    Ok(GenEigSystem {
        transform,
        eigenvalues,
    })
}

/// Number of eigenvalues with magnitude above `rel_tol * max|λ|`.
pub fn numeric_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let eig = eigh(m);
    let max = eig.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if max == 0.0 {
        return 0;
    }
    eig.values.iter().filter(|v| v.abs() > rel_tol * max).count()
}

/// Number of eigenvalues with magnitude above an absolute cutoff.
pub(crate) fn rank_above(m: &CMatrix, cutoff: f64) -> usize {
    eigh(m).values.iter().filter(|v| v.abs() > cutoff).count()
}

/// Frobenius projection onto `{S ⪰ 0, tr S ≤ P}`.
pub fn project_trace_psd(m: &CMatrix, power: f64) -> CMatrix {
    let eig = eigh(m);
    let clipped: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= power {
        return eig.map(|v| v.max(0.0));
    }
    // values are sorted descending; find k with λ_k > τ ≥ λ_{k+1}
    let mut level = 0.0;
    let mut prefix = 0.0;
    for (k, &v) in clipped.iter().enumerate() {
        prefix += v;
        let tau = (prefix - power) / (k + 1) as f64;
        let next = clipped.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY);
        if v > tau && tau >= next {
            level = tau;
            break;
        }
    }
    eig.map(|v| (v - level).max(0.0))
}

/// Orthonormal basis (columns) of the null space of `m`, via SVD with
/// singular values below `rel_tol * σ_max` treated as zero.
pub fn null_space(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let cols = m.ncols();
    if m.nrows() == 0 || cols == 0 {
        return identity(cols);
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &v| a.max(v));
    // complement of the retained row space
    let mut proj = identity(cols);
    for (i, &sv) in svd.singular_values.iter().enumerate() {
        if sv > rel_tol * smax {
            let row = v_t.row(i);
            proj -= row.adjoint() * row;
        }
    }
    let eig = eigh(&proj);
    let idx: Vec<usize> = (0..cols).filter(|&k| eig.values[k] > 0.5).collect();
    CMatrix::from_fn(cols, idx.len(), |i, j| eig.vectors[(i, idx[j])])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &CMatrix, b: &CMatrix, tol: f64) {
        let d = (a - b).norm();
        assert!(d <= tol, "difference {d:.3e} > {tol:.3e}\n{a}\n{b}");
    }

    #[test]
    fn schur_of_block_diagonal_is_the_kept_block() {
        let joint = real(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 4.0]);
        let out = conditional_covariance(&joint, 2).unwrap();
        assert_close(&out, &real(2, 2, &[2.0, 0.5, 0.5, 1.0]), 1e-14);
    }

    #[test]
    fn schur_two_by_two() {
        // 2 - 1·1⁻¹·1
        let out = conditional_covariance(&real(2, 2, &[2.0, 1.0, 1.0, 1.0]), 1).unwrap();
        assert!((out[(0, 0)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn conditioning_on_a_copy_gives_zero() {
        let s = real(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let mut joint = zeros(4, 4);
        for bi in 0..2 {
            for bj in 0..2 {
                joint.view_mut((2 * bi, 2 * bj), (2, 2)).copy_from(&s);
            }
        }
        let out = conditional_covariance(&joint, 2).unwrap();
        assert!(out.norm() < 1e-12);
    }

    #[test]
    fn schur_rejects_indefinite_and_non_hermitian() {
        assert!(conditional_covariance(&real(2, 2, &[1.0, 2.0, 2.0, 1.0]), 1).is_err());
        assert!(conditional_covariance(&real(2, 2, &[1.0, 0.5, 0.0, 1.0]), 1).is_err());
    }

    #[test]
    fn simdiag_identity_pencil() {
        let g = simdiag_congruence(&identity(3), &identity(3)).unwrap();
        assert_eq!(g.eigenvalues, vec![1.0; 3]);
        assert_close(&(g.transform.adjoint() * &g.transform), &identity(3), 1e-12);
    }

    #[test]
    fn simdiag_diagonal_pencil_is_signed_permutation() {
        let g = simdiag_congruence(&identity(2), &diag(&[2.0, 3.0])).unwrap();
        assert!((g.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((g.eigenvalues[1] - 2.0).abs() < 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                let m = g.transform[(i, j)].norm();
                assert!(m < 1e-12 || (m - 1.0).abs() < 1e-12);
            }
        }
        assert!(g.transform[(1, 0)].norm() > 0.5);
    }

    #[test]
    fn simdiag_rejects_singular_a() {
        let r = simdiag_congruence(&diag(&[1.0, 0.0]), &identity(2));
        assert!(matches!(r, Err(Error::Singular(_))));
    }

    #[test]
    fn simdiag_rejects_b_below_a() {
        let r = simdiag_congruence(&identity(2), &diag(&[2.0, 0.5]));
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn numeric_rank_cases() {
        assert_eq!(numeric_rank(&zeros(3, 3), 1e-9), 0);
        assert_eq!(numeric_rank(&diag(&[1.0, 1e-15]), 1e-9), 1);
        let g = CMatrix::from_fn(4, 2, |i, j| c((i + 2 * j) as f64 * 0.3 + 1.0, (i * j) as f64 - 0.5));
        assert_eq!(numeric_rank(&(g.adjoint() * &g), 1e-9), 2);
        assert_eq!(numeric_rank(&(&g * g.adjoint()), 1e-9), 2);
    }

    #[test]
    fn projection_examples() {
        let feasible = real(2, 2, &[0.5, 0.1, 0.1, 0.3]);
        assert_close(&project_trace_psd(&feasible, 1.0), &feasible, 1e-14);
        assert_close(&project_trace_psd(&diag(&[-1.0, 1.0]), 5.0), &diag(&[0.0, 1.0]), 1e-14);
        assert_close(&project_trace_psd(&diag(&[3.0, 1.0]), 2.0), &diag(&[2.0, 0.0]), 1e-14);
    }

    #[test]
    fn projection_matches_grid_oracle_on_diagonals() {
        // minimize (x-a)²+(y-b)² over x,y ≥ 0, x+y ≤ P on a dense grid
        for &(a, b, p) in &[(3.0, 1.0, 2.0), (0.7, 0.6, 1.0), (-0.3, 2.5, 1.5), (1.2, 1.1, 4.0)] {
            let proj = project_trace_psd(&diag(&[a, b]), p);
            let n = 2000;
            let mut best = (f64::INFINITY, 0.0, 0.0);
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let x = p * i as f64 / n as f64;
                    let y = p * j as f64 / n as f64;
                    let d = (x - a).powi(2) + (y - b).powi(2);
                    if d < best.0 {
                        best = (d, x, y);
                    }
                }
            }
            let step = p / n as f64;
            let (x, y) = (proj[(0, 0)].re, proj[(1, 1)].re);
            assert!((x - best.1).abs() <= 2.0 * step && (y - best.2).abs() <= 2.0 * step);
        }
    }

    #[test]
    fn null_space_is_orthogonal_complement() {
        let m = real(2, 4, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.ncols(), 2);
        assert!((m * &ns).norm() < 1e-12);
        assert_close(&(ns.adjoint() * &ns), &identity(2), 1e-12);
    }

    #[test]
    fn logdet_matches_eigenvalues() {
        let m = real(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let expected = (11.0f64).log2();
        assert!((logdet2_pd(&m).unwrap() - expected).abs() < 1e-13);
        assert_eq!(logdet2_psd(&diag(&[1.0, 0.0])), f64::NEG_INFINITY);
    }
}
