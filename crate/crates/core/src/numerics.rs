//! Dense numerical kernels shared by every CCA variant: symmetric and
//! generalized symmetric-definite eigensolvers, thin SVD, inverse square
//! roots of SPD matrices, pivoted incomplete Cholesky (partial Gram-Schmidt)
//! and chi-squared quantiles.
//!
//! Ordering is always descending. Eigen- and singular vectors follow one sign
//! convention: the largest-magnitude component of each vector is positive,
//! with near-ties resolved in favour of the lowest index.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{CcaError, Result};

/// Relative symmetry tolerance accepted by [`SymMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Matrices with `min_eig <= COND_LIMIT_INV * max_eig` are treated as singular.
pub const COND_LIMIT_INV: f64 = 1e-10;

/// Condition estimate beyond which a block is considered singular.
pub const MAX_CONDITION: f64 = 1e10;

/// A finite, symmetric real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Validates symmetry to a relative tolerance of [`SYMMETRY_TOL`] and
    /// stores the exactly symmetrized matrix.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(CcaError::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(CcaError::NonFinite);
        }
        let scale = m.amax().max(1.0);
        let tolerance = SYMMETRY_TOL * scale;
        let n = m.nrows();
        let mut max_asymmetry = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                max_asymmetry = max_asymmetry.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if max_asymmetry > tolerance {
            return Err(CcaError::NotSymmetric {
                max_asymmetry,
                tolerance,
            });
        }
        Ok(Self::symmetrize(m))
    }

    /// Builds `(m + mᵀ)/2` without a tolerance check. Intended for products
    /// that are symmetric in exact arithmetic (e.g. `XᵀX`).
    pub fn from_product(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(CcaError::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(CcaError::NonFinite);
        }
        Ok(Self::symmetrize(m))
    }

    fn symmetrize(m: DMatrix<f64>) -> Self {
        let sym = (&m + m.transpose()) * 0.5;
        SymMatrix(sym)
    }

    pub fn identity(order: usize) -> Self {
        SymMatrix(DMatrix::identity(order, order))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// `self + c·I`.
    pub fn add_ridge(&self, c: f64) -> SymMatrix {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += c;
        }
        SymMatrix(m)
    }
}

impl Deref for SymMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Eigenpairs sorted by descending eigenvalue; column `i` of `eigenvectors`
/// belongs to `eigenvalues[i]`.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

/// Thin SVD `M = U diag(S) Vᵀ` with descending singular values.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

/// Flips `v` so its largest-magnitude entry is positive. Entries within a
/// relative 1e-10 of the maximum count as ties; the lowest index wins.
/// Returns the sign that was applied.
pub fn orient_sign(v: &mut [f64]) -> f64 {
    let max_abs = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max_abs == 0.0 {
        return 1.0;
    }
    let lead = v
        .iter()
        .position(|x| x.abs() >= max_abs * (1.0 - 1e-10))
        .unwrap_or(0);
    if v[lead] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
        -1.0
    } else {
        1.0
    }
}

fn orient_columns(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        orient_sign(col.as_mut_slice());
    }
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    // Stable sort keeps first occurrence first on exact ties.
    idx.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    idx
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
pub fn sym_eig(a: &SymMatrix) -> EigenResult {
    let n = a.order();
    if n == 0 {
        return EigenResult {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
        };
    }
    let decomposition = SymmetricEigen::new(a.matrix().clone());
    let order = descending_order(decomposition.eigenvalues.as_slice());
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| decomposition.eigenvalues[i]));
    let mut eigenvectors = decomposition.eigenvectors.select_columns(&order);
    for mut col in eigenvectors.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    orient_columns(&mut eigenvectors);
    EigenResult {
        eigenvalues,
        eigenvectors,
    }
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eigen_range(a: &SymMatrix) -> (f64, f64) {
    let values = SymmetricEigen::new(a.matrix().clone()).eigenvalues;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Solves `A v = λ B v` for symmetric `A` and symmetric positive-definite `B`.
///
/// The pencil is reduced to the standard problem `B^{-1/2} A B^{-1/2} y = λ y`
/// and mapped back with `v = B^{-1/2} y`, so eigenvectors come out
/// B-normalised (`vᵀ B v = 1`).
pub fn gen_eig_sym(a: &SymMatrix, b: &SymMatrix) -> Result<EigenResult> {
    if a.order() != b.order() {
        return Err(CcaError::DimensionMismatch(format!(
            "pencil matrices have orders {} and {}",
            a.order(),
            b.order()
        )));
    }
    let b_inv_sqrt = inv_sqrt_spd_named(b, "right-hand pencil matrix B")?;
    let reduced = SymMatrix::from_product(b_inv_sqrt.matrix() * a.matrix() * b_inv_sqrt.matrix())?;
    let standard = sym_eig(&reduced);
    let mut eigenvectors = b_inv_sqrt.matrix() * standard.eigenvectors;
    orient_columns(&mut eigenvectors);
    Ok(EigenResult {
        eigenvalues: standard.eigenvalues,
        eigenvectors,
    })
}

/// Thin singular value decomposition with descending singular values.
pub fn svd(m: &DMatrix<f64>) -> Result<SvdResult> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(CcaError::NonFinite);
    }
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Ok(SvdResult {
            u: DMatrix::zeros(m.nrows(), 0),
            singular_values: DVector::zeros(0),
            v: DMatrix::zeros(m.ncols(), 0),
        });
    }
    let decomposition = SVD::new(m.clone(), true, true);
    let u_all = decomposition.u.expect("left singular vectors requested");
    let v_t = decomposition.v_t.expect("right singular vectors requested");
    let order = descending_order(decomposition.singular_values.as_slice());
    let singular_values =
        DVector::from_iterator(k, order.iter().map(|&i| decomposition.singular_values[i].max(0.0)));
    let mut u = u_all.select_columns(&order);
    let mut v = v_t.transpose().select_columns(&order);
    for j in 0..k {
        let sign = orient_sign(u.column_mut(j).as_mut_slice());
        if sign < 0.0 {
            v.column_mut(j).neg_mut();
        }
    }
    Ok(SvdResult {
        u,
        singular_values,
        v,
    })
}

/// Symmetric `X` with `X A X = I` for symmetric positive-definite `A`.
pub fn inv_sqrt_spd(a: &SymMatrix) -> Result<SymMatrix> {
    inv_sqrt_spd_named(a, "matrix")
}

/// As [`inv_sqrt_spd`], naming the block in the error message.
pub fn inv_sqrt_spd_named(a: &SymMatrix, block: &str) -> Result<SymMatrix> {
    let eig = sym_eig(a);
    let n = a.order();
    if n == 0 {
        return Ok(SymMatrix::identity(0));
    }
    let max = eig.eigenvalues[0];
    let min = eig.eigenvalues[n - 1];
    if !(max > 0.0) || min <= COND_LIMIT_INV * max {
        return Err(CcaError::NotPositiveDefinite {
            block: block.to_string(),
            min_eigenvalue: min,
            max_eigenvalue: max,
        });
    }
    let scale = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let v = &eig.eigenvectors;
    let x = v * DMatrix::from_diagonal(&scale) * v.transpose();
    SymMatrix::from_product(x)
}

/// Checks that a block is well conditioned enough to invert. On failure,
/// reports the smallest ridge `c` for which `block + c·I` would pass.
pub fn check_invertible(a: &SymMatrix, block: &str) -> Result<()> {
    if a.order() == 0 {
        return Ok(());
    }
    let (min, max) = eigen_range(a);
    if max > 0.0 && min > COND_LIMIT_INV * max {
        return Ok(());
    }
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    // (max + c) / (min + c) <= 1e10  <=>  c >= (max - 1e10 * min) / (1e10 - 1)
    let min_ridge = ((max - MAX_CONDITION * min) / (MAX_CONDITION - 1.0)).max(0.0);
    Err(CcaError::SingularBlock {
        block: block.to_string(),
        condition,
        min_ridge,
    })
}

/// Lower-trapezoidal factor `R` (n × m) with `K ≈ R Rᵀ`.
#[derive(Debug, Clone)]
pub struct PgsoFactor {
    pub r: DMatrix<f64>,
    /// Pivot row chosen for each column, in selection order.
    pub pivots: Vec<usize>,
    /// Trace of the residual `K - R Rᵀ` (its trace norm, as the residual is PSD).
    pub residual_trace: f64,
}

impl PgsoFactor {
    pub fn rank(&self) -> usize {
        self.r.ncols()
    }
}

/// Partial Gram-Schmidt orthogonalisation (pivoted incomplete Cholesky).
///
/// Greedily pivots on the largest remaining residual diagonal and stops once
/// the residual trace drops to `eta`, or when the largest remaining pivot is
/// zero to working precision.
pub fn partial_gram_schmidt(k: &SymMatrix, eta: f64) -> Result<PgsoFactor> {
    if !(eta >= 0.0) {
        return Err(CcaError::InvalidArgument(format!(
            "PGSO precision eta must be >= 0, got {eta}"
        )));
    }
    let n = k.order();
    let mut diag: Vec<f64> = (0..n).map(|i| k[(i, i)]).collect();
    let scale = diag.iter().fold(0.0_f64, |m, d| m.max(d.abs())).max(1.0);
    let psd_tol = -1e-10 * scale;
    let zero_pivot = (n as f64) * f64::EPSILON * scale;

    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut pivots = Vec::new();
    let mut used = vec![false; n];
    let mut residual_trace: f64 = diag.iter().sum();

    while columns.len() < n && residual_trace > eta {
        let (pivot, &pivot_value) = diag
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("fewer pivots than rows");
        if let Some((index, &value)) = diag.iter().enumerate().find(|(_, &d)| d < psd_tol) {
            return Err(CcaError::PsdViolation { index, value });
        }
        if pivot_value <= zero_pivot {
            break;
        }
        let nu = pivot_value.sqrt();
        let mut col: Vec<f64> = (0..n).map(|t| k[(t, pivot)]).collect();
        for prev in &columns {
            let coef = prev[pivot];
            if coef != 0.0 {
                col.iter_mut().zip(prev).for_each(|(c, p)| *c -= coef * p);
            }
        }
        col.iter_mut().for_each(|c| *c /= nu);
        for &p in &pivots {
            col[p] = 0.0;
        }
        col[pivot] = nu;
        for (d, c) in diag.iter_mut().zip(&col) {
            *d -= c * c;
        }
        diag[pivot] = 0.0;
        for &p in &pivots {
            diag[p] = 0.0;
        }
        used[pivot] = true;
        pivots.push(pivot);
        columns.push(col);
        residual_trace = diag.iter().sum();
    }
    if let Some((index, &value)) = diag.iter().enumerate().find(|(_, &d)| d < psd_tol) {
        return Err(CcaError::PsdViolation { index, value });
    }

    let m = columns.len();
    let r = DMatrix::from_fn(n, m, |i, j| columns[j][i]);
    Ok(PgsoFactor {
        r,
        pivots,
        residual_trace: residual_trace.max(0.0),
    })
}

// Regularised incomplete gamma, series / continued fraction.
const GAMMA_EPS: f64 = 1e-10;
const GAMMA_MAX_ITER: usize = 10_000;

/// Natural log of the gamma function (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularised lower incomplete gamma `P(a, x)`.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut denom = a;
        for _ in 0..GAMMA_MAX_ITER {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if term.abs() < sum.abs() * GAMMA_EPS {
                break;
            }
        }
        (sum.ln() + log_prefix).exp().min(1.0)
    } else {
        // Modified Lentz evaluation of the continued fraction for Q(a, x).
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < GAMMA_EPS {
                break;
            }
        }
        let q = (log_prefix.exp() * h).clamp(0.0, 1.0);
        1.0 - q
    }
}

/// Chi-squared CDF with `df` degrees of freedom.
pub fn chi2_cdf(x: f64, df: usize) -> f64 {
    regularized_gamma_p(df as f64 / 2.0, x / 2.0)
}

/// Inverse chi-squared CDF: the `x` with `chi2_cdf(x, df) = p`.
///
/// Brackets the root by doubling, then bisects to full double precision.
pub fn chi2_quantile(p: f64, df: usize) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(CcaError::ProbabilityOutOfRange(p));
    }
    if df == 0 {
        return Err(CcaError::InvalidArgument(
            "chi-squared degrees of freedom must be >= 1".into(),
        ));
    }
    let mut lo = 0.0;
    let mut hi = (df as f64).max(1.0);
    while chi2_cdf(hi, df) < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if chi2_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sym(rows: &[&[f64]]) -> SymMatrix {
        let n = rows.len();
        SymMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j])).unwrap()
    }

    fn random_sym(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::from_product(&m + m.transpose()).unwrap()
    }

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
        let m = DMatrix::from_fn(n, n + 3, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::from_product(&m * m.transpose()).unwrap().add_ridge(0.1)
    }

    #[test]
    fn sym_eig_diagonal() {
        let eig = sym_eig(&sym(&[&[2.0, 0.0], &[0.0, 1.0]]));
        assert!((eig.eigenvalues[0] - 2.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sym_eig_swap_matrix_vectors_and_signs() {
        let eig = sym_eig(&sym(&[&[0.0, 1.0], &[1.0, 0.0]]));
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] + 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = &eig.eigenvectors;
        assert!((v[(0, 0)] - h).abs() < 1e-12 && (v[(1, 0)] - h).abs() < 1e-12);
        assert!((v[(0, 1)] - h).abs() < 1e-12 && (v[(1, 1)] + h).abs() < 1e-12);
    }

    #[test]
    fn sym_eig_characteristic_polynomial() {
        let eig = sym_eig(&sym(&[&[2.0, 1.0], &[1.0, 2.0]]));
        assert!((eig.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_symmetric_input_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.1, 1.0]);
        assert!(matches!(SymMatrix::new(m), Err(CcaError::NotSymmetric { .. })));
    }

    #[test]
    fn sym_eig_residuals_and_unit_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 2, 5, 17, 40] {
            let a = random_sym(n, &mut rng);
            let eig = sym_eig(&a);
            let norm_a = a.norm();
            for i in 0..n {
                let v = eig.eigenvectors.column(i);
                assert!((v.norm() - 1.0).abs() < 1e-12);
                let resid = a.matrix() * v - v * eig.eigenvalues[i];
                assert!(resid.norm() <= 1e-8 * norm_a);
                if i > 0 {
                    assert!(eig.eigenvalues[i - 1] >= eig.eigenvalues[i]);
                }
            }
        }
    }

    #[test]
    fn gen_eig_reduces_to_standard_with_identity() {
        let a = sym(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let eig = gen_eig_sym(&a, &SymMatrix::identity(2)).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] + 1.0).abs() < 1e-14);

        let a = sym(&[&[0.0, 0.5], &[0.5, 0.0]]);
        let eig = gen_eig_sym(&a, &SymMatrix::identity(2)).unwrap();
        assert!((eig.eigenvalues[0] - 0.5).abs() < 1e-14);
        assert!((eig.eigenvalues[1] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn gen_eig_identity_pencil() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = random_spd(8, &mut rng);
        let eig = gen_eig_sym(&b, &b).unwrap();
        for l in eig.eigenvalues.iter() {
            assert!((l - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn gen_eig_residual_and_b_normalisation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_sym(12, &mut rng);
        let b = random_spd(12, &mut rng);
        let eig = gen_eig_sym(&a, &b).unwrap();
        let scale = a.norm() + b.norm();
        for i in 0..12 {
            let v = eig.eigenvectors.column(i);
            let resid = a.matrix() * v - (b.matrix() * v) * eig.eigenvalues[i];
            assert!(resid.norm() <= 1e-8 * scale);
            assert!(((v.transpose() * b.matrix() * v)[0] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn gen_eig_rejects_indefinite_b() {
        let a = SymMatrix::identity(2);
        let b = sym(&[&[1.0, 0.0], &[0.0, -1.0]]);
        assert!(matches!(
            gen_eig_sym(&a, &b),
            Err(CcaError::NotPositiveDefinite { .. })
        ));
        let b = sym(&[&[1.0, 0.0], &[0.0, 1e-13]]);
        assert!(gen_eig_sym(&a, &b).is_err());
    }

    #[test]
    fn svd_examples() {
        let s = svd(&DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -2.0])).unwrap();
        assert!((s.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((s.singular_values[1] - 2.0).abs() < 1e-14);

        let s = svd(&DMatrix::zeros(3, 2)).unwrap();
        assert!(s.singular_values.iter().all(|&x| x == 0.0));

        let u = DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let v = DVector::from_vec(vec![0.0, 1.0]);
        let s = svd(&(&u * v.transpose())).unwrap();
        assert!((s.singular_values[0] - 1.0).abs() < 1e-14);
        assert!(s.singular_values[1].abs() < 1e-14);
    }

    #[test]
    fn svd_reconstruction_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (r, c) in [(7, 3), (3, 7), (10, 10)] {
            let m = DMatrix::from_fn(r, c, |_, _| rng.random_range(-2.0..2.0));
            let s = svd(&m).unwrap();
            let k = r.min(c);
            let recon = &s.u * DMatrix::from_diagonal(&s.singular_values) * s.v.transpose();
            assert!((recon - &m).norm() <= 1e-8 * m.norm());
            assert!((s.u.transpose() * &s.u - DMatrix::identity(k, k)).amax() < 1e-8);
            assert!((s.v.transpose() * &s.v - DMatrix::identity(k, k)).amax() < 1e-8);
        }
    }

    #[test]
    fn inv_sqrt_examples() {
        let x = inv_sqrt_spd(&sym(&[&[4.0, 0.0], &[0.0, 9.0]])).unwrap();
        assert!((x[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((x[(1, 1)] - 1.0 / 3.0).abs() < 1e-14);
        assert!(x[(0, 1)].abs() < 1e-14);

        let x = inv_sqrt_spd(&SymMatrix::identity(3)).unwrap();
        assert!((x.matrix() - DMatrix::identity(3, 3)).amax() < 1e-14);
    }

    #[test]
    fn inv_sqrt_eigen_reconstruction_oracle() {
        // Oracle: [[2,1],[1,2]] = Q diag(3,1) Qᵀ with Q = [[1,1],[1,-1]]/√2,
        // so A^{-1/2} = Q diag(1/√3, 1) Qᵀ.
        let a = sym(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let x = inv_sqrt_spd(&a).unwrap();
        let s3 = 1.0 / 3.0_f64.sqrt();
        let expected_diag = 0.5 * (s3 + 1.0);
        let expected_off = 0.5 * (s3 - 1.0);
        assert!((x[(0, 0)] - expected_diag).abs() < 1e-12);
        assert!((x[(0, 1)] - expected_off).abs() < 1e-12);
        let xax = x.matrix() * a.matrix() * x.matrix();
        assert!((xax - DMatrix::identity(2, 2)).amax() < 1e-8);
    }

    #[test]
    fn inv_sqrt_rejects_singular() {
        let a = sym(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(
            inv_sqrt_spd(&a),
            Err(CcaError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn check_invertible_reports_ridge() {
        let a = sym(&[&[1.0, 1.0], &[1.0, 1.0]]);
        match check_invertible(&a, "C_aa") {
            Err(CcaError::SingularBlock { block, min_ridge, .. }) => {
                assert_eq!(block, "C_aa");
                assert!(min_ridge > 0.0);
                assert!(check_invertible(&a.add_ridge(min_ridge * 1.01), "C_aa").is_ok());
            }
            other => panic!("expected singular block, got {other:?}"),
        }
    }

    #[test]
    fn pgso_identity_full_rank() {
        let f = partial_gram_schmidt(&SymMatrix::identity(3), 0.0).unwrap();
        assert_eq!(f.rank(), 3);
        assert!((&f.r * f.r.transpose() - DMatrix::identity(3, 3)).amax() < 1e-14);
    }

    #[test]
    fn pgso_rank_one() {
        let u = DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5]);
        let k = SymMatrix::from_product(&u * u.transpose()).unwrap();
        let f = partial_gram_schmidt(&k, 1e-12).unwrap();
        assert_eq!(f.rank(), 1);
        assert!((&f.r * f.r.transpose() - k.matrix()).amax() < 1e-12);
    }

    #[test]
    fn pgso_low_rank_matches_full_cholesky_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = DMatrix::from_fn(50, 5, |_, _| rng.random_range(-1.0..1.0));
        let k = SymMatrix::from_product(&g * g.transpose()).unwrap();
        let f = partial_gram_schmidt(&k, 1e-10).unwrap();
        assert!(f.rank() <= 6);
        let resid = k.matrix() - &f.r * f.r.transpose();
        let resid_trace: f64 = (0..50).map(|i| resid[(i, i)]).sum();
        assert!(resid_trace <= 1e-10);

        // Full Cholesky of the pivoted leading block reproduces the same factor
        // rows on the pivot set.
        let piv = &f.pivots;
        let block = DMatrix::from_fn(piv.len(), piv.len(), |i, j| k[(piv[i], piv[j])]);
        let chol = block.cholesky().expect("pivot block is SPD");
        let l = chol.l();
        for (i, &pi) in piv.iter().enumerate() {
            for j in 0..piv.len() {
                assert!((f.r[(pi, j)] - l[(i, j)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn pgso_full_rank_reproduces_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let k = random_spd(20, &mut rng);
        let f = partial_gram_schmidt(&k, 0.0).unwrap();
        assert_eq!(f.rank(), 20);
        assert!((&f.r * f.r.transpose() - k.matrix()).amax() < 1e-8);
    }

    #[test]
    fn pgso_rejects_indefinite() {
        let k = sym(&[&[1.0, 0.0], &[0.0, -1.0]]);
        assert!(matches!(
            partial_gram_schmidt(&k, 0.0),
            Err(CcaError::PsdViolation { .. })
        ));
    }

    #[test]
    fn chi2_quantile_tabulated_values() {
        assert!((chi2_quantile(0.99, 12).unwrap() - 26.22).abs() < 0.05);
        assert!((chi2_quantile(0.99, 6).unwrap() - 16.81).abs() < 0.05);
        assert!((chi2_quantile(0.99, 2).unwrap() - 9.21).abs() < 0.05);
    }

    #[test]
    fn chi2_quantile_inverts_cdf() {
        for df in [1, 2, 5, 12, 40, 150] {
            for p in [0.001, 0.05, 0.5, 0.95, 0.99, 0.9999] {
                let x = chi2_quantile(p, df).unwrap();
                assert!((chi2_cdf(x, df) - p).abs() < 1e-6, "df={df} p={p}");
            }
        }
    }

    #[test]
    fn chi2_quantile_rejects_bad_input() {
        assert!(matches!(chi2_quantile(0.0, 3), Err(CcaError::ProbabilityOutOfRange(_))));
        assert!(matches!(chi2_quantile(1.0, 3), Err(CcaError::ProbabilityOutOfRange(_))));
        assert!(chi2_quantile(0.5, 0).is_err());
    }

    #[test]
    fn chi2_cdf_matches_statrs() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        for df in [1usize, 3, 7, 20, 90] {
            let reference = ChiSquared::new(df as f64).unwrap();
            for x in [0.1, 1.0, 4.5, 10.0, 33.3, 120.0] {
                assert!((chi2_cdf(x, df) - reference.cdf(x)).abs() < 1e-9, "df={df} x={x}");
            }
        }
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-13);
        assert!((ln_gamma(5.0) - 24.0_f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }
}
