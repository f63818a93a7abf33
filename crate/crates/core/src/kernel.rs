//! Kernel CCA: Gram matrices, centering, the median heuristic, the ridged
//! dual pencil and its PGSO-reduced counterpart for large `n`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::PairedDataset;
use crate::error::{CcaError, Result};
use crate::numerics::{orient_sign, partial_gram_schmidt, svd, sym_eig, SymMatrix, COND_LIMIT_INV};
use crate::regularized::{cv_engine, CvSurface, RegularizationConfig, TestScaling};
use crate::util::{cosine, pearson};

/// Largest `n` for which the full `2n`-order pencil is solved.
pub const MAX_DIRECT_N: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Gaussian { sigma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Gaussian { sigma } if sigma.is_finite() && sigma > 0.0 => Ok(()),
            KernelSpec::Gaussian { sigma } => Err(CcaError::InvalidArgument(format!(
                "gaussian kernel width must be finite and positive, got {sigma}"
            ))),
        }
    }
}

/// Gram matrix of the rows of `x`.
///
/// The gaussian kernel is `exp(-‖x - y‖² / (2σ²))`; its diagonal is exactly 1.
pub fn gram(x: &DMatrix<f64>, spec: KernelSpec) -> Result<SymMatrix> {
    spec.validate()?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(CcaError::NonFinite);
    }
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).iter().copied().collect()).collect();
    let entries: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| match spec {
                    KernelSpec::Linear => dot(&rows[i], &rows[j]),
                    KernelSpec::Gaussian { sigma } => {
                        if i == j {
                            1.0
                        } else {
                            (-squared_distance(&rows[i], &rows[j]) / (2.0 * sigma * sigma)).exp()
                        }
                    }
                })
                .collect()
        })
        .collect();
    SymMatrix::from_product(DMatrix::from_fn(n, n, |i, j| entries[i][j]))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `K - (1/n) j jᵀ K - (1/n) K j jᵀ + (1/n²)(jᵀ K j) j jᵀ`.
pub fn center_gram(k: &SymMatrix) -> SymMatrix {
    let n = k.order();
    if n == 0 {
        return k.clone();
    }
    let nf = n as f64;
    let col_means: Vec<f64> = (0..n).map(|j| k.column(j).sum() / nf).collect();
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).sum() / nf).collect();
    let total = col_means.iter().sum::<f64>() / nf;
    let centered = DMatrix::from_fn(n, n, |i, j| k[(i, j)] - row_means[i] - col_means[j] + total);
    SymMatrix::from_product(centered).expect("centering preserves shape and finiteness")
}

/// Median of the `n(n-1)/2` pairwise Euclidean distances between rows.
pub fn median_heuristic(x: &DMatrix<f64>) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(CcaError::InvalidArgument(
            "median heuristic needs at least two observations".into(),
        ));
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).iter().copied().collect()).collect();
    let mut distances: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let rows = &rows;
            ((i + 1)..n).map(move |j| squared_distance(&rows[i], &rows[j]).sqrt())
        })
        .collect();
    distances.par_sort_unstable_by(|a, b| a.total_cmp(b));
    let m = distances.len();
    let median = if m % 2 == 1 {
        distances[m / 2]
    } else {
        0.5 * (distances[m / 2 - 1] + distances[m / 2])
    };
    if !(median > 0.0) {
        return Err(CcaError::InvalidArgument(
            "median pairwise distance is zero (all observations identical); kernel width must be positive".into(),
        ));
    }
    Ok(median)
}

/// Gram matrices of both views.
#[derive(Debug, Clone)]
pub struct GramPair {
    pub ka: SymMatrix,
    pub kb: SymMatrix,
    pub spec_a: KernelSpec,
    pub spec_b: KernelSpec,
    pub centered: bool,
}

impl GramPair {
    pub fn new(ka: SymMatrix, kb: SymMatrix, spec_a: KernelSpec, spec_b: KernelSpec, centered: bool) -> Result<Self> {
        if ka.order() != kb.order() {
            return Err(CcaError::RowCountMismatch {
                rows_a: ka.order(),
                rows_b: kb.order(),
            });
        }
        Ok(GramPair {
            ka,
            kb,
            spec_a,
            spec_b,
            centered,
        })
    }

    /// Builds (and optionally centers) the Gram matrices of both views.
    pub fn from_data(data: &PairedDataset, spec_a: KernelSpec, spec_b: KernelSpec, center: bool) -> Result<Self> {
        let mut ka = gram(data.view_a(), spec_a)?;
        let mut kb = gram(data.view_b(), spec_b)?;
        if center {
            ka = center_gram(&ka);
            kb = center_gram(&kb);
        }
        GramPair::new(ka, kb, spec_a, spec_b, center)
    }

    /// Centered gaussian Grams with median-heuristic widths.
    pub fn gaussian_median(data: &PairedDataset) -> Result<Self> {
        let spec_a = KernelSpec::Gaussian {
            sigma: median_heuristic(data.view_a())?,
        };
        let spec_b = KernelSpec::Gaussian {
            sigma: median_heuristic(data.view_b())?,
        };
        GramPair::from_data(data, spec_a, spec_b, true)
    }

    pub fn n(&self) -> usize {
        self.ka.order()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMethod {
    Direct,
    Pgso,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelRegularization {
    Ridge { c1: f64, c2: f64 },
    Pgso { kappa: f64, eta_a: f64, eta_b: f64, rank_a: usize, rank_b: usize },
}

/// Dual weights, correlations and unit-norm images `z_a = K_a α`, `z_b = K_b β`.
#[derive(Debug, Clone)]
pub struct KernelCcaModel {
    pub alpha: DMatrix<f64>,
    pub beta: DMatrix<f64>,
    pub correlations: DVector<f64>,
    pub images_a: DMatrix<f64>,
    pub images_b: DMatrix<f64>,
    pub method: KernelMethod,
    pub regularization: KernelRegularization,
}

impl KernelCcaModel {
    pub fn components(&self) -> usize {
        self.correlations.len()
    }
}

fn check_components(n: usize, r: usize) -> Result<()> {
    if r == 0 || r > n {
        return Err(CcaError::InvalidArgument(format!(
            "component count must satisfy 1 <= r <= n = {n}, got {r}"
        )));
    }
    Ok(())
}

/// Scales `alpha`/`beta` so `‖K α‖ = ‖K β‖ = 1`, orients the pair and
/// reports `ρ = ⟨z_a, z_b⟩`.
fn assemble(
    grams: &GramPair,
    mut alpha: DMatrix<f64>,
    mut beta: DMatrix<f64>,
    method: KernelMethod,
    regularization: KernelRegularization,
) -> Result<KernelCcaModel> {
    let r = alpha.ncols();
    let mut images_a = grams.ka.matrix() * &alpha;
    let mut images_b = grams.kb.matrix() * &beta;
    let mut correlations = DVector::zeros(r);
    for i in 0..r {
        let na = images_a.column(i).norm();
        let nb = images_b.column(i).norm();
        if !(na > 0.0 && nb > 0.0) {
            return Err(CcaError::NonFinite);
        }
        let mut za = images_a.column(i) / na;
        let mut zb = images_b.column(i) / nb;
        let mut a = alpha.column(i) / na;
        let mut b = beta.column(i) / nb;
        if orient_sign(za.as_mut_slice()) < 0.0 {
            a.neg_mut();
        }
        if za.dot(&zb) < 0.0 {
            zb.neg_mut();
            b.neg_mut();
        }
        correlations[i] = za.dot(&zb).clamp(0.0, 1.0);
        images_a.set_column(i, &za);
        images_b.set_column(i, &zb);
        alpha.set_column(i, &a);
        beta.set_column(i, &b);
    }
    if correlations.iter().chain(alpha.iter()).chain(beta.iter()).any(|x| !x.is_finite()) {
        return Err(CcaError::NonFinite);
    }
    Ok(KernelCcaModel {
        alpha,
        beta,
        correlations,
        images_a,
        images_b,
        method,
        regularization,
    })
}

/// Inverse of the symmetric positive-definite `K + c·I` through its
/// eigendecomposition.
fn ridged_inverse(k: &SymMatrix, c: f64, block: &str) -> Result<DMatrix<f64>> {
    let eig = sym_eig(k);
    let shifted = eig.eigenvalues.map(|l| l + c);
    let max = shifted.max();
    let min = shifted.min();
    if !(max > 0.0) || min <= COND_LIMIT_INV * max {
        return Err(CcaError::NotPositiveDefinite {
            block: block.to_string(),
            min_eigenvalue: min,
            max_eigenvalue: max,
        });
    }
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&shifted.map(|l| 1.0 / l)) * v.transpose())
}

/// Regularised kernel CCA through the pencil
/// `[[0, K_a K_b], [K_b K_a, 0]] v = ρ [[(K_a + c1 I)², 0], [0, (K_b + c2 I)²]] v`.
///
/// The right-hand side is block diagonal with inverse square root
/// `diag((K_a + c1 I)⁻¹, (K_b + c2 I)⁻¹)`, so the reduced symmetric problem
/// has eigenvalues `±s_i`, the singular values of
/// `M = (K_a + c1 I)⁻¹ K_a K_b (K_b + c2 I)⁻¹`, with eigenvectors built from
/// the singular vector pairs. Components are the `r` largest.
pub fn fit_kernel_cca(grams: &GramPair, c1: f64, c2: f64, r: usize) -> Result<KernelCcaModel> {
    let n = grams.n();
    check_components(n, r)?;
    if !(c1.is_finite() && c2.is_finite()) || c1 < 0.0 || c2 < 0.0 {
        return Err(CcaError::InvalidArgument(format!(
            "kernel ridge constants must be finite and >= 0, got c1={c1}, c2={c2}"
        )));
    }
    if c1 == 0.0 || c2 == 0.0 {
        return Err(CcaError::DegenerateKernelProblem { c1, c2 });
    }
    if n > MAX_DIRECT_N {
        return Err(CcaError::InvalidArgument(format!(
            "direct kernel CCA is limited to n <= {MAX_DIRECT_N} (got n = {n}); use the PGSO path"
        )));
    }
    let ia = ridged_inverse(&grams.ka, c1, "K_a + c1·I")?;
    let ib = ridged_inverse(&grams.kb, c2, "K_b + c2·I")?;
    let m = &ia * grams.ka.matrix() * grams.kb.matrix() * &ib;
    let dec = svd(&m)?;
    let alpha = &ia * dec.u.columns(0, r);
    let beta = &ib * dec.v.columns(0, r);
    assemble(grams, alpha, beta, KernelMethod::Direct, KernelRegularization::Ridge { c1, c2 })
}

/// Kernel values `k(x_i, y_j)` between the rows of `x` (m × d) and `y` (n × d).
pub fn cross_gram(x: &DMatrix<f64>, y: &DMatrix<f64>, spec: KernelSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    if x.ncols() != y.ncols() {
        return Err(CcaError::InvalidArgument(format!(
            "cross Gram needs equal column counts, got {} and {}",
            x.ncols(),
            y.ncols()
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(CcaError::NonFinite);
    }
    let xr: Vec<Vec<f64>> = (0..x.nrows()).map(|i| x.row(i).iter().copied().collect()).collect();
    let yr: Vec<Vec<f64>> = (0..y.nrows()).map(|i| y.row(i).iter().copied().collect()).collect();
    let entries: Vec<Vec<f64>> = xr
        .par_iter()
        .map(|a| {
            yr.iter()
                .map(|b| match spec {
                    KernelSpec::Linear => dot(a, b),
                    KernelSpec::Gaussian { sigma } => (-squared_distance(a, b) / (2.0 * sigma * sigma)).exp(),
                })
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(x.nrows(), y.nrows(), |i, j| entries[i][j]))
}

/// Centers a test-versus-training kernel block with the training means, so
/// test images live in the same centered feature space as the fit.
pub fn center_cross_gram(k_test: &DMatrix<f64>, k_train: &SymMatrix) -> DMatrix<f64> {
    let n = k_train.order() as f64;
    let col_means: Vec<f64> = (0..k_train.order()).map(|j| k_train.column(j).sum() / n).collect();
    let total = col_means.iter().sum::<f64>() / n;
    let row_means: Vec<f64> = (0..k_test.nrows()).map(|i| k_test.row(i).sum() / n).collect();
    DMatrix::from_fn(k_test.nrows(), k_test.ncols(), |i, j| {
        k_test[(i, j)] - row_means[i] - col_means[j] + total
    })
}

struct KernelFold {
    grams: GramPair,
    test_a: DMatrix<f64>,
    test_b: DMatrix<f64>,
}

fn prepare_kernel_fold(
    data: &PairedDataset,
    train_rows: &[usize],
    test_rows: &[usize],
    spec_a: KernelSpec,
    spec_b: KernelSpec,
    scaling: TestScaling,
) -> Option<KernelFold> {
    let train = data.select_rows(train_rows).standardize().ok()?;
    let raw_test = data.select_rows(test_rows);
    let test = match scaling {
        TestScaling::OwnStatistics => raw_test.standardize().ok()?,
        TestScaling::TrainingStatistics => train.apply_standardization(&raw_test).ok()?,
    };
    let ka = gram(train.view_a(), spec_a).ok()?;
    let kb = gram(train.view_b(), spec_b).ok()?;
    let test_a = center_cross_gram(&cross_gram(test.view_a(), train.view_a(), spec_a).ok()?, &ka);
    let test_b = center_cross_gram(&cross_gram(test.view_b(), train.view_b(), spec_b).ok()?, &kb);
    let grams = GramPair::new(center_gram(&ka), center_gram(&kb), spec_a, spec_b, true).ok()?;
    Some(KernelFold { grams, test_a, test_b })
}

/// Repeated k-fold cross-validation of `(c1, c2)` for kernel CCA with fixed
/// kernel specs, scored by the held-out cosine of the first image pair.
/// Training Grams are centered; test rows are mapped through the training
/// kernel and centered with the training means.
pub fn cross_validate_kernel(
    data: &PairedDataset,
    spec_a: KernelSpec,
    spec_b: KernelSpec,
    config: &RegularizationConfig,
) -> Result<CvSurface> {
    spec_a.validate()?;
    spec_b.validate()?;
    cv_engine(
        data.n(),
        config,
        |train, test| prepare_kernel_fold(data, train, test, spec_a, spec_b, config.test_scaling),
        |fold, c1, c2| {
            let m = fit_kernel_cca(&fold.grams, c1, c2, 1)?;
            let za = &fold.test_a * m.alpha.column(0);
            let zb = &fold.test_b * m.beta.column(0);
            Ok(cosine(za.as_view(), zb.as_view()))
        },
    )
}

/// Default PGSO precision: `1e-6 · trace(K)`.
pub fn default_eta(k: &SymMatrix) -> f64 {
    1e-6 * k.trace()
}

/// Kernel CCA on PGSO factors `K ≈ R Rᵀ`.
///
/// With `D_xy = R_xᵀ R_y`, solves
/// `S⁻¹ D_ab (D_bb + κ I)⁻¹ D_ba S⁻ᵀ α̂ = ρ² α̂` where `D_aa = S Sᵀ`, recovers
/// `α̃ = S⁻ᵀ α̂` and `β̃ = (D_bb + κ I)⁻¹ D_ba α̃ / ρ`, and maps back to the
/// dual weights `α = R_a D_aa⁻¹ α̃`, `β = R_b D_bb⁻¹ β̃` (the minimum-norm
/// solutions of `R_aᵀ α = α̃`, `R_bᵀ β = β̃`). `eta = None` selects
/// [`default_eta`] per view.
pub fn fit_kernel_cca_pgso(grams: &GramPair, kappa: f64, eta: Option<f64>, r: usize) -> Result<KernelCcaModel> {
    let n = grams.n();
    check_components(n, r)?;
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(CcaError::InvalidArgument(format!(
            "PGSO regularisation kappa must be finite and positive, got {kappa}"
        )));
    }
    let eta_a = eta.unwrap_or_else(|| default_eta(&grams.ka));
    let eta_b = eta.unwrap_or_else(|| default_eta(&grams.kb));
    let fa = partial_gram_schmidt(&grams.ka, eta_a)?;
    let fb = partial_gram_schmidt(&grams.kb, eta_b)?;
    let (ra, rb) = (&fa.r, &fb.r);
    if r > ra.ncols() {
        return Err(CcaError::InvalidArgument(format!(
            "PGSO kept {} columns for view a, fewer than the {r} requested components; use a smaller eta",
            ra.ncols()
        )));
    }
    let singular = |block: &str| CcaError::SingularBlock {
        block: format!("{block} (PGSO reduced block)"),
        condition: f64::INFINITY,
        min_ridge: 0.0,
    };

    let daa = ra.tr_mul(ra);
    let dab = ra.tr_mul(rb);
    let dbb = rb.tr_mul(rb);
    let daa_sym = SymMatrix::from_product(daa.clone())?;
    let s = daa_sym.matrix().clone().cholesky().ok_or_else(|| singular("D_aa"))?.l();
    let dbb_ridged = SymMatrix::from_product(dbb.clone())?.add_ridge(kappa);
    let dbb_ridged_inv = dbb_ridged
        .matrix()
        .clone()
        .cholesky()
        .ok_or_else(|| singular("D_bb + kappa·I"))?
        .inverse();

    // S⁻¹ D_ab (D_bb + κI)⁻¹ D_ba S⁻ᵀ
    let left = s
        .solve_lower_triangular(&dab)
        .ok_or_else(|| singular("D_aa"))?;
    let reduced = SymMatrix::from_product(&left * &dbb_ridged_inv * left.transpose())?;
    let eig = sym_eig(&reduced);

    let st = s.transpose();
    let mut alpha_t = DMatrix::zeros(ra.ncols(), r);
    let mut beta_t = DMatrix::zeros(rb.ncols(), r);
    for i in 0..r {
        let rho = eig.eigenvalues[i].max(0.0).sqrt();
        let hat = eig.eigenvectors.column(i).into_owned();
        let at = st.solve_upper_triangular(&hat).ok_or_else(|| singular("D_aa"))?;
        let mut bt = &dbb_ridged_inv * dab.transpose() * &at;
        if rho > 0.0 {
            bt /= rho;
        }
        alpha_t.set_column(i, &at);
        beta_t.set_column(i, &bt);
    }
    let daa_chol = daa.cholesky().ok_or_else(|| singular("D_aa"))?;
    let alpha = ra * daa_chol.solve(&alpha_t);
    let dbb_chol = dbb.cholesky().ok_or_else(|| singular("D_bb"))?;
    let beta = rb * dbb_chol.solve(&beta_t);
    assemble(
        grams,
        alpha,
        beta,
        KernelMethod::Pgso,
        KernelRegularization::Pgso {
            kappa,
            eta_a,
            eta_b,
            rank_a: fa.rank(),
            rank_b: fb.rank(),
        },
    )
}

/// Pearson correlations of named signals with image columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationTable {
    pub signals: Vec<String>,
    /// `signed[(s, i)]`: correlation of signal `s` with image `i`.
    pub signed: DMatrix<f64>,
}

impl RelationTable {
    pub fn absolute(&self) -> DMatrix<f64> {
        self.signed.abs()
    }

    /// For each signal, the single image index whose `|correlation|` reaches
    /// `threshold`, or `None` when zero or several images do.
    pub fn dominant_images(&self, threshold: f64) -> Vec<Option<usize>> {
        let abs = self.absolute();
        (0..abs.nrows())
            .map(|s| {
                let hits: Vec<usize> = (0..abs.ncols()).filter(|&i| abs[(s, i)] >= threshold).collect();
                match hits.as_slice() {
                    [only] => Some(*only),
                    _ => None,
                }
            })
            .collect()
    }

    /// Every signal has exactly one image with `|correlation| >= threshold`
    /// and no two signals share an image.
    pub fn is_one_to_one(&self, threshold: f64) -> bool {
        let dominant = self.dominant_images(threshold);
        let mut seen = Vec::new();
        for d in dominant {
            match d {
                Some(i) if !seen.contains(&i) => seen.push(i),
                _ => return false,
            }
        }
        true
    }

    /// CSV with header `signal,z1,z2,...,|z1|,|z2|,...`.
    pub fn to_csv(&self) -> String {
        let k = self.signed.ncols();
        let mut out = String::from("signal");
        for i in 1..=k {
            let _ = write!(out, ",z{i}");
        }
        for i in 1..=k {
            let _ = write!(out, ",|z{i}|");
        }
        out.push('\n');
        for (s, name) in self.signals.iter().enumerate() {
            out.push_str(name);
            for i in 0..k {
                let _ = write!(out, ",{:.16e}", self.signed[(s, i)]);
            }
            for i in 0..k {
                let _ = write!(out, ",{:.16e}", self.signed[(s, i)].abs());
            }
            out.push('\n');
        }
        out
    }
}

/// Correlates every candidate signal with every image column.
pub fn image_relation_table(images: &DMatrix<f64>, signals: &[(String, DVector<f64>)]) -> Result<RelationTable> {
    let n = images.nrows();
    let mut signed = DMatrix::zeros(signals.len(), images.ncols());
    for (s, (name, signal)) in signals.iter().enumerate() {
        if signal.len() != n {
            return Err(CcaError::DimensionMismatch(format!(
                "signal '{name}' has length {}, images have {n} rows",
                signal.len()
            )));
        }
        for i in 0..images.ncols() {
            let image: Vec<f64> = images.column(i).iter().copied().collect();
            signed[(s, i)] = match pearson(signal.as_slice(), &image) {
                Some(r) => r,
                None if image.iter().all(|x| *x == image[0]) => 0.0,
                None => {
                    return Err(CcaError::InvalidArgument(format!("signal '{name}' is constant")));
                }
            };
        }
    }
    Ok(RelationTable {
        signals: signals.iter().map(|(name, _)| name.clone()).collect(),
        signed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn cross_centering_on_training_rows_matches_center_gram() {
        let x = random_matrix(12, 3, 5);
        let spec = KernelSpec::Gaussian { sigma: 1.3 };
        let k = gram(&x, spec).unwrap();
        let cross = cross_gram(&x, &x, spec).unwrap();
        assert!((&cross - k.matrix()).amax() < 1e-15);
        let centered = center_cross_gram(&cross, &k);
        assert!((centered - center_gram(&k).matrix()).amax() < 1e-12);
    }

    #[test]
    fn kernel_cv_runs_on_small_grid() {
        use crate::dataset::{generate_synthetic, RecipeId, SyntheticRecipe};
        let d = generate_synthetic(&SyntheticRecipe::preset(RecipeId::Example7, 1).with_n(60)).unwrap();
        let spec = KernelSpec::Gaussian { sigma: 3.0 };
        let config = RegularizationConfig {
            c1_grid: vec![0.1, 1.0],
            c2_grid: vec![0.0, 1.0],
            folds: 3,
            repetitions: 2,
            seed: 4,
            ..Default::default()
        };
        let s = cross_validate_kernel(&d, spec, spec, &config).unwrap();
        // c2 = 0 is degenerate and fails on every fold.
        assert_eq!(s.scores[(0, 0)], crate::regularized::FAILED_CELL_SCORE);
        assert_eq!(s.selected.1, 1.0);
        assert!(s.selected_score > 0.5);
    }

    #[test]
    fn gaussian_gram_basics() {
        let x = random_matrix(10, 3, 1);
        let k = gram(&x, KernelSpec::Gaussian { sigma: 1.3 }).unwrap();
        for i in 0..10 {
            assert_eq!(k[(i, i)], 1.0);
        }
        let wide = gram(&x, KernelSpec::Gaussian { sigma: 1e6 }).unwrap();
        assert!(wide.iter().all(|v| (v - 1.0).abs() <= 1e-6));
        assert!(gram(&x, KernelSpec::Gaussian { sigma: 0.0 }).is_err());
        assert!(gram(&x, KernelSpec::Gaussian { sigma: -1.0 }).is_err());
    }

    #[test]
    fn linear_gram_is_inner_products() {
        let x = random_matrix(6, 4, 2);
        let k = gram(&x, KernelSpec::Linear).unwrap();
        let direct = &x * x.transpose();
        assert!((k.matrix() - direct).amax() < 1e-12);
    }

    #[test]
    fn centering() {
        let ones = SymMatrix::new(DMatrix::from_element(4, 4, 1.0)).unwrap();
        assert!(center_gram(&ones).amax() < 1e-15);
        let k = gram(&random_matrix(12, 3, 3), KernelSpec::Gaussian { sigma: 2.0 }).unwrap();
        let c = center_gram(&k);
        for i in 0..12 {
            assert!(c.row(i).sum().abs() <= 1e-8);
            assert!(c.column(i).sum().abs() <= 1e-8);
        }
        let cc = center_gram(&c);
        assert!((cc.matrix() - c.matrix()).amax() <= 1e-10);
    }

    #[test]
    fn median_heuristic_examples() {
        let two = DMatrix::from_row_slice(2, 1, &[0.0, 3.0]);
        assert_eq!(median_heuristic(&two).unwrap(), 3.0);
        let three = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 3.0]);
        assert_eq!(median_heuristic(&three).unwrap(), 2.0);
        // Four points: six distances {1,1,1,2,2,3} -> mean of 1 and 2.
        let four = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(median_heuristic(&four).unwrap(), 1.5);
        let same = DMatrix::from_element(3, 2, 1.0);
        assert!(median_heuristic(&same).is_err());
    }

    #[test]
    fn identical_views_correlate_fully() {
        let x = random_matrix(50, 3, 4);
        let d = PairedDataset::new(x.clone(), x).unwrap().standardize().unwrap();
        let spec = KernelSpec::Gaussian {
            sigma: median_heuristic(d.view_a()).unwrap(),
        };
        let grams = GramPair::from_data(&d, spec, spec, true).unwrap();
        let m = fit_kernel_cca(&grams, 0.01, 0.01, 2).unwrap();
        assert!(m.correlations[0] >= 0.99);
    }

    #[test]
    fn zero_ridge_is_degenerate() {
        let x = random_matrix(20, 2, 5);
        let d = PairedDataset::new(x.clone(), x).unwrap();
        let grams = GramPair::from_data(&d, KernelSpec::Linear, KernelSpec::Linear, true).unwrap();
        assert!(matches!(
            fit_kernel_cca(&grams, 0.0, 1.0, 1),
            Err(CcaError::DegenerateKernelProblem { .. })
        ));
    }

    #[test]
    fn images_unit_norm_and_carry_correlations() {
        let d = PairedDataset::new(random_matrix(40, 3, 6), random_matrix(40, 2, 7)).unwrap();
        let grams = GramPair::gaussian_median(&d.standardize().unwrap()).unwrap();
        let m = fit_kernel_cca(&grams, 0.5, 0.5, 3).unwrap();
        for i in 0..3 {
            assert!((m.images_a.column(i).norm() - 1.0).abs() < 1e-10);
            assert!((m.images_a.column(i).dot(&m.images_b.column(i)) - m.correlations[i]).abs() < 1e-10);
            let za = grams.ka.matrix() * m.alpha.column(i);
            assert!((za - m.images_a.column(i)).amax() < 1e-8);
        }
    }

    #[test]
    fn relation_table_basics() {
        let images = random_matrix(30, 2, 8);
        let own = images.column(0).into_owned();
        let t = image_relation_table(&images, &[("own".into(), own)]).unwrap();
        assert!((t.signed[(0, 0)] - 1.0).abs() < 1e-12);
        let constant = DVector::from_element(30, 2.0);
        assert!(image_relation_table(&images, &[("c".into(), constant)]).is_err());
        let t = RelationTable {
            signals: vec!["x".into(), "y".into()],
            signed: DMatrix::from_row_slice(2, 3, &[0.9, 0.1, 0.0, 0.2, -0.8, 0.1]),
        };
        assert_eq!(t.dominant_images(0.7), vec![Some(0), Some(1)]);
        assert!(t.is_one_to_one(0.7));
        assert!(!t.is_one_to_one(0.85));
        assert!(t.to_csv().starts_with("signal,z1,z2,z3,|z1|,|z2|,|z3|\n"));
    }

    #[test]
    fn pgso_tolerates_duplicated_observations() {
        let mut x = random_matrix(30, 3, 9);
        for i in 15..30 {
            let row = x.row(i - 15).into_owned();
            x.set_row(i, &row);
        }
        let y = x.map(|v| v + 0.0) * 2.0;
        let d = PairedDataset::new(x, y).unwrap();
        let grams = GramPair::gaussian_median(&d.standardize().unwrap()).unwrap();
        let m = fit_kernel_cca_pgso(&grams, 0.5, None, 2).unwrap();
        match m.regularization {
            KernelRegularization::Pgso { rank_a, .. } => assert!(rank_a < 30),
            _ => unreachable!(),
        }
        assert!(m.correlations.iter().all(|r| (0.0..=1.0).contains(r)));
    }
}
