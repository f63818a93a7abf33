//! Linear CCA through the standard eigenproblem, the symmetric generalized
//! eigenproblem and the SVD of the whitened cross-covariance.
//!
//! All routes return weights normalised to unit variance (`wᵀ C w = 1`, with
//! `C` the possibly ridged within-view block) and share one sign convention:
//! the largest-magnitude entry of `w_a` is positive and `w_b` is oriented so
//! that `w_aᵀ C_ab w_b >= 0`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{CovarianceBlocks, PairedDataset};
use crate::error::{CcaError, Result};
use crate::numerics::{check_invertible, gen_eig_sym, inv_sqrt_spd_named, orient_sign, svd, SymMatrix};
use crate::util::{cosine, normalize_columns};

/// Squared correlations this far outside `[0, 1]` are a numerical failure
/// rather than roundoff.
const CLIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Characteristic equation `C_bb⁻¹ C_ba C_aa⁻¹ C_ab w_b = ρ² w_b`.
    Eig,
    /// The `(p+q)`-order symmetric pencil.
    GenEig,
    /// SVD of `C_aa^{-1/2} C_ab C_bb^{-1/2}`.
    Svd,
}

impl Solver {
    pub fn as_str(self) -> &'static str {
        match self {
            Solver::Eig => "eig",
            Solver::GenEig => "geneig",
            Solver::Svd => "svd",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Solver {
    type Err = CcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eig" => Ok(Solver::Eig),
            "geneig" => Ok(Solver::GenEig),
            "svd" => Ok(Solver::Svd),
            _ => Err(CcaError::InvalidArgument(format!(
                "unknown solver '{s}'; valid solvers: eig, geneig, svd"
            ))),
        }
    }
}

/// Canonical weights and correlations; column `i` of each weight matrix is
/// the `i`-th component.
#[derive(Debug, Clone)]
pub struct CcaModel {
    pub weights_a: DMatrix<f64>,
    pub weights_b: DMatrix<f64>,
    pub correlations: DVector<f64>,
    pub solver: Solver,
    /// Ridge constants `(c1, c2)` added to `C_aa` and `C_bb`.
    pub ridge: (f64, f64),
    /// Unit-norm training images `X w`, one column per component.
    pub images_a: Option<DMatrix<f64>>,
    pub images_b: Option<DMatrix<f64>>,
}

impl CcaModel {
    pub fn components(&self) -> usize {
        self.correlations.len()
    }

    /// Computes and stores the unit-norm images of `data`.
    pub fn attach_images(&mut self, data: &PairedDataset) -> Result<()> {
        let (za, zb) = self.images(data)?;
        self.images_a = Some(za);
        self.images_b = Some(zb);
        Ok(())
    }

    /// Unit-norm images `X_a w_a / ‖X_a w_a‖` and likewise for view b.
    pub fn images(&self, data: &PairedDataset) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if data.p() != self.weights_a.nrows() || data.q() != self.weights_b.nrows() {
            return Err(CcaError::DimensionMismatch(format!(
                "model expects {}+{} columns, data has {}+{}",
                self.weights_a.nrows(),
                self.weights_b.nrows(),
                data.p(),
                data.q()
            )));
        }
        Ok((
            normalize_columns(data.view_a() * &self.weights_a),
            normalize_columns(data.view_b() * &self.weights_b),
        ))
    }
}

/// Images and per-component cosines of a model applied to (test) data.
#[derive(Debug, Clone)]
pub struct Projection {
    pub images_a: DMatrix<f64>,
    pub images_b: DMatrix<f64>,
    pub correlations: DVector<f64>,
}

/// Projects `test` (already scaled with the training standardization) onto
/// the model's weights and reports `cos(z_a, z_b)` per component.
pub fn project(model: &CcaModel, test: &PairedDataset) -> Result<Projection> {
    let (images_a, images_b) = model.images(test)?;
    let correlations = DVector::from_fn(model.components(), |i, _| {
        cosine(images_a.column(i).into(), images_b.column(i).into())
    });
    Ok(Projection {
        images_a,
        images_b,
        correlations,
    })
}

/// Standardizes `data`, fits `r` components with `solver` and attaches the
/// training images.
pub fn fit(data: &PairedDataset, solver: Solver, r: usize) -> Result<CcaModel> {
    let data = if data.is_standardized() {
        data.clone()
    } else {
        data.standardize()?
    };
    let blocks = data.covariance_blocks()?;
    let mut model = fit_blocks(&blocks, solver, r)?;
    model.attach_images(&data)?;
    Ok(model)
}

pub fn fit_blocks(blocks: &CovarianceBlocks, solver: Solver, r: usize) -> Result<CcaModel> {
    match solver {
        Solver::Eig => fit_standard_eig(blocks, r),
        Solver::GenEig => fit_generalized_eig(blocks, r),
        Solver::Svd => fit_svd(blocks, r),
    }
}

pub fn fit_standard_eig(blocks: &CovarianceBlocks, r: usize) -> Result<CcaModel> {
    let (caa, cbb) = checked_blocks(blocks, r, 0.0, 0.0)?;
    solve_eig(blocks, &caa, &cbb, r, (0.0, 0.0))
}

pub fn fit_generalized_eig(blocks: &CovarianceBlocks, r: usize) -> Result<CcaModel> {
    let (caa, cbb) = checked_blocks(blocks, r, 0.0, 0.0)?;
    solve_generalized(blocks, &caa, &cbb, r, (0.0, 0.0))
}

pub fn fit_svd(blocks: &CovarianceBlocks, r: usize) -> Result<CcaModel> {
    let (caa, cbb) = checked_blocks(blocks, r, 0.0, 0.0)?;
    solve_svd(blocks, &caa, &cbb, r, (0.0, 0.0))
}

/// All `p + q` eigenvalues of the pencil
/// `[[0, C_ab], [C_ba, 0]] v = λ [[C_aa, 0], [0, C_bb]] v`, descending.
/// They come in `±ρ` pairs plus `|p − q|` zeros.
pub fn generalized_spectrum(blocks: &CovarianceBlocks) -> Result<DVector<f64>> {
    check_invertible(&blocks.caa, "C_aa")?;
    check_invertible(&blocks.cbb, "C_bb")?;
    let (a, b) = pencil(blocks, &blocks.caa, &blocks.cbb)?;
    Ok(gen_eig_sym(&a, &b)?.eigenvalues)
}

pub(crate) fn checked_blocks(
    blocks: &CovarianceBlocks,
    r: usize,
    c1: f64,
    c2: f64,
) -> Result<(SymMatrix, SymMatrix)> {
    let max_r = blocks.p().min(blocks.q());
    if r == 0 || r > max_r {
        return Err(CcaError::InvalidArgument(format!(
            "component count must satisfy 1 <= r <= min(p, q) = {max_r}, got {r}"
        )));
    }
    let caa = blocks.caa.add_ridge(c1);
    let cbb = blocks.cbb.add_ridge(c2);
    let (name_a, name_b) = if c1 == 0.0 && c2 == 0.0 {
        ("C_aa".to_string(), "C_bb".to_string())
    } else {
        (format!("C_aa + {c1}·I"), format!("C_bb + {c2}·I"))
    };
    check_invertible(&caa, &name_a)?;
    check_invertible(&cbb, &name_b)?;
    Ok((caa, cbb))
}

fn inverse_spd(m: &SymMatrix, block: &str) -> Result<DMatrix<f64>> {
    let chol = m.matrix().clone().cholesky().ok_or_else(|| CcaError::NotPositiveDefinite {
        block: block.to_string(),
        min_eigenvalue: f64::NAN,
        max_eigenvalue: f64::NAN,
    })?;
    Ok(chol.inverse())
}

fn clip_squared(rho2: f64) -> Result<f64> {
    if !(-CLIP_TOL..=1.0 + CLIP_TOL).contains(&rho2) {
        return Err(CcaError::InvalidArgument(format!(
            "squared canonical correlation {rho2} lies outside [0, 1] beyond roundoff"
        )));
    }
    Ok(rho2.clamp(0.0, 1.0))
}

/// Eigen route. Solves on the smaller view and recovers the other through
/// `w_a = C_aa⁻¹ C_ab w_b / ρ` (or its mirror image).
pub(crate) fn solve_eig(
    blocks: &CovarianceBlocks,
    caa: &SymMatrix,
    cbb: &SymMatrix,
    r: usize,
    ridge: (f64, f64),
) -> Result<CcaModel> {
    let swap = blocks.q() > blocks.p();
    // "small" is the view we solve for, "large" the one recovered.
    let (c_small, c_large, c_large_small) = if swap {
        (caa, cbb, blocks.cab.transpose())
    } else {
        (cbb, caa, blocks.cab.clone())
    };
    let large_inv = inverse_spd(c_large, "within-view block")?;
    let m = SymMatrix::from_product(c_large_small.transpose() * &large_inv * &c_large_small)?;
    let eig = gen_eig_sym(&m, c_small)?;

    let mut w_small = DMatrix::zeros(c_small.order(), r);
    let mut w_large = DMatrix::zeros(c_large.order(), r);
    for i in 0..r {
        let rho = clip_squared(eig.eigenvalues[i])?.sqrt();
        let ws = eig.eigenvectors.column(i).into_owned();
        let mut wl = &large_inv * &c_large_small * &ws;
        if rho > 0.0 {
            wl /= rho;
        }
        w_small.set_column(i, &ws);
        w_large.set_column(i, &wl);
    }
    let (mut wa, mut wb) = if swap { (w_small, w_large) } else { (w_large, w_small) };
    complete_null_directions(&mut wa, caa);
    complete_null_directions(&mut wb, cbb);
    finish(blocks, caa, cbb, wa, wb, Solver::Eig, ridge)
}

fn pencil(
    blocks: &CovarianceBlocks,
    caa: &SymMatrix,
    cbb: &SymMatrix,
) -> Result<(SymMatrix, SymMatrix)> {
    let (p, q) = (blocks.p(), blocks.q());
    let mut a = DMatrix::zeros(p + q, p + q);
    a.view_mut((0, p), (p, q)).copy_from(&blocks.cab);
    a.view_mut((p, 0), (q, p)).copy_from(&blocks.cab.transpose());
    let mut b = DMatrix::zeros(p + q, p + q);
    b.view_mut((0, 0), (p, p)).copy_from(caa.matrix());
    b.view_mut((p, p), (q, q)).copy_from(cbb.matrix());
    Ok((SymMatrix::from_product(a)?, SymMatrix::from_product(b)?))
}

pub(crate) fn solve_generalized(
    blocks: &CovarianceBlocks,
    caa: &SymMatrix,
    cbb: &SymMatrix,
    r: usize,
    ridge: (f64, f64),
) -> Result<CcaModel> {
    let (p, q) = (blocks.p(), blocks.q());
    let (a, b) = pencil(blocks, caa, cbb)?;
    let eig = gen_eig_sym(&a, &b)?;
    let mut wa = DMatrix::zeros(p, r);
    let mut wb = DMatrix::zeros(q, r);
    for i in 0..r {
        let v = eig.eigenvectors.column(i);
        wa.set_column(i, &v.rows(0, p));
        wb.set_column(i, &v.rows(p, q));
    }
    complete_null_directions(&mut wa, caa);
    complete_null_directions(&mut wb, cbb);
    finish(blocks, caa, cbb, wa, wb, Solver::GenEig, ridge)
}

pub(crate) fn solve_svd(
    blocks: &CovarianceBlocks,
    caa: &SymMatrix,
    cbb: &SymMatrix,
    r: usize,
    ridge: (f64, f64),
) -> Result<CcaModel> {
    let xa = inv_sqrt_spd_named(caa, "C_aa")?;
    let xb = inv_sqrt_spd_named(cbb, "C_bb")?;
    let whitened = xa.matrix() * &blocks.cab * xb.matrix();
    let dec = svd(&whitened)?;
    let wa = xa.matrix() * dec.u.columns(0, r);
    let wb = xb.matrix() * dec.v.columns(0, r);
    finish(blocks, caa, cbb, wa, wb, Solver::Svd, ridge)
}

/// Replaces (near-)zero weight columns, which arise for zero canonical
/// correlations, with directions `C`-orthogonal to the other columns.
fn complete_null_directions(w: &mut DMatrix<f64>, c: &SymMatrix) {
    let dim = w.nrows();
    for i in 0..w.ncols() {
        let col = w.column(i);
        let var = (col.transpose() * c.matrix() * col)[(0, 0)];
        if var > 1e-20 {
            continue;
        }
        for e in 0..dim {
            let mut v = DVector::zeros(dim);
            v[e] = 1.0;
            for j in 0..w.ncols() {
                if j == i {
                    continue;
                }
                let u = w.column(j).into_owned();
                let uu = (u.transpose() * c.matrix() * &u)[(0, 0)];
                if uu > 1e-20 {
                    let uv = (u.transpose() * c.matrix() * &v)[(0, 0)];
                    v -= u * (uv / uu);
                }
            }
            let vv = (v.transpose() * c.matrix() * &v)[(0, 0)];
            if vv > 1e-8 {
                w.set_column(i, &v);
                break;
            }
        }
    }
}

/// Normalises to unit variance under the (ridged) blocks, applies the sign
/// convention and computes correlations as image cosines.
fn finish(
    blocks: &CovarianceBlocks,
    caa: &SymMatrix,
    cbb: &SymMatrix,
    mut wa: DMatrix<f64>,
    mut wb: DMatrix<f64>,
    solver: Solver,
    ridge: (f64, f64),
) -> Result<CcaModel> {
    let r = wa.ncols();
    let mut correlations = DVector::zeros(r);
    for i in 0..r {
        let mut a = wa.column(i).into_owned();
        let mut b = wb.column(i).into_owned();
        let va = (a.transpose() * caa.matrix() * &a)[(0, 0)];
        let vb = (b.transpose() * cbb.matrix() * &b)[(0, 0)];
        if !(va > 0.0 && vb > 0.0) {
            return Err(CcaError::NonFinite);
        }
        a /= va.sqrt();
        b /= vb.sqrt();
        orient_sign(a.as_mut_slice());
        let cross = (a.transpose() * &blocks.cab * &b)[(0, 0)];
        if cross < 0.0 {
            b.neg_mut();
        }
        // Image cosine under the unridged blocks; equals the eigenvalue
        // route's ρ when no ridge is applied.
        let raw_a = (a.transpose() * blocks.caa.matrix() * &a)[(0, 0)];
        let raw_b = (b.transpose() * blocks.cbb.matrix() * &b)[(0, 0)];
        let denom = (raw_a * raw_b).sqrt();
        correlations[i] = if denom > 0.0 {
            (cross.abs() / denom).clamp(0.0, 1.0)
        } else {
            0.0
        };
        wa.set_column(i, &a);
        wb.set_column(i, &b);
    }
    if correlations.iter().any(|x| !x.is_finite()) || wa.iter().chain(wb.iter()).any(|x| !x.is_finite()) {
        return Err(CcaError::NonFinite);
    }
    Ok(CcaModel {
        weights_a: wa,
        weights_b: wb,
        correlations,
        solver,
        ridge,
        images_a: None,
        images_b: None,
    })
}
