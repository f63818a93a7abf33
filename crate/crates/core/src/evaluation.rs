//! Significance testing, structure correlations, biplot tables and held-out
//! generalisation scores.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::PairedDataset;
use crate::error::{CcaError, Result};
use crate::linear::{project, CcaModel};
use crate::numerics::chi2_quantile;
use crate::util::pearson;

/// Correlations within this distance of 1 count as perfect.
const UNIT_TOL: f64 = 1e-10;

/// Bartlett-Lawley statistic for `H0`: at most `k` nonzero canonical
/// correlations,
///
/// `L_k = -(n - k - (p + q + 1)/2 + Σ_{j<=k} r_j⁻²) · ln Π_{j>k} (1 - r_j²)`
///
/// with `j` running to `min(p, q)`. `correlations` are descending and must
/// hold at least `min(p, q)` values.
pub fn bartlett_lawley(correlations: &[f64], n: usize, p: usize, q: usize, k: usize) -> Result<f64> {
    bartlett_lawley_with(correlations, n, p, q, k, false)
}

/// As [`bartlett_lawley`]; with `clamp_unit`, correlations within 1e-10 of 1
/// are replaced by `1 - 1e-10` instead of being rejected.
pub fn bartlett_lawley_with(
    correlations: &[f64],
    n: usize,
    p: usize,
    q: usize,
    k: usize,
    clamp_unit: bool,
) -> Result<f64> {
    let m = p.min(q);
    if k >= m {
        return Err(CcaError::InvalidArgument(format!(
            "k must satisfy 0 <= k < min(p, q) = {m}, got {k}"
        )));
    }
    if correlations.len() < m {
        return Err(CcaError::InvalidArgument(format!(
            "the statistic needs min(p, q) = {m} correlations, got {}",
            correlations.len()
        )));
    }
    let mut r = Vec::with_capacity(m);
    for (j, &value) in correlations[..m].iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(CcaError::InvalidArgument(format!(
                "correlation r_{} = {value} is outside [0, 1]",
                j + 1
            )));
        }
        let value = if value >= 1.0 - UNIT_TOL {
            if !clamp_unit {
                return Err(CcaError::SingularStatistic { index: j + 1, value });
            }
            1.0 - UNIT_TOL
        } else {
            value
        };
        r.push(value);
    }
    let mut correction = 0.0;
    for (j, &value) in r[..k].iter().enumerate() {
        if value == 0.0 {
            return Err(CcaError::SingularStatistic { index: j + 1, value });
        }
        correction += 1.0 / (value * value);
    }
    let log_product: f64 = r[k..].iter().map(|v| (1.0 - v * v).ln()).sum();
    let factor = n as f64 - k as f64 - 0.5 * (p + q + 1) as f64 + correction;
    Ok(-factor * log_product)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceRecord {
    pub k: usize,
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub critical_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub alpha: f64,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub correlations: Vec<f64>,
    pub records: Vec<SignificanceRecord>,
    pub significant_count: usize,
}

impl SignificanceReport {
    /// CSV with the test inputs repeated on every row for auditability.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,statistic,df,critical_value,reject,alpha,n,p,q\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:.16e},{},{:.16e},{},{},{},{},{}",
                r.k, r.statistic, r.degrees_of_freedom, r.critical_value, r.reject, self.alpha, self.n, self.p, self.q
            );
        }
        out
    }
}

/// Bartlett's sequential procedure: for `k = 0, 1, ...` reject `H0_k` iff
/// `L_k` exceeds the `1 - alpha` chi-squared quantile with `(p-k)(q-k)`
/// degrees of freedom, stopping at the first acceptance. The estimated
/// number of significant correlations is that first accepted `k`, or
/// `min(p, q)` if every hypothesis is rejected.
pub fn sequential_test(correlations: &[f64], n: usize, p: usize, q: usize, alpha: f64) -> Result<SignificanceReport> {
    sequential_test_with(correlations, n, p, q, alpha, false)
}

pub fn sequential_test_with(
    correlations: &[f64],
    n: usize,
    p: usize,
    q: usize,
    alpha: f64,
    clamp_unit: bool,
) -> Result<SignificanceReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CcaError::ProbabilityOutOfRange(alpha));
    }
    let m = p.min(q);
    let mut records = Vec::new();
    let mut significant_count = m;
    for k in 0..m {
        let statistic = bartlett_lawley_with(correlations, n, p, q, k, clamp_unit)?;
        let df = (p - k) * (q - k);
        let critical_value = chi2_quantile(1.0 - alpha, df)?;
        let reject = statistic > critical_value;
        records.push(SignificanceRecord {
            k,
            statistic,
            degrees_of_freedom: df,
            critical_value,
            reject,
        });
        if !reject {
            significant_count = k;
            break;
        }
    }
    Ok(SignificanceReport {
        alpha,
        n,
        p,
        q,
        correlations: correlations[..m.min(correlations.len())].to_vec(),
        records,
        significant_count,
    })
}

/// Pearson correlation of every column of both views with `image`. A
/// constant image yields zeros.
pub fn structure_correlations(data: &PairedDataset, image: &DVector<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    if image.len() != data.n() {
        return Err(CcaError::DimensionMismatch(format!(
            "image has length {}, data has {} rows",
            image.len(),
            data.n()
        )));
    }
    let corr = |m: &DMatrix<f64>| -> Vec<f64> {
        m.column_iter()
            .map(|col| pearson(col.as_slice(), image.as_slice()).unwrap_or(0.0))
            .collect()
    };
    Ok((corr(data.view_a()), corr(data.view_b())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    A,
    B,
}

impl View {
    pub fn tag(self) -> char {
        match self {
            View::A => 'a',
            View::B => 'b',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiplotRow {
    pub view: char,
    pub variable: String,
    pub x: f64,
    pub y: f64,
}

/// Structure correlations of every variable against two images of one view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiplotTable {
    /// Zero-based component indices of the two images.
    pub images: (usize, usize),
    pub image_view: View,
    pub rows: Vec<BiplotRow>,
}

impl BiplotTable {
    pub fn row(&self, view: char, variable: &str) -> Option<&BiplotRow> {
        self.rows.iter().find(|r| r.view == view && r.variable == variable)
    }

    /// Angle in degrees between two variable vectors.
    pub fn angle_degrees(a: &BiplotRow, b: &BiplotRow) -> f64 {
        let dot = a.x * b.x + a.y * b.y;
        let norms = a.x.hypot(a.y) * b.x.hypot(b.y);
        if norms == 0.0 {
            return 90.0;
        }
        (dot / norms).clamp(-1.0, 1.0).acos().to_degrees()
    }

    pub fn to_csv(&self) -> String {
        let (i, j) = self.images;
        let mut out = format!(
            "view,variable,z{}_{},z{}_{}\n",
            self.image_view.tag(),
            i + 1,
            self.image_view.tag(),
            j + 1
        );
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:.16e},{:.16e}", r.view, r.variable, r.x, r.y);
        }
        out
    }
}

/// Biplot coordinates of all variables of both views against images `i` and
/// `j` (zero-based) of `image_view`.
pub fn biplot_export(
    data: &PairedDataset,
    model: &CcaModel,
    images: (usize, usize),
    image_view: View,
) -> Result<BiplotTable> {
    let (i, j) = images;
    let r = model.components();
    if i == j {
        return Err(CcaError::InvalidArgument(format!(
            "biplot needs two distinct images, got ({}, {})",
            i + 1,
            j + 1
        )));
    }
    if i >= r || j >= r {
        return Err(CcaError::InvalidArgument(format!(
            "image indices ({}, {}) exceed the model's {r} components",
            i + 1,
            j + 1
        )));
    }
    let (za, zb) = model.images(data)?;
    let z = if image_view == View::A { za } else { zb };
    let (ax, bx) = structure_correlations(data, &z.column(i).into_owned())?;
    let (ay, by) = structure_correlations(data, &z.column(j).into_owned())?;
    let mut rows = Vec::with_capacity(data.p() + data.q());
    for (v, name) in data.names_a().iter().enumerate() {
        rows.push(BiplotRow {
            view: 'a',
            variable: name.clone(),
            x: ax[v],
            y: ay[v],
        });
    }
    for (v, name) in data.names_b().iter().enumerate() {
        rows.push(BiplotRow {
            view: 'b',
            variable: name.clone(),
            x: bx[v],
            y: by[v],
        });
    }
    Ok(BiplotTable {
        images,
        image_view,
        rows,
    })
}

/// Per-component `cos(z_a, z_b)` of the model applied to held-out data that
/// was scaled with the training standardization.
pub fn generalization_test(model: &CcaModel, test: &PairedDataset) -> Result<DVector<f64>> {
    Ok(project(model, test)?.correlations)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_correlations_give_zero_statistic() {
        assert_eq!(bartlett_lawley(&[0.0, 0.0], 50, 2, 3, 0).unwrap(), 0.0);
    }

    #[test]
    fn hand_evaluated_statistics() {
        // -(100 - 1.5) ln(0.75)
        let l = bartlett_lawley(&[0.5], 100, 1, 1, 0).unwrap();
        assert!((l - 98.5 * -(0.75f64.ln())).abs() < 1e-9);
        assert!((l - 28.33).abs() < 0.01);
        let r = [0.99, 0.94, 0.92];
        let l0 = bartlett_lawley(&r, 60, 4, 3, 0).unwrap();
        let expected0 = -56.0 * ((1.0 - 0.99f64.powi(2)) * (1.0 - 0.94f64.powi(2)) * (1.0 - 0.92f64.powi(2))).ln();
        assert!((l0 - expected0).abs() < 1e-6);
        assert!((l0 - 444.705).abs() < 1e-3);
        let l1 = bartlett_lawley(&r, 60, 4, 3, 1).unwrap();
        let expected1 =
            -(60.0 - 1.0 - 4.0 + 1.0 / 0.99f64.powi(2)) * ((1.0 - 0.94f64.powi(2)) * (1.0 - 0.92f64.powi(2))).ln();
        assert!((l1 - expected1).abs() < 1e-6);
    }

    #[test]
    fn unit_correlation_is_rejected_unless_clamped() {
        assert!(matches!(
            bartlett_lawley(&[1.0, 0.5], 50, 2, 2, 0),
            Err(CcaError::SingularStatistic { index: 1, .. })
        ));
        assert!(bartlett_lawley_with(&[1.0, 0.5], 50, 2, 2, 0, true).unwrap().is_finite());
        assert!(bartlett_lawley(&[0.5, 0.4], 50, 2, 2, 2).is_err());
        assert!(bartlett_lawley(&[0.5], 50, 2, 2, 0).is_err());
    }

    #[test]
    fn one_strong_correlation() {
        let rep = sequential_test(&[0.95, 0.05, 0.03], 500, 3, 3, 0.01).unwrap();
        assert_eq!(rep.significant_count, 1);
        assert!(rep.records[0].reject && !rep.records[1].reject);
        assert_eq!(rep.records.len(), 2);
    }

    #[test]
    fn degrees_of_freedom_decrease() {
        let rep = sequential_test(&[0.99, 0.94, 0.92], 60, 4, 3, 0.01).unwrap();
        assert_eq!(rep.significant_count, 3);
        let df: Vec<usize> = rep.records.iter().map(|r| r.degrees_of_freedom).collect();
        assert_eq!(df, vec![12, 6, 2]);
        assert!(sequential_test(&[0.5], 10, 1, 1, 1.0).is_err());
    }

    #[test]
    fn angle_helper() {
        let a = BiplotRow {
            view: 'a',
            variable: "x".into(),
            x: 1.0,
            y: 0.0,
        };
        let b = BiplotRow {
            view: 'b',
            variable: "y".into(),
            x: 0.0,
            y: 2.0,
        };
        assert!((BiplotTable::angle_degrees(&a, &b) - 90.0).abs() < 1e-12);
    }
}
