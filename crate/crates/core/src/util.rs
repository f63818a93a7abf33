use nalgebra::{DMatrix, DVectorView};

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Pearson correlation. `None` when either input has zero variance.
pub(crate) fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    debug_assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Cosine of the angle between two vectors; 0 if either is the zero vector.
pub(crate) fn cosine(x: DVectorView<f64>, y: DVectorView<f64>) -> f64 {
    let nx = x.norm();
    let ny = y.norm();
    if nx == 0.0 || ny == 0.0 {
        return 0.0;
    }
    (x.dot(&y) / (nx * ny)).clamp(-1.0, 1.0)
}

/// Normalises every column to unit Euclidean norm (zero columns stay zero).
pub(crate) fn normalize_columns(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut col in m.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    m
}
