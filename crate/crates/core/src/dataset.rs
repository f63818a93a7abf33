//! Paired two-view data, standardization, covariance blocks, fold
//! assignment and the seeded synthetic recipes used throughout the tests.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CcaError, Result};
use crate::numerics::SymMatrix;

/// Per-column location and scale used to standardize both views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean_a: Vec<f64>,
    pub std_a: Vec<f64>,
    pub mean_b: Vec<f64>,
    pub std_b: Vec<f64>,
}

/// Two observation-aligned data matrices (views `a` and `b`).
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    view_a: DMatrix<f64>,
    view_b: DMatrix<f64>,
    names_a: Vec<String>,
    names_b: Vec<String>,
    standardized: bool,
    standardization: Option<Standardization>,
}

fn default_names(prefix: char, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

impl PairedDataset {
    /// Wraps two views, naming variables `a1..ap` and `b1..bq`.
    pub fn new(view_a: DMatrix<f64>, view_b: DMatrix<f64>) -> Result<Self> {
        let names_a = default_names('a', view_a.ncols());
        let names_b = default_names('b', view_b.ncols());
        Self::with_names(view_a, view_b, names_a, names_b)
    }

    pub fn with_names(
        view_a: DMatrix<f64>,
        view_b: DMatrix<f64>,
        names_a: Vec<String>,
        names_b: Vec<String>,
    ) -> Result<Self> {
        if view_a.nrows() != view_b.nrows() {
            return Err(CcaError::RowCountMismatch {
                rows_a: view_a.nrows(),
                rows_b: view_b.nrows(),
            });
        }
        if view_a.nrows() < 2 {
            return Err(CcaError::InvalidArgument(format!(
                "at least 2 observations are required, got {}",
                view_a.nrows()
            )));
        }
        if view_a.ncols() == 0 || view_b.ncols() == 0 {
            return Err(CcaError::InvalidArgument("each view needs at least one variable".into()));
        }
        if names_a.len() != view_a.ncols() || names_b.len() != view_b.ncols() {
            return Err(CcaError::DimensionMismatch(format!(
                "{} names for {} columns of view a, {} names for {} columns of view b",
                names_a.len(),
                view_a.ncols(),
                names_b.len(),
                view_b.ncols()
            )));
        }
        if view_a.iter().chain(view_b.iter()).any(|x| !x.is_finite()) {
            return Err(CcaError::NonFinite);
        }
        Ok(PairedDataset {
            view_a,
            view_b,
            names_a,
            names_b,
            standardized: false,
            standardization: None,
        })
    }

    pub fn n(&self) -> usize {
        self.view_a.nrows()
    }

    pub fn p(&self) -> usize {
        self.view_a.ncols()
    }

    pub fn q(&self) -> usize {
        self.view_b.ncols()
    }

    pub fn view_a(&self) -> &DMatrix<f64> {
        &self.view_a
    }

    pub fn view_b(&self) -> &DMatrix<f64> {
        &self.view_b
    }

    pub fn names_a(&self) -> &[String] {
        &self.names_a
    }

    pub fn names_b(&self) -> &[String] {
        &self.names_b
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Parameters mapping the original data onto this dataset, if it was
    /// produced by [`PairedDataset::standardize`].
    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// Centers every column and scales it by its sample standard deviation
    /// (divisor `n - 1`).
    ///
    /// Standardizing twice composes the parameters, so
    /// [`apply_standardization`](Self::apply_standardization) always maps raw
    /// data with the same columns onto this scale.
    pub fn standardize(&self) -> Result<PairedDataset> {
        let (view_a, mean_a, std_a) = standardize_view(&self.view_a, 'a', &self.names_a)?;
        let (view_b, mean_b, std_b) = standardize_view(&self.view_b, 'b', &self.names_b)?;
        let params = match &self.standardization {
            Some(prev) => Standardization {
                mean_a: compose_mean(&prev.mean_a, &prev.std_a, &mean_a),
                std_a: compose_std(&prev.std_a, &std_a),
                mean_b: compose_mean(&prev.mean_b, &prev.std_b, &mean_b),
                std_b: compose_std(&prev.std_b, &std_b),
            },
            None => Standardization {
                mean_a,
                std_a,
                mean_b,
                std_b,
            },
        };
        Ok(PairedDataset {
            view_a,
            view_b,
            names_a: self.names_a.clone(),
            names_b: self.names_b.clone(),
            standardized: true,
            standardization: Some(params),
        })
    }

    /// Applies this dataset's standardization parameters to other (raw) data
    /// with the same columns, e.g. a held-out test set.
    pub fn apply_standardization(&self, other: &PairedDataset) -> Result<PairedDataset> {
        let params = self.standardization.as_ref().ok_or(CcaError::NotStandardized)?;
        if other.p() != self.p() || other.q() != self.q() {
            return Err(CcaError::DimensionMismatch(format!(
                "training data is {}+{} columns, other data is {}+{}",
                self.p(),
                self.q(),
                other.p(),
                other.q()
            )));
        }
        let scale = |m: &DMatrix<f64>, mean: &[f64], std: &[f64]| {
            DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] - mean[j]) / std[j])
        };
        Ok(PairedDataset {
            view_a: scale(&other.view_a, &params.mean_a, &params.std_a),
            view_b: scale(&other.view_b, &params.mean_b, &params.std_b),
            names_a: other.names_a.clone(),
            names_b: other.names_b.clone(),
            standardized: false,
            standardization: None,
        })
    }

    /// Raw (unstandardized) subset of observations, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> PairedDataset {
        PairedDataset {
            view_a: self.view_a.select_rows(rows),
            view_b: self.view_b.select_rows(rows),
            names_a: self.names_a.clone(),
            names_b: self.names_b.clone(),
            standardized: false,
            standardization: None,
        }
    }

    /// Covariance blocks with divisor `n - 1`. Requires standardized data.
    pub fn covariance_blocks(&self) -> Result<CovarianceBlocks> {
        if !self.standardized {
            return Err(CcaError::NotStandardized);
        }
        CovarianceBlocks::from_views(&self.view_a, &self.view_b)
    }
}

fn compose_mean(prev_mean: &[f64], prev_std: &[f64], mean: &[f64]) -> Vec<f64> {
    prev_mean
        .iter()
        .zip(prev_std)
        .zip(mean)
        .map(|((m0, s0), m1)| m0 + s0 * m1)
        .collect()
}

fn compose_std(prev_std: &[f64], std: &[f64]) -> Vec<f64> {
    prev_std.iter().zip(std).map(|(a, b)| a * b).collect()
}

fn standardize_view(
    m: &DMatrix<f64>,
    view: char,
    names: &[String],
) -> Result<(DMatrix<f64>, Vec<f64>, Vec<f64>)> {
    let n = m.nrows() as f64;
    let mut out = m.clone();
    let mut means = Vec::with_capacity(m.ncols());
    let mut stds = Vec::with_capacity(m.ncols());
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let mean = col.sum() / n;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let std = var.sqrt();
        if !(std >= 1e-12) {
            return Err(CcaError::ConstantColumn {
                view,
                column: names[j].clone(),
            });
        }
        col.iter_mut().for_each(|x| *x = (*x - mean) / std);
        means.push(mean);
        stds.push(std);
    }
    Ok((out, means, stds))
}

/// Within- and cross-view sample covariance blocks. `C_ba` is `C_abᵀ`.
#[derive(Debug, Clone)]
pub struct CovarianceBlocks {
    pub caa: SymMatrix,
    pub cab: DMatrix<f64>,
    pub cbb: SymMatrix,
    pub n: usize,
}

impl CovarianceBlocks {
    /// Blocks of already-centered views, divisor `n - 1`.
    pub fn from_views(xa: &DMatrix<f64>, xb: &DMatrix<f64>) -> Result<Self> {
        if xa.nrows() != xb.nrows() {
            return Err(CcaError::RowCountMismatch {
                rows_a: xa.nrows(),
                rows_b: xb.nrows(),
            });
        }
        let n = xa.nrows();
        let d = (n as f64 - 1.0).max(1.0);
        Ok(CovarianceBlocks {
            caa: SymMatrix::from_product(xa.tr_mul(xa) / d)?,
            cab: xa.tr_mul(xb) / d,
            cbb: SymMatrix::from_product(xb.tr_mul(xb) / d)?,
            n,
        })
    }

    pub fn p(&self) -> usize {
        self.caa.order()
    }

    pub fn q(&self) -> usize {
        self.cbb.order()
    }

    pub fn cba(&self) -> DMatrix<f64> {
        self.cab.transpose()
    }

    /// The full `(p+q) × (p+q)` joint covariance matrix.
    pub fn joint(&self) -> DMatrix<f64> {
        let (p, q) = (self.p(), self.q());
        let mut c = DMatrix::zeros(p + q, p + q);
        c.view_mut((0, 0), (p, p)).copy_from(self.caa.matrix());
        c.view_mut((0, p), (p, q)).copy_from(&self.cab);
        c.view_mut((p, 0), (q, p)).copy_from(&self.cab.transpose());
        c.view_mut((p, p), (q, q)).copy_from(self.cbb.matrix());
        c
    }
}

/// Elementwise map applied to a view-a column to build a related view-b column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Identity,
    Negate,
    Cube,
    Exp,
}

impl Transform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Negate => -x,
            Transform::Cube => x * x * x,
            Transform::Exp => x.exp(),
        }
    }

    /// Human-readable label of the transformed variable, e.g. `exp(a3)`.
    pub fn label(self, var: &str) -> String {
        match self {
            Transform::Identity => var.to_string(),
            Transform::Negate => format!("-{var}"),
            Transform::Cube => format!("{var}^3"),
            Transform::Exp => format!("exp({var})"),
        }
    }
}

/// `b[target] = transform(a[source]) + N(0, noise_std²)`, zero-based indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub source: usize,
    pub target: usize,
    pub transform: Transform,
    pub noise_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecipeId {
    Example1,
    Example6,
    Example7,
    Example8,
    Example9,
    Example10,
}

impl RecipeId {
    pub const ALL: [RecipeId; 6] = [
        RecipeId::Example1,
        RecipeId::Example6,
        RecipeId::Example7,
        RecipeId::Example8,
        RecipeId::Example9,
        RecipeId::Example10,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecipeId::Example1 => "example1",
            RecipeId::Example6 => "example6",
            RecipeId::Example7 => "example7",
            RecipeId::Example8 => "example8",
            RecipeId::Example9 => "example9",
            RecipeId::Example10 => "example10",
        }
    }
}

impl fmt::Display for RecipeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecipeId {
    type Err = CcaError;

    fn from_str(s: &str) -> Result<Self> {
        RecipeId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = RecipeId::ALL.iter().map(|id| id.as_str()).collect();
                CcaError::InvalidArgument(format!(
                    "unknown recipe '{s}'; valid recipes: {}",
                    valid.join(", ")
                ))
            })
    }
}

/// Seeded generator for a two-view dataset with planted relations. Every
/// view-a column and every unrelated view-b column is standard normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRecipe {
    pub id: RecipeId,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub relations: Vec<Relation>,
    pub seed: u64,
}

const fn rel(source: usize, target: usize, transform: Transform, noise_std: f64) -> Relation {
    Relation {
        source,
        target,
        transform,
        noise_std,
    }
}

impl SyntheticRecipe {
    /// Preset dataset settings, keyed by recipe id:
    ///
    /// | recipe    | n     | p   | q   | relations                                   |
    /// |-----------|-------|-----|-----|---------------------------------------------|
    /// | example1  | 60    | 4   | 3   | b1=a3 (0.2), b2=a1 (0.4), b3=-a4 (0.3)      |
    /// | example6  | 60    | 70  | 10  | b1=a3 (0.01), b2=a1 (0.03), b3=-a4 (0.02)   |
    /// | example7  | 150   | 7   | 8   | b1=exp(a3) (0.4), b2=a1³ (0.2), b3=-a4 (0.3)|
    /// | example8  | 10000 | 7   | 8   | as example7                                 |
    /// | example9  | 50    | 100 | 150 | b1=a3 (0.08), b2=a1 (0.07), b3=-a4 (0.05)   |
    /// | example10 | 50    | 100 | 150 | none                                        |
    ///
    /// Numbers in parentheses are noise standard deviations.
    pub fn preset(id: RecipeId, seed: u64) -> Self {
        use Transform::*;
        let linear = |s1, s2, s3| {
            vec![
                rel(2, 0, Identity, s1),
                rel(0, 1, Identity, s2),
                rel(3, 2, Negate, s3),
            ]
        };
        let nonlinear = vec![rel(2, 0, Exp, 0.4), rel(0, 1, Cube, 0.2), rel(3, 2, Negate, 0.3)];
        let (n, p, q, relations) = match id {
            RecipeId::Example1 => (60, 4, 3, linear(0.2, 0.4, 0.3)),
            RecipeId::Example6 => (60, 70, 10, linear(0.01, 0.03, 0.02)),
            RecipeId::Example7 => (150, 7, 8, nonlinear),
            RecipeId::Example8 => (10_000, 7, 8, nonlinear),
            RecipeId::Example9 => (50, 100, 150, linear(0.08, 0.07, 0.05)),
            RecipeId::Example10 => (50, 100, 150, Vec::new()),
        };
        SyntheticRecipe {
            id,
            n,
            p,
            q,
            relations,
            seed,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p == 0 || self.q == 0 {
            return Err(CcaError::InvalidArgument(format!(
                "recipe needs n >= 2 and p, q >= 1, got n={}, p={}, q={}",
                self.n, self.p, self.q
            )));
        }
        for r in &self.relations {
            if r.source >= self.p || r.target >= self.q {
                return Err(CcaError::InvalidArgument(format!(
                    "relation a{} -> b{} out of bounds for p={}, q={}",
                    r.source + 1,
                    r.target + 1,
                    self.p,
                    self.q
                )));
            }
            if !(r.noise_std >= 0.0) || !r.noise_std.is_finite() {
                return Err(CcaError::InvalidArgument(format!(
                    "noise standard deviation must be finite and >= 0, got {}",
                    r.noise_std
                )));
            }
        }
        Ok(())
    }

    /// Draws the raw (unstandardized) views.
    ///
    /// Uses ChaCha8 seeded from `seed`; normal variates come from
    /// `rand_distr::StandardNormal` (ziggurat). View a is drawn row by row,
    /// then view b column by column.
    pub fn generate_raw(&self) -> Result<PairedDataset> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut a = DMatrix::zeros(self.n, self.p);
        for i in 0..self.n {
            for j in 0..self.p {
                a[(i, j)] = rng.sample(StandardNormal);
            }
        }
        let mut b = DMatrix::zeros(self.n, self.q);
        for j in 0..self.q {
            let relation = self.relations.iter().find(|r| r.target == j);
            for i in 0..self.n {
                let z: f64 = rng.sample(StandardNormal);
                b[(i, j)] = match relation {
                    Some(r) => r.transform.apply(a[(i, r.source)]) + r.noise_std * z,
                    None => z,
                };
            }
        }
        PairedDataset::new(a, b)
    }

    /// Planted signals `transform(a_source)` computed from view a of `data`,
    /// labelled like `exp(a3)`.
    pub fn planted_signals(&self, data: &PairedDataset) -> Vec<(String, DVector<f64>)> {
        self.relations
            .iter()
            .map(|r| {
                let name = r.transform.label(&data.names_a()[r.source]);
                let signal = data.view_a().column(r.source).map(|x| r.transform.apply(x));
                (name, signal)
            })
            .collect()
    }
}

/// Generates the recipe's data and standardizes it.
pub fn generate_synthetic(recipe: &SyntheticRecipe) -> Result<PairedDataset> {
    recipe.generate_raw()?.standardize()
}

/// Fold index per observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub assignment: Vec<usize>,
    pub folds: usize,
    pub seed: u64,
}

impl FoldAssignment {
    /// Observation indices belonging to `fold`, ascending.
    pub fn members(&self, fold: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Observation indices outside `fold`, ascending.
    pub fn complement(&self, fold: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.folds];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded Fisher-Yates shuffle followed by round-robin fold assignment.
pub fn split_folds(n: usize, folds: usize, seed: u64) -> Result<FoldAssignment> {
    if folds < 2 || folds > n {
        return Err(CcaError::InvalidArgument(format!(
            "fold count must satisfy 2 <= F <= n, got F={folds}, n={n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut assignment = vec![0; n];
    for (pos, &obs) in order.iter().enumerate() {
        assignment[obs] = pos % folds;
    }
    Ok(FoldAssignment {
        assignment,
        folds,
        seed,
    })
}
