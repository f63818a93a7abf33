//! Ridge-regularised CCA and the repeated k-fold cross-validation search over
//! the ridge constants.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{split_folds, CovarianceBlocks, PairedDataset};
use crate::error::{CcaError, Result};
use crate::linear::{checked_blocks, project, solve_eig, CcaModel};

/// Score recorded for a grid cell whose fit failed on some fold.
pub const FAILED_CELL_SCORE: f64 = -1.0;

/// How the held-out fold is scaled before projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestScaling {
    /// The test fold is standardized with its own means and deviations.
    #[default]
    OwnStatistics,
    /// The test fold reuses the training fold's means and deviations.
    TrainingStatistics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizationConfig {
    pub c1_grid: Vec<f64>,
    pub c2_grid: Vec<f64>,
    pub folds: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub test_scaling: TestScaling,
}

impl Default for RegularizationConfig {
    fn default() -> Self {
        RegularizationConfig {
            c1_grid: log_grid(1e-3, 1e3, 15),
            c2_grid: log_grid(1e-3, 1e3, 15),
            folds: 5,
            repetitions: 10,
            seed: 0,
            test_scaling: TestScaling::OwnStatistics,
        }
    }
}

impl RegularizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c1_grid.is_empty() || self.c2_grid.is_empty() {
            return Err(CcaError::InvalidArgument("ridge grids must be nonempty".into()));
        }
        if let Some(c) = self
            .c1_grid
            .iter()
            .chain(&self.c2_grid)
            .find(|c| !(c.is_finite() && **c >= 0.0))
        {
            return Err(CcaError::InvalidArgument(format!(
                "ridge candidates must be finite and >= 0, got {c}"
            )));
        }
        if self.folds < 2 {
            return Err(CcaError::InvalidArgument(format!(
                "fold count must be >= 2, got {}",
                self.folds
            )));
        }
        if self.repetitions < 1 {
            return Err(CcaError::InvalidArgument("repetition count must be >= 1".into()));
        }
        Ok(())
    }
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (l, h) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| 10f64.powf(l + (h - l) * i as f64 / (count - 1) as f64))
        .collect()
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn lin_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Parses `log:lo:hi:count`, `lin:lo:hi:count`, or a comma-separated list of
/// values.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |msg: &str| {
        CcaError::InvalidArgument(format!(
            "invalid grid '{spec}': {msg} (expected log:lo:hi:count, lin:lo:hi:count or v1,v2,...)"
        ))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [kind @ ("log" | "lin"), lo, hi, count] => {
            let lo: f64 = lo.trim().parse().map_err(|_| bad("bad lower bound"))?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad("bad upper bound"))?;
            let count: usize = count.trim().parse().map_err(|_| bad("bad count"))?;
            if count == 0 {
                return Err(bad("count must be positive"));
            }
            if hi < lo {
                return Err(bad("upper bound below lower bound"));
            }
            if *kind == "log" {
                if !(lo > 0.0) {
                    return Err(bad("log grid bounds must be positive"));
                }
                log_grid(lo, hi, count)
            } else {
                lin_grid(lo, hi, count)
            }
        }
        [list] => list
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad("bad value")))
            .collect::<Result<Vec<f64>>>()?,
        _ => return Err(bad("unrecognised form")),
    };
    if grid.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(bad("values must be finite and >= 0"));
    }
    Ok(grid)
}

/// Ridge CCA: the eigen route with `C_aa + c1·I` and `C_bb + c2·I`. Weights
/// satisfy `wᵀ(C + cI)w = 1`; correlations are the cosines of the training
/// images, reported in eigenvalue order.
pub fn fit_regularized(blocks: &CovarianceBlocks, c1: f64, c2: f64, r: usize) -> Result<CcaModel> {
    if !(c1 >= 0.0 && c2 >= 0.0 && c1.is_finite() && c2.is_finite()) {
        return Err(CcaError::InvalidArgument(format!(
            "ridge constants must be finite and >= 0, got c1={c1}, c2={c2}"
        )));
    }
    let (caa, cbb) = checked_blocks(blocks, r, c1, c2)?;
    solve_eig(blocks, &caa, &cbb, r, (c1, c2))
}

/// Standardizes `data`, fits and attaches training images.
pub fn fit_regularized_data(data: &PairedDataset, c1: f64, c2: f64, r: usize) -> Result<CcaModel> {
    let data = data.standardize()?;
    let mut model = fit_regularized(&data.covariance_blocks()?, c1, c2, r)?;
    model.attach_images(&data)?;
    Ok(model)
}

/// Mean held-out first canonical correlation for every `(c1, c2)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CvSurface {
    pub c1_grid: Vec<f64>,
    pub c2_grid: Vec<f64>,
    /// `scores[(i, j)]` belongs to `(c1_grid[i], c2_grid[j])`.
    pub scores: DMatrix<f64>,
    pub selected: (f64, f64),
    pub selected_score: f64,
}

impl CvSurface {
    /// CSV with header `c1,c2,mean_test_correlation`, one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("c1,c2,mean_test_correlation\n");
        for (i, c1) in self.c1_grid.iter().enumerate() {
            for (j, c2) in self.c2_grid.iter().enumerate() {
                let _ = writeln!(out, "{c1:.16e},{c2:.16e},{:.16e}", self.scores[(i, j)]);
            }
        }
        out
    }
}

struct FoldData {
    train: CovarianceBlocks,
    test: PairedDataset,
}

fn prepare_fold(data: &PairedDataset, train_rows: &[usize], test_rows: &[usize], scaling: TestScaling) -> Option<FoldData> {
    let train = data.select_rows(train_rows).standardize().ok()?;
    let raw_test = data.select_rows(test_rows);
    let test = match scaling {
        TestScaling::OwnStatistics => raw_test.standardize().ok()?,
        TestScaling::TrainingStatistics => train.apply_standardization(&raw_test).ok()?,
    };
    Some(FoldData {
        train: train.covariance_blocks().ok()?,
        test,
    })
}

fn fold_score(fold: &FoldData, c1: f64, c2: f64) -> Result<f64> {
    let m = fit_regularized(&fold.train, c1, c2, 1)?;
    Ok(project(&m, &fold.test)?.correlations[0])
}

/// Repeated k-fold cross-validation of the first canonical correlation.
///
/// Each repetition draws a fresh fold split. For every fold and grid cell the
/// training part is standardized and fitted, the held-out part is scaled per
/// `config.test_scaling` and projected, and `cos(z_a, z_b)` is recorded.
/// Scores are averaged over folds, then repetitions. A fold whose fit fails
/// scores [`FAILED_CELL_SCORE`]. The best cell wins; ties go to the smallest
/// `c1 + c2`.
pub fn cross_validate(data: &PairedDataset, config: &RegularizationConfig) -> Result<CvSurface> {
    cv_engine(
        data.n(),
        config,
        |train, test| prepare_fold(data, train, test, config.test_scaling),
        fold_score,
    )
}

/// Grid search shared by the linear and kernel paths. `prepare` builds the
/// per-fold state from (training rows, test rows); `score` evaluates one
/// grid cell on one fold.
pub(crate) fn cv_engine<T, P, S>(n: usize, config: &RegularizationConfig, prepare: P, score: S) -> Result<CvSurface>
where
    T: Send + Sync,
    P: Fn(&[usize], &[usize]) -> Option<T> + Sync,
    S: Fn(&T, f64, f64) -> Result<f64> + Sync,
{
    config.validate()?;
    if n < 2 * config.folds {
        return Err(CcaError::InvalidArgument(format!(
            "cross-validation needs n >= 2F, got n={n}, F={}",
            config.folds
        )));
    }
    let mut seeder = ChaCha8Rng::seed_from_u64(config.seed);
    let rep_seeds: Vec<u64> = (0..config.repetitions).map(|_| seeder.next_u64()).collect();

    let mut folds = Vec::with_capacity(config.repetitions * config.folds);
    for &seed in &rep_seeds {
        let assignment = split_folds(n, config.folds, seed)?;
        for f in 0..config.folds {
            folds.push((assignment.complement(f), assignment.members(f)));
        }
    }
    let prepared: Vec<Option<T>> = folds.par_iter().map(|(train, test)| prepare(train, test)).collect();

    let (g1, g2) = (config.c1_grid.len(), config.c2_grid.len());
    let cells: Vec<(usize, usize)> = (0..g1).flat_map(|i| (0..g2).map(move |j| (i, j))).collect();
    // Each cell sums its folds in a fixed order, so the result does not
    // depend on scheduling.
    let per_cell: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            let (c1, c2) = (config.c1_grid[i], config.c2_grid[j]);
            let mut total = 0.0;
            for rep in 0..config.repetitions {
                let mut fold_sum = 0.0;
                for f in 0..config.folds {
                    fold_sum += prepared[rep * config.folds + f]
                        .as_ref()
                        .and_then(|fold| score(fold, c1, c2).ok())
                        .filter(|s| s.is_finite())
                        .unwrap_or(FAILED_CELL_SCORE);
                }
                total += fold_sum / config.folds as f64;
            }
            total / config.repetitions as f64
        })
        .collect();

    let mut scores = DMatrix::zeros(g1, g2);
    let mut best: Option<(usize, usize)> = None;
    for (&(i, j), &s) in cells.iter().zip(&per_cell) {
        scores[(i, j)] = s;
        let better = match best {
            None => true,
            Some((bi, bj)) => {
                let bs = scores[(bi, bj)];
                s > bs
                    || (s == bs
                        && config.c1_grid[i] + config.c2_grid[j] < config.c1_grid[bi] + config.c2_grid[bj])
            }
        };
        if better {
            best = Some((i, j));
        }
    }
    let (bi, bj) = best.expect("grids are nonempty");
    Ok(CvSurface {
        c1_grid: config.c1_grid.clone(),
        c2_grid: config.c2_grid.clone(),
        selected: (config.c1_grid[bi], config.c2_grid[bj]),
        selected_score: scores[(bi, bj)],
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, RecipeId, SyntheticRecipe};
    use crate::linear::fit_standard_eig;

    #[test]
    fn zero_ridge_matches_standard_solver() {
        let d = generate_synthetic(&SyntheticRecipe::preset(RecipeId::Example1, 2)).unwrap();
        let b = d.covariance_blocks().unwrap();
        let reg = fit_regularized(&b, 0.0, 0.0, 3).unwrap();
        let std = fit_standard_eig(&b, 3).unwrap();
        assert!((&reg.correlations - &std.correlations).amax() < 1e-8);
        assert!((&reg.weights_a - &std.weights_a).amax() < 1e-8);
    }

    #[test]
    fn ridged_constraint_holds() {
        let d = generate_synthetic(&SyntheticRecipe::preset(RecipeId::Example6, 2)).unwrap();
        let b = d.covariance_blocks().unwrap();
        let m = fit_regularized(&b, 0.09, 0.0, 3).unwrap();
        for i in 0..3 {
            let w = m.weights_a.column(i);
            let v = (w.transpose() * b.caa.add_ridge(0.09).matrix() * w)[(0, 0)];
            assert!((v - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn grids() {
        let g = log_grid(1e-3, 1e3, 7);
        assert_eq!(g.len(), 7);
        assert!((g[0] - 1e-3).abs() < 1e-15 && (g[3] - 1.0).abs() < 1e-12 && (g[6] - 1e3).abs() < 1e-9);
        assert_eq!(parse_grid("lin:0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0, 0.5").unwrap(), vec![0.0, 0.5]);
        assert_eq!(parse_grid("log:1e-3:1e3:15").unwrap().len(), 15);
        for bad in ["log:0:1:3", "lin:1:0:3", "geo:1:2:3", "lin:0:1:0", "a,b", "-1"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn single_cell_is_selected() {
        let d = generate_synthetic(&SyntheticRecipe::preset(RecipeId::Example1, 0)).unwrap();
        let config = RegularizationConfig {
            c1_grid: vec![0.5],
            c2_grid: vec![0.1],
            folds: 3,
            repetitions: 2,
            seed: 1,
            ..Default::default()
        };
        let s = cross_validate(&d, &config).unwrap();
        assert_eq!(s.selected, (0.5, 0.1));
        assert!(s.selected_score <= 1.0 && s.selected_score >= -1.0);
    }

    #[test]
    fn cv_requires_enough_rows() {
        let d = generate_synthetic(&SyntheticRecipe::preset(RecipeId::Example1, 0).with_n(9)).unwrap();
        let config = RegularizationConfig {
            folds: 5,
            ..Default::default()
        };
        assert!(cross_validate(&d, &config).is_err());
    }

    #[test]
    fn csv_layout() {
        let s = CvSurface {
            c1_grid: vec![1.0, 2.0],
            c2_grid: vec![0.0],
            scores: DMatrix::from_row_slice(2, 1, &[0.5, 0.25]),
            selected: (1.0, 0.0),
            selected_score: 0.5,
        };
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "c1,c2,mean_test_correlation");
        assert!(lines[2].starts_with("2.0000000000000000e0,"));
    }
}
