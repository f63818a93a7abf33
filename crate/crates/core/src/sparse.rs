//! Sparse CCA: penalised matrix decomposition of `C_ab` with deflation, and
//! the primal-dual L1-penalised least-squares formulation between a data
//! view and a kernel view.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{CcaError, Result};
use crate::numerics::{orient_sign, svd};
use crate::util::cosine;

/// `sign(a_i) · max(|a_i| - c, 0)` elementwise.
pub fn soft_threshold(a: &DVector<f64>, c: f64) -> DVector<f64> {
    a.map(|x| x.signum() * (x.abs() - c).max(0.0))
}

const BISECTION_TOL: f64 = 1e-6;
const BISECTION_MAX_ITER: usize = 100;

/// Solves `max ⟨u, a⟩` subject to `‖u‖₂ <= 1`, `‖u‖₁ <= c`.
///
/// Returns `u = S(a, δ) / ‖S(a, δ)‖₂` and the threshold `δ`: zero when the
/// unconstrained unit vector is already feasible, otherwise found by
/// bisection on `[0, max|a_i|]`. If ties in `|a|` make the L1 target
/// unreachable on the unit sphere, the result is scaled down onto
/// `‖u‖₁ = c`.
pub fn sparse_unit_solve(a: &DVector<f64>, c: f64) -> Result<(DVector<f64>, f64)> {
    if !(c >= 1.0) {
        return Err(CcaError::InvalidArgument(format!(
            "L1 budget must be >= 1 for a feasible unit vector, got {c}"
        )));
    }
    let norm = a.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(CcaError::InvalidArgument(
            "sparse_unit_solve needs a nonzero, finite vector".into(),
        ));
    }
    let unit = a / norm;
    if unit.lp_norm(1) <= c {
        return Ok((unit, 0.0));
    }
    let l1_of = |delta: f64| -> Option<(DVector<f64>, f64)> {
        let s = soft_threshold(a, delta);
        let n = s.norm();
        (n > 0.0).then(|| {
            let u = s / n;
            let l1 = u.lp_norm(1);
            (u, l1)
        })
    };
    let (mut lo, mut hi) = (0.0, a.amax());
    let mut best: Option<(DVector<f64>, f64)> = None;
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        match l1_of(mid) {
            Some((u, l1)) => {
                if (l1 - c).abs() <= BISECTION_TOL {
                    return Ok((u, mid));
                }
                if l1 > c {
                    lo = mid;
                } else {
                    best = Some((u, mid));
                    hi = mid;
                }
            }
            None => hi = mid,
        }
    }
    // Feasible side of the bracket, or the last nonzero threshold scaled
    // onto the L1 ball when ties stop the bisection short of c.
    let (mut u, delta) = match best {
        Some(found) => found,
        None => {
            let (u, _) = l1_of(lo).expect("lower bracket keeps a nonzero entry");
            (u, lo)
        }
    };
    let l1 = u.lp_norm(1);
    if l1 > c + BISECTION_TOL {
        u *= c / l1;
    }
    Ok((u, delta))
}

/// One rank of a penalised matrix decomposition.
#[derive(Debug, Clone)]
pub struct PmdComponent {
    pub w_a: DVector<f64>,
    pub w_b: DVector<f64>,
    /// `w_aᵀ C^k w_b` on the residual this rank was fitted to.
    pub sigma: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `w_aᵀ C^k w_b` after every alternation.
    pub objective_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PmdResult {
    pub components: Vec<PmdComponent>,
    pub c1: f64,
    pub c2: f64,
    /// Frobenius norm of the residual before each rank and after the last.
    pub residual_norms: Vec<f64>,
}

impl PmdResult {
    pub fn weights_a(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.components.iter().map(|c| c.w_a.clone()).collect::<Vec<_>>())
    }

    pub fn weights_b(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.components.iter().map(|c| c.w_b.clone()).collect::<Vec<_>>())
    }

    /// Index of the largest-magnitude entry of each `(w_a, w_b)` pair.
    pub fn leading_indices(&self) -> Vec<(usize, usize)> {
        self.components
            .iter()
            .map(|c| (c.w_a.iamax(), c.w_b.iamax()))
            .collect()
    }
}

/// Default L1 budget `max(1, 0.3 · √dim)` for a view with `dim` variables.
pub fn default_budget(dim: usize) -> f64 {
    (0.3 * (dim as f64).sqrt()).max(1.0)
}

const PMD_TOL: f64 = 1e-6;
const PMD_MAX_ITER: usize = 500;

/// Rank-`r` penalised matrix decomposition of `cab` with L1 budgets `c1`
/// (view a) and `c2` (view b), deflating `C ← C - σ w_a w_bᵀ` after each rank.
pub fn fit_pmd(cab: &DMatrix<f64>, c1: f64, c2: f64, r: usize) -> Result<PmdResult> {
    let (p, q) = cab.shape();
    let check = |c: f64, dim: usize, name: &str| {
        if !(c >= 1.0 && c <= (dim as f64).sqrt() + 1e-12) {
            Err(CcaError::InvalidArgument(format!(
                "budget {name} must satisfy 1 <= {name} <= sqrt({dim}) = {:.4}, got {c}",
                (dim as f64).sqrt()
            )))
        } else {
            Ok(())
        }
    };
    check(c1, p, "c1")?;
    check(c2, q, "c2")?;
    if r == 0 || r > p.min(q) {
        return Err(CcaError::InvalidArgument(format!(
            "rank count must satisfy 1 <= r <= min(p, q) = {}, got {r}",
            p.min(q)
        )));
    }
    if cab.iter().any(|x| !x.is_finite()) {
        return Err(CcaError::NonFinite);
    }

    let mut residual = cab.clone();
    let mut residual_norms = vec![residual.norm()];
    let mut components = Vec::with_capacity(r);
    for _ in 0..r {
        let component = pmd_rank_one(&residual, c1, c2)?;
        residual -= component.sigma * &component.w_a * component.w_b.transpose();
        residual_norms.push(residual.norm());
        components.push(component);
    }
    Ok(PmdResult {
        components,
        c1,
        c2,
        residual_norms,
    })
}

fn pmd_rank_one(c: &DMatrix<f64>, c1: f64, c2: f64) -> Result<PmdComponent> {
    let (p, q) = c.shape();
    let scale = c.amax();
    let exhausted = PmdComponent {
        w_a: DVector::zeros(p),
        w_b: DVector::zeros(q),
        sigma: 0.0,
        iterations: 0,
        converged: true,
        objective_history: Vec::new(),
    };
    if !(scale > 0.0) {
        return Ok(exhausted);
    }
    let dec = svd(c)?;
    if !(dec.singular_values[0] > 1e-14 * scale) {
        return Ok(exhausted);
    }
    let mut w_b = dec.v.column(0).into_owned();
    let mut w_a = DVector::zeros(p);
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < PMD_MAX_ITER {
        iterations += 1;
        let target_a = c * &w_b;
        if target_a.amax() == 0.0 {
            break;
        }
        let (new_a, _) = sparse_unit_solve(&target_a, c1)?;
        let target_b = c.tr_mul(&new_a);
        if target_b.amax() == 0.0 {
            w_a = new_a;
            break;
        }
        let (new_b, _) = sparse_unit_solve(&target_b, c2)?;
        let change = (&new_a - &w_a).amax().max((&new_b - &w_b).amax());
        w_a = new_a;
        w_b = new_b;
        history.push(w_a.dot(&(c * &w_b)));
        if change <= PMD_TOL {
            converged = true;
            break;
        }
    }
    if orient_sign(w_a.as_mut_slice()) < 0.0 {
        w_b.neg_mut();
    }
    let sigma = w_a.dot(&(c * &w_b));
    Ok(PmdComponent {
        w_a,
        w_b,
        sigma: sigma.max(0.0),
        iterations,
        converged,
        objective_history: history,
    })
}

/// Result of the primal-dual sparse CCA for one basis index `k`.
#[derive(Debug, Clone)]
pub struct PrimalDualResult {
    pub w_a: DVector<f64>,
    /// Dual weights with `beta[k] = 1` and `|beta[j]| <= 1`.
    pub beta: DVector<f64>,
    /// Zero-based basis index.
    pub k: usize,
    pub objective: f64,
    /// Cosine between `X_a w_a` and `K_b β`.
    pub correlation: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `w_a` is identically zero.
    pub degenerate: bool,
    /// Objective before the first and after every outer iteration.
    pub objective_history: Vec<f64>,
}

impl PrimalDualResult {
    pub fn nonzero_weights(&self) -> usize {
        self.w_a.iter().filter(|w| **w != 0.0).count()
    }
}

const PD_TOL: f64 = 1e-8;
const PD_MAX_OUTER: usize = 1000;
const PD_INNER_SWEEPS: usize = 50;

/// Default `μ = γ = 0.1 · max |X_aᵀ K_b|`.
pub fn default_penalty(xa: &DMatrix<f64>, kb: &DMatrix<f64>) -> f64 {
    0.1 * xa.tr_mul(kb).amax()
}

fn objective(xa: &DMatrix<f64>, kb: &DMatrix<f64>, w: &DVector<f64>, beta: &DVector<f64>, k: usize, mu: f64, gamma: f64) -> f64 {
    let fit = (xa * w - kb * beta).norm_squared();
    let l1_beta: f64 = beta.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, b)| b.abs()).sum();
    fit + mu * w.lp_norm(1) + gamma * l1_beta
}

/// Minimises `‖X_a w_a - K_b β‖² + μ‖w_a‖₁ + γ‖β̃‖₁` with `β_k = 1` and
/// `|β_j| <= 1` (so `‖β‖∞ = 1`), where `β̃` is `β` without entry `k`.
///
/// Alternates cyclic coordinate descent on `w_a` (lasso against the target
/// `K_b β`) and on `β̃` (box-constrained lasso against `X_a w_a - K_b e_k`).
/// Every coordinate step minimises the objective exactly in that coordinate,
/// so the objective never increases. Stops once an outer iteration lowers
/// the objective by at most `1e-8 · max(1, f)`, or after 1000 iterations.
pub fn fit_primal_dual(xa: &DMatrix<f64>, kb: &DMatrix<f64>, mu: f64, gamma: f64, k: usize) -> Result<PrimalDualResult> {
    let (n, p) = xa.shape();
    if kb.nrows() != n || kb.ncols() != n {
        return Err(CcaError::DimensionMismatch(format!(
            "X_a has {n} rows but K_b is {}x{}",
            kb.nrows(),
            kb.ncols()
        )));
    }
    if k >= n {
        return Err(CcaError::InvalidArgument(format!(
            "basis index {} out of range 1..={n}",
            k + 1
        )));
    }
    if !(mu >= 0.0 && gamma >= 0.0 && mu.is_finite() && gamma.is_finite()) {
        return Err(CcaError::InvalidArgument(format!(
            "penalties must be finite and >= 0, got mu={mu}, gamma={gamma}"
        )));
    }
    let x_sq: Vec<f64> = (0..p).map(|j| xa.column(j).norm_squared()).collect();
    let k_sq: Vec<f64> = (0..n).map(|j| kb.column(j).norm_squared()).collect();

    let mut w = DVector::zeros(p);
    let mut beta = DVector::zeros(n);
    beta[k] = 1.0;
    // Residual X_a w - K_b β, kept current through every coordinate step.
    let mut resid = -kb.column(k).into_owned();
    let mut f = objective(xa, kb, &w, &beta, k, mu, gamma);
    let mut history = vec![f];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < PD_MAX_OUTER {
        iterations += 1;
        for _ in 0..PD_INNER_SWEEPS {
            let mut max_step = 0.0_f64;
            for j in 0..p {
                if x_sq[j] == 0.0 {
                    continue;
                }
                let col = xa.column(j);
                let old = w[j];
                // Minimiser of ‖resid - x_j old + x_j t‖² + μ|t|.
                let rho = old * x_sq[j] - col.dot(&resid);
                let new = rho.signum() * (rho.abs() - mu / 2.0).max(0.0) / x_sq[j];
                if new != old {
                    resid.axpy(new - old, &col, 1.0);
                    w[j] = new;
                    max_step = max_step.max((new - old).abs());
                }
            }
            if max_step <= 1e-12 {
                break;
            }
        }
        for _ in 0..PD_INNER_SWEEPS {
            let mut max_step = 0.0_f64;
            for j in 0..n {
                if j == k || k_sq[j] == 0.0 {
                    continue;
                }
                let col = kb.column(j);
                let old = beta[j];
                // resid = X w - K β, so β_j enters with a minus sign.
                let rho = old * k_sq[j] + col.dot(&resid);
                let new = (rho.signum() * (rho.abs() - gamma / 2.0).max(0.0) / k_sq[j]).clamp(-1.0, 1.0);
                if new != old {
                    resid.axpy(-(new - old), &col, 1.0);
                    beta[j] = new;
                    max_step = max_step.max((new - old).abs());
                }
            }
            if max_step <= 1e-12 {
                break;
            }
        }
        // Recompute from scratch so drift in the running residual cannot
        // accumulate.
        resid = xa * &w - kb * &beta;
        let next = objective(xa, kb, &w, &beta, k, mu, gamma);
        history.push(next);
        let decrease = f - next;
        f = next.min(f);
        if decrease <= PD_TOL * f.max(1.0) {
            converged = true;
            break;
        }
    }
    let degenerate = w.iter().all(|x| *x == 0.0);
    let za = xa * &w;
    let zb = kb * &beta;
    let correlation = if degenerate {
        0.0
    } else {
        cosine(za.column(0), zb.column(0))
    };
    Ok(PrimalDualResult {
        w_a: w,
        beta,
        k,
        objective: f.max(0.0),
        correlation,
        iterations,
        converged,
        degenerate,
        objective_history: history,
    })
}

/// Runs [`fit_primal_dual`] for every basis index and returns the fit with
/// the smallest objective (ties go to the smaller index). Failed indices
/// are skipped; only an all-failed scan is an error.
pub fn scan_basis(xa: &DMatrix<f64>, kb: &DMatrix<f64>, mu: f64, gamma: f64) -> Result<PrimalDualResult> {
    scan_basis_all(xa, kb, mu, gamma).map(|(best, _)| best)
}

/// As [`scan_basis`], also returning the objective for every index
/// (`None` where the fit failed).
pub fn scan_basis_all(
    xa: &DMatrix<f64>,
    kb: &DMatrix<f64>,
    mu: f64,
    gamma: f64,
) -> Result<(PrimalDualResult, Vec<Option<f64>>)> {
    let n = xa.nrows();
    if kb.nrows() != n {
        return Err(CcaError::DimensionMismatch(format!(
            "X_a has {n} rows but K_b has {}",
            kb.nrows()
        )));
    }
    let fits: Vec<Result<PrimalDualResult>> = (0..n)
        .into_par_iter()
        .map(|k| fit_primal_dual(xa, kb, mu, gamma, k))
        .collect();
    if let Some(Err(e)) = fits.first() {
        if !e.is_numerical() && fits.iter().all(|f| f.is_err()) {
            return Err(e.clone());
        }
    }
    let objectives: Vec<Option<f64>> = fits.iter().map(|f| f.as_ref().ok().map(|r| r.objective)).collect();
    let best = fits
        .into_iter()
        .flatten()
        .fold(None::<PrimalDualResult>, |best, fit| match best {
            Some(b) if b.objective <= fit.objective => Some(b),
            _ => Some(fit),
        })
        .ok_or(CcaError::AllBasisFitsFailed(n))?;
    Ok((best, objectives))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn dv(values: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(values)
    }

    #[test]
    fn soft_threshold_definition() {
        assert_eq!(soft_threshold(&dv(&[3.0, -3.0, 0.5]), 1.0), dv(&[2.0, -2.0, 0.0]));
        let a = dv(&[0.3, -1.2, 4.0]);
        assert_eq!(soft_threshold(&a, 0.0), a);
        assert_eq!(soft_threshold(&a, 4.0), DVector::zeros(3));
    }

    #[test]
    fn sparse_unit_solve_examples() {
        let (u, _) = sparse_unit_solve(&dv(&[3.0, 1.0]), 1.0).unwrap();
        assert!((u - dv(&[1.0, 0.0])).amax() < 1e-6);
        let (u, delta) = sparse_unit_solve(&dv(&[3.0, 4.0]), 2f64.sqrt()).unwrap();
        assert_eq!(delta, 0.0);
        assert!((u - dv(&[0.6, 0.8])).amax() < 1e-12);
        assert!(sparse_unit_solve(&dv(&[1.0, 2.0]), 0.5).is_err());
        assert!(sparse_unit_solve(&dv(&[0.0, 0.0]), 1.0).is_err());
    }

    #[test]
    fn sparse_unit_solve_with_ties_stays_feasible() {
        let (u, _) = sparse_unit_solve(&dv(&[2.0, -2.0, 1.0]), 1.0).unwrap();
        assert!(u.lp_norm(1) <= 1.0 + 1e-6);
        assert!(u.norm() <= 1.0 + 1e-12);
        assert_eq!(u[2], 0.0);
    }

    #[test]
    fn pmd_axis_matrix() {
        let mut c = DMatrix::zeros(4, 3);
        c[(0, 0)] = 1.0;
        let res = fit_pmd(&c, 1.5, 1.2, 1).unwrap();
        let comp = &res.components[0];
        assert!((comp.sigma - 1.0).abs() < 1e-12);
        assert!((comp.w_a[0] - 1.0).abs() < 1e-12 && (comp.w_b[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pmd_budget_validation() {
        let c = DMatrix::from_element(4, 4, 0.1);
        assert!(fit_pmd(&c, 0.9, 1.0, 1).is_err());
        assert!(fit_pmd(&c, 1.0, 2.1, 1).is_err());
        assert!(fit_pmd(&c, 1.0, 2.0, 5).is_err());
    }

    #[test]
    fn primal_dual_large_penalty_is_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xa = DMatrix::from_fn(8, 5, |_, _| rng.sample(StandardNormal));
        let b = DMatrix::from_fn(8, 8, |_, _| rng.sample::<f64, _>(StandardNormal));
        let kb = &b * b.transpose();
        let res = fit_primal_dual(&xa, &kb, 1e6, 0.0, 2).unwrap();
        assert!(res.degenerate);
        assert_eq!(res.nonzero_weights(), 0);
        assert_eq!(res.beta[2], 1.0);
        assert!(fit_primal_dual(&xa, &kb, 0.1, 0.1, 8).is_err());
    }

    #[test]
    fn scan_picks_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xa = DMatrix::from_fn(3, 4, |_, _| rng.sample(StandardNormal));
        let b = DMatrix::from_fn(3, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let kb = &b * b.transpose();
        let best = scan_basis(&xa, &kb, 0.05, 0.05).unwrap();
        let manual: Vec<f64> = (0..3)
            .map(|k| fit_primal_dual(&xa, &kb, 0.05, 0.05, k).unwrap().objective)
            .collect();
        let min = manual.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(best.objective, min);
        assert_eq!(best.k, manual.iter().position(|&f| f == min).unwrap());
    }
}
