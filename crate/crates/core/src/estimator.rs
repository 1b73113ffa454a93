//! Conjugate inverse-Wishart shrinkage: the closed-form marginal likelihood,
//! the posterior over a grid of (shrinkage intensity, target) pairs, and the
//! target-averaged estimate built from it.
//!
//! Under `Sigma | alpha, Delta ~ Inv-Wishart(alpha, Delta)` (mean-centred
//! parametrisation, `E[Sigma] = Delta`) the posterior mean given data is the
//! single-target estimate `alpha * Delta + (1 - alpha) * S`. Averaging over a
//! uniform discrete prior on `alpha` and on the target gives a convex
//! combination of all targets and `S`, with target-specific weights
//! `w_l = sum_k a_k * P(a_k, D_l | X)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, log_sum_exp, mv_log_gamma, tol, SymMatrix};
use crate::targets::{ShrinkageTarget, TargetSet};

/// Default spacing of the shrinkage-intensity grid (99 points).
pub const DEFAULT_ALPHA_STEP: f64 = 0.01;

/// Strictly increasing grid of shrinkage intensities inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaGrid {
    values: Vec<f64>,
}

impl AlphaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("alpha grid must be non-empty"));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::Domain(format!("alpha grid value {v} outside (0, 1)")));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("alpha grid must be strictly increasing".into()));
        }
        Ok(Self { values })
    }

    /// Equispaced grid `{d, 2d, ..., 1 - d}`; `1/d` must be an integer >= 2.
    pub fn with_step(d: f64) -> Result<Self> {
        let count = step_count(d)?;
        Self::new((1..count).map(|k| k as f64 / count as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

impl Default for AlphaGrid {
    fn default() -> Self {
        Self::with_step(DEFAULT_ALPHA_STEP).expect("default step divides 1")
    }
}

/// Number of intervals `1/d`, validated to be an integer.
pub fn step_count(d: f64) -> Result<usize> {
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::Domain(format!("alpha step {d} outside (0, 1)")));
    }
    let inv = 1.0 / d;
    let count = inv.round();
    if (inv - count).abs() > 1e-9 * count || count < 2.0 {
        return Err(Error::Domain(format!("alpha step {d} does not divide 1 into an integer count")));
    }
    Ok(count as usize)
}

/// Inverse-Wishart hyperparameters in both parametrisations:
/// `(nu, Psi) = (alpha n / (1 - alpha) + p + 1, alpha n / (1 - alpha) * Delta)`.
#[derive(Debug, Clone)]
pub struct IwParams {
    pub alpha: f64,
    pub delta: SymMatrix,
    pub nu: f64,
    pub psi: SymMatrix,
    pub n: usize,
}

pub fn reparametrise(alpha: f64, delta: &SymMatrix, n: usize) -> Result<IwParams> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::Domain("reference sample size must be positive".into()));
    }
    let p = delta.dim() as f64;
    let c = alpha * n as f64 / (1.0 - alpha);
    Ok(IwParams {
        alpha,
        delta: delta.clone(),
        nu: c + p + 1.0,
        psi: delta.scaled(c),
        n,
    })
}

impl IwParams {
    /// Recovers `(alpha, Delta)` from `(nu, Psi)`; requires `nu > p + 1`.
    pub fn from_natural(nu: f64, psi: &SymMatrix, n: usize) -> Result<Self> {
        let p = psi.dim() as f64;
        let excess = nu - p - 1.0;
        if !(excess > 0.0) {
            return Err(Error::Domain(format!("nu = {nu} must exceed p + 1 = {}", p + 1.0)));
        }
        Ok(Self {
            alpha: excess / (n as f64 + excess),
            delta: psi.scaled(1.0 / excess),
            nu,
            psi: psi.clone(),
            n,
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("shrinkage intensity {alpha} outside (0, 1)")))
    }
}

/// `log p(X | alpha, Delta)` for the Gaussian likelihood integrated against
/// the inverse-Wishart prior. Depends on the data only through `(S, n)`.
///
/// With `c = alpha / (1 - alpha)`, `nu0 = c n + p + 1` and `nu1 = n / (1 - alpha) + p + 1`:
///
/// ```text
/// -(np/2) log(n pi) + log Gamma_p(nu1/2) - log Gamma_p(nu0/2)
///     + (nu0/2) log|c Delta| - (nu1/2) log|S + c Delta|
/// ```
///
/// The determinant exponents carry the factor 1/2 of the inverse-Wishart
/// normalising constant.
pub fn log_marginal_likelihood(s: &SymMatrix, n: usize, alpha: f64, delta: &ShrinkageTarget) -> Result<f64> {
    if s.dim() != delta.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            actual: delta.dim(),
        });
    }
    if n == 0 {
        return Err(Error::Domain("sample size must be positive".into()));
    }
    check_alpha(alpha)?;
    log_ml_cell(s, n, alpha, delta.matrix(), delta.log_det())
}

fn log_ml_cell(s: &SymMatrix, n: usize, alpha: f64, delta: &SymMatrix, delta_log_det: f64) -> Result<f64> {
    let p = s.dim();
    let (pf, nf) = (p as f64, n as f64);
    let c = alpha / (1.0 - alpha);
    let nu0 = c * nf + pf + 1.0;
    let nu1 = nf / (1.0 - alpha) + pf + 1.0;
    let posterior_scale = s.lin_comb(1.0, delta, c)?;
    let log_det_post = cholesky(&posterior_scale)?.log_det();
    Ok(-(nf * pf / 2.0) * (nf * std::f64::consts::PI).ln() + mv_log_gamma(nu1 / 2.0, p)?
        - mv_log_gamma(nu0 / 2.0, p)?
        + (nu0 / 2.0) * (pf * c.ln() + delta_log_det)
        - (nu1 / 2.0) * log_det_post)
}

/// Joint posterior over the `K x L` grid of (alpha, target) pairs.
#[derive(Debug, Clone, Serialize)]
pub struct PosteriorTable {
    alpha_grid: AlphaGrid,
    target_labels: Vec<String>,
    /// Row-major `K x L`.
    log_ml: Vec<f64>,
    /// Row-major `K x L`, sums to one.
    post_prob: Vec<f64>,
}

impl PosteriorTable {
    fn from_log_ml(alpha_grid: AlphaGrid, target_labels: Vec<String>, log_ml: Vec<f64>) -> Result<Self> {
        let lse = log_sum_exp(&log_ml)?;
        if !lse.is_finite() {
            return Err(Error::Domain("log marginal likelihoods are not finite".into()));
        }
        let mut post_prob: Vec<f64> = log_ml.iter().map(|x| (x - lse).exp()).collect();
        let total: f64 = post_prob.iter().sum();
        post_prob.iter_mut().for_each(|v| *v /= total);
        Ok(Self {
            alpha_grid,
            target_labels,
            log_ml,
            post_prob,
        })
    }

    pub fn alpha_grid(&self) -> &AlphaGrid {
        &self.alpha_grid
    }

    pub fn target_labels(&self) -> &[String] {
        &self.target_labels
    }

    /// `(K, L)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.alpha_grid.len(), self.target_labels.len())
    }

    pub fn log_ml(&self, k: usize, l: usize) -> f64 {
        self.log_ml[k * self.target_labels.len() + l]
    }

    pub fn prob(&self, k: usize, l: usize) -> f64 {
        self.post_prob[k * self.target_labels.len() + l]
    }

    pub fn log_ml_rows(&self) -> Vec<Vec<f64>> {
        self.log_ml
            .chunks_exact(self.target_labels.len())
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn prob_rows(&self) -> Vec<Vec<f64>> {
        self.post_prob
            .chunks_exact(self.target_labels.len())
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Marginal posterior mass of each target.
    pub fn target_marginals(&self) -> Vec<f64> {
        let (k_len, l_len) = self.shape();
        (0..l_len)
            .map(|l| (0..k_len).map(|k| self.prob(k, l)).sum())
            .collect()
    }

    /// Grid argmax of the log marginal likelihood for target `l`, ties to the smaller alpha.
    pub fn argmax_alpha(&self, l: usize) -> (f64, f64) {
        let mut best = (self.alpha_grid.values[0], self.log_ml(0, l));
        for (k, &a) in self.alpha_grid.values.iter().enumerate().skip(1) {
            let v = self.log_ml(k, l);
            if v > best.1 {
                best = (a, v);
            }
        }
        best
    }

    /// Posterior restricted to a subset of targets (uniform prior over the subset).
    pub fn restrict(&self, labels: &[String]) -> Result<Self> {
        let cols: Vec<usize> = labels
            .iter()
            .map(|lab| {
                self.target_labels
                    .iter()
                    .position(|t| t == lab)
                    .ok_or_else(|| Error::InconsistentTable(format!("no column for target '{lab}'")))
            })
            .collect::<Result<_>>()?;
        let k_len = self.alpha_grid.len();
        let log_ml = (0..k_len)
            .flat_map(|k| cols.iter().map(move |&l| (k, l)))
            .map(|(k, l)| self.log_ml(k, l))
            .collect();
        Self::from_log_ml(self.alpha_grid.clone(), labels.to_vec(), log_ml)
    }

    /// Adds one target column: only `K` new likelihood evaluations, then renormalisation.
    pub fn extend_with_target(&self, s: &SymMatrix, n: usize, target: &ShrinkageTarget) -> Result<Self> {
        if self.target_labels.iter().any(|t| t == target.label()) {
            return Err(Error::InconsistentTable(format!(
                "target '{}' already in table",
                target.label()
            )));
        }
        let column = self
            .alpha_grid
            .values
            .iter()
            .map(|&a| log_marginal_likelihood(s, n, a, target))
            .collect::<Result<Vec<_>>>()?;
        let l_len = self.target_labels.len();
        let mut log_ml = Vec::with_capacity(self.log_ml.len() + column.len());
        for (row, extra) in self.log_ml.chunks_exact(l_len).zip(column) {
            log_ml.extend_from_slice(row);
            log_ml.push(extra);
        }
        let mut labels = self.target_labels.clone();
        labels.push(target.label().to_string());
        Self::from_log_ml(self.alpha_grid.clone(), labels, log_ml)
    }
}

/// Fills the `K x L` table of log marginal likelihoods and normalises it
/// under uniform priors on the grid and the target set.
///
/// Cells are evaluated independently (in parallel); normalisation happens
/// once at the end, so the result does not depend on evaluation order.
pub fn posterior_grid(s: &SymMatrix, n: usize, grid: &AlphaGrid, set: &TargetSet) -> Result<PosteriorTable> {
    posterior_grid_with_priors(s, n, grid, set, None, None)
}

/// As [`posterior_grid`], with optional non-uniform prior weights on the grid
/// and on the targets (each must be non-negative and sum to one).
pub fn posterior_grid_with_priors(
    s: &SymMatrix,
    n: usize,
    grid: &AlphaGrid,
    set: &TargetSet,
    alpha_prior: Option<&[f64]>,
    target_prior: Option<&[f64]>,
) -> Result<PosteriorTable> {
    if s.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            actual: set.dim(),
        });
    }
    if n == 0 {
        return Err(Error::Domain("sample size must be positive".into()));
    }
    let alpha_log_prior = log_prior(alpha_prior, grid.len())?;
    let target_log_prior = log_prior(target_prior, set.len())?;
    let l_len = set.len();
    let cells: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|k| (0..l_len).map(move |l| (k, l)))
        .collect();
    let log_ml = cells
        .par_iter()
        .map(|&(k, l)| {
            let t = set.get(l);
            log_ml_cell(s, n, grid.values[k], t.matrix(), t.log_det())
        })
        .collect::<Result<Vec<f64>>>()?;
    if alpha_log_prior.is_none() && target_log_prior.is_none() {
        return PosteriorTable::from_log_ml(grid.clone(), set.labels(), log_ml);
    }
    // Normalise the prior-weighted values, but keep the raw likelihoods in the table.
    let weighted: Vec<f64> = cells
        .iter()
        .zip(&log_ml)
        .map(|(&(k, l), v)| {
            v + alpha_log_prior.as_ref().map_or(0.0, |p| p[k]) + target_log_prior.as_ref().map_or(0.0, |p| p[l])
        })
        .collect();
    let mut table = PosteriorTable::from_log_ml(grid.clone(), set.labels(), weighted)?;
    table.log_ml = log_ml;
    Ok(table)
}

fn log_prior(prior: Option<&[f64]>, len: usize) -> Result<Option<Vec<f64>>> {
    let Some(w) = prior else { return Ok(None) };
    if w.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            actual: w.len(),
        });
    }
    if w.iter().any(|v| !(*v >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain("prior weights must be non-negative and sum to 1".into()));
    }
    Ok(Some(w.iter().map(|v| v.ln()).collect()))
}

/// Target-averaged shrinkage estimate with its posterior weights.
#[derive(Debug, Clone, Serialize)]
pub struct TasEstimate {
    pub sigma_hat: SymMatrix,
    pub target_weights: Vec<f64>,
    pub sample_weight: f64,
    pub table: PosteriorTable,
}

impl TasEstimate {
    pub fn weights_by_label(&self) -> Vec<(String, f64)> {
        self.table
            .target_labels
            .iter()
            .cloned()
            .zip(self.target_weights.iter().copied())
            .collect()
    }
}

fn check_table(table: &PosteriorTable, s: &SymMatrix, set: &TargetSet) -> Result<()> {
    if table.target_labels != set.labels() {
        return Err(Error::InconsistentTable(format!(
            "table labels {:?} differ from target set {:?}",
            table.target_labels,
            set.labels()
        )));
    }
    if s.dim() != set.dim() {
        return Err(Error::InconsistentTable(format!(
            "sample covariance has dimension {} but targets have {}",
            s.dim(),
            set.dim()
        )));
    }
    Ok(())
}

/// Weight form: `sum_l w_l D_l + (1 - sum_l w_l) S` with `w_l = sum_k a_k P(a_k, D_l | X)`.
pub fn tas_estimate(table: &PosteriorTable, s: &SymMatrix, set: &TargetSet) -> Result<TasEstimate> {
    check_table(table, s, set)?;
    let (k_len, l_len) = table.shape();
    let a = table.alpha_grid.values();
    let target_weights: Vec<f64> = (0..l_len)
        .map(|l| (0..k_len).map(|k| a[k] * table.prob(k, l)).sum())
        .collect();
    let total: f64 = target_weights.iter().sum();
    let sample_weight = 1.0 - total;
    let mut sigma_hat = s.scaled(sample_weight);
    for (t, w) in set.iter().zip(&target_weights) {
        sigma_hat.add_scaled(*w, t.matrix())?;
    }
    Ok(TasEstimate {
        sigma_hat,
        target_weights,
        sample_weight,
        table: table.clone(),
    })
}

/// Direct model average `sum_{k,l} P(a_k, D_l | X) (a_k D_l + (1 - a_k) S)`.
///
/// Algebraically identical to [`tas_estimate`]; kept as an independent route.
pub fn model_average(table: &PosteriorTable, s: &SymMatrix, set: &TargetSet) -> Result<SymMatrix> {
    check_table(table, s, set)?;
    let (k_len, l_len) = table.shape();
    let mut acc = SymMatrix::zeros(s.dim());
    for k in 0..k_len {
        let a = table.alpha_grid.values[k];
        for l in 0..l_len {
            let sts = s.lin_comb(1.0 - a, set.get(l).matrix(), a)?;
            acc.add_scaled(table.prob(k, l), &sts)?;
        }
    }
    Ok(acc)
}

/// Posterior grid followed by the weight-form estimate.
pub fn fit_tas(s: &SymMatrix, n: usize, grid: &AlphaGrid, set: &TargetSet) -> Result<TasEstimate> {
    let table = posterior_grid(s, n, grid, set)?;
    tas_estimate(&table, s, set)
}

/// Single-target estimate `alpha * Delta + (1 - alpha) * S`.
pub fn sts_estimate(s: &SymMatrix, delta: &ShrinkageTarget, alpha: f64) -> Result<SymMatrix> {
    check_alpha(alpha)?;
    s.lin_comb(1.0 - alpha, delta.matrix(), alpha)
}

/// Grid argmax of the marginal likelihood over alpha for a fixed target.
///
/// Returns `(alpha*, log p(X | alpha*, Delta))`; ties go to the smaller alpha.
pub fn empirical_bayes_alpha(
    s: &SymMatrix,
    n: usize,
    delta: &ShrinkageTarget,
    grid: &AlphaGrid,
) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for &a in grid.values() {
        let v = log_marginal_likelihood(s, n, a, delta)?;
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((a, v));
        }
    }
    Ok(best.expect("grid is non-empty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BayesFactorPoint {
    pub alpha: f64,
    pub log_ml: f64,
    /// `log BF(alpha) = log p(X | alpha*) - log p(X | alpha) >= 0`.
    pub log_bf: f64,
    /// May overflow to infinity far from `alpha*`.
    pub bf: f64,
}

/// Bayes factor of the empirical-Bayes intensity against every grid point.
pub fn bayes_factor_curve(
    s: &SymMatrix,
    n: usize,
    delta: &ShrinkageTarget,
    grid: &AlphaGrid,
) -> Result<Vec<BayesFactorPoint>> {
    let log_ml = grid
        .values()
        .iter()
        .map(|&a| log_marginal_likelihood(s, n, a, delta))
        .collect::<Result<Vec<_>>>()?;
    let best = log_ml.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(grid
        .values()
        .iter()
        .zip(log_ml)
        .map(|(&alpha, v)| {
            let log_bf = best - v;
            BayesFactorPoint {
                alpha,
                log_ml: v,
                log_bf,
                bf: log_bf.exp(),
            }
        })
        .collect())
}

/// Checks the budget `w_l >= 0`, `sample_weight >= 0`, total one.
pub fn weights_are_valid(est: &TasEstimate) -> bool {
    let total: f64 = est.target_weights.iter().sum::<f64>() + est.sample_weight;
    est.target_weights.iter().all(|w| *w >= 0.0)
        && est.sample_weight >= 0.0
        && (total - 1.0).abs() <= tol::WEIGHT_BUDGET
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::Provenance;
    use approx::assert_relative_eq;

    fn target(label: &str, m: SymMatrix) -> ShrinkageTarget {
        ShrinkageTarget::new(label, m, Provenance::External { source: "test".into() }).unwrap()
    }

    fn spd2() -> SymMatrix {
        SymMatrix::from_rows(&[vec![1.3, 0.4], vec![0.4, 0.8]], 0.0).unwrap()
    }

    #[test]
    fn grid_construction() {
        let g = AlphaGrid::default();
        assert_eq!(g.len(), 99);
        assert_eq!(g.values()[0], 0.01);
        assert_eq!(g.max(), 0.99);
        assert_eq!(AlphaGrid::with_step(0.2).unwrap().len(), 4);
        assert_eq!(AlphaGrid::with_step(0.001).unwrap().len(), 999);
        assert!(AlphaGrid::with_step(0.3).is_err());
        assert!(AlphaGrid::with_step(0.5).is_ok());
        assert!(AlphaGrid::new(vec![0.5, 0.5]).is_err());
        assert!(AlphaGrid::new(vec![0.0, 0.5]).is_err());
        assert!(AlphaGrid::new(vec![]).is_err());
    }

    #[test]
    fn finer_grids_contain_coarser() {
        for (coarse, fine) in [(0.2, 0.1), (0.1, 0.05), (0.01, 0.005)] {
            let c = AlphaGrid::with_step(coarse).unwrap();
            let f = AlphaGrid::with_step(fine).unwrap();
            assert!(c.values().iter().all(|v| f.values().contains(v)), "{coarse} in {fine}");
        }
    }

    #[test]
    fn reparametrisation_example() {
        let delta = SymMatrix::identity(3);
        let iw = reparametrise(0.5, &delta, 10).unwrap();
        assert_eq!(iw.nu, 14.0);
        assert_eq!(iw.psi, delta.scaled(10.0));
        let back = IwParams::from_natural(iw.nu, &iw.psi, 10).unwrap();
        assert_relative_eq!(back.alpha, 0.5, max_relative = tol::REPARAMETRISATION);
        let near_zero = reparametrise(1e-12, &delta, 10).unwrap();
        assert_relative_eq!(near_zero.nu, 4.0, epsilon = 1e-9);
        assert!(near_zero.psi.max_abs() < 1e-9);
        assert!(reparametrise(1.0, &delta, 10).is_err());
        assert!(reparametrise(0.0, &delta, 10).is_err());
    }

    #[test]
    fn single_cell_reduces_to_sts() {
        let s = spd2();
        let d = SymMatrix::identity(2);
        let set = TargetSet::new(vec![target("D", d.clone())]).unwrap();
        let grid = AlphaGrid::new(vec![0.3]).unwrap();
        let est = fit_tas(&s, 5, &grid, &set).unwrap();
        assert_eq!(est.table.prob(0, 0), 1.0);
        let expected = sts_estimate(&s, set.get(0), 0.3).unwrap();
        assert_eq!(est.sigma_hat, expected);
        assert_eq!(est.target_weights, vec![0.3]);
    }

    #[test]
    fn identical_targets_split_mass() {
        let s = spd2();
        let set = TargetSet::new(vec![
            target("a", SymMatrix::identity(2)),
            target("b", SymMatrix::identity(2)),
        ])
        .unwrap();
        let t = posterior_grid(&s, 5, &AlphaGrid::with_step(0.25).unwrap(), &set).unwrap();
        let m = t.target_marginals();
        assert_relative_eq!(m[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(m[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn sts_examples() {
        let i = SymMatrix::identity(2);
        assert_eq!(sts_estimate(&i, &target("I", i.clone()), 0.5).unwrap(), i);
        let s = SymMatrix::from_diagonal(&[4.0]);
        let d = target("d", SymMatrix::from_diagonal(&[2.0]));
        assert_relative_eq!(sts_estimate(&s, &d, 0.3).unwrap().get(0, 0), 3.4, epsilon = 1e-14);
        assert!(sts_estimate(&s, &d, 1.0).is_err());
    }

    #[test]
    fn empirical_bayes_single_point_and_ties() {
        let s = spd2();
        let d = target("I", SymMatrix::identity(2));
        let g = AlphaGrid::new(vec![0.4]).unwrap();
        assert_eq!(empirical_bayes_alpha(&s, 5, &d, &g).unwrap().0, 0.4);
        let set = TargetSet::new(vec![d.clone()]).unwrap();
        let table = posterior_grid(&s, 5, &AlphaGrid::with_step(0.1).unwrap(), &set).unwrap();
        let eb = empirical_bayes_alpha(&s, 5, &d, &AlphaGrid::with_step(0.1).unwrap()).unwrap();
        assert_eq!(table.argmax_alpha(0), eb);
    }

    #[test]
    fn bayes_factor_at_optimum_is_one() {
        let s = spd2();
        let d = target("I", SymMatrix::identity(2));
        let g = AlphaGrid::with_step(0.05).unwrap();
        let curve = bayes_factor_curve(&s, 5, &d, &g).unwrap();
        let (a_star, _) = empirical_bayes_alpha(&s, 5, &d, &g).unwrap();
        for pt in &curve {
            assert!(pt.bf >= 1.0);
            if pt.alpha == a_star {
                assert_eq!(pt.bf, 1.0);
            }
        }
    }

    #[test]
    fn scaling_changes_log_ml_by_np_log_c() {
        let s = spd2();
        let d = SymMatrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 2.0]], 0.0).unwrap();
        let c: f64 = 1.7;
        let n = 6;
        for a in [0.1, 0.5, 0.9] {
            let base = log_marginal_likelihood(&s, n, a, &target("d", d.clone())).unwrap();
            let scaled =
                log_marginal_likelihood(&s.scaled(c * c), n, a, &target("d", d.scaled(c * c))).unwrap();
            assert_relative_eq!(scaled - base, -(n as f64) * 2.0 * c.ln(), epsilon = 1e-10);
        }
    }

    #[test]
    fn priors_validated() {
        let s = spd2();
        let set = TargetSet::new(vec![target("a", SymMatrix::identity(2))]).unwrap();
        let g = AlphaGrid::new(vec![0.25, 0.75]).unwrap();
        assert!(posterior_grid_with_priors(&s, 5, &g, &set, Some(&[0.5, 0.4]), None).is_err());
        assert!(posterior_grid_with_priors(&s, 5, &g, &set, Some(&[1.0]), None).is_err());
        let t = posterior_grid_with_priors(&s, 5, &g, &set, None, Some(&[1.0])).unwrap();
        assert_relative_eq!(t.prob(0, 0) + t.prob(1, 0), 1.0, epsilon = 1e-15);
        // all mass on the first alpha
        let t = posterior_grid_with_priors(&s, 5, &g, &set, Some(&[1.0, 0.0]), None).unwrap();
        assert_eq!(t.prob(1, 0), 0.0);
        assert_relative_eq!(t.prob(0, 0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn inconsistent_table_rejected() {
        let s = spd2();
        let set_a = TargetSet::new(vec![target("a", SymMatrix::identity(2))]).unwrap();
        let set_b = TargetSet::new(vec![target("b", SymMatrix::identity(2))]).unwrap();
        let t = posterior_grid(&s, 5, &AlphaGrid::default(), &set_a).unwrap();
        assert!(matches!(tas_estimate(&t, &s, &set_b), Err(Error::InconsistentTable(_))));
    }
}
