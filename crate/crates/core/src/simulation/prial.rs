use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_dist_sq, tol, SymMatrix};

/// Squared Frobenius losses of one repetition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossPair {
    /// `||Sigma - S||_F^2`
    pub sample: f64,
    /// `||Sigma - Sigma_hat||_F^2`
    pub estimator: f64,
}

impl LossPair {
    pub fn new(truth: &SymMatrix, s: &SymMatrix, sigma_hat: &SymMatrix) -> Result<Self> {
        Ok(Self {
            sample: frobenius_dist_sq(truth, s)?,
            estimator: frobenius_dist_sq(truth, sigma_hat)?,
        })
    }
}

/// Percentage relative improvement in average loss over the sample covariance.
pub fn prial_from_losses(losses: &[LossPair]) -> Result<f64> {
    if losses.is_empty() {
        return Err(Error::EmptyInput("PRIAL needs at least one repetition"));
    }
    let sample: f64 = losses.iter().map(|l| l.sample).sum();
    let estimator: f64 = losses.iter().map(|l| l.estimator).sum();
    if !(sample > 0.0) {
        return Err(Error::DegenerateDenominator);
    }
    Ok((sample - estimator) / sample * 100.0)
}

/// PRIAL of `(S_m, Sigma_hat_m)` pairs against one fixed truth.
pub fn prial(sigma_true: &SymMatrix, runs: &[(SymMatrix, SymMatrix)]) -> Result<f64> {
    let losses = runs
        .iter()
        .map(|(s, hat)| LossPair::new(sigma_true, s, hat))
        .collect::<Result<Vec<_>>>()?;
    prial_from_losses(&losses)
}

/// PRIAL of several estimators over the same repetitions.
#[derive(Debug, Clone, Serialize)]
pub struct PrialReport {
    pub estimator_labels: Vec<String>,
    pub prial: Vec<f64>,
    /// `losses[e][m]` for estimator `e` and repetition `m`.
    pub losses: Vec<Vec<LossPair>>,
    pub repetitions: usize,
    pub rng_seed: u64,
}

impl PrialReport {
    pub fn new(estimator_labels: Vec<String>, losses: Vec<Vec<LossPair>>, rng_seed: u64) -> Result<Self> {
        let prial = losses
            .iter()
            .map(|l| prial_from_losses(l))
            .collect::<Result<Vec<_>>>()?;
        let repetitions = losses.first().map_or(0, Vec::len);
        Ok(Self {
            estimator_labels,
            prial,
            losses,
            repetitions,
            rng_seed,
        })
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.estimator_labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.prial[i])
    }

    /// Recomputes every PRIAL from the stored losses.
    pub fn verify(&self) -> bool {
        self.losses.iter().zip(&self.prial).all(|(l, p)| {
            prial_from_losses(l).is_ok_and(|q| (q - p).abs() <= tol::PRIAL_SELF_CHECK)
        })
    }
}
