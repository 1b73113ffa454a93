//! Ground-truth generators, samplers and the evaluation protocols: the
//! model-based scenarios, the data-partition strategy, MLE diagnostics and
//! the alpha-grid cardinality study.
//!
//! Repetition `m` always draws from stream `m + 1` of the master seed (stream
//! 0 is reserved for draws shared by all repetitions), so reports are
//! bit-reproducible whether repetitions run sequentially or in parallel.

mod estimators;
mod prial;
mod rng;
mod sampling;
mod scenario;

use std::collections::BTreeSet;

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{sample_covariance, DataMatrix};
use crate::error::{Error, Result};
use crate::estimator::{fit_tas, step_count, AlphaGrid};
use crate::linalg::{frobenius_dist_sq, sym_eigenvalues, SymMatrix};
use crate::targets::build_default_target_set;

pub use estimators::{fit_all, AlphaRule, EstimatorConfig, EstimatorOutput};
pub use prial::{prial, prial_from_losses, LossPair, PrialReport};
pub use rng::ExperimentRng;
pub use sampling::{inv_wishart_sample, mvn_sample};
pub use scenario::{scenario_sigma, Scenario, ScenarioParams, ScenarioSpec};

/// Quantile summary of one target's TAS weight across repetitions.
#[derive(Debug, Clone, Serialize)]
pub struct WeightSummary {
    pub label: String,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl WeightSummary {
    fn from_values(label: String, values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            label,
            min: v[0],
            q25: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q75: quantile(&v, 0.75),
            max: v[v.len() - 1],
        }
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-repetition TAS weights of one estimator configuration.
#[derive(Debug, Clone, Serialize)]
pub struct WeightDistribution {
    pub estimator: String,
    pub target_labels: Vec<String>,
    /// `per_repetition[m][l]`
    pub per_repetition: Vec<Vec<f64>>,
    pub sample_weight: Vec<f64>,
    pub summary: Vec<WeightSummary>,
}

impl WeightDistribution {
    fn new(estimator: String, target_labels: Vec<String>, per_repetition: Vec<Vec<f64>>, sample_weight: Vec<f64>) -> Self {
        let mut summary: Vec<WeightSummary> = target_labels
            .iter()
            .enumerate()
            .map(|(l, label)| {
                let col: Vec<f64> = per_repetition.iter().map(|w| w[l]).collect();
                WeightSummary::from_values(label.clone(), &col)
            })
            .collect();
        summary.push(WeightSummary::from_values("S".into(), &sample_weight));
        Self {
            estimator,
            target_labels,
            per_repetition,
            sample_weight,
            summary,
        }
    }

    pub fn median(&self, label: &str) -> Option<f64> {
        self.summary.iter().find(|s| s.label == label).map(|s| s.median)
    }

    /// Target with the largest median weight (first on ties).
    pub fn top_median_target(&self) -> Option<&str> {
        self.summary[..self.target_labels.len()]
            .iter()
            .fold(None::<&WeightSummary>, |best, s| match best {
                Some(b) if b.median >= s.median => Some(b),
                _ => Some(s),
            })
            .map(|s| s.label.as_str())
    }
}

/// Output of the model-based and data-partition protocols.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub protocol: &'static str,
    pub scenario: Option<ScenarioSpec>,
    pub p: usize,
    /// Sample size the estimators were fitted on.
    pub n: usize,
    pub alpha_grid_size: usize,
    pub rng_algorithm: &'static str,
    pub prial: PrialReport,
    pub weights: Vec<WeightDistribution>,
    pub warnings: Vec<String>,
}

impl SimulationReport {
    pub fn weights_for(&self, estimator: &str) -> Option<&WeightDistribution> {
        self.weights.iter().find(|w| w.estimator == estimator)
    }
}

struct RepetitionResult {
    losses: Vec<LossPair>,
    outputs: Vec<EstimatorOutput>,
    warnings: Vec<String>,
}

fn with_context<T>(seed: u64, repetition: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Repetition {
        seed,
        repetition,
        source: Box::new(e),
    })
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    protocol: &'static str,
    scenario: Option<ScenarioSpec>,
    p: usize,
    n: usize,
    grid: &AlphaGrid,
    estimators: &[EstimatorConfig],
    reps: Vec<RepetitionResult>,
    seed: u64,
    mut warnings: BTreeSet<String>,
) -> Result<SimulationReport> {
    let labels: Vec<String> = estimators.iter().map(EstimatorConfig::label).collect();
    let losses: Vec<Vec<LossPair>> = (0..estimators.len())
        .map(|e| reps.iter().map(|r| r.losses[e]).collect())
        .collect();
    let weights = estimators
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_tas())
        .map(|(e, c)| {
            let per_rep = reps
                .iter()
                .map(|r| r.outputs[e].target_weights.clone().unwrap_or_default())
                .collect();
            let sample = reps
                .iter()
                .map(|r| r.outputs[e].sample_weight.unwrap_or(1.0))
                .collect();
            WeightDistribution::new(c.label(), c.target_labels(), per_rep, sample)
        })
        .collect();
    for r in &reps {
        warnings.extend(r.warnings.iter().cloned());
    }
    Ok(SimulationReport {
        protocol,
        scenario,
        p,
        n,
        alpha_grid_size: grid.len(),
        rng_algorithm: ExperimentRng::ALGORITHM,
        prial: PrialReport::new(labels, losses, seed)?,
        weights,
        warnings: warnings.into_iter().collect(),
    })
}

fn evaluate(
    truth: &SymMatrix,
    x: &DataMatrix,
    center: bool,
    estimators: &[EstimatorConfig],
    grid: &AlphaGrid,
) -> Result<RepetitionResult> {
    let s = sample_covariance(x, center)?;
    let mut warnings = s.warnings();
    let outputs = fit_all(&s, estimators, grid, &mut warnings)?;
    let losses = outputs
        .iter()
        .map(|o| LossPair::new(truth, &s.matrix, &o.sigma_hat))
        .collect::<Result<_>>()?;
    Ok(RepetitionResult {
        losses,
        outputs,
        warnings,
    })
}

/// Model-based simulation: `repetitions` data sets of size `n` from a scenario.
///
/// Scenarios 1 and 2 use their fixed truth; scenarios 3 and 4 redraw it in
/// every repetition unless `spec.fresh_sigma` is false, in which case a single
/// draw from stream 0 is shared.
pub fn run_model_simulation(
    spec: &ScenarioSpec,
    n: usize,
    repetitions: usize,
    estimators: &[EstimatorConfig],
    grid: &AlphaGrid,
    seed: u64,
) -> Result<SimulationReport> {
    if repetitions == 0 {
        return Err(Error::EmptyInput("at least one repetition is required"));
    }
    if n < 2 {
        return Err(Error::InsufficientSamples(format!("n = {n} < 2")));
    }
    let mut spec = spec.clone();
    spec.params.s4_n_ref.get_or_insert(n);
    spec.validate()?;
    let shared_sigma = if spec.is_random() && spec.fresh_sigma {
        None
    } else {
        Some(scenario_sigma(&spec, &mut ExperimentRng::substream(seed, 0))?)
    };

    let reps = (0..repetitions)
        .into_par_iter()
        .map(|m| {
            let mut rng = ExperimentRng::substream(seed, m as u64 + 1);
            let result = (|| {
                let sigma = match &shared_sigma {
                    Some(s) => s.clone(),
                    None => scenario_sigma(&spec, &mut rng)?,
                };
                let x = mvn_sample(&sigma, n, &mut rng)?;
                evaluate(&sigma, &x, false, estimators, grid)
            })();
            with_context(seed, m, result)
        })
        .collect::<Result<Vec<_>>>()?;

    let p = spec.p;
    assemble("model", Some(spec), p, n, grid, estimators, reps, seed, BTreeSet::new())
}

/// Random split of `0..total` into `n_small` and `total - n_small` column indices.
pub fn partition_columns(total: usize, n_small: usize, rng: &mut ExperimentRng) -> (Vec<usize>, Vec<usize>) {
    let mut small = sample_indices(rng, total, n_small).into_vec();
    small.sort_unstable();
    let mut in_small = vec![false; total];
    for &k in &small {
        in_small[k] = true;
    }
    let large = (0..total).filter(|&k| !in_small[k]).collect();
    (small, large)
}

/// Data-partition evaluation: estimators fitted on a random `n_small`-column
/// subset; the sample covariance of the remaining columns is the proxy truth.
pub fn data_partition_run(
    full: &DataMatrix,
    n_small: usize,
    repetitions: usize,
    estimators: &[EstimatorConfig],
    grid: &AlphaGrid,
    seed: u64,
    center: bool,
) -> Result<SimulationReport> {
    let total = full.n();
    if n_small < 2 || n_small >= total || total - n_small < 2 {
        return Err(Error::InsufficientSamples(format!(
            "cannot split N = {total} samples into a small part of {n_small} and a large part of at least 2"
        )));
    }
    if repetitions == 0 {
        return Err(Error::EmptyInput("at least one repetition is required"));
    }
    let mut warnings = BTreeSet::new();
    if total - n_small < full.p() {
        warnings.insert(format!(
            "large part has {} samples for p = {}: the proxy truth is singular",
            total - n_small,
            full.p()
        ));
    }
    let reps = (0..repetitions)
        .into_par_iter()
        .map(|m| {
            let mut rng = ExperimentRng::substream(seed, m as u64 + 1);
            let result = (|| {
                let (small, large) = partition_columns(total, n_small, &mut rng);
                let proxy = sample_covariance(&full.select_samples(&large)?, center)?.matrix;
                evaluate(&proxy, &full.select_samples(&small)?, center, estimators, grid)
            })();
            with_context(seed, m, result)
        })
        .collect::<Result<Vec<_>>>()?;
    assemble("partition", None, full.p(), n_small, grid, estimators, reps, seed, warnings)
}

/// One row of the MLE behaviour study (truth = identity).
#[derive(Debug, Clone, Serialize)]
pub struct MleDiagnosticRow {
    pub p: usize,
    pub n: usize,
    pub mean_frobenius_error: f64,
    /// Mean over the non-singular repetitions; `None` when all were singular.
    pub mean_condition_number: Option<f64>,
    pub singular_fraction: f64,
}

/// Whether the spectrum is numerically singular: `lambda_min <= p * eps * lambda_max`.
pub fn is_numerically_singular(eigenvalues: &[f64]) -> bool {
    let max = eigenvalues[0];
    let min = eigenvalues[eigenvalues.len() - 1];
    min <= eigenvalues.len() as f64 * f64::EPSILON * max
}

/// Frobenius error and conditioning of `S` for `n = round(ratio * p)` samples
/// from `N(0, I_p)`, for every combination of `p_list` and `n_ratios`.
///
/// With `center` the sample means are removed first, so `S` has rank at most
/// `n - 1` and is singular whenever `n <= p`. Without it `S = X X^T / n` is
/// full rank (though badly conditioned) at `n = p`.
pub fn mle_diagnostics(
    p_list: &[usize],
    n_ratios: &[f64],
    repetitions: usize,
    seed: u64,
    center: bool,
) -> Result<Vec<MleDiagnosticRow>> {
    if repetitions == 0 {
        return Err(Error::EmptyInput("at least one repetition is required"));
    }
    let mut rows = Vec::new();
    for (pi, &p) in p_list.iter().enumerate() {
        for (ni, &ratio) in n_ratios.iter().enumerate() {
            let n = ((ratio * p as f64).round() as usize).max(2);
            let sigma = SymMatrix::identity(p);
            let per_rep = (0..repetitions)
                .into_par_iter()
                .map(|m| {
                    let stream = ((pi as u64) << 48) | ((ni as u64) << 32) | (m as u64 + 1);
                    let mut rng = ExperimentRng::substream(seed, stream);
                    let x = mvn_sample(&sigma, n, &mut rng)?;
                    let s = sample_covariance(&x, center)?.matrix;
                    let err = frobenius_dist_sq(&sigma, &s)?;
                    let eig = sym_eigenvalues(&s)?;
                    let singular = is_numerically_singular(&eig);
                    Ok((err, singular, eig[0] / eig[eig.len() - 1]))
                })
                .collect::<Result<Vec<_>>>()?;
            let reps = repetitions as f64;
            let nonsingular: Vec<f64> = per_rep.iter().filter(|r| !r.1).map(|r| r.2).collect();
            rows.push(MleDiagnosticRow {
                p,
                n,
                mean_frobenius_error: per_rep.iter().map(|r| r.0).sum::<f64>() / reps,
                mean_condition_number: (!nonsingular.is_empty())
                    .then(|| nonsingular.iter().sum::<f64>() / nonsingular.len() as f64),
                singular_fraction: per_rep.iter().filter(|r| r.1).count() as f64 / reps,
            });
        }
    }
    Ok(rows)
}

/// Setup of the grid-cardinality study.
#[derive(Debug, Clone, Serialize)]
pub struct GridStudySetup {
    pub p: usize,
    pub n: usize,
    /// Truth is `variance * I_p`.
    pub variance: f64,
}

impl Default for GridStudySetup {
    fn default() -> Self {
        Self {
            p: 100,
            n: 25,
            variance: 4.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridStudyRow {
    pub d: f64,
    pub cardinality: usize,
    pub prial: f64,
}

/// PRIAL of TAS (nine canonical targets) for alpha grids of spacing `d`.
/// Every spacing is evaluated on the same simulated data sets.
pub fn grid_cardinality_study(
    d_list: &[f64],
    repetitions: usize,
    seed: u64,
    setup: &GridStudySetup,
) -> Result<Vec<GridStudyRow>> {
    if repetitions == 0 {
        return Err(Error::EmptyInput("at least one repetition is required"));
    }
    let grids = d_list
        .iter()
        .map(|&d| AlphaGrid::with_step(d))
        .collect::<Result<Vec<_>>>()?;
    let sigma = SymMatrix::identity(setup.p).scaled(setup.variance);
    let per_rep = (0..repetitions)
        .into_par_iter()
        .map(|m| {
            let mut rng = ExperimentRng::substream(seed, m as u64 + 1);
            let result = (|| {
                let x = mvn_sample(&sigma, setup.n, &mut rng)?;
                let s = sample_covariance(&x, false)?;
                let targets = build_default_target_set(&s.matrix)?;
                grids
                    .iter()
                    .map(|g| {
                        let est = fit_tas(&s.matrix, s.n, g, &targets.set)?;
                        LossPair::new(&sigma, &s.matrix, &est.sigma_hat)
                    })
                    .collect::<Result<Vec<_>>>()
            })();
            with_context(seed, m, result)
        })
        .collect::<Result<Vec<_>>>()?;
    d_list
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let losses: Vec<LossPair> = per_rep.iter().map(|r| r[i]).collect();
            Ok(GridStudyRow {
                d,
                cardinality: step_count(d)? - 1,
                prial: prial_from_losses(&losses)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::TargetKind;

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
    }

    #[test]
    fn partition_is_a_partition() {
        let mut rng = ExperimentRng::new(3);
        let (small, large) = partition_columns(30, 7, &mut rng);
        assert_eq!(small.len(), 7);
        assert_eq!(large.len(), 23);
        let mut all: Vec<usize> = small.iter().chain(&large).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn partition_with_sample_covariance_is_zero() {
        let sigma = SymMatrix::identity(3);
        let full = mvn_sample(&sigma, 40, &mut ExperimentRng::new(1)).unwrap();
        let r = data_partition_run(
            &full,
            10,
            1,
            &[EstimatorConfig::SampleCovariance],
            &AlphaGrid::default(),
            1,
            true,
        )
        .unwrap();
        assert_eq!(r.prial.prial, vec![0.0]);
        assert!(matches!(
            data_partition_run(&full, 40, 1, &[EstimatorConfig::SampleCovariance], &AlphaGrid::default(), 1, true),
            Err(Error::InsufficientSamples(_))
        ));
    }

    #[test]
    fn near_full_identity_shrinkage() {
        let spec = ScenarioSpec::new(Scenario::S1, 10).unwrap();
        let cfg = EstimatorConfig::Sts {
            kind: TargetKind::T1,
            alpha: AlphaRule::Fixed(1.0 - 1e-9),
        };
        let r = run_model_simulation(&spec, 8, 1, &[cfg], &AlphaGrid::default(), 5).unwrap();
        // shrinking all the way to I: loss ||5I - I||^2 = 16 p
        let loss = r.prial.losses[0][0];
        assert!((loss.estimator - 160.0).abs() < 1e-5);
        let expected = (loss.sample - 160.0) / loss.sample * 100.0;
        assert!((r.prial.prial[0] - expected).abs() < 1e-5);
    }

    #[test]
    fn tas_weights_are_recorded() {
        let spec = ScenarioSpec::new(Scenario::S2, 6).unwrap();
        let r = run_model_simulation(
            &spec,
            10,
            4,
            &[EstimatorConfig::tas_default(), EstimatorConfig::SampleCovariance],
            &AlphaGrid::with_step(0.1).unwrap(),
            9,
        )
        .unwrap();
        let w = r.weights_for("TAS").unwrap();
        assert_eq!(w.per_repetition.len(), 4);
        for (ws, s) in w.per_repetition.iter().zip(&w.sample_weight) {
            assert!((ws.iter().sum::<f64>() + s - 1.0).abs() < 1e-12);
        }
        assert!(w.top_median_target().is_some());
        assert!(r.prial.verify());
        assert_eq!(r.prial.get("S"), Some(0.0));
    }

    #[test]
    fn singularity_threshold() {
        assert!(is_numerically_singular(&[1.0, 0.0]));
        assert!(!is_numerically_singular(&[1.0, 1e-3]));
    }
}
