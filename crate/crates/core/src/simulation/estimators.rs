//! Estimator configurations evaluated by the simulation protocols.

use serde::Serialize;

use crate::data::SampleCovariance;
use crate::error::{Error, Result};
use crate::estimator::{posterior_grid, sts_estimate, tas_estimate, AlphaGrid, PosteriorTable};
use crate::linalg::SymMatrix;
use crate::targets::{build_default_target_set, ShrinkageTarget, TargetKind, TargetSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AlphaRule {
    /// Grid argmax of the marginal likelihood.
    EmpiricalBayes,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub enum EstimatorConfig {
    /// The sample covariance itself (PRIAL 0 by definition).
    SampleCovariance,
    /// Single-target shrinkage towards one canonical target.
    Sts { kind: TargetKind, alpha: AlphaRule },
    /// Target-averaged shrinkage over canonical kinds plus fixed external targets.
    Tas {
        label: String,
        kinds: Vec<TargetKind>,
        external: Vec<ShrinkageTarget>,
    },
}

impl EstimatorConfig {
    /// TAS over the nine canonical targets.
    pub fn tas_default() -> Self {
        Self::Tas {
            label: "TAS".into(),
            kinds: TargetKind::ALL.to_vec(),
            external: Vec::new(),
        }
    }

    pub fn sts_eb(kind: TargetKind) -> Self {
        Self::Sts {
            kind,
            alpha: AlphaRule::EmpiricalBayes,
        }
    }

    /// The comparison set of the model-based study: TAS and ST1..ST9.
    pub fn standard_set() -> Vec<Self> {
        std::iter::once(Self::tas_default())
            .chain(TargetKind::ALL.iter().map(|&k| Self::sts_eb(k)))
            .collect()
    }

    pub fn label(&self) -> String {
        match self {
            Self::SampleCovariance => "S".into(),
            Self::Sts {
                kind,
                alpha: AlphaRule::EmpiricalBayes,
            } => format!("S{kind}"),
            Self::Sts {
                kind,
                alpha: AlphaRule::Fixed(a),
            } => format!("S{kind}@{a}"),
            Self::Tas { label, .. } => label.clone(),
        }
    }

    pub fn is_tas(&self) -> bool {
        matches!(self, Self::Tas { .. })
    }

    /// Target labels of a TAS configuration, in order.
    pub fn target_labels(&self) -> Vec<String> {
        match self {
            Self::Tas { kinds, external, .. } => kinds
                .iter()
                .map(ToString::to_string)
                .chain(external.iter().map(|t| t.label().to_string()))
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Result of one estimator on one data set.
#[derive(Debug, Clone)]
pub struct EstimatorOutput {
    pub sigma_hat: SymMatrix,
    /// For TAS: one weight per configured target label (0 for excluded targets).
    pub target_weights: Option<Vec<f64>>,
    pub sample_weight: Option<f64>,
}

/// Fits every configuration to one sample covariance, sharing the canonical
/// target set and its posterior table.
pub fn fit_all(
    s: &SampleCovariance,
    configs: &[EstimatorConfig],
    grid: &AlphaGrid,
    warnings: &mut Vec<String>,
) -> Result<Vec<EstimatorOutput>> {
    let needs_targets = configs
        .iter()
        .any(|c| !matches!(c, EstimatorConfig::SampleCovariance));
    let shared = if needs_targets {
        let defaults = build_default_target_set(&s.matrix)?;
        warnings.extend(defaults.warnings);
        let table = posterior_grid(&s.matrix, s.n, grid, &defaults.set)?;
        Some((defaults.set, table))
    } else {
        None
    };

    configs
        .iter()
        .map(|config| match config {
            EstimatorConfig::SampleCovariance => Ok(EstimatorOutput {
                sigma_hat: s.matrix.clone(),
                target_weights: None,
                sample_weight: None,
            }),
            EstimatorConfig::Sts { kind, alpha } => {
                let (set, table) = shared.as_ref().expect("targets built");
                let label = kind.to_string();
                let l = set
                    .labels()
                    .iter()
                    .position(|t| *t == label)
                    .ok_or_else(|| Error::DegenerateInput(format!("target {label} was excluded")))?;
                let a = match alpha {
                    AlphaRule::EmpiricalBayes => table.argmax_alpha(l).0,
                    AlphaRule::Fixed(a) => *a,
                };
                Ok(EstimatorOutput {
                    sigma_hat: sts_estimate(&s.matrix, set.get(l), a)?,
                    target_weights: None,
                    sample_weight: None,
                })
            }
            EstimatorConfig::Tas { kinds, external, .. } => {
                let (set, table) = shared.as_ref().expect("targets built");
                fit_tas_config(s, grid, set, table, kinds, external, config.target_labels(), warnings)
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn fit_tas_config(
    s: &SampleCovariance,
    grid: &AlphaGrid,
    canonical: &TargetSet,
    table: &PosteriorTable,
    kinds: &[TargetKind],
    external: &[ShrinkageTarget],
    configured: Vec<String>,
    warnings: &mut Vec<String>,
) -> Result<EstimatorOutput> {
    let mut labels = Vec::new();
    let mut targets = Vec::new();
    for kind in kinds {
        let label = kind.to_string();
        match canonical.find(&label) {
            Some(t) => {
                labels.push(label);
                targets.push(t.clone());
            }
            None => warnings.push(format!("{label} excluded from TAS; prior mass renormalised over survivors")),
        }
    }
    let mut table = if labels.is_empty() {
        None
    } else {
        Some(table.restrict(&labels)?)
    };
    for t in external {
        table = Some(match table {
            Some(tb) => tb.extend_with_target(&s.matrix, s.n, t)?,
            None => posterior_grid(&s.matrix, s.n, grid, &TargetSet::new(vec![t.clone()])?)?,
        });
        targets.push(t.clone());
    }
    let set = TargetSet::new(targets)?;
    let table = table.ok_or(Error::EmptyInput("TAS configuration has no targets"))?;
    let est = tas_estimate(&table, &s.matrix, &set)?;
    let by_label = est.weights_by_label();
    let weights = configured
        .iter()
        .map(|lab| by_label.iter().find(|(l, _)| l == lab).map_or(0.0, |(_, w)| *w))
        .collect();
    Ok(EstimatorOutput {
        sigma_hat: est.sigma_hat,
        target_weights: Some(weights),
        sample_weight: Some(est.sample_weight),
    })
}
