//! Shrinkage targets: the nine canonical variance/correlation structures,
//! externally derived targets, and target sets.
//!
//! A canonical target is `T = V^{1/2} R V^{1/2}` where the variance profile `V`
//! is one of unit / common (`s_bar`) / unequal (`s_ii`) and the correlation
//! profile `R` is one of zero / constant (`r_bar`) / decaying (`r_bar^{|i-j|}`).
//! `s_bar` is the mean sample variance and `r_bar` the mean of the
//! `p(p-1)/2` off-diagonal sample correlations.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{sample_covariance, zero_variance_indices, DataMatrix};
use crate::error::{Error, Result};
use crate::estimator::{fit_tas, AlphaGrid};
use crate::linalg::{cholesky, frobenius_dist_sq, SymMatrix};

/// Margin kept from the boundary of the positive-definite region when repairing `r_bar`.
pub const CORRELATION_MARGIN: f64 = 1e-6;
/// Factor applied to the mean variance to stand in for a zero variance.
pub const ZERO_VARIANCE_FILL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TargetKind {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
    T9,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceProfile {
    Unit,
    Common,
    Unequal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationProfile {
    Zero,
    Constant,
    Decaying,
}

impl TargetKind {
    pub const ALL: [TargetKind; 9] = [
        TargetKind::T1,
        TargetKind::T2,
        TargetKind::T3,
        TargetKind::T4,
        TargetKind::T5,
        TargetKind::T6,
        TargetKind::T7,
        TargetKind::T8,
        TargetKind::T9,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn variance_profile(self) -> VarianceProfile {
        match self.index() % 3 {
            0 => VarianceProfile::Unit,
            1 => VarianceProfile::Common,
            _ => VarianceProfile::Unequal,
        }
    }

    pub fn correlation_profile(self) -> CorrelationProfile {
        match self.index() / 3 {
            0 => CorrelationProfile::Zero,
            1 => CorrelationProfile::Constant,
            _ => CorrelationProfile::Decaying,
        }
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.index() + 1)
    }
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let digit = t
            .strip_prefix('T')
            .or_else(|| t.strip_prefix('t'))
            .and_then(|d| d.parse::<usize>().ok());
        match digit {
            Some(d @ 1..=9) => Ok(Self::ALL[d - 1]),
            _ => Err(Error::Domain(format!("unknown target kind '{s}' (expected T1..T9)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Provenance {
    Canonical { kind: TargetKind },
    External { source: String },
}

/// A validated positive-definite target matrix.
#[derive(Debug, Clone)]
pub struct ShrinkageTarget {
    label: String,
    matrix: SymMatrix,
    provenance: Provenance,
    log_det: f64,
}

impl ShrinkageTarget {
    /// Validates `matrix` by Cholesky and caches its log-determinant.
    pub fn new(label: impl Into<String>, matrix: SymMatrix, provenance: Provenance) -> Result<Self> {
        let log_det = cholesky(&matrix)?.log_det();
        Ok(Self {
            label: label.into(),
            matrix,
            provenance,
            log_det,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Same target with a new label.
    pub fn relabeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Target scaled by `c > 0`, revalidated.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.label.clone(), self.matrix.scaled(c), self.provenance.clone())
    }

    pub fn descriptor(&self) -> TargetDescriptor {
        TargetDescriptor {
            label: self.label.clone(),
            provenance: self.provenance.clone(),
            dim: self.dim(),
        }
    }
}

/// JSON descriptor of a target (the matrix itself is written as CSV).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDescriptor {
    pub label: String,
    pub provenance: Provenance,
    pub dim: usize,
}

/// Ordered, non-empty collection of targets sharing one dimension and with unique labels.
#[derive(Debug, Clone)]
pub struct TargetSet {
    targets: Vec<ShrinkageTarget>,
}

impl TargetSet {
    pub fn new(targets: Vec<ShrinkageTarget>) -> Result<Self> {
        let first = targets
            .first()
            .ok_or(Error::EmptyInput("target set must contain at least one target"))?;
        let dim = first.dim();
        let mut seen = HashSet::new();
        for t in &targets {
            if t.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: t.dim(),
                });
            }
            if !seen.insert(t.label.as_str()) {
                return Err(Error::Domain(format!("duplicate target label '{}'", t.label)));
            }
        }
        Ok(Self { targets })
    }

    /// Appends a target, enforcing the set invariants.
    pub fn push(&mut self, target: ShrinkageTarget) -> Result<()> {
        if target.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: target.dim(),
            });
        }
        if self.targets.iter().any(|t| t.label == target.label) {
            return Err(Error::Domain(format!("duplicate target label '{}'", target.label)));
        }
        self.targets.push(target);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.targets[0].dim()
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ShrinkageTarget> {
        self.targets.iter()
    }

    pub fn get(&self, l: usize) -> &ShrinkageTarget {
        &self.targets[l]
    }

    pub fn find(&self, label: &str) -> Option<&ShrinkageTarget> {
        self.targets.iter().find(|t| t.label == label)
    }

    pub fn labels(&self) -> Vec<String> {
        self.targets.iter().map(|t| t.label.clone()).collect()
    }

    /// Every target scaled by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.targets.iter().map(|t| t.scaled(c)).collect::<Result<_>>()?)
    }
}

impl<'a> IntoIterator for &'a TargetSet {
    type Item = &'a ShrinkageTarget;
    type IntoIter = std::slice::Iter<'a, ShrinkageTarget>;

    fn into_iter(self) -> Self::IntoIter {
        self.targets.iter()
    }
}

/// Moments of a sample covariance that parametrise the canonical targets.
#[derive(Debug, Clone)]
pub struct CovarianceSummary {
    pub variances: Vec<f64>,
    /// `s_bar`, the mean of the diagonal.
    pub mean_variance: f64,
    /// `r_bar`; pairs involving a zero-variance variable contribute 0.
    pub mean_correlation: f64,
    pub zero_variance: Vec<usize>,
}

pub fn summarise(s: &SymMatrix) -> CovarianceSummary {
    let p = s.dim();
    let variances = s.diagonal();
    let zero_variance = zero_variance_indices(s);
    let mut degenerate = vec![false; p];
    for &i in &zero_variance {
        degenerate[i] = true;
    }
    let sd: Vec<f64> = variances.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut sum = 0.0;
    for i in 1..p {
        if degenerate[i] {
            continue;
        }
        for j in 0..i {
            if !degenerate[j] {
                sum += s.get(i, j) / (sd[i] * sd[j]);
            }
        }
    }
    let pairs = p * (p - 1) / 2;
    CovarianceSummary {
        mean_variance: variances.iter().sum::<f64>() / p as f64,
        mean_correlation: if pairs == 0 { 0.0 } else { sum / pairs as f64 },
        variances,
        zero_variance,
    }
}

/// A freshly built target and the warnings raised while building it.
#[derive(Debug, Clone)]
pub struct BuiltTarget {
    pub target: ShrinkageTarget,
    pub warnings: Vec<String>,
}

/// Diagonal of `V` for the given kind.
pub fn target_variances(kind: TargetKind, summary: &CovarianceSummary, warnings: &mut Vec<String>) -> Vec<f64> {
    let p = summary.variances.len();
    match kind.variance_profile() {
        VarianceProfile::Unit => vec![1.0; p],
        VarianceProfile::Common => vec![summary.mean_variance; p],
        VarianceProfile::Unequal => {
            let fill = summary.mean_variance * ZERO_VARIANCE_FILL;
            if !summary.zero_variance.is_empty() {
                warnings.push(format!(
                    "{kind}: zero variance for variable(s) {:?} replaced by {fill:e}",
                    summary.zero_variance
                ));
            }
            let mut v = summary.variances.clone();
            for &i in &summary.zero_variance {
                v[i] = fill;
            }
            v
        }
    }
}

/// Correlation matrix `R` for the given kind, with `r_bar` repaired where needed.
pub fn target_correlation(kind: TargetKind, summary: &CovarianceSummary, warnings: &mut Vec<String>) -> SymMatrix {
    let p = summary.variances.len();
    let r_bar = summary.mean_correlation;
    match kind.correlation_profile() {
        CorrelationProfile::Zero => SymMatrix::identity(p),
        CorrelationProfile::Constant => {
            let mut r = r_bar;
            if p >= 2 {
                let lower = -1.0 / (p as f64 - 1.0);
                if !(r > lower && r < 1.0) {
                    let bound = (1.0 - CORRELATION_MARGIN) / (p as f64 - 1.0);
                    r = r.signum() * r.abs().min(bound);
                    warnings.push(format!(
                        "{kind}: mean correlation {r_bar} outside ({lower}, 1); repaired to {r}"
                    ));
                }
            }
            SymMatrix::from_lower_fn(p, |i, j| if i == j { 1.0 } else { r })
        }
        CorrelationProfile::Decaying => {
            let bound = 1.0 - CORRELATION_MARGIN;
            let r = if r_bar.abs() > bound {
                warnings.push(format!("{kind}: decay correlation {r_bar} clamped to |r| <= {bound}"));
                r_bar.signum() * bound
            } else {
                r_bar
            };
            SymMatrix::from_lower_fn(p, |i, j| r.powi((i - j) as i32))
        }
    }
}

pub(crate) fn build_from_summary(kind: TargetKind, summary: &CovarianceSummary) -> Result<BuiltTarget> {
    let mut warnings = Vec::new();
    let v = target_variances(kind, summary, &mut warnings);
    let r = target_correlation(kind, summary, &mut warnings);
    // r_ij * sqrt(v_i v_j) keeps the diagonal exactly v_i
    let matrix = SymMatrix::from_lower_fn(v.len(), |i, j| r.get(i, j) * (v[i] * v[j]).sqrt());
    let target = ShrinkageTarget::new(kind.to_string(), matrix, Provenance::Canonical { kind })?;
    Ok(BuiltTarget { target, warnings })
}

/// Builds one canonical target from a sample covariance.
pub fn build_target(kind: TargetKind, s: &SymMatrix) -> Result<BuiltTarget> {
    build_from_summary(kind, &summarise(s))
}

/// The canonical targets that survived validation, plus what was dropped.
#[derive(Debug, Clone)]
pub struct DefaultTargets {
    pub set: TargetSet,
    pub excluded: Vec<TargetKind>,
    pub warnings: Vec<String>,
}

/// Builds the requested canonical kinds in order; kinds that fail the
/// positive-definiteness check are excluded with a warning.
pub fn build_target_set(kinds: &[TargetKind], s: &SymMatrix) -> Result<DefaultTargets> {
    let summary = summarise(s);
    let mut targets = Vec::with_capacity(kinds.len());
    let mut excluded = Vec::new();
    let mut warnings = Vec::new();
    if !summary.zero_variance.is_empty() {
        warnings.push(format!(
            "degenerate input: zero-variance variable(s) {:?} contribute 0 to the mean correlation",
            summary.zero_variance
        ));
    }
    for &kind in kinds {
        match build_from_summary(kind, &summary) {
            Ok(built) => {
                warnings.extend(built.warnings);
                targets.push(built.target);
            }
            Err(Error::NotPositiveDefinite { .. }) => {
                warnings.push(format!("{kind}: not positive definite after repair; excluded"));
                excluded.push(kind);
            }
            Err(e) => return Err(e),
        }
    }
    if targets.is_empty() {
        return Err(Error::DegenerateInput(
            "no requested target is positive definite".into(),
        ));
    }
    Ok(DefaultTargets {
        set: TargetSet::new(targets)?,
        excluded,
        warnings,
    })
}

/// The nine canonical targets T1..T9.
pub fn build_default_target_set(s: &SymMatrix) -> Result<DefaultTargets> {
    build_target_set(&TargetKind::ALL, s)
}

/// Target derived from auxiliary data: the TAS estimate of the auxiliary
/// covariance using the nine canonical targets and the default grid.
pub fn external_target(aux: &DataMatrix, name: &str, expected_dim: usize, center: bool) -> Result<ShrinkageTarget> {
    if aux.p() != expected_dim {
        return Err(Error::DimensionMismatch {
            expected: expected_dim,
            actual: aux.p(),
        });
    }
    let s = sample_covariance(aux, center)?;
    let targets = build_default_target_set(&s.matrix)?;
    let fit = fit_tas(&s.matrix, s.n, &AlphaGrid::default(), &targets.set)?;
    ShrinkageTarget::new(
        format!("ext:{name}"),
        fit.sigma_hat,
        Provenance::External {
            source: format!("shrinkage estimate of auxiliary data '{name}' (n = {})", aux.n()),
        },
    )
}

/// Labelled matrix of pairwise Frobenius distances.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceTable {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

/// Pairwise Frobenius distances between targets, optionally with extra
/// matrices (such as `S` or a known truth) appended as rows/columns.
pub fn target_distance_matrix(set: &TargetSet, extra: &[(String, SymMatrix)]) -> Result<DistanceTable> {
    let mut labels = set.labels();
    let mut mats: Vec<&SymMatrix> = set.iter().map(|t| t.matrix()).collect();
    for (label, m) in extra {
        labels.push(label.clone());
        mats.push(m);
    }
    let k = mats.len();
    let mut values = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..a {
            let d = frobenius_dist_sq(mats[a], mats[b])?.sqrt();
            values[a][b] = d;
            values[b][a] = d;
        }
    }
    Ok(DistanceTable { labels, values })
}
