use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use super::sampling::inv_wishart_sample;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Ground-truth covariance structures for the model-based simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scenario {
    /// Common variance, zero correlation.
    S1,
    /// Unit variance, constant correlation.
    S2,
    /// Unequal variances, decaying (alternating) correlation.
    S3,
    /// Unit-variance block-diagonal structure, perturbed by an inverse-Wishart draw.
    S4,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().trim_start_matches(['S', 's']) {
            "1" => Ok(Self::S1),
            "2" => Ok(Self::S2),
            "3" => Ok(Self::S3),
            "4" => Ok(Self::S4),
            _ => Err(Error::Domain(format!("unknown scenario '{s}' (expected 1..4)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioParams {
    pub s1_scale: f64,
    pub s2_correlation: f64,
    pub s3_decay: f64,
    pub s3_variance_range: (f64, f64),
    pub s4_block_correlation: f64,
    /// Shrinkage-scale concentration of the scenario-4 inverse-Wishart draw.
    pub s4_alpha: f64,
    /// Reference sample size for the scenario-4 draw; `None` means "the experiment's n".
    pub s4_n_ref: Option<usize>,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            s1_scale: 5.0,
            s2_correlation: 0.3,
            s3_decay: -0.7,
            s3_variance_range: (1.0, 5.0),
            s4_block_correlation: 0.3,
            s4_alpha: 0.5,
            s4_n_ref: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub id: Scenario,
    pub p: usize,
    pub params: ScenarioParams,
    /// Redraw the random truth (scenarios 3 and 4) in every repetition.
    pub fresh_sigma: bool,
}

impl ScenarioSpec {
    pub fn new(id: Scenario, p: usize) -> Result<Self> {
        let spec = Self {
            id,
            p,
            params: ScenarioParams::default(),
            fresh_sigma: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let pr = &self.params;
        let fail = |m: String| Err(Error::Domain(m));
        if self.p < 2 {
            return fail(format!("scenario dimension p = {} must be at least 2", self.p));
        }
        if self.id == Scenario::S4 && !self.p.is_multiple_of(2) {
            return fail(format!("scenario 4 needs an even p, got {}", self.p));
        }
        if !(pr.s1_scale > 0.0) {
            return fail("scenario 1 scale must be positive".into());
        }
        let pm1 = self.p as f64 - 1.0;
        if !(pr.s2_correlation > -1.0 / pm1 && pr.s2_correlation < 1.0) {
            return fail(format!("scenario 2 correlation must lie in (-1/(p-1), 1), got {}", pr.s2_correlation));
        }
        if !(pr.s3_decay.abs() < 1.0) {
            return fail("scenario 3 decay must satisfy |r| < 1".into());
        }
        let (lo, hi) = pr.s3_variance_range;
        if !(lo > 0.0 && hi > lo) {
            return fail("scenario 3 variance range must satisfy 0 < lo < hi".into());
        }
        let half = self.p as f64 / 2.0;
        if !(pr.s4_block_correlation > -1.0 / (half - 1.0).max(1.0) && pr.s4_block_correlation < 1.0) {
            return fail("scenario 4 block correlation outside the positive-definite range".into());
        }
        if !(pr.s4_alpha > 0.0 && pr.s4_alpha < 1.0) {
            return fail("scenario 4 alpha must lie in (0, 1)".into());
        }
        if pr.s4_n_ref == Some(0) {
            return fail("scenario 4 reference n must be positive".into());
        }
        Ok(())
    }

    /// Whether the truth is random (and so redrawn per repetition when `fresh_sigma`).
    pub fn is_random(&self) -> bool {
        matches!(self.id, Scenario::S3 | Scenario::S4)
    }

    /// The scenario-4 prior mean: two equal diagonal blocks with constant correlation.
    pub fn block_matrix(&self) -> SymMatrix {
        let half = self.p / 2;
        let r = self.params.s4_block_correlation;
        SymMatrix::from_lower_fn(self.p, |i, j| {
            if i == j {
                1.0
            } else if (i < half) == (j < half) {
                r
            } else {
                0.0
            }
        })
    }
}

/// Draws (or constructs) the true covariance of a scenario.
pub fn scenario_sigma<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<SymMatrix> {
    spec.validate()?;
    let p = spec.p;
    let pr = &spec.params;
    match spec.id {
        Scenario::S1 => Ok(SymMatrix::identity(p).scaled(pr.s1_scale)),
        Scenario::S2 => Ok(SymMatrix::from_lower_fn(p, |i, j| {
            if i == j {
                1.0
            } else {
                pr.s2_correlation
            }
        })),
        Scenario::S3 => {
            let (lo, hi) = pr.s3_variance_range;
            let sd: Vec<f64> = (0..p).map(|_| rng.random_range(lo..hi).sqrt()).collect();
            Ok(SymMatrix::from_lower_fn(p, |i, j| {
                sd[i] * pr.s3_decay.powi((i - j) as i32) * sd[j]
            }))
        }
        Scenario::S4 => {
            let n_ref = pr.s4_n_ref.ok_or_else(|| {
                Error::Domain("scenario 4 needs a reference sample size (s4_n_ref)".into())
            })?;
            inv_wishart_sample(pr.s4_alpha, &spec.block_matrix(), n_ref, rng)
        }
    }
}
