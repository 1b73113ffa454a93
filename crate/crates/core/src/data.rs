//! Observation matrices and the maximum-likelihood sample covariance.

use crate::error::{Error, Result};
use crate::linalg::{dot, tol, SymMatrix};

/// `p` variables by `n` samples, stored variable-major (one row per variable).
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    p: usize,
    n: usize,
    entries: Vec<f64>,
    centered: bool,
    labels: Option<Vec<String>>,
}

impl DataMatrix {
    /// Wraps `p * n` entries laid out row by row (variable by variable).
    pub fn from_variables(p: usize, n: usize, entries: Vec<f64>) -> Result<Self> {
        if p == 0 || n == 0 {
            return Err(Error::EmptyInput("data matrix needs at least one variable and one sample"));
        }
        if entries.len() != p * n {
            return Err(Error::DimensionMismatch {
                expected: p * n,
                actual: entries.len(),
            });
        }
        if let Some(k) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: k % n,
                column: k / n,
                message: "non-finite value".into(),
            });
        }
        Ok(Self {
            p,
            n,
            entries,
            centered: false,
            labels: None,
        })
    }

    /// Builds from samples in rows (the usual data-frame orientation), transposing.
    pub fn from_samples(samples: &[Vec<f64>]) -> Result<Self> {
        let n = samples.len();
        let p = samples.first().map_or(0, Vec::len);
        let mut entries = vec![0.0; p * n];
        for (k, row) in samples.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    actual: row.len(),
                });
            }
            for (i, v) in row.iter().enumerate() {
                entries[i * n + k] = *v;
            }
        }
        Self::from_variables(p, n, entries)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                actual: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Labels, falling back to `V1..Vp`.
    pub fn labels_or_default(&self) -> Vec<String> {
        self.labels
            .clone()
            .unwrap_or_else(|| (1..=self.p).map(|i| format!("V{i}")).collect())
    }

    pub fn variable(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.entries[i * self.n + k]
    }

    /// Subtracts each variable's sample mean.
    pub fn center(&mut self) {
        let n = self.n;
        for row in self.entries.chunks_exact_mut(n) {
            let mean = row.iter().sum::<f64>() / n as f64;
            row.iter_mut().for_each(|v| *v -= mean);
        }
        self.centered = true;
    }

    /// Checks the centring invariant: every row sums to zero within tolerance.
    pub fn rows_sum_to_zero(&self) -> bool {
        let scale = self.entries.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        self.entries
            .chunks_exact(self.n)
            .all(|row| row.iter().sum::<f64>().abs() <= tol::CENTERING * self.n as f64 * scale)
    }

    /// New matrix holding the given sample columns, in order.
    pub fn select_samples(&self, columns: &[usize]) -> Result<Self> {
        let m = columns.len();
        let mut entries = Vec::with_capacity(self.p * m);
        for i in 0..self.p {
            let row = self.variable(i);
            entries.extend(columns.iter().map(|&k| row[k]));
        }
        let mut out = Self::from_variables(self.p, m, entries)?;
        out.labels = self.labels.clone();
        Ok(out)
    }
}

/// Sample covariance together with the variables whose variance vanished.
#[derive(Debug, Clone)]
pub struct SampleCovariance {
    pub matrix: SymMatrix,
    pub n: usize,
    /// Indices of variables with (numerically) zero variance.
    pub zero_variance: Vec<usize>,
}

impl SampleCovariance {
    pub fn warnings(&self) -> Vec<String> {
        if self.zero_variance.is_empty() {
            return Vec::new();
        }
        vec![format!(
            "degenerate input: {} variable(s) with zero variance (indices {:?}); \
             their correlations are treated as 0",
            self.zero_variance.len(),
            self.zero_variance
        )]
    }
}

/// Maximum-likelihood covariance `S = X X^T / n` (divisor `n`).
///
/// With `center` the variable means are removed first; otherwise the data
/// are taken to have zero population mean.
pub fn sample_covariance(x: &DataMatrix, center: bool) -> Result<SampleCovariance> {
    if x.n < 2 {
        return Err(Error::InsufficientSamples(format!(
            "sample covariance needs n >= 2, got {}",
            x.n
        )));
    }
    let centered;
    let x = if center && !x.centered {
        let mut c = x.clone();
        c.center();
        centered = c;
        &centered
    } else {
        x
    };
    let nf = x.n as f64;
    let matrix = SymMatrix::from_lower_fn(x.p, |i, j| dot(x.variable(i), x.variable(j)) / nf);
    let zero_variance = zero_variance_indices(&matrix);
    Ok(SampleCovariance {
        matrix,
        n: x.n,
        zero_variance,
    })
}

pub(crate) fn zero_variance_indices(s: &SymMatrix) -> Vec<usize> {
    let diag = s.diagonal();
    let max = diag.iter().fold(0.0_f64, |m, v| m.max(*v));
    diag.iter()
        .enumerate()
        .filter(|(_, v)| **v <= tol::DEGENERATE_VARIANCE * max)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_variable_zero_mean() {
        let x = DataMatrix::from_variables(1, 2, vec![1.0, -1.0]).unwrap();
        let s = sample_covariance(&x, false).unwrap();
        assert_eq!(s.matrix.get(0, 0), 1.0);
        assert!(s.zero_variance.is_empty());
    }

    #[test]
    fn constant_variable_flagged() {
        let x = DataMatrix::from_variables(1, 2, vec![2.0, 2.0]).unwrap();
        let s = sample_covariance(&x, true).unwrap();
        assert_eq!(s.matrix.get(0, 0), 0.0);
        assert_eq!(s.zero_variance, vec![0]);
        assert_eq!(s.warnings().len(), 1);
    }

    #[test]
    fn matches_outer_product_sum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (p, n) = (3, 50);
        let entries: Vec<f64> = (0..p * n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x = DataMatrix::from_variables(p, n, entries).unwrap();
        let s = sample_covariance(&x, false).unwrap();
        let mut brute = vec![vec![0.0; p]; p];
        for k in 0..n {
            for i in 0..p {
                for j in 0..p {
                    brute[i][j] += x.get(i, k) * x.get(j, k);
                }
            }
        }
        for i in 0..p {
            for j in 0..p {
                assert_relative_eq!(s.matrix.get(i, j), brute[i][j] / n as f64, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn centering_and_orientation() {
        let samples = vec![vec![1.0, 10.0], vec![2.0, 20.0], vec![3.0, 33.0]];
        let mut x = DataMatrix::from_samples(&samples).unwrap();
        assert_eq!((x.p(), x.n()), (2, 3));
        assert_eq!(x.variable(1), &[10.0, 20.0, 33.0]);
        x.center();
        assert!(x.is_centered());
        assert!(x.rows_sum_to_zero());
    }

    #[test]
    fn rejects_short_or_bad_input() {
        let x = DataMatrix::from_variables(2, 1, vec![1.0, 2.0]).unwrap();
        assert!(matches!(sample_covariance(&x, false), Err(Error::InsufficientSamples(_))));
        assert!(DataMatrix::from_variables(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DataMatrix::from_samples(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }
}
