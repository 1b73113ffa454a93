//! Dense symmetric matrices, Cholesky factors and the special functions used by
//! the marginal likelihood.
//!
//! Positive definiteness is defined everywhere in the crate as "the Cholesky
//! factorisation succeeds with strictly positive pivots". Determinants are only
//! ever obtained from the factor, in log space.

use serde::ser::{Serialize, SerializeSeq, Serializer};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Numerical tolerances shared across the crate.
pub mod tol {
    /// Relative Cholesky reconstruction error, scaled by `p * max|m_ij|`.
    pub const CHOLESKY_RECONSTRUCTION: f64 = 1e-10;
    /// Relative trace error of the computed spectrum, scaled by `p * max|m_ij|`.
    pub const EIGEN_TRACE: f64 = 1e-8;
    /// Allowed deviation of the posterior mass from one.
    pub const POSTERIOR_NORMALISATION: f64 = 1e-12;
    /// Agreement between the direct model average and the weight form.
    pub const ROUTE_EQUIVALENCE: f64 = 1e-10;
    /// Weights plus sample weight must sum to one within this.
    pub const WEIGHT_BUDGET: f64 = 1e-12;
    /// Row sums of a centred data matrix, scaled by `n * max|x|`.
    pub const CENTERING: f64 = 1e-8;
    /// Variances at or below this fraction of the largest variance count as zero.
    pub const DEGENERATE_VARIANCE: f64 = 1e-12;
    /// Relative round-trip error of the (alpha, delta) <-> (nu, psi) map.
    pub const REPARAMETRISATION: f64 = 1e-12;
    /// Agreement between a stored PRIAL and its recomputation from losses.
    pub const PRIAL_SELF_CHECK: f64 = 1e-10;
    /// Relative asymmetry accepted when reading a matrix from disk.
    pub const INPUT_SYMMETRY: f64 = 1e-10;
}

/// Dense symmetric `p x p` matrix.
///
/// Storage is full row-major, but every mutation writes both `(i, j)` and
/// `(j, i)`, so symmetry holds exactly by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds a matrix by evaluating `f` on the lower triangle (`i >= j`) and mirroring.
    pub fn from_lower_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(dim >= 1, "SymMatrix dimension must be at least 1");
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        Self { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_lower_fn(dim, |_, _| 0.0)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_lower_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::from_lower_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    /// Builds a matrix from explicit rows, rejecting non-square or asymmetric input.
    ///
    /// Asymmetry up to `tol * max|entry|` is accepted and resolved by keeping
    /// the lower triangle.
    pub fn from_rows(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::EmptyInput("matrix has no rows"));
        }
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
        }
        let scale = rows
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        for i in 0..dim {
            for j in 0..i {
                if (rows[i][j] - rows[j][i]).abs() > tol * scale {
                    return Err(Error::Domain(format!(
                        "matrix is not symmetric at ({i}, {j}): {} vs {}",
                        rows[i][j], rows[j][i]
                    )));
                }
            }
        }
        Ok(Self::from_lower_fn(dim, |i, j| rows[i][j]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Row-major view of all `p * p` entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    /// Returns `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &SymMatrix, b: f64) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, c: f64, other: &SymMatrix) -> Result<()> {
        check_dims(self, other)?;
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += c * y;
        }
        Ok(())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim))?;
        for i in 0..self.dim {
            seq.serialize_element(self.row(i))?;
        }
        seq.end()
    }
}

fn check_dims(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            actual: b.dim,
        });
    }
    Ok(())
}

/// Lower-triangular Cholesky factor `L` with `L * L^T = m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    // Row-major, zeros above the diagonal.
    lower: Vec<f64>,
}

impl CholeskyFactor {
    /// Wraps an arbitrary row-major lower-triangular matrix with positive diagonal.
    pub(crate) fn from_lower(dim: usize, lower: Vec<f64>) -> Self {
        debug_assert_eq!(lower.len(), dim * dim);
        debug_assert!((0..dim).all(|i| lower[i * dim + i] > 0.0));
        Self { dim, lower }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.lower[i * self.dim..i * self.dim + i + 1]
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.get(i, i).ln()).sum::<f64>()
    }

    /// Returns `L * L^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        SymMatrix::from_lower_fn(self.dim, |i, j| dot(&self.row(i)[..=j], self.row(j)))
    }

    /// Returns `L * z`.
    pub fn mul_vec(&self, z: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| dot(self.row(i), &z[..=i])).collect()
    }

    /// Solves `L * x = b` in place by forward substitution.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        for i in 0..self.dim {
            let s = dot(&self.row(i)[..i], &b[..i]);
            b[i] = (b[i] - s) / self.get(i, i);
        }
    }
}

/// Factorises a symmetric matrix as `L * L^T`.
///
/// Fails with [`Error::NotPositiveDefinite`] at the first pivot that is not
/// strictly positive (or not finite).
pub fn cholesky(m: &SymMatrix) -> Result<CholeskyFactor> {
    let p = m.dim();
    let mut lower = vec![0.0; p * p];
    for i in 0..p {
        let (done, rest) = lower.split_at_mut(i * p);
        let row_i = &mut rest[..p];
        for j in 0..i {
            let s = m.get(i, j) - dot(&row_i[..j], &done[j * p..j * p + j]);
            row_i[j] = s / done[j * p + j];
        }
        let s = m.get(i, i) - dot(&row_i[..i], &row_i[..i]);
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: i });
        }
        row_i[i] = s.sqrt();
    }
    Ok(CholeskyFactor { dim: p, lower })
}

pub fn log_det(m: &SymMatrix) -> Result<f64> {
    Ok(cholesky(m)?.log_det())
}

pub fn is_positive_definite(m: &SymMatrix) -> bool {
    cholesky(m).is_ok()
}

/// Log of the multivariate gamma function
/// `Gamma_p(a) = pi^{p(p-1)/4} * prod_{j=1..p} Gamma(a - (j-1)/2)`.
pub fn mv_log_gamma(a: f64, p: usize) -> Result<f64> {
    if p == 0 {
        return Err(Error::Domain("multivariate gamma needs p >= 1".into()));
    }
    let pf = p as f64;
    if !(a > (pf - 1.0) / 2.0) {
        return Err(Error::Domain(format!(
            "multivariate gamma argument {a} must exceed (p - 1) / 2 = {}",
            (pf - 1.0) / 2.0
        )));
    }
    let mut acc = pf * (pf - 1.0) / 4.0 * std::f64::consts::PI.ln();
    for j in 0..p {
        acc += ln_gamma(a - j as f64 / 2.0);
    }
    Ok(acc)
}

/// All eigenvalues of a symmetric matrix, in descending order.
///
/// Householder tridiagonalisation followed by implicit symmetric QR (nalgebra).
pub fn sym_eigenvalues(m: &SymMatrix) -> Result<Vec<f64>> {
    let eig = nalgebra::linalg::SymmetricEigen::try_new(m.to_nalgebra(), f64::EPSILON, 100_000)
        .ok_or(Error::ConvergenceFailure)?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConvergenceFailure);
    }
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Squared Frobenius distance `sum_ij (a_ij - b_ij)^2`.
pub fn frobenius_dist_sq(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    check_dims(a, b)?;
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}

/// `log(sum(exp(xs)))`, shifted by the maximum.
pub fn log_sum_exp(xs: &[f64]) -> Result<f64> {
    let max = xs
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or(Error::EmptyInput("log_sum_exp of an empty list"))?;
    if xs.len() == 1 || !max.is_finite() {
        return Ok(max);
    }
    Ok(max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln())
}

/// Dot product with four independent accumulators so the loop vectorises.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..n {
        s += a[k] * b[k];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn random_pd(p: usize, seed: u64) -> SymMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..p * p).map(|_| rng.random_range(-1.0..1.0)).collect();
        SymMatrix::from_lower_fn(p, |i, j| {
            let s: f64 = (0..p).map(|k| a[i * p + k] * a[j * p + k]).sum();
            s + if i == j { 1e-3 } else { 0.0 }
        })
    }

    #[test]
    fn cholesky_identity_and_diagonal() {
        let l = cholesky(&SymMatrix::identity(3)).unwrap();
        assert_eq!(l.reconstruct(), SymMatrix::identity(3));
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        let l = cholesky(&SymMatrix::from_diagonal(&[4.0, 9.0])).unwrap();
        assert_eq!(l.get(0, 0), 2.0);
        assert_eq!(l.get(1, 1), 3.0);
        assert_eq!(l.get(1, 0), 0.0);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]], 0.0).unwrap();
        assert!(matches!(
            cholesky(&m),
            Err(Error::NotPositiveDefinite { pivot: 1 })
        ));
        assert!(!is_positive_definite(&SymMatrix::zeros(2)));
    }

    #[test]
    fn log_det_known_values() {
        assert_eq!(log_det(&SymMatrix::identity(5)).unwrap(), 0.0);
        assert_relative_eq!(
            log_det(&SymMatrix::from_diagonal(&[2.0, 2.0])).unwrap(),
            2.0 * 2f64.ln(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn log_det_matches_eigenvalue_product() {
        for seed in 0..5 {
            let m = random_pd(4, seed);
            let from_eig: f64 = sym_eigenvalues(&m).unwrap().iter().map(|v| v.ln()).sum();
            let ld = log_det(&m).unwrap();
            assert_relative_eq!(ld.exp(), from_eig.exp(), max_relative = 1e-8);
        }
    }

    #[test]
    fn mv_log_gamma_values() {
        // Gamma(2.5) = 1.5 * 0.5 * sqrt(pi)
        let oracle = (1.5 * 0.5 * std::f64::consts::PI.sqrt()).ln();
        assert_relative_eq!(mv_log_gamma(2.5, 1).unwrap(), oracle, epsilon = 1e-14);
        assert_relative_eq!(oracle, 0.284683, epsilon = 1e-6);
        // Gamma_2(1.5) = sqrt(pi) * Gamma(1.5) * Gamma(1) = pi / 2
        let v = mv_log_gamma(1.5, 2).unwrap();
        assert_relative_eq!(v, (std::f64::consts::PI / 2.0).ln(), epsilon = 1e-14);
        assert_relative_eq!(v, 0.451583, epsilon = 1e-6);
        assert!(matches!(mv_log_gamma(0.5, 2), Err(Error::Domain(_))));
        assert!(matches!(mv_log_gamma(0.0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn mv_log_gamma_reduces_to_scalar() {
        for k in 1..200 {
            let a = 0.05 * k as f64;
            let v = mv_log_gamma(a, 1).unwrap();
            let s = ln_gamma(a);
            assert!((v - s).abs() <= 1e-12 * s.abs().max(f64::MIN_POSITIVE), "a = {a}");
        }
    }

    #[test]
    fn eigenvalues_known_values() {
        assert_eq!(sym_eigenvalues(&SymMatrix::identity(3)).unwrap(), vec![1.0; 3]);
        let d = sym_eigenvalues(&SymMatrix::from_diagonal(&[1.0, 4.0])).unwrap();
        assert_eq!(d, vec![4.0, 1.0]);
        // characteristic polynomial (2 - x)^2 - 1 = 0
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]], 0.0).unwrap();
        let e = sym_eigenvalues(&m).unwrap();
        assert_relative_eq!(e[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(e[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn frobenius_known_values() {
        let i2 = SymMatrix::identity(2);
        assert_eq!(frobenius_dist_sq(&i2, &i2).unwrap(), 0.0);
        assert_eq!(frobenius_dist_sq(&i2, &SymMatrix::zeros(2)).unwrap(), 2.0);
        let m = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]], 0.0).unwrap();
        assert_eq!(frobenius_dist_sq(&i2, &m).unwrap(), 0.5);
        assert!(matches!(
            frobenius_dist_sq(&i2, &SymMatrix::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn log_sum_exp_known_values() {
        assert_relative_eq!(log_sum_exp(&[0.0, 0.0]).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(
            log_sum_exp(&[-1000.0, -1000.0]).unwrap(),
            -1000.0 + 2f64.ln(),
            epsilon = 1e-12
        );
        assert_eq!(log_sum_exp(&[5.0]).unwrap(), 5.0);
        assert!(matches!(log_sum_exp(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn from_rows_rejects_asymmetry() {
        let r = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]], 1e-10);
        assert!(matches!(r, Err(Error::Domain(_))));
        let r = SymMatrix::from_rows(&[vec![1.0, 0.5]], 1e-10);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    proptest! {
        #[test]
        fn cholesky_reconstructs(p in 1usize..12, seed in any::<u64>()) {
            let m = random_pd(p, seed);
            let l = cholesky(&m).unwrap();
            for i in 0..p {
                prop_assert!(l.get(i, i) > 0.0);
            }
            let err = frobenius_dist_sq(&l.reconstruct(), &m).unwrap().sqrt();
            prop_assert!(err <= tol::CHOLESKY_RECONSTRUCTION * p as f64 * m.max_abs());
        }

        #[test]
        fn eigenvalues_sum_to_trace(p in 1usize..12, seed in any::<u64>()) {
            let m = random_pd(p, seed);
            let e = sym_eigenvalues(&m).unwrap();
            prop_assert!(e.windows(2).all(|w| w[0] >= w[1]));
            let s: f64 = e.iter().sum();
            prop_assert!((s - m.trace()).abs() <= tol::EIGEN_TRACE * p as f64 * m.max_abs());
            let prod: f64 = e.iter().map(|v| v.ln()).sum();
            let ld = log_det(&m).unwrap();
            prop_assert!((ld.exp() - prod.exp()).abs() <= 1e-8 * prod.exp());
        }

        #[test]
        fn log_sum_exp_shift(xs in prop::collection::vec(-50.0f64..50.0, 1..20), c in -500.0f64..500.0) {
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let a = log_sum_exp(&shifted).unwrap();
            let b = log_sum_exp(&xs).unwrap() + c;
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }

        #[test]
        fn frobenius_symmetric_and_zero_iff_equal(p in 1usize..6, s1 in any::<u64>(), s2 in any::<u64>()) {
            let a = random_pd(p, s1);
            let b = random_pd(p, s2);
            prop_assert_eq!(frobenius_dist_sq(&a, &b).unwrap(), frobenius_dist_sq(&b, &a).unwrap());
            prop_assert_eq!(frobenius_dist_sq(&a, &a).unwrap(), 0.0);
            if a != b {
                prop_assert!(frobenius_dist_sq(&a, &b).unwrap() > 0.0);
            }
        }
    }
}
