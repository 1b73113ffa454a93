use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::estimator::reparametrise;
use crate::linalg::{cholesky, dot, CholeskyFactor, SymMatrix};

/// Draws `n` zero-mean Gaussian samples `x = L z` with `L L^T = sigma`.
pub fn mvn_sample<R: Rng + ?Sized>(sigma: &SymMatrix, n: usize, rng: &mut R) -> Result<DataMatrix> {
    let l = cholesky(sigma)?;
    let p = sigma.dim();
    let mut entries = vec![0.0; p * n];
    let mut z = vec![0.0; p];
    for k in 0..n {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        for (i, x) in l.mul_vec(&z).into_iter().enumerate() {
            entries[i * n + k] = x;
        }
    }
    DataMatrix::from_variables(p, n, entries)
}

/// One draw from the mean-centred inverse-Wishart with `E[Sigma] = delta`.
///
/// Hyperparameters are `(nu, Psi)` from [`reparametrise`]. A Bartlett factor
/// `A` gives `W = C^{-T} A A^T C^{-1} ~ Wishart(nu, Psi^{-1})` with `Psi = C C^T`,
/// and the draw `W^{-1} = G^T G` with `G = A^{-1} C^T` uses triangular solves only.
pub fn inv_wishart_sample<R: Rng + ?Sized>(
    alpha: f64,
    delta: &SymMatrix,
    n_ref: usize,
    rng: &mut R,
) -> Result<SymMatrix> {
    let iw = reparametrise(alpha, delta, n_ref)?;
    let p = delta.dim();
    if !(iw.nu > p as f64 + 1.0) {
        return Err(Error::Domain(format!(
            "inverse-Wishart mean undefined: nu = {} <= p + 1",
            iw.nu
        )));
    }
    let c = cholesky(&iw.psi)?;

    let mut a = vec![0.0; p * p];
    for i in 0..p {
        let chi = ChiSquared::new(iw.nu - i as f64).map_err(|e| Error::Domain(e.to_string()))?;
        a[i * p + i] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[i * p + j] = rng.sample(StandardNormal);
        }
    }
    let a = CholeskyFactor::from_lower(p, a);

    // Column j of C^T holds C[j][0..=j] in rows 0..=j.
    let mut g_cols = Vec::with_capacity(p);
    for j in 0..p {
        let mut col: Vec<f64> = (0..p).map(|i| if i <= j { c.get(j, i) } else { 0.0 }).collect();
        a.solve_lower_in_place(&mut col);
        g_cols.push(col);
    }
    Ok(SymMatrix::from_lower_fn(p, |i, j| dot(&g_cols[i], &g_cols[j])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::sample_covariance;
    use crate::linalg::is_positive_definite;
    use crate::simulation::ExperimentRng;
    use statrs::distribution::{ContinuousCDF, InverseGamma};

    #[test]
    fn mvn_law_of_large_numbers() {
        let mut rng = ExperimentRng::new(11);
        let x = mvn_sample(&SymMatrix::identity(3), 100_000, &mut rng).unwrap();
        assert!(!x.is_centered());
        let s = sample_covariance(&x, false).unwrap().matrix;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((s.get(i, j) - target).abs() < 0.05);
            }
        }
    }

    #[test]
    fn mvn_single_column_and_determinism() {
        let sigma = SymMatrix::from_diagonal(&[1.0, 2.0]);
        let x = mvn_sample(&sigma, 1, &mut ExperimentRng::new(1)).unwrap();
        assert_eq!((x.p(), x.n()), (2, 1));
        let a = mvn_sample(&sigma, 5, &mut ExperimentRng::new(9)).unwrap();
        let b = mvn_sample(&sigma, 5, &mut ExperimentRng::new(9)).unwrap();
        assert_eq!(a, b);
        let bad = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]], 0.0).unwrap();
        assert!(mvn_sample(&bad, 5, &mut ExperimentRng::new(9)).is_err());
    }

    /// Two-sided Kolmogorov-Smirnov statistic against a continuous CDF.
    fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn scalar_draws_are_inverse_gamma() {
        let (alpha, n_ref) = (0.4, 10);
        let delta = SymMatrix::from_diagonal(&[2.0]);
        let iw = reparametrise(alpha, &delta, n_ref).unwrap();
        let reference = InverseGamma::new(iw.nu / 2.0, iw.psi.get(0, 0) / 2.0).unwrap();
        let mut rng = ExperimentRng::new(2024);
        let draws: Vec<f64> = (0..10_000)
            .map(|_| inv_wishart_sample(alpha, &delta, n_ref, &mut rng).unwrap().get(0, 0))
            .collect();
        let d = ks_statistic(draws, |x| reference.cdf(x));
        // asymptotic 1% critical value 1.628 / sqrt(n)
        assert!(d < 1.628 / 100.0, "KS statistic {d}");
    }

    #[test]
    fn draws_are_pd_with_mean_delta() {
        let delta = SymMatrix::from_rows(
            &[
                vec![2.0, 0.5, 0.0, 0.3],
                vec![0.5, 1.0, 0.2, 0.0],
                vec![0.0, 0.2, 1.5, 0.4],
                vec![0.3, 0.0, 0.4, 3.0],
            ],
            0.0,
        )
        .unwrap();
        let mut rng = ExperimentRng::new(5);
        let draws = 10_000;
        let mut mean = SymMatrix::zeros(4);
        for _ in 0..draws {
            let w = inv_wishart_sample(0.5, &delta, 20, &mut rng).unwrap();
            assert!(is_positive_definite(&w));
            mean.add_scaled(1.0 / draws as f64, &w).unwrap();
        }
        for i in 0..4 {
            for j in 0..4 {
                // zero entries are compared on the scale of the diagonal
                let scale = delta.get(i, j).abs().max((delta.get(i, i) * delta.get(j, j)).sqrt() * 0.2);
                assert!(
                    (mean.get(i, j) - delta.get(i, j)).abs() <= 0.05 * scale,
                    "({i},{j}): {} vs {}",
                    mean.get(i, j),
                    delta.get(i, j)
                );
            }
        }
    }
}
