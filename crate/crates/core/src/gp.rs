//! Gaussian-process regression over the serving-weight box.
//!
//! Squared-exponential kernel with a lengthscale per dimension. Targets are
//! standardized per fit so one fixed hyperparameter grid serves every
//! objective scale; hyperparameters are picked by exhaustive log marginal
//! likelihood search over that grid. Observations are noisy batch means, so
//! the noise grid bottoms out at 1e-4 rather than zero.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const LENGTHSCALE_GRID: [f64; 5] = [0.05, 0.1, 0.2, 0.5, 1.0];
pub const SIGNAL_GRID: [f64; 3] = [0.5, 1.0, 2.0];
pub const NOISE_GRID: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];
pub const JITTER: f64 = 1e-8;

/// ARD squared-exponential kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl Kernel {
    pub fn new(lengthscales: Vec<f64>, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        if lengthscales.is_empty() || lengthscales.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::argument("lengthscales must be strictly positive"));
        }
        if !(signal_variance > 0.0) {
            return Err(Error::argument("signal variance must be strictly positive"));
        }
        if !(noise_variance >= 0.0) {
            return Err(Error::argument("noise variance must be nonnegative"));
        }
        Ok(Kernel {
            lengthscales,
            signal_variance,
            noise_variance,
        })
    }

    #[inline]
    pub fn value(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut z = 0.0;
        for ((&x, &y), &l) in a.iter().zip(b).zip(&self.lengthscales) {
            let d = (x - y) / l;
            z += d * d;
        }
        self.signal_variance * (-0.5 * z).exp()
    }
}

/// Fitted GP posterior. Immutable; queries are read-only.
#[derive(Debug, Clone)]
pub struct GpModel {
    inputs: Vec<Vec<f64>>,
    kernel: Kernel,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    /// (K + noise I)^-1 y, standardized scale.
    weights: DVector<f64>,
    targets_std: DVector<f64>,
    target_mean: f64,
    target_scale: f64,
    degenerate: bool,
}

impl GpModel {
    /// Fits hyperparameters by exhaustive grid search on the log marginal
    /// likelihood of the standardized targets. Needs at least two points.
    /// All-identical targets fall back to unit scale and are flagged.
    pub fn fit(points: &[Vec<f64>], values: &[f64]) -> Result<GpModel> {
        if points.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: points.len(),
            });
        }
        let dim = check_inputs(points, values)?;

        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let degenerate = var.sqrt() < 1e-12;
        let scale = if degenerate { 1.0 } else { var.sqrt() };
        let std_values: Vec<f64> = values.iter().map(|v| (v - mean) / scale).collect();

        let mut best: Option<(f64, Kernel)> = None;
        let mut lengths = vec![0usize; dim];
        loop {
            let lengthscales: Vec<f64> = lengths.iter().map(|&i| LENGTHSCALE_GRID[i]).collect();
            for &signal in &SIGNAL_GRID {
                for &noise in &NOISE_GRID {
                    let kernel = Kernel {
                        lengthscales: lengthscales.clone(),
                        signal_variance: signal,
                        noise_variance: noise,
                    };
                    if let Ok((chol, weights)) = factorize(points, &std_values, &kernel) {
                        let lml = lml_from_parts(&chol, &weights, &std_values);
                        if best.as_ref().map_or(true, |(b, _)| lml > *b) {
                            best = Some((lml, kernel));
                        }
                    }
                }
            }
            if !advance(&mut lengths, LENGTHSCALE_GRID.len()) {
                break;
            }
        }

        let (_, kernel) = best.ok_or_else(|| {
            Error::Numerical("no kernel in the grid produced a positive-definite system".into())
        })?;
        let (chol, weights) = factorize(points, &std_values, &kernel)?;
        Ok(GpModel {
            inputs: points.to_vec(),
            kernel,
            chol,
            weights,
            targets_std: DVector::from_vec(std_values),
            target_mean: mean,
            target_scale: scale,
            degenerate,
        })
    }

    /// Builds a model with a fixed kernel and raw (unstandardized) targets.
    /// Accepts a single observation; used by closed-form oracles and tests.
    pub fn with_kernel(points: &[Vec<f64>], values: &[f64], kernel: Kernel) -> Result<GpModel> {
        if points.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let dim = check_inputs(points, values)?;
        if kernel.lengthscales.len() != dim {
            return Err(Error::argument(format!(
                "kernel has {} lengthscales, inputs have dimension {dim}",
                kernel.lengthscales.len()
            )));
        }
        let (chol, weights) = factorize(points, values, &kernel)?;
        Ok(GpModel {
            inputs: points.to_vec(),
            kernel,
            chol,
            weights,
            targets_std: DVector::from_vec(values.to_vec()),
            target_mean: 0.0,
            target_scale: 1.0,
            degenerate: false,
        })
    }

    /// Posterior mean and (nonnegative) variance of the latent function at
    /// `x`, de-standardized to the original target scale.
    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        let k_star = DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|p| self.kernel.value(p, x)),
        );
        let mean_std = k_star.dot(&self.weights);
        let solved = self.chol.solve(&k_star);
        let var_std = (self.kernel.signal_variance - k_star.dot(&solved)).max(0.0);
        (
            mean_std * self.target_scale + self.target_mean,
            var_std * self.target_scale * self.target_scale,
        )
    }

    /// Gaussian log marginal likelihood of the (standardized) targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        lml_from_parts(&self.chol, &self.weights, self.targets_std.as_slice())
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn n_observations(&self) -> usize {
        self.inputs.len()
    }

    /// Max-norm residual of the stored factorization against the kernel
    /// matrix it is supposed to factor.
    pub fn factorization_residual(&self) -> f64 {
        let n = self.inputs.len();
        let k = kernel_matrix(&self.inputs, &self.kernel);
        let l = self.chol.l();
        let reconstructed = &l * l.transpose();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((reconstructed[(i, j)] - k[(i, j)]).abs());
            }
        }
        worst
    }
}

fn check_inputs(points: &[Vec<f64>], values: &[f64]) -> Result<usize> {
    if points.len() != values.len() {
        return Err(Error::argument(format!(
            "{} points but {} values",
            points.len(),
            values.len()
        )));
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::argument("points must share a nonzero dimension"));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::argument("inputs and targets must be finite"));
    }
    Ok(dim)
}

fn kernel_matrix(points: &[Vec<f64>], kernel: &Kernel) -> DMatrix<f64> {
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.value(&points[i], &points[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += kernel.noise_variance + JITTER;
    }
    k
}

fn factorize(
    points: &[Vec<f64>],
    values: &[f64],
    kernel: &Kernel,
) -> Result<(nalgebra::Cholesky<f64, nalgebra::Dyn>, DVector<f64>)> {
    let k = kernel_matrix(points, kernel);
    let chol = nalgebra::Cholesky::new(k)
        .ok_or_else(|| Error::Numerical("kernel matrix is not positive definite".into()))?;
    let y = DVector::from_vec(values.to_vec());
    let weights = chol.solve(&y);
    Ok((chol, weights))
}

fn lml_from_parts(
    chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
    weights: &DVector<f64>,
    values: &[f64],
) -> f64 {
    let n = values.len();
    let fit: f64 = values.iter().zip(weights.iter()).map(|(y, w)| y * w).sum();
    let log_det: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum();
    -0.5 * fit - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}

fn advance(idx: &mut [usize], radix: usize) -> bool {
    for slot in idx.iter_mut() {
        *slot += 1;
        if *slot < radix {
            return true;
        }
        *slot = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn grid_1d(values: &[f64]) -> Vec<Vec<f64>> {
        values.iter().map(|&v| vec![v]).collect()
    }

    #[test]
    fn interpolates_collinear_data() {
        let points = grid_1d(&[0.05, 0.5, 0.95]);
        let values: Vec<f64> = points.iter().map(|p| 2.0 * p[0]).collect();
        let model = GpModel::fit(&points, &values).unwrap();
        let mean_y = values.iter().sum::<f64>() / 3.0;
        let scale =
            (values.iter().map(|v| (v - mean_y) * (v - mean_y)).sum::<f64>() / 3.0).sqrt();
        for q in [0.3, 0.4, 0.6, 0.7] {
            let (mean, _) = model.posterior(&[q]);
            // Tolerance is on the standardized scale the fit works in.
            assert!(
                (mean - 2.0 * q).abs() / scale < 0.05,
                "query {q}: mean {mean}"
            );
        }
    }

    #[test]
    fn duplicate_inputs_with_conflicting_values_still_fit() {
        let points = grid_1d(&[0.2, 0.2, 0.8]);
        let values = vec![0.0, 1.0, 0.5];
        let model = GpModel::fit(&points, &values).unwrap();
        assert!(model.kernel().noise_variance >= NOISE_GRID[0]);
        let (_, var) = model.posterior(&[0.2]);
        assert!(var > 0.0);
    }

    #[test]
    fn constant_targets_fall_back_with_a_flag() {
        let points = grid_1d(&[0.1, 0.5, 0.9]);
        let values = vec![0.7, 0.7, 0.7];
        let model = GpModel::fit(&points, &values).unwrap();
        assert!(model.is_degenerate());
        for x in [0.0, 0.3, 1.0] {
            let (mean, var) = model.posterior(&[x]);
            assert!(var > 0.0);
            assert!((mean - 0.7).abs() < 1e-6);
        }
    }

    #[test]
    fn fewer_than_two_points_is_an_error() {
        assert!(matches!(
            GpModel::fit(&grid_1d(&[0.5]), &[1.0]),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn near_interpolation_at_training_points() {
        let kernel = Kernel::new(vec![0.2], 1.0, 1e-4).unwrap();
        let points = grid_1d(&[0.1, 0.4, 0.7, 0.9]);
        let values = vec![0.3, -0.2, 0.5, 0.1];
        let model = GpModel::with_kernel(&points, &values, kernel).unwrap();
        for (p, &v) in points.iter().zip(&values) {
            let (mean, var) = model.posterior(p);
            assert!((mean - v).abs() < 0.01, "mean {mean} vs {v}");
            assert!(var >= 0.0 && var <= 1e-4 + JITTER + 1e-6);
        }
    }

    #[test]
    fn reverts_to_the_prior_far_from_data() {
        let kernel = Kernel::new(vec![0.02], 1.5, 1e-4).unwrap();
        let points = grid_1d(&[0.05, 0.1]);
        let values = vec![0.8, -0.4];
        let model = GpModel::with_kernel(&points, &values, kernel).unwrap();
        let (mean, var) = model.posterior(&[0.95]);
        assert!(mean.abs() < 0.01, "mean {mean}"); // prior mean 0, raw targets
        assert!((var - 1.5).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn matches_the_closed_form_two_point_posterior() {
        let l = 0.3;
        let sf = 1.2;
        let sn = 0.05;
        let kernel = Kernel::new(vec![l], sf, sn).unwrap();
        let (x0, x1) = (0.2, 0.6);
        let (y0, y1) = (0.5, -0.3);
        let model = GpModel::with_kernel(&grid_1d(&[x0, x1]), &[y0, y1], kernel).unwrap();

        // Hand-rolled 2x2 solve.
        let k = |a: f64, b: f64| sf * (-0.5 * ((a - b) / l).powi(2)).exp();
        let (a11, a12, a22) = (k(x0, x0) + sn + JITTER, k(x0, x1), k(x1, x1) + sn + JITTER);
        let det = a11 * a22 - a12 * a12;
        let xq = 0.45;
        let (k0, k1) = (k(xq, x0), k(xq, x1));
        let w0 = (a22 * y0 - a12 * y1) / det;
        let w1 = (-a12 * y0 + a11 * y1) / det;
        let mean_expected = k0 * w0 + k1 * w1;
        let s0 = (a22 * k0 - a12 * k1) / det;
        let s1 = (-a12 * k0 + a11 * k1) / det;
        let var_expected = sf - (k0 * s0 + k1 * s1);

        let (mean, var) = model.posterior(&[xq]);
        assert!((mean - mean_expected).abs() < 1e-8);
        assert!((var - var_expected).abs() < 1e-8);
    }

    #[test]
    fn scalar_log_marginal_likelihood_matches_the_formula() {
        let sn = 0.1;
        let kernel = Kernel::new(vec![0.5], 1.0, sn).unwrap();
        let model = GpModel::with_kernel(&grid_1d(&[0.4]), &[0.0], kernel).unwrap();
        let expected = -0.5 * (2.0 * std::f64::consts::PI * (1.0 + sn)).ln();
        assert!((model.log_marginal_likelihood() - expected).abs() < 1e-7);
    }

    #[test]
    fn log_marginal_likelihood_is_permutation_invariant() {
        let points = grid_1d(&[0.1, 0.5, 0.8, 0.95]);
        let values = vec![0.2, -0.4, 0.9, 0.3];
        let kernel = Kernel::new(vec![0.25], 1.0, 1e-3).unwrap();
        let a = GpModel::with_kernel(&points, &values, kernel.clone()).unwrap();
        let perm_points = grid_1d(&[0.8, 0.1, 0.95, 0.5]);
        let perm_values = vec![0.9, 0.2, 0.3, -0.4];
        let b = GpModel::with_kernel(&perm_points, &perm_values, kernel).unwrap();
        assert!((a.log_marginal_likelihood() - b.log_marginal_likelihood()).abs() < 1e-10);

        let q = [0.33];
        let (ma, va) = a.posterior(&q);
        let (mb, vb) = b.posterior(&q);
        assert!((ma - mb).abs() < 1e-8 && (va - vb).abs() < 1e-8);
    }

    #[test]
    fn duplicating_an_observation_behaves_like_the_noise_model_predicts() {
        // With one observation y at x, adding an exact duplicate changes the
        // LML by the closed-form two-point formula; check against it.
        let sn = 0.01;
        let sf = 1.0;
        let kernel = Kernel::new(vec![0.3], sf, sn).unwrap();
        let y = 0.4;
        let single = GpModel::with_kernel(&grid_1d(&[0.5]), &[y], kernel.clone()).unwrap();
        let double = GpModel::with_kernel(&grid_1d(&[0.5, 0.5]), &[y, y], kernel).unwrap();

        let lml1 = single.log_marginal_likelihood();
        let a = sf + sn + JITTER;
        let b = sf;
        let det = a * a - b * b;
        let quad = y * y * (2.0 * a - 2.0 * b) / det;
        let lml2_expected =
            -0.5 * quad - 0.5 * det.ln() - (2.0 * std::f64::consts::PI).ln();
        let lml2 = double.log_marginal_likelihood();
        assert!((lml2 - lml2_expected).abs() < 1e-8);

        // The increment is the conditional log density of the duplicate,
        // capped by the zero-residual case at the noise-driven conditional
        // variance.
        let cond_var = a - b * b / a;
        let max_increment = -0.5 * (2.0 * std::f64::consts::PI * cond_var).ln();
        assert!(lml2 - lml1 <= max_increment + 1e-9);
    }

    #[test]
    fn factorization_residual_is_tiny() {
        let points: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i as f64) / 11.0, ((i * 7) % 12) as f64 / 11.0])
            .collect();
        let values: Vec<f64> = (0..12).map(|i| ((i * 3) % 5) as f64 / 5.0).collect();
        let model = GpModel::fit(&points, &values).unwrap();
        assert!(model.factorization_residual() < 1e-8);
    }

    #[test]
    fn refitting_samples_from_a_known_gp_recovers_the_lengthscale_roughly() {
        let true_l = 0.2;
        let kernel = Kernel::new(vec![true_l], 1.0, 1e-4).unwrap();
        let points: Vec<Vec<f64>> = (0..18).map(|i| vec![i as f64 / 17.0]).collect();
        let k = kernel_matrix(&points, &kernel);
        let chol = nalgebra::Cholesky::new(k).unwrap();
        let mut rng = crate::seeding::rng_from(2718);
        let z = DVector::from_iterator(18, (0..18).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let sample = chol.l() * z;

        let model = GpModel::fit(&points, sample.as_slice()).unwrap();
        let fitted = model.kernel().lengthscales[0];
        let pos = LENGTHSCALE_GRID.iter().position(|&l| l == true_l).unwrap();
        let neighbors = &LENGTHSCALE_GRID[pos.saturating_sub(1)..=(pos + 1).min(4)];
        assert!(
            neighbors.contains(&fitted),
            "fitted lengthscale {fitted} not within one grid step of {true_l}"
        );
    }

    #[test]
    fn posterior_variance_is_nonnegative_on_random_queries() {
        let mut rng = crate::seeding::rng_from(99);
        let points: Vec<Vec<f64>> = (0..10)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let values: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
        let model = GpModel::fit(&points, &values).unwrap();
        for _ in 0..200 {
            let q = [rng.random::<f64>(), rng.random::<f64>()];
            let (_, var) = model.posterior(&q);
            assert!(var >= 0.0);
        }
    }
}
