//! Two-stage residual bootstrap for ridge contrasts and the four interval
//! constructions compared in the simulation study.
//!
//! Bootstrap quantiles use the order statistic at rank `⌈αB⌉` with no
//! interpolation (see [`quantile`]).

mod draws;
mod intervals;

pub use draws::{plug_in_draws, rb_contrast_draws, BootstrapDraws};
pub(crate) use draws::uniform_index;
pub(crate) use intervals::{normal_interval, rb_interval};
pub use intervals::{
    ci_normal, ci_ols_rb, ci_oracle, ci_ridge_rb, normal_quantile, ols_noise_variance, oracle_law, quantile,
    ConfidenceInterval, Method, OracleLaw,
};

#[cfg(test)]
mod calibration {
    use super::*;
    use crate::linmodel::{leverage_scores, Dataset};
    use nalgebra::{DMatrix, DVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn within(coverage: f64, level: f64, tol: f64) -> bool {
        (coverage - level).abs() <= tol
    }

    #[test]
    fn all_methods_near_nominal_in_low_dimension() {
        let (n, reps, level) = (200, 2000, 0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let x = DMatrix::from_fn(n, 2, |_, _| StandardNormal.sample(&mut rng));
        let beta = DVector::from_vec(vec![1.0, 1.0]) / 2f64.sqrt();
        let (_, i_star) = leverage_scores(&x).unwrap();
        let c: DVector<f64> = x.row(i_star).transpose();
        let target = c.dot(&beta);
        let (rho, pilot_rho) = (0.5, 2.5);

        let law = oracle_law(&x, &beta, &StandardNormal, |_, _| Ok(rho), &c, reps, &mut rng).unwrap();
        let mut hits = [0usize; 4];
        for _ in 0..reps {
            let noise = DVector::from_fn(n, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
            let y = &x * &beta + noise;
            let data = Dataset::observed(x.clone(), y).unwrap();
            let ridge = ci_ridge_rb(&data, &c, rho, pilot_rho, 500, level, &mut rng).unwrap();
            let normal = ci_normal(&data, &c, rho, level).unwrap();
            let ols = ci_ols_rb(&data, &c, 500, level, &mut rng).unwrap();
            let oracle = law.interval(ridge.estimate, level).unwrap();
            for (k, ci) in [oracle, ridge, normal, ols].iter().enumerate() {
                hits[k] += ci.contains(target) as usize;
            }
        }
        for (k, &h) in hits.iter().enumerate() {
            let coverage = h as f64 / reps as f64;
            assert!(within(coverage, level, 0.04), "{}: {coverage}", Method::ALL[k]);
        }
    }

    #[test]
    fn ols_rb_for_a_mean() {
        let (n, reps, level) = (100, 2000, 0.9);
        let x = DMatrix::from_element(n, 1, 1.0f64);
        let c = DVector::from_vec(vec![1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut hits = 0;
        for _ in 0..reps {
            let y = DVector::from_fn(n, |_, _| { let e: f64 = StandardNormal.sample(&mut rng); 3.0 + e });
            let data = Dataset::observed(x.clone(), y).unwrap();
            let ci = ci_ols_rb(&data, &c, 400, level, &mut rng).unwrap();
            // The estimate is the sample mean.
            assert!((ci.estimate - data.y().mean()).abs() < 1e-12);
            hits += ci.contains(3.0) as usize;
        }
        let coverage = hits as f64 / reps as f64;
        assert!(within(coverage, level, 0.04), "{coverage}");
    }
}
