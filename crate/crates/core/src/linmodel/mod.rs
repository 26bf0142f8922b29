//! Deterministic linear-model computations: ridge and least-squares fits,
//! leverage scores, and the conditional bias/variance/MSPE functionals.
//!
//! Penalties are always on the raw scale of `(XᵀX + ρI)⁻¹XᵀY`.

pub mod csv;
mod dataset;
mod fit;
mod functionals;
mod spectral;

pub use dataset::{Dataset, Truth};
pub use fit::{leverage_scores, ols_fit, ridge_fit, RidgeFit};
#[allow(unused_imports)]
pub(crate) use fit::argmax_first;
pub use functionals::{
    bias_vector, contrast_bias_sq, contrast_diagnostics, contrast_variance, mspe_exact, theta_rule,
    ContrastDiagnostics,
};
pub use spectral::Spectrum;

#[cfg(test)]
mod properties {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn design(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn shrinkage_in_penalty(seed in 0u64..1000, n in 2usize..15, p in 1usize..15, r1 in 1e-4f64..10.0, scale in 1.0f64..100.0) {
            let x = design(n, p, seed);
            let y = DVector::from_fn(n, |i, _| (i as f64).sin() + 0.5);
            let data = Dataset::observed(x, y).unwrap();
            let small = ridge_fit(&data, r1).unwrap().coefficients.norm();
            let large = ridge_fit(&data, r1 * scale).unwrap().coefficients.norm();
            prop_assert!(large <= small * (1.0 + 1e-12));
        }

        #[test]
        fn residual_identity(seed in 0u64..1000, n in 2usize..15, p in 1usize..15, rho in 1e-3f64..10.0) {
            let x = design(n, p, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let beta = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
            let eps = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let y = &x * &beta + &eps;
            let data = Dataset::simulated(x.clone(), y, beta.clone(), 1.0).unwrap();
            let fit = ridge_fit(&data, rho).unwrap();
            let lhs = &fit.residuals - &eps;
            let rhs = &x * (&beta - &fit.coefficients);
            prop_assert!((&lhs - &rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
        }

        #[test]
        fn variance_nonincreasing(seed in 0u64..1000, n in 2usize..12, p in 1usize..12, r1 in 1e-3f64..5.0, scale in 1.0f64..50.0) {
            let x = design(n, p, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 7);
            let c = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
            let sp = Spectrum::new(&x).unwrap();
            let lo = sp.contrast_variance(&c, r1, 1.0).unwrap();
            let hi = sp.contrast_variance(&c, r1 * scale, 1.0).unwrap();
            prop_assert!(hi <= lo * (1.0 + 1e-12));
        }

        // The bias is a sum of spectral terms wₖ·ρ/(sₖ²+ρ) plus a null-space
        // constant; when they share a sign the ratio is monotone in ρ.
        #[test]
        fn ratio_monotone_for_same_sign_bias(seed in 0u64..1000, n in 2usize..12, p in 1usize..12, r1 in 1e-3f64..5.0, scale in 1.0f64..50.0) {
            let x = design(n, p, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 7);
            let beta = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
            let sp = Spectrum::new(&x).unwrap();
            // Choose c so every spectral weight (Vᵀc)ₖ(Vᵀβ)ₖ is nonnegative and
            // the null-space part is parallel to β's.
            let vtb = sp.v().tr_mul(&beta);
            let null_beta = &beta - sp.v() * &vtb;
            let signs = vtb.map(|b| b.abs().max(1e-3) * b.signum());
            let c = sp.v() * signs + null_beta * 0.5;
            let lo = sp.contrast_diagnostics(&c, &beta, r1, 1.0).unwrap();
            let hi = sp.contrast_diagnostics(&c, &beta, r1 * scale, 1.0).unwrap();
            prop_assert!(lo.ratio <= hi.ratio + 1e-12 * (1.0 + hi.ratio));
        }

        #[test]
        fn leverage_sums_to_p(seed in 0u64..1000, p in 1usize..8, extra in 0usize..10) {
            let n = p + extra;
            let x = design(n, p, seed);
            let (scores, _) = leverage_scores(&x).unwrap();
            prop_assert!((scores.sum() - p as f64).abs() < 1e-10);
            prop_assert!(scores.iter().all(|&h| h > 0.0 && h <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn ratio_not_monotone_with_mixed_sign_bias() {
        // Spectral bias weights (1, 0, -2) on s² = (1, 10, 100): the bias
        // crosses zero at ρ = 98.
        let x = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 10f64.sqrt(), 10.0]));
        let c = DVector::from_vec(vec![1.0, 0.0, 1.0]);
        let beta = DVector::from_vec(vec![1.0, 0.0, -2.0]);
        let at = |rho: f64| contrast_diagnostics(&x, &c, &beta, rho, 1.0).unwrap().ratio;
        assert!(at(98.0) < 1e-20);
        assert!(at(1.0) > 0.5);
    }

    #[test]
    fn ridge_converges_to_ols() {
        for seed in 0..10 {
            let x = design(30, 5, seed);
            let y = DVector::from_fn(30, |i, _| (i as f64 * 0.37).cos());
            let data = Dataset::observed(x, y).unwrap();
            let ols = ols_fit(&data).unwrap().coefficients;
            let ridge = ridge_fit(&data, 1e-10).unwrap().coefficients;
            assert!((ols - ridge).norm() <= 1e-6);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let x = DMatrix::<f32>::identity(2, 2);
        let data = Dataset::observed(x, DVector::from_vec(vec![2.0f32, 4.0])).unwrap();
        let fit = ridge_fit(&data, 1.0f32).unwrap();
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-6);
    }
}
