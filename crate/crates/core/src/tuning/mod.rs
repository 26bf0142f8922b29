//! Penalty selection: K-fold cross-validation of a base penalty `r̂`, the
//! prefactor map to the pilot and inference penalties, and the exponent
//! form `n^(1−e)`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::linmodel::{Dataset, Spectrum};
use crate::Real;

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_GRID_SIZE: usize = 30;

/// Multipliers taking `r̂` to `(ϱ, ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prefactors {
    pub pilot: f64,
    pub inference: f64,
}

impl Default for Prefactors {
    fn default() -> Self {
        Self {
            pilot: 5.0,
            inference: 0.1,
        }
    }
}

impl Prefactors {
    pub fn apply<T: Real>(&self, r_hat: T) -> (T, T) {
        (T::lit(self.pilot) * r_hat, T::lit(self.inference) * r_hat)
    }
}

/// `(ϱ, ρ) = (5r̂, 0.1r̂)`.
pub fn penalty_pair<T: Real>(r_hat: T) -> Result<(T, T)> {
    if !(r_hat.finite() && r_hat > T::zero()) {
        return Err(invalid(format!("base penalty must be positive, got {r_hat}")));
    }
    Ok(Prefactors::default().apply(r_hat))
}

/// `n · n^(−e) = n^(1−e)`, the raw penalty for a normalized penalty
/// `ρ/n = n^(−e)`.
pub fn exponent_to_penalty(n: usize, exponent: f64) -> Result<f64> {
    if n == 0 || !(exponent.is_finite() && exponent > 0.0) {
        return Err(invalid("exponent form needs n ≥ 1 and a positive exponent"));
    }
    Ok((n as f64).powf(1.0 - exponent))
}

/// `size` log-spaced values from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, size: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && max.is_finite()) || size == 0 {
        return Err(invalid("grid needs 0 < min ≤ max and a positive size"));
    }
    if size == 1 {
        return Ok(vec![min]);
    }
    let (a, b) = (min.ln(), max.ln());
    Ok((0..size)
        .map(|k| match k {
            0 => min,
            k if k == size - 1 => max,
            k => (a + (b - a) * k as f64 / (size - 1) as f64).exp(),
        })
        .collect())
}

/// 30 log-spaced values from `10⁻⁴·n` to `10²·n`.
pub fn default_grid(n: usize) -> Vec<f64> {
    let n = n as f64;
    log_grid(1e-4 * n, 1e2 * n, DEFAULT_GRID_SIZE).expect("static grid bounds are valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyPlan<T: Real> {
    pub r_hat: T,
    pub pilot_rho: T,
    pub inference_rho: T,
    pub grid: Vec<T>,
    pub cv_scores: Vec<T>,
}

impl<T: Real> PenaltyPlan<T> {
    /// `r,score` rows under a `# r_hat=` comment line.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# r_hat={:.16e}\nr,score\n", self.r_hat);
        for (r, s) in self.grid.iter().zip(&self.cv_scores) {
            out.push_str(&format!("{r:.16e},{s:.16e}\n"));
        }
        out
    }
}

/// Row indices of each fold: a permutation from `rng` cut into `folds`
/// contiguous blocks of `⌊n/K⌋`, the last one taking the remainder.
pub fn fold_partition<R: Rng + ?Sized>(n: usize, folds: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(invalid("cross-validation needs at least 2 folds"));
    }
    let size = n / folds;
    if size == 0 {
        return Err(invalid(format!("{folds} folds leave an empty fold with n = {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    Ok((0..folds)
        .map(|f| {
            let end = if f + 1 == folds { n } else { (f + 1) * size };
            perm[f * size..end].to_vec()
        })
        .collect())
}

fn take_rows<T: Real>(x: &DMatrix<T>, rows: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

fn take<T: Real>(y: &DVector<T>, rows: &[usize]) -> DVector<T> {
    DVector::from_fn(rows.len(), |i, _| y[rows[i]])
}

/// Mean held-out squared error per grid value for a fixed partition.
///
/// Each training fold is decomposed once; a grid value then costs one
/// small matrix-vector product.
pub fn cv_scores<T: Real>(data: &Dataset<T>, grid: &[T], partition: &[Vec<usize>]) -> Result<Vec<T>> {
    if grid.is_empty() {
        return Err(invalid("penalty grid is empty"));
    }
    if grid.iter().any(|&r| !(r.finite() && r > T::zero())) {
        return Err(invalid("penalty grid values must be positive and finite"));
    }
    let n = data.n();
    let mut in_fold = vec![usize::MAX; n];
    for (f, rows) in partition.iter().enumerate() {
        if rows.is_empty() {
            return Err(invalid("cross-validation fold has no rows"));
        }
        for &i in rows {
            in_fold[i] = f;
        }
    }
    let mut totals = vec![T::zero(); grid.len()];
    for (f, hold) in partition.iter().enumerate() {
        let train: Vec<usize> = (0..n).filter(|&i| in_fold[i] != f).collect();
        if train.is_empty() {
            return Err(invalid("cross-validation fold leaves no training rows"));
        }
        let spectrum = Spectrum::new(&take_rows(data.x(), &train))?;
        let uty = spectrum.u().tr_mul(&take(data.y(), &train));
        let xv = take_rows(data.x(), hold) * spectrum.v();
        let y_hold = take(data.y(), hold);
        let m = T::from_count(hold.len());
        for (total, &r) in totals.iter_mut().zip(grid) {
            let coef = DVector::from_fn(uty.len(), |k, _| {
                let s = spectrum.singular_values()[k];
                s / (s * s + r) * uty[k]
            });
            *total += (&y_hold - &xv * coef).norm_squared() / m;
        }
    }
    let folds = T::from_count(partition.len());
    Ok(totals.into_iter().map(|t| t / folds).collect())
}

/// Grid value with the smallest finite score; ties go to the smaller value.
pub fn argmin_penalty<T: Real>(grid: &[T], scores: &[T]) -> Result<T> {
    let mut best: Option<(T, T)> = None;
    for (&r, &s) in grid.iter().zip(scores) {
        if !s.finite() {
            continue;
        }
        best = match best {
            Some((br, bs)) if bs < s || (bs == s && br <= r) => Some((br, bs)),
            _ => Some((r, s)),
        };
    }
    best.map(|(r, _)| r)
        .ok_or_else(|| Error::DegenerateData("every cross-validation score is infinite".into()))
}

/// K-fold cross-validation over `grid`, mapped to `(ϱ, ρ)` with `prefactors`.
pub fn cv_select_with<T: Real, R: Rng + ?Sized>(
    data: &Dataset<T>,
    grid: &[T],
    folds: usize,
    prefactors: Prefactors,
    rng: &mut R,
) -> Result<PenaltyPlan<T>> {
    let partition = fold_partition(data.n(), folds, rng)?;
    let scores = cv_scores(data, grid, &partition)?;
    let r_hat = argmin_penalty(grid, &scores)?;
    let (pilot_rho, inference_rho) = prefactors.apply(r_hat);
    Ok(PenaltyPlan {
        r_hat,
        pilot_rho,
        inference_rho,
        grid: grid.to_vec(),
        cv_scores: scores,
    })
}

/// K-fold cross-validation with the default `(5, 0.1)` prefactors.
pub fn cv_select<T: Real, R: Rng + ?Sized>(
    data: &Dataset<T>,
    grid: &[T],
    folds: usize,
    rng: &mut R,
) -> Result<PenaltyPlan<T>> {
    cv_select_with(data, grid, folds, Prefactors::default(), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{generate_dataset, make_beta, make_covariance, BetaStyle, NoiseSpec};
    use crate::linmodel::ridge_fit;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pair_examples() {
        assert_eq!(penalty_pair(1.0).unwrap(), (5.0, 0.1));
        assert_eq!(penalty_pair(2.0).unwrap(), (10.0, 0.2));
        let (a, b) = penalty_pair(0.04f64).unwrap();
        assert!((a - 0.2).abs() < 1e-15 && (b - 0.004).abs() < 1e-15);
        assert!(penalty_pair(0.0).is_err());
    }

    #[test]
    fn exponent_examples() {
        assert_eq!(exponent_to_penalty(100, 1.0).unwrap(), 1.0);
        assert!((exponent_to_penalty(100, 0.5).unwrap() - 10.0).abs() < 1e-12);
        // n^(1−2) = 1/n.
        assert!((exponent_to_penalty(10_000, 2.0).unwrap() - 1e-4).abs() < 1e-18);
        assert!(exponent_to_penalty(10, 0.0).is_err());
    }

    #[test]
    fn default_grid_shape() {
        let g = default_grid(100);
        assert_eq!(g.len(), 30);
        assert_eq!(g[0], 1e-2);
        assert_eq!(g[29], 1e4);
        assert!(g.windows(2).all(|w| (w[1] / w[0] - (1e6f64).powf(1.0 / 29.0)).abs() < 1e-9));
    }

    #[test]
    fn partition_covers_rows_once() {
        let parts = fold_partition(23, 5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![4, 4, 4, 4, 7]);
        let mut all: Vec<usize> = parts.concat();
        all.sort();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(fold_partition(4, 5, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
        assert!(fold_partition(10, 1, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }

    fn setting(n: usize, p: usize, sigma: f64, zero_beta: bool, seed: u64) -> Dataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cov = make_covariance(p, 0.5, &mut rng).unwrap();
        let beta = if zero_beta {
            DVector::zeros(p)
        } else {
            make_beta(p, BetaStyle::UniformUnit).unwrap()
        };
        generate_dataset(n, &cov, &beta, &NoiseSpec::normal(sigma).unwrap(), &mut rng).unwrap()
    }

    #[test]
    fn scores_match_direct_refits() {
        let data = setting(40, 10, 0.5, false, 3);
        let partition = fold_partition(40, 4, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let grid = [0.01, 1.0, 30.0];
        let fast = cv_scores(&data, &grid, &partition).unwrap();
        for (k, &r) in grid.iter().enumerate() {
            let mut total = 0.0;
            for hold in &partition {
                let train: Vec<usize> = (0..40).filter(|i| !hold.contains(i)).collect();
                let sub = Dataset::observed(take_rows(data.x(), &train), take(data.y(), &train)).unwrap();
                let beta = ridge_fit(&sub, r).unwrap().coefficients;
                let resid = take(data.y(), hold) - take_rows(data.x(), hold) * beta;
                total += resid.norm_squared() / hold.len() as f64;
            }
            assert!((fast[k] - total / 4.0).abs() <= 1e-10 * fast[k]);
        }
    }

    #[test]
    fn noiseless_picks_smallest_penalty() {
        let data = setting(60, 10, 0.0, false, 4);
        let grid = [1e-9, 1e-3, 1.0, 100.0];
        let plan = cv_select(&data, &grid, 5, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(plan.r_hat, 1e-9);
        assert_eq!(plan.pilot_rho, 5.0 * plan.r_hat);
        assert_eq!(plan.inference_rho, 0.1 * plan.r_hat);
    }

    #[test]
    fn pure_noise_picks_largest_penalty() {
        let mut wins = 0;
        for seed in 0..100 {
            let data = setting(200, 50, 1.0, true, 1000 + seed);
            let plan = cv_select(&data, &[1e-4, 1e6], 5, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            wins += (plan.r_hat == 1e6) as usize;
        }
        assert!(wins >= 95, "{wins}");
    }

    #[test]
    fn selection_is_seed_deterministic() {
        let data = setting(50, 20, 0.3, false, 5);
        let grid = default_grid(50);
        let a = cv_select(&data, &grid, 5, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let b = cv_select(&data, &grid, 5, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(a, b);
        assert!(a.grid.contains(&a.r_hat));
        let best = a.cv_scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let k = a.grid.iter().position(|&r| r == a.r_hat).unwrap();
        assert_eq!(a.cv_scores[k], best);
    }

    #[test]
    fn ties_go_to_the_smaller_penalty() {
        assert_eq!(argmin_penalty(&[3.0, 1.0, 2.0], &[0.5, 0.5, 0.7]).unwrap(), 1.0);
        assert_eq!(argmin_penalty(&[1.0, 2.0], &[f64::INFINITY, 4.0]).unwrap(), 2.0);
        assert!(matches!(
            argmin_penalty(&[1.0, 2.0], &[f64::INFINITY, f64::NAN]),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn plan_csv_has_header_and_rows() {
        let plan = PenaltyPlan {
            r_hat: 2.0,
            pilot_rho: 10.0,
            inference_rho: 0.2,
            grid: vec![1.0, 2.0],
            cv_scores: vec![0.3, 0.1],
        };
        let csv = plan.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# r_hat=2"));
        assert_eq!(lines[1], "r,score");
        assert_eq!(lines.len(), 4);
    }

    /// Pilot residual SD against σ for the four simulation settings. The
    /// typical pilot fit leaves residuals on the scale of the errors; the
    /// per-seed spread is wide (roughly 60–80% of seeds inside the band).
    #[test]
    fn pilot_residuals_do_not_collapse() {
        let sigma = 0.1;
        for &(p, eta) in &[(45, 0.5), (95, 0.5), (45, 1.0), (95, 1.0)] {
            let mut ratios = Vec::new();
            for seed in 0..100 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let cov = make_covariance(p, eta, &mut rng).unwrap();
                let beta = make_beta(p, BetaStyle::UniformUnit).unwrap();
                let data = generate_dataset(100, &cov, &beta, &NoiseSpec::t5(sigma).unwrap(), &mut rng).unwrap();
                let plan = cv_select(&data, &default_grid(100), 5, &mut rng).unwrap();
                let r = ridge_fit(&data, plan.pilot_rho).unwrap().residuals;
                let mean = r.mean();
                let sd = (r.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / 100.0).sqrt();
                ratios.push(sd / sigma);
            }
            ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = 0.5 * (ratios[49] + ratios[50]);
            assert!((0.8..=1.3).contains(&median), "p = {p}, eta = {eta}: median {median}");
            let in_band = ratios.iter().filter(|r| (0.8..=1.3).contains(*r)).count();
            assert!(in_band >= 50, "p = {p}, eta = {eta}: {in_band}/100");
        }
    }

    proptest! {
        #[test]
        fn pair_preserves_order(a in 1e-6f64..1e6, b in 1e-6f64..1e6) {
            let (pa, ia) = penalty_pair(a).unwrap();
            let (pb, ib) = penalty_pair(b).unwrap();
            if a <= b {
                prop_assert!(pa <= pb && ia <= ib);
            } else {
                prop_assert!(pa >= pb && ia >= ib);
            }
        }
    }
}
