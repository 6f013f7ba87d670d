//! Privacy mechanisms: calibrated noise injection plus Laplace and Gaussian
//! baselines.
//!
//! All mechanisms operate entry-wise on the observed cells of a rating
//! matrix, in the mask's canonical row-major order, and clip the noisy value
//! back into the valid range. Rating sensitivity is `r_max - r_min` (4 on a
//! 1-5 scale).
//!
//! The calibrated mechanism weights each rating by its distance from the
//! global mean, `w = |r - mean| / ((r_max - r_min) / 2)` clipped to [0, 1],
//! and allocates a per-entry budget
//!
//! ```text
//! eps_ij = eps / (1 + alpha) * (1 + alpha * w_ij)
//! ```
//!
//! so extreme ratings receive less noise while the largest per-entry budget
//! is exactly `eps`. Using `eps / (1 + alpha)` as the base keeps the overall
//! release at `eps` rather than the looser `eps * (1 + alpha)` a naive
//! allocation would give. The global mean is computed on the input ratings
//! and is not separately budgeted.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::ratings::RatingMatrix;
use crate::sampling;

/// Privacy budget: `epsilon`, with `delta` present only for the Gaussian
/// mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: Option<f64>,
}

impl PrivacyBudget {
    pub fn pure(epsilon: f64) -> Result<Self> {
        if epsilon <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon {epsilon} must be > 0"
            )));
        }
        Ok(Self {
            epsilon,
            delta: None,
        })
    }

    pub fn approximate(epsilon: f64, delta: f64) -> Result<Self> {
        let mut budget = Self::pure(epsilon)?;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidDelta(delta));
        }
        budget.delta = Some(delta);
        Ok(budget)
    }
}

/// Per-rating sensitivity: the width of the valid rating range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivity(f64);

impl Sensitivity {
    pub fn from_range(r_min: f64, r_max: f64) -> Result<Self> {
        if r_min >= r_max {
            return Err(Error::InvalidBounds {
                lo: r_min,
                hi: r_max,
            });
        }
        Ok(Self(r_max - r_min))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Noise reduction factor for the calibrated mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationParams {
    pub alpha: f64,
}

impl CalibrationParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha {alpha} outside [0, 1]"
            )));
        }
        Ok(Self { alpha })
    }
}

/// Normalized distance of a rating from the mean:
/// `clip(|r - r_bar| / ((r_max - r_min) / 2), 0, 1)`.
pub fn information_weight(r: f64, r_bar: f64, r_min: f64, r_max: f64) -> Result<f64> {
    if r_min >= r_max {
        return Err(Error::InvalidBounds {
            lo: r_min,
            hi: r_max,
        });
    }
    let half_range = (r_max - r_min) / 2.0;
    Ok(((r - r_bar).abs() / half_range).clamp(0.0, 1.0))
}

/// Per-entry budget `eps / (1 + alpha) * (1 + alpha * w)`; its maximum over
/// `w` in [0, 1] is the nominal `eps`.
pub fn adaptive_budget(eps: f64, alpha: f64, w: f64) -> Result<f64> {
    if eps <= 0.0 {
        return Err(Error::InvalidParameter(format!("eps {eps} must be > 0")));
    }
    CalibrationParams::new(alpha)?;
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidParameter(format!("weight {w} outside [0, 1]")));
    }
    Ok(budget_unchecked(eps, alpha, w))
}

#[inline]
fn budget_unchecked(eps: f64, alpha: f64, w: f64) -> f64 {
    eps / (1.0 + alpha) * (1.0 + alpha * w)
}

/// Zero-centered Laplace draw with the given scale (inverse-CDF sampling).
pub fn laplace_sample(scale: f64, rng: &mut impl RngCore) -> Result<f64> {
    if scale <= 0.0 {
        return Err(Error::InvalidScale(scale));
    }
    Ok(sampling::laplace_unchecked(scale, rng))
}

/// Laplace scale used by the calibrated mechanism for one rating:
/// sensitivity divided by that rating's adaptive budget.
pub fn calibrated_noise_scale(
    r: f64,
    r_bar: f64,
    eps: f64,
    alpha: f64,
    r_min: f64,
    r_max: f64,
) -> Result<f64> {
    let w = information_weight(r, r_bar, r_min, r_max)?;
    let eps_ij = adaptive_budget(eps, alpha, w)?;
    Ok(Sensitivity::from_range(r_min, r_max)?.value() / eps_ij)
}

/// Calibrated noise injection: per observed entry, add Laplace noise with
/// the information-weighted scale and clip back to range. Unobserved cells
/// and the mask itself are untouched.
pub fn calibrated_noise_stage1(
    r: &RatingMatrix,
    eps: f64,
    params: CalibrationParams,
    rng: &mut impl RngCore,
) -> Result<RatingMatrix> {
    if r.mask().is_empty() {
        return Err(Error::EmptyData("cannot privatize an empty mask"));
    }
    let budget = PrivacyBudget::pure(eps)?;
    let r_bar = crate::ratings::global_mean(r)?;
    let sensitivity = Sensitivity::from_range(r.r_min(), r.r_max())?.value();
    let half_range = sensitivity / 2.0;
    let (lo, hi) = (r.r_min(), r.r_max());
    r.map_observed(|_, _, v| {
        let w = ((v - r_bar).abs() / half_range).clamp(0.0, 1.0);
        let scale = sensitivity / budget_unchecked(budget.epsilon, params.alpha, w);
        (v + sampling::laplace_unchecked(scale, rng)).clamp(lo, hi)
    })
}

/// Plain Laplace mechanism: i.i.d. noise of scale `sensitivity / eps` on
/// every observed entry, clipped to range.
pub fn laplace_mechanism(
    r: &RatingMatrix,
    eps: f64,
    rng: &mut impl RngCore,
) -> Result<RatingMatrix> {
    if r.mask().is_empty() {
        return Err(Error::EmptyData("cannot privatize an empty mask"));
    }
    let budget = PrivacyBudget::pure(eps)?;
    let scale = Sensitivity::from_range(r.r_min(), r.r_max())?.value() / budget.epsilon;
    let (lo, hi) = (r.r_min(), r.r_max());
    r.map_observed(|_, _, v| (v + sampling::laplace_unchecked(scale, rng)).clamp(lo, hi))
}

/// Minimal Gaussian noise level for an `(eps, delta)` guarantee:
/// `delta_r * sqrt(2 ln(1.25 / delta)) / eps`.
pub fn gaussian_sigma(delta_r: f64, eps: f64, delta: f64) -> Result<f64> {
    if eps <= 0.0 {
        return Err(Error::InvalidParameter(format!("eps {eps} must be > 0")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidDelta(delta));
    }
    Ok(delta_r * (2.0 * (1.25 / delta).ln()).sqrt() / eps)
}

/// Gaussian mechanism: i.i.d. normal noise at the minimal compliant sigma on
/// every observed entry, clipped to range.
pub fn gaussian_mechanism(
    r: &RatingMatrix,
    eps: f64,
    delta: f64,
    rng: &mut impl RngCore,
) -> Result<RatingMatrix> {
    if r.mask().is_empty() {
        return Err(Error::EmptyData("cannot privatize an empty mask"));
    }
    let budget = PrivacyBudget::approximate(eps, delta)?;
    let sensitivity = Sensitivity::from_range(r.r_min(), r.r_max())?.value();
    let sigma = gaussian_sigma(sensitivity, budget.epsilon, delta)?;
    let (lo, hi) = (r.r_min(), r.r_max());
    r.map_observed(|_, _, v| (v + sigma * sampling::standard_normal(rng)).clamp(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratings::ObservationMask;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn full_matrix(rows: &[&[f64]]) -> RatingMatrix {
        let m = rows.len();
        let n = rows[0].len();
        let values = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
        let entries = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        RatingMatrix::new(values, ObservationMask::new(m, n, entries).unwrap(), 1.0, 5.0).unwrap()
    }

    #[test]
    fn information_weight_examples() {
        assert_eq!(information_weight(3.0, 3.0, 1.0, 5.0).unwrap(), 0.0);
        assert_eq!(information_weight(5.0, 3.0, 1.0, 5.0).unwrap(), 1.0);
        assert_eq!(information_weight(4.0, 3.0, 1.0, 5.0).unwrap(), 0.5);
        // Distance can exceed the half-range; the weight saturates at 1.
        assert_eq!(information_weight(5.0, 1.0, 1.0, 5.0).unwrap(), 1.0);
        assert!(information_weight(3.0, 3.0, 5.0, 1.0).is_err());
    }

    #[test]
    fn adaptive_budget_examples() {
        assert_relative_eq!(adaptive_budget(1.0, 0.3, 1.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(adaptive_budget(1.0, 0.0, 0.7).unwrap(), 1.0);
        assert_relative_eq!(
            adaptive_budget(1.0, 0.3, 0.0).unwrap(),
            1.0 / 1.3,
            epsilon = 1e-15
        );
        assert!(adaptive_budget(0.0, 0.3, 0.5).is_err());
        assert!(adaptive_budget(1.0, 1.5, 0.5).is_err());
        assert!(adaptive_budget(1.0, 0.3, 1.5).is_err());
    }

    #[test]
    fn adaptive_budget_peaks_at_eps() {
        for &eps in &[0.1, 0.5, 1.0, 5.0] {
            for &alpha in &[0.0, 0.3, 1.0] {
                let max = (0..=100)
                    .map(|k| adaptive_budget(eps, alpha, k as f64 / 100.0).unwrap())
                    .fold(f64::NEG_INFINITY, f64::max);
                assert_relative_eq!(max, eps, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn laplace_sample_rejects_bad_scale() {
        let mut rng = sampling::rng_from_seed(0);
        assert!(matches!(
            laplace_sample(0.0, &mut rng),
            Err(Error::InvalidScale(_))
        ));
        assert!(laplace_sample(-1.0, &mut rng).is_err());
    }

    #[test]
    fn laplace_sample_monte_carlo_moments() {
        // E|X| = b and Var(X) = 2 b^2 for Laplace(b).
        let b = 2.5;
        let mut rng = sampling::rng_from_seed(17);
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| laplace_sample(b, &mut rng).unwrap())
            .collect();
        let mean_abs = samples.iter().map(|x| x.abs()).sum::<f64>() / n as f64;
        assert!(
            (mean_abs - b).abs() / b < 0.03,
            "mean |x| = {mean_abs}, expected {b}"
        );
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(
            (var - 2.0 * b * b).abs() / (2.0 * b * b) < 0.05,
            "var = {var}, expected {}",
            2.0 * b * b
        );
    }

    #[test]
    fn laplace_sample_replays_identically() {
        let mut a = sampling::rng_from_seed(5);
        let mut b = sampling::rng_from_seed(5);
        for _ in 0..50 {
            assert_eq!(
                laplace_sample(1.0, &mut a).unwrap(),
                laplace_sample(1.0, &mut b).unwrap()
            );
        }
    }

    #[test]
    fn stage1_vanishing_noise_at_huge_eps() {
        let r = full_matrix(&[&[1.0, 2.5, 4.0], &[3.0, 5.0, 2.0]]);
        let mut rng = sampling::rng_from_seed(1);
        let out =
            calibrated_noise_stage1(&r, 1e6, CalibrationParams::new(0.3).unwrap(), &mut rng)
                .unwrap();
        for (i, j, v) in r.observed() {
            assert!((out.get(i, j) - v).abs() < 1e-3);
        }
        assert_eq!(out.mask(), r.mask());
    }

    #[test]
    fn stage1_with_zero_alpha_matches_plain_laplace() {
        let r = full_matrix(&[&[1.0, 2.5, 4.0], &[3.0, 5.0, 2.0], &[4.5, 1.5, 3.5]]);
        for &eps in &[0.5, 1.0, 5.0] {
            let mut rng_a = sampling::rng_from_seed(123);
            let mut rng_b = sampling::rng_from_seed(123);
            let a = calibrated_noise_stage1(&r, eps, CalibrationParams::new(0.0).unwrap(), &mut rng_a)
                .unwrap();
            let b = laplace_mechanism(&r, eps, &mut rng_b).unwrap();
            assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn stage1_scale_for_extreme_rating() {
        // Ratings {1, 3, 5}: mean 3, so the rating 5 has weight 1 and the
        // full budget eps = 1, giving scale 4 / 1 = 4.
        let scale = calibrated_noise_scale(5.0, 3.0, 1.0, 0.3, 1.0, 5.0).unwrap();
        assert_relative_eq!(scale, 4.0, epsilon = 1e-12);

        // The mechanism draws with exactly that scale: replaying the rng on
        // a single-entry matrix reproduces the draw by hand.
        let values = DMatrix::from_element(1, 1, 5.0);
        let mask = ObservationMask::new(1, 1, vec![(0, 0)]).unwrap();
        let single = RatingMatrix::new(values, mask, 1.0, 5.0).unwrap();
        // Single observed entry: its own mean, weight 0, scale 4 (1 + alpha) / eps.
        let mut rng = sampling::rng_from_seed(9);
        let out = calibrated_noise_stage1(&single, 1.0, CalibrationParams::new(0.3).unwrap(), &mut rng)
            .unwrap();
        let mut replay = sampling::rng_from_seed(9);
        let expected = (5.0 + laplace_sample(4.0 * 1.3, &mut replay).unwrap()).clamp(1.0, 5.0);
        assert_eq!(out.get(0, 0), expected);
    }

    #[test]
    fn laplace_mechanism_monte_carlo_std() {
        // Repeated application to one mid-range entry at weak privacy, where
        // clipping never binds: empirical std approaches sqrt(2) * scale.
        let values = DMatrix::from_element(1, 1, 3.0);
        let mask = ObservationMask::new(1, 1, vec![(0, 0)]).unwrap();
        let r = RatingMatrix::new(values, mask, 1.0, 5.0).unwrap();
        let eps = 100.0;
        let scale = 4.0 / eps;
        let mut rng = sampling::rng_from_seed(31);
        let n = 100_000;
        let noise: Vec<f64> = (0..n)
            .map(|_| laplace_mechanism(&r, eps, &mut rng).unwrap().get(0, 0) - 3.0)
            .collect();
        let mean = noise.iter().sum::<f64>() / n as f64;
        let std = (noise.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64).sqrt();
        let expected = std::f64::consts::SQRT_2 * scale;
        assert!(
            (std - expected).abs() / expected < 0.03,
            "std {std}, expected {expected}"
        );
    }

    #[test]
    fn gaussian_sigma_examples() {
        assert_relative_eq!(
            gaussian_sigma(4.0, 1.0, 1e-5).unwrap(),
            19.379221050421556,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            gaussian_sigma(4.0, 10.0, 1e-5).unwrap(),
            1.9379221050421556,
            epsilon = 1e-9
        );
        assert_eq!(gaussian_sigma(0.0, 1.0, 1e-5).unwrap(), 0.0);
        assert!(matches!(
            gaussian_sigma(4.0, 1.0, 0.0),
            Err(Error::InvalidDelta(_))
        ));
        assert!(gaussian_sigma(4.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_mechanism_vanishing_noise_and_std() {
        let r = full_matrix(&[&[1.0, 2.5, 4.0], &[3.0, 5.0, 2.0]]);
        let mut rng = sampling::rng_from_seed(2);
        let out = gaussian_mechanism(&r, 1e6, 1e-5, &mut rng).unwrap();
        for (i, j, v) in r.observed() {
            assert!((out.get(i, j) - v).abs() < 1e-3);
        }

        // Monte-Carlo std at weak privacy where clipping never binds.
        let values = DMatrix::from_element(1, 1, 3.0);
        let mask = ObservationMask::new(1, 1, vec![(0, 0)]).unwrap();
        let single = RatingMatrix::new(values, mask, 1.0, 5.0).unwrap();
        let eps = 100.0;
        let sigma = gaussian_sigma(4.0, eps, 1e-5).unwrap();
        let mut rng = sampling::rng_from_seed(37);
        let n = 100_000;
        let noise: Vec<f64> = (0..n)
            .map(|_| {
                gaussian_mechanism(&single, eps, 1e-5, &mut rng)
                    .unwrap()
                    .get(0, 0)
                    - 3.0
            })
            .collect();
        let mean = noise.iter().sum::<f64>() / n as f64;
        let std = (noise.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64).sqrt();
        assert!(
            (std - sigma).abs() / sigma < 0.03,
            "std {std}, expected {sigma}"
        );
    }

    #[test]
    fn mechanisms_preserve_mask_and_range() {
        let cfg = crate::ratings::SynthConfig {
            m: 25,
            n: 20,
            d_true: 3,
            noise_std: 0.2,
            density: 0.35,
            seed: 41,
        };
        let r = crate::ratings::generate_synthetic(&cfg).unwrap();
        let mut rng = sampling::rng_from_seed(6);
        for out in [
            calibrated_noise_stage1(&r, 0.5, CalibrationParams::new(0.3).unwrap(), &mut rng)
                .unwrap(),
            laplace_mechanism(&r, 0.5, &mut rng).unwrap(),
            gaussian_mechanism(&r, 0.5, 1e-5, &mut rng).unwrap(),
        ] {
            assert_eq!(out.mask(), r.mask());
            for (_, _, v) in out.observed() {
                assert!((1.0..=5.0).contains(&v));
            }
        }
    }

    #[test]
    fn noise_magnitude_decreases_with_eps_on_shared_stream() {
        // With the same uniform stream, each per-entry draw shrinks in
        // magnitude (and keeps its sign) as eps grows.
        let r = full_matrix(&[&[1.0, 2.5, 4.0], &[3.0, 5.0, 2.0]]);
        let deltas = |eps: f64| -> Vec<f64> {
            let mut rng = sampling::rng_from_seed(77);
            let out = laplace_mechanism(&r, eps, &mut rng).unwrap();
            r.observed()
                .map(|(i, j, v)| out.get(i, j) - v)
                .collect()
        };
        let mut eps_grid = [0.1, 0.5, 1.0, 5.0, 10.0];
        eps_grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for pair in eps_grid.windows(2) {
            let coarse = deltas(pair[0]);
            let fine = deltas(pair[1]);
            for (a, b) in coarse.iter().zip(&fine) {
                assert!(b.abs() <= a.abs() + 1e-15);
            }
        }
    }

    #[test]
    fn mechanisms_reject_empty_mask() {
        let values = DMatrix::from_element(2, 2, 3.0);
        let mask = ObservationMask::new(2, 2, vec![]).unwrap();
        let r = RatingMatrix::new(values, mask, 1.0, 5.0).unwrap();
        let mut rng = sampling::rng_from_seed(0);
        assert!(matches!(
            laplace_mechanism(&r, 1.0, &mut rng),
            Err(Error::EmptyData(_))
        ));
        assert!(calibrated_noise_stage1(&r, 1.0, CalibrationParams::new(0.3).unwrap(), &mut rng)
            .is_err());
        assert!(gaussian_mechanism(&r, 1.0, 1e-5, &mut rng).is_err());
    }
}
