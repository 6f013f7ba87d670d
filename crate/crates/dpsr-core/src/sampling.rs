//! Seeded primitive samplers.
//!
//! Everything in this crate that consumes randomness does so through these
//! functions over an explicit `RngCore`, drawing 53-bit uniforms from the
//! high bits of `next_u64`. Laplace draws use the inverse CDF and normal
//! draws use Box-Muller, so the whole pipeline is reproducible from a
//! single uniform stream given a seed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Canonical seeded generator used across the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw on the open interval (0, 1).
pub fn uniform_open01(rng: &mut impl RngCore) -> f64 {
    loop {
        // 53 high bits -> [0, 1); reject exact zeros to keep logs finite.
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        if u > 0.0 {
            return u;
        }
    }
}

/// Zero-centered Laplace draw with the given scale, via inverse CDF:
/// for `u` uniform on (-1/2, 1/2), `x = -scale * sgn(u) * ln(1 - 2|u|)`.
///
/// Scale validation lives in [`crate::mechanisms::laplace_sample`]; this is
/// the raw transform.
pub(crate) fn laplace_unchecked(scale: f64, rng: &mut impl RngCore) -> f64 {
    let u = uniform_open01(rng) - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Standard normal draw (Box-Muller, cosine branch).
pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    let u1 = uniform_open01(rng);
    let u2 = uniform_open01(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_stays_in_open_interval() {
        let mut rng = rng_from_seed(1);
        for _ in 0..10_000 {
            let u = uniform_open01(&mut rng);
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn normal_moments() {
        let mut rng = rng_from_seed(2);
        let n = 100_000;
        let samples: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn replay_is_bit_identical() {
        let a: Vec<f64> = {
            let mut rng = rng_from_seed(42);
            (0..100).map(|_| standard_normal(&mut rng)).collect()
        };
        let b: Vec<f64> = {
            let mut rng = rng_from_seed(42);
            (0..100).map(|_| standard_normal(&mut rng)).collect()
        };
        assert_eq!(a, b);
    }
}
