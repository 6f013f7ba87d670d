//! Deterministic per-cell seed derivation.
//!
//! Grid cells run in parallel, so each one needs its own generator derived
//! only from `(run seed, method name, epsilon, stage tag)`. The derivation
//! is pinned so independent implementations can reproduce it:
//!
//! 1. `state = splitmix64(run_seed)`
//! 2. for each token, `state = splitmix64(state ^ token)`, where a string
//!    token is its FNV-1a 64-bit hash and a float token is its IEEE-754 bit
//!    pattern (absent epsilon contributes the token 0)
//!
//! with `splitmix64(z)` the standard finalizer: add `0x9E3779B97F4A7C15`,
//! then xor-shift-multiply by `0xBF58476D1CE4E5B9` (shift 30) and
//! `0x94D049BB133111EB` (shift 27), final shift 31.

use super::Method;

fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xCBF2_9CE4_8422_2325u64;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

/// Token-mixing seed builder.
#[derive(Debug, Clone, Copy)]
pub struct SeedMixer {
    state: u64,
}

impl SeedMixer {
    pub fn new(run_seed: u64) -> Self {
        Self {
            state: splitmix64(run_seed),
        }
    }

    pub fn mix_u64(mut self, token: u64) -> Self {
        self.state = splitmix64(self.state ^ token);
        self
    }

    pub fn mix_str(self, token: &str) -> Self {
        self.mix_u64(fnv1a(token.as_bytes()))
    }

    pub fn finish(self) -> u64 {
        self.state
    }
}

/// Seed for a per-run stage that does not depend on method or epsilon
/// (synthetic generation, splitting, factorization init).
pub fn run_stage_seed(run_seed: u64, stage: &str) -> u64 {
    SeedMixer::new(run_seed).mix_str(stage).finish()
}

/// Seed for one grid cell's mechanism randomness.
pub fn cell_seed(run_seed: u64, method: Method, epsilon: Option<f64>, stage: &str) -> u64 {
    SeedMixer::new(run_seed)
        .mix_str(method.name())
        .mix_u64(epsilon.map_or(0, f64::to_bits))
        .mix_str(stage)
        .finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = cell_seed(0, Method::Dpsr, Some(0.5), "mech");
        assert_eq!(a, cell_seed(0, Method::Dpsr, Some(0.5), "mech"));
        assert_ne!(a, cell_seed(0, Method::Laplace, Some(0.5), "mech"));
        assert_ne!(a, cell_seed(0, Method::Dpsr, Some(1.0), "mech"));
        assert_ne!(a, cell_seed(1, Method::Dpsr, Some(0.5), "mech"));
        assert_ne!(a, cell_seed(0, Method::Dpsr, None, "mech"));
        assert_ne!(
            run_stage_seed(3, "synth"),
            run_stage_seed(3, "split")
        );
    }

    #[test]
    fn pinned_derivation_vector() {
        // Frozen so the documented recipe cannot drift silently.
        assert_eq!(splitmix64(0), 0xE220A8397B1DCDAF);
        assert_eq!(fnv1a(b"dpsr"), 0x037E_0B66_E719_AD84);
    }
}
