//! Rating matrices, observation masks, synthetic data, and train/test splits.
//!
//! A [`RatingMatrix`] is a dense `m x n` matrix of real ratings together with
//! an [`ObservationMask`] marking which cells are actually observed, plus the
//! valid rating range (1-5 for the synthetic generator). The mask stores its
//! entries sorted row-major so every loop over observed cells runs in one
//! canonical order, which is what makes seeded noise injection reproducible.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::sampling;

/// Clamp `x` into `[lo, hi]`. Fails if `lo > hi`.
pub fn clip(x: f64, lo: f64, hi: f64) -> Result<f64> {
    if lo > hi {
        return Err(Error::InvalidBounds { lo, hi });
    }
    Ok(x.clamp(lo, hi))
}

/// Set of observed (user, item) index pairs within an `m x n` grid.
///
/// Entries are kept sorted row-major and duplicate-free; a dense flag grid
/// backs O(1) membership tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    m: usize,
    n: usize,
    entries: Vec<(usize, usize)>,
    flags: Vec<bool>,
}

impl ObservationMask {
    pub fn new(m: usize, n: usize, mut entries: Vec<(usize, usize)>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidMask(format!("degenerate dimensions {m}x{n}")));
        }
        entries.sort_unstable();
        for w in entries.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidMask(format!("duplicate entry {:?}", w[0])));
            }
        }
        let mut flags = vec![false; m * n];
        for &(i, j) in &entries {
            if i >= m || j >= n {
                return Err(Error::InvalidMask(format!(
                    "entry ({i}, {j}) outside {m}x{n}"
                )));
            }
            flags[i * n + j] = true;
        }
        Ok(Self {
            m,
            n,
            entries,
            flags,
        })
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.m && j < self.n && self.flags[i * self.n + j]
    }

    /// Observed pairs in row-major order.
    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.iter().copied()
    }
}

/// Dense rating matrix with an observation mask and a valid rating range.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    values: DMatrix<f64>,
    mask: ObservationMask,
    r_min: f64,
    r_max: f64,
}

impl RatingMatrix {
    /// Build a rating matrix, checking that the mask fits the value grid and
    /// every observed entry lies in `[r_min, r_max]`.
    pub fn new(values: DMatrix<f64>, mask: ObservationMask, r_min: f64, r_max: f64) -> Result<Self> {
        if r_min >= r_max {
            return Err(Error::InvalidBounds {
                lo: r_min,
                hi: r_max,
            });
        }
        if values.nrows() != mask.nrows() || values.ncols() != mask.ncols() {
            return Err(Error::InvalidMask(format!(
                "mask {}x{} does not match values {}x{}",
                mask.nrows(),
                mask.ncols(),
                values.nrows(),
                values.ncols()
            )));
        }
        for (i, j) in mask.iter() {
            let v = values[(i, j)];
            if !(r_min..=r_max).contains(&v) {
                return Err(Error::RatingOutOfRange {
                    row: i,
                    col: j,
                    value: v,
                    lo: r_min,
                    hi: r_max,
                });
            }
        }
        Ok(Self {
            values,
            mask,
            r_min,
            r_max,
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn mask(&self) -> &ObservationMask {
        &self.mask
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Observed `(user, item, rating)` triples in row-major order.
    pub fn observed(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.mask.iter().map(move |(i, j)| (i, j, self.values[(i, j)]))
    }

    /// Same values under a different mask (e.g. a train or test restriction).
    pub fn with_mask(&self, mask: ObservationMask) -> Result<Self> {
        Self::new(self.values.clone(), mask, self.r_min, self.r_max)
    }

    /// Rebuild with observed cells transformed by `f`; unobserved cells are
    /// carried over untouched. The result is re-validated against the range.
    pub fn map_observed(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<Self> {
        let mut values = self.values.clone();
        for (i, j) in self.mask.iter() {
            values[(i, j)] = f(i, j, values[(i, j)]);
        }
        Self::new(values, self.mask.clone(), self.r_min, self.r_max)
    }
}

/// Mean of the observed entries.
pub fn global_mean(r: &RatingMatrix) -> Result<f64> {
    if r.mask().is_empty() {
        return Err(Error::EmptyData("global mean of an empty mask"));
    }
    let sum: f64 = r.observed().map(|(_, _, v)| v).sum();
    Ok(sum / r.mask().len() as f64)
}

/// Configuration for the synthetic low-rank rating generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub m: usize,
    pub n: usize,
    pub d_true: usize,
    pub noise_std: f64,
    pub density: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.d_true == 0 {
            return Err(Error::Config(
                "m, n, d_true must all be positive".to_string(),
            ));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::Config(format!(
                "density {} outside (0, 1]",
                self.density
            )));
        }
        if self.noise_std < 0.0 {
            return Err(Error::Config(format!(
                "noise_std {} must be >= 0",
                self.noise_std
            )));
        }
        Ok(())
    }
}

/// Low-rank factor product plus entry noise, before rescaling.
///
/// Sampling order is fixed (U row-major, then V row-major, then noise
/// row-major) so outputs are bit-identical for equal seeds.
fn raw_low_rank(cfg: &SynthConfig, rng: &mut impl rand::RngCore) -> DMatrix<f64> {
    let mut u = DMatrix::zeros(cfg.m, cfg.d_true);
    for i in 0..cfg.m {
        for l in 0..cfg.d_true {
            u[(i, l)] = sampling::standard_normal(rng);
        }
    }
    let mut v = DMatrix::zeros(cfg.n, cfg.d_true);
    for j in 0..cfg.n {
        for l in 0..cfg.d_true {
            v[(j, l)] = sampling::standard_normal(rng);
        }
    }
    let mut raw = u * v.transpose();
    if cfg.noise_std > 0.0 {
        for i in 0..cfg.m {
            for j in 0..cfg.n {
                raw[(i, j)] += cfg.noise_std * sampling::standard_normal(rng);
            }
        }
    }
    raw
}

/// Generate a synthetic rating matrix: a rank-`d_true` factor product plus
/// Gaussian entry noise, affinely rescaled so the extremes land exactly on
/// 1 and 5, with cells observed independently at the configured density
/// (the mask is redrawn whole if it comes up empty).
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<RatingMatrix> {
    cfg.validate()?;
    let mut rng = sampling::rng_from_seed(cfg.seed);
    let raw = raw_low_rank(cfg, &mut rng);

    let lo = raw.min();
    let hi = raw.max();
    let values = if hi > lo {
        raw.map(|x| 1.0 + 4.0 * (x - lo) / (hi - lo))
    } else {
        DMatrix::from_element(cfg.m, cfg.n, 3.0)
    };

    let entries = loop {
        let mut entries = Vec::new();
        for i in 0..cfg.m {
            for j in 0..cfg.n {
                if sampling::uniform_open01(&mut rng) < cfg.density {
                    entries.push((i, j));
                }
            }
        }
        if !entries.is_empty() {
            break entries;
        }
    };

    RatingMatrix::new(values, ObservationMask::new(cfg.m, cfg.n, entries)?, 1.0, 5.0)
}

/// Disjoint train/test partition of an observation mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainTestSplit {
    pub train: ObservationMask,
    pub test: ObservationMask,
}

/// Uniform random partition without replacement; `|test|` is
/// `round(test_fraction * |mask|)` and both sides must end up non-empty.
pub fn split_train_test(
    mask: &ObservationMask,
    test_fraction: f64,
    seed: u64,
) -> Result<TrainTestSplit> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Split(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    if mask.is_empty() {
        return Err(Error::EmptyData("cannot split an empty mask"));
    }
    let n_test = (test_fraction * mask.len() as f64).round() as usize;
    if n_test == 0 || n_test == mask.len() {
        return Err(Error::Split(format!(
            "fraction {test_fraction} of {} entries leaves an empty side",
            mask.len()
        )));
    }

    let mut rng = sampling::rng_from_seed(seed);
    let mut shuffled = mask.entries().to_vec();
    shuffled.shuffle(&mut rng);
    let test: Vec<_> = shuffled[..n_test].to_vec();
    let train: Vec<_> = shuffled[n_test..].to_vec();

    Ok(TrainTestSplit {
        train: ObservationMask::new(mask.nrows(), mask.ncols(), train)?,
        test: ObservationMask::new(mask.nrows(), mask.ncols(), test)?,
    })
}
