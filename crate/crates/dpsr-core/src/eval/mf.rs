//! Matrix factorization trained by full-batch Adam.
//!
//! The objective is mean squared error over the observed training entries
//! plus an L2 penalty scaled by the entry count:
//!
//! ```text
//! L(P, Q) = mean_{(i,j) observed} (r_ij - p_i . q_j)^2
//!           + reg * (|P|_F^2 + |Q|_F^2) / |observed|
//! ```
//!
//! One epoch is one full-batch gradient step; training runs for exactly
//! `epochs` steps with bias-corrected moment estimates. Factors are
//! initialized i.i.d. normal with `init_std`, drawn in a fixed order, so
//! training is deterministic given the generator.

use nalgebra::DMatrix;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::ratings::RatingMatrix;
use crate::sampling;

/// Hyperparameters for the factorization trainer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfConfig {
    pub latent_d: usize,
    pub epochs: usize,
    pub learn_rate: f64,
    pub init_std: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub reg_weight: f64,
}

impl Default for MfConfig {
    fn default() -> Self {
        Self {
            latent_d: 8,
            epochs: 50,
            learn_rate: 0.01,
            init_std: 0.1,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            reg_weight: 0.02,
        }
    }
}

impl MfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latent_d == 0 {
            return Err(Error::Config("latent_d must be >= 1".to_string()));
        }
        if self.learn_rate <= 0.0 {
            return Err(Error::Config(format!(
                "learn_rate {} must be > 0",
                self.learn_rate
            )));
        }
        if self.init_std <= 0.0 {
            return Err(Error::Config(format!(
                "init_std {} must be > 0",
                self.init_std
            )));
        }
        if self.reg_weight < 0.0 {
            return Err(Error::Config(format!(
                "reg_weight {} must be >= 0",
                self.reg_weight
            )));
        }
        Ok(())
    }
}

/// Trained user and item factors, plus the rating range used for clipping
/// predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct MfModel {
    pub p_user: DMatrix<f64>,
    pub q_item: DMatrix<f64>,
    r_min: f64,
    r_max: f64,
}

/// Training loss at the given factors.
pub fn mf_loss(r: &RatingMatrix, p: &DMatrix<f64>, q: &DMatrix<f64>, reg: f64) -> f64 {
    let count = r.mask().len() as f64;
    let mut se = 0.0;
    for (i, j, v) in r.observed() {
        let pred: f64 = p.row(i).dot(&q.row(j));
        se += (v - pred) * (v - pred);
    }
    let penalty = reg * (p.norm_squared() + q.norm_squared());
    (se + penalty) / count
}

/// Analytic gradient of [`mf_loss`] with respect to `(P, Q)`.
pub fn mf_gradient(
    r: &RatingMatrix,
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
    reg: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let count = r.mask().len() as f64;
    let d = p.ncols();
    let mut gp = DMatrix::zeros(p.nrows(), d);
    let mut gq = DMatrix::zeros(q.nrows(), d);
    for (i, j, v) in r.observed() {
        let err = p.row(i).dot(&q.row(j)) - v;
        for l in 0..d {
            gp[(i, l)] += 2.0 * err * q[(j, l)] / count;
            gq[(j, l)] += 2.0 * err * p[(i, l)] / count;
        }
    }
    gp += p * (2.0 * reg / count);
    gq += q * (2.0 * reg / count);
    (gp, gq)
}

/// Train the factorization on the observed entries of `r_train`.
pub fn train_mf(
    r_train: &RatingMatrix,
    cfg: &MfConfig,
    rng: &mut impl RngCore,
) -> Result<MfModel> {
    cfg.validate()?;
    if r_train.mask().is_empty() {
        return Err(Error::Training("empty training mask".to_string()));
    }
    let (m, n, d) = (r_train.nrows(), r_train.ncols(), cfg.latent_d);

    let mut p = DMatrix::zeros(m, d);
    for i in 0..m {
        for l in 0..d {
            p[(i, l)] = cfg.init_std * sampling::standard_normal(rng);
        }
    }
    let mut q = DMatrix::zeros(n, d);
    for j in 0..n {
        for l in 0..d {
            q[(j, l)] = cfg.init_std * sampling::standard_normal(rng);
        }
    }

    let mut adam_p = AdamState::new(m, d);
    let mut adam_q = AdamState::new(n, d);
    for step in 1..=cfg.epochs {
        let (gp, gq) = mf_gradient(r_train, &p, &q, cfg.reg_weight);
        adam_p.apply(&mut p, &gp, cfg, step);
        adam_q.apply(&mut q, &gq, cfg, step);
    }

    Ok(MfModel {
        p_user: p,
        q_item: q,
        r_min: r_train.r_min(),
        r_max: r_train.r_max(),
    })
}

struct AdamState {
    m1: DMatrix<f64>,
    m2: DMatrix<f64>,
}

impl AdamState {
    fn new(rows: usize, cols: usize) -> Self {
        Self {
            m1: DMatrix::zeros(rows, cols),
            m2: DMatrix::zeros(rows, cols),
        }
    }

    fn apply(&mut self, theta: &mut DMatrix<f64>, grad: &DMatrix<f64>, cfg: &MfConfig, step: usize) {
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let corr1 = 1.0 - b1.powi(step as i32);
        let corr2 = 1.0 - b2.powi(step as i32);
        for idx in 0..theta.len() {
            let g = grad[idx];
            self.m1[idx] = b1 * self.m1[idx] + (1.0 - b1) * g;
            self.m2[idx] = b2 * self.m2[idx] + (1.0 - b2) * g * g;
            let m_hat = self.m1[idx] / corr1;
            let v_hat = self.m2[idx] / corr2;
            theta[idx] -= cfg.learn_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
        }
    }
}

/// Predicted rating for `(i, j)`: the factor inner product clipped to the
/// model's rating range.
pub fn predict(model: &MfModel, i: usize, j: usize) -> Result<f64> {
    let (m, n) = (model.p_user.nrows(), model.q_item.nrows());
    if i >= m || j >= n {
        return Err(Error::IndexOutOfRange {
            row: i,
            col: j,
            m,
            n,
        });
    }
    let raw: f64 = model.p_user.row(i).dot(&model.q_item.row(j));
    Ok(raw.clamp(model.r_min, model.r_max))
}
