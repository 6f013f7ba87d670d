//! Experiment orchestration: the full (method x epsilon x seed) grid, the
//! composed denoising pipeline, and result records.
//!
//! Every cell derives its own generator from `(seed, method, epsilon)` via
//! [`seed`], so cells can run in parallel and results never depend on
//! execution order. The factorization evaluator is identical across methods
//! at a given seed, including its initialization. Metric and timing fields
//! are recorded at CSV precision (six decimals) so a written results file
//! parses back to exactly the in-memory records.

pub mod report;
pub mod seed;

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use crate::denoise::{stage2_denoise, DenoiseParams};
use crate::error::{Error, Result};
use crate::eval::{
    mae, ndcg_at_k, precision_at_k, predict, rmse, train_mf, MetricReport, MfConfig, MfModel,
};
use crate::lowrank::{stage3_complete, LowRankParams};
use crate::mechanisms::{
    calibrated_noise_stage1, gaussian_mechanism, laplace_mechanism, CalibrationParams,
};
use crate::ratings::{generate_synthetic, split_train_test, RatingMatrix, SynthConfig};
use crate::sampling;

/// Ranking cutoff and relevance threshold used by the benchmark.
pub const RANKING_K: usize = 10;
pub const RELEVANCE_THRESHOLD: f64 = 3.5;

/// A privatization method under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Dpsr,
    Laplace,
    Gaussian,
    NoPrivacy,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Dpsr,
        Method::Laplace,
        Method::Gaussian,
        Method::NoPrivacy,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Dpsr => "dpsr",
            Method::Laplace => "laplace",
            Method::Gaussian => "gaussian",
            Method::NoPrivacy => "no_privacy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dpsr" => Ok(Method::Dpsr),
            "laplace" => Ok(Method::Laplace),
            "gaussian" => Ok(Method::Gaussian),
            "no_privacy" => Ok(Method::NoPrivacy),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }

    /// Whether this method consumes an epsilon.
    pub fn is_private(&self) -> bool {
        !matches!(self, Method::NoPrivacy)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Pipeline hyperparameters: calibration strength, blend weight and
/// neighborhood size, and the low-rank completion schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpsrParams {
    pub alpha: f64,
    pub beta: f64,
    pub k_neighbors: usize,
    pub rank_d: usize,
    pub lambda_mix: f64,
    pub n_iter: usize,
    pub t_reproject: usize,
}

impl Default for DpsrParams {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            beta: 0.65,
            k_neighbors: 15,
            rank_d: 8,
            lambda_mix: 0.7,
            n_iter: 50,
            t_reproject: 10,
        }
    }
}

impl DpsrParams {
    pub fn validate(&self) -> Result<()> {
        CalibrationParams::new(self.alpha)?;
        DenoiseParams::new(self.beta, self.k_neighbors)?;
        LowRankParams::new(self.rank_d, self.lambda_mix, self.n_iter, self.t_reproject)?;
        Ok(())
    }
}

/// Full benchmark configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub synth: SynthConfig,
    pub epsilons: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub dpsr: DpsrParams,
    pub mf: MfConfig,
    pub delta: f64,
    pub test_fraction: f64,
    pub output_path: PathBuf,
}

impl ExperimentConfig {
    /// The reference grid: 300 x 200 at 10% density, five seeds, epsilons
    /// from 0.1 to 10, all four methods.
    pub fn reference_grid(output_path: PathBuf) -> Self {
        Self {
            synth: SynthConfig {
                m: 300,
                n: 200,
                d_true: 8,
                noise_std: 0.1,
                density: 0.1,
                seed: 0,
            },
            epsilons: vec![0.1, 0.5, 1.0, 5.0, 10.0],
            seeds: vec![0, 1, 2, 3, 4],
            methods: Method::ALL.to_vec(),
            dpsr: DpsrParams::default(),
            mf: MfConfig::default(),
            delta: 1e-5,
            test_fraction: 0.2,
            output_path,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.dpsr.validate()?;
        self.mf.validate()?;
        if self.epsilons.is_empty() {
            return Err(Error::Config("epsilons must be non-empty".to_string()));
        }
        if self.epsilons.iter().any(|e| *e <= 0.0) {
            return Err(Error::Config("epsilons must all be > 0".to_string()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be non-empty".to_string()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must be non-empty".to_string()));
        }
        let mut dedup = self.methods.clone();
        dedup.sort();
        dedup.dedup();
        if dedup.len() != self.methods.len() {
            return Err(Error::Config("duplicate method".to_string()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidDelta(self.delta));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction {} outside (0, 1)",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

/// One grid cell's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub method: Method,
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub metrics: MetricReport,
    pub wall_time_seconds: f64,
}

/// A cell that failed, with the error it produced.
#[derive(Debug, Clone)]
pub struct CellFailure {
    pub method: Method,
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub message: String,
}

/// Results plus any per-cell failures.
#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub results: Vec<ExperimentResult>,
    pub failures: Vec<CellFailure>,
}

/// The composed pipeline: calibrated noise injection, collaborative
/// denoising, low-rank completion. Only the first stage draws randomness.
pub fn run_dpsr_pipeline(
    r_train: &RatingMatrix,
    eps: f64,
    params: &DpsrParams,
    rng: &mut impl rand::RngCore,
) -> Result<RatingMatrix> {
    params.validate()?;
    let noisy = calibrated_noise_stage1(r_train, eps, CalibrationParams::new(params.alpha)?, rng)?;
    let blended = stage2_denoise(&noisy, &DenoiseParams::new(params.beta, params.k_neighbors)?)?;
    stage3_complete(
        &blended,
        &LowRankParams::new(
            params.rank_d,
            params.lambda_mix,
            params.n_iter,
            params.t_reproject,
        )?,
    )
}

/// Round to the six decimals the CSV carries, so records round-trip exactly.
pub(crate) fn round6(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float")
}

/// Test items per user as (predicted, true) pairs, rows in ascending user
/// order, items in ascending item order.
fn grouped_test_pairs(
    truth: &RatingMatrix,
    test_mask: &crate::ratings::ObservationMask,
    mut predictor: impl FnMut(usize, usize) -> Result<f64>,
) -> Result<Vec<Vec<(f64, f64)>>> {
    let mut per_user: Vec<Vec<(f64, f64)>> = vec![Vec::new(); truth.nrows()];
    for (i, j) in test_mask.iter() {
        per_user[i].push((predictor(i, j)?, truth.get(i, j)));
    }
    Ok(per_user)
}

fn metrics_from_pairs(per_user: &[Vec<(f64, f64)>]) -> Result<MetricReport> {
    let mut pred = Vec::new();
    let mut truth = Vec::new();
    for items in per_user {
        for (p, t) in items {
            pred.push(*p);
            truth.push(*t);
        }
    }
    Ok(MetricReport {
        rmse: rmse(&pred, &truth)?,
        mae: mae(&pred, &truth)?,
        precision_at_10: precision_at_k(per_user, RANKING_K, RELEVANCE_THRESHOLD)?,
        ndcg_at_10: ndcg_at_k(per_user, RANKING_K, RELEVANCE_THRESHOLD)?,
    })
}

/// Metrics for a trained factorization model on the test cells.
pub fn evaluate_model(
    model: &MfModel,
    truth: &RatingMatrix,
    test_mask: &crate::ratings::ObservationMask,
) -> Result<MetricReport> {
    let per_user = grouped_test_pairs(truth, test_mask, |i, j| predict(model, i, j))?;
    metrics_from_pairs(&per_user)
}

/// Metrics read straight from a dense completed matrix instead of a trained
/// model; secondary evaluation mode.
pub fn direct_matrix_metrics(
    completed: &RatingMatrix,
    truth: &RatingMatrix,
    test_mask: &crate::ratings::ObservationMask,
) -> Result<MetricReport> {
    let per_user = grouped_test_pairs(truth, test_mask, |i, j| {
        crate::ratings::clip(completed.get(i, j), truth.r_min(), truth.r_max())
    })?;
    metrics_from_pairs(&per_user)
}

struct SeedContext {
    seed: u64,
    truth: RatingMatrix,
    train: RatingMatrix,
    test_mask: crate::ratings::ObservationMask,
    mf_seed: u64,
}

fn build_seed_context(cfg: &ExperimentConfig, run_seed: u64) -> Result<SeedContext> {
    let synth = SynthConfig {
        seed: seed::run_stage_seed(run_seed, "synth"),
        ..cfg.synth
    };
    let truth = generate_synthetic(&synth)?;
    let split = split_train_test(
        truth.mask(),
        cfg.test_fraction,
        seed::run_stage_seed(run_seed, "split"),
    )?;
    let train = truth.with_mask(split.train)?;
    Ok(SeedContext {
        seed: run_seed,
        truth,
        train,
        test_mask: split.test,
        mf_seed: seed::run_stage_seed(run_seed, "mf"),
    })
}

fn run_cell(
    cfg: &ExperimentConfig,
    ctx: &SeedContext,
    method: Method,
    epsilon: Option<f64>,
) -> Result<ExperimentResult> {
    let started = Instant::now();
    let mut mech_rng =
        sampling::rng_from_seed(seed::cell_seed(ctx.seed, method, epsilon, "mech"));
    let denoised = match (method, epsilon) {
        (Method::NoPrivacy, _) => ctx.train.clone(),
        (Method::Dpsr, Some(eps)) => run_dpsr_pipeline(&ctx.train, eps, &cfg.dpsr, &mut mech_rng)?,
        (Method::Laplace, Some(eps)) => laplace_mechanism(&ctx.train, eps, &mut mech_rng)?,
        (Method::Gaussian, Some(eps)) => {
            gaussian_mechanism(&ctx.train, eps, cfg.delta, &mut mech_rng)?
        }
        (_, None) => {
            return Err(Error::Config(format!(
                "method {method} requires an epsilon"
            )))
        }
    };

    // Same evaluator and same initialization across methods at this seed.
    let mut mf_rng = sampling::rng_from_seed(ctx.mf_seed);
    let model = train_mf(&denoised, &cfg.mf, &mut mf_rng)?;
    let metrics = evaluate_model(&model, &ctx.truth, &ctx.test_mask)?;

    Ok(ExperimentResult {
        method,
        epsilon,
        seed: ctx.seed,
        metrics: MetricReport {
            rmse: round6(metrics.rmse),
            mae: round6(metrics.mae),
            precision_at_10: round6(metrics.precision_at_10),
            ndcg_at_10: round6(metrics.ndcg_at_10),
        },
        wall_time_seconds: round6(started.elapsed().as_secs_f64()),
    })
}

/// Run the full grid. Cells execute in parallel; the result list is sorted
/// by (method, epsilon, seed). The no-privacy method runs once per seed.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<GridOutcome> {
    cfg.validate()?;

    let contexts: Vec<SeedContext> = cfg
        .seeds
        .iter()
        .map(|&s| build_seed_context(cfg, s))
        .collect::<Result<_>>()?;

    let mut cells: Vec<(usize, Method, Option<f64>)> = Vec::new();
    for (ctx_idx, _) in contexts.iter().enumerate() {
        for &method in &cfg.methods {
            if method.is_private() {
                for &eps in &cfg.epsilons {
                    cells.push((ctx_idx, method, Some(eps)));
                }
            } else {
                cells.push((ctx_idx, method, None));
            }
        }
    }

    let outcomes: Vec<std::result::Result<ExperimentResult, CellFailure>> = cells
        .par_iter()
        .map(|&(ctx_idx, method, epsilon)| {
            let ctx = &contexts[ctx_idx];
            run_cell(cfg, ctx, method, epsilon).map_err(|e| CellFailure {
                method,
                epsilon,
                seed: ctx.seed,
                message: e.to_string(),
            })
        })
        .collect();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(f) => failures.push(f),
        }
    }
    results.sort_by(|a, b| {
        a.method
            .name()
            .cmp(b.method.name())
            .then(
                a.epsilon
                    .unwrap_or(f64::NEG_INFINITY)
                    .partial_cmp(&b.epsilon.unwrap_or(f64::NEG_INFINITY))
                    .unwrap(),
            )
            .then(a.seed.cmp(&b.seed))
    });
    Ok(GridOutcome { results, failures })
}
