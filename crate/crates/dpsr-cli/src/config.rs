//! Configuration assembly: reference defaults, then a `key = value` file,
//! then command-line overrides.
//!
//! Recognized keys (one per line, `#` starts a comment): `users`, `items`,
//! `d_true`, `noise_std`, `density`, `epsilons`, `seeds`, `methods`,
//! `alpha`, `beta`, `k_neighbors`, `rank_d`, `lambda_mix`, `n_iter`,
//! `t_reproject`, `delta`, `test_fraction`, `output_path`, `latent_d`,
//! `epochs`, `learn_rate`, `init_std`, `adam_beta1`, `adam_beta2`,
//! `adam_eps`, `reg_weight`. List values are comma-separated.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use dpsr_core::bench::{ExperimentConfig, Method};
use dpsr_core::error::{Error, Result};

use crate::RunArgs;

fn parse_scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for key '{key}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|item| parse_scalar(key, item))
        .collect()
}

fn parse_methods(value: &str) -> Result<Vec<Method>> {
    value.split(',').map(|m| Method::parse(m.trim())).collect()
}

fn apply_file(cfg: &mut ExperimentConfig, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key = value", idx + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "users" => cfg.synth.m = parse_scalar(key, value)?,
            "items" => cfg.synth.n = parse_scalar(key, value)?,
            "d_true" => cfg.synth.d_true = parse_scalar(key, value)?,
            "noise_std" => cfg.synth.noise_std = parse_scalar(key, value)?,
            "density" => cfg.synth.density = parse_scalar(key, value)?,
            "epsilons" => cfg.epsilons = parse_list(key, value)?,
            "seeds" => cfg.seeds = parse_list(key, value)?,
            "methods" => cfg.methods = parse_methods(value)?,
            "alpha" => cfg.dpsr.alpha = parse_scalar(key, value)?,
            "beta" => cfg.dpsr.beta = parse_scalar(key, value)?,
            "k_neighbors" => cfg.dpsr.k_neighbors = parse_scalar(key, value)?,
            "rank_d" => cfg.dpsr.rank_d = parse_scalar(key, value)?,
            "lambda_mix" => cfg.dpsr.lambda_mix = parse_scalar(key, value)?,
            "n_iter" => cfg.dpsr.n_iter = parse_scalar(key, value)?,
            "t_reproject" => cfg.dpsr.t_reproject = parse_scalar(key, value)?,
            "delta" => cfg.delta = parse_scalar(key, value)?,
            "test_fraction" => cfg.test_fraction = parse_scalar(key, value)?,
            "output_path" => cfg.output_path = PathBuf::from(value),
            "latent_d" => cfg.mf.latent_d = parse_scalar(key, value)?,
            "epochs" => cfg.mf.epochs = parse_scalar(key, value)?,
            "learn_rate" => cfg.mf.learn_rate = parse_scalar(key, value)?,
            "init_std" => cfg.mf.init_std = parse_scalar(key, value)?,
            "adam_beta1" => cfg.mf.adam_beta1 = parse_scalar(key, value)?,
            "adam_beta2" => cfg.mf.adam_beta2 = parse_scalar(key, value)?,
            "adam_eps" => cfg.mf.adam_eps = parse_scalar(key, value)?,
            "reg_weight" => cfg.mf.reg_weight = parse_scalar(key, value)?,
            other => {
                return Err(Error::Config(format!(
                    "line {}: unknown key '{other}'",
                    idx + 1
                )))
            }
        }
    }
    Ok(())
}

/// Defaults, overlaid with the config file, overlaid with flags.
pub fn build_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::reference_grid(PathBuf::from("results.csv"));
    if let Some(path) = &args.config {
        apply_file(&mut cfg, path)?;
    }
    if let Some(v) = &args.epsilons {
        cfg.epsilons = parse_list("epsilons", v)?;
    }
    if let Some(v) = &args.seeds {
        cfg.seeds = parse_list("seeds", v)?;
    }
    if let Some(v) = &args.methods {
        cfg.methods = parse_methods(v)?;
    }
    if let Some(v) = &args.out {
        cfg.output_path = v.clone();
    }
    if let Some(v) = args.alpha {
        cfg.dpsr.alpha = v;
    }
    if let Some(v) = args.beta {
        cfg.dpsr.beta = v;
    }
    if let Some(v) = args.k {
        cfg.dpsr.k_neighbors = v;
    }
    if let Some(v) = args.rank {
        cfg.dpsr.rank_d = v;
    }
    if let Some(v) = args.lambda {
        cfg.dpsr.lambda_mix = v;
    }
    if let Some(v) = args.iters {
        cfg.dpsr.n_iter = v;
    }
    if let Some(v) = args.reproject {
        cfg.dpsr.t_reproject = v;
    }
    if let Some(v) = args.delta {
        cfg.delta = v;
    }
    if let Some(v) = args.density {
        cfg.synth.density = v;
    }
    if let Some(v) = args.users {
        cfg.synth.m = v;
    }
    if let Some(v) = args.items {
        cfg.synth.n = v;
    }
    Ok(cfg)
}
