//! Result persistence and summary tables.
//!
//! Results file schema (fixed, six-decimal floats, epsilon empty for the
//! no-privacy rows, rows sorted by method, epsilon, seed):
//!
//! ```text
//! method,epsilon,seed,rmse,mae,precision_at_10,ndcg_at_10,wall_time_s
//! ```
//!
//! Summary file: `epsilon,method,rmse_mean,rmse_std,mae_mean,mae_std,
//! p10_mean,p10_std,ndcg_mean,ndcg_std`, numeric epsilons ascending with
//! the no-privacy row last. Improvement file: `epsilon,
//! improvement_vs_laplace_pct,improvement_vs_gaussian_pct,t_stat,p_value`,
//! one row per epsilon, comparing row means and pairing the t-test by seed.
//! These two files carry exactly the per-epsilon mean/std series a plot of
//! the benchmark needs.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{ExperimentResult, Method};
use crate::error::{Error, Result};
use crate::eval::paired_t_test;

pub const RESULTS_HEADER: &str =
    "method,epsilon,seed,rmse,mae,precision_at_10,ndcg_at_10,wall_time_s";
pub const SUMMARY_HEADER: &str =
    "epsilon,method,rmse_mean,rmse_std,mae_mean,mae_std,p10_mean,p10_std,ndcg_mean,ndcg_std";
pub const IMPROVEMENT_HEADER: &str =
    "epsilon,improvement_vs_laplace_pct,improvement_vs_gaussian_pct,t_stat,p_value";

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt6).unwrap_or_default()
}

/// Serialize results to the fixed schema.
pub fn results_to_csv(results: &[ExperimentResult]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.method,
            fmt_opt(r.epsilon),
            r.seed,
            fmt6(r.metrics.rmse),
            fmt6(r.metrics.mae),
            fmt6(r.metrics.precision_at_10),
            fmt6(r.metrics.ndcg_at_10),
            fmt6(r.wall_time_seconds),
        );
    }
    out
}

pub fn write_results_csv(path: &Path, results: &[ExperimentResult]) -> Result<()> {
    std::fs::write(path, results_to_csv(results))?;
    Ok(())
}

fn parse_f64(field: &str, line_no: usize) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Parse(format!("line {line_no}: bad float '{field}'")))
}

/// Parse a results file back into records.
pub fn parse_results_csv(text: &str) -> Result<Vec<ExperimentResult>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == RESULTS_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "unexpected header {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut results = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Parse(format!(
                "line {line_no}: expected 8 fields, got {}",
                fields.len()
            )));
        }
        let epsilon = if fields[1].is_empty() {
            None
        } else {
            Some(parse_f64(fields[1], line_no)?)
        };
        results.push(ExperimentResult {
            method: Method::parse(fields[0])?,
            epsilon,
            seed: fields[2]
                .parse()
                .map_err(|_| Error::Parse(format!("line {line_no}: bad seed '{}'", fields[2])))?,
            metrics: crate::eval::MetricReport {
                rmse: parse_f64(fields[3], line_no)?,
                mae: parse_f64(fields[4], line_no)?,
                precision_at_10: parse_f64(fields[5], line_no)?,
                ndcg_at_10: parse_f64(fields[6], line_no)?,
            },
            wall_time_seconds: parse_f64(fields[7], line_no)?,
        });
    }
    Ok(results)
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ExperimentResult>> {
    parse_results_csv(&std::fs::read_to_string(path)?)
}

/// Mean and std row for one (epsilon, method) group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub epsilon: Option<f64>,
    pub method: Method,
    pub n_seeds: usize,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub mae_mean: f64,
    pub mae_std: f64,
    pub p10_mean: f64,
    pub p10_std: f64,
    pub ndcg_mean: f64,
    pub ndcg_std: f64,
}

/// Per-epsilon comparisons against the baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementRow {
    pub epsilon: f64,
    pub improvement_vs_laplace_pct: Option<f64>,
    pub improvement_vs_gaussian_pct: Option<f64>,
    pub t_stat: Option<f64>,
    pub p_value: Option<f64>,
}

/// The reported no-privacy comparison at epsilon = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NoPrivacyComparison {
    pub epsilon: f64,
    pub dpsr_rmse_mean: f64,
    pub no_privacy_rmse_mean: f64,
    pub improvement_pct: f64,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub improvements: Vec<ImprovementRow>,
    pub no_privacy_vs_dpsr: Option<NoPrivacyComparison>,
    pub gaps: Vec<String>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn group_label(epsilon: Option<f64>, method: Method) -> String {
    match epsilon {
        Some(e) => format!("{method} at eps={e}"),
        None => method.to_string(),
    }
}

/// Aggregate results into summary rows, per-epsilon baseline comparisons,
/// and the epsilon=1 no-privacy comparison. Missing cells leave gaps listed
/// in `gaps` rather than failing.
pub fn summarize(results: &[ExperimentResult]) -> Result<Summary> {
    if results.is_empty() {
        return Err(Error::EmptyData("no results to summarize"));
    }

    let mut keys: Vec<(Option<u64>, Method)> = results
        .iter()
        .map(|r| (r.epsilon.map(f64::to_bits), r.method))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    keys.sort_by(|a, b| {
        let ea = a.0.map(f64::from_bits);
        let eb = b.0.map(f64::from_bits);
        match (ea, eb) {
            (None, None) => a.1.name().cmp(b.1.name()),
            (None, Some(_)) => std::cmp::Ordering::Greater, // no-privacy last
            (Some(_), None) => std::cmp::Ordering::Less,
            (Some(x), Some(y)) => x
                .partial_cmp(&y)
                .unwrap()
                .then(a.1.name().cmp(b.1.name())),
        }
    });

    let mut gaps = Vec::new();
    let mut rows = Vec::new();
    for (eps_bits, method) in keys {
        let epsilon = eps_bits.map(f64::from_bits);
        let group: Vec<&ExperimentResult> = results
            .iter()
            .filter(|r| r.method == method && r.epsilon.map(f64::to_bits) == eps_bits)
            .collect();
        let collect = |f: fn(&ExperimentResult) -> f64| -> Vec<f64> {
            group.iter().map(|r| f(r)).collect()
        };
        let (rmse_mean, rmse_std) = mean_std(&collect(|r| r.metrics.rmse));
        let (mae_mean, mae_std) = mean_std(&collect(|r| r.metrics.mae));
        let (p10_mean, p10_std) = mean_std(&collect(|r| r.metrics.precision_at_10));
        let (ndcg_mean, ndcg_std) = mean_std(&collect(|r| r.metrics.ndcg_at_10));
        if group.len() < 2 {
            gaps.push(format!(
                "{}: single seed, std and significance unavailable",
                group_label(epsilon, method)
            ));
        }
        rows.push(SummaryRow {
            epsilon,
            method,
            n_seeds: group.len(),
            rmse_mean,
            rmse_std,
            mae_mean,
            mae_std,
            p10_mean,
            p10_std,
            ndcg_mean,
            ndcg_std,
        });
    }

    let find = |epsilon: Option<f64>, method: Method| -> Option<&SummaryRow> {
        rows.iter().find(|row| {
            row.method == method && row.epsilon.map(f64::to_bits) == epsilon.map(f64::to_bits)
        })
    };

    // Distinct epsilons via bit patterns, then numeric order.
    let mut epsilons: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.epsilon)
        .map(f64::to_bits)
        .collect::<BTreeSet<u64>>()
        .into_iter()
        .map(f64::from_bits)
        .collect();
    epsilons.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut improvements = Vec::new();
    for &eps in &epsilons {
        let dpsr = find(Some(eps), Method::Dpsr);
        let laplace = find(Some(eps), Method::Laplace);
        let gaussian = find(Some(eps), Method::Gaussian);

        let vs_laplace = match (dpsr, laplace) {
            (Some(d), Some(l)) => Some(100.0 * (l.rmse_mean - d.rmse_mean) / l.rmse_mean),
            _ => {
                gaps.push(format!("eps={eps}: laplace comparison unavailable"));
                None
            }
        };
        let vs_gaussian = match (dpsr, gaussian) {
            (Some(d), Some(g)) => Some(100.0 * (g.rmse_mean - d.rmse_mean) / g.rmse_mean),
            _ => {
                gaps.push(format!("eps={eps}: gaussian comparison unavailable"));
                None
            }
        };

        // Paired test on per-seed rmse, dpsr against laplace.
        let paired: Option<(Vec<f64>, Vec<f64>)> = {
            let per_seed = |method: Method| -> Vec<(u64, f64)> {
                let mut v: Vec<(u64, f64)> = results
                    .iter()
                    .filter(|r| {
                        r.method == method && r.epsilon.map(f64::to_bits) == Some(eps.to_bits())
                    })
                    .map(|r| (r.seed, r.metrics.rmse))
                    .collect();
                v.sort_by_key(|(s, _)| *s);
                v
            };
            let d = per_seed(Method::Dpsr);
            let l = per_seed(Method::Laplace);
            let seeds_match = d.len() == l.len()
                && d.iter().zip(&l).all(|((sa, _), (sb, _))| sa == sb);
            if seeds_match && d.len() >= 2 {
                Some((
                    d.into_iter().map(|(_, v)| v).collect(),
                    l.into_iter().map(|(_, v)| v).collect(),
                ))
            } else {
                None
            }
        };
        let (t_stat, p_value) = match paired {
            Some((d, l)) => {
                let t = paired_t_test(&d, &l)?;
                (Some(t.t_stat), Some(t.p_value))
            }
            None => {
                gaps.push(format!(
                    "eps={eps}: paired t-test needs matching seeds for dpsr and laplace"
                ));
                (None, None)
            }
        };

        improvements.push(ImprovementRow {
            epsilon: eps,
            improvement_vs_laplace_pct: vs_laplace,
            improvement_vs_gaussian_pct: vs_gaussian,
            t_stat,
            p_value,
        });
    }

    let no_privacy_vs_dpsr = {
        let target = epsilons
            .iter()
            .copied()
            .find(|e| (*e - 1.0).abs() < 1e-12);
        match (
            target.and_then(|e| find(Some(e), Method::Dpsr)),
            find(None, Method::NoPrivacy),
        ) {
            (Some(d), Some(np)) => Some(NoPrivacyComparison {
                epsilon: 1.0,
                dpsr_rmse_mean: d.rmse_mean,
                no_privacy_rmse_mean: np.rmse_mean,
                improvement_pct: 100.0 * (np.rmse_mean - d.rmse_mean) / np.rmse_mean,
            }),
            _ => None,
        }
    };

    Ok(Summary {
        rows,
        improvements,
        no_privacy_vs_dpsr,
        gaps,
    })
}

pub fn summary_to_csv(summary: &Summary) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in &summary.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_opt(row.epsilon),
            row.method,
            fmt6(row.rmse_mean),
            fmt6(row.rmse_std),
            fmt6(row.mae_mean),
            fmt6(row.mae_std),
            fmt6(row.p10_mean),
            fmt6(row.p10_std),
            fmt6(row.ndcg_mean),
            fmt6(row.ndcg_std),
        );
    }
    out
}

pub fn improvement_to_csv(summary: &Summary) -> String {
    let mut out = String::from(IMPROVEMENT_HEADER);
    out.push('\n');
    for row in &summary.improvements {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt6(row.epsilon),
            fmt_opt(row.improvement_vs_laplace_pct),
            fmt_opt(row.improvement_vs_gaussian_pct),
            fmt_opt(row.t_stat),
            fmt_opt(row.p_value),
        );
    }
    out
}

/// Sibling paths for the two summary files of a results file.
pub fn summary_paths(results_path: &Path) -> (PathBuf, PathBuf) {
    let stem = results_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".to_string());
    let dir = results_path.parent().unwrap_or_else(|| Path::new("."));
    (
        dir.join(format!("{stem}_summary.csv")),
        dir.join(format!("{stem}_improvement.csv")),
    )
}

pub fn write_summary_files(results_path: &Path, summary: &Summary) -> Result<(PathBuf, PathBuf)> {
    let (summary_path, improvement_path) = summary_paths(results_path);
    std::fs::write(&summary_path, summary_to_csv(summary))?;
    std::fs::write(&improvement_path, improvement_to_csv(summary))?;
    Ok((summary_path, improvement_path))
}

/// Human-readable summary tables.
pub fn render_summary(summary: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "per-method metrics (mean +/- std over seeds)");
    let _ = writeln!(
        out,
        "{:<8} {:<11} {:<19} {:<19} {:<19} {:<19}",
        "eps", "method", "rmse", "mae", "p@10", "ndcg@10"
    );
    for row in &summary.rows {
        let eps = row
            .epsilon
            .map(|e| format!("{e}"))
            .unwrap_or_else(|| "none".to_string());
        let cell = |mean: f64, std: f64| format!("{mean:.4} +/- {std:.4}");
        let _ = writeln!(
            out,
            "{:<8} {:<11} {:<19} {:<19} {:<19} {:<19}",
            eps,
            row.method.name(),
            cell(row.rmse_mean, row.rmse_std),
            cell(row.mae_mean, row.mae_std),
            cell(row.p10_mean, row.p10_std),
            cell(row.ndcg_mean, row.ndcg_std),
        );
    }

    if !summary.improvements.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "rmse improvement and paired t-test (dpsr vs laplace)");
        let _ = writeln!(
            out,
            "{:<8} {:<13} {:<13} {:<10} {}",
            "eps", "vs laplace", "vs gaussian", "t", "p"
        );
        for row in &summary.improvements {
            let pct = |v: Option<f64>| {
                v.map(|x| format!("{x:.2}%")).unwrap_or_else(|| "-".to_string())
            };
            let num = |v: Option<f64>| {
                v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".to_string())
            };
            let p = |v: Option<f64>| {
                v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".to_string())
            };
            let _ = writeln!(
                out,
                "{:<8} {:<13} {:<13} {:<10} {}",
                row.epsilon,
                pct(row.improvement_vs_laplace_pct),
                pct(row.improvement_vs_gaussian_pct),
                num(row.t_stat),
                p(row.p_value),
            );
        }
    }

    if let Some(cmp) = &summary.no_privacy_vs_dpsr {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "dpsr vs no_privacy at eps={}: rmse {:.4} vs {:.4} ({:+.2}%)",
            cmp.epsilon, cmp.dpsr_rmse_mean, cmp.no_privacy_rmse_mean, cmp.improvement_pct
        );
    }

    for gap in &summary.gaps {
        let _ = writeln!(out, "gap: {gap}");
    }
    out
}
