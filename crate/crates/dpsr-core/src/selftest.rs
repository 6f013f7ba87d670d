//! Built-in verification suite and the independent oracles it checks
//! against.
//!
//! The oracles here deliberately take different computational routes from
//! the production code: correlation by per-pair scans instead of per-user
//! accumulation, singular values through the eigendecomposition of the Gram
//! matrix instead of SVD, gradients by central finite differences instead
//! of the analytic formula. The `run_all` suite is what the CLI `selftest`
//! subcommand executes.

use nalgebra::DMatrix;
use rand::RngCore;

use crate::denoise::{item_pearson, stage2_denoise, DenoiseParams};
use crate::eval::{mae, mf_gradient, mf_loss, ndcg_at_k, paired_t_test, precision_at_k, rmse};
use crate::lowrank::{stage3_complete, truncated_svd, LowRankParams};
use crate::mechanisms::{calibrated_noise_stage1, laplace_mechanism, CalibrationParams};
use crate::ratings::{clip, generate_synthetic, split_train_test, RatingMatrix, SynthConfig};
use crate::sampling;

/// Outcome of one self-test check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn pass(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed: true,
            detail: detail.into(),
        }
    }

    fn fail(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed: false,
            detail: detail.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Item-item Pearson similarity by direct per-pair scans: for each pair,
/// walk the co-rating users explicitly; means and normalizers over each
/// item's full rated set; degenerate pairs and the diagonal are zero.
pub fn brute_force_item_pearson(r: &RatingMatrix) -> DMatrix<f64> {
    let (m, n) = (r.nrows(), r.ncols());
    let mut out = DMatrix::zeros(n, n);
    let column_stats = |j: usize| -> (f64, f64) {
        let raters: Vec<usize> = (0..m).filter(|&i| r.mask().contains(i, j)).collect();
        if raters.is_empty() {
            return (0.0, 0.0);
        }
        let mean = raters.iter().map(|&i| r.get(i, j)).sum::<f64>() / raters.len() as f64;
        let energy: f64 = raters.iter().map(|&i| (r.get(i, j) - mean).powi(2)).sum();
        (mean, energy.sqrt())
    };
    let stats: Vec<(f64, f64)> = (0..n).map(column_stats).collect();
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let co: Vec<usize> = (0..m)
                .filter(|&i| r.mask().contains(i, j) && r.mask().contains(i, k))
                .collect();
            if co.len() < 2 || stats[j].1 == 0.0 || stats[k].1 == 0.0 {
                continue;
            }
            let num: f64 = co
                .iter()
                .map(|&i| (r.get(i, j) - stats[j].0) * (r.get(i, k) - stats[k].0))
                .sum();
            out[(j, k)] = (num / (stats[j].1 * stats[k].1)).clamp(-1.0, 1.0);
        }
    }
    out
}

/// Singular values via the symmetric eigendecomposition of the smaller Gram
/// matrix, sorted descending.
pub fn gram_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let gram = if m.nrows() <= m.ncols() {
        m * m.transpose()
    } else {
        m.transpose() * m
    };
    let eigen = nalgebra::SymmetricEigen::new(gram);
    let mut values: Vec<f64> = eigen
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    values
}

/// Central finite differences of the factorization loss at `(p, q)`.
pub fn numerical_mf_gradient(
    r: &RatingMatrix,
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
    reg: f64,
    step: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut gp = DMatrix::zeros(p.nrows(), p.ncols());
    let mut probe_p = p.clone();
    for idx in 0..p.len() {
        let h = step * (1.0 + p[idx].abs());
        probe_p[idx] = p[idx] + h;
        let plus = mf_loss(r, &probe_p, q, reg);
        probe_p[idx] = p[idx] - h;
        let minus = mf_loss(r, &probe_p, q, reg);
        probe_p[idx] = p[idx];
        gp[idx] = (plus - minus) / (2.0 * h);
    }
    let mut gq = DMatrix::zeros(q.nrows(), q.ncols());
    let mut probe_q = q.clone();
    for idx in 0..q.len() {
        let h = step * (1.0 + q[idx].abs());
        probe_q[idx] = q[idx] + h;
        let plus = mf_loss(r, p, &probe_q, reg);
        probe_q[idx] = q[idx] - h;
        let minus = mf_loss(r, p, &probe_q, reg);
        probe_q[idx] = q[idx];
        gq[idx] = (plus - minus) / (2.0 * h);
    }
    (gp, gq)
}

// ---------------------------------------------------------------------------
// Property suites
// ---------------------------------------------------------------------------

fn check_clip() -> Check {
    let name = "clip saturation and idempotence";
    let mut rng = sampling::rng_from_seed(101);
    for _ in 0..200 {
        let x = 20.0 * (sampling::uniform_open01(&mut rng) - 0.5);
        let once = clip(x, 1.0, 5.0).unwrap();
        if !(1.0..=5.0).contains(&once) || clip(once, 1.0, 5.0).unwrap() != once {
            return Check::fail(name, format!("x = {x}"));
        }
    }
    Check::pass(name, "200 random draws")
}

fn check_split_partition() -> Check {
    let name = "train/test split partitions the mask";
    let mut rng = sampling::rng_from_seed(102);
    for trial in 0..100u64 {
        let cfg = SynthConfig {
            m: 4 + (trial as usize % 9),
            n: 4 + (trial as usize % 7),
            d_true: 2,
            noise_std: 0.3,
            density: 0.3 + 0.5 * sampling::uniform_open01(&mut rng),
            seed: 9000 + trial,
        };
        let r = match generate_synthetic(&cfg) {
            Ok(r) => r,
            Err(e) => return Check::fail(name, e.to_string()),
        };
        if r.mask().len() < 5 {
            continue;
        }
        let split = match split_train_test(r.mask(), 0.2, trial) {
            Ok(s) => s,
            Err(e) => return Check::fail(name, e.to_string()),
        };
        let disjoint = split.test.iter().all(|(i, j)| !split.train.contains(i, j));
        let covering = split.train.len() + split.test.len() == r.mask().len()
            && r
                .mask()
                .iter()
                .all(|(i, j)| split.train.contains(i, j) || split.test.contains(i, j));
        if !disjoint || !covering {
            return Check::fail(name, format!("trial {trial}"));
        }
    }
    Check::pass(name, "100 random masks")
}

fn check_mechanisms_preserve_contract() -> Check {
    let name = "mechanisms preserve mask and range";
    let r = generate_synthetic(&SynthConfig {
        m: 25,
        n: 20,
        d_true: 3,
        noise_std: 0.3,
        density: 0.4,
        seed: 103,
    })
    .unwrap();
    let mut rng = sampling::rng_from_seed(104);
    let outputs = [
        calibrated_noise_stage1(&r, 0.5, CalibrationParams::new(0.3).unwrap(), &mut rng),
        laplace_mechanism(&r, 0.5, &mut rng),
        crate::mechanisms::gaussian_mechanism(&r, 0.5, 1e-5, &mut rng),
    ];
    for out in outputs {
        let out = match out {
            Ok(o) => o,
            Err(e) => return Check::fail(name, e.to_string()),
        };
        if out.mask() != r.mask() {
            return Check::fail(name, "mask changed");
        }
        if out.observed().any(|(_, _, v)| !(1.0..=5.0).contains(&v)) {
            return Check::fail(name, "value escaped range");
        }
    }
    Check::pass(name, "calibrated, laplace, gaussian at eps = 0.5")
}

fn check_zero_alpha_matches_laplace() -> Check {
    let name = "zero-alpha calibration equals plain laplace";
    let r = generate_synthetic(&SynthConfig {
        m: 15,
        n: 12,
        d_true: 3,
        noise_std: 0.2,
        density: 0.5,
        seed: 105,
    })
    .unwrap();
    let mut a = sampling::rng_from_seed(106);
    let mut b = sampling::rng_from_seed(106);
    let lhs = calibrated_noise_stage1(&r, 1.0, CalibrationParams::new(0.0).unwrap(), &mut a);
    let rhs = laplace_mechanism(&r, 1.0, &mut b);
    match (lhs, rhs) {
        (Ok(x), Ok(y)) if x.values() == y.values() => Check::pass(name, "bit-identical outputs"),
        (Ok(_), Ok(_)) => Check::fail(name, "outputs differ"),
        (Err(e), _) | (_, Err(e)) => Check::fail(name, e.to_string()),
    }
}

fn check_pearson_against_oracle() -> Check {
    let name = "item correlations match brute-force oracle";
    let mut rng = sampling::rng_from_seed(107);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let values = DMatrix::from_fn(10, 8, |_, _| 1.0 + 4.0 * sampling::uniform_open01(&mut rng));
        let entries: Vec<(usize, usize)> = (0..10)
            .flat_map(|i| (0..8).map(move |j| (i, j)))
            .filter(|_| sampling::uniform_open01(&mut rng) < 0.7)
            .collect();
        if entries.is_empty() {
            continue;
        }
        let r = RatingMatrix::new(
            values,
            crate::ratings::ObservationMask::new(10, 8, entries).unwrap(),
            1.0,
            5.0,
        )
        .unwrap();
        let fast = item_pearson(&r);
        let slow = brute_force_item_pearson(&r);
        for j in 0..8 {
            for k in 0..8 {
                let gap = (fast.get(j, k) - slow[(j, k)]).abs();
                worst = worst.max(gap);
                if gap >= 1e-10 {
                    return Check::fail(name, format!("trial {trial}: gap {gap:.3e}"));
                }
            }
        }
    }
    Check::pass(name, format!("100 instances, worst gap {worst:.3e}"))
}

fn check_truncation_optimality() -> Check {
    let name = "rank truncation is Frobenius-optimal";
    let mut rng = sampling::rng_from_seed(108);
    let m = DMatrix::from_fn(8, 6, |_, _| sampling::standard_normal(&mut rng));
    let d = 3;
    let factors = match truncated_svd(&m, d) {
        Ok(f) => f,
        Err(e) => return Check::fail(name, e.to_string()),
    };
    let best = (&factors.reconstruct() - &m).norm();
    let spectrum = gram_singular_values(&m);
    let tail: f64 = spectrum[d..].iter().map(|s| s * s).sum::<f64>().sqrt();
    if (best - tail).abs() > 1e-8 {
        return Check::fail(name, format!("error {best} vs tail energy {tail}"));
    }
    for _ in 0..100 {
        let a = DMatrix::from_fn(8, d, |_, _| sampling::standard_normal(&mut rng));
        let b = DMatrix::from_fn(6, d, |_, _| sampling::standard_normal(&mut rng));
        if best > (&a * b.transpose() - &m).norm() + 1e-10 {
            return Check::fail(name, "random factorization beat the truncation");
        }
    }
    Check::pass(name, "tail-energy match and 100 random challengers")
}

fn check_metric_inequalities() -> Check {
    let name = "metric inequalities";
    let mut rng = sampling::rng_from_seed(109);
    for _ in 0..200 {
        let len = 1 + (rng.next_u64() % 30) as usize;
        let pred: Vec<f64> = (0..len)
            .map(|_| 10.0 * (sampling::uniform_open01(&mut rng) - 0.5))
            .collect();
        let truth: Vec<f64> = (0..len)
            .map(|_| 10.0 * (sampling::uniform_open01(&mut rng) - 0.5))
            .collect();
        if rmse(&pred, &truth).unwrap() < mae(&pred, &truth).unwrap() - 1e-12 {
            return Check::fail(name, "rmse < mae");
        }
        let items: Vec<(f64, f64)> = pred
            .iter()
            .map(|p| (*p, 1.0 + 4.0 * sampling::uniform_open01(&mut rng)))
            .collect();
        let p10 = precision_at_k(&[items.clone()], 10, 3.5).unwrap();
        let n10 = ndcg_at_k(&[items], 10, 3.5).unwrap();
        if !(0.0..=1.0).contains(&p10) || !(0.0..=1.0).contains(&n10) {
            return Check::fail(name, "ranking metric escaped [0, 1]");
        }
    }
    Check::pass(name, "rmse >= mae and ranking metrics in [0, 1], 200 draws")
}

fn check_t_test_antisymmetry() -> Check {
    let name = "paired t-test antisymmetry";
    let mut rng = sampling::rng_from_seed(110);
    for _ in 0..100 {
        let len = 2 + (rng.next_u64() % 10) as usize;
        let a: Vec<f64> = (0..len).map(|_| sampling::standard_normal(&mut rng)).collect();
        let b: Vec<f64> = (0..len).map(|_| sampling::standard_normal(&mut rng)).collect();
        let fwd = paired_t_test(&a, &b).unwrap();
        let rev = paired_t_test(&b, &a).unwrap();
        if (fwd.t_stat + rev.t_stat).abs() > 1e-9 * (1.0 + fwd.t_stat.abs())
            || (fwd.p_value - rev.p_value).abs() > 1e-12
        {
            return Check::fail(name, "swap changed the test");
        }
    }
    Check::pass(name, "100 random vectors")
}

fn check_gradient_against_finite_differences() -> Check {
    let name = "factorization gradient matches finite differences";
    let r = generate_synthetic(&SynthConfig {
        m: 7,
        n: 6,
        d_true: 3,
        noise_std: 0.2,
        density: 0.6,
        seed: 111,
    })
    .unwrap();
    let mut rng = sampling::rng_from_seed(112);
    let p = DMatrix::from_fn(7, 3, |_, _| 0.5 * sampling::standard_normal(&mut rng));
    let q = DMatrix::from_fn(6, 3, |_, _| 0.5 * sampling::standard_normal(&mut rng));
    let (gp, gq) = mf_gradient(&r, &p, &q, 0.02);
    let (fp, fq) = numerical_mf_gradient(&r, &p, &q, 0.02, 1e-5);
    let mut worst: f64 = 0.0;
    for (analytic, numeric) in [(&gp, &fp), (&gq, &fq)] {
        for idx in 0..analytic.len() {
            let (a, b) = (analytic[idx], numeric[idx]);
            let rel = (a - b).abs() / (a.abs().max(b.abs()) + 1e-8);
            worst = worst.max(rel);
            if rel > 1e-4 {
                return Check::fail(name, format!("relative gap {rel:.3e}"));
            }
        }
    }
    Check::pass(name, format!("worst relative gap {worst:.3e}"))
}

fn check_stage_identities() -> Check {
    let name = "denoise and completion identities";
    let r = generate_synthetic(&SynthConfig {
        m: 20,
        n: 16,
        d_true: 3,
        noise_std: 0.3,
        density: 0.5,
        seed: 113,
    })
    .unwrap();
    let blended = match stage2_denoise(&r, &DenoiseParams::new(1.0, 15).unwrap()) {
        Ok(b) => b,
        Err(e) => return Check::fail(name, e.to_string()),
    };
    if blended.values() != r.values() {
        return Check::fail(name, "beta = 1 blend is not the identity");
    }
    let completed = match stage3_complete(&r, &LowRankParams::new(3, 0.7, 0, 10).unwrap()) {
        Ok(c) => c,
        Err(e) => return Check::fail(name, e.to_string()),
    };
    if completed.mask() != r.mask() {
        return Check::fail(name, "completion changed the mask");
    }
    Check::pass(name, "beta = 1 identity, zero-iteration completion")
}

/// Run every property suite.
pub fn run_all() -> Vec<Check> {
    vec![
        check_clip(),
        check_split_partition(),
        check_mechanisms_preserve_contract(),
        check_zero_alpha_matches_laplace(),
        check_pearson_against_oracle(),
        check_truncation_optimality(),
        check_metric_inequalities(),
        check_t_test_antisymmetry(),
        check_gradient_against_finite_differences(),
        check_stage_identities(),
    ]
}
