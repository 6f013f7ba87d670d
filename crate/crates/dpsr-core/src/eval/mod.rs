//! Downstream evaluator: matrix-factorization training, rating and ranking
//! metrics, and paired significance testing.

mod metrics;
mod mf;
mod stats;

pub use metrics::{mae, ndcg_at_k, precision_at_k, rmse, MetricReport};
pub use mf::{mf_gradient, mf_loss, predict, train_mf, MfConfig, MfModel};
pub use stats::{paired_t_test, student_t_two_sided_p, TTestResult};
