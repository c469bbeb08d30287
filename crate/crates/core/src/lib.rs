//! Classical and substitution statistics of nonlinear expressions.
//!
//! The classical statistic of an expression evaluates it on every aligned
//! row and summarises the resulting sample. The substitution statistic
//! summarises each column first and evaluates the expression once on those
//! summaries. [`compare`] reports both side by side together with the gaps
//! between them.

pub mod classical;
pub mod cli;
pub mod compare;
pub mod dataset;
mod error;
pub mod expr;
mod moments;
pub mod substitution;

pub use classical::{
    composite_mean, composite_samples, composite_stats, composite_variance, covariance,
    StreamSummary, StreamingAccumulator,
};
pub use compare::{compare, product_gap_identity, ComparisonReport};
pub use dataset::{load_csv, CsvOptions, DataError, Dataset, MarginalStats};
pub use error::StatError;
pub use expr::{parse, pretty_print, Expr};
pub use substitution::{
    chen_mean, chen_median, chen_mode, chen_statistic, chen_variance, StatKind,
};
