//! Side-by-side classical and substitution statistics, the exact gap identity
//! for two-variable products, and a seeded Monte Carlo harness.

mod monte_carlo;
pub mod rng;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::classical::{bind_columns, composite_mean, composite_stats, covariance};
use crate::dataset::{Dataset, MarginalStats};
use crate::error::StatError;
use crate::expr::{BinaryOp, Expr};
use crate::substitution::{chen_mean, chen_statistic, StatKind};

pub use monte_carlo::{
    monte_carlo_compare, Aggregate, Distribution, FieldIssue, McError, McReport, McSpec,
    PartialSpec, ReplicationResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatComparison {
    pub classical: Option<f64>,
    pub chen: Option<f64>,
    pub abs_gap: Option<f64>,
    pub rel_gap: Option<f64>,
}

impl StatComparison {
    pub fn new(classical: Option<f64>, chen: Option<f64>) -> StatComparison {
        let abs_gap = classical.zip(chen).map(|(c, s)| (c - s).abs());
        let rel_gap = classical.zip(abs_gap).map(|(c, g)| g / c.abs().max(1.0));
        StatComparison {
            classical,
            chen,
            abs_gap,
            rel_gap,
        }
    }
}

/// `lhs = composite_mean(a*b) - chen_mean(a*b)`,
/// `rhs = (n-1)/n * covariance(a, b)`, `residual = |lhs - rhs|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductGap {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductDecomposition {
    pub left: String,
    pub right: String,
    pub covariance_term: f64,
    pub identity_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Classical,
    Chen,
}

/// `statistic` and `method` are `None` when the warning is not specific to
/// one of them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportWarning {
    pub statistic: Option<StatKind>,
    pub method: Option<Method>,
    pub message: String,
}

impl ReportWarning {
    fn new(
        statistic: Option<StatKind>,
        method: Option<Method>,
        message: impl Into<String>,
    ) -> Self {
        ReportWarning {
            statistic,
            method,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub expression: String,
    pub n_rows: usize,
    pub statistics: BTreeMap<StatKind, StatComparison>,
    pub product_decomposition: Option<ProductDecomposition>,
    pub warnings: Vec<ReportWarning>,
}

impl ComparisonReport {
    pub fn get(&self, kind: StatKind) -> &StatComparison {
        &self.statistics[&kind]
    }
}

pub fn product_gap_identity(d: &Dataset, a: &str, b: &str) -> Result<ProductGap, StatError> {
    for name in [a, b] {
        if d.column(name).is_none() {
            return Err(StatError::UnknownColumn(name.to_owned()));
        }
    }
    let product = Expr::binary(BinaryOp::Mul, Expr::var(a), Expr::var(b));
    let lhs = composite_mean(&product, d)? - chen_mean(&product, d)?;
    let n = d.n_rows();
    let rhs = if n < 2 {
        0.0
    } else {
        (n - 1) as f64 / n as f64 * covariance(d, a, b)?
    };
    Ok(ProductGap {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// Fills every statistic kind that is defined on `d`. Undefined kinds stay
/// `None` and get a warning; only an unbound variable is an error.
pub fn compare(e: &Expr, d: &Dataset) -> Result<ComparisonReport, StatError> {
    bind_columns(e, d)?;
    let mut warnings = Vec::new();

    let classical: Option<MarginalStats> = match composite_stats(e, d) {
        Ok(s) => Some(s),
        Err(err) => {
            warnings.push(ReportWarning::new(
                None,
                Some(Method::Classical),
                format!("classical: {err}"),
            ));
            None
        }
    };

    let mut statistics = BTreeMap::new();
    for kind in StatKind::ALL {
        let classical_value = classical.as_ref().and_then(|s| kind.select(s));
        if classical.is_some() && classical_value.is_none() {
            let why = match kind {
                StatKind::Mode => "no composite value repeats".to_owned(),
                _ => format!("need at least 2 rows, have {}", d.n_rows()),
            };
            warnings.push(ReportWarning::new(
                Some(kind),
                Some(Method::Classical),
                format!("classical {kind} undefined: {why}"),
            ));
        }
        let chen_value = match chen_statistic(e, d, kind) {
            Ok(v) => Some(v),
            Err(err) => {
                warnings.push(ReportWarning::new(
                    Some(kind),
                    Some(Method::Chen),
                    format!("chen {kind} undefined: {err}"),
                ));
                None
            }
        };
        if kind == StatKind::Variance && chen_value.is_some_and(|v| v < 0.0) {
            warnings.push(ReportWarning::new(
                Some(kind),
                Some(Method::Chen),
                "chen variance is negative; reported unclamped",
            ));
        }
        statistics.insert(kind, StatComparison::new(classical_value, chen_value));
    }

    let product_decomposition = match e.as_two_variable_product() {
        Some((a, b)) => match product_gap_identity(d, a, b) {
            Ok(gap) => Some(ProductDecomposition {
                left: a.to_owned(),
                right: b.to_owned(),
                covariance_term: gap.rhs,
                identity_residual: gap.residual,
            }),
            Err(err) => {
                warnings.push(ReportWarning::new(
                    None,
                    None,
                    format!("product decomposition unavailable: {err}"),
                ));
                None
            }
        },
        None => None,
    };

    Ok(ComparisonReport {
        expression: e.to_string(),
        n_rows: d.n_rows(),
        statistics,
        product_decomposition,
        warnings,
    })
}
