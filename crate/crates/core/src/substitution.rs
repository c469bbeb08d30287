//! Substitution statistics: every variable occurrence is replaced by the
//! chosen marginal statistic of its column and the expression is evaluated
//! once. Constants are left alone.
//!
//! Under this rule `chen_mean(x * y) = mean(x) * mean(y)` and
//! `chen_variance(sin(x)) = sin(var(x))`. A few consequences that look odd
//! but follow directly:
//!
//! - `chen_variance(3 * x) = 3 * var(x)`, not `9 * var(x)`;
//! - `chen_mean(x * x) = mean(x)^2`, not the mean of `x^2`;
//! - `chen_variance` can be negative, e.g. `sin` of a variance in `(pi, 2pi)`.
//!
//! Median and mode use the same rule with the median and mode marginals.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::classical::bind_columns;
use crate::dataset::{Dataset, MarginalStats};
use crate::error::StatError;
use crate::expr::Expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StatKind {
    Mean,
    Variance,
    Median,
    Mode,
}

impl StatKind {
    pub const ALL: [StatKind; 4] = [
        StatKind::Mean,
        StatKind::Variance,
        StatKind::Median,
        StatKind::Mode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StatKind::Mean => "mean",
            StatKind::Variance => "variance",
            StatKind::Median => "median",
            StatKind::Mode => "mode",
        }
    }

    /// The matching field of `stats`, if defined.
    pub fn select(self, stats: &MarginalStats) -> Option<f64> {
        match self {
            StatKind::Mean => Some(stats.mean),
            StatKind::Variance => stats.variance,
            StatKind::Median => Some(stats.median),
            StatKind::Mode => stats.mode,
        }
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StatKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown statistic {s:?}"))
    }
}

pub fn chen_statistic(e: &Expr, d: &Dataset, kind: StatKind) -> Result<f64, StatError> {
    let bound = bind_columns(e, d)?;
    let mut values = Vec::with_capacity(bound.len());
    for (name, column) in &bound {
        let stats = MarginalStats::of(column).expect("columns are nonempty");
        let v = kind.select(&stats).ok_or_else(|| match kind {
            StatKind::Mode => StatError::UndefinedMode {
                column: name.clone(),
            },
            _ => StatError::InsufficientSamples {
                needed: 2,
                got: stats.n,
            },
        })?;
        values.push((name.as_str(), v));
    }
    if kind == StatKind::Variance && d.n_rows() < 2 {
        return Err(StatError::InsufficientSamples {
            needed: 2,
            got: d.n_rows(),
        });
    }
    let lookup = |name: &str| values.iter().find(|(n, _)| *n == name).map(|(_, v)| *v);
    let v = e.eval_with(&lookup)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(StatError::NonFiniteResult { row: None })
    }
}

pub fn chen_mean(e: &Expr, d: &Dataset) -> Result<f64, StatError> {
    chen_statistic(e, d, StatKind::Mean)
}

pub fn chen_variance(e: &Expr, d: &Dataset) -> Result<f64, StatError> {
    chen_statistic(e, d, StatKind::Variance)
}

pub fn chen_median(e: &Expr, d: &Dataset) -> Result<f64, StatError> {
    chen_statistic(e, d, StatKind::Median)
}

pub fn chen_mode(e: &Expr, d: &Dataset) -> Result<f64, StatError> {
    chen_statistic(e, d, StatKind::Mode)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;
    use crate::expr::parse;

    fn d1() -> Dataset {
        Dataset::new([("x", vec![1.0, 2.0, 3.0]), ("y", vec![4.0, 5.0, 6.0])]).unwrap()
    }

    fn d2() -> Dataset {
        Dataset::new([("x", vec![0.0, FRAC_PI_2, PI])]).unwrap()
    }

    #[test]
    fn product_of_means_and_variances() {
        let e = parse("x*y").unwrap();
        assert_eq!(chen_mean(&e, &d1()).unwrap(), 10.0);
        assert_eq!(chen_variance(&e, &d1()).unwrap(), 1.0);
        assert_eq!(chen_median(&e, &d1()).unwrap(), 10.0);
    }

    #[test]
    fn sin_of_mean_and_variance() {
        let e = parse("sin(x)").unwrap();
        assert!((chen_mean(&e, &d2()).unwrap() - 1.0).abs() <= 1e-15);
        let v = chen_variance(&e, &d2()).unwrap();
        assert!((v - (PI * PI / 4.0).sin()).abs() < 1e-12);
        assert!((v - 0.6243).abs() < 1e-4);
    }

    #[test]
    fn identity_returns_marginals() {
        let d = Dataset::new([("x", vec![1.0, 2.0, 2.0, 9.0])]).unwrap();
        let s = d.column_stats("x").unwrap();
        let x = parse("x").unwrap();
        for kind in StatKind::ALL {
            assert_eq!(chen_statistic(&x, &d, kind).ok(), kind.select(&s));
        }
    }

    #[test]
    fn literal_rule_consequences() {
        let d = d1();
        let var_x = d.column_stats("x").unwrap().variance.unwrap();
        assert_eq!(
            chen_variance(&parse("3*x").unwrap(), &d).unwrap(),
            3.0 * var_x
        );
        assert_eq!(chen_mean(&parse("x*x").unwrap(), &d).unwrap(), 4.0);
    }

    #[test]
    fn negative_variance_is_not_clamped() {
        // var = 4.5 lies in (pi, 2pi)
        let d = Dataset::new([("x", vec![0.0, 3.0])]).unwrap();
        let v = chen_variance(&parse("sin(x)").unwrap(), &d).unwrap();
        assert_eq!(v, 4.5f64.sin());
        assert!(v < 0.0);
    }

    #[test]
    fn undefined_inputs() {
        let e = parse("x*y").unwrap();
        assert_eq!(
            chen_mode(&e, &d1()),
            Err(StatError::UndefinedMode { column: "x".into() })
        );
        let single = Dataset::new([("x", vec![2.0])]).unwrap();
        assert_eq!(
            chen_variance(&parse("x").unwrap(), &single),
            Err(StatError::InsufficientSamples { needed: 2, got: 1 })
        );
        assert_eq!(
            chen_variance(&parse("1").unwrap(), &single),
            Err(StatError::InsufficientSamples { needed: 2, got: 1 })
        );
        assert_eq!(
            chen_mean(&parse("z").unwrap(), &d1()),
            Err(StatError::UnboundVariable("z".into()))
        );
        let zero_mean = Dataset::new([("x", vec![-1.0, 1.0])]).unwrap();
        assert_eq!(
            chen_mean(&parse("1/x").unwrap(), &zero_mean),
            Err(StatError::NonFiniteResult { row: None })
        );
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("median".parse::<StatKind>(), Ok(StatKind::Median));
        assert!("max".parse::<StatKind>().is_err());
    }
}
