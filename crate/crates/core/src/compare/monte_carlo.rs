use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::rng::{split, Xoshiro256};
use crate::classical::{composite_mean, composite_variance};
use crate::dataset::{Dataset, MarginalStats};
use crate::error::StatError;
use crate::expr::{is_identifier, parse, Expr};
use crate::substitution::{chen_mean, chen_variance};

/// Sampling law of one simulated column.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Uniform {
        low: f64,
        high: f64,
    },
    Normal {
        mean: f64,
        std_dev: f64,
    },
    /// Row-for-row copy of another simulated column.
    Copy(String),
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Uniform { low, high } => write!(f, "uniform({low}, {high})"),
            Distribution::Normal { mean, std_dev } => write!(f, "normal({mean}, {std_dev})"),
            Distribution::Copy(of) => write!(f, "copy({of})"),
        }
    }
}

impl FromStr for Distribution {
    type Err = String;

    /// `uniform(a, b)`, `normal(mu, sigma)` or `copy(name)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (head, rest) = s
            .split_once('(')
            .ok_or_else(|| format!("expected `kind(args)`, got {s:?}"))?;
        let args = rest
            .strip_suffix(')')
            .ok_or_else(|| format!("missing ')' in {s:?}"))?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        let numbers = || -> Result<(f64, f64), String> {
            match args.as_slice() {
                [a, b] => {
                    let num = |t: &str| t.parse::<f64>().map_err(|_| format!("bad number {t:?}"));
                    Ok((num(a)?, num(b)?))
                }
                _ => Err(format!("{} takes two arguments", head.trim())),
            }
        };
        match head.trim() {
            "uniform" => numbers().map(|(low, high)| Distribution::Uniform { low, high }),
            "normal" => numbers().map(|(mean, std_dev)| Distribution::Normal { mean, std_dev }),
            "copy" => match args.as_slice() {
                [name] if is_identifier(name) => Ok(Distribution::Copy((*name).to_owned())),
                _ => Err(format!("copy takes one variable name, got {rest:?}")),
            },
            other => Err(format!("unknown distribution {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSpec {
    pub seed: u64,
    pub n_samples: usize,
    pub n_replications: usize,
    /// Sampled in key order, one full column at a time.
    pub distributions: BTreeMap<String, Distribution>,
    pub expression: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldIssue {
    pub field: String,
    pub message: String,
}

impl FieldIssue {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        FieldIssue {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for FieldIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("invalid spec: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidSpec(Vec<FieldIssue>),
    #[error("replication {index}: {source}")]
    Replication { index: usize, source: StatError },
}

/// Spec fields as read from a config file or flags, before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialSpec {
    pub seed: Option<u64>,
    pub n_samples: Option<usize>,
    pub n_replications: Option<usize>,
    pub distributions: BTreeMap<String, String>,
    pub expression: Option<String>,
}

impl PartialSpec {
    /// Parses a flat JSON object or `key = value` lines (`#` starts a
    /// comment). Keys: `seed`, `n`, `r`, `expr`, `dist.<name>`.
    pub fn parse(text: &str) -> Result<PartialSpec, McError> {
        let mut spec = PartialSpec::default();
        let mut issues = Vec::new();
        if text.trim_start().starts_with('{') {
            let object: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)
                .map_err(|e| McError::InvalidSpec(vec![FieldIssue::new("spec", e.to_string())]))?;
            for (key, value) in object {
                let raw = match value {
                    serde_json::Value::String(s) => s,
                    serde_json::Value::Number(n) => n.to_string(),
                    other => {
                        issues.push(FieldIssue::new(
                            key,
                            format!("expected a string or number, got {other}"),
                        ));
                        continue;
                    }
                };
                if let Err(issue) = spec.set(&key, &raw) {
                    issues.push(issue);
                }
            }
        } else {
            for (i, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                match line.split_once('=') {
                    Some((key, value)) => {
                        if let Err(issue) = spec.set(key.trim(), value.trim()) {
                            issues.push(issue);
                        }
                    }
                    None => issues.push(FieldIssue::new(
                        format!("line {}", i + 1),
                        "expected `key = value`",
                    )),
                }
            }
        }
        if issues.is_empty() {
            Ok(spec)
        } else {
            Err(McError::InvalidSpec(issues))
        }
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), FieldIssue> {
        let count = |v: &str| {
            v.parse::<usize>().map_err(|_| {
                FieldIssue::new(key, format!("expected a non-negative integer, got {v:?}"))
            })
        };
        match key {
            "seed" => {
                self.seed = Some(value.parse::<u64>().map_err(|_| {
                    FieldIssue::new(
                        key,
                        format!("expected a 64-bit unsigned integer, got {value:?}"),
                    )
                })?)
            }
            "n" => self.n_samples = Some(count(value)?),
            "r" => self.n_replications = Some(count(value)?),
            "expr" => self.expression = Some(value.to_owned()),
            _ => match key.strip_prefix("dist.") {
                Some(name) => {
                    self.distributions.insert(name.to_owned(), value.to_owned());
                }
                None => return Err(FieldIssue::new(key, "unknown key")),
            },
        }
        Ok(())
    }

    /// Fields set in `other` replace ours; distributions merge by name.
    pub fn overlay(mut self, other: PartialSpec) -> PartialSpec {
        self.seed = other.seed.or(self.seed);
        self.n_samples = other.n_samples.or(self.n_samples);
        self.n_replications = other.n_replications.or(self.n_replications);
        self.expression = other.expression.or(self.expression);
        self.distributions.extend(other.distributions);
        self
    }

    pub fn into_spec(self) -> Result<McSpec, McError> {
        let mut issues = Vec::new();
        let mut require = |field: &str, present: bool| {
            if !present {
                issues.push(FieldIssue::new(field, "missing"));
            }
        };
        require("seed", self.seed.is_some());
        require("n", self.n_samples.is_some());
        require("r", self.n_replications.is_some());
        require("expr", self.expression.is_some());
        let mut distributions = BTreeMap::new();
        for (name, text) in &self.distributions {
            match text.parse::<Distribution>() {
                Ok(d) => {
                    distributions.insert(name.clone(), d);
                }
                Err(msg) => issues.push(FieldIssue::new(format!("dist.{name}"), msg)),
            }
        }
        if !issues.is_empty() {
            return Err(McError::InvalidSpec(issues));
        }
        let spec = McSpec {
            seed: self.seed.unwrap_or_default(),
            n_samples: self.n_samples.unwrap_or_default(),
            n_replications: self.n_replications.unwrap_or_default(),
            distributions,
            expression: self.expression.unwrap_or_default(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl McSpec {
    /// Checks every field and returns the parsed expression.
    pub fn validate(&self) -> Result<Expr, McError> {
        let mut issues = Vec::new();
        if self.n_samples < 2 {
            issues.push(FieldIssue::new(
                "n",
                format!("must be at least 2, got {}", self.n_samples),
            ));
        }
        if self.n_replications < 1 {
            issues.push(FieldIssue::new("r", "must be at least 1, got 0"));
        }
        for (name, dist) in &self.distributions {
            let field = format!("dist.{name}");
            if !is_identifier(name) {
                issues.push(FieldIssue::new(
                    &field,
                    "variable name is not an identifier",
                ));
            }
            match dist {
                Distribution::Uniform { low, high } => {
                    if !(low.is_finite() && high.is_finite() && high > low) {
                        issues.push(FieldIssue::new(&field, "uniform(a, b) needs finite a < b"));
                    }
                }
                Distribution::Normal { mean, std_dev } => {
                    if !(mean.is_finite() && std_dev.is_finite() && *std_dev > 0.0) {
                        issues.push(FieldIssue::new(
                            &field,
                            "normal(mu, sigma) needs finite mu and sigma > 0",
                        ));
                    }
                }
                Distribution::Copy(of) => match self.distributions.get(of) {
                    None => issues.push(FieldIssue::new(
                        &field,
                        format!("copies undefined variable `{of}`"),
                    )),
                    Some(Distribution::Copy(_)) => {
                        issues.push(FieldIssue::new(&field, format!("`{of}` is itself a copy")))
                    }
                    Some(_) => {}
                },
            }
        }
        let expr = match parse(&self.expression) {
            Ok(e) => {
                for v in e.variables() {
                    if !self.distributions.contains_key(v) {
                        issues.push(FieldIssue::new(
                            format!("dist.{v}"),
                            "expression variable has no distribution",
                        ));
                    }
                }
                Some(e)
            }
            Err(err) => {
                issues.push(FieldIssue::new("expr", err.to_string()));
                None
            }
        };
        match expr {
            Some(e) if issues.is_empty() => Ok(e),
            _ => Err(McError::InvalidSpec(issues)),
        }
    }

    /// Simulated columns for replication `index`.
    pub fn sample(&self, index: usize) -> Dataset {
        let mut rng = Xoshiro256::from_seed(split(self.seed, index as u64));
        let n = self.n_samples;
        let mut drawn: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for (name, dist) in &self.distributions {
            let column = match *dist {
                Distribution::Uniform { low, high } => (0..n)
                    .map(|_| low + (high - low) * rng.next_f64())
                    .collect(),
                Distribution::Normal { mean, std_dev } => {
                    let mut col = Vec::with_capacity(n + 1);
                    while col.len() < n {
                        let (a, b) = rng.normal_pair();
                        col.push(mean + std_dev * a);
                        col.push(mean + std_dev * b);
                    }
                    col.truncate(n);
                    col
                }
                Distribution::Copy(_) => continue,
            };
            drawn.insert(name, column);
        }
        let columns = self.distributions.iter().map(|(name, dist)| {
            let values = match dist {
                Distribution::Copy(of) => drawn[of.as_str()].clone(),
                _ => drawn[name.as_str()].clone(),
            };
            (name.clone(), values)
        });
        Dataset::new(columns).expect("validated spec yields a valid dataset")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationResult {
    pub index: usize,
    pub seed: u64,
    pub classical_mean: f64,
    pub chen_mean: f64,
    /// `classical_mean - chen_mean`
    pub mean_gap: f64,
    pub classical_variance: f64,
    pub chen_variance: f64,
    pub variance_gap: f64,
}

/// Summary of `mean_gap` over all replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub mean_gap: f64,
    /// Sample standard deviation; absent for a single replication.
    pub gap_std_dev: Option<f64>,
    pub min_gap: f64,
    pub max_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub seed: u64,
    pub n_samples: usize,
    pub n_replications: usize,
    pub expression: String,
    pub distributions: BTreeMap<String, String>,
    pub replications: Vec<ReplicationResult>,
    pub aggregate: Aggregate,
}

fn run_replication(
    spec: &McSpec,
    expr: &Expr,
    index: usize,
) -> Result<ReplicationResult, StatError> {
    let d = spec.sample(index);
    let classical_mean = composite_mean(expr, &d)?;
    let chen_mean = chen_mean(expr, &d)?;
    let classical_variance = composite_variance(expr, &d)?;
    let chen_variance = chen_variance(expr, &d)?;
    Ok(ReplicationResult {
        index,
        seed: split(spec.seed, index as u64),
        classical_mean,
        chen_mean,
        mean_gap: classical_mean - chen_mean,
        classical_variance,
        chen_variance,
        variance_gap: classical_variance - chen_variance,
    })
}

/// Runs every replication (in parallel) and aggregates in index order.
pub fn monte_carlo_compare(spec: &McSpec) -> Result<McReport, McError> {
    let expr = spec.validate()?;
    let outcomes: Vec<_> = (0..spec.n_replications)
        .into_par_iter()
        .map(|index| run_replication(spec, &expr, index))
        .collect();
    let mut replications = Vec::with_capacity(outcomes.len());
    for (index, outcome) in outcomes.into_iter().enumerate() {
        replications.push(outcome.map_err(|source| McError::Replication { index, source })?);
    }
    let gaps: Vec<f64> = replications.iter().map(|r| r.mean_gap).collect();
    let stats = MarginalStats::of(&gaps).expect("at least one replication");
    Ok(McReport {
        seed: spec.seed,
        n_samples: spec.n_samples,
        n_replications: spec.n_replications,
        expression: expr.to_string(),
        distributions: spec
            .distributions
            .iter()
            .map(|(k, v)| (k.clone(), v.to_string()))
            .collect(),
        replications,
        aggregate: Aggregate {
            mean_gap: stats.mean,
            gap_std_dev: stats.variance.map(f64::sqrt),
            min_gap: stats.min,
            max_gap: stats.max,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(r: usize) -> McSpec {
        McSpec {
            seed: 7,
            n_samples: 500,
            n_replications: r,
            distributions: BTreeMap::from([
                (
                    "x".to_string(),
                    Distribution::Uniform {
                        low: 0.0,
                        high: 1.0,
                    },
                ),
                (
                    "y".to_string(),
                    Distribution::Normal {
                        mean: 1.0,
                        std_dev: 2.0,
                    },
                ),
            ]),
            expression: "x*y".into(),
        }
    }

    #[test]
    fn distribution_syntax() {
        assert_eq!(
            "uniform(0, 1)".parse(),
            Ok(Distribution::Uniform {
                low: 0.0,
                high: 1.0
            })
        );
        assert_eq!(
            " normal(-1.5,2) ".parse(),
            Ok(Distribution::Normal {
                mean: -1.5,
                std_dev: 2.0
            })
        );
        assert_eq!("copy(x)".parse(), Ok(Distribution::Copy("x".into())));
        assert!("gamma(1,2)".parse::<Distribution>().is_err());
        assert!("uniform(1)".parse::<Distribution>().is_err());
        assert!("uniform(0,1".parse::<Distribution>().is_err());
    }

    #[test]
    fn rejects_bad_fields() {
        let mut s = spec(0);
        s.n_samples = 1;
        s.distributions.insert(
            "z".into(),
            Distribution::Uniform {
                low: 1.0,
                high: 1.0,
            },
        );
        s.distributions.insert(
            "w".into(),
            Distribution::Normal {
                mean: 0.0,
                std_dev: 0.0,
            },
        );
        s.distributions
            .insert("c".into(), Distribution::Copy("q".into()));
        match s.validate() {
            Err(McError::InvalidSpec(issues)) => {
                let fields: Vec<_> = issues.iter().map(|i| i.field.as_str()).collect();
                for f in ["n", "r", "dist.z", "dist.w", "dist.c"] {
                    assert!(fields.contains(&f), "{f} missing from {fields:?}");
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_distribution_and_bad_expr() {
        let mut s = spec(1);
        s.expression = "x*q".into();
        assert!(matches!(s.validate(), Err(McError::InvalidSpec(i)) if i[0].field == "dist.q"));
        s.expression = "x*".into();
        assert!(matches!(s.validate(), Err(McError::InvalidSpec(i)) if i[0].field == "expr"));
    }

    #[test]
    fn normal_columns_use_pairs() {
        let mut s = spec(1);
        s.n_samples = 3;
        s.distributions = BTreeMap::from([(
            "y".to_string(),
            Distribution::Normal {
                mean: 0.0,
                std_dev: 1.0,
            },
        )]);
        let d = s.sample(0);
        let mut rng = Xoshiro256::from_seed(split(7, 0));
        let (a, b) = rng.normal_pair();
        let (c, _) = rng.normal_pair();
        assert_eq!(d.column("y").unwrap(), [a, b, c]);
    }

    #[test]
    fn copy_is_row_identical() {
        let mut s = spec(1);
        s.distributions
            .insert("y".into(), Distribution::Copy("x".into()));
        let d = s.sample(0);
        assert_eq!(d.column("x"), d.column("y"));
    }

    #[test]
    fn replications_are_prefix_stable() {
        let short = monte_carlo_compare(&spec(3)).unwrap();
        let long = monte_carlo_compare(&spec(4)).unwrap();
        assert_eq!(short.replications[..], long.replications[..3]);
        assert_eq!(monte_carlo_compare(&spec(3)).unwrap(), short);
        assert!(short.aggregate.gap_std_dev.is_some());
        assert!(short.aggregate.min_gap <= short.aggregate.mean_gap);
        assert!(short.aggregate.mean_gap <= short.aggregate.max_gap);
    }

    #[test]
    fn non_finite_replication_is_reported() {
        let mut s = spec(2);
        s.expression = "log(y - 100)".into();
        assert!(matches!(
            monte_carlo_compare(&s),
            Err(McError::Replication { index: 0, .. })
        ));
    }

    #[test]
    fn key_value_and_json_specs_agree() {
        let kv = "# demo\nseed = 42\nn = 1000\nr = 2\ndist.x = uniform(0, 1)\ndist.y = uniform(0,1)\nexpr = x*y\n";
        let json = r#"{"seed": 42, "n": 1000, "r": 2, "dist.x": "uniform(0, 1)", "dist.y": "uniform(0,1)", "expr": "x*y"}"#;
        let a = PartialSpec::parse(kv).unwrap().into_spec().unwrap();
        let b = PartialSpec::parse(json).unwrap().into_spec().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seed, 42);
        assert_eq!(a.n_replications, 2);
    }

    #[test]
    fn spec_file_errors() {
        assert!(matches!(
            PartialSpec::parse("seed = abc\nfoo = 1\nnonsense"),
            Err(McError::InvalidSpec(i)) if i.len() == 3
        ));
        assert!(matches!(
            PartialSpec::parse(r#"{"seed": [1]}"#),
            Err(McError::InvalidSpec(_))
        ));
        let missing = PartialSpec::default().into_spec().unwrap_err();
        assert!(matches!(missing, McError::InvalidSpec(i) if i.len() == 4));
    }

    #[test]
    fn overlay_prefers_later_fields() {
        let base = PartialSpec::parse("seed = 1\nn = 10\ndist.x = uniform(0,1)").unwrap();
        let mut flags = PartialSpec::default();
        flags.set("seed", "9").unwrap();
        flags.set("dist.y", "copy(x)").unwrap();
        let merged = base.overlay(flags);
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.n_samples, Some(10));
        assert_eq!(merged.distributions.len(), 2);
    }
}
