//! Ordinary sample statistics of pointwise-evaluated expressions, plus a
//! mergeable one-pass accumulator for mean and variance.

use serde::Serialize;

use crate::dataset::{Dataset, MarginalStats};
use crate::error::StatError;
use crate::expr::Expr;
use crate::moments;

/// Resolves every variable of `e` to a column of `d`, in `variables()` order.
pub(crate) fn bind_columns<'d>(
    e: &Expr,
    d: &'d Dataset,
) -> Result<Vec<(String, &'d [f64])>, StatError> {
    e.variables()
        .into_iter()
        .map(|name| {
            d.column(name)
                .map(|col| (name.to_owned(), col))
                .ok_or_else(|| StatError::UnboundVariable(name.to_owned()))
        })
        .collect()
}

/// `e` evaluated on each row of `d`.
pub fn composite_samples(e: &Expr, d: &Dataset) -> Result<Vec<f64>, StatError> {
    let bound = bind_columns(e, d)?;
    (0..d.n_rows())
        .map(|row| {
            let lookup = |name: &str| {
                bound
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, col)| col[row])
            };
            let v = e.eval_with(&lookup)?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(StatError::NonFiniteResult { row: Some(row) })
            }
        })
        .collect()
}

/// Summary of the composite sample: mean, variance, median and mode taken
/// classically over the pointwise values.
pub fn composite_stats(e: &Expr, d: &Dataset) -> Result<MarginalStats, StatError> {
    let samples = composite_samples(e, d)?;
    Ok(MarginalStats::of(&samples).expect("datasets are nonempty"))
}

pub fn composite_mean(e: &Expr, d: &Dataset) -> Result<f64, StatError> {
    let samples = moments::sorted(&composite_samples(e, d)?);
    Ok(moments::mean_sorted(&samples).expect("datasets are nonempty"))
}

pub fn composite_variance(e: &Expr, d: &Dataset) -> Result<f64, StatError> {
    if d.n_rows() < 2 {
        return Err(StatError::InsufficientSamples {
            needed: 2,
            got: d.n_rows(),
        });
    }
    let samples = moments::sorted(&composite_samples(e, d)?);
    let mean = moments::mean_sorted(&samples).expect("datasets are nonempty");
    Ok(moments::variance_sorted(&samples, mean).expect("n >= 2"))
}

/// Sample covariance with denominator `n - 1`, summed in row order.
pub fn covariance(d: &Dataset, a: &str, b: &str) -> Result<f64, StatError> {
    let col = |name: &str| {
        d.column(name)
            .ok_or_else(|| StatError::UnknownColumn(name.to_owned()))
    };
    let (xs, ys) = (col(a)?, col(b)?);
    let n = d.n_rows();
    if n < 2 {
        return Err(StatError::InsufficientSamples { needed: 2, got: n });
    }
    let mean = |v: &[f64]| moments::mean_sorted(&moments::sorted(v)).expect("nonempty");
    let (mx, my) = (mean(xs), mean(ys));
    let sum: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sum / (n - 1) as f64)
}

/// One-pass mean and variance: Welford's update and the Chan et al. merge,
/// applied to deviations from the first value seen (`shift`). The shift keeps
/// the running mean small, so values sharing a large common offset keep
/// their full precision.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StreamingAccumulator {
    count: u64,
    shift: f64,
    /// mean of `value - shift`
    mean: f64,
    m2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamSummary {
    pub n: u64,
    pub mean: Option<f64>,
    pub variance: Option<f64>,
}

impl StreamingAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn running_mean(&self) -> Option<f64> {
        (self.count > 0).then_some(self.shift + self.mean)
    }

    /// Sum of squared deviations from the running mean.
    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn push(&mut self, value: f64) {
        if self.count == 0 {
            self.shift = value;
        }
        self.count += 1;
        let x = value - self.shift;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &StreamingAccumulator) -> StreamingAccumulator {
        if other.count == 0 {
            return *self;
        }
        if self.count == 0 {
            return *other;
        }
        let count = self.count + other.count;
        let (na, nb, n) = (self.count as f64, other.count as f64, count as f64);
        let delta = (other.shift - self.shift) + (other.mean - self.mean);
        StreamingAccumulator {
            count,
            shift: self.shift,
            mean: self.mean + delta * (nb / n),
            m2: self.m2 + other.m2 + delta * delta * (na * nb / n),
        }
    }

    pub fn finalize(&self) -> StreamSummary {
        StreamSummary {
            n: self.count,
            mean: self.running_mean(),
            variance: (self.count > 1).then(|| self.m2 / (self.count - 1) as f64),
        }
    }
}

impl Extend<f64> for StreamingAccumulator {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.push(v);
        }
    }
}

impl FromIterator<f64> for StreamingAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = StreamingAccumulator::new();
        acc.extend(iter);
        acc
    }
}
