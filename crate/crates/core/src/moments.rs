//! Batch moments shared by marginal and composite statistics.
//!
//! Every batch sum runs left to right over the values in ascending
//! `total_cmp` order. Any permutation of a sample therefore produces the same
//! bits, and a column and the identity-expression samples built from it give
//! identical results.

pub(crate) fn sorted(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    out.sort_by(f64::total_cmp);
    out
}

fn is_constant(sorted: &[f64]) -> bool {
    sorted.first().map(|v| v.to_bits()) == sorted.last().map(|v| v.to_bits())
}

/// Mean of an ascending sample. `None` when empty.
pub(crate) fn mean_sorted(sorted: &[f64]) -> Option<f64> {
    let first = *sorted.first()?;
    if is_constant(sorted) {
        return Some(first);
    }
    let sum: f64 = sorted.iter().sum();
    Some(sum / sorted.len() as f64)
}

/// Denominator `n - 1` two-pass variance of an ascending sample around `mean`.
/// `None` when fewer than two values.
///
/// The second pass subtracts `(sum d)^2 / n`, which removes the first-order
/// effect of rounding error in `mean`.
pub(crate) fn variance_sorted(sorted: &[f64], mean: f64) -> Option<f64> {
    let n = sorted.len();
    if n < 2 {
        return None;
    }
    if is_constant(sorted) {
        return Some(0.0);
    }
    let (sum_d, sum_d2) = sorted.iter().fold((0.0, 0.0), |(s, s2), &x| {
        let d = mean - x;
        (s + d, s2 + d * d)
    });
    let nf = n as f64;
    Some(((sum_d2 - sum_d * sum_d / nf) / (nf - 1.0)).max(0.0))
}

/// Median of an ascending sample; even length takes the midpoint.
pub(crate) fn median_sorted(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    if n == 0 {
        return None;
    }
    if n % 2 == 1 {
        return Some(sorted[n / 2]);
    }
    let (lo, hi) = (sorted[n / 2 - 1], sorted[n / 2]);
    let mid = (lo + hi) / 2.0;
    Some(if mid.is_finite() {
        mid
    } else {
        lo / 2.0 + hi / 2.0
    })
}

/// Most frequent exact (bitwise) value; smallest wins ties. `None` when no
/// value repeats.
pub(crate) fn mode_sorted(sorted: &[f64]) -> Option<f64> {
    let mut best: Option<(f64, usize)> = None;
    for run in sorted.chunk_by(|a, b| a.to_bits() == b.to_bits()) {
        if run.len() > 1 && best.is_none_or(|(_, count)| run.len() > count) {
            best = Some((run[0], run.len()));
        }
    }
    best.map(|(value, _)| value)
}
