//! Pearson, Spearman and Kendall tau-b correlation.
//!
//! Undefined correlations (constant inputs, fewer than two points) are
//! errors, never a silent 0.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-system scores keyed by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl ScoreVector {
    pub fn new(labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: values.len(),
            });
        }
        let mut seen = HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::Contract(format!("duplicate label `{dup}`")));
        }
        Ok(Self { labels, values })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.values[i])
    }

    /// Pairs up the values of labels present in both vectors, in this
    /// vector's label order.
    pub fn align(&self, other: &ScoreVector) -> (Vec<String>, Vec<f64>, Vec<f64>) {
        let mut labels = Vec::new();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (label, &x) in self.labels.iter().zip(&self.values) {
            if let Some(y) = other.get(label) {
                labels.push(label.clone());
                xs.push(x);
                ys.push(y);
            }
        }
        (labels, xs, ys)
    }

    /// All three coefficients over the shared labels.
    pub fn correlate(&self, other: &ScoreVector) -> Result<CorrelationTriple> {
        let (_, x, y) = self.align(other);
        CorrelationTriple::compute(&x, &y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTriple {
    pub pearson: f64,
    pub spearman: f64,
    pub kendall: f64,
}

impl CorrelationTriple {
    pub fn compute(x: &[f64], y: &[f64]) -> Result<Self> {
        Ok(Self {
            pearson: pearson(x, y)?,
            spearman: spearman(x, y)?,
            kendall: kendall(x, y)?,
        })
    }
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least 2 observations, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Contract("correlation inputs must be finite".into()));
    }
    Ok(())
}

/// Product-moment correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_inputs(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("input has zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of the average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_inputs(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Kendall tau-b in O(n log n).
///
/// `(concordant − discordant) / √((n0 − n1)(n0 − n2))` where `n0` counts all
/// pairs and `n1`, `n2` the pairs tied in `x` and in `y`.
pub fn kendall(x: &[f64], y: &[f64]) -> Result<f64> {
    check_inputs(x, y)?;
    let n = x.len();
    let cmp_xy = |&a: &usize, &b: &usize| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b]));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(cmp_xy);

    let n0 = pairs(n);
    let mut tied_x = 0u64;
    let mut tied_xy = 0u64;
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x[a] == x[b] {
            run_x += 1;
            if y[a] == y[b] {
                run_xy += 1;
            } else {
                tied_xy += pairs_u(run_xy);
                run_xy = 1;
            }
        } else {
            tied_x += pairs_u(run_x);
            tied_xy += pairs_u(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    tied_x += pairs_u(run_x);
    tied_xy += pairs_u(run_xy);

    // stable merge sort on y counts the inversions = discordant pairs among
    // those not tied in x
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let (sorted_y, swaps) = merge_count(ys);

    let mut tied_y = 0u64;
    let mut run_y = 1u64;
    for w in sorted_y.windows(2) {
        if w[0] == w[1] {
            run_y += 1;
        } else {
            tied_y += pairs_u(run_y);
            run_y = 1;
        }
    }
    tied_y += pairs_u(run_y);

    if tied_x == n0 || tied_y == n0 {
        return Err(Error::UndefinedCorrelation("all pairs are tied on one side".into()));
    }
    let numerator = n0 as i64 - tied_x as i64 - tied_y as i64 + tied_xy as i64 - 2 * swaps as i64;
    let denom = ((n0 - tied_x) as f64 * (n0 - tied_y) as f64).sqrt();
    Ok((numerator as f64 / denom).clamp(-1.0, 1.0))
}

fn pairs(n: usize) -> u64 {
    pairs_u(n as u64)
}

fn pairs_u(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

fn merge_count(v: Vec<f64>) -> (Vec<f64>, u64) {
    if v.len() <= 1 {
        return (v, 0);
    }
    let mut v = v;
    let right = v.split_off(v.len() / 2);
    let (left, a) = merge_count(v);
    let (right, b) = merge_count(right);
    let mut merged = Vec::with_capacity(left.len() + right.len());
    let mut swaps = a + b;
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        if right[j].total_cmp(&left[i]) == Ordering::Less {
            merged.push(right[j]);
            swaps += (left.len() - i) as u64;
            j += 1;
        } else {
            merged.push(left[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&left[i..]);
    merged.extend_from_slice(&right[j..]);
    (merged, swaps)
}
