//! Univariate column scores for top-F feature selection.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreFunction {
    Anova,
    Chi2,
    MutualInfo,
}

pub const MI_BINS: usize = 16;

fn class_count(y: &[usize]) -> usize {
    y.iter().max().map_or(0, |m| m + 1)
}

/// One-way ANOVA F statistic of `x` grouped by `y`.
pub fn anova_f(x: &[f64], y: &[usize]) -> f64 {
    let k = class_count(y);
    let n = x.len();
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&v, &c) in x.iter().zip(y) {
        sums[c] += v;
        counts[c] += 1;
    }
    let groups = counts.iter().filter(|&&c| c > 0).count();
    if groups < 2 || n <= groups {
        return 0.0;
    }
    let grand = sums.iter().sum::<f64>() / n as f64;
    let between: f64 = (0..k)
        .filter(|&c| counts[c] > 0)
        .map(|c| counts[c] as f64 * (sums[c] / counts[c] as f64 - grand).powi(2))
        .sum();
    let within: f64 = x
        .iter()
        .zip(y)
        .map(|(&v, &c)| (v - sums[c] / counts[c] as f64).powi(2))
        .sum();
    let between = between / (groups - 1) as f64;
    let within = within / (n - groups) as f64;
    if within <= 0.0 {
        return if between > 0.0 { f64::INFINITY } else { 0.0 };
    }
    between / within
}

/// Chi-square of class totals of `x`, after min-max scaling `x` to [0, 1].
pub fn chi2(x: &[f64], y: &[usize]) -> f64 {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > 0.0) {
        return 0.0;
    }
    let k = class_count(y);
    let n = x.len() as f64;
    let mut observed = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&v, &c) in x.iter().zip(y) {
        observed[c] += (v - lo) / range;
        counts[c] += 1;
    }
    let total: f64 = observed.iter().sum();
    (0..k)
        .map(|c| {
            let expected = total * counts[c] as f64 / n;
            if expected > 0.0 {
                (observed[c] - expected).powi(2) / expected
            } else {
                0.0
            }
        })
        .sum()
}

/// Mutual information (nats) between `y` and `x` discretized into
/// [`MI_BINS`] equal-width bins.
pub fn mutual_info(x: &[f64], y: &[usize]) -> f64 {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let k = class_count(y);
    let n = x.len() as f64;
    let mut joint = vec![vec![0usize; k]; MI_BINS];
    for (&v, &c) in x.iter().zip(y) {
        let b = if range > 0.0 {
            (((v - lo) / range * MI_BINS as f64) as usize).min(MI_BINS - 1)
        } else {
            0
        };
        joint[b][c] += 1;
    }
    let py: Vec<f64> = (0..k).map(|c| joint.iter().map(|r| r[c]).sum::<usize>() as f64 / n).collect();
    let mut mi = 0.0;
    for row in &joint {
        let pb = row.iter().sum::<usize>() as f64 / n;
        for (c, &m) in row.iter().enumerate() {
            if m > 0 {
                let p = m as f64 / n;
                mi += p * (p / (pb * py[c])).ln();
            }
        }
    }
    mi.max(0.0)
}

pub fn score_columns(columns: &[Vec<f64>], y: &[usize], function: ScoreFunction) -> Vec<f64> {
    columns
        .iter()
        .map(|col| match function {
            ScoreFunction::Anova => anova_f(col, y),
            ScoreFunction::Chi2 => chi2(col, y),
            ScoreFunction::MutualInfo => mutual_info(col, y),
        })
        .collect()
}

/// Indices of the `f` highest scores, best first, lower index on ties. NaN
/// ranks last.
pub fn top_k(scores: &[f64], f: usize) -> Vec<usize> {
    let key = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| key(scores[b]).total_cmp(&key(scores[a])).then(a.cmp(&b)));
    order.truncate(f);
    order
}
