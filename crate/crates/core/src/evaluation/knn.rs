use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::util::euclidean;

fn neighbours(train: &[Vec<f64>], row: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut d: Vec<(usize, f64)> = train.iter().enumerate().map(|(i, t)| (i, euclidean(t, row))).collect();
    d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    d.truncate(k);
    d
}

fn check(train: &[Vec<f64>], labels: &[String], test: &[Vec<f64>], k: usize) -> Result<usize> {
    if train.len() != labels.len() {
        return Err(Error::DimensionError {
            left: train.len(),
            right: labels.len(),
        });
    }
    if train.is_empty() || k == 0 {
        return Err(Error::InvalidCount {
            requested: k,
            available: train.len(),
        });
    }
    let d = train[0].len();
    for row in train.iter().chain(test) {
        if row.len() != d {
            return Err(Error::DimensionError {
                left: d,
                right: row.len(),
            });
        }
    }
    if k > train.len() {
        log::warn!("knn: k = {k} exceeds {} training rows, clipping", train.len());
    }
    Ok(k.min(train.len()))
}

/// Majority label among the `k` Euclidean-nearest training rows. Ties go to
/// the label with the smaller mean neighbour distance, then to the smaller
/// label.
pub fn knn_predict(train: &[Vec<f64>], labels: &[String], test: &[Vec<f64>], k: usize) -> Result<Vec<String>> {
    let k = check(train, labels, test, k)?;
    Ok(test
        .iter()
        .map(|row| {
            let mut tally: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
            for (i, d) in neighbours(train, row, k) {
                let e = tally.entry(labels[i].as_str()).or_default();
                e.0 += 1;
                e.1 += d;
            }
            tally
                .into_iter()
                .min_by(|a, b| {
                    let (ca, sa) = a.1;
                    let (cb, sb) = b.1;
                    cb.cmp(&ca)
                        .then((sa / ca as f64).total_cmp(&(sb / cb as f64)))
                        .then(a.0.cmp(b.0))
                })
                .map(|(l, _)| l.to_string())
                .unwrap()
        })
        .collect())
}

/// Neighbour vote fractions over `classes`.
pub fn knn_proba(
    train: &[Vec<f64>],
    labels: &[String],
    test: &[Vec<f64>],
    k: usize,
    classes: &[String],
) -> Result<Vec<Vec<f64>>> {
    let k = check(train, labels, test, k)?;
    Ok(test
        .iter()
        .map(|row| {
            let mut p = vec![0.0; classes.len()];
            for (i, _) in neighbours(train, row, k) {
                if let Some(c) = classes.iter().position(|c| *c == labels[i]) {
                    p[c] += 1.0 / k as f64;
                }
            }
            p
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn nearest_row_wins_at_k1() {
        let train = vec![vec![0.0], vec![5.0], vec![9.0]];
        let labels = s(&["a", "b", "c"]);
        assert_eq!(knn_predict(&train, &labels, &[vec![5.0]], 1).unwrap(), s(&["b"]));
    }

    #[test]
    fn tie_by_mean_distance_then_label() {
        let train = vec![vec![1.0], vec![-3.0], vec![10.0], vec![-10.0]];
        let labels = s(&["b", "a", "a", "b"]);
        // k = 2: one b at 1, one a at 3 -> b closer
        assert_eq!(knn_predict(&train, &labels, &[vec![0.0]], 2).unwrap(), s(&["b"]));
        let train = vec![vec![1.0], vec![-1.0]];
        assert_eq!(knn_predict(&train, &s(&["b", "a"]), &[vec![0.0]], 2).unwrap(), s(&["a"]));
    }

    #[test]
    fn k_clipped_and_dimension_checked() {
        let train = vec![vec![0.0], vec![1.0], vec![1.1]];
        let labels = s(&["a", "b", "b"]);
        assert_eq!(knn_predict(&train, &labels, &[vec![0.0]], 10).unwrap(), s(&["b"]));
        assert!(matches!(
            knn_predict(&train, &labels, &[vec![0.0, 1.0]], 1),
            Err(Error::DimensionError { .. })
        ));
    }
}
