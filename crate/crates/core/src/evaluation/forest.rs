//! Bagged Gini decision trees.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Candidate features per split; `None` means ceil(sqrt(d)).
    pub max_features: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_features: None,
            min_leaf: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_classes: usize,
    pub n_features: usize,
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// `y` holds class indices below `n_classes`. Tree `t` draws from its own
    /// generator (stream `t` of the seed), so the forest does not depend on
    /// how trees are scheduled.
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, config: &ForestConfig) -> Result<RandomForest> {
        if x.len() != y.len() {
            return Err(Error::DimensionError {
                left: x.len(),
                right: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::InvalidInput("no training samples".into()));
        }
        let d = x[0].len();
        if d == 0 {
            return Err(Error::InvalidInput("feature dimension is 0".into()));
        }
        if let Some(row) = x.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionError {
                left: d,
                right: row.len(),
            });
        }
        if y.iter().any(|&c| c >= n_classes) {
            return Err(Error::InvalidInput("class index out of range".into()));
        }
        if y.iter().all(|&c| c == y[0]) {
            return Err(Error::DegenerateLabels);
        }
        let mtry = config
            .max_features
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
            .clamp(1, d);
        let trees = (0..config.n_trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(t as u64);
                let sample: Vec<usize> = (0..x.len()).map(|_| rng.gen_range(0..x.len())).collect();
                grow(x, y, n_classes, sample, mtry, config.min_leaf.max(1), &mut rng)
            })
            .collect();
        Ok(RandomForest {
            n_classes,
            n_features: d,
            trees,
        })
    }

    /// Fraction of trees voting for each class.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1.0;
        }
        let n = self.trees.len() as f64;
        votes.iter_mut().for_each(|v| *v /= n);
        votes
    }

    /// Most voted class, lowest index on ties.
    pub fn predict(&self, x: &[f64]) -> usize {
        let p = self.predict_proba(x);
        crate::util::argmax(&p).unwrap_or(0)
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

fn grow(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    sample: Vec<usize>,
    mtry: usize,
    min_leaf: usize,
    rng: &mut ChaCha8Rng,
) -> DecisionTree {
    let d = x[0].len();
    let mut nodes = vec![Node::Leaf { class: 0 }];
    let mut stack = vec![(0usize, sample)];
    let mut features: Vec<usize> = (0..d).collect();
    while let Some((slot, idx)) = stack.pop() {
        let mut counts = vec![0usize; n_classes];
        for &i in &idx {
            counts[y[i]] += 1;
        }
        let class = majority(&counts);
        if counts[class] == idx.len() || idx.len() < 2 * min_leaf {
            nodes[slot] = Node::Leaf { class };
            continue;
        }
        // Visit features in random order; the first `mtry` are the candidates,
        // later ones are tried only while no valid split has been found.
        features.shuffle(rng);
        let mut best: Option<BestSplit> = None;
        for (visited, &f) in features.iter().enumerate() {
            if visited >= mtry && best.is_some() {
                break;
            }
            if let Some(s) = best_split_on(x, y, &idx, f, n_classes, min_leaf) {
                if best.as_ref().map_or(true, |b| s.score < b.score) {
                    best = Some(s);
                }
            }
        }
        match best {
            None => nodes[slot] = Node::Leaf { class },
            Some(s) => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][s.feature] <= s.threshold);
                let left = nodes.len();
                nodes.push(Node::Leaf { class: 0 });
                let right = nodes.len();
                nodes.push(Node::Leaf { class: 0 });
                nodes[slot] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                };
                stack.push((right, r));
                stack.push((left, l));
            }
        }
    }
    DecisionTree { nodes }
}

/// Lowest weighted Gini split on one feature, thresholds at midpoints
/// between consecutive distinct values.
fn best_split_on(
    x: &[Vec<f64>],
    y: &[usize],
    idx: &[usize],
    f: usize,
    n_classes: usize,
    min_leaf: usize,
) -> Option<BestSplit> {
    let mut order: Vec<usize> = idx.to_vec();
    order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
    let n = order.len();
    let mut right = vec![0usize; n_classes];
    for &i in &order {
        right[y[i]] += 1;
    }
    let mut left = vec![0usize; n_classes];
    let mut best: Option<BestSplit> = None;
    for k in 0..n - 1 {
        let c = y[order[k]];
        left[c] += 1;
        right[c] -= 1;
        let (lo, hi) = (x[order[k]][f], x[order[k + 1]][f]);
        if lo == hi || k + 1 < min_leaf || n - k - 1 < min_leaf {
            continue;
        }
        let nl = k + 1;
        let nr = n - nl;
        let score = nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr);
        if best.as_ref().map_or(true, |b| score < b.score) {
            let mut threshold = lo + (hi - lo) / 2.0;
            if threshold >= hi {
                threshold = lo;
            }
            best = Some(BestSplit {
                feature: f,
                threshold,
                score,
            });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_a_threshold() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 0.0]).collect();
        let y: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let f = RandomForest::fit(&x, &y, 2, &ForestConfig::default()).unwrap();
        assert_eq!(f.predict(&[2.0, 0.0]), 0);
        assert_eq!(f.predict(&[17.0, 0.0]), 1);
        let p = f.predict_proba(&[17.0, 0.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_degenerate() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            RandomForest::fit(&x, &[1, 1], 2, &ForestConfig::default()),
            Err(Error::DegenerateLabels)
        ));
    }

    #[test]
    fn pure_bootstrap_grows_full_depth() {
        // xor needs two levels
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = vec![0, 1, 1, 0];
        let cfg = ForestConfig {
            n_trees: 1,
            max_features: Some(2),
            ..Default::default()
        };
        let f = RandomForest::fit(&x, &y, 2, &cfg).unwrap();
        assert!(f.trees()[0].depth() <= 3);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i * 7 % 13) as f64, (i % 5) as f64, i as f64]).collect();
        let y: Vec<usize> = (0..40).map(|i| (i * 3 % 7) % 3).collect();
        let cfg = ForestConfig {
            seed: 9,
            ..Default::default()
        };
        let fit_with = |w| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .unwrap()
                .install(|| RandomForest::fit(&x, &y, 3, &cfg).unwrap())
        };
        assert_eq!(fit_with(1), fit_with(4));
    }
}
