use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::linkage::Dendrogram;
use super::Pairwise;
use crate::error::{Error, Result};

/// Flat clustering obtained by cutting a dendrogram into `k` clusters.
/// Labels are numbered by first appearance in leaf order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    pub k: usize,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub k: usize,
    pub labels: Vec<usize>,
    pub mean_silhouette: f64,
    pub per_cluster_silhouette: BTreeMap<usize, f64>,
}

impl Partition {
    /// Leaf indices of each cluster, by cluster label.
    pub fn clusters(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in self.labels.iter().enumerate() {
            out.entry(l).or_default().push(i);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteScores {
    pub mean: f64,
    pub per_sample: Vec<f64>,
    pub per_cluster: BTreeMap<usize, f64>,
}

/// Which distances score a candidate cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SilhouetteSpace {
    /// The distances the tree was built from.
    #[default]
    Feature,
    /// Merge heights of the tree itself.
    Cophenetic,
}

/// Labels after applying the first `n - k` merges.
fn cut_at(tree: &Dendrogram, k: usize) -> Vec<usize> {
    let n = tree.n_leaves();
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (s, m) in tree.merges.iter().take(n - k).enumerate() {
        let (a, b) = (find(&mut parent, m.left), find(&mut parent, m.right));
        parent[a] = n + s;
        parent[b] = n + s;
    }
    let mut relabel: BTreeMap<usize, usize> = BTreeMap::new();
    (0..n)
        .map(|leaf| {
            let root = find(&mut parent, leaf);
            let next = relabel.len();
            *relabel.entry(root).or_insert(next)
        })
        .collect()
}

/// One cut per cluster count `k = 2..=n-1`, in increasing `k`.
pub fn enumerate_partitions(tree: &Dendrogram) -> Result<Vec<Cut>> {
    let n = tree.n_leaves();
    if n < 3 {
        return Err(Error::TooFewLeaves(n));
    }
    Ok((2..n).map(|k| Cut { k, labels: cut_at(tree, k) }).collect())
}

/// Silhouette coefficients under a precomputed distance matrix. Members of
/// singleton clusters score 0.
pub fn silhouette(labels: &[usize], pairwise: &Pairwise) -> Result<SilhouetteScores> {
    let n = labels.len();
    if pairwise.len() != n {
        return Err(Error::DimensionError {
            left: n,
            right: pairwise.len(),
        });
    }
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        return Err(Error::UndefinedSilhouette);
    }
    let slot = |l: usize| ids.binary_search(&l).unwrap();
    let mut counts = vec![0usize; ids.len()];
    for &l in labels {
        counts[slot(l)] += 1;
    }

    let mut per_sample = vec![0.0; n];
    let mut sums = vec![0.0; ids.len()];
    for i in 0..n {
        let own = slot(labels[i]);
        if counts[own] > 1 {
            sums.iter_mut().for_each(|s| *s = 0.0);
            for j in 0..n {
                if j != i {
                    sums[slot(labels[j])] += pairwise.get(i, j);
                }
            }
            let a = sums[own] / (counts[own] - 1) as f64;
            let b = (0..ids.len())
                .filter(|&c| c != own)
                .map(|c| sums[c] / counts[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            per_sample[i] = if denom > 0.0 { (b - a) / denom } else { 0.0 };
        }
    }
    let mut per_cluster = BTreeMap::new();
    for (c, &l) in ids.iter().enumerate() {
        let total: f64 = (0..n).filter(|&i| labels[i] == l).map(|i| per_sample[i]).sum();
        per_cluster.insert(l, total / counts[c] as f64);
    }
    Ok(SilhouetteScores {
        mean: per_sample.iter().sum::<f64>() / n as f64,
        per_sample,
        per_cluster,
    })
}

/// The cut with the highest mean silhouette, scored on `pairwise`; ties go to
/// the smaller `k`.
pub fn best_partition(tree: &Dendrogram, pairwise: &Pairwise) -> Result<Partition> {
    best_partition_in(tree, pairwise, SilhouetteSpace::Feature)
}

pub fn best_partition_in(
    tree: &Dendrogram,
    pairwise: &Pairwise,
    space: SilhouetteSpace,
) -> Result<Partition> {
    let n = tree.n_leaves();
    let cophenetic;
    let scoring = match space {
        SilhouetteSpace::Feature => pairwise,
        SilhouetteSpace::Cophenetic => {
            cophenetic = Pairwise::from_square(n, &tree.cophenetic())?;
            &cophenetic
        }
    };
    let mut best: Option<Partition> = None;
    for cut in enumerate_partitions(tree)? {
        let scores = silhouette(&cut.labels, scoring)?;
        if best.as_ref().map_or(true, |b| scores.mean > b.mean_silhouette) {
            best = Some(Partition {
                k: cut.k,
                labels: cut.labels,
                mean_silhouette: scores.mean,
                per_cluster_silhouette: scores.per_cluster,
            });
        }
    }
    Ok(best.expect("n >= 3 yields at least one cut"))
}
