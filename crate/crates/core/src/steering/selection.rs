use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SelectionPolicy, SteeringConfig};
use crate::clustering::{
    best_partition_in, linkage, BehaviorMatrix, Criterion, Dendrogram, Pairwise, Partition,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedCluster {
    /// Cluster label within the partition.
    pub label: usize,
    pub silhouette: f64,
    /// 0 for the best cluster of its tree.
    pub rank: usize,
}

/// Ranks a partition's clusters by mean silhouette (descending, lower label
/// first on ties) and keeps those allowed by `policy`. The best-ranked
/// cluster is always kept.
pub fn select_clusters(partition: &Partition, policy: SelectionPolicy) -> Vec<RankedCluster> {
    let mut ranked: Vec<(usize, f64)> = partition
        .per_cluster_silhouette
        .iter()
        .map(|(&l, &s)| (l, s))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let keep = match policy {
        SelectionPolicy::TopN(n) => n.min(ranked.len()),
        SelectionPolicy::AboveTreeAverage => ranked
            .iter()
            .filter(|(_, s)| *s > partition.mean_silhouette)
            .count(),
    }
    .max(1);
    ranked
        .into_iter()
        .take(keep)
        .enumerate()
        .map(|(rank, (label, silhouette))| RankedCluster {
            label,
            silhouette,
            rank,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedCluster {
    pub members: Vec<String>,
    pub silhouette: f64,
    pub rank: usize,
}

/// Kept clusters of every class, members given by object id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSelection {
    pub policy: SelectionPolicy,
    pub classes: BTreeMap<String, Vec<SelectedCluster>>,
}

/// Everything derived from one class's training objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTree {
    pub tree: Dendrogram,
    pub partition: Partition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAnalysis {
    pub trees: BTreeMap<String, ClassTree>,
    pub selection: ClusterSelection,
}

/// Minimum training objects per class for a tree to have a cut.
pub const MIN_CLASS_SIZE: usize = 3;

/// Per-class trees over class-grouped behavior distances, silhouette-best
/// cuts, and the clusters kept from each cut. Training objects are the
/// columns of `behavior`; each must also be a row.
pub fn analyze_classes(behavior: &BehaviorMatrix, config: &SteeringConfig) -> Result<ClassAnalysis> {
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (j, label) in behavior.column_labels.iter().enumerate() {
        by_class.entry(label.as_str()).or_default().push(j);
    }
    if by_class.len() < 2 {
        log::warn!("steering over a single class");
    }
    let classes: Vec<(&str, Vec<usize>)> = by_class.into_iter().collect();
    let results = classes
        .par_iter()
        .map(|(class, cols)| {
            if cols.len() < MIN_CLASS_SIZE {
                return Err(Error::ClassTooSmall {
                    class: class.to_string(),
                    size: cols.len(),
                    required: MIN_CLASS_SIZE,
                });
            }
            let ids: Vec<String> = cols.iter().map(|&j| behavior.column_ids[j].clone()).collect();
            let rows = ids
                .iter()
                .map(|id| {
                    behavior
                        .row_index(id)
                        .map(|i| behavior.row(i))
                        .ok_or_else(|| Error::InvalidInput(format!("training object {id} has no row")))
                })
                .collect::<Result<Vec<_>>>()?;
            // the grouped distance is symmetric, so E_k needs no averaging
            let map = &behavior.class_index_map;
            let e_k = Pairwise::from_rows(&rows, |p, q| {
                map.grouped_distance(p, q).expect("rows share the column layout")
            });
            let mut tree = linkage(&e_k.condensed(), Criterion::Ward)?;
            tree.leaves = ids.clone();
            let partition = best_partition_in(&tree, &e_k, config.silhouette_space)?;
            let kept = select_clusters(&partition, config.policy);
            let clusters = partition.clusters();
            let selected = kept
                .iter()
                .map(|rc| SelectedCluster {
                    members: clusters[&rc.label].iter().map(|&i| ids[i].clone()).collect(),
                    silhouette: rc.silhouette,
                    rank: rc.rank,
                })
                .collect::<Vec<_>>();
            Ok((class.to_string(), ClassTree { tree, partition }, selected))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut trees = BTreeMap::new();
    let mut selected = BTreeMap::new();
    for (class, tree, kept) in results {
        selected.insert(class.clone(), kept);
        trees.insert(class, tree);
    }
    Ok(ClassAnalysis {
        trees,
        selection: ClusterSelection {
            policy: config.policy,
            classes: selected,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn partition(scores: &[f64], mean: f64) -> Partition {
        Partition {
            k: scores.len(),
            labels: (0..scores.len()).collect(),
            mean_silhouette: mean,
            per_cluster_silhouette: scores.iter().copied().enumerate().collect(),
        }
    }

    #[test]
    fn above_average_keeps_best() {
        let p = partition(&[0.3, 0.8, -0.1], 0.33);
        let kept = select_clusters(&p, SelectionPolicy::AboveTreeAverage);
        assert_eq!(kept.len(), 1);
        assert_eq!((kept[0].label, kept[0].silhouette, kept[0].rank), (1, 0.8, 0));
    }

    #[test]
    fn top_n_ranks() {
        let p = partition(&[0.3, 0.8, -0.1], 0.33);
        let kept = select_clusters(&p, SelectionPolicy::TopN(2));
        assert_eq!(kept.iter().map(|c| c.label).collect::<Vec<_>>(), vec![1, 0]);
        assert_eq!(select_clusters(&p, SelectionPolicy::TopN(10)).len(), 3);
    }

    #[test]
    fn floor_keeps_one() {
        let p = partition(&[0.3, 0.8, -0.1], 0.33);
        let kept = select_clusters(&p, SelectionPolicy::TopN(0));
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].label, 1);
        // equal scores: nothing strictly above the mean
        let flat = partition(&[0.2, 0.2], 0.2);
        assert_eq!(select_clusters(&flat, SelectionPolicy::AboveTreeAverage)[0].label, 0);
    }

    #[test]
    fn ties_rank_by_label() {
        let p = partition(&[0.5, 0.9, 0.5], 0.6);
        let kept = select_clusters(&p, SelectionPolicy::TopN(3));
        assert_eq!(kept.iter().map(|c| c.label).collect::<Vec<_>>(), vec![1, 0, 2]);
    }
}
