use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::{BehaviorMatrix, MatrixProvenance};
use crate::distances::DistanceMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    pub folds: Vec<Fold>,
}

/// Stratified, seeded K-fold split. Each class is shuffled and dealt
/// round-robin over the folds, continuing the deal where the previous class
/// stopped so fold sizes stay balanced overall.
pub fn make_folds(ids: &[String], labels: &[String], k: usize, seed: u64) -> Result<FoldPlan> {
    if ids.len() != labels.len() {
        return Err(Error::DimensionError {
            left: ids.len(),
            right: labels.len(),
        });
    }
    if k < 2 {
        return Err(Error::InvalidFold(format!("need at least 2 folds, got {k}")));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l.as_str()).or_default().push(i);
    }
    if let Some((class, members)) = by_class.iter().find(|(_, m)| m.len() < k) {
        return Err(Error::ClassTooSmall {
            class: class.to_string(),
            size: members.len(),
            required: k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; ids.len()];
    let mut deal = 0usize;
    for members in by_class.values() {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        for i in shuffled {
            fold_of[i] = deal % k;
            deal += 1;
        }
    }
    let folds = (0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..ids.len()).partition(|&i| fold_of[i] == f);
            Fold {
                train_ids: train.into_iter().map(|i| ids[i].clone()).collect(),
                test_ids: test.into_iter().map(|i| ids[i].clone()).collect(),
            }
        })
        .collect();
    Ok(FoldPlan {
        k,
        seed,
        stratified: true,
        folds,
    })
}

/// All rows of the matrix, restricted to the columns of `train_ids`, so no
/// sample is described by its distance to a test object.
pub fn mask_columns(matrix: &DistanceMatrix, train_ids: &[String]) -> Result<BehaviorMatrix> {
    if train_ids.is_empty() {
        return Err(Error::InvalidFold("empty training set".into()));
    }
    let wanted: HashSet<&str> = train_ids.iter().map(String::as_str).collect();
    if wanted.len() != train_ids.len() {
        return Err(Error::InvalidFold("duplicate training id".into()));
    }
    let cols: Vec<usize> = (0..matrix.len())
        .filter(|&j| wanted.contains(matrix.object_ids[j].as_str()))
        .collect();
    if cols.len() != train_ids.len() {
        let missing = train_ids
            .iter()
            .find(|id| matrix.index_of(id).is_none())
            .cloned()
            .unwrap_or_default();
        return Err(Error::InvalidFold(format!("training id {missing} is not in the matrix")));
    }
    let values = matrix
        .rows()
        .flat_map(|row| cols.iter().map(move |&j| row[j]))
        .collect();
    Ok(BehaviorMatrix::new(
        matrix.object_ids.clone(),
        matrix.labels.clone(),
        cols.iter().map(|&j| matrix.object_ids[j].clone()).collect(),
        cols.iter().map(|&j| matrix.labels[j].clone()).collect(),
        values,
    )?
    .with_provenance(Some(MatrixProvenance {
        measure: matrix.measure,
        codec: matrix.codec,
        row_stats: matrix.row_stats.clone(),
    })))
}
