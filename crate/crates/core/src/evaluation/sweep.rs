use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::{run_experiment, EvalReport, ExperimentOptions};
use super::folds::{make_folds, FoldPlan};
use super::methods::{Method, MethodConfig};
use crate::distances::DistanceMatrix;
use crate::error::Result;
use crate::steering::{Aggregate, ReferenceStrategy, SelectionPolicy, WeightingMode};
use crate::util::median;

/// All `size`-element subsets of `items`, in lexicographic order.
pub fn combinations<T: Clone>(items: &[T], size: usize) -> Vec<Vec<T>> {
    fn go<T: Clone>(items: &[T], size: usize, start: usize, cur: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < size - cur.len() {
                break;
            }
            cur.push(items[i].clone());
            go(items, size, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if size <= items.len() {
        go(items, size, 0, &mut Vec::new(), &mut out);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetResult {
    pub classes: Vec<String>,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSweep {
    pub results: Vec<SubsetResult>,
    /// Median mean-test-F1 over the subsets of each size.
    pub median_test_f1: BTreeMap<usize, f64>,
}

/// The rows and columns of the matrix belonging to `classes`.
pub fn restrict_classes(matrix: &DistanceMatrix, classes: &[String]) -> Result<DistanceMatrix> {
    let ids: Vec<String> = matrix
        .object_ids
        .iter()
        .zip(&matrix.labels)
        .filter(|(_, l)| classes.contains(l))
        .map(|(id, _)| id.clone())
        .collect();
    matrix.subset(&ids)
}

/// Reruns the experiment on every subset of the matrix's classes whose size
/// is in `sizes`, with fresh folds of each subset.
pub fn class_subset_sweep(
    matrix: &DistanceMatrix,
    config: &MethodConfig,
    sizes: &[usize],
    k: usize,
    fold_seed: u64,
    options: &ExperimentOptions,
) -> Result<SubsetSweep> {
    let mut classes = matrix.labels.clone();
    classes.sort();
    classes.dedup();
    let subsets: Vec<Vec<String>> = sizes.iter().flat_map(|&s| combinations(&classes, s)).collect();
    let results = subsets
        .into_par_iter()
        .map(|subset| {
            let sub = restrict_classes(matrix, &subset)?;
            let plan = make_folds(&sub.object_ids, &sub.labels, k, fold_seed)?;
            Ok(SubsetResult {
                report: run_experiment(&sub, config, &plan, options)?,
                classes: subset,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut by_size: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in &results {
        by_size.entry(r.classes.len()).or_default().push(r.report.mean.test_f1);
    }
    Ok(SubsetSweep {
        results,
        median_test_f1: by_size.into_iter().map(|(s, v)| (s, median(&v))).collect(),
    })
}

/// Axes of a flat parameter sweep; an empty axis keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Grid {
    pub methods: Vec<Method>,
    pub policies: Vec<SelectionPolicy>,
    pub refs: Vec<usize>,
    pub strategies: Vec<ReferenceStrategy>,
    pub aggregates: Vec<Aggregate>,
    pub weightings: Vec<WeightingMode>,
    pub features: Vec<usize>,
    pub knn_k: Vec<usize>,
}

fn axis<T: Copy>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

impl Grid {
    /// Cartesian product of the axes around `base`, in a fixed order.
    pub fn expand(&self, base: &MethodConfig) -> Vec<MethodConfig> {
        let mut out = Vec::new();
        for method in axis(&self.methods, base.method) {
            for policy in axis(&self.policies, base.steering.policy) {
                for refs in axis(&self.refs, base.steering.refs) {
                    for strategy in axis(&self.strategies, base.steering.strategy) {
                        for aggregate in axis(&self.aggregates, base.steering.aggregate) {
                            for weighting in axis(&self.weightings, base.steering.weighting) {
                                for features in axis(&self.features, base.features) {
                                    for knn_k in axis(&self.knn_k, base.knn_k) {
                                        let mut c = *base;
                                        c.method = method;
                                        c.steering.policy = policy;
                                        c.steering.refs = refs;
                                        c.steering.strategy = strategy;
                                        c.steering.aggregate = aggregate;
                                        c.steering.weighting = weighting;
                                        c.features = features;
                                        c.knn_k = knn_k;
                                        out.push(c);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One report per configuration, in the order given.
pub fn grid_sweep(
    matrix: &DistanceMatrix,
    configs: &[MethodConfig],
    plan: &FoldPlan,
    options: &ExperimentOptions,
) -> Result<Vec<EvalReport>> {
    configs
        .par_iter()
        .map(|c| run_experiment(matrix, c, plan, options))
        .collect()
}
