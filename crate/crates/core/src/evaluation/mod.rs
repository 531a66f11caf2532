//! Cross-validated scoring of steering contexts and baselines.
//!
//! Every fold sees only the distance columns of its training objects; the
//! classifier is a seeded random forest over the embedded features.

mod experiment;
mod folds;
pub mod forest;
pub mod kbest;
pub mod kmeans;
mod knn;
mod methods;
mod metrics;
mod sweep;
mod vote;

pub use experiment::{
    fold_behavior, run_experiment, write_summary_csv, EvalReport, ExperimentOptions, FoldRecord, ReportMeans,
    Standardization,
};
pub use folds::{make_folds, mask_columns, Fold, FoldPlan};
pub use knn::{knn_predict, knn_proba};
pub use methods::{baseline_context, Method, MethodConfig};
pub use metrics::macro_f1;
pub use sweep::{class_subset_sweep, combinations, grid_sweep, restrict_classes, Grid, SubsetResult, SubsetSweep};
pub use vote::fragment_vote;

use forest::{ForestConfig, RandomForest};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierScores {
    pub classes: Vec<String>,
    pub train_f1: f64,
    pub test_f1: f64,
    /// Vote fractions per test sample, in `classes` order.
    pub test_proba: Vec<Vec<f64>>,
}

/// Fits a seeded 100-tree forest on the training features and reports
/// macro-F1 on both splits.
pub fn train_score_classifier(
    features_train: &[Vec<f64>],
    labels_train: &[String],
    features_test: &[Vec<f64>],
    labels_test: &[String],
    seed: u64,
) -> Result<ClassifierScores> {
    let mut classes: Vec<String> = labels_train.iter().chain(labels_test).cloned().collect();
    classes.sort();
    classes.dedup();
    let idx = |l: &[String]| -> Vec<usize> { l.iter().map(|x| classes.binary_search(x).unwrap()).collect() };
    let (y_train, y_test) = (idx(labels_train), idx(labels_test));
    if features_test.len() != y_test.len() {
        return Err(Error::DimensionError {
            left: features_test.len(),
            right: y_test.len(),
        });
    }
    let forest = RandomForest::fit(
        features_train,
        &y_train,
        classes.len(),
        &ForestConfig {
            seed,
            ..Default::default()
        },
    )?;
    if let Some(row) = features_test.iter().find(|r| r.len() != forest.n_features) {
        return Err(Error::DimensionError {
            left: forest.n_features,
            right: row.len(),
        });
    }
    let train_pred: Vec<usize> = features_train.iter().map(|x| forest.predict(x)).collect();
    let test_proba: Vec<Vec<f64>> = features_test.iter().map(|x| forest.predict_proba(x)).collect();
    let test_pred: Vec<usize> = features_test.iter().map(|x| forest.predict(x)).collect();
    Ok(ClassifierScores {
        train_f1: macro_f1(&y_train, &train_pred),
        test_f1: macro_f1(&y_test, &test_pred),
        test_proba,
        classes,
    })
}
