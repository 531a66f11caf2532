use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{mask_columns, Fold, FoldPlan};
use super::forest::{ForestConfig, RandomForest};
use super::knn::{knn_predict, knn_proba};
use super::methods::{baseline_context, Method, MethodConfig};
use super::metrics::macro_f1;
use super::vote::fragment_vote;
use crate::clustering::{silhouette, BehaviorMatrix, Pairwise};
use crate::compressors::CodecId;
use crate::distances::{standardize_rows, DistanceMatrix, Measure, RowStats, StatsProvenance};
use crate::error::{Error, Result};
use crate::steering::{steering_context, EmbeddingModel};
use crate::util::{euclidean, mean, mix};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "stats")]
pub enum Standardization {
    #[default]
    None,
    /// Row statistics measured against each fold's training objects.
    Pipeline,
    /// Statistics fixed in advance against an external reference set.
    External(RowStats),
}

impl Standardization {
    pub fn name(&self) -> &'static str {
        match self {
            Standardization::None => "none",
            Standardization::Pipeline => "pipeline",
            Standardization::External(_) => "external",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOptions {
    pub standardization: Standardization,
    /// Object id to source file, for corpora of file fragments. Enables the
    /// file-level score.
    pub fragment_files: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub feature_count: f64,
    pub train_f1: f64,
    pub test_f1: f64,
    pub train_silhouette: Option<f64>,
    pub test_silhouette: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_file_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeans {
    pub feature_count: f64,
    pub train_f1: f64,
    pub test_f1: f64,
    pub train_silhouette: Option<f64>,
    pub test_silhouette: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_file_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: MethodConfig,
    pub measure: Measure,
    pub codec: CodecId,
    pub standardization: String,
    pub classes: Vec<String>,
    pub objects: usize,
    pub k: usize,
    pub fold_seed: u64,
    pub folds: Vec<FoldRecord>,
    pub mean: ReportMeans,
    pub wall_clock_secs: f64,
}

impl EvalReport {
    pub const CSV_HEADER: [&'static str; 7] = [
        "method",
        "codec",
        "measure",
        "classes",
        "feature_count",
        "test_f1_mean",
        "test_sil_mean",
    ];

    /// Same report with the timing zeroed, for comparing runs.
    pub fn without_timing(&self) -> EvalReport {
        EvalReport {
            wall_clock_secs: 0.0,
            ..self.clone()
        }
    }

    pub fn csv_record(&self) -> [String; 7] {
        [
            self.method.method.to_string(),
            self.codec.to_string(),
            self.measure.to_string(),
            self.classes.join(";"),
            self.mean.feature_count.to_string(),
            self.mean.test_f1.to_string(),
            self.mean.test_silhouette.map(|s| s.to_string()).unwrap_or_default(),
        ]
    }
}

pub fn write_summary_csv<W: Write>(reports: &[EvalReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let wrap = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(EvalReport::CSV_HEADER).map_err(wrap)?;
    for r in reports {
        w.write_record(r.csv_record()).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| mean(&v))
}

fn means(records: &[FoldRecord]) -> ReportMeans {
    let avg = |f: fn(&FoldRecord) -> f64| mean(&records.iter().map(f).collect::<Vec<_>>());
    ReportMeans {
        feature_count: avg(|r| r.feature_count),
        train_f1: avg(|r| r.train_f1),
        test_f1: avg(|r| r.test_f1),
        train_silhouette: mean_opt(records.iter().map(|r| r.train_silhouette)),
        test_silhouette: mean_opt(records.iter().map(|r| r.test_silhouette)),
        test_file_f1: mean_opt(records.iter().map(|r| r.test_file_f1)),
    }
}

/// Silhouette of the true classes in a feature space; `None` when it is
/// undefined (fewer than two classes or samples).
fn feature_silhouette(features: &[Vec<f64>], labels: &[usize]) -> Option<f64> {
    let rows: Vec<&[f64]> = features.iter().map(Vec::as_slice).collect();
    let pairwise = Pairwise::from_rows(&rows, euclidean);
    silhouette(labels, &pairwise).ok().map(|s| s.mean)
}

struct Scores {
    features: usize,
    train_f1: f64,
    test_f1: f64,
    train_silhouette: Option<f64>,
    test_silhouette: Option<f64>,
    test_file_f1: Option<f64>,
}

struct FoldData<'a> {
    classes: &'a [String],
    train: BehaviorMatrix,
    test: BehaviorMatrix,
    y_train: Vec<usize>,
    y_test: Vec<usize>,
}

fn class_indices(labels: &[String], classes: &[String]) -> Vec<usize> {
    labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label listed in classes"))
        .collect()
}

fn file_f1(
    data: &FoldData,
    proba: &[Vec<f64>],
    files: &BTreeMap<String, String>,
) -> Result<f64> {
    let fragment_files = data
        .test
        .row_ids
        .iter()
        .map(|id| {
            files
                .get(id)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("object {id} has no file")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut truth: BTreeMap<&str, usize> = BTreeMap::new();
    for (f, &y) in fragment_files.iter().zip(&data.y_test) {
        truth.insert(f.as_str(), y);
    }
    let listed: Vec<String> = truth.keys().map(|s| s.to_string()).collect();
    let voted = fragment_vote(proba, &fragment_files, &listed)?;
    let t: Vec<usize> = listed.iter().map(|f| truth[f.as_str()]).collect();
    let p: Vec<usize> = listed.iter().map(|f| voted[f]).collect();
    Ok(macro_f1(&t, &p))
}

fn score_features(
    data: &FoldData,
    train_x: &[Vec<f64>],
    test_x: &[Vec<f64>],
    seed: u64,
    config: &MethodConfig,
    files: Option<&BTreeMap<String, String>>,
) -> Result<Scores> {
    let forest = RandomForest::fit(
        train_x,
        &data.y_train,
        data.classes.len(),
        &ForestConfig {
            n_trees: config.trees,
            seed,
            ..Default::default()
        },
    )?;
    let train_pred: Vec<usize> = train_x.iter().map(|x| forest.predict(x)).collect();
    let proba: Vec<Vec<f64>> = test_x.iter().map(|x| forest.predict_proba(x)).collect();
    let test_pred: Vec<usize> = test_x.iter().map(|x| forest.predict(x)).collect();
    Ok(Scores {
        features: train_x.first().map_or(0, Vec::len),
        train_f1: macro_f1(&data.y_train, &train_pred),
        test_f1: macro_f1(&data.y_test, &test_pred),
        train_silhouette: feature_silhouette(train_x, &data.y_train),
        test_silhouette: feature_silhouette(test_x, &data.y_test),
        test_file_f1: files.map(|f| file_f1(data, &proba, f)).transpose()?,
    })
}

fn score_knn(data: &FoldData, config: &MethodConfig, files: Option<&BTreeMap<String, String>>) -> Result<Scores> {
    let train_x = data.train.to_rows();
    let test_x = data.test.to_rows();
    let train_labels: Vec<String> = data.y_train.iter().map(|&c| data.classes[c].clone()).collect();
    let to_idx = |v: Vec<String>| class_indices(&v, data.classes);
    let train_pred = to_idx(knn_predict(&train_x, &train_labels, &train_x, config.knn_k)?);
    let test_pred = to_idx(knn_predict(&train_x, &train_labels, &test_x, config.knn_k)?);
    let test_file_f1 = match files {
        Some(f) => {
            let proba = knn_proba(&train_x, &train_labels, &test_x, config.knn_k, data.classes)?;
            Some(file_f1(data, &proba, f)?)
        }
        None => None,
    };
    Ok(Scores {
        features: data.train.n_cols(),
        train_f1: macro_f1(&data.y_train, &train_pred),
        test_f1: macro_f1(&data.y_test, &test_pred),
        train_silhouette: feature_silhouette(&train_x, &data.y_train),
        test_silhouette: feature_silhouette(&test_x, &data.y_test),
        test_file_f1,
    })
}

/// The training-fold view of the matrix: pipeline standardization applied
/// when requested, then test columns removed.
pub fn fold_behavior(matrix: &DistanceMatrix, fold: &Fold, standardization: &Standardization) -> Result<BehaviorMatrix> {
    match standardization {
        Standardization::Pipeline => {
            let stats = RowStats::from_matrix(matrix, &fold.train_ids, StatsProvenance::Pipeline)?;
            mask_columns(&standardize_rows(matrix, &stats)?, &fold.train_ids)
        }
        _ => mask_columns(matrix, &fold.train_ids),
    }
}

fn run_fold(
    matrix: &DistanceMatrix,
    classes: &[String],
    index: usize,
    fold: &Fold,
    config: &MethodConfig,
    options: &ExperimentOptions,
) -> Result<FoldRecord> {
    let behavior = fold_behavior(matrix, fold, &options.standardization)?;
    let train = behavior.select_rows(&fold.train_ids)?;
    let test = behavior.select_rows(&fold.test_ids)?;
    let data = FoldData {
        classes,
        y_train: class_indices(&train.row_labels, classes),
        y_test: class_indices(&test.row_labels, classes),
        train,
        test,
    };
    let files = options.fragment_files.as_ref();
    let fold_seed = mix(config.seed, index as u64);
    let runs = (0..config.effective_iterations())
        .map(|it| {
            if config.method == Method::Knn {
                return score_knn(&data, config, files);
            }
            let context = match config.method {
                Method::Ours => steering_context(&data.train, &config.steering)?,
                _ => baseline_context(
                    &MethodConfig {
                        seed: fold_seed,
                        ..*config
                    },
                    &data.train,
                    it,
                )?,
            };
            let model = EmbeddingModel::from_context(
                &data.train,
                &context,
                config.steering.weighting,
                config.steering.aggregate,
            )?;
            let train_x = model.embed_rows(&data.train)?;
            let test_x = model.embed_rows(&data.test)?;
            score_features(&data, &train_x, &test_x, mix(fold_seed, it as u64), config, files)
        })
        .collect::<Result<Vec<_>>>()?;
    let avg = |f: fn(&Scores) -> f64| mean(&runs.iter().map(f).collect::<Vec<_>>());
    Ok(FoldRecord {
        fold: index,
        train_size: fold.train_ids.len(),
        test_size: fold.test_ids.len(),
        feature_count: avg(|s| s.features as f64),
        train_f1: avg(|s| s.train_f1),
        test_f1: avg(|s| s.test_f1),
        train_silhouette: mean_opt(runs.iter().map(|s| s.train_silhouette)),
        test_silhouette: mean_opt(runs.iter().map(|s| s.test_silhouette)),
        test_file_f1: mean_opt(runs.iter().map(|s| s.test_file_f1)),
    })
}

/// K-fold evaluation of one method on a full distance matrix. Folds run in
/// parallel; the report does not depend on the worker count.
pub fn run_experiment(
    matrix: &DistanceMatrix,
    config: &MethodConfig,
    plan: &FoldPlan,
    options: &ExperimentOptions,
) -> Result<EvalReport> {
    let start = Instant::now();
    config.validate()?;
    let mut classes: Vec<String> = matrix.labels.clone();
    classes.sort();
    classes.dedup();
    let external;
    let matrix = match &options.standardization {
        Standardization::External(stats) => {
            external = standardize_rows(matrix, stats)?;
            &external
        }
        Standardization::Pipeline if matrix.measure != Measure::Nrc => {
            return Err(Error::MeasureMismatch {
                expected: Measure::Nrc.to_string(),
                found: matrix.measure.to_string(),
            })
        }
        _ => matrix,
    };
    let folds = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| {
            run_fold(matrix, &classes, i, fold, config, options).map_err(|e| Error::Fold {
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = means(&folds);
    Ok(EvalReport {
        method: *config,
        measure: matrix.measure,
        codec: matrix.codec,
        standardization: options.standardization.name().to_string(),
        objects: matrix.len(),
        k: plan.k,
        fold_seed: plan.seed,
        classes,
        folds,
        mean,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}
