use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ctxsteer::clustering::BehaviorMatrix;
use ctxsteer::corpus::{ingest, write_corpus, CorpusManifest, IngestOptions};
use ctxsteer::distances::{
    build_distance_matrix, compute_row_stats, standardize_rows, DistanceMatrix, MatrixSidecar, Measure, RowStats,
    StatsProvenance,
};
use ctxsteer::evaluation::{
    class_subset_sweep, grid_sweep, make_folds, mask_columns, restrict_classes, run_experiment, write_summary_csv,
    ExperimentOptions, Grid, Standardization,
};
use ctxsteer::steering::{analyze_classes, build_embedding_model};
use ctxsteer::synthetic::MarkovCorpus;
use ctxsteer::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{load_config, ConfigFile, Settings, StandardizeSetting};
use crate::output::{write_atomic, write_json, write_text};
use crate::{Command, Common, Input};

#[derive(Debug, Clone, Default, Serialize)]
struct Inputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    corpus: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    corpus_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stats_sha256: Option<String>,
}

/// What produced an output: enough to rerun it.
#[derive(Debug, Clone, Serialize)]
struct RunRecord {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    settings: Settings,
    inputs: Inputs,
}

#[derive(Serialize)]
struct WithRun<'a, T: Serialize> {
    run: &'a RunRecord,
    #[serde(flatten)]
    body: &'a T,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(read_file(path)?)))
}

fn settings(common: &Common) -> Result<(Settings, Grid)> {
    let file = match &common.config {
        Some(p) => load_config(p)?,
        None => ConfigFile::default(),
    };
    let s = Settings::resolve(&file.settings.layered(common.overrides.clone()))?;
    if let Some(w) = s.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global() {
            log::warn!("worker pool already set: {e}");
        }
    }
    Ok((s, file.grid))
}

fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn corpus_matrix(root: &Path, s: &Settings) -> Result<(DistanceMatrix, CorpusManifest)> {
    let options = IngestOptions {
        encoding: s.encoding,
        codec: Some(s.codec),
        classes: s.classes.clone(),
    };
    let (objects, manifest) = ingest(root, &options)?;
    Ok((build_distance_matrix(&objects, s.measure, s.codec)?, manifest))
}

struct Loaded {
    matrix: DistanceMatrix,
    manifest: Option<CorpusManifest>,
    inputs: Inputs,
}

fn load(input: &Input, s: &mut Settings) -> Result<Loaded> {
    let loaded = match (&input.corpus, &input.matrix) {
        (Some(root), _) => {
            let (matrix, manifest) = corpus_matrix(root, s)?;
            Loaded {
                inputs: Inputs {
                    corpus: Some(root.clone()),
                    corpus_digest: Some(manifest.digest()),
                    ..Default::default()
                },
                matrix,
                manifest: Some(manifest),
            }
        }
        (None, Some(csv)) => {
            let sidecar: MatrixSidecar = serde_json::from_slice(&read_file(&sidecar_path(csv))?)
                .map_err(|e| Error::Parse(format!("{}: {e}", sidecar_path(csv).display())))?;
            let mut matrix = DistanceMatrix::read_csv(read_file(csv)?.as_slice(), sidecar)?;
            if let Some(classes) = &s.classes {
                matrix = restrict_classes(&matrix, classes)?;
            }
            // the matrix carries its own measure and codec
            s.measure = matrix.measure;
            s.codec = matrix.codec;
            let manifest_path = csv.with_file_name("corpus.json");
            let manifest = match std::fs::read(&manifest_path) {
                Ok(bytes) => Some(
                    serde_json::from_slice(&bytes)
                        .map_err(|e| Error::Parse(format!("{}: {e}", manifest_path.display())))?,
                ),
                Err(_) => None,
            };
            Loaded {
                matrix,
                manifest,
                inputs: Inputs {
                    matrix: Some(csv.clone()),
                    matrix_sha256: Some(sha256_file(csv)?),
                    ..Default::default()
                },
            }
        }
        (None, None) => return Err(Error::InvalidInput("give --corpus or --matrix".into())),
    };
    if s.standardize != StandardizeSetting::None && loaded.matrix.measure != Measure::Nrc {
        return Err(Error::MeasureMismatch {
            expected: Measure::Nrc.to_string(),
            found: loaded.matrix.measure.to_string(),
        });
    }
    Ok(loaded)
}

fn standardization(s: &Settings, inputs: &mut Inputs) -> Result<Standardization> {
    Ok(match &s.standardize {
        StandardizeSetting::None => Standardization::None,
        StandardizeSetting::Pipeline => Standardization::Pipeline,
        StandardizeSetting::External(path) => {
            inputs.stats_sha256 = Some(sha256_file(path)?);
            let stats: RowStats = serde_json::from_slice(&read_file(path)?)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            Standardization::External(stats)
        }
    })
}

/// Every object as both sample and training column; pipeline statistics
/// come from all objects.
fn full_behavior(matrix: &DistanceMatrix, standardize: &Standardization) -> Result<BehaviorMatrix> {
    let ids = matrix.object_ids.clone();
    let matrix = match standardize {
        Standardization::None => matrix.clone(),
        Standardization::Pipeline => {
            standardize_rows(matrix, &RowStats::from_matrix(matrix, &ids, StatsProvenance::Pipeline)?)?
        }
        Standardization::External(stats) => standardize_rows(matrix, stats)?,
    };
    mask_columns(&matrix, &ids)
}

fn record(command: &'static str, settings: &Settings, inputs: Inputs) -> RunRecord {
    RunRecord {
        tool: "ctxsteer",
        version: env!("CARGO_PKG_VERSION"),
        command,
        settings: settings.clone(),
        inputs,
    }
}

fn options(settings: &Settings, loaded: &mut Loaded) -> Result<ExperimentOptions> {
    Ok(ExperimentOptions {
        standardization: standardization(settings, &mut loaded.inputs)?,
        fragment_files: loaded.manifest.as_ref().and_then(CorpusManifest::fragment_files),
    })
}

fn file_name_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Distances {
            corpus,
            out,
            stats_reference,
            common,
        } => {
            let (s, _) = settings(&common)?;
            let (matrix, manifest) = corpus_matrix(&corpus, &s)?;
            let mut inputs = Inputs {
                corpus: Some(corpus.clone()),
                corpus_digest: Some(manifest.digest()),
                ..Default::default()
            };
            if let Some(reference_root) = stats_reference {
                if s.measure != Measure::Nrc {
                    return Err(Error::MeasureMismatch {
                        expected: Measure::Nrc.to_string(),
                        found: s.measure.to_string(),
                    });
                }
                let opts = IngestOptions {
                    encoding: s.encoding,
                    codec: Some(s.codec),
                    classes: None,
                };
                let (targets, _) = ingest(&corpus, &IngestOptions {
                    classes: s.classes.clone(),
                    ..opts.clone()
                })?;
                let (references, _) = ingest(&reference_root, &opts)?;
                let stats = compute_row_stats(&targets, &references, StatsProvenance::External)?;
                write_json(&out.join("stats.json"), &stats)?;
                inputs.stats_sha256 = Some(sha256_file(&out.join("stats.json"))?);
            }
            write_atomic(&out.join("matrix.csv"), |w| matrix.write_csv(w))?;
            write_json(&out.join("matrix.json"), &matrix.sidecar())?;
            write_json(&out.join("corpus.json"), &manifest)?;
            write_json(&out.join("run.json"), &record("distances", &s, inputs))
        }
        Command::Steer { input, out, common } => {
            let (mut s, _) = settings(&common)?;
            let mut loaded = load(&input, &mut s)?;
            let standardize = standardization(&s, &mut loaded.inputs)?;
            let behavior = full_behavior(&loaded.matrix, &standardize)?;
            let model = build_embedding_model(&behavior, &s.method.steering)?;
            let run = record("steer", &s, loaded.inputs);
            write_json(&out, &WithRun { run: &run, body: &model })
        }
        Command::Eval { input, out, common } => {
            let (mut s, _) = settings(&common)?;
            let mut loaded = load(&input, &mut s)?;
            let opts = options(&s, &mut loaded)?;
            let m = &loaded.matrix;
            let plan = make_folds(&m.object_ids, &m.labels, s.folds, s.seed)?;
            let report = run_experiment(m, &s.method, &plan, &opts)?;
            let run = record("eval", &s, loaded.inputs);
            write_json(&out.join("report.json"), &WithRun { run: &run, body: &report })?;
            write_json(&out.join("folds.json"), &plan)?;
            write_atomic(&out.join("summary.csv"), |w| write_summary_csv(std::slice::from_ref(&report), w))
        }
        Command::Sweep {
            input,
            out,
            subset_sizes,
            common,
        } => {
            let (mut s, grid) = settings(&common)?;
            let mut loaded = load(&input, &mut s)?;
            let opts = options(&s, &mut loaded)?;
            let run = record("sweep", &s, loaded.inputs.clone());
            let m = &loaded.matrix;
            if let Some(sizes) = subset_sizes {
                let sweep = class_subset_sweep(m, &s.method, &sizes, s.folds, s.seed, &opts)?;
                let reports: Vec<_> = sweep.results.iter().map(|r| r.report.clone()).collect();
                write_atomic(&out.join("summary.csv"), |w| write_summary_csv(&reports, w))?;
                write_json(&out.join("subsets.json"), &WithRun { run: &run, body: &sweep })?;
                return write_json(&out.join("manifest.json"), &run);
            }
            let configs = grid.expand(&s.method);
            let plan = make_folds(&m.object_ids, &m.labels, s.folds, s.seed)?;
            let reports = grid_sweep(m, &configs, &plan, &opts)?;
            let mut points = Vec::new();
            for (i, report) in reports.iter().enumerate() {
                let file = format!("point-{i:03}.json");
                write_json(&out.join(&file), &WithRun { run: &run, body: report })?;
                points.push(serde_json::json!({ "index": i, "file": file, "method": configs[i] }));
            }
            write_atomic(&out.join("summary.csv"), |w| write_summary_csv(&reports, w))?;
            write_json(
                &out.join("manifest.json"),
                &serde_json::json!({ "run": run, "grid": grid, "points": points }),
            )
        }
        Command::Tree { input, out, common } => {
            let (mut s, _) = settings(&common)?;
            let mut loaded = load(&input, &mut s)?;
            let standardize = standardization(&s, &mut loaded.inputs)?;
            let behavior = full_behavior(&loaded.matrix, &standardize)?;
            let analysis = analyze_classes(&behavior, &s.method.steering)?;
            let mut files = BTreeMap::new();
            for (class, tree) in &analysis.trees {
                let stem = file_name_safe(class);
                write_text(&out.join(format!("{stem}.nwk")), &(tree.tree.to_newick() + "\n"))?;
                write_json(&out.join(format!("{stem}.json")), tree)?;
                files.insert(class.clone(), stem);
            }
            let run = record("tree", &s, loaded.inputs);
            write_json(
                &out.join("selection.json"),
                &serde_json::json!({ "run": run, "files": files, "selection": analysis.selection }),
            )
        }
        Command::Synth {
            out,
            sources,
            docs,
            length,
            overlap,
            atypical,
            seed,
        } => {
            let corpus = MarkovCorpus {
                classes: sources,
                docs_per_class: docs,
                doc_len: length,
                overlap,
                atypical,
                seed,
                ..Default::default()
            };
            write_corpus(&out, &corpus.generate()?)
        }
    }
}
