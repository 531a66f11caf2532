//! Effective settings: built-in defaults, overridden by a TOML file,
//! overridden by flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use ctxsteer::clustering::SilhouetteSpace;
use ctxsteer::compressors::CodecId;
use ctxsteer::corpus::EncodingPolicy;
use ctxsteer::distances::Measure;
use ctxsteer::evaluation::{Grid, Method, MethodConfig};
use ctxsteer::{Error, Result};
use serde::{Deserialize, Serialize};

/// Settings shared by every subcommand. Each is optional so a config file
/// and the command line can be layered.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Overrides {
    /// Compressor: deflate, bzip2, lzma or rlz
    #[arg(long)]
    pub codec: Option<String>,
    /// Distance: ncd or nrc
    #[arg(long)]
    pub measure: Option<String>,
    /// Row standardization for nrc: none, pipeline or external:<stats.json>
    #[arg(long)]
    pub standardize: Option<String>,
    /// ours, random, dummy, kbest-anova, kbest-chi2, kbest-mi or knn
    #[arg(long)]
    pub method: Option<String>,
    /// Cross-validation folds
    #[arg(long)]
    pub folds: Option<usize>,
    /// Seed for folds, baselines and forests
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cluster selection: top:<N> or above-avg
    #[arg(long)]
    pub policy: Option<String>,
    /// References per kept cluster
    #[arg(long)]
    pub refs: Option<usize>,
    /// centroid or farthest
    #[arg(long)]
    pub ref_strategy: Option<String>,
    /// min, max, mean, median or l2
    #[arg(long)]
    pub aggregate: Option<String>,
    /// row or distance
    #[arg(long)]
    pub weighting: Option<String>,
    /// feature or cophenetic
    #[arg(long)]
    pub silhouette_space: Option<String>,
    /// Comma-separated class subset
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Payload encoding: auto, raw or hex
    #[arg(long)]
    pub encoding: Option<String>,
    /// Selected columns for the kbest methods
    #[arg(long)]
    pub features: Option<usize>,
    /// Neighbours for the knn method
    #[arg(long)]
    pub knn_k: Option<usize>,
    /// Repetitions of the random and dummy baselines
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Trees per random forest
    #[arg(long)]
    pub trees: Option<usize>,
    /// Groups per class for the random baseline (0 draws a random cut)
    #[arg(long)]
    pub random_groups: Option<usize>,
    /// Groups kept per class by the random baseline
    #[arg(long)]
    pub random_kept: Option<usize>,
}

impl Overrides {
    /// `other` wins wherever it is set.
    pub fn layered(self, other: Overrides) -> Overrides {
        macro_rules! pick {
            ($($f:ident),*) => { Overrides { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            codec,
            measure,
            standardize,
            method,
            folds,
            seed,
            policy,
            refs,
            ref_strategy,
            aggregate,
            weighting,
            silhouette_space,
            classes,
            workers,
            encoding,
            features,
            knn_k,
            iterations,
            trees,
            random_groups,
            random_kept
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(flatten)]
    pub settings: Overrides,
    pub grid: Grid,
}

pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "path")]
pub enum StandardizeSetting {
    None,
    Pipeline,
    External(PathBuf),
}

impl FromStr for StandardizeSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(StandardizeSetting::None),
            "pipeline" => Ok(StandardizeSetting::Pipeline),
            other => match other.strip_prefix("external:") {
                Some(p) if !p.is_empty() => Ok(StandardizeSetting::External(PathBuf::from(p))),
                _ => Err(Error::Parse(format!("unknown standardization `{other}`"))),
            },
        }
    }
}

/// Fully resolved settings, echoed into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub codec: CodecId,
    pub measure: Measure,
    pub standardize: StandardizeSetting,
    pub folds: usize,
    pub seed: u64,
    pub classes: Option<Vec<String>>,
    pub workers: Option<usize>,
    pub encoding: EncodingPolicy,
    pub method: MethodConfig,
}

fn parse<T: FromStr<Err = Error>>(v: &Option<String>) -> Result<Option<T>> {
    v.as_deref().map(str::parse).transpose()
}

fn parse_space(s: &str) -> Result<SilhouetteSpace> {
    match s.trim() {
        "feature" => Ok(SilhouetteSpace::Feature),
        "cophenetic" => Ok(SilhouetteSpace::Cophenetic),
        other => Err(Error::Parse(format!("unknown silhouette space `{other}`"))),
    }
}

impl Settings {
    pub fn resolve(o: &Overrides) -> Result<Settings> {
        let measure = match o.measure.as_deref().map(str::trim) {
            None | Some("ncd") => Measure::Ncd,
            Some("nrc") => Measure::Nrc,
            Some(other) => return Err(Error::Parse(format!("unknown measure `{other}`"))),
        };
        let codec = parse::<CodecId>(&o.codec)?.unwrap_or(match measure {
            Measure::Ncd => CodecId::Deflate,
            _ => CodecId::Rlz,
        });
        let standardize = parse::<StandardizeSetting>(&o.standardize)?.unwrap_or(StandardizeSetting::None);
        let seed = o.seed.unwrap_or(0);
        let mut method = MethodConfig::new(parse::<Method>(&o.method)?.unwrap_or(Method::Ours));
        method.seed = seed;
        let s = &mut method.steering;
        if let Some(p) = parse(&o.policy)? {
            s.policy = p;
        }
        if let Some(r) = o.refs {
            s.refs = r;
        }
        if let Some(r) = parse(&o.ref_strategy)? {
            s.strategy = r;
        }
        if let Some(a) = parse(&o.aggregate)? {
            s.aggregate = a;
        }
        if let Some(w) = parse(&o.weighting)? {
            s.weighting = w;
        }
        if let Some(sp) = o.silhouette_space.as_deref() {
            s.silhouette_space = parse_space(sp)?;
        }
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = o.$f { method.$f = v; })* };
        }
        set!(features, knn_k, iterations, trees, random_groups, random_kept);
        method.validate()?;
        let folds = o.folds.unwrap_or(5);
        if folds < 2 {
            return Err(Error::InvalidFold(format!("need at least 2 folds, got {folds}")));
        }
        Ok(Settings {
            codec,
            measure,
            standardize,
            folds,
            seed,
            classes: o.classes.clone(),
            workers: o.workers,
            encoding: parse(&o.encoding)?.unwrap_or_default(),
            method,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file: ConfigFile = toml::from_str("refs = 3\nseed = 7\nmethod = \"dummy\"\n").unwrap();
        let flags = Overrides {
            refs: Some(2),
            ..Default::default()
        };
        let s = Settings::resolve(&file.settings.layered(flags)).unwrap();
        assert_eq!(s.method.steering.refs, 2);
        assert_eq!(s.seed, 7);
        assert_eq!(s.method.seed, 7);
        assert_eq!(s.method.method, Method::Dummy);
        assert_eq!(s.folds, 5);
        assert_eq!(s.codec, CodecId::Deflate);
    }

    #[test]
    fn nrc_defaults_to_rlz() {
        let o = Overrides {
            measure: Some("nrc".into()),
            standardize: Some("external:stats.json".into()),
            ..Default::default()
        };
        let s = Settings::resolve(&o).unwrap();
        assert_eq!(s.codec, CodecId::Rlz);
        assert_eq!(s.standardize, StandardizeSetting::External("stats.json".into()));
        assert!("external:".parse::<StandardizeSetting>().is_err());
    }

    #[test]
    fn unknown_file_key_rejected() {
        assert!(toml::from_str::<ConfigFile>("bogus = 1").is_err());
        let g: ConfigFile = toml::from_str("[grid]\nrefs = [1, 2]\nmethods = [\"ours\", \"dummy\"]\n").unwrap();
        assert_eq!(g.grid.refs, vec![1, 2]);
    }
}
