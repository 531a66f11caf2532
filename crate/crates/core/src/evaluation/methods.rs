use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kbest::{score_columns, top_k, ScoreFunction};
use super::kmeans::kmeans;
use crate::clustering::BehaviorMatrix;
use crate::error::{Error, Result};
use crate::steering::{Context, ContextCluster, SteeringConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ours,
    Random,
    Dummy,
    KbestAnova,
    KbestChi2,
    KbestMi,
    Knn,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Ours,
        Method::Random,
        Method::Dummy,
        Method::KbestAnova,
        Method::KbestChi2,
        Method::KbestMi,
        Method::Knn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ours => "ours",
            Method::Random => "random",
            Method::Dummy => "dummy",
            Method::KbestAnova => "kbest-anova",
            Method::KbestChi2 => "kbest-chi2",
            Method::KbestMi => "kbest-mi",
            Method::Knn => "knn",
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, Method::Random | Method::Dummy)
    }

    fn score_function(self) -> Option<ScoreFunction> {
        match self {
            Method::KbestAnova => Some(ScoreFunction::Anova),
            Method::KbestChi2 => Some(ScoreFunction::Chi2),
            Method::KbestMi => Some(ScoreFunction::MutualInfo),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| Error::Parse(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodConfig {
    pub method: Method,
    pub steering: SteeringConfig,
    /// Selected column count for the k-best methods.
    pub features: usize,
    /// Random baseline: groups each class is split into (0 draws the count
    /// uniformly from 2..=n-1, like a random tree cut), and how many of them
    /// are kept.
    pub random_groups: usize,
    pub random_kept: usize,
    pub knn_k: usize,
    /// Repetitions of a randomized method; scores are averaged.
    pub iterations: usize,
    pub trees: usize,
    pub seed: u64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            method: Method::Ours,
            steering: SteeringConfig::default(),
            features: 4,
            random_groups: 0,
            random_kept: 1,
            knn_k: 5,
            iterations: 10,
            trees: 100,
            seed: 0,
        }
    }
}

impl MethodConfig {
    pub fn new(method: Method) -> Self {
        MethodConfig {
            method,
            ..Default::default()
        }
    }

    pub fn effective_iterations(&self) -> usize {
        if self.method.is_randomized() {
            self.iterations.max(1)
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        let zero = |what: &str| Err(Error::InvalidInput(format!("{what} must be at least 1")));
        if self.steering.refs == 0 {
            return zero("refs");
        }
        if self.iterations == 0 {
            return zero("iterations");
        }
        if self.trees == 0 {
            return zero("trees");
        }
        if self.knn_k == 0 {
            return zero("knn_k");
        }
        if self.features == 0 {
            return zero("features");
        }
        if self.random_kept == 0 {
            return zero("random groups");
        }
        Ok(())
    }
}

fn class_members(train: &BehaviorMatrix) -> BTreeMap<&str, Vec<String>> {
    let mut out: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for (id, label) in train.row_ids.iter().zip(&train.row_labels) {
        out.entry(label.as_str()).or_default().push(id.clone());
    }
    out
}

fn pick<'a>(pool: &'a [String], r: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut idx = index::sample(rng, pool.len(), r.min(pool.len())).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| pool[i].clone()).collect()
}

/// Context of a baseline method on the training block (training rows ×
/// training columns). `iteration` selects an independent random draw.
pub fn baseline_context(config: &MethodConfig, train: &BehaviorMatrix, iteration: usize) -> Result<Context> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(iteration as u64);
    let r = config.steering.refs;
    match config.method {
        Method::Ours | Method::Knn => Err(Error::InvalidInput(format!(
            "{} has no baseline context",
            config.method
        ))),
        Method::Random => {
            let mut clusters = Vec::new();
            for (class, mut members) in class_members(train) {
                members.shuffle(&mut rng);
                let n = members.len();
                let groups = match config.random_groups {
                    0 if n > 2 => rng.gen_range(2..n),
                    0 => 1,
                    g => g.min(n),
                };
                let size = n / groups;
                let extra = n % groups;
                let mut start = 0;
                for g in 0..groups.min(config.random_kept) {
                    let len = size + usize::from(g < extra);
                    let mut group = members[start..start + len].to_vec();
                    start += len;
                    let references = pick(&group, r, &mut rng);
                    group.sort();
                    clusters.push(ContextCluster {
                        class: class.to_string(),
                        members: group,
                        references,
                        silhouette: None,
                    });
                }
            }
            Ok(Context { clusters })
        }
        Method::Dummy => {
            let pool = &train.column_ids;
            if r > pool.len() {
                return Err(Error::InvalidCount {
                    requested: r,
                    available: pool.len(),
                });
            }
            let clusters = class_members(train)
                .into_iter()
                .map(|(class, members)| ContextCluster {
                    class: class.to_string(),
                    members,
                    references: pick(pool, r, &mut rng),
                    silhouette: None,
                })
                .collect();
            Ok(Context { clusters })
        }
        Method::KbestAnova | Method::KbestChi2 | Method::KbestMi => {
            kbest_context(config, train, config.method.score_function().unwrap())
        }
    }
}

fn kbest_context(config: &MethodConfig, train: &BehaviorMatrix, function: ScoreFunction) -> Result<Context> {
    let classes: Vec<&String> = {
        let mut c: Vec<&String> = train.row_labels.iter().collect();
        c.sort();
        c.dedup();
        c
    };
    let y: Vec<usize> = train
        .row_labels
        .iter()
        .map(|l| classes.binary_search(&l).unwrap())
        .collect();
    let columns: Vec<Vec<f64>> = (0..train.n_cols())
        .map(|j| (0..train.n_rows()).map(|i| train.get(i, j)).collect())
        .collect();
    let mut f = config.features;
    if f > columns.len() {
        log::warn!("kbest: {f} features requested, only {} columns", columns.len());
        f = columns.len();
    }
    let chosen = top_k(&score_columns(&columns, &y, function), f);
    let points: Vec<Vec<f64>> = (0..train.n_rows())
        .map(|i| chosen.iter().map(|&j| train.get(i, j)).collect())
        .collect();
    let fit = kmeans(&points, f, 10, config.seed)?;

    // each reference joins the k-means cluster of its own row
    let mut order: Vec<usize> = Vec::new();
    let mut refs: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for &j in &chosen {
        let id = &train.column_ids[j];
        let row = train
            .row_index(id)
            .ok_or_else(|| Error::InvalidInput(format!("column {id} has no training row")))?;
        let c = fit.labels[row];
        if !refs.contains_key(&c) {
            order.push(c);
        }
        refs.entry(c).or_default().push(id.clone());
    }
    let clusters = order
        .into_iter()
        .map(|c| {
            let members: Vec<String> = (0..train.n_rows())
                .filter(|&i| fit.labels[i] == c)
                .map(|i| train.row_ids[i].clone())
                .collect();
            let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
            for i in (0..train.n_rows()).filter(|&i| fit.labels[i] == c) {
                *votes.entry(train.row_labels[i].as_str()).or_default() += 1;
            }
            let class = votes
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(l, _)| l.to_string())
                .unwrap_or_default();
            ContextCluster {
                class,
                members,
                references: refs.remove(&c).unwrap(),
                silhouette: None,
            }
        })
        .collect();
    Ok(Context { clusters })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn behavior(n_per_class: usize, classes: usize) -> BehaviorMatrix {
        let n = n_per_class * classes;
        let ids: Vec<String> = (0..n).map(|i| format!("o{i:02}")).collect();
        let labels: Vec<String> = (0..n).map(|i| format!("c{}", i / n_per_class)).collect();
        let values = (0..n)
            .flat_map(|i| (0..n).map(move |j| if i / n_per_class == j / n_per_class { 0.2 } else { 0.8 } + 0.001 * ((i * 7 + j * 3) % 11) as f64))
            .collect();
        BehaviorMatrix::new(ids.clone(), labels.clone(), ids, labels, values).unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("kbest_mi".parse::<Method>().unwrap(), Method::KbestMi);
    }

    #[test]
    fn dummy_keeps_one_cluster_per_class() {
        let b = behavior(5, 3);
        let mut cfg = MethodConfig::new(Method::Dummy);
        cfg.steering.refs = 2;
        let ctx = baseline_context(&cfg, &b, 0).unwrap();
        assert_eq!(ctx.clusters.len(), 3);
        assert_eq!(ctx.feature_count(), 6);
        for c in &ctx.clusters {
            assert_eq!(c.members.len(), 5);
        }
    }

    #[test]
    fn random_iterations_differ_but_repeat() {
        let b = behavior(8, 2);
        let mut cfg = MethodConfig::new(Method::Random);
        cfg.random_groups = 2;
        let draws: Vec<Context> = (0..10).map(|it| baseline_context(&cfg, &b, it).unwrap()).collect();
        assert_eq!(draws[3], baseline_context(&cfg, &b, 3).unwrap());
        let distinct: std::collections::HashSet<String> =
            draws.iter().map(|c| serde_json::to_string(c).unwrap()).collect();
        assert!(distinct.len() > 1);
        for ctx in &draws {
            assert_eq!(ctx.clusters.len(), 2);
            for c in &ctx.clusters {
                assert_eq!(c.members.len(), 4);
                assert!(c.members.contains(&c.references[0]));
            }
        }
    }

    #[test]
    fn random_cut_keeps_one_proper_subset() {
        let b = behavior(8, 3);
        let cfg = MethodConfig::new(Method::Random);
        for it in 0..20 {
            let ctx = baseline_context(&cfg, &b, it).unwrap();
            assert_eq!(ctx.clusters.len(), 3);
            for c in &ctx.clusters {
                // k is drawn from 2..=7, so a kept group has 1 to 4 members
                assert!((1..=4).contains(&c.members.len()), "{}", c.members.len());
            }
        }
    }

    #[test]
    fn kbest_features_clipped() {
        let b = behavior(3, 2);
        let mut cfg = MethodConfig::new(Method::KbestAnova);
        cfg.features = 50;
        let ctx = baseline_context(&cfg, &b, 0).unwrap();
        assert_eq!(ctx.feature_count(), 6);
    }
}
