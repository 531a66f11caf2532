use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::references::{select_references, weights_from_row, Submatrix};
use super::selection::analyze_classes;
use super::{Aggregate, SteeringConfig, WeightingMode};
use crate::clustering::{BehaviorMatrix, MatrixProvenance};
use crate::error::{Error, Result};
use crate::util::euclidean;

/// A cluster and the reference objects that will each yield one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextCluster {
    pub class: String,
    pub members: Vec<String>,
    /// Usually members; baselines may draw references from anywhere in the
    /// training set.
    pub references: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub silhouette: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub clusters: Vec<ContextCluster>,
}

impl Context {
    pub fn feature_count(&self) -> usize {
        self.clusters.iter().map(|c| c.references.len()).sum()
    }

    /// Index of the cluster holding each id, if any.
    pub fn cluster_of(&self, ids: &[String]) -> Vec<Option<usize>> {
        let lookup: HashMap<&str, usize> = self
            .clusters
            .iter()
            .enumerate()
            .flat_map(|(c, cl)| cl.members.iter().map(move |m| (m.as_str(), c)))
            .collect();
        ids.iter().map(|id| lookup.get(id.as_str()).copied()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReference {
    pub id: String,
    pub omega: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCluster {
    pub class: String,
    pub members: Vec<String>,
    pub submatrix: Vec<Vec<f64>>,
    pub references: Vec<ModelReference>,
}

/// Maps a sample's distances to the members of the kept clusters onto one
/// feature per reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<MatrixProvenance>,
    pub weighting_mode: WeightingMode,
    pub f_aggregate: Aggregate,
    pub clusters: Vec<ModelCluster>,
}

impl EmbeddingModel {
    /// Materializes a context against the training distances: builds each
    /// cluster's symmetrized submatrix and every reference's weights.
    pub fn from_context(
        behavior: &BehaviorMatrix,
        context: &Context,
        weighting_mode: WeightingMode,
        f_aggregate: Aggregate,
    ) -> Result<EmbeddingModel> {
        let mut clusters = Vec::with_capacity(context.clusters.len());
        for cluster in &context.clusters {
            let sub = cluster_submatrix(behavior, &cluster.members)?;
            let references = cluster
                .references
                .iter()
                .map(|r| {
                    let ref_row = match sub.position(r) {
                        Some(p) => sub.rows[p].clone(),
                        None => outside_row(behavior, &cluster.members, r)?,
                    };
                    Ok(ModelReference {
                        id: r.clone(),
                        omega: weights_from_row(&ref_row, &sub)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            clusters.push(ModelCluster {
                class: cluster.class.clone(),
                members: sub.members,
                submatrix: sub.rows,
                references,
            });
        }
        Ok(EmbeddingModel {
            provenance: behavior.provenance.clone(),
            weighting_mode,
            f_aggregate,
            clusters,
        })
    }

    pub fn feature_count(&self) -> usize {
        self.clusters.iter().map(|c| c.references.len()).sum()
    }

    /// Every object whose distance a new sample needs.
    pub fn member_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self
            .clusters
            .iter()
            .flat_map(|c| c.members.iter().map(String::as_str))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Feature vector of one sample, given its distance to each member.
    pub fn embed(&self, distance_to: impl Fn(&str) -> Option<f64>) -> Result<Vec<f64>> {
        let mut features = Vec::with_capacity(self.feature_count());
        let mut s = Vec::new();
        let mut d = Vec::new();
        for cluster in &self.clusters {
            s.clear();
            for m in &cluster.members {
                s.push(distance_to(m).ok_or_else(|| Error::IncompleteRow(m.clone()))?);
            }
            for reference in &cluster.references {
                d.clear();
                for (row, &w) in cluster.submatrix.iter().zip(&reference.omega) {
                    d.push(match self.weighting_mode {
                        WeightingMode::RowScale => s
                            .iter()
                            .zip(row)
                            .map(|(x, y)| (x - w * y) * (x - w * y))
                            .sum::<f64>()
                            .sqrt(),
                        WeightingMode::DistanceScale => w * euclidean(&s, row),
                    });
                }
                features.push(self.f_aggregate.apply(&d));
            }
        }
        Ok(features)
    }

    /// Feature vectors for every row of a behavior matrix whose columns
    /// include all cluster members.
    pub fn embed_rows(&self, behavior: &BehaviorMatrix) -> Result<Vec<Vec<f64>>> {
        let cols: HashMap<&str, usize> = behavior
            .column_ids
            .iter()
            .enumerate()
            .map(|(j, id)| (id.as_str(), j))
            .collect();
        (0..behavior.n_rows())
            .map(|i| self.embed(|id| cols.get(id).map(|&j| behavior.get(i, j))))
            .collect()
    }
}

fn locate(behavior: &BehaviorMatrix, id: &str) -> Result<(usize, usize)> {
    let row = behavior
        .row_index(id)
        .ok_or_else(|| Error::InvalidInput(format!("object {id} has no row")))?;
    let col = behavior
        .column_index(id)
        .ok_or_else(|| Error::InvalidInput(format!("object {id} is not a training column")))?;
    Ok((row, col))
}

fn symmetric(behavior: &BehaviorMatrix, a: (usize, usize), b: (usize, usize)) -> f64 {
    if a == b {
        behavior.get(a.0, a.1)
    } else {
        0.5 * (behavior.get(a.0, b.1) + behavior.get(b.0, a.1))
    }
}

/// Compression distances among `members`, averaged over both orderings off
/// the diagonal; self-distances are kept on the diagonal.
pub fn cluster_submatrix(behavior: &BehaviorMatrix, members: &[String]) -> Result<Submatrix> {
    if members.is_empty() {
        return Err(Error::InvalidInput("empty cluster".into()));
    }
    let at = members
        .iter()
        .map(|m| locate(behavior, m))
        .collect::<Result<Vec<_>>>()?;
    let rows = at
        .iter()
        .map(|&a| at.iter().map(|&b| symmetric(behavior, a, b)).collect())
        .collect();
    Submatrix::new(members.to_vec(), rows)
}

/// Symmetrized distances from a non-member reference to each member.
fn outside_row(behavior: &BehaviorMatrix, members: &[String], reference: &str) -> Result<Vec<f64>> {
    let r = locate(behavior, reference)?;
    members
        .iter()
        .map(|m| Ok(symmetric(behavior, r, locate(behavior, m)?)))
        .collect()
}

/// Steering context from per-class trees: silhouette-best cuts, kept
/// clusters, and `config.refs` references per kept cluster (fewer when the
/// cluster is smaller).
pub fn steering_context(behavior: &BehaviorMatrix, config: &SteeringConfig) -> Result<Context> {
    let analysis = analyze_classes(behavior, config)?;
    let mut clusters = Vec::new();
    for (class, kept) in &analysis.selection.classes {
        for cluster in kept {
            let sub = cluster_submatrix(behavior, &cluster.members)?;
            let r = config.refs.min(sub.len());
            let refs = select_references(&sub, config.strategy, r)?;
            clusters.push(ContextCluster {
                class: class.clone(),
                members: cluster.members.clone(),
                references: refs.into_iter().map(|i| sub.members[i].clone()).collect(),
                silhouette: Some(cluster.silhouette),
            });
        }
    }
    Ok(Context { clusters })
}

/// Runs the three steering steps on training distances (training objects are
/// the columns of `behavior`).
pub fn build_embedding_model(behavior: &BehaviorMatrix, config: &SteeringConfig) -> Result<EmbeddingModel> {
    let context = steering_context(behavior, config)?;
    EmbeddingModel::from_context(behavior, &context, config.weighting, config.aggregate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_model(mode: WeightingMode, aggregate: Aggregate) -> EmbeddingModel {
        EmbeddingModel {
            provenance: None,
            weighting_mode: mode,
            f_aggregate: aggregate,
            clusters: vec![ModelCluster {
                class: "a".into(),
                members: vec!["x".into(), "y".into(), "z".into()],
                submatrix: vec![
                    vec![0.0, 0.4, 0.8],
                    vec![0.4, 0.0, 0.6],
                    vec![0.8, 0.6, 0.0],
                ],
                references: vec![ModelReference {
                    id: "x".into(),
                    omega: vec![1.0, 0.5, 0.0],
                }],
            }],
        }
    }

    #[test]
    fn hand_computed_row_scale_mean() {
        let model = hand_model(WeightingMode::RowScale, Aggregate::Mean);
        let s = [0.2, 0.3, 0.5];
        let v = model
            .embed(|id| match id {
                "x" => Some(s[0]),
                "y" => Some(s[1]),
                "z" => Some(s[2]),
                _ => None,
            })
            .unwrap();
        // scalar-by-scalar:
        // d_x = |(0.2-0, 0.3-0.4, 0.5-0.8)|          = sqrt(0.04+0.01+0.09)
        // d_y = |(0.2-0.2, 0.3-0, 0.5-0.3)|           = sqrt(0+0.09+0.04)
        // d_z = |(0.2, 0.3, 0.5)|                     = sqrt(0.04+0.09+0.25)
        let expected = (0.14f64.sqrt() + 0.13f64.sqrt() + 0.38f64.sqrt()) / 3.0;
        assert_eq!(v.len(), 1);
        assert!((v[0] - expected).abs() < 1e-12);

        let model = hand_model(WeightingMode::DistanceScale, Aggregate::Mean);
        let v2 = model
            .embed(|id| ["x", "y", "z"].iter().position(|m| *m == id).map(|i| s[i]))
            .unwrap();
        // d_x = 1 * |s - Lx|, d_y = 0.5 * |s - Ly|, d_z = 0
        let ly = 0.2f64 * 0.2 + 0.3 * 0.3 + 0.1 * 0.1;
        let expected2 = (0.14f64.sqrt() + 0.5 * ly.sqrt()) / 3.0;
        assert!((v2[0] - expected2).abs() < 1e-12);
    }

    #[test]
    fn own_row_with_unit_weights_is_zero() {
        let mut model = hand_model(WeightingMode::RowScale, Aggregate::Min);
        model.clusters[0].references[0].omega = vec![1.0; 3];
        let row = model.clusters[0].submatrix[0].clone();
        let v = model
            .embed(|id| ["x", "y", "z"].iter().position(|m| *m == id).map(|i| row[i]))
            .unwrap();
        assert_eq!(v, vec![0.0]);
    }

    #[test]
    fn single_member_modes_coincide() {
        let mut results = Vec::new();
        for mode in [WeightingMode::RowScale, WeightingMode::DistanceScale] {
            for agg in [Aggregate::Min, Aggregate::Max, Aggregate::Mean, Aggregate::Median, Aggregate::EuclideanNorm] {
                let model = EmbeddingModel {
                    provenance: None,
                    weighting_mode: mode,
                    f_aggregate: agg,
                    clusters: vec![ModelCluster {
                        class: "a".into(),
                        members: vec!["x".into()],
                        submatrix: vec![vec![0.1]],
                        references: vec![ModelReference { id: "x".into(), omega: vec![1.0] }],
                    }],
                };
                results.push(model.embed(|_| Some(0.7)).unwrap()[0]);
            }
        }
        assert!(results.iter().all(|&v| (v - 0.6).abs() < 1e-12));
    }

    #[test]
    fn missing_distance_is_reported() {
        let model = hand_model(WeightingMode::RowScale, Aggregate::Mean);
        let err = model.embed(|id| (id != "y").then_some(0.5)).unwrap_err();
        assert!(matches!(err, Error::IncompleteRow(id) if id == "y"));
    }

    #[test]
    fn json_shape() {
        let json = serde_json::to_value(hand_model(WeightingMode::RowScale, Aggregate::EuclideanNorm)).unwrap();
        assert_eq!(json["weighting_mode"], "row_scale");
        assert_eq!(json["f_aggregate"], "euclidean_norm");
        assert_eq!(json["clusters"][0]["references"][0]["omega"][1], 0.5);
        assert!(json.get("row_stats").is_none());
    }
}
