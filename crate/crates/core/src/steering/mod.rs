//! Cluster selection, reference objects, and the inductive embedding.
//!
//! Per class, a Ward tree over behavior distances is cut where the
//! silhouette peaks, the most coherent clusters are kept, and each kept
//! cluster contributes one feature per reference object. The feature value
//! of a sample is an aggregate of its (weighted) distances to the rows of the
//! cluster's compression-distance submatrix, so embedding a new sample needs
//! only its distances to the members of the kept clusters.

mod model;
mod references;
mod selection;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::SilhouetteSpace;
use crate::error::{Error, Result};

pub use model::{
    build_embedding_model, cluster_submatrix, steering_context, Context, ContextCluster, EmbeddingModel,
    ModelCluster, ModelReference,
};
pub use references::{reference_weights, select_references, weights_from_row, Submatrix};
pub use selection::{
    analyze_classes, select_clusters, ClassAnalysis, ClassTree, ClusterSelection, RankedCluster,
    SelectedCluster, MIN_CLASS_SIZE,
};

/// `(v - min) / max(max - min, 1)`, elementwise. Ranges narrower than one
/// are shifted but not stretched.
pub fn norm01(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let denom = (hi - lo).max(1.0);
    v.iter().map(|x| (x - lo) / denom).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// The `n` clusters with the highest silhouette.
    TopN(usize),
    /// Clusters whose silhouette exceeds their tree's mean.
    AboveTreeAverage,
}

impl fmt::Display for SelectionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionPolicy::TopN(n) => write!(f, "top:{n}"),
            SelectionPolicy::AboveTreeAverage => f.write_str("above-avg"),
        }
    }
}

impl FromStr for SelectionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "above-avg" {
            return Ok(SelectionPolicy::AboveTreeAverage);
        }
        s.strip_prefix("top:")
            .and_then(|n| n.parse().ok())
            .map(SelectionPolicy::TopN)
            .ok_or_else(|| Error::Parse(format!("unknown policy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceStrategy {
    /// Member nearest the row-space mean, then its nearest neighbours.
    CentroidClosest,
    /// Most outlying member, then greedy max-min additions.
    IterativeFarthest,
}

impl FromStr for ReferenceStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centroid" | "centroid_closest" => Ok(ReferenceStrategy::CentroidClosest),
            "farthest" | "iterative_farthest" => Ok(ReferenceStrategy::IterativeFarthest),
            other => Err(Error::Parse(format!("unknown reference strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    Min,
    Max,
    Mean,
    Median,
    EuclideanNorm,
}

impl Aggregate {
    pub fn apply(self, values: &[f64]) -> f64 {
        use crate::util::{mean, median};
        match self {
            Aggregate::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            Aggregate::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregate::Mean => mean(values),
            Aggregate::Median => median(values),
            Aggregate::EuclideanNorm => values.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

impl FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Aggregate::Min),
            "max" => Ok(Aggregate::Max),
            "mean" => Ok(Aggregate::Mean),
            "median" => Ok(Aggregate::Median),
            "l2" | "euclidean_norm" => Ok(Aggregate::EuclideanNorm),
            other => Err(Error::Parse(format!("unknown aggregate `{other}`"))),
        }
    }
}

/// Where a member's weight enters the sample-to-member distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingMode {
    /// `|s - w_m * L[m]|`: the member's row is scaled before the distance.
    RowScale,
    /// `w_m * |s - L[m]|`: the distance itself is scaled.
    DistanceScale,
}

impl FromStr for WeightingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row" | "row_scale" => Ok(WeightingMode::RowScale),
            "distance" | "distance_scale" => Ok(WeightingMode::DistanceScale),
            other => Err(Error::Parse(format!("unknown weighting `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringConfig {
    pub policy: SelectionPolicy,
    pub refs: usize,
    pub strategy: ReferenceStrategy,
    pub aggregate: Aggregate,
    pub weighting: WeightingMode,
    pub silhouette_space: SilhouetteSpace,
}

impl Default for SteeringConfig {
    fn default() -> Self {
        SteeringConfig {
            policy: SelectionPolicy::AboveTreeAverage,
            refs: 1,
            strategy: ReferenceStrategy::CentroidClosest,
            aggregate: Aggregate::Mean,
            weighting: WeightingMode::RowScale,
            silhouette_space: SilhouetteSpace::Feature,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm01_cases() {
        assert_eq!(norm01(&[2.0, 4.0, 6.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(norm01(&[5.0, 5.0, 5.0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(norm01(&[0.0, 0.3]), vec![0.0, 0.3]);
        assert!(norm01(&[]).is_empty());
    }

    #[test]
    fn aggregates() {
        let v = [3.0, 1.0, 4.0, 2.0];
        assert_eq!(Aggregate::Min.apply(&v), 1.0);
        assert_eq!(Aggregate::Max.apply(&v), 4.0);
        assert_eq!(Aggregate::Mean.apply(&v), 2.5);
        assert_eq!(Aggregate::Median.apply(&v), 2.5);
        assert_eq!(Aggregate::EuclideanNorm.apply(&v), 30f64.sqrt());
    }

    #[test]
    fn parse_flags() {
        assert_eq!("top:3".parse::<SelectionPolicy>().unwrap(), SelectionPolicy::TopN(3));
        assert_eq!(
            "above-avg".parse::<SelectionPolicy>().unwrap(),
            SelectionPolicy::AboveTreeAverage
        );
        assert!("top:x".parse::<SelectionPolicy>().is_err());
        assert_eq!("l2".parse::<Aggregate>().unwrap(), Aggregate::EuclideanNorm);
        assert_eq!("farthest".parse::<ReferenceStrategy>().unwrap(), ReferenceStrategy::IterativeFarthest);
        assert_eq!("distance".parse::<WeightingMode>().unwrap(), WeightingMode::DistanceScale);
    }
}
