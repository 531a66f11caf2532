//! Behavior-space distances, Ward agglomeration, dendrogram cuts and
//! silhouette-driven partition selection.

mod linkage;
mod partition;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::compressors::CodecId;
use crate::distances::{Measure, RowStats};
use crate::error::{Error, Result};

pub use linkage::{linkage, CondensedDistances, Criterion, Dendrogram, Merge};
pub use partition::{
    best_partition, best_partition_in, enumerate_partitions, silhouette, Cut, Partition,
    SilhouetteSpace, SilhouetteScores,
};

/// Samples described by their compression distances to a set of reference
/// objects (the columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorMatrix {
    pub row_ids: Vec<String>,
    pub row_labels: Vec<String>,
    pub column_ids: Vec<String>,
    pub column_labels: Vec<String>,
    pub class_index_map: ClassIndexMap,
    /// Where the distances came from, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<MatrixProvenance>,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixProvenance {
    pub measure: Measure,
    pub codec: CodecId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_stats: Option<RowStats>,
}

impl BehaviorMatrix {
    pub fn new(
        row_ids: Vec<String>,
        row_labels: Vec<String>,
        column_ids: Vec<String>,
        column_labels: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let (r, c) = (row_ids.len(), column_ids.len());
        if row_labels.len() != r {
            return Err(Error::DimensionError {
                left: r,
                right: row_labels.len(),
            });
        }
        if column_labels.len() != c {
            return Err(Error::DimensionError {
                left: c,
                right: column_labels.len(),
            });
        }
        if values.len() != r * c {
            return Err(Error::DimensionError {
                left: r * c,
                right: values.len(),
            });
        }
        let class_index_map = ClassIndexMap::from_labels(&column_labels);
        Ok(BehaviorMatrix {
            row_ids,
            row_labels,
            column_ids,
            column_labels,
            class_index_map,
            provenance: None,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.n_cols();
        &self.values[i * c..(i + 1) * c]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.row_ids.iter().position(|x| x == id)
    }

    pub fn column_index(&self, id: &str) -> Option<usize> {
        self.column_ids.iter().position(|x| x == id)
    }

    pub fn with_provenance(mut self, provenance: Option<MatrixProvenance>) -> Self {
        self.provenance = provenance;
        self
    }

    /// Keeps only the rows in `ids`, in that order.
    pub fn select_rows(&self, ids: &[String]) -> Result<BehaviorMatrix> {
        let mut values = Vec::with_capacity(ids.len() * self.n_cols());
        let mut labels = Vec::with_capacity(ids.len());
        for id in ids {
            let i = self
                .row_index(id)
                .ok_or_else(|| Error::InvalidInput(format!("unknown row id {id}")))?;
            values.extend_from_slice(self.row(i));
            labels.push(self.row_labels[i].clone());
        }
        Ok(BehaviorMatrix::new(
            ids.to_vec(),
            labels,
            self.column_ids.clone(),
            self.column_labels.clone(),
            values,
        )?
        .with_provenance(self.provenance.clone()))
    }

    /// Keeps only the columns in `ids`, in that order.
    pub fn select_columns(&self, ids: &[String]) -> Result<BehaviorMatrix> {
        let cols = ids
            .iter()
            .map(|id| {
                self.column_index(id)
                    .ok_or_else(|| Error::InvalidInput(format!("unknown column id {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let values = (0..self.n_rows())
            .flat_map(|i| cols.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        Ok(BehaviorMatrix::new(
            self.row_ids.clone(),
            self.row_labels.clone(),
            ids.to_vec(),
            cols.iter().map(|&j| self.column_labels[j].clone()).collect(),
            values,
        )?
        .with_provenance(self.provenance.clone()))
    }

    /// Rows as owned vectors, in row order.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Assignment of feature columns to classes; every column index appears in
/// exactly one block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassIndexMap {
    blocks: BTreeMap<String, Vec<usize>>,
    dim: usize,
}

impl ClassIndexMap {
    pub fn new(blocks: BTreeMap<String, Vec<usize>>, dim: usize) -> Result<Self> {
        let mut seen = vec![false; dim];
        for (class, idx) in &blocks {
            for &i in idx {
                match seen.get_mut(i) {
                    None => {
                        return Err(Error::InvalidPartition(format!(
                            "index {i} of class {class} exceeds dimension {dim}"
                        )))
                    }
                    Some(true) => {
                        return Err(Error::InvalidPartition(format!("index {i} appears twice")))
                    }
                    Some(s) => *s = true,
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("index {i} is not covered")));
        }
        Ok(ClassIndexMap { blocks, dim })
    }

    pub fn from_labels(labels: &[String]) -> Self {
        let mut blocks: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            blocks.entry(l.clone()).or_default().push(i);
        }
        ClassIndexMap {
            blocks,
            dim: labels.len(),
        }
    }

    /// A single block covering every index.
    pub fn single(dim: usize) -> Self {
        ClassIndexMap {
            blocks: BTreeMap::from([(String::new(), (0..dim).collect())]),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.blocks.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Sum over classes of the Euclidean distance restricted to that class's
    /// columns.
    pub fn grouped_distance(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        check_dims(p, q)?;
        if p.len() != self.dim {
            return Err(Error::DimensionError {
                left: self.dim,
                right: p.len(),
            });
        }
        Ok(self
            .blocks
            .values()
            .map(|idx| {
                idx.iter()
                    .map(|&x| (p[x] - q[x]) * (p[x] - q[x]))
                    .sum::<f64>()
                    .sqrt()
            })
            .sum())
    }
}

fn check_dims(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::DimensionError {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(())
}

/// Plain Euclidean distance between two behavior rows.
pub fn behavior_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    check_dims(p, q)?;
    Ok(crate::util::euclidean(p, q))
}

/// Euclidean distance computed per class block and summed, which weights
/// each class's features as a unit.
pub fn class_grouped_distance(p: &[f64], q: &[f64], classes: &ClassIndexMap) -> Result<f64> {
    classes.grouped_distance(p, q)
}

/// Square symmetric matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct Pairwise {
    n: usize,
    values: Vec<f64>,
}

impl Pairwise {
    /// Symmetrizes by averaging `(m[i][j] + m[j][i]) / 2`.
    pub fn from_square(n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionError {
                left: n * n,
                right: values.len(),
            });
        }
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = if i == j {
                    0.0
                } else {
                    0.5 * (values[i * n + j] + values[j * n + i])
                };
            }
        }
        Ok(Pairwise { n, values: out })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        Pairwise { n, values }
    }

    /// All pairwise `metric` distances between `rows`.
    pub fn from_rows(rows: &[&[f64]], metric: impl Fn(&[f64], &[f64]) -> f64) -> Self {
        Self::from_fn(rows.len(), |i, j| metric(rows[i], rows[j]))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn subset(&self, idx: &[usize]) -> Pairwise {
        Pairwise::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    pub fn scaled(&self, factor: f64) -> Pairwise {
        Pairwise {
            n: self.n,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn condensed(&self) -> CondensedDistances {
        let mut out = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                out.push(self.get(i, j));
            }
        }
        CondensedDistances::new(self.n, out).expect("length matches by construction")
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn two_blocks() -> ClassIndexMap {
        ClassIndexMap::new(
            BTreeMap::from([("a".to_string(), vec![0, 1]), ("b".to_string(), vec![2, 3])]),
            4,
        )
        .unwrap()
    }

    #[test]
    fn euclidean_basics() {
        assert_eq!(behavior_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(behavior_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert!(matches!(
            behavior_distance(&[0.0], &[1.0, 2.0]),
            Err(Error::DimensionError { .. })
        ));
    }

    #[test]
    fn euclidean_matches_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p: Vec<f64> = (0..10).map(|_| rng.gen()).collect();
        let q: Vec<f64> = (0..10).map(|_| rng.gen()).collect();
        let mut acc = 0.0;
        for i in 0..10 {
            acc += (p[i] - q[i]).powi(2);
        }
        assert!((behavior_distance(&p, &q).unwrap() - acc.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn grouped_examples() {
        let p = [3.0, 4.0, 3.0, 4.0];
        let q = [0.0; 4];
        assert_eq!(class_grouped_distance(&p, &q, &two_blocks()).unwrap(), 10.0);
        assert!((behavior_distance(&p, &q).unwrap() - 50f64.sqrt()).abs() < 1e-12);
        assert_eq!(class_grouped_distance(&p, &p, &two_blocks()).unwrap(), 0.0);
        let single = ClassIndexMap::single(4);
        assert_eq!(
            class_grouped_distance(&p, &q, &single).unwrap(),
            behavior_distance(&p, &q).unwrap()
        );
    }

    #[test]
    fn invalid_partitions() {
        let dup = BTreeMap::from([("a".to_string(), vec![0, 1]), ("b".to_string(), vec![1])]);
        assert!(matches!(ClassIndexMap::new(dup, 2), Err(Error::InvalidPartition(_))));
        let gap = BTreeMap::from([("a".to_string(), vec![0])]);
        assert!(matches!(ClassIndexMap::new(gap, 2), Err(Error::InvalidPartition(_))));
        let over = BTreeMap::from([("a".to_string(), vec![0, 5])]);
        assert!(matches!(ClassIndexMap::new(over, 2), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn behavior_matrix_selection() {
        let m = BehaviorMatrix::new(
            vec!["r0".into(), "r1".into()],
            vec!["a".into(), "b".into()],
            vec!["c0".into(), "c1".into(), "c2".into()],
            vec!["a".into(), "b".into(), "a".into()],
            vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
        )
        .unwrap();
        assert_eq!(m.class_index_map.blocks().collect::<Vec<_>>(), vec![("a", &[0, 2][..]), ("b", &[1][..])]);
        let c = m.select_columns(&["c2".into(), "c0".into()]).unwrap();
        assert_eq!(c.row(1), &[5.0, 3.0]);
        let r = m.select_rows(&["r1".into()]).unwrap();
        assert_eq!(r.row(0), &[3.0, 4.0, 5.0]);
    }

    #[test]
    fn pairwise_symmetrizes() {
        let p = Pairwise::from_square(2, &[0.1, 0.4, 0.2, 0.3]).unwrap();
        assert_eq!(p.get(0, 1), p.get(1, 0));
        assert!((p.get(0, 1) - 0.3).abs() < 1e-15);
        assert_eq!(p.get(0, 0), 0.0);
    }

    fn vectors(dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(-10.0f64..10.0, dim),
            prop::collection::vec(-10.0f64..10.0, dim),
        )
    }

    proptest! {
        #[test]
        fn grouped_dominates_plain((p, q) in vectors(6), split in 1usize..6) {
            let map = ClassIndexMap::new(
                BTreeMap::from([("a".to_string(), (0..split).collect()),
                                ("b".to_string(), (split..6).collect())]), 6).unwrap();
            let grouped = class_grouped_distance(&p, &q, &map).unwrap();
            let plain = behavior_distance(&p, &q).unwrap();
            prop_assert!(grouped >= plain - 1e-12);
            prop_assert!((class_grouped_distance(&q, &p, &map).unwrap() - grouped).abs() < 1e-12);
            prop_assert!(grouped >= 0.0);
        }
    }
}
