use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::matrix::{DistanceMatrix, Measure};
use super::{nrc_against, CorpusObject};
use crate::compressors::RlzFactorizer;
use crate::error::{Error, Result};
use crate::util::{mean, population_std};

/// Lower bound applied to a row's standard deviation before dividing.
pub const STD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatsProvenance {
    /// Estimated against a held-out set that never enters training or testing.
    External,
    /// Estimated against the training objects of the current fold.
    Pipeline,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowStat {
    pub mean: f64,
    pub std: f64,
}

impl RowStat {
    pub fn from_values(values: &[f64]) -> Self {
        RowStat {
            mean: mean(values),
            std: population_std(values).max(STD_FLOOR),
        }
    }
}

/// Per-object mean and (population) standard deviation of its NRC row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowStats {
    pub provenance: StatsProvenance,
    /// Ids of the objects the statistics were measured against.
    pub reference_ids: Vec<String>,
    pub stats: BTreeMap<String, RowStat>,
}

impl RowStats {
    /// Statistics read off an existing matrix, using the columns of
    /// `reference_ids` and skipping each row's own column.
    pub fn from_matrix(
        matrix: &DistanceMatrix,
        reference_ids: &[String],
        provenance: StatsProvenance,
    ) -> Result<RowStats> {
        let cols = reference_ids
            .iter()
            .map(|id| {
                matrix
                    .index_of(id)
                    .ok_or_else(|| Error::InvalidInput(format!("unknown reference id {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut stats = BTreeMap::new();
        for (i, id) in matrix.object_ids.iter().enumerate() {
            let row = matrix.row(i);
            let values: Vec<f64> = cols.iter().filter(|&&j| j != i).map(|&j| row[j]).collect();
            if values.len() < 2 {
                return Err(Error::InsufficientReferences(values.len()));
            }
            stats.insert(id.clone(), RowStat::from_values(&values));
        }
        Ok(RowStats {
            provenance,
            reference_ids: reference_ids.to_vec(),
            stats,
        })
    }

    pub fn get(&self, id: &str) -> Option<&RowStat> {
        self.stats.get(id)
    }
}

/// Mean and std of `nrc(target ‖ r)` over all references `r` other than the
/// target itself.
pub fn compute_row_stats(
    targets: &[CorpusObject],
    references: &[CorpusObject],
    provenance: StatsProvenance,
) -> Result<RowStats> {
    if references.len() < 2 {
        return Err(Error::InsufficientReferences(references.len()));
    }
    let factorizers = references
        .iter()
        .map(|r| RlzFactorizer::new(&r.payload))
        .collect::<Result<Vec<_>>>()?;
    let mut stats = BTreeMap::new();
    for target in targets {
        let values = references
            .iter()
            .zip(&factorizers)
            .filter(|(r, _)| r.id != target.id)
            .map(|(_, f)| nrc_against(target, f))
            .collect::<Result<Vec<_>>>()?;
        if values.len() < 2 {
            return Err(Error::InsufficientReferences(values.len()));
        }
        stats.insert(target.id.clone(), RowStat::from_values(&values));
    }
    Ok(RowStats {
        provenance,
        reference_ids: references.iter().map(|r| r.id.clone()).collect(),
        stats,
    })
}

/// Z-scores every row of an NRC matrix with its own statistics.
pub fn standardize_rows(matrix: &DistanceMatrix, stats: &RowStats) -> Result<DistanceMatrix> {
    if matrix.measure != Measure::Nrc {
        return Err(Error::MeasureMismatch {
            expected: Measure::Nrc.to_string(),
            found: matrix.measure.to_string(),
        });
    }
    let mut out = matrix.clone();
    for i in 0..matrix.len() {
        let id = &matrix.object_ids[i];
        let stat = stats.get(id).ok_or_else(|| Error::MissingStats(id.clone()))?;
        for v in out.row_mut(i) {
            *v = (*v - stat.mean) / stat.std;
        }
    }
    out.measure = Measure::NrcStandardized;
    out.row_stats = Some(stats.clone());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compressors::CodecId;

    fn one_row_matrix(rows: Vec<Vec<f64>>, measure: Measure) -> DistanceMatrix {
        let n = rows.len();
        DistanceMatrix::from_rows(
            (0..n).map(|i| format!("o{i}")).collect(),
            vec!["a".into(); n],
            rows,
            measure,
            CodecId::Rlz,
        )
        .unwrap()
    }

    fn stats_for(pairs: &[(&str, f64, f64)], provenance: StatsProvenance) -> RowStats {
        RowStats {
            provenance,
            reference_ids: vec![],
            stats: pairs
                .iter()
                .map(|&(id, mean, std)| (id.to_string(), RowStat { mean, std }))
                .collect(),
        }
    }

    #[test]
    fn constant_row_floors_std() {
        let s = RowStat::from_values(&[0.5; 10]);
        assert_eq!(s.mean, 0.5);
        assert_eq!(s.std, STD_FLOOR);
    }

    #[test]
    fn population_convention() {
        let s = RowStat::from_values(&[0.2, 0.4, 0.6]);
        assert!((s.mean - 0.4).abs() < 1e-15);
        assert!((s.std - (0.08f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.std - 0.1633).abs() < 1e-4);
    }

    #[test]
    fn own_stats_give_unit_moments() {
        let m = one_row_matrix(vec![vec![1.0, 2.0, 3.0]; 3], Measure::Nrc);
        let own = RowStat::from_values(&[1.0, 2.0, 3.0]);
        let stats = stats_for(
            &[("o0", own.mean, own.std), ("o1", own.mean, own.std), ("o2", own.mean, own.std)],
            StatsProvenance::Pipeline,
        );
        let z = standardize_rows(&m, &stats).unwrap();
        assert_eq!(z.measure, Measure::NrcStandardized);
        let s = RowStat::from_values(z.row(0));
        assert!(s.mean.abs() < 1e-9 && (s.std - 1.0).abs() < 1e-9);
    }

    #[test]
    fn external_stats_formula() {
        let m = one_row_matrix(vec![vec![1.0, 2.0, 3.0]; 3], Measure::Nrc);
        let stats = stats_for(
            &[("o0", 2.0, 1.0), ("o1", 2.0, 1.0), ("o2", 2.0, 1.0)],
            StatsProvenance::External,
        );
        let z = standardize_rows(&m, &stats).unwrap();
        assert_eq!(z.row(0), &[-1.0, 0.0, 1.0]);
        assert_eq!(z.row_stats.unwrap().provenance, StatsProvenance::External);
    }

    #[test]
    fn stale_or_missing_stats_rejected() {
        let m = one_row_matrix(vec![vec![1.0, 2.0, 3.0]; 3], Measure::Nrc);
        let stats = stats_for(
            &[("o0", 2.0, 1.0), ("o1", 2.0, 1.0), ("o2", 2.0, 1.0)],
            StatsProvenance::External,
        );
        let z = standardize_rows(&m, &stats).unwrap();
        assert!(matches!(
            standardize_rows(&z, &stats),
            Err(Error::MeasureMismatch { .. })
        ));
        let partial = stats_for(&[("o0", 2.0, 1.0)], StatsProvenance::External);
        assert!(matches!(
            standardize_rows(&m, &partial),
            Err(Error::MissingStats(id)) if id == "o1"
        ));
        let ncd = one_row_matrix(vec![vec![0.1, 0.2]; 2], Measure::Ncd);
        assert!(standardize_rows(&ncd, &stats).is_err());
    }

    #[test]
    fn from_matrix_excludes_self() {
        let m = one_row_matrix(
            vec![
                vec![0.0, 0.2, 0.4, 0.6],
                vec![0.2, 0.0, 0.4, 0.8],
                vec![0.1, 0.3, 0.0, 0.5],
                vec![0.9, 0.9, 0.9, 0.0],
            ],
            Measure::Nrc,
        );
        let refs: Vec<String> = ["o0", "o1", "o2"].iter().map(|s| s.to_string()).collect();
        let stats = RowStats::from_matrix(&m, &refs, StatsProvenance::Pipeline).unwrap();
        let s0 = stats.get("o0").unwrap();
        assert!((s0.mean - 0.3).abs() < 1e-15);
        let s3 = stats.get("o3").unwrap();
        assert!((s3.mean - 0.9).abs() < 1e-15);
        assert_eq!(s3.std, STD_FLOOR);
        let two: Vec<String> = vec!["o0".into(), "o1".into()];
        assert!(matches!(
            RowStats::from_matrix(&m, &two, StatsProvenance::Pipeline),
            Err(Error::InsufficientReferences(1))
        ));
    }

    #[test]
    fn compute_row_stats_against_references() {
        let objs: Vec<CorpusObject> = ["abcabcabd", "abcabdabd", "xyzxyzxya", "abcxyzabc"]
            .iter()
            .enumerate()
            .map(|(i, p)| CorpusObject::new(format!("o{i}"), "a", p.as_bytes().to_vec()).unwrap())
            .collect();
        let stats = compute_row_stats(&objs[..1], &objs, StatsProvenance::External).unwrap();
        let direct: Vec<f64> = objs[1..]
            .iter()
            .map(|r| crate::distances::nrc(&objs[0], r).unwrap())
            .collect();
        assert_eq!(*stats.get("o0").unwrap(), RowStat::from_values(&direct));
        assert_eq!(stats.provenance, StatsProvenance::External);
        assert!(matches!(
            compute_row_stats(&objs, &objs[..1], StatsProvenance::External),
            Err(Error::InsufficientReferences(1))
        ));
    }
}
