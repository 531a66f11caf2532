use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::standardize::RowStats;
use super::{ncd_from_sizes, nrc_against, CorpusObject};
use crate::compressors::{compressed_size, concat_compressed_size, CodecId, RlzFactorizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    Ncd,
    Nrc,
    NrcStandardized,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Ncd => "ncd",
            Measure::Nrc => "nrc",
            Measure::NrcStandardized => "nrc-standardized",
        })
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ncd" => Ok(Measure::Ncd),
            "nrc" => Ok(Measure::Nrc),
            "nrc-standardized" => Ok(Measure::NrcStandardized),
            other => Err(Error::Parse(format!("unknown measure `{other}`"))),
        }
    }
}

/// Square matrix of compression distances, row-major.
///
/// Rows and columns share one object ordering. Entry `(i, j)` is the
/// distance of object `i` against object `j` (for NCD the concatenation is
/// `i` then `j`; for NRC `i` is the target and `j` the reference). Both
/// orderings are stored as computed, so the matrix is generally not
/// symmetric; use [`DistanceMatrix::symmetric`] when a consumer needs it.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub object_ids: Vec<String>,
    pub labels: Vec<String>,
    pub measure: Measure,
    pub codec: CodecId,
    pub row_stats: Option<RowStats>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(
        object_ids: Vec<String>,
        labels: Vec<String>,
        rows: Vec<Vec<f64>>,
        measure: Measure,
        codec: CodecId,
    ) -> Result<Self> {
        let n = object_ids.len();
        if labels.len() != n {
            return Err(Error::DimensionError {
                left: n,
                right: labels.len(),
            });
        }
        if rows.len() != n {
            return Err(Error::DimensionError {
                left: n,
                right: rows.len(),
            });
        }
        let mut values = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionError {
                    left: n,
                    right: row.len(),
                });
            }
            values.extend(row);
        }
        check_unique(&object_ids)?;
        Ok(DistanceMatrix {
            object_ids,
            labels,
            measure,
            codec,
            row_stats: None,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.object_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.object_ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.len();
        &mut self.values[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.len().max(1))
    }

    /// `(m[i][j] + m[j][i]) / 2`.
    pub fn symmetric(&self, i: usize, j: usize) -> f64 {
        0.5 * (self.get(i, j) + self.get(j, i))
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.object_ids.iter().position(|x| x == id)
    }

    /// Restricts rows and columns to `ids`, in that order.
    pub fn subset(&self, ids: &[String]) -> Result<DistanceMatrix> {
        let idx = ids
            .iter()
            .map(|id| {
                self.index_of(id)
                    .ok_or_else(|| Error::InvalidInput(format!("unknown object id {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let rows = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| self.get(i, j)).collect())
            .collect();
        let mut out = DistanceMatrix::from_rows(
            ids.to_vec(),
            idx.iter().map(|&i| self.labels[i].clone()).collect(),
            rows,
            self.measure,
            self.codec,
        )?;
        out.row_stats = self.row_stats.clone();
        Ok(out)
    }

    /// CSV body: header `id,<id_1>,...`, then one row per object with values
    /// in shortest round-trip decimal form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(std::iter::once("id").chain(self.object_ids.iter().map(String::as_str)))
            .map_err(csv_err)?;
        for (i, id) in self.object_ids.iter().enumerate() {
            let mut record = vec![id.clone()];
            record.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn sidecar(&self) -> MatrixSidecar {
        MatrixSidecar {
            measure: self.measure,
            codec: self.codec,
            object_ids: self.object_ids.clone(),
            labels: self.labels.clone(),
            row_stats: self.row_stats.clone(),
        }
    }

    pub fn read_csv<R: Read>(reader: R, sidecar: MatrixSidecar) -> Result<DistanceMatrix> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let csv_err = |e: csv::Error| Error::Parse(e.to_string());
        let header: Vec<String> = r
            .headers()
            .map_err(csv_err)?
            .iter()
            .skip(1)
            .map(str::to_owned)
            .collect();
        if header != sidecar.object_ids {
            return Err(Error::Parse(
                "matrix header does not match sidecar object ids".into(),
            ));
        }
        let mut rows = Vec::with_capacity(header.len());
        for (i, record) in r.records().enumerate() {
            let record = record.map_err(csv_err)?;
            if record.get(0) != Some(header.get(i).map(String::as_str).unwrap_or("")) {
                return Err(Error::Parse(format!("row {i} id does not match header")));
            }
            let row = record
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("row {i}: `{v}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let mut m =
            DistanceMatrix::from_rows(header, sidecar.labels, rows, sidecar.measure, sidecar.codec)?;
        m.row_stats = sidecar.row_stats;
        Ok(m)
    }
}

/// JSON metadata written next to a matrix CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub measure: Measure,
    pub codec: CodecId,
    pub object_ids: Vec<String>,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_stats: Option<RowStats>,
}

fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate object id {id}")));
        }
    }
    Ok(())
}

/// Computes every ordered pair `(i, j)` of the corpus, including the
/// diagonal. Work is spread over the current rayon pool; the result does not
/// depend on the number of workers.
pub fn build_distance_matrix(
    corpus: &[CorpusObject],
    measure: Measure,
    codec: CodecId,
) -> Result<DistanceMatrix> {
    if corpus.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 objects, got {}",
            corpus.len()
        )));
    }
    let ids: Vec<String> = corpus.iter().map(|o| o.id.clone()).collect();
    check_unique(&ids)?;
    let n = corpus.len();
    let pair_err = |i: usize, j: usize, e: Error| Error::Pair {
        row: corpus[i].id.clone(),
        col: corpus[j].id.clone(),
        source: Box::new(e),
    };

    let rows: Vec<Vec<f64>> = match measure {
        Measure::Ncd => {
            if !codec.is_general() {
                return Err(Error::WrongCodecFamily(codec));
            }
            let singles = corpus
                .par_iter()
                .enumerate()
                .map(|(i, o)| compressed_size(&o.payload, codec).map_err(|e| pair_err(i, i, e)))
                .collect::<Result<Vec<_>>>()?;
            (0..n)
                .into_par_iter()
                .map(|i| {
                    (0..n)
                        .into_par_iter()
                        .map(|j| {
                            let cxy =
                                concat_compressed_size(&corpus[i].payload, &corpus[j].payload, codec)
                                    .map_err(|e| pair_err(i, j, e))?;
                            Ok(ncd_from_sizes(singles[i], singles[j], cxy))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?
        }
        Measure::Nrc => {
            if codec != CodecId::Rlz {
                return Err(Error::WrongCodecFamily(codec));
            }
            // one suffix array per reference column
            let columns = (0..n)
                .into_par_iter()
                .map(|j| {
                    let factorizer =
                        RlzFactorizer::new(&corpus[j].payload).map_err(|e| pair_err(j, j, e))?;
                    (0..n)
                        .into_par_iter()
                        .map(|i| nrc_against(&corpus[i], &factorizer).map_err(|e| pair_err(i, j, e)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            (0..n)
                .map(|i| columns.iter().map(|col| col[i]).collect())
                .collect()
        }
        Measure::NrcStandardized => {
            return Err(Error::MeasureMismatch {
                expected: "ncd or nrc".into(),
                found: measure.to_string(),
            })
        }
    };
    DistanceMatrix::from_rows(
        ids,
        corpus.iter().map(|o| o.class_label.clone()).collect(),
        rows,
        measure,
        codec,
    )
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::distances::{hex_encode, ncd, nrc};
    use crate::synthetic::MarkovSource;

    fn corpus(n: usize, seed: u64) -> Vec<CorpusObject> {
        let sources = [MarkovSource::new(seed), MarkovSource::new(seed + 100)];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let payload = sources[i % 2].generate(1500, &mut rng);
                CorpusObject::new(format!("doc{i}"), format!("class{}", i % 2), payload).unwrap()
            })
            .collect()
    }

    fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .unwrap()
            .install(f)
    }

    #[test]
    fn identical_objects() {
        let base = corpus(1, 3).remove(0).payload;
        let objs: Vec<_> = (0..3)
            .map(|i| CorpusObject::new(format!("o{i}"), "a", base.clone()).unwrap())
            .collect();
        let m = build_distance_matrix(&objs, Measure::Ncd, CodecId::Deflate).unwrap();
        let off: Vec<f64> = (0..3)
            .flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j))
            .collect();
        assert!(off.iter().all(|&v| v < 0.15));
        assert!(off.iter().all(|&v| (v - off[0]).abs() <= 1e-12));
    }

    #[test]
    fn pair_matches_direct_computation() {
        let objs = corpus(2, 8);
        let m = build_distance_matrix(&objs, Measure::Ncd, CodecId::Lzma).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.get(0, 1), ncd(&objs[0], &objs[1], CodecId::Lzma).unwrap());
        assert_eq!(m.get(1, 0), ncd(&objs[1], &objs[0], CodecId::Lzma).unwrap());

        let r = build_distance_matrix(&objs, Measure::Nrc, CodecId::Rlz).unwrap();
        assert_eq!(r.get(0, 1), nrc(&objs[0], &objs[1]).unwrap());
        assert_eq!(r.get(1, 0), nrc(&objs[1], &objs[0]).unwrap());
    }

    #[test]
    fn scheduling_independent() {
        let objs = corpus(12, 21);
        for (measure, codec) in [(Measure::Ncd, CodecId::Deflate), (Measure::Nrc, CodecId::Rlz)] {
            // sequential reference computation
            let oracle: Vec<Vec<f64>> = objs
                .iter()
                .map(|x| {
                    objs.iter()
                        .map(|y| match measure {
                            Measure::Ncd => ncd(x, y, codec).unwrap(),
                            _ => nrc(x, y).unwrap(),
                        })
                        .collect()
                })
                .collect();
            for workers in [1, 2, 8] {
                let m = in_pool(workers, || build_distance_matrix(&objs, measure, codec).unwrap());
                for (i, row) in oracle.iter().enumerate() {
                    assert_eq!(m.row(i), row.as_slice(), "{measure} workers={workers}");
                }
            }
        }
    }

    #[test]
    fn ncd_near_symmetry_and_identity() {
        let objs = corpus(12, 4);
        let m = build_distance_matrix(&objs, Measure::Ncd, CodecId::Deflate).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                assert!((m.get(i, j) - m.get(j, i)).abs() <= 0.05);
                assert!((0.0..=1.5).contains(&m.get(i, j)));
            }
        }
    }

    #[test]
    fn ncd_diagonal_is_row_minimum_on_random_objects() {
        use rand::RngCore;
        let objs: Vec<_> = (0..6)
            .map(|i| {
                let mut b = vec![0u8; 3000];
                ChaCha8Rng::seed_from_u64(50 + i).fill_bytes(&mut b);
                CorpusObject::new(format!("r{i}"), "a", b).unwrap()
            })
            .collect();
        for codec in CodecId::GENERAL {
            let m = build_distance_matrix(&objs, Measure::Ncd, codec).unwrap();
            for i in 0..6 {
                for j in (0..6).filter(|&j| j != i) {
                    assert!(m.get(i, i) < m.get(i, j), "{codec} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn rejects_mismatched_codec_and_small_corpus() {
        let objs = corpus(3, 1);
        assert!(matches!(
            build_distance_matrix(&objs, Measure::Nrc, CodecId::Deflate),
            Err(Error::WrongCodecFamily(_))
        ));
        assert!(matches!(
            build_distance_matrix(&objs, Measure::Ncd, CodecId::Rlz),
            Err(Error::WrongCodecFamily(_))
        ));
        assert!(build_distance_matrix(&objs[..1], Measure::Ncd, CodecId::Deflate).is_err());
        let dup = vec![objs[0].clone(), objs[0].clone()];
        assert!(build_distance_matrix(&dup, Measure::Ncd, CodecId::Deflate).is_err());
    }

    #[test]
    fn failing_pair_is_identified() {
        let mut objs = corpus(3, 1);
        objs[2].alphabet_size = 1;
        let err = build_distance_matrix(&objs, Measure::Nrc, CodecId::Rlz).unwrap_err();
        match err {
            Error::Pair { row, .. } => assert_eq!(row, "doc2"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let objs: Vec<_> = corpus(5, 2)
            .into_iter()
            .map(|mut o| {
                o.payload = hex_encode(&o.payload);
                o
            })
            .collect();
        let m = build_distance_matrix(&objs, Measure::Nrc, CodecId::Rlz).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,doc0,doc1,doc2,doc3,doc4\n"));
        let sidecar: MatrixSidecar =
            serde_json::from_str(&serde_json::to_string(&m.sidecar()).unwrap()).unwrap();
        let back = DistanceMatrix::read_csv(buf.as_slice(), sidecar).unwrap();
        assert_eq!(back, m);
    }
}
