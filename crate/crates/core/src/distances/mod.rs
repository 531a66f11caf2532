//! NCD and NRC distances, pairwise matrices, and row-wise standardization.

mod matrix;
mod standardize;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::compressors::{compressed_size, concat_compressed_size, CodecId, RlzFactorizer};
use crate::error::{Error, Result};

pub use matrix::{build_distance_matrix, DistanceMatrix, MatrixSidecar, Measure};
pub use standardize::{
    compute_row_stats, standardize_rows, RowStat, RowStats, StatsProvenance, STD_FLOOR,
};

/// One object of a corpus: an id, its class, and the bytes being compressed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusObject {
    pub id: String,
    pub class_label: String,
    #[serde(skip)]
    pub payload: Vec<u8>,
    pub alphabet_size: usize,
}

impl CorpusObject {
    /// Builds an object whose alphabet size is the number of distinct
    /// symbols in the payload (at least 2).
    pub fn new(id: impl Into<String>, class_label: impl Into<String>, payload: Vec<u8>) -> Result<Self> {
        let id = id.into();
        if payload.is_empty() {
            return Err(Error::InvalidInput(format!("object {id} has an empty payload")));
        }
        let alphabet_size = distinct_symbols(&payload).max(2);
        Ok(CorpusObject {
            id,
            class_label: class_label.into(),
            payload,
            alphabet_size,
        })
    }

    pub fn with_alphabet_size(mut self, alphabet_size: usize) -> Result<Self> {
        if alphabet_size < 2 {
            return Err(Error::InvalidInput(format!(
                "alphabet size must be at least 2, got {alphabet_size}"
            )));
        }
        self.alphabet_size = alphabet_size;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }
}

pub fn distinct_symbols(data: &[u8]) -> usize {
    data.iter().collect::<BTreeSet<_>>().len()
}

/// `(C(xy) - min(C(x), C(y))) / max(C(x), C(y))`, clamped below at zero.
pub fn ncd_from_sizes(cx: usize, cy: usize, cxy: usize) -> f64 {
    let (lo, hi) = (cx.min(cy) as f64, cx.max(cy) as f64);
    ((cxy as f64 - lo) / hi).max(0.0)
}

pub fn ncd(x: &CorpusObject, y: &CorpusObject, codec: CodecId) -> Result<f64> {
    if !codec.is_general() {
        return Err(Error::WrongCodecFamily(codec));
    }
    let tag = |e: Error| match e {
        Error::CodecError { codec, message, .. } => Error::CodecError {
            codec,
            ids: format!("{}, {}", x.id, y.id),
            message,
        },
        other => other,
    };
    let cx = compressed_size(&x.payload, codec).map_err(tag)?;
    let cy = compressed_size(&y.payload, codec).map_err(tag)?;
    let cxy = concat_compressed_size(&x.payload, &y.payload, codec).map_err(tag)?;
    Ok(ncd_from_sizes(cx, cy, cxy))
}

/// Relative size normalized by the target's maximal code length,
/// `bits / (|x| log2 |A|)`.
pub fn nrc_from_bits(bits: u64, target_len: usize, alphabet_size: usize) -> Result<f64> {
    if alphabet_size < 2 {
        return Err(Error::InvalidInput(format!(
            "alphabet size must be at least 2, got {alphabet_size}"
        )));
    }
    if target_len == 0 {
        return Err(Error::InvalidInput("empty NRC target".into()));
    }
    Ok(bits as f64 / (target_len as f64 * (alphabet_size as f64).log2()))
}

pub fn nrc(x: &CorpusObject, reference: &CorpusObject) -> Result<f64> {
    let factorizer = RlzFactorizer::new(&reference.payload)?;
    nrc_against(x, &factorizer)
}

pub(crate) fn nrc_against(x: &CorpusObject, factorizer: &RlzFactorizer<'_>) -> Result<f64> {
    if x.alphabet_size < 2 {
        return Err(Error::InvalidInput(format!(
            "alphabet size must be at least 2, got {}",
            x.alphabet_size
        )));
    }
    let parse = factorizer.factorize(&x.payload)?;
    let bits = parse.cost_bits(factorizer.reference().len(), x.alphabet_size)?;
    nrc_from_bits(bits, x.len(), x.alphabet_size)
}

/// Lowercase hexadecimal, two characters per byte.
pub fn hex_encode(data: &[u8]) -> Vec<u8> {
    hex::encode(data).into_bytes()
}

pub fn hex_decode(data: &[u8]) -> Result<Vec<u8>> {
    hex::decode(data).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::synthetic::redundant_text;

    fn obj(id: &str, payload: Vec<u8>) -> CorpusObject {
        CorpusObject::new(id, "c", payload).unwrap()
    }

    fn random_object(id: &str, n: usize, seed: u64) -> CorpusObject {
        let mut buf = vec![0u8; n];
        ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut buf);
        obj(id, buf)
    }

    fn text_object(n: usize, seed: u64) -> CorpusObject {
        obj("text", redundant_text(n, 1000, 0.01, seed))
    }

    #[test]
    fn ncd_formula() {
        assert!((ncd_from_sizes(100, 80, 120) - 0.4).abs() < 1e-15);
        assert!((ncd_from_sizes(80, 100, 120) - 0.4).abs() < 1e-15);
        // clamped below, not above
        assert_eq!(ncd_from_sizes(100, 80, 70), 0.0);
        assert!((ncd_from_sizes(100, 80, 190) - 1.1).abs() < 1e-12);
    }

    #[test]
    fn ncd_self_is_small() {
        let x = text_object(10_000, 5);
        for codec in CodecId::GENERAL {
            let d = ncd(&x, &x, codec).unwrap();
            assert!(d < 0.15, "{codec}: {d}");
        }
    }

    #[test]
    fn ncd_random_pairs_are_far() {
        for seed in 0..20 {
            let x = random_object("x", 10_000, 2 * seed);
            let y = random_object("y", 10_000, 2 * seed + 1);
            for codec in CodecId::GENERAL {
                let d = ncd(&x, &y, codec).unwrap();
                assert!(d > 0.9, "{codec} seed {seed}: {d}");
            }
        }
    }

    #[test]
    fn ncd_rejects_relative_codec() {
        let x = obj("x", b"abc".to_vec());
        assert!(matches!(ncd(&x, &x, CodecId::Rlz), Err(Error::WrongCodecFamily(_))));
    }

    #[test]
    fn nrc_formula() {
        assert!((nrc_from_bits(1200, 300, 16).unwrap() - 1.0).abs() < 1e-15);
        assert!(nrc_from_bits(1200, 300, 1).is_err());
    }

    fn random_symbols(n: usize, alphabet: u8, seed: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(0..alphabet)).collect()
    }

    #[test]
    fn nrc_self_is_small() {
        let x = obj("x", random_symbols(4096, 64, 9));
        assert_eq!(x.alphabet_size, 64);
        let d = nrc(&x, &x).unwrap();
        assert!(d <= 0.1, "{d}");
        // one copy: 1 + 12 + 13 bits over 4096 * 6
        assert!((d - 26.0 / (4096.0 * 6.0)).abs() < 1e-15);
    }

    #[test]
    fn nrc_random_pairs_are_far() {
        for seed in 0..20 {
            let x = obj("x", random_symbols(4096, 64, 2 * seed));
            let y = obj("y", random_symbols(4096, 64, 2 * seed + 1));
            let d = nrc(&x, &y).unwrap();
            assert!(d >= 0.8, "seed {seed}: {d}");
        }
    }

    #[test]
    fn nrc_rejects_small_alphabet() {
        let mut x = obj("x", b"aaaa".to_vec());
        assert_eq!(x.alphabet_size, 2);
        x.alphabet_size = 1;
        assert!(matches!(nrc(&x, &x), Err(Error::InvalidInput(_))));
        assert!(obj("y", b"ab".to_vec()).with_alphabet_size(1).is_err());
    }

    #[test]
    fn hex_basics() {
        assert_eq!(hex_encode(&[0x00, 0xff]), b"00ff");
        assert!(hex_encode(&[]).is_empty());
        let mut bytes = vec![0u8; 1024];
        ChaCha8Rng::seed_from_u64(4).fill_bytes(&mut bytes);
        let encoded = hex_encode(&bytes);
        assert_eq!(encoded.len(), 2048);
        assert_eq!(distinct_symbols(&encoded), 16);
        assert_eq!(hex_decode(&encoded).unwrap(), bytes);
    }

    #[test]
    fn empty_payload_rejected() {
        assert!(CorpusObject::new("e", "c", vec![]).is_err());
    }
}
