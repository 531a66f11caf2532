//! Seeded order-2 Markov text sources for self-contained experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distances::CorpusObject;
use crate::error::Result;
use crate::util::mix;

pub const ALPHABET: &[u8; 28] = b"abcdefghijklmnopqrstuvwxyz .";
const SYMBOLS: usize = ALPHABET.len();
const DEFAULT_BRANCHING: usize = 4;

/// Order-2 Markov chain over [`ALPHABET`]: the next symbol depends on the
/// previous two.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovSource {
    // probabilities, one row per (prev2, prev1) context
    table: Vec<[f64; SYMBOLS]>,
}

impl MarkovSource {
    pub fn new(seed: u64) -> Self {
        Self::with_branching(seed, DEFAULT_BRANCHING)
    }

    /// Each context gets `branching` random successors with random weights.
    pub fn with_branching(seed: u64, branching: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let branching = branching.clamp(1, SYMBOLS);
        let table = (0..SYMBOLS * SYMBOLS)
            .map(|_| {
                let mut row = [0.0; SYMBOLS];
                for _ in 0..branching {
                    row[rng.gen_range(0..SYMBOLS)] += rng.gen_range(0.1..1.0);
                }
                let total: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p /= total);
                row
            })
            .collect();
        MarkovSource { table }
    }

    /// `(1 - weight) * self + weight * other`, row by row.
    pub fn blend(&self, other: &MarkovSource, weight: f64) -> MarkovSource {
        let w = weight.clamp(0.0, 1.0);
        let table = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(a, b)| {
                let mut row = [0.0; SYMBOLS];
                for k in 0..SYMBOLS {
                    row[k] = (1.0 - w) * a[k] + w * b[k];
                }
                row
            })
            .collect();
        MarkovSource { table }
    }

    pub fn generate<R: Rng>(&self, len: usize, rng: &mut R) -> Vec<u8> {
        let mut out = Vec::with_capacity(len);
        let (mut a, mut b) = (rng.gen_range(0..SYMBOLS), rng.gen_range(0..SYMBOLS));
        for _ in 0..len {
            let row = &self.table[a * SYMBOLS + b];
            let mut u: f64 = rng.gen();
            let mut next = SYMBOLS - 1;
            for (k, p) in row.iter().enumerate() {
                if u < *p {
                    next = k;
                    break;
                }
                u -= p;
            }
            out.push(ALPHABET[next]);
            a = b;
            b = next;
        }
        out
    }
}

/// A labelled corpus drawn from one Markov source per class.
///
/// Every class source is its own random table blended towards a shared base
/// table by `overlap`; within a class, each document is drawn from one of
/// `styles` sub-sources, blended towards the class table by `1 - style_spread`.
/// A fraction `atypical` of each class's documents is drawn instead from a
/// table of its own, so it carries no class signal and resembles nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovCorpus {
    pub classes: usize,
    pub docs_per_class: usize,
    pub doc_len: usize,
    pub overlap: f64,
    pub styles: usize,
    pub style_spread: f64,
    #[serde(default)]
    pub atypical: f64,
    pub seed: u64,
}

impl Default for MarkovCorpus {
    fn default() -> Self {
        MarkovCorpus {
            classes: 2,
            docs_per_class: 60,
            doc_len: 2048,
            overlap: 0.0,
            styles: 1,
            style_spread: 0.0,
            atypical: 0.0,
            seed: 0,
        }
    }
}

impl MarkovCorpus {
    pub fn class_label(k: usize) -> String {
        format!("source{k}")
    }

    pub fn generate(&self) -> Result<Vec<CorpusObject>> {
        let base = MarkovSource::new(mix(self.seed, 0xba5e));
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.seed, 0xd0c5));
        let mut out = Vec::with_capacity(self.classes * self.docs_per_class);
        for k in 0..self.classes {
            let class = MarkovSource::new(mix(self.seed, 1 + k as u64)).blend(&base, self.overlap);
            let styles: Vec<MarkovSource> = (0..self.styles.max(1))
                .map(|s| {
                    let own = MarkovSource::new(mix(self.seed, 1000 * (k as u64 + 1) + s as u64));
                    class.blend(&own, self.style_spread)
                })
                .collect();
            let label = Self::class_label(k);
            let n_atypical = (self.atypical.clamp(0.0, 1.0) * self.docs_per_class as f64).round() as usize;
            for d in 0..self.docs_per_class {
                let payload = if d >= self.docs_per_class - n_atypical {
                    let salt = 0xa7_0000 + (k * self.docs_per_class + d) as u64;
                    MarkovSource::new(mix(self.seed, salt)).generate(self.doc_len, &mut rng)
                } else {
                    styles[d % styles.len()].generate(self.doc_len, &mut rng)
                };
                out.push(CorpusObject::new(format!("{label}/doc{d:03}.txt"), label.clone(), payload)?);
            }
        }
        Ok(out)
    }
}

/// A highly redundant document: one Markov passage of `period` symbols
/// repeated up to `len`, with each copied symbol replaced by a random
/// letter with probability `mutation_rate`.
pub fn redundant_text(len: usize, period: usize, mutation_rate: f64, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, 0x7e47));
    let block = MarkovSource::new(seed).generate(period.max(1), &mut rng);
    block
        .iter()
        .cycle()
        .take(len)
        .map(|&c| {
            if rng.gen::<f64>() < mutation_rate {
                b'a' + rng.gen_range(0..26)
            } else {
                c
            }
        })
        .collect()
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seeded() {
        let s = MarkovSource::new(1);
        let a = s.generate(500, &mut ChaCha8Rng::seed_from_u64(2));
        let b = s.generate(500, &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(a, b);
        assert!(a.iter().all(|c| ALPHABET.contains(c)));
    }

    #[test]
    fn corpus_shape() {
        let corpus = MarkovCorpus {
            classes: 3,
            docs_per_class: 4,
            doc_len: 100,
            ..Default::default()
        }
        .generate()
        .unwrap();
        assert_eq!(corpus.len(), 12);
        assert_eq!(corpus[5].class_label, "source1");
        assert_eq!(corpus[5].id, "source1/doc001.txt");
        assert!(corpus.iter().all(|o| o.len() == 100));
    }
}
