//! Relative Lempel-Ziv factorization and its bit-cost model.
//!
//! The target is parsed greedily against a fixed reference: at each cursor
//! the longest reference substring matching the upcoming target symbols is
//! emitted as a copy (smallest reference position on ties). A symbol absent
//! from the reference becomes a one-symbol literal.
//!
//! Cost of a parse, given reference length `L` and alphabet size `A`:
//!
//! * copy: `1 + position + ceil(log2(L + 1))`, where the position field is
//!   an 8-bit signed delta when the copy starts within
//!   [`ADAPTIVE_WINDOW`] of the previous copy's end, otherwise
//!   `ceil(log2(L))` bits;
//! * literal: `1 + ceil(log2(A))` bits per symbol.

use serde::{Deserialize, Serialize};

use super::suffix_array::SuffixArray;
use crate::error::{Error, Result};

/// Reach of an adaptive (delta-coded) pointer, in symbols.
pub const ADAPTIVE_WINDOW: i64 = 127;
const DELTA_BITS: u64 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Phrase {
    Copy { position: usize, length: usize },
    Literal { symbols: Vec<u8> },
}

impl Phrase {
    pub fn len(&self) -> usize {
        match self {
            Phrase::Copy { length, .. } => *length,
            Phrase::Literal { symbols } => symbols.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RlzParse {
    pub phrases: Vec<Phrase>,
}

impl RlzParse {
    /// Rebuilds the target from the reference.
    pub fn expand(&self, reference: &[u8]) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for phrase in &self.phrases {
            match phrase {
                Phrase::Copy { position, length } => {
                    let slice = reference.get(*position..position + length).ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "copy ({position}, {length}) outside reference of length {}",
                            reference.len()
                        ))
                    })?;
                    out.extend_from_slice(slice);
                }
                Phrase::Literal { symbols } => out.extend_from_slice(symbols),
            }
        }
        Ok(out)
    }

    pub fn target_len(&self) -> usize {
        self.phrases.iter().map(Phrase::len).sum()
    }

    pub fn copy_count(&self) -> usize {
        self.phrases
            .iter()
            .filter(|p| matches!(p, Phrase::Copy { .. }))
            .count()
    }

    /// Cost of each phrase in bits, in parse order.
    pub fn phrase_costs(&self, reference_length: usize, alphabet_size: usize) -> Result<Vec<u64>> {
        if alphabet_size < 2 {
            return Err(Error::InvalidInput(format!(
                "alphabet size must be at least 2, got {alphabet_size}"
            )));
        }
        let full_pointer = ceil_log2(reference_length as u64);
        let length_field = ceil_log2(reference_length as u64 + 1);
        let symbol_bits = ceil_log2(alphabet_size as u64);
        let mut continuation: Option<i64> = None;
        let mut costs = Vec::with_capacity(self.phrases.len());
        for phrase in &self.phrases {
            let bits = match phrase {
                Phrase::Copy { position, length } => {
                    if *length == 0 || position + length > reference_length {
                        return Err(Error::InvalidInput(format!(
                            "copy ({position}, {length}) outside reference of length {reference_length}"
                        )));
                    }
                    let start = *position as i64;
                    let pointer = match continuation {
                        Some(c) if (start - c).abs() <= ADAPTIVE_WINDOW => DELTA_BITS,
                        _ => full_pointer,
                    };
                    continuation = Some(start + *length as i64);
                    1 + pointer + length_field
                }
                Phrase::Literal { symbols } => 1 + symbol_bits * symbols.len() as u64,
            };
            costs.push(bits);
        }
        Ok(costs)
    }

    pub fn cost_bits(&self, reference_length: usize, alphabet_size: usize) -> Result<u64> {
        Ok(self
            .phrase_costs(reference_length, alphabet_size)?
            .into_iter()
            .sum())
    }
}

/// Greedy factorizer bound to one reference; build once, parse many targets.
#[derive(Debug, Clone)]
pub struct RlzFactorizer<'a> {
    index: SuffixArray<'a>,
}

impl<'a> RlzFactorizer<'a> {
    pub fn new(reference: &'a [u8]) -> Result<Self> {
        if reference.is_empty() {
            return Err(Error::InvalidInput("empty RLZ reference".into()));
        }
        Ok(RlzFactorizer {
            index: SuffixArray::new(reference),
        })
    }

    pub fn reference(&self) -> &'a [u8] {
        self.index.text()
    }

    pub fn factorize(&self, target: &[u8]) -> Result<RlzParse> {
        if target.is_empty() {
            return Err(Error::InvalidInput("empty RLZ target".into()));
        }
        let mut phrases = Vec::new();
        let mut cursor = 0;
        while cursor < target.len() {
            let (position, length) = self.index.longest_match(&target[cursor..]);
            if length == 0 {
                phrases.push(Phrase::Literal {
                    symbols: vec![target[cursor]],
                });
                cursor += 1;
            } else {
                phrases.push(Phrase::Copy { position, length });
                cursor += length;
            }
        }
        Ok(RlzParse { phrases })
    }
}

pub fn rlz_factorize(target: &[u8], reference: &[u8]) -> Result<RlzParse> {
    if target.is_empty() {
        return Err(Error::InvalidInput("empty RLZ target".into()));
    }
    RlzFactorizer::new(reference)?.factorize(target)
}

pub fn rlz_compressed_size_bits(
    parse: &RlzParse,
    reference_length: usize,
    alphabet_size: usize,
) -> Result<u64> {
    parse.cost_bits(reference_length, alphabet_size)
}

fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        (u64::BITS - (x - 1).leading_zeros()) as u64
    }
}
