//! Compressed-size oracles.
//!
//! Three general-purpose codecs back the NCD, each run at one fixed setting:
//!
//! | codec     | backend          | setting        |
//! |-----------|------------------|----------------|
//! | `deflate` | zlib stream      | level 6        |
//! | `bzip2`   | bzip2 stream     | level 9        |
//! | `lzma`    | xz container     | preset 6       |
//!
//! The relative codec (`rlz`) has no standalone size; it is driven through
//! [`rlz_factorize`] and [`rlz_compressed_size_bits`].

mod rlz;
mod suffix_array;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use rlz::{
    rlz_compressed_size_bits, rlz_factorize, Phrase, RlzFactorizer, RlzParse, ADAPTIVE_WINDOW,
};
pub use suffix_array::SuffixArray;

const DEFLATE_LEVEL: u32 = 6;
const BZIP2_LEVEL: u32 = 9;
const LZMA_PRESET: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodecId {
    /// Dictionary coder (zlib).
    Deflate,
    /// Block-sorting coder (bzip2).
    Bzip2,
    /// LZMA coder (xz).
    Lzma,
    /// Relative Lempel-Ziv against a fixed reference.
    Rlz,
}

impl CodecId {
    pub const GENERAL: [CodecId; 3] = [CodecId::Deflate, CodecId::Bzip2, CodecId::Lzma];

    pub fn is_general(self) -> bool {
        self != CodecId::Rlz
    }

    pub fn name(self) -> &'static str {
        match self {
            CodecId::Deflate => "deflate",
            CodecId::Bzip2 => "bzip2",
            CodecId::Lzma => "lzma",
            CodecId::Rlz => "rlz",
        }
    }
}

impl fmt::Display for CodecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodecId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "deflate" | "zlib" => Ok(CodecId::Deflate),
            "bzip2" | "bzip2-class" | "bz2" => Ok(CodecId::Bzip2),
            "lzma" | "xz" => Ok(CodecId::Lzma),
            "rlz" | "rlzap" => Ok(CodecId::Rlz),
            other => Err(Error::Parse(format!("unknown codec `{other}`"))),
        }
    }
}

/// Compressed size in bytes of `data` under a general-purpose codec.
pub fn compressed_size(data: &[u8], codec: CodecId) -> Result<usize> {
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot compress empty input".into()));
    }
    compress_parts(&[data], codec)
}

/// Compressed size of `x` immediately followed by `y`, with no separator.
pub fn concat_compressed_size(x: &[u8], y: &[u8], codec: CodecId) -> Result<usize> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput(
            "both halves of a concatenation must be non-empty".into(),
        ));
    }
    compress_parts(&[x, y], codec)
}

fn compress_parts(parts: &[&[u8]], codec: CodecId) -> Result<usize> {
    let fail = |e: std::io::Error| Error::CodecError {
        codec,
        ids: String::new(),
        message: e.to_string(),
    };
    let total: usize = parts.iter().map(|p| p.len()).sum();
    let out = Vec::with_capacity(total / 2 + 64);
    let compressed = match codec {
        CodecId::Deflate => {
            let mut enc =
                flate2::write::ZlibEncoder::new(out, flate2::Compression::new(DEFLATE_LEVEL));
            for p in parts {
                enc.write_all(p).map_err(fail)?;
            }
            enc.finish().map_err(fail)?
        }
        CodecId::Bzip2 => {
            let mut enc =
                bzip2::write::BzEncoder::new(out, bzip2::Compression::new(BZIP2_LEVEL));
            for p in parts {
                enc.write_all(p).map_err(fail)?;
            }
            enc.finish().map_err(fail)?
        }
        CodecId::Lzma => {
            let mut enc = xz2::write::XzEncoder::new(out, LZMA_PRESET);
            for p in parts {
                enc.write_all(p).map_err(fail)?;
            }
            enc.finish().map_err(fail)?
        }
        CodecId::Rlz => return Err(Error::WrongCodecFamily(codec)),
    };
    Ok(compressed.len())
}
