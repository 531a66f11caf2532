//! Loading a `<root>/<class>/<file>` corpus from disk.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::compressors::CodecId;
use crate::distances::{hex_encode, CorpusObject};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Raw,
    Hex,
}

/// How payloads are encoded. `Auto` hex-encodes non-text files when the
/// codec is the relative coder, whose alphabet must be small.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingPolicy {
    #[default]
    Auto,
    Raw,
    Hex,
}

impl FromStr for EncodingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(EncodingPolicy::Auto),
            "raw" => Ok(EncodingPolicy::Raw),
            "hex" => Ok(EncodingPolicy::Hex),
            other => Err(Error::Parse(format!("unknown encoding `{other}`"))),
        }
    }
}

impl fmt::Display for EncodingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncodingPolicy::Auto => "auto",
            EncodingPolicy::Raw => "raw",
            EncodingPolicy::Hex => "hex",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestOptions {
    pub encoding: EncodingPolicy,
    pub codec: Option<CodecId>,
    /// Keep only these class directories.
    pub classes: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the root, `/`-separated; doubles as the object id.
    pub id: String,
    pub class_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub encoding: Encoding,
    pub bytes: usize,
    pub alphabet_size: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn classes(&self) -> Vec<String> {
        let mut c: Vec<String> = self.entries.iter().map(|e| e.class_label.clone()).collect();
        c.sort();
        c.dedup();
        c
    }

    /// Object id to source file for fragment corpora; `None` when no file
    /// name follows the fragment pattern.
    pub fn fragment_files(&self) -> Option<BTreeMap<String, String>> {
        if self.entries.iter().all(|e| e.group.is_none()) {
            return None;
        }
        Some(
            self.entries
                .iter()
                .map(|e| {
                    let file = match &e.group {
                        Some(g) => format!("{}/{g}", e.class_label),
                        None => e.id.clone(),
                    };
                    (e.id.clone(), file)
                })
                .collect(),
        )
    }

    /// Hash over every entry's id and content hash.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.entries {
            h.update(e.id.as_bytes());
            h.update([0]);
            h.update(e.sha256.as_bytes());
            h.update([b'\n']);
        }
        hex::encode(h.finalize())
    }
}

/// Group id of a fragment file named `<group>__<index>.<ext>`.
pub fn fragment_group(file_name: &str) -> Option<String> {
    let stem = match file_name.rsplit_once('.') {
        Some((s, _)) if !s.is_empty() => s,
        _ => file_name,
    };
    let (group, index) = stem.rsplit_once("__")?;
    (!group.is_empty() && !index.is_empty() && index.bytes().all(|b| b.is_ascii_digit())).then(|| group.to_string())
}

/// Valid UTF-8 without control characters other than tab and line breaks.
pub fn is_text(data: &[u8]) -> bool {
    match std::str::from_utf8(data) {
        Ok(s) => s.chars().all(|c| !c.is_control() || matches!(c, '\n' | '\r' | '\t')),
        Err(_) => false,
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.file_name().to_string_lossy().starts_with('.') {
            continue;
        }
        out.push(entry.path());
    }
    out.sort();
    Ok(out)
}

/// Reads every file under `root/<class>/`, in sorted order.
pub fn ingest(root: &Path, options: &IngestOptions) -> Result<(Vec<CorpusObject>, CorpusManifest)> {
    let mut objects = Vec::new();
    let mut entries = Vec::new();
    for class_dir in sorted_entries(root)? {
        if !class_dir.is_dir() {
            log::debug!("skipping {}: not a class directory", class_dir.display());
            continue;
        }
        let class = class_dir.file_name().unwrap().to_string_lossy().into_owned();
        if let Some(keep) = &options.classes {
            if !keep.contains(&class) {
                continue;
            }
        }
        let files: Vec<PathBuf> = sorted_entries(&class_dir)?.into_iter().filter(|p| p.is_file()).collect();
        if files.is_empty() {
            return Err(Error::EmptyClass(class_dir));
        }
        for path in files {
            let raw = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            let encoding = match options.encoding {
                EncodingPolicy::Raw => Encoding::Raw,
                EncodingPolicy::Hex => Encoding::Hex,
                EncodingPolicy::Auto if options.codec == Some(CodecId::Rlz) && !is_text(&raw) => Encoding::Hex,
                EncodingPolicy::Auto => Encoding::Raw,
            };
            let payload = match encoding {
                Encoding::Raw => raw.clone(),
                Encoding::Hex => hex_encode(&raw),
            };
            let id = format!("{class}/{name}");
            let object = CorpusObject::new(id.clone(), class.clone(), payload)?;
            entries.push(ManifestEntry {
                id,
                class_label: class.clone(),
                group: fragment_group(&name),
                encoding,
                bytes: raw.len(),
                alphabet_size: object.alphabet_size,
                sha256: hex::encode(Sha256::digest(&raw)),
            });
            objects.push(object);
        }
    }
    if let Some(keep) = &options.classes {
        if let Some(missing) = keep.iter().find(|c| !entries.iter().any(|e| &e.class_label == *c)) {
            return Err(Error::InvalidInput(format!("class {missing} not found under {}", root.display())));
        }
    }
    if objects.is_empty() {
        return Err(Error::InvalidInput(format!("no class directories under {}", root.display())));
    }
    Ok((
        objects,
        CorpusManifest {
            root: root.to_path_buf(),
            entries,
        },
    ))
}

/// Writes objects to `root/<class>/<file>` using their ids as relative paths.
pub fn write_corpus(root: &Path, objects: &[CorpusObject]) -> Result<()> {
    for o in objects {
        let path = root.join(&o.id);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, &o.payload).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
