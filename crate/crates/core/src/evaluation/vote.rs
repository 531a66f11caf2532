use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::util::argmax;

/// File-level class for each of `files`: the top class of the fragment whose
/// top-class probability is highest, earliest fragment on ties.
pub fn fragment_vote(
    fragment_probs: &[Vec<f64>],
    fragment_to_file: &[String],
    files: &[String],
) -> Result<BTreeMap<String, usize>> {
    if fragment_probs.len() != fragment_to_file.len() {
        return Err(Error::DimensionError {
            left: fragment_probs.len(),
            right: fragment_to_file.len(),
        });
    }
    let mut best: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for (probs, file) in fragment_probs.iter().zip(fragment_to_file) {
        let top = argmax(probs).ok_or_else(|| Error::InvalidInput("empty probability vector".into()))?;
        let p = probs[top];
        let slot = best.entry(file.as_str()).or_insert((f64::NEG_INFINITY, top));
        if p > slot.0 {
            *slot = (p, top);
        }
    }
    files
        .iter()
        .map(|f| {
            best.get(f.as_str())
                .map(|&(_, c)| (f.clone(), c))
                .ok_or_else(|| Error::MissingFragments(f.clone()))
        })
        .collect()
}
