//! Agglomerative clustering over precomputed distances.
//!
//! Clusters are numbered as in the usual stepwise dendrogram: leaves are
//! `0..n`, and the cluster created by merge `s` is `n + s`. When several
//! pairs are at the same minimal distance, the pair with the smallest
//! `(older id, younger id)` is merged first.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// Minimum variance increase, via the Lance-Williams recurrence.
    Ward,
}

/// Upper triangle of a symmetric distance matrix, row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedDistances {
    n: usize,
    values: Vec<f64>,
}

impl CondensedDistances {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        let expected = n * n.saturating_sub(1) / 2;
        if values.len() != expected {
            return Err(Error::DimensionError {
                left: expected,
                right: values.len(),
            });
        }
        Ok(CondensedDistances { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.values[self.n * i - i * (i + 1) / 2 + (j - i - 1)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "DendrogramJson", try_from = "DendrogramJson")]
pub struct Dendrogram {
    pub leaves: Vec<String>,
    pub merges: Vec<Merge>,
}

#[derive(Serialize, Deserialize)]
struct DendrogramJson {
    leaves: Vec<String>,
    merges: Vec<(usize, usize, f64, usize)>,
}

impl From<Dendrogram> for DendrogramJson {
    fn from(d: Dendrogram) -> Self {
        DendrogramJson {
            leaves: d.leaves,
            merges: d
                .merges
                .iter()
                .map(|m| (m.left, m.right, m.height, m.size))
                .collect(),
        }
    }
}

impl TryFrom<DendrogramJson> for Dendrogram {
    type Error = Error;

    fn try_from(j: DendrogramJson) -> Result<Self> {
        let n = j.leaves.len();
        if n == 0 || j.merges.len() != n - 1 {
            return Err(Error::Parse(format!(
                "{} leaves need {} merges, found {}",
                n,
                n.saturating_sub(1),
                j.merges.len()
            )));
        }
        for (s, &(l, r, _, _)) in j.merges.iter().enumerate() {
            if l >= n + s || r >= n + s || l == r {
                return Err(Error::Parse(format!("merge {s} references unknown clusters")));
            }
        }
        Ok(Dendrogram {
            leaves: j.leaves,
            merges: j
                .merges
                .into_iter()
                .map(|(left, right, height, size)| Merge {
                    left,
                    right,
                    height,
                    size,
                })
                .collect(),
        })
    }
}

impl Dendrogram {
    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    /// Leaf indices under every cluster id `0..2n-1`.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let n = self.n_leaves();
        let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for m in &self.merges {
            let mut joined = members[m.left].clone();
            joined.extend_from_slice(&members[m.right]);
            joined.sort_unstable();
            members.push(joined);
        }
        members
    }

    /// Height at which two leaves first share a cluster, as an `n x n`
    /// row-major matrix.
    pub fn cophenetic(&self) -> Vec<f64> {
        let n = self.n_leaves();
        let members = self.members();
        let mut out = vec![0.0; n * n];
        for m in &self.merges {
            for &a in &members[m.left] {
                for &b in &members[m.right] {
                    out[a * n + b] = m.height;
                    out[b * n + a] = m.height;
                }
            }
        }
        out
    }

    /// Newick string; each branch is as long as the height difference
    /// between a node and its parent, so a node sits at its merge height.
    pub fn to_newick(&self) -> String {
        let n = self.n_leaves();
        let height = |id: usize| if id < n { 0.0 } else { self.merges[id - n].height };
        let mut out = String::new();
        if self.merges.is_empty() {
            out.push_str(&newick_label(&self.leaves[0]));
            out.push(';');
            return out;
        }
        // iterative post-order from the root
        enum Step {
            Enter(usize, f64),
            Comma,
            Close(usize, f64),
        }
        let root = n + self.merges.len() - 1;
        let mut stack = vec![Step::Enter(root, height(root))];
        while let Some(step) = stack.pop() {
            match step {
                Step::Enter(id, parent_h) if id < n => {
                    out.push_str(&newick_label(&self.leaves[id]));
                    if id != root {
                        let _ = write!(out, ":{}", parent_h);
                    }
                }
                Step::Enter(id, parent_h) => {
                    let m = &self.merges[id - n];
                    out.push('(');
                    stack.push(Step::Close(id, parent_h));
                    stack.push(Step::Enter(m.right, m.height));
                    stack.push(Step::Comma);
                    stack.push(Step::Enter(m.left, m.height));
                }
                Step::Comma => out.push(','),
                Step::Close(id, parent_h) => {
                    out.push(')');
                    if id != root {
                        let _ = write!(out, ":{}", parent_h - height(id));
                    }
                }
            }
        }
        // leaves were written with their parent's height, which equals the
        // branch length since leaves sit at zero
        out.push(';');
        out
    }
}

fn newick_label(name: &str) -> String {
    if name
        .chars()
        .any(|c| c.is_whitespace() || "()[]':;,".contains(c))
    {
        format!("'{}'", name.replace('\'', "''"))
    } else {
        name.to_string()
    }
}

/// Ward update on unsquared distances:
/// `d(k, i∪j)² = ((n_i+n_k) d_ik² + (n_j+n_k) d_jk² - n_k d_ij²) / (n_i+n_j+n_k)`.
pub(crate) fn ward_update(d_ik: f64, d_jk: f64, d_ij: f64, n_i: usize, n_j: usize, n_k: usize) -> f64 {
    let (ni, nj, nk) = (n_i as f64, n_j as f64, n_k as f64);
    let sq = ((ni + nk) * d_ik * d_ik + (nj + nk) * d_jk * d_jk - nk * d_ij * d_ij) / (ni + nj + nk);
    sq.max(0.0).sqrt()
}

/// Agglomerates `n` points given their condensed pairwise distances.
///
/// Each active cluster caches its nearest neighbour among younger clusters,
/// so a step costs O(n) except for the clusters whose neighbour was just
/// merged away.
pub fn linkage(distances: &CondensedDistances, criterion: Criterion) -> Result<Dendrogram> {
    let Criterion::Ward = criterion;
    let n = distances.n();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 points, got {n}")));
    }
    if let Some((index, &value)) = distances
        .values()
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        return Err(Error::InvalidDistance { index, value });
    }

    // slot-indexed working state; a merged cluster reuses its older member's slot
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = distances.get(i, j);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    let mut id: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut nn: Vec<Option<usize>> = vec![None; n];
    let mut nn_dist = vec![f64::INFINITY; n];

    let refresh = |a: usize, d: &[f64], id: &[usize], active: &[bool]| -> (Option<usize>, f64) {
        let mut best: (Option<usize>, f64) = (None, f64::INFINITY);
        for b in 0..n {
            if !active[b] || id[b] <= id[a] {
                continue;
            }
            let v = d[a * n + b];
            let better = match best.0 {
                None => true,
                Some(cur) => v < best.1 || (v == best.1 && id[b] < id[cur]),
            };
            if better {
                best = (Some(b), v);
            }
        }
        best
    };
    for a in 0..n {
        (nn[a], nn_dist[a]) = refresh(a, &d, &id, &active);
    }

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut pick: Option<usize> = None;
        for a in 0..n {
            if !active[a] || nn[a].is_none() {
                continue;
            }
            pick = match pick {
                None => Some(a),
                Some(p) => {
                    let better = nn_dist[a] < nn_dist[p]
                        || (nn_dist[a] == nn_dist[p] && id[a] < id[p]);
                    Some(if better { a } else { p })
                }
            };
        }
        let x = pick.expect("at least two active clusters remain");
        let y = nn[x].expect("picked slot has a neighbour");
        let height = nn_dist[x];
        let (sx, sy) = (size[x], size[y]);
        merges.push(Merge {
            left: id[x],
            right: id[y],
            height,
            size: sx + sy,
        });

        active[y] = false;
        for k in 0..n {
            if !active[k] || k == x {
                continue;
            }
            let v = ward_update(d[x * n + k], d[y * n + k], height, sx, sy, size[k]);
            d[x * n + k] = v;
            d[k * n + x] = v;
        }
        size[x] = sx + sy;
        id[x] = n + step;
        nn[x] = None;
        nn_dist[x] = f64::INFINITY;

        for a in 0..n {
            if !active[a] || a == x {
                continue;
            }
            if nn[a] == Some(x) || nn[a] == Some(y) {
                (nn[a], nn_dist[a]) = refresh(a, &d, &id, &active);
            } else if d[a * n + x] < nn_dist[a] {
                // x now holds the youngest id, so equal distances keep the old neighbour
                nn[a] = Some(x);
                nn_dist[a] = d[a * n + x];
            }
        }
    }
    Ok(Dendrogram {
        leaves: (0..n).map(|i| i.to_string()).collect(),
        merges,
    })
}
