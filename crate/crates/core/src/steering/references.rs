use serde::{Deserialize, Serialize};

use super::{norm01, ReferenceStrategy};
use crate::error::{Error, Result};
use crate::util::euclidean;

/// Compression distances among the members of one cluster, `c x c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submatrix {
    pub members: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Submatrix {
    pub fn new(members: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let c = members.len();
        if rows.len() != c || rows.iter().any(|r| r.len() != c) {
            return Err(Error::DimensionError {
                left: c,
                right: rows.len(),
            });
        }
        Ok(Submatrix { members, rows })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.members.iter().position(|m| m == id)
    }
}

fn first_min_by(candidates: impl Iterator<Item = usize>, key: impl Fn(usize) -> f64) -> Option<usize> {
    candidates.fold(None, |best: Option<(usize, f64)>, i| {
        let k = key(i);
        match best {
            Some((_, bk)) if k >= bk => best,
            _ => Some((i, k)),
        }
    })
    .map(|(i, _)| i)
}

/// Ordered reference members (indices into the submatrix).
///
/// Row distances are Euclidean distances between submatrix rows. Ties go to
/// the lower member index.
pub fn select_references(sub: &Submatrix, strategy: ReferenceStrategy, r: usize) -> Result<Vec<usize>> {
    let c = sub.len();
    if r == 0 || r > c {
        return Err(Error::InvalidCount {
            requested: r,
            available: c,
        });
    }
    let dist = |a: usize, b: usize| euclidean(&sub.rows[a], &sub.rows[b]);
    let picked = match strategy {
        ReferenceStrategy::CentroidClosest => {
            let mut centroid = vec![0.0; c];
            for row in &sub.rows {
                for (acc, v) in centroid.iter_mut().zip(row) {
                    *acc += v / c as f64;
                }
            }
            // medoid snap: the abstract centroid is replaced by its nearest member
            let medoid = first_min_by(0..c, |m| euclidean(&sub.rows[m], &centroid)).unwrap();
            let mut rest: Vec<usize> = (0..c).filter(|&m| m != medoid).collect();
            rest.sort_by(|&a, &b| dist(medoid, a).total_cmp(&dist(medoid, b)).then(a.cmp(&b)));
            std::iter::once(medoid).chain(rest).take(r).collect()
        }
        ReferenceStrategy::IterativeFarthest => {
            let first = first_min_by(0..c, |m| -(0..c).map(|o| dist(m, o)).sum::<f64>()).unwrap();
            let mut chosen = vec![first];
            let mut nearest: Vec<f64> = (0..c).map(|m| dist(m, first)).collect();
            while chosen.len() < r {
                let next = first_min_by((0..c).filter(|m| !chosen.contains(m)), |m| -nearest[m]).unwrap();
                chosen.push(next);
                for m in 0..c {
                    nearest[m] = nearest[m].min(dist(m, next));
                }
            }
            chosen
        }
    };
    Ok(picked)
}

/// `1 - norm01(d)` where `d[m]` is the Euclidean distance from `reference_row`
/// to member `m`'s row.
pub fn weights_from_row(reference_row: &[f64], sub: &Submatrix) -> Result<Vec<f64>> {
    if reference_row.len() != sub.len() {
        return Err(Error::DimensionError {
            left: sub.len(),
            right: reference_row.len(),
        });
    }
    let d: Vec<f64> = sub.rows.iter().map(|row| euclidean(reference_row, row)).collect();
    Ok(norm01(&d).into_iter().map(|x| 1.0 - x).collect())
}

/// Weights of a member reference over its own cluster.
pub fn reference_weights(sub: &Submatrix, reference: usize) -> Result<Vec<f64>> {
    let row = sub.rows.get(reference).ok_or(Error::InvalidCount {
        requested: reference + 1,
        available: sub.len(),
    })?;
    weights_from_row(row, sub)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// All orderings of `0..n`.
    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    fn sub(rows: Vec<Vec<f64>>) -> Submatrix {
        Submatrix::new((0..rows.len()).map(|i| format!("m{i}")).collect(), rows).unwrap()
    }

    fn random_sub(c: usize, seed: u64) -> Submatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = vec![vec![0.0; c]; c];
        for i in 0..c {
            for j in 0..c {
                if i != j {
                    rows[i][j] = rng.gen_range(0.5..1.0);
                }
            }
        }
        sub(rows)
    }

    #[test]
    fn exhaustion_and_singleton() {
        let s = random_sub(4, 1);
        for strategy in [ReferenceStrategy::CentroidClosest, ReferenceStrategy::IterativeFarthest] {
            let mut all = select_references(&s, strategy, 4).unwrap();
            all.sort();
            assert_eq!(all, vec![0, 1, 2, 3]);
            assert_eq!(select_references(&sub(vec![vec![0.0]]), strategy, 1).unwrap(), vec![0]);
            assert!(matches!(
                select_references(&s, strategy, 5),
                Err(Error::InvalidCount { requested: 5, available: 4 })
            ));
        }
    }

    #[test]
    fn farthest_matches_brute_force() {
        for seed in 0..20 {
            let s = random_sub(5, seed);
            let d = |a: usize, b: usize| euclidean(&s.rows[a], &s.rows[b]);
            let got = select_references(&s, ReferenceStrategy::IterativeFarthest, 5).unwrap();
            // every ordering that obeys the greedy rule at each step
            let valid: Vec<Vec<usize>> = permutations(5)
                .into_iter()
                .filter(|order| {
                    let total = |m: usize| (0..5).map(|o| d(m, o)).sum::<f64>();
                    let best_first = (0..5).map(total).fold(f64::NEG_INFINITY, f64::max);
                    if total(order[0]) != best_first {
                        return false;
                    }
                    (1..5).all(|step| {
                        let score = |m: usize| order[..step].iter().map(|&s| d(m, s)).fold(f64::INFINITY, f64::min);
                        let best = order[step..].iter().map(|&m| score(m)).fold(f64::NEG_INFINITY, f64::max);
                        score(order[step]) == best
                    })
                })
                .collect();
            assert!(valid.contains(&got), "seed {seed}: {got:?} not in {valid:?}");
        }
    }

    #[test]
    fn centroid_prefix_property() {
        let s = random_sub(6, 9);
        let full = select_references(&s, ReferenceStrategy::CentroidClosest, 6).unwrap();
        for r in 1..=6 {
            assert_eq!(select_references(&s, ReferenceStrategy::CentroidClosest, r).unwrap(), full[..r]);
        }
    }

    #[test]
    fn centroid_picks_central_member() {
        // member 1 sits between 0 and 2
        let s = sub(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]);
        assert_eq!(select_references(&s, ReferenceStrategy::CentroidClosest, 1).unwrap(), vec![1]);
        assert_eq!(select_references(&s, ReferenceStrategy::IterativeFarthest, 2).unwrap(), vec![0, 2]);
    }

    #[test]
    fn weight_examples() {
        assert_eq!(reference_weights(&sub(vec![vec![0.3]]), 0).unwrap(), vec![1.0]);
        // rows at distance 0, 2, 4 from the reference row
        let s = sub(vec![vec![0.0, 0.0, 0.0], vec![2.0, 0.0, 0.0], vec![4.0, 0.0, 0.0]]);
        assert_eq!(reference_weights(&s, 0).unwrap(), vec![1.0, 0.5, 0.0]);
        let s = sub(vec![vec![0.0, 0.0], vec![0.4, 0.0]]);
        let w = reference_weights(&s, 0).unwrap();
        assert_eq!(w[0], 1.0);
        assert!((w[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn weights_in_unit_interval() {
        for seed in 0..10 {
            let s = random_sub(6, 100 + seed);
            for r in 0..6 {
                let w = reference_weights(&s, r).unwrap();
                assert_eq!(w[r], 1.0);
                assert!(w.iter().all(|x| (0.0..=1.0).contains(x)));
            }
        }
    }
}
