//! Suffix array over a reference sequence, with interval narrowing for
//! leftmost-longest match queries.

/// Immutable suffix array of a reference, plus a sparse table answering
/// "smallest text position inside an SA interval" in O(1).
#[derive(Debug, Clone)]
pub struct SuffixArray<'a> {
    text: &'a [u8],
    sa: Vec<u32>,
    // min_pos[level][i] = min(sa[i .. i + 2^level])
    min_pos: Vec<Vec<u32>>,
}

impl<'a> SuffixArray<'a> {
    pub fn new(text: &'a [u8]) -> Self {
        let sa = build(text);
        let min_pos = sparse_table(&sa);
        SuffixArray { text, sa, min_pos }
    }

    pub fn text(&self) -> &'a [u8] {
        self.text
    }

    pub fn len(&self) -> usize {
        self.sa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sa.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.sa
    }

    /// Longest prefix of `pattern` occurring in the text, as
    /// `(position, length)`. Among equally long occurrences the smallest
    /// position wins. Returns length 0 when not even the first symbol occurs.
    pub fn longest_match(&self, pattern: &[u8]) -> (usize, usize) {
        let (mut lo, mut hi) = (0usize, self.sa.len());
        let mut depth = 0usize;
        while depth < pattern.len() && lo < hi {
            let c = Some(pattern[depth]);
            // suffixes in [lo, hi) share `depth` symbols; order on the next one
            let sym = |i: usize| self.text.get(self.sa[i] as usize + depth).copied();
            let start = lo + partition(lo, hi, |i| sym(i) < c);
            let end = start + partition(start, hi, |i| sym(i) <= c);
            if start == end {
                break;
            }
            lo = start;
            hi = end;
            depth += 1;
        }
        if depth == 0 {
            return (0, 0);
        }
        (self.range_min(lo, hi) as usize, depth)
    }

    fn range_min(&self, lo: usize, hi: usize) -> u32 {
        let span = hi - lo;
        let level = (usize::BITS - 1 - span.leading_zeros()) as usize;
        let row = &self.min_pos[level];
        row[lo].min(row[hi - (1 << level)])
    }
}

/// Number of indices in `[lo, hi)` satisfying a predicate that is
/// true on a prefix of the range.
fn partition(lo: usize, hi: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut a, mut b) = (lo, hi);
    while a < b {
        let mid = a + (b - a) / 2;
        if pred(mid) {
            a = mid + 1;
        } else {
            b = mid;
        }
    }
    a - lo
}

/// Prefix doubling, O(n log² n).
fn build(text: &[u8]) -> Vec<u32> {
    let n = text.len();
    let mut sa: Vec<u32> = (0..n as u32).collect();
    if n <= 1 {
        return sa;
    }
    let mut rank: Vec<u32> = text.iter().map(|&b| b as u32).collect();
    let mut next = vec![0u32; n];
    let mut k = 1usize;
    loop {
        // rank 0 is reserved for "past the end"
        let key = |i: u32| {
            let i = i as usize;
            let second = if i + k < n { rank[i + k] + 1 } else { 0 };
            (rank[i], second)
        };
        sa.sort_unstable_by_key(|&i| key(i));
        next[sa[0] as usize] = 0;
        for w in 1..n {
            let bump = (key(sa[w - 1]) != key(sa[w])) as u32;
            next[sa[w] as usize] = next[sa[w - 1] as usize] + bump;
        }
        std::mem::swap(&mut rank, &mut next);
        if rank[sa[n - 1] as usize] as usize == n - 1 {
            break;
        }
        k *= 2;
    }
    sa
}

fn sparse_table(sa: &[u32]) -> Vec<Vec<u32>> {
    let mut table = vec![sa.to_vec()];
    let mut width = 1usize;
    while width * 2 <= sa.len() {
        let prev = table.last().unwrap();
        let row: Vec<u32> = (0..=sa.len() - width * 2)
            .map(|i| prev[i].min(prev[i + width]))
            .collect();
        table.push(row);
        width *= 2;
    }
    table
}
