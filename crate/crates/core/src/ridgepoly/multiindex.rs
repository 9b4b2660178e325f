use std::fmt;

/// Exponent vector `(m_1, …, m_n)` with `|m| = Σ m_i`.
///
/// The derived order is plain lexicographic on the exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// `e_i` in `n` variables.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// `|m|`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self − other` when `other ≤ self` componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// `self ≤ other` componentwise.
    pub fn is_dominated_by(&self, other: &MultiIndex) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Concatenation `(self, other)`.
    pub fn concat(&self, other: &MultiIndex) -> MultiIndex {
        let mut e = self.0.clone();
        e.extend_from_slice(&other.0);
        MultiIndex(e)
    }

    /// Splits a `2n` index into its two halves `(m̄, m̲)`.
    pub fn split_halves(&self) -> (MultiIndex, MultiIndex) {
        let n = self.0.len() / 2;
        (MultiIndex(self.0[..n].to_vec()), MultiIndex(self.0[n..].to_vec()))
    }

    /// All indices in `n` variables with `|m| = k`, in descending
    /// lexicographic order (`x_1`-heavy first).
    pub fn all_of_degree(n: usize, k: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0; n];
        fill_degree(&mut cur, 0, k, &mut out);
        out
    }
}

fn fill_degree(cur: &mut Vec<u32>, pos: usize, rest: u32, out: &mut Vec<MultiIndex>) {
    let n = cur.len();
    if n == 0 {
        if rest == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    if pos == n - 1 {
        cur[pos] = rest;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for v in (0..=rest).rev() {
        cur[pos] = v;
        fill_degree(cur, pos + 1, rest - v, out);
    }
    cur[pos] = 0;
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_enumeration() {
        let all = MultiIndex::all_of_degree(2, 2);
        let want: Vec<MultiIndex> = vec![vec![2, 0].into(), vec![1, 1].into(), vec![0, 2].into()];
        assert_eq!(all, want);
        // C(k+n-1, n-1)
        assert_eq!(MultiIndex::all_of_degree(3, 4).len(), 15);
        assert_eq!(MultiIndex::all_of_degree(3, 0), vec![MultiIndex::zeros(3)]);
    }

    #[test]
    fn arithmetic() {
        let a = MultiIndex::new(vec![2, 1, 0]);
        let b = MultiIndex::new(vec![1, 1, 0]);
        assert_eq!(a.checked_sub(&b), Some(MultiIndex::new(vec![1, 0, 0])));
        assert_eq!(b.checked_sub(&a), None);
        assert!(b.is_dominated_by(&a));
        assert_eq!(a.add(&b).degree(), 5);
        let (lo, hi) = a.concat(&b).split_halves();
        assert_eq!((lo, hi), (a, b));
    }
}
