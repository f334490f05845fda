//! Multi-indices of basis covectors and the sign algebra of `dx^α`.
//!
//! Entries are 1-based in the public API (`dx¹ … dxⁿ`) and stored as a bit
//! mask internally. Multi-indices of equal cardinality are ordered
//! lexicographically by their entry tuples; that order numbers every basis
//! in the crate.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Hard upper bound on the ambient dimension supported by the packed
/// representations (monomial exponents are stored in one byte per axis).
pub const MAX_DIM: usize = 8;

/// Default ambient-dimension limit accepted by front ends.
pub const DEFAULT_DIM_LIMIT: usize = 6;

/// A strictly increasing tuple `(α₁ < … < α_k)` with entries in `1..=n`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    mask: u32,
    n: u8,
}

impl MultiIndex {
    /// Builds a multi-index from 1-based entries, which must be strictly increasing.
    pub fn new(entries: &[usize], n: usize) -> Result<Self> {
        check_dim(n)?;
        let mut mask = 0u32;
        let mut prev = 0usize;
        for &e in entries {
            if e == 0 || e > n {
                return Err(Error::domain(format!("index {e} outside 1..={n}")));
            }
            if e <= prev {
                return Err(Error::domain(format!(
                    "multi-index entries must be strictly increasing: {entries:?}"
                )));
            }
            prev = e;
            mask |= 1 << (e - 1);
        }
        Ok(Self { mask, n: n as u8 })
    }

    /// The empty multi-index (indexes 0-forms).
    pub fn empty(n: usize) -> Self {
        Self { mask: 0, n: n as u8 }
    }

    /// The full multi-index `(1, …, n)` (indexes the volume form).
    pub fn full(n: usize) -> Self {
        Self {
            mask: full_mask(n),
            n: n as u8,
        }
    }

    /// Single covector `dx^axis`, with `axis` 0-based.
    pub fn single(axis: usize, n: usize) -> Self {
        debug_assert!(axis < n);
        Self {
            mask: 1 << axis,
            n: n as u8,
        }
    }

    pub(crate) fn from_mask(mask: u32, n: usize) -> Self {
        debug_assert!(mask & !full_mask(n) == 0);
        Self { mask, n: n as u8 }
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn dim(&self) -> usize {
        self.n as usize
    }

    /// Cardinality `|α|`.
    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    /// 0-based axes in increasing order.
    pub fn axes(&self) -> impl Iterator<Item = usize> + '_ {
        let mask = self.mask;
        (0..self.n as usize).filter(move |i| mask & (1 << i) != 0)
    }

    /// 1-based entries in increasing order.
    pub fn entries(&self) -> Vec<usize> {
        self.axes().map(|i| i + 1).collect()
    }

    /// Membership of a 0-based axis.
    pub fn contains(&self, axis: usize) -> bool {
        self.mask & (1 << axis) != 0
    }

    /// `β ⊂ α` in the sense of entry sets.
    pub fn is_subset_of(&self, other: &MultiIndex) -> bool {
        self.mask & !other.mask == 0
    }

    pub fn is_disjoint(&self, other: &MultiIndex) -> bool {
        self.mask & other.mask == 0
    }

    pub fn without(&self, axis: usize) -> Self {
        Self {
            mask: self.mask & !(1 << axis),
            n: self.n,
        }
    }

    pub fn with(&self, axis: usize) -> Self {
        Self {
            mask: self.mask | (1 << axis),
            n: self.n,
        }
    }

    /// `α^c`: the increasing tuple of the remaining entries of `1..=n`.
    pub fn complement(&self) -> Self {
        Self {
            mask: !self.mask & full_mask(self.n as usize),
            n: self.n,
        }
    }

    /// Position (0-based) of `axis` inside the entry tuple, if present.
    pub fn position(&self, axis: usize) -> Option<usize> {
        if !self.contains(axis) {
            return None;
        }
        Some((self.mask & ((1u32 << axis) - 1)).count_ones() as usize)
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        // Shorter tuples first, then lexicographic on the increasing entries.
        self.len()
            .cmp(&other.len())
            .then_with(|| self.axes().cmp(other.axes()))
            .then_with(|| self.n.cmp(&other.n))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.entries())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

fn full_mask(n: usize) -> u32 {
    if n == 0 {
        0
    } else {
        (1u32 << n) - 1
    }
}

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::domain(format!("ambient dimension {n} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

/// All `C(n, k)` increasing `k`-tuples of `1..=n`, lexicographically ordered.
pub fn enumerate_multi_indices(k: usize, n: usize) -> Result<Vec<MultiIndex>> {
    check_dim(n)?;
    if k > n {
        return Err(Error::domain(format!("degree {k} exceeds dimension {n}")));
    }
    let mut out = Vec::with_capacity(binomial(n, k));
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, k: usize, n: usize, current: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if current.len() == k {
            let mask = current.iter().fold(0u32, |m, &a| m | (1 << a));
            out.push(MultiIndex::from_mask(mask, n));
            return;
        }
        let remaining = k - current.len();
        for a in start..=(n - remaining) {
            current.push(a);
            rec(a + 1, k, n, current, out);
            current.pop();
        }
    }
    rec(0, k, n, &mut current, &mut out);
    Ok(out)
}

/// Same as [`enumerate_multi_indices`] for arguments already known to be valid.
pub(crate) fn multi_indices(k: usize, n: usize) -> Vec<MultiIndex> {
    enumerate_multi_indices(k, n).expect("valid (k, n)")
}

/// Sub-multi-indices of `alpha` (all subsets), ordered as tuples: `()` first,
/// then lexicographic with prefixes before extensions.
pub(crate) fn subsets(alpha: &MultiIndex) -> Vec<MultiIndex> {
    let axes: Vec<usize> = alpha.axes().collect();
    let n = alpha.dim();
    let mut out: Vec<(Vec<usize>, MultiIndex)> = (0u32..(1u32 << axes.len()))
        .map(|bits| {
            let chosen: Vec<usize> = axes
                .iter()
                .enumerate()
                .filter(|(j, _)| bits & (1 << j) != 0)
                .map(|(_, &a)| a)
                .collect();
            let mask = chosen.iter().fold(0u32, |m, &a| m | (1 << a));
            (chosen, MultiIndex::from_mask(mask, n))
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out.into_iter().map(|(_, m)| m).collect()
}

/// Binomial coefficient `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `dx^α ∧ dx^β = sign · dx^γ`; `None` when the factors share a covector.
pub fn wedge_sign(alpha: &MultiIndex, beta: &MultiIndex) -> Option<(i8, MultiIndex)> {
    if !alpha.is_disjoint(beta) {
        return None;
    }
    // Each pair (a ∈ α, b ∈ β) with a > b costs one transposition.
    let inversions: u32 = beta.axes().map(|b| (alpha.mask >> (b + 1)).count_ones()).sum();
    let sign = if inversions.is_multiple_of(2) { 1 } else { -1 };
    Some((
        sign,
        MultiIndex {
            mask: alpha.mask | beta.mask,
            n: alpha.n.max(beta.n),
        },
    ))
}

/// `⋆dx^α = s · dx^{α^c}` with `dx^α ∧ ⋆dx^α = dx¹ ∧ … ∧ dxⁿ`.
pub fn hodge_sign(alpha: &MultiIndex) -> i8 {
    wedge_sign(alpha, &alpha.complement())
        .expect("index and complement are disjoint")
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(e: &[usize], n: usize) -> MultiIndex {
        MultiIndex::new(e, n).unwrap()
    }

    #[test]
    fn enumerate_examples() {
        assert_eq!(enumerate_multi_indices(0, 3).unwrap(), vec![MultiIndex::empty(3)]);
        assert_eq!(
            enumerate_multi_indices(2, 3).unwrap(),
            vec![mi(&[1, 2], 3), mi(&[1, 3], 3), mi(&[2, 3], 3)]
        );
        assert_eq!(enumerate_multi_indices(3, 3).unwrap(), vec![mi(&[1, 2, 3], 3)]);
        assert!(enumerate_multi_indices(4, 3).is_err());
    }

    #[test]
    fn complement_examples() {
        assert_eq!(mi(&[1, 3], 3).complement(), mi(&[2], 3));
        assert_eq!(MultiIndex::empty(2).complement(), mi(&[1, 2], 2));
        assert_eq!(mi(&[1, 2, 3], 3).complement(), MultiIndex::empty(3));
    }

    #[test]
    fn wedge_examples() {
        assert_eq!(wedge_sign(&mi(&[2], 2), &mi(&[1], 2)), Some((-1, mi(&[1, 2], 2))));
        assert_eq!(wedge_sign(&mi(&[1], 2), &mi(&[1], 2)), None);
        assert_eq!(wedge_sign(&mi(&[1, 3], 3), &mi(&[2], 3)), Some((-1, mi(&[1, 2, 3], 3))));
    }

    #[test]
    fn hodge_examples() {
        assert_eq!(hodge_sign(&mi(&[1], 2)), 1);
        assert_eq!(hodge_sign(&mi(&[2], 2)), -1);
        assert_eq!(hodge_sign(&mi(&[1, 3], 3)), -1);
    }

    #[test]
    fn invalid_entries_rejected() {
        assert!(MultiIndex::new(&[2, 1], 3).is_err());
        assert!(MultiIndex::new(&[0], 3).is_err());
        assert!(MultiIndex::new(&[4], 3).is_err());
        assert!(MultiIndex::new(&[1, 1], 3).is_err());
    }

    #[test]
    fn subsets_are_tuple_ordered() {
        let s = subsets(&mi(&[1, 3], 3));
        assert_eq!(s, vec![MultiIndex::empty(3), mi(&[1], 3), mi(&[1, 3], 3), mi(&[3], 3)]);
    }

    proptest! {
        #[test]
        fn enumeration_counts_and_order(n in 1usize..=6, k in 0usize..=6) {
            prop_assume!(k <= n);
            let all = enumerate_multi_indices(k, n).unwrap();
            prop_assert_eq!(all.len(), binomial(n, k));
            for w in all.windows(2) {
                prop_assert!(w[0].entries() < w[1].entries());
            }
        }

        #[test]
        fn complement_involution_and_star_sign(n in 1usize..=6, mask in 0u32..64) {
            let alpha = MultiIndex::from_mask(mask & ((1 << n) - 1), n);
            prop_assert_eq!(alpha.complement().complement(), alpha);
            let k = alpha.len();
            let (s1, _) = wedge_sign(&alpha, &alpha.complement()).unwrap();
            let (s2, _) = wedge_sign(&alpha.complement(), &alpha).unwrap();
            let expected = if (k * (n - k)).is_multiple_of(2) { 1 } else { -1 };
            prop_assert_eq!(s1 * s2, expected);
        }
    }
}
