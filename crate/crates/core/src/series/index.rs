//! Index sets of the multiple sums: simplex compositions and box indices,
//! both streamed in ascending lexicographic order.

use std::ops::Deref;

/// `y_1, …, y_n ≥ 0` with `y_1 + ⋯ + y_n = total`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Composition {
    parts: Vec<usize>,
    total: usize,
}

impl Composition {
    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn total(&self) -> usize {
        self.total
    }
}

impl Deref for Composition {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.parts
    }
}

/// `0 ≤ y_k ≤ bounds_k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoxIndex {
    parts: Vec<usize>,
    bounds: Vec<usize>,
}

impl BoxIndex {
    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn bounds(&self) -> &[usize] {
        &self.bounds
    }

    /// |y|
    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }
}

impl Deref for BoxIndex {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.parts
    }
}

/// All compositions of `total` into `n` parts. The first one is
/// `(0, …, 0, total)`; the count is `C(total + n − 1, n − 1)`. With `n = 0`
/// the stream holds the empty composition iff `total = 0`.
pub fn compositions(n: usize, total: usize) -> Compositions {
    let next = if n == 0 {
        (total == 0).then(Vec::new)
    } else {
        let mut first = vec![0; n];
        first[n - 1] = total;
        Some(first)
    };
    Compositions { next, total }
}

#[derive(Clone, Debug)]
pub struct Compositions {
    next: Option<Vec<usize>>,
    total: usize,
}

impl Iterator for Compositions {
    type Item = Composition;

    fn next(&mut self) -> Option<Composition> {
        let current = self.next.take()?;
        let n = current.len();
        // Lex successor: bump the rightmost position that still has mass to
        // its right, and move all that mass (minus one) to the last slot.
        let mut tail = 0;
        for i in (0..n.saturating_sub(1)).rev() {
            tail += current[i + 1];
            if tail > 0 {
                let mut succ = current.clone();
                succ[i] += 1;
                for v in &mut succ[i + 1..] {
                    *v = 0;
                }
                succ[n - 1] = tail - 1;
                self.next = Some(succ);
                break;
            }
        }
        Some(Composition {
            parts: current,
            total: self.total,
        })
    }
}

/// All `y` with `0 ≤ y_k ≤ bounds_k`; `∏(bounds_k + 1)` of them. Empty bounds
/// give the single empty index.
pub fn box_indices(bounds: &[usize]) -> BoxIndices {
    BoxIndices {
        next: Some(vec![0; bounds.len()]),
        bounds: bounds.to_vec(),
    }
}

#[derive(Clone, Debug)]
pub struct BoxIndices {
    next: Option<Vec<usize>>,
    bounds: Vec<usize>,
}

impl Iterator for BoxIndices {
    type Item = BoxIndex;

    fn next(&mut self) -> Option<BoxIndex> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for i in (0..succ.len()).rev() {
            if succ[i] < self.bounds[i] {
                succ[i] += 1;
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(BoxIndex {
            parts: current,
            bounds: self.bounds.clone(),
        })
    }
}

/// Binomial coefficient as u128, for term-count checks.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn collect(n: usize, total: usize) -> Vec<Vec<usize>> {
        compositions(n, total).map(|c| c.parts().to_vec()).collect()
    }

    #[test]
    fn small_composition_lists() {
        assert_eq!(collect(2, 3), vec![vec![0, 3], vec![1, 2], vec![2, 1], vec![3, 0]]);
        assert_eq!(collect(1, 5), vec![vec![5]]);
        assert_eq!(compositions(3, 4).count(), 15);
        assert_eq!(collect(3, 0), vec![vec![0, 0, 0]]);
        assert_eq!(collect(0, 0), vec![Vec::<usize>::new()]);
        assert_eq!(compositions(0, 2).count(), 0);
    }

    #[test]
    fn small_box_lists() {
        let b: Vec<_> = box_indices(&[1, 1]).map(|b| b.parts().to_vec()).collect();
        assert_eq!(b, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        let empty: Vec<_> = box_indices(&[]).collect();
        assert_eq!(empty.len(), 1);
        assert!(empty[0].parts().is_empty());
        assert_eq!(box_indices(&[2, 3]).count(), 12);
        assert_eq!(box_indices(&[0, 0, 0]).count(), 1);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 2), 15);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 4), 0);
    }

    proptest! {
        #[test]
        fn compositions_are_sorted_complete_and_valid(n in 1usize..5, total in 0usize..7) {
            let all = collect(n, total);
            prop_assert_eq!(all.len() as u128, binomial((total + n - 1) as u64, (n - 1) as u64));
            for c in &all {
                prop_assert_eq!(c.len(), n);
                prop_assert_eq!(c.iter().sum::<usize>(), total);
            }
            for w in all.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
        }

        #[test]
        fn box_indices_are_sorted_complete_and_valid(bounds in proptest::collection::vec(0usize..4, 0..4)) {
            let all: Vec<Vec<usize>> = box_indices(&bounds).map(|b| b.parts().to_vec()).collect();
            let expected: usize = bounds.iter().map(|b| b + 1).product();
            prop_assert_eq!(all.len(), expected);
            for y in &all {
                for (v, b) in y.iter().zip(&bounds) {
                    prop_assert!(v <= b);
                }
            }
            for w in all.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
        }
    }
}
