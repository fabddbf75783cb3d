//! Binary indexed tree over non-negative `f64` weights with inverse-prefix search.

#[derive(Clone, Debug, Default)]
pub struct FenwickTree {
    /// Exact leaf weights, 0-based.
    values: Vec<f64>,
    /// Partial sums, 1-based (`tree[0]` unused).
    tree: Vec<f64>,
}

#[inline]
fn lsb(i: usize) -> usize {
    i & i.wrapping_neg()
}

impl FenwickTree {
    pub fn new() -> Self {
        Self {
            values: Vec::new(),
            tree: vec![0.0],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        let mut t = Self {
            values,
            tree: Vec::new(),
        };
        t.rebuild();
        t
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Appends a leaf in `O(log n)`.
    pub fn push(&mut self, value: f64) {
        self.values.push(value);
        let i = self.values.len();
        // Node i covers (i - lsb(i), i]; its children are i - 1, i - 2, i - 4, ...
        let mut node = value;
        let mut step = 1;
        while step < lsb(i) {
            node += self.tree[i - step];
            step <<= 1;
        }
        self.tree.push(node);
    }

    pub fn add(&mut self, i: usize, delta: f64) {
        self.values[i] += delta;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += lsb(k);
        }
    }

    /// Sum of the first `k` leaves.
    pub fn prefix_sum(&self, mut k: usize) -> f64 {
        let mut sum = 0.0;
        while k > 0 {
            sum += self.tree[k];
            k -= lsb(k);
        }
        sum
    }

    pub fn total(&self) -> f64 {
        self.prefix_sum(self.len())
    }

    /// Index of the leaf whose cumulative interval contains `x`, i.e. the
    /// smallest `i` with `prefix_sum(i + 1) > x`. Zero-weight leaves are never
    /// returned; `x` beyond the total maps to the last positive leaf.
    pub fn find(&self, mut x: f64) -> Option<usize> {
        let n = self.len();
        if n == 0 {
            return None;
        }
        let mut pos = 0;
        let mut step = 1usize << (usize::BITS - 1 - n.leading_zeros());
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= x {
                pos = next;
                x -= self.tree[next];
            }
            step >>= 1;
        }
        let pos = pos.min(n - 1);
        if self.values[pos] > 0.0 {
            return Some(pos);
        }
        // Rounding in the partial sums can land on an empty leaf.
        (pos + 1..n)
            .find(|&i| self.values[i] > 0.0)
            .or_else(|| (0..pos).rev().find(|&i| self.values[i] > 0.0))
    }

    /// Recomputes all partial sums from the leaves.
    pub fn rebuild(&mut self) {
        let n = self.values.len();
        self.tree.clear();
        self.tree.push(0.0);
        self.tree.extend_from_slice(&self.values);
        for i in 1..=n {
            let parent = i + lsb(i);
            if parent <= n {
                self.tree[parent] += self.tree[i];
            }
        }
    }

    pub fn set_values(&mut self, values: Vec<f64>) {
        self.values = values;
        self.rebuild();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn find_skips_zero_leaves() {
        let t = FenwickTree::from_values(vec![2.0, 0.0, 1.0, 0.0, 1.5]);
        assert_eq!(t.find(0.0), Some(0));
        assert_eq!(t.find(1.999), Some(0));
        assert_eq!(t.find(2.0), Some(2));
        assert_eq!(t.find(2.999), Some(2));
        assert_eq!(t.find(3.0), Some(4));
        assert_eq!(t.find(10.0), Some(4));
        assert_eq!(FenwickTree::new().find(0.0), None);
    }

    proptest! {
        #[test]
        fn push_matches_bulk_build(values in prop::collection::vec(0.0f64..10.0, 0..200)) {
            let bulk = FenwickTree::from_values(values.clone());
            let mut pushed = FenwickTree::new();
            for &v in &values {
                pushed.push(v);
            }
            for k in 0..=values.len() {
                let direct: f64 = values[..k].iter().sum();
                prop_assert!((bulk.prefix_sum(k) - direct).abs() < 1e-9);
                prop_assert!((pushed.prefix_sum(k) - direct).abs() < 1e-9);
            }
        }

        #[test]
        fn find_agrees_with_linear_scan(
            values in prop::collection::vec(prop_oneof![Just(0.0), 0.5f64..4.0], 1..100),
            frac in 0.0f64..1.0,
            updates in prop::collection::vec((0usize..100, 0.0f64..2.0), 0..20),
        ) {
            let mut values = values;
            let mut t = FenwickTree::from_values(values.clone());
            for (i, d) in updates {
                let i = i % values.len();
                values[i] += d;
                t.add(i, d);
            }
            let total: f64 = values.iter().sum();
            prop_assume!(total > 0.0);
            let x = frac * total;
            let mut acc = 0.0;
            let expected = values.iter().position(|&v| { acc += v; acc > x });
            if let Some(e) = expected {
                // Exact ties at leaf boundaries may differ by rounding only.
                let got = t.find(x).unwrap();
                prop_assert!(values[got] > 0.0);
                let lo: f64 = values[..got].iter().sum();
                prop_assert!(got == e || (lo - x).abs() < 1e-9 || (lo + values[got] - x).abs() < 1e-9);
            }
        }
    }
}
