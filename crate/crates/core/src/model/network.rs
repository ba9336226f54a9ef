/// A comparator `(hi, lo)` leaves the larger value on wire `hi` and the smaller on `lo`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparatorNetwork {
    /// Real wires; the rest up to `padded` carry a −∞ sentinel.
    pub wires: usize,
    pub padded: usize,
    pub comparators: Vec<(usize, usize)>,
}

/// Batcher's bitonic network sorting descending, padded to a power of two.
pub fn bitonic_network(n: usize) -> ComparatorNetwork {
    let padded = n.max(1).next_power_of_two();
    let mut comparators = Vec::new();
    let mut size = 2;
    while size <= padded {
        let mut stride = size / 2;
        while stride > 0 {
            for i in 0..padded {
                let l = i ^ stride;
                if l > i {
                    if i & size == 0 {
                        comparators.push((i, l));
                    } else {
                        comparators.push((l, i));
                    }
                }
            }
            stride /= 2;
        }
        size *= 2;
    }
    ComparatorNetwork { wires: n, padded, comparators }
}

impl ComparatorNetwork {
    /// Run on real inputs; sentinel wires hold −∞.
    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.wires);
        let mut w = input.to_vec();
        w.resize(self.padded, f64::NEG_INFINITY);
        for &(hi, lo) in &self.comparators {
            if w[hi] < w[lo] {
                w.swap(hi, lo);
            }
        }
        w.truncate(self.wires);
        w
    }

    /// Zero-one principle check over all `2^wires` inputs.
    pub fn sorts_all_binary(&self) -> bool {
        let n = self.wires;
        assert!(n <= 24, "exhaustive check limited to 24 wires");
        let mut w = vec![0i8; self.padded];
        for mask in 0u32..(1u32 << n) {
            for (i, slot) in w.iter_mut().enumerate() {
                *slot = if i >= n { -1 } else { ((mask >> i) & 1) as i8 };
            }
            for &(hi, lo) in &self.comparators {
                if w[hi] < w[lo] {
                    w.swap(hi, lo);
                }
            }
            if w[..n].windows(2).any(|p| p[0] < p[1]) {
                return false;
            }
        }
        true
    }

    pub fn depth_formula_count(&self) -> usize {
        let k = self.padded.trailing_zeros() as usize;
        (self.padded / 2) * k * (k + 1) / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        assert_eq!(bitonic_network(2).comparators.len(), 1);
        assert_eq!(bitonic_network(4).comparators.len(), 6);
        assert_eq!(bitonic_network(1).comparators.len(), 0);
    }

    #[test]
    fn count_formula() {
        for n in [2, 4, 8, 16, 32, 64] {
            let net = bitonic_network(n);
            assert_eq!(net.comparators.len(), net.depth_formula_count());
        }
    }

    #[test]
    fn padded_sizes_sort() {
        for n in 1..=12 {
            assert!(bitonic_network(n).sorts_all_binary(), "n={n}");
        }
    }

    #[test]
    fn apply_sorts_reals() {
        let net = bitonic_network(5);
        assert_eq!(net.apply(&[3.0, -1.0, 4.0, 1.0, 5.0]), vec![5.0, 4.0, 3.0, 1.0, -1.0]);
    }
}
