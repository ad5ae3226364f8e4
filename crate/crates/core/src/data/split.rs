use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Partition sizes for `n` items by largest remainder: each size is within
/// one item of the exact proportional share and the sizes sum to `n`.
pub fn split_sizes(n: usize, fractions: &[f64]) -> Result<Vec<usize>> {
    if fractions.is_empty() {
        return Err(Error::invalid("no split fractions"));
    }
    if fractions.iter().any(|f| !f.is_finite() || *f <= 0.0) {
        return Err(Error::invalid(format!(
            "split fractions must be positive: {fractions:?}"
        )));
    }
    let total: f64 = fractions.iter().sum();
    let exact: Vec<f64> = fractions.iter().map(|f| n as f64 * f / total).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut by_remainder: Vec<usize> = (0..fractions.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in by_remainder.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    Ok(sizes)
}

/// Seeded random split of whole items into `fractions.len()` partitions.
/// Fractions are normalized; each partition keeps the input order of its
/// members, so a single fraction returns the input unchanged.
pub fn split_partition<T: Clone>(entries: &[T], fractions: &[f64], seed: u64) -> Result<Vec<Vec<T>>> {
    if entries.is_empty() {
        return Err(Error::EmptyInput("split of an empty partition"));
    }
    let sizes = split_sizes(entries.len(), fractions)?;
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for size in sizes {
        let mut members = order[start..start + size].to_vec();
        members.sort_unstable();
        out.push(members.into_iter().map(|i| entries[i].clone()).collect());
        start += size;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn halves_of_2670() {
        let items: Vec<u32> = (0..2670).collect();
        let parts = split_partition(&items, &[0.5, 0.5], 1).unwrap();
        assert_eq!(parts[0].len(), 1335);
        assert_eq!(parts[1].len(), 1335);
    }

    #[test]
    fn single_fraction_is_identity() {
        let items: Vec<u32> = (0..17).rev().collect();
        assert_eq!(split_partition(&items, &[1.0], 99).unwrap(), vec![items]);
    }

    #[test]
    fn deterministic_per_seed() {
        let items: Vec<u32> = (0..100).collect();
        let a = split_partition(&items, &[0.3, 0.7], 5).unwrap();
        assert_eq!(a, split_partition(&items, &[0.3, 0.7], 5).unwrap());
        assert_ne!(a, split_partition(&items, &[0.3, 0.7], 6).unwrap());
    }

    #[test]
    fn errors() {
        assert!(split_partition::<u8>(&[], &[1.0], 0).is_err());
        assert!(split_partition(&[1], &[0.0, 1.0], 0).is_err());
        assert!(split_partition(&[1], &[], 0).is_err());
    }

    #[test]
    fn unnormalized_weights() {
        assert_eq!(split_sizes(10, &[1.0, 1.0, 2.0]).unwrap(), vec![3, 2, 5]);
    }

    proptest! {
        #[test]
        fn split_is_a_permutation_within_one_of_exact(
            n in 1usize..300,
            weights in proptest::collection::vec(0.01f64..5.0, 1..6),
            seed in any::<u64>(),
        ) {
            let items: Vec<usize> = (0..n).collect();
            let parts = split_partition(&items, &weights, seed).unwrap();
            let total: f64 = weights.iter().sum();
            for (p, w) in parts.iter().zip(&weights) {
                prop_assert!((p.len() as f64 - n as f64 * w / total).abs() < 1.0);
            }
            let mut all: Vec<usize> = parts.concat();
            all.sort_unstable();
            prop_assert_eq!(all, items);
        }
    }
}
