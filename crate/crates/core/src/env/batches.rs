//! Batched, shuffled index plans over a record set.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha12Rng;

use crate::{Error, Result};

/// Plans which record feeds each step, grouped into batches.
///
/// Each epoch is an independent shuffle of all record indices; epochs are
/// concatenated, truncated to `horizon` steps, and cut into contiguous
/// chunks of `batch_size` (the last may be short), giving exactly
/// ceil(horizon / batch_size) batches. Within an epoch no record is
/// dropped or repeated.
pub fn batch_indices(
    num_records: usize,
    horizon: u64,
    batch_size: usize,
    max_epochs: u32,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    if max_epochs == 0 {
        return Err(Error::Config("at least one epoch is required".into()));
    }
    if horizon == 0 {
        return Ok(Vec::new());
    }
    if num_records == 0 {
        return Err(Error::Config("cannot stream from an empty record set".into()));
    }
    let available = num_records as u64 * max_epochs as u64;
    if horizon > available {
        return Err(Error::Config(format!(
            "horizon {horizon} exceeds {num_records} records x {max_epochs} epochs"
        )));
    }

    let horizon = horizon as usize;
    let mut order = Vec::with_capacity(horizon);
    while order.len() < horizon {
        let mut epoch: Vec<usize> = (0..num_records).collect();
        epoch.shuffle(rng);
        let need = horizon - order.len();
        epoch.truncate(need.min(num_records));
        order.extend(epoch);
    }

    Ok(order.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn hundred_records_batch_32_splits_as_expected() {
        let mut rng = stream(1, "shuffle");
        let batches = batch_indices(100, 100, 32, 1, &mut rng).unwrap();
        let sizes: Vec<usize> = batches.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![32, 32, 32, 4]);

        // One epoch covers every record exactly once.
        let mut all: Vec<usize> = batches.into_iter().flatten().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_gives_the_same_order() {
        let a = batch_indices(50, 50, 8, 1, &mut stream(2, "shuffle")).unwrap();
        let b = batch_indices(50, 50, 8, 1, &mut stream(2, "shuffle")).unwrap();
        assert_eq!(a, b);
        let c = batch_indices(50, 50, 8, 1, &mut stream(3, "shuffle")).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn horizon_truncates_to_a_single_short_batch() {
        let mut rng = stream(4, "shuffle");
        let batches = batch_indices(100, 10, 32, 1, &mut rng).unwrap();
        assert_eq!(batches.len(), 1);
        assert_eq!(batches[0].len(), 10);
    }

    #[test]
    fn epochs_concatenate_without_drops_or_repeats() {
        let mut rng = stream(5, "shuffle");
        let batches = batch_indices(10, 25, 8, 3, &mut rng).unwrap();
        let sizes: Vec<usize> = batches.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![8, 8, 8, 1]);

        let flat: Vec<usize> = batches.into_iter().flatten().collect();
        for epoch in [&flat[0..10], &flat[10..20]] {
            let mut seen = epoch.to_vec();
            seen.sort_unstable();
            assert_eq!(seen, (0..10).collect::<Vec<_>>());
        }
        let mut tail = flat[20..25].to_vec();
        tail.sort_unstable();
        tail.dedup();
        assert_eq!(tail.len(), 5, "partial epoch must not repeat a record");
    }

    #[test]
    fn bad_shapes_are_rejected() {
        let mut rng = stream(6, "shuffle");
        assert!(batch_indices(10, 5, 0, 1, &mut rng).is_err());
        assert!(batch_indices(10, 5, 4, 0, &mut rng).is_err());
        assert!(batch_indices(0, 5, 4, 1, &mut rng).is_err());
        assert!(batch_indices(10, 11, 4, 1, &mut rng).is_err());
        assert!(batch_indices(10, 21, 4, 2, &mut rng).is_err());
        assert!(batch_indices(10, 0, 4, 1, &mut rng).unwrap().is_empty());
        assert!(batch_indices(0, 0, 4, 1, &mut rng).unwrap().is_empty());
    }
}
