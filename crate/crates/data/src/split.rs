//! Participant-level dataset splits.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DataError, Result};
use crate::sample::FrameSample;

/// Fraction of training participants moved to validation.
pub const DEFAULT_VAL_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParticipantSplit {
    pub train: BTreeSet<String>,
    pub val: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

impl ParticipantSplit {
    /// Shuffles the distinct ids with `seed`, holds out `test_fraction` of
    /// them for testing, then `val_fraction` of the remainder for validation.
    pub fn new<'a>(
        participants: impl IntoIterator<Item = &'a str>,
        test_fraction: f64,
        val_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&test_fraction) || !(0.0..1.0).contains(&val_fraction) {
            return Err(DataError::InvalidArgument("split fractions must be in [0, 1)".into()));
        }
        let ids: BTreeSet<&str> = participants.into_iter().collect();
        let mut ids: Vec<String> = ids.into_iter().map(str::to_string).collect();
        if ids.len() < 2 {
            return Err(DataError::InvalidArgument(format!(
                "need at least 2 participants to split, got {}",
                ids.len()
            )));
        }
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_test = ((ids.len() as f64 * test_fraction).ceil() as usize).clamp(1, ids.len() - 1);
        let test: BTreeSet<String> = ids.drain(..n_test).collect();
        let n_val = if ids.len() >= 2 && val_fraction > 0.0 {
            ((ids.len() as f64 * val_fraction).round() as usize).clamp(1, ids.len() - 1)
        } else {
            0
        };
        let val: BTreeSet<String> = ids.drain(..n_val).collect();
        Ok(Self {
            train: ids.into_iter().collect(),
            val,
            test,
        })
    }

    /// Partitions samples into `(train, val, test)` by participant.
    pub fn apply(&self, samples: Vec<FrameSample>) -> (Vec<FrameSample>, Vec<FrameSample>, Vec<FrameSample>) {
        let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
        for s in samples {
            let p = &s.meta.participant;
            if self.test.contains(p) {
                test.push(s);
            } else if self.val.contains(p) {
                val.push(s);
            } else {
                train.push(s);
            }
        }
        (train, val, test)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_are_disjoint_and_cover() {
        let ids: Vec<String> = (0..12).map(|i| format!("p{i:02}")).collect();
        let s = ParticipantSplit::new(ids.iter().map(String::as_str), 0.2, DEFAULT_VAL_FRACTION, 1).unwrap();
        assert_eq!(s.test.len(), 3);
        assert_eq!(s.val.len(), 2);
        assert_eq!(s.train.len(), 7);
        assert!(s.test.is_disjoint(&s.train) && s.test.is_disjoint(&s.val));
        assert!(s.val.is_disjoint(&s.train));
        let again = ParticipantSplit::new(ids.iter().map(String::as_str), 0.2, 0.2, 1).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn too_few_participants() {
        assert!(ParticipantSplit::new(["a", "a"], 0.2, 0.2, 0).is_err());
        assert!(ParticipantSplit::new(["a", "b"], 1.5, 0.2, 0).is_err());
    }
}
