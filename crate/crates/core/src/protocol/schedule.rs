use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graphs::ClassMessage;

/// The known training sequence of one epoch: every class exactly once, in a pseudorandom order
/// both nodes derive independently from the shared seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpochSchedule {
    pub epoch: usize,
    pub permutation: Vec<ClassMessage>,
}

impl EpochSchedule {
    pub fn derive(shared_seed: u64, epoch: usize, num_classes: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(shared_seed);
        rng.set_stream(epoch as u64);
        let mut ids: Vec<usize> = (0..num_classes).collect();
        ids.shuffle(&mut rng);
        Self {
            epoch,
            permutation: ids
                .into_iter()
                .map(|i| ClassMessage::new(i, num_classes).expect("in range"))
                .collect(),
        }
    }
}
