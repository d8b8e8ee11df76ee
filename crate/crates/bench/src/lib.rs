//! Fixtures shared by the criterion benches.

use condmap_core::rng::replicate_rng;
use condmap_core::stats::Model;
use condmap_core::{Mobile, WeightSequence};

pub const FAMILIES: [&str; 2] = ["powerlaw:beta=3,c=1", "factorial:alpha=1"];

pub fn model(family: &str, n: usize) -> Model {
    Model::new(WeightSequence::parse(family).expect("known family"), n).expect("sampler builds")
}

/// A fixed mobile of size `n`, for benches that start after sampling.
pub fn mobile(family: &str, n: usize) -> Mobile {
    model(family, n).sample_mobile(&mut replicate_rng(0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_requested_size() {
        for f in FAMILIES {
            assert_eq!(mobile(f, 50).tree().n_edges(), 50);
        }
    }
}
