//! Reference samples for excursion functionals: a uniform ±1 bridge of
//! length `2m`, rotated at its first minimum (discrete Vervaat transform)
//! and scaled by `√(2m)`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionSample {
    pub max: f64,
    pub at_half: f64,
}

/// Rotate a closed walk `s_0..s_{2m}` (with `s_{2m} = s_0`) at its first
/// minimum. The result starts and ends at 0 and is non-negative.
pub fn vervaat(bridge: &[i64]) -> Vec<i64> {
    let len = bridge.len() - 1;
    let (k, &min) = bridge[..len]
        .iter()
        .enumerate()
        .min_by_key(|&(i, &v)| (v, i))
        .expect("non-empty bridge");
    (0..=len).map(|j| bridge[(k + j) % len] - min).collect()
}

pub fn excursion_path<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<i64> {
    let mut steps: Vec<i64> = std::iter::repeat_n(1, m).chain(std::iter::repeat_n(-1, m)).collect();
    steps.shuffle(rng);
    let mut bridge = Vec::with_capacity(2 * m + 1);
    bridge.push(0);
    let mut s = 0;
    for x in steps {
        s += x;
        bridge.push(s);
    }
    vervaat(&bridge)
}

pub fn excursion_oracle<R: Rng + ?Sized>(m: usize, draws: usize, rng: &mut R) -> Vec<ExcursionSample> {
    assert!(m >= 1);
    let scale = ((2 * m) as f64).sqrt();
    (0..draws)
        .map(|_| {
            let e = excursion_path(m, rng);
            ExcursionSample {
                max: *e.iter().max().unwrap() as f64 / scale,
                at_half: e[m] as f64 / scale,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;

    #[test]
    fn rotation_properties() {
        let mut rng = replicate_rng(1, 0);
        for _ in 0..100 {
            let e = excursion_path(50, &mut rng);
            assert_eq!(e.len(), 101);
            assert_eq!(e[0], 0);
            assert_eq!(e[100], 0);
            assert_eq!(*e.iter().min().unwrap(), 0);
        }
        assert_eq!(vervaat(&[0, -1, 0, 1, 0]), vec![0, 1, 2, 1, 0]);
    }

    #[test]
    fn mean_maximum_is_stable() {
        // E max of the standard excursion is √(π/2)
        let mut rng = replicate_rng(2, 0);
        let mean = |m: usize, rng: &mut _| {
            let s = excursion_oracle(m, 4000, rng);
            s.iter().map(|x| x.max).sum::<f64>() / s.len() as f64
        };
        let a = mean(1000, &mut rng);
        let b = mean(4000, &mut rng);
        let target = (std::f64::consts::PI / 2.0).sqrt();
        assert!((a - target).abs() < 0.04, "{a}");
        assert!((b - target).abs() < 0.03, "{b}");
        assert!((a - b).abs() < 0.05);
    }
}
