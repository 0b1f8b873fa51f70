use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::model::{SurgemeClass, NUM_CLASSES};
use crate::seed;

/// A training set built from simulated and real segments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedSet {
    /// Indices into the simulated pool; always all of them, ascending.
    pub sim: Vec<usize>,
    /// Indices into the real pool, ascending.
    pub real: Vec<usize>,
    /// `round(ratio * |sim|)`.
    pub requested: usize,
    /// The real pool was smaller than requested and was used whole.
    pub shortfall: bool,
}

/// Number of real segments for a real:sim ratio.
pub fn real_count(ratio: f64, sim: usize) -> usize {
    (ratio * sim as f64).round() as usize
}

/// All simulated segments plus `round(ratio * |sim|)` real ones drawn per
/// class in proportion to the real pool (largest remainder, ties to the
/// lowest class id), each class sampled without replacement from the seed.
pub fn mix_training_data(sim: &[SurgemeClass], real: &[SurgemeClass], ratio: f64, seed: u64) -> Result<MixedSet> {
    if !(ratio.is_finite() && ratio >= 0.0) {
        return Err(Error::InvalidParams(format!("ratio {ratio} must be a nonnegative number")));
    }
    let requested = real_count(ratio, sim.len());
    let shortfall = requested > real.len();
    let take = requested.min(real.len());
    if shortfall {
        log::warn!(
            "ratio {ratio} asks for {requested} real segments but only {} are available",
            real.len()
        );
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); NUM_CLASSES];
    for (i, l) in real.iter().enumerate() {
        by_class[l.id()].push(i);
    }
    let total = real.len().max(1);
    let mut quota: Vec<usize> = by_class.iter().map(|c| take * c.len() / total).collect();
    let mut left = take - quota.iter().sum::<usize>();
    let mut remainders: Vec<(usize, usize)> = by_class
        .iter()
        .enumerate()
        .map(|(c, members)| ((take * members.len()) % total, c))
        .collect();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, c) in &remainders {
        if left == 0 {
            break;
        }
        if quota[c] < by_class[c].len() {
            quota[c] += 1;
            left -= 1;
        }
    }
    let mut chosen = Vec::with_capacity(take);
    for (c, members) in by_class.iter_mut().enumerate() {
        let mut rng = seed::rng(seed::derive(seed, c as u64));
        members.shuffle(&mut rng);
        chosen.extend_from_slice(&members[..quota[c]]);
    }
    chosen.sort_unstable();
    Ok(MixedSet {
        sim: (0..sim.len()).collect(),
        real: chosen,
        requested,
        shortfall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<SurgemeClass> {
        (0..n).map(|i| SurgemeClass::ALL[i % 7]).collect()
    }

    #[test]
    fn ratio_arithmetic() {
        let real = labels(200);
        let zero = mix_training_data(&labels(85), &real, 0.0, 1).unwrap();
        assert!(zero.real.is_empty());
        assert_eq!(zero.sim, (0..85).collect::<Vec<_>>());
        assert_eq!(mix_training_data(&labels(85), &real, 0.18, 1).unwrap().real.len(), 15);
        let half = mix_training_data(&labels(100), &real, 1.0, 1).unwrap();
        assert_eq!(half.real.len(), 100);
        assert!(!half.shortfall);
    }

    #[test]
    fn sample_is_class_proportional() {
        let real = labels(140);
        let m = mix_training_data(&labels(70), &real, 1.0, 5).unwrap();
        let mut counts = [0; 7];
        m.real.iter().for_each(|&i| counts[real[i].id()] += 1);
        assert_eq!(counts, [10; 7]);
    }

    #[test]
    fn shortfall_is_flagged() {
        let m = mix_training_data(&labels(50), &labels(20), 1.0, 0).unwrap();
        assert!(m.shortfall);
        assert_eq!(m.requested, 50);
        assert_eq!(m.real, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        let real = labels(300);
        let a = mix_training_data(&labels(100), &real, 0.28, 3).unwrap();
        assert_eq!(a, mix_training_data(&labels(100), &real, 0.28, 3).unwrap());
        assert_ne!(a.real, mix_training_data(&labels(100), &real, 0.28, 4).unwrap().real);
        assert!(mix_training_data(&labels(10), &real, -0.1, 0).is_err());
    }
}
