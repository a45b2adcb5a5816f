use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{validate_system, RawState, RawSystem, SystemError, TransitionSystem};
use crate::rational::{self, Rational};

/// Seeded random system. Valuations are `k/m` with `m <= denominator_bound`;
/// each state terminates with probability `termination_prob`, otherwise it
/// gets between 1 and `branching` distinct successors whose weights are
/// positive multiples of `1/m` for some `m <= denominator_bound`.
pub fn random_system(
    n_states: usize,
    n_atoms: usize,
    branching: usize,
    denominator_bound: u32,
    termination_prob: &Rational,
    seed: u64,
) -> Result<TransitionSystem, SystemError> {
    if n_states == 0 {
        return Err(SystemError::Parameter("n_states must be at least 1".into()));
    }
    if denominator_bound == 0 {
        return Err(SystemError::Parameter(
            "denominator_bound must be positive".into(),
        ));
    }
    if !rational::is_unit_interval(termination_prob) {
        return Err(SystemError::Parameter(format!(
            "termination probability {termination_prob} outside [0,1]"
        )));
    }
    let always_stop = *termination_prob == rational::one();
    if branching == 0 && !always_stop {
        return Err(SystemError::Parameter(
            "branching 0 requires termination probability 1".into(),
        ));
    }
    let branching = branching.min(n_states);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tp_num: u64 = termination_prob.numer().try_into().unwrap_or(u64::MAX);
    let tp_den: u64 = termination_prob.denom().try_into().unwrap_or(u64::MAX);

    let atoms: Vec<String> = (0..n_atoms).map(atom_name).collect();
    let mut states = Vec::with_capacity(n_states);
    for i in 0..n_states {
        let valuation = atoms
            .iter()
            .map(|a| {
                let den = rng.gen_range(1..=denominator_bound as i64);
                let num = rng.gen_range(0..=den);
                (a.clone(), rational::ratio(num, den))
            })
            .collect();
        let stops = always_stop || rng.gen_range(0..tp_den) < tp_num;
        let successors = if stops {
            None
        } else {
            let wanted = rng.gen_range(1..=branching);
            let lo = (wanted as u32).min(denominator_bound);
            let den = rng.gen_range(lo..=denominator_bound);
            let k = wanted.min(den as usize);
            let targets = sample(&mut rng, n_states, k).into_vec();
            Some(targets.into_iter().zip(split(&mut rng, den, k)).collect())
        };
        states.push(RawState {
            label: Some(format!("s{i}")),
            valuation,
            successors,
        });
    }
    validate_system(RawSystem { atoms, states })
}

fn atom_name(i: usize) -> String {
    const NAMES: [&str; 6] = ["p", "q", "r", "s", "t", "u"];
    NAMES
        .get(i)
        .map_or_else(|| format!("p{i}"), |n| n.to_string())
}

/// `den` split into `k` positive parts, as weights over `den`.
fn split(rng: &mut impl Rng, den: u32, k: usize) -> Vec<Rational> {
    let mut cuts: Vec<u32> = sample(rng, den as usize - 1, k - 1)
        .into_iter()
        .map(|c| c as u32 + 1)
        .collect();
    cuts.sort_unstable();
    cuts.push(den);
    let mut prev = 0;
    cuts.into_iter()
        .map(|c| {
            let w = rational::ratio((c - prev) as i64, den as i64);
            prev = c;
            w
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use crate::system::system_to_json;

    #[test]
    fn deterministic_in_seed() {
        let a = random_system(5, 1, 2, 8, &ratio(1, 4), 42).unwrap();
        let b = random_system(5, 1, 2, 8, &ratio(1, 4), 42).unwrap();
        assert_eq!(
            system_to_json(&a).to_string(),
            system_to_json(&b).to_string()
        );
        assert_eq!(a.state_count(), 5);
    }

    #[test]
    fn single_terminating_state() {
        let s = random_system(1, 0, 0, 8, &ratio(1, 1), 0).unwrap();
        assert_eq!(s.state_count(), 1);
        assert!(s.is_terminating(crate::system::StateId(0)));
    }

    #[test]
    fn bad_parameters() {
        assert!(random_system(0, 1, 2, 8, &ratio(1, 4), 1).is_err());
        assert!(random_system(3, 1, 0, 8, &ratio(1, 4), 1).is_err());
        assert!(random_system(3, 1, 2, 0, &ratio(1, 4), 1).is_err());
        assert!(random_system(3, 1, 2, 8, &ratio(5, 4), 1).is_err());
    }

    #[test]
    fn denominators_stay_bounded() {
        for seed in 0..50 {
            let s = random_system(8, 2, 3, 16, &ratio(1, 5), seed).unwrap();
            for st in s.states() {
                for (_, w) in s.successors(st).entries() {
                    assert!(*w.denom() <= 16u32.into());
                }
            }
        }
    }
}
