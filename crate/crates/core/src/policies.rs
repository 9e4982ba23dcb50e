//! Target and behavior policies for the fixed-policy testbed.

use rand::Rng;

use crate::env::{Action, CarState};
use crate::error::{Error, Result};

/// The evaluated policy: push in the direction of motion, coast at rest.
pub fn target_action(s: CarState) -> Action {
    if s.velocity > 0.0 {
        Action::Forward
    } else if s.velocity < 0.0 {
        Action::Reverse
    } else {
        Action::Coast
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolicyKind {
    Target,
    /// With probability `epsilon` pick uniformly among all three actions,
    /// otherwise follow the target policy.
    Behavior { epsilon: f64 },
}

impl PolicyKind {
    pub fn behavior(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Config(format!("epsilon {epsilon} outside [0, 1]")));
        }
        Ok(PolicyKind::Behavior { epsilon })
    }
}

pub fn action_prob(kind: PolicyKind, s: CarState, a: Action) -> f64 {
    let greedy = a == target_action(s);
    match kind {
        PolicyKind::Target => f64::from(u8::from(greedy)),
        PolicyKind::Behavior { epsilon } => {
            let share = epsilon / 3.0;
            if greedy {
                (1.0 - epsilon) + share
            } else {
                share
            }
        }
    }
}

pub fn behavior_sample<R: Rng + ?Sized>(kind: PolicyKind, s: CarState, rng: &mut R) -> Action {
    match kind {
        PolicyKind::Target => target_action(s),
        PolicyKind::Behavior { epsilon } => {
            if rng.gen::<f64>() < epsilon {
                Action::ALL[rng.gen_range(0..3)]
            } else {
                target_action(s)
            }
        }
    }
}

/// π(a|s)/μ(a|s) for the target policy π and behavior μ.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Rho(pub f64);

impl Rho {
    pub const ONE: Rho = Rho(1.0);
}

pub fn importance_ratio(s: CarState, a: Action, behavior: PolicyKind) -> Result<Rho> {
    let mu = action_prob(behavior, s, a);
    if mu <= 0.0 {
        return Err(Error::CoverageViolation { action: a });
    }
    Ok(Rho(action_prob(PolicyKind::Target, s, a) / mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const OFF: PolicyKind = PolicyKind::Behavior { epsilon: 0.1 };

    #[test]
    fn target_follows_velocity_sign() {
        assert_eq!(target_action(CarState::new(-0.5, 0.01)), Action::Forward);
        assert_eq!(target_action(CarState::new(-0.5, -0.01)), Action::Reverse);
        assert_eq!(target_action(CarState::new(-0.5, 0.0)), Action::Coast);
    }

    #[test]
    fn mixture_probabilities() {
        let s = CarState::new(-0.5, 0.01);
        assert!((action_prob(OFF, s, Action::Forward) - 14.0 / 15.0).abs() < 1e-15);
        assert!((action_prob(OFF, s, Action::Coast) - 1.0 / 30.0).abs() < 1e-15);
        assert_eq!(action_prob(PolicyKind::Target, s, Action::Reverse), 0.0);
        for kind in [PolicyKind::Target, OFF, PolicyKind::Behavior { epsilon: 1.0 }] {
            let total: f64 = Action::ALL.iter().map(|&a| action_prob(kind, s, a)).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ratios() {
        let s = CarState::new(-0.3, -0.02);
        let r = importance_ratio(s, Action::Reverse, OFF).unwrap();
        assert!((r.0 - 15.0 / 14.0).abs() < 1e-15);
        assert_eq!(importance_ratio(s, Action::Forward, OFF).unwrap(), Rho(0.0));
        assert_eq!(
            importance_ratio(s, Action::Reverse, PolicyKind::Target).unwrap(),
            Rho::ONE
        );
        assert!(matches!(
            importance_ratio(s, Action::Coast, PolicyKind::Target),
            Err(Error::CoverageViolation { .. })
        ));
    }

    #[test]
    fn expected_ratio_is_one() {
        for v in [-0.05, 0.0, 0.03] {
            let s = CarState::new(-0.7, v);
            let e: f64 = Action::ALL
                .iter()
                .map(|&a| action_prob(OFF, s, a) * importance_ratio(s, a, OFF).unwrap().0)
                .sum();
            assert!((e - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn target_sampling_ignores_rng() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = CarState::new(-0.5, 0.02);
        for _ in 0..50 {
            assert_eq!(behavior_sample(PolicyKind::Target, s, &mut rng), Action::Forward);
        }
    }

    fn frequencies(kind: PolicyKind, s: CarState, n: usize) -> [f64; 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[behavior_sample(kind, s, &mut rng).index()] += 1;
        }
        counts.map(|c| c as f64 / n as f64)
    }

    #[test]
    fn uniform_when_fully_random() {
        let n = 100_000;
        let se = ((1.0 / 3.0) * (2.0 / 3.0) / n as f64).sqrt();
        for f in frequencies(PolicyKind::Behavior { epsilon: 1.0 }, CarState::new(-0.5, 0.01), n) {
            assert!((f - 1.0 / 3.0).abs() <= 3.0 * se);
        }
    }

    #[test]
    fn target_action_frequency_under_mixture() {
        let n = 100_000;
        let q = 14.0 / 15.0;
        let se = (q * (1.0 - q) / n as f64).sqrt();
        let f = frequencies(OFF, CarState::new(-0.5, 0.01), n)[Action::Forward.index()];
        assert!((f - q).abs() <= 3.0 * se, "{f}");
    }
}
