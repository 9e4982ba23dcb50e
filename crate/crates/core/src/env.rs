//! Mountain Car dynamics and a finite Markov-chain sampler.
//!
//! The car follows the canonical formulation: three throttle settings, a
//! cosine hill, an inelastic wall at the left edge and a goal at the right.
//! Every step costs −1 and the task is undiscounted.

use rand::Rng;

use crate::error::{Error, Result};

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
pub const GOAL_POSITION: f64 = 0.5;
pub const FORCE: f64 = 0.001;
pub const GRAVITY: f64 = 0.0025;

const RESET_LOW: f64 = -0.6;
const RESET_HIGH: f64 = -0.4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CarState {
    pub position: f64,
    pub velocity: f64,
}

impl CarState {
    pub fn new(position: f64, velocity: f64) -> Self {
        CarState { position, velocity }
    }

    pub fn in_bounds(&self) -> bool {
        (MIN_POSITION..=MAX_POSITION).contains(&self.position)
            && (-MAX_SPEED..=MAX_SPEED).contains(&self.velocity)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Reverse,
    Coast,
    Forward,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Reverse, Action::Coast, Action::Forward];

    pub fn throttle(self) -> f64 {
        match self {
            Action::Reverse => -1.0,
            Action::Coast => 0.0,
            Action::Forward => 1.0,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub reward: f64,
    pub next: CarState,
    pub terminal: bool,
}

/// Draws an episode start: position uniform on [−0.6, −0.4], at rest.
pub fn mc_reset<R: Rng + ?Sized>(rng: &mut R) -> CarState {
    reset_from_unit(rng.gen::<f64>())
}

/// Maps a unit-interval draw onto the start distribution.
pub fn reset_from_unit(u: f64) -> CarState {
    CarState::new(RESET_LOW + u * (RESET_HIGH - RESET_LOW), 0.0)
}

pub fn mc_step(s: CarState, a: Action) -> Transition {
    let velocity = (s.velocity + FORCE * a.throttle() - GRAVITY * (3.0 * s.position).cos())
        .clamp(-MAX_SPEED, MAX_SPEED);
    let raw = s.position + velocity;
    let next = if raw < MIN_POSITION {
        CarState::new(MIN_POSITION, 0.0)
    } else {
        CarState::new(raw.min(MAX_POSITION), velocity)
    };
    Transition {
        reward: -1.0,
        next,
        terminal: raw >= GOAL_POSITION,
    }
}

/// Index of a state in a finite chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChainState(pub usize);

const STOCHASTIC_TOL: f64 = 1e-12;

pub fn check_stochastic_row(row: &[f64], index: usize) -> Result<()> {
    let sum: f64 = row.iter().sum();
    if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::NotStochastic { row: index, sum });
    }
    Ok(())
}

/// Samples the successor of `s` from row `s` of a row-stochastic matrix
/// given as a slice of rows.
pub fn chain_step<R: Rng + ?Sized>(s: ChainState, p: &[Vec<f64>], rng: &mut R) -> Result<ChainState> {
    let row = p.get(s.0).ok_or(Error::DimensionMismatch {
        expected: p.len(),
        actual: s.0 + 1,
    })?;
    check_stochastic_row(row, s.0)?;
    Ok(sample_row(row, rng.gen::<f64>()))
}

pub(crate) fn sample_row(row: &[f64], u: f64) -> ChainState {
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = j;
            if u < acc {
                return ChainState(j);
            }
        }
    }
    // rounding left u just above the cumulative sum
    ChainState(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reset_maps_unit_draws_onto_start_range() {
        assert_eq!(reset_from_unit(0.5), CarState::new(-0.5, 0.0));
        assert_eq!(reset_from_unit(0.0), CarState::new(-0.6, 0.0));
        let a = mc_reset(&mut ChaCha8Rng::seed_from_u64(7));
        let b = mc_reset(&mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        assert!((-0.6..=-0.4).contains(&a.position));
    }

    #[test]
    fn forward_from_rest_at_bottom() {
        let t = mc_step(CarState::new(-0.5, 0.0), Action::Forward);
        assert_eq!(t.reward, -1.0);
        assert!(!t.terminal);
        assert!((t.next.velocity - 0.000_823_2).abs() < 1e-7);
        assert!((t.next.position - -0.499_176_8).abs() < 1e-7);
    }

    #[test]
    fn left_wall_is_inelastic() {
        let t = mc_step(CarState::new(-1.2, -0.05), Action::Reverse);
        assert_eq!(t.next, CarState::new(-1.2, 0.0));
        assert_eq!(t.reward, -1.0);
        assert!(!t.terminal);
    }

    #[test]
    fn crossing_the_goal_terminates() {
        let t = mc_step(CarState::new(0.49, 0.07), Action::Forward);
        assert!(t.terminal);
        assert_eq!(t.reward, -1.0);
        assert!((t.next.position - 0.56).abs() < 1e-12);
    }

    #[test]
    fn two_cycle_and_absorbing_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cycle = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        for _ in 0..100 {
            assert_eq!(chain_step(ChainState(0), &cycle, &mut rng).unwrap(), ChainState(1));
        }
        let absorbing = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(chain_step(ChainState(2), &absorbing, &mut rng).unwrap(), ChainState(2));
    }

    #[test]
    fn non_stochastic_row_is_rejected() {
        let p = vec![vec![0.5, 0.6], vec![1.0, 0.0]];
        let err = chain_step(ChainState(0), &p, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, Error::NotStochastic { row: 0, .. }));
    }

    #[test]
    fn successor_frequencies_match_row() {
        let p = vec![vec![0.2, 0.5, 0.3], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[chain_step(ChainState(0), &p, &mut rng).unwrap().0] += 1;
        }
        for (j, &c) in counts.iter().enumerate() {
            let q = p[0][j];
            let se = (q * (1.0 - q) / n as f64).sqrt();
            assert!((c as f64 / n as f64 - q).abs() <= 3.0 * se, "successor {j}: {c}");
        }
    }
}
