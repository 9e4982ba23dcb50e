//! Linear TD(0), emphatic TD(0), and accumulating-trace TD(λ).
//!
//! All three share one weight update, θ ← θ + α·m·δ·v, and differ only in
//! the multiplier `m` and the vector `v`:
//!
//! | learner | m       | v                        |
//! |---------|---------|--------------------------|
//! | TD(0)   | ρ       | φ_t                      |
//! | ETD(0)  | ρ·F     | φ_t, with F = ρ_prev·F_prev + 1 |
//! | TD(λ)   | 1       | e = γ_t·λ_t·e + φ_t      |
//!
//! Updates return the TD error on success. The first update that leaves a
//! touched weight non-finite or above the divergence threshold latches the
//! learner into a diverged state; every later call reports the same step.

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::policies::Rho;

pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1e6;

/// One transition as seen by a learner.
#[derive(Clone, Copy, Debug)]
pub struct SampleStep<'a, F: FeatureVector + ?Sized> {
    pub phi: &'a F,
    pub reward: f64,
    pub phi_next: &'a F,
    pub rho: Rho,
    /// Discount applied to the bootstrap term, γ(S_{t+1}).
    pub gamma: f64,
    /// λ(S_t); only TD(λ) reads it.
    pub lambda: f64,
    /// γ(S_t), the discount used to decay the trace on entering S_t.
    pub trace_gamma: f64,
}

impl<'a, F: FeatureVector + ?Sized> SampleStep<'a, F> {
    /// An undiscounted one-step transition, as used on Mountain Car.
    pub fn episodic(phi: &'a F, reward: f64, phi_next: &'a F, rho: Rho) -> Self {
        SampleStep {
            phi,
            reward,
            phi_next,
            rho,
            gamma: 1.0,
            lambda: 0.0,
            trace_gamma: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerState {
    pub theta: Vec<f64>,
    pub alpha: f64,
    /// F of the most recent emphatic update (0 before the first one).
    pub followon: f64,
    pub rho_prev: f64,
    pub trace: Vec<f64>,
    pub divergence_threshold: f64,
    updates: u64,
    diverged_at: Option<u64>,
}

impl LearnerState {
    pub fn new(dimension: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("step size {alpha} must be positive")));
        }
        Ok(LearnerState {
            theta: vec![0.0; dimension],
            alpha,
            followon: 0.0,
            rho_prev: 0.0,
            trace: vec![0.0; dimension],
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
            updates: 0,
            diverged_at: None,
        })
    }

    pub fn with_theta(theta: Vec<f64>, alpha: f64) -> Result<Self> {
        let mut st = Self::new(theta.len(), alpha)?;
        st.theta = theta;
        Ok(st)
    }

    pub fn dimension(&self) -> usize {
        self.theta.len()
    }

    /// Resets the per-episode carry state so the next emphatic update uses F = 1.
    pub fn begin_episode(&mut self) {
        self.followon = 0.0;
        self.rho_prev = 0.0;
        self.trace.iter_mut().for_each(|e| *e = 0.0);
    }

    pub fn diverged_at(&self) -> Option<u64> {
        self.diverged_at
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn predict<F: FeatureVector + ?Sized>(&self, phi: &F) -> Result<f64> {
        crate::features::dot(&self.theta, phi)
    }

    fn check_dims<F: FeatureVector + ?Sized>(&self, x: &SampleStep<'_, F>) -> Result<()> {
        for d in [x.phi.dimension(), x.phi_next.dimension()] {
            if d != self.theta.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.theta.len(),
                    actual: d,
                });
            }
        }
        if let Some(step) = self.diverged_at {
            return Err(Error::Diverged { step });
        }
        Ok(())
    }

    fn td_error<F: FeatureVector + ?Sized>(&self, x: &SampleStep<'_, F>) -> f64 {
        x.reward + x.gamma * x.phi_next.dot_unchecked(&self.theta) - x.phi.dot_unchecked(&self.theta)
    }

    fn emphasized_update<F: FeatureVector + ?Sized>(
        &mut self,
        x: &SampleStep<'_, F>,
        emphasis: f64,
    ) -> Result<f64> {
        self.check_dims(x)?;
        let delta = self.td_error(x);
        let scale = self.alpha * x.rho.0 * emphasis * delta;
        x.phi.add_scaled_to(&mut self.theta, scale);
        let magnitude = x.phi.max_abs_touched(&self.theta);
        self.finish(delta, magnitude)
    }

    fn finish(&mut self, delta: f64, magnitude: f64) -> Result<f64> {
        let step = self.updates;
        self.updates += 1;
        if !delta.is_finite() || !(magnitude <= self.divergence_threshold) {
            self.diverged_at = Some(step);
            return Err(Error::Diverged { step });
        }
        Ok(delta)
    }

    /// θ ← θ + α·ρ·δ·φ
    pub fn td0_update<F: FeatureVector + ?Sized>(&mut self, x: &SampleStep<'_, F>) -> Result<f64> {
        self.emphasized_update(x, 1.0)
    }

    /// F ← ρ_prev·F + 1, then θ ← θ + α·ρ·F·δ·φ.
    pub fn etd0_update<F: FeatureVector + ?Sized>(&mut self, x: &SampleStep<'_, F>) -> Result<f64> {
        self.check_dims(x)?;
        let followon = self.rho_prev * self.followon + 1.0;
        self.followon = followon;
        self.rho_prev = x.rho.0;
        self.emphasized_update(x, followon)
    }

    /// e ← γ_t·λ_t·e + φ, then θ ← θ + α·δ·e.
    pub fn tdlambda_update<F: FeatureVector + ?Sized>(
        &mut self,
        x: &SampleStep<'_, F>,
    ) -> Result<f64> {
        self.check_dims(x)?;
        let decay = x.trace_gamma * x.lambda;
        self.trace.iter_mut().for_each(|e| *e *= decay);
        x.phi.add_scaled_to(&mut self.trace, 1.0);
        let delta = self.td_error(x);
        let scale = self.alpha * delta;
        for (w, e) in self.theta.iter_mut().zip(&self.trace) {
            *w += scale * e;
        }
        let magnitude = self.theta.iter().map(|w| w.abs()).fold(0.0, |a: f64, w| {
            if w.is_nan() { f64::NAN } else { a.max(w) }
        });
        self.finish(delta, magnitude)
    }
}

/// Closed form of the followon trace, Σ_{k=0..t} Π_{j=k..t−1} ρ_j.
pub fn followon_closed_form(rhos: &[f64], t: usize) -> f64 {
    (0..=t)
        .map(|k| rhos[k..t].iter().product::<f64>())
        .sum()
}
