//! Grid tile coding over the Mountain Car state box.
//!
//! Each tiling is a regular grid with `tiles_per_dim + 1` cells per
//! dimension. Tiling `i` is shifted by `-i / tilings` of a tile width in
//! both dimensions, so the padded cell keeps every shifted grid covering the
//! whole box. Feature index layout is `tiling * cells² + cx * cells + cy`,
//! which makes active indices strictly increasing.

use smallvec::SmallVec;

use crate::env::{CarState, MAX_POSITION, MAX_SPEED, MIN_POSITION};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TileCodingConfig {
    pub tilings: usize,
    pub tiles_per_dim: usize,
    pub position_bounds: (f64, f64),
    pub velocity_bounds: (f64, f64),
}

impl Default for TileCodingConfig {
    fn default() -> Self {
        TileCodingConfig {
            tilings: 5,
            tiles_per_dim: 4,
            position_bounds: (MIN_POSITION, MAX_POSITION),
            velocity_bounds: (-MAX_SPEED, MAX_SPEED),
        }
    }
}

impl TileCodingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tilings == 0 || self.tiles_per_dim == 0 {
            return Err(Error::Config("tile coding needs at least one tiling and one tile".into()));
        }
        for (lo, hi) in [self.position_bounds, self.velocity_bounds] {
            if !(lo < hi) {
                return Err(Error::Config(format!("empty bound [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn cells_per_dim(&self) -> usize {
        self.tiles_per_dim + 1
    }

    pub fn dimension(&self) -> usize {
        self.tilings * self.cells_per_dim() * self.cells_per_dim()
    }

    pub fn tile_widths(&self) -> (f64, f64) {
        let n = self.tiles_per_dim as f64;
        (
            (self.position_bounds.1 - self.position_bounds.0) / n,
            (self.velocity_bounds.1 - self.velocity_bounds.0) / n,
        )
    }

    /// Offset of tiling `i` as a fraction of one tile width.
    pub fn offset_fraction(&self, tiling: usize) -> f64 {
        tiling as f64 / self.tilings as f64
    }

    /// Grid coordinates of `s` in tiling `i`.
    pub fn tile_coords(&self, tiling: usize, s: CarState) -> (usize, usize) {
        let (wp, wv) = self.tile_widths();
        let off = self.offset_fraction(tiling);
        let last = self.tiles_per_dim;
        let cx = ((s.position - self.position_bounds.0) / wp + off).floor() as usize;
        let cy = ((s.velocity - self.velocity_bounds.0) / wv + off).floor() as usize;
        (cx.min(last), cy.min(last))
    }

    fn contains(&self, s: CarState) -> bool {
        (self.position_bounds.0..=self.position_bounds.1).contains(&s.position)
            && (self.velocity_bounds.0..=self.velocity_bounds.1).contains(&s.velocity)
    }

    pub fn encode(&self, s: CarState) -> Result<SparseFeatures> {
        if !self.contains(s) {
            return Err(Error::OutOfBounds {
                position: s.position,
                velocity: s.velocity,
            });
        }
        let cells = self.cells_per_dim();
        let block = cells * cells;
        let active = (0..self.tilings)
            .map(|i| {
                let (cx, cy) = self.tile_coords(i, s);
                (i * block + cx * cells + cy) as u32
            })
            .collect();
        Ok(SparseFeatures {
            active,
            dimension: self.dimension(),
        })
    }

    /// Features of the terminal state: the zero vector.
    pub fn terminal(&self) -> SparseFeatures {
        SparseFeatures::empty(self.dimension())
    }
}

/// A binary feature vector stored as its sorted active indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseFeatures {
    active: SmallVec<[u32; 8]>,
    dimension: usize,
}

impl SparseFeatures {
    pub fn new(mut active: Vec<u32>, dimension: usize) -> Result<Self> {
        active.sort_unstable();
        active.dedup();
        if let Some(&max) = active.last() {
            if max as usize >= dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    actual: max as usize + 1,
                });
            }
        }
        Ok(SparseFeatures {
            active: active.into_iter().collect(),
            dimension,
        })
    }

    pub fn empty(dimension: usize) -> Self {
        SparseFeatures {
            active: SmallVec::new(),
            dimension,
        }
    }

    pub fn active(&self) -> &[u32] {
        &self.active
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        for &i in &self.active {
            v[i as usize] = 1.0;
        }
        v
    }
}

/// A feature vector the linear learners can consume.
pub trait FeatureVector {
    fn dimension(&self) -> usize;

    /// θᵀφ, without dimension checking.
    fn dot_unchecked(&self, theta: &[f64]) -> f64;

    /// target += scale · φ
    fn add_scaled_to(&self, target: &mut [f64], scale: f64);

    /// Largest |target[i]| over the coordinates φ touches.
    fn max_abs_touched(&self, target: &[f64]) -> f64;
}

impl FeatureVector for SparseFeatures {
    fn dimension(&self) -> usize {
        self.dimension
    }

    #[inline]
    fn dot_unchecked(&self, theta: &[f64]) -> f64 {
        self.active.iter().map(|&i| theta[i as usize]).sum()
    }

    #[inline]
    fn add_scaled_to(&self, target: &mut [f64], scale: f64) {
        for &i in &self.active {
            target[i as usize] += scale;
        }
    }

    fn max_abs_touched(&self, target: &[f64]) -> f64 {
        self.active
            .iter()
            .map(|&i| target[i as usize].abs())
            .fold(0.0, nan_max)
    }
}

impl FeatureVector for [f64] {
    fn dimension(&self) -> usize {
        self.len()
    }

    fn dot_unchecked(&self, theta: &[f64]) -> f64 {
        self.iter().zip(theta).map(|(a, b)| a * b).sum()
    }

    fn add_scaled_to(&self, target: &mut [f64], scale: f64) {
        for (t, x) in target.iter_mut().zip(self) {
            *t += scale * x;
        }
    }

    fn max_abs_touched(&self, target: &[f64]) -> f64 {
        target.iter().map(|t| t.abs()).fold(0.0, nan_max)
    }
}

fn nan_max(acc: f64, x: f64) -> f64 {
    if x.is_nan() || acc.is_nan() {
        f64::NAN
    } else {
        acc.max(x)
    }
}

/// θᵀφ with a dimension check.
pub fn dot<F: FeatureVector + ?Sized>(theta: &[f64], phi: &F) -> Result<f64> {
    if theta.len() != phi.dimension() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            actual: phi.dimension(),
        });
    }
    Ok(phi.dot_unchecked(theta))
}
