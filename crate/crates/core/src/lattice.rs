//! Uniform lattices over a truncated domain and fields living on them.
//!
//! A [`Grid`] is the lattice `origin + h·Z^d` cut down to `N_1 × … × N_d`
//! nodes. Finite differences along a direction `λ ∈ Z^d` reach the nodes
//! `x ± h·λ`, so the lattice generated by a direction set is always a
//! sublattice of `h·Z^d`; storing the full `h·Z^d` block covers every
//! stencil the operators can build.
//!
//! The whole-space setting is truncated in one of two ways:
//!
//! * [`BoundaryMode::Periodic`]: a torus, indices wrap. Periodic test data
//!   incurs no truncation error at all.
//! * [`BoundaryMode::ZeroPadded`]: reads outside the box return zero. Errors
//!   are only meaningful on a measurement box kept `margin` nodes away from
//!   the edges.
//!
//! Refinement halves the spacing exactly (a binary exponent shift), so every
//! coarse coordinate `origin + i·h` equals the fine coordinate
//! `origin + 2i·(h/2)` bit for bit.

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    Periodic,
    ZeroPadded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    spacing: f64,
    extent: Vec<usize>,
    origin: Vec<f64>,
    mode: BoundaryMode,
    margin: usize,
    strides: Vec<usize>,
}

impl Grid {
    /// Same node count on every axis.
    pub fn build(
        dim: usize,
        spacing: f64,
        extent: usize,
        origin: &[f64],
        mode: BoundaryMode,
        margin: usize,
    ) -> Result<Self> {
        Self::with_extents(spacing, vec![extent; dim], origin.to_vec(), mode, margin)
    }

    pub fn with_extents(
        spacing: f64,
        extent: Vec<usize>,
        origin: Vec<f64>,
        mode: BoundaryMode,
        margin: usize,
    ) -> Result<Self> {
        let dim = extent.len();
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be positive".into()));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive and finite, got {spacing}"
            )));
        }
        if origin.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "origin has {} components for a {dim}-dimensional grid",
                origin.len()
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        if let Some(n) = extent.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidGrid(format!(
                "every axis needs at least 2 nodes, got {n}"
            )));
        }
        if let Some(n) = extent.iter().find(|&&n| 2 * margin >= n) {
            return Err(Error::InvalidGrid(format!(
                "margin {margin} leaves no measurement nodes on an axis of {n} nodes"
            )));
        }
        if mode == BoundaryMode::ZeroPadded && margin == 0 {
            return Err(Error::InvalidGrid(
                "zero-padded mode requires an interior measurement box (margin >= 1)".into(),
            ));
        }
        let mut strides = vec![1; dim];
        for axis in (0..dim.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * extent[axis + 1];
        }
        Ok(Self {
            spacing,
            extent,
            origin,
            mode,
            margin,
            strides,
        })
    }

    pub fn dim(&self) -> usize {
        self.extent.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn mode(&self) -> BoundaryMode {
        self.mode
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Inclusive index range `(lo, hi)` of the measurement box on `axis`.
    pub fn measurement_range(&self, axis: usize) -> (usize, usize) {
        (self.margin, self.extent[axis] - 1 - self.margin)
    }

    pub fn in_measurement_box(&self, index: &[usize]) -> bool {
        index
            .iter()
            .enumerate()
            .all(|(axis, &i)| {
                let (lo, hi) = self.measurement_range(axis);
                (lo..=hi).contains(&i)
            })
    }

    /// Flat indices of all nodes in the measurement box, in storage order.
    pub fn measurement_nodes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut index = vec![0; self.dim()];
        for flat in 0..self.len() {
            self.unflatten_into(flat, &mut index);
            if self.in_measurement_box(&index) {
                out.push(flat);
            }
        }
        out
    }

    pub fn flatten(&self, index: &[usize]) -> usize {
        index.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn unflatten(&self, flat: usize) -> Vec<usize> {
        let mut index = vec![0; self.dim()];
        self.unflatten_into(flat, &mut index);
        index
    }

    pub fn unflatten_into(&self, mut flat: usize, index: &mut [usize]) {
        for (axis, stride) in self.strides.iter().enumerate() {
            index[axis] = flat / stride;
            flat %= stride;
        }
    }

    pub fn coordinate(&self, flat: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.coordinate_into(flat, &mut x);
        x
    }

    pub fn coordinate_into(&self, mut flat: usize, x: &mut [f64]) {
        for (axis, stride) in self.strides.iter().enumerate() {
            let i = flat / stride;
            flat %= stride;
            x[axis] = self.origin[axis] + i as f64 * self.spacing;
        }
    }

    /// Halve the spacing so every node of `self` is a node of the result.
    pub fn refine(&self) -> Grid {
        let extent = self
            .extent
            .iter()
            .map(|&n| match self.mode {
                BoundaryMode::Periodic => 2 * n,
                BoundaryMode::ZeroPadded => 2 * n - 1,
            })
            .collect();
        Grid::with_extents(
            self.spacing * 0.5,
            extent,
            self.origin.clone(),
            self.mode,
            2 * self.margin,
        )
        .expect("refinement of a valid grid is valid")
    }

    /// If `fine` arises from `self` by `levels` refinements, return `levels`.
    pub fn nesting_depth(&self, fine: &Grid) -> Option<u32> {
        if self.mode != fine.mode || self.origin != fine.origin || self.dim() != fine.dim() {
            return None;
        }
        let mut candidate = self.clone();
        for levels in 0..=62u32 {
            if candidate.spacing == fine.spacing {
                return (candidate.extent == fine.extent && candidate.margin == fine.margin)
                    .then_some(levels);
            }
            if candidate.spacing < fine.spacing {
                return None;
            }
            candidate = candidate.refine();
        }
        None
    }

    /// Flat fine-grid index of each coarse node, for a nested pair.
    pub fn injection_map(&self, fine: &Grid) -> Result<Vec<usize>> {
        let levels = self.nesting_depth(fine).ok_or_else(|| {
            Error::NotNested(format!(
                "coarse h = {}, N = {:?}; fine h = {}, N = {:?}",
                self.spacing, self.extent, fine.spacing, fine.extent
            ))
        })?;
        let factor = 1usize << levels;
        let mut index = vec![0; self.dim()];
        Ok((0..self.len())
            .map(|flat| {
                self.unflatten_into(flat, &mut index);
                index
                    .iter()
                    .zip(fine.strides())
                    .map(|(i, s)| i * factor * s)
                    .sum()
            })
            .collect())
    }
}

/// Values a grid function may carry.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + 'static
{
    fn is_finite(&self) -> bool;
    fn modulus(&self) -> f64;
}

impl Scalar for f64 {
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn modulus(&self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    fn modulus(&self) -> f64 {
        self.norm()
    }
}

/// A field over the nodes of a grid, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T: Scalar = f64> {
    grid: Arc<Grid>,
    values: Vec<T>,
}

impl<T: Scalar> GridFunction<T> {
    pub fn from_values(grid: Arc<Grid>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<Grid>, value: T) -> Self {
        let values = vec![value; grid.len()];
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn sample(grid: Arc<Grid>, mut f: impl FnMut(&[f64]) -> T) -> Self {
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|flat| {
                grid.coordinate_into(flat, &mut x);
                f(&x)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Node-wise `f(self, other)`; both must share the same grid geometry.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self += alpha · other`
    pub fn add_scaled(&mut self, alpha: f64, other: &Self) {
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a = *a + b * alpha;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }

    /// First node holding a NaN or infinite value.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }

    /// Values at coarse nodes (injection, no averaging).
    pub fn restrict(&self, coarse: &Arc<Grid>) -> Result<Self> {
        let map = coarse.injection_map(&self.grid)?;
        Ok(Self {
            grid: coarse.clone(),
            values: map.iter().map(|&i| self.values[i]).collect(),
        })
    }

    /// `g(x) = f(x + steps·h·direction)`, wrapping on periodic grids and
    /// reading zero outside zero-padded ones.
    pub fn shift(&self, direction: &[i64], steps: i64) -> Self {
        let grid = &self.grid;
        let dim = grid.dim();
        assert_eq!(direction.len(), dim, "direction dimension mismatch");
        let offset: Vec<i64> = direction.iter().map(|d| d * steps).collect();
        let mut values = vec![T::zero(); self.values.len()];
        let mut index = vec![0usize; dim];
        'nodes: for (flat, out) in values.iter_mut().enumerate() {
            grid.unflatten_into(flat, &mut index);
            let mut source = 0usize;
            for axis in 0..dim {
                let n = grid.extent[axis] as i64;
                let mut j = index[axis] as i64 + offset[axis];
                match grid.mode {
                    BoundaryMode::Periodic => j = j.rem_euclid(n),
                    BoundaryMode::ZeroPadded => {
                        if j < 0 || j >= n {
                            continue 'nodes;
                        }
                    }
                }
                source += j as usize * grid.strides[axis];
            }
            *out = self.values[source];
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }
}

impl GridFunction<f64> {
    /// Largest `|self − other|` over the measurement box of `self`'s grid.
    pub fn sup_distance_on_box(&self, other: &Self) -> f64 {
        self.grid
            .measurement_nodes()
            .into_iter()
            .map(|i| (self.values[i] - other.values[i]).abs())
            .fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}
