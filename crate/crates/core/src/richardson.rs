//! Richardson extrapolation over the nested family `h, h/2, …, h/2^k`.
//!
//! If `u^h = u + Σ_{m≥1} h^{s·m} v_m` with `s` the power step (1 in general,
//! 2 for symmetric stencils), the combination `Σ_j c_j u^{h/2^j}` cancels
//! the first `k` error terms exactly when
//!
//! ```text
//! Σ_j c_j q^{j·m} = δ_{m0},   m = 0..k,   q = 2^{-s}.
//! ```
//!
//! This is a Vandermonde system in the nodes `q^j`, whose solution is the
//! Lagrange basis at zero: `c_j = Π_{i≠j} q^i / (q^i − q^j)`. The product is
//! evaluated in exact rational arithmetic and rounded once.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::lattice::{Grid, GridFunction};

pub const MAX_LEVEL: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct ExtrapolationWeights {
    k: usize,
    power_step: u32,
    exact: Vec<BigRational>,
    weights: Vec<f64>,
}

fn node(j: usize, power_step: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << (j as u32 * power_step) as usize)
}

pub fn coefficients(k: usize, power_step: u32) -> Result<ExtrapolationWeights> {
    if k > MAX_LEVEL {
        return Err(Error::LevelOutOfRange(k));
    }
    if !(1..=2).contains(&power_step) {
        return Err(Error::InvalidPowerStep(power_step));
    }
    let nodes: Vec<BigRational> = (0..=k).map(|j| node(j, power_step)).collect();
    let exact: Vec<BigRational> = (0..=k)
        .map(|j| {
            (0..=k)
                .filter(|&i| i != j)
                .fold(BigRational::one(), |acc, i| {
                    acc * &nodes[i] / (&nodes[i] - &nodes[j])
                })
        })
        .collect();
    let mut weights: Vec<f64> = exact.iter().map(|c| c.to_f64().expect("finite weight")).collect();
    let tail: f64 = weights[1..].iter().sum();
    weights[0] = 1.0 - tail;
    Ok(ExtrapolationWeights {
        k,
        power_step,
        exact,
        weights,
    })
}

impl ExtrapolationWeights {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn power_step(&self) -> u32 {
        self.power_step
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exact(&self) -> &[BigRational] {
        &self.exact
    }

    /// `c_0 + Σ_{j≥1} c_j`, evaluated the way `c_0` was constructed.
    pub fn sum(&self) -> f64 {
        self.weights[0] + self.weights[1..].iter().sum::<f64>()
    }

    /// `Σ_j c_j 2^{−j·s·m}` in floating point.
    pub fn moment(&self, m: u32) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(j, c)| c * 2f64.powi(-((j as u32 * self.power_step * m) as i32)))
            .sum()
    }

    /// Order of the leading surviving error term, `s·(k+1)`.
    pub fn target_order(&self) -> u32 {
        self.power_step * (self.k as u32 + 1)
    }
}

impl fmt::Display for ExtrapolationWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, (q, c)) in self.exact.iter().zip(&self.weights).enumerate() {
            writeln!(f, "c_{j} = {q} = {c:.17e}")?;
        }
        Ok(())
    }
}

/// `Σ_j c_j u^{h/2^j}` at the nodes of the coarsest grid.
pub fn extrapolate(solutions: &[GridFunction], weights: &ExtrapolationWeights) -> Result<GridFunction> {
    if solutions.len() != weights.k + 1 {
        return Err(Error::ExtrapolationInput(format!(
            "{} solutions supplied for k = {}",
            solutions.len(),
            weights.k
        )));
    }
    let coarse: Arc<Grid> = solutions[0].grid().clone();
    for (j, pair) in solutions.windows(2).enumerate() {
        if pair[0].grid().nesting_depth(pair[1].grid()) != Some(1) {
            return Err(Error::ExtrapolationInput(format!(
                "solution {} is not on the refinement of solution {j}'s grid",
                j + 1
            )));
        }
    }
    let mut out = GridFunction::zeros(coarse.clone());
    for (u, &c) in solutions.iter().zip(&weights.weights) {
        out.add_scaled(c, &u.restrict(&coarse)?);
    }
    Ok(out)
}
