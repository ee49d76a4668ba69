//! Test problems on the periodic interval `[0, 2π)` with exact oracles.
//!
//! | name                             | equation                                         | oracle |
//! |----------------------------------|--------------------------------------------------|--------|
//! | `zero_operator_1d`               | `du = 0`                                         | `u₀` |
//! | `deterministic_heat_1d`          | `u_t = u_xx`, `u₀ = sin x + sin 3x`              | `e^{−t} sin x + e^{−9t} sin 3x` |
//! | `transport_diffusion_1d`         | `du = ½u_xx dt + u_x dW`, `u₀ = sin x`           | `sin(x + W_t)` |
//! | `additive_noise_manufactured_1d` | `du = (u_xx + f) dt + sin x dW`                  | `sin x (1 + W_t)` |
//! | `variable_coefficient_1d`        | `u_t = (1 + ½ sin x) u_xx`, `u₀ = sin x`         | fine-grid surrogate |
//! | `advection_diffusion_1d`         | `u_t = u_xx + u_x`, forward first difference     | `e^{−t} sin(x + t)` |
//! | `advection_diffusion_central_1d` | same, central first difference                   | `e^{−t} sin(x + t)` |
//!
//! Transport–diffusion is degenerate: `a − ½σ² = 0`. It lies on the boundary
//! of stochastic parabolicity, so rate results for it are experimental
//! evidence rather than a consequence of coercivity-based theory.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::integrator::SemidiscreteProblem;
use crate::lattice::{BoundaryMode, Grid, GridFunction};
use crate::stencil::{Coefficient, ContinuousOperator, Direction, Forcing, OperatorSpec};

type OracleFn = dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync;
type ProfileFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum Oracle {
    /// `(t, x, W_t) ↦ u(t, x)`.
    Exact(Arc<OracleFn>),
    /// Drift-implicit solve on a grid `2^{k+2}` times finer than the
    /// measured one. Only valid for deterministic problems.
    Surrogate,
}

impl Oracle {
    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Exact(_))
    }
}

impl fmt::Debug for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exact(_) => f.write_str("Exact"),
            Self::Surrogate => f.write_str("Surrogate"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Eligibility {
    pub spectral_exact_ok: bool,
    pub degenerate: bool,
    pub deterministic: bool,
}

#[derive(Clone)]
pub struct TestProblem {
    pub name: &'static str,
    pub description: &'static str,
    pub spec: Arc<OperatorSpec>,
    pub continuous: ContinuousOperator,
    pub initial: Arc<ProfileFn>,
    pub default_horizon: f64,
    pub oracle: Oracle,
    pub eligibility: Eligibility,
}

impl fmt::Debug for TestProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestProblem")
            .field("name", &self.name)
            .field("oracle", &self.oracle)
            .field("eligibility", &self.eligibility)
            .finish_non_exhaustive()
    }
}

impl TestProblem {
    /// `n` nodes on `[0, 2π)`, periodic.
    pub fn grid(&self, n: usize) -> Result<Grid> {
        Grid::build(self.spec.dim(), TAU / n as f64, n, &vec![0.0; self.spec.dim()], BoundaryMode::Periodic, 0)
    }

    pub fn semidiscrete(&self, grid: Arc<Grid>, horizon: f64) -> Result<SemidiscreteProblem> {
        let initial = GridFunction::sample(grid, |x| (self.initial)(x));
        SemidiscreteProblem::new(self.spec.clone(), initial, horizon)
    }

    /// Exact solution sampled on `grid`; `None` for surrogate oracles.
    pub fn exact_field(&self, grid: &Arc<Grid>, t: f64, w: &[f64]) -> Option<GridFunction> {
        match &self.oracle {
            Oracle::Exact(f) => Some(GridFunction::sample(grid.clone(), |x| f(t, x, w))),
            Oracle::Surrogate => None,
        }
    }
}

fn e1() -> Direction {
    Direction::axis(1, 0)
}

fn constant_1d(a: f64, b: f64, sigma: Option<f64>) -> ContinuousOperator {
    match sigma {
        Some(s) => ContinuousOperator::constant(1, vec![a], vec![b], 0.0, vec![s], vec![0.0]),
        None => ContinuousOperator::constant(1, vec![a], vec![b], 0.0, vec![], vec![]),
    }
}

pub fn zero_operator_1d() -> TestProblem {
    TestProblem {
        name: "zero_operator_1d",
        description: "du = 0, u0 = sin x + cos 2x",
        spec: Arc::new(OperatorSpec::line(0, true)),
        continuous: constant_1d(0.0, 0.0, None),
        initial: Arc::new(|x| x[0].sin() + (2.0 * x[0]).cos()),
        default_horizon: 1.0,
        oracle: Oracle::Exact(Arc::new(|_, x, _| x[0].sin() + (2.0 * x[0]).cos())),
        eligibility: Eligibility {
            spectral_exact_ok: true,
            degenerate: false,
            deterministic: true,
        },
    }
}

pub fn deterministic_heat_1d() -> TestProblem {
    let spec = OperatorSpec::line(0, true)
        .with_diffusion(&e1(), Coefficient::Constant(1.0))
        .expect("unit direction");
    TestProblem {
        name: "deterministic_heat_1d",
        description: "u_t = u_xx, u0 = sin x + sin 3x",
        spec: Arc::new(spec),
        continuous: constant_1d(1.0, 0.0, None),
        initial: Arc::new(|x| x[0].sin() + (3.0 * x[0]).sin()),
        default_horizon: 0.5,
        oracle: Oracle::Exact(Arc::new(|t, x, _| {
            (-t).exp() * x[0].sin() + (-9.0 * t).exp() * (3.0 * x[0]).sin()
        })),
        eligibility: Eligibility {
            spectral_exact_ok: true,
            degenerate: false,
            deterministic: true,
        },
    }
}

pub fn transport_diffusion_1d() -> TestProblem {
    let spec = OperatorSpec::line(1, true)
        .with_diffusion(&e1(), Coefficient::Constant(0.5))
        .and_then(|s| s.with_sigma(&e1(), 0, Coefficient::Constant(1.0)))
        .expect("unit direction");
    TestProblem {
        name: "transport_diffusion_1d",
        description: "du = 1/2 u_xx dt + u_x dW, u0 = sin x",
        spec: Arc::new(spec),
        continuous: constant_1d(0.5, 0.0, Some(1.0)),
        initial: Arc::new(|x| x[0].sin()),
        default_horizon: 1.0,
        oracle: Oracle::Exact(Arc::new(|_, x, w| (x[0] + w[0]).sin())),
        eligibility: Eligibility {
            spectral_exact_ok: true,
            degenerate: true,
            deterministic: false,
        },
    }
}

pub fn additive_noise_manufactured_1d() -> TestProblem {
    let spec = OperatorSpec::line(1, true)
        .with_diffusion(&e1(), Coefficient::Constant(1.0))
        .expect("unit direction")
        .with_free_drift(Forcing::new(|_, x, w| x[0].sin() * (1.0 + w[0])))
        .with_free_noise(0, Forcing::new(|_, x, _| x[0].sin()))
        .expect("noise index 0");
    TestProblem {
        name: "additive_noise_manufactured_1d",
        description: "du = (u_xx + sin x (1 + W_t)) dt + sin x dW, u0 = sin x",
        spec: Arc::new(spec),
        continuous: ContinuousOperator::constant(1, vec![1.0], vec![0.0], 0.0, vec![0.0], vec![0.0]),
        initial: Arc::new(|x| x[0].sin()),
        default_horizon: 1.0,
        oracle: Oracle::Exact(Arc::new(|_, x, w| x[0].sin() * (1.0 + w[0]))),
        eligibility: Eligibility {
            spectral_exact_ok: false,
            degenerate: false,
            deterministic: false,
        },
    }
}

pub fn variable_coefficient_1d() -> TestProblem {
    let spec = OperatorSpec::line(0, true)
        .with_diffusion(&e1(), Coefficient::stationary(|x| 1.0 + 0.5 * x[0].sin()))
        .expect("unit direction");
    TestProblem {
        name: "variable_coefficient_1d",
        description: "u_t = (1 + 1/2 sin x) u_xx, u0 = sin x (surrogate oracle)",
        spec: Arc::new(spec),
        continuous: ContinuousOperator {
            dim: 1,
            noise_count: 0,
            a_matrix: Arc::new(|_, x| vec![1.0 + 0.5 * x[0].sin()]),
            b_vector: Arc::new(|_, _| vec![0.0]),
            c_scalar: Arc::new(|_, _| 0.0),
            sigma_matrix: Arc::new(|_, _| vec![]),
            nu_vector: Arc::new(|_, _| vec![]),
        },
        initial: Arc::new(|x| x[0].sin()),
        default_horizon: 0.5,
        oracle: Oracle::Surrogate,
        eligibility: Eligibility {
            spectral_exact_ok: false,
            degenerate: false,
            deterministic: true,
        },
    }
}

/// `u_t = u_xx + u_x`; `symmetric` selects central over forward differencing
/// of the advection term.
pub fn advection_diffusion_1d(symmetric: bool) -> TestProblem {
    let spec = OperatorSpec::line(0, symmetric)
        .with_diffusion(&e1(), Coefficient::Constant(1.0))
        .and_then(|s| s.with_drift(&e1(), Coefficient::Constant(1.0)))
        .expect("unit direction");
    TestProblem {
        name: if symmetric {
            "advection_diffusion_central_1d"
        } else {
            "advection_diffusion_1d"
        },
        description: "u_t = u_xx + u_x, u0 = sin x",
        spec: Arc::new(spec),
        continuous: constant_1d(1.0, 1.0, None),
        initial: Arc::new(|x| x[0].sin()),
        default_horizon: 1.0,
        oracle: Oracle::Exact(Arc::new(|t, x, _| (-t).exp() * (x[0] + t).sin())),
        eligibility: Eligibility {
            spectral_exact_ok: true,
            degenerate: false,
            deterministic: true,
        },
    }
}

pub fn all() -> Vec<TestProblem> {
    vec![
        zero_operator_1d(),
        deterministic_heat_1d(),
        transport_diffusion_1d(),
        additive_noise_manufactured_1d(),
        variable_coefficient_1d(),
        advection_diffusion_1d(false),
        advection_diffusion_1d(true),
    ]
}

pub fn names() -> Vec<String> {
    all().iter().map(|p| p.name.to_string()).collect()
}

pub fn by_name(name: &str) -> Result<TestProblem> {
    all()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownProblem {
            name: name.to_string(),
            available: names(),
        })
}
