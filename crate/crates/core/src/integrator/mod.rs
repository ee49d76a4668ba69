//! Time integration of the semidiscrete system
//! `du = (L_h u + f) dt + Σ_ρ (M_h^ρ u + g^ρ) dW^ρ`, Itô sense, one Wiener
//! path at a time.

mod linsolve;
pub mod spectral;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Grid, GridFunction};
use crate::noise::WienerPath;
use crate::stencil::{apply_l, apply_m, l_diagonal, OperatorSpec};

pub use linsolve::bicgstab;
pub use spectral::solve_spectral_exact;

/// Solutions whose magnitude exceeds this are treated as blown up.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

const SOLVER_TOLERANCE: f64 = 1e-12;
const ACCEPTED_RESIDUAL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SemidiscreteProblem {
    pub spec: Arc<OperatorSpec>,
    pub grid: Arc<Grid>,
    pub initial: GridFunction,
    pub horizon: f64,
}

impl SemidiscreteProblem {
    pub fn new(spec: Arc<OperatorSpec>, initial: GridFunction, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        let grid = initial.grid().clone();
        if grid.dim() != spec.dim() {
            return Err(Error::Config(format!(
                "operator is {}-dimensional but the grid is {}-dimensional",
                spec.dim(),
                grid.dim()
            )));
        }
        if let Some(node) = initial.first_non_finite() {
            return Err(Error::NonFinite {
                what: "initial condition".into(),
                node,
                coords: grid.coordinate(node),
            });
        }
        Ok(Self {
            spec,
            grid,
            initial,
            horizon,
        })
    }

    fn check_path(&self, path: &WienerPath) -> Result<()> {
        if path.noise_count() != self.spec.noise_count() {
            return Err(Error::Config(format!(
                "path drives {} processes, operator expects {}",
                path.noise_count(),
                self.spec.noise_count()
            )));
        }
        let end = path.horizon();
        if (end - self.horizon).abs() > 1e-12 * self.horizon {
            return Err(Error::InvalidTimeGrid(format!(
                "path ends at {end}, problem horizon is {}",
                self.horizon
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Euler–Maruyama.
    Explicit,
    /// Implicit in `L_h`, explicit in the noise.
    DriftImplicit,
}

#[derive(Clone, Debug)]
pub struct PathSolution {
    pub terminal: GridFunction,
    /// Time steps taken; zero for the exact spectral propagator.
    pub steps: usize,
    /// Largest `|u|` seen over the run.
    pub max_abs: f64,
}

fn check_finite(u: &GridFunction, step: usize) -> Result<()> {
    if let Some(node) = u.first_non_finite() {
        return Err(Error::NonFinite {
            what: format!("solution at step {step}"),
            node,
            coords: u.grid().coordinate(node),
        });
    }
    Ok(())
}

/// Adds `Σ_ρ (M^ρ u + g^ρ(t)) ΔW^ρ` to `out`.
fn add_noise(
    problem: &SemidiscreteProblem,
    u: &GridFunction,
    t: f64,
    dw: &[f64],
    w: &[f64],
    out: &mut GridFunction,
) -> Result<()> {
    let spec = &problem.spec;
    for (rho, &dw_rho) in dw.iter().enumerate().take(spec.noise_count()) {
        if dw_rho == 0.0 {
            continue;
        }
        let mut diffusion = apply_m(spec, rho, t, u)?;
        if let Some(g) = spec.free_noise(rho) {
            diffusion.add_scaled(1.0, &g.sample(&problem.grid, t, w)?);
        }
        out.add_scaled(dw_rho, &diffusion);
    }
    Ok(())
}

/// One Euler–Maruyama step from `t` to `t + tau`. `w` is `W(t)`.
pub fn step_euler_maruyama(
    problem: &SemidiscreteProblem,
    u: &GridFunction,
    t: f64,
    tau: f64,
    dw: &[f64],
    w: &[f64],
) -> Result<GridFunction> {
    if !(tau > 0.0) {
        return Err(Error::InvalidTimeGrid(format!("time step must be positive, got {tau}")));
    }
    let spec = &problem.spec;
    let mut out = u.clone();
    let mut drift = apply_l(spec, t, u)?;
    if let Some(f) = spec.free_drift() {
        drift.add_scaled(1.0, &f.sample(&problem.grid, t, w)?);
    }
    out.add_scaled(tau, &drift);
    add_noise(problem, u, t, dw, w, &mut out)?;
    Ok(out)
}

/// One drift-implicit step: solves
/// `(I − τ L_h(t+τ)) u⁺ = u + τ f(t+τ) + Σ_ρ (M_h^ρ u + g^ρ(t)) ΔW^ρ`.
pub fn step_drift_implicit(
    problem: &SemidiscreteProblem,
    u: &GridFunction,
    t: f64,
    tau: f64,
    dw: &[f64],
    w: &[f64],
) -> Result<GridFunction> {
    if !(tau > 0.0) {
        return Err(Error::InvalidTimeGrid(format!("time step must be positive, got {tau}")));
    }
    let spec = &problem.spec;
    let grid = &problem.grid;
    let t_next = t + tau;
    let mut rhs = u.clone();
    if let Some(f) = spec.free_drift() {
        let w_next: Vec<f64> = w.iter().zip(dw).map(|(a, b)| a + b).collect();
        rhs.add_scaled(tau, &f.sample(grid, t_next, &w_next)?);
    }
    add_noise(problem, u, t, dw, w, &mut rhs)?;

    let diagonal: Vec<f64> = l_diagonal(spec, grid, t_next)?
        .into_iter()
        .map(|d| 1.0 - tau * d)
        .collect();
    let mut apply = |x: &[f64], out: &mut [f64]| -> Result<()> {
        let v = GridFunction::from_values(grid.clone(), x.to_vec())?;
        let lv = apply_l(spec, t_next, &v)?;
        for ((o, xi), li) in out.iter_mut().zip(x).zip(lv.values()) {
            *o = xi - tau * li;
        }
        Ok(())
    };
    let mut x = rhs.values().to_vec();
    let max_iter = 10 * grid.len() + 200;
    bicgstab(&mut apply, &diagonal, rhs.values(), &mut x, SOLVER_TOLERANCE, max_iter)?;

    let mut check = vec![0.0; x.len()];
    apply(&x, &mut check)?;
    let residual = rhs
        .values()
        .iter()
        .zip(&check)
        .map(|(b, a)| (b - a).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = rhs.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    if residual > ACCEPTED_RESIDUAL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SolverDivergence {
            iterations: max_iter,
            residual: residual / scale.max(f64::MIN_POSITIVE),
        });
    }
    GridFunction::from_values(grid.clone(), x)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CflReport {
    pub ratio: f64,
    pub pass: bool,
}

/// Explicit-stability heuristic `τ·(2/h²)·Σ_λ max|a_λ|·|λ|² ≤ 1`, with the
/// diffusion coefficients sampled at `t = 0`.
pub fn cfl_guard(problem: &SemidiscreteProblem, tau: f64) -> CflReport {
    let spec = &problem.spec;
    let grid = &problem.grid;
    let h = grid.spacing();
    let mut x = vec![0.0; grid.dim()];
    let mut total = 0.0;
    for (i, direction) in spec.directions().iter().enumerate() {
        let a = spec.diffusion(i);
        let max_a = match a.as_constant() {
            Some(v) => v.abs(),
            None => (0..grid.len())
                .map(|node| {
                    grid.coordinate_into(node, &mut x);
                    a.eval(0.0, &x).abs()
                })
                .fold(0.0, f64::max),
        };
        total += max_a * direction.norm_squared() as f64;
    }
    let ratio = tau * 2.0 / (h * h) * total;
    CflReport {
        ratio,
        pass: ratio <= 1.0,
    }
}

/// Step `problem` across the whole time grid of `path`.
pub fn solve_path(problem: &SemidiscreteProblem, scheme: Scheme, path: &WienerPath) -> Result<PathSolution> {
    problem.check_path(path)?;
    let times = path.times();
    if scheme == Scheme::Explicit {
        let tau_max = times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let report = cfl_guard(problem, tau_max);
        if !report.pass {
            return Err(Error::Cfl { ratio: report.ratio });
        }
    }
    let mut u = problem.initial.clone();
    let mut w = vec![0.0; path.noise_count()];
    let mut max_abs = u.max_abs();
    for step in 0..path.steps() {
        let t = times[step];
        let tau = times[step + 1] - t;
        let dw = path.increment(step);
        u = match scheme {
            Scheme::Explicit => step_euler_maruyama(problem, &u, t, tau, dw, &w)?,
            Scheme::DriftImplicit => step_drift_implicit(problem, &u, t, tau, dw, &w)?,
        };
        check_finite(&u, step + 1)?;
        let m = u.max_abs();
        if m > BLOW_UP_THRESHOLD {
            return Err(Error::BlowUp { step: step + 1, max_abs: m });
        }
        max_abs = max_abs.max(m);
        for (acc, d) in w.iter_mut().zip(dw) {
            *acc += d;
        }
    }
    Ok(PathSolution {
        terminal: u,
        steps: path.steps(),
        max_abs,
    })
}
