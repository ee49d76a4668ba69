//! Finite-difference operators along lattice directions and the discrete
//! drift and noise operators they assemble into.
//!
//! For a direction `λ ∈ Z^d \ {0}` and spacing `h`:
//!
//! ```text
//! δ⁺u(x) = (u(x + hλ) − u(x)) / h
//! δ⁻u(x) = (u(x) − u(x − hλ)) / h
//! δ⁰u    = (δ⁺u + δ⁻u) / 2
//! Δu     = δ⁺δ⁻u = (u(x + hλ) − 2u(x) + u(x − hλ)) / h²
//! ```
//!
//! `δ_λ` approximates the directional derivative `λ·∇` and `Δ_λ` approximates
//! `(λ·∇)²`. The discrete operators are
//!
//! ```text
//! L_h u = Σ_λ a_λ Δ_λ u + Σ_λ b_λ D_λ u + c u
//! M_h^ρ u = Σ_λ σ_λ^ρ D_λ u + ν^ρ u
//! ```
//!
//! with `D_λ = δ⁰` in symmetric mode and `D_λ = δ⁺` otherwise. They are
//! consistent with `L = a^{ij}∂_i∂_j + b^i∂_i + c` and `M^ρ = σ^{iρ}∂_i + ν^ρ`
//! when `a = Σ_λ a_λ λλᵀ`, `b = Σ_λ b_λ λ` and `σ^ρ = Σ_λ σ_λ^ρ λ`.
//!
//! In symmetric mode every stencil is invariant under `λ → −λ`, so the
//! Taylor expansion of the local truncation error only contains even powers
//! of `h`; the grid solution then expands in powers of `h²`. The forward
//! mode produces all powers of `h`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lattice::{Grid, GridFunction, Scalar};

/// Nonzero integer lattice vector, in units of grid steps.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Direction(Vec<i64>);

impl Direction {
    pub fn new(components: Vec<i64>) -> Result<Self> {
        if components.is_empty() || components.iter().all(|&c| c == 0) {
            return Err(Error::InvalidDirection(format!(
                "direction must be a nonzero vector, got {components:?}"
            )));
        }
        Ok(Self(components))
    }

    /// Unit vector along `axis`.
    pub fn axis(dim: usize, axis: usize) -> Self {
        let mut c = vec![0; dim];
        c[axis] = 1;
        Self(c)
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_squared(&self) -> i64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|c| -c).collect())
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

pub fn diff_forward<T: Scalar>(f: &GridFunction<T>, direction: &Direction) -> GridFunction<T> {
    let inv_h = 1.0 / f.grid().spacing();
    f.shift(direction.components(), 1)
        .zip_with(f, |up, u| (up - u) * inv_h)
}

pub fn diff_backward<T: Scalar>(f: &GridFunction<T>, direction: &Direction) -> GridFunction<T> {
    let inv_h = 1.0 / f.grid().spacing();
    f.zip_with(&f.shift(direction.components(), -1), |u, down| {
        (u - down) * inv_h
    })
}

pub fn diff_central<T: Scalar>(f: &GridFunction<T>, direction: &Direction) -> GridFunction<T> {
    let half_inv_h = 0.5 / f.grid().spacing();
    f.shift(direction.components(), 1)
        .zip_with(&f.shift(direction.components(), -1), |up, down| {
            (up - down) * half_inv_h
        })
}

pub fn diff_second<T: Scalar>(f: &GridFunction<T>, direction: &Direction) -> GridFunction<T> {
    let h = f.grid().spacing();
    let inv_h2 = 1.0 / (h * h);
    let up = f.shift(direction.components(), 1);
    let down = f.shift(direction.components(), -1);
    let mut out = up.zip_with(&down, |a, b| a + b);
    for (o, &u) in out.values_mut().iter_mut().zip(f.values()) {
        *o = (*o - u * 2.0) * inv_h2;
    }
    out
}

type SpaceTimeFn = dyn Fn(f64, &[f64]) -> f64 + Send + Sync;
type ForcingFn = dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync;

/// A coefficient field `(t, x) ↦ value`.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Field {
        f: Arc<SpaceTimeFn>,
        time_independent: bool,
    },
}

impl Coefficient {
    pub fn zero() -> Self {
        Self::Constant(0.0)
    }

    pub fn field(f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::Field {
            f: Arc::new(f),
            time_independent: false,
        }
    }

    pub fn stationary(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::Field {
            f: Arc::new(move |_, x| f(x)),
            time_independent: true,
        }
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::Field { f, .. } => f(t, x),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Self::Constant(v) => Some(*v),
            Self::Field { .. } => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    pub fn is_time_independent(&self) -> bool {
        match self {
            Self::Constant(_) => true,
            Self::Field {
                time_independent, ..
            } => *time_independent,
        }
    }

    fn sample(&self, grid: &Grid, t: f64, what: &dyn Fn() -> String) -> Result<Sampled> {
        match self {
            Self::Constant(v) => {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        what: what(),
                        node: 0,
                        coords: grid.coordinate(0),
                    });
                }
                Ok(Sampled::Constant(*v))
            }
            Self::Field { f, .. } => {
                let mut x = vec![0.0; grid.dim()];
                let mut out = Vec::with_capacity(grid.len());
                for node in 0..grid.len() {
                    grid.coordinate_into(node, &mut x);
                    let v = f(t, &x);
                    if !v.is_finite() {
                        return Err(Error::NonFinite {
                            what: what(),
                            node,
                            coords: x,
                        });
                    }
                    out.push(v);
                }
                Ok(Sampled::Nodes(out))
            }
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(v) => write!(f, "Constant({v})"),
            Self::Field {
                time_independent, ..
            } => write!(f, "Field {{ time_independent: {time_independent} }}"),
        }
    }
}

enum Sampled {
    Constant(f64),
    Nodes(Vec<f64>),
}

impl Sampled {
    fn at(&self, node: usize) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::Nodes(v) => v[node],
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Self::Constant(v) if *v == 0.0)
    }
}

/// A free term `(t, x, W_t) ↦ value`. The current Wiener value lets a
/// forcing depend on the driving path, as manufactured solutions require.
#[derive(Clone)]
pub struct Forcing(Arc<ForcingFn>);

impl Forcing {
    pub fn new(f: impl Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn eval(&self, t: f64, x: &[f64], w: &[f64]) -> f64 {
        (self.0)(t, x, w)
    }

    pub fn sample(&self, grid: &Arc<Grid>, t: f64, w: &[f64]) -> Result<GridFunction> {
        let out = GridFunction::sample(grid.clone(), |x| self.eval(t, x, w));
        if let Some(node) = out.first_non_finite() {
            return Err(Error::NonFinite {
                what: "free term".into(),
                node,
                coords: grid.coordinate(node),
            });
        }
        Ok(out)
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Forcing(..)")
    }
}

#[derive(Clone, Debug)]
struct NoiseTerm {
    sigma: Vec<Coefficient>,
    nu: Coefficient,
    free: Option<Forcing>,
}

/// Directional coefficients defining `L_h` and the `M_h^ρ`.
#[derive(Clone, Debug)]
pub struct OperatorSpec {
    dim: usize,
    directions: Vec<Direction>,
    diffusion: Vec<Coefficient>,
    drift: Vec<Coefficient>,
    reaction: Coefficient,
    noise: Vec<NoiseTerm>,
    free_drift: Option<Forcing>,
    symmetric: bool,
}

impl OperatorSpec {
    pub fn new(dim: usize, directions: Vec<Direction>, noise_count: usize, symmetric: bool) -> Result<Self> {
        if let Some(bad) = directions.iter().find(|d| d.dim() != dim) {
            return Err(Error::InvalidDirection(format!(
                "direction {bad} does not have {dim} components"
            )));
        }
        for (i, d) in directions.iter().enumerate() {
            if directions[..i].contains(d) {
                return Err(Error::InvalidDirection(format!("direction {d} listed twice")));
            }
        }
        let n = directions.len();
        Ok(Self {
            dim,
            directions,
            diffusion: vec![Coefficient::zero(); n],
            drift: vec![Coefficient::zero(); n],
            reaction: Coefficient::zero(),
            noise: (0..noise_count)
                .map(|_| NoiseTerm {
                    sigma: vec![Coefficient::zero(); n],
                    nu: Coefficient::zero(),
                    free: None,
                })
                .collect(),
            free_drift: None,
            symmetric,
        })
    }

    /// One-dimensional spec on the single direction `+1`.
    pub fn line(noise_count: usize, symmetric: bool) -> Self {
        Self::new(1, vec![Direction::axis(1, 0)], noise_count, symmetric)
            .expect("unit direction is valid")
    }

    fn index_of(&self, direction: &Direction) -> Result<usize> {
        self.directions
            .iter()
            .position(|d| d == direction)
            .ok_or_else(|| Error::UnknownDirection(direction.components().to_vec()))
    }

    fn check_noise(&self, rho: usize) -> Result<()> {
        if rho >= self.noise.len() {
            return Err(Error::NoiseIndex {
                index: rho,
                count: self.noise.len(),
            });
        }
        Ok(())
    }

    pub fn with_diffusion(mut self, direction: &Direction, a: Coefficient) -> Result<Self> {
        let i = self.index_of(direction)?;
        self.diffusion[i] = a;
        Ok(self)
    }

    pub fn with_drift(mut self, direction: &Direction, b: Coefficient) -> Result<Self> {
        let i = self.index_of(direction)?;
        self.drift[i] = b;
        Ok(self)
    }

    pub fn with_reaction(mut self, c: Coefficient) -> Self {
        self.reaction = c;
        self
    }

    pub fn with_sigma(mut self, direction: &Direction, rho: usize, sigma: Coefficient) -> Result<Self> {
        self.check_noise(rho)?;
        let i = self.index_of(direction)?;
        self.noise[rho].sigma[i] = sigma;
        Ok(self)
    }

    pub fn with_nu(mut self, rho: usize, nu: Coefficient) -> Result<Self> {
        self.check_noise(rho)?;
        self.noise[rho].nu = nu;
        Ok(self)
    }

    pub fn with_free_drift(mut self, f: Forcing) -> Self {
        self.free_drift = Some(f);
        self
    }

    pub fn with_free_noise(mut self, rho: usize, g: Forcing) -> Result<Self> {
        self.check_noise(rho)?;
        self.noise[rho].free = Some(g);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn noise_count(&self) -> usize {
        self.noise.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn diffusion(&self, i: usize) -> &Coefficient {
        &self.diffusion[i]
    }

    pub fn drift(&self, i: usize) -> &Coefficient {
        &self.drift[i]
    }

    pub fn reaction(&self) -> &Coefficient {
        &self.reaction
    }

    pub fn sigma(&self, rho: usize, i: usize) -> &Coefficient {
        &self.noise[rho].sigma[i]
    }

    pub fn nu(&self, rho: usize) -> &Coefficient {
        &self.noise[rho].nu
    }

    pub fn free_drift(&self) -> Option<&Forcing> {
        self.free_drift.as_ref()
    }

    pub fn free_noise(&self, rho: usize) -> Option<&Forcing> {
        self.noise[rho].free.as_ref()
    }

    pub fn has_free_terms(&self) -> bool {
        self.free_drift.is_some() || self.noise.iter().any(|n| n.free.is_some())
    }

    pub fn is_deterministic(&self) -> bool {
        self.noise.iter().all(|n| {
            n.free.is_none() && n.nu.is_zero() && n.sigma.iter().all(Coefficient::is_zero)
        })
    }

    /// Every coefficient is a constant (no `(t, x)` dependence).
    pub fn has_constant_coefficients(&self) -> bool {
        let constant = |c: &Coefficient| c.as_constant().is_some();
        self.diffusion.iter().all(constant)
            && self.drift.iter().all(constant)
            && constant(&self.reaction)
            && self
                .noise
                .iter()
                .all(|n| constant(&n.nu) && n.sigma.iter().all(constant))
    }

    /// Nodes where some `a_λ(t, x) < 0`, as `(direction index, node, value)`.
    pub fn monotonicity_violations(&self, grid: &Grid, t: f64) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        let mut x = vec![0.0; grid.dim()];
        for (i, a) in self.diffusion.iter().enumerate() {
            if let Some(v) = a.as_constant() {
                if v < 0.0 {
                    out.push((i, 0, v));
                }
                continue;
            }
            for node in 0..grid.len() {
                grid.coordinate_into(node, &mut x);
                let v = a.eval(t, &x);
                if v < 0.0 {
                    out.push((i, node, v));
                }
            }
        }
        out
    }

    fn first_difference(&self, u: &GridFunction, direction: &Direction) -> GridFunction {
        if self.symmetric {
            diff_central(u, direction)
        } else {
            diff_forward(u, direction)
        }
    }
}

fn accumulate(out: &mut GridFunction, coefficient: &Sampled, term: &GridFunction) {
    match coefficient {
        Sampled::Constant(c) => out.add_scaled(*c, term),
        Sampled::Nodes(c) => {
            for ((o, &v), &ci) in out.values_mut().iter_mut().zip(term.values()).zip(c) {
                *o += ci * v;
            }
        }
    }
}

/// `L_h u` at time `t`.
pub fn apply_l(spec: &OperatorSpec, t: f64, u: &GridFunction) -> Result<GridFunction> {
    let grid = u.grid().clone();
    let mut out = GridFunction::zeros(grid.clone());
    for (i, direction) in spec.directions.iter().enumerate() {
        let a = spec.diffusion[i].sample(&grid, t, &|| format!("diffusion coefficient along {direction}"))?;
        if !a.is_zero() {
            accumulate(&mut out, &a, &diff_second(u, direction));
        }
        let b = spec.drift[i].sample(&grid, t, &|| format!("drift coefficient along {direction}"))?;
        if !b.is_zero() {
            accumulate(&mut out, &b, &spec.first_difference(u, direction));
        }
    }
    let c = spec.reaction.sample(&grid, t, &|| "reaction coefficient".into())?;
    if !c.is_zero() {
        accumulate(&mut out, &c, u);
    }
    Ok(out)
}

/// `M_h^ρ u` at time `t`.
pub fn apply_m(spec: &OperatorSpec, rho: usize, t: f64, u: &GridFunction) -> Result<GridFunction> {
    spec.check_noise(rho)?;
    let grid = u.grid().clone();
    let term = &spec.noise[rho];
    let mut out = GridFunction::zeros(grid.clone());
    for (i, direction) in spec.directions.iter().enumerate() {
        let s = term.sigma[i].sample(&grid, t, &|| format!("noise coefficient {rho} along {direction}"))?;
        if !s.is_zero() {
            accumulate(&mut out, &s, &spec.first_difference(u, direction));
        }
    }
    let nu = term.nu.sample(&grid, t, &|| format!("noise reaction coefficient {rho}"))?;
    if !nu.is_zero() {
        accumulate(&mut out, &nu, u);
    }
    Ok(out)
}

/// Diagonal entry of `L_h` at each node, ignoring periodic self-overlap.
pub(crate) fn l_diagonal(spec: &OperatorSpec, grid: &Grid, t: f64) -> Result<Vec<f64>> {
    let h = grid.spacing();
    let mut diag = vec![0.0; grid.len()];
    for (i, direction) in spec.directions.iter().enumerate() {
        let a = spec.diffusion[i].sample(grid, t, &|| format!("diffusion coefficient along {direction}"))?;
        let b = spec.drift[i].sample(grid, t, &|| format!("drift coefficient along {direction}"))?;
        for (node, d) in diag.iter_mut().enumerate() {
            *d -= 2.0 * a.at(node) / (h * h);
            if !spec.symmetric {
                *d -= b.at(node) / h;
            }
        }
    }
    let c = spec.reaction.sample(grid, t, &|| "reaction coefficient".into())?;
    for (node, d) in diag.iter_mut().enumerate() {
        *d += c.at(node);
    }
    Ok(diag)
}

/// Nonnegative weights `a_λ` with `Σ_λ a_λ λλᵀ = a`.
///
/// Among all exact nonnegative decompositions the one with the smallest
/// fourth moment `Σ_λ a_λ |λ|⁴` is returned, which favors short directions.
/// That minimum is attained at a basic solution, so the search enumerates
/// direction subsets of size at most `d(d+1)/2`.
pub fn decompose_diffusion(a: &DMatrix<f64>, directions: &[Direction]) -> Result<Vec<f64>> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(Error::InvalidDirection("diffusion matrix must be square".into()));
    }
    if let Some(bad) = directions.iter().find(|l| l.dim() != d) {
        return Err(Error::InvalidDirection(format!(
            "direction {bad} does not match matrix dimension {d}"
        )));
    }
    if directions.len() > 20 {
        return Err(Error::InvalidDirection("at most 20 directions supported".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let rows = pairs.len();
    let target = DVector::from_iterator(rows, pairs.iter().map(|&(i, j)| 0.5 * (a[(i, j)] + a[(j, i)])));
    let column = |l: &Direction| -> Vec<f64> {
        let c = l.components();
        pairs.iter().map(|&(i, j)| (c[i] * c[j]) as f64).collect()
    };
    let columns: Vec<Vec<f64>> = directions.iter().map(column).collect();
    let scale = 1.0 + target.amax();
    let tolerance = 1e-12 * scale;

    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut best_residual = target.norm();
    let n = directions.len();
    for mask in 1u32..(1u32 << n) {
        let chosen: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        if chosen.len() > rows {
            continue;
        }
        let m = DMatrix::from_fn(rows, chosen.len(), |r, c| columns[chosen[c]][r]);
        let svd = m.clone().svd(true, true);
        let Ok(w) = svd.solve(&target, 1e-13) else {
            continue;
        };
        if w.iter().any(|&v| v < -tolerance) {
            continue;
        }
        let w: Vec<f64> = w.iter().map(|&v| v.max(0.0)).collect();
        let fitted = &m * DVector::from_column_slice(&w);
        let residual = (&fitted - &target).norm();
        best_residual = best_residual.min(residual);
        if residual > tolerance {
            continue;
        }
        let objective: f64 = chosen
            .iter()
            .zip(&w)
            .map(|(&i, wi)| wi * (directions[i].norm_squared() as f64).powi(2))
            .sum();
        let mut full = vec![0.0; n];
        for (&i, &wi) in chosen.iter().zip(&w) {
            full[i] = wi;
        }
        let support = full.iter().filter(|&&v| v > 0.0).count();
        let better = match &best {
            None => true,
            Some((obj, sup, _)) => {
                objective < obj - 1e-12 * scale || ((objective - obj).abs() <= 1e-12 * scale && support < *sup)
            }
        };
        if better {
            best = Some((objective, support, full));
        }
    }
    if target.amax() == 0.0 {
        return Ok(vec![0.0; n]);
    }
    best.map(|(_, _, w)| w)
        .ok_or(Error::InfeasibleDecomposition {
            residual: best_residual,
        })
}

type MatrixFn = dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync;

/// Continuous operators `L = a^{ij}∂_i∂_j + b^i∂_i + c`, `M^ρ = σ^{iρ}∂_i + ν^ρ`.
///
/// Matrices are returned row-major: `a` is `d × d`, `sigma` is `d × d₁`.
#[derive(Clone)]
pub struct ContinuousOperator {
    pub dim: usize,
    pub noise_count: usize,
    pub a_matrix: Arc<MatrixFn>,
    pub b_vector: Arc<MatrixFn>,
    pub c_scalar: Arc<SpaceTimeFn>,
    pub sigma_matrix: Arc<MatrixFn>,
    pub nu_vector: Arc<MatrixFn>,
}

impl ContinuousOperator {
    pub fn constant(dim: usize, a: Vec<f64>, b: Vec<f64>, c: f64, sigma: Vec<f64>, nu: Vec<f64>) -> Self {
        assert_eq!(a.len(), dim * dim);
        assert_eq!(b.len(), dim);
        let noise_count = nu.len();
        assert_eq!(sigma.len(), dim * noise_count);
        Self {
            dim,
            noise_count,
            a_matrix: Arc::new(move |_, _| a.clone()),
            b_vector: Arc::new(move |_, _| b.clone()),
            c_scalar: Arc::new(move |_, _| c),
            sigma_matrix: Arc::new(move |_, _| sigma.clone()),
            nu_vector: Arc::new(move |_, _| nu.clone()),
        }
    }

    /// `a − ½σσᵀ` at `(t, x)`.
    pub fn parabolicity_matrix(&self, t: f64, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        let a = DMatrix::from_row_slice(d, d, &(self.a_matrix)(t, x));
        let s = DMatrix::from_row_slice(d, self.noise_count, &(self.sigma_matrix)(t, x));
        a - 0.5 * &s * s.transpose()
    }

    fn apply_l_monomial(&self, t: f64, x: &[f64], alpha: &[u32]) -> f64 {
        let d = self.dim;
        let a = (self.a_matrix)(t, x);
        let b = (self.b_vector)(t, x);
        let mut v = (self.c_scalar)(t, x) * monomial(alpha, x, &[]);
        for i in 0..d {
            v += b[i] * monomial(alpha, x, &[i]);
            for j in 0..d {
                v += a[i * d + j] * monomial(alpha, x, &[i, j]);
            }
        }
        v
    }

    fn apply_m_monomial(&self, rho: usize, t: f64, x: &[f64], alpha: &[u32]) -> f64 {
        let sigma = (self.sigma_matrix)(t, x);
        let nu = (self.nu_vector)(t, x);
        let mut v = nu[rho] * monomial(alpha, x, &[]);
        for i in 0..self.dim {
            v += sigma[i * self.noise_count + rho] * monomial(alpha, x, &[i]);
        }
        v
    }
}

impl fmt::Debug for ContinuousOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousOperator")
            .field("dim", &self.dim)
            .field("noise_count", &self.noise_count)
            .finish_non_exhaustive()
    }
}

/// `∂_{axes} x^alpha` evaluated at `x`.
fn monomial(alpha: &[u32], x: &[f64], axes: &[usize]) -> f64 {
    let mut exps: Vec<i64> = alpha.iter().map(|&e| e as i64).collect();
    let mut factor = 1.0;
    for &axis in axes {
        if exps[axis] == 0 {
            return 0.0;
        }
        factor *= exps[axis] as f64;
        exps[axis] -= 1;
    }
    factor * exps.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product::<f64>()
}

/// All exponent vectors in `dim` variables with total degree `≤ degree`.
pub fn monomials(dim: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == dim {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=left {
            prefix.push(e);
            rec(dim, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, degree, &mut Vec::new(), &mut out);
    out.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse(e.clone())));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Drift,
    Noise(usize),
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Drift => write!(f, "L"),
            Self::Noise(rho) => write!(f, "M{rho}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MonomialResidual {
    pub operator: OperatorKind,
    pub exponents: Vec<u32>,
    /// `max |discrete − continuous|` over interior nodes.
    pub max_abs: f64,
    /// Same, with each node's residual divided by `max(1, |x|²)`.
    pub max_scaled: f64,
}

#[derive(Clone, Debug)]
pub struct ConsistencyReport {
    pub spacing: f64,
    pub interior_nodes: usize,
    pub residuals: Vec<MonomialResidual>,
}

impl ConsistencyReport {
    pub fn max_scaled(&self) -> f64 {
        self.residuals.iter().map(|r| r.max_scaled).fold(0.0, f64::max)
    }
}

/// Nodes whose whole stencil lies inside the index box without wrapping.
pub fn interior_nodes(spec: &OperatorSpec, grid: &Grid) -> Vec<usize> {
    let reach: Vec<usize> = (0..grid.dim())
        .map(|axis| {
            spec.directions
                .iter()
                .map(|l| l.components()[axis].unsigned_abs() as usize)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut index = vec![0; grid.dim()];
    (0..grid.len())
        .filter(|&flat| {
            grid.unflatten_into(flat, &mut index);
            index
                .iter()
                .zip(&reach)
                .zip(grid.extent())
                .all(|((&i, &r), &n)| i >= r && i + r < n)
        })
        .collect()
}

/// Residual of one operator on one monomial at every interior node, as
/// `(node, discrete − continuous)`.
pub fn monomial_residuals(
    spec: &OperatorSpec,
    cont: &ContinuousOperator,
    grid: &Arc<Grid>,
    operator: OperatorKind,
    exponents: &[u32],
    t: f64,
) -> Result<Vec<(usize, f64)>> {
    let u = GridFunction::sample(grid.clone(), |x| monomial(exponents, x, &[]));
    let discrete = match operator {
        OperatorKind::Drift => apply_l(spec, t, &u)?,
        OperatorKind::Noise(rho) => apply_m(spec, rho, t, &u)?,
    };
    let mut x = vec![0.0; grid.dim()];
    Ok(interior_nodes(spec, grid)
        .into_iter()
        .map(|node| {
            grid.coordinate_into(node, &mut x);
            let exact = match operator {
                OperatorKind::Drift => cont.apply_l_monomial(t, &x, exponents),
                OperatorKind::Noise(rho) => cont.apply_m_monomial(rho, t, &x, exponents),
            };
            (node, discrete.values()[node] - exact)
        })
        .collect())
}

/// Apply `L_h` and every `M_h^ρ` to all monomials of total degree
/// `≤ degree` and compare with the continuous operators at interior nodes.
pub fn consistency_check(
    spec: &OperatorSpec,
    cont: &ContinuousOperator,
    grid: &Arc<Grid>,
    degree: u32,
    t: f64,
) -> Result<ConsistencyReport> {
    if !(1..=2).contains(&degree) {
        return Err(Error::Config(format!("consistency degree must be 1 or 2, got {degree}")));
    }
    if cont.dim != spec.dim || cont.noise_count != spec.noise_count() || grid.dim() != spec.dim {
        return Err(Error::Config("operator, continuous operator and grid dimensions disagree".into()));
    }
    let operators = std::iter::once(OperatorKind::Drift)
        .chain((0..spec.noise_count()).map(OperatorKind::Noise))
        .collect::<Vec<_>>();
    let mut residuals = Vec::new();
    for &operator in &operators {
        for exponents in monomials(spec.dim, degree) {
            let per_node = monomial_residuals(spec, cont, grid, operator, &exponents, t)?;
            let mut max_abs = 0.0f64;
            let mut max_scaled = 0.0f64;
            for (node, r) in per_node {
                let x2: f64 = grid.coordinate(node).iter().map(|v| v * v).sum();
                max_abs = max_abs.max(r.abs());
                max_scaled = max_scaled.max(r.abs() / x2.max(1.0));
            }
            residuals.push(MonomialResidual {
                operator,
                exponents,
                max_abs,
                max_scaled,
            });
        }
    }
    Ok(ConsistencyReport {
        spacing: grid.spacing(),
        interior_nodes: interior_nodes(spec, grid).len(),
        residuals,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parabolicity {
    /// `a − ½σσᵀ` positive definite at every sampled node.
    Strict,
    /// Positive semidefinite with a zero eigenvalue somewhere.
    Degenerate,
    Violated,
}

impl fmt::Display for Parabolicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Strict => "strict",
            Self::Degenerate => "degenerate",
            Self::Violated => "violated",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ParabolicityReport {
    pub min_eigenvalue: f64,
    pub worst_node: usize,
    pub asymmetric_nodes: usize,
    pub status: Parabolicity,
}

/// Stochastic parabolicity of `cont` at the nodes of `grid`. Reported, not
/// enforced.
pub fn parabolicity(cont: &ContinuousOperator, grid: &Grid, t: f64) -> ParabolicityReport {
    let d = cont.dim;
    let mut min_eigenvalue = f64::INFINITY;
    let mut worst_node = 0;
    let mut asymmetric_nodes = 0;
    let mut tolerance = 0.0f64;
    let mut x = vec![0.0; d];
    for node in 0..grid.len() {
        grid.coordinate_into(node, &mut x);
        let a = DMatrix::from_row_slice(d, d, &(cont.a_matrix)(t, &x));
        if (&a - a.transpose()).amax() > 1e-12 * (1.0 + a.amax()) {
            asymmetric_nodes += 1;
        }
        let p = cont.parabolicity_matrix(t, &x);
        tolerance = tolerance.max(1e-12 * (1.0 + a.amax()));
        let sym = 0.5 * (&p + p.transpose());
        let lowest = SymmetricEigen::new(sym).eigenvalues.min();
        if lowest < min_eigenvalue {
            min_eigenvalue = lowest;
            worst_node = node;
        }
    }
    let status = if min_eigenvalue < -tolerance {
        Parabolicity::Violated
    } else if min_eigenvalue <= tolerance {
        Parabolicity::Degenerate
    } else {
        Parabolicity::Strict
    };
    ParabolicityReport {
        min_eigenvalue,
        worst_node,
        asymmetric_nodes,
        status,
    }
}
