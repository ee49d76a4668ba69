//! Nested-grid Monte Carlo convergence experiments.
//!
//! For each base resolution `h_r = h_0 / 2^r` and each path `p`, the problem
//! is solved on `h_r, h_r/2, …, h_r/2^k` with one shared Wiener path, the
//! solutions are extrapolated onto the `h_r` grid, and the sup-norm error
//! against the oracle over the measurement box is recorded. Errors are
//! aggregated as `sqrt(mean_p sup_error²)`, a strong `L²(Ω; ℓ^∞)` error.
//!
//! Paths are the unit of parallelism. Every path is sampled once on a time
//! grid shared by all resolutions and all levels, and results are reduced in
//! path order, so tables do not depend on the worker count.

mod report;
mod stats;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{self, cfl_guard, solve_path, solve_spectral_exact, Scheme, SemidiscreteProblem};
use crate::lattice::{Grid, GridFunction};
use crate::noise::{sample_path, uniform_times, WienerPath};
use crate::richardson::{coefficients, extrapolate, ExtrapolationWeights};
use crate::testbed::{self, Oracle, TestProblem};

pub use report::{write_csv, write_metadata, write_plot_data, CSV_HEADER};
pub use stats::{fit_order, mc_stats, ErrorSummary, LocalOrder, OrderFit};

/// Upper bound on time steps chosen by the default rule.
pub const MAX_TIME_STEPS: usize = 1_000_000;
/// Upper bound on nodes of the finest grid in an experiment.
pub const MAX_NODES: usize = 1 << 24;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeChoice {
    /// Spectral-exact when eligible, otherwise drift-implicit.
    #[default]
    Auto,
    SpectralExact,
    Explicit,
    DriftImplicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub name: String,
    /// Defaults to the problem's own horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Nodes per axis at the coarsest resolution.
    pub coarse_n: usize,
    /// Number of base resolutions `R`.
    pub refinements: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RichardsonSection {
    #[serde(default)]
    pub k: usize,
    #[serde(default = "default_power_step")]
    pub power_step: u32,
}

fn default_power_step() -> u32 {
    2
}

impl Default for RichardsonSection {
    fn default() -> Self {
        Self {
            k: 0,
            power_step: default_power_step(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default)]
    pub scheme: SchemeChoice,
    /// Overrides the default time-step rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_steps: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Worker threads; defaults to rayon's global pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

fn default_paths() -> usize {
    1
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self {
            paths: default_paths(),
            master_seed: 0,
            threads: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "default_output_name")]
    pub name: String,
}

fn default_output_name() -> String {
    "convergence".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            name: default_output_name(),
        }
    }
}

/// Experiment manifest, one TOML section per concern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub grid: GridSection,
    #[serde(default)]
    pub richardson: RichardsonSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub monte_carlo: MonteCarloSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn new(problem: &str, coarse_n: usize, refinements: usize) -> Self {
        Self {
            problem: ProblemSection {
                name: problem.into(),
                horizon: None,
            },
            grid: GridSection {
                coarse_n,
                refinements,
            },
            richardson: RichardsonSection::default(),
            integrator: IntegratorSection::default(),
            monte_carlo: MonteCarloSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn with_extrapolation(mut self, k: usize, power_step: u32) -> Self {
        self.richardson = RichardsonSection { k, power_step };
        self
    }

    pub fn with_paths(mut self, paths: usize, master_seed: u64) -> Self {
        self.monte_carlo.paths = paths;
        self.monte_carlo.master_seed = master_seed;
        self
    }

    pub fn with_scheme(mut self, scheme: SchemeChoice) -> Self {
        self.integrator.scheme = scheme;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.problem.horizon = Some(horizon);
        self
    }

    /// Parses TOML; syntax errors carry line and column.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.grid.refinements < 2 {
            return fail(format!(
                "refinements must be at least 2 to fit an order, got {}",
                self.grid.refinements
            ));
        }
        if self.grid.coarse_n < 2 {
            return fail(format!("coarse_n must be at least 2, got {}", self.grid.coarse_n));
        }
        if self.monte_carlo.paths == 0 {
            return fail("paths must be at least 1".into());
        }
        if self.monte_carlo.threads == Some(0) {
            return fail("threads must be positive".into());
        }
        if let Some(h) = self.problem.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return fail(format!("horizon must be positive, got {h}"));
            }
        }
        if self.integrator.time_steps == Some(0) {
            return fail("time_steps must be positive".into());
        }
        coefficients(self.richardson.k, self.richardson.power_step)?;
        let levels = (self.grid.refinements - 1 + self.richardson.k) as u32;
        let finest = self
            .grid
            .coarse_n
            .saturating_mul(1usize.checked_shl(levels).unwrap_or(usize::MAX));
        if finest > MAX_NODES {
            return fail(format!(
                "finest grid would have {finest} nodes per axis (limit {MAX_NODES})"
            ));
        }
        Ok(())
    }
}

/// How each path is integrated in time.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimePlan {
    SpectralExact,
    Stepping {
        scheme: Scheme,
        steps: usize,
        tau: f64,
        rule: String,
    },
}

impl TimePlan {
    pub fn times(&self, horizon: f64) -> Vec<f64> {
        match self {
            Self::SpectralExact => vec![0.0, horizon],
            Self::Stepping { steps, .. } => uniform_times(horizon, *steps),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::SpectralExact => "spectral-exact per-path propagator (no time discretization)".into(),
            Self::Stepping { scheme, steps, tau, rule } => {
                format!("{scheme:?} with {steps} steps of tau = {tau:.6e} ({rule})")
            }
        }
    }
}

/// Chooses the integrator and time step.
///
/// Default step: `τ = min(h², h^{p+1})` with `h` the finest spacing in the
/// experiment and `p = power_step·(k+1)` the targeted spatial order, further
/// limited by the explicit stability guard for the explicit scheme, capped
/// at [`MAX_TIME_STEPS`] steps.
pub fn plan_time(config: &ExperimentConfig, problem: &TestProblem) -> Result<TimePlan> {
    let horizon = config.problem.horizon.unwrap_or(problem.default_horizon);
    let scheme = match config.integrator.scheme {
        SchemeChoice::Auto if problem.eligibility.spectral_exact_ok => return Ok(TimePlan::SpectralExact),
        SchemeChoice::SpectralExact => {
            let grid = problem.grid(config.grid.coarse_n)?;
            integrator::spectral::check_eligible(&problem.spec, &grid)?;
            return Ok(TimePlan::SpectralExact);
        }
        SchemeChoice::Auto | SchemeChoice::DriftImplicit => Scheme::DriftImplicit,
        SchemeChoice::Explicit => Scheme::Explicit,
    };
    let finest = finest_grid(config, problem)?;
    if let Some(steps) = config.integrator.time_steps {
        return Ok(TimePlan::Stepping {
            scheme,
            steps,
            tau: horizon / steps as f64,
            rule: "configured step count".into(),
        });
    }
    let h = finest.spacing();
    let target = config.richardson.power_step as i32 * (config.richardson.k as i32 + 1);
    let mut tau = (h * h).min(h.powi(target + 1));
    let mut rule = format!("tau = min(h^2, h^{}) with h = {h:.6e}", target + 1);
    if scheme == Scheme::Explicit {
        let probe = problem.semidiscrete(Arc::new(finest), horizon)?;
        let ratio_per_unit = cfl_guard(&probe, 1.0).ratio;
        if ratio_per_unit > 0.0 && tau * ratio_per_unit > 0.9 {
            tau = 0.9 / ratio_per_unit;
            rule.push_str(", limited by the explicit stability guard");
        }
    }
    let mut steps = (horizon / tau).ceil() as usize;
    if steps > MAX_TIME_STEPS {
        steps = MAX_TIME_STEPS;
        rule.push_str(&format!(", capped at {MAX_TIME_STEPS} steps"));
    }
    let steps = steps.max(1);
    Ok(TimePlan::Stepping {
        scheme,
        steps,
        tau: horizon / steps as f64,
        rule,
    })
}

fn finest_grid(config: &ExperimentConfig, problem: &TestProblem) -> Result<Grid> {
    let mut g = problem.grid(config.grid.coarse_n)?;
    for _ in 0..(config.grid.refinements - 1 + config.richardson.k) {
        g = g.refine();
    }
    Ok(g)
}

/// Produces the terminal field of one grid solve.
pub trait LevelSolver: Sync {
    fn solve(&self, problem: &SemidiscreteProblem, path: &WienerPath) -> Result<GridFunction>;

    fn describe(&self) -> String;
}

/// The real integrators, chosen by a [`TimePlan`].
#[derive(Clone, Debug)]
pub struct PlannedSolver(pub TimePlan);

impl LevelSolver for PlannedSolver {
    fn solve(&self, problem: &SemidiscreteProblem, path: &WienerPath) -> Result<GridFunction> {
        let solution = match &self.0 {
            TimePlan::SpectralExact => solve_spectral_exact(problem, path)?,
            TimePlan::Stepping { scheme, .. } => solve_path(problem, *scheme, path)?,
        };
        Ok(solution.terminal)
    }

    fn describe(&self) -> String {
        self.0.describe()
    }
}

/// Digests of the increment arrays consumed by the `k + 1` solves of one
/// (resolution, path) cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellDigests {
    pub resolution: usize,
    pub path: usize,
    pub digests: Vec<String>,
}

impl CellDigests {
    pub fn consistent(&self) -> bool {
        self.digests.windows(2).all(|w| w[0] == w[1])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub summary: ErrorSummary,
    /// `log₂(e_h / e_{h/2})`; absent on the finest row.
    pub local_order: Option<LocalOrder>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub config: ExperimentConfig,
    pub problem: String,
    pub oracle: String,
    pub horizon: f64,
    pub solver: String,
    pub weights: ExtrapolationWeights,
    pub rows: Vec<ConvergenceRow>,
    pub fit: OrderFit,
    /// Per-path sup errors, `errors[r][p]`.
    pub errors: Vec<Vec<f64>>,
    pub cells: Vec<CellDigests>,
}

impl ConvergenceTable {
    pub fn slope(&self) -> Option<f64> {
        self.fit.slope
    }

    pub fn rms_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.summary.rms).collect()
    }

    pub fn digests_consistent(&self) -> bool {
        self.cells.iter().all(CellDigests::consistent)
    }
}

struct PathOutcome {
    errors: Vec<f64>,
    cells: Vec<CellDigests>,
}

pub fn run_convergence(config: &ExperimentConfig) -> Result<ConvergenceTable> {
    let problem = testbed::by_name(&config.problem.name)?;
    config.validate()?;
    let plan = plan_time(config, &problem)?;
    run_convergence_with(config, &problem, &PlannedSolver(plan))
}

/// Same as [`run_convergence`] with an explicit problem and solver, which
/// lets tests plant known errors.
pub fn run_convergence_with(
    config: &ExperimentConfig,
    problem: &TestProblem,
    solver: &dyn LevelSolver,
) -> Result<ConvergenceTable> {
    config.validate()?;
    let weights = coefficients(config.richardson.k, config.richardson.power_step)?;
    let horizon = config.problem.horizon.unwrap_or(problem.default_horizon);
    let plan = plan_time(config, problem)?;
    let times = plan.times(horizon);
    let resolutions = config.grid.refinements;

    let chains: Vec<Vec<Arc<Grid>>> = (0..resolutions)
        .map(|r| {
            let mut g = problem.grid(config.grid.coarse_n << r)?;
            let mut chain = vec![Arc::new(g.clone())];
            for _ in 0..config.richardson.k {
                g = g.refine();
                chain.push(Arc::new(g.clone()));
            }
            Ok(chain)
        })
        .collect::<Result<_>>()?;

    let run_path = |p: usize| -> Result<PathOutcome> {
        let path = sample_path(config.monte_carlo.master_seed, p as u64, &times, problem.spec.noise_count())?;
        let surrogates = match &problem.oracle {
            Oracle::Exact(_) => None,
            Oracle::Surrogate => Some(surrogate_fields(config, problem, &plan, &path, horizon)?),
        };
        let mut errors = Vec::with_capacity(resolutions);
        let mut cells = Vec::with_capacity(resolutions);
        for (r, chain) in chains.iter().enumerate() {
            let cell = |e: Error| Error::Cell {
                resolution: r,
                path: p,
                source: Box::new(e),
            };
            let mut digests = Vec::with_capacity(chain.len());
            let mut solutions = Vec::with_capacity(chain.len());
            for grid in chain {
                let sd = problem.semidiscrete(grid.clone(), horizon).map_err(cell)?;
                digests.push(path.digest());
                solutions.push(solver.solve(&sd, &path).map_err(cell)?);
            }
            let accelerated = extrapolate(&solutions, &weights).map_err(cell)?;
            let reference = match (&surrogates, problem.exact_field(&chain[0], horizon, &path.terminal_value())) {
                (_, Some(exact)) => exact,
                (Some(fields), None) => fields[r].restrict(&chain[0]).map_err(cell)?,
                (None, None) => unreachable!("surrogate fields exist for surrogate oracles"),
            };
            errors.push(accelerated.sup_distance_on_box(&reference));
            cells.push(CellDigests {
                resolution: r,
                path: p,
                digests,
            });
        }
        if let Some(fields) = &surrogates {
            let coarse = &chains[0][0];
            let difference = fields[0]
                .restrict(coarse)?
                .sup_distance_on_box(&fields[1].restrict(coarse)?);
            let bound = errors[0] / 10.0;
            if difference >= bound {
                return Err(Error::SurrogateInconsistent { difference, bound });
            }
        }
        Ok(PathOutcome { errors, cells })
    };

    let outcomes: Vec<Result<PathOutcome>> = match config.monte_carlo.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| (0..config.monte_carlo.paths).into_par_iter().map(run_path).collect()),
        None => (0..config.monte_carlo.paths).into_par_iter().map(run_path).collect(),
    };

    let mut errors = vec![Vec::with_capacity(config.monte_carlo.paths); resolutions];
    let mut cells = Vec::with_capacity(resolutions * config.monte_carlo.paths);
    for outcome in outcomes {
        let outcome = outcome?;
        for (r, e) in outcome.errors.into_iter().enumerate() {
            errors[r].push(e);
        }
        cells.extend(outcome.cells);
    }
    cells.sort_by_key(|c| (c.resolution, c.path));

    let summaries = errors.iter().map(|e| mc_stats(e)).collect::<Result<Vec<_>>>()?;
    let fit = fit_order(&summaries.iter().map(|s| s.rms).collect::<Vec<_>>())?;
    let rows = summaries
        .into_iter()
        .enumerate()
        .map(|(r, summary)| ConvergenceRow {
            n: chains[r][0].extent()[0],
            h: chains[r][0].spacing(),
            summary,
            local_order: fit.local.get(r).copied(),
        })
        .collect();

    Ok(ConvergenceTable {
        config: config.clone(),
        problem: problem.name.to_string(),
        oracle: match problem.oracle {
            Oracle::Exact(_) => "exact".into(),
            Oracle::Surrogate => format!(
                "surrogate: drift-implicit solve on grids 2^{} times finer than each base grid",
                config.richardson.k + 2
            ),
        },
        horizon,
        solver: solver.describe(),
        weights,
        rows,
        fit,
        errors,
        cells,
    })
}

/// Surrogate terminal fields on `h_r / 2^{k+2}` for `r = 0..=R`; the extra
/// level feeds the self-consistency check.
fn surrogate_fields(
    config: &ExperimentConfig,
    problem: &TestProblem,
    plan: &TimePlan,
    path: &WienerPath,
    horizon: f64,
) -> Result<Vec<GridFunction>> {
    if !problem.eligibility.deterministic {
        return Err(Error::Config(format!(
            "surrogate oracles need a deterministic problem; `{}` is stochastic",
            problem.name
        )));
    }
    let solver_plan = match plan {
        TimePlan::Stepping { steps, tau, rule, .. } => TimePlan::Stepping {
            scheme: Scheme::DriftImplicit,
            steps: *steps,
            tau: *tau,
            rule: rule.clone(),
        },
        TimePlan::SpectralExact => TimePlan::SpectralExact,
    };
    let solver = PlannedSolver(solver_plan);
    (0..=config.grid.refinements)
        .map(|r| {
            let mut g = problem.grid(config.grid.coarse_n << r)?;
            for _ in 0..config.richardson.k + 2 {
                g = g.refine();
            }
            let sd = problem.semidiscrete(Arc::new(g), horizon)?;
            solver.solve(&sd, path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_defaults() {
        let text = r#"
            [problem]
            name = "deterministic_heat_1d"

            [grid]
            coarse_n = 16
            refinements = 3
        "#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.richardson, RichardsonSection { k: 0, power_step: 2 });
        assert_eq!(c.monte_carlo.paths, 1);
        assert_eq!(c.integrator.scheme, SchemeChoice::Auto);
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn config_errors_carry_line_context() {
        let text = "[problem]\nname = \"x\"\n[grid]\ncoarse_n = \"sixteen\"\nrefinements = 3\n";
        let err = ExperimentConfig::from_toml(text).unwrap_err().to_string();
        assert!(err.contains("line 4"), "{err}");
        let err = ExperimentConfig::from_toml("[problem]\nname = \"x\"\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn validation() {
        assert!(ExperimentConfig::new("deterministic_heat_1d", 16, 1).validate().is_err());
        assert!(ExperimentConfig::new("deterministic_heat_1d", 16, 2).validate().is_ok());
        assert!(ExperimentConfig::new("deterministic_heat_1d", 16, 2).with_paths(0, 1).validate().is_err());
        assert!(ExperimentConfig::new("deterministic_heat_1d", 16, 2)
            .with_extrapolation(9, 2)
            .validate()
            .is_err());
        assert!(ExperimentConfig::new("deterministic_heat_1d", 1 << 20, 8).validate().is_err());
        assert!(matches!(
            run_convergence(&ExperimentConfig::new("missing", 16, 2)),
            Err(Error::UnknownProblem { .. })
        ));
    }

    #[test]
    fn time_plans() {
        let heat = testbed::deterministic_heat_1d();
        let c = ExperimentConfig::new("deterministic_heat_1d", 8, 2);
        assert_eq!(plan_time(&c, &heat).unwrap(), TimePlan::SpectralExact);

        let c = c.with_scheme(SchemeChoice::Explicit);
        match plan_time(&c, &heat).unwrap() {
            TimePlan::Stepping { scheme, tau, .. } => {
                assert_eq!(scheme, Scheme::Explicit);
                let h = std::f64::consts::TAU / 16.0;
                assert!(tau <= h.powi(3) * (1.0 + 1e-12));
            }
            other => panic!("{other:?}"),
        }

        let manufactured = testbed::additive_noise_manufactured_1d();
        let c = ExperimentConfig::new("additive_noise_manufactured_1d", 8, 2)
            .with_scheme(SchemeChoice::SpectralExact);
        assert!(matches!(plan_time(&c, &manufactured), Err(Error::SpectralIneligible(_))));
    }

    #[test]
    fn zero_operator_has_rounding_error_only() {
        for scheme in [SchemeChoice::Auto, SchemeChoice::Explicit, SchemeChoice::DriftImplicit] {
            let c = ExperimentConfig::new("zero_operator_1d", 8, 3)
                .with_extrapolation(1, 2)
                .with_scheme(scheme)
                .with_paths(2, 3);
            let t = run_convergence(&c).unwrap();
            // Only rounding in the transform and the weighted sum remains.
            assert!(t.rms_errors().iter().all(|&e| e <= 1e-14), "{scheme:?}: {:?}", t.rms_errors());
        }
    }

    #[test]
    fn heat_is_second_order() {
        let c = ExperimentConfig::new("deterministic_heat_1d", 16, 4);
        let t = run_convergence(&c).unwrap();
        assert!((t.slope().unwrap() - 2.0).abs() < 0.1, "{:?}", t.rms_errors());
        assert_eq!(t.rows.len(), 4);
        assert!(t.rows.windows(2).all(|w| w[0].h > w[1].h));
        assert_eq!(t.rows[3].local_order, None);
    }

    #[test]
    fn manufactured_problem_converges() {
        let c = ExperimentConfig::new("additive_noise_manufactured_1d", 8, 3)
            .with_paths(4, 11)
            .with_horizon(0.25);
        let t = run_convergence(&c).unwrap();
        assert!((t.slope().unwrap() - 2.0).abs() < 0.3, "{:?}", t.rms_errors());
    }

    #[test]
    fn variable_coefficient_with_surrogate() {
        let c = ExperimentConfig::new("variable_coefficient_1d", 8, 2).with_horizon(0.2);
        let t = run_convergence(&c).unwrap();
        assert!(t.oracle.starts_with("surrogate"));
        assert!((t.slope().unwrap() - 2.0).abs() < 0.3, "{:?}", t.rms_errors());
    }

    #[test]
    fn cell_errors_name_resolution_and_path() {
        struct Failing;
        impl LevelSolver for Failing {
            fn solve(&self, _: &SemidiscreteProblem, _: &WienerPath) -> Result<GridFunction> {
                Err(Error::BlowUp { step: 1, max_abs: 1e13 })
            }
            fn describe(&self) -> String {
                "failing".into()
            }
        }
        let c = ExperimentConfig::new("deterministic_heat_1d", 8, 2);
        let err = run_convergence_with(&c, &testbed::deterministic_heat_1d(), &Failing).unwrap_err();
        assert!(matches!(err, Error::Cell { resolution: 0, path: 0, .. }));
    }
}
