use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use spdex::harness::{self, ConvergenceTable, ExperimentConfig, LevelSolver, PlannedSolver};
use spdex::stencil::{consistency_check, parabolicity};
use spdex::{coefficients, extrapolate, noise, testbed, GridFunction};

/// Finite-difference SPDE solver with Richardson extrapolation.
#[derive(Parser, Debug)]
#[command(name = "spdex", version)]
struct Cli {
    /// More diagnostics on stderr; repeat for more.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the extrapolation weights for k levels.
    Coeffs {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        power_step: u32,
    },
    /// Consistency and parabolicity report for a built-in problem.
    Check {
        #[arg(long)]
        problem: String,
        /// Nodes per axis.
        #[arg(long, default_value_t = 32)]
        n: usize,
    },
    /// Run a convergence experiment and write its table.
    Converge(RunArgs),
    /// Dump the terminal field of one path on the coarsest grid.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        /// Extrapolation levels, `k=1` or `1`; overrides --k.
        #[arg(long)]
        accelerate: Option<String>,
        /// Path index within the master seed's family.
        #[arg(long, default_value_t = 0)]
        path: u64,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML experiment manifest.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    power_step: Option<u32>,
    /// Output directory; falls back to the config, then SPDEX_OUT_DIR, then `.`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write log2 h against log2 error.
    #[arg(long)]
    plot_data: bool,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let text = fs::read_to_string(&self.config)
            .with_context(|| format!("cannot read config {}", self.config.display()))?;
        let mut config = ExperimentConfig::from_toml(&text)
            .with_context(|| format!("in {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            config.monte_carlo.master_seed = seed;
        }
        if let Some(paths) = self.paths {
            config.monte_carlo.paths = paths;
        }
        if let Some(k) = self.k {
            config.richardson.k = k;
        }
        if let Some(s) = self.power_step {
            config.richardson.power_step = s;
        }
        Ok(config)
    }

    fn out_dir(&self, config: &ExperimentConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
            .or_else(|| std::env::var_os("SPDEX_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let verbose = cli.verbose;
    match cli.command {
        Command::Coeffs { k, power_step } => {
            let w = coefficients(k, power_step)?;
            print!("{w}");
            Ok(())
        }
        Command::Check { problem, n } => check(&problem, n),
        Command::Converge(args) => converge(&args, verbose),
        Command::Solve { run, accelerate, path } => solve(&run, accelerate.as_deref(), path, verbose),
    }
}

fn check(name: &str, n: usize) -> Result<()> {
    let problem = testbed::by_name(name)?;
    let grid = Arc::new(problem.grid(n)?);
    let degree = if problem.spec.is_symmetric() { 2 } else { 1 };
    let report = consistency_check(&problem.spec, &problem.continuous, &grid, degree, 0.0)?;
    let mut out = io::stdout().lock();
    writeln!(out, "problem: {}", problem.name)?;
    writeln!(out, "  {}", problem.description)?;
    writeln!(out, "grid: n = {n}, h = {:.6e}", grid.spacing())?;
    writeln!(
        out,
        "consistency on monomials of degree <= {degree} ({} interior nodes):",
        report.interior_nodes
    )?;
    for r in &report.residuals {
        writeln!(
            out,
            "  {} x^{:?}: max residual {:.3e} (scaled {:.3e})",
            r.operator, r.exponents, r.max_abs, r.max_scaled
        )?;
    }
    let p = parabolicity(&problem.continuous, &grid, 0.0);
    writeln!(
        out,
        "parabolicity: {} (min eigenvalue of a - sigma sigma^T / 2 = {:.3e})",
        p.status, p.min_eigenvalue
    )?;
    let violations = problem.spec.monotonicity_violations(&grid, 0.0);
    writeln!(out, "negative diffusion weights: {}", violations.len())?;
    writeln!(
        out,
        "oracle: {}; spectral-exact integration: {}",
        if problem.oracle.is_exact() { "exact" } else { "surrogate" },
        if problem.eligibility.spectral_exact_ok { "yes" } else { "no" }
    )?;
    Ok(())
}

fn write_file(path: &Path, write: impl FnOnce(&mut fs::File) -> spdex::Result<()>) -> Result<()> {
    let mut file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write(&mut file).with_context(|| format!("while writing {}", path.display()))
}

fn converge(args: &RunArgs, verbose: u8) -> Result<()> {
    let config = args.load()?;
    let dir = args.out_dir(&config);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    if verbose > 0 {
        eprintln!(
            "running {} with {} paths, k = {}, power step {}",
            config.problem.name, config.monte_carlo.paths, config.richardson.k, config.richardson.power_step
        );
    }
    let table = harness::run_convergence(&config)?;
    if verbose > 0 {
        eprintln!("integrator: {}", table.solver);
        eprintln!("oracle: {}", table.oracle);
    }
    let base = dir.join(&config.output.name);
    let csv = base.with_extension("csv");
    write_file(&csv, |f| harness::write_csv(&table, f))?;
    write_file(&base.with_extension("meta.toml"), |f| harness::write_metadata(&table, f))?;
    if args.plot_data {
        write_file(&base.with_extension("plot.csv"), |f| harness::write_plot_data(&table, f))?;
    }
    print_summary(&table)?;
    if !table.digests_consistent() {
        bail!("noise digests differ within a cell; nested solves did not share their path");
    }
    if verbose > 0 {
        eprintln!("wrote {}", csv.display());
    }
    Ok(())
}

fn print_summary(table: &ConvergenceTable) -> Result<()> {
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{}: k = {}, power step {}, {} paths, target order {}",
        table.problem,
        table.weights.k(),
        table.weights.power_step(),
        table.config.monte_carlo.paths,
        table.weights.target_order()
    )?;
    writeln!(out, "{:>6} {:>14} {:>14} {:>10}", "n", "h", "rms error", "order")?;
    for row in &table.rows {
        let order = row.local_order.map(|o| o.to_string()).unwrap_or_default();
        writeln!(out, "{:>6} {:>14.6e} {:>14.6e} {:>10}", row.n, row.h, row.summary.rms, order)?;
    }
    match table.slope() {
        Some(s) => writeln!(out, "fitted slope: {s:.4}")?,
        None => writeln!(out, "fitted slope: n/a (zero error)")?,
    }
    Ok(())
}

fn parse_accelerate(text: &str) -> Result<usize> {
    let value = text.strip_prefix("k=").unwrap_or(text);
    value
        .trim()
        .parse()
        .with_context(|| format!("--accelerate expects `k=<levels>` or `<levels>`, got `{text}`"))
}

fn solve(args: &RunArgs, accelerate: Option<&str>, path_index: u64, verbose: u8) -> Result<()> {
    let mut config = args.load()?;
    if let Some(text) = accelerate {
        config.richardson.k = parse_accelerate(text)?;
    }
    // A single resolution: the time plan only looks at the finest grid.
    config.grid.refinements = 1;
    let problem = testbed::by_name(&config.problem.name)?;
    let weights = coefficients(config.richardson.k, config.richardson.power_step)?;
    let horizon = config.problem.horizon.unwrap_or(problem.default_horizon);
    let plan = harness::plan_time(&config, &problem)?;
    if verbose > 0 {
        eprintln!("integrator: {}", plan.describe());
    }
    let path = noise::sample_path(
        config.monte_carlo.master_seed,
        path_index,
        &plan.times(horizon),
        problem.spec.noise_count(),
    )?;
    let solver = PlannedSolver(plan);
    let mut grid = problem.grid(config.grid.coarse_n)?;
    let mut solutions = Vec::new();
    for level in 0..=config.richardson.k {
        if level > 0 {
            grid = grid.refine();
        }
        let sd = problem.semidiscrete(Arc::new(grid.clone()), horizon)?;
        solutions.push(solver.solve(&sd, &path)?);
    }
    let field = extrapolate(&solutions, &weights)?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            let file = dir.join(format!("{}_field.csv", config.output.name));
            let mut f = fs::File::create(&file).with_context(|| format!("cannot create {}", file.display()))?;
            dump(&field, &mut f)?;
            if verbose > 0 {
                eprintln!("wrote {}", file.display());
            }
        }
        None => dump(&field, &mut io::stdout().lock())?,
    }
    Ok(())
}

/// One line per node: coordinates then value.
fn dump(field: &GridFunction, out: &mut dyn Write) -> Result<()> {
    let grid = field.grid();
    let header: Vec<String> = (0..grid.dim()).map(|i| format!("x{i}")).chain(["u".into()]).collect();
    writeln!(out, "{}", header.join(","))?;
    for (node, v) in field.values().iter().enumerate() {
        let mut line: Vec<String> = grid.coordinate(node).iter().map(|x| format!("{x:.17e}")).collect();
        line.push(format!("{v:.17e}"));
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accelerate_syntax() {
        assert_eq!(parse_accelerate("k=1").unwrap(), 1);
        assert_eq!(parse_accelerate("3").unwrap(), 3);
        assert!(parse_accelerate("k=one").is_err());
    }

    #[test]
    fn cli_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
