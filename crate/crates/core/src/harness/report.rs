//! Machine-readable output of a convergence table.
//!
//! Numbers are formatted with a fixed number of significant digits so two
//! runs with the same configuration write byte-identical files.

use std::io::Write;

use serde::Serialize;

use super::{ConvergenceTable, ExperimentConfig};
use crate::error::Result;

pub const CSV_HEADER: [&str; 10] = [
    "h",
    "k",
    "power_step",
    "paths",
    "rms_sup_error",
    "q10",
    "q50",
    "q90",
    "local_order",
    "slope",
];

fn sci(v: f64) -> String {
    format!("{v:.12e}")
}

/// One row per base resolution, coarsest first. `local_order` is empty on
/// the finest row; `slope` repeats the fitted slope on every row, empty if
/// no slope could be fitted.
pub fn write_csv<W: Write>(table: &ConvergenceTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let slope = table.fit.slope.map(|s| format!("{s:.6}")).unwrap_or_default();
    for row in &table.rows {
        w.write_record([
            sci(row.h),
            table.weights.k().to_string(),
            table.weights.power_step().to_string(),
            row.summary.paths.to_string(),
            sci(row.summary.rms),
            sci(row.summary.q10),
            sci(row.summary.median),
            sci(row.summary.q90),
            row.local_order.map(|o| o.to_string()).unwrap_or_default(),
            slope.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `log₂ h` against `log₂` of the rms error and its 10–90% band. Zero
/// errors are written as `-inf`.
pub fn write_plot_data<W: Write>(table: &ConvergenceTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["log2_h", "log2_rms", "log2_q10", "log2_q90"])?;
    let l = |v: f64| format!("{:.9}", v.log2());
    for row in &table.rows {
        w.write_record([l(row.h), l(row.summary.rms), l(row.summary.q10), l(row.summary.q90)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Metadata<'a> {
    generator: String,
    problem: &'a str,
    oracle: &'a str,
    horizon: f64,
    solver: &'a str,
    target_order: u32,
    digests_consistent: bool,
    weights: WeightsMetadata,
    config: &'a ExperimentConfig,
}

#[derive(Serialize)]
struct WeightsMetadata {
    exact: Vec<String>,
    float: Vec<f64>,
}

/// TOML sidecar with everything needed to rerun the experiment.
pub fn write_metadata<W: Write>(table: &ConvergenceTable, mut out: W) -> Result<()> {
    let meta = Metadata {
        generator: format!("spdex {}", env!("CARGO_PKG_VERSION")),
        problem: &table.problem,
        oracle: &table.oracle,
        horizon: table.horizon,
        solver: &table.solver,
        target_order: table.weights.target_order(),
        digests_consistent: table.digests_consistent(),
        weights: WeightsMetadata {
            exact: table.weights.exact().iter().map(|q| q.to_string()).collect(),
            float: table.weights.weights().to_vec(),
        },
        config: &table.config,
    };
    let text = toml::to_string(&meta).map_err(|e| crate::Error::Config(e.to_string()))?;
    out.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{run_convergence, ExperimentConfig};
    use super::*;

    fn table() -> ConvergenceTable {
        run_convergence(&ExperimentConfig::new("deterministic_heat_1d", 8, 3).with_extrapolation(1, 2)).unwrap()
    }

    #[test]
    fn csv_layout() {
        let t = table();
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines.len(), 4);
        let last: Vec<&str> = lines[3].split(',').collect();
        assert_eq!(last.len(), 10);
        assert_eq!(last[1], "1");
        assert_eq!(last[2], "2");
        assert_eq!(last[8], "");
        let first: Vec<&str> = lines[1].split(',').collect();
        let h: f64 = first[0].parse().unwrap();
        assert!((h - std::f64::consts::TAU / 8.0).abs() < 1e-12);
        assert!(first[8].parse::<f64>().is_ok());
    }

    #[test]
    fn metadata_parses_back() {
        let t = table();
        let mut buf = Vec::new();
        write_metadata(&t, &mut buf).unwrap();
        let value: toml::Table = toml::from_str(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(value["problem"].as_str(), Some("deterministic_heat_1d"));
        assert_eq!(value["target_order"].as_integer(), Some(4));
        let exact = value["weights"]["exact"].as_array().unwrap();
        assert_eq!(exact[0].as_str(), Some("-1/3"));
        let config: ExperimentConfig = value["config"].clone().try_into().unwrap();
        assert_eq!(config, t.config);
    }

    #[test]
    fn plot_data_is_log2() {
        let t = table();
        let mut buf = Vec::new();
        write_plot_data(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert!((row[0] - t.rows[0].h.log2()).abs() < 1e-8);
        assert!((row[1] - t.rows[0].summary.rms.log2()).abs() < 1e-8);
    }
}
