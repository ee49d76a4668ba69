use std::f64::consts::TAU;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spdex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spdex"))
        .args(args)
        .env_remove("SPDEX_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_config(dir: &Path, problem: &str, extra: &str) -> String {
    let path = dir.join("experiment.toml");
    fs::write(
        &path,
        format!(
            "[problem]\nname = \"{problem}\"\n\n[grid]\ncoarse_n = 8\nrefinements = 3\n\n[monte_carlo]\npaths = 4\nmaster_seed = 5\n{extra}"
        ),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn coeffs_prints_rational_and_decimal() {
    let o = spdex(&["coeffs", "--k", "1", "--power-step", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("-1/3"), "{text}");
    assert!(text.contains("4/3"));
    assert!(text.contains("-3.33333333333333"));
    assert!(text.contains("1.33333333333333"));

    let o = spdex(&["coeffs", "--k", "0"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("c_0 = 1 = 1.0"));

    let o = spdex(&["coeffs", "--k", "9"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("9"));
    assert!(stdout(&o).is_empty());
}

#[test]
fn check_reports() {
    let o = spdex(&["check", "--problem", "deterministic_heat_1d", "--n", "16"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("parabolicity: strict"), "{text}");
    for line in text.lines().filter(|l| l.contains("max residual")) {
        let v: f64 = line.split("max residual ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
        assert!(v <= 1e-12, "{line}");
    }

    let o = spdex(&["check", "--problem", "transport_diffusion_1d"]);
    assert!(stdout(&o).contains("parabolicity: degenerate"));

    let o = spdex(&["check", "--problem", "no_such_problem"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("deterministic_heat_1d") && err.contains("transport_diffusion_1d"), "{err}");
}

#[test]
fn converge_missing_config_fails() {
    let o = spdex(&["converge", "--config", "/nonexistent/experiment.toml"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("cannot read config"));
}

#[test]
fn converge_reports_parse_errors_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[problem]\nname = \"deterministic_heat_1d\"\n[grid]\ncoarse_n = eight\n").unwrap();
    let o = spdex(&["converge", "--config", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn converge_writes_table_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "deterministic_heat_1d", "");
    let out = dir.path().join("out");
    let o = spdex(&["converge", "--config", &config, "--out", out.to_str().unwrap(), "--k", "1", "--plot-data"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("fitted slope"));

    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "h,k,power_step,paths,rms_sup_error,q10,q50,q90,local_order,slope");
    assert_eq!(lines.len(), 1 + 3);
    assert!(lines[1].starts_with(&format!("{:.12e},1,2,4,", TAU / 8.0)));

    let meta = fs::read_to_string(out.join("convergence.meta.toml")).unwrap();
    assert!(meta.contains("problem = \"deterministic_heat_1d\""));
    assert!(meta.contains("master_seed = 5"));
    assert_eq!(fs::read_to_string(out.join("convergence.plot.csv")).unwrap().lines().count(), 4);
}

#[test]
fn seed_flag_overrides_and_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "transport_diffusion_1d", "");
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = spdex(&["converge", "--config", &config, "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        (
            fs::read(out.join("convergence.csv")).unwrap(),
            fs::read_to_string(out.join("convergence.meta.toml")).unwrap(),
        )
    };
    let (a, meta) = run("42", "a");
    let (b, _) = run("42", "b");
    let (c, _) = run("43", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(meta.contains("master_seed = 42"));
}

#[test]
fn out_dir_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "deterministic_heat_1d", "\n[output]\nname = \"heat\"\n");
    let target = dir.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_spdex"))
        .args(["converge", "--config", &config])
        .env("SPDEX_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(target.join("heat.csv").exists());
}

fn parse_dump(text: &str) -> Vec<(f64, f64)> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x0,u"));
    lines
        .map(|l| {
            let (x, u) = l.split_once(',').unwrap();
            (x.parse().unwrap(), u.parse().unwrap())
        })
        .collect()
}

#[test]
fn solve_zero_operator_returns_initial_profile() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "zero_operator_1d", "");
    let o = spdex(&["solve", "--config", &config]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = parse_dump(&stdout(&o));
    assert_eq!(rows.len(), 8);
    for (x, u) in rows {
        assert!((u - (x.sin() + (2.0 * x).cos())).abs() <= 1e-14);
    }
}

#[test]
fn solve_accelerate_matches_manual_combination() {
    let dir = tempfile::tempdir().unwrap();
    let coarse = write_config(dir.path(), "deterministic_heat_1d", "");
    fs::write(&coarse, fs::read_to_string(&coarse).unwrap().replace("coarse_n = 8", "coarse_n = 16")).unwrap();
    let accelerated = parse_dump(&stdout(&spdex(&["solve", "--config", &coarse, "--accelerate", "k=1"])));
    let u_coarse = parse_dump(&stdout(&spdex(&["solve", "--config", &coarse])));

    let fine_dir = tempfile::tempdir().unwrap();
    let fine = write_config(fine_dir.path(), "deterministic_heat_1d", "");
    fs::write(&fine, fs::read_to_string(&fine).unwrap().replace("coarse_n = 8", "coarse_n = 32")).unwrap();
    let u_fine = parse_dump(&stdout(&spdex(&["solve", "--config", &fine])));

    assert_eq!(accelerated.len(), 16);
    for (i, (x, v)) in accelerated.iter().enumerate() {
        assert_eq!(*x, u_coarse[i].0);
        let manual = -u_coarse[i].1 / 3.0 + 4.0 * u_fine[2 * i].1 / 3.0;
        assert!((v - manual).abs() <= 1e-14, "node {i}: {v} vs {manual}");
    }
    // The extrapolated field is closer to the exact solution.
    let exact = |x: f64| (-0.5f64).exp() * x.sin() + (-4.5f64).exp() * (3.0 * x).sin();
    let err = |rows: &[(f64, f64)]| rows.iter().map(|(x, u)| (u - exact(*x)).abs()).fold(0.0, f64::max);
    assert!(err(&accelerated) < err(&u_coarse) / 10.0);
}

#[test]
fn solve_writes_file_with_out() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "transport_diffusion_1d", "");
    let out = dir.path().join("fields");
    let o = spdex(&["solve", "--config", &config, "--out", out.to_str().unwrap(), "--path", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let rows = parse_dump(&fs::read_to_string(out.join("convergence_field.csv")).unwrap());
    assert_eq!(rows.len(), 8);
}

#[test]
fn rejects_invalid_accelerate() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "deterministic_heat_1d", "");
    let o = spdex(&["solve", "--config", &config, "--accelerate", "k=two"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--accelerate"));
}
