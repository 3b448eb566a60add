use std::process::{Command, Output};
use std::time::Instant;

fn collector(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_collector"))
        .args(args)
        .env_remove("COLLECTOR_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV with a schema comment and a header line.
fn rows(o: &Output) -> Vec<Vec<String>> {
    let text = stdout(o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# collector-csv schema=1"));
    lines.skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

const STAR: [&str; 4] = ["--lambda", "0.265", "--theta", "0.284"];

#[test]
fn transfer_estimate_at_reference_policy() {
    let mut args = vec!["estimate", "--model", "bern", "--eps", "0.3", "--delta", "0.2", "--eta", "2"];
    args.extend(STAR);
    args.extend(["--method", "transfer", "--iters", "20"]);
    let o = collector(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&o);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][2], "transfer");
    assert_eq!(r[0][4], "analytic");
    let value: f64 = r[0][3].parse().unwrap();
    let cert: f64 = r[0][5].parse().unwrap();
    assert!((value - 0.0199191).abs() <= cert, "value {value} cert {cert}");
    assert_eq!(r[0][6], "20");
}

#[test]
fn zero_investment_is_exactly_zero() {
    let o = collector(&["estimate", "--lambda", "0", "--theta", "0.5"]);
    assert!(o.status.success());
    let r = rows(&o);
    assert_eq!((r[0][2].as_str(), r[0][3].as_str(), r[0][4].as_str()), ("boundary", "0", "exact"));
}

#[test]
fn unknown_method_is_a_usage_error() {
    let o = collector(&["estimate", "--lambda", "0.3", "--theta", "0.3", "--method", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("possible values"));
}

#[test]
fn missing_policy_is_a_usage_error() {
    assert_eq!(collector(&["estimate", "--lambda", "0.3"]).status.code(), Some(2));
    assert_eq!(collector(&["estimate", "--lambda", "1.3", "--theta", "0.3"]).status.code(), Some(2));
}

#[test]
fn estimator_failure_is_numeric() {
    let o = collector(&["estimate", "--model", "gamma", "--lambda", "0.3", "--theta", "0.3", "--method", "transfer"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn resolution_one_is_rejected() {
    let o = collector(&["heatmap", "--resolution", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn smoke_grid_is_fast_and_complete() {
    let t0 = Instant::now();
    let o = collector(&["heatmap", "--resolution", "5"]);
    assert!(o.status.success());
    assert!(t0.elapsed().as_secs_f64() < 10.0);
    let r = rows(&o);
    assert_eq!(r.len(), 25);
    assert_eq!(r[0][0], r[0][1]);
    assert!(r.iter().all(|row| row.len() == 5 && row[2] != "nan"));
}

#[test]
fn same_seed_same_bytes() {
    let args = ["heatmap", "--resolution", "4", "--method", "direct", "--seed", "11", "--rel-tol", "1e-2"];
    let a = collector(&args);
    let b = collector(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut est = vec!["estimate", "--model", "gamma", "--method", "direct,ratio", "--seed", "3"];
    est.extend(STAR);
    let (c, d) = (collector(&est), collector(&est));
    assert!(c.status.success());
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "[stream]\nkind = \"bern\"\nseed = 21\n\n[policy]\nlambda = 0.3\ntheta = 0.4\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let seed_of = |o: Output| rows(&o)[0][7].clone();

    let run = |extra: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_collector"));
        c.arg("estimate").args(extra).env_remove("COLLECTOR_SEED");
        if let Some(v) = env {
            c.env("COLLECTOR_SEED", v);
        }
        c.output().unwrap()
    };
    assert_eq!(seed_of(run(&["--lambda", "0.3", "--theta", "0.4"], Some("5"))), "5");
    assert_eq!(seed_of(run(&["--config", cfg], Some("5"))), "21");
    assert_eq!(seed_of(run(&["--config", cfg, "--seed", "9"], Some("5"))), "9");
    assert_eq!(run(&["--lambda", "0.3", "--theta", "0.4"], Some("x")).status.code(), Some(2));
}

#[test]
fn config_file_drives_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let out = dir.path().join("out.csv");
    std::fs::write(
        &cfg,
        format!(
            "[stream]\nkind = \"bern\"\neps_low = 0.3\ndelta_low = 0.2\nhigh = 2.0\n\n\
             [policy]\nlambda = 0.265\ntheta = 0.284\n\n\
             [estimator]\nmethods = [\"transfer\", \"cf\"]\niters = 20\n\n\
             [output]\ncsv = \"{}\"\n",
            out.display()
        ),
    )
    .unwrap();
    let o = collector(&["estimate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let methods: Vec<&str> = text.lines().skip(2).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(methods, ["transfer", "cf"]);

    std::fs::write(&cfg, "[stream]\nkind = \"bern\"\ncolour = 3\n").unwrap();
    assert_eq!(collector(&["estimate", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn bounds_rows_share_the_estimate_schema() {
    let mut args = vec!["bounds"];
    args.extend(STAR);
    let o = collector(&args);
    assert!(o.status.success());
    let r = rows(&o);
    assert_eq!(r.len(), 10);
    assert!(r.iter().all(|row| row.len() == 8 && row[2].starts_with("bound:")));
    let get = |name: &str| -> f64 { r.iter().find(|row| row[2] == name).unwrap()[3].parse().unwrap() };
    assert!(get("bound:lower_art") < 0.0199 && get("bound:upper_spectral") > 0.0199);
}

#[test]
fn meanfield_conserves_at_gamma_one() {
    let o = collector(&["meanfield", "--lambda", "0.4", "--theta", "0.3", "--alpha", "2", "--beta", "0.5", "--steps", "30"]);
    assert!(o.status.success());
    let r = rows(&o);
    assert_eq!(r.len(), 31);
    for row in &r {
        let c: f64 = row[3].parse().unwrap();
        assert!((c - 3.0).abs() < 1e-12);
    }
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma = 1 limits"));
}

#[test]
fn heatmap_png_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let png = dir.path().join("nu.png");
    let csv = dir.path().join("nu.csv");
    let o = collector(&[
        "heatmap",
        "--resolution",
        "6",
        "--png",
        png.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(std::fs::read(&png).unwrap().starts_with(b"\x89PNG"));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 2 + 36);
}

#[test]
fn help_documents_every_column() {
    let o = collector(&["estimate", "--help"]);
    let text = stdout(&o);
    for col in ["lambda", "theta", "method", "value", "cert_type", "cert_value", "iterations", "seed", "nu", "cert", "iters"] {
        assert!(text.contains(col), "{col} undocumented");
    }
    assert!(text.contains("COLLECTOR_SEED") && text.contains("schema=1"));
}

#[test]
fn optimize_summary_is_structured() {
    let o = collector(&["optimize", "--resolution", "8", "--levels", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for key in ["[grid_argmax]", "[refined]", "[boundary]", "[kelly]", "[regime]", "decision ="] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn verify_exit_code_tracks_failures() {
    let o = collector(&["verify-paper"]);
    let text = stdout(&o);
    assert!(text.contains("[PASS]"));
    let code = if text.contains("[FAIL]") { 1 } else { 0 };
    assert_eq!(o.status.code(), Some(code));
}
