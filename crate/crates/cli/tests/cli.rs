use std::path::{Path, PathBuf};
use std::process::Command;

use clap::Parser;
use tempfile::TempDir;

use ressize::commands::{run, Cli, Outcome};
use ressize::report::RunReport;

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn default_config() -> PathBuf {
    scenario_dir().join("default.toml")
}

fn run_args(args: &[&str]) -> (Outcome, String) {
    let cli = Cli::try_parse_from(std::iter::once("ressize").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    let outcome = run(cli, &mut out).unwrap();
    (outcome, String::from_utf8(out).unwrap())
}

fn report_of(o: Outcome) -> RunReport {
    match o {
        Outcome::Simulate(r) | Outcome::Optimize(r) | Outcome::Compare(r) => *r,
        Outcome::Synth { .. } => panic!("no report"),
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ressize"))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synth_climates_and_determinism() {
    let dir = TempDir::new().unwrap();
    let (trop, _) = run_args(&["synth", "--seed", "7", "--out", p(&dir.path().join("a"))]);
    let (sub, table) = run_args(&["synth", "--pv-profile", "subtropical", "--out", p(&dir.path().join("b"))]);
    let ratio = |pv: &[f64; 12]| {
        let max = pv.iter().cloned().fold(f64::MIN, f64::max);
        let min = pv.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    };
    let Outcome::Synth { pv_monthly: t, .. } = trop else { panic!() };
    let Outcome::Synth { pv_monthly: s, .. } = sub else { panic!() };
    assert!(ratio(&t) < 1.5, "tropical ratio {}", ratio(&t));
    assert!(ratio(&s) >= 3.0, "subtropical ratio {}", ratio(&s));
    // southern-hemisphere summer: December and January beat June and July
    assert!(s[0].min(s[11]) > s[5].max(s[6]));
    assert!(table.contains("pv max/min monthly ratio"));

    run_args(&["synth", "--seed", "7", "--out", p(&dir.path().join("c"))]);
    for f in ["pv.csv", "load.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let c = std::fs::read(dir.path().join("c").join(f)).unwrap();
        assert_eq!(a, c, "{f}");
    }
    let head = std::fs::read_to_string(dir.path().join("a/pv.csv")).unwrap();
    assert!(head.starts_with("timestamp,power_kw\n2018-01-01T00:00:00,"));
}

#[test]
fn synth_files_feed_a_scenario() {
    let dir = TempDir::new().unwrap();
    run_args(&["synth", "--seed", "1", "--out", p(dir.path())]);
    let text = std::fs::read_to_string(default_config()).unwrap();
    let start = text.find("[profiles.pv]").unwrap();
    let end = text.find("# Time-of-use").unwrap();
    let files = format!(
        "{}[profiles.pv]\nsource = \"file\"\npath = \"pv.csv\"\nbase_kwp = 1.0\n\n[profiles.load]\nsource = \"file\"\npath = \"load.csv\"\n\n{}",
        &text[..start],
        &text[end..]
    );
    let cfg = dir.path().join("files.toml");
    std::fs::write(&cfg, files).unwrap();
    // pv.csv is the output of a 1 kWp plant, so 1027.4 kWp here equals the
    // 1.5 GWh reference plant of the synthetic scenario.
    let kwp = 1.5e6 / 1460.0;
    let sizing = format!("kind=battery,pv_kwp={kwp},battery_kwh=800");
    let (a, _) = run_args(&["simulate", "--config", p(&cfg), "--sizing", &sizing]);
    let (b, _) = run_args(&["simulate", "--config", p(&default_config()), "--sizing", &sizing]);
    let (a, b) = (report_of(a), report_of(b));
    let (ea, eb) = (a.economics.unwrap(), b.economics.unwrap());
    assert!((ea.ssr - eb.ssr).abs() < 1e-9, "{} vs {}", ea.ssr, eb.ssr);
    assert!((ea.npv - eb.npv).abs() < 1e-6 * eb.npv.abs());
}

#[test]
fn zero_sizing_prints_zero() {
    let (o, text) = run_args(&["simulate", "--config", p(&default_config()), "--sizing", "kind=none"]);
    assert!(text.contains("NPV: 0.00\n"), "{text}");
    assert!(text.contains("SSR: 0.000000\n"), "{text}");
    let e = report_of(o).economics.unwrap();
    assert_eq!((e.npv, e.npc, e.ssr), (0.0, 0.0, 0.0));
}

#[test]
fn olds_with_battery_is_a_config_error() {
    let out = bin()
        .args(["simulate", "--config", p(&default_config()), "--strategy", "olds", "--sizing"])
        .arg("kind=battery,pv_kwp=1000,battery_kwh=500")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hydrogen"));
}

#[test]
fn bad_config_exits_2_with_field_path() {
    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(default_config()).unwrap().replace("budget = 2000", "budget = \"lots\"");
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = bin()
        .args(["optimize", "--config", p(&cfg), "--budget", "50"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("optimizer.budget"));

    let out = bin()
        .args(["optimize", "--config", p(&default_config()), "--case", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = bin()
        .args(["synth", "--out", p(&blocker.join("sub"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn hydrogen_sizing_file_ledger_reaudits() {
    let dir = TempDir::new().unwrap();
    let sizing = dir.path().join("case2.toml");
    std::fs::write(
        &sizing,
        "kind = \"hydrogen\"\npv_kwp = 3000.0\nel_kw = 700.0\ntank_kg = 300.0\nfc_kw = 250.0\n",
    )
    .unwrap();
    let ledger = dir.path().join("ledger.csv");
    let (o, text) = run_args(&[
        "simulate",
        "--config",
        p(&default_config()),
        "--sizing",
        p(&sizing),
        "--ledger-out",
        p(&ledger),
    ]);
    assert!(text.contains("ledger audit: pass"));
    let report = report_of(o);
    assert!(report.audit.unwrap().passed);

    let mut r = csv::Reader::from_path(&ledger).unwrap();
    let h = r.headers().unwrap().clone();
    let col = |name: &str| h.iter().position(|c| c == name).unwrap();
    let (load, pvl, del, imp, prod, cons, lvl) = (
        col("load"),
        col("pv_to_load"),
        col("delivered"),
        col("import"),
        col("h2_produced"),
        col("h2_consumed"),
        col("level"),
    );
    let mut mass = 0.0f64;
    let mut rows = 0;
    let mut produced = 0.0;
    for rec in r.records() {
        let rec = rec.unwrap();
        let f = |i: usize| rec[i].parse::<f64>().unwrap();
        let rhs = 0.97 * (f(pvl) + f(del)) + f(imp);
        assert!((f(load) - rhs).abs() <= 1e-9 * f(load));
        mass += f(prod) - f(cons);
        assert!((mass - f(lvl)).abs() <= 1e-9 * f(lvl).max(1e-3), "row {rows}");
        mass = f(lvl);
        produced += f(prod);
        rows += 1;
    }
    assert_eq!(rows, 25 * 8760);
    assert!(produced > 0.0);
}

#[test]
fn olds_with_zero_limits_prints_cs_results() {
    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(default_config()).unwrap();
    let olds = dir.path().join("olds.toml");
    std::fs::write(&olds, text.replace("mode = \"cs\"", "mode = \"olds\"")).unwrap();
    let (_, a) = run_args(&["simulate", "--config", p(&default_config())]);
    let (_, b) = run_args(&["simulate", "--config", p(&olds)]);
    assert_eq!(a, b);
    let (_, c) = run_args(&["simulate", "--config", p(&default_config()), "--strategy", "olds"]);
    assert_eq!(a, c);
}

fn csv_header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(String::from).collect()
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let i = r.headers().unwrap().iter().position(|c| c == name).unwrap();
    r.records().map(|x| x.unwrap()[i].parse().unwrap()).collect()
}

#[test]
fn optimize_case3_has_eight_variables_and_respects_min_ssr() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("c3.csv");
    let (o, text) = run_args(&[
        "optimize",
        "--config",
        p(&default_config()),
        "--case",
        "3",
        "--budget",
        "160",
        "--min-ssr",
        "0.8",
        "--out",
        p(&out),
    ]);
    let header = csv_header(&out);
    assert_eq!(
        header,
        [
            "pv_kwp",
            "el_kw",
            "tank_kg",
            "fc_kw",
            "t_start",
            "t_end",
            "limit_sunny",
            "limit_cloudy",
            "npv",
            "ssr",
            "rank"
        ]
    );
    let ssr = csv_column(&out, "ssr");
    assert!(!ssr.is_empty(), "{text}");
    assert!(ssr.iter().all(|&s| s >= 0.8));
    assert!(ssr.windows(2).all(|w| w[0] <= w[1]), "sorted by SSR");
    assert!(text.contains("max NPV:") && text.contains("max SSR:"));
    let report = report_of(o);
    assert_eq!(report.archives[0].evaluations, 160);
    assert!(dir.path().join("c3_telemetry.csv").is_file());
    assert!(dir.path().join("c3_report.json").is_file());
}

#[test]
fn optimize_is_deterministic_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    let mut digests = Vec::new();
    for (name, threads) in [("a.csv", "1"), ("b.csv", "1"), ("c.csv", "3")] {
        let (o, _) = run_args(&[
            "--threads",
            threads,
            "optimize",
            "--config",
            p(&default_config()),
            "--algo",
            "momfa",
            "--seed",
            "1",
            "--budget",
            "120",
            "--out",
            p(&dir.path().join(name)),
        ]);
        digests.push(report_of(o).scenario_digest);
    }
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.csv"), read("c.csv"));
    assert_eq!(read("a_telemetry.csv"), read("c_telemetry.csv"));
    assert!(digests.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn compare_writes_ten_archives_and_medians() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cmp");
    let (o, text) = run_args(&[
        "compare",
        "--config",
        p(&default_config()),
        "--budget",
        "90",
        "--runs",
        "5",
        "--out",
        p(&out),
    ]);
    let archives: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.contains("_run") && n.ends_with(".csv"))
        .collect();
    assert_eq!(archives.len(), 10);
    let report = report_of(o);
    assert_eq!(report.archives.len(), 10);
    assert!(report.archives.iter().all(|a| a.evaluations == 90));
    let seeds: std::collections::BTreeSet<u64> = report.archives.iter().map(|a| a.seed).collect();
    assert_eq!(seeds.len(), 5);

    let mut r = csv::Reader::from_path(out.join("summary.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 12);
    for algo in ["momfa", "nsga2"] {
        let hv: Vec<f64> = rows
            .iter()
            .filter(|x| &x[0] == algo && &x[1] != "median")
            .map(|x| x[5].parse().unwrap())
            .collect();
        let median_row = rows.iter().find(|x| &x[0] == algo && &x[1] == "median").unwrap();
        let mut sorted = hv.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(median_row[5].parse::<f64>().unwrap(), sorted[2]);
    }
    assert!(text.contains("median_hypervolume"));
    assert!(out.join("fronts.csv").is_file());
}

#[test]
fn env_out_dir_is_used_for_relative_outputs() {
    let dir = TempDir::new().unwrap();
    let status = bin()
        .env("RESSIZE_OUT_DIR", dir.path())
        .args(["synth", "--out", "profiles"])
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(dir.path().join("profiles/pv.csv").is_file());
}
