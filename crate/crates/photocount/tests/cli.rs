use std::path::Path;
use std::process::{Command, Output};

fn photocount(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_photocount")).args(args).env_remove("PHOTOCOUNT_WORKERS").output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn pmf_is_normalized() {
    let out = photocount(&["pmf", "--lambda", "10", "--tau", "0.01"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("n,probability\n"));
    let total: f64 = column(&text, "probability").iter().sum();
    assert!((total - 1.0).abs() < 1e-6, "{total}");
}

#[test]
fn numbers_have_at_most_nine_significant_digits() {
    let text = stdout(&photocount(&["pmf", "--lambda", "10", "--tau", "0.01"]));
    for line in text.lines().skip(1) {
        let p = line.split(',').nth(1).unwrap();
        let mantissa = p.split('e').next().unwrap();
        let digits = mantissa.chars().filter(char::is_ascii_digit).collect::<String>();
        assert!(digits.trim_start_matches('0').len() <= 9, "{p}");
    }
}

#[test]
fn breakdown_exits_with_three_and_names_the_flag() {
    let out = photocount(&["pmf", "--lambda", "60", "--tau", "0.01"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda_tau_gate"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "lambda = 10\nbogus = 1\n").unwrap();
    let bad_key = photocount(&["pmf", "--tau", "0.01", "--config", cfg.to_str().unwrap()]);
    assert_eq!(bad_key.status.code(), Some(2));
    assert_eq!(photocount(&["ber", "--preset", "fig3"]).status.code(), Some(2));
    assert_eq!(photocount(&["pmf", "--tau", "0.01"]).status.code(), Some(2));
    assert_eq!(photocount(&["pmf", "--lambda", "-1", "--tau", "0.01"]).status.code(), Some(2));
    assert_eq!(photocount(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# dead-time run\nlambda = 10\ntau = 0.02\n").unwrap();
    let from_file = stdout(&photocount(&["pmf", "--config", cfg.to_str().unwrap()]));
    let direct = stdout(&photocount(&["pmf", "--lambda", "10", "--tau", "0.02"]));
    assert_eq!(from_file, direct);
    let overridden = stdout(&photocount(&["pmf", "--config", cfg.to_str().unwrap(), "--tau", "0.01"]));
    assert_eq!(overridden, stdout(&photocount(&["pmf", "--lambda", "10", "--tau", "0.01"])));
}

#[test]
fn out_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/moments.csv");
    let args = ["moments", "--lambda", "10", "--T", "0.01", "--tau", "0.01", "--trials", "2000", "--seed", "5"];
    let run = photocount(&[&args[..], &["--out", out.to_str().unwrap()]].concat());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(run.stdout.is_empty());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("model,mean,variance"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(Path::new(&format!("{}.manifest.json", out.display()))).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "moments");
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["trials"], 2000);
    assert_eq!(manifest["params"]["lambda"], 10.0);
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let base = ["sweep-sampling", "--lambda", "10", "--tau-list", "0.01,0.02", "--T-list", "0.005,0.01", "--trials", "20000"];
    let one = photocount(&[&base[..], &["--workers", "1"]].concat());
    let four = photocount(&[&base[..], &["--workers", "4"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let other_seed = photocount(&[&base[..], &["--workers", "1", "--seed", "2"]].concat());
    assert_ne!(one.stdout, other_seed.stdout);
}

#[test]
fn fit_reads_a_histogram_file() {
    let dir = tempfile::tempdir().unwrap();
    let hist = dir.path().join("hist.csv");
    std::fs::write(&hist, "n,count\n0,10\n1,40\n2,30\n3,20\n").unwrap();
    let out = photocount(&["fit", "--input", hist.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(column(&text, "trials"), vec![100.0]);
    assert!((column(&text, "mean")[0] - 1.6).abs() < 1e-12);
}

#[test]
fn presets_are_listed() {
    let text = stdout(&photocount(&["presets"]));
    for name in ["fig3", "fig7", "fig9", "fig11"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn preset_runs_with_reduced_trials() {
    let out = photocount(&["sweep-noise", "--preset", "fig5", "--trials", "2000", "--sigma-list", "0.1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 1 + 3);
}
