use std::path::Path;
use std::process::{Command, Output};

fn singcubic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_singcubic")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_to(dir: &Path, name: &str, extra: &[&str]) -> (Output, String) {
    let out = dir.join(name);
    let mut args = vec!["run", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = singcubic(&args);
    let csv = std::fs::read_to_string(&out).unwrap_or_default();
    (o, csv)
}

#[test]
fn unknown_algorithm_is_a_usage_error() {
    let o = singcubic(&["run", "--problem", "quadratic", "--algo", "newton"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown algorithm"));
}

#[test]
fn malformed_flags_are_usage_errors() {
    assert_eq!(singcubic(&["run", "--epochs", "many", "--problem", "quadratic"]).status.code(), Some(2));
    assert_eq!(singcubic(&["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(singcubic(&["run", "--problem", "convex"]).status.code(), Some(2));
    assert_eq!(singcubic(&["run", "--dataset", "/nonexistent/a9a"]).status.code(), Some(2));
}

#[test]
fn synthetic_quadratic_converges() {
    let dir = tempfile::tempdir().unwrap();
    let (o, csv) = run_to(dir.path(), "t.csv", &["--problem", "quadratic", "--n", "50", "--p", "10", "--algo", "singcubic"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = String::from_utf8(o.stdout).unwrap();
    let grad: f64 = summary.lines().find_map(|l| l.strip_prefix("grad_norm = ")).unwrap().parse().unwrap();
    assert!(grad <= 1e-6, "{summary}");
    assert!(csv.starts_with("iter,effective_epochs,objective,grad_norm,sigma,rho,accepted,wall_time_s\n"));
    assert!(!csv.contains('\r'));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--problem",
        "quadratic",
        "--n",
        "200",
        "--p",
        "5",
        "--algo",
        "sgd",
        "--epochs",
        "5",
        "--seed",
        "7",
        "--batch-frac",
        "0.05",
    ];
    let (a, csv_a) = run_to(dir.path(), "a.csv", &args);
    let (b, csv_b) = run_to(dir.path(), "b.csv", &args);
    assert!(a.status.success() && b.status.success());
    assert!(csv_a.lines().count() > 10);
    assert_eq!(csv_a, csv_b);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "problem = quadratic\nalgo = sgd\nepochs = 2\nn = 20\np = 2\n").unwrap();
    let (o, csv) = run_to(dir.path(), "t.csv", &["--config", cfg.to_str().unwrap(), "--algo", "saga"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().contains("algo = saga"));
    // saga rows carry no sigma or rho
    assert!(csv.lines().nth(2).unwrap().split(',').nth(5) == Some(""));
}

#[test]
fn divergence_exits_nonzero_and_keeps_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (o, csv) = run_to(
        dir.path(),
        "t.csv",
        &["--problem", "quadratic", "--algo", "sgd", "--lr", "5", "--epochs", "1000", "--batch-frac", "1"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("diverged"));
    assert!(csv.lines().count() > 2);
}

#[test]
fn libsvm_dataset_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("tiny.svm");
    let rows: String = (0..40)
        .map(|i| format!("{} {}:1 {}:{}\n", if i % 3 == 0 { "+1" } else { "-1" }, 1 + i % 4, 5 + i % 3, 0.5 + (i % 5) as f64))
        .collect();
    std::fs::write(&data, rows).unwrap();
    for algo in ["singcubic", "scr", "tr", "sgd", "saga"] {
        let (o, csv) = run_to(
            dir.path(),
            &format!("{algo}.csv"),
            &[
                "--dataset",
                data.to_str().unwrap(),
                "--problem",
                "nonconvex",
                "--algo",
                algo,
                "--epochs",
                "3",
                "--batch-frac",
                "0.1",
                "--scale-features",
            ],
        );
        assert!(o.status.success(), "{algo}: {}", stderr(&o));
        assert!(csv.lines().count() >= 2);
    }
    let bad = singcubic(&["run", "--dataset", data.to_str().unwrap(), "--labels", "1:1"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("-1"));
}

#[test]
fn compare_tables() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--problem", "quadratic", "--n", "50", "--p", "10", "--epochs", "6", "--seed", "3"];
    let sc = dir.path().join("singcubic.csv");
    let sgd = dir.path().join("sgd.csv");
    let (o, _) = run_to(dir.path(), "singcubic.csv", &[&common[..], &["--algo", "singcubic"]].concat());
    assert!(o.status.success());
    let (o, _) = run_to(dir.path(), "sgd.csv", &[&common[..], &["--algo", "sgd", "--batch-frac", "0.1"]].concat());
    assert!(o.status.success());

    let same = singcubic(&["compare", sc.to_str().unwrap(), sc.to_str().unwrap()]);
    assert!(same.status.success());
    let table = String::from_utf8(same.stdout).unwrap();
    for line in table.lines().skip(1).filter(|l| !l.starts_with("best")) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[1], f[2]);
    }

    let both = singcubic(&["compare", sc.to_str().unwrap(), sgd.to_str().unwrap()]);
    assert!(both.status.success());
    let table = String::from_utf8(both.stdout).unwrap();
    let best: Vec<f64> = table
        .lines()
        .filter_map(|l| l.rsplit_once(',').filter(|_| l.starts_with("best")).map(|(_, v)| v.parse().unwrap()))
        .collect();
    assert_eq!(best.len(), 2);
    assert!(best[0] <= best[1]);

    let broken = dir.path().join("broken.csv");
    std::fs::write(&broken, "iter,objective\n0,1\n").unwrap();
    let o = singcubic(&["compare", sc.to_str().unwrap(), broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("broken.csv"));
}
