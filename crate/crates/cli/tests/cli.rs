use std::path::Path;
use std::process::{Command, Output};

use cca_core::dataset::{generate_synthetic, RecipeId, SyntheticRecipe};
use cca_core::linear::{fit, Solver};
use serde_json::Value;

fn cca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cca"))
        .args(args)
        .env_remove("CCA_SEED")
        .output()
        .expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_shapes() {
    let tmp = tempfile::tempdir().unwrap();
    for (recipe, seed, n, p, q) in [("example9", "1", 50, 100, 150), ("example7", "3", 150, 7, 8)] {
        let out = tmp.path().join(recipe);
        let o = cca(&["simulate", "--recipe", recipe, "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        let (ha, a) = read_csv(&out.join("view_a.csv"));
        let (hb, b) = read_csv(&out.join("view_b.csv"));
        assert_eq!((a.len(), ha.len()), (n, p));
        assert_eq!((b.len(), hb.len()), (n, q));
        assert!(a.iter().chain(&b).all(|r| r.iter().all(|v| v.is_finite())));
    }
}

#[test]
fn simulated_files_refit_like_memory() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    let res = tmp.path().join("fit");
    assert!(cca(&["simulate", "--recipe", "example1", "--seed", "11", "--out", sim.to_str().unwrap()])
        .status
        .success());
    let o = cca(&[
        "fit",
        "--view-a",
        sim.join("view_a.csv").to_str().unwrap(),
        "--view-b",
        sim.join("view_b.csv").to_str().unwrap(),
        "--out",
        res.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let d = generate_synthetic(&SyntheticRecipe::preset(RecipeId::Example1, 11)).unwrap();
    let model = fit(&d, Solver::Svd, 3).unwrap();
    let rep = report(&res);
    let corr: Vec<f64> = serde_json::from_value(rep["results"]["correlations"].clone()).unwrap();
    for (a, b) in corr.iter().zip(model.correlations.iter()) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    let text = std::fs::read_to_string(res.join("weights_a.csv")).unwrap();
    let wa: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).map(|c| c.parse().unwrap()).collect())
        .collect();
    for (i, row) in wa.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert!((v - model.weights_a[(i, j)]).abs() < 1e-12);
        }
    }
}

#[test]
fn mismatched_rows_name_both_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    std::fs::write(&a, "x,y\n1,2\n3,5\n4,4\n7,1\n").unwrap();
    std::fs::write(&b, "u\n1\n2\n3\n").unwrap();
    let out = tmp.path().join("out");
    let o = cca(&["fit", "--view-a", a.to_str().unwrap(), "--view-b", b.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains('4') && msg.contains('3'), "{msg}");
    assert!(!out.exists());
}

#[test]
fn unknown_recipe_lists_valid_ids() {
    let tmp = tempfile::tempdir().unwrap();
    let o = cca(&["simulate", "--recipe", "example99", "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    for id in RecipeId::ALL {
        assert!(msg.contains(id.as_str()), "{msg}");
    }
}

#[test]
fn singular_view_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("e6");
    let o = cca(&["fit", "--recipe", "example6", "--seed", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!out.exists());
    let o = cca(&["fit", "--recipe", "example6", "--seed", "2", "--c1", "0.09", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();
    for args in [
        vec!["cv", "--recipe", "example1", "--grid-c1", "log:1:0:3", "--out", out],
        vec!["cv", "--recipe", "example1", "--grid-c1", "cubic:1:2:3", "--out", out],
        vec!["fit", "--out", out],
        vec!["fit", "--recipe", "example1", "--view-a", "a.csv", "--out", out],
        vec!["test", "--recipe", "example1", "--holdout", "1.5", "--out", out],
        vec!["biplot", "--recipe", "example1", "--images", "1", "--out", out],
        vec!["fit", "--recipe", "example1", "--short-flag-typo", "--out", out],
    ] {
        let o = cca(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    assert!(!Path::new(out).exists());
}

#[test]
fn reports_are_deterministic_except_timing() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = tmp.path().join(name);
        let o = cca(&[
            "cv", "--recipe", "example1", "--seed", "5", "--grid-c1", "log:1e-3:1:4", "--grid-c2", "lin:0:0.5:3",
            "--folds", "3", "--repetitions", "2", "--threads", threads, "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let mut rep = report(&out);
        rep.as_object_mut().unwrap().remove("timing_seconds");
        let surface = std::fs::read(out.join("cv_surface.csv")).unwrap();
        (serde_json::to_string(&rep).unwrap(), surface)
    };
    let a = run("a", "1");
    let b = run("b", "3");
    assert_eq!(a, b);
}

#[test]
fn seed_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_cca"))
        .args(["simulate", "--recipe", "example1", "--out", out.to_str().unwrap()])
        .env("CCA_SEED", "42")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(report(&out)["seed"], 42);
}

#[test]
fn kernel_and_sparse_commands_write_side_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &[&str]); 4] = [
        (&["kcca", "--recipe", "example7", "--c1", "1.5", "--c2", "0.6"], &["dual_weights.csv", "images.csv", "relations_a.csv"]),
        (&["pmd", "--recipe", "example9"], &["sparse_weights_a.csv", "sparse_weights_b.csv"]),
        (&["pdscca", "--recipe", "example10", "--basis", "3"], &["w_a.csv", "beta.csv"]),
        (&["test", "--recipe", "example1", "--holdout", "0.3"], &["significance.csv"]),
    ];
    for (i, (args, files)) in cases.iter().enumerate() {
        let out = tmp.path().join(i.to_string());
        let mut all = args.to_vec();
        all.extend(["--out", out.to_str().unwrap()]);
        let o = cca(&all);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        let rep = report(&out);
        for f in *files {
            assert!(out.join(f).exists(), "{f}");
            assert!(rep["outputs"].as_array().unwrap().iter().any(|v| v == f));
        }
    }
}
