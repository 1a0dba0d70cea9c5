use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const ARTS_HEALTH: &str = "0 1\n0 2\n1 3\n1 4\n2 5\n2 6\n";
const TRAIN: &str = "3 0:2 1:1\n3 0:1 2:1\n4 3:2 4:1\n4 1:1 3:1\n5 5:2 6:1\n5 5:1 7:2\n6 6:1 8:3\n6 8:1 9:1\n";
const TEST: &str = "3 0:1 1:1\n4 3:2\n5 5:1 7:1\n6 8:2 9:1\n";

fn hierclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hierclass"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hierclass(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

struct Fixture {
    dir: TempDir,
    hierarchy: PathBuf,
    train: PathBuf,
    test: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        Fixture {
            hierarchy: write(dir.path(), "hierarchy.txt", ARTS_HEALTH),
            train: write(dir.path(), "train.txt", TRAIN),
            test: write(dir.path(), "test.txt", TEST),
            dir,
        }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }

    fn train(&self, strategy: &str, model: &str) -> String {
        ok(&[
            "train",
            "--hierarchy",
            &self.hierarchy.display().to_string(),
            "--train",
            &self.train.display().to_string(),
            "--model",
            &self.path(model),
            "--strategy",
            strategy,
        ])
    }
}

#[test]
fn train_writes_one_block_per_non_root_node() {
    let f = Fixture::new();
    let summary = f.train("ppath", "m.txt");
    let model = fs::read_to_string(f.path("m.txt")).unwrap();
    assert!(model.starts_with("hierclass-model 1\nkind hierarchical\n"));
    assert_eq!(model.lines().filter(|l| l.starts_with("node ")).count(), 6);
    assert_eq!(summary.lines().count(), 7);

    f.train("flat", "flat.txt");
    let flat = fs::read_to_string(f.path("flat.txt")).unwrap();
    assert_eq!(flat.lines().filter(|l| l.starts_with("node ")).count(), 4);
}

#[test]
fn same_seed_gives_identical_model_files() {
    let f = Fixture::new();
    f.train("ppath", "a.txt");
    f.train("ppath", "b.txt");
    assert_eq!(fs::read(f.path("a.txt")).unwrap(), fs::read(f.path("b.txt")).unwrap());
}

#[test]
fn single_leaf_flat_model_warns() {
    let dir = TempDir::new().unwrap();
    let h = write(dir.path(), "h.txt", "0 1\n");
    let t = write(dir.path(), "t.txt", "1 0:1\n1 1:2\n");
    let m = dir.path().join("m.txt");
    let out = hierclass(&[
        "train",
        "--hierarchy",
        h.to_str().unwrap(),
        "--train",
        t.to_str().unwrap(),
        "--model",
        m.to_str().unwrap(),
        "--strategy",
        "flat",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("SingleClassData"));
    let model = fs::read_to_string(m).unwrap();
    assert_eq!(model.lines().filter(|l| l.starts_with("node ")).count(), 1);
}

#[test]
fn predict_and_evaluate() {
    let f = Fixture::new();
    f.train("ppath", "m.txt");
    let m = f.path("m.txt");
    let test = f.test.display().to_string();

    let single = ok(&["predict", "--model", &m, "--test", &test]);
    assert_eq!(single.lines().count(), 4);
    assert!(single.lines().all(|l| !l.contains(' ')));
    let cascade = ok(&["predict", "--model", &m, "--test", &test, "--strategy", "cascade"]);
    assert_eq!(cascade.lines().count(), 4);

    let ranked = ok(&["predict", "--model", &m, "--test", &test, "--k-max", "3"]);
    for (a, b) in single.lines().zip(ranked.lines()) {
        assert_eq!(b.split(' ').next(), Some(a));
        assert_eq!(b.split(' ').count(), 3);
    }
    let preds = write(f.dir.path(), "preds.txt", &ranked);
    let report = ok(&[
        "evaluate",
        "--hierarchy",
        &f.hierarchy.display().to_string(),
        "--test",
        &test,
        "--predictions",
        preds.to_str().unwrap(),
        "--k-max",
        "3",
    ]);
    assert!(report.contains("accuracy="));
    assert!(report.contains("tree_induced_error="));
    assert!(report.contains("k,recall\n1,"));
}

#[test]
fn predict_on_empty_test_file_prints_nothing() {
    let f = Fixture::new();
    f.train("ppath", "m.txt");
    let empty = write(f.dir.path(), "empty.txt", "");
    let out = ok(&["predict", "--model", &f.path("m.txt"), "--test", empty.to_str().unwrap()]);
    assert!(out.is_empty());
}

#[test]
fn usage_errors_exit_one() {
    let f = Fixture::new();
    f.train("ppath", "m.txt");
    f.train("flat", "flat.txt");
    let test = f.test.display().to_string();
    let cases: [&[&str]; 4] = [
        &["predict", "--model", &f.path("m.txt"), "--test", &test, "--strategy", "cascade", "--k-max", "2"],
        &["predict", "--model", &f.path("m.txt"), "--test", &test, "--strategy", "flat"],
        &["predict", "--model", &f.path("flat.txt"), "--test", &test, "--strategy", "ppath"],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(hierclass(args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn data_errors_exit_two() {
    let f = Fixture::new();
    let bad_tree = write(f.dir.path(), "bad.txt", "0 1\n1 0\n");
    let out = hierclass(&[
        "train",
        "--hierarchy",
        bad_tree.to_str().unwrap(),
        "--train",
        f.train.to_str().unwrap(),
        "--model",
        &f.path("m.txt"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    let missing = hierclass(&["predict", "--model", &f.path("nope.txt"), "--test", f.test.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    ok(&args);
}

fn bench(dir: &Path, out: &Path) -> String {
    let s = |n: &str| dir.join(n).display().to_string();
    ok(&[
        "bench",
        "--hierarchy",
        &s("hierarchy.txt"),
        "--train",
        &s("train.txt"),
        "--test",
        &s("test.txt"),
        "--out",
        out.to_str().unwrap(),
    ])
}

fn report_rows(out: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(out.join("report.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn synth_is_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    synth(a.path(), &["--depth", "2", "--seed", "9"]);
    synth(b.path(), &["--depth", "2", "--seed", "9"]);
    for name in ["hierarchy.txt", "train.txt", "test.txt"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
}

#[test]
fn bench_writes_table_report_and_curves() {
    let data = TempDir::new().unwrap();
    synth(data.path(), &["--depth", "2", "--branching", "3", "--docs-per-leaf", "15"]);
    let out = data.path().join("bench");
    let table = bench(data.path(), &out);
    assert!(table.contains("Flat") && table.contains("Cascade") && table.contains("P_path"), "{table}");
    let rows = report_rows(&out);
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["flat", "cascade", "ppath"]);
    for name in ["recall_flat.csv", "recall_ppath.csv"] {
        let curve = fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(curve.lines().count(), 11);
    }
}

#[test]
fn star_hierarchy_collapses_all_strategies() {
    let data = TempDir::new().unwrap();
    synth(data.path(), &["--depth", "1", "--branching", "6", "--docs-per-leaf", "20", "--doc-length", "4"]);
    let out = data.path().join("bench");
    bench(data.path(), &out);
    let rows = report_rows(&out);
    assert_eq!(rows[0][1..], rows[1][1..]);
    assert_eq!(rows[1][1..], rows[2][1..]);
}

#[test]
fn noiseless_corpus_is_learned_perfectly() {
    let data = TempDir::new().unwrap();
    synth(data.path(), &["--depth", "2", "--branching", "3", "--noise", "0", "--docs-per-leaf", "20"]);
    let out = data.path().join("bench");
    bench(data.path(), &out);
    for row in report_rows(&out) {
        assert_eq!(row[1], "1", "{row:?}");
        assert_eq!(row[5], "0", "{row:?}");
    }
}

#[test]
fn help_exits_zero() {
    let out = hierclass(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("bench"));
}
