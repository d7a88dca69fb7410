use std::path::Path;
use std::process::{Command, Output};

use featsel::cli::read_matrix_csv;
use featsel::kmeans::{brute_force_optimal, Clustering};
use serde_json::Value;
use tempfile::TempDir;

fn featsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_featsel")).args(args).output().expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn synth(dir: &TempDir, name: &str, m: &str, n: &str, k: &str, noise: &str, seed: &str) -> String {
    let out = path(dir, name);
    let o = featsel(&["synth", "--m", m, "--n", n, "--k", k, "--separation", "10", "--noise", noise, "--seed", seed, "--output", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

#[test]
fn synth_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = synth(&dir, "a.csv", "30", "6", "3", "1", "7");
    let b = synth(&dir, "b.csv", "30", "6", "3", "1", "7");
    let c = synth(&dir, "c.csv", "30", "6", "3", "1", "8");
    let read = |p: &str| std::fs::read(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert_eq!(read(&format!("{a}.labels")), read(&format!("{b}.labels")));
}

#[test]
fn separated_blobs_recovered_by_brute_force() {
    let dir = TempDir::new().unwrap();
    let csv = synth(&dir, "d.csv", "9", "4", "3", "0.05", "3");
    let a = read_matrix_csv(std::fs::File::open(&csv).unwrap(), false).unwrap();
    let labels: Vec<usize> = std::fs::read_to_string(format!("{csv}.labels"))
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    let truth = Clustering::from_one_based(3, &labels).unwrap();
    let found = brute_force_optimal(&a, 3).unwrap();
    // Same partition up to label permutation.
    for i in 0..9 {
        for j in 0..9 {
            let same_truth = truth.assignment()[i] == truth.assignment()[j];
            assert_eq!(same_truth, found.assignment()[i] == found.assignment()[j]);
        }
    }
}

#[test]
fn unsupervised_select_report() {
    let dir = TempDir::new().unwrap();
    let csv = synth(&dir, "d.csv", "50", "30", "3", "1", "11");
    let o = featsel(&["select", "--input", &csv, "--k", "3", "--r", "9", "--output", "-"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["bound_holds"], true);
    assert_eq!(r["selection"]["method"], "unsupervised");
    assert_eq!(r["selection"]["plan"]["target_dim"], 9);
    assert_eq!(r["clustering"]["assignment"].as_array().unwrap().len(), 50);
}

#[test]
fn reports_are_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let csv = synth(&dir, "d.csv", "40", "25", "2", "1", "5");
    let out1 = path(&dir, "r1.json");
    let out2 = path(&dir, "r2.json");
    for out in [&out1, &out2] {
        let o = featsel(&["select", "--input", &csv, "--method", "randomized", "--k", "2", "--r", "5", "--seed", "9", "--output", out]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
}

#[test]
fn supervised_select_with_labels_and_brute_backend() {
    let dir = TempDir::new().unwrap();
    let csv = synth(&dir, "d.csv", "10", "8", "2", "2", "1");
    let labels = format!("{csv}.labels");
    let o = featsel(&["select", "--input", &csv, "--labels", &labels, "--method", "supervised", "--k", "2", "--r", "4", "--backend", "brute"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["bound_holds"], true);
    assert_eq!(r["gamma_certified"], true);
    assert_eq!(r["reference_kind"], "given_partition");
}

#[test]
fn header_row_is_skipped() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "h.csv");
    std::fs::write(&csv, "f1,f2,f3\n0,0,1\n0,2,1\n10,0,1\n10,2,1\n").unwrap();
    let o = featsel(&["cluster", "--input", &csv, "--has-header", "--k", "2", "--backend", "brute"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["clustering"]["objective"], 4.0);
    assert_eq!(featsel(&["cluster", "--input", &csv, "--k", "2"]).status.code(), Some(1));
}

#[test]
fn validation_failures_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let csv = synth(&dir, "d.csv", "20", "10", "2", "1", "2");
    let k_ge_r = featsel(&["select", "--input", &csv, "--k", "4", "--r", "4"]);
    assert_eq!(k_ge_r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&k_ge_r.stderr).contains("k < r"));

    let no_labels = featsel(&["select", "--input", &csv, "--method", "supervised", "--k", "2", "--r", "4"]);
    assert_eq!(no_labels.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&no_labels.stderr).contains("--labels"));

    let brute = featsel(&["select", "--input", &csv, "--k", "2", "--r", "4", "--backend", "brute"]);
    assert_eq!(brute.status.code(), Some(1));

    assert_eq!(featsel(&["select", "--input", &csv, "--k", "2"]).status.code(), Some(1));
    assert_eq!(featsel(&["verify", "--suite", "no-such-suite"]).status.code(), Some(1));
}

#[test]
fn missing_input_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let missing = path(&dir, "absent.csv");
    assert!(!Path::new(&missing).exists());
    assert_eq!(featsel(&["select", "--input", &missing, "--k", "1", "--r", "2"]).status.code(), Some(3));
    let unwritable = path(&dir, "no/such/dir/out.csv");
    assert_eq!(featsel(&["synth", "--m", "4", "--n", "2", "--k", "2", "--output", &unwritable]).status.code(), Some(3));
}

#[test]
fn verify_suites_report_counts() {
    let o = featsel(&["verify", "--suite", "sampler-one-bounds", "--trials", "50"]);
    assert!(o.status.success());
    let r = json(&o);
    assert_eq!(r["passed"], 50);
    assert_eq!(r["succeeded"], true);

    let o = featsel(&["verify", "--suite", "randomized-sampling-tail", "--trials", "100", "--seed", "3"]);
    assert!(o.status.success());
    assert!(json(&o)["passed"].as_u64().unwrap() >= 85);
}
