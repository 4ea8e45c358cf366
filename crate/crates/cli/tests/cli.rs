use std::fs;
use std::process::{Command, Output};

fn ldp_topk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldp-topk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_passes() {
    let o = ldp_topk(&["verify"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("PASS"));
    assert!(!out.contains("FAIL"));
}

#[test]
fn topk_noiseless_prints_ranked_table() {
    let o = ldp_topk(&["topk", "--scheme", "bdr", "--epsilon", "noiseless", "--n", "5000", "--k", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("ndcg"), "{out}");
}

#[test]
fn gen_then_run_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("stream.txt");
    let csv = dir.path().join("rows.csv");
    let o = ldp_topk(&["gen", "--n", "3000", "--domain", "200", "--seed", "3", "--out", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&data).unwrap().lines().count(), 3000);

    let o = ldp_topk(&[
        "run", "--dataset", data.to_str().unwrap(), "--scheme", "bgr,cnr", "--epsilon", "2",
        "--trials", "2", "--k", "5", "--no-timing", "--out", csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("row,scheme,epsilon,split,k,dataset,trial,seed"));
    // two trial rows and a mean row per scheme
    assert_eq!(lines.count(), 6);
}

#[test]
fn bad_arguments_exit_with_error() {
    let o = ldp_topk(&["topk", "--scheme", "nope"]);
    assert!(!o.status.success());
    let o = ldp_topk(&["topk", "--k", "0", "--n", "100"]);
    assert_eq!(o.status.code(), Some(2));
}
