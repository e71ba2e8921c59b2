use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn linfam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linfam")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn literal(a: [u8; 4]) -> String {
    format!("q=2;n=2;m=2;rows={}{};{}{}", a[0], a[1], a[2], a[3])
}

fn all_2x2() -> impl Iterator<Item = [u8; 4]> {
    (0..16u8).map(|i| [i >> 3 & 1, i >> 2 & 1, i >> 1 & 1, i & 1])
}

fn family_file(dir: &Path, name: &str, keep: impl Fn(&[u8; 4]) -> bool) -> String {
    let mut text = String::from("2,2,2\n");
    for a in all_2x2().filter(|a| keep(a)) {
        text += &literal(a);
        text.push('\n');
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn count_examples() {
    let out = linfam(&["count", "--kind", "mqt", "--q", "2", "--n", "3", "--t", "1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["value"], "24");
    let out = linfam(&["count", "--kind", "gauss", "--m", "4", "--d", "2", "--q", "2"]);
    assert_eq!(json(&out)["value"], "35");
    let out = linfam(&["count", "--kind", "phi", "--m", "2", "--n", "2", "--t", "0", "--q", "2"]);
    assert_eq!(json(&out)["value"], "3/8");
    assert_eq!(code(&linfam(&["count", "--kind", "gauss", "--m", "4", "--d", "5", "--q", "2"])), 2);
    assert_eq!(code(&linfam(&["count", "--kind", "rank", "--q", "2"])), 2);
    assert_eq!(code(&linfam(&["count", "--kind", "gauss", "--m", "2", "--d", "1", "--q", "6"])), 2);
    assert_eq!(code(&linfam(&["count", "--kind", "nonsense", "--q", "2"])), 2);
}

#[test]
fn spectrum_examples() {
    let out = linfam(&["spectrum", "--q", "2", "--m", "1", "--n", "1", "--t", "0"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["trace_check"], true);
    assert_eq!(v["lambda"][1]["num"], "-1");
    assert_eq!(v["lambda"][1]["den"], "1");
    let v = json(&linfam(&["spectrum", "--q", "3", "--m", "1", "--n", "1", "--t", "0"]));
    assert_eq!((v["lambda"][1]["num"].as_str(), v["lambda"][1]["den"].as_str()), (Some("-1"), Some("2")));
}

#[test]
fn regularity_examples() {
    let dir = tempfile::tempdir().unwrap();
    let junta = dir.path().join("junta.json");
    let log = dir.path().join("log.json");
    let run = |family: &str, r: &str| {
        let out = linfam(&[
            "regularity", "--family", family, "--r", r, "--s", "1",
            "--junta-out", junta.to_str().unwrap(), "--log-out", log.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let comps: Value = serde_json::from_str(&fs::read_to_string(&junta).unwrap()).unwrap();
        let log: Value = serde_json::from_str(&fs::read_to_string(&log).unwrap()).unwrap();
        (json(&out), comps, log)
    };

    let full = family_file(dir.path(), "full.txt", |_| true);
    let (v, comps, tree) = run(&full, "1");
    assert_eq!(v["holds"], true);
    assert_eq!(comps.as_array().unwrap().len(), 1);
    assert_eq!(tree["root"]["status"], "good");
    assert!(tree["root"]["children"].as_array().unwrap().is_empty());

    // first column fixed to e1
    let coset = family_file(dir.path(), "coset.txt", |a| a[0] == 1 && a[2] == 0);
    let (v, comps, _) = run(&coset, "2");
    assert_eq!(v["verification"]["uncovered"], "0");
    assert_eq!(comps.as_array().unwrap().len(), 1);
    assert_eq!(comps[0]["cols"].as_array().unwrap().len(), 1);

    let empty = family_file(dir.path(), "empty.txt", |_| false);
    let (_, comps, _) = run(&empty, "2");
    assert!(comps.as_array().unwrap().is_empty());

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "2,2\n").unwrap();
    let out = linfam(&[
        "regularity", "--family", bad.to_str().unwrap(), "--r", "1", "--s", "1",
        "--junta-out", junta.to_str().unwrap(), "--log-out", log.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bootstrap_and_fourier() {
    let dir = tempfile::tempdir().unwrap();
    let coset = family_file(dir.path(), "coset.txt", |a| a[0] == 1 && a[2] == 0);
    let out = linfam(&["bootstrap", "--family", &coset, "--s", "1", "--alpha", "2"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["certified"], true);
    assert_eq!(v["chain"].as_array().unwrap().len(), 1);

    let func = dir.path().join("f.txt");
    let values: Vec<&str> = all_2x2().map(|a| if a[0] == 0 && a[2] == 0 { "1" } else { "0" }).collect();
    fs::write(&func, format!("2,2,2\n{}\n", values.join(" "))).unwrap();
    let f = func.to_str().unwrap();
    let out = linfam(&["fourier", "--input", f, "--d", "1", "--k", "4", "--s", "1", "--c", "4"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["degree"], 1);
    assert_eq!(v["coefficients"].as_array().unwrap().len(), 16);
    assert_eq!(v["hypercontractive"]["holds"], true);
    assert_eq!(v["projection"]["holds"], true);
    assert_eq!(code(&linfam(&["fourier", "--input", f, "--d", "3", "--k", "4"])), 2);
    // C = 3 is below the quasiregularity constant of this function
    assert_eq!(code(&linfam(&["fourier", "--input", f, "--s", "1", "--c", "3"])), 2);
}

#[test]
fn extremal_checks() {
    for args in [
        &["extremal", "--check", "canonical", "--q", "2", "--n", "3", "--t", "1"][..],
        &["extremal", "--check", "singer", "--q", "3", "--n", "2"],
        &["extremal", "--check", "sl", "--q", "3", "--n", "2", "--t", "1"],
        &["extremal", "--check", "derangement", "--q", "2", "--n", "3", "--t", "1"],
        &["extremal", "--check", "bound", "--q", "2", "--n", "2", "--mode", "exhaustive"],
        &["extremal", "--check", "bound", "--q", "2", "--n", "3", "--mode", "sample"],
    ] {
        let out = linfam(args);
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let v = json(&linfam(&["extremal", "--check", "bound", "--q", "2", "--n", "2"]));
    assert_eq!(v["value"], "2");
    assert_eq!(v["status"], "exploratory");
    assert_eq!(code(&linfam(&["extremal", "--check", "bound", "--q", "2", "--n", "2", "--mode", "guess"])), 2);
    assert_eq!(code(&linfam(&["--budget-items", "10", "extremal", "--check", "bound", "--q", "2", "--n", "3"])), 3);
}

#[test]
fn verify_suites() {
    let out = linfam(&["verify", "--suite", "spectra"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(lines.len() > 2);
    assert!(lines.iter().all(|l| l["pass"] == true));
    assert_eq!(code(&linfam(&["verify", "--suite", "bogus"])), 2);
}

#[test]
fn deterministic_across_thread_counts() {
    let one = linfam(&["--threads", "1", "verify", "--suite", "all"]);
    let many = linfam(&["--threads", "4", "verify", "--suite", "all"]);
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, many.stdout);
    let a = linfam(&["--threads", "1", "--seed", "3", "extremal", "--check", "derangement", "--q", "2", "--n", "4", "--t", "1"]);
    let b = linfam(&["--threads", "3", "--seed", "3", "extremal", "--check", "derangement", "--q", "2", "--n", "4", "--t", "1"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}
