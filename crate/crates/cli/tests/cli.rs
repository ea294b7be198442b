use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use covergame_cli::gamefile::GameFile;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_covergame"));
    c.env_remove("COVERGAME_CAP");
    c
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("covergame-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn rows(csv_text: &str) -> Vec<HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| headers.iter().zip(rec.unwrap().iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        .collect()
}

fn generate(path: &Path, args: &[&str]) {
    let mut all = vec!["generate"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", path.to_str().unwrap()]);
    ok(&all);
}

fn write(name: &str, text: &str) -> PathBuf {
    let p = tmp(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn voip_tight_file_shape() {
    let text = ok(&["generate", "voip-tight", "--r", "3"]);
    let file = GameFile::from_json(&text).unwrap();
    assert_eq!(file.agents, vec![vec![vec![0], vec![1], vec![2]]]);
    assert_eq!(file.support.len(), 3);
    for (k, point) in file.support.iter().enumerate() {
        let hot: Vec<usize> = point.values.iter().enumerate().filter(|(_, v)| *v == "1/1").map(|(i, _)| i).collect();
        assert_eq!(hot, vec![k]);
        assert_eq!(point.prob, "1/3");
    }
}

#[test]
fn every_generator_round_trips() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["voip-tight", "--r", "4"],
        vec!["voim-tight", "--eps", "1/3", "--p", "2/5"],
        vec!["gairing-tight", "--n", "3", "--eps", "1/50"],
        vec!["random", "--agents", "3", "--resources", "4", "--support", "3", "--rule", "g"],
        vec!["random", "--seed", "9", "--prior", "random", "--policy", "none"],
    ];
    for args in cases {
        let mut all = vec!["generate"];
        all.extend_from_slice(&args);
        let text = ok(&all);
        let file = GameFile::from_json(&text).unwrap();
        let bundle = file.to_bundle().unwrap();
        assert_eq!(GameFile::from_bundle(&bundle), file, "{args:?}");
        assert_eq!(file.to_json(), text, "{args:?}");
    }
}

#[test]
fn analyze_reports_exact_values() {
    let voim = tmp("voim.json");
    generate(&voim, &["voim-tight", "--eps", "1/2", "--p", "1/2"]);
    let out = run(&["analyze", voim.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let r = &rows(&String::from_utf8(out.stdout).unwrap())[0];
    assert_eq!(r["voi_minus"], "11/15");
    assert_eq!(r["voi_minus_dec"], "0.733333333333333");
    assert_eq!(r["voi_plus"], "1/1");
    assert_eq!(r["n_cells"], "2");
    assert_eq!(r["rule_kind"], "mc");
    assert_eq!(r["bounds_ok"], "true");
    assert!(String::from_utf8(out.stderr).unwrap().contains("VoI- 11/15"));

    let g = tmp("gairing.json");
    generate(&g, &["gairing-tight", "--n", "2", "--eps", "1/10"]);
    let r = &rows(&ok(&["analyze", g.to_str().unwrap()]))[0];
    assert_eq!(r["voi_plus"], "5/7");
    assert_eq!(r["voi_minus"], "5/7");
    assert_eq!(r["chk_voi_plus_ge_1_minus_inv_e"], "pass");
}

#[test]
fn analyze_overrides() {
    let voim = tmp("voim-override.json");
    generate(&voim, &["voim-tight", "--eps", "1/2", "--p", "1/2"]);
    let p = voim.to_str().unwrap();
    let r = &rows(&ok(&["analyze", p, "--policy-override", "none"]))[0];
    assert_eq!((r["voi_plus"].as_str(), r["voi_minus"].as_str()), ("1/1", "1/1"));
    let r = &rows(&ok(&["analyze", p, "--rule-override", "g", "--samples", "5"]))[0];
    assert_eq!(r["rule_kind"], "g");
    assert!(!r["psi"].is_empty() && !r["rho"].is_empty());
    assert_eq!(code(&run(&["analyze", p, "--policy-override", "sideways"])), 2);
}

#[test]
fn single_state_has_unit_ratios() {
    let f = write(
        "single.json",
        r#"{"n_resources":2,"agents":[[[0],[1]],[[1]]],
            "support":[{"values":["3/2","1"],"prob":"1"}],"policy":[[0]],"rule":{"kind":"mc"}}"#,
    );
    let r = &rows(&ok(&["analyze", f.to_str().unwrap()]))[0];
    assert_eq!(r["voi_plus"], "1/1");
    assert_eq!(r["voi_minus"], "1/1");
    assert_eq!(r["label"], "unnamed");
}

#[test]
fn exit_codes() {
    let bad_mass = write(
        "mass.json",
        r#"{"n_resources":1,"agents":[[[0]]],"support":[{"values":["1"],"prob":"9/10"}],
            "policy":[[0]],"rule":{"kind":"mc"}}"#,
    );
    let out = run(&["analyze", bad_mass.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(!out.stderr.is_empty());

    let float = write(
        "float.json",
        r#"{"n_resources":1,"agents":[[[0]]],"support":[{"values":[1.0],"prob":"1"}],
            "policy":[[0]],"rule":{"kind":"mc"}}"#,
    );
    assert_eq!(code(&run(&["analyze", float.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["analyze", write("junk.json", "{not json").to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["generate", "voim-tight", "--eps", "2", "--p", "1/2"])), 5);
    assert_eq!(code(&run(&["generate", "voim-tight", "--p", "1/2"])), 5);
}

#[test]
fn cap_from_env_and_flag() {
    // two symmetric agents: no action is dominated, four joint profiles
    let f = write(
        "sym.json",
        r#"{"n_resources":2,"agents":[[[0],[1]],[[0],[1]]],
            "support":[{"values":["1","1"],"prob":"1"}],"policy":[[0]],"rule":{"kind":"mc"}}"#,
    );
    let p = f.to_str().unwrap();
    let out = bin().args(["analyze", p]).env("COVERGAME_CAP", "2").output().unwrap();
    assert_eq!(code(&out), 4);
    let out = bin().args(["analyze", p, "--cap", "100"]).env("COVERGAME_CAP", "2").output().unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(code(&run(&["analyze", p, "--cap", "3"])), 4);
}

#[test]
fn search_ranks_policies() {
    let voim = tmp("voim-search.json");
    generate(&voim, &["voim-tight", "--eps", "1/2", "--p", "1/2"]);
    let rs = rows(&ok(&["search-signaling", voim.to_str().unwrap(), "--objective", "worst-case"]));
    assert_eq!(rs.len(), 2);
    assert_eq!((rs[0]["policy"].as_str(), rs[0]["rank"].as_str(), rs[0]["top"].as_str()), ("{0,1}", "1", "true"));
    assert_eq!(rs[0]["informed_worst"], "15/8");
    assert_eq!((rs[1]["policy"].as_str(), rs[1]["informed_worst"].as_str()), ("{0}|{1}", "11/8"));

    let big = tmp("voip11.json");
    generate(&big, &["voip-tight", "--r", "11"]);
    assert_eq!(code(&run(&["search-signaling", big.to_str().unwrap()])), 4);

    let one = tmp("voip1.json");
    generate(&one, &["voip-tight", "--r", "1"]);
    assert_eq!(rows(&ok(&["search-signaling", one.to_str().unwrap()])).len(), 1);
}

#[test]
fn rule_sweep_is_deterministic_with_aggregates() {
    let args = ["--seed", "3", "sweep", "rule-interpolation", "--battery", "6", "--lambdas", "0,1/2,1", "--support", "3"];
    let a = ok(&args);
    let b = ok(&args);
    assert_eq!(a, b);
    let rs = rows(&a);
    assert_eq!(rs.len(), 3 * 7);
    let aggs: Vec<_> = rs.iter().filter(|r| r["row_kind"] == "aggregate").collect();
    assert_eq!(aggs.len(), 3);
    assert_eq!(aggs[0]["param"], "0/1");
    assert_eq!(aggs[0]["rule_kind"], "mc");
    assert_eq!(aggs[0]["chk_voi_plus_ge_1"], "pass");
    assert_eq!(aggs[2]["rule_kind"], "g");
    assert_eq!(aggs[2]["chk_voi_minus_ge_1_minus_inv_e"], "pass");
    assert_ne!(ok(&["--seed", "4", "sweep", "rule-interpolation", "--battery", "2"]), a);
}

#[test]
fn sweep_flags_capped_rows_and_continues() {
    let rs = rows(&ok(&["--cap", "1", "sweep", "rule-interpolation", "--battery", "4", "--lambdas", "0", "--agents", "3"]));
    assert_eq!(rs.len(), 5);
    assert!(rs.iter().any(|r| r["status"] == "cap-exceeded"));
}

#[test]
fn closed_form_grids_match() {
    let rs = rows(&ok(&["sweep", "voim-tight-grid", "--eps", "1/10,1/2,9/10", "--p", "1/5,4/5"]));
    assert_eq!(rs.len(), 6);
    assert!(rs.iter().all(|r| r["closed_form_match"] == "true"), "{rs:?}");
    let rs = rows(&ok(&["sweep", "gairing-grid", "--n-min", "2", "--n-max", "6"]));
    assert_eq!(rs.len(), 10);
    assert!(rs.iter().all(|r| r["closed_form_match"] == "true"));
    assert_eq!(code(&run(&["sweep", "voim-tight-grid", "--eps", ""])), 2);
}

#[test]
fn output_file_and_header() {
    let voim = tmp("voim-out.json");
    generate(&voim, &["voim-tight", "--eps", "1/2", "--p", "1/2"]);
    let out = tmp("report.csv");
    let stdout = ok(&["analyze", voim.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", "csv"]);
    assert!(stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header.split(',').collect::<Vec<_>>(), covergame_cli::report::header());
    assert!(header.starts_with("row_kind,label,param,rank,top,policy,n_cells,rule_kind,status,"));
}
