use std::process::{Command, Output};

fn ehs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ehs"))
        .args(args)
        .env_remove("EHS_PRECISION_BITS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid json")
}

#[test]
fn list_shows_thirteen_identities() {
    let out = ehs(&["list", "--output", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let entries = json(&out);
    assert_eq!(entries.as_array().unwrap().len(), 13);
    let human = stdout(&ehs(&["list"]));
    for name in ["theta_inversion", "kajihara", "c3_transform", "delta_lemma"] {
        assert!(human.lines().any(|l| l == name), "{name}");
    }
}

#[test]
fn verify_jackson_passes() {
    let out = ehs(&["verify", "an_jackson", "--n", "2", "--N", "3", "--output", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["status"], "PASS");
    assert_eq!(report["precision_bits"], 256);
    assert_eq!(report["terms"]["lhs"], 4);
}

#[test]
fn perturbed_kajihara_fails() {
    let out = ehs(&[
        "verify",
        "kajihara",
        "--n",
        "2",
        "--m",
        "2",
        "--N",
        "3",
        "--perturb",
        "1e-30",
        "--output",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    assert_eq!(report["status"], "FAIL");
    let residual: f64 = report["rel_residual"].as_str().unwrap().parse().unwrap();
    assert!(residual > 1e-35);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(ehs(&["verify", "nonsense"]).status.code(), Some(2));
    assert_eq!(ehs(&["fuzz", "c3_transform", "--mvec", "1;2"]).status.code(), Some(2));
    assert_eq!(ehs(&["verify", "kajihara", "--m", "0"]).status.code(), Some(2));
    assert_eq!(ehs(&["verify", "kajihara", "--p-mod", "1.5"]).status.code(), Some(2));
    assert_eq!(ehs(&["fuzz", "kajihara", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(ehs(&[]).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_three() {
    let out = ehs(&["verify", "theta_inversion", "--out", "/nonexistent-dir/report.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn out_file_receives_the_report() {
    let path = std::env::temp_dir().join(format!("ehs-cli-test-{}.json", std::process::id()));
    let out = ehs(&[
        "verify",
        "poch_split",
        "--n",
        "3",
        "--m",
        "2",
        "--output",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["identity"], "poch_split");
}

#[test]
fn identical_runs_give_identical_json() {
    let args = [
        "fuzz",
        "kajihara",
        "--n",
        "1,2",
        "--m",
        "2",
        "--N",
        "3",
        "--trials",
        "3",
        "--seed",
        "11",
        "--p-mod",
        "0,0.2",
        "--output",
        "json",
        "--no-timing",
    ];
    let a = ehs(&args);
    let b = ehs(&args);
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    let single = [
        "verify",
        "c3_transform",
        "--mvec",
        "1,2",
        "--seed",
        "4",
        "--output",
        "json",
        "--no-timing",
    ];
    assert_eq!(ehs(&single).stdout, ehs(&single).stdout);
}

#[test]
fn human_and_json_share_the_residual_string() {
    let base = ["verify", "sm_rewrite", "--n", "2", "--N", "3", "--seed", "5"];
    let j = json(&ehs(&[&base[..], &["--output", "json"]].concat()));
    let residual = j["rel_residual"].as_str().unwrap().to_string();
    let human = stdout(&ehs(&base));
    assert!(human.contains(&format!("rel_residual = {residual}")), "{human}");
    let csv = stdout(&ehs(&[&base[..], &["--output", "csv"]].concat()));
    assert!(csv.contains(&residual));
}

#[test]
fn csv_columns_follow_json_order() {
    let out = stdout(&ehs(&["verify", "delta_lemma", "--mvec", "1,1", "--output", "csv"]));
    let header = out.lines().next().unwrap();
    assert_eq!(
        header,
        "identity,n,m,N,mvec,seed,precision_bits,lhs_re,lhs_im,rhs_re,rhs_im,rel_residual,terms_lhs,terms_rhs,status,elapsed_ms"
    );
    assert_eq!(out.lines().count(), 2);
}

#[test]
fn precision_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_ehs"))
        .args(["verify", "theta_inversion", "--output", "json"])
        .env("EHS_PRECISION_BITS", "128")
        .output()
        .unwrap();
    assert_eq!(json(&out)["precision_bits"], 128);
    let out = Command::new(env!("CARGO_BIN_EXE_ehs"))
        .args(["verify", "theta_inversion", "--output", "json", "--precision", "192"])
        .env("EHS_PRECISION_BITS", "128")
        .output()
        .unwrap();
    assert_eq!(json(&out)["precision_bits"], 192);
}

#[test]
fn fuzz_sweeps_the_default_nomes() {
    let out = ehs(&["fuzz", "theta_inversion", "--trials", "2", "--output", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let campaigns = json(&out);
    let ps: Vec<f64> = campaigns
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["p"].as_f64().unwrap())
        .collect();
    assert_eq!(ps, vec![0.0, 0.05, 0.2, 0.5]);
    assert!(campaigns.as_array().unwrap().iter().all(|c| c["fail"] == 0));
}

#[test]
fn bench_reports_both_paths() {
    let out = ehs(&[
        "bench", "kajihara", "--n", "2", "--m", "2", "--N", "2", "--repeat", "1", "--output", "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let b = json(&out);
    assert!(b["reference_ms"]["mean"].as_f64().unwrap() > 0.0);
    assert!(b["incremental_ms"]["mean"].as_f64().unwrap() > 0.0);
    assert_eq!(b["status"], "PASS");
}
