use std::path::Path;
use std::process::{Command, Output};

fn grm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grm")).args(args).output().expect("spawn grm")
}

fn lines(out: &Output) -> Vec<String> {
    String::from_utf8(out.stdout.clone()).unwrap().lines().map(str::to_string).collect()
}

fn manifest(out: &Output) -> serde_json::Value {
    let first = &lines(out)[0];
    serde_json::from_str(first.strip_prefix("# ").expect("manifest prefix")).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn headers_follow_the_manifest() {
    let cases: [(&[&str], &str); 4] = [
        (
            &["path-sum", "--n", "3", "--n0", "0", "--lambda", "0.05", "--kappa", "0.01"],
            "n,n0,rwa,lambda,kappa,oracle,closed_form,diff,freq_closed,freq_stark",
        ),
        (
            &["scan-resonance", "--n", "3", "--kappa-count", "1"],
            "lambda,kappa,n,n0,rwa,omega_pert,omega_num,delta_pert,delta_num,cutoff,reason",
        ),
        (&["spectrum", "--points", "3", "--levels", "2"], "omega_c,level,energy,weight_initial,weight_final"),
        (
            &[
                "error-grid",
                "--n",
                "3",
                "--lambda-count",
                "1",
                "--kappa-count",
                "1",
                "--lambda-min",
                "0.02",
                "--kappa-min",
                "0.01",
            ],
            "lambda,kappa,err_omega_pct,err_delta_pct,omega_pert,omega_num,delta_pert,delta_num,crossing,flags",
        ),
    ];
    for (args, header) in cases {
        let out = grm(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let text = lines(&out);
        assert!(text[0].starts_with("# {"));
        assert_eq!(text[1], header);
        assert!(text.len() > 2);
        assert_eq!(manifest(&out)["command"], args[0]);
    }
}

#[test]
fn spectrum_rows_cover_points_times_levels() {
    let out = grm(&["spectrum", "--points", "4", "--levels", "3", "--cutoff", "10"]);
    assert!(out.status.success());
    assert_eq!(lines(&out).len(), 2 + 12);
}

#[test]
fn flags_override_file_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "command = \"path-sum\"\nn = 5\nn0 = 1\nlambda = 0.02\nkappa = 0.03\n");
    let out = grm(&["path-sum", "--config", &cfg, "--lambda", "0.04"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let config = &manifest(&out)["config"];
    assert_eq!(config["n"], serde_json::json!([5]));
    assert_eq!(config["lambda"]["min"], 0.04);
    assert_eq!(config["kappa"]["min"], 0.03);
    let text = lines(&out);
    assert_eq!(text.len(), 4);
    assert!(text[2].starts_with("5,1,false,4.00000000000e-2,3.00000000000e-2,"));
}

#[test]
fn file_for_another_command_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "command = \"spectrum\"\n");
    let out = grm(&["path-sum", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failures_emit_one_json_line_and_exit_two() {
    let out = grm(&["scan-resonance", "--n", "7"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(line["error"], "computation");
    assert_eq!(line["command"], "scan-resonance");

    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "nonsense = 1\n");
    let out = grm(&["spectrum", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let line: serde_json::Value = serde_json::from_str(String::from_utf8(out.stderr).unwrap().trim()).unwrap();
    assert_eq!(line["error"], "config");
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let args = ["path-sum", "--n", "4", "--n0", "2"];
    let to_stdout = grm(&args);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let to_file = grm(&with_out);
    assert!(to_file.status.success() && to_file.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    // the manifest records the output path, so compare the table body only
    let body = |s: &str| s.lines().skip(1).map(str::to_string).collect::<Vec<_>>();
    assert_eq!(body(&written), body(&String::from_utf8(to_stdout.stdout).unwrap()));
}

#[test]
fn junction_run_with_rwa_comparison() {
    let out = grm(&[
        "evolve-junction",
        "--n",
        "3",
        "--cutoff",
        "4",
        "--tail-limit",
        "1",
        "--horizon",
        "0.5",
        "--samples",
        "11",
        "--compare-rwa",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = lines(&out);
    assert!(text[1].starts_with("t_over_TH,n1,n2,n3,q1,q2,q3,norm,n1_rwa"));
    assert_eq!(text.len(), 2 + 11);
    let derived = &manifest(&out)["derived"];
    assert!(derived["max_norm_deviation"].as_f64().unwrap() < 1e-10);
}

#[test]
fn tail_guard_rejects_small_cutoff() {
    let out = grm(&["evolve-junction", "--n", "3", "--cutoff", "4", "--horizon", "0.5", "--samples", "11"]);
    assert_eq!(out.status.code(), Some(2));
}
