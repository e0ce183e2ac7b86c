use std::fs;
use std::process::Command;

fn d2dcov() -> Command {
    Command::new(env!("CARGO_BIN_EXE_d2dcov"))
}

#[test]
fn analytic_prints_reference_values() {
    let out = d2dcov().args(["analytic", "--gamma-db", "-5,0"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("lambda_per_m2,gamma_db,retention"));
    assert!(lines[2].contains("0.70545005517"));
    assert!(lines[1].contains("30.92499"));
}

#[test]
fn simulate_writes_outputs_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let status = d2dcov()
        .args(["simulate", "--replications", "100", "--seed", "5", "--gamma-db", "10,-10,0,0"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let gammas: Vec<_> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap().to_owned()).collect();
    assert_eq!(gammas, ["-10", "0", "10"]);
    assert!(out.join("plot.svg").exists());

    let again = dir.path().join("again");
    let status = d2dcov()
        .args(["replay", "--workers", "1"])
        .arg(out.join("manifest.json"))
        .arg("--out")
        .arg(&again)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert_eq!(csv, fs::read_to_string(again.join("results.csv")).unwrap());
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("params.toml");
    fs::write(&cfg, "model.lambda = 1e-5\nreplications = 50\nmaster_seed = 9\n").unwrap();
    let out = dir.path().join("r");
    let status = d2dcov()
        .args(["retention", "--mu", "20,10", "--replications", "40"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"replications\": 40"));
    assert!(manifest.contains("\"master_seed\": 9"));
    assert!(manifest.contains("1e-5") || manifest.contains("0.00001"));
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "model.lambda = \"many\"\n").unwrap();
    let out = d2dcov().arg("analytic").arg("--config").arg(&bad).output().unwrap();
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());

    let unknown = d2dcov().args(["figure", "7"]).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!unknown.status.success());

    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let unwritable = d2dcov()
        .args(["simulate", "--replications", "10"])
        .arg("--out")
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert!(!unwritable.status.success());

    let bad_alpha = dir.path().join("alpha.toml");
    fs::write(&bad_alpha, "model.alpha = 2.0\n").unwrap();
    let out = d2dcov().arg("analytic").arg("--config").arg(&bad_alpha).output().unwrap();
    assert!(!out.status.success());
}
