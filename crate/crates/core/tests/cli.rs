use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aharmonic"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn code(cmd: &mut Command) -> i32 {
    cmd.output().expect("spawn aharmonic").status.code().expect("exit code")
}

const FLAT: &str = r#"{"schema_version": 1, "name": "NAME", "chart": {"metric": {"kind": "flat"}, "r_outer": 2.0},
 "model": {"name": "p_harmonic", "params": {"p": 2.0}}, "t1": 0.0, "t2": 1.0,
 "grid": {"n_sigma": 48, "n_theta": 48}, "samples": 9}"#;

#[test]
fn run_writes_the_three_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("flat");
    let c = code(bin().arg("run").arg(configs().join("flat_p2.json")).arg("--out").arg(&out));
    assert_eq!(c, 0);
    for f in ["profile.csv", "verdicts.json", "diagnostics.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let csv = std::fs::read_to_string(out.join("profile.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,L,L1_fd,L1_coarea,L2_fd,L2_coarea,k_int,k_int_GB,K_interior");
    assert_eq!(csv.lines().count(), 18);
}

#[test]
fn malformed_config_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, FLAT.replace("\"samples\": 9", "\"samples\": 9, \"bogus\": 1")).unwrap();
    assert_eq!(code(bin().arg("run").arg(&bad).arg("--out").arg(tmp.path().join("o"))), 3);
    std::fs::write(&bad, FLAT.replace("\"schema_version\": 1", "\"schema_version\": 7")).unwrap();
    assert_eq!(code(bin().arg("run").arg(&bad).arg("--out").arg(tmp.path().join("o"))), 3);
}

#[test]
fn suite_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(code(bin().arg("suite").arg(&empty).arg("--out").arg(tmp.path().join("o1"))), 2);
    assert_eq!(code(bin().arg("suite").arg(tmp.path().join("missing")).arg("--out").arg(tmp.path().join("o2"))), 2);

    let ok = tmp.path().join("ok");
    std::fs::create_dir(&ok).unwrap();
    std::fs::write(ok.join("a.json"), FLAT.replace("NAME", "a")).unwrap();
    assert_eq!(code(bin().arg("suite").arg(&ok).arg("--out").arg(tmp.path().join("o3"))), 0);
    assert!(tmp.path().join("o3/summary.json").is_file());
    assert!(tmp.path().join("o3/a/verdicts.json").is_file());

    std::fs::write(ok.join("b.json"), "{ not json").unwrap();
    assert_eq!(code(bin().arg("suite").arg(&ok).arg("--out").arg(tmp.path().join("o4"))), 3);
}

#[test]
fn failing_verdict_exits_1() {
    // a false pinching attestation on the flat chart: (ln L)'' = 0 cannot
    // exceed k2 / (k1 t^2) = 1 / t^2
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    let pinched = r#""samples": 9, "pinched": {"kappa1": 1.0, "kappa2": 1.0, "r_ball": 1.0, "attested": true}"#;
    std::fs::write(&cfg, FLAT.replace("NAME", "false_pinch").replace("\"samples\": 9", pinched)).unwrap();
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(1), "{stdout}");
    assert!(stdout.lines().any(|l| l.starts_with("pinched_bound") && l.contains("fail")), "{stdout}");
}

#[test]
fn check_model_and_identities() {
    let tmp = tempfile::tempdir().unwrap();
    let c = code(
        bin()
            .arg("check-model")
            .arg(configs().join("models/p3.json"))
            .arg("--out")
            .arg(tmp.path()),
    );
    assert_eq!(c, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("model_report.json")).unwrap()).unwrap();
    assert_eq!(report["alpha"], 2.0);
    assert_eq!(report["structure"]["a2_class"], "upper-bounded");

    let c = code(
        bin()
            .arg("identities")
            .arg(configs().join("identities_flat.json"))
            .arg("--samples")
            .arg("20000")
            .arg("--out")
            .arg(tmp.path()),
    );
    assert_eq!(c, 0);
    assert!(tmp.path().join("identities.json").is_file());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("suite/04_bump_p2.json");
    for d in ["x", "y"] {
        assert_eq!(code(bin().arg("run").arg(&cfg).arg("--grid").arg("64").arg("--out").arg(tmp.path().join(d))), 0);
    }
    for f in ["profile.csv", "verdicts.json", "diagnostics.json"] {
        let a = std::fs::read(tmp.path().join("x").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("y").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}
