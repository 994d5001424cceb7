use std::path::Path;
use std::process::{Command, Output};

use padam::harness::{read_metadata, read_trace, read_trace_csv};

fn padam(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_padam"))
        .args(args)
        .arg("--out-dir")
        .arg(out_dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_trace_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = padam(&["run", "--problem", "rosenbrock", "--optimizer", "padam", "--lr", "0.01", "--steps", "50"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = dir.path().join("rosenbrock_padam_seed0.csv");
    let trace = read_trace(&csv).unwrap();
    assert_eq!(trace.len(), 50);
    assert_eq!(trace.meta.optimizer, "padam");
    assert!(!trace.meta.diverged);
}

#[test]
fn seeds_flag_writes_one_trace_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = padam(&["run", "--problem", "quadratic", "--steps", "20", "--seed", "7", "--seeds", "4"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    for k in 7..11 {
        let path = dir.path().join(format!("quadratic_padam_seed{k}.csv"));
        assert_eq!(read_trace_csv(&path).unwrap().len(), 20);
        assert_eq!(read_metadata(&path.with_extension("json")).unwrap().seed, k);
    }
    assert!(dir.path().join("quadratic_padam_aggregate.csv").exists());
    assert!(dir.path().join("quadratic_padam_summary.json").exists());
}

#[test]
fn divergence_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = padam(&["run", "--problem", "rosenbrock", "--optimizer", "sgdm", "--lr", "10", "--steps", "200"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = padam(&["run", "--steps", "20"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--problem"));

    let bad_p = padam(&["run", "--problem", "quadratic", "--p", "0.7"], dir.path());
    assert_eq!(bad_p.status.code(), Some(1));

    let unknown = padam(&["run", "--problem", "quadratic", "--optimizer", "lion"], dir.path());
    assert_eq!(unknown.status.code(), Some(1));

    let flag_mismatch = padam(&["run", "--problem", "quadratic", "--optimizer", "sgdm", "--p", "0.1"], dir.path());
    assert_eq!(flag_mismatch.status.code(), Some(1));
}

#[test]
fn sweep_and_compare_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = padam(&["sweep-p", "--problem", "quadratic", "--steps", "30", "--p-list", "0,0.25,0.5"], dir.path());
    assert_eq!(sweep.status.code(), Some(0), "{}", String::from_utf8_lossy(&sweep.stderr));
    let text = std::fs::read_to_string(dir.path().join("sweep_p.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "p,t,mean_loss,mean_grad_norm_sq");
    assert_eq!(text.lines().count(), 1 + 3 * 30);

    let cmp = padam(&["compare", "--problem", "quadratic", "--steps", "30", "--optimizers", "padam,adam,sgdm"], dir.path());
    assert_eq!(cmp.status.code(), Some(0), "{}", String::from_utf8_lossy(&cmp.stderr));
    let text = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn verify_reductions_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = padam(&["verify", "--suite", "reductions,gradients", "--points", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify_report.json")).unwrap()).unwrap();
    assert!(report.is_object());
}
