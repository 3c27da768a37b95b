use std::path::Path;
use std::process::Command;

use jscc_cli::output::{parse_num, read_csv};

fn jscc(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_jscc"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| parse_num(&r[i]).unwrap()).collect()
}

#[test]
fn hull_dominates_curve() {
    let dir = tempfile::tempdir().unwrap();
    let o = jscc(&["hull", "--preset", "eng_ternary", "--grid-points", "40"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&dir.path().join("hull.csv")).unwrap();
    let curve = column(&h, &rows, "Ex_prime");
    let hull = column(&h, &rows, "hull");
    let bic = column(&h, &rows, "biconjugate");
    for i in 0..rows.len() {
        assert!(hull[i] >= curve[i] - 1e-12);
        assert!((hull[i] - bic[i]).abs() < 1e-6 * (1.0 + hull[i]));
    }
    assert!(dir.path().join("hull.manifest").exists());
}

#[test]
fn joint_writes_terms_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = jscc(&["joint", "--preset", "bsc01_skewed", "--grid-points", "40"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&dir.path().join("joint.csv")).unwrap();
    for c in ["R", "source_term", "channel_term", "sum", "flag"] {
        assert!(h.iter().any(|x| x == c), "missing {c}");
    }
    let s = column(&h, &rows, "source_term");
    let c = column(&h, &rows, "channel_term");
    let sum = column(&h, &rows, "sum");
    for i in 0..rows.len() {
        if sum[i].is_finite() {
            assert!((s[i] + c[i] - sum[i]).abs() < 1e-8 * (1.0 + s[i].abs() + c[i].abs()));
        }
    }
    assert!(dir.path().join("joint-summary.csv").exists());
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"source":{"probs":[0.9,0.1],"t":1},"channel":{"rows":[[0.9,0.1],[0.5,0.4]]}}"#,
    )
    .unwrap();
    let o = jscc(&["channel-exp", cfg.to_str().unwrap()], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 1"));
}
