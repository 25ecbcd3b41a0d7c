use std::path::Path;
use std::process::{Command, Output};

use acmag_cli::output::{emit_results, parse_numeric_csv, Table};
use rand::{Rng, SeedableRng};

const NV_CONFIG: &str = "seed = 3\n[field]\nomega_mhz = 1871.48\nb = 5.65\n[probe_search]\nsamples = 16\n[sweep]\npoints = 5\n[adaptive]\ntrials = 2\nrounds = 1\n";

fn acmag(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acmag"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn missing_frequency_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "seed = 1\n[field]\nb = 1.0\n");
    let out = dir.path().join("out");
    let result = acmag(&["qfim-scan"], &config, &out);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("omega_mhz"), "{stderr}");
    assert!(!out.join("qfim-scan.csv").exists());
    assert!(!out.join("qfim-scan.summary.json").exists());
}

#[test]
fn unknown_keys_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "[field]\nomega_mhz = 1.0\nbogus = 2\n");
    let result = acmag(&["bounds"], &config, &dir.path().join("out"));
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn invalid_values_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "[field]\nomega_mhz = 1.0\n[scan]\npoints = 0\n");
    let result = acmag(&["qfim-scan"], &config, &dir.path().join("out"));
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("scan.points"));
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), NV_CONFIG);
    for command in ["probe-search", "nv-sweep"] {
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        assert!(acmag(&[command], &config, &a).status.success());
        assert!(acmag(&[command], &config, &b).status.success());
        let csv = format!("{command}.csv");
        let json = format!("{command}.summary.json");
        assert_eq!(std::fs::read(a.join(&csv)).unwrap(), std::fs::read(b.join(&csv)).unwrap());
        assert_eq!(std::fs::read(a.join(&json)).unwrap(), std::fs::read(b.join(&json)).unwrap());
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), NV_CONFIG);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(acmag(&["probe-search"], &config, &a).status.success());
    assert!(acmag(&["probe-search", "--seed", "4"], &config, &b).status.success());
    let csv_a = std::fs::read(a.join("probe-search.csv")).unwrap();
    let csv_b = std::fs::read(b.join("probe-search.csv")).unwrap();
    assert_ne!(csv_a, csv_b);
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(b.join("probe-search.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 4);
    assert_eq!(summary["command"], "probe-search");
}

#[test]
fn qfim_scan_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "[field]\nomega_mhz = 1.0\nb = 2.0\n[scan]\nomega_t_min = 10.0\nomega_t_max = 1000.0\npoints = 3\n");
    let out = dir.path().join("out");
    assert!(acmag(&["qfim-scan"], &config, &out).status.success());
    let (header, rows) = parse_numeric_csv(&std::fs::read(out.join("qfim-scan.csv")).unwrap()).unwrap();
    assert_eq!(header, ["omega_t", "t", "f_bb", "f_bw", "f_ww", "det"]);
    assert_eq!(rows.len(), 3);
    let omega = 2.0 * std::f64::consts::PI;
    for row in rows {
        let x = row[0];
        assert!((row[1] - x / omega).abs() < 1e-12 * row[1]);
        // unit gyromagnetic ratio
        let f_bb = (2.0 * x * x + 2.0 * x.sin().powi(2) + 2.0 * x * (2.0 * x).sin()) / (2.0 * omega * omega);
        assert!((row[2] - f_bb).abs() < 1e-10 * f_bb);
        assert!(row[5] > 0.0);
    }
}

#[test]
fn empty_table_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let table = Table::new(&["omega_t", "det"]);
    let (csv, json) = emit_results(&table, &serde_json::json!({ "points": 0 }), dir.path(), "empty").unwrap();
    assert_eq!(std::fs::read_to_string(csv).unwrap(), "omega_t,det\n");
    let (header, rows) = parse_numeric_csv(&std::fs::read(dir.path().join("empty.csv")).unwrap()).unwrap();
    assert_eq!(header, ["omega_t", "det"]);
    assert!(rows.is_empty());
    assert!(json.exists());
}

#[test]
fn csv_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    let mut table = Table::new(&["a", "b", "c"]);
    let mut expected = Vec::new();
    for _ in 0..200 {
        let scale = 10f64.powi(rng.random_range(-300..300));
        let row: Vec<f64> = (0..3).map(|_| (rng.random::<f64>() - 0.5) * scale).collect();
        table.push(row.iter().map(|&v| v.into()).collect());
        expected.push(row);
    }
    table.push(vec![0.0.into(), (-0.0).into(), f64::MIN_POSITIVE.into()]);
    expected.push(vec![0.0, -0.0, f64::MIN_POSITIVE]);
    emit_results(&table, &serde_json::json!({}), dir.path(), "roundtrip").unwrap();
    let (_, rows) = parse_numeric_csv(&std::fs::read(dir.path().join("roundtrip.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), expected.len());
    for (got, want) in rows.iter().zip(&expected) {
        for (g, w) in got.iter().zip(want) {
            assert_eq!(g.to_bits(), w.to_bits());
        }
    }
}

#[test]
fn config_out_used_without_flag() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-config");
    let text = format!("out = {:?}\n[field]\nomega_mhz = 1.0\n[scan]\npoints = 2\n", target.display().to_string());
    let config = write_config(dir.path(), &text);
    let status = Command::new(env!("CARGO_BIN_EXE_acmag"))
        .args(["qfim-scan", "--config"])
        .arg(&config)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(target.join("qfim-scan.csv").exists());
}
