use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bundled() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/sl2_default.json")
}

fn currep(args: &[&str], scenario: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_currep"))
        .args(args)
        .arg("--scenario")
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn load_bundled() -> Value {
    serde_json::from_str(&std::fs::read_to_string(bundled()).unwrap()).unwrap()
}

fn write_scenario(dir: &Path, value: &Value) -> PathBuf {
    let p = dir.join("scenario.json");
    std::fs::write(&p, serde_json::to_string_pretty(value).unwrap()).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn csv_rows(p: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(p).unwrap().records().map(|r| r.unwrap()).collect()
}

#[test]
fn bundled_scenario_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = currep(&["verify"], &bundled(), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("verify.json"));
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), load_bundled()["checks"].as_array().unwrap().len());
    for c in checks {
        assert_eq!(c["pass"], true, "{c}");
        assert!(c["residual"].is_number() && c["seed"].is_u64());
        assert_eq!(c["inputs_digest"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn zero_tolerance_fails_with_residual_listing() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = load_bundled();
    s["tolerance_scale"] = 0.0.into();
    let out = currep(&["verify"], &write_scenario(dir.path(), &s), dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("FAIL") && stderr.contains("residual"), "{stderr}");
    let report = read_json(&dir.path().join("verify.json"));
    assert!(report["failed"].as_u64().unwrap() > 0);
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["tolerance"] == 0.0));
}

#[test]
fn schema_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"group_kind\": \"sl2\", ").unwrap();
    assert_eq!(currep(&["verify"], &bad, dir.path()).status.code(), Some(2));

    let mut s = load_bundled();
    s["checks"] = serde_json::json!([{ "check": "spherical_routes", "g": "nowhere" }]);
    assert_eq!(currep(&["verify"], &write_scenario(dir.path(), &s), dir.path()).status.code(), Some(2));

    let mut s = load_bundled();
    s["currents"]["z1"]["segments"][0]["value"]["im"] = (-1.0).into();
    assert_eq!(currep(&["verify"], &write_scenario(dir.path(), &s), dir.path()).status.code(), Some(2));

    let missing = dir.path().join("missing.json");
    assert_eq!(currep(&["verify"], &missing, dir.path()).status.code(), Some(2));
}

#[test]
fn reports_are_deterministic_across_runs_and_jobs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (dir, jobs) in [(a.path(), "1"), (b.path(), "3")] {
        for cmd in ["verify", "spherical", "sample"] {
            let out = currep(&[cmd, "--jobs", jobs, "--seed", "99"], &bundled(), dir);
            assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
    for f in ["spherical.csv", "samples.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    for f in ["verify.json", "samples_summary.json"] {
        let (mut x, mut y) = (read_json(&a.path().join(f)), read_json(&b.path().join(f)));
        x.as_object_mut().unwrap().remove("header");
        y.as_object_mut().unwrap().remove("header");
        assert_eq!(x, y, "{f}");
    }
    assert_eq!(read_json(&a.path().join("verify.json"))["seed"], 99);
}

#[test]
fn seed_override_changes_monte_carlo_only() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    currep(&["verify", "--seed", "1"], &bundled(), a.path());
    currep(&["verify", "--seed", "2"], &bundled(), b.path());
    let (x, y) = (read_json(&a.path().join("verify.json")), read_json(&b.path().join("verify.json")));
    let residual = |r: &Value, name: &str| {
        r["checks"].as_array().unwrap().iter().find(|c| c["check"] == name).unwrap()["residual"].as_f64().unwrap()
    };
    assert_ne!(residual(&x, "laplace_mc"), residual(&y, "laplace_mc"));
    assert_eq!(residual(&x, "kappa"), residual(&y, "kappa"));
}

#[test]
fn spherical_sweep_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = currep(&["spherical"], &bundled(), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("spherical.csv"));
    let num = |r: &csv::StringRecord, i: usize| r[i].parse::<f64>().unwrap();
    for (id, r0) in [("d1", 1.0f64), ("d2", 2.0), ("d4", 4.0)] {
        let expected = 2.0 * r0.sqrt() / (1.0 + r0);
        for r in rows.iter().filter(|r| &r[0] == id && &r[4] != "mc") {
            assert!((num(r, 3) - expected).abs() < 1e-10, "{id}: {:?}", r);
        }
    }
    assert!((2.0 * 2f64.sqrt() / 3.0 - 0.94281).abs() < 1e-5);
    let identity = rows.iter().find(|r| &r[0] == "d1" && &r[4] == "cocycle").unwrap();
    assert_eq!((num(identity, 1), num(identity, 2)), (1.0, 0.0));

    for mc in rows.iter().filter(|r| &r[4] == "mc") {
        let closed = rows.iter().find(|r| r[0] == mc[0] && &r[4] == "cocycle").unwrap();
        let diff = ((num(mc, 1) - num(closed, 1)).powi(2) + (num(mc, 2) - num(closed, 2)).powi(2)).sqrt();
        let stderr = num(mc, 5);
        assert!(diff <= 3.0 * stderr || diff < 1e-12, "{:?} vs {:?}", mc, closed);
    }
}

#[test]
fn sampler_dump_respects_truncation_and_law() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = load_bundled();
    s["sampler"]["n_samples"] = 100_000.into();
    s["outputs"]["sample_count"] = 2000.into();
    let scenario = write_scenario(dir.path(), &s);
    assert_eq!(currep(&["sample"], &scenario, dir.path()).status.code(), Some(0));
    let summary = read_json(&dir.path().join("samples_summary.json"));
    assert!(summary["total_mass_deviation"].as_f64().unwrap() < 3.0, "{summary}");
    assert_eq!(summary["truncation_within_bound"], true);
    let rows = csv_rows(&dir.path().join("samples.csv"));
    assert!(!rows.is_empty());
    let ids: std::collections::BTreeSet<u64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(ids.len() > 1900 && *ids.iter().max().unwrap() < 2000);
    assert!(rows.iter().all(|r| r[1].parse::<f64>().unwrap() >= 1e-6));
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r[2].parse::<f64>().unwrap())));

    let first = std::fs::read(dir.path().join("samples.csv")).unwrap();
    currep(&["sample"], &scenario, dir.path());
    assert_eq!(first, std::fs::read(dir.path().join("samples.csv")).unwrap());
}

#[test]
fn kernel_table_at_identity() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = load_bundled();
    s["kernels"]["element"] = serde_json::json!({ "parabolic": { "epsilon": 1.0, "gamma": 0.0 } });
    assert_eq!(currep(&["kernels"], &write_scenario(dir.path(), &s), dir.path()).status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("kernels.csv"));
    assert_eq!(rows.len(), 9);
    for r in &rows {
        let v: Vec<f64> = r.iter().map(|x| x.parse().unwrap()).collect();
        assert!(v[8..12].iter().all(|u| u.abs() < 1e-14), "{:?}", r);
        assert!((v[4] - v[6]).abs() < 1e-8 && (v[5] - v[7]).abs() < 1e-8);
    }
    // c(p0, p0) = log 2 at the base point i
    let base = rows.iter().find(|r| &r[0] == "0.0" && &r[1] == "1.0").unwrap();
    assert!((base[2].parse::<f64>().unwrap() - 2f64.ln()).abs() < 1e-14);
}
