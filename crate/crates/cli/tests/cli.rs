use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(cmd: &str, config: &str, out: &Path, workers: usize) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join(format!("{cmd}.json"));
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_floquet-pt"))
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .arg("--workers")
        .arg(workers.to_string())
        .output()
        .unwrap()
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().into(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Runs with one and three workers and compares every output byte for byte.
fn assert_deterministic(cmd: &str, config: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for (dir, w) in [(&a, 1), (&b, 3), (&c, 1)] {
        let o = run(cmd, config, dir, w);
        assert!(o.status.success(), "{cmd} failed: {}", stderr(&o));
    }
    let fa = files(&a);
    assert!(!fa.is_empty());
    assert_eq!(fa, files(&b), "{cmd}: outputs differ across worker counts");
    assert_eq!(fa, files(&c), "{cmd}: outputs differ across runs");
    fa
}

fn text<'a>(f: &'a [(PathBuf, Vec<u8>)], name: &str) -> &'a str {
    let (_, bytes) = f.iter().find(|(p, _)| p == Path::new(name)).unwrap_or_else(|| panic!("missing {name}"));
    std::str::from_utf8(bytes).unwrap()
}

fn is_sci(s: &str) -> bool {
    let Some((m, e)) = s.split_once('e') else { return false };
    let m = m.strip_prefix('-').unwrap_or(m);
    let Some((int, frac)) = m.split_once('.') else { return false };
    int.len() == 1
        && frac.len() == 12
        && m.chars().filter(|c| *c != '.').all(|c| c.is_ascii_digit())
        && (e.starts_with('+') || e.starts_with('-'))
        && e.len() >= 3
        && e[1..].chars().all(|c| c.is_ascii_digit())
}

#[test]
fn spectrum_is_deterministic_and_formatted() {
    let f = assert_deterministic(
        "spectrum",
        r#"{"model": {"name": "minimal", "sites": 20}, "sweep": {"start": 1.0, "stop": 3.0, "steps": 21}}"#,
    );
    let csv = text(&f, "spectrum.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("param,index,re_E,im_E"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 21 * 20);
    for row in &rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 4);
        assert!(is_sci(cells[0]) && is_sci(cells[2]) && is_sci(cells[3]), "{row}");
        assert!(cells[1].parse::<usize>().is_ok());
    }
    let summary: serde_json::Value = serde_json::from_str(text(&f, "summary.json")).unwrap();
    assert!(summary["max_p_com"].as_f64().unwrap() > 0.0);
    assert!(text(&f, "spectrum.svg").starts_with("<svg"));
}

#[test]
fn hermitian_ring_has_no_complex_fraction() {
    let f = assert_deterministic(
        "spectrum",
        r#"{"model": {"name": "minimal", "sites": 16, "eta": 1}, "sweep": {"start": 0, "stop": 5, "steps": 11}}"#,
    );
    for row in text(&f, "p_com.csv").lines().skip(1) {
        assert_eq!(row.split(',').nth(1), Some("0.000000000000e+00"), "{row}");
    }
}

#[test]
fn phase_diagram_and_thresholds_are_deterministic() {
    let f = assert_deterministic(
        "phase-diagram",
        r#"{"model": {"name": "minimal", "sites": 10}, "sweep": {"start": 1.3, "stop": 2.2, "steps": 10},
            "sizes": [10, 16, 24]}"#,
    );
    assert_eq!(text(&f, "phase_diagram.csv").lines().count(), 1 + 30);
    let thresholds: Vec<f64> = text(&f, "thresholds.csv")
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(thresholds.len(), 3);
    assert!(thresholds.windows(2).all(|w| w[1] < w[0]), "{thresholds:?}");
    assert!(thresholds.iter().all(|t| *t > std::f64::consts::FRAC_PI_2));
}

#[test]
fn trajectory_keeps_the_product_on_the_circle() {
    let f = assert_deterministic(
        "trajectory",
        r#"{"model": {"name": "minimal", "sites": 20}, "sweep": {"start": 1.57, "stop": 1.6, "steps": 31},
            "bracket": [1.0, 2.5]}"#,
    );
    let summary: serde_json::Value = serde_json::from_str(text(&f, "summary.json")).unwrap();
    assert!(summary["max_product_deviation"].as_f64().unwrap() < 1e-8);
    assert_eq!(text(&f, "trajectory.csv").lines().count(), 1 + 31);
}

#[test]
fn scale_free_and_perturbation_are_deterministic() {
    let f = assert_deterministic(
        "scale-free",
        r#"{"model": {"name": "minimal", "sites": 20}, "parameter": 3.0, "sizes": [20, 40, 80]}"#,
    );
    let summary: serde_json::Value = serde_json::from_str(text(&f, "summary.json")).unwrap();
    let slope = summary["log_log_fit"]["slope"].as_f64().unwrap();
    assert!(slope < -0.5, "{slope}");
    assert!(text(&f, "alphas.csv").lines().count() > 1);

    let f = assert_deterministic(
        "perturbation",
        r#"{"model": {"name": "minimal", "sites": 24}, "parameter": 3.0, "sizes": [24, 32, 48]}"#,
    );
    assert_eq!(text(&f, "heatmap.csv").lines().count(), 1 + 24 * 24);
    assert_eq!(text(&f, "gamma.csv").lines().count(), 1 + 3);
}

#[test]
fn validate_model_reports_every_condition() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(
        "validate-model",
        r#"{"model": {"name": "type2", "sites": 20}, "parameter": 0.6}"#,
        &out,
        1,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS ")).count(), 6, "{stdout}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["all_passed"], serde_json::Value::Bool(true));
    assert!(report["bandwidth"]["total_width"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(
        "spectrum",
        r#"{"model": {"name": "minimal", "sites": 20, "eta": 3}, "sweep": {"start": 1, "stop": 1, "steps": 1}}"#,
        &out,
        1,
    );
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("eta") && err.contains("start < stop") && err.contains("steps"), "{err}");

    let o = run("spectrum", r#"{"model": {"name": "nonsense", "sites": 20}}"#, &out, 1);
    assert_eq!(o.status.code(), Some(2));
    let o = run("spectrum", "not json", &out, 1);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = run(
        "spectrum",
        r#"{"model": {"name": "minimal", "sites": 8}, "sweep": {"start": 0, "stop": 1, "steps": 2}}"#,
        &blocker.join("sub"),
        1,
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("not writable"));
}

#[test]
fn numerical_failure_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    // Below the onset every quasienergy is real, so there is nothing to scale.
    let o = run(
        "scale-free",
        r#"{"model": {"name": "minimal", "sites": 20}, "parameter": 0.5, "sizes": [20, 40]}"#,
        &tmp.path().join("out"),
        1,
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("no complex quasienergies"));
}
