use std::process::Command;

fn study() -> Command {
    Command::new(env!("CARGO_BIN_EXE_study"))
}

#[test]
fn run_writes_cell_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = study()
        .args(["run", "--method", "map", "--misspec-pct", "-75", "--prior-width", "1e10", "--runs", "3", "--iters", "4"])
        .args(["--grid-points", "1001", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let cells = manifest["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 1);
    let file = cells[0]["file"].as_str().unwrap();
    let mut rdr = csv::Reader::from_path(out.join(file)).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["iteration", "mean_residual", "std_residual"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0].parse::<usize>().unwrap(), i + 1);
        assert!(r[1].parse::<f64>().unwrap() >= 0.0);
    }
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let ok = study()
            .args(["run", "--method", "entropy", "--runs", "2", "--iters", "3", "--grid-points", "1001"])
            .args(["--entropy-samples", "200", "--seed", "9", "--out"])
            .arg(&out)
            .status()
            .unwrap()
            .success();
        assert!(ok);
        let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
        std::fs::read(out.join(m["cells"][0]["file"].as_str().unwrap())).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn invalid_configuration_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for bad in [["--runs", "0"], ["--prior-width", "-3"], ["--grid-points", "1"]] {
        let out = study().args(["run", "--method", "map"]).args(bad).arg("--out").arg(dir.path()).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{bad:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn failure_curve_to_stdout() {
    let out = study().args(["failure-curve", "--n", "5", "--lo", "300", "--hi", "500"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "load,failure_probability");
    assert_eq!(lines.len(), 6);
    let mid: Vec<f64> = lines[3].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(mid[0], 400.0);
    assert!((mid[1] - 0.5).abs() < 1e-12);
}
