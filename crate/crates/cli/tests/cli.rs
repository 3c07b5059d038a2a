//! End-to-end tests of the command line interface: exit codes, file formats
//! and report schema.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn kfbi() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kfbi"))
}

fn run(args: &[&str]) -> Output {
    kfbi().args(args).output().expect("binary runs")
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kfbi_cli_{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn solve_writes_field_and_report() {
    let dir = tmpdir("solve");
    let field = dir.join("sol.csv");
    let report = dir.join("rep.json");
    let out = run(&[
        "solve",
        "--grid",
        "64",
        "--domain",
        "circle:1.0",
        "--exact",
        "exp-trig",
        "--out",
        field.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&field).unwrap();
    assert!(text.starts_with("x,y,value,inside\n"));
    assert_eq!(text.lines().count(), 1 + 65 * 65);
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["schema_version"], 1);
    assert_eq!(rep["command"], "solve");
}

#[test]
fn field_csv_round_trips_bitwise() {
    let dir = tmpdir("roundtrip");
    let field = dir.join("sol.csv");
    let out = run(&[
        "solve",
        "--grid",
        "32",
        "--domain",
        "circle:1.0",
        "--exact",
        "quadratic",
        "--kappa",
        "1.0",
        "--out",
        field.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&field).unwrap();
    // Re-render every parsed float at 17 significant digits: it must
    // reproduce the file exactly.
    for line in text.lines().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        for raw in &parts[..3] {
            let parsed: f64 = raw.parse().unwrap();
            assert_eq!(&format!("{parsed:.16e}"), raw, "field value drifted: {raw}");
        }
    }
}

#[test]
fn vtk_output_has_structured_points_header() {
    let dir = tmpdir("vtk");
    let field = dir.join("sol.vtk");
    let out = run(&[
        "solve",
        "--grid",
        "24",
        "--domain",
        "circle:1.0",
        "--exact",
        "constant-one",
        "--kappa",
        "1.0",
        "--format",
        "vtk",
        "--out",
        field.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&field).unwrap();
    assert!(text.contains("DATASET STRUCTURED_POINTS"));
    assert!(text.contains("DIMENSIONS 25 25 1"));
    assert!(text.contains("nan"));
}

#[test]
fn converge_table_has_expected_shape() {
    let dir = tmpdir("converge");
    let table = dir.join("errors.csv");
    let config = dir.join("run.toml");
    std::fs::write(
        &config,
        format!(
            "[converge]\ngrids = [24, 48]\ntable = \"{}\"\n",
            table.to_str().unwrap().replace('\\', "/")
        ),
    )
    .unwrap();
    let out = run(&[
        "converge",
        "--config",
        config.to_str().unwrap(),
        "--domain",
        "circle:1.0",
        "--exact",
        "constant-one",
        "--kappa",
        "1.0",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "grid,h,e_inf,e_l2,order_inf,order_l2,iters");
    assert_eq!(lines.len(), 3);
    // First row has empty order columns.
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[4], "");
    assert_eq!(first[5], "");
    // Constant solution is exact.
    let e_inf: f64 = first[2].parse().unwrap();
    assert!(e_inf < 1e-10, "constant run error {e_inf}");
}

#[test]
fn converge_writes_failure_markers_for_bad_rows() {
    // Grid 4 leaves fewer than 8 control points on the unit circle, so that
    // row fails while the finer row still solves.
    let dir = tmpdir("converge_partial");
    let table = dir.join("errors.csv");
    let config = dir.join("run.toml");
    std::fs::write(
        &config,
        format!(
            "[converge]\ngrids = [4, 48]\ntable = \"{}\"\n",
            table.to_str().unwrap().replace('\\', "/")
        ),
    )
    .unwrap();
    let out = run(&[
        "converge",
        "--config",
        config.to_str().unwrap(),
        "--domain",
        "circle:1.0",
        "--exact",
        "constant-one",
        "--kappa",
        "1.0",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains("failed"), "row 1 should be marked failed: {}", lines[1]);
    assert!(!lines[2].contains("failed"), "row 2 should have solved: {}", lines[2]);
}

#[test]
fn validation_errors_exit_with_code_2_and_prefix() {
    let out = run(&["solve", "--tol", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error[config]:"), "stderr: {err}");

    let out = run(&["solve", "--workers", "4", "--grid", "8"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("4 grid columns"), "stderr: {err}");
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for module in [
        "geometry",
        "grid",
        "jumps",
        "correction",
        "fast_poisson",
        "arrowhead",
        "interpolation",
        "bie",
        "partition",
        "timestepper",
    ] {
        assert!(text.contains(&format!("PASS {module}")), "missing {module}");
    }
}

#[test]
fn report_validates_against_bundled_schema() {
    let dir = tmpdir("schema");
    let report = dir.join("rep.json");
    let out = run(&[
        "solve",
        "--grid",
        "32",
        "--domain",
        "circle:1.0",
        "--exact",
        "constant-one",
        "--kappa",
        "1.0",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let schema: Value = serde_json::from_str(include_str!("../report.schema.json")).unwrap();
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    validate(&schema, &rep, "report");
}

/// Minimal structural validator: checks required properties and types
/// against the subset of JSON-schema the bundled file uses.
fn validate(schema: &Value, value: &Value, path: &str) {
    if let Some(ty) = schema["type"].as_str() {
        let ok = match ty {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "integer" => value.is_i64() || value.is_u64(),
            "number" => value.is_number(),
            _ => true,
        };
        assert!(ok, "{path}: expected {ty}, got {value}");
    }
    if let Some(required) = schema["required"].as_array() {
        for key in required {
            let key = key.as_str().unwrap();
            assert!(
                value.get(key).is_some(),
                "{path}: missing required key {key}"
            );
        }
    }
    if let Some(props) = schema["properties"].as_object() {
        for (key, subschema) in props {
            if let Some(sub) = value.get(key) {
                validate(subschema, sub, &format!("{path}.{key}"));
            }
        }
    }
    if let Some(items) = schema.get("items") {
        if let Some(arr) = value.as_array() {
            for (i, item) in arr.iter().enumerate() {
                validate(items, item, &format!("{path}[{i}]"));
            }
        }
    }
    if let Some(allowed) = schema["enum"].as_array() {
        assert!(
            allowed.contains(value),
            "{path}: {value} not in enum {allowed:?}"
        );
    }
}

#[test]
fn deterministic_rerun_matches_except_wall_time() {
    let dir = tmpdir("determinism");
    let mut reports = Vec::new();
    for name in ["a.json", "b.json"] {
        let report = dir.join(name);
        let out = run(&[
            "solve",
            "--grid",
            "48",
            "--domain",
            "star:1.0,0.2,4",
            "--box",
            "-1.5,1.5,-1.5,1.5",
            "--exact",
            "exp-trig",
            "--workers",
            "2",
            "--report",
            report.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let mut rep: Value =
            serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
        rep.as_object_mut().unwrap().remove("wall_time_seconds");
        // The echoed output path necessarily differs between the two runs.
        rep["config"]["output"]
            .as_object_mut()
            .unwrap()
            .remove("report");
        reports.push(rep);
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn gray_scott_runs_and_reports() {
    let dir = tmpdir("gs");
    let report = dir.join("gs.json");
    let field = dir.join("gs.csv");
    let config = dir.join("gs.toml");
    std::fs::write(
        &config,
        "[gray_scott]\ngamma = 0.024\nkappa_r = 0.06\neps0 = 0.01\neps1 = 0.008\neps2 = 0.004\ndt = 0.25\nend_time = 0.5\n\n[output]\nsnapshots = [0.25]\nformat = \"csv\"\n",
    )
    .unwrap();
    let out = run(&[
        "gray-scott",
        "--config",
        config.to_str().unwrap(),
        "--grid",
        "48",
        "--domain",
        "circle:1.8",
        "--box",
        "-2,2,-2,2",
        "--out",
        field.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("gs-u.csv").exists());
    assert!(dir.join("gs-v.csv").exists());
    assert!(dir.join("gs-t0.25-u.csv").exists());
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["command"], "gray-scott");
    assert_eq!(rep["steps"], 2);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tmpdir("badconfig");
    let config = dir.join("bad.toml");
    std::fs::write(&config, "[solver]\nbogus_key = 1\n").unwrap();
    let out = run(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[config]:"));
}


#[test]
fn partitioned_solve_dumps_message_audit() {
    let dir = tmpdir("audit");
    let audit = dir.join("messages.jsonl");
    let out = run(&[
        "solve",
        "--grid",
        "48",
        "--domain",
        "circle:1.0",
        "--exact",
        "exp-trig",
        "--workers",
        "3",
        "--audit",
        audit.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&audit).unwrap();
    assert!(!text.is_empty());
    let mut tags = std::collections::HashSet::new();
    for line in text.lines() {
        let record: Value = serde_json::from_str(line).unwrap();
        tags.insert(record["tag"].as_str().unwrap().to_string());
        if record["tag"] == "ghost-exchange" {
            let from = record["from"].as_u64().unwrap();
            let to = record["to"].as_u64().unwrap();
            assert_eq!(from.abs_diff(to), 1);
        }
    }
    for tag in ["ghost-exchange", "boundary-gather", "boundary-scatter", "separator"] {
        assert!(tags.contains(tag), "missing {tag} records");
    }
}
