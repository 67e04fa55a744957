//! Integration tests for the command-line front end: determinism, the
//! self-describing-output closure property, exit statuses, and format
//! round-trips.

use std::path::PathBuf;
use std::process::Command;

use floquet_well::cli::{config_from_metadata, metadata_from_csv, run};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_floquet-well")
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("floquet-well-cli-{}-{tag}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

fn paper_args() -> Vec<String> {
    [
        ("a", "1"),
        ("b", "2"),
        ("v0", "15"),
        ("v0_prime", "7.5"),
    ]
    .iter()
    .flat_map(|(k, v)| ["--set".to_string(), format!("{k}={v}")])
    .collect()
}

fn run_ok(args: &[String]) -> String {
    let output = Command::new(binary()).args(args).output().expect("spawn");
    assert!(
        output.status.success(),
        "cli {:?}: {}",
        args,
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).expect("utf-8")
}

fn exit_code(args: &[String]) -> i32 {
    Command::new(binary())
        .args(args)
        .output()
        .expect("spawn")
        .status
        .code()
        .expect("exit code")
}

#[test]
fn identical_configurations_render_identical_bytes() {
    let mut args = vec!["nondecay".to_string()];
    args.extend(paper_args());
    for (k, v) in [
        ("v1", "3"),
        ("omega", "9.3"),
        ("t_max", "4"),
        ("t_points", "9"),
    ] {
        args.push("--set".into());
        args.push(format!("{k}={v}"));
    }
    let first = run_ok(&args);
    let second = run_ok(&args);
    assert_eq!(first, second);
}

#[test]
fn config_file_and_set_overrides_compose() {
    let dir = scratch_dir("config");
    let config_path = dir.join("well.conf");
    std::fs::write(
        &config_path,
        "# paper well\na = 1\nb = 2\nv0 = 15\nv0_prime = 7.5\nv1 = 3\nomega = 5.0\n",
    )
    .unwrap();
    let args = vec![
        "solve".to_string(),
        "--config".into(),
        config_path.to_str().unwrap().into(),
        "--set".into(),
        "omega=9.3".into(),
        "--ratio".into(),
    ];
    let text = run_ok(&args);
    assert!(
        text.contains("# omega = 9.3000000000000007e0"),
        "override did not apply:\n{text}"
    );
}

#[test]
fn emitted_metadata_reruns_to_identical_output() {
    let dir = scratch_dir("closure");
    let out_first = dir.join("first.csv");
    let mut args = vec!["solve".to_string()];
    args.extend(paper_args());
    for (k, v) in [("v1", "3"), ("omega", "9.3")] {
        args.push("--set".into());
        args.push(format!("{k}={v}"));
    }
    args.push("--ratio".into());
    args.push("--out".into());
    args.push(out_first.to_str().unwrap().into());
    let status = Command::new(binary()).args(&args).status().unwrap();
    assert!(status.success());

    // Rebuild the run purely from the emitted file's metadata block.
    let text = std::fs::read_to_string(&out_first).unwrap();
    let metadata = metadata_from_csv(&text);
    let mut config = config_from_metadata(&metadata).expect("metadata closes over the run");
    let out_second = dir.join("second.csv");
    config.out = Some(out_second.clone());
    run(&config).unwrap();

    let first = std::fs::read(&out_first).unwrap();
    let second = std::fs::read(&out_second).unwrap();
    assert_eq!(first, second, "re-run from metadata must reproduce the file");
}

#[test]
fn invalid_input_exits_with_status_2() {
    // Empty sweep.
    let mut args = vec!["trace".to_string()];
    args.extend(paper_args());
    for (k, v) in [("omega_start", "5"), ("omega_stop", "5")] {
        args.push("--set".into());
        args.push(format!("{k}={v}"));
    }
    assert_eq!(exit_code(&args), 2);

    // Unknown key.
    let mut args = vec!["static".to_string()];
    args.extend(paper_args());
    args.push("--set".into());
    args.push("mystery=1".into());
    assert_eq!(exit_code(&args), 2);

    // Missing required key.
    let args = vec![
        "static".to_string(),
        "--set".into(),
        "a=1".into(),
    ];
    assert_eq!(exit_code(&args), 2);
}

#[test]
fn solver_failure_exits_with_status_3() {
    // A real-axis guess at very high frequency pins the iteration against
    // the closed-channel sheet boundary and cannot converge.
    let mut args = vec!["solve".to_string()];
    args.extend(paper_args());
    for (k, v) in [("v1", "3"), ("omega", "1500"), ("guess", "3.4818")] {
        args.push("--set".into());
        args.push(format!("{k}={v}"));
    }
    assert_eq!(exit_code(&args), 3);
}

#[test]
fn io_failure_exits_with_status_4() {
    let mut args = vec!["static".to_string()];
    args.extend(paper_args());
    args.push("--out".into());
    args.push("/nonexistent-floquet-dir/out.csv".into());
    assert_eq!(exit_code(&args), 4);
}

#[test]
fn csv_floats_round_trip_bit_exactly() {
    let mut args = vec!["nondecay".to_string()];
    args.extend(paper_args());
    for (k, v) in [
        ("v1", "3"),
        ("omega", "9.3"),
        ("t_max", "2"),
        ("t_points", "5"),
    ] {
        args.push("--set".into());
        args.push(format!("{k}={v}"));
    }
    let text = run_ok(&args);
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap();
    assert_eq!(header, "t,p,p_bar,h");
    let mut checked = 0;
    for line in lines {
        for cell in line.split(',') {
            let value: f64 = cell.parse().expect("numeric cell");
            // Formatting the parsed value reproduces the emitted text.
            assert_eq!(format!("{value:.16e}"), cell);
            checked += 1;
        }
    }
    assert!(checked >= 20);
}

#[test]
fn json_output_mirrors_the_table() {
    let mut args = vec!["solve".to_string()];
    args.extend(paper_args());
    for (k, v) in [("v1", "3"), ("omega", "9.3")] {
        args.push("--set".into());
        args.push(format!("{k}={v}"));
    }
    args.push("--format".into());
    args.push("json".into());
    let text = run_ok(&args);
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["metadata"]["command"], "solve");
    let rows = parsed["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!(row["re_epsilon"].is_f64());
        assert!(row["im_epsilon"].is_f64());
        assert!(row["physical"].is_boolean());
    }
    // JSON reruns are byte-identical too.
    assert_eq!(run_ok(&args), text);
}

#[test]
fn spectrum_free_well_emits_a_header_only_table() {
    let args = vec![
        "static".to_string(),
        "--set".into(),
        "a=1".into(),
        "--set".into(),
        "b=2".into(),
        "--set".into(),
        "v0=0.05".into(),
        "--set".into(),
        "v0_prime=0.025".into(),
    ];
    let text = run_ok(&args);
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body, vec!["level,kind,re_energy,im_energy"]);
}

#[test]
fn output_files_are_written_atomically() {
    let dir = scratch_dir("atomic");
    let out = dir.join("table.csv");
    let mut args = vec!["static".to_string()];
    args.extend(paper_args());
    args.push("--out".into());
    args.push(out.to_str().unwrap().into());
    let status = Command::new(binary()).args(&args).status().unwrap();
    assert!(status.success());
    assert!(out.exists());
    // No stray temporary file left behind.
    assert!(!dir.join("table.tmp").exists());
}

#[test]
fn ratio_flag_rescales_energies() {
    let mut args = vec!["static".to_string()];
    args.extend(paper_args());
    let plain = run_ok(&args);
    args.push("--ratio".into());
    let scaled = run_ok(&args);
    let value = |text: &str| -> f64 {
        text.lines()
            .filter(|l| !l.starts_with('#'))
            .nth(1)
            .unwrap()
            .split(',')
            .nth(2)
            .unwrap()
            .parse()
            .unwrap()
    };
    let ratio = value(&plain) / value(&scaled);
    assert!((ratio - 15.0).abs() < 1e-9);
}

#[test]
fn trace_emits_branch_samples_with_zone_views() {
    let mut args = vec!["trace".to_string()];
    args.extend(paper_args());
    for (k, v) in [
        ("v1", "1.5"),
        ("omega_start", "8.25"),
        ("omega_stop", "8.7"),
        ("omega_step", "0.075"),
    ] {
        args.push("--set".into());
        args.push(format!("{k}={v}"));
    }
    let text = run_ok(&args);
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "branch,parent_level,offset,omega,re_epsilon,im_epsilon,re_epsilon_zone,status"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|line| {
            line.split(',')
                .take(7)
                .map(|cell| cell.parse().unwrap())
                .collect()
        })
        .collect();
    // Two branches (one per static level), each spanning the sweep.
    let branches: std::collections::BTreeSet<i64> =
        rows.iter().map(|r| r[0] as i64).collect();
    assert_eq!(branches.len(), 2);
    for row in &rows {
        let (offset, omega, re_eps, re_zone) = (row[2], row[3], row[4], row[6]);
        assert!((re_zone - (re_eps + offset * omega)).abs() < 1e-9);
        assert!((8.25 - 1e-9..=8.7 + 1e-9).contains(&omega));
    }
}

#[test]
fn density_emits_normalized_profiles_per_time() {
    let mut args = vec!["density".to_string()];
    args.extend(paper_args());
    for (k, v) in [
        ("v1", "3"),
        ("omega", "9.3"),
        ("times", "0,6.666666666666667"),
        ("x_points", "41"),
        ("root_index", "0"),
    ] {
        args.push("--set".into());
        args.push(format!("{k}={v}"));
    }
    let text = run_ok(&args);
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), "t,x,density");
    let rows: Vec<Vec<f64>> = lines
        .map(|line| line.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2 * 41);
    // Hard wall: the x = 0 sample vanishes at every time.
    for row in rows.iter().filter(|r| r[1] == 0.0) {
        assert_eq!(row[2], 0.0);
    }
    // Densities are non-negative and the later frame carries less weight.
    assert!(rows.iter().all(|r| r[2] >= 0.0));
    let weight = |t: f64| -> f64 {
        rows.iter().filter(|r| r[0] == t).map(|r| r[2]).sum()
    };
    assert!(weight(6.666666666666667) < weight(0.0));
}
