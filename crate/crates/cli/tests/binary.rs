use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gis_cli::demo::{run_demo_example1, DemoVariant};
use gis_cli::export::{read_trajectory, write_trajectory};
use gis_core::integrate::{integrate, IntegratorConfig, Trajectory};
use gis_core::system::builtin::{example1_standard, Example1Variant, EXAMPLE1_X0};
use gis_core::Vector;
use tempfile::tempdir;

fn gis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gis")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn demo_outputs_are_byte_identical_across_runs() {
    let dir = tempdir().unwrap();
    for variant in [DemoVariant::Fig1, DemoVariant::Fig2] {
        let (a, b) = (dir.path().join(format!("{variant:?}a")), dir.path().join(format!("{variant:?}b")));
        assert!(run_demo_example1(variant, &a, 42).unwrap().passed);
        assert!(run_demo_example1(variant, &b, 42).unwrap().passed);
        for file in ["trajectory.csv", "x1.csv", "x2.csv", "report.csv"] {
            assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
        }
    }
}

#[test]
fn trajectory_csv_round_trips_exactly() {
    let dir = tempdir().unwrap();
    let traj =
        integrate(&example1_standard(Example1Variant::Fig1), &EXAMPLE1_X0, 0.0, 20.0, &IntegratorConfig::default())
            .unwrap();
    let path = dir.path().join("traj.csv");
    write_trajectory(&path, &traj).unwrap();
    let back = read_trajectory(&path).unwrap();
    assert_eq!(back.times(), traj.times());
    assert_eq!(back.states(), traj.states());

    let two = Trajectory::new(vec![0.0, 1.0], vec![Vector::new(vec![1.0]).unwrap(), Vector::new(vec![0.5]).unwrap()])
        .unwrap();
    write_trajectory(&path, &two).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 3);
}

#[test]
fn demo_binary_succeeds() {
    let dir = tempdir().unwrap();
    let out_dir = dir.path().join("fig2");
    let out = gis(&["demo", "example1", "--variant", "fig2", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("not a proof"), "missing scope note");
    assert!(out_dir.join("trajectory.csv").is_file());
}

#[test]
fn unwritable_output_directory_fails() {
    let dir = tempdir().unwrap();
    let blocker = write(dir.path(), "file", "");
    let out = gis(&["demo", "example1", "--out", &format!("{blocker}/sub")]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("file/sub"));
}

#[test]
fn exit_codes_distinguish_outcomes() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    let out = d.join("out");
    let out = out.to_str().unwrap();
    let decay = write(d, "decay.ini", "[system]\nf1 = -x1\n[sampling]\nn_space = 20\nn_time = 3\n");
    let growth = write(d, "growth.ini", "[system]\nf1 = x1\n[sampling]\nn_space = 20\nn_time = 3\n");
    let broken = write(d, "broken.ini", "[system]\nf1 = -x1 +\n");
    let weight = write(d, "p.txt", "1 0\n0 16\n");

    assert_eq!(code(&gis(&["certify", "--config", &decay, "--out", out])), 0);
    assert_eq!(code(&gis(&["certify", "--config", &growth, "--out", out])), 1);
    let bad = gis(&["certify", "--config", &broken]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2, column 11"));
    assert_eq!(code(&gis(&["certify", "--config", &d.join("missing.ini").to_string_lossy()])), 3);
    assert_eq!(code(&gis(&["certify", "--config", &decay, "--norm", "l7"])), 2);
    assert_eq!(code(&gis(&["simulate", "--config", &decay, "--tf", "3", "--out", out])), 0);
    assert!(d.join("out/trajectory.csv").is_file());
    assert_eq!(code(&gis(&["simulate", "--config", &decay, "--tf", "-1"])), 2);

    let ln = gis(&["lognorm", "--matrix", "-1 4; 0 -1", "--norm", &format!("weighted:{weight}"), "--norm", "l1"]);
    assert_eq!(code(&ln), 0);
    let text = String::from_utf8_lossy(&ln.stdout);
    assert!(text.contains("weighted") && text.contains("l1"), "{text}");
    assert_eq!(code(&gis(&["lognorm", "--matrix", "1 2 3; 4 5 6"])), 2);
    assert_eq!(code(&gis(&["bogus"])), 2);
}
