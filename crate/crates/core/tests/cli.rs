use std::path::Path;
use std::process::{Command, Output};

use nls_lab::dynamics::{Sign, SolverConfig, Truncation};
use nls_lab::io::{read_report, read_snapshot};

const PLANE_WAVE: &str = "\
run.experiment = \"solve\"
grid.circumference = 32.0
grid.points = 256
solver.dt = 1e-3
solver.horizon = 0.2
data.generator = \"plane-wave\"
data.xi = 0.5890486225480862
data.amplitude = 0.5
";

fn nls_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nls-lab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn passing_solve_exits_zero_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pw.cfg", PLANE_WAVE);
    let out = dir.path().join("out");
    let o = nls_lab(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("PASS closed_form"), "{stdout}");
    assert!(!stdout.contains("FAIL"));

    let rep = read_report(&out.join("solve.report")).unwrap();
    assert!(rep.all_pass() && rep.verdicts_consistent());
    assert_eq!(rep.config_hash.len(), 16);
    assert!(rep.timestamp.is_some());
    let solver = SolverConfig::new(Sign::Defocusing, Truncation::None, 1e-3, 0.2).unwrap();
    let traj = read_snapshot(&out.join("solve.nls"), &solver).unwrap();
    assert_eq!(traj.len(), 201);
    assert_eq!(traj.grid.points(), 256);
}

#[test]
fn failing_verdict_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "strict.cfg", &format!("{PLANE_WAVE}tolerance.closed-form = 1e-30\n"));
    let o = nls_lab(&["solve", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL closed_form"));
}

#[test]
fn errors_exit_one_with_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let bad = write(dir.path(), "bad.cfg", "# comment\npigeonhole.trials = 4\npigeonhole.colour = 1\n");
    let o = nls_lab(&["pigeonhole", "--config", &bad, "--out", d]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("pigeonhole.colour"), "{err}");

    let wrong = write(dir.path(), "wrong.cfg", PLANE_WAVE);
    let o = nls_lab(&["norms", "--config", &wrong, "--out", d]);
    assert_eq!(o.status.code(), Some(1));

    assert_eq!(nls_lab(&["solve", "--config", "/nonexistent/x.cfg"]).status.code(), Some(1));
    assert_eq!(nls_lab(&["solve"]).status.code(), Some(1));
    assert_eq!(nls_lab(&["frobnicate", "--config", &bad]).status.code(), Some(1));
    assert_eq!(nls_lab(&["--help"]).status.code(), Some(0));
}

#[test]
fn seed_flag_overrides_config_and_quiet_silences() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ph.cfg", "run.seed = 5\npigeonhole.trials = 6\n");
    let mut hashes = Vec::new();
    for (sub, seed) in [("a", None), ("b", Some("123"))] {
        let out = dir.path().join(sub);
        let mut args = vec!["pigeonhole", "--config", &cfg, "--out", out.to_str().unwrap(), "--quiet"];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        let o = nls_lab(&args);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
        let rep = read_report(&out.join("pigeonhole.report")).unwrap();
        assert_eq!(rep.seed, Some(seed.map_or(5, |s| s.parse().unwrap())));
        hashes.push(rep.config_hash);
    }
    assert_ne!(hashes[0], hashes[1]);
}

#[test]
fn output_dir_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-config");
    let cfg = write(
        dir.path(),
        "wp.cfg",
        &format!("output.dir = {:?}\nweak.horizon = 0.25\nweak.dt = 2.5e-3\n", target.to_str().unwrap()),
    );
    let o = nls_lab(&["weak-wp", "--config", &cfg, "--quiet"]);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(target.join("weak-wp.report").exists());
}
