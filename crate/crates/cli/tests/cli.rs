use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn biped5(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biped5"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value(out: &str, key: &str) -> f64 {
    let prefix = format!("{key}=");
    out.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} in\n{out}"))
        .parse()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_writes_the_desired_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("gait.csv");
    let o = biped5(&["generate", "--out", p(&csv)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    for key in ["M1", "H1", "K", "M2", "C1", "C2", "C3", "r1", "r2"] {
        value(&out, key);
    }
    assert!(value(&out, "M1") * value(&out, "H1") < 0.0);
    assert_eq!(value(&out, "r1"), -value(&out, "r2"));

    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,theta1_d,theta2_d,theta3_d,theta4_d,theta5_d,\
         dtheta1_d,dtheta2_d,dtheta3_d,dtheta4_d,dtheta5_d,\
         ddtheta1_d,ddtheta2_d,ddtheta3_d,ddtheta4_d,ddtheta5_d"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 1001);
    assert!(rows.iter().all(|r| r[3] == FRAC_PI_2));
    let mid = rows.iter().find(|r| r[0] == 0.5).unwrap();
    assert!((mid[5] - mid[1] + 1.0).abs() < 1e-15);
}

#[test]
fn generate_grid_and_window_flags() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("g.csv");
    let o = biped5(&[
        "generate",
        "--period",
        "1.2",
        "--t0",
        "0.1",
        "--tf",
        "0.6",
        "--grid-ms",
        "5",
        "--alpha",
        "0.25",
        "--out",
        p(&csv),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = fs::read_to_string(&csv).unwrap().lines().count() - 1;
    assert_eq!(rows, 101);
}

#[test]
fn generate_rejects_bad_input() {
    let o = biped5(&["generate", "--period", "0", "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("period"), "{}", stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("robot.cfg");
    fs::write(&params, "link3.mass = 1.0\nlink3.first_moment = 10.0\n").unwrap();
    let o = biped5(&["generate", "--params", p(&params), "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("link"), "{}", stderr(&o));
}

#[test]
fn simulate_on_trajectory_and_with_offset() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let o = biped5(&["simulate", "--start-on-trajectory", "--out", p(&a)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(value(&stdout(&o), "max_abs_error") <= 1e-6);
    let header = fs::read_to_string(&a)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header.split(',').count(), 31);

    let b = dir.path().join("b.csv");
    let o = biped5(&["simulate", "--offset", "0.05", "--out", p(&b)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(value(&stdout(&o), "final_error") <= 1e-4);
    assert_eq!(fs::read_to_string(&b).unwrap().lines().count(), 1002);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for path in [&a, &b] {
        let o = biped5(&[
            "simulate",
            "--offset",
            "0.02",
            "--kp",
            "90",
            "--kv",
            "19",
            "--out",
            p(path),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn simulate_rejects_bad_gains() {
    let o = biped5(&["simulate", "--kp", "1,2,3", "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(1));
    let o = biped5(&["simulate", "--kv=-1", "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_passes_and_fault_fails() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.txt");
    let o = biped5(&["validate", "--out", p(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = fs::read_to_string(&report).unwrap();
    assert_eq!(text, stdout(&o));
    assert!(text.trim_end().ends_with("STATUS: PASS"));
    for key in [
        "analytic_vs_numeric_gait:",
        "printed_vs_oracle_ledger:",
        "printed_coefficient_deviations:",
        "swing_acceleration_sign_note:",
        "DISAGREES",
    ] {
        assert!(text.contains(key), "missing {key}");
    }

    let o = biped5(&["validate", "--corrupt-gravity", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.trim_end().ends_with("STATUS: FAIL"));
    let gate = text.split("gravity_gradient_check:").nth(1).unwrap();
    assert!(
        gate.lines().take(4).any(|l| l.trim() == "status: FAIL"),
        "{gate}"
    );
}

#[test]
fn render_counts_lines() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("gait.csv");
    assert!(biped5(&["generate", "--out", p(&csv)]).status.success());
    for n in [1usize, 7] {
        let svg = dir.path().join(format!("walk{n}.svg"));
        let o = biped5(&[
            "render",
            "-i",
            p(&csv),
            "--frames",
            &n.to_string(),
            "--out",
            p(&svg),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let text = fs::read_to_string(&svg).unwrap();
        assert!(text.starts_with("<?xml"));
        assert_eq!(text.matches("<line ").count(), 5 * n + 1);
    }
}

#[test]
fn render_upright_single_frame() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("upright.csv");
    let q = format!("{FRAC_PI_2:.16e}");
    fs::write(
        &csv,
        format!("t,theta1_d,theta2_d,theta3_d,theta4_d,theta5_d\n0,{q},{q},{q},{q},{q}\n"),
    )
    .unwrap();
    let svg = dir.path().join("up.svg");
    let o = biped5(&["render", "-i", p(&csv), "--frames", "1", "--out", p(&svg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&svg).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| l.contains("<line ")).collect();
    assert_eq!(lines.len(), 6);
    let attr = |l: &str, name: &str| -> String {
        let start = l.find(&format!(" {name}=\"")).unwrap() + name.len() + 3;
        l[start..].split('"').next().unwrap().to_string()
    };
    let ground = attr(lines[0], "y1");
    for l in &lines[1..] {
        assert_eq!(attr(l, "x1"), attr(l, "x2"), "not vertical: {l}");
    }
    assert_eq!(attr(lines[5], "y2"), ground);
}

#[test]
fn render_reports_malformed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    fs::write(
        &csv,
        "t,theta1,theta2,theta3,theta4,theta5\n0,1,1,1,1,1\n0.1,1,oops,1,1,1\n",
    )
    .unwrap();
    let o = biped5(&[
        "render",
        "-i",
        p(&csv),
        "--out",
        p(&dir.path().join("x.svg")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));
}
