use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jointmeas"))
        .args(args)
        .env_remove("JOINTMEAS_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    assert!(
        o.status.code().is_some(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    serde_json::from_slice(&o.stdout).expect("valid JSON on stdout")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn s(x: f64) -> String {
    format!("{x:.17}")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(format!("{name}-{}", std::process::id()))
}

#[test]
fn curve_quarter_circle_rows() {
    let o = run(&["curve", "--theta", &s(FRAC_PI_2), "--points", "3"]);
    assert_eq!(code(&o), 0);
    let doc = json(&o);
    assert_eq!(doc["schema_version"], "1");
    assert_eq!(doc["command"], "curve");
    let pts = doc["payload"]["points"].as_array().unwrap();
    let expect = [
        (0.0, 1.0, 0.0),
        (FRAC_PI_4, 1.0 - FRAC_1_SQRT_2, 1.0 - FRAC_1_SQRT_2),
        (FRAC_PI_2, 0.0, 1.0),
    ];
    for (p, (phi, ea, eb)) in pts.iter().zip(expect) {
        assert!((f(&p["phi"]) - phi).abs() < 1e-15);
        assert!((f(&p["e_a"]) - ea).abs() < 1e-15);
        assert!((f(&p["e_b"]) - eb).abs() < 1e-15);
    }
}

#[test]
fn curve_csv_has_fixed_header_and_monotone_columns() {
    let o = run(&[
        "--format",
        "csv",
        "curve",
        "--theta",
        &s(FRAC_PI_3),
        "--points",
        "101",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# jointmeas 1 curve"));
    assert_eq!(lines.next(), Some("phi,e_a,e_b,c"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 101);
    for w in rows.windows(2) {
        assert!(w[1][1] < w[0][1]);
        assert!(w[1][2] > w[0][2]);
    }
}

#[test]
fn commuting_theta_is_a_usage_error() {
    for theta in ["0", "1e-12", "3.141592653589793"] {
        let o = run(&["curve", "--theta", theta]);
        assert_eq!(code(&o), 2);
        assert!(String::from_utf8_lossy(&o.stderr).contains("commute"));
    }
    assert_eq!(code(&run(&["curve", "--theta", "4"])), 2);
    assert_eq!(code(&run(&["curve", "--theta", "abc"])), 2);
    assert_eq!(code(&run(&["curve", "--theta", "1", "--points", "1"])), 2);
}

#[test]
fn degrees_match_radians() {
    let deg = run(&["curve", "--degrees", "--theta", "60", "--points", "5"]);
    let rad = run(&["curve", "--theta", &s(FRAC_PI_3), "--points", "5"]);
    let (d, r) = (json(&deg), json(&rad));
    assert!((f(&d["inputs"]["theta"]) - FRAC_PI_3).abs() < 1e-15);
    for (a, b) in d["payload"]["points"]
        .as_array()
        .unwrap()
        .iter()
        .zip(r["payload"]["points"].as_array().unwrap())
    {
        assert!((f(&a["e_a"]) - f(&b["e_a"])).abs() < 1e-15);
    }
}

#[test]
fn classify_exit_codes() {
    let t = s(FRAC_PI_2);
    let forbidden = run(&[
        "classify", "--theta", &t, "--eps-a", "0.1", "--eps-b", "0.1",
    ]);
    assert_eq!(code(&forbidden), 3);
    assert_eq!(json(&forbidden)["payload"]["region"], "forbidden");

    let e = s(1.0 - FRAC_1_SQRT_2);
    let boundary = run(&["classify", "--theta", &t, "--eps-a", &e, "--eps-b", &e]);
    assert_eq!(code(&boundary), 0);
    let doc = json(&boundary);
    assert_eq!(doc["payload"]["region"], "boundary");
    assert!((f(&doc["payload"]["witness_phi"]) - FRAC_PI_4).abs() < 1e-4);

    let interior = run(&[
        "classify", "--theta", &t, "--eps-a", "0.5", "--eps-b", "0.5",
    ]);
    assert_eq!(code(&interior), 0);
    assert_eq!(json(&interior)["payload"]["region"], "interior");

    assert_eq!(
        code(&run(&[
            "classify", "--theta", &t, "--eps-a", "3", "--eps-b", "0"
        ])),
        2
    );
}

#[test]
fn construct_orthogonal_case() {
    let o = run(&[
        "construct",
        "--theta",
        &s(FRAC_PI_2),
        "--phi",
        &s(FRAC_PI_4),
    ]);
    assert_eq!(code(&o), 0);
    let p = &json(&o)["payload"];
    assert_eq!(p["method"], "boundary");
    assert_eq!(p["checks"]["all_pass"], true);
    let pr = &p["protocol"];
    assert!((f(&pr["p_plus"]) - 0.5).abs() < 1e-12);
    assert!((f(&pr["p_minus"]) - 0.5).abs() < 1e-12);
    for (key, sign) in [("l_plus", 1.0), ("l_minus", -1.0)] {
        let l: Vec<f64> = pr[key].as_array().unwrap().iter().map(f).collect();
        assert!((l[0] - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(l[1].abs() < 1e-12);
        assert!((l[2] - sign * FRAC_1_SQRT_2).abs() < 1e-12);
    }
}

#[test]
fn construct_routes_by_target_error() {
    let theta = FRAC_PI_3;
    let edge = run(&[
        "construct",
        "--theta",
        &s(theta),
        "--eps-a",
        &s(theta.sin()),
    ]);
    let p = &json(&edge)["payload"];
    assert_eq!(p["method"], "boundary");
    assert!(f(&p["phi"]).abs() < 1e-12);

    let commuting = run(&["construct", "--theta", &s(theta), "--eps-a", "1.5"]);
    let p = &json(&commuting)["payload"];
    assert_eq!(p["method"], "commuting");
    assert!((f(&p["errors"]["eps_a"]) - 1.5).abs() < 1e-12);
    assert!(f(&p["errors"]["eps_b"]).abs() < 1e-12);
    assert_eq!(p["checks"]["all_pass"], true);

    let explicit = run(&[
        "construct",
        "--theta",
        &s(theta),
        "--eps-a",
        "0.9",
        "--eps-b",
        "0",
    ]);
    assert_eq!(json(&explicit)["payload"]["method"], "commuting");

    let degenerate = run(&["construct", "--theta", "0", "--eps-a", "0.4"]);
    assert_eq!(code(&degenerate), 0);
    assert_eq!(json(&degenerate)["payload"]["method"], "commuting");

    assert_eq!(
        code(&run(&["construct", "--theta", "0", "--phi", "0.3"])),
        2
    );
    assert_eq!(
        code(&run(&[
            "construct",
            "--theta",
            "1",
            "--eps-a",
            "0.2",
            "--eps-b",
            "0"
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "construct",
            "--theta",
            "1",
            "--eps-a",
            "0.2",
            "--eps-b",
            "0.1"
        ])),
        2
    );
    assert_eq!(code(&run(&["construct", "--theta", "1"])), 2);
}

#[test]
fn construct_passes_all_checks_off_axis() {
    let o = run(&["construct", "--theta", &s(FRAC_PI_3), "--phi", "0.7"]);
    assert_eq!(json(&o)["payload"]["checks"]["all_pass"], true);

    let o = run(&[
        "construct",
        "--a-dir",
        "0,0,2",
        "--b-dir",
        "1,1,-1",
        "--phi",
        "0.3",
    ]);
    let p = &json(&o)["payload"];
    assert_eq!(p["checks"]["all_pass"], true);
    assert!(f(&p["theta"]) > FRAC_PI_2);
}

#[test]
fn construct_then_verify_round_trip() {
    for (theta, phi) in [(FRAC_PI_3, 0.7), (2.4, 1.1), (FRAC_PI_6, 0.0)] {
        let o = run(&["construct", "--theta", &s(theta), "--phi", &s(phi)]);
        assert_eq!(code(&o), 0);
        let built = json(&o);
        let path = scratch(&format!("povm-{theta}-{phi}.json"));
        std::fs::write(&path, &o.stdout).unwrap();

        let v = run(&["verify", "--povm", path.to_str().unwrap()]);
        assert_eq!(code(&v), 0, "{}", String::from_utf8_lossy(&v.stderr));
        let scored = json(&v);
        for k in ["eps_a", "eps_b"] {
            let a = f(&built["payload"]["errors"][k]);
            let b = f(&scored["payload"]["errors"][k]);
            assert!((a - b).abs() <= 1e-12, "{k}: {a} vs {b}");
        }
        assert_eq!(scored["payload"]["classification"]["region"], "boundary");
        std::fs::remove_file(path).ok();
    }
}

#[test]
fn verify_rejects_non_povm_file() {
    let path = scratch("bad.json");
    std::fs::write(
        &path,
        "[{\"mu\": 1, \"nu\": 1, \"w\": 3.0, \"v\": [0, 0, 0]}]",
    )
    .unwrap();
    let o = run(&["verify", "--theta", "1", "--povm", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    std::fs::remove_file(path).ok();
}

#[test]
fn simulate_is_deterministic_and_consistent() {
    let args = [
        "simulate",
        "--theta",
        &s(FRAC_PI_3),
        "--phi",
        &s(std::f64::consts::PI / 5.0),
        "--shots",
        "200000",
        "--seed",
        "17",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let p = &json(&a)["payload"];
    assert!(f(&p["z_a"]).abs() < 4.0);
    assert!(f(&p["z_b"]).abs() < 4.0);

    let other = run(&[&args[..8], &["18"]].concat());
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn simulate_thread_count_does_not_change_output() {
    let args = [
        "simulate", "--theta", "1.2", "--phi", "0.5", "--shots", "300000",
    ];
    let default = run(&args);
    let single = Command::new(env!("CARGO_BIN_EXE_jointmeas"))
        .args(args)
        .env("JOINTMEAS_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(default.stdout, single.stdout);

    let bad = Command::new(env!("CARGO_BIN_EXE_jointmeas"))
        .args(args)
        .env("JOINTMEAS_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn simulate_writes_shot_streams() {
    let prefix = scratch("shots");
    let o = run(&[
        "simulate",
        "--theta",
        "1.0",
        "--phi",
        "0.4",
        "--shots",
        "1000",
        "--shots-out",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    for suffix in ["_a.csv", "_b.csv"] {
        let path = PathBuf::from(format!("{}{suffix}", prefix.display()));
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("seed,index,s,mu"));
        assert_eq!(lines.count(), 1000);
        std::fs::remove_file(path).ok();
    }
}

#[test]
fn verify_quick_orthogonal() {
    let o = run(&[
        "verify",
        "--theta",
        &s(FRAC_PI_2),
        "--preset",
        "quick",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&o), 0);
    let p = &json(&o)["payload"];
    assert_eq!(p["search"]["violations"], 0);
    assert_eq!(p["pass"], true);
    assert!(f(&p["envelope_residual"]) <= 1e-6);
}

#[test]
fn verify_full_reaches_the_curve() {
    let o = run(&["verify", "--theta", &s(FRAC_PI_6), "--preset", "full"]);
    assert_eq!(code(&o), 0);
    let p = &json(&o)["payload"];
    assert!(f(&p["search"]["max_excess"]) <= 1e-3);
    assert_eq!(p["search"]["best_pairs"].as_array().unwrap().len(), 9);
}

#[test]
fn verify_is_deterministic_and_rejects_bad_theta() {
    let args = ["verify", "--theta", "0.9", "--seed", "4"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    assert_eq!(code(&run(&["verify", "--theta", "nope"])), 2);
    assert_eq!(code(&run(&["verify", "--theta", "0"])), 2);
    assert_eq!(code(&run(&["verify"])), 2);
}
