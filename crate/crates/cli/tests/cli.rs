use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_denjoy");

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Sandbox { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self, name: &str, json: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, json).unwrap();
        p
    }
}

fn denjoy(args: &[&str], config: &Path, envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).arg("--config").arg(config);
    for var in ["DENJOY_CONFIG", "DENJOY_THREADS", "DENJOY_QUAD_REL", "DENJOY_QUAD_ABS", "DENJOY_INVERSION_TOL", "DENJOY_INVERSION_MAX_ITER"] {
        cmd.env_remove(var);
    }
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn rows(csv_text: &[u8]) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_reader(csv_text);
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let body = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, body)
}

const E1: &str = r#"{"lambda_star": -1.0, "gaps": [{"a": 1.0, "b": 2.0}], "alpha": [0.23],
  "lambda_grid": {"re": {"start": -1.0, "end": 3.0, "count": 3}, "im": {"start": 0.5, "end": 1.0, "count": 2}}}"#;

#[test]
fn free_m_function_samples_are_i_sqrt_lambda() {
    let sb = Sandbox::new();
    let cfg = sb.config("free.json", r#"{"lambda_star": -1.0, "lambda_points": [[-4.0, 0.0], [0.5, 0.5], [2.0, 0.0], [-1.0, -2.0]]}"#);
    let out = sb.path("m.csv");
    let o = denjoy(&["m-function", "--out", out.to_str().unwrap()], &cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, body) = rows(&std::fs::read(&out).unwrap());
    assert_eq!(header, ["lambda_re", "lambda_im", "m_plus_re", "m_plus_im", "m_minus_re", "m_minus_im", "r0_re", "r0_im"]);
    assert_eq!(body.len(), 4);
    for r in &body {
        let lam = denjoy::Complex64::new(r[0], r[1]);
        let s = if lam.im == 0.0 && lam.re >= 0.0 {
            denjoy::Complex64::new(lam.re.sqrt(), 0.0)
        } else {
            denjoy::Complex64::new(0.0, 1.0) * (-lam).sqrt()
        };
        let want = denjoy::Complex64::new(0.0, 1.0) * s;
        assert!((r[2] - want.re).abs() < 1e-10 && (r[3] - want.im).abs() < 1e-10, "{r:?}");
        assert!((r[4] - want.re).abs() < 1e-10 && (r[5] - want.im).abs() < 1e-10);
    }
}

#[test]
fn one_gap_flow_run_writes_the_grid() {
    let sb = Sandbox::new();
    let cfg = sb.config("flow.json", r#"{"lambda_star": -1.0, "gaps": [{"a": 1.0, "b": 2.0}], "alpha": [0.23], "x_max": 2.0, "x_step": 0.1}"#);
    let o = denjoy(&["flow"], &cfg, &[]);
    assert!(o.status.success());
    let (header, body) = rows(&o.stdout);
    assert_eq!(header, ["x", "kappa", "upsilon", "tau_alpha", "tau_alpha_j", "e_frak"]);
    assert_eq!(body.len(), 21);
    assert!((body[20][0] - 2.0).abs() < 1e-12);
    assert_eq!(body[0][1], 0.0);
    assert!(body.windows(2).all(|w| w[1][1] >= w[0][1] && w[1][3] > w[0][3]));
}

#[test]
fn malformed_gaps_exit_with_validation_code_and_no_output() {
    let sb = Sandbox::new();
    let cfg = sb.config("bad.json", r#"{"lambda_star": -1.0, "gaps": [{"a": 2.0, "b": 1.0}], "lambda_points": [[0.0, 1.0]]}"#);
    let out = sb.path("never.csv");
    let o = denjoy(&["kernel", "--out", out.to_str().unwrap()], &cfg, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    for json in [
        r#"{"lambda_star": -1.0, "gaps": [{"a": 1.0, "b": 2.0}], "alpha": [0.1, 0.2], "lambda_points": [[0.0, 1.0]]}"#,
        r#"{"lambda_star": 0.5, "lambda_points": [[0.0, 1.0]]}"#,
        r#"{"lambda_star": -1.0}"#,
        r#"{"lambda_star": -1.0, "lambda_points": [[0.0, 1.0]], "unknown": 1}"#,
        r#"{"lambda_star": -1.0, "gaps": [{"a": 1.0, "b": 2.0}], "x_max": -1.0}"#,
        "not json",
    ] {
        let cfg = sb.config("bad2.json", json);
        let mode = if json.contains("x_max") { "flow" } else { "green" };
        assert_eq!(denjoy(&[mode], &cfg, &[]).status.code(), Some(2), "{json}");
    }
}

#[test]
fn io_failures_exit_with_code_four() {
    let sb = Sandbox::new();
    assert_eq!(denjoy(&["green"], &sb.path("missing.json"), &[]).status.code(), Some(4));
    let cfg = sb.config("e1.json", E1);
    let out = sb.path("no/such/dir/out.csv");
    assert_eq!(denjoy(&["green", "--out", out.to_str().unwrap()], &cfg, &[]).status.code(), Some(4));
}

#[test]
fn non_convergence_exits_with_code_three() {
    let sb = Sandbox::new();
    let cfg = sb.config("e1.json", E1);
    let o = denjoy(&["kernel"], &cfg, &[("DENJOY_INVERSION_MAX_ITER", "1")]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
}

#[test]
fn environment_overrides_tolerances() {
    let sb = Sandbox::new();
    let cfg = sb.config("e1.json", E1);
    assert_eq!(denjoy(&["kernel"], &cfg, &[("DENJOY_INVERSION_TOL", "-1")]).status.code(), Some(2));
    assert_eq!(denjoy(&["kernel", "--inversion-max-iter", "1"], &cfg, &[("DENJOY_INVERSION_MAX_ITER", "60")]).status.code(), Some(3));
    let loose = denjoy(&["green"], &cfg, &[("DENJOY_QUAD_REL", "1e-6")]);
    let tight = denjoy(&["green"], &cfg, &[]);
    assert!(loose.status.success() && tight.status.success());
    let (_, a) = rows(&loose.stdout);
    let (_, b) = rows(&tight.stdout);
    for (x, y) in a.iter().zip(&b) {
        assert!((x[2] - y[2]).abs() < 1e-5);
    }
}

#[test]
fn outputs_are_deterministic_across_thread_counts() {
    let sb = Sandbox::new();
    let cfg = sb.config("e1.json", E1);
    let one = denjoy(&["kernel", "--threads", "1"], &cfg, &[]);
    let four = denjoy(&["kernel", "--threads", "4"], &cfg, &[]);
    let again = denjoy(&["kernel"], &cfg, &[("DENJOY_THREADS", "3")]);
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, again.stdout);
    let (header, body) = rows(&one.stdout);
    assert_eq!(header, ["lambda_re", "lambda_im", "k_re", "k_im", "k_diagonal"]);
    assert_eq!(body.len(), 6);
    assert!(body.iter().all(|r| r[4] > 0.0));
    assert_eq!(denjoy(&["kernel", "--threads", "0"], &cfg, &[]).status.code(), Some(2));
}

#[test]
fn green_mode_reports_zero_on_the_spectrum() {
    let sb = Sandbox::new();
    let cfg = sb.config(
        "g.json",
        r#"{"lambda_star": -1.0, "gaps": [{"a": 1.0, "b": 2.0}], "lambda_grid": {"re": {"start": -2.0, "end": 4.0, "count": 7}}}"#,
    );
    let o = denjoy(&["green"], &cfg, &[]);
    assert!(o.status.success());
    let (header, body) = rows(&o.stdout);
    assert_eq!(header, ["lambda_re", "lambda_im", "green", "martin", "theta_re", "theta_im"]);
    for r in &body {
        let on_spectrum = (0.0..=1.0).contains(&r[0]) || r[0] >= 2.0;
        if on_spectrum {
            assert!(r[2].abs() < 1e-10, "{r:?}");
        } else if r[0] == -1.0 {
            assert_eq!(r[2], f64::INFINITY);
        } else {
            assert!(r[2] > 0.0);
        }
    }
}

#[test]
fn transfer_rows_cover_every_lambda_and_node() {
    let sb = Sandbox::new();
    let cfg = sb.config(
        "t.json",
        r#"{"lambda_star": -1.0, "gaps": [{"a": 1.0, "b": 2.0}], "x_max": 0.5, "x_step": 0.1,
            "lambda_points": [[0.5, 0.5], [-1.0, 1.0], [3.0, 0.2]], "mode": "transfer"}"#,
    );
    let o = denjoy(&["run"], &cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, body) = rows(&o.stdout);
    assert_eq!(header.len(), 13);
    assert_eq!(header[11], "det_dev");
    assert_eq!(body.len(), 3 * 6);
    assert!(body.iter().all(|r| r[11] < 1e-8 && r[12] > -1e-9));
}

#[test]
fn fourier_check_residuals_are_small() {
    let sb = Sandbox::new();
    let cfg = sb.config(
        "f.json",
        r#"{"lambda_star": -1.0, "gaps": [{"a": 1.0, "b": 2.0}], "alpha": [0.4], "x_max": 0.5, "x_step": 0.05,
            "lambda_points": [[0.3, 0.8]]}"#,
    );
    let o = denjoy(&["fourier-check"], &cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("kernel_identity,"));
    assert!(lines[2].starts_with("plancherel_indicator,"));
    for l in &lines[1..] {
        let err: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(err < 1e-3, "{l}");
    }
}

#[test]
fn geometric_families_are_experimental() {
    let sb = Sandbox::new();
    let cfg = sb.config(
        "geo.json",
        r#"{"lambda_star": -1.0, "geometric": {"a0": 1.0, "b0": 1.5, "rho": 2.0, "count": 3},
            "lambda_points": [[0.5, 0.5]]}"#,
    );
    let o = denjoy(&["m-function"], &cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("experimental"));
    let (_, body) = rows(&o.stdout);
    assert!(body[0][3] > 0.0);
    let cfg = sb.config(
        "geo7.json",
        r#"{"lambda_star": -1.0, "geometric": {"a0": 1.0, "b0": 1.5, "rho": 2.0, "count": 7}, "lambda_points": [[0.5, 0.5]]}"#,
    );
    assert_eq!(denjoy(&["m-function"], &cfg, &[]).status.code(), Some(2));
}

#[test]
fn coarse_acceptance_run_reports_failures_and_succeeds() {
    let sb = Sandbox::new();
    let cfg = sb.config("acc.json", r#"{"x_step": 0.25}"#);
    let out = sb.path("report.json");
    let o = denjoy(&["acceptance", "--out", out.to_str().unwrap()], &cfg, &[]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(report["total"], 12);
    let passed = report["passed"].as_u64().unwrap();
    assert!(passed < 12);
    let criteria = report["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 12);
    assert_eq!(criteria[0]["passed"], true);
    assert!(criteria.iter().any(|c| c["passed"] == false));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL"));
}
