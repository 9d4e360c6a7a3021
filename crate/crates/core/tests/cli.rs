//! End-to-end runs of the command-line binary.

use std::path::PathBuf;
use std::process::{Command, Output};

const SCENARIO: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/examples/illustrative.scenario"
);

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_demand-alloc"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn ok_toml(args: &[&str]) -> toml::Value {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    toml::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn shipped_text() -> String {
    std::fs::read_to_string(SCENARIO).unwrap()
}

fn float(v: &toml::Value, key: &str) -> f64 {
    v[key]
        .as_float()
        .unwrap_or_else(|| v[key].as_integer().unwrap() as f64)
}

#[test]
fn optimize_reproduces_reference_solution() {
    let v = ok_toml(&["optimize", "--scenario", SCENARIO]);
    assert!((float(&v, "sigma_star") - 8.8678).abs() < 1e-3);
    assert!((float(&v, "payoff_star") - 372.45).abs() < 0.05);
    let adopters: Vec<i64> = v["adopters"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_integer().unwrap())
        .collect();
    assert_eq!(adopters, (1..=7).collect::<Vec<_>>());
}

#[test]
fn optimize_writes_curve_and_csv() {
    let curve = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("curve_from_optimize.csv");
    let out = bin(&[
        "optimize",
        "--scenario",
        SCENARIO,
        "--format",
        "csv",
        "--curve-out",
        curve.to_str().unwrap(),
        "--grid",
        "30",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("field,value\nsigma_star,8.8678"));
    let csv = std::fs::read_to_string(curve).unwrap();
    assert!(csv.starts_with("sigma,payoff,n_adopters,gamma_fbp,gamma_fbm,side\n"));
}

#[test]
fn zero_platform_margins_keep_uniform_split() {
    let text = shipped_text()
        .replace("delta_f = 2.0", "delta_f = 0.0")
        .replace("delta_h = 2.0", "delta_h = 0.0");
    let path = scratch("flat_fees.scenario", &text);
    let v = ok_toml(&["optimize", "--scenario", path.to_str().unwrap()]);
    assert_eq!(float(&v, "sigma_star"), 0.5);
}

#[test]
fn input_errors_exit_with_two() {
    let text = shipped_text();
    let no_sellers: String = text.split("[[sellers]]").next().unwrap().to_string();
    let path = scratch("no_sellers.scenario", &no_sellers);
    let out = bin(&["optimize", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sellers"));

    let typo = scratch("typo.scenario", &text.replace("delta_h", "delta_hh"));
    let out = bin(&["optimize", "--scenario", typo.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    assert_eq!(bin(&["factor", "0"]).status.code(), Some(2));
    assert_eq!(
        bin(&["curve", "--scenario", SCENARIO, "--grid", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn infeasibility_exits_with_three() {
    assert_eq!(
        bin(&[
            "simulate",
            "--scenario",
            SCENARIO,
            "--sigma",
            "0.2",
            "--periods",
            "10"
        ])
        .status
        .code(),
        Some(3)
    );
    let broke = shipped_text().replace("r = 100.0", "r = 26.0");
    let path = scratch("broke.scenario", &broke);
    assert_eq!(
        bin(&["optimize", "--scenario", path.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn factor_and_msfe_reports() {
    let v = ok_toml(&["factor", "0.5", "-0.2", "-0.48"]);
    assert!((float(&v, "msfe") - 0.36).abs() < 1e-12);
    assert_eq!(v["invertible"].as_bool(), Some(false));
    let v = ok_toml(&["factor", "1", "0.5"]);
    assert_eq!(v["invertible"].as_bool(), Some(true));
    assert!((float(&v, "msfe") - 1.0).abs() < 1e-12);
    let v = ok_toml(&["msfe", "2", "1", "--lead", "1"]);
    assert!((float(&v, "sigma_bar_sq") - 13.0).abs() < 1e-9);
    let v = ok_toml(&["msfe", "1", "0.5", "--ses", "1"]);
    assert!((float(&v, "ses_msfe") - 1.5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn uniform_simulation_matches_analytic_costs() {
    let v = ok_toml(&[
        "simulate",
        "--scenario",
        SCENARIO,
        "--periods",
        "100000",
        "--seed",
        "5",
    ]);
    assert!(float(&v, "max_sum_error") < 1e-9);
    for row in v["sellers"].as_array().unwrap() {
        let emp = float(row, "sigma_empirical");
        assert!((emp / 0.5 - 1.0).abs() < 0.02, "{row:?}");
        let (analytic, realized) = (float(row, "cost_analytic"), float(row, "cost_realized"));
        assert!((realized / analytic - 1.0).abs() < 0.03, "{row:?}");
    }
}

#[test]
fn simulation_is_deterministic_and_writes_detail() {
    let detail = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("sim_detail.csv");
    let args = [
        "simulate",
        "--scenario",
        SCENARIO,
        "--sigma",
        "3",
        "--periods",
        "500",
        "--seed",
        "9",
        "--format",
        "csv",
    ];
    let a = bin(&args);
    let b = bin(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut with_detail = args.to_vec();
    with_detail.extend(["--detail-out", detail.to_str().unwrap()]);
    assert!(bin(&with_detail).status.success());
    let text = std::fs::read_to_string(detail).unwrap();
    assert!(text.starts_with("period,market_demand,seller,allocation,forecast,base_stock,cost\n"));
    assert_eq!(text.lines().count(), 1 + 10 * 500);
}

#[test]
fn route_summary_reports_infeasible_periods() {
    let log = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("assignments.csv");
    let v = ok_toml(&[
        "route",
        "--scenario",
        SCENARIO,
        "--sigma",
        "8.867804",
        "--periods",
        "10000",
        "--detail-out",
        log.to_str().unwrap(),
    ]);
    assert!(float(&v, "max_feasible_discrepancy") <= 1.0 + 1e-9);
    let count = v["infeasible_count"].as_integer().unwrap();
    assert_eq!(
        count as usize,
        v["infeasible_periods"].as_array().unwrap().len()
    );
    let text = std::fs::read_to_string(log).unwrap();
    assert!(text.starts_with("period,order_index,seller,adjusted_counts\n"));
}

#[test]
fn curve_check_and_tables() {
    let out = bin(&["curve", "--scenario", SCENARIO, "--grid", "100", "--check"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.split(',').nth(1).unwrap().parse::<f64>().unwrap() == 0.0);

    let out = bin(&["k-table", "--scenario", SCENARIO]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("1,0.6,12,24.5,1.668391,1.249813"));

    let out = bin(&["ses", "--scenario", SCENARIO]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("1,8.867804,0,8.881889,FBP,FBM"));
}
