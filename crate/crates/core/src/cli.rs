//! Command-line front end: argument definitions, dispatch and report formats.
//!
//! Every command writes its main output to `--out` when given, otherwise to
//! standard output. Reports default to TOML (`--format structured`); tables
//! default to CSV. Exit codes: 0 success, 2 input error, 3 infeasibility,
//! 4 numerical failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::demand::DemandError;
use crate::forecast::{
    leadtime_msfe, ses_msfe, ses_perception, write_perception_csv, ForecastError,
    InnovationsPredictor,
};
use crate::platform::{collinearity_defect, linear_grid, write_curve_csv, PlatformError};
use crate::policy::{allocate_ex_post, neutral_policy, seller_filter, PolicyError};
use crate::polyalg::{
    inner_outer_factor, poly_roots, PolyError, TransferPoly, DEFAULT_BOUNDARY_TOL,
};
use crate::routing::{route_path, RoutingError, TieBreak};
use crate::scenario::{Scenario, ScenarioError};
use crate::seller::{write_k_table, Mode, SellerError};

/// Largest acceptable relative deviation from linearity on a payoff segment.
pub const COLLINEARITY_TOL: f64 = 1e-9;

const INNOVATIONS_STEPS: usize = 100_000;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Platform(#[from] PlatformError),
    #[error(transparent)]
    Seller(#[from] SellerError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error("{0}")]
    Usage(String),
    #[error("output failed: {0}")]
    Output(String),
    #[error("numerical check failed: {0}")]
    Numerical(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Output(e.to_string())
    }
}

fn poly_code(e: &PolyError) -> i32 {
    match e {
        PolyError::NumericalInstability(_) => 4,
        PolyError::NoRoots | PolyError::ZeroPolynomial => 2,
    }
}

fn demand_code(e: &DemandError) -> i32 {
    match e {
        DemandError::Poly(p) => poly_code(p),
        _ => 2,
    }
}

fn policy_code(e: &PolicyError) -> i32 {
    match e {
        PolicyError::BelowLowerBound { .. } | PolicyError::Infeasible(_) => 3,
        PolicyError::Poly(p) => poly_code(p),
        _ => 2,
    }
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Scenario(ScenarioError::Demand(e)) | Error::Demand(e) => demand_code(e),
            Error::Scenario(ScenarioError::Platform(e)) | Error::Platform(e) => match e {
                PlatformError::EmptyFeasibleSet { .. } => 3,
                _ => 2,
            },
            Error::Scenario(_) | Error::Seller(_) | Error::Usage(_) | Error::Output(_) => 2,
            Error::Poly(e) => poly_code(e),
            Error::Policy(e) => policy_code(e),
            Error::Forecast(e) => match e {
                ForecastError::NonConvergence { .. } => 4,
                ForecastError::Poly(p) => poly_code(p),
                ForecastError::Policy(p) => policy_code(p),
                _ => 2,
            },
            Error::Routing(e) => match e {
                RoutingError::InfeasibleTargets { .. } | RoutingError::NoEligibleSeller { .. } => 3,
                _ => 2,
            },
            Error::Numerical(_) => 4,
        }
    }
}

pub type CliResult<T> = Result<T, Error>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Structured,
}

#[derive(Debug, Parser)]
#[command(
    name = "demand-alloc",
    version,
    about = "Neutral demand allocation for marketplace inventory"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the main output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; each command picks a sensible default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the platform's problem for a scenario.
    Optimize(OptimizeArgs),
    /// Simulate demand, allocate it, and compare realized with analytic inventory costs.
    Simulate(RunArgs),
    /// Route integer orders period by period with offset tracking.
    Route(RunArgs),
    /// Roots and inner-outer split of a polynomial.
    Factor(PolyArgs),
    /// Root MSFE of a polynomial, optionally over a lead time or under SES.
    Msfe(MsfeArgs),
    /// Platform payoff curve.
    Curve(CurveArgs),
    /// Inventory coefficients of every seller in both modes.
    KTable(ScenarioArgs),
    /// Adoption when sellers forecast with exponential smoothing.
    Ses(SesArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub scenario: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Also write the payoff curve CSV here.
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
    /// Grid points for the curve.
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Seller MSFE target; defaults to the lower bound (uniform split).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Periods to simulate; defaults to the scenario horizon.
    #[arg(long)]
    pub periods: Option<usize>,
    /// RNG seed; defaults to the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-period detail CSV (simulate) or assignment log (route).
    #[arg(long)]
    pub detail_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PolyArgs {
    /// Coefficients `c_0 c_1 … c_q`.
    #[arg(required = true, allow_negative_numbers = true)]
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct MsfeArgs {
    #[arg(required = true, allow_negative_numbers = true)]
    pub coeffs: Vec<f64>,
    /// Replenishment lead time in periods.
    #[arg(long)]
    pub lead: Option<usize>,
    /// SES smoothing constant in [0, 1].
    #[arg(long)]
    pub ses: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// Upper end of the grid; defaults to 1.25·σ_U.
    #[arg(long)]
    pub sigma_max: Option<f64>,
    /// Fail unless every linear piece is collinear.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct SesArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Policy σ; defaults to the platform optimum.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Smoothing-constant grid points on [0, 1].
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
}

fn open_out(
    path: &Option<PathBuf>,
    stdout: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> CliResult<()>,
) -> CliResult<()> {
    match path {
        Some(p) => {
            let file =
                File::create(p).map_err(|e| Error::Output(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => f(stdout),
    }
}

fn write_toml<T: Serialize>(value: &T, w: &mut dyn Write) -> CliResult<()> {
    let text = toml::to_string(value).map_err(|e| Error::Output(e.to_string()))?;
    w.write_all(text.as_bytes())?;
    Ok(())
}

/// Two-column `field,value` CSV.
fn write_fields(fields: &[(&str, String)], w: &mut dyn Write) -> CliResult<()> {
    let mut c = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Output(e.to_string());
    c.write_record(["field", "value"]).map_err(err)?;
    for (k, v) in fields {
        c.write_record([*k, v.as_str()]).map_err(err)?;
    }
    c.flush()?;
    Ok(())
}

fn join_set<'a>(xs: impl IntoIterator<Item = &'a usize>) -> String {
    xs.into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Optimize(a) => cmd_optimize(a, cli, stdout),
        Command::Simulate(a) => cmd_simulate(a, cli, stdout),
        Command::Route(a) => cmd_route(a, cli, stdout),
        Command::Factor(a) => cmd_factor(a, cli, stdout),
        Command::Msfe(a) => cmd_msfe(a, cli, stdout),
        Command::Curve(a) => cmd_curve(a, cli, stdout),
        Command::KTable(a) => {
            let s = Scenario::load(&a.scenario)?;
            open_out(&cli.out, stdout, |w| {
                Ok(write_k_table(&s.sellers, &s.platform, w)?)
            })
        }
        Command::Ses(a) => cmd_ses(a, cli, stdout),
    }
}

fn cmd_optimize(a: &OptimizeArgs, cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let scenario = Scenario::load(&a.scenario)?;
    let market = scenario.marketplace()?;
    let sol = market.optimize(Some(scenario.sigma_cap()?))?;
    log::info!(
        "sigma* = {:.6}, V* = {:.4}, adopters {:?}",
        sol.sigma_star,
        sol.payoff_star,
        sol.adopters
    );
    if let Some(path) = &a.curve_out {
        if a.grid < 2 {
            return Err(Error::Usage("--grid needs at least 2 points".into()));
        }
        let curve = market.payoff_curve(
            &linear_grid(sol.sigma_l, 1.25 * sol.sigma_u, a.grid),
            sol.sigma_u,
        );
        open_out(&Some(path.clone()), stdout, |w| {
            Ok(write_curve_csv(&curve, w)?)
        })?;
    }
    open_out(&cli.out, stdout, |w| {
        match cli.format.unwrap_or(Format::Structured) {
            Format::Structured => write_toml(&sol, w),
            Format::Csv => write_fields(
                &[
                    ("sigma_star", format!("{}", sol.sigma_star)),
                    ("payoff_star", format!("{}", sol.payoff_star)),
                    ("adopters", join_set(&sol.adopters)),
                    ("gamma_fbp", format!("{}", sol.gamma_fbp)),
                    ("gamma_fbm", format!("{}", sol.gamma_fbm)),
                    ("cumulative_utility", format!("{}", sol.cumulative_utility)),
                    ("sigma_l", format!("{}", sol.sigma_l)),
                    ("sigma_u", format!("{}", sol.sigma_u)),
                    ("sigma_u_capped", format!("{}", sol.sigma_u_capped)),
                    ("uniform_payoff", format!("{}", sol.uniform.payoff)),
                    ("uniform_adopters", join_set(&sol.uniform.adopters)),
                    ("uniform_gamma_fbp", format!("{}", sol.uniform.gamma_fbp)),
                    ("uniform_gamma_fbm", format!("{}", sol.uniform.gamma_fbm)),
                    (
                        "uniform_cumulative_utility",
                        format!("{}", sol.uniform.cumulative_utility),
                    ),
                    (
                        "breakpoints",
                        sol.breakpoints
                            .iter()
                            .map(|b| format!("{}", b.sigma))
                            .collect::<Vec<_>>()
                            .join(";"),
                    ),
                ],
                w,
            ),
        }
    })
}

#[derive(Debug, Clone, Serialize)]
struct SellerSimRow {
    seller: usize,
    mode: Mode,
    sigma_analytic: f64,
    sigma_empirical: f64,
    k: f64,
    cost_analytic: f64,
    cost_realized: f64,
}

#[derive(Debug, Clone, Serialize)]
struct SimulationSummary {
    sigma: f64,
    periods: usize,
    seed: u64,
    /// Largest `|Σ_n D_{n,t} − D_t|` over all periods.
    max_sum_error: f64,
    sellers: Vec<SellerSimRow>,
}

fn run_params(a: &RunArgs, scenario: &Scenario, sigma_l: f64) -> (f64, usize, u64) {
    (
        a.sigma.unwrap_or(sigma_l),
        a.periods.unwrap_or(scenario.options.horizon),
        a.seed.unwrap_or(scenario.options.seed),
    )
}

fn cmd_simulate(a: &RunArgs, cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let scenario = Scenario::load(&a.scenario)?;
    let market = scenario.marketplace()?;
    let model = &market.model;
    let n = market.n_sellers();
    let (sigma, periods, seed) = run_params(a, &scenario, market.sigma_l());
    let policy = neutral_policy(model, n, sigma)?;
    let path = model.simulate(periods + policy.max_lag(), seed)?;
    let alloc = allocate_ex_post(&policy, model, &path)?;
    let len = alloc.series[0].len();
    let max_sum_error = (0..len)
        .map(|t| {
            (alloc.series.iter().map(|s| s[t]).sum::<f64>() - path.demands[alloc.start + t]).abs()
        })
        .fold(0.0, f64::max);
    let modes = market.modes(sigma);
    let mu_share = market.mu_share();
    let burn_in = (len / 100).min(1000);

    let mut rows = Vec::with_capacity(n);
    let mut detail: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::with_capacity(n);
    for (i, e) in market.economics().iter().enumerate() {
        let psi_n = seller_filter(&policy, model, i + 1)?;
        let sigma_analytic = inner_outer_factor(&psi_n, scenario.options.boundary_tol)?.root_msfe();
        let predictor =
            InnovationsPredictor::fit(&psi_n, INNOVATIONS_STEPS.max(10 * psi_n.degree()))?;
        let errs = predictor.one_step_errors(&alloc.series[i], mu_share);
        let econ = e.mode(modes[i]);
        let h_bar = match modes[i] {
            Mode::Fbm => scenario.sellers[i].h,
            Mode::Fbp => scenario.platform.fbp_holding,
        };
        let b = scenario.sellers[i].b;
        let safety = econ.zeta * sigma_analytic;
        let costs: Vec<f64> = errs
            .iter()
            .map(|&err| {
                let left = safety - err;
                h_bar * left.max(0.0) + b * (-left).max(0.0)
            })
            .collect();
        let tail = &errs[burn_in..];
        let sigma_empirical = (tail.iter().map(|x| x * x).sum::<f64>() / tail.len() as f64).sqrt();
        let cost_realized = costs[burn_in..].iter().sum::<f64>() / tail.len() as f64;
        rows.push(SellerSimRow {
            seller: i + 1,
            mode: modes[i],
            sigma_analytic,
            sigma_empirical,
            k: econ.k,
            cost_analytic: econ.k * sigma_analytic,
            cost_realized,
        });
        detail.push((errs, costs, safety));
    }

    if let Some(p) = &a.detail_out {
        open_out(&Some(p.clone()), stdout, |w| {
            let err = |e: csv::Error| Error::Output(e.to_string());
            let mut c = csv::Writer::from_writer(w);
            c.write_record([
                "period",
                "market_demand",
                "seller",
                "allocation",
                "forecast",
                "base_stock",
                "cost",
            ])
            .map_err(err)?;
            for t in 0..len {
                let d = path.demands[alloc.start + t];
                for (i, (errs, costs, safety)) in detail.iter().enumerate() {
                    let x = alloc.series[i][t];
                    let forecast = x - errs[t];
                    c.write_record([
                        t.to_string(),
                        format!("{d:.6}"),
                        (i + 1).to_string(),
                        format!("{x:.6}"),
                        format!("{forecast:.6}"),
                        format!("{:.6}", forecast + safety),
                        format!("{:.6}", costs[t]),
                    ])
                    .map_err(err)?;
                }
            }
            c.flush()?;
            Ok(())
        })?;
    }

    let summary = SimulationSummary {
        sigma,
        periods: len,
        seed,
        max_sum_error,
        sellers: rows,
    };
    open_out(&cli.out, stdout, |w| {
        match cli.format.unwrap_or(Format::Structured) {
            Format::Structured => write_toml(&summary, w),
            Format::Csv => {
                let err = |e: csv::Error| Error::Output(e.to_string());
                let mut c = csv::Writer::from_writer(w);
                c.write_record([
                    "seller",
                    "mode",
                    "sigma_analytic",
                    "sigma_empirical",
                    "k",
                    "cost_analytic",
                    "cost_realized",
                    "max_sum_error",
                ])
                .map_err(err)?;
                for r in &summary.sellers {
                    c.write_record([
                        r.seller.to_string(),
                        r.mode.to_string(),
                        format!("{:.6}", r.sigma_analytic),
                        format!("{:.6}", r.sigma_empirical),
                        format!("{:.6}", r.k),
                        format!("{:.6}", r.cost_analytic),
                        format!("{:.6}", r.cost_realized),
                        format!("{:e}", summary.max_sum_error),
                    ])
                    .map_err(err)?;
                }
                c.flush()?;
                Ok(())
            }
        }
    })
}

#[derive(Debug, Clone, Serialize)]
struct RoutingSummary {
    sigma: f64,
    periods: usize,
    seed: u64,
    orders: u64,
    infeasible_count: usize,
    max_feasible_discrepancy: f64,
    cumulative_counts: Vec<u64>,
    cumulative_shares: Vec<f64>,
    infeasible_periods: Vec<usize>,
}

fn cmd_route(a: &RunArgs, cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let scenario = Scenario::load(&a.scenario)?;
    let market = scenario.marketplace()?;
    let (sigma, periods, seed) = run_params(a, &scenario, market.sigma_l());
    let policy = neutral_policy(&market.model, market.n_sellers(), sigma)?;
    let path = market.model.simulate(periods, seed)?;
    let routed = route_path(&policy, market.model.mu, &path, TieBreak::Random { seed })?;
    if let Some(p) = &a.detail_out {
        open_out(&Some(p.clone()), stdout, |w| {
            Ok(routed.write_assignment_log(w)?)
        })?;
    }
    let infeasible_periods = routed.infeasible_periods();
    if !infeasible_periods.is_empty() {
        log::warn!(
            "{} of {periods} periods had negative benchmark targets",
            infeasible_periods.len()
        );
    }
    let summary = RoutingSummary {
        sigma,
        periods,
        seed,
        orders: routed.cumulative_counts.iter().sum(),
        infeasible_count: infeasible_periods.len(),
        max_feasible_discrepancy: routed.max_feasible_discrepancy(),
        cumulative_shares: routed.cumulative_shares(),
        cumulative_counts: routed.cumulative_counts,
        infeasible_periods,
    };
    open_out(&cli.out, stdout, |w| {
        match cli.format.unwrap_or(Format::Structured) {
            Format::Structured => write_toml(&summary, w),
            Format::Csv => {
                let err = |e: csv::Error| Error::Output(e.to_string());
                let mut c = csv::Writer::from_writer(w);
                c.write_record([
                    "seller",
                    "orders",
                    "share",
                    "max_feasible_discrepancy",
                    "infeasible_count",
                ])
                .map_err(err)?;
                for (i, (&k, &s)) in summary
                    .cumulative_counts
                    .iter()
                    .zip(&summary.cumulative_shares)
                    .enumerate()
                {
                    c.write_record([
                        (i + 1).to_string(),
                        k.to_string(),
                        format!("{s:.6}"),
                        format!("{:.6}", summary.max_feasible_discrepancy),
                        summary.infeasible_count.to_string(),
                    ])
                    .map_err(err)?;
                }
                c.flush()?;
                Ok(())
            }
        }
    })
}

#[derive(Debug, Clone, Serialize)]
struct RootRow {
    re: f64,
    im: f64,
    modulus: f64,
    /// `inner` (inside the disk), `unit` (on the boundary band) or `outer`.
    side: &'static str,
}

#[derive(Debug, Clone, Serialize)]
struct FactorReport {
    coefficients: Vec<f64>,
    variance: f64,
    root_msfe: f64,
    /// Mean squared one-step error, `root_msfe²`.
    msfe: f64,
    invertible: bool,
    outer: Vec<f64>,
    roots: Vec<RootRow>,
}

fn factor_report(p: &TransferPoly) -> CliResult<FactorReport> {
    let f = inner_outer_factor(p, DEFAULT_BOUNDARY_TOL)?;
    let roots = if p.degree() == 0 {
        vec![]
    } else {
        poly_roots(p)?
    };
    let side = |z: Complex64| {
        let m = z.norm();
        if m < 1.0 - DEFAULT_BOUNDARY_TOL {
            "inner"
        } else if m <= 1.0 + DEFAULT_BOUNDARY_TOL {
            "unit"
        } else {
            "outer"
        }
    };
    Ok(FactorReport {
        coefficients: p.coeffs().to_vec(),
        variance: p.variance(),
        root_msfe: f.root_msfe(),
        msfe: f.root_msfe().powi(2),
        invertible: f.is_invertible(),
        outer: f.outer.coeffs().to_vec(),
        roots: roots
            .iter()
            .map(|&z| RootRow {
                re: z.re,
                im: z.im,
                modulus: z.norm(),
                side: side(z),
            })
            .collect(),
    })
}

fn cmd_factor(a: &PolyArgs, cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let r = factor_report(&TransferPoly::new(a.coeffs.clone()))?;
    open_out(&cli.out, stdout, |w| {
        match cli.format.unwrap_or(Format::Structured) {
            Format::Structured => write_toml(&r, w),
            Format::Csv => {
                let mut fields = vec![
                    ("variance", format!("{}", r.variance)),
                    ("root_msfe", format!("{}", r.root_msfe)),
                    ("msfe", format!("{}", r.msfe)),
                    ("invertible", format!("{}", r.invertible)),
                    (
                        "outer",
                        r.outer
                            .iter()
                            .map(|c| c.to_string())
                            .collect::<Vec<_>>()
                            .join(";"),
                    ),
                ];
                for root in &r.roots {
                    fields.push(("root", format!("{}{:+}i ({})", root.re, root.im, root.side)));
                }
                write_fields(&fields, w)
            }
        }
    })
}

#[derive(Debug, Clone, Serialize)]
struct MsfeReport {
    root_msfe: f64,
    msfe: f64,
    variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lead: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_bar_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ses_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ses_msfe: Option<f64>,
}

fn cmd_msfe(a: &MsfeArgs, cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let p = TransferPoly::new(a.coeffs.clone());
    let f = inner_outer_factor(&p, DEFAULT_BOUNDARY_TOL)?;
    let sigma_bar = a.lead.map(|l| leadtime_msfe(&f.outer, l));
    let ses = a.ses.map(|l| ses_msfe(&p, l)).transpose()?;
    let r = MsfeReport {
        root_msfe: f.root_msfe(),
        msfe: f.root_msfe().powi(2),
        variance: p.variance(),
        lead: a.lead,
        sigma_bar,
        sigma_bar_sq: sigma_bar.map(|s| s * s),
        ses_lambda: a.ses,
        ses_msfe: ses,
    };
    open_out(&cli.out, stdout, |w| {
        match cli.format.unwrap_or(Format::Structured) {
            Format::Structured => write_toml(&r, w),
            Format::Csv => {
                let mut fields = vec![
                    ("root_msfe", format!("{}", r.root_msfe)),
                    ("msfe", format!("{}", r.msfe)),
                    ("variance", format!("{}", r.variance)),
                ];
                if let (Some(l), Some(s)) = (r.lead, r.sigma_bar) {
                    fields.extend([
                        ("lead", l.to_string()),
                        ("sigma_bar", s.to_string()),
                        ("sigma_bar_sq", (s * s).to_string()),
                    ]);
                }
                if let (Some(l), Some(s)) = (r.ses_lambda, r.ses_msfe) {
                    fields.extend([("ses_lambda", l.to_string()), ("ses_msfe", s.to_string())]);
                }
                write_fields(&fields, w)
            }
        }
    })
}

#[derive(Serialize)]
struct CurveDoc<'a> {
    points: &'a [crate::platform::CurvePoint],
}

fn cmd_curve(a: &CurveArgs, cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    if a.grid < 2 {
        return Err(Error::Usage("--grid needs at least 2 points".into()));
    }
    let scenario = Scenario::load(&a.scenario)?;
    let market = scenario.marketplace()?;
    let sigma_u = market.sigma_upper(Some(scenario.sigma_cap()?))?.sigma_u;
    let hi = a.sigma_max.unwrap_or(1.25 * sigma_u);
    if !(hi > market.sigma_l()) {
        return Err(Error::Usage(format!(
            "--sigma-max must exceed the lower bound {}",
            market.sigma_l()
        )));
    }
    let curve = market.payoff_curve(&linear_grid(market.sigma_l(), hi, a.grid), sigma_u);
    if a.check {
        let defect = collinearity_defect(&curve);
        if defect > COLLINEARITY_TOL {
            return Err(Error::Numerical(format!(
                "payoff curve deviates from linearity by {defect:e}"
            )));
        }
        log::info!("collinearity defect {defect:e}");
    }
    open_out(&cli.out, stdout, |w| {
        match cli.format.unwrap_or(Format::Csv) {
            Format::Csv => Ok(write_curve_csv(&curve, w)?),
            Format::Structured => write_toml(&CurveDoc { points: &curve }, w),
        }
    })
}

fn cmd_ses(a: &SesArgs, cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    if a.grid < 2 {
        return Err(Error::Usage("--grid needs at least 2 points".into()));
    }
    let scenario = Scenario::load(&a.scenario)?;
    let market = scenario.marketplace()?;
    let sigma = match a.sigma {
        Some(s) => s,
        None => market.optimize(Some(scenario.sigma_cap()?))?.sigma_star,
    };
    let p = ses_perception(&market, sigma, &linear_grid(0.0, 1.0, a.grid))?;
    open_out(&cli.out, stdout, |w| {
        match cli.format.unwrap_or(Format::Csv) {
            Format::Csv => Ok(write_perception_csv(&p, w)?),
            Format::Structured => write_toml(&p, w),
        }
    })
}
