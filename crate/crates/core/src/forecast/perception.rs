//! Adoption when sellers forecast with exponential smoothing.
//!
//! The platform fixes σ for optimal forecasters, but a seller running SES
//! perceives the larger error σ̃ and decides its fulfillment mode on that.
//! Stocks are still sized against the policy's σ.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ses::{argmin_on_grid, ses_msfe};
use super::{ForecastError, ForecastResult};
use crate::platform::Marketplace;
use crate::policy::{neutral_policy, seller_filter};
use crate::seller::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerceptionRow {
    pub seller: usize,
    pub sigma: f64,
    pub lambda_star: f64,
    pub sigma_ses: f64,
    pub mode: Mode,
    pub mode_ses: Mode,
    pub utility: f64,
    pub utility_ses: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SesPerception {
    pub sigma: f64,
    pub adopters: BTreeSet<usize>,
    pub gamma_fbp: f64,
    pub payoff: f64,
    pub rows: Vec<PerceptionRow>,
}

/// Every seller picks the smoothing constant on `lambda_grid` that minimizes
/// its own SES error under the neutral policy at `sigma`, then chooses its mode.
pub fn ses_perception(
    market: &Marketplace,
    sigma: f64,
    lambda_grid: &[f64],
) -> ForecastResult<SesPerception> {
    if lambda_grid.is_empty() {
        return Err(ForecastError::InvalidArgument(
            "empty smoothing grid".into(),
        ));
    }
    let n = market.n_sellers();
    let policy = neutral_policy(&market.model, n, sigma)?;
    let mu_share = market.mu_share();
    let mut rows = Vec::with_capacity(n);
    let mut adopters = BTreeSet::new();
    for (i, e) in market.economics().iter().enumerate() {
        let psi_n = seller_filter(&policy, &market.model, i + 1)?;
        let values = lambda_grid
            .iter()
            .map(|&l| ses_msfe(&psi_n, l))
            .collect::<ForecastResult<Vec<f64>>>()?;
        let (best, sigma_ses) = argmin_on_grid(
            &(0..values.len()).map(|k| k as f64).collect::<Vec<_>>(),
            |k| values[k as usize],
        )
        .expect("grid is non-empty");
        let lambda_star = lambda_grid[best as usize];
        let mode = e.choice(mu_share, sigma);
        let mode_ses = e.choice(mu_share, sigma_ses);
        if mode_ses == Mode::Fbp {
            adopters.insert(i + 1);
        }
        rows.push(PerceptionRow {
            seller: i + 1,
            sigma,
            lambda_star,
            sigma_ses,
            mode,
            mode_ses,
            utility: e.utility(mode, mu_share, sigma),
            utility_ses: e.utility(mode_ses, mu_share, sigma_ses),
        });
    }
    let outcome = market.payoff_split_with(&adopters, sigma);
    Ok(SesPerception {
        sigma,
        adopters,
        gamma_fbp: outcome.gamma_fbp,
        payoff: outcome.payoff,
        rows,
    })
}

/// Columns: `seller,sigma,lambda_star,sigma_ses,mode,mode_ses,utility,utility_ses`.
pub fn write_perception_csv<W: Write>(p: &SesPerception, out: W) -> ForecastResult<()> {
    let err = |e: csv::Error| ForecastError::InvalidArgument(format!("csv export failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "seller",
        "sigma",
        "lambda_star",
        "sigma_ses",
        "mode",
        "mode_ses",
        "utility",
        "utility_ses",
    ])
    .map_err(err)?;
    for r in &p.rows {
        w.write_record([
            r.seller.to_string(),
            format!("{:.6}", r.sigma),
            format!("{}", r.lambda_star),
            format!("{:.6}", r.sigma_ses),
            r.mode.to_string(),
            r.mode_ses.to_string(),
            format!("{:.6}", r.utility),
            format!("{:.6}", r.utility_ses),
        ])
        .map_err(err)?;
    }
    w.flush()
        .map_err(|e| ForecastError::InvalidArgument(format!("csv export failed: {e}")))
}
