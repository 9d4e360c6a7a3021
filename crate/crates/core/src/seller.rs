//! Seller economics: critical fractiles, inventory cost coefficients, base
//! stocks, fulfillment-mode choice and the participation bound.
//!
//! Every seller faces a mean share `μ/N` and a one-step root MSFE `σ`. In mode
//! `m` it earns `(r − ρ − f^m)·μ/N − K^m·σ`, where `K^m` is the expected
//! holding-plus-backorder cost per unit of `σ` at the optimal base stock.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SellerError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("csv export failed: {0}")]
    Csv(String),
}

pub type SellerResult<T> = Result<T, SellerError>;

fn std_normal() -> Normal {
    Normal::standard()
}

/// `Φ(x)`, via the complementary error function so both tails keep relative accuracy.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `φ(x)`
pub fn std_normal_pdf(x: f64) -> f64 {
    std_normal().pdf(x)
}

/// `Φ⁻¹(p)` for `0 < p < 1`, polished with one Newton step.
pub fn std_normal_quantile(p: f64) -> SellerResult<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(SellerError::Domain(format!(
            "quantile needs 0 < p < 1, got {p}"
        )));
    }
    let x = std_normal().inverse_cdf(p);
    let dens = std_normal_pdf(x);
    if dens > 0.0 {
        Ok(x - (std_normal_cdf(x) - p) / dens)
    } else {
        Ok(x)
    }
}

/// Standard normal loss `L(z) = φ(z) − z(1 − Φ(z))`.
pub fn std_normal_loss(z: f64) -> f64 {
    let upper = 0.5 * libm::erfc(z / std::f64::consts::SQRT_2);
    (std_normal_pdf(z) - z * upper).max(0.0)
}

/// Per-seller cost parameters under fulfill-by-merchant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellerParams {
    /// Holding cost per unit-period.
    pub h: f64,
    /// Backorder penalty per unit-period.
    pub b: f64,
    /// Fulfillment cost per unit.
    pub f: f64,
}

/// Platform-wide fees and fulfill-by-platform cost terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformCosts {
    /// Intermediation fee per unit.
    pub rho: f64,
    /// Fulfillment cost charged to an FBP seller.
    #[serde(rename = "F")]
    pub fbp_fulfillment: f64,
    /// Holding cost charged to an FBP seller.
    #[serde(rename = "H")]
    pub fbp_holding: f64,
    /// Platform's net fulfillment payoff per FBP unit.
    pub delta_f: f64,
    /// Platform's storage rent per unit-period of FBP stock.
    pub delta_h: f64,
    /// Gross per-unit margin.
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "FBM")]
    Fbm,
    #[serde(rename = "FBP")]
    Fbp,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Fbm => "FBM",
            Mode::Fbp => "FBP",
        })
    }
}

/// Critical-fractile quantile and inventory cost coefficient of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeEconomics {
    pub zeta: f64,
    pub k: f64,
}

/// `ζ = Φ⁻¹(b/(h̄+b))` and `K = h̄ζ + (h̄+b)L(ζ)`.
pub fn inventory_coefficient(h_bar: f64, b: f64) -> SellerResult<ModeEconomics> {
    if !(h_bar > 0.0 && b > 0.0) || !h_bar.is_finite() || !b.is_finite() {
        return Err(SellerError::Domain(format!(
            "holding and backorder costs must be positive, got h={h_bar}, b={b}"
        )));
    }
    let zeta = std_normal_quantile(b / (h_bar + b))?;
    let k = h_bar * zeta + (h_bar + b) * std_normal_loss(zeta);
    Ok(ModeEconomics { zeta, k })
}

/// Order-up-to level `m + ζσ`.
pub fn base_stock(mean_forecast: f64, sigma: f64, zeta: f64) -> f64 {
    mean_forecast + zeta * sigma
}

/// Both modes of one seller, plus the margins that drive mode choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SellerEconomics {
    pub fbm: ModeEconomics,
    pub fbp: ModeEconomics,
    /// `r − ρ − f`
    pub margin_fbm: f64,
    /// `r − ρ − F`
    pub margin_fbp: f64,
    /// `ΔF = f − F`
    pub delta_f: f64,
    /// `ΔK = K^FBP − K^FBM`
    pub delta_k: f64,
}

impl SellerEconomics {
    pub fn new(params: &SellerParams, costs: &PlatformCosts) -> SellerResult<Self> {
        let fbm = inventory_coefficient(params.h, params.b)?;
        let fbp = inventory_coefficient(costs.fbp_holding, params.b)?;
        Ok(Self {
            fbm,
            fbp,
            margin_fbm: costs.r - costs.rho - params.f,
            margin_fbp: costs.r - costs.rho - costs.fbp_fulfillment,
            delta_f: params.f - costs.fbp_fulfillment,
            delta_k: fbp.k - fbm.k,
        })
    }

    pub fn mode(&self, mode: Mode) -> ModeEconomics {
        match mode {
            Mode::Fbm => self.fbm,
            Mode::Fbp => self.fbp,
        }
    }

    pub fn margin(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Fbm => self.margin_fbm,
            Mode::Fbp => self.margin_fbp,
        }
    }

    pub fn utility(&self, mode: Mode, mu_share: f64, sigma: f64) -> f64 {
        self.margin(mode) * mu_share - self.mode(mode).k * sigma
    }

    /// `μ_n ΔF / ΔK`, the σ at which the two modes tie. `None` when `ΔK = 0`.
    pub fn threshold(&self, mu_share: f64) -> Option<f64> {
        (self.delta_k != 0.0).then(|| mu_share * self.delta_f / self.delta_k)
    }

    /// The adoption comparator shared by every caller. Boundaries are inclusive.
    pub fn prefers_fbp(&self, mu_share: f64, sigma: f64) -> bool {
        match self.threshold(mu_share) {
            None => self.delta_f >= 0.0,
            Some(t) if self.delta_k > 0.0 => sigma <= t,
            Some(t) => sigma >= t,
        }
    }

    pub fn choice(&self, mu_share: f64, sigma: f64) -> Mode {
        if self.prefers_fbp(mu_share, sigma) {
            Mode::Fbp
        } else {
            Mode::Fbm
        }
    }

    /// Utility of the preferred mode.
    pub fn best_utility(&self, mu_share: f64, sigma: f64) -> f64 {
        self.utility(self.choice(mu_share, sigma), mu_share, sigma)
    }

    /// Largest σ at which the better mode still earns a nonnegative payoff.
    pub fn participation_limit(&self, mu_share: f64) -> f64 {
        [Mode::Fbm, Mode::Fbp]
            .iter()
            .map(|&m| self.margin(m) * mu_share / self.mode(m).k)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Economics for a whole seller table.
pub fn seller_economics(
    sellers: &[SellerParams],
    costs: &PlatformCosts,
) -> SellerResult<Vec<SellerEconomics>> {
    sellers
        .iter()
        .map(|s| SellerEconomics::new(s, costs))
        .collect()
}

pub fn seller_utility(
    params: &SellerParams,
    costs: &PlatformCosts,
    mode: Mode,
    mu_share: f64,
    sigma: f64,
) -> SellerResult<f64> {
    Ok(SellerEconomics::new(params, costs)?.utility(mode, mu_share, sigma))
}

/// FBP iff `ΔF ≥ (Nσ/μ)ΔK`; a zero `ΔK` adopts whenever `ΔF ≥ 0`.
pub fn mode_choice(
    params: &SellerParams,
    costs: &PlatformCosts,
    n_sellers: usize,
    mu: f64,
    sigma: f64,
) -> SellerResult<Mode> {
    Ok(SellerEconomics::new(params, costs)?.choice(mu / n_sellers as f64, sigma))
}

/// 1-based numbers of the sellers choosing FBP at `sigma`.
pub fn adoption_set(
    sellers: &[SellerParams],
    costs: &PlatformCosts,
    n_sellers: usize,
    mu: f64,
    sigma: f64,
) -> SellerResult<BTreeSet<usize>> {
    let econ = seller_economics(sellers, costs)?;
    Ok(adopters_from(&econ, mu / n_sellers as f64, sigma))
}

pub(crate) fn adopters_from(
    econ: &[SellerEconomics],
    mu_share: f64,
    sigma: f64,
) -> BTreeSet<usize> {
    econ.iter()
        .enumerate()
        .filter(|(_, e)| e.prefers_fbp(mu_share, sigma))
        .map(|(i, _)| i + 1)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticipationBound {
    pub sigma_u: f64,
    /// True when `sigma_cap` was binding.
    pub capped: bool,
}

/// `min_n max_m (r − ρ − f^m)(μ/N)/K^m`, floored at 0 and capped at `sigma_cap`.
pub fn sigma_participation_ub(
    sellers: &[SellerParams],
    costs: &PlatformCosts,
    n_sellers: usize,
    mu: f64,
    sigma_cap: f64,
) -> SellerResult<ParticipationBound> {
    if !(sigma_cap > 0.0) {
        return Err(SellerError::Domain(format!(
            "sigma_cap must be positive, got {sigma_cap}"
        )));
    }
    let econ = seller_economics(sellers, costs)?;
    Ok(participation_bound_from(
        &econ,
        mu / n_sellers as f64,
        sigma_cap,
    ))
}

pub(crate) fn participation_bound_from(
    econ: &[SellerEconomics],
    mu_share: f64,
    sigma_cap: f64,
) -> ParticipationBound {
    let raw = econ
        .iter()
        .map(|e| e.participation_limit(mu_share))
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    if raw > sigma_cap {
        ParticipationBound {
            sigma_u: sigma_cap,
            capped: true,
        }
    } else {
        ParticipationBound {
            sigma_u: raw,
            capped: false,
        }
    }
}

/// Writes the inventory coefficient table, one row per seller.
///
/// Columns: `seller,h,b,f,zeta_fbm,K_fbm,zeta_fbp,K_fbp,delta_f,delta_k`.
pub fn write_k_table<W: Write>(
    sellers: &[SellerParams],
    costs: &PlatformCosts,
    out: W,
) -> SellerResult<()> {
    let csv_err = |e: csv::Error| SellerError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "seller", "h", "b", "f", "zeta_fbm", "K_fbm", "zeta_fbp", "K_fbp", "delta_f", "delta_k",
    ])
    .map_err(csv_err)?;
    for (i, s) in sellers.iter().enumerate() {
        let e = SellerEconomics::new(s, costs)?;
        w.write_record([
            (i + 1).to_string(),
            s.h.to_string(),
            s.b.to_string(),
            s.f.to_string(),
            format!("{:.6}", e.fbm.zeta),
            format!("{:.6}", e.fbm.k),
            format!("{:.6}", e.fbp.zeta),
            format!("{:.6}", e.fbp.k),
            format!("{:.6}", e.delta_f),
            format!("{:.6}", e.delta_k),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| SellerError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn costs() -> PlatformCosts {
        PlatformCosts {
            rho: 15.0,
            fbp_fulfillment: 10.0,
            fbp_holding: 2.5,
            delta_f: 2.0,
            delta_h: 2.0,
            r: 100.0,
        }
    }

    fn seller_one() -> SellerParams {
        SellerParams {
            h: 0.6,
            b: 12.0,
            f: 24.5,
        }
    }

    #[test]
    fn normal_primitives() {
        assert!((std_normal_loss(0.0) - 0.398_942_280_401_432_7).abs() < 1e-12);
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        // reference values from an arbitrary-precision inverse cdf
        assert!((std_normal_quantile(12.0 / 12.6).unwrap() - 1.668_391_193_947_08).abs() < 1e-9);
        assert!((std_normal_quantile(1e-6).unwrap() + 4.753_424_308_822_899).abs() < 1e-9);
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
    }

    #[test]
    fn quantile_inverts_cdf_across_range() {
        let mut p = 1e-6;
        while p < 1.0 - 1e-6 {
            let x = std_normal_quantile(p).unwrap();
            assert!((std_normal_cdf(x) - p).abs() < 1e-9, "p={p}");
            p += 0.0137;
        }
    }

    #[test]
    fn loss_is_decreasing_and_convex() {
        let zs: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.1).collect();
        let ls: Vec<f64> = zs.iter().map(|&z| std_normal_loss(z)).collect();
        for w in ls.windows(3) {
            assert!(w[1] < w[0] && w[2] < w[1]);
            assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-15);
        }
    }

    #[test]
    fn coefficients_for_table_rows() {
        assert!((inventory_coefficient(0.6, 12.0).unwrap().k - 1.2498).abs() < 5e-4);
        assert!((inventory_coefficient(2.5, 12.0).unwrap().k - 3.7025).abs() < 5e-4);
        assert!((inventory_coefficient(2.1, 11.0).unwrap().k - 3.1914).abs() < 5e-4);
        assert!(inventory_coefficient(0.0, 1.0).is_err());
        assert!(inventory_coefficient(1.0, -1.0).is_err());
    }

    #[test]
    fn base_stock_formula() {
        assert_eq!(base_stock(3.0, 0.0, 1.2), 3.0);
        assert!((base_stock(1.5, 0.5, 0.9446) - 1.9723).abs() < 1e-12);
        assert!(base_stock(1.5, 0.5, -0.3) < 1.5);
    }

    #[test]
    fn utility_of_seller_one() {
        let u = seller_utility(&seller_one(), &costs(), Mode::Fbp, 1.5, 0.5).unwrap();
        let k = inventory_coefficient(2.5, 12.0).unwrap().k;
        assert!((u - (75.0 * 1.5 - k * 0.5)).abs() < 1e-12);
        assert!((u - 110.65).abs() < 5e-3);
        assert_eq!(
            seller_utility(&seller_one(), &costs(), Mode::Fbm, 1.5, 0.0).unwrap(),
            60.5 * 1.5
        );
    }

    #[test]
    fn threshold_is_inclusive() {
        let e = SellerEconomics::new(&seller_one(), &costs()).unwrap();
        let t = e.threshold(1.5).unwrap();
        assert!((t - 8.867804).abs() < 1e-5);
        assert_eq!(e.choice(1.5, t), Mode::Fbp);
        assert_eq!(e.choice(1.5, t * (1.0 + 1e-12)), Mode::Fbm);
        assert_eq!(
            mode_choice(&seller_one(), &costs(), 10, 15.0, 0.0).unwrap(),
            Mode::Fbp
        );
    }

    #[test]
    fn seller_ten_leaves_just_above_first_breakpoint() {
        let s10 = SellerParams {
            h: 2.1,
            b: 11.0,
            f: 10.48,
        };
        assert_eq!(
            mode_choice(&s10, &costs(), 10, 15.0, 1.8).unwrap(),
            Mode::Fbm
        );
        assert_eq!(
            mode_choice(&s10, &costs(), 10, 15.0, 1.7).unwrap(),
            Mode::Fbp
        );
    }

    #[test]
    fn zero_delta_k_adopts_for_any_sigma() {
        let c = PlatformCosts {
            fbp_holding: 1.0,
            ..costs()
        };
        let s = SellerParams {
            h: 1.0,
            b: 5.0,
            f: 12.0,
        };
        let e = SellerEconomics::new(&s, &c).unwrap();
        assert_eq!(e.delta_k, 0.0);
        assert!(e.threshold(1.0).is_none());
        assert_eq!(e.choice(1.0, 1e9), Mode::Fbp);
    }

    #[test]
    fn negative_delta_k_flips_direction() {
        // FBP storage cheaper than own storage, FBP fulfillment dearer
        let c = PlatformCosts {
            fbp_holding: 0.5,
            fbp_fulfillment: 12.0,
            ..costs()
        };
        let s = SellerParams {
            h: 2.0,
            b: 8.0,
            f: 11.0,
        };
        let e = SellerEconomics::new(&s, &c).unwrap();
        assert!(e.delta_k < 0.0 && e.delta_f < 0.0);
        let t = e.threshold(1.0).unwrap();
        for sigma in [0.5 * t, t, 1.5 * t] {
            let by_utility =
                e.utility(Mode::Fbp, 1.0, sigma) >= e.utility(Mode::Fbm, 1.0, sigma) - 1e-12;
            assert_eq!(e.prefers_fbp(1.0, sigma), by_utility);
        }
    }

    #[test]
    fn participation_bound_cases() {
        let e = SellerEconomics {
            fbm: ModeEconomics { zeta: 0.0, k: 1.0 },
            fbp: ModeEconomics { zeta: 0.0, k: 1.0 },
            margin_fbm: 10.0,
            margin_fbp: 20.0,
            delta_f: 10.0,
            delta_k: 0.0,
        };
        assert_eq!(
            participation_bound_from(&[e], 1.0, 1e3),
            ParticipationBound {
                sigma_u: 20.0,
                capped: false
            }
        );
        assert_eq!(
            participation_bound_from(&[e], 1.0, 5.0),
            ParticipationBound {
                sigma_u: 5.0,
                capped: true
            }
        );
        let losing = SellerEconomics {
            margin_fbm: -1.0,
            margin_fbp: -2.0,
            ..e
        };
        assert_eq!(
            participation_bound_from(&[e, losing], 1.0, 1e3).sigma_u,
            0.0
        );
    }

    #[test]
    fn k_table_has_header_and_rows() {
        let mut buf = Vec::new();
        write_k_table(&[seller_one()], &costs(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("seller,h,b,f"));
        assert!(lines[1].contains("1.249"));
    }
}
