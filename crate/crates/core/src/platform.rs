//! The platform's choice of σ.
//!
//! Under a neutral policy every seller sees the same σ. The platform earns
//! `V(σ) = ρμ + (Δf + Δh)(μ/N)|A(σ)| + Δh·σ·Σ_{n∈A(σ)} ζ^FBP_n`, where `A(σ)`
//! is the FBP adopter set. Adoption only changes at finitely many
//! breakpoints, so `V` is piecewise affine and the optimum sits on a
//! candidate list that can be enumerated.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::DemandModel;
use crate::policy::sigma_lower_bound;
use crate::seller::{
    adopters_from, participation_bound_from, seller_economics, Mode, ParticipationBound,
    PlatformCosts, SellerEconomics, SellerError, SellerParams,
};

/// Default participation cap, as a multiple of `σ_L`.
pub const DEFAULT_CAP_MULTIPLE: f64 = 1e3;

const TIE_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlatformError {
    #[error("participation bound {sigma_u} lies below the lower bound {sigma_l}")]
    EmptyFeasibleSet { sigma_l: f64, sigma_u: f64 },
    #[error("invalid marketplace: {0}")]
    Invalid(String),
    #[error(transparent)]
    Seller(#[from] SellerError),
    #[error("export failed: {0}")]
    Export(String),
}

pub type PlatformResult<T> = Result<T, PlatformError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub sigma: f64,
    /// 1-based seller who leaves FBP just above `sigma`.
    pub seller: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffBreakdown {
    /// `ρμ`
    pub intermediation: f64,
    /// `Δf·(μ/N)·|A|`
    pub fulfillment_share: f64,
    /// `Δh·((μ/N)·|A| + Γ^FBP)`
    pub storage_rent: f64,
}

impl PayoffBreakdown {
    pub fn total(&self) -> f64 {
        self.intermediation + self.fulfillment_share + self.storage_rent
    }
}

/// Everything the platform and sellers see at one σ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub sigma: f64,
    pub payoff: f64,
    pub adopters: BTreeSet<usize>,
    pub gamma_fbp: f64,
    pub gamma_fbm: f64,
    pub cumulative_utility: f64,
    pub breakdown: PayoffBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformSolution {
    pub sigma_star: f64,
    pub payoff_star: f64,
    pub adopters: BTreeSet<usize>,
    pub gamma_fbp: f64,
    pub gamma_fbm: f64,
    pub cumulative_utility: f64,
    pub sigma_l: f64,
    pub sigma_u: f64,
    pub sigma_u_capped: bool,
    pub payoff_breakdown: PayoffBreakdown,
    /// The same quantities under uniform allocation, for comparison.
    pub uniform: Outcome,
    pub breakpoints: Vec<Breakpoint>,
}

impl PlatformSolution {
    pub fn to_toml(&self) -> PlatformResult<String> {
        toml::to_string(self).map_err(|e| PlatformError::Export(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveSide {
    /// Value at the breakpoint itself, where the departing seller still adopts.
    Left,
    /// Limit from above.
    Right,
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sigma: f64,
    pub payoff: f64,
    pub n_adopters: usize,
    pub gamma_fbp: f64,
    pub gamma_fbm: f64,
    pub side: CurveSide,
}

/// Market, fee schedule and seller table.
#[derive(Debug, Clone, PartialEq)]
pub struct Marketplace {
    pub model: DemandModel,
    pub costs: PlatformCosts,
    pub sellers: Vec<SellerParams>,
    econ: Vec<SellerEconomics>,
}

impl Marketplace {
    pub fn new(
        model: DemandModel,
        costs: PlatformCosts,
        sellers: Vec<SellerParams>,
    ) -> PlatformResult<Self> {
        if sellers.is_empty() {
            return Err(PlatformError::Invalid("seller table is empty".into()));
        }
        let econ = seller_economics(&sellers, &costs)?;
        for (i, e) in econ.iter().enumerate() {
            if e.delta_k < 0.0 {
                log::warn!(
                    "seller {} has a cheaper FBP inventory cost (delta K = {:.4})",
                    i + 1,
                    e.delta_k
                );
            }
        }
        Ok(Self {
            model,
            costs,
            sellers,
            econ,
        })
    }

    pub fn n_sellers(&self) -> usize {
        self.sellers.len()
    }

    pub fn mu_share(&self) -> f64 {
        self.model.mu / self.n_sellers() as f64
    }

    pub fn sigma_l(&self) -> f64 {
        sigma_lower_bound(&self.model, self.n_sellers())
    }

    pub fn economics(&self) -> &[SellerEconomics] {
        &self.econ
    }

    /// `σ_U`, capped at `sigma_cap` (default `10³·σ_L`).
    pub fn sigma_upper(&self, sigma_cap: Option<f64>) -> PlatformResult<ParticipationBound> {
        let cap = sigma_cap.unwrap_or(DEFAULT_CAP_MULTIPLE * self.sigma_l());
        if !(cap > 0.0) {
            return Err(PlatformError::Invalid(format!(
                "sigma cap must be positive, got {cap}"
            )));
        }
        Ok(participation_bound_from(&self.econ, self.mu_share(), cap))
    }

    /// Exit points of sellers with `ΔK > 0`, ascending.
    pub fn breakpoints(&self) -> Vec<Breakpoint> {
        let mut v: Vec<Breakpoint> = self
            .econ
            .iter()
            .enumerate()
            .filter(|(_, e)| e.delta_k > 0.0)
            .filter_map(|(i, e)| {
                e.threshold(self.mu_share()).map(|sigma| Breakpoint {
                    sigma,
                    seller: i + 1,
                })
            })
            .collect();
        v.sort_by(|a, b| a.sigma.total_cmp(&b.sigma).then(a.seller.cmp(&b.seller)));
        v
    }

    pub fn adopters(&self, sigma: f64) -> BTreeSet<usize> {
        adopters_from(&self.econ, self.mu_share(), sigma)
    }

    /// `(Γ^FBP, Γ^FBM)` for a given adopter set.
    fn gammas(&self, sigma: f64, adopters: &BTreeSet<usize>) -> (f64, f64) {
        self.econ
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(p, m), (i, e)| {
                if adopters.contains(&(i + 1)) {
                    (p + sigma * e.fbp.zeta, m)
                } else {
                    (p, m + sigma * e.fbm.zeta)
                }
            })
    }

    pub fn safety_stock_totals(&self, sigma: f64) -> (f64, f64) {
        self.gammas(sigma, &self.adopters(sigma))
    }

    fn breakdown(&self, sigma: f64, adopters: &BTreeSet<usize>) -> (PayoffBreakdown, f64, f64) {
        let (gamma_fbp, gamma_fbm) = self.gammas(sigma, adopters);
        let mean_units = self.mu_share() * adopters.len() as f64;
        let b = PayoffBreakdown {
            intermediation: self.costs.rho * self.model.mu,
            fulfillment_share: self.costs.delta_f * mean_units,
            storage_rent: self.costs.delta_h * (mean_units + gamma_fbp),
        };
        (b, gamma_fbp, gamma_fbm)
    }

    pub fn payoff(&self, sigma: f64) -> PayoffBreakdown {
        self.breakdown(sigma, &self.adopters(sigma)).0
    }

    /// Payoff when adoption is decided at `sigma_adopt` but stocks are held against `sigma_stock`.
    pub fn payoff_split(&self, sigma_adopt: f64, sigma_stock: f64) -> Outcome {
        let adopters = self.adopters(sigma_adopt);
        self.outcome_for(sigma_stock, adopters)
    }

    /// Payoff for an externally decided adopter set, with stocks held against `sigma`.
    pub fn payoff_split_with(&self, adopters: &BTreeSet<usize>, sigma: f64) -> Outcome {
        self.outcome_for(sigma, adopters.clone())
    }

    fn outcome_for(&self, sigma: f64, adopters: BTreeSet<usize>) -> Outcome {
        let (breakdown, gamma_fbp, gamma_fbm) = self.breakdown(sigma, &adopters);
        let cumulative_utility = self.cumulative_utility(sigma);
        Outcome {
            sigma,
            payoff: breakdown.total(),
            adopters,
            gamma_fbp,
            gamma_fbm,
            cumulative_utility,
            breakdown,
        }
    }

    pub fn outcome(&self, sigma: f64) -> Outcome {
        self.outcome_for(sigma, self.adopters(sigma))
    }

    /// Sum over sellers of the better mode's utility.
    pub fn cumulative_utility(&self, sigma: f64) -> f64 {
        self.econ
            .iter()
            .map(|e| e.best_utility(self.mu_share(), sigma))
            .sum()
    }

    /// Seller modes at `sigma`.
    pub fn modes(&self, sigma: f64) -> Vec<Mode> {
        self.econ
            .iter()
            .map(|e| e.choice(self.mu_share(), sigma))
            .collect()
    }

    /// Candidate σ values in `[σ_L, σ_U]`: both ends plus every adoption
    /// switch point. Each affine piece of `V` attains its supremum at one of them.
    fn candidates(&self, sigma_l: f64, sigma_u: f64) -> Vec<f64> {
        let mut c = vec![sigma_l, sigma_u];
        c.extend(
            self.econ
                .iter()
                .filter_map(|e| e.threshold(self.mu_share()))
                .filter(|&t| t >= sigma_l && t <= sigma_u),
        );
        c.sort_by(f64::total_cmp);
        c.dedup();
        c
    }

    pub fn optimize(&self, sigma_cap: Option<f64>) -> PlatformResult<PlatformSolution> {
        let sigma_l = self.sigma_l();
        let bound = self.sigma_upper(sigma_cap)?;
        if bound.sigma_u < sigma_l {
            return Err(PlatformError::EmptyFeasibleSet {
                sigma_l,
                sigma_u: bound.sigma_u,
            });
        }
        let mut best: Option<(f64, f64)> = None;
        for s in self.candidates(sigma_l, bound.sigma_u) {
            let v = self.payoff(s).total();
            match best {
                Some((_, bv)) if v <= bv + TIE_REL * bv.abs().max(1.0) => {}
                _ => best = Some((s, v)),
            }
        }
        let (sigma_star, _) = best.expect("candidate list always holds sigma_l");
        let opt = self.outcome(sigma_star);
        Ok(PlatformSolution {
            sigma_star,
            payoff_star: opt.payoff,
            adopters: opt.adopters,
            gamma_fbp: opt.gamma_fbp,
            gamma_fbm: opt.gamma_fbm,
            cumulative_utility: opt.cumulative_utility,
            sigma_l,
            sigma_u: bound.sigma_u,
            sigma_u_capped: bound.capped,
            payoff_breakdown: opt.breakdown,
            uniform: self.outcome(sigma_l),
            breakpoints: self.breakpoints(),
        })
    }

    /// Payoff samples on `grid` plus both one-sided values at every breakpoint
    /// and at `σ_U`. The payoff is reported as zero above `σ_U`.
    pub fn payoff_curve(&self, grid: &[f64], sigma_u: f64) -> Vec<CurvePoint> {
        let point = |sigma: f64, adopters: &BTreeSet<usize>, side: CurveSide, beyond: bool| {
            let (b, gamma_fbp, gamma_fbm) = self.breakdown(sigma, adopters);
            CurvePoint {
                sigma,
                payoff: if beyond { 0.0 } else { b.total() },
                n_adopters: adopters.len(),
                gamma_fbp,
                gamma_fbm,
                side,
            }
        };
        let mut out: Vec<CurvePoint> = grid
            .iter()
            .map(|&s| point(s, &self.adopters(s), CurveSide::Interior, s > sigma_u))
            .collect();
        let bps = self.breakpoints();
        let mut jumps: Vec<f64> = bps
            .iter()
            .map(|b| b.sigma)
            .filter(|&s| s <= sigma_u)
            .collect();
        jumps.dedup();
        for s in jumps {
            let left = self.adopters(s);
            let mut right = left.clone();
            for b in bps.iter().filter(|b| b.sigma == s) {
                right.remove(&b.seller);
            }
            out.push(point(s, &left, CurveSide::Left, false));
            out.push(point(s, &right, CurveSide::Right, s >= sigma_u));
        }
        if sigma_u > 0.0 && !bps.iter().any(|b| b.sigma == sigma_u) {
            let a = self.adopters(sigma_u);
            out.push(point(sigma_u, &a, CurveSide::Left, false));
            out.push(point(sigma_u, &a, CurveSide::Right, true));
        }
        let rank = |s: CurveSide| match s {
            CurveSide::Left => 0,
            CurveSide::Interior => 1,
            CurveSide::Right => 2,
        };
        out.sort_by(|a, b| {
            a.sigma
                .total_cmp(&b.sigma)
                .then(rank(a.side).cmp(&rank(b.side)))
        });
        out
    }
}

/// Largest relative deviation from a straight line over consecutive interior
/// samples that share an adopter count and are not separated by a jump.
pub fn collinearity_defect(points: &[CurvePoint]) -> f64 {
    let mut worst: f64 = 0.0;
    let mut run: Vec<&CurvePoint> = Vec::new();
    for p in points {
        let breaks = p.side != CurveSide::Interior
            || run.last().is_some_and(|q| {
                q.n_adopters != p.n_adopters || (q.payoff == 0.0) != (p.payoff == 0.0)
            });
        if breaks {
            run.clear();
        }
        if p.side == CurveSide::Interior {
            run.push(p);
        }
        if let [.., a, b, c] = run[..] {
            if c.sigma > a.sigma {
                let w = (b.sigma - a.sigma) / (c.sigma - a.sigma);
                let line = a.payoff + w * (c.payoff - a.payoff);
                worst = worst.max((b.payoff - line).abs() / b.payoff.abs().max(1.0));
            }
        }
    }
    worst
}

/// `k` evenly spaced points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    match k {
        0 => vec![],
        1 => vec![lo],
        _ => (0..k)
            .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
            .collect(),
    }
}

/// Writes curve samples with columns `sigma,payoff,n_adopters,gamma_fbp,gamma_fbm,side`.
pub fn write_curve_csv<W: Write>(points: &[CurvePoint], out: W) -> PlatformResult<()> {
    let err = |e: csv::Error| PlatformError::Export(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "sigma",
        "payoff",
        "n_adopters",
        "gamma_fbp",
        "gamma_fbm",
        "side",
    ])
    .map_err(err)?;
    for p in points {
        let side = match p.side {
            CurveSide::Left => "left",
            CurveSide::Right => "right",
            CurveSide::Interior => "interior",
        };
        w.write_record([
            format!("{:.6}", p.sigma),
            format!("{:.6}", p.payoff),
            p.n_adopters.to_string(),
            format!("{:.6}", p.gamma_fbp),
            format!("{:.6}", p.gamma_fbm),
            side.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| PlatformError::Export(e.to_string()))
}
