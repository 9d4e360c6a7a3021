//! Scenario files: market demand, platform fees, seller table and run options.
//!
//! Scenarios are TOML documents. Unknown keys are rejected so a misspelled
//! cost parameter fails loudly instead of silently taking a default.
//!
//! ```toml
//! [demand]
//! mu = 15.0
//! psi = [5.0]
//!
//! [platform]
//! rho = 15.0
//! F = 10.0
//! H = 2.5
//! delta_f = 2.0
//! delta_h = 2.0
//! r = 100.0
//!
//! [[sellers]]
//! h = 0.6
//! b = 12.0
//! f = 24.5
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::{DemandError, DemandModel};
use crate::platform::{Marketplace, PlatformError, DEFAULT_CAP_MULTIPLE};
use crate::polyalg::{TransferPoly, DEFAULT_BOUNDARY_TOL};
use crate::seller::{PlatformCosts, SellerParams};

pub const DEFAULT_HORIZON: usize = 100_000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error(transparent)]
    Platform(#[from] PlatformError),
}

pub type ScenarioResult<T> = Result<T, ScenarioError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandSpec {
    pub mu: f64,
    pub psi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunOptions {
    /// Cap on the participation bound; `None` means `10³·σ_L`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_cap: Option<f64>,
    pub seed: u64,
    pub horizon: usize,
    pub boundary_tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            sigma_cap: None,
            seed: 0,
            horizon: DEFAULT_HORIZON,
            boundary_tol: DEFAULT_BOUNDARY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub demand: DemandSpec,
    pub platform: PlatformCosts,
    pub sellers: Vec<SellerParams>,
    #[serde(default)]
    pub options: RunOptions,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> ScenarioResult<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> ScenarioResult<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ScenarioError::Parse(msg) => ScenarioError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> ScenarioResult<String> {
        toml::to_string(self).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    /// Hard checks fail; soft modeling assumptions only warn.
    pub fn validate(&self) -> ScenarioResult<()> {
        if self.sellers.is_empty() {
            return Err(ScenarioError::Invalid(
                "sellers must list at least one seller".into(),
            ));
        }
        let p = &self.platform;
        let platform_vals = [
            ("rho", p.rho),
            ("F", p.fbp_fulfillment),
            ("H", p.fbp_holding),
            ("delta_f", p.delta_f),
            ("delta_h", p.delta_h),
            ("r", p.r),
        ];
        for (name, v) in platform_vals {
            if !v.is_finite() {
                return Err(ScenarioError::Invalid(format!(
                    "platform.{name} must be finite"
                )));
            }
        }
        for (i, s) in self.sellers.iter().enumerate() {
            if !(s.h > 0.0 && s.b > 0.0 && s.f.is_finite()) {
                return Err(ScenarioError::Invalid(format!(
                    "sellers[{i}]: need h > 0, b > 0 and finite f"
                )));
            }
            if p.fbp_fulfillment > s.f {
                log::warn!(
                    "seller {}: platform fulfillment cost F = {} exceeds own cost f = {}",
                    i + 1,
                    p.fbp_fulfillment,
                    s.f
                );
            }
            if p.fbp_holding < s.h {
                log::warn!(
                    "seller {}: platform holding cost H = {} is below own cost h = {}",
                    i + 1,
                    p.fbp_holding,
                    s.h
                );
            }
        }
        if p.r <= p.rho + p.fbp_fulfillment {
            log::warn!(
                "gross margin r = {} does not exceed rho + F = {}",
                p.r,
                p.rho + p.fbp_fulfillment
            );
        }
        let o = &self.options;
        if let Some(cap) = o.sigma_cap {
            if !(cap > 0.0) {
                return Err(ScenarioError::Invalid(format!(
                    "options.sigma_cap must be positive, got {cap}"
                )));
            }
        }
        if o.horizon == 0 || !(o.boundary_tol > 0.0 && o.boundary_tol < 1.0) {
            return Err(ScenarioError::Invalid(
                "options: need horizon ≥ 1 and boundary_tol in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn model(&self) -> ScenarioResult<DemandModel> {
        Ok(DemandModel::new(
            self.demand.mu,
            TransferPoly::new(self.demand.psi.clone()),
        )?)
    }

    pub fn marketplace(&self) -> ScenarioResult<Marketplace> {
        Ok(Marketplace::new(
            self.model()?,
            self.platform,
            self.sellers.clone(),
        )?)
    }

    /// Participation cap after applying the default.
    pub fn sigma_cap(&self) -> ScenarioResult<f64> {
        let n = self.sellers.len() as f64;
        Ok(self
            .options
            .sigma_cap
            .unwrap_or(DEFAULT_CAP_MULTIPLE * self.model()?.psi.at_zero().abs() / n))
    }
}
