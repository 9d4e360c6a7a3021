//! Forecast errors beyond the one-step optimum: an innovations-algorithm
//! oracle, suboptimal linear filters such as simple exponential smoothing,
//! and lead-time demand.

mod innovations;
mod leadtime;
mod perception;
mod ses;

pub use innovations::{innovations_msfe, InnovationsPredictor};
pub use leadtime::{
    leadtime_adoption, leadtime_mode_choice, leadtime_msfe, leadtime_theta, LeadTimeChoice,
    LeadTimeOutcome, LeadTimeSpec,
};
pub use perception::{ses_perception, write_perception_csv, PerceptionRow, SesPerception};
pub use ses::{
    argmin_on_grid, filter_msfe, ses_msfe, ses_msfe_closed_form, ses_order, ses_truncated_weights,
    ses_weights, FilterForecaster, SES_TAIL_TOL,
};

use thiserror::Error;

use crate::policy::PolicyError;
use crate::polyalg::PolyError;
use crate::seller::SellerError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForecastError {
    #[error(
        "innovations recursion did not converge after {iterations} steps (last variance {last_v})"
    )]
    NonConvergence { last_v: f64, iterations: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("closed-form lead-time coefficients are not available for policy {0}; factor the seller filter instead")]
    UnsupportedPolicy(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Seller(#[from] SellerError),
}

pub type ForecastResult<T> = Result<T, ForecastError>;
