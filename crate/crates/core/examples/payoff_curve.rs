//! Writes the platform payoff curve as CSV to stdout, including both one-sided
//! values at every jump.

use demand_alloc::platform::{collinearity_defect, linear_grid, write_curve_csv};
use demand_alloc::scenario::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/illustrative.scenario"
    ))?;
    let market = scenario.marketplace()?;
    let sigma_u = market.sigma_upper(None)?.sigma_u;
    let curve = market.payoff_curve(&linear_grid(market.sigma_l(), 1.25 * sigma_u, 120), sigma_u);
    eprintln!(
        "{} points, collinearity defect {:.1e}",
        curve.len(),
        collinearity_defect(&curve)
    );
    write_curve_csv(&curve, std::io::stdout().lock())?;
    Ok(())
}
