//! Mode choice when FBP replenishes faster than FBM.

use demand_alloc::forecast::{leadtime_adoption, LeadTimeSpec};
use demand_alloc::policy::neutral_policy;
use demand_alloc::scenario::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/illustrative.scenario"
    ))?;
    let market = scenario.marketplace()?;
    let sigma = market.optimize(None)?.sigma_star;
    let policy = neutral_policy(&market.model, market.n_sellers(), sigma)?;
    for (l_fbp, l_fbm) in [(0, 0), (0, 1), (1, 3)] {
        let leads = LeadTimeSpec { l_fbp, l_fbm };
        let out = leadtime_adoption(
            &market.sellers,
            &market.costs,
            leads,
            &market.model,
            &policy,
        )?;
        println!(
            "L_FBP = {l_fbp}, L_FBM = {l_fbm}: adopters {:?}, V = {:.2}",
            out.adopters, out.payoff
        );
        for (i, c) in out.choices.iter().enumerate() {
            println!(
                "  seller {:>2}: {}  sigma_bar {:.3}/{:.3}",
                i + 1,
                c.mode,
                c.sigma_bar_fbp,
                c.sigma_bar_fbm
            );
        }
    }
    Ok(())
}
