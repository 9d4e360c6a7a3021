//! Routes integer orders online so that each seller tracks its benchmark
//! share to within one order.

use demand_alloc::policy::neutral_policy;
use demand_alloc::routing::{compute_offsets, route_orders, route_path, TieBreak};
use demand_alloc::scenario::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // one period by hand: four sellers, last two demands 17 and 12 against a mean of 15
    let offsets = compute_offsets(4, 15.0, 1.5, 1.25, 17.0, 12.0);
    let routed = route_orders(&offsets, 16, TieBreak::LowestIndex)?;
    println!("offsets  {:?}", offsets.offsets);
    println!("targets  {:?}", routed.targets);
    println!("counts   {:?}", routed.counts);
    println!("sequence {:?}", routed.assignment_log);
    println!("max discrepancy {:.3}\n", routed.max_discrepancy);

    let scenario = Scenario::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/illustrative.scenario"
    ))?;
    let market = scenario.marketplace()?;
    let path = market.model.simulate(2_000, 11)?;
    for sigma in [market.sigma_l(), 2.0] {
        let policy = neutral_policy(&market.model, market.n_sellers(), sigma)?;
        let result = route_path(
            &policy,
            market.model.mu,
            &path,
            TieBreak::Random { seed: 11 },
        )?;
        println!(
            "sigma {sigma:.2}: {} infeasible periods, max discrepancy {:.3}, shares {:.3?}",
            result.infeasible_periods().len(),
            result.max_feasible_discrepancy(),
            result.cumulative_shares()
        );
    }
    Ok(())
}
