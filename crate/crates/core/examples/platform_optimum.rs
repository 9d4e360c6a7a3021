//! Solves the platform's problem for the shipped ten-seller scenario and
//! compares the optimum with a uniform split.

use demand_alloc::scenario::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/illustrative.scenario"
    );
    let scenario = Scenario::load(path)?;
    let market = scenario.marketplace()?;
    let sol = market.optimize(scenario.options.sigma_cap)?;

    println!("sigma_L = {:.4}, sigma_U = {:.4}", sol.sigma_l, sol.sigma_u);
    println!("breakpoints:");
    for b in &sol.breakpoints {
        println!("  {:>9.5}  seller {}", b.sigma, b.seller);
    }
    println!();
    println!("{:<22}{:>12}{:>12}", "", "uniform", "optimal");
    println!(
        "{:<22}{:>12.4}{:>12.4}",
        "sigma", sol.uniform.sigma, sol.sigma_star
    );
    println!(
        "{:<22}{:>12.2}{:>12.2}",
        "platform payoff", sol.uniform.payoff, sol.payoff_star
    );
    println!(
        "{:<22}{:>12}{:>12}",
        "FBP adopters",
        sol.uniform.adopters.len(),
        sol.adopters.len()
    );
    println!(
        "{:<22}{:>12.2}{:>12.2}",
        "FBP safety stock", sol.uniform.gamma_fbp, sol.gamma_fbp
    );
    println!(
        "{:<22}{:>12.2}{:>12.2}",
        "FBM safety stock", sol.uniform.gamma_fbm, sol.gamma_fbm
    );
    println!(
        "{:<22}{:>12.2}{:>12.2}",
        "seller utility", sol.uniform.cumulative_utility, sol.cumulative_utility
    );
    Ok(())
}
