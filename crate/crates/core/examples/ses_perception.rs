//! Sellers using simple exponential smoothing misjudge their forecast error
//! and some switch mode, which costs the platform storage revenue.

use demand_alloc::forecast::{ses_perception, write_perception_csv};
use demand_alloc::platform::linear_grid;
use demand_alloc::scenario::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/illustrative.scenario"
    ))?;
    let market = scenario.marketplace()?;
    let opt = market.optimize(None)?;
    let p = ses_perception(&market, opt.sigma_star, &linear_grid(0.0, 1.0, 201))?;
    write_perception_csv(&p, std::io::stdout().lock())?;
    println!();
    println!(
        "optimal forecasters: adopters {:?}, V = {:.4}",
        opt.adopters, opt.payoff_star
    );
    println!(
        "smoothing forecasters: adopters {:?}, gamma_fbp = {:.4}, V = {:.4}",
        p.adopters, p.gamma_fbp, p.payoff
    );
    Ok(())
}
