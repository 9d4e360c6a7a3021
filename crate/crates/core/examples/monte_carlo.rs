//! Simulates a two-seller market under a neutral policy and checks the
//! empirical one-step error of each allocated stream against its target.

use demand_alloc::demand::DemandModel;
use demand_alloc::forecast::InnovationsPredictor;
use demand_alloc::policy::{allocate_ex_post, neutral_policy, seller_filter};
use demand_alloc::polyalg::TransferPoly;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = DemandModel::new(15.0, TransferPoly::constant(5.0))?;
    let sigma = 5.0;
    let policy = neutral_policy(&model, 2, sigma)?;
    let path = model.simulate(100_000, 2024)?;
    let alloc = allocate_ex_post(&policy, &model, &path)?;

    let worst = (0..alloc.series[0].len())
        .map(|t| (alloc.series[0][t] + alloc.series[1][t] - path.demands[alloc.start + t]).abs())
        .fold(0.0, f64::max);
    println!("largest allocation sum error {worst:.2e}");

    for n in 1..=2 {
        let psi_n = seller_filter(&policy, &model, n)?;
        let predictor = InnovationsPredictor::fit(&psi_n, 100_000)?;
        let emp = predictor.empirical_msfe(&alloc.series[n - 1], model.mu / 2.0, 1_000);
        println!(
            "seller {n}: filter {:?}, theta {:?}, empirical {emp:.4} vs {sigma} ({:+.2}%)",
            psi_n.coeffs(),
            predictor.theta,
            100.0 * (emp / sigma - 1.0)
        );
    }
    Ok(())
}
