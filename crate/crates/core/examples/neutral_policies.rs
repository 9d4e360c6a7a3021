//! Builds neutral allocation policies for even and odd seller counts and
//! checks that every seller ends up with the same forecast error.

use demand_alloc::demand::DemandModel;
use demand_alloc::policy::{check_neutral, neutral_policy, seller_filter, sigma_lower_bound};
use demand_alloc::polyalg::{is_invertible, TransferPoly, DEFAULT_BOUNDARY_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = DemandModel::new(15.0, TransferPoly::new(vec![5.0, 2.0]))?;
    for n in [4usize, 5] {
        let sigma_l = sigma_lower_bound(&model, n);
        let sigma = 3.0 * sigma_l;
        let policy = neutral_policy(&model, n, sigma)?;
        println!(
            "N = {n}, sigma_L = {sigma_l:.3}, target sigma = {sigma:.3}, design {:?}",
            policy.design
        );
        for i in 1..=n {
            let psi_n = seller_filter(&policy, &model, i)?;
            println!(
                "  seller {i}: T = {:?}  psi_n = {:?}  invertible = {}",
                policy.transfer(i)?.coeffs(),
                psi_n.coeffs(),
                is_invertible(&psi_n, DEFAULT_BOUNDARY_TOL)?
            );
        }
        let report = check_neutral(&policy, &model, 1e-9)?;
        println!("  per-seller sigma {:?}", report.per_seller_sigma);
        println!(
            "  neutral: {} (spread {:.2e})",
            report.is_neutral, report.max_sigma_spread
        );
    }
    // asking for less than the bound is refused
    println!("{:?}", neutral_policy(&model, 4, 0.1).unwrap_err());
    Ok(())
}
