//! Two demand streams with identical variance but different forecastability.
//!
//! `0.5 − 0.2z − 0.48z²` has a root inside the unit disk, so its shocks cannot
//! be recovered from history. Reflecting that root gives the outer factor,
//! whose leading coefficient is the best achievable one-step error.

use demand_alloc::forecast::{innovations_msfe, leadtime_msfe};
use demand_alloc::polyalg::{inner_outer_factor, poly_roots, TransferPoly, DEFAULT_BOUNDARY_TOL};

fn report(label: &str, p: &TransferPoly) -> Result<(), Box<dyn std::error::Error>> {
    let f = inner_outer_factor(p, DEFAULT_BOUNDARY_TOL)?;
    println!("{label}: coefficients {:?}", p.coeffs());
    for z in poly_roots(p)? {
        println!("  root {:+.4}{:+.4}i  |z| = {:.4}", z.re, z.im, z.norm());
    }
    println!("  variance        {:.4}", p.variance());
    println!("  invertible      {}", f.is_invertible());
    println!("  outer factor    {:?}", f.outer.coeffs());
    println!("  MSFE            {:.4}", f.root_msfe().powi(2));
    println!(
        "  innovations     {:.4}",
        innovations_msfe(p, 10_000)?.powi(2)
    );
    println!(
        "  2-period lead   {:.4}",
        leadtime_msfe(&f.outer, 2).powi(2)
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    report("seller 1", &TransferPoly::new(vec![0.5, -0.2, -0.48]))?;
    report("seller 2", &TransferPoly::new(vec![0.5, 1.0, 0.48]))?;
    Ok(())
}
