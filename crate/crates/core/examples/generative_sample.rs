//! Draw a synthetic population from the parameter model and check that its
//! size distribution has two regimes.

use lifecurve::dist::{fit_segmented_powerlaw, survival};
use lifecurve::genmodel::{sample_population, to_order_counts, GenerativeModelParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let model = GenerativeModelParams::default();
    let pop = sample_population(6065, &model, 42);

    let mut bands = [0usize; 3];
    for p in &pop {
        if let Some(k) = model.band_of(p.m_prime, p.t0) {
            bands[k] += 1;
        }
    }
    let n = pop.len() as f64;
    println!(
        "band shares {:.3} {:.3} {:.3}",
        bands[0] as f64 / n,
        bands[1] as f64 / n,
        bands[2] as f64 / n
    );

    let orders = to_order_counts(&pop);
    println!("largest entity {} orders", orders.iter().max().unwrap_or(&0));
    let fit = fit_segmented_powerlaw(&survival(&orders, 1)?, 1)?;
    println!(
        "alpha1 {:.3} alpha2 {:.3} breakpoint {:?} degenerate {}",
        fit.alpha1, fit.alpha2, fit.breakpoint, fit.degenerate
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
