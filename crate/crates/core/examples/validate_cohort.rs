//! Predict leaving times for entities that stopped in 2009 and score the
//! predictions year by year.

use lifecurve::lifepath::{expanding_window_fits, LifepathOptions};
use lifecurve::synth::{leaving_cohort, CohortSpec};
use lifecurve::validate::{score_cohort, select_cohort};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let leave_year = 2009;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cohort = leaving_cohort(&CohortSpec::new(200, leave_year), &mut rng);
    let epoch = cohort.iter().map(|e| e.series.start_month).min().ok_or("empty cohort")?;

    let opts = LifepathOptions::default();
    let years: Vec<i32> = (leave_year - 4..=leave_year).collect();
    let paths: Vec<_> = cohort
        .iter()
        .map(|e| expanding_window_fits(&e.series, epoch, &years, &opts))
        .collect();
    let report = score_cohort(&select_cohort(&paths, leave_year)?, leave_year);

    println!("cohort of {} leaving in {leave_year}", report.cohort_size);
    println!("year  fitted  mean_error  within_1yr  within_2yr");
    for (year, s) in &report.per_year {
        println!(
            "{year}  {:>6}  {:>10.3}  {:>10.3}  {:>10.3}",
            s.entities, s.mean_error, s.within_1yr, s.within_2yr
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
