//! Refit an entity at the end of every year and trace its lifepath.

use lifecurve::calendar::Month;
use lifecurve::lifepath::{expanding_window_fits, stabilization_year, LifepathOptions};
use lifecurve::synth::{logistic_event_times, series_from_times};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let times = logistic_event_times(300, f64::from(Month::new(2006, 9).index()), 0.15, &mut rng);
    let series = series_from_times("store", &times, Month::december(2012)).ok_or("no events")?;

    let opts = LifepathOptions::default();
    let years: Vec<i32> = (2004..=2012).collect();
    let path = expanding_window_fits(&series, Month::new(2004, 1), &years, &opts);

    println!("year  inflection  ln_slope  expected_total  leaves    phase");
    for p in &path.points {
        println!(
            "{}  {:>10.2}  {:>8.3}  {:>14.1}  {:>7}  {}",
            p.analysis_year,
            p.display_inflection_year(),
            p.fit.ln_slope(),
            p.expected_total,
            p.expected_leave.map_or("-".into(), |y| format!("{y:.2}")),
            p.status.as_str()
        );
    }
    for g in &path.gaps {
        println!("{}  not fitted: {}", g.analysis_year, g.reason);
    }
    println!("last active {}", path.last_active_month);
    match stabilization_year(&path, opts.stabilization_epsilon) {
        Some(y) => println!("trajectory settles in {y}"),
        None => println!("trajectory has not settled"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
