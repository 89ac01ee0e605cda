//! Fit one entity's cumulative activity with the logistic curve and compare
//! it with a straight line.

use lifecurve::calendar::Month;
use lifecurve::fit::{fit_linear, fit_sigmoid, FitOptions};
use lifecurve::ingestion::ObservationWindow;
use lifecurve::series::{denormalize_params, NormalizedCumulative};
use lifecurve::synth::{logistic_event_times, series_from_times};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // 500 orders, fastest growth in mid 2007, rate 0.12 per month.
    let inflection = f64::from(Month::new(2007, 6).index());
    let times = logistic_event_times(500, inflection, 0.12, &mut rng);
    let end = Month::december(2011);
    let series = series_from_times("shop", &times, end).ok_or("no events")?;

    let window = ObservationWindow::new(Month::new(2003, 1), end)?;
    let norm = NormalizedCumulative::from_series(&series, 100, window)?;
    let fit = fit_sigmoid(&norm, &FitOptions::default())?;
    let line = fit_linear(&norm)?;
    let cal = denormalize_params(&fit, &norm.scale);

    println!("normalized: A {:.4} m {:.2} t0 {:.4} converged {}", fit.amplitude, fit.slope, fit.inflection, fit.converged);
    println!(
        "calendar:   total {:.1} orders, rate {:.4}/month, inflection {:.2}",
        cal.amplitude,
        cal.slope_per_month,
        cal.inflection_year()
    );
    println!("reduced chi2: sigmoid {:.3e} line {:.3e}", fit.reduced_chi2, line.reduced_chi2);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
