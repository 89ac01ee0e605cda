//! Synthetic entities whose activity follows the logistic model exactly.
//!
//! Order times are drawn from the logistic distribution whose CDF is the
//! fitted curve shape, so a population generated here is the cleanest
//! possible ground truth for fitting, lifepath and prediction checks.

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::calendar::Month;
use crate::fit::sigmoid_eval;
use crate::ingestion::{ActivitySeries, EventRecord};

/// Planted calendar-unit parameters of a synthetic entity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedCurve {
    pub total: u64,
    pub slope_per_month: f64,
    /// Fractional month index (see [`Month`]).
    pub inflection_month: f64,
}

/// Draws `n` event times (fractional month indices) from the logistic
/// distribution with the given location and rate.
pub fn logistic_event_times<R: Rng + ?Sized>(
    n: usize,
    inflection_month: f64,
    slope_per_month: f64,
    rng: &mut R,
) -> Vec<f64> {
    let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
    (0..n)
        .map(|_| {
            let u: f64 = unit.sample(rng).max(f64::MIN_POSITIVE);
            inflection_month + (u / (1.0 - u)).ln() / slope_per_month
        })
        .collect()
}

/// Bins fractional month times into a monthly series ending at `end`. Times
/// after `end` are dropped; returns `None` if nothing remains.
pub fn series_from_times(entity_id: &str, times: &[f64], end: Month) -> Option<ActivitySeries> {
    let months: Vec<i32> = times
        .iter()
        .map(|t| t.floor() as i32)
        .filter(|&m| m <= end.index())
        .collect();
    let start = *months.iter().min()?;
    let mut counts = vec![0u64; (end.index() - start + 1) as usize];
    for m in months {
        counts[(m - start) as usize] += 1;
    }
    Some(ActivitySeries {
        entity_id: entity_id.to_string(),
        start_month: Month(start),
        counts,
    })
}

/// Monthly counts whose cumulative sum tracks `total * logistic` as closely
/// as integer rounding allows: the cumulative count at the end of month `k`
/// is `round(total * sigmoid(k + 1))`. The series starts at the first month
/// with a nonzero count and runs through `end`.
pub fn deterministic_series(entity_id: &str, curve: PlantedCurve, end: Month) -> Option<ActivitySeries> {
    let cum_at = |month: i32| {
        (curve.total as f64
            * sigmoid_eval(1.0, curve.slope_per_month, curve.inflection_month, f64::from(month) + 1.0))
        .round() as u64
    };
    // Walk back from the inflection until the cumulative count reaches zero.
    let mut start = curve.inflection_month.floor() as i32;
    while cum_at(start - 1) > 0 {
        start -= 1;
    }
    if start > end.index() {
        return None;
    }
    let mut prev = cum_at(start - 1);
    let counts: Vec<u64> = (start..=end.index())
        .map(|m| {
            let c = cum_at(m);
            let d = c - prev;
            prev = c;
            d
        })
        .collect();
    let first = counts.iter().position(|&c| c > 0)?;
    Some(ActivitySeries {
        entity_id: entity_id.to_string(),
        start_month: Month(start + first as i32),
        counts: counts[first..].to_vec(),
    })
}

/// A synthetic entity together with the quantities the simulator knows.
#[derive(Debug, Clone)]
pub struct SimulatedEntity {
    pub series: ActivitySeries,
    pub planted: PlantedCurve,
    pub last_active: Month,
}

impl SimulatedEntity {
    pub fn events(&self) -> Vec<EventRecord> {
        series_to_events(&self.series)
    }
}

/// Expands a monthly series back into one event per unit count, dated the
/// first of the month.
pub fn series_to_events(series: &ActivitySeries) -> Vec<EventRecord> {
    let mut out = Vec::new();
    for (k, &c) in series.counts.iter().enumerate() {
        let month = series.start_month.offset(k as i32);
        let date = chrono::NaiveDate::from_ymd_opt(month.year(), month.month(), 1).expect("valid date");
        for _ in 0..c {
            out.push(EventRecord {
                entity_id: series.entity_id.clone(),
                timestamp: date,
            });
        }
    }
    out
}

/// Settings for a cohort of entities that all stop in the same calendar year.
#[derive(Debug, Clone)]
pub struct CohortSpec {
    pub size: usize,
    pub leave_year: i32,
    pub data_end: Month,
    /// Range of log total order counts.
    pub ln_total: (f64, f64),
    /// Range of growth rates per month.
    pub slope_per_month: (f64, f64),
}

impl CohortSpec {
    pub fn new(size: usize, leave_year: i32) -> Self {
        CohortSpec {
            size,
            leave_year,
            data_end: Month::december(leave_year + 3),
            ln_total: (20f64.ln(), 300f64.ln()),
            slope_per_month: (0.15, 0.6),
        }
    }
}

/// Generates a cohort whose last activity lies in `spec.leave_year`.
///
/// Each entity draws `round(exp(a))` event times from a logistic curve, then
/// the whole stream is shifted so that its final event lands in a uniformly
/// chosen month of the leave year. Shifting preserves the logistic shape, so
/// the planted inflection is shifted by the same amount.
pub fn leaving_cohort<R: Rng + ?Sized>(spec: &CohortSpec, rng: &mut R) -> Vec<SimulatedEntity> {
    let ln_total = Uniform::new_inclusive(spec.ln_total.0, spec.ln_total.1).expect("valid range");
    let slope = Uniform::new_inclusive(spec.slope_per_month.0, spec.slope_per_month.1).expect("valid range");
    let month_of_year = Uniform::new(0i32, 12).expect("valid range");
    let frac = Uniform::new(0.0f64, 1.0).expect("valid range");
    let width = spec.size.max(1).to_string().len();

    (0..spec.size)
        .map(|i| {
            let total = (ln_total.sample(rng).exp().round() as u64).max(2);
            let m = slope.sample(rng);
            let mut times = logistic_event_times(total as usize, 0.0, m, rng);
            let last = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let target = f64::from(Month::new(spec.leave_year, 1).offset(month_of_year.sample(rng)).index())
                + frac.sample(rng);
            let shift = target - last;
            for t in &mut times {
                *t += shift;
            }
            let id = format!("S{:0width$}", i);
            let series = series_from_times(&id, &times, spec.data_end).expect("nonempty");
            let last_active = series.last_active_month();
            SimulatedEntity {
                series,
                planted: PlantedCurve {
                    total,
                    slope_per_month: m,
                    inflection_month: shift,
                },
                last_active,
            }
        })
        .collect()
}

/// Size at upper-tail probability `u` of a survival function that is
/// `J^-alpha1` below `kink` and continues as `J^-alpha2` above it.
fn two_regime_size(u: f64, alpha1: f64, alpha2: f64, kink: f64) -> u64 {
    let at_kink = kink.powf(-alpha1);
    let x = if u > at_kink {
        u.powf(-1.0 / alpha1)
    } else {
        kink * (u / at_kink).powf(-1.0 / alpha2)
    };
    (x.floor() as u64).max(1)
}

/// Random sizes drawn from the two-regime law. Each size is the floor of a
/// continuous draw, so `N(J)` tracks the planted curve at every integer `J`.
pub fn two_regime_sizes<R: Rng + ?Sized>(n: usize, alpha1: f64, alpha2: f64, kink: f64, rng: &mut R) -> Vec<u64> {
    let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
    (0..n)
        .map(|_| two_regime_size(1.0 - unit.sample(rng), alpha1, alpha2, kink))
        .collect()
}

/// Noise-free population of `n` sizes placed at the mid-quantiles of the
/// two-regime law.
pub fn two_regime_quantile_sizes(n: usize, alpha1: f64, alpha2: f64, kink: f64) -> Vec<u64> {
    (0..n)
        .map(|i| two_regime_size((i as f64 + 0.5) / n as f64, alpha1, alpha2, kink))
        .collect()
}

/// Survival table `N(Y, J) = round(Y^beta1 g(J / Y^beta2))` on integer `J`,
/// stopping before the first `J` where the rounded value reaches zero.
pub fn scaled_survival<G: Fn(f64) -> f64>(
    window_years: u32,
    beta1: f64,
    beta2: f64,
    g: G,
) -> crate::dist::SurvivalDistribution {
    let y = f64::from(window_years);
    let (mut js, mut ns) = (Vec::new(), Vec::new());
    for j in 1u64.. {
        let v = (y.powf(beta1) * g(j as f64 / y.powf(beta2))).round();
        if v < 1.0 {
            break;
        }
        js.push(j);
        ns.push(v as u64);
    }
    crate::dist::SurvivalDistribution::from_table(window_years, js, ns).expect("g is positive and decreasing")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_series_tracks_the_curve() {
        let curve = PlantedCurve {
            total: 500,
            slope_per_month: 0.2,
            inflection_month: f64::from(Month::new(2005, 6).index()),
        };
        let s = deterministic_series("x", curve, Month::new(2012, 12)).unwrap();
        assert_eq!(s.total(), 500);
        assert!(s.counts[0] > 0);
    }

    #[test]
    fn cohort_leaves_in_the_planted_year() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cohort = leaving_cohort(&CohortSpec::new(50, 2009), &mut rng);
        assert_eq!(cohort.len(), 50);
        for e in &cohort {
            assert_eq!(e.last_active.year(), 2009);
            assert_eq!(e.series.total(), e.planted.total);
        }
    }
}
