//! Yearly refits of one entity and the trajectory they trace.
//!
//! Each analysis year truncates the entity's series at December of that
//! year, renormalizes, refits and converts back to calendar units. The
//! sequence of (inflection year, ln slope per month) points is the entity's
//! lifepath; once an entity stops, later refits only see a longer flat tail
//! and the points stop moving.

use serde::{Deserialize, Serialize};

use crate::calendar::{month_index_to_year, Month};
use crate::fit::{fit_sigmoid, FitOptions, SigmoidFit};
use crate::ingestion::{ActivitySeries, ObservationWindow};
use crate::series::{denormalize_params, CalendarFit, NormalizedCumulative, DEFAULT_PAD_LENGTH};

/// Calendar year shown for entities whose inflection cannot yet be located.
pub const SENTINEL_INFLECTION_YEAR: f64 = 2030.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LifepathError {
    #[error("fitted amplitude {0} is below one unit; leaving time undefined")]
    AmplitudeBelowOne(f64),
    #[error("no activity before {0}")]
    NotStarted(Month),
    #[error("activity began within the final two months before {0}")]
    InsufficientHistory(Month),
    #[error("cutoff {cutoff} lies beyond the end of the data ({data_end})")]
    BeyondData { cutoff: Month, data_end: Month },
    #[error(transparent)]
    Series(#[from] crate::series::SeriesError),
    #[error(transparent)]
    Fit(#[from] crate::fit::FitError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LifepathOptions {
    pub pad_length: usize,
    pub fit: FitOptions,
    /// Half-width in months of the "at inflection" phase.
    pub inflection_band_months: f64,
    /// Months without activity before an entity counts as dormant.
    pub dormancy_months: i32,
    /// Largest saturation status still considered finished.
    pub deactivated_saturation: f64,
    pub stabilization_epsilon: f64,
}

impl Default for LifepathOptions {
    fn default() -> Self {
        LifepathOptions {
            pad_length: DEFAULT_PAD_LENGTH,
            fit: FitOptions::default(),
            inflection_band_months: 1.0,
            dormancy_months: 6,
            deactivated_saturation: 1.05,
            stabilization_epsilon: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Acceleration,
    AtInflection,
    Deceleration,
    Deactivated,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Acceleration => "acceleration",
            Phase::AtInflection => "at_inflection",
            Phase::Deceleration => "deceleration",
            Phase::Deactivated => "deactivated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifepathPoint {
    pub analysis_year: i32,
    pub cutoff: Month,
    /// Fit on the normalized axis (the axis the parameter-space plots use).
    pub normalized: SigmoidFit,
    pub fit: CalendarFit,
    /// Decimal year; `None` when the fitted amplitude is below one unit.
    pub expected_leave: Option<f64>,
    pub expected_total: f64,
    pub status: Phase,
}

impl LifepathPoint {
    /// Inflection year for display: far-future inflections of strongly
    /// unsaturated fits are replaced by [`SENTINEL_INFLECTION_YEAR`].
    pub fn display_inflection_year(&self) -> f64 {
        display_inflection_year(&self.fit, self.cutoff)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifepathGap {
    pub analysis_year: i32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lifepath {
    pub entity_id: String,
    pub last_active_month: Month,
    pub points: Vec<LifepathPoint>,
    pub gaps: Vec<LifepathGap>,
}

pub fn display_inflection_year(fit: &CalendarFit, cutoff: Month) -> f64 {
    let lead_years = (fit.inflection_month - f64::from(cutoff.index())) / 12.0;
    if lead_years > 5.0 && fit.saturation_status > 2.0 {
        SENTINEL_INFLECTION_YEAR
    } else {
        fit.inflection_year()
    }
}

/// Date at which less than half a unit of the fitted total remains:
/// `t0 + ln(2A - 1) / m`, returned as a decimal year.
pub fn expected_leave_time(fit: &CalendarFit) -> Result<f64, LifepathError> {
    if !(fit.amplitude >= 1.0) {
        return Err(LifepathError::AmplitudeBelowOne(fit.amplitude));
    }
    let months = fit.inflection_month + (2.0 * fit.amplitude - 1.0).ln() / fit.slope_per_month;
    Ok(month_index_to_year(months))
}

fn phase(
    fit: &CalendarFit,
    cutoff: Month,
    last_active: Month,
    opts: &LifepathOptions,
) -> Phase {
    let c = f64::from(cutoff.index());
    let band = opts.inflection_band_months;
    if c < fit.inflection_month - band {
        Phase::Acceleration
    } else if (c - fit.inflection_month).abs() <= band {
        Phase::AtInflection
    } else {
        let dormant = last_active <= cutoff.offset(-opts.dormancy_months);
        if dormant && fit.saturation_status <= opts.deactivated_saturation {
            Phase::Deactivated
        } else {
            Phase::Deceleration
        }
    }
}

/// Fits `series` as observed through `cutoff`.
pub fn fit_at_cutoff(
    series: &ActivitySeries,
    epoch: Month,
    cutoff: Month,
    analysis_year: i32,
    opts: &LifepathOptions,
) -> Result<LifepathPoint, LifepathError> {
    if cutoff > series.end_month() {
        return Err(LifepathError::BeyondData {
            cutoff,
            data_end: series.end_month(),
        });
    }
    let truncated = series
        .truncated(cutoff)
        .filter(|s| s.total() > 0)
        .ok_or(LifepathError::NotStarted(cutoff))?;
    if truncated.has_insufficient_history(cutoff) {
        return Err(LifepathError::InsufficientHistory(cutoff));
    }
    let window = ObservationWindow {
        epoch_month: epoch.min(truncated.start_month),
        end_month: cutoff,
    };
    let normalized = NormalizedCumulative::from_series(&truncated, opts.pad_length, window)?;
    let sigmoid = fit_sigmoid(&normalized, &opts.fit)?;
    let fit = denormalize_params(&sigmoid, &normalized.scale);
    Ok(LifepathPoint {
        analysis_year,
        cutoff,
        normalized: sigmoid,
        fit,
        expected_leave: expected_leave_time(&fit).ok(),
        expected_total: fit.amplitude,
        status: phase(&fit, cutoff, truncated.last_active_month(), opts),
    })
}

/// One refit per analysis year (cutoff at December, or at the end of the
/// data in the final data year). Years before the entity's first activity
/// are skipped; years that cannot be fitted are recorded as gaps.
pub fn expanding_window_fits(
    series: &ActivitySeries,
    epoch: Month,
    years: &[i32],
    opts: &LifepathOptions,
) -> Lifepath {
    let mut years = years.to_vec();
    years.sort_unstable();
    years.dedup();

    let mut points = Vec::new();
    let mut gaps = Vec::new();
    for year in years {
        let end = series.end_month();
        let cutoff = match Month::december(year) {
            c if c > end && year == end.year() => end,
            c => c,
        };
        match fit_at_cutoff(series, epoch, cutoff, year, opts) {
            Ok(p) => points.push(p),
            Err(LifepathError::NotStarted(_)) => {}
            Err(e) => gaps.push(LifepathGap {
                analysis_year: year,
                reason: e.to_string(),
            }),
        }
    }
    Lifepath {
        entity_id: series.entity_id.clone(),
        last_active_month: series.last_active_month(),
        points,
        gaps,
    }
}

/// Euclidean distance between two lifepath points in the plane
/// (inflection year, ln slope per month).
pub fn trajectory_step_distance(p1: &LifepathPoint, p2: &LifepathPoint) -> f64 {
    let dx = p1.fit.inflection_year() - p2.fit.inflection_year();
    let dy = p1.fit.ln_slope() - p2.fit.ln_slope();
    dx.hypot(dy)
}

/// First year whose steps from the previous point and to the next point
/// (when there is one) are both shorter than `epsilon`.
pub fn stabilization_year(path: &Lifepath, epsilon: f64) -> Option<i32> {
    let pts = &path.points;
    (1..pts.len())
        .find(|&i| {
            trajectory_step_distance(&pts[i - 1], &pts[i]) < epsilon
                && pts
                    .get(i + 1)
                    .is_none_or(|next| trajectory_step_distance(&pts[i], next) < epsilon)
        })
        .map(|i| pts[i].analysis_year)
}
