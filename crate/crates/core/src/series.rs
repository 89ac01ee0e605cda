//! Cumulative, padded and rescaled series, and the inverse mapping of fitted
//! parameters back to calendar units.
//!
//! A series of `n` months starting at `first_activity_month` is prefixed with
//! `pad_length` zero months, giving `L = pad_length + n` points. Point `k`
//! sits at `t = k / (L - 1)` and at calendar month
//! `first_activity_month - pad_length + k`, so `t = 1` is the cutoff month.
//! Values are divided by the final cumulative count.

use serde::{Deserialize, Serialize};

use crate::calendar::{month_index_to_year, Month};
use crate::fit::{sigmoid_eval, SigmoidFit};
use crate::ingestion::{ActivitySeries, ObservationWindow};

pub const DEFAULT_PAD_LENGTH: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("series has no activity")]
    NoActivity,
    #[error("cumulative series decreases at index {0}")]
    NotCumulative(usize),
    #[error("series of {len} months does not span {first}..={end}")]
    LengthMismatch { len: usize, first: Month, end: Month },
    #[error("normalized series needs at least two points, got {0}")]
    TooShort(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleInfo {
    pub pad_length: usize,
    pub total_points: usize,
    pub final_cumulative: u64,
    pub epoch_month: Month,
    pub end_month: Month,
    pub first_activity_month: Month,
}

impl ScaleInfo {
    /// Months per unit of normalized time.
    pub fn months_per_unit(&self) -> f64 {
        (self.total_points - 1) as f64
    }

    /// Calendar month of the first (padding) grid point.
    pub fn origin_month(&self) -> Month {
        self.first_activity_month.offset(-(self.pad_length as i32))
    }

    /// Fractional calendar month index for a normalized time.
    pub fn calendar_month(&self, t: f64) -> f64 {
        f64::from(self.origin_month().index()) + t * self.months_per_unit()
    }

    pub fn normalized_time(&self, month_index: f64) -> f64 {
        (month_index - f64::from(self.origin_month().index())) / self.months_per_unit()
    }

    /// Normalized time of the dataset epoch. For an entity that starts at the
    /// epoch this is the fraction of the axis taken by padding.
    pub fn epoch_time(&self) -> f64 {
        self.normalized_time(f64::from(self.epoch_month.index()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedCumulative {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub scale: ScaleInfo,
}

impl NormalizedCumulative {
    /// Builds the normalized curve for `series` as observed up to `window.end_month`.
    pub fn from_series(
        series: &ActivitySeries,
        pad_length: usize,
        window: ObservationWindow,
    ) -> Result<Self, SeriesError> {
        normalize(&cumulative(series), pad_length, series.start_month, window)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Undoes the rescaling, returning the original cumulative counts.
    pub fn denormalize(&self) -> Vec<u64> {
        let f = self.scale.final_cumulative as f64;
        self.y[self.scale.pad_length..]
            .iter()
            .map(|&v| (v * f).round() as u64)
            .collect()
    }
}

pub fn cumulative(series: &ActivitySeries) -> Vec<u64> {
    series
        .counts
        .iter()
        .scan(0u64, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect()
}

/// Pads, rescales and places `cum` (which starts at `first_activity_month`
/// and ends at `window.end_month`) on the unit square.
pub fn normalize(
    cum: &[u64],
    pad_length: usize,
    first_activity_month: Month,
    window: ObservationWindow,
) -> Result<NormalizedCumulative, SeriesError> {
    let expected = window.end_month.since(first_activity_month) + 1;
    if expected < 1 || cum.len() != expected as usize {
        return Err(SeriesError::LengthMismatch {
            len: cum.len(),
            first: first_activity_month,
            end: window.end_month,
        });
    }
    if let Some(i) = cum.windows(2).position(|w| w[1] < w[0]) {
        return Err(SeriesError::NotCumulative(i + 1));
    }
    let final_cumulative = *cum.last().unwrap_or(&0);
    if final_cumulative == 0 {
        return Err(SeriesError::NoActivity);
    }
    let total_points = pad_length + cum.len();
    if total_points < 2 {
        return Err(SeriesError::TooShort(total_points));
    }

    let step = (total_points - 1) as f64;
    let t = (0..total_points)
        .map(|k| if k + 1 == total_points { 1.0 } else { k as f64 / step })
        .collect();
    let f = final_cumulative as f64;
    let mut y = vec![0.0; pad_length];
    y.extend(cum.iter().map(|&c| c as f64 / f));
    if let Some(last) = y.last_mut() {
        *last = 1.0;
    }

    Ok(NormalizedCumulative {
        t,
        y,
        scale: ScaleInfo {
            pad_length,
            total_points,
            final_cumulative,
            epoch_month: window.epoch_month,
            end_month: window.end_month,
            first_activity_month,
        },
    })
}

/// A sigmoid fit expressed in calendar units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalendarFit {
    /// Asymptotic total activity (orders, occurrences).
    pub amplitude: f64,
    /// Growth rate per month.
    pub slope_per_month: f64,
    /// Fractional calendar month index of the inflection.
    pub inflection_month: f64,
    pub saturation_status: f64,
    pub reduced_chi2: f64,
    pub converged: bool,
}

impl CalendarFit {
    pub fn inflection_year(&self) -> f64 {
        month_index_to_year(self.inflection_month)
    }

    pub fn ln_slope(&self) -> f64 {
        self.slope_per_month.ln()
    }

    /// Fitted cumulative activity at a fractional calendar month index.
    pub fn eval(&self, month_index: f64) -> f64 {
        sigmoid_eval(
            self.amplitude,
            self.slope_per_month,
            self.inflection_month,
            month_index,
        )
    }
}

pub fn denormalize_params(fit: &SigmoidFit, scale: &ScaleInfo) -> CalendarFit {
    CalendarFit {
        amplitude: fit.amplitude * scale.final_cumulative as f64,
        slope_per_month: fit.slope / scale.months_per_unit(),
        inflection_month: scale.calendar_month(fit.inflection),
        saturation_status: fit.saturation_status,
        reduced_chi2: fit.reduced_chi2,
        converged: fit.converged,
    }
}
