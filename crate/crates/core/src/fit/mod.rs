//! Logistic growth-curve fitting.
//!
//! The model is `y(t) = A / (1 + exp(-m (t - t0)))`, fitted by bounded
//! Levenberg-Marquardt with an analytic Jacobian and a small restart ladder
//! over the initial slope. A straight-line fit is provided as the reference
//! model for reduced chi-square comparisons.

mod lm;

use serde::{Deserialize, Serialize};

use crate::series::NormalizedCumulative;

const MIN_SIGMOID_POINTS: usize = 4;
const MIN_LINEAR_POINTS: usize = 3;
const RSS_TIE: f64 = 1e-12;
const MIN_AMPLITUDE: f64 = 1e-12;

/// Largest admissible normalized slope, `e^9.5`.
pub fn default_slope_max() -> f64 {
    9.5f64.exp()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("insufficient data: {points} points, need at least {required}")]
    InsufficientData { points: usize, required: usize },
    #[error("series has no nonzero value")]
    NoActivity,
    #[error("t and y differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("degenerate abscissa: all t values are equal")]
    Degenerate,
    #[error("invalid fit options: {0}")]
    InvalidOptions(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub amplitude_max: f64,
    pub slope_max: f64,
    pub inflection_max: f64,
    pub step_tolerance: f64,
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    /// Multipliers applied to the initial slope when the first start does not converge.
    pub restart_slope_factors: Vec<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            amplitude_max: 10.0,
            slope_max: default_slope_max(),
            inflection_max: 2.0,
            step_tolerance: 1e-10,
            gradient_tolerance: 1e-12,
            max_iterations: 200,
            restart_slope_factors: vec![0.1, 0.5, 2.0, 10.0, 50.0],
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<(), FitError> {
        let bad = |what: &str| Err(FitError::InvalidOptions(what.to_string()));
        if !(self.amplitude_max > 0.0 && self.amplitude_max.is_finite()) {
            return bad("amplitude_max must be positive and finite");
        }
        if !(self.slope_max > 0.0 && self.slope_max.is_finite()) {
            return bad("slope_max must be positive and finite");
        }
        if !(self.inflection_max >= 0.0 && self.inflection_max.is_finite()) {
            return bad("inflection_max must be non-negative and finite");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if self.restart_slope_factors.iter().any(|f| !(*f > 0.0)) {
            return bad("restart factors must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Saturation {
    Saturated,
    Unsaturated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidFit {
    pub amplitude: f64,
    pub slope: f64,
    pub inflection: f64,
    pub rss: f64,
    pub reduced_chi2: f64,
    /// Fitted amplitude over the last observed value; equals the amplitude
    /// for normalized series.
    pub saturation_status: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl SigmoidFit {
    /// A fit record carrying only parameters, as if fitted to a series ending at 1.
    pub fn from_parameters(amplitude: f64, slope: f64, inflection: f64) -> Self {
        SigmoidFit {
            amplitude,
            slope,
            inflection,
            rss: 0.0,
            reduced_chi2: 0.0,
            saturation_status: amplitude,
            converged: true,
            iterations: 0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        sigmoid_eval(self.amplitude, self.slope, self.inflection, t)
    }

    pub fn ln_slope(&self) -> f64 {
        self.slope.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub reduced_chi2: f64,
}

/// Logistic function evaluated without overflow for any finite `x`.
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_eval(amplitude: f64, slope: f64, inflection: f64, t: f64) -> f64 {
    amplitude * logistic(slope * (t - inflection))
}

/// Saturated iff the normalized amplitude is at most 1.
pub fn classify(fit: &SigmoidFit) -> Saturation {
    if fit.saturation_status <= 1.0 {
        Saturation::Saturated
    } else {
        Saturation::Unsaturated
    }
}

pub fn fit_sigmoid(series: &NormalizedCumulative, opts: &FitOptions) -> Result<SigmoidFit, FitError> {
    fit_sigmoid_points(&series.t, &series.y, opts)
}

pub fn fit_linear(series: &NormalizedCumulative) -> Result<LinearFit, FitError> {
    fit_linear_points(&series.t, &series.y)
}

fn initial_guess(t: &[f64], y: &[f64], y_final: f64, opts: &FitOptions) -> (f64, f64, f64) {
    let amplitude = (1.05 * y_final).min(opts.amplitude_max);
    let half = y_final / 2.0;
    let inflection = t
        .iter()
        .zip(y)
        .find(|(_, &v)| v >= half)
        .map_or(t[t.len() - 1], |(&tk, _)| tk)
        .clamp(0.0, opts.inflection_max);
    let max_rate = t
        .windows(2)
        .zip(y.windows(2))
        .filter(|(tw, _)| tw[1] > tw[0])
        .map(|(tw, yw)| (yw[1] - yw[0]) / (tw[1] - tw[0]))
        .fold(0.0, f64::max);
    let slope = if max_rate > 0.0 {
        (4.0 * max_rate / amplitude).min(opts.slope_max)
    } else {
        1.0
    };
    (amplitude, slope, inflection)
}

/// Data that is zero up to one point and constant afterwards (all activity
/// in a single month) has no finite least-squares optimum: the residual
/// shrinks monotonically as the slope grows. The bounded optimum puts the
/// slope on its upper bound, the amplitude on the plateau and the
/// inflection midway across the jump.
fn single_jump_fit(t: &[f64], y: &[f64], opts: &FitOptions) -> Option<SigmoidFit> {
    if y[0] != 0.0 {
        return None;
    }
    let jump = y.iter().position(|&v| v != 0.0)?;
    let level = y[jump];
    if y[jump..].iter().any(|&v| v != level) {
        return None;
    }
    let inflection = 0.5 * (t[jump - 1] + t[jump]);
    if inflection > opts.inflection_max {
        return None;
    }
    let params = [level, opts.slope_max.ln(), inflection];
    let rss = lm::rss(t, y, &params);
    Some(SigmoidFit {
        amplitude: level,
        slope: opts.slope_max,
        inflection,
        rss,
        reduced_chi2: rss / (t.len() - 3) as f64,
        saturation_status: 1.0,
        converged: true,
        iterations: 0,
    })
}

/// Fits the logistic to arbitrary `(t, y)` samples with unit weights.
pub fn fit_sigmoid_points(t: &[f64], y: &[f64], opts: &FitOptions) -> Result<SigmoidFit, FitError> {
    if t.len() != y.len() {
        return Err(FitError::LengthMismatch(t.len(), y.len()));
    }
    if t.len() < MIN_SIGMOID_POINTS {
        return Err(FitError::InsufficientData {
            points: t.len(),
            required: MIN_SIGMOID_POINTS,
        });
    }
    opts.validate()?;
    let y_final = match y[y.len() - 1] {
        v if v > 0.0 => v,
        _ => y.iter().copied().fold(0.0, f64::max),
    };
    if !(y_final > 0.0) {
        return Err(FitError::NoActivity);
    }

    let bounds = lm::Bounds {
        lower: [MIN_AMPLITUDE, f64::NEG_INFINITY, 0.0],
        upper: [opts.amplitude_max, opts.slope_max.ln(), opts.inflection_max],
    };
    let settings = lm::Settings {
        step_tolerance: opts.step_tolerance,
        gradient_tolerance: opts.gradient_tolerance,
        max_iterations: opts.max_iterations,
    };

    if let Some(fit) = single_jump_fit(t, y, opts) {
        return Ok(fit);
    }

    let (a0, m0, t00) = initial_guess(t, y, y_final, opts);
    let run = |slope: f64| lm::minimize(t, y, [a0, slope.ln(), t00], &bounds, &settings);

    let mut runs = vec![run(m0)];
    if !runs[0].converged {
        for &factor in &opts.restart_slope_factors {
            runs.push(run((m0 * factor).min(opts.slope_max)));
        }
    }

    let any_converged = runs.iter().any(|r| r.converged);
    let best = runs
        .iter()
        .filter(|r| r.converged || !any_converged)
        .min_by(|a, b| {
            if (a.rss - b.rss).abs() <= RSS_TIE {
                a.params[1].total_cmp(&b.params[1])
            } else {
                a.rss.total_cmp(&b.rss)
            }
        })
        .expect("at least one run");
    let iterations = runs.iter().map(|r| r.iterations).sum();

    let amplitude = best.params[0];
    Ok(SigmoidFit {
        amplitude,
        slope: best.params[1].exp(),
        inflection: best.params[2],
        rss: best.rss,
        reduced_chi2: best.rss / (t.len() - 3) as f64,
        saturation_status: amplitude / y_final,
        converged: best.converged,
        iterations,
    })
}

/// Ordinary least-squares line; reduced chi-square uses `n - 2` degrees of freedom.
pub fn fit_linear_points(t: &[f64], y: &[f64]) -> Result<LinearFit, FitError> {
    if t.len() != y.len() {
        return Err(FitError::LengthMismatch(t.len(), y.len()));
    }
    let n = t.len();
    if n < MIN_LINEAR_POINTS {
        return Err(FitError::InsufficientData {
            points: n,
            required: MIN_LINEAR_POINTS,
        });
    }
    let nf = n as f64;
    let mean_t = t.iter().sum::<f64>() / nf;
    let mean_y = y.iter().sum::<f64>() / nf;
    let (sxx, sxy) = t.iter().zip(y).fold((0.0, 0.0), |(sxx, sxy), (&tk, &yk)| {
        let dt = tk - mean_t;
        (sxx + dt * dt, sxy + dt * (yk - mean_y))
    });
    if sxx <= 0.0 {
        return Err(FitError::Degenerate);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_t;
    let rss: f64 = t
        .iter()
        .zip(y)
        .map(|(&tk, &yk)| {
            let r = yk - (intercept + slope * tk);
            r * r
        })
        .sum();
    Ok(LinearFit {
        intercept,
        slope,
        reduced_chi2: rss / (nf - 2.0),
    })
}
