use rayon::prelude::*;
use serde::Serialize;

use super::output::{opt, sig9, OutDir};
use super::{load, parse_cutoff, thread_pool, CliError, CommonArgs, InputKind, Loaded, RunConfig, SampleArgs, ValidateArgs};
use crate::calendar::Month;
use crate::dist::{fit_segmented_powerlaw, scaling_collapse, survival, SegmentedPowerLawFit, SurvivalDistribution};
use crate::entropy::{shannon_entropy, state_vectors};
use crate::fit::{classify, fit_linear, Saturation};
use crate::genmodel::{sample_population, to_order_counts};
use crate::ingestion::{ActivitySeries, ObservationWindow};
use crate::lifepath::{expanding_window_fits, fit_at_cutoff, stabilization_year, Lifepath, LifepathError, LifepathOptions};
use crate::series::{cumulative, NormalizedCumulative};
use crate::validate::{score_cohort, select_cohort};

fn cutoffs_or_end(a: &CommonArgs, data: &Loaded) -> Result<Vec<Month>, CliError> {
    if a.cutoffs.is_empty() {
        return Ok(vec![data.window.end_month]);
    }
    let mut out = Vec::new();
    for raw in &a.cutoffs {
        let c = parse_cutoff(raw)?;
        if !data.window.contains(c) {
            return Err(CliError::Usage(format!(
                "cutoff {c} is outside the data window {}..{}",
                data.window.epoch_month, data.window.end_month
            )));
        }
        out.push(c);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn analysis_years(a: &CommonArgs, data: &Loaded, last: i32) -> Result<Vec<i32>, CliError> {
    if a.cutoffs.is_empty() {
        return Ok((data.window.epoch_month.year()..=last).collect());
    }
    let mut years = Vec::new();
    for raw in &a.cutoffs {
        let y = parse_cutoff(raw)?.year();
        if y < data.window.epoch_month.year() || y > data.window.end_month.year() {
            return Err(CliError::Usage(format!("analysis year {y} is outside the data")));
        }
        years.push(y);
    }
    years.sort_unstable();
    years.dedup();
    Ok(years)
}

struct FitOutcome {
    row: Vec<String>,
    curve: Vec<Vec<String>>,
    ok: bool,
}

const FIT_HEADER: [&str; 16] = [
    "entity_id",
    "cutoff",
    "status",
    "message",
    "total",
    "amplitude",
    "slope_per_month",
    "ln_slope",
    "inflection_year",
    "saturation_status",
    "saturation",
    "sigmoid_chi2",
    "linear_chi2",
    "converged",
    "expected_leave",
    "phase",
];

fn fit_one(series: &ActivitySeries, epoch: Month, cutoff: Month, opts: &LifepathOptions) -> Option<FitOutcome> {
    let truncated = series.truncated(cutoff).filter(|s| s.total() > 0)?;
    let flagged = |status: &str, message: String| FitOutcome {
        row: [
            vec![series.entity_id.clone(), cutoff.to_string(), status.into(), message, truncated.total().to_string()],
            vec![String::new(); FIT_HEADER.len() - 5],
        ]
        .concat(),
        curve: Vec::new(),
        ok: false,
    };
    let point = match fit_at_cutoff(series, epoch, cutoff, cutoff.year(), opts) {
        Ok(p) => p,
        Err(LifepathError::InsufficientHistory(_)) => return Some(flagged("insufficient_history", String::new())),
        Err(e) => return Some(flagged("fit_failed", e.to_string())),
    };
    let window = ObservationWindow {
        epoch_month: epoch.min(truncated.start_month),
        end_month: cutoff,
    };
    let linear_chi2 = NormalizedCumulative::from_series(&truncated, opts.pad_length, window)
        .ok()
        .and_then(|n| fit_linear(&n).ok())
        .map(|l| l.reduced_chi2);
    let f = &point.fit;
    let saturation = match classify(&point.normalized) {
        Saturation::Saturated => "saturated",
        Saturation::Unsaturated => "unsaturated",
    };
    let row = vec![
        series.entity_id.clone(),
        cutoff.to_string(),
        "ok".into(),
        String::new(),
        truncated.total().to_string(),
        sig9(f.amplitude),
        sig9(f.slope_per_month),
        sig9(f.ln_slope()),
        sig9(f.inflection_year()),
        sig9(f.saturation_status),
        saturation.into(),
        sig9(point.normalized.reduced_chi2),
        opt(linear_chi2),
        point.normalized.converged.to_string(),
        opt(point.expected_leave),
        point.status.as_str().into(),
    ];
    let curve = cumulative(&truncated)
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let month = truncated.start_month.offset(k as i32);
            vec![
                series.entity_id.clone(),
                cutoff.to_string(),
                month.to_string(),
                c.to_string(),
                sig9(f.eval(f64::from(month.index()))),
            ]
        })
        .collect();
    Some(FitOutcome { row, curve, ok: true })
}

pub fn fit(a: &CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(a.config.as_ref(), a.pad)?;
    let data = load(a)?;
    let cutoffs = cutoffs_or_end(a, &data)?;
    let out = OutDir::create(&a.out)?;
    let epoch = data.window.epoch_month;
    let entities: Vec<&ActivitySeries> = data.series.values().collect();
    let results: Vec<FitOutcome> = thread_pool(a.jobs)?.install(|| {
        entities
            .par_iter()
            .flat_map_iter(|s| cutoffs.iter().filter_map(|&c| fit_one(s, epoch, c, &cfg.lifepath)).collect::<Vec<_>>())
            .collect()
    });

    for r in results.iter().filter(|r| !r.ok) {
        eprintln!("warning: {} at {}: {}", r.row[0], r.row[1], r.row[2]);
    }
    let rows: Vec<Vec<String>> = results.iter().map(|r| r.row.clone()).collect();
    let curves: Vec<Vec<String>> = results.iter().flat_map(|r| r.curve.clone()).collect();
    out.csv("fits.csv", &FIT_HEADER, &rows)?;
    out.csv("curves.csv", &["entity_id", "cutoff", "month", "cumulative", "fitted"], &curves)?;
    if !results.iter().any(|r| r.ok) {
        return Err(CliError::Numeric("no entity could be fitted".into()));
    }
    Ok(())
}

fn lifepaths(
    data: &Loaded,
    years: &[i32],
    opts: &LifepathOptions,
    jobs: usize,
) -> Result<Vec<Lifepath>, CliError> {
    let epoch = data.window.epoch_month;
    let entities: Vec<&ActivitySeries> = data.series.values().collect();
    Ok(thread_pool(jobs)?.install(|| {
        entities
            .par_iter()
            .map(|s| expanding_window_fits(s, epoch, years, opts))
            .collect()
    }))
}

pub fn lifepath(a: &CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(a.config.as_ref(), a.pad)?;
    let data = load(a)?;
    let years = analysis_years(a, &data, data.window.end_month.year())?;
    let out = OutDir::create(&a.out)?;
    let paths = lifepaths(&data, &years, &cfg.lifepath, a.jobs)?;

    let mut rows = Vec::new();
    let mut stab = Vec::new();
    for path in &paths {
        let mut entity_rows: Vec<(i32, Vec<String>)> = path
            .points
            .iter()
            .map(|p| {
                (
                    p.analysis_year,
                    vec![
                        path.entity_id.clone(),
                        p.analysis_year.to_string(),
                        "ok".into(),
                        sig9(p.fit.inflection_year()),
                        sig9(p.display_inflection_year()),
                        sig9(p.fit.ln_slope()),
                        sig9(p.normalized.ln_slope()),
                        sig9(p.fit.amplitude),
                        sig9(p.fit.saturation_status),
                        opt(p.expected_leave),
                        p.status.as_str().into(),
                    ],
                )
            })
            .collect();
        for g in &path.gaps {
            let mut row = vec![path.entity_id.clone(), g.analysis_year.to_string(), g.reason.clone()];
            row.extend(std::iter::repeat_n(String::new(), 8));
            entity_rows.push((g.analysis_year, row));
        }
        entity_rows.sort_by_key(|(y, _)| *y);
        rows.extend(entity_rows.into_iter().map(|(_, r)| r));
        stab.push(vec![
            path.entity_id.clone(),
            path.last_active_month.to_string(),
            stabilization_year(path, cfg.lifepath.stabilization_epsilon)
                .map(|y| y.to_string())
                .unwrap_or_default(),
        ]);
    }
    out.csv(
        "lifepath.csv",
        &[
            "entity_id",
            "analysis_year",
            "status",
            "inflection_year",
            "display_inflection_year",
            "ln_slope",
            "normalized_ln_slope",
            "amplitude",
            "saturation_status",
            "expected_leave",
            "phase",
        ],
        &rows,
    )?;
    out.csv("stabilization.csv", &["entity_id", "last_active", "stabilization_year"], &stab)?;
    if paths.iter().all(|p| p.points.is_empty()) {
        return Err(CliError::Numeric("no lifepath point could be fitted".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct WindowFit {
    window_years: u32,
    #[serde(flatten)]
    fit: Option<SegmentedPowerLawFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn fit_window(d: &SurvivalDistribution, jmin: u64) -> WindowFit {
    match fit_segmented_powerlaw(d, jmin) {
        Ok(fit) => WindowFit {
            window_years: d.window_years,
            fit: Some(fit),
            error: None,
        },
        Err(e) => WindowFit {
            window_years: d.window_years,
            fit: None,
            error: Some(e.to_string()),
        },
    }
}

fn survival_rows(dists: &[SurvivalDistribution]) -> Vec<Vec<String>> {
    dists
        .iter()
        .flat_map(|d| {
            d.j.iter()
                .zip(&d.n)
                .map(|(j, n)| vec![d.window_years.to_string(), j.to_string(), n.to_string()])
        })
        .collect()
}

pub fn dist(a: &CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(a.config.as_ref(), a.pad)?;
    let data = load(a)?;
    let out = OutDir::create(&a.out)?;
    let epoch = data.window.epoch_month;
    let months = data.window.end_month.since(epoch) + 1;
    let max_years = ((months + 11) / 12) as u32;

    let mut dists = Vec::new();
    for y in 1..=max_years {
        let limit = epoch.offset(12 * y as i32 - 1);
        let sizes: Vec<u64> = data
            .series
            .values()
            .map(|s| {
                s.counts
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| s.start_month.offset(*k as i32) <= limit)
                    .map(|(_, c)| c)
                    .sum::<u64>()
            })
            .filter(|&n| n > 0)
            .collect();
        if let Ok(d) = survival(&sizes, y) {
            dists.push(d);
        }
    }
    out.csv("survival.csv", &["window_years", "J", "N"], &survival_rows(&dists))?;
    let fits: Vec<WindowFit> = dists.iter().map(|d| fit_window(d, cfg.jmin)).collect();
    out.json("powerlaw.json", &serde_json::json!({ "windows": fits }))?;
    if dists.len() >= 3 {
        match scaling_collapse(&dists, &cfg.collapse) {
            Ok(c) => {
                out.json("collapse.json", &c)?;
            }
            Err(e) => eprintln!("warning: scaling collapse failed: {e}"),
        }
    } else {
        eprintln!("warning: {} window(s); the scaling collapse needs at least 3", dists.len());
    }
    if fits.iter().all(|f| f.fit.is_none()) {
        return Err(CliError::Numeric("no window could be fitted".into()));
    }
    Ok(())
}

pub fn sample(a: &SampleArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(a.config.as_ref(), None)?;
    let n = a.count.unwrap_or(cfg.sample_size);
    if n == 0 {
        return Err(CliError::Usage("population size must be at least 1".into()));
    }
    let out = OutDir::create(&a.out)?;
    let pop = sample_population(n, &cfg.model, a.seed);
    let orders = to_order_counts(&pop);
    let rows: Vec<Vec<String>> = pop
        .iter()
        .zip(&orders)
        .enumerate()
        .map(|(i, (p, o))| {
            let band = cfg.model.band_of(p.m_prime, p.t0).map_or(0, |k| k + 1);
            vec![
                i.to_string(),
                sig9(p.t0),
                sig9(p.m_prime),
                sig9(p.a_prime),
                band.to_string(),
                o.to_string(),
            ]
        })
        .collect();
    out.csv("population.csv", &["index", "t0", "m_prime", "a_prime", "band", "orders"], &rows)?;
    let d = survival(&orders, 1).map_err(|e| CliError::Numeric(e.to_string()))?;
    out.csv("survival.csv", &["window_years", "J", "N"], &survival_rows(std::slice::from_ref(&d)))?;
    out.json("powerlaw.json", &fit_window(&d, cfg.jmin))?;
    Ok(())
}

pub fn validate(a: &ValidateArgs) -> Result<(), CliError> {
    let common = &a.common;
    let cfg = RunConfig::load(common.config.as_ref(), common.pad)?;
    let data = load(common)?;
    let (first, last) = (data.window.epoch_month.year(), data.window.end_month.year());
    if a.leave_year < first || a.leave_year > last {
        return Err(CliError::Usage(format!("leave year {} is outside the data ({first}..{last})", a.leave_year)));
    }
    let years: Vec<i32> = analysis_years(common, &data, a.leave_year)?
        .into_iter()
        .filter(|&y| y <= a.leave_year)
        .collect();
    let out = OutDir::create(&common.out)?;
    let paths = lifepaths(&data, &years, &cfg.lifepath, common.jobs)?;
    let cohort = select_cohort(&paths, a.leave_year).map_err(|e| CliError::Data(e.to_string()))?;
    let report = score_cohort(&cohort, a.leave_year);
    out.json("report.json", &report)?;
    let rows: Vec<Vec<String>> = report
        .per_year
        .iter()
        .map(|(y, s)| {
            vec![
                y.to_string(),
                s.entities.to_string(),
                s.predicted.to_string(),
                sig9(s.mean_expected_leave),
                sig9(s.variance),
                sig9(s.mean_error),
                sig9(s.within_1yr),
                sig9(s.within_2yr),
            ]
        })
        .collect();
    out.csv(
        "report.csv",
        &[
            "analysis_year",
            "entities",
            "predicted",
            "mean_expected_leave",
            "variance",
            "mean_error",
            "within_1yr",
            "within_2yr",
        ],
        &rows,
    )?;
    Ok(())
}

pub fn entropy(a: &CommonArgs) -> Result<(), CliError> {
    if a.kind != InputKind::Occurrences {
        return Err(CliError::Usage("entropy needs --kind occurrences".into()));
    }
    let data = load(a)?;
    if data.occurrences.iter().all(|r| r.state.is_none()) {
        return Err(CliError::Data("entropy needs a `state` column in the occurrence table".into()));
    }
    let out = OutDir::create(&a.out)?;
    let rows: Vec<Vec<String>> = state_vectors(&data.occurrences)
        .into_iter()
        .map(|(id, v)| {
            let states = v.counts().iter().filter(|&&c| c > 0.0).count();
            vec![id, sig9(shannon_entropy(&v)), states.to_string()]
        })
        .collect();
    out.csv("entropy.csv", &["entity_id", "entropy", "states"], &rows)?;
    Ok(())
}
