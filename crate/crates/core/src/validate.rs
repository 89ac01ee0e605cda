//! Scoring of predicted leaving times against a cohort that is known to
//! have left in a given year.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::lifepath::Lifepath;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidateError {
    #[error("no entity left in {0}")]
    EmptyCohort(i32),
}

/// Prediction quality for one analysis year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearScore {
    /// Cohort members with a fit at this analysis year.
    pub entities: usize,
    /// Of those, members with a defined expected leaving time.
    pub predicted: usize,
    pub mean_expected_leave: f64,
    pub variance: f64,
    /// Mean of expected minus actual leaving time.
    pub mean_error: f64,
    pub within_1yr: f64,
    pub within_2yr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub leave_year: i32,
    pub cohort_size: usize,
    pub per_year: BTreeMap<i32, YearScore>,
}

/// Entities whose last activity falls in `leave_year`. A lifepath's last
/// active month is taken over the whole data, so later activity excludes it.
pub fn select_cohort(paths: &[Lifepath], leave_year: i32) -> Result<Vec<Lifepath>, ValidateError> {
    let cohort: Vec<Lifepath> = paths
        .iter()
        .filter(|p| p.last_active_month.year() == leave_year)
        .cloned()
        .collect();
    if cohort.is_empty() {
        return Err(ValidateError::EmptyCohort(leave_year));
    }
    Ok(cohort)
}

/// Per analysis year: how close expected leaving times are to the actual
/// ones (the middle of each entity's last active month). A member without an
/// expected leaving time counts as a miss.
pub fn score_cohort(cohort: &[Lifepath], leave_year: i32) -> CohortReport {
    let mut by_year: BTreeMap<i32, Vec<(Option<f64>, f64)>> = BTreeMap::new();
    for path in cohort {
        let actual = path.last_active_month.midpoint_year();
        for p in &path.points {
            by_year.entry(p.analysis_year).or_default().push((p.expected_leave, actual));
        }
    }
    let per_year = by_year
        .into_iter()
        .map(|(year, rows)| {
            let expected: Vec<f64> = rows.iter().filter_map(|r| r.0).collect();
            let errors: Vec<f64> = rows.iter().filter_map(|(e, a)| e.map(|e| e - a)).collect();
            let k = expected.len() as f64;
            let mean = expected.iter().sum::<f64>() / k;
            let variance = expected.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / k;
            let within = |years: f64| {
                rows.iter()
                    .filter(|(e, a)| e.is_some_and(|e| (e - a).abs() <= years))
                    .count() as f64
                    / rows.len() as f64
            };
            let score = YearScore {
                entities: rows.len(),
                predicted: expected.len(),
                mean_expected_leave: mean,
                variance,
                mean_error: errors.iter().sum::<f64>() / k,
                within_1yr: within(1.0),
                within_2yr: within(2.0),
            };
            (year, score)
        })
        .collect();
    CohortReport {
        leave_year,
        cohort_size: cohort.len(),
        per_year,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::Month;
    use crate::fit::SigmoidFit;
    use crate::lifepath::{LifepathPoint, Phase};
    use crate::series::CalendarFit;

    fn path(id: &str, last: Month, predictions: &[(i32, Option<f64>)]) -> Lifepath {
        let fit = CalendarFit {
            amplitude: 10.0,
            slope_per_month: 0.2,
            inflection_month: 0.0,
            saturation_status: 1.0,
            reduced_chi2: 0.0,
            converged: true,
        };
        Lifepath {
            entity_id: id.into(),
            last_active_month: last,
            points: predictions
                .iter()
                .map(|&(year, expected_leave)| LifepathPoint {
                    analysis_year: year,
                    cutoff: Month::december(year),
                    normalized: SigmoidFit::from_parameters(1.0, 1.0, 0.5),
                    fit,
                    expected_leave,
                    expected_total: 10.0,
                    status: Phase::Deceleration,
                })
                .collect(),
            gaps: vec![],
        }
    }

    #[test]
    fn cohort_membership() {
        let paths = [
            path("a", Month::new(2009, 7), &[]),
            path("b", Month::new(2011, 2), &[]),
            path("c", Month::new(2009, 1), &[]),
        ];
        let ids: Vec<_> = select_cohort(&paths, 2009).unwrap().into_iter().map(|p| p.entity_id).collect();
        assert_eq!(ids, ["a", "c"]);
        assert_eq!(select_cohort(&paths, 2005).unwrap_err(), ValidateError::EmptyCohort(2005));
    }

    #[test]
    fn exact_predictions() {
        let last = Month::new(2009, 6);
        let actual = last.midpoint_year();
        let cohort = [path("a", last, &[(2009, Some(actual))]), path("b", last, &[(2009, Some(actual))])];
        let r = score_cohort(&cohort, 2009);
        let s = &r.per_year[&2009];
        assert!(s.mean_error.abs() < 1e-12);
        assert_eq!(s.within_1yr, 1.0);
        assert_eq!(s.variance, 0.0);
        assert_eq!(r.cohort_size, 2);
    }

    #[test]
    fn thresholds_and_misses() {
        let last = Month::new(2009, 6);
        let actual = last.midpoint_year();
        let r = score_cohort(&[path("a", last, &[(2008, Some(actual - 1.5))])], 2009);
        let s = &r.per_year[&2008];
        assert_eq!((s.within_1yr, s.within_2yr), (0.0, 1.0));
        assert!((s.mean_error + 1.5).abs() < 1e-12);

        let r = score_cohort(&[path("a", last, &[(2008, None)]), path("b", last, &[(2008, Some(actual))])], 2009);
        let s = &r.per_year[&2008];
        assert_eq!((s.entities, s.predicted), (2, 1));
        assert_eq!(s.within_1yr, 0.5);
    }

    #[test]
    fn permutation_invariant() {
        let a = path("a", Month::new(2009, 2), &[(2008, Some(2008.4)), (2009, Some(2009.3))]);
        let b = path("b", Month::new(2009, 11), &[(2008, Some(2011.0)), (2009, Some(2010.2))]);
        let c = path("c", Month::new(2009, 5), &[(2009, Some(2009.9))]);
        let one = score_cohort(&[a.clone(), b.clone(), c.clone()], 2009);
        let two = score_cohort(&[c, a, b], 2009);
        for (y, s) in &one.per_year {
            let t = &two.per_year[y];
            assert!((s.mean_error - t.mean_error).abs() < 1e-12);
            assert!((s.variance - t.variance).abs() < 1e-12);
            assert_eq!((s.within_1yr, s.within_2yr), (t.within_1yr, t.within_2yr));
        }
    }
}
