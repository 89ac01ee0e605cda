//! End-to-end acceptance checks on synthetic ground truth. Runs as a plain
//! binary so that every check reports a line even when an earlier one fails.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use lifecurve::calendar::Month;
use lifecurve::dist::{collapse_dispersion, fit_segmented_powerlaw, scaling_collapse, survival, CollapseOptions};
use lifecurve::entropy::{shannon_entropy, OccurrenceVector};
use lifecurve::fit::{fit_linear, fit_sigmoid, fit_sigmoid_points, FitOptions};
use lifecurve::genmodel::{density, sample_population, to_order_counts, EntityParams, GenerativeModelParams};
use lifecurve::ingestion::{ActivitySeries, ObservationWindow};
use lifecurve::lifepath::{expanding_window_fits, trajectory_step_distance, LifepathOptions};
use lifecurve::series::NormalizedCumulative;
use lifecurve::synth::{
    deterministic_series, leaving_cohort, logistic_event_times, scaled_survival, series_from_times,
    series_to_events, two_regime_quantile_sizes, CohortSpec, PlantedCurve,
};
use lifecurve::validate::{score_cohort, select_cohort};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn logistic(a: f64, m: f64, t0: f64, t: f64) -> f64 {
    a / (1.0 + (-m * (t - t0)).exp())
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}

fn sigmoid_recovery() -> Outcome {
    let (a, m, t0) = (1.0, 20.0, 0.5);
    let t = grid(220);
    let y: Vec<f64> = t.iter().map(|&t| logistic(a, m, t0, t)).collect();
    let opts = FitOptions::default();

    let fit = fit_sigmoid_points(&t, &y, &opts).map_err(|e| e.to_string())?;
    let rel = [
        (fit.amplitude - a).abs() / a,
        (fit.slope - m).abs() / m,
        (fit.inflection - t0).abs() / t0,
    ];
    let worst = rel.iter().copied().fold(0.0, f64::max);

    let reps = 200;
    let start = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(fit_sigmoid_points(&t, &y, &opts).map_err(|e| e.to_string())?);
    }
    let per_fit_ms = start.elapsed().as_secs_f64() * 1e3 / reps as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = Normal::new(0.0, 0.01).expect("valid sigma");
    let (mut ea, mut em, mut et) = (Vec::new(), Vec::new(), Vec::new());
    let mut converged = 0;
    let trials = 1000;
    for _ in 0..trials {
        let noisy: Vec<f64> = y.iter().map(|v| v + noise.sample(&mut rng)).collect();
        let f = fit_sigmoid_points(&t, &noisy, &opts).map_err(|e| e.to_string())?;
        converged += usize::from(f.converged);
        ea.push((f.amplitude - a).abs() / a);
        em.push((f.slope - m).abs() / m);
        et.push((f.inflection - t0).abs() / t0);
    }
    let med = [median(ea), median(em), median(et)];
    let conv = converged as f64 / trials as f64;
    check(
        worst < 1e-6 && per_fit_ms < 10.0 && med.iter().all(|&e| e < 0.02) && conv >= 0.99,
        format!(
            "noiseless max rel err {worst:.2e}, {per_fit_ms:.3} ms/fit; noisy median rel err A {:.4} m {:.4} t0 {:.4}, converged {:.3}",
            med[0], med[1], med[2], conv
        ),
    )
}

fn chi2_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ln_total = Uniform::new(50f64.ln(), 5000f64.ln()).expect("valid range");
    let slope = Uniform::new(0.05, 0.5).expect("valid range");
    let start = f64::from(Month::new(2000, 1).index());
    let offset = Uniform::new(24.0, 120.0).expect("valid range");
    let end = Month::december(2012);
    let window = ObservationWindow::new(Month::new(2000, 1), end).expect("valid window");
    let opts = FitOptions::default();
    let entities = 1000;
    let mut wins = 0;
    let mut failures = 0;
    for i in 0..entities {
        let n = ln_total.sample(&mut rng).exp().round() as usize;
        let times = logistic_event_times(n, start + offset.sample(&mut rng), slope.sample(&mut rng), &mut rng);
        let series = series_from_times(&format!("c{i}"), &times, end).expect("events inside the window");
        let norm = NormalizedCumulative::from_series(&series, 100, window).map_err(|e| e.to_string())?;
        match (fit_sigmoid(&norm, &opts), fit_linear(&norm)) {
            (Ok(s), Ok(l)) => wins += usize::from(s.reduced_chi2 < l.reduced_chi2),
            _ => failures += 1,
        }
    }
    let share = wins as f64 / entities as f64;
    check(
        share >= 0.99,
        format!("sigmoid beats line in {share:.3} of {entities} entities ({failures} fit failures)"),
    )
}

fn segmented_power_law() -> Outcome {
    let sizes = two_regime_quantile_sizes(5000, 0.49, 1.38, 50.0);
    let d = survival(&sizes, 1).map_err(|e| e.to_string())?;
    let fit = fit_segmented_powerlaw(&d, 1).map_err(|e| e.to_string())?;
    let jb = fit.breakpoint.unwrap_or(0);
    let two = !fit.degenerate
        && (fit.alpha1 - 0.49).abs() <= 0.05
        && (fit.alpha2 - 1.38).abs() <= 0.10
        && (40..=62).contains(&jb);

    // Sizes at every divisor of 1000: N(J) = 1000/J exactly on the drop points.
    let single: Vec<u64> = (1..=1000u64)
        .filter(|j| 1000 % j == 0)
        .flat_map(|j| {
            let next = (j + 1..=1000).find(|k| 1000 % k == 0);
            let count = 1000 / j - next.map_or(0, |k| 1000 / k);
            std::iter::repeat_n(j, count as usize)
        })
        .collect();
    let sf = fit_segmented_powerlaw(&survival(&single, 1).map_err(|e| e.to_string())?, 1).map_err(|e| e.to_string())?;
    check(
        two && sf.degenerate,
        format!(
            "two-regime: alpha1 {:.4} alpha2 {:.4} J* {jb} degenerate {}; single law degenerate {} (alpha {:.4})",
            fit.alpha1, fit.alpha2, fit.degenerate, sf.degenerate, sf.alpha1
        ),
    )
}

fn master(u: f64) -> f64 {
    2000.0 / (1.0 + u / 3.0).powf(1.7)
}

fn scaling_collapse_check() -> Outcome {
    let start = Instant::now();
    let dists: Vec<_> = (1..=18).map(|y| scaled_survival(y, 0.52, 0.60, master)).collect();
    let r = scaling_collapse(&dists, &CollapseOptions::default()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let unscaled = collapse_dispersion(&dists, 0.0, 0.0, CollapseOptions::default().bins)
        .ok_or("raw curves do not overlap")?;
    check(
        (r.beta1 - 0.52).abs() <= 0.05 && (r.beta2 - 0.60).abs() <= 0.05 && r.dispersion < 0.1 * unscaled && secs < 5.0,
        format!(
            "beta1 {:.4} beta2 {:.4}, dispersion {:.3e} vs unscaled {:.3e}, {secs:.2} s",
            r.beta1, r.beta2, r.dispersion, unscaled
        ),
    )
}

/// Midpoint rule over a box that contains the whole support. Band edges cut
/// through cells, so the m' step is small enough to keep that error tiny.
fn density_integral(model: &GenerativeModelParams) -> f64 {
    let (t_lo, t_hi, t_n) = (model.t0a, model.t0b, 40);
    let (m_lo, m_hi, m_n) = (0.0, 10.0, 50_000);
    let (a_lo, a_hi, a_n) = (-12.0, 22.0, 240);
    let (ht, hm, ha) = (
        (t_hi - t_lo) / t_n as f64,
        (m_hi - m_lo) / m_n as f64,
        (a_hi - a_lo) / a_n as f64,
    );
    let mut total = 0.0;
    for i in 0..t_n {
        let t0 = t_lo + (i as f64 + 0.5) * ht;
        for j in 0..m_n {
            let m_prime = m_lo + (j as f64 + 0.5) * hm;
            if density(&EntityParams { t0, m_prime, a_prime: 5.0 }, model) == 0.0
                && density(&EntityParams { t0, m_prime, a_prime: 1.0 }, model) == 0.0
            {
                continue;
            }
            for k in 0..a_n {
                let a_prime = a_lo + (k as f64 + 0.5) * ha;
                total += density(&EntityParams { t0, m_prime, a_prime }, model);
            }
        }
    }
    total * ht * hm * ha
}

fn generative_model() -> Outcome {
    let model = GenerativeModelParams::default();
    let integral = density_integral(&model);

    let n = 100_000;
    let pop = sample_population(n, &model, 7);
    let mut counts = [0usize; 3];
    for p in &pop {
        let band = if p.m_prime < 6.5 {
            0
        } else if (8.9..9.1).contains(&p.m_prime) {
            1
        } else if (9.3..9.4).contains(&p.m_prime) {
            2
        } else {
            return Err(format!("sample outside every band: m' = {}", p.m_prime));
        };
        counts[band] += 1;
    }
    let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let freq_ok = freq.iter().zip([0.57, 0.03, 0.40]).all(|(f, w)| (f - w).abs() <= 0.01);

    let orders = to_order_counts(&sample_population(6065, &model, 42));
    let fit = fit_segmented_powerlaw(&survival(&orders, 1).map_err(|e| e.to_string())?, 1).map_err(|e| e.to_string())?;
    check(
        (integral - 1.0).abs() <= 1e-3 && freq_ok && !fit.degenerate,
        format!(
            "integral {integral:.6}, band frequencies ({:.4}, {:.4}, {:.4}); 6065-entity sample alpha1 {:.3} alpha2 {:.3} J* {:?} degenerate {}",
            freq[0], freq[1], freq[2], fit.alpha1, fit.alpha2, fit.breakpoint, fit.degenerate
        ),
    )
}

fn prediction_harness() -> Outcome {
    let leave_year = 2009;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cohort = leaving_cohort(&CohortSpec::new(500, leave_year), &mut rng);
    let epoch = cohort.iter().map(|e| e.series.start_month).min().ok_or("empty cohort")?;
    let years: Vec<i32> = (leave_year - 5..=leave_year).collect();
    let opts = LifepathOptions::default();
    let paths: Vec<_> = cohort
        .iter()
        .map(|e| expanding_window_fits(&e.series, epoch, &years, &opts))
        .collect();
    let members = select_cohort(&paths, leave_year).map_err(|e| e.to_string())?;
    let report = score_cohort(&members, leave_year);
    let at_y = report.per_year.get(&leave_year).ok_or("no fits at the leave year")?;
    let nested = report.per_year.values().all(|s| s.within_2yr >= s.within_1yr);
    let last3: Vec<f64> = report.per_year.values().rev().take(3).rev().map(|s| s.mean_error.abs()).collect();
    let monotone = last3.len() == 3 && last3.windows(2).all(|w| w[1] <= w[0]);
    check(
        members.len() == 500 && at_y.within_1yr >= 0.80 && nested && monotone,
        format!(
            "cohort {}, within_1yr at {leave_year} {:.3}, within_2yr >= within_1yr every year {nested}, |mean_error| over last 3 years {:?}",
            members.len(),
            at_y.within_1yr,
            last3.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>()
        ),
    )
}

fn stabilization() -> Outcome {
    let opts = LifepathOptions::default();
    let epoch = Month::new(2000, 1);
    let years: Vec<i32> = (2010..=2014).collect();
    let mut worst_step: f64 = 0.0;
    let mut worst_leave: f64 = 0.0;
    let cases = [(40u64, 0.4, 2004), (300, 0.2, 2005), (5_000, 0.2, 2003), (100_000, 0.3, 2005), (20, 0.8, 2007)];
    for (i, &(total, slope, year)) in cases.iter().enumerate() {
        let curve = PlantedCurve {
            total,
            slope_per_month: slope,
            inflection_month: f64::from(Month::new(year, 6).index()),
        };
        let series = deterministic_series(&format!("f{i}"), curve, Month::december(2014)).ok_or("empty series")?;
        if series.last_active_month() >= Month::december(2009) {
            return Err(format!("entity f{i} is still active in 2010"));
        }
        let path = expanding_window_fits(&series, epoch, &years, &opts);
        if path.points.len() != years.len() {
            return Err(format!("entity f{i}: {} of {} refits", path.points.len(), years.len()));
        }
        for w in path.points.windows(2) {
            worst_step = worst_step.max(trajectory_step_distance(&w[0], &w[1]));
            let (a, b) = (w[0].expected_leave, w[1].expected_leave);
            let (Some(a), Some(b)) = (a, b) else {
                return Err(format!("entity f{i}: missing expected leaving time"));
            };
            worst_leave = worst_leave.max((a - b).abs());
        }
    }
    check(
        worst_step < 1e-3 && worst_leave <= 0.1,
        format!("largest step {worst_step:.2e}, largest expected-leave change {worst_leave:.2e} years"),
    )
}

fn entropy_checks() -> Outcome {
    let h = |c: &[f64]| OccurrenceVector::from_counts(c).map(|v| shannon_entropy(&v)).map_err(|e| e.to_string());
    let mut worst: f64 = 0.0;
    for n in [2usize, 4, 16] {
        worst = worst.max((h(&vec![7.0; n])? - (n as f64).ln()).abs());
    }
    let single = h(&[0.0, 12.0, 0.0])?;
    let base = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
    let scaled: Vec<f64> = base.iter().map(|c| c * 1e3).collect();
    let drift = (h(&base)? - h(&scaled)?).abs();
    check(
        worst <= 1e-12 && single == 0.0 && drift <= 1e-12,
        format!("uniform error {worst:.1e}, single state {single}, scale drift {drift:.1e}"),
    )
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let code = lifecurve::cli::run(std::iter::once("lifecurve").chain(args.iter().copied()));
    if code == 0 {
        Ok(())
    } else {
        Err(format!("`lifecurve {}` exited with {code}", args.join(" ")))
    }
}

fn read_dir(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.map_err(|e| e.to_string())?;
            let bytes = fs::read(e.path()).map_err(|e| e.to_string())?;
            Ok((e.file_name().to_string_lossy().into_owned(), bytes))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn write_events(path: &Path, series: &[ActivitySeries]) -> Result<(), String> {
    let mut f = fs::File::create(path).map_err(|e| e.to_string())?;
    writeln!(f, "entity_id,timestamp").map_err(|e| e.to_string())?;
    for s in series {
        for ev in series_to_events(s) {
            writeln!(f, "{},{}", ev.entity_id, ev.timestamp).map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = |name: &str| tmp.path().join(name);
    let s = |p: &Path| p.to_string_lossy().into_owned();

    run_cli(&["sample", "--seed", "42", "--out", &s(&dir("s1"))])?;
    run_cli(&["sample", "--seed", "42", "--out", &s(&dir("s2"))])?;
    let same_sample = read_dir(&dir("s1"))? == read_dir(&dir("s2"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cohort = leaving_cohort(&CohortSpec::new(120, 2010), &mut rng);
    let input = dir("events.csv");
    write_events(&input, &cohort.into_iter().map(|e| e.series).collect::<Vec<_>>())?;
    run_cli(&["lifepath", "--input", &s(&input), "--jobs", "1", "--out", &s(&dir("l1"))])?;
    run_cli(&["lifepath", "--input", &s(&input), "--jobs", "8", "--out", &s(&dir("l8"))])?;
    let l1 = read_dir(&dir("l1"))?;
    let same_lifepath = l1 == read_dir(&dir("l8"))? && !l1.is_empty();
    check(
        same_sample && same_lifepath,
        format!("sample --seed 42 twice identical {same_sample}; lifepath --jobs 1 vs 8 identical {same_lifepath}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("sigmoid recovery", sigmoid_recovery),
        ("chi-square dominance", chi2_dominance),
        ("segmented power law", segmented_power_law),
        ("scaling collapse", scaling_collapse_check),
        ("generative model", generative_model),
        ("prediction harness", prediction_harness),
        ("stabilization", stabilization),
        ("entropy", entropy_checks),
        ("determinism", determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({secs:.2} s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({secs:.2} s) {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
