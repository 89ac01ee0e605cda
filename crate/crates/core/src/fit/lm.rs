//! Bounded Levenberg-Marquardt for the three-parameter logistic.
//!
//! Parameters are optimized as `(A, ln m, t0)`. The box on each is enforced
//! by projection, with variables that
//! sit on a bound and are pushed outward by the gradient held fixed for the
//! step (a simple active-set rule).

use super::logistic;

pub(crate) const N_PARAMS: usize = 3;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Bounds {
    pub lower: [f64; N_PARAMS],
    pub upper: [f64; N_PARAMS],
}

impl Bounds {
    fn clamp(&self, p: &mut [f64; N_PARAMS]) {
        for i in 0..N_PARAMS {
            p[i] = p[i].clamp(self.lower[i], self.upper[i]);
        }
    }

    fn pinned(&self, p: &[f64; N_PARAMS], g: &[f64; N_PARAMS], i: usize) -> bool {
        (p[i] >= self.upper[i] && g[i] > 0.0) || (p[i] <= self.lower[i] && g[i] < 0.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub step_tolerance: f64,
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Outcome {
    pub params: [f64; N_PARAMS],
    pub rss: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// `y - a * logistic(x)`, written as `(y - a) + a * logistic(-x)` on the
/// upper branch so residuals near the asymptote keep their precision.
fn residual(y: f64, a: f64, x: f64) -> f64 {
    if x > 0.0 {
        (y - a) + a * logistic(-x)
    } else {
        y - a * logistic(x)
    }
}

pub(crate) fn rss(t: &[f64], y: &[f64], p: &[f64; N_PARAMS]) -> f64 {
    let (a, m, t0) = (p[0], p[1].exp(), p[2]);
    t.iter()
        .zip(y)
        .map(|(&tk, &yk)| {
            let r = residual(yk, a, m * (tk - t0));
            r * r
        })
        .sum()
}

/// `J^T J`, `J^T r` and the residual sum of squares at `p`.
fn normal_equations(
    t: &[f64],
    y: &[f64],
    p: &[f64; N_PARAMS],
) -> ([[f64; N_PARAMS]; N_PARAMS], [f64; N_PARAMS], f64) {
    let (a, m, t0) = (p[0], p[1].exp(), p[2]);
    let mut jtj = [[0.0; N_PARAMS]; N_PARAMS];
    let mut jtr = [0.0; N_PARAMS];
    let mut rss = 0.0;
    for (&tk, &yk) in t.iter().zip(y) {
        let x = m * (tk - t0);
        let s = logistic(x);
        let d = a * s * logistic(-x);
        let row = [s, d * x, -d * m];
        let r = residual(yk, a, x);
        rss += r * r;
        for i in 0..N_PARAMS {
            jtr[i] += row[i] * r;
            for j in 0..=i {
                jtj[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..N_PARAMS {
        for j in 0..i {
            jtj[j][i] = jtj[i][j];
        }
    }
    (jtj, jtr, rss)
}

/// Solves the free-variable subsystem by Gaussian elimination with partial
/// pivoting. Returns `None` if it is numerically singular.
fn solve_free(
    a: &[[f64; N_PARAMS]; N_PARAMS],
    b: &[f64; N_PARAMS],
    free: &[bool; N_PARAMS],
) -> Option<[f64; N_PARAMS]> {
    let idx: Vec<usize> = (0..N_PARAMS).filter(|&i| free[i]).collect();
    let n = idx.len();
    // Symmetric diagonal scaling: Jacobian columns can differ by many orders
    // of magnitude (steep fits), which would otherwise swamp elimination.
    let scale: Vec<f64> = idx
        .iter()
        .map(|&i| if a[i][i] > 0.0 { 1.0 / a[i][i].sqrt() } else { 1.0 })
        .collect();
    let mut mat = vec![vec![0.0; n + 1]; n];
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            mat[r][c] = a[i][j] * scale[r] * scale[c];
        }
        mat[r][n] = b[i] * scale[r];
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| mat[x][col].abs().total_cmp(&mat[y][col].abs()))?;
        if mat[piv][col].abs() < 1e-300 || !mat[piv][col].is_finite() {
            return None;
        }
        mat.swap(col, piv);
        for row in col + 1..n {
            let factor = mat[row][col] / mat[col][col];
            for k in col..=n {
                mat[row][k] -= factor * mat[col][k];
            }
        }
    }
    let mut sol = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| mat[row][k] * sol[k]).sum();
        sol[row] = (mat[row][n] - tail) / mat[row][row];
    }
    let mut out = [0.0; N_PARAMS];
    for (r, &i) in idx.iter().enumerate() {
        out[i] = sol[r] * scale[r];
    }
    out.iter().all(|v| v.is_finite()).then_some(out)
}

fn norm(v: &[f64; N_PARAMS]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn minimize(
    t: &[f64],
    y: &[f64],
    start: [f64; N_PARAMS],
    bounds: &Bounds,
    settings: &Settings,
) -> Outcome {
    let mut p = start;
    bounds.clamp(&mut p);
    let (mut jtj, mut jtr, mut current) = normal_equations(t, y, &p);
    let mut lambda = 1e-3;
    let mut iterations = 0;

    while iterations < settings.max_iterations {
        let free: [bool; N_PARAMS] = std::array::from_fn(|i| !bounds.pinned(&p, &jtr, i));
        // Gradient measured as the cosine between the residual and each free
        // Jacobian column, which is invariant to the scale of the data.
        let residual_norm = current.sqrt();
        let projected_grad = (0..N_PARAMS)
            .filter(|&i| free[i])
            .map(|i| {
                let col = jtj[i][i].sqrt();
                if col > 0.0 && residual_norm > 0.0 {
                    jtr[i].abs() / (col * residual_norm)
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        let exact = current <= t.len() as f64 * f64::EPSILON * f64::EPSILON;
        if exact || projected_grad < settings.gradient_tolerance || !free.iter().any(|&f| f) {
            return Outcome {
                params: p,
                rss: current,
                converged: true,
                iterations,
            };
        }

        iterations += 1;
        let mut damped = jtj;
        for i in 0..N_PARAMS {
            damped[i][i] += lambda * jtj[i][i].max(1e-12);
        }
        let Some(delta) = solve_free(&damped, &jtr, &free) else {
            lambda *= 10.0;
            if lambda > 1e16 {
                break;
            }
            continue;
        };

        let mut trial = p;
        for i in 0..N_PARAMS {
            trial[i] += delta[i];
        }
        bounds.clamp(&mut trial);
        let step: [f64; N_PARAMS] = std::array::from_fn(|i| trial[i] - p[i]);
        if norm(&step) <= settings.step_tolerance * (norm(&p) + settings.step_tolerance) {
            return Outcome {
                params: p,
                rss: current,
                converged: true,
                iterations,
            };
        }

        let trial_rss = rss(t, y, &trial);
        if trial_rss.is_finite() && trial_rss < current {
            p = trial;
            (jtj, jtr, current) = normal_equations(t, y, &p);
            lambda = (lambda / 10.0).max(1e-15);
        } else {
            lambda *= 10.0;
            if lambda > 1e16 {
                break;
            }
        }
    }

    Outcome {
        params: p,
        rss: current,
        converged: false,
        iterations,
    }
}
