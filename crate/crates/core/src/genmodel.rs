//! Factorized probability model over (start time, ln slope, ln amplitude)
//! of a population of entities, with density evaluation and sampling.
//!
//! `p(t0, m', A') = p(A' | m', t0) p(m' | t0) p(t0)`: start times are
//! uniform, ln slopes fall in one of three bands chosen with fixed weights,
//! and ln amplitudes are Gaussian with band-dependent moments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model parameters: {0}")]
    Invalid(String),
    #[error("cannot read model parameters: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerativeModelParams {
    pub t0a: f64,
    pub t0b: f64,
    pub regime_weights: [f64; 3],
    /// Upper edge of the first slope band; its lower edge is [`m_prime_floor`].
    pub band1_upper: f64,
    pub band2: [f64; 2],
    pub band3: [f64; 2],
    pub n0: f64,
    pub n1: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub b0: f64,
    pub b1: f64,
    pub mu2: f64,
    pub sigma2: f64,
}

impl Default for GenerativeModelParams {
    fn default() -> Self {
        GenerativeModelParams {
            t0a: 0.32,
            t0b: 1.0,
            regime_weights: [0.57, 0.03, 0.40],
            band1_upper: 6.5,
            band2: [8.9, 9.1],
            band3: [9.3, 9.4],
            n0: 0.5,
            n1: 1.5,
            a0: 0.13,
            a1: -2.12,
            a2: 9.86,
            b0: -0.20,
            b1: 1.93,
            mu2: 1.0,
            sigma2: 1.5f64.ln(),
        }
    }
}

impl GenerativeModelParams {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let p: Self = serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::Invalid(msg));
        let all = [
            self.t0a, self.t0b, self.band1_upper, self.n0, self.n1, self.a0, self.a1, self.a2, self.b0, self.b1,
            self.mu2, self.sigma2,
        ];
        if all.iter().chain(&self.regime_weights).chain(&self.band2).chain(&self.band3).any(|v| !v.is_finite()) {
            return bad("all parameters must be finite".into());
        }
        if self.regime_weights.iter().any(|&w| w < 0.0) {
            return bad("regime weights must be non-negative".into());
        }
        let total: f64 = self.regime_weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("regime weights sum to {total}, not 1"));
        }
        if !(self.t0a < self.t0b) {
            return bad(format!("t0a ({}) must be below t0b ({})", self.t0a, self.t0b));
        }
        // The floor is even in t0 and increasing in |t0|, so its extremes
        // over [t0a, t0b] are at the ends or at zero.
        let ends = [self.floor(self.t0a), self.floor(self.t0b)];
        let floor_max = ends[0].max(ends[1]);
        let floor_min = if self.t0a <= 0.0 && self.t0b >= 0.0 {
            self.floor(0.0)
        } else {
            ends[0].min(ends[1])
        };
        if !(floor_max < self.band1_upper) {
            return bad(format!("first band is empty: floor {floor_max} >= {}", self.band1_upper));
        }
        for (name, b) in [("band2", self.band2), ("band3", self.band3)] {
            if !(b[0] < b[1]) {
                return bad(format!("{name} lower edge must be below its upper edge"));
            }
        }
        // sigma1 is linear in m', so positivity at both band edges suffices.
        let s_lo = self.sigma1(floor_min);
        let s_hi = self.sigma1(self.band1_upper);
        if !(s_lo > 0.0 && s_hi > 0.0) {
            return bad(format!("sigma1 must be positive over the first band ({s_lo}, {s_hi})"));
        }
        if !(self.sigma2 > 0.0) {
            return bad("sigma2 must be positive".into());
        }
        Ok(())
    }

    fn floor(&self, t0: f64) -> f64 {
        self.n0 + (self.n1 * t0.powi(4)).exp()
    }

    pub fn mu1(&self, m_prime: f64) -> f64 {
        self.a0 * m_prime * m_prime + self.a1 * m_prime + self.a2
    }

    pub fn sigma1(&self, m_prime: f64) -> f64 {
        self.b0 * m_prime + self.b1
    }

    /// `(lower, upper)` of band `k` (0, 1 or 2) for start time `t0`.
    pub fn band(&self, k: usize, t0: f64) -> (f64, f64) {
        match k {
            0 => (self.floor(t0), self.band1_upper),
            1 => (self.band2[0], self.band2[1]),
            2 => (self.band3[0], self.band3[1]),
            _ => panic!("band index {k} out of range"),
        }
    }

    /// Band containing `m_prime` (open intervals), if any.
    pub fn band_of(&self, m_prime: f64, t0: f64) -> Option<usize> {
        (0..3).find(|&k| {
            let (lo, hi) = self.band(k, t0);
            m_prime > lo && m_prime < hi
        })
    }

    /// Mean and standard deviation of `A'` given `m'` in band `k`.
    pub fn amplitude_moments(&self, k: usize, m_prime: f64) -> (f64, f64) {
        if k == 0 {
            (self.mu1(m_prime), self.sigma1(m_prime))
        } else {
            (self.mu2, self.sigma2)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntityParams {
    pub t0: f64,
    pub m_prime: f64,
    pub a_prime: f64,
}

/// Lower edge of the first ln-slope band, `n0 + exp(n1 t0^4)`.
pub fn m_prime_floor(t0: f64, model: &GenerativeModelParams) -> f64 {
    model.floor(t0)
}

fn gaussian(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sigma)
}

/// Joint density; zero outside the support, including between the bands.
pub fn density(p: &EntityParams, model: &GenerativeModelParams) -> f64 {
    if !(p.t0 >= model.t0a && p.t0 <= model.t0b) {
        return 0.0;
    }
    let p_t0 = 1.0 / (model.t0b - model.t0a);
    let Some(k) = model.band_of(p.m_prime, p.t0) else {
        return 0.0;
    };
    let (lo, hi) = model.band(k, p.t0);
    let p_m = model.regime_weights[k] / (hi - lo);
    let (mu, sigma) = model.amplitude_moments(k, p.m_prime);
    gaussian(p.a_prime, mu, sigma) * p_m * p_t0
}

/// Independent draws from the model. In the first band `A'` is redrawn
/// until non-negative.
pub fn sample_population(n: usize, model: &GenerativeModelParams, seed: u64) -> Vec<EntityParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(n, model, &mut rng)
}

pub fn sample_with<R: Rng + ?Sized>(n: usize, model: &GenerativeModelParams, rng: &mut R) -> Vec<EntityParams> {
    let t0_dist = Uniform::new_inclusive(model.t0a, model.t0b).expect("validated range");
    let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
    let w = model.regime_weights;
    (0..n)
        .map(|_| {
            let t0 = t0_dist.sample(rng);
            let u = unit.sample(rng);
            let k = if u < w[0] {
                0
            } else if u < w[0] + w[1] {
                1
            } else {
                2
            };
            let (lo, hi) = model.band(k, t0);
            let m_prime = lo + (hi - lo) * unit.sample(rng);
            let (mu, sigma) = model.amplitude_moments(k, m_prime);
            let normal = Normal::new(mu, sigma).expect("validated sigma");
            let mut a_prime = normal.sample(rng);
            while k == 0 && a_prime < 0.0 {
                a_prime = normal.sample(rng);
            }
            EntityParams { t0, m_prime, a_prime }
        })
        .collect()
}

/// Total activity of each entity, `max(1, round(exp(A')))`.
pub fn to_order_counts(params: &[EntityParams]) -> Vec<u64> {
    params
        .iter()
        .map(|p| (p.a_prime.exp().round() as u64).max(1))
        .collect()
}
