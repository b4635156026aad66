//! Data from the change-in-slope model: a mean through the origin with slope
//! zero before the first changepoint, plus seeded Gaussian noise.
//!
//! Noise is drawn from `ChaCha8Rng::seed_from_u64(seed)` with
//! `rand_distr::StandardNormal`, one draw per observation in order, so a given
//! seed produces the same series on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::NoiseScale;

/// Changepoint locations and the slope increment applied at each.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeSpec {
    changepoints: Vec<f64>,
    change_slope: Vec<f64>,
}

impl SlopeSpec {
    pub fn new(changepoints: Vec<f64>, change_slope: Vec<f64>) -> Result<Self> {
        if changepoints.len() != change_slope.len() {
            return Err(Error::Shape(format!(
                "{} changepoints but {} slope changes",
                changepoints.len(),
                change_slope.len()
            )));
        }
        for (field, v) in [("changepoints", &changepoints), ("change_slope", &change_slope)] {
            if let Some(index) = v.iter().position(|c| !c.is_finite()) {
                return Err(Error::NonFinite { field, index });
            }
        }
        if changepoints.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Shape("changepoints must be nondecreasing".into()));
        }
        Ok(Self {
            changepoints,
            change_slope,
        })
    }

    pub fn changepoints(&self) -> &[f64] {
        &self.changepoints
    }

    pub fn change_slope(&self) -> &[f64] {
        &self.change_slope
    }
}

/// `f(x) = sum_j s_j max(0, x - c_j)`.
pub fn mean_function(spec: &SlopeSpec, x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&xi| {
            spec.changepoints
                .iter()
                .zip(&spec.change_slope)
                .map(|(&c, &s)| s * (xi - c).max(0.0))
                .sum()
        })
        .collect()
}

/// `y_i = f(x_i) + sd_i * eps_i`. Zero noise returns the mean exactly.
pub fn simulate(spec: &SlopeSpec, x: &[f64], sd: &NoiseScale, seed: u64) -> Result<Vec<f64>> {
    let sd: Vec<f64> = match sd {
        NoiseScale::Constant(s) => vec![*s; x.len()],
        NoiseScale::PerPoint(v) if v.len() == x.len() => v.clone(),
        NoiseScale::PerPoint(v) => {
            return Err(Error::Shape(format!(
                "sd has length {} but x has length {}",
                v.len(),
                x.len()
            )))
        }
    };
    if let Some(index) = sd.iter().position(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::InvalidNoiseScale {
            index,
            value: sd[index],
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(mean_function(spec, x)
        .into_iter()
        .zip(sd)
        .map(|(mu, s)| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            if s == 0.0 {
                mu
            } else {
                mu + s * eps
            }
        })
        .collect())
}
