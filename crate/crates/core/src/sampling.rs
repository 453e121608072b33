// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Seeded vertex sampling for the binomial disc model, its Poissonization and
//! the band process.
//!
//! Every point draws its coordinates from its own ChaCha stream keyed by
//! `(master seed, point index)`, so the output does not depend on how the
//! work is split across threads. Stream 0 is reserved for the point count.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{acosh_1p, ln_cosh, ln_sinh, BandPoint, ModelParams, PolarPoint};

/// Point counts above this are rejected rather than allocated.
pub const MAX_POINTS: u64 = 1 << 31;

/// Above this value of `alpha * R` the radial law is evaluated in log-space.
const LOG_SPACE_EXPONENT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    /// Exactly `round(n)` i.i.d. points on the disc.
    Binomial,
    /// A Poisson number of points with mean `n`, then i.i.d. on the disc.
    Poisson,
    /// The band process with intensity `beta e^{-alpha y}` on `(-I, I] x [0, y_max]`.
    Band { y_max: f64 },
}

impl SampleMode {
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if let SampleMode::Band { y_max } = *self {
            if !(y_max > 0.0 && y_max <= params.radius()) {
                return Err(Error::domain(format!(
                    "band cutoff must lie in (0, R = {}], got {y_max}",
                    params.radius()
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for SampleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleMode::Binomial => f.write_str("binomial"),
            SampleMode::Poisson => f.write_str("poisson"),
            SampleMode::Band { y_max } => write!(f, "band:{y_max}"),
        }
    }
}

impl FromStr for SampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binomial" => Ok(SampleMode::Binomial),
            "poisson" => Ok(SampleMode::Poisson),
            _ => {
                let y = s
                    .strip_prefix("band:")
                    .and_then(|y| y.parse::<f64>().ok())
                    .ok_or_else(|| Error::domain(format!("unknown sample mode {s:?}")))?;
                Ok(SampleMode::Band { y_max: y })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    fn base_rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

fn stream_rng(base: &ChaCha8Rng, stream: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(stream);
    rng
}

/// Sampled vertex locations.
#[derive(Debug, Clone, PartialEq)]
pub enum PointSet {
    Disc(Vec<PolarPoint>),
    Band(Vec<BandPoint>),
}

impl PointSet {
    pub fn len(&self) -> usize {
        match self {
            PointSet::Disc(p) => p.len(),
            PointSet::Band(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `ln(cosh z - 1)` for `z > 0`.
fn ln_cosh_m1(z: f64) -> f64 {
    if z < LOG_SPACE_EXPONENT {
        let s = (0.5 * z).sinh();
        (2.0 * s * s).ln()
    } else {
        let lc = ln_cosh(z);
        lc + (-(-lc).exp()).ln_1p()
    }
}

/// Inverse CDF of the radial density `alpha sinh(alpha r) / (cosh(alpha R) - 1)`.
pub fn sample_radius(u: f64, alpha: f64, radius: f64) -> f64 {
    if u <= 0.0 || radius <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return radius;
    }
    let z = alpha * radius;
    let r = if z < LOG_SPACE_EXPONENT {
        let s = (0.5 * z).sinh();
        acosh_1p(u * 2.0 * s * s) / alpha
    } else {
        let ln_v = u.ln() + ln_cosh_m1(z);
        if ln_v > 8.0 * std::f64::consts::LN_10 {
            // arcosh(1 + v) = ln(2x) + ln((1 + sqrt(1 - x^-2)) / 2) with x = 1 + v
            let ln_x = ln_v + (-ln_v).exp().ln_1p();
            (std::f64::consts::LN_2
                + ln_x
                + (0.5 * (1.0 + (1.0 - (-2.0 * ln_x).exp()).sqrt())).ln())
                / alpha
        } else {
            acosh_1p(ln_v.exp()) / alpha
        }
    };
    r.min(radius)
}

/// Expected fraction of points inside `D_r`: `(cosh(alpha r) - 1) / (cosh(alpha R) - 1)`.
pub fn kappa_disc(r: f64, alpha: f64, radius: f64) -> Result<f64> {
    if !(0.0..=radius).contains(&r) {
        return Err(Error::domain(format!("radius {r} outside [0, {radius}]")));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    if radius == 0.0 {
        return Ok(1.0);
    }
    let z = alpha * radius;
    if z < LOG_SPACE_EXPONENT {
        let num = (0.5 * alpha * r).sinh();
        let den = (0.5 * z).sinh();
        Ok((num / den) * (num / den))
    } else {
        let ln_num = std::f64::consts::LN_2 + 2.0 * ln_sinh(0.5 * alpha * r);
        Ok((ln_num - ln_cosh_m1(z)).exp().min(1.0))
    }
}

/// Expected number of band points below height `y_max`:
/// `beta * 2I * (1 - e^{-alpha y_max}) / alpha`.
pub fn band_expected_count(params: &ModelParams, y_max: f64) -> f64 {
    let alpha = params.alpha();
    params.beta() * 2.0 * params.half_width() * (-(-alpha * y_max).exp_m1()) / alpha
}

fn checked_count(count: f64) -> Result<usize> {
    if !(count.is_finite() && count >= 0.0) || count > MAX_POINTS as f64 {
        return Err(Error::Resource {
            count: if count.is_finite() {
                count as u64
            } else {
                u64::MAX
            },
        });
    }
    Ok(count as usize)
}

fn poisson_count(base: &ChaCha8Rng, mean: f64) -> Result<usize> {
    if mean <= 0.0 {
        return Ok(0);
    }
    checked_count(mean + 10.0 * mean.sqrt())?;
    let mut rng = stream_rng(base, 0);
    let dist = Poisson::new(mean).map_err(|e| Error::domain(format!("Poisson({mean}): {e}")))?;
    checked_count(dist.sample(&mut rng))
}

/// Uniform angle in `(-pi, pi]`.
fn uniform_angle<R: Rng>(rng: &mut R) -> f64 {
    PI - 2.0 * PI * rng.random::<f64>()
}

fn disc_points(base: &ChaCha8Rng, count: usize, params: &ModelParams) -> Vec<PolarPoint> {
    let (alpha, radius) = (params.alpha(), params.radius());
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(base, i + 1);
            let theta = uniform_angle(&mut rng);
            let r = sample_radius(rng.random::<f64>(), alpha, radius);
            PolarPoint { r, theta }
        })
        .collect()
}

fn band_points(
    base: &ChaCha8Rng,
    count: usize,
    params: &ModelParams,
    y_max: f64,
) -> Vec<BandPoint> {
    let alpha = params.alpha();
    let half = params.half_width();
    let mass = -(-alpha * y_max).exp_m1();
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(base, i + 1);
            let x = half - 2.0 * half * rng.random::<f64>();
            let u: f64 = rng.random();
            let y = (-(-(u * mass)).ln_1p() / alpha).min(y_max);
            BandPoint { x, y }
        })
        .collect()
}

/// Samples the vertex set of the requested model.
pub fn sample_points(params: &ModelParams, mode: SampleMode, seed: Seed) -> Result<PointSet> {
    mode.validate(params)?;
    let base = seed.base_rng();
    match mode {
        SampleMode::Binomial => {
            let count = checked_count(params.n().round())?;
            Ok(PointSet::Disc(disc_points(&base, count, params)))
        }
        SampleMode::Poisson => {
            let count = poisson_count(&base, params.n())?;
            Ok(PointSet::Disc(disc_points(&base, count, params)))
        }
        SampleMode::Band { y_max } => {
            let count = poisson_count(&base, band_expected_count(params, y_max))?;
            Ok(PointSet::Band(band_points(&base, count, params, y_max)))
        }
    }
}

/// Drops the points inside `D_{delta R}`, keeping those with `r > delta R` in order.
///
/// Panics unless `0 < delta < 1`.
pub fn truncate_inner(points: &[PolarPoint], delta: f64, radius: f64) -> Vec<PolarPoint> {
    assert!(
        delta > 0.0 && delta < 1.0,
        "delta must lie in (0, 1), got {delta}"
    );
    let cut = delta * radius;
    points.iter().copied().filter(|p| p.r > cut).collect()
}
