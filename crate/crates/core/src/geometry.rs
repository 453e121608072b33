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

//! Hyperbolic primitives on the disc `D_R` and on the band `(-I, I] x [0, R]`.
//!
//! Points of the disc are stored in polar form `(r, theta)` with `theta`
//! normalized into `(-pi, pi]`. The band is the image of the disc under the
//! projection `x = theta * e^{R/2} / 2`, `y = R - r`, with half-width
//! `I = (pi / 2) * e^{R/2}`.

use std::f64::consts::{FRAC_PI_2, LN_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this radius `cosh`/`sinh` products are combined in log-space.
const LOG_SPACE_RADIUS: f64 = 30.0;

/// Parameters `(alpha, nu, n)` of the model together with the derived disc
/// radius `R = 2 ln(n / nu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    alpha: f64,
    nu: f64,
    n: f64,
    radius: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, nu: f64, n: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(n >= 1.0 && n.is_finite()) {
            return Err(Error::domain(format!("n must be at least 1, got {n}")));
        }
        let radius = compute_radius(n, nu)?;
        Ok(ModelParams {
            alpha,
            nu,
            n,
            radius,
        })
    }

    /// Builds parameters from an explicit radius, which must agree with
    /// `2 ln(n / nu)` to a relative tolerance of `1e-12`.
    pub fn with_radius(alpha: f64, nu: f64, n: f64, radius: f64) -> Result<Self> {
        let params = Self::new(alpha, nu, n)?;
        let tol = 1e-12 * params.radius.abs().max(1.0);
        if (params.radius - radius).abs() > tol {
            return Err(Error::domain(format!(
                "radius {radius} is inconsistent with n = {n}, nu = {nu} (expected {})",
                params.radius
            )));
        }
        Ok(params)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    /// Disc radius `R`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Band half-width `I = (pi / 2) e^{R/2}`.
    pub fn half_width(&self) -> f64 {
        band_half_width(self.radius)
    }

    /// Band intensity prefactor `beta = 2 nu alpha / pi`.
    pub fn beta(&self) -> f64 {
        2.0 * self.nu * self.alpha / PI
    }
}

/// A point of the disc in polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

impl PolarPoint {
    /// Creates a point, normalizing the angle into `(-pi, pi]`.
    pub fn new(r: f64, theta: f64) -> Self {
        PolarPoint {
            r,
            theta: normalize_angle(theta),
        }
    }

    /// Defect radius `R - r`.
    pub fn defect(&self, radius: f64) -> f64 {
        radius - self.r
    }
}

/// A point of the band: horizontal coordinate `x` and defect radius `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub x: f64,
    pub y: f64,
}

/// Maps an angle into `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let t = theta.rem_euclid(TAU);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

/// `R = 2 ln(n / nu)`.
pub fn compute_radius(n: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::domain(format!("nu must be positive, got {nu}")));
    }
    if !(n > 0.0 && n.is_finite()) || n < nu {
        return Err(Error::domain(format!(
            "need n >= nu > 0 for a nonnegative radius, got n = {n}, nu = {nu}"
        )));
    }
    Ok(2.0 * (n / nu).ln())
}

pub fn band_half_width(radius: f64) -> f64 {
    FRAC_PI_2 * (radius / 2.0).exp()
}

/// `ln cosh(z)` without overflow.
pub(crate) fn ln_cosh(z: f64) -> f64 {
    let z = z.abs();
    if z < LOG_SPACE_RADIUS {
        z.cosh().ln()
    } else {
        z + (-2.0 * z).exp().ln_1p() - LN_2
    }
}

/// `ln sinh(z)` for `z > 0` without overflow.
pub(crate) fn ln_sinh(z: f64) -> f64 {
    if z < LOG_SPACE_RADIUS {
        z.sinh().ln()
    } else {
        z + (-(-2.0 * z).exp()).ln_1p() - LN_2
    }
}

/// `arcosh(1 + v)` for `v >= 0`, accurate for small `v`.
pub(crate) fn acosh_1p(v: f64) -> f64 {
    if v > 1e8 {
        let x = 1.0 + v;
        (2.0 * x).ln() + (0.5 * (1.0 + (1.0 - x.powi(-2)).sqrt())).ln()
    } else {
        (v + (v * (2.0 + v)).sqrt()).ln_1p()
    }
}

/// `|theta1 - theta2|` measured on the circle, in `[0, pi]`.
pub fn relative_angle(theta1: f64, theta2: f64) -> f64 {
    let d = (theta1 - theta2).abs();
    d.min(TAU - d)
}

/// `cosh` of the hyperbolic distance between two points.
///
/// Uses `cosh d = cosh(r - r') + 2 sin^2(dtheta / 2) sinh r sinh r'`, which is
/// algebraically the law of cosines but free of cancellation for nearby points.
/// Both graph builders decide adjacency by comparing this value to `cosh R`.
pub fn cosh_distance(p: &PolarPoint, q: &PolarPoint) -> f64 {
    let half = 0.5 * relative_angle(p.theta, q.theta);
    let s = half.sin();
    (p.r - q.r).abs().cosh() + 2.0 * s * s * (p.r.sinh() * q.r.sinh())
}

pub fn hyperbolic_distance(p: &PolarPoint, q: &PolarPoint) -> f64 {
    if p.r.max(q.r) < 300.0 {
        return cosh_distance(p, q).max(1.0).acosh();
    }
    // ln cosh d as a log-sum of the two nonnegative terms
    let s = (0.5 * relative_angle(p.theta, q.theta)).sin();
    let a = ln_cosh(p.r - q.r);
    if s == 0.0 || p.r == 0.0 || q.r == 0.0 {
        return (p.r - q.r).abs();
    }
    let b = LN_2 + 2.0 * s.ln() + ln_sinh(p.r) + ln_sinh(q.r);
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    let ln_c = hi + (lo - hi).exp().ln_1p();
    ln_c + LN_2 + (0.5 * (1.0 + (1.0 - (-2.0 * ln_c).exp()).sqrt())).ln()
}

/// Points at radii `r1`, `r2` are within distance `R` exactly when their
/// relative angle is at most this critical angle.
///
/// Evaluated through the half-angle form of the law of cosines,
/// `sin^2(theta / 2) = (cosh R - cosh(r1 - r2)) / (2 sinh r1 sinh r2)`,
/// clamped into `[0, 1]` before the inverse sine. Fails when `r1 + r2 <= R`,
/// where every angle is within distance `R`.
pub fn theta_r(r1: f64, r2: f64, radius: f64) -> Result<f64> {
    if !(r1 > 0.0 && r2 > 0.0 && r1 <= radius && r2 <= radius) {
        return Err(Error::domain(format!(
            "radii must lie in (0, R], got r1 = {r1}, r2 = {r2}, R = {radius}"
        )));
    }
    if r1 + r2 <= radius {
        return Err(Error::domain(format!(
            "r1 + r2 = {} <= R = {radius}: every relative angle is within distance R",
            r1 + r2
        )));
    }
    let sin2 = if radius > LOG_SPACE_RADIUS {
        let lc_r = ln_cosh(radius);
        let gap = lc_r + (-(ln_cosh(r1 - r2) - lc_r).exp()).ln_1p();
        (gap - LN_2 - ln_sinh(r1) - ln_sinh(r2)).exp()
    } else {
        (radius.cosh() - (r1 - r2).cosh()) / (2.0 * r1.sinh() * r2.sinh())
    };
    Ok(half_angle_from_sin2(sin2))
}

/// `2 asin(sqrt(s))` with `s` clamped into `[0, 1]`.
pub(crate) fn half_angle_from_sin2(sin2: f64) -> f64 {
    2.0 * sin2.clamp(0.0, 1.0).sqrt().asin()
}

/// `arccos` with its argument clamped into `[-1, 1]`.
pub fn clamped_acos(c: f64) -> f64 {
    c.clamp(-1.0, 1.0).acos()
}

/// The approximation `2 e^{-R/2} e^{(y1 + y2)/2}` of the critical angle.
pub fn t_r(y1: f64, y2: f64, radius: f64) -> f64 {
    2.0 * (0.5 * (y1 + y2 - radius)).exp()
}

/// Projects a disc point onto the band.
pub fn phi_project(p: &PolarPoint, radius: f64) -> BandPoint {
    BandPoint {
        x: 0.5 * p.theta * (radius / 2.0).exp(),
        y: radius - p.r,
    }
}

/// Inverse of [`phi_project`].
pub fn phi_unproject(b: &BandPoint, radius: f64) -> PolarPoint {
    PolarPoint {
        r: radius - b.y,
        theta: normalize_angle(2.0 * b.x * (-radius / 2.0).exp()),
    }
}

/// Cyclic distance between two horizontal coordinates on a circle of
/// circumference `2I`.
pub fn band_distance(x1: f64, x2: f64, half_width: f64) -> f64 {
    let d = (x1 - x2).abs();
    d.min(2.0 * half_width - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const R100: f64 = 9.210340371976184;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn radius_examples() {
        assert!(close(compute_radius(100.0, 1.0).unwrap(), 9.210340, 1e-6));
        assert!(close(compute_radius(1000.0, 2.0).unwrap(), 12.429216, 1e-6));
        assert_eq!(compute_radius(1.0, 1.0).unwrap(), 0.0);
        assert!(compute_radius(0.5, 1.0).is_err());
        assert!(compute_radius(10.0, 0.0).is_err());
        assert!(compute_radius(-3.0, 1.0).is_err());
        let r = compute_radius(12345.0, 3.0).unwrap();
        assert!(close(3.0 * (r / 2.0).exp(), 12345.0, 1e-9));
    }

    #[test]
    fn params_reject_inconsistent_radius() {
        let p = ModelParams::new(0.75, 1.0, 100.0).unwrap();
        assert!(ModelParams::with_radius(0.75, 1.0, 100.0, p.radius()).is_ok());
        assert!(ModelParams::with_radius(0.75, 1.0, 100.0, p.radius() + 1e-6).is_err());
        assert!(ModelParams::new(0.0, 1.0, 100.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.5).is_err());
        assert!(close(p.half_width(), 157.079633, 1e-6));
    }

    #[test]
    fn angle_normalization() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!(close(normalize_angle(3.0 * PI / 2.0), -PI / 2.0, 1e-15));
        assert!(close(normalize_angle(-7.0), -7.0 + TAU, 1e-15));
        assert_eq!(normalize_angle(0.25), 0.25);
    }

    #[test]
    fn distance_examples() {
        let d = hyperbolic_distance(&PolarPoint::new(5.0, 1.0), &PolarPoint::new(3.0, 1.0));
        assert!(close(d, 2.0, 1e-12));
        let d = hyperbolic_distance(&PolarPoint::new(4.0, 0.0), &PolarPoint::new(4.0, PI));
        assert!(close(d, 8.0, 1e-12));
        let p = PolarPoint::new(7.0, 0.3);
        assert_eq!(hyperbolic_distance(&p, &p), 0.0);
    }

    #[test]
    fn distance_log_space_branch_matches_radial_case() {
        let d = hyperbolic_distance(&PolarPoint::new(500.0, 0.2), &PolarPoint::new(320.0, 0.2));
        assert!(close(d, 180.0, 1e-9));
        let d = hyperbolic_distance(&PolarPoint::new(400.0, 0.0), &PolarPoint::new(400.0, PI));
        assert!(close(d, 800.0, 1e-9));
    }

    #[test]
    fn relative_angle_examples() {
        assert!(close(relative_angle(3.0, -3.0), 0.283185, 1e-6));
        assert_eq!(relative_angle(0.5, 0.5), 0.0);
        assert_eq!(relative_angle(PI, 0.0), PI);
    }

    #[test]
    fn theta_r_examples() {
        assert!(close(theta_r(R100, R100, R100).unwrap(), 0.02, 1e-5));
        let r = 20.0;
        let wide = theta_r(r, r / 2.0, r).unwrap();
        let narrow = theta_r(r, r, r).unwrap();
        assert!(wide > narrow && wide < PI);
        assert!(theta_r(3.0, 3.0, 9.0).is_err());
        assert!(theta_r(0.0, 9.0, 9.0).is_err());
    }

    #[test]
    fn clamps_cosines_just_past_one() {
        assert_eq!(clamped_acos(1.0 + 5e-13), 0.0);
        assert_eq!(clamped_acos(-1.0 - 5e-13), PI);
        assert_eq!(half_angle_from_sin2(-1e-17), 0.0);
        assert_eq!(half_angle_from_sin2(1.0 + 1e-13), PI);
    }

    #[test]
    fn theta_r_matches_arccos_form() {
        for &(r1, r2, big_r) in &[(5.0f64, 6.0f64, 9.0f64), (8.0, 8.5, 10.0), (2.0, 9.9, 10.0)] {
            let c = (r1.cosh() * r2.cosh() - big_r.cosh()) / (r1.sinh() * r2.sinh());
            let theta = theta_r(r1, r2, big_r).unwrap();
            assert!(
                close(theta, clamped_acos(c), 1e-9),
                "{theta} vs {}",
                clamped_acos(c)
            );
        }
    }

    #[test]
    fn theta_r_log_space_is_continuous() {
        // evaluations straddling the log-space switch agree with the direct form
        for &(r1, r2) in &[(20.0f64, 25.0f64), (29.0, 29.5), (15.0, 28.0)] {
            let direct = {
                let s = (30.0f64.cosh() - (r1 - r2).cosh()) / (2.0 * r1.sinh() * r2.sinh());
                half_angle_from_sin2(s)
            };
            let logged = theta_r(r1, r2, 30.0 + 1e-12).unwrap();
            assert!((logged / direct - 1.0).abs() < 1e-6, "{logged} vs {direct}");
        }
    }

    #[test]
    fn t_r_examples() {
        assert!(close(t_r(0.0, 0.0, R100), 0.02, 1e-12));
        assert!(close(t_r(2.0, 3.0, R100), 0.243650, 1e-6));
        let ratio = theta_r(R100, R100, R100).unwrap() / t_r(0.0, 0.0, R100);
        assert!(close(ratio, 1.0, 5e-3));
    }

    #[test]
    fn projection_examples() {
        let i = band_half_width(R100);
        let b = phi_project(&PolarPoint::new(R100, FRAC_PI_2), R100);
        assert!(close(b.x, 78.539816, 1e-6) && b.y == 0.0);
        let b = phi_project(&PolarPoint::new(R100 - 1.0, 0.0), R100);
        assert_eq!(b.x, 0.0);
        assert!(close(b.y, 1.0, 1e-12));
        let b = phi_project(&PolarPoint::new(R100, PI), R100);
        assert!(close(b.x, i, 1e-12) && b.y == 0.0);
    }

    #[test]
    fn band_distance_examples() {
        let i = 157.079633;
        assert!(close(band_distance(150.0, -150.0, i), 14.159266, 1e-6));
        assert_eq!(band_distance(42.0, 42.0, i), 0.0);
        assert_eq!(band_distance(0.0, i, i), i);
    }

    fn polar(max_r: f64) -> impl Strategy<Value = PolarPoint> {
        (0.0..=max_r, -PI..=PI).prop_map(|(r, t)| PolarPoint::new(r, t))
    }

    proptest! {
        #[test]
        fn distance_is_symmetric(p in polar(20.0), q in polar(20.0)) {
            prop_assert_eq!(hyperbolic_distance(&p, &q), hyperbolic_distance(&q, &p));
            prop_assert_eq!(cosh_distance(&p, &q), cosh_distance(&q, &p));
        }

        #[test]
        fn triangle_inequality(p in polar(12.0), q in polar(12.0), s in polar(12.0)) {
            let pq = hyperbolic_distance(&p, &q);
            let qs = hyperbolic_distance(&q, &s);
            let ps = hyperbolic_distance(&p, &s);
            prop_assert!(ps <= (pq + qs) * (1.0 + 1e-9) + 1e-9);
        }

        #[test]
        fn projection_round_trips(p in polar(25.0)) {
            let radius = 25.0;
            let back = phi_unproject(&phi_project(&p, radius), radius);
            prop_assert!((back.r - p.r).abs() <= 1e-12);
            prop_assert!(relative_angle(back.theta, p.theta) <= 1e-12);
        }

        #[test]
        fn band_triangle_inequality(a in -100.0..=100.0f64, b in -100.0..=100.0f64, c in -100.0..=100.0f64) {
            let i = 100.0;
            prop_assert!(band_distance(a, c, i) <= band_distance(a, b, i) + band_distance(b, c, i) + 1e-12);
        }
    }
}
