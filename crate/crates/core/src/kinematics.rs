//! Detector worldlines and the quantities derived from them.
//!
//! A circular detector is fixed by its proper acceleration `a`, radius `R`
//! and height `Δz` above the mirror. With `aR` known:
//!
//! ```text
//! v² = aR/(1+aR),  γ² = 1+aR,  ω = v/R
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::quadrature::bisect;
use crate::specfun::x_minus_sin;

/// Circular motion parallel to the mirror plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularKinematics {
    radius: f64,
    accel: f64,
    dz: f64,
    speed: f64,
    one_minus_v: f64,
    gamma: f64,
    omega: f64,
}

impl CircularKinematics {
    pub fn new(accel: f64, radius: f64, dz: f64) -> Result<Self> {
        let accel = positive("accel_a", accel)?;
        let radius = positive("radius_R", radius)?;
        let dz = positive("boundary_dist_dz", dz)?;
        let ar = accel * radius;
        let speed = (ar / (1.0 + ar)).sqrt();
        let one_minus_v = 1.0 / ((1.0 + ar) * (1.0 + speed));
        Ok(Self {
            radius,
            accel,
            dz,
            speed,
            one_minus_v,
            gamma: (1.0 + ar).sqrt(),
            omega: speed / radius,
        })
    }

    /// Kinematics from the angular velocity instead of the acceleration.
    /// Only `|ω|` matters.
    pub fn from_angular_velocity(omega: f64, radius: f64, dz: f64) -> Result<Self> {
        let omega = positive("omega", omega.abs())?;
        let radius = positive("radius_R", radius)?;
        positive("boundary_dist_dz", dz)?;
        let v = omega * radius;
        if v >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "omega",
                reason: format!("speed |ω|R = {v} is not below 1"),
            });
        }
        let one_minus_v2 = (1.0 - v) * (1.0 + v);
        let accel = v * v / (one_minus_v2 * radius);
        let mut k = Self::new(accel, radius, dz)?;
        k.omega = omega;
        k.speed = v;
        k.one_minus_v = 1.0 - v;
        k.gamma = 1.0 / one_minus_v2.sqrt();
        Ok(k)
    }

    /// Same worldline shape at a different height.
    pub fn with_dz(&self, dz: f64) -> Result<Self> {
        positive("boundary_dist_dz", dz)?;
        Ok(Self { dz, ..*self })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn accel(&self) -> f64 {
        self.accel
    }
    pub fn dz(&self) -> f64 {
        self.dz
    }
    pub fn speed(&self) -> f64 {
        self.speed
    }
    /// `1 − v`, accurate when `v` is close to 1.
    pub fn one_minus_v(&self) -> f64 {
        self.one_minus_v
    }
    /// `1 − v² = 1/γ²`.
    pub fn one_minus_v2(&self) -> f64 {
        1.0 / (self.gamma * self.gamma)
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Gaussian exponent in the reduced variable `x = ωt/2`: `R/a`.
    pub fn alpha(&self) -> f64 {
        self.radius / self.accel
    }

    /// `1/(ω²γ²)`; equals [`alpha`](Self::alpha) up to rounding.
    pub fn alpha_from_omega(&self) -> f64 {
        1.0 / (self.omega * self.omega * self.gamma * self.gamma)
    }

    /// Oscillation rate `2Ω/(γω)` in the reduced variable.
    pub fn beta(&self, gap: f64) -> f64 {
        2.0 * gap / (self.gamma * self.omega)
    }

    /// Prefactor `v·a/(4π^{3/2}γ)` of the regular free-space integral.
    pub fn k_prefactor(&self) -> f64 {
        self.speed * self.accel / (4.0 * PI.powf(1.5) * self.gamma)
    }

    /// Positive root of `x² − v²sin²x − ω²Δz²`.
    pub fn light_cone_root(&self) -> Result<f64> {
        light_cone_root_with(self.speed, self.one_minus_v, self.omega * self.dz)
    }

    /// `x² − v²sin²x − c²` without cancellation at small `x`.
    pub fn image_denominator(&self, x: f64, c: f64) -> f64 {
        image_denominator(self.speed, self.one_minus_v, x, c)
    }
}

/// Convenience constructor matching the canonical `(aσ, R/σ, Δz/σ)` inputs.
pub fn derive_circular(accel: f64, radius: f64, dz: f64) -> Result<CircularKinematics> {
    CircularKinematics::new(accel, radius, dz)
}

/// `x − v·sin x` from `(1−v)·sin x + (x − sin x)`.
pub(crate) fn x_minus_v_sin(one_minus_v: f64, x: f64) -> f64 {
    one_minus_v * x.sin() + x_minus_sin(x)
}

pub(crate) fn image_denominator(v: f64, one_minus_v: f64, x: f64, c: f64) -> f64 {
    let s = x.sin();
    x_minus_v_sin(one_minus_v, x) * (x + v * s) - c * c
}

/// `g(y + dy) − g(y)` for `g(y) = (y − v sin y)(y + v sin y)`, without
/// forming `g` at either point.
pub(crate) fn product_shift(one_minus_v: f64, v: f64, y: f64, dy: f64) -> f64 {
    let half = 0.5 * dy;
    let sh = half.sin();
    let mid = y + half;
    let d_minus = 2.0 * x_minus_sin(half) + 2.0 * sh * (one_minus_v + 2.0 * v * (0.5 * mid).sin().powi(2));
    let d_plus = dy + 2.0 * v * mid.cos() * sh;
    let y1 = y + dy;
    d_minus * (y1 + v * y1.sin()) + x_minus_v_sin(one_minus_v, y) * d_plus
}

/// Unique positive root `S` of `g(x) = x² − v²sin²x − (ωΔz)²` for
/// `0 ≤ v < 1`. `g' = 2x − v²sin 2x > 0` on `x > 0`, and the root lies in
/// `[ωΔz, √((ωΔz)² + v²)]`.
///
/// ```
/// let s = udw::kinematics::light_cone_root(0.0, 2.0).unwrap();
/// assert!((s - 2.0).abs() < 1e-12);
/// ```
pub fn light_cone_root(speed: f64, omega_dz: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&speed) {
        return Err(Error::InvalidParameter {
            name: "speed",
            reason: format!("{speed} outside [0, 1)"),
        });
    }
    light_cone_root_with(speed, 1.0 - speed, omega_dz)
}

fn light_cone_root_with(v: f64, one_minus_v: f64, c: f64) -> Result<f64> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter {
            name: "omega_dz",
            reason: format!("{c} is not a finite non-negative number"),
        });
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    let g = |x: f64| image_denominator(v, one_minus_v, x, c);
    let lo = c;
    let hi = (c * c + v * v).sqrt();
    let (glo, ghi) = (g(lo), g(hi));
    if glo >= 0.0 {
        return Ok(lo);
    }
    if ghi <= 0.0 {
        if ghi == 0.0 {
            return Ok(hi);
        }
        return Err(Error::RootNotBracketed { lo, hi });
    }
    Ok(bisect(&g, lo, hi, glo))
}

/// Hyperbolic motion with constant proper acceleration, parallel to the mirror.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformKinematics {
    accel: f64,
    dz: f64,
}

impl UniformKinematics {
    pub fn new(accel: f64, dz: f64) -> Result<Self> {
        Ok(Self {
            accel: positive("accel_a", accel)?,
            dz: positive("boundary_dist_dz", dz)?,
        })
    }
    pub fn accel(&self) -> f64 {
        self.accel
    }
    pub fn dz(&self) -> f64 {
        self.dz
    }
    pub fn with_dz(&self, dz: f64) -> Result<Self> {
        Self::new(self.accel, dz)
    }
}

/// Energy gap and switching of a detector. `σ` and `λ` are fixed to 1:
/// every length is in units of `σ` and every output is per `λ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub gap: f64,
}

impl DetectorSpec {
    pub const SWITCH_SIGMA: f64 = 1.0;
    pub const COUPLING_LAMBDA: f64 = 1.0;

    /// Any finite gap; a negative gap describes an initially excited detector.
    pub fn new(gap: f64) -> Result<Self> {
        if !gap.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gap_Omega",
                reason: "must be finite".into(),
            });
        }
        Ok(Self { gap })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    CircularComoving,
    CircularSyncTwoRadii,
    UniformPair,
}

/// Placement of a detector pair: `A` at height `Δz`, `B` at `Δz + Δd`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairGeometry {
    pub dd: f64,
    pub dz: f64,
    pub kind: PairKind,
}

impl PairGeometry {
    pub fn new(dd: f64, dz: f64, kind: PairKind) -> Result<Self> {
        if !(dd >= 0.0) || !dd.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sep_dd",
                reason: format!("{dd} must be finite and non-negative"),
            });
        }
        positive("boundary_dist_dz", dz)?;
        Ok(Self { dd, dz, kind })
    }
}
