//! Nonlocal correlation term `X` of a detector pair, per `λ²`.
//!
//! Every reduction has the form
//!
//! ```text
//! X = −C ∫_0^∞ h(s) [1/(D(s) − i0) − 1/(D_img(s) − i0)] ds
//! ```
//!
//! with `D` the squared interval between the two worldlines at coordinate
//! time lag `s` and `D_img` the same quantity with one detector reflected in
//! the mirror. Each simple root `s_k` of a denominator contributes
//! `PV ∫ h/D + iπ h(s_k)/|D'(s_k)|`.
//!
//! Detector `A` sits at height `Δz` and `B` at `Δz + Δd`; the heights come from
//! [`PairGeometry`], the kinematics only supply `R`, `ω` and `γ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{product_shift, x_minus_v_sin, CircularKinematics, DetectorSpec, PairGeometry, PairKind, UniformKinematics};
use crate::quadrature::{bracket_all_roots, integrate_pv_shifted, PoleSet, QuadratureBudget};
use crate::Mirror;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XResult {
    pub x_real: f64,
    pub x_imag: f64,
    /// `|X|/λ²`.
    pub abs_x: f64,
    pub err_est: f64,
    pub pole_count_free: usize,
    pub pole_count_image: usize,
}

impl XResult {
    fn new(re: f64, im: f64, err_est: f64, pole_count_free: usize, pole_count_image: usize) -> Self {
        Self {
            x_real: re,
            x_imag: im,
            abs_x: re.hypot(im),
            err_est,
            pole_count_free,
            pole_count_image,
        }
    }
}

/// `PV ∫ h/D` plus `π Σ h(s_k)/|D'(s_k)|` over the given poles.
struct Distribution {
    real: f64,
    imag: f64,
    error: f64,
    poles: usize,
}

/// `shift(s, t) = D(s + t) − D(s)` about a root `s`.
fn distribution<H, D, S>(h: H, d: D, shift: S, poles: &PoleSet, alpha: f64, budget: &QuadratureBudget) -> Result<Distribution>
where
    H: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
    S: Fn(f64, f64) -> f64,
{
    let imag = poles
        .roots()
        .iter()
        .zip(poles.derivatives())
        .map(|(&s, &dp)| PI * h(s) / dp.abs())
        .sum();
    let pv = integrate_pv_shifted(&h, d, shift, poles, alpha, budget)?;
    Ok(Distribution {
        real: pv.value,
        imag,
        error: pv.error,
        poles: poles.len(),
    })
}

fn check_kind(geom: &PairGeometry, expected: PairKind) -> Result<()> {
    if geom.kind != expected {
        return Err(Error::InvalidParameter {
            name: "kind",
            reason: format!("expected {expected:?}, got {:?}", geom.kind),
        });
    }
    if geom.dd == 0.0 {
        return Err(Error::CoincidentDetectors);
    }
    Ok(())
}

fn image_offset(geom: &PairGeometry) -> f64 {
    4.0 * geom.dd * geom.dz + 4.0 * geom.dz * geom.dz
}

fn scaled_budget(prefactor: f64, budget: &QuadratureBudget) -> QuadratureBudget {
    budget.with_abs_tol(budget.abs_tol / prefactor.abs().max(f64::MIN_POSITIVE))
}

/// Two circles sharing an axis, both swept at angular velocity `ω`, with radii
/// `ρ_A`, `ρ_B`: `D(s) = c + (R_A−R_B)² + 4R_AR_B sin²(ωs/2) − s²`.
struct Circles {
    omega: f64,
    sqrt_rr: f64,
    one_minus_v_eff: f64,
    v_eff: f64,
    radial_gap2: f64,
}

impl Circles {
    fn new(a: &CircularKinematics, b: &CircularKinematics) -> Self {
        let (ea, eb) = (a.one_minus_v2(), b.one_minus_v2());
        let vv = a.speed() * b.speed();
        let one_minus_vv = (ea + eb - ea * eb) / (1.0 + vv);
        let v_eff = vv.sqrt();
        Self {
            omega: a.omega(),
            sqrt_rr: (a.radius() * b.radius()).sqrt(),
            one_minus_v_eff: one_minus_vv / (1.0 + v_eff),
            v_eff,
            radial_gap2: (a.radius() - b.radius()).powi(2),
        }
    }

    fn d(&self, c: f64, s: f64) -> f64 {
        let y = 0.5 * self.omega * s;
        let minus = 2.0 / self.omega * x_minus_v_sin(self.one_minus_v_eff, y);
        let plus = s + 2.0 * self.sqrt_rr * y.sin();
        c + self.radial_gap2 - minus * plus
    }

    fn shift(&self, s: f64, t: f64) -> f64 {
        let w = self.omega;
        -4.0 / (w * w) * product_shift(self.one_minus_v_eff, self.v_eff, 0.5 * w * s, 0.5 * w * t)
    }

    fn d_prime(&self, s: f64) -> f64 {
        2.0 * self.sqrt_rr * self.v_eff * (self.omega * s).sin() - 2.0 * s
    }

    fn poles(&self, c: f64) -> Result<PoleSet> {
        let reach = (c + self.radial_gap2 + 4.0 * self.sqrt_rr * self.sqrt_rr).sqrt() + 1.0;
        let step = 0.25f64.min(PI / (8.0 * self.omega));
        let dp = |s: f64| self.d_prime(s);
        bracket_all_roots(|s| self.d(c, s), reach, step, Some(&dp))
    }

    #[allow(clippy::too_many_arguments)]
    fn x<H: Fn(f64) -> f64 + Copy>(
        &self,
        prefactor: f64,
        h: H,
        alpha: f64,
        geom: &PairGeometry,
        budget: &QuadratureBudget,
        mirror: Mirror,
    ) -> Result<XResult> {
        let b = scaled_budget(prefactor, budget);
        let c_free = geom.dd * geom.dd;
        let free = distribution(h, |s| self.d(c_free, s), |s, t| self.shift(s, t), &self.poles(c_free)?, alpha, &b)?;
        let (mut re, mut im, mut err) = (free.real, free.imag, free.error);
        let mut image_poles = 0;
        if mirror == Mirror::Present {
            let c_img = c_free + image_offset(geom);
            let img = distribution(h, |s| self.d(c_img, s), |s, t| self.shift(s, t), &self.poles(c_img)?, alpha, &b)?;
            re -= img.real;
            im -= img.imag;
            err += img.error;
            image_poles = img.poles;
        }
        Ok(XResult::new(-prefactor * re, -prefactor * im, prefactor.abs() * err, free.poles, image_poles))
    }
}

pub fn x_comoving_circular(
    kin: &CircularKinematics,
    geom: &PairGeometry,
    det: &DetectorSpec,
    budget: &QuadratureBudget,
) -> Result<XResult> {
    x_comoving_circular_in(kin, geom, det, budget, Mirror::Present)
}

/// Two detectors with identical `(a, R, ω)` on a common axis, `Δd` apart:
///
/// ```text
/// X = −e^{-Ω²}/(2π^{3/2}γ) ∫ e^{-s²/(4γ²)} [1/(D − i0) − 1/(D + 4ΔdΔz + 4Δz² − i0)] ds
/// D = Δd² + 4R² sin²(ωs/2) − s²
/// ```
pub fn x_comoving_circular_in(
    kin: &CircularKinematics,
    geom: &PairGeometry,
    det: &DetectorSpec,
    budget: &QuadratureBudget,
    mirror: Mirror,
) -> Result<XResult> {
    budget.validate()?;
    check_kind(geom, PairKind::CircularComoving)?;
    let g = kin.gamma();
    let prefactor = (-det.gap * det.gap).exp() / (2.0 * PI.powf(1.5) * g);
    let alpha = 1.0 / (4.0 * g * g);
    Circles::new(kin, kin).x(prefactor, move |s| (-alpha * s * s).exp(), alpha, geom, budget, mirror)
}

pub fn x_sync_two_radii(
    kin_a: &CircularKinematics,
    kin_b: &CircularKinematics,
    geom: &PairGeometry,
    det: &DetectorSpec,
    budget: &QuadratureBudget,
) -> Result<XResult> {
    x_sync_two_radii_in(kin_a, kin_b, geom, det, budget, Mirror::Present)
}

/// Two detectors rotating in step (`ω_A = ω_B`) on circles of different radii.
/// With `Γ = γ_A² + γ_B²`:
///
/// ```text
/// X = −e^{-Ω²(γ_A+γ_B)²/(2Γ)}/(π^{3/2}√(2Γ))
///     ∫ cos(Ωs(γ_A−γ_B)/Γ) e^{-s²/(2Γ)} [1/(f − i0) − 1/(f + 4ΔdΔz + 4Δz² − i0)] ds
/// f = Δd² + R_A² + R_B² − 2R_AR_B cos ωs − s²
/// ```
pub fn x_sync_two_radii_in(
    kin_a: &CircularKinematics,
    kin_b: &CircularKinematics,
    geom: &PairGeometry,
    det: &DetectorSpec,
    budget: &QuadratureBudget,
    mirror: Mirror,
) -> Result<XResult> {
    budget.validate()?;
    check_kind(geom, PairKind::CircularSyncTwoRadii)?;
    let (wa, wb) = (kin_a.omega(), kin_b.omega());
    if (wa - wb).abs() > 1e-12 * wa.max(wb) {
        return Err(Error::AngularVelocityMismatch { omega_a: wa, omega_b: wb });
    }
    let (ga, gb) = (kin_a.gamma(), kin_b.gamma());
    let big = ga * ga + gb * gb;
    let w = det.gap;
    let prefactor = (-w * w * (ga + gb).powi(2) / (2.0 * big)).exp() / (PI.powf(1.5) * (2.0 * big).sqrt());
    let alpha = 1.0 / (2.0 * big);
    let freq = w * (ga - gb) / big;
    Circles::new(kin_a, kin_b).x(prefactor, move |s| (freq * s).cos() * (-alpha * s * s).exp(), alpha, geom, budget, mirror)
}

pub fn x_uniform_pair(kin: &UniformKinematics, geom: &PairGeometry, det: &DetectorSpec, budget: &QuadratureBudget) -> Result<XResult> {
    x_uniform_pair_in(kin, geom, det, budget, Mirror::Present)
}

/// Two detectors with the same uniform acceleration, `Δd` apart along `z`:
///
/// ```text
/// X = −e^{-Ω²}/(2π^{3/2}) ∫ e^{-s²/4} [1/(D − i0) − 1/(D + 4ΔdΔz + 4Δz² − i0)] ds
/// D = Δd² − (4/a²) sinh²(as/2)
/// ```
///
/// Each denominator has the single root `(2/a) asinh(aL/2)` with `L = Δd`
/// (free) or `L = Δd + 2Δz` (image).
pub fn x_uniform_pair_in(
    kin: &UniformKinematics,
    geom: &PairGeometry,
    det: &DetectorSpec,
    budget: &QuadratureBudget,
    mirror: Mirror,
) -> Result<XResult> {
    budget.validate()?;
    check_kind(geom, PairKind::UniformPair)?;
    let a = kin.accel();
    let prefactor = (-det.gap * det.gap).exp() / (2.0 * PI.powf(1.5));
    let b = scaled_budget(prefactor, budget);
    let h = |s: f64| (-0.25 * s * s).exp();
    let piece = |l: f64| -> Result<Distribution> {
        let root = 2.0 / a * (0.5 * a * l).asinh();
        let dp = -2.0 / a * (a * root).sinh();
        let d = |s: f64| {
            let q = 2.0 / a * (0.5 * a * s).sinh();
            (l - q) * (l + q)
        };
        let shift = |s0: f64, t: f64| {
            let q0 = 2.0 / a * (0.5 * a * s0).sinh();
            let dq = 4.0 / a * (0.25 * a * (2.0 * s0 + t)).cosh() * (0.25 * a * t).sinh();
            -dq * (2.0 * q0 + dq)
        };
        distribution(h, d, shift, &PoleSet::single(root, dp)?, 0.25, &b)
    };
    let free = piece(geom.dd)?;
    let (mut re, mut im, mut err) = (free.real, free.imag, free.error);
    let mut image_poles = 0;
    if mirror == Mirror::Present {
        let img = piece(geom.dd + 2.0 * geom.dz)?;
        re -= img.real;
        im -= img.imag;
        err += img.error;
        image_poles = img.poles;
    }
    Ok(XResult::new(-prefactor * re, -prefactor * im, prefactor * err, free.poles, image_poles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::derive_circular;
    use crate::specfun::erfc;

    fn b() -> QuadratureBudget {
        QuadratureBudget::default()
    }

    fn comoving(a: f64, r: f64, w: f64, dd: f64, dz: f64, mirror: Mirror) -> XResult {
        let kin = derive_circular(a, r, dz).unwrap();
        let geom = PairGeometry::new(dd, dz, PairKind::CircularComoving).unwrap();
        x_comoving_circular_in(&kin, &geom, &DetectorSpec::new(w).unwrap(), &b(), mirror).unwrap()
    }

    // Frozen 60-digit evaluation: folded principal value with Gauss-Legendre.
    #[test]
    fn comoving_reference_value() {
        let x = comoving(1.0, 1.0, 0.1, 0.2, 0.2, Mirror::Present);
        assert!((x.x_real - (-0.008_401_572_438_583_519)).abs() < 1e-9, "{x:?}");
        assert!((x.x_imag - (-0.483_306_561_432_639_7)).abs() < 1e-12, "{x:?}");
        assert_eq!((x.pole_count_free, x.pole_count_image), (1, 1));
    }

    #[test]
    fn uniform_reference_value() {
        let kin = UniformKinematics::new(1.0, 0.2).unwrap();
        let geom = PairGeometry::new(0.2, 0.2, PairKind::UniformPair).unwrap();
        let x = x_uniform_pair(&kin, &geom, &DetectorSpec::new(0.1).unwrap(), &b()).unwrap();
        assert!((x.x_real - (-0.008_197_150_599_883_577)).abs() < 1e-9, "{x:?}");
        assert!((x.x_imag - (-0.483_601_133_522_143_4)).abs() < 1e-12, "{x:?}");
    }

    // Inertial pair in free space: |X| = e^{-L²/4-Ω²} √(1 + erfi(L/2)²)/(4√π L).
    #[test]
    fn uniform_pair_approaches_inertial_closed_form() {
        let (l, w) = (0.2f64, 0.1f64);
        // erfi(0.1) from its Maclaurin series.
        let x = 0.5 * l;
        let erfi = 2.0 / PI.sqrt() * (x + x.powi(3) / 3.0 + x.powi(5) / 10.0 + x.powi(7) / 42.0 + x.powi(9) / 216.0);
        let exact = (-l * l / 4.0 - w * w).exp() * (1.0 + erfi * erfi).sqrt() / (4.0 * PI.sqrt() * l);
        let kin = UniformKinematics::new(1e-4, 1.0).unwrap();
        let geom = PairGeometry::new(l, 1.0, PairKind::UniformPair).unwrap();
        let x = x_uniform_pair_in(&kin, &geom, &DetectorSpec::new(w).unwrap(), &b(), Mirror::Absent).unwrap();
        assert!((x.abs_x - exact).abs() < 1e-5 * exact, "{} vs {exact}", x.abs_x);
        assert!(erfc(0.0) == 1.0);
    }

    #[test]
    fn equal_radii_reduce_to_comoving() {
        for (a, r, w, dd, dz) in [(1.0, 1.0, 0.1, 0.2, 0.2), (4.0, 0.3, 1.8, 0.5, 1.0), (0.5, 2.0, 0.0, 1.0, 3.0)] {
            let kin = derive_circular(a, r, dz).unwrap();
            let det = DetectorSpec::new(w).unwrap();
            let c = x_comoving_circular(&kin, &PairGeometry::new(dd, dz, PairKind::CircularComoving).unwrap(), &det, &b()).unwrap();
            let s = x_sync_two_radii(&kin, &kin, &PairGeometry::new(dd, dz, PairKind::CircularSyncTwoRadii).unwrap(), &det, &b()).unwrap();
            assert!((c.x_real - s.x_real).abs() < 1e-10 && (c.x_imag - s.x_imag).abs() < 1e-10);
        }
    }

    #[test]
    fn mismatched_angular_velocity_rejected() {
        let ka = CircularKinematics::from_angular_velocity(0.3, 1.0, 0.5).unwrap();
        let kb = CircularKinematics::from_angular_velocity(0.5, 1.0, 0.5).unwrap();
        let geom = PairGeometry::new(0.5, 0.5, PairKind::CircularSyncTwoRadii).unwrap();
        let err = x_sync_two_radii(&ka, &kb, &geom, &DetectorSpec::new(0.1).unwrap(), &b()).unwrap_err();
        assert!(matches!(err, Error::AngularVelocityMismatch { .. }));
    }

    #[test]
    fn zero_gap_drops_prefactor_and_oscillation() {
        let ka = CircularKinematics::from_angular_velocity(0.4, 1.0, 0.5).unwrap();
        let kb = CircularKinematics::from_angular_velocity(0.4, 1.5, 0.5).unwrap();
        let geom = PairGeometry::new(0.5, 0.5, PairKind::CircularSyncTwoRadii).unwrap();
        let x = x_sync_two_radii(&ka, &kb, &geom, &DetectorSpec::new(0.0).unwrap(), &b()).unwrap();
        // Rebuild the Ω = 0 integral directly.
        let big = ka.gamma().powi(2) + kb.gamma().powi(2);
        let circles = Circles::new(&ka, &kb);
        let alpha = 1.0 / (2.0 * big);
        let h = |s: f64| (-alpha * s * s).exp();
        let f = distribution(h, |s| circles.d(0.25, s), |s, t| circles.shift(s, t), &circles.poles(0.25).unwrap(), alpha, &b()).unwrap();
        let c_img = 0.25 + 1.0 + 1.0;
        let i = distribution(h, |s| circles.d(c_img, s), |s, t| circles.shift(s, t), &circles.poles(c_img).unwrap(), alpha, &b()).unwrap();
        let pref = 1.0 / (PI.powf(1.5) * (2.0 * big).sqrt());
        assert!((x.x_real + pref * (f.real - i.real)).abs() < 1e-12);
        assert!((x.x_imag + pref * (f.imag - i.imag)).abs() < 1e-12);
    }

    #[test]
    fn coincident_detectors_rejected() {
        let kin = derive_circular(1.0, 1.0, 1.0).unwrap();
        let geom = PairGeometry::new(0.0, 1.0, PairKind::CircularComoving).unwrap();
        let err = x_comoving_circular(&kin, &geom, &DetectorSpec::new(0.1).unwrap(), &b()).unwrap_err();
        assert_eq!(err, Error::CoincidentDetectors);
    }

    #[test]
    fn image_contribution_shrinks_with_height() {
        let mut prev = f64::INFINITY;
        for dz in [5.0, 10.0, 20.0, 40.0] {
            let with = comoving(1.0, 1.0, 0.1, 0.2, dz, Mirror::Present);
            let free = comoving(1.0, 1.0, 0.1, 0.2, dz, Mirror::Absent);
            let diff = (with.x_real - free.x_real).hypot(with.x_imag - free.x_imag);
            assert!(diff < prev);
            prev = diff;
        }
    }

    #[test]
    fn window_independent() {
        let kin = derive_circular(1.0, 1.0, 0.2).unwrap();
        let geom = PairGeometry::new(0.2, 0.2, PairKind::CircularComoving).unwrap();
        let det = DetectorSpec::new(0.1).unwrap();
        let x1 = x_comoving_circular(&kin, &geom, &det, &QuadratureBudget { pv_window_delta: 1e-2, ..b() }).unwrap();
        let x2 = x_comoving_circular(&kin, &geom, &det, &QuadratureBudget { pv_window_delta: 1e-3, ..b() }).unwrap();
        assert!((x1.abs_x - x2.abs_x).abs() < 10.0 * x1.err_est.max(1e-12));
    }

    #[test]
    fn uniform_roots_closed_form() {
        let (a, dd) = (1.7f64, 0.4f64);
        let root = 2.0 / a * (a * dd / 2.0).asinh();
        let d = dd * dd - 4.0 / (a * a) * (a * root / 2.0).sinh().powi(2);
        assert!(d.abs() < 1e-15);
    }
}
