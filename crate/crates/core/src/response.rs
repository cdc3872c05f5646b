//! Transition probability of a single detector, per `λ²`.
//!
//! Both trajectories split the same way: the `1/(t − iε)²` part of the free
//! Wightman function gives [`vacuum_static_term`], the rest of the free part
//! is a regular Gaussian-damped integral, and the image term is a
//! principal-value integral through the light-cone root plus the residue
//! picked up there.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{product_shift, x_minus_v_sin, CircularKinematics, DetectorSpec, UniformKinematics};
use crate::quadrature::{integrate_damped, integrate_pv_shifted, PoleSet, QuadratureBudget};
use crate::specfun::{vacuum_static_term, x_minus_sin};
use crate::Mirror;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionResult {
    /// `P/λ²`; the sum of the four terms below.
    pub probability: f64,
    pub term_free_oscillatory: f64,
    pub term_boundary_pv: f64,
    pub term_static: f64,
    pub term_residue: f64,
    pub err_est: f64,
}

impl TransitionResult {
    fn assemble(free: f64, pv: f64, stat: f64, res: f64, err_est: f64) -> Result<Self> {
        let probability = free + pv + stat + res;
        if probability < -(1e-9f64).max(10.0 * err_est) {
            return Err(Error::NegativeProbability { value: probability });
        }
        Ok(Self {
            probability,
            term_free_oscillatory: free,
            term_boundary_pv: pv,
            term_static: stat,
            term_residue: res,
            err_est,
        })
    }

    /// Contribution of the mirror.
    pub fn boundary(&self) -> f64 {
        self.term_boundary_pv + self.term_residue
    }
}

fn budget_for(prefactor: f64, budget: &QuadratureBudget) -> QuadratureBudget {
    if prefactor == 0.0 {
        return *budget;
    }
    budget.with_abs_tol(budget.abs_tol / prefactor.abs())
}

/// `(x² − sin²x)/(x²(x² − v²sin²x))`, finite at the origin.
pub(crate) fn circular_free_kernel(v: f64, one_minus_v: f64, one_minus_v2: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0 / (3.0 * one_minus_v2);
    }
    let s = x.sin();
    let num = x_minus_sin(x) * (x + s);
    let den = x * x * x_minus_v_sin(one_minus_v, x) * (x + v * s);
    num / den
}

pub fn transition_circular(kin: &CircularKinematics, det: &DetectorSpec, budget: &QuadratureBudget) -> Result<TransitionResult> {
    transition_circular_in(kin, det, budget, Mirror::Present)
}

/// Circular detector at height `Δz`, with or without the mirror.
///
/// In the variable `x = ωt/2` (`t` coordinate time):
///
/// ```text
/// P = K ∫ e^{-αx²} cos βx (x² − sin²x)/(x²(x² − v²sin²x)) dx
///   + ω/(4π^{3/2}γ) PV∫ e^{-αx²} cos βx /(x² − v²sin²x − ω²Δz²) dx
///   + (1/4π)[e^{-Ω²} − √π Ω erfc Ω]
///   + ω/(4√π γ) e^{-αS²} sin βS /(2S − v² sin 2S)
/// ```
pub fn transition_circular_in(
    kin: &CircularKinematics,
    det: &DetectorSpec,
    budget: &QuadratureBudget,
    mirror: Mirror,
) -> Result<TransitionResult> {
    budget.validate()?;
    let (v, omv, omv2) = (kin.speed(), kin.one_minus_v(), kin.one_minus_v2());
    let alpha = kin.alpha();
    let beta = kin.beta(det.gap);
    let k = kin.k_prefactor();

    let free = integrate_damped(
        |x| (-alpha * x * x).exp() * (beta * x).cos() * circular_free_kernel(v, omv, omv2, x),
        alpha,
        &budget_for(k, budget),
    )?
    .scaled(k);
    let stat = vacuum_static_term(det.gap);
    if mirror == Mirror::Absent {
        return TransitionResult::assemble(free.value, 0.0, stat, 0.0, free.error);
    }

    let c = kin.omega() * kin.dz();
    let s = kin.light_cone_root()?;
    let g = |x: f64| kin.image_denominator(x, c);
    let gp = 2.0 * omv2 * s + v * v * x_minus_sin(2.0 * s);
    let pv_pref = kin.omega() / (4.0 * PI.powf(1.5) * kin.gamma());
    let poles = PoleSet::single(s, gp)?;
    let pv = integrate_pv_shifted(
        |x| (-alpha * x * x).exp() * (beta * x).cos(),
        g,
        |x0, t| product_shift(omv, v, x0, t),
        &poles,
        alpha,
        &budget_for(pv_pref, budget),
    )?
    .scaled(pv_pref);
    let res = kin.omega() / (4.0 * PI.sqrt() * kin.gamma()) * (-alpha * s * s).exp() * (beta * s).sin() / gp;
    TransitionResult::assemble(free.value, pv.value, stat, res, free.error + pv.error)
}

/// `a²/(4 sinh²(as/2)) − 1/s²`, the regular remainder of the hyperbolic
/// kernel after removing its `1/s²` part.
pub(crate) fn hyperbolic_remainder(a: f64, s: f64) -> f64 {
    let y = 0.5 * a * s;
    if y.abs() < 0.05 {
        let y2 = y * y;
        let series = -1.0 / 3.0 + y2 * (1.0 / 15.0 + y2 * (-2.0 / 189.0 + y2 * (1.0 / 675.0 - y2 * 2.0 / 10395.0)));
        0.25 * a * a * series
    } else {
        let sh = y.sinh();
        0.25 * a * a / (sh * sh) - 1.0 / (s * s)
    }
}

pub fn transition_uniform(kin: &UniformKinematics, det: &DetectorSpec, budget: &QuadratureBudget) -> Result<TransitionResult> {
    transition_uniform_in(kin, det, budget, Mirror::Present)
}

/// Uniformly accelerated detector at height `Δz`, with or without the mirror.
///
/// In proper time `s`, with `D(s) = (4/a²)sinh²(as/2) − 4Δz²` and its root
/// `S = (2/a) asinh(aΔz)`:
///
/// ```text
/// P = (1/4π)[e^{-Ω²} − √π Ω erfc Ω]
///   − 1/(2π^{3/2}) ∫ cos Ωs e^{-s²/4} [a²/(4sinh²(as/2)) − 1/s²] ds
///   + 1/(2π^{3/2}) PV∫ cos Ωs e^{-s²/4} / D(s) ds
///   + e^{-S²/4} sin ΩS / (2√π D'(S))
/// ```
pub fn transition_uniform_in(
    kin: &UniformKinematics,
    det: &DetectorSpec,
    budget: &QuadratureBudget,
    mirror: Mirror,
) -> Result<TransitionResult> {
    budget.validate()?;
    let (a, w, dz) = (kin.accel(), det.gap, kin.dz());
    let pref = 1.0 / (2.0 * PI.powf(1.5));
    let free = integrate_damped(
        |s| (w * s).cos() * (-0.25 * s * s).exp() * hyperbolic_remainder(a, s),
        0.25,
        &budget_for(pref, budget),
    )?
    .scaled(-pref);
    let stat = vacuum_static_term(w);
    if mirror == Mirror::Absent {
        return TransitionResult::assemble(free.value, 0.0, stat, 0.0, free.error);
    }

    let root = 2.0 / a * (a * dz).asinh();
    let dp = 4.0 * dz * (a * dz).hypot(1.0);
    let d = |s: f64| {
        let h = 2.0 / a * (0.5 * a * s).sinh();
        (h - 2.0 * dz) * (h + 2.0 * dz)
    };
    let shift = |s0: f64, t: f64| {
        let h0 = 2.0 / a * (0.5 * a * s0).sinh();
        let dh = 4.0 / a * (0.25 * a * (2.0 * s0 + t)).cosh() * (0.25 * a * t).sinh();
        dh * (2.0 * h0 + dh)
    };
    let poles = PoleSet::single(root, dp)?;
    let pv = integrate_pv_shifted(
        |s| (w * s).cos() * (-0.25 * s * s).exp(),
        d,
        shift,
        &poles,
        0.25,
        &budget_for(pref, budget),
    )?
    .scaled(pref);
    let res = (w * root).sin() * (-0.25 * root * root).exp() / (2.0 * PI.sqrt() * dp);
    TransitionResult::assemble(free.value, pv.value, stat, res, free.error + pv.error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::derive_circular;

    fn b() -> QuadratureBudget {
        QuadratureBudget::default()
    }

    fn circ(a: f64, r: f64, w: f64, dz: f64) -> TransitionResult {
        transition_circular(&derive_circular(a, r, dz).unwrap(), &DetectorSpec::new(w).unwrap(), &b()).unwrap()
    }

    fn unif(a: f64, w: f64, dz: f64, mirror: Mirror) -> TransitionResult {
        transition_uniform_in(&UniformKinematics::new(a, dz).unwrap(), &DetectorSpec::new(w).unwrap(), &b(), mirror).unwrap()
    }

    #[test]
    fn terms_sum_to_total() {
        let p = circ(2.0, 1.0, 0.5, 0.3);
        let sum = p.term_free_oscillatory + p.term_boundary_pv + p.term_static + p.term_residue;
        assert_eq!(sum, p.probability);
        assert!(p.probability >= -10.0 * p.err_est);
    }

    // Independent evaluation with an unrelated adaptive scheme (QUADPACK's
    // Cauchy-weight rule), frozen.
    #[test]
    fn circular_reference_value() {
        let p = circ(2.0, 1.0, 0.5, 0.3);
        assert!((p.probability - 0.014_367_917_200_628_8).abs() < 1e-9, "{}", p.probability);
    }

    #[test]
    fn uniform_reference_value() {
        let p = unif(3.0, 1.0, 0.5, Mirror::Present);
        assert!((p.probability - 0.032_451_726_68).abs() < 1e-9, "{}", p.probability);
    }

    #[test]
    fn kernel_limit_at_origin() {
        let k = derive_circular(2.0, 1.0, 1.0).unwrap();
        let at0 = circular_free_kernel(k.speed(), k.one_minus_v(), k.one_minus_v2(), 0.0);
        let near = circular_free_kernel(k.speed(), k.one_minus_v(), k.one_minus_v2(), 1e-4);
        assert!((at0 - near).abs() < 1e-7 * at0);
        assert!((at0 - 1.0 / (3.0 * k.one_minus_v2())).abs() < 1e-15);
    }

    #[test]
    fn remainder_series_matches_direct_form() {
        for a in [0.5, 3.0, 20.0] {
            for y in [0.049, 0.0501] {
                let s = 2.0 * y / a;
                let series = {
                    let y2 = y * y;
                    0.25 * a * a * (-1.0 / 3.0 + y2 / 15.0 - 2.0 * y2 * y2 / 189.0 + y2 * y2 * y2 / 675.0)
                };
                assert!((hyperbolic_remainder(a, s) - series).abs() < 1e-11 * a * a);
            }
        }
    }

    #[test]
    fn distant_mirror_term_follows_inverse_square() {
        // The image term decays like -e^{-Ω²}/(8πΔz²), not exponentially.
        for dz in [20.0, 50.0] {
            let with = circ(2.0, 1.0, 0.5, dz).probability;
            let free = transition_circular_in(&derive_circular(2.0, 1.0, dz).unwrap(), &DetectorSpec::new(0.5).unwrap(), &b(), Mirror::Absent)
                .unwrap()
                .probability;
            let asym = -(-0.25f64).exp() / (8.0 * PI * dz * dz);
            assert!(((with - free) - asym).abs() < 0.05 * asym.abs(), "{dz}: {} vs {asym}", with - free);
        }
    }

    #[test]
    fn decreasing_in_gap() {
        let kin = derive_circular(10.0, 1.0, 0.2).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=40 {
            let w = 0.1 * i as f64;
            let p = transition_circular(&kin, &DetectorSpec::new(w).unwrap(), &b()).unwrap().probability;
            assert!(p < prev, "Ω = {w}");
            prev = p;
        }
    }

    #[test]
    fn increasing_in_acceleration() {
        let mut prev = 0.0;
        for i in 0..=59 {
            let a = 0.5 + 0.5 * i as f64;
            let p = circ(a, 0.2, 0.1, 0.2).probability;
            assert!(p > prev, "a = {a}");
            prev = p;
        }
    }

    #[test]
    fn free_kernel_positive() {
        for (a, r) in [(0.01, 0.01), (40.0, 10.0), (2.0, 1.0)] {
            let k = derive_circular(a, r, 1.0).unwrap();
            for i in 1..2000 {
                let x = 0.01 * i as f64;
                let den = x_minus_v_sin(k.one_minus_v(), x) * (x + k.speed() * x.sin());
                assert!(den > 0.0);
            }
        }
    }

    #[test]
    fn stable_under_window_and_truncation_changes() {
        let kin = derive_circular(2.0, 1.0, 0.2).unwrap();
        let det = DetectorSpec::new(0.1).unwrap();
        let base = transition_circular(&kin, &det, &b()).unwrap();
        for alt in [
            QuadratureBudget { pv_window_delta: 2e-3, ..b() },
            QuadratureBudget { pv_window_delta: 5e-4, ..b() },
            QuadratureBudget { truncation_safety: 2.4, ..b() },
        ] {
            let p = transition_circular(&kin, &det, &alt).unwrap();
            assert!((p.probability - base.probability).abs() < 10.0 * base.err_est.max(1e-12));
        }
    }
}
