//! Concurrence harvested by a detector pair, per `λ²`.

use serde::{Deserialize, Serialize};

use crate::correlation::{x_comoving_circular_in, x_sync_two_radii_in, x_uniform_pair_in, XResult};
use crate::error::{Error, Result};
use crate::kinematics::{CircularKinematics, DetectorSpec, PairGeometry, PairKind, UniformKinematics};
use crate::quadrature::QuadratureBudget;
use crate::response::{transition_circular_in, transition_uniform_in, TransitionResult};
use crate::Mirror;

/// Probabilities this far below zero are treated as quadrature noise.
pub const NOISE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarvestResult {
    pub p_a: f64,
    pub p_b: f64,
    pub abs_x: f64,
    pub concurrence: f64,
    pub err_est: f64,
}

fn clamp_probability(p: f64) -> Result<f64> {
    if p < -NOISE_FLOOR || p.is_nan() {
        return Err(Error::NegativeProbability { value: p });
    }
    Ok(p.max(0.0))
}

/// `2·max(0, |X| − √(P_A P_B))`.
///
/// ```
/// use udw::entanglement::concurrence;
/// assert!((concurrence(0.01, 0.01, 0.02).unwrap() - 0.02).abs() < 1e-15);
/// assert_eq!(concurrence(0.01, 0.04, 0.02).unwrap(), 0.0);
/// ```
pub fn concurrence(p_a: f64, p_b: f64, abs_x: f64) -> Result<f64> {
    let (p_a, p_b) = (clamp_probability(p_a)?, clamp_probability(p_b)?);
    if !(abs_x >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "abs_x",
            reason: format!("{abs_x} is not a non-negative number"),
        });
    }
    Ok(2.0 * (abs_x - (p_a * p_b).sqrt()).max(0.0))
}

/// Height at which `P_B` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PbBoundary {
    /// Same height as detector `A`.
    Dz,
    /// The actual height of detector `B`.
    #[default]
    DzPlusDd,
}

/// Worldlines of the two detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairTrajectory {
    CircularComoving { accel: f64, radius: f64 },
    /// Common angular velocity, independent radii.
    CircularSync { omega: f64, radius_a: f64, radius_b: f64 },
    Uniform { accel: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    pub trajectory: PairTrajectory,
    pub gap: f64,
    pub dd: f64,
    pub dz: f64,
    #[serde(default)]
    pub pb_boundary: PbBoundary,
    #[serde(default)]
    pub mirror: Mirror,
}

impl PairConfig {
    pub fn new(trajectory: PairTrajectory, gap: f64, dd: f64, dz: f64) -> Self {
        Self {
            trajectory,
            gap,
            dd,
            dz,
            pb_boundary: PbBoundary::default(),
            mirror: Mirror::Present,
        }
    }

    pub fn with_pb_boundary(self, pb_boundary: PbBoundary) -> Self {
        Self { pb_boundary, ..self }
    }

    pub fn with_mirror(self, mirror: Mirror) -> Self {
        Self { mirror, ..self }
    }

    pub fn dz_b(&self) -> f64 {
        match self.pb_boundary {
            PbBoundary::Dz => self.dz,
            PbBoundary::DzPlusDd => self.dz + self.dd,
        }
    }
}

/// `P_A`, `P_B`, `X` and the concurrence of one pair configuration.
///
/// The three pieces are independent and run concurrently.
pub fn harvest_pair(cfg: &PairConfig, budget: &QuadratureBudget) -> Result<HarvestResult> {
    harvest_pair_detailed(cfg, budget).map(|(h, ..)| h)
}

/// Like [`harvest_pair`], also returning the components.
pub fn harvest_pair_detailed(
    cfg: &PairConfig,
    budget: &QuadratureBudget,
) -> Result<(HarvestResult, TransitionResult, TransitionResult, XResult)> {
    let det = DetectorSpec::new(cfg.gap)?;
    let mirror = cfg.mirror;
    let (dz, dz_b) = (cfg.dz, cfg.dz_b());

    let (pa, (pb, x)) = match cfg.trajectory {
        PairTrajectory::CircularComoving { accel, radius } => {
            let geom = PairGeometry::new(cfg.dd, dz, PairKind::CircularComoving)?;
            let ka = CircularKinematics::new(accel, radius, dz)?;
            let kb = ka.with_dz(dz_b)?;
            rayon::join(
                || transition_circular_in(&ka, &det, budget, mirror),
                || {
                    rayon::join(
                        || transition_circular_in(&kb, &det, budget, mirror),
                        || x_comoving_circular_in(&ka, &geom, &det, budget, mirror),
                    )
                },
            )
        }
        PairTrajectory::CircularSync { omega, radius_a, radius_b } => {
            let geom = PairGeometry::new(cfg.dd, dz, PairKind::CircularSyncTwoRadii)?;
            let ka = CircularKinematics::from_angular_velocity(omega, radius_a, dz)?;
            let kb = CircularKinematics::from_angular_velocity(omega, radius_b, dz_b)?;
            rayon::join(
                || transition_circular_in(&ka, &det, budget, mirror),
                || {
                    rayon::join(
                        || transition_circular_in(&kb, &det, budget, mirror),
                        || x_sync_two_radii_in(&ka, &kb, &geom, &det, budget, mirror),
                    )
                },
            )
        }
        PairTrajectory::Uniform { accel } => {
            let geom = PairGeometry::new(cfg.dd, dz, PairKind::UniformPair)?;
            let ka = UniformKinematics::new(accel, dz)?;
            let kb = ka.with_dz(dz_b)?;
            rayon::join(
                || transition_uniform_in(&ka, &det, budget, mirror),
                || {
                    rayon::join(
                        || transition_uniform_in(&kb, &det, budget, mirror),
                        || x_uniform_pair_in(&ka, &geom, &det, budget, mirror),
                    )
                },
            )
        }
    };
    let (pa, pb, x) = (pa?, pb?, x?);
    let c = concurrence(pa.probability, pb.probability, x.abs_x)?;
    let (a, b) = (pa.probability.max(0.0), pb.probability.max(0.0));
    let geo = (a * b).sqrt();
    let geo_err = if geo > 0.0 {
        (b * pa.err_est + a * pb.err_est) / (2.0 * geo)
    } else {
        (pa.err_est * pb.err_est).sqrt()
    };
    let result = HarvestResult {
        p_a: pa.probability,
        p_b: pb.probability,
        abs_x: x.abs_x,
        concurrence: c,
        err_est: 2.0 * (x.err_est + geo_err),
    };
    Ok((result, pa, pb, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::derive_circular;
    use crate::response::transition_circular;
    use proptest::prelude::*;

    #[test]
    fn concurrence_examples() {
        assert_eq!(concurrence(0.01, 0.01, 0.005).unwrap(), 0.0);
        assert!((concurrence(0.01, 0.01, 0.02).unwrap() - 0.02).abs() < 1e-15);
        assert_eq!(concurrence(0.01, 0.04, 0.02).unwrap(), 0.0);
    }

    #[test]
    fn noise_floor() {
        assert_eq!(concurrence(-5e-10, 0.01, 0.1).unwrap(), 0.2);
        assert!(matches!(concurrence(-1e-6, 0.01, 0.1), Err(Error::NegativeProbability { .. })));
    }

    proptest! {
        #[test]
        fn algebra(pa in 0.0f64..1.0, pb in 0.0f64..1.0, x in 0.0f64..1.0) {
            let c = concurrence(pa, pb, x).unwrap();
            prop_assert!(c >= 0.0 && c <= 2.0 * x);
            prop_assert_eq!(c, concurrence(pb, pa, x).unwrap());
            prop_assert_eq!(c, 2.0 * (x - (pa * pb).sqrt()).max(0.0));
        }
    }

    #[test]
    fn p_b_uses_shifted_height() {
        let b = QuadratureBudget::default();
        let cfg = PairConfig::new(PairTrajectory::CircularComoving { accel: 1.0, radius: 1.0 }, 0.1, 0.2, 0.2);
        let h = harvest_pair(&cfg, &b).unwrap();
        let direct = transition_circular(&derive_circular(1.0, 1.0, 0.4).unwrap(), &DetectorSpec::new(0.1).unwrap(), &b).unwrap();
        assert_eq!(h.p_b, direct.probability);
        let same = harvest_pair(&cfg.with_pb_boundary(PbBoundary::Dz), &b).unwrap();
        assert_eq!(same.p_a, same.p_b);
    }

    #[test]
    fn reference_pair() {
        let b = QuadratureBudget::default();
        let cfg = PairConfig::new(PairTrajectory::CircularComoving { accel: 1.0, radius: 1.0 }, 0.1, 0.2, 0.2);
        let h = harvest_pair(&cfg, &b).unwrap();
        assert!((h.abs_x - 0.483_379_580_4).abs() < 1e-8);
        assert!((h.concurrence - 2.0 * (h.abs_x - (h.p_a * h.p_b).sqrt())).abs() < 1e-15);
        assert!(h.concurrence > 0.9);
    }
}
