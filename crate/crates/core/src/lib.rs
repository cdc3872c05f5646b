//! Unruh-DeWitt detectors in circular and uniformly accelerated motion near a
//! reflecting plane.
//!
//! The crate computes, per unit coupling squared:
//!
//! - the single-detector transition probability ([`response`]),
//! - the nonlocal correlation term `X` for a detector pair ([`correlation`]),
//! - the concurrence harvested by the pair ([`entanglement`]),
//!
//! and drives parameter sweeps and critical-value searches over them
//! ([`sweep`], [`critical`]). Every `iε` in the underlying Wightman function is
//! resolved analytically into principal-value integrals plus residue terms
//! ([`quadrature`]); [`oracle`] is an independent brute-force evaluator at
//! finite `ε` used to validate those reductions.
//!
//! All lengths and times are measured in units of the switching width `σ`.
//!
//! ```
//! use udw::kinematics::{derive_circular, DetectorSpec};
//! use udw::quadrature::QuadratureBudget;
//! use udw::response::transition_circular;
//!
//! let kin = derive_circular(2.0, 1.0, 0.3).unwrap();
//! let det = DetectorSpec::new(0.5).unwrap();
//! let p = transition_circular(&kin, &det, &QuadratureBudget::default()).unwrap();
//! assert!(p.probability > 0.0);
//! ```

pub mod config;
pub mod correlation;
pub mod critical;
pub mod entanglement;
pub mod error;
pub mod kinematics;
pub mod oracle;
pub mod quadrature;
pub mod response;
pub mod specfun;
pub mod sweep;

pub use error::{Error, Result};

/// Whether the reflecting plane at `z = 0` is present.
///
/// `Absent` drops the image term of the Wightman function, giving the
/// free-space value through the same code path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mirror {
    #[default]
    Present,
    Absent,
}
