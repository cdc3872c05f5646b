//! JSON run configuration and the CSV output row.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::entanglement::{PairConfig, PairTrajectory, PbBoundary};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureBudget;
use crate::Mirror;

/// Which trajectory family to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryChoice {
    #[default]
    Circular,
    Uniform,
    /// Circular then uniform, one row each.
    Both,
}

impl TrajectoryChoice {
    pub fn families(self) -> &'static [Family] {
        match self {
            Self::Circular => &[Family::Circular],
            Self::Uniform => &[Family::Uniform],
            Self::Both => &[Family::Circular, Family::Uniform],
        }
    }
}

/// A single trajectory family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Circular,
    Uniform,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Self::Circular => "circular",
            Self::Uniform => "uniform",
        }
    }
}

/// One parameter point, as read from `--config`.
///
/// ```
/// let cfg = udw::config::RunConfig::from_json(r#"{"a_sigma": 2, "R_over_sigma": 0.5}"#).unwrap();
/// assert_eq!(cfg.a_sigma, 2.0);
/// assert_eq!(cfg.omega_sigma, 0.1);
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub a_sigma: f64,
    #[serde(rename = "R_over_sigma")]
    pub r_over_sigma: f64,
    /// Radius of detector B; when set, circular pairs share the angular
    /// velocity of A instead of its acceleration.
    #[serde(rename = "R_B_over_sigma", skip_serializing_if = "Option::is_none")]
    pub r_b_over_sigma: Option<f64>,
    #[serde(rename = "Omega_sigma")]
    pub omega_sigma: f64,
    pub dz_over_sigma: f64,
    pub dd_over_sigma: f64,
    pub trajectory: TrajectoryChoice,
    pub pb_boundary: PbBoundary,
    pub mirror: Mirror,
    pub budget: QuadratureBudget,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            a_sigma: 1.0,
            r_over_sigma: 1.0,
            r_b_over_sigma: None,
            omega_sigma: 0.1,
            dz_over_sigma: 0.2,
            dd_over_sigma: 0.2,
            trajectory: TrajectoryChoice::Circular,
            pb_boundary: PbBoundary::DzPlusDd,
            mirror: Mirror::Present,
            budget: QuadratureBudget::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("a_sigma", self.a_sigma),
            ("R_over_sigma", self.r_over_sigma),
            ("Omega_sigma", self.omega_sigma),
            ("dz_over_sigma", self.dz_over_sigma),
            ("dd_over_sigma", self.dd_over_sigma),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} = {v} is not finite")));
            }
        }
        for (name, v) in [("a_sigma", self.a_sigma), ("R_over_sigma", self.r_over_sigma), ("dz_over_sigma", self.dz_over_sigma)] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dd_over_sigma < 0.0 {
            return Err(Error::Config(format!("dd_over_sigma must be non-negative, got {}", self.dd_over_sigma)));
        }
        if let Some(rb) = self.r_b_over_sigma {
            if !(rb > 0.0 && rb.is_finite()) {
                return Err(Error::Config(format!("R_B_over_sigma must be positive, got {rb}")));
            }
        }
        self.budget.validate().map_err(|e| Error::Config(e.to_string()))
    }

    /// Pair configuration of the given family.
    pub fn pair(&self, family: Family) -> Result<PairConfig> {
        let trajectory = match (family, self.r_b_over_sigma) {
            (Family::Uniform, _) => PairTrajectory::Uniform { accel: self.a_sigma },
            (Family::Circular, None) => PairTrajectory::CircularComoving {
                accel: self.a_sigma,
                radius: self.r_over_sigma,
            },
            (Family::Circular, Some(radius_b)) => {
                let kin = crate::kinematics::CircularKinematics::new(self.a_sigma, self.r_over_sigma, self.dz_over_sigma)?;
                PairTrajectory::CircularSync {
                    omega: kin.omega(),
                    radius_a: self.r_over_sigma,
                    radius_b,
                }
            }
        };
        Ok(PairConfig::new(trajectory, self.omega_sigma, self.dd_over_sigma, self.dz_over_sigma)
            .with_pb_boundary(self.pb_boundary)
            .with_mirror(self.mirror))
    }
}

/// Column names of every CSV the tool writes.
pub const CSV_HEADER: &str = "a_sigma,R_sigma,Omega_sigma,dz_sigma,dd_sigma,traj,P_A,P_B,absX,concurrence,err_est,error";

/// One output row. Quantities not computed, or lost to an error, are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRow {
    pub a_sigma: f64,
    #[serde(rename = "R_sigma")]
    pub r_sigma: f64,
    #[serde(rename = "Omega_sigma")]
    pub omega_sigma: f64,
    pub dz_sigma: f64,
    pub dd_sigma: f64,
    pub traj: String,
    #[serde(rename = "P_A")]
    pub p_a: Option<f64>,
    #[serde(rename = "P_B")]
    pub p_b: Option<f64>,
    #[serde(rename = "absX")]
    pub abs_x: Option<f64>,
    pub concurrence: Option<f64>,
    pub err_est: Option<f64>,
    pub error: String,
}

impl OutputRow {
    pub fn blank(cfg: &RunConfig, family: Family) -> Self {
        Self {
            a_sigma: cfg.a_sigma,
            r_sigma: cfg.r_over_sigma,
            omega_sigma: cfg.omega_sigma,
            dz_sigma: cfg.dz_over_sigma,
            dd_sigma: cfg.dd_over_sigma,
            traj: family.label().into(),
            p_a: None,
            p_b: None,
            abs_x: None,
            concurrence: None,
            err_est: None,
            error: String::new(),
        }
    }

    pub fn failed(mut self, err: &Error) -> Self {
        self.error = err.to_string();
        self
    }

    pub fn is_error(&self) -> bool {
        !self.error.is_empty()
    }
}

/// Writes rows with [`CSV_HEADER`] to any writer.
pub fn write_rows<W: std::io::Write>(out: W, rows: &[OutputRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(',')).map_err(|e| Error::Config(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Config(e.to_string()))
}

pub fn read_rows<R: std::io::Read>(input: R) -> Result<Vec<OutputRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(|e| Error::Config(e.to_string())))
        .collect()
}
