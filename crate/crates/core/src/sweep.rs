//! Parameter sweeps and the qualitative shape tests applied to them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Family, OutputRow, RunConfig, TrajectoryChoice};
use crate::entanglement::harvest_pair;
use crate::error::{Error, Result};
use crate::kinematics::{CircularKinematics, DetectorSpec, UniformKinematics};
use crate::quadrature::QuadratureBudget;
use crate::response::{transition_circular_in, transition_uniform_in, TransitionResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Axis {
    #[serde(rename = "R_over_sigma")]
    #[value(name = "R_over_sigma", alias = "R", alias = "r")]
    ROverSigma,
    #[serde(rename = "a_sigma")]
    #[value(name = "a_sigma", alias = "a")]
    ASigma,
    #[serde(rename = "Omega_sigma")]
    #[value(name = "Omega_sigma", alias = "Omega", alias = "omega")]
    OmegaSigma,
    #[serde(rename = "dz_over_sigma")]
    #[value(name = "dz_over_sigma", alias = "dz")]
    DzOverSigma,
    #[serde(rename = "dd_over_sigma")]
    #[value(name = "dd_over_sigma", alias = "dd")]
    DdOverSigma,
}

impl Axis {
    pub fn apply(self, cfg: &RunConfig, value: f64) -> RunConfig {
        let mut c = cfg.clone();
        match self {
            Self::ROverSigma => c.r_over_sigma = value,
            Self::ASigma => c.a_sigma = value,
            Self::OmegaSigma => c.omega_sigma = value,
            Self::DzOverSigma => c.dz_over_sigma = value,
            Self::DdOverSigma => c.dd_over_sigma = value,
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `P_A` only.
    #[default]
    Probability,
    /// `P_A`, `P_B`, `|X|` and the concurrence.
    Concurrence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    #[serde(default)]
    pub spacing: Spacing,
    /// Values of every parameter not on the axis.
    pub fixed: RunConfig,
    pub trajectory: TrajectoryChoice,
    pub quantity: Quantity,
}

impl SweepSpec {
    pub fn new(axis: Axis, start: f64, stop: f64, steps: usize, fixed: RunConfig) -> Self {
        Self {
            axis,
            start,
            stop,
            steps,
            spacing: Spacing::Linear,
            trajectory: fixed.trajectory,
            fixed,
            quantity: Quantity::Probability,
        }
    }

    pub fn with_quantity(self, quantity: Quantity) -> Self {
        Self { quantity, ..self }
    }

    pub fn with_spacing(self, spacing: Spacing) -> Self {
        Self { spacing, ..self }
    }

    pub fn with_trajectory(self, trajectory: TrajectoryChoice) -> Self {
        Self { trajectory, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start < self.stop) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::Config(format!("sweep range {}:{} is not increasing", self.start, self.stop)));
        }
        if self.steps < 2 {
            return Err(Error::Config(format!("sweep needs at least 2 steps, got {}", self.steps)));
        }
        if self.spacing == Spacing::Log && !(self.start > 0.0) {
            return Err(Error::Config("log spacing needs a positive start".into()));
        }
        self.fixed.validate()
    }

    /// Axis values in ascending order; the endpoints are exact.
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|i| {
                if i == 0 {
                    return self.start;
                }
                if i == n - 1 {
                    return self.stop;
                }
                let t = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.start + (self.stop - self.start) * t,
                    Spacing::Log => (self.start.ln() + (self.stop.ln() - self.start.ln()) * t).exp(),
                }
            })
            .collect()
    }
}

/// Transition probability of detector A alone.
pub fn probability(cfg: &RunConfig, family: Family, budget: &QuadratureBudget) -> Result<TransitionResult> {
    let det = DetectorSpec::new(cfg.omega_sigma)?;
    match family {
        Family::Circular => {
            let kin = CircularKinematics::new(cfg.a_sigma, cfg.r_over_sigma, cfg.dz_over_sigma)?;
            transition_circular_in(&kin, &det, budget, cfg.mirror)
        }
        Family::Uniform => {
            let kin = UniformKinematics::new(cfg.a_sigma, cfg.dz_over_sigma)?;
            transition_uniform_in(&kin, &det, budget, cfg.mirror)
        }
    }
}

/// Evaluates one point; failures land in the row's `error` column.
pub fn evaluate_point(cfg: &RunConfig, family: Family, quantity: Quantity, budget: &QuadratureBudget) -> OutputRow {
    let row = OutputRow::blank(cfg, family);
    match quantity {
        Quantity::Probability => match probability(cfg, family, budget) {
            Ok(p) => OutputRow {
                p_a: Some(p.probability),
                err_est: Some(p.err_est),
                ..row
            },
            Err(e) => row.failed(&e),
        },
        Quantity::Concurrence => match cfg.pair(family).and_then(|pair| harvest_pair(&pair, budget)) {
            Ok(h) => OutputRow {
                p_a: Some(h.p_a),
                p_b: Some(h.p_b),
                abs_x: Some(h.abs_x),
                concurrence: Some(h.concurrence),
                err_est: Some(h.err_est),
                ..row
            },
            Err(e) => row.failed(&e),
        },
    }
}

/// Runs every grid point, `workers` at a time (all cores when `None`).
/// Rows come back in axis order, families in the order circular, uniform.
pub fn run_sweep(spec: &SweepSpec, budget: &QuadratureBudget, workers: Option<usize>) -> Result<Vec<OutputRow>> {
    spec.validate()?;
    budget.validate()?;
    let points: Vec<(RunConfig, Family)> = spec
        .values()
        .into_iter()
        .flat_map(|v| {
            let cfg = spec.axis.apply(&spec.fixed, v);
            spec.trajectory.families().iter().map(move |&f| (cfg.clone(), f))
        })
        .collect();
    let run = || {
        points
            .par_iter()
            .map(|(cfg, family)| evaluate_point(cfg, *family, spec.quantity, budget))
            .collect::<Vec<_>>()
    };
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

/// Qualitative curve features.
pub mod shape {
    /// Interior local maxima whose prominence exceeds `min_prominence`.
    ///
    /// The prominence of a peak is its height above the higher of the two
    /// minima separating it from taller points (or the ends of the curve).
    ///
    /// ```
    /// use udw::sweep::shape::interior_peaks;
    /// let y = [0.0, 1.0, 0.2, 0.5, 0.1, 0.1];
    /// assert_eq!(interior_peaks(&y, 0.05), vec![1, 3]);
    /// assert_eq!(interior_peaks(&y, 0.35), vec![1]);
    /// ```
    pub fn interior_peaks(y: &[f64], min_prominence: f64) -> Vec<usize> {
        let n = y.len();
        let mut out = Vec::new();
        let mut i = 1;
        while i + 1 < n {
            if y[i] > y[i - 1] {
                // Walk across a flat top.
                let mut j = i;
                while j + 1 < n && y[j + 1] == y[i] {
                    j += 1;
                }
                if j + 1 < n && y[j + 1] < y[i] {
                    let left = y[..i].iter().rev().take_while(|&&v| v <= y[i]).fold(f64::INFINITY, |m, &v| m.min(v));
                    let right = y[j + 1..].iter().take_while(|&&v| v <= y[i]).fold(f64::INFINITY, |m, &v| m.min(v));
                    if y[i] - left.max(right) > min_prominence {
                        out.push(i);
                    }
                }
                i = j + 1;
            } else {
                i += 1;
            }
        }
        out
    }

    /// `|q_max − q_inner| < rel·|q_max|`.
    pub fn is_plateau(q_max: f64, q_inner: f64, rel: f64) -> bool {
        (q_max - q_inner).abs() < rel * q_max.abs()
    }

    /// Positive, then an interior run of exact zeros, then positive again.
    pub fn zero_window(y: &[f64]) -> Option<(usize, usize)> {
        let first_zero = y.iter().position(|&v| v == 0.0)?;
        if first_zero == 0 {
            return None;
        }
        let run_end = first_zero + y[first_zero..].iter().take_while(|&&v| v == 0.0).count();
        if run_end < y.len() && y[run_end..].iter().any(|&v| v > 0.0) && run_end - first_zero >= 2 {
            Some((first_zero, run_end - 1))
        } else {
            None
        }
    }

    /// Rises above its first value to an interior maximum, then falls to
    /// below `zero_tol` of that maximum by the end.
    pub fn rises_then_falls_to_zero(y: &[f64], zero_tol: f64) -> bool {
        let Some((imax, &m)) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) else {
            return false;
        };
        m > 0.0 && imax > 0 && imax + 1 < y.len() && y[0] < m && *y.last().unwrap() <= zero_tol * m
    }
}
