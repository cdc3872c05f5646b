//! Critical parameter values located by bisection on a boolean predicate.
//!
//! | kind | threshold axis | predicate true when |
//! |---|---|---|
//! | `accel_monotonicity` | `a` | `P(R)` has no interior local maximum on `R_i = R_max·i/N` |
//! | `dz_intersection` | `Δz` | `P(a; R₁) − P(a; R₂)` has no sign change on the log grid `a ∈ [a_min, a_max]` |
//! | `omega_intersection` | `Ω` | as `dz_intersection`, with `Ω` varied at fixed `Δz` |
//! | `circ_uniform_crossing` | `a` | `P_uniform(a) > P_circular(a)` |
//!
//! Grids default to `N = 400`, `R_max = 10`, `a ∈ [1e-3, 40]`, `(R₁, R₂) = (0.02, 2)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{CircularKinematics, DetectorSpec, UniformKinematics};
use crate::quadrature::QuadratureBudget;
use crate::response::{transition_circular_in, transition_uniform_in};
use crate::sweep::shape::interior_peaks;
use crate::Mirror;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum CriticalKind {
    AccelMonotonicity,
    DzIntersection,
    OmegaIntersection,
    CircUniformCrossing,
}

/// Sampling grids of the predicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredicateGrid {
    pub points: usize,
    pub r_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub r_small: f64,
    pub r_large: f64,
    /// Peaks with prominence below this are treated as flat.
    pub peak_prominence: f64,
}

impl Default for PredicateGrid {
    fn default() -> Self {
        Self {
            points: 400,
            r_max: 10.0,
            a_min: 1e-3,
            a_max: 40.0,
            r_small: 0.02,
            r_large: 2.0,
            peak_prominence: 1e-12,
        }
    }
}

impl PredicateGrid {
    pub fn refined(self) -> Self {
        Self {
            points: 2 * self.points,
            ..self
        }
    }

    fn radii(&self) -> Vec<f64> {
        (1..=self.points).map(|i| self.r_max * i as f64 / self.points as f64).collect()
    }

    fn accels(&self) -> Vec<f64> {
        let n = self.points;
        let (lo, hi) = (self.a_min.ln(), self.a_max.ln());
        (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalQuery {
    pub kind: CriticalKind,
    /// `Ω`; ignored by `omega_intersection`.
    pub gap: f64,
    /// `Δz`; ignored by `dz_intersection`.
    pub dz: f64,
    /// `R` for `circ_uniform_crossing`.
    pub radius: f64,
    pub search: (f64, f64),
    pub tolerance: f64,
    pub grid: PredicateGrid,
    pub mirror: Mirror,
}

impl CriticalQuery {
    /// `a_c` at fixed `(Ω, Δz)`.
    pub fn accel_monotonicity(gap: f64, dz: f64) -> Self {
        Self {
            kind: CriticalKind::AccelMonotonicity,
            gap,
            dz,
            radius: 0.0,
            search: (4.0, 16.0),
            tolerance: 1e-3,
            grid: PredicateGrid::default(),
            mirror: Mirror::Present,
        }
    }

    /// `Δz_c` at fixed `Ω`.
    pub fn dz_intersection(gap: f64) -> Self {
        Self {
            kind: CriticalKind::DzIntersection,
            search: (0.3, 2.0),
            ..Self::accel_monotonicity(gap, 0.0)
        }
    }

    /// `Ω_c` without the mirror.
    pub fn omega_intersection() -> Self {
        Self {
            kind: CriticalKind::OmegaIntersection,
            search: (0.3, 1.5),
            mirror: Mirror::Absent,
            ..Self::accel_monotonicity(0.0, 1.0)
        }
    }

    /// Acceleration at which the uniform and circular probabilities cross.
    pub fn circ_uniform_crossing(radius: f64, gap: f64, dz: f64) -> Self {
        Self {
            kind: CriticalKind::CircUniformCrossing,
            radius,
            search: (10.0, 40.0),
            ..Self::accel_monotonicity(gap, dz)
        }
    }

    pub fn with_search(self, lo: f64, hi: f64) -> Self {
        Self { search: (lo, hi), ..self }
    }

    pub fn with_grid(self, grid: PredicateGrid) -> Self {
        Self { grid, ..self }
    }

    pub fn with_tolerance(self, tolerance: f64) -> Self {
        Self { tolerance, ..self }
    }

    /// Tolerances fine enough for the predicate differences, which can be
    /// ten orders below the probabilities themselves.
    pub fn recommended_budget(&self) -> QuadratureBudget {
        QuadratureBudget {
            abs_tol: 1e-15,
            rel_tol: 1e-11,
            max_subdivisions: 5000,
            ..QuadratureBudget::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.search;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "search",
                reason: format!("[{lo}, {hi}] must be positive and ordered"),
            });
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tolerance",
                reason: format!("{} is not positive", self.tolerance),
            });
        }
        if self.grid.points < 3 || !(self.grid.a_min > 0.0 && self.grid.a_max > self.grid.a_min && self.grid.r_max > 0.0) {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: "needs at least 3 points and positive ordered ranges".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalResult {
    pub kind: CriticalKind,
    pub value: f64,
    /// Final bracket; its width is below the tolerance.
    pub bracket: (f64, f64),
    pub predicate_at_lo: bool,
    pub predicate_at_hi: bool,
    /// Predicate evaluations, endpoints included.
    pub evaluations: usize,
}

fn p_circular(a: f64, r: f64, gap: f64, dz: f64, mirror: Mirror, budget: &QuadratureBudget) -> Result<f64> {
    let kin = CircularKinematics::new(a, r, dz)?;
    Ok(transition_circular_in(&kin, &DetectorSpec::new(gap)?, budget, mirror)?.probability)
}

fn p_uniform(a: f64, gap: f64, dz: f64, mirror: Mirror, budget: &QuadratureBudget) -> Result<f64> {
    let kin = UniformKinematics::new(a, dz)?;
    Ok(transition_uniform_in(&kin, &DetectorSpec::new(gap)?, budget, mirror)?.probability)
}

/// `P(a; R₁) − P(a; R₂)` on the log-spaced acceleration grid.
pub fn radius_difference(gap: f64, dz: f64, grid: &PredicateGrid, mirror: Mirror, budget: &QuadratureBudget) -> Result<Vec<f64>> {
    grid.accels()
        .par_iter()
        .map(|&a| Ok(p_circular(a, grid.r_small, gap, dz, mirror, budget)? - p_circular(a, grid.r_large, gap, dz, mirror, budget)?))
        .collect()
}

fn has_sign_change(d: &[f64]) -> bool {
    d.windows(2).any(|w| (w[0] < 0.0 && w[1] > 0.0) || (w[0] > 0.0 && w[1] < 0.0))
}

/// The predicate of `query` at threshold value `x`.
pub fn predicate(query: &CriticalQuery, x: f64, budget: &QuadratureBudget) -> Result<bool> {
    let g = &query.grid;
    match query.kind {
        CriticalKind::AccelMonotonicity => {
            let p: Vec<f64> = g
                .radii()
                .par_iter()
                .map(|&r| p_circular(x, r, query.gap, query.dz, query.mirror, budget))
                .collect::<Result<_>>()?;
            Ok(interior_peaks(&p, g.peak_prominence).is_empty())
        }
        CriticalKind::DzIntersection => Ok(!has_sign_change(&radius_difference(query.gap, x, g, query.mirror, budget)?)),
        CriticalKind::OmegaIntersection => Ok(!has_sign_change(&radius_difference(x, query.dz, g, query.mirror, budget)?)),
        CriticalKind::CircUniformCrossing => {
            let pu = p_uniform(x, query.gap, query.dz, query.mirror, budget)?;
            let pc = p_circular(x, query.radius, query.gap, query.dz, query.mirror, budget)?;
            Ok(pu > pc)
        }
    }
}

/// Bisects the predicate of `query` down to `query.tolerance`.
///
/// Fails with [`Error::NoTransitionInInterval`] when both ends of the search
/// interval give the same answer.
pub fn find_critical(query: &CriticalQuery, budget: &QuadratureBudget) -> Result<CriticalResult> {
    query.validate()?;
    budget.validate()?;
    let (mut lo, mut hi) = query.search;
    let at_lo = predicate(query, lo, budget)?;
    let at_hi = predicate(query, hi, budget)?;
    let mut evaluations = 2;
    if at_lo == at_hi {
        return Err(Error::NoTransitionInInterval { lo, hi });
    }
    while hi - lo > query.tolerance {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        if predicate(query, mid, budget)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalResult {
        kind: query.kind,
        value: 0.5 * (lo + hi),
        bracket: (lo, hi),
        predicate_at_lo: at_lo,
        predicate_at_hi: at_hi,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_answer_at_both_ends_is_an_error() {
        let q = CriticalQuery::circ_uniform_crossing(2.0, 0.1, 0.05).with_search(1.0, 2.0);
        let b = q.recommended_budget();
        assert!(matches!(find_critical(&q, &b), Err(Error::NoTransitionInInterval { .. })));
    }

    #[test]
    fn rejects_bad_interval() {
        let q = CriticalQuery::accel_monotonicity(0.1, 0.2).with_search(5.0, 4.0);
        assert!(find_critical(&q, &QuadratureBudget::default()).is_err());
    }

    #[test]
    fn crossing_is_bracketed() {
        let q = CriticalQuery::circ_uniform_crossing(2.0, 0.1, 0.05).with_tolerance(1e-2);
        let b = q.recommended_budget();
        let r = find_critical(&q, &b).unwrap();
        assert!(r.bracket.1 - r.bracket.0 <= 1e-2);
        assert!(r.predicate_at_lo != r.predicate_at_hi);
        assert!((20.7..21.6).contains(&r.value), "{}", r.value);
    }
}
