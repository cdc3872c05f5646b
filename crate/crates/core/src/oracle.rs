//! Brute-force reference evaluator.
//!
//! The transition probability and `X` are evaluated directly as double
//! integrals over the two proper times, with the Wightman function kept at a
//! finite regulator `ε`:
//!
//! ```text
//! W_ε(x, x') = −1/(4π²) [1/σ_ε(Δz) − 1/σ_ε(z + z')]
//! σ_ε(ζ)     = (t − t' − iε)² − |Δx_∥|² − ζ²
//! ```
//!
//! The default [`Regulator::Covariant`] shifts the separation along the sum
//! of the two four-velocities instead of along the time axis:
//!
//! ```text
//! σ_ε = (Δx − iε(u + u')/2)² = σ − iε Δx·(u + u') − ε²(u + u')²/4
//! ```
//!
//! For inertial motion this is `(Δτ − iε)²`. On stationary worldlines it
//! depends on the proper-time lag alone, so the regulated singularities stay
//! at distance `ε` from the real axis however fast the detector moves and the
//! raw values are analytic in `ε`. The plain coordinate-time regulator puts
//! them at `ε/ṫ` or `εṫ` and converges only once `εṫ² ≪ 1`.
//!
//! No principal values, residues or stationarity are assumed. The integral
//! is computed for every `ε` of an [`EpsilonLadder`] at once and the
//! `ε → 0` limit is taken by polynomial extrapolation.
//!
//! Quadrature is nested adaptive Gauss-Kronrod. The inner integral runs along
//! the proper-time lag with breakpoints graded geometrically in `ε` around
//! the lag where the regulated denominators are sharp (coincidence, light-cone
//! crossings of the free and image terms, and the change of time ordering).
//! This reaches the finest `ε` of the default ladder without a dense grid.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::correlation::{x_comoving_circular_in, x_sync_two_radii_in, x_uniform_pair_in};
use crate::error::{positive, Error, Result};
use crate::kinematics::{x_minus_v_sin, CircularKinematics, DetectorSpec, PairGeometry, PairKind, UniformKinematics};
use crate::quadrature::{bisect, integrate_segments, QuadratureBudget};
use crate::response::{transition_circular_in, transition_uniform_in};
use crate::Mirror;

/// How `ε` enters `σ_ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regulator {
    /// Shift along `(u + u')/2`.
    #[default]
    Covariant,
    /// `ε` used as is.
    CoordinateTime,
}

/// Regulator values and resolution of the brute-force evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpsilonLadder {
    /// Strictly descending positive regulators.
    pub eps_values: Vec<f64>,
    /// Degree of the extrapolating polynomial in `ε`.
    pub extrapolation_order: usize,
    /// Gauss-Kronrod nodes per dimension before adaptive refinement.
    pub grid_points_per_dim: usize,
    /// Integration range `[−L, L]` for each proper time.
    pub domain_halfwidth: f64,
    /// Relative tolerance of both nested integrations.
    pub rel_tol: f64,
    /// Absolute tolerance of both nested integrations.
    pub abs_tol: f64,
    pub regulator: Regulator,
    /// Measure `ε` in units of `1/max(1, γω)` for circular worldlines, so the
    /// ladder sits equally deep in the small-`ε` regime at any rotation rate.
    pub scale_by_rotation: bool,
}

impl Default for EpsilonLadder {
    fn default() -> Self {
        Self {
            eps_values: vec![1e-2, 5e-3, 2.5e-3],
            extrapolation_order: 2,
            grid_points_per_dim: 4096,
            domain_halfwidth: 8.0,
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            regulator: Regulator::Covariant,
            scale_by_rotation: true,
        }
    }
}

impl EpsilonLadder {
    pub fn validate(&self) -> Result<()> {
        if self.eps_values.is_empty() || self.eps_values.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "eps_values",
                reason: "need at least one positive value".into(),
            });
        }
        if self.eps_values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter {
                name: "eps_values",
                reason: "must be strictly descending".into(),
            });
        }
        if self.extrapolation_order >= self.eps_values.len() {
            return Err(Error::InvalidParameter {
                name: "extrapolation_order",
                reason: format!("order {} needs {} regulators", self.extrapolation_order, self.extrapolation_order + 1),
            });
        }
        if self.grid_points_per_dim < 21 {
            return Err(Error::InvalidParameter {
                name: "grid_points_per_dim",
                reason: "at least one 21-point panel".into(),
            });
        }
        positive("domain_halfwidth", self.domain_halfwidth)?;
        positive("rel_tol", self.rel_tol)?;
        positive("abs_tol", self.abs_tol)?;
        Ok(())
    }

    /// Short stable digest of every field, recorded next to fixture rows.
    pub fn hash(&self) -> String {
        let canonical = format!(
            "eps={:?};order={};grid={};L={:e};rel={:e};abs={:e};reg={:?};rot={}",
            self.eps_values,
            self.extrapolation_order,
            self.grid_points_per_dim,
            self.domain_halfwidth,
            self.rel_tol,
            self.abs_tol,
            self.regulator,
            self.scale_by_rotation
        );
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    fn budget(&self) -> QuadratureBudget {
        QuadratureBudget {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_subdivisions: 200_000,
            max_panel_width: 2.0 * self.domain_halfwidth * 21.0 / self.grid_points_per_dim as f64,
            ..QuadratureBudget::default()
        }
    }
}

/// A worldline parallel to the mirror, parametrised by proper time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Worldline {
    /// `t = γτ`, azimuth `ωγτ`.
    Circular {
        radius: f64,
        omega: f64,
        gamma: f64,
        one_minus_v: f64,
        z: f64,
    },
    /// `t = sinh(aτ)/a`, `x = cosh(aτ)/a`.
    Uniform { accel: f64, z: f64 },
}

impl Worldline {
    pub fn circular(kin: &CircularKinematics) -> Self {
        Self::Circular {
            radius: kin.radius(),
            omega: kin.omega(),
            gamma: kin.gamma(),
            one_minus_v: kin.one_minus_v(),
            z: kin.dz(),
        }
    }

    pub fn uniform(kin: &UniformKinematics) -> Self {
        Self::Uniform {
            accel: kin.accel(),
            z: kin.dz(),
        }
    }

    pub fn with_z(self, z: f64) -> Self {
        match self {
            Self::Circular {
                radius,
                omega,
                gamma,
                one_minus_v,
                ..
            } => Self::Circular {
                radius,
                omega,
                gamma,
                one_minus_v,
                z,
            },
            Self::Uniform { accel, .. } => Self::Uniform { accel, z },
        }
    }

    pub fn z(&self) -> f64 {
        match *self {
            Self::Circular { z, .. } | Self::Uniform { z, .. } => z,
        }
    }

    pub fn time(&self, tau: f64) -> f64 {
        match *self {
            Self::Circular { gamma, .. } => gamma * tau,
            Self::Uniform { accel, .. } => (accel * tau).sinh() / accel,
        }
    }

    /// Angular velocity in proper time; zero for uniform acceleration.
    pub fn rotation(&self) -> f64 {
        match *self {
            Self::Circular { omega, gamma, .. } => omega * gamma,
            Self::Uniform { .. } => 0.0,
        }
    }

    /// `dt/dτ`.
    pub fn rate(&self, tau: f64) -> f64 {
        match *self {
            Self::Circular { gamma, .. } => gamma,
            Self::Uniform { accel, .. } => (accel * tau).cosh(),
        }
    }
}

/// Invariants of the separation of two points, ignoring the direction normal
/// to the mirror (along which neither detector moves).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Separation {
    /// `t_p − t_q`.
    dt: f64,
    /// `(t_p − t_q)² − |x_p − x_q|²_∥`.
    interval: f64,
    /// `(x_p − x_q)·(u_p + u_q)`.
    dot: f64,
    /// `(u_p + u_q)²`.
    norm: f64,
}

fn separation(p: &Worldline, tp: f64, q: &Worldline, tq: f64) -> Result<Separation> {
    match (*p, *q) {
        (
            Worldline::Circular {
                radius: r1,
                omega: w1,
                gamma: g1,
                one_minus_v,
                ..
            },
            Worldline::Circular {
                radius: r2,
                omega: w2,
                gamma: g2,
                ..
            },
        ) => {
            let dt = g1 * tp - g2 * tq;
            let dphi = w1 * g1 * tp - w2 * g2 * tq;
            let (v1, v2) = (r1 * w1, r2 * w2);
            let dot = g1 * (dt - v1 * r2 * dphi.sin()) + g2 * (dt - v2 * r1 * dphi.sin());
            let norm = 2.0 + 2.0 * g1 * g2 * (1.0 - v1 * v2 * dphi.cos());
            let interval = if r1 == r2 && w1 == w2 && g1 == g2 {
                let y = 0.5 * w1 * dt;
                let minus = 2.0 / w1 * x_minus_v_sin(one_minus_v, y);
                minus * (dt + 2.0 * r1 * y.sin())
            } else {
                let rho2 = (r1 - r2).powi(2) + 4.0 * r1 * r2 * (0.5 * dphi).sin().powi(2);
                dt * dt - rho2
            };
            Ok(Separation { dt, interval, dot, norm })
        }
        (Worldline::Uniform { accel: a1, .. }, Worldline::Uniform { accel: a2, .. }) => {
            let rap = a1 * tp - a2 * tq;
            let dot = rap.sinh() * (1.0 / a1 + 1.0 / a2);
            let norm = 2.0 + 2.0 * rap.cosh();
            if a1 == a2 {
                let a = a1;
                let d = tp - tq;
                let dt = 2.0 * (0.5 * a * (tp + tq)).cosh() * (0.5 * a * d).sinh() / a;
                let interval = -(a * d).exp_m1() * (-a * d).exp_m1() / (a * a);
                Ok(Separation { dt, interval, dot, norm })
            } else {
                let plus = (a1 * tp).exp() / a1 - (a2 * tq).exp() / a2;
                let minus = -(-a1 * tp).exp() / a1 + (-a2 * tq).exp() / a2;
                Ok(Separation {
                    dt: p.time(tp) - q.time(tq),
                    interval: plus * minus,
                    dot,
                    norm,
                })
            }
        }
        _ => Err(Error::InvalidParameter {
            name: "worldline",
            reason: "mixed circular and uniform pairs are not supported".into(),
        }),
    }
}

/// Result of an extrapolated oracle evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub re: f64,
    pub im: f64,
    /// Raw values at each regulator of the ladder.
    pub raw: Vec<(f64, f64)>,
    /// Difference between the two highest-order extrapolants plus quadrature error.
    pub err_est: f64,
}

impl OracleValue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Neville extrapolation of `values(ε)` to `ε = 0` using the `order + 1`
/// finest regulators. Returns the extrapolants of increasing order.
fn neville(eps: &[f64], values: &[f64], order: usize) -> Vec<f64> {
    let n = eps.len();
    let xs = &eps[n - order - 1..];
    let ys = &values[n - order - 1..];
    // table[j] holds the degree-k interpolant of points j..=j+k, evaluated at 0.
    let mut table = ys.to_vec();
    let mut extrapolants = vec![*ys.last().unwrap()];
    for k in 1..=order {
        for j in 0..=(order - k) {
            let (x0, x1) = (xs[j], xs[j + k]);
            table[j] = (x1 * table[j] - x0 * table[j + 1]) / (x1 - x0);
        }
        extrapolants.push(table[order - k]);
    }
    extrapolants
}

fn extrapolate(ladder: &EpsilonLadder, raw: &[f64], quad_err: f64) -> Result<OracleValue> {
    let n = ladder.eps_values.len();
    let order = ladder.extrapolation_order;
    let mut out = [0.0; 2];
    let mut spread_total = 0.0;
    for part in 0..2 {
        let vals: Vec<f64> = (0..n).map(|k| raw[2 * k + part]).collect();
        let ex = neville(&ladder.eps_values, &vals, order);
        let best = *ex.last().unwrap();
        if order > 0 {
            let spread = (ex[order] - ex[order - 1]).abs();
            let increment = (vals[n - 1] - vals[n - 2]).abs();
            let floor = 1e-12 * best.abs().max(1e-300) + 1e-14;
            if spread > 10.0 * increment + floor {
                return Err(Error::ExtrapolationUnstable { spread, increment });
            }
            spread_total += spread;
        }
        out[part] = best;
    }
    Ok(OracleValue {
        re: out[0],
        im: out[1],
        raw: (0..n).map(|k| (raw[2 * k], raw[2 * k + 1])).collect(),
        err_est: spread_total + quad_err,
    })
}

/// Breakpoints graded geometrically around `center`: `center ± w·4^k` for
/// widths from `w` up to about 1.
fn graded(center: f64, width: f64, lo: f64, hi: f64, out: &mut Vec<f64>) {
    out.push(center);
    let mut d = width;
    while d < 1.0 {
        out.push(center - d);
        out.push(center + d);
        d *= 4.0;
    }
    out.retain(|x| *x > lo && *x < hi);
}

/// Sign changes of `f` on `[lo, hi]`, scanned with step `h` and bisected.
fn sign_changes<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, h: f64, out: &mut Vec<f64>) {
    let n = ((hi - lo) / h).ceil().max(1.0) as usize;
    let mut x0 = lo;
    let mut f0 = f(x0);
    for i in 1..=n {
        let x1 = if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 };
        let f1 = f(x1);
        if f0 != 0.0 && f1 != 0.0 && (f0 < 0.0) != (f1 < 0.0) {
            out.push(bisect(&f, x0, x1, f0));
        } else if f1 == 0.0 {
            out.push(x1);
        }
        x0 = x1;
        f0 = f1;
    }
}

/// Segments `[lo, hi]` split at sorted, deduplicated breakpoints.
fn segments(lo: f64, hi: f64, mut pts: Vec<f64>) -> Vec<(f64, f64)> {
    pts.push(lo);
    pts.push(hi);
    pts.retain(|x| *x >= lo && *x <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
    pts.windows(2).map(|w| (w[0], w[1])).filter(|(a, b)| b > a).collect()
}

/// Adds `scale·W_ε(first, second)` for every regulator into `acc` as
/// interleaved (re, im) pairs. `sep` is oriented first minus second.
#[inline]
fn accumulate_wightman(acc: &mut [f64], scale: Complex64, sep: &Separation, regulator: Regulator, zetas: &[(f64, f64)], eps: &[f64]) {
    let (dot, norm) = match regulator {
        Regulator::Covariant => (sep.dot, sep.norm),
        Regulator::CoordinateTime => (2.0 * sep.dt, 4.0),
    };
    for (k, &e) in eps.iter().enumerate() {
        let mut w = Complex64::new(0.0, 0.0);
        for &(zeta2, sign) in zetas {
            let sigma = Complex64::new(sep.interval - zeta2 - 0.25 * e * e * norm, -e * dot);
            w += sign / sigma;
        }
        let v = scale * w * (-1.0 / (4.0 * PI * PI));
        acc[2 * k] += v.re;
        acc[2 * k + 1] += v.im;
    }
}

impl EpsilonLadder {
    /// Regulators actually used for worldlines rotating at proper angular
    /// frequency `rotation`.
    fn scaled(&self, rotation: f64) -> Vec<f64> {
        let k = if self.scale_by_rotation { rotation.max(1.0) } else { 1.0 };
        self.eps_values.iter().map(|e| e / k).collect()
    }

    /// Smallest proper-time scale of the regulated coincidence singularity
    /// for a worldline moving at `dt/dτ = rate`.
    fn finest_width(&self, eps: &[f64], rate: f64) -> f64 {
        let eps_min = *eps.last().unwrap();
        match self.regulator {
            Regulator::Covariant => 0.125 * eps_min,
            Regulator::CoordinateTime => 0.125 * eps_min / rate.max(1.0),
        }
    }
}

fn zetas(z_a: f64, z_b: f64, mirror: Mirror) -> Vec<(f64, f64)> {
    let mut out = vec![((z_a - z_b).powi(2), 1.0)];
    if mirror == Mirror::Present {
        out.push(((z_a + z_b).powi(2), -1.0));
    }
    out
}

/// Transition probability of a single detector on `worldline`, by direct
/// evaluation of the regulated double integral.
pub fn oracle_transition(worldline: &Worldline, det: &DetectorSpec, ladder: &EpsilonLadder, mirror: Mirror) -> Result<OracleValue> {
    ladder.validate()?;
    let l = ladder.domain_halfwidth;
    let eps = &ladder.scaled(worldline.rotation());
    let n = eps.len();
    let budget = ladder.budget();
    let zs = zetas(worldline.z(), worldline.z(), mirror);
    let w = det.gap;

    // τ' = u, τ = u + s.
    let inner = |u: f64| -> Result<(Vec<f64>, f64)> {
        let (lo, hi) = (-l - u, l - u);
        let t_u = worldline.time(u);
        let width = ladder.finest_width(eps, worldline.rate(u));
        let mut pts = Vec::new();
        graded(0.0, width, lo, hi, &mut pts);
        if mirror == Mirror::Present {
            let zeta2 = zs[1].0;
            let mut roots = Vec::new();
            sign_changes(
                |s| separation(worldline, u + s, worldline, u).map(|p| p.interval - zeta2).unwrap_or(f64::NAN),
                lo,
                hi,
                0.02,
                &mut roots,
            );
            for r in roots {
                graded(r, width, lo, hi, &mut pts);
            }
        }
        let segs = segments(lo, hi, pts);
        let f = |_: usize, s: f64| -> Vec<f64> {
            let mut acc = vec![0.0; 2 * n];
            let tau = u + s;
            let chi = (-0.5 * (tau * tau + u * u)).exp();
            let Ok(sep) = separation(worldline, tau, worldline, u) else {
                return vec![f64::NAN; 2 * n];
            };
            debug_assert!((sep.dt - (worldline.time(tau) - t_u)).abs() <= 1e-9 * (1.0 + sep.dt.abs()));
            let phase = Complex64::from_polar(chi, -w * s);
            accumulate_wightman(&mut acc, phase, &sep, ladder.regulator, &zs, eps);
            acc
        };
        integrate_segments(f, &segs, &budget)
    };
    separation(worldline, 0.0, worldline, 0.0)?;
    nested(inner, l, n, &budget, ladder)
}

fn nested<I>(inner: I, l: f64, n: usize, budget: &QuadratureBudget, ladder: &EpsilonLadder) -> Result<OracleValue>
where
    I: Fn(f64) -> Result<(Vec<f64>, f64)>,
{
    let failure = std::cell::RefCell::new(None);
    let inner_err = std::cell::Cell::new(0.0f64);
    let outer = |_: usize, u: f64| -> Vec<f64> {
        match inner(u) {
            Ok((v, e)) => {
                inner_err.set(inner_err.get().max(e));
                v
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                vec![0.0; 2 * n]
            }
        }
    };
    let (raw, err) = integrate_segments(outer, &[(-l, l)], budget)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    extrapolate(ladder, &raw, err + 2.0 * l * inner_err.get())
}

/// Pair of worldlines for [`oracle_x`]; detector heights are the worldlines'
/// own `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OraclePair {
    pub a: Worldline,
    pub b: Worldline,
}

/// `X` for an arbitrary pair, including unequal angular velocities:
///
/// ```text
/// X = −∫∫ dτ_A dτ_B χ(τ_A)χ(τ_B) e^{−iΩ(τ_A+τ_B)} W_ε(x_earlier, x_later)
/// ```
pub fn oracle_x(pair: &OraclePair, det: &DetectorSpec, ladder: &EpsilonLadder, mirror: Mirror) -> Result<OracleValue> {
    ladder.validate()?;
    let l = ladder.domain_halfwidth;
    let (wa, wb) = (&pair.a, &pair.b);
    let eps = &ladder.scaled(wa.rotation().max(wb.rotation()));
    let n = eps.len();
    let budget = ladder.budget();
    let zs = zetas(wa.z(), wb.z(), mirror);
    if zs[0].0 == 0.0 {
        return Err(Error::CoincidentDetectors);
    }
    let w = det.gap;
    separation(wa, 0.0, wb, 0.0)?;

    // τ_B = u, τ_A = u + s.
    let inner = |u: f64| -> Result<(Vec<f64>, f64)> {
        let (lo, hi) = (-l - u, l - u);
        let width = ladder.finest_width(eps, wb.rate(u).max(wa.rate(u)));
        let mut pts = Vec::new();
        let mut roots = Vec::new();
        sign_changes(|s| wa.time(u + s) - wb.time(u), lo, hi, 0.02, &mut roots);
        for &(zeta2, _) in &zs {
            sign_changes(
                |s| separation(wa, u + s, wb, u).map(|p| p.interval - zeta2).unwrap_or(f64::NAN),
                lo,
                hi,
                0.02,
                &mut roots,
            );
        }
        for r in roots {
            graded(r, width, lo, hi, &mut pts);
        }
        let segs = segments(lo, hi, pts);
        let f = |_: usize, s: f64| -> Vec<f64> {
            let mut acc = vec![0.0; 2 * n];
            let ta = u + s;
            let chi = (-0.5 * (ta * ta + u * u)).exp();
            let Ok(mut sep) = separation(wa, ta, wb, u) else {
                return vec![f64::NAN; 2 * n];
            };
            // Earlier point first: the time difference entering σ_ε is −|Δt|.
            let phase = Complex64::from_polar(chi, -w * (ta + u)) * (-1.0);
            if sep.dt > 0.0 {
                sep.dt = -sep.dt;
                sep.dot = -sep.dot;
            }
            accumulate_wightman(&mut acc, phase, &sep, ladder.regulator, &zs, eps);
            acc
        };
        integrate_segments(f, &segs, &budget)
    };
    nested(inner, l, n, &budget, ladder)
}

/// One brute-force reference point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureOp {
    TransitionCircular,
    TransitionUniform,
    XComovingCircular,
    XSyncTwoRadii,
    XUniformPair,
}

impl FixtureOp {
    pub const ALL: [FixtureOp; 5] = [
        FixtureOp::TransitionCircular,
        FixtureOp::TransitionUniform,
        FixtureOp::XComovingCircular,
        FixtureOp::XSyncTwoRadii,
        FixtureOp::XUniformPair,
    ];
}

/// Parameters of a fixture point. Unused fields are zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixtureCase {
    pub case_id: u32,
    pub operation: FixtureOp,
    pub a_sigma: f64,
    pub r_sigma: f64,
    pub r_b_sigma: f64,
    pub omega_sigma: f64,
    pub gap_sigma: f64,
    pub dd_sigma: f64,
    pub dz_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRow {
    pub case_id: u32,
    pub operation: FixtureOp,
    pub a_sigma: f64,
    #[serde(rename = "R_sigma")]
    pub r_sigma: f64,
    #[serde(rename = "R_B_sigma")]
    pub r_b_sigma: f64,
    pub omega_sigma: f64,
    #[serde(rename = "Omega_sigma")]
    pub gap_sigma: f64,
    pub dd_sigma: f64,
    pub dz_sigma: f64,
    pub value_re: f64,
    pub value_im: f64,
    pub eps_ladder_hash: String,
}

impl FixtureRow {
    pub fn case(&self) -> FixtureCase {
        FixtureCase {
            case_id: self.case_id,
            operation: self.operation,
            a_sigma: self.a_sigma,
            r_sigma: self.r_sigma,
            r_b_sigma: self.r_b_sigma,
            omega_sigma: self.omega_sigma,
            gap_sigma: self.gap_sigma,
            dd_sigma: self.dd_sigma,
            dz_sigma: self.dz_sigma,
        }
    }
}

fn grid3(xs: [f64; 3], ys: [f64; 3], zs: [f64; 3]) -> impl Iterator<Item = (f64, f64, f64)> {
    xs.into_iter()
        .flat_map(move |x| ys.into_iter().flat_map(move |y| zs.into_iter().map(move |z| (x, y, z))))
}

/// The frozen validation grid: 27 points for each reduced operation.
pub fn fixture_cases() -> Vec<FixtureCase> {
    let mut out = Vec::new();
    let mut id = 0u32;
    let mut push = |op, a, r, rb, om, w, dd, dz| {
        id += 1;
        out.push(FixtureCase {
            case_id: id,
            operation: op,
            a_sigma: a,
            r_sigma: r,
            r_b_sigma: rb,
            omega_sigma: om,
            gap_sigma: w,
            dd_sigma: dd,
            dz_sigma: dz,
        });
    };
    for (a, r, dz) in grid3([0.5, 2.0, 8.0], [0.2, 1.0, 3.0], [0.2, 1.0, 3.0]) {
        push(FixtureOp::TransitionCircular, a, r, 0.0, 0.0, 0.5, 0.0, dz);
    }
    for (a, w, dz) in grid3([0.5, 2.0, 5.0], [0.1, 1.0, 2.0], [0.2, 1.0, 3.0]) {
        push(FixtureOp::TransitionUniform, a, 0.0, 0.0, 0.0, w, 0.0, dz);
    }
    for (a, dd, dz) in grid3([0.5, 1.0, 2.0], [0.2, 0.5, 1.0], [0.2, 1.0, 3.0]) {
        push(FixtureOp::XComovingCircular, a, 1.0, 0.0, 0.0, 0.1, dd, dz);
    }
    for (om, rb, dz) in grid3([0.2, 0.4, 0.6], [0.5, 1.2, 1.5], [0.2, 0.5, 2.0]) {
        push(FixtureOp::XSyncTwoRadii, 0.0, 1.0, rb, om, 0.1, 0.5, dz);
    }
    for (a, dd, dz) in grid3([0.5, 1.0, 2.0], [0.2, 0.5, 1.0], [0.2, 1.0, 3.0]) {
        push(FixtureOp::XUniformPair, a, 0.0, 0.0, 0.0, 0.1, dd, dz);
    }
    out
}

/// Brute-force value of a fixture case.
pub fn oracle_case(case: &FixtureCase, ladder: &EpsilonLadder) -> Result<OracleValue> {
    let det = DetectorSpec::new(case.gap_sigma)?;
    match case.operation {
        FixtureOp::TransitionCircular => {
            let kin = CircularKinematics::new(case.a_sigma, case.r_sigma, case.dz_sigma)?;
            oracle_transition(&Worldline::circular(&kin), &det, ladder, Mirror::Present)
        }
        FixtureOp::TransitionUniform => {
            let kin = UniformKinematics::new(case.a_sigma, case.dz_sigma)?;
            oracle_transition(&Worldline::uniform(&kin), &det, ladder, Mirror::Present)
        }
        FixtureOp::XComovingCircular => {
            let kin = CircularKinematics::new(case.a_sigma, case.r_sigma, case.dz_sigma)?;
            let a = Worldline::circular(&kin);
            let pair = OraclePair {
                a,
                b: a.with_z(case.dz_sigma + case.dd_sigma),
            };
            oracle_x(&pair, &det, ladder, Mirror::Present)
        }
        FixtureOp::XSyncTwoRadii => {
            let ka = CircularKinematics::from_angular_velocity(case.omega_sigma, case.r_sigma, case.dz_sigma)?;
            let kb = CircularKinematics::from_angular_velocity(case.omega_sigma, case.r_b_sigma, case.dz_sigma + case.dd_sigma)?;
            let pair = OraclePair {
                a: Worldline::circular(&ka),
                b: Worldline::circular(&kb),
            };
            oracle_x(&pair, &det, ladder, Mirror::Present)
        }
        FixtureOp::XUniformPair => {
            let kin = UniformKinematics::new(case.a_sigma, case.dz_sigma)?;
            let a = Worldline::uniform(&kin);
            let pair = OraclePair {
                a,
                b: a.with_z(case.dz_sigma + case.dd_sigma),
            };
            oracle_x(&pair, &det, ladder, Mirror::Present)
        }
    }
}

/// Value of a fixture case from the reduced (principal value plus residue)
/// path. Transition probabilities are real.
pub fn reduced_case(case: &FixtureCase, budget: &QuadratureBudget) -> Result<Complex64> {
    let det = DetectorSpec::new(case.gap_sigma)?;
    let m = Mirror::Present;
    Ok(match case.operation {
        FixtureOp::TransitionCircular => {
            let kin = CircularKinematics::new(case.a_sigma, case.r_sigma, case.dz_sigma)?;
            Complex64::new(transition_circular_in(&kin, &det, budget, m)?.probability, 0.0)
        }
        FixtureOp::TransitionUniform => {
            let kin = UniformKinematics::new(case.a_sigma, case.dz_sigma)?;
            Complex64::new(transition_uniform_in(&kin, &det, budget, m)?.probability, 0.0)
        }
        FixtureOp::XComovingCircular => {
            let kin = CircularKinematics::new(case.a_sigma, case.r_sigma, case.dz_sigma)?;
            let geom = PairGeometry::new(case.dd_sigma, case.dz_sigma, PairKind::CircularComoving)?;
            let x = x_comoving_circular_in(&kin, &geom, &det, budget, m)?;
            Complex64::new(x.x_real, x.x_imag)
        }
        FixtureOp::XSyncTwoRadii => {
            let ka = CircularKinematics::from_angular_velocity(case.omega_sigma, case.r_sigma, case.dz_sigma)?;
            let kb = CircularKinematics::from_angular_velocity(case.omega_sigma, case.r_b_sigma, case.dz_sigma + case.dd_sigma)?;
            let geom = PairGeometry::new(case.dd_sigma, case.dz_sigma, PairKind::CircularSyncTwoRadii)?;
            let x = x_sync_two_radii_in(&ka, &kb, &geom, &det, budget, m)?;
            Complex64::new(x.x_real, x.x_imag)
        }
        FixtureOp::XUniformPair => {
            let kin = UniformKinematics::new(case.a_sigma, case.dz_sigma)?;
            let geom = PairGeometry::new(case.dd_sigma, case.dz_sigma, PairKind::UniformPair)?;
            let x = x_uniform_pair_in(&kin, &geom, &det, budget, m)?;
            Complex64::new(x.x_real, x.x_imag)
        }
    })
}

/// Evaluates every case with the oracle, in parallel, keeping case order.
pub fn generate_fixture(cases: &[FixtureCase], ladder: &EpsilonLadder) -> Result<Vec<FixtureRow>> {
    use rayon::prelude::*;
    let hash = ladder.hash();
    cases
        .par_iter()
        .map(|c| {
            let v = oracle_case(c, ladder)?;
            Ok(FixtureRow {
                case_id: c.case_id,
                operation: c.operation,
                a_sigma: c.a_sigma,
                r_sigma: c.r_sigma,
                r_b_sigma: c.r_b_sigma,
                omega_sigma: c.omega_sigma,
                gap_sigma: c.gap_sigma,
                dd_sigma: c.dd_sigma,
                dz_sigma: c.dz_sigma,
                value_re: v.re,
                value_im: v.im,
                eps_ladder_hash: hash.clone(),
            })
        })
        .collect()
}

pub fn write_fixture<P: AsRef<Path>>(path: P, rows: &[FixtureRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Config(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Config(e.to_string()))
}

pub fn read_fixture<P: AsRef<Path>>(path: P) -> Result<Vec<FixtureRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Config(e.to_string()))?;
    r.deserialize().map(|row| row.map_err(|e| Error::Config(e.to_string()))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::derive_circular;
    use crate::response::{transition_circular_in, transition_uniform_in};

    fn quick() -> EpsilonLadder {
        EpsilonLadder {
            grid_points_per_dim: 1024,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            ..EpsilonLadder::default()
        }
    }

    #[test]
    fn neville_recovers_polynomial() {
        let eps = [1e-2, 5e-3, 2.5e-3];
        let vals: Vec<f64> = eps.iter().map(|e| 0.3 + 2.0 * e - 7.0 * e * e).collect();
        let ex = neville(&eps, &vals, 2);
        assert!((ex[2] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn ladder_validation() {
        assert!(EpsilonLadder::default().validate().is_ok());
        let bad = EpsilonLadder {
            eps_values: vec![1e-3, 1e-2],
            ..EpsilonLadder::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(EpsilonLadder::default().hash(), EpsilonLadder::default().hash());
        assert_ne!(EpsilonLadder::default().hash(), quick().hash());
    }

    #[test]
    fn free_space_circular_matches_reduced() {
        let kin = derive_circular(2.0, 1.0, 1.0).unwrap();
        let det = DetectorSpec::new(0.5).unwrap();
        let o = oracle_transition(&Worldline::circular(&kin), &det, &quick(), Mirror::Absent).unwrap();
        let r = transition_circular_in(&kin, &det, &QuadratureBudget::default(), Mirror::Absent).unwrap();
        assert!(((o.re - r.probability) / r.probability).abs() < 1e-4, "{} vs {}", o.re, r.probability);
        assert!(o.im.abs() < 1e-4 * o.re.abs());
    }

    #[test]
    fn large_gap_with_mirror_matches_reduced() {
        let kin = derive_circular(2.0, 1.0, 1.0).unwrap();
        let det = DetectorSpec::new(6.0).unwrap();
        let o = oracle_transition(&Worldline::circular(&kin), &det, &quick(), Mirror::Present).unwrap();
        let r = transition_circular_in(&kin, &det, &QuadratureBudget::default(), Mirror::Present).unwrap();
        assert!((o.re - r.probability).abs() < 1e-4 * r.probability.abs().max(1e-6), "{} vs {}", o.re, r.probability);
    }

    #[test]
    fn comoving_x_matches_reduced() {
        let kin = derive_circular(1.0, 1.0, 0.2).unwrap();
        let a = Worldline::circular(&kin);
        let pair = OraclePair { a, b: a.with_z(0.4) };
        let det = DetectorSpec::new(0.1).unwrap();
        let o = oracle_x(&pair, &det, &quick(), Mirror::Present).unwrap();
        let reduced = Complex64::new(-0.008401572438583519, -0.4833065614326397);
        assert!((o.value() - reduced).norm() < 1e-4 * reduced.norm(), "{:?}", o.value());
    }

    #[test]
    fn unequal_angular_velocities_extrapolate_stably() {
        let ka = CircularKinematics::from_angular_velocity(0.3, 1.0, 0.5).unwrap();
        let kb = CircularKinematics::from_angular_velocity(0.5, 1.0, 1.0).unwrap();
        let pair = OraclePair {
            a: Worldline::circular(&ka),
            b: Worldline::circular(&kb),
        };
        let o = oracle_x(&pair, &DetectorSpec::new(0.1).unwrap(), &quick(), Mirror::Present).unwrap();
        assert!(o.abs().is_finite() && o.abs() > 0.0);
        assert!(o.err_est < 1e-3 * o.abs(), "{} vs {}", o.err_est, o.abs());
    }

    #[test]
    fn widely_separated_pair_decays_algebraically() {
        let det = DetectorSpec::new(0.1).unwrap();
        let at = |dd: f64| {
            let kin = derive_circular(1.0, 1.0, 10.0).unwrap();
            let a = Worldline::circular(&kin);
            oracle_x(&OraclePair { a, b: a.with_z(10.0 + dd) }, &det, &quick(), Mirror::Present).unwrap()
        };
        let (near, far) = (at(10.0), at(20.0));
        let reduced = Complex64::new(-0.0014492596297580776, -3.577185656369566e-8);
        assert!((near.value() - reduced).norm() < 1e-6 * reduced.norm());
        let ratio = near.abs() / far.abs();
        assert!((3.0..5.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn large_gap_suppressed_for_gentle_acceleration() {
        let kin = UniformKinematics::new(1.0, 1.0).unwrap();
        let det = DetectorSpec::new(6.0).unwrap();
        let o = oracle_transition(&Worldline::uniform(&kin), &det, &quick(), Mirror::Absent).unwrap();
        assert!(o.re.abs() < 1e-6, "{}", o.re);
    }

    #[test]
    fn uniform_validation_point() {
        let kin = UniformKinematics::new(3.0, 0.5).unwrap();
        let det = DetectorSpec::new(1.0).unwrap();
        let o = oracle_transition(&Worldline::uniform(&kin), &det, &quick(), Mirror::Present).unwrap();
        let r = transition_uniform_in(&kin, &det, &QuadratureBudget::default(), Mirror::Present).unwrap();
        assert!(((o.re - r.probability) / r.probability).abs() < 1e-5, "{} vs {}", o.re, r.probability);
    }

    #[test]
    fn fast_rotation_matches_reduced() {
        let kin = derive_circular(8.0, 0.2, 0.2).unwrap();
        let det = DetectorSpec::new(0.5).unwrap();
        let o = oracle_transition(&Worldline::circular(&kin), &det, &quick(), Mirror::Present).unwrap();
        let r = transition_circular_in(&kin, &det, &QuadratureBudget::default(), Mirror::Present).unwrap();
        assert!(((o.re - r.probability) / r.probability).abs() < 1e-5, "{} vs {}", o.re, r.probability);
    }

    #[test]
    fn coordinate_regulator_converges_slowly_at_high_rate() {
        let kin = derive_circular(8.0, 0.2, 0.2).unwrap();
        let det = DetectorSpec::new(0.5).unwrap();
        let coord = EpsilonLadder {
            regulator: Regulator::CoordinateTime,
            scale_by_rotation: false,
            extrapolation_order: 0,
            ..quick()
        };
        let o = oracle_transition(&Worldline::circular(&kin), &det, &coord, Mirror::Present).unwrap();
        let r = transition_circular_in(&kin, &det, &QuadratureBudget::default(), Mirror::Present).unwrap();
        let dev: Vec<f64> = o.raw.iter().map(|v| (v.0 - r.probability).abs()).collect();
        assert!(dev.windows(2).all(|w| w[1] < w[0]), "{dev:?}");
        assert!(dev[2] > 1e-3 * r.probability);
    }

    #[test]
    fn grid_doubling_is_stable() {
        let kin = derive_circular(2.0, 1.0, 0.3).unwrap();
        let det = DetectorSpec::new(0.5).unwrap();
        let coarse = oracle_transition(&Worldline::circular(&kin), &det, &quick(), Mirror::Present).unwrap();
        let fine_ladder = EpsilonLadder {
            grid_points_per_dim: 2 * quick().grid_points_per_dim,
            ..quick()
        };
        let fine = oracle_transition(&Worldline::circular(&kin), &det, &fine_ladder, Mirror::Present).unwrap();
        assert!(((fine.re - coarse.re) / fine.re).abs() < 1e-4);
    }

    #[test]
    fn imaginary_residual_shrinks_with_eps() {
        let kin = UniformKinematics::new(3.0, 0.5).unwrap();
        let det = DetectorSpec::new(1.0).unwrap();
        let ladder = quick();
        let o = oracle_transition(&Worldline::uniform(&kin), &det, &ladder, Mirror::Present).unwrap();
        for k in 1..o.raw.len() {
            let ratio = ladder.eps_values[k] / ladder.eps_values[k - 1];
            assert!(o.raw[k].1.abs() <= 1.05 * ratio * o.raw[k - 1].1.abs() + 1e-12, "{:?}", o.raw);
        }
        assert!(o.im.abs() < 1e-4 * o.re.abs());
    }
}
