//! Adaptive Gauss-Kronrod quadrature for Gaussian-damped integrands on a
//! half line, principal-value integrals through simple poles, and root
//! enumeration on a ray.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};

/// Smallest admissible `|g'(s)|` at a simple pole.
pub const DEGENERACY_FLOOR: f64 = 1e-8;

/// Tolerances and limits shared by every integration in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureBudget {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Half-width of the symmetric window around each pole.
    pub pv_window_delta: f64,
    /// Multiplier applied to the Gaussian-envelope truncation point.
    pub truncation_safety: f64,
    /// Initial panels are never wider than this.
    pub max_panel_width: f64,
}

impl Default for QuadratureBudget {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
            pv_window_delta: 1e-3,
            truncation_safety: 1.2,
            max_panel_width: 0.5,
        }
    }
}

impl QuadratureBudget {
    pub fn validate(&self) -> Result<()> {
        positive("abs_tol", self.abs_tol)?;
        positive("rel_tol", self.rel_tol)?;
        positive("pv_window_delta", self.pv_window_delta)?;
        positive("truncation_safety", self.truncation_safety)?;
        positive("max_panel_width", self.max_panel_width)?;
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter {
                name: "max_subdivisions",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Same budget with both tolerances multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            ..*self
        }
    }

    pub fn with_abs_tol(&self, abs_tol: f64) -> Self {
        Self { abs_tol, ..*self }
    }
}

/// Value and error estimate of a real integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            error: self.error * factor.abs(),
        }
    }
}

/// Simple real roots of a denominator together with its derivative there.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoleSet {
    roots: Vec<f64>,
    derivatives: Vec<f64>,
}

impl PoleSet {
    pub fn new(roots: Vec<f64>, derivatives: Vec<f64>) -> Result<Self> {
        if roots.len() != derivatives.len() {
            return Err(Error::InvalidParameter {
                name: "derivatives",
                reason: format!("{} roots but {} derivatives", roots.len(), derivatives.len()),
            });
        }
        if roots.windows(2).any(|w| w[1] <= w[0]) || roots.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "roots",
                reason: "must be positive and strictly increasing".into(),
            });
        }
        for (&at, &derivative) in roots.iter().zip(&derivatives) {
            if !(derivative.abs() >= DEGENERACY_FLOOR) {
                return Err(Error::DegeneratePole { at, derivative });
            }
        }
        Ok(Self { roots, derivatives })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(root: f64, derivative: f64) -> Result<Self> {
        Self::new(vec![root], vec![derivative])
    }

    pub fn roots(&self) -> &[f64] {
        &self.roots
    }

    pub fn derivatives(&self) -> &[f64] {
        &self.derivatives
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }
}

/// A value that can be integrated: a fixed set of real components.
pub trait QValue: Clone + Send {
    fn as_slice(&self) -> &[f64];
    fn as_mut_slice(&mut self) -> &mut [f64];
}

impl QValue for f64 {
    fn as_slice(&self) -> &[f64] {
        std::slice::from_ref(self)
    }
    fn as_mut_slice(&mut self) -> &mut [f64] {
        std::slice::from_mut(self)
    }
}

impl<const N: usize> QValue for [f64; N] {
    fn as_slice(&self) -> &[f64] {
        self
    }
    fn as_mut_slice(&mut self) -> &mut [f64] {
        self
    }
}

impl QValue for Vec<f64> {
    fn as_slice(&self) -> &[f64] {
        self
    }
    fn as_mut_slice(&mut self) -> &mut [f64] {
        self
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One 21-point Gauss-Kronrod panel; returns the Kronrod value and the
/// largest per-component error estimate.
fn gk21<V: QValue>(f: &dyn Fn(f64) -> V, a: f64, b: f64) -> (V, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let n = fc.as_slice().len();

    let mut res_k = fc.clone();
    let mut res_g = vec![0.0; n];
    let mut res_abs = vec![0.0; n];
    for c in 0..n {
        let v = fc.as_slice()[c];
        res_k.as_mut_slice()[c] = v * WGK[10];
        res_abs[c] = (v * WGK[10]).abs();
    }
    let mut samples: Vec<(V, V)> = Vec::with_capacity(10);
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for c in 0..n {
            let (y1, y2) = (f1.as_slice()[c], f2.as_slice()[c]);
            res_k.as_mut_slice()[c] += WGK[j] * (y1 + y2);
            res_abs[c] += WGK[j] * (y1.abs() + y2.abs());
            if j % 2 == 1 {
                res_g[c] += WG[j / 2] * (y1 + y2);
            }
        }
        samples.push((f1, f2));
    }

    let mut err_max: f64 = 0.0;
    for c in 0..n {
        let k = res_k.as_slice()[c];
        let mean = 0.5 * k;
        let mut asc = WGK[10] * (fc.as_slice()[c] - mean).abs();
        for (j, (f1, f2)) in samples.iter().enumerate() {
            asc += WGK[j] * ((f1.as_slice()[c] - mean).abs() + (f2.as_slice()[c] - mean).abs());
        }
        let asc = asc * half.abs();
        let abs = res_abs[c] * half.abs();
        let mut err = ((k - res_g[c]) * half).abs();
        if asc != 0.0 && err != 0.0 {
            err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
        }
        if abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * abs);
        }
        if !err.is_finite() || !k.is_finite() {
            err = f64::INFINITY;
        }
        err_max = err_max.max(err);
    }
    for c in 0..n {
        res_k.as_mut_slice()[c] *= half;
    }
    (res_k, err_max)
}

struct Panel<V> {
    seg: usize,
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

struct HeapKey(f64, usize);

impl PartialEq for HeapKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapKey {}
impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

/// Globally adaptive integration over a union of segments.
///
/// `f(k, x)` is the integrand on segment `k`. Every segment is first cut into
/// panels no wider than `budget.max_panel_width`; the panel with the largest
/// error is then bisected until the summed error meets
/// `max(abs_tol, rel_tol·|result|)` (componentwise maximum norm) or the
/// subdivision budget is spent. Panels too narrow to bisect in floating point
/// are retired with their error.
pub fn integrate_segments<V, F>(f: F, segments: &[(f64, f64)], budget: &QuadratureBudget) -> Result<(V, f64)>
where
    V: QValue,
    F: Fn(usize, f64) -> V,
{
    let mut panels: Vec<Panel<V>> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut template: Option<V> = None;

    for (seg, &(a, b)) in segments.iter().enumerate() {
        if !(b > a) {
            continue;
        }
        let n = ((b - a) / budget.max_panel_width).ceil().clamp(1.0, 1e6) as usize;
        let fk = |x: f64| f(seg, x);
        for i in 0..n {
            let lo = a + (b - a) * i as f64 / n as f64;
            let hi = if i + 1 == n { b } else { a + (b - a) * (i + 1) as f64 / n as f64 };
            let (value, error) = gk21(&fk, lo, hi);
            if template.is_none() {
                template = Some(value.clone());
            }
            heap.push(HeapKey(error, panels.len()));
            panels.push(Panel { seg, a: lo, b: hi, value, error });
        }
    }

    let Some(template) = template else {
        return Err(Error::InvalidParameter {
            name: "segments",
            reason: "empty integration domain".into(),
        });
    };

    let sum = |panels: &[Panel<V>]| -> (V, f64) {
        let mut total = template.clone();
        total.as_mut_slice().iter_mut().for_each(|x| *x = 0.0);
        let mut err = 0.0;
        for p in panels {
            for (t, v) in total.as_mut_slice().iter_mut().zip(p.value.as_slice()) {
                *t += v;
            }
            err += p.error;
        }
        (total, err)
    };

    let (mut total, mut err) = sum(&panels);
    let mut splits = 0usize;
    let mut retired_err = 0.0;
    loop {
        let target = budget.abs_tol.max(budget.rel_tol * max_abs(total.as_slice()));
        if err <= target {
            break;
        }
        if err - retired_err <= target || heap.is_empty() {
            // Remaining error sits in panels at the floating-point floor.
            break;
        }
        if splits >= budget.max_subdivisions {
            return Err(Error::BudgetExhausted {
                subdivisions: splits,
                error: err,
                target,
            });
        }
        let HeapKey(_, idx) = heap.pop().expect("heap non-empty");
        let (seg, a, b) = (panels[idx].seg, panels[idx].a, panels[idx].b);
        let mid = 0.5 * (a + b);
        if !(mid > a && mid < b) || (b - a) <= 64.0 * f64::EPSILON * a.abs().max(b.abs()) {
            retired_err += panels[idx].error;
            continue;
        }
        let fk = |x: f64| f(seg, x);
        let (v1, e1) = gk21(&fk, a, mid);
        let (v2, e2) = gk21(&fk, mid, b);
        for c in 0..total.as_slice().len() {
            total.as_mut_slice()[c] += v1.as_slice()[c] + v2.as_slice()[c] - panels[idx].value.as_slice()[c];
        }
        err += e1 + e2 - panels[idx].error;
        panels[idx] = Panel { seg, a, b: mid, value: v1, error: e1 };
        heap.push(HeapKey(e1, idx));
        heap.push(HeapKey(e2, panels.len()));
        panels.push(Panel { seg, a: mid, b, value: v2, error: e2 });
        splits += 1;
    }

    // Re-sum in a fixed panel order so the result does not carry the
    // incremental updates' rounding.
    let mut order: Vec<usize> = (0..panels.len()).collect();
    order.sort_by(|&i, &j| panels[i].seg.cmp(&panels[j].seg).then(panels[i].a.total_cmp(&panels[j].a)));
    let ordered: Vec<Panel<V>> = order
        .into_iter()
        .map(|i| Panel {
            seg: panels[i].seg,
            a: panels[i].a,
            b: panels[i].b,
            value: panels[i].value.clone(),
            error: panels[i].error,
        })
        .collect();
    let (value, error) = sum(&ordered);
    if !error.is_finite() || value.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::BudgetExhausted {
            subdivisions: splits,
            error,
            target: budget.abs_tol,
        });
    }
    Ok((value, error))
}


/// `∫_a^b f(x) dx` by adaptive Gauss-Kronrod with optional interior breakpoints.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breakpoints: &[f64], budget: &QuadratureBudget) -> Result<Estimate> {
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|p| *p > a && *p < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let segments: Vec<(f64, f64)> = pts.windows(2).map(|w| (w[0], w[1])).collect();
    let (value, error) = integrate_segments(|_, x| f(x), &segments, budget)?;
    Ok(Estimate { value, error })
}

/// Point beyond which `|f| ≤ M·exp(-αx²)` drops below `abs_tol`, with `M`
/// estimated by sampling `|f(x)|·exp(αx²)` on `[0, √(40/α)]`.
///
/// `skip` marks sample points to ignore (e.g. neighbourhoods of poles).
pub fn truncation_point<F, S>(f: F, alpha: f64, budget: &QuadratureBudget, skip: S) -> f64
where
    F: Fn(f64) -> f64,
    S: Fn(f64) -> bool,
{
    truncation(f, alpha, budget, skip).0
}

/// Truncation point and a bound on the discarded tail.
fn truncation<F, S>(f: F, alpha: f64, budget: &QuadratureBudget, skip: S) -> (f64, f64)
where
    F: Fn(f64) -> f64,
    S: Fn(f64) -> bool,
{
    let span = (40.0 / alpha).sqrt();
    let mut m: f64 = 0.0;
    for i in 0..=256 {
        let x = span * i as f64 / 256.0;
        if skip(x) {
            continue;
        }
        let y = f(x).abs() * (alpha * x * x).exp();
        if y.is_finite() {
            m = m.max(y);
        }
    }
    let ratio = (m / budget.abs_tol).max(std::f64::consts::E);
    let x_max = budget.truncation_safety * (ratio.ln() / alpha).sqrt();
    let tail = m * (-alpha * x_max * x_max).exp() / (2.0 * alpha * x_max);
    (x_max, tail)
}

/// `∫_0^∞ f(x) dx` for `f` bounded by a multiple of `exp(-αx²)`.
///
/// ```
/// use udw::quadrature::{integrate_damped, QuadratureBudget};
/// let est = integrate_damped(|x: f64| (-x * x).exp(), 1.0, &QuadratureBudget::default()).unwrap();
/// assert!((est.value - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
/// ```
pub fn integrate_damped<F: Fn(f64) -> f64>(f: F, alpha: f64, budget: &QuadratureBudget) -> Result<Estimate> {
    positive("alpha", alpha)?;
    budget.validate()?;
    let (x_max, tail) = truncation(&f, alpha, budget, |_| false);
    let est = integrate(f, 0.0, x_max, &[], budget)?;
    Ok(Estimate {
        value: est.value,
        error: est.error + tail,
    })
}

/// `PV ∫_0^∞ f_num(x)/g_den(x) dx` where `g_den` vanishes exactly at the
/// simple poles in `poles` and `f_num` is bounded by a multiple of
/// `exp(-αx²)`.
///
/// Outside the symmetric windows `[s−δ, s+δ]` the integrand is integrated
/// directly. Inside, the pole part `c/(x−s)` with `c = f_num(s)/g_den'(s)`
/// is removed; its principal value over the window is zero and the folded
/// remainder `[F(s+t) − c/t] + [F(s−t) + c/t]` on `(0, δ]` is smooth. The
/// window half-width is `min(δ, s/2)` so windows stay inside `(0, ∞)`.
///
/// ```
/// use udw::quadrature::{integrate_pv, PoleSet, QuadratureBudget};
/// // PV ∫ exp(-x²)/(x-1) over (0, ∞)
/// let poles = PoleSet::single(1.0, 1.0).unwrap();
/// let est = integrate_pv(|x: f64| (-x * x).exp(), |x| x - 1.0, &poles, 1.0, &QuadratureBudget::default()).unwrap();
/// assert!((est.value - (-1.302_308_535_738_410_7)).abs() < 1e-9);
/// ```
pub fn integrate_pv<F, G>(f_num: F, g_den: G, poles: &PoleSet, alpha: f64, budget: &QuadratureBudget) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    pv_impl(&f_num, &g_den, None, poles, alpha, budget)
}

/// [`integrate_pv`] with the denominator supplied as an exact difference
/// `g_shift(s, t) = g(s + t) − g(s)` about each root `s`.
///
/// Each point is evaluated about its nearest root, which keeps the window
/// denominators accurate as `t → 0`. `g_den` is used only without poles.
///
/// ```
/// use udw::quadrature::{integrate_pv_shifted, PoleSet, QuadratureBudget};
/// let poles = PoleSet::single(1.0, 2.0).unwrap();
/// let tight = QuadratureBudget { abs_tol: 1e-15, rel_tol: 1e-12, ..Default::default() };
/// // g(x) = x² − 1, g(s + t) − g(s) = (2s + t)t
/// let est = integrate_pv_shifted(|x: f64| (-x * x).exp(), |x| x * x - 1.0, |s, t| (2.0 * s + t) * t, &poles, 1.0, &tight).unwrap();
/// assert!(est.error < 1e-12);
/// ```
pub fn integrate_pv_shifted<F, G, H>(
    f_num: F,
    g_den: G,
    g_shift: H,
    poles: &PoleSet,
    alpha: f64,
    budget: &QuadratureBudget,
) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
    H: Fn(f64, f64) -> f64,
{
    pv_impl(&f_num, &g_den, Some(&g_shift), poles, alpha, budget)
}

fn pv_impl(
    f_num: &dyn Fn(f64) -> f64,
    g_den: &dyn Fn(f64) -> f64,
    g_shift: Option<&dyn Fn(f64, f64) -> f64>,
    poles: &PoleSet,
    alpha: f64,
    budget: &QuadratureBudget,
) -> Result<Estimate> {
    positive("alpha", alpha)?;
    budget.validate()?;
    for (&at, &derivative) in poles.roots().iter().zip(poles.derivatives()) {
        if !(derivative.abs() >= DEGENERACY_FLOOR) {
            return Err(Error::DegeneratePole { at, derivative });
        }
    }
    let roots = poles.roots();
    let halfwidths: Vec<f64> = roots.iter().map(|&s| budget.pv_window_delta.min(0.5 * s)).collect();
    for k in 1..roots.len() {
        if roots[k - 1] + halfwidths[k - 1] > roots[k] - halfwidths[k] {
            return Err(Error::WindowOverlap {
                left: roots[k - 1],
                right: roots[k],
                delta: budget.pv_window_delta,
            });
        }
    }
    let residues: Vec<f64> = roots.iter().zip(poles.derivatives()).map(|(&s, &d)| f_num(s) / d).collect();

    let den = |x: f64| match g_shift {
        Some(shift) if !roots.is_empty() => {
            let k = roots.partition_point(|&s| s < x);
            let nearest = if k == 0 {
                0
            } else if k == roots.len() || x - roots[k - 1] < roots[k] - x {
                k - 1
            } else {
                k
            };
            shift(roots[nearest], x - roots[nearest])
        }
        _ => g_den(x),
    };
    let ratio = |x: f64| f_num(x) / den(x);
    let in_window = |x: f64| roots.iter().zip(&halfwidths).any(|(&s, &h)| (x - s).abs() <= 2.0 * h);
    let (mut x_max, tail) = truncation(ratio, alpha, budget, in_window);
    if let (Some(&s), Some(&h)) = (roots.last(), halfwidths.last()) {
        x_max = x_max.max(s + h + budget.max_panel_width);
    }

    // Outer segments first, then one folded segment per pole.
    let mut segments = Vec::with_capacity(2 * roots.len() + 1);
    let mut left = 0.0;
    for (&s, &h) in roots.iter().zip(&halfwidths) {
        segments.push((left, s - h));
        left = s + h;
    }
    segments.push((left, x_max));
    let n_outer = segments.len();
    for &h in &halfwidths {
        segments.push((0.0, h));
    }

    let (value, error) = integrate_segments(
        |k, x| {
            if k < n_outer {
                ratio(x)
            } else {
                let p = k - n_outer;
                let (s, c) = (roots[p], residues[p]);
                let (up, down) = match g_shift {
                    Some(shift) => (shift(s, x), shift(s, -x)),
                    None => (g_den(s + x), g_den(s - x)),
                };
                (f_num(s + x) / up - c / x) + (f_num(s - x) / down + c / x)
            }
        },
        &segments,
        budget,
    )?;
    Ok(Estimate {
        value,
        error: error + tail,
    })
}

/// All simple roots of `g` on `(0, upper]`.
///
/// The ray is scanned with step `max_step`; each sign change is refined by
/// bisection to `1e-12`. The derivative at a root comes from `dg` when
/// supplied, otherwise from a central difference with step `1e-6`. A local
/// minimum of `|g|` below `1e-10` without a sign change is reported as a
/// tangency.
pub fn bracket_all_roots<G>(g: G, upper: f64, max_step: f64, dg: Option<&dyn Fn(f64) -> f64>) -> Result<PoleSet>
where
    G: Fn(f64) -> f64,
{
    positive("upper", upper)?;
    positive("max_step", max_step)?;
    let n = (upper / max_step).ceil().max(1.0) as usize;
    let x0 = (upper / n as f64) * 1e-9;
    let xs: Vec<f64> = (0..=n).map(|i| if i == 0 { x0 } else { upper * i as f64 / n as f64 }).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();

    let mut roots = Vec::new();
    let mut derivatives = Vec::new();
    let derivative = |x: f64| match dg {
        Some(d) => d(x),
        None => {
            let h = 1e-6 * x.abs().max(1.0);
            (g(x + h) - g(x - h)) / (2.0 * h)
        }
    };

    for i in 0..n {
        let (a, b) = (xs[i], xs[i + 1]);
        let (ga, gb) = (gs[i], gs[i + 1]);
        if ga == 0.0 && i == 0 {
            continue;
        }
        let crosses = (ga < 0.0) != (gb < 0.0) && gb != 0.0 || (gb == 0.0 && i + 1 == n);
        let touches_zero = gb == 0.0 && i + 1 < n;
        if touches_zero {
            let gc = gs[i + 2];
            if (ga < 0.0) != (gc < 0.0) && gc != 0.0 {
                let r = b;
                let d = derivative(r);
                if d.abs() < DEGENERACY_FLOOR {
                    return Err(Error::DegeneratePole { at: r, derivative: d });
                }
                roots.push(r);
                derivatives.push(d);
            } else {
                return Err(Error::DegeneratePole { at: b, derivative: derivative(b) });
            }
            continue;
        }
        if ga == 0.0 {
            continue;
        }
        if crosses {
            let r = if gb == 0.0 { b } else { bisect(&g, a, b, ga) };
            let d = derivative(r);
            if d.abs() < DEGENERACY_FLOOR {
                return Err(Error::DegeneratePole { at: r, derivative: d });
            }
            roots.push(r);
            derivatives.push(d);
        }
    }

    // Tangency: interior local minima of |g| with no sign change on either side.
    for i in 1..n {
        let (gl, gm, gr) = (gs[i - 1], gs[i], gs[i + 1]);
        let same = (gl < 0.0) == (gm < 0.0) && (gm < 0.0) == (gr < 0.0) && gm != 0.0;
        if same && gm.abs() <= gl.abs() && gm.abs() <= gr.abs() {
            let (x, v) = golden_min(|x| g(x).abs(), xs[i - 1], xs[i + 1]);
            if v < 1e-10 {
                return Err(Error::DegeneratePole { at: x, derivative: derivative(x) });
            }
        }
    }
    PoleSet::new(roots, derivatives)
}

/// Root of `g` in `[a, b]` given a sign change, bisected to float resolution.
pub(crate) fn bisect<G: Fn(f64) -> f64>(g: &G, mut a: f64, mut b: f64, mut ga: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn budget() -> QuadratureBudget {
        QuadratureBudget::default()
    }

    #[test]
    fn gaussian_half_line() {
        let est = integrate_damped(|x| (-x * x).exp(), 1.0, &budget()).unwrap();
        assert!((est.value - PI.sqrt() / 2.0).abs() < 1e-12);
        assert!(est.error <= 1e-10);
    }

    #[test]
    fn damped_cosine() {
        let est = integrate_damped(|x| (-x * x).exp() * (2.0 * x).cos(), 1.0, &budget()).unwrap();
        assert!((est.value - PI.sqrt() / 2.0 * (-1.0f64).exp()).abs() < 1e-12);
    }

    fn stable_ratio(x: f64) -> f64 {
        if x == 0.0 {
            return 1.0 / (3.0 * 0.5);
        }
        let s = x.sin();
        (-0.25 * x * x).exp() * (x * x - s * s) / (x * x * (x * x - 0.5 * s * s))
    }

    #[test]
    fn damped_ratio_matches_dense_trapezoid() {
        // 1e6-point trapezoid on [0, 40]; the integrand is smooth and decays
        // like exp(-x²/4), so the rule is accurate far beyond 1e-8.
        let n = 1_000_000;
        let h = 40.0 / n as f64;
        let mut trap = 0.5 * (stable_ratio(0.0) + stable_ratio(40.0));
        for i in 1..n {
            trap += stable_ratio(i as f64 * h);
        }
        trap *= h;
        let est = integrate_damped(stable_ratio, 0.25, &budget()).unwrap();
        assert!((est.value - trap).abs() < 1e-8, "{} vs {}", est.value, trap);
    }

    #[test]
    fn halving_tolerances_moves_less_than_error_estimate() {
        let cases: Vec<(Box<dyn Fn(f64) -> f64>, f64)> = vec![
            (Box::new(|x: f64| (-x * x).exp()), 1.0),
            (Box::new(|x: f64| (-x * x).exp() * (2.0 * x).cos()), 1.0),
            (Box::new(stable_ratio), 0.25),
        ];
        let coarse = QuadratureBudget { abs_tol: 1e-6, rel_tol: 1e-6, ..budget() };
        for (f, alpha) in cases {
            let a = integrate_damped(&f, alpha, &coarse).unwrap();
            let b = integrate_damped(&f, alpha, &coarse.scaled(0.5)).unwrap();
            assert!((a.value - b.value).abs() <= a.error.max(1e-15), "{} {} {:e}", a.value, b.value, a.error);
        }
    }

    // PV over (0, ∞) from windows shrinking toward the pole, extrapolated.
    fn window_extrapolated_pv() -> f64 {
        let f = |x: f64| (-x * x).exp() / (x - 1.0);
        let fine = QuadratureBudget { abs_tol: 1e-14, rel_tol: 1e-13, max_subdivisions: 20000, ..budget() };
        let mut vals = Vec::new();
        let deltas = [1e-2, 1e-3, 1e-4];
        for d in deltas {
            let left = integrate(f, 0.0, 1.0 - d, &[], &fine).unwrap().value;
            let right = integrate(f, 1.0 + d, 12.0, &[], &fine).unwrap().value;
            vals.push(left + right);
        }
        // Omitted window contributes 2δf'(1) + O(δ³): two Richardson passes.
        let r1 = (10.0 * vals[1] - vals[0]) / 9.0;
        let r2 = (10.0 * vals[2] - vals[1]) / 9.0;
        (1000.0 * r2 - r1) / 999.0
    }

    #[test]
    fn pv_matches_shrinking_window_oracle() {
        let poles = PoleSet::single(1.0, 1.0).unwrap();
        let est = integrate_pv(|x| (-x * x).exp(), |x| x - 1.0, &poles, 1.0, &budget()).unwrap();
        let oracle = window_extrapolated_pv();
        assert!((est.value - oracle).abs() < 1e-9, "{} vs {}", est.value, oracle);
    }

    #[test]
    fn pv_symmetric_numerator_contributes_remainder_only() {
        // f(x) = (x-2)·h(x) makes f/g regular; PV equals the ordinary integral.
        let poles = PoleSet::single(2.0, 1.0).unwrap();
        let f = |x: f64| (x - 2.0) * (-x * x).exp();
        let est = integrate_pv(f, |x| x - 2.0, &poles, 1.0, &budget()).unwrap();
        assert!((est.value - PI.sqrt() / 2.0).abs() < 1e-11);
        // A numerator constant across the window has only the subtracted part
        // inside it: the folded remainder vanishes identically.
        let c = 0.7;
        let g = |x: f64| x - 2.0;
        let folded = |t: f64| (c / g(2.0 + t) - c / t) + (c / g(2.0 - t) + c / t);
        for t in [1e-4, 1e-3, 5e-4] {
            assert!(folded(t).abs() < 1e-10 * c / t);
        }
    }

    #[test]
    fn pv_independent_of_window() {
        let f = |x: f64| (-x * x).exp() * (3.0 * x).cos();
        let g = |x: f64| x * x - 0.25 * x.sin().powi(2) - 0.09;
        let poles = bracket_all_roots(g, 5.0, 0.05, None).unwrap();
        let mut vals = Vec::new();
        for d in [1e-2, 1e-3, 1e-4] {
            let b = QuadratureBudget { pv_window_delta: d, ..budget() };
            vals.push(integrate_pv(f, g, &poles, 1.0, &b).unwrap().value);
        }
        assert!((vals[0] - vals[1]).abs() < 1e-9 && (vals[1] - vals[2]).abs() < 1e-9, "{vals:?}");
    }

    #[test]
    fn pv_rejects_double_root() {
        let err = PoleSet::single(1.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::DegeneratePole { .. }));
        let err = bracket_all_roots(|x| (x - 1.0) * (x - 1.0), 4.0, 0.1, None).unwrap_err();
        assert!(matches!(err, Error::DegeneratePole { .. }));
    }

    #[test]
    fn pv_rejects_overlapping_windows() {
        let poles = PoleSet::new(vec![1.0, 1.001], vec![1.0, -1.0]).unwrap();
        let err = integrate_pv(|x| (-x * x).exp(), |x| (x - 1.0) * (1.001 - x), &poles, 1.0, &budget()).unwrap_err();
        assert!(matches!(err, Error::WindowOverlap { .. }));
    }

    #[test]
    fn bracket_quadratic() {
        let p = bracket_all_roots(|x| x * x - 4.0, 10.0, 0.1, Some(&|x| 2.0 * x)).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p.roots()[0] - 2.0).abs() < 1e-12);
        assert!((p.derivatives()[0] - 4.0).abs() < 1e-12);
        let p = bracket_all_roots(|x| x * x - 4.0, 10.0, 0.1, None).unwrap();
        assert!((p.derivatives()[0] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn bracket_sine() {
        let p = bracket_all_roots(f64::sin, 10.0, 0.1, None).unwrap();
        assert_eq!(p.len(), 3);
        for (k, r) in p.roots().iter().enumerate() {
            assert!((r - PI * (k + 1) as f64).abs() < 1e-11);
        }
    }

    fn dense_sign_changes<G: Fn(f64) -> f64>(g: G, upper: f64, n: usize) -> usize {
        let mut count = 0;
        let mut prev = g(upper / n as f64 * 1e-3);
        for i in 1..=n {
            let v = g(upper * i as f64 / n as f64);
            if (v < 0.0) != (prev < 0.0) {
                count += 1;
            }
            prev = v;
        }
        count
    }

    #[test]
    fn bracket_circular_denominator_matches_dense_scan() {
        let (r, dd, w) = (2.0, 0.2, 0.6);
        let g = |s: f64| dd * dd + 4.0 * r * r * (s * w / 2.0).sin().powi(2) - s * s;
        let p = bracket_all_roots(g, 40.0, (0.25f64).min(PI / (8.0 * w)), None).unwrap();
        assert_eq!(p.len(), dense_sign_changes(g, 40.0, 1_000_000));
        for &s in p.roots() {
            assert!(g(s).abs() < 1e-10);
        }
    }

    #[test]
    fn bracket_matches_dense_scan_on_random_draws() {
        let mut state = 0x1234_5678_9abc_def0u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let (r, dd, w) = (0.1 + 3.0 * next(), 0.05 + 2.0 * next(), 0.05 + 0.9 * next());
            let amp = 0.3 + 2.0 * next();
            let g = |s: f64| dd * dd + 4.0 * r * r * (s * w / 2.0).sin().powi(2) - amp * s;
            let step = (0.25f64).min(PI / (8.0 * w));
            match bracket_all_roots(g, 30.0, step, None) {
                Ok(p) => assert_eq!(p.len(), dense_sign_changes(g, 30.0, 1_000_000)),
                Err(Error::DegeneratePole { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn vector_valued_integrand() {
        let (v, _) = integrate_segments(|_, x: f64| [x.cos(), x.sin()], &[(0.0, PI)], &budget()).unwrap();
        assert!(v[0].abs() < 1e-13 && (v[1] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn budget_exhaustion_reported() {
        let tight = QuadratureBudget { max_subdivisions: 3, abs_tol: 1e-15, rel_tol: 1e-15, ..budget() };
        let err = integrate(|x: f64| x.abs().sqrt().recip(), 1e-14, 1.0, &[], &tight).unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { .. }));
    }
}
