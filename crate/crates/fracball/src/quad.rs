//! Adaptive integration for the singular and improper integrals the kernels
//! and norms require.
//!
//! The 1-D engine is a globally adaptive Gauss–Kronrod 7/15 scheme. Declared
//! algebraic endpoint singularities are removed by graded power substitutions
//! chosen so the transformed integrand is C^2; logarithmic singularities at
//! the origin are removed by the substitution w = -ln t; infinite upper limits
//! are mapped rationally onto (0,1). The error estimate is the standard
//! nested-rule difference — an estimate, not a bound.
//!
//! Ball and exterior-of-ball integrals reduce to the 1-D engine: radially for
//! radial integrands, through a tensor sphere-by-radius rule for general
//! integrands in dimensions up to three, and through seeded Monte Carlo above
//! three. All deterministic paths reduce in a fixed order, so results are
//! reproducible regardless of scheduling.

use crate::domain::{BallDomain, DecayClass, ScalarField};
use crate::error::{Error, Result};
use crate::{sphere_area, vec_norm};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BinaryHeap;

/// Tolerance target for an adaptive integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tol {
    /// Absolute error target.
    Abs(f64),
    /// Error target relative to the magnitude of the integral.
    Rel(f64),
}

impl Tol {
    pub fn value(self) -> f64 {
        match self {
            Tol::Abs(t) | Tol::Rel(t) => t,
        }
    }

    fn target(self, current: f64) -> f64 {
        match self {
            Tol::Abs(t) => t,
            Tol::Rel(t) => t * current.abs().max(1e-300),
        }
    }
}

/// Controls for one adaptive integral.
#[derive(Debug, Clone)]
pub struct QuadSpec {
    pub tol: Tol,
    pub max_subdiv: usize,
    /// Algebraic endpoint singularity exponents (beta0 at the lower endpoint,
    /// beta1 at the upper): integrand ~ (t-a)^{-beta0}, (b-t)^{-beta1} with
    /// beta < 1.
    pub endpoint_sing: (Option<f64>, Option<f64>),
    /// Remove a logarithmic singularity at t = 0 by substituting w = -ln t.
    pub log_substitution: bool,
    /// Known interior kink locations; the initial subdivision splits there.
    pub breakpoints: Vec<f64>,
    /// Gauss–Legendre order of the fixed sphere rule used by tensor rules.
    pub sphere_order: usize,
    /// Seed for the Monte Carlo fallback in dimensions above three.
    pub mc_seed: u64,
    pub mc_samples: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            tol: Tol::Rel(1e-8),
            max_subdiv: 4000,
            endpoint_sing: (None, None),
            log_substitution: false,
            breakpoints: Vec::new(),
            sphere_order: 24,
            mc_seed: 0x5eed_f00d,
            mc_samples: 400_000,
        }
    }
}

impl QuadSpec {
    pub fn with_tol(tol: Tol) -> Self {
        QuadSpec {
            tol,
            ..Default::default()
        }
    }

    pub fn sing(mut self, beta0: Option<f64>, beta1: Option<f64>) -> Self {
        self.endpoint_sing = (beta0, beta1);
        self
    }

    pub fn breaks(mut self, pts: &[f64]) -> Self {
        self.breakpoints = pts.to_vec();
        self
    }

    /// Derived spec for an inner integral of a nested rule: absolute targets
    /// are divided by `scale`, relative targets are kept.
    pub fn child(&self, scale: f64) -> Self {
        let tol = match self.tol {
            Tol::Abs(t) => Tol::Abs(t / scale.max(1.0)),
            Tol::Rel(t) => Tol::Rel(t),
        };
        QuadSpec {
            tol,
            endpoint_sing: (None, None),
            log_substitution: false,
            breakpoints: Vec::new(),
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.tol.value() <= 0.0 {
            return Err(Error::Domain("tolerance must be positive".into()));
        }
        if self.max_subdiv < 1 {
            return Err(Error::Domain("max_subdiv must be at least 1".into()));
        }
        for b in [self.endpoint_sing.0, self.endpoint_sing.1]
            .into_iter()
            .flatten()
        {
            if b >= 1.0 {
                return Err(Error::Domain(format!(
                    "endpoint singularity exponent {b} must be < 1"
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of one adaptive integral.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub err_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    pub fn exact(value: f64) -> Self {
        QuadResult {
            value,
            err_estimate: 0.0,
            evaluations: 0,
            converged: true,
        }
    }

    /// Convert to an error when refinement stalled.
    pub fn into_result(self) -> Result<QuadResult> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::QuadNonConverged {
                value: self.value,
                err_estimate: self.err_estimate,
            })
        }
    }
}

// Gauss–Kronrod 7/15 nodes and weights (positive half).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let fsum = f(c - x) + f(c + x);
        kron += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    (kron * h, (kron - gauss).abs() * h.abs())
}

type DynF<'a> = Box<dyn Fn(f64) -> f64 + 'a>;

struct Piece<'a> {
    f: DynF<'a>,
    lo: f64,
    hi: f64,
}

fn grade_exponent(beta: f64) -> f64 {
    if beta <= 0.0 {
        1.0
    } else {
        (3.0 / (1.0 - beta)).ceil().clamp(2.0, 64.0)
    }
}

// Below this distance (relative to the span) from a graded endpoint the
// integrand is no longer evaluated directly: reconstructing the abscissa
// cancels catastrophically in f64 and singular factors computed from it are
// garbage. Inside the cutoff the declared model f ~ c (distance)^{-beta} is
// used instead, with c pinned by one evaluation at the cutoff.
const GRADE_CUTOFF_REL: f64 = 1e-13;

fn graded_left<'a>(f: DynF<'a>, lo: f64, hi: f64, beta: f64) -> Piece<'a> {
    let m = grade_exponent(beta);
    if m == 1.0 {
        return Piece { f, lo, hi };
    }
    let span = hi - lo;
    let cut = GRADE_CUTOFF_REL * span;
    let at_cut = std::cell::Cell::new(f64::NAN);
    let g = move |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let delta = u.powf(m);
        let jac = m * u.powf(m - 1.0);
        if delta < cut {
            if at_cut.get().is_nan() {
                at_cut.set(f(lo + cut) * cut.powf(beta));
            }
            return at_cut.get() * delta.powf(-beta) * jac;
        }
        f(lo + delta) * jac
    };
    Piece {
        f: Box::new(g),
        lo: 0.0,
        hi: span.powf(1.0 / m),
    }
}

fn graded_right<'a>(f: DynF<'a>, lo: f64, hi: f64, beta: f64) -> Piece<'a> {
    let m = grade_exponent(beta);
    if m == 1.0 {
        return Piece { f, lo, hi };
    }
    let span = hi - lo;
    let cut = GRADE_CUTOFF_REL * span;
    let at_cut = std::cell::Cell::new(f64::NAN);
    let g = move |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let delta = u.powf(m);
        let jac = m * u.powf(m - 1.0);
        if delta < cut {
            if at_cut.get().is_nan() {
                at_cut.set(f(hi - cut) * cut.powf(beta));
            }
            return at_cut.get() * delta.powf(-beta) * jac;
        }
        f(hi - delta) * jac
    };
    Piece {
        f: Box::new(g),
        lo: 0.0,
        hi: span.powf(1.0 / m),
    }
}

struct HeapItem {
    err: f64,
    counter: u64,
    piece: usize,
    a: f64,
    b: f64,
    val: f64,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err && self.counter == other.counter
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.counter.cmp(&self.counter))
    }
}

fn adaptive_core(pieces: &[Piece<'_>], q: &QuadSpec) -> QuadResult {
    let mut heap: BinaryHeap<HeapItem> = BinaryHeap::new();
    let mut done: Vec<HeapItem> = Vec::new();
    let mut counter: u64 = 0;
    let mut evaluations = 0usize;
    let mut total_val = 0.0;
    let mut total_err = 0.0;

    for (idx, p) in pieces.iter().enumerate() {
        if p.hi <= p.lo {
            continue;
        }
        let (val, err) = gk15(&p.f, p.lo, p.hi);
        evaluations += 15;
        total_val += val;
        total_err += err;
        heap.push(HeapItem {
            err,
            counter,
            piece: idx,
            a: p.lo,
            b: p.hi,
            val,
        });
        counter += 1;
    }

    let mut subdivisions = 0usize;
    let mut converged = true;
    while total_err > q.tol.target(total_val) {
        if subdivisions >= q.max_subdiv {
            converged = false;
            break;
        }
        let Some(worst) = heap.pop() else {
            converged = false;
            break;
        };
        let width = worst.b - worst.a;
        let scale = worst.a.abs().max(worst.b.abs()).max(1.0);
        if worst.err == 0.0 || width <= 1e-15 * scale {
            // Cannot usefully refine further.
            done.push(worst);
            if heap.is_empty() {
                converged = total_err <= q.tol.target(total_val);
                break;
            }
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let f = &pieces[worst.piece].f;
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        evaluations += 30;
        total_val += v1 + v2 - worst.val;
        total_err += e1 + e2 - worst.err;
        heap.push(HeapItem {
            err: e1,
            counter,
            piece: worst.piece,
            a: worst.a,
            b: mid,
            val: v1,
        });
        counter += 1;
        heap.push(HeapItem {
            err: e2,
            counter,
            piece: worst.piece,
            a: mid,
            b: worst.b,
            val: v2,
        });
        counter += 1;
        subdivisions += 1;
    }

    // Deterministic reduction: sum segments ordered by (piece, left endpoint),
    // with compensated summation.
    let mut segs: Vec<HeapItem> = heap.into_vec();
    segs.extend(done);
    segs.sort_by(|x, y| x.piece.cmp(&y.piece).then(x.a.total_cmp(&y.a)));
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut err = 0.0;
    for s in &segs {
        let y = s.val - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        err += s.err;
    }
    let converged = converged && err <= q.tol.target(sum);
    QuadResult {
        value: sum,
        err_estimate: err,
        evaluations,
        converged,
    }
}

/// Adaptive integral of `f` over `(a, b)`; `b` may be `f64::INFINITY`.
///
/// Declared endpoint singularities, interior breakpoints and the logarithmic
/// substitution come from `q`.
pub fn integrate_interval<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, q: &QuadSpec) -> QuadResult {
    match integrate_interval_checked(&f, a, b, q) {
        Ok(r) => r,
        Err(_) => QuadResult {
            value: f64::NAN,
            err_estimate: f64::INFINITY,
            evaluations: 0,
            converged: false,
        },
    }
}

/// As [`integrate_interval`] but surfacing invalid-specification errors.
pub fn integrate_interval_checked<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    q: &QuadSpec,
) -> Result<QuadResult> {
    integrate_dyn(f, a, b, q)
}

// Recursion (orientation flip, log substitution) goes through a dynamic
// callee so the closure tower does not monomorphize without bound.
fn integrate_dyn(f: &dyn Fn(f64) -> f64, a: f64, b: f64, q: &QuadSpec) -> Result<QuadResult> {
    q.validate()?;
    if a == b {
        return Ok(QuadResult::exact(0.0));
    }
    if a > b {
        let mut r = integrate_dyn(f, b, a, q)?;
        r.value = -r.value;
        return Ok(r);
    }

    if q.log_substitution {
        if a < 0.0 {
            return Err(Error::Domain("log substitution requires a >= 0".into()));
        }
        // w = -ln t maps (a,b) onto (-ln b, -ln a).
        let g = move |w: f64| {
            let t = (-w).exp();
            if t == 0.0 {
                return 0.0;
            }
            f(t) * t
        };
        let lo = -b.ln();
        let sub = QuadSpec {
            log_substitution: false,
            endpoint_sing: (None, None),
            breakpoints: Vec::new(),
            ..q.clone()
        };
        if a > 0.0 {
            return integrate_dyn(&g, lo, -a.ln(), &sub);
        }
        // a = 0 leaves an infinite w-tail. The substituted integrand can only
        // be evaluated while e^{-w} (and powers of it inside f) stay inside
        // f64 range, so integrate directly up to an evaluability horizon and
        // close the remainder with an extrapolated power-law tail model. The
        // model assumes the transformed integrand has an asymptotic power
        // series C w^{-gamma}(1 + c1/w + ...) — the class the substitution is
        // meant for — and its uncertainty is folded into err_estimate.
        let mut wmax = 700.0_f64;
        let wmin = lo.max(0.0) + 1.0;
        while wmax > 8.0 * wmin {
            if g(wmax).is_finite() {
                break;
            }
            wmax *= 0.5;
        }
        if !g(wmax).is_finite() {
            return Err(Error::Domain(
                "log-substituted integrand not evaluatable on any usable range".into(),
            ));
        }
        let finite = integrate_dyn(&g, lo, wmax, &sub)?;
        let (tail, tail_err) = log_tail_model(&g, wmax, wmin);
        let value = finite.value + tail;
        let err = finite.err_estimate + tail_err;
        let converged = finite.converged && err.is_finite() && err <= q.tol.target(value);
        return Ok(QuadResult {
            value,
            err_estimate: err,
            evaluations: finite.evaluations + 8,
            converged,
        });
    }

    let mut pieces: Vec<Piece<'_>> = Vec::new();
    let (beta0, beta1) = q.endpoint_sing;

    // Finite span over which interior breakpoints apply.
    let finite_hi = if b.is_infinite() {
        a.max(0.0) + a.abs().max(1.0)
    } else {
        b
    };
    let mut cuts: Vec<f64> = q
        .breakpoints
        .iter()
        .copied()
        .filter(|p| *p > a && *p < finite_hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![a];
    edges.extend(cuts);
    edges.push(finite_hi);

    let nseg = edges.len() - 1;
    for i in 0..nseg {
        let (lo, hi) = (edges[i], edges[i + 1]);
        let base: DynF<'_> = Box::new(|t| f(t));
        let piece = if i == 0 && beta0.is_some() {
            graded_left(base, lo, hi, beta0.unwrap())
        } else if i == nseg - 1 && !b.is_infinite() && beta1.is_some() {
            graded_right(base, lo, hi, beta1.unwrap())
        } else {
            Piece { f: base, lo, hi }
        };
        pieces.push(piece);
    }

    if b.is_infinite() {
        // t = A + S v/(1-v) maps (0,1) onto (A, inf).
        let big_a = finite_hi;
        let s = big_a.abs().max(1.0);
        let mapped: DynF<'_> = Box::new(move |v: f64| {
            let om = 1.0 - v;
            if om <= 0.0 {
                return 0.0;
            }
            let t = big_a + s * v / om;
            f(t) * s / (om * om)
        });
        // A graded transform at v = 1 absorbs slowly decaying tails.
        pieces.push(graded_right(mapped, 0.0, 1.0, 5.0 / 6.0));
    }

    Ok(adaptive_core(&pieces, q))
}

/// Estimate ∫_W^∞ φ(w) dw for a transformed logarithmic integrand assumed to
/// behave like w^{-γ}(C0 + C1/w + C2/w²) at infinity.
///
/// γ comes from Richardson extrapolation of dyadic log-slopes; the amplitude
/// series is then fitted linearly. Returns (tail, error estimate); a NaN tail
/// marks a model failure (sign changes or γ ≤ 1, where no convergent tail can
/// be certified).
fn log_tail_model(g: &dyn Fn(f64) -> f64, w_max: f64, w_min: f64) -> (f64, f64) {
    let ws = [w_max / 8.0, w_max / 4.0, w_max / 2.0, w_max];
    if ws[0] < w_min {
        // Not enough asymptotic room for the slope ladder: fall back to a
        // single-power estimate from the last octave, with its full value as
        // the error bar.
        let (p1, p2) = (g(w_max / 2.0), g(w_max));
        if p2 == 0.0 {
            return (0.0, 0.0);
        }
        if !(p1 * p2 > 0.0) {
            return (f64::NAN, f64::INFINITY);
        }
        let gamma = (p1 / p2).ln() / std::f64::consts::LN_2;
        if gamma <= 1.01 {
            return (f64::NAN, f64::INFINITY);
        }
        let tail = p2 * w_max / (gamma - 1.0);
        return (tail, tail.abs());
    }
    let ph: [f64; 4] = [g(ws[0]), g(ws[1]), g(ws[2]), g(ws[3])];
    if ph.iter().any(|v| !v.is_finite()) {
        return (f64::NAN, f64::INFINITY);
    }
    if ph[3] == 0.0 && ph[2] == 0.0 {
        // Decay faster than any power (or support ended): nothing out there.
        return (0.0, 0.0);
    }
    let sign = ph[3].signum();
    if ph.iter().any(|v| v * sign <= 0.0) {
        return (f64::NAN, f64::INFINITY);
    }
    let s = [
        (ph[0] / ph[1]).ln() / std::f64::consts::LN_2,
        (ph[1] / ph[2]).ln() / std::f64::consts::LN_2,
        (ph[2] / ph[3]).ln() / std::f64::consts::LN_2,
    ];
    // Slopes carry 1/w and 1/w² corrections at dyadically shrinking scales;
    // two Neville steps remove both.
    let s12 = 2.0 * s[2] - s[1];
    let s01 = 2.0 * s[1] - s[0];
    let gamma = s12 + (s12 - s01) / 3.0;
    if !(gamma > 1.01) {
        return (f64::NAN, f64::INFINITY);
    }
    if gamma > 80.0 {
        // Effectively super-polynomial decay; the remainder is below noise.
        return (0.0, (ph[3] * w_max).abs());
    }
    // Fit w^{gamma} φ(w) = C0 + C1/w + C2/w² at the top three scales.
    let y: Vec<f64> = (1..4).map(|j| ph[j] * ws[j].powf(gamma)).collect();
    let x: Vec<f64> = (1..4).map(|j| 1.0 / ws[j]).collect();
    // 3x3 Vandermonde solve by Lagrange form evaluated for the monomial
    // coefficients.
    let d0 = (x[0] - x[1]) * (x[0] - x[2]);
    let d1 = (x[1] - x[0]) * (x[1] - x[2]);
    let d2 = (x[2] - x[0]) * (x[2] - x[1]);
    let c2 = y[0] / d0 + y[1] / d1 + y[2] / d2;
    let c1 = -(y[0] * (x[1] + x[2]) / d0 + y[1] * (x[0] + x[2]) / d1 + y[2] * (x[0] + x[1]) / d2);
    let c0 = y[0] * x[1] * x[2] / d0 + y[1] * x[0] * x[2] / d1 + y[2] * x[0] * x[1] / d2;
    let t0 = c0 * w_max.powf(1.0 - gamma) / (gamma - 1.0);
    let t1 = c1 * w_max.powf(-gamma) / gamma;
    let t2 = c2 * w_max.powf(-gamma - 1.0) / (gamma + 1.0);
    let tail = t0 + t1 + t2;
    // Cross-check against the cruder first-order model; the spread plus the
    // last retained term bound the model error heuristically.
    let gamma1 = s12;
    let tail1 = if gamma1 > 1.01 {
        ph[3] * w_max / (gamma1 - 1.0)
    } else {
        f64::INFINITY
    };
    let err = (tail - tail1).abs().min(tail.abs()) * 0.5 + t2.abs();
    (tail, err)
}

// ---------------------------------------------------------------------------
// Gauss–Legendre nodes and sphere rules
// ---------------------------------------------------------------------------

/// Gauss–Legendre nodes and weights on (-1, 1), by Newton iteration.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order.max(1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' by recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed symmetric quadrature on the unit sphere S^{n-1}, n <= 3, expressed as
/// directions with mean-weights summing to one.
pub struct SphereRule {
    pub n: usize,
    pub dirs: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn new(n: usize, order: usize) -> Result<Self> {
        match n {
            1 => Ok(SphereRule {
                n,
                dirs: vec![vec![1.0], vec![-1.0]],
                weights: vec![0.5, 0.5],
            }),
            2 => {
                let m = (4 * order).max(8);
                let mut dirs = Vec::with_capacity(m);
                let w = 1.0 / m as f64;
                for j in 0..m {
                    let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
                    dirs.push(vec![phi.cos(), phi.sin()]);
                }
                Ok(SphereRule {
                    n,
                    dirs,
                    weights: vec![w; m],
                })
            }
            3 => {
                let (mu, wmu) = gauss_legendre(order.max(4));
                let m = 2 * order.max(4);
                let mut dirs = Vec::new();
                let mut weights = Vec::new();
                for (i, &c) in mu.iter().enumerate() {
                    let sint = (1.0 - c * c).max(0.0).sqrt();
                    for j in 0..m {
                        let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
                        dirs.push(vec![sint * phi.cos(), sint * phi.sin(), c]);
                        weights.push(wmu[i] / 2.0 / m as f64);
                    }
                }
                Ok(SphereRule { n, dirs, weights })
            }
            _ => Err(Error::Domain(format!(
                "deterministic sphere rule only available for n <= 3 (got n = {n})"
            ))),
        }
    }

    /// Mean of `f` over the sphere of radius `radius` centered at `center`.
    pub fn mean<F: Fn(&[f64]) -> f64>(&self, f: F, center: &[f64], radius: f64) -> f64 {
        let mut acc = 0.0;
        let mut y = vec![0.0; self.n];
        for (d, w) in self.dirs.iter().zip(&self.weights) {
            for k in 0..self.n {
                y[k] = center[k] + radius * d[k];
            }
            acc += w * f(&y);
        }
        acc
    }
}

/// Mean over the sphere of radius `b` centered at distance `a` from the origin
/// of a *radial* function `u(rho)`, for any n >= 1 (deterministic; the mu
/// integral carries the Jacobi weight (1-mu^2)^{(n-3)/2}).
///
/// `kink_radii` lists radii where `u` has kinks; the corresponding points on
/// the mu axis split the quadrature.
pub fn sphere_mean_radial<F: Fn(f64) -> f64>(
    u: &F,
    a: f64,
    b: f64,
    n: usize,
    kink_radii: &[f64],
    order: usize,
) -> f64 {
    debug_assert!(a >= 0.0 && b >= 0.0);
    match n {
        1 => 0.5 * (u((a + b).abs()) + u((a - b).abs())),
        _ => {
            // With mu = cos(theta), |center + b*omega| =
            // sqrt(a^2 + b^2 + 2ab*mu) and the weighted mu integral becomes
            // int_0^pi sin(theta)^{n-2} u(...) dtheta, which is smooth in
            // theta for every n (the mu form is singular at mu = ±1 when
            // n = 2).
            let radius_at = |mu: f64| (a * a + b * b + 2.0 * a * b * mu).max(0.0).sqrt();
            let mut cuts = vec![0.0, std::f64::consts::PI];
            if a * b > 0.0 {
                for &rk in kink_radii {
                    let mu = (rk * rk - a * a - b * b) / (2.0 * a * b);
                    if mu > -1.0 && mu < 1.0 {
                        cuts.push(mu.acos());
                    }
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let (nodes, wts) = gauss_legendre(order.max(8));
            // Normalization: int_0^pi sin(theta)^{n-2} dtheta
            // = sqrt(pi) Gamma((n-1)/2) / Gamma(n/2).
            let nf = n as f64;
            let cn = statrs::function::gamma::gamma(nf / 2.0)
                / (std::f64::consts::PI.sqrt() * statrs::function::gamma::gamma((nf - 1.0) / 2.0));
            let mut acc = 0.0;
            for w in cuts.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                let h = 0.5 * (hi - lo);
                let c = 0.5 * (hi + lo);
                for (x, wt) in nodes.iter().zip(&wts) {
                    let theta = c + h * x;
                    let val = u(radius_at(theta.cos()));
                    acc += wt * h * cn * theta.sin().powi(n as i32 - 2) * val;
                }
            }
            acc
        }
    }
}

// ---------------------------------------------------------------------------
// Ball and exterior integrals
// ---------------------------------------------------------------------------

/// Integral of `f` over the ball `dom`.
///
/// Radial integrands reduce to one dimension; general integrands use a tensor
/// sphere-by-radius rule for n <= 3 and seeded Monte Carlo above that. For
/// radial integrands `q.endpoint_sing` refers to the reduced radial integrand.
pub fn integrate_ball(f: &ScalarField, dom: &BallDomain, q: &QuadSpec) -> Result<QuadResult> {
    let n = dom.n;
    if f.n != n {
        return Err(Error::Domain(format!(
            "field dimension {} != domain dimension {n}",
            f.n
        )));
    }
    let r = dom.r;
    let sigma = sphere_area(n);
    if f.radial {
        let g = |rho: f64| f.eval_radial(rho) * rho.powi(n as i32 - 1) * sigma;
        return Ok(integrate_interval(g, 0.0, r, q));
    }
    if n <= 3 {
        let rule = SphereRule::new(n, q.sphere_order)?;
        let inner = |rho: f64| {
            let origin = vec![0.0; n];
            rule.mean(|y| f.eval(y), &origin, rho) * rho.powi(n as i32 - 1) * sigma
        };
        return Ok(integrate_interval(inner, 0.0, r, q));
    }
    Ok(mc_ball(|y| f.eval(y), n, r, q))
}

fn mc_ball<F: Fn(&[f64]) -> f64>(f: F, n: usize, r: f64, q: &QuadSpec) -> QuadResult {
    let mut rng = ChaCha8Rng::seed_from_u64(q.mc_seed);
    let vol = crate::ball_volume(n, r);
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut y = vec![0.0; n];
    let samples = q.mc_samples.max(2);
    for _ in 0..samples {
        // Uniform point in the ball: Gaussian direction, radius ~ U^{1/n}.
        let mut norm2 = 0.0;
        for v in y.iter_mut() {
            let g: f64 = sample_standard_normal(&mut rng);
            *v = g;
            norm2 += g * g;
        }
        let norm = norm2.sqrt().max(1e-300);
        let u: f64 = rng.gen::<f64>();
        let rad = r * u.powf(1.0 / n as f64);
        for v in y.iter_mut() {
            *v *= rad / norm;
        }
        let val = f(&y);
        sum += val;
        sumsq += val * val;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = ((sumsq / m) - mean * mean).max(0.0);
    let value = vol * mean;
    let err = vol * (var / m).sqrt();
    QuadResult {
        value,
        err_estimate: err,
        evaluations: samples,
        converged: err <= q.tol.target(value),
    }
}

fn sample_standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box–Muller; one value per call keeps the stream layout simple.
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Integral of `f` over the ball, in spherical coordinates about an interior
/// point `x0` where the integrand may carry an integrable algebraic
/// singularity (exponent `q.endpoint_sing.0`, measured on the reduced radial
/// integrand).
pub fn integrate_ball_about<F: Fn(&[f64]) -> f64 + Sync>(
    f: F,
    dom: &BallDomain,
    x0: &[f64],
    q: &QuadSpec,
) -> Result<QuadResult> {
    let n = dom.n;
    let r = dom.r;
    let a = vec_norm(x0);
    if a >= r {
        return Err(Error::Domain("expansion point must be interior".into()));
    }
    if n > 3 {
        return Ok(mc_ball(|y| f(y), n, r, q));
    }
    let rule = SphereRule::new(n, q.sphere_order)?;
    let sigma = sphere_area(n);
    let inner_spec = QuadSpec {
        endpoint_sing: (q.endpoint_sing.0, None),
        breakpoints: Vec::new(),
        ..q.child(sigma)
    };
    let mut value = 0.0;
    let mut err = 0.0;
    let mut evals = 0usize;
    let mut converged = true;
    for (d, w) in rule.dirs.iter().zip(&rule.weights) {
        let dot: f64 = x0.iter().zip(d).map(|(xi, di)| xi * di).sum();
        let rho_max = -dot + (r * r - a * a + dot * dot).max(0.0).sqrt();
        let g = |rho: f64| {
            let mut yy = [0.0f64; 3];
            for k in 0..n {
                yy[k] = x0[k] + rho * d[k];
            }
            f(&yy[..n]) * rho.powi(n as i32 - 1)
        };
        let res = integrate_interval(g, 0.0, rho_max, &inner_spec);
        value += sigma * w * res.value;
        err += sigma * w * res.err_estimate;
        evals += res.evaluations;
        converged &= res.converged;
    }
    Ok(QuadResult {
        value,
        err_estimate: err,
        evaluations: evals,
        converged,
    })
}

/// Integral of `f` over the complement of the ball `dom`.
///
/// The radial variable is mapped by t = r/|y| onto (0, 1]; a declared
/// algebraic layer at |y| -> r+ becomes `q.endpoint_sing.1` at t = 1, and the
/// decay class governs the t -> 0 end.
pub fn integrate_exterior(f: &ScalarField, dom: &BallDomain, q: &QuadSpec) -> Result<QuadResult> {
    let n = dom.n;
    if f.n != n {
        return Err(Error::Domain(format!(
            "field dimension {} != domain dimension {n}",
            f.n
        )));
    }
    let r = dom.r;
    let sigma = sphere_area(n);
    match f.decay {
        DecayClass::Compact(_) => {}
        DecayClass::Power(k) => {
            if k <= n as f64 {
                return Err(Error::DecayIncompatible(format!(
                    "exterior integral needs decay faster than |y|^-{n}, declared rate {k}"
                )));
            }
        }
    }
    if f.radial {
        let g = |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            let rho = r / t;
            f.eval_radial(rho) * rho.powi(n as i32 - 1) * (r / (t * t)) * sigma
        };
        return Ok(integrate_interval(g, 0.0, 1.0, q));
    }
    if n <= 3 {
        let rule = SphereRule::new(n, q.sphere_order)?;
        let origin = vec![0.0; n];
        let g = |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            let rho = r / t;
            rule.mean(|y| f.eval(y), &origin, rho) * rho.powi(n as i32 - 1) * (r / (t * t)) * sigma
        };
        return Ok(integrate_interval(g, 0.0, 1.0, q));
    }
    // Monte Carlo in the mapped coordinates for n > 3.
    let mut rng = ChaCha8Rng::seed_from_u64(q.mc_seed);
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let samples = q.mc_samples.max(2);
    let mut y = vec![0.0; n];
    for _ in 0..samples {
        let t: f64 = rng.gen::<f64>().max(1e-12);
        let mut norm2 = 0.0;
        for v in y.iter_mut() {
            let g = sample_standard_normal(&mut rng);
            *v = g;
            norm2 += g * g;
        }
        let norm = norm2.sqrt().max(1e-300);
        let rho = r / t;
        for v in y.iter_mut() {
            *v *= rho / norm;
        }
        let val = f.eval(&y) * rho.powi(n as i32 - 1) * (r / (t * t)) * sigma;
        sum += val;
        sumsq += val * val;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = ((sumsq / m) - mean * mean).max(0.0);
    let err = (var / m).sqrt();
    Ok(QuadResult {
        value: mean,
        err_estimate: err,
        evaluations: samples,
        converged: err <= q.tol.target(mean),
    })
}
