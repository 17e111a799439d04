//! Maximum-principle laboratory: the critical-integrability counterexample
//! family, manufactured coefficient and drift families, and verdict-producing
//! experiments for the weak, strong, and fractional maximum principles.

use crate::domain::{BallDomain, FracOrder, ScalarField, Support, VectorField};
use crate::error::{Error, Result};
use crate::fracop::classical_laplacian;
use crate::norms::{boundary_weighted_lp, lp_norm, sobolev_w1p_norm};
use crate::quad::{integrate_interval, QuadSpec, Tol};
use crate::solvers::{solve_dirichlet_fractional, solve_forced_fractional, solve_radial_poisson};
use crate::vec_norm;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const SAMPLE_SEED: u64 = 0x6d70_5eed;
const RADIAL_GRID: usize = 200;
const RANDOM_POINTS: usize = 1000;

/// Parameters of the family u_ε(x) = (-ln(ε|x|))^{-α}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CounterexampleParams {
    pub n: usize,
    pub alpha: f64,
    pub eps: f64,
}

impl CounterexampleParams {
    pub fn new(n: usize, alpha: f64, eps: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!(
                "counterexample family needs n >= 3, got {n}"
            )));
        }
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(eps > 0.0 && eps < (-1.0f64).exp()) {
            return Err(Error::Domain(format!(
                "eps = {eps} must lie in (0, 1/e) so that -ln(eps|x|) > 0 on the closed unit ball"
            )));
        }
        Ok(CounterexampleParams { n, alpha, eps })
    }
}

/// Outcome of one maximum-principle experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MPVerdict {
    pub hypothesis_norms: BTreeMap<String, f64>,
    pub interior_min: f64,
    pub boundary_min: f64,
    pub residual_max: f64,
    pub conclusion_holds: bool,
    pub hypothesis_violated: bool,
    pub quantitative_bound: Option<f64>,
    pub flags: Vec<String>,
}

impl MPVerdict {
    fn new() -> Self {
        MPVerdict {
            hypothesis_norms: BTreeMap::new(),
            interior_min: f64::INFINITY,
            boundary_min: f64::INFINITY,
            residual_max: 0.0,
            conclusion_holds: false,
            hypothesis_violated: false,
            quantitative_bound: None,
            flags: Vec::new(),
        }
    }
}

/// One row of a parameter sweep, CSV- and JSON-ready.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub eps: f64,
    #[serde(rename = "norm_c_Lnhalf")]
    pub norm_c_lnhalf: f64,
    pub u_at_origin: f64,
    pub boundary_min: f64,
    pub residual_max: f64,
}

/// u_ε(x) = (-ln(ε|x|))^{-α}, extended by its limit 0 at the origin, with
/// closed-form gradient and Laplacian attached. Valid for |x| < 1/ε.
pub fn counterexample_u(p: &CounterexampleParams) -> ScalarField {
    let (alpha, eps) = (p.alpha, p.eps);
    let n = p.n;
    let big_l = move |rho: f64| -(eps * rho).ln();
    let mut f = ScalarField::radial_with_derivs(
        n,
        move |rho: f64| {
            if rho == 0.0 {
                0.0
            } else {
                big_l(rho).powf(-alpha)
            }
        },
        move |rho: f64| {
            if rho == 0.0 {
                0.0
            } else {
                alpha * big_l(rho).powf(-alpha - 1.0) / rho
            }
        },
        move |rho: f64| {
            if rho == 0.0 {
                return 0.0;
            }
            let l = big_l(rho);
            alpha / (rho * rho)
                * ((alpha + 1.0) * l.powf(-alpha - 2.0) + (n as f64 - 2.0) * l.powf(-alpha - 1.0))
        },
    );
    f.eval_radius_limit = Some(1.0 / eps);
    f
}

/// c_ε(x) = [α(α+1)/(-ln(ε|x|)) + α(n-2)] / (|x|² (-ln(ε|x|))); positive on
/// the punctured ball, +∞ at the origin, and -Δu_ε + c_ε u_ε = 0 exactly.
pub fn counterexample_c(p: &CounterexampleParams) -> ScalarField {
    let (alpha, eps) = (p.alpha, p.eps);
    let nf = p.n as f64;
    let mut f = ScalarField::radial_fn(p.n, move |rho: f64| {
        if rho == 0.0 {
            return f64::INFINITY;
        }
        let l = -(eps * rho).ln();
        (alpha * (alpha + 1.0) / l + alpha * (nf - 2.0)) / (rho * rho * l)
    });
    f = f.with_support(Support::Ball(1.0));
    f
}

/// One Theorem-2 sweep over a strictly decreasing ε grid: per ε the critical
/// norm ‖c_ε‖_{L^{n/2}(B_1)}, u_ε(0), the boundary value, and the largest
/// pointwise PDE residual over 50 interior radii.
pub fn critical_sweep(
    n: usize,
    alpha: f64,
    eps_list: &[f64],
    q: &QuadSpec,
) -> Result<Vec<ExperimentRecord>> {
    if eps_list.is_empty() {
        return Err(Error::Domain("eps grid must be nonempty".into()));
    }
    if !eps_list.windows(2).all(|w| w[0] > w[1]) {
        return Err(Error::Domain("eps grid must be strictly decreasing".into()));
    }
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let p = CounterexampleParams::new(n, alpha, eps)?;
        let u = counterexample_u(&p);
        let c = counterexample_c(&p);
        let norm = counterexample_norm(&p, q)?;
        let mut residual_max = 0.0f64;
        for i in 0..50 {
            let rho = (i as f64 + 0.5) / 50.0;
            let x = point_at(n, rho);
            let lap = u.laplacian_closed(&x).unwrap();
            let res = (-lap + c.eval_radial(rho) * u.eval_radial(rho)).abs();
            residual_max = residual_max.max(res);
        }
        rows.push(ExperimentRecord {
            eps,
            norm_c_lnhalf: norm,
            u_at_origin: u.eval_radial(0.0),
            boundary_min: u.eval_radial(1.0),
            residual_max,
        });
    }
    Ok(rows)
}

/// ‖c_ε‖_{L^{n/2}(B_1)} through the substitution v = 1/(-ln(ερ)), which
/// turns the logarithmically singular radial integral into
///
/// ```text
/// ∫_{B_1} c_ε^{n/2} = σ_{n-1} α^{n/2} ∫_0^{1/(-ln ε)} v^{n/2-2} ((α+1)v + n-2)^{n/2} dv,
/// ```
///
/// a regular integral evaluable to near machine precision.
pub fn counterexample_norm(p: &CounterexampleParams, q: &QuadSpec) -> Result<f64> {
    let (alpha, eps) = (p.alpha, p.eps);
    let nf = p.n as f64;
    let half = nf / 2.0;
    let upper = 1.0 / -eps.ln();
    let spec = QuadSpec {
        endpoint_sing: (Some((2.0 - half).max(0.0)), None),
        breakpoints: Vec::new(),
        log_substitution: false,
        ..q.clone()
    };
    let integral = integrate_interval(
        |v: f64| v.powf(half - 2.0) * ((alpha + 1.0) * v + nf - 2.0).powf(half),
        0.0,
        upper,
        &spec,
    )
    .into_result()?;
    Ok((crate::sphere_area(p.n) * alpha.powf(half) * integral.value).powf(1.0 / half))
}

/// c := Δu/u, so that -Δu + cu = 0 exactly for positive u with a closed-form
/// Laplacian.
pub fn manufactured_zero_order(u: &ScalarField) -> Result<ScalarField> {
    if !u.has_closed_laplacian() {
        return Err(Error::MissingDerivative(
            "manufactured zero-order coefficient needs a closed-form Laplacian".into(),
        ));
    }
    let n = u.n;
    for i in 0..128 {
        let rho = (i as f64 + 0.5) / 128.0;
        let x = point_at(n, rho);
        if u.eval(&x) <= 0.0 {
            return Err(Error::Inadmissible(format!(
                "manufactured zero-order family needs u > 0; u = {} at |x| = {rho}",
                u.eval(&x)
            )));
        }
    }
    let uu = u.clone();
    let c = if u.radial {
        ScalarField::radial_fn(n, move |rho: f64| {
            let x = point_at(uu.n, rho);
            uu.laplacian_closed(&x).unwrap() / uu.eval(&x)
        })
    } else {
        ScalarField::new(n, move |x: &[f64]| {
            uu.laplacian_closed(x).unwrap() / uu.eval(x)
        })
    };
    Ok(c)
}

/// b⃗ := (Δu/u′(ρ)) x/|x|, so that -Δu + b⃗·∇u = 0 exactly for radial u with
/// nonvanishing radial derivative. Rejected unless ‖b⃗‖_{L^n(B_1)} is finite.
pub fn manufactured_drift(u: &ScalarField) -> Result<VectorField> {
    if !u.radial {
        return Err(Error::Domain(
            "manufactured drift needs a radial profile".into(),
        ));
    }
    if !u.has_closed_laplacian() || !u.has_closed_gradient() {
        return Err(Error::MissingDerivative(
            "manufactured drift needs closed-form gradient and Laplacian".into(),
        ));
    }
    let n = u.n;
    let du = radial_derivative(u);
    for i in 0..128 {
        let rho = 0.002 + 0.996 * i as f64 / 127.0;
        if du(rho).abs() < 1e-12 {
            return Err(Error::Inadmissible(format!(
                "radial derivative vanishes at |x| = {rho}; drift undefined"
            )));
        }
    }
    let uu = u.clone();
    let duc = radial_derivative(u);
    let phi = move |rho: f64| {
        let x = point_at(uu.n, rho);
        uu.laplacian_closed(&x).unwrap() / duc(rho)
    };
    let b = VectorField::radial_drift(n, phi, None);
    let bb = b.clone();
    let nf = n as f64;
    let admissibility = integrate_interval(
        |rho: f64| bb.magnitude_radial(rho).unwrap().powf(nf) * rho.powf(nf - 1.0),
        0.0,
        1.0,
        &QuadSpec {
            log_substitution: true,
            ..QuadSpec::with_tol(Tol::Rel(1e-7))
        },
    );
    if !admissibility.converged || !admissibility.value.is_finite() {
        return Err(Error::Inadmissible(
            "manufactured drift is not in L^n(B_1); the equality pair is outside the hypothesis class"
                .into(),
        ));
    }
    Ok(b)
}

/// Zero-order or drift perturbation handed to an experiment.
pub enum Perturbation<'a> {
    ZeroOrder(&'a ScalarField),
    Drift(&'a VectorField),
}

/// Weak maximum principle: with the hypothesis norms recorded, sample u on a
/// dense radial grid plus seeded random interior points and check that
/// nonnegative boundary data forces nonnegative interior values.
pub fn check_weak_mp(
    u: &ScalarField,
    pert: &Perturbation<'_>,
    dom: &BallDomain,
    tol: f64,
    q: &QuadSpec,
) -> Result<MPVerdict> {
    let n = dom.n;
    let mut v = MPVerdict::new();
    match pert {
        Perturbation::ZeroOrder(c) => {
            let p = n as f64 / 2.0;
            let q_log = QuadSpec {
                log_substitution: true,
                ..q.clone()
            };
            let (full, _) = lp_norm(c, dom, p, &q_log)?;
            let (minus, _) = lp_norm(&c.negative_part(), dom, p, &q_log)?;
            v.hypothesis_norms.insert("norm_c_Ln2".into(), full);
            v.hypothesis_norms.insert("norm_c_minus_Ln2".into(), minus);
        }
        Perturbation::Drift(b) => {
            let nf = n as f64;
            let mag = magnitude_field(b);
            let (bn, _) = lp_norm(&mag, dom, nf, q)?;
            v.hypothesis_norms.insert("norm_b_Ln".into(), bn);
        }
    }
    let (imin, bmin) = sample_extrema(u, dom);
    v.interior_min = imin;
    v.boundary_min = bmin;
    v.residual_max = residual_max(u, pert, dom)?;
    if bmin < -tol {
        v.hypothesis_violated = true;
        v.flags.push("hypothesis_violated".into());
        v.conclusion_holds = true;
    } else {
        v.conclusion_holds = imin >= -tol;
    }
    Ok(v)
}

/// Strong maximum principle, Theorem-3 style: for p > n/2 solve -Δf = c⁺
/// radially, set l = 1 - ‖f‖_∞, and check u ≥ l·m on the sample grid. At or
/// below the critical exponent p = n/2 the machinery is inapplicable and the
/// verdict records CRITICAL_CASE together with the observed interior minimum.
pub fn strong_mp_bound(
    u: &ScalarField,
    c: &ScalarField,
    m: f64,
    p: f64,
    q: &QuadSpec,
) -> Result<MPVerdict> {
    let n = u.n;
    let nf = n as f64;
    let dom = BallDomain::new(n, 1.0)?;
    let mut v = MPVerdict::new();
    let (imin, bmin) = sample_extrema(u, &dom);
    v.interior_min = imin;
    v.boundary_min = bmin;
    let cp = radial_positive_envelope(c);
    let q_log = QuadSpec {
        log_substitution: true,
        ..q.clone()
    };
    if let Ok((cnorm, _)) = lp_norm(&cp, &dom, p.max(1.0), &q_log) {
        v.hypothesis_norms.insert("norm_c_plus_Lp".into(), cnorm);
    }
    if p <= nf / 2.0 {
        v.flags.push("CRITICAL_CASE".into());
        v.conclusion_holds = false;
        return Ok(v);
    }
    if bmin < m - 1e-9 {
        v.hypothesis_violated = true;
        v.flags.push("hypothesis_violated".into());
        v.conclusion_holds = true;
        return Ok(v);
    }
    let f = solve_radial_poisson(&cp, 1.0, q)?;
    let mut f_sup = 0.0f64;
    for i in 0..=RADIAL_GRID {
        let rho = i as f64 / RADIAL_GRID as f64;
        f_sup = f_sup.max(f.eval_radial(rho));
    }
    v.hypothesis_norms.insert("norm_f_Linf".into(), f_sup);
    let l = 1.0 - f_sup;
    if l <= 0.0 {
        v.flags.push("bound_vacuous".into());
        v.conclusion_holds = true;
        return Ok(v);
    }
    let bound = l * m;
    v.quantitative_bound = Some(bound);
    v.conclusion_holds = imin >= bound - 1e-9;
    Ok(v)
}

/// Nonnegative exterior data or interior forcing for the fractional checks.
pub enum FracData<'a> {
    Exterior(&'a ScalarField),
    Forcing(&'a ScalarField),
}

/// Fractional maximum principle: solve by the representation formula, sample
/// the interior sign, and record the critical hypothesis norms of any
/// supplied perturbation. Drift perturbations require s ∈ (1/2, 1).
pub fn fractional_mp_check(
    data: &FracData<'_>,
    s: FracOrder,
    pert: Option<&Perturbation<'_>>,
    q: &QuadSpec,
) -> Result<MPVerdict> {
    let field = match data {
        FracData::Exterior(g) => g,
        FracData::Forcing(h) => h,
    };
    let n = field.n;
    let dom = BallDomain::new(n, 1.0)?;
    let mut v = MPVerdict::new();
    let p_crit = n as f64 / (2.0 * s.s());
    if let Some(pert) = pert {
        match pert {
            Perturbation::ZeroOrder(c) => {
                let q_log = QuadSpec {
                    log_substitution: true,
                    ..q.clone()
                };
                let (minus, _) = lp_norm(&c.negative_part(), &dom, p_crit.max(1.0), &q_log)?;
                v.hypothesis_norms.insert("norm_c_minus_Ln2s".into(), minus);
            }
            Perturbation::Drift(b) => {
                s.require_drift_range()?;
                let w1p = sobolev_w1p_norm(b, &dom, p_crit.max(1.0), q)?;
                let bd = boundary_weighted_lp(b, &dom, p_crit.max(1.0), q)?;
                v.hypothesis_norms.insert("norm_b_W1p".into(), w1p);
                v.hypothesis_norms.insert("norm_b_over_d_Lp".into(), bd);
            }
        }
    }
    let u = match data {
        FracData::Exterior(g) => {
            let mut dmin = f64::INFINITY;
            for i in 0..64 {
                let rho = 1.0 + 4.0 * (i as f64 + 0.5) / 64.0;
                dmin = dmin.min(g.eval_radial(rho));
            }
            v.boundary_min = dmin;
            solve_dirichlet_fractional(g, 1.0, s, q)?
        }
        FracData::Forcing(h) => {
            let mut dmin = f64::INFINITY;
            for i in 0..64 {
                let rho = (i as f64 + 0.5) / 64.0;
                dmin = dmin.min(h.eval_radial(rho));
            }
            v.boundary_min = 0.0;
            v.hypothesis_norms.insert("min_forcing".into(), dmin);
            solve_forced_fractional(h, 1.0, s, q)?
        }
    };
    let mut imin = f64::INFINITY;
    for i in 0..24 {
        let rho = 0.9 * (i as f64 + 0.5) / 24.0;
        imin = imin.min(u.eval_radial(rho));
    }
    v.interior_min = imin;
    let tol = 1e-4;
    if v.boundary_min < -tol {
        v.hypothesis_violated = true;
        v.flags.push("hypothesis_violated".into());
        v.conclusion_holds = true;
    } else {
        v.conclusion_holds = imin >= -tol;
    }
    Ok(v)
}

fn point_at(n: usize, rho: f64) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[0] = rho;
    x
}

fn radial_derivative(u: &ScalarField) -> impl Fn(f64) -> f64 {
    let uu = u.clone();
    move |rho: f64| {
        let x = point_at(uu.n, rho);
        let g = uu.gradient_closed(&x).unwrap();
        g[0]
    }
}

fn magnitude_field(b: &VectorField) -> ScalarField {
    let n = b.n;
    if b.radial {
        let bb = b.clone();
        ScalarField::radial_fn(n, move |rho: f64| {
            bb.magnitude_radial(rho)
                .unwrap_or_else(|| bb.magnitude_at(&point_at(n, rho)))
        })
    } else {
        let bb = b.clone();
        ScalarField::new(n, move |x: &[f64]| bb.magnitude_at(x))
    }
}

/// Radial supremum envelope of the positive part of c: exact for radial c,
/// a direction-sampled conservative majorant otherwise.
fn radial_positive_envelope(c: &ScalarField) -> ScalarField {
    let n = c.n;
    if c.radial {
        let cc = c.clone();
        return ScalarField::radial_fn(n, move |rho: f64| cc.eval_radial(rho).max(0.0))
            .with_support(Support::Ball(1.0));
    }
    let cc = c.clone();
    ScalarField::radial_fn(n, move |rho: f64| {
        let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED ^ 0x11);
        let mut sup = 0.0f64;
        for _ in 0..64 {
            let dir = random_direction(&mut rng, n);
            let x: Vec<f64> = dir.iter().map(|d| d * rho).collect();
            sup = sup.max(cc.eval(&x));
        }
        sup
    })
    .with_support(Support::Ball(1.0))
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n)
            .map(|_| {
                let (u1, u2): (f64, f64) = (rng.gen::<f64>().max(1e-300), rng.gen());
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let norm = vec_norm(&v);
        if norm > 1e-12 {
            return v.iter().map(|c| c / norm).collect();
        }
    }
}

fn sample_extrema(u: &ScalarField, dom: &BallDomain) -> (f64, f64) {
    let n = dom.n;
    let r = dom.r;
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let mut imin = f64::INFINITY;
    for i in 0..=RADIAL_GRID {
        let rho = r * i as f64 / RADIAL_GRID as f64 * 0.999;
        imin = imin.min(u.eval_radial(rho));
    }
    for _ in 0..RANDOM_POINTS {
        let dir = random_direction(&mut rng, n);
        let rho = r * 0.999 * rng.gen::<f64>().powf(1.0 / n as f64);
        let x: Vec<f64> = dir.iter().map(|d| d * rho).collect();
        imin = imin.min(u.eval(&x));
    }
    let mut bmin = f64::INFINITY;
    for _ in 0..200 {
        let dir = random_direction(&mut rng, n);
        let x: Vec<f64> = dir.iter().map(|d| d * r).collect();
        bmin = bmin.min(u.eval(&x));
    }
    (imin, bmin)
}

fn residual_max(u: &ScalarField, pert: &Perturbation<'_>, dom: &BallDomain) -> Result<f64> {
    let n = dom.n;
    let mut worst = 0.0f64;
    for i in 0..40 {
        let rho = dom.r * (i as f64 + 0.5) / 40.0;
        let x = point_at(n, rho);
        let lap = match u.laplacian_closed(&x) {
            Some(l) => l,
            None => classical_laplacian(u, &x, 1e-4)?,
        };
        let lu = match pert {
            Perturbation::ZeroOrder(c) => -lap + c.eval(&x) * u.eval(&x),
            Perturbation::Drift(b) => {
                let grad = match u.gradient_closed(&x) {
                    Some(g) => g,
                    None => {
                        return Err(Error::MissingDerivative(
                            "drift residual needs a closed-form gradient".into(),
                        ))
                    }
                };
                let bv = b.eval(&x);
                let dot: f64 = grad.iter().zip(&bv).map(|(g, b)| g * b).sum();
                -lap + dot
            }
        };
        worst = worst.max(lu.abs());
    }
    Ok(worst)
}
