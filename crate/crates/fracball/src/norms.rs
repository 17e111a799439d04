//! The L^p, weighted-tail and W^{1,p} norm functionals.

use crate::domain::{BallDomain, DecayClass, FracOrder, ScalarField, Support, VectorField};
use crate::error::{Error, Result};
use crate::quad::{integrate_ball, integrate_exterior, integrate_interval, QuadSpec};
use crate::sphere_area;

/// (∫_{B_r} |f|^p)^{1/p} with an absolute error estimate on the integral.
pub fn lp_norm(f: &ScalarField, dom: &BallDomain, p: f64, q: &QuadSpec) -> Result<(f64, f64)> {
    if p < 1.0 {
        return Err(Error::Domain(format!("L^p norm needs p >= 1, got {p}")));
    }
    let integrand = f.abs_pow(p);
    let res = integrate_ball(&integrand, dom, q)?;
    let val = res.value.max(0.0).powf(1.0 / p);
    Ok((val, res.err_estimate))
}

/// The weighted tail functional ∫_{R^n} |f(x)| / (1 + |x|^{n+2s}) dx.
///
/// The declared decay class must make the integral convergent; otherwise the
/// request is rejected before any quadrature runs.
pub fn tail_weighted_norm(f: &ScalarField, s: &FracOrder, q: &QuadSpec) -> Result<f64> {
    let n = f.n;
    if !f.decay.tail_integrable(s.s()) {
        return Err(Error::DecayIncompatible(format!(
            "decay class {:?} gives a divergent weighted tail for s = {}",
            f.decay,
            s.s()
        )));
    }
    let pow = n as f64 + s.two_s();
    if f.radial {
        let hi = match f.decay {
            DecayClass::Compact(r) => Some(r),
            DecayClass::Power(_) => None,
        };
        let g = f.clone();
        let nf = n as f64;
        let integrand =
            move |rho: f64| g.eval_radial(rho).abs() * rho.powf(nf - 1.0) / (1.0 + rho.powf(pow));
        let mut spec = q.clone();
        let mut breaks = f.kink_radii.clone();
        breaks.push(1.0);
        spec.breakpoints = breaks;
        let res = match hi {
            Some(r) => integrate_interval(&integrand, 0.0, r, &spec),
            None => integrate_interval(&integrand, 0.0, f64::INFINITY, &spec),
        };
        return res.into_result().map(|v| sphere_area(n) * v.value);
    }
    // Non-radial: split at |x| = 1 into a ball piece and an exterior piece.
    let dom = BallDomain::unit(n);
    let g_in = f.clone();
    let mut inner_field = ScalarField::new(n, move |x: &[f64]| {
        let rho = crate::vec_norm(x);
        g_in.eval(x).abs() / (1.0 + rho.powf(pow))
    });
    inner_field.kink_radii = f.kink_radii.clone();
    let inner = integrate_ball(&inner_field, &dom, &q.child(2.0))?;
    let outer = match f.decay {
        DecayClass::Compact(r) if r <= 1.0 => None,
        _ => {
            let g_out = f.clone();
            let mut outer_field = ScalarField::new(n, move |x: &[f64]| {
                let rho = crate::vec_norm(x);
                g_out.eval(x).abs() / (1.0 + rho.powf(pow))
            });
            outer_field.decay = match f.decay {
                DecayClass::Compact(r) => DecayClass::Compact(r),
                DecayClass::Power(k) => DecayClass::Power(k + pow),
            };
            outer_field.kink_radii = f.kink_radii.clone();
            Some(integrate_exterior(&outer_field, &dom, &q.child(2.0))?)
        }
    };
    Ok(inner.value + outer.map_or(0.0, |r| r.value))
}

/// W^{1,p} norm of a vector field on the ball with the p-sum convention
/// (‖b‖_{L^p}^p + ‖∇b‖_{L^p}^p)^{1/p}; the gradient enters through its
/// Frobenius norm.
///
/// The field must either carry closed-form derivatives or be smooth enough
/// for centered finite differences (step h = tol^{1/3} · r).
pub fn sobolev_w1p_norm(b: &VectorField, dom: &BallDomain, p: f64, q: &QuadSpec) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::Domain(format!(
            "W^{{1,p}} norm needs p >= 1, got {p}"
        )));
    }
    let has_closed = b.grad_frobenius_radial(0.5 * dom.r).is_some()
        || b.jacobian_closed(&vec![0.0; dom.n]).is_some();
    if !has_closed && !b.smooth {
        return Err(Error::MissingDerivative(
            "vector field is not smooth and supplies no closed-form Jacobian".into(),
        ));
    }
    let h = q.tol.value().powf(1.0 / 3.0) * dom.r;
    let bm = b.clone();
    let mag_p = ScalarField::new(dom.n, move |x: &[f64]| bm.magnitude_at(x).powf(p));
    let bg = b.clone();
    let grad_p = ScalarField::new(dom.n, move |x: &[f64]| bg.grad_frobenius_at(x, h).powf(p));
    let i1 = integrate_ball(&mag_p, dom, &q.child(2.0))?;
    let i2 = integrate_ball(&grad_p, dom, &q.child(2.0))?;
    Ok((i1.value.max(0.0) + i2.value.max(0.0)).powf(1.0 / p))
}

/// ‖b/d‖_{L^p(B_r)} where d(x) = dist(x, boundary); the boundary-weighted
/// drift norm.
pub fn boundary_weighted_lp(
    b: &VectorField,
    dom: &BallDomain,
    p: f64,
    q: &QuadSpec,
) -> Result<f64> {
    let bb = b.clone();
    let r = dom.r;
    let mut field = ScalarField::new(dom.n, move |x: &[f64]| {
        let d = (r - crate::vec_norm(x)).max(1e-300);
        bb.magnitude_at(x) / d
    });
    field.support = Support::Ball(r);
    field.decay = DecayClass::Compact(r);
    lp_norm(&field, dom, p, q).map(|(v, _)| v)
}
