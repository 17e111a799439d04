//! Pointwise principal-value evaluation of the fractional Laplacian, the
//! classical Laplacian, mollification and min-truncation.
//!
//! The P.V. integral is evaluated in its symmetrized spherical form
//!
//! ```text
//! (-Δ)^s u(x) = C(n,s) σ_{n-1} ∫_0^∞ (u(x) - M(x,ρ)) ρ^{-1-2s} dρ,
//! ```
//!
//! where M(x,ρ) is the mean of u over the sphere of radius ρ about x. The
//! symmetrization is an identity for the principal value and makes the
//! integrand O(ρ^{1-2s}) at the origin. Three zones are used: a Taylor zone
//! below ρ_min where u(x) - M cancels below f64 resolution and the expansion
//! -Δu(x) ρ²/(2n) takes over, an adaptive mid zone, and a tail that is
//! analytic for compactly supported fields and adaptive otherwise.

use crate::domain::{DecayClass, FracOrder, ScalarField, Support};
use crate::error::{Error, Result};
use crate::kernels::KernelConstants;
use crate::quad::{gauss_legendre, integrate_interval, sphere_mean_radial, QuadSpec, SphereRule};
use crate::{sphere_area, vec_norm};

/// Controls for one principal-value evaluation.
#[derive(Debug, Clone)]
pub struct PVSpec {
    /// Near-field split radius; below it cached radial profiles are bypassed
    /// in favor of exact evaluation. `None` picks 0.1 times the distance to
    /// the nearest kink sphere (or 0.5 in its absence).
    pub delta: Option<f64>,
    /// Radius factor beyond which decay-class tail handling applies.
    pub far_cutoff: f64,
    /// Finite-difference step for the Laplacian entering the Taylor zone.
    pub fd_step: f64,
    /// Lower edge of the numerically integrated zone, relative to scale.
    pub rho_min_rel: f64,
    /// Order of the mu rule inside sphere means.
    pub mean_order: usize,
}

impl Default for PVSpec {
    fn default() -> Self {
        PVSpec {
            delta: None,
            far_cutoff: 10.0,
            fd_step: 1e-3,
            rho_min_rel: 1e-4,
            mean_order: 24,
        }
    }
}

impl PVSpec {
    fn validate(&self) -> Result<()> {
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < self.far_cutoff) {
                return Err(Error::Domain(format!(
                    "delta = {d} must satisfy 0 < delta < far_cutoff = {}",
                    self.far_cutoff
                )));
            }
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::Domain("fd_step must be positive".into()));
        }
        Ok(())
    }
}

/// (-Δ)^s u(x) by the symmetrized principal-value integral.
pub fn pv_fractional_laplacian(
    u: &ScalarField,
    x: &[f64],
    s: FracOrder,
    pv: &PVSpec,
    q: &QuadSpec,
) -> Result<f64> {
    pv.validate()?;
    let n = u.n;
    if x.len() != n {
        return Err(Error::Domain(format!(
            "point dimension {} != field dimension {n}",
            x.len()
        )));
    }
    if !u.decay.tail_integrable(s.s()) {
        return Err(Error::DecayIncompatible(format!(
            "field with decay {:?} is outside the 2s-weighted tail class for s = {}",
            u.decay,
            s.s()
        )));
    }
    if !u.radial && n > 3 {
        return Err(Error::Domain(
            "deterministic P.V. evaluation needs a radial field for n > 3".into(),
        ));
    }
    let a = vec_norm(x);
    let mut kink_dists: Vec<f64> = Vec::new();
    let mut nearest_kink = f64::INFINITY;
    for &rk in &u.kink_radii {
        for d in [(a - rk).abs(), a + rk] {
            nearest_kink = nearest_kink.min(d);
            if d > 0.0 {
                kink_dists.push(d);
            }
        }
    }
    if nearest_kink < 1e-10 {
        return Err(Error::MissingDerivative(format!(
            "x at |x| = {a} sits on a kink sphere of the field"
        )));
    }
    let scale = a.max(1.0);
    let delta = pv.delta.unwrap_or_else(|| {
        if nearest_kink.is_finite() {
            (0.1 * nearest_kink).min(0.5 * scale)
        } else {
            0.5 * scale
        }
    });
    let rho_min = (pv.rho_min_rel * scale)
        .min(0.5 * delta)
        .min(0.25 * nearest_kink);

    // Exact value at the center; cached-profile noise here would contaminate
    // the whole near field.
    let u_at = if u.radial {
        u.eval_radial_exact(a)
    } else {
        u.eval(x)
    };

    // Laplacian for the Taylor zone.
    let lap = match u.laplacian_closed(x) {
        Some(l) => l,
        None => {
            if !u.smooth {
                return Err(Error::MissingDerivative(
                    "P.V. Taylor zone needs a closed-form Laplacian or a smooth field".into(),
                ));
            }
            classical_laplacian(u, x, pv.fd_step.min(0.5 * rho_min.max(pv.fd_step)))?
        }
    };
    let two_s = s.two_s();
    let taylor = -(lap / (2.0 * n as f64)) * rho_min.powf(2.0 - two_s) / (2.0 - two_s);

    // Sphere mean as a function of the sphere radius rho.
    let mean_at: Box<dyn Fn(f64) -> f64> = if u.radial {
        let exact = {
            let uu = u.clone();
            move |rho: f64| uu.eval_radial_exact(rho)
        };
        let cached = {
            let uu = u.clone();
            move |rho: f64| uu.eval_radial(rho)
        };
        let kinks = u.kink_radii.clone();
        let order = pv.mean_order;
        Box::new(move |rho: f64| {
            if rho <= delta {
                sphere_mean_radial(&exact, a, rho, n, &kinks, order)
            } else {
                sphere_mean_radial(&cached, a, rho, n, &kinks, order)
            }
        })
    } else {
        let rule = SphereRule::new(n, pv.mean_order)?;
        let uu = u.clone();
        let xc = x.to_vec();
        Box::new(move |rho: f64| rule.mean(|y| uu.eval(y), &xc, rho))
    };

    let integrand = |rho: f64| (u_at - mean_at(rho)) * rho.powf(-1.0 - two_s);

    // Analytic tail for compact support: beyond rc + a every sphere misses
    // the support entirely.
    let compact_edge = match u.decay {
        DecayClass::Compact(rc) => Some(rc + a),
        DecayClass::Power(_) => None,
    };
    let far = pv.far_cutoff * scale;
    let (upper, tail) = match compact_edge {
        Some(edge) if edge <= far => (edge, u_at * edge.powf(-two_s) / two_s),
        _ => (f64::INFINITY, 0.0),
    };

    let mut breaks: Vec<f64> = kink_dists;
    breaks.push(delta);
    let spec = QuadSpec {
        breakpoints: breaks,
        endpoint_sing: (None, None),
        ..q.clone()
    };
    let mid = integrate_interval(&integrand, rho_min, upper, &spec).into_result()?;

    let k = KernelConstants::standard(n, s.s())?;
    Ok(k.c_op * sphere_area(n) * (taylor + mid.value + tail))
}

/// Δu(x): closed form when attached, else finite differences (fourth-order
/// five-point on the radial profile for radial fields, second-order central
/// per axis otherwise).
pub fn classical_laplacian(u: &ScalarField, x: &[f64], fd_step: f64) -> Result<f64> {
    if let Some(l) = u.laplacian_closed(x) {
        return Ok(l);
    }
    if !u.smooth {
        return Err(Error::MissingDerivative(
            "no closed-form Laplacian and the field is not declared smooth".into(),
        ));
    }
    if !(fd_step > 0.0) {
        return Err(Error::Domain("fd_step must be positive".into()));
    }
    let n = u.n;
    if u.radial {
        let a = vec_norm(x);
        let h = fd_step;
        let g = |rho: f64| u.eval_radial_exact(rho.abs());
        if a < 2.0 * h {
            // At (or near) the origin: Δu = n u''(0) with the even profile.
            let d2 = (g(a + h) - 2.0 * g(a) + g(a - h)) / (h * h);
            return Ok(n as f64 * d2);
        }
        let (m2, m1, p1, p2) = (g(a - 2.0 * h), g(a - h), g(a + h), g(a + 2.0 * h));
        let c = g(a);
        let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
        let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
        return Ok(d2 + (n as f64 - 1.0) / a * d1);
    }
    let mut acc = 0.0;
    let mut xp = x.to_vec();
    let c = u.eval(x);
    for k in 0..n {
        xp[k] = x[k] + fd_step;
        let p = u.eval(&xp);
        xp[k] = x[k] - fd_step;
        let m = u.eval(&xp);
        xp[k] = x[k];
        acc += (p - 2.0 * c + m) / (fd_step * fd_step);
    }
    Ok(acc)
}

/// Mollification u_ε = η_ε * u with the standard bump
/// η(z) = c_n exp(-1/(1-|z|²)) on B_1.
///
/// The returned field evaluates the convolution by a fixed product rule
/// (Gauss-Legendre radially, tensor sphere rule angularly). The bump is
/// normalized by the same radial rule, so constants are reproduced to
/// machine precision rather than to the rule's resolution of the bump's
/// analytic mass. If `u` carries an evaluation-validity radius, the
/// mollified field's validity shrinks by `eps` and `try_eval` outside it
/// reports a domain error.
pub fn mollify(u: &ScalarField, eps: f64, q: &QuadSpec) -> Result<ScalarField> {
    if !(eps > 0.0) {
        return Err(Error::Domain(
            "mollification radius must be positive".into(),
        ));
    }
    let n = u.n;
    if n > 3 && !u.radial {
        return Err(Error::Domain(
            "deterministic mollification needs n <= 3 or a radial field".into(),
        ));
    }
    let raw = |t: f64| {
        if t >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - t * t)).exp()
        }
    };
    let radial_order = 20usize;
    let (gl_nodes, gl_weights) = gauss_legendre(radial_order);
    let nf = n as f64;
    let sigma = sphere_area(n);
    let mass: f64 = gl_nodes
        .iter()
        .zip(&gl_weights)
        .map(|(t, w)| {
            let t = 0.5 * (t + 1.0);
            0.5 * w * raw(t) * t.powf(nf - 1.0)
        })
        .sum();
    let norm = (mass * sigma).recip();

    let mut out = if u.radial {
        let uu = u.clone();
        let kinks = u.kink_radii.clone();
        let order = q.sphere_order;
        let nodes = gl_nodes.clone();
        let weights = gl_weights.clone();
        ScalarField::radial_fn(n, move |rho_x: f64| {
            let mut acc = 0.0;
            for (t, w) in nodes.iter().zip(&weights) {
                let t = 0.5 * (t + 1.0);
                let mean = sphere_mean_radial(
                    &|r: f64| uu.eval_radial(r),
                    rho_x,
                    eps * t,
                    n,
                    &kinks,
                    order,
                );
                acc += 0.5 * w * raw(t) * t.powf(nf - 1.0) * mean;
            }
            acc * norm * sigma
        })
    } else {
        let uu = u.clone();
        let rule = SphereRule::new(n, q.sphere_order)?;
        let nodes = gl_nodes;
        let weights = gl_weights;
        ScalarField::new(n, move |x: &[f64]| {
            let mut acc = 0.0;
            for (t, w) in nodes.iter().zip(&weights) {
                let t = 0.5 * (t + 1.0);
                let mean = rule.mean(|y| uu.eval(y), x, eps * t);
                acc += 0.5 * w * raw(t) * t.powf(nf - 1.0) * mean;
            }
            acc * norm * sigma
        })
    };
    out.support = u.support;
    out.decay = match u.decay {
        DecayClass::Compact(rc) => DecayClass::Compact(rc + eps),
        DecayClass::Power(k) => DecayClass::Power(k),
    };
    out.eval_radius_limit = u.eval_radius_limit.map(|l| l - eps);
    if let Support::Ball(r) = u.support {
        // A ball-restricted field only determines its mollification on the
        // eps-shrunk ball; outside, the evaluator convolves the declared
        // (zero) extension.
        let shrunk = r - eps;
        out.eval_radius_limit = Some(out.eval_radius_limit.map_or(shrunk, |l| l.min(shrunk)));
    }
    // Mollification smooths kinks away.
    out.kink_radii = Vec::new();
    out.smooth = true;
    Ok(out)
}

/// v = min{u, 0} (Lemma-style truncation), preserving radial/support
/// metadata.
pub fn truncate_min(u: &ScalarField) -> ScalarField {
    u.min_zero()
}

/// Convenience: a radial field carrying (1-|x|^2)^s_+ with its kink declared;
/// the unique closed-form eigenpair of the P.V. operator on the ball used as
/// an oracle throughout the tests.
pub fn boundary_power_field(n: usize, s: f64) -> ScalarField {
    let mut f = ScalarField::radial_fn(n, move |rho: f64| {
        let t = 1.0 - rho * rho;
        if t <= 0.0 {
            0.0
        } else {
            t.powf(s)
        }
    })
    .with_kinks(&[1.0])
    .with_decay(DecayClass::Compact(1.0));
    f.smooth = false;
    // Smooth in the open ball: the closed-form Laplacian is available there,
    // which is what the P.V. Taylor zone needs.
    let lap = move |x: &[f64]| {
        let rho2: f64 = x.iter().map(|v| v * v).sum();
        let t = 1.0 - rho2;
        if t <= 0.0 {
            return 0.0;
        }
        let nf = x.len() as f64;
        // Δ (1-ρ²)^s = -2s n (1-ρ²)^{s-1} + 4 s (s-1) ρ² (1-ρ²)^{s-2}.
        -2.0 * s * nf * t.powf(s - 1.0) + 4.0 * s * (s - 1.0) * rho2 * t.powf(s - 2.0)
    };
    f = f.with_laplacian(lap);
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::Tol;
    use approx::assert_relative_eq;
    use statrs::function::gamma::gamma;

    fn spec(tol: f64) -> QuadSpec {
        QuadSpec::with_tol(Tol::Abs(tol))
    }

    #[test]
    fn pv_of_constant_vanishes() {
        let u = ScalarField::constant(3, 5.0).with_decay(DecayClass::Power(0.0));
        let s = FracOrder::new(0.75).unwrap();
        let v = pv_fractional_laplacian(&u, &[0.2, 0.0, 0.1], s, &PVSpec::default(), &spec(1e-9))
            .unwrap();
        assert!(v.abs() < 1e-8, "got {v}");
    }

    #[test]
    fn pv_eigenfunction_oracle() {
        // (-Δ)^s (1-|x|²)^s_+ = 4^s Γ(n/2+s) Γ(1+s) / Γ(n/2) inside B_1.
        for &(n, s) in &[(3usize, 0.75f64), (3, 0.4), (2, 0.6)] {
            let u = boundary_power_field(n, s);
            let so = FracOrder::new(s).unwrap();
            let exact =
                4f64.powf(s) * gamma(n as f64 / 2.0 + s) * gamma(1.0 + s) / gamma(n as f64 / 2.0);
            for &a in &[0.0, 0.3, 0.6] {
                let mut x = vec![0.0; n];
                x[0] = a;
                let v =
                    pv_fractional_laplacian(&u, &x, so, &PVSpec::default(), &spec(1e-9)).unwrap();
                assert_relative_eq!(v, exact, max_relative = 2e-4);
            }
        }
    }

    #[test]
    fn pv_eigenfunction_oracle_radial_n5() {
        let (n, s) = (5usize, 0.75f64);
        let u = boundary_power_field(n, s);
        let so = FracOrder::new(s).unwrap();
        let exact =
            4f64.powf(s) * gamma(n as f64 / 2.0 + s) * gamma(1.0 + s) / gamma(n as f64 / 2.0);
        let x = [0.4, 0.0, 0.0, 0.0, 0.0];
        let v = pv_fractional_laplacian(&u, &x, so, &PVSpec::default(), &spec(1e-9)).unwrap();
        assert_relative_eq!(v, exact, max_relative = 2e-4);
    }

    #[test]
    fn pv_linearity() {
        let s = FracOrder::new(0.6).unwrap();
        let q = spec(1e-9);
        let u = boundary_power_field(3, 0.6);
        let w = ScalarField::radial_fn(3, |rho| (-rho * rho).exp())
            .with_decay(DecayClass::Power(8.0))
            .with_laplacian(|x: &[f64]| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (4.0 * r2 - 6.0) * (-r2).exp()
            });
        let x = [0.25, 0.0, 0.0];
        let (alpha, beta) = (2.0, -0.7);
        let comb = ScalarField::linear_comb(alpha, &u, beta, &w);
        let lu = pv_fractional_laplacian(&u, &x, s, &PVSpec::default(), &q).unwrap();
        let lw = pv_fractional_laplacian(&w, &x, s, &PVSpec::default(), &q).unwrap();
        let lc = pv_fractional_laplacian(&comb, &x, s, &PVSpec::default(), &q).unwrap();
        assert_relative_eq!(lc, alpha * lu + beta * lw, max_relative = 1e-5);
    }

    #[test]
    fn pv_split_radius_independence() {
        let s = FracOrder::new(0.75).unwrap();
        let q = spec(1e-10);
        let w = ScalarField::radial_fn(3, |rho| (-rho * rho).exp())
            .with_decay(DecayClass::Power(8.0))
            .with_laplacian(|x: &[f64]| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (4.0 * r2 - 6.0) * (-r2).exp()
            });
        let x = [0.4, 0.1, 0.0];
        let base = pv_fractional_laplacian(
            &w,
            &x,
            s,
            &PVSpec {
                delta: Some(0.4),
                ..PVSpec::default()
            },
            &q,
        )
        .unwrap();
        let halved = pv_fractional_laplacian(
            &w,
            &x,
            s,
            &PVSpec {
                delta: Some(0.2),
                ..PVSpec::default()
            },
            &q,
        )
        .unwrap();
        assert_relative_eq!(base, halved, max_relative = 1e-8);
    }

    #[test]
    fn pv_rejects_growth_outside_tail_class() {
        let u = ScalarField::radial_fn(3, |rho| rho * rho).with_decay(DecayClass::Power(-2.0));
        let s = FracOrder::new(0.75).unwrap();
        assert!(matches!(
            pv_fractional_laplacian(&u, &[0.0; 3], s, &PVSpec::default(), &spec(1e-6)),
            Err(Error::DecayIncompatible(_))
        ));
    }

    #[test]
    fn pv_rejects_point_on_kink() {
        let u = boundary_power_field(3, 0.75);
        let s = FracOrder::new(0.75).unwrap();
        assert!(matches!(
            pv_fractional_laplacian(&u, &[1.0, 0.0, 0.0], s, &PVSpec::default(), &spec(1e-6)),
            Err(Error::MissingDerivative(_))
        ));
    }

    #[test]
    fn classical_laplacian_examples() {
        let sq = ScalarField::radial_fn(3, |rho| rho * rho);
        assert_relative_eq!(
            classical_laplacian(&sq, &[0.3, -0.1, 0.2], 1e-3).unwrap(),
            6.0,
            epsilon = 1e-7
        );
        assert_relative_eq!(
            classical_laplacian(&sq, &[0.0; 3], 1e-3).unwrap(),
            6.0,
            epsilon = 1e-6
        );

        let harmonic = ScalarField::new(3, |x: &[f64]| x[0]);
        assert_relative_eq!(
            classical_laplacian(&harmonic, &[0.2, 0.5, -0.3], 1e-4).unwrap(),
            0.0,
            epsilon = 1e-6
        );

        // Radial FD path against a closed form: Δ e^{-ρ²} = (4ρ² - 2n) e^{-ρ²}.
        let g = ScalarField::radial_fn(3, |rho| (-rho * rho).exp());
        let a: f64 = 0.7;
        let exact = (4.0 * a * a - 6.0) * (-a * a).exp();
        assert_relative_eq!(
            classical_laplacian(&g, &[a, 0.0, 0.0], 1e-3).unwrap(),
            exact,
            max_relative = 1e-9
        );

        let rough = ScalarField::new(3, |x: &[f64]| x[0].abs()).non_smooth();
        assert!(matches!(
            classical_laplacian(&rough, &[0.1, 0.0, 0.0], 1e-3),
            Err(Error::MissingDerivative(_))
        ));
    }

    #[test]
    fn mollify_constant_and_linear() {
        let q = spec(1e-10);
        let one = ScalarField::constant(3, 1.0);
        let m = mollify(&one, 0.1, &q).unwrap();
        assert_relative_eq!(m.eval(&[0.3, 0.1, 0.0]), 1.0, epsilon = 1e-10);

        // Odd moments of the symmetric bump vanish, so linear functions are
        // reproduced exactly.
        let lin = ScalarField::new(3, |x: &[f64]| 2.0 * x[0] - x[1] + 0.5);
        let m = mollify(&lin, 0.2, &q).unwrap();
        for p in [[0.0, 0.0, 0.0], [0.4, -0.2, 0.1]] {
            assert_relative_eq!(m.eval(&p), lin.eval(&p), epsilon = 1e-9);
        }
    }

    #[test]
    fn mollify_radial_matches_general_path() {
        let q = spec(1e-10);
        let radial = ScalarField::radial_fn(3, |rho| (1.0 + rho * rho).recip());
        let general = ScalarField::new(3, |x: &[f64]| {
            (1.0 + x.iter().map(|v| v * v).sum::<f64>()).recip()
        });
        let mr = mollify(&radial, 0.15, &q).unwrap();
        let mg = mollify(&general, 0.15, &q).unwrap();
        for &a in &[0.0, 0.25, 0.6] {
            assert_relative_eq!(
                mr.eval(&[a, 0.0, 0.0]),
                mg.eval(&[a, 0.0, 0.0]),
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn mollify_shrinks_validity_region() {
        let q = spec(1e-8);
        let u = ScalarField::radial_fn(3, |rho| 1.0 - rho).with_support(Support::Ball(1.0));
        let m = mollify(&u, 0.1, &q).unwrap();
        assert!(m.try_eval(&[0.85, 0.0, 0.0]).is_ok());
        assert!(matches!(
            m.try_eval(&[0.95, 0.0, 0.0]),
            Err(Error::Domain(_))
        ));
        assert!(mollify(&u, 0.0, &q).is_err());
    }

    #[test]
    fn mollify_converges_in_l1() {
        use crate::norms::lp_norm;
        let q = spec(1e-8);
        let dom = crate::BallDomain { n: 3, r: 0.9 };
        let u = ScalarField::radial_fn(3, |rho| (3.0 * rho).cos());
        let mut dists = Vec::new();
        for eps in [0.1, 0.05, 0.025] {
            let m = mollify(&u, eps, &q).unwrap();
            let diff = ScalarField::linear_comb(1.0, &m, -1.0, &u);
            let (d, _) = lp_norm(&diff, &dom, 1.0, &spec(1e-7)).unwrap();
            dists.push(d);
        }
        assert!(dists[0] > dists[1] && dists[1] > dists[2], "{dists:?}");
        assert!(dists[2] < 1e-2);
    }

    #[test]
    fn truncate_min_cases() {
        let pos = ScalarField::constant(3, 3.0);
        assert_eq!(truncate_min(&pos).eval(&[0.1, 0.2, 0.3]), 0.0);
        let neg = ScalarField::constant(3, -3.0);
        assert_eq!(truncate_min(&neg).eval(&[0.1, 0.2, 0.3]), -3.0);
        let lin = ScalarField::new(3, |x: &[f64]| x[0]);
        let v = truncate_min(&lin);
        assert_eq!(v.eval(&[-0.4, 0.0, 0.0]), -0.4);
        assert_eq!(v.eval(&[0.4, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn sphere_mean_high_dimension_moment() {
        // Mean of |y|² over a sphere of radius b about distance a is a² + b²
        // in every dimension.
        for n in [2usize, 3, 4, 5] {
            let m = sphere_mean_radial(&|rho: f64| rho * rho, 0.6, 0.3, n, &[], 24);
            assert_relative_eq!(m, 0.36 + 0.09, epsilon = 1e-10);
            let c = sphere_mean_radial(&|_| 2.5, 0.6, 0.3, n, &[], 24);
            assert_relative_eq!(c, 2.5, epsilon = 1e-12);
        }
    }
}
