//! Ball domains, fractional orders and pointwise-evaluatable fields.
//!
//! Fields are immutable after construction; derived fields (positive part,
//! truncation with zero, mollification, scaling) produce new fields. All
//! evaluators are pure, so concurrent read-only evaluation is safe.

use crate::error::{Error, Result};
use crate::vec_norm;
use std::sync::Arc;

pub mod interp;

/// The working ball B_r in R^n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallDomain {
    pub n: usize,
    pub r: f64,
}

impl BallDomain {
    pub fn new(n: usize, r: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("dimension must be >= 1".into()));
        }
        if !(r > 0.0) {
            return Err(Error::Domain("radius must be positive".into()));
        }
        Ok(BallDomain { n, r })
    }

    pub fn unit(n: usize) -> Self {
        BallDomain { n, r: 1.0 }
    }

    /// d(x) = dist(x, boundary) for x in the closed ball.
    pub fn distance_to_boundary(&self, x: &[f64]) -> Result<f64> {
        let a = vec_norm(x);
        if a > self.r * (1.0 + 1e-14) {
            return Err(Error::Domain(format!(
                "point with |x| = {a} lies outside the closed ball of radius {}",
                self.r
            )));
        }
        Ok((self.r - a).max(0.0))
    }
}

/// Free function mirror of [`BallDomain::distance_to_boundary`].
pub fn distance_to_boundary(x: &[f64], dom: &BallDomain) -> Result<f64> {
    dom.distance_to_boundary(x)
}

/// The fractional order s in (0,1) and its derived exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder {
    s: f64,
}

impl FracOrder {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!(
                "fractional order s = {s} must lie in (0,1)"
            )));
        }
        Ok(FracOrder { s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn two_s(&self) -> f64 {
        2.0 * self.s
    }

    /// n - 2s.
    pub fn kernel_exponent(&self, n: usize) -> f64 {
        n as f64 - 2.0 * self.s
    }

    /// The critical integrability exponent n/(2s).
    pub fn critical_p(&self, n: usize) -> f64 {
        n as f64 / (2.0 * self.s)
    }

    /// 1/(1-s), the critical solution-class exponent.
    pub fn solution_exponent(&self) -> f64 {
        1.0 / (1.0 - self.s)
    }

    /// Drift results require s in (1/2, 1).
    pub fn require_drift_range(&self) -> Result<()> {
        if self.s <= 0.5 {
            return Err(Error::Domain(format!(
                "drift hypotheses require s in (1/2,1), got s = {}",
                self.s
            )));
        }
        Ok(())
    }
}

/// Support descriptor of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    WholeSpace,
    Ball(f64),
    BallComplement(f64),
}

/// Far-field decay class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayClass {
    /// Vanishes outside the ball of the given radius.
    Compact(f64),
    /// |f(x)| = O(|x|^-rate) at infinity; rate 0 means merely bounded, a
    /// negative rate declares growth.
    Power(f64),
}

impl DecayClass {
    /// Whether the weighted tail integral against |x|^{-(n+2s)} converges.
    pub fn tail_integrable(&self, s: f64) -> bool {
        match self {
            DecayClass::Compact(_) => true,
            DecayClass::Power(rate) => rate + 2.0 * s > 0.0,
        }
    }
}

pub type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// An evaluatable real-valued function on R^n with metadata.
#[derive(Clone)]
pub struct ScalarField {
    pub n: usize,
    eval: EvalFn,
    /// Fast radial evaluator, present iff the field is radial.
    radial_eval: Option<RadialFn>,
    /// Exact (possibly expensive) radial evaluator backing a cached profile.
    exact_radial: Option<RadialFn>,
    pub radial: bool,
    pub support: Support,
    pub decay: DecayClass,
    gradient: Option<GradFn>,
    laplacian: Option<EvalFn>,
    /// Twice differentiable where evaluated (away from declared kinks).
    pub smooth: bool,
    /// Radii where the field has kinks (e.g. the ball boundary for a
    /// representation-formula solution).
    pub kink_radii: Vec<f64>,
    /// Evaluation only valid for |x| < limit (mollified fields of
    /// ball-restricted data).
    pub eval_radius_limit: Option<f64>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("n", &self.n)
            .field("radial", &self.radial)
            .field("support", &self.support)
            .field("decay", &self.decay)
            .field("smooth", &self.smooth)
            .finish()
    }
}

impl ScalarField {
    /// General field from a pointwise evaluator. Defaults: whole-space
    /// support, bounded (rate-0 decay), smooth.
    pub fn new<F>(n: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ScalarField {
            n,
            eval: Arc::new(f),
            radial_eval: None,
            exact_radial: None,
            radial: false,
            support: Support::WholeSpace,
            decay: DecayClass::Power(0.0),
            gradient: None,
            laplacian: None,
            smooth: true,
            kink_radii: Vec::new(),
            eval_radius_limit: None,
        }
    }

    /// Radial field from a profile g(|x|).
    pub fn radial_fn<F>(n: usize, g: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let g = Arc::new(g);
        let ge = g.clone();
        ScalarField {
            n,
            eval: Arc::new(move |x: &[f64]| ge(vec_norm(x))),
            radial_eval: Some(g),
            exact_radial: None,
            radial: true,
            support: Support::WholeSpace,
            decay: DecayClass::Power(0.0),
            gradient: None,
            laplacian: None,
            smooth: true,
            kink_radii: Vec::new(),
            eval_radius_limit: None,
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        ScalarField::radial_fn(n, move |_| c)
    }

    pub fn zero(n: usize) -> Self {
        let mut f = ScalarField::constant(n, 0.0);
        f.decay = DecayClass::Compact(0.0);
        f
    }

    pub fn with_support(mut self, support: Support) -> Self {
        if let Support::Ball(r) = support {
            self.decay = DecayClass::Compact(r);
        }
        self.support = support;
        self
    }

    pub fn with_decay(mut self, decay: DecayClass) -> Self {
        self.decay = decay;
        self
    }

    pub fn with_gradient<F>(mut self, g: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_laplacian<F>(mut self, l: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.laplacian = Some(Arc::new(l));
        self
    }

    pub fn with_kinks(mut self, radii: &[f64]) -> Self {
        self.kink_radii = radii.to_vec();
        self
    }

    pub fn non_smooth(mut self) -> Self {
        self.smooth = false;
        self
    }

    /// Radial field with closed-form radial derivative and Laplacian profiles.
    pub fn radial_with_derivs<F, G, L>(n: usize, g: F, dg: G, lap: L) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        L: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let dg = Arc::new(dg);
        let lap = Arc::new(lap);
        let dgc = dg.clone();
        ScalarField::radial_fn(n, g)
            .with_gradient(move |x: &[f64]| {
                let rho = vec_norm(x);
                if rho == 0.0 {
                    return vec![0.0; x.len()];
                }
                let d = dgc(rho) / rho;
                x.iter().map(|xi| d * xi).collect()
            })
            .with_laplacian(move |x: &[f64]| lap(vec_norm(x)))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        (self.eval)(x)
    }

    /// Evaluation with the validity region enforced.
    pub fn try_eval(&self, x: &[f64]) -> Result<f64> {
        if let Some(limit) = self.eval_radius_limit {
            if vec_norm(x) >= limit {
                return Err(Error::Domain(format!(
                    "evaluation at |x| = {} outside validity radius {limit}",
                    vec_norm(x)
                )));
            }
        }
        Ok(self.eval(x))
    }

    /// Value at radius `rho`; the field must be radial.
    pub fn eval_radial(&self, rho: f64) -> f64 {
        match &self.radial_eval {
            Some(g) => g(rho),
            None => {
                debug_assert!(self.radial, "eval_radial on a non-radial field");
                let mut x = vec![0.0; self.n];
                x[0] = rho;
                self.eval(&x)
            }
        }
    }

    /// Exact (uncached) radial value when the field carries a cached profile,
    /// otherwise the plain radial value.
    pub fn eval_radial_exact(&self, rho: f64) -> f64 {
        match &self.exact_radial {
            Some(g) => g(rho),
            None => self.eval_radial(rho),
        }
    }

    pub fn has_closed_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_closed_laplacian(&self) -> bool {
        self.laplacian.is_some()
    }

    pub fn gradient_closed(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gradient.as_ref().map(|g| g(x))
    }

    pub fn laplacian_closed(&self, x: &[f64]) -> Option<f64> {
        self.laplacian.as_ref().map(|l| l(x))
    }

    /// Pointwise min with zero: v = min{u, 0}.
    pub fn min_zero(&self) -> ScalarField {
        let inner = self.clone();
        let mut out = if self.radial {
            let g = self.radial_eval.clone().unwrap();
            ScalarField::radial_fn(self.n, move |rho| g(rho).min(0.0))
        } else {
            ScalarField::new(self.n, move |x| inner.eval(x).min(0.0))
        };
        out.support = self.support;
        out.decay = self.decay;
        out.kink_radii = self.kink_radii.clone();
        out.eval_radius_limit = self.eval_radius_limit;
        out.smooth = false;
        out
    }

    /// Positive part max{u, 0}.
    pub fn positive_part(&self) -> ScalarField {
        let mut out = self.negative_shifted(1.0);
        out.smooth = false;
        out
    }

    /// Negative part -min{u, 0} >= 0 (the paper's sign convention).
    pub fn negative_part(&self) -> ScalarField {
        let mut out = self.negative_shifted(-1.0);
        out.smooth = false;
        out
    }

    fn negative_shifted(&self, sign: f64) -> ScalarField {
        let inner = self.clone();
        let mut out = if self.radial {
            let g = self.radial_eval.clone().unwrap();
            ScalarField::radial_fn(self.n, move |rho| {
                let v = g(rho);
                if sign > 0.0 {
                    v.max(0.0)
                } else {
                    -v.min(0.0)
                }
            })
        } else {
            ScalarField::new(self.n, move |x| {
                let v = inner.eval(x);
                if sign > 0.0 {
                    v.max(0.0)
                } else {
                    -v.min(0.0)
                }
            })
        };
        out.support = self.support;
        out.decay = self.decay;
        out.kink_radii = self.kink_radii.clone();
        out.eval_radius_limit = self.eval_radius_limit;
        out
    }

    /// lambda * u, keeping metadata (including derivatives).
    pub fn scaled(&self, lambda: f64) -> ScalarField {
        let mut out = self.clone();
        let base = self.eval.clone();
        out.eval = Arc::new(move |x: &[f64]| lambda * base(x));
        out.radial_eval = self.radial_eval.clone().map(|g| {
            let g = g.clone();
            Arc::new(move |rho: f64| lambda * g(rho)) as RadialFn
        });
        out.exact_radial = self.exact_radial.clone().map(|g| {
            let g = g.clone();
            Arc::new(move |rho: f64| lambda * g(rho)) as RadialFn
        });
        out.gradient = self.gradient.clone().map(|g| {
            let g = g.clone();
            Arc::new(move |x: &[f64]| g(x).into_iter().map(|v| lambda * v).collect::<Vec<_>>())
                as GradFn
        });
        out.laplacian = self.laplacian.clone().map(|l| {
            let l = l.clone();
            Arc::new(move |x: &[f64]| lambda * l(x)) as EvalFn
        });
        out
    }

    /// |u|^p as a field for norm integrands, keeping radial/support metadata.
    pub fn abs_pow(&self, p: f64) -> ScalarField {
        let mut out = if self.radial {
            let g = self.radial_eval.clone().unwrap();
            ScalarField::radial_fn(self.n, move |rho| g(rho).abs().powf(p))
        } else {
            let inner = self.clone();
            ScalarField::new(self.n, move |x| inner.eval(x).abs().powf(p))
        };
        out.support = self.support;
        out.decay = match self.decay {
            DecayClass::Compact(r) => DecayClass::Compact(r),
            DecayClass::Power(k) => DecayClass::Power(k * p),
        };
        out.kink_radii = self.kink_radii.clone();
        out.smooth = false;
        out
    }

    /// a*u + b*v, metadata intersected conservatively.
    pub fn linear_comb(a: f64, u: &ScalarField, b: f64, v: &ScalarField) -> ScalarField {
        assert_eq!(u.n, v.n);
        let radial = u.radial && v.radial;
        let mut out = if radial {
            let gu = u.radial_eval.clone().unwrap();
            let gv = v.radial_eval.clone().unwrap();
            ScalarField::radial_fn(u.n, move |rho| a * gu(rho) + b * gv(rho))
        } else {
            let uu = u.clone();
            let vv = v.clone();
            ScalarField::new(u.n, move |x| a * uu.eval(x) + b * vv.eval(x))
        };
        out.decay = match (u.decay, v.decay) {
            (DecayClass::Compact(r1), DecayClass::Compact(r2)) => DecayClass::Compact(r1.max(r2)),
            (DecayClass::Power(k1), DecayClass::Power(k2)) => DecayClass::Power(k1.min(k2)),
            (DecayClass::Compact(_), DecayClass::Power(k))
            | (DecayClass::Power(k), DecayClass::Compact(_)) => DecayClass::Power(k),
        };
        out.smooth = u.smooth && v.smooth;
        let mut kinks = u.kink_radii.clone();
        kinks.extend_from_slice(&v.kink_radii);
        out.kink_radii = kinks;
        if let (Some(gu), Some(gv)) = (u.gradient.clone(), v.gradient.clone()) {
            out.gradient = Some(Arc::new(move |x: &[f64]| {
                gu(x)
                    .iter()
                    .zip(gv(x).iter())
                    .map(|(p, q)| a * p + b * q)
                    .collect()
            }));
        }
        if let (Some(lu), Some(lv)) = (u.laplacian.clone(), v.laplacian.clone()) {
            out.laplacian = Some(Arc::new(move |x: &[f64]| a * lu(x) + b * lv(x)));
        }
        out
    }

    /// Replace the radial evaluator by a cached interpolant built from the
    /// current evaluator at `nodes` sample points of `grid` (a monotone map
    /// from [0,1] to radii). The exact evaluator remains reachable through
    /// [`ScalarField::eval_radial_exact`].
    pub fn with_cached_radial_profile<M>(
        self,
        grid: M,
        nodes: usize,
        lo: f64,
        hi: f64,
    ) -> ScalarField
    where
        M: Fn(f64) -> f64,
    {
        assert!(self.radial, "profile caching requires a radial field");
        let exact = self.radial_eval.clone().unwrap();
        let mut xs: Vec<f64> = (0..nodes)
            .map(|i| grid(i as f64 / (nodes - 1) as f64).clamp(lo, hi))
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let ys: Vec<f64> = xs.iter().map(|&r| exact(r)).collect();
        let spline = interp::Pchip::new(xs, ys);
        let ex = exact.clone();
        let (plo, phi) = (lo, hi);
        let cached: RadialFn = Arc::new(move |rho: f64| {
            if rho >= plo && rho <= phi {
                spline.eval(rho)
            } else {
                ex(rho)
            }
        });
        let ce = cached.clone();
        let n = self.n;
        ScalarField {
            eval: Arc::new(move |x: &[f64]| ce(vec_norm(x))),
            radial_eval: Some(cached),
            exact_radial: Some(exact),
            n,
            ..self
        }
    }
}

pub type VecEvalFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// An evaluatable vector field on the ball.
#[derive(Clone)]
pub struct VectorField {
    pub n: usize,
    eval: VecEvalFn,
    pub radial: bool,
    /// For a radial drift b = phi(|x|) x/|x|, the profile phi.
    magnitude: Option<RadialFn>,
    divergence: Option<EvalFn>,
    /// Row-major n x n Jacobian.
    jacobian: Option<VecEvalFn>,
    /// Frobenius norm of the Jacobian as a radial profile.
    grad_frobenius: Option<RadialFn>,
    /// Differentiable where evaluated; permits the finite-difference gradient
    /// fallback.
    pub smooth: bool,
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorField")
            .field("n", &self.n)
            .field("radial", &self.radial)
            .finish()
    }
}

impl VectorField {
    pub fn new<F>(n: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        VectorField {
            n,
            eval: Arc::new(f),
            radial: false,
            magnitude: None,
            divergence: None,
            jacobian: None,
            grad_frobenius: None,
            smooth: true,
        }
    }

    pub fn zero(n: usize) -> Self {
        VectorField::radial_drift(n, |_| 0.0, Some(Arc::new(|_| 0.0)))
    }

    /// Radial drift b(x) = phi(|x|) x/|x|. When `phi_prime` is given, the
    /// divergence and Frobenius gradient norm get closed forms.
    pub fn radial_drift<F>(n: usize, phi: F, phi_prime: Option<RadialFn>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let phi = Arc::new(phi);
        let pe = phi.clone();
        let eval: VecEvalFn = Arc::new(move |x: &[f64]| {
            let rho = vec_norm(x);
            if rho == 0.0 {
                return vec![0.0; x.len()];
            }
            let m = pe(rho) / rho;
            x.iter().map(|xi| m * xi).collect()
        });
        let mut out = VectorField {
            n,
            eval,
            radial: true,
            magnitude: Some(phi.clone()),
            divergence: None,
            jacobian: None,
            grad_frobenius: None,
            smooth: true,
        };
        if let Some(dp) = phi_prime {
            let p1 = phi.clone();
            let dp1 = dp.clone();
            let nf = n as f64;
            out.divergence = Some(Arc::new(move |x: &[f64]| {
                let rho = vec_norm(x);
                if rho == 0.0 {
                    return nf * dp1(0.0);
                }
                dp1(rho) + (nf - 1.0) * p1(rho) / rho
            }));
            let p2 = phi.clone();
            let dp2 = dp.clone();
            out.grad_frobenius = Some(Arc::new(move |rho: f64| {
                if rho == 0.0 {
                    let d = dp2(0.0);
                    return (nf * d * d).sqrt();
                }
                let d = dp2(rho);
                let m = p2(rho) / rho;
                (d * d + (nf - 1.0) * m * m).sqrt()
            }));
        }
        out
    }

    pub fn with_divergence<F>(mut self, d: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.divergence = Some(Arc::new(d));
        self
    }

    pub fn vec_non_smooth(mut self) -> Self {
        self.smooth = false;
        self
    }

    pub fn with_jacobian<F>(mut self, j: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }

    /// |b(x)|.
    pub fn magnitude_at(&self, x: &[f64]) -> f64 {
        vec_norm(&self.eval(x))
    }

    /// |b|(rho) for radial drifts.
    pub fn magnitude_radial(&self, rho: f64) -> Option<f64> {
        self.magnitude.as_ref().map(|m| m(rho).abs())
    }

    pub fn divergence_closed(&self, x: &[f64]) -> Option<f64> {
        self.divergence.as_ref().map(|d| d(x))
    }

    pub fn has_closed_divergence(&self) -> bool {
        self.divergence.is_some()
    }

    pub fn jacobian_closed(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.jacobian.as_ref().map(|j| j(x))
    }

    /// Frobenius norm of the Jacobian: closed form if present, else centered
    /// finite differences with step `h`.
    pub fn grad_frobenius_at(&self, x: &[f64], h: f64) -> f64 {
        if let Some(gf) = &self.grad_frobenius {
            return gf(vec_norm(x));
        }
        if let Some(j) = self.jacobian_closed(x) {
            return j.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        let mut acc = 0.0;
        let mut xp = x.to_vec();
        for k in 0..self.n {
            xp[k] = x[k] + h;
            let fp = self.eval(&xp);
            xp[k] = x[k] - h;
            let fm = self.eval(&xp);
            xp[k] = x[k];
            for i in 0..self.n {
                let d = (fp[i] - fm[i]) / (2.0 * h);
                acc += d * d;
            }
        }
        acc.sqrt()
    }

    /// Frobenius gradient profile for radial drifts, if available in closed
    /// form.
    pub fn grad_frobenius_radial(&self, rho: f64) -> Option<f64> {
        self.grad_frobenius.as_ref().map(|g| g(rho))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn distance_to_boundary_examples() {
        let dom = BallDomain::unit(3);
        assert_eq!(dom.distance_to_boundary(&[0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(dom.distance_to_boundary(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(dom.distance_to_boundary(&[0.5, 0.0, 0.0]).unwrap(), 0.5);
        assert!(dom.distance_to_boundary(&[1.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn invalid_domains_rejected() {
        assert!(BallDomain::new(0, 1.0).is_err());
        assert!(BallDomain::new(3, 0.0).is_err());
        assert!(BallDomain::new(3, -1.0).is_err());
    }

    #[test]
    fn frac_order_exponents() {
        let s = FracOrder::new(0.75).unwrap();
        assert_relative_eq!(s.kernel_exponent(3), 1.5);
        assert_relative_eq!(s.critical_p(3), 2.0);
        assert_relative_eq!(s.solution_exponent(), 4.0);
        assert!(FracOrder::new(0.0).is_err());
        assert!(FracOrder::new(1.0).is_err());
        assert!(FracOrder::new(0.4).unwrap().require_drift_range().is_err());
        assert!(FracOrder::new(0.75).unwrap().require_drift_range().is_ok());
    }

    #[test]
    fn positive_negative_decomposition() {
        // c = c+ - c- and c+ * c- = 0 pointwise.
        let c = ScalarField::new(3, |x| x[0] - 0.3);
        let cp = c.positive_part();
        let cm = c.negative_part();
        for t in [-0.9, -0.3, 0.0, 0.29, 0.31, 0.8] {
            let x = [t, 0.1, -0.2];
            let (v, p, m) = (c.eval(&x), cp.eval(&x), cm.eval(&x));
            assert_relative_eq!(v, p - m, epsilon = 1e-15);
            assert_eq!(p * m, 0.0);
            assert!(p >= 0.0 && m >= 0.0);
        }
    }

    #[test]
    fn min_zero_examples() {
        let u = ScalarField::new(3, |x| x[0]);
        let v = u.min_zero();
        assert_eq!(v.eval(&[0.5, 0.0, 0.0]), 0.0);
        assert_eq!(v.eval(&[-0.5, 0.0, 0.0]), -0.5);
        let pos = ScalarField::constant(3, 2.0).min_zero();
        assert_eq!(pos.eval(&[0.1, 0.0, 0.0]), 0.0);
        let neg = ScalarField::constant(3, -2.0).min_zero();
        assert_eq!(neg.eval(&[0.1, 0.0, 0.0]), -2.0);
    }

    #[test]
    fn radial_drift_closed_forms() {
        // b(x) = x: divergence n, |grad b|_F = sqrt(n).
        let b = VectorField::radial_drift(3, |rho| rho, Some(Arc::new(|_| 1.0)));
        let x = [0.3, -0.2, 0.1];
        assert_relative_eq!(b.divergence_closed(&x).unwrap(), 3.0, epsilon = 1e-14);
        assert_relative_eq!(b.grad_frobenius_at(&x, 1e-5), 3f64.sqrt(), epsilon = 1e-12);
        let bx = b.eval(&x);
        for (i, v) in bx.iter().enumerate() {
            assert_relative_eq!(*v, x[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn cached_profile_matches_exact() {
        let u = ScalarField::radial_fn(3, |rho| (1.0 - rho * rho).exp());
        let cached = u.with_cached_radial_profile(|t| t, 400, 0.0, 1.0);
        for &rho in &[0.0, 0.1, 0.33, 0.5, 0.77, 0.999] {
            assert_relative_eq!(
                cached.eval_radial(rho),
                (1.0 - rho * rho).exp(),
                epsilon = 1e-7
            );
        }
        // Outside the cached range the exact evaluator is used.
        assert_relative_eq!(
            cached.eval_radial(2.0),
            (1.0 - 4.0f64).exp(),
            epsilon = 1e-15
        );
    }
}
