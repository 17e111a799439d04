//! Closed-form kernels on the ball: fundamental solution, Poisson kernel and
//! the two Green's-function representations, with the auxiliary quantities
//! r0 and the incomplete kernel integral.
//!
//! The four normalization constants are not independent: the cross check
//! between the definition form and the concise form of the Green's function,
//! together with the solve-then-apply residual tests in the solver module,
//! pin them to one consistent convention.

use crate::domain::{BallDomain, DecayClass, ScalarField};
use crate::error::{Error, Result};
use crate::quad::{integrate_exterior, integrate_interval, QuadSpec};
use crate::vec_norm;
use statrs::function::beta::{beta, beta_reg};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Minimum separation (relative to the ball radius) below which kernel
/// evaluations at near-coincident points are refused.
pub const COINCIDENCE_GUARD: f64 = 1e-8;

/// The normalization constants tied to one convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConstants {
    pub n: usize,
    pub s: f64,
    /// Principal-value normalization of the operator definition.
    pub c_op: f64,
    /// Poisson-kernel constant.
    pub c_poisson: f64,
    /// Fundamental-solution constant.
    pub c_phi: f64,
    /// Concise-Green constant.
    pub kappa: f64,
}

impl KernelConstants {
    /// The standard normalizations for which (-Δ)^s Φ = δ and the Poisson
    /// kernel has unit total mass.
    pub fn standard(n: usize, s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("s = {s} outside (0,1)")));
        }
        if n < 1 {
            return Err(Error::Domain("dimension must be >= 1".into()));
        }
        let nf = n as f64;
        let c_op = 4f64.powf(s) * s * gamma(nf / 2.0 + s) / (PI.powf(nf / 2.0) * gamma(1.0 - s));
        let c_poisson = (PI * s).sin() * gamma(nf / 2.0) / PI.powf(nf / 2.0 + 1.0);
        let c_phi = gamma(nf / 2.0 - s) / (4f64.powf(s) * PI.powf(nf / 2.0) * gamma(s));
        let kappa = gamma(nf / 2.0) / (4f64.powf(s) * PI.powf(nf / 2.0) * gamma(s).powi(2));
        Ok(KernelConstants {
            n,
            s,
            c_op,
            c_poisson,
            c_phi,
            kappa,
        })
    }
}

/// One concise-form Green's function evaluation with its ingredients.
#[derive(Debug, Clone, Copy)]
pub struct GreenEval {
    pub value: f64,
    pub r0: f64,
    pub incomplete_integral: f64,
}

fn guard_separation(dist: f64, r: f64) -> Result<()> {
    if dist < COINCIDENCE_GUARD * r {
        return Err(Error::Singularity(format!(
            "points separated by {dist:.3e} are too close to the kernel diagonal"
        )));
    }
    Ok(())
}

/// Φ(x - z) = c_Φ(n,s) |x - z|^{2s-n}.
pub fn fundamental_solution(x: &[f64], z: &[f64], n: usize, s: f64) -> Result<f64> {
    let k = KernelConstants::standard(n, s)?;
    if (n as f64 - 2.0 * s).abs() < 1e-14 {
        return Err(Error::Domain("fundamental solution needs n != 2s".into()));
    }
    let d = dist(x, z);
    guard_separation(d, 1.0)?;
    Ok(k.c_phi * d.powf(2.0 * s - n as f64))
}

/// P_r(x,y) = c_P(n,s) ((r^2-|x|^2)/(|y|^2-r^2))^s |x-y|^{-n} for |x| < r < |y|.
pub fn poisson_kernel(x: &[f64], y: &[f64], r: f64, n: usize, s: f64) -> Result<f64> {
    let k = KernelConstants::standard(n, s)?;
    let ax = vec_norm(x);
    let ay = vec_norm(y);
    if ax >= r {
        return Err(Error::Domain(format!("|x| = {ax} must be < r = {r}")));
    }
    if ay <= r {
        return Err(Error::Domain(format!("|y| = {ay} must be > r = {r}")));
    }
    let d = dist(x, y);
    let ratio = (r * r - ax * ax) / (ay * ay - r * r);
    Ok(k.c_poisson * ratio.powf(s) * d.powf(-(n as f64)))
}

/// r0(x,z) = (r^2-|x|^2)(r^2-|z|^2) / (r^2 |x-z|^2); infinite at coincidence.
pub fn r0(x: &[f64], z: &[f64], r: f64) -> f64 {
    let d2 = dist2(x, z);
    if d2 == 0.0 {
        return f64::INFINITY;
    }
    let ax2 = x.iter().map(|v| v * v).sum::<f64>();
    let az2 = z.iter().map(|v| v * v).sum::<f64>();
    (r * r - ax2) * (r * r - az2) / (r * r * d2)
}

/// ∫_0^R t^{s-1} (t+1)^{-n/2} dt by adaptive quadrature with the t^{s-1}
/// endpoint declared.
pub fn incomplete_integral(big_r: f64, n: usize, s: f64, q: &QuadSpec) -> Result<f64> {
    if !(big_r > 0.0) {
        return Err(Error::Domain(format!(
            "incomplete integral needs R > 0, got {big_r}"
        )));
    }
    let nf = n as f64;
    let spec = QuadSpec {
        endpoint_sing: (Some(1.0 - s), None),
        ..q.clone()
    };
    let f = |t: f64| t.powf(s - 1.0) * (t + 1.0).powf(-nf / 2.0);
    if big_r.is_infinite() {
        return integrate_interval(f, 0.0, f64::INFINITY, &spec)
            .into_result()
            .map(|r| r.value);
    }
    integrate_interval(f, 0.0, big_r, &spec)
        .into_result()
        .map(|r| r.value)
}

/// Closed form of the incomplete kernel integral through the regularized
/// incomplete beta function, valid for n/2 > s:
/// ∫_0^R t^{s-1}(t+1)^{-n/2} dt = B(s, n/2-s) I_{R/(1+R)}(s, n/2-s).
pub fn incomplete_integral_closed(big_r: f64, n: usize, s: f64) -> Option<f64> {
    let nf = n as f64;
    if nf / 2.0 - s <= 0.0 || big_r <= 0.0 {
        return None;
    }
    let (a, b) = (s, nf / 2.0 - s);
    if big_r.is_infinite() {
        return Some(beta(a, b));
    }
    Some(beta(a, b) * beta_reg(a, b, big_r / (1.0 + big_r)))
}

/// Concise-form Green's function
/// G(x,z) = κ(n,s) |z-x|^{2s-n} ∫_0^{r0(x,z)} t^{s-1}(t+1)^{-n/2} dt.
pub fn greens_closed(
    x: &[f64],
    z: &[f64],
    r: f64,
    n: usize,
    s: f64,
    q: &QuadSpec,
) -> Result<GreenEval> {
    let k = KernelConstants::standard(n, s)?;
    let ax = vec_norm(x);
    let az = vec_norm(z);
    if ax >= r || az >= r {
        return Err(Error::Domain(
            "Green's function needs interior points".into(),
        ));
    }
    let d = dist(x, z);
    guard_separation(d, r)?;
    let rr0 = r0(x, z, r);
    let inc = match incomplete_integral_closed(rr0, n, s) {
        Some(v) => v,
        None => incomplete_integral(rr0, n, s, q)?,
    };
    let value = k.kappa * d.powf(2.0 * s - n as f64) * inc;
    Ok(GreenEval {
        value,
        r0: rr0,
        incomplete_integral: inc,
    })
}

/// Definition form G(x,z) = Φ(x-z) - ∫_{B_r^c} Φ(z-y) P_r(x,y) dy, evaluated
/// by exterior quadrature with the (|y|^2-r^2)^{-s} boundary layer declared.
pub fn greens_definition(
    x: &[f64],
    z: &[f64],
    r: f64,
    n: usize,
    s: f64,
    q: &QuadSpec,
) -> Result<f64> {
    let ax = vec_norm(x);
    let az = vec_norm(z);
    if ax >= r || az >= r {
        return Err(Error::Domain(
            "Green's function needs interior points".into(),
        ));
    }
    guard_separation(dist(x, z), r)?;
    let phi = fundamental_solution(x, z, n, s)?;
    let dom = BallDomain::new(n, r)?;
    let xv = x.to_vec();
    let zv = z.to_vec();
    let k = KernelConstants::standard(n, s)?;
    let nf = n as f64;
    let field = ScalarField::new(n, move |y: &[f64]| {
        let dy = dist(&zv, y);
        let dxy = dist(&xv, y);
        let ay2 = y.iter().map(|v| v * v).sum::<f64>();
        let ratio = (r * r - ax * ax) / (ay2 - r * r).max(1e-300);
        k.c_phi * dy.powf(2.0 * s - nf) * k.c_poisson * ratio.powf(s) * dxy.powf(-nf)
    })
    .with_decay(DecayClass::Power(2.0 * nf))
    .non_smooth();
    let spec = QuadSpec {
        endpoint_sing: (None, Some(s)),
        ..q.clone()
    };
    let corr = integrate_exterior(&field, &dom, &spec)?.into_result()?;
    Ok(phi - corr.value)
}

fn dist2(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn dist(x: &[f64], z: &[f64]) -> f64 {
    dist2(x, z).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::Tol;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(tol: f64) -> QuadSpec {
        QuadSpec::with_tol(Tol::Abs(tol))
    }

    #[test]
    fn constants_positive() {
        for &s in &[0.25, 0.4, 0.5, 0.75, 0.9] {
            for n in 1..=5 {
                let k = KernelConstants::standard(n, s).unwrap();
                assert!(k.c_op > 0.0 && k.c_poisson > 0.0 && k.kappa > 0.0);
                // c_phi needs n > 2s (otherwise Γ(n/2 - s) leaves the
                // positive half-line and the |x|^{2s-n} form is not the
                // fundamental solution).
                if (n as f64) > 2.0 * s {
                    assert!(k.c_phi > 0.0, "c_phi at n={n}, s={s}");
                }
            }
        }
        assert!(KernelConstants::standard(3, 1.0).is_err());
    }

    #[test]
    fn fundamental_solution_homogeneity() {
        let (n, s) = (3, 0.75);
        let k = KernelConstants::standard(n, s).unwrap();
        let unit = fundamental_solution(&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0], n, s).unwrap();
        assert_relative_eq!(unit, k.c_phi, max_relative = 1e-14);
        let half = fundamental_solution(&[0.5, 0.0, 0.0], &[0.0, 0.0, 0.0], n, s).unwrap();
        assert_relative_eq!(half, k.c_phi * 2f64.powf(1.5), max_relative = 1e-13);
        assert!(fundamental_solution(&[0.1; 3], &[0.1; 3], 3, 0.75).is_err());
    }

    #[test]
    fn poisson_kernel_point_values_and_domain() {
        let (n, s) = (3, 0.5);
        let k = KernelConstants::standard(n, s).unwrap();
        let y = [2f64.sqrt(), 0.0, 0.0];
        let v = poisson_kernel(&[0.0; 3], &y, 1.0, n, s).unwrap();
        assert_relative_eq!(v, k.c_poisson * 2f64.powf(-1.5), max_relative = 1e-13);
        assert!(poisson_kernel(&[1.0, 0.0, 0.0], &y, 1.0, n, s).is_err());
        assert!(poisson_kernel(&[0.0; 3], &[0.5, 0.0, 0.0], 1.0, n, s).is_err());
    }

    #[test]
    fn poisson_kernel_normalization() {
        // u ≡ 1 solves the exterior Dirichlet problem with g ≡ 1, so the
        // kernel must integrate to one over the complement.
        let n = 3;
        let dom = BallDomain::unit(n);
        for &s in &[0.4, 0.75] {
            for x0 in [[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]] {
                let field = ScalarField::new(n, move |y: &[f64]| {
                    poisson_kernel(&x0, y, 1.0, n, s).unwrap()
                })
                .with_decay(DecayClass::Power(n as f64 + 2.0 * s))
                .non_smooth();
                let q = QuadSpec {
                    endpoint_sing: (None, Some(s)),
                    ..spec(1e-6)
                };
                let total = integrate_exterior(&field, &dom, &q).unwrap();
                assert!(
                    (total.value - 1.0).abs() < 1e-4,
                    "s={s}, x0={x0:?}: mass {} (err est {})",
                    total.value,
                    total.err_estimate
                );
            }
        }
    }

    #[test]
    fn poisson_kernel_far_decay_slope() {
        let (n, s) = (3, 0.75);
        let x = [0.2, 0.1, 0.0];
        let p = |t: f64| poisson_kernel(&x, &[t, 0.0, 0.0], 1.0, n, s).unwrap();
        let slope = (p(1e5) / p(1e3)).ln() / (1e5f64 / 1e3).ln();
        assert_relative_eq!(slope, -(n as f64 + 2.0 * s), epsilon = 0.01);
    }

    #[test]
    fn r0_examples() {
        assert_relative_eq!(
            r0(&[0.0; 3], &[0.5, 0.0, 0.0], 1.0),
            3.0,
            max_relative = 1e-14
        );
        let near = r0(&[0.999_999, 0.0, 0.0], &[0.3, 0.0, 0.0], 1.0);
        assert!(near < 1e-5);
        let a = [0.2, -0.3, 0.1];
        let b = [-0.4, 0.2, 0.5];
        assert_eq!(r0(&a, &b, 1.0), r0(&b, &a, 1.0));
        assert_eq!(r0(&a, &a, 1.0), f64::INFINITY);
    }

    #[test]
    fn incomplete_integral_small_r_expansion() {
        let (n, s) = (3, 0.75);
        for &big_r in &[1e-6, 1e-8] {
            let v = incomplete_integral(big_r, n, s, &spec(1e-14)).unwrap();
            assert_relative_eq!(v, big_r.powf(s) / s, max_relative = 1e-5);
        }
    }

    #[test]
    fn incomplete_integral_matches_closed_form() {
        for &(n, s, big_r) in &[(3, 0.75, 3.0), (3, 0.4, 0.2), (2, 0.3, 10.0), (5, 0.9, 1.0)] {
            let quad = incomplete_integral(big_r, n, s, &spec(1e-12)).unwrap();
            let closed = incomplete_integral_closed(big_r, n, s).unwrap();
            assert_relative_eq!(quad, closed, max_relative = 1e-9);
        }
    }

    #[test]
    fn incomplete_integral_complete_limit() {
        // R → ∞ at n = 3, s = 0.75 gives the complete integral B(0.75, 0.75).
        let v = incomplete_integral(f64::INFINITY, 3, 0.75, &spec(1e-12)).unwrap();
        assert_relative_eq!(v, beta(0.75, 0.75), max_relative = 1e-8);
        let almost = incomplete_integral(1e8, 3, 0.75, &spec(1e-12)).unwrap();
        assert!(almost < v);
    }

    #[test]
    fn incomplete_integral_monotone_in_r() {
        let q = spec(1e-12);
        let mut prev = 0.0;
        for k in 1..=20 {
            let big_r = 0.3 * k as f64;
            let v = incomplete_integral(big_r, 3, 0.75, &q).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(prev < beta(0.75, 0.75));
    }

    #[test]
    fn greens_closed_symmetry_positivity_bound() {
        let q = spec(1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut p = || {
                let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.57..0.57)).collect();
                v
            };
            let (x, z) = (p(), p());
            if dist(&x, &z) < 1e-6 {
                continue;
            }
            let gxz = greens_closed(&x, &z, 1.0, 3, 0.75, &q).unwrap();
            let gzx = greens_closed(&z, &x, 1.0, 3, 0.75, &q).unwrap();
            assert_relative_eq!(gxz.value, gzx.value, max_relative = 1e-12);
            let phi = fundamental_solution(&x, &z, 3, 0.75).unwrap();
            assert!(
                gxz.value > 0.0 && gxz.value < phi,
                "0 < {} < {phi}",
                gxz.value
            );
        }
    }

    #[test]
    fn greens_closed_boundary_limit() {
        let q = spec(1e-10);
        let z = [0.1, 0.0, 0.0];
        let mut prev = f64::INFINITY;
        for &a in &[0.9, 0.99, 0.999, 0.9999] {
            let g = greens_closed(&[a, 0.0, 0.0], &z, 1.0, 3, 0.75, &q).unwrap();
            assert!(g.value < prev);
            prev = g.value;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn greens_rotation_invariance() {
        let q = spec(1e-10);
        let x = [0.3, 0.1, -0.2];
        let z = [-0.2, 0.4, 0.1];
        let base = greens_closed(&x, &z, 1.0, 3, 0.75, &q).unwrap().value;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let rot = random_rotation(&mut rng);
            let rx = apply(&rot, &x);
            let rz = apply(&rot, &z);
            let v = greens_closed(&rx, &rz, 1.0, 3, 0.75, &q).unwrap().value;
            assert_relative_eq!(v, base, max_relative = 1e-10);
        }
    }

    #[test]
    fn greens_definition_matches_closed_form() {
        let q = spec(1e-7);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for &s in &[0.4, 0.75] {
            for _ in 0..10 {
                let mut p = || {
                    let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect();
                    v
                };
                let (x, z) = (p(), p());
                if dist(&x, &z) < 0.05 {
                    continue;
                }
                let closed = greens_closed(&x, &z, 1.0, 3, s, &q).unwrap().value;
                let defn = greens_definition(&x, &z, 1.0, 3, s, &q).unwrap();
                assert_relative_eq!(defn, closed, max_relative = 1e-3);
            }
        }
    }

    #[test]
    fn greens_near_coincidence_rejected() {
        let q = spec(1e-8);
        let x = [0.3, 0.0, 0.0];
        let z = [0.3 + 1e-10, 0.0, 0.0];
        assert!(matches!(
            greens_closed(&x, &z, 1.0, 3, 0.75, &q),
            Err(Error::Singularity(_))
        ));
        assert!(matches!(
            greens_definition(&x, &z, 1.0, 3, 0.75, &q),
            Err(Error::Singularity(_))
        ));
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
        // QR-based random orthogonal matrix via Gram-Schmidt on a Gaussian.
        let mut cols = [[0.0f64; 3]; 3];
        for c in cols.iter_mut() {
            for v in c.iter_mut() {
                let u1: f64 = rng.gen::<f64>().max(1e-300);
                let u2: f64 = rng.gen();
                *v = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            }
        }
        for i in 0..3 {
            for j in 0..i {
                let d: f64 = (0..3).map(|k| cols[i][k] * cols[j][k]).sum();
                for k in 0..3 {
                    cols[i][k] -= d * cols[j][k];
                }
            }
            let norm = (0..3).map(|k| cols[i][k] * cols[i][k]).sum::<f64>().sqrt();
            for k in 0..3 {
                cols[i][k] /= norm;
            }
        }
        cols
    }

    fn apply(rot: &[[f64; 3]; 3], x: &[f64]) -> Vec<f64> {
        (0..3)
            .map(|i| (0..3).map(|j| rot[i][j] * x[j]).sum())
            .collect()
    }
}
