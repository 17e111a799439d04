//! Monotone cubic (PCHIP) interpolation for cached radial profiles.

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson slopes. The
/// interpolant preserves monotonicity of the data and never overshoots, which
/// keeps cached solver profiles free of spurious sign changes.
#[derive(Debug, Clone)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Pchip {
    /// Build from strictly increasing abscissae. Panics on fewer than two
    /// points or non-monotone `xs`.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 2, "pchip needs at least two nodes");
        assert!(
            xs.windows(2).all(|w| w[0] < w[1]),
            "pchip abscissae must be strictly increasing"
        );
        let m = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..m - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = vec![0.0; m];
        for i in 1..m - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                ds[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        ds[0] = edge_slope(
            h[0],
            h.get(1).copied().unwrap_or(h[0]),
            delta[0],
            delta.get(1).copied().unwrap_or(delta[0]),
        );
        let dd = delta.len();
        ds[m - 1] = edge_slope(
            h[dd - 1],
            if dd >= 2 { h[dd - 2] } else { h[dd - 1] },
            delta[dd - 1],
            if dd >= 2 {
                delta[dd - 2]
            } else {
                delta[dd - 1]
            },
        );
        Pchip { xs, ys, ds }
    }

    /// Evaluate the interpolant; outside the node range the boundary cubic is
    /// extended.
    pub fn eval(&self, x: f64) -> f64 {
        let m = self.xs.len();
        let i = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(j) => j.min(m - 2),
            Err(j) => j.clamp(1, m - 1) - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.ds[i], self.ds[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }
}

/// One-sided three-point edge slope with the standard PCHIP limiter.
fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 < 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reproduces_linear_data_exactly() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let p = Pchip::new(xs, ys);
        for &x in &[0.0, 0.123, 0.5, 0.987, 1.0] {
            assert_relative_eq!(p.eval(x), 3.0 * x - 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn accurate_on_smooth_profile() {
        let xs: Vec<f64> = (0..400).map(|i| i as f64 / 399.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (1.0 - x * x).sin()).collect();
        let p = Pchip::new(xs, ys);
        for &x in &[0.01, 0.25, 0.5003, 0.731, 0.9999] {
            assert_relative_eq!(p.eval(x), (1.0 - x * x).sin(), epsilon = 1e-7);
        }
    }

    #[test]
    fn monotone_data_stays_monotone() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.1, 0.2, 5.0, 5.1];
        let p = Pchip::new(xs, ys);
        let mut prev = p.eval(0.0);
        for k in 1..=400 {
            let v = p.eval(4.0 * k as f64 / 400.0);
            assert!(v >= prev - 1e-12, "overshoot at node {k}");
            prev = v;
        }
    }
}
