//! Quadrature, splines and small dense solves.

use crate::error::{Error, Result};

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let budget = std::cell::Cell::new(2_000_000usize);
    let f = &|x: f64| {
        budget.set(budget.get().saturating_sub(1));
        f(x)
    };
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let v = simpson_step(f, a, b, fa, fm, fb, whole, tol, 40, &budget)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Oracle(format!("non-finite integral on [{a}, {b}]")))
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    budget: &std::cell::Cell<usize>,
) -> Result<f64> {
    if budget.get() == 0 {
        return Err(Error::Oracle(format!("quadrature budget exhausted near [{a}, {b}]")));
    }
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || depth == 0 || (b - a) < 1e-15 * (1.0 + a.abs()) {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, budget)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, budget)?)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Solve a small dense system by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap_or(k);
        if a[p][k].abs() < 1e-300 {
            return Err(Error::Domain("singular dense system".into()));
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Ok(x)
}

/// Not-a-knot cubic spline through (x_i, y_i).
#[derive(Clone, Debug)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 4 || y.len() != n || x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("spline needs >= 4 strictly increasing nodes".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut a = vec![vec![0.0; n]; n];
        let mut rhs = vec![0.0; n];
        // third-derivative continuity at x_1 and x_{n-2}
        a[0][0] = -h[1];
        a[0][1] = h[0] + h[1];
        a[0][2] = -h[0];
        a[n - 1][n - 3] = -h[n - 2];
        a[n - 1][n - 2] = h[n - 3] + h[n - 2];
        a[n - 1][n - 1] = -h[n - 3];
        for i in 1..n - 1 {
            a[i][i - 1] = h[i - 1];
            a[i][i] = 2.0 * (h[i - 1] + h[i]);
            a[i][i + 1] = h[i];
            rhs[i] = 6.0 * (d[i] - d[i - 1]);
        }
        let m = solve_dense(a, rhs)?;
        Ok(CubicSpline {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    /// (S'(x_k), S''(x_k)) at every node.
    pub fn node_derivatives(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.x.len();
        let mut d1 = Vec::with_capacity(n);
        for k in 0..n {
            if k + 1 < n {
                let h = self.x[k + 1] - self.x[k];
                d1.push((self.y[k + 1] - self.y[k]) / h - h * (2.0 * self.m[k] + self.m[k + 1]) / 6.0);
            } else {
                let h = self.x[k] - self.x[k - 1];
                d1.push((self.y[k] - self.y[k - 1]) / h + h * (self.m[k - 1] + 2.0 * self.m[k]) / 6.0);
            }
        }
        (d1, self.m.clone())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let k = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[k + 1] - self.x[k];
        let a = (self.x[k + 1] - t) / h;
        let b = (t - self.x[k]) / h;
        a * self.y[k]
            + b * self.y[k + 1]
            + ((a * a * a - a) * self.m[k] + (b * b * b - b) * self.m[k + 1]) * h * h / 6.0
    }
}

/// Chebyshev-Lobatto points on [a, b], increasing.
pub fn chebyshev_lobatto(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let c = -(std::f64::consts::PI * k as f64 / (n - 1) as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * c
        })
        .collect()
}

/// Observed convergence orders log2(e_k / e_{k+1}) for successive halvings.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_exp() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(v, std::f64::consts::E - 1.0, epsilon = 1e-11);
    }

    #[test]
    fn simpson_sqrt_singularity() {
        let v = adaptive_simpson(&|x: f64| 1.0 / x.sqrt(), 1e-300, 1.0, 1e-10);
        assert!(v.is_ok());
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert_relative_eq!(s, 2.0 / 15.0, epsilon = 1e-14);
        let total: f64 = w.iter().sum();
        assert_relative_eq!(total, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn spline_reproduces_cubics() {
        let x = chebyshev_lobatto(0.1, 0.9, 11);
        let y: Vec<f64> = x.iter().map(|t| 2.0 * t * t * t - t + 0.5).collect();
        let s = CubicSpline::new(&x, &y).unwrap();
        let (d1, d2) = s.node_derivatives();
        for k in 0..x.len() {
            assert_relative_eq!(d1[k], 6.0 * x[k] * x[k] - 1.0, epsilon = 1e-10);
            assert_relative_eq!(d2[k], 12.0 * x[k], epsilon = 1e-9);
        }
        assert_relative_eq!(s.eval(0.37), 2.0 * 0.37f64.powi(3) - 0.37 + 0.5, epsilon = 1e-12);
    }

    #[test]
    fn lobatto_endpoints() {
        let p = chebyshev_lobatto(1.0, 2.0, 9);
        assert_relative_eq!(p[0], 1.0);
        assert_relative_eq!(p[8], 2.0);
        assert!(p.windows(2).all(|w| w[1] > w[0]));
    }
}
