//! Isothermal log-polar charts and Riemannian differential operators.
//!
//! The metric on the chart is mu^2 (dx^2 + dy^2). For an annulus inside a
//! disk, x = sigma, y = theta, z = r0 e^{sigma + i theta} and mu = lambda(z) |z|.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    AnnulusInDisk,
    Cylinder,
    /// Non-periodic Cartesian patch, used for Euclidean identity tests.
    Planar,
}

/// Surface conformal factor lambda(z).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricSpec {
    Flat,
    HyperbolicDisk,
    GaussianBump { c: f64 },
    /// lambda sampled on the chart grid, row-major in (sigma, theta).
    User { lambda: Vec<f64> },
}

impl MetricSpec {
    /// lambda(z) for analytic metrics.
    pub fn lambda(&self, z: Complex64) -> Option<f64> {
        match self {
            MetricSpec::Flat => Some(1.0),
            MetricSpec::HyperbolicDisk => Some(2.0 / (1.0 - z.norm_sqr())),
            MetricSpec::GaussianBump { c } => Some((c * z.norm_sqr()).exp()),
            MetricSpec::User { .. } => None,
        }
    }

    /// Closed-form curvature of lambda^2 |dz|^2.
    pub fn curvature_at(&self, z: Complex64) -> Option<f64> {
        match self {
            MetricSpec::Flat => Some(0.0),
            MetricSpec::HyperbolicDisk => Some(-1.0),
            MetricSpec::GaussianBump { c } => Some(-4.0 * c * (-2.0 * c * z.norm_sqr()).exp()),
            MetricSpec::User { .. } => None,
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self, MetricSpec::User { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub n0: usize,
    pub n1: usize,
    pub x0: f64,
    pub h0: f64,
    pub y0: f64,
    pub h1: f64,
    pub periodic: bool,
}

impl Grid {
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h0
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.h1
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n0 - 1)
    }

    /// Length of the y-axis: the period when periodic.
    pub fn y_extent(&self) -> f64 {
        if self.periodic {
            self.n1 as f64 * self.h1
        } else {
            (self.n1 - 1) as f64 * self.h1
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n0, self.n1)
    }
}

#[derive(Clone, Debug)]
pub struct AnnulusChart {
    grid: Grid,
    topology: Topology,
    metric: MetricSpec,
    r_outer: f64,
    r0: f64,
    mu: ScalarField,
    log_mu: ScalarField,
    curvature: ScalarField,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureSign {
    Nonpositive,
    Nonnegative,
    Mixed,
}

pub fn build_chart(
    r_outer: f64,
    n_sigma: usize,
    n_theta: usize,
    metric: MetricSpec,
    topology: Topology,
) -> Result<AnnulusChart> {
    build_chart_with(r_outer, n_sigma, n_theta, metric, topology, None)
}

/// As [`build_chart`], with an explicit inner Euclidean radius r0.
pub fn build_chart_with(
    r_outer: f64,
    n_sigma: usize,
    n_theta: usize,
    metric: MetricSpec,
    topology: Topology,
    inner_radius: Option<f64>,
) -> Result<AnnulusChart> {
    if !(r_outer > 1.0) || !r_outer.is_finite() {
        return Err(Error::Domain(format!("outer radius must exceed 1, got {r_outer}")));
    }
    if n_sigma < 16 || n_theta < 16 {
        return Err(Error::Domain(format!("grid {n_sigma}x{n_theta} below 16x16")));
    }
    if topology == Topology::Planar {
        return Err(Error::Domain("use build_planar_chart for planar patches".into()));
    }
    let r0 = match inner_radius {
        Some(r) => r,
        None => match metric {
            MetricSpec::HyperbolicDisk => 0.9 / r_outer,
            _ => 1.0,
        },
    };
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::Domain(format!("inner radius must be positive, got {r0}")));
    }
    if metric == MetricSpec::HyperbolicDisk && r0 * r_outer >= 1.0 {
        return Err(Error::Domain(format!(
            "hyperbolic annulus [{r0}, {}] leaves the unit disk",
            r0 * r_outer
        )));
    }
    let grid = Grid {
        n0: n_sigma,
        n1: n_theta,
        x0: 0.0,
        h0: r_outer.ln() / (n_sigma - 1) as f64,
        y0: 0.0,
        h1: 2.0 * PI / n_theta as f64,
        periodic: true,
    };
    finish(grid, topology, metric, r_outer, r0)
}

/// Cartesian patch [x0,x1] x [y0,y1] with mu = lambda(x + i y).
pub fn build_planar_chart(
    x_range: (f64, f64),
    y_range: (f64, f64),
    n0: usize,
    n1: usize,
    metric: MetricSpec,
) -> Result<AnnulusChart> {
    if n0 < 4 || n1 < 4 || !(x_range.1 > x_range.0) || !(y_range.1 > y_range.0) {
        return Err(Error::Domain("degenerate planar patch".into()));
    }
    let grid = Grid {
        n0,
        n1,
        x0: x_range.0,
        h0: (x_range.1 - x_range.0) / (n0 - 1) as f64,
        y0: y_range.0,
        h1: (y_range.1 - y_range.0) / (n1 - 1) as f64,
        periodic: false,
    };
    finish(grid, Topology::Planar, metric, 1.0, 1.0)
}

fn finish(grid: Grid, topology: Topology, metric: MetricSpec, r_outer: f64, r0: f64) -> Result<AnnulusChart> {
    let shape = grid.shape();
    let mu = match &metric {
        MetricSpec::User { lambda } => {
            if lambda.len() != shape.0 * shape.1 {
                return Err(Error::SizeMismatch {
                    expected: shape,
                    got: (lambda.len(), 1),
                });
            }
            ScalarField::from_fn(shape.0, shape.1, |i, j| {
                let l = lambda[i * shape.1 + j];
                match topology {
                    Topology::AnnulusInDisk => l * r0 * grid.x(i).exp(),
                    _ => l,
                }
            })
        }
        m => ScalarField::from_fn(shape.0, shape.1, |i, j| {
            mu_analytic(m, topology, r0, grid.x(i), grid.y(j)).unwrap_or(f64::NAN)
        }),
    };
    if let Some(bad) = mu.data().iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidMetric(format!("conformal factor {bad} is not positive")));
    }
    let log_mu = mu.map(f64::ln);
    let mut chart = AnnulusChart {
        grid,
        topology,
        metric,
        r_outer,
        r0,
        mu,
        log_mu,
        curvature: ScalarField::zeros(shape.0, shape.1),
    };
    let lap = &chart.d00(&chart.log_mu) + &chart.d11(&chart.log_mu);
    chart.curvature = lap.zip_map(&chart.mu, |l, m| -l / (m * m));
    Ok(chart)
}

fn point(topology: Topology, r0: f64, x: f64, y: f64) -> Complex64 {
    match topology {
        Topology::Planar => Complex64::new(x, y),
        _ => Complex64::from_polar(r0 * x.exp(), y),
    }
}

fn mu_analytic(metric: &MetricSpec, topology: Topology, r0: f64, x: f64, y: f64) -> Option<f64> {
    let z = point(topology, r0, x, y);
    let l = metric.lambda(z)?;
    Some(match topology {
        Topology::AnnulusInDisk => l * z.norm(),
        _ => l,
    })
}

impl AnnulusChart {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shape(&self) -> (usize, usize) {
        self.grid.shape()
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn metric(&self) -> &MetricSpec {
        &self.metric
    }

    /// Outer conformal radius R.
    pub fn r_outer(&self) -> f64 {
        self.r_outer
    }

    /// Euclidean radius of the inner boundary circle.
    pub fn inner_radius(&self) -> f64 {
        self.r0
    }

    pub fn mu(&self) -> &ScalarField {
        &self.mu
    }

    pub fn log_mu(&self) -> &ScalarField {
        &self.log_mu
    }

    pub fn sigma(&self) -> Vec<f64> {
        (0..self.grid.n0).map(|i| self.grid.x(i)).collect()
    }

    pub fn theta(&self) -> Vec<f64> {
        (0..self.grid.n1).map(|j| self.grid.y(j)).collect()
    }

    /// Euclidean point of chart coordinates.
    pub fn z_of(&self, x: f64, y: f64) -> Complex64 {
        point(self.topology, self.r0, x, y)
    }

    /// Conformal factor at an arbitrary chart point.
    pub fn mu_at(&self, x: f64, y: f64) -> f64 {
        mu_analytic(&self.metric, self.topology, self.r0, x, y).unwrap_or_else(|| self.sample(&self.mu, x, y))
    }

    pub fn curvature(&self) -> &ScalarField {
        &self.curvature
    }

    /// Closed-form K at a chart point, for analytic metrics in the plane.
    pub fn curvature_exact_at(&self, x: f64, y: f64) -> Option<f64> {
        if self.topology == Topology::Cylinder && self.metric != MetricSpec::Flat {
            return None;
        }
        self.metric.curvature_at(self.z_of(x, y))
    }

    pub fn field(&self, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let g = self.grid;
        ScalarField::from_fn(g.n0, g.n1, |i, j| f(g.x(i), g.y(j)))
    }

    fn check(&self, f: &ScalarField) -> Result<()> {
        f.check_shape(self.shape())
    }

    /// First derivative along x (sigma), one-sided second order at the ends.
    pub fn d0(&self, f: &ScalarField) -> ScalarField {
        let g = &self.grid;
        let n = g.n0;
        let c = 0.5 / g.h0;
        ScalarField::from_fn(n, g.n1, |i, j| {
            if i == 0 {
                c * (-3.0 * f.get(0, j) + 4.0 * f.get(1, j) - f.get(2, j))
            } else if i == n - 1 {
                c * (3.0 * f.get(n - 1, j) - 4.0 * f.get(n - 2, j) + f.get(n - 3, j))
            } else {
                c * (f.get(i + 1, j) - f.get(i - 1, j))
            }
        })
    }

    /// First derivative along y (theta), periodic when the chart is.
    pub fn d1(&self, f: &ScalarField) -> ScalarField {
        let g = &self.grid;
        let n = g.n1;
        let c = 0.5 / g.h1;
        ScalarField::from_fn(g.n0, n, |i, j| {
            if g.periodic {
                c * (f.get(i, (j + 1) % n) - f.get(i, (j + n - 1) % n))
            } else if j == 0 {
                c * (-3.0 * f.get(i, 0) + 4.0 * f.get(i, 1) - f.get(i, 2))
            } else if j == n - 1 {
                c * (3.0 * f.get(i, n - 1) - 4.0 * f.get(i, n - 2) + f.get(i, n - 3))
            } else {
                c * (f.get(i, j + 1) - f.get(i, j - 1))
            }
        })
    }

    /// Compact second derivative along x.
    pub fn d00(&self, f: &ScalarField) -> ScalarField {
        let g = &self.grid;
        let n = g.n0;
        let c = 1.0 / (g.h0 * g.h0);
        ScalarField::from_fn(n, g.n1, |i, j| {
            if i == 0 {
                c * (2.0 * f.get(0, j) - 5.0 * f.get(1, j) + 4.0 * f.get(2, j) - f.get(3, j))
            } else if i == n - 1 {
                c * (2.0 * f.get(n - 1, j) - 5.0 * f.get(n - 2, j) + 4.0 * f.get(n - 3, j) - f.get(n - 4, j))
            } else {
                c * (f.get(i + 1, j) - 2.0 * f.get(i, j) + f.get(i - 1, j))
            }
        })
    }

    /// Compact second derivative along y.
    pub fn d11(&self, f: &ScalarField) -> ScalarField {
        let g = &self.grid;
        let n = g.n1;
        let c = 1.0 / (g.h1 * g.h1);
        ScalarField::from_fn(g.n0, n, |i, j| {
            if g.periodic {
                c * (f.get(i, (j + 1) % n) - 2.0 * f.get(i, j) + f.get(i, (j + n - 1) % n))
            } else if j == 0 {
                c * (2.0 * f.get(i, 0) - 5.0 * f.get(i, 1) + 4.0 * f.get(i, 2) - f.get(i, 3))
            } else if j == n - 1 {
                c * (2.0 * f.get(i, n - 1) - 5.0 * f.get(i, n - 2) + 4.0 * f.get(i, n - 3) - f.get(i, n - 4))
            } else {
                c * (f.get(i, j + 1) - 2.0 * f.get(i, j) + f.get(i, j - 1))
            }
        })
    }

    pub fn d01(&self, f: &ScalarField) -> ScalarField {
        self.d0(&self.d1(f))
    }

    /// Integral of f over the chart against dA_g = mu^2 dx dy.
    pub fn integrate(&self, f: &ScalarField) -> f64 {
        let g = &self.grid;
        let mut total = 0.0;
        for i in 0..g.n0 {
            let wi = if i == 0 || i == g.n0 - 1 { 0.5 } else { 1.0 };
            let mut row = 0.0;
            for j in 0..g.n1 {
                let wj = if !g.periodic && (j == 0 || j == g.n1 - 1) { 0.5 } else { 1.0 };
                let m = self.mu.get(i, j);
                row += wj * f.get(i, j) * m * m;
            }
            total += wi * row;
        }
        total * g.h0 * g.h1
    }

    /// Bilinear interpolation of a grid field, wrapping in y when periodic.
    pub fn sample(&self, f: &ScalarField, x: f64, y: f64) -> f64 {
        let g = &self.grid;
        let fx = (x - g.x0) / g.h0;
        let i = (fx.floor() as isize).clamp(0, g.n0 as isize - 2) as usize;
        let tx = fx - i as f64;
        let fy = (y - g.y0) / g.h1;
        let (j0, j1, ty) = if g.periodic {
            let jf = fy.floor();
            let j = (jf as i64).rem_euclid(g.n1 as i64) as usize;
            (j, (j + 1) % g.n1, fy - jf)
        } else {
            let j = (fy.floor() as isize).clamp(0, g.n1 as isize - 2) as usize;
            (j, j + 1, fy - j as f64)
        };
        let a = f.get(i, j0) * (1.0 - ty) + f.get(i, j1) * ty;
        let b = f.get(i + 1, j0) * (1.0 - ty) + f.get(i + 1, j1) * ty;
        a * (1.0 - tx) + b * tx
    }

    /// Integral of K over the disk |z| < r0 filling the inner hole,
    /// via Gauss-Bonnet on the inner circle.
    pub fn hole_curvature_integral(&self) -> Option<f64> {
        if self.topology != Topology::AnnulusInDisk {
            return None;
        }
        let g = &self.grid;
        let mut total = 0.0;
        for j in 0..g.n1 {
            let y = g.y(j);
            let dlog = if self.metric.is_analytic() {
                let e = 1e-5;
                ((self.mu_at(e, y)).ln() - (self.mu_at(-e, y)).ln()) / (2.0 * e)
            } else {
                (-3.0 * self.log_mu.get(0, j) + 4.0 * self.log_mu.get(1, j) - self.log_mu.get(2, j)) / (2.0 * g.h0)
            };
            total += dlog - 1.0;
        }
        Some(-total * g.h1)
    }

    /// Largest K on the filled inner hole, sampled on a polar grid.
    pub fn hole_curvature_max(&self) -> Option<f64> {
        if self.topology != Topology::AnnulusInDisk || !self.metric.is_analytic() {
            return None;
        }
        let mut best = f64::NEG_INFINITY;
        for a in 0..=32 {
            let r = self.r0 * a as f64 / 32.0;
            for b in 0..32 {
                let z = Complex64::from_polar(r, 2.0 * PI * b as f64 / 32.0);
                best = best.max(self.metric.curvature_at(z)?);
            }
        }
        Some(best)
    }
}

pub fn riemannian_gradient(chart: &AnnulusChart, u: &ScalarField) -> Result<VectorField> {
    chart.check(u)?;
    let inv2 = chart.mu.map(|m| 1.0 / (m * m));
    Ok(VectorField {
        x: &chart.d0(u) * &inv2,
        y: &chart.d1(u) * &inv2,
    })
}

pub fn riemannian_divergence(chart: &AnnulusChart, v: &VectorField) -> Result<ScalarField> {
    chart.check(&v.x)?;
    chart.check(&v.y)?;
    let m2 = chart.mu.map(|m| m * m);
    let flux = &chart.d0(&(&v.x * &m2)) + &chart.d1(&(&v.y * &m2));
    Ok(flux.zip_map(&m2, |f, m| f / m))
}

/// mu^{-2} (D0 D0 u + D1 D1 u): the composition of the discrete divergence and gradient.
pub fn riemannian_laplacian(chart: &AnnulusChart, u: &ScalarField) -> Result<ScalarField> {
    chart.check(u)?;
    let flat = &chart.d0(&chart.d0(u)) + &chart.d1(&chart.d1(u));
    Ok(flat.zip_map(&chart.mu, |f, m| f / (m * m)))
}

pub fn grad_norm_g(chart: &AnnulusChart, u: &ScalarField) -> Result<ScalarField> {
    chart.check(u)?;
    let ux = chart.d0(u);
    let uy = chart.d1(u);
    let n = ux.zip_map(&uy, f64::hypot);
    Ok(n.zip_map(&chart.mu, |a, m| a / m))
}

/// g(X, Y) for contravariant fields.
pub fn inner_g(chart: &AnnulusChart, a: &VectorField, b: &VectorField) -> ScalarField {
    let dot = &(&a.x * &b.x) + &(&a.y * &b.y);
    dot.zip_map(&chart.mu, |d, m| d * m * m)
}

pub fn gauss_curvature(chart: &AnnulusChart) -> ScalarField {
    chart.curvature.clone()
}

pub fn curvature_sign(k: &ScalarField, tol: f64) -> CurvatureSign {
    if k.max() <= tol {
        CurvatureSign::Nonpositive
    } else if k.min() >= -tol {
        CurvatureSign::Nonnegative
    } else {
        CurvatureSign::Mixed
    }
}

/// Compares the integral of the Laplacian with the boundary flux; returns (lhs, rhs, relative error).
pub fn stokes_check(chart: &AnnulusChart, u: &ScalarField) -> Result<(f64, f64, f64)> {
    let lap = riemannian_laplacian(chart, u)?;
    let lhs = chart.integrate(&lap);
    let g = chart.grid();
    let du = chart.d0(u);
    let mut rhs = 0.0;
    for j in 0..g.n1 {
        let w = if !g.periodic && (j == 0 || j == g.n1 - 1) { 0.5 } else { 1.0 };
        rhs += w * (du.get(g.n0 - 1, j) - du.get(0, j));
    }
    rhs *= g.h1;
    if !g.periodic {
        let dv = chart.d1(u);
        for i in 0..g.n0 {
            let w = if i == 0 || i == g.n0 - 1 { 0.5 } else { 1.0 };
            rhs += w * g.h0 * (dv.get(i, g.n1 - 1) - dv.get(i, 0));
        }
    }
    let rel = (lhs - rhs).abs() / rhs.abs().max(lhs.abs()).max(1e-300);
    Ok((lhs, rhs, rel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn flat(n: usize) -> AnnulusChart {
        build_chart(2.0, n, n, MetricSpec::Flat, Topology::AnnulusInDisk).unwrap()
    }

    #[test]
    fn flat_mu_is_radius() {
        let c = flat(32);
        for i in [0, 7, 31] {
            assert_relative_eq!(c.mu().get(i, 3), c.grid().x(i).exp(), max_relative = 1e-14);
        }
        assert!(c.curvature().max_abs() < 1e-10);
    }

    #[test]
    fn cylinder_unit_factor() {
        let c = build_chart(2.0, 16, 16, MetricSpec::Flat, Topology::Cylinder).unwrap();
        assert!(c.mu().data().iter().all(|&m| m == 1.0));
    }

    #[test]
    fn gradient_of_sigma() {
        let c = flat(64);
        let u = c.field(|x, _| x);
        let n = grad_norm_g(&c, &u).unwrap();
        for i in [0, 10, 63] {
            assert_relative_eq!(n.get(i, 5), (-c.grid().x(i)).exp(), max_relative = 1e-12);
        }
        let lap = riemannian_laplacian(&c, &u).unwrap();
        assert!(lap.max_abs() < 1e-10);
    }

    #[test]
    fn hyperbolic_gradient_of_sigma() {
        let c = build_chart(2.0, 64, 64, MetricSpec::HyperbolicDisk, Topology::AnnulusInDisk).unwrap();
        let u = c.field(|x, _| x);
        let n = grad_norm_g(&c, &u).unwrap();
        for i in [0, 20, 63] {
            let r = c.inner_radius() * c.grid().x(i).exp();
            assert_relative_eq!(n.get(i, 0), (1.0 - r * r) / (2.0 * r), max_relative = 1e-12);
        }
    }

    #[test]
    fn hyperbolic_requires_inside_disk() {
        let e = build_chart_with(2.0, 32, 32, MetricSpec::HyperbolicDisk, Topology::AnnulusInDisk, Some(0.6));
        assert!(e.is_err());
    }

    #[test]
    fn invalid_user_metric() {
        let mut lambda = vec![1.0; 16 * 16];
        lambda[5] = -1.0;
        let e = build_chart(2.0, 16, 16, MetricSpec::User { lambda }, Topology::AnnulusInDisk);
        assert!(matches!(e, Err(Error::InvalidMetric(_))));
    }

    #[test]
    fn sampling_wraps() {
        let c = flat(32);
        let u = c.field(|x, y| x + y.cos());
        let a = c.sample(&u, 0.3, 0.1);
        let b = c.sample(&u, 0.3, 0.1 + 2.0 * PI);
        assert_relative_eq!(a, b, epsilon = 1e-12);
        assert_relative_eq!(a, 0.3 + 0.1f64.cos(), epsilon = 1e-2);
    }

    #[test]
    fn hole_integrals() {
        let c = flat(32);
        assert!(c.hole_curvature_integral().unwrap().abs() < 1e-8);
        let h = build_chart(2.0, 32, 32, MetricSpec::HyperbolicDisk, Topology::AnnulusInDisk).unwrap();
        let r = h.inner_radius();
        let area = 4.0 * PI * r * r / (1.0 - r * r);
        assert_relative_eq!(h.hole_curvature_integral().unwrap(), -area, max_relative = 1e-8);
    }
}
