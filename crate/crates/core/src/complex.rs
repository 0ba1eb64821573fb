//! Complex gradient, the first-order elliptic system it satisfies, and the
//! stream function (conjugate solution).
//!
//! Chart coordinates w = x + i y are isothermal with factor mu, so every
//! formula is written in them with lambda replaced by mu.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chart::AnnulusChart;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::model::{elliptic_coefficients, DiffusivityModel};
use crate::solver::{pcg, weak_residual, Solution};

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    pub re: ScalarField,
    pub im: ScalarField,
}

impl ComplexField {
    pub fn from_fn(n0: usize, n1: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut re = ScalarField::zeros(n0, n1);
        let mut im = ScalarField::zeros(n0, n1);
        for i in 0..n0 {
            for j in 0..n1 {
                let z = f(i, j);
                re.set(i, j, z.re);
                im.set(i, j, z.im);
            }
        }
        ComplexField { re, im }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re.get(i, j), self.im.get(i, j))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.re.shape()
    }

    pub fn abs(&self) -> ScalarField {
        self.re.zip_map(&self.im, f64::hypot)
    }

    /// Rows of `sigma,theta,re,im`.
    pub fn write_csv<W: Write>(&self, out: &mut W, chart: &AnnulusChart) -> Result<()> {
        let g = chart.grid();
        writeln!(out, "sigma,theta,re,im")?;
        for i in 0..g.n0 {
            for j in 0..g.n1 {
                writeln!(out, "{:.12e},{:.12e},{:.12e},{:.12e}", g.x(i), g.y(j), self.re.get(i, j), self.im.get(i, j))?;
            }
        }
        Ok(())
    }
}

/// d/dy of a field that jumps by `jump` when y wraps past the period.
fn d1_jump(chart: &AnnulusChart, u: &ScalarField, jump: f64) -> ScalarField {
    let g = chart.grid();
    if !g.periodic || jump == 0.0 {
        return chart.d1(u);
    }
    let n = g.n1;
    let c = 0.5 / g.h1;
    ScalarField::from_fn(g.n0, n, |i, j| {
        let up = u.get(i, (j + 1) % n) + if j + 1 == n { jump } else { 0.0 };
        let down = u.get(i, (j + n - 1) % n) - if j == 0 { jump } else { 0.0 };
        c * (up - down)
    })
}

/// f = u_x - i u_y for a field with seam jump `jump`.
pub fn complex_gradient_field(chart: &AnnulusChart, u: &ScalarField, jump: f64) -> Result<ComplexField> {
    u.check_shape(chart.shape())?;
    let ux = chart.d0(u);
    let uy = d1_jump(chart, u, jump);
    let (n0, n1) = chart.shape();
    Ok(ComplexField::from_fn(n0, n1, |i, j| Complex64::new(ux.get(i, j), -uy.get(i, j))))
}

pub fn complex_gradient(sol: &Solution) -> ComplexField {
    complex_gradient_field(&sol.chart, &sol.u, 0.0).expect("solution shape matches chart")
}

/// F = a^{1/2}(s) f with s = mu^{-1} |f|.
pub fn f_field_of(chart: &AnnulusChart, model: &DiffusivityModel, f: &ComplexField) -> ComplexField {
    let (n0, n1) = f.shape();
    let mu = chart.mu();
    ComplexField::from_fn(n0, n1, |i, j| {
        let fz = f.get(i, j);
        let s = fz.norm() / mu.get(i, j);
        if s > 0.0 {
            fz * (model.half_flux(s) / s)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[allow(non_snake_case)]
pub fn F_field(sol: &Solution) -> ComplexField {
    f_field_of(&sol.chart, &sol.model, &complex_gradient(sol))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemCoefficients {
    pub a1: ComplexField,
    pub a2: ComplexField,
    /// max of |a1| + |a2| over the grid
    pub sup_bound: f64,
}

pub fn system_coefficients_field(
    chart: &AnnulusChart,
    model: &DiffusivityModel,
    u: &ScalarField,
    jump: f64,
    floor: f64,
) -> Result<SystemCoefficients> {
    let f = complex_gradient_field(chart, u, jump)?;
    let big = f_field_of(chart, model, &f);
    let mu = chart.mu();
    let (n0, n1) = f.shape();
    let mut min_s = f64::INFINITY;
    for i in 0..n0 {
        for j in 0..n1 {
            min_s = min_s.min(f.get(i, j).norm() / mu.get(i, j));
        }
    }
    if !(min_s >= floor) || min_s == 0.0 {
        return Err(Error::CriticalProximity { value: min_s, floor });
    }
    let mut a1 = ComplexField::from_fn(n0, n1, |_, _| Complex64::new(0.0, 0.0));
    let mut a2 = a1.clone();
    let mut sup = 0.0f64;
    for i in 0..n0 {
        for j in 0..n1 {
            let s = f.get(i, j).norm() / mu.get(i, j);
            let ec = elliptic_coefficients(model, s)?;
            let fz = big.get(i, j);
            let phase = fz.conj() / fz;
            let c1 = phase * (0.5 * (ec.c - ec.b_ratio));
            let c2 = phase.conj() * (0.5 * (ec.c + ec.b_ratio));
            a1.re.set(i, j, c1.re);
            a1.im.set(i, j, c1.im);
            a2.re.set(i, j, c2.re);
            a2.im.set(i, j, c2.im);
            sup = sup.max(c1.norm() + c2.norm());
        }
    }
    Ok(SystemCoefficients { a1, a2, sup_bound: sup })
}

pub fn system_coefficients(sol: &Solution) -> Result<SystemCoefficients> {
    system_coefficients_field(&sol.chart, &sol.model, &sol.u, 0.0, sol.gradient_floor)
}

/// Right-hand side of F_zbar - a1 F_z - a2 conj(F_z) = rhs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsForm {
    /// -2 a1 F mu_z / mu - 2 a2 conj(F) mu_zbar / mu, obtained by direct
    /// differentiation of |F| / mu
    Derived,
    /// the same with F and conj(F) exchanged
    Swapped,
}

/// Normalized interior max of |LHS - RHS|, relative to max(|F| + |F_z| + |F_zbar|).
pub fn system_residual(sol: &Solution) -> Result<f64> {
    system_residual_form(sol, RhsForm::Derived)
}

pub fn system_residual_form(sol: &Solution, form: RhsForm) -> Result<f64> {
    let chart = &sol.chart;
    let coef = system_coefficients(sol)?;
    let big = F_field(sol);
    let g = chart.grid();
    let fx_re = chart.d0(&big.re);
    let fx_im = chart.d0(&big.im);
    let fy_re = chart.d1(&big.re);
    let fy_im = chart.d1(&big.im);
    let lx = chart.d0(chart.log_mu());
    let ly = chart.d1(chart.log_mu());
    let i_unit = Complex64::new(0.0, 1.0);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    let (j_lo, j_hi) = if g.periodic { (0, g.n1) } else { (1, g.n1 - 1) };
    for i in 1..g.n0 - 1 {
        for j in j_lo..j_hi {
            let fx = Complex64::new(fx_re.get(i, j), fx_im.get(i, j));
            let fy = Complex64::new(fy_re.get(i, j), fy_im.get(i, j));
            let fz = 0.5 * (fx - i_unit * fy);
            let fzb = 0.5 * (fx + i_unit * fy);
            let lz = 0.5 * Complex64::new(lx.get(i, j), -ly.get(i, j));
            let (a1, a2, f) = (coef.a1.get(i, j), coef.a2.get(i, j), big.get(i, j));
            let lhs = fzb - a1 * fz - a2 * fz.conj();
            let rhs = match form {
                RhsForm::Derived => -2.0 * a1 * f * lz - 2.0 * a2 * f.conj() * lz.conj(),
                RhsForm::Swapped => -2.0 * a1 * f.conj() * lz - 2.0 * a2 * f * lz.conj(),
            };
            worst = worst.max((lhs - rhs).norm());
            scale = scale.max(f.norm() + fz.norm() + fzb.norm());
        }
    }
    Ok(if scale > 0.0 { worst / scale } else { 0.0 })
}

/// v on the chart cut along y = y0, with v(x, y + period) = v(x, y) + branch_jump.
#[derive(Clone, Debug)]
pub struct StreamSolution {
    pub chart: Arc<AnnulusChart>,
    pub v: ScalarField,
    pub branch_jump: f64,
    pub cleanup_iterations: usize,
}

/// grad v = *(a(|grad u|_g) grad u), i.e. v_x = -a u_y and v_y = a u_x.
pub fn stream_function_field(
    chart: &Arc<AnnulusChart>,
    model: &DiffusivityModel,
    u: &ScalarField,
    jump: f64,
) -> Result<StreamSolution> {
    u.check_shape(chart.shape())?;
    let g = *chart.grid();
    let (n0, n1) = (g.n0, g.n1);
    let ux = chart.d0(u);
    let uy = d1_jump(chart, u, jump);
    let mu = chart.mu();
    let mut gx = ScalarField::zeros(n0, n1);
    let mut gy = ScalarField::zeros(n0, n1);
    for i in 0..n0 {
        for j in 0..n1 {
            let (a, b) = (ux.get(i, j), uy.get(i, j));
            let s = a.hypot(b) / mu.get(i, j);
            let c = if s > 0.0 { model.a(s) } else { 0.0 };
            if !c.is_finite() {
                return Err(Error::Stream(format!("a({s}) is not finite")));
            }
            gx.set(i, j, -c * b);
            gy.set(i, j, c * a);
        }
    }
    let cells_y = if g.periodic { n1 } else { n1 - 1 };
    let mut branch_jump = 0.0;
    if g.periodic {
        for i in 0..n0 {
            let row: f64 = (0..n1).map(|j| 0.5 * g.h1 * (gy.get(i, j) + gy.get(i, (j + 1) % n1))).sum();
            branch_jump += row / n0 as f64;
        }
    }
    // path integration: along the cut, then along each y-line
    let mut v = ScalarField::zeros(n0, n1);
    for i in 1..n0 {
        v.set(i, 0, v.get(i - 1, 0) + 0.5 * g.h0 * (gx.get(i - 1, 0) + gx.get(i, 0)));
    }
    for i in 0..n0 {
        for j in 1..n1 {
            v.set(i, j, v.get(i, j - 1) + 0.5 * g.h1 * (gy.get(i, j - 1) + gy.get(i, j)));
        }
    }
    // least-squares curl cleanup over grid edges
    let (w0, w1) = (1.0 / (g.h0 * g.h0), 1.0 / (g.h1 * g.h1));
    let idx = |i: usize, j: usize| i * n1 + j;
    let mut rhs = vec![0.0; n0 * n1];
    let mut diag = vec![0.0; n0 * n1];
    for i in 0..n0 {
        for j in 0..n1 {
            if i + 1 < n0 {
                let d = 0.5 * g.h0 * (gx.get(i, j) + gx.get(i + 1, j));
                rhs[idx(i + 1, j)] += w0 * d;
                rhs[idx(i, j)] -= w0 * d;
                diag[idx(i, j)] += w0;
                diag[idx(i + 1, j)] += w0;
            }
            if j < cells_y {
                let j1 = (j + 1) % n1;
                let mut d = 0.5 * g.h1 * (gy.get(i, j) + gy.get(i, j1));
                if j1 == 0 {
                    d -= branch_jump;
                }
                rhs[idx(i, j1)] += w1 * d;
                rhs[idx(i, j)] -= w1 * d;
                diag[idx(i, j)] += w1;
                diag[idx(i, j1)] += w1;
            }
        }
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        for i in 0..n0 {
            for j in 0..n1 {
                let k = idx(i, j);
                let mut acc = 0.0;
                if i > 0 {
                    acc += w0 * (x[k] - x[idx(i - 1, j)]);
                }
                if i + 1 < n0 {
                    acc += w0 * (x[k] - x[idx(i + 1, j)]);
                }
                if g.periodic || j > 0 {
                    acc += w1 * (x[k] - x[idx(i, (j + n1 - 1) % n1)]);
                }
                if g.periodic || j + 1 < n1 {
                    acc += w1 * (x[k] - x[idx(i, (j + 1) % n1)]);
                }
                out[k] = acc;
            }
        }
    };
    let project = |x: &mut [f64]| {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter_mut().for_each(|v| *v -= m);
    };
    let mut x = v.into_vec();
    project(&mut x);
    let out = pcg(apply, &diag, &rhs, &mut x, 1e-12, 20 * n0 * n1, project);
    if !out.converged && !(out.relative_residual < 1e-8) {
        return Err(Error::Stream(format!(
            "curl cleanup stalled at relative residual {:.3e}",
            out.relative_residual
        )));
    }
    let base = x[0];
    x.iter_mut().for_each(|v| *v -= base);
    Ok(StreamSolution {
        chart: Arc::clone(chart),
        v: ScalarField::from_vec(n0, n1, x)?,
        branch_jump,
        cleanup_iterations: out.iterations,
    })
}

pub fn stream_function(sol: &Solution) -> Result<StreamSolution> {
    stream_function_field(&sol.chart, &sol.model, &sol.u, 0.0)
}

/// Weak residual of v under the conjugate model b.
pub fn conjugate_residual(stream: &StreamSolution, b: &DiffusivityModel) -> f64 {
    weak_residual(&stream.chart, b, &stream.v, stream.branch_jump)
}

/// |grad v|_g for the multivalued v.
pub fn stream_grad_norm(stream: &StreamSolution) -> ScalarField {
    let chart = &stream.chart;
    let vx = chart.d0(&stream.v);
    let vy = d1_jump(chart, &stream.v, stream.branch_jump);
    vx.zip_map(&vy, f64::hypot).zip_map(chart.mu(), |n, m| n / m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    /// max relative gap between |grad v|_g and a(|grad u|_g) |grad u|_g off the boundary rows
    pub max_relative_gap: f64,
    pub min_grad_u: f64,
    pub min_grad_v: f64,
}

pub fn duality_report(sol: &Solution, stream: &StreamSolution) -> Result<DualityReport> {
    let gu = crate::chart::grad_norm_g(&sol.chart, &sol.u)?;
    let gv = stream_grad_norm(stream);
    let (n0, n1) = gu.shape();
    let mut gap = 0.0f64;
    let (mut mu_, mut mv) = (f64::INFINITY, f64::INFINITY);
    for i in 1..n0 - 1 {
        for j in 0..n1 {
            let s = gu.get(i, j);
            let want = sol.model.flux(s);
            gap = gap.max((gv.get(i, j) - want).abs() / want.abs().max(1e-300));
            mu_ = mu_.min(s);
            mv = mv.min(gv.get(i, j));
        }
    }
    Ok(DualityReport {
        max_relative_gap: gap,
        min_grad_u: mu_,
        min_grad_v: mv,
    })
}
