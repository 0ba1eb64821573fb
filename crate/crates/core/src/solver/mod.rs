//! Dirichlet problem for div(a(|grad u|_g) grad u) = 0 on a chart.
//!
//! Finite volumes on the five-point stencil: the flux through each cell face
//! uses a(s) at the face, with s = mu^{-1} |Du| from the two neighbouring nodes
//! across the face and the four diagonal ones along it. Coefficients are frozen
//! per iteration (Picard), the linear system is solved by Jacobi-PCG and the
//! update damped.

mod linear;
mod newton;
pub mod radial;
mod residual;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chart::AnnulusChart;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::model::DiffusivityModel;

pub use linear::{pcg, CgOutcome};
pub use radial::{radial_oracle, RadialSolution};
pub use residual::{pde_residual, weak_residual};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Picard,
    Newton,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub epsilon0: f64,
    /// final regularization is epsilon0 * epsilon_ratio
    pub epsilon_ratio: f64,
    pub damping: f64,
    pub scheme: Scheme,
    pub cg_rtol: f64,
    /// floor on interior |grad u|_g; defaults to 1e-6 (t2 - t1) / ln R
    pub gradient_floor: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 3000,
            epsilon0: 1e-3,
            epsilon_ratio: 1e-2,
            damping: 0.7,
            scheme: Scheme::Picard,
            cg_rtol: 1e-10,
            gradient_floor: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub cg_iterations: usize,
    pub residual: f64,
    pub update: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub chart: Arc<AnnulusChart>,
    pub model: DiffusivityModel,
    pub u: ScalarField,
    pub t1: f64,
    pub t2: f64,
    pub epsilon: f64,
    pub iterations: usize,
    /// normalized finite-volume residual at the final iterate
    pub residual: f64,
    pub diagnostics: SolverDiagnostics,
    pub gradient_floor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremumReport {
    pub min_u: f64,
    pub max_u: f64,
    pub min_grad_interior: f64,
    pub min_grad_boundary: f64,
    pub max_grad: f64,
    /// chart coordinates (sigma, theta) of the smallest interior gradient
    pub argmin_grad: (f64, f64),
    pub floor: f64,
    pub above_floor: bool,
}

pub(crate) struct Stencil<'a> {
    chart: &'a AnnulusChart,
    model: &'a DiffusivityModel,
    mu_s: Vec<f64>,
    mu_t: Vec<f64>,
    ws: f64,
    wt: f64,
}

pub(crate) struct Faces {
    cs: Vec<f64>,
    ct: Vec<f64>,
}

impl<'a> Stencil<'a> {
    pub(crate) fn new(chart: &'a AnnulusChart, model: &'a DiffusivityModel) -> Self {
        let g = chart.grid();
        let (n0, n1) = (g.n0, g.n1);
        let mut mu_s = Vec::with_capacity((n0 - 1) * n1);
        for i in 0..n0 - 1 {
            for j in 0..n1 {
                mu_s.push(chart.mu_at(g.x(i) + 0.5 * g.h0, g.y(j)));
            }
        }
        let mut mu_t = Vec::with_capacity(n0 * n1);
        for i in 0..n0 {
            for j in 0..n1 {
                mu_t.push(chart.mu_at(g.x(i), g.y(j) + 0.5 * g.h1));
            }
        }
        Stencil {
            chart,
            model,
            mu_s,
            mu_t,
            ws: g.h1 / g.h0,
            wt: g.h0 / g.h1,
        }
    }

    fn coefficient(&self, s: f64, eps: f64) -> Result<f64> {
        if s >= self.model.domain_sup() {
            return Err(Error::Structure(format!(
                "|grad u|_g = {s} left the ellipticity domain of {}",
                self.model.name()
            )));
        }
        let a = self.model.a((s * s + eps * eps).sqrt());
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Structure(format!("a({s}) = {a} during iteration")));
        }
        Ok(a)
    }

    /// Range of 1 + D over the face gradients of `u`.
    fn structure_range(&self, u: &ScalarField) -> (f64, f64) {
        let g = self.chart.grid();
        let (n0, n1) = (g.n0, g.n1);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n0 - 1 {
            for j in 0..n1 {
                let (jp, jm) = ((j + 1) % n1, (j + n1 - 1) % n1);
                let gs = (u.get(i + 1, j) - u.get(i, j)) / g.h0;
                let gt = (u.get(i, jp) - u.get(i, jm) + u.get(i + 1, jp) - u.get(i + 1, jm)) / (4.0 * g.h1);
                let s = gs.hypot(gt) / self.mu_s[i * n1 + j];
                if s > 0.0 {
                    let e = self.model.one_plus_d(s);
                    if e.is_finite() {
                        lo = lo.min(e);
                        hi = hi.max(e);
                    }
                }
            }
        }
        (lo, hi)
    }

    pub(crate) fn faces(&self, u: &ScalarField, eps: f64) -> Result<Faces> {
        let g = self.chart.grid();
        let (n0, n1) = (g.n0, g.n1);
        let mut cs = vec![0.0; (n0 - 1) * n1];
        for i in 0..n0 - 1 {
            for j in 0..n1 {
                let (jp, jm) = ((j + 1) % n1, (j + n1 - 1) % n1);
                let gs = (u.get(i + 1, j) - u.get(i, j)) / g.h0;
                let gt = (u.get(i, jp) - u.get(i, jm) + u.get(i + 1, jp) - u.get(i + 1, jm)) / (4.0 * g.h1);
                let s = gs.hypot(gt) / self.mu_s[i * n1 + j];
                cs[i * n1 + j] = self.coefficient(s, eps)?;
            }
        }
        let mut ct = vec![0.0; n0 * n1];
        for i in 1..n0 - 1 {
            for j in 0..n1 {
                let jp = (j + 1) % n1;
                let gt = (u.get(i, jp) - u.get(i, j)) / g.h1;
                let gs = (u.get(i + 1, j) - u.get(i - 1, j) + u.get(i + 1, jp) - u.get(i - 1, jp)) / (4.0 * g.h0);
                let s = gs.hypot(gt) / self.mu_t[i * n1 + j];
                ct[i * n1 + j] = self.coefficient(s, eps)?;
            }
        }
        Ok(Faces { cs, ct })
    }

    /// Max nodal flux imbalance over the max total flux magnitude.
    pub(crate) fn residual(&self, u: &ScalarField, f: &Faces) -> f64 {
        let g = self.chart.grid();
        let (n0, n1) = (g.n0, g.n1);
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 1..n0 - 1 {
            for j in 0..n1 {
                let (jp, jm) = ((j + 1) % n1, (j + n1 - 1) % n1);
                let c = u.get(i, j);
                let terms = [
                    self.ws * f.cs[i * n1 + j] * (u.get(i + 1, j) - c),
                    self.ws * f.cs[(i - 1) * n1 + j] * (u.get(i - 1, j) - c),
                    self.wt * f.ct[i * n1 + j] * (u.get(i, jp) - c),
                    self.wt * f.ct[i * n1 + jm] * (u.get(i, jm) - c),
                ];
                worst = worst.max(terms.iter().sum::<f64>().abs());
                scale = scale.max(terms.iter().map(|t| t.abs()).sum());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub(crate) fn frozen_diag(&self, f: &Faces) -> Vec<f64> {
        let g = self.chart.grid();
        let (n0, n1) = (g.n0, g.n1);
        let mut diag = vec![0.0; (n0 - 2) * n1];
        for i in 1..n0 - 1 {
            for j in 0..n1 {
                let jm = (j + n1 - 1) % n1;
                diag[(i - 1) * n1 + j] = self.ws * (f.cs[i * n1 + j] + f.cs[(i - 1) * n1 + j])
                    + self.wt * (f.ct[i * n1 + j] + f.ct[i * n1 + jm]);
            }
        }
        diag
    }

    /// y = A x for the frozen operator on interior unknowns (Dirichlet rows removed).
    pub(crate) fn frozen_apply(&self, f: &Faces, diag: &[f64], x: &[f64], y: &mut [f64]) {
        let g = self.chart.grid();
        let (n0, n1) = (g.n0, g.n1);
        let (ws, wt) = (self.ws, self.wt);
        for i in 1..n0 - 1 {
            for j in 0..n1 {
                let k = (i - 1) * n1 + j;
                let (jp, jm) = ((j + 1) % n1, (j + n1 - 1) % n1);
                let mut acc = diag[k] * x[k];
                if i > 1 {
                    acc -= ws * f.cs[(i - 1) * n1 + j] * x[k - n1];
                }
                if i < n0 - 2 {
                    acc -= ws * f.cs[i * n1 + j] * x[k + n1];
                }
                acc -= wt * f.ct[i * n1 + j] * x[(i - 1) * n1 + jp];
                acc -= wt * f.ct[i * n1 + jm] * x[(i - 1) * n1 + jm];
                y[k] = acc;
            }
        }
    }

    /// Solve the frozen-coefficient system, warm-started from `u`.
    pub(crate) fn linear_solve(&self, u: &ScalarField, f: &Faces, t1: f64, t2: f64, rtol: f64) -> (ScalarField, CgOutcome) {
        let g = self.chart.grid();
        let (n0, n1) = (g.n0, g.n1);
        let m = (n0 - 2) * n1;
        let diag = self.frozen_diag(f);
        let mut b = vec![0.0; m];
        for j in 0..n1 {
            b[j] += self.ws * f.cs[j] * t1;
            b[(n0 - 3) * n1 + j] += self.ws * f.cs[(n0 - 2) * n1 + j] * t2;
        }
        let mut x: Vec<f64> = u.data()[n1..(n0 - 1) * n1].to_vec();
        let out = pcg(|x, y| self.frozen_apply(f, &diag, x, y), &diag, &b, &mut x, rtol, 20 * m, |_| {});
        let mut next = u.clone();
        next.data_mut()[n1..(n0 - 1) * n1].copy_from_slice(&x);
        (next, out)
    }
}

fn default_floor(chart: &AnnulusChart, t1: f64, t2: f64) -> f64 {
    1e-6 * (t2 - t1) / chart.r_outer().ln()
}

/// Damped Picard iteration with epsilon continuation.
pub fn solve_dirichlet(
    chart: Arc<AnnulusChart>,
    model: &DiffusivityModel,
    t1: f64,
    t2: f64,
    opts: &SolverOptions,
) -> Result<Solution> {
    if !(t1 < t2) {
        return Err(Error::Domain(format!("need t1 < t2, got {t1}, {t2}")));
    }
    if !chart.grid().periodic {
        return Err(Error::Domain("the Dirichlet solver needs a periodic annulus chart".into()));
    }
    if opts.scheme == Scheme::Newton {
        return newton::solve_newton(chart, model, t1, t2, opts);
    }
    let g = *chart.grid();
    let smax = g.x_max();
    let mut u = chart.field(|x, _| t1 + (t2 - t1) * x / smax);
    let (iters, cg, eps, update, residual) = picard(&chart, model, &mut u, t1, t2, opts, opts.tol, true)?;
    finish_solution(chart, model, u, t1, t2, opts, iters, cg, eps, update, residual)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn finish_solution(
    chart: Arc<AnnulusChart>,
    model: &DiffusivityModel,
    u: ScalarField,
    t1: f64,
    t2: f64,
    opts: &SolverOptions,
    iterations: usize,
    cg_iterations: usize,
    epsilon: f64,
    update: f64,
    residual: f64,
) -> Result<Solution> {
    let floor = opts.gradient_floor.unwrap_or_else(|| default_floor(&chart, t1, t2));
    Ok(Solution {
        model: model.clone(),
        u,
        t1,
        t2,
        epsilon,
        iterations,
        residual,
        diagnostics: SolverDiagnostics {
            iterations,
            cg_iterations,
            residual,
            update,
            epsilon,
        },
        gradient_floor: floor,
        chart,
    })
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn picard(
    chart: &AnnulusChart,
    model: &DiffusivityModel,
    u: &mut ScalarField,
    t1: f64,
    t2: f64,
    opts: &SolverOptions,
    tol: f64,
    require_residual: bool,
) -> Result<(usize, usize, f64, f64, f64)> {
    let st = Stencil::new(chart, model);
    let eps_final = opts.epsilon0 * opts.epsilon_ratio;
    let mut eps = opts.epsilon0;
    let mut stage = 0;
    let mut cg_total = 0;
    let mut update = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let span = t2 - t1;
    for it in 1..=opts.max_iter {
        let faces = st.faces(u, eps)?;
        let (target, out) = st.linear_solve(u, &faces, t1, t2, opts.cg_rtol);
        cg_total += out.iterations;
        let (lo, hi) = st.structure_range(u);
        let omega = if lo.is_finite() && hi > 0.0 {
            opts.damping.min(2.0 / (lo.max(0.0) + hi))
        } else {
            opts.damping
        };
        update = 0.0;
        for (v, w) in u.data_mut().iter_mut().zip(target.data()) {
            let d = omega * (*w - *v);
            update = update.max(d.abs());
            *v += d;
        }
        update /= span;
        stage += 1;
        if eps > eps_final {
            if stage >= 20 || update < tol {
                eps = (0.5 * eps).max(eps_final);
                stage = 0;
            }
            continue;
        }
        if update < tol {
            if !require_residual {
                return Ok((it, cg_total, eps, update, f64::NAN));
            }
            residual = st.residual(u, &st.faces(u, eps)?);
            if residual < tol {
                return Ok((it, cg_total, eps, update, residual));
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        update,
        residual,
        epsilon: eps,
    })
}

impl Solution {
    /// Wrap an arbitrary field (e.g. an injected oracle) as a solution.
    pub fn from_field(chart: Arc<AnnulusChart>, model: &DiffusivityModel, u: ScalarField, t1: f64, t2: f64) -> Result<Self> {
        u.check_shape(chart.shape())?;
        let floor = default_floor(&chart, t1, t2);
        let st = Stencil::new(&chart, model);
        let residual = st.faces(&u, 0.0).map(|f| st.residual(&u, &f)).unwrap_or(f64::NAN);
        Ok(Solution {
            model: model.clone(),
            u,
            t1,
            t2,
            epsilon: 0.0,
            iterations: 0,
            residual,
            diagnostics: SolverDiagnostics {
                iterations: 0,
                cg_iterations: 0,
                residual,
                update: 0.0,
                epsilon: 0.0,
            },
            gradient_floor: floor,
            chart,
        })
    }
}

pub fn extremum_report(sol: &Solution) -> ExtremumReport {
    let chart = &sol.chart;
    let g = chart.grid();
    let grad = crate::chart::grad_norm_g(chart, &sol.u).expect("solution shape matches chart");
    let mut min_int = f64::INFINITY;
    let mut arg = (0.0, 0.0);
    let mut min_bd = f64::INFINITY;
    for i in 0..g.n0 {
        for j in 0..g.n1 {
            let v = grad.get(i, j);
            if i == 0 || i == g.n0 - 1 {
                min_bd = min_bd.min(v);
            } else if v < min_int {
                min_int = v;
                arg = (g.x(i), g.y(j));
            }
        }
    }
    ExtremumReport {
        min_u: sol.u.min(),
        max_u: sol.u.max(),
        min_grad_interior: min_int,
        min_grad_boundary: min_bd,
        max_grad: grad.max(),
        argmin_grad: arg,
        floor: sol.gradient_floor,
        above_floor: min_int > sol.gradient_floor,
    }
}
