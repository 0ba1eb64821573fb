//! Jacobian-free Newton-Krylov on the finite-volume equations.
//!
//! Picard continuation brings the iterate close; Newton steps are then solved
//! by right-preconditioned GMRES with finite-difference Jacobian products,
//! preconditioned by the frozen-coefficient operator.

use std::sync::Arc;

use super::{finish_solution, pcg, picard, Faces, Solution, SolverOptions, Stencil};
use crate::chart::AnnulusChart;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::model::DiffusivityModel;

const RESTART: usize = 40;
const MAX_CYCLES: usize = 5;
const NEWTON_STEPS: usize = 40;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl Stencil<'_> {
    /// Flux imbalance at every interior node.
    fn residual_vector(&self, u: &ScalarField, f: &Faces) -> Vec<f64> {
        let g = self.chart.grid();
        let (n0, n1) = (g.n0, g.n1);
        let mut r = vec![0.0; (n0 - 2) * n1];
        for i in 1..n0 - 1 {
            for j in 0..n1 {
                let (jp, jm) = ((j + 1) % n1, (j + n1 - 1) % n1);
                let c = u.get(i, j);
                r[(i - 1) * n1 + j] = self.ws * f.cs[i * n1 + j] * (u.get(i + 1, j) - c)
                    + self.ws * f.cs[(i - 1) * n1 + j] * (u.get(i - 1, j) - c)
                    + self.wt * f.ct[i * n1 + j] * (u.get(i, jp) - c)
                    + self.wt * f.ct[i * n1 + jm] * (u.get(i, jm) - c);
            }
        }
        r
    }

    fn eval(&self, u: &ScalarField, eps: f64) -> Result<Vec<f64>> {
        let f = self.faces(u, eps)?;
        Ok(self.residual_vector(u, &f))
    }
}

fn shifted(u: &ScalarField, v: &[f64], scale: f64, n1: usize) -> ScalarField {
    let mut w = u.clone();
    let interior = &mut w.data_mut()[n1..n1 + v.len()];
    for (a, b) in interior.iter_mut().zip(v) {
        *a += scale * b;
    }
    w
}

/// Right-preconditioned restarted GMRES for J x = b.
fn gmres<J, M>(jac: J, precond: M, b: &[f64], rtol: f64) -> Result<Vec<f64>>
where
    J: Fn(&[f64]) -> Result<Vec<f64>>,
    M: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    for _ in 0..MAX_CYCLES {
        let jx = jac(&x)?;
        let r: Vec<f64> = b.iter().zip(&jx).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        if beta <= rtol * bnorm {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; RESTART]; RESTART + 1];
        let (mut cs, mut sn) = (vec![0.0; RESTART], vec![0.0; RESTART]);
        let mut e = vec![0.0; RESTART + 1];
        e[0] = beta;
        let mut zs: Vec<Vec<f64>> = Vec::new();
        let mut k_used = 0;
        for k in 0..RESTART {
            let z = precond(&basis[k]);
            let mut w = jac(&z)?;
            zs.push(z);
            for (i, q) in basis.iter().enumerate() {
                let hik: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                h[i][k] = hik;
                for (wv, qv) in w.iter_mut().zip(q) {
                    *wv -= hik * qv;
                }
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            e[k + 1] = -sn[k] * e[k];
            e[k] *= cs[k];
            k_used = k + 1;
            if e[k + 1].abs() <= rtol * bnorm || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (e[i] - s) / h[i][i];
        }
        for (yi, z) in y.iter().zip(&zs) {
            for (xv, zv) in x.iter_mut().zip(z) {
                *xv += yi * zv;
            }
        }
    }
    Ok(x)
}

pub(super) fn solve_newton(
    chart: Arc<AnnulusChart>,
    model: &DiffusivityModel,
    t1: f64,
    t2: f64,
    opts: &SolverOptions,
) -> Result<Solution> {
    let g = *chart.grid();
    let n1 = g.n1;
    let smax = g.x_max();
    let mut u = chart.field(|x, _| t1 + (t2 - t1) * x / smax);
    let (mut iters, mut cg, eps, _, _) = picard(&chart, model, &mut u, t1, t2, opts, 1e-4, false)?;
    let st = Stencil::new(&chart, model);
    let mut update = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for _ in 0..NEWTON_STEPS {
        let faces = st.faces(&u, eps)?;
        residual = st.residual(&u, &faces);
        if residual < opts.tol && update < opts.tol {
            return finish_solution(chart, model, u, t1, t2, opts, iters, cg, eps, update, residual);
        }
        iters += 1;
        let r0 = st.residual_vector(&u, &faces);
        let rnorm = norm(&r0);
        let umax = u.max_abs().max(1.0);
        let diag = st.frozen_diag(&faces);
        let cg_count = std::cell::Cell::new(0);
        let jac = |v: &[f64]| -> Result<Vec<f64>> {
            let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if vmax == 0.0 {
                return Ok(vec![0.0; v.len()]);
            }
            let delta = 1e-7 * umax / vmax;
            let rp = st.eval(&shifted(&u, v, delta, n1), eps)?;
            Ok(rp.iter().zip(&r0).map(|(a, b)| (a - b) / delta).collect())
        };
        let precond = |v: &[f64]| -> Vec<f64> {
            let mut z = vec![0.0; v.len()];
            let out = pcg(|x, y| st.frozen_apply(&faces, &diag, x, y), &diag, v, &mut z, 1e-8, 20 * v.len(), |_| {});
            cg_count.set(cg_count.get() + out.iterations);
            z.iter_mut().for_each(|x| *x = -*x);
            z
        };
        let rhs: Vec<f64> = r0.iter().map(|v| -v).collect();
        let du = gmres(jac, precond, &rhs, 1e-6)?;
        cg += cg_count.get();
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let trial = shifted(&u, &du, lambda, n1);
            if let Ok(r) = st.eval(&trial, eps) {
                if norm(&r) < (1.0 - 1e-4 * lambda) * rnorm || rnorm == 0.0 {
                    update = lambda * du.iter().fold(0.0f64, |m, x| m.max(x.abs())) / (t2 - t1);
                    u = trial;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            if residual < opts.tol {
                return finish_solution(chart, model, u, t1, t2, opts, iters, cg, eps, update, residual);
            }
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: iters,
        update,
        residual,
        epsilon: eps,
    })
}
