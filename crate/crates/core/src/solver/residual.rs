use crate::chart::AnnulusChart;
use crate::field::ScalarField;
use crate::model::DiffusivityModel;

use super::Solution;

const GAUSS: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// Weak-form residual against bilinear hat functions at interior nodes:
/// max |int a <grad u, grad phi>| over max int a |grad u| |grad phi|.
/// `jump` is added to values continued across the theta seam.
pub fn weak_residual(chart: &AnnulusChart, model: &DiffusivityModel, u: &ScalarField, jump: f64) -> f64 {
    let g = *chart.grid();
    let (n0, n1) = (g.n0, g.n1);
    let mut res = vec![0.0; n0 * n1];
    let mut energy = vec![0.0; n0 * n1];
    let cells_y = if g.periodic { n1 } else { n1 - 1 };
    let w = 0.25 * g.h0 * g.h1;
    for i in 0..n0 - 1 {
        for j in 0..cells_y {
            let j1 = (j + 1) % n1;
            let lift = if j1 == 0 { jump } else { 0.0 };
            let u00 = u.get(i, j);
            let u10 = u.get(i + 1, j);
            let u01 = u.get(i, j1) + lift;
            let u11 = u.get(i + 1, j1) + lift;
            let nodes = [(i, j), (i + 1, j), (i, j1), (i + 1, j1)];
            for &xi in &GAUSS {
                for &eta in &GAUSS {
                    let ux = ((u10 - u00) * (1.0 - eta) + (u11 - u01) * eta) / g.h0;
                    let uy = ((u01 - u00) * (1.0 - xi) + (u11 - u10) * xi) / g.h1;
                    let mu = chart.mu_at(g.x(i) + xi * g.h0, g.y(j) + eta * g.h1);
                    let gn = ux.hypot(uy);
                    let s = gn / mu;
                    let a = model.a((s * s + 1e-24).sqrt());
                    let grads = [
                        (-(1.0 - eta) / g.h0, -(1.0 - xi) / g.h1),
                        ((1.0 - eta) / g.h0, -xi / g.h1),
                        (-eta / g.h0, (1.0 - xi) / g.h1),
                        (eta / g.h0, xi / g.h1),
                    ];
                    for (k, &(px, py)) in grads.iter().enumerate() {
                        let idx = nodes[k].0 * n1 + nodes[k].1;
                        res[idx] += w * a * (ux * px + uy * py);
                        energy[idx] += w * a * gn * px.hypot(py);
                    }
                }
            }
        }
    }
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 1..n0 - 1 {
        let js = if g.periodic { 0..n1 } else { 1..n1 - 1 };
        for j in js {
            worst = worst.max(res[i * n1 + j].abs());
            scale = scale.max(energy[i * n1 + j]);
        }
    }
    if scale == 0.0 || !worst.is_finite() {
        if worst == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        worst / scale
    }
}

pub fn pde_residual(sol: &Solution) -> f64 {
    weak_residual(&sol.chart, &sol.model, &sol.u, 0.0)
}
