//! Level curves of a solution: contouring, Riemannian length, coarea
//! expressions for L' and L'', curvature integrals and length profiles.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{grad_norm_g, inner_g, riemannian_gradient, riemannian_laplacian, AnnulusChart, Topology};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::numeric::{chebyshev_lobatto, gauss_legendre, CubicSpline};
use crate::solver::Solution;

/// One connected piece of a level set, in chart coordinates.
///
/// On periodic charts y is unwrapped along the polyline, so a curve winding
/// once around the annulus ends 2*pi above where it started.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
    /// net number of turns in the periodic direction
    pub winding: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCurve {
    pub t: f64,
    /// longest first
    pub components: Vec<Polyline>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Edge {
    /// between (i, j) and (i + 1, j)
    X(usize, usize),
    /// between (i, j) and (i, j + 1)
    Y(usize, usize),
}

/// Marching squares for {u = t} on any chart.
pub fn extract_level_field(chart: &AnnulusChart, u: &ScalarField, t: f64) -> Result<LevelCurve> {
    u.check_shape(chart.shape())?;
    let g = *chart.grid();
    let (n0, n1) = (g.n0, g.n1);
    let cells_y = if g.periodic { n1 } else { n1 - 1 };
    let crossing = |e: Edge| -> [f64; 2] {
        match e {
            Edge::X(i, j) => {
                let (a, b) = (u.get(i, j), u.get(i + 1, j));
                [g.x(i) + (t - a) / (b - a) * g.h0, g.y(j)]
            }
            Edge::Y(i, j) => {
                let (a, b) = (u.get(i, j), u.get(i, (j + 1) % n1));
                [g.x(i), g.y(j) + (t - a) / (b - a) * g.h1]
            }
        }
    };
    let mut segs: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..n0 - 1 {
        for j in 0..cells_y {
            let j1 = (j + 1) % n1;
            let v = [u.get(i, j), u.get(i + 1, j), u.get(i + 1, j1), u.get(i, j1)];
            let mut code = 0;
            for (k, &val) in v.iter().enumerate() {
                if val >= t {
                    code |= 1 << k;
                }
            }
            // corners 0..3 counter-clockwise; edges: 0 bottom, 1 right, 2 top, 3 left
            let e = [Edge::X(i, j), Edge::Y(i + 1, j), Edge::X(i, j1), Edge::Y(i, j)];
            let centre_above = v.iter().sum::<f64>() * 0.25 >= t;
            let pairs: &[(usize, usize)] = match code {
                0 | 15 => &[],
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(3, 2)],
                5 => {
                    if centre_above {
                        &[(3, 2), (0, 1)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                10 => {
                    if centre_above {
                        &[(3, 0), (1, 2)]
                    } else {
                        &[(3, 2), (0, 1)]
                    }
                }
                _ => unreachable!(),
            };
            for &(a, b) in pairs {
                segs.push((e[a], e[b]));
            }
        }
    }
    if segs.is_empty() {
        return Err(Error::Level(format!("level {t} does not meet the chart")));
    }
    let mut by_edge: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segs.iter().enumerate() {
        by_edge.entry(a).or_default().push(k);
        by_edge.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segs.len()];
    let mut starts: Vec<(usize, Edge)> = Vec::new();
    for (k, &(a, b)) in segs.iter().enumerate() {
        for e in [a, b] {
            if by_edge[&e].len() == 1 {
                starts.push((k, e));
            }
        }
    }
    starts.sort_by_key(|&(k, _)| k);
    starts.extend(segs.iter().enumerate().map(|(k, &(a, _))| (k, a)));
    let period = g.y_extent();
    let mut comps = Vec::new();
    for (k0, e0) in starts {
        if used[k0] {
            continue;
        }
        let mut edges = vec![e0];
        let mut k = k0;
        let mut at = e0;
        let closed = loop {
            used[k] = true;
            let (a, b) = segs[k];
            let next = if a == at { b } else { a };
            edges.push(next);
            if next == e0 {
                break true;
            }
            match by_edge[&next].iter().find(|&&m| !used[m]) {
                Some(&m) => {
                    k = m;
                    at = next;
                }
                None => break false,
            }
        };
        let mut points: Vec<[f64; 2]> = Vec::with_capacity(edges.len());
        let mut turns = 0.0;
        for e in edges {
            let mut p = crossing(e);
            if let Some(prev) = points.last() {
                if g.periodic {
                    let dy = p[1] - prev[1];
                    let shift = (dy / period).round() * period;
                    p[1] -= shift;
                    turns += p[1] - prev[1];
                }
            }
            points.push(p);
        }
        let winding = if g.periodic { (turns / period).round() as i32 } else { 0 };
        comps.push(Polyline { points, closed, winding });
    }
    let mut keyed: Vec<(f64, Polyline)> = comps.into_iter().map(|c| (polyline_length(chart, &c), c)).collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(LevelCurve {
        t,
        components: keyed.into_iter().map(|(_, c)| c).collect(),
    })
}

/// Level set of a solution at a value strictly between its boundary data.
pub fn extract_level(sol: &Solution, t: f64) -> Result<LevelCurve> {
    if !(t > sol.t1 && t < sol.t2) {
        return Err(Error::Level(format!("level {t} not inside ({}, {})", sol.t1, sol.t2)));
    }
    extract_level_field(&sol.chart, &sol.u, t)
}

fn polyline_length(chart: &AnnulusChart, c: &Polyline) -> f64 {
    line_integral_polyline(chart, c, |_, _| 1.0)
}

fn line_integral_polyline(chart: &AnnulusChart, c: &Polyline, f: impl Fn(f64, f64) -> f64) -> f64 {
    c.points
        .windows(2)
        .map(|w| {
            let (x, y) = (0.5 * (w[0][0] + w[1][0]), 0.5 * (w[0][1] + w[1][1]));
            let ds = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            f(x, y) * chart.mu_at(x, y) * ds
        })
        .sum()
}

/// Riemannian length: chart length of each segment times mu at its midpoint.
pub fn curve_length_g(chart: &AnnulusChart, curve: &LevelCurve) -> f64 {
    curve.components.iter().map(|c| polyline_length(chart, c)).sum()
}

/// Midpoint-rule line integral of f dH^1 over the curve.
pub fn line_integral(chart: &AnnulusChart, curve: &LevelCurve, f: impl Fn(f64, f64) -> f64) -> f64 {
    curve.components.iter().map(|c| line_integral_polyline(chart, c, &f)).sum()
}

/// Grid fields entering the coarea integrands.
#[derive(Clone, Debug)]
pub struct LevelFields {
    /// |grad u|_g
    pub grad: ScalarField,
    /// Laplace-Beltrami of u
    pub lap: ScalarField,
    /// <grad u, grad |grad u|>_g
    pub p: ScalarField,
    /// |grad |grad u||_g^2
    pub q: ScalarField,
}

impl LevelFields {
    pub fn new(chart: &AnnulusChart, u: &ScalarField) -> Result<Self> {
        let grad = grad_norm_g(chart, u)?;
        let lap = riemannian_laplacian(chart, u)?;
        let gu = riemannian_gradient(chart, u)?;
        let gg = riemannian_gradient(chart, &grad)?;
        Ok(LevelFields {
            p: inner_g(chart, &gu, &gg),
            q: inner_g(chart, &gg, &gg),
            grad,
            lap,
        })
    }
}

/// Both forms of L', L'' and both curvature conventions at one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoareaValues {
    pub t: f64,
    pub length: f64,
    pub l1: f64,
    pub l2: f64,
    /// L' and L'' with the equation substituted for the Laplacian
    pub l1_model: f64,
    pub l2_model: f64,
    /// integral of k = -div(grad u / |grad u|)
    pub k_int: f64,
    /// integral of the geodesic curvature oriented so flat circles give 2 pi
    pub k_int_gb: f64,
    pub min_grad: f64,
}

fn coarea_on(sol: &Solution, fields: &LevelFields, t: f64) -> Result<CoareaValues> {
    let chart = &*sol.chart;
    let curve = extract_level(sol, t)?;
    let mut min_grad = f64::INFINITY;
    let mut acc = [0.0f64; 6];
    for c in &curve.components {
        for w in c.points.windows(2) {
            let (x, y) = (0.5 * (w[0][0] + w[1][0]), 0.5 * (w[0][1] + w[1][1]));
            let ds = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]) * chart.mu_at(x, y);
            let gn = chart.sample(&fields.grad, x, y);
            min_grad = min_grad.min(gn);
            let lap = chart.sample(&fields.lap, x, y);
            let p = chart.sample(&fields.p, x, y);
            let q = chart.sample(&fields.q, x, y);
            let k = chart.sample(chart.curvature(), x, y);
            let d = sol.model.d(gn);
            let div_n = lap / gn - p / (gn * gn);
            let g2 = gn * gn;
            let g4 = g2 * g2;
            acc[0] += ds;
            acc[1] += div_n / gn * ds;
            acc[2] += (q / g4 - lap * p / (g4 * gn) - k / g2) * ds;
            acc[3] += -p / (g2 * gn) * (1.0 + d) * ds;
            acc[4] += ((q + d * p * p / g2) / g4 - k / g2) * ds;
            acc[5] += div_n * ds;
        }
    }
    if !(min_grad >= sol.gradient_floor) {
        return Err(Error::CriticalProximity {
            value: min_grad,
            floor: sol.gradient_floor,
        });
    }
    Ok(CoareaValues {
        t,
        length: acc[0],
        l1: acc[1],
        l2: acc[2],
        l1_model: acc[3],
        l2_model: acc[4],
        k_int: -acc[5],
        k_int_gb: acc[5],
        min_grad,
    })
}

pub fn coarea_values(sol: &Solution, t: f64) -> Result<CoareaValues> {
    let fields = LevelFields::new(&sol.chart, &sol.u)?;
    coarea_on(sol, &fields, t)
}

/// L'(t) as the line integral of div(grad u/|grad u|)/|grad u|.
pub fn coarea_l_prime(sol: &Solution, t: f64) -> Result<f64> {
    Ok(coarea_values(sol, t)?.l1)
}

/// L''(t) including the curvature term.
pub fn coarea_l_second(sol: &Solution, t: f64) -> Result<f64> {
    Ok(coarea_values(sol, t)?.l2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureIntegral {
    pub literal: f64,
    pub gauss_bonnet: f64,
}

pub fn curvature_integral(sol: &Solution, t: f64) -> Result<CurvatureIntegral> {
    let v = coarea_values(sol, t)?;
    Ok(CurvatureIntegral {
        literal: v.k_int,
        gauss_bonnet: v.k_int_gb,
    })
}

/// Integral of K over the region enclosed by {u = t} on the inner side,
/// including the disk filling the hole. None off annulus_in_disk charts.
pub fn interior_curvature_integral(sol: &Solution, t: f64) -> Option<f64> {
    let chart = &*sol.chart;
    let hole = chart.hole_curvature_integral()?;
    let g = chart.grid();
    let (n0, n1) = (g.n0, g.n1);
    let km2 = chart.curvature().zip_map(chart.mu(), |k, m| k * m * m);
    const SUB: usize = 4;
    let mut total = 0.0;
    for i in 0..n0 - 1 {
        for j in 0..n1 {
            let j1 = (j + 1) % n1;
            let uc = [sol.u.get(i, j), sol.u.get(i + 1, j), sol.u.get(i, j1), sol.u.get(i + 1, j1)];
            if uc.iter().all(|&v| v >= t) {
                continue;
            }
            let kc = [km2.get(i, j), km2.get(i + 1, j), km2.get(i, j1), km2.get(i + 1, j1)];
            let bil = |c: &[f64; 4], a: f64, b: f64| {
                c[0] * (1.0 - a) * (1.0 - b) + c[1] * a * (1.0 - b) + c[2] * (1.0 - a) * b + c[3] * a * b
            };
            let mut cell = 0.0;
            for si in 0..SUB {
                for sj in 0..SUB {
                    let a = (si as f64 + 0.5) / SUB as f64;
                    let b = (sj as f64 + 0.5) / SUB as f64;
                    if bil(&uc, a, b) < t {
                        cell += bil(&kc, a, b);
                    }
                }
            }
            total += cell / (SUB * SUB) as f64;
        }
    }
    Some(hole + total * g.h0 * g.h1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GaussBonnet {
    Checked { lhs: f64, rhs: f64, rel_error: f64 },
    NotApplicable { reason: String },
}

/// Compares the turning of {u = t} with 2 pi minus the enclosed curvature.
pub fn gauss_bonnet_check(sol: &Solution, t: f64) -> Result<GaussBonnet> {
    if sol.chart.topology() != Topology::AnnulusInDisk {
        return Ok(GaussBonnet::NotApplicable {
            reason: format!("{:?} topology: the enclosed region is not a disk", sol.chart.topology()),
        });
    }
    let lhs = coarea_values(sol, t)?.k_int_gb;
    let rhs = 2.0 * PI - interior_curvature_integral(sol, t).unwrap_or(f64::NAN);
    Ok(GaussBonnet::Checked {
        lhs,
        rhs,
        rel_error: (lhs - rhs).abs() / rhs.abs().max(2.0 * PI),
    })
}

/// Sampled map t -> (L, L', L'', curvature integrals).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub t: Vec<f64>,
    pub length: Vec<f64>,
    pub l1_fd: Vec<f64>,
    pub l2_fd: Vec<f64>,
    pub l1_coarea: Vec<f64>,
    pub l2_coarea: Vec<f64>,
    pub l1_model: Vec<f64>,
    pub l2_model: Vec<f64>,
    pub k_int: Vec<f64>,
    pub k_int_gb: Vec<f64>,
    /// NaN where the enclosed region is not a disk
    pub k_interior: Vec<f64>,
    pub min_grad: Vec<f64>,
    pub t1: f64,
    pub t2: f64,
}

pub const END_MARGIN: f64 = 0.02;

/// Samples at Chebyshev-Lobatto levels inside (t1, t2) with 2% margins.
pub fn build_profile(sol: &Solution, n_samples: usize) -> Result<Profile> {
    if n_samples < 9 {
        return Err(Error::Domain(format!("a profile needs at least 9 samples, got {n_samples}")));
    }
    let span = sol.t2 - sol.t1;
    let ts = chebyshev_lobatto(sol.t1 + END_MARGIN * span, sol.t2 - END_MARGIN * span, n_samples);
    let fields = LevelFields::new(&sol.chart, &sol.u)?;
    let vals: Vec<(CoareaValues, f64)> = ts
        .par_iter()
        .map(|&t| {
            let v = coarea_on(sol, &fields, t)?;
            let ki = interior_curvature_integral(sol, t).unwrap_or(f64::NAN);
            Ok((v, ki))
        })
        .collect::<Result<_>>()?;
    let length: Vec<f64> = vals.iter().map(|v| v.0.length).collect();
    let (l1_fd, l2_fd) = CubicSpline::new(&ts, &length)?.node_derivatives();
    let pick = |f: fn(&CoareaValues) -> f64| vals.iter().map(|v| f(&v.0)).collect::<Vec<f64>>();
    Ok(Profile {
        l1_coarea: pick(|v| v.l1),
        l2_coarea: pick(|v| v.l2),
        l1_model: pick(|v| v.l1_model),
        l2_model: pick(|v| v.l2_model),
        k_int: pick(|v| v.k_int),
        k_int_gb: pick(|v| v.k_int_gb),
        min_grad: pick(|v| v.min_grad),
        k_interior: vals.iter().map(|v| v.1).collect(),
        t: ts,
        length,
        l1_fd,
        l2_fd,
        t1: sol.t1,
        t2: sol.t2,
    })
}

pub const PROFILE_COLUMNS: [&str; 9] = ["t", "L", "L1_fd", "L1_coarea", "L2_fd", "L2_coarea", "k_int", "k_int_GB", "K_interior"];

impl Profile {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{}", PROFILE_COLUMNS.join(","))?;
        for k in 0..self.len() {
            let row = [
                self.t[k],
                self.length[k],
                self.l1_fd[k],
                self.l1_coarea[k],
                self.l2_fd[k],
                self.l2_coarea[k],
                self.k_int[k],
                self.k_int_gb[k],
                self.k_interior[k],
            ];
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    /// Worst relative gaps |coarea - fd| / |fd| for L' and L'' over samples
    /// at least `skip` away from either end.
    pub fn cross_validation(&self, skip: usize) -> (f64, f64) {
        let n = self.len();
        let mut e1 = 0.0f64;
        let mut e2 = 0.0f64;
        for k in skip..n.saturating_sub(skip) {
            let s1 = self.l1_fd[k].abs().max(1e-12 * self.length[k]);
            let s2 = self.l2_fd[k].abs().max(self.l1_fd[k].abs()).max(1e-12 * self.length[k]);
            e1 = e1.max((self.l1_coarea[k] - self.l1_fd[k]).abs() / s1);
            e2 = e2.max((self.l2_coarea[k] - self.l2_fd[k]).abs() / s2);
        }
        (e1, e2)
    }
}

/// Integral of L over (t1, t2) by Gauss-Legendre in t, against the area
/// integral of |grad u|_g; returns (lhs, rhs, relative gap).
pub fn coarea_identity(sol: &Solution, n_nodes: usize) -> Result<(f64, f64, f64)> {
    let (x, w) = gauss_legendre(n_nodes);
    let half = 0.5 * (sol.t2 - sol.t1);
    let mid = 0.5 * (sol.t2 + sol.t1);
    let lhs = x
        .par_iter()
        .zip(&w)
        .map(|(&xi, &wi)| Ok(wi * half * curve_length_g(&sol.chart, &extract_level(sol, mid + half * xi)?)))
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum::<f64>();
    let rhs = sol.chart.integrate(&grad_norm_g(&sol.chart, &sol.u)?);
    Ok((lhs, rhs, (lhs - rhs).abs() / rhs.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{build_chart, build_chart_with, MetricSpec};
    use crate::model::{builtin_model, ModelSpec};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn log_solution(n: usize) -> Solution {
        let chart = Arc::new(build_chart(2.0, n, n, MetricSpec::Flat, Topology::AnnulusInDisk).unwrap());
        let u = chart.field(|x, _| x / 2f64.ln());
        let m = builtin_model(&ModelSpec::PHarmonic { p: 2.0 }).unwrap();
        Solution::from_field(chart, &m, u, 0.0, 1.0).unwrap()
    }

    #[test]
    fn circle_at_root_two() {
        let sol = log_solution(128);
        let c = extract_level(&sol, 0.5).unwrap();
        assert_eq!(c.components.len(), 1);
        assert!(c.components[0].closed);
        assert_eq!(c.components[0].winding.abs(), 1);
        for p in &c.components[0].points {
            assert_relative_eq!(p[0], 0.5 * 2f64.ln(), epsilon = 1e-12);
        }
        let l = curve_length_g(&sol.chart, &c);
        assert_relative_eq!(l, 2.0 * PI * 2f64.sqrt(), max_relative = 5e-3);
    }

    #[test]
    fn boundary_levels_rejected() {
        let sol = log_solution(32);
        assert!(matches!(extract_level(&sol, 0.0), Err(Error::Level(_))));
        assert!(matches!(extract_level(&sol, 1.0), Err(Error::Level(_))));
    }

    #[test]
    fn cylinder_circle_is_two_pi() {
        let chart = Arc::new(build_chart(3.0, 32, 32, MetricSpec::Flat, Topology::Cylinder).unwrap());
        let u = chart.field(|x, _| x / 3f64.ln());
        let m = builtin_model(&ModelSpec::MinimalSurface { cap: None }).unwrap();
        let sol = Solution::from_field(chart, &m, u, 0.0, 1.0).unwrap();
        let l = curve_length_g(&sol.chart, &extract_level(&sol, 0.37).unwrap());
        assert_relative_eq!(l, 2.0 * PI, epsilon = 1e-12);
        assert!(matches!(gauss_bonnet_check(&sol, 0.5).unwrap(), GaussBonnet::NotApplicable { .. }));
    }

    #[test]
    fn tilted_level_in_planar_patch() {
        let chart = crate::chart::build_planar_chart((0.0, 1.0), (0.0, 1.0), 33, 33, MetricSpec::Flat).unwrap();
        let u = chart.field(|x, y| x + y);
        let c = extract_level_field(&chart, &u, 0.5).unwrap();
        assert_eq!(c.components.len(), 1);
        assert!(!c.components[0].closed);
        assert_relative_eq!(curve_length_g(&chart, &c), 0.5 * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn log_profile_derivatives() {
        let sol = log_solution(128);
        let v = coarea_values(&sol, 0.5).unwrap();
        let l = 2.0 * PI * 2f64.sqrt();
        let ln2 = 2f64.ln();
        assert_relative_eq!(v.l1, l * ln2, max_relative = 1e-2);
        assert_relative_eq!(v.l2, l * ln2 * ln2, max_relative = 1e-2);
        assert_relative_eq!(v.l1_model, v.l1, max_relative = 1e-2);
        assert_relative_eq!(v.k_int, -2.0 * PI, max_relative = 1e-3);
        assert_relative_eq!(v.k_int_gb, 2.0 * PI, max_relative = 1e-3);
    }

    #[test]
    fn coarea_identity_closed_form() {
        let sol = log_solution(128);
        let (lhs, rhs, gap) = coarea_identity(&sol, 16).unwrap();
        assert_relative_eq!(lhs, 2.0 * PI / 2f64.ln(), max_relative = 5e-3);
        assert_relative_eq!(rhs, 2.0 * PI / 2f64.ln(), max_relative = 5e-3);
        assert!(gap < 1e-2);
    }

    #[test]
    fn hyperbolic_gauss_bonnet() {
        let chart = Arc::new(build_chart(2.0, 128, 128, MetricSpec::HyperbolicDisk, Topology::AnnulusInDisk).unwrap());
        let u = chart.field(|x, _| x / 2f64.ln());
        let m = builtin_model(&ModelSpec::PHarmonic { p: 2.0 }).unwrap();
        let sol = Solution::from_field(chart, &m, u, 0.0, 1.0).unwrap();
        let t = 0.5;
        let r: f64 = 0.45 * 2f64.sqrt();
        let area = 4.0 * PI * r * r / (1.0 - r * r);
        let v = coarea_values(&sol, t).unwrap();
        assert_relative_eq!(v.k_int_gb, 2.0 * PI + area, max_relative = 1e-2);
        match gauss_bonnet_check(&sol, t).unwrap() {
            GaussBonnet::Checked { rel_error, .. } => assert!(rel_error < 1e-2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn critical_floor_enforced() {
        let mut sol = log_solution(32);
        sol.gradient_floor = 10.0;
        assert!(matches!(coarea_values(&sol, 0.5), Err(Error::CriticalProximity { .. })));
    }

    #[test]
    fn catenoid_lengths() {
        let m = builtin_model(&ModelSpec::MinimalSurface { cap: None }).unwrap();
        let t0 = 1.5f64.acosh();
        let t2 = 4.5f64.acosh() - t0;
        let chart = Arc::new(build_chart_with(3.0, 128, 128, MetricSpec::Flat, Topology::AnnulusInDisk, Some(1.5)).unwrap());
        let u = chart.field(|x, _| (1.5 * x.exp()).acosh() - t0);
        let sol = Solution::from_field(chart, &m, u, 0.0, t2).unwrap();
        let p = build_profile(&sol, 17).unwrap();
        for k in 0..p.len() {
            let exact = 2.0 * PI * (p.t[k] + t0).cosh();
            assert_relative_eq!(p.length[k], exact, max_relative = 5e-3);
            assert_relative_eq!(p.l1_coarea[k], 2.0 * PI * (p.t[k] + t0).sinh(), max_relative = 1e-2);
        }
        let (e1, e2) = p.cross_validation(1);
        assert!(e1 < 1e-2 && e2 < 3e-2, "{e1} {e2}");
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 18);
    }
}
