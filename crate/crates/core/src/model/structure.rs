use serde::{Deserialize, Serialize};

use super::DiffusivityModel;
use crate::error::{Error, Result};

const HOLDS_TOL: f64 = 1e-12;
const BOUND_JUMP: f64 = 0.05;

/// One-sided boundedness of log a on (0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum A2Class {
    #[serde(rename = "upper-bounded")]
    UpperBounded,
    #[serde(rename = "lower-bounded")]
    LowerBounded,
    #[serde(rename = "both")]
    Both,
    #[serde(rename = "neither")]
    Neither,
}

impl A2Class {
    pub fn holds(self) -> bool {
        self != A2Class::Neither
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub holds_a: bool,
    pub holds_aprime: bool,
    pub a2_class: A2Class,
    /// alpha - tol <= alpha_hat and beta_hat <= beta + tol
    pub within_declared: bool,
    pub samples: usize,
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

pub fn structure_report(model: &DiffusivityModel, s_grid: &[f64]) -> Result<StructureReport> {
    if s_grid.is_empty() {
        return Err(Error::Domain("empty s grid".into()));
    }
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) || !(s_grid[0] > 0.0) {
        return Err(Error::Domain("s grid must be positive and strictly increasing".into()));
    }
    if s_grid[0] > 1e-6 * (1.0 + 1e-9) || *s_grid.last().unwrap() < 1e3 * (1.0 - 1e-9) {
        return Err(Error::Domain("s grid must span at least [1e-6, 1e3]".into()));
    }
    let cap = model.structure_cap();
    let sup = model.domain_sup();
    let mut pts: Vec<f64> = s_grid.iter().copied().filter(|&s| s <= cap && s < sup).collect();
    if cap.is_finite() && cap < sup && pts.last().map_or(true, |&l| l < cap) {
        pts.push(cap);
    }

    let mut alpha_hat = f64::INFINITY;
    let mut beta_hat = f64::NEG_INFINITY;
    for &s in &pts {
        model.eval_checked(s)?;
        let e = model.one_plus_d(s);
        if !e.is_finite() {
            return Err(Error::Evaluation { s, value: e });
        }
        alpha_hat = alpha_hat.min(e);
        beta_hat = beta_hat.max(e);
    }

    let holds_aprime = aprime_holds(model, s_grid)?;
    let a2_class = a2_class(model, s_grid)?;
    let tol = 1e-9;
    Ok(StructureReport {
        alpha_hat,
        beta_hat,
        holds_a: alpha_hat > HOLDS_TOL,
        holds_aprime,
        a2_class,
        within_declared: alpha_hat >= model.alpha() - tol && beta_hat <= model.beta() + tol,
        samples: pts.len(),
    })
}

// s a(s) -> 0: power-law decay over the lowest sampled decade, or already negligible.
fn aprime_holds(model: &DiffusivityModel, s_grid: &[f64]) -> Result<bool> {
    let s0 = s_grid[0];
    let s1 = s_grid
        .iter()
        .copied()
        .find(|&s| s >= 10.0 * s0)
        .unwrap_or(*s_grid.last().unwrap());
    let g0 = model.eval_checked(s0)? * s0;
    let g1 = model.eval_checked(s1)? * s1;
    if g0 < 1e-8 {
        return Ok(true);
    }
    let slope = (g1.ln() - g0.ln()) / (s1.ln() - s0.ln());
    Ok(slope > 1e-3)
}

// Compare the extremes of log a over the full sampled (0,1] range with those
// over the first eighth of the range in -ln s.
fn a2_class(model: &DiffusivityModel, s_grid: &[f64]) -> Result<A2Class> {
    let t_max = -s_grid[0].ln();
    let t_cut = t_max / 8.0;
    let sup = model.domain_sup();
    let (mut hi_all, mut lo_all) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut hi_near, mut lo_near) = (f64::NEG_INFINITY, f64::INFINITY);
    for &s in s_grid.iter().filter(|&&s| s <= 1.0 && s < sup) {
        let la = model.eval_checked(s)?.ln();
        hi_all = hi_all.max(la);
        lo_all = lo_all.min(la);
        if -s.ln() <= t_cut {
            hi_near = hi_near.max(la);
            lo_near = lo_near.min(la);
        }
    }
    if !hi_near.is_finite() {
        return Err(Error::Domain("s grid has no points near 1".into()));
    }
    let upper = hi_all <= hi_near + BOUND_JUMP;
    let lower = lo_all >= lo_near - BOUND_JUMP;
    Ok(match (upper, lower) {
        (true, true) => A2Class::Both,
        (true, false) => A2Class::UpperBounded,
        (false, true) => A2Class::LowerBounded,
        (false, false) => A2Class::Neither,
    })
}
