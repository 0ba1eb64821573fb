//! Pass / fail / not-applicable evaluation of the convexity and
//! isoperimetric inequalities on a length profile.
//!
//! Every inequality is checked only when all of its hypotheses hold. Margins
//! are normalized so one tolerance works across scenarios; a verdict fails
//! only when its hypotheses hold and the margin is below -tol.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::chart::{grad_norm_g, Topology};
use crate::error::{Error, Result};
use crate::level::Profile;
use crate::model::log_grid;
use crate::solver::Solution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    /// smallest normalized slack over the samples; None when not evaluated
    pub margin: Option<f64>,
    /// level where the margin is attained
    pub worst_t: Option<f64>,
    pub hypotheses: BTreeMap<String, bool>,
    pub note: Option<String>,
}

impl Verdict {
    fn gated(name: &str, hypotheses: BTreeMap<String, bool>, note: Option<String>) -> Option<Self> {
        if hypotheses.values().all(|&h| h) {
            return None;
        }
        let failed: Vec<&str> = hypotheses.iter().filter(|(_, &v)| !v).map(|(k, _)| k.as_str()).collect();
        Some(Verdict {
            name: name.into(),
            status: Status::NotApplicable,
            margin: None,
            worst_t: None,
            note: Some(match note {
                Some(n) => format!("unmet: {}; {n}", failed.join(", ")),
                None => format!("unmet: {}", failed.join(", ")),
            }),
            hypotheses,
        })
    }

    fn judged(name: &str, hypotheses: BTreeMap<String, bool>, margins: &[(f64, f64)], tol: f64, note: Option<String>) -> Self {
        let (worst_t, margin) = margins
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((f64::NAN, f64::NAN));
        let status = if margin >= -tol { Status::Pass } else { Status::Fail };
        Verdict {
            name: name.into(),
            status,
            margin: Some(margin),
            worst_t: Some(worst_t),
            hypotheses,
            note,
        }
    }
}

/// Scenario facts the hypothesis gates read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictContext {
    pub model: String,
    pub alpha: f64,
    pub beta: f64,
    pub p: Option<f64>,
    pub maximal_lorentz: bool,
    pub topology: Topology,
    /// K <= 0 on the annulus
    pub curvature_nonpositive: bool,
    /// K <= 0 on the annulus and on the disk filling its hole
    pub curvature_nonpositive_filled: bool,
    pub min_grad: f64,
    pub max_grad: f64,
    /// 0 <= 1 + D(s) <= 1/(1 + s^2) on the realized gradient range
    pub minimal_growth: bool,
}

const K_TOL: f64 = 1e-8;

impl VerdictContext {
    pub fn from_solution(sol: &Solution) -> Result<Self> {
        let chart = &sol.chart;
        let g = chart.grid();
        let analytic = chart.metric().is_analytic();
        let mut kmax = f64::NEG_INFINITY;
        for i in 0..g.n0 {
            for j in 0..g.n1 {
                let k = if analytic {
                    chart.curvature_exact_at(g.x(i), g.y(j)).unwrap_or(chart.curvature().get(i, j))
                } else {
                    chart.curvature().get(i, j)
                };
                kmax = kmax.max(k);
            }
        }
        let nonpos = kmax <= K_TOL;
        let filled = nonpos && chart.hole_curvature_max().is_some_and(|k| k <= K_TOL);
        let grad = grad_norm_g(chart, &sol.u)?;
        let (lo, hi) = (grad.min(), grad.max());
        let minimal_growth = lo > 0.0
            && log_grid(lo, hi.max(lo * (1.0 + 1e-9)), 256).iter().all(|&s| {
                let e = sol.model.one_plus_d(s);
                e >= -1e-12 && e <= 1.0 / (1.0 + s * s) + 1e-12
            });
        Ok(VerdictContext {
            model: sol.model.name().into(),
            alpha: sol.model.alpha(),
            beta: sol.model.beta(),
            p: sol.model.p_exponent(),
            maximal_lorentz: sol.model.is_maximal_lorentz(),
            topology: chart.topology(),
            curvature_nonpositive: nonpos,
            curvature_nonpositive_filled: filled,
            min_grad: lo,
            max_grad: hi,
            minimal_growth,
        })
    }
}

fn flags(items: &[(&str, bool)]) -> BTreeMap<String, bool> {
    items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn beta_is_one(beta: f64) -> bool {
    (beta - 1.0).abs() <= 1e-9
}

/// (beta L L'' - L'^2) / max(beta |L L''|, L'^2): the normalized sign of
/// (L^m / m)'' with m = (beta - 1) / beta, and of (ln L)'' when beta = 1.
fn convexity_margins(profile: &Profile, beta: f64) -> Vec<(f64, f64)> {
    (0..profile.len())
        .map(|k| {
            let (l, l1, l2) = (profile.length[k], profile.l1_coarea[k], profile.l2_coarea[k]);
            let num = beta * l * l2 - l1 * l1;
            let den = (beta * (l * l2).abs()).max(l1 * l1).max(1e-300);
            (profile.t[k], num / den)
        })
        .collect()
}

/// (ln L)'' >= 0 when beta = 1.
pub fn log_convexity_verdict(profile: &Profile, ctx: &VerdictContext, tol: f64) -> Verdict {
    const NAME: &str = "log_convexity";
    let hyp = flags(&[
        ("beta_equals_one", beta_is_one(ctx.beta)),
        ("curvature_nonpositive", ctx.curvature_nonpositive),
        ("structure_a", ctx.alpha > 0.0),
    ]);
    if let Some(v) = Verdict::gated(NAME, hyp.clone(), None) {
        return v;
    }
    Verdict::judged(NAME, hyp, &convexity_margins(profile, 1.0), tol, None)
}

/// (L^m / m)'' >= 0 with m = (beta - 1) / beta when beta != 1.
pub fn power_convexity_verdict(profile: &Profile, ctx: &VerdictContext, beta: f64, tol: f64) -> Verdict {
    const NAME: &str = "power_convexity";
    let hyp = flags(&[
        ("beta_not_one", !beta_is_one(beta)),
        ("curvature_nonpositive", ctx.curvature_nonpositive),
        ("structure_a", ctx.alpha > 0.0),
    ]);
    if let Some(v) = Verdict::gated(NAME, hyp.clone(), None) {
        return v;
    }
    let m = (beta - 1.0) / beta;
    Verdict::judged(NAME, hyp, &convexity_margins(profile, beta), tol, Some(format!("m = {m}")))
}

/// L L'' - L'^2 >= 4 pi^2, margin in units of 4 pi^2.
pub fn minimal_4pi2_verdict(profile: &Profile, ctx: &VerdictContext, tol: f64) -> Verdict {
    const NAME: &str = "minimal_4pi2";
    let hyp = flags(&[
        ("minimal_growth", ctx.minimal_growth),
        ("disk_like_components", ctx.topology == Topology::AnnulusInDisk),
        ("curvature_nonpositive_filled", ctx.curvature_nonpositive_filled),
    ]);
    if let Some(v) = Verdict::gated(NAME, hyp.clone(), None) {
        return v;
    }
    let c = 4.0 * PI * PI;
    let margins: Vec<(f64, f64)> = (0..profile.len())
        .map(|k| {
            let (l, l1, l2) = (profile.length[k], profile.l1_coarea[k], profile.l2_coarea[k]);
            (profile.t[k], (l * l2 - l1 * l1 - c) / c)
        })
        .collect();
    Verdict::judged(NAME, hyp, &margins, tol, None)
}

/// (L' + int k)^2 <= L L'' with the literal k = -div(grad u / |grad u|).
pub fn lorentz_verdict(profile: &Profile, ctx: &VerdictContext, tol: f64) -> Verdict {
    const NAME: &str = "lorentz";
    let hyp = flags(&[
        ("maximal_lorentz", ctx.maximal_lorentz),
        ("spacelike", ctx.max_grad < 1.0),
        ("curvature_nonpositive", ctx.curvature_nonpositive),
    ]);
    let note = (!(ctx.max_grad < 1.0)).then(|| format!("max |grad u|_g = {} is not below 1", ctx.max_grad));
    if let Some(v) = Verdict::gated(NAME, hyp.clone(), note) {
        return v;
    }
    let margins: Vec<(f64, f64)> = (0..profile.len())
        .map(|k| {
            let (l, l1, l2) = (profile.length[k], profile.l1_coarea[k], profile.l2_coarea[k]);
            let lhs = (l1 + profile.k_int[k]).powi(2);
            (profile.t[k], (l * l2 - lhs) / (l * l2).abs().max(1e-300))
        })
        .collect();
    Verdict::judged(NAME, hyp, &margins, tol, None)
}

/// Caller-supplied data for the pinched-curvature bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinchedAttestation {
    pub kappa1: f64,
    pub kappa2: f64,
    pub r_ball: f64,
    /// the caller vouches for a positive p-harmonic extension to B_{2R}
    pub attested: bool,
}

/// Lower bound for (ln L)'' (p = 2) or ((p-1)/(p-2) L^{(p-2)/(p-1)})''
/// under pinched curvature. The constant from the gradient estimate behind
/// it is not known explicitly, so a pass certifies the displayed bound only.
pub fn pinched_bound_verdict(profile: &Profile, pinch: &PinchedAttestation, p: f64, tol: f64) -> Result<Verdict> {
    const NAME: &str = "pinched_bound";
    if profile.t.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Domain("the pinched bound needs positive levels".into()));
    }
    let (k1, k2, r) = (pinch.kappa1, pinch.kappa2, pinch.r_ball);
    let hyp = flags(&[
        ("attested", pinch.attested),
        ("kappa_order", k1 >= k2 && k2 >= 0.0 && r > 0.0),
        ("p_admissible", p > 1.0),
    ]);
    let caveat = Some("hidden constant C(p) of the gradient estimate is absorbed".to_string());
    if let Some(v) = Verdict::gated(NAME, hyp.clone(), caveat.clone()) {
        return Ok(v);
    }
    let ratio = if k1 > 0.0 { k2 / k1 } else { 0.0 };
    let m = (p - 2.0) / (p - 1.0);
    let margins: Vec<(f64, f64)> = (0..profile.len())
        .map(|k| {
            let (t, l, l1, l2) = (profile.t[k], profile.length[k], profile.l1_coarea[k], profile.l2_coarea[k]);
            let scale = l.powf(m - 2.0);
            let lhs = scale * (l * l2 + (m - 1.0) * l1 * l1);
            let rhs = if (p - 2.0).abs() < 1e-12 {
                ratio / (t * t)
            } else {
                r * r / (1.0 + r) * k2 / (1.0 + r * k1) / (t * t) * l.powf(-1.0 / (p - 1.0))
            };
            let den = scale * (l * l2).abs().max(l1 * l1);
            (t, (lhs - rhs) / den.max(1e-300))
        })
        .collect();
    Ok(Verdict::judged(NAME, hyp, &margins, tol, caveat))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    LogConvexity,
    PowerConvexity,
    #[serde(rename = "minimal_4pi2")]
    Minimal4pi2,
    Lorentz,
    PinchedBound,
}

impl VerdictKind {
    pub const ALL: [VerdictKind; 5] = [
        VerdictKind::LogConvexity,
        VerdictKind::PowerConvexity,
        VerdictKind::Minimal4pi2,
        VerdictKind::Lorentz,
        VerdictKind::PinchedBound,
    ];
}

pub fn evaluate(
    kinds: &[VerdictKind],
    profile: &Profile,
    ctx: &VerdictContext,
    pinch: Option<&PinchedAttestation>,
    tol: f64,
) -> Result<Vec<Verdict>> {
    kinds
        .iter()
        .map(|k| {
            Ok(match k {
                VerdictKind::LogConvexity => log_convexity_verdict(profile, ctx, tol),
                VerdictKind::PowerConvexity => power_convexity_verdict(profile, ctx, ctx.beta, tol),
                VerdictKind::Minimal4pi2 => minimal_4pi2_verdict(profile, ctx, tol),
                VerdictKind::Lorentz => lorentz_verdict(profile, ctx, tol),
                VerdictKind::PinchedBound => match (pinch, ctx.p) {
                    (Some(att), Some(p)) => pinched_bound_verdict(profile, att, p, tol)?,
                    _ => Verdict {
                        name: "pinched_bound".into(),
                        status: Status::NotApplicable,
                        margin: None,
                        worst_t: None,
                        hypotheses: flags(&[("attested", false), ("p_harmonic", ctx.p.is_some())]),
                        note: Some("no attestation or not a p-harmonic model".into()),
                    },
                },
            })
        })
        .collect()
}
