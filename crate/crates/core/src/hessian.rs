//! Algebraic and differential identities behind the regularity argument and
//! the level-set computations: the Cordes-type claim sampled at random, the
//! det-Hess divergence identity, Kato, Bochner and the log-gradient identity
//! on grids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{build_planar_chart, AnnulusChart, MetricSpec};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::model::{builtin_model, cordes_constants, CordesConstants, ModelSpec};
use crate::numeric::observed_orders;

const CHUNKS: u64 = 64;
const SLACK_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CordesSampleReport {
    pub n_samples: u64,
    pub violations: u64,
    /// smallest (c2 tr(aW)^2 - |W|^2 - 2 c1 det W) / |W|^2 seen
    pub worst_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantReport {
    pub n_samples: u64,
    /// samples with a positive discriminant: the line crosses the hyperbola
    pub positive: u64,
    /// samples with a vanishing discriminant (tangency, still no crossing)
    pub tangent: u64,
    pub max_scaled_discriminant: f64,
}

fn chunk_sizes(n: u64) -> impl ParallelIterator<Item = (u64, u64)> {
    (0..CHUNKS).into_par_iter().map(move |k| (k, n / CHUNKS + u64::from(k < n % CHUNKS)))
}

fn chunk_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// a_ij = delta_ij + A v_i v_j for a unit vector v.
fn coefficient_matrix(big_a: f64, angle: f64) -> [[f64; 2]; 2] {
    let (s, c) = angle.sin_cos();
    [[1.0 + big_a * c * c, big_a * c * s], [big_a * c * s, 1.0 + big_a * s * s]]
}

/// Samples W with entries in [-10, 10], unit gradients and A in [alpha-1, beta-1].
pub fn cordes_claim_sample(alpha: f64, beta: f64, k: &CordesConstants, n: u64, seed: u64) -> CordesSampleReport {
    let (viol, worst) = chunk_sizes(n)
        .map(|(chunk, count)| {
            let mut rng = chunk_rng(seed, chunk);
            let mut viol = 0u64;
            let mut worst = f64::INFINITY;
            for _ in 0..count {
                let w11: f64 = rng.gen_range(-10.0..=10.0);
                let w12: f64 = rng.gen_range(-10.0..=10.0);
                let w22: f64 = rng.gen_range(-10.0..=10.0);
                let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let big_a: f64 = if beta > alpha { rng.gen_range(alpha - 1.0..=beta - 1.0) } else { alpha - 1.0 };
                let a = coefficient_matrix(big_a, angle);
                let norm2 = w11 * w11 + 2.0 * w12 * w12 + w22 * w22;
                if norm2 == 0.0 {
                    continue;
                }
                let det = w11 * w22 - w12 * w12;
                let tr = a[0][0] * w11 + 2.0 * a[0][1] * w12 + a[1][1] * w22;
                let slack = (k.c2 * tr * tr - norm2 - 2.0 * k.c1 * det) / norm2;
                if slack < -SLACK_TOL {
                    viol += 1;
                }
                worst = worst.min(slack);
            }
            (viol, worst)
        })
        .reduce(|| (0, f64::INFINITY), |a, b| (a.0 + b.0, a.1.min(b.1)));
    CordesSampleReport {
        n_samples: n,
        violations: viol,
        worst_slack: worst,
    }
}

/// Samples b = M^T a M for random rotations M and checks that the quadratic
/// in k2 obtained from the hyperbola and the line b11 k1 + b22 k2 = 1 has a
/// non-positive discriminant; the value reported is Delta / (4 b11^2). When
/// alpha = beta and b is diagonal the discriminant vanishes exactly.
pub fn cordes_discriminant_sample(alpha: f64, beta: f64, k: &CordesConstants, n: u64, seed: u64) -> DiscriminantReport {
    let bad = chunk_sizes(n)
        .map(|(chunk, count)| {
            let mut rng = chunk_rng(seed ^ 0x5eed, chunk);
            let (mut bad, mut touch) = (0u64, 0u64);
            let mut worst = f64::NEG_INFINITY;
            let tol = 1e-12 * k.c1 * k.c1;
            for _ in 0..count {
                let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let big_a: f64 = if beta > alpha { rng.gen_range(alpha - 1.0..=beta - 1.0) } else { alpha - 1.0 };
                // rotating v by -phi is the same as conjugating a by the rotation phi
                let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let b = coefficient_matrix(big_a, angle - phi);
                let (b11, b22) = (b[0][0], b[1][1]);
                let disc = k.c1 * k.c1 - 1.0 - k.c2 * (2.0 * k.c1 * b11 * b22 - b11 * b11 - b22 * b22);
                if disc > tol {
                    bad += 1;
                } else if disc >= -tol {
                    touch += 1;
                }
                worst = worst.max(disc);
            }
            (bad, touch, worst)
        })
        .reduce(|| (0, 0, f64::NEG_INFINITY), |a, b| (a.0 + b.0, a.1 + b.1, a.2.max(b.2)));
    let (bad, touch, worst) = (bad.0, bad.1, bad.2);
    DiscriminantReport {
        n_samples: n,
        positive: bad,
        tangent: touch,
        max_scaled_discriminant: worst,
    }
}

/// (label, alpha, beta) of the built-in models with alpha > 0.
pub fn builtin_structure_pairs() -> Vec<(String, f64, f64)> {
    let specs = [
        ModelSpec::PHarmonic { p: 1.5 },
        ModelSpec::PHarmonic { p: 2.0 },
        ModelSpec::PHarmonic { p: 3.0 },
        ModelSpec::PHarmonic { p: 4.0 },
        ModelSpec::MinimalSurface { cap: Some(1.0) },
        ModelSpec::SubsonicGas { gamma: 1.4 },
        ModelSpec::MaximalLorentz { cap: 0.9 },
        ModelSpec::Valtorta { seed: 0 },
    ];
    specs
        .iter()
        .map(|s| {
            let m = builtin_model(s).expect("built-in parameters are valid");
            let label = match m.params().first() {
                Some((k, v)) => format!("{}({k}={v})", m.name()),
                None => m.name().to_string(),
            };
            (label, m.alpha(), m.beta())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CordesPairReport {
    pub label: String,
    pub alpha: f64,
    pub beta: f64,
    pub constants: CordesConstants,
    pub claim: CordesSampleReport,
    pub discriminant: DiscriminantReport,
}

pub fn cordes_suite(n: u64, seed: u64) -> Result<Vec<CordesPairReport>> {
    builtin_structure_pairs()
        .into_iter()
        .map(|(label, alpha, beta)| {
            let constants = cordes_constants(alpha, beta)?;
            Ok(CordesPairReport {
                claim: cordes_claim_sample(alpha, beta, &constants, n, seed),
                discriminant: cordes_discriminant_sample(alpha, beta, &constants, n, seed),
                label,
                alpha,
                beta,
                constants,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    /// max |lhs - rhs| over max(|lhs| + |rhs|), on nodes at least three cells from the edge
    pub residual: f64,
    pub abs_residual: f64,
    /// nodes dropped because |grad u| was below the floor
    pub excluded: usize,
}

const MARGIN: usize = 3;

fn compare(lhs: &ScalarField, rhs: &ScalarField, keep: impl Fn(usize, usize) -> bool) -> IdentityResidual {
    let (n0, n1) = lhs.shape();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    let mut excluded = 0;
    for i in MARGIN..n0 - MARGIN {
        for j in MARGIN..n1 - MARGIN {
            if !keep(i, j) {
                excluded += 1;
                continue;
            }
            let (l, r) = (lhs.get(i, j), rhs.get(i, j));
            worst = worst.max((l - r).abs());
            scale = scale.max(l.abs() + r.abs());
        }
    }
    IdentityResidual {
        residual: if scale > 0.0 { worst / scale } else { worst },
        abs_residual: worst,
        excluded,
    }
}

fn require_planar(chart: &AnnulusChart) -> Result<()> {
    if chart.grid().periodic || chart.shape().0 < 2 * MARGIN + 1 || chart.shape().1 < 2 * MARGIN + 1 {
        return Err(Error::Domain("identity checks need a planar patch of at least 7x7 nodes".into()));
    }
    Ok(())
}

fn require_flat(chart: &AnnulusChart) -> Result<()> {
    require_planar(chart)?;
    if *chart.metric() != MetricSpec::Flat {
        return Err(Error::Domain("this identity is Euclidean; use a flat patch".into()));
    }
    Ok(())
}

fn lap0(chart: &AnnulusChart, f: &ScalarField) -> ScalarField {
    &chart.d00(f) + &chart.d11(f)
}

/// det Hess w against (1/2) div(Lap w grad w) - (1/4) Lap |grad w|^2.
pub fn det_hess_identity_residual(chart: &AnnulusChart, w: &ScalarField) -> Result<IdentityResidual> {
    require_flat(chart)?;
    w.check_shape(chart.shape())?;
    let (wx, wy) = (chart.d0(w), chart.d1(w));
    let (wxx, wyy, wxy) = (chart.d00(w), chart.d11(w), chart.d01(w));
    let det = &(&wxx * &wyy) - &(&wxy * &wxy);
    let lap = &wxx + &wyy;
    let div = &chart.d0(&(&lap * &wx)) + &chart.d1(&(&lap * &wy));
    let sq = &(&wx * &wx) + &(&wy * &wy);
    let rhs = div.zip_map(&lap0(chart, &sq), |d, l| 0.5 * d - 0.25 * l);
    Ok(compare(&det, &rhs, |_, _| true))
}

fn floor_mask<'a>(gx: &'a ScalarField, gy: &'a ScalarField, floor: f64) -> impl Fn(usize, usize) -> bool + 'a {
    move |i, j| gx.get(i, j).hypot(gy.get(i, j)) >= floor
}

/// |Hess u|^2 against 2 |grad |grad u||^2 for a harmonic u on a flat patch.
pub fn kato_defect(chart: &AnnulusChart, u: &ScalarField, floor: f64) -> Result<IdentityResidual> {
    require_flat(chart)?;
    u.check_shape(chart.shape())?;
    let (ux, uy) = (chart.d0(u), chart.d1(u));
    let (uxx, uyy, uxy) = (chart.d00(u), chart.d11(u), chart.d01(u));
    let (n0, n1) = u.shape();
    let mut lhs = ScalarField::zeros(n0, n1);
    let mut rhs = ScalarField::zeros(n0, n1);
    for i in 0..n0 {
        for j in 0..n1 {
            let (a, b) = (ux.get(i, j), uy.get(i, j));
            let (p, q, r) = (uxx.get(i, j), uxy.get(i, j), uyy.get(i, j));
            lhs.set(i, j, p * p + 2.0 * q * q + r * r);
            let g2 = a * a + b * b;
            let (gx, gy) = (a * p + b * q, a * q + b * r);
            rhs.set(i, j, if g2 > 0.0 { 2.0 * (gx * gx + gy * gy) / g2 } else { 0.0 });
        }
    }
    Ok(compare(&lhs, &rhs, floor_mask(&ux, &uy, floor)))
}

/// Lap_g |grad u|^2 / 2 against <grad Lap_g u, grad u> + |Hess_g u|^2 + K |grad u|^2
/// for metrics mu^2 |dz|^2 on a planar patch.
pub fn bochner_residual(chart: &AnnulusChart, u: &ScalarField) -> Result<IdentityResidual> {
    require_planar(chart)?;
    u.check_shape(chart.shape())?;
    let mu = chart.mu();
    let inv2 = mu.map(|m| 1.0 / (m * m));
    let (ux, uy) = (chart.d0(u), chart.d1(u));
    let (uxx, uyy, uxy) = (chart.d00(u), chart.d11(u), chart.d01(u));
    let (px, py) = (chart.d0(chart.log_mu()), chart.d1(chart.log_mu()));
    let grad2 = &(&(&ux * &ux) + &(&uy * &uy)) * &inv2;
    let lhs = &lap0(chart, &grad2.map(|v| 0.5 * v)) * &inv2;
    let lap_g = &lap0(chart, u) * &inv2;
    let cross = &(&(&chart.d0(&lap_g) * &ux) + &(&chart.d1(&lap_g) * &uy)) * &inv2;
    let k = chart.curvature();
    let (n0, n1) = u.shape();
    let rhs = ScalarField::from_fn(n0, n1, |i, j| {
        let (a, b) = (ux.get(i, j), uy.get(i, j));
        let (f1, f2) = (px.get(i, j), py.get(i, j));
        let h11 = uxx.get(i, j) - f1 * a + f2 * b;
        let h22 = uyy.get(i, j) - f2 * b + f1 * a;
        let h12 = uxy.get(i, j) - f2 * a - f1 * b;
        let w = inv2.get(i, j);
        cross.get(i, j) + w * w * (h11 * h11 + 2.0 * h12 * h12 + h22 * h22) + k.get(i, j) * grad2.get(i, j)
    });
    Ok(compare(&lhs, &rhs, |_, _| true))
}

/// Lap_g log|grad u|_g against div_g((Lap_g u / |grad u|_g^2) grad u) + K.
pub fn log_gradient_identity_residual(chart: &AnnulusChart, u: &ScalarField, floor: f64) -> Result<IdentityResidual> {
    require_planar(chart)?;
    u.check_shape(chart.shape())?;
    let mu = chart.mu();
    let inv2 = mu.map(|m| 1.0 / (m * m));
    let (ux, uy) = (chart.d0(u), chart.d1(u));
    let grad2 = &(&(&ux * &ux) + &(&uy * &uy)) * &inv2;
    let log_g = grad2.map(|v| 0.5 * v.max(1e-300).ln());
    let lhs = &lap0(chart, &log_g) * &inv2;
    let lap_g = &lap0(chart, u) * &inv2;
    let ratio = lap_g.zip_map(&grad2, |l, g| l / g.max(1e-300));
    // div_g X for X = ratio grad_g u, whose flat components are ratio mu^-2 u_i
    let div = &(&chart.d0(&(&ratio * &ux)) + &chart.d1(&(&ratio * &uy))) * &inv2;
    let rhs = &div + chart.curvature();
    let mask = |i: usize, j: usize| grad2.get(i, j).sqrt() >= floor;
    Ok(compare(&lhs, &rhs, mask))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    DetHess,
    Kato,
    Bochner,
    LogGradient,
}

impl Identity {
    pub const ALL: [Identity; 4] = [Identity::DetHess, Identity::Kato, Identity::Bochner, Identity::LogGradient];

    /// Euclidean identities are always checked on a flat patch.
    pub fn flat_only(self) -> bool {
        matches!(self, Identity::DetHess | Identity::Kato)
    }

    fn eval(self, chart: &AnnulusChart, u: &ScalarField) -> Result<IdentityResidual> {
        match self {
            Identity::DetHess => det_hess_identity_residual(chart, u),
            Identity::Kato => kato_defect(chart, u, 1e-8),
            Identity::Bochner => bochner_residual(chart, u),
            Identity::LogGradient => log_gradient_identity_residual(chart, u, 1e-8),
        }
    }

    /// Smooth test field used for the refinement study.
    pub fn test_field(self, x: f64, y: f64) -> f64 {
        match self {
            Identity::DetHess => (x + 0.3).sin() * (0.7 * y).exp(),
            // Re e^z; harmonic cubics satisfy the discrete identity exactly
            Identity::Kato => x.exp() * y.cos(),
            Identity::Bochner => x.sin() * (0.5 * y).exp() + x * y,
            Identity::LogGradient => x * x * x * y + x,
        }
    }

    /// Quadratic on which the discrete identity is exact, where one exists.
    pub fn quadratic_field(self, x: f64, y: f64) -> Option<f64> {
        match self {
            Identity::DetHess => Some(x * x + y * y),
            Identity::Kato | Identity::Bochner => Some(x * x - y * y),
            Identity::LogGradient => None,
        }
    }
}

pub const PATCH: ((f64, f64), (f64, f64)) = ((0.5, 1.5), (0.5, 1.5));

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityStudy {
    pub identity: Identity,
    pub metric: MetricSpec,
    pub grids: Vec<usize>,
    pub residuals: Vec<f64>,
    pub orders: Vec<f64>,
    /// normalized residual of the quadratic case on the coarsest flat grid
    pub quadratic_residual: Option<f64>,
}

impl IdentityStudy {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn patch(metric: &MetricSpec, n: usize) -> Result<AnnulusChart> {
    build_planar_chart(PATCH.0, PATCH.1, n, n, metric.clone())
}

pub fn identity_study(identity: Identity, metric: &MetricSpec, grids: &[usize]) -> Result<IdentityStudy> {
    let metric = if identity.flat_only() { MetricSpec::Flat } else { metric.clone() };
    let mut residuals = Vec::with_capacity(grids.len());
    for &n in grids {
        let chart = patch(&metric, n)?;
        let u = chart.field(|x, y| identity.test_field(x, y));
        residuals.push(identity.eval(&chart, &u)?.residual);
    }
    // round-off grows like 1/h^2, so exactness is read on the coarsest grid
    let quadratic_residual = match (identity.quadratic_field(0.0, 0.0), grids.first()) {
        (Some(_), Some(&n)) => {
            let chart = patch(&MetricSpec::Flat, n)?;
            let u = chart.field(|x, y| identity.quadratic_field(x, y).unwrap_or(0.0));
            Some(identity.eval(&chart, &u)?.residual)
        }
        _ => None,
    };
    Ok(IdentityStudy {
        identity,
        orders: observed_orders(&residuals),
        metric,
        grids: grids.to_vec(),
        residuals,
        quadratic_residual,
    })
}

pub fn identity_suite(metric: &MetricSpec, grids: &[usize]) -> Result<Vec<IdentityStudy>> {
    Identity::ALL.iter().map(|&id| identity_study(id, metric, grids)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::cordes_constants_with_c1;

    #[test]
    fn identity_boundary_case() {
        let k = cordes_constants_with_c1(1.0, 1.0, 2.0).unwrap();
        assert_eq!(k.c2, 1.5);
        // W = diag(1, 1), a = I: 2 + 4 = 6 <= 1.5 * 4
        let tr: f64 = 2.0;
        assert_eq!(k.c2 * tr * tr - 2.0 - 2.0 * k.c1, 0.0);
        let r = cordes_claim_sample(1.0, 1.0, &k, 20_000, 1);
        assert_eq!(r.violations, 0);
        assert!(r.worst_slack > -SLACK_TOL);
    }

    #[test]
    fn sampling_is_deterministic_and_clean() {
        for (label, a, b) in builtin_structure_pairs() {
            let k = cordes_constants(a, b).unwrap();
            let r1 = cordes_claim_sample(a, b, &k, 50_000, 7);
            let r2 = cordes_claim_sample(a, b, &k, 50_000, 7);
            assert_eq!(r1, r2);
            assert_eq!(r1.violations, 0, "{label}");
            assert!(r1.worst_slack > 0.0, "{label}");
            let d = cordes_discriminant_sample(a, b, &k, 50_000, 7);
            assert_eq!(d.positive, 0, "{label}");
        }
    }

    #[test]
    fn too_small_c2_is_caught() {
        // W = I already needs c2 >= (2 + 2 c1) / 16
        let mut k = cordes_constants(1.0, 3.0).unwrap();
        k.c2 = 1.0;
        assert!(cordes_claim_sample(1.0, 3.0, &k, 20_000, 3).violations > 0);
    }

    #[test]
    fn quadratics_are_exact() {
        let chart = patch(&MetricSpec::Flat, 33).unwrap();
        let w = chart.field(|x, y| x * x + y * y);
        assert!(det_hess_identity_residual(&chart, &w).unwrap().abs_residual < 1e-10);
        let u = chart.field(|x, y| x * x - y * y);
        assert!(kato_defect(&chart, &u, 1e-8).unwrap().abs_residual < 1e-10);
        assert!(bochner_residual(&chart, &u).unwrap().abs_residual < 1e-10);
        let affine = chart.field(|x, y| 2.0 * x - y + 1.0);
        let r = det_hess_identity_residual(&chart, &affine).unwrap();
        assert!(r.abs_residual < 1e-12);
    }

    #[test]
    fn refinement_orders() {
        for metric in [MetricSpec::Flat, MetricSpec::GaussianBump { c: 0.3 }] {
            for s in identity_suite(&metric, &[64, 128, 256]).unwrap() {
                assert!(s.min_order() >= 1.8, "{:?} {:?} {:?}", s.identity, s.metric, s.residuals);
                if let Some(q) = s.quadratic_residual {
                    assert!(q < 1e-10, "{:?} {q}", s.identity);
                }
            }
        }
    }

    #[test]
    fn euclidean_identities_reject_curved_patches() {
        let chart = patch(&MetricSpec::GaussianBump { c: 0.3 }, 16).unwrap();
        let u = chart.field(|x, _| x);
        assert!(kato_defect(&chart, &u, 0.0).is_err());
        assert!(det_hess_identity_residual(&chart, &u).is_err());
    }

    #[test]
    fn kato_excludes_critical_nodes() {
        let chart = build_planar_chart((-1.0, 1.0), (-1.0, 1.0), 21, 21, MetricSpec::Flat).unwrap();
        let u = chart.field(|x, y| x * x - y * y);
        let r = kato_defect(&chart, &u, 1e-6).unwrap();
        assert_eq!(r.excluded, 1);
    }

    #[test]
    fn non_harmonic_field_breaks_kato() {
        let chart = patch(&MetricSpec::Flat, 33).unwrap();
        let u = chart.field(|x, y| x * x + 0.5 * y * y);
        assert!(kato_defect(&chart, &u, 1e-8).unwrap().residual > 1e-2);
    }
}
