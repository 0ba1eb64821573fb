//! Rotationally symmetric solutions on flat annuli.
//!
//! Flux constancy r a(u'(r)) u'(r) = c gives u'(r) = F^{-1}(c / r); c is found
//! by bisection so that the radial integral matches t2 - t1.

use crate::chart::AnnulusChart;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::model::DiffusivityModel;
use crate::numeric::adaptive_simpson;

const QUAD_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct RadialSolution {
    pub model: DiffusivityModel,
    pub r_inner: f64,
    /// outer radius over inner radius
    pub r_ratio: f64,
    pub t1: f64,
    pub t2: f64,
    pub c: f64,
}

pub fn radial_oracle(model: &DiffusivityModel, r_ratio: f64, t1: f64, t2: f64) -> Result<RadialSolution> {
    radial_oracle_with(model, 1.0, r_ratio, t1, t2)
}

// r = a + tau^2 tames the inverse-square-root endpoint singularity at r = a
// that appears when c / a approaches the top of a bounded flux range.
fn rise(model: &DiffusivityModel, c: f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let f = |tau: f64| 2.0 * tau * model.invert_flux(c / (a + tau * tau)).unwrap_or(f64::NAN);
    adaptive_simpson(&f, 0.0, (b - a).sqrt(), tol)
}

/// Radial oracle on the annulus r_inner < r < r_inner * r_ratio.
pub fn radial_oracle_with(
    model: &DiffusivityModel,
    r_inner: f64,
    r_ratio: f64,
    t1: f64,
    t2: f64,
) -> Result<RadialSolution> {
    if !(t1 < t2) || !(r_ratio > 1.0) || !(r_inner > 0.0) {
        return Err(Error::Oracle(format!("bad radial data r_inner={r_inner}, R={r_ratio}, t=({t1},{t2})")));
    }
    let (a, b) = (r_inner, r_inner * r_ratio);
    let target = t2 - t1;
    let gap = |c: f64| -> Result<f64> { Ok(rise(model, c, a, b, QUAD_TOL * target)? - target) };
    let c_sup = model.flux_sup() * r_inner;
    let mut lo = 0.0;
    let mut hi;
    if c_sup.is_finite() {
        hi = c_sup * (1.0 - 1e-12);
        if gap(hi)? < 0.0 {
            return Err(Error::Oracle(format!(
                "no radial solution: rise {target} exceeds the largest attainable value"
            )));
        }
    } else {
        hi = 1.0;
        while gap(hi)? < 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e100 {
                return Err(Error::Oracle("cannot bracket the flux constant".into()));
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-14 * hi || mid <= lo || mid >= hi {
            break;
        }
        if gap(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RadialSolution {
        model: model.clone(),
        r_inner,
        r_ratio,
        t1,
        t2,
        c: 0.5 * (lo + hi),
    })
}

impl RadialSolution {
    pub fn r_outer(&self) -> f64 {
        self.r_inner * self.r_ratio
    }

    /// u'(r).
    pub fn du_dr(&self, r: f64) -> Result<f64> {
        self.model.invert_flux(self.c / r)
    }

    pub fn u_of_r(&self, r: f64) -> Result<f64> {
        if r <= self.r_inner {
            return Ok(self.t1);
        }
        Ok(self.t1 + rise(&self.model, self.c, self.r_inner, r, QUAD_TOL * (self.t2 - self.t1))?)
    }

    /// Inverse of u_of_r by bisection.
    pub fn r_of_t(&self, t: f64) -> Result<f64> {
        if !(t >= self.t1 && t <= self.t2) {
            return Err(Error::Oracle(format!("level {t} outside [{}, {}]", self.t1, self.t2)));
        }
        let (mut lo, mut hi) = (self.r_inner, self.r_outer());
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.u_of_r(mid)? < t {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Nodal values on an annulus chart whose inner radius matches.
    pub fn on_chart(&self, chart: &AnnulusChart) -> Result<ScalarField> {
        let g = chart.grid();
        let r0 = chart.inner_radius();
        let mut rows = Vec::with_capacity(g.n0);
        let mut acc = self.t1;
        let mut prev = r0;
        for i in 0..g.n0 {
            let r = r0 * g.x(i).exp();
            if i > 0 {
                acc += rise(&self.model, self.c, prev, r, 1e-13)?;
            }
            rows.push(acc);
            prev = r;
        }
        Ok(ScalarField::from_fn(g.n0, g.n1, |i, _| rows[i]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_model, ModelSpec};
    use approx::assert_relative_eq;

    #[test]
    fn laplace_log_profile() {
        let m = builtin_model(&ModelSpec::PHarmonic { p: 2.0 }).unwrap();
        let o = radial_oracle(&m, 2.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(o.c, 1.0 / 2f64.ln(), max_relative = 1e-10);
        for r in [1.2, 1.5, 1.9] {
            assert_relative_eq!(o.u_of_r(r).unwrap(), r.ln() / 2f64.ln(), epsilon = 1e-9);
        }
        assert_relative_eq!(o.r_of_t(0.5).unwrap(), 2f64.sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn p4_power_profile() {
        // u = (3/2)(r^{2/3} - 1) has u' = r^{-1/3} and flux u'^3 r = 1
        let m = builtin_model(&ModelSpec::PHarmonic { p: 4.0 }).unwrap();
        let t2 = 1.5 * (8f64.powf(2.0 / 3.0) - 1.0);
        let o = radial_oracle(&m, 8.0, 0.0, t2).unwrap();
        assert_relative_eq!(o.c, 1.0, max_relative = 1e-8);
        assert_relative_eq!(o.u_of_r(3.0).unwrap(), 1.5 * (3f64.powf(2.0 / 3.0) - 1.0), epsilon = 1e-8);
    }

    #[test]
    fn maximal_arcsinh_profile() {
        let m = builtin_model(&ModelSpec::MaximalLorentz { cap: 0.9 }).unwrap();
        let t2 = 3f64.asinh() - 1f64.asinh();
        let o = radial_oracle(&m, 3.0, 0.0, t2).unwrap();
        assert_relative_eq!(o.c, 1.0, max_relative = 1e-8);
        assert_relative_eq!(o.u_of_r(2.0).unwrap(), 2f64.asinh() - 1f64.asinh(), epsilon = 1e-8);
    }

    #[test]
    fn catenoid_profile() {
        let m = builtin_model(&ModelSpec::MinimalSurface { cap: None }).unwrap();
        let t2 = 4.5f64.acosh() - 1.5f64.acosh();
        let o = radial_oracle_with(&m, 1.5, 3.0, 0.0, t2).unwrap();
        assert_relative_eq!(o.c, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn minimal_surface_unsolvable_rise() {
        let m = builtin_model(&ModelSpec::MinimalSurface { cap: None }).unwrap();
        assert!(matches!(radial_oracle(&m, 2.0, 0.0, 5.0), Err(Error::Oracle(_))));
    }
}
