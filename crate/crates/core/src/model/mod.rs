//! Diffusivities a(s), structure checks and derived scalar maps.

mod coefficients;
mod spec;
mod structure;
mod valtorta;

use std::fmt;
use std::sync::Arc;

pub use coefficients::{
    cordes_constants, cordes_constants_with_c1, elliptic_coefficients, elliptic_coefficients_from_d,
    riccati_gamma, CordesConstants, EllipticCoefficients,
};
pub use spec::ModelSpec;
pub use structure::{log_grid, structure_report, A2Class, StructureReport};
pub use valtorta::ValtortaProfile;

use crate::error::{Error, Result};

const INVERT_RTOL: f64 = 1e-12;
const INVERT_MAX_ITER: usize = 200;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    PHarmonic { p: f64 },
    Minimal { cap: Option<f64> },
    Subsonic { gamma: f64 },
    Maximal { cap: f64 },
    Valtorta(Arc<ValtortaProfile>),
    Conjugate(Arc<DiffusivityModel>),
    Custom { a: ScalarFn, a_prime: Option<ScalarFn> },
}

/// A diffusivity a(s) together with its declared structure bounds
/// alpha <= 1 + a'(s) s / a(s) <= beta.
#[derive(Clone)]
pub struct DiffusivityModel {
    name: String,
    kind: Kind,
    alpha: f64,
    beta: f64,
    params: Vec<(String, f64)>,
}

impl fmt::Debug for DiffusivityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusivityModel")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("params", &self.params)
            .finish()
    }
}

fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

/// Construct one of the built-in models.
pub fn builtin_model(spec: &ModelSpec) -> Result<DiffusivityModel> {
    match *spec {
        ModelSpec::PHarmonic { p } => {
            if !(p > 1.0) || !p.is_finite() {
                return Err(domain(format!("p-harmonic requires p > 1, got {p}")));
            }
            Ok(DiffusivityModel {
                name: "p_harmonic".into(),
                kind: Kind::PHarmonic { p },
                alpha: p - 1.0,
                beta: p - 1.0,
                params: vec![("p".into(), p)],
            })
        }
        ModelSpec::MinimalSurface { cap } => {
            let mut params = Vec::new();
            let alpha = match cap {
                Some(c) => {
                    if !(c > 0.0) || !c.is_finite() {
                        return Err(domain(format!("minimal surface cap must be positive, got {c}")));
                    }
                    params.push(("cap".into(), c));
                    1.0 / (1.0 + c * c)
                }
                None => 0.0,
            };
            Ok(DiffusivityModel {
                name: "minimal_surface".into(),
                kind: Kind::Minimal { cap },
                alpha,
                beta: 1.0,
                params,
            })
        }
        ModelSpec::SubsonicGas { gamma } => {
            if !(gamma > 1.0) || !gamma.is_finite() {
                return Err(domain(format!("subsonic gas requires gamma > 1, got {gamma}")));
            }
            let g2 = gamma * gamma;
            Ok(DiffusivityModel {
                name: "subsonic_gas".into(),
                kind: Kind::Subsonic { gamma },
                alpha: (g2 - 1.0) / (g2 + 3.0),
                beta: 1.0,
                params: vec![("gamma".into(), gamma)],
            })
        }
        ModelSpec::MaximalLorentz { cap } => {
            if !(cap > 0.0 && cap < 1.0) {
                return Err(domain(format!("maximal graph cap must lie in (0,1), got {cap}")));
            }
            Ok(DiffusivityModel {
                name: "maximal_lorentz".into(),
                kind: Kind::Maximal { cap },
                alpha: 1.0,
                beta: 1.0 / (1.0 - cap * cap),
                params: vec![("cap".into(), cap)],
            })
        }
        ModelSpec::Valtorta { seed } => Ok(DiffusivityModel {
            name: "valtorta".into(),
            kind: Kind::Valtorta(Arc::new(ValtortaProfile::new(seed))),
            alpha: 0.5,
            beta: 3.0,
            params: vec![("seed".into(), seed as f64)],
        }),
        ModelSpec::Conjugate(ref inner) => Ok(conjugate_model(&builtin_model(inner)?)),
    }
}

/// The conjugate diffusivity b(t) = 1 / a(F^{-1}(t)).
pub fn conjugate_model(model: &DiffusivityModel) -> DiffusivityModel {
    DiffusivityModel {
        name: format!("conjugate({})", model.name),
        kind: Kind::Conjugate(Arc::new(model.clone())),
        alpha: 1.0 / model.beta,
        beta: if model.alpha > 0.0 {
            1.0 / model.alpha
        } else {
            f64::INFINITY
        },
        params: Vec::new(),
    }
}

pub fn flux_map(model: &DiffusivityModel, t: f64) -> f64 {
    model.flux(t)
}

pub fn invert_flux(model: &DiffusivityModel, w: f64) -> Result<f64> {
    model.invert_flux(w)
}

pub fn half_flux_map(model: &DiffusivityModel, s: f64) -> f64 {
    model.half_flux(s)
}

pub fn invert_half_flux(model: &DiffusivityModel, w: f64) -> Result<f64> {
    model.invert_half_flux(w)
}

impl DiffusivityModel {
    /// A user model. `a_prime` falls back to a central difference.
    pub fn custom<F>(name: &str, a: F, alpha: f64, beta: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(alpha > 0.0 && alpha <= beta) {
            return Err(domain(format!("custom model needs 0 < alpha <= beta, got {alpha}, {beta}")));
        }
        Ok(DiffusivityModel {
            name: name.into(),
            kind: Kind::Custom {
                a: Arc::new(a),
                a_prime: None,
            },
            alpha,
            beta,
            params: Vec::new(),
        })
    }

    pub fn with_derivative<F>(mut self, a_prime: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if let Kind::Custom { a_prime: ref mut slot, .. } = self.kind {
            *slot = Some(Arc::new(a_prime));
        }
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn is_maximal_lorentz(&self) -> bool {
        matches!(self.kind, Kind::Maximal { .. })
    }

    /// The p of a p-harmonic model.
    pub fn p_exponent(&self) -> Option<f64> {
        match self.kind {
            Kind::PHarmonic { p } => Some(p),
            _ => None,
        }
    }

    /// Serializable description, when the model is built from one.
    pub fn spec(&self) -> Option<ModelSpec> {
        match &self.kind {
            Kind::PHarmonic { p } => Some(ModelSpec::PHarmonic { p: *p }),
            Kind::Minimal { cap } => Some(ModelSpec::MinimalSurface { cap: *cap }),
            Kind::Subsonic { gamma } => Some(ModelSpec::SubsonicGas { gamma: *gamma }),
            Kind::Maximal { cap } => Some(ModelSpec::MaximalLorentz { cap: *cap }),
            Kind::Valtorta(v) => Some(ModelSpec::Valtorta { seed: v.seed() }),
            Kind::Conjugate(m) => m.spec().map(|s| ModelSpec::Conjugate(Box::new(s))),
            Kind::Custom { .. } => None,
        }
    }

    /// Supremum of the ellipticity domain: a is positive and 1 + D > 0 for s below it.
    pub fn domain_sup(&self) -> f64 {
        match &self.kind {
            Kind::Subsonic { gamma } => (2.0 / (gamma + 1.0)).sqrt(),
            Kind::Maximal { .. } => 1.0,
            Kind::Conjugate(m) => m.flux_sup(),
            _ => f64::INFINITY,
        }
    }

    /// Supremum of the range of F(s) = a(s) s.
    pub fn flux_sup(&self) -> f64 {
        match &self.kind {
            Kind::Minimal { .. } => 1.0,
            Kind::Subsonic { .. } => self.flux(self.domain_sup()),
            Kind::Conjugate(m) => m.domain_sup(),
            _ => f64::INFINITY,
        }
    }

    /// Upper end of the s-range on which alpha and beta are declared.
    pub fn structure_cap(&self) -> f64 {
        match &self.kind {
            Kind::Minimal { cap } => cap.unwrap_or(f64::INFINITY),
            Kind::Subsonic { gamma } => 2.0 / (gamma + 1.0),
            Kind::Maximal { cap } => *cap,
            Kind::Conjugate(m) => {
                let c = m.structure_cap();
                if c.is_finite() {
                    m.flux(c)
                } else {
                    m.flux_sup()
                }
            }
            _ => f64::INFINITY,
        }
    }

    pub fn a(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::PHarmonic { p } => {
                if *p == 2.0 {
                    1.0
                } else {
                    s.powf(p - 2.0)
                }
            }
            Kind::Minimal { .. } => 1.0 / (1.0 + s * s).sqrt(),
            Kind::Subsonic { gamma } => (1.0 - 0.5 * (gamma - 1.0) * s * s).powf(1.0 / (gamma - 1.0)),
            Kind::Maximal { .. } => 1.0 / (1.0 - s * s).sqrt(),
            Kind::Valtorta(v) => v.log_a(-s.ln()).exp(),
            Kind::Conjugate(m) => match m.invert_flux(s) {
                Ok(x) => 1.0 / m.a(x),
                Err(_) => f64::NAN,
            },
            Kind::Custom { a, .. } => a(s),
        }
    }

    /// D(s) = a'(s) s / a(s).
    pub fn d(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::PHarmonic { p } => p - 2.0,
            Kind::Minimal { .. } => -s * s / (1.0 + s * s),
            Kind::Subsonic { gamma } => {
                let q = 0.5 * (gamma - 1.0) * s * s;
                -s * s / (1.0 - q)
            }
            Kind::Maximal { .. } => s * s / (1.0 - s * s),
            Kind::Valtorta(v) => -v.log_a_slope(-s.ln()),
            Kind::Conjugate(m) => match m.invert_flux(s) {
                Ok(x) => 1.0 / (1.0 + m.d(x)) - 1.0,
                Err(_) => f64::NAN,
            },
            Kind::Custom { .. } => self.a_prime(s) * s / self.a(s),
        }
    }

    pub fn a_prime(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::Custom { a, a_prime } => match a_prime {
                Some(ap) => ap(s),
                None => {
                    let h = 1e-6 * s;
                    (a(s + h) - a(s - h)) / (2.0 * h)
                }
            },
            _ => self.a(s) * self.d(s) / s,
        }
    }

    pub fn one_plus_d(&self, s: f64) -> f64 {
        1.0 + self.d(s)
    }

    /// a(s), failing on non-finite or non-positive values.
    pub fn eval_checked(&self, s: f64) -> Result<f64> {
        let v = self.a(s);
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(Error::Evaluation { s, value: v })
        }
    }

    pub fn flux(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        self.a(s) * s
    }

    pub fn half_flux(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        self.a(s).sqrt() * s
    }

    pub fn invert_flux(&self, w: f64) -> Result<f64> {
        let sup = self.flux_sup();
        if w.is_finite() && w >= 0.0 && w < sup {
            match &self.kind {
                Kind::PHarmonic { p } => return Ok(w.powf(1.0 / (p - 1.0))),
                Kind::Minimal { .. } => return Ok(w / ((1.0 - w) * (1.0 + w)).sqrt()),
                Kind::Maximal { .. } => return Ok(w / (1.0 + w * w).sqrt()),
                _ => {}
            }
        }
        bisect_inverse(|s| self.flux(s), w, self.domain_sup(), sup)
    }

    pub fn invert_half_flux(&self, w: f64) -> Result<f64> {
        let ds = self.domain_sup();
        let sup = if ds.is_finite() {
            self.half_flux(ds)
        } else {
            f64::INFINITY
        };
        let sup = if sup.is_nan() { f64::INFINITY } else { sup };
        bisect_inverse(|s| self.half_flux(s), w, ds, sup)
    }

    pub fn conjugate(&self) -> DiffusivityModel {
        conjugate_model(self)
    }
}

/// Inverse of an increasing map g on (0, domain_sup) with range (0, range_sup).
fn bisect_inverse<G: Fn(f64) -> f64>(g: G, w: f64, domain_sup: f64, range_sup: f64) -> Result<f64> {
    if !w.is_finite() || w < 0.0 {
        return Err(domain(format!("cannot invert at {w}")));
    }
    if w == 0.0 {
        return Ok(0.0);
    }
    if w >= range_sup {
        if w == range_sup && domain_sup.is_finite() {
            return Ok(domain_sup);
        }
        return Err(domain(format!("value {w} outside flux range (0, {range_sup})")));
    }
    let mut lo = if domain_sup.is_finite() {
        0.5 * domain_sup
    } else {
        w.clamp(1e-3, 1e3)
    };
    while g(lo) > w {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(domain(format!("cannot bracket inverse at {w}")));
        }
    }
    let mut hi = if domain_sup.is_finite() {
        domain_sup
    } else {
        let mut hi = 2.0 * lo;
        while g(hi) < w {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(domain(format!("cannot bracket inverse at {w}")));
            }
        }
        hi
    };
    for _ in 0..INVERT_MAX_ITER {
        if hi - lo <= INVERT_RTOL * hi {
            break;
        }
        let mid = if lo > 0.0 && hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v.is_nan() {
            return Err(Error::Evaluation { s: mid, value: v });
        }
        if v < w {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(p: f64) -> DiffusivityModel {
        builtin_model(&ModelSpec::PHarmonic { p }).unwrap()
    }

    fn minimal() -> DiffusivityModel {
        builtin_model(&ModelSpec::MinimalSurface { cap: None }).unwrap()
    }

    #[test]
    fn p_harmonic_bounds() {
        let m = p(3.0);
        assert_eq!(m.alpha(), 2.0);
        assert_eq!(m.beta(), 2.0);
        let m = p(2.0);
        for s in [1e-3, 1.0, 7.0] {
            assert_eq!(m.a(s), 1.0);
            assert_eq!(m.d(s), 0.0);
        }
    }

    #[test]
    fn subsonic_gamma_three() {
        let m = builtin_model(&ModelSpec::SubsonicGas { gamma: 3.0 }).unwrap();
        assert_relative_eq!(m.alpha(), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(m.beta(), 1.0);
        assert_relative_eq!(m.one_plus_d(m.structure_cap()), 2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(builtin_model(&ModelSpec::PHarmonic { p: 1.0 }).is_err());
        assert!(builtin_model(&ModelSpec::SubsonicGas { gamma: 0.5 }).is_err());
        assert!(builtin_model(&ModelSpec::MaximalLorentz { cap: 1.0 }).is_err());
    }

    #[test]
    fn flux_examples() {
        let m = p(3.0);
        assert_relative_eq!(flux_map(&m, 2.0), 4.0);
        assert_relative_eq!(invert_flux(&m, 4.0).unwrap(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(flux_map(&minimal(), 1.0), 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        let id = p(2.0);
        for w in [1e-5, 0.3, 17.0] {
            assert_relative_eq!(invert_flux(&id, w).unwrap(), w, max_relative = 1e-12);
        }
        assert!(invert_flux(&minimal(), 1.5).is_err());
    }

    #[test]
    fn half_flux_examples() {
        let m = p(4.0);
        assert_relative_eq!(half_flux_map(&m, 3.0), 9.0, max_relative = 1e-14);
        assert_relative_eq!(invert_half_flux(&m, 9.0).unwrap(), 3.0, max_relative = 1e-12);
        assert_relative_eq!(half_flux_map(&minimal(), 1.0), 2f64.powf(-0.25), epsilon = 1e-15);
    }

    #[test]
    fn conjugates() {
        let q = conjugate_model(&p(3.0));
        for s in [0.01, 0.5, 2.0, 30.0] {
            assert_relative_eq!(q.a(s), s.powf(-0.5), max_relative = 1e-10);
            assert_relative_eq!(q.d(s), -0.5, epsilon = 1e-10);
        }
        assert_relative_eq!(q.alpha(), 0.5);
        let two = conjugate_model(&p(2.0));
        assert_relative_eq!(two.a(0.7), 1.0, max_relative = 1e-12);
        let maximal = conjugate_model(&minimal());
        for t in [0.1, 0.5, 0.9] {
            assert_relative_eq!(maximal.a(t), 1.0 / (1.0 - t * t).sqrt(), max_relative = 1e-10);
        }
    }

    #[test]
    fn custom_fallback_derivative() {
        let m = DiffusivityModel::custom("cubic", |s| s * s, 3.0, 3.0).unwrap();
        assert_relative_eq!(m.a_prime(1.5), 3.0, max_relative = 1e-8);
        assert_relative_eq!(m.d(0.2), 2.0, max_relative = 1e-8);
    }

    #[test]
    fn maximal_flux_unbounded() {
        let m = builtin_model(&ModelSpec::MaximalLorentz { cap: 0.9 }).unwrap();
        let s = invert_flux(&m, 50.0).unwrap();
        assert_relative_eq!(m.flux(s), 50.0, max_relative = 1e-8);
        assert!(s < 1.0);
    }
}
