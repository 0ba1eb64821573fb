use serde::{Deserialize, Serialize};

use super::DiffusivityModel;
use crate::error::{Error, Result};

const CORDES_MARGIN: f64 = 1.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticCoefficients {
    pub d: f64,
    pub b: f64,
    pub c: f64,
    /// B / (1 - B)
    pub b_ratio: f64,
    /// |C + B/(1-B)| + |C - B/(1-B)|
    pub abs_sum: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CordesConstants {
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn elliptic_coefficients_from_d(d: f64) -> Result<EllipticCoefficients> {
    if !(d > -1.0) || !d.is_finite() {
        return Err(Error::Structure(format!("D = {d} is not above -1")));
    }
    let b = d / (2.0 * (d + 2.0));
    let c = -d / (3.0 * d + 4.0);
    let b_ratio = d / (d + 4.0);
    Ok(EllipticCoefficients {
        d,
        b,
        c,
        b_ratio,
        abs_sum: (c + b_ratio).abs() + (c - b_ratio).abs(),
    })
}

pub fn elliptic_coefficients(model: &DiffusivityModel, s: f64) -> Result<EllipticCoefficients> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("s must be positive, got {s}")));
    }
    elliptic_coefficients_from_d(model.d(s))
}

pub fn cordes_constants(alpha: f64, beta: f64) -> Result<CordesConstants> {
    check_bounds(alpha, beta)?;
    cordes_constants_with_c1(alpha, beta, CORDES_MARGIN * (1.0 + beta * beta) / (2.0 * alpha))
}

pub fn cordes_constants_with_c1(alpha: f64, beta: f64, c1: f64) -> Result<CordesConstants> {
    check_bounds(alpha, beta)?;
    let threshold = (1.0 + beta * beta) / (2.0 * alpha);
    if !(c1 > threshold) {
        return Err(Error::Domain(format!("c1 = {c1} must exceed {threshold}")));
    }
    let c2 = (c1 * c1 - 1.0) / (2.0 * c1 * alpha - 1.0 - beta * beta);
    Ok(CordesConstants { c1, c2, alpha, beta })
}

fn check_bounds(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= beta && beta.is_finite()) {
        return Err(Error::Domain(format!("need 0 < alpha <= beta, got {alpha}, {beta}")));
    }
    Ok(())
}

/// Coefficient of b(z) in the Riccati-type example.
pub fn riccati_gamma(p: f64, q: f64, s: f64) -> Result<f64> {
    if !(p > 1.0 && q >= 1.0 && s > 0.0) {
        return Err(Error::Domain(format!("riccati_gamma needs p>1, q>=1, s>0; got {p}, {q}, {s}")));
    }
    Ok(2.0 * p / (3.0 * p - 2.0) * s.powf(q - 1.0 - 0.5 * p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_model, ModelSpec};
    use approx::assert_relative_eq;

    #[test]
    fn p4_coefficients() {
        let m = builtin_model(&ModelSpec::PHarmonic { p: 4.0 }).unwrap();
        let e = elliptic_coefficients(&m, 0.3).unwrap();
        assert_relative_eq!(e.b_ratio, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(e.c, -0.2, epsilon = 1e-15);
        assert_relative_eq!(e.abs_sum / 2.0, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(e.b / (1.0 - e.b), e.b_ratio, epsilon = 1e-15);
    }

    #[test]
    fn laplace_coefficients_vanish() {
        let e = elliptic_coefficients_from_d(0.0).unwrap();
        assert_eq!((e.b, e.c, e.abs_sum), (0.0, 0.0, 0.0));
    }

    #[test]
    fn p_harmonic_ratio() {
        for p in [1.2, 1.5, 3.0, 7.0] {
            let e = elliptic_coefficients_from_d(p - 2.0).unwrap();
            assert_relative_eq!(e.b_ratio, (p - 2.0) / (p + 2.0), epsilon = 1e-15);
        }
    }

    #[test]
    fn d_at_minus_one_rejected() {
        assert!(matches!(elliptic_coefficients_from_d(-1.0), Err(Error::Structure(_))));
    }

    #[test]
    fn cordes_examples() {
        let c = cordes_constants_with_c1(1.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(c.c2, 1.5);
        let c = cordes_constants(1.0, 1.0).unwrap();
        assert_relative_eq!(c.c1, 1.01);
        let c = cordes_constants(2.0, 2.0).unwrap();
        assert_relative_eq!(c.c1 / 1.01, 1.25, epsilon = 1e-15);
        assert!(c.c2 > 0.0);
        assert!(cordes_constants(2.0, 1.0).is_err());
    }

    #[test]
    fn riccati_examples() {
        assert_relative_eq!(riccati_gamma(2.0, 2.0, 3.7).unwrap(), 1.0);
        assert_relative_eq!(riccati_gamma(4.0, 3.0, 0.2).unwrap(), 0.8, epsilon = 1e-15);
        assert_relative_eq!(riccati_gamma(4.0, 3.0, 9.0).unwrap(), 0.8, epsilon = 1e-15);
        let a = riccati_gamma(4.0, 2.0, 2.0).unwrap();
        let b = riccati_gamma(4.0, 2.0, 4.0).unwrap();
        assert!((a - b).abs() > 0.1);
    }
}
