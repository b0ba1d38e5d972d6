//! Parameters, the two relay nonlinearities and the exponential potential
//! transform `u = exp(lambda * x)`.

use crate::error::{RelayError, Result};
use crate::scalar::{int, one, Scalar};

/// Model parameters.
///
/// `a` is the decay slope of the relay; `lambda` only affects the potential
/// transform and never the `x` dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<S> {
    a: S,
    lambda: f64,
}

impl<S: Scalar> Params<S> {
    pub fn new(a: S) -> Result<Self> {
        if a <= S::zero() {
            return Err(RelayError::InvalidParameter(format!("a must be positive, got {a}")));
        }
        Ok(Self { a, lambda: 1.0 })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(RelayError::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn a(&self) -> &S {
        &self.a
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Slope taken while the delayed state is positive.
    pub fn decay_slope(&self) -> S {
        -self.a.clone()
    }
}

/// `R(x)`: `1` for `x <= 0`, `-a` for `x > 0`.
pub fn relay_r<S: Scalar>(x: &S, p: &Params<S>) -> S {
    if *x > S::zero() {
        p.decay_slope()
    } else {
        one()
    }
}

/// `F(u)`: `1` for `0 < u <= 1`, `-a` for `u > 1`.
pub fn relay_f<S: Scalar>(u: &S, p: &Params<S>) -> Result<S> {
    if *u <= S::zero() {
        return Err(RelayError::Domain(format!("membrane potential must be positive, got {u}")));
    }
    Ok(if *u > int(1) { p.decay_slope() } else { one() })
}

/// `u = exp(lambda * x)`.
pub fn to_potential<S: Scalar>(x: &S, p: &Params<S>) -> Result<f64> {
    let u = (p.lambda * x.to_f64()).exp();
    if !u.is_finite() {
        return Err(RelayError::Overflow(format!(
            "exp({} * {}) is not representable",
            p.lambda, x
        )));
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use proptest::prelude::*;

    fn pf(a: f64) -> Params<f64> {
        Params::new(a).unwrap()
    }

    #[test]
    fn relay_r_branches() {
        assert_eq!(relay_r(&-5.0, &pf(1.0)), 1.0);
        assert_eq!(relay_r(&0.0, &pf(1.0)), 1.0);
        assert_eq!(relay_r(&0.1, &pf(2.0)), -2.0);
    }

    #[test]
    fn relay_f_branches() {
        assert_eq!(relay_f(&1.0, &pf(1.0)).unwrap(), 1.0);
        assert_eq!(relay_f(&2.5, &pf(3.0)).unwrap(), -3.0);
        assert!(matches!(relay_f(&0.0, &pf(1.0)), Err(RelayError::Domain(_))));
        assert!(relay_f(&-1.0, &pf(1.0)).is_err());
    }

    #[test]
    fn exact_boundary() {
        let p = Params::new(Rational::from_ratio(1, 2)).unwrap();
        assert_eq!(relay_r(&Rational::from_int(0), &p), Rational::from_int(1));
        assert_eq!(relay_f(&Rational::from_int(1), &p).unwrap(), Rational::from_int(1));
    }

    #[test]
    fn potential_threshold_and_overflow() {
        let p = pf(1.0).with_lambda(7.0).unwrap();
        assert_eq!(to_potential(&0.0, &p).unwrap(), 1.0);
        let big = pf(1.0).with_lambda(1e6).unwrap();
        assert!(matches!(to_potential(&1.0, &big), Err(RelayError::Overflow(_))));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(Params::new(0.0).is_err());
        assert!(Params::new(-1.0).is_err());
        assert!(pf(1.0).with_lambda(0.0).is_err());
    }

    proptest! {
        #[test]
        fn potential_preserves_relay(x in -20.0f64..20.0, lambda in 0.01f64..10.0, a in 0.05f64..20.0) {
            let p = pf(a).with_lambda(lambda).unwrap();
            let u = to_potential(&x, &p).unwrap();
            prop_assert_eq!(relay_f(&u, &p).unwrap(), relay_r(&x, &p));
            prop_assert_eq!(u > 1.0, x > 0.0);
        }
    }
}
