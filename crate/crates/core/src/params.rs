use crate::error::{Error, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Model parameters: `q` colors, degree `d`, coupling `beta`, external field `field` (B).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params<T = f64> {
    pub q: usize,
    pub d: usize,
    pub beta: T,
    pub field: T,
}

impl<T: Real> Params<T> {
    pub fn new(q: usize, d: usize, beta: T, field: T) -> Result<Self> {
        let p = Params { q, d, beta, field };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 2 {
            return Err(Error::InvalidParams(format!("q = {} < 2", self.q)));
        }
        if self.d < 3 {
            return Err(Error::InvalidParams(format!("d = {} < 3", self.d)));
        }
        if !(self.beta >= T::zero()) || !self.beta.is_finite() {
            return Err(Error::InvalidParams(format!("beta = {}", self.beta)));
        }
        if !(self.field >= T::zero()) || !self.field.is_finite() {
            return Err(Error::InvalidParams(format!("B = {}", self.field)));
        }
        Ok(())
    }

    pub fn with_beta(&self, beta: T) -> Self {
        Params { beta, ..*self }
    }

    pub fn with_field(&self, field: T) -> Self {
        Params { field, ..*self }
    }

    pub fn qf(&self) -> T {
        T::count(self.q)
    }

    pub fn df(&self) -> T {
        T::count(self.d)
    }

    /// 1 - e^{-beta}
    pub fn p_edge(&self) -> T {
        -(-self.beta).exp_m1()
    }

    /// 1 - e^{-B}
    pub fn p_ghost(&self) -> T {
        -(-self.field).exp_m1()
    }

    /// (e^beta - 1)/(e^beta + q - 1), written in e^{-beta} to survive large beta.
    pub fn gamma(&self) -> T {
        let em = (-self.beta).exp();
        let one = T::one();
        (one - em) / (one + (self.qf() - one) * em)
    }
}

impl Params<f64> {
    pub fn f64(q: usize, d: usize, beta: f64, field: f64) -> Result<Self> {
        Self::new(q, d, beta, field)
    }
}

/// Probability vector on the colors that is constant off color 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMeasure<T = f64> {
    pub q: usize,
    pub a: T,
}

impl<T: Real> SymmetricMeasure<T> {
    pub fn new(q: usize, a: T) -> Result<Self> {
        if q < 2 || !(a >= T::zero() && a <= T::one()) {
            return Err(Error::InvalidParams(format!("mass {a} on q = {q} colors")));
        }
        Ok(SymmetricMeasure { q, a })
    }

    pub fn uniform(q: usize) -> Self {
        SymmetricMeasure {
            q,
            a: T::one() / T::count(q),
        }
    }

    pub fn dirac(q: usize) -> Self {
        SymmetricMeasure { q, a: T::one() }
    }

    /// Inverse of [`Self::r`]: a = 1/(1 + (q-1)e^{-r}). `r = +inf` gives the Dirac mass.
    pub fn from_r(q: usize, r: T) -> Self {
        let qm1 = T::count(q - 1);
        let a = if r == T::infinity() {
            T::one()
        } else {
            T::one() / (T::one() + qm1 * (-r).exp())
        };
        SymmetricMeasure { q, a }
    }

    /// Mass on each color other than 1.
    pub fn c(&self) -> T {
        (T::one() - self.a) / T::count(self.q - 1)
    }

    /// Mass on a 0-based color.
    pub fn mass(&self, color: usize) -> T {
        if color == 0 {
            self.a
        } else {
            self.c()
        }
    }

    pub fn to_vec(&self) -> Vec<T> {
        (0..self.q).map(|k| self.mass(k)).collect()
    }

    /// log(nu(1)/nu(2)); infinite at the Dirac mass.
    pub fn r(&self) -> T {
        let qm1 = T::count(self.q - 1);
        (qm1 * self.a).ln() - (T::one() - self.a).ln()
    }

    /// (q a - 1)/(q - 1)
    pub fn b(&self) -> T {
        let q = T::count(self.q);
        (q * self.a - T::one()) / (q - T::one())
    }

    pub fn sup_dist(&self, other: &Self) -> T {
        (self.a - other.a).abs().max((self.c() - other.c()).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let p = Params::f64(3, 3, 0.0, 0.0).unwrap();
        assert_eq!(p.p_edge(), 0.0);
        assert_eq!(p.p_ghost(), 0.0);
        assert_eq!(p.gamma(), 0.0);
        let p = Params::f64(3, 3, 1.0, 0.5).unwrap();
        let e = 1f64.exp();
        assert!((p.gamma() - (e - 1.0) / (e + 2.0)).abs() < 1e-15);
        assert!((p.p_ghost() - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        assert!(p.with_beta(800.0).gamma() <= 1.0);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(Params::f64(1, 3, 1.0, 0.0).is_err());
        assert!(Params::f64(3, 2, 1.0, 0.0).is_err());
        assert!(Params::f64(3, 3, -1.0, 0.0).is_err());
        assert!(Params::f64(3, 3, 1.0, -0.1).is_err());
        assert!(Params::f64(3, 3, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn a_r_round_trip() {
        for q in [2usize, 3, 30] {
            for i in 1..100 {
                let a = i as f64 / 100.0;
                let m = SymmetricMeasure::new(q, a).unwrap();
                let back = SymmetricMeasure::<f64>::from_r(q, m.r());
                assert!((back.a - a).abs() < 1e-14, "q={q} a={a}");
            }
        }
    }

    #[test]
    fn b_extremes() {
        let u = SymmetricMeasure::<f64>::uniform(3);
        assert!(u.b().abs() < 1e-15);
        assert_eq!(SymmetricMeasure::<f64>::dirac(3).b(), 1.0);
        assert_eq!(SymmetricMeasure::<f64>::dirac(4).r(), f64::INFINITY);
        let v = SymmetricMeasure::new(4, 0.1).unwrap();
        assert!((v.to_vec().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
