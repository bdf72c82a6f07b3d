//! Exact scalar coefficients: Gaussian rationals times a Laurent monomial in
//! formal parameters (Λ, ξ, g, the template constants c_k, the moments f_k,
//! the form-factor coefficients φ_k, and the rescaling root r = √(1+δZ)).

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

/// A formal parameter carried symbolically in coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Param {
    /// Cutoff scale Λ.
    Lambda,
    /// Gauge parameter ξ.
    Xi,
    /// Coupling constant g.
    Coupling,
    /// Template constant c_k.
    CK(u32),
    /// Moment f_k (the index is the literal subscript, e.g. FM(-2) is f_{-2}).
    FM(i32),
    /// Form-factor coefficient φ_k.
    Phi(u32),
    /// Rescaling root r = √(1+δZ).
    RescaleRoot,
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Lambda => write!(f, "Lambda"),
            Param::Xi => write!(f, "xi"),
            Param::Coupling => write!(f, "g"),
            Param::CK(k) => write!(f, "c{k}"),
            Param::FM(k) => write!(f, "f[{k}]"),
            Param::Phi(k) => write!(f, "phi{k}"),
            Param::RescaleRoot => write!(f, "r"),
        }
    }
}

/// Laurent monomial in the formal parameters: a finite map parameter -> integer
/// exponent. Zero exponents are never stored.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ParamPow(BTreeMap<Param, i32>);

impl ParamPow {
    pub fn unit() -> Self {
        ParamPow::default()
    }

    pub fn of(param: Param, exp: i32) -> Self {
        let mut m = BTreeMap::new();
        if exp != 0 {
            m.insert(param, exp);
        }
        ParamPow(m)
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, param: Param) -> i32 {
        self.0.get(&param).copied().unwrap_or(0)
    }

    pub fn mul(&self, other: &ParamPow) -> ParamPow {
        let mut m = self.0.clone();
        for (&p, &e) in &other.0 {
            let entry = m.entry(p).or_insert(0);
            *entry += e;
            if *entry == 0 {
                m.remove(&p);
            }
        }
        ParamPow(m)
    }

    pub fn inv(&self) -> ParamPow {
        ParamPow(self.0.iter().map(|(&p, &e)| (p, -e)).collect())
    }

    pub fn pow(&self, n: i32) -> ParamPow {
        if n == 0 {
            return ParamPow::unit();
        }
        ParamPow(
            self.0
                .iter()
                .map(|(&p, &e)| (p, e.checked_mul(n).expect("exponent overflow")))
                .collect(),
        )
    }

    /// Substitute `param -> replacement` (a scalar), returning the scalar
    /// factor picked up and the monomial with `param` removed.
    pub fn substitute(&self, param: Param, replacement: &Scalar) -> (Scalar, ParamPow) {
        let e = self.exponent(param);
        if e == 0 {
            return (Scalar::one(), self.clone());
        }
        let mut m = self.0.clone();
        m.remove(&param);
        (replacement.powi(e), ParamPow(m))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Param, i32)> + '_ {
        self.0.iter().map(|(&p, &e)| (p, e))
    }

    /// Numeric evaluation with the given bindings; errors on an unbound parameter.
    pub fn eval(&self, bindings: &BTreeMap<Param, f64>) -> Result<f64, Param> {
        let mut acc = 1.0;
        for (p, e) in self.iter() {
            let v = *bindings.get(&p).ok_or(p)?;
            acc *= v.powi(e);
        }
        Ok(acc)
    }
}

impl fmt::Display for ParamPow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (p, e) in self.iter() {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Exact Gaussian rational a + b·i.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scalar {
    pub re: BigRational,
    pub im: BigRational,
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        Scalar {
            re: BigRational::one(),
            im: BigRational::zero(),
        }
    }

    pub fn i() -> Self {
        Scalar {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Scalar {
            re: BigRational::from_integer(BigInt::from(n)),
            im: BigRational::zero(),
        }
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Scalar {
            re: BigRational::new(BigInt::from(num), BigInt::from(den)),
            im: BigRational::zero(),
        }
    }

    /// b·i with b = num/den.
    pub fn imag_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Scalar {
            re: BigRational::zero(),
            im: BigRational::new(BigInt::from(num), BigInt::from(den)),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        Scalar {
            re: &self.re + &other.re,
            im: &self.im + &other.im,
        }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        Scalar {
            re: &self.re - &other.re,
            im: &self.im - &other.im,
        }
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        Scalar {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn neg(&self) -> Scalar {
        Scalar {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn inv(&self) -> Scalar {
        let norm = &self.re * &self.re + &self.im * &self.im;
        assert!(!norm.is_zero(), "division by zero scalar");
        Scalar {
            re: &self.re / &norm,
            im: -(&self.im / &norm),
        }
    }

    pub fn powi(&self, n: i32) -> Scalar {
        let mut base = if n < 0 { self.inv() } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Scalar::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn scale_int(&self, n: i64) -> Scalar {
        self.mul(&Scalar::from_int(n))
    }

    pub fn to_f64(&self) -> (f64, f64) {
        fn r(x: &BigRational) -> f64 {
            let n = x.numer();
            let d = x.denom();
            // good enough for report rendering; exact work stays rational
            let nf: f64 = n.to_string().parse().unwrap_or(f64::NAN);
            let df: f64 = d.to_string().parse().unwrap_or(f64::NAN);
            nf / df
        }
        (r(&self.re), r(&self.im))
    }
}

fn fmt_rat(x: &BigRational) -> String {
    if x.denom().is_one() {
        format!("{}", x.numer())
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", fmt_rat(&self.re))
        } else if self.re.is_zero() {
            write!(f, "{}i", fmt_rat(&self.im))
        } else {
            let sign = if self.im.is_negative() { "-" } else { "+" };
            write!(f, "({}{}{}i)", fmt_rat(&self.re), sign, fmt_rat(&self.im.abs()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_arithmetic() {
        let i = Scalar::i();
        assert_eq!(i.mul(&i), Scalar::from_int(-1));
        assert_eq!(i.powi(4), Scalar::one());
        let q = Scalar::ratio(3, 4);
        assert_eq!(q.mul(&q.inv()), Scalar::one());
        assert_eq!(Scalar::ratio(-1, 2).powi(-2), Scalar::from_int(4));
    }

    #[test]
    fn param_monomials() {
        let a = ParamPow::of(Param::Xi, -1).mul(&ParamPow::of(Param::Phi(2), 1));
        let b = ParamPow::of(Param::Xi, 1);
        assert_eq!(a.mul(&b), ParamPow::of(Param::Phi(2), 1));
        assert!(a.mul(&a.inv()).is_unit());
        assert_eq!(a.pow(2).exponent(Param::Xi), -2);
    }

    #[test]
    fn param_substitution() {
        let m = ParamPow::of(Param::RescaleRoot, 2);
        let (s, rest) = m.substitute(Param::RescaleRoot, &Scalar::ratio(3, 2));
        assert_eq!(s, Scalar::ratio(9, 4));
        assert!(rest.is_unit());
    }
}
