//! Gaussian rationals: exact complex numbers with rational parts.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// An exact complex scalar `re + im*i` with reduced rational parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Scalar(Complex<BigRational>);

impl Scalar {
    pub fn zero() -> Self {
        Scalar(Complex::new(BigRational::zero(), BigRational::zero()))
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Scalar(Complex::new(BigRational::zero(), BigRational::one()))
    }

    pub fn from_int(n: i64) -> Self {
        Self::real(BigRational::from_integer(BigInt::from(n)))
    }

    /// `p/q`; panics when `q == 0`.
    pub fn ratio(p: i64, q: i64) -> Self {
        Self::real(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn real(re: BigRational) -> Self {
        Scalar(Complex::new(re, BigRational::zero()))
    }

    pub fn imag(im: BigRational) -> Self {
        Scalar(Complex::new(BigRational::zero(), im))
    }

    pub fn new(re: BigRational, im: BigRational) -> Self {
        Scalar(Complex::new(re, im))
    }

    pub fn re(&self) -> &BigRational {
        &self.0.re
    }

    pub fn im(&self) -> &BigRational {
        &self.0.im
    }

    pub fn is_zero(&self) -> bool {
        self.0.re.is_zero() && self.0.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.re.is_one() && self.0.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.0.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Scalar(self.0.conj())
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Scalar(self.0.inv()))
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Scalar::one();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Nearest double-precision complex value.
    pub fn to_f64_pair(&self) -> (f64, f64) {
        (
            self.0.re.to_f64().unwrap_or(f64::NAN),
            self.0.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    /// The real part as a rational, if the scalar is real.
    pub fn as_real(&self) -> Option<&BigRational> {
        self.is_real().then_some(&self.0.re)
    }

    /// Split into a display sign and a magnitude string for term printing.
    ///
    /// The magnitude is `None` when it is exactly one, so the caller can omit it.
    pub(crate) fn sign_and_magnitude(&self) -> (bool, Option<String>) {
        let re = &self.0.re;
        let im = &self.0.im;
        if im.is_zero() {
            let neg = re.is_negative();
            let mag = re.abs();
            if mag.is_one() {
                (neg, None)
            } else {
                (neg, Some(fmt_rational(&mag)))
            }
        } else if re.is_zero() {
            let neg = im.is_negative();
            let mag = im.abs();
            if mag.is_one() {
                (neg, Some("i".to_string()))
            } else {
                (neg, Some(format!("{}*i", fmt_rational(&mag))))
            }
        } else {
            let sign = if im.is_negative() { '-' } else { '+' };
            let mag = im.abs();
            let imag = if mag.is_one() {
                "i".to_string()
            } else {
                format!("{}*i", fmt_rational(&mag))
            };
            (false, Some(format!("({}{}{})", fmt_rational(re), sign, imag)))
        }
    }
}

/// `p` or `p/q` with the sign on the numerator.
pub fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (neg, mag) = self.sign_and_magnitude();
        let mag = mag.unwrap_or_else(|| "1".to_string());
        if neg {
            write!(f, "-{mag}")
        } else {
            write!(f, "{mag}")
        }
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::from_int(n)
    }
}

impl From<BigRational> for Scalar {
    fn from(r: BigRational) -> Self {
        Scalar::real(r)
    }
}

impl From<BigInt> for Scalar {
    fn from(n: BigInt) -> Self {
        Scalar::real(BigRational::from_integer(n))
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        Scalar(&self.0 + &rhs.0)
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        Scalar(&self.0 - &rhs.0)
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        if self.is_real() && rhs.is_real() {
            return Scalar::real(&self.0.re * &rhs.0.re);
        }
        Scalar(&self.0 * &rhs.0)
    }
}

impl Div for &Scalar {
    type Output = Scalar;
    /// Panics on division by zero; use [`Scalar::inv`] to check first.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &Scalar) -> Scalar {
        let inv = rhs.inv().expect("division by zero scalar");
        self * &inv
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0.clone())
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 + rhs.0)
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 - rhs.0)
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        &self * &rhs
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        self.0.re += &rhs.0.re;
        self.0.im += &rhs.0.im;
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, rhs: &Scalar) {
        self.0.re -= &rhs.0.re;
        self.0.im -= &rhs.0.im;
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, rhs: &Scalar) {
        *self = &*self * rhs;
    }
}
