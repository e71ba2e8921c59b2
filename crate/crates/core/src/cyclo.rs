//! Exact elements of `Q(ω)`, `ω = exp(2πi/p)`.
//!
//! A value is `(Σ_j num[j] ω^j) / den`. Since `1 + ω + ... + ω^{p-1} = 0`,
//! the coefficient vector is only defined modulo the all-ones vector; we pin
//! it down by forcing `num[p-1] = 0` and then dividing out the common gcd with
//! `den > 0`, so structural equality is value equality.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cyclo {
    p: u32,
    num: Vec<BigInt>,
    den: BigInt,
}

impl Cyclo {
    pub fn zero(p: u32) -> Self {
        Cyclo { p, num: vec![BigInt::zero(); p as usize], den: BigInt::one() }
    }

    pub fn one(p: u32) -> Self {
        Self::from_int(p, 1)
    }

    pub fn from_int(p: u32, n: i64) -> Self {
        Self::from_bigint(p, BigInt::from(n))
    }

    pub fn from_bigint(p: u32, n: BigInt) -> Self {
        let mut c = Self::zero(p);
        c.num[0] = n;
        c.normalize();
        c
    }

    pub fn from_rational(p: u32, r: &BigRational) -> Self {
        let mut c = Self::zero(p);
        c.num[0] = r.numer().clone();
        c.den = r.denom().clone();
        c.normalize();
        c
    }

    /// `ω^j`.
    pub fn root(p: u32, j: u32) -> Self {
        let mut c = Self::zero(p);
        c.num[(j % p) as usize] = BigInt::one();
        c.normalize();
        c
    }

    /// `(Σ_j counts[j] ω^j) / den` from a raw (non-canonical) coefficient vector.
    pub fn from_parts(p: u32, num: Vec<BigInt>, den: BigInt) -> Result<Self> {
        if num.len() != p as usize {
            return Err(Error::shape(format!("expected {p} coefficients, got {}", num.len())));
        }
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let mut c = Cyclo { p, num, den };
        c.normalize();
        Ok(c)
    }

    fn normalize(&mut self) {
        let last = self.num[self.p as usize - 1].clone();
        if !last.is_zero() {
            for c in self.num.iter_mut() {
                *c -= &last;
            }
        }
        if self.den.is_negative() {
            self.den = -std::mem::take(&mut self.den);
            for c in self.num.iter_mut() {
                *c = -std::mem::take(c);
            }
        }
        let mut g = self.den.clone();
        for c in &self.num {
            if g.is_one() {
                break;
            }
            g = g.gcd(c);
        }
        if self.num.iter().all(Zero::is_zero) {
            self.den = BigInt::one();
        } else if !g.is_one() {
            for c in self.num.iter_mut() {
                *c /= &g;
            }
            self.den /= &g;
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    /// Canonical numerator coefficients (`num[p-1] = 0`).
    pub fn numerator(&self) -> &[BigInt] {
        &self.num
    }
    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(Zero::is_zero)
    }

    /// Complex conjugation `ω ↦ ω^{-1}`.
    pub fn conj(&self) -> Self {
        let p = self.p as usize;
        let mut num = vec![BigInt::zero(); p];
        for (j, c) in self.num.iter().enumerate() {
            num[(p - j) % p] = c.clone();
        }
        let mut out = Cyclo { p: self.p, num, den: self.den.clone() };
        out.normalize();
        out
    }

    /// Multiplication by `ω^j` (a rotation of the coefficient vector).
    pub fn mul_root(&self, j: u32) -> Self {
        let p = self.p as usize;
        let mut num = vec![BigInt::zero(); p];
        for (i, c) in self.num.iter().enumerate() {
            num[(i + j as usize) % p] = c.clone();
        }
        let mut out = Cyclo { p: self.p, num, den: self.den.clone() };
        out.normalize();
        out
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        let mut out = Cyclo {
            p: self.p,
            num: self.num.iter().map(|c| c * r.numer()).collect(),
            den: &self.den * r.denom(),
        };
        out.normalize();
        out
    }

    /// The value as a rational, if it lies in `Q` (all non-constant coefficients vanish).
    pub fn to_rational(&self) -> Option<BigRational> {
        self.num[1..]
            .iter()
            .all(Zero::is_zero)
            .then(|| BigRational::new(self.num[0].clone(), self.den.clone()))
    }

    pub fn try_rational(&self) -> Result<BigRational> {
        self.to_rational().ok_or(Error::NotRational)
    }

    /// `|z|²`. Real, but rational only for `p <= 3` in general.
    pub fn norm_sq(&self) -> Cyclo {
        self * &self.conj()
    }

    /// Whether the value is fixed by complex conjugation.
    pub fn is_real(&self) -> bool {
        *self == self.conj()
    }

    /// Floating-point value, for display only.
    pub fn to_complex(&self) -> (f64, f64) {
        let den = self.den.to_f64().unwrap_or(f64::INFINITY);
        let (mut re, mut im) = (0.0, 0.0);
        for (j, c) in self.num.iter().enumerate() {
            let a = 2.0 * std::f64::consts::PI * j as f64 / self.p as f64;
            let c = c.to_f64().unwrap_or(f64::NAN);
            re += c * a.cos();
            im += c * a.sin();
        }
        (re / den, im / den)
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.p, other.p, "cyclotomic values over different roots of unity");
    }
}

impl fmt::Debug for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.to_rational() {
            return write!(f, "{r}");
        }
        let terms: Vec<String> = self
            .num
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| match j {
                0 => c.to_string(),
                1 => format!("{c}w"),
                _ => format!("{c}w^{j}"),
            })
            .collect();
        let body = terms.join(" + ");
        if self.den.is_one() {
            write!(f, "{body}")
        } else {
            write!(f, "({body})/{}", self.den)
        }
    }
}

impl Add for &Cyclo {
    type Output = Cyclo;
    fn add(self, rhs: &Cyclo) -> Cyclo {
        self.check(rhs);
        let num = if self.den == rhs.den {
            self.num.iter().zip(&rhs.num).map(|(a, b)| a + b).collect()
        } else {
            self.num.iter().zip(&rhs.num).map(|(a, b)| a * &rhs.den + b * &self.den).collect()
        };
        let den = if self.den == rhs.den { self.den.clone() } else { &self.den * &rhs.den };
        let mut out = Cyclo { p: self.p, num, den };
        out.normalize();
        out
    }
}

impl Add for Cyclo {
    type Output = Cyclo;
    fn add(self, rhs: Cyclo) -> Cyclo {
        &self + &rhs
    }
}

impl AddAssign<&Cyclo> for Cyclo {
    fn add_assign(&mut self, rhs: &Cyclo) {
        *self = &*self + rhs;
    }
}

impl Neg for &Cyclo {
    type Output = Cyclo;
    fn neg(self) -> Cyclo {
        let mut out = self.clone();
        for c in out.num.iter_mut() {
            *c = -std::mem::take(c);
        }
        out
    }
}

impl Neg for Cyclo {
    type Output = Cyclo;
    fn neg(self) -> Cyclo {
        -&self
    }
}

impl Sub for &Cyclo {
    type Output = Cyclo;
    fn sub(self, rhs: &Cyclo) -> Cyclo {
        self + &(-rhs)
    }
}

impl Sub for Cyclo {
    type Output = Cyclo;
    fn sub(self, rhs: Cyclo) -> Cyclo {
        &self - &rhs
    }
}

impl Mul for &Cyclo {
    type Output = Cyclo;
    fn mul(self, rhs: &Cyclo) -> Cyclo {
        self.check(rhs);
        let p = self.p as usize;
        let mut num = vec![BigInt::zero(); p];
        for (i, a) in self.num.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.num.iter().enumerate() {
                if !b.is_zero() {
                    num[(i + j) % p] += a * b;
                }
            }
        }
        let mut out = Cyclo { p: self.p, num, den: &self.den * &rhs.den };
        out.normalize();
        out
    }
}

impl Mul for Cyclo {
    type Output = Cyclo;
    fn mul(self, rhs: Cyclo) -> Cyclo {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn roots_sum_to_zero() {
        for p in [2, 3, 5, 7, 11] {
            let s = (0..p).fold(Cyclo::zero(p), |acc, j| &acc + &Cyclo::root(p, j));
            assert!(s.is_zero());
        }
    }

    #[test]
    fn rational_detection() {
        let w = Cyclo::root(3, 1);
        let z = &w + &w.conj();
        assert_eq!(z.to_rational(), Some(rat(-1, 1)));
        assert_eq!(w.to_rational(), None);
        assert_eq!(w.norm_sq(), Cyclo::one(3));
        let v = &Cyclo::root(7, 5) - &Cyclo::root(7, 6);
        assert!(v.norm_sq().is_real() && v.norm_sq().to_rational().is_none());
        let half = Cyclo::from_rational(5, &rat(3, 6));
        assert_eq!(half.to_rational(), Some(rat(1, 2)));
        assert_eq!(half.denominator(), &BigInt::from(2));
    }

    #[test]
    fn complex_display_values() {
        let (re, im) = Cyclo::root(4 - 1, 1).to_complex();
        assert!((re + 0.5).abs() < 1e-12 && (im - 0.75f64.sqrt()).abs() < 1e-12);
        assert_eq!(Cyclo::root(2, 1).to_string(), "-1");
    }

    fn arb_cyclo(p: u32) -> impl Strategy<Value = Cyclo> {
        (prop::collection::vec(-20i64..20, p as usize), 1i64..12).prop_map(move |(v, d)| {
            Cyclo::from_parts(p, v.into_iter().map(BigInt::from).collect(), d.into()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn ring_laws(a in arb_cyclo(5), b in arb_cyclo(5), c in arb_cyclo(5)) {
            prop_assert_eq!(&(&a + &b) * &c, &(&a * &c) + &(&b * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert!((&a - &a).is_zero());
            prop_assert_eq!((&a * &b).conj(), &a.conj() * &b.conj());
            prop_assert_eq!(a.mul_root(2), &a * &Cyclo::root(5, 2));
        }

        #[test]
        fn norm_matches_float(a in arb_cyclo(7)) {
            let (re, im) = a.to_complex();
            let (nf, im0) = a.norm_sq().to_complex();
            prop_assert!(im0.abs() < 1e-9 * (1.0 + nf));
            prop_assert!((nf - (re * re + im * im)).abs() < 1e-6 * (1.0 + nf));
        }
    }
}
