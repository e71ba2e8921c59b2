//! Exact numbers of the form `c · q^{e/4}` with `c` rational and `e` an integer.
//!
//! Several thresholds (`q^{r²/4}`, `q^{(3k/4-1)d·max(m,n)}`) are irrational in
//! general. Comparisons are done exactly by raising both sides to the fourth power.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QPow {
    pub coef: BigRational,
    pub q: u32,
    /// Exponent of `q`, in quarters.
    pub quarters: i64,
}

fn q_pow(q: u32, e: u64) -> BigInt {
    Pow::pow(BigInt::from(q), e)
}

impl QPow {
    pub fn rational(q: u32, coef: BigRational) -> Self {
        QPow { coef, q, quarters: 0 }
    }

    /// `q^{quarters/4}`.
    pub fn power(q: u32, quarters: i64) -> Self {
        QPow { coef: BigRational::one(), q, quarters }
    }

    pub fn mul(&self, other: &QPow) -> QPow {
        assert_eq!(self.q, other.q);
        QPow { coef: &self.coef * &other.coef, q: self.q, quarters: self.quarters + other.quarters }
    }

    pub fn scale(&self, r: &BigRational) -> QPow {
        QPow { coef: &self.coef * r, q: self.q, quarters: self.quarters }
    }

    /// `self` as `(num, den)` with the fourth power `self^4 = num/den` exact.
    fn fourth(&self) -> BigRational {
        let c4 = Pow::pow(&self.coef, 4u32);
        if self.quarters >= 0 {
            c4 * BigRational::from_integer(q_pow(self.q, self.quarters as u64))
        } else {
            c4 / BigRational::from_integer(q_pow(self.q, (-self.quarters) as u64))
        }
    }

    /// Exact comparison; both sides must share `q`.
    pub fn cmp_exact(&self, other: &QPow) -> Ordering {
        assert_eq!(self.q, other.q);
        let (sa, sb) = (self.coef.signum(), other.coef.signum());
        if sa != sb {
            return sa.cmp(&sb);
        }
        let (a, b) = (self.fourth(), other.fourth());
        if sa.is_negative() {
            b.cmp(&a)
        } else {
            a.cmp(&b)
        }
    }

    pub fn cmp_rational(&self, r: &BigRational) -> Ordering {
        self.cmp_exact(&QPow::rational(self.q, r.clone()))
    }

    pub fn is_zero(&self) -> bool {
        self.coef.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        let c = self.coef.to_f64().unwrap_or(f64::NAN);
        c * (self.q as f64).powf(self.quarters as f64 / 4.0)
    }

    /// The exact rational value when the exponent is a multiple of four.
    pub fn to_rational(&self) -> Option<BigRational> {
        (self.quarters % 4 == 0).then(|| {
            let e = self.quarters / 4;
            let base = BigRational::from_integer(q_pow(self.q, e.unsigned_abs()));
            if e >= 0 {
                &self.coef * base
            } else {
                &self.coef / base
            }
        })
    }
}

impl fmt::Display for QPow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.to_rational() {
            return write!(f, "{r}");
        }
        write!(f, "{}*{}^({}/4)", self.coef, self.q, self.quarters)
    }
}

impl Serialize for QPow {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn compares_irrational_powers() {
        // 2^{1/4} ≈ 1.189 lies strictly between 1 and 6/5
        let x = QPow::power(2, 1);
        assert_eq!(x.cmp_rational(&r(1, 1)), Ordering::Greater);
        assert_eq!(x.cmp_rational(&r(6, 5)), Ordering::Less);
        assert_eq!(QPow::power(3, 8).to_rational(), Some(r(9, 1)));
        assert_eq!(QPow::power(3, -4).cmp_rational(&r(1, 3)), Ordering::Equal);
        let eps = QPow::power(2, -4 * 3 + 1);
        assert!((eps.to_f64() - 2f64.powf(-3.0 + 0.25)).abs() < 1e-12);
    }

    #[test]
    fn products_and_signs() {
        let a = QPow::power(2, 3).scale(&r(-1, 1));
        let b = QPow::power(2, 1);
        assert_eq!(a.cmp_exact(&b), Ordering::Less);
        assert_eq!(b.mul(&QPow::power(2, 3)).to_rational(), Some(r(2, 1)));
        assert_eq!(a.cmp_exact(&QPow::power(2, 1).scale(&r(-1, 1))), Ordering::Less);
    }
}
