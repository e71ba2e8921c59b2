//! Arithmetic in `F_q = F_{p^s}`.
//!
//! Elements are encoded as integers in `[0, q)`: the coefficient vector
//! `(c_0, ..., c_{s-1})` of the residue polynomial (constant term first) is read
//! as base-`p` digits, `c_0` least significant. For prime `q` this is simply the
//! residue mod `p`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cyclo::Cyclo;
use crate::error::{Error, Result};

/// Largest field order supported.
pub const MAX_Q: u32 = 4096;

/// Conway polynomials for every prime power `q <= 64` with `s >= 2`,
/// as `(p, s, coefficients constant term first)`.
const CONWAY: &[(u32, u32, &[u32])] = &[
    (2, 2, &[1, 1, 1]),
    (2, 3, &[1, 1, 0, 1]),
    (2, 4, &[1, 1, 0, 0, 1]),
    (2, 5, &[1, 0, 1, 0, 0, 1]),
    (2, 6, &[1, 1, 0, 1, 1, 0, 1]),
    (3, 2, &[2, 2, 1]),
    (3, 3, &[1, 2, 0, 1]),
    (5, 2, &[2, 4, 1]),
    (7, 2, &[3, 6, 1]),
];

/// Conway polynomials `x - g` for primes `p <= 64`, `g` the least primitive root.
const CONWAY_PRIME: &[(u32, u32)] = &[
    (2, 1),
    (3, 2),
    (5, 2),
    (7, 3),
    (11, 2),
    (13, 2),
    (17, 3),
    (19, 2),
    (23, 5),
    (29, 2),
    (31, 3),
    (37, 2),
    (41, 6),
    (43, 3),
    (47, 5),
    (53, 2),
    (59, 2),
    (61, 2),
];

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Splits `q = p^s`, or `None` if `q` is not a prime power.
pub fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q % d == 0)?;
    let (mut rest, mut s) = (q, 0);
    while rest % p == 0 {
        rest /= p;
        s += 1;
    }
    (rest == 1).then_some((p, s))
}

/// Serializable description of `F_{p^s}`: JSON `{"p": .., "s": .., "modulus": [..]}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    pub s: u32,
    /// Monic irreducible polynomial over `F_p`, constant term first, length `s + 1`.
    pub modulus: Vec<u32>,
}

impl FieldSpec {
    /// Validates primality, degree, monicity and irreducibility.
    pub fn new(p: u32, s: u32, modulus: Vec<u32>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidField(format!("{p} is not prime")));
        }
        if s == 0 {
            return Err(Error::InvalidField("exponent must be positive".into()));
        }
        let q = (p as u64).checked_pow(s).filter(|&q| q <= MAX_Q as u64);
        if q.is_none() {
            return Err(Error::InvalidField(format!("{p}^{s} exceeds {MAX_Q}")));
        }
        if modulus.len() != s as usize + 1 || modulus[s as usize] != 1 {
            return Err(Error::InvalidField("modulus must be monic of degree s".into()));
        }
        if modulus.iter().any(|&c| c >= p) {
            return Err(Error::InvalidField("modulus coefficients must lie in [0, p)".into()));
        }
        if !poly_irreducible(&modulus, p) {
            return Err(Error::InvalidField("modulus is reducible".into()));
        }
        Ok(FieldSpec { p, s, modulus })
    }

    /// The field of order `q` with its Conway modulus.
    pub fn conway(q: u32) -> Result<Self> {
        let (p, s) =
            prime_power(q).ok_or_else(|| Error::InvalidField(format!("{q} is not a prime power")))?;
        if s == 1 {
            let g = match CONWAY_PRIME.iter().find(|(pp, _)| *pp == p) {
                Some(&(_, g)) => g,
                None => least_primitive_root(p),
            };
            return FieldSpec::new(p, 1, vec![(p - g) % p, 1]);
        }
        let coeffs = CONWAY
            .iter()
            .find(|(pp, ss, _)| *pp == p && *ss == s)
            .map(|(_, _, c)| c.to_vec())
            .ok_or_else(|| {
                Error::InvalidField(format!("no built-in modulus for q = {q}; pass one explicitly"))
            })?;
        FieldSpec::new(p, s, coeffs)
    }

    pub fn q(&self) -> u32 {
        self.p.pow(self.s)
    }
}

fn least_primitive_root(p: u32) -> u32 {
    if p == 2 {
        return 1;
    }
    let order = p - 1;
    let factors: Vec<u32> = (2..=order).filter(|d| order % d == 0 && is_prime(*d)).collect();
    (2..p)
        .find(|&g| factors.iter().all(|f| mod_pow(g, order / f, p) != 1))
        .expect("every prime has a primitive root")
}

fn mod_pow(b: u32, mut e: u32, m: u32) -> u32 {
    let mut acc = 1u64;
    let mut base = b as u64 % m as u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m as u64;
        }
        base = base * base % m as u64;
        e >>= 1;
    }
    acc as u32
}

// ---- polynomials over F_p (coefficients constant term first) ----

fn poly_trim(a: &mut Vec<u32>) {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
}

fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let db = b.len() - 1;
    while r.len() > db && !(r.len() == 1 && r[0] == 0) {
        let shift = r.len() - 1 - db;
        // divisors are monic
        let factor = r[r.len() - 1];
        for (i, &bc) in b.iter().enumerate() {
            let idx = i + shift;
            r[idx] = (r[idx] + p - (factor * bc) % p) % p;
        }
        r.pop();
        poly_trim(&mut r);
    }
    r
}

/// Trial division against every monic polynomial of degree `1..=deg/2`.
fn poly_irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for code in 0..count {
            let mut g = Vec::with_capacity(d + 1);
            let mut c = code;
            for _ in 0..d {
                g.push((c % p as u64) as u32);
                c /= p as u64;
            }
            g.push(1);
            let r = poly_rem(f, &g, p);
            if r.iter().all(|&x| x == 0) {
                return false;
            }
        }
    }
    true
}

struct Tables {
    spec: FieldSpec,
    q: u32,
    /// `exp[i] = g^i` for a fixed primitive element `g`, `i in [0, q-1)`.
    exp: Vec<u16>,
    log: Vec<u16>,
    add: Option<Vec<u16>>,
    neg: Vec<u16>,
    trace: Vec<u16>,
    /// `τ(x·y)` for `q <= 64`, row-major.
    trace_mul: Option<Vec<u8>>,
}

/// Runtime arithmetic context for one [`FieldSpec`]. Cheap to clone.
#[derive(Clone)]
pub struct Field(Arc<Tables>);

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}
impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.q())
    }
}

impl Field {
    pub fn new(spec: FieldSpec) -> Self {
        let (p, s) = (spec.p, spec.s as usize);
        let q = spec.q();
        let poly_mul = |a: u32, b: u32| -> u32 {
            let (da, db) = (digits(a, p, s), digits(b, p, s));
            let mut prod = vec![0u32; 2 * s];
            for i in 0..s {
                for j in 0..s {
                    prod[i + j] = (prod[i + j] + da[i] * db[j]) % p;
                }
            }
            undigits(&poly_rem(&prod, &spec.modulus, p), p)
        };
        let order = q - 1;
        let mut exp = Vec::new();
        let mut log = vec![0u16; q as usize];
        for g in 1..q {
            exp.clear();
            let mut x = 1u32;
            let mut ok = true;
            for i in 0..order {
                if i > 0 && x == 1 {
                    ok = false;
                    break;
                }
                exp.push(x as u16);
                x = poly_mul(x, g);
            }
            if ok && x == 1 {
                break;
            }
        }
        for (i, &e) in exp.iter().enumerate() {
            log[e as usize] = i as u16;
        }
        let add_digits = |a: u32, b: u32| -> u32 {
            let (da, db) = (digits(a, p, s), digits(b, p, s));
            let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
            undigits(&sum, p)
        };
        let neg: Vec<u16> = (0..q)
            .map(|a| undigits(&digits(a, p, s).iter().map(|c| (p - c) % p).collect::<Vec<_>>(), p) as u16)
            .collect();
        let add = (q <= 256).then(|| {
            let mut t = vec![0u16; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    t[(a * q + b) as usize] = add_digits(a, b) as u16;
                }
            }
            t
        });
        let field = Field(Arc::new(Tables {
            spec: spec.clone(),
            q,
            exp,
            log,
            add,
            neg,
            trace: Vec::new(),
            trace_mul: None,
        }));
        // τ(x) = x + x^p + ... + x^{p^{s-1}}
        let trace: Vec<u16> = (0..q)
            .map(|x| {
                let mut acc = 0u16;
                let mut y = x as u16;
                for _ in 0..s {
                    acc = field.add(acc, y);
                    y = field.pow(y, p as u64);
                }
                debug_assert!((acc as u32) < p, "trace must land in the prime field");
                acc
            })
            .collect();
        let trace_mul = (q <= 64).then(|| {
            let mut t = vec![0u8; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    t[(a * q + b) as usize] = trace[field.mul(a as u16, b as u16) as usize] as u8;
                }
            }
            t
        });
        let mut tables = Arc::try_unwrap(field.0).unwrap_or_else(|_| unreachable!());
        tables.trace = trace;
        tables.trace_mul = trace_mul;
        Field(Arc::new(tables))
    }

    /// Shorthand for `Field::new(FieldSpec::conway(q)?)`.
    pub fn gf(q: u32) -> Result<Self> {
        Ok(Field::new(FieldSpec::conway(q)?))
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.0.spec
    }
    pub fn q(&self) -> u32 {
        self.0.q
    }
    pub fn p(&self) -> u32 {
        self.0.spec.p
    }
    pub fn s(&self) -> u32 {
        self.0.spec.s
    }

    #[inline]
    pub fn add(&self, a: u16, b: u16) -> u16 {
        match &self.0.add {
            Some(t) => t[a as usize * self.0.q as usize + b as usize],
            None => {
                let (p, s) = (self.p(), self.s() as usize);
                let (da, db) = (digits(a as u32, p, s), digits(b as u32, p, s));
                let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                undigits(&sum, p) as u16
            }
        }
    }
    #[inline]
    pub fn neg(&self, a: u16) -> u16 {
        self.0.neg[a as usize]
    }
    #[inline]
    pub fn sub(&self, a: u16, b: u16) -> u16 {
        self.add(a, self.neg(b))
    }
    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        let t = &self.0;
        let order = t.q as usize - 1;
        t.exp[(t.log[a as usize] as usize + t.log[b as usize] as usize) % order]
    }
    pub fn inv(&self, a: u16) -> Option<u16> {
        if a == 0 {
            return None;
        }
        let t = &self.0;
        let order = t.q as usize - 1;
        Some(t.exp[(order - t.log[a as usize] as usize) % order])
    }
    pub fn div(&self, a: u16, b: u16) -> Option<u16> {
        self.inv(b).map(|bi| self.mul(a, bi))
    }
    pub fn pow(&self, a: u16, e: u64) -> u16 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let t = &self.0;
        let order = t.q as u64 - 1;
        t.exp[((t.log[a as usize] as u64 * (e % order)) % order) as usize]
    }
    /// The absolute trace `τ(x)`, returned as an integer in `[0, p)`.
    #[inline]
    pub fn trace(&self, a: u16) -> u16 {
        self.0.trace[a as usize]
    }
    /// `τ(a·b)` in `[0, p)`.
    #[inline]
    pub fn trace_mul(&self, a: u16, b: u16) -> u16 {
        match &self.0.trace_mul {
            Some(t) => t[a as usize * self.0.q as usize + b as usize] as u16,
            None => self.trace(self.mul(a, b)),
        }
    }
    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> u16 {
        n.rem_euclid(self.p() as i64) as u16
    }
    /// A fixed generator of `F_q^×` (the element whose powers index the log tables).
    pub fn generator(&self) -> u16 {
        if self.q() == 2 {
            1
        } else {
            self.0.exp[1]
        }
    }
    pub fn coeffs(&self, a: u16) -> Vec<u32> {
        digits(a as u32, self.p(), self.s() as usize)
    }
    pub fn from_coeffs(&self, c: &[u32]) -> Result<u16> {
        if c.len() != self.s() as usize || c.iter().any(|&x| x >= self.p()) {
            return Err(Error::InvalidField("coefficient vector out of range".into()));
        }
        Ok(undigits(c, self.p()) as u16)
    }

    pub fn elem(&self, value: u16) -> Result<Fq> {
        if value as u32 >= self.q() {
            return Err(Error::InvalidField(format!("{value} is not an element of GF({})", self.q())));
        }
        Ok(Fq { field: self.clone(), value })
    }
}

fn digits(mut a: u32, p: u32, s: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(s);
    for _ in 0..s {
        out.push(a % p);
        a /= p;
    }
    out
}

fn undigits(d: &[u32], p: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &c| acc * p + c)
}

/// A field element bound to its field, for checked arithmetic at API boundaries.
#[derive(Clone, PartialEq, Eq)]
pub struct Fq {
    field: Field,
    value: u16,
}

impl fmt::Debug for Fq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@GF({})", self.value, self.field.q())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl Fq {
    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn value(&self) -> u16 {
        self.value
    }
    pub fn coeffs(&self) -> Vec<u32> {
        self.field.coeffs(self.value)
    }
    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn arith(&self, other: &Fq, op: ArithOp) -> Result<Fq> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        let f = &self.field;
        let value = match op {
            ArithOp::Add => f.add(self.value, other.value),
            ArithOp::Sub => f.sub(self.value, other.value),
            ArithOp::Mul => f.mul(self.value, other.value),
            ArithOp::Div => f.div(self.value, other.value).ok_or(Error::DivisionByZero)?,
        };
        Ok(Fq { field: f.clone(), value })
    }

    pub fn inv(&self) -> Result<Fq> {
        let value = self.field.inv(self.value).ok_or(Error::DivisionByZero)?;
        Ok(Fq { field: self.field.clone(), value })
    }

    /// `τ(x) ∈ F_p`, as an integer in `[0, p)`.
    pub fn trace(&self) -> u32 {
        self.field.trace(self.value) as u32
    }
}

/// `ω^j` for `ω = exp(2πi/p)`, exactly, in `Z[x]/Φ_p`.
pub fn char_root(p: u32, j: u32) -> Cyclo {
    Cyclo::root(p, j % p)
}
