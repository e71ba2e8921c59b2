//! Matrices over `F_q`, canonical subspaces, and the counting formulas.
//!
//! A map `σ ∈ L(V, W)` with `V = F_q^m`, `W = F_q^n` is an `n × m` matrix.
//! Matrices are indexed by reading their entry encodings row-major as base-`q`
//! digits, first entry most significant; all enumerations use this order.

use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};
use serde::Serialize;

use crate::budget::{checked_pow, Budget};
use crate::error::{Error, Result};
use crate::gf::Field;

#[derive(Clone)]
pub struct Mat {
    field: Field,
    n: usize,
    m: usize,
    data: Vec<u16>,
}

impl PartialEq for Mat {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.m == other.m && self.data == other.data && self.field == other.field
    }
}
impl Eq for Mat {}

impl Hash for Mat {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (self.n, self.m, &self.data).hash(state);
    }
}

impl PartialOrd for Mat {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Same-shape matrices compare in enumeration order.
impl Ord for Mat {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.n, self.m, &self.data).cmp(&(other.n, other.m, &other.data))
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_literal())
    }
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_literal())
    }
}

impl Serialize for Mat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_literal())
    }
}

impl Mat {
    pub fn zeros(field: &Field, n: usize, m: usize) -> Mat {
        Mat { field: field.clone(), n, m, data: vec![0; n * m] }
    }

    pub fn identity(field: &Field, n: usize) -> Mat {
        let mut a = Mat::zeros(field, n, n);
        for i in 0..n {
            a.data[i * n + i] = 1;
        }
        a
    }

    pub fn from_data(field: &Field, n: usize, m: usize, data: Vec<u16>) -> Result<Mat> {
        if data.len() != n * m {
            return Err(Error::shape(format!("{} entries for a {n}x{m} matrix", data.len())));
        }
        if data.iter().any(|&x| x as u32 >= field.q()) {
            return Err(Error::InvalidField(format!("entry outside GF({})", field.q())));
        }
        Ok(Mat { field: field.clone(), n, m, data })
    }

    pub fn from_rows(field: &Field, rows: &[Vec<u16>]) -> Result<Mat> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::shape("ragged rows"));
        }
        Mat::from_data(field, rows.len(), m, rows.concat())
    }

    pub fn from_fn(field: &Field, n: usize, m: usize, mut f: impl FnMut(usize, usize) -> u16) -> Mat {
        let mut data = Vec::with_capacity(n * m);
        for i in 0..n {
            for j in 0..m {
                data.push(f(i, j));
            }
        }
        Mat { field: field.clone(), n, m, data }
    }

    /// Matrix whose columns are the given vectors (each of length `n`).
    pub fn from_cols(field: &Field, n: usize, cols: &[Vec<u16>]) -> Mat {
        Mat::from_fn(field, n, cols.len(), |i, j| cols[j][i])
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn nrows(&self) -> usize {
        self.n
    }
    pub fn ncols(&self) -> usize {
        self.m
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.m)
    }
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u16 {
        self.data[i * self.m + j]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u16) {
        self.data[i * self.m + j] = v;
    }
    pub fn data(&self) -> &[u16] {
        &self.data
    }
    pub fn row(&self, i: usize) -> &[u16] {
        &self.data[i * self.m..(i + 1) * self.m]
    }
    pub fn col(&self, j: usize) -> Vec<u16> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }
    pub fn rows(&self) -> Vec<Vec<u16>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(&self.field, self.m, self.n, |i, j| self.get(j, i))
    }

    fn same_shape(&self, other: &Mat) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        if self.shape() != other.shape() {
            return Err(Error::shape(format!(
                "{}x{} vs {}x{}",
                self.n, self.m, other.n, other.m
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        self.same_shape(other)?;
        let f = &self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.add(a, b)).collect();
        Ok(Mat { field: f.clone(), n: self.n, m: self.m, data })
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        self.same_shape(other)?;
        let f = &self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.sub(a, b)).collect();
        Ok(Mat { field: f.clone(), n: self.n, m: self.m, data })
    }

    pub fn neg(&self) -> Mat {
        let data = self.data.iter().map(|&a| self.field.neg(a)).collect();
        Mat { field: self.field.clone(), n: self.n, m: self.m, data }
    }

    pub fn scale(&self, c: u16) -> Mat {
        let data = self.data.iter().map(|&a| self.field.mul(a, c)).collect();
        Mat { field: self.field.clone(), n: self.n, m: self.m, data }
    }

    pub fn mul(&self, other: &Mat) -> Result<Mat> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        if self.m != other.n {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.n, self.m, other.n, other.m
            )));
        }
        let f = &self.field;
        Ok(Mat::from_fn(f, self.n, other.m, |i, j| {
            (0..self.m).fold(0, |acc, k| f.add(acc, f.mul(self.get(i, k), other.get(k, j))))
        }))
    }

    /// `σ v`.
    pub fn apply(&self, v: &[u16]) -> Vec<u16> {
        debug_assert_eq!(v.len(), self.m);
        (0..self.n).map(|i| dot(&self.field, self.row(i), v)).collect()
    }

    /// `aᵀ σ`, i.e. the functional `σ*(a)` as a row vector.
    pub fn apply_left(&self, a: &[u16]) -> Vec<u16> {
        debug_assert_eq!(a.len(), self.n);
        let f = &self.field;
        (0..self.m)
            .map(|j| (0..self.n).fold(0, |acc, i| f.add(acc, f.mul(a[i], self.get(i, j)))))
            .collect()
    }

    /// `Trace(self · a)` for `self` of shape `m × n` and `a` of shape `n × m`.
    pub fn trace_product(&self, a: &Mat) -> u16 {
        let f = &self.field;
        let mut acc = 0;
        for i in 0..self.n {
            for j in 0..self.m {
                acc = f.add(acc, f.mul(self.get(i, j), a.get(j, i)));
            }
        }
        acc
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Mat {
        let (r0, c0) = (rows.start, cols.start);
        Mat::from_fn(&self.field, rows.len(), cols.len(), |i, j| self.get(r0 + i, c0 + j))
    }

    pub fn hstack(&self, other: &Mat) -> Result<Mat> {
        if self.n != other.n {
            return Err(Error::shape("hstack needs equal row counts"));
        }
        Ok(Mat::from_fn(&self.field, self.n, self.m + other.m, |i, j| {
            if j < self.m {
                self.get(i, j)
            } else {
                other.get(i, j - self.m)
            }
        }))
    }

    pub fn vstack(&self, other: &Mat) -> Result<Mat> {
        if self.m != other.m {
            return Err(Error::shape("vstack needs equal column counts"));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Mat { field: self.field.clone(), n: self.n + other.n, m: self.m, data })
    }

    /// Reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (Mat, Vec<usize>) {
        let mut data = self.data.clone();
        let pivots = rref_in_place(&self.field, &mut data, self.n, self.m);
        (Mat { field: self.field.clone(), n: self.n, m: self.m, data }, pivots)
    }

    pub fn rank(&self) -> usize {
        if self.field.q() == 2 && self.m <= 64 {
            let mut rows: Vec<u64> = (0..self.n).map(|i| pack_gf2(self.row(i))).collect();
            return gf2_rank(&mut rows);
        }
        if self.field.q() == 2 && self.n <= 64 {
            return self.transpose().rank();
        }
        self.rref().1.len()
    }

    pub fn is_invertible(&self) -> bool {
        self.n == self.m && self.rank() == self.n
    }

    pub fn det(&self) -> Result<u16> {
        if self.n != self.m {
            return Err(Error::shape("determinant of a non-square matrix"));
        }
        let f = &self.field;
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = 1u16;
        for c in 0..n {
            let Some(r) = (c..n).find(|&r| a[r * n + c] != 0) else {
                return Ok(0);
            };
            if r != c {
                for j in 0..n {
                    a.swap(r * n + j, c * n + j);
                }
                det = f.neg(det);
            }
            let piv = a[c * n + c];
            det = f.mul(det, piv);
            let inv = f.inv(piv).expect("nonzero pivot");
            for r in c + 1..n {
                let factor = f.mul(a[r * n + c], inv);
                if factor != 0 {
                    for j in c..n {
                        a[r * n + j] = f.sub(a[r * n + j], f.mul(factor, a[c * n + j]));
                    }
                }
            }
        }
        Ok(det)
    }

    pub fn inverse(&self) -> Option<Mat> {
        if self.n != self.m {
            return None;
        }
        let n = self.n;
        let aug = self.hstack(&Mat::identity(&self.field, n)).ok()?;
        let (r, piv) = aug.rref();
        if piv.len() < n || piv[n - 1] >= n {
            return None;
        }
        Some(r.submatrix(0..n, n..2 * n))
    }

    /// `A^e` for square `A`.
    pub fn pow(&self, mut e: u64) -> Mat {
        let mut base = self.clone();
        let mut acc = Mat::identity(&self.field, self.n);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).expect("square");
            }
            base = base.mul(&base).expect("square");
            e >>= 1;
        }
        acc
    }

    /// `ker σ ⊆ F_q^m`.
    pub fn kernel(&self) -> Subspace {
        let (r, pivots) = self.rref();
        let f = &self.field;
        let free: Vec<usize> = (0..self.m).filter(|c| !pivots.contains(c)).collect();
        let basis: Vec<Vec<u16>> = free
            .iter()
            .map(|&fc| {
                let mut v = vec![0u16; self.m];
                v[fc] = 1;
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = f.neg(r.get(row, fc));
                }
                v
            })
            .collect();
        Subspace::span(f, self.m, &basis)
    }

    /// Column space `im σ ⊆ F_q^n`.
    pub fn image(&self) -> Subspace {
        self.transpose().row_space()
    }

    pub fn row_space(&self) -> Subspace {
        Subspace::span(&self.field, self.m, &self.rows())
    }

    pub fn index(&self) -> u64 {
        let q = self.field.q() as u64;
        self.data.iter().fold(0, |acc, &x| acc * q + x as u64)
    }

    pub fn from_index(field: &Field, n: usize, m: usize, mut idx: u64) -> Mat {
        let q = field.q() as u64;
        let mut data = vec![0u16; n * m];
        for slot in data.iter_mut().rev() {
            *slot = (idx % q) as u16;
            idx /= q;
        }
        Mat { field: field.clone(), n, m, data }
    }

    /// `q=<q>;n=<n>;m=<m>;rows=<r1>;<r2>;...`; entries are digit strings for
    /// `q <= 10`, otherwise comma-separated integers.
    pub fn to_literal(&self) -> String {
        let q = self.field.q();
        let rows: Vec<String> = (0..self.n)
            .map(|i| {
                let row = self.row(i).iter().map(|x| x.to_string());
                if q <= 10 {
                    row.collect::<String>()
                } else {
                    row.collect::<Vec<_>>().join(",")
                }
            })
            .collect();
        format!("q={q};n={};m={};rows={}", self.n, self.m, rows.join(";"))
    }

    /// Parses a literal, using the built-in modulus for its `q`.
    pub fn parse_literal(s: &str) -> Result<Mat> {
        let q = literal_header(s)?.0;
        Mat::parse_literal_in(&Field::gf(q)?, s)
    }

    /// Parses a literal whose `q` must match `field`.
    pub fn parse_literal_in(field: &Field, s: &str) -> Result<Mat> {
        let (q, n, m, rows) = literal_header(s)?;
        if q != field.q() {
            return Err(Error::Parse(format!("literal over GF({q}) given GF({})", field.q())));
        }
        let rows: Vec<&str> = if n == 0 { Vec::new() } else { rows.split(';').collect() };
        if rows.len() != n {
            return Err(Error::Parse(format!("expected {n} rows, found {}", rows.len())));
        }
        let mut data = Vec::with_capacity(n * m);
        for row in rows {
            let entries: Vec<u32> = if row.contains(',') || q > 10 {
                row.split(',')
                    .filter(|e| !e.is_empty())
                    .map(|e| e.trim().parse::<u32>().map_err(|e| Error::Parse(e.to_string())))
                    .collect::<Result<_>>()?
            } else {
                row.chars()
                    .map(|c| c.to_digit(10).ok_or_else(|| Error::Parse(format!("bad digit {c:?}"))))
                    .collect::<Result<_>>()?
            };
            if entries.len() != m {
                return Err(Error::Parse(format!("row {row:?} should have {m} entries")));
            }
            for e in entries {
                if e >= q {
                    return Err(Error::Parse(format!("entry {e} out of range for q = {q}")));
                }
                data.push(e as u16);
            }
        }
        Mat::from_data(field, n, m, data)
    }
}

fn literal_header(s: &str) -> Result<(u32, usize, usize, &str)> {
    let s = s.trim();
    let bad = || Error::Parse(format!("malformed matrix literal {s:?}"));
    let (head, rows) = s.split_once(";rows=").ok_or_else(bad)?;
    let mut q = None;
    let mut n = None;
    let mut m = None;
    for part in head.split(';') {
        let (k, v) = part.split_once('=').ok_or_else(bad)?;
        let v: usize = v.trim().parse().map_err(|_| bad())?;
        match k.trim() {
            "q" => q = Some(v as u32),
            "n" => n = Some(v),
            "m" => m = Some(v),
            _ => return Err(bad()),
        }
    }
    Ok((q.ok_or_else(bad)?, n.ok_or_else(bad)?, m.ok_or_else(bad)?, rows))
}

#[inline]
pub fn dot(f: &Field, a: &[u16], b: &[u16]) -> u16 {
    a.iter().zip(b).fold(0, |acc, (&x, &y)| f.add(acc, f.mul(x, y)))
}

pub fn vec_add(f: &Field, a: &[u16], b: &[u16]) -> Vec<u16> {
    a.iter().zip(b).map(|(&x, &y)| f.add(x, y)).collect()
}

pub fn vec_sub(f: &Field, a: &[u16], b: &[u16]) -> Vec<u16> {
    a.iter().zip(b).map(|(&x, &y)| f.sub(x, y)).collect()
}

pub fn vec_scale(f: &Field, c: u16, a: &[u16]) -> Vec<u16> {
    a.iter().map(|&x| f.mul(c, x)).collect()
}

/// Base-`q` index of a vector, first coordinate most significant.
pub fn vec_index(q: u32, v: &[u16]) -> usize {
    v.iter().fold(0, |acc, &x| acc * q as usize + x as usize)
}

pub fn vec_from_index(q: u32, len: usize, mut idx: usize) -> Vec<u16> {
    let mut v = vec![0u16; len];
    for slot in v.iter_mut().rev() {
        *slot = (idx % q as usize) as u16;
        idx /= q as usize;
    }
    v
}

/// Packs a GF(2) row into a bitmask, column `j` at bit `j`.
#[inline]
pub fn pack_gf2(row: &[u16]) -> u64 {
    row.iter().enumerate().fold(0, |acc, (j, &x)| acc | ((x as u64 & 1) << j))
}

/// Rank of bit-packed GF(2) rows; the rows are destroyed.
pub fn gf2_rank(rows: &mut [u64]) -> usize {
    let mut rank = 0;
    for i in 0..rows.len() {
        let r = rows[i];
        if r == 0 {
            continue;
        }
        let low = r & r.wrapping_neg();
        for row in rows[i + 1..].iter_mut() {
            if *row & low != 0 {
                *row ^= r;
            }
        }
        rank += 1;
    }
    rank
}

/// In-place RREF of a row-major `n × m` array. Returns pivot columns.
pub(crate) fn rref_in_place(f: &Field, a: &mut [u16], n: usize, m: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for c in 0..m {
        if row == n {
            break;
        }
        let Some(r) = (row..n).find(|&r| a[r * m + c] != 0) else {
            continue;
        };
        if r != row {
            for j in 0..m {
                a.swap(r * m + j, row * m + j);
            }
        }
        let inv = f.inv(a[row * m + c]).expect("nonzero pivot");
        if inv != 1 {
            for j in c..m {
                a[row * m + j] = f.mul(a[row * m + j], inv);
            }
        }
        for r in 0..n {
            if r == row {
                continue;
            }
            let factor = a[r * m + c];
            if factor != 0 {
                for j in c..m {
                    let t = f.mul(factor, a[row * m + j]);
                    a[r * m + j] = f.sub(a[r * m + j], t);
                }
            }
        }
        pivots.push(c);
        row += 1;
    }
    pivots
}

/// A subspace of `F_q^ambient` in canonical form: its basis is the nonzero rows of an RREF.
#[derive(Clone)]
pub struct Subspace {
    field: Field,
    ambient: usize,
    basis: Vec<Vec<u16>>,
}

impl PartialEq for Subspace {
    fn eq(&self, other: &Self) -> bool {
        self.ambient == other.ambient && self.basis == other.basis && self.field == other.field
    }
}
impl Eq for Subspace {}

impl Hash for Subspace {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (self.ambient, &self.basis).hash(state);
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "span{:?} <= F^{}", self.basis, self.ambient)
    }
}

impl Subspace {
    pub fn zero(field: &Field, ambient: usize) -> Self {
        Subspace { field: field.clone(), ambient, basis: Vec::new() }
    }

    pub fn full(field: &Field, ambient: usize) -> Self {
        let basis = (0..ambient)
            .map(|i| {
                let mut v = vec![0; ambient];
                v[i] = 1;
                v
            })
            .collect();
        Subspace { field: field.clone(), ambient, basis }
    }

    pub fn span(field: &Field, ambient: usize, vecs: &[Vec<u16>]) -> Self {
        let mut data: Vec<u16> = vecs.concat();
        debug_assert_eq!(data.len(), vecs.len() * ambient);
        let rank = rref_in_place(field, &mut data, vecs.len(), ambient).len();
        let basis = data.chunks(ambient.max(1)).take(rank).map(<[u16]>::to_vec).collect();
        Subspace { field: field.clone(), ambient, basis }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn ambient(&self) -> usize {
        self.ambient
    }
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
    pub fn basis(&self) -> &[Vec<u16>] {
        &self.basis
    }
    /// Pivot column of each basis row.
    pub fn pivots(&self) -> Vec<usize> {
        self.basis.iter().map(|r| r.iter().position(|&x| x != 0).unwrap()).collect()
    }
    pub fn basis_mat(&self) -> Mat {
        Mat { field: self.field.clone(), n: self.dim(), m: self.ambient, data: self.basis.concat() }
    }

    pub fn contains(&self, v: &[u16]) -> bool {
        let f = &self.field;
        let mut r = v.to_vec();
        for (row, piv) in self.basis.iter().zip(self.pivots()) {
            let c = r[piv];
            if c != 0 {
                for (x, &b) in r.iter_mut().zip(row) {
                    *x = f.sub(*x, f.mul(c, b));
                }
            }
        }
        r.iter().all(|&x| x == 0)
    }

    pub fn contains_space(&self, other: &Subspace) -> bool {
        other.basis.iter().all(|v| self.contains(v))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut vecs = self.basis.clone();
        vecs.extend(other.basis.iter().cloned());
        Subspace::span(&self.field, self.ambient, &vecs)
    }

    /// `{y : y·x = 0 for all x in self}`.
    pub fn annihilator(&self) -> Subspace {
        if self.basis.is_empty() {
            return Subspace::full(&self.field, self.ambient);
        }
        self.basis_mat().kernel()
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        self.annihilator().sum(&other.annihilator()).annihilator()
    }

    /// Coordinates `c` such that `Σ c_i basis_i = v`, if `v` lies in the span.
    pub fn coordinates(&self, v: &[u16]) -> Option<Vec<u16>> {
        let pivots = self.pivots();
        let coords: Vec<u16> = pivots.iter().map(|&p| v[p]).collect();
        (self.combine(&coords) == v).then_some(coords)
    }

    /// `Σ c_i basis_i`.
    pub fn combine(&self, coeffs: &[u16]) -> Vec<u16> {
        let f = &self.field;
        let mut out = vec![0u16; self.ambient];
        for (c, row) in coeffs.iter().zip(&self.basis) {
            if *c != 0 {
                for (o, &b) in out.iter_mut().zip(row) {
                    *o = f.add(*o, f.mul(*c, b));
                }
            }
        }
        out
    }

    /// All `q^dim` elements, ordered by their coordinate tuples in base `q`.
    pub fn elements(&self) -> Vec<Vec<u16>> {
        let q = self.field.q();
        let count = (q as usize).pow(self.dim() as u32);
        (0..count).map(|i| self.combine(&vec_from_index(q, self.dim(), i))).collect()
    }

    pub fn nonzero_elements(&self) -> Vec<Vec<u16>> {
        self.elements().into_iter().skip(1).collect()
    }
}

/// All `d`-dimensional subspaces of `F_q^m`, in canonical order: pivot sets in
/// lexicographic order, then the free RREF entries as a base-`q` counter.
pub fn subspaces(field: &Field, m: usize, d: usize) -> Vec<Subspace> {
    let q = field.q();
    let mut out = Vec::new();
    if d > m {
        return out;
    }
    for pivots in combinations(m, d) {
        // free slots: (row i, column c) with c > pivot_i and c not a pivot
        let slots: Vec<(usize, usize)> = pivots
            .iter()
            .enumerate()
            .flat_map(|(i, &p)| (p + 1..m).filter(|c| !pivots.contains(c)).map(move |c| (i, c)))
            .collect();
        let count = (q as usize).pow(slots.len() as u32);
        for code in 0..count {
            let vals = vec_from_index(q, slots.len(), code);
            let mut basis: Vec<Vec<u16>> = pivots
                .iter()
                .map(|&p| {
                    let mut v = vec![0u16; m];
                    v[p] = 1;
                    v
                })
                .collect();
            for (&(i, c), &x) in slots.iter().zip(&vals) {
                basis[i][c] = x;
            }
            out.push(Subspace { field: field.clone(), ambient: m, basis });
        }
    }
    out
}

/// `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// `𝔞(A1, A2) = ker(A1 − A2)`.
pub fn agreement(a1: &Mat, a2: &Mat) -> Result<Subspace> {
    Ok(a1.sub(a2)?.kernel())
}

pub fn agreement_dim(a1: &Mat, a2: &Mat) -> Result<usize> {
    Ok(a1.ncols() - a1.sub(a2)?.rank())
}

/// Dimension of `𝔞(σ1*, σ2*) ⊆ W*`, i.e. `n − rank(A1 − A2)`.
pub fn dual_agreement_dim(a1: &Mat, a2: &Mat) -> Result<usize> {
    Ok(a1.nrows() - a1.sub(a2)?.rank())
}

/// Agreement dimension from the block reduction: `dim{z ∈ ker D0 : (A1' − A2' + F0'D0') z ∈ col(F0)}`.
///
/// Shapes: `A1', A2'` are `N × M`, `D0` is `(l−u) × M`, `D0'` is `u × M`, `F0` is
/// `N × (k−u)`, `F0'` is `N × u`.
pub fn block_agreement_dim(a1p: &Mat, a2p: &Mat, d0: &Mat, f0: &Mat, d0p: &Mat, f0p: &Mat) -> Result<usize> {
    let (big_n, big_m) = a1p.shape();
    if a2p.shape() != (big_n, big_m) {
        return Err(Error::shape("A1' and A2' differ in shape"));
    }
    if d0.ncols() != big_m || d0p.ncols() != big_m {
        return Err(Error::shape("D0 and D0' must have as many columns as A1'"));
    }
    if f0.nrows() != big_n || f0p.nrows() != big_n {
        return Err(Error::shape("F0 and F0' must have as many rows as A1'"));
    }
    if f0p.ncols() != d0p.nrows() {
        return Err(Error::shape("F0' columns must match D0' rows"));
    }
    if d0.rank() != d0.nrows() {
        return Err(Error::PreconditionViolated("rows of D0 are linearly dependent".into()));
    }
    if f0.rank() != f0.ncols() {
        return Err(Error::PreconditionViolated("columns of F0 are linearly dependent".into()));
    }
    let f = a1p.field();
    let t = a1p.sub(a2p)?.add(&f0p.mul(d0p)?)?;
    let kernel = if d0.nrows() == 0 { Subspace::full(f, big_m) } else { d0.kernel() };
    let k_mat = Mat::from_cols(f, big_m, kernel.basis());
    let tk = t.mul(&k_mat)?;
    let joined = tk.hstack(f0)?;
    Ok(kernel.dim() + f0.ncols() - joined.rank())
}

// ---- counting ----

fn big_pow(q: u32, e: usize) -> BigInt {
    Pow::pow(BigInt::from(q), e)
}

/// Number of `d`-dimensional subspaces of `F_q^m`.
pub fn gaussian_binomial(m: usize, d: usize, q: u32) -> Result<BigInt> {
    if d > m {
        return Err(Error::domain(format!("d = {d} exceeds m = {m}")));
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 1..=d {
        num *= big_pow(q, m - i + 1) - 1;
        den *= big_pow(q, d - i + 1) - 1;
    }
    Ok(num / den)
}

/// Number of rank-`d` matrices in `M(n, m)`.
pub fn count_rank_d(n: usize, m: usize, d: usize, q: u32) -> Result<BigInt> {
    if d > m.min(n) {
        return Err(Error::domain(format!("rank {d} impossible in {n}x{m}")));
    }
    let mut prod = BigInt::one();
    for i in 1..=d {
        prod *= big_pow(q, d) - big_pow(q, i - 1);
    }
    Ok(gaussian_binomial(m, d, q)? * gaussian_binomial(n, d, q)? * prod)
}

/// `m_{q,t}(n) = ∏_{i=1}^{n−t} (q^n − q^{i+t−1})`.
pub fn m_qt(n: usize, q: u32, t: usize) -> Result<BigInt> {
    if t < 1 || t > n {
        return Err(Error::domain(format!("need 1 <= t <= n, got t = {t}, n = {n}")));
    }
    Ok((1..=n - t).fold(BigInt::one(), |acc, i| acc * (big_pow(q, n) - big_pow(q, i + t - 1))))
}

pub fn gl_order(n: usize, q: u32) -> BigInt {
    (0..n).fold(BigInt::one(), |acc, i| acc * (big_pow(q, n) - big_pow(q, i)))
}

/// `φ(m, n, t) = |I_t(V, W)| / |L(V, W)|`, where `I_t` are the maps with kernel of dimension `t`.
pub fn phi(m: usize, n: usize, t: usize, q: u32) -> Result<BigRational> {
    if t > m || n + t < m {
        return Err(Error::domain(format!("phi undefined for m = {m}, n = {n}, t = {t}")));
    }
    Ok(BigRational::new(count_rank_d(n, m, m - t, q)?, big_pow(q, n * m)))
}

/// Number of `d`-dimensional subspaces of `F_q^n` meeting a fixed `k`-dimensional subspace trivially.
pub fn count_subspaces_avoiding(n: usize, k: usize, d: usize, q: u32) -> Result<BigInt> {
    if k + d > n {
        return Err(Error::domain(format!("k + d = {} exceeds n = {n}", k + d)));
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 1..=d {
        num *= big_pow(q, n) - big_pow(q, k + i - 1);
        den *= big_pow(q, d) - big_pow(q, i - 1);
    }
    Ok(num / den)
}

/// Serializable counting result: `{"kind", "params", "value"}` with a decimal-string value.
#[derive(Clone, Debug, Serialize)]
pub struct CountReport {
    pub kind: String,
    pub params: serde_json::Map<String, serde_json::Value>,
    pub value: String,
}

impl CountReport {
    pub fn new(kind: &str, params: &[(&str, usize)], value: impl ToString) -> Self {
        let params = params.iter().map(|(k, v)| (k.to_string(), serde_json::Value::from(*v))).collect();
        CountReport { kind: kind.into(), params, value: value.to_string() }
    }
}

// ---- enumeration ----

#[derive(Clone, Debug)]
pub enum Space {
    All { n: usize, m: usize },
    Rank { n: usize, m: usize, d: usize },
    Gl { n: usize },
    Sl { n: usize },
}

impl Space {
    fn shape(&self) -> (usize, usize) {
        match *self {
            Space::All { n, m } | Space::Rank { n, m, .. } => (n, m),
            Space::Gl { n } | Space::Sl { n } => (n, n),
        }
    }
}

/// Lazy scan over the indices of `M(n, m)`, with a membership filter.
#[derive(Clone)]
pub struct MatIter {
    field: Field,
    space: Space,
    next: u64,
    end: u64,
}

impl MatIter {
    /// Restricts the scan to indices in `range` (for splitting across workers).
    pub fn with_range(mut self, range: std::ops::Range<u64>) -> Self {
        self.next = range.start.max(self.next);
        self.end = range.end.min(self.end);
        self
    }
    pub fn scan_len(&self) -> u64 {
        self.end.saturating_sub(self.next)
    }
}

impl Iterator for MatIter {
    type Item = Mat;
    fn next(&mut self) -> Option<Mat> {
        let (n, m) = self.space.shape();
        while self.next < self.end {
            let a = Mat::from_index(&self.field, n, m, self.next);
            self.next += 1;
            let keep = match self.space {
                Space::All { .. } => true,
                Space::Rank { d, .. } => a.rank() == d,
                Space::Gl { .. } => a.is_invertible(),
                Space::Sl { .. } => a.det().map_or(false, |x| x == 1),
            };
            if keep {
                return Some(a);
            }
        }
        None
    }
}

/// Enumerates a matrix space in index order. Fails if the underlying scan exceeds the budget.
pub fn enumerate(field: &Field, space: Space, budget: &Budget) -> Result<MatIter> {
    let (n, m) = space.shape();
    if let Space::Rank { d, .. } = space {
        if d > n.min(m) {
            return Err(Error::domain(format!("rank {d} impossible in {n}x{m}")));
        }
    }
    let total = checked_pow(field.q() as u64, n * m);
    let end = budget.check_items("matrix scan", total)?;
    Ok(MatIter { field: field.clone(), space, next: 0, end })
}

/// Lexicographically ordered solutions of an affine system over `F_q`.
///
/// Pivots are taken on the least significant variables, so every pivot variable
/// is a function of more significant free variables only, and counting the free
/// variables in base `q` visits solutions in lexicographic order.
#[derive(Clone)]
pub struct AffineSolutions {
    field: Field,
    nvars: usize,
    free: Vec<usize>,
    /// `(pivot var, rhs, [(free var, coeff)])`: `x_p = rhs − Σ coeff·x_f`.
    pivots: Vec<(usize, u16, Vec<(usize, u16)>)>,
    counter: Vec<u16>,
    done: bool,
}

impl AffineSolutions {
    /// Solves `rows · x = rhs`; returns `None` for an inconsistent system.
    pub fn new(field: &Field, nvars: usize, rows: &[Vec<u16>], rhs: &[u16]) -> Option<Self> {
        let r = rows.len();
        let w = nvars + 1;
        // reversed variable order so that pivots land on the least significant variables
        let mut a = vec![0u16; r * w];
        for (i, row) in rows.iter().enumerate() {
            for (k, &c) in row.iter().enumerate() {
                a[i * w + (nvars - 1 - k)] = c;
            }
            a[i * w + nvars] = rhs[i];
        }
        let pivcols = rref_in_place(field, &mut a, r, w);
        if pivcols.last() == Some(&nvars) {
            return None;
        }
        let pivset: Vec<usize> = pivcols.iter().map(|&c| nvars - 1 - c).collect();
        let free: Vec<usize> = (0..nvars).filter(|v| !pivset.contains(v)).collect();
        let pivots = pivcols
            .iter()
            .enumerate()
            .map(|(row, &c)| {
                let deps = (c + 1..nvars)
                    .filter(|&cc| a[row * w + cc] != 0 && !pivcols.contains(&cc))
                    .map(|cc| (nvars - 1 - cc, a[row * w + cc]))
                    .collect();
                (nvars - 1 - c, a[row * w + nvars], deps)
            })
            .collect();
        Some(AffineSolutions {
            field: field.clone(),
            nvars,
            counter: vec![0; free.len()],
            free,
            pivots,
            done: false,
        })
    }

    pub fn free_vars(&self) -> &[usize] {
        &self.free
    }

    /// Number of solutions, `q^{#free}`.
    pub fn count(&self) -> BigInt {
        big_pow(self.field.q(), self.free.len())
    }

    /// The solution with the given free-variable assignment (most significant first).
    pub fn solution(&self, free_vals: &[u16]) -> Vec<u16> {
        let f = &self.field;
        let mut x = vec![0u16; self.nvars];
        for (&v, &val) in self.free.iter().zip(free_vals) {
            x[v] = val;
        }
        for (pv, rhs, deps) in &self.pivots {
            let mut val = *rhs;
            for &(fv, c) in deps {
                val = f.sub(val, f.mul(c, x[fv]));
            }
            x[*pv] = val;
        }
        x
    }
}

impl Iterator for AffineSolutions {
    type Item = Vec<u16>;
    fn next(&mut self) -> Option<Vec<u16>> {
        if self.done {
            return None;
        }
        let out = self.solution(&self.counter);
        let q = self.field.q() as u16;
        let mut i = self.counter.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.counter[i] += 1;
            if self.counter[i] < q {
                break;
            }
            self.counter[i] = 0;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gf(q: u32) -> Field {
        Field::gf(q).unwrap()
    }

    fn mat(q: u32, rows: &[&[u16]]) -> Mat {
        Mat::from_rows(&gf(q), &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn rank_examples() {
        let f = gf(2);
        assert_eq!(Mat::zeros(&f, 3, 2).rank(), 0);
        assert_eq!(Mat::identity(&f, 4).rank(), 4);
        assert_eq!(mat(2, &[&[1, 1], &[1, 1]]).rank(), 1);
        assert_eq!(mat(3, &[&[1, 2], &[2, 1]]).rank(), 1);
    }

    #[test]
    fn kernel_image_examples() {
        let f = gf(2);
        let z = Mat::zeros(&f, 2, 2);
        assert_eq!(z.kernel(), Subspace::full(&f, 2));
        assert_eq!(z.image(), Subspace::zero(&f, 2));
        assert_eq!(Mat::identity(&f, 2).kernel(), Subspace::zero(&f, 2));
        let a = mat(2, &[&[1, 0], &[0, 0]]);
        assert_eq!(a.image(), Subspace::span(&f, 2, &[vec![1, 0]]));
        assert_eq!(a.kernel(), Subspace::span(&f, 2, &[vec![0, 1]]));
    }

    #[test]
    fn agreement_examples() {
        let f = gf(2);
        let i = Mat::identity(&f, 2);
        assert_eq!(agreement(&i, &i).unwrap().dim(), 2);
        let s = mat(2, &[&[0, 1], &[1, 0]]);
        assert_eq!(agreement(&i, &s).unwrap(), Subspace::span(&f, 2, &[vec![1, 1]]));
        assert_eq!(agreement(&i, &Mat::zeros(&f, 2, 2)).unwrap().dim(), 0);
        assert!(matches!(agreement(&i, &Mat::zeros(&f, 2, 3)), Err(Error::ShapeMismatch(_))));
        let d = mat(2, &[&[1, 0], &[0, 1], &[0, 0]]);
        assert_eq!(dual_agreement_dim(&d, &Mat::zeros(&f, 3, 2)).unwrap(), 1);
        assert_eq!(dual_agreement_dim(&d, &d).unwrap(), 3);
    }

    #[test]
    fn counting_examples() {
        let b = |x: i64| BigInt::from(x);
        assert_eq!(gaussian_binomial(5, 0, 3).unwrap(), b(1));
        assert_eq!(gaussian_binomial(4, 2, 2).unwrap(), b(35));
        assert_eq!(gaussian_binomial(3, 1, 3).unwrap(), b(13));
        assert!(gaussian_binomial(2, 3, 2).is_err());
        assert_eq!(count_rank_d(2, 2, 0, 2).unwrap(), b(1));
        assert_eq!(count_rank_d(2, 2, 1, 2).unwrap(), b(9));
        assert_eq!(count_rank_d(2, 2, 2, 2).unwrap(), b(6));
        assert_eq!(m_qt(2, 2, 1).unwrap(), b(2));
        assert_eq!(m_qt(3, 2, 1).unwrap(), b(24));
        assert_eq!(m_qt(4, 3, 4).unwrap(), b(1));
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(phi(1, 1, 0, 2).unwrap(), r(1, 2));
        assert_eq!(phi(1, 1, 0, 3).unwrap(), r(2, 3));
        assert_eq!(phi(2, 2, 2, 2).unwrap(), r(1, 16));
        assert_eq!(count_subspaces_avoiding(4, 2, 0, 2).unwrap(), b(1));
        assert_eq!(count_subspaces_avoiding(2, 1, 1, 2).unwrap(), b(2));
        assert_eq!(count_subspaces_avoiding(3, 1, 1, 2).unwrap(), b(6));
    }

    #[test]
    fn enumeration_examples() {
        let budget = Budget::default();
        let all: Vec<Mat> = enumerate(&gf(2), Space::All { n: 1, m: 1 }, &budget).unwrap().collect();
        assert_eq!(all, vec![mat(2, &[&[0]]), mat(2, &[&[1]])]);
        assert_eq!(enumerate(&gf(2), Space::Gl { n: 2 }, &budget).unwrap().count(), 6);
        assert_eq!(enumerate(&gf(3), Space::Sl { n: 2 }, &budget).unwrap().count(), 24);
        let tiny = Budget::items(10);
        assert!(matches!(
            enumerate(&gf(2), Space::All { n: 2, m: 2 }, &tiny),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn literal_round_trip() {
        let a = mat(3, &[&[1, 2, 0], &[0, 0, 1]]);
        assert_eq!(a.to_literal(), "q=3;n=2;m=3;rows=120;001");
        assert_eq!(Mat::parse_literal(&a.to_literal()).unwrap(), a);
        assert_eq!(Mat::parse_literal("q=3;n=2;m=3;rows=1,2,0;0,0,1").unwrap(), a);
        let b = Mat::from_data(&gf(11), 1, 2, vec![10, 3]).unwrap();
        assert_eq!(b.to_literal(), "q=11;n=1;m=2;rows=10,3");
        assert_eq!(Mat::parse_literal(&b.to_literal()).unwrap(), b);
        assert!(Mat::parse_literal("q=2;n=1;m=2;rows=12").is_err());
        assert!(Mat::parse_literal("q=2;n=2;m=1;rows=1").is_err());
    }

    #[test]
    fn subspace_counts_match_gaussian_binomials() {
        for q in [2, 3, 4] {
            for m in 0..=4usize {
                if (q as usize).pow(m as u32) > 256 {
                    continue;
                }
                for d in 0..=m {
                    let subs = subspaces(&gf(q), m, d);
                    assert_eq!(BigInt::from(subs.len()), gaussian_binomial(m, d, q).unwrap());
                    let set: std::collections::HashSet<_> = subs.iter().cloned().collect();
                    assert_eq!(set.len(), subs.len());
                    for s in &subs {
                        assert_eq!(&Subspace::span(&gf(q), m, s.basis()), s);
                    }
                }
            }
        }
    }

    #[test]
    fn determinant_matches_invertibility() {
        let f = gf(3);
        for a in enumerate(&f, Space::All { n: 2, m: 2 }, &Budget::default()).unwrap() {
            let det = a.det().unwrap();
            let expect = f.sub(f.mul(a.get(0, 0), a.get(1, 1)), f.mul(a.get(0, 1), a.get(1, 0)));
            assert_eq!(det, expect);
            assert_eq!(det != 0, a.is_invertible());
        }
    }

    #[test]
    fn affine_solutions_are_lexicographic() {
        let f = gf(3);
        // x0 + x2 = 1 and x1 + 2 x3 = 0 over F_3^4
        let rows = vec![vec![1, 0, 1, 0], vec![0, 1, 0, 2]];
        let sols: Vec<Vec<u16>> = AffineSolutions::new(&f, 4, &rows, &[1, 0]).unwrap().collect();
        assert_eq!(sols.len(), 9);
        let mut sorted = sols.clone();
        sorted.sort();
        assert_eq!(sols, sorted);
        for s in &sols {
            assert_eq!(f.add(s[0], s[2]), 1);
            assert_eq!(f.add(s[1], f.mul(2, s[3])), 0);
        }
        assert!(AffineSolutions::new(&f, 2, &[vec![1, 1], vec![2, 2]], &[1, 1]).is_none());
    }

    #[test]
    fn block_agreement_trivial_cases() {
        let f = gf(2);
        let a = mat(2, &[&[1, 0], &[1, 1]]);
        let e = |r, c| Mat::zeros(&f, r, c);
        assert_eq!(block_agreement_dim(&a, &a, &e(0, 2), &e(2, 0), &e(0, 2), &e(2, 0)).unwrap(), 2);
        let b = mat(2, &[&[0, 1], &[1, 1]]);
        let id = Mat::identity(&f, 2);
        assert_eq!(block_agreement_dim(&a, &b, &e(0, 2), &id, &e(0, 2), &e(2, 0)).unwrap(), 2);
        let dep = mat(2, &[&[1, 1], &[1, 1]]);
        assert!(matches!(
            block_agreement_dim(&a, &b, &dep, &e(2, 0), &e(0, 2), &e(2, 0)),
            Err(Error::PreconditionViolated(_))
        ));
    }

    fn arb_mat(q: u32, n: usize, m: usize) -> impl Strategy<Value = Mat> {
        prop::collection::vec(0..q as u16, n * m)
            .prop_map(move |d| Mat::from_data(&Field::gf(q).unwrap(), n, m, d).unwrap())
    }

    proptest! {
        #[test]
        fn rank_nullity(a in arb_mat(3, 3, 4), b in arb_mat(4, 2, 3), c in arb_mat(2, 5, 7)) {
            for x in [&a, &b, &c] {
                prop_assert_eq!(x.rank() + x.kernel().dim(), x.ncols());
                prop_assert_eq!(x.image().dim(), x.rank());
                prop_assert_eq!(x.rank(), x.transpose().rank());
                prop_assert_eq!(x.rank(), x.rref().1.len());
            }
        }

        #[test]
        fn kernel_vectors_are_killed(a in arb_mat(5, 3, 4)) {
            for v in a.kernel().elements() {
                prop_assert!(a.apply(&v).iter().all(|&x| x == 0));
            }
        }

        #[test]
        fn intersection_dimension_formula(a in arb_mat(2, 3, 6), b in arb_mat(2, 2, 6)) {
            let (s, t) = (a.row_space(), b.row_space());
            prop_assert_eq!(s.intersect(&t).dim() + s.sum(&t).dim(), s.dim() + t.dim());
            for v in s.intersect(&t).elements() {
                prop_assert!(s.contains(&v) && t.contains(&v));
            }
        }

        #[test]
        fn index_round_trip(a in arb_mat(3, 2, 3)) {
            prop_assert_eq!(Mat::from_index(a.field(), 2, 3, a.index()), a);
        }
    }
}
