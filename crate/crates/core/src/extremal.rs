//! Extremal constructions on `GL(n, q)`: canonical fixing families, Singer cycles,
//! the linear-derangement count behind the stability argument, and exhaustive
//! searches for large `(t−1)`-intersection-free families.
//!
//! The extremal theorems are asymptotic in `n`; anything computed here at small `n`
//! is reported as exploratory data, never as confirmation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::budget::{checked_pow, Budget};
use crate::error::{Error, Result};
use crate::families::{Family, Restriction};
use crate::gf::Field;
use crate::graph::{maximum_independent_sets_seeded, Graph};
use crate::matspace::{
    agreement_dim, count_subspaces_avoiding, enumerate, gaussian_binomial, gf2_rank, gl_order, m_qt, subspaces,
    vec_from_index, vec_index, Mat, Space, Subspace,
};
use crate::report::{status_of, Report, Status};
use crate::spectra::{hoffman_bound, spectrum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Column,
    Row,
}

fn unit(n: usize, i: usize) -> Vec<u16> {
    let mut v = vec![0u16; n];
    v[i] = 1;
    v
}

fn check_nt(n: usize, t: usize) -> Result<()> {
    if t == 0 || t > n {
        return Err(Error::domain(format!("need 1 <= t <= n, got t = {t}, n = {n}")));
    }
    Ok(())
}

fn qpow(q: u32, e: usize) -> BigInt {
    Pow::pow(BigInt::from(q), e)
}

/// The restriction `σ(e_i) = e_i` for `i < t`.
fn fixing(field: &Field, n: usize, t: usize) -> Restriction {
    let cols = (0..t).map(|i| (unit(n, i), unit(n, i))).collect();
    Restriction::new(field, n, n, cols, vec![]).expect("consistent")
}

/// Invertible maps fixing `e_1..e_t` (column side), or their transposes (row side).
pub fn canonical_family(field: &Field, n: usize, t: usize, side: Side, budget: &Budget) -> Result<Family> {
    check_nt(n, t)?;
    let chart = fixing(field, n, t).chart()?;
    let total = chart.len(budget)?;
    let members: Vec<Mat> = (0..total)
        .into_par_iter()
        .map(|i| chart.map_index(i))
        .filter(Mat::is_invertible)
        .map(|a| if side == Side::Row { a.transpose() } else { a })
        .collect();
    Family::new(field, n, n, members, None)
}

/// The canonical column family intersected with `SL(n, q)`.
pub fn sl_family(field: &Field, n: usize, t: usize, budget: &Budget) -> Result<(Family, Report)> {
    let gl = canonical_family(field, n, t, Side::Column, budget)?;
    let members: Vec<Mat> = gl.members().iter().filter(|a| a.det().ok() == Some(1)).cloned().collect();
    let fam = Family::new(field, n, n, members, None)?;
    let bound = BigRational::new(m_qt(n, field.q(), t)?, BigInt::from(field.q() - 1));
    let size = BigRational::from_integer(fam.len().into());
    let report = Report::new("sl canonical family size = m_qt / (q - 1)", &size, &bound, status_of(size == bound))
        .param("q", field.q())
        .param("n", n)
        .param("t", t);
    Ok((fam, report))
}

// ---------------------------------------------------------------------------
// Singer cycles

/// A Singer subgroup: multiplication by a generator of `F_{q^n}^×` in the power basis of `modulus`.
#[derive(Clone, Debug)]
pub struct Singer {
    /// `x^n + Σ c_j x^j`, coefficients `c_0..c_{n−1}`.
    pub modulus: Vec<u16>,
    /// Generator as a polynomial in `x`, constant term first.
    pub generator: Vec<u16>,
    /// `g^0, g^1, …, g^{q^n − 2}` as matrices.
    pub elements: Vec<Mat>,
}

impl Singer {
    pub fn family(&self) -> Result<Family> {
        let a = &self.elements[0];
        Family::new(a.field(), a.nrows(), a.ncols(), self.elements.clone(), None)
    }
}

fn companion(field: &Field, modulus: &[u16]) -> Mat {
    let n = modulus.len();
    Mat::from_fn(field, n, n, |i, j| {
        if j + 1 < n {
            u16::from(i == j + 1)
        } else {
            field.neg(modulus[i])
        }
    })
}

/// `Σ g_j C^j`: multiplication by `g` in the power basis.
fn mult_matrix(field: &Field, c: &Mat, g: &[u16]) -> Mat {
    let n = c.nrows();
    let mut acc = Mat::zeros(field, n, n);
    let mut pow = Mat::identity(field, n);
    for &gj in g {
        acc = acc.add(&pow.scale(gj)).expect("square");
        pow = pow.mul(c).expect("square");
    }
    acc
}

/// Coefficients with the constant term in the least significant base-`q` digit.
fn poly_from_index(q: u32, n: usize, idx: usize) -> Vec<u16> {
    let mut v = vec_from_index(q, n, idx);
    v.reverse();
    v
}

fn prime_factors(mut x: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= x {
        if x % p == 0 {
            out.push(p);
            while x % p == 0 {
                x /= p;
            }
        }
        p += 1;
    }
    if x > 1 {
        out.push(x);
    }
    out
}

fn has_order(a: &Mat, order: u64, factors: &[u64]) -> bool {
    let id = Mat::identity(a.field(), a.nrows());
    a.pow(order) == id && factors.iter().all(|r| a.pow(order / r) != id)
}

/// Smallest irreducible modulus, then the smallest generator of the multiplicative group.
pub fn singer_cycle(field: &Field, n: usize, budget: &Budget) -> Result<Singer> {
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    let q = field.q();
    let size = budget.check_items("singer search", checked_pow(q as u64, n))?;
    let order = size - 1;
    let factors = prime_factors(order);
    let modulus = (0..size as usize)
        .map(|i| poly_from_index(q, n, i))
        .find(|c| {
            let comp = companion(field, c);
            (1..size as usize).all(|g| mult_matrix(field, &comp, &poly_from_index(q, n, g)).is_invertible())
        })
        .ok_or(Error::GeneratorSearchFailed)?;
    let comp = companion(field, &modulus);
    let (generator, gen) = (1..size as usize)
        .map(|g| poly_from_index(q, n, g))
        .map(|g| {
            let m = mult_matrix(field, &comp, &g);
            (g, m)
        })
        .find(|(_, m)| has_order(m, order, &factors))
        .ok_or(Error::GeneratorSearchFailed)?;
    let mut elements = Vec::with_capacity(order as usize);
    let mut cur = Mat::identity(field, n);
    for _ in 0..order {
        elements.push(cur.clone());
        cur = cur.mul(&gen)?;
    }
    Ok(Singer { modulus, generator, elements })
}

#[derive(Clone, Debug, Serialize)]
pub struct SingerReport {
    pub q: u32,
    pub n: usize,
    pub order: usize,
    pub expected_order: String,
    pub closed: bool,
    pub pairs_checked: usize,
    /// Every pair of distinct elements disagrees on every nonzero vector.
    pub pairwise_disagree: bool,
    pub gl_order: String,
    pub cosets: String,
    /// `|GL| / (q^n − 1) = m_{q,1}(n)`.
    pub coset_bound_matches: bool,
}

impl SingerReport {
    pub fn holds(&self) -> bool {
        self.closed && self.pairwise_disagree && self.coset_bound_matches && self.order.to_string() == self.expected_order
    }
}

pub fn verify_singer(field: &Field, n: usize, budget: &Budget) -> Result<SingerReport> {
    let s = singer_cycle(field, n, budget)?;
    let q = field.q();
    let els = &s.elements;
    let mut sorted = els.clone();
    sorted.sort();
    sorted.dedup();
    let distinct = sorted.len() == els.len();
    let closed = distinct && els.iter().all(|a| els.iter().all(|b| sorted.binary_search(&a.mul(b).expect("square")).is_ok()));
    let mut pairs = 0;
    let mut disagree = true;
    for (i, a) in els.iter().enumerate() {
        for b in &els[i + 1..] {
            pairs += 1;
            disagree &= agreement_dim(a, b)? == 0;
        }
    }
    let expected: BigInt = qpow(q, n) - BigInt::one();
    let gl = gl_order(n, q);
    let cosets = &gl / &expected;
    Ok(SingerReport {
        q,
        n,
        order: els.len(),
        expected_order: expected.to_string(),
        closed,
        pairs_checked: pairs,
        pairwise_disagree: disagree,
        coset_bound_matches: &cosets * &expected == gl && cosets == m_qt(n, q, 1)?,
        gl_order: gl.to_string(),
        cosets: cosets.to_string(),
    })
}

// ---------------------------------------------------------------------------
// Linear derangements

/// `τ` and the subspaces the derangement count depends on.
#[derive(Clone, Debug)]
pub struct DerangementSetup {
    field: Field,
    pub n: usize,
    pub t: usize,
    pub tau: Mat,
    /// `dim {v ∈ T : τv = v}`, `T = span(e_1..e_t)`.
    pub d: usize,
    /// `T + τ^{-1}(T)`.
    pub avoid: Subspace,
}

impl DerangementSetup {
    pub fn new(field: &Field, n: usize, t: usize, tau: &Mat) -> Result<Self> {
        check_nt(n, t)?;
        if tau.shape() != (n, n) || tau.field() != field {
            return Err(Error::shape(format!("tau must be {n}x{n} over F_{}", field.q())));
        }
        let inv = tau.inverse().ok_or_else(|| Error::PreconditionViolated("tau is not invertible".into()))?;
        let t_space = Subspace::span(field, n, &(0..t).map(|i| unit(n, i)).collect::<Vec<_>>());
        let fixed = tau.sub(&Mat::identity(field, n))?.kernel();
        let d = t_space.intersect(&fixed).dim();
        if d + 1 > t {
            return Err(Error::PreconditionViolated(format!("tau fixes a {d}-dimensional subspace of span(e_1..e_{t})")));
        }
        let pre: Vec<Vec<u16>> = (0..t).map(|i| inv.apply(&unit(n, i))).collect();
        let avoid = t_space.sum(&Subspace::span(field, n, &pre));
        Ok(DerangementSetup { field: field.clone(), n, t, tau: tau.clone(), d, avoid })
    }

    /// `σ ∈ J ∩ GL` with `dim 𝔞(σ, τ) = t − 1`.
    pub fn in_h(&self, sigma: &Mat) -> bool {
        (0..self.t).all(|i| sigma.apply(&unit(self.n, i)) == unit(self.n, i))
            && sigma.is_invertible()
            && agreement_dim(sigma, &self.tau).map_or(false, |a| a + 1 == self.t)
    }

    fn free_block_len(&self) -> usize {
        self.n * (self.n - self.t)
    }

    /// Index of the free columns `t..n` of a member of `J`.
    fn j_index(&self, sigma: &Mat) -> u64 {
        sigma.submatrix(0..self.n, self.t..self.n).index()
    }
}

/// Exact `H = {σ ∈ J ∩ GL : dim 𝔞(σ, τ) = t − 1}` as a bitset over `J`.
#[derive(Clone, Debug)]
pub struct DerangementSet {
    pub setup: DerangementSetup,
    bits: Vec<u64>,
    pub count: u64,
}

impl DerangementSet {
    pub fn contains(&self, sigma: &Mat) -> bool {
        if sigma.shape() != (self.setup.n, self.setup.n) || !(0..self.setup.t).all(|i| sigma.col(i) == unit(self.setup.n, i)) {
            return false;
        }
        let idx = self.setup.j_index(sigma) as usize;
        self.bits[idx / 64] >> (idx % 64) & 1 == 1
    }
}

const CHUNK: u64 = 1 << 14;

pub fn derangement_enumerate(field: &Field, n: usize, t: usize, tau: &Mat, budget: &Budget) -> Result<DerangementSet> {
    let setup = DerangementSetup::new(field, n, t, tau)?;
    let total = budget.check_items("derangement enumeration", checked_pow(field.q() as u64, setup.free_block_len()))?;
    let chunks: Vec<u64> = (0..total.div_ceil(CHUNK)).collect();
    let packed = field.q() == 2 && n <= 64;
    let words: Vec<Vec<u64>> = chunks
        .par_iter()
        .map(|&c| {
            budget.check_time()?;
            let range = c * CHUNK..((c + 1) * CHUNK).min(total);
            Ok(if packed { scan_gf2(&setup, range) } else { scan_generic(&setup, range) })
        })
        .collect::<Result<_>>()?;
    let mut bits = vec![0u64; (total as usize).div_ceil(64)];
    for (c, w) in words.into_iter().enumerate() {
        let start = c * (CHUNK as usize / 64);
        bits[start..start + w.len()].copy_from_slice(&w);
    }
    let count = bits.iter().map(|w| w.count_ones() as u64).sum();
    Ok(DerangementSet { setup, bits, count })
}

fn scan_generic(s: &DerangementSetup, range: std::ops::Range<u64>) -> Vec<u64> {
    let (n, t) = (s.n, s.t);
    let start = range.start;
    let mut out = vec![0u64; ((range.end - range.start) as usize).div_ceil(64)];
    for idx in range {
        let block = Mat::from_index(&s.field, n, n - t, idx);
        let sigma = Mat::from_fn(&s.field, n, n, |i, j| if j < t { u16::from(i == j) } else { block.get(i, j - t) });
        if sigma.is_invertible() && agreement_dim(&sigma, &s.tau).expect("square") + 1 == t {
            let k = (idx - start) as usize;
            out[k / 64] |= 1 << (k % 64);
        }
    }
    out
}

/// GF(2): rows packed into words, column `j` at bit `j`.
fn scan_gf2(s: &DerangementSetup, range: std::ops::Range<u64>) -> Vec<u64> {
    let (n, t) = (s.n, s.t);
    let f = n - t;
    let spread: Vec<u64> = (0..1u64 << f)
        .map(|chunk| (0..f).filter(|k| chunk >> (f - 1 - k) & 1 == 1).fold(0, |acc, k| acc | 1 << (t + k)))
        .collect();
    let tau: Vec<u64> = (0..n).map(|i| crate::matspace::pack_gf2(s.tau.row(i))).collect();
    let start = range.start;
    let mut out = vec![0u64; ((range.end - range.start) as usize).div_ceil(64)];
    let mut rows = vec![0u64; n];
    let mut diff = vec![0u64; n];
    for idx in range {
        for i in 0..n {
            let chunk = (idx >> ((n - 1 - i) * f)) & ((1 << f) - 1);
            rows[i] = spread[chunk as usize] | if i < t { 1 << i } else { 0 };
            diff[i] = rows[i] ^ tau[i];
        }
        if gf2_rank(&mut rows) == n && gf2_rank(&mut diff) == n + 1 - t {
            let k = (idx - start) as usize;
            out[k / 64] |= 1 << (k % 64);
        }
    }
    out
}

/// The constructive process: pick `W` avoiding `T + τ^{-1}(T)`, set `σ = id` on `T` and
/// `σ = τ` on `W`, then extend along a basis choosing images that avoid (i) the span of
/// earlier images and (ii) `τ(v_i) + span{σ(v_j) − τ(v_j)}`.
#[derive(Clone, Debug)]
pub struct DerangementProcess {
    pub setup: DerangementSetup,
    /// Admissible `W` of dimension `t − d − 1`, in canonical order.
    pub ws: Vec<Subspace>,
    vectors: Vec<Vec<u16>>,
}

pub fn derangement_construct(field: &Field, n: usize, t: usize, tau: &Mat, budget: &Budget) -> Result<DerangementProcess> {
    let setup = DerangementSetup::new(field, n, t, tau)?;
    if 3 * t > n {
        return Err(Error::PreconditionViolated(format!("need 3t <= n, got t = {t}, n = {n}")));
    }
    let count = budget.check_items("vector table", checked_pow(field.q() as u64, n))?;
    let ws = subspaces(field, n, t - setup.d - 1)
        .into_iter()
        .filter(|w| w.intersect(&setup.avoid).dim() == 0)
        .collect();
    let vectors = (0..count as usize).map(|i| vec_from_index(field.q(), n, i)).collect();
    Ok(DerangementProcess { setup, ws, vectors })
}

/// One level of the depth-first walk.
struct Frame {
    candidates: Vec<usize>,
    pos: usize,
    /// Span of the images chosen so far (as vector indices) and its membership table.
    span: Vec<usize>,
    diffs: Vec<usize>,
}

/// Basis `v_1..v_n` for one `W`, the images fixed by the first step, and `B^{-1}`.
struct Branch {
    basis: Vec<Vec<u16>>,
    fixed: Vec<Vec<u16>>,
    basis_inv: Mat,
}

impl DerangementProcess {
    fn branch(&self, w: &Subspace) -> Branch {
        let s = &self.setup;
        let (f, n) = (&s.field, s.n);
        let mut basis: Vec<Vec<u16>> = (0..s.t).map(|i| unit(n, i)).collect();
        basis.extend(w.basis().iter().cloned());
        let mut fixed = basis.clone();
        for (img, v) in fixed.iter_mut().zip(&basis).skip(s.t) {
            *img = s.tau.apply(v);
        }
        for j in 0..n {
            let e = unit(n, j);
            let mut trial = basis.clone();
            trial.push(e);
            if Subspace::span(f, n, &trial).dim() == trial.len() {
                basis = trial;
            }
        }
        let basis_inv = Mat::from_cols(f, n, &basis).inverse().expect("basis");
        Branch { basis, fixed, basis_inv }
    }

    fn extend(&self, list: &[usize], v: &[u16]) -> Vec<usize> {
        let f = &self.setup.field;
        let mut out = list.to_vec();
        for c in 1..f.q() as u16 {
            let cv = crate::matspace::vec_scale(f, c, v);
            out.extend(list.iter().map(|&x| vec_index(f.q(), &crate::matspace::vec_add(f, &self.vectors[x], &cv))));
        }
        out
    }

    fn frame(&self, br: &Branch, level: usize, span: Vec<usize>, diffs: Vec<usize>) -> Frame {
        let f = &self.setup.field;
        let size = self.vectors.len();
        let mut in_span = vec![false; size];
        span.iter().for_each(|&x| in_span[x] = true);
        let mut in_diff = vec![false; size];
        diffs.iter().for_each(|&x| in_diff[x] = true);
        let tv = self.setup.tau.apply(&br.basis[level]);
        let candidates = (0..size)
            .filter(|&y| !in_span[y] && !in_diff[vec_index(f.q(), &crate::matspace::vec_sub(f, &self.vectors[y], &tv))])
            .collect();
        Frame { candidates, pos: 0, span, diffs }
    }

    /// Visits every outcome of the process (one per sequence of choices); returns the number visited.
    pub fn for_each(&self, budget: &Budget, mut visit: impl FnMut(&Mat)) -> Result<u64> {
        let s = &self.setup;
        let (f, n) = (&s.field, s.n);
        let mut visited = 0u64;
        for w in &self.ws {
            budget.check_time()?;
            let br = self.branch(w);
            let k = br.fixed.len();
            let mut images = br.fixed.clone();
            let mut span = vec![0usize];
            let mut diffs = vec![0usize];
            for (img, v) in br.fixed.iter().zip(&br.basis) {
                span = self.extend(&span, img);
                diffs = self.extend(&diffs, &crate::matspace::vec_sub(f, img, &s.tau.apply(v)));
            }
            if k == n {
                visited += 1;
                visit(&Mat::from_cols(f, n, &images).mul(&br.basis_inv)?);
                continue;
            }
            let mut stack = vec![self.frame(&br, k, span, diffs)];
            while !stack.is_empty() {
                let level = k + stack.len() - 1;
                let top = stack.last_mut().expect("nonempty");
                if top.pos == top.candidates.len() {
                    stack.pop();
                    images.truncate(level);
                    continue;
                }
                let y = top.candidates[top.pos];
                top.pos += 1;
                images.truncate(level);
                images.push(self.vectors[y].clone());
                if level + 1 == n {
                    visited += 1;
                    if visited % 4096 == 0 {
                        budget.check_time()?;
                    }
                    visit(&Mat::from_cols(f, n, &images).mul(&br.basis_inv)?);
                    continue;
                }
                let diff = crate::matspace::vec_sub(f, &self.vectors[y], &s.tau.apply(&br.basis[level]));
                let span = self.extend(&top.span, &self.vectors[y]);
                let diffs = self.extend(&top.diffs, &diff);
                let next = self.frame(&br, level + 1, span, diffs);
                stack.push(next);
            }
        }
        Ok(visited)
    }

    /// Every outcome, collected.
    pub fn outcomes(&self, budget: &Budget) -> Result<Vec<Mat>> {
        let mut out = Vec::new();
        self.for_each(budget, |a| out.push(a.clone()))?;
        Ok(out)
    }
}

/// `¼ [n, t−d−1]_q ∏_{i=2t−d}^{n} (q^n − q^{i−1} − q^{i−t})`.
pub fn derangement_choice_bound(n: usize, q: u32, t: usize, d: usize) -> Result<BigRational> {
    check_nt(n, t)?;
    if d + 1 > t {
        return Err(Error::domain("need d <= t - 1"));
    }
    let mut prod = gaussian_binomial(n, t - d - 1, q)?;
    for i in 2 * t - d..=n {
        prod *= qpow(q, n) - qpow(q, i - 1) - qpow(q, i - t);
    }
    Ok(BigRational::new(prod, 4.into()))
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainStep {
    pub step: String,
    pub lhs: String,
    pub rhs: String,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DerangementReport {
    pub q: u32,
    pub n: usize,
    pub t: usize,
    pub d: usize,
    pub h_count: u64,
    pub m_qt: String,
    pub w_count: usize,
    /// `¼ [n, t−d−1]_q`.
    pub w_lower: String,
    pub outcomes: u64,
    pub distinct: u64,
    pub outcomes_in_h: bool,
    /// The explicit lower bound on the number of outcomes.
    pub choice_bound: String,
    pub chain: Vec<ChainStep>,
}

impl DerangementReport {
    pub fn holds(&self) -> bool {
        self.outcomes_in_h && self.chain.iter().all(|c| c.holds)
    }
}

fn step(name: &str, lhs: &BigRational, rhs: &BigRational, holds: bool) -> ChainStep {
    ChainStep { step: name.into(), lhs: lhs.to_string(), rhs: rhs.to_string(), holds }
}

fn rat(x: BigInt) -> BigRational {
    BigRational::from_integer(x)
}

/// Enumerates `H`, runs the constructive process, and evaluates the counting chain exactly.
///
/// The steps from `R` down to `φ` compare `q^{n−t−j+1}` with `q^{n−1−j}` and so need `t ≥ 2`;
/// for `t = 1` they are omitted.
pub fn derangement_check(field: &Field, n: usize, t: usize, tau: &Mat, budget: &Budget) -> Result<DerangementReport> {
    let h = derangement_enumerate(field, n, t, tau, budget)?;
    let proc = derangement_construct(field, n, t, tau, budget)?;
    let s = &h.setup;
    let q = field.q();
    let d = s.d;
    let total = checked_pow(q as u64, s.free_block_len()).expect("enumerated") as usize;
    let mut seen = vec![0u64; total.div_ceil(64)];
    let mut all_in_h = true;
    let mut distinct = 0u64;
    let outcomes = proc.for_each(budget, |a| {
        if !h.contains(a) {
            all_in_h = false;
            return;
        }
        let idx = s.j_index(a) as usize;
        if seen[idx / 64] >> (idx % 64) & 1 == 0 {
            seen[idx / 64] |= 1 << (idx % 64);
            distinct += 1;
        }
    })?;

    let m = rat(m_qt(n, q, t)?);
    let hc = rat(h.count.into());
    let quarter = BigRational::new(1.into(), 4.into());
    let w_exact = rat(count_subspaces_avoiding(n, s.avoid.dim(), t - d - 1, q)?);
    let w_lower = rat(gaussian_binomial(n, t - d - 1, q)?) * &quarter;
    let choice = derangement_choice_bound(n, q, t, d)?;
    let mut tail = BigInt::one();
    for i in 2 * t - d..=n {
        tail *= qpow(q, n) - qpow(q, i - 1) - qpow(q, i - t);
    }
    let tail = rat(tail);
    let mut chain = vec![
        step("|W choices| = avoidance count", &rat(proc.ws.len().into()), &w_exact, w_exact == rat(proc.ws.len().into())),
        step("|W choices| >= 1/4 [n, t-d-1]_q", &w_exact, &w_lower, w_exact >= w_lower),
        step("outcomes >= choice bound", &rat(outcomes.into()), &choice, rat(outcomes.into()) >= choice),
        step("distinct outcomes >= choice bound", &rat(distinct.into()), &choice, rat(distinct.into()) >= choice),
        step("|H| >= distinct outcomes", &hc, &rat(distinct.into()), h.count >= distinct),
        step("|H| >= choice bound", &hc, &choice, hc >= choice),
    ];
    let r0 = &hc * rat(4.into()) / &m;
    let r1 = rat(gaussian_binomial(n, t - d - 1, q)?) * &tail / &m;
    chain.push(step("4|H|/m >= [n, t-d-1]_q prod / m", &r0, &r1, r0 >= r1));
    let e = t - d - 1;
    let (mut num, mut den) = (BigInt::one(), BigInt::one());
    for i in 1..=e {
        num *= qpow(q, n) - qpow(q, i - 1);
        den *= qpow(q, e) - qpow(q, i - 1);
    }
    let r_ratio = rat(num.clone()) * &tail / &m;
    let expanded = r_ratio.clone() / rat(den.clone());
    chain.push(step("gaussian binomial expansion", &r1, &expanded, r1 == expanded));
    let mut den_t = BigInt::one();
    for i in 1..t {
        den_t *= qpow(q, t - 1) - qpow(q, i - 1);
    }
    let sq = qpow(q, (t - 1) * (t - 1));
    chain.push(step("denominator <= prod_{i<t} (q^{t-1} - q^{i-1})", &rat(den.clone()), &rat(den_t.clone()), den <= den_t));
    chain.push(step("prod_{i<t} (q^{t-1} - q^{i-1}) <= q^{(t-1)^2}", &rat(den_t.clone()), &rat(sq.clone()), den_t <= sq));
    if t >= 2 {
        let len = n + d + 1 - 2 * t;
        let (mut p1, mut p2, mut p3) = (BigRational::one(), BigRational::one(), BigRational::one());
        for j in 1..=len {
            let den_j = qpow(q, n) - qpow(q, n - j);
            p1 *= BigRational::one() - BigRational::new(qpow(q, n + 1 - t - j), den_j.clone());
            p2 *= BigRational::one() - BigRational::new(qpow(q, n - 1 - j), den_j);
            p3 *= BigRational::one() - BigRational::new(1.into(), qpow(q, j));
        }
        chain.push(step("R >= prod (1 - q^{n-t-j+1}/(q^n - q^{n-j}))", &r_ratio, &p1, r_ratio >= p1));
        chain.push(step("... >= prod (1 - q^{n-1-j}/(q^n - q^{n-j}))", &p1, &p2, p1 >= p2));
        chain.push(step("... >= prod (1 - q^{-j})", &p2, &p3, p2 >= p3));
        chain.push(step("phi > 1/4", &p3, &quarter, p3 > quarter));
        let floor = &m / rat(qpow(q, (t - 1) * (t - 1))) / rat(16.into());
        chain.push(step("|H| >= q^{-(t-1)^2} m / 16", &hc, &floor, hc >= floor));
    }
    Ok(DerangementReport {
        q,
        n,
        t,
        d,
        h_count: h.count,
        m_qt: m.to_string(),
        w_count: proc.ws.len(),
        w_lower: w_lower.to_string(),
        outcomes,
        distinct,
        outcomes_in_h: all_in_h,
        choice_bound: choice.to_string(),
        chain,
    })
}

/// A random invertible `τ` meeting the precondition (seeded).
pub fn sample_tau(field: &Field, n: usize, t: usize, seed: u64) -> Result<Mat> {
    check_nt(n, t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = field.q() as u16;
    for _ in 0..10_000 {
        let tau = Mat::from_fn(field, n, n, |_, _| rng.gen_range(0..q));
        if DerangementSetup::new(field, n, t, &tau).is_ok() {
            return Ok(tau);
        }
    }
    Err(Error::PreconditionViolated("no admissible tau sampled".into()))
}

// ---------------------------------------------------------------------------
// Extremal searches

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exhaustive,
    Sample,
    Spectral,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "exhaustive" => Ok(Mode::Exhaustive),
            "sample" => Ok(Mode::Sample),
            "spectral" => Ok(Mode::Spectral),
            _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

/// Some `t`-dimensional subspace on which all members agree (column side), or dually.
pub fn canonical_side(members: &[Mat], t: usize) -> Option<Side> {
    let first = members.first()?;
    let common = |dual: bool| {
        members.iter().skip(1).fold(Subspace::full(first.field(), first.ncols()), |acc, a| {
            let d = if dual { a.sub(first).expect("shape").transpose() } else { a.sub(first).expect("shape") };
            acc.intersect(&d.kernel())
        })
    };
    if common(false).dim() >= t {
        Some(Side::Column)
    } else if common(true).dim() >= t {
        Some(Side::Row)
    } else {
        None
    }
}

/// Upper bound check for `(t−1)`-intersection-free families in `GL(n, q)` against `m_{q,t}(n)`.
///
/// * exhaustive: branch and bound over `GL(n, q)` with the canonical family as incumbent;
///   returns every maximum family and whether each is canonical.
/// * sample: no element outside the canonical family can be added to it.
/// * spectral: the ratio bound for `Γ_{t−1}` on all of `M(n, n)`, for context.
pub fn verify_extremal_bound(field: &Field, n: usize, t: usize, mode: Mode, budget: &Budget) -> Result<Report> {
    check_nt(n, t)?;
    let q = field.q();
    let bound = m_qt(n, q, t)?;
    let base = |claim: &str, value: &dyn ToString, status| {
        Report::new(claim, value.to_string(), &bound, status).param("q", q).param("n", n).param("t", t)
    };
    match mode {
        Mode::Exhaustive => {
            let gl: Vec<Mat> = enumerate(field, Space::Gl { n }, budget)?.collect();
            let canon = canonical_family(field, n, t, Side::Column, budget)?;
            let conflict = |a: &Mat, b: &Mat| agreement_dim(a, b).expect("square") + 1 == t;
            let degree: Vec<usize> = gl.par_iter().map(|a| gl.iter().filter(|b| conflict(a, b)).count()).collect();
            let mut order: Vec<usize> = (0..gl.len()).collect();
            order.sort_by_key(|&i| (std::cmp::Reverse(degree[i]), i));
            let verts: Vec<&Mat> = order.iter().map(|&i| &gl[i]).collect();
            let g = Graph::from_fn(verts.len(), |u, v| conflict(verts[u], verts[v]));
            let seed: Vec<usize> = (0..verts.len()).filter(|&v| canon.contains(verts[v])).collect();
            let res = maximum_independent_sets_seeded(&g, &seed, budget)?;
            let optima: Vec<Vec<Mat>> = res.sets.iter().map(|s| s.iter().map(|&v| verts[v].clone()).collect()).collect();
            let all_canonical = optima.iter().all(|o| canonical_side(o, t).is_some());
            let status = if BigInt::from(res.size) > bound { Status::Violated } else { Status::Exploratory };
            Ok(base("max (t-1)-intersection-free family in GL(n,q) vs m_qt", &res.size, status)
                .param("vertices", gl.len())
                .param("optima", optima.len())
                .param("all_canonical", all_canonical)
                .param("search_nodes", res.nodes)
                .witness(optima.first().into_iter().flatten()))
        }
        Mode::Sample => {
            let canon = canonical_family(field, n, t, Side::Column, budget)?;
            let members = canon.members();
            let augmenting: Vec<Mat> = enumerate(field, Space::Gl { n }, budget)?
                .par_bridge()
                .filter(|a| !canon.contains(a) && !members.iter().any(|b| agreement_dim(a, b).expect("square") + 1 == t))
                .collect();
            let mut augmenting = augmenting;
            augmenting.sort();
            Ok(Report::new("canonical family admits no augmenting element", augmenting.len(), 0, status_of(augmenting.is_empty()))
                .param("q", q)
                .param("n", n)
                .param("t", t)
                .param("family_size", canon.len())
                .witness(augmenting.iter().take(4)))
        }
        Mode::Spectral => {
            let spec = spectrum(field, n, n, t - 1, budget)?;
            let ratio = hoffman_bound(&spec)?;
            let size = ratio * rat(qpow(q, n * n));
            let floor = size.floor().to_integer();
            Ok(base("ratio bound for Gamma_{t-1} on M(n,n) (context only)", &floor, Status::Exploratory)
                .param("ratio_bound_exact", size.to_string())
                .param("exceeds_m_qt", floor > bound))
        }
    }
}

/// `|canonical family| = m_{q,t}(n)` by enumeration, both sides.
pub fn canonical_size_report(field: &Field, n: usize, t: usize, budget: &Budget) -> Result<Report> {
    let q = field.q();
    let expected = m_qt(n, q, t)?;
    let col = canonical_family(field, n, t, Side::Column, budget)?;
    let row = canonical_family(field, n, t, Side::Row, budget)?;
    // Fixing e_1..e_t pointwise makes every pair agree on at least t dimensions; the pairwise
    // check is quadratic, so large families get the structural one only.
    let fixes = |a: &Mat| (0..t).all(|i| a.apply(&unit(n, i)) == unit(n, i));
    let fixes_dual = |a: &Mat| (0..t).all(|i| a.apply_left(&unit(n, i)) == unit(n, i));
    let pairwise = col.len() <= PAIRWISE_LIMIT;
    let ok = BigInt::from(col.len()) == expected
        && BigInt::from(row.len()) == expected
        && col.members().iter().all(fixes)
        && row.members().iter().all(fixes_dual)
        && (!pairwise || (col.is_t_intersecting(t).0 && col.is_intersection_free(t - 1).0 && row.is_dual_intersection_free(t - 1).0));
    Ok(Report::new("canonical family size = m_qt", col.len(), &expected, status_of(ok))
        .param("q", q)
        .param("n", n)
        .param("t", t)
        .param("pairwise_checked", pairwise))
}

const PAIRWISE_LIMIT: usize = 4096;

/// Convenience for reports: `m_qt` as `u64` when it fits.
pub fn m_qt_u64(n: usize, q: u32, t: usize) -> Option<u64> {
    m_qt(n, q, t).ok()?.to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(q: u32) -> Field {
        Field::gf(q).unwrap()
    }
    fn b() -> Budget {
        Budget::default()
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(canonical_family(&gf(2), 2, 1, Side::Column, &b()).unwrap().len(), 2);
        assert_eq!(canonical_family(&gf(2), 3, 1, Side::Column, &b()).unwrap().len(), 24);
        let id = canonical_family(&gf(3), 3, 3, Side::Row, &b()).unwrap();
        assert_eq!(id.members(), &[Mat::identity(&gf(3), 3)]);
        assert!(canonical_family(&gf(2), 2, 0, Side::Column, &b()).is_err());
    }

    #[test]
    fn sl_examples() {
        assert_eq!(sl_family(&gf(3), 2, 1, &b()).unwrap().0.len(), 3);
        assert_eq!(sl_family(&gf(4), 2, 1, &b()).unwrap().0.len(), 4);
        let (f2, rep) = sl_family(&gf(2), 3, 1, &b()).unwrap();
        assert_eq!(f2.len(), 24);
        assert_eq!(rep.status, Status::Confirmed);
    }

    #[test]
    fn singer_examples() {
        for (q, n, order) in [(2, 2, 3), (3, 2, 8), (2, 3, 7), (4, 1, 3)] {
            let rep = verify_singer(&gf(q), n, &b()).unwrap();
            assert_eq!(rep.order, order);
            assert!(rep.holds(), "{rep:?}");
        }
        let rep = verify_singer(&gf(2), 2, &b()).unwrap();
        assert_eq!((rep.gl_order.as_str(), rep.cosets.as_str()), ("6", "2"));
    }

    #[test]
    fn derangement_small() {
        let f = gf(2);
        // τ swaps e1 and e2, so it fixes nothing on span(e1)
        let tau = Mat::from_data(&f, 3, 3, vec![0, 1, 0, 1, 0, 0, 0, 0, 1]).unwrap();
        let h = derangement_enumerate(&f, 3, 1, &tau, &b()).unwrap();
        let brute = enumerate(&f, Space::Gl { n: 3 }, &b())
            .unwrap()
            .filter(|a| a.col(0) == vec![1, 0, 0] && agreement_dim(a, &tau).unwrap() == 0)
            .count();
        assert_eq!(h.count as usize, brute);
        let proc = derangement_construct(&f, 3, 1, &tau, &b()).unwrap();
        for a in proc.outcomes(&b()).unwrap() {
            assert!(h.contains(&a) && h.setup.in_h(&a));
        }
        let rep = derangement_check(&f, 3, 1, &tau, &b()).unwrap();
        assert!(rep.holds(), "{rep:#?}");
        assert!(DerangementSetup::new(&f, 3, 1, &Mat::identity(&f, 3)).is_err());
    }

    #[test]
    fn derangement_generic_matches_packed() {
        let f = gf(2);
        let tau = sample_tau(&f, 4, 1, 3).unwrap();
        let s = DerangementSetup::new(&f, 4, 1, &tau).unwrap();
        assert_eq!(scan_gf2(&s, 0..4096), scan_generic(&s, 0..4096));
        let f3 = gf(3);
        let tau = sample_tau(&f3, 3, 1, 1).unwrap();
        let h = derangement_enumerate(&f3, 3, 1, &tau, &b()).unwrap();
        let proc = derangement_construct(&f3, 3, 1, &tau, &b()).unwrap();
        let outs = proc.outcomes(&b()).unwrap();
        assert!(!outs.is_empty());
        assert!(outs.iter().all(|a| h.contains(a) && h.setup.in_h(a)));
    }

    #[test]
    fn extremal_examples() {
        let r = verify_extremal_bound(&gf(2), 2, 1, Mode::Exhaustive, &b()).unwrap();
        assert_eq!(r.value, "2");
        assert_eq!(r.params["all_canonical"], true);
        let r = verify_extremal_bound(&gf(3), 2, 1, Mode::Exhaustive, &b()).unwrap();
        assert_eq!(r.value, "6");
        assert_eq!(r.status, Status::Exploratory);
        let r = verify_extremal_bound(&gf(2), 3, 1, Mode::Sample, &b()).unwrap();
        assert_eq!(r.value, "0");
        let r = verify_extremal_bound(&gf(2), 2, 1, Mode::Spectral, &b()).unwrap();
        assert_eq!(r.status, Status::Exploratory);
    }

    #[test]
    fn canonical_side_examples() {
        let f = gf(2);
        let col = canonical_family(&f, 3, 1, Side::Column, &b()).unwrap();
        assert_eq!(canonical_side(col.members(), 1), Some(Side::Column));
        let row = canonical_family(&f, 3, 1, Side::Row, &b()).unwrap();
        assert_eq!(canonical_side(row.members(), 1), Some(Side::Row));
        let singer = singer_cycle(&f, 3, &b()).unwrap();
        assert_eq!(canonical_side(&singer.elements, 1), None);
    }
}
