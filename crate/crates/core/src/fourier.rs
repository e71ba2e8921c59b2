//! Fourier analysis on `(M(n, m), +)` over `F_q`.
//!
//! Characters are indexed by dual matrices `X ∈ M(m, n)`:
//! `u_X(A) = ω^{τ(Trace(XA))}`, `ω = e^{2πi/p}`, and
//! `f̂(X) = q^{-nm} Σ_A f(A) conj(u_X(A))`. All values are exact elements of `Q(ω)`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use serde::Serialize;

use crate::cyclo::Cyclo;
use crate::error::{Error, Result};
use crate::families::Restriction;
use crate::gf::Field;
use crate::matspace::{gaussian_binomial, Mat, Subspace};
use crate::power::QPow;

/// Dense tables are capped at this many points.
pub const MAX_POINTS: u64 = 1 << 24;
/// The naive transform is quadratic; it refuses tables larger than this.
pub const MAX_NAIVE_POINTS: u64 = 1 << 14;

fn point_count(field: &Field, n: usize, m: usize) -> Result<usize> {
    crate::budget::checked_pow(field.q() as u64, n * m)
        .filter(|&c| c <= MAX_POINTS)
        .map(|c| c as usize)
        .ok_or_else(|| Error::BudgetExceeded(format!("q^(nm) exceeds {MAX_POINTS} for {n}x{m}")))
}

/// A function on `M(n, m)` (or on a restriction coset, indexed through its chart).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseFunction {
    field: Field,
    n: usize,
    m: usize,
    values: Vec<Cyclo>,
    context: Option<Restriction>,
}

impl DenseFunction {
    pub fn new(field: &Field, n: usize, m: usize, values: Vec<Cyclo>) -> Result<Self> {
        let count = point_count(field, n, m)?;
        if values.len() != count {
            return Err(Error::shape(format!("{} values for {count} points", values.len())));
        }
        if values.iter().any(|v| v.p() != field.p()) {
            return Err(Error::shape("values live over the wrong root of unity"));
        }
        Ok(DenseFunction { field: field.clone(), n, m, values, context: None })
    }

    pub fn from_rationals(field: &Field, n: usize, m: usize, values: &[BigRational]) -> Result<Self> {
        let p = field.p();
        DenseFunction::new(field, n, m, values.iter().map(|r| Cyclo::from_rational(p, r)).collect())
    }

    pub fn from_fn(field: &Field, n: usize, m: usize, mut f: impl FnMut(&Mat) -> Cyclo) -> Result<Self> {
        let count = point_count(field, n, m)?;
        let values = (0..count as u64).map(|i| f(&Mat::from_index(field, n, m, i))).collect();
        DenseFunction::new(field, n, m, values)
    }

    pub fn constant(field: &Field, n: usize, m: usize, c: &BigRational) -> Result<Self> {
        let count = point_count(field, n, m)?;
        DenseFunction::new(field, n, m, vec![Cyclo::from_rational(field.p(), c); count])
    }

    /// `1_{members}` on the full space.
    pub fn indicator<'a>(field: &Field, n: usize, m: usize, members: impl IntoIterator<Item = &'a Mat>) -> Result<Self> {
        let count = point_count(field, n, m)?;
        let p = field.p();
        let mut values = vec![Cyclo::zero(p); count];
        for a in members {
            if a.shape() != (n, m) {
                return Err(Error::shape("member shape differs from the function's"));
            }
            values[a.index() as usize] = Cyclo::one(p);
        }
        DenseFunction::new(field, n, m, values)
    }

    /// The character `u_X` as a function.
    pub fn character_fn(x: &Mat) -> Result<Self> {
        let (m, n) = x.shape();
        let f = x.field().clone();
        DenseFunction::from_fn(&f, n, m, |a| Cyclo::root(f.p(), character_phase(x, a)))
    }

    /// A function on the coset of `context`, valued in chart coordinates
    /// (see [`Restriction::chart`]); `values` has `q^{(m−dim S)(n−dim A)}` entries.
    pub fn on_coset(context: Restriction, values: Vec<Cyclo>) -> Result<Self> {
        let chart = context.chart()?;
        let (n2, m2) = chart.chart_shape();
        let mut f = DenseFunction::new(context.field(), n2, m2, values)?;
        f.n = context.nrows();
        f.m = context.ncols();
        f.context = Some(context);
        Ok(f)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
    /// Shape of the ambient matrix space `(n, m)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.m)
    }
    pub fn values(&self) -> &[Cyclo] {
        &self.values
    }
    pub fn context(&self) -> Option<&Restriction> {
        self.context.as_ref()
    }
    pub fn value(&self, a: &Mat) -> &Cyclo {
        &self.values[a.index() as usize]
    }

    /// Re-indexes a coset function as a function on the chart's full matrix space.
    pub fn to_chart(&self) -> Result<DenseFunction> {
        match &self.context {
            None => Ok(self.clone()),
            Some(r) => {
                let (n2, m2) = r.chart()?.chart_shape();
                DenseFunction::new(&self.field, n2, m2, self.values.clone())
            }
        }
    }

    fn require_full_space(&self) -> Result<()> {
        if self.context.is_some() {
            return Err(Error::domain("function lives on a restriction coset; use to_chart() first"));
        }
        Ok(())
    }

    /// The values as rationals, if all are rational.
    pub fn rational_values(&self) -> Result<Vec<BigRational>> {
        self.values.iter().map(Cyclo::try_rational).collect()
    }

    pub fn expectation(&self) -> Cyclo {
        let total = self.values.iter().fold(Cyclo::zero(self.field.p()), |acc, v| &acc + v);
        total.scale(&BigRational::new(BigInt::one(), BigInt::from(self.values.len())))
    }

    /// `E[|f|^k]` for even `k`.
    pub fn moment(&self, k: u32) -> Result<Cyclo> {
        if k % 2 != 0 {
            return Err(Error::domain("moments are taken for even k only"));
        }
        let p = self.field.p();
        let mut total = Cyclo::zero(p);
        for v in &self.values {
            let sq = v.norm_sq();
            let mut pw = Cyclo::one(p);
            for _ in 0..k / 2 {
                pw = &pw * &sq;
            }
            total += &pw;
        }
        Ok(total.scale(&BigRational::new(BigInt::one(), BigInt::from(self.values.len()))))
    }

    /// `⟨f, g⟩ = E[f conj(g)]`.
    pub fn inner(&self, other: &DenseFunction) -> Result<Cyclo> {
        if self.field != other.field || self.values.len() != other.values.len() {
            return Err(Error::shape("inner product of functions on different spaces"));
        }
        let total = self
            .values
            .iter()
            .zip(&other.values)
            .fold(Cyclo::zero(self.field.p()), |acc, (a, b)| &acc + &(a * &b.conj()));
        Ok(total.scale(&BigRational::new(BigInt::one(), BigInt::from(self.values.len()))))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Cyclo::is_zero)
    }

    pub fn is_indicator(&self) -> bool {
        let one = Cyclo::one(self.field.p());
        self.values.iter().all(|v| v.is_zero() || *v == one)
    }

    pub fn add(&self, other: &DenseFunction) -> Result<DenseFunction> {
        if self.field != other.field || self.values.len() != other.values.len() {
            return Err(Error::shape("sum of functions on different spaces"));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(DenseFunction { values, ..self.clone() })
    }
}

/// Fourier coefficients `f̂(X)`, indexed by `X ∈ M(m, n)` in enumeration order.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    field: Field,
    n: usize,
    m: usize,
    coeffs: Vec<Cyclo>,
}

impl Spectrum {
    pub fn new(field: &Field, n: usize, m: usize, coeffs: Vec<Cyclo>) -> Result<Self> {
        let count = point_count(field, n, m)?;
        if coeffs.len() != count {
            return Err(Error::shape(format!("{} coefficients for {count} characters", coeffs.len())));
        }
        Ok(Spectrum { field: field.clone(), n, m, coeffs })
    }
    pub fn field(&self) -> &Field {
        &self.field
    }
    /// Shape `(n, m)` of the primal space; dual matrices are `m × n`.
    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.m)
    }
    pub fn coeffs(&self) -> &[Cyclo] {
        &self.coeffs
    }
    pub fn coeff(&self, x: &Mat) -> &Cyclo {
        &self.coeffs[x.index() as usize]
    }
    pub fn dual(&self, idx: usize) -> Mat {
        Mat::from_index(&self.field, self.m, self.n, idx as u64)
    }

    /// `Σ_X |f̂(X)|²`.
    pub fn energy(&self) -> Cyclo {
        self.coeffs.iter().fold(Cyclo::zero(self.field.p()), |acc, c| &acc + &c.norm_sq())
    }

    /// Keeps only the coefficients whose dual index satisfies `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Mat) -> bool) -> Spectrum {
        let zero = Cyclo::zero(self.field.p());
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| if keep(&self.dual(i)) { c.clone() } else { zero.clone() })
            .collect();
        Spectrum { coeffs, ..self.clone() }
    }

    /// JSON export: one `{"X": literal, "re": [...]}` per coefficient; `re` lists the
    /// canonical coefficients of `1, ω, ..., ω^{p-1}` as rational strings.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Entry {
            #[serde(rename = "X")]
            x: String,
            re: Vec<String>,
        }
        let entries: Vec<Entry> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| Entry {
                x: self.dual(i).to_literal(),
                re: c
                    .numerator()
                    .iter()
                    .map(|a| BigRational::new(a.clone(), c.denominator().clone()).to_string())
                    .collect(),
            })
            .collect();
        serde_json::to_value(entries).expect("serializable")
    }
}

/// `τ(Trace(XA))` as an exponent of `ω`.
pub fn character_phase(x: &Mat, a: &Mat) -> u32 {
    let f = x.field();
    let (m, n) = x.shape();
    let mut phase = 0u32;
    for i in 0..m {
        for j in 0..n {
            phase += f.trace_mul(x.get(i, j), a.get(j, i)) as u32;
        }
    }
    phase % f.p()
}

/// `u_X(A)`.
pub fn character(x: &Mat, a: &Mat) -> Result<Cyclo> {
    if x.field() != a.field() {
        return Err(Error::FieldMismatch);
    }
    if x.shape() != (a.ncols(), a.nrows()) {
        return Err(Error::shape(format!(
            "character index is {}x{}, argument {}x{}",
            x.nrows(),
            x.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(Cyclo::root(x.field().p(), character_phase(x, a)))
}

/// Writes the values over a common denominator: `(num, den)` with `num` holding
/// `p` integer coefficients per point.
fn integer_grid(values: &[Cyclo], p: usize) -> (Vec<BigInt>, BigInt) {
    let den = values.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denominator()));
    let mut grid = Vec::with_capacity(values.len() * p);
    for v in values {
        let scale = &den / v.denominator();
        grid.extend(v.numerator().iter().map(|c| c * &scale));
    }
    (grid, den)
}

fn from_grid(grid: &[BigInt], p: usize, den: &BigInt) -> Vec<Cyclo> {
    grid.chunks(p)
        .map(|c| Cyclo::from_parts(p as u32, c.to_vec(), den.clone()).expect("valid grid"))
        .collect()
}

/// In-place DFT over `F_p^D` on a grid of cyclotomic integers (`p` coefficients per point):
/// `out[y] = Σ_x in[x] ω^{sign·(y·x)}`. Only coefficient rotations are needed.
fn dft_in_place(grid: &mut [BigInt], p: usize, sign: i32) {
    let points = grid.len() / p;
    let mut stride = 1;
    let mut scratch = vec![BigInt::zero(); p * p];
    while stride < points {
        let block = stride * p;
        for base in (0..points).step_by(block) {
            for off in 0..stride {
                for s in scratch.iter_mut() {
                    s.set_zero();
                }
                for k in 0..p {
                    for j in 0..p {
                        let src = (base + off + j * stride) * p;
                        let rot = ((sign as i64 * (j * k) as i64).rem_euclid(p as i64)) as usize;
                        for c in 0..p {
                            let v = &grid[src + c];
                            if !v.is_zero() {
                                scratch[k * p + (c + rot) % p] += v;
                            }
                        }
                    }
                }
                for k in 0..p {
                    let dst = (base + off + k * stride) * p;
                    for c in 0..p {
                        std::mem::swap(&mut grid[dst + c], &mut scratch[k * p + c]);
                    }
                }
            }
        }
        stride = block;
    }
}

/// For each dual matrix `X` (by index), the index `y(X)` of the linear functional
/// `A ↦ τ(Trace(XA))` on `F_p^{s·nm}`, written in the same base-`p` digit layout as
/// matrix indices: digit `i` of entry `k` sits at position `(nm−1−k)·s + i`.
fn dual_coordinates(field: &Field, n: usize, m: usize) -> Vec<usize> {
    let (p, s) = (field.p() as usize, field.s() as usize);
    let total = n * m;
    let count = (field.q() as usize).pow(total as u32);
    let basis: Vec<u16> = (0..s).map(|i| p.pow(i as u32) as u16).collect();
    (0..count)
        .map(|xi| {
            let x = Mat::from_index(field, m, n, xi as u64);
            let mut y = 0usize;
            // entry k = (b, a) of A pairs with X[a][b]
            for b in 0..n {
                for a in 0..m {
                    let k = b * m + a;
                    let xab = x.get(a, b);
                    for (i, &e) in basis.iter().enumerate() {
                        let pos = (total - 1 - k) * s + i;
                        y += field.trace_mul(xab, e) as usize * p.pow(pos as u32);
                    }
                }
            }
            y
        })
        .collect()
}

/// Naive transform, straight from the definition, bucketing by phase.
pub fn transform(f: &DenseFunction) -> Result<Spectrum> {
    f.require_full_space()?;
    let (n, m) = f.shape();
    let field = f.field();
    let count = f.values.len();
    if count as u64 > MAX_NAIVE_POINTS {
        return Err(Error::BudgetExceeded(format!(
            "naive transform on {count} points; use fast_transform"
        )));
    }
    let p = field.p() as usize;
    let (grid, den) = integer_grid(&f.values, p);
    let mats: Vec<Mat> = (0..count as u64).map(|i| Mat::from_index(field, n, m, i)).collect();
    let norm = &den * BigInt::from(count);
    let coeffs = (0..count as u64)
        .map(|xi| {
            let x = Mat::from_index(field, m, n, xi);
            let mut acc = vec![BigInt::zero(); p];
            for (ai, a) in mats.iter().enumerate() {
                // conj(u_X(A)) = ω^{-phase}
                let rot = (p - character_phase(&x, a) as usize) % p;
                for c in 0..p {
                    let v = &grid[ai * p + c];
                    if !v.is_zero() {
                        acc[(c + rot) % p] += v;
                    }
                }
            }
            Cyclo::from_parts(p as u32, acc, norm.clone()).expect("valid")
        })
        .collect();
    Spectrum::new(field, n, m, coeffs)
}

/// Butterfly transform over `F_p^{s·nm}`; equal to [`transform`] coefficient by coefficient.
pub fn fast_transform(f: &DenseFunction) -> Result<Spectrum> {
    f.require_full_space()?;
    let (n, m) = f.shape();
    let field = f.field();
    let p = field.p() as usize;
    let (mut grid, den) = integer_grid(&f.values, p);
    dft_in_place(&mut grid, p, -1);
    let norm = den * BigInt::from(f.values.len());
    let ys = dual_coordinates(field, n, m);
    let coeffs = ys
        .iter()
        .map(|&y| Cyclo::from_parts(p as u32, grid[y * p..(y + 1) * p].to_vec(), norm.clone()).expect("valid"))
        .collect();
    Spectrum::new(field, n, m, coeffs)
}

/// `f = Σ_X f̂(X) u_X`.
pub fn inverse_transform(spec: &Spectrum) -> DenseFunction {
    let (n, m) = spec.shape();
    let field = spec.field();
    let p = field.p() as usize;
    let ys = dual_coordinates(field, n, m);
    let (coeff_grid, den) = integer_grid(&spec.coeffs, p);
    let mut grid = vec![BigInt::zero(); coeff_grid.len()];
    for (xi, &y) in ys.iter().enumerate() {
        for c in 0..p {
            grid[y * p + c] = coeff_grid[xi * p + c].clone();
        }
    }
    dft_in_place(&mut grid, p, 1);
    let values = from_grid(&grid, p, &den);
    DenseFunction { field: field.clone(), n, m, values, context: None }
}

/// Rank of every dual matrix, by index.
pub fn dual_ranks(field: &Field, n: usize, m: usize) -> Vec<usize> {
    let count = (field.q() as u64).pow((n * m) as u32);
    (0..count).map(|i| Mat::from_index(field, m, n, i).rank()).collect()
}

/// `f^{(=d)} = Σ_{rank X = d} f̂(X) u_X`.
pub fn rank_component(f: &DenseFunction, d: usize) -> Result<DenseFunction> {
    let (n, m) = f.shape();
    if d > n.min(m) {
        return Err(Error::domain(format!("rank {d} exceeds min(n, m) = {}", n.min(m))));
    }
    let spec = fast_transform(f)?;
    Ok(inverse_transform(&spec.filter(|x| x.rank() == d)))
}

/// `max{rank X : f̂(X) ≠ 0}`.
pub fn degree(f: &DenseFunction) -> Result<usize> {
    let spec = fast_transform(f)?;
    spec.coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, _)| spec.dual(i).rank())
        .max()
        .ok_or(Error::ZeroFunction)
}

/// `Π_{V'} f = Σ_{im X = V'} f̂(X) u_X`, with `V' ≤ F_q^m`.
pub fn project_image(f: &DenseFunction, vp: &Subspace) -> Result<DenseFunction> {
    let (_, m) = f.shape();
    if vp.ambient() != m {
        return Err(Error::domain(format!("V' must lie in F^{m}")));
    }
    let spec = fast_transform(f)?;
    Ok(inverse_transform(&spec.filter(|x| x.image() == *vp)))
}

/// `Π_{W'} f = Σ_{ker X = W'} f̂(X) u_X`, with `W' ≤ F_q^n`.
pub fn project_kernel(f: &DenseFunction, wp: &Subspace) -> Result<DenseFunction> {
    let (n, _) = f.shape();
    if wp.ambient() != n {
        return Err(Error::domain(format!("W' must lie in F^{n}")));
    }
    let spec = fast_transform(f)?;
    Ok(inverse_transform(&spec.filter(|x| x.kernel() == *wp)))
}

/// `‖Π_{V'} f‖₂²` for every `V'` of dimension `d` (image side) and every `W'` of
/// codimension `d` (kernel side), read off the spectrum. Rational when `f` is.
pub fn projection_norms(spec: &Spectrum, d: usize) -> (HashMap<Subspace, Cyclo>, HashMap<Subspace, Cyclo>) {
    let p = spec.field.p();
    let mut by_image: HashMap<Subspace, Cyclo> = HashMap::new();
    let mut by_kernel: HashMap<Subspace, Cyclo> = HashMap::new();
    for (i, c) in spec.coeffs.iter().enumerate() {
        let x = spec.dual(i);
        if x.rank() != d {
            continue;
        }
        let e = c.norm_sq();
        *by_image.entry(x.image()).or_insert_with(|| Cyclo::zero(p)) += &e;
        *by_kernel.entry(x.kernel()).or_insert_with(|| Cyclo::zero(p)) += &e;
    }
    (by_image, by_kernel)
}

#[derive(Clone, Debug, Serialize)]
pub struct HyperReport {
    pub d: usize,
    pub k: u32,
    /// `E[|f^{(=d)}|^k]`.
    pub lhs: String,
    /// `Σ_{dim V'=d} ‖Π_{V'}f‖₂^k + Σ_{codim W'=d} ‖Π_{W'}f‖₂^k`.
    pub projection_sum: String,
    pub rhs: QPow,
    pub holds: bool,
}

/// `k^7 d^6 q^{k³d²/2} q^{(3k/4−1)d·max(m,n)}`.
pub fn hyper_constant(q: u32, m: usize, n: usize, d: usize, k: u32) -> QPow {
    let (k64, d64) = (k as i64, d as i64);
    let quarters = 2 * k64.pow(3) * d64 * d64 + (3 * k64 - 4) * d64 * m.max(n) as i64;
    let c = Pow::pow(BigInt::from(k), 7u32) * Pow::pow(BigInt::from(d), 6u32);
    QPow::power(q, quarters).scale(&BigRational::from_integer(c))
}

fn rational_power(x: &BigRational, e: u32) -> BigRational {
    Pow::pow(x, e)
}

/// Evaluates both sides of the restricted hypercontractive inequality exactly.
pub fn verify_hypercontractive(f: &DenseFunction, d: usize, k: u32) -> Result<HyperReport> {
    if k < 4 || k % 2 != 0 {
        return Err(Error::domain("k must be an even integer >= 4"));
    }
    let (n, m) = f.shape();
    if d == 0 || d > n.min(m) {
        return Err(Error::domain(format!("d must lie in 1..={}", n.min(m))));
    }
    let spec = fast_transform(f)?;
    let component = inverse_transform(&spec.filter(|x| x.rank() == d));
    let lhs = component.moment(k)?.try_rational()?;
    let (by_image, by_kernel) = projection_norms(&spec, d);
    let mut sum = BigRational::zero();
    for norm in by_image.values().chain(by_kernel.values()) {
        sum += rational_power(&norm.try_rational()?, k / 2);
    }
    let rhs = hyper_constant(f.field().q(), m, n, d, k).scale(&sum);
    let holds = rhs.cmp_rational(&lhs) != std::cmp::Ordering::Less;
    Ok(HyperReport { d, k, lhs: lhs.to_string(), projection_sum: sum.to_string(), rhs, holds })
}

#[derive(Clone, Debug, Serialize)]
pub struct SumRankReport {
    pub r: usize,
    pub image_sum_dim: usize,
    pub kernel_intersection_codim: usize,
    pub holds: bool,
}

/// For rank-one `X_i` with `Σ λ_i X_i = 0`: `dim Σ im X_i + codim ∩ ker X_i ≤ r`.
pub fn check_sum_rank_nullity(lambdas: &[u16], xs: &[Mat]) -> Result<SumRankReport> {
    if lambdas.len() != xs.len() || xs.is_empty() {
        return Err(Error::shape("need equally many nonzero scalars and matrices"));
    }
    let field = xs[0].field().clone();
    if lambdas.iter().any(|&l| l == 0 || l as u32 >= field.q()) {
        return Err(Error::domain("scalars must be nonzero field elements"));
    }
    let mut total = Mat::zeros(&field, xs[0].nrows(), xs[0].ncols());
    for (i, (x, &l)) in xs.iter().zip(lambdas).enumerate() {
        if x.rank() != 1 {
            return Err(Error::RankNotOne(i));
        }
        total = total.add(&x.scale(l))?;
    }
    if !total.is_zero() {
        return Err(Error::NotInKernelRelation);
    }
    let (rows, cols) = xs[0].shape();
    let image_vecs: Vec<Vec<u16>> = xs.iter().flat_map(|x| x.transpose().rows()).collect();
    let image_sum_dim = Subspace::span(&field, rows, &image_vecs).dim();
    // codim ∩ ker X_i = dim of the span of all rows
    let row_vecs: Vec<Vec<u16>> = xs.iter().flat_map(Mat::rows).collect();
    let kernel_intersection_codim = Subspace::span(&field, cols, &row_vecs).dim();
    let r = xs.len();
    Ok(SumRankReport {
        r,
        image_sum_dim,
        kernel_intersection_codim,
        holds: image_sum_dim + kernel_intersection_codim <= r,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelDReport {
    pub d: usize,
    pub k: u32,
    pub s: usize,
    pub c: String,
    pub mean: String,
    /// `E[|f^{(=d)}|²]`.
    pub level_d_mass: String,
    /// `(E[f])^{k−1} · (Σ ‖Π f‖₂^k) · k^7 d^6 q^{…}`: bounds `level_d_mass^k` via Hölder.
    pub chained_rhs: QPow,
    /// `K · C^k (E f)^{2k−1}` with `K = k^7 d^6 q^{…}([m,d]_q + [n,d]_q)`.
    pub explicit_rhs: QPow,
    pub explicit_constant: QPow,
    pub holds_chained: bool,
    pub holds_explicit: bool,
}

/// The level-`d` inequality for an `(s, C)`-quasiregular indicator, checked on `k`-th powers:
/// `(E|f^{(=d)}|²)^k ≤ (E f)^{k−1} E|f^{(=d)}|^k ≤ (E f)^{k−1} · hyper_rhs ≤ K C^k (E f)^{2k−1}`.
pub fn level_d_bound_check(f: &DenseFunction, d: usize, k: u32, s: usize, c: &BigRational) -> Result<LevelDReport> {
    if !f.is_indicator() {
        return Err(Error::NotIndicator);
    }
    if d > s {
        return Err(Error::domain(format!("d = {d} exceeds s = {s}")));
    }
    let values = f.rational_values()?;
    if crate::families::quasiregular_witness_weights(f.field(), f.shape(), &values, s, c)?.is_some() {
        return Err(Error::NotQuasiregular { s, alpha: c.to_string() });
    }
    let (n, m) = f.shape();
    let q = f.field().q();
    let mean = f.expectation().try_rational()?;
    let spec = fast_transform(f)?;
    let component = inverse_transform(&spec.filter(|x| x.rank() == d));
    let mass = component.moment(2)?.try_rational()?;
    let hyper = verify_hypercontractive(f, d, k)?;
    let chained_rhs = hyper.rhs.scale(&rational_power(&mean, k - 1));
    let lhs_k = rational_power(&mass, k);
    let holds_chained = chained_rhs.cmp_rational(&lhs_k) != std::cmp::Ordering::Less;
    let subspace_count = gaussian_binomial(m, d, q)? + gaussian_binomial(n, d, q)?;
    let explicit_constant = hyper_constant(q, m, n, d, k).scale(&BigRational::from_integer(subspace_count));
    let explicit_rhs =
        explicit_constant.scale(&(rational_power(c, k) * rational_power(&mean, 2 * k - 1)));
    let holds_explicit = explicit_rhs.cmp_rational(&lhs_k) != std::cmp::Ordering::Less;
    Ok(LevelDReport {
        d,
        k,
        s,
        c: c.to_string(),
        mean: mean.to_string(),
        level_d_mass: mass.to_string(),
        chained_rhs,
        explicit_rhs,
        explicit_constant,
        holds_chained,
        holds_explicit,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionReport {
    pub s: usize,
    pub c: String,
    pub mean: String,
    /// `C² (E f)²`.
    pub bound: String,
    /// Largest `‖Π_{V'} f‖₂²` over `1 ≤ dim V' ≤ s`.
    pub max_image: String,
    /// Largest `‖Π_{W'} f‖₂²` over `1 ≤ codim W' ≤ s`.
    pub max_kernel: String,
    pub subspaces_checked: usize,
    pub holds: bool,
}

/// For an `(s, C)`-quasiregular nonnegative `f` with `C ≥ 1`: every projection of rank
/// at most `s` has squared norm at most `C² (E f)²`.
pub fn projection_norm_check(f: &DenseFunction, s: usize, c: &BigRational) -> Result<ProjectionReport> {
    if *c < BigRational::one() {
        return Err(Error::domain("C must be at least 1"));
    }
    let values = f.rational_values()?;
    if values.iter().any(|v| *v < BigRational::zero()) {
        return Err(Error::domain("f must be nonnegative"));
    }
    if crate::families::quasiregular_witness_weights(f.field(), f.shape(), &values, s, c)?.is_some() {
        return Err(Error::NotQuasiregular { s, alpha: c.to_string() });
    }
    let (n, m) = f.shape();
    let mean = f.expectation().try_rational()?;
    let bound = c * c * &mean * &mean;
    let spec = fast_transform(f)?;
    let (mut max_image, mut max_kernel) = (BigRational::zero(), BigRational::zero());
    let mut checked = 0;
    for d in 1..=s.min(n).min(m) {
        let (by_image, by_kernel) = projection_norms(&spec, d);
        checked += by_image.len() + by_kernel.len();
        for v in by_image.values() {
            max_image = max_image.max(v.try_rational()?);
        }
        for v in by_kernel.values() {
            max_kernel = max_kernel.max(v.try_rational()?);
        }
    }
    Ok(ProjectionReport {
        s,
        c: c.to_string(),
        mean: mean.to_string(),
        holds: max_image <= bound && max_kernel <= bound,
        bound: bound.to_string(),
        max_image: max_image.to_string(),
        max_kernel: max_kernel.to_string(),
        subspaces_checked: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matspace::{enumerate, subspaces, Space};
    use crate::Budget;
    use proptest::prelude::*;

    fn gf(q: u32) -> Field {
        Field::gf(q).unwrap()
    }
    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn character_examples() {
        let f2 = gf(2);
        let one = Mat::from_data(&f2, 1, 1, vec![1]).unwrap();
        let zero = Mat::zeros(&f2, 1, 1);
        assert_eq!(character(&zero, &one).unwrap(), Cyclo::one(2));
        assert_eq!(character(&one, &one).unwrap(), Cyclo::from_int(2, -1));
        let f4 = gf(4);
        let w = Mat::from_data(&f4, 1, 1, vec![2]).unwrap();
        assert_eq!(character(&w, &w).unwrap(), Cyclo::from_int(2, -1));
        assert!(character(&Mat::zeros(&f2, 2, 1), &Mat::zeros(&f2, 2, 1)).is_err());
    }

    #[test]
    fn transform_examples() {
        let f = gf(2);
        let ones = DenseFunction::constant(&f, 2, 1, &r(1, 1)).unwrap();
        let spec = transform(&ones).unwrap();
        assert_eq!(spec.coeffs()[0], Cyclo::one(2));
        assert!(spec.coeffs()[1..].iter().all(Cyclo::is_zero));

        let point = DenseFunction::indicator(&f, 2, 1, [&Mat::zeros(&f, 2, 1)]).unwrap();
        let spec = transform(&point).unwrap();
        assert!(spec.coeffs().iter().all(|c| *c == Cyclo::from_rational(2, &r(1, 4))));

        let one = Mat::from_data(&f, 1, 1, vec![1]).unwrap();
        let ind = DenseFunction::indicator(&f, 1, 1, [&one]).unwrap();
        let spec = transform(&ind).unwrap();
        assert_eq!(spec.coeffs(), &[Cyclo::from_rational(2, &r(1, 2)), Cyclo::from_rational(2, &r(-1, 2))]);
        for g in [&ones, &point, &ind] {
            assert_eq!(&inverse_transform(&transform(g).unwrap()), g);
        }
    }

    #[test]
    fn fast_matches_naive_small_shapes() {
        for (q, n, m) in [(3, 1, 2), (4, 1, 2), (5, 1, 1), (2, 2, 3), (9, 1, 1)] {
            let f = gf(q);
            let g = DenseFunction::from_fn(&f, n, m, |a| {
                Cyclo::from_int(f.p(), (a.index() as i64 * 7 + 3) % 5 - 2)
            })
            .unwrap();
            assert_eq!(fast_transform(&g).unwrap(), transform(&g).unwrap(), "q={q}");
            assert_eq!(inverse_transform(&fast_transform(&g).unwrap()), g);
        }
    }

    #[test]
    fn rank_component_examples() {
        let f = gf(2);
        let c = DenseFunction::constant(&f, 2, 2, &r(3, 1)).unwrap();
        assert_eq!(rank_component(&c, 0).unwrap(), c);
        assert!(rank_component(&c, 1).unwrap().is_zero());
        assert!(rank_component(&c, 3).is_err());
        let point = DenseFunction::indicator(&f, 2, 2, [&Mat::zeros(&f, 2, 2)]).unwrap();
        for d in 0..=2 {
            let mass = rank_component(&point, d).unwrap().moment(2).unwrap();
            let count = crate::matspace::count_rank_d(2, 2, d, 2).unwrap();
            assert_eq!(mass.to_rational().unwrap(), BigRational::new(count, BigInt::from(256)));
        }
        assert_eq!(degree(&point).unwrap(), 2);
        assert_eq!(degree(&c).unwrap(), 0);
        assert!(matches!(degree(&DenseFunction::constant(&f, 1, 1, &r(0, 1)).unwrap()), Err(Error::ZeroFunction)));
        let x = Mat::from_data(&f, 2, 2, vec![1, 0, 0, 0]).unwrap();
        assert_eq!(degree(&DenseFunction::character_fn(&x).unwrap()).unwrap(), 1);
    }

    #[test]
    fn projections_of_gl_indicator_are_symmetric() {
        let f = gf(2);
        let gl: Vec<Mat> = enumerate(&f, Space::Gl { n: 2 }, &Budget::default()).unwrap().collect();
        let ind = DenseFunction::indicator(&f, 2, 2, &gl).unwrap();
        let norms: Vec<Cyclo> = subspaces(&f, 2, 1)
            .iter()
            .map(|v| project_image(&ind, v).unwrap().moment(2).unwrap())
            .collect();
        assert!(norms.windows(2).all(|w| w[0] == w[1]));
        let zero = Subspace::zero(&f, 2);
        assert_eq!(project_image(&ind, &zero).unwrap(), rank_component(&ind, 0).unwrap());
        let total = subspaces(&f, 2, 1)
            .iter()
            .map(|v| project_image(&ind, v).unwrap())
            .reduce(|a, b| a.add(&b).unwrap())
            .unwrap();
        assert_eq!(total, rank_component(&ind, 1).unwrap());
    }

    #[test]
    fn hypercontractive_examples() {
        let f = gf(2);
        let zero = DenseFunction::constant(&f, 2, 2, &r(0, 1)).unwrap();
        let rep = verify_hypercontractive(&zero, 1, 4).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.lhs, "0");
        let x = Mat::from_data(&f, 2, 2, vec![1, 0, 0, 1]).unwrap();
        let rep = verify_hypercontractive(&DenseFunction::character_fn(&x).unwrap(), 2, 4).unwrap();
        assert_eq!(rep.lhs, "1");
        assert!(rep.holds);
        assert!(verify_hypercontractive(&zero, 1, 3).is_err());
    }

    #[test]
    fn sum_rank_nullity_examples() {
        let f = gf(2);
        let x = Mat::from_data(&f, 2, 2, vec![1, 0, 0, 0]).unwrap();
        let rep = check_sum_rank_nullity(&[1, 1], &[x.clone(), x.clone()]).unwrap();
        assert_eq!((rep.image_sum_dim, rep.kernel_intersection_codim, rep.holds), (1, 1, true));
        let y = Mat::from_data(&f, 2, 2, vec![0, 0, 0, 1]).unwrap();
        assert!(matches!(check_sum_rank_nullity(&[1, 1], &[x.clone(), y]), Err(Error::NotInKernelRelation)));
        let id = Mat::identity(&f, 2);
        assert!(matches!(check_sum_rank_nullity(&[1, 1], &[x, id]), Err(Error::RankNotOne(1))));
    }

    #[test]
    fn level_d_examples() {
        let f = gf(2);
        let ones = DenseFunction::constant(&f, 2, 2, &r(1, 1)).unwrap();
        let rep = level_d_bound_check(&ones, 1, 4, 1, &r(1, 1)).unwrap();
        assert_eq!(rep.level_d_mass, "0");
        assert!(rep.holds_chained && rep.holds_explicit);
        let half = DenseFunction::constant(&f, 2, 2, &r(1, 2)).unwrap();
        assert!(matches!(level_d_bound_check(&half, 1, 4, 1, &r(1, 1)), Err(Error::NotIndicator)));
        let point = DenseFunction::indicator(&f, 2, 2, [&Mat::zeros(&f, 2, 2)]).unwrap();
        assert!(matches!(
            level_d_bound_check(&point, 1, 4, 1, &r(2, 1)),
            Err(Error::NotQuasiregular { .. })
        ));
    }

    fn arb_fn(q: u32, n: usize, m: usize) -> impl Strategy<Value = DenseFunction> {
        let count = (q as usize).pow((n * m) as u32);
        prop::collection::vec((-5i64..6, 1i64..4), count).prop_map(move |v| {
            let f = Field::gf(q).unwrap();
            let vals: Vec<BigRational> = v.into_iter().map(|(a, b)| BigRational::new(a.into(), b.into())).collect();
            DenseFunction::from_rationals(&f, n, m, &vals).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn parseval_and_components(g in arb_fn(3, 2, 1), h in arb_fn(2, 2, 2)) {
            for f in [&g, &h] {
                let spec = fast_transform(f).unwrap();
                prop_assert_eq!(spec.energy(), f.moment(2).unwrap());
                prop_assert_eq!(&inverse_transform(&spec), f);
                let (n, m) = f.shape();
                let comps: Vec<DenseFunction> = (0..=n.min(m)).map(|d| rank_component(f, d).unwrap()).collect();
                let total = comps.iter().cloned().reduce(|a, b| a.add(&b).unwrap()).unwrap();
                prop_assert_eq!(&total, f);
                for i in 0..comps.len() {
                    prop_assert_eq!(&rank_component(&comps[i], i).unwrap(), &comps[i]);
                    for j in 0..i {
                        prop_assert!(comps[i].inner(&comps[j]).unwrap().is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn projection_norm_examples() {
        let f = gf(2);
        let one = DenseFunction::constant(&f, 2, 2, &r(1, 1)).unwrap();
        let rep = projection_norm_check(&one, 2, &r(1, 1)).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.max_image, "0");
        // indicator of {A : A e1 = 0}: quasiregular with C = 4 at s = 1; its spectrum
        // is the three rank-one duals with image span(e1), one per kernel line
        let ind = DenseFunction::from_fn(&f, 2, 2, |a| Cyclo::from_int(2, i64::from(a.col(0) == vec![0, 0]))).unwrap();
        assert!(matches!(projection_norm_check(&ind, 1, &r(3, 1)), Err(Error::NotQuasiregular { .. })));
        let rep = projection_norm_check(&ind, 1, &r(4, 1)).unwrap();
        assert!(rep.holds);
        assert_eq!((rep.max_image.as_str(), rep.max_kernel.as_str()), ("3/16", "1/16"));
        assert!(projection_norm_check(&ind, 1, &r(1, 2)).is_err());
    }
}
