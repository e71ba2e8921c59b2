//! Families of linear maps `σ: F_q^m → F_q^n` (stored as `n × m` matrices),
//! restriction cosets, juntas, and the pseudorandomness searches.
//!
//! A [`Restriction`] is a pair of partial maps: column constraints `σ(v) = w`
//! (`v ∈ V = F^m`, `w ∈ W = F^n`) and row constraints `σ*(a) = b`, i.e.
//! `aᵀσ = bᵀ` (`a ∈ W*`, `b ∈ V*`). Each side is stored as the RREF of its graph,
//! so equal partial maps have equal representations.
//!
//! Search order for capture/quasiregularity witnesses: total complexity
//! `dim S + dim A` ascending, then `dim S` descending, then `S` and `A` in
//! canonical subspace order, then the values of `Π` and `π` on the RREF bases as
//! base-`q` counters. The first hit in this order is the witness.

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::budget::{checked_pow, Budget};
use crate::cyclo::Cyclo;
use crate::error::{Error, Result};
use crate::fourier::DenseFunction;
use crate::gf::Field;
use crate::matspace::{
    agreement_dim, dual_agreement_dim, rref_in_place, subspaces, vec_from_index, vec_index, AffineSolutions, Mat,
    Subspace,
};
use crate::power::QPow;

/// A constraint `(x, y)`: `σ(x) = y` on the column side, `xᵀσ = yᵀ` on the row side.
pub type Pair = (Vec<u16>, Vec<u16>);

#[derive(Clone, PartialEq, Eq)]
pub struct Restriction {
    field: Field,
    n: usize,
    m: usize,
    cols: Vec<Pair>,
    rows: Vec<Pair>,
}

impl Hash for Restriction {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (self.n, self.m, &self.cols, &self.rows).hash(state);
    }
}

impl fmt::Debug for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |pairs: &[Pair], arrow: &str| {
            pairs
                .iter()
                .map(|(x, y)| format!("{x:?}{arrow}{y:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        write!(f, "<cols: {}; rows: {}>", side(&self.cols, "->"), side(&self.rows, "*->"))
    }
}

/// RREF of the graph `{(x, y)}`; fails if the pairs do not define a map (some `0 ↦ y ≠ 0`).
fn normalize_side(field: &Field, dom: usize, cod: usize, pairs: &[Pair]) -> Result<Vec<Pair>> {
    let w = dom + cod;
    let mut data = Vec::with_capacity(pairs.len() * w);
    for (x, y) in pairs {
        if x.len() != dom || y.len() != cod {
            return Err(Error::shape(format!("constraint pair must have lengths ({dom}, {cod})")));
        }
        data.extend_from_slice(x);
        data.extend_from_slice(y);
    }
    let piv = rref_in_place(field, &mut data, pairs.len(), w);
    if piv.iter().any(|&c| c >= dom) {
        return Err(Error::InconsistentRestriction);
    }
    Ok(data
        .chunks(w.max(1))
        .take(piv.len())
        .map(|r| (r[..dom].to_vec(), r[dom..].to_vec()))
        .collect())
}

fn pow_big(q: u32, e: usize) -> BigInt {
    Pow::pow(BigInt::from(q), e)
}

impl Restriction {
    /// A consistent restriction; both sides are normalised.
    pub fn new(field: &Field, n: usize, m: usize, cols: Vec<Pair>, rows: Vec<Pair>) -> Result<Self> {
        let r = Self::maps(field, n, m, cols, rows)?;
        if !r.is_consistent() {
            return Err(Error::InconsistentRestriction);
        }
        Ok(r)
    }

    /// A pair of partial maps `(Π, π)` without the cross-condition `a(w) = b(v)`.
    /// Enough for avoidance; the coset it would cut out may be empty.
    pub fn maps(field: &Field, n: usize, m: usize, cols: Vec<Pair>, rows: Vec<Pair>) -> Result<Self> {
        Ok(Restriction {
            field: field.clone(),
            n,
            m,
            cols: normalize_side(field, m, n, &cols)?,
            rows: normalize_side(field, n, m, &rows)?,
        })
    }

    pub fn empty(field: &Field, n: usize, m: usize) -> Self {
        Restriction { field: field.clone(), n, m, cols: Vec::new(), rows: Vec::new() }
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
    pub fn cols(&self) -> &[Pair] {
        &self.cols
    }
    pub fn rows(&self) -> &[Pair] {
        &self.rows
    }
    /// `(dim S, dim A)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.cols.len(), self.rows.len())
    }
    pub fn complexity(&self) -> usize {
        self.cols.len() + self.rows.len()
    }
    pub fn is_empty(&self) -> bool {
        self.complexity() == 0
    }

    /// `S ≤ V`.
    pub fn col_domain(&self) -> Subspace {
        let vs: Vec<Vec<u16>> = self.cols.iter().map(|p| p.0.clone()).collect();
        Subspace::span(&self.field, self.m, &vs)
    }
    /// `A ≤ W*`.
    pub fn row_domain(&self) -> Subspace {
        let vs: Vec<Vec<u16>> = self.rows.iter().map(|p| p.0.clone()).collect();
        Subspace::span(&self.field, self.n, &vs)
    }

    fn graph(&self, rows_side: bool) -> Subspace {
        let (pairs, len) = if rows_side { (&self.rows, self.n + self.m) } else { (&self.cols, self.m + self.n) };
        let vs: Vec<Vec<u16>> = pairs.iter().map(|(x, y)| [x.as_slice(), y.as_slice()].concat()).collect();
        Subspace::span(&self.field, len, &vs)
    }

    /// `a(w) = b(v)` for every column pair `(v, w)` and row pair `(a, b)`.
    pub fn is_consistent(&self) -> bool {
        let f = &self.field;
        self.cols.iter().all(|(v, w)| {
            self.rows
                .iter()
                .all(|(a, b)| crate::matspace::dot(f, a, w) == crate::matspace::dot(f, b, v))
        })
    }

    /// `σ` agrees with `Π` on `S` and `σ*` with `π` on `A`.
    pub fn contains(&self, sigma: &Mat) -> bool {
        self.cols.iter().all(|(v, w)| sigma.apply(v) == *w) && self.rows.iter().all(|(a, b)| sigma.apply_left(a) == *b)
    }

    /// `σ(x) ≠ Π(x)` for all nonzero `x ∈ S` and `σ*(a) ≠ π(a)` for all nonzero `a ∈ A`.
    pub fn avoided_by(&self, sigma: &Mat) -> bool {
        let f = &self.field;
        let diffs: Vec<Vec<u16>> = self.cols.iter().map(|(v, w)| crate::matspace::vec_sub(f, &sigma.apply(v), w)).collect();
        if Subspace::span(f, self.n, &diffs).dim() < self.cols.len() {
            return false;
        }
        let diffs: Vec<Vec<u16>> =
            self.rows.iter().map(|(a, b)| crate::matspace::vec_sub(f, &sigma.apply_left(a), b)).collect();
        Subspace::span(f, self.m, &diffs).dim() == self.rows.len()
    }

    /// `log_q` of the coset size: `(m − dim S)(n − dim A)`.
    pub fn coset_log_size(&self) -> usize {
        (self.m - self.cols.len()) * (self.n - self.rows.len())
    }

    pub fn coset_cardinality(&self) -> Result<BigInt> {
        if !self.is_consistent() {
            return Err(Error::InconsistentRestriction);
        }
        Ok(pow_big(self.field.q(), self.coset_log_size()))
    }

    /// Measure of the coset in the full space.
    pub fn coset_measure(&self) -> Result<BigRational> {
        Ok(BigRational::new(self.coset_cardinality()?, pow_big(self.field.q(), self.n * self.m)))
    }

    fn check_shape(&self, other: &Restriction) -> Result<()> {
        if self.n != other.n || self.m != other.m || self.field != other.field {
            return Err(Error::shape("restrictions on different spaces"));
        }
        Ok(())
    }

    /// Whether both domains meet `other`'s trivially.
    pub fn meets_trivially(&self, other: &Restriction) -> bool {
        self.col_domain().intersect(&other.col_domain()).dim() == 0
            && self.row_domain().intersect(&other.row_domain()).dim() == 0
    }

    /// The joint restriction; domains must meet trivially.
    pub fn merge(&self, other: &Restriction) -> Result<Restriction> {
        self.check_shape(other)?;
        if !self.meets_trivially(other) {
            return Err(Error::DomainOverlap);
        }
        let cols = self.cols.iter().chain(&other.cols).cloned().collect();
        let rows = self.rows.iter().chain(&other.rows).cloned().collect();
        Restriction::new(&self.field, self.n, self.m, cols, rows)
    }

    /// The intersection of the two cosets as a restriction, `None` if empty.
    pub fn intersect(&self, other: &Restriction) -> Option<Restriction> {
        if self.check_shape(other).is_err() {
            return None;
        }
        let cols = self.cols.iter().chain(&other.cols).cloned().collect();
        let rows = self.rows.iter().chain(&other.rows).cloned().collect();
        Restriction::new(&self.field, self.n, self.m, cols, rows).ok()
    }

    /// Adds one column constraint, without checking consistency.
    pub fn extend_col(&self, x: Vec<u16>, y: Vec<u16>) -> Result<Restriction> {
        let mut cols = self.cols.clone();
        cols.push((x, y));
        Restriction::maps(&self.field, self.n, self.m, cols, self.rows.clone())
    }

    pub fn extend_row(&self, a: Vec<u16>, b: Vec<u16>) -> Result<Restriction> {
        let mut rows = self.rows.clone();
        rows.push((a, b));
        Restriction::maps(&self.field, self.n, self.m, self.cols.clone(), rows)
    }

    fn side_elements(&self, pairs: &[Pair], dom: usize, cod: usize) -> Vec<Pair> {
        let f = &self.field;
        let q = f.q();
        let count = (q as usize).pow(pairs.len() as u32);
        (1..count)
            .map(|i| {
                let c = vec_from_index(q, pairs.len(), i);
                let mut x = vec![0u16; dom];
                let mut y = vec![0u16; cod];
                for (ci, (px, py)) in c.iter().zip(pairs) {
                    x = crate::matspace::vec_add(f, &x, &crate::matspace::vec_scale(f, *ci, px));
                    y = crate::matspace::vec_add(f, &y, &crate::matspace::vec_scale(f, *ci, py));
                }
                (x, y)
            })
            .collect()
    }

    /// `(x, Π(x))` for every nonzero `x ∈ S`.
    pub fn col_elements(&self) -> Vec<Pair> {
        self.side_elements(&self.cols, self.m, self.n)
    }
    /// `(a, π(a))` for every nonzero `a ∈ A`.
    pub fn row_elements(&self) -> Vec<Pair> {
        self.side_elements(&self.rows, self.n, self.m)
    }

    /// `(dim 𝔞(Π, Π'), dim 𝔞(π, π'))`, agreement measured on the intersection of domains.
    pub fn agreement_dims(&self, other: &Restriction) -> (usize, usize) {
        (
            self.graph(false).intersect(&other.graph(false)).dim(),
            self.graph(true).intersect(&other.graph(true)).dim(),
        )
    }

    /// The same constraints read on transposed matrices.
    pub fn transpose(&self) -> Restriction {
        Restriction { field: self.field.clone(), n: self.m, m: self.n, cols: self.rows.clone(), rows: self.cols.clone() }
    }

    /// The coset as an affine system in the `nm` entries (row-major).
    pub fn linear_system(&self) -> (Vec<Vec<u16>>, Vec<u16>) {
        let (n, m) = (self.n, self.m);
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (v, w) in &self.cols {
            for i in 0..n {
                let mut eq = vec![0u16; n * m];
                eq[i * m..(i + 1) * m].copy_from_slice(v);
                rows.push(eq);
                rhs.push(w[i]);
            }
        }
        for (a, b) in &self.rows {
            for j in 0..m {
                let mut eq = vec![0u16; n * m];
                for i in 0..n {
                    eq[i * m + j] = a[i];
                }
                rows.push(eq);
                rhs.push(b[j]);
            }
        }
        (rows, rhs)
    }

    /// Affine chart `Y ↦ σ₀ + P·Y·Q` of the coset by `M(n − dim A, m − dim S)`.
    pub fn chart(&self) -> Result<CosetChart> {
        if !self.is_consistent() {
            return Err(Error::InconsistentRestriction);
        }
        let (rows, rhs) = self.linear_system();
        let sols = AffineSolutions::new(&self.field, self.n * self.m, &rows, &rhs).ok_or(Error::InconsistentRestriction)?;
        let base = Mat::from_data(&self.field, self.n, self.m, sols.solution(&vec![0; sols.free_vars().len()]))?;
        let colspace = self.row_domain().annihilator();
        let rowspace = self.col_domain().annihilator();
        Ok(CosetChart {
            p: colspace.basis_mat().transpose(),
            q: rowspace.basis_mat(),
            p_piv: colspace.pivots(),
            q_piv: rowspace.pivots(),
            base,
        })
    }

    /// Every member of the coset, in chart order.
    pub fn members(&self, budget: &Budget) -> Result<Vec<Mat>> {
        let chart = self.chart()?;
        let total = chart.len(budget)?;
        Ok((0..total).map(|i| chart.map_index(i)).collect())
    }

    pub fn to_json(&self) -> Value {
        json!({ "cols": self.cols, "rows": self.rows })
    }

    /// Parses `{"cols": [[v, w], ...], "rows": [[a, b], ...]}`; requires consistency.
    pub fn from_json(field: &Field, n: usize, m: usize, value: &Value) -> Result<Restriction> {
        let side = |key: &str| -> Result<Vec<Pair>> {
            match value.get(key) {
                None => Ok(Vec::new()),
                Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::Parse(format!("{key}: {e}"))),
            }
        };
        let check = |pairs: &[Pair]| pairs.iter().flat_map(|(x, y)| x.iter().chain(y)).all(|&e| (e as u32) < field.q());
        let (cols, rows) = (side("cols")?, side("rows")?);
        if !check(&cols) || !check(&rows) {
            return Err(Error::Parse("constraint entry out of range".into()));
        }
        Restriction::new(field, n, m, cols, rows)
    }
}

/// Coordinates on a restriction coset. `P` (`n × n'`) spans the common
/// annihilator of the row constraints, `Q` (`m' × m`) the functionals vanishing on `S`.
#[derive(Clone, Debug)]
pub struct CosetChart {
    base: Mat,
    p: Mat,
    q: Mat,
    p_piv: Vec<usize>,
    q_piv: Vec<usize>,
}

impl CosetChart {
    /// `(n − dim A, m − dim S)`.
    pub fn chart_shape(&self) -> (usize, usize) {
        (self.p.ncols(), self.q.nrows())
    }

    pub fn len(&self, budget: &Budget) -> Result<u64> {
        let (a, b) = self.chart_shape();
        budget.check_items("coset enumeration", checked_pow(self.base.field().q() as u64, a * b))
    }

    pub fn base(&self) -> &Mat {
        &self.base
    }

    pub fn map(&self, y: &Mat) -> Mat {
        let d = self.p.mul(y).and_then(|py| py.mul(&self.q)).expect("chart shapes compose");
        self.base.add(&d).expect("same shape")
    }

    pub fn map_index(&self, idx: u64) -> Mat {
        let (a, b) = self.chart_shape();
        self.map(&Mat::from_index(self.base.field(), a, b, idx))
    }

    /// Chart coordinates of a coset member; `None` outside the coset.
    pub fn inverse(&self, sigma: &Mat) -> Option<Mat> {
        if sigma.shape() != self.base.shape() {
            return None;
        }
        let d = sigma.sub(&self.base).ok()?;
        let (a, b) = self.chart_shape();
        let y = Mat::from_fn(self.base.field(), a, b, |k, l| d.get(self.p_piv[k], self.q_piv[l]));
        (self.map(&y) == *sigma).then_some(y)
    }
}

/// An explicit family, optionally living in a restriction coset.
#[derive(Clone, Debug, PartialEq)]
pub struct Family {
    field: Field,
    n: usize,
    m: usize,
    members: Vec<Mat>,
    context: Option<Restriction>,
}

impl Family {
    pub fn new(field: &Field, n: usize, m: usize, members: Vec<Mat>, context: Option<Restriction>) -> Result<Self> {
        if let Some(r) = &context {
            if (r.n, r.m) != (n, m) || r.field != *field {
                return Err(Error::shape("context lives on a different space"));
            }
            if !r.is_consistent() {
                return Err(Error::InconsistentRestriction);
            }
        }
        let mut members = members;
        for a in &members {
            if a.shape() != (n, m) || a.field() != field {
                return Err(Error::shape(format!("member {a} is not an {n}x{m} matrix over F_{}", field.q())));
            }
            if let Some(r) = &context {
                if !r.contains(a) {
                    return Err(Error::PreconditionViolated(format!("member {a} violates the context")));
                }
            }
        }
        members.sort();
        members.dedup();
        Ok(Family { field: field.clone(), n, m, members, context })
    }

    /// All of `M(n, m)`.
    pub fn full(field: &Field, n: usize, m: usize, budget: &Budget) -> Result<Self> {
        Family::coset(&Restriction::empty(field, n, m), budget)
    }

    /// Every member of a coset, as a family on the full space.
    pub fn coset(r: &Restriction, budget: &Budget) -> Result<Self> {
        Family::new(&r.field, r.n, r.m, r.members(budget)?, None)
    }

    pub fn from_fn(field: &Field, n: usize, m: usize, budget: &Budget, mut keep: impl FnMut(&Mat) -> bool) -> Result<Self> {
        let total = budget.check_items("family scan", checked_pow(field.q() as u64, n * m))?;
        let members = (0..total).map(|i| Mat::from_index(field, n, m, i)).filter(|a| keep(a)).collect();
        Family::new(field, n, m, members, None)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.m)
    }
    pub fn members(&self) -> &[Mat] {
        &self.members
    }
    pub fn len(&self) -> usize {
        self.members.len()
    }
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
    pub fn context(&self) -> Option<&Restriction> {
        self.context.as_ref()
    }
    pub fn contains(&self, a: &Mat) -> bool {
        self.members.binary_search(a).is_ok()
    }

    fn context_or_empty(&self) -> Restriction {
        self.context.clone().unwrap_or_else(|| Restriction::empty(&self.field, self.n, self.m))
    }

    pub fn coset_cardinality(&self) -> BigInt {
        pow_big(self.field.q(), self.context_or_empty().coset_log_size())
    }

    /// `|F| / |coset|`.
    pub fn measure(&self) -> BigRational {
        BigRational::new(BigInt::from(self.members.len()), self.coset_cardinality())
    }

    /// `F(Π, π)`, measured inside the merged coset.
    pub fn restrict(&self, r: &Restriction) -> Result<Family> {
        let ctx = self.context_or_empty().merge(r)?;
        let members = self.members.iter().filter(|a| r.contains(a)).cloned().collect();
        Family::new(&self.field, self.n, self.m, members, Some(ctx))
    }

    /// `F(Π̄, π̄)`: members disagreeing with `Π` and `π` at every nonzero point.
    pub fn restrict_avoiding(&self, r: &Restriction) -> Result<Family> {
        let ctx = self.context_or_empty();
        ctx.check_shape(r)?;
        if !ctx.meets_trivially(r) {
            return Err(Error::DomainOverlap);
        }
        let members = self.members.iter().filter(|a| r.avoided_by(a)).cloned().collect();
        Ok(Family { members, ..self.clone() })
    }

    /// Forgets the context (the members are unchanged, the measure is taken in the full space).
    pub fn widen(&self) -> Family {
        Family { context: None, ..self.clone() }
    }

    /// Every pair of distinct members agrees on at least `t` dimensions.
    pub fn is_t_intersecting(&self, t: usize) -> (bool, Option<(Mat, Mat)>) {
        self.find_pair(|d| d < t)
    }

    /// No pair of distinct members agrees on exactly `t1` dimensions.
    pub fn is_intersection_free(&self, t1: usize) -> (bool, Option<(Mat, Mat)>) {
        self.find_pair(|d| d == t1)
    }

    fn find_pair(&self, bad: impl Fn(usize) -> bool) -> (bool, Option<(Mat, Mat)>) {
        for (i, a) in self.members.iter().enumerate() {
            for b in &self.members[i + 1..] {
                if bad(agreement_dim(a, b).expect("same shape")) {
                    return (false, Some((a.clone(), b.clone())));
                }
            }
        }
        (true, None)
    }

    /// As [`Family::is_intersection_free`], with agreement taken on the adjoints.
    pub fn is_dual_intersection_free(&self, t1: usize) -> (bool, Option<(Mat, Mat)>) {
        for (i, a) in self.members.iter().enumerate() {
            for b in &self.members[i + 1..] {
                if dual_agreement_dim(a, b).expect("same shape") == t1 {
                    return (false, Some((a.clone(), b.clone())));
                }
            }
        }
        (true, None)
    }

    /// `{σ* : σ ∈ F}` on the transposed space.
    pub fn dual(&self) -> Family {
        let mut members: Vec<Mat> = self.members.iter().map(Mat::transpose).collect();
        members.sort();
        Family {
            field: self.field.clone(),
            n: self.m,
            m: self.n,
            members,
            context: self.context.as_ref().map(Restriction::transpose),
        }
    }

    /// The indicator, on the full space or (with a context) in chart coordinates.
    pub fn indicator(&self, budget: &Budget) -> Result<DenseFunction> {
        let p = self.field.p();
        match &self.context {
            None => DenseFunction::indicator(&self.field, self.n, self.m, &self.members),
            Some(r) => {
                let chart = r.chart()?;
                let total = chart.len(budget)?;
                let mut values = vec![Cyclo::zero(p); total as usize];
                for a in &self.members {
                    let y = chart.inverse(a).expect("members lie in the context");
                    values[y.index() as usize] = Cyclo::one(p);
                }
                DenseFunction::on_coset(r.clone(), values)
            }
        }
    }
}

/// A union of restriction cosets with declared parameters `(C, r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Junta {
    field: Field,
    n: usize,
    m: usize,
    components: Vec<Restriction>,
    pub c: usize,
    pub r: usize,
}

impl Junta {
    pub fn new(field: &Field, n: usize, m: usize, components: Vec<Restriction>, c: usize, r: usize) -> Result<Self> {
        if components.len() > c {
            return Err(Error::PreconditionViolated(format!("{} components exceed C = {c}", components.len())));
        }
        for comp in &components {
            if (comp.n, comp.m) != (n, m) || comp.field != *field {
                return Err(Error::shape("component lives on a different space"));
            }
            if comp.complexity() > r {
                return Err(Error::PreconditionViolated(format!("component {comp} has complexity above r = {r}")));
            }
            if !comp.is_consistent() {
                return Err(Error::InconsistentRestriction);
            }
        }
        Ok(Junta { field: field.clone(), n, m, components, c, r })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.m)
    }
    pub fn components(&self) -> &[Restriction] {
        &self.components
    }

    pub fn contains(&self, sigma: &Mat) -> bool {
        self.components.iter().any(|c| c.contains(sigma))
    }

    /// Exact measure of the union: inclusion–exclusion for at most 12 components, enumeration otherwise.
    pub fn measure(&self, budget: &Budget) -> Result<BigRational> {
        let k = self.components.len();
        if k <= 12 {
            let mut total = BigRational::zero();
            for mask in 1u32..(1 << k) {
                let mut acc = Some(Restriction::empty(&self.field, self.n, self.m));
                for (i, c) in self.components.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        acc = acc.and_then(|a| a.intersect(c));
                    }
                }
                if let Some(r) = acc {
                    let mu = r.coset_measure()?;
                    if mask.count_ones() % 2 == 1 {
                        total += mu;
                    } else {
                        total -= mu;
                    }
                }
            }
            return Ok(total);
        }
        let hits = Family::from_fn(&self.field, self.n, self.m, budget, |a| self.contains(a))?.len();
        Ok(BigRational::new(BigInt::from(hits), pow_big(self.field.q(), self.n * self.m)))
    }

    /// For all `i, j` (including `i = j`): `dim 𝔞(Π_i, Π_j) ≥ t` or `dim 𝔞(π_i, π_j) ≥ t`.
    pub fn is_strongly_t_intersecting(&self, t: usize) -> (bool, Option<(usize, usize)>) {
        for (i, a) in self.components.iter().enumerate() {
            for (j, b) in self.components.iter().enumerate().skip(i) {
                let (dc, dr) = a.agreement_dims(b);
                if dc < t && dr < t {
                    return (false, Some((i, j)));
                }
            }
        }
        (true, None)
    }

    pub fn members(&self, budget: &Budget) -> Result<Family> {
        Family::from_fn(&self.field, self.n, self.m, budget, |a| self.contains(a))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "q": self.field.q(),
            "n": self.n,
            "m": self.m,
            "C": self.c,
            "r": self.r,
            "components": self.components.iter().map(Restriction::to_json).collect::<Vec<_>>(),
        })
    }
}

// ---------------------------------------------------------------------------
// Weighted searches

/// Nonnegative integer weights on the points of a coset; a family has weight 1 per member.
struct Weighted {
    field: Field,
    n: usize,
    m: usize,
    ctx: Restriction,
    points: Vec<(Mat, i128)>,
    /// Common denominator of the original weights.
    den: BigInt,
    total: i128,
}

/// A candidate domain pair `(S, A)` in search order.
struct Domains {
    s: Subspace,
    a: Subspace,
}

impl Weighted {
    fn from_family(f: &Family) -> Self {
        Weighted {
            field: f.field.clone(),
            n: f.n,
            m: f.m,
            ctx: f.context_or_empty(),
            points: f.members.iter().map(|a| (a.clone(), 1)).collect(),
            den: BigInt::one(),
            total: f.members.len() as i128,
        }
    }

    fn from_values(field: &Field, (n, m): (usize, usize), values: &[BigRational]) -> Result<Self> {
        if checked_pow(field.q() as u64, n * m) != Some(values.len() as u64) {
            return Err(Error::shape("one value per matrix expected"));
        }
        if values.iter().any(Signed::is_negative) {
            return Err(Error::domain("weights must be nonnegative"));
        }
        let den = values.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let mut points = Vec::new();
        let mut total: i128 = 0;
        for (i, v) in values.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            let w = (v.numer() * (&den / v.denom()))
                .to_i128()
                .filter(|w| *w < 1 << 100)
                .ok_or_else(|| Error::domain("weights too large"))?;
            total = total.checked_add(w).ok_or_else(|| Error::domain("weights too large"))?;
            points.push((Mat::from_index(field, n, m, i as u64), w));
        }
        Ok(Weighted { field: field.clone(), n, m, ctx: Restriction::empty(field, n, m), points, den, total })
    }

    fn domains(&self, s: usize) -> Vec<Domains> {
        let (s1, a1) = (self.ctx.col_domain(), self.ctx.row_domain());
        let mut out = Vec::new();
        for c in 0..=s {
            for ds in (0..=c).rev() {
                let da = c - ds;
                if ds + s1.dim() > self.m || da + a1.dim() > self.n {
                    continue;
                }
                let ss: Vec<Subspace> =
                    subspaces(&self.field, self.m, ds).into_iter().filter(|x| x.intersect(&s1).dim() == 0).collect();
                let aa: Vec<Subspace> =
                    subspaces(&self.field, self.n, da).into_iter().filter(|x| x.intersect(&a1).dim() == 0).collect();
                for sub_s in &ss {
                    for sub_a in &aa {
                        out.push(Domains { s: sub_s.clone(), a: sub_a.clone() });
                    }
                }
            }
        }
        out
    }

    /// `(σ|_S, σ*|_A)` as indices of the value tuples on the RREF bases.
    fn key(&self, sigma: &Mat, d: &Domains) -> (usize, usize) {
        let q = self.field.q();
        let x: Vec<u16> = d.s.basis().iter().flat_map(|v| sigma.apply(v)).collect();
        let y: Vec<u16> = d.a.basis().iter().flat_map(|a| sigma.apply_left(a)).collect();
        (vec_index(q, &x), vec_index(q, &y))
    }

    fn histogram(&self, d: &Domains) -> Vec<((usize, usize), i128)> {
        let mut h: HashMap<(usize, usize), i128> = HashMap::new();
        for (sigma, w) in &self.points {
            *h.entry(self.key(sigma, d)).or_insert(0) += w;
        }
        let mut h: Vec<_> = h.into_iter().collect();
        h.sort_unstable();
        h
    }

    fn witness(&self, d: &Domains, x: usize, y: usize) -> Result<Restriction> {
        let q = self.field.q();
        let xs = vec_from_index(q, d.s.dim() * self.n, x);
        let ys = vec_from_index(q, d.a.dim() * self.m, y);
        let cols = d.s.basis().iter().cloned().zip(xs.chunks(self.n.max(1)).map(<[u16]>::to_vec)).collect();
        let rows = d.a.basis().iter().cloned().zip(ys.chunks(self.m.max(1)).map(<[u16]>::to_vec)).collect();
        Restriction::maps(&self.field, self.n, self.m, cols, rows)
    }

    /// First `(Π, π)` of complexity `≤ s` whose avoiders carry weight `≤ eps` (relative to the coset).
    fn capture(&self, s: usize, eps: &QPow, budget: &Budget) -> Result<Option<(Restriction, BigRational)>> {
        let q = self.field.q();
        let card = pow_big(q, self.ctx.coset_log_size()) * &self.den;
        let threshold = qpow_floor(&eps.scale(&BigRational::from_integer(card.clone())));
        // Avoider weights never exceed `total`, so a threshold at or above it always captures.
        let threshold: i128 = threshold.to_i128().unwrap_or(i128::MAX).max(-1);
        for d in self.domains(s) {
            budget.check_time()?;
            let (ds, da) = (d.s.dim(), d.a.dim());
            let nx = budget.check_items("capture search", checked_pow(q as u64, self.n * ds))? as usize;
            let ny = budget.check_items("capture search", checked_pow(q as u64, self.m * da))? as usize;
            budget.check_items("capture search", (nx as u64).checked_mul(ny as u64).and_then(|v| v.checked_mul((nx + ny) as u64)))?;
            let xs = Digits::new(&self.field, self.n * ds, nx);
            let ys = Digits::new(&self.field, self.m * da, ny);
            let inj_x: Vec<bool> = (0..nx)
                .map(|i| ds == 0 || Mat::from_data(&self.field, ds, self.n, xs.digits[i].clone()).expect("shape").rank() == ds)
                .collect();
            let inj_y: Vec<bool> = (0..ny)
                .map(|i| da == 0 || Mat::from_data(&self.field, da, self.m, ys.digits[i].clone()).expect("shape").rank() == da)
                .collect();
            let hist = self.histogram(&d);
            // g[Π][y] = Σ_x h[x][y]·[x − Π injective]
            let mut g = vec![0i128; nx * ny];
            for &((x, y), w) in &hist {
                for pi in 0..nx {
                    if inj_x[xs.sub(x, pi)] {
                        g[pi * ny + y] += w;
                    }
                }
            }
            for pi in 0..nx {
                let row = &g[pi * ny..(pi + 1) * ny];
                for ps in 0..ny {
                    let cnt: i128 = (0..ny).filter(|&y| row[y] != 0 && inj_y[ys.sub(y, ps)]).map(|y| row[y]).sum();
                    if cnt <= threshold {
                        let measure = BigRational::new(BigInt::from(cnt), card.clone());
                        return Ok(Some((self.witness(&d, pi, ps)?, measure)));
                    }
                }
            }
        }
        Ok(None)
    }

    /// Walks every nonempty restricted coset of complexity `≤ s`, reporting `(restriction, density / mean)`.
    /// Stops early when `visit` returns `true`.
    fn scan_ratios(&self, s: usize, budget: &Budget, mut visit: impl FnMut(&Self, &Domains, usize, usize, BigRational) -> Result<bool>) -> Result<()> {
        if self.total == 0 {
            return Ok(());
        }
        let q = self.field.q();
        let base = self.ctx.coset_log_size();
        let (s1, a1) = self.ctx.dims();
        for d in self.domains(s) {
            budget.check_time()?;
            let (ds, da) = (d.s.dim(), d.a.dim());
            let e = base - (self.m - s1 - ds) * (self.n - a1 - da);
            let scale = pow_big(q, e);
            for ((x, y), w) in self.histogram(&d) {
                let ratio = BigRational::new(BigInt::from(w) * &scale, BigInt::from(self.total));
                if visit(self, &d, x, y, ratio)? {
                    return Ok(());
                }
            }
        }
        Ok(())
    }

    fn quasi_violation(&self, s: usize, alpha: &BigRational, budget: &Budget) -> Result<Option<(Restriction, BigRational)>> {
        let mut found = None;
        self.scan_ratios(s, budget, |me, d, x, y, ratio| {
            if ratio > *alpha {
                found = Some((me.witness(d, x, y)?, ratio));
                return Ok(true);
            }
            Ok(false)
        })?;
        Ok(found)
    }

    fn max_ratio(&self, s: usize, budget: &Budget) -> Result<BigRational> {
        let mut best = BigRational::zero();
        self.scan_ratios(s, budget, |_, _, _, _, ratio| {
            if ratio > best {
                best = ratio;
            }
            Ok(false)
        })?;
        Ok(best)
    }
}

/// All value tuples of a given length, with a subtraction table on indices.
struct Digits {
    field: Field,
    digits: Vec<Vec<u16>>,
}

impl Digits {
    fn new(field: &Field, len: usize, count: usize) -> Self {
        Digits { field: field.clone(), digits: (0..count).map(|i| vec_from_index(field.q(), len, i)).collect() }
    }
    fn sub(&self, a: usize, b: usize) -> usize {
        let f = &self.field;
        self.digits[a]
            .iter()
            .zip(&self.digits[b])
            .fold(0, |acc, (&x, &y)| acc * f.q() as usize + f.sub(x, y) as usize)
    }
}

/// Largest integer `≤ x`.
fn qpow_floor(x: &QPow) -> BigInt {
    use std::cmp::Ordering::*;
    let approx = x.to_f64();
    let mut g = if approx.is_finite() { BigInt::from(approx.floor() as i128) } else { BigInt::zero() };
    while x.cmp_rational(&BigRational::from_integer(g.clone())) == Less {
        g -= 1;
    }
    while x.cmp_rational(&BigRational::from_integer(&g + 1)) != Less {
        g += 1;
    }
    g
}

#[derive(Clone, Debug, Serialize)]
pub struct CaptureWitness {
    #[serde(serialize_with = "ser_restriction")]
    pub restriction: Restriction,
    /// Measure of the avoiders inside the family's coset.
    pub measure: String,
}

fn ser_restriction<S: serde::Serializer>(r: &Restriction, s: S) -> std::result::Result<S::Ok, S::Error> {
    r.to_json().serialize(s)
}

/// The first `(Π, π)` of complexity `≤ s` (domains meeting the context's trivially) with
/// `μ(F(Π̄, π̄)) ≤ eps`, or `None` if `F` is `(s, eps)`-uncaptureable.
pub fn is_captureable(f: &Family, s: usize, eps: &QPow, budget: &Budget) -> Result<Option<CaptureWitness>> {
    let w = Weighted::from_family(f);
    Ok(w.capture(s, eps, budget)?.map(|(restriction, m)| CaptureWitness { restriction, measure: m.to_string() }))
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiWitness {
    #[serde(serialize_with = "ser_restriction")]
    pub restriction: Restriction,
    /// Density in the restricted coset divided by the density of `F`.
    pub ratio: String,
}

/// The first restriction of complexity `≤ s` with density above `alpha · μ(F)`, or `None`
/// if `F` is `(s, alpha)`-quasiregular.
pub fn is_quasiregular(f: &Family, s: usize, alpha: &BigRational, budget: &Budget) -> Result<Option<QuasiWitness>> {
    let w = Weighted::from_family(f);
    Ok(w.quasi_violation(s, alpha, budget)?.map(|(restriction, r)| QuasiWitness { restriction, ratio: r.to_string() }))
}

/// The smallest `α` for which `F` is `(s, α)`-quasiregular (0 for the empty family).
pub fn quasiregularity_constant(f: &Family, s: usize, budget: &Budget) -> Result<BigRational> {
    Weighted::from_family(f).max_ratio(s, budget)
}

/// Quasiregularity of a nonnegative function on `M(n, m)` (values in enumeration order):
/// the first restriction with `E^{|Π,π}[f] > c·E[f]`, if any.
pub fn quasiregular_witness_weights(
    field: &Field,
    shape: (usize, usize),
    values: &[BigRational],
    s: usize,
    c: &BigRational,
) -> Result<Option<Restriction>> {
    let w = Weighted::from_values(field, shape, values)?;
    Ok(w.quasi_violation(s, c, &Budget::default())?.map(|x| x.0))
}

/// The smallest `C` for which the function is `(s, C)`-quasiregular.
pub fn function_quasiregularity_constant(field: &Field, shape: (usize, usize), values: &[BigRational], s: usize) -> Result<BigRational> {
    Weighted::from_values(field, shape, values)?.max_ratio(s, &Budget::default())
}

#[derive(Clone, Debug, Serialize)]
pub struct ClaimReport {
    pub b: usize,
    pub big_n: usize,
    pub delta: String,
    pub beta: String,
    pub measure: String,
    pub uncaptureable: bool,
    pub witness: Option<CaptureWitness>,
}

/// A `(1, β)`-quasiregular family of measure `≥ δ` in a coset of complexity `≤ b` is
/// `(N, δ/2)`-uncaptureable when `β < q^{min(m,n) − N − b}/2`. Checks the hypotheses, then the conclusion.
pub fn quasiregular_implies_uncaptureable_check(
    f: &Family,
    b: usize,
    big_n: usize,
    delta: &BigRational,
    beta: &BigRational,
    budget: &Budget,
) -> Result<ClaimReport> {
    let q = f.field.q();
    let complexity = f.context.as_ref().map_or(0, Restriction::complexity);
    if complexity > b {
        return Err(Error::HypothesisUnmet(format!("context complexity {complexity} exceeds b = {b}")));
    }
    if !delta.is_positive() {
        return Err(Error::HypothesisUnmet("delta must be positive".into()));
    }
    let mu = f.measure();
    if mu < *delta {
        return Err(Error::HypothesisUnmet(format!("measure {mu} is below delta = {delta}")));
    }
    let e = f.n.min(f.m) as i64 - big_n as i64 - b as i64;
    let limit = if e >= 0 {
        BigRational::from_integer(pow_big(q, e as usize))
    } else {
        BigRational::new(BigInt::one(), pow_big(q, (-e) as usize))
    } / BigRational::from_integer(2.into());
    if *beta >= limit {
        return Err(Error::HypothesisUnmet(format!("beta = {beta} is not below {limit}")));
    }
    if let Some(w) = is_quasiregular(f, 1, beta, budget)? {
        return Err(Error::HypothesisUnmet(format!("family is not (1, {beta})-quasiregular: {}", w.restriction)));
    }
    let eps = QPow::rational(q, delta / BigRational::from_integer(2.into()));
    let witness = is_captureable(f, big_n, &eps, budget)?;
    Ok(ClaimReport {
        b,
        big_n,
        delta: delta.to_string(),
        beta: beta.to_string(),
        measure: mu.to_string(),
        uncaptureable: witness.is_none(),
        witness,
    })
}

// ---------------------------------------------------------------------------
// Regularity tree

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    Good,
    Bad,
    /// Internal: captured, children hold the capture's extensions.
    Captured,
    /// Contradictory constraints: the coset is empty.
    Empty,
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub restriction: Restriction,
    pub parent: Option<usize>,
    pub depth: usize,
    pub status: NodeStatus,
    pub capture: Option<CaptureWitness>,
    pub children: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct DecompositionLog {
    pub r: usize,
    pub s: usize,
    pub eps: QPow,
    pub nodes: Vec<TreeNode>,
}

impl DecompositionLog {
    pub fn leaves(&self, status: NodeStatus) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(move |n| n.status == status)
    }

    pub fn to_json(&self) -> Value {
        fn node(log: &DecompositionLog, i: usize) -> Value {
            let nd = &log.nodes[i];
            json!({
                "restriction": nd.restriction.to_json(),
                "depth": nd.depth,
                "status": nd.status,
                "capture": nd.capture.as_ref().map(|c| json!({"restriction": c.restriction.to_json(), "measure": c.measure})),
                "children": nd.children.iter().map(|&c| node(log, c)).collect::<Vec<_>>(),
            })
        }
        json!({ "r": self.r, "s": self.s, "eps": self.eps.to_string(), "root": node(self, 0) })
    }
}

/// `q^{−min(m,n)·r + r²/4}`.
pub fn default_regularity_eps(q: u32, n: usize, m: usize, r: usize) -> QPow {
    let r = r as i64;
    QPow::power(q, -4 * n.min(m) as i64 * r + r * r)
}

/// `2 q^r (q^s − 1)^r · eps`.
pub fn regularity_bound(q: u32, r: usize, s: usize, eps: &QPow) -> QPow {
    let c = BigInt::from(2) * pow_big(q, r) * Pow::pow(pow_big(q, s) - BigInt::one(), r);
    eps.scale(&BigRational::from_integer(c))
}

/// The iterative capture tree: good leaves (uncaptureable restrictions of complexity `< r`)
/// form the junta; bad leaves have complexity `r`.
pub fn regularity_decompose(f: &Family, r: usize, s: usize, eps: Option<QPow>, budget: &Budget) -> Result<(Junta, DecompositionLog)> {
    if r == 0 || s == 0 {
        return Err(Error::domain("r and s must be at least 1"));
    }
    if f.context.is_some() {
        return Err(Error::domain("decomposition starts from a family on the full space"));
    }
    let q = f.field.q();
    let eps = eps.unwrap_or_else(|| default_regularity_eps(q, f.n, f.m, r));
    let root = Restriction::empty(&f.field, f.n, f.m);
    let mut nodes = vec![TreeNode { restriction: root, parent: None, depth: 0, status: NodeStatus::Bad, capture: None, children: Vec::new() }];
    let mut components: Vec<Restriction> = Vec::new();
    let mut next = 0;
    while next < nodes.len() {
        let i = next;
        next += 1;
        let res = nodes[i].restriction.clone();
        if res.complexity() >= r {
            nodes[i].status = NodeStatus::Bad;
            continue;
        }
        if !res.is_consistent() {
            nodes[i].status = NodeStatus::Empty;
            continue;
        }
        let sub = f.restrict(&res)?;
        match is_captureable(&sub, s, &eps, budget)? {
            None => {
                nodes[i].status = NodeStatus::Good;
                if !components.contains(&res) {
                    components.push(res);
                }
            }
            Some(w) => {
                let mut kids = Vec::new();
                for (x, y) in w.restriction.col_elements() {
                    kids.push(res.extend_col(x, y)?);
                }
                for (a, b) in w.restriction.row_elements() {
                    kids.push(res.extend_row(a, b)?);
                }
                nodes[i].status = NodeStatus::Captured;
                nodes[i].capture = Some(w);
                for k in kids {
                    let idx = nodes.len();
                    let depth = nodes[i].depth + 1;
                    nodes.push(TreeNode { restriction: k, parent: Some(i), depth, status: NodeStatus::Bad, capture: None, children: Vec::new() });
                    nodes[i].children.push(idx);
                }
            }
        }
    }
    let c = Pow::pow(pow_big(q, s) - BigInt::one(), r).to_usize().unwrap_or(usize::MAX);
    let junta = Junta::new(&f.field, f.n, f.m, components, c.max(1), r)?;
    Ok((junta, DecompositionLog { r, s, eps, nodes }))
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionCheck {
    /// `μ(F \ J)` in the full space.
    pub uncovered: String,
    pub bound: QPow,
    pub components: usize,
    pub max_components: String,
    pub holds_measure: bool,
    pub holds_uncaptureable: bool,
    pub holds_shape: bool,
}

impl DecompositionCheck {
    pub fn holds(&self) -> bool {
        self.holds_measure && self.holds_uncaptureable && self.holds_shape
    }
}

/// Re-measures the decomposition independently of the tree construction.
pub fn verify_decomposition(f: &Family, junta: &Junta, log: &DecompositionLog, budget: &Budget) -> Result<DecompositionCheck> {
    let q = f.field.q();
    let outside = f.members.iter().filter(|a| !junta.contains(a)).count();
    let uncovered = BigRational::new(BigInt::from(outside), pow_big(q, f.n * f.m));
    let bound = regularity_bound(q, log.r, log.s, &log.eps);
    let mut holds_uncaptureable = true;
    for comp in junta.components() {
        if comp.complexity() >= log.r || is_captureable(&f.restrict(comp)?, log.s, &log.eps, budget)?.is_some() {
            holds_uncaptureable = false;
        }
    }
    let max_children: BigInt = pow_big(q, log.s) - BigInt::one();
    let max_components = Pow::pow(max_children.clone(), log.r);
    let holds_shape = BigInt::from(junta.components().len()) <= max_components
        && log.nodes.iter().all(|n| n.depth <= log.r && BigInt::from(n.children.len()) <= max_children);
    Ok(DecompositionCheck {
        holds_measure: bound.cmp_rational(&uncovered) != std::cmp::Ordering::Less,
        uncovered: uncovered.to_string(),
        bound,
        components: junta.components().len(),
        max_components: max_components.to_string(),
        holds_uncaptureable,
        holds_shape,
    })
}

// ---------------------------------------------------------------------------
// Density-increment bootstrap

#[derive(Clone, Debug)]
pub struct Bootstrap {
    /// Restrictions applied, in order.
    pub chain: Vec<Restriction>,
    /// Density after each step (the first entry is the starting density).
    pub densities: Vec<BigRational>,
    pub family: Family,
    /// Whether the process stopped because the family became quasiregular.
    pub certified: bool,
}

impl Bootstrap {
    pub fn to_json(&self) -> Value {
        json!({
            "chain": self.chain.iter().map(Restriction::to_json).collect::<Vec<_>>(),
            "densities": self.densities.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "final_size": self.family.len(),
            "certified": self.certified,
        })
    }
}

/// Restricts to the first density-increment witness until `(s, alpha)`-quasiregular.
pub fn bootstrap_quasiregular(f: &Family, s: usize, alpha: &BigRational, max_steps: usize, budget: &Budget) -> Result<Bootstrap> {
    if f.is_empty() {
        return Err(Error::HypothesisUnmet("the family must have positive measure".into()));
    }
    let mut cur = f.clone();
    let mut chain = Vec::new();
    let mut densities = vec![cur.measure()];
    loop {
        match is_quasiregular(&cur, s, alpha, budget)? {
            None => return Ok(Bootstrap { chain, densities, family: cur, certified: true }),
            Some(_) if chain.len() >= max_steps => {
                return Err(Error::StepBudgetExhausted(Box::new(Bootstrap { chain, densities, family: cur, certified: false })));
            }
            Some(w) => {
                cur = cur.restrict(&w.restriction)?;
                densities.push(cur.measure());
                chain.push(w.restriction);
            }
        }
    }
}

/// `⌈log_α(1/μ)⌉`: the number of steps a density increment by a factor `> α` can take.
pub fn bootstrap_step_bound(mu: &BigRational, alpha: &BigRational) -> Option<usize> {
    if !mu.is_positive() || *alpha <= BigRational::one() {
        return None;
    }
    let mut x = mu.clone();
    let mut k = 0;
    while x < BigRational::one() {
        x *= alpha;
        k += 1;
    }
    Some(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matspace::{enumerate, Space};
    use proptest::prelude::*;

    fn gf(q: u32) -> Field {
        Field::gf(q).unwrap()
    }
    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }
    fn b() -> Budget {
        Budget::default()
    }
    fn col(f: &Field, n: usize, m: usize, v: &[u16], w: &[u16]) -> Restriction {
        Restriction::new(f, n, m, vec![(v.to_vec(), w.to_vec())], vec![]).unwrap()
    }

    #[test]
    fn coset_cardinality_examples() {
        let f = gf(2);
        assert_eq!(Restriction::empty(&f, 2, 2).coset_cardinality().unwrap(), 16.into());
        let c = col(&f, 2, 2, &[1, 0], &[1, 1]);
        assert_eq!(c.coset_cardinality().unwrap(), 4.into());
        assert_eq!(c.members(&b()).unwrap().len(), 4);
        let cr = Restriction::new(&f, 2, 2, vec![(vec![1, 0], vec![1, 1])], vec![(vec![0, 1], vec![1, 0])]).unwrap();
        assert_eq!(cr.coset_cardinality().unwrap(), 2.into());
        assert!(Restriction::new(&f, 2, 2, vec![(vec![1, 0], vec![1, 1])], vec![(vec![0, 1], vec![0, 0])]).is_err());
        // dependent constraints collapse; contradictory ones are rejected
        let dup = Restriction::new(&f, 2, 2, vec![(vec![1, 0], vec![1, 1]), (vec![1, 0], vec![1, 1])], vec![]).unwrap();
        assert_eq!(dup, c);
        assert!(Restriction::new(&f, 2, 2, vec![(vec![1, 0], vec![1, 1]), (vec![1, 0], vec![0, 1])], vec![]).is_err());
    }

    #[test]
    fn restrict_examples() {
        let f = gf(2);
        let gl = Family::new(&f, 2, 2, enumerate(&f, Space::Gl { n: 2 }, &b()).unwrap().collect(), None).unwrap();
        let e1 = col(&f, 2, 2, &[1, 0], &[1, 0]);
        let g = gl.restrict(&e1).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.measure(), r(2, 4));
        let all = Family::full(&f, 2, 2, &b()).unwrap();
        assert_eq!(all.restrict(&Restriction::empty(&f, 2, 2)).unwrap().members(), all.members());
        assert!(matches!(g.restrict(&col(&f, 2, 2, &[1, 0], &[1, 0])), Err(Error::DomainOverlap)));

        let one = Family::full(&f, 1, 1, &b()).unwrap();
        let avoid = one.restrict_avoiding(&col(&f, 1, 1, &[1], &[0])).unwrap();
        assert_eq!(avoid.members(), &[Mat::from_data(&f, 1, 1, vec![1]).unwrap()]);
        assert_eq!(one.restrict_avoiding(&Restriction::empty(&f, 1, 1)).unwrap(), one);
    }

    #[test]
    fn intersection_predicates() {
        let f = gf(2);
        let id = Mat::identity(&f, 2);
        let swap = Mat::from_data(&f, 2, 2, vec![0, 1, 1, 0]).unwrap();
        let fam = Family::new(&f, 2, 2, vec![id.clone(), swap.clone()], None).unwrap();
        assert_eq!(fam.is_intersection_free(1).0, false);
        assert_eq!(fam.is_t_intersecting(1).0, true);
        let shift = Mat::from_data(&f, 2, 2, vec![0, 1, 1, 1]).unwrap();
        let fam = Family::new(&f, 2, 2, vec![id, shift], None).unwrap();
        assert_eq!(fam.is_t_intersecting(1).0, false);
        let empty = Family::new(&f, 2, 2, vec![], None).unwrap();
        assert!(empty.is_intersection_free(0).0);
    }

    #[test]
    fn chart_is_a_bijection() {
        let f = gf(3);
        let res = Restriction::new(&f, 2, 3, vec![(vec![1, 2, 0], vec![1, 1])], vec![(vec![0, 1], vec![1, 0, 1])]).unwrap();
        let chart = res.chart().unwrap();
        assert_eq!(chart.chart_shape(), (1, 2));
        let members = res.members(&b()).unwrap();
        assert_eq!(members.len(), 9);
        for (i, a) in members.iter().enumerate() {
            assert!(res.contains(a));
            assert_eq!(chart.inverse(a).unwrap().index(), i as u64);
        }
        let brute = Family::from_fn(&f, 2, 3, &b(), |a| res.contains(a)).unwrap();
        assert_eq!(brute.len(), 9);
    }

    #[test]
    fn junta_measure_examples() {
        let f = gf(2);
        let empty = Junta::new(&f, 2, 2, vec![], 1, 1).unwrap();
        assert_eq!(empty.measure(&b()).unwrap(), r(0, 1));
        let a = col(&f, 2, 2, &[1, 0], &[0, 0]);
        let c = col(&f, 2, 2, &[1, 0], &[1, 0]);
        assert_eq!(Junta::new(&f, 2, 2, vec![a.clone()], 1, 1).unwrap().measure(&b()).unwrap(), r(1, 4));
        let j = Junta::new(&f, 2, 2, vec![a, c], 2, 1).unwrap();
        assert_eq!(j.measure(&b()).unwrap(), r(1, 2));
    }

    #[test]
    fn strong_intersection_examples() {
        let f = gf(2);
        let a = col(&f, 3, 3, &[1, 0, 0], &[1, 0, 0]);
        assert!(Junta::new(&f, 3, 3, vec![a.clone()], 1, 1).unwrap().is_strongly_t_intersecting(1).0);
        let b2 = col(&f, 3, 3, &[1, 0, 0], &[0, 1, 0]);
        let j = Junta::new(&f, 3, 3, vec![a.clone(), b2], 2, 1).unwrap();
        assert_eq!(j.is_strongly_t_intersecting(1), (false, Some((0, 1))));
        let shared = Restriction::new(&f, 3, 3, vec![(vec![1, 0, 0], vec![1, 0, 0]), (vec![0, 1, 0], vec![1, 1, 1])], vec![]).unwrap();
        let j = Junta::new(&f, 3, 3, vec![a, shared], 2, 2).unwrap();
        assert!(j.is_strongly_t_intersecting(1).0);
        assert!(!j.is_strongly_t_intersecting(2).0);
    }

    #[test]
    fn dual_family_examples() {
        let f = gf(2);
        let fam = Family::coset(&col(&f, 2, 3, &[1, 0, 0], &[1, 1]), &b()).unwrap();
        let d = fam.dual();
        assert_eq!(d.dual(), fam);
        assert_eq!(d.measure(), fam.measure());
        let row = Restriction::new(&f, 3, 2, vec![], vec![(vec![1, 0, 0], vec![1, 1])]).unwrap();
        assert_eq!(d, Family::coset(&row, &b()).unwrap());
    }

    #[test]
    fn capture_examples() {
        let f = gf(2);
        let c = col(&f, 2, 2, &[1, 0], &[1, 1]);
        let fam = Family::coset(&c, &b()).unwrap();
        let w = is_captureable(&fam, 1, &QPow::rational(2, r(0, 1)), &b()).unwrap().unwrap();
        assert!(fam.restrict_avoiding(&w.restriction).unwrap().is_empty());
        let all = Family::full(&f, 2, 2, &b()).unwrap();
        assert!(is_captureable(&all, 1, &QPow::rational(2, r(1, 2)), &b()).unwrap().is_none());
        let empty = Family::new(&f, 2, 2, vec![], None).unwrap();
        let w = is_captureable(&empty, 1, &QPow::rational(2, r(0, 1)), &b()).unwrap().unwrap();
        assert!(w.restriction.is_empty());
    }

    #[test]
    fn quasiregular_examples() {
        let f = gf(2);
        let all = Family::full(&f, 2, 2, &b()).unwrap();
        assert!(is_quasiregular(&all, 2, &r(1, 1), &b()).unwrap().is_none());
        let c = col(&f, 2, 2, &[1, 0], &[1, 1]);
        let fam = Family::coset(&c, &b()).unwrap();
        let w = is_quasiregular(&fam, 1, &r(3, 1), &b()).unwrap().unwrap();
        assert_eq!(w.ratio, "4");
        assert!(is_quasiregular(&fam, 1, &r(4, 1), &b()).unwrap().is_none());
        let empty = Family::new(&f, 2, 2, vec![], None).unwrap();
        assert!(is_quasiregular(&empty, 1, &r(1, 1), &b()).unwrap().is_none());
        assert_eq!(quasiregularity_constant(&fam, 1, &b()).unwrap(), r(4, 1));
    }

    #[test]
    fn claim_examples() {
        let f = gf(2);
        let all = Family::full(&f, 3, 3, &b()).unwrap();
        let rep = quasiregular_implies_uncaptureable_check(&all, 0, 1, &r(1, 1), &r(1, 1), &b()).unwrap();
        assert!(rep.uncaptureable);
        assert!(matches!(
            quasiregular_implies_uncaptureable_check(&all, 0, 1, &r(1, 1), &r(2, 1), &b()),
            Err(Error::HypothesisUnmet(_))
        ));
    }

    #[test]
    fn regularity_examples() {
        let f = gf(2);
        let all = Family::full(&f, 2, 2, &b()).unwrap();
        let (j, log) = regularity_decompose(&all, 2, 1, None, &b()).unwrap();
        assert_eq!(j.components(), &[Restriction::empty(&f, 2, 2)]);
        assert_eq!(log.nodes.len(), 1);
        assert!(verify_decomposition(&all, &j, &log, &b()).unwrap().holds());

        let c = col(&f, 2, 2, &[1, 0], &[1, 0]);
        let fam = Family::coset(&c, &b()).unwrap();
        let (j, log) = regularity_decompose(&fam, 2, 1, None, &b()).unwrap();
        assert!(j.components().contains(&c), "{:?}", j.components());
        let check = verify_decomposition(&fam, &j, &log, &b()).unwrap();
        assert_eq!(check.uncovered, "0");
        assert!(check.holds());

        let empty = Family::new(&f, 2, 2, vec![], None).unwrap();
        let (j, log) = regularity_decompose(&empty, 2, 1, None, &b()).unwrap();
        assert!(j.components().is_empty());
        assert!(verify_decomposition(&empty, &j, &log, &b()).unwrap().holds());
    }

    #[test]
    fn bootstrap_examples() {
        let f = gf(2);
        let all = Family::full(&f, 2, 2, &b()).unwrap();
        assert!(bootstrap_quasiregular(&all, 1, &r(2, 1), 4, &b()).unwrap().chain.is_empty());
        let c = col(&f, 2, 2, &[1, 0], &[1, 0]);
        let fam = Family::coset(&c, &b()).unwrap();
        let boot = bootstrap_quasiregular(&fam, 1, &r(2, 1), 4, &b()).unwrap();
        assert_eq!(boot.chain, vec![c]);
        assert!(boot.certified);
        assert_eq!(boot.family.measure(), r(1, 1));
        assert!(boot.chain.len() <= bootstrap_step_bound(&fam.measure(), &r(2, 1)).unwrap());
        match bootstrap_quasiregular(&fam, 1, &r(2, 1), 0, &b()) {
            Err(Error::StepBudgetExhausted(partial)) => assert!(partial.chain.is_empty()),
            other => panic!("{other:?}"),
        }
    }

    /// Direct evaluation of the capture definition, in the documented search order.
    fn naive_capture(fam: &Family, s: usize, eps: &BigRational) -> Option<Restriction> {
        let f = fam.field();
        let (n, m) = fam.shape();
        let q = f.q();
        let ctx = fam.context().cloned().unwrap_or_else(|| Restriction::empty(f, n, m));
        let card = BigRational::from_integer(ctx.coset_cardinality().unwrap());
        for c in 0..=s {
            for ds in (0..=c).rev() {
                let da = c - ds;
                for sub_s in subspaces(f, m, ds).into_iter().filter(|x| x.intersect(&ctx.col_domain()).dim() == 0) {
                    for sub_a in subspaces(f, n, da).into_iter().filter(|x| x.intersect(&ctx.row_domain()).dim() == 0) {
                        for pi in 0..(q as usize).pow((n * ds) as u32) {
                            for ps in 0..(q as usize).pow((m * da) as u32) {
                                let xs = vec_from_index(q, n * ds, pi);
                                let ys = vec_from_index(q, m * da, ps);
                                let cols = sub_s.basis().iter().cloned().zip(xs.chunks(n).map(<[u16]>::to_vec)).collect();
                                let rows = sub_a.basis().iter().cloned().zip(ys.chunks(m).map(<[u16]>::to_vec)).collect();
                                let res = Restriction::maps(f, n, m, cols, rows).unwrap();
                                let left = fam.restrict_avoiding(&res).unwrap().len();
                                if BigRational::from_integer(left.into()) / &card <= *eps {
                                    return Some(res);
                                }
                            }
                        }
                    }
                }
            }
        }
        None
    }

    fn naive_max_ratio(fam: &Family, s: usize) -> BigRational {
        let f = fam.field();
        let (n, m) = fam.shape();
        let mu = fam.measure();
        let mut best = BigRational::zero();
        if mu.is_zero() {
            return best;
        }
        // every restricted coset that contains a member
        for a in fam.members() {
            for c in 0..=s {
                for ds in 0..=c {
                    for sub_s in subspaces(f, m, ds) {
                        for sub_a in subspaces(f, n, c - ds) {
                            let cols = sub_s.basis().iter().map(|v| (v.clone(), a.apply(v))).collect();
                            let rows = sub_a.basis().iter().map(|x| (x.clone(), a.apply_left(x))).collect();
                            let res = Restriction::new(f, n, m, cols, rows).unwrap();
                            if let Ok(sub) = fam.restrict(&res) {
                                let ratio = sub.measure() / &mu;
                                if ratio > best {
                                    best = ratio;
                                }
                            }
                        }
                    }
                }
            }
        }
        best
    }

    fn arb_family() -> impl Strategy<Value = (u32, usize, usize, Vec<bool>)> {
        prop_oneof![Just((2u32, 2usize, 2usize)), Just((2, 2, 3)), Just((3, 1, 2))]
            .prop_flat_map(|(q, n, m)| {
                let size = (q as usize).pow((n * m) as u32);
                (Just(q), Just(n), Just(m), prop::collection::vec(prop::bool::weighted(0.3), size))
            })
    }

    fn build((q, n, m, bits): &(u32, usize, usize, Vec<bool>)) -> Family {
        let f = gf(*q);
        let members = bits
            .iter()
            .enumerate()
            .filter(|(_, &keep)| keep)
            .map(|(i, _)| Mat::from_index(&f, *n, *m, i as u64))
            .collect();
        Family::new(&f, *n, *m, members, None).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn capture_matches_naive(spec in arb_family(), num in 0i64..8) {
            let fam = build(&spec);
            let eps = r(num, 8);
            let fast = is_captureable(&fam, 1, &QPow::rational(spec.0, eps.clone()), &b()).unwrap().map(|w| w.restriction);
            prop_assert_eq!(fast, naive_capture(&fam, 1, &eps));
        }

        #[test]
        fn capture_in_context_matches_naive(spec in arb_family(), num in 0i64..4) {
            let fam = build(&spec);
            let f = fam.field().clone();
            let (n, m) = fam.shape();
            let mut v = vec![0u16; m];
            v[0] = 1;
            let ctx = Restriction::new(&f, n, m, vec![(v, vec![0; n])], vec![]).unwrap();
            let sub = fam.restrict(&ctx).unwrap();
            let eps = r(num, 4);
            let fast = is_captureable(&sub, 1, &QPow::rational(spec.0, eps.clone()), &b()).unwrap().map(|w| w.restriction);
            prop_assert_eq!(fast, naive_capture(&sub, 1, &eps));
        }

        #[test]
        fn quasi_constant_matches_naive(spec in arb_family()) {
            let fam = build(&spec);
            prop_assert_eq!(quasiregularity_constant(&fam, 2, &b()).unwrap(), naive_max_ratio(&fam, 2));
        }

        #[test]
        fn measure_bookkeeping(spec in arb_family(), pick in 0usize..64) {
            let fam = build(&spec);
            let f = fam.field().clone();
            let (n, m) = fam.shape();
            let a = Mat::from_index(&f, n, m, pick as u64 % (f.q() as u64).pow((n * m) as u32));
            let mut v = vec![0u16; m];
            v[m - 1] = 1;
            let mut w = vec![0u16; n];
            w[0] = 1;
            let res = Restriction::new(&f, n, m, vec![(v.clone(), a.apply(&v))], vec![(w.clone(), a.apply_left(&w))]).unwrap();
            let sub = fam.restrict(&res).unwrap();
            prop_assert_eq!(sub.measure() * BigRational::from_integer(sub.coset_cardinality()), BigRational::from_integer(sub.len().into()));
            let brute = Family::from_fn(&f, n, m, &b(), |x| res.contains(x)).unwrap();
            prop_assert_eq!(BigInt::from(brute.len()), res.coset_cardinality().unwrap());
            prop_assert_eq!(sub.widen().measure(), BigRational::new(sub.len().into(), (f.q() as usize).pow((n * m) as u32).into()));
            // strongly intersecting juntas are intersecting on their members
            let j = Junta::new(&f, n, m, vec![res.clone()], 1, 2).unwrap();
            if j.is_strongly_t_intersecting(1).0 {
                prop_assert!(j.members(&b()).unwrap().is_t_intersecting(1).0);
            }
        }
    }
}
