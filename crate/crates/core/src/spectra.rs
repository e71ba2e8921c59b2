//! Spectra of the Cayley graphs `Γ_t` on `(L(V, W), +)` generated by
//! `I_t = {A : dim ker A = t}` (i.e. rank `m − t`), with the row-stochastic
//! normalisation `M_t = (1/|I_t|) Σ_{A ∈ I_t} (shift by A)`.
//!
//! The eigenspace for rank-`d` characters is `U_d`, with eigenvalue
//! `λ_d = (1/|I_t|) Σ_{A ∈ I_t} u_X(A)` for any rank-`d` dual `X`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use serde_json::json;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::budget::{checked_pow, Budget};
use crate::cyclo::Cyclo;
use crate::error::{Error, Result};
use crate::families::Family;
use crate::fourier::{character_phase, fast_transform, DenseFunction};
use crate::gf::Field;
use crate::graph::{greedy_clique, max_independent_set_through_capped, Graph};
use crate::matspace::{count_rank_d, phi, Mat};

#[derive(Clone, Debug, PartialEq)]
pub struct CayleySpectrum {
    pub q: u32,
    pub m: usize,
    pub n: usize,
    pub t: usize,
    /// `λ_d` for `d = 0..=min(m, n)`.
    pub lambda: Vec<BigRational>,
    /// `dim U_d`, the number of rank-`d` dual matrices.
    pub mult: Vec<BigInt>,
    /// `|I_t|`.
    pub gen_count: BigInt,
}

fn check_params(m: usize, n: usize, t: usize) -> Result<()> {
    if t >= m {
        return Err(Error::domain(format!(
            "t = {t} must be below m = {m} (t = m only generates loops)"
        )));
    }
    if m - t > n {
        return Err(Error::domain(format!("no {n}x{m} matrix has a {t}-dimensional kernel")));
    }
    Ok(())
}

/// Canonical rank-`d` dual matrix: `I_d` in the top-left corner of an `m × n` matrix.
pub fn canonical_dual(field: &Field, m: usize, n: usize, d: usize) -> Mat {
    Mat::from_fn(field, m, n, |i, j| (i == j && i < d) as u16)
}

fn scan(field: &Field, n: usize, m: usize, budget: &Budget) -> Result<u64> {
    budget.check_items("Cayley generator scan", checked_pow(field.q() as u64, n * m))
}

/// Phase counts `counts[d][j] = #{A ∈ I_t : τ(Σ_{i<d} A_ii) = j}`; `X_d · A` has trace `Σ_{i<d} A_ii`.
fn diagonal_phase_counts(field: &Field, m: usize, n: usize, t: usize, budget: &Budget) -> Result<(Vec<Vec<u64>>, u64)> {
    let total = scan(field, n, m, budget)?;
    let p = field.p() as usize;
    let dmax = m.min(n);
    let mut counts = vec![vec![0u64; p]; dmax + 1];
    let mut gens = 0;
    for idx in 0..total {
        let a = Mat::from_index(field, n, m, idx);
        if a.rank() != m - t {
            continue;
        }
        gens += 1;
        let mut acc = 0u16;
        counts[0][0] += 1;
        for d in 1..=dmax {
            acc = field.add(acc, a.get(d - 1, d - 1));
            counts[d][field.trace(acc) as usize] += 1;
        }
    }
    Ok((counts, gens))
}

fn phase_sum(p: u32, counts: &[u64]) -> Cyclo {
    let num = counts.iter().map(|&c| BigInt::from(c)).collect();
    Cyclo::from_parts(p, num, BigInt::one()).expect("p coefficients")
}

/// `λ_d^{(t)}`, exactly.
pub fn eigenvalue(field: &Field, m: usize, n: usize, t: usize, d: usize, budget: &Budget) -> Result<BigRational> {
    check_params(m, n, t)?;
    if d > m.min(n) {
        return Err(Error::domain(format!("d = {d} exceeds min(m, n)")));
    }
    Ok(spectrum(field, m, n, t, budget)?.lambda[d].clone())
}

pub fn spectrum(field: &Field, m: usize, n: usize, t: usize, budget: &Budget) -> Result<CayleySpectrum> {
    check_params(m, n, t)?;
    let (counts, gens) = diagonal_phase_counts(field, m, n, t, budget)?;
    let q = field.q();
    let inv = BigRational::new(BigInt::one(), BigInt::from(gens));
    let lambda = counts
        .iter()
        .map(|c| {
            phase_sum(field.p(), c)
                .scale(&inv)
                .to_rational()
                .ok_or(Error::NotRational)
        })
        .collect::<Result<Vec<_>>>()?;
    let mult = (0..=m.min(n)).map(|d| count_rank_d(m, n, d, q)).collect::<Result<Vec<_>>>()?;
    Ok(CayleySpectrum { q, m, n, t, lambda, mult, gen_count: BigInt::from(gens) })
}

impl CayleySpectrum {
    /// `Σ_d dim(U_d) λ_d²`.
    pub fn trace_sum(&self) -> BigRational {
        self.lambda
            .iter()
            .zip(&self.mult)
            .map(|(l, m)| l * l * BigRational::from_integer(m.clone()))
            .sum()
    }

    /// `Σ_d dim(U_d) λ_d² = 1/φ(m, n, t)`, `λ_0 = 1` and `Σ_d dim U_d = q^{nm}`.
    pub fn trace_check(&self) -> bool {
        let Ok(phi) = phi(self.m, self.n, self.t, self.q) else {
            return false;
        };
        let total: BigInt = self.mult.iter().sum();
        self.lambda[0].is_one()
            && self.trace_sum() * phi == BigRational::one()
            && total == num_traits::Pow::pow(BigInt::from(self.q), self.n * self.m)
    }

    pub fn lambda_min(&self) -> BigRational {
        self.lambda.iter().min().cloned().expect("non-empty")
    }

    pub fn to_json(&self) -> serde_json::Value {
        let lambda: Vec<serde_json::Value> = self
            .lambda
            .iter()
            .enumerate()
            .map(|(d, l)| json!({"d": d, "num": l.numer().to_string(), "den": l.denom().to_string()}))
            .collect();
        json!({
            "q": self.q,
            "m": self.m,
            "n": self.n,
            "t": self.t,
            "lambda": lambda,
            "mult": self.mult.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            "trace_check": self.trace_check(),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub d: usize,
    pub representatives: usize,
    pub value: String,
    pub holds: bool,
}

/// Checks that the normalised character sum over `I_t` is the same for every rank-`d` dual.
pub fn rank_invariance_check(field: &Field, m: usize, n: usize, t: usize, d: usize, budget: &Budget) -> Result<InvarianceReport> {
    check_params(m, n, t)?;
    let total = scan(field, n, m, budget)?;
    budget.check_items("rank invariance pairs", total.checked_mul(total))?;
    let gens: Vec<Mat> = (0..total)
        .map(|i| Mat::from_index(field, n, m, i))
        .filter(|a| a.rank() == m - t)
        .collect();
    let p = field.p();
    let mut values: Vec<Cyclo> = Vec::new();
    for xi in 0..total {
        let x = Mat::from_index(field, m, n, xi);
        if x.rank() != d {
            continue;
        }
        let mut counts = vec![0u64; p as usize];
        for a in &gens {
            counts[character_phase(&x, a) as usize] += 1;
        }
        values.push(phase_sum(p, &counts));
    }
    let holds = values.windows(2).all(|w| w[0] == w[1]);
    let value = values[0].scale(&BigRational::new(BigInt::one(), BigInt::from(gens.len())));
    Ok(InvarianceReport { d, representatives: values.len(), value: value.to_string(), holds })
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenBoundReport {
    pub d: usize,
    pub lambda_sq: String,
    /// `(1/φ) / dim(U_d)`.
    pub bound: String,
    pub holds: bool,
}

/// `λ_d² ≤ (1/φ(m,n,t)) / dim(U_d)`: one term of the trace identity bounded by the whole.
pub fn eigenvalue_bound_check(field: &Field, m: usize, n: usize, t: usize, d: usize, budget: &Budget) -> Result<EigenBoundReport> {
    if d == 0 {
        return Err(Error::domain("the bound concerns d >= 1"));
    }
    let spec = spectrum(field, m, n, t, budget)?;
    if d > m.min(n) {
        return Err(Error::domain(format!("d = {d} exceeds min(m, n)")));
    }
    let lambda_sq = &spec.lambda[d] * &spec.lambda[d];
    let bound = BigRational::one() / phi(m, n, t, field.q())? / BigRational::from_integer(spec.mult[d].clone());
    Ok(EigenBoundReport { d, holds: lambda_sq <= bound, lambda_sq: lambda_sq.to_string(), bound: bound.to_string() })
}

#[derive(Clone, Debug, Serialize)]
pub struct BilinearReport {
    pub t: usize,
    pub direct: String,
    pub spectral: String,
    pub equal: bool,
}

/// `⟨f, M_{t−1} g⟩` two ways: the direct pair sum over `dim 𝔞(A, B) = t − 1`, and
/// `Σ_d λ_d^{(t−1)} Σ_{rank X = d} f̂(X) conj(ĝ(X))`.
pub fn bilinear_decomposition(f: &DenseFunction, g: &DenseFunction, t: usize, budget: &Budget) -> Result<BilinearReport> {
    if f.shape() != g.shape() || f.field() != g.field() || f.context().is_some() || g.context().is_some() {
        return Err(Error::shape("functions must share a full matrix space"));
    }
    if t == 0 {
        return Err(Error::domain("t must be at least 1"));
    }
    let (n, m) = f.shape();
    let field = f.field();
    let s = t - 1;
    check_params(m, n, s)?;
    let total = f.values().len();
    budget.check_items("bilinear pair sum", (total as u64).checked_mul(total as u64))?;

    let p = field.p();
    let mats: Vec<Mat> = (0..total as u64).map(|i| Mat::from_index(field, n, m, i)).collect();
    let is_gen: Vec<bool> = mats.iter().map(|a| a.rank() == m - s).collect();
    let gens = is_gen.iter().filter(|&&b| b).count();
    let mut direct = Cyclo::zero(p);
    for (ai, a) in mats.iter().enumerate() {
        let fa = &f.values()[ai];
        if fa.is_zero() {
            continue;
        }
        let mut mg = Cyclo::zero(p);
        for (bi, b) in mats.iter().enumerate() {
            let diff = a.sub(b)?.index() as usize;
            if is_gen[diff] {
                mg += &g.values()[bi];
            }
        }
        direct += &(fa * &mg.conj());
    }
    let direct = direct.scale(&BigRational::new(BigInt::one(), BigInt::from(total * gens)));

    let spec = spectrum(field, m, n, s, budget)?;
    let (fh, gh) = (fast_transform(f)?, fast_transform(g)?);
    let mut spectral = Cyclo::zero(p);
    for (xi, (a, b)) in fh.coeffs().iter().zip(gh.coeffs()).enumerate() {
        if a.is_zero() || b.is_zero() {
            continue;
        }
        let d = fh.dual(xi).rank();
        spectral += &(a * &b.conj()).scale(&spec.lambda[d]);
    }
    Ok(BilinearReport { t, equal: direct == spectral, direct: direct.to_string(), spectral: spectral.to_string() })
}

/// `−λ_min / (1 − λ_min)`.
pub fn hoffman_bound(spec: &CayleySpectrum) -> Result<BigRational> {
    let lmin = spec.lambda_min();
    if !lmin.is_negative() {
        return Err(Error::NoNegativeEigenvalue);
    }
    Ok(-&lmin / (BigRational::one() - &lmin))
}

/// `Γ_t` on `M(n, m)`: `A ~ B` iff `dim ker(A − B) = t`.
pub fn cayley_graph(field: &Field, n: usize, m: usize, t: usize, budget: &Budget) -> Result<Graph> {
    check_params(m, n, t)?;
    let total = scan(field, n, m, budget)? as usize;
    let mats: Vec<Mat> = (0..total as u64).map(|i| Mat::from_index(field, n, m, i)).collect();
    let is_gen: Vec<bool> = mats.iter().map(|a| a.rank() == m - t).collect();
    let mut g = Graph::new(total);
    for (ai, a) in mats.iter().enumerate() {
        for (bi, b) in mats.iter().enumerate().skip(ai + 1) {
            if is_gen[a.sub(b)?.index() as usize] {
                g.add_edge(ai, bi);
            }
        }
    }
    Ok(g)
}

#[derive(Clone, Debug, Serialize)]
pub struct HoffmanReport {
    pub q: u32,
    pub m: usize,
    pub n: usize,
    pub t: usize,
    pub vertices: usize,
    pub bound: String,
    pub independence_number: usize,
    /// Largest clique found; `α · ω ≤ |V|` for vertex-transitive graphs.
    pub clique: usize,
    /// The search stopped at the clique bound `⌊|V| / clique⌋` rather than exhausting.
    pub clique_certified: bool,
    pub measure: String,
    pub holds: bool,
}

/// Compares the ratio bound with the exact independence ratio of `Γ_t`.
/// `Γ_t` is vertex-transitive, so the search may assume the zero matrix is in the set, and
/// any clique `K` gives `α ≤ |V| / |K|`; the search stops once it meets that bound.
pub fn hoffman_vs_exact(field: &Field, m: usize, n: usize, t: usize, budget: &Budget) -> Result<HoffmanReport> {
    let spec = spectrum(field, m, n, t, budget)?;
    let bound = hoffman_bound(&spec)?;
    let g = cayley_graph(field, n, m, t, budget)?;
    let k = m - t;
    let mats: Vec<Mat> = (0..g.len() as u64).map(|i| Mat::from_index(field, n, m, i)).collect();
    let transposed: Vec<Mat> = (0..g.len() as u64).map(|i| Mat::from_index(field, m, n, i).transpose()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut order: Vec<usize> = (0..g.len()).collect();
    let mut clique = 0;
    let mut coclique: Vec<usize> = Vec::new();
    for attempt in 0..34 {
        let list: Vec<&Mat> = match attempt {
            0 => mats.iter().collect(),
            1 => transposed.iter().collect(),
            _ => {
                order.shuffle(&mut rng);
                clique = clique.max(greedy_clique(&g, order.iter().copied()).len());
                order.iter().map(|&i| &mats[i]).collect()
            }
        };
        clique = clique.max(greedy_subspace(list.iter().copied(), |r| r == k).len());
        let ind: Vec<usize> = greedy_subspace(list.iter().copied(), |r| r != k).iter().map(|a| a.index() as usize).collect();
        if ind.len() > coclique.len() {
            coclique = ind;
        }
        if coclique.len() * clique == g.len() {
            break;
        }
    }
    debug_assert!(g.is_independent(&coclique));
    let cap = g.len() / clique;
    let alpha = if coclique.len() == cap {
        cap
    } else {
        max_independent_set_through_capped(&g, 0, coclique.len(), cap, budget)?.size
    };
    let measure = BigRational::new(BigInt::from(alpha), BigInt::from(g.len()));
    Ok(HoffmanReport {
        q: field.q(),
        m,
        n,
        t,
        vertices: g.len(),
        holds: measure <= bound,
        bound: bound.to_string(),
        independence_number: alpha,
        clique,
        clique_certified: alpha == cap,
        measure: measure.to_string(),
    })
}

/// A subspace grown greedily in the given order, keeping a candidate only if every new
/// nonzero element passes `keep_rank`. With `rank == k` this is a clique of the rank-`k` Cayley
/// graph; with `rank != k` an independent set.
fn greedy_subspace<'a>(order: impl IntoIterator<Item = &'a Mat>, keep_rank: impl Fn(usize) -> bool) -> Vec<Mat> {
    let mut order = order.into_iter().peekable();
    let Some(first) = order.peek() else { return Vec::new() };
    let field = first.field().clone();
    let mut elements = vec![Mat::zeros(&field, first.nrows(), first.ncols())];
    for b in order {
        if elements.contains(b) {
            continue;
        }
        let mut grown = Vec::with_capacity(elements.len() * field.q() as usize);
        let ok = (1..field.q() as u16).all(|c| {
            let cb = b.scale(c);
            elements.iter().all(|u| {
                let v = u.add(&cb).expect("same shape");
                let keep = keep_rank(v.rank());
                grown.push(v);
                keep
            })
        });
        if ok {
            elements.extend(grown);
        }
    }
    elements
}

/// A family is independent in `Γ_t` iff no two distinct members agree on exactly `t` dimensions.
pub fn independence_check(family: &Family, t: usize) -> (bool, Option<(Mat, Mat)>) {
    family.is_intersection_free(t)
}

/// Zero rational, for callers folding over eigenvalues.
pub fn zero() -> BigRational {
    BigRational::zero()
}
