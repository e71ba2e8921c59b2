//! Quick self-check suites, one JSON line per check. The acceptance tests run
//! the same machinery on much larger grids.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::budget::Budget;
use crate::cyclo::Cyclo;
use crate::error::{Error, Result};
use crate::extremal::{self, Mode, Side};
use crate::families::{self, Family, Restriction};
use crate::fourier::{self, DenseFunction};
use crate::gf::Field;
use crate::matspace::{enumerate, m_qt, Mat, Space};
use crate::power::QPow;
use crate::spectra;

pub const SUITES: [&str; 4] = ["fourier", "spectra", "families", "extremal"];

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: String,
    pub check: String,
    pub pass: bool,
    pub detail: Value,
}

struct Suite<'a> {
    name: &'a str,
    checks: Vec<Check>,
}

impl Suite<'_> {
    fn push(&mut self, check: &str, pass: bool, detail: Value) {
        self.checks.push(Check { suite: self.name.into(), check: check.into(), pass, detail });
    }
}

/// Runs one suite (or `all`). Unknown names are a [`Error::Parse`].
pub fn run_suite(name: &str, seed: u64, budget: &Budget) -> Result<Vec<Check>> {
    if name == "all" {
        let mut out = Vec::new();
        for s in SUITES {
            out.extend(run_suite(s, seed, budget)?);
        }
        return Ok(out);
    }
    let mut suite = Suite { name, checks: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match name {
        "fourier" => fourier_suite(&mut suite, &mut rng)?,
        "spectra" => spectra_suite(&mut suite, budget)?,
        "families" => families_suite(&mut suite, &mut rng, budget)?,
        "extremal" => extremal_suite(&mut suite, budget)?,
        _ => return Err(Error::Parse(format!("unknown suite {name:?} (expected one of {SUITES:?} or all)"))),
    }
    Ok(suite.checks)
}

fn gf(q: u32) -> Result<Field> {
    Field::gf(q)
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Uniform values in `{0, 1/den, …, 1}`.
pub fn random_function(field: &Field, n: usize, m: usize, den: i64, rng: &mut impl Rng) -> Result<DenseFunction> {
    let count = (field.q() as usize).pow((n * m) as u32);
    let vals: Vec<BigRational> = (0..count).map(|_| ratio(rng.gen_range(0..=den), den)).collect();
    DenseFunction::from_rationals(field, n, m, &vals)
}

/// Random family: each matrix kept with probability `p`.
pub fn random_family(field: &Field, n: usize, m: usize, p: f64, rng: &mut impl Rng) -> Result<Family> {
    let count = (field.q() as u64).pow((n * m) as u32);
    let members = (0..count).filter(|_| rng.gen_bool(p)).map(|i| Mat::from_index(field, n, m, i)).collect();
    Family::new(field, n, m, members, None)
}

/// Every relation `Σ λ_i X_i = 0` among `r` rank-one `n × m` matrices, up to reordering
/// (indices non-decreasing), with all `λ_i ≠ 0`.
pub fn rank_one_relations(field: &Field, n: usize, m: usize, r: usize, budget: &Budget) -> Result<Vec<(Vec<u16>, Vec<Mat>)>> {
    let ones: Vec<Mat> = enumerate(field, Space::Rank { n, m, d: 1 }, budget)?.collect();
    let q = field.q() as u16;
    let mut out = Vec::new();
    let mut idx = vec![0usize; r];
    loop {
        let mut lam = vec![1u16; r];
        loop {
            let mut total = Mat::zeros(field, n, m);
            for (&i, &l) in idx.iter().zip(&lam) {
                total = total.add(&ones[i].scale(l))?;
            }
            if total.is_zero() {
                out.push((lam.clone(), idx.iter().map(|&i| ones[i].clone()).collect()));
            }
            budget.check_items("relation scan", Some(out.len() as u64))?;
            let Some(k) = (0..r).rev().find(|&k| lam[k] + 1 < q) else { break };
            lam[k] += 1;
            lam[k + 1..].iter_mut().for_each(|l| *l = 1);
        }
        let Some(k) = (0..r).rev().find(|&k| idx[k] + 1 < ones.len()) else { break };
        idx[k] += 1;
        let v = idx[k];
        idx[k + 1..].iter_mut().for_each(|i| *i = v);
    }
    Ok(out)
}

fn fourier_suite(s: &mut Suite, rng: &mut ChaCha8Rng) -> Result<()> {
    for q in [2u32, 3] {
        let f = gf(q)?;
        let (n, m) = (1, 2);
        let duals: Vec<Mat> = (0..(q as u64).pow(2)).map(|i| Mat::from_index(&f, m, n, i)).collect();
        let chars: Vec<DenseFunction> = duals.iter().map(DenseFunction::character_fn).collect::<Result<_>>()?;
        let mut ok = true;
        for (i, a) in chars.iter().enumerate() {
            for (j, b) in chars.iter().enumerate() {
                let want = if i == j { Cyclo::one(f.p()) } else { Cyclo::zero(f.p()) };
                ok &= a.inner(b)? == want;
            }
        }
        s.push("orthonormality", ok, json!({"q": q, "n": n, "m": m}));
    }
    let f = gf(2)?;
    let mut ok = (true, true, true);
    for _ in 0..20 {
        let g = random_function(&f, 2, 2, 6, rng)?;
        let slow = fourier::transform(&g)?;
        let fast = fourier::fast_transform(&g)?;
        ok.0 &= slow == fast;
        ok.1 &= fourier::inverse_transform(&fast) == g;
        ok.2 &= fast.energy() == g.moment(2)?;
    }
    s.push("fast transform equals naive", ok.0, json!({"q": 2, "n": 2, "m": 2, "functions": 20}));
    s.push("round trip", ok.1, json!({"functions": 20}));
    s.push("parseval", ok.2, json!({"functions": 20}));
    let g = random_function(&f, 2, 2, 4, rng)?;
    for d in [1, 2] {
        let rep = fourier::verify_hypercontractive(&g, d, 4)?;
        s.push("hypercontractive", rep.holds, serde_json::to_value(&rep).expect("json"));
    }
    let rels = rank_one_relations(&f, 2, 2, 3, &Budget::default())?;
    let mut ok = true;
    for (lam, xs) in &rels {
        ok &= fourier::check_sum_rank_nullity(lam, xs)?.holds;
    }
    s.push("sum-rank-nullity", ok, json!({"q": 2, "n": 2, "m": 2, "r": 3, "relations": rels.len()}));
    let ind = DenseFunction::from_fn(&f, 2, 2, |a| Cyclo::from_int(2, i64::from(a.get(0, 0) == 0)))?;
    let vals = ind.rational_values()?;
    let c = families::function_quasiregularity_constant(&f, (2, 2), &vals, 1)?;
    let rep = fourier::projection_norm_check(&ind, 1, &c)?;
    s.push("projection norms under quasiregularity", rep.holds, serde_json::to_value(&rep).expect("json"));
    let rep = fourier::level_d_bound_check(&ind, 1, 4, 1, &c)?;
    s.push("level-d bound", rep.holds_chained && rep.holds_explicit, serde_json::to_value(&rep).expect("json"));
    Ok(())
}

fn spectra_suite(s: &mut Suite, budget: &Budget) -> Result<()> {
    let f2 = gf(2)?;
    let f3 = gf(3)?;
    let sp = spectra::spectrum(&f2, 1, 1, 0, budget)?;
    s.push("lambda q=2 m=n=1 t=0", sp.lambda == vec![ratio(1, 1), ratio(-1, 1)], sp.to_json());
    let sp = spectra::spectrum(&f3, 1, 1, 0, budget)?;
    s.push("lambda q=3 m=n=1 t=0", sp.lambda == vec![ratio(1, 1), ratio(-1, 2)], sp.to_json());
    for f in [&f2, &f3] {
        for m in 1..=2 {
            for n in 1..=2 {
                for t in 0..m {
                    if m - t > n {
                        continue;
                    }
                    let sp = spectra::spectrum(f, m, n, t, budget)?;
                    let pass = sp.trace_check() && sp.lambda[0] == BigRational::one();
                    s.push("trace identity", pass, json!({"q": f.q(), "m": m, "n": n, "t": t}));
                }
            }
        }
    }
    for d in 0..=2 {
        let rep = spectra::rank_invariance_check(&f2, 2, 2, 1, d, budget)?;
        s.push("rank invariance", rep.holds, serde_json::to_value(&rep).expect("json"));
    }
    let rep = spectra::hoffman_vs_exact(&f2, 2, 2, 1, budget)?;
    s.push("ratio bound vs independence number", rep.holds, serde_json::to_value(&rep).expect("json"));
    Ok(())
}

fn families_suite(s: &mut Suite, rng: &mut ChaCha8Rng, budget: &Budget) -> Result<()> {
    let f = gf(2)?;
    let c = Restriction::new(&f, 2, 2, vec![(vec![1, 0], vec![1, 1])], vec![])?;
    let coset = Family::coset(&c, budget)?;
    s.push("coset cardinality", c.coset_cardinality()? == BigInt::from(4) && coset.len() == 4, json!({"q": 2}));
    let w = families::is_quasiregular(&coset, 1, &ratio(3, 1), budget)?;
    s.push("coset is not (1,3)-quasiregular", w.is_some(), json!({}));
    let all = Family::full(&f, 2, 2, budget)?;
    let w = families::is_captureable(&all, 1, &QPow::rational(2, ratio(1, 2)), budget)?;
    s.push("full space is uncaptureable", w.is_none(), json!({}));
    for trial in 0..3 {
        let fam = random_family(&f, 2, 2, 0.4, rng)?;
        let (junta, log) = families::regularity_decompose(&fam, 2, 1, None, budget)?;
        let check = families::verify_decomposition(&fam, &junta, &log, budget)?;
        s.push("regularity postconditions", check.holds(), json!({"trial": trial, "check": check}));
    }
    let rep = families::quasiregular_implies_uncaptureable_check(
        &Family::full(&f, 3, 3, budget)?,
        0,
        1,
        &BigRational::one(),
        &BigRational::one(),
        budget,
    )?;
    s.push("quasiregular implies uncaptureable", rep.uncaptureable, serde_json::to_value(&rep).expect("json"));
    let boot = families::bootstrap_quasiregular(&coset, 1, &ratio(2, 1), 8, budget)?;
    s.push("bootstrap certifies", boot.certified, boot.to_json());
    let d = coset.dual();
    s.push("dual involution", d.dual() == coset && d.measure() == coset.measure(), json!({}));
    Ok(())
}

fn extremal_suite(s: &mut Suite, budget: &Budget) -> Result<()> {
    for (q, n, t) in [(2u32, 2usize, 1usize), (2, 3, 1), (2, 3, 2), (3, 2, 1)] {
        let rep = extremal::canonical_size_report(&gf(q)?, n, t, budget)?;
        s.push("canonical family size", rep.passed(), rep.to_json());
    }
    for (q, n) in [(2u32, 2usize), (2, 3), (3, 2)] {
        let rep = extremal::verify_singer(&gf(q)?, n, budget)?;
        s.push("singer subgroup", rep.holds(), serde_json::to_value(&rep).expect("json"));
    }
    for q in [2u32, 3] {
        let rep = extremal::verify_extremal_bound(&gf(q)?, 2, 1, Mode::Exhaustive, budget)?;
        let pass = rep.value == m_qt(2, q, 1)?.to_string() && rep.params["all_canonical"] == true;
        s.push("exhaustive extremal search (exploratory)", pass, rep.to_json());
    }
    let (_, rep) = extremal::sl_family(&gf(3)?, 2, 1, budget)?;
    s.push("sl family size", rep.passed(), rep.to_json());
    let f = gf(2)?;
    let tau = Mat::from_data(&f, 3, 3, vec![0, 1, 0, 1, 0, 0, 0, 0, 1])?;
    let rep = extremal::derangement_check(&f, 3, 1, &tau, budget)?;
    s.push("derangement count chain", rep.holds(), serde_json::to_value(&rep).expect("json"));
    let fam = extremal::canonical_family(&f, 3, 1, Side::Row, budget)?;
    s.push("row family is 1-intersecting", fam.is_t_intersecting(1).0, json!({"size": fam.len()}));
    Ok(())
}

/// `Σ` of a slice of rationals; handy for reports.
pub fn sum(values: &[BigRational]) -> BigRational {
    values.iter().fold(BigRational::zero(), |acc, v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        let checks = run_suite("all", 0, &Budget::default()).unwrap();
        let failed: Vec<_> = checks.iter().filter(|c| !c.pass).collect();
        assert!(failed.is_empty(), "{failed:#?}");
        assert!(checks.len() > 30, "{}", checks.len());
        assert!(run_suite("nope", 0, &Budget::default()).is_err());
    }

    #[test]
    fn relations_q2() {
        let f = Field::gf(2).unwrap();
        let rels = rank_one_relations(&f, 1, 2, 3, &Budget::default()).unwrap();
        // the three nonzero vectors of F_2^2 sum to zero
        assert_eq!(rels.len(), 1);
    }
}
