//! Exact maximum independent sets by branch and bound.
//!
//! Independent sets of `G` are cliques of the complement; we run a
//! Tomita-style max-clique search on the complement with a greedy colouring
//! bound (colour classes of the complement are cliques of `G`).

use crate::budget::Budget;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    words: usize,
    adj: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MisResult {
    pub size: usize,
    /// One maximum set, or all of them when requested (each sorted).
    pub sets: Vec<Vec<usize>>,
    pub nodes: u64,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Graph { n, words, adj: vec![0; n * words] }
    }

    pub fn from_fn(n: usize, mut edge: impl FnMut(usize, usize) -> bool) -> Self {
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                if edge(u, v) {
                    g.add_edge(u, v);
                }
            }
        }
        g
    }

    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u == v {
            return;
        }
        self.adj[u * self.words + v / 64] |= 1 << (v % 64);
        self.adj[v * self.words + u / 64] |= 1 << (u % 64);
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row(u).iter().map(|w| w.count_ones() as usize).sum()
    }

    fn row(&self, u: usize) -> &[u64] {
        &self.adj[u * self.words..(u + 1) * self.words]
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(i, &u)| set[i + 1..].iter().all(|&v| !self.has_edge(u, v)))
    }
}

struct Search<'a> {
    g: &'a Graph,
    best: usize,
    best_sets: Vec<Vec<usize>>,
    all: bool,
    /// Stop as soon as a set of this size is found (an upper bound proved elsewhere).
    cap: usize,
    nodes: u64,
    budget: &'a Budget,
}

fn bits(set: &[u64]) -> impl Iterator<Item = usize> + '_ {
    set.iter().enumerate().flat_map(|(wi, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                return None;
            }
            let b = w.trailing_zeros() as usize;
            w &= w - 1;
            Some(wi * 64 + b)
        })
    })
}

fn first_bit(set: &[u64]) -> Option<usize> {
    bits(set).next()
}

fn is_empty(set: &[u64]) -> bool {
    set.iter().all(|&w| w == 0)
}

impl Search<'_> {
    /// Greedy colouring of the candidates (colour classes are `G`-cliques).
    /// Returns vertices in colouring order with their colour numbers.
    fn colour(&self, cand: &[u64]) -> (Vec<usize>, Vec<usize>) {
        let mut uncoloured = cand.to_vec();
        let mut order = Vec::new();
        let mut colours = Vec::new();
        let mut c = 0;
        while !is_empty(&uncoloured) {
            c += 1;
            let mut q = uncoloured.clone();
            while let Some(v) = first_bit(&q) {
                order.push(v);
                colours.push(c);
                uncoloured[v / 64] &= !(1 << (v % 64));
                q[v / 64] &= !(1 << (v % 64));
                // stay inside the G-neighbourhood so the class remains a G-clique
                for (qw, aw) in q.iter_mut().zip(self.g.row(v)) {
                    *qw &= aw;
                }
            }
        }
        (order, colours)
    }

    fn expand(&mut self, current: &mut Vec<usize>, mut cand: Vec<u64>) -> Result<()> {
        self.nodes += 1;
        if self.nodes % 4096 == 0 {
            self.budget.check_time()?;
            if self.nodes > self.budget.max_items {
                return Err(Error::BudgetExceeded(format!("branch and bound visited {} nodes", self.nodes)));
            }
        }
        if self.best >= self.cap {
            return Ok(());
        }
        if is_empty(&cand) {
            self.record(current);
            return Ok(());
        }
        let (order, colours) = self.colour(&cand);
        for i in (0..order.len()).rev() {
            let bound = current.len() + colours[i];
            if bound < self.best || (!self.all && bound == self.best) {
                return Ok(());
            }
            let v = order[i];
            current.push(v);
            // candidates compatible with v: non-neighbours in G, other than v
            let next: Vec<u64> = cand
                .iter()
                .zip(self.g.row(v))
                .enumerate()
                .map(|(wi, (&c, &a))| {
                    let mut w = c & !a;
                    if wi == v / 64 {
                        w &= !(1 << (v % 64));
                    }
                    w
                })
                .collect();
            self.expand(current, next)?;
            current.pop();
            cand[v / 64] &= !(1 << (v % 64));
        }
        Ok(())
    }

    fn record(&mut self, current: &[usize]) {
        let mut set = current.to_vec();
        set.sort_unstable();
        if current.len() > self.best {
            self.best = current.len();
            self.best_sets = vec![set];
        } else if current.len() == self.best && self.all {
            self.best_sets.push(set);
        }
    }
}

fn run(g: &Graph, forced: Option<usize>, incumbent: usize, all: bool, budget: &Budget) -> Result<MisResult> {
    run_capped(g, forced, incumbent, all, usize::MAX, budget)
}

fn run_capped(g: &Graph, forced: Option<usize>, incumbent: usize, all: bool, cap: usize, budget: &Budget) -> Result<MisResult> {
    let mut cand = vec![0u64; g.words];
    for v in 0..g.n {
        cand[v / 64] |= 1 << (v % 64);
    }
    let mut current = Vec::new();
    if let Some(v) = forced {
        current.push(v);
        for (c, a) in cand.iter_mut().zip(g.row(v)) {
            *c &= !a;
        }
        cand[v / 64] &= !(1 << (v % 64));
    }
    let mut s = Search { g, best: incumbent, best_sets: Vec::new(), all, cap, nodes: 0, budget };
    s.expand(&mut current, cand)?;
    let mut sets = s.best_sets;
    sets.sort();
    sets.dedup();
    Ok(MisResult { size: s.best, sets, nodes: s.nodes })
}

/// Size of a maximum independent set, with one witness.
pub fn max_independent_set(g: &Graph, budget: &Budget) -> Result<MisResult> {
    run(g, None, 0, false, budget)
}

/// Maximum independent sets containing `v`; for vertex-transitive graphs this is
/// the independence number, at a fraction of the search.
pub fn max_independent_set_through(g: &Graph, v: usize, budget: &Budget) -> Result<MisResult> {
    run(g, Some(v), 0, false, budget)
}

/// As [`max_independent_set_through`], stopping early once a set of size `cap` is found.
/// Exact whenever `cap` is a proven upper bound on the independence number.
/// `incumbent` is the size of an independent set through `v` already known; only larger sets are
/// searched for (and only those are reported as witnesses).
pub fn max_independent_set_through_capped(g: &Graph, v: usize, incumbent: usize, cap: usize, budget: &Budget) -> Result<MisResult> {
    run_capped(g, Some(v), incumbent, false, cap, budget)
}

/// A clique built greedily: scan `order`, keep each vertex adjacent to everything kept so far.
pub fn greedy_clique(g: &Graph, order: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut clique: Vec<usize> = Vec::new();
    for v in order {
        if clique.iter().all(|&u| g.has_edge(u, v)) {
            clique.push(v);
        }
    }
    clique
}

/// Every maximum independent set, given a known independent `seed`: only sets at least as
/// large as the seed are explored, so a good seed certifies optimality quickly.
pub fn maximum_independent_sets_seeded(g: &Graph, seed: &[usize], budget: &Budget) -> Result<MisResult> {
    if !g.is_independent(seed) {
        return Err(Error::PreconditionViolated("seed is not an independent set".into()));
    }
    run(g, None, seed.len(), true, budget)
}

/// Every maximum independent set.
pub fn all_maximum_independent_sets(g: &Graph, budget: &Budget) -> Result<MisResult> {
    let size = max_independent_set(g, budget)?.size;
    let res = run(g, None, size, true, budget)?;
    debug_assert!(res.sets.iter().all(|s| s.len() == size));
    Ok(MisResult { size, ..res })
}
