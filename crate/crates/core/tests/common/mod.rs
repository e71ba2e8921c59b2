//! Brute-force oracles that share no code with the library: plain modular arithmetic on
//! row-major digit vectors (entry `(i, j)` of an `n × m` matrix at `i * m + j`).
#![allow(dead_code)]

use std::collections::HashSet;

/// Digits of `idx` in base `q`, most significant first (the library's enumeration order).
pub fn digits(q: u32, len: usize, mut idx: u64) -> Vec<u32> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = (idx % q as u64) as u32;
        idx /= q as u64;
    }
    out
}

pub fn inv_mod(p: u32, x: u32) -> u32 {
    (1..p).find(|&y| x * y % p == 1).expect("nonzero residue")
}

/// Row-reduces an `rows × cols` matrix over `F_p` in place; returns the pivot columns.
pub fn rref_mod(p: u32, rows: usize, cols: usize, a: &mut [u32]) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| a[i * cols + c] != 0) else { continue };
        for j in 0..cols {
            a.swap(r * cols + j, pr * cols + j);
        }
        let inv = inv_mod(p, a[r * cols + c]);
        for j in 0..cols {
            a[r * cols + j] = a[r * cols + j] * inv % p;
        }
        for i in 0..rows {
            let f = a[i * cols + c];
            if i != r && f != 0 {
                for j in 0..cols {
                    a[i * cols + j] = (a[i * cols + j] + (p - f) * a[r * cols + j]) % p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank_mod(p: u32, rows: usize, cols: usize, a: &[u32]) -> usize {
    let mut b = a.to_vec();
    rref_mod(p, rows, cols, &mut b).len()
}

/// Rank over `F_2` of rows packed as bitmasks.
pub fn rank_gf2(rows: &mut [u64]) -> usize {
    let mut rank = 0;
    while let Some(j) = (rank..rows.len()).find(|&j| rows[j] != 0) {
        rows.swap(rank, j);
        let pivot = rows[rank] & rows[rank].wrapping_neg();
        for k in 0..rows.len() {
            if k != rank && rows[k] & pivot != 0 {
                rows[k] ^= rows[rank];
            }
        }
        rank += 1;
    }
    rank
}

/// Packs the rows of an `n × m` GF(2) matrix with `m <= 64`.
pub fn pack_rows(n: usize, m: usize, a: &[u32]) -> Vec<u64> {
    (0..n).map(|i| (0..m).fold(0u64, |acc, j| acc | (a[i * m + j] as u64) << j)).collect()
}

pub fn sub_mod(p: u32, a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| (x + p - y) % p).collect()
}

pub fn mul_mod(p: u32, n: usize, k: usize, m: usize, a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = vec![0; n * m];
    for i in 0..n {
        for j in 0..m {
            out[i * m + j] = (0..k).map(|l| a[i * k + l] * b[l * m + j]).sum::<u32>() % p;
        }
    }
    out
}

/// `σ v` for an `n × m` matrix.
pub fn apply_mod(p: u32, n: usize, m: usize, a: &[u32], v: &[u32]) -> Vec<u32> {
    (0..n).map(|i| (0..m).map(|j| a[i * m + j] * v[j]).sum::<u32>() % p).collect()
}

/// The `d`-dimensional subspaces of `F_p^m`, as their sorted RREF bases, found by reducing
/// every `d × m` matrix of full rank.
pub fn subspaces_mod(p: u32, m: usize, d: usize) -> HashSet<Vec<u32>> {
    let total = (p as u64).pow((d * m) as u32);
    let mut out = HashSet::new();
    for idx in 0..total {
        let mut a = digits(p, d * m, idx);
        if rref_mod(p, d, m, &mut a).len() == d {
            out.insert(a);
        }
    }
    out
}

/// Arithmetic in `F_4 = F_2[x]/(x^2 + x + 1)`, elements `c0 + 2 c1`.
pub fn gf4_mul(a: u32, b: u32) -> u32 {
    let (a0, a1, b0, b1) = (a & 1, a >> 1, b & 1, b >> 1);
    // (a0 + a1 x)(b0 + b1 x) = a0b0 + (a0b1 + a1b0) x + a1b1 (x + 1)
    let c0 = (a0 * b0) ^ (a1 * b1);
    let c1 = (a0 * b1) ^ (a1 * b0) ^ (a1 * b1);
    c0 | c1 << 1
}

/// All maximum cliques of a graph given by an adjacency matrix (Bron–Kerbosch with pivoting).
pub fn maximum_cliques(adj: &[Vec<bool>]) -> (usize, Vec<Vec<usize>>) {
    fn bk(adj: &[Vec<bool>], r: &mut Vec<usize>, p: Vec<usize>, x: Vec<usize>, best: &mut (usize, Vec<Vec<usize>>)) {
        if p.is_empty() && x.is_empty() {
            if r.len() > best.0 {
                *best = (r.len(), vec![r.clone()]);
            } else if r.len() == best.0 {
                best.1.push(r.clone());
            }
            return;
        }
        if r.len() + p.len() < best.0 {
            return;
        }
        let pivot = *p.iter().chain(&x).max_by_key(|&&u| p.iter().filter(|&&v| adj[u][v]).count()).expect("nonempty");
        let mut p = p;
        let mut x = x;
        for v in p.clone() {
            if adj[pivot][v] {
                continue;
            }
            r.push(v);
            let np = p.iter().copied().filter(|&u| adj[v][u]).collect();
            let nx = x.iter().copied().filter(|&u| adj[v][u]).collect();
            bk(adj, r, np, nx, best);
            r.pop();
            p.retain(|&u| u != v);
            x.push(v);
        }
    }
    let mut best = (0, Vec::new());
    bk(adj, &mut Vec::new(), (0..adj.len()).collect(), Vec::new(), &mut best);
    for c in &mut best.1 {
        c.sort_unstable();
    }
    best
}
