//! Exhaustive normality and thickness for tiny `n`.
//!
//! Both searches visit candidates in a fixed order and report the first
//! witness in that order, so parallel and serial runs agree exactly.

use rayon::prelude::*;

use crate::anf::{Anf, TruthTable};
use crate::error::{Error, Result};
use crate::f2::BitVec;
use crate::pipeline::Flat;

pub const DEFAULT_NORMALITY_CAP: usize = 8;
pub const DEFAULT_THICKNESS_CAP: usize = 4;

/// A linear subspace in reduced row echelon form, rows as bitmasks.
#[derive(Clone, Debug)]
struct Subspace {
    rows: Vec<u64>,
    pivot_mask: u64,
}

/// All `k`-dimensional subspaces of F2^n in a fixed order: pivot sets in
/// lexicographic order, then free entries by counter value.
fn subspaces(n: usize, k: usize) -> Vec<Subspace> {
    let mut out = Vec::new();
    let mut pivots: Vec<usize> = (0..k).collect();
    loop {
        // free positions of row r: non-pivot columns after its pivot
        let free: Vec<Vec<usize>> =
            (0..k).map(|r| (pivots[r] + 1..n).filter(|c| !pivots.contains(c)).collect()).collect();
        let total_free: usize = free.iter().map(Vec::len).sum();
        let pivot_mask = pivots.iter().fold(0u64, |m, &p| m | 1 << p);
        for pattern in 0u64..(1u64 << total_free) {
            let mut bit = 0;
            let rows = (0..k)
                .map(|r| {
                    let mut row = 1u64 << pivots[r];
                    for &c in &free[r] {
                        if pattern >> bit & 1 == 1 {
                            row |= 1 << c;
                        }
                        bit += 1;
                    }
                    row
                })
                .collect();
            out.push(Subspace { rows, pivot_mask });
        }
        // next combination
        let Some(i) = (0..k).rev().find(|&i| pivots[i] < n - k + i) else { break };
        pivots[i] += 1;
        for j in i + 1..k {
            pivots[j] = pivots[j - 1] + 1;
        }
    }
    out
}

fn span(rows: &[u64]) -> Vec<u64> {
    let mut pts = vec![0u64];
    for &r in rows {
        let len = pts.len();
        for i in 0..len {
            pts.push(pts[i] ^ r);
        }
    }
    pts
}

/// Coset representative of `sub` whose points are all equal in `tt`.
fn constant_coset(tt: &TruthTable, n: usize, sub: &Subspace) -> Option<u64> {
    let pts = span(&sub.rows);
    let free_cols: Vec<usize> = (0..n).filter(|c| sub.pivot_mask >> c & 1 == 0).collect();
    for idx in 0u64..(1u64 << free_cols.len()) {
        let a = free_cols.iter().enumerate().fold(0u64, |acc, (b, &c)| acc | (idx >> b & 1) << c);
        let v = tt.get(a as usize);
        if pts.iter().all(|&s| tt.get((a ^ s) as usize) == v) {
            return Some(a);
        }
    }
    None
}

/// Largest `k` with a `k`-flat on which `f` is constant, and the first such
/// flat in enumeration order. Constant functions get `n`.
pub fn brute_force_normality(f: &Anf) -> Result<(usize, Flat)> {
    brute_force_normality_capped(f, DEFAULT_NORMALITY_CAP)
}

pub fn brute_force_normality_capped(f: &Anf, cap: usize) -> Result<(usize, Flat)> {
    let n = f.num_vars();
    if n > cap.min(16) {
        return Err(Error::TooLarge(format!("normality oracle supports n <= {}, got {n}", cap.min(16))));
    }
    if f.is_constant() {
        return Ok((n, Flat::whole_space(n)));
    }
    let tt = f.to_truth_table_capped(cap)?;
    for k in (0..n).rev() {
        let subs = subspaces(n, k);
        let hit = subs.par_iter().find_map_first(|sub| constant_coset(&tt, n, sub).map(|a| (a, sub.rows.clone())));
        if let Some((a, rows)) = hit {
            let basis = rows.iter().map(|&r| BitVec::from_u64(n, r)).collect();
            return Ok((k, Flat::new(BitVec::from_u64(n, a), basis)?));
        }
    }
    unreachable!("every point is a constant 0-flat")
}

/// `min ‖f ∘ A‖` over all affine bijections `A` of F2^n.
pub fn brute_force_thickness(f: &Anf) -> Result<usize> {
    brute_force_thickness_capped(f, DEFAULT_THICKNESS_CAP)
}

pub fn brute_force_thickness_capped(f: &Anf, cap: usize) -> Result<usize> {
    let n = f.num_vars();
    if n > cap.min(5) {
        return Err(Error::TooLarge(format!("thickness oracle supports n <= {}, got {n}", cap.min(5))));
    }
    if f.is_zero() {
        return Ok(0);
    }
    let tt = f.to_truth_table()?;
    let size = 1usize << n;
    let values: Vec<bool> = (0..size).map(|i| tt.get(i)).collect();
    let cells = (n * n) as u32;
    let best = (0u64..1u64 << cells)
        .into_par_iter()
        .filter_map(|bits| {
            // column j of the matrix is bits[j*n .. j*n+n]
            let cols: Vec<u64> = (0..n).map(|j| bits >> (j * n) & ((1 << n) - 1)).collect();
            if !independent(&cols) {
                return None;
            }
            let linear: Vec<u64> = (0..size as u64)
                .map(|x| cols.iter().enumerate().fold(0, |acc, (j, &c)| acc ^ if x >> j & 1 == 1 { c } else { 0 }))
                .collect();
            (0..size as u64)
                .map(|b| {
                    let permuted: Vec<bool> = linear.iter().map(|&y| values[(y ^ b) as usize]).collect();
                    TruthTable::from_bools(&permuted)
                        .and_then(|t| t.to_anf())
                        .map(|g| g.sparsity())
                        .unwrap_or(usize::MAX)
                })
                .min()
        })
        .min()
        .unwrap_or(usize::MAX);
    Ok(best)
}

fn independent(cols: &[u64]) -> bool {
    let mut basis: Vec<u64> = Vec::new();
    for &c in cols {
        let mut v = c;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v == 0 {
            return false;
        }
        basis.push(v);
    }
    true
}
