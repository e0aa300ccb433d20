//! Dickson normal form of quadratic functions.
//!
//! Every `f` of degree at most 2 on n variables can be written, after an
//! affine change of variables `y = Ax + b`, as
//! `y1 y2 + y3 y4 + ... + y(t-1) y(t) + c` (type I) or
//! `y1 y2 + ... + y(t-1) y(t) + y(t+1)` (type II), where `t` is the number of
//! paired coordinates.
//!
//! Construction: symplectic Gram–Schmidt on the alternating form
//! `B(u, v) = uᵀBv` with `B` the off-diagonal quadratic coefficients, then
//! completing each product `z_u z_v + α z_u + β z_v = (z_u + β)(z_v + α) + αβ`
//! and folding the affine part on the radical into `y(t+1)`.

use serde::{Deserialize, Serialize};

use crate::anf::Anf;
use crate::error::{Error, Result};
use crate::f2::{AffineMap, BitMatrix, BitVec};
use crate::pipeline::Flat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormType {
    /// Constant tail `c`.
    #[serde(rename = "I")]
    I,
    /// Linear tail `y(t+1)`.
    #[serde(rename = "II")]
    II,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DicksonForm {
    pub t: usize,
    pub form_type: FormType,
    pub c: bool,
    /// The change of variables `y = Ax + b`.
    pub map: AffineMap,
}

impl DicksonForm {
    pub fn num_vars(&self) -> usize {
        self.map.dim()
    }

    /// `y`-coordinates (0-based) fixed to zero by the constant flat.
    pub fn fixed_coordinates(&self) -> Vec<usize> {
        let mut fixed: Vec<usize> = (0..self.t).step_by(2).collect();
        if self.form_type == FormType::II {
            fixed.push(self.t);
        }
        fixed
    }

    /// Value of `f` on the constant flat.
    pub fn flat_constant(&self) -> bool {
        match self.form_type {
            FormType::I => self.c,
            FormType::II => false,
        }
    }

    pub fn to_doc(&self) -> DicksonDoc {
        DicksonDoc {
            t: self.t,
            form_type: self.form_type,
            c: self.c as u8,
            matrix: self.map.matrix().to_row_strings(),
            offset: self.map.offset().to_bit_string(),
        }
    }
}

/// JSON form of a [`DicksonForm`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DicksonDoc {
    pub t: usize,
    #[serde(rename = "type")]
    pub form_type: FormType,
    pub c: u8,
    pub matrix: Vec<String>,
    pub offset: String,
}

impl DicksonDoc {
    pub fn to_form(&self) -> Result<DicksonForm> {
        let matrix = BitMatrix::from_row_strings(&self.matrix)?;
        let offset = BitVec::parse_bits(&self.offset)?;
        let map = AffineMap::new(matrix, offset)?;
        if self.c > 1 {
            return Err(Error::Format(format!("c must be 0 or 1, found {}", self.c)));
        }
        let d = DicksonForm { t: self.t, form_type: self.form_type, c: self.c == 1, map };
        check_shape(&d, d.num_vars())?;
        Ok(d)
    }
}

fn check_shape(d: &DicksonForm, n: usize) -> Result<()> {
    if !d.t.is_multiple_of(2) {
        return Err(Error::Inconsistent(format!("t = {} is odd", d.t)));
    }
    if d.t > n {
        return Err(Error::Inconsistent(format!("t = {} exceeds n = {n}", d.t)));
    }
    if d.form_type == FormType::II && d.t + 1 > n {
        return Err(Error::Inconsistent(format!("type II needs t + 1 <= n, got t = {}, n = {n}", d.t)));
    }
    if d.map.dim() != n {
        return Err(Error::Inconsistent(format!("map has dimension {}, expected {n}", d.map.dim())));
    }
    Ok(())
}

/// Matrix of the alternating form of a quadratic: `B[i][j] = c_{i,j}`.
pub fn bilinear_matrix(f: &Anf) -> BitMatrix {
    let n = f.num_vars();
    let mut b = BitMatrix::zeros(n, n);
    for t in f.terms().iter().filter(|t| t.weight() == 2) {
        let mut it = t.iter_ones();
        let (i, j) = (it.next().unwrap(), it.next().unwrap());
        b.set(i, j, true);
        b.set(j, i, true);
    }
    b
}

/// Symplectic basis: hyperbolic pairs first, then a radical basis.
fn symplectic_basis(b: &BitMatrix) -> (Vec<(BitVec, BitVec)>, Vec<BitVec>) {
    let n = b.num_rows();
    let form = |u: &BitVec, v: &BitVec| u.dot(&b.mul_vec(v).expect("square form"));
    let mut work: Vec<BitVec> = (0..n).map(|i| BitVec::unit(n, i)).collect();
    let mut pairs = Vec::new();
    'outer: loop {
        for a in 0..work.len() {
            let bu = b.mul_vec(&work[a]).expect("square form");
            let Some(k) = (a + 1..work.len()).find(|&k| work[k].dot(&bu)) else { continue };
            let v = work.remove(k);
            let u = work.remove(a);
            for w in work.iter_mut() {
                let (wv, wu) = (form(w, &v), form(w, &u));
                if wv {
                    w.xor_assign(&u);
                }
                if wu {
                    w.xor_assign(&v);
                }
            }
            pairs.push((u, v));
            continue 'outer;
        }
        break;
    }
    (pairs, work)
}

pub fn dickson_decompose(f: &Anf) -> Result<DicksonForm> {
    let degree = f.degree();
    if degree > 2 {
        return Err(Error::DegreeTooHigh { degree });
    }
    let n = f.num_vars();
    let (pairs, radical) = symplectic_basis(&bilinear_matrix(f));
    let t = 2 * pairs.len();

    // z-coordinates: x = P z with columns u1, v1, u2, v2, ..., radical
    let mut columns = Vec::with_capacity(n);
    for (u, v) in &pairs {
        columns.push(u.clone());
        columns.push(v.clone());
    }
    columns.extend(radical);
    let p = BitMatrix::from_columns(&columns, n)?;
    let p_inv = p.invert()?;
    let g = f.compose_affine(&AffineMap::new(p, BitVec::zeros(n))?)?;

    let mut linear = BitVec::zeros(n);
    let mut constant = false;
    for term in g.terms() {
        match term.weight() {
            0 => constant = true,
            1 => linear.set(term.first_one().unwrap(), true),
            2 => {
                let i = term.first_one().unwrap();
                debug_assert!(i % 2 == 0 && i + 1 < t && term.get(i + 1), "non-standard pair in z-coordinates");
            }
            _ => unreachable!("degree checked"),
        }
    }

    // y = M z + b
    let mut rows: Vec<BitVec> = Vec::with_capacity(n);
    let mut offset = BitVec::zeros(n);
    for i in 0..pairs.len() {
        let (zu, zv) = (2 * i, 2 * i + 1);
        let (alpha, beta) = (linear.get(zu), linear.get(zv));
        rows.push(BitVec::unit(n, zu));
        rows.push(BitVec::unit(n, zv));
        offset.set(zu, beta);
        offset.set(zv, alpha);
        constant ^= alpha & beta;
    }
    let mut tail = BitVec::zeros(n);
    for j in t..n {
        tail.set(j, linear.get(j));
    }
    let (form_type, c) = match tail.first_one() {
        Some(pivot) => {
            rows.push(tail);
            offset.set(t, constant);
            rows.extend((t..n).filter(|&j| j != pivot).map(|j| BitVec::unit(n, j)));
            (FormType::II, false)
        }
        None => {
            rows.extend((t..n).map(|j| BitVec::unit(n, j)));
            (FormType::I, constant)
        }
    };
    let m = BitMatrix::from_rows(rows, n)?;
    let map = AffineMap::new(m.mul(&p_inv)?, offset)?;
    Ok(DicksonForm { t, form_type, c, map })
}

/// `sum y(2i-1) y(2i) + tail` as an ANF in the `y` variables.
pub fn canonical_anf(d: &DicksonForm, n: usize) -> Result<Anf> {
    check_shape(d, n)?;
    let mut sets: Vec<Vec<usize>> = (0..d.t / 2).map(|i| vec![2 * i + 1, 2 * i + 2]).collect();
    match d.form_type {
        FormType::I if d.c => sets.push(Vec::new()),
        FormType::I => {}
        FormType::II => sets.push(vec![d.t + 1]),
    }
    Anf::from_index_sets(n, sets)
}

/// A flat of dimension `n - t/2 - [type II]` on which `f` is constant,
/// together with that constant.
pub fn quadratic_flat(f: &Anf) -> Result<(Flat, bool)> {
    let d = dickson_decompose(f)?;
    Ok((flat_of_form(&d)?, d.flat_constant()))
}

/// `{x : (Ax + b)_j = 0 for each fixed j}`, as offset plus basis.
pub fn flat_of_form(d: &DicksonForm) -> Result<Flat> {
    let n = d.num_vars();
    let inv = d.map.inverse();
    let fixed = d.fixed_coordinates();
    let mut is_fixed = vec![false; n];
    for &j in &fixed {
        is_fixed[j] = true;
    }
    // x = A⁻¹ y + A⁻¹ b over y with the fixed coordinates zero
    let basis = (0..n).filter(|&j| !is_fixed[j]).map(|j| inv.matrix().column(j)).collect();
    Flat::new(inv.offset().clone(), basis)
}
