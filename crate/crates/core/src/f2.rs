//! Bit-packed linear algebra over GF(2).
//!
//! Vectors pack coordinate `i` (0-based) into bit `i % 64` of word `i / 64`.
//! Every user-facing text form is a string of `0`/`1` characters whose first
//! character is coordinate 1.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use smallvec::SmallVec;

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

#[inline]
fn word_count(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// A vector over GF(2). Padding bits past `len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    words: SmallVec<[u64; 1]>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self { words: SmallVec::from_elem(0, word_count(len)), len }
    }

    /// The `i`-th standard basis vector (0-based).
    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self::zeros(len);
        for w in v.words.iter_mut() {
            *w = u64::MAX;
        }
        v.clear_padding();
        v
    }

    /// Builds a vector from the low `len` bits of `value` (bit `j` is coordinate `j`).
    pub fn from_u64(len: usize, value: u64) -> Self {
        let mut v = Self::zeros(len);
        if let Some(w) = v.words.first_mut() {
            *w = value;
        }
        v.clear_padding();
        v
    }

    pub fn from_words(len: usize, words: &[u64]) -> Self {
        assert_eq!(words.len(), word_count(len), "word count does not match length");
        let mut v = Self { words: SmallVec::from_slice(words), len };
        v.clear_padding();
        v
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in indices {
            v.set(i, true);
        }
        v
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut v = Self::zeros(len);
        for w in v.words.iter_mut() {
            *w = rng.gen();
        }
        v.clear_padding();
        v
    }

    fn clear_padding(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Low word, or zero for an empty vector. Exact whenever `len <= 64`.
    #[inline]
    pub fn low_word(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range (len={})", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range (len={})", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range (len={})", self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    #[inline]
    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a ^= *b;
        }
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn and(&self, other: &BitVec) -> BitVec {
        debug_assert_eq!(self.len, other.len);
        let mut out = self.clone();
        for (a, b) in out.words.iter_mut().zip(other.words.iter()) {
            *a &= *b;
        }
        out
    }

    /// Inner product over GF(2).
    #[inline]
    pub fn dot(&self, other: &BitVec) -> bool {
        debug_assert_eq!(self.len, other.len);
        let mut acc = 0u32;
        for (a, b) in self.words.iter().zip(other.words.iter()) {
            acc ^= (a & b).count_ones();
        }
        acc & 1 == 1
    }

    /// True when every set bit of `self` is also set in `other`.
    #[inline]
    pub fn is_subset_of(&self, other: &BitVec) -> bool {
        self.words.iter().zip(other.words.iter()).all(|(a, b)| a & !b == 0)
    }

    #[inline]
    pub fn intersects(&self, other: &BitVec) -> bool {
        self.words.iter().zip(other.words.iter()).any(|(a, b)| a & b != 0)
    }

    #[inline]
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words.iter().enumerate().find(|(_, w)| **w != 0).map(|(k, w)| k * WORD_BITS + w.trailing_zeros() as usize)
    }

    /// Indices of set bits in increasing order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * WORD_BITS + b)
                }
            })
        })
    }

    /// Copy with coordinates remapped: bit `i` of the result is bit `map[i]` of `self`.
    pub fn gather(&self, map: &[usize]) -> BitVec {
        let mut out = BitVec::zeros(map.len());
        for (i, &src) in map.iter().enumerate() {
            if self.get(src) {
                out.set(i, true);
            }
        }
        out
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    pub fn parse_bits(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut v = BitVec::zeros(chars.len());
        for (i, c) in chars.iter().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                other => return Err(Error::Syntax { pos: i, msg: format!("expected '0' or '1', found {other:?}") }),
            }
        }
        Ok(v)
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({})", self.to_bit_string())
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bit_string())
    }
}

impl FromStr for BitVec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_bits(s)
    }
}

/// Dense row-major matrix over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: Vec<BitVec>,
    cols: usize,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows: vec![BitVec::zeros(cols); rows], cols }
    }

    pub fn identity(n: usize) -> Self {
        Self { rows: (0..n).map(|i| BitVec::unit(n, i)).collect(), cols: n }
    }

    pub fn from_rows(rows: Vec<BitVec>, cols: usize) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch { expected: cols, found: bad.len() });
        }
        Ok(Self { rows, cols })
    }

    /// Matrix whose columns are the given vectors (all of length `rows`).
    pub fn from_columns(columns: &[BitVec], rows: usize) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::DimensionMismatch { expected: rows, found: col.len() });
            }
            for i in col.iter_ones() {
                m.rows[i].set(j, true);
            }
        }
        Ok(m)
    }

    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Self { rows: (0..rows).map(|_| BitVec::random(cols, rng)).collect(), cols }
    }

    /// Uniform element of GL(n, 2) by rejection sampling.
    pub fn random_invertible<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        loop {
            let m = Self::random(n, n, rng);
            if m.rank() == n {
                return m;
            }
        }
    }

    #[inline]
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn num_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows.len() == self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].get(j)
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.rows[i].set(j, value)
    }

    pub fn column(&self, j: usize) -> BitVec {
        let mut out = BitVec::zeros(self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            if r.get(j) {
                out.set(i, true);
            }
        }
        out
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            for j in r.iter_ones() {
                t.rows[j].set(i, true);
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &BitVec) -> Result<BitVec> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: x.len() });
        }
        let mut out = BitVec::zeros(self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            if r.dot(x) {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.rows.len() {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows.len() });
        }
        let mut out = BitMatrix::zeros(self.rows.len(), other.cols);
        for (i, r) in self.rows.iter().enumerate() {
            for k in r.iter_ones() {
                out.rows[i].xor_assign(&other.rows[k]);
            }
        }
        Ok(out)
    }

    /// Reduces to row echelon form in place and returns the pivot columns.
    fn echelonize(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows.len() {
                break;
            }
            let Some(p) = (r..self.rows.len()).find(|&i| self.rows[i].get(c)) else {
                continue;
            };
            self.rows.swap(r, p);
            let pivot = self.rows[r].clone();
            for (i, row) in self.rows.iter_mut().enumerate() {
                if i != r && row.get(c) {
                    row.xor_assign(&pivot);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().echelonize().len()
    }

    pub fn invert(&self) -> Result<BitMatrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch { expected: self.rows.len(), found: self.cols });
        }
        let n = self.cols;
        let mut a = self.rows.clone();
        let mut inv: Vec<BitVec> = (0..n).map(|i| BitVec::unit(n, i)).collect();
        for c in 0..n {
            let p = (c..n).find(|&i| a[i].get(c)).ok_or(Error::SingularMatrix)?;
            a.swap(c, p);
            inv.swap(c, p);
            let (pa, pi) = (a[c].clone(), inv[c].clone());
            for i in 0..n {
                if i != c && a[i].get(c) {
                    a[i].xor_assign(&pa);
                    inv[i].xor_assign(&pi);
                }
            }
        }
        Ok(BitMatrix { rows: inv, cols: n })
    }

    /// Basis of `{x : self * x = 0}`, one vector per free column.
    pub fn kernel_basis(&self) -> Vec<BitVec> {
        let mut m = self.clone();
        let pivots = m.echelonize();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        (0..self.cols)
            .filter(|&f| !is_pivot[f])
            .map(|f| {
                let mut v = BitVec::unit(self.cols, f);
                for (r, &p) in pivots.iter().enumerate() {
                    if m.rows[r].get(f) {
                        v.set(p, true);
                    }
                }
                v
            })
            .collect()
    }

    pub fn to_row_strings(&self) -> Vec<String> {
        self.rows.iter().map(BitVec::to_bit_string).collect()
    }

    /// Parses one `0`/`1` string per row; all rows must have equal length.
    pub fn from_row_strings<S: AsRef<str>>(rows: &[S]) -> Result<BitMatrix> {
        let parsed = rows.iter().map(|s| BitVec::parse_bits(s.as_ref())).collect::<Result<Vec<_>>>()?;
        let cols = parsed.first().map_or(0, BitVec::len);
        BitMatrix::from_rows(parsed, cols)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows.len(), self.cols)?;
        for r in &self.rows {
            writeln!(f, "  {r}")?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

/// An affine bijection `x -> Mx + b` of F2^n.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffineMap {
    matrix: BitMatrix,
    offset: BitVec,
}

impl AffineMap {
    /// Rejects non-square or singular matrices and offsets of the wrong length.
    pub fn new(matrix: BitMatrix, offset: BitVec) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: matrix.num_rows(), found: matrix.num_cols() });
        }
        if offset.len() != matrix.num_rows() {
            return Err(Error::DimensionMismatch { expected: matrix.num_rows(), found: offset.len() });
        }
        if matrix.rank() != matrix.num_rows() {
            return Err(Error::SingularMatrix);
        }
        Ok(Self { matrix, offset })
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: BitMatrix::identity(n), offset: BitVec::zeros(n) }
    }

    pub fn translation(offset: BitVec) -> Self {
        Self { matrix: BitMatrix::identity(offset.len()), offset }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let matrix = BitMatrix::random_invertible(n, rng);
        let offset = BitVec::random(n, rng);
        Self { matrix, offset }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    pub fn offset(&self) -> &BitVec {
        &self.offset
    }

    pub fn apply(&self, x: &BitVec) -> Result<BitVec> {
        let mut y = self.matrix.mul_vec(x)?;
        y.xor_assign(&self.offset);
        Ok(y)
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: &AffineMap, inner: &AffineMap) -> Result<AffineMap> {
        if outer.dim() != inner.dim() {
            return Err(Error::DimensionMismatch { expected: outer.dim(), found: inner.dim() });
        }
        let matrix = outer.matrix.mul(&inner.matrix)?;
        let offset = outer.apply(&inner.offset)?;
        Ok(AffineMap { matrix, offset })
    }

    pub fn inverse(&self) -> AffineMap {
        let inv = self.matrix.invert().expect("affine map holds an invertible matrix");
        let offset = inv.mul_vec(&self.offset).expect("dimensions checked at construction");
        AffineMap { matrix: inv, offset }
    }
}

/// Free-standing forms of the core operations.
pub fn rank(m: &BitMatrix) -> usize {
    m.rank()
}

pub fn invert(m: &BitMatrix) -> Result<BitMatrix> {
    m.invert()
}

pub fn apply_affine(a: &AffineMap, x: &BitVec) -> Result<BitVec> {
    a.apply(x)
}

pub fn compose(outer: &AffineMap, inner: &AffineMap) -> Result<AffineMap> {
    AffineMap::compose(outer, inner)
}

pub fn kernel_basis(m: &BitMatrix) -> Vec<BitVec> {
    m.kernel_basis()
}
