//! Multilinear polynomials over GF(2) and the truth-table transforms.
//!
//! A monomial is a [`BitVec`] of width `n` whose set bits are its variables;
//! the empty monomial is the constant 1. An [`Anf`] keeps its monomials sorted
//! in canonical order (degree, then index sequence) with no repeats.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::f2::{AffineMap, BitMatrix, BitVec};

/// Largest variable count accepted by the truth-table transforms by default.
pub const DEFAULT_TRUTH_TABLE_CAP: usize = 24;

/// Term-count ceiling for symbolic affine composition.
pub const DEFAULT_BLOWUP_LIMIT: usize = 1 << 22;

pub type Monomial = BitVec;

/// Canonical monomial order: lower degree first, then lexicographic on the
/// increasing index sequence.
pub fn monomial_cmp(a: &Monomial, b: &Monomial) -> Ordering {
    match a.weight().cmp(&b.weight()) {
        Ordering::Equal => {}
        other => return other,
    }
    for (wa, wb) in a.words().iter().zip(b.words()) {
        let diff = wa ^ wb;
        if diff != 0 {
            let low = diff & diff.wrapping_neg();
            return if wa & low != 0 { Ordering::Less } else { Ordering::Greater };
        }
    }
    Ordering::Equal
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Anf {
    num_vars: usize,
    terms: Vec<Monomial>,
}

impl Anf {
    pub fn zero(num_vars: usize) -> Self {
        Self { num_vars, terms: Vec::new() }
    }

    pub fn one(num_vars: usize) -> Self {
        Self { num_vars, terms: vec![BitVec::zeros(num_vars)] }
    }

    /// The single variable `x_i` (1-based).
    pub fn variable(num_vars: usize, i: usize) -> Result<Self> {
        check_index(i, num_vars)?;
        Ok(Self { num_vars, terms: vec![BitVec::unit(num_vars, i - 1)] })
    }

    /// Sums the given monomials over GF(2): equal monomials cancel in pairs.
    pub fn from_monomials(num_vars: usize, monomials: impl IntoIterator<Item = Monomial>) -> Self {
        let mut terms: Vec<Monomial> = monomials.into_iter().collect();
        debug_assert!(terms.iter().all(|t| t.len() == num_vars));
        terms.sort_by(monomial_cmp);
        let mut out: Vec<Monomial> = Vec::with_capacity(terms.len());
        for t in terms {
            if out.last() == Some(&t) {
                out.pop();
            } else {
                out.push(t);
            }
        }
        Self { num_vars, terms: out }
    }

    /// Builds a polynomial from 1-based index lists, e.g. `&[&[1, 2], &[3]]`.
    pub fn from_index_sets<I, T>(num_vars: usize, sets: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[usize]>,
    {
        let mut monomials = Vec::new();
        for set in sets {
            let mut m = BitVec::zeros(num_vars);
            for &i in set.as_ref() {
                check_index(i, num_vars)?;
                m.set(i - 1, true);
            }
            monomials.push(m);
        }
        Ok(Self::from_monomials(num_vars, monomials))
    }

    /// Wraps monomials that are already canonical (sorted, distinct).
    pub(crate) fn from_sorted_unchecked(num_vars: usize, terms: Vec<Monomial>) -> Self {
        debug_assert!(terms.windows(2).all(|w| monomial_cmp(&w[0], &w[1]) == Ordering::Less));
        Self { num_vars, terms }
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    #[inline]
    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of monomials.
    #[inline]
    pub fn sparsity(&self) -> usize {
        self.terms.len()
    }

    /// Largest monomial size; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.last().map_or(0, BitVec::weight)
    }

    /// Number of monomials of degree at least 3.
    pub fn crucial_count(&self) -> usize {
        self.terms.iter().filter(|t| t.weight() >= 3).count()
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    /// Constant coefficient (coefficient of the empty monomial).
    pub fn constant_term(&self) -> bool {
        self.terms.first().is_some_and(BitVec::is_zero)
    }

    pub fn contains(&self, m: &Monomial) -> bool {
        self.terms.binary_search_by(|t| monomial_cmp(t, m)).is_ok()
    }

    pub fn evaluate(&self, x: &BitVec) -> Result<bool> {
        if x.len() != self.num_vars {
            return Err(Error::DimensionMismatch { expected: self.num_vars, found: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &BitVec) -> bool {
        if self.num_vars <= 64 {
            let xv = x.low_word();
            let mut acc = false;
            for t in &self.terms {
                acc ^= t.low_word() & !xv == 0;
            }
            acc
        } else {
            self.terms.iter().fold(false, |acc, t| acc ^ t.is_subset_of(x))
        }
    }

    pub fn add(&self, other: &Anf) -> Result<Anf> {
        if self.num_vars != other.num_vars {
            return Err(Error::DimensionMismatch { expected: self.num_vars, found: other.num_vars });
        }
        Ok(Anf::from_monomials(self.num_vars, self.terms.iter().chain(other.terms.iter()).cloned()))
    }

    /// Sets `x_i` (1-based) to 0: every monomial containing it disappears.
    pub fn substitute_zero(&self, i: usize) -> Result<Anf> {
        check_index(i, self.num_vars)?;
        let terms = self.terms.iter().filter(|t| !t.get(i - 1)).cloned().collect();
        Ok(Anf::from_sorted_unchecked(self.num_vars, terms))
    }

    /// Variables (0-based) that occur in at least one monomial.
    pub fn support(&self) -> BitVec {
        let mut s = BitVec::zeros(self.num_vars);
        for t in &self.terms {
            for i in t.iter_ones() {
                s.set(i, true);
            }
        }
        s
    }

    /// Re-indexes onto the 0-based coordinates listed in `keep`, in that order.
    /// Fails if some monomial uses a variable outside `keep`.
    pub fn project(&self, keep: &[usize]) -> Result<Anf> {
        let mut kept = BitVec::zeros(self.num_vars);
        for &k in keep {
            if k >= self.num_vars {
                return Err(Error::IndexOutOfRange { index: k + 1, n: self.num_vars });
            }
            kept.set(k, true);
        }
        if let Some(bad) = self.terms.iter().find(|t| !t.is_subset_of(&kept)) {
            let var = bad.iter_ones().find(|&i| !kept.get(i)).unwrap_or(0);
            return Err(Error::Inconsistent(format!("monomial uses dropped variable x{}", var + 1)));
        }
        Ok(Anf::from_monomials(keep.len(), self.terms.iter().map(|t| t.gather(keep))))
    }

    /// ANF of `self ∘ a`, with the default blow-up ceiling.
    pub fn compose_affine(&self, a: &AffineMap) -> Result<Anf> {
        self.compose_affine_with_limit(a, DEFAULT_BLOWUP_LIMIT)
    }

    pub fn compose_affine_with_limit(&self, a: &AffineMap, limit: usize) -> Result<Anf> {
        if a.dim() != self.num_vars {
            return Err(Error::DimensionMismatch { expected: self.num_vars, found: a.dim() });
        }
        compose_linear_forms(self, a.matrix(), a.offset(), limit)
    }

    /// ANF of `z -> self(M z + b)` for an arbitrary `n x m` matrix `M`.
    pub fn compose_embedding(&self, matrix: &BitMatrix, offset: &BitVec, limit: usize) -> Result<Anf> {
        if matrix.num_rows() != self.num_vars || offset.len() != self.num_vars {
            return Err(Error::DimensionMismatch { expected: self.num_vars, found: matrix.num_rows() });
        }
        compose_linear_forms(self, matrix, offset, limit)
    }

    pub fn parse(text: &str, num_vars: usize) -> Result<Anf> {
        Parser::new(text, num_vars).parse()
    }

    pub fn to_truth_table(&self) -> Result<TruthTable> {
        self.to_truth_table_capped(DEFAULT_TRUTH_TABLE_CAP)
    }

    pub fn to_truth_table_capped(&self, cap: usize) -> Result<TruthTable> {
        let n = self.num_vars;
        check_cap(n, cap)?;
        let mut tt = TruthTable::zeros(n);
        for t in &self.terms {
            tt.flip(t.low_word() as usize);
        }
        moebius_in_place(&mut tt.bits, n);
        Ok(tt)
    }
}

fn check_index(i: usize, n: usize) -> Result<()> {
    if i == 0 || i > n {
        Err(Error::IndexOutOfRange { index: i, n })
    } else {
        Ok(())
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap || n >= usize::BITS as usize {
        Err(Error::TooLarge(format!("{n} variables exceeds the truth-table cap of {cap}")))
    } else {
        Ok(())
    }
}

/// Substitutes `x_i := row_i . z + offset_i` one variable at a time.
///
/// Working monomials live in a doubled index space: bits `0..n` are the
/// not-yet-substituted variables, bits `n..n+m` the new variables.
fn compose_linear_forms(f: &Anf, matrix: &BitMatrix, offset: &BitVec, limit: usize) -> Result<Anf> {
    let n = f.num_vars;
    let m = matrix.num_cols();
    let width = n + m;
    let mut set: HashSet<BitVec> = HashSet::with_capacity(f.terms.len() * 2);
    for t in &f.terms {
        let mut wide = BitVec::zeros(width);
        for i in t.iter_ones() {
            wide.set(i, true);
        }
        set.insert(wide);
    }
    let toggle = |set: &mut HashSet<BitVec>, t: BitVec| {
        if !set.remove(&t) {
            set.insert(t);
        }
    };
    for i in 0..n {
        let hit: Vec<BitVec> = set.iter().filter(|t| t.get(i)).cloned().collect();
        if hit.is_empty() {
            continue;
        }
        for t in &hit {
            set.remove(t);
        }
        let row = matrix.row(i);
        for mut t in hit {
            t.set(i, false);
            for j in row.iter_ones() {
                let mut u = t.clone();
                u.set(n + j, true);
                toggle(&mut set, u);
            }
            if offset.get(i) {
                toggle(&mut set, t);
            }
        }
        if set.len() > limit {
            return Err(Error::BlowupExceeded { limit });
        }
    }
    let shift: Vec<usize> = (n..width).collect();
    Ok(Anf::from_monomials(m, set.into_iter().map(|t| t.gather(&shift))))
}

impl fmt::Display for Anf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            if t.is_zero() {
                f.write_str("1")?;
                continue;
            }
            for (j, i) in t.iter_ones().enumerate() {
                if j > 0 {
                    f.write_str("*")?;
                }
                write!(f, "x{}", i + 1)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Anf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Anf(n={}, {})", self.num_vars, self)
    }
}

struct Parser<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    num_vars: usize,
    src_len: usize,
    _src: &'a str,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, num_vars: usize) -> Self {
        let chars = src.char_indices().filter(|(_, c)| !c.is_whitespace()).collect();
        Self { chars, pos: 0, num_vars, src_len: src.len(), _src: src }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.pos).map_or(self.src_len, |&(o, _)| o)
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { pos: self.offset(), msg: msg.into() })
    }

    fn parse(mut self) -> Result<Anf> {
        if self.chars.is_empty() {
            return self.error("empty polynomial");
        }
        let mut monomials = Vec::new();
        loop {
            monomials.push(self.term()?);
            match self.peek() {
                None => break,
                Some('+') => self.pos += 1,
                Some(c) => return self.error(format!("expected '+' or end of input, found {c:?}")),
            }
        }
        Ok(Anf::from_monomials(self.num_vars, monomials.into_iter().flatten()))
    }

    /// `None` stands for the zero term.
    fn term(&mut self) -> Result<Option<Monomial>> {
        match self.peek() {
            Some('0') => {
                self.pos += 1;
                Ok(None)
            }
            Some('1') => {
                self.pos += 1;
                Ok(Some(BitVec::zeros(self.num_vars)))
            }
            Some('x') => {
                let mut m = BitVec::zeros(self.num_vars);
                loop {
                    let i = self.factor()?;
                    m.set(i - 1, true);
                    if self.peek() == Some('*') {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                Ok(Some(m))
            }
            Some(c) => self.error(format!("expected a term, found {c:?}")),
            None => self.error("expected a term, found end of input"),
        }
    }

    fn factor(&mut self) -> Result<usize> {
        if self.peek() != Some('x') {
            return match self.peek() {
                Some(c) => self.error(format!("expected 'x', found {c:?}")),
                None => self.error("expected 'x', found end of input"),
            };
        }
        self.pos += 1;
        let start = self.offset();
        let mut value: usize = 0;
        let mut digits = 0;
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(c as usize - '0' as usize))
                .ok_or(Error::Syntax { pos: start, msg: "variable index overflows".into() })?;
            digits += 1;
            self.pos += 1;
        }
        if digits == 0 {
            return self.error("expected a variable index after 'x'");
        }
        check_index(value, self.num_vars)?;
        Ok(value)
    }
}

/// Function values on all of F2^n; entry `i` is the value at the point whose
/// coordinate `j` (0-based) is bit `j` of `i`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    num_vars: usize,
    bits: Vec<u64>,
}

impl TruthTable {
    pub fn zeros(num_vars: usize) -> Self {
        let len = 1usize << num_vars;
        Self { num_vars, bits: vec![0; len.div_ceil(64)] }
    }

    pub fn from_fn(num_vars: usize, mut f: impl FnMut(u64) -> bool) -> Self {
        let mut tt = Self::zeros(num_vars);
        for i in 0..tt.len() {
            if f(i as u64) {
                tt.flip(i);
            }
        }
        tt
    }

    pub fn from_bools(values: &[bool]) -> Result<Self> {
        let len = values.len();
        if !len.is_power_of_two() {
            return Err(Error::Format(format!("truth table length {len} is not a power of two")));
        }
        let n = len.trailing_zeros() as usize;
        let mut tt = Self::zeros(n);
        for (i, &b) in values.iter().enumerate() {
            if b {
                tt.flip(i);
            }
        }
        Ok(tt)
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    #[inline]
    pub fn len(&self) -> usize {
        1usize << self.num_vars
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len());
        (self.bits[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.bits[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn to_anf(&self) -> Result<Anf> {
        self.to_anf_capped(DEFAULT_TRUTH_TABLE_CAP)
    }

    pub fn to_anf_capped(&self, cap: usize) -> Result<Anf> {
        let n = self.num_vars;
        check_cap(n, cap)?;
        let mut coeffs = self.bits.clone();
        moebius_in_place(&mut coeffs, n);
        let mut terms = Vec::new();
        for (k, &w) in coeffs.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                terms.push(BitVec::from_u64(n, (k * 64 + b) as u64));
            }
        }
        Ok(Anf::from_monomials(n, terms))
    }

    /// `0`/`1` string, entry 0 first.
    pub fn to_bit_string(&self) -> String {
        (0..self.len()).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (pos, c) in text.char_indices() {
            match c {
                '0' => values.push(false),
                '1' => values.push(true),
                c if c.is_whitespace() => {}
                other => return Err(Error::Syntax { pos, msg: format!("expected '0' or '1', found {other:?}") }),
            }
        }
        Self::from_bools(&values)
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruthTable(n={}, {})", self.num_vars, self.to_bit_string())
    }
}

const LOW_HALF: [u64; 6] = [
    0x5555_5555_5555_5555,
    0x3333_3333_3333_3333,
    0x0F0F_0F0F_0F0F_0F0F,
    0x00FF_00FF_00FF_00FF,
    0x0000_FFFF_0000_FFFF,
    0x0000_0000_FFFF_FFFF,
];

/// Binary Möbius transform over packed words; an involution.
fn moebius_in_place(words: &mut [u64], n: usize) {
    for (j, mask) in LOW_HALF.iter().enumerate().take(n.min(6)) {
        let shift = 1u32 << j;
        for w in words.iter_mut() {
            *w ^= (*w & mask) << shift;
        }
    }
    for j in 6..n {
        let stride = 1usize << (j - 6);
        for block in words.chunks_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (h, l) in hi.iter_mut().zip(lo.iter()) {
                *h ^= *l;
            }
        }
    }
}

pub fn parse_anf(text: &str, num_vars: usize) -> Result<Anf> {
    Anf::parse(text, num_vars)
}

pub fn format_anf(f: &Anf) -> String {
    f.to_string()
}

pub fn evaluate(f: &Anf, x: &BitVec) -> Result<bool> {
    f.evaluate(x)
}

pub fn truth_table_to_anf(tt: &TruthTable) -> Result<Anf> {
    tt.to_anf()
}

pub fn anf_to_truth_table(f: &Anf) -> Result<TruthTable> {
    f.to_truth_table()
}

pub fn substitute_zero(f: &Anf, i: usize) -> Result<Anf> {
    f.substitute_zero(i)
}

pub fn compose_affine(f: &Anf, a: &AffineMap) -> Result<Anf> {
    f.compose_affine(a)
}

/// A function `f` given as `g` plus an optional affine bijection `A` with
/// `g = f ∘ A`, so that `f = g ∘ A⁻¹`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionInput {
    g: Anf,
    bijection: Option<AffineMap>,
    inverse: Option<AffineMap>,
}

impl FunctionInput {
    pub fn new(g: Anf, bijection: Option<AffineMap>) -> Result<Self> {
        if let Some(a) = &bijection {
            if a.dim() != g.num_vars() {
                return Err(Error::DimensionMismatch { expected: g.num_vars(), found: a.dim() });
            }
        }
        let inverse = bijection.as_ref().map(AffineMap::inverse);
        Ok(Self { g, bijection, inverse })
    }

    pub fn plain(g: Anf) -> Self {
        Self { g, bijection: None, inverse: None }
    }

    pub fn g(&self) -> &Anf {
        &self.g
    }

    pub fn bijection(&self) -> Option<&AffineMap> {
        self.bijection.as_ref()
    }

    pub fn num_vars(&self) -> usize {
        self.g.num_vars()
    }

    /// `f(p) = g(A⁻¹ p)`; no symbolic composition involved.
    pub fn evaluate_f(&self, p: &BitVec) -> Result<bool> {
        match &self.inverse {
            None => self.g.evaluate(p),
            Some(inv) => self.g.evaluate(&inv.apply(p)?),
        }
    }

    /// Explicit ANF of `f`; may blow up.
    pub fn f_anf(&self, limit: usize) -> Result<Anf> {
        match &self.inverse {
            None => Ok(self.g.clone()),
            Some(inv) => self.g.compose_affine_with_limit(inv, limit),
        }
    }

    pub fn to_container(&self, comment: Option<String>) -> FunctionContainer {
        FunctionContainer {
            n: self.g.num_vars(),
            anf: self.g.to_string(),
            bijection: self
                .bijection
                .as_ref()
                .map(|a| BijectionDoc { matrix: a.matrix().to_row_strings(), offset: a.offset().to_bit_string() }),
            comment,
        }
    }
}

/// JSON form of a [`FunctionInput`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionContainer {
    pub n: usize,
    pub anf: String,
    #[serde(default)]
    pub bijection: Option<BijectionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BijectionDoc {
    pub matrix: Vec<String>,
    pub offset: String,
}

impl BijectionDoc {
    pub fn to_affine_map(&self) -> Result<AffineMap> {
        let matrix = BitMatrix::from_row_strings(&self.matrix)?;
        let offset = BitVec::parse_bits(&self.offset)?;
        AffineMap::new(matrix, offset)
    }
}

impl FunctionContainer {
    pub fn into_input(self) -> Result<FunctionInput> {
        let g = Anf::parse(&self.anf, self.n)?;
        let bijection = self.bijection.as_ref().map(BijectionDoc::to_affine_map).transpose()?;
        if let Some(a) = &bijection {
            if a.dim() != self.n {
                return Err(Error::DimensionMismatch { expected: self.n, found: a.dim() });
            }
        }
        FunctionInput::new(g, bijection)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}
