use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::f2::{AffineMap, BitMatrix, BitVec};

/// An affine subspace `offset + span(basis)` of F2^n with independent basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flat {
    offset: BitVec,
    basis: Vec<BitVec>,
}

impl Flat {
    pub fn new(offset: BitVec, basis: Vec<BitVec>) -> Result<Self> {
        let n = offset.len();
        if let Some(bad) = basis.iter().find(|b| b.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.len() });
        }
        if BitMatrix::from_rows(basis.clone(), n)?.rank() != basis.len() {
            return Err(Error::Inconsistent("flat basis vectors are linearly dependent".into()));
        }
        Ok(Self { offset, basis })
    }

    pub fn point(p: BitVec) -> Self {
        Self { offset: p, basis: Vec::new() }
    }

    pub fn whole_space(n: usize) -> Self {
        Self { offset: BitVec::zeros(n), basis: (0..n).map(|i| BitVec::unit(n, i)).collect() }
    }

    pub fn ambient(&self) -> usize {
        self.offset.len()
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn offset(&self) -> &BitVec {
        &self.offset
    }

    pub fn basis(&self) -> &[BitVec] {
        &self.basis
    }

    /// Point with coefficient vector `coeffs` (bit `j` selects basis vector `j`).
    pub fn point_at(&self, coeffs: u64) -> BitVec {
        let mut p = self.offset.clone();
        let mut c = coeffs;
        while c != 0 {
            let j = c.trailing_zeros() as usize;
            c &= c - 1;
            p.xor_assign(&self.basis[j]);
        }
        p
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> BitVec {
        let mut p = self.offset.clone();
        for b in &self.basis {
            if rng.gen::<bool>() {
                p.xor_assign(b);
            }
        }
        p
    }

    /// All `2^k` points in Gray-code order, starting at the offset.
    /// Only meaningful for `k < 64`.
    pub fn points(&self) -> impl Iterator<Item = BitVec> + '_ {
        let k = self.dimension();
        assert!(k < 64, "flat of dimension {k} is too large to enumerate");
        let mut current = self.offset.clone();
        let total = 1u64 << k;
        (0..total).map(move |i| {
            if i > 0 {
                current.xor_assign(&self.basis[i.trailing_zeros() as usize]);
            }
            current.clone()
        })
    }

    pub fn contains(&self, p: &BitVec) -> bool {
        if p.len() != self.ambient() {
            return false;
        }
        let d = p.xor(&self.offset);
        let mut rows = self.basis.clone();
        let r = BitMatrix::from_rows(rows.clone(), self.ambient()).expect("lengths checked").rank();
        rows.push(d);
        BitMatrix::from_rows(rows, self.ambient()).expect("lengths checked").rank() == r
    }

    /// Image under an affine bijection.
    pub fn map_through(&self, a: &AffineMap) -> Result<Flat> {
        let offset = a.apply(&self.offset)?;
        let basis = self.basis.iter().map(|b| a.matrix().mul_vec(b)).collect::<Result<Vec<_>>>()?;
        Ok(Flat { offset, basis })
    }

    /// Text form: offset on the first line, then one basis vector per line.
    pub fn to_text(&self) -> String {
        let mut s = self.offset.to_bit_string();
        for b in &self.basis {
            s.push('\n');
            s.push_str(&b.to_bit_string());
        }
        s.push('\n');
        s
    }

    pub fn parse_text(text: &str) -> Result<Flat> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let offset = BitVec::parse_bits(lines.next().ok_or_else(|| Error::Format("empty flat".into()))?)?;
        let basis = lines.map(BitVec::parse_bits).collect::<Result<Vec<_>>>()?;
        Flat::new(offset, basis)
    }

    pub fn to_doc(&self) -> FlatDoc {
        FlatDoc { offset: self.offset.to_bit_string(), basis: self.basis.iter().map(BitVec::to_bit_string).collect() }
    }
}

impl fmt::Display for Flat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Offset and basis as bit strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatDoc {
    pub offset: String,
    pub basis: Vec<String>,
}

impl FlatDoc {
    pub fn to_flat(&self) -> Result<Flat> {
        let offset = BitVec::parse_bits(&self.offset)?;
        let basis = self.basis.iter().map(|b| BitVec::parse_bits(b)).collect::<Result<Vec<_>>>()?;
        Flat::new(offset, basis)
    }
}

/// Injective affine map `z -> Mz + b` from F2^m into F2^n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineEmbedding {
    matrix: BitMatrix,
    offset: BitVec,
}

impl AffineEmbedding {
    pub fn new(matrix: BitMatrix, offset: BitVec) -> Result<Self> {
        if offset.len() != matrix.num_rows() {
            return Err(Error::DimensionMismatch { expected: matrix.num_rows(), found: offset.len() });
        }
        if matrix.rank() != matrix.num_cols() {
            return Err(Error::Inconsistent("embedding matrix lacks full column rank".into()));
        }
        Ok(Self { matrix, offset })
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: BitMatrix::identity(n), offset: BitVec::zeros(n) }
    }

    pub fn domain_dim(&self) -> usize {
        self.matrix.num_cols()
    }

    pub fn codomain_dim(&self) -> usize {
        self.matrix.num_rows()
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    pub fn offset(&self) -> &BitVec {
        &self.offset
    }

    pub fn apply(&self, z: &BitVec) -> Result<BitVec> {
        let mut x = self.matrix.mul_vec(z)?;
        x.xor_assign(&self.offset);
        Ok(x)
    }

    /// Forces domain coordinate `dead_var` (1-based) to 0 and drops it.
    pub fn kill(&self, dead_var: usize) -> Result<AffineEmbedding> {
        let m = self.domain_dim();
        if dead_var == 0 || dead_var > m {
            return Err(Error::IndexOutOfRange { index: dead_var, n: m });
        }
        let keep: Vec<usize> = (0..m).filter(|&j| j != dead_var - 1).collect();
        let rows = self.matrix.rows().iter().map(|r| r.gather(&keep)).collect();
        Ok(Self { matrix: BitMatrix::from_rows(rows, m - 1)?, offset: self.offset.clone() })
    }

    /// `self ∘ inner` for an affine bijection of the domain.
    pub fn precompose(&self, inner: &AffineMap) -> Result<AffineEmbedding> {
        if inner.dim() != self.domain_dim() {
            return Err(Error::DimensionMismatch { expected: self.domain_dim(), found: inner.dim() });
        }
        let matrix = self.matrix.mul(inner.matrix())?;
        let offset = self.apply(inner.offset())?;
        Ok(Self { matrix, offset })
    }

    /// `outer ∘ self` for an affine bijection of the codomain.
    pub fn then(&self, outer: &AffineMap) -> Result<AffineEmbedding> {
        if outer.dim() != self.codomain_dim() {
            return Err(Error::DimensionMismatch { expected: self.codomain_dim(), found: outer.dim() });
        }
        let matrix = outer.matrix().mul(&self.matrix)?;
        let offset = outer.apply(&self.offset)?;
        Ok(Self { matrix, offset })
    }

    /// Image of `{z : z_j = v for (j, v) in fixed}`; `j` is 1-based.
    pub fn flat_of(&self, fixed: &[(usize, bool)]) -> Result<Flat> {
        let m = self.domain_dim();
        let mut assigned: Vec<Option<bool>> = vec![None; m];
        for &(j, v) in fixed {
            if j == 0 || j > m {
                return Err(Error::IndexOutOfRange { index: j, n: m });
            }
            match assigned[j - 1] {
                Some(prev) if prev != v => {
                    return Err(Error::Inconsistent(format!("coordinate {j} fixed to both 0 and 1")))
                }
                _ => assigned[j - 1] = Some(v),
            }
        }
        let mut offset = self.offset.clone();
        let mut basis = Vec::new();
        for (j, a) in assigned.iter().enumerate() {
            match a {
                Some(true) => offset.xor_assign(&self.matrix.column(j)),
                Some(false) => {}
                None => basis.push(self.matrix.column(j)),
            }
        }
        Ok(Flat { offset, basis })
    }
}

pub fn embed_zero_restriction(e: &AffineEmbedding, dead_var: usize) -> Result<AffineEmbedding> {
    e.kill(dead_var)
}

pub fn flat_of_embedding(e: &AffineEmbedding, fixed: &[(usize, bool)]) -> Result<Flat> {
    e.flat_of(fixed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> BitVec {
        s.parse().unwrap()
    }

    #[test]
    fn kill_examples() {
        let e = AffineEmbedding::identity(3).kill(2).unwrap();
        assert_eq!(e.domain_dim(), 2);
        assert_eq!(e.apply(&v("11")).unwrap(), v("101"));
        assert_eq!(e.apply(&v("10")).unwrap(), v("100"));
        let mut all = AffineEmbedding::identity(3);
        for _ in 0..3 {
            all = all.kill(1).unwrap();
        }
        assert_eq!(all.domain_dim(), 0);
        assert_eq!(all.apply(&BitVec::zeros(0)).unwrap(), v("000"));
        assert!(matches!(e.kill(3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn successive_kills_match_joint_kill() {
        // killing x2 then (new) x3 equals keeping columns {1, 3} of the identity on n=4
        let e = AffineEmbedding::identity(4).kill(2).unwrap().kill(3).unwrap();
        let joint = BitMatrix::from_rows(vec![v("10"), v("00"), v("01"), v("00")], 2).unwrap();
        assert_eq!(e.matrix(), &joint);
    }

    #[test]
    fn flat_of_examples() {
        let e = AffineEmbedding::identity(2);
        let f = e.flat_of(&[(1, false)]).unwrap();
        assert_eq!(f.offset(), &v("00"));
        assert_eq!(f.basis(), &[v("01")]);
        assert_eq!(e.flat_of(&[]).unwrap(), Flat::whole_space(2));
        let p = e.flat_of(&[(1, true), (2, false)]).unwrap();
        assert_eq!(p, Flat::point(v("10")));
        assert!(matches!(e.flat_of(&[(1, true), (1, false)]), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn flat_text_round_trip() {
        let f = Flat::new(v("101"), vec![v("110"), v("011")]).unwrap();
        assert_eq!(Flat::parse_text(&f.to_text()).unwrap(), f);
        assert_eq!(f.to_doc().to_flat().unwrap(), f);
        assert!(matches!(Flat::new(v("00"), vec![v("11"), v("11")]), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn points_enumerate_the_flat() {
        let f = Flat::new(v("1000"), vec![v("0110"), v("0011")]).unwrap();
        let pts: std::collections::BTreeSet<String> = f.points().map(|p| p.to_bit_string()).collect();
        let expected: std::collections::BTreeSet<String> =
            ["1000", "1110", "1011", "1101"].iter().map(|s| s.to_string()).collect();
        assert_eq!(pts, expected);
        assert!(f.contains(&v("1101")));
        assert!(!f.contains(&v("0000")));
    }
}
