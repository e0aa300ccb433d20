//! Analysis of Boolean functions in algebraic normal form.
//!
//! The central procedure finds an affine flat on which a function of low
//! algebraic thickness is constant: greedy 0-restrictions remove every
//! monomial of degree three or more, the residual quadratic is brought to
//! Dickson normal form, and half of its paired coordinates are fixed.

pub mod anf;
pub mod error;
pub mod experiments;
pub mod f2;
pub mod generators;
pub mod pipeline;
pub mod quadratic;
pub mod restriction;

pub use anf::{Anf, FunctionContainer, FunctionInput, TruthTable};
pub use error::{Error, Result};
pub use f2::{AffineMap, BitMatrix, BitVec};
