//! Structure analysis, transversality testing and fiber sampling for diagonal
//! mixed polynomials ψ(z) = Σ λ_j z_j^{a_j} z̄_j^{b_j} and general real
//! polynomial maps ℝⁿ→ℝᵖ.

pub(crate) mod linalg;
pub mod fiber;
pub mod mixed_poly;
pub mod parse;
pub mod quasi;
pub mod rational;
pub mod real_map;
pub mod structure;
pub mod transversality;

pub use mixed_poly::{
    complex_from_real, eval_mixed, real_from_complex, real_jacobian, to_real_map, wirtinger,
    DiagonalMixedPolynomial, MixedTerm, PolyError,
};
pub use parse::{parse_mixed, parse_real_map, ParseError, ParseErrorKind};
pub use rational::{ComplexRational, Rational};
pub use real_map::{RealPolynomial, RealPolynomialMap};
