//! Almost-commuting differential operators and Gelfand-Dickey hierarchies,
//! computed exactly in the ring of differential operators over
//! differential polynomials with rational coefficients.
//!
//! The main entry points are [`wilson::almost_commuting`] and
//! [`wilson::almost_commuting_basis`]. The [`pdo`] module is an
//! independent pseudo-differential check of the same operators.

pub mod diffpoly;
pub mod error;
pub mod hierarchy;
pub mod integrate;
pub mod oreops;
pub mod par;
pub mod pdo;
pub mod wilson;

pub use diffpoly::{Coeff, DiffPolynomial, Family, Homogeneity, Monomial, VarId};
pub use error::{Error, Result};
pub use oreops::DiffOperator;
pub use pdo::TruncatedPdo;
pub use wilson::{AlmostCommutingResult, BracketSystem, TriangularSolution};
