use thiserror::Error;

use crate::diffpoly::DiffPolynomial;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("incomplete solution: no value assigned to y{index}")]
    IncompleteSolution { index: u32 },

    #[error("the zero operator has no leading coefficient")]
    ZeroOperator,

    #[error("insufficient input depth: power {requested} requested, exact only down to {available}")]
    InsufficientDepth { requested: i64, available: i64 },

    #[error("not a total derivative, obstruction: {obstruction}")]
    NotTotalDerivative { obstruction: DiffPolynomial },

    #[error("polynomial is not weight-homogeneous")]
    NotHomogeneous,

    #[error("integrators disagree on {input}: by parts {by_parts}, by ansatz {by_ansatz}")]
    IntegratorMismatch {
        input: DiffPolynomial,
        by_parts: DiffPolynomial,
        by_ansatz: DiffPolynomial,
    },

    #[error("(n, m) = ({n}, {m}): equation for y{index} is not triangular: {equation}")]
    NotTriangular {
        n: usize,
        m: usize,
        index: u32,
        equation: DiffPolynomial,
    },

    #[error("(n, m) = ({n}, {m}): e_{{m,{index}}} is not a total derivative, obstruction: {obstruction}")]
    Integration {
        n: usize,
        m: usize,
        index: u32,
        obstruction: DiffPolynomial,
    },

    #[error("recursion operator undefined at step {step}: obstruction {obstruction}")]
    RecursionBreak {
        step: usize,
        obstruction: DiffPolynomial,
    },

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("malformed data: {0}")]
    Malformed(String),
}
