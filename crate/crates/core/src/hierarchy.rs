//! Gelfand-Dickey flows `u_(i,t) = H_(m,n-i) + Σ_j c_(m,j) H_(j,n-i)`,
//! their stationary versions, and the KdV recursion operator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diffpoly::{rat, Coeff, DiffPolynomial};
use crate::error::{Error, Result};
use crate::integrate::antiderivative;
use crate::oreops::DiffOperator;
use crate::wilson::{almost_commuting_basis, AlmostCommutingResult};

/// One equation `u_(i,t) = rhs` of the level-`m` flow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowEquation {
    pub variable_index: u32,
    pub level: usize,
    pub rhs: DiffPolynomial,
}

impl FlowEquation {
    /// `u3_t`, say.
    pub fn lhs_label(&self) -> String {
        format!("u{}_t", self.variable_index)
    }
}

impl fmt::Display for FlowEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs_label(), self.rhs)
    }
}

/// The `n - 1` flow equations at level `m`, for `i = 2..n`.
pub fn gd_equations(n: usize, m: usize, with_constants: bool) -> Result<Vec<FlowEquation>> {
    check_level(n, m)?;
    let basis = almost_commuting_basis(n, m)?;
    gd_equations_from_basis(&basis, m, with_constants)
}

fn check_level(n: usize, m: usize) -> Result<()> {
    if n < 2 || m < 2 {
        return Err(Error::InvalidArgument(format!("flows need n >= 2 and m >= 2, got n = {n}, m = {m}")));
    }
    Ok(())
}

/// Same as [`gd_equations`], reusing `basis[j - 1] = (P_j, H_j)` for
/// `j = 1..m`.
pub fn gd_equations_from_basis(basis: &[AlmostCommutingResult], m: usize, with_constants: bool) -> Result<Vec<FlowEquation>> {
    if basis.len() < m || m < 2 {
        return Err(Error::InvalidArgument(format!("need the basis up to order {m}, have {}", basis.len())));
    }
    let n = basis[0].n;
    check_level(n, m)?;
    let mut out = Vec::with_capacity(n - 1);
    for i in 2..=n {
        let mut rhs = basis[m - 1].h[n - i].clone();
        if with_constants {
            for j in 1..m {
                let c = DiffPolynomial::c(m as u32, j as u32);
                rhs += &(&c * &basis[j - 1].h[n - i]);
            }
        }
        out.push(FlowEquation {
            variable_index: i as u32,
            level: m,
            rhs,
        });
    }
    Ok(out)
}

/// Right-hand sides of the level-`m` flow, to be read as `= 0`.
pub fn stationary_equations(n: usize, m: usize, with_constants: bool) -> Result<Vec<DiffPolynomial>> {
    Ok(gd_equations(n, m, with_constants)?.into_iter().map(|e| e.rhs).collect())
}

/// `local + cofactor · ∂⁻¹`, applied only to total derivatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecursionOperator {
    pub local_part: DiffOperator,
    pub nonlocal_cofactor: DiffPolynomial,
}

impl RecursionOperator {
    /// `-1/4 ∂^2 + u2 + 1/2 u2' ∂⁻¹`.
    pub fn kdv() -> Self {
        RecursionOperator {
            local_part: DiffOperator::from_coeffs(vec![DiffPolynomial::u(2, 0), DiffPolynomial::zero(), DiffPolynomial::constant(rat(-1, 4))]),
            nonlocal_cofactor: DiffPolynomial::u(2, 1).scale(&rat(1, 2)),
        }
    }

    pub fn apply(&self, f: &DiffPolynomial) -> Result<DiffPolynomial> {
        let integral = antiderivative(f)?;
        Ok(&self.local_part.apply(f) + &(&self.nonlocal_cofactor * &integral))
    }
}

/// `kdv_0 = u2'`, `kdv_k = R(kdv_(k-1))` for `k = 1..=terms`.
pub fn kdv_sequence(terms: usize) -> Result<Vec<DiffPolynomial>> {
    let r = RecursionOperator::kdv();
    let mut out = vec![DiffPolynomial::u(2, 1)];
    for step in 1..=terms {
        let next = match r.apply(&out[step - 1]) {
            Ok(p) => p,
            Err(Error::NotTotalDerivative { obstruction }) => return Err(Error::RecursionBreak { step, obstruction }),
            Err(e) => return Err(e),
        };
        out.push(next);
    }
    Ok(out)
}

/// `λ` with `a = λ b`, if there is one. Both zero gives `Some(1)`.
pub fn proportionality(a: &DiffPolynomial, b: &DiffPolynomial) -> Option<Coeff> {
    match (a.is_zero(), b.is_zero()) {
        (true, true) => return Some(rat(1, 1)),
        (true, false) | (false, true) => return None,
        _ => {}
    }
    if a.len() != b.len() {
        return None;
    }
    let (mb, cb) = b.terms().next()?;
    let lambda = a.coefficient(mb) / cb;
    (b.scale(&lambda) == *a).then_some(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> DiffPolynomial {
        s.parse().unwrap()
    }

    #[test]
    fn boussinesq_level_two() {
        let eqs = gd_equations(3, 2, false).unwrap();
        assert_eq!(eqs.len(), 2);
        assert_eq!(eqs[0].lhs_label(), "u2_t");
        // u2 multiplies ∂^1 in L, so its flow is the ∂^1 coefficient of [P2, L]
        assert_eq!(eqs[0].rhs, p("-u2'' + 2*u3'"));
        assert_eq!(eqs[1].rhs, p("u3'' - 2/3*u2^(3) - 2/3*u2*u2'"));

        let eqs = gd_equations(3, 2, true).unwrap();
        assert_eq!(eqs[0].rhs, p("-u2'' + 2*u3' + c2_1*u2'"));
        assert_eq!(eqs[1].rhs, p("u3'' - 2/3*u2^(3) - 2/3*u2*u2' + c2_1*u3'"));
    }

    #[test]
    fn stationary_levels() {
        assert!(stationary_equations(3, 3, false).unwrap().iter().all(DiffPolynomial::is_zero));
        let st = stationary_equations(3, 2, false).unwrap();
        assert_eq!(st, vec![p("-u2'' + 2*u3'"), p("u3'' - 2/3*u2^(3) - 2/3*u2*u2'")]);
        assert!(gd_equations(3, 1, false).is_err());
    }

    #[test]
    fn kdv_start() {
        let k = kdv_sequence(2).unwrap();
        assert_eq!(k[0], p("u2'"));
        assert_eq!(k[1], p("-1/4*u2^(3) + 3/2*u2*u2'"));
        assert!(antiderivative(&k[2]).is_ok());
    }

    #[test]
    fn recursion_needs_total_derivatives() {
        assert!(RecursionOperator::kdv().apply(&p("u2'^2")).is_err());
    }

    #[test]
    fn proportional_polynomials() {
        assert_eq!(proportionality(&p("2*u2' + 4*u3"), &p("u2' + 2*u3")), Some(rat(2, 1)));
        assert_eq!(proportionality(&p("2*u2' + 4*u3"), &p("u2' + u3")), None);
        assert_eq!(proportionality(&p("u2"), &DiffPolynomial::zero()), None);
    }
}
