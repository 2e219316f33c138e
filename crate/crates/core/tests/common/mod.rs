//! Shared helpers and proptest strategies for the integration tests.
#![allow(dead_code)]

use gd_core::diffpoly::homogeneous_monomials;
use gd_core::{Coeff, DiffOperator, DiffPolynomial, Monomial, VarId};
use num::BigInt;
use proptest::prelude::*;

pub fn p(s: &str) -> DiffPolynomial {
    s.parse().unwrap_or_else(|e| panic!("{s}: {e}"))
}

pub fn op(coeffs: &[&str]) -> DiffOperator {
    DiffOperator::from_coeffs(coeffs.iter().map(|s| p(s)).collect())
}

pub fn rat(n: i64, d: i64) -> Coeff {
    Coeff::new(BigInt::from(n), BigInt::from(d))
}

pub fn arb_coeff() -> impl Strategy<Value = Coeff> {
    (prop_oneof![-12i64..=-1, 1i64..=12], 1i64..=5).prop_map(|(n, d)| rat(n, d))
}

/// `u_index^(order)` with index in `2..=max_index`.
pub fn arb_u(max_index: u32, max_order: u32) -> impl Strategy<Value = VarId> {
    (2..=max_index, 0..=max_order).prop_map(|(i, k)| VarId::u(i, k))
}

pub fn arb_monomial(max_index: u32, max_order: u32) -> impl Strategy<Value = Monomial> {
    prop::collection::vec((arb_u(max_index, max_order), 1u32..=2), 1..=3).prop_map(Monomial::from_factors)
}

/// Polynomials in `u2..u4` without a constant term.
pub fn arb_poly(max_terms: usize) -> impl Strategy<Value = DiffPolynomial> {
    prop::collection::vec((arb_monomial(4, 3), arb_coeff()), 0..=max_terms).prop_map(DiffPolynomial::from_terms)
}

/// Weight-`w` polynomials in the given `u` indices.
pub fn arb_homogeneous(w: u32, vars: &[u32], max_terms: usize) -> BoxedStrategy<DiffPolynomial> {
    let monos = homogeneous_monomials(w, vars);
    if monos.is_empty() {
        return Just(DiffPolynomial::zero()).boxed();
    }
    let k = max_terms.min(monos.len());
    (prop::sample::subsequence(monos, 0..=k), prop::collection::vec(arb_coeff(), k))
        .prop_map(|(ms, cs)| DiffPolynomial::from_terms(ms.into_iter().zip(cs)))
        .boxed()
}

/// Monic operators of the given order with zero `∂^(order-1)` term and
/// the coefficient of `∂^i` homogeneous of weight `order - i`.
pub fn arb_normal_form(order: usize) -> BoxedStrategy<DiffOperator> {
    let parts: Vec<BoxedStrategy<DiffPolynomial>> = (0..order.saturating_sub(1))
        .map(|i| arb_homogeneous((order - i) as u32, &[2, 3, 4], 3))
        .collect();
    parts
        .prop_map(move |mut coeffs| {
            coeffs.push(DiffPolynomial::zero());
            coeffs.push(DiffPolynomial::one());
            if order == 1 {
                coeffs = vec![DiffPolynomial::zero(), DiffPolynomial::one()];
            }
            DiffOperator::from_coeffs(coeffs)
        })
        .boxed()
}

/// Arbitrary operators of order at most 3 with small coefficients.
pub fn arb_operator() -> impl Strategy<Value = DiffOperator> {
    prop::collection::vec(arb_poly(3), 1..=4).prop_map(DiffOperator::from_coeffs)
}
