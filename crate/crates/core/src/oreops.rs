//! Ordinary differential operators `a_k ∂^k + ... + a_0` with
//! differential-polynomial coefficients, multiplied with the Ore rule
//! `∂ r = r ∂ + r'`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{BigInt, One};

use crate::diffpoly::{Coeff, DiffPolynomial, Homogeneity, LatexDisplay};
use crate::error::{Error, Result};
use crate::par;

static ZERO: DiffPolynomial = DiffPolynomial::zero();

/// Binomial coefficient for integer (possibly negative) top.
pub(crate) fn binomial(top: i64, k: u32) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k as i64 {
        num *= top - i;
        den *= i + 1;
    }
    num / den
}

/// Element of `R[∂]`; `coeffs[i]` multiplies `∂^i`. The top coefficient
/// is never zero, so the zero operator has no coefficients at all.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct DiffOperator {
    coeffs: Vec<DiffPolynomial>,
}

impl DiffOperator {
    pub fn zero() -> Self {
        DiffOperator { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_coeffs(vec![DiffPolynomial::one()])
    }

    /// `∂^k`.
    pub fn d_pow(k: usize) -> Self {
        let mut coeffs = vec![DiffPolynomial::zero(); k + 1];
        coeffs[k] = DiffPolynomial::one();
        DiffOperator { coeffs }
    }

    /// The multiplication operator by `f`.
    pub fn scalar(f: DiffPolynomial) -> Self {
        Self::from_coeffs(vec![f])
    }

    pub fn from_coeffs(mut coeffs: Vec<DiffPolynomial>) -> Self {
        while coeffs.last().is_some_and(DiffPolynomial::is_zero) {
            coeffs.pop();
        }
        DiffOperator { coeffs }
    }

    pub fn coefficients(&self) -> &[DiffPolynomial] {
        &self.coeffs
    }

    pub fn into_coefficients(self) -> Vec<DiffPolynomial> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` stands for the order `-∞` of the zero operator.
    pub fn order(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading_coefficient(&self) -> Result<&DiffPolynomial> {
        self.coeffs.last().ok_or(Error::ZeroOperator)
    }

    /// Coefficient of `∂^k`, zero past the order.
    pub fn coefficient_at(&self, k: usize) -> &DiffPolynomial {
        self.coeffs.get(k).unwrap_or(&ZERO)
    }

    /// Monic with vanishing `∂^(order-1)` coefficient.
    pub fn is_normal_form(&self) -> bool {
        match self.order() {
            None => false,
            Some(n) => self.coeffs[n] == DiffPolynomial::one() && (n == 0 || self.coeffs[n - 1].is_zero()),
        }
    }

    /// Total number of terms over all coefficients.
    pub fn monomial_count(&self) -> usize {
        self.coeffs.iter().map(DiffPolynomial::len).sum()
    }

    /// Weight of the operator with `w(∂) = 1`: the coefficient of `∂^i` must
    /// have weight `r - i` for a common `r`.
    pub fn weight_of(&self) -> Homogeneity {
        let mut found: Option<u32> = None;
        for (i, c) in self.coeffs.iter().enumerate() {
            match c.weight_of() {
                Homogeneity::Zero => {}
                Homogeneity::Mixed => return Homogeneity::Mixed,
                Homogeneity::Weight(w) => {
                    let r = w + i as u32;
                    match found {
                        None => found = Some(r),
                        Some(prev) if prev != r => return Homogeneity::Mixed,
                        Some(_) => {}
                    }
                }
            }
        }
        found.map_or(Homogeneity::Zero, Homogeneity::Weight)
    }

    pub fn scale(&self, c: &Coeff) -> DiffOperator {
        Self::from_coeffs(self.coeffs.iter().map(|p| p.scale(c)).collect())
    }

    pub fn map_coefficients<F>(&self, f: F) -> Result<DiffOperator>
    where
        F: Fn(&DiffPolynomial) -> Result<DiffPolynomial> + Sync + Send,
    {
        let coeffs: Result<Vec<_>> = par::map_slice(&self.coeffs, f).into_iter().collect();
        Ok(Self::from_coeffs(coeffs?))
    }

    /// Right multiplication by `∂^k`.
    pub fn shift(&self, k: usize) -> DiffOperator {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![DiffPolynomial::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        DiffOperator { coeffs }
    }

    /// Composition `self ∘ other`.
    ///
    /// Uses `∂^i b = Σ_k C(i,k) b^(k) ∂^(i-k)`; every output power is an
    /// independent sum and is computed in parallel.
    pub fn compose(&self, other: &DiffOperator) -> DiffOperator {
        let (Some(na), Some(nb)) = (self.order(), other.order()) else {
            return Self::zero();
        };
        // derivs[j][k] = k-th derivative of b_j
        let derivs: Vec<Vec<DiffPolynomial>> = par::map_slice(&other.coeffs, |b| {
            let mut chain = Vec::with_capacity(na + 1);
            chain.push(b.clone());
            for k in 1..=na {
                let next = if b.is_zero() { DiffPolynomial::zero() } else { chain[k - 1].derive() };
                chain.push(next);
            }
            chain
        });
        let binoms: Vec<Vec<Coeff>> = (0..=na)
            .map(|i| (0..=i).map(|k| Coeff::from_integer(binomial(i as i64, k as u32))).collect())
            .collect();
        let coeffs = par::map_range(na + nb + 1, |p| {
            let mut out = DiffPolynomial::zero();
            for (i, a) in self.coeffs.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                // power p = i - k + j with 0 <= k <= i
                for k in 0..=i {
                    let j = p as i64 - i as i64 + k as i64;
                    if j < 0 || j as usize > nb {
                        continue;
                    }
                    let b = &derivs[j as usize][k];
                    if b.is_zero() {
                        continue;
                    }
                    let prod = a * b;
                    out += &prod.scale(&binoms[i][k]);
                }
            }
            out
        });
        Self::from_coeffs(coeffs)
    }

    /// `[self, other] = self∘other - other∘self`.
    pub fn commutator(&self, other: &DiffOperator) -> DiffOperator {
        &self.compose(other) - &other.compose(self)
    }

    /// Applies the operator to a function: `Σ a_i f^(i)`.
    pub fn apply(&self, f: &DiffPolynomial) -> DiffPolynomial {
        let mut out = DiffPolynomial::zero();
        let mut d = f.clone();
        for (i, a) in self.coeffs.iter().enumerate() {
            if i > 0 {
                d = d.derive();
            }
            if !a.is_zero() {
                out += &(a * &d);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> DiffOperator {
        let mut out = Self::one();
        for _ in 0..e {
            out = out.compose(self);
        }
        out
    }

    /// Text rendering, highest power first: `D^2 + (2/3*u2)`.
    pub fn to_text(&self) -> String {
        self.render(|p| p.to_string(), "D", |k| format!("D^{k}"), "*")
    }

    /// LaTeX rendering, highest power first.
    pub fn to_latex(&self) -> String {
        self.render(
            |p| LatexDisplay(p).to_string(),
            "\\partial",
            |k| format!("\\partial^{{{k}}}"),
            " ",
        )
    }

    fn render<P, K>(&self, poly: P, d1: &str, dk: K, join: &str) -> String
    where
        P: Fn(&DiffPolynomial) -> String,
        K: Fn(usize) -> String,
    {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let dpart = match k {
                0 => String::new(),
                1 => d1.to_string(),
                _ => dk(k),
            };
            let one = *c == DiffPolynomial::one();
            let s = match (k, one) {
                (0, _) => {
                    if c.len() == 1 {
                        poly(c)
                    } else {
                        format!("({})", poly(c))
                    }
                }
                (_, true) => dpart,
                _ => format!("({}){join}{dpart}", poly(c)),
            };
            parts.push(s);
        }
        parts.join(" + ")
    }
}

impl fmt::Debug for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Display for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl Add for &DiffOperator {
    type Output = DiffOperator;

    fn add(self, rhs: &DiffOperator) -> DiffOperator {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        DiffOperator::from_coeffs((0..n).map(|k| self.coefficient_at(k) + rhs.coefficient_at(k)).collect())
    }
}

impl Sub for &DiffOperator {
    type Output = DiffOperator;

    fn sub(self, rhs: &DiffOperator) -> DiffOperator {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        DiffOperator::from_coeffs((0..n).map(|k| self.coefficient_at(k) - rhs.coefficient_at(k)).collect())
    }
}

impl Neg for &DiffOperator {
    type Output = DiffOperator;

    fn neg(self) -> DiffOperator {
        DiffOperator::from_coeffs(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &DiffOperator {
    type Output = DiffOperator;

    fn mul(self, rhs: &DiffOperator) -> DiffOperator {
        self.compose(rhs)
    }
}

impl serde::Serialize for DiffOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        struct Repr<'a> {
            order: Option<usize>,
            coefficients: &'a [DiffPolynomial],
        }
        Repr {
            order: self.order(),
            coefficients: &self.coeffs,
        }
        .serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for DiffOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(serde::Deserialize)]
        struct Repr {
            order: Option<usize>,
            coefficients: Vec<DiffPolynomial>,
        }
        let r = Repr::deserialize(d)?;
        let op = DiffOperator::from_coeffs(r.coefficients);
        if op.order() != r.order {
            return Err(D::Error::custom(format!(
                "declared order {:?} does not match coefficients (order {:?})",
                r.order,
                op.order()
            )));
        }
        Ok(op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> DiffPolynomial {
        s.parse().unwrap()
    }

    fn op(cs: &[&str]) -> DiffOperator {
        DiffOperator::from_coeffs(cs.iter().map(|s| p(s)).collect())
    }

    #[test]
    fn ore_rule_examples() {
        let d = DiffOperator::d_pow(1);
        let u2 = DiffOperator::scalar(p("u2"));
        assert_eq!(d.compose(&u2), op(&["u2'", "u2"]));
        assert_eq!(DiffOperator::d_pow(2).compose(&u2), op(&["u2''", "2*u2'", "u2"]));
        assert_eq!(d.compose(&d), DiffOperator::d_pow(2));
    }

    #[test]
    fn commutator_examples() {
        let l3 = op(&["u3", "u2", "0", "1"]);
        let d = DiffOperator::d_pow(1);
        assert_eq!(l3.commutator(&d), op(&["-u3'", "-u2'"]));
        assert!(l3.commutator(&l3).is_zero());
        assert!(DiffOperator::d_pow(3).commutator(&DiffOperator::d_pow(5)).is_zero());
    }

    #[test]
    fn queries() {
        let a = op(&["u3", "u2", "0", "1"]);
        assert_eq!(a.order(), Some(3));
        assert!(a.is_normal_form());
        assert!(!op(&["1", "u2", "1"]).is_normal_form());
        assert!(op(&["2/3*u2", "0", "1"]).coefficient_at(0) == &p("2/3*u2"));
        assert!(a.coefficient_at(9).is_zero());
        assert_eq!(DiffOperator::zero().order(), None);
        assert!(matches!(DiffOperator::zero().leading_coefficient(), Err(Error::ZeroOperator)));
        assert_eq!(a.weight_of(), Homogeneity::Weight(3));
    }

    #[test]
    fn apply_examples() {
        assert_eq!(DiffOperator::d_pow(2).apply(&p("u2")), p("u2''"));
        assert_eq!(DiffOperator::scalar(p("u2")).apply(&p("u2'")), p("u2*u2'"));
        assert_eq!(op(&["u2", "0", "1"]).apply(&p("u2")), p("u2'' + u2^2"));
    }

    #[test]
    fn generalized_binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(2, 3), BigInt::from(0));
        assert_eq!(binomial(-1, 3), BigInt::from(-1));
        assert_eq!(binomial(-2, 2), BigInt::from(3));
    }

    #[test]
    fn rendering() {
        let a = op(&["2/9*u2'' + 2/3*u3'", "2/3*u2' + 4/3*u3", "4/3*u2", "0", "1"]);
        assert_eq!(a.to_text(), "D^4 + (4/3*u2)*D^2 + (2/3*u2' + 4/3*u3)*D + (2/9*u2'' + 2/3*u3')");
        assert!(a.to_latex().starts_with("\\partial^{4} + (\\frac{4}{3} u_2) \\partial^{2}"));
        let json = serde_json::to_string(&a).unwrap();
        let back: DiffOperator = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }
}
