//! Almost-commuting operators by Wilson's method.
//!
//! For the generic `L = ∂^n + u2 ∂^(n-2) + ... + un` and the ansatz
//! `P̃m = ∂^m + y2 ∂^(m-2) + ... + ym`, the coefficients of `[L, P̃m]` at
//! `∂^(n+m-3)` down to `∂^(n-1)` form a triangular system in the `y`s: the
//! equation at `∂^(n+m-i)` is `n y'_(i-1)` plus terms in `y2 .. y_(i-2)`.
//! Solving it top down, one antiderivative per step, gives the unique
//! weighted solution `Z`, and `Pm = P̃m(Z)`. The remaining coefficients,
//! negated and evaluated at `Z`, are the hierarchy polynomials `H_(m,i)`
//! with `[Pm, L] = Σ H_(m,i) ∂^i`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::diffpoly::{int, rat, DiffPolynomial, Family};
use crate::error::{Error, Result};
use crate::integrate::{ByParts, Integrator};
use crate::oreops::DiffOperator;
use crate::par;

/// Assignments `y_i -> q_i`, with a cache of the derivatives of each `q_i`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TriangularSolution {
    // chains[i][k] = q_i^(k)
    chains: BTreeMap<u32, Vec<DiffPolynomial>>,
}

impl TriangularSolution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, index: u32, q: DiffPolynomial) {
        self.chains.insert(index, vec![q]);
    }

    pub fn get(&self, index: u32) -> Option<&DiffPolynomial> {
        self.chains.get(&index).map(|c| &c[0])
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    /// `(i, q_i)` in increasing `i`.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &DiffPolynomial)> {
        self.chains.iter().map(|(i, c)| (*i, &c[0]))
    }

    /// `q_i^(k)` if it has been computed already.
    pub fn cached_derivative(&self, index: u32, k: u32) -> Option<&DiffPolynomial> {
        self.chains.get(&index).and_then(|c| c.get(k as usize))
    }

    /// Fills the derivative cache for every `y` derivative occurring in `p`.
    pub fn prepare(&mut self, p: &DiffPolynomial) {
        let mut needed: BTreeMap<u32, u32> = BTreeMap::new();
        for v in p.variables() {
            if v.family() == Family::Y && self.chains.contains_key(&v.index()) {
                let e = needed.entry(v.index()).or_insert(0);
                *e = (*e).max(v.order());
            }
        }
        let work: Vec<(u32, u32)> = needed
            .into_iter()
            .filter(|(i, k)| self.chains[i].len() <= *k as usize)
            .collect();
        let extended: Vec<(u32, Vec<DiffPolynomial>)> = par::map_slice(&work, |&(i, k)| {
            let mut chain = self.chains[&i].clone();
            while chain.len() <= k as usize {
                let next = chain.last().unwrap().derive();
                chain.push(next);
            }
            (i, chain)
        });
        for (i, chain) in extended {
            self.chains.insert(i, chain);
        }
    }
}

/// `∂^n + u2 ∂^(n-2) + ... + un`.
pub fn generic_l(n: usize) -> Result<DiffOperator> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("L needs order n >= 2, got {n}")));
    }
    let mut coeffs = vec![DiffPolynomial::zero(); n + 1];
    coeffs[n] = DiffPolynomial::one();
    for i in 2..=n {
        coeffs[n - i] = DiffPolynomial::u(i as u32, 0);
    }
    Ok(DiffOperator::from_coeffs(coeffs))
}

/// `∂^m + y2 ∂^(m-2) + ... + ym`; for `m = 1` just `∂`.
pub fn generic_p(m: usize) -> Result<DiffOperator> {
    if m < 1 {
        return Err(Error::InvalidArgument(format!("P needs order m >= 1, got {m}")));
    }
    let mut coeffs = vec![DiffPolynomial::zero(); m + 1];
    coeffs[m] = DiffPolynomial::one();
    for i in 2..=m {
        coeffs[m - i] = DiffPolynomial::y(i as u32, 0);
    }
    Ok(DiffOperator::from_coeffs(coeffs))
}

/// `[L, P̃m]` together with the equations of the triangular system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BracketSystem {
    pub n: usize,
    pub m: usize,
    pub full_bracket: DiffOperator,
    /// Coefficients of `∂^(n+m-3)` down to `∂^(n-1)`; entry `k` determines
    /// `y_(k+2)`.
    pub equations: Vec<DiffPolynomial>,
}

impl BracketSystem {
    pub fn from_bracket(n: usize, m: usize, full_bracket: DiffOperator) -> Self {
        let equations = (3..=m + 1)
            .map(|i| full_bracket.coefficient_at(n + m - i).clone())
            .collect();
        BracketSystem {
            n,
            m,
            full_bracket,
            equations,
        }
    }
}

fn check_nm(n: usize, m: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be >= 2, got {n}")));
    }
    if m < 1 {
        return Err(Error::InvalidArgument(format!("m must be >= 1, got {m}")));
    }
    Ok(())
}

pub fn bracket_system(n: usize, m: usize) -> Result<BracketSystem> {
    check_nm(n, m)?;
    let l = generic_l(n)?;
    let p = generic_p(m)?;
    Ok(BracketSystem::from_bracket(n, m, l.commutator(&p)))
}

/// `[L, P̃2], ..., [L, P̃M]` built up one order at a time from
/// `[L, P̃(l+1)] = [L, P̃l] ∂ + P̃l [L, ∂] + [L, y(l+1)]`.
pub fn bracket_recursive(n: usize, max_m: usize) -> Result<Vec<DiffOperator>> {
    Ok(brackets_from_one(n, max_m)?.into_iter().skip(1).collect())
}

// [L, P̃1], ..., [L, P̃M]
fn brackets_from_one(n: usize, max_m: usize) -> Result<Vec<DiffOperator>> {
    check_nm(n, max_m)?;
    let l = generic_l(n)?;
    let d = DiffOperator::d_pow(1);
    let l_d = l.commutator(&d);
    let mut out = vec![l_d.clone()];
    let mut p = d.clone();
    for ell in 1..max_m {
        let y = DiffOperator::scalar(DiffPolynomial::y(ell as u32 + 1, 0));
        let next = &(&out[ell - 1].compose(&d) + &p.compose(&l_d)) + &l.commutator(&y);
        out.push(next);
        p = &p.compose(&d) + &y;
    }
    Ok(out)
}

/// Solves the triangular system by integration by parts.
pub fn solve_triangular(sys: &BracketSystem) -> Result<TriangularSolution> {
    solve_triangular_with(sys, &ByParts)
}

/// Solves the triangular system with the given integrator.
pub fn solve_triangular_with(sys: &BracketSystem, integrator: &dyn Integrator) -> Result<TriangularSolution> {
    let n = sys.n;
    let mut z = TriangularSolution::new();
    let inv_n = rat(-1, n as i64);
    for (k, eq) in sys.equations.iter().enumerate() {
        let i = k as u32 + 2;
        let lead = DiffPolynomial::y(i, 1).scale(&int(n as i64));
        let involving = eq.filter_terms(|mono| mono.factors().iter().any(|(v, _)| v.family() == Family::Y && v.index() >= i));
        if involving != lead {
            return Err(Error::NotTriangular {
                n,
                m: sys.m,
                index: i,
                equation: eq.clone(),
            });
        }
        let rest = eq - &lead;
        z.prepare(&rest);
        let e = rest.evaluate(&z)?;
        let q = match integrator.integrate(&e) {
            Ok(a) => a.scale(&inv_n),
            Err(Error::NotTotalDerivative { obstruction }) => {
                return Err(Error::Integration {
                    n,
                    m: sys.m,
                    index: i,
                    obstruction,
                })
            }
            Err(other) => return Err(other),
        };
        z.insert(i, q);
    }
    Ok(z)
}

/// `Pm` and `H_(m,0), ..., H_(m,n-2)` for one `(n, m)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlmostCommutingResult {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "P")]
    pub p: DiffOperator,
    #[serde(rename = "H")]
    pub h: Vec<DiffPolynomial>,
}

impl AlmostCommutingResult {
    /// Assembles the result from a solved system.
    pub fn from_solution(sys: &BracketSystem, z: &TriangularSolution) -> Result<Self> {
        let (n, m) = (sys.n, sys.m);
        let mut z = z.clone();
        let p_tilde = generic_p(m)?;
        let low: Vec<&DiffPolynomial> = (0..n - 1).map(|i| sys.full_bracket.coefficient_at(i)).collect();
        for c in p_tilde.coefficients().iter().chain(low.iter().copied()) {
            z.prepare(c);
        }
        let p = p_tilde.map_coefficients(|c| c.evaluate(&z))?;
        let h = par::map_slice(&low, |c| c.evaluate(&z).map(|e| -e));
        let h = h.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(AlmostCommutingResult { n, m, p, h })
    }

    /// Total number of monomials over all coefficients of `Pm`.
    pub fn p_monomials(&self) -> usize {
        self.p.monomial_count()
    }

    /// The operator `Σ H_(m,i) ∂^i`, which equals `[Pm, L]`.
    pub fn h_operator(&self) -> DiffOperator {
        DiffOperator::from_coeffs(self.h.clone())
    }

    /// `q_i`, the coefficient of `∂^(m-i)` in `Pm`, for `i = 2..m`.
    pub fn q(&self, i: usize) -> &DiffPolynomial {
        self.p.coefficient_at(self.m - i)
    }
}

pub fn almost_commuting(n: usize, m: usize) -> Result<AlmostCommutingResult> {
    almost_commuting_with(n, m, &ByParts)
}

pub fn almost_commuting_with(n: usize, m: usize, integrator: &dyn Integrator) -> Result<AlmostCommutingResult> {
    let sys = bracket_system(n, m)?;
    let z = solve_triangular_with(&sys, integrator)?;
    AlmostCommutingResult::from_solution(&sys, &z)
}

/// `P1, ..., PM` with their hierarchy polynomials, sharing the bracket
/// computation across orders.
pub fn almost_commuting_basis(n: usize, max_m: usize) -> Result<Vec<AlmostCommutingResult>> {
    let brackets = brackets_from_one(n, max_m)?;
    let systems: Vec<BracketSystem> = brackets
        .into_iter()
        .enumerate()
        .map(|(k, b)| BracketSystem::from_bracket(n, k + 1, b))
        .collect();
    let results = par::map_slice(&systems, |sys| {
        let z = solve_triangular(sys)?;
        AlmostCommutingResult::from_solution(sys, &z)
    });
    results.into_iter().collect()
}
