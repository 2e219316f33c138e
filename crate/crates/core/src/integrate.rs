//! Antiderivatives of differential polynomials.
//!
//! [`decompose`] writes `F = ∂(A) + B` by integration by parts under the
//! elimination ranking `u2 > u3 > ... ` (derivative order deciding within
//! one variable). Every monomial left in `B` has a leader of order zero or
//! occurring nonlinearly, and `F` is a total derivative exactly when
//! `B = 0`.
//!
//! [`antiderivative_by_ansatz`] is an independent second method: it solves
//! `∂(Σ λ_i M_i) = F` over all monomials `M_i` of weight `w - 1`.

use std::collections::{BTreeMap, HashMap};

use num::{One, Zero};

use crate::diffpoly::{homogeneous_monomials, int, Coeff, DiffPolynomial, Family, Homogeneity, Monomial, VarId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub antiderivative: DiffPolynomial,
    pub obstruction: DiffPolynomial,
}

impl Decomposition {
    pub fn is_total_derivative(&self) -> bool {
        self.obstruction.is_zero()
    }
}

/// Position of a variable in the ranking; larger ranks higher.
fn rank(v: VarId) -> u64 {
    let family = match v.family() {
        Family::U => 2u64,
        Family::Y => 1,
        Family::C => 0,
    };
    (family << 48) | ((0xffff - v.index() as u64) << 16) | v.order() as u64
}

fn leader(m: &Monomial) -> Option<(VarId, u32)> {
    m.factors()
        .iter()
        .filter(|(v, _)| v.family() != Family::C)
        .max_by_key(|(v, _)| rank(*v))
        .copied()
}

type Worklist = BTreeMap<(u64, Monomial), Coeff>;

fn push(work: &mut Worklist, m: Monomial, c: Coeff) {
    if c.is_zero() {
        return;
    }
    let key = (leader(&m).map_or(0, |(v, _)| rank(v) + 1), m);
    match work.entry(key) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut e) => {
            *e.get_mut() += c;
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

/// Canonical decomposition `F = ∂(A) + B`.
pub fn decompose(f: &DiffPolynomial) -> Decomposition {
    let mut work: Worklist = BTreeMap::new();
    for (m, c) in f.terms() {
        push(&mut work, m.clone(), c.clone());
    }
    let mut a = DiffPolynomial::zero();
    let mut b = DiffPolynomial::zero();

    while let Some(((_, m), c)) = work.pop_last() {
        let Some((v, e)) = leader(&m) else {
            b.add_term(m, c);
            continue;
        };
        if e != 1 || v.order() == 0 {
            // Every term still queued has a lower leader, so nothing can
            // cancel this one any more.
            b.add_term(m, c);
            continue;
        }
        // m = h * (v_)^r * v with v_ one derivative below v
        let below = v.base().derivative_by(v.order() - 1).expect("order checked above");
        let r = m.exponent(below);
        let mut h = m.without_var(v, 1);
        if r > 0 {
            h = h.without_var(below, r);
        }
        let coef = c / int(r as i64 + 1);
        let piece = h.times_var(below, r + 1);
        a.add_term(piece, coef.clone());
        // F - ∂(coef * h * below^(r+1)) leaves -coef * h' * below^(r+1)
        for (dh, mult) in h.derive() {
            push(&mut work, dh.times_var(below, r + 1), -(&coef) * int(mult as i64));
        }
    }
    Decomposition {
        antiderivative: a,
        obstruction: b,
    }
}

/// `A` with `∂(A) = F`, by integration by parts.
pub fn antiderivative(f: &DiffPolynomial) -> Result<DiffPolynomial> {
    let d = decompose(f);
    if d.obstruction.is_zero() {
        Ok(d.antiderivative)
    } else {
        Err(Error::NotTotalDerivative {
            obstruction: d.obstruction,
        })
    }
}

/// `A` with `∂(A) = F` for weight-homogeneous `F` in the `u` variables,
/// by solving for the coefficients of every weight `w - 1` monomial.
pub fn antiderivative_by_ansatz(f: &DiffPolynomial) -> Result<DiffPolynomial> {
    if f.is_zero() {
        return Ok(DiffPolynomial::zero());
    }
    if f.has_family(Family::Y) || f.has_family(Family::C) {
        return Err(Error::InvalidArgument("ansatz integration needs a polynomial in u variables only".into()));
    }
    let w = match f.weight_of() {
        Homogeneity::Weight(w) => w,
        _ => return Err(Error::NotHomogeneous),
    };
    if w < 3 {
        return Err(Error::NotTotalDerivative { obstruction: f.clone() });
    }
    let vars: Vec<u32> = f.u_indices().into_iter().collect();
    let candidates = homogeneous_monomials(w - 1, &vars);

    // One row per monomial of weight w: Σ_i coeff(∂M_i, t) λ_i = coeff(F, t).
    let mut rows: HashMap<Monomial, BTreeMap<usize, Coeff>> = HashMap::new();
    for (col, cand) in candidates.iter().enumerate() {
        for (t, mult) in cand.derive() {
            let entry = rows.entry(t).or_default().entry(col).or_insert_with(Coeff::zero);
            *entry += int(mult as i64);
        }
    }
    if f.terms().any(|(t, _)| !rows.contains_key(t)) {
        // a monomial of F that no candidate derivative reaches
        return Err(Error::NotTotalDerivative {
            obstruction: decompose(f).obstruction,
        });
    }
    let mut system: Vec<(BTreeMap<usize, Coeff>, Coeff)> = rows
        .into_iter()
        .map(|(t, row)| {
            let rhs = f.coefficient(&t);
            (row, rhs)
        })
        .collect();
    system.sort_by(|a, b| a.0.keys().next().cmp(&b.0.keys().next()));

    let solution = solve_exact(candidates.len(), system).ok_or_else(|| Error::NotTotalDerivative { obstruction: decompose(f).obstruction })?;
    let a = DiffPolynomial::from_terms(candidates.into_iter().zip(solution).filter(|(_, c)| !c.is_zero()));
    debug_assert_eq!(&a.derive(), f);
    Ok(a)
}

/// Solves a sparse linear system exactly; `None` if inconsistent. Free
/// columns are set to zero.
fn solve_exact(ncols: usize, rows: Vec<(BTreeMap<usize, Coeff>, Coeff)>) -> Option<Vec<Coeff>> {
    // pivot column -> row normalised so the pivot is 1 and is its first column
    let mut pivots: BTreeMap<usize, (BTreeMap<usize, Coeff>, Coeff)> = BTreeMap::new();
    for (mut row, mut rhs) in rows {
        loop {
            let Some((&col, _)) = row.iter().next() else {
                if !rhs.is_zero() {
                    return None;
                }
                break;
            };
            match pivots.get(&col) {
                Some((prow, prhs)) => {
                    let factor = row[&col].clone();
                    for (j, v) in prow {
                        let entry = row.entry(*j).or_insert_with(Coeff::zero);
                        *entry -= &factor * v;
                        if entry.is_zero() {
                            row.remove(j);
                        }
                    }
                    rhs -= &factor * prhs;
                }
                None => {
                    let inv = Coeff::one() / &row[&col];
                    for v in row.values_mut() {
                        *v *= &inv;
                    }
                    rhs *= &inv;
                    pivots.insert(col, (row, rhs));
                    break;
                }
            }
        }
    }
    let mut x = vec![Coeff::zero(); ncols];
    for (&col, (row, rhs)) in pivots.iter().rev() {
        let mut v = rhs.clone();
        for (j, a) in row.range(col + 1..) {
            v -= a * &x[*j];
        }
        x[col] = v;
    }
    Some(x)
}

/// A way of computing antiderivatives.
pub trait Integrator: Sync {
    fn name(&self) -> &'static str;
    fn integrate(&self, f: &DiffPolynomial) -> Result<DiffPolynomial>;
}

/// Integration by parts ([`antiderivative`]).
#[derive(Debug, Clone, Copy, Default)]
pub struct ByParts;

/// The linear-algebra method ([`antiderivative_by_ansatz`]).
#[derive(Debug, Clone, Copy, Default)]
pub struct ByAnsatz;

/// Runs both methods and fails loudly if they disagree.
#[derive(Debug, Clone, Copy, Default)]
pub struct CrossChecked;

impl Integrator for ByParts {
    fn name(&self) -> &'static str {
        "by-parts"
    }

    fn integrate(&self, f: &DiffPolynomial) -> Result<DiffPolynomial> {
        antiderivative(f)
    }
}

impl Integrator for ByAnsatz {
    fn name(&self) -> &'static str {
        "ansatz"
    }

    fn integrate(&self, f: &DiffPolynomial) -> Result<DiffPolynomial> {
        antiderivative_by_ansatz(f)
    }
}

impl Integrator for CrossChecked {
    fn name(&self) -> &'static str {
        "cross-checked"
    }

    fn integrate(&self, f: &DiffPolynomial) -> Result<DiffPolynomial> {
        let by_parts = antiderivative(f)?;
        let by_ansatz = antiderivative_by_ansatz(f)?;
        if by_parts != by_ansatz {
            return Err(Error::IntegratorMismatch {
                input: f.clone(),
                by_parts,
                by_ansatz,
            });
        }
        Ok(by_parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> DiffPolynomial {
        s.parse().unwrap()
    }

    #[test]
    fn decomposition_examples() {
        let d = decompose(&p("u2'*u2"));
        assert_eq!(d.antiderivative, p("1/2*u2^2"));
        assert!(d.obstruction.is_zero());

        let d = decompose(&p("u2''*u2"));
        assert_eq!(d.antiderivative, p("u2'*u2"));
        assert_eq!(d.obstruction, p("-u2'^2"));

        let d = decompose(&p("u2'^2"));
        assert!(d.antiderivative.is_zero());
        assert_eq!(d.obstruction, p("u2'^2"));

        let d = decompose(&DiffPolynomial::zero());
        assert!(d.antiderivative.is_zero() && d.obstruction.is_zero());
    }

    #[test]
    fn underived_monomials_are_obstructions() {
        let d = decompose(&p("u2*u3"));
        assert_eq!(d.obstruction, p("u2*u3"));
        let d = decompose(&p("u2*u3'"));
        assert_eq!(&d.antiderivative.derive() + &d.obstruction, p("u2*u3'"));
        assert!(!d.is_total_derivative());
    }

    #[test]
    fn antiderivative_examples() {
        assert_eq!(antiderivative(&p("2*u2*u2' + u3''")).unwrap(), p("u2^2 + u3'"));
        assert_eq!(antiderivative(&p("2*u2'")).unwrap(), p("2*u2"));
        assert!(matches!(antiderivative(&p("u2'^2")), Err(Error::NotTotalDerivative { .. })));
    }

    #[test]
    fn mixed_variables() {
        let a = p("u2'^2*u3 + u3'*u2*u4^3 - 5/7*u2^(3)*u4'");
        let f = a.derive();
        assert_eq!(antiderivative(&f).unwrap(), a);
    }

    #[test]
    fn ansatz_examples() {
        assert_eq!(antiderivative_by_ansatz(&p("u2'")).unwrap(), p("u2"));
        // 3 q4 = INTEG(e) with q4 = 2/9 u2'' + 2/3 u3' + 2/9 u2^2
        let q4 = p("2/9*u2'' + 2/3*u3' + 2/9*u2^2");
        let e = q4.derive().scale(&int(3));
        assert_eq!(antiderivative_by_ansatz(&e).unwrap().scale(&crate::diffpoly::rat(1, 3)), q4);
        assert!(matches!(antiderivative_by_ansatz(&p("2*u2*u3")), Err(Error::NotTotalDerivative { .. })));
        assert!(matches!(antiderivative_by_ansatz(&p("u2'^2")), Err(Error::NotTotalDerivative { .. })));
        assert!(matches!(antiderivative_by_ansatz(&p("u2' + u3'")), Err(Error::NotHomogeneous)));
    }

    #[test]
    fn cross_checked_agrees() {
        let a = p("u2''*u2 - 3*u2'^2 + 2*u3'*u2 + u3^2 - u2^3");
        let f = a.derive();
        assert_eq!(CrossChecked.integrate(&f).unwrap(), a);
        assert_eq!(ByAnsatz.integrate(&f).unwrap(), a);
    }

    #[test]
    fn exact_solver() {
        // x + y = 3, x - y = 1
        let rows = vec![
            (BTreeMap::from([(0, int(1)), (1, int(1))]), int(3)),
            (BTreeMap::from([(0, int(1)), (1, int(-1))]), int(1)),
        ];
        assert_eq!(solve_exact(2, rows).unwrap(), vec![int(2), int(1)]);
        let rows = vec![
            (BTreeMap::from([(0, int(1))]), int(3)),
            (BTreeMap::from([(0, int(2))]), int(1)),
        ];
        assert!(solve_exact(1, rows).is_none());
    }
}
