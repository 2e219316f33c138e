//! Truncated pseudo-differential operators `Σ_{low ≤ i ≤ top} a_i ∂^i`.
//!
//! Used as an independent check on the almost-commuting basis: the basis
//! element of order `m` is the positive part of `Q^m`, where `Q` is the
//! monic `n`-th root of `L`.
//!
//! Every value records whether lower powers were discarded. Products keep
//! track of how far down their coefficients are still exact and refuse to
//! report coefficients that a discarded tail could have changed.

use std::collections::HashMap;
use std::fmt;

use num::BigInt;

use crate::diffpoly::{Coeff, DiffPolynomial};
use crate::error::{Error, Result};
use crate::oreops::{binomial, DiffOperator};
use crate::par;

#[derive(Clone, PartialEq, Eq)]
pub struct TruncatedPdo {
    /// Lowest stored power.
    low: i64,
    /// `coeffs[k]` multiplies `∂^(low + k)`; the last entry is nonzero.
    coeffs: Vec<DiffPolynomial>,
    /// Powers below `low` were dropped (unknown), as opposed to zero.
    truncated: bool,
}

impl TruncatedPdo {
    /// An exact (untruncated) operator from `(power, coefficient)` pairs.
    pub fn from_terms<I: IntoIterator<Item = (i64, DiffPolynomial)>>(terms: I) -> Self {
        let terms: Vec<(i64, DiffPolynomial)> = terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        let Some(low) = terms.iter().map(|t| t.0).min() else {
            return Self::exact_zero();
        };
        let top = terms.iter().map(|t| t.0).max().unwrap();
        let mut coeffs = vec![DiffPolynomial::zero(); (top - low + 1) as usize];
        for (i, c) in terms {
            coeffs[(i - low) as usize] += &c;
        }
        Self::build(low, coeffs, false)
    }

    fn exact_zero() -> Self {
        TruncatedPdo {
            low: 0,
            coeffs: Vec::new(),
            truncated: false,
        }
    }

    fn build(low: i64, mut coeffs: Vec<DiffPolynomial>, truncated: bool) -> Self {
        while coeffs.last().is_some_and(DiffPolynomial::is_zero) {
            coeffs.pop();
        }
        TruncatedPdo { low, coeffs, truncated }
    }

    pub fn from_operator(op: &DiffOperator) -> Self {
        Self::from_terms(op.coefficients().iter().enumerate().map(|(i, c)| (i as i64, c.clone())))
    }

    /// `∂^k` for any integer `k`.
    pub fn d_pow(k: i64) -> Self {
        Self::from_terms([(k, DiffPolynomial::one())])
    }

    /// Highest power with a nonzero coefficient; `None` for zero.
    pub fn top(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.low + self.coeffs.len() as i64 - 1)
        }
    }

    /// Lowest stored power.
    pub fn lowest_power(&self) -> i64 {
        self.low
    }

    /// Number of stored negative powers.
    pub fn depth(&self) -> i64 {
        -self.low
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// Coefficient of `∂^k` (zero outside the stored range).
    pub fn coefficient_at(&self, k: i64) -> DiffPolynomial {
        if k < self.low {
            return DiffPolynomial::zero();
        }
        self.coeffs.get((k - self.low) as usize).cloned().unwrap_or_default()
    }

    fn coeff_ref(&self, k: i64) -> Option<&DiffPolynomial> {
        if k < self.low {
            None
        } else {
            self.coeffs.get((k - self.low) as usize)
        }
    }

    /// Lowest power at which a product with `other` is still exact.
    fn exact_bound(&self, other: &TruncatedPdo) -> Option<i64> {
        let (Some(ta), Some(tb)) = (self.top(), other.top()) else {
            return None;
        };
        let mut bound: Option<i64> = None;
        if self.truncated {
            bound = Some(self.low + tb);
        }
        if other.truncated {
            let b = other.low + ta;
            bound = Some(bound.map_or(b, |x| x.max(b)));
        }
        bound
    }

    /// Lowest power the full product with `other` can reach, or `None` if
    /// the product is an infinite series.
    fn natural_low(&self, other: &TruncatedPdo) -> Option<i64> {
        let mut low: Option<i64> = None;
        for (ia, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let i = self.low + ia as i64;
            for (jb, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let j = other.low + jb as i64;
                let constant = b.len() == 1 && b.terms().next().is_some_and(|(m, _)| m.is_one());
                let reach = if constant {
                    i + j
                } else if i >= 0 {
                    j
                } else {
                    return None;
                };
                low = Some(low.map_or(reach, |l: i64| l.min(reach)));
            }
        }
        low
    }

    /// Product keeping powers `>= keep_low`.
    pub fn mul_to(&self, other: &TruncatedPdo, keep_low: i64) -> Result<TruncatedPdo> {
        let (Some(ta), Some(tb)) = (self.top(), other.top()) else {
            return Ok(TruncatedPdo {
                low: keep_low,
                coeffs: Vec::new(),
                truncated: self.truncated || other.truncated,
            });
        };
        if let Some(bound) = self.exact_bound(other) {
            if keep_low < bound {
                return Err(Error::InsufficientDepth {
                    requested: keep_low,
                    available: bound,
                });
            }
        }
        let top = ta + tb;
        if keep_low > top {
            return Ok(TruncatedPdo {
                low: keep_low,
                coeffs: Vec::new(),
                truncated: true,
            });
        }

        // Derivatives of each coefficient of `other`, as deep as the
        // retained range needs them.
        let mut max_k: HashMap<i64, u32> = HashMap::new();
        for i in self.low..=ta {
            for j in other.low..=tb {
                let mut k = i + j - keep_low;
                if i >= 0 {
                    k = k.min(i);
                }
                if k >= 0 {
                    let e = max_k.entry(j).or_insert(0);
                    *e = (*e).max(k as u32);
                }
            }
        }
        let js: Vec<i64> = (other.low..=tb).collect();
        let chains: Vec<Vec<DiffPolynomial>> = par::map_slice(&js, |&j| {
            let b = other.coeff_ref(j).unwrap();
            let kmax = max_k.get(&j).copied().unwrap_or(0);
            let mut chain = vec![b.clone()];
            if !b.is_zero() {
                for k in 1..=kmax as usize {
                    let next = chain[k - 1].derive();
                    chain.push(next);
                }
            }
            chain
        });
        let mut binoms: HashMap<(i64, u32), Coeff> = HashMap::new();
        for i in self.low..=ta {
            let kmax = (i - keep_low + tb).max(0) as u32;
            let kmax = if i >= 0 { kmax.min(i as u32) } else { kmax };
            for k in 0..=kmax {
                binoms.insert((i, k), Coeff::from_integer(binomial(i, k)));
            }
        }

        let len = (top - keep_low + 1) as usize;
        let coeffs = par::map_range(len, |idx| {
            let p = keep_low + idx as i64;
            let mut out = DiffPolynomial::zero();
            for i in self.low..=ta {
                let a = self.coeff_ref(i).unwrap();
                if a.is_zero() {
                    continue;
                }
                // contribution C(i,k) a_i b_j^(k) at power i + j - k
                for (jpos, &j) in js.iter().enumerate() {
                    let k = i + j - p;
                    if k < 0 || (i >= 0 && k > i) {
                        continue;
                    }
                    let chain = &chains[jpos];
                    let Some(b) = chain.get(k as usize) else { continue };
                    if b.is_zero() {
                        continue;
                    }
                    let c = &binoms[&(i, k as u32)];
                    out += &(a * b).scale(c);
                }
            }
            out
        });

        let dropped = self.natural_low(other).is_none_or(|l| l < keep_low);
        let truncated = self.truncated || other.truncated || dropped;
        Ok(Self::build(keep_low, coeffs, truncated))
    }

    /// Product truncated below `∂^(-keep_depth)`.
    pub fn mul(&self, other: &TruncatedPdo, keep_depth: usize) -> Result<TruncatedPdo> {
        self.mul_to(other, -(keep_depth as i64))
    }

    /// The nonnegative-power part as a differential operator.
    pub fn positive_part(&self) -> DiffOperator {
        let Some(top) = self.top() else {
            return DiffOperator::zero();
        };
        if top < 0 {
            return DiffOperator::zero();
        }
        DiffOperator::from_coeffs((0..=top).map(|k| self.coefficient_at(k)).collect())
    }

    /// `self^m`, keeping every coefficient that is exact.
    pub fn power(&self, m: u32) -> Result<TruncatedPdo> {
        self.power_to(m, None)
    }

    /// `self^m`; with `Some(keep_low)` powers below `keep_low` are dropped
    /// along the way (intermediate products keep what the final one needs).
    pub fn power_to(&self, m: u32, keep_low: Option<i64>) -> Result<TruncatedPdo> {
        if m == 0 {
            return Ok(Self::d_pow(0));
        }
        let Some(top) = self.top() else {
            return Ok(self.clone());
        };
        let mut acc = self.clone();
        for k in 2..=m {
            // powers of acc below this are never needed by the final product
            let needed = keep_low.map(|kl| kl - (m - k) as i64 * top);
            let bound = acc.exact_bound(self);
            let full = acc.natural_low(self).unwrap_or(acc.low + self.low);
            let mut target = match bound {
                Some(b) => b.max(full),
                None => full,
            };
            if let Some(n) = needed {
                target = target.max(n);
            }
            acc = acc.mul_to(self, target)?;
        }
        if let Some(kl) = keep_low {
            if acc.truncated && acc.low > kl {
                return Err(Error::InsufficientDepth {
                    requested: kl,
                    available: acc.low,
                });
            }
        }
        Ok(acc)
    }

    /// Renders down to the stored depth, with `+ ...` for a dropped tail.
    pub fn to_text(&self) -> String {
        let mut parts = Vec::new();
        for (idx, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let k = self.low + idx as i64;
            let d = match k {
                0 => String::new(),
                1 => "D".into(),
                _ => format!("D^{k}"),
            };
            parts.push(if k == 0 {
                format!("({c})")
            } else if *c == DiffPolynomial::one() {
                d
            } else {
                format!("({c})*{d}")
            });
        }
        if parts.is_empty() {
            parts.push("0".into());
        }
        if self.truncated {
            parts.push("...".into());
        }
        parts.join(" + ")
    }
}

impl fmt::Debug for TruncatedPdo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// The monic `n`-th root `Q = ∂ + q_{-1} ∂^{-1} + ...` of a monic
/// normal-form `L`, with coefficients down to `∂^{-depth}`.
///
/// The `∂^{n-1-j}` coefficient of `Q^n` is `n q_{-j}` plus terms in
/// `q_{-1}, ..., q_{-(j-1)}` only, so the unknowns are solved one at a
/// time.
pub fn nth_root(l: &DiffOperator, depth: usize) -> Result<TruncatedPdo> {
    let n = match l.order() {
        Some(n) if n >= 2 => n,
        _ => return Err(Error::InvalidArgument("nth_root needs an operator of order >= 2".into())),
    };
    if !l.is_normal_form() {
        return Err(Error::InvalidArgument("nth_root needs a monic operator in normal form".into()));
    }
    let inv_n = Coeff::new(BigInt::from(1), BigInt::from(n as i64));
    let mut terms: Vec<(i64, DiffPolynomial)> = vec![(1, DiffPolynomial::one())];
    for j in 1..=depth as i64 {
        let target = n as i64 - 1 - j;
        let q = TruncatedPdo::from_terms(terms.clone());
        let qn = q.power_to(n as u32, Some(target))?;
        let known = qn.coefficient_at(target);
        let lt = if target >= 0 {
            l.coefficient_at(target as usize).clone()
        } else {
            DiffPolynomial::zero()
        };
        let qj = (&lt - &known).scale(&inv_n);
        terms.push((-j, qj));
    }
    let mut root = TruncatedPdo::from_terms(terms);
    // keep explicit zeros down to the requested depth
    if root.low > -(depth as i64) {
        let pad = (root.low + depth as i64) as usize;
        let mut coeffs = vec![DiffPolynomial::zero(); pad];
        coeffs.append(&mut root.coeffs);
        root.coeffs = coeffs;
        root.low = -(depth as i64);
    }
    root.truncated = true;
    Ok(root)
}

/// `(Q^m)_+` with `Q = nth_root(L, depth)`.
pub fn oracle_basis_element(l: &DiffOperator, m: u32, depth: usize) -> Result<DiffOperator> {
    let q = nth_root(l, depth)?;
    Ok(q.power_to(m, Some(0))?.positive_part())
}
