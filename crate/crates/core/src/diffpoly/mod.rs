//! Differential polynomials over the rationals.
//!
//! Variables are the jets `u_l^(k)` and `y_l^(k)` of the differential
//! indeterminates plus formal constants `c_{m,j}`. The derivation sends
//! `v^(k)` to `v^(k+1)` and kills constants. Every jet carries the weight
//! `l + k`; constants are weight-transparent.

mod format;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num::{BigInt, BigRational, One, Zero};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::par;
use crate::wilson::TriangularSolution;

pub use format::{parse_poly, LatexDisplay};

/// Exact rational coefficient.
pub type Coeff = BigRational;

pub(crate) fn rat(num: i64, den: i64) -> Coeff {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub(crate) fn int(v: i64) -> Coeff {
    BigRational::from_integer(BigInt::from(v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    U,
    Y,
    C,
}

const FAMILY_SHIFT: u32 = 30;
const INDEX_SHIFT: u32 = 16;
const INDEX_MASK: u32 = 0x3fff;
const LOW_MASK: u32 = 0xffff;

/// A single differential variable.
///
/// Packed so that the derived `Ord` is the canonical variable order:
/// family (U < Y < C), then index, then derivative order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(u32);

impl VarId {
    fn pack(family: Family, index: u32, low: u32) -> Self {
        assert!(index <= INDEX_MASK, "variable index {index} out of range");
        assert!(low <= LOW_MASK, "derivative order {low} out of range");
        let f = match family {
            Family::U => 0,
            Family::Y => 1,
            Family::C => 2,
        };
        VarId((f << FAMILY_SHIFT) | (index << INDEX_SHIFT) | low)
    }

    /// `u_index^(order)`.
    pub fn u(index: u32, order: u32) -> Self {
        Self::pack(Family::U, index, order)
    }

    /// `y_index^(order)`.
    pub fn y(index: u32, order: u32) -> Self {
        Self::pack(Family::Y, index, order)
    }

    /// The formal constant `c_{m,j}`.
    pub fn c(m: u32, j: u32) -> Self {
        Self::pack(Family::C, m, j)
    }

    pub fn family(self) -> Family {
        match self.0 >> FAMILY_SHIFT {
            0 => Family::U,
            1 => Family::Y,
            _ => Family::C,
        }
    }

    /// The variable index; for constants this is `m` in `c_{m,j}`.
    pub fn index(self) -> u32 {
        (self.0 >> INDEX_SHIFT) & INDEX_MASK
    }

    /// Derivative order, always 0 for constants.
    pub fn order(self) -> u32 {
        match self.family() {
            Family::C => 0,
            _ => self.0 & LOW_MASK,
        }
    }

    /// `(m, j)` for `c_{m,j}`.
    pub fn const_pair(self) -> Option<(u32, u32)> {
        match self.family() {
            Family::C => Some((self.index(), self.0 & LOW_MASK)),
            _ => None,
        }
    }

    pub fn weight(self) -> u32 {
        match self.family() {
            Family::C => 0,
            _ => self.index() + self.order(),
        }
    }

    /// The next derivative, or `None` for a constant.
    pub fn derivative(self) -> Option<VarId> {
        match self.family() {
            Family::C => None,
            f => Some(Self::pack(f, self.index(), self.order() + 1)),
        }
    }

    /// The undifferentiated variable.
    pub fn base(self) -> VarId {
        match self.family() {
            Family::C => self,
            f => Self::pack(f, self.index(), 0),
        }
    }

    /// `self` differentiated `k` more times.
    pub fn derivative_by(self, k: u32) -> Option<VarId> {
        match self.family() {
            Family::C => None,
            f => Some(Self::pack(f, self.index(), self.order() + k)),
        }
    }
}

impl fmt::Debug for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family() {
            Family::C => {
                let (m, j) = self.const_pair().unwrap();
                write!(f, "c{m}_{j}")
            }
            fam => {
                let letter = if fam == Family::U { 'u' } else { 'y' };
                write!(f, "{letter}{}", self.index())?;
                match self.order() {
                    0 => Ok(()),
                    k @ 1..=3 => {
                        for _ in 0..k {
                            f.write_str("'")?;
                        }
                        Ok(())
                    }
                    k => write!(f, "^({k})"),
                }
            }
        }
    }
}

type Factors = SmallVec<[(VarId, u32); 4]>;

/// A power product of variables, kept sorted by `VarId` with no zero
/// exponents.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    weight: u32,
    degree: u32,
    factors: Factors,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial {
            weight: 0,
            degree: 0,
            factors: SmallVec::new(),
        }
    }

    pub fn var(v: VarId) -> Self {
        Self::power(v, 1)
    }

    pub fn power(v: VarId, exp: u32) -> Self {
        if exp == 0 {
            return Self::one();
        }
        let mut factors = SmallVec::new();
        factors.push((v, exp));
        Monomial {
            weight: v.weight() * exp,
            degree: exp,
            factors,
        }
    }

    /// Builds a monomial from arbitrary factors, merging repeats.
    pub fn from_factors<I: IntoIterator<Item = (VarId, u32)>>(iter: I) -> Self {
        let mut map: BTreeMap<VarId, u32> = BTreeMap::new();
        for (v, e) in iter {
            if e > 0 {
                *map.entry(v).or_insert(0) += e;
            }
        }
        Self::from_sorted(map.into_iter().collect())
    }

    fn from_sorted(factors: Factors) -> Self {
        let weight = factors.iter().map(|(v, e)| v.weight() * e).sum();
        let degree = factors.iter().map(|(_, e)| e).sum();
        Monomial {
            weight,
            degree,
            factors,
        }
    }

    pub fn factors(&self) -> &[(VarId, u32)] {
        &self.factors
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn exponent(&self, v: VarId) -> u32 {
        self.factors
            .binary_search_by_key(&v, |f| f.0)
            .map(|i| self.factors[i].1)
            .unwrap_or(0)
    }

    pub fn has_family(&self, family: Family) -> bool {
        self.factors.iter().any(|(v, _)| v.family() == family)
    }

    /// Product of two monomials (sorted merge).
    pub fn mul(&self, other: &Monomial) -> Monomial {
        if other.is_one() {
            return self.clone();
        }
        if self.is_one() {
            return other.clone();
        }
        let mut out: Factors = SmallVec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.factors, &other.factors);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial {
            weight: self.weight + other.weight,
            degree: self.degree + other.degree,
            factors: out,
        }
    }

    /// Multiplies by `v^exp`.
    pub fn times_var(&self, v: VarId, exp: u32) -> Monomial {
        self.mul(&Monomial::power(v, exp))
    }

    /// Divides out `v^exp`; the caller guarantees divisibility.
    pub fn without_var(&self, v: VarId, exp: u32) -> Monomial {
        let mut factors = self.factors.clone();
        let pos = factors
            .binary_search_by_key(&v, |f| f.0)
            .expect("variable not present in monomial");
        assert!(factors[pos].1 >= exp, "exponent underflow");
        factors[pos].1 -= exp;
        if factors[pos].1 == 0 {
            factors.remove(pos);
        }
        Monomial {
            weight: self.weight - v.weight() * exp,
            degree: self.degree - exp,
            factors,
        }
    }

    /// Splits into the part whose variables satisfy `pred` and the rest.
    pub fn split<F: Fn(VarId) -> bool>(&self, pred: F) -> (Monomial, Monomial) {
        let (yes, no): (Factors, Factors) = self.factors.iter().copied().partition(|(v, _)| pred(*v));
        (Self::from_sorted(yes), Self::from_sorted(no))
    }

    /// Leibniz rule: the derivative as a list of `(monomial, multiplicity)`.
    pub fn derive(&self) -> Vec<(Monomial, u32)> {
        let mut out = Vec::with_capacity(self.factors.len());
        for &(v, e) in &self.factors {
            if let Some(dv) = v.derivative() {
                out.push((self.without_var(v, 1).times_var(dv, 1), e));
            }
        }
        out
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .weight
            .cmp(&self.weight)
            .then(self.degree.cmp(&other.degree))
            .then_with(|| self.factors.cmp(&other.factors))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        for (i, (v, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "{v}")?;
            if *e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// Result of a homogeneity query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Homogeneity {
    /// The zero polynomial, homogeneous of every weight.
    Zero,
    Weight(u32),
    Mixed,
}

impl Homogeneity {
    pub fn is(self, w: u32) -> bool {
        matches!(self, Homogeneity::Zero) || self == Homogeneity::Weight(w)
    }
}

/// Hash-based accumulator for building polynomials term by term.
#[derive(Default)]
pub(crate) struct Accumulator {
    terms: HashMap<Monomial, Coeff>,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn add_scaled(&mut self, p: &DiffPolynomial, m: &Monomial, c: &Coeff) {
        for (pm, pc) in &p.terms {
            self.add(pm.mul(m), pc * c);
        }
    }

    pub fn merge(mut self, other: Accumulator) -> Accumulator {
        let (mut big, small) = if self.terms.len() >= other.terms.len() {
            (std::mem::take(&mut self.terms), other.terms)
        } else {
            (other.terms, std::mem::take(&mut self.terms))
        };
        for (m, c) in small {
            *big.entry(m).or_insert_with(Coeff::zero) += c;
        }
        Accumulator { terms: big }
    }

    pub fn finish(self) -> DiffPolynomial {
        DiffPolynomial {
            terms: self.terms.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }
}

/// Sparse polynomial in differential variables with rational coefficients.
///
/// Terms are kept in canonical monomial order (weight descending, then
/// degree, then variables) and no zero coefficient is ever stored.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct DiffPolynomial {
    terms: BTreeMap<Monomial, Coeff>,
}

impl DiffPolynomial {
    pub const fn zero() -> Self {
        DiffPolynomial {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn term(m: Monomial, c: Coeff) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        DiffPolynomial { terms }
    }

    pub fn var(v: VarId) -> Self {
        Self::term(Monomial::var(v), Coeff::one())
    }

    /// `u_index^(order)`.
    pub fn u(index: u32, order: u32) -> Self {
        Self::var(VarId::u(index, order))
    }

    /// `y_index^(order)`.
    pub fn y(index: u32, order: u32) -> Self {
        Self::var(VarId::y(index, order))
    }

    /// `c_{m,j}`.
    pub fn c(m: u32, j: u32) -> Self {
        Self::var(VarId::c(m, j))
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Coeff)>>(iter: I) -> Self {
        let mut acc = Accumulator::new();
        for (m, c) in iter {
            acc.add(m, c);
        }
        acc.finish()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Coeff)> + ExactSizeIterator {
        self.terms.iter()
    }

    /// Number of stored terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn coefficient(&self, m: &Monomial) -> Coeff {
        self.terms.get(m).cloned().unwrap_or_else(Coeff::zero)
    }

    /// Largest total degree among the terms, 0 for the zero polynomial.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<VarId> {
        self.terms
            .keys()
            .flat_map(|m| m.factors().iter().map(|(v, _)| *v))
            .collect()
    }

    /// Indices `l` of every `u_l^(k)` that occurs.
    pub fn u_indices(&self) -> BTreeSet<u32> {
        self.variables()
            .into_iter()
            .filter(|v| v.family() == Family::U)
            .map(VarId::index)
            .collect()
    }

    pub fn has_family(&self, family: Family) -> bool {
        self.terms.keys().any(|m| m.has_family(family))
    }

    pub fn scale(&self, c: &Coeff) -> DiffPolynomial {
        if c.is_zero() {
            return Self::zero();
        }
        DiffPolynomial {
            terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect(),
        }
    }

    /// Multiplies every term by `c * m`.
    pub fn mul_term(&self, m: &Monomial, c: &Coeff) -> DiffPolynomial {
        if c.is_zero() {
            return Self::zero();
        }
        DiffPolynomial {
            terms: self.terms.iter().map(|(pm, x)| (pm.mul(m), x * c)).collect(),
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn pow(&self, e: u32) -> DiffPolynomial {
        let mut out = Self::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// The derivation, applied once.
    pub fn derive(&self) -> DiffPolynomial {
        let mut acc = Accumulator::new();
        for (m, c) in &self.terms {
            for (dm, mult) in m.derive() {
                acc.add(dm, c * int(mult as i64));
            }
        }
        acc.finish()
    }

    /// The derivation applied `times` times.
    pub fn derive_n(&self, times: u32) -> DiffPolynomial {
        let mut out = self.clone();
        for _ in 0..times {
            out = out.derive();
        }
        out
    }

    /// Weight of every term, ignoring constants `c_{m,j}`.
    pub fn weight_of(&self) -> Homogeneity {
        let mut weights = self.terms.keys().map(Monomial::weight);
        match weights.next() {
            None => Homogeneity::Zero,
            Some(w) => {
                if weights.all(|x| x == w) {
                    Homogeneity::Weight(w)
                } else {
                    Homogeneity::Mixed
                }
            }
        }
    }

    /// Keeps the terms whose monomial satisfies `pred`.
    pub fn filter_terms<F: Fn(&Monomial) -> bool>(&self, pred: F) -> DiffPolynomial {
        DiffPolynomial {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| pred(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Applies the evaluation homomorphism `y_l^(k) -> q_l^(k)`.
    pub fn evaluate(&self, sol: &TriangularSolution) -> Result<DiffPolynomial> {
        let mut needed: BTreeMap<u32, u32> = BTreeMap::new();
        for v in self.variables() {
            if v.family() == Family::Y {
                if sol.get(v.index()).is_none() {
                    return Err(Error::IncompleteSolution { index: v.index() });
                }
                let e = needed.entry(v.index()).or_insert(0);
                *e = (*e).max(v.order());
            }
        }
        if needed.is_empty() {
            return Ok(self.clone());
        }

        // Derivatives the solution has not precomputed.
        let mut local: HashMap<(u32, u32), DiffPolynomial> = HashMap::new();
        for (&idx, &max_k) in &needed {
            let mut prev: Option<DiffPolynomial> = None;
            for k in 0..=max_k {
                if let Some(p) = sol.cached_derivative(idx, k) {
                    prev = Some(p.clone());
                    continue;
                }
                let base = prev.take().unwrap_or_else(|| sol.get(idx).unwrap().clone());
                let next = if k == 0 { base } else { base.derive() };
                local.insert((idx, k), next.clone());
                prev = Some(next);
            }
        }
        let lookup = |idx: u32, k: u32| -> &DiffPolynomial {
            sol.cached_derivative(idx, k)
                .or_else(|| local.get(&(idx, k)))
                .expect("derivative table filled above")
        };

        let terms: Vec<(&Monomial, &Coeff)> = self.terms.iter().collect();
        let acc = par::fold_slice(
            &terms,
            Accumulator::new,
            |mut acc, (m, c)| {
                let (ys, rest) = m.split(|v| v.family() == Family::Y);
                if ys.is_one() {
                    acc.add((*m).clone(), (*c).clone());
                    return acc;
                }
                let mut factor: Option<DiffPolynomial> = None;
                for &(v, e) in ys.factors() {
                    let q = lookup(v.index(), v.order());
                    let pw = if e == 1 { q.clone() } else { q.pow(e) };
                    factor = Some(match factor {
                        None => pw,
                        Some(f) => &f * &pw,
                    });
                }
                acc.add_scaled(&factor.unwrap(), &rest, c);
                acc
            },
            Accumulator::merge,
        );
        Ok(acc.finish())
    }
}

impl fmt::Debug for DiffPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<VarId> for DiffPolynomial {
    fn from(v: VarId) -> Self {
        DiffPolynomial::var(v)
    }
}

impl From<Coeff> for DiffPolynomial {
    fn from(c: Coeff) -> Self {
        DiffPolynomial::constant(c)
    }
}

impl std::str::FromStr for DiffPolynomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_poly(s)
    }
}

impl<'a> Add<&'a DiffPolynomial> for &'a DiffPolynomial {
    type Output = DiffPolynomial;

    fn add(self, rhs: &DiffPolynomial) -> DiffPolynomial {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for DiffPolynomial {
    type Output = DiffPolynomial;

    fn add(mut self, rhs: DiffPolynomial) -> DiffPolynomial {
        self += &rhs;
        self
    }
}

impl AddAssign<&DiffPolynomial> for DiffPolynomial {
    fn add_assign(&mut self, rhs: &DiffPolynomial) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl SubAssign<&DiffPolynomial> for DiffPolynomial {
    fn sub_assign(&mut self, rhs: &DiffPolynomial) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c);
        }
    }
}

impl<'a> Sub<&'a DiffPolynomial> for &'a DiffPolynomial {
    type Output = DiffPolynomial;

    fn sub(self, rhs: &DiffPolynomial) -> DiffPolynomial {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for DiffPolynomial {
    type Output = DiffPolynomial;

    fn sub(mut self, rhs: DiffPolynomial) -> DiffPolynomial {
        self -= &rhs;
        self
    }
}

impl Neg for &DiffPolynomial {
    type Output = DiffPolynomial;

    fn neg(self) -> DiffPolynomial {
        DiffPolynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for DiffPolynomial {
    type Output = DiffPolynomial;

    fn neg(self) -> DiffPolynomial {
        -&self
    }
}

impl<'a> Mul<&'a DiffPolynomial> for &'a DiffPolynomial {
    type Output = DiffPolynomial;

    fn mul(self, rhs: &DiffPolynomial) -> DiffPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return DiffPolynomial::zero();
        }
        let (small, big) = if self.len() <= rhs.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        if small.len() == 1 {
            let (m, c) = small.terms.iter().next().unwrap();
            return big.mul_term(m, c);
        }
        let mut acc = Accumulator::new();
        for (m, c) in &small.terms {
            acc.add_scaled(big, m, c);
        }
        acc.finish()
    }
}

impl Mul for DiffPolynomial {
    type Output = DiffPolynomial;

    fn mul(self, rhs: DiffPolynomial) -> DiffPolynomial {
        &self * &rhs
    }
}

/// Every monomial of exact weight `w` in the jets of `u_l`, `l` in `vars`,
/// in canonical order.
pub fn homogeneous_monomials(w: u32, vars: &[u32]) -> Vec<Monomial> {
    let mut atoms: Vec<VarId> = Vec::new();
    let mut sorted: Vec<u32> = vars.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &l in &sorted {
        assert!(l > 0, "weight-0 variables make the enumeration infinite");
        if l <= w {
            for k in 0..=(w - l) {
                atoms.push(VarId::u(l, k));
            }
        }
    }
    atoms.sort_unstable();

    fn go(
        atoms: &[VarId],
        start: usize,
        remaining: u32,
        current: &mut Vec<(VarId, u32)>,
        out: &mut Vec<Monomial>,
    ) {
        if remaining == 0 {
            out.push(Monomial::from_factors(current.iter().copied()));
            return;
        }
        for i in start..atoms.len() {
            let aw = atoms[i].weight();
            let mut e = 1;
            while aw * e <= remaining {
                current.push((atoms[i], e));
                go(atoms, i + 1, remaining - aw * e, current, out);
                current.pop();
                e += 1;
            }
        }
    }

    let mut out = Vec::new();
    go(&atoms, 0, w, &mut Vec::new(), &mut out);
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> DiffPolynomial {
        s.parse().unwrap()
    }

    #[test]
    fn var_packing_round_trips() {
        let v = VarId::u(7, 13);
        assert_eq!((v.family(), v.index(), v.order(), v.weight()), (Family::U, 7, 13, 20));
        let c = VarId::c(5, 3);
        assert_eq!(c.const_pair(), Some((5, 3)));
        assert_eq!(c.order(), 0);
        assert_eq!(c.weight(), 0);
        assert!(c.derivative().is_none());
        assert!(VarId::u(9, 0) < VarId::y(2, 0));
        assert!(VarId::y(9, 9) < VarId::c(2, 1));
        assert!(VarId::u(2, 5) < VarId::u(3, 0));
    }

    #[test]
    fn arithmetic_examples() {
        let u2 = DiffPolynomial::u(2, 0);
        assert!((&u2 + &(-&u2)).is_zero());
        assert_eq!(&u2 * &u2, p("u2^2"));
        let half = rat(1, 2);
        let a = p("u2' + u3").scale(&half);
        let b = p("u2' - u3").scale(&half);
        assert_eq!(&a + &b, p("u2'"));
    }

    #[test]
    fn derive_examples() {
        assert_eq!(p("u2").derive(), p("u2'"));
        assert_eq!(p("u2*u3").derive(), p("u2'*u3 + u2*u3'"));
        assert!(p("c2_1").derive().is_zero());
        assert_eq!(p("u2^3").derive(), p("3*u2^2*u2'"));
        assert_eq!(p("u2").derive_n(4), p("u2^(4)"));
    }

    #[test]
    fn weight_examples() {
        assert_eq!(p("u2''").weight_of(), Homogeneity::Weight(4));
        assert_eq!(p("u2*u3'").weight_of(), Homogeneity::Weight(6));
        assert_eq!(p("u2 + u3").weight_of(), Homogeneity::Mixed);
        assert_eq!(DiffPolynomial::zero().weight_of(), Homogeneity::Zero);
        assert_eq!(p("c3_1*u2' + u3").weight_of(), Homogeneity::Weight(3));
    }

    #[test]
    fn evaluate_examples() {
        let mut z = TriangularSolution::new();
        z.insert(2, p("2/3*u2"));
        assert!(p("3*y2' - 2*u2'").evaluate(&z).unwrap().is_zero());

        let mut z = TriangularSolution::new();
        z.insert(2, p("u3"));
        assert_eq!(p("y2''").evaluate(&z).unwrap(), p("u3''"));
        assert_eq!(p("u2").evaluate(&z).unwrap(), p("u2"));
        assert_eq!(p("y2^2*u2").evaluate(&z).unwrap(), p("u3^2*u2"));
    }

    #[test]
    fn evaluate_rejects_unassigned() {
        let z = TriangularSolution::new();
        match p("y3").evaluate(&z) {
            Err(Error::IncompleteSolution { index: 3 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn homogeneous_monomial_examples() {
        assert_eq!(homogeneous_monomials(2, &[2, 3]), vec![Monomial::var(VarId::u(2, 0))]);
        let w3: BTreeSet<_> = homogeneous_monomials(3, &[2, 3]).into_iter().collect();
        let want: BTreeSet<_> = [VarId::u(2, 1), VarId::u(3, 0)].into_iter().map(Monomial::var).collect();
        assert_eq!(w3, want);
        assert_eq!(homogeneous_monomials(0, &[2]), vec![Monomial::one()]);
        assert!(homogeneous_monomials(1, &[2, 3]).is_empty());
    }

    // Independent enumeration: all exponent vectors over the weight <= w
    // jets, filtered by exact weight.
    fn brute_force_monomials(w: u32, vars: &[u32]) -> BTreeSet<Monomial> {
        let mut atoms = Vec::new();
        for &l in vars {
            for k in 0..=w.saturating_sub(l) {
                atoms.push(VarId::u(l, k));
            }
        }
        let mut out = BTreeSet::new();
        let mut exps = vec![0u32; atoms.len()];
        fn walk(atoms: &[VarId], exps: &mut Vec<u32>, pos: usize, left: u32, out: &mut BTreeSet<Monomial>) {
            if pos == atoms.len() {
                if left == 0 {
                    out.insert(Monomial::from_factors(atoms.iter().copied().zip(exps.iter().copied())));
                }
                return;
            }
            let wt = atoms[pos].weight();
            for e in 0..=left / wt {
                exps[pos] = e;
                walk(atoms, exps, pos + 1, left - e * wt, out);
            }
            exps[pos] = 0;
        }
        walk(&atoms, &mut exps, 0, w, &mut out);
        out
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let w4: BTreeSet<_> = homogeneous_monomials(4, &[2, 3]).into_iter().collect();
        assert_eq!(w4, [p("u2''"), p("u3'"), p("u2^2")].iter().map(|q| q.terms().next().unwrap().0.clone()).collect());
        for w in 0..=9 {
            for vars in [&[2u32][..], &[2, 3], &[2, 3, 4, 5]] {
                let fast = homogeneous_monomials(w, vars);
                let set: BTreeSet<_> = fast.iter().cloned().collect();
                assert_eq!(set.len(), fast.len(), "duplicates at w={w}");
                assert_eq!(set, brute_force_monomials(w, vars), "w={w} vars={vars:?}");
            }
        }
    }

    #[test]
    fn canonical_order_is_weight_then_degree() {
        let q = p("u2^2 + u2'' + u3' + u2");
        let order: Vec<String> = q.terms().map(|(m, _)| m.to_string()).collect();
        assert_eq!(order, ["u2''", "u3'", "u2^2", "u2"]);
    }
}
