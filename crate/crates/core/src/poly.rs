//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Terms live in a `BTreeMap` keyed by graded-lex monomials, so iteration
//! (and therefore printing) is deterministic. Polynomials carry the arena of
//! variable names they are written in; mixing arenas is an error.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("polynomials live in different variable arenas")]
    ArenaMismatch,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable index {0} out of range")]
    VariableOutOfRange(usize),
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("expected {expected} values, got {got}")]
    MissingAssignment { expected: usize, got: usize },
    #[error("variable `{0}` is already in use")]
    VariableInUse(String),
    #[error("division is not exact")]
    NotDivisible,
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("system is not square: {equations} equations, {unknowns} unknowns")]
    NotSquare { equations: usize, unknowns: usize },
}

/// Ordered set of variable names shared by a family of polynomials.
#[derive(Clone)]
pub struct VarArena {
    names: Arc<Vec<String>>,
}

impl VarArena {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, PolyError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut sorted: Vec<&String> = names.iter().collect();
        sorted.sort();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(PolyError::DuplicateVariable(w[0].clone()));
            }
        }
        Ok(VarArena {
            names: Arc::new(names),
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn try_index(&self, name: &str) -> Result<usize, PolyError> {
        self.index_of(name)
            .ok_or_else(|| PolyError::UnknownVariable(name.to_string()))
    }

    /// The arena with `extra` appended.
    pub fn extended<S: Into<String>>(
        &self,
        extra: impl IntoIterator<Item = S>,
    ) -> Result<Self, PolyError> {
        let mut names = (*self.names).clone();
        for e in extra {
            let e = e.into();
            if names.contains(&e) {
                return Err(PolyError::VariableInUse(e));
            }
            names.push(e);
        }
        VarArena::new(names)
    }

    pub fn same(&self, other: &VarArena) -> bool {
        Arc::ptr_eq(&self.names, &other.names) || self.names == other.names
    }

    pub fn var(&self, i: usize) -> SparsePoly {
        SparsePoly::var(self, i)
    }

    pub fn var_named(&self, name: &str) -> Result<SparsePoly, PolyError> {
        Ok(SparsePoly::var(self, self.try_index(name)?))
    }
}

impl PartialEq for VarArena {
    fn eq(&self, other: &Self) -> bool {
        self.same(other)
    }
}

impl Eq for VarArena {}

impl fmt::Debug for VarArena {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names.iter()).finish()
    }
}

/// Exponent vector, ordered graded-lexicographically (`x0 > x1 > ...`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn from_exponents(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    fn div(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct SparsePoly {
    arena: VarArena,
    terms: BTreeMap<Monomial, BigRational>,
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn integer(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rational_to_complex(q: &BigRational) -> Complex64 {
    Complex64::new(rational_to_f64(q), 0.0)
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // numerator/denominator too large for a direct conversion
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

impl SparsePoly {
    pub fn zero(arena: &VarArena) -> Self {
        SparsePoly {
            arena: arena.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(arena: &VarArena, c: BigRational) -> Self {
        let mut p = SparsePoly::zero(arena);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(arena.len()), c);
        }
        p
    }

    pub fn one(arena: &VarArena) -> Self {
        SparsePoly::constant(arena, BigRational::one())
    }

    pub fn var(arena: &VarArena, i: usize) -> Self {
        assert!(i < arena.len(), "variable index {i} out of range");
        let mut exps = vec![0; arena.len()];
        exps[i] = 1;
        SparsePoly::monomial(arena, Monomial(exps), BigRational::one())
    }

    pub fn monomial(arena: &VarArena, m: Monomial, c: BigRational) -> Self {
        assert_eq!(
            m.0.len(),
            arena.len(),
            "monomial length does not match arena"
        );
        let mut p = SparsePoly::zero(arena);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    /// Product of variables, each index counted once per occurrence.
    pub fn product_of_vars(arena: &VarArena, vars: &[usize]) -> Self {
        let mut exps = vec![0; arena.len()];
        for &v in vars {
            exps[v] += 1;
        }
        SparsePoly::monomial(arena, Monomial(exps), BigRational::one())
    }

    pub fn arena(&self) -> &VarArena {
        &self.arena
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn constant_term(&self) -> BigRational {
        self.coefficient(&Monomial::one(self.arena.len()))
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.0[var]).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(Monomial::degree);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    /// Variables that occur with positive exponent.
    pub fn support(&self) -> Vec<usize> {
        let mut used = vec![false; self.arena.len()];
        for m in self.terms.keys() {
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    used[i] = true;
                }
            }
        }
        (0..used.len()).filter(|&i| used[i]).collect()
    }

    fn check(&self, other: &SparsePoly) -> Result<(), PolyError> {
        if self.arena.same(&other.arena) {
            Ok(())
        } else {
            Err(PolyError::ArenaMismatch)
        }
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use alloc::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn checked_add(&self, other: &SparsePoly) -> Result<SparsePoly, PolyError> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &SparsePoly) -> Result<SparsePoly, PolyError> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &SparsePoly) -> Result<SparsePoly, PolyError> {
        self.check(other)?;
        let mut out = SparsePoly::zero(&self.arena);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &BigRational) -> SparsePoly {
        if c.is_zero() {
            return SparsePoly::zero(&self.arena);
        }
        SparsePoly {
            arena: self.arena.clone(),
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> SparsePoly {
        let mut result = SparsePoly::one(&self.arena);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Formal partial derivative with respect to variable `var`.
    pub fn diff(&self, var: usize) -> Result<SparsePoly, PolyError> {
        if var >= self.arena.len() {
            return Err(PolyError::VariableOutOfRange(var));
        }
        let mut out = SparsePoly::zero(&self.arena);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e > 0 {
                let mut exps = m.0.clone();
                exps[var] -= 1;
                out.add_term(Monomial(exps), c * integer(e as i64));
            }
        }
        Ok(out)
    }

    pub fn diff_named(&self, name: &str) -> Result<SparsePoly, PolyError> {
        self.diff(self.arena.try_index(name)?)
    }

    fn check_len(&self, got: usize) -> Result<(), PolyError> {
        if got != self.arena.len() {
            Err(PolyError::MissingAssignment {
                expected: self.arena.len(),
                got,
            })
        } else {
            Ok(())
        }
    }

    pub fn eval_rational(&self, point: &[BigRational]) -> Result<BigRational, PolyError> {
        self.check_len(point.len())?;
        let mut total = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t *= num_traits::pow(point[i].clone(), e as usize);
                }
            }
            total += t;
        }
        Ok(total)
    }

    pub fn eval_complex(&self, point: &[Complex64]) -> Result<Complex64, PolyError> {
        self.check_len(point.len())?;
        let mut total = Complex64::zero();
        for (m, c) in &self.terms {
            let mut t = rational_to_complex(c);
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t *= point[i].powu(e);
                }
            }
            total += t;
        }
        Ok(total)
    }

    /// Evaluates from a name-keyed assignment; every arena variable must be
    /// present.
    pub fn eval_named(
        &self,
        assignment: &BTreeMap<String, Complex64>,
    ) -> Result<Complex64, PolyError> {
        let mut point = Vec::with_capacity(self.arena.len());
        for name in self.arena.names() {
            match assignment.get(name) {
                Some(&v) => point.push(v),
                None => return Err(PolyError::UnknownVariable(name.clone())),
            }
        }
        self.eval_complex(&point)
    }

    /// Substitutes `images[i]` for variable `i`; the result lives in the
    /// images' arena.
    pub fn compose(&self, images: &[SparsePoly]) -> Result<SparsePoly, PolyError> {
        self.check_len(images.len())?;
        let target = match images.first() {
            Some(p) => p.arena.clone(),
            None => return Ok(self.clone()),
        };
        for im in images {
            if !im.arena.same(&target) {
                return Err(PolyError::ArenaMismatch);
            }
        }
        // cache powers of the images
        let mut powers: Vec<Vec<SparsePoly>> = vec![Vec::new(); images.len()];
        let mut out = SparsePoly::zero(&target);
        for (m, c) in &self.terms {
            let mut t = SparsePoly::constant(&target, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let cache = &mut powers[i];
                if cache.is_empty() {
                    cache.push(SparsePoly::one(&target));
                }
                while cache.len() <= e as usize {
                    let next = cache.last().unwrap() * &images[i];
                    cache.push(next);
                }
                t = &t * &cache[e as usize];
            }
            out = &out + &t;
        }
        Ok(out)
    }

    /// Replaces variable `var` by the constant `value`.
    pub fn substitute_value(
        &self,
        var: usize,
        value: &BigRational,
    ) -> Result<SparsePoly, PolyError> {
        if var >= self.arena.len() {
            return Err(PolyError::VariableOutOfRange(var));
        }
        let mut out = SparsePoly::zero(&self.arena);
        for (m, c) in &self.terms {
            let e = m.0[var];
            let mut exps = m.0.clone();
            exps[var] = 0;
            out.add_term(
                Monomial(exps),
                c * num_traits::pow(value.clone(), e as usize),
            );
        }
        Ok(out)
    }

    /// Re-expresses the polynomial in `target`, sending variable `i` to
    /// `map[i]`; variables mapped to `None` must not occur.
    pub fn rename(
        &self,
        target: &VarArena,
        map: &[Option<usize>],
    ) -> Result<SparsePoly, PolyError> {
        self.check_len(map.len())?;
        let mut out = SparsePoly::zero(target);
        for (m, c) in &self.terms {
            let mut exps = vec![0; target.len()];
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                match map[i] {
                    Some(j) if j < target.len() => exps[j] += e,
                    Some(j) => return Err(PolyError::VariableOutOfRange(j)),
                    None => return Err(PolyError::UnknownVariable(self.arena.name(i).to_string())),
                }
            }
            out.add_term(Monomial(exps), c.clone());
        }
        Ok(out)
    }

    /// Moves the polynomial into an arena containing all of its variables by
    /// name.
    pub fn embed(&self, target: &VarArena) -> Result<SparsePoly, PolyError> {
        let map: Vec<Option<usize>> = self
            .arena
            .names()
            .iter()
            .map(|n| target.index_of(n))
            .collect();
        self.rename(target, &map)
    }

    /// Homogenizes to total degree with variable `z` (which must not occur).
    pub fn homogenize(&self, z: usize) -> Result<SparsePoly, PolyError> {
        if z >= self.arena.len() {
            return Err(PolyError::VariableOutOfRange(z));
        }
        if self.degree_in(z) > 0 {
            return Err(PolyError::VariableInUse(self.arena.name(z).to_string()));
        }
        let d = self.total_degree();
        let mut out = SparsePoly::zero(&self.arena);
        for (m, c) in &self.terms {
            let mut exps = m.0.clone();
            exps[z] = d - m.degree();
            out.add_term(Monomial(exps), c.clone());
        }
        Ok(out)
    }

    /// Exact quotient `self / d`, or `NotDivisible`.
    pub fn exact_div(&self, d: &SparsePoly) -> Result<SparsePoly, PolyError> {
        self.check(d)?;
        let (lm, lc) = match d.leading_term() {
            Some((m, c)) => (m.clone(), c.clone()),
            None => return Err(PolyError::DivisionByZero),
        };
        let mut rem = self.clone();
        let mut quot = SparsePoly::zero(&self.arena);
        while let Some((m, c)) = rem.leading_term() {
            if !lm.divides(m) {
                return Err(PolyError::NotDivisible);
            }
            let qm = m.div(&lm);
            let qc = c / &lc;
            for (dm, dc) in &d.terms {
                rem.add_term(dm.mul(&qm), -(dc * &qc));
            }
            quot.add_term(qm, qc);
        }
        Ok(quot)
    }

    /// Floating-point copy of the coefficients, for compiled evaluation.
    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly::from_terms(
            self.terms
                .iter()
                .map(|(m, c)| (m.0.as_slice(), rational_to_complex(c))),
        )
    }
}

fn write_coefficient_term(
    f: &mut fmt::Formatter<'_>,
    arena: &VarArena,
    m: &Monomial,
    c: &BigRational,
    first: bool,
) -> fmt::Result {
    let neg = c.is_negative();
    let abs = c.abs();
    if first {
        if neg {
            f.write_str("-")?;
        }
    } else if neg {
        f.write_str(" - ")?;
    } else {
        f.write_str(" + ")?;
    }
    let mut factors: Vec<String> = Vec::new();
    for (i, &e) in m.0.iter().enumerate() {
        match e {
            0 => {}
            1 => factors.push(arena.name(i).to_string()),
            _ => factors.push(format!("{}^{}", arena.name(i), e)),
        }
    }
    if factors.is_empty() {
        write!(f, "{abs}")
    } else if abs.is_one() {
        write!(f, "{}", factors.join("*"))
    } else {
        write!(f, "{}*{}", abs, factors.join("*"))
    }
}

impl fmt::Display for SparsePoly {
    /// Highest graded-lex term first, e.g. `t0^2 - 3/2*t1 + 1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            write_coefficient_term(f, &self.arena, m, c, k == 0)?;
        }
        Ok(())
    }
}

impl fmt::Debug for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparsePoly({self})")
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&SparsePoly> for &SparsePoly {
            type Output = SparsePoly;
            /// Panics on arena mismatch; use the `checked_*` form to recover.
            fn $method(self, rhs: &SparsePoly) -> SparsePoly {
                self.$checked(rhs).expect("arena mismatch")
            }
        }
        impl $tr<SparsePoly> for SparsePoly {
            type Output = SparsePoly;
            fn $method(self, rhs: SparsePoly) -> SparsePoly {
                (&self).$checked(&rhs).expect("arena mismatch")
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl Neg for &SparsePoly {
    type Output = SparsePoly;
    fn neg(self) -> SparsePoly {
        SparsePoly {
            arena: self.arena.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }
}

impl Neg for SparsePoly {
    type Output = SparsePoly;
    fn neg(self) -> SparsePoly {
        -&self
    }
}

/// Ordered equations over a shared arena with a declared set of unknowns;
/// the remaining variables are symbolic constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolySystem {
    arena: VarArena,
    equations: Vec<SparsePoly>,
    unknowns: Vec<usize>,
}

impl PolySystem {
    pub fn new(
        arena: &VarArena,
        equations: Vec<SparsePoly>,
        unknowns: Vec<usize>,
    ) -> Result<Self, PolyError> {
        for eq in &equations {
            if !eq.arena.same(arena) {
                return Err(PolyError::ArenaMismatch);
            }
        }
        for &u in &unknowns {
            if u >= arena.len() {
                return Err(PolyError::VariableOutOfRange(u));
            }
        }
        Ok(PolySystem {
            arena: arena.clone(),
            equations,
            unknowns,
        })
    }

    /// System whose unknowns are all arena variables.
    pub fn from_equations(arena: &VarArena, equations: Vec<SparsePoly>) -> Result<Self, PolyError> {
        Self::new(arena, equations, (0..arena.len()).collect())
    }

    pub fn arena(&self) -> &VarArena {
        &self.arena
    }

    pub fn equations(&self) -> &[SparsePoly] {
        &self.equations
    }

    pub fn unknowns(&self) -> &[usize] {
        &self.unknowns
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn is_square(&self) -> bool {
        self.equations.len() == self.unknowns.len()
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.equations
            .iter()
            .map(SparsePoly::total_degree)
            .collect()
    }

    pub fn bezout_number(&self) -> u128 {
        self.degrees().iter().map(|&d| d as u128).product()
    }

    /// Fixes every non-unknown variable to the value given by name and returns
    /// a system over the unknowns only.
    pub fn specialize(
        &self,
        values: &BTreeMap<String, BigRational>,
    ) -> Result<PolySystem, PolyError> {
        let target = VarArena::new(
            self.unknowns
                .iter()
                .map(|&u| self.arena.name(u).to_string()),
        )?;
        let mut images = Vec::with_capacity(self.arena.len());
        for i in 0..self.arena.len() {
            if let Some(pos) = self.unknowns.iter().position(|&u| u == i) {
                images.push(SparsePoly::var(&target, pos));
            } else {
                let name = self.arena.name(i);
                let v = values
                    .get(name)
                    .ok_or_else(|| PolyError::UnknownVariable(name.to_string()))?;
                images.push(SparsePoly::constant(&target, v.clone()));
            }
        }
        let equations = self
            .equations
            .iter()
            .map(|e| e.compose(&images))
            .collect::<Result<Vec<_>, _>>()?;
        PolySystem::from_equations(&target, equations)
    }

    /// Homogenizes every equation with a fresh variable `z`, appended to the
    /// arena and to the unknowns. Already homogeneous systems are returned
    /// unchanged.
    pub fn homogenize(&self, z: &str) -> Result<PolySystem, PolyError> {
        if self.arena.index_of(z).is_some() {
            return Err(PolyError::VariableInUse(z.to_string()));
        }
        if self.equations.iter().all(SparsePoly::is_homogeneous) {
            return Ok(self.clone());
        }
        let arena = self.arena.extended([z])?;
        let zi = arena.len() - 1;
        let equations = self
            .equations
            .iter()
            .map(|e| e.embed(&arena)?.homogenize(zi))
            .collect::<Result<Vec<_>, _>>()?;
        let mut unknowns = self.unknowns.clone();
        unknowns.push(zi);
        PolySystem::new(&arena, equations, unknowns)
    }

    /// Compiles for numerical evaluation; requires every arena variable to be
    /// an unknown, in arena order.
    pub fn compile(&self) -> CompiledSystem {
        CompiledSystem {
            nvars: self.arena.len(),
            polys: self.equations.iter().map(SparsePoly::compile).collect(),
        }
    }
}

impl fmt::Display for PolySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.equations.iter().enumerate() {
            writeln!(f, "f{k} = {e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct CompiledTerm {
    coef: Complex64,
    factors: Vec<(usize, u32)>,
}

/// Complex-double evaluation form of one polynomial with its gradient.
#[derive(Debug, Clone)]
pub struct CompiledPoly {
    terms: Vec<CompiledTerm>,
    /// absolute values of coefficients, used for backward-error scaling
    abs_coefs: Vec<f64>,
}

impl CompiledPoly {
    fn from_terms<'a>(terms: impl Iterator<Item = (&'a [u32], Complex64)>) -> Self {
        let terms: Vec<CompiledTerm> = terms
            .map(|(exps, coef)| CompiledTerm {
                coef,
                factors: exps
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| (i, e))
                    .collect(),
            })
            .collect();
        let abs_coefs = terms.iter().map(|t| t.coef.norm()).collect();
        CompiledPoly { terms, abs_coefs }
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        let mut total = Complex64::zero();
        for t in &self.terms {
            let mut v = t.coef;
            for &(i, e) in &t.factors {
                v *= x[i].powu(e);
            }
            total += v;
        }
        total
    }

    /// `Σ |c_m| |x|^m`, the natural scale of the value at `x`.
    pub fn magnitude(&self, x: &[Complex64]) -> f64 {
        let mut total = 0.0;
        for (t, &a) in self.terms.iter().zip(&self.abs_coefs) {
            let mut v = a;
            for &(i, e) in &t.factors {
                v *= libm::pow(x[i].norm(), e as f64);
            }
            total += v;
        }
        total
    }

    /// Adds the value to `*value` and the gradient into `grad`.
    pub fn eval_with_gradient(
        &self,
        x: &[Complex64],
        value: &mut Complex64,
        grad: &mut [Complex64],
    ) {
        const STACK: usize = 24;
        let mut pows = [Complex64::zero(); STACK];
        for t in &self.terms {
            let k = t.factors.len();
            if k > STACK {
                self.term_with_gradient_slow(t, x, value, grad);
                continue;
            }
            for (j, &(i, e)) in t.factors.iter().enumerate() {
                pows[j] = small_pow(x[i], e);
            }
            let mut full = t.coef;
            for p in &pows[..k] {
                full *= p;
            }
            *value += full;
            for j in 0..k {
                let (i, e) = t.factors[j];
                let mut rest = t.coef;
                for (l, p) in pows[..k].iter().enumerate() {
                    if l != j {
                        rest *= p;
                    }
                }
                let d = if e == 1 {
                    Complex64::one()
                } else {
                    small_pow(x[i], e - 1) * (e as f64)
                };
                grad[i] += rest * d;
            }
        }
    }

    fn term_with_gradient_slow(
        &self,
        t: &CompiledTerm,
        x: &[Complex64],
        value: &mut Complex64,
        grad: &mut [Complex64],
    ) {
        let pows: Vec<Complex64> = t.factors.iter().map(|&(i, e)| x[i].powu(e)).collect();
        *value += pows.iter().fold(t.coef, |a, p| a * p);
        for (j, &(i, e)) in t.factors.iter().enumerate() {
            let rest = pows
                .iter()
                .enumerate()
                .filter(|(l, _)| *l != j)
                .fold(t.coef, |a, (_, p)| a * p);
            grad[i] += rest * x[i].powu(e - 1) * (e as f64);
        }
    }
}

fn small_pow(x: Complex64, e: u32) -> Complex64 {
    match e {
        0 => Complex64::one(),
        1 => x,
        2 => x * x,
        3 => x * x * x,
        _ => x.powu(e),
    }
}

/// A square-or-not system compiled for repeated complex evaluation.
#[derive(Debug, Clone)]
pub struct CompiledSystem {
    nvars: usize,
    polys: Vec<CompiledPoly>,
}

impl CompiledSystem {
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn polys(&self) -> &[CompiledPoly] {
        &self.polys
    }

    pub fn eval(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (o, p) in out.iter_mut().zip(&self.polys) {
            *o = p.eval(x);
        }
    }

    /// Values and row-major Jacobian (`len() × nvars()`).
    pub fn eval_with_jacobian(
        &self,
        x: &[Complex64],
        values: &mut [Complex64],
        jac: &mut [Complex64],
    ) {
        let n = self.nvars;
        for (k, p) in self.polys.iter().enumerate() {
            values[k] = Complex64::zero();
            let row = &mut jac[k * n..(k + 1) * n];
            row.iter_mut().for_each(|c| *c = Complex64::zero());
            p.eval_with_gradient(x, &mut values[k], row);
        }
    }

    /// Largest `|f_k(x)| / (1 + Σ |c| |x|^m)` over the equations.
    pub fn relative_residual(&self, x: &[Complex64]) -> f64 {
        self.polys
            .iter()
            .map(|p| p.eval(x).norm() / (1.0 + p.magnitude(x)))
            .fold(0.0, f64::max)
    }

    pub fn absolute_residual(&self, x: &[Complex64]) -> f64 {
        self.polys
            .iter()
            .map(|p| p.eval(x).norm())
            .fold(0.0, f64::max)
    }
}
