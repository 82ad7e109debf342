//! Sparse multivariate polynomials, affine linear forms, and exact dense
//! interpolation from evaluation access.

use crate::algebra::unipoly::{inverse_vandermonde, UniPoly};
use crate::algebra::{Field, FieldElement, FieldMatrix};
use crate::oracle::Oracle;
use crate::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};

/// A monomial: sorted (variable, exponent) pairs with positive exponents.
/// The empty monomial is 1.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Monomial {
    pairs: Vec<(u32, u32)>,
}

impl Monomial {
    pub fn one() -> Monomial {
        Monomial { pairs: Vec::new() }
    }

    pub fn var(v: u32) -> Monomial {
        Monomial { pairs: vec![(v, 1)] }
    }

    /// Normalizes arbitrary (variable, exponent) pairs: sorts, merges
    /// duplicates, drops zero exponents.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, u32)>) -> Monomial {
        let mut m: BTreeMap<u32, u32> = BTreeMap::new();
        for (v, e) in pairs {
            if e > 0 {
                *m.entry(v).or_insert(0) += e;
            }
        }
        Monomial { pairs: m.into_iter().collect() }
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn is_one(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.pairs.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent_of(&self, v: u32) -> u32 {
        self.pairs
            .binary_search_by_key(&v, |&(w, _)| w)
            .map(|i| self.pairs[i].1)
            .unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.pairs.iter().map(|&(v, _)| v)
    }

    pub fn is_multilinear(&self) -> bool {
        self.pairs.iter().all(|&(_, e)| e == 1)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial::from_pairs(self.pairs.iter().chain(other.pairs.iter()).copied())
    }

    /// Divides by x_v once; `None` when v is absent.
    pub fn div_var(&self, v: u32) -> Option<Monomial> {
        if self.exponent_of(v) == 0 {
            return None;
        }
        Some(Monomial::from_pairs(self.pairs.iter().map(|&(w, e)| {
            if w == v {
                (w, e - 1)
            } else {
                (w, e)
            }
        })))
    }

    /// Dense exponent vector of length n.
    pub fn exponents(&self, n: usize) -> Vec<u32> {
        let mut out = vec![0u32; n];
        for &(v, e) in &self.pairs {
            out[v as usize] = e;
        }
        out
    }

    pub fn eval(&self, point: &[FieldElement], field: Field) -> FieldElement {
        let mut acc = field.one();
        for &(v, e) in &self.pairs {
            acc *= point[v as usize].pow(e as u64);
        }
        acc
    }
}

/// A sparse multivariate polynomial over a prime field.
///
/// Zero coefficients are never stored; equality is exact coefficient
/// equality. Variables are indexed 0..num_vars.
#[derive(Clone, PartialEq, Eq)]
pub struct MultiPoly {
    field: Field,
    num_vars: usize,
    terms: BTreeMap<Monomial, FieldElement>,
}

impl MultiPoly {
    pub fn zero(field: Field, num_vars: usize) -> MultiPoly {
        MultiPoly { field, num_vars, terms: BTreeMap::new() }
    }

    pub fn constant(field: Field, num_vars: usize, c: FieldElement) -> MultiPoly {
        let mut p = MultiPoly::zero(field, num_vars);
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn from_terms(
        field: Field,
        num_vars: usize,
        terms: impl IntoIterator<Item = (Monomial, FieldElement)>,
    ) -> MultiPoly {
        let mut p = MultiPoly::zero(field, num_vars);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Adds c * m, dropping the entry if the coefficient cancels.
    pub fn add_term(&mut self, m: Monomial, c: FieldElement) {
        if c.is_zero() {
            return;
        }
        debug_assert!(m.vars().all(|v| (v as usize) < self.num_vars));
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, FieldElement)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coeff(&self, m: &Monomial) -> FieldElement {
        self.terms.get(m).copied().unwrap_or_else(|| self.field.zero())
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|m| m.degree() as usize).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: u32) -> usize {
        self.terms
            .keys()
            .map(|m| m.exponent_of(v) as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn support(&self) -> BTreeSet<u32> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    pub fn is_multilinear(&self) -> bool {
        self.terms.keys().all(|m| m.is_multilinear())
    }

    pub fn add(&self, other: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn neg(&self) -> MultiPoly {
        let mut out = MultiPoly::zero(self.field, self.num_vars);
        for (m, c) in self.terms() {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn scale(&self, c: FieldElement) -> MultiPoly {
        let mut out = MultiPoly::zero(self.field, self.num_vars);
        if c.is_zero() {
            return out;
        }
        for (m, a) in self.terms() {
            out.add_term(m.clone(), a * c);
        }
        out
    }

    pub fn mul(&self, other: &MultiPoly) -> MultiPoly {
        let mut out = MultiPoly::zero(self.field, self.num_vars.max(other.num_vars));
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn eval(&self, point: &[FieldElement]) -> FieldElement {
        debug_assert!(point.len() >= self.num_vars);
        let mut acc = self.field.zero();
        for (m, c) in self.terms() {
            acc += c * m.eval(point, self.field);
        }
        acc
    }

    /// Substitutes constants for the given variables.
    pub fn restrict(&self, assign: &BTreeMap<u32, FieldElement>) -> MultiPoly {
        let mut out = MultiPoly::zero(self.field, self.num_vars);
        for (m, c) in self.terms() {
            let mut coeff = c;
            let mut kept = Vec::new();
            for &(v, e) in m.pairs() {
                match assign.get(&v) {
                    Some(&a) => coeff *= a.pow(e as u64),
                    None => kept.push((v, e)),
                }
                if coeff.is_zero() {
                    break;
                }
            }
            out.add_term(Monomial::from_pairs(kept), coeff);
        }
        out
    }

    /// Keeps the variables in `keep` free and fixes every other variable to
    /// its coordinate in `point`.
    pub fn restrict_complement(&self, keep: &BTreeSet<u32>, point: &[FieldElement]) -> MultiPoly {
        let assign: BTreeMap<u32, FieldElement> = (0..self.num_vars as u32)
            .filter(|v| !keep.contains(v))
            .map(|v| (v, point[v as usize]))
            .collect();
        self.restrict(&assign)
    }

    pub fn derivative(&self, v: u32) -> MultiPoly {
        let mut out = MultiPoly::zero(self.field, self.num_vars);
        for (m, c) in self.terms() {
            let e = m.exponent_of(v);
            if e == 0 {
                continue;
            }
            let lowered = m.div_var(v).expect("variable present");
            out.add_term(lowered, c * self.field.el(e as u64));
        }
        out
    }

    /// Substitutes x_v -> forms[v] for every variable. All forms must share
    /// a variable count, which becomes the output's.
    pub fn substitute_linear(&self, forms: &[LinearForm]) -> MultiPoly {
        assert_eq!(forms.len(), self.num_vars, "one form per variable");
        let out_vars = forms.first().map_or(0, |f| f.num_vars());
        let mut out = MultiPoly::zero(self.field, out_vars);
        for (m, c) in self.terms() {
            let mut prod = MultiPoly::constant(self.field, out_vars, self.field.one());
            for &(v, e) in m.pairs() {
                let fp = forms[v as usize].to_poly(out_vars);
                for _ in 0..e {
                    prod = prod.mul(&fp);
                }
            }
            out = out.add(&prod.scale(c));
        }
        out
    }

    /// Composes with a square matrix: returns g(x) = f(Mx).
    pub fn compose_matrix(&self, m: &FieldMatrix) -> MultiPoly {
        assert_eq!(m.num_rows(), self.num_vars);
        let forms: Vec<LinearForm> = (0..self.num_vars)
            .map(|v| LinearForm::new(self.field, m.row(v).to_vec(), self.field.zero()))
            .collect();
        self.substitute_linear(&forms)
    }

    /// Shifts the argument: returns g(x) = f(x + a).
    pub fn shift(&self, a: &[FieldElement]) -> MultiPoly {
        let forms: Vec<LinearForm> = (0..self.num_vars)
            .map(|v| {
                let mut coeffs = vec![self.field.zero(); self.num_vars];
                coeffs[v] = self.field.one();
                LinearForm::new(self.field, coeffs, a[v])
            })
            .collect();
        self.substitute_linear(&forms)
    }

    /// Restriction to the parametrized line t -> a + t(b - a), as a
    /// univariate polynomial in t with f(a) at t = 0 and f(b) at t = 1.
    pub fn restrict_to_line(&self, a: &[FieldElement], b: &[FieldElement]) -> UniPoly {
        let mut acc = UniPoly::zero(self.field);
        for (m, c) in self.terms() {
            let mut prod = UniPoly::constant(self.field.one());
            for &(v, e) in m.pairs() {
                let lin = UniPoly::from_coeffs(
                    self.field,
                    vec![a[v as usize], b[v as usize] - a[v as usize]],
                );
                for _ in 0..e {
                    prod = prod.mul(&lin);
                }
            }
            acc = acc.add(&prod.scale(c));
        }
        acc
    }

    /// The lexicographically least stored term.
    pub fn lex_least_term(&self) -> Option<(&Monomial, FieldElement)> {
        self.terms.iter().next().map(|(m, &c)| (m, c))
    }

    /// Writes f = c * g with g's lexicographically least coefficient 1.
    /// The zero polynomial yields (1, 0).
    pub fn normalize_scalar(&self) -> (FieldElement, MultiPoly) {
        match self.lex_least_term() {
            None => (self.field.one(), self.clone()),
            Some((_, c)) => (c, self.scale(c.inv().expect("nonzero coefficient"))),
        }
    }

    /// Homogenizes to the target degree with a fresh last variable.
    pub fn homogenize(&self, target_deg: usize) -> Result<MultiPoly> {
        let z = self.num_vars as u32;
        let mut out = MultiPoly::zero(self.field, self.num_vars + 1);
        for (m, c) in self.terms() {
            let d = m.degree() as usize;
            if d > target_deg {
                return Err(Error::Invalid(format!(
                    "term degree {d} above homogenization degree {target_deg}"
                )));
            }
            let mut pairs: Vec<(u32, u32)> = m.pairs().to_vec();
            if d < target_deg {
                pairs.push((z, (target_deg - d) as u32));
            }
            out.add_term(Monomial::from_pairs(pairs), c);
        }
        Ok(out)
    }

    /// Coefficient polynomials with respect to one variable, ascending by
    /// power; the entries do not mention `v`.
    pub fn coeffs_in_var(&self, v: u32) -> Vec<MultiPoly> {
        let d = self.degree_in(v);
        let mut out = vec![MultiPoly::zero(self.field, self.num_vars); d + 1];
        for (m, c) in self.terms() {
            let e = m.exponent_of(v) as usize;
            let rest = Monomial::from_pairs(
                m.pairs().iter().copied().filter(|&(w, _)| w != v),
            );
            out[e].add_term(rest, c);
        }
        out
    }
}

impl std::fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .terms()
            .map(|(m, c)| {
                if m.is_one() {
                    format!("{c}")
                } else {
                    let vars: Vec<String> = m
                        .pairs()
                        .iter()
                        .map(|&(v, e)| {
                            if e == 1 {
                                format!("x{v}")
                            } else {
                                format!("x{v}^{e}")
                            }
                        })
                        .collect();
                    format!("{c}*{}", vars.join("*"))
                }
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// An affine linear form c_0 x_0 + ... + c_{n-1} x_{n-1} + constant.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LinearForm {
    field: Field,
    coeffs: Vec<FieldElement>,
    constant: FieldElement,
}

impl LinearForm {
    pub fn new(field: Field, coeffs: Vec<FieldElement>, constant: FieldElement) -> LinearForm {
        LinearForm { field, coeffs, constant }
    }

    pub fn zero(field: Field, n: usize) -> LinearForm {
        LinearForm::new(field, vec![field.zero(); n], field.zero())
    }

    pub fn constant_form(field: Field, n: usize, c: FieldElement) -> LinearForm {
        LinearForm::new(field, vec![field.zero(); n], c)
    }

    /// Extracts an affine form from a polynomial of degree at most 1.
    pub fn from_poly(p: &MultiPoly) -> Result<LinearForm> {
        if p.degree() > 1 {
            return Err(Error::Invalid("polynomial has degree above 1".into()));
        }
        let field = p.field();
        let mut coeffs = vec![field.zero(); p.num_vars()];
        let mut constant = field.zero();
        for (m, c) in p.terms() {
            if m.is_one() {
                constant = c;
            } else {
                coeffs[m.pairs()[0].0 as usize] = c;
            }
        }
        Ok(LinearForm { field, coeffs, constant })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn num_vars(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn constant(&self) -> FieldElement {
        self.constant
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.linear_part_is_zero()
    }

    pub fn linear_part_is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn support(&self) -> BTreeSet<u32> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(v, _)| v as u32)
            .collect()
    }

    pub fn eval(&self, point: &[FieldElement]) -> FieldElement {
        let mut acc = self.constant;
        for (v, &c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                acc += c * point[v];
            }
        }
        acc
    }

    /// Pairs the homogeneous linear part with a vector: sum c_v u_v.
    pub fn pair_linear(&self, u: &[FieldElement]) -> FieldElement {
        let mut acc = self.field.zero();
        for (v, &c) in self.coeffs.iter().enumerate() {
            acc += c * u[v];
        }
        acc
    }

    pub fn to_poly(&self, num_vars: usize) -> MultiPoly {
        assert!(num_vars >= self.coeffs.len());
        let mut p = MultiPoly::zero(self.field, num_vars);
        for (v, &c) in self.coeffs.iter().enumerate() {
            p.add_term(Monomial::var(v as u32), c);
        }
        p.add_term(Monomial::one(), self.constant);
        p
    }

    pub fn add(&self, other: &LinearForm) -> LinearForm {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        LinearForm::new(
            self.field,
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| a + b)
                .collect(),
            self.constant + other.constant,
        )
    }

    pub fn scale(&self, c: FieldElement) -> LinearForm {
        LinearForm::new(
            self.field,
            self.coeffs.iter().map(|&a| a * c).collect(),
            self.constant * c,
        )
    }

    /// Substitutes constants for the given variables, folding them into the
    /// constant term.
    pub fn restrict(&self, assign: &BTreeMap<u32, FieldElement>) -> LinearForm {
        let mut constant = self.constant;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(v, &c)| match assign.get(&(v as u32)) {
                Some(&a) => {
                    constant += c * a;
                    self.field.zero()
                }
                None => c,
            })
            .collect();
        LinearForm::new(self.field, coeffs, constant)
    }

    /// Returns the form x -> self(Mx); coefficients beyond the matrix's row
    /// count must be zero.
    pub fn compose_matrix(&self, m: &FieldMatrix) -> LinearForm {
        let mut coeffs = vec![self.field.zero(); m.num_cols()];
        for (t, &c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for p in 0..m.num_cols() {
                coeffs[p] += c * m[(t, p)];
            }
        }
        LinearForm::new(self.field, coeffs, self.constant)
    }

    /// The coefficient vector extended by the constant: length n + 1.
    pub fn vector_repr(&self) -> Vec<FieldElement> {
        let mut v = self.coeffs.clone();
        v.push(self.constant);
        v
    }

    /// Writes the form as scalar * canonical where the canonical form's
    /// first nonzero coordinate (coefficients, then constant) is 1. The
    /// zero form is its own canonical form with scalar 1.
    pub fn canonical(&self) -> (FieldElement, LinearForm) {
        let repr = self.vector_repr();
        match repr.iter().find(|c| !c.is_zero()) {
            None => (self.field.one(), self.clone()),
            Some(&lead) => {
                let inv = lead.inv().expect("nonzero");
                (lead, self.scale(inv))
            }
        }
    }
}

/// Exact dense interpolation of the first `m` variables of an oracle on the
/// grid nodes^m (all other inputs fixed to 0). The result is an
/// `m`-variable polynomial of degree below `nodes.len()` in each variable.
fn interpolate_grid(o: &Oracle, m: usize, nodes: &[FieldElement]) -> Result<MultiPoly> {
    let field = o.field();
    let width = nodes.len();
    let total = (width as u128).checked_pow(m as u32).ok_or_else(|| Error::BudgetExceeded {
        stage: "interpolate",
        detail: "grid size overflow".into(),
    })?;
    if total > 1 << 22 {
        return Err(Error::BudgetExceeded {
            stage: "interpolate",
            detail: format!("grid of {total} points is over budget"),
        });
    }
    let total = total as usize;
    let mut values = Vec::with_capacity(total);
    let mut point = vec![field.zero(); o.num_vars()];
    for idx in 0..total {
        let mut rest = idx;
        for ax in 0..m {
            point[ax] = nodes[rest % width];
            rest /= width;
        }
        values.push(o.eval(&point));
    }
    // Apply the inverse Vandermonde transform along each axis in turn;
    // afterwards values[idx] is the coefficient of the monomial whose
    // exponent on axis ax is the ax-th digit of idx in base `width`.
    let vinv = inverse_vandermonde(field, nodes)?;
    let mut stride = 1usize;
    for _ax in 0..m {
        let block = stride * width;
        for base in (0..total).step_by(block) {
            for off in 0..stride {
                let mut slice = Vec::with_capacity(width);
                for t in 0..width {
                    slice.push(values[base + off + t * stride]);
                }
                let coeffs = vinv.mul_vec(&slice)?;
                for t in 0..width {
                    values[base + off + t * stride] = coeffs[t];
                }
            }
        }
        stride = block;
    }
    let mut out = MultiPoly::zero(field, m);
    for (idx, &c) in values.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mut rest = idx;
        let mut pairs = Vec::new();
        for ax in 0..m {
            let e = (rest % width) as u32;
            rest /= width;
            if e > 0 {
                pairs.push((ax as u32, e));
            }
        }
        out.add_term(Monomial::from_pairs(pairs), c);
    }
    Ok(out)
}

/// Dense interpolation of the first `m` variables up to degree `deg` per
/// variable, other inputs fixed to 0.
pub fn interpolate_dense(o: &Oracle, m: usize, deg: usize) -> Result<MultiPoly> {
    let field = o.field();
    if field.prime() <= deg as u64 {
        return Err(Error::Invalid(format!(
            "field size {} does not support degree-{deg} interpolation",
            field.prime()
        )));
    }
    let nodes: Vec<FieldElement> = (0..=deg as u64).map(|i| field.el(i)).collect();
    interpolate_grid(o, m, &nodes)
}

/// Multilinear interpolation of the first `m` variables on the {0,1}^m
/// grid, other inputs fixed to 0. Exact when the oracle is multilinear in
/// those variables.
pub fn interpolate_multilinear(o: &Oracle, m: usize) -> Result<MultiPoly> {
    let field = o.field();
    let nodes = vec![field.zero(), field.one()];
    interpolate_grid(o, m, &nodes)
}
