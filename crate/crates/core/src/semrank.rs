//! Semantic rank of multilinear polynomials: variable-disjoint
//! factorization, linear-factor stripping, and the rank of the partial
//! derivative matrix of the linear-factor-free core.

use crate::algebra::{FieldElement, FieldMatrix};
use crate::poly::{LinearForm, MultiPoly};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeSet;

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let r = self.find(self.parent[i]);
            self.parent[i] = r;
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Deterministic generator seeded from the polynomial's content, used for
/// the nonvanishing-point search so the factorization needs no caller
/// randomness.
fn content_rng(f: &MultiPoly) -> ChaCha12Rng {
    let mut h = 0xa076_1d64_78bd_642fu64;
    for (m, c) in f.terms() {
        for &(v, e) in m.pairs() {
            h = h.rotate_left(9) ^ ((v as u64) << 32 | e as u64);
        }
        h = h.rotate_left(13) ^ c.value();
    }
    ChaCha12Rng::seed_from_u64(h)
}

/// Exact factorization of a nonzero multilinear polynomial into its
/// variable-disjoint irreducible factors: returns (scalar, factors) with
/// each factor normalized so its lexicographically least coefficient is 1,
/// and scalar * product(factors) equal to the input.
///
/// Two variables share a factor exactly when f * d2f/dxi dxj differs from
/// (df/dxi)(df/dxj); the result is verified by exact re-expansion.
pub fn ml_factor(f: &MultiPoly) -> Result<(FieldElement, Vec<MultiPoly>)> {
    let field = f.field();
    if f.is_zero() {
        return Err(Error::Invalid("factoring the zero polynomial".into()));
    }
    if !f.is_multilinear() {
        return Err(Error::Invalid("input is not multilinear".into()));
    }
    let support: Vec<u32> = f.support().into_iter().collect();
    if support.is_empty() {
        let (c, _) = f.normalize_scalar();
        return Ok((c, Vec::new()));
    }
    let derivs: Vec<MultiPoly> = support.iter().map(|&v| f.derivative(v)).collect();
    let mut uf = UnionFind::new(support.len());
    for i in 0..support.len() {
        for j in (i + 1)..support.len() {
            if uf.find(i) == uf.find(j) {
                continue;
            }
            let second = derivs[i].derivative(support[j]);
            if f.mul(&second) != derivs[i].mul(&derivs[j]) {
                uf.union(i, j);
            }
        }
    }
    let mut components: Vec<Vec<u32>> = Vec::new();
    {
        let mut by_root: std::collections::BTreeMap<usize, Vec<u32>> = Default::default();
        for (idx, &v) in support.iter().enumerate() {
            by_root.entry(uf.find(idx)).or_default().push(v);
        }
        components.extend(by_root.into_values());
    }
    let mut rng = content_rng(f);
    for _ in 0..32 {
        let z: Vec<FieldElement> = (0..f.num_vars()).map(|_| field.rand(&mut rng)).collect();
        if f.eval(&z).is_zero() {
            continue;
        }
        let mut factors = Vec::with_capacity(components.len());
        for comp in &components {
            let keep: BTreeSet<u32> = comp.iter().copied().collect();
            let g = f.restrict_complement(&keep, &z);
            let (_, normalized) = g.normalize_scalar();
            factors.push(normalized);
        }
        let mut prod = MultiPoly::constant(field, f.num_vars(), field.one());
        for g in &factors {
            prod = prod.mul(g);
        }
        let Some((lead_m, lead_c)) = prod.lex_least_term() else {
            continue;
        };
        let scalar = f.coeff(lead_m) * lead_c.inv()?;
        if prod.scale(scalar) == *f {
            factors.sort_by(|a, b| {
                a.lex_least_term()
                    .map(|(m, _)| m.clone())
                    .cmp(&b.lex_least_term().map(|(m, _)| m.clone()))
            });
            return Ok((scalar, factors));
        }
    }
    Err(Error::Internal(
        "variable-disjoint factor verification failed on every probe point".into(),
    ))
}

/// The factorization split into its linear part and the rest.
#[derive(Clone, Debug)]
pub struct StrippedLinear {
    /// Product of all linear factors, scalar included (1 when there are
    /// none).
    pub lin: MultiPoly,
    /// The linear factors of `lin`, canonically scaled.
    pub factors: Vec<LinearForm>,
    /// Scalar such that lin = scalar * product of factors.
    pub scalar: FieldElement,
    /// Product of the nonlinear factors; carries the global scalar when no
    /// linear factor exists. lin * residual equals the input.
    pub residual: MultiPoly,
}

/// Splits a nonzero multilinear polynomial as f = lin * residual where lin
/// is the product of all linear factors of f. A constant input is returned
/// as (f, 1); an input with no linear factors as (1, f).
pub fn strip_linear_factors(f: &MultiPoly) -> Result<StrippedLinear> {
    let field = f.field();
    let n = f.num_vars();
    let one = MultiPoly::constant(field, n, field.one());
    let (scalar, factors) = ml_factor(f)?;
    if factors.is_empty() {
        // Constant polynomial: (f, 1).
        return Ok(StrippedLinear {
            lin: f.clone(),
            factors: Vec::new(),
            scalar,
            residual: one,
        });
    }
    let mut lin_forms = Vec::new();
    let mut lin = MultiPoly::constant(field, n, field.one());
    let mut residual = MultiPoly::constant(field, n, field.one());
    let mut any_linear = false;
    for g in &factors {
        if g.degree() <= 1 {
            any_linear = true;
            let (s, canon) = LinearForm::from_poly(g)?.canonical();
            lin = lin.mul(&canon.to_poly(n)).scale(s);
            lin_forms.push(canon);
        } else {
            residual = residual.mul(g);
        }
    }
    let mut lin_scalar = field.one();
    if any_linear {
        lin = lin.scale(scalar);
        lin_scalar = {
            // lin = lin_scalar * product(canonical factors).
            let mut prod = MultiPoly::constant(field, n, field.one());
            for c in &lin_forms {
                prod = prod.mul(&c.to_poly(n));
            }
            let (lm, lc) = prod.lex_least_term().expect("nonzero");
            lin.coeff(lm) * lc.inv()?
        };
    } else {
        residual = residual.scale(scalar);
        lin = one;
    }
    debug_assert_eq!(lin.mul(&residual), *f);
    Ok(StrippedLinear { lin, factors: lin_forms, scalar: lin_scalar, residual })
}

/// When the polynomial is a product of affine forms, returns the scalar and
/// the canonical forms; otherwise `None`.
pub fn as_form_product(f: &MultiPoly) -> Result<Option<(FieldElement, Vec<LinearForm>)>> {
    let (mut scalar, factors) = ml_factor(f)?;
    let mut forms = Vec::with_capacity(factors.len());
    for g in &factors {
        if g.degree() > 1 {
            return Ok(None);
        }
        let (s, canon) = LinearForm::from_poly(g)?.canonical();
        scalar *= s;
        forms.push(canon);
    }
    Ok(Some((scalar, forms)))
}

/// The partial derivative matrix of a multilinear polynomial: one row per
/// support variable, one column per monomial occurring in any derivative,
/// columns in lexicographic monomial order.
pub fn pd_matrix(f: &MultiPoly) -> FieldMatrix {
    let field = f.field();
    let derivs: Vec<MultiPoly> = f.support().into_iter().map(|v| f.derivative(v)).collect();
    let monomials: Vec<_> = {
        let mut set = BTreeSet::new();
        for d in &derivs {
            for (m, _) in d.terms() {
                set.insert(m.clone());
            }
        }
        set.into_iter().collect()
    };
    let rows: Vec<Vec<FieldElement>> = derivs
        .iter()
        .map(|d| monomials.iter().map(|m| d.coeff(m)).collect())
        .collect();
    if rows.is_empty() {
        return FieldMatrix::zero(field, 0, 0);
    }
    FieldMatrix::from_rows(field, rows).expect("uniform width")
}

/// Semantic rank of a multilinear polynomial: strip all linear factors and
/// take the rank of the core's partial derivative matrix; products of
/// affine forms (and constants, and zero) have rank 0.
pub fn sem_rank(f: &MultiPoly) -> Result<usize> {
    if f.is_zero() {
        return Ok(0);
    }
    let stripped = strip_linear_factors(f)?;
    if stripped.residual.degree() == 0 {
        return Ok(0);
    }
    Ok(pd_matrix(&stripped.residual).rank())
}

/// Semantic distance between two multilinear polynomials: the semantic
/// rank of their sum, or `None` when the sum is identically zero.
pub fn sem_distance(f: &MultiPoly, g: &MultiPoly) -> Result<Option<usize>> {
    let s = f.add(g);
    if s.is_zero() {
        return Ok(None);
    }
    Ok(Some(sem_rank(&s)?))
}
