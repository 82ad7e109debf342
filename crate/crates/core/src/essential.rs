//! Reduction to essential variables: an invertible change of coordinates
//! after which the polynomial depends only on its first m inputs.

use crate::algebra::{Field, FieldElement, FieldMatrix};
use crate::oracle::Oracle;
use crate::poly::MultiPoly;
use crate::{Error, Result};
use rand::RngCore;

/// An invertible change of coordinates x = A y such that f(A y) depends
/// only on y_0..y_{m-1}.
///
/// The first m columns of A are standard basis vectors (a greedy completion
/// against the kernel of the derivative span), so for multilinear f the
/// reduced polynomial is a restriction of f up to variable renaming and in
/// particular stays multilinear.
#[derive(Clone, Debug)]
pub struct EssentialReduction {
    pub m: usize,
    pub a: FieldMatrix,
    pub a_inv: FieldMatrix,
}

impl EssentialReduction {
    /// Oracle for the reduced polynomial g(y) = f(Ay); it depends only on
    /// the first m coordinates.
    pub fn reduced_oracle(&self, o: &Oracle) -> Oracle {
        o.compose_matrix(&self.a)
    }
}

pub(crate) fn kernel_to_reduction(
    field: Field,
    n: usize,
    kernel: &[Vec<FieldElement>],
) -> Result<EssentialReduction> {
    let m = n - kernel.len();
    // Greedily pick standard basis vectors independent of the kernel (and of
    // one another) for the leading columns.
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    let mut span_rows: Vec<Vec<FieldElement>> = kernel.to_vec();
    for j in 0..n {
        if chosen.len() == m {
            break;
        }
        let mut e = vec![field.zero(); n];
        e[j] = field.one();
        let mut candidate = span_rows.clone();
        candidate.push(e.clone());
        let rank_before = FieldMatrix::from_rows(field, span_rows.clone())?.rank();
        let rank_after = FieldMatrix::from_rows(field, candidate)?.rank();
        if rank_after > rank_before {
            chosen.push(j);
            span_rows.push(e);
        }
    }
    if chosen.len() != m {
        return Err(Error::Internal("standard basis completion failed".into()));
    }
    let mut a = FieldMatrix::zero(field, n, n);
    for (col, &j) in chosen.iter().enumerate() {
        a[(j, col)] = field.one();
    }
    for (t, v) in kernel.iter().enumerate() {
        for i in 0..n {
            a[(i, m + t)] = v[i];
        }
    }
    let a_inv = a
        .inverse()
        .map_err(|_| Error::Internal("essential change of basis singular".into()))?;
    Ok(EssentialReduction { m, a, a_inv })
}

/// Monte Carlo essential-variable reduction from black-box access.
///
/// The kernel of the span of first-order derivatives is estimated from
/// random samples; the candidate reduction is then validated on probe pairs
/// that agree on the first m coordinates, and the sample set is refreshed
/// if an inconsistency is detected.
pub fn reduce(o: &Oracle, rng: &mut dyn RngCore) -> Result<EssentialReduction> {
    let field = o.field();
    let n = o.num_vars();
    if n == 0 {
        return kernel_to_reduction(field, 0, &[]);
    }
    // Cheap pre-pass: variables the polynomial provably depends on get a
    // derivative oracle; the rest contribute zero rows, so the sample matrix
    // only needs columns for the dependent variables.
    let derivs: Vec<Oracle> = (0..n).map(|v| o.derivative(v, 1)).collect();
    let mut dependent = vec![false; n];
    for (v, d) in derivs.iter().enumerate() {
        for _ in 0..4 {
            let pt: Vec<FieldElement> = (0..n).map(|_| field.rand(rng)).collect();
            if !d.eval(&pt).is_zero() {
                dependent[v] = true;
                break;
            }
        }
    }
    let dep_vars: Vec<usize> = (0..n).filter(|&v| dependent[v]).collect();

    'attempt: for _ in 0..4 {
        let samples = 4 * (dep_vars.len() + 1);
        let mut rows = Vec::with_capacity(samples);
        for _ in 0..samples {
            let pt: Vec<FieldElement> = (0..n).map(|_| field.rand(rng)).collect();
            rows.push(dep_vars.iter().map(|&v| derivs[v].eval(&pt)).collect());
        }
        let small = FieldMatrix::from_rows(field, rows)?;
        // Lift the kernel back to all n coordinates: independent variables
        // contribute their own standard basis kernel vectors.
        let mut kernel: Vec<Vec<FieldElement>> = Vec::new();
        for v in 0..n {
            if !dependent[v] {
                let mut e = vec![field.zero(); n];
                e[v] = field.one();
                kernel.push(e);
            }
        }
        for kv in small.kernel_basis() {
            let mut full = vec![field.zero(); n];
            for (idx, &v) in dep_vars.iter().enumerate() {
                full[v] = kv[idx];
            }
            kernel.push(full);
        }
        let red = kernel_to_reduction(field, n, &kernel)?;
        // Validate: queries agreeing on the first m reduced coordinates must
        // agree on the value.
        let g = red.reduced_oracle(o);
        for _ in 0..8 {
            let mut y1: Vec<FieldElement> = (0..n).map(|_| field.rand(rng)).collect();
            let y2: Vec<FieldElement> = (0..n).map(|_| field.rand(rng)).collect();
            for t in 0..red.m {
                y1[t] = y2[t];
            }
            if g.eval(&y1) != g.eval(&y2) {
                continue 'attempt;
            }
        }
        return Ok(red);
    }
    Err(Error::BudgetExceeded {
        stage: "essential-reduce",
        detail: "validation kept failing after sample refreshes".into(),
    })
}

/// Exact symbolic twin of [`reduce`] for explicitly given polynomials: the
/// kernel is computed from the derivative coefficient matrix, no sampling.
pub fn reduce_poly(f: &MultiPoly) -> Result<EssentialReduction> {
    let field = f.field();
    let n = f.num_vars();
    let derivs: Vec<MultiPoly> = (0..n as u32).map(|v| f.derivative(v)).collect();
    // Columns index the union of monomials; a kernel vector a satisfies
    // sum_v a_v df/dx_v = 0.
    let monomials: Vec<_> = {
        let mut set = std::collections::BTreeSet::new();
        for d in &derivs {
            for (m, _) in d.terms() {
                set.insert(m.clone());
            }
        }
        set.into_iter().collect()
    };
    let rows: Vec<Vec<FieldElement>> = monomials
        .iter()
        .map(|m| derivs.iter().map(|d| d.coeff(m)).collect())
        .collect();
    let kernel = if rows.is_empty() {
        // Constant polynomial: every direction is inessential.
        (0..n)
            .map(|v| {
                let mut e = vec![field.zero(); n];
                e[v] = field.one();
                e
            })
            .collect()
    } else {
        FieldMatrix::from_rows(field, rows)?.kernel_basis()
    };
    kernel_to_reduction(field, n, &kernel)
}
