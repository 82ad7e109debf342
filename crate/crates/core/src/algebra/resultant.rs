//! Sylvester matrices and resultants of multivariate polynomials with
//! respect to one variable, computed exactly.

use crate::poly::MultiPoly;
use crate::{Error, Result};
use std::collections::HashMap;

/// The Sylvester matrix of f and g with respect to `var`: an (m+l) x (m+l)
/// matrix of polynomials in the remaining variables, where m and l are the
/// degrees of f and g in `var`. Both degrees must be at least 1.
pub fn sylvester_matrix(f: &MultiPoly, g: &MultiPoly, var: u32) -> Result<Vec<Vec<MultiPoly>>> {
    let field = f.field();
    let n = f.num_vars().max(g.num_vars());
    let m = f.degree_in(var);
    let l = g.degree_in(var);
    if m == 0 || l == 0 {
        return Err(Error::Invalid(format!(
            "resultant requires positive degree in x{var} (got {m} and {l})"
        )));
    }
    let fc = f.coeffs_in_var(var);
    let gc = g.coeffs_in_var(var);
    let size = m + l;
    let zero = MultiPoly::zero(field, n);
    let mut mat = vec![vec![zero; size]; size];
    // Column j < l holds the coefficients of x^j * f, highest power first;
    // column l + j holds those of x^j * g.
    for j in 0..l {
        for t in 0..=m {
            mat[j + t][j] = fc[m - t].clone();
        }
    }
    for j in 0..m {
        for t in 0..=l {
            mat[j + t][l + j] = gc[l - t].clone();
        }
    }
    Ok(mat)
}

/// Determinant of a square matrix of polynomials by minor expansion along
/// rows, memoized on the set of unused columns.
fn poly_det(mat: &[Vec<MultiPoly>]) -> Result<MultiPoly> {
    let size = mat.len();
    if size > 16 {
        return Err(Error::BudgetExceeded {
            stage: "resultant",
            detail: format!("{size}x{size} determinant is over budget"),
        });
    }
    let field = mat[0][0].field();
    let n = mat[0][0].num_vars();
    let full: u32 = (1 << size) - 1;
    let mut memo: HashMap<u32, MultiPoly> = HashMap::new();
    memo.insert(0, MultiPoly::constant(field, n, field.one()));

    fn rec(
        mat: &[Vec<MultiPoly>],
        mask: u32,
        memo: &mut HashMap<u32, MultiPoly>,
        field: crate::algebra::Field,
        n: usize,
    ) -> MultiPoly {
        if let Some(hit) = memo.get(&mask) {
            return hit.clone();
        }
        let row = mat.len() - mask.count_ones() as usize;
        let mut acc = MultiPoly::zero(field, n);
        let mut sign = field.one();
        for col in 0..mat.len() {
            if mask & (1 << col) == 0 {
                continue;
            }
            let entry = &mat[row][col];
            if !entry.is_zero() {
                let sub = rec(mat, mask & !(1 << col), memo, field, n);
                acc = acc.add(&entry.mul(&sub).scale(sign));
            }
            sign = -sign;
        }
        memo.insert(mask, acc.clone());
        acc
    }

    Ok(rec(mat, full, &mut memo, field, n))
}

/// The resultant of f and g with respect to `var`: the determinant of their
/// Sylvester matrix, a polynomial in the remaining variables. It vanishes
/// exactly when f and g share a nonconstant common factor involving `var`
/// (or their leading coefficients both vanish).
pub fn sylvester_resultant(f: &MultiPoly, g: &MultiPoly, var: u32) -> Result<MultiPoly> {
    let mat = sylvester_matrix(f, g, var)?;
    poly_det(&mat)
}
