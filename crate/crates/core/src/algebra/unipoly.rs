//! Univariate polynomials over a prime field: arithmetic, interpolation,
//! root finding, and error-corrected decoding of evaluation samples.

use super::{Field, FieldElement, FieldMatrix};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// A univariate polynomial with ascending coefficients and no trailing
/// zeros; the zero polynomial has an empty coefficient vector.
#[derive(Clone, PartialEq, Eq)]
pub struct UniPoly {
    field: Field,
    coeffs: Vec<FieldElement>,
}

impl UniPoly {
    pub fn zero(field: Field) -> UniPoly {
        UniPoly { field, coeffs: Vec::new() }
    }

    pub fn constant(c: FieldElement) -> UniPoly {
        UniPoly::from_coeffs(c.field(), vec![c])
    }

    /// The monomial x.
    pub fn x(field: Field) -> UniPoly {
        UniPoly::from_coeffs(field, vec![field.zero(), field.one()])
    }

    /// Builds c * x^deg.
    pub fn monomial(c: FieldElement, deg: usize) -> UniPoly {
        let field = c.field();
        let mut coeffs = vec![field.zero(); deg + 1];
        coeffs[deg] = c;
        UniPoly::from_coeffs(field, coeffs)
    }

    pub fn from_coeffs(field: Field, mut coeffs: Vec<FieldElement>) -> UniPoly {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { field, coeffs }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Coefficient of x^i (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> FieldElement {
        self.coeffs.get(i).copied().unwrap_or_else(|| self.field.zero())
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn leading(&self) -> Option<FieldElement> {
        self.coeffs.last().copied()
    }

    pub fn eval(&self, x: FieldElement) -> FieldElement {
        let mut acc = self.field.zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect();
        UniPoly::from_coeffs(self.field, coeffs)
    }

    pub fn sub(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) - other.coeff(i)).collect();
        UniPoly::from_coeffs(self.field, coeffs)
    }

    pub fn neg(&self) -> UniPoly {
        UniPoly::from_coeffs(self.field, self.coeffs.iter().map(|&c| -c).collect())
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero(self.field);
        }
        let mut coeffs = vec![self.field.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        UniPoly::from_coeffs(self.field, coeffs)
    }

    pub fn scale(&self, c: FieldElement) -> UniPoly {
        UniPoly::from_coeffs(self.field, self.coeffs.iter().map(|&a| a * c).collect())
    }

    /// Substitutes x -> a*x + b.
    pub fn compose_linear(&self, a: FieldElement, b: FieldElement) -> UniPoly {
        let lin = UniPoly::from_coeffs(self.field, vec![b, a]);
        let mut acc = UniPoly::zero(self.field);
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(&lin).add(&UniPoly::constant(c));
        }
        acc
    }

    pub fn derivative(&self) -> UniPoly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| c * self.field.el(i as u64))
            .collect();
        UniPoly::from_coeffs(self.field, coeffs)
    }

    /// Euclidean division; fails when `divisor` is zero.
    pub fn divrem(&self, divisor: &UniPoly) -> Result<(UniPoly, UniPoly)> {
        let Some(dd) = divisor.degree() else {
            return Err(Error::DivisionByZero);
        };
        let lead_inv = divisor.leading().unwrap().inv()?;
        let mut rem = self.coeffs.clone();
        let mut quot = vec![self.field.zero(); self.coeffs.len().saturating_sub(dd)];
        while rem.len() > dd {
            let shift = rem.len() - 1 - dd;
            let q = *rem.last().unwrap() * lead_inv;
            if !q.is_zero() {
                quot[shift] = q;
                for i in 0..=dd {
                    let sub = q * divisor.coeffs[i];
                    rem[shift + i] -= sub;
                }
            }
            rem.pop();
        }
        Ok((
            UniPoly::from_coeffs(self.field, quot),
            UniPoly::from_coeffs(self.field, rem),
        ))
    }

    /// Monic scalar multiple; fails on the zero polynomial.
    pub fn monic(&self) -> Result<UniPoly> {
        let lead = self.leading().ok_or(Error::DivisionByZero)?;
        Ok(self.scale(lead.inv()?))
    }

    /// Monic greatest common divisor (gcd with 0 is the other argument).
    pub fn gcd(&self, other: &UniPoly) -> UniPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.divrem(&b).expect("nonzero divisor");
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic().expect("nonzero")
        }
    }

    /// self^e mod m by repeated squaring.
    pub fn pow_mod(&self, mut e: u64, m: &UniPoly) -> Result<UniPoly> {
        let mut base = self.divrem(m)?.1;
        let mut acc = UniPoly::constant(self.field.one()).divrem(m)?.1;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).divrem(m)?.1;
            }
            base = base.mul(&base).divrem(m)?.1;
            e >>= 1;
        }
        Ok(acc)
    }

    /// Exact interpolation through points with distinct abscissas.
    pub fn interpolate(field: Field, points: &[(FieldElement, FieldElement)]) -> Result<UniPoly> {
        for (i, (xi, _)) in points.iter().enumerate() {
            for (xj, _) in &points[..i] {
                if xi == xj {
                    return Err(Error::Invalid("duplicate interpolation node".into()));
                }
            }
        }
        let mut acc = UniPoly::zero(field);
        for (i, &(xi, yi)) in points.iter().enumerate() {
            if yi.is_zero() {
                continue;
            }
            let mut num = UniPoly::constant(field.one());
            let mut den = field.one();
            for (j, &(xj, _)) in points.iter().enumerate() {
                if i == j {
                    continue;
                }
                num = num.mul(&UniPoly::from_coeffs(field, vec![-xj, field.one()]));
                den *= xi - xj;
            }
            acc = acc.add(&num.scale(yi * den.inv()?));
        }
        Ok(acc)
    }

    /// Distinct roots in the field, sorted by value.
    ///
    /// Small fields are scanned directly; large fields use gcd with x^p - x
    /// followed by equal-degree splitting. The random shifts are seeded from
    /// the polynomial so the result is deterministic.
    pub fn roots(&self) -> Vec<FieldElement> {
        if self.is_zero() {
            return Vec::new();
        }
        let p = self.field.prime();
        if p <= 4096 {
            let mut out: Vec<FieldElement> = (0..p)
                .map(|v| self.field.el(v))
                .filter(|&x| self.eval(x).is_zero())
                .collect();
            out.sort_by_key(|e| e.value());
            return out;
        }
        let seed = self
            .coeffs
            .iter()
            .fold(0x9e3779b97f4a7c15u64, |h, c| {
                h.rotate_left(7) ^ c.value().wrapping_mul(0xff51afd7ed558ccd)
            });
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let monic = self.monic().expect("nonzero");
        // x^p mod f, so gcd picks out the split part with all roots.
        let xp = UniPoly::x(self.field)
            .pow_mod(p, &monic)
            .expect("nonzero modulus");
        let split = monic.gcd(&xp.sub(&UniPoly::x(self.field)));
        let mut out = Vec::new();
        let mut stack = vec![split];
        while let Some(h) = stack.pop() {
            match h.degree() {
                None | Some(0) => {}
                Some(1) => {
                    let root = -h.coeff(0) * h.coeff(1).inv().expect("nonzero lead");
                    out.push(root);
                }
                Some(_) => {
                    // Equal-degree splitting: gcd with (x+delta)^((p-1)/2) - 1
                    // separates the roots for a random shift delta.
                    loop {
                        let delta = self.field.rand(&mut rng);
                        let shifted = UniPoly::from_coeffs(self.field, vec![delta, self.field.one()]);
                        let g = shifted
                            .pow_mod((p - 1) / 2, &h)
                            .expect("nonzero modulus")
                            .sub(&UniPoly::constant(self.field.one()));
                        let d = h.gcd(&g);
                        if let Some(dd) = d.degree() {
                            if dd > 0 && dd < h.degree().unwrap() {
                                let (q, r) = h.divrem(&d).expect("nonzero divisor");
                                debug_assert!(r.is_zero());
                                stack.push(d);
                                stack.push(q);
                                break;
                            }
                        }
                    }
                }
            }
        }
        out.sort_by_key(|e| e.value());
        out
    }

    /// Roots with multiplicities, sorted by root value.
    pub fn roots_with_multiplicity(&self) -> Vec<(FieldElement, usize)> {
        let mut out = Vec::new();
        let mut h = self.clone();
        for r in self.roots() {
            let lin = UniPoly::from_coeffs(self.field, vec![-r, self.field.one()]);
            let mut mult = 0;
            loop {
                let (q, rem) = h.divrem(&lin).expect("nonzero divisor");
                if rem.is_zero() {
                    mult += 1;
                    h = q;
                } else {
                    break;
                }
            }
            out.push((r, mult));
        }
        out
    }
}

impl std::fmt::Debug for UniPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("{c}*x"),
                _ => format!("{c}*x^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Inverse Vandermonde matrix for the given distinct nodes:
/// multiplying a value vector by it yields interpolation coefficients.
pub fn inverse_vandermonde(field: Field, nodes: &[FieldElement]) -> Result<FieldMatrix> {
    let n = nodes.len();
    let mut v = FieldMatrix::zero(field, n, n);
    for (i, &x) in nodes.iter().enumerate() {
        let mut pw = field.one();
        for j in 0..n {
            v[(i, j)] = pw;
            pw *= x;
        }
    }
    // Coefficients c solve V c = values, so the inverse maps values to c.
    v.inverse().map_err(|_| Error::Invalid("duplicate interpolation nodes".into()))
}

/// Decodes evaluation samples of a polynomial of degree at most `deg_bound`
/// with at most `max_errors` corrupted values (Berlekamp-Welch).
///
/// Requires distinct sample points and at least deg_bound + 2*max_errors + 1
/// of them. The candidate error-locator degree shrinks from `max_errors`
/// down to 0; every candidate answer is verified against the samples before
/// it is returned, so failure is always reported as an error and never as a
/// wrong polynomial.
pub fn rs_decode(
    field: Field,
    points: &[(FieldElement, FieldElement)],
    deg_bound: usize,
    max_errors: usize,
) -> Result<UniPoly> {
    let n = points.len();
    if n < deg_bound + 2 * max_errors + 1 {
        return Err(Error::Invalid(format!(
            "{n} samples cannot correct {max_errors} errors at degree {deg_bound}"
        )));
    }
    for (i, (xi, _)) in points.iter().enumerate() {
        for (xj, _) in &points[..i] {
            if xi == xj {
                return Err(Error::Invalid("duplicate sample point".into()));
            }
        }
    }
    for e in (0..=max_errors).rev() {
        // Unknowns: q_0..q_{deg_bound+e} and locator coefficients l_0..l_{e-1}
        // with monic locator L(x) = x^e + sum l_i x^i, constrained by
        // Q(x_j) = y_j * L(x_j) at every sample.
        let nq = deg_bound + e + 1;
        let mut rows = Vec::with_capacity(n);
        let mut rhs = Vec::with_capacity(n);
        for &(x, y) in points {
            let mut row = Vec::with_capacity(nq + e);
            let mut pw = field.one();
            for _ in 0..nq {
                row.push(pw);
                pw *= x;
            }
            let mut pw = field.one();
            for _ in 0..e {
                row.push(-(y * pw));
                pw *= x;
            }
            rows.push(row);
            rhs.push(y * x.pow(e as u64));
        }
        let m = FieldMatrix::from_rows(field, rows)?;
        let Some(sol) = m.solve(&rhs)? else {
            continue;
        };
        let q = UniPoly::from_coeffs(field, sol[..nq].to_vec());
        let mut loc_coeffs = sol[nq..].to_vec();
        loc_coeffs.push(field.one());
        let loc = UniPoly::from_coeffs(field, loc_coeffs);
        let Ok((cand, rem)) = q.divrem(&loc) else {
            continue;
        };
        if !rem.is_zero() || cand.degree().is_some_and(|d| d > deg_bound) {
            continue;
        }
        let mismatches = points.iter().filter(|&&(x, y)| cand.eval(x) != y).count();
        if mismatches <= max_errors {
            return Ok(cand);
        }
    }
    Err(Error::DecodeFailure(format!(
        "no degree-{deg_bound} polynomial within {max_errors} errors of {n} samples"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> Field {
        Field::new(p).unwrap()
    }

    fn poly(field: Field, cs: &[i64]) -> UniPoly {
        UniPoly::from_coeffs(field, cs.iter().map(|&c| field.from_i64(c)).collect())
    }

    #[test]
    fn divrem_identity() {
        let k = f(101);
        let a = poly(k, &[3, 0, 5, 1, 2]);
        let b = poly(k, &[7, 1, 4]);
        let (q, r) = a.divrem(&b).unwrap();
        assert_eq!(q.mul(&b).add(&r), a);
        assert!(r.degree() < b.degree());
    }

    #[test]
    fn gcd_of_planted_common_factor() {
        let k = f(101);
        let common = poly(k, &[1, 1]); // x + 1
        let a = common.mul(&poly(k, &[3, 0, 1]));
        let b = common.mul(&poly(k, &[5, 1]));
        let g = a.gcd(&b);
        assert_eq!(g, common.monic().unwrap());
    }

    #[test]
    fn interpolation_roundtrip() {
        let k = f(101);
        let p = poly(k, &[2, 0, 0, 7, 1]);
        let pts: Vec<_> = (0..6).map(|i| (k.el(i), p.eval(k.el(i)))).collect();
        assert_eq!(UniPoly::interpolate(k, &pts).unwrap(), p);
    }

    #[test]
    fn compose_linear_matches_eval() {
        let k = f(101);
        let p = poly(k, &[4, 3, 0, 1]);
        let q = p.compose_linear(k.el(5), k.el(9));
        for v in 0..20 {
            let x = k.el(v);
            assert_eq!(q.eval(x), p.eval(k.el(5) * x + k.el(9)));
        }
    }

    #[test]
    fn roots_small_field() {
        let k = f(7);
        // (x-1)(x-2)(x-2)
        let p = poly(k, &[1, -1]).neg(); // -(1 - x) = x - 1
        let q = poly(k, &[-2, 1]);
        let prod = p.mul(&q).mul(&q);
        let roots = prod.roots();
        assert_eq!(roots.iter().map(|e| e.value()).collect::<Vec<_>>(), vec![1, 2]);
        let with_mult = prod.roots_with_multiplicity();
        assert_eq!(
            with_mult.iter().map(|(r, m)| (r.value(), *m)).collect::<Vec<_>>(),
            vec![(1, 1), (2, 2)]
        );
    }

    #[test]
    fn roots_large_field() {
        let k = Field::default_field();
        let rs = [k.el(3), k.el(1_000_000), k.el(17)];
        let mut p = UniPoly::constant(k.el(5));
        for &r in &rs {
            p = p.mul(&UniPoly::from_coeffs(k, vec![-r, k.one()]));
        }
        let mut expect: Vec<u64> = rs.iter().map(|e| e.value()).collect();
        expect.sort_unstable();
        assert_eq!(p.roots().iter().map(|e| e.value()).collect::<Vec<_>>(), expect);
    }

    #[test]
    fn roots_of_irreducible_quadratic() {
        let k = f(7);
        // x^2 + 1 has no roots mod 7 (3 and 5 are the squares 2 and 4...).
        let p = poly(k, &[1, 0, 1]);
        assert!(p.roots().is_empty());
    }

    #[test]
    fn rs_decode_exact_and_corrupted() {
        let k = Field::default_field();
        let p = poly(k, &[9, 0, 4, 1]);
        let deg = 3;
        let e = 2;
        let mut pts: Vec<_> = (1..=(deg + 2 * e + 3) as u64)
            .map(|i| (k.el(i), p.eval(k.el(i))))
            .collect();
        assert_eq!(rs_decode(k, &pts, deg, e).unwrap(), p);
        pts[1].1 += k.el(5);
        pts[4].1 += k.el(1);
        assert_eq!(rs_decode(k, &pts, deg, e).unwrap(), p);
    }

    #[test]
    fn rs_decode_rejects_insufficient_samples() {
        let k = f(101);
        let pts: Vec<_> = (0..5u64).map(|i| (k.el(i), k.el(i))).collect();
        assert!(matches!(rs_decode(k, &pts, 2, 2, ), Err(Error::Invalid(_))));
    }

    #[test]
    fn inverse_vandermonde_interpolates() {
        let k = f(101);
        let nodes: Vec<_> = (0..4u64).map(|i| k.el(i)).collect();
        let vinv = inverse_vandermonde(k, &nodes).unwrap();
        let p = poly(k, &[3, 1, 0, 2]);
        let values: Vec<_> = nodes.iter().map(|&x| p.eval(x)).collect();
        let coeffs = vinv.mul_vec(&values).unwrap();
        assert_eq!(UniPoly::from_coeffs(k, coeffs), p);
    }
}
