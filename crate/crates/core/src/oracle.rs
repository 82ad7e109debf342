//! Black-box evaluation access to polynomials, with exact derivative,
//! restriction, and composition combinators, query counting, and
//! probabilistic identity testing.

use crate::algebra::unipoly::inverse_vandermonde;
use crate::algebra::{Field, FieldElement, FieldMatrix};
use crate::poly::MultiPoly;
use crate::{Error, Result};
use rand::RngCore;
use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

/// Black-box access to an n-variable polynomial over a prime field.
///
/// An oracle carries a total degree bound and a per-variable degree bound
/// (1 for multilinear polynomials); derived oracles consume base queries
/// through the shared counter of the oracle they were built from, so query
/// budgets can be audited from the outside.
#[derive(Clone)]
pub struct Oracle {
    field: Field,
    num_vars: usize,
    degree_bound: usize,
    var_degree_bound: usize,
    eval_fn: Arc<dyn Fn(&[FieldElement]) -> FieldElement + Send + Sync>,
    counter: Arc<AtomicU64>,
}

impl Oracle {
    pub fn from_fn(
        field: Field,
        num_vars: usize,
        degree_bound: usize,
        var_degree_bound: usize,
        f: impl Fn(&[FieldElement]) -> FieldElement + Send + Sync + 'static,
    ) -> Oracle {
        Oracle {
            field,
            num_vars,
            degree_bound,
            var_degree_bound: var_degree_bound.min(degree_bound),
            eval_fn: Arc::new(f),
            counter: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn from_poly(p: &MultiPoly) -> Oracle {
        let vdb = (0..p.num_vars() as u32)
            .map(|v| p.degree_in(v))
            .max()
            .unwrap_or(0)
            .max(if p.is_zero() { 0 } else { 1 })
            .min(p.degree());
        let owned = p.clone();
        Oracle::from_fn(p.field(), p.num_vars(), p.degree(), vdb.max(1), move |x| {
            owned.eval(x)
        })
    }

    pub fn zero(field: Field, num_vars: usize) -> Oracle {
        Oracle::from_fn(field, num_vars, 0, 0, move |_| field.zero())
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn var_degree_bound(&self) -> usize {
        self.var_degree_bound
    }

    /// Queries made through this oracle (shared across clones).
    pub fn query_count(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }

    pub fn eval(&self, point: &[FieldElement]) -> FieldElement {
        assert_eq!(point.len(), self.num_vars, "point arity mismatch");
        self.counter.fetch_add(1, Ordering::Relaxed);
        (self.eval_fn)(point)
    }

    /// Order-`order` partial derivative in one variable.
    ///
    /// Each evaluation interpolates the univariate slice through the query
    /// point at the nodes 0..=D, where D is the per-variable degree bound,
    /// so it costs at most D + 1 base queries (2 for multilinear inputs).
    pub fn derivative(&self, var: usize, order: usize) -> Oracle {
        assert!(var < self.num_vars);
        let field = self.field;
        let d = self.var_degree_bound;
        let new_db = self.degree_bound.saturating_sub(order);
        if order > d {
            return Oracle::zero(field, self.num_vars);
        }
        let nodes: Vec<FieldElement> = (0..=d as u64).map(|i| field.el(i)).collect();
        let vinv = inverse_vandermonde(field, &nodes).expect("distinct nodes");
        // Falling factorials i (i-1) ... (i-order+1) for the term-wise
        // derivative of the interpolated slice.
        let falling: Vec<FieldElement> = (0..=d)
            .map(|i| {
                let mut acc = field.one();
                for j in 0..order {
                    acc *= field.from_i64(i as i64 - j as i64);
                }
                acc
            })
            .collect();
        let base = self.clone();
        Oracle {
            field,
            num_vars: self.num_vars,
            degree_bound: new_db,
            var_degree_bound: self.var_degree_bound.min(new_db),
            counter: Arc::new(AtomicU64::new(0)),
            eval_fn: Arc::new(move |x: &[FieldElement]| {
                let mut probe = x.to_vec();
                let values: Vec<FieldElement> = nodes
                    .iter()
                    .map(|&t| {
                        probe[var] = t;
                        base.eval(&probe)
                    })
                    .collect();
                let coeffs = vinv.mul_vec(&values).expect("shape");
                let mut acc = field.zero();
                let mut pw = field.one();
                for i in order..=d {
                    acc += falling[i] * coeffs[i] * pw;
                    pw *= x[var];
                }
                acc
            }),
        }
    }

    /// Composes with a matrix: the result maps x to f(Mx).
    pub fn compose_matrix(&self, m: &FieldMatrix) -> Oracle {
        assert_eq!(m.num_rows(), self.num_vars);
        let base = self.clone();
        let mat = m.clone();
        Oracle {
            field: self.field,
            num_vars: m.num_cols(),
            degree_bound: self.degree_bound,
            // Composition mixes variables, so only the total bound holds
            // per variable.
            var_degree_bound: self.degree_bound,
            counter: Arc::new(AtomicU64::new(0)),
            eval_fn: Arc::new(move |x: &[FieldElement]| {
                let y = mat.mul_vec(x).expect("shape");
                base.eval(&y)
            }),
        }
    }

    /// Order-`order` directional derivative along `u` (which must be
    /// nonzero): change basis so `u` is the first coordinate axis,
    /// differentiate, and change back.
    pub fn directional_derivative(&self, u: &[FieldElement], order: usize) -> Result<Oracle> {
        if u.len() != self.num_vars {
            return Err(Error::Invalid("direction arity mismatch".into()));
        }
        let Some(pivot) = u.iter().position(|c| !c.is_zero()) else {
            return Err(Error::Invalid("zero direction".into()));
        };
        let n = self.num_vars;
        let field = self.field;
        let mut a = FieldMatrix::zero(field, n, n);
        for (i, &c) in u.iter().enumerate() {
            a[(i, 0)] = c;
        }
        let mut col = 1;
        for j in 0..n {
            if j == pivot {
                continue;
            }
            a[(j, col)] = field.one();
            col += 1;
        }
        let a_inv = a.inverse().map_err(|_| Error::Internal("basis completion singular".into()))?;
        // h(x) = (d^order (f o A) / dy_0^order)(A^{-1} x).
        Ok(self.compose_matrix(&a).derivative(0, order).compose_matrix(&a_inv))
    }

    /// Fixes every variable outside `keep` to its coordinate in `point`.
    /// The arity is unchanged; only the kept coordinates of a query matter.
    pub fn restrict(&self, keep: &BTreeSet<u32>, point: &[FieldElement]) -> Oracle {
        assert_eq!(point.len(), self.num_vars);
        let base = self.clone();
        let fixed = point.to_vec();
        let keep = keep.clone();
        Oracle {
            field: self.field,
            num_vars: self.num_vars,
            degree_bound: self.degree_bound,
            var_degree_bound: self.var_degree_bound,
            counter: Arc::new(AtomicU64::new(0)),
            eval_fn: Arc::new(move |x: &[FieldElement]| {
                let merged: Vec<FieldElement> = (0..x.len())
                    .map(|v| {
                        if keep.contains(&(v as u32)) {
                            x[v]
                        } else {
                            fixed[v]
                        }
                    })
                    .collect();
                base.eval(&merged)
            }),
        }
    }

    /// Shifts the argument: the result maps x to f(x + a).
    pub fn shift(&self, a: &[FieldElement]) -> Oracle {
        assert_eq!(a.len(), self.num_vars);
        let base = self.clone();
        let off = a.to_vec();
        Oracle {
            field: self.field,
            num_vars: self.num_vars,
            degree_bound: self.degree_bound,
            var_degree_bound: self.var_degree_bound,
            counter: Arc::new(AtomicU64::new(0)),
            eval_fn: Arc::new(move |x: &[FieldElement]| {
                let shifted: Vec<FieldElement> =
                    x.iter().zip(&off).map(|(&xi, &ai)| xi + ai).collect();
                base.eval(&shifted)
            }),
        }
    }

    /// Univariate restriction to the line t -> a + t(b - a).
    pub fn restrict_line(&self, a: &[FieldElement], b: &[FieldElement]) -> Oracle {
        assert_eq!(a.len(), self.num_vars);
        assert_eq!(b.len(), self.num_vars);
        let base = self.clone();
        let a = a.to_vec();
        let b = b.to_vec();
        Oracle {
            field: self.field,
            num_vars: 1,
            degree_bound: self.degree_bound,
            var_degree_bound: self.degree_bound,
            counter: Arc::new(AtomicU64::new(0)),
            eval_fn: Arc::new(move |t: &[FieldElement]| {
                let pt: Vec<FieldElement> = a
                    .iter()
                    .zip(&b)
                    .map(|(&ai, &bi)| ai + t[0] * (bi - ai))
                    .collect();
                base.eval(&pt)
            }),
        }
    }

    /// Memoizing wrapper: repeated queries at the same point cost one base
    /// query in total.
    pub fn with_cache(&self) -> Oracle {
        let base = self.clone();
        let cache: Mutex<HashMap<Vec<u64>, FieldElement>> = Mutex::new(HashMap::new());
        Oracle {
            field: self.field,
            num_vars: self.num_vars,
            degree_bound: self.degree_bound,
            var_degree_bound: self.var_degree_bound,
            counter: Arc::new(AtomicU64::new(0)),
            eval_fn: Arc::new(move |x: &[FieldElement]| {
                let key: Vec<u64> = x.iter().map(|e| e.value()).collect();
                if let Some(&v) = cache.lock().unwrap().get(&key) {
                    return v;
                }
                let v = base.eval(x);
                cache.lock().unwrap().insert(key, v);
                v
            }),
        }
    }
}

/// Number of random evaluations needed to push the one-sided identity-test
/// error below 2^-exponent for degree-`deg` polynomials over `field`.
fn pit_trials(field: Field, deg: usize, exponent: u32) -> Result<u32> {
    let d = deg.max(1) as f64;
    let p = field.prime() as f64;
    if p <= d {
        return Err(Error::Invalid(format!(
            "field size {} too small for degree {deg} identity testing",
            field.prime()
        )));
    }
    let bits_per_trial = (p / d).log2();
    Ok(((exponent as f64 / bits_per_trial).ceil() as u32).max(1))
}

/// Probabilistic equality test with one-sided error at most 2^-exponent:
/// `false` means certainly unequal, with a witness point retained by
/// [`pit_witness`].
pub fn pit_equal(a: &Oracle, b: &Oracle, exponent: u32, rng: &mut dyn RngCore) -> Result<bool> {
    Ok(pit_witness(a, b, exponent, rng)?.is_none())
}

/// Like [`pit_equal`], but returns the first point where the oracles
/// disagree, if any trial finds one.
pub fn pit_witness(
    a: &Oracle,
    b: &Oracle,
    exponent: u32,
    rng: &mut dyn RngCore,
) -> Result<Option<Vec<FieldElement>>> {
    if a.field() != b.field() || a.num_vars() != b.num_vars() {
        return Err(Error::Invalid("identity test across different spaces".into()));
    }
    let field = a.field();
    let deg = a.degree_bound().max(b.degree_bound());
    let trials = pit_trials(field, deg, exponent)?;
    for _ in 0..trials {
        let point: Vec<FieldElement> = (0..a.num_vars()).map(|_| field.rand(rng)).collect();
        if a.eval(&point) != b.eval(&point) {
            return Ok(Some(point));
        }
    }
    Ok(None)
}

/// Probabilistic zero test with one-sided error at most 2^-exponent.
pub fn pit_zero(a: &Oracle, exponent: u32, rng: &mut dyn RngCore) -> Result<bool> {
    pit_equal(a, &Oracle::zero(a.field(), a.num_vars()), exponent, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{Monomial, MultiPoly};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn sum_pow(field: Field, n: usize, d: u32) -> MultiPoly {
        let s = MultiPoly::from_terms(
            field,
            n,
            (0..n as u32).map(|v| (Monomial::var(v), field.one())),
        );
        let mut acc = MultiPoly::constant(field, n, field.one());
        for _ in 0..d {
            acc = acc.mul(&s);
        }
        acc
    }

    #[test]
    fn derivative_oracle_matches_symbolic() {
        let k = Field::default_field();
        let p = MultiPoly::from_terms(
            k,
            2,
            vec![
                (Monomial::from_pairs(vec![(0, 3)]), k.one()),
                (Monomial::var(1), k.one()),
            ],
        );
        let o = Oracle::from_poly(&p).derivative(0, 2);
        assert_eq!(o.eval(&[k.el(2), k.el(7)]), k.el(12));
        let sym = p.derivative(0).derivative(0);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..20 {
            let pt: Vec<_> = (0..2).map(|_| k.rand(&mut rng)).collect();
            assert_eq!(o.eval(&pt), sym.eval(&pt));
        }
    }

    #[test]
    fn derivative_query_budget() {
        let k = Field::default_field();
        let p = sum_pow(k, 3, 5);
        let o = Oracle::from_poly(&p);
        let d = o.derivative(1, 2);
        let before = o.query_count();
        d.eval(&[k.el(3), k.el(1), k.el(4)]);
        let used = o.query_count() - before;
        assert!(used <= 6, "one derivative evaluation used {used} > d+1 queries");
    }

    #[test]
    fn directional_derivative_of_cube() {
        let k = Field::default_field();
        let p = sum_pow(k, 2, 3);
        let o = Oracle::from_poly(&p);
        let d = o.directional_derivative(&[k.one(), k.one()], 1).unwrap();
        // 6 (x0 + x1)^2
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..20 {
            let pt: Vec<_> = (0..2).map(|_| k.rand(&mut rng)).collect();
            let s = pt[0] + pt[1];
            assert_eq!(d.eval(&pt), k.el(6) * s * s);
        }
    }

    #[test]
    fn multilinear_derivative_uses_two_points() {
        let k = Field::default_field();
        let p = MultiPoly::from_terms(
            k,
            4,
            vec![(
                Monomial::from_pairs(vec![(0, 1), (1, 1), (2, 1), (3, 1)]),
                k.el(3),
            )],
        );
        let o = Oracle::from_poly(&p);
        assert_eq!(o.var_degree_bound(), 1);
        let d = o.derivative(2, 1);
        let before = o.query_count();
        let v = d.eval(&[k.el(2), k.el(5), k.el(9), k.el(7)]);
        assert_eq!(v, k.el(3 * 2 * 5 * 7));
        assert_eq!(o.query_count() - before, 2);
    }

    #[test]
    fn restrict_and_shift() {
        let k = Field::default_field();
        let p = sum_pow(k, 3, 2);
        let o = Oracle::from_poly(&p);
        let keep: BTreeSet<u32> = [1u32].into_iter().collect();
        let a = [k.el(10), k.el(20), k.el(30)];
        let r = o.restrict(&keep, &a);
        // (10 + x1 + 30)^2
        let got = r.eval(&[k.zero(), k.el(2), k.zero()]);
        assert_eq!(got, k.el(42 * 42));
        let s = o.shift(&a);
        assert_eq!(s.eval(&[k.one(), k.one(), k.one()]), k.el(63 * 63));
    }

    #[test]
    fn cache_avoids_repeat_queries() {
        let k = Field::default_field();
        let p = sum_pow(k, 2, 2);
        let o = Oracle::from_poly(&p);
        let c = o.with_cache();
        let pt = [k.el(3), k.el(4)];
        let v1 = c.eval(&pt);
        let before = o.query_count();
        let v2 = c.eval(&pt);
        assert_eq!(v1, v2);
        assert_eq!(o.query_count(), before, "cache hit must not consume base queries");
    }

    #[test]
    fn pit_separates_and_accepts() {
        let k = Field::default_field();
        let p = sum_pow(k, 2, 3);
        let q = sum_pow(k, 2, 2);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        assert!(pit_equal(&Oracle::from_poly(&p), &Oracle::from_poly(&p), 40, &mut rng).unwrap());
        assert!(!pit_equal(&Oracle::from_poly(&p), &Oracle::from_poly(&q), 40, &mut rng).unwrap());
        let w = pit_witness(&Oracle::from_poly(&p), &Oracle::from_poly(&q), 40, &mut rng)
            .unwrap()
            .unwrap();
        assert_ne!(p.eval(&w), q.eval(&w));
    }
}
