//! Depth-3 circuit representations: sums of products of affine forms, sums
//! of powers of affine forms, syntactic rank and distance, minimality, and
//! planted-instance generators for tests.

use crate::algebra::{Field, FieldElement, FieldMatrix};
use crate::oracle::{pit_zero, Oracle};
use crate::poly::{LinearForm, MultiPoly};
use crate::{Error, Result};
use rand::{Rng, RngCore};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// One multiplication gate: scalar * product of affine forms.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProductGate {
    pub scalar: FieldElement,
    pub forms: Vec<LinearForm>,
}

impl ProductGate {
    pub fn degree(&self) -> usize {
        self.forms.len()
    }

    pub fn eval(&self, point: &[FieldElement]) -> FieldElement {
        let mut acc = self.scalar;
        for form in &self.forms {
            if acc.is_zero() {
                break;
            }
            acc *= form.eval(point);
        }
        acc
    }

    pub fn expand(&self, num_vars: usize) -> MultiPoly {
        let field = self.scalar.field();
        let mut acc = MultiPoly::constant(field, num_vars, self.scalar);
        for form in &self.forms {
            acc = acc.mul(&form.to_poly(num_vars));
        }
        acc
    }

    pub fn support(&self) -> BTreeSet<u32> {
        self.forms.iter().flat_map(|f| f.support()).collect()
    }

    /// A gate is multilinear when its forms touch pairwise disjoint
    /// variable sets.
    pub fn is_multilinear(&self) -> bool {
        let mut seen = BTreeSet::new();
        for form in &self.forms {
            for v in form.support() {
                if !seen.insert(v) {
                    return false;
                }
            }
        }
        true
    }

    /// Substitutes constants for variables; forms that collapse to
    /// constants are folded into the scalar. Returns `None` when the gate
    /// vanishes.
    pub fn restrict(&self, assign: &BTreeMap<u32, FieldElement>) -> Option<ProductGate> {
        let mut scalar = self.scalar;
        let mut forms = Vec::new();
        for form in &self.forms {
            let r = form.restrict(assign);
            if r.linear_part_is_zero() {
                scalar *= r.constant();
            } else {
                forms.push(r);
            }
            if scalar.is_zero() {
                return None;
            }
        }
        Some(ProductGate { scalar, forms })
    }
}

/// A depth-3 circuit: a sum of product gates. The empty sum is the zero
/// polynomial.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DepthThreeCircuit {
    field: Field,
    num_vars: usize,
    pub gates: Vec<ProductGate>,
}

impl DepthThreeCircuit {
    pub fn new(field: Field, num_vars: usize, gates: Vec<ProductGate>) -> DepthThreeCircuit {
        DepthThreeCircuit { field, num_vars, gates }
    }

    pub fn zero(field: Field, num_vars: usize) -> DepthThreeCircuit {
        DepthThreeCircuit::new(field, num_vars, Vec::new())
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn fan_in(&self) -> usize {
        self.gates.len()
    }

    pub fn degree(&self) -> usize {
        self.gates.iter().map(|g| g.degree()).max().unwrap_or(0)
    }

    pub fn eval(&self, point: &[FieldElement]) -> FieldElement {
        let mut acc = self.field.zero();
        for g in &self.gates {
            acc += g.eval(point);
        }
        acc
    }

    pub fn expand(&self) -> MultiPoly {
        let mut acc = MultiPoly::zero(self.field, self.num_vars);
        for g in &self.gates {
            acc = acc.add(&g.expand(self.num_vars));
        }
        acc
    }

    pub fn is_multilinear(&self) -> bool {
        self.gates.iter().all(|g| g.is_multilinear())
    }

    /// Checks the one-form-per-block shape: every form of every gate is
    /// homogeneous linear inside a single block, one form per block.
    pub fn is_set_multilinear(&self, blocks: &[Vec<usize>]) -> bool {
        self.gates.iter().all(|g| {
            g.forms.len() == blocks.len()
                && g.forms.iter().zip(blocks).all(|(form, block)| {
                    form.constant().is_zero()
                        && !form.linear_part_is_zero()
                        && form.support().iter().all(|&v| block.contains(&(v as usize)))
                })
        })
    }

    /// Syntactic sum: gate concatenation.
    pub fn add(&self, other: &DepthThreeCircuit) -> DepthThreeCircuit {
        assert_eq!(self.field, other.field);
        assert_eq!(self.num_vars, other.num_vars);
        let mut gates = self.gates.clone();
        gates.extend(other.gates.iter().cloned());
        DepthThreeCircuit::new(self.field, self.num_vars, gates)
    }

    pub fn scale(&self, c: FieldElement) -> DepthThreeCircuit {
        let gates = self
            .gates
            .iter()
            .map(|g| ProductGate { scalar: g.scalar * c, forms: g.forms.clone() })
            .collect();
        DepthThreeCircuit::new(self.field, self.num_vars, gates)
    }

    pub fn subcircuit(&self, indices: &[usize]) -> DepthThreeCircuit {
        let gates = indices.iter().map(|&i| self.gates[i].clone()).collect();
        DepthThreeCircuit::new(self.field, self.num_vars, gates)
    }

    /// Substitutes constants; gates that vanish are dropped.
    pub fn restrict(&self, assign: &BTreeMap<u32, FieldElement>) -> DepthThreeCircuit {
        let gates = self.gates.iter().filter_map(|g| g.restrict(assign)).collect();
        DepthThreeCircuit::new(self.field, self.num_vars, gates)
    }

    /// Fixes every variable outside `keep` to its coordinate in `point`.
    pub fn restrict_complement(
        &self,
        keep: &BTreeSet<u32>,
        point: &[FieldElement],
    ) -> DepthThreeCircuit {
        let assign: BTreeMap<u32, FieldElement> = (0..self.num_vars as u32)
            .filter(|v| !keep.contains(v))
            .map(|v| (v, point[v as usize]))
            .collect();
        self.restrict(&assign)
    }

    /// Black-box access evaluating through the gates (no expansion).
    pub fn oracle(&self) -> Oracle {
        let db = self.degree();
        let vdb = if self.is_multilinear() { 1 } else { db };
        let me = self.clone();
        Oracle::from_fn(self.field, self.num_vars, db, vdb, move |x| me.eval(x))
    }

    /// The multiset of canonical linear forms dividing every gate, and the
    /// remaining simple circuit after those forms are removed (their scalars
    /// folded into the gate scalars). The circuit polynomial equals the
    /// product of the returned forms times the simple part's polynomial.
    pub fn gcd_and_simplify(&self) -> (Vec<LinearForm>, DepthThreeCircuit) {
        if self.gates.is_empty() {
            return (Vec::new(), self.clone());
        }
        // Count proportionality classes per gate, keyed by the canonical
        // (coefficients, constant) vector.
        let class_key = |form: &LinearForm| -> Vec<u64> {
            form.canonical().1.vector_repr().iter().map(|e| e.value()).collect()
        };
        let mut per_gate: Vec<HashMap<Vec<u64>, usize>> = Vec::with_capacity(self.gates.len());
        let mut canon_of: BTreeMap<Vec<u64>, LinearForm> = BTreeMap::new();
        for gate in &self.gates {
            let mut counts: HashMap<Vec<u64>, usize> = HashMap::new();
            for form in &gate.forms {
                let key = class_key(form);
                canon_of.entry(key.clone()).or_insert_with(|| form.canonical().1);
                *counts.entry(key).or_insert(0) += 1;
            }
            per_gate.push(counts);
        }
        let mut multiplicity: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        for key in canon_of.keys() {
            let m = per_gate
                .iter()
                .map(|counts| counts.get(key).copied().unwrap_or(0))
                .min()
                .unwrap_or(0);
            if m > 0 {
                multiplicity.insert(key.clone(), m);
            }
        }
        let mut gcd_forms = Vec::new();
        for (key, &m) in &multiplicity {
            for _ in 0..m {
                gcd_forms.push(canon_of[key].clone());
            }
        }
        let gates = self
            .gates
            .iter()
            .map(|gate| {
                let mut remaining = multiplicity.clone();
                let mut scalar = gate.scalar;
                let mut forms = Vec::new();
                for form in &gate.forms {
                    let key = class_key(form);
                    match remaining.get_mut(&key) {
                        Some(cnt) if *cnt > 0 => {
                            *cnt -= 1;
                            // form = c * canon, so removing canon leaves c.
                            scalar *= form.canonical().0;
                        }
                        _ => forms.push(form.clone()),
                    }
                }
                ProductGate { scalar, forms }
            })
            .collect();
        (gcd_forms, DepthThreeCircuit::new(self.field, self.num_vars, gates))
    }

    /// Syntactic rank: the dimension of the span of the simple part's form
    /// vectors in F^(n+1). A circuit with at most one gate has rank 0.
    pub fn syn_rank(&self) -> usize {
        let (_, simp) = self.gcd_and_simplify();
        let rows: Vec<Vec<FieldElement>> = simp
            .gates
            .iter()
            .flat_map(|g| g.forms.iter().map(|f| f.vector_repr()))
            .collect();
        if rows.is_empty() {
            return 0;
        }
        FieldMatrix::from_rows(self.field, rows).expect("uniform width").rank()
    }

    /// Syntactic distance: the syntactic rank of the gate union.
    pub fn syn_distance(&self, other: &DepthThreeCircuit) -> usize {
        self.add(other).syn_rank()
    }

    /// A circuit is minimal when no proper nonempty subset of its gates
    /// sums to the zero polynomial. Probabilistic with one-sided error at
    /// most 2^-exponent per subset; `true` for fan-in at most 1.
    pub fn is_minimal(&self, exponent: u32, rng: &mut dyn RngCore) -> Result<bool> {
        let k = self.gates.len();
        if k <= 1 {
            return Ok(true);
        }
        if k > 12 {
            return Err(Error::BudgetExceeded {
                stage: "is-minimal",
                detail: format!("fan-in {k} has too many gate subsets"),
            });
        }
        for mask in 1u32..(1 << k) - 1 {
            let indices: Vec<usize> = (0..k).filter(|&i| mask & (1 << i) != 0).collect();
            let sub = self.subcircuit(&indices);
            if pit_zero(&sub.oracle(), exponent, rng)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// A sum of powers of affine forms: sum of c_i * l_i^d.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PowerCircuit {
    field: Field,
    num_vars: usize,
    pub degree: usize,
    pub terms: Vec<(FieldElement, LinearForm)>,
}

impl PowerCircuit {
    pub fn new(
        field: Field,
        num_vars: usize,
        degree: usize,
        terms: Vec<(FieldElement, LinearForm)>,
    ) -> PowerCircuit {
        PowerCircuit { field, num_vars, degree, terms }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn fan_in(&self) -> usize {
        self.terms.len()
    }

    pub fn eval(&self, point: &[FieldElement]) -> FieldElement {
        let mut acc = self.field.zero();
        for (c, form) in &self.terms {
            acc += *c * form.eval(point).pow(self.degree as u64);
        }
        acc
    }

    pub fn expand(&self) -> MultiPoly {
        let mut acc = MultiPoly::zero(self.field, self.num_vars);
        for (c, form) in &self.terms {
            let fp = form.to_poly(self.num_vars);
            let mut pw = MultiPoly::constant(self.field, self.num_vars, *c);
            for _ in 0..self.degree {
                pw = pw.mul(&fp);
            }
            acc = acc.add(&pw);
        }
        acc
    }

    pub fn to_depth3(&self) -> DepthThreeCircuit {
        let gates = self
            .terms
            .iter()
            .map(|(c, form)| ProductGate {
                scalar: *c,
                forms: vec![form.clone(); self.degree],
            })
            .collect();
        DepthThreeCircuit::new(self.field, self.num_vars, gates)
    }

    pub fn oracle(&self) -> Oracle {
        let me = self.clone();
        Oracle::from_fn(self.field, self.num_vars, self.degree, self.degree, move |x| {
            me.eval(x)
        })
    }

    /// Minimal representation: proportional forms are folded together
    /// (c (s l)^d collapses to c s^d l^d on the canonical form l), terms
    /// with cancelled coefficients are dropped, and the rest are ordered by
    /// canonical form vector.
    pub fn minimalize(&self) -> PowerCircuit {
        let mut folded: BTreeMap<Vec<u64>, (FieldElement, LinearForm)> = BTreeMap::new();
        for (c, form) in &self.terms {
            if form.is_zero() {
                continue;
            }
            let (s, canon) = form.canonical();
            let key: Vec<u64> = canon.vector_repr().iter().map(|e| e.value()).collect();
            let add = *c * s.pow(self.degree as u64);
            match folded.entry(key) {
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert((add, canon));
                }
                std::collections::btree_map::Entry::Occupied(mut o) => {
                    o.get_mut().0 += add;
                }
            }
        }
        let terms = folded
            .into_values()
            .filter(|(c, _)| !c.is_zero())
            .collect();
        PowerCircuit::new(self.field, self.num_vars, self.degree, terms)
    }

    /// True when both sides minimalize to the same set of (coefficient,
    /// canonical form) pairs; this is equality as a decomposition, not just
    /// as a polynomial.
    pub fn same_decomposition(&self, other: &PowerCircuit) -> bool {
        if self.degree != other.degree {
            return false;
        }
        let a = self.minimalize();
        let b = other.minimalize();
        a.terms == b.terms
    }
}

/// Uniformly random affine form with a nonzero linear part.
pub fn random_affine_form(field: Field, n: usize, rng: &mut dyn RngCore) -> LinearForm {
    loop {
        let coeffs: Vec<FieldElement> = (0..n).map(|_| field.rand(rng)).collect();
        if coeffs.iter().all(|c| c.is_zero()) {
            continue;
        }
        let constant = field.rand(rng);
        return LinearForm::new(field, coeffs, constant);
    }
}

/// Random sum of k powers of affine forms with pairwise non-proportional
/// forms and nonzero coefficients. For d >= k the plant is minimal and the
/// polynomial is nonzero (powers of pairwise non-proportional affine forms
/// are linearly independent at that degree).
pub fn gen_power_plant(
    field: Field,
    n: usize,
    k: usize,
    d: usize,
    rng: &mut dyn RngCore,
) -> PowerCircuit {
    let mut forms: Vec<LinearForm> = Vec::new();
    while forms.len() < k {
        let cand = random_affine_form(field, n, rng);
        let ck = cand.canonical().1;
        if forms.iter().all(|f| f.canonical().1 != ck) {
            forms.push(cand);
        }
    }
    let terms = forms
        .into_iter()
        .map(|f| (field.rand_nonzero(rng), f))
        .collect();
    PowerCircuit::new(field, n, d, terms)
}

/// Random multilinear product gate over the given variables: the variables
/// are chunked into supports of size 1 or 2 and each chunk becomes one
/// affine form with small nonzero coefficients.
pub fn gen_ml_gate(
    field: Field,
    num_vars: usize,
    vars: &[usize],
    rng: &mut dyn RngCore,
) -> ProductGate {
    let mut forms = Vec::new();
    let mut i = 0;
    while i < vars.len() {
        let take = if vars.len() - i >= 2 && rng.gen_bool(0.4) { 2 } else { 1 };
        let mut coeffs = vec![field.zero(); num_vars];
        for &v in &vars[i..i + take] {
            coeffs[v] = field.el(rng.gen_range(1..5));
        }
        let constant = field.el(rng.gen_range(0..5));
        forms.push(LinearForm::new(field, coeffs, constant));
        i += take;
    }
    ProductGate { scalar: field.el(rng.gen_range(1..5)), forms }
}

/// Random multilinear circuit whose k gates live on pairwise disjoint
/// variable sets (so the gates are far apart and each is its own cluster).
pub fn gen_ml_separated(
    field: Field,
    num_vars: usize,
    k: usize,
    vars_per_gate: usize,
    rng: &mut dyn RngCore,
) -> DepthThreeCircuit {
    assert!(k * vars_per_gate <= num_vars);
    let mut order: Vec<usize> = (0..num_vars).collect();
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let gates = (0..k)
        .map(|g| {
            let vars = &order[g * vars_per_gate..(g + 1) * vars_per_gate];
            let mut sorted = vars.to_vec();
            sorted.sort_unstable();
            gen_ml_gate(field, num_vars, &sorted, rng)
        })
        .collect();
    DepthThreeCircuit::new(field, num_vars, gates)
}

/// A two-gate multilinear cluster on two shared variables u, v: both gates
/// are (u + a)(v + b) shapes, so the pair is semantically close (their sum
/// has semantic rank at most 2) but not proportional.
pub fn gen_ml_close_pair(
    field: Field,
    num_vars: usize,
    u: usize,
    v: usize,
    rng: &mut dyn RngCore,
) -> DepthThreeCircuit {
    let form = |var: usize, c: u64| {
        let mut coeffs = vec![field.zero(); num_vars];
        coeffs[var] = field.one();
        LinearForm::new(field, coeffs, field.el(c))
    };
    let c1 = rng.gen_range(0..5);
    let c2 = rng.gen_range(0..5);
    // Distinct shifts keep the gates non-proportional.
    let c3 = (c1 + 1 + rng.gen_range(0..3)) % 7;
    let c4 = (c2 + 1 + rng.gen_range(0..3)) % 7;
    let gates = vec![
        ProductGate {
            scalar: field.el(rng.gen_range(1..5)),
            forms: vec![form(u, c1), form(v, c2)],
        },
        ProductGate {
            scalar: field.el(rng.gen_range(1..5)),
            forms: vec![form(u, c3), form(v, c4)],
        },
    ];
    DepthThreeCircuit::new(field, num_vars, gates)
}

/// Random set-multilinear circuit: k gates, one homogeneous linear form per
/// block per gate, with small coefficients.
pub fn gen_setml(
    field: Field,
    num_vars: usize,
    blocks: &[Vec<usize>],
    k: usize,
    rng: &mut dyn RngCore,
) -> DepthThreeCircuit {
    let gates = (0..k)
        .map(|_| {
            let forms = blocks
                .iter()
                .map(|block| loop {
                    let mut coeffs = vec![field.zero(); num_vars];
                    let mut nonzero = false;
                    for &v in block {
                        let c = rng.gen_range(0..4);
                        if c > 0 {
                            nonzero = true;
                        }
                        coeffs[v] = field.el(c);
                    }
                    if nonzero {
                        return LinearForm::new(field, coeffs, field.zero());
                    }
                })
                .collect();
            ProductGate { scalar: field.one(), forms }
        })
        .collect();
    DepthThreeCircuit::new(field, num_vars, gates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn form(field: Field, n: usize, coeffs: &[(usize, i64)], constant: i64) -> LinearForm {
        let mut c = vec![field.zero(); n];
        for &(v, a) in coeffs {
            c[v] = field.from_i64(a);
        }
        LinearForm::new(field, c, field.from_i64(constant))
    }

    #[test]
    fn gcd_of_single_gate_is_all_forms() {
        let k = Field::default_field();
        let gate = ProductGate {
            scalar: k.el(3),
            forms: vec![form(k, 2, &[(0, 1)], 1), form(k, 2, &[(1, 2)], 0)],
        };
        let c = DepthThreeCircuit::new(k, 2, vec![gate]);
        let (gcd, simp) = c.gcd_and_simplify();
        assert_eq!(gcd.len(), 2);
        assert!(simp.gates[0].forms.is_empty());
        // Product of gcd forms times the simple part equals the original.
        let mut prod = simp.expand();
        for g in &gcd {
            prod = prod.mul(&g.to_poly(2));
        }
        assert_eq!(prod, c.expand());
        assert_eq!(c.syn_rank(), 0);
    }

    #[test]
    fn gcd_scalar_preserving_with_rescaled_forms() {
        let k = Field::default_field();
        // Gate 1 has x0+1, gate 2 has 5(x0+1); the class is shared.
        let g1 = ProductGate {
            scalar: k.one(),
            forms: vec![form(k, 3, &[(0, 1)], 1), form(k, 3, &[(1, 1)], 0)],
        };
        let g2 = ProductGate {
            scalar: k.el(2),
            forms: vec![form(k, 3, &[(0, 5)], 5), form(k, 3, &[(2, 1)], 2)],
        };
        let c = DepthThreeCircuit::new(k, 3, vec![g1, g2]);
        let (gcd, simp) = c.gcd_and_simplify();
        assert_eq!(gcd.len(), 1);
        let mut prod = simp.expand();
        for g in &gcd {
            prod = prod.mul(&g.to_poly(3));
        }
        assert_eq!(prod, c.expand());
        assert_eq!(c.syn_rank(), 2);
    }

    #[test]
    fn syn_rank_invariant_under_rescaling_and_permutation() {
        let k = Field::default_field();
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let c = gen_ml_separated(k, 8, 3, 2, &mut rng);
        let r = c.syn_rank();
        // Rescale each gate's first form and compensate in the scalar.
        let gates: Vec<ProductGate> = c
            .gates
            .iter()
            .rev()
            .map(|g| {
                let mut forms = g.forms.clone();
                let s = k.el(7);
                forms[0] = forms[0].scale(s);
                ProductGate { scalar: g.scalar * s.inv().unwrap(), forms }
            })
            .collect();
        let c2 = DepthThreeCircuit::new(k, 8, gates);
        assert_eq!(c2.syn_rank(), r);
        assert_eq!(c.expand(), c2.expand());
    }

    #[test]
    fn minimality_detects_cancelling_pair() {
        let k = Field::default_field();
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let g = ProductGate {
            scalar: k.el(2),
            forms: vec![form(k, 2, &[(0, 1)], 1), form(k, 2, &[(1, 1)], 0)],
        };
        let g_neg = ProductGate { scalar: -k.el(2), forms: g.forms.clone() };
        let lone = ProductGate { scalar: k.one(), forms: vec![form(k, 2, &[(0, 3)], 0)] };
        let bad = DepthThreeCircuit::new(k, 2, vec![g.clone(), g_neg, lone.clone()]);
        assert!(!bad.is_minimal(40, &mut rng).unwrap());
        let good = DepthThreeCircuit::new(k, 2, vec![g, lone.clone()]);
        assert!(good.is_minimal(40, &mut rng).unwrap());
        // Fan-in 1 is vacuously minimal.
        let single = DepthThreeCircuit::new(k, 2, vec![lone]);
        assert!(single.is_minimal(40, &mut rng).unwrap());
    }

    #[test]
    fn minimalize_folds_proportional_powers() {
        let k = Field::default_field();
        // 1*(x0+x1)^2 + 1*(2x0+2x1)^2 = 5 (x0+x1)^2.
        let p = PowerCircuit::new(
            k,
            2,
            2,
            vec![
                (k.one(), form(k, 2, &[(0, 1), (1, 1)], 0)),
                (k.one(), form(k, 2, &[(0, 2), (1, 2)], 0)),
            ],
        );
        let m = p.minimalize();
        assert_eq!(m.terms.len(), 1);
        assert_eq!(m.terms[0].0, k.el(5));
        assert_eq!(m.terms[0].1, form(k, 2, &[(0, 1), (1, 1)], 0));
        assert_eq!(m.expand(), p.expand());
    }

    #[test]
    fn minimalize_drops_cancelling_powers() {
        let k = Field::default_field();
        let p = PowerCircuit::new(
            k,
            2,
            3,
            vec![
                (k.one(), form(k, 2, &[(0, 1)], 2)),
                (-k.one(), form(k, 2, &[(0, 1)], 2)),
                (k.el(4), form(k, 2, &[(1, 1)], 0)),
            ],
        );
        let m = p.minimalize();
        assert_eq!(m.fan_in(), 1);
        assert_eq!(m.expand(), p.expand());
    }

    #[test]
    fn power_plant_is_minimal_and_nonzero() {
        let k = Field::default_field();
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        for _ in 0..10 {
            let p = gen_power_plant(k, 4, 3, 5, &mut rng);
            assert_eq!(p.minimalize().fan_in(), 3);
            assert!(!p.expand().is_zero());
        }
    }

    #[test]
    fn setml_generator_matches_shape() {
        let k = Field::default_field();
        let mut rng = ChaCha12Rng::seed_from_u64(53);
        let blocks = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
        let c = gen_setml(k, 6, &blocks, 2, &mut rng);
        assert!(c.is_set_multilinear(&blocks));
        assert!(c.is_multilinear());
    }

    #[test]
    fn restriction_drops_vanishing_gates() {
        let k = Field::default_field();
        let g = ProductGate {
            scalar: k.one(),
            forms: vec![form(k, 2, &[(0, 1)], 0), form(k, 2, &[(1, 1)], 1)],
        };
        let c = DepthThreeCircuit::new(k, 2, vec![g]);
        let assign: BTreeMap<u32, FieldElement> = [(0u32, k.zero())].into_iter().collect();
        let r = c.restrict(&assign);
        assert_eq!(r.fan_in(), 0);
        assert!(r.expand().is_zero());
        let assign2: BTreeMap<u32, FieldElement> = [(0u32, k.el(2))].into_iter().collect();
        let r2 = c.restrict(&assign2);
        assert_eq!(r2.fan_in(), 1);
        assert_eq!(r2.gates[0].scalar, k.el(2));
        assert_eq!(r2.expand(), c.expand().restrict(&assign2));
    }
}
