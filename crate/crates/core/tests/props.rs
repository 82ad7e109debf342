//! Property tests: randomized algebraic identities and contracts that must
//! hold exactly on every instance, checked over the default prime field and,
//! where enumeration is feasible, over tiny fields.

use std::collections::{BTreeMap, BTreeSet};

use d3recon::algebra::resultant::sylvester_resultant;
use d3recon::algebra::unipoly::{rs_decode, UniPoly};
use d3recon::algebra::{Field, FieldElement, FieldMatrix, DEFAULT_PRIME};
use d3recon::circuits::{
    gen_ml_gate, gen_ml_separated, gen_power_plant, random_affine_form, DepthThreeCircuit,
};
use d3recon::cli::{parse_document, print_document, tensor_blocks, Document};
use d3recon::essential::reduce_poly;
use d3recon::oracle::Oracle;
use d3recon::poly::{interpolate_dense, interpolate_multilinear, Monomial, MultiPoly};
use d3recon::semrank::{ml_factor, pd_matrix, sem_rank};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

fn el(v: u64) -> FieldElement {
    Field::default_field().el(v)
}

/// Strategy for one field element of the default field, as a raw residue.
fn residue() -> impl Strategy<Value = u64> {
    0..DEFAULT_PRIME
}

fn random_point(field: Field, n: usize, rng: &mut ChaCha12Rng) -> Vec<FieldElement> {
    (0..n).map(|_| field.rand(rng)).collect()
}

/// Random polynomial with about `terms` monomials of total degree <= d.
fn random_poly(
    field: Field,
    n: usize,
    d: usize,
    terms: usize,
    rng: &mut ChaCha12Rng,
) -> MultiPoly {
    let mut list = Vec::new();
    for _ in 0..terms {
        let mut budget = rng.gen_range(0..=d) as u32;
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for v in 0..n as u32 {
            if budget == 0 {
                break;
            }
            let e = rng.gen_range(0..=budget);
            if e > 0 {
                pairs.push((v, e));
            }
            budget -= e;
        }
        list.push((Monomial::from_pairs(pairs), field.rand(rng)));
    }
    MultiPoly::from_terms(field, n, list)
}

/// Random multilinear polynomial on `n` variables with about `terms` terms.
fn random_ml_poly(field: Field, n: usize, terms: usize, rng: &mut ChaCha12Rng) -> MultiPoly {
    let mut list = Vec::new();
    for _ in 0..terms {
        let pairs: Vec<(u32, u32)> =
            (0..n as u32).filter(|_| rng.gen_bool(0.5)).map(|v| (v, 1)).collect();
        list.push((Monomial::from_pairs(pairs), field.rand(rng)));
    }
    MultiPoly::from_terms(field, n, list)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_ops_satisfy_ring_axioms(a in residue(), b in residue(), c in residue()) {
        let (a, b, c) = (el(a), el(b), el(c));
        prop_assert_eq!((a + b) + c, a + (b + c));
        prop_assert_eq!((a * b) * c, a * (b * c));
        prop_assert_eq!(a * (b + c), a * b + a * c);
        prop_assert_eq!(a + b, b + a);
        prop_assert_eq!(a * b, b * a);
        prop_assert_eq!(a - a, el(0));
    }

    #[test]
    fn field_inverse_and_pow(a in 1..DEFAULT_PRIME, m in 0u64..50, n in 0u64..50) {
        let a = el(a);
        prop_assert!((a * a.inv().unwrap()).is_one());
        prop_assert_eq!(a.pow(m) * a.pow(n), a.pow(m + n));
    }

    #[test]
    fn matrix_kernel_and_rank(seed in any::<u64>(), rows in 1usize..7, cols in 1usize..7) {
        let field = Field::default_field();
        let mut r = rng(seed);
        // Low-ish entries so rank-deficient matrices occur; a wide residue
        // range would make almost every sample full-rank.
        let data: Vec<Vec<FieldElement>> = (0..rows)
            .map(|_| (0..cols).map(|_| field.el(r.gen_range(0..3))).collect())
            .collect();
        let m = FieldMatrix::from_rows(field, data.clone()).unwrap();
        let rank = m.rank();
        let kernel = m.kernel_basis();
        prop_assert_eq!(rank + kernel.len(), cols);
        for v in &kernel {
            let image = m.mul_vec(v).unwrap();
            prop_assert!(image.iter().all(|x| x.is_zero()));
        }
        // Rank is independent of the order rows are fed to elimination.
        let mut shuffled = data;
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, r.gen_range(0..=i));
        }
        prop_assert_eq!(FieldMatrix::from_rows(field, shuffled).unwrap().rank(), rank);
    }

    #[test]
    fn matrix_inverse_is_two_sided(seed in any::<u64>(), n in 1usize..6) {
        let field = Field::default_field();
        let mut r = rng(seed);
        let data: Vec<Vec<FieldElement>> = (0..n)
            .map(|_| (0..n).map(|_| field.rand(&mut r)).collect())
            .collect();
        let m = FieldMatrix::from_rows(field, data).unwrap();
        match m.inverse() {
            Ok(inv) => {
                let id = FieldMatrix::identity(field, n);
                prop_assert_eq!(m.mul(&inv).unwrap(), id.clone());
                prop_assert_eq!(inv.mul(&m).unwrap(), id);
            }
            Err(_) => prop_assert!(m.rank() < n),
        }
    }

    #[test]
    fn unipoly_interpolation_round_trip(seed in any::<u64>(), deg in 0usize..9) {
        let field = Field::default_field();
        let mut r = rng(seed);
        let mut coeffs: Vec<FieldElement> = (0..=deg).map(|_| field.rand(&mut r)).collect();
        coeffs[deg] = field.rand_nonzero(&mut r);
        let q = UniPoly::from_coeffs(field, coeffs);
        let points: Vec<(FieldElement, FieldElement)> =
            (0..=deg as u64).map(|x| (field.el(x), q.eval(field.el(x)))).collect();
        prop_assert_eq!(UniPoly::interpolate(field, &points).unwrap(), q);
    }

    #[test]
    fn rs_decode_corrects_random_corruption(
        seed in any::<u64>(),
        deg in 0usize..7,
        errors in 0usize..4,
        slack in 0usize..3,
    ) {
        let field = Field::default_field();
        let mut r = rng(seed);
        let coeffs: Vec<FieldElement> = (0..=deg).map(|_| field.rand(&mut r)).collect();
        let q = UniPoly::from_coeffs(field, coeffs);
        let window = deg + 2 * errors + 1 + slack;
        let mut xs = BTreeSet::new();
        while xs.len() < window {
            xs.insert(field.rand(&mut r).value());
        }
        let mut points: Vec<(FieldElement, FieldElement)> = xs
            .into_iter()
            .map(|x| (field.el(x), q.eval(field.el(x))))
            .collect();
        let mut order: Vec<usize> = (0..window).collect();
        for i in (1..window).rev() {
            order.swap(i, r.gen_range(0..=i));
        }
        for &i in order.iter().take(errors) {
            points[i].1 += field.rand_nonzero(&mut r);
        }
        prop_assert_eq!(rs_decode(field, &points, deg, errors).unwrap(), q);
    }

    #[test]
    fn resultant_detects_common_factors(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let field = Field::default_field();
        let mut r = rng(seed);
        let linear = |root: FieldElement| {
            MultiPoly::from_terms(
                field,
                1,
                [
                    (Monomial::var(0), field.one()),
                    (Monomial::one(), field.zero() - root),
                ],
            )
        };
        // Distinct roots, split between the two polynomials with one shared.
        let mut roots = BTreeSet::new();
        while roots.len() < da + db + 1 {
            roots.insert(field.rand(&mut r).value());
        }
        let roots: Vec<FieldElement> = roots.into_iter().map(|x| field.el(x)).collect();
        let shared = linear(roots[0]);
        let mut f = MultiPoly::constant(field, 1, field.rand_nonzero(&mut r));
        for root in &roots[1..=da] {
            f = f.mul(&linear(*root));
        }
        let mut g = MultiPoly::constant(field, 1, field.rand_nonzero(&mut r));
        for root in &roots[da + 1..=da + db] {
            g = g.mul(&linear(*root));
        }
        let coprime = sylvester_resultant(&f, &g, 0).unwrap();
        prop_assert!(!coprime.is_zero());
        let with_common = sylvester_resultant(&f.mul(&shared), &g.mul(&shared), 0).unwrap();
        prop_assert!(with_common.is_zero());
    }

    #[test]
    fn multipoly_arithmetic_matches_pointwise(seed in any::<u64>(), n in 1usize..5) {
        let field = Field::default_field();
        let mut r = rng(seed);
        let f = random_poly(field, n, 4, 6, &mut r);
        let g = random_poly(field, n, 4, 6, &mut r);
        for _ in 0..4 {
            let w = random_point(field, n, &mut r);
            prop_assert_eq!(f.add(&g).eval(&w), f.eval(&w) + g.eval(&w));
            prop_assert_eq!(f.mul(&g).eval(&w), f.eval(&w) * g.eval(&w));
            prop_assert_eq!(f.sub(&g).eval(&w), f.eval(&w) - g.eval(&w));
        }
    }

    #[test]
    fn restriction_composes(seed in any::<u64>()) {
        let field = Field::default_field();
        let mut r = rng(seed);
        let n = 6;
        let f = random_poly(field, n, 4, 8, &mut r);
        let mut first = BTreeMap::new();
        let mut second = BTreeMap::new();
        for v in 0..n as u32 {
            match r.gen_range(0..3) {
                0 => {
                    first.insert(v, field.rand(&mut r));
                }
                1 => {
                    second.insert(v, field.rand(&mut r));
                }
                _ => {}
            }
        }
        let mut both = first.clone();
        both.extend(second.iter().map(|(&v, &x)| (v, x)));
        prop_assert_eq!(f.restrict(&first).restrict(&second), f.restrict(&both));
    }

    #[test]
    fn shift_preserves_derivative_matrix_rank(seed in any::<u64>(), n in 1usize..6) {
        let field = Field::default_field();
        let mut r = rng(seed);
        let f = random_ml_poly(field, n, 6, &mut r);
        let a = random_point(field, n, &mut r);
        let rank = pd_matrix(&f).rank();
        prop_assert_eq!(pd_matrix(&f.shift(&a)).rank(), rank);
    }

    #[test]
    fn ml_factor_reassembles_the_input(seed in any::<u64>(), chunks in 1usize..4) {
        let field = Field::default_field();
        let mut r = rng(seed);
        // Product of dense multilinear chunks on disjoint pairs of variables.
        let n = 2 * chunks;
        let mut f = MultiPoly::constant(field, n, field.rand_nonzero(&mut r));
        for c in 0..chunks {
            let mut chunk = random_ml_poly(field, 2, 4, &mut r);
            loop {
                let w = random_point(field, 2, &mut r);
                if !chunk.eval(&w).is_zero() {
                    break;
                }
                chunk = random_ml_poly(field, 2, 4, &mut r);
            }
            let embedded = MultiPoly::from_terms(
                field,
                n,
                chunk.terms().map(|(m, coeff)| {
                    let pairs: Vec<(u32, u32)> =
                        m.pairs().iter().map(|&(v, e)| (v + 2 * c as u32, e)).collect();
                    (Monomial::from_pairs(pairs), coeff)
                }),
            );
            f = f.mul(&embedded);
        }
        let (scalar, factors) = ml_factor(&f).unwrap();
        let mut product = MultiPoly::constant(field, n, scalar);
        let mut seen: BTreeSet<u32> = BTreeSet::new();
        for factor in &factors {
            for v in factor.support() {
                prop_assert!(seen.insert(v), "factor supports overlap");
            }
            product = product.mul(factor);
        }
        prop_assert_eq!(product, f.clone());
        let support = f.support();
        prop_assert_eq!(seen, support);
    }

    #[test]
    fn interpolation_round_trips(seed in any::<u64>(), m in 1usize..6) {
        let field = Field::default_field();
        let mut r = rng(seed);
        let f = random_ml_poly(field, m, 1 << m.min(4), &mut r);
        prop_assert_eq!(interpolate_multilinear(&Oracle::from_poly(&f), m).unwrap(), f);
        let d = 3;
        let g = random_poly(field, m, d, 8, &mut r);
        prop_assert_eq!(interpolate_dense(&Oracle::from_poly(&g), m, d).unwrap(), g);
    }

    #[test]
    fn derived_oracles_commute_with_symbolic_order(seed in any::<u64>()) {
        let field = Field::default_field();
        let mut r = rng(seed);
        let n = 5;
        let f = random_poly(field, n, 4, 8, &mut r);
        let o = Oracle::from_poly(&f);
        // Keep a strict subset of variables, derive in one of the kept ones.
        let keep: BTreeSet<u32> = [0u32, 2, 4].into_iter().collect();
        let anchor = random_point(field, n, &mut r);
        let v = [0usize, 2, 4][r.gen_range(0..3)];
        let restricted_then_derived = o.restrict(&keep, &anchor).derivative(v, 1);
        let mut assign = BTreeMap::new();
        for u in 0..n as u32 {
            if !keep.contains(&u) {
                assign.insert(u, anchor[u as usize]);
            }
        }
        let symbolic = f.derivative(v as u32).restrict(&assign);
        for _ in 0..8 {
            let w = random_point(field, n, &mut r);
            prop_assert_eq!(restricted_then_derived.eval(&w), symbolic.eval(&w));
        }
    }

    #[test]
    fn essential_count_matches_derivative_rank(seed in any::<u64>(), m in 1usize..4) {
        let field = Field::default_field();
        let mut r = rng(seed);
        let n = 5;
        // Dense core in m fresh variables composed with independent forms.
        let core = random_poly(field, m, 3, 10, &mut r);
        let forms: Vec<d3recon::poly::LinearForm> =
            (0..m).map(|_| random_affine_form(field, n, &mut r)).collect();
        let f = core.substitute_linear(&forms);
        prop_assume!(!f.is_zero() && f.degree() > 0);
        let red = reduce_poly(&f).unwrap();
        prop_assert_eq!(red.m, pd_matrix(&f).rank());
        prop_assert!(red.m <= m);
    }

    #[test]
    fn semantic_rank_never_grows_under_restriction(seed in any::<u64>()) {
        let field = Field::default_field();
        let mut r = rng(seed);
        let n = 8;
        let f = gen_ml_separated(field, n, 2, r.gen_range(2..5), &mut r).expand();
        let full = sem_rank(&f).unwrap();
        for _ in 0..5 {
            let mut assign = BTreeMap::new();
            for v in 0..n as u32 {
                if r.gen_bool(0.4) {
                    assign.insert(v, field.rand(&mut r));
                }
            }
            let g = f.restrict(&assign);
            if g.is_zero() {
                continue;
            }
            prop_assert!(sem_rank(&g).unwrap() <= full);
        }
    }

    #[test]
    fn gcd_refactoring_preserves_the_polynomial(seed in any::<u64>()) {
        let field = Field::default_field();
        let mut r = rng(seed);
        let n = 6;
        // Two gates sharing a common form so the gcd is nontrivial.
        let shared = random_affine_form(field, n, &mut r);
        let mut c = gen_ml_separated(field, n, 2, 2, &mut r);
        for gate in &mut c.gates {
            let mut assign = BTreeMap::new();
            for v in shared.support() {
                assign.insert(v, field.zero());
            }
            gate.forms = gate
                .forms
                .iter()
                .map(|form| form.restrict(&assign))
                .filter(|form| !form.is_zero())
                .collect();
            gate.forms.push(shared.clone());
        }
        prop_assume!(c.gates.iter().all(|g| !g.forms.is_empty()));
        let (gcd, simple) = c.gcd_and_simplify();
        prop_assert!(!gcd.is_empty(), "planted shared form not detected");
        let mut product = simple.expand();
        for form in &gcd {
            product = product.mul(&form.to_poly(n));
        }
        prop_assert_eq!(product, c.expand());
    }

    #[test]
    fn syntactic_rank_ignores_gate_order(seed in any::<u64>(), k in 1usize..4) {
        let field = Field::default_field();
        let mut r = rng(seed);
        let c = gen_ml_separated(field, 3 * k, k, 3, &mut r);
        let mut gates = c.gates.clone();
        for i in (1..gates.len()).rev() {
            gates.swap(i, r.gen_range(0..=i));
        }
        let permuted = DepthThreeCircuit::new(field, c.num_vars(), gates);
        prop_assert_eq!(permuted.syn_rank(), c.syn_rank());
    }

    #[test]
    fn minimalization_preserves_the_power_sum(seed in any::<u64>(), k in 1usize..4) {
        let field = Field::default_field();
        let mut r = rng(seed);
        let plant = gen_power_plant(field, 4, k, 5, &mut r);
        let reduced = plant.minimalize();
        prop_assert!(reduced.fan_in() <= plant.fan_in());
        prop_assert_eq!(reduced.expand(), plant.expand());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn documents_round_trip_through_text(seed in any::<u64>(), kind in 0usize..4) {
        let field = Field::default_field();
        let mut r = rng(seed);
        let doc = match kind {
            0 => Document::Poly(random_poly(field, 4, 4, 6, &mut r)),
            1 => {
                let circuit = gen_ml_separated(field, 6, 2, 3, &mut r);
                Document::Circuit { circuit, blocks: None }
            }
            2 => Document::Power(gen_power_plant(field, 3, 2, 4, &mut r)),
            _ => {
                let shape = vec![2usize, 2, 2];
                let entries = (0..8).map(|_| field.rand(&mut r)).collect();
                Document::Tensor { field, shape, entries }
            }
        };
        let text = print_document(&doc);
        let parsed = parse_document(&text).unwrap();
        match (&doc, &parsed) {
            (Document::Poly(a), Document::Poly(b)) => prop_assert_eq!(a, b),
            (
                Document::Circuit { circuit: a, blocks: ba },
                Document::Circuit { circuit: b, blocks: bb },
            ) => {
                prop_assert_eq!(a, b);
                prop_assert_eq!(ba, bb);
            }
            (Document::Power(a), Document::Power(b)) => prop_assert_eq!(a, b),
            (
                Document::Tensor { shape: sa, entries: ea, .. },
                Document::Tensor { shape: sb, entries: eb, .. },
            ) => {
                prop_assert_eq!(sa, sb);
                prop_assert_eq!(ea, eb);
            }
            _ => prop_assert!(false, "document kind changed across the round trip"),
        }
    }

    #[test]
    fn set_multilinear_blocks_partition_the_variables(shape in prop::collection::vec(1usize..4, 1..4)) {
        let blocks = tensor_blocks(&shape);
        prop_assert_eq!(blocks.len(), shape.len());
        let mut seen = BTreeSet::new();
        for (block, &dim) in blocks.iter().zip(&shape) {
            prop_assert_eq!(block.len(), dim);
            for &v in block {
                prop_assert!(seen.insert(v));
            }
        }
        let n: usize = shape.iter().sum();
        prop_assert_eq!(seen.len(), n);
    }

    #[test]
    fn circuit_oracle_counts_base_queries(seed in any::<u64>()) {
        let field = Field::default_field();
        let mut r = rng(seed);
        let gate = gen_ml_gate(field, 4, &[0, 1, 2, 3], &mut r);
        let c = DepthThreeCircuit::new(field, 4, vec![gate]);
        let o = c.oracle();
        let before = o.query_count();
        let d = o.derivative(r.gen_range(0..4), 1);
        for i in 0..3u64 {
            let w = random_point(field, 4, &mut r);
            d.eval(&w);
            let spent = o.query_count() - before;
            prop_assert!(
                spent <= (i + 1) * (o.var_degree_bound() as u64 + 1),
                "derivative evaluation overspent base queries"
            );
        }
    }
}
