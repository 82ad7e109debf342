//! Proper learners for multilinear and set-multilinear depth-3 circuits:
//! given black-box access to a polynomial promised to lie in the class, they
//! produce an explicit circuit and verify it against the oracle.
//!
//! The multilinear learners share one pipeline: reduce to essential
//! variables, interpolate the reduced polynomial exactly, recover candidate
//! circuits for it, lift each candidate back through the change of
//! coordinates, and keep the first lift that is structurally multilinear and
//! passes identity testing.

use crate::algebra::{Field, FieldElement, FieldMatrix};
use crate::circuits::{DepthThreeCircuit, ProductGate};
use crate::essential::{self, EssentialReduction};
use crate::oracle::{pit_equal, pit_zero, Oracle};
use crate::poly::{interpolate_multilinear, LinearForm, Monomial, MultiPoly};
use crate::semrank::{as_form_product, strip_linear_factors, StrippedLinear};
use crate::{Budgets, Error, Result};
use itertools::Itertools;
use rand::{Rng, RngCore};
use std::collections::{BTreeMap, BTreeSet, HashSet};

/// A system of polynomial equations over one set of unknowns; a solution is
/// a point where every equation vanishes.
#[derive(Clone, Debug)]
pub struct PolySystem {
    pub field: Field,
    pub num_unknowns: usize,
    pub equations: Vec<MultiPoly>,
}

/// Searches for a common zero of the system. `Ok(None)` is a proof that no
/// solution exists (only reachable when the search space fits the node
/// budget and can be swept exhaustively); a budget error means neither a
/// solution nor a refutation was found.
pub fn solve_poly_system(
    sys: &PolySystem,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<Option<Vec<FieldElement>>> {
    let field = sys.field;
    let u = sys.num_unknowns;
    for eq in &sys.equations {
        if eq.num_vars() != u {
            return Err(Error::Invalid("equation arity mismatch".into()));
        }
    }
    let mut space = 1u64;
    let mut exhaustive = true;
    for _ in 0..u {
        space = match space.checked_mul(field.prime()) {
            Some(s) if s <= budgets.solver_nodes => s,
            _ => {
                exhaustive = false;
                break;
            }
        };
    }
    if exhaustive {
        return solve_exhaustive(sys, budgets);
    }
    solve_randomized(sys, budgets, rng)
}

fn solve_exhaustive(sys: &PolySystem, budgets: &Budgets) -> Result<Option<Vec<FieldElement>>> {
    let field = sys.field;
    let u = sys.num_unknowns;
    // Equations become checkable once every variable of their support is
    // assigned; bucket them by that point for pruning.
    let mut by_depth: Vec<Vec<&MultiPoly>> = vec![Vec::new(); u + 1];
    for eq in &sys.equations {
        let depth = eq.support().iter().max().map_or(0, |&v| v as usize + 1);
        by_depth[depth].push(eq);
    }
    if by_depth[0].iter().any(|eq| !eq.is_zero()) {
        return Ok(None);
    }
    let mut assign = vec![field.zero(); u];
    let mut nodes = 0u64;
    fn dfs(
        depth: usize,
        assign: &mut Vec<FieldElement>,
        by_depth: &[Vec<&MultiPoly>],
        field: Field,
        nodes: &mut u64,
        cap: u64,
    ) -> Result<bool> {
        if depth == assign.len() {
            return Ok(true);
        }
        for v in 0..field.prime() {
            *nodes += 1;
            if *nodes > cap {
                return Err(Error::BudgetExceeded {
                    stage: "poly-system",
                    detail: "node budget exhausted".into(),
                });
            }
            assign[depth] = field.el(v);
            if by_depth[depth + 1]
                .iter()
                .all(|eq| eq.eval(assign).is_zero())
                && dfs(depth + 1, assign, by_depth, field, nodes, cap)?
            {
                return Ok(true);
            }
        }
        Ok(false)
    }
    if dfs(0, &mut assign, &by_depth, field, &mut nodes, budgets.solver_nodes)? {
        Ok(Some(assign))
    } else {
        Ok(None)
    }
}

fn solve_randomized(
    sys: &PolySystem,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<Option<Vec<FieldElement>>> {
    let field = sys.field;
    let u = sys.num_unknowns;
    let violated = |assign: &[FieldElement]| -> usize {
        sys.equations
            .iter()
            .filter(|eq| !eq.eval(assign).is_zero())
            .count()
    };
    let steps = (budgets.solver_nodes / budgets.solver_restarts.max(1) as u64).max(1);
    for _ in 0..budgets.solver_restarts {
        let mut assign: Vec<FieldElement> = (0..u).map(|_| field.rand(rng)).collect();
        for _ in 0..steps {
            let bad: Vec<&MultiPoly> = sys
                .equations
                .iter()
                .filter(|eq| !eq.eval(&assign).is_zero())
                .collect();
            if bad.is_empty() {
                return Ok(Some(assign));
            }
            let eq = bad[rng.gen_range(0..bad.len())];
            let supp: Vec<u32> = eq.support().into_iter().collect();
            if supp.is_empty() {
                break;
            }
            let var = supp[rng.gen_range(0..supp.len())] as usize;
            let candidates: Vec<FieldElement> = if field.prime() <= 64 {
                (0..field.prime()).map(|v| field.el(v)).collect()
            } else {
                (0..16).map(|_| field.rand(rng)).collect()
            };
            let mut best = (violated(&assign), assign[var]);
            for c in candidates {
                assign[var] = c;
                let score = violated(&assign);
                if score < best.0 {
                    best = (score, c);
                }
            }
            assign[var] = best.1;
        }
    }
    Err(Error::BudgetExceeded {
        stage: "poly-system",
        detail: "randomized search found no solution within budget".into(),
    })
}

/// A known pure-product factor used as the fixed part of a candidate gate.
#[derive(Clone)]
struct ProductShape {
    forms: Vec<LinearForm>,
    support: BTreeSet<u32>,
    poly: MultiPoly,
}

impl ProductShape {
    fn unit(field: Field, n: usize) -> ProductShape {
        ProductShape {
            forms: Vec::new(),
            support: BTreeSet::new(),
            poly: MultiPoly::constant(field, n, field.one()),
        }
    }

    fn from_forms(field: Field, n: usize, forms: Vec<LinearForm>) -> ProductShape {
        let mut poly = MultiPoly::constant(field, n, field.one());
        let mut support = BTreeSet::new();
        for f in &forms {
            support.extend(f.support());
            poly = poly.mul(&f.to_poly(n));
        }
        ProductShape { forms, support, poly }
    }

    fn key(&self) -> Vec<u64> {
        let mut reprs: Vec<Vec<u64>> = self
            .forms
            .iter()
            .map(|f| f.vector_repr().iter().map(|c| c.value()).collect())
            .collect();
        reprs.sort();
        reprs.into_iter().flatten().collect()
    }
}

fn circuit_key(c: &DepthThreeCircuit) -> Vec<u64> {
    let mut gates: Vec<Vec<u64>> = c
        .gates
        .iter()
        .map(|g| {
            let mut scalar = g.scalar;
            let mut reprs: Vec<Vec<u64>> = g
                .forms
                .iter()
                .map(|f| {
                    let (s, canon) = f.canonical();
                    scalar *= s;
                    canon.vector_repr().iter().map(|c| c.value()).collect()
                })
                .collect();
            reprs.sort();
            let mut key = vec![scalar.value(), reprs.len() as u64];
            key.extend(reprs.into_iter().flatten());
            key
        })
        .collect();
    gates.sort();
    let mut key = Vec::new();
    for g in gates {
        key.push(u64::MAX);
        key.extend(g);
    }
    key
}

/// Solves for one completing affine form per gate so that the gates, each a
/// known pure product times its completing form, sum to `g`. The match is a
/// linear system over the forms' coefficients; free coordinates are zeroed.
fn complete_shapes(
    g: &MultiPoly,
    shapes: &[&ProductShape],
) -> Result<Option<DepthThreeCircuit>> {
    let field = g.field();
    let n = g.num_vars();
    let gsupp = g.support();
    let allowed: Vec<Vec<u32>> = shapes
        .iter()
        .map(|s| gsupp.difference(&s.support).copied().collect())
        .collect();
    let mut producible: BTreeSet<Monomial> = BTreeSet::new();
    for (t, s) in shapes.iter().enumerate() {
        for (m, _) in s.poly.terms() {
            producible.insert(m.clone());
            for &v in &allowed[t] {
                producible.insert(m.mul(&Monomial::var(v)));
            }
        }
    }
    if g.terms().any(|(m, _)| !producible.contains(m)) {
        return Ok(None);
    }
    let rows: Vec<Monomial> = producible.into_iter().collect();
    let row_of: BTreeMap<&Monomial, usize> =
        rows.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let num_cols: usize = allowed.iter().map(|a| a.len() + 1).sum();
    let mut mat = FieldMatrix::zero(field, rows.len(), num_cols);
    let mut base = 0usize;
    for (t, s) in shapes.iter().enumerate() {
        for (m, c) in s.poly.terms() {
            mat[(row_of[m], base)] += c;
            for (i, &v) in allowed[t].iter().enumerate() {
                let target = m.mul(&Monomial::var(v));
                mat[(row_of[&target], base + 1 + i)] += c;
            }
        }
        base += allowed[t].len() + 1;
    }
    let rhs: Vec<FieldElement> = rows.iter().map(|m| g.coeff(m)).collect();
    let solution = match mat.solve(&rhs)? {
        Some(sol) => sol,
        None => return Ok(None),
    };
    let mut gates = Vec::new();
    let mut base = 0usize;
    for (t, s) in shapes.iter().enumerate() {
        let constant = solution[base];
        let mut coeffs = vec![field.zero(); n];
        for (i, &v) in allowed[t].iter().enumerate() {
            coeffs[v as usize] = solution[base + 1 + i];
        }
        base += allowed[t].len() + 1;
        let form = LinearForm::new(field, coeffs, constant);
        if form.is_zero() {
            continue;
        }
        if form.linear_part_is_zero() {
            if !constant.is_zero() {
                gates.push(ProductGate { scalar: constant, forms: s.forms.clone() });
            }
            continue;
        }
        let (scalar, canon) = form.canonical();
        let mut forms = s.forms.clone();
        forms.push(canon);
        gates.push(ProductGate { scalar, forms });
    }
    let circuit = DepthThreeCircuit::new(field, n, gates);
    if circuit.expand() != *g {
        return Ok(None);
    }
    Ok(Some(circuit))
}

/// All recovered fan-in-`k` multilinear depth-3 representations of the
/// explicit polynomial `g`, in a deterministic order, capped by the
/// candidate budget. Each returned circuit expands to `g` exactly.
///
/// Candidate gates are seeded from partial derivatives: a variable private
/// to one gate turns that gate into a pure product under differentiation,
/// and the form the derivative lost is recovered by a linear solve. Gates
/// without such a variable are covered by affine gates, and for fan-in 2 by
/// splitting on a shared variable; fan-in-2 sums of two gates that share
/// their full support on forms of two or more variables each fall outside
/// the search and are reported as not found.
pub fn recover_candidates(
    g: &MultiPoly,
    k: usize,
    budgets: &Budgets,
) -> Result<Vec<DepthThreeCircuit>> {
    let field = g.field();
    let n = g.num_vars();
    if g.is_zero() {
        return Ok(vec![DepthThreeCircuit::zero(field, n)]);
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    if !g.is_multilinear() {
        return Err(Error::NotInClass("polynomial is not multilinear".into()));
    }
    let mut out: Vec<DepthThreeCircuit> = Vec::new();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let cap = budgets.max_recovery_candidates;
    let mut push = |c: DepthThreeCircuit, out: &mut Vec<DepthThreeCircuit>| {
        if c.is_multilinear() && seen.insert(circuit_key(&c)) {
            out.push(c);
        }
    };
    if k == 1 {
        if let Some((scalar, forms)) = as_form_product(g)? {
            push(
                DepthThreeCircuit::new(field, n, vec![ProductGate { scalar, forms }]),
                &mut out,
            );
        }
        return Ok(out);
    }
    let mut pool: Vec<ProductShape> = Vec::new();
    let mut pool_keys: HashSet<Vec<u64>> = HashSet::new();
    for v in g.support() {
        let h = g.derivative(v);
        if h.is_zero() {
            continue;
        }
        if let Some((_, forms)) = as_form_product(&h)? {
            let shape = ProductShape::from_forms(field, n, forms);
            if pool_keys.insert(shape.key()) {
                pool.push(shape);
            }
        }
    }
    let unit = ProductShape::unit(field, n);
    if pool_keys.insert(unit.key()) {
        pool.push(unit);
    }
    let multisets = (0..pool.len()).combinations_with_replacement(k);
    for (count, choice) in multisets.enumerate() {
        if out.len() >= cap || count >= 20_000 {
            break;
        }
        let shapes: Vec<&ProductShape> = choice.iter().map(|&i| &pool[i]).collect();
        if let Some(c) = complete_shapes(g, &shapes)? {
            push(c, &mut out);
        }
    }
    if k == 2 && out.len() < cap {
        for v in g.support() {
            if out.len() >= cap {
                break;
            }
            let dv = g.derivative(v);
            let at_zero = g.restrict(&BTreeMap::from([(v, field.zero())]));
            if dv.is_zero() || at_zero.is_zero() {
                continue;
            }
            let (Some((s1, f1)), Some((s0, f0))) =
                (as_form_product(&dv)?, as_form_product(&at_zero)?)
            else {
                continue;
            };
            let mut xv = vec![field.zero(); n];
            xv[v as usize] = field.one();
            let mut forms = vec![LinearForm::new(field, xv, field.zero())];
            forms.extend(f1);
            let gates = vec![
                ProductGate { scalar: s1, forms },
                ProductGate { scalar: s0, forms: f0 },
            ];
            let c = DepthThreeCircuit::new(field, n, gates);
            if c.expand() == *g {
                push(c, &mut out);
            }
        }
    }
    Ok(out)
}

fn reduce_and_interpolate(
    o: &Oracle,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<(EssentialReduction, MultiPoly)> {
    let red = essential::reduce(o, rng)?;
    if red.m > budgets.max_interp_vars {
        return Err(Error::BudgetExceeded {
            stage: "interpolation",
            detail: format!(
                "{} essential variables exceed the cap of {}",
                red.m, budgets.max_interp_vars
            ),
        });
    }
    let g = interpolate_multilinear(&red.reduced_oracle(o), red.m)?;
    Ok((red, g))
}

fn lift_circuit(c: &DepthThreeCircuit, n: usize, a_inv: &FieldMatrix) -> DepthThreeCircuit {
    let field = c.field();
    let gates = c
        .gates
        .iter()
        .map(|gate| {
            let forms = gate
                .forms
                .iter()
                .map(|f| {
                    let mut coeffs = vec![field.zero(); n];
                    coeffs[..f.coeffs().len()].copy_from_slice(f.coeffs());
                    LinearForm::new(field, coeffs, f.constant()).compose_matrix(a_inv)
                })
                .collect();
            ProductGate { scalar: gate.scalar, forms }
        })
        .collect();
    DepthThreeCircuit::new(field, n, gates)
}

fn fold_constant_forms(c: &DepthThreeCircuit) -> DepthThreeCircuit {
    let field = c.field();
    let mut gates = Vec::new();
    for gate in &c.gates {
        let mut scalar = gate.scalar;
        let mut forms = Vec::new();
        for f in &gate.forms {
            if f.linear_part_is_zero() {
                scalar *= f.constant();
            } else {
                forms.push(f.clone());
            }
        }
        if !scalar.is_zero() {
            gates.push(ProductGate { scalar, forms });
        }
    }
    DepthThreeCircuit::new(field, c.num_vars(), gates)
}

fn attach_linear(c: &DepthThreeCircuit, stripped: &StrippedLinear) -> DepthThreeCircuit {
    let gates = c
        .gates
        .iter()
        .map(|g| ProductGate {
            scalar: g.scalar * stripped.scalar,
            forms: stripped
                .factors
                .iter()
                .cloned()
                .chain(g.forms.iter().cloned())
                .collect(),
        })
        .collect();
    DepthThreeCircuit::new(c.field(), c.num_vars(), gates)
}

fn sweep_and_lift(
    o: &Oracle,
    red: &EssentialReduction,
    core: &MultiPoly,
    attach: Option<&StrippedLinear>,
    k_max: usize,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<DepthThreeCircuit> {
    for k in 0..=k_max {
        for cand in recover_candidates(core, k, budgets)? {
            let with_lin = match attach {
                Some(s) => attach_linear(&cand, s),
                None => cand,
            };
            let lifted = fold_constant_forms(&lift_circuit(&with_lin, o.num_vars(), &red.a_inv));
            if !lifted.is_multilinear() || lifted.fan_in() > k_max {
                continue;
            }
            if pit_equal(&lifted.oracle(), o, budgets.pit_exponent, rng)? {
                return Ok(lifted);
            }
        }
    }
    Err(Error::NotInClass(format!(
        "no multilinear depth-3 representation with at most {k_max} gates found"
    )))
}

/// Learns a multilinear depth-3 circuit with at most `k_max` gates for the
/// oracle's polynomial. Gate count is swept upward, so the result uses as
/// few gates as the candidate search can certify.
pub fn learn_ml_lowdeg(
    o: &Oracle,
    k_max: usize,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<DepthThreeCircuit> {
    if pit_zero(o, budgets.pit_exponent, rng)? {
        return Ok(DepthThreeCircuit::zero(o.field(), o.num_vars()));
    }
    let (red, g) = reduce_and_interpolate(o, budgets, rng)?;
    sweep_and_lift(o, &red, &g, None, k_max, budgets, rng)
}

/// Learns under a syntactic rank promise: all linear factors of the
/// interpolated polynomial are divided out first, the factor-free part is
/// required to have degree within the promise, and the recovered gates get
/// the factors reattached.
pub fn learn_ml_lowrank(
    o: &Oracle,
    k_max: usize,
    r_syn: u64,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<DepthThreeCircuit> {
    if pit_zero(o, budgets.pit_exponent, rng)? {
        return Ok(DepthThreeCircuit::zero(o.field(), o.num_vars()));
    }
    let (red, g) = reduce_and_interpolate(o, budgets, rng)?;
    let stripped = strip_linear_factors(&g)?;
    if stripped.residual.degree() as u64 > r_syn.max(1) {
        return Err(Error::NotInClass(format!(
            "linear-factor-free part has degree {} above the rank promise {}",
            stripped.residual.degree(),
            r_syn
        )));
    }
    let core = stripped.residual.clone();
    sweep_and_lift(o, &red, &core, Some(&stripped), k_max, budgets, rng)
}

/// The syntactic rank bound implied by a semantic rank promise for fan-in k.
pub fn syn_bound_from_sem(k: usize, r_sem: u64) -> u64 {
    if k <= 1 {
        return r_sem.max(1);
    }
    let log = (k as f64).log2().ceil().max(1.0) as u64;
    128u64
        .saturating_mul((k * k) as u64)
        .saturating_mul(log)
        .saturating_mul(r_sem.max(1))
}

/// Learns under a semantic rank promise by converting it to the implied
/// syntactic bound.
pub fn learn_ml_low_semrank(
    o: &Oracle,
    k_max: usize,
    r_sem: u64,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<DepthThreeCircuit> {
    learn_ml_lowrank(o, k_max, syn_bound_from_sem(k_max, r_sem), budgets, rng)
}

fn block_reduction(
    o: &Oracle,
    block: &[usize],
    rng: &mut dyn RngCore,
) -> Result<EssentialReduction> {
    let field = o.field();
    let dervs: Vec<Oracle> = block.iter().map(|&v| o.derivative(v, 1)).collect();
    let sample = |rng: &mut dyn RngCore| -> Vec<FieldElement> {
        (0..o.num_vars()).map(|_| field.rand(rng)).collect()
    };
    for _ in 0..4 {
        let rows: Vec<Vec<FieldElement>> = (0..2 * block.len() + 4)
            .map(|_| {
                let z = sample(rng);
                dervs.iter().map(|d| d.eval(&z)).collect()
            })
            .collect();
        let mat = FieldMatrix::from_rows(field, rows)?;
        let kernel = mat.kernel_basis();
        let confirmed = kernel.iter().all(|w| {
            (0..4).all(|_| {
                let z = sample(rng);
                let mut acc = field.zero();
                for (d, &c) in dervs.iter().zip(w) {
                    acc += c * d.eval(&z);
                }
                acc.is_zero()
            })
        });
        if confirmed {
            return essential::kernel_to_reduction(field, block.len(), &kernel);
        }
    }
    Err(Error::BudgetExceeded {
        stage: "block-reduction",
        detail: "sampled block kernel failed confirmation".into(),
    })
}

fn tensor_index(shape: &[usize], idx: &[usize]) -> usize {
    let mut flat = 0;
    for (d, &i) in idx.iter().enumerate() {
        flat = flat * shape[d] + i;
    }
    flat
}

fn all_indices(shape: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = shape.iter().product();
    let mut out = Vec::with_capacity(total);
    for mut flat in 0..total {
        let mut idx = vec![0usize; shape.len()];
        for d in (0..shape.len()).rev() {
            idx[d] = flat % shape[d];
            flat /= shape[d];
        }
        out.push(idx);
    }
    out
}

fn rank_one_component(
    shape: &[usize],
    entries: &[FieldElement],
) -> Option<Vec<Vec<FieldElement>>> {
    let pivot = all_indices(shape)
        .into_iter()
        .find(|idx| !entries[tensor_index(shape, idx)].is_zero())?;
    let pv = entries[tensor_index(shape, &pivot)];
    let mut vecs: Vec<Vec<FieldElement>> = Vec::with_capacity(shape.len());
    for (d, &dim) in shape.iter().enumerate() {
        let mut v = Vec::with_capacity(dim);
        for t in 0..dim {
            let mut idx = pivot.clone();
            idx[d] = t;
            v.push(entries[tensor_index(shape, &idx)]);
        }
        vecs.push(v);
    }
    let scale = pv.pow(shape.len() as u64 - 1).inv().ok()?;
    for idx in all_indices(shape) {
        let mut prod = scale;
        for (d, &i) in idx.iter().enumerate() {
            prod *= vecs[d][i];
        }
        if prod != entries[tensor_index(shape, &idx)] {
            return None;
        }
    }
    for c in vecs[0].iter_mut() {
        *c *= scale;
    }
    Some(vecs)
}

fn matrix_rank_decompose(
    field: Field,
    shape: &[usize],
    entries: &[FieldElement],
    k_max: usize,
) -> Result<Vec<Vec<Vec<FieldElement>>>> {
    let (rows, cols) = (shape[0], shape[1]);
    let mut m = FieldMatrix::zero(field, rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = entries[i * cols + j];
        }
    }
    let (red, pivots) = m.rref();
    if pivots.len() > k_max {
        return Err(Error::NotInClass(format!(
            "tensor rank {} exceeds the fan-in budget {k_max}",
            pivots.len()
        )));
    }
    // With C the pivot columns of M and R the reduced rows, M = C R.
    let gates = pivots
        .iter()
        .enumerate()
        .map(|(t, &pc)| {
            let col: Vec<FieldElement> = (0..rows).map(|i| m[(i, pc)]).collect();
            let row: Vec<FieldElement> = (0..cols).map(|j| red[(t, j)]).collect();
            vec![col, row]
        })
        .collect();
    Ok(gates)
}

fn rank_one_matrix(m: &[Vec<FieldElement>]) -> Option<(Vec<FieldElement>, Vec<FieldElement>)> {
    let rows = m.len();
    let cols = m[0].len();
    let (pi, pj) = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .find(|&(i, j)| !m[i][j].is_zero())?;
    let pinv = m[pi][pj].inv().ok()?;
    let u: Vec<FieldElement> = (0..rows).map(|i| m[i][pj]).collect();
    let v: Vec<FieldElement> = (0..cols).map(|j| m[pi][j] * pinv).collect();
    for i in 0..rows {
        for j in 0..cols {
            if u[i] * v[j] != m[i][j] {
                return None;
            }
        }
    }
    Some((u, v))
}

fn order3_slices(
    shape: &[usize],
    entries: &[FieldElement],
    mode: usize,
) -> Vec<Vec<Vec<FieldElement>>> {
    // Remaining axes in ascending order index the slice matrices.
    let others: Vec<usize> = (0..3).filter(|&d| d != mode).collect();
    (0..shape[mode])
        .map(|b| {
            (0..shape[others[0]])
                .map(|i| {
                    (0..shape[others[1]])
                        .map(|j| {
                            let mut idx = vec![0usize; 3];
                            idx[mode] = b;
                            idx[others[0]] = i;
                            idx[others[1]] = j;
                            entries[tensor_index(shape, &idx)]
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn det2(m: &[Vec<FieldElement>]) -> FieldElement {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn mat_is_zero(m: &[Vec<FieldElement>]) -> bool {
    m.iter().all(|r| r.iter().all(|c| c.is_zero()))
}

fn mat_combine(
    a: &[Vec<FieldElement>],
    ca: FieldElement,
    b: &[Vec<FieldElement>],
    cb: FieldElement,
) -> Vec<Vec<FieldElement>> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(&x, &y)| x * ca + y * cb).collect())
        .collect()
}

fn order3_rank2_mode(
    field: Field,
    shape: &[usize],
    entries: &[FieldElement],
    mode: usize,
) -> Result<Option<Vec<Vec<Vec<FieldElement>>>>> {
    let slices = order3_slices(shape, entries, mode);
    let others: Vec<usize> = (0..3).filter(|&d| d != mode).collect();
    let place = |uv: (Vec<FieldElement>, Vec<FieldElement>), c: Vec<FieldElement>| {
        let mut gate = vec![Vec::new(), Vec::new(), Vec::new()];
        gate[mode] = c;
        gate[others[0]] = uv.0;
        gate[others[1]] = uv.1;
        gate
    };
    let s0 = &slices[0];
    let s1 = &slices[1];
    let one = field.one();
    let zero = field.zero();
    // Degenerate pencils: a zero or proportional slice reduces to one
    // matrix factorization shared across the mode.
    if mat_is_zero(s1) {
        let flat: Vec<FieldElement> = s0.iter().flatten().copied().collect();
        let m = matrix_rank_decompose(field, &[shape[others[0]], shape[others[1]]], &flat, 2)?;
        return Ok(Some(m.into_iter().map(|g| place((g[0].clone(), g[1].clone()), vec![one, zero])).collect()));
    }
    if mat_is_zero(s0) {
        let flat: Vec<FieldElement> = s1.iter().flatten().copied().collect();
        let m = matrix_rank_decompose(field, &[shape[others[0]], shape[others[1]]], &flat, 2)?;
        return Ok(Some(m.into_iter().map(|g| place((g[0].clone(), g[1].clone()), vec![zero, one])).collect()));
    }
    if let Some((i, j)) = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .find(|&(i, j)| !s0[i][j].is_zero())
    {
        let c = s1[i][j] * s0[i][j].inv()?;
        if mat_combine(s1, one, s0, -c).iter().all(|r| r.iter().all(|x| x.is_zero())) {
            let flat: Vec<FieldElement> = s0.iter().flatten().copied().collect();
            let m = matrix_rank_decompose(field, &[shape[others[0]], shape[others[1]]], &flat, 2)?;
            return Ok(Some(m.into_iter().map(|g| place((g[0].clone(), g[1].clone()), vec![one, c])).collect()));
        }
    }
    // det(S0 + t S1) as a quadratic in t.
    let d0 = det2(s0);
    let d1 = det2(s1);
    let mix = s0[0][0] * s1[1][1] + s1[0][0] * s0[1][1] - s0[0][1] * s1[1][0] - s1[0][1] * s0[1][0];
    if d0.is_zero() && d1.is_zero() && mix.is_zero() {
        // Every pencil member is singular; both slices are rank one.
        let (Some(r0), Some(r1)) = (rank_one_matrix(s0), rank_one_matrix(s1)) else {
            return Ok(None);
        };
        return Ok(Some(vec![place(r0, vec![one, zero]), place(r1, vec![zero, one])]));
    }
    let q = crate::algebra::unipoly::UniPoly::from_coeffs(field, vec![d0, mix, d1]);
    let finite = q.roots();
    // Projective roots of the homogeneous quadratic; (0:1) appears when the
    // t^2 coefficient vanishes.
    let mut points: Vec<(FieldElement, FieldElement)> =
        finite.into_iter().map(|r| (one, r)).collect();
    if d1.is_zero() {
        points.push((zero, one));
    }
    points.dedup();
    if points.len() < 2 {
        return Ok(None);
    }
    let (p0, p1) = (points[0], points[1]);
    let m0 = mat_combine(s0, p0.0, s1, p0.1);
    let m1 = mat_combine(s0, p1.0, s1, p1.1);
    let (Some(r0), Some(r1)) = (rank_one_matrix(&m0), rank_one_matrix(&m1)) else {
        return Ok(None);
    };
    // Invert the pencil map to express the original slices.
    let v = FieldMatrix::from_rows(field, vec![vec![p0.0, p0.1], vec![p1.0, p1.1]])?;
    let w = match v.inverse() {
        Ok(w) => w,
        Err(_) => return Ok(None),
    };
    let c0 = vec![w[(0, 0)], w[(1, 0)]];
    let c1 = vec![w[(0, 1)], w[(1, 1)]];
    Ok(Some(vec![place(r0, c0), place(r1, c1)]))
}

/// Exact rank-`k_max`-or-less decomposition of a small dense tensor into
/// rank-one terms, as per-gate per-axis vectors. Order 3 is supported
/// through rank 2; higher orders only through rank 1.
pub fn tensor_decompose(
    field: Field,
    shape: &[usize],
    entries: &[FieldElement],
    k_max: usize,
) -> Result<Vec<Vec<Vec<FieldElement>>>> {
    let total: usize = shape.iter().product();
    if entries.len() != total || shape.is_empty() {
        return Err(Error::Invalid("tensor shape does not match entries".into()));
    }
    if entries.iter().all(|e| e.is_zero()) {
        return Ok(Vec::new());
    }
    let verify = |gates: &Vec<Vec<Vec<FieldElement>>>| -> bool {
        all_indices(shape).into_iter().all(|idx| {
            let mut acc = field.zero();
            for g in gates {
                let mut prod = field.one();
                for (d, &i) in idx.iter().enumerate() {
                    prod *= g[d][i];
                }
                acc += prod;
            }
            acc == entries[tensor_index(shape, &idx)]
        })
    };
    if let Some(gate) = rank_one_component(shape, entries) {
        return Ok(vec![gate]);
    }
    if k_max < 2 {
        return Err(Error::NotInClass("tensor rank exceeds the fan-in budget 1".into()));
    }
    if shape.len() == 1 {
        return Err(Error::Internal("nonzero vector failed rank-one readout".into()));
    }
    if shape.len() == 2 {
        let gates = matrix_rank_decompose(field, shape, entries, k_max)?;
        if !verify(&gates) {
            return Err(Error::Internal("matrix factorization mismatch".into()));
        }
        return Ok(gates);
    }
    if shape.len() == 3 {
        // Axes of extent one are split off as shared factors.
        if let Some(d) = shape.iter().position(|&m| m == 1) {
            let sub_shape: Vec<usize> = shape
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != d)
                .map(|(_, &m)| m)
                .collect();
            let gates = tensor_decompose(field, &sub_shape, entries, k_max)?;
            return Ok(gates
                .into_iter()
                .map(|mut g| {
                    g.insert(d, vec![field.one()]);
                    g
                })
                .collect());
        }
        if shape.iter().any(|&m| m > 2) {
            return Err(Error::BudgetExceeded {
                stage: "tensor-decompose",
                detail: "order-3 recovery needs per-axis extent at most 2 after reduction".into(),
            });
        }
        for mode in [2usize, 0, 1] {
            if let Some(gates) = order3_rank2_mode(field, shape, entries, mode)? {
                if verify(&gates) {
                    return Ok(gates);
                }
            }
        }
        return Err(Error::NotInClass(
            "tensor rank exceeds 2 over the base field".into(),
        ));
    }
    Err(Error::BudgetExceeded {
        stage: "tensor-decompose",
        detail: "orders above 3 are supported only at rank 1".into(),
    })
}

/// Learns a set-multilinear depth-3 circuit (one homogeneous linear form
/// per block per gate) with at most `k_max` gates. Per-block essential
/// reductions shrink each block to at most `k_max` coordinates, the reduced
/// coefficient tensor is read off exactly, decomposed into rank-one terms,
/// and the factors are lifted back block by block.
pub fn learn_setml_lowdeg(
    o: &Oracle,
    blocks: &[Vec<usize>],
    k_max: usize,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<DepthThreeCircuit> {
    let field = o.field();
    let n = o.num_vars();
    let mut seen = vec![false; n];
    for block in blocks {
        if block.is_empty() {
            return Err(Error::Invalid("empty variable block".into()));
        }
        for &v in block {
            if v >= n || seen[v] {
                return Err(Error::Invalid("blocks must be disjoint and in range".into()));
            }
            seen[v] = true;
        }
    }
    if pit_zero(o, budgets.pit_exponent, rng)? {
        return Ok(DepthThreeCircuit::zero(field, n));
    }
    let mut reductions = Vec::with_capacity(blocks.len());
    for block in blocks {
        let red = block_reduction(o, block, rng)?;
        if red.m == 0 {
            return Err(Error::NotInClass(
                "a block carries no essential variable although the polynomial is nonzero".into(),
            ));
        }
        if red.m > k_max {
            return Err(Error::NotInClass(format!(
                "block marginal rank {} exceeds the fan-in budget {k_max}",
                red.m
            )));
        }
        reductions.push(red);
    }
    let mut a = FieldMatrix::identity(field, n);
    let mut a_inv = FieldMatrix::identity(field, n);
    for (block, red) in blocks.iter().zip(&reductions) {
        for (i, &v) in block.iter().enumerate() {
            for (j, &w) in block.iter().enumerate() {
                a[(v, w)] = red.a[(i, j)];
                a_inv[(v, w)] = red.a_inv[(i, j)];
            }
        }
    }
    let ro = o.compose_matrix(&a);
    let shape: Vec<usize> = reductions.iter().map(|r| r.m).collect();
    let total: usize = shape.iter().product();
    if total > 4096 {
        return Err(Error::BudgetExceeded {
            stage: "tensor-readout",
            detail: format!("{total} reduced coefficients exceed the readout budget"),
        });
    }
    let mut entries = Vec::with_capacity(total);
    for idx in all_indices(&shape) {
        let mut point = vec![field.zero(); n];
        for (b, &t) in idx.iter().enumerate() {
            point[blocks[b][t]] = field.one();
        }
        entries.push(ro.eval(&point));
    }
    let gate_vecs = tensor_decompose(field, &shape, &entries, k_max)?;
    let mut gates = Vec::with_capacity(gate_vecs.len());
    for gv in gate_vecs {
        let mut forms = Vec::with_capacity(blocks.len());
        for (b, vec_b) in gv.iter().enumerate() {
            let mut coeffs = vec![field.zero(); n];
            for (t, &c) in vec_b.iter().enumerate() {
                coeffs[blocks[b][t]] = c;
            }
            forms.push(LinearForm::new(field, coeffs, field.zero()).compose_matrix(&a_inv));
        }
        gates.push(ProductGate { scalar: field.one(), forms });
    }
    let circuit = DepthThreeCircuit::new(field, n, gates);
    if !circuit.is_set_multilinear(blocks) {
        return Err(Error::Internal("lift broke the block structure".into()));
    }
    if !pit_equal(&circuit.oracle(), o, budgets.pit_exponent, rng)? {
        return Err(Error::NotInClass(
            "oracle is not set-multilinear of the recovered shape".into(),
        ));
    }
    Ok(circuit)
}

fn projective_vectors(field: Field, dim: usize) -> Vec<Vec<FieldElement>> {
    // Nonzero vectors normalized so the first nonzero coordinate is one.
    let p = field.prime();
    let mut out = Vec::new();
    for lead in 0..dim {
        let free = dim - lead - 1;
        let count = (p as u128).pow(free as u32) as u64;
        for code in 0..count {
            let mut v = vec![field.zero(); dim];
            v[lead] = field.one();
            let mut rest = code;
            for c in v.iter_mut().skip(lead + 1) {
                *c = field.el(rest % p);
                rest /= p;
            }
            out.push(v);
        }
    }
    out
}

/// Exhaustive tensor rank over a small field, reported as 0, 1, 2, or 3,
/// where 3 stands for "at least 3". Rank 2 is decided by subtracting every
/// scaled normalized rank-one tensor and testing the remainder for rank
/// one, so the field and shape must be small.
pub fn brute_force_tensor_rank(
    field: Field,
    shape: &[usize],
    entries: &[FieldElement],
) -> Result<usize> {
    let total: usize = shape.iter().product();
    if entries.len() != total {
        return Err(Error::Invalid("tensor shape does not match entries".into()));
    }
    if entries.iter().all(|e| e.is_zero()) {
        return Ok(0);
    }
    if rank_one_component(shape, entries).is_some() {
        return Ok(1);
    }
    let per_axis: Vec<Vec<Vec<FieldElement>>> = shape
        .iter()
        .map(|&m| projective_vectors(field, m))
        .collect();
    let count: u128 = per_axis.iter().map(|v| v.len() as u128).product();
    if count.saturating_mul(field.prime() as u128 - 1) > 1_000_000 {
        return Err(Error::BudgetExceeded {
            stage: "tensor-brute-force",
            detail: format!("{count} normalized rank-one tensors exceed the enumeration budget"),
        });
    }
    let indices = all_indices(shape);
    let mut diff = vec![field.zero(); total];
    for combo in per_axis.iter().map(|v| 0..v.len()).multi_cartesian_product() {
        let mut t = Vec::with_capacity(total);
        for idx in &indices {
            let mut prod = field.one();
            for (d, &i) in idx.iter().enumerate() {
                prod *= per_axis[d][combo[d]][i];
            }
            t.push(prod);
        }
        for scale in 1..field.prime() {
            let s = field.el(scale);
            for (r, (&e, &c)) in entries.iter().zip(&t).enumerate() {
                diff[r] = e - s * c;
            }
            if rank_one_component(shape, &diff).is_some() {
                return Ok(2);
            }
        }
    }
    Ok(3)
}

/// Cross-check recovery through a literal polynomial system: the first
/// gate polynomials are unknowns, the last is the residue, and the
/// requirement that each gate factors into single-variable affine forms
/// becomes quadratic constraints. Only practical over tiny fields; gates
/// with multi-variable forms are outside this backend's scope.
pub fn recover_by_system(
    g: &MultiPoly,
    k: usize,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<Option<DepthThreeCircuit>> {
    let field = g.field();
    let n = g.num_vars();
    if k < 2 {
        return Err(Error::Invalid("system backend needs fan-in at least 2".into()));
    }
    if field.prime() > 16 {
        return Err(Error::BudgetExceeded {
            stage: "system-recovery",
            detail: "literal system solving is limited to tiny fields".into(),
        });
    }
    let supp: Vec<u32> = g.support().into_iter().collect();
    let mut monos: Vec<Monomial> = vec![Monomial::one()];
    for &v in &supp {
        let with_v: Vec<Monomial> = monos.iter().map(|m| m.mul(&Monomial::var(v))).collect();
        monos.extend(with_v);
    }
    let unknowns = (k - 1) * monos.len();
    if unknowns > 10 {
        return Err(Error::BudgetExceeded {
            stage: "system-recovery",
            detail: format!("{unknowns} unknowns exceed the system backend cap of 10"),
        });
    }
    // Symbolic gate: map from x-monomial to a polynomial in the unknowns.
    type Symb = BTreeMap<Monomial, MultiPoly>;
    let sym_zero = MultiPoly::zero(field, unknowns);
    let mut gates_sym: Vec<Symb> = Vec::new();
    for t in 0..k - 1 {
        let mut s: Symb = BTreeMap::new();
        for (i, m) in monos.iter().enumerate() {
            let var = MultiPoly::from_terms(
                field,
                unknowns,
                vec![(Monomial::var((t * monos.len() + i) as u32), field.one())],
            );
            s.insert(m.clone(), var);
        }
        gates_sym.push(s);
    }
    let mut last: Symb = BTreeMap::new();
    for m in &monos {
        let mut c = MultiPoly::constant(field, unknowns, g.coeff(m));
        for s in &gates_sym {
            c = c.sub(&s[m]);
        }
        last.insert(m.clone(), c);
    }
    gates_sym.push(last);
    let sym_deriv = |s: &Symb, v: u32| -> Symb {
        let mut out: Symb = BTreeMap::new();
        for (m, c) in s {
            if let Some(rest) = m.div_var(v) {
                out.insert(rest, c.clone());
            }
        }
        out
    };
    let sym_mul = |a: &Symb, b: &Symb| -> Symb {
        let mut out: Symb = BTreeMap::new();
        for (ma, ca) in a {
            for (mb, cb) in b {
                let m = ma.mul(mb);
                let prod = ca.mul(cb);
                let entry = out.entry(m).or_insert_with(|| sym_zero.clone());
                *entry = entry.add(&prod);
            }
        }
        out
    };
    let mut equations: Vec<MultiPoly> = Vec::new();
    for s in &gates_sym {
        for (ai, &u) in supp.iter().enumerate() {
            for &v in supp.iter().skip(ai + 1) {
                let du = sym_deriv(s, u);
                let dv = sym_deriv(s, v);
                let duv = sym_deriv(&du, v);
                let lhs = sym_mul(s, &duv);
                let rhs = sym_mul(&du, &dv);
                for (m, c) in &lhs {
                    let diff = c.sub(rhs.get(m).unwrap_or(&sym_zero));
                    if !diff.is_zero() {
                        equations.push(diff);
                    }
                }
                for (m, c) in &rhs {
                    if !lhs.contains_key(m) && !c.is_zero() {
                        equations.push(c.neg());
                    }
                }
            }
        }
    }
    // Keep a linearly independent subset over the monomial basis of the
    // unknowns.
    let mut basis: BTreeMap<Monomial, usize> = BTreeMap::new();
    for eq in &equations {
        for (m, _) in eq.terms() {
            let next = basis.len();
            basis.entry(m.clone()).or_insert(next);
        }
    }
    let mut kept: Vec<MultiPoly> = Vec::new();
    let mut vectors: Vec<Vec<FieldElement>> = Vec::new();
    for eq in equations {
        let mut vec = vec![field.zero(); basis.len()];
        for (m, c) in eq.terms() {
            vec[basis[m]] = c;
        }
        let mut probe = vectors.clone();
        probe.push(vec.clone());
        let rank_new = FieldMatrix::from_rows(field, probe)?.rank();
        if rank_new > vectors.len() {
            vectors.push(vec);
            kept.push(eq);
        }
        if kept.len() >= (n.max(1) * k * (g.degree().max(1))).pow(2) {
            break;
        }
    }
    let sys = PolySystem { field, num_unknowns: unknowns, equations: kept };
    let solution = match solve_poly_system(&sys, budgets, rng)? {
        Some(s) => s,
        None => return Ok(None),
    };
    let mut gates = Vec::new();
    for t in 0..k {
        let mut poly = MultiPoly::zero(field, n);
        for (i, m) in monos.iter().enumerate() {
            let c = if t < k - 1 {
                solution[t * monos.len() + i]
            } else {
                let mut c = g.coeff(m);
                for s in 0..k - 1 {
                    c -= solution[s * monos.len() + i];
                }
                c
            };
            poly.add_term(m.clone(), c);
        }
        if poly.is_zero() {
            continue;
        }
        match as_form_product(&poly)? {
            Some((scalar, forms)) => gates.push(ProductGate { scalar, forms }),
            None => return Ok(None),
        }
    }
    let circuit = DepthThreeCircuit::new(field, n, gates);
    if circuit.expand() != *g {
        return Ok(None);
    }
    Ok(Some(circuit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{gen_ml_close_pair, gen_ml_separated, gen_setml};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn f5() -> Field {
        Field::new(5).unwrap()
    }

    fn big() -> Field {
        Field::default_field()
    }

    fn poly_from(field: Field, n: usize, terms: Vec<(Vec<(u32, u32)>, u64)>) -> MultiPoly {
        MultiPoly::from_terms(
            field,
            n,
            terms
                .into_iter()
                .map(|(pairs, c)| (Monomial::from_pairs(pairs), field.el(c)))
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn poly_system_refutes_and_solves() {
        let k = f5();
        // x + y = 1, x y = 1 has no solution mod 5.
        let sum = poly_from(k, 2, vec![(vec![(0, 1)], 1), (vec![(1, 1)], 1), (vec![], 4)]);
        let prod = poly_from(k, 2, vec![(vec![(0, 1), (1, 1)], 1), (vec![], 4)]);
        let sys = PolySystem { field: k, num_unknowns: 2, equations: vec![sum, prod] };
        let budgets = Budgets::default();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert!(solve_poly_system(&sys, &budgets, &mut rng).unwrap().is_none());
        // x^2 = 4 has the solutions 2 and 3; the sweep finds 2 first.
        let sq = poly_from(k, 1, vec![(vec![(0, 2)], 1), (vec![], 1)]);
        let sys = PolySystem { field: k, num_unknowns: 1, equations: vec![sq] };
        let sol = solve_poly_system(&sys, &budgets, &mut rng).unwrap().unwrap();
        assert_eq!(sol[0], k.el(2));
    }

    #[test]
    fn recovers_single_product() {
        let k = big();
        // 3 (x0 + 1)(x1 + 2)(x2)
        let g = poly_from(
            k,
            3,
            vec![
                (vec![(0, 1), (1, 1), (2, 1)], 3),
                (vec![(0, 1), (2, 1)], 6),
                (vec![(1, 1), (2, 1)], 3),
                (vec![(2, 1)], 6),
            ],
        );
        let cands = recover_candidates(&g, 1, &Budgets::default()).unwrap();
        assert!(!cands.is_empty());
        assert_eq!(cands[0].expand(), g);
        assert_eq!(cands[0].fan_in(), 1);
    }

    #[test]
    fn recovers_two_disjoint_products() {
        let k = big();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let c = gen_ml_separated(k, 8, 2, 4, &mut rng);
        let g = c.expand();
        let cands = recover_candidates(&g, 2, &Budgets::default()).unwrap();
        assert!(!cands.is_empty());
        for cand in &cands {
            assert_eq!(cand.expand(), g);
            assert!(cand.is_multilinear());
            assert!(cand.fan_in() <= 2);
        }
    }

    #[test]
    fn recovers_close_pair_by_splitting() {
        let k = big();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let c = gen_ml_close_pair(k, 4, 0, 1, &mut rng);
        let g = c.expand();
        assert!(recover_candidates(&g, 1, &Budgets::default()).unwrap().is_empty());
        let cands = recover_candidates(&g, 2, &Budgets::default()).unwrap();
        assert!(!cands.is_empty());
        for cand in &cands {
            assert_eq!(cand.expand(), g);
            assert!(cand.is_multilinear());
        }
    }

    #[test]
    fn recovers_product_plus_affine_tail() {
        let k = big();
        // (x0+1)(x1+2)(x2+3) + (5 x3 + 7): one gate keeps private
        // variables, the other is affine.
        let gate = poly_from(
            k,
            4,
            vec![
                (vec![(0, 1), (1, 1), (2, 1)], 1),
                (vec![(0, 1), (1, 1)], 3),
                (vec![(0, 1), (2, 1)], 2),
                (vec![(1, 1), (2, 1)], 1),
                (vec![(0, 1)], 6),
                (vec![(1, 1)], 3),
                (vec![(2, 1)], 2),
                (vec![], 6),
            ],
        );
        let tail = poly_from(k, 4, vec![(vec![(3, 1)], 5), (vec![], 7)]);
        let g = gate.add(&tail);
        let cands = recover_candidates(&g, 2, &Budgets::default()).unwrap();
        assert!(!cands.is_empty());
        for cand in &cands {
            assert_eq!(cand.expand(), g);
        }
    }

    #[test]
    fn learns_separated_circuit_from_oracle() {
        let k = big();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let c = gen_ml_separated(k, 9, 2, 3, &mut rng);
        let o = c.oracle();
        let learned = learn_ml_lowdeg(&o, 2, &Budgets::default(), &mut rng).unwrap();
        assert!(learned.is_multilinear());
        assert!(learned.fan_in() <= 2);
        assert_eq!(learned.expand(), c.expand());
    }

    #[test]
    fn lowrank_reattaches_stripped_factors() {
        let k = big();
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        // (x4 + 1)(x5 + 2) times a rank-2 core on x0, x1.
        let pair = gen_ml_close_pair(k, 6, 0, 1, &mut rng);
        let lin = poly_from(k, 6, vec![(vec![(4, 1)], 1), (vec![], 1)])
            .mul(&poly_from(k, 6, vec![(vec![(5, 1)], 1), (vec![], 2)]));
        let f = pair.expand().mul(&lin);
        let o = Oracle::from_poly(&f);
        let learned = learn_ml_lowrank(&o, 2, 8, &Budgets::default(), &mut rng).unwrap();
        assert!(learned.is_multilinear());
        assert!(learned.fan_in() <= 2);
        assert_eq!(learned.expand(), f);
    }

    #[test]
    fn semrank_promise_converts_and_learns() {
        let k = big();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let c = gen_ml_separated(k, 8, 2, 4, &mut rng);
        let o = c.oracle();
        let learned = learn_ml_low_semrank(&o, 2, 8, &Budgets::default(), &mut rng).unwrap();
        assert_eq!(learned.expand(), c.expand());
        assert_eq!(syn_bound_from_sem(1, 0), 1);
        assert_eq!(syn_bound_from_sem(2, 8), 128 * 4 * 8);
    }

    #[test]
    fn learns_zero_oracle() {
        let k = big();
        let o = Oracle::zero(k, 5);
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let learned = learn_ml_lowdeg(&o, 2, &Budgets::default(), &mut rng).unwrap();
        assert_eq!(learned.fan_in(), 0);
    }

    #[test]
    fn tensor_rank_one_roundtrip() {
        let k = big();
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let blocks = vec![vec![0, 1, 2], vec![3, 4], vec![5, 6, 7]];
        let c = gen_setml(k, 8, &blocks, 1, &mut rng);
        let o = c.oracle();
        let learned = learn_setml_lowdeg(&o, &blocks, 2, &Budgets::default(), &mut rng).unwrap();
        assert_eq!(learned.fan_in(), 1);
        assert_eq!(learned.expand(), c.expand());
    }

    #[test]
    fn tensor_rank_two_roundtrip() {
        let k = big();
        let blocks = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
        for seed in 0..8 {
            let mut rng = ChaCha12Rng::seed_from_u64(100 + seed);
            let c = gen_setml(k, 6, &blocks, 2, &mut rng);
            let o = c.oracle();
            match learn_setml_lowdeg(&o, &blocks, 2, &Budgets::default(), &mut rng) {
                Ok(learned) => {
                    assert!(learned.fan_in() <= 2);
                    assert_eq!(learned.expand(), c.expand());
                }
                Err(Error::NotInClass(_)) => {
                    // A random pair can exceed rank 2 over the base field
                    // only by landing on an irreducible pencil; that must
                    // not happen for an honestly rank-<=2 plant.
                    panic!("planted rank-2 tensor rejected");
                }
                Err(e) => panic!("unexpected failure: {e}"),
            }
        }
    }

    #[test]
    fn tensor_rank_three_is_rejected() {
        let k = big();
        // x0 x2 x5 + x0 x3 x4 + x1 x2 x4 has tensor rank 3.
        let f = poly_from(
            k,
            6,
            vec![
                (vec![(0, 1), (2, 1), (5, 1)], 1),
                (vec![(0, 1), (3, 1), (4, 1)], 1),
                (vec![(1, 1), (2, 1), (4, 1)], 1),
            ],
        );
        let blocks = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
        let o = Oracle::from_poly(&f);
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        match learn_setml_lowdeg(&o, &blocks, 2, &Budgets::default(), &mut rng) {
            Err(Error::NotInClass(_)) => {}
            other => panic!("expected a class rejection, got {other:?}"),
        }
    }

    #[test]
    fn matrix_block_decomposition() {
        let k = big();
        let blocks = vec![vec![0, 1, 2], vec![3, 4, 5]];
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let c = gen_setml(k, 6, &blocks, 2, &mut rng);
        let o = c.oracle();
        let learned = learn_setml_lowdeg(&o, &blocks, 2, &Budgets::default(), &mut rng).unwrap();
        assert!(learned.fan_in() <= 2);
        assert_eq!(learned.expand(), c.expand());
    }

    #[test]
    fn brute_force_ranks_small_tensors() {
        let k = f5();
        let zero = vec![k.zero(); 8];
        assert_eq!(brute_force_tensor_rank(k, &[2, 2, 2], &zero).unwrap(), 0);
        // e0 x e0 x e0
        let mut rank1 = vec![k.zero(); 8];
        rank1[0] = k.el(3);
        assert_eq!(brute_force_tensor_rank(k, &[2, 2, 2], &rank1).unwrap(), 1);
        // Entries of x0 x2 x5 + x0 x3 x4 + x1 x2 x4 (rank 3) with axes of
        // extent 2: index (i, j, t) = entry of x_i x_{2+j} x_{4+t}.
        let mut rank3 = vec![k.zero(); 8];
        rank3[tensor_index(&[2, 2, 2], &[0, 0, 1])] = k.one();
        rank3[tensor_index(&[2, 2, 2], &[0, 1, 0])] = k.one();
        rank3[tensor_index(&[2, 2, 2], &[1, 0, 0])] = k.one();
        assert_eq!(brute_force_tensor_rank(k, &[2, 2, 2], &rank3).unwrap(), 3);
        // Sum of two random rank ones that is not rank one.
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        loop {
            let a: Vec<u64> = (0..6).map(|_| rng.gen_range(0..5)).collect();
            let b: Vec<u64> = (0..6).map(|_| rng.gen_range(0..5)).collect();
            let mut t = vec![k.zero(); 8];
            for idx in all_indices(&[2, 2, 2]) {
                let pa = k.el(a[idx[0]]) * k.el(a[2 + idx[1]]) * k.el(a[4 + idx[2]]);
                let pb = k.el(b[idx[0]]) * k.el(b[2 + idx[1]]) * k.el(b[4 + idx[2]]);
                t[tensor_index(&[2, 2, 2], &idx)] = pa + pb;
            }
            let r = brute_force_tensor_rank(k, &[2, 2, 2], &t).unwrap();
            assert!(r <= 2);
            if r == 2 {
                break;
            }
        }
    }

    #[test]
    fn system_backend_agrees_with_completion() {
        let k = f5();
        // (x0 + 1)(x1 + 2) + (x0 + 2)(x1 + 4) over F5.
        let g1 = poly_from(k, 2, vec![(vec![(0, 1)], 1), (vec![], 1)])
            .mul(&poly_from(k, 2, vec![(vec![(1, 1)], 1), (vec![], 2)]));
        let g2 = poly_from(k, 2, vec![(vec![(0, 1)], 1), (vec![], 2)])
            .mul(&poly_from(k, 2, vec![(vec![(1, 1)], 1), (vec![], 4)]));
        let g = g1.add(&g2);
        let budgets = Budgets::default();
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let by_system = recover_by_system(&g, 2, &budgets, &mut rng)
            .unwrap()
            .expect("system backend should find a representation");
        assert_eq!(by_system.expand(), g);
        let direct = recover_candidates(&g, 2, &budgets).unwrap();
        assert!(!direct.is_empty());
        assert_eq!(direct[0].expand(), g);
    }
}
