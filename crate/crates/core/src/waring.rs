//! Waring decomposition: reconstruction of sums of powers of affine forms
//! from black-box access, with optimal (minimal) top fan-in.
//!
//! Low degrees are handled directly: reduce to essential variables,
//! interpolate, homogenize, and decompose the resulting binary form through
//! the kernel of its Hankel (catalecticant) matrix. High degrees are pulled
//! down to the base case by directional derivatives along moment-curve
//! points, and the surviving coefficients are rescaled back.

use crate::algebra::unipoly::UniPoly;
use crate::algebra::{Field, FieldElement, FieldMatrix};
use crate::circuits::PowerCircuit;
use crate::essential;
use crate::oracle::{pit_equal, pit_zero, Oracle};
use crate::poly::{interpolate_dense, LinearForm, Monomial, MultiPoly};
use crate::{Budgets, Error, Result};
use itertools::Itertools;
use rand::RngCore;
use std::collections::BTreeMap;

/// The moment-curve point (alpha, alpha^2, ..., alpha^n).
pub fn moment_point(field: Field, n: usize, alpha: u64) -> Vec<FieldElement> {
    let a = field.el(alpha);
    let mut out = Vec::with_capacity(n);
    let mut pw = field.one();
    for _ in 0..n {
        pw *= a;
        out.push(pw);
    }
    out
}

/// Total degree of the oracle's polynomial, measured as the maximum degree
/// along three independent random lines. One-sided error: the result can
/// only be too small, with probability at most (d/p)^3.
pub fn exact_degree(o: &Oracle, rng: &mut dyn RngCore) -> Result<usize> {
    let field = o.field();
    let n = o.num_vars();
    let db = o.degree_bound();
    if db as u64 >= field.prime() {
        return Err(Error::Invalid(
            "degree bound must stay below the field size".into(),
        ));
    }
    let mut best = 0usize;
    for _ in 0..3 {
        let a: Vec<FieldElement> = (0..n).map(|_| field.rand(rng)).collect();
        let b: Vec<FieldElement> = (0..n).map(|_| field.rand(rng)).collect();
        let line = o.restrict_line(&a, &b);
        let points: Vec<(FieldElement, FieldElement)> = (0..=db as u64)
            .map(|t| {
                let te = field.el(t);
                (te, line.eval(&[te]))
            })
            .collect();
        let poly = UniPoly::interpolate(field, &points)?;
        if let Some(d) = poly.degree() {
            best = best.max(d);
        }
    }
    Ok(best)
}

fn factorials(field: Field, upto: usize) -> Vec<FieldElement> {
    let mut out = Vec::with_capacity(upto + 1);
    let mut acc = field.one();
    out.push(acc);
    for t in 1..=upto {
        acc *= field.el(t as u64);
        out.push(acc);
    }
    out
}

/// Decomposes a nonzero binary form (given inside `ghr` on variables 0 and
/// 1) into at most `r_max` powers of homogeneous linear forms over `hvars`
/// coordinates. Classic apolarity: a kernel vector of the Hankel matrix at
/// the true rank encodes a squarefree polynomial whose projective roots are
/// the forms.
fn hankel_decompose(
    ghr: &MultiPoly,
    d: usize,
    r_max: usize,
    hvars: usize,
) -> Result<Vec<(FieldElement, LinearForm)>> {
    let field = ghr.field();
    let fact = factorials(field, d);
    let binom = |j: usize| -> Result<FieldElement> {
        Ok(fact[d] * (fact[j] * fact[d - j]).inv()?)
    };
    let coeff_at = |j: usize| -> FieldElement {
        let pairs = [(0u32, j as u32), (1u32, (d - j) as u32)];
        ghr.coeff(&Monomial::from_pairs(pairs.iter().copied().filter(|&(_, e)| e > 0)))
    };
    let a: Vec<FieldElement> = (0..=d).map(coeff_at).collect();
    let mut b = Vec::with_capacity(d + 1);
    for (j, &aj) in a.iter().enumerate() {
        b.push(aj * binom(j)?.inv()?);
    }
    let form_of = |alpha: FieldElement, beta: FieldElement| {
        let mut coeffs = vec![field.zero(); hvars];
        coeffs[0] = alpha;
        coeffs[1] = beta;
        LinearForm::new(field, coeffs, field.zero())
    };
    for r in 1..=r_max.min(d) {
        let mut h = FieldMatrix::zero(field, d - r + 1, r + 1);
        for i in 0..=(d - r) {
            for j in 0..=r {
                h[(i, j)] = b[i + j];
            }
        }
        let kernel = h.kernel_basis();
        let Some(v) = kernel.first() else { continue };
        // In the chart beta = 1 the apolar polynomial is sum v_j t^j; a
        // degree drop moves one root to infinity, which is the form y_0.
        let hat = UniPoly::from_coeffs(field, v.clone());
        let deg = hat.degree().unwrap_or(0);
        if r - deg > 1 {
            continue;
        }
        let rm = hat.roots_with_multiplicity();
        if rm.len() != deg || rm.iter().any(|&(_, m)| m != 1) {
            continue;
        }
        let mut points: Vec<(FieldElement, FieldElement)> =
            rm.iter().map(|&(t, _)| (t, field.one())).collect();
        if r - deg == 1 {
            points.push((field.one(), field.zero()));
        }
        // Coefficients from the overdetermined linear match of all d+1
        // binary coefficients; inconsistency sends us to the next rank.
        let mut mat = FieldMatrix::zero(field, d + 1, r);
        for (i, &(alpha, beta)) in points.iter().enumerate() {
            for j in 0..=d {
                mat[(j, i)] = binom(j)? * alpha.pow(j as u64) * beta.pow((d - j) as u64);
            }
        }
        let Some(cs) = mat.solve(&a)? else { continue };
        let terms: Vec<(FieldElement, LinearForm)> = points
            .into_iter()
            .zip(cs)
            .filter(|(_, c)| !c.is_zero())
            .map(|((alpha, beta), c)| (c, form_of(alpha, beta)))
            .collect();
        return Ok(terms);
    }
    Err(Error::NotInClass(format!(
        "binary form admits no decomposition into at most {r_max} powers"
    )))
}

fn degree_d_exponents(d: usize, vars: usize) -> Vec<Vec<usize>> {
    if vars == 0 {
        return if d == 0 { vec![vec![]] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for e in 0..=d {
        for mut rest in degree_d_exponents(d - e, vars - 1) {
            rest.insert(0, e);
            out.push(rest);
        }
    }
    out
}

/// Decomposition search for three or more essential homogeneous variables:
/// coefficients and form entries become unknowns of a literal polynomial
/// system. Only viable over tiny fields.
fn fallback_decompose(
    ghr: &MultiPoly,
    d: usize,
    mh: usize,
    k_max: usize,
    hvars: usize,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<Vec<(FieldElement, LinearForm)>> {
    let field = ghr.field();
    if field.prime() > 16 {
        return Err(Error::BudgetExceeded {
            stage: "waring-fallback",
            detail: format!(
                "{mh} essential homogeneous variables need system solving, \
                 which is limited to tiny fields"
            ),
        });
    }
    let fact = factorials(field, d);
    let exponents = degree_d_exponents(d, mh);
    for k in 1..=k_max {
        let unknowns = k * (mh + 1);
        let mut equations = Vec::with_capacity(exponents.len());
        for e in &exponents {
            let mut multinom = fact[d];
            for &ev in e {
                multinom *= fact[ev].inv()?;
            }
            let target_mono = Monomial::from_pairs(
                e.iter()
                    .enumerate()
                    .filter(|&(_, &ev)| ev > 0)
                    .map(|(v, &ev)| (v as u32, ev as u32)),
            );
            let mut eq = MultiPoly::constant(field, unknowns, -ghr.coeff(&target_mono));
            for i in 0..k {
                let mut pairs = vec![((i * (mh + 1)) as u32, 1u32)];
                for (v, &ev) in e.iter().enumerate() {
                    if ev > 0 {
                        pairs.push(((i * (mh + 1) + 1 + v) as u32, ev as u32));
                    }
                }
                eq.add_term(Monomial::from_pairs(pairs), multinom);
            }
            equations.push(eq);
        }
        let sys = crate::lowdeg::PolySystem { field, num_unknowns: unknowns, equations };
        match crate::lowdeg::solve_poly_system(&sys, budgets, rng)? {
            Some(sol) => {
                let mut terms = Vec::new();
                for i in 0..k {
                    let c = sol[i * (mh + 1)];
                    let coords = &sol[i * (mh + 1) + 1..i * (mh + 1) + 1 + mh];
                    if c.is_zero() || coords.iter().all(|x| x.is_zero()) {
                        continue;
                    }
                    let mut coeffs = vec![field.zero(); hvars];
                    coeffs[..mh].copy_from_slice(coords);
                    terms.push((c, LinearForm::new(field, coeffs, field.zero())));
                }
                return Ok(terms);
            }
            None => continue,
        }
    }
    Err(Error::NotInClass(format!(
        "no sum of at most {k_max} powers matches the reduced form"
    )))
}

/// Learns a sum of at most `k_max` powers of affine forms for the oracle's
/// polynomial, measuring the degree itself. Intended for degrees up to
/// 2 k_max + 1, where such a decomposition is unique; it stays correct (but
/// not necessarily minimal in gate order) above that.
pub fn learn_sumpow_lowdeg(
    o: &Oracle,
    k_max: usize,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<PowerCircuit> {
    let field = o.field();
    let n = o.num_vars();
    if pit_zero(o, budgets.pit_exponent, rng)? {
        return Ok(PowerCircuit::new(field, n, 0, Vec::new()));
    }
    let d = exact_degree(o, rng)?;
    if field.prime() <= d as u64 {
        return Err(Error::Invalid(
            "field characteristic must exceed the degree".into(),
        ));
    }
    if d == 0 {
        let c = o.eval(&vec![field.zero(); n]);
        let unit = LinearForm::constant_form(field, n, field.one());
        return Ok(PowerCircuit::new(field, n, 0, vec![(c, unit)]));
    }
    let red = essential::reduce(o, rng)?;
    let m = red.m;
    if m == 0 {
        return Err(Error::NotInClass(
            "positive measured degree but no essential variables".into(),
        ));
    }
    if m > k_max {
        return Err(Error::NotInClass(format!(
            "{m} essential variables exceed the fan-in budget {k_max}"
        )));
    }
    let g = interpolate_dense(&red.reduced_oracle(o), m, d)?;
    let gh = g.homogenize(d)?;
    let redh = essential::reduce_poly(&gh)?;
    let mh = redh.m;
    if mh > k_max {
        return Err(Error::NotInClass(format!(
            "{mh} essential homogeneous variables exceed the fan-in budget {k_max}"
        )));
    }
    let ghr = gh.compose_matrix(&redh.a);
    let hvars = m + 1;
    let terms_h = match mh {
        0 => {
            return Err(Error::NotInClass(
                "homogenization of a nonconstant polynomial lost all variables".into(),
            ))
        }
        1 => {
            let c = ghr.coeff(&Monomial::from_pairs([(0u32, d as u32)]));
            let mut coeffs = vec![field.zero(); hvars];
            coeffs[0] = field.one();
            vec![(c, LinearForm::new(field, coeffs, field.zero()))]
        }
        2 => hankel_decompose(&ghr, d, k_max, hvars)?,
        _ => fallback_decompose(&ghr, d, mh, k_max, hvars, budgets, rng)?,
    };
    // Lift back: reduced homogeneous coordinates, then the hyperplane z = 1,
    // then the original coordinates.
    let zvar = m as u32;
    let mut terms = Vec::with_capacity(terms_h.len());
    for (c, fh) in terms_h {
        let full_h = fh.compose_matrix(&redh.a_inv);
        let dehom = full_h.restrict(&BTreeMap::from([(zvar, field.one())]));
        let mut coeffs = vec![field.zero(); n];
        coeffs[..m].copy_from_slice(&dehom.coeffs()[..m]);
        let affine = LinearForm::new(field, coeffs, dehom.constant());
        terms.push((c, affine.compose_matrix(&red.a_inv)));
    }
    let circuit = PowerCircuit::new(field, n, d, terms);
    if !pit_equal(&circuit.oracle(), o, budgets.pit_exponent, rng)? {
        return Err(Error::NotInClass(
            "sum-of-powers reconstruction failed verification".into(),
        ));
    }
    Ok(circuit)
}

/// Reconstructs a sum of at most `k_max` powers of affine forms of any
/// degree. High degrees are reduced to the unique-decomposition regime by
/// repeated directional derivatives along moment-curve points; the point
/// whose derivative keeps the most terms alive recovers every form, and the
/// coefficients are rescaled through the derivative's falling factorial and
/// each form's pairing with the direction.
pub fn reconstruct_sumpowsum(
    o: &Oracle,
    k_max: usize,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<PowerCircuit> {
    let field = o.field();
    let n = o.num_vars();
    if pit_zero(o, budgets.pit_exponent, rng)? {
        return Ok(PowerCircuit::new(field, n, 0, Vec::new()));
    }
    let d = exact_degree(o, rng)?;
    if d <= 2 * k_max + 1 {
        return learn_sumpow_lowdeg(o, k_max, budgets, rng);
    }
    if field.prime() <= d as u64 {
        return Err(Error::Invalid(
            "field characteristic must exceed the degree".into(),
        ));
    }
    let e = d - (2 * k_max + 1);
    let mut de = field.one();
    for t in (2 * k_max + 2)..=d {
        de *= field.el(t as u64);
    }
    // Each form's pairing with a moment point is a nonzero polynomial of
    // degree at most n in alpha, so among k n + 1 points at least one keeps
    // every pairing nonzero; that point maximizes the derivative's fan-in.
    let mut best: Option<(PowerCircuit, u64)> = None;
    for alpha in 1..=(k_max * n + 1) as u64 {
        let u = moment_point(field, n, alpha);
        let derived = o.directional_derivative(&u, e)?;
        let learned = match learn_sumpow_lowdeg(&derived, k_max, budgets, rng) {
            Ok(c) => c.minimalize(),
            Err(_) => continue,
        };
        if learned.fan_in() == 0 {
            continue;
        }
        if best.as_ref().map_or(true, |(b, _)| learned.fan_in() > b.fan_in()) {
            let saturated = learned.fan_in() == k_max;
            best = Some((learned, alpha));
            if saturated {
                break;
            }
        }
    }
    let Some((g, alpha)) = best else {
        return Err(Error::NotInClass(
            "no moment direction produced a learnable derivative".into(),
        ));
    };
    let u = moment_point(field, n, alpha);
    let mut terms = Vec::with_capacity(g.terms.len());
    for (cp, form) in &g.terms {
        let pair = form.pair_linear(&u);
        if pair.is_zero() {
            return Err(Error::NotInClass(
                "a recovered derivative term pairs to zero with its own direction".into(),
            ));
        }
        let c = *cp * (de * pair.pow(e as u64)).inv()?;
        terms.push((c, form.clone()));
    }
    let circuit = PowerCircuit::new(field, n, d, terms);
    if !pit_equal(&circuit.oracle(), o, budgets.pit_exponent, rng)? {
        return Err(Error::NotInClass(
            "lifted sum-of-powers decomposition failed verification".into(),
        ));
    }
    Ok(circuit)
}

/// Exhaustive Waring rank of an explicit polynomial over a tiny field:
/// the least r at most `max_r` such that f is a linear combination of r
/// d-th powers of affine forms with nonzero linear part.
pub fn brute_force_waring_rank(f: &MultiPoly, d: usize, max_r: usize) -> Result<usize> {
    let field = f.field();
    let n = f.num_vars();
    if f.is_zero() {
        return Ok(0);
    }
    if field.prime() > 11 {
        return Err(Error::BudgetExceeded {
            stage: "waring-brute-force",
            detail: "exhaustive rank search is limited to tiny fields".into(),
        });
    }
    let p = field.prime();
    // Projectively normalized affine forms with a nonzero linear part:
    // scaling a form scales its power, so one representative per line.
    let mut powers: Vec<MultiPoly> = Vec::new();
    let mut count = 0usize;
    for lead in 0..n {
        let free = n - lead;
        let reps = (p as u128).pow(free as u32);
        for code in 0..reps {
            let mut vec = vec![field.zero(); n + 1];
            vec[lead] = field.one();
            let mut rest = code;
            for c in vec.iter_mut().skip(lead + 1) {
                *c = field.el((rest % p as u128) as u64);
                rest /= p as u128;
            }
            let form = LinearForm::new(field, vec[..n].to_vec(), vec[n]);
            let fp = form.to_poly(n);
            let mut pw = MultiPoly::constant(field, n, field.one());
            for _ in 0..d {
                pw = pw.mul(&fp);
            }
            powers.push(pw);
            count += 1;
            if count > 1200 {
                return Err(Error::BudgetExceeded {
                    stage: "waring-brute-force",
                    detail: "candidate form count exceeds the enumeration budget".into(),
                });
            }
        }
    }
    let monomials: Vec<Monomial> = {
        let mut set: std::collections::BTreeSet<Monomial> = f.terms().map(|(m, _)| m.clone()).collect();
        for pw in &powers {
            set.extend(pw.terms().map(|(m, _)| m.clone()));
        }
        set.into_iter().collect()
    };
    let rhs: Vec<FieldElement> = monomials.iter().map(|m| f.coeff(m)).collect();
    for r in 1..=max_r {
        let combos = (0..powers.len()).combinations(r);
        for (steps, combo) in combos.enumerate() {
            if steps > 200_000 {
                return Err(Error::BudgetExceeded {
                    stage: "waring-brute-force",
                    detail: "subset enumeration budget exhausted".into(),
                });
            }
            let mut mat = FieldMatrix::zero(field, monomials.len(), r);
            for (col, &pi) in combo.iter().enumerate() {
                for (row, mono) in monomials.iter().enumerate() {
                    mat[(row, col)] = powers[pi].coeff(mono);
                }
            }
            if mat.solve(&rhs)?.is_some() {
                return Ok(r);
            }
        }
    }
    Err(Error::NotInClass(format!(
        "no decomposition into at most {max_r} powers exists"
    )))
}
