//! Variable-preserving sets: a set B of coordinates, grown from black-box
//! access, such that restricting the polynomial to B at a fixed anchor
//! already exhibits the semantic cluster structure, and every restriction
//! to B plus a few more coordinates extends it consistently.

use crate::algebra::FieldElement;
use crate::cluster::{semantic_clustering, Clustering};
use crate::lowdeg::learn_ml_low_semrank;
use crate::oracle::{pit_zero, Oracle};
use crate::poly::MultiPoly;
use crate::{Budgets, Error, Result};
use itertools::Itertools;
use rand::RngCore;
use std::collections::{BTreeMap, BTreeSet};

/// The witness returned by [`find_preserving_set`]: the preserving set, the
/// anchor used for all restrictions, and the clusters of the restriction to
/// the preserving set itself.
#[derive(Clone, Debug)]
pub struct PreservingContext {
    /// Preserved coordinates, ascending.
    pub b: Vec<usize>,
    /// Anchor point; coordinates outside `b` are fixed to it.
    pub anchor: Vec<FieldElement>,
    /// Cluster polynomials of the restriction to `b`, supported on `b`.
    pub cluster_polys: Vec<MultiPoly>,
    /// Semantic rank of each cluster polynomial.
    pub cluster_ranks: Vec<usize>,
    /// Clustering threshold the structure was certified against.
    pub tau: u64,
    /// Restrictions learned while growing the set.
    pub iterations: usize,
}

impl PreservingContext {
    pub fn num_clusters(&self) -> usize {
        self.cluster_polys.len()
    }
}

fn learn_restricted_clusters(
    o: &Oracle,
    b: &BTreeSet<u32>,
    anchor: &[FieldElement],
    k_max: usize,
    tau: u64,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<Clustering> {
    let ob = o.restrict(b, anchor);
    let learned = learn_ml_low_semrank(&ob, k_max, budgets.semrank_promise as u64, budgets, rng)?;
    semantic_clustering(&learned, tau)
}

/// Checks that the clustering of the larger restriction mirrors the current
/// one: same cluster count, and a bijection pairing each new cluster,
/// restricted back to the anchor on `i_set`, with an equal current cluster
/// of no smaller rank.
fn extends_consistently(
    current: &Clustering,
    cli: &Clustering,
    i_set: &[u32],
    anchor: &[FieldElement],
) -> bool {
    if cli.num_clusters() != current.num_clusters() {
        return false;
    }
    let assign: BTreeMap<u32, FieldElement> =
        i_set.iter().map(|&v| (v, anchor[v as usize])).collect();
    let mut used = vec![false; current.num_clusters()];
    for (j, hj) in cli.cluster_polys.iter().enumerate() {
        let hj_restricted = hj.restrict(&assign);
        let matched = (0..current.num_clusters()).find(|&i| {
            !used[i]
                && current.cluster_polys[i] == hj_restricted
                && current.cluster_ranks[i] >= cli.cluster_ranks[j]
        });
        let Some(i) = matched else { return false };
        used[i] = true;
    }
    true
}

/// Grows a variable-preserving set for the oracle's polynomial at a fresh
/// random anchor.
///
/// Starting from the empty set, every subset of up to four outside
/// coordinates is adjoined to the restriction; if the resulting clustering
/// disagrees (count, polynomials after restricting back, or ranks), those
/// coordinates join the set and the scan restarts. A full pass with no
/// disagreement certifies the set.
pub fn find_preserving_set(
    o: &Oracle,
    k_max: usize,
    tau: u64,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<PreservingContext> {
    let field = o.field();
    let n = o.num_vars();
    let anchor: Vec<FieldElement> = (0..n).map(|_| field.rand(rng)).collect();
    let mut iterations = 0usize;
    if pit_zero(o, budgets.pit_exponent, rng)? {
        return Ok(PreservingContext {
            b: Vec::new(),
            anchor,
            cluster_polys: Vec::new(),
            cluster_ranks: Vec::new(),
            tau,
            iterations,
        });
    }
    let mut b: BTreeSet<u32> = BTreeSet::new();
    let mut current = learn_restricted_clusters(o, &b, &anchor, k_max, tau, budgets, rng)?;
    'scan: loop {
        if b.len() > budgets.preserve_max_b {
            return Err(Error::BudgetExceeded {
                stage: "preserving-set",
                detail: format!("preserving set grew past {} coordinates", budgets.preserve_max_b),
            });
        }
        let outside: Vec<u32> = (0..n as u32).filter(|v| !b.contains(v)).collect();
        for size in 1..=outside.len().min(4) {
            for i_set in outside.iter().copied().combinations(size) {
                iterations += 1;
                if iterations > budgets.preserve_max_iters {
                    return Err(Error::BudgetExceeded {
                        stage: "preserving-set",
                        detail: format!(
                            "no stable set within {} restrictions",
                            budgets.preserve_max_iters
                        ),
                    });
                }
                let mut bi = b.clone();
                bi.extend(i_set.iter().copied());
                let cli = learn_restricted_clusters(o, &bi, &anchor, k_max, tau, budgets, rng)?;
                if !extends_consistently(&current, &cli, &i_set, &anchor) {
                    b = bi;
                    current = learn_restricted_clusters(o, &b, &anchor, k_max, tau, budgets, rng)?;
                    continue 'scan;
                }
            }
        }
        break;
    }
    Ok(PreservingContext {
        b: b.into_iter().map(|v| v as usize).collect(),
        anchor,
        cluster_polys: current.cluster_polys,
        cluster_ranks: current.cluster_ranks,
        tau,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Field;
    use crate::circuits::{gen_ml_close_pair, gen_ml_gate, DepthThreeCircuit};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn big() -> Field {
        Field::default_field()
    }

    #[test]
    fn zero_oracle_needs_no_coordinates() {
        let k = big();
        let o = Oracle::zero(k, 6);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let ctx = find_preserving_set(&o, 2, 3, &Budgets::default(), &mut rng).unwrap();
        assert!(ctx.b.is_empty());
        assert_eq!(ctx.num_clusters(), 0);
    }

    #[test]
    fn single_gate_stabilizes_with_one_cluster() {
        let k = big();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let c = DepthThreeCircuit::new(k, 6, vec![gen_ml_gate(k, 6, &[0, 1, 2], &mut rng)]);
        let ctx = find_preserving_set(&c.oracle(), 2, 3, &Budgets::default(), &mut rng).unwrap();
        assert_eq!(ctx.num_clusters(), 1);
        let total: MultiPoly = ctx
            .cluster_polys
            .iter()
            .fold(MultiPoly::zero(k, 6), |acc, p| acc.add(p));
        let keep: BTreeSet<u32> = ctx.b.iter().map(|&v| v as u32).collect();
        let expected = c.expand().restrict_complement(&keep, &ctx.anchor);
        assert_eq!(total, expected);
    }

    #[test]
    fn close_pair_plus_far_gate_splits_into_two_clusters() {
        let k = big();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut c = gen_ml_close_pair(k, 10, 0, 1, &mut rng);
        c.gates.push(gen_ml_gate(k, 10, &[4, 5, 6, 7], &mut rng));
        let ctx = find_preserving_set(&c.oracle(), 3, 3, &Budgets::default(), &mut rng).unwrap();
        assert_eq!(ctx.num_clusters(), 2);
        // The clusters of the restriction must sum to the restriction.
        let keep: BTreeSet<u32> = ctx.b.iter().map(|&v| v as u32).collect();
        let expected = c.expand().restrict_complement(&keep, &ctx.anchor);
        let total = ctx
            .cluster_polys
            .iter()
            .fold(MultiPoly::zero(k, 10), |acc, p| acc.add(p));
        assert_eq!(total, expected);
        for p in &ctx.cluster_polys {
            assert!(p.support().iter().all(|v| keep.contains(v)));
        }
    }

    #[test]
    fn iterations_stay_within_budget() {
        let k = big();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut c = gen_ml_close_pair(k, 8, 0, 1, &mut rng);
        c.gates.push(gen_ml_gate(k, 8, &[3, 4, 5, 6], &mut rng));
        let ctx = find_preserving_set(&c.oracle(), 3, 3, &Budgets::default(), &mut rng).unwrap();
        assert!(ctx.iterations <= Budgets::default().preserve_max_iters);
        assert!(ctx.b.len() <= 8);
    }
}
