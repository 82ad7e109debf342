//! Clustering of product gates: partitioning a depth-3 circuit into groups
//! that are internally low-rank and pairwise far apart, under either the
//! semantic (polynomial) or syntactic (form span) rank measure.

use crate::circuits::DepthThreeCircuit;
use crate::poly::MultiPoly;
use crate::semrank::sem_rank;
use crate::{Error, Result};
use std::collections::HashMap;

/// Degree-aware rank bound ceil(4 k^2 log2(2d)).
pub fn rank_bound(k: usize, d: usize) -> u64 {
    if k == 0 {
        return 0;
    }
    let v = 4.0 * (k as f64) * (k as f64) * (2.0 * d.max(1) as f64).log2();
    v.ceil() as u64
}

/// Multilinear rank bound ceil(10 k^2 log2 k).
pub fn rank_bound_ml(k: usize) -> u64 {
    if k <= 1 {
        return 0;
    }
    let v = 10.0 * (k as f64) * (k as f64) * (k as f64).log2();
    v.ceil() as u64
}

/// All partitions of {0, ..., k-1} in lexicographic restricted-growth-string
/// order (the single-cluster partition first, all singletons last). Clusters
/// are ordered by first occurrence.
pub fn set_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; k];
    loop {
        let clusters = rgs.iter().max().copied().unwrap_or(0) + 1;
        let mut partition = vec![Vec::new(); clusters];
        for (i, &c) in rgs.iter().enumerate() {
            partition[c].push(i);
        }
        out.push(partition);
        // Advance to the next restricted growth string.
        let mut i = k;
        loop {
            if i == 1 {
                return out;
            }
            i -= 1;
            let cap = rgs[..i].iter().max().copied().unwrap_or(0) + 1;
            if rgs[i] < cap {
                rgs[i] += 1;
                for t in i + 1..k {
                    rgs[t] = 0;
                }
                break;
            }
        }
    }
}

/// Which rank measure a clustering was computed under.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RankKind {
    Semantic,
    Syntactic,
}

/// A clustering of the gates of a circuit.
#[derive(Clone, Debug)]
pub struct Clustering {
    pub kind: RankKind,
    pub tau: u64,
    /// Gate indices per cluster, each ascending; clusters ordered by their
    /// smallest gate index.
    pub partition: Vec<Vec<usize>>,
    /// Expanded cluster polynomials (semantic clusterings only; empty for
    /// syntactic ones, whose clusters may be too large to expand).
    pub cluster_polys: Vec<MultiPoly>,
    /// Raw per-cluster rank (semantic rank of the cluster polynomial, or
    /// syntactic rank of the cluster subcircuit).
    pub cluster_ranks: Vec<usize>,
    /// The partition rank: for semantic clusterings max over clusters of
    /// max(1, rank); for syntactic ones the certified value, floored at the
    /// multilinear rank bound for twice the fan-in.
    pub r: u64,
    /// Max raw cluster rank, unfloored.
    pub r_raw: u64,
}

impl Clustering {
    pub fn num_clusters(&self) -> usize {
        self.partition.len()
    }

    /// The subcircuit of one cluster.
    pub fn cluster_circuit(&self, c: &DepthThreeCircuit, i: usize) -> DepthThreeCircuit {
        c.subcircuit(&self.partition[i])
    }
}

const MAX_ENUMERATED_FAN_IN: usize = 8;

/// Caches the semantic rank (and zero-ness) of gate-subset sums, keyed by
/// bitmask; distances reuse the same cache through union masks.
struct SemSubsetCache<'a> {
    gate_polys: Vec<MultiPoly>,
    circuit: &'a DepthThreeCircuit,
    polys: HashMap<u32, MultiPoly>,
    ranks: HashMap<u32, (usize, bool)>,
}

impl<'a> SemSubsetCache<'a> {
    fn new(c: &'a DepthThreeCircuit) -> SemSubsetCache<'a> {
        SemSubsetCache {
            gate_polys: (0..c.fan_in())
                .map(|i| c.subcircuit(&[i]).expand())
                .collect(),
            circuit: c,
            polys: HashMap::new(),
            ranks: HashMap::new(),
        }
    }

    fn poly(&mut self, mask: u32) -> &MultiPoly {
        if !self.polys.contains_key(&mask) {
            let mut acc = MultiPoly::zero(self.circuit.field(), self.circuit.num_vars());
            for (i, gp) in self.gate_polys.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    acc = acc.add(gp);
                }
            }
            self.polys.insert(mask, acc);
        }
        &self.polys[&mask]
    }

    /// (semantic rank, is the subset sum identically zero)
    fn rank(&mut self, mask: u32) -> Result<(usize, bool)> {
        if let Some(&hit) = self.ranks.get(&mask) {
            return Ok(hit);
        }
        let p = self.poly(mask).clone();
        let entry = (sem_rank(&p)?, p.is_zero());
        self.ranks.insert(mask, entry);
        Ok(entry)
    }
}

fn mask_of(cluster: &[usize]) -> u32 {
    cluster.iter().fold(0u32, |m, &i| m | (1 << i))
}

/// Semantic clustering: enumerates every partition of the gates, keeps
/// those whose clusters are pairwise at semantic distance at least
/// tau * r (r = the partition's max cluster rank, floored at 1), and
/// returns one minimizing r, preferring more clusters and then the first in
/// restricted-growth-string order.
///
/// The result depends only on the circuit's polynomial up to which gates
/// land together, because semantic ranks and distances are properties of
/// the cluster sums.
pub fn semantic_clustering(c: &DepthThreeCircuit, tau: u64) -> Result<Clustering> {
    if tau == 0 {
        return Err(Error::Invalid("tau must be positive".into()));
    }
    if !c.is_multilinear() {
        return Err(Error::Invalid("semantic clustering needs a multilinear circuit".into()));
    }
    let k = c.fan_in();
    if k > MAX_ENUMERATED_FAN_IN {
        return Err(Error::BudgetExceeded {
            stage: "semantic-clustering",
            detail: format!("fan-in {k} exceeds the partition enumeration cap"),
        });
    }
    let mut cache = SemSubsetCache::new(c);
    let mut best: Option<(u64, Vec<Vec<usize>>)> = None;
    for partition in set_partitions(k) {
        let masks: Vec<u32> = partition.iter().map(|cl| mask_of(cl)).collect();
        let mut r_prime = 0u64;
        for &m in &masks {
            let (rank, _) = cache.rank(m)?;
            r_prime = r_prime.max(rank.max(1) as u64);
        }
        let threshold = tau.saturating_mul(r_prime);
        let mut valid = true;
        'pairs: for i in 0..masks.len() {
            for j in (i + 1)..masks.len() {
                let union = masks[i] | masks[j];
                let (rank, zero) = cache.rank(union)?;
                let dist = if zero { 0 } else { rank as u64 };
                if dist < threshold {
                    valid = false;
                    break 'pairs;
                }
            }
        }
        if !valid {
            continue;
        }
        let better = match &best {
            None => true,
            Some((br, bp)) => {
                r_prime < *br || (r_prime == *br && partition.len() > bp.len())
            }
        };
        if better {
            best = Some((r_prime, partition));
        }
    }
    let (r, partition) = best.ok_or_else(|| {
        Error::Internal("no valid partition; the single-cluster partition must be valid".into())
    })?;
    let mut cluster_polys = Vec::with_capacity(partition.len());
    let mut cluster_ranks = Vec::with_capacity(partition.len());
    let mut r_raw = 0u64;
    for cl in &partition {
        let m = mask_of(cl);
        let (rank, _) = cache.rank(m)?;
        cluster_polys.push(cache.poly(m).clone());
        cluster_ranks.push(rank);
        r_raw = r_raw.max(rank as u64);
    }
    Ok(Clustering {
        kind: RankKind::Semantic,
        tau,
        partition,
        cluster_polys,
        cluster_ranks,
        r,
        r_raw,
    })
}

/// Caches syntactic subset ranks by gate bitmask.
struct SynSubsetCache<'a> {
    circuit: &'a DepthThreeCircuit,
    ranks: HashMap<u32, usize>,
}

impl<'a> SynSubsetCache<'a> {
    fn new(c: &'a DepthThreeCircuit) -> SynSubsetCache<'a> {
        SynSubsetCache { circuit: c, ranks: HashMap::new() }
    }

    fn rank(&mut self, mask: u32) -> usize {
        if let Some(&hit) = self.ranks.get(&mask) {
            return hit;
        }
        let indices: Vec<usize> = (0..self.circuit.fan_in())
            .filter(|&i| mask & (1 << i) != 0)
            .collect();
        let r = self.circuit.subcircuit(&indices).syn_rank();
        self.ranks.insert(mask, r);
        r
    }
}

fn syn_certified(k: usize, max_cluster_rank: usize) -> u64 {
    rank_bound_ml(2 * k).max(max_cluster_rank as u64)
}

/// Syntactic clustering by merging: starting from singletons, repeatedly
/// merges the first pair of clusters at syntactic distance below
/// tau * r_cert, where r_cert is the certified partition rank (the max
/// cluster rank floored at the multilinear rank bound for fan-in 2k).
///
/// With `exhaustive` set (fan-in at most 8), a refinement pass searches all
/// partitions for the lowest certified rank among valid ones, preferring
/// more clusters and then restricted-growth order; this subsumes the merge
/// result. Requires tau >= 10.
pub fn syntactic_clustering(
    c: &DepthThreeCircuit,
    tau: u64,
    exhaustive: bool,
) -> Result<Clustering> {
    if tau < 10 {
        return Err(Error::Invalid(format!("tau {tau} below the minimum of 10")));
    }
    let k = c.fan_in();
    if k > 32 {
        return Err(Error::BudgetExceeded {
            stage: "syntactic-clustering",
            detail: format!("fan-in {k} exceeds the bitmask budget"),
        });
    }
    let mut cache = SynSubsetCache::new(c);
    let partition: Vec<Vec<usize>>;
    if exhaustive && k <= MAX_ENUMERATED_FAN_IN {
        let mut best: Option<(u64, Vec<Vec<usize>>)> = None;
        for cand in set_partitions(k) {
            let masks: Vec<u32> = cand.iter().map(|cl| mask_of(cl)).collect();
            let max_rank = masks.iter().map(|&m| cache.rank(m)).max().unwrap_or(0);
            let r_cert = syn_certified(k, max_rank);
            let threshold = tau.saturating_mul(r_cert);
            let valid = (0..masks.len()).all(|i| {
                ((i + 1)..masks.len())
                    .all(|j| cache.rank(masks[i] | masks[j]) as u64 >= threshold)
            });
            if !valid {
                continue;
            }
            let better = match &best {
                None => true,
                Some((br, bp)) => r_cert < *br || (r_cert == *br && cand.len() > bp.len()),
            };
            if better {
                best = Some((r_cert, cand));
            }
        }
        partition = best
            .ok_or_else(|| Error::Internal("single-cluster partition must be valid".into()))?
            .1;
    } else {
        // Merge fixpoint from singletons.
        let mut clusters: Vec<Vec<usize>> = (0..k).map(|i| vec![i]).collect();
        loop {
            let masks: Vec<u32> = clusters.iter().map(|cl| mask_of(cl)).collect();
            let max_rank = masks.iter().map(|&m| cache.rank(m)).max().unwrap_or(0);
            let threshold = tau.saturating_mul(syn_certified(k, max_rank));
            let mut merged = false;
            'outer: for i in 0..clusters.len() {
                for j in (i + 1)..clusters.len() {
                    if (cache.rank(masks[i] | masks[j]) as u64) < threshold {
                        let absorbed = clusters.remove(j);
                        clusters[i].extend(absorbed);
                        clusters[i].sort_unstable();
                        merged = true;
                        break 'outer;
                    }
                }
            }
            if !merged {
                break;
            }
        }
        clusters.sort_by_key(|cl| cl[0]);
        partition = clusters;
    }
    let cluster_ranks: Vec<usize> = partition.iter().map(|cl| cache.rank(mask_of(cl))).collect();
    let r_raw = cluster_ranks.iter().copied().max().unwrap_or(0) as u64;
    Ok(Clustering {
        kind: RankKind::Syntactic,
        tau,
        partition,
        cluster_polys: Vec::new(),
        cluster_ranks: cluster_ranks.clone(),
        r: syn_certified(k, r_raw as usize),
        r_raw,
    })
}

/// A validity report for a proposed clustering.
#[derive(Clone, Debug)]
pub struct PartitionReport {
    pub ok: bool,
    pub r: u64,
    pub violations: Vec<String>,
}

/// Checks that `partition` is a partition of the circuit's gates and that
/// every pair of clusters is at distance at least tau * r under the given
/// rank measure, where r is the partition rank of `kind`.
pub fn validate_partition(
    c: &DepthThreeCircuit,
    partition: &[Vec<usize>],
    tau: u64,
    kind: RankKind,
) -> Result<PartitionReport> {
    let k = c.fan_in();
    let mut violations = Vec::new();
    let mut seen = vec![false; k];
    for cl in partition {
        for &i in cl {
            if i >= k {
                violations.push(format!("gate index {i} out of range"));
            } else if seen[i] {
                violations.push(format!("gate {i} appears in two clusters"));
            } else {
                seen[i] = true;
            }
        }
    }
    for (i, s) in seen.iter().enumerate() {
        if !s {
            violations.push(format!("gate {i} missing from the partition"));
        }
    }
    if !violations.is_empty() {
        return Ok(PartitionReport { ok: false, r: 0, violations });
    }
    let masks: Vec<u32> = partition.iter().map(|cl| mask_of(cl)).collect();
    let (r, dist): (u64, Box<dyn FnMut(u32) -> Result<u64>>) = match kind {
        RankKind::Semantic => {
            let mut cache = SemSubsetCache::new(c);
            let mut r = 0u64;
            for &m in &masks {
                r = r.max(cache.rank(m)?.0.max(1) as u64);
            }
            (
                r,
                Box::new(move |m| {
                    let (rank, zero) = cache.rank(m)?;
                    Ok(if zero { 0 } else { rank as u64 })
                }),
            )
        }
        RankKind::Syntactic => {
            let mut cache = SynSubsetCache::new(c);
            let max_rank = masks.iter().map(|&m| cache.rank(m)).max().unwrap_or(0);
            (
                syn_certified(k, max_rank),
                Box::new(move |m| Ok(cache.rank(m) as u64)),
            )
        }
    };
    let mut dist = dist;
    let threshold = tau.saturating_mul(r);
    for i in 0..masks.len() {
        for j in (i + 1)..masks.len() {
            let d = dist(masks[i] | masks[j])?;
            if d < threshold {
                violations.push(format!(
                    "clusters {i} and {j} at distance {d} < {threshold}"
                ));
            }
        }
    }
    Ok(PartitionReport { ok: violations.is_empty(), r, violations })
}
