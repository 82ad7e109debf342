//! Full reconstruction of multilinear depth-3 circuits from black-box access.
//!
//! The driver first finds a preserving coordinate set (see [`crate::preserve`]),
//! which pins down the semantic clusters of the target as polynomials over a
//! small set of coordinates `B`. A [`ClusterEvaluator`] then turns each cluster
//! into its own black-box oracle: the value of a cluster at an arbitrary point
//! is recovered by sampling the clusters along a random line through the point
//! and running Reed-Solomon decoding on each coordinate, so that occasional
//! faulty line samples are corrected rather than propagated. Each cluster
//! oracle has low semantic rank by construction and is handed to the low-rank
//! learner from [`crate::lowdeg`]; the sum of the learned subcircuits is the
//! reconstructed circuit, verified against the target by polynomial identity
//! testing.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::algebra::unipoly::rs_decode;
use crate::algebra::FieldElement;
use crate::circuits::DepthThreeCircuit;
use crate::cluster::{rank_bound_ml, semantic_clustering};
use crate::lowdeg::{learn_ml_low_semrank, learn_setml_lowdeg};
use crate::oracle::{pit_equal, pit_zero, Oracle};
use crate::poly::MultiPoly;
use crate::preserve::{find_preserving_set, PreservingContext};
use crate::{Budgets, Error, Result};

/// Mutable evaluator state, shared behind a mutex so cluster oracles can be
/// cloned freely.
struct EvalState {
    rng: ChaCha12Rng,
    /// Walk memo: a moved coordinate index together with the values assigned
    /// to the non-preserved coordinates strictly before it, mapped to the
    /// relearned clusters still live in that coordinate, slot-matched to the
    /// current ones. The relearning work depends only on this key, so walks
    /// that move the coordinate to different values all share it.
    memo: HashMap<(usize, Vec<u64>), Vec<MultiPoly>>,
    /// Fully decoded cluster values per evaluation point.
    point_cache: HashMap<Vec<u64>, Vec<FieldElement>>,
    /// Shared line direction, drawn lazily and reused across decodes so that
    /// query points differing only on preserved coordinates produce line
    /// points with identical non-preserved prefixes, which the walk memo then
    /// absorbs. Cleared and redrawn when a window cannot be filled.
    line_dir: Option<Vec<FieldElement>>,
    /// Shared line parameters, extended on demand; every decode tries them in
    /// order for the same reason.
    line_ts: Vec<FieldElement>,
    /// First evaluation failure; once set, cluster oracles return zero and the
    /// caller is expected to surface this error instead of a learner failure.
    sticky: Option<Error>,
}

/// Black-box access to the individual semantic clusters of a polynomial, given
/// a preserving coordinate set for it.
///
/// Cluster values at a point `w` are computed by walking the non-preserved
/// coordinates one at a time from the anchor of the preserving set to `w`,
/// relearning the restriction at each step and matching the new clusters to
/// the old ones by exact restriction equality. Single walks can fail or
/// silently misattribute values when an intermediate restriction is
/// degenerate, so arbitrary points are evaluated through `bw_errors`-tolerant
/// Reed-Solomon decoding along a random line instead of by a single walk.
pub struct ClusterEvaluator {
    o: Oracle,
    ctx: PreservingContext,
    k_max: usize,
    budgets: Budgets,
    outside: Vec<usize>,
    state: Mutex<EvalState>,
}

impl ClusterEvaluator {
    pub fn new(
        o: Oracle,
        ctx: PreservingContext,
        k_max: usize,
        budgets: Budgets,
        seed: u64,
    ) -> ClusterEvaluator {
        let outside = (0..o.num_vars())
            .filter(|v| !ctx.b.contains(v))
            .collect();
        ClusterEvaluator {
            o,
            ctx,
            k_max,
            budgets,
            outside,
            state: Mutex::new(EvalState {
                rng: ChaCha12Rng::seed_from_u64(seed),
                memo: HashMap::new(),
                point_cache: HashMap::new(),
                line_dir: None,
                line_ts: Vec::new(),
                sticky: None,
            }),
        }
    }

    /// Number of semantic clusters being tracked.
    pub fn num_clusters(&self) -> usize {
        self.ctx.cluster_polys.len()
    }

    /// The preserving context this evaluator was built from.
    pub fn context(&self) -> &PreservingContext {
        &self.ctx
    }

    /// First evaluation failure recorded by any cluster oracle, if one
    /// occurred. Cluster oracles are infallible by signature, so they report
    /// zero after a failure and park the real error here.
    pub fn take_error(&self) -> Option<Error> {
        self.state.lock().unwrap().sticky.take()
    }

    /// Walks the non-preserved coordinates from the anchor to `w`, returning
    /// the value of each cluster at `w`. At every step the restriction of the
    /// target to the preserved coordinates plus the coordinate being moved is
    /// relearned and clustered; each new cluster must restrict back to exactly
    /// one current cluster, which it then replaces. A failed count, match, or
    /// final sum check aborts the walk.
    fn walk(&self, st: &mut EvalState, w: &[FieldElement]) -> Result<Vec<FieldElement>> {
        let field = self.o.field();
        let mut cur = self.ctx.cluster_polys.clone();
        let mut prefix: Vec<u64> = Vec::with_capacity(self.outside.len());
        for (step, &j) in self.outside.iter().enumerate() {
            if w[j] == self.ctx.anchor[j] {
                prefix.push(w[j].value());
                continue;
            }
            let key = (j, prefix.clone());
            let live = match st.memo.get(&key) {
                Some(hit) => hit.clone(),
                None => {
                    let mut gamma = self.ctx.anchor.clone();
                    for (&v, &val) in self.outside[..step].iter().zip(prefix.iter()) {
                        gamma[v] = field.el(val);
                    }
                    let mut keep: std::collections::BTreeSet<u32> =
                        self.ctx.b.iter().map(|&v| v as u32).collect();
                    keep.insert(j as u32);
                    let ro = self.o.restrict(&keep, &gamma);
                    let learned = learn_ml_low_semrank(
                        &ro,
                        self.k_max,
                        self.budgets.semrank_promise as u64,
                        &self.budgets,
                        &mut st.rng,
                    )?;
                    let clustering = semantic_clustering(&learned, self.ctx.tau)?;
                    if clustering.num_clusters() != cur.len() {
                        return Err(Error::DecodeFailure(format!(
                            "cluster count changed from {} to {} while moving coordinate {j}",
                            cur.len(),
                            clustering.num_clusters()
                        )));
                    }
                    let mut old = std::collections::BTreeMap::new();
                    old.insert(j as u32, self.ctx.anchor[j]);
                    let mut live: Vec<Option<MultiPoly>> = vec![None; cur.len()];
                    for h in clustering.cluster_polys {
                        let back = h.restrict(&old);
                        let slot = cur
                            .iter()
                            .enumerate()
                            .find(|(i, c)| live[*i].is_none() && *c == &back);
                        match slot {
                            Some((i, _)) => live[i] = Some(h),
                            None => {
                                return Err(Error::DecodeFailure(format!(
                                    "no current cluster matches a relearned one at coordinate {j}"
                                )))
                            }
                        }
                    }
                    let live: Vec<MultiPoly> = live.into_iter().map(|p| p.unwrap()).collect();
                    st.memo.insert(key, live.clone());
                    live
                }
            };
            let mut new = std::collections::BTreeMap::new();
            new.insert(j as u32, w[j]);
            cur = live.iter().map(|h| h.restrict(&new)).collect();
            prefix.push(w[j].value());
        }
        let values: Vec<FieldElement> = cur.iter().map(|p| p.eval(w)).collect();
        let mut sum = field.zero();
        for &v in &values {
            sum = sum + v;
        }
        if sum != self.o.eval(w) {
            return Err(Error::DecodeFailure(
                "cluster values do not sum to the target value".into(),
            ));
        }
        Ok(values)
    }

    /// Samples all clusters at `window` points of a random line through `w`,
    /// skipping line points where the walk fails. Returns the line parameters
    /// and, per sample, the vector of cluster values. The point `w` itself sits
    /// at parameter zero and is never sampled directly. The line direction and
    /// the candidate parameters are drawn once per evaluator and shared by all
    /// decodes, which keeps the line points of nearby query points on common
    /// walk prefixes.
    pub fn line_samples(
        &self,
        w: &[FieldElement],
        window: usize,
    ) -> Result<(Vec<FieldElement>, Vec<Vec<FieldElement>>)> {
        let st = &mut *self.state.lock().unwrap();
        self.line_samples_inner(st, w, window)
    }

    fn line_samples_inner(
        &self,
        st: &mut EvalState,
        w: &[FieldElement],
        window: usize,
    ) -> Result<(Vec<FieldElement>, Vec<Vec<FieldElement>>)> {
        let field = self.o.field();
        if (window as u128) >= field.prime() as u128 {
            return Err(Error::Invalid(format!(
                "window {window} does not fit in a field of size {}",
                field.prime()
            )));
        }
        if st.line_dir.is_none() {
            st.line_dir = Some((0..self.o.num_vars()).map(|_| field.rand(&mut st.rng)).collect());
        }
        let dir = st.line_dir.clone().unwrap();
        let mut ts = Vec::with_capacity(window);
        let mut rows = Vec::with_capacity(window);
        let mut cursor = 0usize;
        let mut attempts = 0usize;
        while ts.len() < window {
            attempts += 1;
            if attempts > 2 * window + 32 {
                return Err(Error::DecodeFailure(format!(
                    "only {} of {window} line samples succeeded",
                    ts.len()
                )));
            }
            if cursor == st.line_ts.len() {
                let t = loop {
                    let cand = field.rand_nonzero(&mut st.rng);
                    if !st.line_ts.iter().any(|x| *x == cand) {
                        break cand;
                    }
                };
                st.line_ts.push(t);
            }
            let t = st.line_ts[cursor];
            cursor += 1;
            let point: Vec<FieldElement> = w
                .iter()
                .zip(dir.iter())
                .map(|(&wi, &ui)| wi + t * ui)
                .collect();
            match self.walk(st, &point) {
                Ok(values) => {
                    ts.push(t);
                    rows.push(values);
                }
                Err(Error::DecodeFailure(_)) | Err(Error::NotInClass(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Ok((ts, rows))
    }

    /// Evaluates every cluster at `w`, correcting up to `bw_errors` faulty
    /// line samples per cluster, and checks that the decoded values sum to the
    /// target's value at `w`.
    pub fn eval_all(&self, w: &[FieldElement]) -> Result<Vec<FieldElement>> {
        let st = &mut *self.state.lock().unwrap();
        let key: Vec<u64> = w.iter().map(|x| x.value()).collect();
        if let Some(hit) = st.point_cache.get(&key) {
            return Ok(hit.clone());
        }
        let field = self.o.field();
        let errors = self.budgets.bw_errors;
        let window = (self.o.degree_bound() + 2 * errors + 1).max(self.budgets.bw_min_window);
        let (ts, rows) = match self.line_samples_inner(st, w, window) {
            Ok(sampled) => sampled,
            Err(Error::DecodeFailure(_)) => {
                st.line_dir = None;
                self.line_samples_inner(st, w, window)?
            }
            Err(e) => return Err(e),
        };
        let mut values = Vec::with_capacity(self.num_clusters());
        for i in 0..self.num_clusters() {
            let points: Vec<(FieldElement, FieldElement)> =
                ts.iter().zip(rows.iter()).map(|(&t, r)| (t, r[i])).collect();
            let poly = rs_decode(field, &points, self.o.degree_bound(), errors)?;
            values.push(poly.eval(field.zero()));
        }
        let mut sum = field.zero();
        for &v in &values {
            sum = sum + v;
        }
        if sum != self.o.eval(w) {
            return Err(Error::DecodeFailure(
                "decoded cluster values do not sum to the target value".into(),
            ));
        }
        st.point_cache.insert(key, values.clone());
        Ok(values)
    }

    /// Black-box oracle for cluster `i`. The oracle signature is infallible,
    /// so an evaluation failure is parked via [`ClusterEvaluator::take_error`]
    /// and zero is returned from then on.
    pub fn cluster_oracle(self: &Arc<Self>, i: usize) -> Oracle {
        let ev = Arc::clone(self);
        let field = self.o.field();
        Oracle::from_fn(
            field,
            self.o.num_vars(),
            self.o.degree_bound(),
            1,
            move |point| {
                if ev.state.lock().unwrap().sticky.is_some() {
                    return field.zero();
                }
                match ev.eval_all(point) {
                    Ok(values) => values[i],
                    Err(e) => {
                        let st = &mut *ev.state.lock().unwrap();
                        if st.sticky.is_none() {
                            st.sticky = Some(e);
                        }
                        field.zero()
                    }
                }
            },
        )
    }
}

/// A reconstructed circuit together with the run's headline diagnostics.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub circuit: DepthThreeCircuit,
    /// Distance threshold the accepted run used.
    pub tau: u64,
    /// Preserving coordinate set the accepted run used.
    pub preserved: Vec<usize>,
    /// Number of semantic clusters learned.
    pub num_clusters: usize,
}

/// One reconstruction attempt at a fixed distance threshold.
fn try_reconstruct(
    o: &Oracle,
    k_max: usize,
    tau: u64,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<Reconstruction> {
    let field = o.field();
    let ctx = find_preserving_set(o, k_max, tau, budgets, rng)?;
    let preserved = ctx.b.clone();
    let num_clusters = ctx.num_clusters();
    if num_clusters == 0 {
        return Ok(Reconstruction {
            circuit: DepthThreeCircuit::zero(field, o.num_vars()),
            tau,
            preserved,
            num_clusters,
        });
    }
    let mut eval_budgets = budgets.clone();
    eval_budgets.bw_errors = 2;
    eval_budgets.bw_min_window = 0;
    let ev = Arc::new(ClusterEvaluator::new(
        o.clone(),
        ctx,
        k_max,
        eval_budgets,
        rng.gen(),
    ));
    let mut total = DepthThreeCircuit::zero(field, o.num_vars());
    for i in 0..ev.num_clusters() {
        let co = ev.cluster_oracle(i);
        match learn_ml_low_semrank(&co, k_max, budgets.semrank_promise as u64, budgets, rng) {
            Ok(part) => total = total.add(&part),
            Err(e) => return Err(ev.take_error().unwrap_or(e)),
        }
        if let Some(e) = ev.take_error() {
            return Err(e);
        }
    }
    if total.fan_in() > k_max {
        return Err(Error::NotInClass(format!(
            "reconstructed fan-in {} exceeds the bound {k_max}",
            total.fan_in()
        )));
    }
    if !pit_equal(&total.oracle(), o, budgets.pit_exponent, rng)? {
        return Err(ev
            .take_error()
            .unwrap_or_else(|| Error::NotInClass("cluster sum failed verification".into())));
    }
    Ok(Reconstruction {
        circuit: total,
        tau,
        preserved,
        num_clusters,
    })
}

/// Distance thresholds to sweep: a short list of small practical values,
/// followed by the geometrically growing theoretical schedule (saturating at
/// the integer limit, where clustering degenerates gracefully).
fn threshold_schedule(k_max: usize) -> Vec<u64> {
    let mut taus: Vec<u64> = vec![4, 8, 16, 32];
    let k = k_max.max(1) as u64;
    let exp = (7 * k + 20).min(63) as u32;
    let mut kappa = rank_bound_ml(2 * k_max.max(1))
        .saturating_mul(1u64 << exp)
        .saturating_mul(k.saturating_pow((4 * k + 4).min(63) as u32));
    for _ in 0..k_max.max(1) {
        if !taus.contains(&kappa) {
            taus.push(kappa);
        }
        let mut next = kappa;
        for _ in 1..(k_max * k_max).max(1) {
            next = next.saturating_mul(kappa);
        }
        if next == kappa {
            break;
        }
        kappa = next;
    }
    taus
}

/// Learns a multilinear depth-3 circuit with at most `k_max` product gates
/// that computes the same polynomial as `o`, from black-box access alone.
///
/// Sweeps distance thresholds from [`threshold_schedule`]; for each threshold
/// it finds a preserving coordinate set, evaluates the semantic clusters
/// through a [`ClusterEvaluator`], learns each cluster with the low-rank
/// learner, and accepts the summed circuit once it passes identity testing
/// against the target. Each threshold is retried `sweep_retries` times with a
/// fresh anchor before moving on.
pub fn reconstruct_multilinear(
    o: &Oracle,
    k_max: usize,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<DepthThreeCircuit> {
    reconstruct_multilinear_report(o, k_max, budgets, rng).map(|r| r.circuit)
}

/// Same as [`reconstruct_multilinear`], returning the run diagnostics as well.
pub fn reconstruct_multilinear_report(
    o: &Oracle,
    k_max: usize,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<Reconstruction> {
    let field = o.field();
    if pit_zero(o, budgets.pit_exponent, rng)? {
        return Ok(Reconstruction {
            circuit: DepthThreeCircuit::zero(field, o.num_vars()),
            tau: 0,
            preserved: Vec::new(),
            num_clusters: 0,
        });
    }
    let mut last = None;
    for tau in threshold_schedule(k_max) {
        match reconstruct_multilinear_at(o, k_max, tau, budgets, rng) {
            Ok(r) => return Ok(r),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::NotInClass("no distance threshold succeeded".into())))
}

/// Reconstruction at one fixed distance threshold, with `sweep_retries` fresh
/// anchors before giving up.
pub fn reconstruct_multilinear_at(
    o: &Oracle,
    k_max: usize,
    tau: u64,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<Reconstruction> {
    let mut last = None;
    for _ in 0..budgets.sweep_retries.max(1) {
        match try_reconstruct(o, k_max, tau, budgets, rng) {
            Ok(r) => return Ok(r),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Internal("retry budget was zero".into())))
}

/// Learns a set-multilinear depth-3 circuit over the given variable blocks.
///
/// Set-multilinear targets are handled directly by tensor decomposition of
/// the reduced coefficient tensor, with no clustering stage; this is a thin
/// wrapper so the two circuit families share an entry point naming scheme.
pub fn reconstruct_setml(
    o: &Oracle,
    blocks: &[Vec<usize>],
    k_max: usize,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<DepthThreeCircuit> {
    learn_setml_lowdeg(o, blocks, k_max, budgets, rng)
}
