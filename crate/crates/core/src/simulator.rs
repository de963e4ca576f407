//! Monte Carlo estimation of the expected persistency.
//!
//! Each trial places the documents (fresh i.i.d. placement for the random
//! strategy, the fixed round-robin layout for the symmetric one), draws a
//! uniformly random removal order, and records the first removal count at
//! which some document is lost.
//!
//! Trial `i` draws from its own ChaCha8 stream `(master_seed, i)`, and
//! samples are aggregated in trial order, so results do not depend on the
//! number of worker threads.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{parameter, Error, Result};
use crate::model::{
    validate_symmetric_preconditions, LossSemantics, Persistency, Placement, PlacementBuilder,
    RecParams, RemovalOrder, Strategy, SystemParams,
};

/// Documents that share one code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WorkloadClass {
    pub rec: RecParams,
    pub doc_count: u64,
}

impl WorkloadClass {
    pub fn new(rec: RecParams, doc_count: u64) -> Result<Self> {
        if doc_count < 1 {
            return Err(parameter("workload class needs at least one document"));
        }
        Ok(Self { rec, doc_count })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub strategy: Strategy,
    pub semantics: LossSemantics,
    pub classes: Vec<WorkloadClass>,
    pub nodes: u64,
    pub trials: u64,
    pub master_seed: u64,
}

impl SimConfig {
    /// Single-class configuration using the strategy's default loss rule.
    pub fn uniform(
        strategy: Strategy,
        rec: RecParams,
        sys: SystemParams,
        trials: u64,
        master_seed: u64,
    ) -> Self {
        Self {
            strategy,
            semantics: strategy.default_semantics(),
            classes: vec![WorkloadClass {
                rec,
                doc_count: sys.docs(),
            }],
            nodes: sys.nodes(),
            trials,
            master_seed,
        }
    }

    pub fn with_semantics(mut self, semantics: LossSemantics) -> Self {
        self.semantics = semantics;
        self
    }

    pub fn total_docs(&self) -> u64 {
        self.classes.iter().map(|c| c.doc_count).sum()
    }

    /// True when no closed-form result applies: mixed workloads, or a
    /// symmetric layout that violates the divisibility / document-count
    /// conditions.
    pub fn out_of_theory(&self) -> bool {
        match self.classes.as_slice() {
            [single] => match self.strategy {
                Strategy::Random => false,
                Strategy::Symmetric => SystemParams::new(self.nodes, single.doc_count)
                    .map(|sys| validate_symmetric_preconditions(&single.rec, &sys).is_err())
                    .unwrap_or(true),
            },
            _ => true,
        }
    }

    fn validate(&self) -> Result<u32> {
        if self.trials < 1 {
            return Err(parameter("trials must be at least 1"));
        }
        if self.classes.is_empty() {
            return Err(parameter("at least one workload class is required"));
        }
        if self.classes.iter().any(|c| c.doc_count < 1) {
            return Err(parameter(
                "every workload class needs at least one document",
            ));
        }
        node_count(self.nodes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimSummary {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`; zero for a single trial.
    pub std_error: f64,
    pub trials: u64,
    pub min: u32,
    pub max: u32,
    pub seed: u64,
    pub out_of_theory: bool,
}

impl SimSummary {
    /// Aggregates per-trial persistency samples in the given order.
    pub fn from_samples(samples: &[u32], seed: u64, out_of_theory: bool) -> Result<Self> {
        if samples.is_empty() {
            return Err(parameter("cannot summarize zero trials"));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().map(|&x| x as f64).sum::<f64>() / n;
        let std_error = if samples.len() > 1 {
            let ss = samples
                .iter()
                .map(|&x| (x as f64 - mean).powi(2))
                .sum::<f64>();
            (ss / (n - 1.0)).sqrt() / n.sqrt()
        } else {
            0.0
        };
        Ok(Self {
            mean,
            std_error,
            trials: samples.len() as u64,
            min: *samples.iter().min().expect("non-empty"),
            max: *samples.iter().max().expect("non-empty"),
            seed,
            out_of_theory,
        })
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

fn node_count(nodes: u64) -> Result<u32> {
    match u32::try_from(nodes) {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(parameter(format!(
            "node count {nodes} must be in 1..=u32::MAX"
        ))),
    }
}

fn slot_count(classes: &[WorkloadClass]) -> Result<usize> {
    classes
        .iter()
        .try_fold(0u64, |acc, c| {
            acc.checked_add(c.doc_count.checked_mul(c.rec.chunks() as u64)?)
        })
        .and_then(|t| usize::try_from(t).ok())
        .ok_or_else(|| parameter("total chunk count overflows"))
}

/// Random strategy: every chunk goes to an independent uniform node;
/// collisions are allowed.
pub fn place_random<R: Rng + ?Sized>(
    rec: &RecParams,
    sys: &SystemParams,
    rng: &mut R,
) -> Result<Placement> {
    place_random_classes(
        &[WorkloadClass {
            rec: *rec,
            doc_count: sys.docs(),
        }],
        sys.nodes(),
        rng,
    )
}

pub fn place_random_classes<R: Rng + ?Sized>(
    classes: &[WorkloadClass],
    nodes: u64,
    rng: &mut R,
) -> Result<Placement> {
    let n = node_count(nodes)?;
    let docs = classes.iter().map(|c| c.doc_count as usize).sum();
    let mut builder = PlacementBuilder::with_capacity(n, docs, slot_count(classes)?);
    for class in classes {
        for _ in 0..class.doc_count {
            builder.push_doc_with(class.rec, || rng.random_range(0..n));
        }
    }
    builder.finish()
}

/// Symmetric strategy: chunks fill consecutive nodes round-robin, document
/// by document, replica-major; the first chunk goes to node 0.
pub fn place_symmetric(rec: &RecParams, sys: &SystemParams) -> Result<Placement> {
    place_symmetric_classes(
        &[WorkloadClass {
            rec: *rec,
            doc_count: sys.docs(),
        }],
        sys.nodes(),
    )
}

pub fn place_symmetric_classes(classes: &[WorkloadClass], nodes: u64) -> Result<Placement> {
    let n = node_count(nodes)?;
    let docs = classes.iter().map(|c| c.doc_count as usize).sum();
    let mut builder = PlacementBuilder::with_capacity(n, docs, slot_count(classes)?);
    let mut counter = 0u32;
    for class in classes {
        for _ in 0..class.doc_count {
            builder.push_doc_with(class.rec, || {
                let node = counter;
                counter = if counter + 1 == n { 0 } else { counter + 1 };
                node
            });
        }
    }
    builder.finish()
}

/// Incremental loss detector for one placement.
///
/// Built once (node → chunk index plus initial counters), then reused for
/// any number of removal orders. Each run costs `O(chunks + N)` at most.
#[derive(Debug, Clone)]
pub struct LossTracker {
    nodes: u32,
    semantics: LossSemantics,
    node_start: Vec<usize>,
    node_slots: Vec<u32>,
    slot_doc: Vec<u32>,
    slot_counter: Vec<u32>,
    /// Multiset: surviving replicas per multiset. PerCluster: erased chunks per cluster.
    counters_init: Vec<u32>,
    /// Counter value at which a multiset/cluster becomes dead.
    counter_dead: Vec<u32>,
    /// Dead multisets/clusters after which a document is lost.
    doc_limit: Vec<u32>,
    counters: Vec<u32>,
    doc_dead: Vec<u32>,
}

impl LossTracker {
    pub fn new(placement: &Placement, semantics: LossSemantics) -> Self {
        let n = placement.nodes() as usize;
        let docs = placement.num_docs();
        let total = placement.total_chunks();

        let mut slot_doc = Vec::with_capacity(total);
        let mut slot_counter = Vec::with_capacity(total);
        let mut counters_init = Vec::new();
        let mut counter_dead = Vec::new();
        let mut doc_limit = Vec::with_capacity(docs);
        for doc in 0..docs {
            let rec = placement.rec_of(doc);
            let base = counters_init.len() as u32;
            let (w, r) = (rec.width(), rec.r());
            match semantics {
                LossSemantics::Multiset => {
                    counters_init.extend(std::iter::repeat_n(r, w as usize));
                    counter_dead.extend(std::iter::repeat_n(0, w as usize));
                    doc_limit.push(rec.q() + 1);
                }
                LossSemantics::PerCluster => {
                    counters_init.extend(std::iter::repeat_n(0, r as usize));
                    counter_dead.extend(std::iter::repeat_n(rec.q() + 1, r as usize));
                    doc_limit.push(r);
                }
            }
            for j in 0..r {
                for m in 0..w {
                    slot_doc.push(doc as u32);
                    slot_counter.push(match semantics {
                        LossSemantics::Multiset => base + m,
                        LossSemantics::PerCluster => base + j,
                    });
                }
            }
        }

        let mut node_start = vec![0usize; n + 1];
        for doc in 0..docs {
            for &node in placement.doc_chunks(doc) {
                node_start[node as usize + 1] += 1;
            }
        }
        for i in 0..n {
            node_start[i + 1] += node_start[i];
        }
        let mut fill = node_start.clone();
        let mut node_slots = vec![0u32; total];
        for doc in 0..docs {
            let off = placement.doc_offset(doc);
            for (k, &node) in placement.doc_chunks(doc).iter().enumerate() {
                node_slots[fill[node as usize]] = (off + k) as u32;
                fill[node as usize] += 1;
            }
        }

        Self {
            nodes: placement.nodes(),
            semantics,
            node_start,
            node_slots,
            slot_doc,
            slot_counter,
            counters: counters_init.clone(),
            counters_init,
            counter_dead,
            doc_dead: vec![0; docs],
            doc_limit,
        }
    }

    pub fn semantics(&self) -> LossSemantics {
        self.semantics
    }

    pub fn nodes(&self) -> u32 {
        self.nodes
    }

    fn reset(&mut self) {
        self.counters.copy_from_slice(&self.counters_init);
        self.doc_dead.iter_mut().for_each(|d| *d = 0);
    }

    /// Removes nodes in `order` until a document is lost; returns the
    /// number of removals, or `None` if every document survives.
    pub fn run(&mut self, order: &[u32]) -> Option<u32> {
        self.reset();
        for (step, &node) in order.iter().enumerate() {
            let node = node as usize;
            for &slot in &self.node_slots[self.node_start[node]..self.node_start[node + 1]] {
                let c = self.slot_counter[slot as usize] as usize;
                let died = match self.semantics {
                    LossSemantics::Multiset => {
                        self.counters[c] -= 1;
                        self.counters[c] == self.counter_dead[c]
                    }
                    LossSemantics::PerCluster => {
                        self.counters[c] += 1;
                        self.counters[c] == self.counter_dead[c]
                    }
                };
                if died {
                    let doc = self.slot_doc[slot as usize] as usize;
                    self.doc_dead[doc] += 1;
                    if self.doc_dead[doc] == self.doc_limit[doc] {
                        return Some(step as u32 + 1);
                    }
                }
            }
        }
        None
    }
}

/// Number of removals (following `order`) until the first document is lost.
pub fn persistency(
    placement: &Placement,
    order: &RemovalOrder,
    semantics: LossSemantics,
) -> Result<Persistency> {
    if order.len() != placement.nodes() as usize {
        return Err(parameter(format!(
            "removal order covers {} nodes, placement has {}",
            order.len(),
            placement.nodes()
        )));
    }
    LossTracker::new(placement, semantics)
        .run(order.as_slice())
        .map(Persistency)
        .ok_or_else(|| Error::Internal("no document was lost after removing every node".into()))
}

/// Generator for trial `trial` of a run seeded with `master_seed`.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Uniformly random removal order.
pub fn random_order<R: Rng + ?Sized>(nodes: u32, rng: &mut R) -> RemovalOrder {
    let mut order: Vec<u32> = (0..nodes).collect();
    order.shuffle(rng);
    RemovalOrder::new_unchecked(order)
}

/// Per-trial persistency samples, in trial order.
pub fn simulate_samples(config: &SimConfig) -> Result<Vec<u32>> {
    let nodes = config.validate()?;
    let fixed = match config.strategy {
        Strategy::Symmetric => {
            let placement = place_symmetric_classes(&config.classes, config.nodes)?;
            Some(LossTracker::new(&placement, config.semantics))
        }
        Strategy::Random => None,
    };
    let lost = || Error::Internal("no document was lost after removing every node".into());
    (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(config.master_seed, i);
            let mut tracker = match &fixed {
                Some(t) => t.clone(),
                None => {
                    let placement = place_random_classes(&config.classes, config.nodes, &mut rng)?;
                    LossTracker::new(&placement, config.semantics)
                }
            };
            let order = random_order(nodes, &mut rng);
            tracker.run(order.as_slice()).ok_or_else(lost)
        })
        .collect()
}

/// Monte Carlo estimate of `E[X]`.
pub fn simulate(config: &SimConfig) -> Result<SimSummary> {
    let samples = simulate_samples(config)?;
    SimSummary::from_samples(&samples, config.master_seed, config.out_of_theory())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(p: u32, q: u32, r: u32) -> RecParams {
        RecParams::new(p, q, r).unwrap()
    }

    fn sys(n: u64, d: u64) -> SystemParams {
        SystemParams::new(n, d).unwrap()
    }

    #[test]
    fn random_placement_shapes() {
        let mut rng = trial_rng(1, 0);
        let one = place_random(&rec(1, 0, 1), &sys(1, 1), &mut rng).unwrap();
        assert_eq!(one.doc_chunks(0), &[0]);
        let p = place_random(&rec(1, 1, 2), &sys(8, 6), &mut rng).unwrap();
        assert_eq!(p.total_chunks(), 24);
        assert!((0..6).all(|d| p.doc_chunks(d).iter().all(|&n| n < 8)));
    }

    #[test]
    fn random_placement_is_uniform() {
        // chi-square on 10^5 single-chunk placements over 10 nodes, 9 dof:
        // 99% quantile 21.666
        let mut rng = trial_rng(42, 7);
        let mut counts = [0u64; 10];
        for _ in 0..100_000 {
            let p = place_random(&rec(1, 0, 1), &sys(10, 1), &mut rng).unwrap();
            counts[p.doc_chunks(0)[0] as usize] += 1;
        }
        let expected = 10_000.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 21.666, "chi2 = {chi2}");
    }

    #[test]
    fn symmetric_placement_layout() {
        let p = place_symmetric(&rec(1, 1, 2), &sys(16, 7)).unwrap();
        assert_eq!(p.doc_chunks(0), &[0, 1, 2, 3]);
        assert_eq!(p.doc_chunks(4), &[0, 1, 2, 3]);
        assert_eq!(p.doc_chunks(6), &[8, 9, 10, 11]);
        // replica-major: doc 2 (0-based 1) replica 2 multiset 1 -> node 6
        assert_eq!(p.node_of(1, 1, 0), 6);
        let p = place_symmetric(&rec(1, 0, 2), &sys(4, 2)).unwrap();
        assert_eq!(p.doc_chunks(0), &[0, 1]);
        assert_eq!(p.doc_chunks(1), &[2, 3]);
        assert_eq!(p, place_symmetric(&rec(1, 0, 2), &sys(4, 2)).unwrap());
    }

    #[test]
    fn symmetric_placement_wraps_partially() {
        let p = place_symmetric(&rec(2, 1, 1), &sys(5, 3)).unwrap();
        assert_eq!(p.doc_chunks(1), &[3, 4, 0]);
        assert_eq!(p.doc_chunks(2), &[1, 2, 3]);
    }

    #[test]
    fn persistency_hand_traces() {
        let p = place_symmetric(&rec(1, 0, 2), &sys(4, 2)).unwrap();
        let x = persistency(
            &p,
            &RemovalOrder::new(vec![0, 1, 2, 3]).unwrap(),
            LossSemantics::PerCluster,
        );
        assert_eq!(x.unwrap(), Persistency(2));
        let x = persistency(
            &p,
            &RemovalOrder::new(vec![0, 2, 1, 3]).unwrap(),
            LossSemantics::PerCluster,
        );
        assert_eq!(x.unwrap(), Persistency(3));
        assert!(persistency(&p, &RemovalOrder::identity(3), LossSemantics::Multiset).is_err());
    }

    #[test]
    fn collisions_count_each_chunk() {
        // both replicas of the single chunk on node 2
        let p = Placement::from_tables(3, [(rec(1, 0, 2), vec![2, 2])]).unwrap();
        let x = persistency(
            &p,
            &RemovalOrder::new(vec![0, 2, 1]).unwrap(),
            LossSemantics::Multiset,
        );
        assert_eq!(x.unwrap(), Persistency(2));
    }

    #[test]
    fn tracker_matches_direct_rule() {
        let mut rng = trial_rng(9, 0);
        for sem in [LossSemantics::Multiset, LossSemantics::PerCluster] {
            for _ in 0..200 {
                let r = rec(
                    rng.random_range(1..4),
                    rng.random_range(0..3),
                    rng.random_range(1..4),
                );
                let s = sys(rng.random_range(1..20), rng.random_range(1..5));
                let p = place_random(&r, &s, &mut rng).unwrap();
                let order = random_order(p.nodes(), &mut rng);
                let got = persistency(&p, &order, sem).unwrap().get();
                // direct: re-evaluate the rule after every removal
                let mut removed = vec![false; p.nodes() as usize];
                let mut want = None;
                for (step, &node) in order.as_slice().iter().enumerate() {
                    removed[node as usize] = true;
                    let any_lost = (0..p.num_docs()).any(|d| {
                        let erased: Vec<bool> = p
                            .doc_chunks(d)
                            .iter()
                            .map(|&n| removed[n as usize])
                            .collect();
                        crate::model::is_document_lost(&p.rec_of(d), &erased, sem)
                    });
                    if any_lost {
                        want = Some(step as u32 + 1);
                        break;
                    }
                }
                assert_eq!(Some(got), want);
            }
        }
    }

    #[test]
    fn summary_from_samples() {
        let s = SimSummary::from_samples(&[1, 2, 3, 4], 5, false).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std_error - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!((s.min, s.max, s.trials, s.seed), (1, 4, 4, 5));
        let one = SimSummary::from_samples(&[7], 0, false).unwrap();
        assert_eq!(one.std_error, 0.0);
        assert!(SimSummary::from_samples(&[], 0, false).is_err());
    }

    #[test]
    fn simulate_is_deterministic() {
        let cfg = SimConfig::uniform(Strategy::Random, rec(2, 1, 2), sys(30, 6), 300, 17);
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a, b);
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = serial.install(|| simulate(&cfg).unwrap());
        assert_eq!(a, c);
        assert!(a.min >= 1 && a.max <= 30 && a.mean >= a.min as f64 && a.mean <= a.max as f64);
    }

    #[test]
    fn simulate_uniform_single_chunk() {
        let cfg = SimConfig::uniform(Strategy::Random, rec(1, 0, 1), sys(10, 1), 100_000, 3);
        let s = simulate(&cfg).unwrap();
        assert!(s.within(5.5, 3.0), "{s:?}");
    }

    #[test]
    fn simulate_symmetric_small() {
        let cfg = SimConfig::uniform(Strategy::Symmetric, rec(1, 0, 2), sys(4, 2), 100_000, 11);
        let s = simulate(&cfg).unwrap();
        assert!(s.within(8.0 / 3.0, 3.0), "{s:?}");
        assert!(!s.out_of_theory);
    }

    #[test]
    fn symmetric_lower_bound_on_x() {
        let r = rec(2, 1, 2);
        let cfg = SimConfig::uniform(Strategy::Symmetric, r, sys(48, 8), 2000, 5);
        let samples = simulate_samples(&cfg).unwrap();
        assert!(samples.iter().all(|&x| x >= r.loss_order() && x <= 48));
    }

    #[test]
    fn out_of_theory_flag() {
        let cfg = SimConfig::uniform(Strategy::Symmetric, rec(2, 2, 1), sys(48, 5), 10, 1);
        assert!(simulate(&cfg).unwrap().out_of_theory);
        let mut mixed = SimConfig::uniform(Strategy::Random, rec(1, 0, 2), sys(20, 3), 10, 1);
        mixed
            .classes
            .push(WorkloadClass::new(rec(2, 1, 1), 4).unwrap());
        assert!(mixed.out_of_theory());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::uniform(Strategy::Random, rec(1, 0, 1), sys(4, 1), 0, 1);
        assert!(simulate(&cfg).is_err());
        cfg.trials = 1;
        cfg.classes.clear();
        assert!(simulate(&cfg).is_err());
        assert!(WorkloadClass::new(rec(1, 0, 1), 0).is_err());
    }
}
