//! Seeded weighted random walks and the Monte Carlo checks built on them.
//!
//! Randomness comes from ChaCha8 seeded with the user seed; sample `i` of
//! a batch uses stream `i`, so batches are reproducible under any thread
//! count and aggregation is order independent.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::geometry::Point;
use crate::network::WeightedNetwork;
use crate::packing::CirclePacking;
use crate::VertexId;

/// Walks longer than this are reported as censored observations.
pub const DEFAULT_STEP_CAP: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("unknown vertex {0}")]
    NotFound(VertexId),
    #[error("vertex {0} is not interior")]
    Incomplete(VertexId),
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, WalkError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkTrace {
    pub states: Vec<VertexId>,
    pub seed: u64,
    pub start: VertexId,
}

impl WalkTrace {
    /// One id per line.
    pub fn write_to<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        for s in &self.states {
            writeln!(sink, "{s}")?;
        }
        Ok(())
    }
}

/// Per-sample generator: stream `index` of the seeded ChaCha8 generator.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A network prepared for sampling: dense indices and cumulative weights.
#[derive(Debug, Clone)]
pub struct WalkSampler {
    ids: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    targets: Vec<Vec<usize>>,
    cumulative: Vec<Vec<f64>>,
}

impl WalkSampler {
    pub fn new(net: &WeightedNetwork) -> Self {
        let ids: Vec<VertexId> = net.ids().collect();
        let index: HashMap<VertexId, usize> =
            ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut targets = Vec::with_capacity(ids.len());
        let mut cumulative = Vec::with_capacity(ids.len());
        for &v in &ids {
            let row = net.row(v).expect("id from network");
            let mut acc = 0.0;
            let mut t = Vec::with_capacity(row.len());
            let mut c = Vec::with_capacity(row.len());
            for (u, w) in row {
                acc += w;
                t.push(index[u]);
                c.push(acc);
            }
            targets.push(t);
            cumulative.push(c);
        }
        WalkSampler {
            ids,
            index,
            targets,
            cumulative,
        }
    }

    pub fn index_of(&self, v: VertexId) -> Option<usize> {
        self.index.get(&v).copied()
    }

    pub fn id(&self, i: usize) -> VertexId {
        self.ids[i]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    #[inline]
    pub fn step<R: Rng>(&self, rng: &mut R, i: usize) -> usize {
        let cum = &self.cumulative[i];
        let u = rng.gen::<f64>() * cum[cum.len() - 1];
        let k = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
        self.targets[i][k]
    }

    /// Walks from `start` until `stop` accepts a state (the start itself is
    /// not tested) or `cap` steps elapse. Returns the final index and the
    /// number of steps taken, or `None` when capped.
    pub fn run_until<R: Rng>(
        &self,
        rng: &mut R,
        start: usize,
        cap: u64,
        mut stop: impl FnMut(usize) -> bool,
    ) -> Option<(usize, u64)> {
        let mut x = start;
        for n in 1..=cap {
            x = self.step(rng, x);
            if stop(x) {
                return Some((x, n));
            }
        }
        None
    }
}

pub fn simulate(
    net: &WeightedNetwork,
    start: VertexId,
    steps: usize,
    seed: u64,
) -> Result<WalkTrace> {
    let sampler = WalkSampler::new(net);
    let mut x = sampler.index_of(start).ok_or(WalkError::NotFound(start))?;
    let mut rng = sample_rng(seed, 0);
    let mut states = Vec::with_capacity(steps + 1);
    states.push(start);
    for _ in 0..steps {
        x = sampler.step(&mut rng, x);
        states.push(sampler.id(x));
    }
    Ok(WalkTrace {
        states,
        seed,
        start,
    })
}

/// `‖Σ_u p(v, u)(u − v)‖ / r_v` for an interior vertex.
pub fn martingale_residual(
    packing: &CirclePacking,
    net: &WeightedNetwork,
    v: VertexId,
) -> Result<f64> {
    let c = packing.get(v).ok_or(WalkError::NotFound(v))?;
    if !packing.is_interior(v) {
        return Err(WalkError::Incomplete(v));
    }
    let trans = net.transitions(v).map_err(|_| WalkError::NotFound(v))?;
    let mut drift = Point::zeros();
    for (u, p) in trans {
        let cu = packing.get(u).ok_or(WalkError::NotFound(u))?;
        drift += (cu.center - c.center) * p;
    }
    Ok(drift.norm() / c.radius)
}

/// Keeps only states in `retained`, then collapses runs of a repeated
/// state into one.
pub fn censor_trace(trace: &WalkTrace, retained: &BTreeSet<VertexId>) -> Result<WalkTrace> {
    match trace.states.first() {
        None => return Err(WalkError::Domain("trace is empty".into())),
        Some(s) if !retained.contains(s) => {
            return Err(WalkError::Domain(format!(
                "first state {s} is not retained"
            )))
        }
        _ => {}
    }
    let mut states: Vec<VertexId> = Vec::new();
    for s in trace.states.iter().filter(|s| retained.contains(s)) {
        if states.last() != Some(s) {
            states.push(*s);
        }
    }
    Ok(WalkTrace {
        states,
        seed: trace.seed,
        start: trace.start,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EscapeEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    pub escaped: u64,
    /// Walks that hit the step cap; excluded from the estimate.
    pub censored: u64,
}

/// Fraction of walks from `rho` that reach `boundary` before returning.
pub fn escape_probability(
    net: &WeightedNetwork,
    rho: VertexId,
    boundary: &BTreeSet<VertexId>,
    samples: u64,
    seed: u64,
) -> Result<EscapeEstimate> {
    escape_probability_capped(net, rho, boundary, samples, seed, DEFAULT_STEP_CAP)
}

pub fn escape_probability_capped(
    net: &WeightedNetwork,
    rho: VertexId,
    boundary: &BTreeSet<VertexId>,
    samples: u64,
    seed: u64,
    cap: u64,
) -> Result<EscapeEstimate> {
    if boundary.contains(&rho) {
        return Err(WalkError::Domain(format!(
            "rho {rho} lies in the boundary set"
        )));
    }
    let sampler = WalkSampler::new(net);
    let start = sampler.index_of(rho).ok_or(WalkError::NotFound(rho))?;
    let mut is_boundary = vec![false; sampler.len()];
    for b in boundary {
        is_boundary[sampler.index_of(*b).ok_or(WalkError::NotFound(*b))?] = true;
    }
    let (escaped, censored) = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            match sampler.run_until(&mut rng, start, cap, |x| x == start || is_boundary[x]) {
                Some((x, _)) if is_boundary[x] => (1u64, 0u64),
                Some(_) => (0, 0),
                None => (0, 1),
            }
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples - censored;
    let p = if n > 0 {
        escaped as f64 / n as f64
    } else {
        f64::NAN
    };
    Ok(EscapeEstimate {
        estimate: p,
        stderr: (p * (1.0 - p) / n as f64).sqrt(),
        samples,
        escaped,
        censored,
    })
}

/// Counts of the first vertex of `targets` hit by walks from `start`.
pub fn exit_distribution(
    net: &WeightedNetwork,
    start: VertexId,
    targets: &BTreeSet<VertexId>,
    samples: u64,
    seed: u64,
) -> Result<BTreeMap<VertexId, u64>> {
    let sampler = WalkSampler::new(net);
    let s = sampler.index_of(start).ok_or(WalkError::NotFound(start))?;
    let mut hit = vec![false; sampler.len()];
    for t in targets {
        hit[sampler.index_of(*t).ok_or(WalkError::NotFound(*t))?] = true;
    }
    let hits: Vec<Option<usize>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            sampler
                .run_until(&mut rng, s, DEFAULT_STEP_CAP, |x| hit[x])
                .map(|(x, _)| x)
        })
        .collect();
    let mut counts = BTreeMap::new();
    for x in hits.into_iter().flatten() {
        *counts.entry(sampler.id(x)).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Comparison of two empirical distributions over the same outcomes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionComparison {
    pub total_variation: f64,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Total variation distance and a chi-square homogeneity test. Outcomes
/// with expected count below 5 in either sample are pooled.
pub fn compare_counts<K: Ord + Clone>(
    a: &BTreeMap<K, u64>,
    b: &BTreeMap<K, u64>,
) -> DistributionComparison {
    let keys: BTreeSet<K> = a.keys().chain(b.keys()).cloned().collect();
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    let (fa, fb) = (na as f64, nb as f64);
    let tv = 0.5
        * keys
            .iter()
            .map(|k| {
                let pa = *a.get(k).unwrap_or(&0) as f64 / fa;
                let pb = *b.get(k).unwrap_or(&0) as f64 / fb;
                (pa - pb).abs()
            })
            .sum::<f64>();

    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    let total = fa + fb;
    for k in &keys {
        let oa = *a.get(k).unwrap_or(&0) as f64;
        let ob = *b.get(k).unwrap_or(&0) as f64;
        let row = oa + ob;
        if row * fa.min(fb) / total < 5.0 {
            pooled.0 += oa;
            pooled.1 += ob;
        } else {
            cells.push((oa, ob));
        }
    }
    if pooled.0 + pooled.1 > 0.0 {
        cells.push(pooled);
    }
    let mut stat = 0.0;
    for &(oa, ob) in &cells {
        let row = oa + ob;
        let ea = row * fa / total;
        let eb = row * fb / total;
        if ea > 0.0 {
            stat += (oa - ea).powi(2) / ea;
        }
        if eb > 0.0 {
            stat += (ob - eb).powi(2) / eb;
        }
    }
    let df = cells.len().saturating_sub(1);
    let p_value = if df == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(df as f64).expect("positive dof").cdf(stat)
    };
    DistributionComparison {
        total_variation: tv,
        chi_square: stat,
        degrees_of_freedom: df,
        p_value,
    }
}

/// Outcome of running walks on a refined network, censored back to the
/// original vertices, against walks on the original network.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    pub samples: u64,
    /// First target hit, after censoring and repetition deletion.
    pub censored_exit: BTreeMap<VertexId, u64>,
    pub direct_exit: BTreeMap<VertexId, u64>,
    pub exit: DistributionComparison,
    /// Joint law of the first `prefix` censored moves.
    pub prefix: usize,
    pub prefix_comparison: DistributionComparison,
}

/// Runs `samples` walks from `start` on `refined` until they hit `targets`,
/// censors each trace to `retained`, and compares exit vertices and the
/// first `prefix` moves with walks on `reduced`.
#[allow(clippy::too_many_arguments)]
pub fn coupling_experiment(
    refined: &WeightedNetwork,
    reduced: &WeightedNetwork,
    start: VertexId,
    retained: &BTreeSet<VertexId>,
    targets: &BTreeSet<VertexId>,
    prefix: usize,
    samples: u64,
    seed: u64,
) -> Result<CouplingReport> {
    if !targets.is_subset(retained) {
        return Err(WalkError::Domain("targets must be retained".into()));
    }
    let run =
        |net: &WeightedNetwork, censor: bool, stream_offset: u64| -> Result<Vec<Vec<VertexId>>> {
            let sampler = WalkSampler::new(net);
            let s = sampler.index_of(start).ok_or(WalkError::NotFound(start))?;
            let mut hit = vec![false; sampler.len()];
            for t in targets {
                hit[sampler.index_of(*t).ok_or(WalkError::NotFound(*t))?] = true;
            }
            (0..samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = sample_rng(seed, stream_offset + i);
                    let mut states = vec![start];
                    let mut x = s;
                    for _ in 0..DEFAULT_STEP_CAP {
                        x = sampler.step(&mut rng, x);
                        states.push(sampler.id(x));
                        if hit[x] {
                            break;
                        }
                    }
                    let trace = WalkTrace {
                        states,
                        seed,
                        start,
                    };
                    let out = if censor {
                        censor_trace(&trace, retained)?
                    } else {
                        trace
                    };
                    Ok(out.states)
                })
                .collect()
        };
    let censored = run(refined, true, 0)?;
    let direct = run(reduced, false, samples)?;
    let exits = |traces: &[Vec<VertexId>]| {
        let mut m = BTreeMap::new();
        for t in traces {
            *m.entry(*t.last().expect("nonempty")).or_insert(0u64) += 1;
        }
        m
    };
    let prefixes = |traces: &[Vec<VertexId>]| {
        let mut m: BTreeMap<Vec<VertexId>, u64> = BTreeMap::new();
        for t in traces {
            *m.entry(t.iter().take(prefix + 1).copied().collect())
                .or_insert(0) += 1;
        }
        m
    };
    let censored_exit = exits(&censored);
    let direct_exit = exits(&direct);
    let exit = compare_counts(&censored_exit, &direct_exit);
    let prefix_comparison = compare_counts(&prefixes(&censored), &prefixes(&direct));
    Ok(CouplingReport {
        samples,
        censored_exit,
        direct_exit,
        exit,
        prefix,
        prefix_comparison,
    })
}

/// Mean exit position of walks from `start` stopped on `targets`, with
/// componentwise standard errors.
pub fn mean_exit_position(
    packing: &CirclePacking,
    net: &WeightedNetwork,
    start: VertexId,
    targets: &BTreeSet<VertexId>,
    samples: u64,
    seed: u64,
) -> Result<(Point, Point)> {
    let counts = exit_distribution(net, start, targets, samples, seed)?;
    let n: u64 = counts.values().sum();
    let mut mean = Point::zeros();
    let mut sq = Point::zeros();
    for (v, &c) in &counts {
        let p = packing.get(*v).ok_or(WalkError::NotFound(*v))?.center;
        mean += p * c as f64;
        sq += p.component_mul(&p) * c as f64;
    }
    let nf = n as f64;
    mean /= nf;
    let var = sq / nf - mean.component_mul(&mean);
    Ok((mean, var.map(|x| (x.max(0.0) / nf).sqrt())))
}
