//! Arrival-process generators, dependency degrees, rate estimation, and
//! trace ingestion.
//!
//! Generators are pure functions of `(spec, seed)`: the same seed always
//! yields a bit-identical [`ArrivalMatrix`], and distinct types draw from
//! independent seeded streams, so parallel sweeps stay reproducible.

use crate::error::{NetError, TrafficError};
use crate::net::{NetworkSpec, NodeId, PacketTypeSpec};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::io::Read;
use std::path::PathBuf;

/// Per-slot arrival counts of one packet type.
///
/// `TimeVarying` draws Poisson with the slot's rate. `BlockDependent` repeats
/// one base draw across every slot of a block, producing maximal dependence
/// across time inside the block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalProcess {
    Bernoulli { rate: f64 },
    Binomial { n: u32, p: f64 },
    Poisson { rate: f64 },
    ScaledBernoulli { amount: u32, prob: f64 },
    TimeVarying { rates: Vec<f64> },
    Trace { counts: Vec<u32> },
    BlockDependent { base: Box<ArrivalProcess>, block_len: u32 },
}

impl ArrivalProcess {
    /// Mean arrivals at slot `t` (1-based).
    pub fn rate_at(&self, t: usize) -> f64 {
        match self {
            ArrivalProcess::Bernoulli { rate } => *rate,
            ArrivalProcess::Binomial { n, p } => f64::from(*n) * p,
            ArrivalProcess::Poisson { rate } => *rate,
            ArrivalProcess::ScaledBernoulli { amount, prob } => f64::from(*amount) * prob,
            ArrivalProcess::TimeVarying { rates } => rates.get(t - 1).copied().unwrap_or(0.0),
            ArrivalProcess::Trace { counts } => {
                counts.get(t - 1).copied().map(f64::from).unwrap_or(0.0)
            }
            ArrivalProcess::BlockDependent { base, .. } => base.rate_at(t),
        }
    }

    /// Stationary rate, when the process has one.
    pub fn stationary_rate(&self) -> Option<f64> {
        match self {
            ArrivalProcess::TimeVarying { .. } | ArrivalProcess::Trace { .. } => None,
            ArrivalProcess::BlockDependent { base, .. } => base.stationary_rate(),
            _ => Some(self.rate_at(1)),
        }
    }

    /// Maximum possible per-slot count, when finite (Poisson and
    /// time-varying draws are unbounded).
    pub fn max_count(&self) -> Option<u32> {
        match self {
            ArrivalProcess::Bernoulli { .. } => Some(1),
            ArrivalProcess::Binomial { n, .. } => Some(*n),
            ArrivalProcess::Poisson { .. } | ArrivalProcess::TimeVarying { .. } => None,
            ArrivalProcess::ScaledBernoulli { amount, .. } => Some(*amount),
            ArrivalProcess::Trace { counts } => Some(counts.iter().copied().max().unwrap_or(0)),
            ArrivalProcess::BlockDependent { base, .. } => base.max_count(),
        }
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        let ok_prob = |p: f64| (0.0..=1.0).contains(&p) && p.is_finite();
        match self {
            ArrivalProcess::Bernoulli { rate } => {
                if !ok_prob(*rate) {
                    return Err(TrafficError::BadProcess(format!(
                        "bernoulli rate {rate} outside [0,1]"
                    )));
                }
            }
            ArrivalProcess::Binomial { p, .. } | ArrivalProcess::ScaledBernoulli { prob: p, .. } => {
                if !ok_prob(*p) {
                    return Err(TrafficError::BadProcess(format!(
                        "probability {p} outside [0,1]"
                    )));
                }
            }
            ArrivalProcess::Poisson { rate } => {
                if !(rate.is_finite() && *rate >= 0.0) {
                    return Err(TrafficError::BadProcess(format!("poisson rate {rate}")));
                }
            }
            ArrivalProcess::TimeVarying { rates } => {
                if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
                    return Err(TrafficError::BadProcess("negative or non-finite rate".into()));
                }
            }
            ArrivalProcess::Trace { .. } => {}
            ArrivalProcess::BlockDependent { base, block_len } => {
                if *block_len == 0 {
                    return Err(TrafficError::BadProcess("block length must be >= 1".into()));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    fn sample_one(&self, t: usize, rng: &mut ChaCha8Rng) -> u32 {
        match self {
            ArrivalProcess::Bernoulli { rate } => u32::from(rng.gen_bool(rate.clamp(0.0, 1.0))),
            ArrivalProcess::Binomial { n, p } => {
                if *n == 0 || *p <= 0.0 {
                    0
                } else {
                    Binomial::new(u64::from(*n), p.clamp(0.0, 1.0))
                        .expect("validated binomial")
                        .sample(rng) as u32
                }
            }
            ArrivalProcess::Poisson { rate } => sample_poisson(*rate, rng),
            ArrivalProcess::ScaledBernoulli { amount, prob } => {
                if rng.gen_bool(prob.clamp(0.0, 1.0)) {
                    *amount
                } else {
                    0
                }
            }
            ArrivalProcess::TimeVarying { rates } => {
                sample_poisson(rates.get(t - 1).copied().unwrap_or(0.0), rng)
            }
            ArrivalProcess::Trace { counts } => counts.get(t - 1).copied().unwrap_or(0),
            ArrivalProcess::BlockDependent { .. } => {
                unreachable!("block-dependent sampling handled per column")
            }
        }
    }
}

fn sample_poisson(rate: f64, rng: &mut ChaCha8Rng) -> u32 {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).expect("validated poisson").sample(rng) as u32
}

/// Realized arrivals: `counts[t-1][j]` packets of type `j` at slot `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalMatrix {
    counts: Vec<Vec<u32>>,
}

impl ArrivalMatrix {
    pub fn from_counts(counts: Vec<Vec<u32>>) -> Self {
        ArrivalMatrix { counts }
    }

    pub fn slots(&self) -> usize {
        self.counts.len()
    }

    pub fn types(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    /// Arrivals of type `j` at slot `t` (1-based slot).
    pub fn at(&self, t: usize, j: usize) -> u32 {
        self.counts[t - 1][j]
    }

    pub fn row(&self, t: usize) -> &[u32] {
        &self.counts[t - 1]
    }

    pub fn total(&self) -> u64 {
        self.counts
            .iter()
            .map(|r| r.iter().map(|&c| u64::from(c)).sum::<u64>())
            .sum()
    }

    /// CSV export: one row per slot, one column per type.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), TrafficError> {
        let mut wtr = csv::Writer::from_writer(w);
        let header: Vec<String> = std::iter::once("slot".to_string())
            .chain((0..self.types()).map(|j| format!("type{j}")))
            .collect();
        wtr.write_record(&header).map_err(csv_io)?;
        for (i, row) in self.counts.iter().enumerate() {
            let rec: Vec<String> = std::iter::once((i + 1).to_string())
                .chain(row.iter().map(u32::to_string))
                .collect();
            wtr.write_record(&rec).map_err(csv_io)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> TrafficError {
    TrafficError::ParseError {
        line: 0,
        msg: e.to_string(),
    }
}

/// Per-type stream seed: split the run seed so types are independent.
fn type_stream_seed(seed: u64, j: usize) -> u64 {
    // splitmix64 step keyed by the type index
    let mut z = seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul((j as u64).wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Samples a `t_len x J` arrival matrix, reproducible from `seed`.
pub fn sample_arrivals(procs: &[ArrivalProcess], t_len: usize, seed: u64) -> ArrivalMatrix {
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(procs.len());
    for (j, proc) in procs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(type_stream_seed(seed, j));
        let col = match proc {
            ArrivalProcess::BlockDependent { base, block_len } => {
                let block = *block_len as usize;
                let mut col = Vec::with_capacity(t_len);
                let mut current = 0u32;
                for t in 1..=t_len {
                    if (t - 1) % block == 0 {
                        current = base.sample_one(t, &mut rng);
                    }
                    col.push(current);
                }
                col
            }
            _ => (1..=t_len).map(|t| proc.sample_one(t, &mut rng)).collect(),
        };
        columns.push(col);
    }
    let counts = (0..t_len)
        .map(|t| columns.iter().map(|c| c[t]).collect())
        .collect();
    ArrivalMatrix { counts }
}

/// Dependency degree of the window traffic `sum_{tau=t-d_max}^{t} a_j^tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DependencyDegree {
    pub value: u32,
    /// Unbounded distributions (Poisson, time-varying Poisson draws) have no
    /// bounded decomposition; the reported 1 is a thresholding convention.
    pub heuristic: bool,
}

/// Degree of dependence among per-window arrivals: 1 for Bernoulli/Binomial,
/// the jump size for scaled Bernoulli, and `min(block, d_max+1)` times the
/// base degree for block-repeated arrivals. Trace-backed processes have no
/// defined degree.
pub fn dependency_degree(
    proc: &ArrivalProcess,
    d_max: u32,
) -> Result<DependencyDegree, TrafficError> {
    let exact = |value| DependencyDegree {
        value,
        heuristic: false,
    };
    match proc {
        ArrivalProcess::Bernoulli { .. } | ArrivalProcess::Binomial { .. } => Ok(exact(1)),
        ArrivalProcess::Poisson { .. } | ArrivalProcess::TimeVarying { .. } => {
            Ok(DependencyDegree {
                value: 1,
                heuristic: true,
            })
        }
        ArrivalProcess::ScaledBernoulli { amount, .. } => Ok(exact((*amount).max(1))),
        ArrivalProcess::Trace { .. } => Err(TrafficError::UnknownDegree),
        ArrivalProcess::BlockDependent { base, block_len } => {
            let inner = dependency_degree(base, d_max)?;
            let coupled = (*block_len).min(d_max + 1);
            Ok(DependencyDegree {
                value: inner.value.saturating_mul(coupled),
                heuristic: inner.heuristic,
            })
        }
    }
}

/// Empirical rates over a history slice.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub rates: Vec<f64>,
    /// `max(min_j rate_j, 1/slice_len)`: the floor keeps shrinkage factors
    /// finite when a type was never observed.
    pub min_rate: f64,
    pub slots: usize,
}

/// Plug-in estimates: the per-type empirical mean of the slice.
pub fn estimate_rates(history: &ArrivalMatrix, from_slot: usize, to_slot: usize) -> RateEstimate {
    let types = history.types();
    let len = to_slot.saturating_sub(from_slot) + 1;
    assert!(from_slot >= 1 && to_slot <= history.slots() && from_slot <= to_slot);
    let mut sums = vec![0u64; types];
    for t in from_slot..=to_slot {
        for (j, s) in sums.iter_mut().enumerate() {
            *s += u64::from(history.at(t, j));
        }
    }
    let rates: Vec<f64> = sums.iter().map(|&s| s as f64 / len as f64).collect();
    let raw_min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let floor = 1.0 / len as f64;
    RateEstimate {
        rates,
        min_rate: if types == 0 { floor } else { raw_min.max(floor) },
        slots: len,
    }
}

/// Ingestion settings for a packet-trace CSV with rows
/// `timestamp_ms,src_key,dst_key[,count]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceSpec {
    pub path: PathBuf,
    pub slot_ms: u64,
    /// Seed for hashing endpoint keys onto nodes and drawing flow weights.
    pub seed: u64,
    /// Number of retained flows (ordered pairs), by descending volume.
    pub flows: usize,
    /// Common deadline assigned to every retained flow.
    pub deadline: u32,
    /// Horizon in slots; rows at or beyond `horizon * slot_ms` are discarded
    /// with a counted warning. Derived from the last row when absent.
    pub horizon: Option<usize>,
    /// When set, rank pairs by volume, keep the top `subset_of`, then retain
    /// a seeded random subset of size `flows` from that ranking.
    pub subset_of: Option<usize>,
}

/// The outcome of trace ingestion.
#[derive(Debug)]
pub struct IngestedTrace {
    pub types: Vec<PacketTypeSpec>,
    pub arrivals: ArrivalMatrix,
    /// Total packets per retained flow, aligned with `types`.
    pub volumes: Vec<u64>,
    pub discarded_rows: usize,
}

/// Stable seeded string hash (FNV-1a folded with the seed).
fn hash_key(seed: u64, key: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for b in key.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Buckets a trace into per-slot counts per ordered node pair, keeps the
/// highest-volume flows, and assigns seeded uniform(0,1) weights.
pub fn ingest_trace(spec: &TraceSpec, net: &NetworkSpec) -> Result<IngestedTrace, TrafficError> {
    let mut file = std::fs::File::open(&spec.path)?;
    let mut text = String::new();
    file.read_to_string(&mut text)?;
    ingest_trace_from_str(spec, net, &text)
}

pub fn ingest_trace_from_str(
    spec: &TraceSpec,
    net: &NetworkSpec,
    text: &str,
) -> Result<IngestedTrace, TrafficError> {
    let nodes = net.node_count();
    if nodes == 0 {
        return Err(TrafficError::BadProcess("network has no nodes".into()));
    }
    // (timestamp_ms, src node, dst node, count)
    let mut rows: Vec<(u64, usize, usize, u32)> = Vec::new();
    let mut max_ts = 0u64;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if idx == 0 && trimmed.chars().next().is_some_and(|c| c.is_alphabetic()) {
            continue; // header row
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(TrafficError::ParseError {
                line: line_no,
                msg: format!("expected at least 3 comma-separated fields, got {}", fields.len()),
            });
        }
        let ts: u64 = fields[0].parse().map_err(|e| TrafficError::ParseError {
            line: line_no,
            msg: format!("bad timestamp `{}`: {e}", fields[0]),
        })?;
        let count: u32 = if fields.len() >= 4 && !fields[3].is_empty() {
            fields[3].parse().map_err(|e| TrafficError::ParseError {
                line: line_no,
                msg: format!("bad count `{}`: {e}", fields[3]),
            })?
        } else {
            1
        };
        let src = (hash_key(spec.seed, fields[1]) % nodes as u64) as usize;
        let dst = (hash_key(spec.seed, fields[2]) % nodes as u64) as usize;
        max_ts = max_ts.max(ts);
        rows.push((ts, src, dst, count));
    }
    if rows.is_empty() {
        return Err(TrafficError::EmptyTrace);
    }

    let horizon = spec
        .horizon
        .unwrap_or_else(|| (max_ts / spec.slot_ms) as usize + 1);
    let mut discarded = 0usize;
    let mut pair_slot_counts: std::collections::BTreeMap<(usize, usize), Vec<u32>> =
        std::collections::BTreeMap::new();
    let mut retained_rows = 0u64;
    for (ts, src, dst, count) in rows {
        if src == dst {
            discarded += 1;
            continue;
        }
        let slot = (ts / spec.slot_ms) as usize;
        if slot >= horizon {
            discarded += 1;
            continue;
        }
        let col = pair_slot_counts
            .entry((src, dst))
            .or_insert_with(|| vec![0; horizon]);
        col[slot] += count;
        retained_rows += u64::from(count);
    }
    if pair_slot_counts.is_empty() {
        return Err(TrafficError::EmptyTrace);
    }

    // Rank by descending volume, pair order breaking ties.
    let mut ranked: Vec<((usize, usize), u64)> = pair_slot_counts
        .iter()
        .map(|(&pair, col)| (pair, col.iter().map(|&c| u64::from(c)).sum::<u64>()))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut selected: Vec<((usize, usize), u64)> = match spec.subset_of {
        None => ranked.into_iter().take(spec.flows).collect(),
        Some(base) => {
            let pool: Vec<_> = ranked.into_iter().take(base).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(type_stream_seed(spec.seed, usize::MAX / 2));
            let mut idx: Vec<usize> = (0..pool.len()).collect();
            // seeded Fisher-Yates, then keep the first `flows` picks
            for i in (1..idx.len()).rev() {
                let k = rng.gen_range(0..=i);
                idx.swap(i, k);
            }
            let mut keep: Vec<usize> = idx.into_iter().take(spec.flows).collect();
            keep.sort_unstable();
            keep.into_iter().map(|i| pool[i].clone()).collect()
        }
    };
    // Present flows in descending-volume order regardless of selection path.
    selected.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut weight_rng = ChaCha8Rng::seed_from_u64(type_stream_seed(spec.seed, usize::MAX));
    let mut types = Vec::with_capacity(selected.len());
    let mut volumes = Vec::with_capacity(selected.len());
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(selected.len());
    for ((src, dst), volume) in &selected {
        let weight: f64 = weight_rng.gen_range(0.0..1.0);
        let counts = pair_slot_counts[&(*src, *dst)].clone();
        types.push(
            PacketTypeSpec::new(
                NodeId(*src),
                NodeId(*dst),
                spec.deadline,
                weight,
                ArrivalProcess::Trace {
                    counts: counts.clone(),
                },
            )
            .map_err(|e: NetError| TrafficError::BadProcess(e.to_string()))?,
        );
        volumes.push(*volume);
        columns.push(counts);
    }
    let counts: Vec<Vec<u32>> = (0..horizon)
        .map(|t| columns.iter().map(|c| c[t]).collect())
        .collect();
    let arrivals = ArrivalMatrix { counts };
    debug_assert_eq!(
        arrivals.total() + volumes_outside(&selected, &pair_slot_counts),
        retained_rows
    );
    Ok(IngestedTrace {
        types,
        arrivals,
        volumes,
        discarded_rows: discarded,
    })
}

fn volumes_outside(
    selected: &[((usize, usize), u64)],
    all: &std::collections::BTreeMap<(usize, usize), Vec<u32>>,
) -> u64 {
    let chosen: std::collections::BTreeSet<(usize, usize)> =
        selected.iter().map(|(p, _)| *p).collect();
    all.iter()
        .filter(|(p, _)| !chosen.contains(p))
        .map(|(_, col)| col.iter().map(|&c| u64::from(c)).sum::<u64>())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_degenerate_columns() {
        let ones = sample_arrivals(&[ArrivalProcess::Bernoulli { rate: 1.0 }], 5, 7);
        assert_eq!((1..=5).map(|t| ones.at(t, 0)).collect::<Vec<_>>(), vec![1; 5]);
        let zeros = sample_arrivals(&[ArrivalProcess::Bernoulli { rate: 0.0 }], 5, 7);
        assert_eq!(zeros.total(), 0);
    }

    #[test]
    fn bernoulli_mean_concentrates() {
        // 99% binomial CI at T = 1e5 is about +/- 0.004, inside 0.01.
        let m = sample_arrivals(&[ArrivalProcess::Bernoulli { rate: 0.5 }], 100_000, 42);
        let mean = m.total() as f64 / 100_000.0;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let procs = vec![
            ArrivalProcess::Bernoulli { rate: 0.3 },
            ArrivalProcess::Poisson { rate: 2.5 },
            ArrivalProcess::ScaledBernoulli { amount: 7, prob: 0.1 },
        ];
        let a = sample_arrivals(&procs, 500, 9);
        let b = sample_arrivals(&procs, 500, 9);
        assert_eq!(a, b);
        let c = sample_arrivals(&procs, 500, 10);
        assert_ne!(a, c);
    }

    #[test]
    fn block_dependent_repeats_within_blocks() {
        let proc = ArrivalProcess::BlockDependent {
            base: Box::new(ArrivalProcess::Bernoulli { rate: 0.5 }),
            block_len: 4,
        };
        let m = sample_arrivals(&[proc], 40, 3);
        for b in 0..10 {
            let first = m.at(b * 4 + 1, 0);
            for off in 1..4 {
                assert_eq!(m.at(b * 4 + off + 1, 0), first);
            }
        }
    }

    #[test]
    fn dependency_degrees_match_distribution_family() {
        let d = |p: &ArrivalProcess| dependency_degree(p, 9).unwrap();
        assert_eq!(d(&ArrivalProcess::Binomial { n: 5, p: 0.1 }).value, 1);
        assert_eq!(d(&ArrivalProcess::Bernoulli { rate: 0.4 }).value, 1);
        assert_eq!(
            d(&ArrivalProcess::ScaledBernoulli { amount: 7, prob: 0.1 }).value,
            7
        );
        let block = ArrivalProcess::BlockDependent {
            base: Box::new(ArrivalProcess::Bernoulli { rate: 0.5 }),
            block_len: 10,
        };
        assert_eq!(d(&block).value, 10); // d_max + 1
        let poisson = d(&ArrivalProcess::Poisson { rate: 2.0 });
        assert_eq!(poisson.value, 1);
        assert!(poisson.heuristic);
        assert!(matches!(
            dependency_degree(&ArrivalProcess::Trace { counts: vec![1] }, 3),
            Err(TrafficError::UnknownDegree)
        ));
    }

    #[test]
    fn estimate_rates_is_empirical_mean() {
        let m = ArrivalMatrix::from_counts(vec![vec![1], vec![0], vec![1], vec![0]]);
        let est = estimate_rates(&m, 1, 4);
        assert_eq!(est.rates, vec![0.5]);
        assert_eq!(est.min_rate, 0.5);
    }

    #[test]
    fn estimate_rates_floors_min() {
        let m = ArrivalMatrix::from_counts(vec![vec![0]; 100]);
        let est = estimate_rates(&m, 1, 100);
        assert_eq!(est.rates, vec![0.0]);
        assert_eq!(est.min_rate, 0.01);
    }

    #[test]
    fn estimate_rates_meets_sample_requirement_accuracy() {
        // Lemma-style check: with a_max=1, lambda_min=0.5, eps0=eps=0.1 and
        // J=10 types, 1060 slots give all-types relative error <= 0.1 with
        // probability >= 0.9. Monte Carlo over 1000 trials.
        let procs: Vec<ArrivalProcess> = (0..10)
            .map(|_| ArrivalProcess::Bernoulli { rate: 0.5 })
            .collect();
        let mut ok = 0usize;
        let trials = 1000usize;
        for trial in 0..trials {
            let m = sample_arrivals(&procs, 1060, 50_000 + trial as u64);
            let est = estimate_rates(&m, 1, 1060);
            if est.rates.iter().all(|&r| (r - 0.5).abs() <= 0.05) {
                ok += 1;
            }
        }
        let p = ok as f64 / trials as f64;
        assert!(p >= 0.9, "accuracy probability {p}");
    }

    fn two_node_net() -> NetworkSpec {
        NetworkSpec::new(
            vec!["x".into(), "y".into()],
            vec![("x".into(), "y".into(), 1), ("y".into(), "x".into(), 1)],
        )
        .unwrap()
    }

    #[test]
    fn trace_buckets_rows_into_slots() {
        let spec = TraceSpec {
            path: PathBuf::new(),
            slot_ms: 100,
            seed: 1,
            flows: 5,
            deadline: 2,
            horizon: None,
            subset_of: None,
        };
        // two rows, same pair, same slot
        let text = "10,alice,bob\n90,alice,bob\n";
        let net = two_node_net();
        let out = ingest_trace_from_str(&spec, &net, text).unwrap();
        assert_eq!(out.types.len(), 1);
        assert_eq!(out.arrivals.at(1, 0), 2);
        assert_eq!(out.volumes, vec![2]);
    }

    #[test]
    fn trace_clamps_flow_count() {
        let spec = TraceSpec {
            path: PathBuf::new(),
            slot_ms: 100,
            seed: 1,
            flows: 50,
            deadline: 2,
            horizon: None,
            subset_of: None,
        };
        let text = "10,alice,bob\n20,bob,alice\n";
        let out = ingest_trace_from_str(&spec, &two_node_net(), text).unwrap();
        assert_eq!(out.types.len(), 2);
    }

    #[test]
    fn trace_empty_errors() {
        let spec = TraceSpec {
            path: PathBuf::new(),
            slot_ms: 100,
            seed: 1,
            flows: 5,
            deadline: 2,
            horizon: None,
            subset_of: None,
        };
        assert!(matches!(
            ingest_trace_from_str(&spec, &two_node_net(), ""),
            Err(TrafficError::EmptyTrace)
        ));
    }

    #[test]
    fn trace_parse_error_carries_line() {
        let spec = TraceSpec {
            path: PathBuf::new(),
            slot_ms: 100,
            seed: 1,
            flows: 5,
            deadline: 2,
            horizon: None,
            subset_of: None,
        };
        let err = ingest_trace_from_str(&spec, &two_node_net(), "10,alice,bob\nbroken\n");
        match err {
            Err(TrafficError::ParseError { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn trace_conserves_retained_packet_count() {
        let spec = TraceSpec {
            path: PathBuf::new(),
            slot_ms: 50,
            seed: 3,
            flows: 100,
            deadline: 1,
            horizon: None,
            subset_of: None,
        };
        let mut text = String::new();
        for i in 0..40 {
            text.push_str(&format!("{},h{},h{}\n", i * 17 % 900, i % 5, (i + 1) % 7));
        }
        let net = NetworkSpec::with_indexed_nodes(
            6,
            vec![(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1), (4, 5, 1), (5, 0, 1)],
        )
        .unwrap();
        let out = ingest_trace_from_str(&spec, &net, &text).unwrap();
        let kept: u64 = out.volumes.iter().sum();
        assert_eq!(kept + out.discarded_rows as u64, 40);
        assert_eq!(out.arrivals.total(), kept);
    }
}
