//! Discrete-event simulation of weighted-quorum BFT consensus.
//!
//! Two protocol shapes run over a one-way latency matrix. `Broadcast` is a
//! leader-driven protocol with a fixed number of all-to-leader voting phases.
//! `Gossip` spreads the proposal by seeded epidemic relay and then runs vote
//! steps in which each validator waits for a weighted quorum of one-hop votes.
//!
//! All times are milliseconds. Every run is a pure function of its
//! [`SimConfig`].

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodata::{latency_matrix, GeoError, LatencyMatrix, LatencyModel, ValidatorSet};
use crate::gpos::{compute_gdi, gpos_power, proposer_probabilities, GposError, WeightVector, QUORUM, QUORUM_SLACK};
use crate::metrics::{gec, MetricError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("latency matrix has {latency} rows but there are {weights} weights")]
    DimensionMismatch { latency: usize, weights: usize },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("quorum weight unreachable in round {round}")]
    QuorumUnreachable { round: usize },
    #[error("round latency is zero; throughput undefined")]
    ZeroLatency,
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Gpos(#[from] GposError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Protocol {
    Broadcast { phases: usize },
    Gossip { fanout: usize, vote_steps: usize },
}

impl Protocol {
    pub fn broadcast() -> Self {
        Protocol::Broadcast { phases: 3 }
    }

    pub fn gossip() -> Self {
        Protocol::Gossip {
            fanout: 8,
            vote_steps: 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Broadcast { .. } => "broadcast",
            Protocol::Gossip { .. } => "gossip",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub latency: LatencyMatrix,
    pub weights: WeightVector,
    pub protocol: Protocol,
    pub batch_size: u64,
    pub processing_ms: f64,
    pub rounds: usize,
    pub seed: u64,
    #[serde(default)]
    pub record_events: bool,
}

impl SimConfig {
    pub fn new(latency: LatencyMatrix, weights: WeightVector, protocol: Protocol) -> Self {
        SimConfig {
            latency,
            weights,
            protocol,
            batch_size: 1000,
            processing_ms: 1.0,
            rounds: 100,
            seed: 0,
            record_events: false,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.weights.len();
        if self.latency.len() != n {
            return Err(SimError::DimensionMismatch {
                latency: self.latency.len(),
                weights: n,
            });
        }
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.rounds == 0 {
            return bad("rounds must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.processing_ms.is_finite() && self.processing_ms >= 0.0) {
            return bad("processing_ms must be finite and non-negative");
        }
        match self.protocol {
            Protocol::Broadcast { phases } if phases == 0 => bad("phases must be at least 1"),
            Protocol::Gossip { fanout, .. } if fanout == 0 || fanout >= n => {
                bad("fanout must be in [1, n - 1]")
            }
            Protocol::Gossip { vote_steps, .. } if vote_steps == 0 => bad("vote_steps must be at least 1"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SimEventKind {
    Proposal { leader: usize },
    Vote { from: usize, weight: f64, accumulated: f64 },
    Quorum { accumulated: f64 },
    Forward { from: usize, to: usize },
    Informed { node: usize, accumulated: f64 },
    VoteStep { accumulated: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub round: usize,
    pub phase: usize,
    pub time_ms: f64,
    #[serde(flatten)]
    pub kind: SimEventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub per_round_latency_ms: Vec<f64>,
    pub mean_latency_ms: f64,
    /// Pipelined throughput, transactions per second.
    pub tps: f64,
    pub tps_pipelined: f64,
    pub tps_sequential: f64,
    pub leaders: Vec<usize>,
    /// Accumulated weight at the instant each quorum completed, in order.
    pub quorum_weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<SimEvent>,
    pub config: SimConfig,
}

/// Earliest time at which the weight of `(time, node)` arrivals reaches the
/// quorum. Arrivals are consumed in time order, ties by node index.
fn quorum_time(arrivals: &mut [(f64, usize)], weights: &[f64]) -> Option<(f64, f64, usize)> {
    arrivals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut acc = 0.0;
    for (k, &(t, j)) in arrivals.iter().enumerate() {
        acc += weights[j];
        if acc >= QUORUM - QUORUM_SLACK {
            return Some((t, acc, k + 1));
        }
    }
    None
}

fn finish(
    config: &SimConfig,
    per_round: Vec<f64>,
    mean_step: f64,
    leaders: Vec<usize>,
    quorum_weights: Vec<f64>,
    events: Vec<SimEvent>,
) -> Result<SimResult> {
    let mean = per_round.iter().sum::<f64>() / per_round.len() as f64;
    if !(mean > 0.0 && mean_step > 0.0) {
        return Err(SimError::ZeroLatency);
    }
    let batch = config.batch_size as f64;
    let tps_pipelined = batch * 1000.0 / mean_step;
    Ok(SimResult {
        per_round_latency_ms: per_round,
        mean_latency_ms: mean,
        tps: tps_pipelined,
        tps_pipelined,
        tps_sequential: batch * 1000.0 / mean,
        leaders,
        quorum_weights,
        events,
        config: config.clone(),
    })
}

/// Leader-broadcast protocol. In each phase the leader sends to everyone,
/// each validator processes and replies, and the phase closes when the
/// replies received by the leader carry a weighted quorum. The leader's own
/// vote arrives after processing alone.
pub fn simulate_broadcast(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let Protocol::Broadcast { phases } = config.protocol else {
        return Err(SimError::InvalidConfig("protocol is not broadcast".into()));
    };
    let n = config.weights.len();
    let w = config.weights.as_slice();
    let lat = &config.latency;
    let selection = proposer_probabilities(&config.weights);
    let mut sampler = selection.sampler(config.seed);

    let mut per_round = Vec::with_capacity(config.rounds);
    let mut leaders = Vec::with_capacity(config.rounds);
    let mut quorum_weights = Vec::with_capacity(config.rounds * phases);
    let mut events = Vec::new();
    let mut phase_total = 0.0;

    for round in 0..config.rounds {
        let leader = sampler.next_proposer();
        let mut arrivals: Vec<(f64, usize)> = (0..n)
            .map(|j| {
                let rtt = if j == leader { 0.0 } else { lat.get(leader, j) + lat.get(j, leader) };
                (rtt + config.processing_ms, j)
            })
            .collect();
        let (phase_ms, acc, used) = quorum_time(&mut arrivals, w).ok_or(SimError::QuorumUnreachable { round })?;
        for phase in 0..phases {
            quorum_weights.push(acc);
            if config.record_events {
                let start = phase as f64 * phase_ms;
                events.push(SimEvent {
                    round,
                    phase,
                    time_ms: start,
                    kind: SimEventKind::Proposal { leader },
                });
                let mut running = 0.0;
                for &(t, j) in &arrivals[..used] {
                    running += w[j];
                    events.push(SimEvent {
                        round,
                        phase,
                        time_ms: start + t,
                        kind: SimEventKind::Vote {
                            from: j,
                            weight: w[j],
                            accumulated: running,
                        },
                    });
                }
                events.push(SimEvent {
                    round,
                    phase,
                    time_ms: start + phase_ms,
                    kind: SimEventKind::Quorum { accumulated: acc },
                });
            }
        }
        phase_total += phase_ms * phases as f64;
        per_round.push(phase_ms * phases as f64);
        leaders.push(leader);
    }
    let mean_phase = phase_total / (config.rounds * phases) as f64;
    finish(config, per_round, mean_phase, leaders, quorum_weights, events)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pending(f64, usize);

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Outcome of one epidemic relay from `source`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dissemination {
    /// First receipt time per node; `None` if never reached.
    pub arrival: Vec<Option<f64>>,
    /// Peers each node forwarded to, in the order nodes became informed.
    pub forwards: Vec<(usize, Vec<usize>)>,
}

/// Each node, on first receipt at time `t`, forwards once to `fanout`
/// distinct random peers, who receive at `t + processing + lat`.
pub fn disseminate(
    lat: &LatencyMatrix,
    source: usize,
    fanout: usize,
    processing_ms: f64,
    rng: &mut ChaCha8Rng,
) -> Dissemination {
    let n = lat.len();
    let mut arrival = vec![None; n];
    let mut forwards = Vec::new();
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Pending(0.0, source)));
    while let Some(Reverse(Pending(t, u))) = heap.pop() {
        if arrival[u].is_some() {
            continue;
        }
        arrival[u] = Some(t);
        let peers: Vec<usize> = index::sample(rng, n - 1, fanout)
            .into_iter()
            .map(|k| if k < u { k } else { k + 1 })
            .collect();
        for &v in &peers {
            if arrival[v].is_none() {
                heap.push(Reverse(Pending(t + processing_ms + lat.get(u, v), v)));
            }
        }
        forwards.push((u, peers));
    }
    Dissemination { arrival, forwards }
}

/// Gossip protocol. Round latency is the time for the proposal to reach a
/// weighted quorum plus `vote_steps` times the vote-quorum time, where a
/// vote step closes once validators holding a quorum of weight have each
/// received one-hop votes from a quorum of informed weight.
pub fn simulate_gossip(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let Protocol::Gossip { fanout, vote_steps } = config.protocol else {
        return Err(SimError::InvalidConfig("protocol is not gossip".into()));
    };
    let w = config.weights.as_slice();
    let lat = &config.latency;
    let selection = proposer_probabilities(&config.weights);
    let mut sampler = selection.sampler(config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let mut per_round = Vec::with_capacity(config.rounds);
    let mut leaders = Vec::with_capacity(config.rounds);
    let mut quorum_weights = Vec::new();
    let mut events = Vec::new();

    for round in 0..config.rounds {
        let leader = sampler.next_proposer();
        let spread = disseminate(lat, leader, fanout, config.processing_ms, &mut rng);
        let mut informed: Vec<(f64, usize)> = spread
            .arrival
            .iter()
            .enumerate()
            .filter_map(|(j, t)| t.map(|t| (t, j)))
            .collect();
        let (dissemination_ms, acc, _) =
            quorum_time(&mut informed, w).ok_or(SimError::QuorumUnreachable { round })?;
        quorum_weights.push(acc);

        let voters: Vec<usize> = informed.iter().map(|&(_, j)| j).collect();
        let mut ready: Vec<(f64, usize)> = voters
            .iter()
            .filter_map(|&i| {
                let mut inbox: Vec<(f64, usize)> = voters
                    .iter()
                    .map(|&j| (lat.get(j, i) + config.processing_ms, j))
                    .collect();
                quorum_time(&mut inbox, w).map(|(t, _, _)| (t, i))
            })
            .collect();
        let (vote_ms, vote_acc, _) = quorum_time(&mut ready, w).ok_or(SimError::QuorumUnreachable { round })?;
        quorum_weights.extend(std::iter::repeat(vote_acc).take(vote_steps));

        if config.record_events {
            events.push(SimEvent {
                round,
                phase: 0,
                time_ms: 0.0,
                kind: SimEventKind::Proposal { leader },
            });
            for (from, peers) in &spread.forwards {
                let t = spread.arrival[*from].expect("forwarders are informed");
                for &to in peers {
                    events.push(SimEvent {
                        round,
                        phase: 0,
                        time_ms: t + config.processing_ms,
                        kind: SimEventKind::Forward { from: *from, to },
                    });
                }
            }
            let mut running = 0.0;
            for &(t, node) in &informed {
                running += w[node];
                events.push(SimEvent {
                    round,
                    phase: 0,
                    time_ms: t,
                    kind: SimEventKind::Informed {
                        node,
                        accumulated: running,
                    },
                });
            }
            for step in 1..=vote_steps {
                events.push(SimEvent {
                    round,
                    phase: step,
                    time_ms: dissemination_ms + step as f64 * vote_ms,
                    kind: SimEventKind::VoteStep { accumulated: vote_acc },
                });
            }
        }
        per_round.push(dissemination_ms + vote_steps as f64 * vote_ms);
        leaders.push(leader);
    }
    let mean_round = per_round.iter().sum::<f64>() / per_round.len() as f64;
    finish(config, per_round, mean_round, leaders, quorum_weights, events)
}

pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    match config.protocol {
        Protocol::Broadcast { .. } => simulate_broadcast(config),
        Protocol::Gossip { .. } => simulate_gossip(config),
    }
}

/// Simulator settings shared by every point of a lambda sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub protocol: Protocol,
    pub latency: LatencyModel,
    pub batch_size: u64,
    pub processing_ms: f64,
    pub rounds: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            protocol: Protocol::broadcast(),
            latency: LatencyModel::default(),
            batch_size: 1000,
            processing_ms: 1.0,
            rounds: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub gec: f64,
    pub mean_latency_ms: f64,
    pub tps_pipelined: f64,
    pub tps_sequential: f64,
}

/// For each lambda: GDI, GPoS weights, GEC, then one simulation. Rows come
/// back in input order.
pub fn sweep_lambda(set: &ValidatorSet, lambdas: &[f64], sweep: &SweepConfig) -> Result<Vec<SweepRow>> {
    if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(SimError::InvalidConfig(format!("lambda {l} outside [0, 1]")));
    }
    let latency = latency_matrix(set, &sweep.latency)?;
    let gdi = compute_gdi(set, QUORUM)?;
    lambdas
        .par_iter()
        .map(|&lambda| {
            let weights = gpos_power(set, &gdi, lambda)?.weights;
            let gec = gec(set, &weights)?.scalar;
            let config = SimConfig {
                latency: latency.clone(),
                weights,
                protocol: sweep.protocol,
                batch_size: sweep.batch_size,
                processing_ms: sweep.processing_ms,
                rounds: sweep.rounds,
                seed: sweep.seed,
                record_events: false,
            };
            let result = simulate(&config)?;
            Ok(SweepRow {
                lambda,
                gec,
                mean_latency_ms: result.mean_latency_ms,
                tps_pipelined: result.tps_pipelined,
                tps_sequential: result.tps_sequential,
            })
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: &str = "lambda,gec,mean_latency_ms,tps_pipelined,tps_sequential";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.lambda, r.gec, r.mean_latency_ms, r.tps_pipelined, r.tps_sequential
        ));
    }
    out
}

/// Relative spread `(max - min) / mean` of a series.
pub fn relative_spread(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean == 0.0 {
        0.0
    } else {
        (max - min) / mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::{Coordinates, ValidatorRecord};
    use proptest::prelude::*;

    fn broadcast(lat: LatencyMatrix, weights: WeightVector, phases: usize, processing: f64) -> SimConfig {
        SimConfig {
            processing_ms: processing,
            rounds: 10,
            seed: 7,
            ..SimConfig::new(lat, weights, Protocol::Broadcast { phases })
        }
    }

    fn random_matrix(n: usize, seed: u64) -> LatencyMatrix {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0))).collect();
        let rows = pts
            .iter()
            .map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
            .collect();
        LatencyMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn zero_latency_closed_form() {
        let cfg = broadcast(LatencyMatrix::uniform(5, 0.0), WeightVector::uniform(5), 3, 1.0);
        let r = simulate_broadcast(&cfg).unwrap();
        assert!(r.per_round_latency_ms.iter().all(|&l| l == 3.0));
        assert_eq!(r.tps_pipelined, 1000.0 * 1000.0);
        assert_eq!(r.tps_sequential, 1000.0 * 1000.0 / 3.0);
    }

    #[test]
    fn four_uniform_validators_sixty_ms() {
        let cfg = broadcast(LatencyMatrix::uniform(4, 10.0), WeightVector::uniform(4), 3, 0.0);
        let r = simulate_broadcast(&cfg).unwrap();
        assert_eq!(r.per_round_latency_ms, vec![60.0; 10]);
        assert!(r.quorum_weights.iter().all(|&q| q == 0.75));
    }

    #[test]
    fn zero_latency_without_processing_is_rejected() {
        let cfg = broadcast(LatencyMatrix::uniform(3, 0.0), WeightVector::uniform(3), 3, 0.0);
        assert!(matches!(simulate_broadcast(&cfg), Err(SimError::ZeroLatency)));
    }

    #[test]
    fn config_validation() {
        let mut cfg = broadcast(LatencyMatrix::uniform(3, 1.0), WeightVector::uniform(4), 3, 0.0);
        assert!(matches!(simulate(&cfg), Err(SimError::DimensionMismatch { .. })));
        cfg.latency = LatencyMatrix::uniform(4, 1.0);
        cfg.protocol = Protocol::Broadcast { phases: 0 };
        assert!(simulate(&cfg).is_err());
        cfg.protocol = Protocol::Gossip {
            fanout: 4,
            vote_steps: 2,
        };
        assert!(simulate(&cfg).is_err());
        cfg.protocol = Protocol::Gossip {
            fanout: 3,
            vote_steps: 2,
        };
        assert!(simulate(&cfg).is_ok());
        cfg.rounds = 0;
        assert!(simulate(&cfg).is_err());
    }

    #[test]
    fn flooding_dissemination_is_one_hop() {
        let n = 9;
        let lat = random_matrix(n, 3);
        let weights = WeightVector::uniform(n);
        let cfg = SimConfig {
            processing_ms: 0.0,
            rounds: 5,
            record_events: true,
            ..SimConfig::new(
                lat.clone(),
                weights.clone(),
                Protocol::Gossip {
                    fanout: n - 1,
                    vote_steps: 1,
                },
            )
        };
        let r = simulate_gossip(&cfg).unwrap();
        for (round, &leader) in r.leaders.iter().enumerate() {
            let mut one_hop: Vec<(f64, usize)> = (0..n).map(|j| (lat.get(leader, j), j)).collect();
            let (expect, _, _) = quorum_time(&mut one_hop, weights.as_slice()).unwrap();
            let informed_at_quorum = r
                .events
                .iter()
                .filter(|e| e.round == round)
                .find_map(|e| match e.kind {
                    SimEventKind::Informed { accumulated, .. } if accumulated >= QUORUM - QUORUM_SLACK => Some(e.time_ms),
                    _ => None,
                })
                .unwrap();
            assert_eq!(informed_at_quorum, expect);
        }
    }

    #[test]
    fn gossip_is_deterministic() {
        let lat = random_matrix(12, 9);
        let cfg = SimConfig {
            rounds: 20,
            seed: 42,
            record_events: true,
            ..SimConfig::new(lat, WeightVector::uniform(12), Protocol::gossip())
        };
        let a = simulate_gossip(&cfg).unwrap();
        let b = simulate_gossip(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn colocated_weight_shuffle_keeps_broadcast_tps() {
        let rows = vec![
            vec![0.0, 0.0, 30.0, 50.0, 70.0],
            vec![0.0, 0.0, 30.0, 50.0, 70.0],
            vec![30.0, 30.0, 0.0, 20.0, 40.0],
            vec![50.0, 50.0, 20.0, 0.0, 25.0],
            vec![70.0, 70.0, 40.0, 25.0, 0.0],
        ];
        let lat = LatencyMatrix::from_rows(rows).unwrap();
        let a = WeightVector::new(vec![0.1, 0.3, 0.2, 0.25, 0.15]).unwrap();
        let b = WeightVector::new(vec![0.3, 0.1, 0.2, 0.25, 0.15]).unwrap();
        let mut cfg = broadcast(lat, a, 3, 1.0);
        cfg.rounds = 200;
        let ra = simulate_broadcast(&cfg).unwrap();
        cfg.weights = b;
        let rb = simulate_broadcast(&cfg).unwrap();
        assert_eq!(ra.tps_pipelined, rb.tps_pipelined);
        assert_eq!(ra.per_round_latency_ms, rb.per_round_latency_ms);
    }

    #[test]
    fn sweep_single_lambda_is_pos() {
        let recs = vec![
            ValidatorRecord::new("a", Coordinates::new(50.0, 8.0).unwrap(), 5.0, None).unwrap(),
            ValidatorRecord::new("b", Coordinates::new(40.7, -74.0).unwrap(), 3.0, None).unwrap(),
            ValidatorRecord::new("c", Coordinates::new(35.7, 139.7).unwrap(), 2.0, None).unwrap(),
            ValidatorRecord::new("d", Coordinates::new(-33.9, 151.2).unwrap(), 1.0, None).unwrap(),
        ];
        let set = ValidatorSet::from_records(recs).unwrap();
        let rows = sweep_lambda(&set, &[1.0], &SweepConfig::default()).unwrap();
        assert_eq!(rows.len(), 1);
        let pos = gec(&set, &WeightVector::from_stakes(&set)).unwrap().scalar;
        assert_eq!(rows[0].gec, pos);
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with(SWEEP_CSV_HEADER));
        assert_eq!(csv.lines().count(), 2);
        assert!(sweep_lambda(&set, &[1.5], &SweepConfig::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn quorum_and_lower_bound_hold(
            n in 2usize..10,
            seed in any::<u64>(),
            raw in proptest::collection::vec(0.01f64..1.0, 10),
            gossip in any::<bool>(),
        ) {
            let lat = random_matrix(n, seed);
            let weights = WeightVector::from_unnormalized(&raw[..n]).unwrap();
            let protocol = if gossip {
                Protocol::Gossip { fanout: (n - 1).min(3), vote_steps: 2 }
            } else {
                Protocol::Broadcast { phases: 3 }
            };
            let cfg = SimConfig { rounds: 8, seed, processing_ms: 0.5, ..SimConfig::new(lat.clone(), weights.clone(), protocol) };
            let r = match simulate(&cfg) {
                Err(SimError::QuorumUnreachable { .. }) if gossip => return Ok(()),
                other => other.unwrap(),
            };
            prop_assert_eq!(r.per_round_latency_ms.len(), 8);
            prop_assert!(r.quorum_weights.iter().all(|&q| q >= QUORUM - QUORUM_SLACK));
            prop_assert!(r.tps > 0.0 && r.per_round_latency_ms.iter().all(|&l| l > 0.0));
            if !gossip {
                for (&l, &leader) in r.per_round_latency_ms.iter().zip(&r.leaders) {
                    let mut rtts: Vec<(f64, usize)> = (0..n)
                        .map(|j| (if j == leader { 0.0 } else { 2.0 * lat.get(leader, j) } + 0.5, j))
                        .collect();
                    let (min_rtt, _, _) = quorum_time(&mut rtts, weights.as_slice()).unwrap();
                    prop_assert!(l >= 3.0 * min_rtt - 1e-9);
                }
            }
        }
    }
}
