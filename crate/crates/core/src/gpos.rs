//! Geospatial diversity index and geospatially-aware voting power.
//!
//! GDI of a validator is the summed distance to its nearest peers whose stake,
//! together with its own, reaches the quorum. Voting power blends normalized
//! stake with the max-normalized GDI (linear form) or multiplies the two
//! factors with complementary exponents (exponential form).

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodata::{haversine, Coordinates, GeoError, ValidatorRecord, ValidatorSet};

/// Default quorum: two thirds of total voting power.
pub const QUORUM: f64 = 2.0 / 3.0;

/// Slack when comparing accumulated floating-point stake against a quorum.
pub const QUORUM_SLACK: f64 = 1e-12;

const SUM_TOL: f64 = 1e-9;

/// Largest instance solved exactly by [`min_coalition_stake`].
pub const EXACT_COALITION_LIMIT: usize = 24;

#[derive(Debug, Error)]
pub enum GposError {
    #[error("weights must be finite and non-negative (index {index}: {value})")]
    InvalidWeight { index: usize, value: f64 },
    #[error("weights sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("all scores are zero: {0}")]
    AllZero(String),
    #[error("parameter out of range: {0}")]
    InvalidParameter(String),
    #[error("quorum {quorum} unreachable for validator {index} (reachable stake {reachable})")]
    QuorumUnreachable {
        index: usize,
        quorum: f64,
        reachable: f64,
    },
    #[error("vector length {got} does not match validator count {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("threshold {0} is unreachable")]
    ThresholdUnreachable(f64),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

pub type Result<T> = std::result::Result<T, GposError>;

/// Per-validator voting power; non-negative and summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = GposError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        WeightVector::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::check_entries(&weights)?;
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(GposError::NotNormalized(sum));
        }
        Ok(WeightVector(weights))
    }

    /// L1-normalizes non-negative scores.
    pub fn from_unnormalized(scores: &[f64]) -> Result<Self> {
        Self::check_entries(scores)?;
        let sum: f64 = scores.iter().sum();
        if sum <= 0.0 {
            return Err(GposError::AllZero("cannot normalize a zero vector".into()));
        }
        Ok(WeightVector(scores.iter().map(|s| s / sum).collect()))
    }

    /// Plain PoS: voting power equals normalized stake.
    pub fn from_stakes(set: &ValidatorSet) -> Self {
        WeightVector(set.normalized_stakes().to_vec())
    }

    pub fn uniform(n: usize) -> Self {
        WeightVector(vec![1.0 / n as f64; n])
    }

    fn check_entries(weights: &[f64]) -> Result<()> {
        if weights.is_empty() {
            return Err(GposError::InvalidParameter("empty weight vector".into()));
        }
        match weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            Some(index) => Err(GposError::InvalidWeight {
                index,
                value: weights[index],
            }),
            None => Ok(()),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `id,value` rows.
    pub fn to_csv(&self, set: &ValidatorSet) -> String {
        id_value_csv(set, &self.0)
    }
}

pub(crate) fn id_value_csv(set: &ValidatorSet, values: &[f64]) -> String {
    let mut out = String::from("id,value\n");
    for (v, x) in set.validators().iter().zip(values) {
        out.push_str(&format!("{},{}\n", v.id, x));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdiVector {
    /// Kilometers.
    pub raw: Vec<f64>,
    /// `raw / max(raw)`, or all zeros when every raw value is zero.
    pub normalized: Vec<f64>,
    pub degenerate: bool,
}

impl GdiVector {
    pub fn from_raw(raw: Vec<f64>) -> Self {
        let max = raw.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            let normalized = raw.iter().map(|g| g / max).collect();
            GdiVector {
                raw,
                normalized,
                degenerate: false,
            }
        } else {
            GdiVector {
                normalized: vec![0.0; raw.len()],
                raw,
                degenerate: true,
            }
        }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn to_csv(&self, set: &ValidatorSet) -> String {
        id_value_csv(set, &self.raw)
    }
}

/// Greedy nearest-first GDI for one validator, given `(distance, tie_rank,
/// stake)` for every other validator.
fn greedy_gdi(own_stake: f64, mut others: Vec<(f64, usize, f64)>, quorum: f64) -> std::result::Result<f64, f64> {
    if own_stake >= quorum - QUORUM_SLACK {
        return Ok(0.0);
    }
    others.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut stake = own_stake;
    let mut gdi = 0.0;
    for (d, _, s) in others {
        stake += s;
        gdi += d;
        if stake >= quorum - QUORUM_SLACK {
            return Ok(gdi);
        }
    }
    Err(stake)
}

/// GDI for every validator; peers are taken nearest first (ties by id) until
/// the accumulated stake reaches `quorum`.
pub fn compute_gdi(set: &ValidatorSet, quorum: f64) -> Result<GdiVector> {
    if !(quorum > 0.0 && quorum < 1.0) {
        return Err(GposError::InvalidParameter(format!("quorum {quorum} outside (0, 1)")));
    }
    let stakes = set.normalized_stakes();
    let ranks = set.id_ranks();
    let dist = set.distances();
    let n = set.len();
    let raw = (0..n)
        .into_par_iter()
        .map(|k| {
            let others: Vec<(f64, usize, f64)> = (0..n)
                .filter(|&j| j != k)
                .map(|j| (dist.get(k, j), ranks[j], stakes[j]))
                .collect();
            greedy_gdi(stakes[k], others, quorum).map_err(|reachable| GposError::QuorumUnreachable {
                index: k,
                quorum,
                reachable,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(GdiVector::from_raw(raw))
}

/// GDI of a hypothetical validator at `at` holding normalized stake
/// `own_stake` against `set` whose normalized stakes are rescaled by
/// `peer_scale`.
pub fn gdi_at(set: &ValidatorSet, at: Coordinates, own_stake: f64, peer_scale: f64, quorum: f64) -> Option<f64> {
    let others: Vec<(f64, usize, f64)> = set
        .validators()
        .iter()
        .zip(set.normalized_stakes())
        .enumerate()
        .map(|(j, (v, &s))| (haversine(at, v.coords), j, s * peer_scale))
        .collect();
    greedy_gdi(own_stake, others, quorum).ok()
}

/// Weights plus any advisory warnings raised while computing them.
#[derive(Debug, Clone, PartialEq)]
pub struct GposWeights {
    pub weights: WeightVector,
    pub warnings: Vec<String>,
}

/// Warning for stake blends below one half, where the geospatial term can
/// outweigh stake.
pub fn lambda_warning(lambda: f64) -> Option<String> {
    (lambda < 0.5).then(|| {
        format!("lambda = {lambda} < 0.5 lets the geospatial term outweigh stake; minority stake may gain outsized power")
    })
}

fn check_gdi(set: &ValidatorSet, gdi: &GdiVector) -> Result<()> {
    if gdi.len() != set.len() {
        return Err(GposError::LengthMismatch {
            got: gdi.len(),
            expected: set.len(),
        });
    }
    Ok(())
}

/// Linear blend `lambda * s_i + (1 - lambda) * GDI'_i`, L1-normalized.
pub fn gpos_power(set: &ValidatorSet, gdi: &GdiVector, lambda: f64) -> Result<GposWeights> {
    check_gdi(set, gdi)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(GposError::InvalidParameter(format!("lambda {lambda} outside [0, 1]")));
    }
    let warnings = lambda_warning(lambda).into_iter().collect();
    if lambda == 1.0 {
        return Ok(GposWeights {
            weights: WeightVector::from_stakes(set),
            warnings,
        });
    }
    let omega: Vec<f64> = set
        .normalized_stakes()
        .iter()
        .zip(&gdi.normalized)
        .map(|(s, g)| lambda * s + (1.0 - lambda) * g)
        .collect();
    let weights = WeightVector::from_unnormalized(&omega)
        .map_err(|_| GposError::AllZero(format!("lambda = {lambda} with an all-zero GDI leaves no voting power")))?;
    Ok(GposWeights { weights, warnings })
}

/// Intermediate influence scores before normalization.
pub fn influence_scores(set: &ValidatorSet, gdi: &GdiVector, lambda: f64) -> Vec<f64> {
    set.normalized_stakes()
        .iter()
        .zip(&gdi.normalized)
        .map(|(s, g)| lambda * s + (1.0 - lambda) * g)
        .collect()
}

/// Exponential blend `(s_i / max s)^alpha * GDI'_i^(1 - alpha)`, with `0^0 = 1`.
pub fn gpos_power_exponential(set: &ValidatorSet, gdi: &GdiVector, alpha: f64) -> Result<WeightVector> {
    check_gdi(set, gdi)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(GposError::InvalidParameter(format!("alpha {alpha} outside [0, 1]")));
    }
    if alpha == 1.0 {
        return Ok(WeightVector::from_stakes(set));
    }
    let stakes = set.normalized_stakes();
    let max_stake = stakes.iter().copied().fold(0.0, f64::max);
    let raw: Vec<f64> = stakes
        .iter()
        .zip(&gdi.normalized)
        .map(|(&s, &g)| pow0(s / max_stake, alpha) * pow0(g, 1.0 - alpha))
        .collect();
    WeightVector::from_unnormalized(&raw).map_err(|_| {
        GposError::AllZero(format!(
            "alpha = {alpha}: every validator has GDI' = 0, so every exponential score vanishes"
        ))
    })
}

fn pow0(base: f64, exp: f64) -> f64 {
    if exp == 0.0 {
        1.0
    } else {
        base.powf(exp)
    }
}

/// Leader-selection distribution, realized as direct weighted sampling.
#[derive(Debug, Clone)]
pub struct ProposerSelection {
    probabilities: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl ProposerSelection {
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn sampler(&self, seed: u64) -> ProposerSampler<'_> {
        ProposerSampler {
            index: &self.index,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

pub struct ProposerSampler<'a> {
    index: &'a WeightedIndex<f64>,
    rng: ChaCha8Rng,
}

impl ProposerSampler<'_> {
    pub fn next_proposer(&mut self) -> usize {
        self.index.sample(&mut self.rng)
    }
}

pub fn proposer_probabilities(weights: &WeightVector) -> ProposerSelection {
    let probabilities = weights.as_slice().to_vec();
    let index = WeightedIndex::new(&probabilities).expect("weight vector has positive mass");
    ProposerSelection { probabilities, index }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coalition {
    /// Sum of members' normalized stake.
    pub stake_fraction: f64,
    /// Sum of members' voting power.
    pub weight_fraction: f64,
    pub members: Vec<String>,
    /// True when found by the exact solver.
    pub exact: bool,
}

/// Cheapest coalition (by normalized stake) of existing validators whose
/// voting power reaches `threshold`.
///
/// Exact branch-and-bound up to [`EXACT_COALITION_LIMIT`] validators with
/// positive weight, greedy by weight-per-stake above that.
pub fn min_coalition_stake(set: &ValidatorSet, weights: &WeightVector, threshold: f64) -> Result<Coalition> {
    if weights.len() != set.len() {
        return Err(GposError::LengthMismatch {
            got: weights.len(),
            expected: set.len(),
        });
    }
    if !(threshold > 0.0) || threshold > 1.0 {
        return Err(GposError::ThresholdUnreachable(threshold));
    }
    let stakes = set.normalized_stakes();
    let w = weights.as_slice();
    let mut items: Vec<usize> = (0..set.len()).filter(|&i| w[i] > 0.0).collect();
    // Ascending stake per unit weight; ties prefer more weight, then index.
    items.sort_by(|&a, &b| {
        (stakes[a] / w[a])
            .total_cmp(&(stakes[b] / w[b]))
            .then(w[b].total_cmp(&w[a]))
            .then(a.cmp(&b))
    });
    let reachable: f64 = items.iter().map(|&i| w[i]).sum();
    if reachable < threshold - QUORUM_SLACK {
        return Err(GposError::ThresholdUnreachable(threshold));
    }

    let (chosen, exact) = if items.len() <= EXACT_COALITION_LIMIT {
        (coalition_branch_and_bound(&items, stakes, w, threshold), true)
    } else {
        (coalition_greedy(&items, stakes, w, threshold), false)
    };
    let mut members: Vec<usize> = chosen;
    members.sort_unstable();
    Ok(Coalition {
        stake_fraction: members.iter().map(|&i| stakes[i]).sum(),
        weight_fraction: members.iter().map(|&i| w[i]).sum(),
        members: members.iter().map(|&i| set.validators()[i].id.clone()).collect(),
        exact,
    })
}

fn coalition_greedy(items: &[usize], stakes: &[f64], w: &[f64], threshold: f64) -> Vec<usize> {
    let target = threshold - QUORUM_SLACK;
    let mut chosen = Vec::new();
    let mut weight = 0.0;
    for &i in items {
        if weight >= target {
            break;
        }
        chosen.push(i);
        weight += w[i];
    }
    // Drop members that are not needed, most expensive first.
    let mut by_cost = chosen.clone();
    by_cost.sort_by(|&a, &b| stakes[b].total_cmp(&stakes[a]).then(a.cmp(&b)));
    for i in by_cost {
        if weight - w[i] >= target {
            weight -= w[i];
            chosen.retain(|&x| x != i);
        }
    }
    // Swap the last greedy pick for a cheaper outsider that still closes the gap.
    if let Some(&last) = chosen.last() {
        let deficit = target - (weight - w[last]);
        let replacement = items
            .iter()
            .filter(|i| !chosen.contains(i))
            .filter(|&&i| w[i] >= deficit && stakes[i] < stakes[last])
            .min_by(|&&a, &&b| stakes[a].total_cmp(&stakes[b]).then(a.cmp(&b)));
        if let Some(&r) = replacement {
            chosen.pop();
            chosen.push(r);
        }
    }
    chosen
}

fn coalition_branch_and_bound(items: &[usize], stakes: &[f64], w: &[f64], threshold: f64) -> Vec<usize> {
    struct Search<'a> {
        items: &'a [usize],
        stakes: &'a [f64],
        w: &'a [f64],
        target: f64,
        best_cost: f64,
        best: Vec<usize>,
        current: Vec<usize>,
        suffix_weight: Vec<f64>,
    }

    impl Search<'_> {
        /// Fractional-knapsack lower bound on the extra stake needed from
        /// items `k..` (which are in ascending cost-per-weight order).
        fn bound(&self, k: usize, mut need: f64) -> f64 {
            let mut cost = 0.0;
            for &i in &self.items[k..] {
                if need <= 0.0 {
                    break;
                }
                let take = self.w[i].min(need);
                cost += take * self.stakes[i] / self.w[i];
                need -= take;
            }
            cost
        }

        fn visit(&mut self, k: usize, cost: f64, weight: f64) {
            if weight >= self.target {
                if cost < self.best_cost {
                    self.best_cost = cost;
                    self.best = self.current.clone();
                }
                return;
            }
            if k == self.items.len() || weight + self.suffix_weight[k] < self.target {
                return;
            }
            if cost + self.bound(k, self.target - weight) >= self.best_cost {
                return;
            }
            let i = self.items[k];
            self.current.push(i);
            self.visit(k + 1, cost + self.stakes[i], weight + self.w[i]);
            self.current.pop();
            self.visit(k + 1, cost, weight);
        }
    }

    let mut suffix_weight = vec![0.0; items.len() + 1];
    for k in (0..items.len()).rev() {
        suffix_weight[k] = suffix_weight[k + 1] + w[items[k]];
    }
    let greedy = coalition_greedy(items, stakes, w, threshold);
    let mut search = Search {
        items,
        stakes,
        w,
        target: threshold - QUORUM_SLACK,
        best_cost: greedy.iter().map(|&i| stakes[i]).sum::<f64>() + 1e-15,
        best: greedy,
        current: Vec::new(),
        suffix_weight,
    };
    search.visit(0, 0.0, 0.0);
    search.best
}

/// Where sybil validators are placed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SybilPlacement {
    /// Each sybil in turn takes the point of maximal GDI found on a 5 degree
    /// global grid, refined once at 1 degree.
    Ideal,
    /// Sybil `i` sits at `at[i % at.len()]`.
    At(Vec<Coordinates>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SybilParams {
    pub lambda: f64,
    /// Adversary stake as a fraction of the combined (honest + sybil) stake.
    pub total_stake_fraction: f64,
    pub placement: SybilPlacement,
    /// Eligibility floor on normalized stake, applied to every validator.
    pub min_stake_threshold: f64,
    pub quorum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SybilOutcome {
    pub sybil_count: usize,
    pub eligible_sybils: usize,
    /// Sum of adversary voting power after normalization.
    pub adversary_fraction: f64,
    /// Adversary normalized stake within the eligible set.
    pub adversary_stake: f64,
    /// Sum of adversary influence scores.
    pub adversary_omega: f64,
    /// `lambda * adversary_stake + (1 - lambda) * eligible_sybils`.
    pub omega_bound: f64,
    pub placements: Vec<Coordinates>,
}

const SYBIL_PREFIX: &str = "sybil-";

fn grid_points(step: f64, lat: (f64, f64), lon: (f64, f64)) -> Vec<Coordinates> {
    let mut out = Vec::new();
    let mut y = lat.0;
    while y <= lat.1 + 1e-9 {
        let mut x = lon.0;
        while x <= lon.1 + 1e-9 {
            if let Ok(c) = Coordinates::new(y.clamp(-90.0, 90.0), x.clamp(-180.0, 180.0)) {
                out.push(c);
            }
            x += step;
        }
        y += step;
    }
    out
}

fn best_gdi_point(set: &ValidatorSet, own: f64, scale: f64, quorum: f64) -> Coordinates {
    let pick = |candidates: Vec<Coordinates>| {
        let scored: Vec<(f64, Coordinates)> = candidates
            .par_iter()
            .map(|&c| (gdi_at(set, c, own, scale, quorum).unwrap_or(0.0), c))
            .collect();
        let mut best = scored[0];
        for s in scored.into_iter().skip(1) {
            if s.0 > best.0 {
                best = s;
            }
        }
        best.1
    };
    let coarse = pick(grid_points(5.0, (-90.0, 90.0), (-180.0, 175.0)));
    let (lat, lon) = (coarse.latitude(), coarse.longitude());
    pick(grid_points(1.0, (lat - 5.0, lat + 5.0), (lon - 5.0, lon + 5.0)))
}

/// Adds `count` sybils to `set`, re-derives GPoS power on the eligible set
/// and reports the adversary's share.
pub fn sybil_attack(set: &ValidatorSet, params: &SybilParams, count: usize) -> Result<SybilOutcome> {
    if !(0.0..1.0).contains(&params.total_stake_fraction) {
        return Err(GposError::InvalidParameter(format!(
            "sybil stake fraction {} outside [0, 1)",
            params.total_stake_fraction
        )));
    }
    if !(0.0..=1.0).contains(&params.lambda) {
        return Err(GposError::InvalidParameter(format!("lambda {} outside [0, 1]", params.lambda)));
    }
    let honest_total = set.total_stake();
    let f = params.total_stake_fraction;
    let adversary_raw = f / (1.0 - f) * honest_total;
    let per_sybil_raw = if count > 0 { adversary_raw / count as f64 } else { 0.0 };
    let combined_total = honest_total + adversary_raw;
    let per_sybil_norm = per_sybil_raw / combined_total;

    let sybil_eligible = per_sybil_raw > 0.0 && per_sybil_norm >= params.min_stake_threshold;
    let honest_keep: Vec<usize> = set
        .validators()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.stake / combined_total >= params.min_stake_threshold)
        .map(|(i, _)| i)
        .collect();
    let eligible_sybils = if sybil_eligible { count } else { 0 };
    if honest_keep.is_empty() && eligible_sybils == 0 {
        return Err(GeoError::EmptySet.into());
    }

    let mut placements = Vec::with_capacity(eligible_sybils);
    let mut combined = if honest_keep.is_empty() {
        None
    } else {
        Some(set.select(&honest_keep)?)
    };
    let eligible_total =
        honest_keep.iter().map(|&i| set.validators()[i].stake).sum::<f64>() + per_sybil_raw * eligible_sybils as f64;
    for i in 0..eligible_sybils {
        let at = match (&params.placement, &combined) {
            (SybilPlacement::At(points), _) if !points.is_empty() => points[i % points.len()],
            (SybilPlacement::At(_), _) => {
                return Err(GposError::InvalidParameter("empty sybil placement list".into()))
            }
            (SybilPlacement::Ideal, Some(current)) => {
                let scale = current.total_stake() / eligible_total;
                best_gdi_point(current, per_sybil_raw / eligible_total, scale, params.quorum)
            }
            (SybilPlacement::Ideal, None) => Coordinates::new(0.0, 0.0).expect("valid"),
        };
        placements.push(at);
        let record = ValidatorRecord::new(format!("{SYBIL_PREFIX}{i}"), at, per_sybil_raw, None)?;
        combined = Some(match combined {
            Some(current) => current.with_added(vec![record])?,
            None => ValidatorSet::from_records(vec![record])?,
        });
    }
    let combined = combined.expect("eligible set is non-empty");

    let is_sybil: Vec<bool> = (0..combined.len()).map(|i| i >= honest_keep.len()).collect();
    let gdi = compute_gdi(&combined, params.quorum)?;
    let weights = gpos_power(&combined, &gdi, params.lambda)?.weights;
    let omega = influence_scores(&combined, &gdi, params.lambda);
    let sum_over = |v: &[f64]| -> f64 { v.iter().zip(&is_sybil).filter(|(_, &s)| s).map(|(x, _)| x).sum() };
    let adversary_stake = sum_over(combined.normalized_stakes());
    Ok(SybilOutcome {
        sybil_count: count,
        eligible_sybils,
        adversary_fraction: sum_over(weights.as_slice()),
        adversary_stake,
        adversary_omega: sum_over(&omega),
        omega_bound: params.lambda * adversary_stake + (1.0 - params.lambda) * eligible_sybils as f64,
        placements,
    })
}

/// Plot-ready curve: `{x, y, params}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub params: BTreeMap<String, serde_json::Value>,
}

/// Adversary voting power as a function of sybil count.
pub fn sybil_curve(set: &ValidatorSet, params: &SybilParams, counts: &[usize]) -> Result<Curve> {
    let mut y = Vec::with_capacity(counts.len());
    for &c in counts {
        y.push(sybil_attack(set, params, c)?.adversary_fraction);
    }
    let mut p = BTreeMap::new();
    p.insert("lambda".into(), params.lambda.into());
    p.insert("total_stake_fraction".into(), params.total_stake_fraction.into());
    p.insert("min_stake_threshold".into(), params.min_stake_threshold.into());
    p.insert("quorum".into(), params.quorum.into());
    p.insert(
        "placement".into(),
        serde_json::to_value(&params.placement).expect("placement serializes"),
    );
    Ok(Curve {
        x: counts.iter().map(|&c| c as f64).collect(),
        y,
        params: p,
    })
}

/// Minimum coalition stake across a lambda grid, one curve per threshold.
pub fn coalition_curve(set: &ValidatorSet, lambdas: &[f64], threshold: f64, quorum: f64) -> Result<Curve> {
    let gdi = compute_gdi(set, quorum)?;
    let mut y = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let w = gpos_power(set, &gdi, lambda)?.weights;
        y.push(min_coalition_stake(set, &w, threshold)?.stake_fraction);
    }
    let mut p = BTreeMap::new();
    p.insert("threshold".into(), threshold.into());
    p.insert("quorum".into(), quorum.into());
    Ok(Curve {
        x: lambdas.to_vec(),
        y,
        params: p,
    })
}
