//! Epoch reconfiguration and the optimistic location-dispute ledger.
//!
//! Stake amounts are integer base units so that slashing, rewards, escrow and
//! burns conserve the total exactly. The [`Ledger`] is the single writer; every
//! accepted mutation is appended to an event log that replays to the same
//! state.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geodata::{Coordinates, GeoError, ValidatorRecord, ValidatorSet};
use crate::gpos::{compute_gdi, gpos_power, GposError, WeightVector, QUORUM};

/// Stake in indivisible base units.
pub type Amount = u64;

/// Rates are applied in parts per million.
const PPM: u128 = 1_000_000;

pub const DEFAULT_COLLATERAL_RATE: f64 = 0.10;
pub const DEFAULT_REWARD_RATE: f64 = 0.20;

#[derive(Debug, Error)]
pub enum ReconfigError {
    #[error("no eligible validators")]
    EmptyEligibleSet,
    #[error("unknown or inactive validator `{0}`")]
    UnknownValidator(String),
    #[error("validator `{0}` cannot dispute itself")]
    SelfDispute(String),
    #[error("challenger `{id}` holds {available} but the dispute requires {required}")]
    InsufficientStake {
        id: String,
        available: Amount,
        required: Amount,
    },
    #[error("dispute {0} does not exist")]
    UnknownDispute(u64),
    #[error("dispute {0} is already resolved")]
    AlreadyResolved(u64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("event log line {line}: {message}")]
    EventLog { line: usize, message: String },
    #[error(transparent)]
    Gpos(#[from] GposError),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

pub type Result<T> = std::result::Result<T, ReconfigError>;

fn rate_ppm(rate: f64) -> Result<u128> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(ReconfigError::InvalidParameter(format!("rate {rate} outside [0, 1]")));
    }
    Ok((rate * PPM as f64).round() as u128)
}

fn apply_rate(amount: Amount, ppm: u128) -> Amount {
    (amount as u128 * ppm / PPM) as Amount
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    #[serde(flatten)]
    pub coords: Coordinates,
    pub stake: Amount,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country: Option<String>,
}

impl Candidate {
    pub fn new(id: impl Into<String>, coords: Coordinates, stake: Amount) -> Self {
        Candidate {
            id: id.into(),
            coords,
            stake,
            country: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eligibility {
    /// The `k` largest stakes, ties by id.
    TopK(usize),
    /// Every candidate holding at least this many base units.
    MinStake(Amount),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconfigParams {
    pub lambda: f64,
    pub eligibility: Eligibility,
    pub quorum: f64,
}

impl ReconfigParams {
    pub fn new(lambda: f64, eligibility: Eligibility) -> Self {
        ReconfigParams {
            lambda,
            eligibility,
            quorum: QUORUM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochState {
    pub epoch: u64,
    pub candidates: Vec<Candidate>,
    pub active_set: ValidatorSet,
    pub powers: WeightVector,
    /// Hex SHA-256 over the epoch, active ids and powers.
    pub header_commit: String,
}

/// Canonical digest of `(epoch, ids, powers)`: a domain tag, then big-endian
/// epoch and count, then each id (length-prefixed) with its power's IEEE bits.
pub fn header_commit(epoch: u64, ids: &[&str], powers: &[f64]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"gpos-epoch-header-v1");
    hasher.update(epoch.to_be_bytes());
    hasher.update((ids.len() as u64).to_be_bytes());
    for (id, p) in ids.iter().zip(powers) {
        hasher.update((id.len() as u64).to_be_bytes());
        hasher.update(id.as_bytes());
        hasher.update(p.to_bits().to_be_bytes());
    }
    hex::encode(hasher.finalize())
}

impl EpochState {
    /// Epoch 0 from an initial candidate list.
    pub fn genesis(candidates: Vec<Candidate>, params: &ReconfigParams) -> Result<(Self, Vec<String>)> {
        let (active_set, powers, warnings) = select_and_weigh(&candidates, params)?;
        Ok((Self::assemble(0, candidates, active_set, powers), warnings))
    }

    fn assemble(epoch: u64, candidates: Vec<Candidate>, active_set: ValidatorSet, powers: WeightVector) -> Self {
        let ids: Vec<&str> = active_set.validators().iter().map(|v| v.id.as_str()).collect();
        let header_commit = header_commit(epoch, &ids, powers.as_slice());
        EpochState {
            epoch,
            candidates,
            active_set,
            powers,
            header_commit,
        }
    }

    pub fn verify_commit(&self) -> bool {
        let ids: Vec<&str> = self.active_set.validators().iter().map(|v| v.id.as_str()).collect();
        header_commit(self.epoch, &ids, self.powers.as_slice()) == self.header_commit
    }

    pub fn candidate(&self, id: &str) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.id == id)
    }

    fn candidate_mut(&mut self, id: &str) -> Option<&mut Candidate> {
        self.candidates.iter_mut().find(|c| c.id == id)
    }

    pub fn is_active(&self, id: &str) -> bool {
        self.active_set.index_of(id).is_some()
    }

    pub fn candidate_stake(&self) -> Amount {
        self.candidates.iter().map(|c| c.stake).sum()
    }
}

fn select_and_weigh(
    candidates: &[Candidate],
    params: &ReconfigParams,
) -> Result<(ValidatorSet, WeightVector, Vec<String>)> {
    let mut positive: Vec<usize> = (0..candidates.len()).filter(|&i| candidates[i].stake > 0).collect();
    let eligible: Vec<usize> = match params.eligibility {
        Eligibility::TopK(k) => {
            positive.sort_by(|&a, &b| {
                candidates[b]
                    .stake
                    .cmp(&candidates[a].stake)
                    .then_with(|| candidates[a].id.cmp(&candidates[b].id))
            });
            positive.truncate(k);
            positive.sort_unstable();
            positive
        }
        Eligibility::MinStake(min) => positive.into_iter().filter(|&i| candidates[i].stake >= min).collect(),
    };
    if eligible.is_empty() {
        return Err(ReconfigError::EmptyEligibleSet);
    }
    let records = eligible
        .iter()
        .map(|&i| {
            let c = &candidates[i];
            ValidatorRecord::new(c.id.clone(), c.coords, c.stake as f64, c.country.clone())
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let set = ValidatorSet::from_records(records)?;
    let mut warnings = Vec::new();
    if set.len() == 1 {
        warnings.push(format!("single eligible validator `{}` holds all voting power", set.validators()[0].id));
    }
    let gdi = compute_gdi(&set, params.quorum)?;
    let weighted = gpos_power(&set, &gdi, params.lambda)?;
    warnings.extend(weighted.warnings);
    Ok((set, weighted.weights, warnings))
}

/// Epoch `t -> t + 1`: eligibility, GDI, voting power and a fresh header
/// commit. Pure in `(state, params)`.
pub fn reconfigure_epoch(state: &EpochState, params: &ReconfigParams) -> Result<(EpochState, Vec<String>)> {
    let (active_set, powers, warnings) = select_and_weigh(&state.candidates, params)?;
    Ok((
        EpochState::assemble(state.epoch + 1, state.candidates.clone(), active_set, powers),
        warnings,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisputeStatus {
    Open,
    Upheld,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dispute {
    pub id: u64,
    pub challenger: String,
    pub accused: String,
    pub collateral: Amount,
    /// Opaque location evidence.
    pub evidence: String,
    pub status: DisputeStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The accused's declared location is false: slash.
    InvalidLocation,
    /// The declared location holds: the challenger's collateral burns.
    ValidLocation,
}

/// Collateral is `rate` times the challenger's free stake, but at least
/// `minimum`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollateralRule {
    pub rate: f64,
    #[serde(default)]
    pub minimum: Amount,
}

impl Default for CollateralRule {
    fn default() -> Self {
        CollateralRule {
            rate: DEFAULT_COLLATERAL_RATE,
            minimum: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub dispute: u64,
    pub slashed: Amount,
    pub reward: Amount,
    pub collateral_returned: Amount,
    pub burned: Amount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LedgerEvent {
    Genesis {
        candidates: Vec<Candidate>,
        params: ReconfigParams,
    },
    Reconfigure {
        params: ReconfigParams,
    },
    OpenDispute {
        challenger: String,
        accused: String,
        evidence: String,
        collateral: CollateralRule,
    },
    ResolveDispute {
        dispute: u64,
        verdict: Verdict,
        reward_rate: f64,
    },
}

/// Owner of the epoch state, disputes and burn accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    state: EpochState,
    disputes: Vec<Dispute>,
    escrowed: Amount,
    burned: Amount,
    initial_total: Amount,
    #[serde(skip)]
    events: Vec<LedgerEvent>,
}

impl Ledger {
    pub fn genesis(candidates: Vec<Candidate>, params: ReconfigParams) -> Result<(Self, Vec<String>)> {
        let ids: HashSet<&str> = candidates.iter().map(|c| c.id.as_str()).collect();
        if ids.len() != candidates.len() {
            return Err(ReconfigError::InvalidParameter("duplicate candidate ids".into()));
        }
        let event = LedgerEvent::Genesis {
            candidates: candidates.clone(),
            params,
        };
        let (state, warnings) = EpochState::genesis(candidates, &params)?;
        let initial_total = state.candidate_stake();
        Ok((
            Ledger {
                state,
                disputes: Vec::new(),
                escrowed: 0,
                burned: 0,
                initial_total,
                events: vec![event],
            },
            warnings,
        ))
    }

    pub fn state(&self) -> &EpochState {
        &self.state
    }

    pub fn disputes(&self) -> &[Dispute] {
        &self.disputes
    }

    pub fn dispute(&self, id: u64) -> Option<&Dispute> {
        self.disputes.get(id as usize)
    }

    pub fn burned(&self) -> Amount {
        self.burned
    }

    pub fn escrowed(&self) -> Amount {
        self.escrowed
    }

    pub fn initial_total(&self) -> Amount {
        self.initial_total
    }

    /// Free stake held by candidates plus escrowed collateral.
    pub fn current_total(&self) -> Amount {
        self.state.candidate_stake() + self.escrowed
    }

    /// `initial = current + burned`, exactly.
    pub fn is_conserved(&self) -> bool {
        self.initial_total == self.current_total() + self.burned
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    pub fn reconfigure(&mut self, params: ReconfigParams) -> Result<Vec<String>> {
        let (next, warnings) = reconfigure_epoch(&self.state, &params)?;
        self.state = next;
        self.events.push(LedgerEvent::Reconfigure { params });
        Ok(warnings)
    }

    pub fn open_dispute(
        &mut self,
        challenger: &str,
        accused: &str,
        evidence: &str,
        collateral: CollateralRule,
    ) -> Result<&Dispute> {
        if challenger == accused {
            return Err(ReconfigError::SelfDispute(challenger.to_string()));
        }
        for id in [challenger, accused] {
            if !self.state.is_active(id) || self.state.candidate(id).is_none() {
                return Err(ReconfigError::UnknownValidator(id.to_string()));
            }
        }
        let ppm = rate_ppm(collateral.rate)?;
        let available = self.state.candidate(challenger).map(|c| c.stake).unwrap_or(0);
        let required = apply_rate(available, ppm).max(collateral.minimum);
        if required > available {
            return Err(ReconfigError::InsufficientStake {
                id: challenger.to_string(),
                available,
                required,
            });
        }
        self.state.candidate_mut(challenger).expect("checked above").stake -= required;
        self.escrowed += required;
        let id = self.disputes.len() as u64;
        self.disputes.push(Dispute {
            id,
            challenger: challenger.to_string(),
            accused: accused.to_string(),
            collateral: required,
            evidence: evidence.to_string(),
            status: DisputeStatus::Open,
        });
        self.events.push(LedgerEvent::OpenDispute {
            challenger: challenger.to_string(),
            accused: accused.to_string(),
            evidence: evidence.to_string(),
            collateral,
        });
        Ok(&self.disputes[id as usize])
    }

    /// Settles an open dispute. A slashed accused leaves the candidate list at
    /// once; payouts owed to a candidate who has since left are burned.
    pub fn resolve_dispute(&mut self, dispute: u64, verdict: Verdict, reward_rate: f64) -> Result<Resolution> {
        let ppm = rate_ppm(reward_rate)?;
        let d = self
            .disputes
            .get(dispute as usize)
            .ok_or(ReconfigError::UnknownDispute(dispute))?
            .clone();
        if d.status != DisputeStatus::Open {
            return Err(ReconfigError::AlreadyResolved(dispute));
        }
        self.escrowed -= d.collateral;
        let mut resolution = Resolution {
            dispute,
            slashed: 0,
            reward: 0,
            collateral_returned: 0,
            burned: 0,
        };
        match verdict {
            Verdict::InvalidLocation => {
                if let Some(pos) = self.state.candidates.iter().position(|c| c.id == d.accused) {
                    let slashed = self.state.candidates.remove(pos).stake;
                    resolution.slashed = slashed;
                    resolution.reward = apply_rate(slashed, ppm);
                    resolution.burned = slashed - resolution.reward;
                }
                resolution.collateral_returned = d.collateral;
                match self.state.candidate_mut(&d.challenger) {
                    Some(c) => c.stake += resolution.reward + resolution.collateral_returned,
                    None => {
                        resolution.burned += resolution.reward + resolution.collateral_returned;
                        resolution.reward = 0;
                        resolution.collateral_returned = 0;
                    }
                }
                self.disputes[dispute as usize].status = DisputeStatus::Upheld;
            }
            Verdict::ValidLocation => {
                resolution.burned = d.collateral;
                self.disputes[dispute as usize].status = DisputeStatus::Rejected;
            }
        }
        self.burned += resolution.burned;
        self.events.push(LedgerEvent::ResolveDispute {
            dispute,
            verdict,
            reward_rate,
        });
        Ok(resolution)
    }

    /// One JSON object per line.
    pub fn event_log(&self) -> String {
        self.events
            .iter()
            .map(|e| serde_json::to_string(e).expect("event serializes") + "\n")
            .collect()
    }

    /// Rebuilds a ledger from an event log whose first event is `genesis`.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn replay(log: &str) -> Result<Self> {
        let mut ledger: Option<Ledger> = None;
        let events = log
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        for (i, line) in events {
            let err = |message: String| ReconfigError::EventLog { line: i + 1, message };
            let event: LedgerEvent = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            match (event, ledger.as_mut()) {
                (LedgerEvent::Genesis { candidates, params }, None) => {
                    ledger = Some(Ledger::genesis(candidates, params)?.0);
                }
                (LedgerEvent::Genesis { .. }, Some(_)) => return Err(err("repeated genesis".into())),
                (_, None) => return Err(err("log must start with genesis".into())),
                (LedgerEvent::Reconfigure { params }, Some(l)) => {
                    l.reconfigure(params)?;
                }
                (
                    LedgerEvent::OpenDispute {
                        challenger,
                        accused,
                        evidence,
                        collateral,
                    },
                    Some(l),
                ) => {
                    l.open_dispute(&challenger, &accused, &evidence, collateral)?;
                }
                (
                    LedgerEvent::ResolveDispute {
                        dispute,
                        verdict,
                        reward_rate,
                    },
                    Some(l),
                ) => {
                    l.resolve_dispute(dispute, verdict, reward_rate)?;
                }
            }
        }
        ledger.ok_or(ReconfigError::EventLog {
            line: 0,
            message: "empty event log".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(id: &str, lat: f64, lon: f64, stake: Amount) -> Candidate {
        Candidate::new(id, Coordinates::new(lat, lon).unwrap(), stake)
    }

    fn five() -> Vec<Candidate> {
        vec![
            cand("a", 50.0, 8.0, 5),
            cand("b", 40.7, -74.0, 4),
            cand("c", 35.7, 139.7, 3),
            cand("d", -33.9, 151.2, 2),
            cand("e", 1.35, 103.8, 1),
        ]
    }

    #[test]
    fn lambda_one_powers_are_stake_shares() {
        let (state, _) = EpochState::genesis(five(), &ReconfigParams::new(1.0, Eligibility::TopK(5))).unwrap();
        let expect = [5.0 / 15.0, 4.0 / 15.0, 3.0 / 15.0, 2.0 / 15.0, 1.0 / 15.0];
        for (p, e) in state.powers.as_slice().iter().zip(expect) {
            assert!((p - e).abs() < 1e-15);
        }
        assert!(state.verify_commit());
    }

    #[test]
    fn top_k_selects_largest() {
        let params = ReconfigParams::new(0.5, Eligibility::TopK(3));
        let (state, _) = EpochState::genesis(five(), &params).unwrap();
        let ids: Vec<&str> = state.active_set.validators().iter().map(|v| v.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        let set = &state.active_set;
        let gdi = compute_gdi(set, QUORUM).unwrap();
        let omega: Vec<f64> = set
            .normalized_stakes()
            .iter()
            .zip(&gdi.normalized)
            .map(|(s, g)| 0.5 * s + 0.5 * g)
            .collect();
        let total: f64 = omega.iter().sum();
        for (p, o) in state.powers.as_slice().iter().zip(&omega) {
            assert!((p - o / total).abs() < 1e-12);
        }
        assert!((state.powers.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn top_k_ties_break_by_id() {
        let cands = vec![cand("z", 0.0, 0.0, 5), cand("y", 10.0, 0.0, 5), cand("x", 20.0, 0.0, 5)];
        let (state, _) = EpochState::genesis(cands, &ReconfigParams::new(1.0, Eligibility::TopK(2))).unwrap();
        let ids: Vec<&str> = state.active_set.validators().iter().map(|v| v.id.as_str()).collect();
        assert_eq!(ids, ["y", "x"]);
    }

    #[test]
    fn min_stake_filter_and_empty_error() {
        let (state, _) = EpochState::genesis(five(), &ReconfigParams::new(1.0, Eligibility::MinStake(3))).unwrap();
        assert_eq!(state.active_set.len(), 3);
        assert!(matches!(
            EpochState::genesis(five(), &ReconfigParams::new(1.0, Eligibility::MinStake(100))),
            Err(ReconfigError::EmptyEligibleSet)
        ));
    }

    #[test]
    fn single_eligible_warns() {
        let (state, warnings) =
            EpochState::genesis(five(), &ReconfigParams::new(0.5, Eligibility::TopK(1))).unwrap();
        assert_eq!(state.powers.as_slice(), &[1.0]);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn commit_is_deterministic() {
        let params = ReconfigParams::new(0.7, Eligibility::TopK(4));
        let (a, _) = EpochState::genesis(five(), &params).unwrap();
        let (b, _) = EpochState::genesis(five(), &params).unwrap();
        assert_eq!(a.header_commit, b.header_commit);
        let (a1, _) = reconfigure_epoch(&a, &params).unwrap();
        let (b1, _) = reconfigure_epoch(&b, &params).unwrap();
        assert_eq!(a1.epoch, 1);
        assert_eq!(a1.header_commit, b1.header_commit);
        assert_ne!(a1.header_commit, a.header_commit);
        assert_eq!(serde_json::to_string(&a1).unwrap(), serde_json::to_string(&b1).unwrap());
    }

    #[test]
    fn state_json_roundtrip() {
        let (a, _) = EpochState::genesis(five(), &ReconfigParams::new(0.5, Eligibility::TopK(5))).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        let back: EpochState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        assert!(back.verify_commit());
    }

    fn ledger_with(stakes: &[(&str, Amount)]) -> Ledger {
        let cands = stakes
            .iter()
            .enumerate()
            .map(|(i, &(id, s))| cand(id, i as f64 * 10.0, i as f64 * 20.0, s))
            .collect();
        Ledger::genesis(cands, ReconfigParams::new(1.0, Eligibility::MinStake(1))).unwrap().0
    }

    #[test]
    fn open_dispute_escrows_collateral() {
        let mut l = ledger_with(&[("j", 100), ("i", 50), ("k", 30)]);
        let d = l.open_dispute("j", "i", "proof", CollateralRule::default()).unwrap().clone();
        assert_eq!(d.collateral, 10);
        assert_eq!(d.status, DisputeStatus::Open);
        assert_eq!(l.state().candidate("j").unwrap().stake, 90);
        assert_eq!(l.escrowed(), 10);
        assert!(l.is_conserved());
    }

    #[test]
    fn open_dispute_rejections() {
        let mut l = ledger_with(&[("j", 5), ("i", 50)]);
        assert!(matches!(
            l.open_dispute("i", "i", "", CollateralRule::default()),
            Err(ReconfigError::SelfDispute(_))
        ));
        assert!(matches!(
            l.open_dispute("q", "i", "", CollateralRule::default()),
            Err(ReconfigError::UnknownValidator(_))
        ));
        let rule = CollateralRule {
            rate: 0.10,
            minimum: 10,
        };
        match l.open_dispute("j", "i", "", rule) {
            Err(ReconfigError::InsufficientStake { available, required, .. }) => {
                assert_eq!((available, required), (5, 10));
            }
            other => panic!("{other:?}"),
        }
        assert!(l.disputes().is_empty());
        assert_eq!(l.events().len(), 1);
    }

    #[test]
    fn upheld_dispute_slashes_and_rewards() {
        let mut l = ledger_with(&[("j", 100), ("i", 50), ("k", 30)]);
        l.open_dispute("j", "i", "triangulation", CollateralRule::default()).unwrap();
        let r = l.resolve_dispute(0, Verdict::InvalidLocation, DEFAULT_REWARD_RATE).unwrap();
        assert_eq!((r.slashed, r.reward, r.burned, r.collateral_returned), (50, 10, 40, 10));
        assert_eq!(l.state().candidate("j").unwrap().stake, 110);
        assert!(l.state().candidate("i").is_none());
        assert_eq!(l.burned(), 40);
        assert!(l.is_conserved());
        assert_eq!(l.initial_total(), l.current_total() + l.burned());

        // The slashed validator is gone from the next eligible set.
        l.reconfigure(ReconfigParams::new(1.0, Eligibility::MinStake(1))).unwrap();
        assert!(!l.state().is_active("i"));
        assert!(matches!(
            l.resolve_dispute(0, Verdict::ValidLocation, 0.2),
            Err(ReconfigError::AlreadyResolved(0))
        ));
    }

    #[test]
    fn rejected_dispute_burns_collateral() {
        let mut l = ledger_with(&[("j", 100), ("i", 50)]);
        l.open_dispute("j", "i", "", CollateralRule::default()).unwrap();
        let r = l.resolve_dispute(0, Verdict::ValidLocation, DEFAULT_REWARD_RATE).unwrap();
        assert_eq!(r.burned, 10);
        assert_eq!(l.state().candidate("j").unwrap().stake, 90);
        assert_eq!(l.state().candidate("i").unwrap().stake, 50);
        assert_eq!(l.dispute(0).unwrap().status, DisputeStatus::Rejected);
        assert!(l.is_conserved());
    }

    #[test]
    fn payouts_to_departed_challenger_burn() {
        let mut l = ledger_with(&[("a", 100), ("b", 100), ("c", 100)]);
        l.open_dispute("a", "b", "", CollateralRule::default()).unwrap();
        l.open_dispute("c", "a", "", CollateralRule::default()).unwrap();
        l.resolve_dispute(1, Verdict::InvalidLocation, 0.2).unwrap();
        assert!(l.state().candidate("a").is_none());
        let r = l.resolve_dispute(0, Verdict::InvalidLocation, 0.2).unwrap();
        assert_eq!(r.reward, 0);
        assert_eq!(r.collateral_returned, 0);
        assert_eq!(r.burned, 100 + 10);
        assert!(l.is_conserved());
    }

    #[test]
    fn replay_reconstructs_ledger() {
        let mut l = ledger_with(&[("j", 100), ("i", 50), ("k", 30)]);
        l.open_dispute("j", "i", "x", CollateralRule::default()).unwrap();
        l.open_dispute("k", "j", "y", CollateralRule::default()).unwrap();
        l.resolve_dispute(1, Verdict::ValidLocation, 0.2).unwrap();
        l.reconfigure(ReconfigParams::new(0.5, Eligibility::TopK(3))).unwrap();
        l.resolve_dispute(0, Verdict::InvalidLocation, 0.2).unwrap();
        l.reconfigure(ReconfigParams::new(0.5, Eligibility::TopK(3))).unwrap();
        let log = l.event_log();
        assert_eq!(log.lines().count(), 7);
        let back = Ledger::replay(&log).unwrap();
        assert_eq!(back, l);
        assert_eq!(back.state().header_commit, l.state().header_commit);
        assert!(Ledger::replay("").is_err());
        assert!(Ledger::replay(&log.lines().skip(1).collect::<Vec<_>>().join("\n")).is_err());
    }

    #[test]
    fn rate_arithmetic_is_exact() {
        assert_eq!(apply_rate(100, rate_ppm(0.1).unwrap()), 10);
        assert_eq!(apply_rate(u64::MAX, PPM), u64::MAX);
        assert_eq!(apply_rate(7, rate_ppm(0.5).unwrap()), 3);
        assert!(rate_ppm(1.5).is_err());
    }
}
