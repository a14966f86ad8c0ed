//! Validator snapshot ingestion, great-circle geometry and pre-processing.
//!
//! A [`ValidatorSet`] owns its records together with the normalized stake
//! vector and the pairwise distance matrix. Every derived vector in the crate
//! indexes by the set's record order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius (IUGG), kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Default proximity-merge radius, kilometers.
pub const DEFAULT_MERGE_RADIUS_KM: f64 = 20.0;

/// Country bucket for records that carry no country code.
pub const UNKNOWN_COUNTRY: &str = "??";

const NORMALIZATION_TOL: f64 = 1e-9;
const LATENCY_SYMMETRY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("invalid coordinates ({lat}, {lon})")]
    InvalidCoordinates { lat: f64, lon: f64 },
    #[error("invalid stake {stake} for validator `{id}`")]
    InvalidStake { id: String, stake: f64 },
    #[error("duplicate validator id `{0}`")]
    DuplicateId(String),
    #[error("validator set is empty")]
    EmptySet,
    #[error("{path}: record {record}: {message}")]
    Parse {
        path: PathBuf,
        record: usize,
        message: String,
    },
    #[error("latency matrix: {0}")]
    LatencyMatrix(String),
    #[error("unknown validator id `{0}`")]
    UnknownId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GeoError>;

/// A point on the globe in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoordinates", into = "RawCoordinates")]
pub struct Coordinates {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawCoordinates {
    latitude: f64,
    longitude: f64,
}

impl TryFrom<RawCoordinates> for Coordinates {
    type Error = GeoError;

    fn try_from(raw: RawCoordinates) -> Result<Self> {
        Coordinates::new(raw.latitude, raw.longitude)
    }
}

impl From<Coordinates> for RawCoordinates {
    fn from(c: Coordinates) -> Self {
        RawCoordinates {
            latitude: c.lat,
            longitude: c.lon,
        }
    }
}

impl Coordinates {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite()
            || !lon.is_finite()
            || !(-90.0..=90.0).contains(&lat)
            || !(-180.0..=180.0).contains(&lon)
        {
            return Err(GeoError::InvalidCoordinates { lat, lon });
        }
        Ok(Coordinates { lat, lon })
    }

    pub fn latitude(&self) -> f64 {
        self.lat
    }

    pub fn longitude(&self) -> f64 {
        self.lon
    }
}

impl fmt::Display for Coordinates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lat, self.lon)
    }
}

/// Great-circle distance in kilometers on a sphere of radius
/// [`EARTH_RADIUS_KM`].
///
/// The arguments are put in a canonical order before evaluation so the result
/// is bit-for-bit symmetric.
pub fn haversine(a: Coordinates, b: Coordinates) -> f64 {
    let (a, b) = match (a.lat, a.lon).partial_cmp(&(b.lat, b.lon)) {
        Some(Ordering::Greater) => (b, a),
        _ => (a, b),
    };
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.clamp(0.0, 1.0).sqrt().asin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatorRecord {
    pub id: String,
    #[serde(flatten)]
    pub coords: Coordinates,
    pub stake: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country: Option<String>,
}

impl ValidatorRecord {
    pub fn new(
        id: impl Into<String>,
        coords: Coordinates,
        stake: f64,
        country: Option<String>,
    ) -> Result<Self> {
        let id = id.into();
        if !(stake.is_finite() && stake > 0.0) {
            return Err(GeoError::InvalidStake { id, stake });
        }
        Ok(ValidatorRecord {
            id,
            coords,
            stake,
            country,
        })
    }

    /// Country code, or [`UNKNOWN_COUNTRY`] when absent.
    pub fn country_or_unknown(&self) -> &str {
        self.country.as_deref().unwrap_or(UNKNOWN_COUNTRY)
    }
}

/// Symmetric distance matrix with a zero diagonal, stored as the packed
/// strict upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    upper: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_coords(coords: &[Coordinates]) -> Self {
        let n = coords.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                coords[i + 1..]
                    .iter()
                    .map(|&c| haversine(coords[i], c))
                    .collect()
            })
            .collect();
        DistanceMatrix {
            n,
            upper: rows.concat(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        // Rows 0..i hold (n-1) + (n-2) + ... + (n-i) entries.
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            Ordering::Equal => 0.0,
            Ordering::Less => self.upper[self.offset(i, j)],
            Ordering::Greater => self.upper[self.offset(j, i)],
        }
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|j| self.get(i, j)).collect()
    }

    pub fn max(&self) -> f64 {
        self.upper.iter().copied().fold(0.0, f64::max)
    }

    /// Sub-matrix over `keep` (indices into this matrix, in output order).
    pub fn select(&self, keep: &[usize]) -> Self {
        let n = keep.len();
        let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for (a, &i) in keep.iter().enumerate() {
            for &j in &keep[a + 1..] {
                upper.push(self.get(i, j));
            }
        }
        DistanceMatrix { n, upper }
    }

    /// Appends rows for `extra` points, reusing every existing entry.
    pub fn extend(&self, existing: &[Coordinates], extra: &[Coordinates]) -> Self {
        debug_assert_eq!(existing.len(), self.n);
        let all: Vec<Coordinates> = existing.iter().chain(extra).copied().collect();
        let n = all.len();
        let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                if j < self.n {
                    upper.push(self.upper[self.offset(i, j)]);
                } else {
                    upper.push(haversine(all[i], all[j]));
                }
            }
        }
        DistanceMatrix { n, upper }
    }

    /// Pairs `(i, j)` with `i < j` whose distance is at most `radius`.
    pub fn pairs_within(&self, radius: f64) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                let d = self.upper[self.offset(i, j)];
                if d <= radius {
                    out.push((i, j, d));
                }
            }
        }
        out
    }
}

/// Ordered validator collection with cached normalized stakes and distances.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatorSet {
    validators: Vec<ValidatorRecord>,
    normalized_stakes: Vec<f64>,
    distances: DistanceMatrix,
}

fn normalize(stakes: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
    let total: f64 = stakes.clone().sum();
    stakes.map(|s| s / total).collect()
}

impl ValidatorSet {
    pub fn from_records(validators: Vec<ValidatorRecord>) -> Result<Self> {
        let coords: Vec<Coordinates> = validators.iter().map(|v| v.coords).collect();
        Self::check_records(&validators)?;
        let distances = DistanceMatrix::from_coords(&coords);
        Ok(Self::assemble(validators, distances))
    }

    fn check_records(validators: &[ValidatorRecord]) -> Result<()> {
        if validators.is_empty() {
            return Err(GeoError::EmptySet);
        }
        let mut seen = HashSet::with_capacity(validators.len());
        for v in validators {
            if !(v.stake.is_finite() && v.stake > 0.0) {
                return Err(GeoError::InvalidStake {
                    id: v.id.clone(),
                    stake: v.stake,
                });
            }
            if !seen.insert(v.id.as_str()) {
                return Err(GeoError::DuplicateId(v.id.clone()));
            }
        }
        Ok(())
    }

    fn assemble(validators: Vec<ValidatorRecord>, distances: DistanceMatrix) -> Self {
        let normalized_stakes = normalize(validators.iter().map(|v| v.stake));
        debug_assert!((normalized_stakes.iter().sum::<f64>() - 1.0).abs() < NORMALIZATION_TOL);
        ValidatorSet {
            validators,
            normalized_stakes,
            distances,
        }
    }

    pub fn len(&self) -> usize {
        self.validators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.validators.is_empty()
    }

    pub fn validators(&self) -> &[ValidatorRecord] {
        &self.validators
    }

    pub fn normalized_stakes(&self) -> &[f64] {
        &self.normalized_stakes
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn total_stake(&self) -> f64 {
        self.validators.iter().map(|v| v.stake).sum()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.validators.iter().position(|v| v.id == id)
    }

    pub fn coords(&self) -> Vec<Coordinates> {
        self.validators.iter().map(|v| v.coords).collect()
    }

    /// Rank of each validator's id in lexicographic order.
    pub fn id_ranks(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.validators[a].id.cmp(&self.validators[b].id));
        let mut ranks = vec![0; self.len()];
        for (rank, idx) in order.into_iter().enumerate() {
            ranks[idx] = rank;
        }
        ranks
    }

    /// Keeps the validators at `keep` (in that order), reusing cached
    /// distances.
    pub fn select(&self, keep: &[usize]) -> Result<Self> {
        let validators: Vec<ValidatorRecord> =
            keep.iter().map(|&i| self.validators[i].clone()).collect();
        Self::check_records(&validators)?;
        Ok(Self::assemble(validators, self.distances.select(keep)))
    }

    /// Appends records, computing distances only for the new rows.
    pub fn with_added(&self, extra: Vec<ValidatorRecord>) -> Result<Self> {
        let existing = self.coords();
        let new_coords: Vec<Coordinates> = extra.iter().map(|v| v.coords).collect();
        let mut validators = self.validators.clone();
        validators.extend(extra);
        Self::check_records(&validators)?;
        let distances = self.distances.extend(&existing, &new_coords);
        Ok(Self::assemble(validators, distances))
    }

    /// Removes the named validators, reusing cached distances.
    pub fn without(&self, ids: &[&str]) -> Result<Self> {
        let drop: HashSet<&str> = ids.iter().copied().collect();
        for id in &drop {
            if self.index_of(id).is_none() {
                return Err(GeoError::UnknownId(id.to_string()));
            }
        }
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| !drop.contains(self.validators[i].id.as_str()))
            .collect();
        self.select(&keep)
    }

    /// Replaces raw stakes (same order, same length), keeping coordinates and
    /// the distance cache.
    pub fn with_stakes(&self, stakes: &[f64]) -> Result<Self> {
        assert_eq!(stakes.len(), self.len(), "stake vector length mismatch");
        let validators: Vec<ValidatorRecord> = self
            .validators
            .iter()
            .zip(stakes)
            .map(|(v, &stake)| ValidatorRecord {
                stake,
                ..v.clone()
            })
            .collect();
        Self::check_records(&validators)?;
        Ok(Self::assemble(validators, self.distances.clone()))
    }

    /// Canonical JSON encoding (records plus normalized stakes).
    pub fn to_canonical_json(&self) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            validators: &'a [ValidatorRecord],
            normalized_stakes: &'a [f64],
        }
        serde_json::to_string(&Canonical {
            validators: &self.validators,
            normalized_stakes: &self.normalized_stakes,
        })
        .expect("validator set serializes")
    }
}

impl Serialize for ValidatorSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.validators.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ValidatorSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let records = Vec::<ValidatorRecord>::deserialize(deserializer)?;
        ValidatorSet::from_records(records).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotFormat {
    Csv,
    Json,
}

impl SnapshotFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => SnapshotFormat::Json,
            _ => SnapshotFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropReport {
    pub dropped_count: usize,
    pub dropped_stake_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct LoadedSnapshot {
    pub set: ValidatorSet,
    pub drop_report: DropReport,
}

/// One snapshot row before filtering. Numeric fields are kept as text so that
/// blanks can be told apart from malformed numbers.
#[derive(Debug, Deserialize)]
struct SnapshotRow {
    id: String,
    #[serde(default, deserialize_with = "lenient_number")]
    latitude: Option<String>,
    #[serde(default, deserialize_with = "lenient_number")]
    longitude: Option<String>,
    #[serde(default, deserialize_with = "lenient_number")]
    stake: Option<String>,
    #[serde(default)]
    country: Option<String>,
}

fn lenient_number<'de, D>(deserializer: D) -> std::result::Result<Option<String>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let value = Option::<serde_json::Value>::deserialize(deserializer)?;
    Ok(match value {
        None | Some(serde_json::Value::Null) => None,
        Some(serde_json::Value::String(s)) => Some(s),
        Some(serde_json::Value::Number(n)) => Some(n.to_string()),
        Some(other) => Some(other.to_string()),
    })
}

fn parse_field(raw: &Option<String>, field: &str) -> std::result::Result<Option<f64>, String> {
    match raw.as_deref().map(str::trim) {
        None | Some("") => Ok(None),
        Some(text) => text
            .parse::<f64>()
            .map(Some)
            .map_err(|_| format!("field `{field}`: cannot parse `{text}` as a number")),
    }
}

/// Loads a snapshot file, dropping records with missing coordinates or a
/// missing/non-positive stake.
pub fn load_snapshot(path: &Path, format: SnapshotFormat) -> Result<LoadedSnapshot> {
    let parse_err = |record: usize, message: String| GeoError::Parse {
        path: path.to_path_buf(),
        record,
        message,
    };

    // (locator, row); the locator is the CSV line number or the JSON array index.
    let rows: Vec<(usize, SnapshotRow)> = match format {
        SnapshotFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .flexible(false)
                .comment(Some(b'#'))
                .from_path(path)
                .map_err(|e| parse_err(0, e.to_string()))?;
            let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
            let mut rows = Vec::new();
            for record in reader.records() {
                let record = record.map_err(|e| {
                    let line = e.position().map_or(0, |p| p.line() as usize);
                    parse_err(line, e.to_string())
                })?;
                let line = record.position().map_or(0, |p| p.line() as usize);
                let row = record
                    .deserialize(Some(&headers))
                    .map_err(|e| parse_err(line, e.to_string()))?;
                rows.push((line, row));
            }
            rows
        }
        SnapshotFormat::Json => {
            let text = fs::read_to_string(path)?;
            let values: Vec<serde_json::Value> =
                serde_json::from_str(&text).map_err(|e| parse_err(e.line(), e.to_string()))?;
            values
                .into_iter()
                .enumerate()
                .map(|(i, v)| {
                    serde_json::from_value::<SnapshotRow>(v)
                        .map(|row| (i, row))
                        .map_err(|e| parse_err(i, e.to_string()))
                })
                .collect::<Result<_>>()?
        }
    };

    let mut kept = Vec::new();
    let mut dropped_count = 0usize;
    let mut dropped_stake = 0.0;
    let mut seen = HashSet::new();
    for (locator, row) in rows {
        let lat = parse_field(&row.latitude, "latitude").map_err(|m| parse_err(locator, m))?;
        let lon = parse_field(&row.longitude, "longitude").map_err(|m| parse_err(locator, m))?;
        let stake = parse_field(&row.stake, "stake").map_err(|m| parse_err(locator, m))?;
        let id = row.id.trim().to_string();
        if id.is_empty() {
            return Err(parse_err(locator, "empty validator id".into()));
        }
        if !seen.insert(id.clone()) {
            return Err(parse_err(locator, format!("duplicate validator id `{id}`")));
        }
        match (lat, lon, stake) {
            (Some(lat), Some(lon), Some(stake)) if stake.is_finite() && stake > 0.0 => {
                let coords = Coordinates::new(lat, lon).map_err(|e| parse_err(locator, e.to_string()))?;
                let country = row
                    .country
                    .map(|c| c.trim().to_ascii_uppercase())
                    .filter(|c| !c.is_empty());
                kept.push(ValidatorRecord::new(id, coords, stake, country)?);
            }
            (_, _, stake) => {
                dropped_count += 1;
                if let Some(s) = stake.filter(|s| s.is_finite() && *s > 0.0) {
                    dropped_stake += s;
                }
            }
        }
    }

    let kept_stake: f64 = kept.iter().map(|v| v.stake).sum();
    let total = kept_stake + dropped_stake;
    let drop_report = DropReport {
        dropped_count,
        dropped_stake_fraction: if total > 0.0 { dropped_stake / total } else { 0.0 },
    };
    if kept.is_empty() {
        return Err(GeoError::EmptySet);
    }
    Ok(LoadedSnapshot {
        set: ValidatorSet::from_records(kept)?,
        drop_report,
    })
}

/// Writes records in the snapshot CSV schema.
pub fn write_snapshot_csv(set: &ValidatorSet, path: &Path) -> Result<()> {
    write_snapshot(set, fs::File::create(path)?)
}

pub fn write_snapshot<W: std::io::Write>(set: &ValidatorSet, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(["id", "latitude", "longitude", "stake", "country"])
        .map_err(csv_io)?;
    for v in set.validators() {
        writer
            .write_record([
                v.id.clone(),
                v.coords.latitude().to_string(),
                v.coords.longitude().to_string(),
                v.stake.to_string(),
                v.country.clone().unwrap_or_default(),
            ])
            .map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> GeoError {
    GeoError::Io(std::io::Error::other(e.to_string()))
}

/// Merges validators closer than `radius_km` in a single deterministic pass.
///
/// Pairs are visited by ascending distance (ties by the lexicographic id pair).
/// When both members of a pair are still present, the lower-stake one is folded
/// into the higher-stake one, which keeps its coordinates. Equal stakes remove
/// the lexicographically larger id.
pub fn merge_proximate(set: &ValidatorSet, radius_km: f64) -> ValidatorSet {
    let ids: Vec<&str> = set.validators.iter().map(|v| v.id.as_str()).collect();
    let key = |i: usize, j: usize| {
        if ids[i] <= ids[j] {
            (ids[i], ids[j])
        } else {
            (ids[j], ids[i])
        }
    };
    let mut pairs = set.distances.pairs_within(radius_km);
    pairs.sort_by(|a, b| {
        a.2.total_cmp(&b.2)
            .then_with(|| key(a.0, a.1).cmp(&key(b.0, b.1)))
    });

    let mut stakes: Vec<f64> = set.validators.iter().map(|v| v.stake).collect();
    let mut alive = vec![true; set.len()];
    for (i, j, _) in pairs {
        if !(alive[i] && alive[j]) {
            continue;
        }
        let (survivor, removed) = match stakes[i].total_cmp(&stakes[j]) {
            Ordering::Greater => (i, j),
            Ordering::Less => (j, i),
            Ordering::Equal if ids[i] < ids[j] => (i, j),
            Ordering::Equal => (j, i),
        };
        stakes[survivor] += stakes[removed];
        alive[removed] = false;
    }

    let keep: Vec<usize> = (0..set.len()).filter(|&i| alive[i]).collect();
    let validators: Vec<ValidatorRecord> = keep
        .iter()
        .map(|&i| ValidatorRecord {
            stake: stakes[i],
            ..set.validators[i].clone()
        })
        .collect();
    ValidatorSet::assemble(validators, set.distances.select(&keep))
}

/// Grows the merge radius geometrically until at most `target` validators
/// remain. Each attempt merges from the original set. Returns the merged set
/// and the radius that produced it.
pub fn merge_to_target(set: &ValidatorSet, target: usize, start_radius_km: f64) -> (ValidatorSet, f64) {
    assert!(target >= 1, "target count must be positive");
    if set.len() <= target {
        return (set.clone(), 0.0);
    }
    let limit = std::f64::consts::PI * EARTH_RADIUS_KM;
    let mut radius = start_radius_km.max(1e-3);
    loop {
        let merged = merge_proximate(set, radius);
        if merged.len() <= target || radius >= limit {
            return (merged, radius);
        }
        radius = (radius * 1.05).min(limit);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountryAggregate {
    /// Country code to summed normalized stake (or weight).
    pub shares: BTreeMap<String, f64>,
    /// Records grouped under [`UNKNOWN_COUNTRY`].
    pub unknown_count: usize,
}

impl CountryAggregate {
    /// Shares sorted by descending value, ties by country code.
    pub fn ranked(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = self.shares.iter().map(|(k, v)| (k.clone(), *v)).collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out
    }
}

/// Sums `values` (indexed like `set`) per country.
pub fn aggregate_values_by_country(set: &ValidatorSet, values: &[f64]) -> CountryAggregate {
    assert_eq!(values.len(), set.len(), "value vector length mismatch");
    let mut shares = BTreeMap::new();
    let mut unknown_count = 0;
    for (v, &x) in set.validators.iter().zip(values) {
        if v.country.is_none() {
            unknown_count += 1;
        }
        *shares.entry(v.country_or_unknown().to_string()).or_insert(0.0) += x;
    }
    CountryAggregate {
        shares,
        unknown_count,
    }
}

pub fn aggregate_by_country(set: &ValidatorSet) -> CountryAggregate {
    aggregate_values_by_country(set, &set.normalized_stakes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LatencyModel {
    Synthetic { base_ms: f64, ms_per_km: f64 },
    File { path: PathBuf },
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel::Synthetic {
            base_ms: 0.5,
            ms_per_km: 0.01,
        }
    }
}

/// Dense symmetric one-way latency matrix in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct LatencyMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for LatencyMatrix {
    type Error = GeoError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        LatencyMatrix::from_rows(rows)
    }
}

impl From<LatencyMatrix> for Vec<Vec<f64>> {
    fn from(m: LatencyMatrix) -> Self {
        m.data.chunks(m.n.max(1)).map(<[f64]>::to_vec).collect()
    }
}

impl LatencyMatrix {
    /// Validates a square, symmetric (within 1e-6), zero-diagonal matrix of
    /// finite non-negative entries.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(GeoError::LatencyMatrix("matrix is empty".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(GeoError::LatencyMatrix(format!(
                    "row {i} has {} columns, expected {n}",
                    row.len()
                )));
            }
            for (j, &x) in row.iter().enumerate() {
                if !x.is_finite() || x < 0.0 {
                    return Err(GeoError::LatencyMatrix(format!("entry [{i}][{j}] = {x} is invalid")));
                }
            }
            if row[i].abs() > LATENCY_SYMMETRY_TOL {
                return Err(GeoError::LatencyMatrix(format!("diagonal entry [{i}][{i}] is {}", row[i])));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if (rows[i][j] - rows[j][i]).abs() > LATENCY_SYMMETRY_TOL {
                    return Err(GeoError::LatencyMatrix(format!(
                        "asymmetric entries [{i}][{j}] = {} and [{j}][{i}] = {}",
                        rows[i][j], rows[j][i]
                    )));
                }
            }
        }
        Ok(LatencyMatrix {
            n,
            data: rows.concat(),
        })
    }

    pub fn uniform(n: usize, one_way_ms: f64) -> Self {
        let mut data = vec![one_way_ms; n * n];
        for i in 0..n {
            data[i * n + i] = 0.0;
        }
        LatencyMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(csv_io)?;
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| GeoError::Parse {
                path: path.to_path_buf(),
                record: i + 1,
                message: e.to_string(),
            })?;
            let row = record
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|_| GeoError::Parse {
                        path: path.to_path_buf(),
                        record: i + 1,
                        message: format!("cannot parse `{f}` as milliseconds"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }
}

/// One-way latency matrix for `set` under `model`.
pub fn latency_matrix(set: &ValidatorSet, model: &LatencyModel) -> Result<LatencyMatrix> {
    match model {
        LatencyModel::Synthetic { base_ms, ms_per_km } => {
            let n = set.len();
            let mut data = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        data[i * n + j] = base_ms + ms_per_km * set.distances.get(i, j);
                    }
                }
            }
            Ok(LatencyMatrix { n, data })
        }
        LatencyModel::File { path } => {
            let m = LatencyMatrix::load_csv(path)?;
            if m.len() != set.len() {
                return Err(GeoError::LatencyMatrix(format!(
                    "file has {} rows, validator set has {}",
                    m.len(),
                    set.len()
                )));
            }
            Ok(m)
        }
    }
}

/// Map from validator id to its index in `set`.
pub fn id_index(set: &ValidatorSet) -> HashMap<&str, usize> {
    set.validators
        .iter()
        .enumerate()
        .map(|(i, v)| (v.id.as_str(), i))
        .collect()
}
