//! Decentralization metrics over validator sets and weight vectors.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodata::{aggregate_values_by_country, ValidatorSet};
use crate::gpos::WeightVector;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("gini of an empty vector")]
    Empty,
    #[error("value {value} at index {index} is negative or not finite")]
    InvalidValue { index: usize, value: f64 },
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("weight vector has length {weights}, validator set has {validators}")]
    LengthMismatch { weights: usize, validators: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, MetricError>;

/// A named scalar metric with optional per-validator scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub name: String,
    pub scalar: f64,
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_validator: Option<Vec<f64>>,
}

impl MetricReport {
    fn new(name: &str, scalar: f64) -> Self {
        MetricReport {
            name: name.to_string(),
            scalar,
            params: BTreeMap::new(),
            per_validator: None,
        }
    }

    fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

/// Gini coefficient, `sum_i sum_j |x_i - x_j| / (2 n^2 mean)`.
///
/// Evaluated in O(n log n) via the sorted-rank identity. All-zero input
/// yields 0.
pub fn gini(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(MetricError::Empty);
    }
    if let Some((index, &value)) = values
        .iter()
        .enumerate()
        .find(|(_, x)| !x.is_finite() || **x < 0.0)
    {
        return Err(MetricError::InvalidValue { index, value });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let total: f64 = sorted.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    // sum_i (2i - n - 1) x_(i), 1-based ranks over ascending order.
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x)
        .sum();
    Ok((weighted / (n * total)).max(0.0))
}

/// Stake-proximity graph with `A[i][j] = w_i w_j (1 - d_ij / d_max)` off the
/// diagonal and zero self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityGraph {
    n: usize,
    adjacency: Vec<f64>,
    d_max: f64,
}

impl CentralityGraph {
    pub fn build(set: &ValidatorSet, weights: &WeightVector) -> Result<Self> {
        check_len(set, weights)?;
        let n = set.len();
        let dist = set.distances();
        let d_max = dist.max();
        let w = weights.as_slice();
        let mut adjacency = vec![0.0; n * n];
        if d_max > 0.0 {
            for i in 0..n {
                for j in i + 1..n {
                    let a = w[i] * w[j] * (1.0 - dist.get(i, j) / d_max);
                    adjacency[i * n + j] = a;
                    adjacency[j * n + i] = a;
                }
            }
        }
        Ok(CentralityGraph { n, adjacency, d_max })
    }

    /// Wraps an arbitrary symmetric non-negative matrix (row-major).
    pub fn from_adjacency(n: usize, adjacency: Vec<f64>) -> Result<Self> {
        if adjacency.len() != n * n {
            return Err(MetricError::InvalidParameter(format!(
                "adjacency has {} entries, expected {}",
                adjacency.len(),
                n * n
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let a = adjacency[i * n + j];
                if !a.is_finite() || a < 0.0 || a != adjacency[j * n + i] {
                    return Err(MetricError::InvalidParameter(format!(
                        "adjacency entry [{i}][{j}] = {a} breaks symmetry or non-negativity"
                    )));
                }
            }
        }
        Ok(CentralityGraph {
            n,
            adjacency,
            d_max: f64::NAN,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.adjacency[i * self.n + j]
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    fn multiply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.adjacency[i * self.n..(i + 1) * self.n];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Centrality {
    /// Non-negative, L1-normalized scores.
    pub scores: Vec<f64>,
    pub iterations: usize,
    /// Set when the graph has no edges (single validator or all co-located).
    pub degenerate: bool,
}

pub const DEFAULT_CENTRALITY_TOL: f64 = 1e-12;
pub const DEFAULT_CENTRALITY_MAX_ITER: usize = 10_000;

/// Principal eigenvector by power iteration from the uniform vector.
///
/// Iterates on `A + sigma I` with `sigma` half the largest row sum; the shift
/// keeps the eigenvectors and removes the oscillation bipartite-like graphs
/// cause on plain `A`.
pub fn eigenvector_centrality(graph: &CentralityGraph, tol: f64, max_iter: usize) -> Result<Centrality> {
    let n = graph.n;
    if n == 0 {
        return Err(MetricError::Empty);
    }
    let uniform = vec![1.0 / n as f64; n];
    let max_row_sum = (0..n)
        .map(|i| graph.adjacency[i * n..(i + 1) * n].iter().sum::<f64>())
        .fold(0.0, f64::max);
    if n == 1 || max_row_sum == 0.0 {
        return Ok(Centrality {
            scores: uniform,
            iterations: 0,
            degenerate: true,
        });
    }

    let sigma = 0.5 * max_row_sum;
    let mut x = uniform;
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iter {
        graph.multiply(&x, &mut next);
        for (y, &xi) in next.iter_mut().zip(&x) {
            *y += sigma * xi;
        }
        let norm: f64 = next.iter().sum();
        for y in next.iter_mut() {
            *y /= norm;
        }
        residual = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next);
        if residual < tol {
            return Ok(Centrality {
                scores: x,
                iterations: iteration,
                degenerate: false,
            });
        }
    }
    Err(MetricError::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Gini of eigenvector centrality on the stake-proximity graph.
pub fn gec(set: &ValidatorSet, weights: &WeightVector) -> Result<MetricReport> {
    let graph = CentralityGraph::build(set, weights)?;
    let centrality = eigenvector_centrality(&graph, DEFAULT_CENTRALITY_TOL, DEFAULT_CENTRALITY_MAX_ITER)?;
    let mut report = MetricReport::new("gec", gini(&centrality.scores)?)
        .param("d_max_km", graph.d_max)
        .param("iterations", centrality.iterations as f64)
        .param("degenerate", if centrality.degenerate { 1.0 } else { 0.0 });
    report.per_validator = Some(centrality.scores);
    Ok(report)
}

/// Degree ("strength") centrality on the same graph; a cheap baseline.
pub fn degree_centrality(graph: &CentralityGraph) -> Vec<f64> {
    let n = graph.n;
    let sums: Vec<f64> = (0..n)
        .map(|i| graph.adjacency[i * n..(i + 1) * n].iter().sum())
        .collect();
    let total: f64 = sums.iter().sum();
    if total == 0.0 {
        return vec![1.0 / n as f64; n];
    }
    sums.into_iter().map(|s| s / total).collect()
}

/// Smallest number of largest weights whose sum strictly exceeds `threshold`.
pub fn nakamoto_coefficient(weights: &WeightVector, threshold: f64) -> usize {
    let mut sorted = weights.as_slice().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    for (k, w) in sorted.iter().enumerate() {
        acc += w;
        if acc > threshold {
            return k + 1;
        }
    }
    sorted.len()
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy(weights: &WeightVector) -> f64 {
    let h: f64 = weights
        .as_slice()
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| -w * w.log2())
        .sum();
    h.max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryGini {
    pub report: MetricReport,
    /// Country shares of total weight, descending.
    pub ranked: Vec<(String, f64)>,
    pub unknown_count: usize,
}

impl CountryGini {
    pub fn top(&self, k: usize) -> &[(String, f64)] {
        &self.ranked[..k.min(self.ranked.len())]
    }
}

/// Gini over per-country weight totals. Records without a country form one
/// extra bucket.
pub fn country_gini(set: &ValidatorSet, weights: &WeightVector) -> Result<CountryGini> {
    check_len(set, weights)?;
    let agg = aggregate_values_by_country(set, weights.as_slice());
    let values: Vec<f64> = agg.shares.values().copied().collect();
    let report = MetricReport::new("gini_country", gini(&values)?)
        .param("countries", values.len() as f64)
        .param("unknown_count", agg.unknown_count as f64);
    Ok(CountryGini {
        report,
        ranked: agg.ranked(),
        unknown_count: agg.unknown_count,
    })
}

/// Neighborhood-aggregated weights: each validator's own weight plus every
/// other weight within `radius_km`.
pub fn proximity_aggregates(set: &ValidatorSet, weights: &WeightVector, radius_km: f64) -> Vec<f64> {
    let w = weights.as_slice();
    let mut agg = w.to_vec();
    for (i, j, _) in set.distances().pairs_within(radius_km) {
        agg[i] += w[j];
        agg[j] += w[i];
    }
    agg
}

pub fn proximity_gini(set: &ValidatorSet, weights: &WeightVector, radius_km: f64) -> Result<MetricReport> {
    check_len(set, weights)?;
    if !(radius_km > 0.0) {
        return Err(MetricError::InvalidParameter(format!("radius {radius_km} km must be positive")));
    }
    let agg = proximity_aggregates(set, weights, radius_km);
    let mut report = MetricReport::new("gini_proximity", gini(&agg)?).param("radius_km", radius_km);
    report.per_validator = Some(agg);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lat_steps: usize,
    pub lon_steps: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lat_steps: 180,
            lon_steps: 360,
        }
    }
}

/// Density on cell centers of a regular lat/lon grid over the whole globe.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub lats: Vec<f64>,
    pub lons: Vec<f64>,
    /// Row-major by latitude; sums to 1.
    pub density: Vec<f64>,
}

impl DensityGrid {
    pub fn get(&self, lat_idx: usize, lon_idx: usize) -> f64 {
        self.density[lat_idx * self.lons.len() + lon_idx]
    }

    /// Cell containing a coordinate.
    pub fn cell_of(&self, lat: f64, lon: f64) -> (usize, usize) {
        let locate = |x: f64, lo: f64, span: f64, steps: usize| {
            (((x - lo) / span * steps as f64).floor() as usize).min(steps - 1)
        };
        (
            locate(lat, -90.0, 180.0, self.lats.len()),
            locate(lon, -180.0, 360.0, self.lons.len()),
        )
    }

    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &d) in self.density.iter().enumerate() {
            if d > self.density[best] {
                best = i;
            }
        }
        (best / self.lons.len(), best % self.lons.len())
    }

    /// `lat,lon,density` rows for external plotting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "lat,lon,density")?;
        for (i, lat) in self.lats.iter().enumerate() {
            for (j, lon) in self.lons.iter().enumerate() {
                writeln!(out, "{lat},{lon},{}", self.get(i, j))?;
            }
        }
        Ok(())
    }
}

fn cell_centers(lo: f64, span: f64, steps: usize) -> Vec<f64> {
    let h = span / steps as f64;
    (0..steps).map(|i| lo + (i as f64 + 0.5) * h).collect()
}

/// Weighted Gaussian KDE treating (lat, lon) as planar degrees.
///
/// This is an approximation that degrades toward the poles and across the
/// antimeridian.
pub fn kde_grid(set: &ValidatorSet, weights: &WeightVector, bandwidth_deg: f64, grid: GridSpec) -> Result<DensityGrid> {
    check_len(set, weights)?;
    if !(bandwidth_deg > 0.0 && bandwidth_deg.is_finite()) {
        return Err(MetricError::InvalidParameter(format!("bandwidth {bandwidth_deg} must be positive")));
    }
    if grid.lat_steps < 2 || grid.lon_steps < 2 {
        return Err(MetricError::InvalidParameter("grid needs at least 2 steps per axis".into()));
    }
    let lats = cell_centers(-90.0, 180.0, grid.lat_steps);
    let lons = cell_centers(-180.0, 360.0, grid.lon_steps);
    let inv = 1.0 / (2.0 * bandwidth_deg * bandwidth_deg);
    let w = weights.as_slice();

    // Separable kernel: per-validator 1-D factors along each axis.
    let mut density = vec![0.0; lats.len() * lons.len()];
    for (v, &wv) in set.validators().iter().zip(w) {
        if wv == 0.0 {
            continue;
        }
        let klat: Vec<f64> = lats
            .iter()
            .map(|&y| (-(y - v.coords.latitude()).powi(2) * inv).exp())
            .collect();
        let klon: Vec<f64> = lons
            .iter()
            .map(|&x| (-(x - v.coords.longitude()).powi(2) * inv).exp())
            .collect();
        for (i, &a) in klat.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = &mut density[i * lons.len()..(i + 1) * lons.len()];
            for (cell, &b) in row.iter_mut().zip(&klon) {
                *cell += wv * a * b;
            }
        }
    }

    let mut grid_out = DensityGrid { lats, lons, density };
    let total: f64 = grid_out.density.iter().sum();
    if total > 0.0 {
        grid_out.density.iter_mut().for_each(|d| *d /= total);
    } else {
        // Kernels underflowed everywhere: fall back to a weighted histogram.
        let wsum: f64 = w.iter().sum();
        for (v, &wv) in set.validators().iter().zip(w) {
            let (i, j) = grid_out.cell_of(v.coords.latitude(), v.coords.longitude());
            let cols = grid_out.lons.len();
            grid_out.density[i * cols + j] += wv / wsum;
        }
    }
    Ok(grid_out)
}

fn check_len(set: &ValidatorSet, weights: &WeightVector) -> Result<()> {
    if set.len() != weights.len() {
        return Err(MetricError::LengthMismatch {
            weights: weights.len(),
            validators: set.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::{Coordinates, ValidatorRecord, EARTH_RADIUS_KM};
    use proptest::prelude::*;

    /// Direct double-sum Gini, independent of the sorted-rank path.
    fn gini_oracle(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        if mean == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for a in x {
            for b in x {
                s += (a - b).abs();
            }
        }
        s / (2.0 * n * n * mean)
    }

    fn set_of(points: &[(f64, f64, f64)]) -> ValidatorSet {
        let recs = points
            .iter()
            .enumerate()
            .map(|(i, &(lat, lon, s))| {
                ValidatorRecord::new(format!("v{i}"), Coordinates::new(lat, lon).unwrap(), s, None).unwrap()
            })
            .collect();
        ValidatorSet::from_records(recs).unwrap()
    }

    fn stakes(set: &ValidatorSet) -> WeightVector {
        WeightVector::from_stakes(set)
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!((gini(&[0.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(gini(&[5.0, 5.0, 5.0]).unwrap(), gini(&[50.0, 50.0, 50.0]).unwrap());
        assert_eq!(gini(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn gini_errors() {
        assert_eq!(gini(&[]), Err(MetricError::Empty));
        assert!(matches!(gini(&[1.0, -1.0]), Err(MetricError::InvalidValue { index: 1, .. })));
    }

    #[test]
    fn nakamoto_examples() {
        let uniform = WeightVector::uniform(10);
        assert_eq!(nakamoto_coefficient(&uniform, 1.0 / 3.0), 4);
        let w = WeightVector::new(vec![0.4, 0.3, 0.3]).unwrap();
        assert_eq!(nakamoto_coefficient(&w, 1.0 / 3.0), 1);
        let w = WeightVector::uniform(4);
        assert_eq!(nakamoto_coefficient(&w, 2.0 / 3.0), 3);
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&WeightVector::uniform(8)) - 3.0).abs() < 1e-12);
        assert_eq!(entropy(&WeightVector::new(vec![1.0]).unwrap()), 0.0);
        let w = WeightVector::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!((entropy(&w) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn centrality_two_validators() {
        let set = set_of(&[(0.0, 0.0, 1.0), (10.0, 10.0, 1.0)]);
        let g = CentralityGraph::build(&set, &stakes(&set)).unwrap();
        let c = eigenvector_centrality(&g, 1e-12, 10_000).unwrap();
        assert!((c.scores[0] - 0.5).abs() < 1e-12);
        assert!((c.scores[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn centrality_degenerate_cases() {
        let set = set_of(&[(5.0, 5.0, 1.0), (5.0, 5.0, 3.0), (5.0, 5.0, 2.0)]);
        let g = CentralityGraph::build(&set, &stakes(&set)).unwrap();
        let c = eigenvector_centrality(&g, 1e-12, 10_000).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.scores, vec![1.0 / 3.0; 3]);

        let set = set_of(&[(5.0, 5.0, 1.0)]);
        let g = CentralityGraph::build(&set, &stakes(&set)).unwrap();
        let c = eigenvector_centrality(&g, 1e-12, 10_000).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.scores, vec![1.0]);
    }

    #[test]
    fn centrality_path_graph_converges() {
        // Three collinear points: the two ends are at d_max so their edge
        // vanishes and the graph is a bipartite path.
        let set = set_of(&[(0.0, 0.0, 1.0), (0.0, 10.0, 2.0), (0.0, 20.0, 1.0)]);
        let g = CentralityGraph::build(&set, &stakes(&set)).unwrap();
        assert_eq!(g.get(0, 2), 0.0);
        let c = eigenvector_centrality(&g, 1e-12, 10_000).unwrap();
        // Path a-b-a with equal edge weights: eigenvector (1, sqrt 2, 1).
        let r = 2f64.sqrt();
        let expect = [1.0 / (2.0 + r), r / (2.0 + r), 1.0 / (2.0 + r)];
        for (a, b) in c.scores.iter().zip(expect) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn centrality_reports_non_convergence() {
        let set = set_of(&[(0.0, 0.0, 1.0), (0.0, 10.0, 2.0), (3.0, 20.0, 5.0), (-4.0, 2.0, 1.0)]);
        let g = CentralityGraph::build(&set, &stakes(&set)).unwrap();
        match eigenvector_centrality(&g, 0.0, 5) {
            Err(MetricError::NoConvergence { iterations, residual }) => {
                assert_eq!(iterations, 5);
                assert!(residual.is_finite());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gec_zero_on_symmetric_circle() {
        // Equal stakes, equally spaced around a small circle of latitude-free
        // points on the equator: every validator is equivalent.
        let n = 8;
        let points: Vec<(f64, f64, f64)> = (0..n).map(|i| (0.0, -175.0 + 360.0 / n as f64 * i as f64, 1.0)).collect();
        let set = set_of(&points);
        let r = gec(&set, &stakes(&set)).unwrap();
        assert!(r.scalar.abs() < 1e-9, "{}", r.scalar);
    }

    #[test]
    fn country_gini_single_country_is_zero() {
        let mut set_recs: Vec<ValidatorRecord> = set_of(&[(0.0, 0.0, 1.0), (1.0, 1.0, 9.0)]).validators().to_vec();
        for r in &mut set_recs {
            r.country = Some("US".into());
        }
        let set = ValidatorSet::from_records(set_recs).unwrap();
        let cg = country_gini(&set, &stakes(&set)).unwrap();
        assert_eq!(cg.report.scalar, 0.0);
        assert_eq!(cg.top(8).len(), 1);
    }

    #[test]
    fn proximity_gini_complete_neighborhood() {
        let set = set_of(&[(0.0, 0.0, 1.0), (0.5, 0.5, 5.0), (1.0, 0.0, 2.0)]);
        let r = proximity_gini(&set, &stakes(&set), 1000.0).unwrap();
        for a in r.per_validator.as_ref().unwrap() {
            assert!((a - 1.0).abs() < 1e-12);
        }
        assert!(r.scalar.abs() < 1e-12);
        assert!(proximity_gini(&set, &stakes(&set), 0.0).is_err());
    }

    #[test]
    fn proximity_gini_small_radius_is_raw_gini() {
        let set = set_of(&[(0.0, 0.0, 1.0), (10.0, 0.0, 5.0), (20.0, 0.0, 2.0)]);
        let w = stakes(&set);
        let r = proximity_gini(&set, &w, 1.0).unwrap();
        assert_eq!(r.scalar, gini(w.as_slice()).unwrap());
    }

    #[test]
    fn kde_single_validator_peak() {
        let set = set_of(&[(43.65, -79.38, 1.0)]);
        let grid = kde_grid(&set, &stakes(&set), 3.0, GridSpec { lat_steps: 90, lon_steps: 180 }).unwrap();
        assert_eq!(grid.argmax(), grid.cell_of(43.65, -79.38));
        assert!((grid.density.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kde_two_symmetric_peaks() {
        // Cell centers of a 18x36 grid sit at odd multiples of 5 degrees.
        let set = set_of(&[(45.0, -95.0, 1.0), (45.0, 95.0, 1.0)]);
        let grid = kde_grid(&set, &stakes(&set), 2.0, GridSpec { lat_steps: 18, lon_steps: 36 }).unwrap();
        let a = grid.cell_of(45.0, -95.0);
        let b = grid.cell_of(45.0, 95.0);
        let (pa, pb) = (grid.get(a.0, a.1), grid.get(b.0, b.1));
        assert!((pa - pb).abs() < 1e-9);
        // Both are local maxima.
        for &(i, j) in &[a, b] {
            let p = grid.get(i, j);
            assert!(p > grid.get(i + 1, j) && p > grid.get(i - 1, j));
            assert!(p > grid.get(i, j + 1) && p > grid.get(i, j - 1));
        }
    }

    #[test]
    fn kde_underflow_falls_back_to_histogram() {
        let set = set_of(&[(10.3, 20.7, 1.0)]);
        let grid = kde_grid(&set, &stakes(&set), 1e-4, GridSpec { lat_steps: 18, lon_steps: 36 }).unwrap();
        assert_eq!(grid.argmax(), grid.cell_of(10.3, 20.7));
        assert!((grid.density.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(kde_grid(&set, &stakes(&set), 1.0, GridSpec { lat_steps: 1, lon_steps: 5 }).is_err());
    }

    #[test]
    fn kde_csv_shape() {
        let set = set_of(&[(0.0, 0.0, 1.0)]);
        let grid = kde_grid(&set, &stakes(&set), 10.0, GridSpec { lat_steps: 2, lon_steps: 3 }).unwrap();
        let mut out = Vec::new();
        grid.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("lat,lon,density\n-45,-120,"));
    }

    #[test]
    fn report_json_keys() {
        let set = set_of(&[(0.0, 0.0, 1.0), (1.0, 1.0, 2.0)]);
        let r = gec(&set, &stakes(&set)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["name", "scalar", "params", "per_validator"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    proptest! {
        #[test]
        fn gini_matches_double_sum(x in prop::collection::vec(0.0f64..1e3, 1..60)) {
            let g = gini(&x).unwrap();
            prop_assert!((g - gini_oracle(&x)).abs() < 1e-12);
            prop_assert!((0.0..1.0).contains(&g));
        }

        #[test]
        fn gini_scale_invariant(x in prop::collection::vec(0.001f64..1e3, 1..40), c in 1e-6f64..1e6, p in -20i32..20) {
            let g = gini(&x).unwrap();
            let pow2: Vec<f64> = x.iter().map(|v| v * 2f64.powi(p)).collect();
            prop_assert_eq!(gini(&pow2).unwrap(), g);
            let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
            prop_assert!((gini(&scaled).unwrap() - g).abs() < 1e-12);
        }

        #[test]
        fn nakamoto_monotone_in_threshold(raw in prop::collection::vec(0.01f64..10.0, 1..30), t1 in 0.01f64..0.99, t2 in 0.01f64..0.99) {
            let w = WeightVector::from_unnormalized(&raw).unwrap();
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(nakamoto_coefficient(&w, lo) <= nakamoto_coefficient(&w, hi));
        }

        #[test]
        fn entropy_bounded(raw in prop::collection::vec(0.0f64..10.0, 1..30)) {
            prop_assume!(raw.iter().sum::<f64>() > 0.0);
            let w = WeightVector::from_unnormalized(&raw).unwrap();
            let h = entropy(&w);
            prop_assert!(h >= 0.0 && h <= (raw.len() as f64).log2() + 1e-12);
        }

        #[test]
        fn gec_invariant_to_uniform_stake_scaling(
            pts in prop::collection::vec(((-60.0f64..60.0), (-150.0f64..150.0), (0.5f64..50.0)), 2..12),
            c in 0.01f64..100.0,
        ) {
            let set = set_of(&pts);
            let scaled: Vec<(f64, f64, f64)> = pts.iter().map(|&(a, b, s)| (a, b, s * c)).collect();
            let set2 = set_of(&scaled);
            let g1 = gec(&set, &stakes(&set)).unwrap().scalar;
            let g2 = gec(&set2, &stakes(&set2)).unwrap().scalar;
            prop_assert!((g1 - g2).abs() < 1e-9);
        }

        #[test]
        fn adjacency_entries_in_unit_interval(
            pts in prop::collection::vec(((-60.0f64..60.0), (-150.0f64..150.0), (0.5f64..50.0)), 2..10),
        ) {
            let set = set_of(&pts);
            let g = CentralityGraph::build(&set, &stakes(&set)).unwrap();
            for i in 0..g.len() {
                prop_assert_eq!(g.get(i, i), 0.0);
                for j in 0..g.len() {
                    prop_assert!((0.0..=1.0).contains(&g.get(i, j)));
                    prop_assert_eq!(g.get(i, j), g.get(j, i));
                }
            }
            prop_assert!(g.d_max() <= std::f64::consts::PI * EARTH_RADIUS_KM + 1e-6);
        }
    }
}
