//! Weighted nearest-neighbor search and the quantile target transformation.
//!
//! Each training target is replaced by an interpolated empirical quantile
//! of its nearest neighbors' targets. Any mean-regression technique
//! trained on the transformed targets then approximates the conditional
//! quantile instead of the conditional mean.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Regularizer applied to per-feature variances so constant columns do
/// not produce infinite weights.
pub const VARIANCE_EPSILON: f64 = 1e-12;

/// Inverse-variance weights for the weighted Euclidean distance.
#[derive(Debug, Clone)]
pub struct DistanceWeights {
    pub weights: Vec<f64>,
    pub epsilon: f64,
}

/// `w_s = 1 / max(var(X[:, s]), epsilon)` with the population variance.
pub fn compute_weights(x: &ArrayView2<f64>, epsilon: f64) -> Result<DistanceWeights> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "variance weights need at least two rows".into(),
        ));
    }
    let weights = x
        .columns()
        .into_iter()
        .map(|col| {
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            1.0 / var.max(epsilon)
        })
        .collect();
    Ok(DistanceWeights { weights, epsilon })
}

/// For every row: its `k` nearest rows (itself included, `d_ii = 0`) and
/// their distances, ascending. Ties break toward the lower row index.
#[derive(Debug, Clone)]
pub struct NeighborTable {
    n: usize,
    k: usize,
    indices: Vec<u32>,
    distances: Vec<f64>,
}

impl NeighborTable {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, row: usize) -> &[u32] {
        &self.indices[row * self.k..(row + 1) * self.k]
    }

    pub fn distances(&self, row: usize) -> &[f64] {
        &self.distances[row * self.k..(row + 1) * self.k]
    }

    /// Keep only the `k` nearest entries per row. Because rows are sorted
    /// by (distance, index), the prefix is exactly the smaller table.
    pub fn truncated(&self, k: usize) -> Result<NeighborTable> {
        if k == 0 || k > self.k {
            return Err(Error::KnnCount { k, rows: self.k });
        }
        let mut indices = Vec::with_capacity(self.n * k);
        let mut distances = Vec::with_capacity(self.n * k);
        for row in 0..self.n {
            indices.extend_from_slice(&self.neighbors(row)[..k]);
            distances.extend_from_slice(&self.distances(row)[..k]);
        }
        Ok(NeighborTable {
            n: self.n,
            k,
            indices,
            distances,
        })
    }
}

#[derive(PartialEq)]
struct Candidate {
    d2: f64,
    idx: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact k-nearest-neighbor search under the weighted Euclidean distance
/// `d_ij = sqrt(sum_s w_s (x_is - x_js)^2)`, brute force over all pairs.
/// Every row counts itself among its neighbors (`d_ii = 0`).
pub fn pairwise_neighbors(
    x: &ArrayView2<f64>,
    weights: &DistanceWeights,
    k: usize,
) -> Result<NeighborTable> {
    pairwise_neighbors_opts(x, weights, k, true)
}

/// [`pairwise_neighbors`] with the self-inclusion rule made explicit;
/// `include_self = false` drops each row from its own candidate set.
pub fn pairwise_neighbors_opts(
    x: &ArrayView2<f64>,
    weights: &DistanceWeights,
    k: usize,
    include_self: bool,
) -> Result<NeighborTable> {
    let n = x.nrows();
    let s = x.ncols();
    let available = if include_self { n } else { n.saturating_sub(1) };
    if k == 0 || k > available {
        return Err(Error::KnnCount { k, rows: available });
    }
    if weights.weights.len() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            actual: weights.weights.len(),
        });
    }
    // Contiguous row-major copy keeps the inner loop cache-friendly.
    let data: Vec<f64> = x.iter().cloned().collect();
    let w = &weights.weights;

    let rows: Vec<(Vec<u32>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &data[i * s..(i + 1) * s];
            let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
            for j in 0..n {
                if !include_self && j == i {
                    continue;
                }
                let xj = &data[j * s..(j + 1) * s];
                let mut d2 = 0.0;
                for t in 0..s {
                    let diff = xi[t] - xj[t];
                    d2 += w[t] * diff * diff;
                }
                let cand = Candidate { d2, idx: j as u32 };
                if heap.len() < k {
                    heap.push(cand);
                } else if cand < *heap.peek().expect("heap is non-empty") {
                    heap.pop();
                    heap.push(cand);
                }
            }
            let sorted = heap.into_sorted_vec();
            let idx: Vec<u32> = sorted.iter().map(|c| c.idx).collect();
            let dist: Vec<f64> = sorted.iter().map(|c| c.d2.sqrt()).collect();
            (idx, dist)
        })
        .collect();

    let mut indices = Vec::with_capacity(n * k);
    let mut distances = Vec::with_capacity(n * k);
    for (idx, dist) in rows {
        indices.extend(idx);
        distances.extend(dist);
    }
    Ok(NeighborTable {
        n,
        k,
        indices,
        distances,
    })
}

/// Interpolated empirical quantile of an ascending sample.
///
/// The j-th of k sorted values (1-based) carries plotting position
/// `(j - 0.5) / k`; levels between positions interpolate linearly and
/// levels outside clamp to the extreme order statistics.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptyInput("sorted output set"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!(
            "quantile level {q} outside [0, 1]"
        )));
    }
    let k = sorted.len();
    let h = q * k as f64 - 0.5;
    if h <= 0.0 {
        return Ok(sorted[0]);
    }
    if h >= (k - 1) as f64 {
        return Ok(sorted[k - 1]);
    }
    let j = h.floor() as usize;
    let g = h - j as f64;
    Ok(sorted[j] + g * (sorted[j + 1] - sorted[j]))
}

/// The default level grid 0.01, 0.02, ..., 0.99.
pub fn default_quantile_grid() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

/// Per-level replacement target vectors produced by the transformation.
#[derive(Debug, Clone)]
pub struct TransformedTargets {
    pub levels: Vec<f64>,
    /// Shape (levels, rows): `per_level[[qi, n]]` is the level-qi target
    /// for training row n.
    pub per_level: Array2<f64>,
    pub k_nn: usize,
}

impl TransformedTargets {
    pub fn num_rows(&self) -> usize {
        self.per_level.ncols()
    }

    pub fn level_targets(&self, level_index: usize) -> ArrayView1<'_, f64> {
        self.per_level.row(level_index)
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("quantile grid"));
    }
    for pair in grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidParameter(
                "quantile grid must be strictly increasing".into(),
            ));
        }
    }
    if grid[0] <= 0.0 || *grid.last().expect("non-empty") >= 1.0 {
        return Err(Error::InvalidParameter(
            "quantile levels must lie strictly inside (0, 1)".into(),
        ));
    }
    Ok(())
}

/// Replace every row's target with the empirical quantiles of its
/// neighbors' targets, one output vector per grid level. The original
/// targets are left untouched.
pub fn transform_targets(
    y: &[f64],
    table: &NeighborTable,
    grid: &[f64],
) -> Result<TransformedTargets> {
    validate_grid(grid)?;
    if table.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            actual: table.len(),
        });
    }
    let n = y.len();
    let q = grid.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut outputs: Vec<f64> = table
                .neighbors(i)
                .iter()
                .map(|&j| y[j as usize])
                .collect();
            outputs.sort_unstable_by(f64::total_cmp);
            grid.iter()
                .map(|&level| {
                    empirical_quantile(&outputs, level).expect("validated grid and k >= 1")
                })
                .collect()
        })
        .collect();

    let mut per_level = Array2::zeros((q, n));
    for (col, row_vals) in rows.iter().enumerate() {
        for (qi, &v) in row_vals.iter().enumerate() {
            per_level[[qi, col]] = v;
        }
    }
    Ok(TransformedTargets {
        levels: grid.to_vec(),
        per_level,
        k_nn: table.k(),
    })
}

/// Audit dump: one record per (row, level) as `row, q, value` with 1-based
/// row numbers.
pub fn write_transformed_targets_csv(
    targets: &TransformedTargets,
    path: impl AsRef<std::path::Path>,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(["row", "q", "value"])?;
    for (qi, &level) in targets.levels.iter().enumerate() {
        for (n, v) in targets.per_level.row(qi).iter().enumerate() {
            writer.write_record([
                (n + 1).to_string(),
                format!("{level}"),
                format!("{v}"),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}
