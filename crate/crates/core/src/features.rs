//! Derived series, lagged learning pairs and night-value handling.
//!
//! Besides the observed power series `P`, two derived series enter the
//! candidate feature pool: a rolling maximum and a rolling mean over the
//! same clock slot of the last `window_days + 1` days. They smooth out
//! random effects while keeping systematic, repeating ones.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesFrame;
use crate::error::{Error, Result};
use crate::HouseholdId;

/// Which series a feature is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Power,
    RollingMax,
    RollingMean,
}

impl SeriesKind {
    pub fn label(&self) -> &'static str {
        match self {
            SeriesKind::Power => "p",
            SeriesKind::RollingMax => "p_max",
            SeriesKind::RollingMean => "p_mean",
        }
    }
}

/// One candidate input: a series and a lag in steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureId {
    pub kind: SeriesKind,
    pub lag: usize,
}

impl FeatureId {
    pub fn new(kind: SeriesKind, lag: usize) -> Self {
        FeatureId { kind, lag }
    }

    pub fn label(&self) -> String {
        format!("{}_lag{}", self.kind.label(), self.lag)
    }
}

/// Horizon, lag depth, periodicity and the selected features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSpec {
    /// Forecast horizon H in steps.
    pub horizon: usize,
    /// Maximal input lag H1 in steps.
    pub max_lag: usize,
    /// Steps per day (the series' periodicity).
    pub period: usize,
    /// Rolling window length in days minus one.
    pub window_days: usize,
    /// Features materialized by [`assemble`]; empty until selection ran.
    pub selected: Vec<FeatureId>,
}

impl FeatureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        if self.period == 0 {
            return Err(Error::InvalidParameter("period must be >= 1".into()));
        }
        for (i, f) in self.selected.iter().enumerate() {
            if f.lag > self.max_lag {
                return Err(Error::InvalidParameter(format!(
                    "feature {} exceeds max_lag {}",
                    f.label(),
                    self.max_lag
                )));
            }
            if self.selected[..i].contains(f) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate feature {}",
                    f.label()
                )));
            }
        }
        Ok(())
    }

    /// Minimum series length so each half of a split can form one pair.
    pub fn min_pair_span(&self) -> usize {
        self.horizon + self.max_lag + 1
    }
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            horizon: 96,
            max_lag: 96,
            period: 96,
            window_days: 7,
            selected: Vec::new(),
        }
    }
}

/// Every lag 0..=max_lag of the three series, in a fixed order.
///
/// The position in this vector is the candidate index used for ties in
/// feature selection.
pub fn candidate_pool(max_lag: usize) -> Vec<FeatureId> {
    let kinds = [
        SeriesKind::Power,
        SeriesKind::RollingMax,
        SeriesKind::RollingMean,
    ];
    let mut pool = Vec::with_capacity(3 * (max_lag + 1));
    for kind in kinds {
        for lag in 0..=max_lag {
            pool.push(FeatureId::new(kind, lag));
        }
    }
    pool
}

/// A derived series; indices below `first_valid` lack enough history.
#[derive(Debug, Clone)]
pub struct DerivedSeries {
    pub values: Vec<f64>,
    pub first_valid: usize,
}

impl DerivedSeries {
    pub fn get(&self, index: usize) -> Option<f64> {
        if index >= self.first_valid {
            Some(self.values[index])
        } else {
            None
        }
    }
}

/// `out[k] = max(P[k], P[k-period], ..., P[k-window_days*period])`.
pub fn rolling_max(frame: &TimeSeriesFrame, period: usize, window_days: usize) -> DerivedSeries {
    rolling(frame, period, window_days, |acc, v| acc.max(v))
}

/// Same window as [`rolling_max`] but with the arithmetic mean.
pub fn rolling_mean(frame: &TimeSeriesFrame, period: usize, window_days: usize) -> DerivedSeries {
    let n = (window_days + 1) as f64;
    let mut out = rolling(frame, period, window_days, |acc, v| acc + v);
    for v in &mut out.values {
        *v /= n;
    }
    out
}

fn rolling(
    frame: &TimeSeriesFrame,
    period: usize,
    window_days: usize,
    fold: impl Fn(f64, f64) -> f64,
) -> DerivedSeries {
    let p = frame.values();
    let first_valid = window_days * period;
    let mut values = vec![f64::NAN; p.len()];
    for k in first_valid..p.len() {
        let mut acc = p[k];
        for j in 1..=window_days {
            acc = fold(acc, p[k - j * period]);
        }
        values[k] = acc;
    }
    DerivedSeries {
        values,
        first_valid,
    }
}

/// Learning pairs for one household: rows of lagged inputs plus the
/// horizon-ahead target.
///
/// Row `n` has origin index `origins[n]` (0-based into the frame); its
/// inputs are lags of that origin, the target `y[n]` sits `horizon` steps
/// later.
#[derive(Debug, Clone)]
pub struct LearningSet {
    pub household: HouseholdId,
    pub x: Array2<f64>,
    pub y: Vec<f64>,
    pub features: Vec<FeatureId>,
    pub origins: Vec<usize>,
    /// Rows dropped because a derived-series lag had no history yet.
    pub dropped_unavailable: usize,
}

impl LearningSet {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Copy out the rows at `indices` (ascending order preserved).
    pub fn subset(&self, indices: &[usize]) -> LearningSet {
        let s = self.features.len();
        let mut x = Array2::zeros((indices.len(), s));
        let mut y = Vec::with_capacity(indices.len());
        let mut origins = Vec::with_capacity(indices.len());
        for (row, &i) in indices.iter().enumerate() {
            x.row_mut(row).assign(&self.x.row(i));
            y.push(self.y[i]);
            origins.push(self.origins[i]);
        }
        LearningSet {
            household: self.household.clone(),
            x,
            y,
            features: self.features.clone(),
            origins,
            dropped_unavailable: self.dropped_unavailable,
        }
    }
}

/// Per-household bundle of the power series and its rolling derivatives,
/// with helpers to materialize learning pairs.
pub struct FeatureBuilder<'a> {
    frame: &'a TimeSeriesFrame,
    spec: FeatureSpec,
    max_series: DerivedSeries,
    mean_series: DerivedSeries,
}

impl<'a> FeatureBuilder<'a> {
    pub fn new(frame: &'a TimeSeriesFrame, spec: &FeatureSpec) -> Result<Self> {
        spec.validate()?;
        Ok(FeatureBuilder {
            frame,
            spec: spec.clone(),
            max_series: rolling_max(frame, spec.period, spec.window_days),
            mean_series: rolling_mean(frame, spec.period, spec.window_days),
        })
    }

    pub fn frame(&self) -> &TimeSeriesFrame {
        self.frame
    }

    pub fn spec(&self) -> &FeatureSpec {
        &self.spec
    }

    fn feature_value(&self, feature: FeatureId, origin: usize) -> Option<f64> {
        let index = origin.checked_sub(feature.lag)?;
        match feature.kind {
            SeriesKind::Power => Some(self.frame.values()[index]),
            SeriesKind::RollingMax => self.max_series.get(index),
            SeriesKind::RollingMean => self.mean_series.get(index),
        }
    }

    /// All origins of the formalism's row range: `max_lag ..= K-1-horizon`.
    fn origin_range(&self) -> std::ops::Range<usize> {
        let k = self.frame.len();
        let hi = k.saturating_sub(self.spec.horizon);
        self.spec.max_lag.min(hi)..hi
    }

    /// Origins where every pool candidate (any lag of any series) exists.
    pub fn pool_origins(&self) -> Vec<usize> {
        let earliest = self.spec.max_lag + self.max_series.first_valid;
        self.origin_range().filter(|&k| k >= earliest).collect()
    }

    /// Materialize one candidate column over a fixed origin set.
    ///
    /// Callers must pass origins where the feature is available (e.g. from
    /// [`Self::pool_origins`]).
    pub fn column(&self, feature: FeatureId, origins: &[usize]) -> Vec<f64> {
        origins
            .iter()
            .map(|&k| {
                self.feature_value(feature, k)
                    .expect("feature unavailable at requested origin")
            })
            .collect()
    }

    /// Targets `P[origin + horizon]` over a fixed origin set.
    pub fn targets(&self, origins: &[usize]) -> Vec<f64> {
        origins
            .iter()
            .map(|&k| self.frame.values()[k + self.spec.horizon])
            .collect()
    }

    /// Assemble learning pairs for an explicit feature set, dropping rows
    /// where a derived lag has no history.
    pub fn assemble_with(&self, selected: &[FeatureId]) -> Result<LearningSet> {
        if selected.is_empty() {
            return Err(Error::InvalidParameter("no features selected".into()));
        }
        let s = selected.len();
        let mut flat = Vec::new();
        let mut y = Vec::new();
        let mut origins = Vec::new();
        let mut dropped = 0usize;
        let mut row = vec![0.0; s];
        for k in self.origin_range() {
            let mut available = true;
            for (slot, f) in selected.iter().enumerate() {
                match self.feature_value(*f, k) {
                    Some(v) => row[slot] = v,
                    None => {
                        available = false;
                        break;
                    }
                }
            }
            if !available {
                dropped += 1;
                continue;
            }
            flat.extend_from_slice(&row);
            y.push(self.frame.values()[k + self.spec.horizon]);
            origins.push(k);
        }
        if y.is_empty() {
            return Err(Error::EmptyLearningSet {
                household: self.frame.household().to_string(),
                reason: "no learning pairs after availability drops".into(),
            });
        }
        let x = Array2::from_shape_vec((y.len(), s), flat)
            .expect("row count and flat length agree");
        Ok(LearningSet {
            household: self.frame.household().clone(),
            x,
            y,
            features: selected.to_vec(),
            origins,
            dropped_unavailable: dropped,
        })
    }

    /// Assemble with the spec's selected features.
    pub fn assemble(&self) -> Result<LearningSet> {
        self.assemble_with(&self.spec.selected)
    }
}

/// Convenience wrapper matching the pipeline call shape.
pub fn assemble(frame: &TimeSeriesFrame, spec: &FeatureSpec) -> Result<LearningSet> {
    FeatureBuilder::new(frame, spec)?.assemble()
}

/// Night flags for a set of learning pairs.
#[derive(Debug, Clone)]
pub struct NightMask {
    pub flags: Vec<bool>,
    pub threshold: f64,
}

impl NightMask {
    pub fn night_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Row indices of the pairs kept for training and evaluation.
    pub fn day_indices(&self) -> Vec<usize> {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| !f)
            .map(|(i, _)| i)
            .collect()
    }
}

/// A pair targeting `origin + horizon` counts as night when the power one
/// and two periods before the target is at or below the threshold, i.e.
/// `P[origin] <= tau` and `P[origin - period] <= tau`.
pub fn is_night_origin(frame: &TimeSeriesFrame, origin: usize, period: usize, tau: f64) -> bool {
    if origin < period {
        return false; // cannot verify the earlier slot, treat as day
    }
    let p = frame.values();
    p[origin] <= tau && p[origin - period] <= tau
}

/// Classify every pair of a learning set as night or day.
pub fn night_mask(
    frame: &TimeSeriesFrame,
    set: &LearningSet,
    period: usize,
    tau: f64,
) -> NightMask {
    let flags = set
        .origins
        .iter()
        .map(|&k| is_night_origin(frame, k, period, tau))
        .collect();
    NightMask {
        flags,
        threshold: tau,
    }
}

/// Count how many night-flagged pairs really have a night target.
///
/// Returns `(flagged, flagged_with_target_at_or_below_tau)`.
pub fn night_accuracy(
    frame: &TimeSeriesFrame,
    origins: &[usize],
    horizon: usize,
    period: usize,
    tau: f64,
) -> (usize, usize) {
    let p = frame.values();
    let mut flagged = 0usize;
    let mut correct = 0usize;
    for &k in origins {
        if is_night_origin(frame, k, period, tau) {
            flagged += 1;
            if p[k + horizon] <= tau {
                correct += 1;
            }
        }
    }
    (flagged, correct)
}

/// Dump a learning set as CSV: `origin_k, x1..xS, y, is_night` with
/// 1-based origin indices.
pub fn write_learning_set_csv(
    set: &LearningSet,
    mask: &NightMask,
    path: impl AsRef<std::path::Path>,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec!["origin_k".to_string()];
    header.extend(set.features.iter().map(|f| f.label()));
    header.push("y".into());
    header.push("is_night".into());
    writer.write_record(&header)?;
    for (row, &origin) in set.origins.iter().enumerate() {
        let mut record = vec![(origin + 1).to_string()];
        record.extend(set.x.row(row).iter().map(|v| format!("{v}")));
        record.push(format!("{}", set.y[row]));
        record.push(if mask.flags[row] { "1" } else { "0" }.to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::dataset::HouseholdId;
    use chrono::NaiveDateTime;

    fn frame(values: Vec<f64>) -> TimeSeriesFrame {
        let start =
            NaiveDateTime::parse_from_str("2010-07-01T00:00:00", "%Y-%m-%dT%H:%M:%S").unwrap();
        TimeSeriesFrame::new(HouseholdId::new("h1"), start, 15, values).unwrap()
    }

    /// Series whose value at slot `k` is `per_day[day] `for day = k / period.
    fn daily_series(per_day: &[f64], period: usize) -> Vec<f64> {
        per_day
            .iter()
            .flat_map(|&v| std::iter::repeat(v).take(period))
            .collect()
    }

    #[test]
    fn rolling_max_takes_window_maximum() {
        // 7 days of 0.5 except one 0.7, short period to keep the test small.
        let mut per_day = vec![0.5; 8];
        per_day[3] = 0.7;
        let f = frame(daily_series(&per_day, 4));
        let out = rolling_max(&f, 4, 7);
        assert_eq!(out.first_valid, 28);
        assert_eq!(out.get(28), Some(0.7));
        assert_eq!(out.get(27), None);
    }

    #[test]
    fn rolling_max_of_constant_window_is_identity() {
        let f = frame(daily_series(&[0.3; 8], 4));
        let out = rolling_max(&f, 4, 7);
        assert_eq!(out.get(28), Some(0.3));
    }

    #[test]
    fn rolling_stats_match_enumeration() {
        // Eight daily samples 0, 0.1, ..., 0.7: direct enumeration gives
        // max 0.7 and mean 0.35.
        let per_day: Vec<f64> = (0..8).map(|i| i as f64 * 0.1).collect();
        let f = frame(daily_series(&per_day, 4));
        let max = rolling_max(&f, 4, 7);
        let mean = rolling_mean(&f, 4, 7);
        assert_abs_diff_eq!(max.get(28).unwrap(), 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(mean.get(28).unwrap(), 0.35, epsilon = 1e-12);
    }

    #[test]
    fn rolling_mean_of_alternating_days() {
        let per_day = [0.0, 0.8, 0.0, 0.8, 0.0, 0.8, 0.0, 0.8];
        let f = frame(daily_series(&per_day, 4));
        let mean = rolling_mean(&f, 4, 7);
        assert_abs_diff_eq!(mean.get(28).unwrap(), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn rolling_max_dominates_mean_and_power() {
        let values: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64 / 11.0).collect();
        let f = frame(values.clone());
        let max = rolling_max(&f, 4, 7);
        let mean = rolling_mean(&f, 4, 7);
        for k in max.first_valid..values.len() {
            let mx = max.get(k).unwrap();
            let mn = mean.get(k).unwrap();
            assert!(mx >= mn && mn >= 0.0);
            assert!(mx >= values[k]);
        }
    }

    fn spec(horizon: usize, max_lag: usize, selected: Vec<FeatureId>) -> FeatureSpec {
        FeatureSpec {
            horizon,
            max_lag,
            period: 96,
            window_days: 7,
            selected,
        }
    }

    #[test]
    fn assemble_row_count_before_drops() {
        // K=300, H=H1=96 -> 108 rows when only power lags are used.
        let values: Vec<f64> = (0..300).map(|i| (i % 97) as f64 / 96.0).collect();
        let f = frame(values);
        let set = assemble(
            &f,
            &spec(96, 96, vec![FeatureId::new(SeriesKind::Power, 0)]),
        )
        .unwrap();
        assert_eq!(set.len(), 108);
        assert_eq!(set.dropped_unavailable, 0);
    }

    #[test]
    fn assemble_lag_zero_matches_power_column() {
        let values: Vec<f64> = (0..300).map(|i| (i as f64).sin().abs()).collect();
        let f = frame(values.clone());
        let set = assemble(
            &f,
            &spec(96, 96, vec![FeatureId::new(SeriesKind::Power, 0)]),
        )
        .unwrap();
        for (row, &k) in set.origins.iter().enumerate() {
            assert_eq!(set.x[[row, 0]], values[k]);
            assert_eq!(set.y[row], values[k + 96]);
        }
        assert_eq!(set.origins[0], 96);
    }

    #[test]
    fn assemble_constant_series_propagates() {
        let f = frame(vec![0.5; 1200]);
        let set = assemble(
            &f,
            &spec(
                96,
                96,
                vec![
                    FeatureId::new(SeriesKind::Power, 3),
                    FeatureId::new(SeriesKind::RollingMax, 0),
                    FeatureId::new(SeriesKind::RollingMean, 1),
                ],
            ),
        )
        .unwrap();
        assert!(set.x.iter().all(|&v| v == 0.5));
        assert!(set.y.iter().all(|&v| v == 0.5));
        // Derived lags need a full window of history first.
        assert!(set.dropped_unavailable > 0);
    }

    #[test]
    fn assemble_is_deterministic() {
        let values: Vec<f64> = (0..1200).map(|i| ((i * 31) % 101) as f64 / 100.0).collect();
        let f = frame(values);
        let s = spec(
            96,
            96,
            vec![
                FeatureId::new(SeriesKind::Power, 5),
                FeatureId::new(SeriesKind::RollingMean, 96),
            ],
        );
        let a = assemble(&f, &s).unwrap();
        let b = assemble(&f, &s).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        assert_eq!(a.origins, b.origins);
    }

    #[test]
    fn assemble_rejects_too_short_series() {
        let f = frame(vec![0.1; 10]);
        let err = assemble(
            &f,
            &spec(96, 96, vec![FeatureId::new(SeriesKind::Power, 0)]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyLearningSet { .. }));
    }

    #[test]
    fn night_rule_examples() {
        let tau = 0.0001;
        // Build a frame where origin 96 probes indices 96 and 0.
        let mut values = vec![0.4; 300];
        values[0] = 0.0;
        values[96] = 0.0;
        let f = frame(values.clone());
        assert!(is_night_origin(&f, 96, 96, tau));

        values[0] = 0.0001;
        values[96] = 0.00005;
        let f = frame(values.clone());
        assert!(is_night_origin(&f, 96, 96, tau), "boundary is inclusive");

        values[0] = 0.0;
        values[96] = 0.2;
        let f = frame(values);
        assert!(!is_night_origin(&f, 96, 96, tau), "conjunction must fail");
    }

    #[test]
    fn night_mask_aligns_with_learning_set() {
        let mut values = vec![0.3; 400];
        for day_start in (0..400).step_by(96) {
            for o in 0..20 {
                if day_start + o < 400 {
                    values[day_start + o] = 0.0;
                }
            }
        }
        let f = frame(values);
        let set = assemble(
            &f,
            &spec(96, 96, vec![FeatureId::new(SeriesKind::Power, 0)]),
        )
        .unwrap();
        let mask = night_mask(&f, &set, 96, 0.0001);
        assert_eq!(mask.flags.len(), set.len());
        assert!(mask.night_count() > 0);
        assert_eq!(
            mask.day_indices().len() + mask.night_count(),
            set.len()
        );
        for (row, &origin) in set.origins.iter().enumerate() {
            assert_eq!(mask.flags[row], is_night_origin(&f, origin, 96, 0.0001));
        }
    }

    #[test]
    fn pool_origins_require_full_history() {
        let f = frame(vec![0.2; 1200]);
        let s = spec(96, 96, vec![]);
        let builder = FeatureBuilder::new(&f, &s).unwrap();
        let origins = builder.pool_origins();
        // max_lag + window_days * period = 96 + 672.
        assert_eq!(origins[0], 768);
        assert_eq!(*origins.last().unwrap(), 1200 - 96 - 1);
    }

    #[test]
    fn candidate_pool_size_and_order() {
        let pool = candidate_pool(96);
        assert_eq!(pool.len(), 291);
        assert_eq!(pool[0], FeatureId::new(SeriesKind::Power, 0));
        assert_eq!(pool[97], FeatureId::new(SeriesKind::RollingMax, 0));
        assert_eq!(pool[290], FeatureId::new(SeriesKind::RollingMean, 96));
    }

    #[test]
    fn subset_keeps_requested_rows() {
        let values: Vec<f64> = (0..400).map(|i| (i % 50) as f64 / 50.0).collect();
        let f = frame(values);
        let set = assemble(
            &f,
            &spec(96, 96, vec![FeatureId::new(SeriesKind::Power, 2)]),
        )
        .unwrap();
        let sub = set.subset(&[0, 5, 7]);
        assert_eq!(sub.len(), 3);
        assert_eq!(sub.y[1], set.y[5]);
        assert_eq!(sub.origins[2], set.origins[7]);
        assert_eq!(sub.x[[1, 0]], set.x[[5, 0]]);
    }
}
