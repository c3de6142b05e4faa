//! Ingestion, normalization and splitting of household power series.
//!
//! Raw delimiter-separated files are re-indexed onto a uniform time grid,
//! one frame per household. Downstream code only ever sees frames whose
//! samples are equally spaced and gap-free.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque household identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HouseholdId(pub String);

impl HouseholdId {
    pub fn new(id: impl Into<String>) -> Self {
        HouseholdId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for HouseholdId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for HouseholdId {
    fn from(s: &str) -> Self {
        HouseholdId(s.to_string())
    }
}

/// A regularly sampled power series for one household.
///
/// Values are dimensionless once [`normalize`] has run; `scale` converts
/// back to raw units (`raw = value * scale`). Frames are immutable after
/// construction and cheap to share across threads.
#[derive(Debug, Clone)]
pub struct TimeSeriesFrame {
    household: HouseholdId,
    start: NaiveDateTime,
    resolution_minutes: u32,
    values: Vec<f64>,
    scale: f64,
    exogenous: Vec<(String, Vec<f64>)>,
}

impl TimeSeriesFrame {
    pub fn new(
        household: HouseholdId,
        start: NaiveDateTime,
        resolution_minutes: u32,
        values: Vec<f64>,
    ) -> Result<Self> {
        if resolution_minutes == 0 {
            return Err(Error::InvalidParameter(
                "resolution must be at least one minute".into(),
            ));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Ingest {
                line: 0,
                household: Some(household.0.clone()),
                reason: format!("non-finite value at index {}", idx + 1),
            });
        }
        Ok(TimeSeriesFrame {
            household,
            start,
            resolution_minutes,
            values,
            scale: 1.0,
            exogenous: Vec::new(),
        })
    }

    /// Attach a named exogenous channel aligned to the power series.
    pub fn with_exogenous(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                actual: values.len(),
            });
        }
        self.exogenous.push((name.into(), values));
        Ok(self)
    }

    pub fn household(&self) -> &HouseholdId {
        &self.household
    }

    /// Number of samples K.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Factor converting stored values back to raw units.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn resolution_minutes(&self) -> u32 {
        self.resolution_minutes
    }

    /// Timestamp of the 0-based sample index.
    pub fn timestamp(&self, index: usize) -> NaiveDateTime {
        self.start + Duration::minutes(self.resolution_minutes as i64 * index as i64)
    }

    pub fn exogenous(&self) -> &[(String, Vec<f64>)] {
        &self.exogenous
    }

    /// Values converted back to raw units.
    pub fn denormalized(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * self.scale).collect()
    }

    fn with_parts(&self, start: NaiveDateTime, values: Vec<f64>) -> TimeSeriesFrame {
        TimeSeriesFrame {
            household: self.household.clone(),
            start,
            resolution_minutes: self.resolution_minutes,
            values,
            scale: self.scale,
            exogenous: Vec::new(),
        }
    }
}

/// Scale a frame so its values lie in [0, 1].
///
/// The denominator is the household's maximum over the whole series; it is
/// folded into `scale` so raw units can be recovered. An all-zero series
/// passes through unchanged. Idempotent.
pub fn normalize(frame: &TimeSeriesFrame) -> Result<TimeSeriesFrame> {
    if let Some(idx) = frame.values.iter().position(|&v| v < 0.0) {
        return Err(Error::NegativeValue {
            household: frame.household.0.clone(),
            index: idx + 1,
            value: frame.values[idx],
        });
    }
    let max = frame.values.iter().cloned().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return Ok(frame.clone());
    }
    let mut out = frame.clone();
    out.values.iter_mut().for_each(|v| *v /= max);
    out.scale = frame.scale * max;
    out.exogenous = frame.exogenous.clone();
    Ok(out)
}

/// Split position and validity requirements for train/test partitioning.
#[derive(Debug, Clone)]
pub struct SplitSpec {
    /// Fraction of samples assigned to the leading (training) half.
    pub train_fraction: f64,
    /// Minimum length of each half so at least one learning pair fits
    /// (horizon + maximum lag + 1).
    pub min_half: usize,
}

impl SplitSpec {
    pub fn new(train_fraction: f64) -> Self {
        SplitSpec {
            train_fraction,
            min_half: 1,
        }
    }

    pub fn with_min_half(mut self, min_half: usize) -> Self {
        self.min_half = min_half.max(1);
        self
    }

    /// 0-based index of the first test sample.
    pub fn boundary_index(&self, len: usize) -> usize {
        (len as f64 * self.train_fraction).floor() as usize
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::new(0.5)
    }
}

/// Partition a frame into contiguous, ordered train and test halves.
pub fn split(
    frame: &TimeSeriesFrame,
    spec: &SplitSpec,
) -> Result<(TimeSeriesFrame, TimeSeriesFrame)> {
    if !(0.0..=1.0).contains(&spec.train_fraction) {
        return Err(Error::InvalidParameter(format!(
            "train_fraction {} outside [0, 1]",
            spec.train_fraction
        )));
    }
    let k = frame.len();
    let boundary = spec.boundary_index(k);
    if boundary < spec.min_half || k - boundary < spec.min_half {
        return Err(Error::SeriesTooShort {
            len: k,
            required: 2 * spec.min_half,
        });
    }
    let train = frame.with_parts(frame.start, frame.values[..boundary].to_vec());
    let test = frame.with_parts(frame.timestamp(boundary), frame.values[boundary..].to_vec());
    Ok((train, test))
}

/// Column layout of the source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// One value column per household.
    Wide,
    /// Rows of (timestamp, household, value).
    Long,
}

/// Column mapping for [`ingest`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestSchema {
    pub layout: Layout,
    pub timestamp_column: String,
    /// Household column name (long layout only).
    pub household_column: String,
    /// Value column name (long layout only).
    pub value_column: String,
    /// Gaps up to this many missing steps are filled by linear
    /// interpolation; longer gaps abort ingestion.
    pub max_gap_steps: usize,
}

impl Default for IngestSchema {
    fn default() -> Self {
        IngestSchema {
            layout: Layout::Wide,
            timestamp_column: "timestamp".into(),
            household_column: "household".into(),
            value_column: "value".into(),
            max_gap_steps: 4,
        }
    }
}

fn parse_timestamp(s: &str, line: usize) -> Result<NaiveDateTime> {
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
        "%Y-%m-%dT%H:%M",
    ];
    for fmt in FORMATS {
        if let Ok(ts) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(ts);
        }
    }
    Err(Error::Ingest {
        line,
        household: None,
        reason: format!("unparsable timestamp {s:?}"),
    })
}

fn parse_value(s: &str, line: usize, household: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Ingest {
        line,
        household: Some(household.to_string()),
        reason: format!("unparsable number {s:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Ingest {
            line,
            household: Some(household.to_string()),
            reason: format!("non-finite value {s:?}"),
        });
    }
    Ok(v)
}

/// One observed sample before re-gridding: (grid slot, value, source line).
type Observation = (i64, f64, usize);

/// Read a delimiter-separated file and return one frame per household.
///
/// Timestamps must land exactly on the `resolution_minutes` grid and be
/// strictly increasing per household; duplicates are rejected. Missing
/// slots inside a household's span are treated by the schema's gap policy.
pub fn ingest(
    path: impl AsRef<Path>,
    schema: &IngestSchema,
    resolution_minutes: u32,
) -> Result<Vec<TimeSeriesFrame>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let ts_col = find(&schema.timestamp_column).ok_or_else(|| Error::Ingest {
        line: 1,
        household: None,
        reason: format!("missing timestamp column {:?}", schema.timestamp_column),
    })?;

    // Per household: anchor timestamp of slot 0 plus sparse observations.
    let mut anchors: BTreeMap<String, NaiveDateTime> = BTreeMap::new();
    let mut series: BTreeMap<String, Vec<Observation>> = BTreeMap::new();
    let step = resolution_minutes as i64;

    let mut push = |household: &str,
                    ts: NaiveDateTime,
                    value: f64,
                    line: usize|
     -> Result<()> {
        let anchor = *anchors.entry(household.to_string()).or_insert(ts);
        let offset = (ts - anchor).num_minutes();
        if offset % step != 0 {
            return Err(Error::Ingest {
                line,
                household: Some(household.to_string()),
                reason: format!("timestamp {ts} is off the {resolution_minutes}-minute grid"),
            });
        }
        let slot = offset / step;
        let obs = series.entry(household.to_string()).or_default();
        if let Some(&(last_slot, _, _)) = obs.last() {
            if slot == last_slot {
                return Err(Error::Ingest {
                    line,
                    household: Some(household.to_string()),
                    reason: format!("duplicate timestamp {ts}"),
                });
            }
            if slot < last_slot {
                return Err(Error::Ingest {
                    line,
                    household: Some(household.to_string()),
                    reason: format!("non-monotone timestamp {ts}"),
                });
            }
        }
        obs.push((slot, value, line));
        Ok(())
    };

    match schema.layout {
        Layout::Wide => {
            let mut household_cols = Vec::new();
            for (idx, name) in headers.iter().enumerate() {
                if idx == ts_col {
                    continue;
                }
                if household_cols.iter().any(|(_, n): &(usize, String)| n == name) {
                    return Err(Error::Ingest {
                        line: 1,
                        household: Some(name.to_string()),
                        reason: "duplicate household column".into(),
                    });
                }
                household_cols.push((idx, name.to_string()));
            }
            if household_cols.is_empty() {
                return Err(Error::Ingest {
                    line: 1,
                    household: None,
                    reason: "wide layout requires at least one value column".into(),
                });
            }
            for (row_idx, record) in reader.records().enumerate() {
                let line = row_idx + 2;
                let record = record?;
                let ts_field = record.get(ts_col).unwrap_or("").trim();
                if ts_field.is_empty() {
                    return Err(Error::Ingest {
                        line,
                        household: None,
                        reason: "missing timestamp".into(),
                    });
                }
                let ts = parse_timestamp(ts_field, line)?;
                for (col, household) in &household_cols {
                    let cell = record.get(*col).unwrap_or("").trim();
                    if cell.is_empty() {
                        continue; // missing sample, handled by the gap policy
                    }
                    let value = parse_value(cell, line, household)?;
                    push(household, ts, value, line)?;
                }
            }
        }
        Layout::Long => {
            let hh_col = find(&schema.household_column).ok_or_else(|| Error::Ingest {
                line: 1,
                household: None,
                reason: format!("missing household column {:?}", schema.household_column),
            })?;
            let val_col = find(&schema.value_column).ok_or_else(|| Error::Ingest {
                line: 1,
                household: None,
                reason: format!("missing value column {:?}", schema.value_column),
            })?;
            for (row_idx, record) in reader.records().enumerate() {
                let line = row_idx + 2;
                let record = record?;
                let ts_field = record.get(ts_col).unwrap_or("").trim();
                if ts_field.is_empty() {
                    return Err(Error::Ingest {
                        line,
                        household: None,
                        reason: "missing timestamp".into(),
                    });
                }
                let ts = parse_timestamp(ts_field, line)?;
                let household = record.get(hh_col).unwrap_or("").trim().to_string();
                if household.is_empty() {
                    return Err(Error::Ingest {
                        line,
                        household: None,
                        reason: "missing household identifier".into(),
                    });
                }
                let cell = record.get(val_col).unwrap_or("").trim();
                if cell.is_empty() {
                    continue;
                }
                let value = parse_value(cell, line, &household)?;
                push(&household, ts, value, line)?;
            }
        }
    }

    let mut frames = Vec::with_capacity(series.len());
    for (household, obs) in series {
        let anchor = anchors[&household];
        let frame = regrid(&household, anchor, step, &obs, schema.max_gap_steps)?;
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(Error::Ingest {
            line: 0,
            household: None,
            reason: "no data rows".into(),
        });
    }
    Ok(frames)
}

/// Expand sparse observations to a dense grid, interpolating short gaps.
fn regrid(
    household: &str,
    anchor: NaiveDateTime,
    step_minutes: i64,
    obs: &[Observation],
    max_gap_steps: usize,
) -> Result<TimeSeriesFrame> {
    let (first_slot, _, _) = obs[0];
    let (last_slot, _, _) = obs[obs.len() - 1];
    let len = (last_slot - first_slot + 1) as usize;
    let mut values = vec![f64::NAN; len];
    for window in obs.windows(2) {
        let (s0, v0, _) = window[0];
        let (s1, v1, line) = window[1];
        let gap = (s1 - s0 - 1) as usize;
        if gap > max_gap_steps {
            let gap_start = anchor + Duration::minutes(step_minutes * (s0 + 1));
            return Err(Error::Ingest {
                line,
                household: Some(household.to_string()),
                reason: format!(
                    "gap of {gap} steps starting at {gap_start} exceeds the limit of {max_gap_steps}"
                ),
            });
        }
        // Linear interpolation across the (possibly empty) gap.
        for g in 1..=gap {
            let t = g as f64 / (gap as f64 + 1.0);
            values[(s0 - first_slot) as usize + g] = v0 + t * (v1 - v0);
        }
    }
    for &(slot, value, _) in obs {
        values[(slot - first_slot) as usize] = value;
    }
    let start = anchor + Duration::minutes(step_minutes * first_slot);
    TimeSeriesFrame::new(
        HouseholdId::new(household),
        start,
        step_minutes as u32,
        values,
    )
}

/// Frame metadata stored next to the values cache.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameMeta {
    pub household: String,
    pub start: String,
    pub resolution_minutes: u32,
    pub scale: f64,
    pub len: usize,
}

const META_TIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// Write frames to a values CSV (household, k, value) plus a JSON sidecar
/// carrying start/scale metadata. `k` is 1-based.
pub fn write_frame_cache(
    frames: &[TimeSeriesFrame],
    values_path: impl AsRef<Path>,
    meta_path: impl AsRef<Path>,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(values_path.as_ref())?;
    writer.write_record(["household", "k", "value"])?;
    let mut metas = Vec::with_capacity(frames.len());
    for frame in frames {
        for (i, v) in frame.values.iter().enumerate() {
            writer.write_record([
                frame.household.as_str(),
                &(i + 1).to_string(),
                &format!("{v}"),
            ])?;
        }
        metas.push(FrameMeta {
            household: frame.household.0.clone(),
            start: frame.start.format(META_TIME_FORMAT).to_string(),
            resolution_minutes: frame.resolution_minutes,
            scale: frame.scale,
            len: frame.len(),
        });
    }
    writer.flush()?;
    let json = serde_json::to_string_pretty(&metas)?;
    std::fs::write(meta_path.as_ref(), json)?;
    Ok(())
}

/// Read frames back from the cache written by [`write_frame_cache`].
pub fn read_frame_cache(
    values_path: impl AsRef<Path>,
    meta_path: impl AsRef<Path>,
) -> Result<Vec<TimeSeriesFrame>> {
    let metas: Vec<FrameMeta> = serde_json::from_str(&std::fs::read_to_string(meta_path)?)?;
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut reader = csv::Reader::from_path(values_path.as_ref())?;
    for record in reader.records() {
        let record = record?;
        let household = record.get(0).unwrap_or("").to_string();
        let value: f64 = record
            .get(2)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::Ingest {
                line: 0,
                household: Some(household.clone()),
                reason: "corrupt frame cache".into(),
            })?;
        values.entry(household).or_default().push(value);
    }
    let mut frames = Vec::with_capacity(metas.len());
    for meta in metas {
        let vals = values.remove(&meta.household).ok_or_else(|| Error::Ingest {
            line: 0,
            household: Some(meta.household.clone()),
            reason: "frame cache is missing values for this household".into(),
        })?;
        if vals.len() != meta.len {
            return Err(Error::Ingest {
                line: 0,
                household: Some(meta.household.clone()),
                reason: format!(
                    "frame cache has {} values, metadata says {}",
                    vals.len(),
                    meta.len
                ),
            });
        }
        let start =
            NaiveDateTime::parse_from_str(&meta.start, META_TIME_FORMAT).map_err(|e| {
                Error::Ingest {
                    line: 0,
                    household: Some(meta.household.clone()),
                    reason: format!("corrupt start timestamp: {e}"),
                }
            })?;
        let mut frame = TimeSeriesFrame::new(
            HouseholdId::new(meta.household),
            start,
            meta.resolution_minutes,
            vals,
        )?;
        frame.scale = meta.scale;
        frames.push(frame);
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::io::Write;

    fn frame(values: Vec<f64>) -> TimeSeriesFrame {
        let start = NaiveDateTime::parse_from_str("2010-07-01T00:00:00", META_TIME_FORMAT).unwrap();
        TimeSeriesFrame::new(HouseholdId::new("h1"), start, 15, values).unwrap()
    }

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn wide_csv(rows: usize, households: &[&str]) -> String {
        let mut out = String::from("timestamp");
        for h in households {
            out.push(',');
            out.push_str(h);
        }
        out.push('\n');
        let start = NaiveDateTime::parse_from_str("2010-07-01T00:00:00", META_TIME_FORMAT).unwrap();
        for i in 0..rows {
            let ts = start + Duration::minutes(15 * i as i64);
            out.push_str(&ts.format(META_TIME_FORMAT).to_string());
            for (j, _) in households.iter().enumerate() {
                out.push_str(&format!(",{}", (i + j) as f64 * 0.01));
            }
            out.push('\n');
        }
        out
    }

    #[test]
    fn ingest_wide_two_households() {
        let file = write_csv(&wide_csv(96, &["a", "b"]));
        let frames = ingest(file.path(), &IngestSchema::default(), 15).unwrap();
        assert_eq!(frames.len(), 2);
        assert!(frames.iter().all(|f| f.len() == 96));
        assert_eq!(frames[0].household().as_str(), "a");
    }

    #[test]
    fn ingest_three_days_gives_288_samples() {
        let file = write_csv(&wide_csv(288, &["a"]));
        let frames = ingest(file.path(), &IngestSchema::default(), 15).unwrap();
        assert_eq!(frames[0].len(), 288);
    }

    #[test]
    fn ingest_rejects_duplicate_timestamp() {
        let csv = "timestamp,a\n\
                   2010-07-01T00:00:00,0.1\n\
                   2010-07-01T00:15:00,0.2\n\
                   2010-07-01T00:15:00,0.3\n";
        let file = write_csv(csv);
        let err = ingest(file.path(), &IngestSchema::default(), 15).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("duplicate timestamp"), "{msg}");
        assert!(msg.contains("2010-07-01 00:15:00"), "{msg}");
    }

    #[test]
    fn ingest_rejects_non_monotone_timestamp() {
        let csv = "timestamp,a\n\
                   2010-07-01T00:30:00,0.1\n\
                   2010-07-01T00:15:00,0.2\n";
        let file = write_csv(csv);
        let err = ingest(file.path(), &IngestSchema::default(), 15).unwrap_err();
        assert!(err.to_string().contains("non-monotone"), "{err}");
    }

    #[test]
    fn ingest_rejects_missing_timestamp() {
        let csv = "timestamp,a\n,0.1\n";
        let file = write_csv(csv);
        let err = ingest(file.path(), &IngestSchema::default(), 15).unwrap_err();
        assert!(err.to_string().contains("missing timestamp"), "{err}");
    }

    #[test]
    fn ingest_rejects_unparsable_number() {
        let csv = "timestamp,a\n2010-07-01T00:00:00,abc\n";
        let file = write_csv(csv);
        let err = ingest(file.path(), &IngestSchema::default(), 15).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unparsable number"), "{msg}");
        assert!(msg.contains("household a"), "{msg}");
    }

    #[test]
    fn ingest_fills_short_gaps_linearly() {
        let csv = "timestamp,a\n\
                   2010-07-01T00:00:00,0.0\n\
                   2010-07-01T00:45:00,0.3\n";
        let file = write_csv(csv);
        let frames = ingest(file.path(), &IngestSchema::default(), 15).unwrap();
        let vals = frames[0].values();
        assert_eq!(vals.len(), 4);
        assert_abs_diff_eq!(vals[1], 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[2], 0.2, epsilon = 1e-12);
    }

    #[test]
    fn ingest_rejects_long_gaps() {
        let mut schema = IngestSchema::default();
        schema.max_gap_steps = 1;
        let csv = "timestamp,a\n\
                   2010-07-01T00:00:00,0.0\n\
                   2010-07-01T00:45:00,0.3\n";
        let file = write_csv(csv);
        let err = ingest(file.path(), &schema, 15).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gap of 2 steps"), "{msg}");
        assert!(msg.contains("household a"), "{msg}");
    }

    #[test]
    fn ingest_long_layout() {
        let csv = "timestamp,household,value\n\
                   2010-07-01T00:00:00,a,0.1\n\
                   2010-07-01T00:00:00,b,0.5\n\
                   2010-07-01T00:15:00,a,0.2\n\
                   2010-07-01T00:15:00,b,0.6\n";
        let mut schema = IngestSchema::default();
        schema.layout = Layout::Long;
        let file = write_csv(csv);
        let frames = ingest(file.path(), &schema, 15).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[1].values(), &[0.5, 0.6]);
    }

    #[test]
    fn normalize_divides_by_max() {
        let f = frame(vec![0.0, 2.0, 4.0]);
        let n = normalize(&f).unwrap();
        assert_eq!(n.values(), &[0.0, 0.5, 1.0]);
        assert_eq!(n.scale(), 4.0);
    }

    #[test]
    fn normalize_keeps_all_zero_series() {
        let f = frame(vec![0.0, 0.0]);
        let n = normalize(&f).unwrap();
        assert_eq!(n.values(), &[0.0, 0.0]);
        assert_eq!(n.scale(), 1.0);
    }

    #[test]
    fn normalize_identity_when_max_is_one() {
        let f = frame(vec![1.0, 1.0]);
        let n = normalize(&f).unwrap();
        assert_eq!(n.values(), &[1.0, 1.0]);
    }

    #[test]
    fn normalize_rejects_negative_values() {
        let f = frame(vec![0.2, -0.1]);
        assert!(matches!(
            normalize(&f),
            Err(Error::NegativeValue { index: 2, .. })
        ));
    }

    #[test]
    fn normalize_is_idempotent() {
        let f = frame(vec![0.0, 1.5, 3.0, 0.75]);
        let once = normalize(&f).unwrap();
        let twice = normalize(&once).unwrap();
        assert_eq!(once.values(), twice.values());
        assert_eq!(once.scale(), twice.scale());
    }

    #[test]
    fn denormalize_recovers_raw_values() {
        let raw = vec![0.0, 1.5, 3.0, 0.75];
        let f = frame(raw.clone());
        let n = normalize(&f).unwrap();
        for (r, d) in raw.iter().zip(n.denormalized()) {
            assert_abs_diff_eq!(*r, d, epsilon = 1e-12);
        }
    }

    #[test]
    fn split_halves_reference_length() {
        let f = frame(vec![0.0; 52608]);
        let (train, test) = split(&f, &SplitSpec::new(0.5)).unwrap();
        assert_eq!(train.len(), 26304);
        assert_eq!(test.len(), 26304);
    }

    #[test]
    fn split_small_even_series() {
        let f = frame((0..100).map(|i| i as f64 / 100.0).collect());
        let (train, test) = split(&f, &SplitSpec::new(0.5)).unwrap();
        assert_eq!(train.len(), 50);
        assert_eq!(test.len(), 50);
        assert_eq!(train.values()[49], 0.49);
        assert_eq!(test.values()[0], 0.50);
        assert_eq!(train.len() + test.len(), f.len());
        assert_eq!(
            test.start(),
            f.start() + Duration::minutes(15 * 50)
        );
    }

    #[test]
    fn split_rejects_short_series() {
        let f = frame(vec![0.0; 10]);
        let spec = SplitSpec::new(0.5).with_min_half(96 + 96 + 1);
        assert!(matches!(
            split(&f, &spec),
            Err(Error::SeriesTooShort { len: 10, .. })
        ));
    }

    #[test]
    fn frame_cache_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let values = dir.path().join("frames.csv");
        let meta = dir.path().join("frames.json");
        let f = normalize(&frame(vec![0.0, 1.0, 2.0, 4.0])).unwrap();
        write_frame_cache(&[f.clone()], &values, &meta).unwrap();
        let back = read_frame_cache(&values, &meta).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].values(), f.values());
        assert_eq!(back[0].scale(), f.scale());
        assert_eq!(back[0].start(), f.start());
    }
}
