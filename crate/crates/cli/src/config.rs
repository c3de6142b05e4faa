//! Run configuration: one TOML file drives every stage.
//!
//! All defaults reproduce the reference experiment settings, so a config
//! that only names the data file runs the full study.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use knnq_core::dataset::{IngestSchema, Layout};
use knnq_core::features::FeatureSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    pub selection: SelectionConfig,
    pub run: RunSection,
    pub report: ReportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataConfig::default(),
            model: ModelConfig::default(),
            selection: SelectionConfig::default(),
            run: RunSection::default(),
            report: ReportConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub path: String,
    pub layout: Layout,
    pub timestamp_column: String,
    pub household_column: String,
    pub value_column: String,
    pub resolution_minutes: u32,
    pub max_gap_steps: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            path: "data/sample.csv".into(),
            layout: Layout::Wide,
            timestamp_column: "timestamp".into(),
            household_column: "household".into(),
            value_column: "value".into(),
            resolution_minutes: 15,
            max_gap_steps: 4,
        }
    }
}

impl DataConfig {
    pub fn schema(&self) -> IngestSchema {
        IngestSchema {
            layout: self.layout,
            timestamp_column: self.timestamp_column.clone(),
            household_column: self.household_column.clone(),
            value_column: self.value_column.clone(),
            max_gap_steps: self.max_gap_steps,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Forecast horizon in steps.
    pub horizon: usize,
    /// Maximal input lag in steps.
    pub max_lag: usize,
    /// Steps per day.
    pub period: usize,
    /// Rolling window length in days minus one.
    pub window_days: usize,
    pub night_threshold: f64,
    /// Neighbor counts to sweep.
    pub knn: Vec<usize>,
    /// Polynomial degrees to sweep (1..=3).
    pub degrees: Vec<usize>,
    /// Number of features chosen by forward selection.
    pub features: usize,
    /// Quantile levels in hundredths; empty means 1..=99.
    pub quantile_levels_pct: Vec<u8>,
    pub train_fraction: f64,
    /// Whether a row counts itself among its nearest neighbors.
    pub include_self_neighbor: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            horizon: 96,
            max_lag: 96,
            period: 96,
            window_days: 7,
            night_threshold: 1e-4,
            knn: vec![50, 70, 100, 120],
            degrees: vec![1, 2, 3],
            features: 4,
            quantile_levels_pct: Vec::new(),
            train_fraction: 0.5,
            include_self_neighbor: true,
        }
    }
}

impl ModelConfig {
    pub fn feature_spec(&self) -> FeatureSpec {
        FeatureSpec {
            horizon: self.horizon,
            max_lag: self.max_lag,
            period: self.period,
            window_days: self.window_days,
            selected: Vec::new(),
        }
    }

    pub fn quantile_grid(&self) -> Vec<f64> {
        if self.quantile_levels_pct.is_empty() {
            knnq_core::knn::default_quantile_grid()
        } else {
            self.quantile_levels_pct
                .iter()
                .map(|&p| p as f64 / 100.0)
                .collect()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    /// Chronological holdout fraction used by the selection scorer.
    pub holdout_fraction: f64,
    /// Reserved for randomized holdouts; the chronological default
    /// ignores it, so runs stay reproducible either way.
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            holdout_fraction: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub output_dir: String,
    /// Household subset; empty means all.
    pub households: Vec<String>,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    /// Dump transformed targets as CSV (large; off by default).
    pub dump_transformed_targets: bool,
    /// Export per-household learning sets as CSV.
    pub export_learning_sets: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            output_dir: "runs/knnq".into(),
            households: Vec::new(),
            workers: 0,
            dump_transformed_targets: false,
            export_learning_sets: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Household for the fan export; empty means the first one.
    pub fan_household: String,
    /// Day index inside the test half for the fan export. Early days
    /// lack rolling-window history, so the default skips past them.
    pub fan_day: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            fan_household: String::new(),
            fan_day: 10,
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub households: Option<Vec<String>>,
    pub knn: Option<Vec<usize>>,
    pub degrees: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        if let Some(h) = &overrides.households {
            cfg.run.households = h.clone();
        }
        if let Some(k) = &overrides.knn {
            cfg.model.knn = k.clone();
        }
        if let Some(d) = &overrides.degrees {
            cfg.model.degrees = d.clone();
        }
        if let Some(out) = &overrides.out {
            cfg.run.output_dir = out.display().to_string();
        }
        if let Some(w) = overrides.workers {
            cfg.run.workers = w;
        }
        if let Some(s) = overrides.seed {
            cfg.selection.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.path.is_empty() {
            bail!("data.path must be set");
        }
        if self.data.resolution_minutes == 0 {
            bail!("data.resolution_minutes must be positive");
        }
        if self.model.horizon == 0 || self.model.period == 0 {
            bail!("model.horizon and model.period must be positive");
        }
        if self.model.knn.is_empty() || self.model.knn.iter().any(|&k| k == 0) {
            bail!("model.knn must list positive neighbor counts");
        }
        if self.model.degrees.is_empty()
            || self.model.degrees.iter().any(|&d| !(1..=3).contains(&d))
        {
            bail!("model.degrees must list degrees within 1..=3");
        }
        if self.model.features == 0 {
            bail!("model.features must be at least 1");
        }
        let pool = 3 * (self.model.max_lag + 1);
        if self.model.features > pool {
            bail!(
                "model.features = {} exceeds the candidate pool of {pool}",
                self.model.features
            );
        }
        if !(0.0..1.0).contains(&self.model.train_fraction) || self.model.train_fraction <= 0.0 {
            bail!("model.train_fraction must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.selection.holdout_fraction)
            || self.selection.holdout_fraction <= 0.0
        {
            bail!("selection.holdout_fraction must lie in (0, 1)");
        }
        let grid = &self.model.quantile_levels_pct;
        if !grid.is_empty() {
            if grid.windows(2).any(|w| w[1] <= w[0]) {
                bail!("model.quantile_levels_pct must be strictly increasing");
            }
            if grid.iter().any(|&p| p == 0 || p >= 100) {
                bail!("model.quantile_levels_pct entries must lie in 1..=99");
            }
        }
        if self.run.output_dir.is_empty() {
            bail!("run.output_dir must be set");
        }
        Ok(())
    }

    /// Stable serialization used for cache keys and run provenance.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(&self.run.output_dir)
    }
}
