//! Staged pipeline: ingest -> train -> evaluate -> report, with
//! content-hash caching between stages.
//!
//! Every stage writes its artifacts under the run directory and records
//! them in the manifest together with a cache key derived from the
//! relevant config subset and the upstream stage keys. Re-running with an
//! unchanged config and data reuses whatever is still valid.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use knnq_core::dataset::{
    self, normalize, split, SplitSpec, TimeSeriesFrame,
};
use knnq_core::evaluation::EvalReport;
use knnq_core::features::{
    candidate_pool, is_night_origin, night_accuracy, night_mask, write_learning_set_csv,
    FeatureBuilder,
};
use knnq_core::knn::{
    compute_weights, pairwise_neighbors_opts, transform_targets, write_transformed_targets_csv,
    VARIANCE_EPSILON,
};
use knnq_core::regression::{
    expand, fit_sequential, forward_select, holdout_mse_scorer, PolynomialSpec, QuantileModelSet,
};
use knnq_core::HouseholdId;

use crate::config::RunConfig;
use crate::manifest::{sha256_file, sha256_str, Manifest};
use crate::report;

pub struct Pipeline {
    cfg: RunConfig,
    dir: PathBuf,
    manifest: Manifest,
}

/// Night-flag precision of one household over its whole series.
#[derive(Debug, Clone)]
pub struct NightAccuracyRow {
    pub household: String,
    pub flagged: usize,
    pub correct: usize,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        let dir = cfg.output_dir();
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create run directory {}", dir.display()))?;
        let mut manifest = Manifest::load(&dir)?;
        // The frozen config is itself an artifact; its hash lives at the
        // manifest top level so every file in the run directory is covered.
        let config_bytes = cfg.canonical_json() + "\n";
        manifest.config_hash = sha256_str(&config_bytes);
        std::fs::write(dir.join("config.json"), config_bytes)?;
        Ok(Pipeline { cfg, dir, manifest })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if self.cfg.run.workers > 0 {
            builder = builder.num_threads(self.cfg.run.workers);
        }
        builder.build().context("cannot build worker pool")
    }

    fn finish_stage(
        &mut self,
        stage: &str,
        key: &str,
        result: Result<Vec<PathBuf>>,
    ) -> Result<bool> {
        match result {
            Ok(files) => {
                self.manifest
                    .record_complete(&self.dir, stage, key, &files)?;
                Ok(false)
            }
            Err(err) => {
                self.manifest.record_failed(&self.dir, stage, key);
                Err(err.context(format!("stage {stage}")))
            }
        }
    }

    // ----- stage keys ---------------------------------------------------

    fn ingest_key(&self) -> Result<String> {
        let data_json = serde_json::to_string(&self.cfg.data).expect("serializable");
        let file_hash = sha256_file(Path::new(&self.cfg.data.path))
            .with_context(|| format!("stage ingest: cannot read {}", self.cfg.data.path))?;
        Ok(sha256_str(&format!("ingest:{data_json}:{file_hash}")))
    }

    fn train_key(&self, ingest_key: &str) -> String {
        let model_json = serde_json::to_string(&self.cfg.model).expect("serializable");
        let selection_json = serde_json::to_string(&self.cfg.selection).expect("serializable");
        sha256_str(&format!(
            "train:{ingest_key}:{model_json}:{selection_json}:households={:?}:exports={}:{}",
            self.cfg.run.households,
            self.cfg.run.export_learning_sets,
            self.cfg.run.dump_transformed_targets,
        ))
    }

    fn evaluate_key(&self, train_key: &str) -> String {
        sha256_str(&format!("evaluate:{train_key}"))
    }

    fn report_key(&self, evaluate_key: &str) -> String {
        let report_json = serde_json::to_string(&self.cfg.report).expect("serializable");
        sha256_str(&format!("report:{evaluate_key}:{report_json}"))
    }

    // ----- ingest -------------------------------------------------------

    pub fn ingest(&mut self) -> Result<bool> {
        let key = self.ingest_key()?;
        if self.manifest.stage_is_fresh(&self.dir, "ingest", &key) {
            println!("stage ingest: cache hit");
            return Ok(true);
        }
        println!("stage ingest: running");
        let result = self.do_ingest();
        self.finish_stage("ingest", &key, result)
    }

    fn do_ingest(&self) -> Result<Vec<PathBuf>> {
        let schema = self.cfg.data.schema();
        let frames = dataset::ingest(
            &self.cfg.data.path,
            &schema,
            self.cfg.data.resolution_minutes,
        )?;
        let normalized: Vec<TimeSeriesFrame> = frames
            .iter()
            .map(normalize)
            .collect::<knnq_core::Result<_>>()?;
        let ingest_dir = self.dir.join("ingest");
        std::fs::create_dir_all(&ingest_dir)?;
        let values = ingest_dir.join("frames.csv");
        let meta = ingest_dir.join("frames.json");
        dataset::write_frame_cache(&normalized, &values, &meta)?;
        log::info!("ingested {} households", normalized.len());
        Ok(vec![values, meta])
    }

    /// Load normalized frames, restricted to the configured households.
    fn load_frames(&self) -> Result<Vec<TimeSeriesFrame>> {
        let ingest_dir = self.dir.join("ingest");
        let frames = dataset::read_frame_cache(
            ingest_dir.join("frames.csv"),
            ingest_dir.join("frames.json"),
        )
        .context("cannot load the ingest cache; run the ingest stage first")?;
        if self.cfg.run.households.is_empty() {
            return Ok(frames);
        }
        let mut selected = Vec::new();
        for name in &self.cfg.run.households {
            let frame = frames
                .iter()
                .find(|f| f.household().as_str() == name)
                .ok_or_else(|| {
                    anyhow::anyhow!("household {name} not present in the ingested data")
                })?;
            selected.push(frame.clone());
        }
        selected.sort_by(|a, b| a.household().cmp(b.household()));
        Ok(selected)
    }

    fn split_spec(&self) -> SplitSpec {
        let spec = self.cfg.model.feature_spec();
        SplitSpec::new(self.cfg.model.train_fraction).with_min_half(spec.min_pair_span())
    }

    // ----- train ----------------------------------------------------------

    pub fn train(&mut self) -> Result<bool> {
        let ingest_key = self.ingest_key()?;
        if !self.manifest.stage_is_fresh(&self.dir, "ingest", &ingest_key) {
            self.ingest()?;
        }
        let key = self.train_key(&ingest_key);
        if self.manifest.stage_is_fresh(&self.dir, "train", &key) {
            println!("stage train: cache hit");
            return Ok(true);
        }
        println!("stage train: running");
        let result = self.do_train();
        self.finish_stage("train", &key, result)
    }

    fn do_train(&self) -> Result<Vec<PathBuf>> {
        let frames = self.load_frames()?;
        for sub in ["selection", "learning_sets", "models", "targets"] {
            std::fs::create_dir_all(self.dir.join(sub))?;
        }
        let pool = self.pool()?;
        let results: Vec<Result<Vec<PathBuf>>> = pool.install(|| {
            frames
                .par_iter()
                .map(|frame| self.train_household(frame))
                .collect()
        });
        let mut files = Vec::new();
        for result in results {
            files.extend(result?);
        }
        Ok(files)
    }

    fn train_household(&self, frame: &TimeSeriesFrame) -> Result<Vec<PathBuf>> {
        let household = frame.household().clone();
        let model_cfg = &self.cfg.model;
        let tau = model_cfg.night_threshold;
        let grid = model_cfg.quantile_grid();
        let (train, _test) = split(frame, &self.split_spec())
            .with_context(|| format!("stage split (household {household})"))?;

        let base_spec = model_cfg.feature_spec();
        let builder = FeatureBuilder::new(&train, &base_spec)
            .with_context(|| format!("stage features (household {household})"))?;
        let pool = candidate_pool(model_cfg.max_lag);
        let pool_origins = builder.pool_origins();
        if pool_origins.is_empty() {
            bail!("stage features (household {household}): training half too short for the candidate pool");
        }
        let day_origins: Vec<usize> = pool_origins
            .iter()
            .cloned()
            .filter(|&k| !is_night_origin(&train, k, model_cfg.period, tau))
            .collect();
        if day_origins.is_empty() {
            bail!("stage features (household {household}): no day pairs left after night filtering");
        }
        let selection_targets = builder.targets(&day_origins);

        let mut files = Vec::new();
        let mut selection_log = Vec::new();
        for &degree in &model_cfg.degrees {
            let poly = PolynomialSpec::new(degree)
                .with_context(|| format!("stage select (household {household})"))?;
            let scorer = holdout_mse_scorer(poly, self.cfg.selection.holdout_fraction);
            let selection = forward_select(
                pool.len(),
                |c| builder.column(pool[c], &day_origins),
                &selection_targets,
                model_cfg.features,
                &scorer,
            )
            .with_context(|| {
                format!("stage select (household {household}, poly{degree})")
            })?;
            let selected: Vec<_> = selection.chosen.iter().map(|&c| pool[c]).collect();
            selection_log.push(serde_json::json!({
                "degree": degree,
                "features": selected.iter().map(|f| f.label()).collect::<Vec<_>>(),
                "score_trace": selection.score_trace,
            }));

            let mut spec = base_spec.clone();
            spec.selected = selected;
            let set = builder
                .assemble_with(&spec.selected)
                .with_context(|| format!("stage features (household {household}, poly{degree})"))?;
            let mask = night_mask(&train, &set, model_cfg.period, tau);
            if self.cfg.run.export_learning_sets {
                let path = self
                    .dir
                    .join("learning_sets")
                    .join(format!("{household}_poly{degree}.csv"));
                write_learning_set_csv(&set, &mask, &path)?;
                files.push(path);
            }
            let day = set.subset(&mask.day_indices());
            if day.is_empty() {
                bail!("stage features (household {household}, poly{degree}): only night pairs");
            }

            let k_max = *model_cfg.knn.iter().max().expect("validated non-empty");
            let candidates = if model_cfg.include_self_neighbor {
                day.len()
            } else {
                day.len().saturating_sub(1)
            };
            if k_max > candidates {
                bail!(
                    "stage knn (household {household}, poly{degree}): k_nn={k_max} exceeds the {candidates} day training pairs",
                );
            }
            let weights = compute_weights(&day.x.view(), VARIANCE_EPSILON)
                .with_context(|| format!("stage knn (household {household}, poly{degree})"))?;
            let table = pairwise_neighbors_opts(
                &day.x.view(),
                &weights,
                k_max,
                model_cfg.include_self_neighbor,
            )
            .with_context(|| format!("stage knn (household {household}, poly{degree})"))?;
            let design = expand(&day.x.view(), &poly);

            for &k in &model_cfg.knn {
                let sub = table
                    .truncated(k)
                    .with_context(|| format!("stage knn (household {household}, poly{degree})"))?;
                let targets = transform_targets(&day.y, &sub, &grid).with_context(|| {
                    format!("stage knn (household {household}, poly{degree}, k={k})")
                })?;
                if self.cfg.run.dump_transformed_targets {
                    let path = self
                        .dir
                        .join("targets")
                        .join(format!("{household}_poly{degree}_k{k}.csv"));
                    write_transformed_targets_csv(&targets, &path)?;
                    files.push(path);
                }
                let fit = fit_sequential(&design.view(), &targets).with_context(|| {
                    format!("stage fit (household {household}, poly{degree}, k={k})")
                })?;
                log::debug!(
                    "household {household} poly{degree} k={k}: {} iterations, stationarity {:.2e}",
                    fit.total_iterations(),
                    fit.worst_stationarity()
                );
                let model = QuantileModelSet::from_fit(
                    household.clone(),
                    k,
                    poly,
                    spec.clone(),
                    tau,
                    fit,
                );
                let path = self
                    .dir
                    .join("models")
                    .join(format!("{household}_poly{degree}_k{k}.json"));
                model.save(&path).with_context(|| {
                    format!("stage fit (household {household}, poly{degree}, k={k})")
                })?;
                files.push(path);
            }
        }
        let selection_path = self.dir.join("selection").join(format!("{household}.json"));
        let mut json =
            serde_json::to_string_pretty(&selection_log).expect("serializable selection log");
        json.push('\n');
        std::fs::write(&selection_path, json)?;
        files.push(selection_path);
        Ok(files)
    }

    fn model_path(&self, household: &HouseholdId, degree: usize, k: usize) -> PathBuf {
        self.dir
            .join("models")
            .join(format!("{household}_poly{degree}_k{k}.json"))
    }

    // ----- evaluate -------------------------------------------------------

    pub fn evaluate(&mut self) -> Result<bool> {
        let ingest_key = self.ingest_key()?;
        let train_key = self.train_key(&ingest_key);
        if !self.manifest.stage_is_fresh(&self.dir, "train", &train_key) {
            self.train()?;
        }
        let key = self.evaluate_key(&train_key);
        if self.manifest.stage_is_fresh(&self.dir, "evaluate", &key) {
            println!("stage evaluate: cache hit");
            return Ok(true);
        }
        println!("stage evaluate: running");
        let result = self.do_evaluate();
        self.finish_stage("evaluate", &key, result)
    }

    fn do_evaluate(&self) -> Result<Vec<PathBuf>> {
        let frames = self.load_frames()?;
        let eval_dir = self.dir.join("eval");
        std::fs::create_dir_all(&eval_dir)?;
        let pool = self.pool()?;
        let per_household: Vec<Result<(Vec<EvalReport>, NightAccuracyRow)>> = pool.install(|| {
            frames
                .par_iter()
                .map(|frame| self.evaluate_household(frame))
                .collect()
        });
        let mut reports = Vec::new();
        let mut night_rows = Vec::new();
        for outcome in per_household {
            let (mut household_reports, night) = outcome?;
            reports.append(&mut household_reports);
            night_rows.push(night);
        }

        let reports_path = eval_dir.join("reports.json");
        let mut json = serde_json::to_string_pretty(&reports)?;
        json.push('\n');
        std::fs::write(&reports_path, json)?;

        let summary_path = eval_dir.join("summary.csv");
        report::write_summary_csv(&reports, &summary_path)?;
        let levels_path = eval_dir.join("levels.csv");
        report::write_levels_csv(&reports, &levels_path)?;

        let night_path = eval_dir.join("night_accuracy.csv");
        let mut writer = csv::Writer::from_path(&night_path)?;
        writer.write_record(["household", "flagged", "correct", "accuracy"])?;
        for row in &night_rows {
            let accuracy = if row.flagged == 0 {
                1.0
            } else {
                row.correct as f64 / row.flagged as f64
            };
            writer.write_record([
                row.household.clone(),
                row.flagged.to_string(),
                row.correct.to_string(),
                format!("{accuracy}"),
            ])?;
        }
        writer.flush()?;

        Ok(vec![reports_path, summary_path, levels_path, night_path])
    }

    fn evaluate_household(
        &self,
        frame: &TimeSeriesFrame,
    ) -> Result<(Vec<EvalReport>, NightAccuracyRow)> {
        let household = frame.household().clone();
        let model_cfg = &self.cfg.model;
        let tau = model_cfg.night_threshold;
        let (_train, test) = split(frame, &self.split_spec())
            .with_context(|| format!("stage evaluate (household {household})"))?;

        let mut reports = Vec::new();
        for &degree in &model_cfg.degrees {
            // All neighbor counts of one degree share the same features.
            let first = QuantileModelSet::load(self.model_path(
                &household,
                degree,
                model_cfg.knn[0],
            ))
            .with_context(|| {
                format!("stage evaluate (household {household}, poly{degree}): missing model")
            })?;
            let spec = first.feature_spec.clone();
            let builder = FeatureBuilder::new(&test, &spec)
                .with_context(|| format!("stage evaluate (household {household})"))?;
            let set = builder
                .assemble()
                .with_context(|| format!("stage evaluate (household {household})"))?;
            let mask = night_mask(&test, &set, model_cfg.period, tau);
            let day = set.subset(&mask.day_indices());
            if day.is_empty() {
                bail!("stage evaluate (household {household}): no day pairs in the test half");
            }
            for &k in &model_cfg.knn {
                let model = if k == model_cfg.knn[0] {
                    first.clone()
                } else {
                    QuantileModelSet::load(self.model_path(&household, degree, k)).with_context(
                        || {
                            format!(
                            "stage evaluate (household {household}, poly{degree}, k={k}): missing model"
                        )
                        },
                    )?
                };
                let mut per_level: Vec<Vec<f64>> =
                    vec![Vec::with_capacity(day.len()); model.levels.len()];
                for row in 0..day.len() {
                    let x: Vec<f64> = day.x.row(row).iter().cloned().collect();
                    let pred = model.predict(&x, false).with_context(|| {
                        format!("stage evaluate (household {household}, poly{degree}, k={k})")
                    })?;
                    for (qi, v) in pred.into_iter().enumerate() {
                        per_level[qi].push(v);
                    }
                }
                let report = EvalReport::from_predictions(
                    household.clone(),
                    format!("poly{degree}"),
                    k,
                    &model.levels,
                    &per_level,
                    &day.y,
                )
                .with_context(|| {
                    format!("stage evaluate (household {household}, poly{degree}, k={k})")
                })?;
                reports.push(report);
            }
        }

        // Night-flag precision over every classifiable pair of the series.
        let len = frame.len();
        let horizon = model_cfg.horizon;
        let origins: Vec<usize> = if len > horizon {
            (model_cfg.period..len - horizon).collect()
        } else {
            Vec::new()
        };
        let (flagged, correct) = night_accuracy(frame, &origins, horizon, model_cfg.period, tau);
        Ok((
            reports,
            NightAccuracyRow {
                household: household.to_string(),
                flagged,
                correct,
            },
        ))
    }

    // ----- report -----------------------------------------------------------

    pub fn report(&mut self) -> Result<bool> {
        let ingest_key = self.ingest_key()?;
        let train_key = self.train_key(&ingest_key);
        let evaluate_key = self.evaluate_key(&train_key);
        let key = self.report_key(&evaluate_key);

        let reports_path = self.dir.join("eval").join("reports.json");
        if !self.manifest.stage_is_fresh(&self.dir, "evaluate", &evaluate_key)
            || !reports_path.exists()
        {
            bail!(
                "stage report: evaluation artifacts are missing or stale ({}); run `evaluate` first",
                reports_path.display()
            );
        }
        if self.manifest.stage_is_fresh(&self.dir, "report", &key) {
            println!("stage report: cache hit");
            return Ok(true);
        }
        println!("stage report: running");
        let result = self.do_report(&reports_path);
        self.finish_stage("report", &key, result)
    }

    fn do_report(&self, reports_path: &Path) -> Result<Vec<PathBuf>> {
        let text = std::fs::read_to_string(reports_path)?;
        let reports: Vec<EvalReport> = serde_json::from_str(&text)
            .context("stage report: corrupt eval/reports.json")?;
        if reports.is_empty() {
            bail!("stage report: no evaluation reports");
        }
        let report_dir = self.dir.join("reports");
        std::fs::create_dir_all(&report_dir)?;
        let mut files = report::write_tables(&reports, &report_dir)?;
        files.extend(report::write_curves(&reports, &report_dir)?);
        files.push(self.write_fan(&report_dir)?);
        Ok(files)
    }

    /// Forecast fan for one household and test-set day across all
    /// configured techniques and neighbor counts.
    fn write_fan(&self, report_dir: &Path) -> Result<PathBuf> {
        let frames = self.load_frames()?;
        let household = if self.cfg.report.fan_household.is_empty() {
            frames[0].household().clone()
        } else {
            HouseholdId::new(self.cfg.report.fan_household.clone())
        };
        let frame = frames
            .iter()
            .find(|f| f.household() == &household)
            .ok_or_else(|| {
                anyhow::anyhow!("stage report: fan household {household} not in this run")
            })?;
        let model_cfg = &self.cfg.model;
        let (_train, test) = split(frame, &self.split_spec())?;
        let day = self.cfg.report.fan_day;
        let slot_lo = day * model_cfg.period;
        let slot_hi = ((day + 1) * model_cfg.period).min(test.len());
        if slot_lo >= test.len() {
            bail!(
                "stage report: fan day {day} is outside the test half ({} days)",
                test.len() / model_cfg.period
            );
        }

        let path = report_dir.join(format!("fan_{household}_day{day}.csv"));
        let mut writer = csv::Writer::from_path(&path)?;
        writer.write_record([
            "technique",
            "k_nn",
            "k",
            "timestamp",
            "is_night",
            "truth",
            "q",
            "value",
        ])?;
        for &degree in &model_cfg.degrees {
            for &k in &model_cfg.knn {
                let model = QuantileModelSet::load(self.model_path(&household, degree, k))
                    .with_context(|| {
                        format!("stage report: missing model for fan (poly{degree}, k={k})")
                    })?;
                let spec = model.feature_spec.clone();
                let builder = FeatureBuilder::new(&test, &spec)?;
                let set = builder.assemble()?;
                for (row, &origin) in set.origins.iter().enumerate() {
                    let target = origin + spec.horizon;
                    if target < slot_lo || target >= slot_hi {
                        continue;
                    }
                    let night = is_night_origin(&test, origin, model_cfg.period, model.night_threshold);
                    let x: Vec<f64> = set.x.row(row).iter().cloned().collect();
                    let pred = model.predict(&x, night)?;
                    let truth = test.values()[target];
                    let timestamp = test.timestamp(target).format("%Y-%m-%dT%H:%M:%S").to_string();
                    for (qi, &level) in model.levels.iter().enumerate() {
                        writer.write_record([
                            format!("poly{degree}"),
                            k.to_string(),
                            (target + 1).to_string(),
                            timestamp.clone(),
                            if night { "1" } else { "0" }.to_string(),
                            format!("{truth}"),
                            format!("{level}"),
                            format!("{}", pred[qi]),
                        ])?;
                    }
                }
            }
        }
        writer.flush()?;
        Ok(path)
    }

    // ----- predict ------------------------------------------------------

    /// Write test-half quantile forecasts for every configured combination.
    pub fn predict(&mut self) -> Result<bool> {
        let ingest_key = self.ingest_key()?;
        let train_key = self.train_key(&ingest_key);
        if !self.manifest.stage_is_fresh(&self.dir, "train", &train_key) {
            self.train()?;
        }
        let key = sha256_str(&format!("predict:{train_key}"));
        if self.manifest.stage_is_fresh(&self.dir, "predict", &key) {
            println!("stage predict: cache hit");
            return Ok(true);
        }
        println!("stage predict: running");
        let result = self.do_predict();
        self.finish_stage("predict", &key, result)
    }

    fn do_predict(&self) -> Result<Vec<PathBuf>> {
        let frames = self.load_frames()?;
        let out_dir = self.dir.join("predictions");
        std::fs::create_dir_all(&out_dir)?;
        let model_cfg = &self.cfg.model;
        let mut files = Vec::new();
        for frame in &frames {
            let household = frame.household().clone();
            let boundary = self.split_spec().boundary_index(frame.len());
            let (_train, test) = split(frame, &self.split_spec())
                .with_context(|| format!("stage predict (household {household})"))?;
            for &degree in &model_cfg.degrees {
                for &k in &model_cfg.knn {
                    let model = QuantileModelSet::load(self.model_path(&household, degree, k))
                        .with_context(|| {
                            format!(
                                "stage predict (household {household}, poly{degree}, k={k}): missing model"
                            )
                        })?;
                    let spec = model.feature_spec.clone();
                    let builder = FeatureBuilder::new(&test, &spec)?;
                    let set = builder.assemble()?;
                    let mask = night_mask(&test, &set, model_cfg.period, model.night_threshold);

                    let path =
                        out_dir.join(format!("{household}_poly{degree}_k{k}.csv"));
                    let mut writer = csv::Writer::from_path(&path)?;
                    let mut header = vec![
                        "k".to_string(),
                        "timestamp".to_string(),
                        "is_night".to_string(),
                        "truth".to_string(),
                    ];
                    header.extend(
                        model
                            .levels
                            .iter()
                            .map(|l| format!("q{:02}", (l * 100.0).round() as u32)),
                    );
                    writer.write_record(&header)?;
                    for (row, &origin) in set.origins.iter().enumerate() {
                        let target = origin + spec.horizon;
                        let x: Vec<f64> = set.x.row(row).iter().cloned().collect();
                        let pred = model.predict(&x, mask.flags[row])?;
                        let mut record = vec![
                            (boundary + target + 1).to_string(),
                            test.timestamp(target).format("%Y-%m-%dT%H:%M:%S").to_string(),
                            if mask.flags[row] { "1" } else { "0" }.to_string(),
                            format!("{}", test.values()[target]),
                        ];
                        record.extend(pred.iter().map(|v| format!("{v}")));
                        writer.write_record(&record)?;
                    }
                    writer.flush()?;
                    files.push(path);
                }
            }
        }
        Ok(files)
    }

    // ----- run ------------------------------------------------------------

    /// Execute every stage in order; returns the cache-hit flags.
    pub fn run(&mut self) -> Result<Vec<(&'static str, bool)>> {
        let mut outcome = Vec::new();
        outcome.push(("ingest", self.ingest()?));
        outcome.push(("train", self.train()?));
        outcome.push(("evaluate", self.evaluate()?));
        outcome.push(("report", self.report()?));
        Ok(outcome)
    }
}
