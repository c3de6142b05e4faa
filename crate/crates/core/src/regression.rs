//! Polynomial quantile regressions on transformed targets.
//!
//! One coefficient vector is fitted per quantile level, in ascending
//! order. The first level is constrained to nonnegative fitted values,
//! every later level to fitted values at or above its predecessor's, so
//! the levels cannot cross on the training rows. Test-time crossings are
//! repaired by [`correct_crossing`].

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::HouseholdId;
use crate::error::{Error, Result};
use crate::features::FeatureSpec;
use crate::knn::TransformedTargets;
use crate::linalg;
use crate::qp::{BoundedLsq, QpReport, DEFAULT_RIDGE};

/// Per-feature powers without bilinear terms, intercept prepended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialSpec {
    pub degree: usize,
}

impl PolynomialSpec {
    pub fn new(degree: usize) -> Result<Self> {
        if !(1..=3).contains(&degree) {
            return Err(Error::InvalidParameter(format!(
                "polynomial degree {degree} outside 1..=3"
            )));
        }
        Ok(PolynomialSpec { degree })
    }

    /// Design width for `s` input features: intercept plus `s * degree`.
    pub fn width(&self, s: usize) -> usize {
        1 + s * self.degree
    }

    pub fn label(&self) -> String {
        format!("poly{}", self.degree)
    }
}

/// Expand one input vector: `(1, x_1, x_1^2, ..., x_S^d)`, feature-major.
pub fn expand_row(x: &[f64], spec: &PolynomialSpec, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    for &v in x {
        let mut power = 1.0;
        for _ in 0..spec.degree {
            power *= v;
            out.push(power);
        }
    }
}

/// Expand a whole input matrix into the design matrix `[1 | x_s^p]`.
pub fn expand(x: &ArrayView2<f64>, spec: &PolynomialSpec) -> Array2<f64> {
    let n = x.nrows();
    let width = spec.width(x.ncols());
    let mut out = Array2::zeros((n, width));
    let mut row = Vec::with_capacity(width);
    for r in 0..n {
        let input: Vec<f64> = x.row(r).iter().cloned().collect();
        expand_row(&input, spec, &mut row);
        for (c, &v) in row.iter().enumerate() {
            out[[r, c]] = v;
        }
    }
    out
}

/// Clamp a per-level prediction curve to be nonnegative and nondecreasing.
///
/// The first level is floored at zero; every later level is floored at the
/// *corrected* predecessor, so the output is globally monotone.
pub fn correct_crossing(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    values[0] = values[0].max(0.0);
    for i in 1..values.len() {
        values[i] = values[i].max(values[i - 1]);
    }
}

/// Coefficients and solver certificates for the full level grid.
#[derive(Debug, Clone)]
pub struct SequentialFit {
    pub levels: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
    pub reports: Vec<QpReport>,
}

impl SequentialFit {
    pub fn worst_stationarity(&self) -> f64 {
        self.reports
            .iter()
            .fold(0.0_f64, |m, r| m.max(r.stationarity))
    }

    pub fn worst_violation(&self) -> f64 {
        self.reports
            .iter()
            .fold(0.0_f64, |m, r| m.max(r.max_violation))
    }

    pub fn total_iterations(&self) -> usize {
        self.reports.iter().map(|r| r.iterations).sum()
    }
}

/// Fit every level of the grid in ascending order.
///
/// Level one solves under `A theta >= 0`; each later level under
/// `A theta >= A theta_prev`, warm-started at `theta_prev` (feasible by
/// construction, so no subproblem can be infeasible).
pub fn fit_sequential(
    design: &ArrayView2<f64>,
    targets: &TransformedTargets,
) -> Result<SequentialFit> {
    if design.nrows() != targets.num_rows() {
        return Err(Error::DimensionMismatch {
            expected: design.nrows(),
            actual: targets.num_rows(),
        });
    }
    let solver = BoundedLsq::new(design, DEFAULT_RIDGE)?;
    let n = solver.rows();
    let m = solver.cols();
    let mut thetas: Vec<Vec<f64>> = Vec::with_capacity(targets.levels.len());
    let mut reports = Vec::with_capacity(targets.levels.len());
    let mut lower = vec![0.0; n];
    let mut start = vec![0.0; m];
    let mut working: Vec<usize> = Vec::new();
    let mut prev_y: Option<Vec<f64>> = None;
    for (qi, &level) in targets.levels.iter().enumerate() {
        let y: Vec<f64> = targets.level_targets(qi).iter().cloned().collect();
        // Clamped grid ends (and flat neighborhoods) repeat the exact same
        // target vector; the previous optimum solves that problem verbatim.
        if prev_y.as_deref() == Some(y.as_slice()) {
            let theta = thetas.last().expect("previous level exists").clone();
            let report = *reports.last().expect("previous level exists");
            thetas.push(theta);
            reports.push(QpReport {
                iterations: 0,
                ..report
            });
            continue;
        }
        let (theta, final_working, report) =
            solver.solve_warm(&y, &lower, &start, &working, level)?;
        lower = solver.apply(&theta);
        start = theta.clone();
        working = final_working;
        prev_y = Some(y);
        thetas.push(theta);
        reports.push(report);
    }
    Ok(SequentialFit {
        levels: targets.levels.clone(),
        thetas,
        reports,
    })
}

/// A fitted set of quantile regressions for one household, technique and
/// neighbor count. Serializes to a self-describing JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantileModelSet {
    pub household: HouseholdId,
    pub k_nn: usize,
    pub poly: PolynomialSpec,
    /// Horizon, lags, periodicity and the selected features.
    pub feature_spec: FeatureSpec,
    pub night_threshold: f64,
    pub levels: Vec<f64>,
    /// One coefficient vector per level, width `1 + S * degree`.
    pub coefficients: Vec<Vec<f64>>,
}

impl QuantileModelSet {
    pub fn from_fit(
        household: HouseholdId,
        k_nn: usize,
        poly: PolynomialSpec,
        feature_spec: FeatureSpec,
        night_threshold: f64,
        fit: SequentialFit,
    ) -> Self {
        QuantileModelSet {
            household,
            k_nn,
            poly,
            feature_spec,
            night_threshold,
            levels: fit.levels,
            coefficients: fit.thetas,
        }
    }

    pub fn num_features(&self) -> usize {
        self.feature_spec.selected.len()
    }

    /// Quantile forecasts for one input vector, nondecreasing in the
    /// level and nonnegative. Night pairs bypass the regression and
    /// forecast zero at every level.
    pub fn predict(&self, x: &[f64], night: bool) -> Result<Vec<f64>> {
        if night {
            return Ok(vec![0.0; self.levels.len()]);
        }
        if x.len() != self.num_features() {
            return Err(Error::DimensionMismatch {
                expected: self.num_features(),
                actual: x.len(),
            });
        }
        let mut design_row = Vec::with_capacity(self.poly.width(x.len()));
        expand_row(x, &self.poly, &mut design_row);
        let mut out: Vec<f64> = self
            .coefficients
            .iter()
            .map(|theta| theta.iter().zip(&design_row).map(|(t, a)| t * a).sum())
            .collect();
        correct_crossing(&mut out);
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        std::fs::write(path.as_ref(), json)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let model: QuantileModelSet = serde_json::from_str(&text)?;
        if model.coefficients.len() != model.levels.len() {
            return Err(Error::InvalidParameter(
                "model file has mismatched levels and coefficients".into(),
            ));
        }
        let width = model.poly.width(model.num_features());
        if model.coefficients.iter().any(|t| t.len() != width) {
            return Err(Error::InvalidParameter(
                "model file has coefficient vectors of the wrong width".into(),
            ));
        }
        Ok(model)
    }
}

/// Greedy forward selection outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Candidate-pool indices in the order they were chosen.
    pub chosen: Vec<usize>,
    /// Best score after each step.
    pub score_trace: Vec<f64>,
}

/// Greedy forward selection over a candidate pool.
///
/// At each step the candidate minimizing the scorer is added; ties break
/// toward the lower candidate index, and candidates whose score is not
/// finite are skipped with a warning. `column(c)` materializes candidate
/// `c` over the fixed row set shared with `y`.
pub fn forward_select<C, S>(
    pool_len: usize,
    column: C,
    y: &[f64],
    s: usize,
    scorer: S,
) -> Result<SelectionResult>
where
    C: Fn(usize) -> Vec<f64> + Sync,
    S: Fn(&ArrayView2<f64>, &[f64]) -> Result<f64> + Sync,
{
    if pool_len == 0 {
        return Err(Error::EmptyInput("candidate pool"));
    }
    if s == 0 || s > pool_len {
        return Err(Error::InvalidParameter(format!(
            "cannot select {s} features from a pool of {pool_len}"
        )));
    }
    let n = y.len();
    let mut chosen: Vec<usize> = Vec::with_capacity(s);
    let mut chosen_cols: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut score_trace = Vec::with_capacity(s);

    for _ in 0..s {
        let scores: Vec<Option<f64>> = (0..pool_len)
            .into_par_iter()
            .map(|c| {
                if chosen.contains(&c) {
                    return None;
                }
                let col = column(c);
                debug_assert_eq!(col.len(), n);
                let mut flat = Vec::with_capacity(n * (chosen_cols.len() + 1));
                for r in 0..n {
                    for existing in &chosen_cols {
                        flat.push(existing[r]);
                    }
                    flat.push(col[r]);
                }
                let trial =
                    Array2::from_shape_vec((n, chosen_cols.len() + 1), flat).ok()?;
                match scorer(&trial.view(), y) {
                    Ok(score) if score.is_finite() => Some(score),
                    Ok(score) => {
                        log::warn!("candidate {c} produced non-finite score {score}; skipped");
                        None
                    }
                    Err(err) => {
                        log::warn!("candidate {c} failed to score: {err}; skipped");
                        None
                    }
                }
            })
            .collect();

        let mut best: Option<(usize, f64)> = None;
        for (c, score) in scores.iter().enumerate() {
            if let Some(score) = score {
                if best.map_or(true, |(_, b)| *score < b) {
                    best = Some((c, *score));
                }
            }
        }
        let (winner, score) = best.ok_or_else(|| {
            Error::InvalidParameter("no candidate produced a usable score".into())
        })?;
        chosen_cols.push(column(winner));
        chosen.push(winner);
        score_trace.push(score);
    }
    Ok(SelectionResult {
        chosen,
        score_trace,
    })
}

/// Scorer used by the pipeline: mean-squared error of the technique's
/// mean regression under a chronological holdout of the training rows.
pub fn holdout_mse_scorer(
    poly: PolynomialSpec,
    holdout_fraction: f64,
) -> impl Fn(&ArrayView2<f64>, &[f64]) -> Result<f64> + Sync {
    move |x: &ArrayView2<f64>, y: &[f64]| {
        let n = x.nrows();
        let holdout = ((n as f64 * holdout_fraction).floor() as usize).max(1);
        if holdout >= n {
            return Err(Error::InvalidParameter(format!(
                "holdout of {holdout} rows leaves no training rows (n={n})"
            )));
        }
        let fit_rows = n - holdout;
        let design = expand(x, &poly);
        let width = design.ncols();
        let mut flat = Vec::with_capacity(fit_rows * width);
        for r in 0..fit_rows {
            flat.extend(design.row(r).iter());
        }
        let theta = linalg::ridge_least_squares(&flat, fit_rows, width, &y[..fit_rows], DEFAULT_RIDGE);
        let mut sse = 0.0;
        for r in fit_rows..n {
            let pred: f64 = design.row(r).iter().zip(&theta).map(|(a, t)| a * t).sum();
            sse += (y[r] - pred).powi(2);
        }
        Ok(sse / holdout as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureId, SeriesKind};
    use crate::knn::default_quantile_grid;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn expand_examples() {
        let spec2 = PolynomialSpec::new(2).unwrap();
        let a = expand(&array![[2.0]].view(), &spec2);
        assert_eq!(a.row(0).to_vec(), vec![1.0, 2.0, 4.0]);

        let spec1 = PolynomialSpec::new(1).unwrap();
        let b = expand(&array![[3.0, 7.0]].view(), &spec1);
        assert_eq!(b.row(0).to_vec(), vec![1.0, 3.0, 7.0]);

        let spec3 = PolynomialSpec::new(3).unwrap();
        let c = expand(&array![[-1.0]].view(), &spec3);
        assert_eq!(c.row(0).to_vec(), vec![1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn degree_is_bounded() {
        assert!(PolynomialSpec::new(0).is_err());
        assert!(PolynomialSpec::new(4).is_err());
        assert_eq!(PolynomialSpec::new(3).unwrap().width(4), 13);
    }

    #[test]
    fn crossing_correction_examples() {
        let mut v = vec![0.5, 0.4];
        correct_crossing(&mut v);
        assert_eq!(v, vec![0.5, 0.5]);

        let mut v = vec![-0.1, 0.2];
        correct_crossing(&mut v);
        assert_eq!(v, vec![0.0, 0.2]);

        let mut v = vec![0.1, 0.2, 0.3];
        correct_crossing(&mut v);
        assert_eq!(v, vec![0.1, 0.2, 0.3]);
    }

    #[test]
    fn crossing_correction_is_global() {
        // A dip below an earlier maximum must not resurface.
        let mut v = vec![0.5, 0.1, 0.2, 0.3];
        correct_crossing(&mut v);
        assert_eq!(v, vec![0.5, 0.5, 0.5, 0.5]);
    }

    fn targets_from(levels: Vec<f64>, rows: Vec<Vec<f64>>) -> TransformedTargets {
        let q = levels.len();
        let n = rows[0].len();
        let mut per_level = Array2::zeros((q, n));
        for (qi, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                per_level[[qi, c]] = v;
            }
        }
        TransformedTargets {
            levels,
            per_level,
            k_nn: 1,
        }
    }

    #[test]
    fn exact_interpolant_is_recovered() {
        let x = array![[0.0], [1.0], [2.0]];
        let design = expand(&x.view(), &PolynomialSpec::new(1).unwrap());
        let targets = targets_from(vec![0.01], vec![vec![0.0, 1.0, 2.0]]);
        let fit = fit_sequential(&design.view(), &targets).unwrap();
        assert_abs_diff_eq!(fit.thetas[0][0], 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(fit.thetas[0][1], 1.0, epsilon = 1e-7);
        assert!(fit.worst_stationarity() <= crate::qp::KKT_TOLERANCE);
    }

    #[test]
    fn identical_targets_reproduce_fitted_values() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let design = expand(&x.view(), &PolynomialSpec::new(1).unwrap());
        let y = vec![0.1, 0.9, 2.2, 2.9];
        let targets = targets_from(vec![0.01, 0.02], vec![y.clone(), y]);
        let fit = fit_sequential(&design.view(), &targets).unwrap();
        let solver = BoundedLsq::new(&design.view(), DEFAULT_RIDGE).unwrap();
        let first = solver.apply(&fit.thetas[0]);
        let second = solver.apply(&fit.thetas[1]);
        for (a, b) in first.iter().zip(&second) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        assert!(fit.worst_stationarity() <= crate::qp::KKT_TOLERANCE);
        assert!(fit.worst_violation() <= crate::qp::FEASIBILITY_SLACK);
    }

    #[test]
    fn slack_constraints_match_closed_form_least_squares() {
        // Targets far above zero and strictly separated by level, so no
        // constraint ever binds and each fit is plain least squares.
        let x = array![[0.1], [0.4], [0.7], [1.0], [1.3]];
        let design = expand(&x.view(), &PolynomialSpec::new(2).unwrap());
        let base: Vec<f64> = x.column(0).iter().map(|v| 2.0 + v * v).collect();
        let levels = vec![0.01, 0.02, 0.03];
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|qi| base.iter().map(|b| b + qi as f64).collect())
            .collect();
        let targets = targets_from(levels, rows);
        let fit = fit_sequential(&design.view(), &targets).unwrap();
        for (qi, theta) in fit.thetas.iter().enumerate() {
            let flat: Vec<f64> = design.iter().cloned().collect();
            let y: Vec<f64> = targets.level_targets(qi).iter().cloned().collect();
            // Identical objective, direct normal-equations route.
            let direct = linalg::ridge_least_squares(
                &flat,
                design.nrows(),
                design.ncols(),
                &y,
                DEFAULT_RIDGE,
            );
            for (a, b) in theta.iter().zip(&direct) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-8);
            }
            // The tiny ridge keeps it within a looser bound of plain
            // least squares as well.
            let plain =
                linalg::ridge_least_squares(&flat, design.nrows(), design.ncols(), &y, 0.0);
            for (a, b) in theta.iter().zip(&plain) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn fitted_levels_do_not_cross_on_training_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 80;
        let x = Array2::from_shape_fn((n, 2), |_| rng.random_range(0.0..1.0_f64));
        let design = expand(&x.view(), &PolynomialSpec::new(2).unwrap());
        // Heteroscedastic targets per level via a noisy monotone ramp.
        let grid = default_quantile_grid();
        let base: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.5)).collect();
        let rows: Vec<Vec<f64>> = grid
            .iter()
            .map(|&q| base.iter().map(|b| b + 0.3 * q).collect())
            .collect();
        let targets = targets_from(grid.clone(), rows);
        let fit = fit_sequential(&design.view(), &targets).unwrap();
        let solver = BoundedLsq::new(&design.view(), DEFAULT_RIDGE).unwrap();
        let mut prev = vec![f64::NEG_INFINITY; n];
        for theta in &fit.thetas {
            let fitted = solver.apply(theta);
            for (f, p) in fitted.iter().zip(&prev) {
                assert!(*f >= p - 1e-7, "levels crossed on a training row");
            }
            prev = fitted;
        }
        // First level must be nonnegative on the training rows.
        let first = solver.apply(&fit.thetas[0]);
        assert!(first.iter().all(|&v| v >= -1e-7));
    }

    fn spec_with(selected: Vec<FeatureId>) -> FeatureSpec {
        FeatureSpec {
            horizon: 96,
            max_lag: 96,
            period: 96,
            window_days: 7,
            selected,
        }
    }

    #[test]
    fn predict_constant_coefficients() {
        let model = QuantileModelSet {
            household: HouseholdId::new("h"),
            k_nn: 50,
            poly: PolynomialSpec::new(1).unwrap(),
            feature_spec: spec_with(vec![FeatureId::new(SeriesKind::Power, 0)]),
            night_threshold: 1e-4,
            levels: default_quantile_grid(),
            coefficients: vec![vec![0.2, 0.1]; 99],
        };
        let out = model.predict(&[0.5], false).unwrap();
        assert_eq!(out.len(), 99);
        assert!(out.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn predict_night_returns_zeros() {
        let model = QuantileModelSet {
            household: HouseholdId::new("h"),
            k_nn: 50,
            poly: PolynomialSpec::new(1).unwrap(),
            feature_spec: spec_with(vec![FeatureId::new(SeriesKind::Power, 0)]),
            night_threshold: 1e-4,
            levels: vec![0.25, 0.5, 0.75],
            coefficients: vec![vec![0.2, 0.1]; 3],
        };
        assert_eq!(model.predict(&[0.5], true).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn predict_rejects_wrong_width() {
        let model = QuantileModelSet {
            household: HouseholdId::new("h"),
            k_nn: 50,
            poly: PolynomialSpec::new(1).unwrap(),
            feature_spec: spec_with(vec![FeatureId::new(SeriesKind::Power, 0)]),
            night_threshold: 1e-4,
            levels: vec![0.5],
            coefficients: vec![vec![0.2, 0.1]],
        };
        assert!(matches!(
            model.predict(&[0.5, 0.6], false),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn random_coefficients_predict_monotone_after_correction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let grid = default_quantile_grid();
        let coefficients: Vec<Vec<f64>> = (0..grid.len())
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let model = QuantileModelSet {
            household: HouseholdId::new("h"),
            k_nn: 100,
            poly: PolynomialSpec::new(2).unwrap(),
            feature_spec: spec_with(vec![FeatureId::new(SeriesKind::Power, 0)]),
            night_threshold: 1e-4,
            levels: grid,
            coefficients,
        };
        for _ in 0..1000 {
            let x = [rng.random_range(0.0..1.0)];
            let out = model.predict(&x, false).unwrap();
            assert!(out[0] >= 0.0);
            assert!(out.windows(2).all(|p| p[0] <= p[1]));
        }
    }

    #[test]
    fn model_json_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let model = QuantileModelSet {
            household: HouseholdId::new("h42"),
            k_nn: 70,
            poly: PolynomialSpec::new(3).unwrap(),
            feature_spec: spec_with(vec![
                FeatureId::new(SeriesKind::RollingMax, 0),
                FeatureId::new(SeriesKind::Power, 17),
            ]),
            night_threshold: 1e-4,
            levels: default_quantile_grid(),
            coefficients: (0..99)
                .map(|_| (0..7).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect(),
        };
        let path_a = dir.path().join("a.json");
        let path_b = dir.path().join("b.json");
        model.save(&path_a).unwrap();
        let loaded = QuantileModelSet::load(&path_a).unwrap();
        loaded.save(&path_b).unwrap();
        let bytes_a = std::fs::read(&path_a).unwrap();
        let bytes_b = std::fs::read(&path_b).unwrap();
        assert_eq!(bytes_a, bytes_b, "save -> load -> save must be stable");
        assert_eq!(loaded.coefficients, model.coefficients);
    }

    #[test]
    fn forward_select_finds_signal_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 300;
        let signal: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let noise_cols: Vec<Vec<f64>> = (0..9)
            .map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = signal
            .iter()
            .map(|s| 3.0 * s + rng.random_range(-0.01..0.01))
            .collect();
        let column = |c: usize| -> Vec<f64> {
            if c == 0 {
                signal.clone()
            } else {
                noise_cols[c - 1].clone()
            }
        };
        let scorer = holdout_mse_scorer(PolynomialSpec::new(1).unwrap(), 0.2);
        let result = forward_select(10, column, &y, 1, &scorer).unwrap();
        assert_eq!(result.chosen, vec![0]);

        // Exhaustive single-feature oracle must agree with the greedy pick.
        let oracle_best = (0..10)
            .map(|c| {
                let col = column(c);
                let x = Array2::from_shape_vec((n, 1), col).unwrap();
                (c, scorer(&x.view(), &y).unwrap())
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        assert_eq!(oracle_best, 0);
    }

    #[test]
    fn forward_select_takes_whole_pool_when_asked() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 120;
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| cols[0][i] + 0.5 * cols[1][i] + 0.25 * cols[2][i])
            .collect();
        let scorer = holdout_mse_scorer(PolynomialSpec::new(1).unwrap(), 0.2);
        let result = forward_select(3, |c| cols[c].clone(), &y, 3, &scorer).unwrap();
        let mut chosen = result.chosen.clone();
        chosen.sort_unstable();
        assert_eq!(chosen, vec![0, 1, 2]);
        assert!(result
            .score_trace
            .windows(2)
            .all(|p| p[1] <= p[0] + 1e-12));
    }

    #[test]
    fn forward_select_is_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 150;
        let cols: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| cols[2][i] + 0.3 * cols[5][i] + rng.random_range(-0.05..0.05))
            .collect();
        let scorer = holdout_mse_scorer(PolynomialSpec::new(2).unwrap(), 0.2);
        let a = forward_select(8, |c| cols[c].clone(), &y, 3, &scorer).unwrap();
        let b = forward_select(8, |c| cols[c].clone(), &y, 3, &scorer).unwrap();
        assert_eq!(a.chosen, b.chosen);
        assert_eq!(a.score_trace, b.score_trace);
    }

    #[test]
    fn duplicate_candidates_break_ties_toward_lower_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 200;
        let signal: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = signal.iter().map(|s| 2.0 * s).collect();
        // Candidates 1 and 3 are identical copies of the signal.
        let cols: Vec<Vec<f64>> = vec![
            (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
            signal.clone(),
            (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
            signal.clone(),
        ];
        let scorer = holdout_mse_scorer(PolynomialSpec::new(1).unwrap(), 0.2);
        let result = forward_select(4, |c| cols[c].clone(), &y, 1, &scorer).unwrap();
        assert_eq!(result.chosen, vec![1], "lower index of the duplicate pair");
    }
}
