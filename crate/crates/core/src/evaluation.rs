//! Reliability and pinball scoring of quantile and interval forecasts.
//!
//! Reliability deviation is actual minus nominal coverage: a quantile
//! counts a hit when the truth lies strictly below it, an interval when
//! the truth lies in `[lower, upper)`. Pinball losses additionally weight
//! the size of each miss.

use serde::{Deserialize, Serialize};

use crate::dataset::HouseholdId;
use crate::error::{Error, Result};

/// Round a level to the centi-grid; the level grid is handled in hundredths.
fn centi(level: f64) -> i32 {
    (level * 100.0).round() as i32
}

/// Fraction of truths strictly below the prediction, minus the nominal
/// level. Negative values mean the quantile sits too low.
pub fn reliability_deviation_quantile(y: &[f64], pred: &[f64], q: f64) -> Result<f64> {
    check_pair(y, pred)?;
    let hits = y.iter().zip(pred).filter(|(t, p)| t < p).count();
    Ok(hits as f64 / y.len() as f64 - q)
}

/// Mean pinball loss of a single quantile regression.
pub fn pinball_quantile(y: &[f64], pred: &[f64], q: f64) -> Result<f64> {
    check_pair(y, pred)?;
    let sum: f64 = y
        .iter()
        .zip(pred)
        .map(|(&t, &p)| {
            let indicator = if t < p { 1.0 } else { 0.0 };
            (t - p) * (q - indicator)
        })
        .sum();
    Ok(sum / y.len() as f64)
}

/// A pair of quantile regressions forming a central interval.
#[derive(Debug, Clone)]
pub struct IntervalPair {
    pub upper_level: f64,
    pub lower_level: f64,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

impl IntervalPair {
    pub fn nominal_coverage(&self) -> f64 {
        self.upper_level - self.lower_level
    }

    fn is_symmetric(&self) -> bool {
        centi(self.upper_level) == 100 - centi(self.lower_level)
    }
}

/// Fraction of truths inside `[lower, upper)` minus the nominal coverage.
pub fn reliability_deviation_interval(y: &[f64], pair: &IntervalPair) -> Result<f64> {
    check_pair(y, &pair.upper)?;
    check_pair(y, &pair.lower)?;
    let hits = y
        .iter()
        .enumerate()
        .filter(|(n, &t)| pair.lower[*n] <= t && t < pair.upper[*n])
        .count();
    Ok(hits as f64 / y.len() as f64 - pair.nominal_coverage())
}

/// Interval pinball loss: mean width plus weighted outside deviations.
/// Requires the symmetric-level condition `q_u = 1 - q_l`.
pub fn pinball_interval(y: &[f64], pair: &IntervalPair) -> Result<f64> {
    if !pair.is_symmetric() {
        return Err(Error::AsymmetricInterval {
            upper: pair.upper_level,
            lower: pair.lower_level,
        });
    }
    check_pair(y, &pair.upper)?;
    check_pair(y, &pair.lower)?;
    let penalty = 2.0 / (1.0 - pair.nominal_coverage());
    let sum: f64 = y
        .iter()
        .enumerate()
        .map(|(n, &t)| {
            let (u, l) = (pair.upper[n], pair.lower[n]);
            let mut loss = u - l;
            if t > u {
                loss += penalty * (t - u);
            }
            if t < l {
                loss += penalty * (l - t);
            }
            loss
        })
        .sum();
    Ok(sum / y.len() as f64)
}

fn check_pair(y: &[f64], pred: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::EmptyInput("evaluation pairs"));
    }
    if y.len() != pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            actual: pred.len(),
        });
    }
    Ok(())
}

/// Combine a full prediction grid into the 49 central intervals
/// (0.51, 0.49) through (0.99, 0.01), nominal coverages 0.02 to 0.98.
pub fn build_intervals(levels: &[f64], predictions: &[Vec<f64>]) -> Result<Vec<IntervalPair>> {
    if levels.len() != predictions.len() {
        return Err(Error::DimensionMismatch {
            expected: levels.len(),
            actual: predictions.len(),
        });
    }
    let index_of = |centi_level: i32| -> Option<usize> {
        levels.iter().position(|&l| centi(l) == centi_level)
    };
    let mut pairs = Vec::with_capacity(49);
    for step in 1..=49 {
        let upper_c = 50 + step;
        let lower_c = 50 - step;
        let ui = index_of(upper_c).ok_or(Error::IncompleteGrid {
            missing: upper_c as f64 / 100.0,
        })?;
        let li = index_of(lower_c).ok_or(Error::IncompleteGrid {
            missing: lower_c as f64 / 100.0,
        })?;
        pairs.push(IntervalPair {
            upper_level: levels[ui],
            lower_level: levels[li],
            upper: predictions[ui].clone(),
            lower: predictions[li].clone(),
        });
    }
    Ok(pairs)
}

/// Metrics for one quantile level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub level: f64,
    pub reliability_deviation: f64,
    pub pinball: f64,
}

/// Metrics for one central interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageMetrics {
    pub coverage: f64,
    pub reliability_deviation: f64,
    pub pinball: f64,
}

/// Full evaluation of one (household, technique, k_nn) model set on the
/// day pairs of a test set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub household: HouseholdId,
    pub technique: String,
    pub k_nn: usize,
    pub day_pairs: usize,
    pub per_quantile: Vec<LevelMetrics>,
    pub per_interval: Vec<CoverageMetrics>,
    pub mean_abs_reliability: f64,
    pub mean_pinball: f64,
    pub mean_abs_interval_reliability: f64,
    pub mean_interval_pinball: f64,
    pub mean_signed_interval_reliability: f64,
}

impl EvalReport {
    /// Score predictions (one vector per grid level) against the truths.
    pub fn from_predictions(
        household: HouseholdId,
        technique: impl Into<String>,
        k_nn: usize,
        levels: &[f64],
        predictions: &[Vec<f64>],
        y: &[f64],
    ) -> Result<EvalReport> {
        if levels.len() != predictions.len() {
            return Err(Error::DimensionMismatch {
                expected: levels.len(),
                actual: predictions.len(),
            });
        }
        let mut per_quantile = Vec::with_capacity(levels.len());
        for (qi, &level) in levels.iter().enumerate() {
            per_quantile.push(LevelMetrics {
                level,
                reliability_deviation: reliability_deviation_quantile(
                    y,
                    &predictions[qi],
                    level,
                )?,
                pinball: pinball_quantile(y, &predictions[qi], level)?,
            });
        }
        // Interval metrics need the full standard grid 0.01..0.99.
        let standard_grid = levels.len() == 99
            && levels
                .iter()
                .enumerate()
                .all(|(i, &l)| centi(l) == i as i32 + 1);
        let mut per_interval = Vec::new();
        if standard_grid {
            for pair in build_intervals(levels, predictions)? {
                per_interval.push(CoverageMetrics {
                    coverage: pair.nominal_coverage(),
                    reliability_deviation: reliability_deviation_interval(y, &pair)?,
                    pinball: pinball_interval(y, &pair)?,
                });
            }
        }
        Ok(EvalReport::assemble(
            household,
            technique.into(),
            k_nn,
            y.len(),
            per_quantile,
            per_interval,
        ))
    }

    fn assemble(
        household: HouseholdId,
        technique: String,
        k_nn: usize,
        day_pairs: usize,
        per_quantile: Vec<LevelMetrics>,
        per_interval: Vec<CoverageMetrics>,
    ) -> EvalReport {
        let mean = |it: &mut dyn Iterator<Item = f64>| -> f64 {
            let mut sum = 0.0;
            let mut count = 0usize;
            for v in it {
                sum += v;
                count += 1;
            }
            if count == 0 {
                0.0
            } else {
                sum / count as f64
            }
        };
        let mean_abs_reliability =
            mean(&mut per_quantile.iter().map(|m| m.reliability_deviation.abs()));
        let mean_pinball = mean(&mut per_quantile.iter().map(|m| m.pinball));
        let mean_abs_interval_reliability =
            mean(&mut per_interval.iter().map(|m| m.reliability_deviation.abs()));
        let mean_interval_pinball = mean(&mut per_interval.iter().map(|m| m.pinball));
        let mean_signed_interval_reliability =
            mean(&mut per_interval.iter().map(|m| m.reliability_deviation));
        EvalReport {
            household,
            technique,
            k_nn,
            day_pairs,
            per_quantile,
            per_interval,
            mean_abs_reliability,
            mean_pinball,
            mean_abs_interval_reliability,
            mean_interval_pinball,
            mean_signed_interval_reliability,
        }
    }
}

/// One cell of the summary tables: a technique / k_nn combination
/// averaged over households and levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub technique: String,
    pub k_nn: usize,
    /// Mean |reliability deviation| over (household, level), percent.
    pub quantile_reliability_pct: f64,
    /// Mean pinball loss over (household, level), percent.
    pub quantile_pinball_pct: f64,
    /// Mean |reliability deviation| over (household, coverage), percent.
    pub interval_reliability_pct: f64,
    /// Mean interval pinball over (household, coverage), percent.
    pub interval_pinball_pct: f64,
    /// Mean signed interval deviation over (household, coverage), percent.
    pub interval_signed_reliability_pct: f64,
    pub households: usize,
}

/// Average reports over households, per (technique, k_nn), into the
/// shape of the summary tables. Entries come back sorted.
pub fn aggregate(reports: &[EvalReport]) -> Result<Vec<SummaryEntry>> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("evaluation reports"));
    }
    let mut groups: std::collections::BTreeMap<(String, usize), Vec<&EvalReport>> =
        std::collections::BTreeMap::new();
    for report in reports {
        groups
            .entry((report.technique.clone(), report.k_nn))
            .or_default()
            .push(report);
    }
    let mut entries = Vec::with_capacity(groups.len());
    for ((technique, k_nn), group) in groups {
        let cell = |f: &dyn Fn(&EvalReport) -> (f64, usize)| -> f64 {
            let mut sum = 0.0;
            let mut count = 0usize;
            for report in &group {
                let (s, c) = f(report);
                sum += s;
                count += c;
            }
            if count == 0 {
                0.0
            } else {
                100.0 * sum / count as f64
            }
        };
        entries.push(SummaryEntry {
            technique,
            k_nn,
            quantile_reliability_pct: cell(&|r| {
                (
                    r.per_quantile
                        .iter()
                        .map(|m| m.reliability_deviation.abs())
                        .sum(),
                    r.per_quantile.len(),
                )
            }),
            quantile_pinball_pct: cell(&|r| {
                (r.per_quantile.iter().map(|m| m.pinball).sum(), r.per_quantile.len())
            }),
            interval_reliability_pct: cell(&|r| {
                (
                    r.per_interval
                        .iter()
                        .map(|m| m.reliability_deviation.abs())
                        .sum(),
                    r.per_interval.len(),
                )
            }),
            interval_pinball_pct: cell(&|r| {
                (r.per_interval.iter().map(|m| m.pinball).sum(), r.per_interval.len())
            }),
            interval_signed_reliability_pct: cell(&|r| {
                (
                    r.per_interval.iter().map(|m| m.reliability_deviation).sum(),
                    r.per_interval.len(),
                )
            }),
            households: group.len(),
        });
    }
    Ok(entries)
}
