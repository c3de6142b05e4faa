//! Table- and curve-shaped CSV exports built from evaluation reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};

use knnq_core::evaluation::{aggregate, EvalReport};

type GroupKey = (String, usize);

/// Per-(technique, k_nn) means across households for every level and
/// coverage: `(level, mean signed reliability deviation, mean pinball)`.
struct GroupCurves {
    quantile: Vec<(f64, f64, f64)>,
    interval: Vec<(f64, f64, f64)>,
}

fn group_curves(reports: &[EvalReport]) -> Result<BTreeMap<GroupKey, GroupCurves>> {
    let mut groups: BTreeMap<GroupKey, Vec<&EvalReport>> = BTreeMap::new();
    for report in reports {
        groups
            .entry((report.technique.clone(), report.k_nn))
            .or_default()
            .push(report);
    }
    let mut out = BTreeMap::new();
    for (key, members) in groups {
        let first = members[0];
        for member in &members {
            if member.per_quantile.len() != first.per_quantile.len()
                || member.per_interval.len() != first.per_interval.len()
            {
                bail!("evaluation reports disagree on the level grid");
            }
        }
        let n = members.len() as f64;
        let quantile = (0..first.per_quantile.len())
            .map(|qi| {
                let level = first.per_quantile[qi].level;
                let dev: f64 = members
                    .iter()
                    .map(|m| m.per_quantile[qi].reliability_deviation)
                    .sum::<f64>()
                    / n;
                let pinball: f64 =
                    members.iter().map(|m| m.per_quantile[qi].pinball).sum::<f64>() / n;
                (level, dev, pinball)
            })
            .collect();
        let interval = (0..first.per_interval.len())
            .map(|ci| {
                let coverage = first.per_interval[ci].coverage;
                let dev: f64 = members
                    .iter()
                    .map(|m| m.per_interval[ci].reliability_deviation)
                    .sum::<f64>()
                    / n;
                let pinball: f64 =
                    members.iter().map(|m| m.per_interval[ci].pinball).sum::<f64>() / n;
                (coverage, dev, pinball)
            })
            .collect();
        out.insert(key, GroupCurves { quantile, interval });
    }
    Ok(out)
}

/// Long-form aggregate metrics in percent: `technique, k_nn, metric,
/// value_percent`.
pub fn write_summary_csv(reports: &[EvalReport], path: &Path) -> Result<()> {
    let entries = aggregate(reports)?;
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["technique", "k_nn", "metric", "value_percent"])?;
    for entry in &entries {
        let rows = [
            ("quantile_reliability", entry.quantile_reliability_pct),
            ("quantile_pinball", entry.quantile_pinball_pct),
            ("interval_reliability", entry.interval_reliability_pct),
            ("interval_pinball", entry.interval_pinball_pct),
            (
                "interval_signed_reliability",
                entry.interval_signed_reliability_pct,
            ),
        ];
        for (metric, value) in rows {
            writer.write_record([
                entry.technique.clone(),
                entry.k_nn.to_string(),
                metric.to_string(),
                format!("{value}"),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Per-level means across households: `technique, k_nn, kind,
/// level_or_coverage, metric, value`.
pub fn write_levels_csv(reports: &[EvalReport], path: &Path) -> Result<()> {
    let groups = group_curves(reports)?;
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "technique",
        "k_nn",
        "kind",
        "level_or_coverage",
        "metric",
        "value",
    ])?;
    for ((technique, k_nn), curves) in &groups {
        for &(level, dev, pinball) in &curves.quantile {
            for (metric, value) in [("reliability_deviation", dev), ("pinball", pinball)] {
                writer.write_record([
                    technique.clone(),
                    k_nn.to_string(),
                    "quantile".into(),
                    format!("{level}"),
                    metric.into(),
                    format!("{value}"),
                ])?;
            }
        }
        for &(coverage, dev, pinball) in &curves.interval {
            for (metric, value) in [("reliability_deviation", dev), ("pinball", pinball)] {
                writer.write_record([
                    technique.clone(),
                    k_nn.to_string(),
                    "interval".into(),
                    format!("{coverage:.2}"),
                    metric.into(),
                    format!("{value}"),
                ])?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

/// The four summary tables: rows per k_nn, one column per technique,
/// values in percent with two decimals.
pub fn write_tables(reports: &[EvalReport], dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = aggregate(reports)?;
    let mut techniques: Vec<String> = entries.iter().map(|e| e.technique.clone()).collect();
    techniques.sort();
    techniques.dedup();
    let mut knn: Vec<usize> = entries.iter().map(|e| e.k_nn).collect();
    knn.sort_unstable();
    knn.dedup();
    let cell = |technique: &str, k: usize| -> Option<&knnq_core::evaluation::SummaryEntry> {
        entries
            .iter()
            .find(|e| e.technique == technique && e.k_nn == k)
    };

    let tables: [(&str, &dyn Fn(&knnq_core::evaluation::SummaryEntry) -> f64); 4] = [
        ("table1_quantile_reliability.csv", &|e| {
            e.quantile_reliability_pct
        }),
        ("table2_quantile_pinball.csv", &|e| e.quantile_pinball_pct),
        ("table3_interval_reliability.csv", &|e| {
            e.interval_reliability_pct
        }),
        ("table4_interval_pinball.csv", &|e| e.interval_pinball_pct),
    ];

    let mut files = Vec::new();
    for (name, getter) in tables {
        let path = dir.join(name);
        let mut writer = csv::Writer::from_path(&path)?;
        let mut header = vec!["knn".to_string()];
        header.extend(techniques.iter().cloned());
        writer.write_record(&header)?;
        for &k in &knn {
            let mut record = vec![k.to_string()];
            for technique in &techniques {
                match cell(technique, k) {
                    Some(entry) => record.push(format!("{:.2}", getter(entry))),
                    None => record.push(String::new()),
                }
            }
            writer.write_record(&record)?;
        }
        writer.flush()?;
        files.push(path);
    }
    Ok(files)
}

/// Plot-data curves: signed reliability deviation per nominal level and
/// interval metrics per nominal coverage.
pub fn write_curves(reports: &[EvalReport], dir: &Path) -> Result<Vec<PathBuf>> {
    let groups = group_curves(reports)?;
    let specs: [(&str, bool, usize); 3] = [
        ("curve_quantile_reliability.csv", true, 1),
        ("curve_interval_reliability.csv", false, 1),
        ("curve_interval_pinball.csv", false, 2),
    ];
    let mut files = Vec::new();
    for (name, is_quantile, field) in specs {
        let path = dir.join(name);
        let mut writer = csv::Writer::from_path(&path)?;
        writer.write_record([
            "technique",
            "k_nn",
            if is_quantile { "level" } else { "coverage" },
            "value",
        ])?;
        for ((technique, k_nn), curves) in &groups {
            let rows = if is_quantile {
                &curves.quantile
            } else {
                &curves.interval
            };
            for &(level, dev, pinball) in rows {
                let value = if field == 1 { dev } else { pinball };
                writer.write_record([
                    technique.clone(),
                    k_nn.to_string(),
                    format!("{level}"),
                    format!("{value}"),
                ])?;
            }
        }
        writer.flush()?;
        files.push(path);
    }
    Ok(files)
}
