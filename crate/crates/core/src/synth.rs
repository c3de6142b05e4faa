//! Deterministic generation of PV-like sample data.
//!
//! Produces raw household generation series with a seasonal daylight
//! window, day-to-day weather persistence, intraday cloud noise and
//! optional fixed shading dips. Used by the CLI's `synth` subcommand,
//! the test suites and the benchmarks; the same seed always yields the
//! same bytes.

use chrono::NaiveDateTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{HouseholdId, TimeSeriesFrame};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub households: usize,
    pub days: usize,
    pub resolution_minutes: u32,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            households: 5,
            days: 1096,
            resolution_minutes: 15,
            seed: 7,
        }
    }
}

const START: &str = "2010-07-01T00:00:00";

/// Generate one raw (unnormalized) frame per household.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<TimeSeriesFrame>> {
    let start = NaiveDateTime::parse_from_str(START, "%Y-%m-%dT%H:%M:%S")
        .expect("static timestamp parses");
    let slots_per_day = (24 * 60 / cfg.resolution_minutes) as usize;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut frames = Vec::with_capacity(cfg.households);
    for h in 0..cfg.households {
        let mut rng = ChaCha8Rng::seed_from_u64(
            cfg.seed ^ (h as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let capacity = rng.random_range(2.0..6.0);
        // Some roofs see a fixed afternoon obstruction.
        let shaded = rng.random_bool(0.4);
        let shade_center = rng.random_range(13.0..16.5);
        let shade_depth = if shaded { rng.random_range(0.1..0.35) } else { 0.0 };

        let mut amplitude = rng.random_range(0.5..1.0);
        let mut cloud = rng.random_range(0.0..0.5);
        let mut values = Vec::with_capacity(cfg.days * slots_per_day);
        for day in 0..cfg.days {
            // Day-to-day weather persistence.
            let eps: f64 = normal.sample(&mut rng);
            amplitude = (0.75 * amplitude + 0.25 * 0.8 + 0.18 * eps).clamp(0.1, 1.0);
            // Seasonal daylight window, phase chosen so day one is midwinter.
            let day_length = 12.0 + 2.0 * (std::f64::consts::TAU * (day as f64 - 91.0) / 365.25).sin();
            let sunrise = 12.0 - day_length / 2.0;
            let sunset = 12.0 + day_length / 2.0;
            for slot in 0..slots_per_day {
                let t = (slot as f64 + 0.5) * cfg.resolution_minutes as f64 / 60.0;
                let eps: f64 = normal.sample(&mut rng);
                cloud = (0.85 * cloud + 0.15 * (1.0 - amplitude) + 0.10 * eps).clamp(0.0, 1.0);
                if t <= sunrise || t >= sunset {
                    values.push(0.0);
                    continue;
                }
                let bell = (std::f64::consts::PI * (t - sunrise) / day_length).sin();
                let transmitted = 1.0 - 0.9 * cloud;
                let shade =
                    1.0 - shade_depth * (-((t - shade_center).powi(2)) / 0.5).exp();
                let value = capacity * bell * amplitude * transmitted * shade;
                values.push(value.max(0.0));
            }
        }
        frames.push(TimeSeriesFrame::new(
            HouseholdId::new(format!("h{:02}", h + 1)),
            start,
            cfg.resolution_minutes,
            values,
        )?);
    }
    Ok(frames)
}

/// Write frames as a wide CSV (`timestamp, h01, h02, ...`) suitable for
/// the ingest stage. All frames must share start, length and resolution.
pub fn write_wide_csv(
    frames: &[TimeSeriesFrame],
    path: impl AsRef<std::path::Path>,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec!["timestamp".to_string()];
    header.extend(frames.iter().map(|f| f.household().to_string()));
    writer.write_record(&header)?;
    let len = frames.first().map_or(0, |f| f.len());
    for i in 0..len {
        let mut record =
            vec![frames[0].timestamp(i).format("%Y-%m-%dT%H:%M:%S").to_string()];
        for frame in frames {
            record.push(format!("{}", frame.values()[i]));
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
