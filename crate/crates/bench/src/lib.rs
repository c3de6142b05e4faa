//! Shared fixtures for the benchmark targets.

use knnq_core::dataset::normalize;
use knnq_core::features::{night_mask, FeatureBuilder, FeatureId, FeatureSpec, LearningSet, SeriesKind};
use knnq_core::synth::{generate, SynthConfig};

/// Day-only learning pairs of one generated household, sized for quick
/// benchmark iterations.
pub fn benchmark_learning_set(days: usize) -> LearningSet {
    let cfg = SynthConfig {
        households: 1,
        days,
        ..SynthConfig::default()
    };
    let frame = normalize(&generate(&cfg).expect("generation succeeds")[0])
        .expect("normalization succeeds");
    let spec = FeatureSpec {
        selected: vec![
            FeatureId::new(SeriesKind::RollingMax, 0),
            FeatureId::new(SeriesKind::RollingMean, 0),
            FeatureId::new(SeriesKind::Power, 0),
            FeatureId::new(SeriesKind::Power, 96),
        ],
        ..FeatureSpec::default()
    };
    let builder = FeatureBuilder::new(&frame, &spec).expect("valid spec");
    let set = builder.assemble().expect("non-empty learning set");
    let mask = night_mask(&frame, &set, spec.period, 1e-4);
    set.subset(&mask.day_indices())
}
