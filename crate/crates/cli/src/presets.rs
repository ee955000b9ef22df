//! Calibrated parameter sets for the figure presets.

use duality_core::{DetectorPair, ExperimentConfig, LossPair, ModelKind};

use crate::args::Figure;

const Q_MEASURED: (f64, f64) = (0.904, 0.908);

pub fn figure_model(figure: Figure) -> ModelKind {
    match figure {
        Figure::Two => ModelKind::Config1Inside,
        Figure::Three => ModelKind::Config1Outside,
        Figure::FiveA | Figure::FiveB => ModelKind::Config2Inside,
        Figure::Six => ModelKind::Config2Outside,
    }
}

/// Configuration with the filters in place.
pub fn figure_config(figure: Figure) -> ExperimentConfig {
    let ((l1, l2), v0) = match figure {
        Figure::Two | Figure::Three => ((0.727, 0.396), 0.992),
        Figure::FiveA | Figure::FiveB => ((0.764, 0.505), 0.990),
        Figure::Six => ((0.735, 0.434), 0.990),
    };
    let losses = LossPair::new(l1, l2).expect("preset losses are valid");
    let eff = DetectorPair::new(Q_MEASURED.0, Q_MEASURED.1).expect("preset efficiencies are valid");
    ExperimentConfig::for_model(figure_model(figure), losses, eff, v0).expect("preset is valid")
}

/// The same setup without filters.
pub fn figure_baseline(figure: Figure) -> ExperimentConfig {
    figure_config(figure)
        .with_losses(LossPair::NONE)
        .expect("lossless preset is valid")
}
