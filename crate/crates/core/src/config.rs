//! Experiment configuration and the duality data point.

use serde::{Deserialize, Serialize};

use crate::error::{DualityError, Result};
use crate::optics::{DetectorPair, LossPair, SplitRatio};

/// Which element of the interferometer is the variable beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// Variable splitter at the input, fixed 50/50 merger.
    SplitterVariable,
    /// Fixed 50/50 splitter at the input, variable merger.
    MergerVariable,
}

/// Where the absorptive filters sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossPlacement {
    None,
    /// In the two arms, between splitter and merger.
    Inside,
    /// After the merger, in front of the detectors.
    Outside,
}

/// The four analytic models, one per layout and loss placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Config1Inside,
    Config1Outside,
    Config2Inside,
    Config2Outside,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Config1Inside,
        ModelKind::Config1Outside,
        ModelKind::Config2Inside,
        ModelKind::Config2Outside,
    ];

    pub fn layout(self) -> Layout {
        match self {
            ModelKind::Config1Inside | ModelKind::Config1Outside => Layout::SplitterVariable,
            ModelKind::Config2Inside | ModelKind::Config2Outside => Layout::MergerVariable,
        }
    }

    pub fn placement(self) -> LossPlacement {
        match self {
            ModelKind::Config1Inside | ModelKind::Config2Inside => LossPlacement::Inside,
            ModelKind::Config1Outside | ModelKind::Config2Outside => LossPlacement::Outside,
        }
    }

    /// Whether the model reports separate visibilities per detector.
    pub fn has_two_visibilities(self) -> bool {
        self == ModelKind::Config2Inside
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Config1Inside => "config1-inside",
            ModelKind::Config1Outside => "config1-outside",
            ModelKind::Config2Inside => "config2-inside",
            ModelKind::Config2Outside => "config2-outside",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = DualityError;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| DualityError::ConfigMismatch(format!("unknown model `{s}`")))
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// R-independent parameters of one experimental run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct ExperimentConfig {
    layout: Layout,
    loss_placement: LossPlacement,
    losses: LossPair,
    efficiencies: DetectorPair,
    v0: f64,
}

#[derive(Deserialize)]
struct RawConfig {
    layout: Layout,
    loss_placement: LossPlacement,
    losses: LossPair,
    efficiencies: DetectorPair,
    v0: f64,
}

impl TryFrom<RawConfig> for ExperimentConfig {
    type Error = DualityError;
    fn try_from(raw: RawConfig) -> Result<Self> {
        ExperimentConfig::new(
            raw.layout,
            raw.loss_placement,
            raw.losses,
            raw.efficiencies,
            raw.v0,
        )
    }
}

impl ExperimentConfig {
    pub fn new(
        layout: Layout,
        loss_placement: LossPlacement,
        losses: LossPair,
        efficiencies: DetectorPair,
        v0: f64,
    ) -> Result<Self> {
        if !(v0.is_finite() && (0.0..=1.0).contains(&v0)) {
            return Err(DualityError::InvalidParameter {
                name: "v0",
                value: v0,
                reason: "must lie in [0, 1]",
            });
        }
        if loss_placement == LossPlacement::None && !losses.is_lossless() {
            return Err(DualityError::ConfigMismatch(
                "loss placement `none` requires zero losses".into(),
            ));
        }
        Ok(ExperimentConfig {
            layout,
            loss_placement,
            losses,
            efficiencies,
            v0,
        })
    }

    /// Ideal lossless interferometer of the given layout.
    pub fn ideal(layout: Layout) -> Self {
        ExperimentConfig {
            layout,
            loss_placement: LossPlacement::None,
            losses: LossPair::NONE,
            efficiencies: DetectorPair::IDEAL,
            v0: 1.0,
        }
    }

    /// Configuration for one of the four models.
    pub fn for_model(
        model: ModelKind,
        losses: LossPair,
        efficiencies: DetectorPair,
        v0: f64,
    ) -> Result<Self> {
        ExperimentConfig::new(model.layout(), model.placement(), losses, efficiencies, v0)
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn loss_placement(&self) -> LossPlacement {
        self.loss_placement
    }

    pub fn losses(&self) -> LossPair {
        self.losses
    }

    pub fn efficiencies(&self) -> DetectorPair {
        self.efficiencies
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    /// Analytic model matching this configuration. Lossless runs use the
    /// inside-loss formulas, which reduce to the ideal interferometer.
    pub fn model(&self) -> ModelKind {
        match (self.layout, self.loss_placement) {
            (Layout::SplitterVariable, LossPlacement::Outside) => ModelKind::Config1Outside,
            (Layout::SplitterVariable, _) => ModelKind::Config1Inside,
            (Layout::MergerVariable, LossPlacement::Outside) => ModelKind::Config2Outside,
            (Layout::MergerVariable, _) => ModelKind::Config2Inside,
        }
    }

    /// Losses applied inside the arms.
    pub fn inside_losses(&self) -> LossPair {
        match self.loss_placement {
            LossPlacement::Inside => self.losses,
            _ => LossPair::NONE,
        }
    }

    /// Losses applied in front of the detectors.
    pub fn outside_losses(&self) -> LossPair {
        match self.loss_placement {
            LossPlacement::Outside => self.losses,
            _ => LossPair::NONE,
        }
    }

    /// Paths and detectors exchanged: L1<->L2 and Q1<->Q2.
    pub fn swapped(&self) -> Self {
        ExperimentConfig {
            losses: self.losses.swapped(),
            efficiencies: self.efficiencies.swapped(),
            ..*self
        }
    }

    pub fn with_losses(&self, losses: LossPair) -> Result<Self> {
        ExperimentConfig::new(
            self.layout,
            self.loss_placement,
            losses,
            self.efficiencies,
            self.v0,
        )
    }

    pub fn with_efficiencies(&self, efficiencies: DetectorPair) -> Self {
        ExperimentConfig {
            efficiencies,
            ..*self
        }
    }

    pub fn with_v0(&self, v0: f64) -> Result<Self> {
        ExperimentConfig::new(
            self.layout,
            self.loss_placement,
            self.losses,
            self.efficiencies,
            v0,
        )
    }
}

/// How a [`DualityPoint`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Analytic,
    Protocol,
    MonteCarlo,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Analytic => "analytic",
            Source::Protocol => "protocol",
            Source::MonteCarlo => "monte-carlo",
        }
    }
}

impl std::str::FromStr for Source {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "analytic" => Ok(Source::Analytic),
            "protocol" => Ok(Source::Protocol),
            "monte-carlo" => Ok(Source::MonteCarlo),
            other => Err(format!("unknown source `{other}`")),
        }
    }
}

/// Predictability, visibility and `P^2 + V^2` at one ratio.
///
/// Layouts with a single visibility store it in both `v1` and `v2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityPoint {
    pub r: f64,
    pub p: f64,
    pub v1: f64,
    pub v2: f64,
    pub source: Source,
}

impl DualityPoint {
    pub fn new(r: f64, p: f64, v1: f64, v2: f64, source: Source) -> Self {
        DualityPoint {
            r,
            p,
            v1,
            v2,
            source,
        }
    }

    pub fn single(r: f64, p: f64, v: f64, source: Source) -> Self {
        DualityPoint::new(r, p, v, v, source)
    }

    /// Visibility at detector 1.
    pub fn v(&self) -> f64 {
        self.v1
    }

    pub fn duality1(&self) -> f64 {
        self.p * self.p + self.v1 * self.v1
    }

    pub fn duality2(&self) -> f64 {
        self.p * self.p + self.v2 * self.v2
    }

    /// `P^2 + V^2` using detector 1's visibility.
    pub fn duality(&self) -> f64 {
        self.duality1()
    }

    pub fn ratio(&self) -> SplitRatio {
        SplitRatio::new(self.r).expect("duality point ratio in [0, 1]")
    }
}
