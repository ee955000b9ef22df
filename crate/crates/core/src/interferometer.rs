//! The element pipeline shared by the coherent-beam protocols and the
//! photon Monte Carlo.
//!
//! Splitter-variable layout: VBS(r), arm losses, phase, 50/50 merger.
//! Merger-variable layout: 50/50 splitter, arm losses, phase, VBS(r).
//! Outside losses act as extra detector efficiency factors.

use crate::analytic::predictability;
use crate::config::{ExperimentConfig, Layout};
use crate::error::{DualityError, Result};
use crate::optics::{Arm, DetectorPair, Readings, SplitRatio, TwoModeField};

/// Output of one phase setting for unit input power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// Registered intensities.
    pub readings: Readings,
    /// Intensities reaching the detector faces, before outside losses.
    pub arriving: Readings,
    /// Power removed by filters and detector inefficiency.
    pub absorbed: f64,
}

/// One which-way run: raw detector readings and the normalized weights
/// `reading / Q^2` that enter the predictability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhichWayRun {
    pub raw: Readings,
    pub weights: (f64, f64),
}

impl WhichWayRun {
    pub fn predictability(&self) -> Result<f64> {
        predictability(self.weights.0, self.weights.1)
    }

    /// Weights normalized to sum to 1.
    pub fn normalized(&self) -> Result<(f64, f64)> {
        let sum = self.weights.0 + self.weights.1;
        if sum <= 0.0 {
            return Err(DualityError::degenerate("which-way run detected no light"));
        }
        Ok((self.weights.0 / sum, self.weights.1 / sum))
    }
}

/// Which-way measurement for either layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WhichWay {
    /// Merger bypassed; arm k goes straight to detector k.
    Bypass(WhichWayRun),
    /// One arm blocked at a time, merger in place.
    Blocked {
        arm2_open: WhichWayRun,
        arm1_open: WhichWayRun,
    },
}

impl WhichWay {
    pub fn runs(&self) -> Vec<WhichWayRun> {
        match *self {
            WhichWay::Bypass(run) => vec![run],
            WhichWay::Blocked {
                arm2_open,
                arm1_open,
            } => vec![arm2_open, arm1_open],
        }
    }

    /// Predictability, averaged over the blocked runs when there are two.
    pub fn predictability(&self) -> Result<f64> {
        let runs = self.runs();
        let mut sum = 0.0;
        for run in &runs {
            sum += run.predictability()?;
        }
        Ok(sum / runs.len() as f64)
    }
}

/// Configured interferometer at one splitting/merging ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferometer {
    cfg: ExperimentConfig,
    r: SplitRatio,
}

impl Interferometer {
    pub fn new(cfg: ExperimentConfig, r: SplitRatio) -> Self {
        Interferometer { cfg, r }
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn ratio(&self) -> SplitRatio {
        self.r
    }

    fn split_ratio(&self) -> SplitRatio {
        match self.cfg.layout() {
            Layout::SplitterVariable => self.r,
            Layout::MergerVariable => SplitRatio::BALANCED,
        }
    }

    fn merge_ratio(&self) -> SplitRatio {
        match self.cfg.layout() {
            Layout::SplitterVariable => SplitRatio::BALANCED,
            Layout::MergerVariable => self.r,
        }
    }

    /// Physical efficiency of each detection channel, outside filters included.
    pub fn channel_efficiency(&self) -> (f64, f64) {
        let (t1, t2) = self.cfg.outside_losses().transmittance();
        let q = self.cfg.efficiencies();
        (q.q1() * t1, q.q2() * t2)
    }

    /// Field in the two arms after the input splitter and arm losses.
    pub fn arms(&self) -> TwoModeField {
        TwoModeField::unit_input(self.cfg.v0())
            .expect("v0 validated by config")
            .split(self.split_ratio())
            .attenuate(self.cfg.inside_losses())
    }

    pub fn detect(&self, phi: f64) -> Detection {
        let field = self.arms().shift_phase(phi);
        let arriving = field.merge_and_detect(self.merge_ratio(), DetectorPair::IDEAL);
        let (e1, e2) = self.channel_efficiency();
        let readings = Readings {
            i1: arriving.i1 * e1,
            i2: arriving.i2 * e2,
        };
        let inside_absorbed = 1.0 - field.total_power();
        Detection {
            readings,
            arriving,
            absorbed: inside_absorbed + arriving.total() - readings.total(),
        }
    }

    fn normalize(&self, raw: Readings) -> WhichWayRun {
        let q = self.cfg.efficiencies();
        WhichWayRun {
            raw,
            weights: (raw.i1 / (q.q1() * q.q1()), raw.i2 / (q.q2() * q.q2())),
        }
    }

    /// Raw readings of the which-way runs for unit input, without
    /// normalization; the photon sampler draws from these.
    pub fn which_way_readings(&self) -> Vec<Readings> {
        let (e1, e2) = self.channel_efficiency();
        let arms = self.arms();
        match self.cfg.layout() {
            Layout::SplitterVariable => {
                let (p1, p2) = arms.mode_powers();
                vec![Readings {
                    i1: p1 * e1,
                    i2: p2 * e2,
                }]
            }
            Layout::MergerVariable => [Arm::One, Arm::Two]
                .into_iter()
                .map(|blocked| {
                    let a = arms
                        .block(blocked)
                        .merge_and_detect(self.merge_ratio(), DetectorPair::IDEAL);
                    Readings {
                        i1: a.i1 * e1,
                        i2: a.i2 * e2,
                    }
                })
                .collect(),
        }
    }

    /// Assembles a [`WhichWay`] from (possibly noisy) raw readings in the
    /// order produced by [`Self::which_way_readings`].
    pub fn which_way_from(&self, raw: &[Readings]) -> WhichWay {
        match raw {
            [single] => WhichWay::Bypass(self.normalize(*single)),
            [arm2_open, arm1_open] => WhichWay::Blocked {
                arm2_open: self.normalize(*arm2_open),
                arm1_open: self.normalize(*arm1_open),
            },
            _ => unreachable!("pipeline yields one or two which-way runs"),
        }
    }

    pub fn which_way(&self) -> WhichWay {
        self.which_way_from(&self.which_way_readings())
    }
}
