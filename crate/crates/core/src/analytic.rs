//! Closed-form predictability, visibility and duality for the lossy
//! interferometer.
//!
//! Every evaluator works from the same raw [`ModelParams`]. The
//! predictability weights divide by the detector efficiency (`w / Q`),
//! which is the convention the calibrated curves use; only the ratio
//! `Q1 / Q2` ever matters.

use serde::{Deserialize, Serialize};

use crate::config::{DualityPoint, ExperimentConfig, Layout, LossPlacement, ModelKind, Source};
use crate::dataset::SweepDataset;
use crate::error::{DualityError, Result};
use crate::optics::SplitRatio;

/// `|w1 - w2| / (w1 + w2)`.
pub fn predictability(w1: f64, w2: f64) -> Result<f64> {
    if !(w1 >= 0.0 && w2 >= 0.0) {
        return Err(DualityError::InvalidParameter {
            name: "weight",
            value: w1.min(w2),
            reason: "must be nonnegative",
        });
    }
    let sum = w1 + w2;
    if sum <= 0.0 {
        return Err(DualityError::degenerate("no light detected on either path"));
    }
    Ok((w1 - w2).abs() / sum)
}

/// Fringe contrast `(wmax - wmin) / (wmax + wmin)`.
pub fn visibility(wmax: f64, wmin: f64) -> Result<f64> {
    if wmin < 0.0 || !wmax.is_finite() || !wmin.is_finite() {
        return Err(DualityError::InvalidParameter {
            name: "wmin",
            value: wmin,
            reason: "must be finite and nonnegative",
        });
    }
    if wmin > wmax {
        return Err(DualityError::ArgumentOrder { wmax, wmin });
    }
    let sum = wmax + wmin;
    if sum <= 0.0 {
        return Err(DualityError::degenerate(
            "fringe signal is identically zero",
        ));
    }
    Ok((wmax - wmin) / sum)
}

/// Unvalidated model parameters, used directly by the fitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub l1: f64,
    pub l2: f64,
    pub q1: f64,
    pub q2: f64,
    pub v0: f64,
}

impl ModelParams {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        ModelParams {
            l1: cfg.losses().l1(),
            l2: cfg.losses().l2(),
            q1: cfg.efficiencies().q1(),
            q2: cfg.efficiencies().q2(),
            v0: cfg.v0(),
        }
    }

    fn c1(&self) -> f64 {
        1.0 - self.l1
    }

    fn c2(&self) -> f64 {
        1.0 - self.l2
    }

    pub fn swapped(&self) -> Self {
        ModelParams {
            l1: self.l2,
            l2: self.l1,
            q1: self.q2,
            q2: self.q1,
            v0: self.v0,
        }
    }
}

/// Form of the detector-2 visibility denominator for the merger-variable
/// layout with losses in the arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum V2Form {
    /// `R (1 - L1) + (1 - R)(1 - L2)`, as field propagation gives.
    #[default]
    Corrected,
    /// `(1 - R)(1 - L2) + R (1 - L2)`, the collapsed printed form. Kept
    /// for comparison only.
    Printed,
}

/// Detection weights of one which-way measurement, in detector order.
pub type WeightPair = (f64, f64);

/// Which-way weights entering the predictability of `model`.
///
/// The splitter-variable layout yields one pair. The merger-variable layout
/// yields two, one per open arm (arm 2 open first), and P is their mean.
pub fn which_way_weights(model: ModelKind, p: &ModelParams, r: f64) -> Vec<WeightPair> {
    let (c1, c2, q1, q2) = (p.c1(), p.c2(), p.q1, p.q2);
    match model {
        ModelKind::Config1Inside | ModelKind::Config1Outside => {
            vec![((1.0 - r) * c1 / q1, r * c2 / q2)]
        }
        ModelKind::Config2Inside => vec![
            ((1.0 - r) * c2 / q1, r * c2 / q2),
            ((1.0 - r) * c1 / q1, r * c1 / q2),
        ],
        ModelKind::Config2Outside => vec![
            (r * c1 / q1, (1.0 - r) * c2 / q2),
            ((1.0 - r) * c1 / q1, r * c2 / q2),
        ],
    }
}

/// Mean level and cosine amplitude of one detector's fringe, efficiency
/// removed. The visibility is `ac / dc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeTerms {
    pub dc: f64,
    pub ac: f64,
}

impl FringeTerms {
    pub fn visibility(&self) -> Result<f64> {
        if self.dc <= 0.0 {
            return Err(DualityError::degenerate("detector receives no light"));
        }
        Ok(self.ac / self.dc)
    }
}

/// Per-detector fringe decomposition for `model`.
pub fn fringe_terms(model: ModelKind, p: &ModelParams, r: f64) -> [FringeTerms; 2] {
    let (c1, c2) = (p.c1(), p.c2());
    let mix = (r * (1.0 - r)).sqrt() * p.v0;
    match model {
        ModelKind::Config1Inside => {
            let t = FringeTerms {
                dc: 0.5 * ((1.0 - r) * c1 + r * c2),
                ac: mix * (c1 * c2).sqrt(),
            };
            [t, t]
        }
        ModelKind::Config2Inside => {
            let ac = mix * (c1 * c2).sqrt();
            [
                FringeTerms {
                    dc: 0.5 * ((1.0 - r) * c1 + r * c2),
                    ac,
                },
                FringeTerms {
                    dc: 0.5 * (r * c1 + (1.0 - r) * c2),
                    ac,
                },
            ]
        }
        ModelKind::Config1Outside | ModelKind::Config2Outside => [
            FringeTerms {
                dc: 0.5 * c1,
                ac: c1 * mix,
            },
            FringeTerms {
                dc: 0.5 * c2,
                ac: c2 * mix,
            },
        ],
    }
}

fn lossless_visibility(r: f64, v0: f64) -> f64 {
    2.0 * (r * (1.0 - r)).sqrt() * v0
}

fn inside_visibility(r: f64, c1: f64, c2: f64, denom: f64, v0: f64) -> Result<f64> {
    if denom <= 0.0 {
        return Err(DualityError::degenerate("both arms carry zero power"));
    }
    Ok(2.0 * (r * (1.0 - r) * c1 * c2).sqrt() / denom * v0)
}

fn pair_predictability(w: WeightPair) -> Result<f64> {
    predictability(w.0, w.1)
}

fn mean_predictability(pairs: &[WeightPair]) -> Result<f64> {
    let mut sum = 0.0;
    for &w in pairs {
        sum += pair_predictability(w)?;
    }
    Ok(sum / pairs.len() as f64)
}

/// Evaluates `model` on raw parameters.
pub fn evaluate_params(model: ModelKind, p: &ModelParams, r: f64) -> Result<DualityPoint> {
    evaluate_params_with(model, p, r, V2Form::Corrected)
}

pub fn evaluate_params_with(
    model: ModelKind,
    p: &ModelParams,
    r: f64,
    form: V2Form,
) -> Result<DualityPoint> {
    let (c1, c2) = (p.c1(), p.c2());
    let pred = mean_predictability(&which_way_weights(model, p, r))?;
    let point = match model {
        ModelKind::Config1Inside => {
            let v = inside_visibility(r, c1, c2, (1.0 - r) * c1 + r * c2, p.v0)?;
            DualityPoint::single(r, pred, v, Source::Analytic)
        }
        ModelKind::Config1Outside | ModelKind::Config2Outside => {
            DualityPoint::single(r, pred, lossless_visibility(r, p.v0), Source::Analytic)
        }
        ModelKind::Config2Inside => {
            let v1 = inside_visibility(r, c1, c2, (1.0 - r) * c1 + r * c2, p.v0)?;
            let denom2 = match form {
                V2Form::Corrected => r * c1 + (1.0 - r) * c2,
                V2Form::Printed => (1.0 - r) * c2 + r * c2,
            };
            let v2 = inside_visibility(r, c1, c2, denom2, p.v0)?;
            DualityPoint::new(r, pred, v1, v2, Source::Analytic)
        }
    };
    Ok(point)
}

fn require(cfg: &ExperimentConfig, model: ModelKind) -> Result<()> {
    let placement_ok = matches!(cfg.loss_placement(), LossPlacement::None)
        || cfg.loss_placement() == model.placement();
    if cfg.layout() != model.layout() || !placement_ok {
        return Err(DualityError::ConfigMismatch(format!(
            "{model} cannot evaluate a {:?} layout with {:?} losses",
            cfg.layout(),
            cfg.loss_placement()
        )));
    }
    Ok(())
}

fn evaluate_checked(
    cfg: &ExperimentConfig,
    r: SplitRatio,
    model: ModelKind,
) -> Result<DualityPoint> {
    require(cfg, model)?;
    evaluate_params(model, &ModelParams::from_config(cfg), r.value())
}

/// Splitter-variable layout, losses in the arms.
pub fn config1_inside(cfg: &ExperimentConfig, r: SplitRatio) -> Result<DualityPoint> {
    evaluate_checked(cfg, r, ModelKind::Config1Inside)
}

/// Splitter-variable layout, losses in front of the detectors.
pub fn config1_outside(cfg: &ExperimentConfig, r: SplitRatio) -> Result<DualityPoint> {
    evaluate_checked(cfg, r, ModelKind::Config1Outside)
}

/// Merger-variable layout, losses in the arms. Returns separate
/// visibilities for detector 1 and detector 2.
pub fn config2_inside(cfg: &ExperimentConfig, r: SplitRatio) -> Result<DualityPoint> {
    evaluate_checked(cfg, r, ModelKind::Config2Inside)
}

pub fn config2_inside_with(
    cfg: &ExperimentConfig,
    r: SplitRatio,
    form: V2Form,
) -> Result<DualityPoint> {
    require(cfg, ModelKind::Config2Inside)?;
    evaluate_params_with(
        ModelKind::Config2Inside,
        &ModelParams::from_config(cfg),
        r.value(),
        form,
    )
}

/// Merger-variable layout, losses in front of the detectors.
pub fn config2_outside(cfg: &ExperimentConfig, r: SplitRatio) -> Result<DualityPoint> {
    evaluate_checked(cfg, r, ModelKind::Config2Outside)
}

/// Dispatches to the evaluator matching `cfg`.
pub fn evaluate(cfg: &ExperimentConfig, r: SplitRatio) -> Result<DualityPoint> {
    evaluate_checked(cfg, r, cfg.model())
}

/// Analytic curve over `grid`; degenerate grid points are skipped and
/// recorded.
pub fn analytic_sweep(cfg: &ExperimentConfig, grid: &[f64]) -> Result<SweepDataset> {
    let mut points = Vec::with_capacity(grid.len());
    let mut skipped = Vec::new();
    for &r in grid {
        match evaluate(cfg, SplitRatio::new(r)?) {
            Ok(pt) => points.push(pt),
            Err(e) if e.is_degenerate() => skipped.push(r),
            Err(e) => return Err(e),
        }
    }
    SweepDataset::with_skipped(points, skipped)
}

/// Affine zero crossings of the two predictability terms of the
/// merger-variable layout with losses outside, sorted ascending.
pub fn turning_points(cfg: &ExperimentConfig) -> Result<[f64; 2]> {
    if cfg.layout() != Layout::MergerVariable || cfg.loss_placement() == LossPlacement::Inside {
        return Err(DualityError::ConfigMismatch(
            "turning points are defined for the merger-variable layout with outside losses".into(),
        ));
    }
    let p = ModelParams::from_config(cfg);
    let (c1, c2) = (p.c1(), p.c2());
    let first = move |r: f64| (1.0 - r) * c2 / p.q2 - r * c1 / p.q1;
    let second = move |r: f64| (1.0 - r) * c1 / p.q1 - r * c2 / p.q2;
    let mut roots = [bisect_root(first)?, bisect_root(second)?];
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

/// Root in [0, 1] of a function that is nonnegative at 0 and nonpositive at 1.
fn bisect_root(f: impl Fn(f64) -> f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo == 0.0 && f_hi == 0.0 {
        return Err(DualityError::degenerate(
            "predictability term vanishes for every ratio",
        ));
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(DualityError::degenerate(
            "predictability term has no root in [0, 1]",
        ));
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Averages the original wiring with the one where the two paths and the
/// two detectors are exchanged.
///
/// Which-way weights are averaged channel by channel before forming P.
/// Visibilities come from the averaged, efficiency-normalized fringes
/// (mean level and amplitude averaged separately), which keeps
/// `P^2 + V^2 <= 1`.
pub fn symmetrize(cfg: &ExperimentConfig, r: SplitRatio) -> Result<DualityPoint> {
    let model = cfg.model();
    let orig = ModelParams::from_config(cfg);
    let swap = orig.swapped();
    let r = r.value();

    let a = which_way_weights(model, &orig, r);
    let b = which_way_weights(model, &swap, r);
    let averaged: Vec<WeightPair> = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (0.5 * (x.0 + y.0), 0.5 * (x.1 + y.1)))
        .collect();
    let p = mean_predictability(&averaged)?;

    let fa = fringe_terms(model, &orig, r);
    let fb = fringe_terms(model, &swap, r);
    let mut v = [0.0; 2];
    for k in 0..2 {
        v[k] = FringeTerms {
            dc: fa[k].dc + fb[k].dc,
            ac: fa[k].ac + fb[k].ac,
        }
        .visibility()?;
    }
    Ok(DualityPoint::new(r, p, v[0], v[1], Source::Analytic))
}
