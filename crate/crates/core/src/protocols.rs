//! Simulated measurement procedures: phase-scanned fringes, visibility
//! extraction, which-way runs and full ratio sweeps.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analytic::visibility;
use crate::config::{DualityPoint, ExperimentConfig, ModelKind, Source};
use crate::dataset::SweepDataset;
use crate::error::{DualityError, Result};
use crate::interferometer::{Interferometer, WhichWay};
use crate::optics::{Readings, SplitRatio};
use crate::rng::stream_rng;

pub const MIN_PHASE_SAMPLES: usize = 16;
pub const DEFAULT_PHASE_SAMPLES: usize = 256;
pub const DEFAULT_GRID_POINTS: usize = 21;

/// Detector intensities over one phase period.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeScan {
    pub phases: Vec<f64>,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    pub config: ExperimentConfig,
    pub r: SplitRatio,
}

/// Uniform phases over [0, 2pi).
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

fn check_samples(n: usize) -> Result<()> {
    if n < MIN_PHASE_SAMPLES {
        return Err(DualityError::InvalidParameter {
            name: "phase samples",
            value: n as f64,
            reason: "need at least 16",
        });
    }
    Ok(())
}

pub fn run_fringe_scan(cfg: &ExperimentConfig, r: SplitRatio, n: usize) -> Result<FringeScan> {
    check_samples(n)?;
    let ifm = Interferometer::new(*cfg, r);
    let phases = phase_grid(n);
    let (i1, i2): (Vec<f64>, Vec<f64>) = phases
        .iter()
        .map(|&phi| {
            let d = ifm.detect(phi).readings;
            (d.i1, d.i2)
        })
        .unzip();
    if i1.iter().chain(&i2).all(|&x| x == 0.0) {
        return Err(DualityError::degenerate("both detectors are dark"));
    }
    Ok(FringeScan {
        phases,
        i1,
        i2,
        config: *cfg,
        r,
    })
}

/// Least-squares fit of `offset + amplitude * cos(phi + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidFit {
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
}

impl SinusoidFit {
    pub fn visibility(&self) -> f64 {
        if self.offset <= 0.0 {
            0.0
        } else {
            self.amplitude / self.offset
        }
    }
}

pub fn fit_sinusoid(phases: &[f64], values: &[f64]) -> Result<SinusoidFit> {
    assert_eq!(phases.len(), values.len());
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for (&phi, &y) in phases.iter().zip(values) {
        let basis = Vector3::new(1.0, phi.cos(), phi.sin());
        normal += basis * basis.transpose();
        rhs += basis * y;
    }
    let coef = normal
        .lu()
        .solve(&rhs)
        .ok_or_else(|| DualityError::degenerate("phase samples do not resolve a sinusoid"))?;
    // a + alpha cos + beta sin = a + b cos(phi + c), alpha = b cos c, beta = -b sin c
    let (alpha, beta) = (coef[1], coef[2]);
    Ok(SinusoidFit {
        offset: coef[0],
        amplitude: alpha.hypot(beta),
        phase: (-beta).atan2(alpha),
    })
}

/// Extrema-based contrast of a sampled fringe.
pub fn extrema_visibility(values: &[f64]) -> Result<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    visibility(max, min.max(0.0))
}

fn detector_visibility(phases: &[f64], values: &[f64]) -> Result<Option<f64>> {
    if values.iter().all(|&x| x == 0.0) {
        return Ok(None);
    }
    let fit = fit_sinusoid(phases, values)?;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if fit.amplitude < 1e-12 && max == min {
        return Ok(Some(0.0));
    }
    Ok(Some(fit.visibility()))
}

/// Per-detector visibilities from the sinusoid fit. A dark detector
/// reports 0; both dark is degenerate.
pub fn extract_visibility(scan: &FringeScan) -> Result<(f64, f64)> {
    let (v1, v2) = visibilities(scan)?;
    Ok((v1.unwrap_or(0.0), v2.unwrap_or(0.0)))
}

fn visibilities(scan: &FringeScan) -> Result<(Option<f64>, Option<f64>)> {
    let v1 = detector_visibility(&scan.phases, &scan.i1)?;
    let v2 = detector_visibility(&scan.phases, &scan.i2)?;
    if v1.is_none() && v2.is_none() {
        return Err(DualityError::degenerate("both detectors are dark"));
    }
    Ok((v1, v2))
}

pub fn measure_which_way(cfg: &ExperimentConfig, r: SplitRatio) -> Result<WhichWay> {
    let ww = Interferometer::new(*cfg, r).which_way();
    if ww.runs().iter().all(|run| run.raw.total() == 0.0) {
        return Err(DualityError::degenerate("no light reaches the detectors"));
    }
    Ok(ww)
}

/// Multiplicative Gaussian intensity noise, truncated at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Noise {
    pub sigma: f64,
    pub seed: u64,
}

impl Noise {
    fn perturb<R: Rng>(&self, rng: &mut R, x: f64) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        x * (1.0 + self.sigma * z).max(0.0)
    }
}

/// Combines a fringe scan and a which-way measurement into a point.
pub fn protocol_point(scan: &FringeScan, which_way: &WhichWay) -> Result<DualityPoint> {
    let p = which_way.predictability()?.clamp(0.0, 1.0);
    let (v1, v2) = visibilities(scan)?;
    let point = if scan.config.model() == ModelKind::Config2Inside {
        DualityPoint::new(
            scan.r.value(),
            p,
            v1.unwrap_or(0.0).clamp(0.0, 1.0),
            v2.unwrap_or(0.0).clamp(0.0, 1.0),
            Source::Protocol,
        )
    } else {
        let v = v1
            .or(v2)
            .expect("at least one detector lit")
            .clamp(0.0, 1.0);
        DualityPoint::single(scan.r.value(), p, v, Source::Protocol)
    };
    Ok(point)
}

/// Noiseless or noisy protocol measurement at one ratio. `index` selects
/// the noise stream.
pub fn measure_point(
    cfg: &ExperimentConfig,
    r: SplitRatio,
    n_phases: usize,
    noise: Option<Noise>,
    index: u64,
) -> Result<DualityPoint> {
    let mut scan = run_fringe_scan(cfg, r, n_phases)?;
    let ifm = Interferometer::new(*cfg, r);
    let mut raw = ifm.which_way_readings();
    if let Some(noise) = noise {
        let mut rng = stream_rng(noise.seed, index);
        for (a, b) in scan.i1.iter_mut().zip(scan.i2.iter_mut()) {
            *a = noise.perturb(&mut rng, *a);
            *b = noise.perturb(&mut rng, *b);
        }
        for reading in raw.iter_mut() {
            *reading = Readings {
                i1: noise.perturb(&mut rng, reading.i1),
                i2: noise.perturb(&mut rng, reading.i2),
            };
        }
    }
    protocol_point(&scan, &ifm.which_way_from(&raw))
}

/// Runs the full protocol at every grid ratio. Degenerate points are
/// skipped and listed in [`SweepDataset::skipped`].
pub fn duality_sweep(
    cfg: &ExperimentConfig,
    r_grid: &[f64],
    n_phases: usize,
    noise: Option<Noise>,
) -> Result<SweepDataset> {
    if r_grid.is_empty() {
        return Err(DualityError::InvalidParameter {
            name: "grid size",
            value: 0.0,
            reason: "grid must be nonempty",
        });
    }
    check_samples(n_phases)?;
    if let Some(n) = noise {
        if !(n.sigma >= 0.0 && n.sigma.is_finite()) {
            return Err(DualityError::InvalidParameter {
                name: "sigma",
                value: n.sigma,
                reason: "must be finite and nonnegative",
            });
        }
    }
    let ratios = r_grid
        .iter()
        .map(|&r| SplitRatio::new(r))
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<Result<DualityPoint>> = ratios
        .par_iter()
        .enumerate()
        .map(|(i, &r)| measure_point(cfg, r, n_phases, noise, i as u64))
        .collect();

    let mut points = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for (res, r) in results.into_iter().zip(&ratios) {
        match res {
            Ok(pt) => points.push(pt),
            Err(e) if e.is_degenerate() => skipped.push(r.value()),
            Err(e) => return Err(e),
        }
    }
    SweepDataset::with_skipped(points, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{self, ModelParams};
    use crate::config::Layout;
    use crate::dataset::uniform_grid;
    use crate::optics::{DetectorPair, LossPair};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn cfg(model: ModelKind, l: (f64, f64), q: (f64, f64), v0: f64) -> ExperimentConfig {
        ExperimentConfig::for_model(
            model,
            LossPair::new(l.0, l.1).unwrap(),
            DetectorPair::new(q.0, q.1).unwrap(),
            v0,
        )
        .unwrap()
    }

    fn ratio(r: f64) -> SplitRatio {
        SplitRatio::new(r).unwrap()
    }

    #[test]
    fn ideal_fringe_is_cos_squared() {
        let scan = run_fringe_scan(
            &ExperimentConfig::ideal(Layout::SplitterVariable),
            ratio(0.5),
            64,
        )
        .unwrap();
        for (phi, i1) in scan.phases.iter().zip(&scan.i1) {
            assert_abs_diff_eq!(*i1, (phi / 2.0).cos().powi(2), epsilon = 1e-12);
        }
        let (v1, v2) = extract_visibility(&scan).unwrap();
        assert_abs_diff_eq!(v1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn scan_needs_sixteen_samples() {
        let c = ExperimentConfig::ideal(Layout::SplitterVariable);
        assert!(run_fringe_scan(&c, ratio(0.5), 15).is_err());
        assert!(run_fringe_scan(&c, ratio(0.5), 16).is_ok());
    }

    #[test]
    fn partial_coherence_halves_visibility() {
        let c = ExperimentConfig::ideal(Layout::SplitterVariable)
            .with_v0(0.5)
            .unwrap();
        let scan = run_fringe_scan(&c, ratio(0.5), 128).unwrap();
        let (v1, v2) = extract_visibility(&scan).unwrap();
        assert_abs_diff_eq!(v1, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(v2, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn fit_and_extrema_agree_and_phase_is_zero_mod_pi() {
        let c = cfg(
            ModelKind::Config2Inside,
            (0.764, 0.505),
            (0.904, 0.908),
            0.99,
        );
        for r in [0.1, 0.3, 0.5, 0.9] {
            let scan = run_fringe_scan(&c, ratio(r), DEFAULT_PHASE_SAMPLES).unwrap();
            for values in [&scan.i1, &scan.i2] {
                let fit = fit_sinusoid(&scan.phases, values).unwrap();
                let ext = extrema_visibility(values).unwrap();
                assert!((fit.visibility() - ext).abs() < 1e-6);
                let wrapped = fit.phase.rem_euclid(PI);
                assert!(wrapped < 1e-6 || PI - wrapped < 1e-6, "phase {}", fit.phase);
            }
        }
    }

    #[test]
    fn inside_losses_match_closed_form() {
        let c = cfg(
            ModelKind::Config1Inside,
            (0.727, 0.396),
            (0.904, 0.908),
            0.992,
        );
        for r in [0.3, 0.5] {
            let scan = run_fringe_scan(&c, ratio(r), DEFAULT_PHASE_SAMPLES).unwrap();
            let (v1, _) = extract_visibility(&scan).unwrap();
            let expect = analytic::config1_inside(&c, ratio(r)).unwrap().v();
            assert!((v1 - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn config2_detectors_see_different_fringes() {
        let c = cfg(
            ModelKind::Config2Inside,
            (0.764, 0.505),
            (0.904, 0.908),
            0.99,
        );
        let scan = run_fringe_scan(&c, ratio(0.3), DEFAULT_PHASE_SAMPLES).unwrap();
        let (v1, v2) = extract_visibility(&scan).unwrap();
        assert!((v1 - v2).abs() > 0.1);
    }

    #[test]
    fn flat_signal_has_zero_visibility() {
        let c = ExperimentConfig::ideal(Layout::SplitterVariable);
        let scan = run_fringe_scan(&c, ratio(0.0), 32).unwrap();
        assert_eq!(extract_visibility(&scan).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn fully_blocked_is_degenerate() {
        let c = cfg(ModelKind::Config1Inside, (1.0, 1.0), (1.0, 1.0), 1.0);
        assert!(run_fringe_scan(&c, ratio(0.5), 32)
            .unwrap_err()
            .is_degenerate());
        assert!(measure_which_way(&c, ratio(0.5))
            .unwrap_err()
            .is_degenerate());
    }

    #[test]
    fn which_way_examples() {
        let c = ExperimentConfig::ideal(Layout::SplitterVariable);
        let ww = measure_which_way(&c, ratio(0.3)).unwrap();
        let (w1, w2) = ww.runs()[0].normalized().unwrap();
        assert_abs_diff_eq!(w1, 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(w2, 0.3, epsilon = 1e-15);

        let c = cfg(
            ModelKind::Config1Outside,
            (0.727, 0.396),
            (0.904, 0.908),
            0.992,
        );
        let ww = measure_which_way(&c, ratio(0.74)).unwrap();
        let (w1, w2) = ww.runs()[0].normalized().unwrap();
        assert_abs_diff_eq!(w1, 0.1376, epsilon = 1e-4);
        assert_abs_diff_eq!(w2, 0.8624, epsilon = 1e-4);
        let expect = analytic::config1_outside(&c, ratio(0.74)).unwrap().p;
        assert_abs_diff_eq!(ww.predictability().unwrap(), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(expect, 0.7249, epsilon = 1e-4);

        for l in [(0.764, 0.505), (0.1, 0.9)] {
            let c = cfg(ModelKind::Config2Inside, l, (1.0, 1.0), 0.99);
            let p = measure_which_way(&c, ratio(0.3))
                .unwrap()
                .predictability()
                .unwrap();
            assert_abs_diff_eq!(p, 0.4, epsilon = 1e-12);
        }
    }

    #[test]
    fn unequal_efficiencies_predictability_matches_formulas() {
        // Outside losses and the splitter-variable layout reproduce the
        // divided-by-Q weights exactly for any Q1, Q2.
        for model in [
            ModelKind::Config1Inside,
            ModelKind::Config1Outside,
            ModelKind::Config2Outside,
        ] {
            let c = cfg(model, (0.735, 0.434), (0.904, 0.808), 0.99);
            for r in uniform_grid(21) {
                let measured = measure_which_way(&c, ratio(r))
                    .unwrap()
                    .predictability()
                    .unwrap();
                let closed = analytic::evaluate(&c, ratio(r)).unwrap().p;
                assert!((measured - closed).abs() < 1e-9, "{model} r={r}");
            }
        }
    }

    #[test]
    fn config2_inside_first_term_pairs_efficiencies_differently() {
        let c = cfg(
            ModelKind::Config2Inside,
            (0.764, 0.505),
            (0.904, 0.808),
            0.99,
        );
        let measured = measure_which_way(&c, ratio(0.26))
            .unwrap()
            .predictability()
            .unwrap();
        let closed = analytic::config2_inside(&c, ratio(0.26)).unwrap().p;
        assert!((measured - closed).abs() > 1e-3);
        let equal = c.with_efficiencies(DetectorPair::new(0.9, 0.9).unwrap());
        let measured = measure_which_way(&equal, ratio(0.26))
            .unwrap()
            .predictability()
            .unwrap();
        let closed = analytic::config2_inside(&equal, ratio(0.26)).unwrap().p;
        assert!((measured - closed).abs() < 1e-12);
    }

    #[test]
    fn noiseless_sweep_matches_analytic() {
        let c = cfg(
            ModelKind::Config1Inside,
            (0.727, 0.396),
            (0.906, 0.906),
            0.992,
        );
        let sweep = duality_sweep(&c, &uniform_grid(21), DEFAULT_PHASE_SAMPLES, None).unwrap();
        assert_eq!(sweep.len(), 21);
        for pt in sweep.points() {
            let a = analytic::evaluate_params(
                ModelKind::Config1Inside,
                &ModelParams::from_config(&c),
                pt.r,
            )
            .unwrap();
            assert!((pt.p - a.p).abs() < 1e-9);
            assert!((pt.v() - a.v()).abs() < 1e-9);
            assert_eq!(pt.source, Source::Protocol);
        }
    }

    #[test]
    fn outside_sweep_violates_above_043() {
        let c = cfg(
            ModelKind::Config1Outside,
            (0.727, 0.396),
            (0.904, 0.908),
            0.992,
        );
        let sweep = duality_sweep(&c, &uniform_grid(51), DEFAULT_PHASE_SAMPLES, None).unwrap();
        let best = sweep
            .points()
            .iter()
            .max_by(|a, b| a.duality().total_cmp(&b.duality()))
            .unwrap();
        assert!(best.duality() > 1.0);
        assert!((best.r - 0.74).abs() < 0.03, "peak at {}", best.r);
        for pt in sweep
            .points()
            .iter()
            .filter(|pt| pt.r >= 0.44 && pt.r < 1.0)
        {
            assert!(pt.duality() > 1.0, "r = {}", pt.r);
        }
    }

    #[test]
    fn lossless_endpoints() {
        let c = ExperimentConfig::ideal(Layout::SplitterVariable);
        let sweep = duality_sweep(&c, &[0.0, 1.0], 64, None).unwrap();
        for pt in sweep.points() {
            assert_abs_diff_eq!(pt.p, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(pt.v(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_points_are_skipped() {
        let c = cfg(ModelKind::Config1Inside, (0.3, 1.0), (1.0, 1.0), 1.0);
        let sweep = duality_sweep(&c, &uniform_grid(5), 32, None).unwrap();
        assert_eq!(sweep.len(), 4);
        assert_eq!(sweep.skipped(), &[1.0]);
    }

    #[test]
    fn noise_is_reproducible() {
        let c = cfg(
            ModelKind::Config1Outside,
            (0.727, 0.396),
            (0.904, 0.908),
            0.992,
        );
        let noise = Some(Noise {
            sigma: 0.01,
            seed: 42,
        });
        let a = duality_sweep(&c, &uniform_grid(21), 64, noise).unwrap();
        let b = duality_sweep(&c, &uniform_grid(21), 64, noise).unwrap();
        assert_eq!(a, b);
        let other = duality_sweep(
            &c,
            &uniform_grid(21),
            64,
            Some(Noise {
                sigma: 0.01,
                seed: 43,
            }),
        )
        .unwrap();
        assert_ne!(a, other);
        // serial evaluation of the same point reproduces the parallel sweep
        let serial = measure_point(&c, ratio(0.5), 64, noise, 10).unwrap();
        assert_eq!(serial, a.points()[10]);
    }
}
