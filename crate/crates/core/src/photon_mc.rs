//! Single-photon Monte Carlo.
//!
//! Per-photon outcome probabilities are the unit-power intensities of the
//! coherent pipeline. Counting runs draw independent three-way outcomes
//! (detector 1, detector 2, lost) and re-derive P and V from count rates.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::config::{DualityPoint, ExperimentConfig, ModelKind, Source};
use crate::error::{DualityError, Result};
use crate::interferometer::Interferometer;
use crate::optics::{Readings, SplitRatio};
use crate::protocols::{fit_sinusoid, phase_grid, MIN_PHASE_SAMPLES};
use crate::rng::{stream_rng, WHICH_WAY_STREAM_BASE};

pub const MIN_PHOTONS_PER_PHASE: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeDistribution {
    pub p_det1: f64,
    pub p_det2: f64,
    pub p_lost: f64,
}

impl OutcomeDistribution {
    pub fn new(p_det1: f64, p_det2: f64) -> Result<Self> {
        let ok = |p: f64| (0.0..=1.0 + 1e-12).contains(&p);
        if !ok(p_det1) || !ok(p_det2) || p_det1 + p_det2 > 1.0 + 1e-12 {
            return Err(DualityError::InvalidParameter {
                name: "outcome probability",
                value: p_det1 + p_det2,
                reason: "detection probabilities must be in [0, 1] and sum to at most 1",
            });
        }
        let (p_det1, p_det2) = (p_det1.min(1.0), p_det2.min(1.0));
        Ok(OutcomeDistribution {
            p_det1,
            p_det2,
            p_lost: (1.0 - p_det1 - p_det2).max(0.0),
        })
    }

    fn from_readings(r: Readings) -> Self {
        OutcomeDistribution::new(r.i1, r.i2).expect("unit-power pipeline conserves probability")
    }
}

/// Detection probabilities of a single photon at phase `phi`.
pub fn outcome_probabilities(
    cfg: &ExperimentConfig,
    r: SplitRatio,
    phi: f64,
) -> OutcomeDistribution {
    OutcomeDistribution::from_readings(Interferometer::new(*cfg, r).detect(phi).readings)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountRecord {
    pub n_det1: u64,
    pub n_det2: u64,
    pub n_lost: u64,
    pub n_total: u64,
    pub seed: u64,
    pub stream: u64,
}

fn binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
    }
}

/// `n` independent photons on stream 0 of `seed`.
pub fn simulate_counts(dist: &OutcomeDistribution, n: u64, seed: u64) -> CountRecord {
    simulate_counts_on(dist, n, seed, 0)
}

/// Counts for `n` photons drawn from `dist`. The multinomial draw is
/// factored into two binomials, which has the same distribution as `n`
/// categorical draws.
pub fn simulate_counts_on(
    dist: &OutcomeDistribution,
    n: u64,
    seed: u64,
    stream: u64,
) -> CountRecord {
    let mut rng = stream_rng(seed, stream);
    let n_det1 = binomial(&mut rng, n, dist.p_det1);
    let rest = 1.0 - dist.p_det1;
    let p2 = if rest > 0.0 {
        (dist.p_det2 / rest).min(1.0)
    } else {
        0.0
    };
    let n_det2 = binomial(&mut rng, n - n_det1, p2);
    CountRecord {
        n_det1,
        n_det2,
        n_lost: n - n_det1 - n_det2,
        n_total: n,
        seed,
        stream,
    }
}

/// Monte Carlo duality point with delta-method standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub point: DualityPoint,
    pub p_se: f64,
    pub v1_se: f64,
    pub v2_se: f64,
}

impl McEstimate {
    pub fn duality1_se(&self) -> f64 {
        let pt = &self.point;
        (2.0 * pt.p * self.p_se).hypot(2.0 * pt.v1 * self.v1_se)
    }

    pub fn duality2_se(&self) -> f64 {
        let pt = &self.point;
        (2.0 * pt.p * self.p_se).hypot(2.0 * pt.v2 * self.v2_se)
    }
}

/// Visibility of a sampled count-rate fringe with its standard error.
/// Returns `None` when the detector never fired.
fn rate_visibility(phases: &[f64], rates: &[f64], n: u64) -> Result<Option<(f64, f64)>> {
    if rates.iter().all(|&y| y == 0.0) {
        return Ok(None);
    }
    let fit = fit_sinusoid(phases, rates)?;
    let a = fit.offset;
    if a <= 0.0 {
        return Ok(Some((0.0, 0.0)));
    }
    let amp = fit.amplitude;
    let v = amp / a;
    // Uniform phases: a = mean(y), alpha = 2/N sum y cos, beta = 2/N sum y sin.
    let m = phases.len() as f64;
    let (cos_c, sin_c) = if amp > 0.0 {
        (fit.phase.cos(), -fit.phase.sin())
    } else {
        (0.0, 0.0)
    };
    let mut var = 0.0;
    for (&phi, &y) in phases.iter().zip(rates) {
        let d_amp = 2.0 / m * (cos_c * phi.cos() + sin_c * phi.sin());
        let grad = d_amp / a - amp / (a * a) / m;
        var += grad * grad * y * (1.0 - y).max(0.0) / n as f64;
    }
    Ok(Some((v, var.sqrt())))
}

/// P and its standard error from one which-way count, `weights = rate / Q^2`.
fn counted_predictability(rec: &CountRecord, q: (f64, f64)) -> Result<(f64, f64)> {
    let n = rec.n_total as f64;
    let p1 = rec.n_det1 as f64 / n;
    let p2 = rec.n_det2 as f64 / n;
    let (s1, s2) = (1.0 / (q.0 * q.0), 1.0 / (q.1 * q.1));
    let (x, y) = (p1 * s1, p2 * s2);
    let sum = x + y;
    if sum <= 0.0 {
        return Err(DualityError::degenerate(
            "no photons detected in which-way run",
        ));
    }
    let p = (x - y).abs() / sum;
    let sign = if x >= y { 1.0 } else { -1.0 };
    let gx = sign * 2.0 * y / (sum * sum) * s1;
    let gy = -sign * 2.0 * x / (sum * sum) * s2;
    // multinomial covariance of the two detection rates
    let var = (gx * gx * p1 * (1.0 - p1) + gy * gy * p2 * (1.0 - p2) - 2.0 * gx * gy * p1 * p2) / n;
    Ok((p, var.max(0.0).sqrt()))
}

/// Counts `n_per_phase` photons at each of `n_phases` phases and in each
/// which-way run, then estimates P and V with standard errors.
pub fn estimate_duality(
    cfg: &ExperimentConfig,
    r: SplitRatio,
    n_per_phase: u64,
    n_phases: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_per_phase < MIN_PHOTONS_PER_PHASE {
        return Err(DualityError::InvalidParameter {
            name: "photons per phase",
            value: n_per_phase as f64,
            reason: "need at least 10^4",
        });
    }
    if n_phases < MIN_PHASE_SAMPLES {
        return Err(DualityError::InvalidParameter {
            name: "phase samples",
            value: n_phases as f64,
            reason: "need at least 16",
        });
    }
    let ifm = Interferometer::new(*cfg, r);
    let phases = phase_grid(n_phases);
    let counts: Vec<CountRecord> = phases
        .par_iter()
        .enumerate()
        .map(|(k, &phi)| {
            let dist = OutcomeDistribution::from_readings(ifm.detect(phi).readings);
            simulate_counts_on(&dist, n_per_phase, seed, k as u64)
        })
        .collect();
    let n = n_per_phase as f64;
    let rates1: Vec<f64> = counts.iter().map(|c| c.n_det1 as f64 / n).collect();
    let rates2: Vec<f64> = counts.iter().map(|c| c.n_det2 as f64 / n).collect();
    let vis1 = rate_visibility(&phases, &rates1, n_per_phase)?;
    let vis2 = rate_visibility(&phases, &rates2, n_per_phase)?;
    if vis1.is_none() && vis2.is_none() {
        return Err(DualityError::degenerate("no photons detected"));
    }

    let q = (cfg.efficiencies().q1(), cfg.efficiencies().q2());
    let runs = ifm.which_way_readings();
    let mut p_sum = 0.0;
    let mut var_sum = 0.0;
    for (k, reading) in runs.iter().enumerate() {
        let dist = OutcomeDistribution::from_readings(*reading);
        let rec = simulate_counts_on(&dist, n_per_phase, seed, WHICH_WAY_STREAM_BASE + k as u64);
        let (p, se) = counted_predictability(&rec, q)?;
        p_sum += p;
        var_sum += se * se;
    }
    let m = runs.len() as f64;
    let (p, p_se) = (p_sum / m, var_sum.sqrt() / m);

    let (point, v1_se, v2_se) = if cfg.model() == ModelKind::Config2Inside {
        let (v1, s1) = vis1.unwrap_or((0.0, 0.0));
        let (v2, s2) = vis2.unwrap_or((0.0, 0.0));
        (
            DualityPoint::new(r.value(), p, v1, v2, Source::MonteCarlo),
            s1,
            s2,
        )
    } else {
        let (v, s) = vis1.or(vis2).expect("one detector lit");
        (
            DualityPoint::single(r.value(), p, v, Source::MonteCarlo),
            s,
            s,
        )
    };
    Ok(McEstimate {
        point,
        p_se,
        v1_se,
        v2_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic;
    use crate::config::Layout;
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
    fn outcome_examples() {
        let ideal = ExperimentConfig::ideal(Layout::SplitterVariable);
        let d = outcome_probabilities(&ideal, ratio(0.5), 0.0);
        assert_abs_diff_eq!(d.p_det1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.p_det2, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.p_lost, 0.0, epsilon = 1e-12);
        let d = outcome_probabilities(&ideal, ratio(0.5), PI);
        assert_abs_diff_eq!(d.p_det1, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.p_det2, 1.0, epsilon = 1e-12);

        let c = cfg(ModelKind::Config1Inside, (0.5, 0.5), (1.0, 1.0), 1.0);
        let d = outcome_probabilities(&c, ratio(0.5), 0.0);
        assert_abs_diff_eq!(d.p_det1, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.p_det2, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.p_lost, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn probabilities_sum_to_one() {
        for model in ModelKind::ALL {
            let c = cfg(model, (0.727, 0.396), (0.904, 0.908), 0.992);
            for r in [0.0, 0.1, 0.5, 0.9, 1.0] {
                for k in 0..16 {
                    let d = outcome_probabilities(&c, ratio(r), k as f64 * 0.4);
                    assert!((d.p_det1 + d.p_det2 + d.p_lost - 1.0).abs() < 1e-12);
                    assert!(d.p_lost >= 0.0);
                }
            }
        }
    }

    #[test]
    fn count_examples() {
        let sure = OutcomeDistribution::new(1.0, 0.0).unwrap();
        let rec = simulate_counts(&sure, 1000, 3);
        assert_eq!((rec.n_det1, rec.n_det2, rec.n_lost), (1000, 0, 0));

        let fair = OutcomeDistribution::new(0.5, 0.5).unwrap();
        let rec = simulate_counts(&fair, 1_000_000, 11);
        let frac = rec.n_det1 as f64 / 1e6;
        // 3 sigma binomial band: 3 sqrt(0.25 / 1e6) = 0.0015
        assert!((frac - 0.5).abs() < 0.0015, "{frac}");
        assert_eq!(rec.n_det1 + rec.n_det2 + rec.n_lost, rec.n_total);

        let half_lost = OutcomeDistribution::new(0.5, 0.0).unwrap();
        assert_eq!(simulate_counts(&half_lost, 1_000_000, 5).n_det2, 0);
    }

    #[test]
    fn counts_are_deterministic() {
        let d = OutcomeDistribution::new(0.3, 0.5).unwrap();
        assert_eq!(
            simulate_counts(&d, 50_000, 9),
            simulate_counts(&d, 50_000, 9)
        );
        assert_ne!(
            simulate_counts(&d, 50_000, 9),
            simulate_counts(&d, 50_000, 10)
        );
    }

    #[test]
    fn inside_losses_within_three_sigma() {
        let c = cfg(
            ModelKind::Config1Inside,
            (0.727, 0.396),
            (0.904, 0.908),
            0.992,
        );
        let est = estimate_duality(&c, ratio(0.5), 1_000_000, 32, 1).unwrap();
        let a = analytic::config1_inside(&c, ratio(0.5)).unwrap();
        assert!(
            (est.point.p - a.p).abs() < 3.0 * est.p_se,
            "{est:?} vs {a:?}"
        );
        assert!(
            (est.point.v() - a.v()).abs() < 3.0 * est.v1_se,
            "{est:?} vs {a:?}"
        );
        assert_eq!(est.point.source, Source::MonteCarlo);
    }

    #[test]
    fn single_open_arm() {
        let c = ExperimentConfig::ideal(Layout::SplitterVariable);
        let est = estimate_duality(&c, ratio(0.0), 1_000_000, 32, 0).unwrap();
        assert_eq!(est.point.p, 1.0);
        assert!(est.point.v() < 3.0 * est.v1_se.max(1e-12), "{est:?}");
    }

    #[test]
    fn photon_level_violation() {
        let c = cfg(
            ModelKind::Config1Outside,
            (0.727, 0.396),
            (0.904, 0.908),
            0.992,
        );
        let est = estimate_duality(&c, ratio(0.74), 1_000_000, 32, 3).unwrap();
        let expect = analytic::config1_outside(&c, ratio(0.74))
            .unwrap()
            .duality();
        assert!((est.point.duality() - expect).abs() < 3.0 * est.duality1_se());
        assert!(est.point.duality() > 1.2);
    }

    #[test]
    fn standard_errors_are_calibrated() {
        let c = cfg(
            ModelKind::Config2Outside,
            (0.735, 0.434),
            (0.904, 0.908),
            0.99,
        );
        let a = analytic::config2_outside(&c, ratio(0.4)).unwrap();
        let (mut zp, mut zv) = (0.0, 0.0);
        let seeds = 40;
        for seed in 0..seeds {
            let est = estimate_duality(&c, ratio(0.4), 100_000, 16, 500 + seed).unwrap();
            zp += ((est.point.p - a.p) / est.p_se).powi(2);
            zv += ((est.point.v() - a.v()) / est.v1_se).powi(2);
        }
        // mean squared z-score of a calibrated estimator is 1
        let (zp, zv) = (zp / seeds as f64, zv / seeds as f64);
        assert!((0.5..2.0).contains(&zp), "P z^2 = {zp}");
        assert!((0.5..2.0).contains(&zv), "V z^2 = {zv}");
    }

    #[test]
    fn rejects_small_runs() {
        let c = ExperimentConfig::ideal(Layout::SplitterVariable);
        assert!(estimate_duality(&c, ratio(0.5), 9_999, 32, 0).is_err());
        assert!(estimate_duality(&c, ratio(0.5), 10_000, 8, 0).is_err());
    }

    #[test]
    fn error_shrinks_with_photon_count() {
        let c = cfg(
            ModelKind::Config1Inside,
            (0.727, 0.396),
            (0.904, 0.908),
            0.992,
        );
        let a = analytic::config1_inside(&c, ratio(0.3)).unwrap();
        let rms = |n: u64| {
            let mut sum = 0.0;
            for seed in 0..8 {
                let est = estimate_duality(&c, ratio(0.3), n, 16, 100 + seed).unwrap();
                sum += (est.point.p - a.p).powi(2) + (est.point.v() - a.v()).powi(2);
            }
            (sum / 8.0).sqrt()
        };
        let ratio_err = rms(10_000) / rms(1_000_000);
        assert!(
            (4.0..25.0).contains(&ratio_err),
            "shrink factor {ratio_err}"
        );
    }
}
