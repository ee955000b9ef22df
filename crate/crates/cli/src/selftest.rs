//! Quick invariant checks runnable from an installed binary.

use duality_core::analytic::{self, V2Form};
use duality_core::dataset::{self, uniform_grid};
use duality_core::protocols;
use duality_core::{DetectorPair, ExperimentConfig, Layout, LossPair, ModelKind, SplitRatio};

use crate::commands::Io;
use crate::error::CliError;

type Check = fn() -> Result<String, String>;

const CHECKS: [(&str, Check); 7] = [
    ("lossless duality identity", lossless_identity),
    (
        "inside-loss identity with equal efficiencies",
        inside_identity,
    ),
    ("protocol matches analytic model", protocol_equivalence),
    ("symmetrized duality bounded by 1", symmetrized_bound),
    (
        "detector-2 visibility uses the corrected denominator",
        corrected_visibility,
    ),
    ("turning points of the merger layout", turning_points),
    ("CSV round trip", csv_round_trip),
];

pub fn run(io: &mut Io<'_>) -> Result<(), CliError> {
    let mut failures = 0;
    for (name, check) in CHECKS {
        match check() {
            Ok(detail) => writeln!(io.out, "PASS  {name}: {detail}")?,
            Err(detail) => {
                failures += 1;
                writeln!(io.out, "FAIL  {name}: {detail}")?;
            }
        }
    }
    if failures > 0 {
        return Err(CliError::usage(format!(
            "{failures} self-test check(s) failed"
        )));
    }
    Ok(())
}

fn cfg(model: ModelKind, l: (f64, f64), q: (f64, f64), v0: f64) -> ExperimentConfig {
    ExperimentConfig::for_model(
        model,
        LossPair::new(l.0, l.1).unwrap(),
        DetectorPair::new(q.0, q.1).unwrap(),
        v0,
    )
    .unwrap()
}

fn max_deviation(cfg: &ExperimentConfig, target: f64) -> Result<f64, String> {
    let data = analytic::analytic_sweep(cfg, &uniform_grid(101)).map_err(|e| e.to_string())?;
    Ok(data
        .points()
        .iter()
        .map(|p| (p.duality() - target).abs())
        .fold(0.0, f64::max))
}

fn within(dev: f64, tol: f64) -> Result<String, String> {
    let text = format!("max deviation {dev:.3e} (tolerance {tol:.0e})");
    if dev <= tol {
        Ok(text)
    } else {
        Err(text)
    }
}

fn lossless_identity() -> Result<String, String> {
    let mut worst = 0.0f64;
    for layout in [Layout::SplitterVariable, Layout::MergerVariable] {
        worst = worst.max(max_deviation(&ExperimentConfig::ideal(layout), 1.0)?);
    }
    within(worst, 1e-12)
}

fn inside_identity() -> Result<String, String> {
    let c = cfg(ModelKind::Config1Inside, (0.727, 0.396), (0.9, 0.9), 1.0);
    within(max_deviation(&c, 1.0)?, 1e-12)
}

fn protocol_equivalence() -> Result<String, String> {
    let grid = uniform_grid(21);
    let mut worst = 0.0f64;
    for model in ModelKind::ALL {
        let c = cfg(model, (0.6, 0.2), (0.9, 0.9), 0.97);
        let a = analytic::analytic_sweep(&c, &grid).map_err(|e| e.to_string())?;
        let p = protocols::duality_sweep(&c, &grid, protocols::DEFAULT_PHASE_SAMPLES, None)
            .map_err(|e| e.to_string())?;
        if a.len() != p.len() {
            return Err(format!(
                "{model}: {} analytic vs {} protocol points",
                a.len(),
                p.len()
            ));
        }
        for (x, y) in a.points().iter().zip(p.points()) {
            worst = worst
                .max((x.p - y.p).abs())
                .max((x.v1 - y.v1).abs())
                .max((x.v2 - y.v2).abs());
        }
    }
    within(worst, 1e-9)
}

fn symmetrized_bound() -> Result<String, String> {
    let mut worst = f64::NEG_INFINITY;
    for model in ModelKind::ALL {
        for l in [(0.0, 0.7), (0.999, 0.0), (0.3, 0.99)] {
            let c = cfg(model, l, (0.8, 1.0), 0.95);
            for r in uniform_grid(99) {
                let pt = analytic::symmetrize(&c, SplitRatio::new(r).unwrap())
                    .map_err(|e| e.to_string())?;
                worst = worst.max(pt.duality());
            }
        }
    }
    let text = format!("max P²+V² = {worst:.12}");
    if worst <= 1.0 + 1e-12 {
        Ok(text)
    } else {
        Err(text)
    }
}

fn turning_points() -> Result<String, String> {
    let c = cfg(
        ModelKind::Config2Outside,
        (0.735, 0.434),
        (0.904, 0.908),
        0.99,
    );
    let [a, b] = analytic::turning_points(&c).map_err(|e| e.to_string())?;
    let text = format!("r = {a:.4}, {b:.4}");
    if (a + b - 1.0).abs() < 1e-9 && a < b {
        Ok(text)
    } else {
        Err(text)
    }
}

fn csv_round_trip() -> Result<String, String> {
    let c = cfg(
        ModelKind::Config2Inside,
        (0.764, 0.505),
        (0.904, 0.908),
        0.99,
    );
    let data = analytic::analytic_sweep(&c, &uniform_grid(21)).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    dataset::write_csv(&data, &mut buf).map_err(|e| e.to_string())?;
    let back = dataset::read_csv(buf.as_slice()).map_err(|e| e.to_string())?;
    if back == data {
        Ok(format!("{} points identical", data.len()))
    } else {
        Err("read-back dataset differs".into())
    }
}

fn corrected_visibility() -> Result<String, String> {
    let c = cfg(ModelKind::Config2Inside, (0.764, 0.505), (1.0, 1.0), 1.0);
    let r = SplitRatio::new(0.3).unwrap();
    let field = protocols::run_fringe_scan(&c, r, protocols::DEFAULT_PHASE_SAMPLES)
        .and_then(|scan| protocols::extract_visibility(&scan))
        .map_err(|e| e.to_string())?
        .1;
    let corrected = analytic::config2_inside_with(&c, r, V2Form::Corrected)
        .map_err(|e| e.to_string())?
        .v2;
    let printed = analytic::config2_inside_with(&c, r, V2Form::Printed)
        .map_err(|e| e.to_string())?
        .v2;
    let text = format!("field {field:.6}, corrected {corrected:.6}, printed {printed:.6}");
    if (field - corrected).abs() < 1e-9 && (field - printed).abs() > 0.01 {
        Ok(text)
    } else {
        Err(text)
    }
}
