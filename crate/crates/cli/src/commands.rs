use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use duality_core::analytic::{self, ModelParams};
use duality_core::dataset::{self, format_float, uniform_grid};
use duality_core::estimation::{self, Observables};
use duality_core::photon_mc;
use duality_core::protocols;
use duality_core::{
    DualityError, ExperimentConfig, FitProblem, ModelKind, Noise, Param, SplitRatio, SweepDataset,
};

use crate::args::{
    Command, FigureArgs, FitArgs, FringeArgs, MonteCarloArgs, ReplayArgs, SweepArgs, SweepMode,
};
use crate::error::CliError;
use crate::manifest::{sidecar_path, RunManifest};
use crate::presets;
use crate::resolve::{explicit_config, resolve_config, resolve_seed};
use crate::selftest;

/// Process-level writers handed to each command.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

pub fn dispatch(command: Command, io: &mut Io<'_>) -> Result<(), CliError> {
    match command {
        Command::Sweep(args) => sweep(args, io),
        Command::Fringe(args) => fringe(args, io),
        Command::Montecarlo(args) => montecarlo(args, io),
        Command::Fit(args) => fit(args, io),
        Command::ReproduceFigure(args) => reproduce_figure(args, io),
        Command::Selftest => selftest::run(io),
        Command::Replay(args) => replay(args, io),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", path.display())))
}

/// Writes `body` to `path` (plus its manifest) or to stdout.
fn emit(
    path: Option<&Path>,
    manifest: impl FnOnce() -> RunManifest,
    io: &mut Io<'_>,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), CliError> {
    match path {
        Some(path) => {
            let mut file = create(path)?;
            body(&mut file)?;
            file.flush()?;
            manifest().write(&sidecar_path(path))?;
        }
        None => body(io.out)?,
    }
    Ok(())
}

fn check_grid(n: usize) -> Result<Vec<f64>, CliError> {
    if n < 2 {
        return Err(CliError::usage("--grid needs at least 2 points"));
    }
    Ok(uniform_grid(n))
}

fn check_phases(n: usize) -> Result<(), CliError> {
    if n < protocols::MIN_PHASE_SAMPLES {
        return Err(CliError::usage(format!(
            "--phases needs at least {}",
            protocols::MIN_PHASE_SAMPLES
        )));
    }
    Ok(())
}

fn ratio(r: f64) -> Result<SplitRatio, CliError> {
    SplitRatio::new(r).map_err(|e| CliError::usage(e.to_string()))
}

fn symmetrized_sweep(cfg: &ExperimentConfig, grid: &[f64]) -> Result<SweepDataset, DualityError> {
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &r in grid {
        match analytic::symmetrize(cfg, SplitRatio::new(r)?) {
            Ok(p) => points.push(p),
            Err(e) if e.is_degenerate() => skipped.push(r),
            Err(e) => return Err(e),
        }
    }
    if points.is_empty() {
        return Err(DualityError::Degenerate(
            "every grid point is degenerate".into(),
        ));
    }
    SweepDataset::with_skipped(points, skipped)
}

fn report_skipped(data: &SweepDataset, io: &mut Io<'_>) -> Result<(), CliError> {
    if data.is_empty() {
        return Err(CliError::Degenerate(
            "every grid point is degenerate".into(),
        ));
    }
    if !data.skipped().is_empty() {
        let list: Vec<String> = data.skipped().iter().map(|r| r.to_string()).collect();
        writeln!(io.err, "skipped degenerate ratios: {}", list.join(", "))?;
    }
    Ok(())
}

fn noise_for(sigma: f64, seed: u64) -> Result<Option<Noise>, CliError> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(CliError::usage("--noise must be finite and nonnegative"));
    }
    Ok((sigma > 0.0).then_some(Noise { sigma, seed }))
}

fn sweep(args: SweepArgs, io: &mut Io<'_>) -> Result<(), CliError> {
    let cfg = resolve_config(&args.config)?;
    let grid = check_grid(args.grid)?;
    let seed = match args.mode {
        SweepMode::Protocol if args.noise > 0.0 => Some(resolve_seed(args.seed)?),
        _ => None,
    };
    let data = match args.mode {
        SweepMode::Analytic => analytic::analytic_sweep(&cfg, &grid)?,
        SweepMode::Symmetrized => symmetrized_sweep(&cfg, &grid)?,
        SweepMode::Protocol => {
            check_phases(args.phases)?;
            let noise = noise_for(args.noise, seed.unwrap_or_default())?;
            protocols::duality_sweep(&cfg, &grid, args.phases, noise)?
        }
    };
    report_skipped(&data, io)?;
    let invocation = Command::Sweep(SweepArgs {
        config: explicit_config(&cfg),
        seed,
        ..args.clone()
    });
    emit(
        args.out.as_deref(),
        || RunManifest::new(invocation, Some(cfg), seed),
        io,
        |w| dataset::write_csv(&data, w),
    )
}

fn fringe(args: FringeArgs, io: &mut Io<'_>) -> Result<(), CliError> {
    let cfg = resolve_config(&args.config)?;
    check_phases(args.phases)?;
    let scan = protocols::run_fringe_scan(&cfg, ratio(args.r)?, args.phases)?;
    let invocation = Command::Fringe(FringeArgs {
        config: explicit_config(&cfg),
        ..args.clone()
    });
    emit(
        args.out.as_deref(),
        || RunManifest::new(invocation, Some(cfg), None),
        io,
        |w| {
            writeln!(w, "phase,i1,i2")?;
            for ((phi, a), b) in scan.phases.iter().zip(&scan.i1).zip(&scan.i2) {
                writeln!(
                    w,
                    "{},{},{}",
                    format_float(*phi),
                    format_float(*a),
                    format_float(*b)
                )?;
            }
            Ok(())
        },
    )
}

const MC_HEADER: &str =
    "r,p,p_se,v1,v1_se,v2,v2_se,duality1,duality1_se,duality2,duality2_se,source";

fn montecarlo(args: MonteCarloArgs, io: &mut Io<'_>) -> Result<(), CliError> {
    let cfg = resolve_config(&args.config)?;
    if args.r.is_empty() {
        return Err(CliError::usage("--r needs at least one ratio"));
    }
    if args.photons < photon_mc::MIN_PHOTONS_PER_PHASE {
        return Err(CliError::usage(format!(
            "--photons needs at least {}",
            photon_mc::MIN_PHOTONS_PER_PHASE
        )));
    }
    check_phases(args.phases)?;
    let seed = resolve_seed(args.seed)?;
    let mut estimates = Vec::with_capacity(args.r.len());
    for (i, &r) in args.r.iter().enumerate() {
        // each ratio gets its own seed so estimates are independent
        let est = photon_mc::estimate_duality(
            &cfg,
            ratio(r)?,
            args.photons,
            args.phases,
            seed.wrapping_add(i as u64),
        )?;
        estimates.push(est);
    }
    for est in &estimates {
        let pt = &est.point;
        writeln!(
            io.err,
            "r={:.4}  P={:.5}±{:.5}  V1={:.5}±{:.5}  V2={:.5}±{:.5}  P²+V²={:.5}±{:.5}",
            pt.r,
            pt.p,
            est.p_se,
            pt.v1,
            est.v1_se,
            pt.v2,
            est.v2_se,
            pt.duality1(),
            est.duality1_se()
        )?;
    }
    let invocation = Command::Montecarlo(MonteCarloArgs {
        config: explicit_config(&cfg),
        seed: Some(seed),
        ..args.clone()
    });
    emit(
        args.out.as_deref(),
        || RunManifest::new(invocation, Some(cfg), Some(seed)),
        io,
        |w| {
            writeln!(w, "{MC_HEADER}")?;
            for est in &estimates {
                let pt = &est.point;
                let cols = [
                    pt.r,
                    pt.p,
                    est.p_se,
                    pt.v1,
                    est.v1_se,
                    pt.v2,
                    est.v2_se,
                    pt.duality1(),
                    est.duality1_se(),
                    pt.duality2(),
                    est.duality2_se(),
                ];
                let text: Vec<String> = cols.iter().map(|&x| format_float(x)).collect();
                writeln!(w, "{},{}", text.join(","), pt.source.name())?;
            }
            Ok(())
        },
    )
}

fn parse_observables(list: &[String]) -> Result<Observables, CliError> {
    let mut obs = Observables {
        p_sq: false,
        v_sq: false,
    };
    for item in list {
        match item.trim().to_ascii_lowercase().as_str() {
            "p2" => obs.p_sq = true,
            "v2" => obs.v_sq = true,
            other => {
                return Err(CliError::usage(format!(
                    "unknown observable `{other}` (expected p2 or v2)"
                )))
            }
        }
    }
    Ok(obs)
}

fn fit(args: FitArgs, io: &mut Io<'_>) -> Result<(), CliError> {
    let model: ModelKind = args
        .model
        .parse()
        .map_err(|e: DualityError| CliError::usage(e.to_string()))?;
    let data = dataset::read_dataset(&args.input)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.input.display())))?;
    let fixed = ModelParams {
        l1: args.l1.unwrap_or(0.0),
        l2: args.l2.unwrap_or(0.0),
        q1: args.q1.unwrap_or(1.0),
        q2: args.q2.unwrap_or(1.0),
        v0: args.v0.unwrap_or(1.0),
    };
    let mut problem = FitProblem::new(&data, model, fixed)
        .with_observables(parse_observables(&args.observables)?);
    for name in &args.free {
        let param: Param = name.parse()?;
        problem = problem.free(param)?;
    }
    let result = estimation::fit(&problem)?;
    let mut text = serde_json::to_string_pretty(&result)?;
    text.push('\n');
    io.out.write_all(text.as_bytes())?;
    if !result.identifiable {
        writeln!(
            io.err,
            "warning: the free parameters are not separately identifiable from this data; \
             covariance is infinite"
        )?;
    }
    if !result.converged {
        return Err(CliError::NotConverged(format!(
            "stopped after {} iterations",
            result.iterations
        )));
    }
    Ok(())
}

/// Names of the files written by `reproduce-figure`.
pub fn figure_files(out_dir: &Path, label: &str) -> [PathBuf; 4] {
    [
        out_dir.join(format!("fig{label}_curve.csv")),
        out_dir.join(format!("fig{label}_baseline.csv")),
        out_dir.join(format!("fig{label}_measured.csv")),
        out_dir.join(format!("fig{label}.manifest.json")),
    ]
}

fn write_to(path: &Path, data: &SweepDataset) -> Result<(), CliError> {
    let mut file = create(path)?;
    dataset::write_csv(data, &mut file)?;
    file.flush()?;
    Ok(())
}

fn reproduce_figure(args: FigureArgs, io: &mut Io<'_>) -> Result<(), CliError> {
    let cfg = presets::figure_config(args.figure);
    let baseline = presets::figure_baseline(args.figure);
    let curve_grid = check_grid(args.curve_grid)?;
    let measured_grid = check_grid(args.measured_grid)?;
    check_phases(args.phases)?;
    let seed = resolve_seed(args.seed)?;
    let noise = noise_for(args.noise, seed)?;

    let curve = analytic::analytic_sweep(&cfg, &curve_grid)?;
    let base = analytic::analytic_sweep(&baseline, &curve_grid)?;
    let measured = protocols::duality_sweep(&cfg, &measured_grid, args.phases, noise)?;

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let [curve_path, base_path, measured_path, manifest_path] =
        figure_files(&args.out_dir, args.figure.label());
    write_to(&curve_path, &curve)?;
    write_to(&base_path, &base)?;
    write_to(&measured_path, &measured)?;
    let invocation = Command::ReproduceFigure(FigureArgs {
        seed: Some(seed),
        ..args.clone()
    });
    RunManifest::new(invocation, Some(cfg), Some(seed)).write(&manifest_path)?;

    let peak = curve
        .points()
        .iter()
        .max_by(|a, b| a.duality().total_cmp(&b.duality()))
        .expect("curve is nonempty");
    writeln!(
        io.err,
        "figure {}: {} — peak P²+V² = {:.4} at r = {:.2}; wrote {}",
        args.figure.label(),
        cfg.model(),
        peak.duality(),
        peak.r,
        args.out_dir.display()
    )?;
    Ok(())
}

fn replay(args: ReplayArgs, io: &mut Io<'_>) -> Result<(), CliError> {
    let manifest = RunManifest::read(&args.manifest)?;
    let mut invocation = manifest.invocation;
    match &mut invocation {
        Command::Sweep(a) => override_out(&mut a.out, args.out),
        Command::Fringe(a) => override_out(&mut a.out, args.out),
        Command::Montecarlo(a) => override_out(&mut a.out, args.out),
        Command::ReproduceFigure(a) => {
            if let Some(dir) = args.out_dir {
                a.out_dir = dir;
            }
        }
        Command::Fit(_) | Command::Selftest | Command::Replay(_) => {}
    }
    dispatch(invocation, io)
}

fn override_out(slot: &mut Option<PathBuf>, new: Option<PathBuf>) {
    if new.is_some() {
        *slot = new;
    }
}
