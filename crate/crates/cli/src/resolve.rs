//! Turns CLI flags and optional JSON config files into validated
//! configurations.

use std::path::Path;

use duality_core::rng::{DEFAULT_SEED, SEED_ENV_VAR};
use duality_core::{DetectorPair, ExperimentConfig, Layout, LossPair, LossPlacement};
use serde::Deserialize;

use crate::args::{ConfigArgs, LayoutArg, PlacementArg};
use crate::error::CliError;

/// Config file contents; every field optional so flags can fill the rest.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    layout: Option<Layout>,
    loss_placement: Option<LossPlacement>,
    losses: Option<PairFile>,
    efficiencies: Option<EffFile>,
    v0: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairFile {
    l1: f64,
    l2: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EffFile {
    q1: f64,
    q2: f64,
}

fn read_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn resolve_config(args: &ConfigArgs) -> Result<ExperimentConfig, CliError> {
    let file = match &args.config_file {
        Some(path) => read_file(path)?,
        None => ConfigFile::default(),
    };
    let layout = match args.layout {
        Some(LayoutArg::One) => Layout::SplitterVariable,
        Some(LayoutArg::Two) => Layout::MergerVariable,
        None => file.layout.unwrap_or(Layout::SplitterVariable),
    };
    let placement = match args.losses {
        Some(PlacementArg::None) => LossPlacement::None,
        Some(PlacementArg::Inside) => LossPlacement::Inside,
        Some(PlacementArg::Outside) => LossPlacement::Outside,
        None => file.loss_placement.unwrap_or(LossPlacement::None),
    };
    let (fl1, fl2) = file.losses.map_or((0.0, 0.0), |p| (p.l1, p.l2));
    let (fq1, fq2) = file.efficiencies.map_or((1.0, 1.0), |p| (p.q1, p.q2));
    let losses = LossPair::new(args.l1.unwrap_or(fl1), args.l2.unwrap_or(fl2))?;
    let eff = DetectorPair::new(args.q1.unwrap_or(fq1), args.q2.unwrap_or(fq2))?;
    let v0 = args.v0.or(file.v0).unwrap_or(1.0);
    Ok(ExperimentConfig::new(layout, placement, losses, eff, v0)?)
}

/// Flags that reproduce `cfg` without a config file.
pub fn explicit_config(cfg: &ExperimentConfig) -> ConfigArgs {
    ConfigArgs {
        config_file: None,
        layout: Some(match cfg.layout() {
            Layout::SplitterVariable => LayoutArg::One,
            Layout::MergerVariable => LayoutArg::Two,
        }),
        losses: Some(match cfg.loss_placement() {
            LossPlacement::None => PlacementArg::None,
            LossPlacement::Inside => PlacementArg::Inside,
            LossPlacement::Outside => PlacementArg::Outside,
        }),
        l1: Some(cfg.losses().l1()),
        l2: Some(cfg.losses().l2()),
        q1: Some(cfg.efficiencies().q1()),
        q2: Some(cfg.efficiencies().q2()),
        v0: Some(cfg.v0()),
    }
}

/// `--seed`, else the environment override, else the built-in default.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(text) => text.trim().parse().map_err(|_| {
            CliError::usage(format!(
                "{SEED_ENV_VAR}=`{text}` is not an unsigned integer"
            ))
        }),
        Err(_) => Ok(DEFAULT_SEED),
    }
}
