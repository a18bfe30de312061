use std::collections::BTreeMap;
use std::path::Path;

use landau_core::solver::{run as run_solver, SolverConfig, TimeSeries};
use landau_core::{generate_distribution, DistributionSpec, VelocityGrid};
use serde::{Deserialize, Serialize};

use crate::{io, CliError};

fn default_dim() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub half_width: f64,
    pub nodes_per_axis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub initial: DistributionSpec,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub invariants_held: bool,
    pub max_mass_drift: f64,
    pub max_entropy_increase: f64,
    pub max_clip_fraction: f64,
    pub warnings: Vec<String>,
}

/// Config echo with the effective overrides applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub versions: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub summary: RunSummary,
}

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const FINAL_STATE_FILE: &str = "final_state.json";
pub const MANIFEST_FILE: &str = "manifest.json";

fn header(series: &TimeSeries, dim: usize) -> Vec<String> {
    let mut h: Vec<String> = vec!["step".into(), "t".into(), "mass".into()];
    if dim == 3 {
        h.extend(["px", "py", "pz"].map(String::from));
    } else {
        h.extend((0..dim).map(|d| format!("p{d}")));
    }
    h.extend(["energy", "H", "D"].map(String::from));
    if let Some(r) = series.records.first() {
        h.extend(r.moments.iter().map(|(l, _)| format!("M_{l}")));
    }
    h.extend(["fisher_w", "l3w_norm", "clipped_mass"].map(String::from));
    if let Some(r) = series.records.first() {
        h.extend(r.lp.iter().map(|lp| format!("lp_net_{}", lp.k)));
    }
    h.extend(["dt", "int_D", "int_l3w"].map(String::from));
    h
}

fn write_diagnostics(path: &Path, series: &TimeSeries, dim: usize) -> Result<(), CliError> {
    let mut w = io::csv_writer(path)?;
    w.write_record(header(series, dim)).map_err(|e| io::csv_error(path, e))?;
    for r in &series.records {
        let mut row = vec![r.step.to_string(), r.time.to_string(), r.mass.to_string()];
        row.extend(r.momentum.iter().map(f64::to_string));
        row.extend([r.energy, r.entropy, r.dissipation].map(|x| x.to_string()));
        row.extend(r.moments.iter().map(|(_, m)| m.to_string()));
        row.extend([r.fisher_weighted, r.l3w_norm, r.clipped_mass].map(|x| x.to_string()));
        row.extend(r.lp.iter().map(|lp| lp.net.to_string()));
        row.extend([r.dt, r.int_dissipation, r.int_l3w].map(|x| x.to_string()));
        w.write_record(&row).map_err(|e| io::csv_error(path, e))?;
    }
    w.flush().map_err(|e| io::csv_error(path, e))
}

pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let g = &cfg.grid;
    let grid = VelocityGrid::new(g.dim, g.half_width, g.nodes_per_axis)?;
    let f0 = generate_distribution(&cfg.initial, &grid)?;
    let (series, last) = run_solver(&f0, &cfg.solver).map_err(|e| CliError::Failed(format!("solver: {e}")))?;
    io::create_dir(out_dir)?;
    write_diagnostics(&out_dir.join(DIAGNOSTICS_FILE), &series, g.dim)?;
    last.write_json(&out_dir.join(FINAL_STATE_FILE))?;
    let summary = RunSummary {
        steps: cfg.solver.steps,
        final_time: series.records.last().map_or(0.0, |r| r.time),
        invariants_held: series.invariants_held(),
        max_mass_drift: series.max_mass_drift,
        max_entropy_increase: series.max_entropy_increase,
        max_clip_fraction: series.max_clip_fraction,
        warnings: series.warnings.clone(),
    };
    let manifest = Manifest {
        config: cfg.clone(),
        versions: BTreeMap::from([
            ("landau-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("landau-core".to_string(), landau_core::VERSION.to_string()),
        ]),
        outputs: BTreeMap::from([
            ("diagnostics".to_string(), DIAGNOSTICS_FILE.to_string()),
            ("final_state".to_string(), FINAL_STATE_FILE.to_string()),
        ]),
        summary: summary.clone(),
    };
    io::write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    if summary.invariants_held {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "run invariants violated: mass drift {:e}, entropy increase {:e}, clip fraction {:e}",
            summary.max_mass_drift, summary.max_entropy_increase, summary.max_clip_fraction
        )))
    }
}
