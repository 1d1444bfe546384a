//! JSON run reports.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use ressize_core::dispatch::{ReplacementEvent, SimulationResult, StrategyConfig, SystemSizing};
use ressize_core::economics::EconomicSummary;

#[derive(Debug, Clone, Serialize)]
pub struct SimulationBrief {
    pub years: usize,
    pub total_load_kwh: f64,
    pub total_import_kwh: f64,
    pub total_curtailed_kwh: f64,
    pub final_level: f64,
    pub replacements: Vec<ReplacementEvent>,
}

impl From<&SimulationResult> for SimulationBrief {
    fn from(r: &SimulationResult) -> Self {
        Self {
            years: r.years.len(),
            total_load_kwh: r.total_load(),
            total_import_kwh: r.total_import(),
            total_curtailed_kwh: r.total_curtailed(),
            final_level: r.final_level,
            replacements: r.replacements.clone(),
        }
    }
}

/// Hour-by-hour re-check of the power balance and storage bookkeeping.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct LedgerAudit {
    pub hours: usize,
    /// Largest `|load - (eta (pv_to_load + delivered) + import)| / load`.
    pub max_balance_residual: f64,
    /// Largest storage-level residual relative to `max(level, 1)`.
    pub max_storage_residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArchiveRef {
    pub algorithm: String,
    pub path: PathBuf,
    pub seed: u64,
    pub evaluations: usize,
    pub feasible_entries: usize,
    pub hypervolume: f64,
    pub reference: [f64; 2],
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub total_seconds: f64,
    /// One entry per optimizer run, in run order.
    pub runs_seconds: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub scenario_digest: String,
    pub seed: Option<u64>,
    pub sizing: Option<SystemSizing>,
    pub strategy: Option<StrategyConfig>,
    pub economics: Option<EconomicSummary>,
    pub simulation: Option<SimulationBrief>,
    pub audit: Option<LedgerAudit>,
    pub archives: Vec<ArchiveRef>,
    pub timings: Timings,
}

impl RunReport {
    pub fn new(command: &str, digest: &str) -> Self {
        Self {
            command: command.into(),
            scenario_digest: digest.into(),
            seed: None,
            sizing: None,
            strategy: None,
            economics: None,
            simulation: None,
            audit: None,
            archives: Vec::new(),
            timings: Timings::default(),
        }
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}
