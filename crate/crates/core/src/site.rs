//! Synthetic sites: a warehouse load and a PV plant shape for a tropical or
//! subtropical climate, assembled into a ready-to-run [`Scenario`].

use serde::{Deserialize, Serialize};

use crate::dispatch::{DispatchError, Scenario};
use crate::profiles::{
    synth_load_profile, synth_pv_profile, LoadSynthParams, PvPlantConfig, PvSynthParams, TariffSchedule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Climate {
    Tropical,
    Subtropical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSite {
    pub pv: PvSynthParams,
    pub load: LoadSynthParams,
    /// Yearly output of the reference plant whose shape is rescaled.
    pub pv_base_annual_kwh: f64,
}

pub const DEFAULT_ANNUAL_LOAD_KWH: f64 = 3.0e6;
pub const DEFAULT_PV_BASE_KWH: f64 = 1.5e6;

impl SyntheticSite {
    pub fn new(climate: Climate, seed: u64) -> Self {
        let pv = match climate {
            Climate::Tropical => PvSynthParams::tropical(seed),
            Climate::Subtropical => PvSynthParams::subtropical(seed),
        };
        Self {
            pv,
            load: LoadSynthParams::warehouse(DEFAULT_ANNUAL_LOAD_KWH, seed.wrapping_add(1)),
            pv_base_annual_kwh: DEFAULT_PV_BASE_KWH,
        }
    }

    pub fn scenario(&self, horizon: u32) -> Result<Scenario, DispatchError> {
        let per_kwp = synth_pv_profile(&self.pv)?;
        let base_kwp = self.pv_base_annual_kwh / self.pv.annual_kwh_per_kwp;
        let base = per_kwp.scaled(base_kwp)?;
        let plant = PvPlantConfig::new(base, base_kwp, PvPlantConfig::DEFAULT_DEPRECIATION)?;
        let load = synth_load_profile(&self.load)?;
        Ok(Scenario::new(load, plant, TariffSchedule::default(), horizon))
    }
}
