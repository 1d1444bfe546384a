//! Hourly energy management (conventional strategy and the long-duration
//! strategy for hydrogen) and the multi-year horizon run.
//!
//! Conventions: PV and storage sit on the DC side of a single inverter with
//! efficiency `η_I`; the grid connects on the AC side. Every hour satisfies
//!
//! ```text
//! load = η_I · (pv_to_load + storage_delivered_dc) + grid_import
//! ```
//!
//! PV that neither the load nor storage can absorb is curtailed; nothing is
//! exported.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profiles::{HourlySeries, PerBand, ProfileError, PvPlantConfig, RateBand, TariffSchedule};
use crate::storage::{
    electrolyser_step, fuel_cell_step, BatteryParams, BatteryState, PolarizationCurve, StackKind, StackState,
    StorageError, TankState,
};
use crate::HOURS_PER_YEAR;

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("the long-duration strategy needs hydrogen storage, got a battery sizing")]
    OldsRequiresHydrogen,
    #[error("invalid sizing: {0}")]
    InvalidSizing(String),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("inconsistent scenario: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Physical components that carry cost and may be replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Pv,
    Battery,
    Electrolyser,
    Tank,
    FuelCell,
}

impl Component {
    pub const ALL: [Component; 5] = [
        Component::Pv,
        Component::Battery,
        Component::Electrolyser,
        Component::Tank,
        Component::FuelCell,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Component::Pv => "pv",
            Component::Battery => "battery",
            Component::Electrolyser => "electrolyser",
            Component::Tank => "tank",
            Component::FuelCell => "fuel_cell",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StorageSizing {
    Battery { battery_kwh: f64 },
    Hydrogen { el_kw: f64, tank_kg: f64, fc_kw: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemSizing {
    pub pv_kwp: f64,
    pub storage: StorageSizing,
    pub inverter_efficiency: f64,
}

impl SystemSizing {
    pub const DEFAULT_INVERTER_EFFICIENCY: f64 = 0.97;

    /// No PV and no storage: the grid serves the whole load.
    pub fn baseline() -> Self {
        Self {
            pv_kwp: 0.0,
            storage: StorageSizing::Battery { battery_kwh: 0.0 },
            inverter_efficiency: Self::DEFAULT_INVERTER_EFFICIENCY,
        }
    }

    pub fn battery(pv_kwp: f64, battery_kwh: f64) -> Self {
        Self {
            pv_kwp,
            storage: StorageSizing::Battery { battery_kwh },
            inverter_efficiency: Self::DEFAULT_INVERTER_EFFICIENCY,
        }
    }

    pub fn hydrogen(pv_kwp: f64, el_kw: f64, tank_kg: f64, fc_kw: f64) -> Self {
        Self {
            pv_kwp,
            storage: StorageSizing::Hydrogen { el_kw, tank_kg, fc_kw },
            inverter_efficiency: Self::DEFAULT_INVERTER_EFFICIENCY,
        }
    }

    pub fn is_hydrogen(&self) -> bool {
        matches!(self.storage, StorageSizing::Hydrogen { .. })
    }

    /// Installed size of each component (kWp, kWh, kW or kg).
    pub fn component_sizes(&self) -> Vec<(Component, f64)> {
        let mut out = vec![(Component::Pv, self.pv_kwp)];
        match self.storage {
            StorageSizing::Battery { battery_kwh } => out.push((Component::Battery, battery_kwh)),
            StorageSizing::Hydrogen { el_kw, tank_kg, fc_kw } => {
                out.push((Component::Electrolyser, el_kw));
                out.push((Component::Tank, tank_kg));
                out.push((Component::FuelCell, fc_kw));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), DispatchError> {
        if !(self.inverter_efficiency > 0.0 && self.inverter_efficiency <= 1.0) {
            return Err(DispatchError::InvalidSizing(format!(
                "inverter_efficiency must be in (0, 1], got {}",
                self.inverter_efficiency
            )));
        }
        for (c, s) in self.component_sizes() {
            if !(s.is_finite() && s >= 0.0) {
                return Err(DispatchError::InvalidSizing(format!("{c} size must be >= 0, got {s}")));
            }
        }
        Ok(())
    }
}

/// A point in the (non-leap) year: 1-based day and hour of day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeOfYear {
    pub day: u16,
    pub hour: u8,
}

impl TimeOfYear {
    pub fn new(day: u16, hour: u8) -> Result<Self, DispatchError> {
        if !(1..=365).contains(&day) || hour > 23 {
            return Err(DispatchError::InvalidStrategy(format!(
                "time of year day {day} hour {hour} outside 1..=365 / 0..=23"
            )));
        }
        Ok(Self { day, hour })
    }

    pub fn from_hour_index(index: usize) -> Self {
        let index = index.min(HOURS_PER_YEAR - 1);
        Self {
            day: (index / 24 + 1) as u16,
            hour: (index % 24) as u8,
        }
    }

    pub fn hour_index(self) -> usize {
        (usize::from(self.day) - 1) * 24 + usize::from(self.hour)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OldsParams {
    pub window_start: TimeOfYear,
    pub window_end: TimeOfYear,
    /// Tank fraction below which off-peak discharge stops inside the window.
    pub limit_sunny: f64,
    /// Same threshold outside the window.
    pub limit_cloudy: f64,
}

impl OldsParams {
    pub fn validate(&self) -> Result<(), DispatchError> {
        TimeOfYear::new(self.window_start.day, self.window_start.hour)?;
        TimeOfYear::new(self.window_end.day, self.window_end.hour)?;
        for (name, v) in [("limit_sunny", self.limit_sunny), ("limit_cloudy", self.limit_cloudy)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(DispatchError::InvalidStrategy(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// Whether `hour_of_year` falls inside the window; windows whose start
    /// is later than their end wrap across New Year.
    pub fn in_window(&self, hour_of_year: usize) -> bool {
        let (s, e) = (self.window_start.hour_index(), self.window_end.hour_index());
        if s <= e {
            (s..=e).contains(&hour_of_year)
        } else {
            hour_of_year >= s || hour_of_year <= e
        }
    }

    pub fn active_limit(&self, hour_of_year: usize) -> f64 {
        if self.in_window(hour_of_year) {
            self.limit_sunny
        } else {
            self.limit_cloudy
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StrategyConfig {
    Conventional,
    Olds(OldsParams),
}

impl StrategyConfig {
    pub fn validate(&self, sizing: &SystemSizing) -> Result<(), DispatchError> {
        match self {
            StrategyConfig::Conventional => Ok(()),
            StrategyConfig::Olds(p) => {
                if !sizing.is_hydrogen() {
                    return Err(DispatchError::OldsRequiresHydrogen);
                }
                p.validate()
            }
        }
    }
}

/// Power flows of one hour, kW unless noted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourLedger {
    pub load: f64,
    pub pv_generated: f64,
    pub pv_to_load: f64,
    pub pv_to_storage: f64,
    pub pv_curtailed: f64,
    /// Power entering storage (battery charge or electrolyser draw).
    pub charge_power: f64,
    /// Rate at which storage is drawn down: battery removal before losses,
    /// or fuel-cell DC output.
    pub discharge_removal: f64,
    pub delivered_dc: f64,
    pub grid_import: f64,
    pub band: RateBand,
    /// Battery energy (kWh) or tank mass (kg) at the end of the hour.
    pub storage_level: f64,
    pub h2_produced: f64,
    pub h2_consumed: f64,
}

/// Storage model parameters shared by every simulation of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct StoragePhysics {
    pub battery: BatteryParams,
    pub electrolyser_curve: PolarizationCurve,
    pub fuel_cell_curve: PolarizationCurve,
    pub electrolyser_drift: f64,
    pub fuel_cell_drift: f64,
}

impl Default for StoragePhysics {
    fn default() -> Self {
        Self {
            battery: BatteryParams::default(),
            electrolyser_curve: PolarizationCurve::default_electrolyser(),
            fuel_cell_curve: PolarizationCurve::default_fuel_cell(),
            electrolyser_drift: StackState::ELECTROLYSER_DRIFT,
            fuel_cell_drift: StackState::FUEL_CELL_DRIFT,
        }
    }
}

impl StoragePhysics {
    pub fn validate(&self) -> Result<(), DispatchError> {
        self.battery.validate()?;
        if self.electrolyser_curve.kind() != StackKind::Electrolyser {
            return Err(DispatchError::Inconsistent("electrolyser curve has fuel-cell shape".into()));
        }
        if self.fuel_cell_curve.kind() != StackKind::FuelCell {
            return Err(DispatchError::Inconsistent("fuel-cell curve has electrolyser shape".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HydrogenUnits {
    pub electrolyser: Option<StackState>,
    pub tank: TankState,
    pub fuel_cell: Option<StackState>,
}

/// Mutable storage state of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum StorageUnits {
    Battery(BatteryState),
    Hydrogen(HydrogenUnits),
}

impl StorageUnits {
    pub fn build(sizing: &SystemSizing, physics: &StoragePhysics) -> Result<Self, DispatchError> {
        sizing.validate()?;
        Ok(match sizing.storage {
            StorageSizing::Battery { battery_kwh } => {
                StorageUnits::Battery(BatteryState::new(battery_kwh, &physics.battery)?)
            }
            StorageSizing::Hydrogen { el_kw, tank_kg, fc_kw } => StorageUnits::Hydrogen(HydrogenUnits {
                electrolyser: StackState::sized(physics.electrolyser_curve.clone(), el_kw, physics.electrolyser_drift)?,
                tank: TankState::new(tank_kg)?,
                fuel_cell: StackState::sized(physics.fuel_cell_curve.clone(), fc_kw, physics.fuel_cell_drift)?,
            }),
        })
    }

    pub fn level(&self) -> f64 {
        match self {
            StorageUnits::Battery(b) => b.energy,
            StorageUnits::Hydrogen(h) => h.tank.mass,
        }
    }

    fn charge(&mut self, surplus_dc: f64, dt: f64) -> (f64, f64) {
        match self {
            StorageUnits::Battery(b) => (b.charge(surplus_dc, dt), 0.0),
            StorageUnits::Hydrogen(h) => match h.electrolyser.as_mut() {
                Some(el) => {
                    let f = electrolyser_step(el, &mut h.tank, surplus_dc, dt);
                    (f.power, f.h2)
                }
                None => (0.0, 0.0),
            },
        }
    }

    /// Returns (removal, delivered DC, hydrogen consumed).
    fn discharge(&mut self, deficit_dc: f64, dt: f64) -> (f64, f64, f64) {
        match self {
            StorageUnits::Battery(b) => {
                let d = b.discharge(deficit_dc, dt);
                (d.removal, d.delivered, 0.0)
            }
            StorageUnits::Hydrogen(h) => match h.fuel_cell.as_mut() {
                Some(fc) => {
                    let f = fuel_cell_step(fc, &mut h.tank, deficit_dc, dt);
                    (f.power, f.power, f.h2)
                }
                None => (0.0, 0.0, 0.0),
            },
        }
    }
}

#[inline]
fn step_inner(
    inverter_efficiency: f64,
    units: &mut StorageUnits,
    pv: f64,
    load: f64,
    band: RateBand,
    allow_discharge: bool,
    dt: f64,
) -> HourLedger {
    let dc_load = load / inverter_efficiency;
    let pv_to_load = pv.min(dc_load);
    let surplus = (pv - dc_load).max(0.0);
    let deficit = (dc_load - pv).max(0.0);

    let (charge_power, h2_produced) = units.charge(surplus, dt);
    let (discharge_removal, delivered_dc, h2_consumed) = if allow_discharge {
        units.discharge(deficit, dt)
    } else {
        (0.0, 0.0, 0.0)
    };
    let grid_import = (load - inverter_efficiency * (pv_to_load + delivered_dc)).max(0.0);

    HourLedger {
        load,
        pv_generated: pv,
        pv_to_load,
        pv_to_storage: charge_power,
        pv_curtailed: (surplus - charge_power).max(0.0),
        charge_power,
        discharge_removal,
        delivered_dc,
        grid_import,
        band,
        storage_level: units.level(),
        h2_produced,
        h2_consumed,
    }
}

/// Greedy dispatch: store every DC surplus, discharge into every DC deficit.
pub fn step_conventional(
    inverter_efficiency: f64,
    units: &mut StorageUnits,
    pv: f64,
    load: f64,
    band: RateBand,
    dt: f64,
) -> HourLedger {
    step_inner(inverter_efficiency, units, pv, load, band, true, dt)
}

/// Long-duration strategy: charging as usual; while the tank sits below the
/// active limit, off-peak hours are served by the grid instead of the fuel
/// cell. The limit is tested against the level at the start of the hour.
#[allow(clippy::too_many_arguments)]
pub fn step_olds(
    inverter_efficiency: f64,
    units: &mut StorageUnits,
    pv: f64,
    load: f64,
    band: RateBand,
    hour_of_year: usize,
    params: &OldsParams,
    dt: f64,
) -> Result<HourLedger, DispatchError> {
    let tank = match units {
        StorageUnits::Hydrogen(h) => h.tank,
        StorageUnits::Battery(_) => return Err(DispatchError::OldsRequiresHydrogen),
    };
    let limit = params.active_limit(hour_of_year) * tank.capacity;
    let allow = tank.mass >= limit || band != RateBand::OffPeak;
    Ok(step_inner(inverter_efficiency, units, pv, load, band, allow, dt))
}

/// Years (1-based) at whose end each component is swapped for a new one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplacementPlan {
    pub battery: Vec<u32>,
    pub electrolyser: Vec<u32>,
    pub fuel_cell: Vec<u32>,
}

impl ReplacementPlan {
    /// Battery at multiples of its lifetime, electrolyser after year 15,
    /// fuel cell every five years; only years before the final one.
    pub fn standard(horizon: u32, battery_lifetime: u32) -> Self {
        let before = |ys: &[u32]| ys.iter().copied().filter(|&y| y < horizon).collect();
        Self {
            battery: (1..horizon).filter(|y| y % battery_lifetime.max(1) == 0).collect(),
            electrolyser: before(&[15]),
            fuel_cell: before(&[5, 10, 15, 20]),
        }
    }
}

/// Everything a horizon simulation needs besides the sizing and strategy.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub load: HourlySeries,
    pub pv: PvPlantConfig,
    pub tariff: TariffSchedule,
    pub physics: StoragePhysics,
    pub replacements: ReplacementPlan,
    pub horizon: u32,
    /// Step length, hours.
    pub dt: f64,
}

impl Scenario {
    /// Hourly scenario with default storage physics and replacement plan.
    pub fn new(load: HourlySeries, pv: PvPlantConfig, tariff: TariffSchedule, horizon: u32) -> Self {
        let physics = StoragePhysics::default();
        let replacements = ReplacementPlan::standard(horizon, physics.battery.lifetime_years);
        Self {
            load,
            pv: pv.with_horizon(horizon),
            tariff,
            physics,
            replacements,
            horizon,
            dt: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), DispatchError> {
        if self.horizon == 0 {
            return Err(DispatchError::Inconsistent("horizon must be at least one year".into()));
        }
        if self.dt != 1.0 {
            return Err(DispatchError::Inconsistent(format!("only hourly steps are supported, got dt = {}", self.dt)));
        }
        if self.pv.horizon < self.horizon {
            return Err(DispatchError::Inconsistent(format!(
                "PV plant horizon {} shorter than scenario horizon {}",
                self.pv.horizon, self.horizon
            )));
        }
        self.physics.validate()?;
        let lifetime = self.physics.battery.lifetime_years;
        let expected: Vec<u32> = (1..self.horizon).filter(|y| y % lifetime == 0).collect();
        if self.replacements.battery != expected {
            return Err(DispatchError::Inconsistent(format!(
                "battery replacement years {:?} disagree with its {lifetime}-year lifetime (expected {expected:?})",
                self.replacements.battery
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct YearSummary {
    pub year: u32,
    /// Grid import per band, kWh.
    pub import: PerBand<f64>,
    /// Grid import summed hour by hour, kWh.
    pub import_total: f64,
    pub load: f64,
    pub pv_generated: f64,
    pub pv_curtailed: f64,
    pub charged: f64,
    pub discharged: f64,
    pub delivered: f64,
    pub h2_produced: f64,
    pub h2_consumed: f64,
}

impl YearSummary {
    pub fn total_import(&self) -> f64 {
        self.import_total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReplacementEvent {
    pub component: Component,
    pub year: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct HealthPoint {
    pub electrolyser_soh: Option<f64>,
    pub fuel_cell_soh: Option<f64>,
    pub battery_efficiency: Option<f64>,
}

impl HealthPoint {
    fn of(units: &StorageUnits) -> Self {
        match units {
            StorageUnits::Battery(b) => Self {
                battery_efficiency: Some(b.efficiency),
                ..Self::default()
            },
            StorageUnits::Hydrogen(h) => Self {
                electrolyser_soh: h.electrolyser.as_ref().map(StackState::soh),
                fuel_cell_soh: h.fuel_cell.as_ref().map(StackState::soh),
                battery_efficiency: None,
            },
        }
    }
}

/// Component health at the end of a year, before and after that year's
/// rollover (fade and replacements).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HealthSample {
    pub year: u32,
    pub end_of_year: HealthPoint,
    pub after_rollover: HealthPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub years: Vec<YearSummary>,
    pub replacements: Vec<ReplacementEvent>,
    pub health: Vec<HealthSample>,
    pub final_level: f64,
}

impl SimulationResult {
    pub fn total_import(&self) -> f64 {
        self.years.iter().map(YearSummary::total_import).sum()
    }

    pub fn total_load(&self) -> f64 {
        self.years.iter().map(|y| y.load).sum()
    }

    pub fn total_curtailed(&self) -> f64 {
        self.years.iter().map(|y| y.pv_curtailed).sum()
    }
}

/// One hour of a horizon run as seen by an observer.
#[derive(Debug, Clone, Copy)]
pub struct HourRecord<'a> {
    pub year: u32,
    pub hour: usize,
    pub level_before: f64,
    pub ledger: &'a HourLedger,
}

pub fn simulate_horizon(
    scenario: &Scenario,
    sizing: &SystemSizing,
    strategy: &StrategyConfig,
) -> Result<SimulationResult, DispatchError> {
    simulate_horizon_with(scenario, sizing, strategy, |_| {})
}

/// Runs every hour of the horizon, calling `observe` after each step.
pub fn simulate_horizon_with<F>(
    scenario: &Scenario,
    sizing: &SystemSizing,
    strategy: &StrategyConfig,
    mut observe: F,
) -> Result<SimulationResult, DispatchError>
where
    F: FnMut(&HourRecord<'_>),
{
    scenario.validate()?;
    strategy.validate(sizing)?;
    let mut units = StorageUnits::build(sizing, &scenario.physics)?;
    let eta = sizing.inverter_efficiency;
    let dt = scenario.dt;
    let horizon = scenario.horizon;

    let mut years = Vec::with_capacity(horizon as usize);
    let mut replacements = Vec::new();
    let mut health = Vec::with_capacity(horizon as usize);

    for year in 1..=horizon {
        let pv_factor = scenario.pv.year_factor(sizing.pv_kwp, year)?;
        let pv_base = scenario.pv.base_series.year_slice(year);
        let loads = scenario.load.year_slice(year);
        let first_weekday = scenario.load.weekday_at(year, 0).num_days_from_monday() as usize;
        let mut summary = YearSummary {
            year,
            ..YearSummary::default()
        };

        for hour in 0..HOURS_PER_YEAR {
            let pv = pv_base[hour] * pv_factor;
            let load = loads[hour];
            let weekday = crate::profiles::weekday_from_index(first_weekday + hour / 24);
            let band = scenario.tariff.band(weekday, hour % 24);
            let level_before = units.level();
            let ledger = match strategy {
                StrategyConfig::Conventional => step_conventional(eta, &mut units, pv, load, band, dt),
                StrategyConfig::Olds(p) => step_olds(eta, &mut units, pv, load, band, hour, p, dt)?,
            };

            summary.import[band] += ledger.grid_import * dt;
            summary.import_total += ledger.grid_import * dt;
            summary.load += load * dt;
            summary.pv_generated += pv * dt;
            summary.pv_curtailed += ledger.pv_curtailed * dt;
            summary.charged += ledger.charge_power * dt;
            summary.discharged += ledger.discharge_removal * dt;
            summary.delivered += ledger.delivered_dc * dt;
            summary.h2_produced += ledger.h2_produced;
            summary.h2_consumed += ledger.h2_consumed;
            observe(&HourRecord {
                year,
                hour,
                level_before,
                ledger: &ledger,
            });
        }

        let end_of_year = HealthPoint::of(&units);
        match &mut units {
            StorageUnits::Battery(b) => {
                if b.year_rollover(year, horizon) && b.capacity > 0.0 {
                    replacements.push(ReplacementEvent {
                        component: Component::Battery,
                        year,
                    });
                }
            }
            StorageUnits::Hydrogen(h) => {
                if year < horizon {
                    let stacks = [
                        (Component::Electrolyser, &mut h.electrolyser, &scenario.replacements.electrolyser),
                        (Component::FuelCell, &mut h.fuel_cell, &scenario.replacements.fuel_cell),
                    ];
                    for (component, stack, plan) in stacks {
                        if let Some(stack) = stack.as_mut() {
                            if plan.contains(&year) {
                                stack.replace();
                                replacements.push(ReplacementEvent { component, year });
                            }
                        }
                    }
                }
            }
        }
        health.push(HealthSample {
            year,
            end_of_year,
            after_rollover: HealthPoint::of(&units),
        });
        years.push(summary);
    }

    Ok(SimulationResult {
        years,
        replacements,
        health,
        final_level: units.level(),
    })
}

/// Column names of the hourly ledger CSV; power in kW, hydrogen in kg,
/// level in kWh (battery) or kg (tank).
pub const LEDGER_CSV_HEADER: [&str; 14] = [
    "year",
    "hour",
    "band",
    "load",
    "pv",
    "pv_to_load",
    "curtailed",
    "charge",
    "discharge",
    "delivered",
    "import",
    "h2_produced",
    "h2_consumed",
    "level",
];

pub fn ledger_csv_row(record: &HourRecord<'_>) -> [String; 14] {
    let l = record.ledger;
    [
        record.year.to_string(),
        record.hour.to_string(),
        l.band.to_string(),
        l.load.to_string(),
        l.pv_generated.to_string(),
        l.pv_to_load.to_string(),
        l.pv_curtailed.to_string(),
        l.charge_power.to_string(),
        l.discharge_removal.to_string(),
        l.delivered_dc.to_string(),
        l.grid_import.to_string(),
        l.h2_produced.to_string(),
        l.h2_consumed.to_string(),
        l.storage_level.to_string(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn battery_units(capacity: f64, energy: f64) -> StorageUnits {
        let mut b = BatteryState::new(capacity, &BatteryParams::default()).unwrap();
        b.energy = energy;
        StorageUnits::Battery(b)
    }

    fn hydrogen_units(el_kw: f64, tank_kg: f64, fc_kw: f64, mass: f64) -> StorageUnits {
        let sizing = SystemSizing::hydrogen(0.0, el_kw, tank_kg, fc_kw);
        let mut u = StorageUnits::build(&sizing, &StoragePhysics::default()).unwrap();
        if let StorageUnits::Hydrogen(h) = &mut u {
            h.tank.mass = mass;
        }
        u
    }

    fn assert_balance(l: &HourLedger, eta: f64) {
        let rhs = eta * (l.pv_to_load + l.delivered_dc) + l.grid_import;
        assert!((l.load - rhs).abs() <= 1e-9 * l.load.max(1.0), "{l:?}");
    }

    #[test]
    fn balanced_hour_is_idle() {
        let mut u = battery_units(1000.0, 500.0);
        let l = step_conventional(0.97, &mut u, 200.0, 194.0, RateBand::Peak, 1.0);
        assert_eq!(l.charge_power, 0.0);
        assert_eq!(l.delivered_dc, 0.0);
        assert!(l.grid_import < 1e-12);
        assert_eq!(l.pv_curtailed, 0.0);
        assert_balance(&l, 0.97);
    }

    #[test]
    fn surplus_charges_battery() {
        let mut u = battery_units(1000.0, 0.0);
        let l = step_conventional(0.97, &mut u, 500.0, 194.0, RateBand::Peak, 1.0);
        assert_relative_eq!(l.charge_power, 300.0, max_relative = 1e-12);
        assert_eq!(l.grid_import, 0.0);
        assert_eq!(l.pv_curtailed, 0.0);
        assert_balance(&l, 0.97);
    }

    #[test]
    fn deficit_served_then_imported() {
        let mut u = battery_units(1000.0, 50.0);
        let l = step_conventional(0.97, &mut u, 0.0, 97.0, RateBand::OffPeak, 1.0);
        assert_relative_eq!(l.delivered_dc, 47.5, max_relative = 1e-12);
        assert_relative_eq!(l.grid_import, 50.925, max_relative = 1e-12);
        assert_balance(&l, 0.97);
    }

    #[test]
    fn curtailment_beyond_power_limit() {
        let mut u = battery_units(1000.0, 0.0);
        let l = step_conventional(1.0, &mut u, 1000.0, 100.0, RateBand::Peak, 1.0);
        assert_eq!(l.charge_power, 400.0);
        assert_eq!(l.pv_curtailed, 500.0);
    }

    fn olds(limit_sunny: f64, limit_cloudy: f64) -> OldsParams {
        OldsParams {
            window_start: TimeOfYear::new(50, 3).unwrap(),
            window_end: TimeOfYear::new(90, 5).unwrap(),
            limit_sunny,
            limit_cloudy,
        }
    }

    #[test]
    fn olds_suppresses_off_peak_discharge_below_limit() {
        let p = olds(1.0, 0.24);
        let hour = 200 * 24 + 2; // outside the window
        let mut u = hydrogen_units(100.0, 100.0, 200.0, 10.0);
        let l = step_olds(0.97, &mut u, 0.0, 97.0, RateBand::OffPeak, hour, &p, 1.0).unwrap();
        assert_eq!(l.delivered_dc, 0.0);
        assert_eq!(l.grid_import, 97.0);
        assert_eq!(u.level(), 10.0);

        let mut u2 = hydrogen_units(100.0, 100.0, 200.0, 10.0);
        let l = step_olds(0.97, &mut u2, 0.0, 97.0, RateBand::Peak, hour, &p, 1.0).unwrap();
        let mut u3 = hydrogen_units(100.0, 100.0, 200.0, 10.0);
        let cs = step_conventional(0.97, &mut u3, 0.0, 97.0, RateBand::Peak, 1.0);
        assert_eq!(l, cs);
        assert!(l.delivered_dc > 0.0);
    }

    #[test]
    fn olds_window_selects_limit() {
        let p = olds(0.05, 0.5);
        // 10 % full: above the sunny limit inside the window
        let inside = 60 * 24;
        let mut u = hydrogen_units(100.0, 100.0, 200.0, 10.0);
        let l = step_olds(0.97, &mut u, 0.0, 97.0, RateBand::OffPeak, inside, &p, 1.0).unwrap();
        assert!(l.delivered_dc > 0.0);
        let outside = 300 * 24;
        let mut u = hydrogen_units(100.0, 100.0, 200.0, 10.0);
        let l = step_olds(0.97, &mut u, 0.0, 97.0, RateBand::OffPeak, outside, &p, 1.0).unwrap();
        assert_eq!(l.delivered_dc, 0.0);
    }

    #[test]
    fn window_wraps_year_end() {
        let p = OldsParams {
            window_start: TimeOfYear::new(330, 0).unwrap(),
            window_end: TimeOfYear::new(40, 0).unwrap(),
            limit_sunny: 0.0,
            limit_cloudy: 0.0,
        };
        assert!(p.in_window(0));
        assert!(p.in_window(8759));
        assert!(p.in_window(39 * 24));
        assert!(!p.in_window(39 * 24 + 1));
        assert!(!p.in_window(200 * 24));
    }

    #[test]
    fn olds_rejects_battery() {
        let mut u = battery_units(100.0, 0.0);
        assert!(matches!(
            step_olds(0.97, &mut u, 0.0, 1.0, RateBand::Peak, 0, &olds(0.0, 0.0), 1.0),
            Err(DispatchError::OldsRequiresHydrogen)
        ));
        assert!(StrategyConfig::Olds(olds(0.0, 0.0))
            .validate(&SystemSizing::battery(1.0, 1.0))
            .is_err());
    }

    #[test]
    fn time_of_year_round_trip() {
        for idx in [0, 1, 23, 24, 4000, 8759] {
            assert_eq!(TimeOfYear::from_hour_index(idx).hour_index(), idx);
        }
        assert!(TimeOfYear::new(0, 0).is_err());
        assert!(TimeOfYear::new(366, 0).is_err());
        assert!(TimeOfYear::new(1, 24).is_err());
    }

    proptest! {
        #[test]
        fn olds_zero_limits_matches_conventional(
            steps in proptest::collection::vec((0.0f64..800.0, 0.0f64..600.0, 0usize..3, 0usize..8760), 1..100),
            mass in 0.0f64..50.0,
        ) {
            let p = olds(0.0, 0.0);
            let mut a = hydrogen_units(300.0, 50.0, 150.0, mass);
            let mut b = a.clone();
            for (pv, load, band, hour) in steps {
                let band = RateBand::ALL[band];
                let la = step_conventional(0.97, &mut a, pv, load, band, 1.0);
                let lb = step_olds(0.97, &mut b, pv, load, band, hour, &p, 1.0).unwrap();
                prop_assert_eq!(la, lb);
                assert_balance(&la, 0.97);
            }
        }

        #[test]
        fn grid_never_charges_storage(pv in 0.0f64..1000.0, load in 0.0f64..1000.0, e in 0.0f64..1.0) {
            let mut u = battery_units(800.0, 800.0 * e);
            let l = step_conventional(0.97, &mut u, pv, load, RateBand::Shoulder, 1.0);
            prop_assert!(l.charge_power <= (pv - load / 0.97).max(0.0) + 1e-12);
            assert_balance(&l, 0.97);
            prop_assert!(l.grid_import >= 0.0 && l.pv_curtailed >= 0.0);
        }
    }
}
