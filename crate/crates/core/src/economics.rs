//! Bills, revenues, cost schedules, discounting and self-sufficiency.
//!
//! All money figures are undiscounted per-year amounts until they pass
//! through [`npv_npc`]. Year indices are 1-based; year 0 carries only CAPEX.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::{Component, ReplacementPlan, SimulationResult, StorageSizing, SystemSizing};
use crate::profiles::{PerBand, ProfileError, RateBand, TariffSchedule};

#[derive(Debug, Error)]
pub enum EconomicsError {
    #[error(transparent)]
    Tariff(#[from] ProfileError),
    #[error("negative {band} energy {value}")]
    NegativeEnergy { band: RateBand, value: f64 },
    #[error("horizon mismatch: baseline covers {baseline} years, system run {system}")]
    HorizonMismatch { baseline: usize, system: usize },
    #[error("load differs between baseline and system run in year {year}")]
    LoadMismatch { year: u32 },
    #[error("total load is zero")]
    ZeroLoad,
    #[error("cost book has no entry for {0}")]
    UnknownComponent(Component),
    #[error("invalid cost book: {0}")]
    InvalidCostBook(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostScenario {
    Current,
    Ultimate,
}

/// How the battery unit cost is applied: to energy capacity, or to the
/// rated power `kWh / ep_ratio`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "snake_case")]
pub enum BatteryCostBasis {
    PerKwh,
    PerKw { ep_ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Replacement {
    pub year: u32,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentCost {
    pub unit_cost: f64,
    pub om_factor: f64,
    #[serde(default)]
    pub replacements: Vec<Replacement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBook {
    pub scenario: CostScenario,
    pub components: BTreeMap<Component, ComponentCost>,
    pub discount_rate: f64,
    pub battery_basis: BatteryCostBasis,
}

pub const DEFAULT_DISCOUNT_RATE: f64 = 0.05;

const BATTERY_REPLACEMENT_YEARS: [u32; 2] = [12, 24];
const ELECTROLYSER_REPLACEMENT_YEARS: [u32; 1] = [15];
const FUEL_CELL_REPLACEMENT_YEARS: [u32; 4] = [5, 10, 15, 20];

fn schedule(years: &[u32], factors: impl Fn(usize) -> f64) -> Vec<Replacement> {
    years
        .iter()
        .enumerate()
        .map(|(i, &year)| Replacement { year, factor: factors(i) })
        .collect()
}

impl CostBook {
    /// Present-day prices with discounted replacements.
    pub fn current() -> Self {
        let fc_factors = [0.775, 0.55, 0.325, 0.10];
        Self::build(
            CostScenario::Current,
            [881.0, 490.0, 1500.0, 600.0, 4000.0],
            schedule(&BATTERY_REPLACEMENT_YEARS, |_| 0.5),
            schedule(&ELECTROLYSER_REPLACEMENT_YEARS, |_| 0.6),
            schedule(&FUEL_CELL_REPLACEMENT_YEARS, |i| fc_factors[i]),
        )
    }

    /// Projected long-run prices; replacements are bought at full price.
    pub fn ultimate() -> Self {
        Self::build(
            CostScenario::Ultimate,
            [881.0, 270.0, 200.0, 266.0, 400.0],
            schedule(&BATTERY_REPLACEMENT_YEARS, |_| 1.0),
            schedule(&ELECTROLYSER_REPLACEMENT_YEARS, |_| 1.0),
            schedule(&FUEL_CELL_REPLACEMENT_YEARS, |_| 1.0),
        )
    }

    pub fn for_scenario(scenario: CostScenario) -> Self {
        match scenario {
            CostScenario::Current => Self::current(),
            CostScenario::Ultimate => Self::ultimate(),
        }
    }

    fn build(
        scenario: CostScenario,
        unit: [f64; 5],
        battery: Vec<Replacement>,
        electrolyser: Vec<Replacement>,
        fuel_cell: Vec<Replacement>,
    ) -> Self {
        let entry = |unit_cost, om_factor, replacements| ComponentCost {
            unit_cost,
            om_factor,
            replacements,
        };
        let components = BTreeMap::from([
            (Component::Pv, entry(unit[0], 0.01, vec![])),
            (Component::Battery, entry(unit[1], 0.005, battery)),
            (Component::Electrolyser, entry(unit[2], 0.01, electrolyser)),
            (Component::Tank, entry(unit[3], 0.01, vec![])),
            (Component::FuelCell, entry(unit[4], 0.01, fuel_cell)),
        ]);
        Self {
            scenario,
            components,
            discount_rate: DEFAULT_DISCOUNT_RATE,
            battery_basis: BatteryCostBasis::PerKwh,
        }
    }

    pub fn validate(&self) -> Result<(), EconomicsError> {
        if !(self.discount_rate > 0.0 && self.discount_rate < 1.0) {
            return Err(EconomicsError::InvalidCostBook(format!(
                "discount_rate must be in (0, 1), got {}",
                self.discount_rate
            )));
        }
        if let BatteryCostBasis::PerKw { ep_ratio } = self.battery_basis {
            if !(ep_ratio.is_finite() && ep_ratio > 0.0) {
                return Err(EconomicsError::InvalidCostBook(format!("battery ep_ratio must be > 0, got {ep_ratio}")));
            }
        }
        for (c, cost) in &self.components {
            let bad = |what: &str, v: f64| EconomicsError::InvalidCostBook(format!("{c} {what} must be >= 0, got {v}"));
            if !(cost.unit_cost.is_finite() && cost.unit_cost >= 0.0) {
                return Err(bad("unit_cost", cost.unit_cost));
            }
            if !(cost.om_factor.is_finite() && cost.om_factor >= 0.0) {
                return Err(bad("om_factor", cost.om_factor));
            }
            for r in &cost.replacements {
                if !(r.factor.is_finite() && r.factor >= 0.0) {
                    return Err(bad("replacement factor", r.factor));
                }
                if r.year == 0 {
                    return Err(EconomicsError::InvalidCostBook(format!("{c} replacement in year 0")));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, component: Component) -> Result<&ComponentCost, EconomicsError> {
        self.components
            .get(&component)
            .ok_or(EconomicsError::UnknownComponent(component))
    }

    fn years_before(&self, component: Component, horizon: u32) -> Vec<u32> {
        self.components
            .get(&component)
            .map(|c| c.replacements.iter().map(|r| r.year).filter(|&y| y < horizon).collect())
            .unwrap_or_default()
    }

    /// Physical replacement years implied by the book. Replacements at or
    /// after the final year have no effect and are dropped.
    pub fn replacement_plan(&self, horizon: u32) -> ReplacementPlan {
        ReplacementPlan {
            battery: self.years_before(Component::Battery, horizon),
            electrolyser: self.years_before(Component::Electrolyser, horizon),
            fuel_cell: self.years_before(Component::FuelCell, horizon),
        }
    }

    /// Size the unit cost applies to.
    fn billed_size(&self, component: Component, size: f64) -> f64 {
        match (component, self.battery_basis) {
            (Component::Battery, BatteryCostBasis::PerKw { ep_ratio }) => size / ep_ratio,
            _ => size,
        }
    }
}

/// `Σ_band E_band · k_y · r_1^band`.
pub fn annual_bill(import: &PerBand<f64>, tariff: &TariffSchedule, year: u32) -> Result<f64, EconomicsError> {
    let mut bill = 0.0;
    for band in RateBand::ALL {
        let e = import[band];
        if !(e >= 0.0) {
            return Err(EconomicsError::NegativeEnergy { band, value: e });
        }
        bill += e * tariff.rate(band, year)?;
    }
    Ok(bill)
}

/// Bills of every simulated year.
pub fn bills(result: &SimulationResult, tariff: &TariffSchedule) -> Result<Vec<f64>, EconomicsError> {
    result
        .years
        .iter()
        .map(|y| annual_bill(&y.import, tariff, y.year))
        .collect()
}

/// Yearly bill savings of the system against the grid-only baseline.
pub fn revenue_series(
    baseline: &SimulationResult,
    with_system: &SimulationResult,
    tariff: &TariffSchedule,
) -> Result<Vec<f64>, EconomicsError> {
    if baseline.years.len() != with_system.years.len() {
        return Err(EconomicsError::HorizonMismatch {
            baseline: baseline.years.len(),
            system: with_system.years.len(),
        });
    }
    for (b, s) in baseline.years.iter().zip(&with_system.years) {
        if (b.load - s.load).abs() > 1e-9 * b.load.abs().max(1.0) {
            return Err(EconomicsError::LoadMismatch { year: b.year });
        }
    }
    let b = bills(baseline, tariff)?;
    let s = bills(with_system, tariff)?;
    Ok(b.iter().zip(&s).map(|(b, s)| b - s).collect())
}

/// Year-0 CAPEX plus per-year O&M, replacement and revenue. Vectors are
/// indexed by `year - 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CashflowSchedule {
    pub capex: f64,
    pub om: Vec<f64>,
    pub replacement: Vec<f64>,
    pub revenue: Vec<f64>,
}

impl CashflowSchedule {
    pub fn horizon(&self) -> usize {
        self.om.len()
    }

    pub fn with_revenue(mut self, revenue: Vec<f64>) -> Result<Self, EconomicsError> {
        if revenue.len() != self.om.len() {
            return Err(EconomicsError::HorizonMismatch {
                baseline: revenue.len(),
                system: self.om.len(),
            });
        }
        self.revenue = revenue;
        Ok(self)
    }
}

pub fn cost_schedule(book: &CostBook, sizing: &SystemSizing, horizon: u32) -> Result<CashflowSchedule, EconomicsError> {
    book.validate()?;
    let n = horizon as usize;
    let mut out = CashflowSchedule {
        capex: 0.0,
        om: vec![0.0; n],
        replacement: vec![0.0; n],
        revenue: vec![0.0; n],
    };
    for (component, size) in sizing.component_sizes() {
        if size == 0.0 {
            continue;
        }
        let cost = book.get(component)?;
        let capex = cost.unit_cost * book.billed_size(component, size);
        out.capex += capex;
        for om in &mut out.om {
            *om += capex * cost.om_factor;
        }
        for r in cost.replacements.iter().filter(|r| r.year < horizon) {
            out.replacement[r.year as usize - 1] += capex * r.factor;
        }
    }
    Ok(out)
}

/// Returns `(npc, npv)`.
pub fn npv_npc(cashflows: &CashflowSchedule, discount_rate: f64) -> (f64, f64) {
    let mut npc = cashflows.capex;
    let mut npv = -cashflows.capex;
    let mut discount = 1.0;
    for y in 0..cashflows.horizon() {
        discount /= 1.0 + discount_rate;
        let cost = cashflows.om[y] + cashflows.replacement[y];
        npc += cost * discount;
        npv += (cashflows.revenue[y] - cost) * discount;
    }
    (npc, npv)
}

pub fn self_sufficiency_ratio(result: &SimulationResult) -> Result<f64, EconomicsError> {
    let load = result.total_load();
    if !(load > 0.0) {
        return Err(EconomicsError::ZeroLoad);
    }
    Ok((1.0 - result.total_import() / load).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EconomicSummary {
    pub npc: f64,
    pub npv: f64,
    pub ssr: f64,
    pub baseline_bills: Vec<f64>,
    pub system_bills: Vec<f64>,
    pub cashflows: CashflowSchedule,
    pub discount_rate: f64,
}

pub fn summarize(
    book: &CostBook,
    sizing: &SystemSizing,
    tariff: &TariffSchedule,
    baseline: &SimulationResult,
    with_system: &SimulationResult,
) -> Result<EconomicSummary, EconomicsError> {
    let revenue = revenue_series(baseline, with_system, tariff)?;
    let cashflows = cost_schedule(book, sizing, with_system.years.len() as u32)?.with_revenue(revenue)?;
    let (npc, npv) = npv_npc(&cashflows, book.discount_rate);
    Ok(EconomicSummary {
        npc,
        npv,
        ssr: self_sufficiency_ratio(with_system)?,
        baseline_bills: bills(baseline, tariff)?,
        system_bills: bills(with_system, tariff)?,
        cashflows,
        discount_rate: book.discount_rate,
    })
}

/// Writes `year,capex,om,replacement,revenue,discounted_net`; year 0 holds
/// the CAPEX row.
pub fn write_cashflow_csv<W: Write>(
    cashflows: &CashflowSchedule,
    discount_rate: f64,
    writer: W,
) -> Result<(), EconomicsError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["year", "capex", "om", "replacement", "revenue", "discounted_net"])?;
    w.write_record([
        "0".to_string(),
        cashflows.capex.to_string(),
        "0".into(),
        "0".into(),
        "0".into(),
        (-cashflows.capex).to_string(),
    ])?;
    let mut discount = 1.0;
    for y in 0..cashflows.horizon() {
        discount /= 1.0 + discount_rate;
        let net = cashflows.revenue[y] - cashflows.om[y] - cashflows.replacement[y];
        w.write_record([
            (y + 1).to_string(),
            "0".into(),
            cashflows.om[y].to_string(),
            cashflows.replacement[y].to_string(),
            cashflows.revenue[y].to_string(),
            (net * discount).to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Sizes of a sizing grouped for reports: `(component, size, capex)`.
pub fn capex_breakdown(book: &CostBook, sizing: &SystemSizing) -> Result<Vec<(Component, f64, f64)>, EconomicsError> {
    sizing
        .component_sizes()
        .into_iter()
        .map(|(c, s)| Ok((c, s, book.get(c)?.unit_cost * book.billed_size(c, s))))
        .collect()
}

/// Whether the sizing's storage kind is priced by the book.
pub fn supports(book: &CostBook, sizing: &SystemSizing) -> bool {
    let needed: &[Component] = match sizing.storage {
        StorageSizing::Battery { .. } => &[Component::Pv, Component::Battery],
        StorageSizing::Hydrogen { .. } => &[Component::Pv, Component::Electrolyser, Component::Tank, Component::FuelCell],
    };
    needed.iter().all(|c| book.components.contains_key(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::YearSummary;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn per_band(p: f64, s: f64, o: f64) -> PerBand<f64> {
        PerBand {
            peak: p,
            shoulder: s,
            off_peak: o,
        }
    }

    fn result_from(years: Vec<(PerBand<f64>, f64)>) -> SimulationResult {
        SimulationResult {
            years: years
                .into_iter()
                .enumerate()
                .map(|(i, (import, load))| YearSummary {
                    year: i as u32 + 1,
                    import,
                    import_total: import.total(),
                    load,
                    ..YearSummary::default()
                })
                .collect(),
            replacements: vec![],
            health: vec![],
            final_level: 0.0,
        }
    }

    #[test]
    fn bill_examples() {
        let t = TariffSchedule::default();
        assert_eq!(annual_bill(&per_band(0.0, 0.0, 0.0), &t, 1).unwrap(), 0.0);
        assert_relative_eq!(annual_bill(&per_band(1000.0, 0.0, 0.0), &t, 1).unwrap(), 187.0, max_relative = 1e-12);

        let mut k = vec![1.0; 25];
        k[4] = 1.1;
        let t = TariffSchedule::new(TariffSchedule::default_calendar(), TariffSchedule::default_rates(), k).unwrap();
        assert_relative_eq!(annual_bill(&per_band(100.0, 100.0, 100.0), &t, 5).unwrap(), 38.94, max_relative = 1e-12);
        assert!(annual_bill(&per_band(-1.0, 0.0, 0.0), &t, 1).is_err());
        assert!(annual_bill(&per_band(1.0, 0.0, 0.0), &t, 0).is_err());
    }

    #[test]
    fn revenue_examples() {
        let t = TariffSchedule::default();
        let base = result_from(vec![(per_band(1000.0, 500.0, 200.0), 1700.0); 3]);
        assert!(revenue_series(&base, &base, &t).unwrap().iter().all(|r| *r == 0.0));

        let sys = result_from(vec![(per_band(500.0, 500.0, 200.0), 1700.0); 3]);
        let r = revenue_series(&base, &sys, &t).unwrap();
        assert_relative_eq!(r[2], 93.5, max_relative = 1e-12);

        let short = result_from(vec![(per_band(0.0, 0.0, 0.0), 1700.0); 2]);
        assert!(matches!(
            revenue_series(&base, &short, &t),
            Err(EconomicsError::HorizonMismatch { .. })
        ));
        let other_load = result_from(vec![(per_band(0.0, 0.0, 0.0), 1.0); 3]);
        assert!(matches!(
            revenue_series(&base, &other_load, &t),
            Err(EconomicsError::LoadMismatch { .. })
        ));
    }

    #[test]
    fn pv_only_schedule() {
        let s = cost_schedule(&CostBook::current(), &SystemSizing::battery(1000.0, 0.0), 25).unwrap();
        assert_relative_eq!(s.capex, 881_000.0, max_relative = 1e-12);
        assert!(s.om.iter().all(|o| (o - 8810.0).abs() < 1e-9));
        assert!(s.replacement.iter().all(|r| *r == 0.0));
    }

    #[test]
    fn battery_schedule() {
        let s = cost_schedule(&CostBook::current(), &SystemSizing::battery(0.0, 1890.0), 25).unwrap();
        assert_relative_eq!(s.capex, 926_100.0, max_relative = 1e-12);
        assert_relative_eq!(s.replacement[11], 463_050.0, max_relative = 1e-12);
        assert_relative_eq!(s.om[0], 926_100.0 * 0.005, max_relative = 1e-12);

        let mut book = CostBook::current();
        book.battery_basis = BatteryCostBasis::PerKw { ep_ratio: 2.5 };
        let s = cost_schedule(&book, &SystemSizing::battery(0.0, 1890.0), 25).unwrap();
        assert_relative_eq!(s.capex, 490.0 * 756.0, max_relative = 1e-12);
    }

    #[test]
    fn hydrogen_schedule() {
        let book = CostBook::current();
        let s = cost_schedule(&book, &SystemSizing::hydrogen(0.0, 100.0, 10.0, 10.0), 25).unwrap();
        assert_relative_eq!(s.capex, 150_000.0 + 6_000.0 + 40_000.0, max_relative = 1e-12);
        assert_relative_eq!(s.replacement[14], 0.6 * 150_000.0 + 0.325 * 40_000.0, max_relative = 1e-12);
        assert_relative_eq!(s.replacement[4], 0.775 * 40_000.0, max_relative = 1e-12);
        assert_relative_eq!(s.replacement[19], 0.10 * 40_000.0, max_relative = 1e-12);
        let nonzero: Vec<usize> = (0..25).filter(|&y| s.replacement[y] > 0.0).map(|y| y + 1).collect();
        assert_eq!(nonzero, vec![5, 10, 15, 20]);

        let u = cost_schedule(&CostBook::ultimate(), &SystemSizing::hydrogen(0.0, 100.0, 0.0, 10.0), 25).unwrap();
        assert_relative_eq!(u.replacement[14], 20_000.0 + 4_000.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_sizing_zero_schedule() {
        for s in [SystemSizing::baseline(), SystemSizing::hydrogen(0.0, 0.0, 0.0, 0.0)] {
            let c = cost_schedule(&CostBook::current(), &s, 25).unwrap();
            assert_eq!(c.capex, 0.0);
            assert!(c.om.iter().chain(&c.replacement).all(|v| *v == 0.0));
        }
    }

    #[test]
    fn unknown_component() {
        let mut book = CostBook::current();
        book.components.remove(&Component::Tank);
        assert!(matches!(
            cost_schedule(&book, &SystemSizing::hydrogen(0.0, 1.0, 1.0, 1.0), 25),
            Err(EconomicsError::UnknownComponent(Component::Tank))
        ));
        assert!(!supports(&book, &SystemSizing::hydrogen(0.0, 1.0, 1.0, 1.0)));
    }

    #[test]
    fn replacement_plan_matches_lifetimes() {
        let p = CostBook::current().replacement_plan(25);
        assert_eq!(p.battery, vec![12, 24]);
        assert_eq!(p.electrolyser, vec![15]);
        assert_eq!(p.fuel_cell, vec![5, 10, 15, 20]);
        assert_eq!(CostBook::current().replacement_plan(12).battery, Vec::<u32>::new());
    }

    fn flat(horizon: usize, capex: f64, om: f64, rep: f64, rev: f64) -> CashflowSchedule {
        CashflowSchedule {
            capex,
            om: vec![om; horizon],
            replacement: vec![rep; horizon],
            revenue: vec![rev; horizon],
        }
    }

    #[test]
    fn discounting_examples() {
        assert_eq!(npv_npc(&flat(25, 0.0, 0.0, 0.0, 0.0), 0.05), (0.0, 0.0));
        let annuity = 100.0 * (1.0 - 1.05f64.powi(-25)) / 0.05;
        let (_, npv) = npv_npc(&flat(25, 0.0, 0.0, 0.0, 100.0), 0.05);
        assert_relative_eq!(npv, annuity, max_relative = 1e-12);
        assert!((npv - 1409.39).abs() < 0.01);
        assert_eq!(npv_npc(&flat(25, 1000.0, 0.0, 0.0, 0.0), 0.05), (1000.0, -1000.0));
    }

    #[test]
    fn ssr_examples() {
        let r = |imp: f64| result_from(vec![(per_band(imp, 0.0, 0.0), 100.0); 25]);
        assert_eq!(self_sufficiency_ratio(&r(0.0)).unwrap(), 1.0);
        assert_eq!(self_sufficiency_ratio(&r(100.0)).unwrap(), 0.0);
        assert_eq!(self_sufficiency_ratio(&r(50.0)).unwrap(), 0.5);
        let zero = result_from(vec![(per_band(0.0, 0.0, 0.0), 0.0)]);
        assert!(matches!(self_sufficiency_ratio(&zero), Err(EconomicsError::ZeroLoad)));
    }

    #[test]
    fn cashflow_csv_layout() {
        let mut buf = Vec::new();
        write_cashflow_csv(&flat(2, 10.0, 1.0, 0.0, 3.0), 0.0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "year,capex,om,replacement,revenue,discounted_net");
        assert_eq!(lines[1], "0,10,0,0,0,-10");
        assert_eq!(lines[2], "1,0,1,0,3,2");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn cost_book_validation() {
        let mut b = CostBook::current();
        b.discount_rate = 0.0;
        assert!(b.validate().is_err());
        let mut b = CostBook::current();
        b.components.get_mut(&Component::Pv).unwrap().unit_cost = -1.0;
        assert!(b.validate().is_err());
    }

    proptest! {
        #[test]
        fn npv_plus_npc_is_discounted_revenue(
            capex in 0.0f64..1e7,
            flows in proptest::collection::vec((0.0f64..1e5, 0.0f64..1e5, 0.0f64..1e5), 25),
            rate in 0.01f64..0.2,
        ) {
            let s = CashflowSchedule {
                capex,
                om: flows.iter().map(|f| f.0).collect(),
                replacement: flows.iter().map(|f| f.1).collect(),
                revenue: flows.iter().map(|f| f.2).collect(),
            };
            let (npc, npv) = npv_npc(&s, rate);
            let pv_rev: f64 = s.revenue.iter().enumerate().map(|(y, r)| r / (1.0 + rate).powi(y as i32 + 1)).sum();
            let scale = npc.abs() + pv_rev.abs() + 1.0;
            prop_assert!((npv + npc - pv_rev).abs() <= 1e-9 * scale);
        }

        #[test]
        fn bill_is_linear(p in 0.0f64..1e5, s in 0.0f64..1e5, o in 0.0f64..1e5, a in 0.0f64..10.0) {
            let t = TariffSchedule::default();
            let one = annual_bill(&per_band(p, s, o), &t, 3).unwrap();
            let scaled = annual_bill(&per_band(a * p, a * s, a * o), &t, 3).unwrap();
            prop_assert!((scaled - a * one).abs() <= 1e-9 * (a * one).abs().max(1.0));
        }

        #[test]
        fn ssr_scale_invariant(imp in 0.0f64..100.0, a in 0.01f64..1000.0) {
            let r = |k: f64| result_from(vec![(per_band(k * imp, 0.0, 0.0), k * 100.0); 5]);
            let x = self_sufficiency_ratio(&r(1.0)).unwrap();
            let y = self_sufficiency_ratio(&r(a)).unwrap();
            prop_assert!((x - y).abs() <= 1e-12);
        }

        #[test]
        fn npv_non_increasing_in_unit_cost(bump in 0.0f64..1000.0, which in 0usize..5) {
            let sizing = SystemSizing::hydrogen(500.0, 100.0, 20.0, 50.0);
            let tweak = |extra: f64| {
                let mut book = CostBook::current();
                let c = Component::ALL[which];
                book.components.get_mut(&c).unwrap().unit_cost += extra;
                let s = cost_schedule(&book, &sizing, 25).unwrap().with_revenue(vec![5e4; 25]).unwrap();
                npv_npc(&s, 0.05).1
            };
            prop_assert!(tweak(bump) <= tweak(0.0) + 1e-6);
        }
    }
}
