//! The sizing problem: decision vector → horizon simulation → (NPV, SSR).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::{
    simulate_horizon, DispatchError, OldsParams, Scenario, SimulationResult, StrategyConfig, SystemSizing, TimeOfYear,
};
use crate::economics::{cost_schedule, npv_npc, summarize, CostBook, EconomicSummary, EconomicsError};
use crate::optimizer::{DecisionSpace, EvalError, Objectives, OptimizerError, Problem, Variable};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Economics(#[from] EconomicsError),
    #[error(transparent)]
    Space(#[from] OptimizerError),
    #[error("decision vector has {found} values, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("min_ssr must be in [0, 1], got {0}")]
    MinSsr(f64),
    #[error("operational-only problems need a hydrogen sizing")]
    NotHydrogen,
}

/// Storage option and strategy being sized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// PV + battery, conventional strategy.
    Battery,
    /// PV + hydrogen, conventional strategy.
    Hydrogen,
    /// PV + hydrogen, long-duration strategy with its four operational
    /// variables.
    HydrogenOlds,
}

impl Case {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Case::Battery),
            2 => Some(Case::Hydrogen),
            3 => Some(Case::HydrogenOlds),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Case::Battery => 1,
            Case::Hydrogen => 2,
            Case::HydrogenOlds => 3,
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Upper bounds of the sizing variables; lower bounds are zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SizingBounds {
    pub pv_kwp: f64,
    pub battery_kwh: f64,
    pub el_kw: f64,
    pub tank_kg: f64,
    pub fc_kw: f64,
}

impl Default for SizingBounds {
    fn default() -> Self {
        Self {
            pv_kwp: 8000.0,
            battery_kwh: 12000.0,
            el_kw: 5000.0,
            tank_kg: 4000.0,
            fc_kw: 4000.0,
        }
    }
}

fn operational_variables() -> Vec<Variable> {
    vec![
        Variable::hour_of_year("t_start"),
        Variable::hour_of_year("t_end"),
        Variable::continuous("limit_sunny", 0.0, 1.0),
        Variable::continuous("limit_cloudy", 0.0, 1.0),
    ]
}

fn case_space(case: Case, b: &SizingBounds) -> Result<DecisionSpace, OptimizerError> {
    let mut vars = vec![Variable::continuous("pv_kwp", 0.0, b.pv_kwp)];
    match case {
        Case::Battery => vars.push(Variable::continuous("battery_kwh", 0.0, b.battery_kwh)),
        Case::Hydrogen | Case::HydrogenOlds => {
            vars.push(Variable::continuous("el_kw", 0.0, b.el_kw));
            vars.push(Variable::continuous("tank_kg", 0.0, b.tank_kg));
            vars.push(Variable::continuous("fc_kw", 0.0, b.fc_kw));
        }
    }
    if case == Case::HydrogenOlds {
        vars.extend(operational_variables());
    }
    DecisionSpace::new(vars)
}

fn olds_from(x: &[f64]) -> StrategyConfig {
    StrategyConfig::Olds(OldsParams {
        window_start: TimeOfYear::from_hour_index(x[0] as usize),
        window_end: TimeOfYear::from_hour_index(x[1] as usize),
        limit_sunny: x[2],
        limit_cloudy: x[3],
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Mode {
    Case(Case),
    /// Only the long-duration strategy parameters vary; sizing is fixed.
    Operational(SystemSizing),
}

/// Everything produced by one evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub sizing: SystemSizing,
    pub strategy: StrategyConfig,
    pub result: SimulationResult,
    pub economics: EconomicSummary,
}

#[derive(Debug, Clone)]
pub struct SizingProblem {
    scenario: Scenario,
    book: CostBook,
    baseline: SimulationResult,
    space: DecisionSpace,
    mode: Mode,
    min_ssr: Option<f64>,
    inverter_efficiency: f64,
    reference: [f64; 2],
}

impl SizingProblem {
    /// The scenario's replacement plan is taken from the cost book.
    pub fn new(scenario: Scenario, book: CostBook, case: Case, bounds: &SizingBounds) -> Result<Self, ProblemError> {
        let space = case_space(case, bounds)?;
        let largest = match case {
            Case::Battery => SystemSizing::battery(bounds.pv_kwp, bounds.battery_kwh),
            _ => SystemSizing::hydrogen(bounds.pv_kwp, bounds.el_kw, bounds.tank_kg, bounds.fc_kw),
        };
        Self::build(scenario, book, space, Mode::Case(case), &largest)
    }

    /// Optimises the window and limits of the long-duration strategy for a
    /// fixed hydrogen sizing.
    pub fn operational(scenario: Scenario, book: CostBook, sizing: SystemSizing) -> Result<Self, ProblemError> {
        if !sizing.is_hydrogen() {
            return Err(ProblemError::NotHydrogen);
        }
        let space = DecisionSpace::new(operational_variables())?;
        Self::build(scenario, book, space, Mode::Operational(sizing), &sizing)
    }

    fn build(
        mut scenario: Scenario,
        book: CostBook,
        space: DecisionSpace,
        mode: Mode,
        largest: &SystemSizing,
    ) -> Result<Self, ProblemError> {
        book.validate()?;
        scenario.replacements = book.replacement_plan(scenario.horizon);
        scenario.validate()?;
        let baseline = simulate_horizon(&scenario, &SystemSizing::baseline(), &StrategyConfig::Conventional)?;
        // Bill savings are never negative, so NPV >= -NPC >= -NPC(largest).
        let (worst_npc, _) = npv_npc(&cost_schedule(&book, largest, scenario.horizon)?, book.discount_rate);
        Ok(Self {
            reference: [-worst_npc - 1.0, 0.0],
            scenario,
            book,
            baseline,
            space,
            mode,
            min_ssr: None,
            inverter_efficiency: SystemSizing::DEFAULT_INVERTER_EFFICIENCY,
        })
    }

    pub fn with_min_ssr(mut self, min_ssr: Option<f64>) -> Result<Self, ProblemError> {
        if let Some(m) = min_ssr {
            if !(0.0..=1.0).contains(&m) {
                return Err(ProblemError::MinSsr(m));
            }
        }
        self.min_ssr = min_ssr;
        Ok(self)
    }

    pub fn with_inverter_efficiency(mut self, eta: f64) -> Self {
        self.inverter_efficiency = eta;
        self
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn cost_book(&self) -> &CostBook {
        &self.book
    }

    pub fn baseline(&self) -> &SimulationResult {
        &self.baseline
    }

    pub fn min_ssr(&self) -> Option<f64> {
        self.min_ssr
    }

    /// Decision vector reproducing the conventional strategy (both limits
    /// zero) for the hydrogen cases, if the problem has one.
    pub fn conventional_equivalent(&self, sizing: Option<&SystemSizing>) -> Option<Vec<f64>> {
        let op = [0.0, 0.0, 0.0, 0.0];
        match (&self.mode, sizing) {
            (Mode::Operational(_), _) => Some(op.to_vec()),
            (Mode::Case(Case::HydrogenOlds), Some(s)) => match s.storage {
                crate::dispatch::StorageSizing::Hydrogen { el_kw, tank_kg, fc_kw } => {
                    Some([s.pv_kwp, el_kw, tank_kg, fc_kw].into_iter().chain(op).collect())
                }
                _ => None,
            },
            _ => None,
        }
    }

    /// Maps a decision vector onto a sizing and strategy.
    pub fn decode(&self, x: &[f64]) -> Result<(SystemSizing, StrategyConfig), ProblemError> {
        if x.len() != self.space.dims() {
            return Err(ProblemError::Dimension {
                expected: self.space.dims(),
                found: x.len(),
            });
        }
        let x = self.space.finalize(x);
        let eta = self.inverter_efficiency;
        let with_eta = |mut s: SystemSizing| {
            s.inverter_efficiency = eta;
            s
        };
        Ok(match &self.mode {
            Mode::Case(Case::Battery) => (with_eta(SystemSizing::battery(x[0], x[1])), StrategyConfig::Conventional),
            Mode::Case(Case::Hydrogen) => (
                with_eta(SystemSizing::hydrogen(x[0], x[1], x[2], x[3])),
                StrategyConfig::Conventional,
            ),
            Mode::Case(Case::HydrogenOlds) => (with_eta(SystemSizing::hydrogen(x[0], x[1], x[2], x[3])), olds_from(&x[4..])),
            Mode::Operational(s) => (*s, olds_from(&x)),
        })
    }

    pub fn evaluate_sizing(&self, sizing: &SystemSizing, strategy: &StrategyConfig) -> Result<Evaluation, ProblemError> {
        let result = simulate_horizon(&self.scenario, sizing, strategy)?;
        let economics = summarize(&self.book, sizing, &self.scenario.tariff, &self.baseline, &result)?;
        Ok(Evaluation {
            sizing: *sizing,
            strategy: *strategy,
            result,
            economics,
        })
    }

    pub fn evaluate_detail(&self, x: &[f64]) -> Result<Evaluation, ProblemError> {
        let (sizing, strategy) = self.decode(x)?;
        self.evaluate_sizing(&sizing, &strategy)
    }

    pub fn objectives_of(&self, e: &EconomicSummary) -> Objectives {
        Objectives {
            values: [e.npv, e.ssr],
            violation: self.min_ssr.map_or(0.0, |m| (m - e.ssr).max(0.0)),
        }
    }
}

impl Problem for SizingProblem {
    fn space(&self) -> &DecisionSpace {
        &self.space
    }

    fn evaluate(&self, x: &[f64]) -> Result<Objectives, EvalError> {
        let e = self.evaluate_detail(x)?;
        Ok(self.objectives_of(&e.economics))
    }

    fn reference_point(&self) -> Option<[f64; 2]> {
        Some(self.reference)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::{ReplacementPlan, StoragePhysics};
    use crate::profiles::{HourlySeries, PvPlantConfig, TariffSchedule};

    fn scenario(horizon: u32) -> Scenario {
        let pv: Vec<f64> = (0..8760).map(|h| crate::profiles::daylight_shape(h % 24) * 100.0).collect();
        let base = HourlySeries::new(pv, chrono::Weekday::Mon).unwrap();
        Scenario {
            load: HourlySeries::constant(50.0, 1).unwrap(),
            pv: PvPlantConfig::new(base, 100.0, 0.0055).unwrap().with_horizon(horizon),
            tariff: TariffSchedule::default(),
            physics: StoragePhysics::default(),
            replacements: ReplacementPlan::default(),
            horizon,
            dt: 1.0,
        }
    }

    #[test]
    fn case_dimensions() {
        let b = SizingBounds::default();
        for (case, d) in [(Case::Battery, 2), (Case::Hydrogen, 4), (Case::HydrogenOlds, 8)] {
            let p = SizingProblem::new(scenario(2), CostBook::current(), case, &b).unwrap();
            assert_eq!(p.space().dims(), d);
        }
        assert_eq!(Case::from_number(3), Some(Case::HydrogenOlds));
        assert_eq!(Case::from_number(4), None);
    }

    #[test]
    fn zero_vector_is_baseline() {
        let p = SizingProblem::new(scenario(3), CostBook::current(), Case::Battery, &SizingBounds::default()).unwrap();
        let o = p.evaluate(&[0.0, 0.0]).unwrap();
        assert_eq!(o.values, [0.0, 0.0]);
    }

    #[test]
    fn evaluation_is_pure() {
        let p = SizingProblem::new(scenario(3), CostBook::current(), Case::Hydrogen, &SizingBounds::default()).unwrap();
        let x = [150.0, 40.0, 5.0, 20.0];
        assert_eq!(p.evaluate(&x).unwrap(), p.evaluate(&x).unwrap());
        assert!(matches!(p.decode(&[1.0]), Err(ProblemError::Dimension { .. })));
    }

    #[test]
    fn olds_zero_limits_matches_case_two() {
        let s = scenario(3);
        let b = SizingBounds::default();
        let two = SizingProblem::new(s.clone(), CostBook::current(), Case::Hydrogen, &b).unwrap();
        let three = SizingProblem::new(s, CostBook::current(), Case::HydrogenOlds, &b).unwrap();
        let sizing = SystemSizing::hydrogen(150.0, 40.0, 5.0, 20.0);
        let x3 = three.conventional_equivalent(Some(&sizing)).unwrap();
        assert_eq!(
            two.evaluate(&[150.0, 40.0, 5.0, 20.0]).unwrap(),
            three.evaluate(&x3).unwrap()
        );
    }

    #[test]
    fn min_ssr_sets_violation() {
        let p = SizingProblem::new(scenario(2), CostBook::current(), Case::Battery, &SizingBounds::default())
            .unwrap()
            .with_min_ssr(Some(0.8))
            .unwrap();
        let o = p.evaluate(&[0.0, 0.0]).unwrap();
        assert!((o.violation - 0.8).abs() < 1e-12);
        assert!(p.clone().with_min_ssr(Some(1.5)).is_err());
    }

    #[test]
    fn operational_needs_hydrogen() {
        assert!(matches!(
            SizingProblem::operational(scenario(2), CostBook::current(), SystemSizing::battery(1.0, 1.0)),
            Err(ProblemError::NotHydrogen)
        ));
    }
}
