//! Physical models of the storage technologies: a battery with yearly
//! efficiency fade, PEM electrolyser and fuel-cell stacks whose cell voltage
//! drifts with operating hours, and the hydrogen tank between them.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hydrogen mass flow per ampere per cell, kg/s.
pub const H2_KG_PER_AMP_SECOND: f64 = 1.05e-8;

const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("invalid polarization curve: {0}")]
    InvalidCurve(String),
    #[error("current {current} A outside curve range [{min}, {max}] A")]
    CurrentOutOfRange { current: f64, min: f64, max: f64 },
    #[error("parameter `{name}` out of range: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("cannot read curve {path}: {reason}")]
    CurveFile { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatteryParams {
    pub initial_efficiency: f64,
    pub annual_fade: f64,
    /// Energy-to-power ratio, hours.
    pub ep_ratio: f64,
    pub lifetime_years: u32,
}

impl Default for BatteryParams {
    fn default() -> Self {
        Self {
            initial_efficiency: 0.95,
            annual_fade: 0.029,
            ep_ratio: 2.5,
            lifetime_years: 12,
        }
    }
}

impl BatteryParams {
    pub fn validate(&self) -> Result<(), StorageError> {
        if !(self.initial_efficiency > 0.0 && self.initial_efficiency <= 1.0) {
            return Err(StorageError::InvalidParameter {
                name: "initial_efficiency",
                value: self.initial_efficiency,
            });
        }
        if !(0.0..1.0).contains(&self.annual_fade) {
            return Err(StorageError::InvalidParameter {
                name: "annual_fade",
                value: self.annual_fade,
            });
        }
        if !(self.ep_ratio.is_finite() && self.ep_ratio > 0.0) {
            return Err(StorageError::InvalidParameter {
                name: "ep_ratio",
                value: self.ep_ratio,
            });
        }
        if self.lifetime_years == 0 {
            return Err(StorageError::InvalidParameter {
                name: "lifetime_years",
                value: 0.0,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryState {
    /// Stored energy, kWh.
    pub energy: f64,
    pub capacity: f64,
    pub ep_ratio: f64,
    pub efficiency: f64,
    pub initial_efficiency: f64,
    pub annual_fade: f64,
    pub lifetime: u32,
}

/// Result of one discharge step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryDischarge {
    /// Rate at which energy leaves storage, kW.
    pub removal: f64,
    /// DC power handed to the inverter, kW.
    pub delivered: f64,
}

impl BatteryState {
    /// An empty battery of `capacity` kWh.
    pub fn new(capacity: f64, params: &BatteryParams) -> Result<Self, StorageError> {
        params.validate()?;
        if !(capacity.is_finite() && capacity >= 0.0) {
            return Err(StorageError::InvalidParameter {
                name: "capacity",
                value: capacity,
            });
        }
        Ok(Self {
            energy: 0.0,
            capacity,
            ep_ratio: params.ep_ratio,
            efficiency: params.initial_efficiency,
            initial_efficiency: params.initial_efficiency,
            annual_fade: params.annual_fade,
            lifetime: params.lifetime_years,
        })
    }

    pub fn power_limit(&self) -> f64 {
        self.capacity / self.ep_ratio
    }

    /// Stores as much of `surplus_dc` as the power limit and headroom allow
    /// and returns the accepted power, kW.
    pub fn charge(&mut self, surplus_dc: f64, dt: f64) -> f64 {
        if surplus_dc <= 0.0 || self.capacity <= 0.0 {
            return 0.0;
        }
        let headroom = (self.capacity - self.energy).max(0.0) / dt;
        let accepted = surplus_dc.min(self.power_limit()).min(headroom);
        self.energy = (self.energy + accepted * dt).min(self.capacity);
        accepted
    }

    /// Serves up to `deficit_dc`; losses are charged on the way out.
    pub fn discharge(&mut self, deficit_dc: f64, dt: f64) -> BatteryDischarge {
        if deficit_dc <= 0.0 || self.energy <= 0.0 {
            return BatteryDischarge {
                removal: 0.0,
                delivered: 0.0,
            };
        }
        let removal = (deficit_dc / self.efficiency)
            .min(self.power_limit())
            .min(self.energy / dt);
        self.energy = (self.energy - removal * dt).max(0.0);
        BatteryDischarge {
            removal,
            delivered: (removal * self.efficiency).min(deficit_dc),
        }
    }

    /// Applies one year of efficiency fade; replaces the battery at the end
    /// of every `lifetime`-th year that is not the final year. Returns
    /// whether a replacement happened.
    pub fn year_rollover(&mut self, year_just_ended: u32, horizon: u32) -> bool {
        self.efficiency *= 1.0 - self.annual_fade;
        let replaced = year_just_ended % self.lifetime == 0 && year_just_ended < horizon;
        if replaced {
            self.efficiency = self.initial_efficiency;
        }
        replaced
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StackKind {
    Electrolyser,
    FuelCell,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    lo: f64,
    hi: f64,
    /// Voltage intercept at zero current.
    a: f64,
    /// Slope, V/A.
    b: f64,
}

impl Segment {
    #[inline]
    fn voltage(&self, current: f64, shift: f64) -> f64 {
        (self.a + shift + self.b * current).max(0.0)
    }
}

/// Fresh-cell polarization curve, interpolated piecewise-linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationCurve {
    kind: StackKind,
    points: Vec<(f64, f64)>,
    segments: Vec<Segment>,
}

impl PolarizationCurve {
    pub fn new(kind: StackKind, points: Vec<(f64, f64)>) -> Result<Self, StorageError> {
        if points.len() < 2 {
            return Err(StorageError::InvalidCurve("need at least two points".into()));
        }
        if points.iter().any(|(i, v)| !i.is_finite() || !v.is_finite() || *i < 0.0 || *v < 0.0) {
            return Err(StorageError::InvalidCurve(
                "currents and voltages must be finite and non-negative".into(),
            ));
        }
        for w in points.windows(2) {
            let ((i0, v0), (i1, v1)) = (w[0], w[1]);
            if i1 <= i0 {
                return Err(StorageError::InvalidCurve(format!(
                    "currents must be strictly increasing ({i0} then {i1})"
                )));
            }
            let bad = match kind {
                StackKind::Electrolyser => v1 < v0,
                StackKind::FuelCell => v1 > v0,
            };
            if bad {
                return Err(StorageError::InvalidCurve(format!(
                    "{kind:?} voltage must be monotone ({v0} V then {v1} V)"
                )));
            }
        }
        let segments = points
            .windows(2)
            .map(|w| {
                let ((i0, v0), (i1, v1)) = (w[0], w[1]);
                let b = (v1 - v0) / (i1 - i0);
                Segment {
                    lo: i0,
                    hi: i1,
                    a: v0 - b * i0,
                    b,
                }
            })
            .collect();
        Ok(Self {
            kind,
            points,
            segments,
        })
    }

    /// Straight-line curve `V = v0 + slope·I` on `[0, i_max]`.
    pub fn linear(kind: StackKind, v0: f64, slope: f64, i_max: f64) -> Result<Self, StorageError> {
        Self::new(kind, vec![(0.0, v0), (i_max, v0 + slope * i_max)])
    }

    /// Placeholder electrolyser cell: 1.48 V rising to 1.83 V at a current
    /// where the cell draws 500 W.
    pub fn default_electrolyser() -> Self {
        let i_max = 500.0 / 1.83;
        Self::linear(StackKind::Electrolyser, 1.48, 0.35 / i_max, i_max).expect("valid default")
    }

    /// Placeholder fuel-cell cell: 1.0 V falling to 0.5 V at a current where
    /// the cell delivers its 250 W maximum.
    pub fn default_fuel_cell() -> Self {
        let i_max = 500.0;
        Self::linear(StackKind::FuelCell, 1.0, -0.5 / i_max, i_max).expect("valid default")
    }

    /// Loads `current_a,voltage_v` rows.
    pub fn from_csv(kind: StackKind, path: &Path) -> Result<Self, StorageError> {
        let err = |reason: String| StorageError::CurveFile {
            path: path.display().to_string(),
            reason,
        };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| err(e.to_string()))?;
        let headers = reader.headers().map_err(|e| err(e.to_string()))?.clone();
        if headers.len() != 2 || &headers[0] != "current_a" || &headers[1] != "voltage_v" {
            return Err(err("expected header `current_a,voltage_v`".into()));
        }
        let mut points = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| err(e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| err(format!("line {line}: bad number `{s}`")))
            };
            points.push((parse(&rec[0])?, parse(&rec[1])?));
        }
        Self::new(kind, points)
    }

    pub fn kind(&self) -> StackKind {
        self.kind
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn min_current(&self) -> f64 {
        self.points[0].0
    }

    pub fn max_current(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    #[inline]
    fn segment(&self, current: f64) -> &Segment {
        let idx = self
            .segments
            .iter()
            .position(|s| current <= s.hi)
            .unwrap_or(self.segments.len() - 1);
        &self.segments[idx]
    }

    /// Voltage at `current` with a uniform `shift`, holding the first point's
    /// voltage below the curve's first current.
    #[inline]
    fn voltage_shifted(&self, current: f64, shift: f64) -> f64 {
        let first = &self.segments[0];
        if current < first.lo {
            return first.voltage(first.lo, shift);
        }
        self.segment(current).voltage(current, shift)
    }

    /// Largest `I·V(I)` on the curve (and its smallest argmax) for a given
    /// voltage shift.
    fn max_power(&self, shift: f64) -> (f64, f64) {
        let mut best = (self.min_current(), f64::NEG_INFINITY);
        for seg in &self.segments {
            let mut consider = |i: f64| {
                let p = i * seg.voltage(i, shift);
                if p > best.1 {
                    best = (i, p);
                }
            };
            consider(seg.lo);
            if seg.b < 0.0 {
                let vertex = -(seg.a + shift) / (2.0 * seg.b);
                if vertex > seg.lo && vertex < seg.hi {
                    consider(vertex);
                }
            }
            consider(seg.hi);
        }
        best
    }
}

/// A stack of identical PEM cells with accumulated operating hours.
#[derive(Debug, Clone, PartialEq)]
pub struct StackState {
    pub n_cells: u32,
    curve: PolarizationCurve,
    pub op_hours: f64,
    /// Cell voltage change per operating hour, V/h (signed).
    pub drift: f64,
    fresh_max_cell_power: f64,
}

impl StackState {
    pub const ELECTROLYSER_DRIFT: f64 = 10e-6;
    pub const FUEL_CELL_DRIFT: f64 = -5e-6;

    pub fn new(curve: PolarizationCurve, n_cells: u32, drift: f64) -> Result<Self, StorageError> {
        if n_cells == 0 {
            return Err(StorageError::InvalidParameter {
                name: "n_cells",
                value: 0.0,
            });
        }
        if !drift.is_finite() {
            return Err(StorageError::InvalidParameter { name: "drift", value: drift });
        }
        let fresh_max_cell_power = curve.max_power(0.0).1;
        if fresh_max_cell_power <= 0.0 {
            return Err(StorageError::InvalidCurve("curve never produces power".into()));
        }
        Ok(Self {
            n_cells,
            curve,
            op_hours: 0.0,
            drift,
            fresh_max_cell_power,
        })
    }

    /// Stack with as many cells as needed for `rated_kw` of fresh maximum
    /// power; `None` when that rounds to zero cells.
    pub fn sized(curve: PolarizationCurve, rated_kw: f64, drift: f64) -> Result<Option<Self>, StorageError> {
        if !(rated_kw.is_finite() && rated_kw >= 0.0) {
            return Err(StorageError::InvalidParameter {
                name: "rated_kw",
                value: rated_kw,
            });
        }
        let per_cell = curve.max_power(0.0).1;
        if per_cell <= 0.0 {
            return Err(StorageError::InvalidCurve("curve never produces power".into()));
        }
        let n = (rated_kw * 1000.0 / per_cell).round();
        if n < 1.0 {
            return Ok(None);
        }
        Self::new(curve, n as u32, drift).map(Some)
    }

    pub fn kind(&self) -> StackKind {
        self.curve.kind
    }

    pub fn curve(&self) -> &PolarizationCurve {
        &self.curve
    }

    #[inline]
    fn shift(&self) -> f64 {
        self.drift * self.op_hours
    }

    /// Degraded cell voltage at `current`.
    pub fn cell_voltage(&self, current: f64) -> Result<f64, StorageError> {
        let (min, max) = (self.curve.min_current(), self.curve.max_current());
        if !(current >= min && current <= max) {
            return Err(StorageError::CurrentOutOfRange { current, min, max });
        }
        Ok(self.curve.voltage_shifted(current, self.shift()))
    }

    #[inline]
    fn cell_power(&self, current: f64) -> f64 {
        current * self.curve.voltage_shifted(current, self.shift())
    }

    /// Stack power at a per-cell `current`, kW.
    pub fn stack_power_kw(&self, current: f64) -> f64 {
        f64::from(self.n_cells) * self.cell_power(current) / 1000.0
    }

    /// Maximum cell power at the current degradation level, W.
    pub fn max_cell_power(&self) -> f64 {
        self.curve.max_power(self.shift()).1
    }

    pub fn fresh_max_cell_power(&self) -> f64 {
        self.fresh_max_cell_power
    }

    /// Maximum stack power at the current degradation level, kW.
    pub fn max_power_kw(&self) -> f64 {
        f64::from(self.n_cells) * self.max_cell_power() / 1000.0
    }

    /// Smallest per-cell current at which the stack converts `power_dc` kW.
    /// Requests above the degraded maximum saturate at the maximum-power
    /// current.
    pub fn solve_operating_current(&self, power_dc: f64) -> f64 {
        if !(power_dc > 0.0) {
            return 0.0;
        }
        let shift = self.shift();
        let target = power_dc * 1000.0 / f64::from(self.n_cells);
        let (i_star, p_star) = self.curve.max_power(shift);
        if target >= p_star {
            return i_star;
        }

        let first = &self.curve.segments[0];
        let v_first = first.voltage(first.lo, shift);
        if target <= first.lo * v_first {
            return target / v_first;
        }

        for seg in &self.curve.segments {
            let top = if i_star <= seg.hi { i_star } else { seg.hi };
            let mut seg_max = (top, top * seg.voltage(top, shift));
            if seg.b < 0.0 {
                let vertex = -(seg.a + shift) / (2.0 * seg.b);
                if vertex > seg.lo && vertex < top {
                    let p = vertex * seg.voltage(vertex, shift);
                    if p > seg_max.1 {
                        seg_max = (vertex, p);
                    }
                }
            }
            if seg_max.1 >= target {
                // I·(A + b·I) = P on a linear segment; the smaller root is the
                // one on the rising side of the power curve.
                let a = seg.a + shift;
                let disc = (a * a + 4.0 * seg.b * target).max(0.0);
                let i = 2.0 * target / (a + disc.sqrt());
                return i.clamp(seg.lo, seg_max.0);
            }
            if i_star <= seg.hi {
                break;
            }
        }
        i_star
    }

    /// Ratio of fresh to degraded maximum cell power for an electrolyser,
    /// degraded to fresh for a fuel cell. One when new, falling with use.
    pub fn soh(&self) -> f64 {
        let now = self.max_cell_power();
        match self.kind() {
            StackKind::Electrolyser => self.fresh_max_cell_power / now,
            StackKind::FuelCell => now / self.fresh_max_cell_power,
        }
    }

    /// Hydrogen mass flow for `current` over `dt` hours, kg.
    pub fn h2_mass(&self, current: f64, dt: f64) -> f64 {
        H2_KG_PER_AMP_SECOND * current * f64::from(self.n_cells) * SECONDS_PER_HOUR * dt
    }

    fn current_for_mass(&self, mass: f64, dt: f64) -> f64 {
        mass / (H2_KG_PER_AMP_SECOND * f64::from(self.n_cells) * SECONDS_PER_HOUR * dt)
    }

    /// Fresh stack: operating hours back to zero.
    pub fn replace(&mut self) {
        self.op_hours = 0.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TankState {
    /// Stored hydrogen, kg.
    pub mass: f64,
    pub capacity: f64,
}

impl TankState {
    pub fn new(capacity: f64) -> Result<Self, StorageError> {
        if !(capacity.is_finite() && capacity >= 0.0) {
            return Err(StorageError::InvalidParameter {
                name: "tank capacity",
                value: capacity,
            });
        }
        Ok(Self { mass: 0.0, capacity })
    }

    pub fn headroom(&self) -> f64 {
        (self.capacity - self.mass).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StackFlow {
    /// Electrical power consumed (electrolyser) or delivered (fuel cell), kW DC.
    pub power: f64,
    /// Hydrogen produced or consumed, kg.
    pub h2: f64,
    /// Per-cell current, A.
    pub current: f64,
}

/// Converts surplus DC power into hydrogen, limited by the degraded stack
/// maximum and by tank headroom.
pub fn electrolyser_step(stack: &mut StackState, tank: &mut TankState, surplus_dc: f64, dt: f64) -> StackFlow {
    debug_assert_eq!(stack.kind(), StackKind::Electrolyser);
    let headroom = tank.headroom();
    if !(surplus_dc > 0.0) || headroom <= 0.0 {
        return StackFlow::default();
    }
    let mut power = surplus_dc.min(stack.max_power_kw());
    let mut current = stack.solve_operating_current(power);
    let mut mass = stack.h2_mass(current, dt);
    if mass >= headroom {
        current = stack.current_for_mass(headroom, dt);
        power = stack.stack_power_kw(current);
        mass = headroom;
        tank.mass = tank.capacity;
    } else {
        tank.mass += mass;
    }
    if power > 0.0 {
        stack.op_hours += dt;
    }
    StackFlow { power, h2: mass, current }
}

/// Converts stored hydrogen into DC power, limited by the degraded stack
/// maximum and by the hydrogen available for this step.
pub fn fuel_cell_step(stack: &mut StackState, tank: &mut TankState, deficit_dc: f64, dt: f64) -> StackFlow {
    debug_assert_eq!(stack.kind(), StackKind::FuelCell);
    if !(deficit_dc > 0.0) || tank.mass <= 0.0 {
        return StackFlow::default();
    }
    let mut power = deficit_dc.min(stack.max_power_kw());
    let mut current = stack.solve_operating_current(power);
    let mut mass = stack.h2_mass(current, dt);
    if mass >= tank.mass {
        current = stack.current_for_mass(tank.mass, dt);
        power = stack.stack_power_kw(current).min(power);
        mass = tank.mass;
        tank.mass = 0.0;
    } else {
        tank.mass -= mass;
    }
    if power > 0.0 {
        stack.op_hours += dt;
    }
    StackFlow { power, h2: mass, current }
}
