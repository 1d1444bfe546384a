//! Scenario files: TOML with nested sections, parsed strictly and resolved
//! into core types before any run starts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ressize_core::dispatch::{Component, OldsParams, Scenario, StrategyConfig, SystemSizing, TimeOfYear};
use ressize_core::economics::{ComponentCost, CostBook, CostScenario, DEFAULT_DISCOUNT_RATE};
use ressize_core::optimizer::{MomfaParams, Nsga2Params};
use ressize_core::problem::{Case, SizingBounds};
use ressize_core::profiles::{
    ingest_hourly_csv, synth_load_profile, synth_pv_profile, HourlySeries, LoadSynthParams, PerBand, PvPlantConfig,
    PvSynthParams, RateBand, TariffSchedule,
};
use ressize_core::PROJECT_YEARS;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    #[serde(default = "default_inverter_efficiency")]
    pub inverter_efficiency: f64,
    pub profiles: ProfilesSection,
    #[serde(default)]
    pub tariff: TariffSection,
    #[serde(default)]
    pub economics: EconomicsSection,
    #[serde(default)]
    pub bounds: SizingBounds,
    #[serde(default)]
    pub sizing: Option<SizingSpec>,
    #[serde(default)]
    pub strategy: StrategySection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub momfa: MomfaParams,
    #[serde(default)]
    pub nsga2: Nsga2Params,
}

fn default_horizon() -> u32 {
    PROJECT_YEARS
}

fn default_inverter_efficiency() -> f64 {
    SystemSizing::DEFAULT_INVERTER_EFFICIENCY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilesSection {
    pub pv: PvSource,
    pub load: LoadSource,
    #[serde(default = "default_depreciation")]
    pub depreciation_rate: f64,
}

fn default_depreciation() -> f64 {
    PvPlantConfig::DEFAULT_DEPRECIATION
}

/// PV shape: generated per kWp and scaled to a reference plant of
/// `base_annual_kwh`, or read from a plant of `base_kwp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum PvSource {
    Synthetic {
        annual_kwh_per_kwp: f64,
        seasonal_amplitude: f64,
        noise_level: f64,
        seed: u64,
        base_annual_kwh: f64,
    },
    File {
        path: PathBuf,
        base_kwp: f64,
        #[serde(default = "one_year")]
        years: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadSource {
    Synthetic {
        annual_kwh: f64,
        day_night_ratio: f64,
        weekend_factor: f64,
        noise_level: f64,
        seed: u64,
    },
    File {
        path: PathBuf,
        #[serde(default = "one_year")]
        years: usize,
    },
}

fn one_year() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TariffSection {
    pub peak: f64,
    pub shoulder: f64,
    pub off_peak: f64,
    /// Yearly multipliers starting at 1.0; missing years reuse the last.
    pub price_factors: Vec<f64>,
    /// Seven rows (Monday first) of 24 characters: `P` peak, `S` shoulder,
    /// `O` off-peak. Defaults to the commercial calendar.
    #[serde(default)]
    pub calendar: Option<Vec<String>>,
}

impl Default for TariffSection {
    fn default() -> Self {
        let r = TariffSchedule::default_rates();
        Self {
            peak: r.peak,
            shoulder: r.shoulder,
            off_peak: r.off_peak,
            price_factors: vec![1.0],
            calendar: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomicsSection {
    pub cost: CostScenario,
    pub discount_rate: f64,
    /// Per-component replacements of the preset cost rows.
    #[serde(default)]
    pub components: BTreeMap<Component, ComponentCost>,
}

impl Default for EconomicsSection {
    fn default() -> Self {
        Self {
            cost: CostScenario::Current,
            discount_rate: DEFAULT_DISCOUNT_RATE,
            components: BTreeMap::new(),
        }
    }
}

/// A fixed system, as written in a scenario or sizing file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SizingSpec {
    None,
    Battery { pv_kwp: f64, battery_kwh: f64 },
    Hydrogen { pv_kwp: f64, el_kw: f64, tank_kg: f64, fc_kw: f64 },
}

impl SizingSpec {
    pub fn to_sizing(self, inverter_efficiency: f64) -> SystemSizing {
        let mut s = match self {
            SizingSpec::None => SystemSizing::baseline(),
            SizingSpec::Battery { pv_kwp, battery_kwh } => SystemSizing::battery(pv_kwp, battery_kwh),
            SizingSpec::Hydrogen {
                pv_kwp,
                el_kw,
                tank_kg,
                fc_kw,
            } => SystemSizing::hydrogen(pv_kwp, el_kw, tank_kg, fc_kw),
        };
        s.inverter_efficiency = inverter_efficiency;
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum StrategyMode {
    Cs,
    Olds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySection {
    pub mode: StrategyMode,
    pub window_start: TimeOfYear,
    pub window_end: TimeOfYear,
    pub limit_sunny: f64,
    pub limit_cloudy: f64,
}

impl Default for StrategySection {
    fn default() -> Self {
        Self {
            mode: StrategyMode::Cs,
            window_start: TimeOfYear { day: 1, hour: 0 },
            window_end: TimeOfYear { day: 365, hour: 23 },
            limit_sunny: 0.0,
            limit_cloudy: 0.0,
        }
    }
}

impl StrategySection {
    pub fn to_strategy(&self) -> StrategyConfig {
        match self.mode {
            StrategyMode::Cs => StrategyConfig::Conventional,
            StrategyMode::Olds => StrategyConfig::Olds(OldsParams {
                window_start: self.window_start,
                window_end: self.window_end,
                limit_sunny: self.limit_sunny,
                limit_cloudy: self.limit_cloudy,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Momfa,
    Nsga2,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Momfa => "momfa",
            Algorithm::Nsga2 => "nsga2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub case: u8,
    pub algorithm: Algorithm,
    pub budget: usize,
    pub seed: u64,
    #[serde(default)]
    pub min_ssr: Option<f64>,
    pub archive_capacity: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            case: 1,
            algorithm: Algorithm::Momfa,
            budget: 2000,
            seed: 1,
            min_ssr: None,
            archive_capacity: 100,
        }
    }
}

/// Parses a scenario file, reporting the failing field path.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Config(e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("{path}: {}", e.into_inner().message()))
    })
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut file = parse_scenario(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    file.rebase_paths(base);
    Ok(file)
}

/// Parses `--sizing`: a TOML file path, or inline `key=value` pairs such as
/// `kind=hydrogen,pv_kwp=2500,el_kw=600,tank_kg=150,fc_kw=200`.
pub fn parse_sizing_arg(arg: &str) -> Result<SizingSpec, CliError> {
    let path = Path::new(arg);
    let text = if path.is_file() {
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{arg}: {e}")))?
    } else {
        let mut lines = Vec::new();
        for pair in arg.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("sizing: expected key=value, found `{pair}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "kind" {
                lines.push(format!("kind = \"{v}\""));
            } else {
                let x: f64 = v
                    .parse()
                    .map_err(|_| CliError::Config(format!("sizing.{k}: `{v}` is not a number")))?;
                lines.push(format!("{k} = {x:?}"));
            }
        }
        lines.join("\n")
    };
    let de = toml::Deserializer::parse(&text).map_err(|e| CliError::Config(format!("sizing: {e}")))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("sizing.{path}: {}", e.into_inner().message()))
    })
}

fn parse_calendar(rows: &[String]) -> Result<[[RateBand; 24]; 7], CliError> {
    if rows.len() != 7 {
        return Err(CliError::Config(format!("tariff.calendar: expected 7 rows, found {}", rows.len())));
    }
    let mut cal = [[RateBand::OffPeak; 24]; 7];
    for (d, row) in rows.iter().enumerate() {
        let chars: Vec<char> = row.chars().collect();
        if chars.len() != 24 {
            return Err(CliError::Config(format!(
                "tariff.calendar[{d}]: expected 24 characters, found {}",
                chars.len()
            )));
        }
        for (h, c) in chars.into_iter().enumerate() {
            cal[d][h] = match c {
                'P' => RateBand::Peak,
                'S' => RateBand::Shoulder,
                'O' => RateBand::OffPeak,
                other => {
                    return Err(CliError::Config(format!(
                        "tariff.calendar[{d}]: unknown band `{other}` (use P, S or O)"
                    )))
                }
            };
        }
    }
    Ok(cal)
}

fn config_err(section: &str) -> impl Fn(String) -> CliError + '_ {
    move |m| CliError::Config(format!("{section}: {m}"))
}

/// Scenario after loading series, building the tariff and cost book and
/// applying command-line overrides.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub file: ScenarioFile,
    pub scenario: Scenario,
    pub book: CostBook,
    pub digest: String,
}

impl ScenarioFile {
    fn rebase_paths(&mut self, base: &Path) {
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let PvSource::File { path, .. } = &mut self.profiles.pv {
            rebase(path);
        }
        if let LoadSource::File { path, .. } = &mut self.profiles.load {
            rebase(path);
        }
    }

    pub fn cost_book(&self) -> Result<CostBook, CliError> {
        let e = &self.economics;
        let mut book = CostBook::for_scenario(e.cost);
        book.discount_rate = e.discount_rate;
        for (c, cost) in &e.components {
            book.components.insert(*c, cost.clone());
        }
        book.validate().map_err(|x| config_err("economics")(x.to_string()))?;
        Ok(book)
    }

    pub fn tariff(&self) -> Result<TariffSchedule, CliError> {
        let t = &self.tariff;
        let calendar = match &t.calendar {
            Some(rows) => parse_calendar(rows)?,
            None => TariffSchedule::default_calendar(),
        };
        let rates = PerBand {
            peak: t.peak,
            shoulder: t.shoulder,
            off_peak: t.off_peak,
        };
        TariffSchedule::new(calendar, rates, t.price_factors.clone()).map_err(|x| config_err("tariff")(x.to_string()))
    }

    fn pv_plant(&self) -> Result<PvPlantConfig, CliError> {
        let err = config_err("profiles.pv");
        let (series, kwp) = match &self.profiles.pv {
            PvSource::Synthetic {
                annual_kwh_per_kwp,
                seasonal_amplitude,
                noise_level,
                seed,
                base_annual_kwh,
            } => {
                let per_kwp = synth_pv_profile(&PvSynthParams {
                    annual_kwh_per_kwp: *annual_kwh_per_kwp,
                    seasonal_amplitude: *seasonal_amplitude,
                    noise_level: *noise_level,
                    seed: *seed,
                })
                .map_err(|x| err(x.to_string()))?;
                if !(base_annual_kwh.is_finite() && *base_annual_kwh > 0.0) {
                    return Err(err(format!("base_annual_kwh must be > 0, got {base_annual_kwh}")));
                }
                let kwp = base_annual_kwh / annual_kwh_per_kwp;
                (per_kwp.scaled(kwp).map_err(|x| err(x.to_string()))?, kwp)
            }
            PvSource::File { path, base_kwp, years } => (
                ingest_hourly_csv(path, *years).map_err(|x| err(format!("{}: {x}", path.display())))?,
                *base_kwp,
            ),
        };
        PvPlantConfig::new(series, kwp, self.profiles.depreciation_rate).map_err(|x| err(x.to_string()))
    }

    fn load_series(&self) -> Result<HourlySeries, CliError> {
        let err = config_err("profiles.load");
        match &self.profiles.load {
            LoadSource::Synthetic {
                annual_kwh,
                day_night_ratio,
                weekend_factor,
                noise_level,
                seed,
            } => synth_load_profile(&LoadSynthParams {
                annual_kwh: *annual_kwh,
                day_night_ratio: *day_night_ratio,
                weekend_factor: *weekend_factor,
                noise_level: *noise_level,
                seed: *seed,
            })
            .map_err(|x| err(x.to_string())),
            LoadSource::File { path, years } => {
                ingest_hourly_csv(path, *years).map_err(|x| err(format!("{}: {x}", path.display())))
            }
        }
    }

    pub fn case(&self) -> Result<Case, CliError> {
        Case::from_number(self.optimizer.case)
            .ok_or_else(|| CliError::Config(format!("optimizer.case: expected 1, 2 or 3, got {}", self.optimizer.case)))
    }

    /// Checks every section and builds the runnable scenario.
    pub fn resolve(self) -> Result<Resolved, CliError> {
        if self.horizon == 0 {
            return Err(CliError::Config("horizon: must be at least 1".into()));
        }
        if !(self.inverter_efficiency > 0.0 && self.inverter_efficiency <= 1.0) {
            return Err(CliError::Config(format!(
                "inverter_efficiency: must be in (0, 1], got {}",
                self.inverter_efficiency
            )));
        }
        self.case()?;
        let o = &self.optimizer;
        if o.budget == 0 {
            return Err(CliError::Config("optimizer.budget: must be positive".into()));
        }
        if o.archive_capacity == 0 {
            return Err(CliError::Config("optimizer.archive_capacity: must be positive".into()));
        }
        if let Some(m) = o.min_ssr {
            if !(0.0..=1.0).contains(&m) {
                return Err(CliError::Config(format!("optimizer.min_ssr: must be in [0, 1], got {m}")));
            }
        }
        self.momfa.validate().map_err(|x| config_err("momfa")(x.to_string()))?;
        self.nsga2.validate().map_err(|x| config_err("nsga2")(x.to_string()))?;
        if let StrategyConfig::Olds(p) = self.strategy.to_strategy() {
            p.validate().map_err(|x| config_err("strategy")(x.to_string()))?;
        }
        if let Some(s) = self.sizing {
            s.to_sizing(self.inverter_efficiency)
                .validate()
                .map_err(|x| config_err("sizing")(x.to_string()))?;
        }
        let b = &self.bounds;
        for (name, v) in [
            ("pv_kwp", b.pv_kwp),
            ("battery_kwh", b.battery_kwh),
            ("el_kw", b.el_kw),
            ("tank_kg", b.tank_kg),
            ("fc_kw", b.fc_kw),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("bounds.{name}: must be > 0, got {v}")));
            }
        }

        let book = self.cost_book()?;
        let tariff = self.tariff()?;
        let pv = self.pv_plant()?;
        let load = self.load_series()?;
        let mut scenario = Scenario::new(load, pv, tariff, self.horizon);
        scenario.replacements = book.replacement_plan(self.horizon);
        scenario.validate().map_err(|x| config_err("profiles")(x.to_string()))?;
        let digest = digest(&self, &scenario);
        Ok(Resolved {
            file: self,
            scenario,
            book,
            digest,
        })
    }
}

/// Hash of every resolved parameter and of the hourly series themselves;
/// file paths are not part of it.
fn digest(file: &ScenarioFile, scenario: &Scenario) -> String {
    let mut canonical = file.clone();
    if let PvSource::File { path, .. } = &mut canonical.profiles.pv {
        *path = PathBuf::new();
    }
    if let LoadSource::File { path, .. } = &mut canonical.profiles.load {
        *path = PathBuf::new();
    }
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&canonical).expect("scenario serializes"));
    for series in [&scenario.load, &scenario.pv.base_series] {
        h.update(series.start_weekday().num_days_from_monday().to_le_bytes());
        for v in series.values() {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
