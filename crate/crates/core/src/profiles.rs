//! Hourly PV / load series, their synthetic generators and the
//! time-of-use tariff calendar.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Index, IndexMut};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, Duration, NaiveDateTime, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{HOURS_PER_YEAR, PROJECT_YEARS};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed row: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("line {line}: gap in hourly series, missing timestamp {missing}")]
    Gap { line: u64, missing: NaiveDateTime },
    #[error("line {line}: timestamp {timestamp} is duplicated or out of order")]
    NotIncreasing { line: u64, timestamp: NaiveDateTime },
    #[error("line {line}: negative power {value} kW")]
    NegativePower { line: u64, value: f64 },
    #[error("expected {expected} hourly rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("parameter `{name}` out of range: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("year {year} outside the 1..={horizon} horizon")]
    YearOutOfHorizon { year: u32, horizon: u32 },
    #[error("invalid tariff: {0}")]
    Tariff(String),
}

/// Hourly power series covering one or more 8760-hour years.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    values: Vec<f64>,
    start_weekday: Weekday,
}

impl HourlySeries {
    pub fn new(values: Vec<f64>, start_weekday: Weekday) -> Result<Self, ProfileError> {
        if values.is_empty() || values.len() % HOURS_PER_YEAR != 0 {
            return Err(ProfileError::InvalidSeries(format!(
                "length {} is not a positive multiple of {HOURS_PER_YEAR}",
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(ProfileError::InvalidSeries(format!(
                "slot {i} holds {v}; values must be finite and non-negative"
            )));
        }
        Ok(Self {
            values,
            start_weekday,
        })
    }

    /// Constant series, mostly useful in tests.
    pub fn constant(value: f64, years: usize) -> Result<Self, ProfileError> {
        Self::new(vec![value; HOURS_PER_YEAR * years.max(1)], Weekday::Mon)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start_weekday(&self) -> Weekday {
        self.start_weekday
    }

    /// Number of distinct years held by the series.
    pub fn years(&self) -> usize {
        self.values.len() / HOURS_PER_YEAR
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Values of simulated year `year` (1-based). Series shorter than the
    /// horizon are tiled.
    pub fn year_slice(&self, year: u32) -> &[f64] {
        let idx = (year.max(1) as usize - 1) % self.years();
        &self.values[idx * HOURS_PER_YEAR..(idx + 1) * HOURS_PER_YEAR]
    }

    pub fn at(&self, year: u32, hour: usize) -> f64 {
        self.year_slice(year)[hour]
    }

    /// Day of week of `hour` (hour-of-year) in simulated `year`. A tiled
    /// single-year series keeps its own weekday alignment every year so the
    /// weekly load pattern stays in phase with the tariff calendar.
    pub fn weekday_at(&self, year: u32, hour: usize) -> Weekday {
        let idx = (year.max(1) as usize - 1) % self.years();
        let day = (idx * HOURS_PER_YEAR + hour) / 24;
        let offset = self.start_weekday.num_days_from_monday() as usize + day;
        weekday_from_index(offset % 7)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, ProfileError> {
        Self::new(
            self.values.iter().map(|v| v * factor).collect(),
            self.start_weekday,
        )
    }

    /// Energy per calendar month of the first year (non-leap months).
    pub fn monthly_totals(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        let mut hour = 0;
        for (m, days) in MONTH_DAYS.iter().enumerate() {
            let n = days * 24;
            out[m] = self.values[hour..hour + n].iter().sum();
            hour += n;
        }
        out
    }
}

pub const MONTH_DAYS: [usize; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

pub fn weekday_from_index(i: usize) -> Weekday {
    match i % 7 {
        0 => Weekday::Mon,
        1 => Weekday::Tue,
        2 => Weekday::Wed,
        3 => Weekday::Thu,
        4 => Weekday::Fri,
        5 => Weekday::Sat,
        _ => Weekday::Sun,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateBand {
    Peak,
    Shoulder,
    OffPeak,
}

impl RateBand {
    pub const ALL: [RateBand; 3] = [RateBand::Peak, RateBand::Shoulder, RateBand::OffPeak];

    pub fn as_str(self) -> &'static str {
        match self {
            RateBand::Peak => "peak",
            RateBand::Shoulder => "shoulder",
            RateBand::OffPeak => "off_peak",
        }
    }
}

impl fmt::Display for RateBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One value per tariff band.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerBand<T> {
    pub peak: T,
    pub shoulder: T,
    pub off_peak: T,
}

impl<T> Index<RateBand> for PerBand<T> {
    type Output = T;

    fn index(&self, band: RateBand) -> &T {
        match band {
            RateBand::Peak => &self.peak,
            RateBand::Shoulder => &self.shoulder,
            RateBand::OffPeak => &self.off_peak,
        }
    }
}

impl<T> IndexMut<RateBand> for PerBand<T> {
    fn index_mut(&mut self, band: RateBand) -> &mut T {
        match band {
            RateBand::Peak => &mut self.peak,
            RateBand::Shoulder => &mut self.shoulder,
            RateBand::OffPeak => &mut self.off_peak,
        }
    }
}

impl PerBand<f64> {
    pub fn total(&self) -> f64 {
        self.peak + self.shoulder + self.off_peak
    }
}

/// Week calendar (Monday first) of rate bands, first-year prices and the
/// yearly price multipliers `k_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct TariffSchedule {
    calendar: [[RateBand; 24]; 7],
    first_year_rates: PerBand<f64>,
    price_factors: Vec<f64>,
}

impl TariffSchedule {
    pub fn new(
        calendar: [[RateBand; 24]; 7],
        first_year_rates: PerBand<f64>,
        price_factors: Vec<f64>,
    ) -> Result<Self, ProfileError> {
        for band in RateBand::ALL {
            let r = first_year_rates[band];
            if !(r.is_finite() && r > 0.0) {
                return Err(ProfileError::Tariff(format!("{band} rate must be > 0, got {r}")));
            }
        }
        if price_factors.is_empty() {
            return Err(ProfileError::Tariff("no price factors".into()));
        }
        if let Some(k) = price_factors.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
            return Err(ProfileError::Tariff(format!("price factor {k} must be > 0")));
        }
        if price_factors[0] != 1.0 {
            return Err(ProfileError::Tariff(format!(
                "first-year price factor must be 1, got {}",
                price_factors[0]
            )));
        }
        Ok(Self {
            calendar,
            first_year_rates,
            price_factors,
        })
    }

    /// Commercial time-of-use calendar: Mon–Sat peak 10–12 and 17–20,
    /// shoulder 4–10, 12–17 and 20–22; Sunday shoulder 4–22; everything else
    /// off-peak.
    pub fn default_calendar() -> [[RateBand; 24]; 7] {
        let mut cal = [[RateBand::OffPeak; 24]; 7];
        for (day, hours) in cal.iter_mut().enumerate() {
            for (h, band) in hours.iter_mut().enumerate() {
                *band = if day == 6 {
                    if (4..22).contains(&h) {
                        RateBand::Shoulder
                    } else {
                        RateBand::OffPeak
                    }
                } else if (10..12).contains(&h) || (17..20).contains(&h) {
                    RateBand::Peak
                } else if (4..22).contains(&h) {
                    RateBand::Shoulder
                } else {
                    RateBand::OffPeak
                };
            }
        }
        cal
    }

    pub fn default_rates() -> PerBand<f64> {
        PerBand {
            peak: 0.187,
            shoulder: 0.107,
            off_peak: 0.060,
        }
    }

    pub fn first_year_rates(&self) -> PerBand<f64> {
        self.first_year_rates
    }

    pub fn price_factors(&self) -> &[f64] {
        &self.price_factors
    }

    pub fn calendar(&self) -> &[[RateBand; 24]; 7] {
        &self.calendar
    }

    /// Band and first-year price of a (weekday, hour-of-day) slot.
    pub fn band_at(&self, day: Weekday, hour: usize) -> (RateBand, f64) {
        let band = self.band(day, hour);
        (band, self.first_year_rates[band])
    }

    #[inline]
    pub fn band(&self, day: Weekday, hour: usize) -> RateBand {
        self.calendar[day.num_days_from_monday() as usize][hour]
    }

    /// `k_y` for a 1-based year; years beyond the supplied factor list
    /// reuse the last factor.
    pub fn price_factor(&self, year: u32) -> Result<f64, ProfileError> {
        if year == 0 {
            return Err(ProfileError::YearOutOfHorizon {
                year,
                horizon: self.price_factors.len() as u32,
            });
        }
        let i = (year as usize - 1).min(self.price_factors.len() - 1);
        Ok(self.price_factors[i])
    }

    /// `r_y = k_y × r_1` for one band.
    pub fn rate(&self, band: RateBand, year: u32) -> Result<f64, ProfileError> {
        Ok(self.price_factor(year)? * self.first_year_rates[band])
    }
}

impl Default for TariffSchedule {
    fn default() -> Self {
        Self::new(
            Self::default_calendar(),
            Self::default_rates(),
            vec![1.0; PROJECT_YEARS as usize],
        )
        .expect("default tariff is valid")
    }
}

/// A measured (or synthetic) PV plant used as the shape for any resized
/// system.
#[derive(Debug, Clone, PartialEq)]
pub struct PvPlantConfig {
    pub base_series: HourlySeries,
    pub base_kwp: f64,
    pub depreciation_rate: f64,
    pub horizon: u32,
}

impl PvPlantConfig {
    pub const DEFAULT_DEPRECIATION: f64 = 0.0055;

    pub fn new(
        base_series: HourlySeries,
        base_kwp: f64,
        depreciation_rate: f64,
    ) -> Result<Self, ProfileError> {
        if !(base_kwp.is_finite() && base_kwp > 0.0) {
            return Err(ProfileError::InvalidParameter {
                name: "base_kwp",
                value: base_kwp,
            });
        }
        if !(0.0..1.0).contains(&depreciation_rate) {
            return Err(ProfileError::InvalidParameter {
                name: "depreciation_rate",
                value: depreciation_rate,
            });
        }
        Ok(Self {
            base_series,
            base_kwp,
            depreciation_rate,
            horizon: PROJECT_YEARS,
        })
    }

    pub fn with_horizon(mut self, horizon: u32) -> Self {
        self.horizon = horizon;
        self
    }

    /// Multiplier applied to the base series for a plant of `new_kwp` in
    /// `year`: size ratio times linear output depreciation.
    pub fn year_factor(&self, new_kwp: f64, year: u32) -> Result<f64, ProfileError> {
        if year == 0 || year > self.horizon {
            return Err(ProfileError::YearOutOfHorizon {
                year,
                horizon: self.horizon,
            });
        }
        let derate = (1.0 - self.depreciation_rate * f64::from(year - 1)).max(0.0);
        Ok((new_kwp.max(0.0) / self.base_kwp) * derate)
    }

    pub fn scaled_pv_output(&self, new_kwp: f64, year: u32, hour: usize) -> Result<f64, ProfileError> {
        Ok(self.base_series.at(year, hour) * self.year_factor(new_kwp, year)?)
    }
}

const SUNRISE_HOUR: f64 = 6.0;
const SUNSET_HOUR: f64 = 18.0;
/// Day of year (0-based) with the strongest irradiance: mid-January, i.e.
/// southern-hemisphere summer.
pub const SOLAR_PEAK_DAY: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvSynthParams {
    pub annual_kwh_per_kwp: f64,
    pub seasonal_amplitude: f64,
    pub noise_level: f64,
    pub seed: u64,
}

impl PvSynthParams {
    /// Near-equatorial site with little seasonality.
    pub fn tropical(seed: u64) -> Self {
        Self {
            annual_kwh_per_kwp: 1460.0,
            seasonal_amplitude: 0.1,
            noise_level: 0.3,
            seed,
        }
    }

    /// Mid-latitude site with a strong summer/winter mismatch.
    pub fn subtropical(seed: u64) -> Self {
        Self {
            annual_kwh_per_kwp: 1300.0,
            seasonal_amplitude: 0.8,
            noise_level: 0.3,
            seed,
        }
    }
}

/// Normalised daylight shape: a half-sine between sunrise and sunset.
pub fn daylight_shape(hour: usize) -> f64 {
    let x = (hour as f64 + 0.5 - SUNRISE_HOUR) / (SUNSET_HOUR - SUNRISE_HOUR);
    if (0.0..=1.0).contains(&x) {
        (PI * x).sin().max(0.0)
    } else {
        0.0
    }
}

/// Seasonal envelope of daily PV energy for 0-based `day`.
pub fn seasonal_envelope(day: usize, amplitude: f64) -> f64 {
    1.0 + amplitude * (2.0 * PI * (day as f64 - SOLAR_PEAK_DAY) / 365.0).cos()
}

/// One year of PV output per kWp installed, starting on a Monday.
pub fn synth_pv_profile(params: &PvSynthParams) -> Result<HourlySeries, ProfileError> {
    let PvSynthParams {
        annual_kwh_per_kwp,
        seasonal_amplitude,
        noise_level,
        seed,
    } = *params;
    if !(annual_kwh_per_kwp.is_finite() && annual_kwh_per_kwp > 0.0) {
        return Err(ProfileError::InvalidParameter {
            name: "annual_kwh_per_kwp",
            value: annual_kwh_per_kwp,
        });
    }
    if !(0.0..=1.0).contains(&seasonal_amplitude) {
        return Err(ProfileError::InvalidParameter {
            name: "seasonal_amplitude",
            value: seasonal_amplitude,
        });
    }
    if !(0.0..=1.0).contains(&noise_level) {
        return Err(ProfileError::InvalidParameter {
            name: "noise_level",
            value: noise_level,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape: Vec<f64> = (0..24).map(daylight_shape).collect();
    let mut values = Vec::with_capacity(HOURS_PER_YEAR);
    for day in 0..HOURS_PER_YEAR / 24 {
        let cloud = 1.0 + noise_level * rng.random_range(-1.0..1.0);
        let weight = seasonal_envelope(day, seasonal_amplitude) * cloud;
        values.extend(shape.iter().map(|s| s * weight));
    }
    normalise(&mut values, annual_kwh_per_kwp);
    HourlySeries::new(values, Weekday::Mon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadSynthParams {
    pub annual_kwh: f64,
    /// Working-hours load relative to night load.
    pub day_night_ratio: f64,
    /// Saturday/Sunday load relative to weekdays.
    pub weekend_factor: f64,
    pub noise_level: f64,
    pub seed: u64,
}

impl LoadSynthParams {
    pub fn warehouse(annual_kwh: f64, seed: u64) -> Self {
        Self {
            annual_kwh,
            day_night_ratio: 2.5,
            weekend_factor: 0.6,
            noise_level: 0.1,
            seed,
        }
    }
}

const WORK_START_HOUR: usize = 7;
const WORK_END_HOUR: usize = 19;

/// One year of site load starting on a Monday.
pub fn synth_load_profile(params: &LoadSynthParams) -> Result<HourlySeries, ProfileError> {
    let LoadSynthParams {
        annual_kwh,
        day_night_ratio,
        weekend_factor,
        noise_level,
        seed,
    } = *params;
    if !(annual_kwh.is_finite() && annual_kwh > 0.0) {
        return Err(ProfileError::InvalidParameter {
            name: "annual_kwh",
            value: annual_kwh,
        });
    }
    if !(day_night_ratio.is_finite() && day_night_ratio > 0.0) {
        return Err(ProfileError::InvalidParameter {
            name: "day_night_ratio",
            value: day_night_ratio,
        });
    }
    if !(weekend_factor.is_finite() && weekend_factor > 0.0) {
        return Err(ProfileError::InvalidParameter {
            name: "weekend_factor",
            value: weekend_factor,
        });
    }
    if !(0.0..1.0).contains(&noise_level) {
        return Err(ProfileError::InvalidParameter {
            name: "noise_level",
            value: noise_level,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(HOURS_PER_YEAR);
    for slot in 0..HOURS_PER_YEAR {
        let (day, hour) = (slot / 24, slot % 24);
        let weekend = day % 7 >= 5;
        let mut w = if (WORK_START_HOUR..WORK_END_HOUR).contains(&hour) {
            day_night_ratio
        } else {
            1.0
        };
        if weekend {
            w *= weekend_factor;
        }
        if noise_level > 0.0 {
            w *= 1.0 + noise_level * rng.random_range(-1.0..1.0);
        }
        values.push(w);
    }
    normalise(&mut values, annual_kwh);
    HourlySeries::new(values, Weekday::Mon)
}

fn normalise(values: &mut [f64], target_total: f64) {
    let total: f64 = values.iter().sum();
    if total > 0.0 {
        let k = target_total / total;
        values.iter_mut().for_each(|v| *v *= k);
    }
}

const TIMESTAMP_FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M",
];

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| DateTime::parse_from_rfc3339(s).ok().map(|dt| dt.naive_local()))
}

fn is_leap_day(ts: &NaiveDateTime) -> bool {
    ts.month() == 2 && ts.day() == 29
}

/// Reads a `timestamp,power_kw` CSV of hourly, gap-free rows. Rows dated
/// 29 February are dropped so every year has 8760 slots; a file that omits
/// them is accepted as well.
pub fn ingest_hourly_csv(path: &Path, expected_year_count: usize) -> Result<HourlySeries, ProfileError> {
    let file = std::fs::File::open(path).map_err(|source| ProfileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header = reader
        .headers()
        .map_err(|e| ProfileError::Malformed {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    if header.len() != 2 || &header[0] != "timestamp" || &header[1] != "power_kw" {
        return Err(ProfileError::Malformed {
            line: 1,
            reason: format!("expected header `timestamp,power_kw`, found `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let hour = Duration::hours(1);
    let mut values = Vec::with_capacity(HOURS_PER_YEAR * expected_year_count.max(1));
    let mut first: Option<NaiveDateTime> = None;
    let mut prev: Option<NaiveDateTime> = None;
    for record in reader.records() {
        let record = record.map_err(|e| ProfileError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(ProfileError::Malformed {
                line,
                reason: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let ts = parse_timestamp(&record[0]).ok_or_else(|| ProfileError::Malformed {
            line,
            reason: format!("unparseable timestamp `{}`", &record[0]),
        })?;
        let power: f64 = record[1].parse().map_err(|_| ProfileError::Malformed {
            line,
            reason: format!("unparseable power `{}`", &record[1]),
        })?;
        if !power.is_finite() {
            return Err(ProfileError::Malformed {
                line,
                reason: format!("non-finite power `{}`", &record[1]),
            });
        }
        if power < 0.0 {
            return Err(ProfileError::NegativePower { line, value: power });
        }

        if let Some(p) = prev {
            let expected = p + hour;
            let skips_leap_day = is_leap_day(&expected) && ts == expected + Duration::hours(24);
            if ts != expected && !skips_leap_day {
                return Err(if ts <= p {
                    ProfileError::NotIncreasing { line, timestamp: ts }
                } else {
                    ProfileError::Gap {
                        line,
                        missing: expected,
                    }
                });
            }
        } else {
            first = Some(ts);
        }
        prev = Some(ts);
        if !is_leap_day(&ts) {
            values.push(power);
        }
    }

    let expected = HOURS_PER_YEAR * expected_year_count;
    if values.len() != expected || expected == 0 {
        return Err(ProfileError::RowCount {
            expected,
            found: values.len(),
        });
    }
    let start = first.map_or(Weekday::Mon, |t| t.weekday());
    HourlySeries::new(values, start)
}

/// Writes a series in the ingestion format, one row per hour starting at
/// `start` (leap days skipped).
pub fn write_hourly_csv<W: std::io::Write>(
    series: &HourlySeries,
    start: NaiveDateTime,
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "power_kw"])?;
    let mut ts = start;
    for v in series.values() {
        while is_leap_day(&ts) {
            ts += Duration::hours(1);
        }
        w.write_record([ts.format("%Y-%m-%dT%H:%M:%S").to_string(), format!("{v}")])?;
        ts += Duration::hours(1);
    }
    w.flush()?;
    Ok(())
}
