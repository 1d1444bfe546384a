//! Techno-economic simulation and multi-objective sizing of grid-connected
//! PV systems with battery or hydrogen storage.
//!
//! The crate is organised bottom-up:
//!
//! * [`profiles`] – hourly series, synthetic generators, tariff calendar.
//! * [`storage`] – battery, PEM electrolyser / fuel cell stacks and the tank.
//! * [`dispatch`] – hour-by-hour energy management and the horizon run.
//! * [`economics`] – bills, cost schedules, NPC/NPV and self-sufficiency.
//! * [`optimizer`] – MOMFA, NSGA-II, non-dominated sorting, hypervolume.
//! * [`problem`] – the sizing problem that ties the above together.
//! * [`site`] – synthetic tropical and subtropical sites.
//!
//! Population evaluation uses rayon when the `parallel` feature is enabled
//! (the default); without it every batch is evaluated sequentially.

pub mod dispatch;
pub mod economics;
pub mod exec;
pub mod optimizer;
pub mod problem;
pub mod profiles;
pub mod site;
pub mod storage;

/// Number of hourly slots in every simulated year. Leap days are dropped.
pub const HOURS_PER_YEAR: usize = 8760;

/// Default project horizon in years.
pub const PROJECT_YEARS: u32 = 25;
