//! Two-objective maximisation: the multi-objective modified firefly
//! algorithm (MOMFA), an NSGA-II baseline, constrained non-dominated
//! sorting, crowding, a bounded Pareto archive and the 2-D hypervolume.
//!
//! Fireflies move in the unit cube; every variable is mapped affinely onto
//! its bounds for evaluation. Hour-of-year variables are rounded only when a
//! position is evaluated or exported.

use std::error::Error as StdError;
use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::exec::Execution;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid decision space: {0}")]
    InvalidSpace(String),
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("budget {budget} smaller than population {population}")]
    BudgetTooSmall { budget: usize, population: usize },
    #[error("objective {index} of point {point} is not finite")]
    NonFinite { point: usize, index: usize },
    #[error("reference point {reference:?} is not dominated by {point:?}")]
    BadReference { reference: [f64; 2], point: [f64; 2] },
    #[error("evaluation failed at {position:?}: {message}")]
    Evaluation { position: Vec<f64>, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    Continuous,
    /// Hour index within a year, `0..=8759`; rounded to an integer.
    HourOfYear,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VariableKind,
}

impl Variable {
    pub fn continuous(name: &str, lower: f64, upper: f64) -> Self {
        Self {
            name: name.to_string(),
            lower,
            upper,
            kind: VariableKind::Continuous,
        }
    }

    pub fn hour_of_year(name: &str) -> Self {
        Self {
            name: name.to_string(),
            lower: 0.0,
            upper: (crate::HOURS_PER_YEAR - 1) as f64,
            kind: VariableKind::HourOfYear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionSpace {
    variables: Vec<Variable>,
}

impl DecisionSpace {
    pub fn new(variables: Vec<Variable>) -> Result<Self, OptimizerError> {
        if variables.is_empty() {
            return Err(OptimizerError::InvalidSpace("no variables".into()));
        }
        for v in &variables {
            if !(v.lower.is_finite() && v.upper.is_finite() && v.lower < v.upper) {
                return Err(OptimizerError::InvalidSpace(format!(
                    "{}: need finite lower < upper, got [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
        }
        Ok(Self { variables })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn dims(&self) -> usize {
        self.variables.len()
    }

    pub fn from_unit(&self, unit: &[f64]) -> Vec<f64> {
        self.variables
            .iter()
            .zip(unit)
            .map(|(v, u)| v.lower + u.clamp(0.0, 1.0) * (v.upper - v.lower))
            .collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        self.variables
            .iter()
            .zip(x)
            .map(|(v, x)| ((x - v.lower) / (v.upper - v.lower)).clamp(0.0, 1.0))
            .collect()
    }

    /// Clamps to bounds and rounds the integer-valued variables.
    pub fn finalize(&self, x: &[f64]) -> Vec<f64> {
        self.variables
            .iter()
            .zip(x)
            .map(|(v, x)| {
                let x = x.clamp(v.lower, v.upper);
                match v.kind {
                    VariableKind::Continuous => x,
                    VariableKind::HourOfYear => x.round(),
                }
            })
            .collect()
    }
}

/// Objective pair (both maximised) and the total constraint violation
/// (zero when feasible).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Objectives {
    pub values: [f64; 2],
    pub violation: f64,
}

impl Objectives {
    pub fn feasible(a: f64, b: f64) -> Self {
        Self {
            values: [a, b],
            violation: 0.0,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.violation <= 0.0
    }
}

pub type EvalError = Box<dyn StdError + Send + Sync>;

pub trait Problem: Sync {
    fn space(&self) -> &DecisionSpace;

    /// Evaluates a clamped, rounded decision vector.
    fn evaluate(&self, x: &[f64]) -> Result<Objectives, EvalError>;

    /// Reference point for progress telemetry; defaults to the worst
    /// objective values of the initial population.
    fn reference_point(&self) -> Option<[f64; 2]> {
        None
    }
}

/// Pareto dominance for maximisation.
pub fn dominates(a: &[f64; 2], b: &[f64; 2]) -> bool {
    a[0] >= b[0] && a[1] >= b[1] && (a[0] > b[0] || a[1] > b[1])
}

/// Feasible beats infeasible, lower violation beats higher, otherwise
/// Pareto dominance.
pub fn constrained_dominates(a: &Objectives, b: &Objectives) -> bool {
    match (a.is_feasible(), b.is_feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => dominates(&a.values, &b.values),
    }
}

fn sort_by_relation(n: usize, dom: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut dominated_by = vec![0usize; n];
    let mut dominating: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dom(i, j) {
                dominating[i].push(j);
                dominated_by[j] += 1;
            } else if dom(j, i) {
                dominating[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut rank = vec![0usize; n];
    let mut front: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    let mut r = 1;
    while !front.is_empty() {
        let mut next = Vec::new();
        for &i in &front {
            rank[i] = r;
            for &j in &dominating[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        front = next;
        r += 1;
    }
    rank
}

/// 1-based non-domination ranks, both objectives maximised.
pub fn non_dominated_sort(points: &[[f64; 2]]) -> Result<Vec<usize>, OptimizerError> {
    for (point, p) in points.iter().enumerate() {
        if let Some(index) = p.iter().position(|v| !v.is_finite()) {
            return Err(OptimizerError::NonFinite { point, index });
        }
    }
    Ok(sort_by_relation(points.len(), |i, j| dominates(&points[i], &points[j])))
}

/// Ranks under constrained domination.
pub fn constrained_ranks(objectives: &[Objectives]) -> Vec<usize> {
    sort_by_relation(objectives.len(), |i, j| constrained_dominates(&objectives[i], &objectives[j]))
}

/// Crowding distance of each point within one front; extremes get
/// infinity.
pub fn crowding_distance(points: &[[f64; 2]]) -> Vec<f64> {
    let n = points.len();
    let mut d = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for m in 0..2 {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| points[a][m].total_cmp(&points[b][m]).then(a.cmp(&b)));
        let (lo, hi) = (points[idx[0]][m], points[idx[n - 1]][m]);
        d[idx[0]] = f64::INFINITY;
        d[idx[n - 1]] = f64::INFINITY;
        let span = hi - lo;
        if span <= 0.0 {
            continue;
        }
        for k in 1..n - 1 {
            d[idx[k]] += (points[idx[k + 1]][m] - points[idx[k - 1]][m]) / span;
        }
    }
    d
}

/// Area dominated by `front` and bounded by `reference` (both maximised).
pub fn hypervolume(front: &[[f64; 2]], reference: [f64; 2]) -> Result<f64, OptimizerError> {
    if let Some(p) = front.iter().find(|p| !(p[0] >= reference[0] && p[1] >= reference[1])) {
        return Err(OptimizerError::BadReference { reference, point: *p });
    }
    Ok(sweep_area(front.to_vec(), reference))
}

/// Like [`hypervolume`] but ignores points that do not dominate the
/// reference.
pub fn hypervolume_clipped(front: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let pts = front
        .iter()
        .filter(|p| p[0] >= reference[0] && p[1] >= reference[1])
        .copied()
        .collect();
    sweep_area(pts, reference)
}

fn sweep_area(mut pts: Vec<[f64; 2]>, reference: [f64; 2]) -> f64 {
    pts.sort_by(|a, b| b[0].total_cmp(&a[0]).then(b[1].total_cmp(&a[1])));
    let mut area = 0.0;
    let mut top = reference[1];
    for p in pts {
        if p[1] > top {
            area += (p[0] - reference[0]) * (p[1] - top);
            top = p[1];
        }
    }
    area
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    /// Position in unit-cube coordinates, before rounding.
    #[serde(skip)]
    pub unit: Vec<f64>,
    /// Decision vector that was evaluated.
    pub decision: Vec<f64>,
    pub objectives: Objectives,
    pub rank: usize,
    pub crowding: f64,
}

fn rank_and_crowd(pop: &mut [Solution]) {
    let objs: Vec<Objectives> = pop.iter().map(|s| s.objectives).collect();
    let ranks = constrained_ranks(&objs);
    let max_rank = ranks.iter().copied().max().unwrap_or(0);
    for r in 1..=max_rank {
        let members: Vec<usize> = (0..pop.len()).filter(|&i| ranks[i] == r).collect();
        let pts: Vec<[f64; 2]> = members.iter().map(|&i| pop[i].objectives.values).collect();
        for (k, d) in crowding_distance(&pts).into_iter().enumerate() {
            pop[members[k]].rank = r;
            pop[members[k]].crowding = d;
        }
    }
}

fn better(a: &Solution, b: &Solution) -> bool {
    a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding)
}

/// Keeps the best `n` by rank, then crowding; ties keep earlier entries.
fn environmental_selection(mut pool: Vec<Solution>, n: usize) -> Vec<Solution> {
    rank_and_crowd(&mut pool);
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    idx.sort_by(|&a, &b| {
        pool[a]
            .rank
            .cmp(&pool[b].rank)
            .then(pool[b].crowding.total_cmp(&pool[a].crowding))
            .then(a.cmp(&b))
    });
    idx.truncate(n);
    idx.sort_unstable();
    let mut keep = vec![false; pool.len()];
    for i in idx {
        keep[i] = true;
    }
    let mut out: Vec<Solution> = pool.into_iter().zip(keep).filter(|(_, k)| *k).map(|(s, _)| s).collect();
    rank_and_crowd(&mut out);
    out
}

/// Exclusive hypervolume contribution of each point of a mutually
/// non-dominated set; points that do not dominate `reference` get zero.
pub fn hypervolume_contributions(points: &[[f64; 2]], reference: [f64; 2]) -> Vec<f64> {
    let mut inside: Vec<usize> = (0..points.len())
        .filter(|&i| points[i][0] >= reference[0] && points[i][1] >= reference[1])
        .collect();
    inside.sort_by(|&a, &b| points[b][0].total_cmp(&points[a][0]).then(points[a][1].total_cmp(&points[b][1])));
    let mut out = vec![0.0; points.len()];
    for (k, &i) in inside.iter().enumerate() {
        let below = if k == 0 { reference[1] } else { points[inside[k - 1]][1] };
        let left = inside.get(k + 1).map_or(reference[0], |&j| points[j][0]);
        out[i] = (points[i][0] - left).max(0.0) * (points[i][1] - below).max(0.0);
    }
    out
}

/// Bounded set of mutually non-dominated solutions.
///
/// Candidates enter one at a time. When a reference point is set and the
/// archive is full, the entry with the smallest exclusive hypervolume
/// contribution leaves (crowding distance breaks ties), so the archive's
/// hypervolume with respect to that reference never decreases. Without a
/// reference the most crowded entry leaves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoArchive {
    entries: Vec<Solution>,
    capacity: usize,
    reference: Option<[f64; 2]>,
}

impl ParetoArchive {
    pub const DEFAULT_CAPACITY: usize = 100;

    pub fn new(capacity: usize) -> Self {
        Self {
            entries: Vec::new(),
            capacity: capacity.max(1),
            reference: None,
        }
    }

    pub fn with_reference(capacity: usize, reference: [f64; 2]) -> Self {
        Self {
            reference: Some(reference),
            ..Self::new(capacity)
        }
    }

    pub fn entries(&self) -> &[Solution] {
        &self.entries
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn reference(&self) -> Option<[f64; 2]> {
        self.reference
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        self.entries.iter().map(|s| s.objectives.values).collect()
    }

    pub fn update(&mut self, candidates: &[Solution]) {
        for c in candidates {
            self.insert(c);
        }
        let pts = self.points();
        for (s, d) in self.entries.iter_mut().zip(crowding_distance(&pts)) {
            s.rank = 1;
            s.crowding = d;
        }
    }

    fn insert(&mut self, c: &Solution) {
        let blocked = self
            .entries
            .iter()
            .any(|e| e.objectives == c.objectives || constrained_dominates(&e.objectives, &c.objectives));
        if blocked {
            return;
        }
        self.entries.retain(|e| !constrained_dominates(&c.objectives, &e.objectives));
        self.entries.push(c.clone());
        if self.entries.len() > self.capacity {
            let worst = self.removal_index();
            self.entries.remove(worst);
        }
    }

    fn removal_index(&self) -> usize {
        let pts = self.points();
        let crowd = crowding_distance(&pts);
        let all_feasible = self.entries.iter().all(|e| e.objectives.is_feasible());
        let contrib = match self.reference {
            Some(r) if all_feasible => hypervolume_contributions(&pts, r),
            _ => vec![0.0; pts.len()],
        };
        (0..pts.len())
            .min_by(|&a, &b| {
                contrib[a]
                    .total_cmp(&contrib[b])
                    .then(crowd[a].total_cmp(&crowd[b]))
                    .then(b.cmp(&a))
            })
            .expect("archive is non-empty")
    }

    /// Feasible entries ordered by ascending objective `k`.
    pub fn sorted_by(&self, k: usize) -> Vec<&Solution> {
        let mut v: Vec<&Solution> = self.entries.iter().filter(|s| s.objectives.is_feasible()).collect();
        v.sort_by(|a, b| {
            a.objectives.values[k]
                .total_cmp(&b.objectives.values[k])
                .then(a.objectives.values[1 - k].total_cmp(&b.objectives.values[1 - k]))
        });
        v
    }

    /// Writes one row per feasible entry: the decision variables, both
    /// objectives and the rank, ordered by objective `sort_key`.
    pub fn write_csv<W: Write>(
        &self,
        space: &DecisionSpace,
        objective_names: [&str; 2],
        sort_key: usize,
        writer: W,
    ) -> Result<(), OptimizerError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = space.variables().iter().map(|v| v.name.as_str()).collect();
        header.extend(objective_names);
        header.push("rank");
        w.write_record(&header)?;
        for s in self.sorted_by(sort_key) {
            let mut row: Vec<String> = s.decision.iter().map(f64::to_string).collect();
            row.extend(s.objectives.values.iter().map(f64::to_string));
            row.push(s.rank.to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationTelemetry {
    pub iteration: usize,
    pub evaluations: usize,
    pub archive_size: usize,
    pub hypervolume: f64,
}

pub fn write_telemetry_csv<W: Write>(rows: &[IterationTelemetry], writer: W) -> Result<(), OptimizerError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["iteration", "evaluations", "archive_size", "hypervolume"])?;
    for r in rows {
        w.write_record([
            r.iteration.to_string(),
            r.evaluations.to_string(),
            r.archive_size.to_string(),
            r.hypervolume.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub archive: ParetoArchive,
    pub telemetry: Vec<IterationTelemetry>,
    pub evaluations: usize,
    pub reference: [f64; 2],
}

/// Settings shared by both algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub budget: usize,
    pub archive_capacity: usize,
    pub execution: Execution,
    /// Decision vectors placed at the front of the initial population.
    pub injected: Vec<Vec<f64>>,
}

impl RunOptions {
    pub fn with_budget(budget: usize) -> Self {
        Self {
            budget,
            archive_capacity: ParetoArchive::DEFAULT_CAPACITY,
            execution: Execution::default(),
            injected: Vec::new(),
        }
    }
}

fn candidate_rng(seed: u64, iteration: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((iteration << 32) | index);
    rng
}

const CONTROL_STREAM: u64 = u64::MAX;

/// Evaluates unit-cube positions in order, in parallel when enabled.
fn evaluate_batch<P: Problem + ?Sized>(
    problem: &P,
    units: Vec<Vec<f64>>,
    execution: Execution,
) -> Result<Vec<Solution>, OptimizerError> {
    let space = problem.space();
    let results = execution.map(&units, |_, u| {
        let decision = space.finalize(&space.from_unit(u));
        let r = problem.evaluate(&decision);
        (decision, r)
    });
    units
        .into_iter()
        .zip(results)
        .map(|(unit, (decision, r))| match r {
            Ok(objectives) => {
                if objectives.values.iter().any(|v| !v.is_finite()) || !objectives.violation.is_finite() {
                    return Err(OptimizerError::Evaluation {
                        position: decision,
                        message: format!("non-finite objectives {:?}", objectives.values),
                    });
                }
                Ok(Solution {
                    unit,
                    decision,
                    objectives,
                    rank: 0,
                    crowding: 0.0,
                })
            }
            Err(e) => Err(OptimizerError::Evaluation {
                position: decision,
                message: e.to_string(),
            }),
        })
        .collect()
}

fn initial_reference<P: Problem + ?Sized>(problem: &P, pop: &[Solution]) -> [f64; 2] {
    problem.reference_point().unwrap_or_else(|| {
        let mut r = [f64::INFINITY; 2];
        for s in pop {
            for k in 0..2 {
                r[k] = r[k].min(s.objectives.values[k]);
            }
        }
        r
    })
}

fn telemetry_row(iteration: usize, evaluations: usize, archive: &ParetoArchive, reference: [f64; 2]) -> IterationTelemetry {
    let feasible: Vec<[f64; 2]> = archive
        .entries()
        .iter()
        .filter(|s| s.objectives.is_feasible())
        .map(|s| s.objectives.values)
        .collect();
    IterationTelemetry {
        iteration,
        evaluations,
        archive_size: archive.len(),
        hypervolume: hypervolume_clipped(&feasible, reference),
    }
}

fn injected_units<P: Problem + ?Sized>(problem: &P, opts: &RunOptions) -> Result<Vec<Vec<f64>>, OptimizerError> {
    let space = problem.space();
    opts.injected
        .iter()
        .map(|x| {
            if x.len() != space.dims() {
                return Err(OptimizerError::InvalidSpace(format!(
                    "injected vector has {} values, space has {}",
                    x.len(),
                    space.dims()
                )));
            }
            Ok(space.to_unit(x))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomfaParams {
    pub population: usize,
    pub beta0: f64,
    pub gamma: f64,
    pub alpha0: f64,
    pub theta: f64,
    pub eta: f64,
    pub tau: f64,
    pub seed: u64,
}

impl Default for MomfaParams {
    fn default() -> Self {
        Self {
            population: 40,
            beta0: 0.2,
            gamma: 1.0,
            alpha0: 1.0,
            theta: 0.9,
            eta: 4.0,
            tau: 1.5,
            seed: 1,
        }
    }
}

impl MomfaParams {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |name, value| Err(OptimizerError::InvalidParameter { name, value });
        if self.population == 0 {
            return bad("population", 0.0);
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma", self.gamma);
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad("theta", self.theta);
        }
        if !(self.eta > 0.0 && self.eta <= 4.0) {
            return bad("eta", self.eta);
        }
        if !(self.tau > 0.0 && self.tau <= 2.0) {
            return bad("tau", self.tau);
        }
        if !(self.beta0 >= 0.0 && self.alpha0 >= 0.0) {
            return bad("beta0", self.beta0);
        }
        Ok(())
    }
}

pub fn logistic_step(x: f64, eta: f64) -> f64 {
    eta * x * (1.0 - x)
}

fn usable_chaos_seed(x: f64) -> bool {
    const AVOID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
    AVOID.iter().all(|a| (x - a).abs() > 1e-6)
}

/// Initial population in unit coordinates: per dimension a logistic-map
/// orbit started from a seed-derived value, one orbit element per firefly.
pub fn logistic_init_unit(n: usize, dims: usize, eta: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = candidate_rng(seed, CONTROL_STREAM >> 32, 0);
    let mut pop = vec![vec![0.0; dims]; n];
    for d in 0..dims {
        let mut x = rng.random::<f64>();
        while !usable_chaos_seed(x) {
            x = rng.random();
        }
        for member in pop.iter_mut() {
            member[d] = x;
            x = logistic_step(x, eta);
            while !usable_chaos_seed(x) {
                x = rng.random();
            }
        }
    }
    pop
}

/// Initial population mapped onto the space bounds.
pub fn logistic_init(n: usize, space: &DecisionSpace, eta: f64, seed: u64) -> Vec<Vec<f64>> {
    logistic_init_unit(n, space.dims(), eta, seed)
        .iter()
        .map(|u| space.from_unit(u))
        .collect()
}

/// Gauss map: `0` stays `0`, otherwise the fractional part of `1/x`.
pub fn chaos_beta_step(prev: f64) -> f64 {
    if prev == 0.0 {
        0.0
    } else {
        (1.0 / prev).fract()
    }
}

pub fn attractiveness(beta_chaos: f64, beta0: f64, gamma: f64, r: f64) -> f64 {
    (beta_chaos - beta0) * (-gamma * r * r).exp() + beta0
}

pub fn alpha_at(alpha0: f64, theta: f64, iteration: usize) -> f64 {
    alpha0 * theta.powi(iteration as i32)
}

pub fn levy_sigma(tau: f64) -> f64 {
    let num = gamma(1.0 + tau) * (PI * tau / 2.0).sin();
    let den = gamma((1.0 + tau) / 2.0) * tau * 2f64.powf((tau - 1.0) / 2.0);
    (num / den).powf(1.0 / tau)
}

/// `u / |v|^(1/τ)`.
pub fn levy_step(u: f64, v: f64, tau: f64) -> f64 {
    u / v.abs().powf(1.0 / tau)
}

pub fn levy_sample<R: Rng + ?Sized>(rng: &mut R, tau: f64, sigma: f64) -> f64 {
    let u = Normal::new(0.0, sigma).expect("sigma is finite and positive").sample(rng);
    let mut v: f64 = rand_distr::StandardNormal.sample(rng);
    while v == 0.0 {
        v = rand_distr::StandardNormal.sample(rng);
    }
    levy_step(u, v, tau)
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `x_i + β (x_j − x_i) + α · random`, per dimension and unclamped.
pub fn move_firefly(xi: &[f64], xj: &[f64], beta: f64, alpha: f64, random: &[f64]) -> Vec<f64> {
    xi.iter()
        .zip(xj)
        .zip(random)
        .map(|((a, b), r)| a + beta * (b - a) + alpha * r)
        .collect()
}

fn random_term<R: Rng + ?Sized>(rng: &mut R, dims: usize, tau: f64, sigma: f64) -> Vec<f64> {
    (0..dims)
        .map(|_| {
            let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
            sign * levy_sample(rng, tau, sigma)
        })
        .collect()
}

fn clamp_unit(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

pub fn momfa_run<P: Problem + ?Sized>(
    problem: &P,
    params: &MomfaParams,
    opts: &RunOptions,
) -> Result<RunOutcome, OptimizerError> {
    params.validate()?;
    let n = params.population;
    if opts.budget < n {
        return Err(OptimizerError::BudgetTooSmall {
            budget: opts.budget,
            population: n,
        });
    }
    let dims = problem.space().dims();
    let mut units = logistic_init_unit(n, dims, params.eta, params.seed);
    for (slot, u) in units.iter_mut().zip(injected_units(problem, opts)?) {
        *slot = u;
    }
    let mut pop = evaluate_batch(problem, units, opts.execution)?;
    let mut evaluations = n;
    rank_and_crowd(&mut pop);

    let reference = initial_reference(problem, &pop);
    let mut archive = ParetoArchive::with_reference(opts.archive_capacity, reference);
    archive.update(&pop);
    let mut telemetry = vec![telemetry_row(0, evaluations, &archive, reference)];

    let sigma = levy_sigma(params.tau);
    let mut control = candidate_rng(params.seed, CONTROL_STREAM >> 32, 1);
    let mut beta_chaos: f64 = control.random_range(1e-6..1.0);
    let mut iteration = 0;

    while evaluations < opts.budget {
        iteration += 1;
        beta_chaos = chaos_beta_step(beta_chaos);
        if beta_chaos == 0.0 {
            beta_chaos = control.random_range(1e-6..1.0);
        }
        let alpha = alpha_at(params.alpha0, params.theta, iteration - 1);
        let batch = (opts.budget - evaluations).min(n);

        let snapshot = &pop;
        let movers: Vec<usize> = (0..batch).collect();
        let moved: Vec<Vec<f64>> = opts.execution.map(&movers, |_, &i| {
            let mut rng = candidate_rng(params.seed, iteration as u64, i as u64);
            let mut x = snapshot[i].unit.clone();
            let mut attracted = false;
            for (j, other) in snapshot.iter().enumerate() {
                if j == i || !better(other, &snapshot[i]) {
                    continue;
                }
                attracted = true;
                let beta = attractiveness(beta_chaos, params.beta0, params.gamma, distance(&x, &other.unit));
                let r = random_term(&mut rng, dims, params.tau, sigma);
                x = move_firefly(&x, &other.unit, beta, alpha, &r);
                clamp_unit(&mut x);
            }
            if !attracted {
                let r = random_term(&mut rng, dims, params.tau, sigma);
                x = move_firefly(&x, &x.clone(), 0.0, alpha, &r);
                clamp_unit(&mut x);
            }
            x
        });

        let offspring = evaluate_batch(problem, moved, opts.execution)?;
        evaluations += offspring.len();
        archive.update(&offspring);
        let mut pool = std::mem::take(&mut pop);
        pool.extend(offspring);
        pop = environmental_selection(pool, n);
        telemetry.push(telemetry_row(iteration, evaluations, &archive, reference));
    }

    Ok(RunOutcome {
        archive,
        telemetry,
        evaluations,
        reference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Nsga2Params {
    pub population: usize,
    pub crossover_probability: f64,
    pub eta_c: f64,
    pub eta_m: f64,
    /// Per-variable mutation probability; `None` means `1 / dims`.
    pub mutation_rate: Option<f64>,
    pub seed: u64,
}

impl Default for Nsga2Params {
    fn default() -> Self {
        Self {
            population: 40,
            crossover_probability: 0.9,
            eta_c: 15.0,
            eta_m: 20.0,
            mutation_rate: None,
            seed: 1,
        }
    }
}

impl Nsga2Params {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |name, value| Err(OptimizerError::InvalidParameter { name, value });
        if self.population == 0 {
            return bad("population", 0.0);
        }
        if !(0.0..=1.0).contains(&self.crossover_probability) {
            return bad("crossover_probability", self.crossover_probability);
        }
        if !(self.eta_c >= 0.0 && self.eta_c.is_finite()) {
            return bad("eta_c", self.eta_c);
        }
        if !(self.eta_m >= 0.0 && self.eta_m.is_finite()) {
            return bad("eta_m", self.eta_m);
        }
        if let Some(r) = self.mutation_rate {
            if !(0.0..=1.0).contains(&r) {
                return bad("mutation_rate", r);
            }
        }
        Ok(())
    }
}

fn tournament<'a, R: Rng + ?Sized>(rng: &mut R, pop: &'a [Solution]) -> &'a Solution {
    let a = &pop[rng.random_range(0..pop.len())];
    let b = &pop[rng.random_range(0..pop.len())];
    if better(b, a) {
        b
    } else {
        a
    }
}

/// Simulated binary crossover on unit-cube coordinates.
fn sbx<R: Rng + ?Sized>(rng: &mut R, p1: &[f64], p2: &[f64], eta: f64) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    for d in 0..p1.len() {
        if rng.random::<f64>() > 0.5 || (p1[d] - p2[d]).abs() < 1e-14 {
            continue;
        }
        let (y1, y2) = if p1[d] < p2[d] { (p1[d], p2[d]) } else { (p2[d], p1[d]) };
        let u: f64 = rng.random();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let gap = y2 - y1;
        let bq1 = spread(1.0 + 2.0 * y1 / gap);
        let bq2 = spread(1.0 + 2.0 * (1.0 - y2) / gap);
        let mut a = (0.5 * ((y1 + y2) - bq1 * gap)).clamp(0.0, 1.0);
        let mut b = (0.5 * ((y1 + y2) + bq2 * gap)).clamp(0.0, 1.0);
        if rng.random::<f64>() < 0.5 {
            std::mem::swap(&mut a, &mut b);
        }
        c1[d] = a;
        c2[d] = b;
    }
    (c1, c2)
}

/// Polynomial mutation on unit-cube coordinates.
fn polynomial_mutation<R: Rng + ?Sized>(rng: &mut R, x: &mut [f64], eta: f64, rate: f64) {
    for v in x.iter_mut() {
        if rng.random::<f64>() >= rate {
            continue;
        }
        let y = *v;
        let (d1, d2) = (y, 1.0 - y);
        let u: f64 = rng.random();
        let pow = 1.0 / (eta + 1.0);
        let dq = if u < 0.5 {
            let val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
            val.powf(pow) - 1.0
        } else {
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - val.powf(pow)
        };
        *v = (y + dq).clamp(0.0, 1.0);
    }
}

pub fn nsga2_run<P: Problem + ?Sized>(
    problem: &P,
    params: &Nsga2Params,
    opts: &RunOptions,
) -> Result<RunOutcome, OptimizerError> {
    params.validate()?;
    let n = params.population;
    if opts.budget < n {
        return Err(OptimizerError::BudgetTooSmall {
            budget: opts.budget,
            population: n,
        });
    }
    let dims = problem.space().dims();
    let rate = params.mutation_rate.unwrap_or(1.0 / dims as f64);

    let mut init_rng = candidate_rng(params.seed, 0, 0);
    let mut units: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dims).map(|_| init_rng.random::<f64>()).collect())
        .collect();
    for (slot, u) in units.iter_mut().zip(injected_units(problem, opts)?) {
        *slot = u;
    }
    let mut pop = evaluate_batch(problem, units, opts.execution)?;
    let mut evaluations = n;
    rank_and_crowd(&mut pop);

    let reference = initial_reference(problem, &pop);
    let mut archive = ParetoArchive::with_reference(opts.archive_capacity, reference);
    archive.update(&pop);
    let mut telemetry = vec![telemetry_row(0, evaluations, &archive, reference)];
    let mut generation = 0;

    while evaluations < opts.budget {
        generation += 1;
        let batch = (opts.budget - evaluations).min(n);
        let mut rng = candidate_rng(params.seed, generation as u64, 0);
        let mut children = Vec::with_capacity(batch + 1);
        while children.len() < batch {
            let p1 = tournament(&mut rng, &pop);
            let p2 = tournament(&mut rng, &pop);
            let (mut c1, mut c2) = if rng.random::<f64>() < params.crossover_probability {
                sbx(&mut rng, &p1.unit, &p2.unit, params.eta_c)
            } else {
                (p1.unit.clone(), p2.unit.clone())
            };
            polynomial_mutation(&mut rng, &mut c1, params.eta_m, rate);
            polynomial_mutation(&mut rng, &mut c2, params.eta_m, rate);
            children.push(c1);
            children.push(c2);
        }
        children.truncate(batch);

        let offspring = evaluate_batch(problem, children, opts.execution)?;
        evaluations += offspring.len();
        archive.update(&offspring);
        let mut pool = std::mem::take(&mut pop);
        pool.extend(offspring);
        pop = environmental_selection(pool, n);
        telemetry.push(telemetry_row(generation, evaluations, &archive, reference));
    }

    Ok(RunOutcome {
        archive,
        telemetry,
        evaluations,
        reference,
    })
}
