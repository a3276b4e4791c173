//! Optimizer drivers behind one interface.
//!
//! Every driver minimises [`Problem::objective`] over its domain and returns a
//! [`RunRecord`]. Generation 0 is the evaluation of the initial population, so
//! a run with `iterations = 101` produces a 101-entry curve. Best-so-far is
//! tracked outside the population; none of the drivers are elitist by default.

mod ga;
mod gwo;
mod pso;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::encoding::SearchDomain;
use crate::error::{Error, Result};

pub use ga::{run_iga, run_sga, GaParams};
pub use gwo::{gwo_a, run_gwo, run_gwo_traced, GwoParams};
pub use pso::{run_pso, run_pso_from, PsoParams};

pub type Objective = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Objective to minimise plus its search box and known optimum.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub objective: Objective,
    pub domain: SearchDomain,
    pub global_minimum_value: f64,
    pub global_minimizer: Vec<f64>,
}

impl Problem {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("global_minimum_value", &self.global_minimum_value)
            .field("global_minimizer", &self.global_minimizer)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Algorithm {
    Iga,
    Sga,
    Pso,
    Gwo,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Iga, Algorithm::Sga, Algorithm::Pso, Algorithm::Gwo];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Iga => "IGA",
            Algorithm::Sga => "SGA",
            Algorithm::Pso => "PSO",
            Algorithm::Gwo => "GWO",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

/// Parameter sets for all four drivers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmParams {
    pub iga: GaParams,
    pub sga: GaParams,
    pub pso: PsoParams,
    pub gwo: GwoParams,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        Self {
            iga: GaParams::iga(),
            sga: GaParams::sga(),
            pso: PsoParams::default(),
            gwo: GwoParams::default(),
        }
    }
}

impl AlgorithmParams {
    pub fn validate(&self) -> Result<()> {
        self.iga.validate()?;
        self.sga.validate()?;
        self.pso.validate()?;
        self.gwo.validate()
    }
}

pub fn run_algorithm(
    algorithm: Algorithm,
    problem: &Problem,
    params: &AlgorithmParams,
    seed: u64,
) -> Result<RunRecord> {
    match algorithm {
        Algorithm::Iga => run_iga(problem, &params.iga, seed),
        Algorithm::Sga => run_sga(problem, &params.sga, seed),
        Algorithm::Pso => run_pso(problem, &params.pso, seed),
        Algorithm::Gwo => run_gwo(problem, &params.gwo, seed),
    }
}

/// Everything one optimizer run produces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub best_of_generation: Vec<f64>,
    pub best_so_far_curve: Vec<f64>,
    pub final_population: Vec<Vec<f64>>,
    pub final_best_value: f64,
    pub final_best_position: Vec<f64>,
    pub evaluation_count: u64,
}

impl RunRecord {
    /// Checks the structural invariants every driver promises.
    pub fn check(&self, iterations: usize, domain: &SearchDomain) -> Result<()> {
        let fail = |msg: String| {
            Err(Error::Invariant(format!(
                "{} seed {}: {msg}",
                self.algorithm, self.seed
            )))
        };
        if self.best_so_far_curve.len() != iterations || self.best_of_generation.len() != iterations {
            return fail(format!("curve length {} != {iterations}", self.best_so_far_curve.len()));
        }
        if self.best_so_far_curve.windows(2).any(|w| w[1] > w[0]) {
            return fail("best-so-far curve increases".into());
        }
        if self.best_so_far_curve.last() != Some(&self.final_best_value) {
            return fail("final best differs from the last curve entry".into());
        }
        if !domain.contains(&self.final_best_position) || !self.final_population.iter().all(|p| domain.contains(p)) {
            return fail("position outside the search domain".into());
        }
        Ok(())
    }
}

/// Objective wrapper that counts calls.
pub(crate) struct Counted<'a> {
    problem: &'a Problem,
    calls: AtomicU64,
}

impl<'a> Counted<'a> {
    pub(crate) fn new(problem: &'a Problem) -> Self {
        Self {
            problem,
            calls: AtomicU64::new(0),
        }
    }

    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.problem.evaluate(x)
    }

    pub(crate) fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

/// Running best-so-far over evaluated populations.
pub(crate) struct Tracker {
    best_value: f64,
    best_position: Vec<f64>,
    best_of_generation: Vec<f64>,
    best_so_far: Vec<f64>,
}

impl Tracker {
    pub(crate) fn new(iterations: usize) -> Self {
        Self {
            best_value: f64::INFINITY,
            best_position: Vec::new(),
            best_of_generation: Vec::with_capacity(iterations),
            best_so_far: Vec::with_capacity(iterations),
        }
    }

    /// Records one generation. Ties keep the earlier best; NaN never wins.
    pub(crate) fn record(&mut self, positions: &[Vec<f64>], values: &[f64]) {
        let mut gen_best = f64::INFINITY;
        let mut gen_idx = None;
        for (i, &v) in values.iter().enumerate() {
            if v < gen_best {
                gen_best = v;
                gen_idx = Some(i);
            }
        }
        if let Some(i) = gen_idx {
            if gen_best < self.best_value || self.best_position.is_empty() {
                self.best_value = gen_best;
                self.best_position = positions[i].clone();
            }
        } else if self.best_position.is_empty() {
            self.best_position = positions[0].clone();
        }
        self.best_of_generation.push(gen_best);
        self.best_so_far.push(self.best_value);
    }

    pub(crate) fn finish(
        self,
        algorithm: Algorithm,
        seed: u64,
        final_population: Vec<Vec<f64>>,
        evaluation_count: u64,
    ) -> RunRecord {
        RunRecord {
            algorithm,
            seed,
            best_of_generation: self.best_of_generation,
            best_so_far_curve: self.best_so_far,
            final_population,
            final_best_value: self.best_value,
            final_best_position: self.best_position,
            evaluation_count,
        }
    }
}

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidArgument(msg()))
    }
}
