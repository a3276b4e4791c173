use serde::{Deserialize, Serialize};

use super::{require, Algorithm, Counted, Problem, RunRecord, Tracker};
use crate::encoding::{bits_per_var, decode, random_chromosome, Chromosome};
use crate::error::Result;
use crate::operators::{crossover_best_scored, crossover_single_point, mutate_half, mutate_simple, select_parent_pair};
use crate::rng::stream;

/// Offset added to shifted roulette weights so the worst individual keeps a
/// non-zero chance.
pub const WEIGHT_EPSILON: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaParams {
    pub iterations: usize,
    pub population_size: usize,
    pub gene_length: usize,
    /// Base per-gene rate for the improved GA (doubled on the back half);
    /// per-child rate for the simple GA.
    pub mutation_rate: f64,
    #[serde(default)]
    pub elitism: bool,
}

impl GaParams {
    pub fn iga() -> Self {
        Self {
            iterations: 101,
            population_size: 50,
            gene_length: 30,
            mutation_rate: 0.025,
            elitism: false,
        }
    }

    pub fn sga() -> Self {
        Self {
            mutation_rate: 0.2,
            ..Self::iga()
        }
    }

    pub fn validate(&self) -> Result<()> {
        require(self.iterations >= 1, || "iterations must be at least 1".into())?;
        require(self.population_size >= 2, || {
            "population size must be at least 2".into()
        })?;
        require(self.gene_length >= 1, || "gene length must be at least 1".into())?;
        require((0.0..=1.0).contains(&self.mutation_rate), || {
            format!("mutation rate {} outside [0, 1]", self.mutation_rate)
        })
    }
}

/// Roulette weights for minimisation: `w_i = f_worst - f_i + eps`.
pub(crate) fn shifted_weights(values: &[f64]) -> Vec<f64> {
    let worst = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|&v| if v.is_finite() { worst - v + WEIGHT_EPSILON } else { 0.0 })
        .collect()
}

#[derive(Clone, Copy)]
enum Variant {
    Improved,
    Simple,
}

pub fn run_iga(problem: &Problem, params: &GaParams, seed: u64) -> Result<RunRecord> {
    require(params.mutation_rate <= 0.5, || {
        format!("base mutation rate {} exceeds 0.5", params.mutation_rate)
    })?;
    run_ga(problem, params, seed, Variant::Improved)
}

pub fn run_sga(problem: &Problem, params: &GaParams, seed: u64) -> Result<RunRecord> {
    run_ga(problem, params, seed, Variant::Simple)
}

fn run_ga(problem: &Problem, params: &GaParams, seed: u64, variant: Variant) -> Result<RunRecord> {
    params.validate()?;
    bits_per_var(params.gene_length, &problem.domain)?;
    let domain = &problem.domain;
    let counted = Counted::new(problem);
    let decode_ok = |c: &Chromosome| decode(c, domain).expect("gene length checked against the domain");
    let fitness = |c: &Chromosome| -counted.eval(&decode_ok(c));
    let mut rng = stream(seed);
    let n = params.population_size;

    let mut population = (0..n)
        .map(|_| random_chromosome(params.gene_length, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let mut positions: Vec<Vec<f64>> = population.iter().map(decode_ok).collect();
    let mut values: Vec<f64> = positions.iter().map(|x| counted.eval(x)).collect();
    let mut tracker = Tracker::new(params.iterations);
    tracker.record(&positions, &values);

    for _ in 1..params.iterations {
        let weights = shifted_weights(&values);
        let elite = params.elitism.then(|| {
            let best = (0..n)
                .min_by(|&a, &b| values[a].total_cmp(&values[b]))
                .expect("population is non-empty");
            population[best].clone()
        });
        let mut next = Vec::with_capacity(n);
        for _ in 0..n {
            let (f, m) = select_parent_pair(&weights, &mut rng)?;
            let child = match variant {
                Variant::Improved => {
                    let child = crossover_best_scored(&population[f], &population[m], &fitness)?.child;
                    mutate_half(&child, params.mutation_rate, &mut rng)?
                }
                Variant::Simple => {
                    let child = crossover_single_point(&population[f], &population[m], &mut rng)?;
                    mutate_simple(&child, params.mutation_rate, &mut rng)?
                }
            };
            next.push(child);
        }
        if let Some(elite) = elite {
            next[0] = elite;
        }
        population = next;
        positions = population.iter().map(decode_ok).collect();
        values = positions.iter().map(|x| counted.eval(x)).collect();
        tracker.record(&positions, &values);
    }

    let algorithm = match variant {
        Variant::Improved => Algorithm::Iga,
        Variant::Simple => Algorithm::Sga,
    };
    Ok(tracker.finish(algorithm, seed, positions, counted.calls()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{make_problem, TestFunctionId};

    #[test]
    fn weights_are_shifted_and_positive() {
        let w = shifted_weights(&[3.0, 1.0, 2.0]);
        assert_eq!(w[0], WEIGHT_EPSILON);
        assert!((w[1] - 2.0).abs() < 1e-9);
        assert!(w.iter().all(|&x| x > 0.0));
        assert!(shifted_weights(&[4.0, 4.0]).iter().all(|&x| x == WEIGHT_EPSILON));
    }

    #[test]
    fn iga_is_deterministic_and_well_formed() {
        let p = make_problem(TestFunctionId::Ackley);
        let params = GaParams {
            iterations: 12,
            ..GaParams::iga()
        };
        let a = run_iga(&p, &params, 99).unwrap();
        let b = run_iga(&p, &params, 99).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        a.check(12, &p.domain).unwrap();
        assert_eq!(a.final_population.len(), 50);
        // Generation 0 plus 11 breeding rounds of (50 * 30 split scores + 50 re-evaluations).
        assert_eq!(a.evaluation_count, 50 + 11 * (50 * 30 + 50));
    }

    #[test]
    fn sga_evaluation_count() {
        let p = make_problem(TestFunctionId::Beale);
        let params = GaParams {
            iterations: 20,
            ..GaParams::sga()
        };
        let r = run_sga(&p, &params, 3).unwrap();
        r.check(20, &p.domain).unwrap();
        assert_eq!(r.evaluation_count, 50 * 20);
        assert_eq!(r, run_sga(&p, &params, 3).unwrap());
    }

    #[test]
    fn elitism_keeps_generation_best_monotone() {
        let p = make_problem(TestFunctionId::Sphere);
        let params = GaParams {
            iterations: 30,
            elitism: true,
            ..GaParams::sga()
        };
        let r = run_sga(&p, &params, 5).unwrap();
        assert!(r.best_of_generation.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn invalid_params_rejected() {
        let p = make_problem(TestFunctionId::Sphere);
        let bad = GaParams {
            population_size: 1,
            ..GaParams::iga()
        };
        assert!(run_iga(&p, &bad, 0).is_err());
        let odd = GaParams {
            gene_length: 31,
            ..GaParams::iga()
        };
        assert!(run_iga(&p, &odd, 0).is_err());
        let high = GaParams {
            mutation_rate: 0.6,
            ..GaParams::iga()
        };
        assert!(run_iga(&p, &high, 0).is_err());
        assert!(run_sga(&p, &high, 0).is_ok());
    }
}
