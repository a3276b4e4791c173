use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{require, Algorithm, Counted, Problem, RunRecord, Tracker};
use crate::error::Result;
use crate::rng::stream;

/// Grey wolf optimizer settings. The exploration coefficient `a` decays
/// linearly from 2 at the first generation to 0 at the last ([`gwo_a`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GwoParams {
    pub iterations: usize,
    pub population_size: usize,
}

impl Default for GwoParams {
    fn default() -> Self {
        Self {
            iterations: 101,
            population_size: 50,
        }
    }
}

impl GwoParams {
    pub fn validate(&self) -> Result<()> {
        require(self.iterations >= 1, || "iterations must be at least 1".into())?;
        require(self.population_size >= 3, || "GWO needs at least 3 wolves".into())
    }
}

/// `a` at generation `t` of `iterations`: `2 * (1 - t / (iterations - 1))`.
pub fn gwo_a(t: usize, iterations: usize) -> f64 {
    if iterations <= 1 {
        return 0.0;
    }
    2.0 * (1.0 - t as f64 / (iterations - 1) as f64)
}

struct Leader {
    score: f64,
    position: Vec<f64>,
}

pub fn run_gwo(problem: &Problem, params: &GwoParams, seed: u64) -> Result<RunRecord> {
    run_gwo_traced(problem, params, seed).map(|(r, _)| r)
}

/// Like [`run_gwo`], also returning the mean distance from the pack to the
/// alpha wolf at each generation.
pub fn run_gwo_traced(problem: &Problem, params: &GwoParams, seed: u64) -> Result<(RunRecord, Vec<f64>)> {
    params.validate()?;
    let domain = &problem.domain;
    let dim = domain.n_vars();
    let mut rng = stream(seed);
    let counted = Counted::new(problem);
    let mut tracker = Tracker::new(params.iterations);
    let mut x: Vec<Vec<f64>> = (0..params.population_size).map(|_| domain.sample(&mut rng)).collect();

    let empty = || Leader {
        score: f64::INFINITY,
        position: vec![0.0; dim],
    };
    let (mut alpha, mut beta, mut delta) = (empty(), empty(), empty());
    let mut spread = Vec::with_capacity(params.iterations);

    for t in 0..params.iterations {
        let values: Vec<f64> = x.iter().map(|p| counted.eval(p)).collect();
        for (p, &score) in x.iter().zip(&values) {
            if score < alpha.score {
                delta = std::mem::replace(
                    &mut beta,
                    std::mem::replace(
                        &mut alpha,
                        Leader {
                            score,
                            position: p.clone(),
                        },
                    ),
                );
            } else if score < beta.score {
                delta = std::mem::replace(
                    &mut beta,
                    Leader {
                        score,
                        position: p.clone(),
                    },
                );
            } else if score < delta.score {
                delta = Leader {
                    score,
                    position: p.clone(),
                };
            }
        }
        tracker.record(&x, &values);
        spread.push(x.iter().map(|p| distance(p, &alpha.position)).sum::<f64>() / x.len() as f64);
        if t + 1 == params.iterations {
            break;
        }

        let a = gwo_a(t, params.iterations);
        for wolf in x.iter_mut() {
            #[allow(clippy::needless_range_loop)]
            for d in 0..dim {
                let mut sum = 0.0;
                for leader in [&alpha, &beta, &delta] {
                    let big_a = 2.0 * a * rng.gen::<f64>() - a;
                    let big_c = 2.0 * rng.gen::<f64>();
                    let dist = (big_c * leader.position[d] - wolf[d]).abs();
                    sum += leader.position[d] - big_a * dist;
                }
                wolf[d] = sum / 3.0;
            }
            domain.clamp(wolf);
        }
    }

    Ok((tracker.finish(Algorithm::Gwo, seed, x, counted.calls()), spread))
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
