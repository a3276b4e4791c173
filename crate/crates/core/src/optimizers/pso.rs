use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{require, Algorithm, Counted, Problem, RunRecord, Tracker};
use crate::error::Result;
use crate::rng::stream;

/// Global-best PSO settings. `v_max` defaults to half the domain width per
/// variable when absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoParams {
    pub iterations: usize,
    pub population_size: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub v_max: Option<Vec<f64>>,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            iterations: 101,
            population_size: 50,
            inertia: 1.0,
            cognitive: 1.49445,
            social: 1.49445,
            v_max: None,
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        require(self.iterations >= 1, || "iterations must be at least 1".into())?;
        require(self.population_size >= 1, || {
            "population size must be at least 1".into()
        })?;
        require(
            self.inertia.is_finite() && self.cognitive.is_finite() && self.social.is_finite(),
            || "PSO coefficients must be finite".into(),
        )?;
        if let Some(v) = &self.v_max {
            require(v.iter().all(|x| *x > 0.0 && x.is_finite()), || {
                "v_max must be positive".into()
            })?;
        }
        Ok(())
    }
}

/// Swarm starts at uniform random positions with zero velocity.
pub fn run_pso(problem: &Problem, params: &PsoParams, seed: u64) -> Result<RunRecord> {
    params.validate()?;
    let mut rng = stream(seed);
    let positions = (0..params.population_size)
        .map(|_| problem.domain.sample(&mut rng))
        .collect::<Vec<_>>();
    let velocities = vec![vec![0.0; problem.domain.n_vars()]; params.population_size];
    swarm(problem, params, seed, rng, positions, velocities)
}

/// Runs from an explicit initial swarm.
pub fn run_pso_from(
    problem: &Problem,
    params: &PsoParams,
    seed: u64,
    positions: Vec<Vec<f64>>,
    velocities: Vec<Vec<f64>>,
) -> Result<RunRecord> {
    params.validate()?;
    let dim = problem.domain.n_vars();
    require(
        positions.len() == params.population_size && velocities.len() == params.population_size,
        || "initial swarm size must equal population size".into(),
    )?;
    require(positions.iter().chain(&velocities).all(|v| v.len() == dim), || {
        format!("initial swarm vectors must have {dim} components")
    })?;
    require(positions.iter().all(|p| problem.domain.contains(p)), || {
        "initial positions must lie in the domain".into()
    })?;
    swarm(problem, params, seed, stream(seed), positions, velocities)
}

fn swarm(
    problem: &Problem,
    params: &PsoParams,
    seed: u64,
    mut rng: crate::rng::Stream,
    mut x: Vec<Vec<f64>>,
    mut v: Vec<Vec<f64>>,
) -> Result<RunRecord> {
    let domain = &problem.domain;
    let dim = domain.n_vars();
    let v_max = params
        .v_max
        .clone()
        .unwrap_or_else(|| (0..dim).map(|d| domain.width(d) / 2.0).collect());
    require(v_max.len() == dim, || format!("v_max must have {dim} components"))?;
    let counted = Counted::new(problem);
    let mut tracker = Tracker::new(params.iterations);

    let mut pbest = x.clone();
    let mut pbest_val = vec![f64::INFINITY; x.len()];
    let mut gbest = x[0].clone();
    let mut gbest_val = f64::INFINITY;

    for t in 0..params.iterations {
        let values: Vec<f64> = x.iter().map(|p| counted.eval(p)).collect();
        for (i, &val) in values.iter().enumerate() {
            if val < pbest_val[i] {
                pbest_val[i] = val;
                pbest[i].clone_from(&x[i]);
            }
            if val < gbest_val {
                gbest_val = val;
                gbest.clone_from(&x[i]);
            }
        }
        tracker.record(&x, &values);
        if t + 1 == params.iterations {
            break;
        }
        for i in 0..x.len() {
            for d in 0..dim {
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                let vel = params.inertia * v[i][d]
                    + params.cognitive * r1 * (pbest[i][d] - x[i][d])
                    + params.social * r2 * (gbest[d] - x[i][d]);
                v[i][d] = vel.clamp(-v_max[d], v_max[d]);
                x[i][d] += v[i][d];
            }
            domain.clamp(&mut x[i]);
        }
    }

    Ok(tracker.finish(Algorithm::Pso, seed, x, counted.calls()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{make_problem, TestFunctionId};

    #[test]
    fn swarm_at_optimum_stays_there() {
        let p = make_problem(TestFunctionId::Beale);
        let params = PsoParams {
            iterations: 15,
            population_size: 5,
            ..Default::default()
        };
        let r = run_pso_from(&p, &params, 1, vec![vec![3.0, 0.5]; 5], vec![vec![0.0, 0.0]; 5]).unwrap();
        assert!(r.best_so_far_curve.iter().all(|&v| v == 0.0));
        assert!(r.final_population.iter().all(|x| x == &vec![3.0, 0.5]));
    }

    #[test]
    fn pso_well_formed() {
        let p = make_problem(TestFunctionId::Eggholder);
        let params = PsoParams {
            iterations: 40,
            ..Default::default()
        };
        let r = run_pso(&p, &params, 8).unwrap();
        r.check(40, &p.domain).unwrap();
        assert_eq!(r.evaluation_count, 40 * 50);
        assert_eq!(r, run_pso(&p, &params, 8).unwrap());
    }

    #[test]
    fn bad_initial_swarm_rejected() {
        let p = make_problem(TestFunctionId::Sphere);
        let params = PsoParams {
            population_size: 2,
            ..Default::default()
        };
        assert!(run_pso_from(&p, &params, 0, vec![vec![0.0, 0.0]], vec![vec![0.0, 0.0]]).is_err());
        assert!(run_pso_from(&p, &params, 0, vec![vec![9.0, 0.0]; 2], vec![vec![0.0, 0.0]; 2]).is_err());
    }
}
