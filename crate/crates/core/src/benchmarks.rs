//! The four two-variable test functions and their known optima.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::encoding::SearchDomain;
use crate::error::Error;
use crate::optimizers::Problem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunctionId {
    Sphere,
    Ackley,
    Beale,
    Eggholder,
}

impl TestFunctionId {
    pub const ALL: [TestFunctionId; 4] = [
        TestFunctionId::Sphere,
        TestFunctionId::Ackley,
        TestFunctionId::Beale,
        TestFunctionId::Eggholder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestFunctionId::Sphere => "sphere",
            TestFunctionId::Ackley => "ackley",
            TestFunctionId::Beale => "beale",
            TestFunctionId::Eggholder => "eggholder",
        }
    }

    /// Symmetric search bound `b` such that the domain is `[-b, b]^2`.
    pub fn bound(self) -> f64 {
        match self {
            TestFunctionId::Sphere | TestFunctionId::Ackley => 5.0,
            TestFunctionId::Beale => 4.5,
            TestFunctionId::Eggholder => 512.0,
        }
    }

    pub fn global_minimizer(self) -> [f64; 2] {
        match self {
            TestFunctionId::Sphere | TestFunctionId::Ackley => [0.0, 0.0],
            TestFunctionId::Beale => [3.0, 0.5],
            TestFunctionId::Eggholder => [512.0, 404.2319],
        }
    }

    pub fn global_minimum(self) -> f64 {
        match self {
            TestFunctionId::Eggholder => -959.6407,
            _ => 0.0,
        }
    }
}

impl fmt::Display for TestFunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        TestFunctionId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown test function {s:?}")))
    }
}

pub fn sphere(x: f64, y: f64) -> f64 {
    x * x + y * y
}

pub fn ackley(x: f64, y: f64) -> f64 {
    -20.0 * (-0.2 * (0.5 * (x * x + y * y)).sqrt()).exp() - (0.5 * ((2.0 * PI * x).cos() + (2.0 * PI * y).cos())).exp()
        + E
        + 20.0
}

pub fn beale(x: f64, y: f64) -> f64 {
    (1.5 - x + x * y).powi(2) + (2.25 - x + x * y * y).powi(2) + (2.625 - x + x * y * y * y).powi(2)
}

pub fn eggholder(x: f64, y: f64) -> f64 {
    -(y + 47.0) * (x / 2.0 + (y + 47.0)).abs().sqrt().sin() - x * (x - (y + 47.0)).abs().sqrt().sin()
}

pub fn eval_test_function(id: TestFunctionId, x: f64, y: f64) -> f64 {
    match id {
        TestFunctionId::Sphere => sphere(x, y),
        TestFunctionId::Ackley => ackley(x, y),
        TestFunctionId::Beale => beale(x, y),
        TestFunctionId::Eggholder => eggholder(x, y),
    }
}

pub fn make_problem(id: TestFunctionId) -> Problem {
    let b = id.bound();
    Problem {
        name: id.name().to_string(),
        objective: Arc::new(move |p: &[f64]| eval_test_function(id, p[0], p[1])),
        domain: SearchDomain::uniform(2, -b, b).expect("static bounds are valid"),
        global_minimum_value: id.global_minimum(),
        global_minimizer: id.global_minimizer().to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_optima() {
        assert_eq!(sphere(0.0, 0.0), 0.0);
        assert!(ackley(0.0, 0.0).abs() < 1e-12);
        assert!(beale(3.0, 0.5).abs() < 1e-12);
        assert!((eggholder(512.0, 404.2319) + 959.6407).abs() < 1e-3);
    }

    #[test]
    fn nan_propagates() {
        for id in TestFunctionId::ALL {
            assert!(eval_test_function(id, f64::NAN, 0.0).is_nan());
        }
    }

    #[test]
    fn problems_are_self_consistent() {
        for id in TestFunctionId::ALL {
            let p = make_problem(id);
            assert!(
                (p.evaluate(&p.global_minimizer) - p.global_minimum_value).abs() < 1e-4,
                "{id}"
            );
            assert_eq!(p.domain.n_vars(), 2);
        }
        let s = make_problem(TestFunctionId::Sphere);
        assert_eq!(s.domain.lower(), &[-5.0, -5.0]);
        assert_eq!(s.domain.upper(), &[5.0, 5.0]);
        let e = make_problem(TestFunctionId::Eggholder);
        assert_eq!(e.domain.lower(), &[-512.0, -512.0]);
        assert_eq!(e.global_minimum_value, -959.6407);
        assert_eq!(e.global_minimizer, vec![512.0, 404.2319]);
    }

    #[test]
    fn names_round_trip() {
        for id in TestFunctionId::ALL {
            assert_eq!(id.name().parse::<TestFunctionId>().unwrap(), id);
        }
        assert!("rastrigin".parse::<TestFunctionId>().is_err());
    }

    fn grid(bound: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
        let step = 2.0 * bound / (n - 1) as f64;
        (0..n).flat_map(move |i| (0..n).map(move |j| (-bound + i as f64 * step, -bound + j as f64 * step)))
    }

    #[test]
    fn sphere_and_beale_non_negative() {
        for (x, y) in grid(5.0, 81) {
            assert!(sphere(x, y) >= 0.0);
            assert_eq!(sphere(x, y), sphere(-x, -y));
            assert!(beale(x, y) >= 0.0);
        }
    }

    #[test]
    fn ackley_zero_only_at_origin() {
        for (x, y) in grid(5.0, 101) {
            let v = ackley(x, y);
            if x == 0.0 && y == 0.0 {
                assert!(v.abs() < 1e-12);
            } else {
                assert!(v > 1e-3, "ackley({x}, {y}) = {v}");
            }
        }
    }

    #[test]
    fn eggholder_grid_never_beats_known_optimum() {
        let min = grid(512.0, 1025)
            .map(|(x, y)| eggholder(x, y))
            .fold(f64::INFINITY, f64::min);
        assert!(min >= -959.6407 - 1e-3, "{min}");
    }
}
