//! Evaluation statistics: summaries, success rate, pooled two-sample t-test
//! and mean distance to the optimum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n - 1 denominator); 0 when n = 1.
    pub std: f64,
}

pub fn summarize(sample: &[f64]) -> Result<SummaryStats> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("cannot summarize an empty sample".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let (mean, var) = mean_var(sample);
    Ok(SummaryStats {
        n,
        min: sorted[0],
        max: sorted[n - 1],
        mean,
        median,
        std: var.sqrt(),
    })
}

/// Mean and unbiased variance (0 for a single observation).
fn mean_var(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    if sample.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = sample.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, ss / (n - 1.0))
}

/// Default precision for [`success_rate`].
pub const SUCCESS_PRECISION: f64 = 0.15;

/// Percentage of finals with `final - global_min <= precision`.
pub fn success_rate(finals: &[f64], global_min: f64, precision: f64) -> Result<f64> {
    if finals.is_empty() {
        return Err(Error::InvalidArgument("success rate of an empty sample".into()));
    }
    if !(precision > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "precision {precision} must be positive"
        )));
    }
    let hits = finals.iter().filter(|&&f| f - global_min <= precision).count();
    Ok(100.0 * hits as f64 / finals.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: f64,
}

/// Pooled-variance two-sample t-test with a two-tailed p-value.
pub fn t_test(sample1: &[f64], sample2: &[f64]) -> Result<TTest> {
    let (n1, n2) = (sample1.len(), sample2.len());
    if n1 < 2 || n2 < 2 {
        return Err(Error::InvalidArgument(format!(
            "t-test needs at least two observations per sample (got {n1} and {n2})"
        )));
    }
    let (m1, v1) = mean_var(sample1);
    let (m2, v2) = mean_var(sample2);
    let df = (n1 + n2 - 2) as f64;
    let pooled = ((n1 - 1) as f64 * v1 + (n2 - 1) as f64 * v2) / df;
    let se = (pooled * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    let diff = m1 - m2;
    if se == 0.0 {
        return Ok(if diff == 0.0 {
            TTest { t: 0.0, p: 1.0, df }
        } else {
            TTest {
                t: f64::INFINITY.copysign(diff),
                p: 0.0,
                df,
            }
        });
    }
    let t = diff / se;
    Ok(TTest {
        t,
        p: student_t_two_tailed(t, df),
        df,
    })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t.is_nan() || !(df > 0.0) {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// Regularized incomplete beta `I_x(a, b)` via Lentz's continued fraction.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // The fraction converges quickly for x < (a + 1) / (a + b + 2); otherwise use symmetry.
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const TOL: f64 = 1e-12;
    const MAX_ITER: usize = 10_000;

    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < TOL {
            break;
        }
    }
    h
}

/// Lanczos approximation (g = 7, 9 terms), accurate to ~1e-15 for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Outcome of comparing an algorithm against the reference at `p < 0.05`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Significance {
    /// Significantly lower mean (better, for minimisation).
    Better,
    Same,
    Worse,
}

impl Significance {
    pub const THRESHOLD: f64 = 0.05;

    pub fn classify(test: &TTest, mean: f64, reference_mean: f64) -> Self {
        if test.p < Self::THRESHOLD {
            if mean < reference_mean {
                Significance::Better
            } else {
                Significance::Worse
            }
        } else {
            Significance::Same
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Significance::Better => "+",
            Significance::Same => "=",
            Significance::Worse => "-",
        }
    }
}

/// Mean Euclidean distance from `points` to `optimum`.
pub fn density(points: &[Vec<f64>], optimum: &[f64]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("density of an empty point set".into()));
    }
    let mut total = 0.0;
    for p in points {
        if p.len() != optimum.len() {
            return Err(Error::InvalidArgument(format!(
                "point has {} components, optimum has {}",
                p.len(),
                optimum.len()
            )));
        }
        total += p.iter().zip(optimum).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    }
    Ok(total / points.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    /// Over every final individual of every run.
    pub pooled_density: f64,
    /// Over the best individual of each run.
    pub best_density: f64,
}
