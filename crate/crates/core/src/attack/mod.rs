//! Black-box attack: evolve 784-bit binary images with the improved GA so a
//! classifier assigns high confidence to a chosen label.
//!
//! Only the oracle's confidence vector is used. Each generation costs
//! `population_size * 784` queries for the exhaustive crossover plus
//! `population_size` to score the mutated offspring.

pub mod idx;
pub mod model;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{random_chromosome, Chromosome};
use crate::error::{Error, Result};
use crate::operators::{crossover_best_scored, mutate_half, select_parent_pair, Fitness};
use crate::parallel::{self, Execution};
use crate::rng::stream;

pub use idx::{binarize, Image, IMAGE_PIXELS};
pub use model::{mlp_classify, ClassifierModel};

pub const LABELS: usize = 10;
const SUM_TOLERANCE: f64 = 1e-6;

pub type Confidences = [f64; LABELS];

/// A classifier seen only through its confidence output.
pub trait ClassifierOracle: Sync {
    fn classify(&self, bits: &Chromosome) -> Confidences;

    /// Confidences of `father[..i] ++ mother[i..]` for every `i` in `0..len`.
    fn classify_splits(&self, father: &Chromosome, mother: &Chromosome) -> Vec<Confidences> {
        (0..father.len())
            .map(|i| self.classify(&Chromosome::splice(father, mother, i)))
            .collect()
    }

    /// Whether concurrent `classify` calls are allowed.
    fn reentrant(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    Random,
    Dataset,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackParams {
    pub population_size: usize,
    pub iterations: usize,
    pub target_label: usize,
    pub base_mutation_rate: f64,
    pub init: InitMode,
    /// Binarization threshold for dataset-seeded initialisation.
    pub threshold: u8,
    #[serde(skip)]
    pub execution: Execution,
}

impl AttackParams {
    pub fn new(target_label: usize, iterations: usize) -> Self {
        Self {
            population_size: 100,
            iterations,
            target_label,
            base_mutation_rate: 0.025,
            init: InitMode::Random,
            threshold: idx::DEFAULT_THRESHOLD,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.population_size < 2 {
            return bad("population size must be at least 2".into());
        }
        if self.iterations < 1 {
            return bad("iterations must be at least 1".into());
        }
        if self.target_label >= LABELS {
            return bad(format!("target label {} outside 0..{LABELS}", self.target_label));
        }
        if !(0.0..=0.5).contains(&self.base_mutation_rate) {
            return bad(format!(
                "base mutation rate {} outside [0, 0.5]",
                self.base_mutation_rate
            ));
        }
        Ok(())
    }

    /// Oracle queries a complete run makes.
    pub fn expected_queries(&self) -> u64 {
        let n = self.population_size as u64;
        n + (self.iterations as u64 - 1) * (n * IMAGE_PIXELS as u64 + n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub target_label: usize,
    pub init: InitMode,
    pub seed: u64,
    pub best_of_generation: Vec<f64>,
    /// Best confidence seen so far, per generation.
    pub confidence_curve: Vec<f64>,
    pub final_image: Chromosome,
    pub final_confidence: f64,
    pub final_confidences: Vec<f64>,
    pub oracle_queries: u64,
}

/// Target-label confidence as a fitness; records the first invariant violation.
struct OracleFitness<'a, O: ?Sized> {
    oracle: &'a O,
    target: usize,
    queries: AtomicU64,
    violation: OnceLock<String>,
}

impl<O: ClassifierOracle + ?Sized> OracleFitness<'_, O> {
    fn check(&self, c: &Confidences) -> f64 {
        let sum: f64 = c.iter().sum();
        if !c.iter().all(|p| *p >= 0.0) || !((sum - 1.0).abs() <= SUM_TOLERANCE) {
            let _ = self
                .violation
                .set(format!("confidences {c:?} are not a distribution (sum {sum})"));
            return 0.0;
        }
        c[self.target]
    }

    fn full(&self, bits: &Chromosome) -> Confidences {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.oracle.classify(bits)
    }

    fn fail_fast(&self) -> Result<()> {
        match self.violation.get() {
            Some(msg) => Err(Error::Oracle(msg.clone())),
            None => Ok(()),
        }
    }
}

impl<O: ClassifierOracle + ?Sized> Fitness for OracleFitness<'_, O> {
    fn score(&self, c: &Chromosome) -> f64 {
        let conf = self.full(c);
        self.check(&conf)
    }

    fn split_scores(&self, father: &Chromosome, mother: &Chromosome) -> Vec<f64> {
        let all = self.oracle.classify_splits(father, mother);
        self.queries.fetch_add(all.len() as u64, Ordering::Relaxed);
        all.iter().map(|c| self.check(c)).collect()
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn run_attack<O: ClassifierOracle + ?Sized>(
    oracle: &O,
    params: &AttackParams,
    seed: u64,
    seed_images: Option<&[Image]>,
) -> Result<AttackRecord> {
    params.validate()?;
    let fitness = OracleFitness {
        oracle,
        target: params.target_label,
        queries: AtomicU64::new(0),
        violation: OnceLock::new(),
    };
    let exec = if oracle.reentrant() {
        params.execution
    } else {
        Execution::Sequential
    };
    let mut rng = stream(seed);
    let n = params.population_size;

    let mut population: Vec<Chromosome> = match params.init {
        InitMode::Random => (0..n)
            .map(|_| random_chromosome(IMAGE_PIXELS, &mut rng))
            .collect::<Result<_>>()?,
        InitMode::Dataset => {
            let images = seed_images
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::Config("dataset initialisation needs at least one seed image".into()))?;
            (0..n)
                .map(|_| binarize(images[rng.gen_range(0..images.len())].pixels(), params.threshold))
                .collect::<Result<_>>()?
        }
    };

    let evaluate = |pop: &[Chromosome]| -> Result<Vec<Confidences>> {
        let out = parallel::map(exec, pop, |c| fitness.full(c));
        for c in &out {
            fitness.check(c);
        }
        fitness.fail_fast()?;
        Ok(out)
    };

    let mut confidences = evaluate(&population)?;
    let target = params.target_label;
    let mut scores: Vec<f64> = confidences.iter().map(|c| c[target]).collect();
    let mut best_idx = argmax(&scores);
    let mut best_image = population[best_idx].clone();
    let mut best_conf = confidences[best_idx];
    let mut best_of_generation = vec![scores[best_idx]];
    let mut curve = vec![scores[best_idx]];

    for _ in 1..params.iterations {
        let parents = (0..n)
            .map(|_| select_parent_pair(&scores, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let children = parallel::map(exec, &parents, |&(f, m)| {
            crossover_best_scored(&population[f], &population[m], &fitness).map(|s| s.child)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        fitness.fail_fast()?;
        population = children
            .iter()
            .map(|c| mutate_half(c, params.base_mutation_rate, &mut rng))
            .collect::<Result<_>>()?;
        confidences = evaluate(&population)?;
        scores = confidences.iter().map(|c| c[target]).collect();
        best_idx = argmax(&scores);
        best_of_generation.push(scores[best_idx]);
        if scores[best_idx] > best_conf[target] {
            best_conf = confidences[best_idx];
            best_image = population[best_idx].clone();
        }
        curve.push(best_conf[target]);
    }

    let queries = fitness.queries.load(Ordering::Relaxed);
    Ok(AttackRecord {
        target_label: target,
        init: params.init,
        seed,
        best_of_generation,
        final_confidence: best_conf[target],
        final_confidences: best_conf.to_vec(),
        confidence_curve: curve,
        final_image: best_image,
        oracle_queries: queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Broken;

    impl ClassifierOracle for Broken {
        fn classify(&self, _: &Chromosome) -> Confidences {
            [0.5; LABELS]
        }
    }

    struct Sequential<'a>(&'a ClassifierModel);

    impl ClassifierOracle for Sequential<'_> {
        fn classify(&self, bits: &Chromosome) -> Confidences {
            self.0.classify(bits)
        }
        fn reentrant(&self) -> bool {
            false
        }
    }

    fn planted(seed: u64) -> (ClassifierModel, [Chromosome; LABELS]) {
        let mut rng = stream(seed);
        let patterns: [Chromosome; LABELS] =
            std::array::from_fn(|_| random_chromosome(IMAGE_PIXELS, &mut rng).unwrap());
        (ClassifierModel::planted(&patterns, 0.1).unwrap(), patterns)
    }

    #[test]
    fn broken_oracle_fails_fast() {
        let err = run_attack(&Broken, &AttackParams::new(0, 3), 1, None).unwrap_err();
        assert!(matches!(err, Error::Oracle(_)));
    }

    #[test]
    fn dataset_mode_needs_images() {
        let (m, _) = planted(1);
        let mut p = AttackParams::new(0, 2);
        p.init = InitMode::Dataset;
        assert!(matches!(run_attack(&m, &p, 1, None), Err(Error::Config(_))));
        assert!(matches!(run_attack(&m, &p, 1, Some(&[])), Err(Error::Config(_))));
    }

    #[test]
    fn bad_params_rejected() {
        let (m, _) = planted(1);
        assert!(run_attack(&m, &AttackParams::new(10, 2), 0, None).is_err());
        let mut p = AttackParams::new(0, 2);
        p.population_size = 1;
        assert!(run_attack(&m, &p, 0, None).is_err());
    }

    #[test]
    fn short_run_accounting_and_monotone_curve() {
        let (m, _) = planted(2);
        let mut p = AttackParams::new(3, 6);
        p.population_size = 10;
        let r = run_attack(&m, &p, 5, None).unwrap();
        assert_eq!(r.oracle_queries, p.expected_queries());
        assert_eq!(r.oracle_queries, 10 + 5 * (10 * 784 + 10));
        assert_eq!(r.confidence_curve.len(), 6);
        assert!(r.confidence_curve.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(r.final_confidence, *r.confidence_curve.last().unwrap());
        assert_eq!(m.classify(&r.final_image)[3], r.final_confidence);
    }

    #[test]
    fn execution_modes_and_reentrancy_agree() {
        let (m, _) = planted(3);
        let mut p = AttackParams::new(1, 5);
        p.population_size = 8;
        let par = run_attack(&m, &p, 11, None).unwrap();
        p.execution = Execution::Sequential;
        let seq = run_attack(&m, &p, 11, None).unwrap();
        assert_eq!(par, seq);
        // The default split path (one classify per split) agrees up to rounding.
        let slow = run_attack(&Sequential(&m), &p, 11, None).unwrap();
        assert_eq!(slow.oracle_queries, seq.oracle_queries);
        assert!((slow.final_confidence - seq.final_confidence).abs() < 1e-9);
    }

    #[test]
    fn dataset_seeding_leaves_images_untouched() {
        let (m, patterns) = planted(4);
        let images: Vec<Image> = (0..3)
            .map(|k| Image::new(&patterns[0].genes().iter().map(|&g| g * (200 + k)).collect::<Vec<_>>()).unwrap())
            .collect();
        let before = images.clone();
        let mut p = AttackParams::new(0, 3);
        p.population_size = 6;
        p.init = InitMode::Dataset;
        let r = run_attack(&m, &p, 1, Some(&images)).unwrap();
        assert_eq!(images, before);
        // Every seed binarizes to the planted optimum.
        assert_eq!(r.confidence_curve[0], m.classify(&patterns[0])[0]);
    }
}
