//! Genetic operators.
//!
//! The improved pair is [`crossover_best`] (exhaustive split search scored by
//! the fitness function) and [`mutate_half`] (per-gene flips, doubled rate on
//! the back half). The simple-GA pair is [`crossover_single_point`] and
//! [`mutate_simple`]. Selection is fitness-proportional ([`roulette_select`]).

use rand::Rng;

use crate::encoding::Chromosome;
use crate::error::{Error, Result};

/// Maximised scalar score of a chromosome.
///
/// Implementations must be deterministic and total over chromosomes of the
/// configured length. `split_scores` lets an implementation score every
/// crossover candidate of a parent pair at once (e.g. incrementally); it must
/// return one score per split index `0..len`, in order.
pub trait Fitness: Sync {
    fn score(&self, c: &Chromosome) -> f64;

    fn split_scores(&self, father: &Chromosome, mother: &Chromosome) -> Vec<f64> {
        (0..father.len())
            .map(|i| self.score(&Chromosome::splice(father, mother, i)))
            .collect()
    }
}

impl<F> Fitness for F
where
    F: Fn(&Chromosome) -> f64 + Sync,
{
    fn score(&self, c: &Chromosome) -> f64 {
        self(c)
    }
}

/// Index `i` with probability `weights[i] / sum(weights)`.
pub fn roulette_select<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    if weights.iter().any(|w| !(*w >= 0.0) || w.is_infinite()) {
        return Err(Error::InvalidArgument(
            "roulette weights must be finite and non-negative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateSelection);
    }
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if target < acc {
                return Ok(i);
            }
        }
    }
    // `target` rounded up to `total`.
    Ok(last_positive)
}

/// Roulette over `weights`, falling back to a uniform draw when every weight is zero.
pub(crate) fn roulette_or_uniform<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    match roulette_select(weights, rng) {
        Err(Error::DegenerateSelection) => Ok(rng.gen_range(0..weights.len())),
        other => other,
    }
}

/// Father and mother indices by roulette. The mother is re-drawn until her
/// index differs from the father's, at most `weights.len()` draws in total,
/// after which a duplicate is accepted.
pub fn select_parent_pair<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<(usize, usize)> {
    let father = roulette_or_uniform(weights, rng)?;
    let mut mother = roulette_or_uniform(weights, rng)?;
    let mut draws = 1;
    while mother == father && draws < weights.len() {
        mother = roulette_or_uniform(weights, rng)?;
        draws += 1;
    }
    Ok((father, mother))
}

/// Result of [`crossover_best_scored`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredChild {
    pub child: Chromosome,
    pub split: usize,
    pub score: f64,
    pub evaluations: usize,
}

fn check_pair(father: &Chromosome, mother: &Chromosome) -> Result<()> {
    if father.len() != mother.len() {
        return Err(Error::InvalidPair {
            father: father.len(),
            mother: mother.len(),
        });
    }
    Ok(())
}

/// Tries every split `i` in `0..len` of `father[..i] ++ mother[i..]` and keeps
/// the best-scoring child. The first (smallest) split wins ties. Split 0 is a
/// clone of the mother; a pure father clone is not a candidate.
pub fn crossover_best_scored(
    father: &Chromosome,
    mother: &Chromosome,
    fitness: &(impl Fitness + ?Sized),
) -> Result<ScoredChild> {
    check_pair(father, mother)?;
    let scores = fitness.split_scores(father, mother);
    if scores.len() != father.len() {
        return Err(Error::Invariant(format!(
            "split scoring returned {} values for {} splits",
            scores.len(),
            father.len()
        )));
    }
    let mut split = 0;
    let mut best = f64::NEG_INFINITY;
    let mut seen_any = false;
    for (i, &s) in scores.iter().enumerate() {
        if !seen_any || s > best {
            seen_any = true;
            best = s;
            split = i;
        }
    }
    Ok(ScoredChild {
        child: Chromosome::splice(father, mother, split),
        split,
        score: best,
        evaluations: scores.len(),
    })
}

pub fn crossover_best(
    father: &Chromosome,
    mother: &Chromosome,
    fitness: &(impl Fitness + ?Sized),
) -> Result<Chromosome> {
    crossover_best_scored(father, mother, fitness).map(|s| s.child)
}

/// Rate applied at gene `position` of a `len`-gene chromosome: the base rate
/// up to and including `len / 2`, twice the base rate after it.
pub fn half_rate(position: usize, len: usize, base_rate: f64) -> f64 {
    if position > len / 2 {
        2.0 * base_rate
    } else {
        base_rate
    }
}

pub fn mutate_half<R: Rng + ?Sized>(child: &Chromosome, base_rate: f64, rng: &mut R) -> Result<Chromosome> {
    if !(0.0..=0.5).contains(&base_rate) {
        return Err(Error::InvalidArgument(format!(
            "base mutation rate {base_rate} outside [0, 0.5]"
        )));
    }
    let len = child.len();
    let mut out = child.clone();
    for (i, g) in out.genes_mut().iter_mut().enumerate() {
        if rng.gen::<f64>() < half_rate(i, len, base_rate) {
            *g ^= 1;
        }
    }
    Ok(out)
}

pub fn crossover_single_point<R: Rng + ?Sized>(
    father: &Chromosome,
    mother: &Chromosome,
    rng: &mut R,
) -> Result<Chromosome> {
    check_pair(father, mother)?;
    let split = rng.gen_range(0..father.len());
    Ok(Chromosome::splice(father, mother, split))
}

/// With probability `rate`, flips exactly one uniformly chosen gene.
pub fn mutate_simple<R: Rng + ?Sized>(child: &Chromosome, rate: f64, rng: &mut R) -> Result<Chromosome> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("mutation rate {rate} outside [0, 1]")));
    }
    let mut out = child.clone();
    if rng.gen::<f64>() < rate {
        let pos = rng.gen_range(0..out.len());
        out.genes_mut()[pos] ^= 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::random_chromosome;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn c(s: &str) -> Chromosome {
        s.parse().unwrap()
    }

    fn ones(c: &Chromosome) -> f64 {
        c.count_ones() as f64
    }

    #[test]
    fn roulette_single_and_lone_weight() {
        let mut rng = stream(1);
        for _ in 0..100 {
            assert_eq!(roulette_select(&[7.0], &mut rng).unwrap(), 0);
            assert_eq!(roulette_select(&[0.0, 5.0, 0.0], &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn roulette_zero_weights_is_degenerate() {
        assert!(matches!(
            roulette_select(&[0.0, 0.0], &mut stream(1)),
            Err(Error::DegenerateSelection)
        ));
        assert!(roulette_or_uniform(&[0.0, 0.0], &mut stream(1)).unwrap() < 2);
    }

    #[test]
    fn roulette_rejects_negative() {
        assert!(matches!(
            roulette_select(&[1.0, -1.0], &mut stream(1)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn roulette_frequencies() {
        let mut rng = stream(2);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| roulette_select(&[1.0, 3.0], &mut rng).unwrap() == 1)
            .count();
        let f = hits as f64 / n as f64;
        assert!((0.74..=0.76).contains(&f), "{f}");
    }

    #[test]
    fn crossover_best_identical_parents() {
        let p = c("10110");
        assert_eq!(crossover_best(&p, &p, &ones).unwrap(), p);
    }

    #[test]
    fn crossover_best_hand_example() {
        let r = crossover_best_scored(&c("1100"), &c("0011"), &ones).unwrap();
        assert_eq!(r.child, c("1111"));
        assert_eq!(r.split, 2);
        assert_eq!(r.evaluations, 4);
    }

    #[test]
    fn crossover_best_ties_keep_first() {
        // Every split scores the same, so split 0 (the mother) wins.
        let r = crossover_best_scored(&c("1111"), &c("0000"), &|_: &Chromosome| 1.0).unwrap();
        assert_eq!(r.split, 0);
        assert_eq!(r.child, c("0000"));
    }

    #[test]
    fn crossover_length_mismatch() {
        assert!(matches!(
            crossover_best(&c("10"), &c("101"), &ones),
            Err(Error::InvalidPair { father: 2, mother: 3 })
        ));
        assert!(matches!(
            crossover_single_point(&c("10"), &c("101"), &mut stream(0)),
            Err(Error::InvalidPair { .. })
        ));
    }

    #[test]
    fn single_point_construction_and_uniformity() {
        let f = c("11111111");
        let m = c("00000000");
        let mut rng = stream(4);
        let mut counts = [0usize; 8];
        let n = 10_000;
        for _ in 0..n {
            let child = crossover_single_point(&f, &m, &mut rng).unwrap();
            // The split equals the number of leading ones.
            counts[child.count_ones()] += 1;
        }
        for k in counts {
            let p = k as f64 / n as f64;
            assert!((0.105..=0.145).contains(&p), "{p}");
        }
        let same = c("0110");
        assert_eq!(crossover_single_point(&same, &same, &mut rng).unwrap(), same);
        assert_eq!(Chromosome::splice(&c("1111"), &c("0000"), 2), c("1100"));
    }

    #[test]
    fn mutate_half_zero_rate_is_identity() {
        let x = random_chromosome(64, &mut stream(5)).unwrap();
        assert_eq!(mutate_half(&x, 0.0, &mut stream(6)).unwrap(), x);
    }

    #[test]
    fn mutate_half_boundary_rate_flips_back_half() {
        let x = Chromosome::zeros(100);
        let mut rng = stream(7);
        for _ in 0..20 {
            let y = mutate_half(&x, 0.5, &mut rng).unwrap();
            assert!(y.genes()[51..].iter().all(|&g| g == 1));
        }
        // Position len/2 itself still uses the base rate.
        assert_eq!(half_rate(50, 100, 0.5), 0.5);
        assert_eq!(half_rate(51, 100, 0.5), 1.0);
        assert_eq!(half_rate(3, 7, 0.1), 0.1);
        assert_eq!(half_rate(4, 7, 0.1), 0.2);
    }

    #[test]
    fn mutate_half_rejects_bad_rate() {
        let x = Chromosome::zeros(4);
        assert!(mutate_half(&x, 0.6, &mut stream(0)).is_err());
        assert!(mutate_half(&x, -0.1, &mut stream(0)).is_err());
    }

    #[test]
    fn mutate_half_expected_flip_count() {
        // 4 sigma band around base * 61 + 2 * base * 60 for a 121-gene chromosome.
        let len = 121;
        let base = 0.1;
        let x = Chromosome::zeros(len);
        let mut rng = stream(8);
        let trials = 20_000;
        let total: usize = (0..trials)
            .map(|_| mutate_half(&x, base, &mut rng).unwrap().count_ones())
            .sum();
        let front = len / 2 + 1;
        let back = len - front;
        let mean = base * front as f64 + 2.0 * base * back as f64;
        let var = front as f64 * base * (1.0 - base) + back as f64 * 2.0 * base * (1.0 - 2.0 * base);
        let sd = (var / trials as f64).sqrt();
        let observed = total as f64 / trials as f64;
        assert!((observed - mean).abs() < 4.0 * sd, "{observed} vs {mean}");
    }

    #[test]
    fn mutate_half_halves_flip_independently() {
        let x = Chromosome::zeros(40);
        let mut rng = stream(9);
        let n = 100_000;
        let (mut a, mut b, mut ab) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let y = mutate_half(&x, 0.02, &mut rng).unwrap();
            let fa = y.genes()[..21].contains(&1) as u8 as f64;
            let fb = y.genes()[21..].contains(&1) as u8 as f64;
            a += fa;
            b += fb;
            ab += fa * fb;
        }
        let (pa, pb, pab) = (a / n as f64, b / n as f64, ab / n as f64);
        let corr = (pab - pa * pb) / (pa * (1.0 - pa) * pb * (1.0 - pb)).sqrt();
        assert!(corr.abs() < 0.01, "{corr}");
    }

    #[test]
    fn mutate_simple_cases() {
        let x = c("0101");
        let mut rng = stream(10);
        assert_eq!(mutate_simple(&x, 0.0, &mut rng).unwrap(), x);
        let one = c("0");
        for _ in 0..10 {
            assert_eq!(mutate_simple(&one, 1.0, &mut rng).unwrap(), c("1"));
        }
        assert!(mutate_simple(&x, 1.5, &mut rng).is_err());
    }

    #[test]
    fn mutate_simple_rate() {
        let x = Chromosome::zeros(16);
        let mut rng = stream(11);
        let n = 100_000;
        let mut flipped = 0;
        for _ in 0..n {
            match mutate_simple(&x, 0.2, &mut rng).unwrap().hamming(&x) {
                0 => {}
                1 => flipped += 1,
                d => panic!("hamming distance {d}"),
            }
        }
        let p = flipped as f64 / n as f64;
        assert!((0.195..=0.205).contains(&p), "{p}");
    }

    fn pair(len: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<u8>, Vec<u8>)> {
        len.prop_flat_map(|n| (prop::collection::vec(0u8..2, n), prop::collection::vec(0u8..2, n)))
    }

    proptest! {
        #[test]
        fn best_dominates_single_point((f, m) in pair(1..40), seed in any::<u64>(), w in prop::collection::vec(-3.0f64..3.0, 40)) {
            let f = Chromosome::new(f).unwrap();
            let m = Chromosome::new(m).unwrap();
            let phi = |c: &Chromosome| c.genes().iter().zip(&w).map(|(g, w)| *g as f64 * w).sum::<f64>();
            let best = crossover_best(&f, &m, &phi).unwrap();
            let other = crossover_single_point(&f, &m, &mut stream(seed)).unwrap();
            prop_assert!(phi(&best) >= phi(&other));
            // Pure function of its inputs.
            prop_assert_eq!(crossover_best(&f, &m, &phi).unwrap(), best);
        }

        #[test]
        fn operators_preserve_length((f, m) in pair(1..64), seed in any::<u64>()) {
            let f = Chromosome::new(f).unwrap();
            let m = Chromosome::new(m).unwrap();
            let mut rng = stream(seed);
            prop_assert_eq!(crossover_best(&f, &m, &ones).unwrap().len(), f.len());
            prop_assert_eq!(crossover_single_point(&f, &m, &mut rng).unwrap().len(), f.len());
            prop_assert_eq!(mutate_half(&f, 0.3, &mut rng).unwrap().len(), f.len());
            prop_assert_eq!(mutate_simple(&f, 0.7, &mut rng).unwrap().len(), f.len());
        }
    }
}
