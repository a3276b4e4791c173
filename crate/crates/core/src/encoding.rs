//! Binary chromosomes and their mapping onto real-valued search domains.
//!
//! Decoding splits a chromosome into `n_vars` equal slices, reads each slice
//! as an unsigned big-endian integer `k` and maps it to
//! `lower + k * (upper - lower) / 2^bits_per_var`. The image is therefore
//! `[lower, upper)` on a uniform grid, and for symmetric domains with an even
//! grid the midpoint (usually 0) is exactly representable.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-length bitstring genotype. Genes are stored one per byte, each 0 or 1.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Chromosome {
    genes: Box<[u8]>,
}

impl Chromosome {
    pub fn new(genes: Vec<u8>) -> Result<Self> {
        if genes.is_empty() {
            return Err(Error::InvalidChromosome("empty chromosome".into()));
        }
        if let Some(pos) = genes.iter().position(|&g| g > 1) {
            return Err(Error::InvalidChromosome(format!(
                "gene {pos} is {}, expected 0 or 1",
                genes[pos]
            )));
        }
        Ok(Self {
            genes: genes.into_boxed_slice(),
        })
    }

    pub fn zeros(len: usize) -> Self {
        assert!(len > 0, "chromosome length must be positive");
        Self {
            genes: vec![0; len].into_boxed_slice(),
        }
    }

    pub fn ones(len: usize) -> Self {
        assert!(len > 0, "chromosome length must be positive");
        Self {
            genes: vec![1; len].into_boxed_slice(),
        }
    }

    pub fn from_bools(bits: &[bool]) -> Result<Self> {
        Self::new(bits.iter().map(|&b| b as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    // Chromosomes are never empty; provided for clippy's sake.
    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn genes(&self) -> &[u8] {
        &self.genes
    }

    pub fn gene(&self, index: usize) -> u8 {
        self.genes[index]
    }

    pub fn count_ones(&self) -> usize {
        self.genes.iter().filter(|&&g| g == 1).count()
    }

    pub fn hamming(&self, other: &Chromosome) -> usize {
        self.genes
            .iter()
            .zip(other.genes.iter())
            .filter(|(a, b)| a != b)
            .count()
    }

    /// `father[0..split] ++ mother[split..]`. Lengths must already match.
    pub(crate) fn splice(father: &Chromosome, mother: &Chromosome, split: usize) -> Chromosome {
        debug_assert_eq!(father.len(), mother.len());
        let mut genes = Vec::with_capacity(father.len());
        genes.extend_from_slice(&father.genes[..split]);
        genes.extend_from_slice(&mother.genes[split..]);
        Chromosome {
            genes: genes.into_boxed_slice(),
        }
    }

    pub(crate) fn genes_mut(&mut self) -> &mut [u8] {
        &mut self.genes
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &g in self.genes.iter() {
            f.write_str(if g == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Chromosome({self})")
    }
}

impl FromStr for Chromosome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let genes = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidChromosome(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(genes)
    }
}

impl TryFrom<String> for Chromosome {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Chromosome> for String {
    fn from(c: Chromosome) -> String {
        c.to_string()
    }
}

/// Axis-aligned box the objective is searched over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidArgument(format!(
                "domain bounds must be non-empty and equally long ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "variable {i}: lower {lo} must be below upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same `[lower, upper]` interval on every one of `n_vars` axes.
    pub fn uniform(n_vars: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; n_vars], vec![upper; n_vars])
    }

    pub fn n_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, var: usize) -> f64 {
        self.upper[var] - self.lower[var]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n_vars()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Uniform random point inside the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + rng.gen::<f64>() * (hi - lo))
            .collect()
    }
}

/// Bits per variable for a chromosome of `len` genes over `domain`.
pub fn bits_per_var(len: usize, domain: &SearchDomain) -> Result<usize> {
    let n = domain.n_vars();
    if !len.is_multiple_of(n) {
        return Err(Error::InvalidChromosome(format!(
            "length {len} is not divisible by {n} variables"
        )));
    }
    let bits = len / n;
    if bits > 63 {
        return Err(Error::InvalidChromosome(format!(
            "{bits} bits per variable exceeds the supported 63"
        )));
    }
    Ok(bits)
}

/// Grid spacing between adjacent decoded values of variable `var`.
pub fn resolution(domain: &SearchDomain, var: usize, bits_per_var: usize) -> f64 {
    domain.width(var) / (1u64 << bits_per_var) as f64
}

pub fn decode(c: &Chromosome, domain: &SearchDomain) -> Result<Vec<f64>> {
    let bits = bits_per_var(c.len(), domain)?;
    Ok(c.genes()
        .chunks_exact(bits)
        .enumerate()
        .map(|(var, slice)| {
            let k = slice.iter().fold(0u64, |acc, &g| (acc << 1) | g as u64);
            domain.lower[var] + k as f64 * resolution(domain, var, bits)
        })
        .collect())
}

/// Inverse of [`decode`] on the grid: packs the given integers big-endian.
pub fn encode_integers(values: &[u64], bits_per_var: usize) -> Result<Chromosome> {
    if bits_per_var == 0 || bits_per_var > 63 {
        return Err(Error::InvalidArgument(format!(
            "bits per variable must be in 1..=63, got {bits_per_var}"
        )));
    }
    let mut genes = Vec::with_capacity(values.len() * bits_per_var);
    for &v in values {
        if v >> bits_per_var != 0 {
            return Err(Error::InvalidArgument(format!(
                "{v} does not fit in {bits_per_var} bits"
            )));
        }
        genes.extend((0..bits_per_var).rev().map(|b| ((v >> b) & 1) as u8));
    }
    Chromosome::new(genes)
}

pub fn random_chromosome<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Chromosome> {
    if len == 0 {
        return Err(Error::InvalidArgument("chromosome length must be at least 1".into()));
    }
    Ok(Chromosome {
        genes: (0..len).map(|_| rng.gen_bool(0.5) as u8).collect(),
    })
}
