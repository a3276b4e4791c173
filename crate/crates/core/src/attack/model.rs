//! Dense feed-forward classifier used as the built-in oracle.
//!
//! Weights files are JSON:
//!
//! ```json
//! {"version": 1, "layers": [{"rows": 10, "cols": 784, "weights": [...],
//!   "bias": [...], "activation": "softmax"}]}
//! ```
//!
//! Each layer computes `y = activation(W x + b)` with `W` stored row-major as
//! `rows x cols`; `cols` is the input width and `rows` the output width, so
//! `layers[k].rows == layers[k + 1].cols`. The first layer takes 784 inputs and
//! the last is a 10-way softmax.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassifierOracle, Confidences, LABELS};
use crate::attack::idx::IMAGE_PIXELS;
use crate::encoding::Chromosome;
use crate::error::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Softmax,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn affine_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.cols)
                .zip(&self.bias)
                .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()),
        );
    }
}

fn activate(act: Activation, z: &mut [f64]) {
    match act {
        Activation::Relu => z.iter_mut().for_each(|v| *v = v.max(0.0)),
        Activation::Softmax => softmax(z),
        Activation::None => {}
    }
}

/// In-place softmax with max subtraction.
pub fn softmax(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: u32,
    pub layers: Vec<Layer>,
}

/// Validated dense network.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierModel {
    layers: Vec<Layer>,
}

impl ClassifierModel {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let err = |msg: String| Err(Error::Model(msg));
        if layers.is_empty() {
            return err("model has no layers".into());
        }
        if layers[0].cols != IMAGE_PIXELS {
            return err(format!(
                "first layer takes {} inputs, expected {IMAGE_PIXELS}",
                layers[0].cols
            ));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.rows == 0 || l.cols == 0 {
                return err(format!("layer {k} has an empty dimension"));
            }
            if l.weights.len() != l.rows * l.cols {
                return err(format!(
                    "layer {k}: {} weights for a {}x{} matrix",
                    l.weights.len(),
                    l.rows,
                    l.cols
                ));
            }
            if l.bias.len() != l.rows {
                return err(format!(
                    "layer {k}: bias has {} entries, expected {}",
                    l.bias.len(),
                    l.rows
                ));
            }
            if !l.weights.iter().chain(&l.bias).all(|w| w.is_finite()) {
                return err(format!("layer {k} has non-finite parameters"));
            }
            if let Some(next) = layers.get(k + 1) {
                if next.cols != l.rows {
                    return err(format!(
                        "layer {} takes {} inputs but layer {k} produces {}",
                        k + 1,
                        next.cols,
                        l.rows
                    ));
                }
            }
        }
        let last = layers.last().unwrap();
        if last.rows != LABELS || last.activation != Activation::Softmax {
            return err(format!("last layer must be a {LABELS}-way softmax"));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        if file.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model version {}, expected {MODEL_VERSION}",
                file.version
            )));
        }
        Self::new(file.layers)
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            version: MODEL_VERSION,
            layers: self.layers.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            offset: byte_offset(&text, e.line(), e.column()),
            message: e.to_string(),
        })?;
        Self::from_file(file).map_err(|e| match e {
            Error::Model(m) => Error::Model(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("model serializes")
    }

    /// Full forward pass over real inputs.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.layers[0].cols {
            return Err(Error::Model(format!(
                "input has {} values, model expects {}",
                input.len(),
                self.layers[0].cols
            )));
        }
        let mut x = input.to_vec();
        let mut z = Vec::new();
        for l in &self.layers {
            l.affine_into(&x, &mut z);
            activate(l.activation, &mut z);
            std::mem::swap(&mut x, &mut z);
        }
        Ok(x)
    }

    /// First-layer pre-activation for a binary input.
    fn first_pre_activation(&self, bits: &[u8]) -> Vec<f64> {
        let l = &self.layers[0];
        l.weights
            .chunks_exact(l.cols)
            .zip(&l.bias)
            .map(|(row, b)| {
                b + row
                    .iter()
                    .zip(bits)
                    .filter(|(_, &g)| g == 1)
                    .map(|(w, _)| w)
                    .sum::<f64>()
            })
            .collect()
    }

    /// Everything after the first affine map.
    fn finish(&self, mut z: Vec<f64>) -> Confidences {
        activate(self.layers[0].activation, &mut z);
        let mut x = z;
        let mut tmp = Vec::new();
        for l in &self.layers[1..] {
            l.affine_into(&x, &mut tmp);
            activate(l.activation, &mut tmp);
            std::mem::swap(&mut x, &mut tmp);
        }
        x.try_into().expect("validated output width")
    }

    /// Planted-pattern oracle: label `k`'s logit is `weight` times the number
    /// of genes of the input matching `patterns[k]`. The target label's pattern
    /// is the unique global maximiser of that label's confidence.
    pub fn planted(patterns: &[Chromosome; LABELS], weight: f64) -> Result<Self> {
        let mut weights = Vec::with_capacity(LABELS * IMAGE_PIXELS);
        let mut bias = Vec::with_capacity(LABELS);
        for p in patterns {
            if p.len() != IMAGE_PIXELS {
                return Err(Error::Model(format!(
                    "pattern has {} bits, expected {IMAGE_PIXELS}",
                    p.len()
                )));
            }
            // matches = sum_j [p_j x_j + (1 - p_j)(1 - x_j)] = sum_j (2 p_j - 1) x_j + zeros(p)
            weights.extend(p.genes().iter().map(|&g| weight * (2.0 * g as f64 - 1.0)));
            bias.push(weight * (IMAGE_PIXELS - p.count_ones()) as f64);
        }
        Self::new(vec![Layer {
            rows: LABELS,
            cols: IMAGE_PIXELS,
            weights,
            bias,
            activation: Activation::Softmax,
        }])
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> u64 {
    if line == 0 {
        return 0;
    }
    let start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (start + column.saturating_sub(1)) as u64
}

/// Confidence vector of a validated model for a binary image.
pub fn mlp_classify(model: &ClassifierModel, bits: &Chromosome) -> Result<Confidences> {
    if bits.len() != model.layers[0].cols {
        return Err(Error::Model(format!(
            "input has {} bits, model expects {}",
            bits.len(),
            model.layers[0].cols
        )));
    }
    Ok(model.finish(model.first_pre_activation(bits.genes())))
}

impl ClassifierOracle for ClassifierModel {
    fn classify(&self, bits: &Chromosome) -> Confidences {
        mlp_classify(self, bits).expect("attack checks the input width")
    }

    /// Walks the splits left to right, patching the first-layer
    /// pre-activation by one column per step instead of recomputing it.
    fn classify_splits(&self, father: &Chromosome, mother: &Chromosome) -> Vec<Confidences> {
        let l = &self.layers[0];
        let mut z = self.first_pre_activation(mother.genes());
        let mut out = Vec::with_capacity(father.len());
        for (i, (&f, &m)) in father.genes().iter().zip(mother.genes()).enumerate() {
            out.push(self.finish(z.clone()));
            if f != m {
                let sign = if f == 1 { 1.0 } else { -1.0 };
                for (r, zr) in z.iter_mut().enumerate() {
                    *zr += sign * l.weights[r * l.cols + i];
                }
            }
        }
        out
    }
}
