//! Trains the small reference classifier shipped in `data/`.
//!
//! Reads the 8x8 digits, upsamples them to 28x28, writes them back out as
//! IDX files, then fits a 784-64-10 MLP on the binarized images, randomly
//! shifted by up to two pixels each epoch. Every fifth image (index % 5 == 4)
//! is held out and used for the reported accuracy.
//!
//! cargo run --release --example train_reference

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iga::attack::idx::{
    binarize, encode_idx_images, encode_idx_labels, read_idx, resample, Image, DEFAULT_THRESHOLD, IMAGE_MAGIC,
    IMAGE_PIXELS, IMAGE_SIDE, LABEL_MAGIC,
};
use iga::attack::model::{mlp_classify, Activation, ClassifierModel, Layer};
use iga::attack::LABELS;
use iga::encoding::Chromosome;

const HIDDEN: usize = 64;
const EPOCHS: usize = 60;
const BATCH: usize = 16;
const LEARNING_RATE: f64 = 0.05;
const MOMENTUM: f64 = 0.9;
const WEIGHT_DECAY: f64 = 1e-4;
const MAX_SHIFT: i64 = 2;

struct Net {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl Net {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let s1 = (2.0 / IMAGE_PIXELS as f64).sqrt();
        let s2 = (2.0 / HIDDEN as f64).sqrt();
        Self {
            w1: (0..HIDDEN * IMAGE_PIXELS).map(|_| rng.gen_range(-s1..s1)).collect(),
            b1: vec![0.0; HIDDEN],
            w2: (0..LABELS * HIDDEN).map(|_| rng.gen_range(-s2..s2)).collect(),
            b2: vec![0.0; LABELS],
        }
    }

    fn zeros() -> Self {
        Self {
            w1: vec![0.0; HIDDEN * IMAGE_PIXELS],
            b1: vec![0.0; HIDDEN],
            w2: vec![0.0; LABELS * HIDDEN],
            b2: vec![0.0; LABELS],
        }
    }

    fn params_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    /// Accumulates the cross-entropy gradient of one example into `grad`.
    fn backprop(&self, x: &[u8], label: usize, grad: &mut Net) {
        let mut h = self.b1.clone();
        for (j, hj) in h.iter_mut().enumerate() {
            let row = &self.w1[j * IMAGE_PIXELS..(j + 1) * IMAGE_PIXELS];
            *hj += row.iter().zip(x).filter(|(_, &b)| b == 1).map(|(w, _)| w).sum::<f64>();
            *hj = hj.max(0.0);
        }
        let mut z: Vec<f64> = (0..LABELS)
            .map(|k| self.b2[k] + (0..HIDDEN).map(|j| self.w2[k * HIDDEN + j] * h[j]).sum::<f64>())
            .collect();
        iga::attack::model::softmax(&mut z);
        z[label] -= 1.0;
        let mut dh = vec![0.0; HIDDEN];
        #[allow(clippy::needless_range_loop)]
        for k in 0..LABELS {
            grad.b2[k] += z[k];
            for j in 0..HIDDEN {
                grad.w2[k * HIDDEN + j] += z[k] * h[j];
                dh[j] += z[k] * self.w2[k * HIDDEN + j];
            }
        }
        for j in 0..HIDDEN {
            if h[j] <= 0.0 {
                continue;
            }
            grad.b1[j] += dh[j];
            let row = &mut grad.w1[j * IMAGE_PIXELS..(j + 1) * IMAGE_PIXELS];
            for (g, &b) in row.iter_mut().zip(x) {
                if b == 1 {
                    *g += dh[j];
                }
            }
        }
    }

    fn into_model(self) -> ClassifierModel {
        ClassifierModel::new(vec![
            Layer {
                rows: HIDDEN,
                cols: IMAGE_PIXELS,
                weights: self.w1,
                bias: self.b1,
                activation: Activation::Relu,
            },
            Layer {
                rows: LABELS,
                cols: HIDDEN,
                weights: self.w2,
                bias: self.b2,
                activation: Activation::Softmax,
            },
        ])
        .expect("trained weights are finite")
    }
}

/// Translates a binary image, filling uncovered pixels with 0.
fn shift(bits: &[u8], dx: i64, dy: i64) -> Vec<u8> {
    let side = IMAGE_SIDE as i64;
    let mut out = vec![0u8; IMAGE_PIXELS];
    for y in 0..side {
        for x in 0..side {
            let (sx, sy) = (x - dx, y - dy);
            if (0..side).contains(&sx) && (0..side).contains(&sy) {
                out[(y * side + x) as usize] = bits[(sy * side + sx) as usize];
            }
        }
    }
    out
}

fn accuracy(model: &ClassifierModel, data: &[(Chromosome, usize)]) -> f64 {
    let hits = data
        .iter()
        .filter(|(x, y)| {
            let c = mlp_classify(model, x).unwrap();
            (0..LABELS).max_by(|&a, &b| c[a].total_cmp(&c[b])).unwrap() == *y
        })
        .count();
    hits as f64 / data.len() as f64
}

fn main() -> iga::Result<()> {
    let data_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let raw = read_idx(&data_dir.join("digits8x8-images.idx3-ubyte"), Some(IMAGE_MAGIC))?;
    let labels = read_idx(&data_dir.join("digits8x8-labels.idx1-ubyte"), Some(LABEL_MAGIC))?.data;
    let side = raw.dims[1] as usize;
    let images = raw
        .data
        .chunks_exact(side * side)
        .map(|px| Image::new(&resample(px, side, side, IMAGE_SIDE, IMAGE_SIDE)))
        .collect::<iga::Result<Vec<_>>>()?;
    std::fs::write(data_dir.join("digits28-images.idx3-ubyte"), encode_idx_images(&images))
        .map_err(|e| iga::Error::io(&data_dir, e))?;
    std::fs::write(data_dir.join("digits28-labels.idx1-ubyte"), encode_idx_labels(&labels))
        .map_err(|e| iga::Error::io(&data_dir, e))?;

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, (img, &y)) in images.iter().zip(&labels).enumerate() {
        let x = binarize(img.pixels(), DEFAULT_THRESHOLD)?;
        if i % 5 == 4 { &mut test } else { &mut train }.push((x, y as usize));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2021);
    let mut net = Net::new(&mut rng);
    let mut velocity = Net::zeros();
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..EPOCHS {
        order.shuffle(&mut rng);
        let lr = LEARNING_RATE * (1.0 - epoch as f64 / EPOCHS as f64);
        for batch in order.chunks(BATCH) {
            let mut grad = Net::zeros();
            for &i in batch {
                let dx = rng.gen_range(-MAX_SHIFT..=MAX_SHIFT);
                let dy = rng.gen_range(-MAX_SHIFT..=MAX_SHIFT);
                net.backprop(&shift(train[i].0.genes(), dx, dy), train[i].1, &mut grad);
            }
            let scale = lr / batch.len() as f64;
            for ((p, v), g) in net
                .params_mut()
                .into_iter()
                .zip(velocity.params_mut())
                .zip(grad.params_mut())
            {
                for ((pi, vi), gi) in p.iter_mut().zip(v.iter_mut()).zip(g.iter()) {
                    *vi = MOMENTUM * *vi - scale * gi - lr * WEIGHT_DECAY * *pi;
                    *pi += *vi;
                }
            }
        }
    }

    let model = net.into_model();
    println!("train accuracy {:.4}", accuracy(&model, &train));
    println!("held-out accuracy {:.4}", accuracy(&model, &test));
    let path = data_dir.join("digits-model.json");
    std::fs::write(&path, model.to_json()).map_err(|e| iga::Error::io(&path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}
