use tensor_core::{Rng, Tensor};

use crate::error::{Result, ZooError};

/// Which side of the train/eval partition a dataset represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Eval,
}

/// Labeled images with values in `[0, 1]`, all sharing one shape.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub images: Vec<Tensor>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub split: Split,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.images.len() != self.labels.len() {
            return Err(ZooError::InvalidData(format!(
                "{} images but {} labels",
                self.images.len(),
                self.labels.len()
            )));
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= self.num_classes) {
            return Err(ZooError::InvalidData(format!(
                "label {bad} out of range for {} classes",
                self.num_classes
            )));
        }
        if let Some(first) = self.images.first() {
            let shape = first.shape();
            if let Some(odd) = self.images.iter().find(|img| img.shape() != shape) {
                return Err(ZooError::InvalidData(format!(
                    "inconsistent image shapes: {:?} vs {:?}",
                    shape,
                    odd.shape()
                )));
            }
        }
        Ok(())
    }

    /// Deterministic per-class partition: the i-th occurrence of each class
    /// goes to the eval side iff `i % 5 == 0`, giving a balanced 80/20 split
    /// regardless of sample order.
    pub fn split_train_eval(&self) -> (Dataset, Dataset) {
        let mut seen = vec![0usize; self.num_classes];
        let mut train = Dataset {
            images: Vec::new(),
            labels: Vec::new(),
            num_classes: self.num_classes,
            split: Split::Train,
        };
        let mut eval = Dataset {
            images: Vec::new(),
            labels: Vec::new(),
            num_classes: self.num_classes,
            split: Split::Eval,
        };
        for (img, &label) in self.images.iter().zip(&self.labels) {
            let side = if seen[label] % 5 == 0 {
                &mut eval
            } else {
                &mut train
            };
            side.images.push(img.clone());
            side.labels.push(label);
            seen[label] += 1;
        }
        (train, eval)
    }

    /// Subset by index, preserving order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            split: self.split,
        }
    }

    /// First `n` samples (or all of them if fewer).
    pub fn take(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        self.select(&(0..n).collect::<Vec<_>>())
    }
}

/// Procedurally rendered class-conditional images.
///
/// A class is a (shape, palette) pair: shape index `class / 2` out of
/// {disk, frame, cross, bars, diagonal} and palette index `class % 2` out of
/// {warm-on-dark, cool-on-light}, so up to 10 distinct classes. The shapes
/// are chosen to occupy clearly different patch footprints. Every sample
/// jitters the foreground/background colors, the shape center and radius,
/// and adds uniform pixel noise; all draws come from one seeded generator in
/// a fixed order (background, foreground, center x/y, radius, then per-pixel
/// noise), so a seed pins the dataset bit-exactly.
pub fn generate_synthetic(
    num_classes: usize,
    per_class: usize,
    image_size: usize,
    seed: u64,
) -> Result<Dataset> {
    if !(2..=10).contains(&num_classes) {
        return Err(ZooError::InvalidConfig(format!(
            "generator supports 2..=10 classes, got {num_classes}"
        )));
    }
    if image_size < 8 {
        return Err(ZooError::InvalidConfig(format!(
            "image_size {image_size} too small to render shapes"
        )));
    }
    let mut rng = Rng::new(seed);
    let mut images = Vec::with_capacity(num_classes * per_class);
    let mut labels = Vec::with_capacity(num_classes * per_class);
    for class in 0..num_classes {
        for _ in 0..per_class {
            images.push(render_sample(class, image_size, &mut rng));
            labels.push(class);
        }
    }
    Ok(Dataset {
        images,
        labels,
        num_classes,
        split: Split::Train,
    })
}

const PALETTES: [([f64; 3], [f64; 3]); 2] = [
    // warm foreground on dark background
    ([0.15, 0.15, 0.20], [0.90, 0.35, 0.20]),
    // cool foreground on light background
    ([0.85, 0.85, 0.80], [0.15, 0.40, 0.85]),
];

fn render_sample(class: usize, size: usize, rng: &mut Rng) -> Tensor {
    let shape = class / 2;
    let (bg_base, fg_base) = PALETTES[class % 2];

    let mut bg = [0.0; 3];
    for (b, base) in bg.iter_mut().zip(bg_base) {
        *b = base + rng.uniform(-0.05, 0.05);
    }
    let mut fg = [0.0; 3];
    for (f, base) in fg.iter_mut().zip(fg_base) {
        *f = base + rng.uniform(-0.08, 0.08);
    }
    let jitter = size as f64 / 8.0;
    let cx = size as f64 / 2.0 + rng.uniform(-jitter, jitter);
    let cy = size as f64 / 2.0 + rng.uniform(-jitter, jitter);
    let radius = rng.uniform(size as f64 / 4.5, size as f64 / 3.0);

    let mut data = vec![0.0; 3 * size * size];
    for y in 0..size {
        for x in 0..size {
            let dx = x as f64 + 0.5 - cx;
            let dy = y as f64 + 0.5 - cy;
            let inside = match shape {
                // solid disk
                0 => (dx * dx + dy * dy).sqrt() <= radius,
                // hollow square frame
                1 => {
                    let m = dx.abs().max(dy.abs());
                    m <= radius && m >= radius * 0.55
                }
                // plus sign
                2 => {
                    (dx.abs() <= radius * 0.3 && dy.abs() <= radius)
                        || (dy.abs() <= radius * 0.3 && dx.abs() <= radius)
                }
                // horizontal bars clipped to the shape square
                3 => dx.abs() <= radius && dy.abs() <= radius && (y / 4) % 2 == 0,
                // diagonal band
                _ => (dx - dy).abs() <= radius * 0.45 && dx.abs().max(dy.abs()) <= radius * 1.3,
            };
            let color = if inside { fg } else { bg };
            for (ch, &v) in color.iter().enumerate() {
                data[(ch * size + y) * size + x] = v;
            }
        }
    }
    // Uniform pixel noise, clamped to the valid range. Noise is drawn per
    // entry in channel-major order.
    for v in &mut data {
        *v = (*v + rng.uniform(-0.04, 0.04)).clamp(0.0, 1.0);
    }
    Tensor::new(vec![3, size, size], data).expect("render shape is consistent")
}
