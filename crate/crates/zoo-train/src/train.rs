use tensor_core::{Rng, Tensor};
use vit_net::{backward_with_param_grads, cross_entropy, forward, ViTModel, ViTParams};

use crate::dataset::Dataset;
use crate::error::{Result, ZooError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    /// SGD with a fixed 0.9 momentum: `v = 0.9 v + g; w -= lr (v + wd w)`.
    SgdMomentum,
    /// Simplified Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias-corrected)
    /// with decoupled weight decay.
    AdamLite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 6,
            batch_size: 32,
            learning_rate: 1e-3,
            weight_decay: 1e-4,
            optimizer: Optimizer::AdamLite,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(ZooError::InvalidConfig("batch_size must be positive".into()));
        }
        // A zero learning rate is legal (training becomes a no-op); negative
        // rates and decays are not.
        if !(self.learning_rate >= 0.0) || !(self.weight_decay >= 0.0) {
            return Err(ZooError::InvalidConfig(
                "learning_rate and weight_decay must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: ViTModel,
    /// Mean training loss per epoch.
    pub loss_history: Vec<f64>,
    /// Accuracy (%) on the training data after each epoch.
    pub accuracy_history: Vec<f64>,
}

/// Classification accuracy (%) of `model` on `data`.
pub fn evaluate(model: &ViTModel, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (img, &label) in data.images.iter().zip(&data.labels) {
        let (logits, _) = forward(model, img)?;
        if logits.argmax() == label {
            correct += 1;
        }
    }
    Ok(100.0 * correct as f64 / data.len() as f64)
}

/// Mini-batch gradient descent on the given data.
///
/// Each epoch shuffles the sample order with a seed-pinned Fisher-Yates
/// stream, then walks consecutive batches; batch gradients are the mean of
/// per-sample gradients accumulated in batch order. Training is
/// single-threaded, so a `(seed, config, data)` triple fully determines the
/// final weights.
pub fn train(model: ViTModel, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    data.validate()?;
    if data.is_empty() {
        return Err(ZooError::InvalidData("cannot train on an empty dataset".into()));
    }
    if data.num_classes > model.config.num_classes {
        return Err(ZooError::InvalidData(format!(
            "dataset has {} classes but the model only {}",
            data.num_classes, model.config.num_classes
        )));
    }
    let mut model = model;
    let mut rng = Rng::new(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut state = OptState::new(&model.params, cfg.optimizer);
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    let mut accuracy_history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for (batch_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut grads = ViTParams::zeros(&model.config);
            for &i in batch {
                let (logits, cache) = forward(&model, &data.images[i])?;
                let (loss, loss_grad) = cross_entropy(&logits, data.labels[i])?;
                if !loss.is_finite() {
                    return Err(ZooError::Diverged {
                        epoch,
                        batch: batch_idx,
                    });
                }
                epoch_loss += loss;
                let (_, sample_grads) =
                    backward_with_param_grads(&model, &cache, &loss_grad, None)?;
                accumulate(&mut grads, &sample_grads)?;
            }
            let inv = 1.0 / batch.len() as f64;
            for g in grads.tensors_mut() {
                *g = g.scale(inv);
            }
            state.step(&mut model.params, &grads, cfg);
        }
        loss_history.push(epoch_loss / data.len() as f64);
        accuracy_history.push(evaluate(&model, data)?);
    }
    // Parameters changed; caches minted from the pre-training model must not
    // validate against the trained one.
    model.refresh_instance_id();
    Ok(TrainOutput {
        model,
        loss_history,
        accuracy_history,
    })
}

fn accumulate(into: &mut ViTParams, add: &ViTParams) -> Result<()> {
    let mut sources = Vec::new();
    add.for_each(|_, t| sources.push(t));
    for (dst, src) in into.tensors_mut().into_iter().zip(sources) {
        dst.accumulate(src)?;
    }
    Ok(())
}

struct OptState {
    optimizer: Optimizer,
    /// First-moment (or velocity) buffers, canonical parameter order.
    m: Vec<Tensor>,
    /// Second-moment buffers (Adam only).
    v: Vec<Tensor>,
    steps: usize,
}

impl OptState {
    fn new(params: &ViTParams, optimizer: Optimizer) -> Self {
        let zeros: Vec<Tensor> = params.tensors().iter().map(|t| t.zeros_like()).collect();
        Self {
            optimizer,
            m: zeros.clone(),
            v: zeros,
            steps: 0,
        }
    }

    fn step(&mut self, params: &mut ViTParams, grads: &ViTParams, cfg: &TrainConfig) {
        self.steps += 1;
        let lr = cfg.learning_rate;
        let wd = cfg.weight_decay;
        let mut grad_refs = Vec::new();
        grads.for_each(|_, t| grad_refs.push(t));
        match self.optimizer {
            Optimizer::SgdMomentum => {
                for ((w, g), m) in params
                    .tensors_mut()
                    .into_iter()
                    .zip(grad_refs)
                    .zip(&mut self.m)
                {
                    let weights = w.data_mut();
                    let md = m.data_mut();
                    for i in 0..weights.len() {
                        md[i] = 0.9 * md[i] + g.data()[i];
                        weights[i] -= lr * (md[i] + wd * weights[i]);
                    }
                }
            }
            Optimizer::AdamLite => {
                const B1: f64 = 0.9;
                const B2: f64 = 0.999;
                const EPS: f64 = 1e-8;
                let bc1 = 1.0 - B1.powi(self.steps as i32);
                let bc2 = 1.0 - B2.powi(self.steps as i32);
                for (((w, g), m), v) in params
                    .tensors_mut()
                    .into_iter()
                    .zip(grad_refs)
                    .zip(&mut self.m)
                    .zip(&mut self.v)
                {
                    let wd_data = w.data_mut();
                    let md = m.data_mut();
                    let vd = v.data_mut();
                    for i in 0..wd_data.len() {
                        let g = g.data()[i];
                        md[i] = B1 * md[i] + (1.0 - B1) * g;
                        vd[i] = B2 * vd[i] + (1.0 - B2) * g * g;
                        let mhat = md[i] / bc1;
                        let vhat = vd[i] / bc2;
                        wd_data[i] -= lr * (mhat / (vhat.sqrt() + EPS) + wd * wd_data[i]);
                    }
                }
            }
        }
    }
}
