use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Init, MlpModel};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{gaussian, stream};

/// Where weight noise enters an SGD step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Fresh noise is added to the stored weights after every update.
    #[default]
    Update,
    /// The batch is propagated through weights perturbed by fresh noise and
    /// the resulting gradient is applied to the clean weights.
    Forward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate_start: f64,
    /// Subtracted from the learning rate after every epoch, floored at zero.
    pub learning_rate_decay_per_epoch: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Standard deviation of the Gaussian weight noise, see [`NoiseMode`].
    pub weight_noise_sigma: f64,
    pub noise_mode: NoiseMode,
    pub seed: u64,
    pub init: Init,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate_start: 0.01,
            learning_rate_decay_per_epoch: 1e-4,
            epochs: 30,
            batch_size: 64,
            weight_noise_sigma: 0.0,
            noise_mode: NoiseMode::default(),
            seed: 0,
            init: Init::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.into()));
        if !(self.learning_rate_start > 0.0 && self.learning_rate_start.is_finite()) {
            return bad("learning_rate_start must be positive");
        }
        if !(self.learning_rate_decay_per_epoch >= 0.0) {
            return bad("learning_rate_decay_per_epoch must be non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.weight_noise_sigma >= 0.0 && self.weight_noise_sigma.is_finite()) {
            return bad("weight_noise_sigma must be non-negative");
        }
        if let Init::RandomGaussian { scale } = self.init {
            if !(scale > 0.0 && scale.is_finite()) {
                return bad("init scale must be positive");
            }
        }
        Ok(())
    }

    pub fn learning_rate(&self, epoch: usize) -> f64 {
        (self.learning_rate_start - self.learning_rate_decay_per_epoch * epoch as f64).max(0.0)
    }
}

/// One SGD step on a batch with weight noise of size `sigma`. Returns the
/// batch loss seen by the gradient.
pub fn sgd_step<R: Rng + ?Sized>(
    model: &mut MlpModel,
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    eta: f64,
    sigma: f64,
    mode: NoiseMode,
    rng: &mut R,
) -> Result<f64> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Parameter(format!("learning rate must be positive, got {eta}")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter(format!("noise sigma must be non-negative, got {sigma}")));
    }
    let g = if mode == NoiseMode::Forward && sigma > 0.0 {
        let mut noisy = model.clone();
        for layer in noisy.layers_mut() {
            layer.weights.mapv_inplace(|w| w + sigma * gaussian(rng));
        }
        noisy.gradients(x, y)?
    } else {
        model.gradients(x, y)?
    };
    let post = if mode == NoiseMode::Update { sigma } else { 0.0 };
    for ((layer, gw), gb) in model.layers_mut().iter_mut().zip(&g.weights).zip(&g.biases) {
        layer.weights.scaled_add(-eta, gw);
        if let (Some(b), Some(gb)) = (layer.bias.as_mut(), gb) {
            b.scaled_add(-eta, gb);
        }
        if post > 0.0 {
            layer.weights.mapv_inplace(|w| w + post * gaussian(rng));
        }
    }
    Ok(g.loss)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial_loss: f64,
    /// Summed loss over the full dataset at the end of each epoch.
    pub epoch_losses: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epoch_losses.last().copied().unwrap_or(self.initial_loss)
    }
}

/// Trains in place with per-epoch reshuffling. Deterministic for a given seed.
pub fn train(model: &mut MlpModel, data: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Usage("training set is empty".into()));
    }
    let x = data.inputs().points();
    let y = data.targets();
    let initial_loss = model.mse_loss(data)?;
    let mut rng = stream(cfg.seed, 2);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let eta = cfg.learning_rate(epoch);
        if eta > 0.0 {
            order.shuffle(&mut rng);
            for chunk in order.chunks(cfg.batch_size) {
                let bx = x.select(Axis(0), chunk);
                let by = y.select(Axis(0), chunk);
                sgd_step(model, bx.view(), by.view(), eta, cfg.weight_noise_sigma, cfg.noise_mode, &mut rng)?;
            }
        }
        let loss = model.mse_loss(data)?;
        let diverged = !loss.is_finite()
            || model.layers().iter().any(|l| l.weights.iter().any(|w| !w.is_finite()));
        if diverged {
            return Err(Error::Training {
                epoch,
                msg: format!("loss became {loss} at learning rate {eta}"),
            });
        }
        log::debug!("epoch {epoch}: lr {eta:.6} loss {loss:.6}");
        epoch_losses.push(loss);
    }
    Ok(TrainReport {
        initial_loss,
        epoch_losses,
    })
}
