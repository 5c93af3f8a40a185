use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::batch::Workspace;
use super::model::{FineDetectorModel, ModelDims, TrainingExample};
use super::optim::{Optimizer, UpdateRule};

/// Offline training protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    /// SNR at which training data is generated.
    pub train_snr_db: f64,
    /// Number of groups in the training set.
    pub dataset_size: usize,
    pub seed: u64,
    pub rule: UpdateRule,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            lr: 8e-4,
            batch: 1000,
            epochs: 120,
            train_snr_db: 15.0,
            dataset_size: 1_200_000,
            seed: 0,
            rule: UpdateRule::default(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.batch == 0 || self.epochs == 0 {
            return Err(Error::Config("batch size and epoch count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Trained model with its per-epoch loss trace.
#[derive(Clone, Debug)]
pub struct TrainingOutcome<T> {
    pub model: FineDetectorModel<T>,
    /// Mean `‖s − ŝ‖` per epoch.
    pub epoch_loss: Vec<f64>,
    /// Mean `‖s − ŝ‖²` per epoch, the minimized objective.
    pub epoch_loss_sq: Vec<f64>,
}

pub fn train_model<T: Real>(
    dataset: &[TrainingExample<T>],
    dims: ModelDims,
    cfg: &TrainingConfig,
) -> Result<TrainingOutcome<T>> {
    train_model_with(dataset, dims, cfg, |_, _| {})
}

/// [`train_model`] with a callback receiving `(epoch, mean norm loss)`.
pub fn train_model_with<T: Real>(
    dataset: &[TrainingExample<T>],
    dims: ModelDims,
    cfg: &TrainingConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainingOutcome<T>> {
    cfg.validate()?;
    dims.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    if let Some(bad) = dataset
        .iter()
        .find(|e| e.input.len() != dims.input_len() || e.target.len() != dims.output_len())
    {
        return Err(Error::Dimension(format!(
            "training example of shape ({}, {}) does not fit model ({}, {})",
            bad.input.len(),
            bad.target.len(),
            dims.input_len(),
            dims.output_len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = FineDetectorModel::random(dims, &mut rng)?;
    let mut opt = Optimizer::new(cfg.rule, &dims);
    let mut ws = Workspace::new();
    let lr = T::lit(cfg.lr);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    let mut epoch_loss_sq = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut norm_sum, mut sq_sum) = (0.0, 0.0);
        for chunk in order.chunks(cfg.batch) {
            let batch: Vec<&TrainingExample<T>> = chunk.iter().map(|&i| &dataset[i]).collect();
            let g = ws.gradient(&model, &batch)?;
            let weight = chunk.len() as f64;
            norm_sum += g.loss_norm.to_f64().unwrap_or(f64::NAN) * weight;
            sq_sum += g.loss_sq.to_f64().unwrap_or(f64::NAN) * weight;
            opt.step(model.params_mut(), &g.grad, lr)?;
        }
        let n = dataset.len() as f64;
        epoch_loss.push(norm_sum / n);
        epoch_loss_sq.push(sq_sum / n);
        on_epoch(epoch, norm_sum / n);
    }
    Ok(TrainingOutcome {
        model,
        epoch_loss,
        epoch_loss_sq,
    })
}
