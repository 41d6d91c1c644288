//! Training loop: synthetic data, mini-batch Adam, validation-based early
//! stopping and best-checkpoint selection.
//!
//! Records `0..n_train` of `generate_dataset(n_train + n_val, ranges,
//! master_seed)` form the training set and the remaining `n_val` records the
//! validation set. By default the training data are generated once and
//! revisited every epoch; with `resample_each_epoch`, epoch `e > 0` trains on
//! a fresh `generate_dataset(n_train, ranges, derive_seed(master_seed,
//! RESAMPLE_STREAM + e))` instead. Each epoch is visited in a shuffled order
//! drawn from `derive_seed(master_seed, SHUFFLE_STREAM + epoch)`. Weights
//! start from `Model::init(arch, derive_seed(master_seed, INIT_STREAM))`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;

use crate::nn::{Adam, Architecture, Batch, LossWeights, Model, Workspace};
use crate::rng::{derive_seed, stream};
use crate::signal::{generate_dataset, Dataset, ParamRanges};
use crate::{Error, Result};

/// Stream index of the weight initialization.
pub const INIT_STREAM: u64 = 0x1_0000_0000;
/// Base stream index of the per-epoch shuffles.
pub const SHUFFLE_STREAM: u64 = 0x2_0000_0000;
/// Base stream index of the per-epoch training sets.
pub const RESAMPLE_STREAM: u64 = 0x3_0000_0000;

/// Learning-rate schedule over the optimizer steps of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LrSchedule {
    /// `lr` throughout.
    Constant,
    /// Cosine decay from `lr` to `final_lr` across `max_epochs`.
    Cosine {
        /// Learning rate reached at the last step.
        final_lr: f64,
    },
}

/// Training run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Training records.
    pub n_train: u64,
    /// Validation records.
    pub n_val: u64,
    /// Mini-batch size.
    pub batch_size: usize,
    /// Upper bound on epochs.
    pub max_epochs: usize,
    /// Peak learning rate.
    pub lr: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Seed of data, initialization and shuffles.
    pub master_seed: u64,
    /// Loss weighting.
    pub loss_weights: LossWeights,
    /// Learning-rate schedule.
    pub schedule: LrSchedule,
    /// Distribution of the synthetic records.
    pub ranges: ParamRanges,
    /// Network shape.
    pub architecture: Architecture,
    /// Draw a new training set for every epoch after the first.
    pub resample_each_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_train: 200_000,
            n_val: 20_000,
            batch_size: 64,
            max_epochs: 60,
            lr: 1e-3,
            patience: 10,
            master_seed: 2024,
            loss_weights: LossWeights::default(),
            schedule: LrSchedule::Cosine { final_lr: 1e-5 },
            ranges: ParamRanges::default(),
            architecture: Architecture::default(),
            resample_each_epoch: false,
        }
    }
}

impl TrainConfig {
    /// Checks counts, rates and the nested configurations.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(alloc::string::String::from(msg)));
        if self.n_train == 0 || self.n_val == 0 || self.batch_size == 0 {
            return bad("n_train, n_val and batch_size must be at least 1");
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return bad("max_epochs and patience must be at least 1");
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad("lr must be positive");
        }
        if let LrSchedule::Cosine { final_lr } = self.schedule {
            if !(final_lr.is_finite() && final_lr >= 0.0) {
                return bad("final_lr must be non-negative");
            }
        }
        if self.ranges.n_samples != self.architecture.input_len {
            return bad("window length differs from the network input length");
        }
        self.loss_weights.validate()?;
        self.architecture.validate()?;
        self.ranges.validate()
    }

    fn lr_at(&self, step: u64, total: u64) -> f64 {
        match self.schedule {
            LrSchedule::Constant => self.lr,
            LrSchedule::Cosine { final_lr } => {
                let progress = (step as f64 / total.max(1) as f64).min(1.0);
                final_lr + 0.5 * (self.lr - final_lr) * (1.0 + libm::cos(PI * progress))
            }
        }
    }
}

/// Losses of one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// Zero-based epoch index.
    pub epoch: usize,
    /// Mean training loss over the epoch's batches.
    pub train_loss: f64,
    /// Validation loss after the epoch.
    pub val_loss: f64,
    /// Frequency term of the validation loss.
    pub val_freq_loss: f64,
    /// Wall time of the epoch, seconds (0 without a clock).
    pub seconds: f64,
}

/// Per-epoch losses and the selected checkpoint.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    /// One entry per completed epoch.
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose weights were returned (minimal validation loss).
    pub best_epoch: usize,
    /// Whether the patience criterion ended the run.
    pub stopped_early: bool,
}

impl TrainHistory {
    /// Validation loss of the returned checkpoint.
    pub fn best_val_loss(&self) -> f64 {
        self.epochs.get(self.best_epoch).map_or(f64::INFINITY, |e| e.val_loss)
    }
}

/// Hooks into a training run: a clock for epoch timing and a progress
/// callback.
pub trait TrainObserver {
    /// Monotonic time in seconds.
    fn now(&mut self) -> f64 {
        0.0
    }

    /// Called after every epoch.
    fn on_epoch(&mut self, _record: &EpochRecord) {}

    /// Called when an epoch sets a new best validation loss, with the
    /// weights that will be returned unless a later epoch beats them.
    fn on_improvement(&mut self, _model: &Model<f32>, _record: &EpochRecord) {}
}

/// Observer that does nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct Silent;

impl TrainObserver for Silent {}

/// Early-stopping bookkeeping on a validation-loss sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    stale: usize,
}

impl EarlyStopping {
    /// Tracker that stops after `patience` epochs without strict improvement.
    pub fn new(patience: usize) -> Self {
        Self { patience, best: f64::INFINITY, best_epoch: 0, stale: 0 }
    }

    /// Records epoch `epoch`'s loss; returns true when it is a new best.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> bool {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.stale = 0;
            true
        } else {
            self.stale += 1;
            false
        }
    }

    /// Whether training should stop.
    pub fn should_stop(&self) -> bool {
        self.stale >= self.patience
    }

    /// Epoch of the best loss so far.
    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// Flat f32 copy of a split.
struct Split {
    inputs: Vec<f32>,
    clean: Vec<f32>,
    freq_norm: Vec<f32>,
    len: usize,
}

impl Split {
    fn count(&self) -> usize {
        self.freq_norm.len()
    }

    fn gather(&self, idx: &[usize], batch: &mut Batch<f32>) {
        batch.inputs.clear();
        batch.clean.clear();
        batch.freq_norm.clear();
        for &i in idx {
            batch.inputs.extend_from_slice(&self.inputs[i * self.len..(i + 1) * self.len]);
            batch.clean.extend_from_slice(&self.clean[i * self.len..(i + 1) * self.len]);
            batch.freq_norm.push(self.freq_norm[i]);
        }
    }
}

impl Split {
    fn empty(len: usize) -> Self {
        Self { inputs: Vec::new(), clean: Vec::new(), freq_norm: Vec::new(), len }
    }

    fn fill(&mut self, data: &Dataset, range: core::ops::Range<u64>, arch: &Architecture) {
        self.inputs.clear();
        self.clean.clear();
        self.freq_norm.clear();
        for i in range {
            let r = data.record(i);
            self.inputs.extend(r.noisy.samples().iter().map(|&v| v as f32));
            self.clean.extend(r.clean.samples().iter().map(|&v| v as f32));
            self.freq_norm.push(arch.normalize_frequency(r.frequency_hz) as f32);
        }
    }
}

fn materialize(config: &TrainConfig) -> Result<(Split, Split)> {
    let arch = &config.architecture;
    let data = generate_dataset(config.n_train + config.n_val, &config.ranges, config.master_seed)?;
    let mut train = Split::empty(arch.input_len);
    let mut val = Split::empty(arch.input_len);
    train.fill(&data, 0..config.n_train, arch);
    val.fill(&data, config.n_train..config.n_train + config.n_val, arch);
    Ok((train, val))
}

fn evaluate(model: &Model<f32>, split: &Split, weights: LossWeights) -> Result<(f64, f64)> {
    const CHUNK: usize = 512;
    let mut batch = Batch { inputs: Vec::new(), clean: Vec::new(), freq_norm: Vec::new() };
    let (mut total, mut freq) = (0.0, 0.0);
    let idx: Vec<usize> = (0..split.count()).collect();
    for chunk in idx.chunks(CHUNK) {
        split.gather(chunk, &mut batch);
        let l = model.batch_loss(&batch, weights)?;
        total += l.total() * chunk.len() as f64;
        freq += l.freq * chunk.len() as f64;
    }
    let n = split.count() as f64;
    Ok((total / n, freq / n))
}

/// Trains a network per `config`; see [`train_with`].
pub fn train(config: &TrainConfig) -> Result<(Model<f32>, TrainHistory)> {
    train_with(config, &mut Silent)
}

/// Trains a network, reporting through `observer`, and returns the
/// checkpoint with the lowest validation loss.
pub fn train_with(config: &TrainConfig, observer: &mut dyn TrainObserver) -> Result<(Model<f32>, TrainHistory)> {
    config.validate()?;
    let (mut train_set, val_set) = materialize(config)?;
    let mut model = Model::<f32>::init(config.architecture.clone(), derive_seed(config.master_seed, INIT_STREAM))?;
    let mut adam = Adam::new(&model);
    let mut best = model.clone();
    let mut stopper = EarlyStopping::new(config.patience);
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..train_set.count()).collect();
    let steps_per_epoch = order.len().div_ceil(config.batch_size) as u64;
    let total_steps = steps_per_epoch * config.max_epochs as u64;
    let mut batch = Batch { inputs: Vec::new(), clean: Vec::new(), freq_norm: Vec::new() };
    let mut ws = Workspace::default();

    for epoch in 0..config.max_epochs {
        let started = observer.now();
        if config.resample_each_epoch && epoch > 0 {
            let seed = derive_seed(config.master_seed, RESAMPLE_STREAM + epoch as u64);
            let data = generate_dataset(config.n_train, &config.ranges, seed)?;
            train_set.fill(&data, 0..config.n_train, &config.architecture);
        }
        let mut rng = stream(derive_seed(config.master_seed, SHUFFLE_STREAM + epoch as u64));
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            train_set.gather(chunk, &mut batch);
            let loss = model.loss_and_gradients_into(&batch, config.loss_weights, &mut ws)?;
            let grads = ws.grads.as_ref().expect("gradients were computed");
            if !loss.total().is_finite() {
                return Err(Error::Divergence { epoch });
            }
            loss_sum += loss.total() * chunk.len() as f64;
            let lr = config.lr_at(adam.steps(), total_steps);
            adam.step(model.params_mut(), grads, lr).map_err(|e| match e {
                Error::NonFiniteGradient => Error::Divergence { epoch },
                other => other,
            })?;
        }
        let (val_loss, val_freq_loss) = evaluate(&model, &val_set, config.loss_weights)?;
        if !val_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.count() as f64,
            val_loss,
            val_freq_loss,
            seconds: observer.now() - started,
        };
        history.epochs.push(record);
        observer.on_epoch(&record);
        if stopper.observe(epoch, val_loss) {
            best = model.clone();
            observer.on_improvement(&best, &record);
        }
        if stopper.should_stop() {
            history.stopped_early = true;
            break;
        }
    }
    history.best_epoch = stopper.best_epoch();
    Ok((best, history))
}
