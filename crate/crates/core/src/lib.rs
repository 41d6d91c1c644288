//! Fast frequency estimation for short, noisy beat-note windows.
//!
//! The crate is `no_std` (with `alloc`) and covers the numerical side of the
//! toolkit:
//!
//! * [`signal`]: seeded synthesis of clean/noisy sinusoid pairs and datasets,
//!   plus the Sagnac frequency of a ring cavity.
//! * [`single_tone`]: the windowed-DFT single-tone baseline estimator.
//! * [`nn`]: a small tensor/layer engine and the denoise+regress network.
//! * [`train`]: the training loop with validation-based early stopping.
//! * [`eval`]: Monte Carlo precision sweeps (bias, sigma, spread).
//! * [`mask`]: the real-time 0/1/2 data-quality mask.
//!
//! File formats, the command-line tool and anything that needs a clock or
//! threads live in the `beatnote` companion crate.
#![no_std]
#![deny(missing_docs)]

extern crate alloc;

mod error;
mod estimator;
pub mod eval;
pub mod mask;
pub mod nn;
pub mod rng;
pub mod signal;
pub mod single_tone;
pub mod train;

pub use error::{Error, Result};
pub use estimator::FrequencyEstimator;
pub use eval::{compare, spread, sweep, ComparisonTable, FreqStats, SweepConfig, SweepReport};
pub use mask::{classify_frame, fringe_contrast, mask_stream, MaskConfig, MaskLabel, MaskStream};
pub use nn::{Architecture, LossWeights, Model};
pub use signal::{
    generate_dataset, generate_pair, sagnac_frequency, sample_params, DatasetRecord, GenParams,
    Interval, ParamRanges, SignalWindow,
};
pub use single_tone::{single_tone_estimate, EstimateMethod, FreqEstimate, SingleTone};
pub use train::{train, train_with, LrSchedule, TrainConfig, TrainHistory, TrainObserver};
