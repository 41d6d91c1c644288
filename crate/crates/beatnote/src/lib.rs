//! Files, command-line plumbing and benchmarks around `beatnote-core`.
//!
//! * [`formats`]: `BNDS` datasets and `BNMD` model files.
//! * [`config`]: flat `key = value` configuration files.
//! * [`report`]: CSV reports, estimate lists, histories and mask labels.
//! * [`bench`]: per-window latency percentiles.
#![deny(missing_docs)]

pub mod bench;
pub mod config;
pub mod formats;
pub mod report;

pub use beatnote_core as core;

use beatnote_core::{EstimateMethod, FreqEstimate, FrequencyEstimator, Model, SignalWindow, SingleTone};

/// Either estimator behind one type.
#[derive(Debug, Clone)]
pub enum Estimator {
    /// Windowed-DFT baseline.
    SingleTone(SingleTone),
    /// Trained network.
    NeuralNet(Box<Model<f32>>),
}

impl FrequencyEstimator for Estimator {
    fn method(&self) -> EstimateMethod {
        match self {
            Self::SingleTone(e) => e.method(),
            Self::NeuralNet(e) => e.method(),
        }
    }

    fn estimate(&self, window: &SignalWindow) -> beatnote_core::Result<FreqEstimate> {
        match self {
            Self::SingleTone(e) => e.estimate(window),
            Self::NeuralNet(e) => FrequencyEstimator::estimate(e.as_ref(), window),
        }
    }

    fn estimate_many(&self, windows: &[SignalWindow]) -> Vec<beatnote_core::Result<FreqEstimate>> {
        match self {
            Self::SingleTone(e) => e.estimate_many(windows),
            Self::NeuralNet(e) => e.estimate_many(windows),
        }
    }
}

/// Path of the model shipped with the crate.
pub fn default_model_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("models").join("default.bnmd")
}
