//! Common interface of the frequency estimators.

use alloc::vec::Vec;

use crate::nn::{Model, Scalar};
use crate::single_tone::{EstimateMethod, FreqEstimate, SingleTone};
use crate::{Error, Result, SignalWindow};

/// Anything that maps a window to a dominant-frequency estimate.
pub trait FrequencyEstimator {
    /// Which algorithm this is.
    fn method(&self) -> EstimateMethod;

    /// Estimates one window.
    fn estimate(&self, window: &SignalWindow) -> Result<FreqEstimate>;

    /// Estimates several windows; implementations may batch the work.
    fn estimate_many(&self, windows: &[SignalWindow]) -> Vec<Result<FreqEstimate>> {
        windows.iter().map(|w| self.estimate(w)).collect()
    }
}

impl FrequencyEstimator for SingleTone {
    fn method(&self) -> EstimateMethod {
        EstimateMethod::SingleTone
    }

    fn estimate(&self, window: &SignalWindow) -> Result<FreqEstimate> {
        SingleTone::estimate(self, window)
    }
}

/// The network's amplitude is read from the input scale: `√2 · std(window)`.
fn rms_amplitude(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    libm::sqrt(2.0 * var)
}

impl<T: Scalar> FrequencyEstimator for Model<T> {
    fn method(&self) -> EstimateMethod {
        EstimateMethod::NeuralNet
    }

    fn estimate(&self, window: &SignalWindow) -> Result<FreqEstimate> {
        let p = self.forward(window)?;
        Ok(FreqEstimate {
            frequency_hz: p.frequency_hz,
            amplitude: rms_amplitude(window.samples()),
            method: EstimateMethod::NeuralNet,
            warning: None,
        })
    }

    fn estimate_many(&self, windows: &[SignalWindow]) -> Vec<Result<FreqEstimate>> {
        let arch = self.architecture();
        let len = arch.input_len;
        let mut out: Vec<Result<FreqEstimate>> = Vec::with_capacity(windows.len());
        let mut inputs = Vec::with_capacity(windows.len() * len);
        let mut slots = Vec::with_capacity(windows.len());
        for (i, w) in windows.iter().enumerate() {
            if w.len() == len {
                inputs.extend(w.samples().iter().map(|&v| T::of(v)));
                slots.push(i);
                out.push(Err(Error::EmptySet)); // placeholder, overwritten below
            } else {
                out.push(Err(Error::Shape { expected: alloc::vec![len], actual: alloc::vec![w.len()] }));
            }
        }
        if slots.is_empty() {
            return out;
        }
        match self.predict_batch(&inputs, slots.len()) {
            Ok((_, freq)) => {
                for (&slot, f) in slots.iter().zip(freq) {
                    out[slot] = Ok(FreqEstimate {
                        frequency_hz: arch.denormalize_frequency(f.f64()),
                        amplitude: rms_amplitude(windows[slot].samples()),
                        method: EstimateMethod::NeuralNet,
                        warning: None,
                    });
                }
            }
            Err(e) => {
                for &slot in &slots {
                    out[slot] = Err(e.clone());
                }
            }
        }
        out
    }
}
