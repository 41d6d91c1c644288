//! Single-window latency measurement.

use std::time::Instant;

use beatnote_core::{generate_dataset, EstimateMethod, FrequencyEstimator, ParamRanges, SignalWindow};

/// Latency percentiles of single-window estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchReport {
    /// Estimator used.
    pub method: EstimateMethod,
    /// Windows timed.
    pub windows: usize,
    /// Median latency, µs.
    pub p50_us: f64,
    /// 95th percentile latency, µs.
    pub p95_us: f64,
    /// 99th percentile latency, µs.
    pub p99_us: f64,
    /// Windows per second over the timed loop.
    pub throughput: f64,
}

impl BenchReport {
    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        format!(
            "method = {}\nwindows = {}\np50_us = {:.3}\np95_us = {:.3}\np99_us = {:.3}\nthroughput = {:.1}\n",
            self.method.as_str(),
            self.windows,
            self.p50_us,
            self.p95_us,
            self.p99_us,
            self.throughput
        )
    }
}

/// Nearest-rank percentile of sorted data, `q` in `[0, 100]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let rank = (q / 100.0 * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

/// Windows drawn from the default training distribution.
pub fn bench_windows(n: usize, ranges: &ParamRanges, seed: u64) -> beatnote_core::Result<Vec<SignalWindow>> {
    Ok(generate_dataset(n as u64, ranges, seed)?.map(|r| r.noisy).collect())
}

/// Times `estimator.estimate` on each window separately, after a short
/// warm-up.
pub fn bench(estimator: &dyn FrequencyEstimator, windows: &[SignalWindow]) -> BenchReport {
    for w in windows.iter().take(20) {
        let _ = std::hint::black_box(estimator.estimate(w));
    }
    let mut lat = Vec::with_capacity(windows.len());
    let start = Instant::now();
    for w in windows {
        let t = Instant::now();
        let _ = std::hint::black_box(estimator.estimate(std::hint::black_box(w)));
        lat.push(t.elapsed().as_secs_f64() * 1e6);
    }
    let total = start.elapsed().as_secs_f64();
    lat.sort_by(f64::total_cmp);
    BenchReport {
        method: estimator.method(),
        windows: windows.len(),
        p50_us: percentile(&lat, 50.0),
        p95_us: percentile(&lat, 95.0),
        p99_us: percentile(&lat, 99.0),
        throughput: windows.len() as f64 / total,
    }
}
