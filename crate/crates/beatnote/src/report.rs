//! CSV outputs: sweep reports, estimate lists, training history and mask
//! labels.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use beatnote_core::eval::{FreqStats, SweepConfig, SweepReport};
use beatnote_core::mask::MaskedFrame;
use beatnote_core::train::EpochRecord;

/// Sweep report header.
pub const REPORT_HEADER: [&str; 7] = ["target_hz", "mean_hz", "bias_hz", "sigma_hz", "spread_hz", "n", "dropped"];
/// Estimate list header.
pub const ESTIMATES_HEADER: [&str; 4] = ["index", "true_hz", "estimate_hz", "amplitude"];
/// Training history header.
pub const HISTORY_HEADER: [&str; 4] = ["epoch", "train_loss", "val_loss", "seconds"];
/// Mask label header.
pub const LABELS_HEADER: [&str; 4] = ["frame_index", "label", "freq_hz", "contrast"];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Writes one row per grid frequency.
pub fn write_report<W: Write>(out: W, report: &SweepReport) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in &report.rows {
        w.write_record([
            r.target_hz.to_string(),
            r.mean_hz.to_string(),
            r.bias_hz.to_string(),
            r.sigma_hz.to_string(),
            r.spread_hz.to_string(),
            r.n.to_string(),
            r.dropped.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the rows of a sweep report.
pub fn read_report<R: Read>(input: R) -> Result<Vec<FreqStats>, Box<dyn std::error::Error + Send + Sync>> {
    let mut rd = csv::Reader::from_reader(input);
    if rd.headers()?.iter().ne(REPORT_HEADER) {
        return Err("unexpected report header".into());
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| rec[i].parse::<f64>();
        rows.push(FreqStats {
            target_hz: f(0)?,
            mean_hz: f(1)?,
            bias_hz: f(2)?,
            sigma_hz: f(3)?,
            spread_hz: f(4)?,
            n: rec[5].parse()?,
            dropped: rec[6].parse()?,
        });
    }
    Ok(rows)
}

/// One row of an estimate list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRow {
    /// Record index in the input.
    pub index: u64,
    /// True frequency stored with the record, Hz.
    pub true_hz: f64,
    /// Estimate, or `None` when the estimator failed.
    pub estimate_hz: Option<f64>,
    /// Amplitude estimate.
    pub amplitude: Option<f64>,
}

/// Streaming writer for estimate lists.
pub struct EstimateWriter<W: Write>(csv::Writer<W>);

impl<W: Write> EstimateWriter<W> {
    /// Writes the header.
    pub fn new(out: W) -> csv::Result<Self> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(ESTIMATES_HEADER)?;
        Ok(Self(w))
    }

    /// Appends one row; failed estimates leave the value columns empty.
    pub fn push(&mut self, row: &EstimateRow) -> csv::Result<()> {
        self.0.write_record([row.index.to_string(), row.true_hz.to_string(), opt(row.estimate_hz), opt(row.amplitude)])
    }

    /// Flushes.
    pub fn finish(mut self) -> csv::Result<()> {
        self.0.flush()?;
        Ok(())
    }
}

/// Reads an estimate list.
pub fn read_estimates<R: Read>(input: R) -> Result<Vec<EstimateRow>, Box<dyn std::error::Error + Send + Sync>> {
    let mut rd = csv::Reader::from_reader(input);
    if rd.headers()?.iter().ne(ESTIMATES_HEADER) {
        return Err("unexpected estimates header".into());
    }
    let parse_opt = |s: &str| -> Result<Option<f64>, std::num::ParseFloatError> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some)
        }
    };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        rows.push(EstimateRow {
            index: rec[0].parse()?,
            true_hz: rec[1].parse()?,
            estimate_hz: parse_opt(&rec[2])?,
            amplitude: parse_opt(&rec[3])?,
        });
    }
    Ok(rows)
}

/// Builds a report from an estimate list by grouping on the true frequency,
/// in ascending frequency order.
pub fn report_from_estimates(
    rows: &[EstimateRow],
    config: SweepConfig,
) -> beatnote_core::Result<SweepReport> {
    let mut groups: BTreeMap<u64, (f64, Vec<f64>, u64)> = BTreeMap::new();
    for r in rows {
        // positive frequencies order like their bit patterns
        let g = groups.entry(r.true_hz.to_bits()).or_insert_with(|| (r.true_hz, Vec::new(), 0));
        match r.estimate_hz {
            Some(e) if e.is_finite() => g.1.push(e),
            _ => g.2 += 1,
        }
    }
    let stats = groups
        .into_values()
        .map(|(target, estimates, dropped)| FreqStats::from_estimates(target, &estimates, dropped, config.bin_width_hz))
        .collect::<beatnote_core::Result<Vec<_>>>()?;
    Ok(SweepReport { config, rows: stats })
}

/// Writes a training history.
pub fn write_history<W: Write>(out: W, epochs: &[EpochRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HISTORY_HEADER)?;
    for e in epochs {
        w.write_record([e.epoch.to_string(), e.train_loss.to_string(), e.val_loss.to_string(), e.seconds.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Streaming writer for mask labels.
pub struct LabelWriter<W: Write>(csv::Writer<W>);

impl<W: Write> LabelWriter<W> {
    /// Writes the header.
    pub fn new(out: W) -> csv::Result<Self> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(LABELS_HEADER)?;
        Ok(Self(w))
    }

    /// Appends one frame.
    pub fn push(&mut self, f: &MaskedFrame) -> csv::Result<()> {
        self.0.write_record([f.index.to_string(), f.label.code().to_string(), opt(f.frequency_hz), opt(f.contrast)])
    }

    /// Flushes.
    pub fn finish(mut self) -> csv::Result<()> {
        self.0.flush()?;
        Ok(())
    }
}
