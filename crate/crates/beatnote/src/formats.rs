//! Binary dataset (`BNDS`) and model (`BNMD`) files. All integers and floats
//! are little-endian.
//!
//! Dataset: magic, `u16` version, `u16` samples per window, `f32` sample
//! rate, `u64` record count, then per record `noisy f32 × n`, `clean f32 × n`,
//! `frequency f32`.
//!
//! Model: magic, `u16` version, the architecture descriptor, `u32` tensor
//! count, then per tensor `u16` name length, UTF-8 name, `u8` rank, `u32`
//! dims and the `f32` data.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use beatnote_core::nn::Tensor;
use beatnote_core::{Architecture, DatasetRecord, Model, SignalWindow};

/// Dataset file magic.
pub const DATASET_MAGIC: [u8; 4] = *b"BNDS";
/// Dataset format version written by this crate.
pub const DATASET_VERSION: u16 = 1;
/// Model file magic.
pub const MODEL_MAGIC: [u8; 4] = *b"BNMD";
/// Model format version written by this crate.
pub const MODEL_VERSION: u16 = 1;

/// Failure to read or write a file.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    /// Underlying IO failure (including truncation).
    #[error("io: {0}")]
    Io(#[from] io::Error),
    /// The file does not start with the expected magic.
    #[error("not a {expected} file")]
    BadMagic {
        /// Expected magic, as text.
        expected: &'static str,
    },
    /// The version field is not one this build understands.
    #[error("unsupported {kind} format version {version}")]
    UnsupportedVersion {
        /// `dataset` or `model`.
        kind: &'static str,
        /// Version found in the file.
        version: u16,
    },
    /// Structurally invalid content.
    #[error("invalid file: {0}")]
    Invalid(String),
    /// The content violates a core invariant.
    #[error(transparent)]
    Core(#[from] beatnote_core::Error),
}

type Result<T> = std::result::Result<T, FormatError>;

fn read_array<const N: usize>(r: &mut impl Read) -> io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn read_u8(r: &mut impl Read) -> io::Result<u8> {
    Ok(read_array::<1>(r)?[0])
}

fn read_u16(r: &mut impl Read) -> io::Result<u16> {
    Ok(u16::from_le_bytes(read_array(r)?))
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

fn read_f32(r: &mut impl Read) -> io::Result<f32> {
    Ok(f32::from_le_bytes(read_array(r)?))
}

fn read_f64(r: &mut impl Read) -> io::Result<f64> {
    Ok(f64::from_le_bytes(read_array(r)?))
}

fn read_f32s(r: &mut impl Read, n: usize) -> io::Result<Vec<f32>> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes)?;
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

fn write_f32s(w: &mut impl Write, values: impl IntoIterator<Item = f32>) -> io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Dataset header fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetHeader {
    /// Samples per window.
    pub n_samples: usize,
    /// Sample rate, Hz.
    pub sample_rate_hz: f32,
    /// Number of records.
    pub count: u64,
}

/// One record as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredRecord {
    /// Noisy window.
    pub noisy: Vec<f32>,
    /// Clean target window.
    pub clean: Vec<f32>,
    /// True frequency, Hz.
    pub frequency_hz: f32,
}

impl StoredRecord {
    /// The noisy samples as an estimator input.
    pub fn noisy_window(&self, sample_rate_hz: f32) -> Result<SignalWindow> {
        Ok(SignalWindow::new(self.noisy.iter().map(|&v| f64::from(v)).collect(), f64::from(sample_rate_hz))?)
    }
}

/// Streams records into a dataset file.
pub struct DatasetWriter<W: Write> {
    inner: W,
    header: DatasetHeader,
    written: u64,
}

impl<W: Write> DatasetWriter<W> {
    /// Writes the header; exactly `header.count` records must follow.
    pub fn new(mut inner: W, header: DatasetHeader) -> Result<Self> {
        let n = u16::try_from(header.n_samples)
            .map_err(|_| FormatError::Invalid(format!("{} samples per window exceeds u16", header.n_samples)))?;
        inner.write_all(&DATASET_MAGIC)?;
        inner.write_all(&DATASET_VERSION.to_le_bytes())?;
        inner.write_all(&n.to_le_bytes())?;
        inner.write_all(&header.sample_rate_hz.to_le_bytes())?;
        inner.write_all(&header.count.to_le_bytes())?;
        Ok(Self { inner, header, written: 0 })
    }

    /// Appends one record.
    pub fn push(&mut self, record: &DatasetRecord) -> Result<()> {
        let n = self.header.n_samples;
        if record.noisy.len() != n || record.clean.len() != n {
            return Err(FormatError::Invalid(format!("record length {} differs from header {n}", record.noisy.len())));
        }
        if self.written == self.header.count {
            return Err(FormatError::Invalid("more records than announced in the header".into()));
        }
        write_f32s(&mut self.inner, record.noisy.samples().iter().map(|&v| v as f32))?;
        write_f32s(&mut self.inner, record.clean.samples().iter().map(|&v| v as f32))?;
        self.inner.write_all(&(record.frequency_hz as f32).to_le_bytes())?;
        self.written += 1;
        Ok(())
    }

    /// Flushes and checks the record count.
    pub fn finish(mut self) -> Result<W> {
        if self.written != self.header.count {
            return Err(FormatError::Invalid(format!("wrote {} of {} records", self.written, self.header.count)));
        }
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Writes `records` to `path`.
pub fn write_dataset_file(
    path: &Path,
    n_samples: usize,
    sample_rate_hz: f64,
    records: impl ExactSizeIterator<Item = DatasetRecord>,
) -> Result<()> {
    let header = DatasetHeader { n_samples, sample_rate_hz: sample_rate_hz as f32, count: records.len() as u64 };
    let mut w = DatasetWriter::new(BufWriter::new(File::create(path)?), header)?;
    for r in records {
        w.push(&r)?;
    }
    w.finish()?;
    Ok(())
}

/// Sequential record reader.
pub struct DatasetReader<R: Read> {
    inner: R,
    header: DatasetHeader,
    remaining: u64,
}

impl<R: Read> DatasetReader<R> {
    /// Parses and validates the header.
    pub fn new(mut inner: R) -> Result<Self> {
        if read_array::<4>(&mut inner)? != DATASET_MAGIC {
            return Err(FormatError::BadMagic { expected: "BNDS" });
        }
        let version = read_u16(&mut inner)?;
        if version != DATASET_VERSION {
            return Err(FormatError::UnsupportedVersion { kind: "dataset", version });
        }
        let n_samples = read_u16(&mut inner)? as usize;
        let sample_rate_hz = read_f32(&mut inner)?;
        let count = read_u64(&mut inner)?;
        if n_samples == 0 || !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(FormatError::Invalid(format!("bad header: {n_samples} samples at {sample_rate_hz} Hz")));
        }
        Ok(Self { inner, header: DatasetHeader { n_samples, sample_rate_hz, count }, remaining: count })
    }

    /// Header fields.
    pub fn header(&self) -> DatasetHeader {
        self.header
    }
}

impl<R: Read> Iterator for DatasetReader<R> {
    type Item = Result<StoredRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let n = self.header.n_samples;
        let mut read = || -> Result<StoredRecord> {
            let noisy = read_f32s(&mut self.inner, n)?;
            let clean = read_f32s(&mut self.inner, n)?;
            let frequency_hz = read_f32(&mut self.inner)?;
            Ok(StoredRecord { noisy, clean, frequency_hz })
        };
        let r = read();
        if r.is_err() {
            self.remaining = 0;
        }
        Some(r)
    }
}

/// Opens a dataset file for streaming.
pub fn open_dataset(path: &Path) -> Result<DatasetReader<BufReader<File>>> {
    DatasetReader::new(BufReader::new(File::open(path)?))
}

/// Reads a whole dataset file.
pub fn read_dataset_file(path: &Path) -> Result<(DatasetHeader, Vec<StoredRecord>)> {
    let reader = open_dataset(path)?;
    let header = reader.header();
    let records = reader.collect::<Result<Vec<_>>>()?;
    Ok((header, records))
}

fn write_architecture(w: &mut impl Write, arch: &Architecture) -> Result<()> {
    let u16_of = |v: usize, what: &str| {
        u16::try_from(v).map_err(|_| FormatError::Invalid(format!("{what} = {v} exceeds u16")))
    };
    w.write_all(&u16_of(arch.input_len, "input_len")?.to_le_bytes())?;
    w.write_all(&u16_of(arch.kernel, "kernel")?.to_le_bytes())?;
    let n = u8::try_from(arch.denoise_channels.len()).map_err(|_| FormatError::Invalid("too many conv blocks".into()))?;
    w.write_all(&[n])?;
    for &c in &arch.denoise_channels {
        w.write_all(&u16_of(c, "channels")?.to_le_bytes())?;
    }
    w.write_all(&u16_of(arch.denoise_hidden, "denoise_hidden")?.to_le_bytes())?;
    w.write_all(&u16_of(arch.head_channels, "head_channels")?.to_le_bytes())?;
    w.write_all(&u16_of(arch.hidden, "hidden")?.to_le_bytes())?;
    w.write_all(&arch.freq_offset_hz.to_le_bytes())?;
    w.write_all(&arch.freq_scale_hz.to_le_bytes())?;
    Ok(())
}

fn read_architecture(r: &mut impl Read) -> Result<Architecture> {
    let input_len = read_u16(r)? as usize;
    let kernel = read_u16(r)? as usize;
    let n = read_u8(r)? as usize;
    let denoise_channels = (0..n).map(|_| read_u16(r).map(usize::from)).collect::<io::Result<Vec<_>>>()?;
    let denoise_hidden = read_u16(r)? as usize;
    let head_channels = read_u16(r)? as usize;
    let hidden = read_u16(r)? as usize;
    let freq_offset_hz = read_f64(r)?;
    let freq_scale_hz = read_f64(r)?;
    let arch = Architecture { input_len, kernel, denoise_channels, denoise_hidden, head_channels, hidden, freq_offset_hz, freq_scale_hz };
    arch.validate()?;
    Ok(arch)
}

/// Serializes a model.
pub fn write_model(mut w: impl Write, model: &Model<f32>) -> Result<()> {
    w.write_all(&MODEL_MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    write_architecture(&mut w, model.architecture())?;
    w.write_all(&(model.params().len() as u32).to_le_bytes())?;
    for (name, t) in model.named_params() {
        let len = u16::try_from(name.len()).map_err(|_| FormatError::Invalid(format!("tensor name too long: {name}")))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[t.shape().len() as u8])?;
        for &d in t.shape() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        write_f32s(&mut w, t.data().iter().copied())?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a model, rejecting unknown versions and any tensor that does not
/// match the descriptor's layout.
pub fn read_model(mut r: impl Read) -> Result<Model<f32>> {
    if read_array::<4>(&mut r)? != MODEL_MAGIC {
        return Err(FormatError::BadMagic { expected: "BNMD" });
    }
    let version = read_u16(&mut r)?;
    if version != MODEL_VERSION {
        return Err(FormatError::UnsupportedVersion { kind: "model", version });
    }
    let arch = read_architecture(&mut r)?;
    let expected = arch.parameter_layout();
    let count = read_u32(&mut r)? as usize;
    if count != expected.len() {
        return Err(FormatError::Invalid(format!("expected {} tensors, found {count}", expected.len())));
    }
    let mut tensors = Vec::with_capacity(count);
    for (_, want_shape, _) in &expected {
        let name_len = read_u16(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| FormatError::Invalid("tensor name is not UTF-8".into()))?;
        let rank = read_u8(&mut r)? as usize;
        let shape = (0..rank).map(|_| read_u32(&mut r).map(|d| d as usize)).collect::<io::Result<Vec<_>>>()?;
        // check before allocating so a corrupt header cannot request huge buffers
        if &shape != want_shape {
            return Err(FormatError::Invalid(format!("tensor {name} has shape {shape:?}, expected {want_shape:?}")));
        }
        let data = read_f32s(&mut r, shape.iter().product())?;
        tensors.push((name, Tensor::from_vec(&shape, data)?));
    }
    Ok(Model::from_parts(arch, tensors)?)
}

/// Writes a model file.
pub fn save_model(path: &Path, model: &Model<f32>) -> Result<()> {
    write_model(BufWriter::new(File::create(path)?), model)
}

/// Reads a model file.
pub fn load_model(path: &Path) -> Result<Model<f32>> {
    read_model(BufReader::new(File::open(path)?))
}
