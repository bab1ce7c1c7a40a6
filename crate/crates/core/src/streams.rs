//! Forward-only input sources and step-record sinks.
//!
//! A [`StreamSource`] hands out each input exactly once, in order, and has no
//! way to rewind. Sinks receive `(t, y_t, s_t)` and an optional reference value
//! owned by the environment; they never see `x_t`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SourceError};
use crate::neuron::NeuronState;
use crate::tensor::Vector;

/// Name of the noise generator used by [`SignalSource`]: ChaCha8 feeding a
/// ziggurat standard normal sampler.
pub const NOISE_GENERATOR: &str = "chacha8-ziggurat-normal";

/// A forward-only, single-consumption sequence of input vectors.
///
/// Once `next_input` returns `Ok(None)` the stream is over and every later
/// call must return `Ok(None)` as well.
pub trait StreamSource {
    fn next_input(&mut self) -> std::result::Result<Option<Vector>, SourceError>;

    /// Clean reference value paired with the most recently yielded input,
    /// when the environment knows one. Used for tracking evaluation only.
    fn reference(&self) -> Option<&Vector> {
        None
    }
}

impl<S: StreamSource + ?Sized> StreamSource for &mut S {
    fn next_input(&mut self) -> std::result::Result<Option<Vector>, SourceError> {
        (**self).next_input()
    }

    fn reference(&self) -> Option<&Vector> {
        (**self).reference()
    }
}

impl<S: StreamSource + ?Sized> StreamSource for Box<S> {
    fn next_input(&mut self) -> std::result::Result<Option<Vector>, SourceError> {
        (**self).next_input()
    }

    fn reference(&self) -> Option<&Vector> {
        (**self).reference()
    }
}

/// Adapts any iterator of vectors into a fused source.
pub struct IterSource<I> {
    inner: Option<I>,
}

impl<I: Iterator<Item = Vector>> IterSource<I> {
    pub fn new(iter: I) -> Self {
        IterSource { inner: Some(iter) }
    }
}

impl<I: Iterator<Item = Vector>> StreamSource for IterSource<I> {
    fn next_input(&mut self) -> std::result::Result<Option<Vector>, SourceError> {
        let next = self.inner.as_mut().and_then(Iterator::next);
        if next.is_none() {
            self.inner = None;
        }
        Ok(next)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Constant,
    Step,
    Sinusoid,
    NoisySinusoid,
    WhiteNoise,
}

/// Parameters of a synthetic test signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub amplitude: f64,
    /// Angular frequency in radians per step.
    pub omega: f64,
    pub phase: f64,
    pub noise_std: f64,
    pub seed: u64,
    pub dim: usize,
    /// First step index at which a `Step` signal is high.
    pub onset: u64,
}

impl Default for SignalSpec {
    fn default() -> Self {
        SignalSpec {
            kind: SignalKind::Sinusoid,
            amplitude: 1.0,
            omega: std::f64::consts::TAU / 40.0,
            phase: 0.0,
            noise_std: 0.0,
            seed: 42,
            dim: 1,
            onset: 0,
        }
    }
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidSpec("dimension must be at least 1".into()));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::InvalidSpec(format!("noise std {} must be finite and >= 0", self.noise_std)));
        }
        for (name, v) in [("amplitude", self.amplitude), ("omega", self.omega), ("phase", self.phase)] {
            if !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Noise-free value at step index `t`.
    pub fn clean_value(&self, t: u64) -> f64 {
        match self.kind {
            SignalKind::Constant => self.amplitude,
            SignalKind::Step => {
                if t >= self.onset {
                    self.amplitude
                } else {
                    0.0
                }
            }
            SignalKind::Sinusoid | SignalKind::NoisySinusoid => {
                self.amplitude * (self.omega * t as f64 + self.phase).sin()
            }
            SignalKind::WhiteNoise => 0.0,
        }
    }

    fn is_noisy(&self) -> bool {
        matches!(self.kind, SignalKind::NoisySinusoid | SignalKind::WhiteNoise)
    }
}

/// Deterministic generator source; also remembers the clean reference of the
/// value it last produced.
pub struct SignalSource {
    spec: SignalSpec,
    length: Option<u64>,
    t: u64,
    rng: ChaCha8Rng,
    reference: Option<Vector>,
    done: bool,
}

/// Builds a source for `spec`, optionally truncated to `length` items.
pub fn make_signal_source(spec: &SignalSpec, length: Option<u64>) -> Result<SignalSource> {
    spec.validate()?;
    Ok(SignalSource {
        spec: spec.clone(),
        length,
        t: 0,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        reference: None,
        done: false,
    })
}

impl SignalSource {
    pub fn spec(&self) -> &SignalSpec {
        &self.spec
    }

    /// Number of items produced so far.
    pub fn position(&self) -> u64 {
        self.t
    }
}

impl StreamSource for SignalSource {
    fn next_input(&mut self) -> std::result::Result<Option<Vector>, SourceError> {
        if self.done || self.length.is_some_and(|n| self.t >= n) {
            self.done = true;
            self.reference = None;
            return Ok(None);
        }
        let clean = self.spec.clean_value(self.t);
        let dim = self.spec.dim;
        let values: Vec<f64> = if self.spec.is_noisy() {
            (0..dim)
                .map(|_| {
                    let n: f64 = StandardNormal.sample(&mut self.rng);
                    clean + self.spec.noise_std * n
                })
                .collect()
        } else {
            vec![clean; dim]
        };
        self.reference = Some(Vector::from_finite(vec![clean; dim]));
        let step = self.t;
        self.t += 1;
        // A finite spec can still overflow when amplitude is near f64::MAX.
        Vector::new(values)
            .map(Some)
            .map_err(|_| SourceError::Generator { step, reason: "sample overflowed".into() })
    }

    fn reference(&self) -> Option<&Vector> {
        self.reference.as_ref()
    }
}

/// Line-delimited numeric records from a file or standard input.
///
/// Each non-blank line holds one vector, values separated by commas and/or
/// whitespace. All lines must have the same number of values.
pub struct RecordSource<R> {
    reader: Option<R>,
    line_no: usize,
    dim: Option<usize>,
    buf: String,
}

impl<R: BufRead> RecordSource<R> {
    pub fn new(reader: R) -> Self {
        RecordSource { reader: Some(reader), line_no: 0, dim: None, buf: String::new() }
    }
}

/// Where to read records from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordInput<'a> {
    Path(&'a Path),
    Stdin,
}

/// Opens a record source on a file path or standard input.
pub fn open_record_source(input: RecordInput<'_>) -> std::result::Result<Box<dyn StreamSource + Send>, SourceError> {
    Ok(match input {
        RecordInput::Path(path) => Box::new(RecordSource::new(BufReader::new(File::open(path)?))),
        RecordInput::Stdin => Box::new(RecordSource::new(BufReader::new(io::stdin()))),
    })
}

pub fn parse_record(line: &str, line_no: usize) -> std::result::Result<Vec<f64>, SourceError> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|tok| !tok.is_empty())
        .map(|tok| match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => Err(SourceError::Parse { line: line_no, reason: format!("non-finite value {tok:?}") }),
            Err(e) => Err(SourceError::Parse { line: line_no, reason: format!("{tok:?}: {e}") }),
        })
        .collect()
}

impl<R: BufRead> StreamSource for RecordSource<R> {
    fn next_input(&mut self) -> std::result::Result<Option<Vector>, SourceError> {
        loop {
            let Some(reader) = self.reader.as_mut() else {
                return Ok(None);
            };
            self.buf.clear();
            if reader.read_line(&mut self.buf)? == 0 {
                self.reader = None;
                return Ok(None);
            }
            self.line_no += 1;
            if self.buf.trim().is_empty() {
                continue;
            }
            let values = parse_record(&self.buf, self.line_no)?;
            match self.dim {
                Some(d) if d != values.len() => {
                    return Err(SourceError::Parse {
                        line: self.line_no,
                        reason: format!("expected {d} values, found {}", values.len()),
                    })
                }
                None => self.dim = Some(values.len()),
                _ => {}
            }
            return Ok(Some(Vector::from_finite(values)));
        }
    }
}

/// Shared read handle on a [`ConsumptionGuard`]'s yield count.
#[derive(Debug, Clone, Default)]
pub struct ConsumptionCounter(Arc<AtomicU64>);

impl ConsumptionCounter {
    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// Wraps a source, counts how many elements it has yielded, and panics if the
/// consumer keeps pulling after having been told twice that the stream ended.
pub struct ConsumptionGuard<S> {
    inner: S,
    yielded: ConsumptionCounter,
    ends_seen: u32,
}

/// Puts a misuse detector and yield counter around `source`.
pub fn fused_consumption_guard<S: StreamSource>(source: S) -> ConsumptionGuard<S> {
    ConsumptionGuard { inner: source, yielded: ConsumptionCounter::default(), ends_seen: 0 }
}

impl<S> ConsumptionGuard<S> {
    pub fn count(&self) -> u64 {
        self.yielded.get()
    }

    pub fn counter(&self) -> ConsumptionCounter {
        self.yielded.clone()
    }

    pub fn into_inner(self) -> S {
        self.inner
    }
}

impl<S: StreamSource> StreamSource for ConsumptionGuard<S> {
    fn next_input(&mut self) -> std::result::Result<Option<Vector>, SourceError> {
        assert!(self.ends_seen < 2, "stream pulled after end-of-stream was already returned twice");
        if self.ends_seen > 0 {
            self.ends_seen += 1;
            return Ok(None);
        }
        match self.inner.next_input()? {
            Some(x) => {
                self.yielded.0.fetch_add(1, Ordering::Relaxed);
                Ok(Some(x))
            }
            None => {
                self.ends_seen = 1;
                Ok(None)
            }
        }
    }

    fn reference(&self) -> Option<&Vector> {
        self.inner.reference()
    }
}

/// Borrowed view of one executed step, handed to sinks.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    /// Index of the state produced by this step (1 for the first input).
    pub t: u64,
    pub y: &'a Vector,
    pub layers: &'a [NeuronState],
    pub reference: Option<&'a Vector>,
}

impl StepView<'_> {
    pub fn flat_state(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.s().iter().copied()).collect()
    }

    pub fn to_record(&self) -> StepRecord {
        StepRecord {
            t: self.t,
            y: self.y.clone(),
            s: Vector::from_finite(self.flat_state()),
            r: self.reference.cloned(),
        }
    }
}

/// Owned per-step log entry. There is deliberately no input field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub y: Vector,
    pub s: Vector,
    pub r: Option<Vector>,
}

pub trait RecordSink {
    fn record(&mut self, step: &StepView<'_>) -> io::Result<()>;

    fn finish(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl<K: RecordSink + ?Sized> RecordSink for &mut K {
    fn record(&mut self, step: &StepView<'_>) -> io::Result<()> {
        (**self).record(step)
    }

    fn finish(&mut self) -> io::Result<()> {
        (**self).finish()
    }
}

impl<K: RecordSink + ?Sized> RecordSink for Box<K> {
    fn record(&mut self, step: &StepView<'_>) -> io::Result<()> {
        (**self).record(step)
    }

    fn finish(&mut self) -> io::Result<()> {
        (**self).finish()
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl RecordSink for NullSink {
    fn record(&mut self, _: &StepView<'_>) -> io::Result<()> {
        Ok(())
    }
}

/// Collects owned records in memory.
#[derive(Debug, Default, Clone)]
pub struct VecSink {
    pub records: Vec<StepRecord>,
}

impl RecordSink for VecSink {
    fn record(&mut self, step: &StepView<'_>) -> io::Result<()> {
        self.records.push(step.to_record());
        Ok(())
    }
}

/// Calls a closure per step.
pub struct FnSink<F>(pub F);

impl<F: FnMut(&StepView<'_>)> RecordSink for FnSink<F> {
    fn record(&mut self, step: &StepView<'_>) -> io::Result<()> {
        (self.0)(step);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            other => Err(format!("unknown output format {other:?} (expected csv or jsonl)")),
        }
    }
}

/// Column names for a numbered group: `y` for one column, `y0,y1,..` otherwise.
pub(crate) fn column_names(prefix: &str, n: usize) -> Vec<String> {
    if n == 1 {
        vec![prefix.to_string()]
    } else {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }
}

/// CSV with header `t,y..,s..,r..`. When no reference is expected a single
/// empty `r` column is written.
pub struct CsvSink<W: Write> {
    out: W,
    r_dim: usize,
    header: String,
    wrote_header: bool,
}

impl<W: Write> CsvSink<W> {
    pub fn new(out: W, y_dim: usize, s_dim: usize, r_dim: usize) -> Self {
        let mut cols = vec!["t".to_string()];
        cols.extend(column_names("y", y_dim));
        cols.extend(column_names("s", s_dim));
        cols.extend(column_names("r", r_dim.max(1)));
        CsvSink { out, r_dim, header: cols.join(","), wrote_header: false }
    }

    fn ensure_header(&mut self) -> io::Result<()> {
        if !self.wrote_header {
            writeln!(self.out, "{}", self.header)?;
            self.wrote_header = true;
        }
        Ok(())
    }
}

impl<W: Write> RecordSink for CsvSink<W> {
    fn record(&mut self, step: &StepView<'_>) -> io::Result<()> {
        self.ensure_header()?;
        write!(self.out, "{}", step.t)?;
        for v in step.y.iter() {
            write!(self.out, ",{v}")?;
        }
        for layer in step.layers {
            for v in layer.s().iter() {
                write!(self.out, ",{v}")?;
            }
        }
        match step.reference {
            Some(r) => {
                for v in r.iter() {
                    write!(self.out, ",{v}")?;
                }
            }
            None => {
                for _ in 0..self.r_dim.max(1) {
                    write!(self.out, ",")?;
                }
            }
        }
        writeln!(self.out)
    }

    fn finish(&mut self) -> io::Result<()> {
        self.ensure_header()?;
        self.out.flush()
    }
}

/// One JSON object per line: `{"t":..,"y":[..],"s":[..],"r":[..]|null}`.
pub struct JsonlSink<W: Write> {
    out: W,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        JsonlSink { out }
    }
}

impl<W: Write> RecordSink for JsonlSink<W> {
    fn record(&mut self, step: &StepView<'_>) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, &step.to_record())?;
        writeln!(self.out)
    }

    fn finish(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}
