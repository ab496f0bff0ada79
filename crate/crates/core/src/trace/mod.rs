//! Timed traces: validated sample sequences, CSV ingest, preprocessing and
//! synthetic corpora.

mod preprocess;
mod synth;

pub use preprocess::{preprocess, Preprocess, PreprocessOutput};
pub use synth::{synth_traces, Family};

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Why a trace file could not be turned into a [`TimedTrace`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Malformed(String),
    NonMonotoneTimestamps,
    MissingChannel(String),
    NonFiniteValue,
    Empty,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Malformed(msg) => write!(f, "malformed CSV: {msg}"),
            ParseErrorKind::NonMonotoneTimestamps => f.write_str("non-monotone timestamps"),
            ParseErrorKind::MissingChannel(c) => write!(f, "missing channel `{c}`"),
            ParseErrorKind::NonFiniteValue => f.write_str("non-finite value"),
            ParseErrorKind::Empty => f.write_str("no samples"),
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{file}:{line}: {kind}")]
    Parse {
        file: PathBuf,
        line: usize,
        kind: ParseErrorKind,
    },
    #[error("io error on {file}: {source}")]
    Io {
        file: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid trace: {0}")]
    Invalid(String),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("channel `{0}` already exists")]
    DuplicateChannel(String),
    #[error("duplicate trace id `{0}`")]
    DuplicateId(String),
    #[error("channel lists differ between traces (`{0}`)")]
    ChannelMismatch(String),
    #[error("unknown trace family `{0}`")]
    UnknownFamily(String),
    #[error("invalid parameter `{name}`: {reason}")]
    BadParameter { name: String, reason: String },
}

/// A finite timed trace: strictly increasing sample times starting at 0 and
/// one value vector per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedTrace {
    times: Vec<f64>,
    // row-major, `channels.len()` values per sample
    values: Vec<f64>,
    channels: Vec<String>,
}

impl TimedTrace {
    /// Builds a trace from rows, checking every invariant.
    pub fn new(
        times: Vec<f64>,
        rows: Vec<Vec<f64>>,
        channels: Vec<String>,
    ) -> Result<Self, TraceError> {
        if times.len() != rows.len() {
            return Err(TraceError::Invalid(format!(
                "{} times but {} value rows",
                times.len(),
                rows.len()
            )));
        }
        let width = channels.len();
        let mut values = Vec::with_capacity(times.len() * width);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != width {
                return Err(TraceError::Invalid(format!(
                    "row {i} has {} values, expected {width}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        Self::from_flat(times, values, channels)
    }

    pub(crate) fn from_flat(
        times: Vec<f64>,
        values: Vec<f64>,
        channels: Vec<String>,
    ) -> Result<Self, TraceError> {
        if times.is_empty() {
            return Err(TraceError::Invalid("trace has no samples".into()));
        }
        if times[0] != 0.0 {
            return Err(TraceError::Invalid(format!(
                "first timestamp is {}, expected 0",
                times[0]
            )));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|t| !t.is_finite()) {
            return Err(TraceError::Invalid("non-monotone timestamps".into()));
        }
        if values.len() != times.len() * channels.len() {
            return Err(TraceError::Invalid("value matrix has the wrong size".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TraceError::Invalid("non-finite value".into()));
        }
        for (i, c) in channels.iter().enumerate() {
            if channels[..i].contains(c) {
                return Err(TraceError::DuplicateChannel(c.clone()));
            }
        }
        Ok(Self {
            times,
            values,
            channels,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == name)
    }

    /// Time of the last sample.
    pub fn span(&self) -> f64 {
        *self.times.last().expect("trace is non-empty")
    }

    pub fn value(&self, sample: usize, channel: usize) -> f64 {
        self.values[sample * self.channels.len() + channel]
    }

    pub fn row(&self, sample: usize) -> &[f64] {
        let w = self.channels.len();
        &self.values[sample * w..(sample + 1) * w]
    }

    /// Samples of one channel.
    pub fn column(&self, channel: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i, channel)).collect()
    }

    pub fn column_by_name(&self, name: &str) -> Result<Vec<f64>, TraceError> {
        let idx = self
            .channel_index(name)
            .ok_or_else(|| TraceError::UnknownChannel(name.to_string()))?;
        Ok(self.column(idx))
    }

    /// Returns a copy with one extra channel appended.
    pub fn with_channel(&self, name: &str, column: Vec<f64>) -> Result<Self, TraceError> {
        if self.channel_index(name).is_some() {
            return Err(TraceError::DuplicateChannel(name.to_string()));
        }
        if column.len() != self.len() {
            return Err(TraceError::Invalid("appended column has the wrong length".into()));
        }
        let w = self.channels.len();
        let mut values = Vec::with_capacity(self.len() * (w + 1));
        for (i, extra) in column.into_iter().enumerate() {
            values.extend_from_slice(self.row(i));
            values.push(extra);
        }
        let mut channels = self.channels.clone();
        channels.push(name.to_string());
        Self::from_flat(self.times.clone(), values, channels)
    }

    /// Samples whose time lies in `[start, end]`, re-based so the first kept
    /// sample is at 0. Returns `None` when fewer than `min_samples` fall inside.
    pub(crate) fn slice_rebased(&self, start: f64, end: f64, min_samples: usize) -> Option<Self> {
        let lo = self.times.partition_point(|&t| t < start);
        let hi = self.times.partition_point(|&t| t <= end);
        if hi <= lo || hi - lo < min_samples {
            return None;
        }
        let t0 = self.times[lo];
        let times = self.times[lo..hi].iter().map(|t| t - t0).collect();
        let w = self.channels.len();
        let values = self.values[lo * w..hi * w].to_vec();
        Self::from_flat(times, values, self.channels.clone()).ok()
    }

    /// Writes the trace in the `time,<channels...>` CSV layout.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["time".to_string()];
        header.extend(self.channels.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![self.times[i].to_string()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Traces keyed by id, all sharing one channel list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceSet {
    channels: Vec<String>,
    traces: BTreeMap<String, TimedTrace>,
}

impl TraceSet {
    pub fn new(channels: Vec<String>) -> Self {
        Self {
            channels,
            traces: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, trace: TimedTrace) -> Result<(), TraceError> {
        let id = id.into();
        if self.traces.is_empty() && self.channels.is_empty() {
            self.channels = trace.channels().to_vec();
        }
        if trace.channels() != self.channels.as_slice() {
            return Err(TraceError::ChannelMismatch(id));
        }
        if self.traces.contains_key(&id) {
            return Err(TraceError::DuplicateId(id));
        }
        self.traces.insert(id, trace);
        Ok(())
    }

    /// Merges another set into this one; ids must not collide.
    pub fn extend(&mut self, other: TraceSet) -> Result<(), TraceError> {
        for (id, tr) in other.traces {
            self.insert(id, tr)?;
        }
        Ok(())
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn get(&self, id: &str) -> Option<&TimedTrace> {
        self.traces.get(id)
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Iterates in id order.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &TimedTrace)> {
        self.traces.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = &String> {
        self.traces.keys()
    }

    /// Writes one `<id>.csv` per trace into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<Vec<PathBuf>, TraceError> {
        std::fs::create_dir_all(dir).map_err(|source| TraceError::Io {
            file: dir.to_path_buf(),
            source,
        })?;
        let mut written = Vec::with_capacity(self.len());
        for (id, tr) in &self.traces {
            let path = dir.join(format!("{id}.csv"));
            let file = File::create(&path).map_err(|source| TraceError::Io {
                file: path.clone(),
                source,
            })?;
            tr.write_csv(file).map_err(|e| TraceError::Io {
                file: path.clone(),
                source: std::io::Error::other(e.to_string()),
            })?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Loads trace CSV files. The trace id is the file stem. Only the channels in
/// `schema` are kept, in schema order; an empty schema keeps every column.
pub fn load_traces<P: AsRef<Path>>(paths: &[P], schema: &[String]) -> Result<TraceSet, TraceError> {
    let mut set = TraceSet::new(Vec::new());
    for p in paths {
        let path = p.as_ref();
        let trace = load_trace_file(path, schema)?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        set.insert(id, trace)?;
    }
    Ok(set)
}

fn load_trace_file(path: &Path, schema: &[String]) -> Result<TimedTrace, TraceError> {
    let file = File::open(path).map_err(|source| TraceError::Io {
        file: path.to_path_buf(),
        source,
    })?;
    parse_trace_csv(file, schema).map_err(|(line, kind)| TraceError::Parse {
        file: path.to_path_buf(),
        line,
        kind,
    })
}

/// Parses the CSV body; errors carry a 1-based line number.
pub(crate) fn parse_trace_csv<R: std::io::Read>(
    input: R,
    schema: &[String],
) -> Result<TimedTrace, (usize, ParseErrorKind)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| (1, ParseErrorKind::Malformed(e.to_string())))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.first().map(String::as_str) != Some("time") {
        return Err((1, ParseErrorKind::Malformed("first column must be `time`".into())));
    }
    let channels: Vec<String> = if schema.is_empty() {
        header[1..].to_vec()
    } else {
        schema.to_vec()
    };
    let mut cols = Vec::with_capacity(channels.len());
    for c in &channels {
        match header.iter().skip(1).position(|h| h == c) {
            Some(i) => cols.push(i + 1),
            None => return Err((1, ParseErrorKind::MissingChannel(c.clone()))),
        }
    }

    let mut times = Vec::new();
    let mut values = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| (line, ParseErrorKind::Malformed(e.to_string())))?;
        if rec.len() != header.len() {
            return Err((
                line,
                ParseErrorKind::Malformed(format!(
                    "expected {} fields, found {}",
                    header.len(),
                    rec.len()
                )),
            ));
        }
        let field = |i: usize| -> Result<f64, (usize, ParseErrorKind)> {
            let v: f64 = rec[i].parse().map_err(|_| {
                (
                    line,
                    ParseErrorKind::Malformed(format!("not a number: `{}`", &rec[i])),
                )
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err((line, ParseErrorKind::NonFiniteValue))
            }
        };
        let t = field(0)?;
        if let Some(&prev) = times.last() {
            if !(t > prev) {
                return Err((line, ParseErrorKind::NonMonotoneTimestamps));
            }
        }
        times.push(t);
        for &c in &cols {
            values.push(field(c)?);
        }
    }
    if times.is_empty() {
        return Err((1, ParseErrorKind::Empty));
    }
    let t0 = times[0];
    for t in &mut times {
        *t -= t0;
    }
    // Rebasing by subtraction can collapse nearly equal stamps.
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err((1, ParseErrorKind::NonMonotoneTimestamps));
    }
    TimedTrace::from_flat(times, values, channels)
        .map_err(|e| (1, ParseErrorKind::Malformed(e.to_string())))
}
