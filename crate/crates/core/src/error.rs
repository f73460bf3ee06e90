use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series is empty or too short: need at least {needed} samples, got {got}")]
    EmptySeries { needed: usize, got: usize },

    #[error("sample {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },

    #[error("sample rate must be positive and finite, got {0}")]
    BadSampleRate(f64),

    #[error("scale {scale} exceeds series length {len}")]
    ScaleTooLarge { scale: usize, len: usize },

    #[error("segment of {scale} samples cannot support a detrending polynomial of order {order}")]
    DegenerateFit { scale: usize, order: usize },

    #[error("segment index {index} out of range 1..={count}")]
    BadSegment { index: usize, count: usize },

    #[error("every segment at scale {scale} has zero fluctuation")]
    AllSegmentsDegenerate { scale: usize },

    #[error("need at least {needed} scales with finite fluctuations, got {got}")]
    InsufficientScales { needed: usize, got: usize },

    #[error("series of {len} samples is shorter than 4 x max scale ({max_scale})")]
    InsufficientData { len: usize, max_scale: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("need at least 3 q points, got {0}")]
    InsufficientQPoints(usize),

    #[error("spectrum is not concave (A = {a}); fallback width alpha_max - alpha_min = {fallback_width}")]
    NonConcaveSpectrum { a: f64, fallback_width: f64 },

    #[error("spectrum needs at least 3 distinct alpha values, got {0}")]
    InsufficientSpectrumPoints(usize),

    #[error("band {name} [{low_hz}, {high_hz}] Hz does not fit within 0..{nyquist_hz} Hz")]
    BandOutOfRange {
        name: String,
        low_hz: f64,
        high_hz: f64,
        nyquist_hz: f64,
    },

    #[error("sample rate {fs_hz} Hz is below the required {min_hz} Hz")]
    SampleRateTooLow { fs_hz: f64, min_hz: f64 },

    #[error("{levels} decomposition levels requested; at most {max} allowed for {len} samples")]
    TooManyLevels {
        levels: usize,
        max: usize,
        len: usize,
    },

    #[error("series of {len} samples is too short (minimum {min})")]
    TooShort { len: usize, min: usize },

    #[error("IMF index {index} is invalid; decomposition has {count} IMFs (indices are 1-based)")]
    BadImfIndex { index: usize, count: usize },

    #[error("input is silent; cannot normalize")]
    SilentInput,

    #[error("frequency {freq_hz} Hz is at or above Nyquist for {fs_hz} Hz sampling")]
    AboveNyquist { freq_hz: f64, fs_hz: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("recording of {duration_s:.3} s is too short for condition '{condition}' ending at {end_s} s")]
    RecordingTooShort {
        condition: String,
        end_s: f64,
        duration_s: f64,
    },

    #[error("part {0} is not in 1..=5")]
    BadPart(usize),

    #[error("no response sheets supplied")]
    NoSheets,

    #[error("no records for cell {0}")]
    EmptyCell(String),

    #[error("report is empty; nothing written")]
    EmptyReport,

    #[error("recording has no column for electrode {0}")]
    MissingChannel(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("unknown marker label '{0}'")]
    UnknownMarker(String),

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("WAV error: {0}")]
    Wav(#[from] hound::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
