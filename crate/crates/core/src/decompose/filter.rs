use std::f64::consts::PI;
use std::fmt;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const MIN_FILTER_LENGTH: usize = 16;

/// A pass band `[low_hz, high_hz)`. `high_hz = None` means "and above": the
/// band runs to Nyquist inclusive. A finite upper edge at or above Nyquist is
/// also inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub name: String,
    pub low_hz: f64,
    pub high_hz: Option<f64>,
}

impl BandSpec {
    pub fn new(name: impl Into<String>, low_hz: f64, high_hz: f64) -> Self {
        Self {
            name: name.into(),
            low_hz,
            high_hz: Some(high_hz),
        }
    }

    pub fn open_ended(name: impl Into<String>, low_hz: f64) -> Self {
        Self {
            name: name.into(),
            low_hz,
            high_hz: None,
        }
    }

    pub fn upper_edge(&self, nyquist_hz: f64) -> f64 {
        self.high_hz.unwrap_or(nyquist_hz).min(nyquist_hz)
    }

    pub fn check(&self, nyquist_hz: f64) -> Result<()> {
        let high = self.high_hz.unwrap_or(nyquist_hz);
        let ok = self.low_hz >= 0.0
            && self.low_hz.is_finite()
            && high > self.low_hz
            && self.low_hz < nyquist_hz
            && high <= nyquist_hz * (1.0 + 1e-12);
        if ok {
            Ok(())
        } else {
            Err(Error::BandOutOfRange {
                name: self.name.clone(),
                low_hz: self.low_hz,
                high_hz: high,
                nyquist_hz,
            })
        }
    }

    /// Whether a bin at `freq_hz` (non-negative) passes.
    pub fn contains(&self, freq_hz: f64, nyquist_hz: f64) -> bool {
        let high = self.upper_edge(nyquist_hz);
        if freq_hz < self.low_hz {
            return false;
        }
        if high >= nyquist_hz {
            freq_hz <= nyquist_hz
        } else {
            freq_hz < high
        }
    }
}

impl fmt::Display for BandSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.high_hz {
            Some(h) => write!(f, "{} [{}, {}) Hz", self.name, self.low_hz, h),
            None => write!(f, "{} [{}, Nyquist] Hz", self.name, self.low_hz),
        }
    }
}

/// The five listening-test bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StimulusBand {
    Band1,
    Band2,
    Band3,
    Band4,
    Band5,
}

impl StimulusBand {
    pub const ALL: [StimulusBand; 5] = [
        StimulusBand::Band1,
        StimulusBand::Band2,
        StimulusBand::Band3,
        StimulusBand::Band4,
        StimulusBand::Band5,
    ];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.get((n as usize).wrapping_sub(1)).copied()
    }

    pub fn spec(self) -> BandSpec {
        let name = format!("band{}", self.number());
        match self {
            StimulusBand::Band1 => BandSpec::new(name, 50.0, 1000.0),
            StimulusBand::Band2 => BandSpec::new(name, 1000.0, 2000.0),
            StimulusBand::Band3 => BandSpec::new(name, 2000.0, 3000.0),
            StimulusBand::Band4 => BandSpec::new(name, 3000.0, 4000.0),
            StimulusBand::Band5 => BandSpec::open_ended(name, 4000.0),
        }
    }
}

/// Content below Band 1, which no stimulus band carries.
pub fn sub_stimulus_band() -> BandSpec {
    BandSpec::new("sub50", 0.0, 50.0)
}

/// Spectral gain profile of the frequency-domain filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FilterShape {
    /// Bins outside the band are zeroed.
    #[default]
    BrickWall,
    /// Half-cosine roll-off of the given width outside each finite edge.
    RaisedCosine { transition_hz: f64 },
}

fn bin_frequency(k: usize, n: usize, fs: f64) -> f64 {
    k.min(n - k) as f64 * fs / n as f64
}

fn gain(band: &BandSpec, shape: FilterShape, freq: f64, nyquist: f64) -> f64 {
    if band.contains(freq, nyquist) {
        return 1.0;
    }
    match shape {
        FilterShape::BrickWall => 0.0,
        FilterShape::RaisedCosine { transition_hz } if transition_hz > 0.0 => {
            let high = band.upper_edge(nyquist);
            let distance = if freq < band.low_hz {
                band.low_hz - freq
            } else {
                freq - high
            };
            if distance >= transition_hz {
                0.0
            } else {
                0.5 * (1.0 + (PI * distance / transition_hz).cos())
            }
        }
        FilterShape::RaisedCosine { .. } => 0.0,
    }
}

fn forward(x: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new()
        .plan_fft_forward(buf.len())
        .process(&mut buf);
    buf
}

fn inverse_real(mut buf: Vec<Complex<f64>>) -> Vec<f64> {
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf.into_iter().map(|c| c.re / n as f64).collect()
}

pub fn fft_bandpass(ts: &TimeSeries, band: &BandSpec) -> Result<TimeSeries> {
    fft_bandpass_shaped(ts, band, FilterShape::BrickWall)
}

pub fn fft_bandpass_shaped(
    ts: &TimeSeries,
    band: &BandSpec,
    shape: FilterShape,
) -> Result<TimeSeries> {
    let n = ts.len();
    if n < MIN_FILTER_LENGTH {
        return Err(Error::TooShort {
            len: n,
            min: MIN_FILTER_LENGTH,
        });
    }
    let fs = ts.sample_rate_hz();
    let nyquist = ts.nyquist_hz();
    band.check(nyquist)?;
    let mut spec = forward(ts.samples());
    for (k, c) in spec.iter_mut().enumerate() {
        let g = gain(band, shape, bin_frequency(k, n, fs), nyquist);
        if g != 1.0 {
            *c *= g;
        }
    }
    Ok(ts.with_samples(inverse_real(spec)))
}

pub const MIN_SPLIT_RATE_HZ: f64 = 10_000.0;

/// Band 1 through Band 5, in order.
pub fn split_bands(audio: &TimeSeries) -> Result<Vec<TimeSeries>> {
    split_bands_shaped(audio, FilterShape::BrickWall)
}

pub fn split_bands_shaped(audio: &TimeSeries, shape: FilterShape) -> Result<Vec<TimeSeries>> {
    if audio.sample_rate_hz() < MIN_SPLIT_RATE_HZ {
        return Err(Error::SampleRateTooLow {
            fs_hz: audio.sample_rate_hz(),
            min_hz: MIN_SPLIT_RATE_HZ,
        });
    }
    StimulusBand::ALL
        .iter()
        .map(|b| fft_bandpass_shaped(audio, &b.spec(), shape))
        .collect()
}

/// Magnitude of the analytic signal.
pub fn envelope(ts: &TimeSeries) -> TimeSeries {
    let n = ts.len();
    if n < 2 {
        return ts.with_samples(ts.samples().iter().map(|v| v.abs()).collect());
    }
    let mut spec = forward(ts.samples());
    let half = n / 2;
    for (k, c) in spec.iter_mut().enumerate().skip(1) {
        if k < half || (k == half && n % 2 == 1) {
            *c *= 2.0;
        } else if k > half {
            *c = Complex::new(0.0, 0.0);
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    ts.with_samples(spec.iter().map(|c| c.norm() / n as f64).collect())
}

pub fn normalize(audio: &TimeSeries, target_rms: f64) -> Result<TimeSeries> {
    if !(target_rms.is_finite() && target_rms > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target RMS must be positive, got {target_rms}"
        )));
    }
    let rms = audio.rms();
    if rms == 0.0 || !rms.is_finite() {
        return Err(Error::SilentInput);
    }
    Ok(audio.scaled(target_rms / rms))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rhythm {
    Alpha,
    Theta,
    Gamma,
}

impl Rhythm {
    pub const ALL: [Rhythm; 3] = [Rhythm::Alpha, Rhythm::Theta, Rhythm::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            Rhythm::Alpha => "alpha",
            Rhythm::Theta => "theta",
            Rhythm::Gamma => "gamma",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == s)
    }
}

impl fmt::Display for Rhythm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhythmSpec {
    pub rhythm: Rhythm,
    pub band: BandSpec,
}

impl RhythmSpec {
    /// alpha 8-13 Hz, theta 4-7 Hz, gamma 13-30 Hz.
    pub fn standard(rhythm: Rhythm) -> Self {
        let (lo, hi) = match rhythm {
            Rhythm::Alpha => (8.0, 13.0),
            Rhythm::Theta => (4.0, 7.0),
            Rhythm::Gamma => (13.0, 30.0),
        };
        Self {
            rhythm,
            band: BandSpec::new(rhythm.name(), lo, hi),
        }
    }

    pub fn standard_set() -> Vec<Self> {
        Rhythm::ALL.into_iter().map(Self::standard).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhythmMethod {
    #[default]
    Fft,
    /// Single dyadic wavelet subband with the largest overlap.
    Dwt,
}

impl RhythmMethod {
    pub fn name(self) -> &'static str {
        match self {
            RhythmMethod::Fft => "fft",
            RhythmMethod::Dwt => "dwt",
        }
    }
}

pub fn extract_rhythm(eeg: &TimeSeries, rhythm: &RhythmSpec) -> Result<TimeSeries> {
    fft_bandpass(eeg, &rhythm.band)
}

pub fn extract_rhythm_with(
    eeg: &TimeSeries,
    rhythm: &RhythmSpec,
    method: RhythmMethod,
) -> Result<TimeSeries> {
    match method {
        RhythmMethod::Fft => extract_rhythm(eeg, rhythm),
        RhythmMethod::Dwt => super::dwt::dyadic_band(eeg, &rhythm.band),
    }
}
