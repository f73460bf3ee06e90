//! WAV input and output.

use std::path::Path;

use hound::{SampleFormat, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Reads 16- or 24-bit PCM (or 32-bit float) WAV as samples in [-1, 1];
/// multi-channel input is averaged to mono.
pub fn read_wav(path: &Path) -> Result<TimeSeries> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, bits @ (16 | 24)) => {
            let full_scale = (1i64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / full_scale))
                .collect::<std::result::Result<_, _>>()?
        }
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        (fmt, bits) => {
            return Err(Error::InvalidParameter(format!(
                "{}: unsupported WAV encoding {fmt:?} {bits}-bit (use 16- or 24-bit PCM)",
                path.display()
            )))
        }
    };
    let mono = if channels <= 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    TimeSeries::new(mono, spec.sample_rate as f64)
}

/// Writes mono 16-bit PCM at the series' rate. Samples outside [-1, 1] clip.
pub fn write_wav(path: &Path, ts: &TimeSeries) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: ts.sample_rate_hz().round() as u32,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut w = WavWriter::create(path, spec)?;
    for &v in ts.samples() {
        let s = (v.clamp(-1.0, 1.0) * i16::MAX as f64).round() as i16;
        w.write_sample(s)?;
    }
    w.finalize()?;
    Ok(())
}
