//! Periodized orthogonal discrete wavelet transform.
//!
//! Odd-length inputs at any level are extended by repeating their last
//! sample; the original lengths are kept so the inverse trims them back.

use serde::{Deserialize, Serialize};

use super::filter::BandSpec;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const DEFAULT_LEVELS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wavelet {
    Haar,
    /// Daubechies with four vanishing moments (8 taps).
    #[default]
    Db4,
}

const DB4_LOWPASS: [f64; 8] = [
    0.230_377_813_308_855_23,
    0.714_846_570_552_541_5,
    0.630_880_767_929_590_4,
    -0.027_983_769_416_983_85,
    -0.187_034_811_718_881_14,
    0.030_841_381_835_986_965,
    0.032_883_011_666_982_945,
    -0.010_597_401_784_997_278,
];

impl Wavelet {
    /// Scaling (low-pass) analysis filter.
    pub fn lowpass(self) -> Vec<f64> {
        match self {
            Wavelet::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            Wavelet::Db4 => DB4_LOWPASS.to_vec(),
        }
    }

    /// Wavelet (high-pass) analysis filter, the quadrature mirror of
    /// [`Wavelet::lowpass`]: `g[k] = (-1)^k h[L-1-k]`.
    pub fn highpass(self) -> Vec<f64> {
        let h = self.lowpass();
        let len = h.len();
        (0..len)
            .map(|k| {
                if k % 2 == 0 {
                    h[len - 1 - k]
                } else {
                    -h[len - 1 - k]
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletCoefficients {
    pub wavelet: Wavelet,
    /// Coarsest approximation.
    pub approx: Vec<f64>,
    /// Details, finest (level 1) first.
    pub details: Vec<Vec<f64>>,
    /// Signal length entering each level, finest first.
    pub lengths: Vec<usize>,
    pub sample_rate_hz: f64,
}

impl WaveletCoefficients {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Frequency span `[fs / 2^(j+1), fs / 2^j]` of detail level `j` (1-based).
    pub fn detail_band_hz(&self, level: usize) -> (f64, f64) {
        let fs = self.sample_rate_hz;
        (
            fs / 2f64.powi(level as i32 + 1),
            fs / 2f64.powi(level as i32),
        )
    }
}

pub fn max_levels(n: usize) -> usize {
    if n < 4 {
        return 0;
    }
    (usize::BITS - 1 - n.leading_zeros()) as usize - 2
}

fn analysis_step(x: &[f64], h: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut padded;
    let x = if x.len() % 2 == 1 {
        padded = x.to_vec();
        padded.push(*x.last().unwrap());
        &padded[..]
    } else {
        x
    };
    let n = x.len();
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for i in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for (k, (hk, gk)) in h.iter().zip(g).enumerate() {
            let v = x[(2 * i + k) % n];
            a += hk * v;
            d += gk * v;
        }
        approx[i] = a;
        detail[i] = d;
    }
    (approx, detail)
}

fn synthesis_step(approx: &[f64], detail: &[f64], h: &[f64], g: &[f64], len: usize) -> Vec<f64> {
    let n = 2 * approx.len();
    let mut x = vec![0.0; n];
    for i in 0..approx.len() {
        for (k, (hk, gk)) in h.iter().zip(g).enumerate() {
            x[(2 * i + k) % n] += hk * approx[i] + gk * detail[i];
        }
    }
    x.truncate(len);
    x
}

pub fn dwt(ts: &TimeSeries, levels: usize) -> Result<WaveletCoefficients> {
    dwt_with(ts, Wavelet::Db4, levels)
}

pub fn dwt_with(ts: &TimeSeries, wavelet: Wavelet, levels: usize) -> Result<WaveletCoefficients> {
    let max = max_levels(ts.len());
    if levels == 0 || levels > max {
        return Err(Error::TooManyLevels {
            levels,
            max,
            len: ts.len(),
        });
    }
    let (h, g) = (wavelet.lowpass(), wavelet.highpass());
    let mut approx = ts.samples().to_vec();
    let mut details = Vec::with_capacity(levels);
    let mut lengths = Vec::with_capacity(levels);
    for _ in 0..levels {
        lengths.push(approx.len());
        let (a, d) = analysis_step(&approx, &h, &g);
        details.push(d);
        approx = a;
    }
    Ok(WaveletCoefficients {
        wavelet,
        approx,
        details,
        lengths,
        sample_rate_hz: ts.sample_rate_hz(),
    })
}

pub fn idwt(coeffs: &WaveletCoefficients) -> TimeSeries {
    let (h, g) = (coeffs.wavelet.lowpass(), coeffs.wavelet.highpass());
    let mut approx = coeffs.approx.clone();
    for (detail, &len) in coeffs.details.iter().zip(&coeffs.lengths).rev() {
        approx = synthesis_step(&approx, detail, &h, &g, len);
    }
    TimeSeries::from_parts(approx, coeffs.sample_rate_hz)
}

/// Reconstruction from the single dyadic subband (a detail level, or the
/// final approximation) that overlaps `band` the most.
pub fn dyadic_band(ts: &TimeSeries, band: &BandSpec) -> Result<TimeSeries> {
    let fs = ts.sample_rate_hz();
    band.check(ts.nyquist_hz())?;
    let max = max_levels(ts.len());
    if max == 0 {
        return Err(Error::TooShort {
            len: ts.len(),
            min: 4,
        });
    }
    let (lo, hi) = (band.low_hz, band.upper_edge(ts.nyquist_hz()));
    let overlap = |a: f64, b: f64| (hi.min(b) - lo.max(a)).max(0.0);
    let mut best = (1usize, false, -1.0);
    for level in 1..=max {
        let d = overlap(
            fs / 2f64.powi(level as i32 + 1),
            fs / 2f64.powi(level as i32),
        );
        if d > best.2 {
            best = (level, false, d);
        }
        let a = overlap(0.0, fs / 2f64.powi(level as i32 + 1));
        if level == max && a > best.2 {
            best = (level, true, a);
        }
    }
    let (level, use_approx, _) = best;
    let mut coeffs = dwt(ts, level)?;
    if use_approx {
        coeffs.details.iter_mut().for_each(|d| d.fill(0.0));
    } else {
        coeffs.approx.fill(0.0);
        for (j, d) in coeffs.details.iter_mut().enumerate() {
            if j + 1 != level {
                d.fill(0.0);
            }
        }
    }
    Ok(idwt(&coeffs))
}
