//! Synthetic signals with known scaling properties.

use std::f64::consts::{LN_2, PI};

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{RandomSeed, TimeSeries};

pub const MAX_CASCADE_LEVELS: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeParams {
    /// Series length is `2^k`.
    pub k: u32,
    /// Multiplier in `(0.5, 1)`.
    pub a: f64,
}

impl CascadeParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > MAX_CASCADE_LEVELS {
            return Err(Error::InvalidParameter(format!(
                "cascade levels must be in 1..={MAX_CASCADE_LEVELS}, got {}",
                self.k
            )));
        }
        if !(self.a > 0.5 && self.a < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cascade multiplier must be in (0.5, 1), got {}",
                self.a
            )));
        }
        Ok(())
    }
}

/// Deterministic binomial measure on `2^k` cells: cell `i` holds
/// `a^n1 (1-a)^(k-n1)` where `n1` is the number of set bits of `i`.
/// Sample rate is 1.
pub fn binomial_cascade(p: CascadeParams) -> Result<TimeSeries> {
    p.validate()?;
    let (ln_a, ln_b) = (p.a.ln(), (1.0 - p.a).ln());
    let table: Vec<f64> = (0..=p.k)
        .map(|ones| (ones as f64 * ln_a + (p.k - ones) as f64 * ln_b).exp())
        .collect();
    let samples = (0u64..1 << p.k)
        .map(|i| table[i.count_ones() as usize])
        .collect();
    Ok(TimeSeries::from_parts(samples, 1.0))
}

/// `h(q) = 1/q - ln(a^q + (1-a)^q) / (q ln 2)`; at `q = 0` the limit
/// `-log2(a (1-a)) / 2`.
pub fn cascade_hurst_oracle(q: f64, a: f64) -> f64 {
    let b = 1.0 - a;
    if q.abs() < 1e-9 {
        return -(a * b).log2() / 2.0;
    }
    1.0 / q - (a.powf(q) + b.powf(q)).ln() / (q * LN_2)
}

/// `τ(q) = -log2(a^q + (1-a)^q)`.
pub fn cascade_tau(q: f64, a: f64) -> f64 {
    -(a.powf(q) + (1.0 - a).powf(q)).log2()
}

/// `α(q) = dτ/dq`.
pub fn cascade_alpha(q: f64, a: f64) -> f64 {
    let b = 1.0 - a;
    let (wa, wb) = (a.powf(q), b.powf(q));
    -(wa * a.ln() + wb * b.ln()) / ((wa + wb) * LN_2)
}

/// `(α_min, α_max) = (-log2 a, -log2(1-a))`, reached as `q → ±∞`.
pub fn cascade_alpha_limits(a: f64) -> (f64, f64) {
    (-a.log2(), -(1.0 - a).log2())
}

/// `log2(a / (1-a))`.
pub fn cascade_asymptotic_width(a: f64) -> f64 {
    (a / (1.0 - a)).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgnParams {
    pub n: usize,
    pub hurst: f64,
    pub seed: RandomSeed,
}

pub const MIN_FGN_LENGTH: usize = 1024;

/// Fractional Gaussian noise by spectral shaping: complex white Gaussian
/// coefficients scaled by `sqrt(S(f))` with `S(f) ∝ f^(1 - 2H)`, inverse FFT
/// over twice the requested length, first `n` samples kept, then
/// standardized to zero mean and unit variance. Sample rate is 1.
pub fn fgn(p: FgnParams) -> Result<TimeSeries> {
    if p.n < MIN_FGN_LENGTH {
        return Err(Error::InvalidParameter(format!(
            "fGn length must be at least {MIN_FGN_LENGTH}, got {}",
            p.n
        )));
    }
    if !(p.hurst > 0.0 && p.hurst < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "Hurst exponent must be in (0, 1), got {}",
            p.hurst
        )));
    }
    let m = (2 * p.n).next_power_of_two();
    let mut rng = p.seed.rng();
    let exponent = (1.0 - 2.0 * p.hurst) / 2.0;
    let mut spectrum = vec![Complex::new(0.0, 0.0); m];
    for k in 1..=m / 2 {
        let amp = (k as f64 / m as f64).powf(exponent);
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        if k == m / 2 {
            spectrum[k] = Complex::new(amp * re * std::f64::consts::SQRT_2, 0.0);
        } else {
            spectrum[k] = Complex::new(amp * re, amp * im);
            spectrum[m - k] = spectrum[k].conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(m).process(&mut spectrum);
    let mut x: Vec<f64> = spectrum[..p.n].iter().map(|c| c.re).collect();
    let mean = crate::numeric::mean(&x);
    let var = crate::numeric::sum(x.iter().map(|v| (v - mean) * (v - mean))) / p.n as f64;
    let sd = var.sqrt();
    for v in &mut x {
        *v = (*v - mean) / sd;
    }
    Ok(TimeSeries::from_parts(x, 1.0))
}

/// Standard normal samples at unit sample rate.
pub fn white_noise(n: usize, seed: RandomSeed) -> Result<TimeSeries> {
    white_noise_at(n, 1.0, seed)
}

pub fn white_noise_at(n: usize, fs_hz: f64, seed: RandomSeed) -> Result<TimeSeries> {
    if n == 0 {
        return Err(Error::EmptySeries { needed: 1, got: 0 });
    }
    let mut rng = seed.rng();
    let samples = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    TimeSeries::new(samples, fs_hz)
}

/// `amplitude * sin(2π f t)` sampled at `fs` for `duration_s` seconds.
pub fn tone(freq_hz: f64, fs_hz: f64, duration_s: f64, amplitude: f64) -> Result<TimeSeries> {
    if fs_hz.is_nan() || fs_hz <= 0.0 {
        return Err(Error::BadSampleRate(fs_hz));
    }
    if freq_hz < 0.0 || freq_hz >= fs_hz / 2.0 {
        return Err(Error::AboveNyquist { freq_hz, fs_hz });
    }
    let n = (duration_s * fs_hz).round() as usize;
    if n == 0 {
        return Err(Error::EmptySeries { needed: 1, got: 0 });
    }
    let samples = (0..n)
        .map(|i| amplitude * (2.0 * PI * freq_hz * i as f64 / fs_hz).sin())
        .collect();
    TimeSeries::new(samples, fs_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_cascade() {
        let c = binomial_cascade(CascadeParams { k: 2, a: 0.75 }).unwrap();
        let expected = [0.0625, 0.1875, 0.1875, 0.5625];
        for (got, want) in c.samples().iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn cascade_is_normalized() {
        for (k, a) in [(8, 0.6), (12, 0.75), (16, 0.9)] {
            let c = binomial_cascade(CascadeParams { k, a }).unwrap();
            let total = crate::numeric::sum(c.samples().iter().copied());
            assert!((total - 1.0).abs() < 1e-12);
            assert_eq!(c.len(), 1 << k);
        }
    }

    #[test]
    fn cascade_near_uniform_limit() {
        let c = binomial_cascade(CascadeParams {
            k: 10,
            a: 0.5 + 1e-12,
        })
        .unwrap();
        let uniform = 2f64.powi(-10);
        assert!(c
            .samples()
            .iter()
            .all(|v| ((v - uniform) / uniform).abs() < 1e-9));
    }

    #[test]
    fn cascade_param_bounds() {
        assert!(binomial_cascade(CascadeParams { k: 4, a: 0.5 }).is_err());
        assert!(binomial_cascade(CascadeParams { k: 4, a: 1.0 }).is_err());
        assert!(binomial_cascade(CascadeParams { k: 25, a: 0.7 }).is_err());
    }

    #[test]
    fn oracle_values() {
        // 1/2 - ln(0.625)/(2 ln 2)
        let direct = 0.5 - (0.75f64.powi(2) + 0.25f64.powi(2)).ln() / (2.0 * LN_2);
        assert!((cascade_hurst_oracle(2.0, 0.75) - direct).abs() < 1e-15);
        assert!((cascade_hurst_oracle(2.0, 0.75) - 0.8390).abs() < 1e-4);
        assert!((cascade_asymptotic_width(0.75) - 3f64.log2()).abs() < 1e-15);
        assert!((cascade_asymptotic_width(0.75) - 1.5850).abs() < 1e-4);
        let (lo, hi) = cascade_alpha_limits(0.75);
        assert!((lo - 0.415).abs() < 1e-3 && (hi - 2.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_continuous_through_zero() {
        let at0 = cascade_hurst_oracle(0.0, 0.75);
        assert!((cascade_hurst_oracle(1e-6, 0.75) - at0).abs() < 1e-5);
        assert!((cascade_hurst_oracle(-1e-6, 0.75) - at0).abs() < 1e-5);
    }

    #[test]
    fn oracle_monofractal_limit() {
        for q in [-5.0, -1.0, 0.0, 2.0, 5.0] {
            assert!((cascade_hurst_oracle(q, 0.5 + 1e-9) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn oracle_alpha_is_tau_derivative() {
        for q in [-5.0, -2.0, 0.5, 3.0] {
            let eps = 1e-5;
            let fd = (cascade_tau(q + eps, 0.75) - cascade_tau(q - eps, 0.75)) / (2.0 * eps);
            assert!((cascade_alpha(q, 0.75) - fd).abs() < 1e-8);
        }
        let grid_width = cascade_alpha(-5.0, 0.75) - cascade_alpha(5.0, 0.75);
        assert!((grid_width - 1.57).abs() < 0.01);
    }

    fn lag1_autocorrelation(x: &[f64]) -> f64 {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let num: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        let den: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        num / den
    }

    #[test]
    fn fgn_half_is_uncorrelated() {
        let x = fgn(FgnParams {
            n: 1 << 16,
            hurst: 0.5,
            seed: RandomSeed(3),
        })
        .unwrap();
        assert!(lag1_autocorrelation(x.samples()).abs() <= 0.02);
    }

    #[test]
    fn fgn_persistent_is_positively_correlated() {
        // lag-1 autocorrelation of fGn is 2^(2H-1) - 1 = 0.516 at H = 0.8
        let x = fgn(FgnParams {
            n: 1 << 16,
            hurst: 0.8,
            seed: RandomSeed(3),
        })
        .unwrap();
        assert!(lag1_autocorrelation(x.samples()) > 0.4);
    }

    #[test]
    fn fgn_is_deterministic() {
        let p = FgnParams {
            n: 2048,
            hurst: 0.7,
            seed: RandomSeed(11),
        };
        assert_eq!(fgn(p).unwrap(), fgn(p).unwrap());
        assert!(fgn(FgnParams { n: 100, ..p }).is_err());
    }

    #[test]
    fn white_noise_variance() {
        let x = white_noise(65536, RandomSeed(5)).unwrap();
        let s = crate::series::basic_stats(&x).unwrap();
        assert!((s.variance - 1.0).abs() <= 0.03);
    }

    #[test]
    fn tone_shape() {
        let t = tone(10.0, 256.0, 8.0, 1.0).unwrap();
        assert_eq!(t.len(), 2048);
        let peak = t.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 1.0).abs() <= 1e-12);
        assert!(matches!(
            tone(128.0, 256.0, 1.0, 1.0),
            Err(Error::AboveNyquist { .. })
        ));
    }
}
