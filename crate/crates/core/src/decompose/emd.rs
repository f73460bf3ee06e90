//! Empirical mode decomposition by envelope-mean sifting.

use serde::{Deserialize, Serialize};

use super::spline::natural_cubic_on_grid;
use crate::error::{Error, Result};
use crate::numeric;
use crate::series::TimeSeries;

pub const MIN_EMD_LENGTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmdConfig {
    pub max_imfs: usize,
    pub max_sift_iterations: usize,
    /// Sifting stops once `Σ(h_prev - h)² / Σ h_prev²` drops below this.
    pub sd_threshold: f64,
}

impl Default for EmdConfig {
    fn default() -> Self {
        Self {
            max_imfs: 10,
            max_sift_iterations: 10,
            sd_threshold: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImfSet {
    /// Fastest oscillation first.
    pub imfs: Vec<TimeSeries>,
    pub residue: TimeSeries,
}

impl ImfSet {
    pub fn reconstruct(&self) -> TimeSeries {
        let mut acc: Vec<numeric::CompensatedSum> = self
            .residue
            .samples()
            .iter()
            .map(|&r| {
                let mut s = numeric::CompensatedSum::new();
                s.add(r);
                s
            })
            .collect();
        for imf in &self.imfs {
            for (a, &v) in acc.iter_mut().zip(imf.samples()) {
                a.add(v);
            }
        }
        self.residue
            .with_samples(acc.iter().map(|a| a.value()).collect())
    }
}

/// Number of local maxima plus local minima; plateaus count once.
pub fn count_extrema(x: &[f64]) -> usize {
    let (maxima, minima) = extrema(x);
    maxima.len() + minima.len()
}

pub fn count_zero_crossings(x: &[f64]) -> usize {
    let mut count = 0;
    let mut last_sign = 0i8;
    for &v in x {
        let s = if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        };
        if s != 0 {
            if last_sign != 0 && s != last_sign {
                count += 1;
            }
            last_sign = s;
        }
    }
    count
}

fn extrema(x: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    let n = x.len();
    let mut i = 1;
    while i + 1 < n {
        if x[i] != x[i - 1] {
            // walk across a plateau
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n {
                let mid = (i + j) / 2;
                if x[i] > x[i - 1] && x[i] > x[j + 1] {
                    maxima.push(mid);
                } else if x[i] < x[i - 1] && x[i] < x[j + 1] {
                    minima.push(mid);
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    (maxima, minima)
}

const MIRRORED: usize = 2;

/// Knots for one envelope: the extrema plus up to two mirror images about
/// each end of the signal.
fn envelope_knots(x: &[f64], idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let last = (x.len() - 1) as f64;
    let mut xs = Vec::with_capacity(idx.len() + 2 * MIRRORED);
    let mut ys = Vec::with_capacity(idx.len() + 2 * MIRRORED);
    let head: Vec<usize> = idx
        .iter()
        .copied()
        .filter(|&p| p > 0)
        .take(MIRRORED)
        .collect();
    for &p in head.iter().rev() {
        xs.push(-(p as f64));
        ys.push(x[p]);
    }
    for &p in idx {
        xs.push(p as f64);
        ys.push(x[p]);
    }
    for &p in idx
        .iter()
        .rev()
        .filter(|&&p| (p as f64) < last)
        .take(MIRRORED)
    {
        xs.push(2.0 * last - p as f64);
        ys.push(x[p]);
    }
    (xs, ys)
}

/// Envelope mean, or `None` when there are too few extrema to build both
/// envelopes.
fn envelope_mean(x: &[f64]) -> Option<Vec<f64>> {
    let (maxima, minima) = extrema(x);
    if maxima.is_empty() || minima.is_empty() || maxima.len() + minima.len() < 3 {
        return None;
    }
    let n = x.len();
    let (ux, uy) = envelope_knots(x, &maxima);
    let (lx, ly) = envelope_knots(x, &minima);
    let upper = natural_cubic_on_grid(&ux, &uy, n);
    let lower = natural_cubic_on_grid(&lx, &ly, n);
    Some(
        upper
            .iter()
            .zip(&lower)
            .map(|(u, l)| 0.5 * (u + l))
            .collect(),
    )
}

fn sift(x: &[f64], cfg: &EmdConfig) -> Option<Vec<f64>> {
    let mut h = x.to_vec();
    for _ in 0..cfg.max_sift_iterations {
        let Some(mean) = envelope_mean(&h) else {
            break;
        };
        let next: Vec<f64> = h.iter().zip(&mean).map(|(a, m)| a - m).collect();
        let num = numeric::sum(mean.iter().map(|m| m * m));
        let den = numeric::sum(h.iter().map(|v| v * v));
        h = next;
        if den == 0.0 || num / den < cfg.sd_threshold {
            break;
        }
    }
    // the sifted signal must still oscillate to count as a mode
    (count_extrema(&h) >= 3).then_some(h)
}

pub fn emd(ts: &TimeSeries, max_imfs: usize) -> Result<ImfSet> {
    emd_with(
        ts,
        &EmdConfig {
            max_imfs,
            ..EmdConfig::default()
        },
    )
}

pub fn emd_with(ts: &TimeSeries, cfg: &EmdConfig) -> Result<ImfSet> {
    if ts.len() < MIN_EMD_LENGTH {
        return Err(Error::TooShort {
            len: ts.len(),
            min: MIN_EMD_LENGTH,
        });
    }
    let mut residue = ts.samples().to_vec();
    let mut imfs = Vec::new();
    while imfs.len() < cfg.max_imfs && count_extrema(&residue) >= 3 {
        let Some(imf) = sift(&residue, cfg) else {
            break;
        };
        for (r, v) in residue.iter_mut().zip(&imf) {
            *r -= v;
        }
        imfs.push(ts.with_samples(imf));
    }
    let set = ImfSet {
        imfs,
        residue: ts.with_samples(residue),
    };
    #[cfg(test)]
    {
        let rebuilt = set.reconstruct();
        let err = numeric::sum(
            rebuilt
                .samples()
                .iter()
                .zip(ts.samples())
                .map(|(a, b)| (a - b).powi(2)),
        );
        let scale = ts.energy().max(f64::MIN_POSITIVE);
        debug_assert!((err / scale).sqrt() <= 1e-10, "EMD completeness violated");
    }
    Ok(set)
}

/// The input minus the listed IMFs (1-based, fastest first).
pub fn emd_denoise(ts: &TimeSeries, drop_imfs: &[usize]) -> Result<TimeSeries> {
    emd_denoise_with(ts, drop_imfs, &EmdConfig::default())
}

pub fn emd_denoise_with(
    ts: &TimeSeries,
    drop_imfs: &[usize],
    cfg: &EmdConfig,
) -> Result<TimeSeries> {
    let set = emd_with(ts, cfg)?;
    let count = set.imfs.len();
    if let Some(&bad) = drop_imfs.iter().find(|&&i| i == 0 || i > count) {
        return Err(Error::BadImfIndex { index: bad, count });
    }
    let mut out = ts.samples().to_vec();
    for &i in drop_imfs {
        for (o, v) in out.iter_mut().zip(set.imfs[i - 1].samples()) {
            *o -= v;
        }
    }
    Ok(ts.with_samples(out))
}
