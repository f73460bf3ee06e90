//! Multifractal detrended fluctuation analysis.
//!
//! The signal profile is cut into non-overlapping segments of each scale `s`,
//! a polynomial trend of order `m` is removed inside every segment, and the
//! residual variances `F²(s, v)` are combined into the q-order fluctuation
//! function `Fq(s)`. The generalized Hurst exponent `h(q)` is the slope of
//! `ln Fq(s)` against `ln s`.
//!
//! Work is parallel over scales only; inside a scale the accumulation order
//! is fixed, so results do not depend on the thread count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;
use crate::series::{self, ProfileSeries, TimeSeries};

pub const DEFAULT_MIN_SCALE: usize = 16;
pub const DEFAULT_SCALE_COUNT: usize = 19;
pub const MAX_DETREND_ORDER: usize = 3;

/// F² values below this are treated as numerically zero for negative q.
pub const NEGATIVE_Q_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfdfaConfig {
    pub detrend_order: usize,
    pub scales: Vec<usize>,
    pub q_grid: Vec<f64>,
    pub bidirectional: bool,
}

/// -5 to 5 in steps of 0.25.
pub fn default_q_grid() -> Vec<f64> {
    (0..=40).map(|i| -5.0 + 0.25 * i as f64).collect()
}

/// `count` log-spaced integer scales from `min_scale` to `floor(n / 4)`,
/// duplicates removed.
pub fn log_spaced_scales(n: usize, min_scale: usize, count: usize) -> Result<Vec<usize>> {
    let max_scale = n / 4;
    if max_scale <= min_scale || count < 2 {
        return Err(Error::InsufficientData {
            len: n,
            max_scale: min_scale,
        });
    }
    let ratio = max_scale as f64 / min_scale as f64;
    let mut scales: Vec<usize> = (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            ((min_scale as f64) * ratio.powf(t)).round() as usize
        })
        .map(|s| s.clamp(min_scale, max_scale))
        .collect();
    scales.dedup();
    Ok(scales)
}

impl MfdfaConfig {
    /// Linear detrending, default q grid, 19 log-spaced scales, unidirectional.
    pub fn for_length(n: usize) -> Result<Self> {
        Ok(Self {
            detrend_order: 1,
            scales: log_spaced_scales(n, DEFAULT_MIN_SCALE, DEFAULT_SCALE_COUNT)?,
            q_grid: default_q_grid(),
            bidirectional: false,
        })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let m = self.detrend_order;
        if m == 0 || m > MAX_DETREND_ORDER {
            return Err(Error::InvalidConfig(format!(
                "detrend order must be in 1..={MAX_DETREND_ORDER}, got {m}"
            )));
        }
        if self.scales.len() < 2 {
            return Err(Error::InsufficientScales {
                needed: 2,
                got: self.scales.len(),
            });
        }
        if self.scales.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "scales must be strictly increasing".into(),
            ));
        }
        let max_scale = *self.scales.last().unwrap();
        if n < 4 * max_scale {
            return Err(Error::InsufficientData { len: n, max_scale });
        }
        if self.scales[0] < m + 2 {
            return Err(Error::DegenerateFit {
                scale: self.scales[0],
                order: m,
            });
        }
        if self.q_grid.is_empty() || self.q_grid.iter().any(|q| !q.is_finite()) {
            return Err(Error::InvalidConfig(
                "q grid must be non-empty and finite".into(),
            ));
        }
        if self.q_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "q grid must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// `floor(n / s)`.
pub fn segment_count(n: usize, s: usize) -> Result<usize> {
    if s == 0 {
        return Err(Error::InvalidConfig("scale must be positive".into()));
    }
    if s > n {
        return Err(Error::ScaleTooLarge { scale: s, len: n });
    }
    Ok(n / s)
}

/// Orthonormal polynomial basis (degrees `0..=order`) on `scale` equally
/// spaced points, so least-squares detrending is a projection.
#[derive(Debug, Clone)]
pub struct DetrendBasis {
    scale: usize,
    order: usize,
    // row-major: basis[k * scale + i]
    basis: Vec<f64>,
}

impl DetrendBasis {
    pub fn new(scale: usize, order: usize) -> Result<Self> {
        if scale < order + 2 {
            return Err(Error::DegenerateFit { scale, order });
        }
        let half = (scale - 1) as f64 / 2.0;
        let t: Vec<f64> = (0..scale).map(|i| (i as f64 - half) / half).collect();
        let mut basis = Vec::with_capacity((order + 1) * scale);
        for k in 0..=order {
            let mut col: Vec<f64> = t.iter().map(|&x| x.powi(k as i32)).collect();
            // modified Gram-Schmidt, two passes
            for _ in 0..2 {
                for j in 0..k {
                    let prev = &basis[j * scale..(j + 1) * scale];
                    let dot = numeric::sum(col.iter().zip(prev).map(|(a, b)| a * b));
                    for (c, p) in col.iter_mut().zip(prev) {
                        *c -= dot * p;
                    }
                }
            }
            let norm = numeric::sum(col.iter().map(|c| c * c)).sqrt();
            basis.extend(col.iter().map(|c| c / norm));
        }
        Ok(Self {
            scale,
            order,
            basis,
        })
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Mean squared residual of `segment` after removing its least-squares
    /// polynomial trend.
    pub fn residual_variance(&self, segment: &[f64]) -> f64 {
        debug_assert_eq!(segment.len(), self.scale);
        let mut residual = segment.to_vec();
        for k in 0..=self.order {
            let col = &self.basis[k * self.scale..(k + 1) * self.scale];
            let coef = numeric::sum(segment.iter().zip(col).map(|(y, p)| y * p));
            for (r, p) in residual.iter_mut().zip(col) {
                *r -= coef * p;
            }
        }
        numeric::sum(residual.iter().map(|r| r * r)) / self.scale as f64
    }
}

/// `F²(s, v)` for the 1-based forward segment `v`.
pub fn local_fluctuation(profile: &ProfileSeries, s: usize, v: usize, m: usize) -> Result<f64> {
    let basis = DetrendBasis::new(s, m)?;
    let count = segment_count(profile.source_length(), s)?;
    if v == 0 || v > count {
        return Err(Error::BadSegment { index: v, count });
    }
    let start = (v - 1) * s;
    Ok(basis.residual_variance(&profile.values()[start..start + s]))
}

/// `F²(s, v)` for every configured scale. Forward segments come first; in
/// bidirectional mode they are followed by segments cut from the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFluctuations {
    pub scales: Vec<usize>,
    pub values: Vec<Vec<f64>>,
}

pub fn segment_fluctuations(
    profile: &ProfileSeries,
    scales: &[usize],
    order: usize,
    bidirectional: bool,
) -> Result<SegmentFluctuations> {
    let y = profile.values();
    let n = y.len();
    let values = scales
        .par_iter()
        .map(|&s| {
            let basis = DetrendBasis::new(s, order)?;
            let count = segment_count(n, s)?;
            let mut f2 = Vec::with_capacity(if bidirectional { 2 * count } else { count });
            for v in 0..count {
                f2.push(basis.residual_variance(&y[v * s..(v + 1) * s]));
            }
            if bidirectional {
                for v in 0..count {
                    let end = n - v * s;
                    f2.push(basis.residual_variance(&y[end - s..end]));
                }
            }
            Ok(f2)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SegmentFluctuations {
        scales: scales.to_vec(),
        values,
    })
}

/// q-order power mean of segment variances, in log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QOrderMean {
    /// `ln Fq(s)`
    pub log_fq: f64,
    /// Segments with `F² = 0`, left out of the mean.
    pub excluded: usize,
    /// Some included `F²` fell below [`NEGATIVE_Q_FLOOR`] with `q < 0`.
    pub negative_q_blowup: bool,
}

/// `Fq = {mean([F²]^(q/2))}^(1/q)`; at `q = 0` the logarithmic average
/// `exp(mean(ln F²) / 2)`. Returns `None` when every `F²` is zero.
pub fn q_order_mean(f2: &[f64], q: f64) -> Option<QOrderMean> {
    let logs: Vec<f64> = f2.iter().filter(|&&v| v > 0.0).map(|v| v.ln()).collect();
    if logs.is_empty() {
        return None;
    }
    let excluded = f2.len() - logs.len();
    let negative_q_blowup = q < 0.0 && f2.iter().any(|&v| v > 0.0 && v < NEGATIVE_Q_FLOOR);
    let count = logs.len() as f64;
    let log_fq = if q == 0.0 {
        numeric::sum(logs.iter().copied()) / (2.0 * count)
    } else {
        let terms: Vec<f64> = logs.iter().map(|l| 0.5 * q * l).collect();
        (numeric::log_sum_exp(&terms) - count.ln()) / q
    };
    Some(QOrderMean {
        log_fq,
        excluded,
        negative_q_blowup,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationFunction {
    pub q: Vec<f64>,
    pub scales: Vec<usize>,
    /// `ln Fq(s)`, indexed `[q][scale]`.
    pub log_fq: Vec<Vec<f64>>,
    /// Zero-variance segments excluded, per scale.
    pub excluded_segments: Vec<usize>,
    pub negative_q_blowup: bool,
}

impl FluctuationFunction {
    pub fn fq(&self, qi: usize, si: usize) -> f64 {
        self.log_fq[qi][si].exp()
    }
}

pub fn fluctuation_function(
    flucts: &SegmentFluctuations,
    q_grid: &[f64],
) -> Result<FluctuationFunction> {
    let mut log_fq = vec![vec![0.0; flucts.scales.len()]; q_grid.len()];
    let mut excluded_segments = vec![0; flucts.scales.len()];
    let mut negative_q_blowup = false;
    for (si, (&scale, f2)) in flucts.scales.iter().zip(&flucts.values).enumerate() {
        for (qi, &q) in q_grid.iter().enumerate() {
            let mean = q_order_mean(f2, q).ok_or(Error::AllSegmentsDegenerate { scale })?;
            log_fq[qi][si] = mean.log_fq;
            excluded_segments[si] = mean.excluded;
            negative_q_blowup |= mean.negative_q_blowup;
        }
    }
    Ok(FluctuationFunction {
        q: q_grid.to_vec(),
        scales: flucts.scales.clone(),
        log_fq,
        excluded_segments,
        negative_q_blowup,
    })
}

/// Tolerance for the non-increasing check on `h(q)`.
pub const HURST_MONOTONE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurstCurve {
    pub q: Vec<f64>,
    pub h: Vec<f64>,
    pub r_squared: Vec<f64>,
    pub stderr: Vec<f64>,
    /// False when `h(q)` increases somewhere by more than the tolerance.
    pub non_increasing: bool,
}

impl HurstCurve {
    /// `h` at the grid point equal to `q`, if present.
    pub fn at(&self, q: f64) -> Option<f64> {
        self.q
            .iter()
            .position(|&x| (x - q).abs() < 1e-12)
            .map(|i| self.h[i])
    }
}

pub fn hurst_exponents(fq: &FluctuationFunction) -> Result<HurstCurve> {
    if fq.scales.len() < 2 {
        return Err(Error::InsufficientScales {
            needed: 2,
            got: fq.scales.len(),
        });
    }
    let log_s: Vec<f64> = fq.scales.iter().map(|&s| (s as f64).ln()).collect();
    let mut h = Vec::with_capacity(fq.q.len());
    let mut r_squared = Vec::with_capacity(fq.q.len());
    let mut stderr = Vec::with_capacity(fq.q.len());
    for row in &fq.log_fq {
        let finite = row.iter().filter(|v| v.is_finite()).count();
        if finite < 2 {
            return Err(Error::InsufficientScales {
                needed: 2,
                got: finite,
            });
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = log_s
            .iter()
            .zip(row)
            .filter(|(_, y)| y.is_finite())
            .map(|(&x, &y)| (x, y))
            .unzip();
        let fit = numeric::fit_line(&xs, &ys).ok_or(Error::InsufficientScales {
            needed: 2,
            got: xs.len(),
        })?;
        h.push(fit.slope);
        r_squared.push(fit.r_squared);
        stderr.push(fit.slope_stderr);
    }
    let non_increasing = h.windows(2).all(|w| w[1] <= w[0] + HURST_MONOTONE_TOL);
    Ok(HurstCurve {
        q: fq.q.clone(),
        h,
        r_squared,
        stderr,
        non_increasing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfdfaResult {
    pub config: MfdfaConfig,
    pub segments: SegmentFluctuations,
    pub fluctuation: FluctuationFunction,
    pub hurst: HurstCurve,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct MfdfaJson {
    pub scales: Vec<usize>,
    pub q: Vec<f64>,
    pub log_fq: Vec<Vec<f64>>,
    pub h: Vec<f64>,
    pub r2: Vec<f64>,
}

impl MfdfaResult {
    pub fn to_json(&self) -> MfdfaJson {
        MfdfaJson {
            scales: self.fluctuation.scales.clone(),
            q: self.fluctuation.q.clone(),
            log_fq: self.fluctuation.log_fq.clone(),
            h: self.hurst.h.clone(),
            r2: self.hurst.r_squared.clone(),
        }
    }

    /// One row per `(q, s)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::InvalidParameter(format!("CSV write failed: {e}"));
        w.write_record(["q", "scale", "log_fq", "fq"])
            .map_err(csv_err)?;
        let f = &self.fluctuation;
        for (qi, q) in f.q.iter().enumerate() {
            for (si, s) in f.scales.iter().enumerate() {
                w.write_record([
                    q.to_string(),
                    s.to_string(),
                    f.log_fq[qi][si].to_string(),
                    f.fq(qi, si).to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub fn run_mfdfa(ts: &TimeSeries, cfg: &MfdfaConfig) -> Result<MfdfaResult> {
    if let Some(&max_scale) = cfg.scales.last() {
        if ts.len() < 4 * max_scale {
            return Err(Error::InsufficientData {
                len: ts.len(),
                max_scale,
            });
        }
    }
    cfg.validate(ts.len())?;
    let profile = series::profile(ts)?;
    let segments =
        segment_fluctuations(&profile, &cfg.scales, cfg.detrend_order, cfg.bidirectional)?;
    let fluctuation = fluctuation_function(&segments, &cfg.q_grid)?;
    let hurst = hurst_exponents(&fluctuation)?;
    Ok(MfdfaResult {
        config: cfg.clone(),
        segments,
        fluctuation,
        hurst,
    })
}
