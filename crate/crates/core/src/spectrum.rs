//! Singularity spectrum from the generalized Hurst exponent.
//!
//! `τ(q) = q h(q) - 1`, `α = h + q h'(q)`, `f(α) = q (α - h) + 1`. The
//! spectrum is summarized by a least-squares parabola
//! `f(α) = A (α - α₀)² + B (α - α₀) + C` with `C = 1` pinned at the observed
//! peak `α₀`; the width `W` is the distance between the parabola's zeros.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mfdfa::HurstCurve;

/// Spread of α below which a spectrum is treated as a single point.
pub const MONOFRACTAL_ALPHA_SPREAD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCurve {
    pub q: Vec<f64>,
    pub tau: Vec<f64>,
}

pub fn scaling_exponents(h: &HurstCurve) -> ScalingCurve {
    ScalingCurve {
        q: h.q.clone(),
        tau: h.q.iter().zip(&h.h).map(|(q, h)| q * h - 1.0).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub q: f64,
    pub alpha: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularitySpectrum {
    pub points: Vec<SpectrumPoint>,
}

impl SingularitySpectrum {
    pub fn from_hurst(h: &HurstCurve) -> Result<Self> {
        singularity_spectrum(&h.q, &h.h)
    }

    pub fn alpha_range(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.alpha), hi.max(p.alpha))
            })
    }
}

/// `h'(q)` by central differences inside the grid, one-sided at the ends.
fn hurst_derivative(q: &[f64], h: &[f64]) -> Vec<f64> {
    let n = q.len();
    (0..n)
        .map(|i| {
            let (lo, hi) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            (h[hi] - h[lo]) / (q[hi] - q[lo])
        })
        .collect()
}

pub fn singularity_spectrum(q: &[f64], h: &[f64]) -> Result<SingularitySpectrum> {
    assert_eq!(q.len(), h.len(), "q and h must have equal length");
    if q.len() < 3 {
        return Err(Error::InsufficientQPoints(q.len()));
    }
    let dh = hurst_derivative(q, h);
    let points = q
        .iter()
        .zip(h)
        .zip(dh)
        .map(|((&q, &h), dh)| {
            let alpha = h + q * dh;
            SpectrumPoint {
                q,
                alpha,
                f: q * (alpha - h) + 1.0,
            }
        })
        .collect();
    Ok(SingularitySpectrum { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumFlag {
    /// All α coincide; width is zero by definition.
    MonofractalDegenerate,
    /// The fitted parabola opens upward; `W` is the raw α range.
    NonConcaveFallback,
}

impl SpectrumFlag {
    pub fn name(self) -> &'static str {
        match self {
            SpectrumFlag::MonofractalDegenerate => "monofractal_degenerate",
            SpectrumFlag::NonConcaveFallback => "non_concave",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFit {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub alpha0: f64,
    #[serde(rename = "W")]
    pub width: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Raw support of the estimated spectrum, for diagnostics.
    pub alpha_min: f64,
    pub alpha_max: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<SpectrumFlag>,
}

impl SpectrumFit {
    pub fn is_monofractal(&self) -> bool {
        self.flags.contains(&SpectrumFlag::MonofractalDegenerate)
    }

    pub fn csv_header() -> &'static str {
        "A,B,C,alpha0,W,alpha1,alpha2,alpha_min,alpha_max"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.a,
            self.b,
            self.c,
            self.alpha0,
            self.width,
            self.alpha1,
            self.alpha2,
            self.alpha_min,
            self.alpha_max
        )
    }
}

pub fn fit_spectrum(spec: &SingularitySpectrum) -> Result<SpectrumFit> {
    let fit = fit_spectrum_or_fallback(spec)?;
    if fit.flags.contains(&SpectrumFlag::NonConcaveFallback) {
        return Err(Error::NonConcaveSpectrum {
            a: fit.a,
            fallback_width: fit.width,
        });
    }
    Ok(fit)
}

/// Like [`fit_spectrum`], but a convex fit yields `W = alpha_max - alpha_min`
/// flagged [`SpectrumFlag::NonConcaveFallback`] instead of an error.
pub fn fit_spectrum_or_fallback(spec: &SingularitySpectrum) -> Result<SpectrumFit> {
    let pts = &spec.points;
    let (alpha_min, alpha_max) = spec.alpha_range();
    if pts.is_empty() {
        return Err(Error::InsufficientSpectrumPoints(0));
    }
    // peak: largest f, ties to the smaller alpha
    let peak = pts
        .iter()
        .copied()
        .reduce(|best, p| {
            if p.f > best.f || (p.f == best.f && p.alpha < best.alpha) {
                p
            } else {
                best
            }
        })
        .unwrap();
    let alpha0 = peak.alpha;

    if alpha_max - alpha_min <= MONOFRACTAL_ALPHA_SPREAD {
        return Ok(SpectrumFit {
            a: 0.0,
            b: 0.0,
            c: 1.0,
            alpha0,
            width: 0.0,
            alpha1: alpha0,
            alpha2: alpha0,
            alpha_min,
            alpha_max,
            flags: vec![SpectrumFlag::MonofractalDegenerate],
        });
    }

    let mut distinct: Vec<f64> = pts.iter().map(|p| p.alpha).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() <= MONOFRACTAL_ALPHA_SPREAD);
    if distinct.len() < 3 {
        return Err(Error::InsufficientSpectrumPoints(distinct.len()));
    }

    // minimize sum (f - 1 - A d² - B d)² over A, B
    let (mut s4, mut s3, mut s2, mut g2, mut g1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in pts {
        let d = p.alpha - alpha0;
        let g = p.f - 1.0;
        s4 += d.powi(4);
        s3 += d.powi(3);
        s2 += d * d;
        g2 += g * d * d;
        g1 += g * d;
    }
    let det = s4 * s2 - s3 * s3;
    if det.abs() <= f64::EPSILON * s4 * s2 {
        return Err(Error::InsufficientSpectrumPoints(distinct.len()));
    }
    let a = (g2 * s2 - g1 * s3) / det;
    let b = (s4 * g1 - s3 * g2) / det;
    if a >= 0.0 {
        return Ok(SpectrumFit {
            a,
            b,
            c: 1.0,
            alpha0,
            width: alpha_max - alpha_min,
            alpha1: alpha_max,
            alpha2: alpha_min,
            alpha_min,
            alpha_max,
            flags: vec![SpectrumFlag::NonConcaveFallback],
        });
    }
    let root = (b * b - 4.0 * a).sqrt();
    let width = root / (-a);
    // roots of A d² + B d + 1 = 0
    let d_hi = (-b - root) / (2.0 * a);
    let d_lo = (-b + root) / (2.0 * a);
    Ok(SpectrumFit {
        a,
        b,
        c: 1.0,
        alpha0,
        width,
        alpha1: alpha0 + d_hi,
        alpha2: alpha0 + d_lo,
        alpha_min,
        alpha_max,
        flags: Vec::new(),
    })
}

pub fn width(fit: &SpectrumFit) -> f64 {
    fit.width
}

/// Spectrum and fit straight from a Hurst curve.
pub fn analyze_hurst(h: &HurstCurve) -> Result<(SingularitySpectrum, SpectrumFit)> {
    let spec = SingularitySpectrum::from_hurst(h)?;
    let fit = fit_spectrum(&spec)?;
    Ok((spec, fit))
}
