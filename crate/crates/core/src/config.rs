//! Run configuration for the analysis pipeline.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decompose::{RhythmMethod, RhythmSpec};
use crate::error::{Error, Result};
use crate::mfdfa::{self, MfdfaConfig, DEFAULT_MIN_SCALE, DEFAULT_SCALE_COUNT, MAX_DETREND_ORDER};
use crate::protocol::{self, ElectrodeRegistry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfdfaSettings {
    pub detrend_order: usize,
    /// Explicit scales; when absent, `scale_count` log-spaced scales from
    /// `min_scale` to a quarter of the series length.
    pub scales: Option<Vec<usize>>,
    pub min_scale: usize,
    pub scale_count: usize,
    pub q_grid: Vec<f64>,
    pub bidirectional: bool,
}

impl Default for MfdfaSettings {
    fn default() -> Self {
        Self {
            detrend_order: 1,
            scales: None,
            min_scale: DEFAULT_MIN_SCALE,
            scale_count: DEFAULT_SCALE_COUNT,
            q_grid: mfdfa::default_q_grid(),
            bidirectional: false,
        }
    }
}

impl MfdfaSettings {
    pub fn resolve(&self, n: usize) -> Result<MfdfaConfig> {
        let scales = match &self.scales {
            Some(s) => s.clone(),
            None => mfdfa::log_spaced_scales(n, self.min_scale, self.scale_count)?,
        };
        let cfg = MfdfaConfig {
            detrend_order: self.detrend_order,
            scales,
            q_grid: self.q_grid.clone(),
            bidirectional: self.bidirectional,
        };
        cfg.validate(n)?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.detrend_order == 0 || self.detrend_order > MAX_DETREND_ORDER {
            return Err(Error::InvalidConfig(format!(
                "mfdfa.detrend_order must be in 1..={MAX_DETREND_ORDER}, got {}",
                self.detrend_order
            )));
        }
        if self.q_grid.len() < 3 {
            return Err(Error::InsufficientQPoints(self.q_grid.len()));
        }
        if self.q_grid.iter().any(|q| !q.is_finite())
            || self.q_grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidConfig(
                "mfdfa.q_grid must be finite and strictly increasing".into(),
            ));
        }
        match &self.scales {
            Some(s) => {
                if s.len() < 2 || s.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidConfig(
                        "mfdfa.scales needs at least 2 strictly increasing values".into(),
                    ));
                }
                if s[0] < self.detrend_order + 2 {
                    return Err(Error::DegenerateFit {
                        scale: s[0],
                        order: self.detrend_order,
                    });
                }
            }
            None => {
                if self.scale_count < 2 || self.min_scale < self.detrend_order + 2 {
                    return Err(Error::InvalidConfig(format!(
                        "mfdfa needs scale_count >= 2 and min_scale >= {}",
                        self.detrend_order + 2
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mfdfa: MfdfaSettings,
    pub rhythms: Vec<RhythmSpec>,
    pub rhythm_method: RhythmMethod,
    /// Analyze the amplitude envelope of each rhythm rather than the band signal.
    pub envelope: bool,
    /// 1-based IMFs removed before rhythm extraction; empty skips EMD.
    pub emd_drop: Vec<usize>,
    /// Timeline label of the condition used as the rest baseline.
    pub baseline: String,
    pub electrodes: Vec<String>,
    pub n_clips: u8,
    pub fs_hz: Option<f64>,
    pub markers: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mfdfa: MfdfaSettings::default(),
            rhythms: RhythmSpec::standard_set(),
            rhythm_method: RhythmMethod::Fft,
            envelope: true,
            emd_drop: vec![1],
            baseline: "baseline".into(),
            electrodes: ElectrodeRegistry::default().analyzed,
            n_clips: 4,
            fs_hz: None,
            markers: None,
            seed: 42,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// Checks everything that does not depend on the recording itself.
    pub fn validate(&self) -> Result<()> {
        self.mfdfa.validate()?;
        if self.rhythms.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one rhythm is required".into(),
            ));
        }
        let mut names: Vec<_> = self.rhythms.iter().map(|r| r.rhythm).collect();
        names.sort();
        names.dedup();
        if names.len() != self.rhythms.len() {
            return Err(Error::InvalidConfig("rhythms must be distinct".into()));
        }
        if let Some(fs) = self.fs_hz {
            if !(fs.is_finite() && fs > 0.0) {
                return Err(Error::BadSampleRate(fs));
            }
            for r in &self.rhythms {
                r.band.check(fs / 2.0)?;
            }
        }
        if let Some(&bad) = self.emd_drop.iter().find(|&&i| i == 0) {
            return Err(Error::BadImfIndex {
                index: bad,
                count: 0,
            });
        }
        if self.electrodes.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one electrode is required".into(),
            ));
        }
        ElectrodeRegistry::with_analyzed(self.electrodes.clone())?;
        let timeline = protocol::build_timeline(self.n_clips)?;
        match timeline.find(&self.baseline) {
            Some(c) if !c.kind.is_stimulus() => Ok(()),
            Some(_) => Err(Error::InvalidConfig(format!(
                "baseline '{}' is a stimulus condition",
                self.baseline
            ))),
            None => Err(Error::UnknownMarker(self.baseline.clone())),
        }
    }
}
