//! End-to-end analysis: segment, denoise, extract rhythms, MFDFA, width.

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::decompose::{emd_denoise, envelope, extract_rhythm_with};
use crate::error::{Error, Result};
use crate::mfdfa::run_mfdfa;
use crate::protocol::{self, Condition, EegRecording, ProtocolTimeline, ANALYZED_ELECTRODES};
use crate::report::WidthRecord;
use crate::series::{RandomSeed, TimeSeries};
use crate::spectrum::{fit_spectrum_or_fallback, SingularitySpectrum};
use crate::synth;

#[derive(Debug, Clone)]
pub struct SubjectRecording {
    pub subject_id: String,
    pub recording: EegRecording,
}

/// The timeline from the config, with marker overrides applied.
pub fn resolve_timeline(cfg: &RunConfig) -> Result<ProtocolTimeline> {
    let timeline = protocol::build_timeline(cfg.n_clips)?;
    match &cfg.markers {
        Some(path) => timeline.with_markers(&protocol::read_markers(path)?),
        None => Ok(timeline),
    }
}

struct Job<'a> {
    subject: &'a str,
    electrode: &'a str,
    condition: &'a Condition,
    series: TimeSeries,
}

/// Width records for every (subject, electrode, condition, rhythm), sorted by
/// subject, electrode, timeline position and rhythm. The result does not
/// depend on the size of the rayon pool it runs in.
pub fn analyze(
    subjects: &[SubjectRecording],
    cfg: &RunConfig,
    timeline: &ProtocolTimeline,
) -> Result<Vec<WidthRecord>> {
    cfg.validate()?;
    let baseline = timeline
        .find(&cfg.baseline)
        .ok_or_else(|| Error::UnknownMarker(cfg.baseline.clone()))?;
    let conditions: Vec<&Condition> = std::iter::once(baseline)
        .chain(timeline.stimuli())
        .collect();

    let mut jobs = Vec::new();
    for s in subjects {
        for electrode in &cfg.electrodes {
            let channel = s.recording.channel(electrode)?;
            for (cond, seg) in protocol::segment_recording(&channel, timeline)? {
                if let Some(c) = conditions.iter().find(|c| c.kind == cond.kind) {
                    jobs.push(Job {
                        subject: &s.subject_id,
                        electrode,
                        condition: c,
                        series: seg,
                    });
                }
            }
        }
    }

    let nested: Vec<Vec<WidthRecord>> = jobs
        .par_iter()
        .map(|job| run_job(job, cfg))
        .collect::<Result<_>>()?;
    let mut records: Vec<WidthRecord> = nested.into_iter().flatten().collect();
    let position = |label: &str| timeline.conditions.iter().position(|c| c.label() == label);
    let electrode_rank = |e: &str| ANALYZED_ELECTRODES.iter().position(|x| *x == e);
    records.sort_by(|a, b| {
        (
            &a.subject_id,
            electrode_rank(&a.electrode),
            &a.electrode,
            position(&a.condition),
            a.rhythm,
        )
            .cmp(&(
                &b.subject_id,
                electrode_rank(&b.electrode),
                &b.electrode,
                position(&b.condition),
                b.rhythm,
            ))
    });
    Ok(records)
}

fn run_job(job: &Job<'_>, cfg: &RunConfig) -> Result<Vec<WidthRecord>> {
    let cleaned = if cfg.emd_drop.is_empty() {
        job.series.clone()
    } else {
        emd_denoise(&job.series, &cfg.emd_drop)?
    };
    let is_baseline = job.condition.label() == cfg.baseline;
    cfg.rhythms
        .iter()
        .map(|rhythm| {
            let band = extract_rhythm_with(&cleaned, rhythm, cfg.rhythm_method)?;
            let input = if cfg.envelope { envelope(&band) } else { band };
            let mcfg = cfg.mfdfa.resolve(input.len())?;
            let result = run_mfdfa(&input, &mcfg)?;
            let spectrum = SingularitySpectrum::from_hurst(&result.hurst)?;
            let fit = fit_spectrum_or_fallback(&spectrum)?;
            let mut flags: Vec<String> = fit.flags.iter().map(|f| f.name().to_string()).collect();
            if result.fluctuation.negative_q_blowup {
                flags.push("negative_q_blowup".into());
            }
            if !result.hurst.non_increasing {
                flags.push("h_not_monotone".into());
            }
            let h2_r2 =
                nearest_q(&result.hurst.q, 2.0).map_or(f64::NAN, |i| result.hurst.r_squared[i]);
            Ok(WidthRecord {
                subject_id: job.subject.to_string(),
                electrode: job.electrode.to_string(),
                rhythm: rhythm.rhythm,
                condition: if is_baseline {
                    "baseline".into()
                } else {
                    job.condition.label()
                },
                clip: if is_baseline {
                    None
                } else {
                    job.condition.kind.clip()
                },
                stimulus: if is_baseline {
                    None
                } else {
                    job.condition.kind.stimulus_name()
                },
                width: fit.width,
                a: fit.a,
                b: fit.b,
                alpha0: fit.alpha0,
                h2_r2,
                flags,
            })
        })
        .collect()
}

fn nearest_q(q: &[f64], target: f64) -> Option<usize> {
    q.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .map(|(i, _)| i)
}

/// Deterministic stand-in for a recording: per channel, theta, alpha and
/// gamma oscillations with slowly varying amplitude over persistent noise.
pub fn synthetic_eeg(
    channels: &[&str],
    duration_s: f64,
    fs_hz: f64,
    seed: RandomSeed,
) -> Result<EegRecording> {
    let n = (duration_s * fs_hz).round() as usize;
    let mut out = Vec::with_capacity(channels.len());
    for (i, name) in channels.iter().enumerate() {
        let ch_seed = RandomSeed(
            seed.0
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(i as u64 + 1),
        );
        let noise = synth::fgn(synth::FgnParams {
            n: n.max(synth::MIN_FGN_LENGTH),
            hurst: 0.7,
            seed: ch_seed,
        })?;
        let modulator = synth::fgn(synth::FgnParams {
            n: n.max(synth::MIN_FGN_LENGTH),
            hurst: 0.9,
            seed: RandomSeed(ch_seed.0 ^ 0xA5A5_A5A5_A5A5_A5A5),
        })?;
        let phase = i as f64 * 0.7;
        let samples = (0..n)
            .map(|k| {
                let t = k as f64 / fs_hz;
                let m = 1.0 + 0.3 * modulator.samples()[k].tanh();
                let w = std::f64::consts::TAU;
                10.0 * m * (w * 10.0 * t + phase).sin()
                    + 6.0 * (w * 6.0 * t + 2.0 * phase).sin()
                    + 3.0 * m * (w * 20.0 * t + 3.0 * phase).sin()
                    + 4.0 * noise.samples()[k]
            })
            .collect();
        out.push((name.to_string(), samples));
    }
    Ok(EegRecording {
        fs_hz,
        channels: out,
    })
}
