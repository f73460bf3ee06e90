//! Command-line front end for `mfeeg-core`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use mfeeg_core::config::RunConfig;
use mfeeg_core::decompose::{self, FilterShape, RhythmMethod, StimulusBand};
use mfeeg_core::mfdfa::{run_mfdfa, MfdfaConfig};
use mfeeg_core::pipeline::{self, SubjectRecording};
use mfeeg_core::protocol::{self, EegRecording, ANALYZED_ELECTRODES};
use mfeeg_core::report::{self, AnalysisReport};
use mfeeg_core::spectrum::{fit_spectrum_or_fallback, SingularitySpectrum};
use mfeeg_core::{audio, series, synth, RandomSeed, TimeSeries};

#[derive(Debug, Parser)]
#[command(
    name = "mfeeg",
    version,
    about = "Multifractal analysis of band-split music stimuli and EEG rhythms"
)]
pub struct Cli {
    /// Worker threads for parallel stages (defaults to the number of cores).
    #[arg(long, global = true, env = "MFEEG_WORKERS")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a WAV clip into the five stimulus bands (band1.wav .. band5.wav).
    SplitBands(SplitBandsArgs),
    /// MFDFA and singularity-spectrum width of a single series.
    Mfdfa(MfdfaArgs),
    /// Full EEG pipeline over one or more recordings.
    Analyze(AnalyzeArgs),
    /// Write a synthetic test signal.
    Synth(SynthArgs),
    /// Aggregate listening-test response sheets into the non-recognition table.
    Listening(ListeningArgs),
    /// Re-emit report files from a saved report.json.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct OutDir {
    /// Output directory.
    #[arg(long, env = "MFEEG_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Shape {
    Brick,
    Cosine,
}

#[derive(Debug, Args)]
pub struct SplitBandsArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub out: OutDir,
    #[arg(long, value_enum, default_value = "brick")]
    pub shape: Shape,
    /// Roll-off width for `--shape cosine`.
    #[arg(long, default_value_t = 50.0)]
    pub transition_hz: f64,
}

#[derive(Debug, Args)]
pub struct MfdfaArgs {
    /// Single-column CSV with a one-line header.
    pub input: PathBuf,
    /// Where to write the JSON result (default `<out-dir>/result.json`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub out_dir: OutDir,
    /// Also write `ln Fq(s)` rows to this CSV.
    #[arg(long)]
    pub fq_csv: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub fs: Option<f64>,
    #[arg(long)]
    pub order: Option<usize>,
    /// Comma-separated scales in samples.
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<usize>>,
    /// Powers of two from the minimum scale to a quarter of the length.
    #[arg(long, conflicts_with = "scales")]
    pub dyadic_scales: bool,
    /// Smallest scale when scales are generated (default 16).
    #[arg(long, conflicts_with = "scales")]
    pub min_scale: Option<usize>,
    #[arg(long)]
    pub bidirectional: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// EEG CSV files, one per subject; the file stem is the subject id.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub out: OutDir,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sampling rate; otherwise taken from the config or a `<stem>.json` sidecar.
    #[arg(long)]
    pub fs: Option<f64>,
    #[arg(long, value_enum)]
    pub rhythm_method: Option<MethodArg>,
    /// Analyze band signals instead of their envelopes.
    #[arg(long)]
    pub no_envelope: bool,
    /// IMFs to drop, comma-separated; `none` disables EMD.
    #[arg(long)]
    pub emd_drop: Option<String>,
    #[arg(long)]
    pub baseline: Option<String>,
    #[arg(long)]
    pub markers: Option<PathBuf>,
    #[arg(long)]
    pub clips: Option<u8>,
    #[arg(long, value_delimiter = ',')]
    pub electrodes: Option<Vec<String>>,
    #[arg(long)]
    pub bidirectional: bool,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Fft,
    Dwt,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(subcommand)]
    pub kind: SynthKind,
}

#[derive(Debug, Subcommand)]
pub enum SynthKind {
    /// Binomial multiplicative cascade of length 2^k.
    Cascade {
        #[arg(long, default_value_t = 16)]
        k: u32,
        #[arg(long, default_value_t = 0.75)]
        a: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fractional Gaussian noise.
    Fgn {
        #[arg(long, default_value_t = 65536)]
        n: usize,
        #[arg(long)]
        hurst: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Standard normal white noise.
    White {
        #[arg(long, default_value_t = 65536)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        fs: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pure sine; written as WAV when the output ends in `.wav`.
    Tone {
        #[arg(long)]
        freq: f64,
        #[arg(long)]
        fs: f64,
        #[arg(long)]
        duration: f64,
        #[arg(long, default_value_t = 0.5)]
        amplitude: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Multichannel EEG-like recording spanning the protocol, plus sidecar.
    Eeg {
        #[arg(long, default_value_t = 4)]
        clips: u8,
        #[arg(long, default_value_t = 256.0)]
        fs: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_delimiter = ',')]
        channels: Option<Vec<String>>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ListeningArgs {
    /// CSV `subject,clip,part1,...,part5`.
    pub sheets: PathBuf,
    /// Table destination; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub report_json: PathBuf,
    #[command(flatten)]
    pub out: OutDir,
}

pub fn run(cli: Cli) -> Result<()> {
    let workers = cli.workers;
    if workers == Some(0) {
        bail!("--workers must be at least 1");
    }
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = workers {
            b = b.num_threads(n);
        }
        b.build().context("building worker pool")?
    };
    pool.install(|| match cli.command {
        Command::SplitBands(a) => split_bands(&a).map(|_| ()),
        Command::Mfdfa(a) => mfdfa(&a).map(|_| ()),
        Command::Analyze(a) => analyze(&a).map(|_| ()),
        Command::Synth(a) => synth_cmd(&a),
        Command::Listening(a) => listening(&a),
        Command::Report(a) => report_cmd(&a),
    })
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn provenance(inputs: &[PathBuf]) -> Result<serde_json::Value> {
    let files = inputs
        .iter()
        .map(|p| {
            Ok(serde_json::json!({
                "path": p.display().to_string(),
                "sha256": sha256_file(p)?,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(serde_json::json!({
        "tool": "mfeeg",
        "version": env!("CARGO_PKG_VERSION"),
        "inputs": files,
    }))
}

/// Bands are scaled to the input RMS; bands carrying less than 1e-6 of the
/// input energy are left as filtered so that silence is not amplified. If
/// any normalized band would clip, all of them are scaled down together.
pub fn split_bands(args: &SplitBandsArgs) -> Result<Vec<PathBuf>> {
    let input = audio::read_wav(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let shape = match args.shape {
        Shape::Brick => FilterShape::BrickWall,
        Shape::Cosine => FilterShape::RaisedCosine {
            transition_hz: args.transition_hz,
        },
    };
    let bands = decompose::split_bands_shaped(&input, shape)?;
    let target = input.rms();
    let mut out: Vec<TimeSeries> = bands
        .into_iter()
        .map(|b| {
            if b.energy() <= 1e-6 * input.energy() {
                Ok(b)
            } else {
                decompose::normalize(&b, target)
            }
        })
        .collect::<mfeeg_core::Result<_>>()?;
    let peak = out
        .iter()
        .flat_map(|b| b.samples().iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 1.0 {
        out = out.iter().map(|b| b.scaled(1.0 / peak)).collect();
    }
    fs::create_dir_all(&args.out.out_dir)
        .with_context(|| format!("creating {}", args.out.out_dir.display()))?;
    let mut written = Vec::new();
    for (band, ts) in StimulusBand::ALL.iter().zip(&out) {
        let path = args.out.out_dir.join(format!("band{}.wav", band.number()));
        audio::write_wav(&path, ts)?;
        println!("{}: {} (rms {:.6})", band.spec(), path.display(), ts.rms());
        written.push(path);
    }
    Ok(written)
}

fn dyadic_scales(n: usize, min_scale: usize) -> Vec<usize> {
    (0..usize::BITS)
        .map(|j| 1usize << j)
        .skip_while(|&s| s < min_scale)
        .take_while(|&s| s <= n / 4)
        .collect()
}

pub fn mfdfa(args: &MfdfaArgs) -> Result<PathBuf> {
    let mut settings = match &args.config {
        Some(p) => RunConfig::from_json_file(p)?.mfdfa,
        None => Default::default(),
    };
    if let Some(m) = args.order {
        settings.detrend_order = m;
    }
    if args.bidirectional {
        settings.bidirectional = true;
    }
    let fs_hz = args.fs.unwrap_or(1.0);
    let ts = series::read_series_csv(&args.input, fs_hz)?;
    if let Some(m) = args.min_scale {
        settings.min_scale = m;
    }
    if let Some(s) = &args.scales {
        settings.scales = Some(s.clone());
    } else if args.dyadic_scales {
        settings.scales = Some(dyadic_scales(ts.len(), settings.min_scale));
    }
    let cfg: MfdfaConfig = settings.resolve(ts.len())?;
    let result = run_mfdfa(&ts, &cfg)?;
    let spectrum = SingularitySpectrum::from_hurst(&result.hurst)?;
    let fit = fit_spectrum_or_fallback(&spectrum)?;
    let doc = serde_json::json!({
        "provenance": provenance(std::slice::from_ref(&args.input))?,
        "config": cfg,
        "fs_hz": fs_hz,
        "mfdfa": result.to_json(),
        "hurst": result.hurst,
        "excluded_segments": result.fluctuation.excluded_segments,
        "negative_q_blowup": result.fluctuation.negative_q_blowup,
        "spectrum": spectrum.points,
        "fit": fit,
    });
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.out_dir.out_dir.join("result.json"));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(&out, serde_json::to_string_pretty(&doc)? + "\n")
        .with_context(|| format!("writing {}", out.display()))?;
    if let Some(path) = &args.fq_csv {
        let file =
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        result.write_csv(std::io::BufWriter::new(file))?;
    }
    println!(
        "h(2) = {}  W = {}{}",
        report::sig6(result.hurst.at(2.0).unwrap_or(f64::NAN)),
        report::sig6(fit.width),
        if fit.flags.is_empty() {
            String::new()
        } else {
            format!(
                "  [{}]",
                fit.flags
                    .iter()
                    .map(|f| f.name())
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        }
    );
    Ok(out)
}

/// Defaults, then the config file, then flags.
pub fn resolve_run_config(args: &AnalyzeArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::from_json_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(fs) = args.fs {
        cfg.fs_hz = Some(fs);
    }
    if let Some(m) = args.rhythm_method {
        cfg.rhythm_method = match m {
            MethodArg::Fft => RhythmMethod::Fft,
            MethodArg::Dwt => RhythmMethod::Dwt,
        };
    }
    if args.no_envelope {
        cfg.envelope = false;
    }
    if let Some(drop) = &args.emd_drop {
        cfg.emd_drop = if drop.trim() == "none" {
            Vec::new()
        } else {
            drop.split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .with_context(|| format!("--emd-drop: '{s}' is not an IMF index"))
                })
                .collect::<Result<_>>()?
        };
    }
    if let Some(b) = &args.baseline {
        cfg.baseline = b.clone();
    }
    if let Some(m) = &args.markers {
        cfg.markers = Some(m.clone());
    }
    if let Some(c) = args.clips {
        cfg.n_clips = c;
    }
    if let Some(e) = &args.electrodes {
        cfg.electrodes = e.clone();
    }
    if args.bidirectional {
        cfg.mfdfa.bidirectional = true;
    }
    if let Some(m) = args.order {
        cfg.mfdfa.detrend_order = m;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn subject_id(path: &Path) -> String {
    path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

pub fn analyze(args: &AnalyzeArgs) -> Result<Vec<PathBuf>> {
    let mut cfg = resolve_run_config(args)?;
    let mut subjects = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        let fs_hz = match cfg.fs_hz {
            Some(fs) => fs,
            None => {
                let sidecar = protocol::sidecar_path(path);
                if !sidecar.exists() {
                    bail!(
                        "no sampling rate for {}: pass --fs, set fs_hz in the config, or provide {}",
                        path.display(),
                        sidecar.display()
                    );
                }
                protocol::read_sidecar(&sidecar)?
            }
        };
        subjects.push(SubjectRecording {
            subject_id: subject_id(path),
            recording: EegRecording::read_csv(path, fs_hz)?,
        });
    }
    if cfg.fs_hz.is_none() {
        let rates: Vec<f64> = subjects.iter().map(|s| s.recording.fs_hz).collect();
        if rates.windows(2).any(|w| w[0] != w[1]) {
            bail!("recordings have different sampling rates: {rates:?}");
        }
        cfg.fs_hz = rates.first().copied();
    }
    cfg.validate()?;
    let timeline = pipeline::resolve_timeline(&cfg)?;
    let records = pipeline::analyze(&subjects, &cfg, &timeline)?;

    let mut inputs = args.inputs.clone();
    if let Some(m) = &cfg.markers {
        inputs.push(m.clone());
    }
    let metadata = serde_json::json!({
        "provenance": provenance(&inputs)?,
        "config": cfg,
        "rhythm_method": cfg.rhythm_method.name(),
        "subjects": subjects.iter().map(|s| s.subject_id.clone()).collect::<Vec<_>>(),
        "timeline": {
            "n_clips": timeline.n_clips,
            "total_duration_s": timeline.total_duration_s(),
        },
    });
    let report = AnalysisReport::from_records(records, metadata)?;
    let written = report::emit_report(&report, &args.out.out_dir)?;
    println!(
        "{} cells from {} subject(s) written to {}",
        report.cells.len(),
        subjects.len(),
        args.out.out_dir.display()
    );
    Ok(written)
}

fn write_series(out: &Path, ts: &TimeSeries) -> Result<()> {
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    if out
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
    {
        audio::write_wav(out, ts)?;
    } else {
        series::write_series_csv(out, ts, "value")?;
    }
    println!(
        "{} samples at {} Hz -> {}",
        ts.len(),
        ts.sample_rate_hz(),
        out.display()
    );
    Ok(())
}

fn synth_cmd(args: &SynthArgs) -> Result<()> {
    match &args.kind {
        SynthKind::Cascade { k, a, out } => write_series(
            out,
            &synth::binomial_cascade(synth::CascadeParams { k: *k, a: *a })?,
        ),
        SynthKind::Fgn {
            n,
            hurst,
            seed,
            out,
        } => write_series(
            out,
            &synth::fgn(synth::FgnParams {
                n: *n,
                hurst: *hurst,
                seed: RandomSeed(*seed),
            })?,
        ),
        SynthKind::White { n, seed, fs, out } => {
            write_series(out, &synth::white_noise_at(*n, *fs, RandomSeed(*seed))?)
        }
        SynthKind::Tone {
            freq,
            fs,
            duration,
            amplitude,
            out,
        } => write_series(out, &synth::tone(*freq, *fs, *duration, *amplitude)?),
        SynthKind::Eeg {
            clips,
            fs,
            seed,
            channels,
            out,
        } => {
            let names: Vec<String> = channels
                .clone()
                .unwrap_or_else(|| ANALYZED_ELECTRODES.iter().map(|s| s.to_string()).collect());
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let duration = protocol::build_timeline(*clips)?.total_duration_s();
            let rec = pipeline::synthetic_eeg(&refs, duration, *fs, RandomSeed(*seed))?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
            rec.write_csv(out)?;
            let sidecar = protocol::sidecar_path(out);
            fs::write(
                &sidecar,
                serde_json::to_string(&serde_json::json!({ "fs_hz": fs }))? + "\n",
            )
            .with_context(|| format!("writing {}", sidecar.display()))?;
            println!(
                "{} channels x {} samples ({} s at {} Hz) -> {}",
                names.len(),
                rec.len(),
                duration,
                fs,
                out.display()
            );
            Ok(())
        }
    }
}

pub fn listening_table(sheets: &Path) -> Result<String> {
    let sheets = protocol::read_response_sheets(sheets)?;
    Ok(protocol::aggregate_responses(&sheets)?.to_csv())
}

fn listening(args: &ListeningArgs) -> Result<()> {
    let table = listening_table(&args.sheets)?;
    match &args.out {
        Some(path) => {
            fs::write(path, &table).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{table}"),
    }
    Ok(())
}

fn report_cmd(args: &ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&args.report_json)
        .with_context(|| format!("reading {}", args.report_json.display()))?;
    let report = AnalysisReport::from_json(&text)?;
    let written = report::emit_report(&report, &args.out.out_dir)?;
    println!(
        "{} files written to {}",
        written.len(),
        args.out.out_dir.display()
    );
    Ok(())
}
