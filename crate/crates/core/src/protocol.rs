//! Experimental design: stimulus template, EEG timeline, recordings and the
//! listening test.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decompose::StimulusBand;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const BASELINE_S: f64 = 60.0;
pub const STIMULUS_S: f64 = 20.0;
pub const GAP_S: f64 = 5.0;
pub const BREAK_S: f64 = 30.0;
/// Six stimuli, five gaps and the closing rest.
pub const CLIP_BLOCK_S: f64 = 6.0 * STIMULUS_S + 5.0 * GAP_S + BREAK_S;

/// Bands in presentation order after the original clip; position `i` is
/// listening-test part `i + 1`.
pub const PRESENTATION_ORDER: [StimulusBand; 5] = [
    StimulusBand::Band3,
    StimulusBand::Band2,
    StimulusBand::Band5,
    StimulusBand::Band4,
    StimulusBand::Band1,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestKind {
    /// Opening no-music period.
    Baseline,
    /// Short silence between two stimuli.
    Gap,
    /// Rest closing a clip block.
    Break,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ConditionKind {
    Rest {
        rest: RestKind,
        clip: Option<u8>,
        index: u8,
    },
    Original {
        clip: u8,
    },
    Band {
        clip: u8,
        band: StimulusBand,
    },
}

impl ConditionKind {
    pub fn label(&self) -> String {
        match *self {
            ConditionKind::Rest {
                rest: RestKind::Baseline,
                ..
            } => "baseline".into(),
            ConditionKind::Rest {
                rest: RestKind::Gap,
                clip,
                index,
            } => {
                format!("clip{}_gap{}", clip.unwrap_or(0), index)
            }
            ConditionKind::Rest {
                rest: RestKind::Break,
                clip,
                ..
            } => {
                format!("clip{}_rest", clip.unwrap_or(0))
            }
            ConditionKind::Original { clip } => format!("clip{clip}_original"),
            ConditionKind::Band { clip, band } => format!("clip{clip}_band{}", band.number()),
        }
    }

    pub fn is_stimulus(&self) -> bool {
        !matches!(self, ConditionKind::Rest { .. })
    }

    pub fn is_baseline(&self) -> bool {
        matches!(
            self,
            ConditionKind::Rest {
                rest: RestKind::Baseline,
                ..
            }
        )
    }

    pub fn clip(&self) -> Option<u8> {
        match *self {
            ConditionKind::Rest { clip, .. } => clip,
            ConditionKind::Original { clip } | ConditionKind::Band { clip, .. } => Some(clip),
        }
    }

    /// `"original"`, `"band1"` .. `"band5"` for stimuli.
    pub fn stimulus_name(&self) -> Option<String> {
        match *self {
            ConditionKind::Original { .. } => Some("original".into()),
            ConditionKind::Band { band, .. } => Some(format!("band{}", band.number())),
            ConditionKind::Rest { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub kind: ConditionKind,
    pub start_s: f64,
    pub end_s: f64,
}

impl Condition {
    pub fn label(&self) -> String {
        self.kind.label()
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}, {}) s", self.label(), self.start_s, self.end_s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTimeline {
    pub conditions: Vec<Condition>,
    pub n_clips: u8,
}

impl ProtocolTimeline {
    pub fn total_duration_s(&self) -> f64 {
        self.conditions.last().map_or(0.0, |c| c.end_s)
    }

    pub fn find(&self, label: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.label() == label)
    }

    pub fn baseline(&self) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.kind.is_baseline())
    }

    pub fn stimuli(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| c.kind.is_stimulus())
    }

    /// Replaces the bounds of every condition named by a marker.
    pub fn with_markers(&self, markers: &[Marker]) -> Result<Self> {
        let mut out = self.clone();
        for m in markers {
            if !(m.start_s.is_finite()
                && m.end_s.is_finite()
                && m.start_s >= 0.0
                && m.end_s > m.start_s)
            {
                return Err(Error::InvalidParameter(format!(
                    "marker '{}' has invalid bounds [{}, {})",
                    m.label, m.start_s, m.end_s
                )));
            }
            let cond = out
                .conditions
                .iter_mut()
                .find(|c| c.label() == m.label)
                .ok_or_else(|| Error::UnknownMarker(m.label.clone()))?;
            cond.start_s = m.start_s;
            cond.end_s = m.end_s;
        }
        Ok(out)
    }
}

pub fn build_timeline(n_clips: u8) -> Result<ProtocolTimeline> {
    if n_clips == 0 {
        return Err(Error::InvalidParameter(
            "at least one clip is required".into(),
        ));
    }
    let mut conditions = Vec::with_capacity(1 + 12 * n_clips as usize);
    let mut t = 0.0;
    let mut push = |kind, len: f64| {
        conditions.push(Condition {
            kind,
            start_s: t,
            end_s: t + len,
        });
        t += len;
    };
    push(
        ConditionKind::Rest {
            rest: RestKind::Baseline,
            clip: None,
            index: 0,
        },
        BASELINE_S,
    );
    for clip in 1..=n_clips {
        push(ConditionKind::Original { clip }, STIMULUS_S);
        for (i, &band) in PRESENTATION_ORDER.iter().enumerate() {
            push(
                ConditionKind::Rest {
                    rest: RestKind::Gap,
                    clip: Some(clip),
                    index: i as u8 + 1,
                },
                GAP_S,
            );
            push(ConditionKind::Band { clip, band }, STIMULUS_S);
        }
        push(
            ConditionKind::Rest {
                rest: RestKind::Break,
                clip: Some(clip),
                index: 0,
            },
            BREAK_S,
        );
    }
    Ok(ProtocolTimeline {
        conditions,
        n_clips,
    })
}

/// Sample window `[round(start * fs), round(end * fs))`.
pub fn window(cond: &Condition, fs_hz: f64) -> (usize, usize) {
    (
        (cond.start_s * fs_hz).round() as usize,
        (cond.end_s * fs_hz).round() as usize,
    )
}

pub fn segment_recording(
    eeg: &TimeSeries,
    timeline: &ProtocolTimeline,
) -> Result<Vec<(Condition, TimeSeries)>> {
    let fs = eeg.sample_rate_hz();
    timeline
        .conditions
        .iter()
        .map(|c| {
            let (lo, hi) = window(c, fs);
            if hi > eeg.len() {
                return Err(Error::RecordingTooShort {
                    condition: c.label(),
                    end_s: c.end_s,
                    duration_s: eeg.duration_s(),
                });
            }
            Ok((c.clone(), eeg.with_samples(eeg.samples()[lo..hi].to_vec())))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub label: String,
    pub start_s: f64,
    pub end_s: f64,
}

pub fn read_markers(path: &Path) -> Result<Vec<Marker>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub const ALL_ELECTRODES: [&str; 19] = [
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T3", "C3", "Cz", "C4", "T4", "T5", "P3", "Pz",
    "P4", "T6", "O1", "O2",
];

pub const ANALYZED_ELECTRODES: [&str; 10] =
    ["F3", "F4", "F7", "F8", "T3", "T4", "T5", "T6", "O1", "O2"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElectrodeRegistry {
    pub all: Vec<String>,
    pub analyzed: Vec<String>,
}

impl Default for ElectrodeRegistry {
    fn default() -> Self {
        Self {
            all: ALL_ELECTRODES.iter().map(|s| s.to_string()).collect(),
            analyzed: ANALYZED_ELECTRODES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl ElectrodeRegistry {
    pub fn with_analyzed(analyzed: Vec<String>) -> Result<Self> {
        let reg = Self {
            analyzed,
            ..Self::default()
        };
        if let Some(bad) = reg.analyzed.iter().find(|e| !reg.is_known(e)) {
            return Err(Error::InvalidParameter(format!(
                "unknown electrode '{bad}'"
            )));
        }
        Ok(reg)
    }

    pub fn is_known(&self, label: &str) -> bool {
        self.all.iter().any(|e| e == label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EegRecording {
    pub fs_hz: f64,
    /// Column order as in the file.
    pub channels: Vec<(String, Vec<f64>)>,
}

#[derive(Deserialize)]
struct Sidecar {
    fs_hz: f64,
}

pub fn read_sidecar(path: &Path) -> Result<f64> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let s: Sidecar = serde_json::from_str(&text)?;
    if !(s.fs_hz.is_finite() && s.fs_hz > 0.0) {
        return Err(Error::BadSampleRate(s.fs_hz));
    }
    Ok(s.fs_hz)
}

/// `<stem>.json` next to the recording, if present.
pub fn sidecar_path(csv: &Path) -> std::path::PathBuf {
    csv.with_extension("json")
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

impl EegRecording {
    /// Reads `sample,F3,F4,...`; the leading sample-index column is ignored.
    pub fn read_csv(path: &Path, fs_hz: f64) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, path, fs_hz)
    }

    pub fn from_reader(reader: impl std::io::Read, path: &Path, fs_hz: f64) -> Result<Self> {
        if !(fs_hz.is_finite() && fs_hz > 0.0) {
            return Err(Error::BadSampleRate(fs_hz));
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| parse_error(path, 1, e.to_string()))?
            .clone();
        if headers.get(0) != Some("sample") || headers.len() < 2 {
            return Err(parse_error(
                path,
                1,
                "header must be 'sample' followed by electrode labels",
            ));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| parse_error(path, line, e.to_string()))?;
            if rec.len() != names.len() + 1 {
                return Err(parse_error(
                    path,
                    line,
                    format!("expected {} fields, found {}", names.len() + 1, rec.len()),
                ));
            }
            for (col, field) in columns.iter_mut().zip(rec.iter().skip(1)) {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_error(path, line, format!("'{field}' is not a number")))?;
                if !v.is_finite() {
                    return Err(parse_error(path, line, format!("'{field}' is not finite")));
                }
                col.push(v);
            }
        }
        if columns.first().map_or(true, Vec::is_empty) {
            return Err(parse_error(path, 2, "no samples"));
        }
        Ok(Self {
            fs_hz,
            channels: names.into_iter().zip(columns).collect(),
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        let mut header = vec!["sample".to_string()];
        header.extend(self.channels.iter().map(|(n, _)| n.clone()));
        w.write_record(&header).map_err(|e| csv_io(path, e))?;
        let len = self.len();
        let mut row = Vec::with_capacity(header.len());
        for i in 0..len {
            row.clear();
            row.push(i.to_string());
            row.extend(self.channels.iter().map(|(_, v)| format!("{}", v[i])));
            w.write_record(&row).map_err(|e| csv_io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, |(_, v)| v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, name: &str) -> Result<TimeSeries> {
        let (_, v) = self
            .channels
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| Error::MissingChannel(name.to_string()))?;
        TimeSeries::new(v.clone(), self.fs_hz)
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

pub const N_PARTS: usize = 5;
pub const N_SHEET_CLIPS: usize = 4;

/// Band heard in listening-test part `part` (1-based).
pub fn part_to_band(part: usize) -> Result<StimulusBand> {
    if !(1..=N_PARTS).contains(&part) {
        return Err(Error::BadPart(part));
    }
    Ok(PRESENTATION_ORDER[part - 1])
}

/// One respondent's marks: `marks[clip - 1][part - 1]` is true where the song
/// was not recognized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseSheet {
    pub subject_id: String,
    pub marks: [[bool; N_PARTS]; N_SHEET_CLIPS],
}

/// Reads `subject,clip,part1,...,part5` rows (0/1 cells), four rows per subject.
pub fn read_response_sheets(path: &Path) -> Result<Vec<ResponseSheet>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_response_sheets(file, path)
}

pub fn parse_response_sheets(
    reader: impl std::io::Read,
    path: &Path,
) -> Result<Vec<ResponseSheet>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    let expected = [
        "subject", "clip", "part1", "part2", "part3", "part4", "part5",
    ];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(parse_error(
            path,
            1,
            format!("header must be '{}'", expected.join(",")),
        ));
    }
    // subject -> (first line, per-clip rows seen)
    let mut sheets: BTreeMap<String, (usize, [Option<[bool; N_PARTS]>; N_SHEET_CLIPS])> =
        BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_error(path, line, e.to_string()))?;
        if rec.len() != expected.len() {
            return Err(parse_error(
                path,
                line,
                format!("expected {} fields, found {}", expected.len(), rec.len()),
            ));
        }
        let subject = rec[0].to_string();
        if subject.is_empty() {
            return Err(parse_error(path, line, "empty subject id"));
        }
        let clip: usize = rec[1]
            .parse()
            .ok()
            .filter(|c| (1..=N_SHEET_CLIPS).contains(c))
            .ok_or_else(|| {
                parse_error(path, line, format!("clip '{}' is not in 1..=4", &rec[1]))
            })?;
        let mut marks = [false; N_PARTS];
        for (p, mark) in marks.iter_mut().enumerate() {
            *mark = match &rec[p + 2] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(parse_error(
                        path,
                        line,
                        format!("part{} cell '{other}' must be 0 or 1", p + 1),
                    ))
                }
            };
        }
        let entry = sheets
            .entry(subject.clone())
            .or_insert((line, [None; N_SHEET_CLIPS]));
        if entry.1[clip - 1].replace(marks).is_some() {
            return Err(parse_error(
                path,
                line,
                format!("duplicate row for subject '{subject}' clip {clip}"),
            ));
        }
    }
    sheets
        .into_iter()
        .map(|(subject_id, (line, rows))| {
            let mut marks = [[false; N_PARTS]; N_SHEET_CLIPS];
            for (c, row) in rows.iter().enumerate() {
                marks[c] = row.ok_or_else(|| {
                    parse_error(
                        path,
                        line,
                        format!("subject '{subject_id}' has no row for clip {}", c + 1),
                    )
                })?;
            }
            Ok(ResponseSheet { subject_id, marks })
        })
        .collect()
}

/// Non-recognition percentages, `percent[clip - 1][band - 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecognitionTable {
    pub respondents: usize,
    pub percent: [[u32; 5]; N_SHEET_CLIPS],
}

/// `round(100 * k / n)`, halves rounded up, in integer arithmetic.
pub fn rounded_percent(k: usize, n: usize) -> u32 {
    ((200 * k + n) / (2 * n)) as u32
}

pub fn aggregate_responses(sheets: &[ResponseSheet]) -> Result<RecognitionTable> {
    if sheets.is_empty() {
        return Err(Error::NoSheets);
    }
    let n = sheets.len();
    let mut counts = [[0usize; 5]; N_SHEET_CLIPS];
    for sheet in sheets {
        for (clip, row) in sheet.marks.iter().enumerate() {
            for (p, &marked) in row.iter().enumerate() {
                if marked {
                    let band = part_to_band(p + 1)?;
                    counts[clip][band.number() as usize - 1] += 1;
                }
            }
        }
    }
    let mut percent = [[0u32; 5]; N_SHEET_CLIPS];
    for (prow, crow) in percent.iter_mut().zip(&counts) {
        for (p, &k) in prow.iter_mut().zip(crow) {
            *p = rounded_percent(k, n);
        }
    }
    Ok(RecognitionTable {
        respondents: n,
        percent,
    })
}

impl RecognitionTable {
    /// `clip,band1,...,band5` then one `clipN,...` row per clip.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("clip,band1,band2,band3,band4,band5\n");
        for (c, row) in self.percent.iter().enumerate() {
            out.push_str(&format!("clip{}", c + 1));
            for p in row {
                out.push_str(&format!(",{p}"));
            }
            out.push('\n');
        }
        out
    }
}
