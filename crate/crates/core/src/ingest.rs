//! Reading and writing the canonical on-disk trial format.
//!
//! A dataset on disk is a manifest plus, per trial, a kinematics table and an
//! annotation table. All three are comma-delimited UTF-8 text with a header
//! row; lines starting with `#` are comments and CRLF line endings are
//! accepted on input. Writers always emit LF and format numbers with the
//! shortest representation that parses back to the same binary64 value, so
//! a file produced by [`write_kinematics`] survives a parse/write round trip
//! byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{class_from_name, Dataset, Domain, Outcome, RobotProfile, SurgemeSegment};
use crate::preprocess::project_common_features;

/// One kinematics row: timestamp plus every data channel, unmodified.
#[derive(Clone, Debug, PartialEq)]
pub struct RawFrame {
    pub timestamp: f64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub surgeme_name: String,
    pub start_ts: f64,
    pub end_ts: f64,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialManifestEntry {
    pub trial_id: String,
    pub robot: String,
    pub domain: Domain,
    pub kinematics_path: PathBuf,
    pub annotations_path: PathBuf,
}

pub const MANIFEST_HEADER: &str = "trial_id,robot,domain,kinematics_path,annotations_path";
pub const ANNOTATION_HEADER: &str = "surgeme_name,start_ts,end_ts,outcome";

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}

fn parse_number(path: &Path, row: usize, cell: &str) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| Error::format(path, Some(row), format!("non-numeric cell `{}`", cell.trim())))?;
    if !v.is_finite() {
        return Err(Error::format(path, Some(row), format!("non-finite cell `{}`", cell.trim())));
    }
    Ok(v)
}

fn looks_numeric(cell: &str) -> bool {
    cell.trim().parse::<f64>().is_ok()
}

/// Parses a kinematics table laid out as declared by `profile`.
pub fn parse_kinematics(path: &Path, profile: &RobotProfile) -> Result<Vec<RawFrame>> {
    parse_kinematics_str(&read_text(path)?, path, profile)
}

pub(crate) fn parse_kinematics_str(text: &str, path: &Path, profile: &RobotProfile) -> Result<Vec<RawFrame>> {
    let expected = 1 + profile.data_columns();
    let mut lines = data_lines(text);
    let (hrow, header) = lines
        .next()
        .ok_or_else(|| Error::format(path, None, "missing header"))?;
    let header_cells: Vec<&str> = header.split(',').collect();
    if header_cells.iter().any(|c| looks_numeric(c)) {
        return Err(Error::format(path, Some(hrow), "missing header"));
    }
    if header_cells.len() != expected {
        return Err(Error::format(
            path,
            Some(hrow),
            format!(
                "header has {} columns; profile `{}` declares {expected}",
                header_cells.len(),
                profile.name
            ),
        ));
    }
    let mut frames = Vec::new();
    for (row, line) in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != expected {
            return Err(Error::format(
                path,
                Some(row),
                format!("expected {expected} columns, found {}", cells.len()),
            ));
        }
        let timestamp = parse_number(path, row, cells[0])?;
        let values = cells[1..]
            .iter()
            .map(|c| parse_number(path, row, c))
            .collect::<Result<Vec<_>>>()?;
        frames.push(RawFrame { timestamp, values });
    }
    if frames.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(frames)
}

/// Canonical text of a kinematics table.
pub fn kinematics_to_string(frames: &[RawFrame], profile: &RobotProfile) -> String {
    let mut out = profile.column_names().join(",");
    out.push('\n');
    for f in frames {
        write!(out, "{}", f.timestamp).unwrap();
        for v in &f.values {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_kinematics(path: &Path, frames: &[RawFrame], profile: &RobotProfile) -> Result<()> {
    fs::write(path, kinematics_to_string(frames, profile)).map_err(|e| Error::io(path, e))
}

/// Parses an annotation table. Records are returned sorted by start time;
/// names are kept as written.
pub fn parse_annotations(path: &Path) -> Result<Vec<AnnotationRecord>> {
    parse_annotations_with_tolerance(path, 0.0)
}

/// As [`parse_annotations`], tolerating overlaps of up to `overlap_tolerance` seconds.
pub fn parse_annotations_with_tolerance(path: &Path, overlap_tolerance: f64) -> Result<Vec<AnnotationRecord>> {
    parse_annotations_str(&read_text(path)?, path, overlap_tolerance)
}

pub(crate) fn parse_annotations_str(text: &str, path: &Path, overlap_tolerance: f64) -> Result<Vec<AnnotationRecord>> {
    let mut records = Vec::new();
    for (i, (row, line)) in data_lines(text).enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if i == 0 && cells.len() == 4 && !looks_numeric(cells[1]) {
            continue;
        }
        if cells.len() != 4 {
            return Err(Error::format(path, Some(row), format!("expected 4 columns, found {}", cells.len())));
        }
        let start_ts = parse_number(path, row, cells[1])?;
        let end_ts = parse_number(path, row, cells[2])?;
        if !(start_ts < end_ts) {
            return Err(Error::format(
                path,
                Some(row),
                format!("end {end_ts} does not follow start {start_ts}"),
            ));
        }
        let outcome = cells[3]
            .parse::<Outcome>()
            .map_err(|_| Error::format(path, Some(row), format!("unknown outcome `{}`", cells[3])))?;
        if cells[0].is_empty() {
            return Err(Error::format(path, Some(row), "empty surgeme name"));
        }
        records.push(AnnotationRecord {
            surgeme_name: cells[0].to_string(),
            start_ts,
            end_ts,
            outcome,
        });
    }
    records.sort_by(|a, b| a.start_ts.total_cmp(&b.start_ts));
    for w in records.windows(2) {
        if w[0].end_ts - w[1].start_ts > overlap_tolerance {
            return Err(Error::Overlap {
                first_start: w[0].start_ts,
                first_end: w[0].end_ts,
                second_start: w[1].start_ts,
                second_end: w[1].end_ts,
            });
        }
    }
    Ok(records)
}

pub fn annotations_to_string(records: &[AnnotationRecord]) -> String {
    let mut out = String::from(ANNOTATION_HEADER);
    out.push('\n');
    for r in records {
        writeln!(out, "{},{},{},{}", r.surgeme_name, r.start_ts, r.end_ts, r.outcome.as_str()).unwrap();
    }
    out
}

pub fn write_annotations(path: &Path, records: &[AnnotationRecord]) -> Result<()> {
    fs::write(path, annotations_to_string(records)).map_err(|e| Error::io(path, e))
}

/// Parses a manifest; relative paths are resolved against the manifest's directory.
pub fn parse_manifest(path: &Path) -> Result<Vec<TrialManifestEntry>> {
    let text = read_text(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut entries = Vec::new();
    for (i, (row, line)) in data_lines(&text).enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if i == 0 && cells.first() == Some(&"trial_id") {
            continue;
        }
        if cells.len() != 5 {
            return Err(Error::format(path, Some(row), format!("expected 5 columns, found {}", cells.len())));
        }
        let domain = cells[2]
            .parse::<Domain>()
            .map_err(|_| Error::format(path, Some(row), format!("unknown domain `{}`", cells[2])))?;
        entries.push(TrialManifestEntry {
            trial_id: cells[0].to_string(),
            robot: cells[1].to_string(),
            domain,
            kinematics_path: base.join(cells[3]),
            annotations_path: base.join(cells[4]),
        });
    }
    Ok(entries)
}

/// Writes a manifest; paths are written relative to `dir` when possible.
pub fn write_manifest(path: &Path, entries: &[TrialManifestEntry]) -> Result<()> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut out = String::from(MANIFEST_HEADER);
    out.push('\n');
    for e in entries {
        let rel = |p: &Path| p.strip_prefix(base).unwrap_or(p).to_string_lossy().into_owned();
        writeln!(
            out,
            "{},{},{},{},{}",
            e.trial_id,
            e.robot,
            e.domain,
            rel(&e.kinematics_path),
            rel(&e.annotations_path)
        )
        .unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// An annotation that produced no segment because its window held fewer than two frames.
#[derive(Clone, Debug, PartialEq)]
pub struct DroppedAnnotation {
    pub trial_id: String,
    pub surgeme_name: String,
    pub start_ts: f64,
    pub end_ts: f64,
    pub frames: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SegmentedTrial {
    pub segments: Vec<SurgemeSegment>,
    pub dropped: Vec<DroppedAnnotation>,
}

/// Cuts a trial into labeled segments. Each annotation takes the frames with
/// `start_ts <= t <= end_ts`; a frame on a boundary shared by two touching
/// annotations goes to the earlier one. Frames outside every annotation are
/// discarded, and annotations capturing fewer than two frames are dropped
/// with a warning.
pub fn segment_trial(
    frames: &[RawFrame],
    anns: &[AnnotationRecord],
    profile: &RobotProfile,
    domain: Domain,
    trial_id: &str,
) -> Result<SegmentedTrial> {
    let mut out = SegmentedTrial::default();
    let mut cursor = 0;
    for ann in anns {
        let label = class_from_name(&ann.surgeme_name)?;
        while cursor < frames.len() && frames[cursor].timestamp < ann.start_ts {
            cursor += 1;
        }
        let begin = cursor;
        while cursor < frames.len() && frames[cursor].timestamp <= ann.end_ts {
            cursor += 1;
        }
        let window = &frames[begin..cursor];
        if window.len() < 2 {
            log::warn!(
                "trial {trial_id}: dropping `{}` [{}, {}] with {} frame(s)",
                ann.surgeme_name,
                ann.start_ts,
                ann.end_ts,
                window.len()
            );
            out.dropped.push(DroppedAnnotation {
                trial_id: trial_id.to_string(),
                surgeme_name: ann.surgeme_name.clone(),
                start_ts: ann.start_ts,
                end_ts: ann.end_ts,
                frames: window.len(),
            });
            continue;
        }
        let kin = window
            .iter()
            .map(|r| project_common_features(r, profile))
            .collect::<Result<Vec<_>>>()?;
        out.segments.push(SurgemeSegment {
            label,
            frames: kin,
            outcome: ann.outcome,
            domain,
            trial_id: trial_id.to_string(),
            robot: profile.name.clone(),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Default)]
pub struct IngestReport {
    pub trials: usize,
    pub frames: usize,
    pub dropped: Vec<DroppedAnnotation>,
}

/// Loads every trial listed in a manifest. Trials parse in parallel; the
/// resulting segment order follows the manifest.
pub fn load_dataset(manifest: &Path, profiles: &BTreeMap<String, RobotProfile>) -> Result<(Dataset, IngestReport)> {
    let entries = parse_manifest(manifest)?;
    let parsed = entries
        .par_iter()
        .map(|e| {
            let profile = profiles
                .get(&e.robot)
                .ok_or_else(|| Error::UnknownProfile(e.robot.clone()))?;
            let frames = parse_kinematics(&e.kinematics_path, profile)?;
            let anns = parse_annotations(&e.annotations_path)?;
            let seg = segment_trial(&frames, &anns, profile, e.domain, &e.trial_id)?;
            Ok((frames.len(), seg))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = IngestReport {
        trials: entries.len(),
        ..Default::default()
    };
    let mut segments = Vec::new();
    for (n, seg) in parsed {
        report.frames += n;
        report.dropped.extend(seg.dropped);
        segments.extend(seg.segments);
    }
    Ok((Dataset::new(segments, profiles.clone()), report))
}
