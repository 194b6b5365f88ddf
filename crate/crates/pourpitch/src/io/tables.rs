//! CSV tables: ground truth, pitch tracks, pixel tracks and numeric matrices.
//!
//! Floats are written in Rust's shortest round-trip form, so a table read
//! back reproduces the values bit for bit.

use std::path::{Path, PathBuf};

use pourpitch_core::cosup::{PixelFrame, PixelTrack, TemporalDifferenceMap};
use pourpitch_core::synth::GroundTruth;
use pourpitch_core::types::interpolate;
use pourpitch_core::{PhysicsConstants, PitchFrame, PitchTrack, TrackSource};
use serde::{Deserialize, Serialize};

use super::atomic::{write_json, write_with};
use crate::error::{AppError, AppResult};

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> AppError + '_ {
    move |e| AppError::format(path, e)
}

/// Writes a header row and data rows.
pub fn write_csv<R, I>(path: &Path, header: &[&str], rows: I) -> AppResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut result = Ok(());
    write_with(path, |w| {
        let mut wr = csv::Writer::from_writer(w);
        result = (|| {
            wr.write_record(header)?;
            for r in rows {
                wr.write_record(r)?;
            }
            wr.flush()?;
            Ok::<_, csv::Error>(())
        })();
        Ok(())
    })?;
    result.map_err(csv_err(path))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub t_s: f64,
    pub l_m: f64,
    pub lambda_m: f64,
    pub f_hz: f64,
}

pub fn truth_rows(truth: &GroundTruth, constants: &PhysicsConstants) -> Vec<TruthRow> {
    truth
        .fill
        .samples
        .iter()
        .zip(&truth.wavelength)
        .map(|(s, w)| TruthRow {
            t_s: s.t,
            l_m: s.l,
            lambda_m: w.lambda,
            f_hz: constants.speed_of_sound / w.lambda,
        })
        .collect()
}

/// `t_s, l_m, lambda_m, f_hz`; the frequency is `inf` where the resonance
/// has no finite pitch.
pub fn write_truth(path: &Path, truth: &GroundTruth, constants: &PhysicsConstants) -> AppResult<()> {
    write_csv(
        path,
        &["t_s", "l_m", "lambda_m", "f_hz"],
        truth_rows(truth, constants)
            .into_iter()
            .map(|r| [num(r.t_s), num(r.l_m), num(r.lambda_m), num(r.f_hz)]),
    )
}

pub fn read_truth(path: &Path) -> AppResult<Vec<TruthRow>> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err(path))?;
    rd.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))
}

/// Air column of a truth table at `t`, linearly interpolated.
pub fn truth_level(rows: &[TruthRow], t: f64) -> f64 {
    interpolate(rows, t, |r| (r.t_s, r.l_m))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrackRow {
    time_s: f64,
    f_hz: Option<f64>,
    lambda_m: Option<f64>,
    confidence: f64,
    voiced: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rms: Option<f64>,
}

/// `time_s, f_hz, lambda_m, confidence, voiced[, rms]`; pitch cells are
/// empty on unvoiced frames.
pub fn write_track(path: &Path, track: &PitchTrack, rms: Option<&[f64]>) -> AppResult<()> {
    let mut header = vec!["time_s", "f_hz", "lambda_m", "confidence", "voiced"];
    if rms.is_some() {
        header.push("rms");
    }
    write_csv(
        path,
        &header,
        track.frames.iter().enumerate().map(|(i, f)| {
            let mut row = vec![
                num(f.t),
                opt(f.frequency),
                opt(f.wavelength),
                num(f.confidence),
                (f.is_voiced() as u8).to_string(),
            ];
            if let Some(r) = rms {
                row.push(num(r[i]));
            }
            row
        }),
    )
}

/// A track read from disk, plus its per-frame RMS column when present.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackFile {
    pub track: PitchTrack,
    pub rms: Option<Vec<(f64, f64)>>,
}

pub fn read_track(path: &Path, constants: &PhysicsConstants) -> AppResult<TrackFile> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let rows: Vec<TrackRow> = rd.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))?;
    if rows.windows(2).any(|w| w[1].time_s < w[0].time_s) {
        return Err(AppError::format(path, "track frames must be time-sorted"));
    }
    let mut frames = Vec::with_capacity(rows.len());
    for r in &rows {
        let f = match (r.voiced, r.f_hz, r.lambda_m) {
            (0, _, _) => PitchFrame::unvoiced(r.time_s, r.confidence),
            (_, Some(f), _) if f > 0.0 => PitchFrame::voiced(r.time_s, f, r.confidence, constants),
            (_, None, Some(l)) if l > 0.0 => {
                PitchFrame::voiced(r.time_s, constants.speed_of_sound / l, r.confidence, constants)
            }
            _ => return Err(AppError::format(path, format!("frame at {} s has no usable pitch", r.time_s))),
        };
        frames.push(f);
    }
    let rms = if rows.iter().all(|r| r.rms.is_some()) && !rows.is_empty() {
        Some(rows.iter().map(|r| (r.time_s, r.rms.unwrap_or(0.0))).collect())
    } else {
        None
    };
    Ok(TrackFile {
        track: PitchTrack::new(frames, TrackSource::Argmax),
        rms,
    })
}

/// Two comment lines, `# radius_px = …` and `# image_height_px = …`, then
/// `time_s, l_px` rows.
pub fn write_pixel_track(path: &Path, track: &PixelTrack) -> AppResult<()> {
    let mut result = Ok(());
    write_with(path, |w| {
        writeln!(w, "# radius_px = {}", track.radius_px)?;
        writeln!(w, "# image_height_px = {}", track.image_height_px)?;
        let mut wr = csv::Writer::from_writer(w);
        result = (|| {
            wr.write_record(["time_s", "l_px"])?;
            for f in &track.frames {
                wr.write_record([num(f.t), num(f.l_px)])?;
            }
            wr.flush()?;
            Ok::<_, csv::Error>(())
        })();
        Ok(())
    })?;
    result.map_err(csv_err(path))
}

pub fn read_pixel_track(path: &Path) -> AppResult<PixelTrack> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let (mut radius, mut height) = (None, None);
    for line in text.lines().filter_map(|l| l.strip_prefix('#')) {
        if let Some((key, value)) = line.split_once('=') {
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| AppError::format(path, format!("bad header value {:?}", value.trim())))?;
            match key.trim() {
                "radius_px" => radius = Some(value),
                "image_height_px" => height = Some(value),
                _ => {}
            }
        }
    }
    let radius = radius.ok_or_else(|| AppError::format(path, "missing `# radius_px` header"))?;
    let height = height.ok_or_else(|| AppError::format(path, "missing `# image_height_px` header"))?;

    #[derive(Deserialize)]
    struct Row {
        time_s: f64,
        l_px: f64,
    }
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let frames = rd
        .deserialize::<Row>()
        .map(|r| r.map(|r| PixelFrame { t: r.time_s, l_px: r.l_px }))
        .collect::<Result<Vec<_>, _>>()
        .map_err(csv_err(path))?;
    PixelTrack::new(frames, radius, height).map_err(|e| AppError::format(path, e))
}

/// Axis metadata stored next to a matrix as `<name>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub rows: usize,
    pub cols: usize,
    /// Time of each row, seconds.
    pub row_times_s: Vec<f64>,
    /// Coordinate of each column, e.g. bin frequency in Hz or image row.
    pub col_values: Vec<f64>,
    pub col_unit: String,
    pub value_unit: String,
}

pub fn sidecar_path(matrix: &Path) -> PathBuf {
    matrix.with_extension("json")
}

/// Header-less numeric CSV, one row per frame, with its JSON sidecar.
pub fn write_matrix(path: &Path, values: &[f64], sidecar: &MatrixSidecar) -> AppResult<()> {
    if values.len() != sidecar.rows * sidecar.cols {
        return Err(AppError::format(path, "matrix shape does not match its sidecar"));
    }
    let mut result = Ok(());
    write_with(path, |w| {
        let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        result = (|| {
            for row in values.chunks(sidecar.cols.max(1)) {
                wr.write_record(row.iter().map(|&x| num(x)))?;
            }
            wr.flush()?;
            Ok::<_, csv::Error>(())
        })();
        Ok(())
    })?;
    result.map_err(csv_err(path))?;
    write_json(&sidecar_path(path), sidecar)
}

pub fn read_matrix(path: &Path) -> AppResult<(Vec<f64>, MatrixSidecar)> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| AppError::io(&side, e))?;
    let sidecar: MatrixSidecar = serde_json::from_str(&text).map_err(|e| AppError::format(&side, e))?;
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err(path))?;
    let mut values = Vec::with_capacity(sidecar.rows * sidecar.cols);
    for rec in rd.records() {
        let rec = rec.map_err(csv_err(path))?;
        for cell in rec.iter() {
            values.push(
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| AppError::format(path, format!("bad number {cell:?}")))?,
            );
        }
    }
    if values.len() != sidecar.rows * sidecar.cols || sidecar.row_times_s.len() != sidecar.rows {
        return Err(AppError::format(path, "matrix shape does not match its sidecar"));
    }
    Ok((values, sidecar))
}

pub fn read_tdm(path: &Path) -> AppResult<TemporalDifferenceMap> {
    let (values, side) = read_matrix(path)?;
    TemporalDifferenceMap::new(values, side.cols, side.row_times_s).map_err(|e| AppError::format(path, e))
}

pub fn write_tdm(path: &Path, tdm: &TemporalDifferenceMap) -> AppResult<()> {
    write_matrix(
        path,
        &tdm.values,
        &MatrixSidecar {
            rows: tdm.n_frames(),
            cols: tdm.n_rows,
            row_times_s: tdm.frame_times.clone(),
            col_values: (0..tdm.n_rows).map(|r| r as f64).collect(),
            col_unit: "px".into(),
            value_unit: "intensity".into(),
        },
    )
}
