//! Seeded synthetic datasets on disk: WAV files, ground-truth tables and a
//! JSON manifest listing every pair with its sampled parameters.

use std::path::{Path, PathBuf};

use pourpitch_core::synth::{render_draw, sample_shape_draws, Draw, SampleRanges, SynthConfig};
use pourpitch_core::{PhysicsConstants, Shape};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::io::tables::write_truth;
use crate::io::wav::write_wav;
use crate::io::write_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    /// Paths relative to the manifest.
    pub audio: PathBuf,
    pub truth: PathBuf,
    pub shape: Shape,
    pub height_m: f64,
    pub radius_base_m: f64,
    pub radius_top_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neck_length_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neck_radius_m: Option<f64>,
    pub duration_s: f64,
    pub flow_ml_s: f64,
    pub noise_snr_db: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub sample_rate: u32,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| AppError::format(path, e))
    }
}

fn entry(draw: &Draw, config: &SynthConfig) -> ManifestEntry {
    let c = &draw.container;
    let stem = format!("pour_{:05}", draw.index);
    ManifestEntry {
        index: draw.index,
        audio: PathBuf::from("audio").join(format!("{stem}.wav")),
        truth: PathBuf::from("truth").join(format!("{stem}.csv")),
        shape: c.shape,
        height_m: c.height,
        radius_base_m: c.radius_base,
        radius_top_m: c.radius_top,
        neck_length_m: c.neck.map(|n| n.length),
        neck_radius_m: c.neck.map(|n| n.radius),
        duration_s: draw.duration,
        flow_ml_s: draw.flow * 1e6,
        noise_snr_db: config.noise_snr_db,
        seed: draw.seed,
    }
}

/// Samples `n` containers of `shape`, renders each and writes the dataset
/// under `out`. Draws are rendered in parallel; outputs do not depend on
/// scheduling.
pub fn write_dataset(
    out: &Path,
    n: usize,
    shape: Shape,
    ranges: &SampleRanges,
    config: &SynthConfig,
    constants: &PhysicsConstants,
    seed: u64,
) -> AppResult<Manifest> {
    let draws = sample_shape_draws(n, shape, ranges, seed)?;
    let entries = draws
        .par_iter()
        .map(|d| {
            let render = render_draw(d, config, constants)?;
            let e = entry(d, config);
            write_wav(&out.join(&e.audio), &render.audio)?;
            write_truth(&out.join(&e.truth), &render.truth, constants)?;
            Ok(e)
        })
        .collect::<AppResult<Vec<_>>>()?;
    let manifest = Manifest {
        seed,
        sample_rate: config.sample_rate,
        entries,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
