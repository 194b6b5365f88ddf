//! Round-trip evaluation: synthesize pours with known geometry, analyze the
//! audio and compare every recovered quantity with the truth.
//!
//! Aggregates are plain means over the per-sample records they summarize,
//! so a report can always be re-derived from its own records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use pourpitch_core::analysis::{analyze_audio, track_pitch, Analysis, AnalysisConfig};
use pourpitch_core::physics::{classify_shape, ClassifyConfig, ShapeClass, WavelengthCurve};
use pourpitch_core::synth::{render_draw, sample_draws, sample_shape_draws, Render, SampleRanges, SynthConfig};
use pourpitch_core::{PhysicsConstants, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Manifest;
use crate::error::AppResult;
use crate::io::tables::{read_truth, truth_level, write_csv};
use crate::io::wav::read_wav;
use crate::io::write_json;

const CM: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub n: usize,
    pub ranges: SampleRanges,
    /// `None` renders without noise.
    pub snrs_db: Vec<Option<f64>>,
    pub synth: SynthConfig,
    pub analysis: AnalysisConfig,
    pub constants: PhysicsConstants,
    pub seed: u64,
    /// Overlay curves are written for this many leading samples.
    pub curve_samples: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n: 100,
            ranges: SampleRanges::default(),
            snrs_db: vec![None, Some(20.0), Some(10.0)],
            synth: SynthConfig::default(),
            analysis: AnalysisConfig::default(),
            constants: PhysicsConstants::default(),
            seed: 0,
            curve_samples: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauRecord {
    pub cut_fraction: f64,
    pub true_s: f64,
    pub estimate_s: Option<f64>,
    pub abs_error_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub index: usize,
    pub snr_db: Option<f64>,
    pub duration_s: f64,
    pub height_true_cm: f64,
    pub radius_true_cm: Option<f64>,
    pub flow_true_ml_s: Option<f64>,
    /// Estimates and errors are absent when the analysis failed.
    pub height_est_cm: Option<f64>,
    pub radius_est_cm: Option<f64>,
    pub flow_est_ml_s: Option<f64>,
    pub l_mae_cm: Option<f64>,
    pub height_abs_err_cm: Option<f64>,
    pub radius_abs_err_cm: Option<f64>,
    pub flow_abs_err_ml_s: Option<f64>,
    pub flow_rel_err: Option<f64>,
    pub tau: Vec<TauRecord>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauAggregate {
    pub cut_fraction: f64,
    pub mae_s: Option<f64>,
    pub mean_remaining_s: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub snr_db: Option<f64>,
    pub samples: usize,
    pub failures: usize,
    pub l_mae_cm: Option<f64>,
    pub height_mae_cm: Option<f64>,
    pub radius_mae_cm: Option<f64>,
    pub flow_mae_ml_s: Option<f64>,
    pub flow_mean_rel_err: Option<f64>,
    pub tau: Vec<TauAggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub config: serde_json::Value,
    pub records: Vec<EvalRecord>,
    pub aggregates: Vec<Aggregate>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, usize) {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    ((n > 0).then(|| sum / n as f64), n)
}

/// Means over the records of one SNR, in record order.
pub fn aggregate(snr_db: Option<f64>, records: &[&EvalRecord]) -> Aggregate {
    let mut cuts: Vec<f64> = Vec::new();
    for r in records {
        for t in &r.tau {
            if !cuts.contains(&t.cut_fraction) {
                cuts.push(t.cut_fraction);
            }
        }
    }
    let tau = cuts
        .iter()
        .map(|&cut| {
            let hits: Vec<&TauRecord> = records
                .iter()
                .flat_map(|r| r.tau.iter().filter(move |t| t.cut_fraction == cut && t.abs_error_s.is_some()))
                .collect();
            let (mae_s, count) = mean(hits.iter().map(|t| t.abs_error_s));
            let (mean_remaining_s, _) = mean(hits.iter().map(|t| Some(t.true_s)));
            TauAggregate {
                cut_fraction: cut,
                mae_s,
                mean_remaining_s,
                count,
            }
        })
        .collect();
    Aggregate {
        snr_db,
        samples: records.len(),
        failures: records.iter().filter(|r| r.error.is_some()).count(),
        l_mae_cm: mean(records.iter().map(|r| r.l_mae_cm)).0,
        height_mae_cm: mean(records.iter().map(|r| r.height_abs_err_cm)).0,
        radius_mae_cm: mean(records.iter().map(|r| r.radius_abs_err_cm)).0,
        flow_mae_ml_s: mean(records.iter().map(|r| r.flow_abs_err_ml_s)).0,
        flow_mean_rel_err: mean(records.iter().map(|r| r.flow_rel_err)).0,
        tau,
    }
}

impl EvalReport {
    /// Aggregates re-derived from the records, grouped by SNR in first-seen
    /// order.
    pub fn recompute_aggregates(&self) -> Vec<Aggregate> {
        let mut snrs: Vec<Option<f64>> = Vec::new();
        for r in &self.records {
            if !snrs.contains(&r.snr_db) {
                snrs.push(r.snr_db);
            }
        }
        snrs.into_iter()
            .map(|snr| {
                let group: Vec<&EvalRecord> = self.records.iter().filter(|r| r.snr_db == snr).collect();
                aggregate(snr, &group)
            })
            .collect()
    }

    pub fn aggregate_for(&self, snr_db: Option<f64>) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.snr_db == snr_db)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("seed {}\n", self.seed);
        let f = |x: Option<f64>, digits: usize| x.map_or("n/a".to_string(), |v| format!("{v:.digits$}"));
        for a in &self.aggregates {
            let snr = a.snr_db.map_or("clean".to_string(), |v| format!("{v} dB"));
            let _ = writeln!(s, "\n[{snr}] {} samples, {} failed", a.samples, a.failures);
            let _ = writeln!(s, "  l(t) MAE        {} cm", f(a.l_mae_cm, 4));
            let _ = writeln!(s, "  H MAE           {} cm", f(a.height_mae_cm, 4));
            let _ = writeln!(s, "  R MAE           {} cm", f(a.radius_mae_cm, 4));
            let _ = writeln!(s, "  Q MAE           {} ml/s", f(a.flow_mae_ml_s, 3));
            let _ = writeln!(s, "  Q mean rel err  {}", f(a.flow_mean_rel_err, 5));
            for t in &a.tau {
                let _ = writeln!(
                    s,
                    "  tau MAE @{:>3.0}%   {} s (mean remaining {} s)",
                    100.0 * t.cut_fraction,
                    f(t.mae_s, 4),
                    f(t.mean_remaining_s, 3)
                );
            }
        }
        s
    }
}

/// Compares one analysis against a truth curve `l(t)`.
fn score(
    index: usize,
    snr_db: Option<f64>,
    duration: f64,
    height_true: f64,
    radius_true: Option<f64>,
    flow_true_ml_s: Option<f64>,
    analysis: Result<&Analysis, String>,
    level: impl Fn(f64) -> f64,
) -> EvalRecord {
    let mut rec = EvalRecord {
        index,
        snr_db,
        duration_s: duration,
        height_true_cm: height_true * CM,
        radius_true_cm: radius_true.map(|r| r * CM),
        flow_true_ml_s,
        height_est_cm: None,
        radius_est_cm: None,
        flow_est_ml_s: None,
        l_mae_cm: None,
        height_abs_err_cm: None,
        radius_abs_err_cm: None,
        flow_abs_err_ml_s: None,
        flow_rel_err: None,
        tau: Vec::new(),
        error: None,
    };
    let a = match analysis {
        Ok(a) => a,
        Err(e) => {
            rec.error = Some(e);
            return rec;
        }
    };
    let e = &a.estimate;
    let samples = &e.air_column.samples;
    let l_mae = samples.iter().map(|s| (s.l - level(s.t)).abs()).sum::<f64>() / samples.len() as f64;
    rec.height_est_cm = Some(e.height * CM);
    rec.radius_est_cm = Some(e.radius * CM);
    rec.flow_est_ml_s = Some(e.flow.mean_ml_per_s);
    rec.l_mae_cm = Some(l_mae * CM);
    rec.height_abs_err_cm = Some((e.height - height_true).abs() * CM);
    rec.radius_abs_err_cm = radius_true.map(|r| (e.radius - r).abs() * CM);
    rec.flow_abs_err_ml_s = flow_true_ml_s.map(|q| (e.flow.mean_ml_per_s - q).abs());
    rec.flow_rel_err = flow_true_ml_s.map(|q| (e.flow.mean_ml_per_s - q).abs() / q);
    rec.tau = e
        .time_to_fill
        .iter()
        .map(|c| {
            let true_s = duration - c.t_cut;
            TauRecord {
                cut_fraction: c.fraction,
                true_s,
                estimate_s: c.tau,
                abs_error_s: c.tau.map(|t| (t - true_s).abs()),
            }
        })
        .collect();
    rec
}

/// Everything one synthetic sample produced, kept for plot emission.
struct Sample {
    record: EvalRecord,
    render: Render,
    analysis: Option<Analysis>,
}

/// Runs the synthetic round-trip sweep. Samples are processed in parallel
/// and reduced in a fixed order, so the report depends only on the config.
pub fn run_eval(config: &EvalConfig) -> AppResult<EvalReport> {
    Ok(run_samples(config)?.0)
}

fn run_samples(config: &EvalConfig) -> AppResult<(EvalReport, Vec<Sample>)> {
    let draws = sample_draws(config.n, &config.ranges, config.seed)?;
    let jobs: Vec<(Option<f64>, usize)> = config
        .snrs_db
        .iter()
        .flat_map(|&snr| (0..draws.len()).map(move |i| (snr, i)))
        .collect();
    let analysis_cfg = AnalysisConfig {
        seed: config.seed,
        ..config.analysis.clone()
    };
    let samples = jobs
        .par_iter()
        .map(|&(snr, i)| {
            let d = &draws[i];
            let synth = SynthConfig {
                noise_snr_db: snr,
                ..config.synth
            };
            let render = render_draw(d, &synth, &config.constants)?;
            let analysis = analyze_audio(&render.audio, &analysis_cfg, &config.constants);
            let record = score(
                d.index,
                snr,
                render.truth.fill.duration,
                d.container.height,
                Some(d.container.radius_base),
                Some(d.flow * 1e6),
                analysis.as_ref().map_err(|e| e.to_string()),
                |t| render.truth.fill.level_at(t),
            );
            Ok(Sample {
                record,
                render,
                analysis: analysis.ok(),
            })
        })
        .collect::<AppResult<Vec<_>>>()?;
    let records: Vec<EvalRecord> = samples.iter().map(|s| s.record.clone()).collect();
    let mut report = EvalReport {
        seed: config.seed,
        config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
        records,
        aggregates: Vec::new(),
    };
    report.aggregates = report.recompute_aggregates();
    Ok((report, samples))
}

/// Runs the sweep and writes `eval_report.json`, `eval_report.txt`,
/// `eval_records.csv`, `eval_summary.csv` and overlay curves under `out`.
pub fn run_eval_to_dir(config: &EvalConfig, out: &Path) -> AppResult<EvalReport> {
    let (report, samples) = run_samples(config)?;
    write_json(&out.join("eval_report.json"), &report)?;
    crate::io::write_atomic(&out.join("eval_report.txt"), report.to_text().as_bytes())?;
    write_records_csv(&out.join("eval_records.csv"), &report)?;
    write_summary_csv(&out.join("eval_summary.csv"), &report)?;
    for s in samples.iter().filter(|s| s.record.index < config.curve_samples) {
        let snr = s.record.snr_db.map_or("clean".to_string(), |v| format!("{v}db"));
        let path = out.join("curves").join(format!("sample_{:05}_{snr}.csv", s.record.index));
        write_overlay(&path, s)?;
    }
    Ok(report)
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

fn write_records_csv(path: &Path, report: &EvalReport) -> AppResult<()> {
    let cuts: Vec<f64> = report
        .records
        .iter()
        .find(|r| !r.tau.is_empty())
        .map(|r| r.tau.iter().map(|t| t.cut_fraction).collect())
        .unwrap_or_default();
    let mut header: Vec<String> = [
        "index",
        "snr_db",
        "duration_s",
        "height_true_cm",
        "height_est_cm",
        "radius_true_cm",
        "radius_est_cm",
        "flow_true_ml_s",
        "flow_est_ml_s",
        "l_mae_cm",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for c in &cuts {
        header.push(format!("tau_err_{:.0}_s", 100.0 * c));
    }
    header.push("error".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        path,
        &header_refs,
        report.records.iter().map(|r| {
            let mut row = vec![
                r.index.to_string(),
                cell(r.snr_db),
                format!("{}", r.duration_s),
                format!("{}", r.height_true_cm),
                cell(r.height_est_cm),
                cell(r.radius_true_cm),
                cell(r.radius_est_cm),
                cell(r.flow_true_ml_s),
                cell(r.flow_est_ml_s),
                cell(r.l_mae_cm),
            ];
            for c in &cuts {
                row.push(cell(r.tau.iter().find(|t| t.cut_fraction == *c).and_then(|t| t.abs_error_s)));
            }
            row.push(r.error.clone().unwrap_or_default());
            row
        }),
    )
}

fn write_summary_csv(path: &Path, report: &EvalReport) -> AppResult<()> {
    let rows = report.aggregates.iter().flat_map(|a| {
        let snr = cell(a.snr_db);
        let mut rows = vec![
            vec![snr.clone(), "l_mae_cm".to_string(), cell(a.l_mae_cm)],
            vec![snr.clone(), "height_mae_cm".to_string(), cell(a.height_mae_cm)],
            vec![snr.clone(), "radius_mae_cm".to_string(), cell(a.radius_mae_cm)],
            vec![snr.clone(), "flow_mae_ml_s".to_string(), cell(a.flow_mae_ml_s)],
            vec![snr.clone(), "flow_mean_rel_err".to_string(), cell(a.flow_mean_rel_err)],
        ];
        for t in &a.tau {
            rows.push(vec![snr.clone(), format!("tau_mae_{:.0}_s", 100.0 * t.cut_fraction), cell(t.mae_s)]);
        }
        rows
    });
    write_csv(path, &["snr_db", "metric", "value"], rows)
}

/// Observed and fitted wavelength with true and recovered air column.
fn write_overlay(path: &Path, s: &Sample) -> AppResult<()> {
    let Some(a) = &s.analysis else {
        return Ok(());
    };
    let truth = &s.render.truth;
    write_csv(
        path,
        &["time_s", "lambda_obs_m", "lambda_fit_m", "lambda_true_m", "l_true_cm", "l_est_cm"],
        a.track.frames.iter().map(|f| {
            let lambda_true = pourpitch_core::types::interpolate(&truth.wavelength, f.t, |w| (w.t, w.lambda));
            let l_est = pourpitch_core::physics::air_column_at(&a.curve, a.estimate.duration, f.t).max(0.0);
            [
                format!("{}", f.t),
                cell(f.wavelength),
                format!("{}", a.curve.wavelength(f.t)),
                format!("{lambda_true}"),
                format!("{}", truth.fill.level_at(f.t) * CM),
                format!("{}", l_est * CM),
            ]
        }),
    )
}

/// Evaluates an existing dataset: each manifest entry's audio is analyzed
/// and scored against its ground-truth table.
pub fn run_manifest_eval(manifest_path: &Path, analysis: &AnalysisConfig, constants: &PhysicsConstants) -> AppResult<EvalReport> {
    let manifest = Manifest::read(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let records = manifest
        .entries
        .par_iter()
        .map(|e| {
            let audio = read_wav(&root.join(&e.audio), crate::io::wav::WORKING_RATE)?;
            let truth = read_truth(&root.join(&e.truth))?;
            let height = truth.first().map_or(e.height_m, |r| r.l_m);
            let a = analyze_audio(&audio, analysis, constants);
            Ok(score(
                e.index,
                e.noise_snr_db,
                audio.duration(),
                height,
                Some(e.radius_base_m),
                Some(e.flow_ml_s),
                a.as_ref().map_err(|err| err.to_string()),
                |t| truth_level(&truth, t),
            ))
        })
        .collect::<AppResult<Vec<_>>>()?;
    let mut report = EvalReport {
        seed: manifest.seed,
        config: serde_json::json!({ "manifest": manifest_path, "analysis": analysis }),
        records,
        aggregates: Vec::new(),
    };
    report.aggregates = report.recompute_aggregates();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEvalConfig {
    pub n_per_shape: usize,
    pub ranges: SampleRanges,
    pub snr_range_db: (f64, f64),
    pub synth: SynthConfig,
    pub analysis: AnalysisConfig,
    pub classify: ClassifyConfig,
    pub constants: PhysicsConstants,
    pub seed: u64,
}

impl Default for ClassEvalConfig {
    fn default() -> Self {
        Self {
            n_per_shape: 100,
            ranges: SampleRanges::default(),
            snr_range_db: (20.0, 40.0),
            synth: SynthConfig::default(),
            analysis: AnalysisConfig::default(),
            classify: ClassifyConfig::default(),
            constants: PhysicsConstants::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub index: usize,
    pub truth: ShapeClass,
    pub predicted: Option<ShapeClass>,
    pub snr_db: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEvalReport {
    pub seed: u64,
    pub records: Vec<ClassRecord>,
    pub accuracy: f64,
    /// `truth → predicted → count`; failures count under `"none"`.
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
}

fn class_of(shape: Shape) -> ShapeClass {
    match shape {
        Shape::Cylinder => ShapeClass::Cylindrical,
        Shape::Frustum => ShapeClass::Semiconical,
        Shape::Bottleneck => ShapeClass::Bottleneck,
    }
}

/// Renders `n_per_shape` pours of each family at random SNRs and classifies
/// each from its pitch track.
pub fn run_classification_eval(config: &ClassEvalConfig) -> AppResult<ClassEvalReport> {
    let mut jobs = Vec::new();
    for (k, shape) in [Shape::Cylinder, Shape::Frustum, Shape::Bottleneck].into_iter().enumerate() {
        let shape_seed = config.seed.wrapping_add(k as u64);
        let draws = sample_shape_draws(config.n_per_shape, shape, &config.ranges, shape_seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(shape_seed ^ 0x5eed);
        let (lo, hi) = config.snr_range_db;
        for d in draws {
            let snr = if hi > lo { rng.random_range(lo..hi) } else { lo };
            jobs.push((jobs.len(), d, snr));
        }
    }
    let classify = ClassifyConfig {
        seed: config.seed,
        ..config.classify
    };
    let records = jobs
        .par_iter()
        .map(|(index, d, snr)| {
            let synth = SynthConfig {
                noise_snr_db: Some(*snr),
                ..config.synth
            };
            let render = render_draw(d, &synth, &config.constants)?;
            let result = track_pitch(&render.audio, &config.analysis, &config.constants)
                .and_then(|(track, _)| classify_shape(&track, render.audio.duration(), &classify));
            Ok(ClassRecord {
                index: *index,
                truth: class_of(d.container.shape),
                predicted: result.as_ref().ok().map(|c| c.label),
                snr_db: *snr,
                error: result.err().map(|e| e.to_string()),
            })
        })
        .collect::<AppResult<Vec<_>>>()?;
    let correct = records.iter().filter(|r| r.predicted == Some(r.truth)).count();
    let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for r in &records {
        let p = r.predicted.map_or("none", |c| c.name());
        *confusion
            .entry(r.truth.name().to_string())
            .or_default()
            .entry(p.to_string())
            .or_default() += 1;
    }
    Ok(ClassEvalReport {
        seed: config.seed,
        accuracy: correct as f64 / records.len().max(1) as f64,
        records,
        confusion,
    })
}
