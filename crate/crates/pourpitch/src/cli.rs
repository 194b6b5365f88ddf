//! Command-line front end. Every subcommand reads its inputs, runs one
//! pipeline stage and writes its outputs atomically; equal seeds give
//! byte-identical files.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pourpitch_core::analysis::{analyze_audio, track_pitch, AnalysisConfig, Tracker};
use pourpitch_core::cosup::{fit_pseudo_labels, estimate_scale, PseudoLabelConfig};
use pourpitch_core::physics::{classify_shape, ClassifyConfig, EndCorrectionForm, SlopeMethod};
use pourpitch_core::pitch::argmax::ArgmaxConfig;
use pourpitch_core::pitch::fit::{fit_wavelength, ModelKind};
use pourpitch_core::pitch::yin::YinConfig;
use pourpitch_core::synth::{synthesize_pour, Envelope, RadialTone, SampleRanges, SynthConfig};
use pourpitch_core::types::interpolate;
use pourpitch_core::{PhysicsConstants, RadialParams, Shape};

use crate::dataset::write_dataset;
use crate::error::{AppError, AppResult};
use crate::eval::{run_classification_eval, run_eval_to_dir, run_manifest_eval, ClassEvalConfig, EvalConfig};
use crate::io::container::read_container;
use crate::io::tables::{
    read_pixel_track, read_tdm, read_track, write_matrix, write_pixel_track, write_track, write_truth,
    MatrixSidecar,
};
use crate::io::wav::{read_wav, write_wav};
use crate::io::{write_atomic, write_json};
use crate::report::{ClassReport, PropertyReport, ScaleReport};

#[derive(Debug, Parser)]
#[command(name = "pourpitch", version, about = "Container properties from the sound of pouring")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Working sample rate, Hz; input audio is resampled to it.
    #[arg(long, global = true, default_value_t = 16000)]
    pub sample_rate: u32,
    /// End-correction coefficient.
    #[arg(long, global = true, default_value_t = 0.62)]
    pub beta: f64,
    /// Speed of sound, m/s.
    #[arg(long, global = true, default_value_t = 343.0)]
    pub speed_of_sound: f64,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
}

impl Global {
    fn constants(&self) -> AppResult<PhysicsConstants> {
        Ok(PhysicsConstants::new(self.speed_of_sound, self.beta)?)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a pour into a container described by a TOML file.
    Synth(SynthArgs),
    /// Estimate container properties from a recording.
    Analyze(AnalyzeArgs),
    /// Label a recording cylindrical, semiconical or bottleneck.
    Classify(ClassifyArgs),
    /// Estimate the pixel-per-meter scale between audio and video tracks.
    Scale(ScaleArgs),
    /// Fit liquid-surface pseudo labels on a temporal difference map.
    PseudoLabels(PseudoLabelArgs),
    /// Write a seeded synthetic dataset with ground truth.
    Dataset(DatasetArgs),
    /// Synthetic round-trip evaluation, or evaluation of a dataset manifest.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TrackerArg {
    Argmax,
    Yin,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelArg {
    Linear,
    Poly2,
    Frustum,
    Sqrt,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Linear => ModelKind::Linear,
            ModelArg::Poly2 => ModelKind::Poly2,
            ModelArg::Frustum => ModelKind::Frustum,
            ModelArg::Sqrt => ModelKind::Sqrt,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ShapeArg {
    Cylinder,
    Frustum,
    Bottleneck,
}

impl From<ShapeArg> for Shape {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Cylinder => Shape::Cylinder,
            ShapeArg::Frustum => Shape::Frustum,
            ShapeArg::Bottleneck => Shape::Bottleneck,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Text,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct SynthOptions {
    /// Odd partials including the fundamental.
    #[arg(long, default_value_t = 3)]
    pub harmonics: usize,
    /// Amplitude ratio between consecutive partials.
    #[arg(long, default_value_t = 0.5)]
    pub rolloff: f64,
    /// Tonal-to-noise ratio, dB; omit for a clean render.
    #[arg(long)]
    pub snr_db: Option<f64>,
    /// Add a radial wall mode with this empty-container frequency, Hz.
    #[arg(long)]
    pub radial_f0: Option<f64>,
    #[arg(long, default_value_t = 1.5)]
    pub radial_xi: f64,
    /// Radial mode level relative to the fundamental, dB.
    #[arg(long, default_value_t = -12.0)]
    pub radial_db: f64,
    /// Linear fade-in, s.
    #[arg(long)]
    pub attack: Option<f64>,
    /// Linear fade-out, s.
    #[arg(long)]
    pub decay: Option<f64>,
}

impl SynthOptions {
    fn config(&self, g: &Global) -> SynthConfig {
        SynthConfig {
            sample_rate: g.sample_rate,
            n_harmonics: self.harmonics,
            harmonic_rolloff: self.rolloff,
            radial: self.radial_f0.map(|f0| RadialTone {
                params: RadialParams { f0, xi: self.radial_xi },
                level_db: self.radial_db,
            }),
            noise_snr_db: self.snr_db,
            envelope: match (self.attack, self.decay) {
                (None, None) => Envelope::Constant,
                (a, d) => Envelope::AttackDecay {
                    attack: a.unwrap_or(0.0),
                    decay: d.unwrap_or(0.0),
                },
            },
            seed: g.seed,
            ..SynthConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Container TOML.
    pub container: PathBuf,
    /// Volume flow, ml/s.
    #[arg(long, conflicts_with = "duration", required_unless_present = "duration")]
    pub flow: Option<f64>,
    /// Pour duration, s; the flow is chosen to fill the container exactly.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Output file stem inside the output directory.
    #[arg(long, default_value = "pour")]
    pub name: String,
    #[command(flatten)]
    pub synth: SynthOptions,
}

#[derive(Debug, Clone, Args)]
pub struct TrackerOptions {
    #[arg(long, value_enum, default_value = "argmax")]
    pub tracker: TrackerArg,
    #[arg(long, value_enum, default_value = "linear")]
    pub model: ModelArg,
    /// Argmax search band, Hz.
    #[arg(long, default_value_t = 80.0)]
    pub f_min: f64,
    #[arg(long, default_value_t = 6000.0)]
    pub f_max: f64,
}

impl TrackerOptions {
    fn config(&self, g: &Global) -> AnalysisConfig {
        let tracker = match self.tracker {
            TrackerArg::Argmax => Tracker::Argmax(ArgmaxConfig {
                f_min: self.f_min,
                f_max: self.f_max,
                ..ArgmaxConfig::default()
            }),
            TrackerArg::Yin => Tracker::Yin(YinConfig::default()),
        };
        AnalysisConfig {
            tracker,
            model: self.model.into(),
            seed: g.seed,
            ..AnalysisConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Input WAV.
    pub audio: PathBuf,
    #[command(flatten)]
    pub tracker: TrackerOptions,
    /// Time-to-fill cut points as fractions of the recording; repeatable.
    #[arg(long = "cut", default_values_t = [0.25, 0.5, 0.75])]
    pub cuts: Vec<f64>,
    /// Estimate the time-to-fill slope by local regression instead of RANSAC.
    #[arg(long)]
    pub local_slope: bool,
    /// Use `λ - βR` in the time-to-fill numerator instead of `λ - 4βR`.
    #[arg(long)]
    pub printed_correction: bool,
    /// Also write the magnitude spectrogram.
    #[arg(long)]
    pub spectrogram: bool,
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    pub audio: PathBuf,
    #[command(flatten)]
    pub tracker: TrackerOptions,
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct ScaleArgs {
    /// Track CSV written by `analyze`, with its rms column.
    pub track: PathBuf,
    /// Pixel track CSV.
    pub pixels: PathBuf,
    #[arg(long, value_enum, default_value = "linear")]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct PseudoLabelArgs {
    /// Temporal difference map CSV with its JSON sidecar.
    pub tdm: PathBuf,
    /// Image row of the container rim.
    #[arg(long)]
    pub top: usize,
    /// Image row of the container base.
    #[arg(long)]
    pub bottom: usize,
    /// Container radius, pixels.
    #[arg(long)]
    pub radius_px: f64,
    /// Skip Gaussian smoothing of the map.
    #[arg(long)]
    pub no_smoothing: bool,
}

#[derive(Debug, Args)]
pub struct RangeOptions {
    #[arg(long, default_value_t = 0.05)]
    pub height_min: f64,
    #[arg(long, default_value_t = 0.25)]
    pub height_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub radius_min: f64,
    #[arg(long, default_value_t = 0.05)]
    pub radius_max: f64,
    #[arg(long, default_value_t = 5.0)]
    pub duration_min: f64,
    #[arg(long, default_value_t = 15.0)]
    pub duration_max: f64,
}

impl RangeOptions {
    fn ranges(&self) -> SampleRanges {
        SampleRanges {
            height: (self.height_min, self.height_max),
            radius: (self.radius_min, self.radius_max),
            duration: (self.duration_min, self.duration_max),
        }
    }
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "cylinder")]
    pub shape: ShapeArg,
    #[command(flatten)]
    pub ranges: RangeOptions,
    #[command(flatten)]
    pub synth: SynthOptions,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Noise levels, dB, or `clean`; repeatable.
    #[arg(long = "snr", default_values = ["clean", "20", "10"])]
    pub snrs: Vec<String>,
    /// Evaluate the recordings listed in a dataset manifest instead.
    #[arg(long, conflicts_with = "classes")]
    pub manifest: Option<PathBuf>,
    /// Run the shape-classification evaluation instead.
    #[arg(long)]
    pub classes: bool,
    /// Write overlay curves for this many leading samples.
    #[arg(long, default_value_t = 3)]
    pub curves: usize,
    #[command(flatten)]
    pub ranges: RangeOptions,
    #[command(flatten)]
    pub tracker: TrackerOptions,
}

fn parse_snr(s: &str) -> AppResult<Option<f64>> {
    if s.eq_ignore_ascii_case("clean") {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| AppError::Usage(format!("invalid SNR `{s}`; expected a number or `clean`")))
}

fn emit(text: String, json: &impl serde::Serialize, format: FormatArg) -> AppResult<()> {
    match format {
        FormatArg::Text => print!("{text}"),
        FormatArg::Json => {
            let s = serde_json::to_string_pretty(json).map_err(|e| AppError::Usage(e.to_string()))?;
            println!("{s}");
        }
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned())
}

pub fn run(cli: Cli) -> AppResult<()> {
    let g = &cli.global;
    let constants = g.constants()?;
    match cli.command {
        Command::Synth(a) => {
            let container = read_container(&a.container)?;
            let flow = match (a.flow, a.duration) {
                (Some(q), _) => q * 1e-6,
                (None, Some(t)) if t > 0.0 => container.volume() / t,
                _ => return Err(AppError::Usage("--duration must be positive".into())),
            };
            let render = synthesize_pour(&container, flow, &a.synth.config(g), &constants)?;
            write_wav(&g.out.join(format!("{}.wav", a.name)), &render.audio)?;
            write_truth(&g.out.join(format!("{}_truth.csv", a.name)), &render.truth, &constants)?;
            println!(
                "{:.3} s at {:.3} ml/s -> {}",
                render.truth.fill.duration,
                flow * 1e6,
                g.out.join(format!("{}.wav", a.name)).display()
            );
        }
        Command::Analyze(a) => {
            let audio = read_wav(&a.audio, g.sample_rate)?;
            let mut config = a.tracker.config(g);
            config.cuts = a.cuts.clone();
            if a.local_slope {
                config.time_to_fill.method = SlopeMethod::LocalRegression;
            }
            if a.printed_correction {
                config.time_to_fill.correction = EndCorrectionForm::AsPrinted;
            }
            let analysis = analyze_audio(&audio, &config, &constants)?;
            let name = stem(&a.audio);
            let frame_rms = audio.frame_rms(config.window_size, config.hop_size);
            let rms: Vec<f64> = analysis
                .track
                .frames
                .iter()
                .map(|f| interpolate(&frame_rms, f.t, |&(t, r)| (t, r)))
                .collect();
            write_track(&g.out.join(format!("{name}_track.csv")), &analysis.track, Some(&rms))?;
            if let (true, Some(spec)) = (a.spectrogram, &analysis.spectrogram) {
                let sidecar = MatrixSidecar {
                    rows: spec.n_frames(),
                    cols: spec.n_bins(),
                    row_times_s: spec.frame_times.clone(),
                    col_values: spec.bin_freqs.clone(),
                    col_unit: "Hz".into(),
                    value_unit: "magnitude".into(),
                };
                write_matrix(&g.out.join(format!("{name}_spectrogram.csv")), &spec.magnitudes, &sidecar)?;
            }
            let report = PropertyReport::new(&analysis.estimate, config.tracker.name());
            write_json(&g.out.join(format!("{name}_report.json")), &report)?;
            write_atomic(&g.out.join(format!("{name}_report.txt")), report.to_text().as_bytes())?;
            emit(report.to_text(), &report, a.format)?;
        }
        Command::Classify(a) => {
            let audio = read_wav(&a.audio, g.sample_rate)?;
            let config = a.tracker.config(g);
            let (track, _) = track_pitch(&audio, &config, &constants)?;
            let classify = ClassifyConfig {
                seed: g.seed,
                ..ClassifyConfig::default()
            };
            let class = classify_shape(&track, audio.duration(), &classify)?;
            let report = ClassReport::new(&class);
            emit(report.to_text(), &report, a.format)?;
        }
        Command::Scale(a) => {
            let file = read_track(&a.track, &constants)?;
            let rms = file
                .rms
                .ok_or_else(|| AppError::format(&a.track, "track has no rms column"))?;
            let pixels = read_pixel_track(&a.pixels)?;
            let defaults = AnalysisConfig::default();
            let curve = fit_wavelength(&file.track, a.model.into(), &defaults.ransac, g.seed)?;
            let scale = estimate_scale(&curve, &pixels, &rms, &constants)?;
            let report = ScaleReport::new(&scale);
            if let Some(w) = &report.warning {
                eprintln!("warning: {w}");
            }
            emit(report.to_text(), &report, a.format)?;
        }
        Command::PseudoLabels(a) => {
            let tdm = read_tdm(&a.tdm)?;
            let config = PseudoLabelConfig {
                smoothing: if a.no_smoothing { None } else { PseudoLabelConfig::default().smoothing },
                ..PseudoLabelConfig::default()
            };
            let labels = fit_pseudo_labels(&tdm, (a.top, a.bottom), a.radius_px, &config, g.seed)?;
            let path = g.out.join(format!("{}_pixels.csv", stem(&a.tdm)));
            write_pixel_track(&path, &labels.track)?;
            let [c0, c1, c2] = labels.coefficients;
            println!("surface row(t) = {c0:.4} + {c1:.4} t + {c2:.6} t^2 -> {}", path.display());
        }
        Command::Dataset(a) => {
            let m = write_dataset(
                &g.out,
                a.n,
                a.shape.into(),
                &a.ranges.ranges(),
                &a.synth.config(g),
                &constants,
                g.seed,
            )?;
            println!("{} pours -> {}", m.entries.len(), g.out.join("manifest.json").display());
        }
        Command::Eval(a) => {
            let analysis = a.tracker.config(g);
            if a.classes {
                let config = ClassEvalConfig {
                    n_per_shape: a.n,
                    ranges: a.ranges.ranges(),
                    synth: SynthConfig {
                        sample_rate: g.sample_rate,
                        ..SynthConfig::default()
                    },
                    analysis,
                    constants,
                    seed: g.seed,
                    ..ClassEvalConfig::default()
                };
                let report = run_classification_eval(&config)?;
                write_json(&g.out.join("classification_report.json"), &report)?;
                println!("accuracy {:.4}", report.accuracy);
                for (truth, row) in &report.confusion {
                    let cells: Vec<String> = row.iter().map(|(p, n)| format!("{p}={n}")).collect();
                    println!("  {truth:<12} {}", cells.join(" "));
                }
                return Ok(());
            }
            let report = match &a.manifest {
                Some(m) => {
                    let report = run_manifest_eval(m, &analysis, &constants)?;
                    write_json(&g.out.join("eval_report.json"), &report)?;
                    write_atomic(&g.out.join("eval_report.txt"), report.to_text().as_bytes())?;
                    report
                }
                None => {
                    let config = EvalConfig {
                        n: a.n,
                        ranges: a.ranges.ranges(),
                        snrs_db: a.snrs.iter().map(|s| parse_snr(s)).collect::<AppResult<_>>()?,
                        synth: SynthConfig {
                            sample_rate: g.sample_rate,
                            ..SynthConfig::default()
                        },
                        analysis,
                        constants,
                        seed: g.seed,
                        curve_samples: a.curves,
                    };
                    run_eval_to_dir(&config, &g.out)?
                }
            };
            print!("{}", report.to_text());
        }
    }
    Ok(())
}
