//! Mono 16-bit PCM WAV in, any PCM or float WAV out of the wild.

use std::io::Cursor;
use std::path::Path;

use audioadapter_buffers::direct::InterleavedSlice;
use pourpitch_core::AudioBuffer;
use rubato::{Fft, FixedSync, Resampler};

use super::atomic::write_atomic;
use crate::error::{AppError, AppResult};

/// Working rate of the analysis pipeline.
pub const WORKING_RATE: u32 = 16_000;

/// Reads a WAV file, averages its channels and resamples to `target_rate`.
pub fn read_wav(path: &Path, target_rate: u32) -> AppResult<AudioBuffer> {
    let file = std::fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut reader = hound::WavReader::new(std::io::BufReader::new(file)).map_err(|e| AppError::format(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<Result<_, _>>()
        }
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>(),
    }
    .map_err(|e| AppError::format(path, e))?;
    if interleaved.is_empty() {
        return Err(AppError::format(path, "no audio samples"));
    }
    let mono: Vec<f64> = interleaved
        .chunks(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    let mono = if spec.sample_rate == target_rate {
        mono
    } else {
        resample(&mono, spec.sample_rate, target_rate).map_err(|m| AppError::format(path, m))?
    };
    AudioBuffer::new(target_rate, mono).map_err(|e| AppError::format(path, e))
}

/// Band-limited FFT resampling of a mono signal.
pub fn resample(samples: &[f64], from: u32, to: u32) -> Result<Vec<f64>, String> {
    let mut resampler =
        Fft::<f64>::new(from as usize, to as usize, 1024, 1, 1, FixedSync::Both).map_err(|e| e.to_string())?;
    let input = InterleavedSlice::new(samples, 1, samples.len()).map_err(|e| e.to_string())?;
    let mut out = vec![0.0; resampler.process_all_needed_output_len(samples.len())];
    let out_frames = out.len();
    let mut output = InterleavedSlice::new_mut(&mut out, 1, out_frames).map_err(|e| e.to_string())?;
    let (_, produced) = resampler
        .process_all_into_buffer(&input, &mut output, samples.len(), None)
        .map_err(|e| e.to_string())?;
    out.truncate(produced);
    Ok(out)
}

/// Encodes mono 16-bit PCM. Samples are clipped to `[-1, 1)`.
pub fn encode_wav(audio: &AudioBuffer) -> AppResult<Vec<u8>> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut cursor = Cursor::new(Vec::new());
    let to_err = |e: hound::Error| AppError::format("<wav>", e);
    {
        let mut w = hound::WavWriter::new(&mut cursor, spec).map_err(to_err)?;
        for &x in &audio.samples {
            // same full-scale as the reader, so round trips lose at most half a step
            let q = (x * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64);
            w.write_sample(q as i16)
                .map_err(to_err)?;
        }
        w.finalize().map_err(to_err)?;
    }
    Ok(cursor.into_inner())
}

pub fn write_wav(path: &Path, audio: &AudioBuffer) -> AppResult<()> {
    write_atomic(path, &encode_wav(audio)?)
}
