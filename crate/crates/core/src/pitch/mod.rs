//! Time–frequency analysis, pitch tracking and wavelength-curve fitting.

pub mod argmax;
pub mod bins;
pub mod fft;
pub mod fit;
pub mod spectrogram;
pub mod yin;

pub use argmax::{track_argmax, ArgmaxConfig};
pub use bins::{decode_bins, encode_bins, BinEncoding, BinEncodingConfig};
pub use fit::{fit_samples, fit_wavelength, CurveParams, FittedCurve, ModelKind, RansacConfig};
pub use spectrogram::{spectrogram, Spectrogram};
pub use yin::{track_yin, YinConfig};
