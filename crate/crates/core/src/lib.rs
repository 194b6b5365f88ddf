//! Physics of liquid pouring into a container, seen through its sound.
//!
//! The air column above the liquid behaves like a pipe closed at one end, so
//! the fundamental wavelength of the pouring sound tracks the air-column
//! length linearly: `λ(t) = 4 (l(t) + β R)`. This crate provides
//!
//! - [`physics`]: forward resonance laws, fill dynamics and the inverse map
//!   from a wavelength curve to height, radius, flow rate and time-to-fill,
//!   plus shape classification from the curvature of `λ(t)`;
//! - [`synth`]: a deterministic additive synthesizer for pouring sounds;
//! - [`pitch`]: STFT, argmax and YIN pitch trackers, RANSAC wavelength fits
//!   and the wavelength bin encoding;
//! - [`cosup`]: scale-factor estimation between audio wavelengths and pixel
//!   measurements, and pseudo-label fitting on temporal difference maps;
//! - [`analysis`]: the end-to-end audio → properties pipeline.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and the
//! evaluation harness live in the `pourpitch` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod analysis;
pub mod cosup;
pub mod error;
mod lsq;
pub mod physics;
pub mod pitch;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    frequency_of_wavelength, wavelength_of_frequency, AudioBuffer, ContainerSpec, FillProfile,
    FillSample, Neck, PhysicsConstants, PitchFrame, PitchTrack, RadialParams, Shape, TrackSource,
    WavelengthSample,
};
