//! Fourier-optics model of four-wave-mixing mode conversion.
//!
//! A Gaussian probe limited by an annular pump behaves like a Gaussian beam
//! through an annular aperture. This crate builds that picture numerically:
//! sampled fields and masks ([`grid`], [`aperture`]), Fraunhofer and lens
//! transforms with their closed-form counterparts ([`propagation`]), the
//! phase-matching gain used as a soft aperture ([`gain`]), and slice
//! extraction with annular-Airy fits ([`profile`]). [`pipeline`] strings
//! them together from a [`config::ScenarioConfig`].

pub mod aperture;
pub mod config;
pub mod error;
mod fft;
pub mod gain;
pub mod grid;
pub mod io;
pub mod pipeline;
pub mod profile;
pub mod propagation;
pub mod special;

pub use error::{Error, Result};
