//! Binaural signal matching (BSM) filter design and evaluation for
//! few-microphone arrays.
//!
//! The toolkit designs per-frequency filters `c` so that `c^H x`, applied to
//! the signals `x` of an arbitrary M-microphone array, approximates the ear
//! signals a listener at the array position would receive. Three designs are
//! provided:
//!
//! * **LS** — the regularized least-squares closed form,
//! * **MagLS** — magnitude matching above a cutoff with recursive phase
//!   propagation across frequency,
//! * **iMagLS** — MagLS extended with an interaural-level-difference (ILD)
//!   term and a magnitude-derivative smoothness term, solved by training a
//!   small complex-valued MLP with Adam.
//!
//! Supporting modules generate analytic array transfer functions (rigid
//! sphere, free field) and a spherical-head HRTF, simulate shoebox rooms with
//! the image method, apply filters to audio, and score results with the
//! NMSE / magnitude / ILD / BSD / LSD metric suite.
//!
//! The `bsmkit` binary drives the full pipeline; see the `cli` module.

pub mod acoustics;
pub mod analysis;
pub mod audio;
pub mod autodiff;
pub mod cli;
pub mod design;
pub mod error;
pub mod filterbank;
pub mod grid;
pub mod imagls;
pub mod manifest;
pub mod metrics;
pub mod render;
pub mod roomsim;
pub mod tfset;

pub use error::{BsmError, Result};
pub use grid::{great_circle_angle, horizontal_subgrid, Direction, DirectionGrid, FrequencyGrid};
pub use tfset::{FilterSet, MethodTag, TfKind, TransferFunctionSet};
