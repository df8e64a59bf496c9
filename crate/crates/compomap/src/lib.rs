//! Composition-map chaotic image cipher and the tooling that breaks it.
//!
//! The crate has three layers:
//!
//! * [`chaos`] — the two one-dimensional composition maps, orbit iteration,
//!   keystream quantization and dynamical diagnostics (Lyapunov exponents,
//!   parameter sweeps, map graphs).
//! * [`cipher`] — the permutation + two-stage confusion pipeline built on
//!   those keystreams, with full encrypt/decrypt.
//! * [`attack`] — a differential chosen-plaintext break of the cipher that
//!   recovers an equivalent key from `6 + ceil(log256(M*N))` queries, plus
//!   [`randomness`] and [`diffusion`] for the statistical side of the
//!   analysis.
//!
//! [`io`] holds the file formats (binary PGM images, JSON key files, attack
//! artifacts) shared by the CLI and the tests.

pub mod attack;
pub mod chaos;
pub mod cipher;
pub mod diffusion;
pub mod image;
pub mod io;
pub mod randomness;

pub use chaos::{FMapParams, GMapParams, KeystreamSet, Map, Orbit};
pub use cipher::{FSeed, GSeed, SecretKey};
pub use image::Image;
