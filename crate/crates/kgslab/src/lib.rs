//! Radial spectral laboratory for the 3D Klein-Gordon-Schrodinger system.
//!
//! The crate has three layers:
//!
//! * spectral plumbing — radial grids, the sine-transform realization of the
//!   3D radial Fourier transform, dyadic frequency and modulation
//!   projections ([`radial`], [`cutoff`], [`frequency`]);
//! * analysis tools — mixed spacetime norms, exact grid p-variation,
//!   atom construction, resonance-function extremization, transversality
//!   quantities ([`norms`], [`resonance`], [`transversality`]);
//! * experiments — the first-order solver with Picard iteration and
//!   scattering diagnostics, and the seeded sweep harness probing linear,
//!   bilinear, and trilinear spacetime estimates ([`solver`],
//!   [`strichartz`], [`bilinear`], [`trilinear`], [`experiments`]).
//!
//! Everything randomized is seed-deterministic; sweep outputs are CSV plus a
//! JSON summary, byte-reproducible under a fixed config and seed.

pub mod bilinear;
pub mod config;
pub mod experiments;
pub mod cutoff;
pub mod frequency;
pub mod norms;
pub mod resonance;
pub mod solver;
pub mod strichartz;
pub mod sweep;
pub mod transversality;
pub mod trilinear;
pub mod radial;
pub mod report;

pub use frequency::{Flow, SpaceTimeField, TimeGrid};
pub use radial::{make_grid, FrequencyField, GridRef, RadialField};
