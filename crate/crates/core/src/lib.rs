//! Simulation and verification of max-infinitely divisible and infinitely
//! divisible processes built from Poisson spectral representations.
//!
//! A process is represented by a family of spectral functions `f_t` on a
//! σ-finite measure space `(Ω, μ)`. Given a Poisson point process `Π` with
//! intensity `μ`, the max-integral `sup_i f_t(U_i)` and the compensated
//! sum-integral realize the process. The crate provides
//!
//! * [`point_process`]: exact Poisson sampling on finite-mass windows,
//!   thinning and superposition;
//! * [`spectral`]: the model zoo (i.i.d., mixed moving maxima, Poisson line
//!   storms, Penrose fields, Boolean sets, Fréchet lifts);
//! * [`integrator`]: max- and sum-integrals, truncation certificates, the
//!   correction term γ and the metrics `d`, `d_μ` and Ky Fan;
//! * [`gaussian`]: exact Brownian paths and isotropic fBm fields;
//! * [`exactdist`]: closed-form finite-dimensional laws;
//! * [`flowclass`]: the conservative/dissipative integral test;
//! * [`commands`]: the workflows behind the `maxid` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod exactdist;
pub mod field;
pub mod flowclass;
pub mod gaussian;
pub mod geometry;
pub mod integrator;
pub mod point_process;
pub mod quadrature;
pub mod raster;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
