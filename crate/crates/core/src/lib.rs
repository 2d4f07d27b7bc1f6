//! Robust stability and performance analysis of LTI systems with dynamic
//! uncertainties, via LMI tests with dynamic (filtered) multipliers and
//! terminal-cost integral quadratic constraints.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`lti`] — state-space algebra, frequency evaluation, simulation;
//! * [`valueset`] — descriptions of the uncertainty value sets and membership;
//! * [`multiplier`] — basis filters, outer factors, middle/terminal structures;
//! * [`builder`] — assembly of the semidefinite feasibility/optimization
//!   problems for the static and dynamic tests;
//! * [`sdp`] — an in-process interior-point backend plus solver-independent
//!   solution checking;
//! * [`sdpa`] — SDPA sparse-format export/import;
//! * [`verify`] — independent certificate verification (frequency sweeps,
//!   dissipation simulation, commutation and invariance checks);
//! * [`netex`] — the cyclic-network worked example end to end.
//!
//! All types are immutable values and all operations are pure functions, so
//! everything here can be used from concurrent callers without locking.

pub mod affine;
pub mod builder;
pub mod error;
pub mod jsonmat;
pub mod lti;
pub mod multiplier;
pub mod netex;
pub mod problem;
pub mod sdp;
pub mod sdpa;
pub mod valueset;
pub mod verify;

pub use error::{Error, Result};
pub use lti::{Omega, SampledSignal, StateSpace};
pub use multiplier::{BasisFilter, FilterFamily, MultiplierRecipe, TestKind};
pub use problem::{BlockSense, Certificate, LmiBlock, PerfChannel, Plant, SdpProblem};
pub use sdp::{SdpSolution, SolveStatus, SolverOptions, SolverReport};
pub use valueset::{SetKind, ValuePoint, ValueSet};
pub use verify::{DissipationReport, KypWitness};
