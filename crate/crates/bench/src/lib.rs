//! Shared fixtures for the criterion benchmarks: the cyclic-network
//! worked example at a configurable filter order, plus small signal and
//! system constructors that the individual benchmark targets reuse.

use nalgebra::DVector;

use iqc_core::builder;
use iqc_core::multiplier::{make_basis_filter, FilterFamily, MultiplierRecipe, TestKind};
use iqc_core::netex::{covering_set, CoveringKind, CyclicNetwork};
use iqc_core::problem::{Plant, SdpProblem};
use iqc_core::lti::{SampledSignal, StateSpace};

/// The network example's two-state subsystem with its performance channel.
pub fn example_plant() -> Plant {
    CyclicNetwork::example().auxiliary_plant()
}

/// The network example's gain-bound problem at basis order `nu`.
pub fn example_problem(nu: usize) -> SdpProblem {
    let plant = example_plant();
    let set = covering_set(CoveringKind::Intersection, plant.k()).unwrap();
    let filter = make_basis_filter(2.0, nu, set.k(), FilterFamily::Repeated).unwrap();
    let recipe = MultiplierRecipe::new(TestKind::DynIntersection, Some(filter), set).unwrap();
    builder::add_performance(builder::build_dynamic(&plant, &recipe).unwrap()).unwrap()
}

/// The subsystem's uncertainty channel as a plain state-space system.
pub fn example_system() -> StateSpace {
    example_plant().sys
}

/// A two-channel sinusoid sampled at `dt` for `steps` samples.
pub fn test_input(steps: usize, dt: f64) -> SampledSignal {
    let samples = (0..steps)
        .map(|i| {
            let t = i as f64 * dt;
            DVector::from_vec(vec![(2.0 * t).sin(), (0.7 * t).cos()])
        })
        .collect();
    SampledSignal::new(dt, samples)
}
