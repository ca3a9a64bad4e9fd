//! Reactive navigation for a car-like ground vehicle: a simulated laser
//! scanner, the VPH+ direction planner, and a constrained linear MPC steering
//! controller, tied together by a closed-loop simulator.

pub mod geometry;
pub mod mpc;
pub mod simloop;
pub mod vehicle;
pub mod vph;
pub mod world;
