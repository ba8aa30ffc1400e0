//! Simulation and analysis of polarization correlations in singlet proton pairs.

pub mod analysis;
pub mod histogram;
pub mod kinematics;
pub mod pipeline_io;
pub mod polarimeter;
pub mod rng;
pub mod spin_models;
pub mod timing;
