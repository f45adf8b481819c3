//! Equilibrium point fields: kernels, samplers and correlation estimates.

pub mod correlation;
pub mod dpp;
pub mod ensembles;
pub mod gibbs;
pub mod ginibre;
pub mod kernel;
pub mod model;

pub use correlation::{estimate_correlations, sample_poisson, CorrelationEstimate, PairBin};
pub use dpp::{sample_dpp, DppSampler};
pub use ensembles::sample_sine_bulk;
pub use gibbs::{sample_gibbs, sample_gibbs_with, GibbsOptions};
pub use ginibre::sample_ginibre;
pub use kernel::{kernel_eval, pair_correlation};
pub use model::{ModelSpec, PairPotential, Smoothness};
