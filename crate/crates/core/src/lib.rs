//! Tools for measuring the gap between discrete shift equivariance and
//! continuous translation equivariance of 1D convolutional layers.
//!
//! The pipeline is: build a continuous [`Signal`], discretize it onto a
//! [`Grid`], run it through a [`ConvLayer`], and compare against a shifted
//! copy using the residuals in [`equivariance`].

pub mod check;
pub mod cli;
pub mod convnet;
pub mod equivariance;
mod error;
mod plot;
pub mod quadrature;
pub mod sampling;
pub mod shifts;
pub mod signals;

pub use convnet::{apply_layer, convolve, Boundary, ConvLayer, Kernel, Nonlinearity};
pub use equivariance::{
    discretization_commutation_residual, lipschitz_estimate, shift_equiv_residual, sweep,
    sweep_with_threads, translation_equiv_residual, Delta, Norms, ResidualRecord, SweepRow,
    SweepSpec,
};
pub use error::{Error, Result};
pub use sampling::{discretize_avg, discretize_sample, DiscreteSignal, Discretizer, Grid};
pub use shifts::{shift_frac, shift_int, Scheme};
pub use signals::{continuous_convolve, Side, Signal};
