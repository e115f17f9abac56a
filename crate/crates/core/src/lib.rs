//! Learning low-dimensional polynomial dynamical models from trajectory data.
//!
//! Two training routes share one model class
//! `dq/dt = A_1 q + A_2 q^2 + ... + A_L q^L + B u`:
//!
//! * [`staticopinf`] fits the operators by (minimal-norm) linear least squares
//!   against finite-difference time derivatives.
//! * [`rollout`] unrolls the discrete flow map over several steps and fits the
//!   operators by Adam on the multi-step misfit, with exact gradients from the
//!   discrete adjoint of the unrolled map.
//!
//! Learned models are analyzed with [`metrics`] (time-averaged relative
//! prediction error) and [`stability`] (Lyapunov-based stability-radius
//! bounds). [`benchgen`] provides synthetic truth systems, including a coarse
//! periodic shallow-water solver, and [`experiment`] wires everything into
//! the end-to-end benchmark used by the CLI sweeps.

pub mod basis;
pub mod benchgen;
pub mod datamodel;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod polymodel;
pub mod rollout;
pub mod stability;
pub mod staticopinf;

pub use basis::ReducedBasis;
pub use datamodel::{SparseMask, TimeGrid, Trajectory, TrajectoryDataset};
pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};
pub use polymodel::{Operators, PolyModel, Scheme};
pub use rollout::{RollConfig, TrainConfig, TrainReport};
pub use stability::StabilityReport;
