//! Desk-scale training toolkit for force-conditioned denoising of
//! non-equilibrium structures (DeNS) with a small equivariant
//! message-passing network.
//!
//! The crate is organized around the pieces needed to train and probe the
//! method end to end on a synthetic Lennard-Jones relaxation dataset:
//!
//! - [`autodiff`]: dense f64 tensors with a reverse-mode tape.
//! - [`so3`]: real SO(3) representation machinery (spherical harmonics,
//!   Wigner-D matrices, Clebsch-Gordan couplings, equivariant ops).
//! - [`model`]: the "EquiLite" equivariant GNN with energy, force, and
//!   noise heads.
//! - [`encode`]: force encoding into irreps node embeddings.
//! - [`dens`]: structure corruption, loss functions, and the mixed-batch
//!   training step.
//! - [`data`]: Lennard-Jones relaxation-trajectory generator, extended-XYZ
//!   frame files, and batching.
//! - [`train`]: AdamW, schedules, gradient clipping, EMA, the fit loop,
//!   evaluation, and checkpointing.

pub mod autodiff;
pub mod data;
pub mod rng;
pub mod so3;

pub use autodiff::{GradMap, NumError, Tape, Tensor, TensorId};
pub use so3::{IrrepsLayout, Rotation};
