//! Decentralized adaptive synchronization of leader-follower networks of
//! Lurie-type systems.
//!
//! The crate is split along the lines of the workflow:
//!
//! - [`models`]: leader, followers, couplings and static nonlinearities.
//! - [`control`]: the per-node tunable law `u_i = τ_iᵀ σ_i` and its
//!   speed-gradient adaptation.
//! - [`sim`]: fixed-step integration of the closed loop and synchronization
//!   metrics.
//! - [`verify`]: frequency-domain passivity, Lyapunov certificate search and
//!   the coupling-strength bound.
//! - [`scenario`]: the TOML scenario format and the bundled presets.

pub mod control;
pub mod error;
pub mod linalg;
pub mod models;
pub mod scenario;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
