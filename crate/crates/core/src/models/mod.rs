//! Domain types for the leader, the followers, their couplings and the
//! static nonlinearities, plus the bundled example networks.

mod coupling;
mod nonlinearity;
pub mod preset;
mod system;

pub use coupling::{CouplingFunction, CouplingKind, CouplingLink, CouplingSpec, SlotAssignment};
pub use nonlinearity::{PiecewiseLinear, StaticNonlinearity, Table};
pub use preset::{
    chua5_strong_coupling_preset, chua_leader, chua_network_preset, isolated_node_preset, preset_by_name, PRESET_NAMES,
};
pub use system::{
    eval_psi0, follower_from_matching, verify_matching, FollowerModel, LeaderModel, MatchingParams,
    NetworkModel, ReferenceInput,
};
