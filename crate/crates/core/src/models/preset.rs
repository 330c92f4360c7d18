//! Bundled example networks.

use nalgebra::{DMatrix, DVector};

use super::{
    CouplingFunction, CouplingKind, CouplingLink, CouplingSpec, LeaderModel, MatchingParams, ReferenceInput,
    SlotAssignment, StaticNonlinearity,
};
use crate::control::ControllerConfig;
use crate::scenario::{FollowerSpec, Scenario};
use crate::sim::SimConfig;

pub const PRESET_NAMES: [&str; 3] = ["chua5", "chua5-strong-coupling", "isolated-node"];

/// Looks a bundled scenario up by its CLI name.
pub fn preset_by_name(name: &str) -> Option<Scenario> {
    match name {
        "chua5" => Some(chua_network_preset()),
        "chua5-strong-coupling" => Some(chua5_strong_coupling_preset()),
        "isolated-node" => Some(isolated_node_preset()),
        _ => None,
    }
}

const M0: f64 = -8.0 / 7.0;
const M1: f64 = -5.0 / 7.0;
const P: f64 = 15.6;
const B: f64 = 1.0;

/// Chua circuit in Lurie form with the reference input that turns the
/// leader chaotic.
pub fn chua_leader() -> LeaderModel {
    let a = DMatrix::from_row_slice(3, 3, &[-1.0, 0.0, 0.0, 1.0, -1.0, 1.0, 0.0, -30.0, 0.0]);
    let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
    let gains = DVector::from_vec(vec![(-(1.0 + M0) * P + 1.0) / B, P / B, 0.0]);
    LeaderModel::new(
        a,
        e1.clone(),
        DMatrix::from_column_slice(3, 1, e1.as_slice()),
        StaticNonlinearity::chua(M0, M1, P, B).expect("valid Chua parameters"),
        ReferenceInput::LinearFeedback(gains),
        DVector::from_vec(vec![1.0]),
    )
    .expect("valid Chua leader")
}

const NU: [f64; 5] = [3.0, 1.0, 4.0, 1.0, 5.0];

const X0: [[f64; 3]; 5] =
    [[7.0, 14.0, 0.4], [0.0, 4.0, 4.0], [1.0, -1.0, 4.5], [3.0, -4.0, 0.2], [2.0, 8.0, 15.0]];

const LEADER_X0: [f64; 3] = [0.5, 0.0, 0.0];

use CouplingKind::{LinDiff as Lin, SinDiff as Sin};

/// `(i, j, α, [(slot, kind, index)])`, 1-based.
#[rustfmt::skip]
const LINKS: [(usize, usize, f64, &[(usize, CouplingKind, usize)]); 13] = [
    (1, 2, 0.0051, &[(1, Sin, 1)]),
    (1, 3, 0.1395, &[(2, Lin, 2)]),
    (1, 5, 0.1676, &[(3, Sin, 3)]),
    (2, 1, 0.0662, &[(1, Lin, 1), (3, Lin, 3)]),
    (2, 3, 0.0921, &[(2, Sin, 2)]),
    (2, 4, 0.0065, &[(2, Lin, 2)]),
    (3, 1, 0.2013, &[(1, Sin, 1)]),
    (3, 4, 0.2271, &[(1, Sin, 1)]),
    (3, 5, 0.1430, &[(1, Lin, 1), (2, Lin, 2), (3, Lin, 3)]),
    (4, 1, 0.0907, &[(2, Sin, 2)]),
    (4, 3, 0.0675, &[(1, Sin, 1)]),
    (5, 1, 0.0663, &[(1, Lin, 1), (3, Lin, 3)]),
    (5, 4, 0.2773, &[(2, Lin, 2)]),
];

fn chua_couplings() -> CouplingSpec {
    let links = LINKS.iter().map(|&(i, j, alpha, terms)| {
        let phi = CouplingFunction::new(
            terms
                .iter()
                .map(|&(slot, kind, index)| SlotAssignment { slot: slot - 1, kind, index: index - 1 })
                .collect(),
        );
        ((i - 1, j - 1), CouplingLink { alpha, phi, lipschitz: 1.0 })
    });
    CouplingSpec::new(5, 3, links).expect("valid preset couplings")
}

/// Five Chua followers with `ν = (3, 1, 4, 1, 5)`, `θ_i = 1/i` and sparse
/// sine/linear couplings; `Γ_i = I`, `τ_i(0) = 0`.
pub fn chua_network_preset() -> Scenario {
    let leader = chua_leader();
    let followers = (0..5)
        .map(|i| {
            FollowerSpec::Matching(
                MatchingParams::new(DVector::from_vec(vec![NU[i]]), 1.0 / (i as f64 + 1.0)).expect("theta > 0"),
            )
        })
        .collect();
    let controller = ControllerConfig::identity(5, leader.g().clone());
    Scenario::new(
        "chua5",
        leader,
        followers,
        chua_couplings(),
        controller,
        SimConfig::default(),
        DVector::from_column_slice(&LEADER_X0),
        X0.iter().map(|x| DVector::from_column_slice(x)).collect(),
    )
    .expect("valid chua5 preset")
}

/// [`chua_network_preset`] with every coupling gain multiplied by 100,
/// far beyond the admissible bound.
pub fn chua5_strong_coupling_preset() -> Scenario {
    chua_network_preset()
        .with_coupling_scale(100.0)
        .expect("scaling keeps the couplings valid")
        .with_name("chua5-strong-coupling")
}

/// A single uncoupled Chua follower with `ν = 3`, `θ = 1`.
pub fn isolated_node_preset() -> Scenario {
    let leader = chua_leader();
    let controller = ControllerConfig::identity(1, leader.g().clone());
    Scenario::new(
        "isolated-node",
        leader,
        vec![FollowerSpec::Matching(MatchingParams::new(DVector::from_vec(vec![3.0]), 1.0).expect("theta > 0"))],
        CouplingSpec::empty(1),
        controller,
        SimConfig::default(),
        DVector::from_column_slice(&LEADER_X0),
        vec![DVector::from_column_slice(&X0[0])],
    )
    .expect("valid isolated-node preset")
}
