#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError, TestRunner};

use syncnet::control::{Adaptation, ControllerConfig};
use syncnet::models::{
    chua_leader, chua_network_preset, isolated_node_preset, CouplingFunction, CouplingKind, CouplingLink, CouplingSpec, LeaderModel,
    MatchingParams, PiecewiseLinear, ReferenceInput, SlotAssignment, StaticNonlinearity,
};
use syncnet::scenario::{parse_scenario, FollowerSpec, Scenario};
use syncnet::sim::{integrate, JointState, Method, SimConfig};
use syncnet::verify::{default_omega_grid, g_monotone_check, g_transfer, stability_degree};

pub fn one() -> DVector<f64> {
    DVector::from_element(1, 1.0)
}

/// Runs `body` on `cases` inputs drawn from `strategy` with a fixed seed.
pub fn run_seeded<S: Strategy>(
    seed: u64,
    cases: u32,
    strategy: S,
    body: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config { cases, rng_seed: RngSeed::Fixed(seed), failure_persistence: None, ..Config::default() };
    TestRunner::new(config).run(&strategy, body).map_err(|e| e.to_string())
}

/// Well-conditioned `n×n` change of basis: identity plus a bounded
/// perturbation of norm below one half.
pub fn similarity(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-1.0..1.0f64, n * n)
        .prop_map(move |v| DMatrix::identity(n, n) + DMatrix::from_vec(n, n, v) * (0.5 / n as f64))
}

pub fn transformed(leader: &LeaderModel, t: &DMatrix<f64>) -> LeaderModel {
    let ti = t.clone().try_inverse().expect("well conditioned");
    LeaderModel::new(
        t * leader.a() * &ti,
        t * leader.b(),
        ti.transpose() * leader.c(),
        leader.psi0().clone(),
        ReferenceInput::Zero,
        leader.g().clone(),
    )
    .unwrap()
}

/// `gᵀχ(iω)` and the stability degree are unchanged by a state-space
/// change of basis.
pub fn check_similarity(t: DMatrix<f64>) -> Result<(), TestCaseError> {
    let base = chua_leader();
    let moved = transformed(&base, &t);
    for w in default_omega_grid() {
        let s = Complex::new(0.0, w);
        let a = g_transfer(&base, &one(), s).unwrap();
        let b = g_transfer(&moved, &one(), s).unwrap();
        prop_assert!((a - b).norm() <= 1e-8, "omega = {w}: {a} vs {b}");
    }
    let (ra, rb) = (stability_degree(base.a()).unwrap(), stability_degree(moved.a()).unwrap());
    prop_assert!((ra - rb).abs() <= 1e-8, "{ra} vs {rb}");
    Ok(())
}

/// A point on the leader's attractor: the preset leader state at a random
/// time in `[0, 40]`.
pub fn leader_state() -> impl Strategy<Value = [f64; 3]> {
    (0.0..40.0f64).prop_map(|t0| {
        let sc = isolated_node_preset();
        let cfg = SimConfig { t_end: t0, record_stride: 1_000_000, ..SimConfig::default() };
        let trace = integrate(sc.network(), sc.controller(), &cfg, &sc.initial_state()).unwrap();
        let x = &trace.states.last().unwrap().x_bar;
        [x[0], x[1], x[2]]
    })
}

/// Starting every follower on the leader with `τ_i = τ_i*` keeps the
/// errors at rounding level over the whole horizon.
pub fn check_manifold(x0: [f64; 3], t_end: f64) -> Result<(), TestCaseError> {
    let sc = chua_network_preset();
    let net = sc.network();
    let tau: Vec<DVector<f64>> = sc
        .follower_specs()
        .iter()
        .map(|f| match f {
            FollowerSpec::Matching(mp) => mp.tau_star(),
            FollowerSpec::Raw { .. } => unreachable!(),
        })
        .collect();
    let x0 = DVector::from_column_slice(&x0);
    let init = JointState::new(x0.clone(), vec![x0; net.d()], tau);
    let cfg = SimConfig { t_end, ..SimConfig::default() };
    let trace = integrate(net, sc.controller(), &cfg, &init).unwrap();
    let worst = trace.max_error().into_iter().fold(0.0, f64::max);
    prop_assert!(worst < 1e-8, "max error {worst}");
    Ok(())
}

pub fn pwl() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (0usize..4).prop_flat_map(|k| {
        (
            proptest::collection::vec(0.05..3.0f64, k),
            proptest::collection::vec(-5.0..5.0f64, k + 1),
            -5.0..5.0f64,
        )
            .prop_map(|(gaps, slopes, start)| {
                let mut bps = Vec::with_capacity(gaps.len());
                let mut x = start;
                for gap in gaps {
                    bps.push(x);
                    x += gap;
                }
                (bps, slopes)
            })
    })
}

/// The exact slope verdict equals the sign test on every piece and the
/// overall verdict never contradicts it.
pub fn check_monotone((bps, slopes): (Vec<f64>, Vec<f64>), g: f64) -> Result<(), TestCaseError> {
    let nl = StaticNonlinearity::PiecewiseLinear(PiecewiseLinear::new(bps, slopes.clone(), 0.0).unwrap());
    let gv = DVector::from_element(1, g);
    let r = g_monotone_check(&nl, &gv, 2000, (-20.0, 20.0), 0).unwrap();
    let expected = slopes.iter().all(|s| g * s <= 0.0);
    prop_assert_eq!(r.exact, Some(expected));
    prop_assert_eq!(r.ok, expected);
    Ok(())
}

pub fn check_chua_monotone(m0: f64, m1: f64, p: f64, g: f64) -> Result<(), TestCaseError> {
    let nl = StaticNonlinearity::chua(m0, m1, p, 1.0).unwrap();
    let r = g_monotone_check(&nl, &DVector::from_element(1, g), 2000, (-10.0, 10.0), 0).unwrap();
    prop_assert_eq!(r.ok, g * p * (m0 - m1) <= 0.0);
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ScenarioDraw {
    pub theta: Vec<f64>,
    pub nu: Vec<f64>,
    pub x0: Vec<f64>,
    pub links: Vec<(usize, usize, f64, Vec<(usize, bool, usize)>)>,
    pub gamma_diag: Vec<f64>,
    pub tau0: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub euler: bool,
    pub frozen: bool,
}

pub fn scenario_draw() -> impl Strategy<Value = ScenarioDraw> {
    let d = 3usize;
    let link = (0..d, 0..d, -2.0..2.0f64, proptest::collection::vec((0..3usize, any::<bool>(), 0..3usize), 0..3));
    (
        proptest::collection::vec(0.01..100.0f64, d),
        proptest::collection::vec(-10.0..10.0f64, d),
        proptest::collection::vec(-20.0..20.0f64, 3 * (d + 1)),
        proptest::collection::vec(link, 0..6),
        proptest::collection::vec(0.1..10.0f64, 2 * d),
        proptest::collection::vec(-5.0..5.0f64, 2 * d),
        1e-4..1e-1f64,
        0.0..100.0f64,
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(theta, nu, x0, links, gamma_diag, tau0, dt, t_end, euler, frozen)| ScenarioDraw {
            theta,
            nu,
            x0,
            links,
            gamma_diag,
            tau0,
            dt,
            t_end,
            euler,
            frozen,
        })
}

pub fn build_scenario(draw: &ScenarioDraw) -> Scenario {
    let d = draw.theta.len();
    let leader = chua_leader();
    let followers = (0..d)
        .map(|i| FollowerSpec::Matching(MatchingParams::new(DVector::from_element(1, draw.nu[i]), draw.theta[i]).unwrap()))
        .collect();
    let mut seen = std::collections::BTreeSet::new();
    let mut links = Vec::new();
    for (i, j, alpha, terms) in &draw.links {
        if i == j || !seen.insert((*i, *j)) {
            continue;
        }
        let mut slots = std::collections::BTreeSet::new();
        let terms = terms
            .iter()
            .filter(|(slot, _, _)| slots.insert(*slot))
            .map(|&(slot, sin, index)| SlotAssignment {
                slot,
                kind: if sin { CouplingKind::SinDiff } else { CouplingKind::LinDiff },
                index,
            })
            .collect();
        let phi = CouplingFunction::new(terms);
        let lipschitz = phi.lipschitz().max(1.0);
        links.push(((*i, *j), CouplingLink { alpha: *alpha, phi, lipschitz }));
    }
    let couplings = CouplingSpec::new(d, 3, links).unwrap();
    let gamma = (0..d)
        .map(|i| DMatrix::from_diagonal(&DVector::from_column_slice(&draw.gamma_diag[2 * i..2 * i + 2])))
        .collect();
    let tau0 = (0..d).map(|i| DVector::from_column_slice(&draw.tau0[2 * i..2 * i + 2])).collect();
    let adaptation = if draw.frozen { Adaptation::Frozen } else { Adaptation::SpeedGradient };
    let controller = ControllerConfig::new(gamma, leader.g().clone(), tau0, adaptation).unwrap();
    let sim = SimConfig {
        t_end: draw.t_end,
        dt: draw.dt,
        method: if draw.euler { Method::Euler } else { Method::Rk4 },
        record_stride: 7,
        seed: 3,
    };
    Scenario::new(
        "drawn",
        leader,
        followers,
        couplings,
        controller,
        sim,
        DVector::from_column_slice(&draw.x0[..3]),
        (0..d).map(|i| DVector::from_column_slice(&draw.x0[3 * (i + 1)..3 * (i + 2)])).collect(),
    )
    .unwrap()
}

pub fn check_round_trip(draw: ScenarioDraw) -> Result<(), TestCaseError> {
    let s = build_scenario(&draw);
    let text = s.emit();
    let back = parse_scenario(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
    prop_assert_eq!(&back, &s);
    prop_assert_eq!(back.emit(), text);
    Ok(())
}
