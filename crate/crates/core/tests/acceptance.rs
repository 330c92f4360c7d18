//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use syncnet::control::speed_gradient_lyapunov;
use syncnet::models::{
    chua_leader, chua_network_preset, isolated_node_preset, verify_matching, LeaderModel, ReferenceInput,
    StaticNonlinearity,
};
use syncnet::scenario::{FollowerSpec, Scenario};
use syncnet::sim::{integrate, sync_metrics, JointState, Method, SimConfig, Trace};
use syncnet::verify::{
    coupling_bound, default_omega_grid, frequency_condition_check, proof_matrix_m, solve_passivity_lmi,
    stability_degree, transfer_eval, verify_network, weighted_in_degrees, LmiOptions, VerifyOptions,
};

const TRANSFER_TOL: f64 = 1e-9;
const RHO_STAR_TOL: f64 = 1e-9;
const CONSTRAINT_TOL: f64 = 1e-8;
const SCALAR_RHO_MIN: f64 = 1.9;
const MATCHING_TOL: f64 = 1e-10;
const FINAL_ERROR_MAX: f64 = 0.1;
const TAU_NORM_MAX: f64 = 1e3;
const LATE_ERROR_MAX: f64 = 0.5;
const LATE_FROM: f64 = 35.0;
const LYAPUNOV_RUNS: usize = 20;
const LYAPUNOV_RADIUS: f64 = 20.0;
const IN_DEGREE_TOL: f64 = 1e-12;
const SCHEME_TOL: f64 = 1e-3;
const RK4_ORDER_MIN: f64 = 3.5;
const PROPERTY_SEEDS: std::ops::Range<u64> = 0..5;

struct Check {
    name: String,
    ok: bool,
    detail: String,
}

fn check(name: &str, ok: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), ok, detail: detail.into() }
}

fn timed(limit: Duration, started: Instant) -> Check {
    let took = started.elapsed();
    check("runtime", took < limit, format!("{took:.2?} < {limit:?}"))
}

fn one_vec() -> DVector<f64> {
    DVector::from_element(1, 1.0)
}

fn tau_star(sc: &Scenario) -> Vec<DVector<f64>> {
    sc.follower_specs()
        .iter()
        .map(|f| match f {
            FollowerSpec::Matching(mp) => mp.tau_star(),
            FollowerSpec::Raw { .. } => unreachable!("presets use matching parameters"),
        })
        .collect()
}

fn frequency_conditions() -> Vec<Check> {
    let started = Instant::now();
    let leader = chua_leader();
    let fc = frequency_condition_check(&leader, &one_vec(), &default_omega_grid()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let s = Complex::new(rng.random_range(-5.0..5.0), rng.random_range(-20.0..20.0));
        let rational = (s * s + s + 30.0) / (s * s * s + 2.0 * s * s + 31.0 * s + 30.0);
        let chi = transfer_eval(&leader, s).unwrap()[0];
        worst = worst.max((chi - rational).norm() / rational.norm().max(1.0));
    }
    vec![
        check("min Re g'chi(iw) > 0", fc.min_re > 0.0, format!("min {:.3e} at w = {}", fc.min_re, fc.argmin)),
        check("w^2 Re > 0 on top decade", fc.tail_min > 0.0, format!("min {:.6}", fc.tail_min)),
        check("transfer matches rational form", worst <= TRANSFER_TOL, format!("worst {worst:.2e}")),
        timed(Duration::from_secs(1), started),
    ]
}

fn stability_degree_check() -> Vec<Check> {
    let started = Instant::now();
    let rho = stability_degree(chua_leader().a()).unwrap();
    // roots of (s + 1)(s² + s + 30): −1 and −½ ± i√119/2
    let oracle = f64::min(1.0, 0.5);
    vec![
        check("rho* = 0.5", (rho - oracle).abs() <= RHO_STAR_TOL, format!("{rho:.15}")),
        timed(Duration::from_millis(100), started),
    ]
}

fn certificate() -> Vec<Check> {
    let started = Instant::now();
    let leader = chua_leader();
    let cert = solve_passivity_lmi(&leader, &one_vec(), &LmiOptions::default()).unwrap();
    let h = &cert.h;
    let a = leader.a();
    let lmin = SymmetricEigen::new(h.clone()).eigenvalues.min();
    let top = SymmetricEigen::new(h * a + a.transpose() * h + h * cert.rho).eigenvalues.max();
    let constraint = (h * leader.b() - leader.c() * one_vec()).norm();
    let rho_star = stability_degree(a).unwrap();

    let scalar = LeaderModel::new(
        DMatrix::from_element(1, 1, -1.0),
        one_vec(),
        DMatrix::from_element(1, 1, 1.0),
        StaticNonlinearity::Zero,
        ReferenceInput::Zero,
        one_vec(),
    )
    .unwrap();
    let scalar_rho = solve_passivity_lmi(&scalar, &one_vec(), &LmiOptions::default()).unwrap().rho;
    vec![
        check("lambda_min(H) > 0", lmin > 0.0, format!("{lmin:.3e}")),
        check("|HB - Cg| <= 1e-8", constraint <= CONSTRAINT_TOL, format!("{constraint:.1e}")),
        check("lambda_max(HA + A'H + rho H) < 0", top < 0.0, format!("{top:.3e}")),
        check("rho <= rho*", cert.rho <= rho_star, format!("rho = {:.6}, rho* = {rho_star}", cert.rho)),
        check("scalar rho >= 1.9", scalar_rho >= SCALAR_RHO_MIN, format!("{scalar_rho:.6}")),
        timed(Duration::from_secs(10), started),
    ]
}

fn matching() -> Vec<Check> {
    let sc = chua_network_preset();
    let net = sc.network();
    let nu = [3.0, 1.0, 4.0, 1.0, 5.0];
    let mut worst = 0.0f64;
    let mut all_found = true;
    for (i, f) in net.followers().iter().enumerate() {
        match verify_matching(net.leader(), f, 1e-8) {
            Ok(mp) => {
                worst = worst.max((mp.nu[0] - nu[i]).abs()).max((mp.theta - 1.0 / (i as f64 + 1.0)).abs());
            }
            Err(_) => all_found = false,
        }
    }
    let f = net.followers();
    let distinct = (0..5).all(|i| (i + 1..5).all(|j| f[i].a() != f[j].a()));
    vec![
        check("(nu, theta) recovered", all_found && worst <= MATCHING_TOL, format!("worst {worst:.1e}")),
        check("A_i pairwise distinct", distinct, ""),
    ]
}

fn synchronization() -> Vec<Check> {
    let started = Instant::now();
    let sc = chua_network_preset();
    let cfg = SimConfig { t_end: 40.0, dt: 1e-3, method: Method::Rk4, ..sc.sim().clone() };
    let tr = integrate(sc.network(), sc.controller(), &cfg, &sc.initial_state()).unwrap();
    let m = sync_metrics(&tr, LATE_ERROR_MAX).unwrap();
    let final_max = m.final_errors.iter().copied().fold(0.0, f64::max);
    let tau_max = tr.max_tau_norm();
    let late = tr
        .times
        .iter()
        .zip(&m.max_error)
        .filter(|(t, _)| **t >= LATE_FROM)
        .map(|(_, e)| *e)
        .fold(0.0, f64::max);
    vec![
        check("max |z_i(40)| < 0.1", final_max < FINAL_ERROR_MAX, format!("{final_max:.4}")),
        check("|tau_i(t)| <= 1e3", tau_max <= TAU_NORM_MAX, format!("max {tau_max:.3}")),
        check("max |z_i(t)| < 0.5 for t >= 35", late < LATE_ERROR_MAX, format!("max {late:.4}")),
        check(
            "settled (eps = 0.5) before 40",
            m.settled_time.is_some_and(|t| t < 40.0),
            format!("{:?}", m.settled_time),
        ),
        timed(Duration::from_secs(60), started),
    ]
}

fn lyapunov() -> Vec<Check> {
    let sc = isolated_node_preset();
    let report = verify_network(sc.network(), &VerifyOptions::default());
    let Some(cert) = report.cert else {
        return vec![check("certificate for the isolated node", false, format!("{:?}", report.notes))];
    };
    let tau = tau_star(&sc);
    let gamma = &sc.controller().gamma()[0];
    let cfg = sc.sim().clone();
    let slack = 10.0 * cfg.dt * cfg.dt;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst_rise = f64::NEG_INFINITY;
    for _ in 0..LYAPUNOV_RUNS {
        let dir = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0)).normalize();
        let z0 = dir * rng.random_range(0.0..LYAPUNOV_RADIUS);
        let x0 = sc.leader_x0().clone();
        let init = JointState::new(x0.clone(), vec![&x0 + z0], sc.controller().tau0().to_vec());
        let tr = integrate(sc.network(), sc.controller(), &cfg, &init).unwrap();
        let v: Vec<f64> = tr
            .states
            .iter()
            .map(|s| {
                speed_gradient_lyapunov(s.z(0).as_slice(), &cert.h, s.tau[0].as_slice(), tau[0].as_slice(), gamma, 1.0)
                    .unwrap()
            })
            .collect();
        worst_rise = v.windows(2).map(|w| w[1] - w[0]).fold(worst_rise, f64::max);
    }
    vec![check(
        "V non-increasing on 20 runs",
        worst_rise <= slack,
        format!("largest step change {worst_rise:.3e}, slack {slack:.1e}"),
    )]
}

fn coupling_plumbing() -> Vec<Check> {
    let deg = weighted_in_degrees(chua_network_preset().network().couplings());
    let expected = [0.3122, 0.1648, 0.5714, 0.1582, 0.3436];
    let deg_err = deg.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut homogeneous = true;
    for _ in 0..1000 {
        let (r, l, c) = (rng.random_range(1e-3..1e3), rng.random_range(1.0..1e4), rng.random_range(1e-3..1e3));
        let d = rng.random_range(1..100usize);
        let lhs = coupling_bound(c * r, d, l).unwrap();
        let rhs = c * coupling_bound(r, d, l).unwrap();
        homogeneous &= (lhs - rhs).abs() <= 1e-12 * rhs;
    }
    let contraction = (2..=50usize).all(|d| {
        proof_matrix_m(d, 2.0 * d as f64 + 0.1).unwrap().is_contraction
            && !proof_matrix_m(d, 2.0 * d as f64).unwrap().is_contraction
    });
    vec![
        check("weighted in-degrees", deg_err <= IN_DEGREE_TOL, format!("worst {deg_err:.1e}")),
        check("gamma homogeneity", homogeneous, "1000 draws"),
        check("M contraction iff zeta > 2d, d = 2..50", contraction, ""),
    ]
}

fn leader_trace(method: Method, dt: f64, t_end: f64, stride: usize) -> Trace {
    let sc = isolated_node_preset();
    let cfg = SimConfig { t_end, dt, method, record_stride: stride, seed: 0 };
    integrate(sc.network(), sc.controller(), &cfg, &sc.initial_state()).unwrap()
}

fn sup_leader_diff(a: &Trace, b: &Trace) -> f64 {
    a.states.iter().zip(&b.states).map(|(x, y)| (&x.x_bar - &y.x_bar).amax()).fold(0.0, f64::max)
}

fn oracle_equivalence() -> Vec<Check> {
    let rk4 = leader_trace(Method::Rk4, 1e-3, 5.0, 1);
    let euler = leader_trace(Method::Euler, 1e-5, 5.0, 100);
    let aligned = rk4.len() == euler.len() && rk4.times.iter().zip(&euler.times).all(|(a, b)| (a - b).abs() < 1e-9);
    let diff = sup_leader_diff(&rk4, &euler);

    // |ȳ| < 1 on [0, 0.2]: the leader nonlinearity is linear there
    let reference = leader_trace(Method::Rk4, 1e-5, 0.2, 2000);
    let smooth = leader_trace(Method::Rk4, 1e-5, 0.2, 1).states.iter().all(|s| s.x_bar[0].abs() < 1.0);
    let coarse = leader_trace(Method::Rk4, 0.02, 0.2, 1);
    let fine = leader_trace(Method::Rk4, 0.01, 0.2, 2);
    let same_grid = |a: &Trace, b: &Trace| {
        a.len() == b.len() && a.times.iter().zip(&b.times).all(|(x, y)| (x - y).abs() < 1e-9)
    };
    let grids_ok = same_grid(&coarse, &fine) && same_grid(&coarse, &reference);
    let order = (sup_leader_diff(&coarse, &reference) / sup_leader_diff(&fine, &reference)).log2();
    vec![
        check(
            "rk4 (1e-3) vs euler (1e-5) on leader, [0, 5]",
            aligned && diff <= SCHEME_TOL,
            format!("sup diff {diff:.3e}"),
        ),
        check("rk4 order on smooth segment", smooth && grids_ok && order >= RK4_ORDER_MIN, format!("{order:.3}")),
    ]
}

fn property_suites() -> Vec<Check> {
    let mut out = Vec::new();
    for seed in PROPERTY_SEEDS {
        let results = [
            ("similarity invariance", run_seeded(seed, 16, similarity(3), check_similarity)),
            ("manifold invariance", run_seeded(seed, 2, leader_state(), |x| check_manifold(x, 40.0))),
            ("g-monotone slope test", run_seeded(seed, 64, pwl(), |p| check_monotone(p, 1.0))),
            ("scenario round trip", run_seeded(seed, 64, scenario_draw(), check_round_trip)),
        ];
        for (name, r) in results {
            let detail = r.as_ref().err().cloned().unwrap_or_default();
            out.push(check(&format!("{name}, seed {seed}"), r.is_ok(), detail));
        }
    }
    out
}

fn main() {
    let criteria: [(&str, fn() -> Vec<Check>); 9] = [
        ("frequency conditions", frequency_conditions),
        ("stability degree", stability_degree_check),
        ("LMI certificate", certificate),
        ("matching", matching),
        ("end-to-end synchronization", synchronization),
        ("Lyapunov decrease", lyapunov),
        ("coupling bound plumbing", coupling_plumbing),
        ("oracle equivalence", oracle_equivalence),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (k, (title, run)) in criteria.iter().enumerate() {
        let checks = run();
        let ok = checks.iter().all(|c| c.ok);
        failed += usize::from(!ok);
        println!("criterion {}: {} ({title})", k + 1, if ok { "PASS" } else { "FAIL" });
        for c in &checks {
            let mark = if c.ok { "ok  " } else { "FAIL" };
            if c.detail.is_empty() {
                println!("    {mark} {}", c.name);
            } else {
                println!("    {mark} {}: {}", c.name, c.detail);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
