use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{is_spd, sym_eig_max, sym_eig_min};
use crate::models::{CouplingSpec, StaticNonlinearity};
use crate::{Error, Result};

/// `λmax(H)/λmin(H)`.
pub fn condition_number(h: &DMatrix<f64>) -> Result<f64> {
    if !is_spd(h) {
        return Err(Error::NotSpd);
    }
    Ok((sym_eig_max(h) / sym_eig_min(h)).max(1.0))
}

/// Admissible weighted in-degree `γ = ρ*/(4dλ*)`.
pub fn coupling_bound(rho_star: f64, d: usize, lambda_star: f64) -> Result<f64> {
    if !(rho_star > 0.0) || d == 0 || !(lambda_star > 0.0) {
        return Err(Error::param(format!(
            "coupling bound needs positive inputs, got rho* = {rho_star}, d = {d}, lambda* = {lambda_star}"
        )));
    }
    Ok(rho_star / (4.0 * d as f64 * lambda_star))
}

/// `Σ_j |α_ij L_ij|` for every node `i`.
pub fn weighted_in_degrees(couplings: &CouplingSpec) -> DVector<f64> {
    let mut deg = DVector::zeros(couplings.d());
    for (&(i, _), link) in couplings.links() {
        deg[i] += (link.alpha * link.lipschitz).abs();
    }
    deg
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCheck {
    pub ok: bool,
    /// Result of the slope test, when the nonlinearity is piecewise linear.
    pub exact: Option<bool>,
    /// Pair `(x, y)` maximizing `(x − y)·g·(f(x) − f(y))` and that value.
    pub worst: Option<(f64, f64, f64)>,
    pub pairs_checked: usize,
}

/// Tolerance on `(x − y)·g·(f(x) − f(y))` in the sampled test.
pub const MONOTONE_TOL: f64 = 1e-12;

/// Tests `(x − y)·g·(f(x) − f(y)) ≤ 0` on `sample_count` seeded pairs from
/// `range` plus pairs straddling every breakpoint. Piecewise-linear kinds
/// with a scalar output also get the exact test `g·slope ≤ 0` on every piece.
pub fn g_monotone_check(
    nl: &StaticNonlinearity,
    g: &DVector<f64>,
    sample_count: usize,
    range: (f64, f64),
    seed: u64,
) -> Result<MonotoneCheck> {
    if sample_count < 2 {
        return Err(Error::param("g_monotone_check needs at least 2 samples"));
    }
    if !(range.0 < range.1) {
        return Err(Error::param(format!("empty sampling range {range:?}")));
    }
    if let StaticNonlinearity::Zero = nl {
        return Ok(MonotoneCheck { ok: true, exact: Some(true), worst: None, pairs_checked: 0 });
    }
    if g.len() != 1 {
        return Err(Error::dim(format!("{} has scalar output, g has length {}", nl.kind_name(), g.len())));
    }
    let gs = g[0];
    let pieces = nl.pieces();
    let exact = pieces.as_ref().map(|(_, slopes)| slopes.iter().all(|s| gs * s <= 0.0));

    let mut pairs = Vec::with_capacity(sample_count + 16);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..sample_count {
        pairs.push((rng.random_range(range.0..range.1), rng.random_range(range.0..range.1)));
    }
    if let Some((bps, _)) = &pieces {
        for &b in bps {
            for delta in [1e-6, 1e-3, 0.5, 2.0] {
                pairs.extend([(b - delta, b + delta), (b - delta, b), (b, b + delta)]);
            }
        }
    }
    let mut worst: Option<(f64, f64, f64)> = None;
    for &(x, y) in &pairs {
        let v = (x - y) * gs * (nl.eval_scalar(x) - nl.eval_scalar(y));
        if worst.is_none_or(|w| v > w.2) {
            worst = Some((x, y, v));
        }
    }
    let sampled_ok = worst.is_none_or(|w| w.2 <= MONOTONE_TOL);
    Ok(MonotoneCheck { ok: sampled_ok && exact.unwrap_or(true), exact, worst, pairs_checked: pairs.len() })
}

/// Comparison matrix of the synchronization proof and its Gershgorin test.
#[derive(Debug, Clone, PartialEq)]
pub struct ProofMatrix {
    pub m: DMatrix<f64>,
    /// `1 − Σ_j |μ_ij|`; positive certifies `I − M ≻ 0`.
    pub margin: f64,
    pub is_contraction: bool,
}

/// `μ_ii = (3d+1)/(2ζ)`, `μ_ij = 1/(2ζ)`; for `d = 1` the single entry is ½.
pub fn proof_matrix_m(d: usize, zeta: f64) -> Result<ProofMatrix> {
    if d == 0 || !(zeta > 0.0) {
        return Err(Error::param(format!("proof matrix needs d >= 1 and zeta > 0, got d = {d}, zeta = {zeta}")));
    }
    if d == 1 {
        return Ok(ProofMatrix { m: DMatrix::from_element(1, 1, 0.5), margin: 0.5, is_contraction: true });
    }
    let diag = (3 * d + 1) as f64 / (2.0 * zeta);
    let off = 1.0 / (2.0 * zeta);
    let m = DMatrix::from_fn(d, d, |i, j| if i == j { diag } else { off });
    // 1 − (3d+1)/(2ζ) − (d−1)/(2ζ) = (ζ − 2d)/ζ, exact at the boundary
    let margin = (zeta - (2 * d) as f64) / zeta;
    Ok(ProofMatrix { m, margin, is_contraction: margin > 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CouplingFunction, CouplingLink, PiecewiseLinear};

    #[test]
    fn condition_number_examples() {
        assert_eq!(condition_number(&DMatrix::identity(4, 4)).unwrap(), 1.0);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        assert!((condition_number(&d).unwrap() - 4.0).abs() < 1e-12);
        assert!((condition_number(&(d * 7.5)).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(condition_number(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]))), Err(Error::NotSpd));
    }

    #[test]
    fn coupling_bound_examples() {
        assert_eq!(coupling_bound(1.0, 1, 1.0).unwrap(), 0.25);
        assert!((coupling_bound(0.5, 5, 3.0).unwrap() - 0.025 / 3.0).abs() < 1e-15);
        assert_eq!(coupling_bound(1.0, 4, 2.0).unwrap(), 2.0 * coupling_bound(1.0, 8, 2.0).unwrap());
        assert!(coupling_bound(0.0, 1, 1.0).is_err());
        assert!(coupling_bound(1.0, 0, 1.0).is_err());
        assert!(coupling_bound(1.0, 1, -1.0).is_err());
    }

    #[test]
    fn in_degree_single_term() {
        let link = CouplingLink { alpha: -0.3, phi: CouplingFunction::identity(1), lipschitz: 2.0 };
        let spec = CouplingSpec::new(2, 1, [((0, 1), link)]).unwrap();
        let deg = weighted_in_degrees(&spec);
        assert!((deg[0] - 0.6).abs() < 1e-15);
        assert_eq!(deg[1], 0.0);
        assert_eq!(weighted_in_degrees(&CouplingSpec::empty(3)), DVector::zeros(3));
    }

    fn one() -> DVector<f64> {
        DVector::from_element(1, 1.0)
    }

    #[test]
    fn monotone_examples() {
        let chua = StaticNonlinearity::chua(-8.0 / 7.0, -5.0 / 7.0, 15.6, 1.0).unwrap();
        let r = g_monotone_check(&chua, &one(), 10_000, (-10.0, 10.0), 0).unwrap();
        assert!(r.ok && r.exact == Some(true));

        let ident = StaticNonlinearity::PiecewiseLinear(PiecewiseLinear::new(vec![], vec![1.0], 0.0).unwrap());
        let r = g_monotone_check(&ident, &one(), 100, (-1.0, 1.0), 0).unwrap();
        assert!(!r.ok);
        assert_eq!(r.exact, Some(false));
        let (x, y, v) = r.worst.unwrap();
        assert!(x != y && v > 0.0);

        let neg = StaticNonlinearity::PiecewiseLinear(PiecewiseLinear::new(vec![], vec![-1.0], 0.0).unwrap());
        assert!(g_monotone_check(&neg, &one(), 100, (-1.0, 1.0), 0).unwrap().ok);
        assert!(g_monotone_check(&StaticNonlinearity::Zero, &DVector::zeros(2), 2, (0.0, 1.0), 0).unwrap().ok);
        assert!(g_monotone_check(&neg, &one(), 1, (0.0, 1.0), 0).is_err());
    }

    #[test]
    fn proof_matrix_examples() {
        let p = proof_matrix_m(5, 11.0).unwrap();
        assert!((p.m[(0, 0)] - 16.0 / 22.0).abs() < 1e-15);
        assert!((p.m[(0, 1)] - 1.0 / 22.0).abs() < 1e-15);
        assert!((p.margin - 2.0 / 22.0).abs() < 1e-15);
        assert!(p.is_contraction);
        let p = proof_matrix_m(5, 10.0).unwrap();
        assert_eq!(p.margin, 0.0);
        assert!(!p.is_contraction);
        let p = proof_matrix_m(1, 0.01).unwrap();
        assert_eq!(p.m, DMatrix::from_element(1, 1, 0.5));
        assert!(p.is_contraction);
        assert!(proof_matrix_m(0, 1.0).is_err());
        assert!(proof_matrix_m(3, 0.0).is_err());
    }
}
