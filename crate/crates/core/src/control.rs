//! Decentralized adaptive controller.
//!
//! Each follower applies `u_i = τ_iᵀ σ_i` with regressor `σ_i = col(y_i, ū)`
//! and tunes `τ_i` by the speed-gradient law
//! `τ̇_i = −gᵀ(y_i − ȳ) Γ_i σ_i`. Nothing in the controller uses the follower
//! matrices: only the node's own output, the leader output and `ū` enter.

use nalgebra::{DMatrix, DVector};

use crate::linalg::is_spd;
use crate::{Error, Result};

/// Whether `τ` evolves. `Frozen` keeps the initial parameters, which is how
/// the fixed-gain comparison runs are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Adaptation {
    #[default]
    SpeedGradient,
    Frozen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    gamma: Vec<DMatrix<f64>>,
    g: DVector<f64>,
    tau0: Vec<DVector<f64>>,
    adaptation: Adaptation,
}

impl ControllerConfig {
    pub fn new(
        gamma: Vec<DMatrix<f64>>,
        g: DVector<f64>,
        tau0: Vec<DVector<f64>>,
        adaptation: Adaptation,
    ) -> Result<Self> {
        let p = g.len() + 1;
        if gamma.len() != tau0.len() {
            return Err(Error::dim(format!("{} gain matrices for {} nodes", gamma.len(), tau0.len())));
        }
        for (i, (gm, t)) in gamma.iter().zip(&tau0).enumerate() {
            if gm.nrows() != p || gm.ncols() != p {
                return Err(Error::dim(format!(
                    "Gamma[{}] is {}x{}, expected {p}x{p}",
                    i + 1,
                    gm.nrows(),
                    gm.ncols()
                )));
            }
            if !is_spd(gm) {
                return Err(Error::param(format!("Gamma[{}] must be symmetric positive definite", i + 1)));
            }
            if t.len() != p {
                return Err(Error::dim(format!("tau0[{}] has length {}, expected {p}", i + 1, t.len())));
            }
        }
        Ok(Self { gamma, g, tau0, adaptation })
    }

    /// `Γ_i = I` and `τ_i(0) = 0` for `d` nodes with `l`-dimensional outputs.
    pub fn identity(d: usize, g: DVector<f64>) -> Self {
        let p = g.len() + 1;
        Self {
            gamma: vec![DMatrix::identity(p, p); d],
            g,
            tau0: vec![DVector::zeros(p); d],
            adaptation: Adaptation::SpeedGradient,
        }
    }

    pub fn d(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self) -> &[DMatrix<f64>] {
        &self.gamma
    }

    pub fn g(&self) -> &DVector<f64> {
        &self.g
    }

    pub fn tau0(&self) -> &[DVector<f64>] {
        &self.tau0
    }

    pub fn adaptation(&self) -> Adaptation {
        self.adaptation
    }

    pub fn with_tau0(mut self, tau0: Vec<DVector<f64>>) -> Result<Self> {
        self.tau0 = tau0;
        Self::new(self.gamma, self.g, self.tau0, self.adaptation)
    }

    pub fn with_adaptation(mut self, adaptation: Adaptation) -> Self {
        self.adaptation = adaptation;
        self
    }

    pub fn initial_state(&self) -> ControllerState {
        ControllerState { tau: self.tau0.clone() }
    }
}

/// Tunable parameters of every node at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub tau: Vec<DVector<f64>>,
}

/// `σ = col(y, ū)`.
pub fn regressor(y: &[f64], u_bar: f64) -> DVector<f64> {
    DVector::from_iterator(y.len() + 1, y.iter().copied().chain([u_bar]))
}

/// `u = τᵀ σ`.
pub fn control_law(tau: &[f64], sigma: &[f64]) -> Result<f64> {
    if tau.len() != sigma.len() {
        return Err(Error::dim(format!("tau has length {}, sigma {}", tau.len(), sigma.len())));
    }
    Ok(dot(tau, sigma))
}

/// `τ̇ = −gᵀ(y − ȳ) Γ σ`.
pub fn adaptation_rhs(
    tau: &[f64],
    y: &[f64],
    y_bar: &[f64],
    u_bar: f64,
    gamma: &DMatrix<f64>,
    g: &[f64],
) -> Result<DVector<f64>> {
    let p = y.len() + 1;
    if y_bar.len() != y.len() || g.len() != y.len() || tau.len() != p || gamma.shape() != (p, p) {
        return Err(Error::dim(format!(
            "adaptation: y {}, y_bar {}, g {}, tau {}, Gamma {:?}",
            y.len(),
            y_bar.len(),
            g.len(),
            tau.len(),
            gamma.shape()
        )));
    }
    let sigma = regressor(y, u_bar);
    let mut out = DVector::zeros(p);
    adaptation_rhs_into(y, y_bar, g, gamma, sigma.as_slice(), out.as_mut_slice());
    Ok(out)
}

/// Allocation-free core of [`adaptation_rhs`]; dimensions are trusted.
#[inline]
pub(crate) fn adaptation_rhs_into(
    y: &[f64],
    y_bar: &[f64],
    g: &[f64],
    gamma: &DMatrix<f64>,
    sigma: &[f64],
    out: &mut [f64],
) {
    let s: f64 = g.iter().zip(y.iter().zip(y_bar)).map(|(g, (a, b))| g * (a - b)).sum();
    for (r, o) in out.iter_mut().enumerate() {
        *o = -s * (0..sigma.len()).map(|c| gamma[(r, c)] * sigma[c]).sum::<f64>();
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Speed-gradient Lyapunov function of one node,
/// `V = ½ zᵀHz + (1/(2θ)) (τ − τ*)ᵀ Γ⁻¹ (τ − τ*)`.
///
/// The `1/θ` weight makes `V̇ ≤ −(ρ/2) zᵀHz` exact for the law above since
/// `zᵀ H B_i = gᵀ(y − ȳ)/θ` when `H B_L = C g`; for `θ = 1` it reduces to
/// the unweighted form.
pub fn speed_gradient_lyapunov(
    z: &[f64],
    h: &DMatrix<f64>,
    tau: &[f64],
    tau_star: &[f64],
    gamma: &DMatrix<f64>,
    theta: f64,
) -> Result<f64> {
    let z = DVector::from_column_slice(z);
    let e = DVector::from_iterator(tau.len(), tau.iter().zip(tau_star).map(|(a, b)| a - b));
    let chol = gamma.clone().cholesky().ok_or(Error::NotSpd)?;
    let gi_e = chol.solve(&e);
    Ok(0.5 * z.dot(&(h * &z)) + 0.5 * e.dot(&gi_e) / theta)
}
