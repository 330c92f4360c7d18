use nalgebra::{DMatrix, DVector};

use super::{CouplingSpec, StaticNonlinearity};
use crate::{Error, Result};

/// Reference input `ū` applied to the leader and broadcast to every node.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceInput {
    Zero,
    Constant(f64),
    /// `ū = kᵀ x̄`, feedback on the leader's own state.
    LinearFeedback(DVector<f64>),
    /// `ū = offset + amplitude · sin(frequency · t + phase)`.
    Sinusoid { amplitude: f64, frequency: f64, phase: f64, offset: f64 },
}

impl ReferenceInput {
    pub fn eval(&self, x_bar: &[f64], t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(c) => *c,
            Self::LinearFeedback(k) => k.iter().zip(x_bar).map(|(a, b)| a * b).sum(),
            Self::Sinusoid { amplitude, frequency, phase, offset } => {
                offset + amplitude * (frequency * t + phase).sin()
            }
        }
    }
}

/// `dx̄/dt = A_L x̄ + B_L (ū + ψ₀(ȳ))`, `ȳ = Cᵀ x̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderModel {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DMatrix<f64>,
    psi0: StaticNonlinearity,
    u_bar: ReferenceInput,
    g: DVector<f64>,
}

impl LeaderModel {
    pub fn new(
        a: DMatrix<f64>,
        b: DVector<f64>,
        c: DMatrix<f64>,
        psi0: StaticNonlinearity,
        u_bar: ReferenceInput,
        g: DVector<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(Error::dim(format!("A_L must be square and nonempty, got {}x{}", a.nrows(), a.ncols())));
        }
        if b.len() != n {
            return Err(Error::dim(format!("B_L has {} rows, expected {n}", b.len())));
        }
        if c.nrows() != n || c.ncols() == 0 {
            return Err(Error::dim(format!("C must be {n}xl, got {}x{}", c.nrows(), c.ncols())));
        }
        let l = c.ncols();
        if g.len() != l {
            return Err(Error::dim(format!("g has length {}, expected l = {l}", g.len())));
        }
        if b.iter().all(|v| *v == 0.0) {
            return Err(Error::param("B_L must be nonzero"));
        }
        if a.iter().chain(b.iter()).chain(c.iter()).chain(g.iter()).any(|v| !v.is_finite()) {
            return Err(Error::param("leader matrices must be finite"));
        }
        if let Some(k) = psi0.arity() {
            if k != l {
                return Err(Error::dim(format!("psi0 ({}) takes {k} input(s), but l = {l}", psi0.kind_name())));
            }
        }
        if let ReferenceInput::LinearFeedback(k) = &u_bar {
            if k.len() != n {
                return Err(Error::dim(format!("u_bar feedback gains have length {}, expected {n}", k.len())));
            }
        }
        Ok(Self { a, b, c, psi0, u_bar, g })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn l(&self) -> usize {
        self.c.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn psi0(&self) -> &StaticNonlinearity {
        &self.psi0
    }

    pub fn u_bar(&self) -> &ReferenceInput {
        &self.u_bar
    }

    pub fn g(&self) -> &DVector<f64> {
        &self.g
    }

    /// Copy with a different passivity vector `g`.
    pub fn with_g(&self, g: DVector<f64>) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), self.c.clone(), self.psi0.clone(), self.u_bar.clone(), g)
    }

    /// `y = Cᵀ x` written into `y`.
    pub fn output_into(&self, x: &[f64], y: &mut [f64]) {
        for (k, yk) in y.iter_mut().enumerate() {
            *yk = self.c.column(k).iter().zip(x).map(|(c, x)| c * x).sum();
        }
    }

    pub fn output(&self, x: &[f64]) -> DVector<f64> {
        let mut y = DVector::zeros(self.l());
        self.output_into(x, y.as_mut_slice());
        y
    }
}

/// `ψ₀(y)` for the leader's nonlinearity.
pub fn eval_psi0(nl: &StaticNonlinearity, y: &[f64]) -> Result<f64> {
    nl.eval(y)
}

/// Follower dynamics matrices `(A_i, B_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerModel {
    pub index: usize,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl FollowerModel {
    pub fn new(index: usize, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if !a.is_square() || b.len() != a.nrows() {
            return Err(Error::dim(format!(
                "follower {}: A is {}x{}, B has {} rows",
                index + 1,
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::param(format!("follower {}: matrices must be finite", index + 1)));
        }
        Ok(Self { index, a, b })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }
}

/// Ideal feedback parameters `(ν_i, θ_i)`: `A_L = A_i + B_i ν_iᵀ Cᵀ`,
/// `B_L = θ_i B_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingParams {
    pub nu: DVector<f64>,
    pub theta: f64,
}

impl MatchingParams {
    pub fn new(nu: DVector<f64>, theta: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::param(format!("theta must be positive, got {theta}")));
        }
        if nu.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("nu must be finite"));
        }
        Ok(Self { nu, theta })
    }

    /// `τ* = col(ν, θ)`, the ideal controller parameters.
    pub fn tau_star(&self) -> DVector<f64> {
        let l = self.nu.len();
        DVector::from_fn(l + 1, |k, _| if k < l { self.nu[k] } else { self.theta })
    }
}

pub fn follower_from_matching(
    leader: &LeaderModel,
    index: usize,
    mp: &MatchingParams,
) -> Result<FollowerModel> {
    if !(mp.theta > 0.0) {
        return Err(Error::param(format!("follower {}: theta must be positive, got {}", index + 1, mp.theta)));
    }
    if mp.nu.len() != leader.l() {
        return Err(Error::dim(format!(
            "follower {}: nu has length {}, expected l = {}",
            index + 1,
            mp.nu.len(),
            leader.l()
        )));
    }
    let b = leader.b() / mp.theta;
    let cnu = leader.c() * &mp.nu;
    let a = leader.a() - &b * cnu.transpose();
    FollowerModel::new(index, a, b)
}

/// Recovers `(ν, θ)` by least squares and checks both matching residuals
/// against `tol`.
pub fn verify_matching(leader: &LeaderModel, f: &FollowerModel, tol: f64) -> Result<MatchingParams> {
    let n = leader.n();
    if f.a().nrows() != n {
        return Err(Error::dim(format!("follower {} has n = {}, leader n = {n}", f.index + 1, f.a().nrows())));
    }
    let bi = f.b();
    let bb = bi.norm_squared();
    if bb == 0.0 {
        return Err(Error::NoMatching { residual: leader.b().norm() });
    }
    let theta = bi.dot(leader.b()) / bb;
    let b_res = (leader.b() - bi * theta).norm();
    if !(theta > 0.0) {
        return Err(Error::NoMatching { residual: b_res.max(leader.b().norm()) });
    }

    // A_L − A_i ≈ B_i wᵀ with w = Cν. The unconstrained optimum is
    // w = Rᵀ B_i / ‖B_i‖²; its projection onto range(C) is optimal because the
    // objective is isotropic in w.
    let r = leader.a() - f.a();
    let w = r.transpose() * bi / bb;
    let c = leader.c();
    let nu = c
        .clone()
        .svd(true, true)
        .solve(&w, 1e-12)
        .map_err(|e| Error::param(format!("least squares for nu failed: {e}")))?;
    let a_res = (&r - bi * (c * &nu).transpose()).norm();
    let residual = a_res.max(b_res);
    if !(residual <= tol) {
        return Err(Error::NoMatching { residual });
    }
    Ok(MatchingParams { nu, theta })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    leader: LeaderModel,
    followers: Vec<FollowerModel>,
    couplings: CouplingSpec,
}

impl NetworkModel {
    pub fn new(leader: LeaderModel, followers: Vec<FollowerModel>, couplings: CouplingSpec) -> Result<Self> {
        if followers.len() != couplings.d() {
            return Err(Error::dim(format!(
                "{} followers but couplings declare d = {}",
                followers.len(),
                couplings.d()
            )));
        }
        let n = leader.n();
        for f in &followers {
            if f.a().nrows() != n {
                return Err(Error::dim(format!("follower {} has n = {}, leader n = {n}", f.index + 1, f.a().nrows())));
            }
        }
        for (_, link) in couplings.links() {
            link.phi.validate(n)?;
        }
        Ok(Self { leader, followers, couplings })
    }

    pub fn leader(&self) -> &LeaderModel {
        &self.leader
    }

    pub fn followers(&self) -> &[FollowerModel] {
        &self.followers
    }

    pub fn couplings(&self) -> &CouplingSpec {
        &self.couplings
    }

    pub fn d(&self) -> usize {
        self.followers.len()
    }

    pub fn n(&self) -> usize {
        self.leader.n()
    }

    pub fn l(&self) -> usize {
        self.leader.l()
    }

    pub fn with_couplings(&self, couplings: CouplingSpec) -> Result<Self> {
        Self::new(self.leader.clone(), self.followers.clone(), couplings)
    }
}
