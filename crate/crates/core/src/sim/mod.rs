//! Fixed-step integration of the closed loop: leader, `d` followers and
//! their adaptive controllers integrated as one ODE.
//!
//! The joint state is flattened as `[x̄ | x_1 … x_d | τ_1 … τ_d]`.

mod trace;

use nalgebra::DVector;

use crate::control::{adaptation_rhs_into, dot, Adaptation, ControllerConfig};
use crate::models::{NetworkModel, StaticNonlinearity};
use crate::{Error, Result};

pub use trace::{sync_metrics, Sample, SyncMetrics, Trace, DEFAULT_SETTLE_EPS};

/// States whose magnitude exceeds this are treated as a blow-up.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Rk4,
    Euler,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Rk4 => "rk4",
            Self::Euler => "euler",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Self::Rk4),
            "euler" => Ok(Self::Euler),
            other => Err(Error::param(format!("unknown integration method {other:?} (rk4 | euler)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt: f64,
    pub method: Method,
    pub record_stride: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { t_end: 40.0, dt: 1e-3, method: Method::Rk4, record_stride: 10, seed: 0 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::param(format!("dt must be positive, got {}", self.dt)));
        }
        // t_end = 0 is accepted and yields the initial sample only.
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::param(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if self.record_stride == 0 {
            return Err(Error::param("record_stride must be at least 1"));
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened to land on `t_end`.
    pub fn steps(&self) -> usize {
        let raw = self.t_end / self.dt;
        let rounded = raw.round();
        if (raw - rounded).abs() <= 1e-9 * raw.max(1.0) {
            rounded as usize
        } else {
            raw.ceil() as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub x_bar: DVector<f64>,
    pub x: Vec<DVector<f64>>,
    pub tau: Vec<DVector<f64>>,
}

impl JointState {
    pub fn new(x_bar: DVector<f64>, x: Vec<DVector<f64>>, tau: Vec<DVector<f64>>) -> Self {
        Self { x_bar, x, tau }
    }

    pub fn check(&self, net: &NetworkModel) -> Result<()> {
        let (n, d, p) = (net.n(), net.d(), net.l() + 1);
        if self.x_bar.len() != n {
            return Err(Error::dim(format!("leader state has length {}, expected {n}", self.x_bar.len())));
        }
        if self.x.len() != d || self.tau.len() != d {
            return Err(Error::dim(format!(
                "{} follower states and {} parameter vectors for d = {d}",
                self.x.len(),
                self.tau.len()
            )));
        }
        for (i, (x, t)) in self.x.iter().zip(&self.tau).enumerate() {
            if x.len() != n || t.len() != p {
                return Err(Error::dim(format!(
                    "node {}: state length {} (expected {n}), tau length {} (expected {p})",
                    i + 1,
                    x.len(),
                    t.len()
                )));
            }
        }
        Ok(())
    }

    /// Error `z_i = x_i − x̄`.
    pub fn z(&self, i: usize) -> DVector<f64> {
        &self.x[i] - &self.x_bar
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.x_bar.len() * (1 + self.x.len()));
        v.extend(self.x_bar.iter());
        for x in &self.x {
            v.extend(x.iter());
        }
        for t in &self.tau {
            v.extend(t.iter());
        }
        v
    }

    pub fn from_flat(flat: &[f64], n: usize, d: usize, p: usize) -> Self {
        let x_bar = DVector::from_column_slice(&flat[..n]);
        let x = (0..d).map(|i| DVector::from_column_slice(&flat[n + i * n..n + (i + 1) * n])).collect();
        let off = n + d * n;
        let tau = (0..d).map(|i| DVector::from_column_slice(&flat[off + i * p..off + (i + 1) * p])).collect();
        Self { x_bar, x, tau }
    }
}

#[inline]
fn psi(nl: &StaticNonlinearity, y: &[f64]) -> f64 {
    match nl {
        StaticNonlinearity::Zero => 0.0,
        other => other.eval_scalar(y[0]),
    }
}

/// Right-hand side on flat buffers. Dimensions are validated by callers.
pub(crate) struct Dynamics<'a> {
    net: &'a NetworkModel,
    ctrl: &'a ControllerConfig,
    n: usize,
    l: usize,
    d: usize,
    y_bar: Vec<f64>,
    y: Vec<f64>,
    sigma: Vec<f64>,
}

impl<'a> Dynamics<'a> {
    pub(crate) fn new(net: &'a NetworkModel, ctrl: &'a ControllerConfig) -> Result<Self> {
        if ctrl.d() != net.d() {
            return Err(Error::dim(format!("controller has {} nodes, network {}", ctrl.d(), net.d())));
        }
        if ctrl.g().len() != net.l() {
            return Err(Error::dim(format!("controller g has length {}, expected l = {}", ctrl.g().len(), net.l())));
        }
        let (n, l, d) = (net.n(), net.l(), net.d());
        Ok(Self { net, ctrl, n, l, d, y_bar: vec![0.0; l], y: vec![0.0; l], sigma: vec![0.0; l + 1] })
    }

    pub(crate) fn dim(&self) -> usize {
        self.n * (1 + self.d) + self.d * (self.l + 1)
    }

    pub(crate) fn eval(&mut self, t: f64, s: &[f64], out: &mut [f64]) {
        let (n, l, d, p) = (self.n, self.l, self.d, self.l + 1);
        let leader = self.net.leader();
        let (a_l, b_l) = (leader.a(), leader.b());
        let x_bar = &s[..n];
        leader.output_into(x_bar, &mut self.y_bar);
        let u_bar = leader.u_bar().eval(x_bar, t);
        let psi_bar = psi(leader.psi0(), &self.y_bar);
        for r in 0..n {
            out[r] = (0..n).map(|c| a_l[(r, c)] * x_bar[c]).sum::<f64>() + b_l[r] * (u_bar + psi_bar);
        }

        let xs = &s[n..n + d * n];
        let taus = &s[n + d * n..];
        for (i, f) in self.net.followers().iter().enumerate() {
            let x = &xs[i * n..(i + 1) * n];
            let tau = &taus[i * p..(i + 1) * p];
            leader.output_into(x, &mut self.y);
            self.sigma[..l].copy_from_slice(&self.y);
            self.sigma[l] = u_bar;
            let u = dot(tau, &self.sigma);
            let psi_i = psi(leader.psi0(), &self.y);
            let (a_i, b_i) = (f.a(), f.b());
            let dx = &mut out[n + i * n..n + (i + 1) * n];
            for r in 0..n {
                dx[r] = (0..n).map(|c| a_i[(r, c)] * x[c]).sum::<f64>() + b_i[r] * u + b_l[r] * psi_i;
            }
            let dtau = &mut out[n + d * n + i * p..n + d * n + (i + 1) * p];
            match self.ctrl.adaptation() {
                Adaptation::SpeedGradient => adaptation_rhs_into(
                    &self.y,
                    &self.y_bar,
                    self.ctrl.g().as_slice(),
                    &self.ctrl.gamma()[i],
                    &self.sigma,
                    dtau,
                ),
                Adaptation::Frozen => dtau.fill(0.0),
            }
        }
        self.net.couplings().accumulate(n, xs, &mut out[n..n + d * n]);
    }
}

/// Time derivative of the joint closed-loop state.
pub fn rhs(net: &NetworkModel, ctrl: &ControllerConfig, state: &JointState, t: f64) -> Result<JointState> {
    state.check(net)?;
    let mut dynamics = Dynamics::new(net, ctrl)?;
    let s = state.to_flat();
    let mut out = vec![0.0; dynamics.dim()];
    dynamics.eval(t, &s, &mut out);
    Ok(JointState::from_flat(&out, net.n(), net.d(), net.l() + 1))
}

struct Stepper {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Stepper {
    fn new(dim: usize) -> Self {
        Self { k1: vec![0.0; dim], k2: vec![0.0; dim], k3: vec![0.0; dim], k4: vec![0.0; dim], tmp: vec![0.0; dim] }
    }

    fn step(&mut self, method: Method, f: &mut Dynamics<'_>, t: f64, h: f64, s: &mut [f64]) {
        match method {
            Method::Euler => {
                f.eval(t, s, &mut self.k1);
                for (x, k) in s.iter_mut().zip(&self.k1) {
                    *x += h * k;
                }
            }
            Method::Rk4 => {
                f.eval(t, s, &mut self.k1);
                axpy_into(&mut self.tmp, s, 0.5 * h, &self.k1);
                f.eval(t + 0.5 * h, &self.tmp, &mut self.k2);
                axpy_into(&mut self.tmp, s, 0.5 * h, &self.k2);
                f.eval(t + 0.5 * h, &self.tmp, &mut self.k3);
                axpy_into(&mut self.tmp, s, h, &self.k3);
                f.eval(t + h, &self.tmp, &mut self.k4);
                for (i, x) in s.iter_mut().enumerate() {
                    *x += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
                }
            }
        }
    }
}

#[inline]
fn axpy_into(out: &mut [f64], x: &[f64], a: f64, k: &[f64]) {
    for ((o, x), k) in out.iter_mut().zip(x).zip(k) {
        *o = x + a * k;
    }
}

/// Integrates the closed loop from `initial` over `[0, t_end]`, recording
/// every `record_stride`-th step as well as both endpoints.
pub fn integrate(
    net: &NetworkModel,
    ctrl: &ControllerConfig,
    cfg: &SimConfig,
    initial: &JointState,
) -> Result<Trace> {
    cfg.validate()?;
    initial.check(net)?;
    let mut dynamics = Dynamics::new(net, ctrl)?;
    let (n, d, p) = (net.n(), net.d(), net.l() + 1);
    let mut s = initial.to_flat();
    let mut stepper = Stepper::new(s.len());
    let steps = cfg.steps();

    let mut trace = Trace::new(net);
    trace.record(net, 0.0, JointState::from_flat(&s, n, d, p));
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        let h = if k + 1 == steps { cfg.t_end - t } else { cfg.dt };
        stepper.step(cfg.method, &mut dynamics, t, h, &mut s);
        let t_next = if k + 1 == steps { cfg.t_end } else { (k + 1) as f64 * cfg.dt };
        if s.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
            return Err(Error::Divergence { t: t_next });
        }
        if (k + 1) % cfg.record_stride == 0 || k + 1 == steps {
            trace.record(net, t_next, JointState::from_flat(&s, n, d, p));
        }
    }
    Ok(trace)
}
