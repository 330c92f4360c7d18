use nalgebra::DVector;

use super::JointState;
use crate::control::dot;
use crate::models::NetworkModel;
use crate::{Error, Result};

/// Default synchronization threshold for [`sync_metrics`].
pub const DEFAULT_SETTLE_EPS: f64 = 0.5;

/// Quantities derived from one recorded joint state.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub y_bar: DVector<f64>,
    pub u_bar: f64,
    pub y: Vec<DVector<f64>>,
    pub u: Vec<f64>,
    pub z_norm: Vec<f64>,
    /// `ũ_i = u_i − ū`
    pub u_tilde: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub n: usize,
    pub l: usize,
    pub d: usize,
    pub times: Vec<f64>,
    pub states: Vec<JointState>,
    pub samples: Vec<Sample>,
}

impl Trace {
    pub(crate) fn new(net: &NetworkModel) -> Self {
        Self { n: net.n(), l: net.l(), d: net.d(), times: Vec::new(), states: Vec::new(), samples: Vec::new() }
    }

    pub(crate) fn record(&mut self, net: &NetworkModel, t: f64, s: JointState) {
        let leader = net.leader();
        let y_bar = leader.output(s.x_bar.as_slice());
        let u_bar = leader.u_bar().eval(s.x_bar.as_slice(), t);
        let mut y = Vec::with_capacity(self.d);
        let mut u = Vec::with_capacity(self.d);
        let mut z_norm = Vec::with_capacity(self.d);
        for i in 0..self.d {
            let yi = leader.output(s.x[i].as_slice());
            let sigma: Vec<f64> = yi.iter().copied().chain([u_bar]).collect();
            u.push(dot(s.tau[i].as_slice(), &sigma));
            z_norm.push(s.z(i).norm());
            y.push(yi);
        }
        let u_tilde = u.iter().map(|ui| ui - u_bar).collect();
        self.samples.push(Sample { y_bar, u_bar, y, u, z_norm, u_tilde });
        self.times.push(t);
        self.states.push(s);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `max_i ‖z_i‖` at every sample.
    pub fn max_error(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.z_norm.iter().copied().fold(0.0, f64::max)).collect()
    }

    /// Largest `‖τ_i‖` over all nodes and samples.
    pub fn max_tau_norm(&self) -> f64 {
        self.states
            .iter()
            .flat_map(|s| s.tau.iter().map(|t| t.norm()))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncMetrics {
    pub eps: f64,
    pub final_errors: Vec<f64>,
    pub max_error: Vec<f64>,
    /// First recorded time after which `max_i ‖z_i‖ < eps` holds for good.
    pub settled_time: Option<f64>,
}

impl SyncMetrics {
    /// Key-value TOML summary; the full `max_error` series is left to the trace.
    pub fn to_toml(&self) -> String {
        let mut t = toml::Table::new();
        t.insert("eps".into(), self.eps.into());
        t.insert(
            "final_errors".into(),
            toml::Value::Array(self.final_errors.iter().map(|e| (*e).into()).collect()),
        );
        let worst = self.final_errors.iter().copied().fold(0.0, f64::max);
        t.insert("final_max_error".into(), worst.into());
        t.insert("peak_error".into(), self.max_error.iter().copied().fold(0.0, f64::max).into());
        t.insert("settled".into(), self.settled_time.is_some().into());
        if let Some(ts) = self.settled_time {
            t.insert("settled_time".into(), ts.into());
        }
        toml::to_string(&t).expect("metrics tables always serialize")
    }
}

pub fn sync_metrics(trace: &Trace, eps: f64) -> Result<SyncMetrics> {
    let last = trace.samples.last().ok_or_else(|| Error::param("empty trace"))?;
    let max_error = trace.max_error();
    let settled_time = match max_error.iter().rposition(|e| *e >= eps) {
        None => Some(trace.times[0]),
        Some(k) if k + 1 < max_error.len() => Some(trace.times[k + 1]),
        Some(_) => None,
    };
    Ok(SyncMetrics { eps, final_errors: last.z_norm.clone(), max_error, settled_time })
}
