//! Checks of every hypothesis of the synchronization theorem: stability and
//! frequency-domain passivity of the leader, a Lyapunov certificate, the
//! coupling-strength bound, matching of every follower and monotonicity of
//! the leader nonlinearity.

mod bounds;
mod frequency;
mod lmi;

pub use bounds::{
    condition_number, coupling_bound, g_monotone_check, proof_matrix_m, weighted_in_degrees, MonotoneCheck,
    ProofMatrix, MONOTONE_TOL,
};
pub use frequency::{
    default_omega_grid, frequency_condition_check, g_transfer, nyquist_data, stability_degree, transfer_eval,
    FrequencyCheck, C64,
};
pub use lmi::{solve_passivity_lmi, LmiOptions, PassivityCertificate};

use nalgebra::{DMatrix, DVector};
use toml::{Table, Value};

use crate::linalg::spectral_abscissa;
use crate::models::{verify_matching, MatchingParams, NetworkModel};

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Output weighting; `None` takes the leader's `g`.
    pub g: Option<DVector<f64>>,
    pub omega: Vec<f64>,
    /// A missing ceiling defaults to `ρ*` here.
    pub lmi: LmiOptions,
    pub matching_tol: f64,
    pub constraint_tol: f64,
    pub monotone_samples: usize,
    pub monotone_range: (f64, f64),
    pub seed: u64,
    /// Factor applied to the certified `ρ` before it enters `ζ`.
    pub rho_safety: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            g: None,
            omega: default_omega_grid(),
            lmi: LmiOptions::default(),
            matching_tol: 1e-8,
            constraint_tol: 1e-8,
            monotone_samples: 10_000,
            monotone_range: (-100.0, 100.0),
            seed: 0,
            rho_safety: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub d: usize,
    pub g: DVector<f64>,
    pub hurwitz_ok: bool,
    pub spectral_abscissa: f64,
    pub frequency: Option<FrequencyCheck>,
    pub freq_cond_ok: bool,
    pub relative_degree_ok: bool,
    pub cert: Option<PassivityCertificate>,
    pub rho_star: Option<f64>,
    /// Certified decay rate after the safety factor.
    pub rho: Option<f64>,
    pub lambda_star: Option<f64>,
    pub gamma: Option<f64>,
    pub in_degrees: DVector<f64>,
    pub coupling_ok: bool,
    pub matching_ok: Vec<bool>,
    pub matching: Vec<Option<MatchingParams>>,
    pub g_monotone: Option<MonotoneCheck>,
    pub g_monotone_ok: bool,
    pub zeta: Option<f64>,
    pub m_matrix_ok: bool,
    /// Why a stage produced no result.
    pub notes: Vec<String>,
}

impl VerificationReport {
    /// Every hypothesis holds. The coupling bound is only sufficient, so a
    /// failing report does not mean the network cannot synchronize.
    pub fn passed(&self) -> bool {
        self.hurwitz_ok
            && self.freq_cond_ok
            && self.relative_degree_ok
            && self.cert.is_some()
            && self.coupling_ok
            && self.matching_ok.iter().all(|ok| *ok)
            && self.g_monotone_ok
            && self.m_matrix_ok
    }

    /// Flat key-value TOML document with every field.
    pub fn to_toml(&self) -> String {
        let mut t = Table::new();
        t.insert("passed".into(), self.passed().into());
        t.insert("d".into(), (self.d as i64).into());
        t.insert("g".into(), vec_value(&self.g));
        t.insert("hurwitz_ok".into(), self.hurwitz_ok.into());
        t.insert("spectral_abscissa".into(), self.spectral_abscissa.into());
        t.insert("freq_cond_ok".into(), self.freq_cond_ok.into());
        t.insert("relative_degree_ok".into(), self.relative_degree_ok.into());
        if let Some(f) = &self.frequency {
            t.insert("freq_min_re".into(), f.min_re.into());
            t.insert("freq_argmin_omega".into(), f.argmin.into());
            t.insert("freq_leading_coefficient".into(), f.leading_coefficient.into());
            t.insert("freq_high_frequency_limit".into(), f.high_frequency_limit.into());
            t.insert("freq_tail_min".into(), f.tail_min.into());
        }
        t.insert("cert_found".into(), self.cert.is_some().into());
        if let Some(c) = &self.cert {
            t.insert("cert_h".into(), mat_value(&c.h));
            t.insert("cert_rho".into(), c.rho.into());
            t.insert("cert_lyapunov_margin".into(), c.lyapunov_margin.into());
            t.insert("cert_constraint_norm".into(), c.constraint_norm.into());
            t.insert("cert_lambda_min".into(), c.lambda_min.into());
        }
        let mut opt = |key: &str, v: Option<f64>| {
            if let Some(v) = v {
                t.insert(key.into(), v.into());
            }
        };
        opt("rho_star", self.rho_star);
        opt("rho", self.rho);
        opt("lambda_star", self.lambda_star);
        opt("gamma", self.gamma);
        opt("zeta", self.zeta);
        t.insert("in_degrees".into(), vec_value(&self.in_degrees));
        t.insert("coupling_ok".into(), self.coupling_ok.into());
        t.insert("matching_ok".into(), Value::Array(self.matching_ok.iter().map(|b| (*b).into()).collect()));
        t.insert(
            "matching_theta".into(),
            Value::Array(self.matching.iter().map(|m| m.as_ref().map_or(f64::NAN, |m| m.theta).into()).collect()),
        );
        t.insert(
            "matching_nu".into(),
            Value::Array(
                self.matching
                    .iter()
                    .map(|m| m.as_ref().map_or(Value::Array(vec![]), |m| vec_value(&m.nu)))
                    .collect(),
            ),
        );
        t.insert("g_monotone_ok".into(), self.g_monotone_ok.into());
        if let Some(m) = &self.g_monotone {
            if let Some(e) = m.exact {
                t.insert("g_monotone_exact".into(), e.into());
            }
            if let Some((x, y, v)) = m.worst {
                t.insert("g_monotone_worst_pair".into(), Value::Array(vec![x.into(), y.into(), v.into()]));
            }
        }
        t.insert("m_matrix_ok".into(), self.m_matrix_ok.into());
        if !self.notes.is_empty() {
            t.insert("notes".into(), Value::Array(self.notes.iter().map(|s| s.as_str().into()).collect()));
        }
        toml::to_string(&t).expect("report tables always serialize")
    }
}

fn vec_value(v: &DVector<f64>) -> Value {
    Value::Array(v.iter().map(|x| (*x).into()).collect())
}

fn mat_value(m: &DMatrix<f64>) -> Value {
    Value::Array(m.row_iter().map(|r| Value::Array(r.iter().map(|x| (*x).into()).collect())).collect())
}

/// Runs every check on `net`. Failures become report fields; later stages
/// that depend on a failed one are left empty.
pub fn verify_network(net: &NetworkModel, opts: &VerifyOptions) -> VerificationReport {
    let leader = net.leader();
    let d = net.d();
    let g = opts.g.clone().unwrap_or_else(|| leader.g().clone());
    let mut notes = Vec::new();
    let abscissa = spectral_abscissa(leader.a());
    let hurwitz_ok = abscissa < 0.0;

    let mut frequency = None;
    let mut cert = None;
    let mut rho_star = None;
    if hurwitz_ok {
        match frequency_condition_check(leader, &g, &opts.omega) {
            Ok(f) => frequency = Some(f),
            Err(e) => notes.push(format!("frequency check: {e}")),
        }
        rho_star = stability_degree(leader.a()).ok();
    } else {
        notes.push(format!("leader matrix is not Hurwitz (max real part {abscissa:.6e})"));
    }
    let freq_cond_ok = frequency.as_ref().is_some_and(|f| f.positive_real_ok);
    let relative_degree_ok = frequency.as_ref().is_some_and(|f| f.relative_degree_ok);
    if freq_cond_ok && relative_degree_ok {
        let lmi = LmiOptions { rho_ceiling: opts.lmi.rho_ceiling.or(rho_star), ..opts.lmi.clone() };
        match solve_passivity_lmi(leader, &g, &lmi) {
            Ok(c) if c.constraint_norm <= opts.constraint_tol => cert = Some(c),
            Ok(c) => notes.push(format!("certificate constraint residual {:.3e} too large", c.constraint_norm)),
            Err(e) => notes.push(format!("certificate search: {e}")),
        }
    } else if hurwitz_ok {
        notes.push("frequency conditions fail; no certificate attempted".into());
    }

    let rho = cert.as_ref().map(|c| c.rho * opts.rho_safety);
    let lambda_star = cert.as_ref().and_then(|c| condition_number(&c.h).ok());
    let gamma = match (rho_star, lambda_star) {
        (Some(r), Some(l)) => coupling_bound(r, d, l).ok(),
        _ => None,
    };
    let in_degrees = weighted_in_degrees(net.couplings());
    let coupling_ok = gamma.is_some_and(|gm| in_degrees.iter().all(|deg| *deg < gm));

    let mut matching = Vec::with_capacity(d);
    for f in net.followers() {
        match verify_matching(leader, f, opts.matching_tol) {
            Ok(mp) => matching.push(Some(mp)),
            Err(e) => {
                notes.push(format!("follower {}: {e}", f.index + 1));
                matching.push(None);
            }
        }
    }
    let matching_ok = matching.iter().map(Option::is_some).collect();

    let g_monotone =
        match g_monotone_check(leader.psi0(), &g, opts.monotone_samples, opts.monotone_range, opts.seed) {
            Ok(m) => Some(m),
            Err(e) => {
                notes.push(format!("monotonicity check: {e}"));
                None
            }
        };
    let g_monotone_ok = g_monotone.as_ref().is_some_and(|m| m.ok);

    let alpha_max = in_degrees.iter().copied().fold(0.0, f64::max);
    let zeta = match (rho, lambda_star) {
        (Some(r), Some(l)) if alpha_max > 0.0 => Some(r / (alpha_max * 2.0 * l)),
        (Some(_), Some(_)) => Some(f64::INFINITY),
        _ => None,
    };
    let m_matrix_ok = match zeta {
        Some(z) if z.is_infinite() => true,
        Some(z) => proof_matrix_m(d, z).is_ok_and(|p| p.is_contraction),
        None => false,
    };

    VerificationReport {
        d,
        g,
        hurwitz_ok,
        spectral_abscissa: abscissa,
        frequency,
        freq_cond_ok,
        relative_degree_ok,
        cert,
        rho_star,
        rho,
        lambda_star,
        gamma,
        in_degrees,
        coupling_ok,
        matching_ok,
        matching,
        g_monotone,
        g_monotone_ok,
        zeta,
        m_matrix_ok,
        notes,
    }
}
