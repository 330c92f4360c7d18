//! Scenario files: a TOML document describing the leader, the followers,
//! the couplings, the controller and the simulation settings.
//!
//! Node, slot and state indices in the file are 1-based. Unknown keys are
//! rejected. See `scenarios/chua5.scenario` for a complete example.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::control::{Adaptation, ControllerConfig};
use crate::models::{
    follower_from_matching, CouplingFunction, CouplingKind, CouplingLink, CouplingSpec, FollowerModel,
    LeaderModel, MatchingParams, NetworkModel, PiecewiseLinear, ReferenceInput, SlotAssignment,
    StaticNonlinearity, Table,
};
use crate::sim::{JointState, Method, SimConfig};
use crate::{Error, Result};

/// How a follower was specified: through matching parameters or raw
/// matrices. Raw matrices are only checked against the matching
/// conditions at verification time.
#[derive(Debug, Clone, PartialEq)]
pub enum FollowerSpec {
    Matching(MatchingParams),
    Raw { a: DMatrix<f64>, b: DVector<f64> },
}

/// Which output files a run writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Report,
    Nyquist,
    Trace,
    Metrics,
}

pub const ALL_OUTPUTS: [OutputFormat; 4] =
    [OutputFormat::Report, OutputFormat::Nyquist, OutputFormat::Trace, OutputFormat::Metrics];

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub directory: Option<String>,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { directory: None, formats: ALL_OUTPUTS.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    name: String,
    followers: Vec<FollowerSpec>,
    network: NetworkModel,
    controller: ControllerConfig,
    sim: SimConfig,
    leader_x0: DVector<f64>,
    follower_x0: Vec<DVector<f64>>,
    pub outputs: OutputSpec,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        leader: LeaderModel,
        followers: Vec<FollowerSpec>,
        couplings: CouplingSpec,
        controller: ControllerConfig,
        sim: SimConfig,
        leader_x0: DVector<f64>,
        follower_x0: Vec<DVector<f64>>,
    ) -> Result<Self> {
        let models = followers
            .iter()
            .enumerate()
            .map(|(i, f)| match f {
                FollowerSpec::Matching(mp) => follower_from_matching(&leader, i, mp),
                FollowerSpec::Raw { a, b } => FollowerModel::new(i, a.clone(), b.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        let network = NetworkModel::new(leader, models, couplings)?;
        if controller.d() != network.d() || controller.g().len() != network.l() {
            return Err(Error::dim(format!(
                "controller is for d = {}, l = {}; network has d = {}, l = {}",
                controller.d(),
                controller.g().len(),
                network.d(),
                network.l()
            )));
        }
        sim.validate()?;
        let s = Self {
            name: name.into(),
            followers,
            network,
            controller,
            sim,
            leader_x0,
            follower_x0,
            outputs: OutputSpec::default(),
        };
        s.initial_state().check(&s.network)?;
        Ok(s)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn network(&self) -> &NetworkModel {
        &self.network
    }

    pub fn controller(&self) -> &ControllerConfig {
        &self.controller
    }

    pub fn sim(&self) -> &SimConfig {
        &self.sim
    }

    pub fn sim_mut(&mut self) -> &mut SimConfig {
        &mut self.sim
    }

    pub fn follower_specs(&self) -> &[FollowerSpec] {
        &self.followers
    }

    pub fn leader_x0(&self) -> &DVector<f64> {
        &self.leader_x0
    }

    pub fn follower_x0(&self) -> &[DVector<f64>] {
        &self.follower_x0
    }

    /// Joint initial state with `τ_i(0)` from the controller configuration.
    pub fn initial_state(&self) -> JointState {
        JointState::new(self.leader_x0.clone(), self.follower_x0.clone(), self.controller.tau0().to_vec())
    }

    /// Same scenario with every coupling gain multiplied by `factor`.
    pub fn with_coupling_scale(&self, factor: f64) -> Result<Self> {
        let mut s = self.clone();
        s.network = self.network.with_couplings(self.network.couplings().scaled(factor))?;
        Ok(s)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Canonical TOML text; `parse_scenario(&s.emit())` reproduces `s`.
    pub fn emit(&self) -> String {
        let doc = ScenarioDoc::from(self);
        toml::to_string(&doc).expect("scenario documents always serialize")
    }
}

/// Text of the bundled `scenarios/chua5.scenario`.
pub const CHUA5_SCENARIO: &str = include_str!("../scenarios/chua5.scenario");

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string().trim_end().to_owned()))?;
    doc.into_scenario()
}

// ---------------------------------------------------------------------------
// document types

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default = "default_name")]
    name: String,
    leader: LeaderDoc,
    followers: Vec<FollowerDoc>,
    couplings: CouplingsDoc,
    #[serde(default)]
    controller: ControllerDoc,
    #[serde(default)]
    sim: SimDoc,
    #[serde(default)]
    outputs: OutputsDoc,
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeaderDoc {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<f64>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    g: Vec<f64>,
    psi0: Psi0Doc,
    #[serde(default)]
    u_bar: UBarDoc,
    x0: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Psi0Doc {
    Zero,
    ScaledPwlChua { m0: f64, m1: f64, p: f64, b: f64 },
    PiecewiseLinear {
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    CustomTable { x: Vec<f64>, y: Vec<f64> },
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum UBarDoc {
    #[default]
    Zero,
    Constant { value: f64 },
    LinearFeedback { gains: Vec<f64> },
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FollowerDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matching: Option<MatchingDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    raw: Option<RawDoc>,
    x0: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatchingDoc {
    nu: Vec<f64>,
    theta: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingsDoc {
    d: usize,
    #[serde(default)]
    links: Vec<LinkDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    i: usize,
    j: usize,
    alpha: f64,
    #[serde(rename = "L", default = "one")]
    lipschitz: f64,
    phi: Vec<SlotDoc>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SlotDoc {
    slot: usize,
    kind: KindDoc,
    index: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindDoc {
    SinDiff,
    LinDiff,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum GammaDoc {
    Named(String),
    Explicit(Vec<Vec<Vec<f64>>>),
}

impl Default for GammaDoc {
    fn default() -> Self {
        Self::Named("identity".into())
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerDoc {
    #[serde(default)]
    gamma: GammaDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tau0: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    adaptation: AdaptationDoc,
}

#[derive(Debug, Default, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum AdaptationDoc {
    #[default]
    SpeedGradient,
    Frozen,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimDoc {
    t_end: f64,
    dt: f64,
    method: MethodDoc,
    record_stride: usize,
    seed: u64,
}

impl Default for SimDoc {
    fn default() -> Self {
        Self::from(&SimConfig::default())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum MethodDoc {
    Rk4,
    Euler,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    directory: Option<String>,
    #[serde(default = "all_outputs")]
    formats: Vec<OutputFormat>,
}

fn all_outputs() -> Vec<OutputFormat> {
    ALL_OUTPUTS.to_vec()
}

impl Default for OutputsDoc {
    fn default() -> Self {
        Self { directory: None, formats: all_outputs() }
    }
}

// ---------------------------------------------------------------------------
// document -> model

fn at(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| {
        let msg = match e {
            Error::InvalidParameter(m) | Error::Dimension(m) | Error::Scenario(m) => m,
            other => other.to_string(),
        };
        Error::Scenario(format!("{path}: {msg}"))
    }
}

fn matrix(path: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(Error::Scenario(format!("{path}: matrix must be nonempty")));
    }
    if let Some(k) = rows.iter().position(|row| row.len() != c) {
        return Err(Error::Scenario(format!(
            "{path}: row {} has {} entries, expected {c}",
            k + 1,
            rows[k].len()
        )));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn vector(path: &str, v: &[f64], n: usize) -> Result<DVector<f64>> {
    if v.len() != n {
        return Err(Error::Scenario(format!("{path}: expected {n} entries, got {}", v.len())));
    }
    Ok(DVector::from_column_slice(v))
}

impl ScenarioDoc {
    fn into_scenario(self) -> Result<Scenario> {
        let ld = self.leader;
        let a = matrix("leader.A", &ld.a)?;
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Scenario(format!("leader.A: must be square, got {}x{}", n, a.ncols())));
        }
        let b = vector("leader.B", &ld.b, n)?;
        let c = matrix("leader.C", &ld.c)?;
        if c.nrows() != n {
            return Err(Error::Scenario(format!("leader.C: expected {n} rows, got {}", c.nrows())));
        }
        let l = c.ncols();
        let g = vector("leader.g", &ld.g, l)?;
        let psi0 = match ld.psi0 {
            Psi0Doc::Zero => StaticNonlinearity::Zero,
            Psi0Doc::ScaledPwlChua { m0, m1, p, b } => StaticNonlinearity::chua(m0, m1, p, b).map_err(at("leader.psi0"))?,
            Psi0Doc::PiecewiseLinear { breakpoints, slopes, offset } => StaticNonlinearity::PiecewiseLinear(
                PiecewiseLinear::new(breakpoints, slopes, offset).map_err(at("leader.psi0"))?,
            ),
            Psi0Doc::CustomTable { x, y } => {
                StaticNonlinearity::Table(Table::new(x, y).map_err(at("leader.psi0"))?)
            }
        };
        let u_bar = match ld.u_bar {
            UBarDoc::Zero => ReferenceInput::Zero,
            UBarDoc::Constant { value } => ReferenceInput::Constant(value),
            UBarDoc::LinearFeedback { gains } => {
                ReferenceInput::LinearFeedback(vector("leader.u_bar.gains", &gains, n)?)
            }
            UBarDoc::Sinusoid { amplitude, frequency, phase, offset } => {
                ReferenceInput::Sinusoid { amplitude, frequency, phase, offset }
            }
        };
        let leader_x0 = vector("leader.x0", &ld.x0, n)?;
        let leader = LeaderModel::new(a, b, c, psi0, u_bar, g.clone()).map_err(at("leader"))?;

        let d = self.couplings.d;
        if self.followers.len() != d {
            return Err(Error::Scenario(format!(
                "couplings.d: {d} does not match the {} followers",
                self.followers.len()
            )));
        }
        let mut followers = Vec::with_capacity(d);
        let mut follower_x0 = Vec::with_capacity(d);
        for (i, fd) in self.followers.into_iter().enumerate() {
            let path = format!("followers[{}]", i + 1);
            let spec = match (fd.matching, fd.raw) {
                (Some(m), None) => {
                    let nu = vector(&format!("{path}.matching.nu"), &m.nu, l)?;
                    let mp = MatchingParams::new(nu, m.theta).map_err(at(&format!("{path}.matching.theta")))?;
                    FollowerSpec::Matching(mp)
                }
                (None, Some(r)) => {
                    let a = matrix(&format!("{path}.raw.A"), &r.a)?;
                    if a.shape() != (n, n) {
                        return Err(Error::Scenario(format!(
                            "{path}.raw.A: expected {n}x{n}, got {}x{}",
                            a.nrows(),
                            a.ncols()
                        )));
                    }
                    let b = vector(&format!("{path}.raw.B"), &r.b, n)?;
                    FollowerSpec::Raw { a, b }
                }
                _ => {
                    return Err(Error::Scenario(format!("{path}: give exactly one of `matching` or `raw`")));
                }
            };
            followers.push(spec);
            follower_x0.push(vector(&format!("{path}.x0"), &fd.x0, n)?);
        }

        let mut links = Vec::with_capacity(self.couplings.links.len());
        for (k, ln) in self.couplings.links.into_iter().enumerate() {
            let path = format!("couplings.links[{}]", k + 1);
            if ln.i == 0 || ln.j == 0 || ln.i > d || ln.j > d {
                return Err(Error::Scenario(format!(
                    "{path}: node index ({}, {}) out of range 1..={d}",
                    ln.i, ln.j
                )));
            }
            let mut terms = Vec::with_capacity(ln.phi.len());
            for (q, s) in ln.phi.iter().enumerate() {
                if s.slot == 0 || s.slot > n || s.index == 0 || s.index > n {
                    return Err(Error::Scenario(format!(
                        "{path}.phi[{}]: slot {} / index {} out of range 1..={n}",
                        q + 1,
                        s.slot,
                        s.index
                    )));
                }
                let kind = match s.kind {
                    KindDoc::SinDiff => CouplingKind::SinDiff,
                    KindDoc::LinDiff => CouplingKind::LinDiff,
                };
                terms.push(SlotAssignment { slot: s.slot - 1, kind, index: s.index - 1 });
            }
            links.push((
                (ln.i - 1, ln.j - 1),
                CouplingLink { alpha: ln.alpha, phi: CouplingFunction::new(terms), lipschitz: ln.lipschitz },
            ));
        }
        let couplings = CouplingSpec::new(d, n, links).map_err(at("couplings"))?;

        let cd = self.controller;
        let p = l + 1;
        let cg = match cd.g {
            Some(v) => vector("controller.g", &v, l)?,
            None => g,
        };
        let gamma = match cd.gamma {
            GammaDoc::Named(s) if s == "identity" => vec![DMatrix::identity(p, p); d],
            GammaDoc::Named(s) => {
                return Err(Error::Scenario(format!("controller.gamma: unknown value {s:?} (\"identity\" or explicit matrices)")));
            }
            GammaDoc::Explicit(ms) => {
                if ms.len() != d {
                    return Err(Error::Scenario(format!("controller.gamma: {} matrices for d = {d}", ms.len())));
                }
                ms.iter()
                    .enumerate()
                    .map(|(i, m)| matrix(&format!("controller.gamma[{}]", i + 1), m))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let tau0 = match cd.tau0 {
            None => vec![DVector::zeros(p); d],
            Some(ts) => {
                if ts.len() != d {
                    return Err(Error::Scenario(format!("controller.tau0: {} vectors for d = {d}", ts.len())));
                }
                ts.iter()
                    .enumerate()
                    .map(|(i, t)| vector(&format!("controller.tau0[{}]", i + 1), t, p))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let adaptation = match cd.adaptation {
            AdaptationDoc::SpeedGradient => Adaptation::SpeedGradient,
            AdaptationDoc::Frozen => Adaptation::Frozen,
        };
        let controller = ControllerConfig::new(gamma, cg, tau0, adaptation).map_err(at("controller"))?;

        let sd = self.sim;
        let sim = SimConfig {
            t_end: sd.t_end,
            dt: sd.dt,
            method: match sd.method {
                MethodDoc::Rk4 => Method::Rk4,
                MethodDoc::Euler => Method::Euler,
            },
            record_stride: sd.record_stride,
            seed: sd.seed,
        };
        sim.validate().map_err(at("sim"))?;

        let mut scenario =
            Scenario::new(self.name, leader, followers, couplings, controller, sim, leader_x0, follower_x0)
                .map_err(at("scenario"))?;
        scenario.outputs = OutputSpec { directory: self.outputs.directory, formats: self.outputs.formats };
        Ok(scenario)
    }
}

// ---------------------------------------------------------------------------
// model -> document

impl From<&SimConfig> for SimDoc {
    fn from(s: &SimConfig) -> Self {
        Self {
            t_end: s.t_end,
            dt: s.dt,
            method: match s.method {
                Method::Rk4 => MethodDoc::Rk4,
                Method::Euler => MethodDoc::Euler,
            },
            record_stride: s.record_stride,
            seed: s.seed,
        }
    }
}

impl From<&Scenario> for ScenarioDoc {
    fn from(s: &Scenario) -> Self {
        let net = &s.network;
        let leader = net.leader();
        let psi0 = match leader.psi0() {
            StaticNonlinearity::Zero => Psi0Doc::Zero,
            StaticNonlinearity::ScaledPwlChua { m0, m1, p, b } => {
                Psi0Doc::ScaledPwlChua { m0: *m0, m1: *m1, p: *p, b: *b }
            }
            StaticNonlinearity::PiecewiseLinear(pw) => Psi0Doc::PiecewiseLinear {
                breakpoints: pw.breakpoints().to_vec(),
                slopes: pw.slopes().to_vec(),
                offset: pw.offset(),
            },
            StaticNonlinearity::Table(t) => Psi0Doc::CustomTable { x: t.xs().to_vec(), y: t.ys().to_vec() },
        };
        let u_bar = match leader.u_bar() {
            ReferenceInput::Zero => UBarDoc::Zero,
            ReferenceInput::Constant(value) => UBarDoc::Constant { value: *value },
            ReferenceInput::LinearFeedback(k) => UBarDoc::LinearFeedback { gains: k.iter().copied().collect() },
            ReferenceInput::Sinusoid { amplitude, frequency, phase, offset } => UBarDoc::Sinusoid {
                amplitude: *amplitude,
                frequency: *frequency,
                phase: *phase,
                offset: *offset,
            },
        };
        let followers = s
            .followers
            .iter()
            .zip(&s.follower_x0)
            .map(|(f, x0)| {
                let (matching, raw) = match f {
                    FollowerSpec::Matching(mp) => {
                        (Some(MatchingDoc { nu: mp.nu.iter().copied().collect(), theta: mp.theta }), None)
                    }
                    FollowerSpec::Raw { a, b } => {
                        (None, Some(RawDoc { a: rows_of(a), b: b.iter().copied().collect() }))
                    }
                };
                FollowerDoc { matching, raw, x0: x0.iter().copied().collect() }
            })
            .collect();
        let links = net
            .couplings()
            .links()
            .map(|(&(i, j), l)| LinkDoc {
                i: i + 1,
                j: j + 1,
                alpha: l.alpha,
                lipschitz: l.lipschitz,
                phi: l
                    .phi
                    .terms()
                    .iter()
                    .map(|t| SlotDoc {
                        slot: t.slot + 1,
                        kind: match t.kind {
                            CouplingKind::SinDiff => KindDoc::SinDiff,
                            CouplingKind::LinDiff => KindDoc::LinDiff,
                        },
                        index: t.index + 1,
                    })
                    .collect(),
            })
            .collect();
        let c = &s.controller;
        let p = c.g().len() + 1;
        let gamma = if c.gamma().iter().all(|m| *m == DMatrix::identity(p, p)) {
            GammaDoc::default()
        } else {
            GammaDoc::Explicit(c.gamma().iter().map(rows_of).collect())
        };
        let tau0 = if c.tau0().iter().all(|t| t.iter().all(|v| *v == 0.0)) {
            None
        } else {
            Some(c.tau0().iter().map(|t| t.iter().copied().collect()).collect())
        };
        let g = (c.g() != leader.g()).then(|| c.g().iter().copied().collect());
        ScenarioDoc {
            name: s.name.clone(),
            leader: LeaderDoc {
                a: rows_of(leader.a()),
                b: leader.b().iter().copied().collect(),
                c: rows_of(leader.c()),
                g: leader.g().iter().copied().collect(),
                psi0,
                u_bar,
                x0: s.leader_x0.iter().copied().collect(),
            },
            followers,
            couplings: CouplingsDoc { d: net.d(), links },
            controller: ControllerDoc {
                gamma,
                g,
                tau0,
                adaptation: match c.adaptation() {
                    Adaptation::SpeedGradient => AdaptationDoc::SpeedGradient,
                    Adaptation::Frozen => AdaptationDoc::Frozen,
                },
            },
            sim: SimDoc::from(&s.sim),
            outputs: OutputsDoc { directory: s.outputs.directory.clone(), formats: s.outputs.formats.clone() },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::chua_network_preset;

    fn chua_text() -> String {
        chua_network_preset().emit()
    }

    #[test]
    fn emit_parse_round_trip() {
        let s = chua_network_preset();
        assert_eq!(parse_scenario(&s.emit()).unwrap(), s);
    }

    #[test]
    fn zero_theta_names_follower() {
        let text = chua_text().replacen("theta = 0.5", "theta = 0.0", 1);
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.contains("followers[2]"), "{err}");
        assert!(err.contains("theta"), "{err}");
    }

    #[test]
    fn state_index_out_of_range() {
        let text = chua_text().replacen("index = 1", "index = 4", 1);
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.contains("out of range"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = chua_text().replacen("[sim]", "[sim]\nfoo = 1", 1);
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.contains("foo"), "{err}");
    }

    #[test]
    fn unknown_kinds_rejected() {
        let text = chua_text().replacen("kind = \"sin_diff\"", "kind = \"tanh_diff\"", 1);
        assert!(parse_scenario(&text).is_err());
        let text = chua_text().replacen("scaled_pwl_chua", "cubic", 1);
        assert!(parse_scenario(&text).is_err());
    }

    #[test]
    fn syntax_errors_carry_location() {
        let err = parse_scenario("name = \"x\"\n[leader\nA = 1").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn dimension_errors_carry_field_path() {
        let text = chua_text().replacen("x0 = [7.0, 14.0, 0.4]", "x0 = [7.0, 14.0]", 1);
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.contains("followers[1].x0"), "{err}");
    }

    #[test]
    fn raw_followers_and_explicit_gamma_round_trip() {
        let base = chua_network_preset();
        let net = base.network();
        let followers = net
            .followers()
            .iter()
            .map(|f| FollowerSpec::Raw { a: f.a().clone(), b: f.b().clone() })
            .collect();
        let gamma = (0..net.d()).map(|i| DMatrix::identity(2, 2) * (i as f64 + 1.0)).collect();
        let tau0 = (0..net.d()).map(|i| DVector::from_vec(vec![i as f64, 0.5])).collect();
        let controller =
            ControllerConfig::new(gamma, net.leader().g().clone(), tau0, Adaptation::Frozen).unwrap();
        let s = Scenario::new(
            "raw",
            net.leader().clone(),
            followers,
            net.couplings().clone(),
            controller,
            SimConfig { method: Method::Euler, ..base.sim().clone() },
            base.leader_x0().clone(),
            base.follower_x0().to_vec(),
        )
        .unwrap();
        let back = parse_scenario(&s.emit()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.network(), base.network());
    }
}
