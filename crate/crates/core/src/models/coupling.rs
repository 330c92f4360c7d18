//! Interconnections `Σ_j α_ij φ_ij(x_i − x_j)` between followers.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    /// `sin(Δ_p)`
    SinDiff,
    /// `Δ_p`
    LinDiff,
}

impl CouplingKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::SinDiff => "sin_diff",
            Self::LinDiff => "lin_diff",
        }
    }

    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Self::SinDiff => v.sin(),
            Self::LinDiff => v,
        }
    }
}

/// Output component `slot` equals `kind(Δ[index])` where `Δ = x_i − x_j`.
/// Indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotAssignment {
    pub slot: usize,
    pub kind: CouplingKind,
    pub index: usize,
}

/// A structured coupling function; unassigned output slots are zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CouplingFunction {
    terms: Vec<SlotAssignment>,
}

impl CouplingFunction {
    pub fn new(terms: Vec<SlotAssignment>) -> Self {
        Self { terms }
    }

    /// Componentwise identity `φ(Δ) = Δ` on `n` states.
    pub fn identity(n: usize) -> Self {
        Self::new(
            (0..n)
                .map(|k| SlotAssignment { slot: k, kind: CouplingKind::LinDiff, index: k })
                .collect(),
        )
    }

    pub fn terms(&self) -> &[SlotAssignment] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for t in &self.terms {
            if t.slot >= n || t.index >= n {
                return Err(Error::param(format!(
                    "coupling slot {} / state index {} out of range for n = {n}",
                    t.slot + 1,
                    t.index + 1
                )));
            }
            if std::mem::replace(&mut seen[t.slot], true) {
                return Err(Error::param(format!("coupling slot {} assigned twice", t.slot + 1)));
            }
        }
        Ok(())
    }

    /// `out += scale · φ(diff)`.
    pub fn accumulate(&self, diff: &[f64], scale: f64, out: &mut [f64]) {
        for t in &self.terms {
            out[t.slot] += scale * t.kind.apply(diff[t.index]);
        }
    }

    pub fn eval(&self, diff: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; diff.len()];
        self.accumulate(diff, 1.0, &mut out);
        out
    }

    /// Exact global Lipschitz constant: both kinds are 1-Lipschitz per
    /// component, so the constant is the square root of the largest number of
    /// slots reading the same state index.
    pub fn lipschitz(&self) -> f64 {
        let mut counts = BTreeMap::<usize, usize>::new();
        for t in &self.terms {
            *counts.entry(t.index).or_default() += 1;
        }
        counts.values().max().map_or(0.0, |&c| (c as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingLink {
    pub alpha: f64,
    pub phi: CouplingFunction,
    /// Declared Lipschitz constant `L_ij`.
    pub lipschitz: f64,
}

/// Sparse coupling map `(i, j) → (α_ij, φ_ij, L_ij)` over `d` followers.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpec {
    d: usize,
    links: BTreeMap<(usize, usize), CouplingLink>,
}

impl CouplingSpec {
    pub fn empty(d: usize) -> Self {
        Self { d, links: BTreeMap::new() }
    }

    /// Builds a spec over `n`-dimensional states, validating every link.
    pub fn new(
        d: usize,
        n: usize,
        links: impl IntoIterator<Item = ((usize, usize), CouplingLink)>,
    ) -> Result<Self> {
        let mut spec = Self::empty(d);
        for ((i, j), link) in links {
            spec.insert(n, i, j, link)?;
        }
        Ok(spec)
    }

    fn insert(&mut self, n: usize, i: usize, j: usize, link: CouplingLink) -> Result<()> {
        let tag = format!("coupling ({}, {})", i + 1, j + 1);
        if i >= self.d || j >= self.d {
            return Err(Error::param(format!("{tag}: node index out of range for d = {}", self.d)));
        }
        if i == j && !link.phi.is_zero() {
            return Err(Error::param(format!("{tag}: self-coupling must be zero")));
        }
        if !link.alpha.is_finite() {
            return Err(Error::param(format!("{tag}: alpha must be finite")));
        }
        link.phi.validate(n).map_err(|e| Error::param(format!("{tag}: {e}")))?;
        let true_l = link.phi.lipschitz();
        if !(link.lipschitz > 0.0) || link.lipschitz < true_l * (1.0 - 1e-12) {
            return Err(Error::param(format!(
                "{tag}: declared L = {} is below the Lipschitz constant {true_l} of phi",
                link.lipschitz
            )));
        }
        if self.links.insert((i, j), link).is_some() {
            return Err(Error::param(format!("{tag}: duplicate entry")));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn links(&self) -> impl Iterator<Item = (&(usize, usize), &CouplingLink)> {
        self.links.iter()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&CouplingLink> {
        self.links.get(&(i, j))
    }

    /// Dense `d × d` matrix of gains `α_ij`.
    pub fn alpha_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.d, self.d);
        for (&(i, j), l) in &self.links {
            m[(i, j)] = l.alpha;
        }
        m
    }

    /// Same topology and functions with every gain multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for l in out.links.values_mut() {
            l.alpha *= factor;
        }
        out
    }

    /// `out_i += Σ_j α_ij φ_ij(x_i − x_j)`; `states` holds `d` blocks of
    /// length `n`, as does `out`.
    pub fn accumulate(&self, n: usize, states: &[f64], out: &mut [f64]) {
        let mut diff = vec![0.0; n];
        for (&(i, j), l) in &self.links {
            if l.alpha == 0.0 || l.phi.is_zero() {
                continue;
            }
            let xi = &states[i * n..(i + 1) * n];
            let xj = &states[j * n..(j + 1) * n];
            for k in 0..n {
                diff[k] = xi[k] - xj[k];
            }
            l.phi.accumulate(&diff, l.alpha, &mut out[i * n..(i + 1) * n]);
        }
    }
}
