use nalgebra::{Complex, DMatrix, DVector};

use crate::linalg::{eigenvalues, logspace};
use crate::models::LeaderModel;
use crate::{Error, Result};

pub type C64 = Complex<f64>;

/// `Cᵀ(sI − A)⁻¹B` by an LU solve.
pub fn transfer_eval(leader: &LeaderModel, s: C64) -> Result<DVector<C64>> {
    let n = leader.n();
    let a = leader.a();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { s } else { C64::new(0.0, 0.0) };
        diag - C64::new(a[(i, j)], 0.0)
    });
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let lu = m.lu();
    let pivot = (0..n).map(|k| lu.u()[(k, k)].norm()).fold(f64::INFINITY, f64::min);
    if !(pivot > 1e-13 * scale) {
        return Err(Error::Singular);
    }
    let rhs = leader.b().map(|v| C64::new(v, 0.0));
    let x = lu.solve(&rhs).ok_or(Error::Singular)?;
    let c = leader.c().map(|v| C64::new(v, 0.0));
    Ok(c.transpose() * x)
}

/// `gᵀχ(s)`.
pub fn g_transfer(leader: &LeaderModel, g: &DVector<f64>, s: C64) -> Result<C64> {
    if g.len() != leader.l() {
        return Err(Error::dim(format!("g has length {}, expected {}", g.len(), leader.l())));
    }
    let chi = transfer_eval(leader, s)?;
    Ok(chi.iter().zip(g.iter()).map(|(c, g)| c * *g).sum())
}

/// `min_k |Re λ_k(A)|` for a Hurwitz `A`.
pub fn stability_degree(a: &DMatrix<f64>) -> Result<f64> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::dim(format!("expected a nonempty square matrix, got {:?}", a.shape())));
    }
    let eig = eigenvalues(a);
    let max_real = eig.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    if !(max_real < 0.0) {
        return Err(Error::NotHurwitz { max_real });
    }
    Ok(-max_real)
}

/// `ω = 0` followed by 2000 log-spaced points on `[10⁻³, 10⁴]`.
pub fn default_omega_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    grid.extend(logspace(1e-3, 1e4, 2000));
    grid
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyCheck {
    /// Both conditions hold.
    pub ok: bool,
    /// `Re gᵀχ(iω) > 0` at every grid point and at `ω = 0`.
    pub positive_real_ok: bool,
    pub min_re: f64,
    pub argmin: f64,
    /// `gᵀCᵀB`, the leading coefficient of `gᵀχ(s)` at infinity.
    pub leading_coefficient: f64,
    /// Exact `lim ω²·Re gᵀχ(iω) = −gᵀCᵀAB`.
    pub high_frequency_limit: f64,
    /// Relative degree one with positive leading coefficient and a positive
    /// high-frequency limit.
    pub relative_degree_ok: bool,
    /// Smallest `ω²·Re gᵀχ(iω)` over the top decade of the grid.
    pub tail_min: f64,
}

/// Checks `Re gᵀχ(iω) > 0` on `omega` and the high-frequency limit
/// `ω²·Re gᵀχ(iω) → −gᵀCᵀAB > 0`, decided from the Markov parameters.
pub fn frequency_condition_check(
    leader: &LeaderModel,
    g: &DVector<f64>,
    omega: &[f64],
) -> Result<FrequencyCheck> {
    if omega.is_empty() {
        return Err(Error::EmptyGrid);
    }
    stability_degree(leader.a())?;
    let mut min_re = f64::INFINITY;
    let mut argmin = f64::NAN;
    let zero_included = omega.iter().any(|w| *w == 0.0);
    let points = omega.iter().copied().chain((!zero_included).then_some(0.0));
    for w in points {
        let re = g_transfer(leader, g, C64::new(0.0, w))?.re;
        if re < min_re {
            min_re = re;
            argmin = w;
        }
    }
    let w_max = omega.iter().copied().fold(0.0, f64::max);
    let mut tail_min = f64::INFINITY;
    for &w in omega.iter().filter(|w| **w >= w_max / 10.0 && **w > 0.0) {
        tail_min = tail_min.min(w * w * g_transfer(leader, g, C64::new(0.0, w))?.re);
    }

    let cg = leader.c() * g;
    let leading_coefficient = cg.dot(leader.b());
    let high_frequency_limit = -cg.dot(&(leader.a() * leader.b()));
    let relative_degree_ok = leading_coefficient > 0.0 && high_frequency_limit > 0.0;
    let positive_real_ok = min_re > 0.0;
    Ok(FrequencyCheck {
        ok: positive_real_ok && relative_degree_ok,
        positive_real_ok,
        min_re,
        argmin,
        leading_coefficient,
        high_frequency_limit,
        relative_degree_ok,
        tail_min,
    })
}

/// `(ω, gᵀχ(iω))` rows for plotting.
pub fn nyquist_data(leader: &LeaderModel, g: &DVector<f64>, omega: &[f64]) -> Result<Vec<(f64, C64)>> {
    omega.iter().map(|&w| Ok((w, g_transfer(leader, g, C64::new(0.0, w))?))).collect()
}
