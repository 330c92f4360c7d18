use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::frequency::stability_degree;
use crate::linalg::{is_spd, sym_eig_max, sym_eig_min, sym_eigen_sorted, symmetrize};
use crate::models::LeaderModel;
use crate::{Error, Result};

/// Settings of the certificate search.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiOptions {
    /// Required lower bound `H ≻ eps·I`.
    pub eps: f64,
    /// Upper end of the `ρ` bisection; `None` means `2ρ*`, the supremum of
    /// feasible decay rates.
    pub rho_ceiling: Option<f64>,
    /// Bisection stops once the bracket is narrower than `rel_tol · ceiling`.
    pub rel_tol: f64,
    /// Quasi-Newton iterations per smoothing stage and feasibility attempt.
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for LmiOptions {
    fn default() -> Self {
        Self { eps: 1e-6, rho_ceiling: None, rel_tol: 1e-3, max_iters: 200, seed: 0 }
    }
}

/// `H = Hᵀ ≻ 0` with `HA + AᵀH + ρH ≺ 0` and `HB = Cg`.
#[derive(Debug, Clone, PartialEq)]
pub struct PassivityCertificate {
    pub h: DMatrix<f64>,
    pub rho: f64,
    pub rho_star: f64,
    pub g: DVector<f64>,
    /// `λmax(HA + AᵀH + ρH)`, negative for a valid certificate.
    pub lyapunov_margin: f64,
    /// `‖HB − Cg‖`.
    pub constraint_norm: f64,
    pub lambda_min: f64,
}

impl PassivityCertificate {
    /// Recomputes the residuals for `(h, rho)` from scratch.
    pub fn evaluate(leader: &LeaderModel, g: &DVector<f64>, h: DMatrix<f64>, rho: f64) -> Result<Self> {
        let rho_star = stability_degree(leader.a())?;
        let a = leader.a();
        let lyapunov_margin = sym_eig_max(&(&h * a + a.transpose() * &h + &h * rho));
        let constraint_norm = (&h * leader.b() - leader.c() * g).norm();
        let lambda_min = sym_eig_min(&h);
        Ok(Self { h, rho, rho_star, g: g.clone(), lyapunov_margin, constraint_norm, lambda_min })
    }

    /// All certificate inequalities hold, the equality within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.lambda_min > 0.0 && self.lyapunov_margin < 0.0 && self.constraint_norm <= tol
    }

    /// Same certificate at a smaller decay rate; the margin only improves.
    pub fn with_rho(&self, leader: &LeaderModel, rho: f64) -> Result<Self> {
        Self::evaluate(leader, &self.g, self.h.clone(), rho)
    }
}

/// Affine parameterization `H(c) = H₀ + Σ c_k E_k` of
/// `{H = Hᵀ : HB = Cg}` with Frobenius-orthonormal directions `E_k`.
struct AffineSpace {
    h0: DMatrix<f64>,
    basis: Vec<DMatrix<f64>>,
}

impl AffineSpace {
    fn new(leader: &LeaderModel, g: &DVector<f64>) -> Result<Self> {
        let n = leader.n();
        let b = leader.b();
        let target = leader.c() * g;
        let sym: Vec<DMatrix<f64>> = (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let mut s = DMatrix::zeros(n, n);
                if i == j {
                    s[(i, i)] = 1.0;
                } else {
                    s[(i, j)] = std::f64::consts::FRAC_1_SQRT_2;
                    s[(j, i)] = std::f64::consts::FRAC_1_SQRT_2;
                }
                s
            })
            .collect();
        let m = sym.len();
        let mut op = DMatrix::zeros(n, m);
        for (k, s) in sym.iter().enumerate() {
            op.set_column(k, &(s * b));
        }
        let gram = &op * op.transpose();
        let chol = gram.cholesky().ok_or(Error::Singular)?;
        let p = op.transpose() * chol.solve(&target);
        let h0 = combine(&sym, p.as_slice());

        let proj = DMatrix::identity(m, m) - op.transpose() * chol.solve(&op);
        let (vals, vecs) = sym_eigen_sorted(&proj);
        let basis = (0..m)
            .filter(|&k| vals[k] > 0.5)
            .map(|k| combine(&sym, vecs.column(k).as_slice()))
            .collect();
        Ok(Self { h0, basis })
    }

    fn h(&self, c: &[f64]) -> DMatrix<f64> {
        let mut h = self.h0.clone();
        for (e, ck) in self.basis.iter().zip(c) {
            h += e * *ck;
        }
        symmetrize(&h)
    }

    fn dim(&self) -> usize {
        self.basis.len()
    }
}

fn combine(mats: &[DMatrix<f64>], w: &[f64]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(mats[0].nrows(), mats[0].ncols());
    for (m, wk) in mats.iter().zip(w) {
        out += m * *wk;
    }
    out
}

/// Spectra of the two diagonal blocks of
/// `diag(HA + AᵀH + ρH, eps·I − H)`.
struct Blocks {
    lyap: (DVector<f64>, DMatrix<f64>),
    lower: (DVector<f64>, DMatrix<f64>),
}

impl Blocks {
    fn new(a: &DMatrix<f64>, h: &DMatrix<f64>, rho: f64, eps: f64) -> Self {
        let n = h.nrows();
        let lyap = sym_eigen_sorted(&(h * a + a.transpose() * h + h * rho));
        let lower = sym_eigen_sorted(&(DMatrix::identity(n, n) * eps - h));
        Self { lyap, lower }
    }

    fn max(&self) -> f64 {
        let n = self.lyap.0.len();
        self.lyap.0[n - 1].max(self.lower.0[n - 1])
    }
}

struct Problem<'a> {
    a: &'a DMatrix<f64>,
    space: &'a AffineSpace,
    rho: f64,
    eps: f64,
}

impl Problem<'_> {
    fn top(&self, c: &[f64]) -> f64 {
        Blocks::new(self.a, &self.space.h(c), self.rho, self.eps).max()
    }

    /// Log-sum-exp smoothing of the top eigenvalue and its gradient in `c`.
    fn smoothed(&self, c: &[f64], mu: f64) -> (f64, DVector<f64>) {
        let blocks = Blocks::new(self.a, &self.space.h(c), self.rho, self.eps);
        let top = blocks.max();
        let n = self.a.nrows();
        let mut z = 0.0;
        let mut grad_h = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let w = ((blocks.lyap.0[k] - top) / mu).exp();
            z += w;
            let v = blocks.lyap.1.column(k);
            let av = self.a * v;
            grad_h += (&v * av.transpose() + &av * v.transpose() + v * v.transpose() * self.rho) * w;
            let w = ((blocks.lower.0[k] - top) / mu).exp();
            z += w;
            let u = blocks.lower.1.column(k);
            grad_h -= u * u.transpose() * w;
        }
        grad_h /= z;
        let grad = DVector::from_iterator(self.space.dim(), self.space.basis.iter().map(|e| e.dot(&grad_h)));
        (top + mu * z.ln(), grad)
    }

    /// Smoothed quasi-Newton descent with decreasing smoothing; stops as
    /// soon as the true top eigenvalue drops below `-tol`.
    fn seek(&self, c: &mut DVector<f64>, iters: usize, tol: f64) -> bool {
        if self.top(c.as_slice()) < -tol {
            return true;
        }
        if self.space.dim() == 0 {
            return false;
        }
        let scale = self.top(c.as_slice()).abs().max(1.0);
        let mut mu = 0.1 * scale;
        while mu > 1e-9 * scale {
            if self.bfgs(c, mu, iters, tol) {
                return true;
            }
            mu *= 0.1;
        }
        false
    }

    fn bfgs(&self, c: &mut DVector<f64>, mu: f64, iters: usize, tol: f64) -> bool {
        let k = c.len();
        let mut hinv = DMatrix::<f64>::identity(k, k);
        let (mut fx, mut gx) = self.smoothed(c.as_slice(), mu);
        let mut first = true;
        for _ in 0..iters {
            let mut d = -(&hinv * &gx);
            let mut slope = gx.dot(&d);
            if !(slope < 0.0) {
                hinv = DMatrix::identity(k, k);
                d = -gx.clone();
                slope = gx.dot(&d);
            }
            if slope.abs() < 1e-30 {
                break;
            }
            let mut t = 1.0;
            let (cn, fnew, gnew) = loop {
                let cn = &*c + &d * t;
                let (f, g) = self.smoothed(cn.as_slice(), mu);
                if f <= fx + 1e-4 * t * slope {
                    break (cn, f, g);
                }
                t *= 0.5;
                if t < 1e-16 {
                    return self.top(c.as_slice()) < -tol;
                }
            };
            let s = &cn - &*c;
            let y = &gnew - &gx;
            let sy = s.dot(&y);
            if sy > 1e-14 * s.norm() * y.norm() {
                if first {
                    hinv *= sy / y.dot(&y);
                    first = false;
                }
                let rho = 1.0 / sy;
                let id = DMatrix::<f64>::identity(k, k);
                let left = &id - &s * y.transpose() * rho;
                let right = &id - &y * s.transpose() * rho;
                hinv = &left * &hinv * &right + &s * s.transpose() * rho;
            }
            *c = cn;
            let stalled = (fx - fnew).abs() <= 1e-15 * fx.abs().max(1.0) && s.norm() <= 1e-15 * c.norm().max(1.0);
            fx = fnew;
            gx = gnew;
            if self.top(c.as_slice()) < -tol {
                return true;
            }
            if stalled {
                break;
            }
        }
        false
    }
}

/// Searches a certificate with the largest decay rate `ρ` by bisection.
///
/// The equality `HB = Cg` is built into the parameterization, so it holds
/// to rounding. For every trial `ρ` the largest eigenvalue of
/// `diag(HA + AᵀH + ρH, eps·I − H)` is driven below zero.
pub fn solve_passivity_lmi(leader: &LeaderModel, g: &DVector<f64>, opts: &LmiOptions) -> Result<PassivityCertificate> {
    if g.len() != leader.l() {
        return Err(Error::dim(format!("g has length {}, expected {}", g.len(), leader.l())));
    }
    if !(opts.eps >= 0.0) || !(opts.rel_tol > 0.0 && opts.rel_tol < 1.0) || opts.max_iters == 0 {
        return Err(Error::param("LMI options need eps >= 0, 0 < rel_tol < 1 and max_iters > 0"));
    }
    let rho_star = stability_degree(leader.a())?;
    let ceiling = opts.rho_ceiling.unwrap_or(2.0 * rho_star);
    if !(ceiling > 0.0) {
        return Err(Error::param("rho ceiling must be positive"));
    }
    let space = AffineSpace::new(leader, g)?;
    let a = leader.a();
    let tol = 1e-9 * (1.0 + a.norm());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut attempt = |rho: f64, warm: &DVector<f64>| -> Option<DVector<f64>> {
        let problem = Problem { a, space: &space, rho, eps: opts.eps };
        let mut c = warm.clone();
        if problem.seek(&mut c, opts.max_iters, tol) {
            return Some(c);
        }
        let mut c = DVector::zeros(space.dim());
        if problem.seek(&mut c, opts.max_iters, tol) {
            return Some(c);
        }
        for _ in 0..2 {
            let spread = 1.0 + warm.amax();
            let mut c = DVector::from_fn(space.dim(), |i, _| warm[i] + spread * rng.random_range(-1.0..1.0));
            if problem.seek(&mut c, opts.max_iters, tol) {
                return Some(c);
            }
        }
        None
    };

    let zero = DVector::zeros(space.dim());
    let (mut lo, mut best) = match attempt(ceiling, &zero) {
        Some(c) => (ceiling, c),
        None => {
            let mut rho = 0.5 * ceiling;
            let mut warm = zero.clone();
            loop {
                if let Some(c) = attempt(rho, &warm) {
                    break (rho, c);
                }
                rho *= 0.5;
                if rho < 1e-4 * ceiling {
                    return Err(Error::Infeasible(format!(
                        "no certificate found for any rho down to {rho:.3e}"
                    )));
                }
                warm = zero.clone();
            }
        }
    };
    let mut hi = if lo == ceiling { ceiling } else { 2.0 * lo };
    while hi - lo > opts.rel_tol * ceiling {
        let mid = 0.5 * (lo + hi);
        match attempt(mid, &best) {
            Some(c) => {
                lo = mid;
                best = c;
            }
            None => hi = mid,
        }
    }

    let h = space.h(best.as_slice());
    let cert = PassivityCertificate::evaluate(leader, g, h, lo)?;
    if !cert.is_valid(1e-8) || !is_spd(&cert.h) {
        return Err(Error::Infeasible(format!(
            "certificate failed re-verification: margin {:.3e}, lambda_min {:.3e}, constraint {:.3e}",
            cert.lyapunov_margin, cert.lambda_min, cert.constraint_norm
        )));
    }
    Ok(cert)
}
