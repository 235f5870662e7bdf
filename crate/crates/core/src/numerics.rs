//! Small dense Hermitian kernel shared by both solvers.
//!
//! Everything here works on `DMatrix<Complex64>` of modest size (a few
//! antennas per terminal), so no attempt is made at blocking or sparsity.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

const EVD_EPS: f64 = 1e-15;
const EVD_MAX_SWEEPS: usize = 10_000;

/// Eigendecomposition `a = u * diag(lambda) * u^H` with eigenvalues sorted
/// in descending order (ties keep their original order).
#[derive(Debug, Clone)]
pub struct HermitianEvd {
    pub u: CMat,
    pub lambda: DVector<f64>,
}

impl HermitianEvd {
    /// Rebuilds `u * diag(f(lambda_i)) * u^H`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.lambda.len();
        let mut scaled = self.u.clone();
        for j in 0..n {
            let s = f(self.lambda[j]);
            scaled.column_mut(j).scale_mut(s);
        }
        hermitian_part(&(scaled * self.u.adjoint()))
    }

    pub fn reconstruct(&self) -> CMat {
        self.map(|l| l)
    }

    pub fn max(&self) -> f64 {
        self.lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.lambda.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `(a + a^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn trace_re(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// Real inner product `Re tr(a^H b)` on complex matrices.
pub fn inner_re(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Cholesky factorization that actually rejects indefinite input: the
/// complex square root never fails, so the pivots are checked here.
fn cholesky(a: &CMat, what: &'static str) -> Result<Cholesky<Complex64, Dyn>> {
    let chol = hermitian_part(a)
        .cholesky()
        .ok_or(Error::NotPositiveDefinite(what))?;
    let l = chol.l_dirty();
    let ok = (0..a.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re > 0.0 && d.re.is_finite() && d.im.abs() <= 1e-12 * d.re
    });
    if ok {
        Ok(chol)
    } else {
        Err(Error::NotPositiveDefinite(what))
    }
}

/// `ln|a|` for Hermitian positive-definite `a`, from the Cholesky factor.
pub fn logdet_hpd(a: &CMat) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "logdet of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let chol = cholesky(a, "log-determinant operand")?;
    let l = chol.l_dirty();
    Ok((0..a.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}

/// Inverse of a Hermitian positive-definite matrix, via Cholesky.
pub fn inv_hpd(a: &CMat) -> Result<CMat> {
    let chol = cholesky(a, "inverse operand")?;
    Ok(hermitian_part(&chol.inverse()))
}

pub fn hermitian_evd(a: &CMat) -> Result<HermitianEvd> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "EVD of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(HermitianEvd {
            u: CMat::zeros(0, 0),
            lambda: DVector::zeros(0),
        });
    }
    let sym = hermitian_part(a);
    let eig = SymmetricEigen::try_new(sym, EVD_EPS, EVD_MAX_SWEEPS)
        .ok_or(Error::EigenNonConvergence)?;

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort: ties stay in index order
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let mut u = CMat::zeros(n, n);
    let mut lambda = DVector::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &eig.eigenvectors.column(src));
        lambda[dst] = eig.eigenvalues[src];
    }
    Ok(HermitianEvd { u, lambda })
}

/// `a^{-1/2}` for Hermitian positive-definite `a`.
pub fn inv_sqrt_hpd(a: &CMat) -> Result<CMat> {
    let evd = hermitian_evd(a)?;
    let (lo, hi) = (evd.min(), evd.max());
    if !(hi > 0.0) || lo <= 1e-12 * hi {
        return Err(Error::NotPositiveDefinite("inverse square root operand"));
    }
    Ok(evd.map(|l| 1.0 / l.sqrt()))
}

/// `a^{1/2}` for Hermitian positive-semidefinite `a`; negative eigenvalues
/// from rounding are clamped to zero.
pub fn sqrt_psd(a: &CMat) -> Result<CMat> {
    Ok(hermitian_evd(a)?.map(|l| l.max(0.0).sqrt()))
}

/// Water level `tau` with `sum_i max(max(v_i, 0) - tau, 0) = budget`.
///
/// The left-hand side is piecewise linear and decreasing in `tau`, so the
/// root is found exactly by scanning the sorted breakpoints. `tau` is
/// negative when `budget` exceeds the sum of the positive parts.
pub fn water_level(v: &[f64], budget: f64) -> f64 {
    assert!(budget > 0.0, "water_level needs a positive budget");
    let mut clamped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    clamped.sort_by(|a, b| b.total_cmp(a));

    let mut prefix = 0.0;
    let mut tau = f64::NAN;
    for (k, &c) in clamped.iter().enumerate() {
        prefix += c;
        let candidate = (prefix - budget) / (k + 1) as f64;
        if c - candidate > 0.0 {
            tau = candidate;
        } else {
            break;
        }
    }
    if tau.is_nan() {
        // empty input
        return -budget;
    }
    tau
}
