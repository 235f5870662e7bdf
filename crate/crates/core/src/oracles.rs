//! Independent ground truth for testing the solvers: closed forms for a
//! single transmit antenna and for single-antenna receivers, and an
//! exhaustive sweep over two-antenna covariances.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ChannelPair, TransmitCovariance};
use crate::numerics::{hermitian_evd, identity, inv_sqrt_hpd, CMat};

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Capacity with one transmit antenna: the rate
/// `ln(1 + x |h_b|^2) - ln(1 + x |h_e|^2)` is monotone in `x`, so full power
/// is optimal exactly when Bob's gain is larger. Returns `(x_opt, capacity)`.
pub fn scalar_secrecy_capacity(h_b_col: &[Complex64], h_e_col: &[Complex64], p0: f64) -> (f64, f64) {
    let (gb, ge) = (norm_sqr(h_b_col), norm_sqr(h_e_col));
    if gb > ge {
        (p0, ((1.0 + p0 * gb) / (1.0 + p0 * ge)).ln())
    } else {
        (0.0, 0.0)
    }
}

/// Closed form for single-antenna Bob and Eve.
#[derive(Debug, Clone)]
pub struct MisoCapacity {
    pub capacity: f64,
    /// Rank-one beamforming covariance `p0 v v^H / |v|^2`.
    pub covariance: TransmitCovariance,
}

/// `ln` of the largest generalized eigenvalue of the pencil
/// `(I + p0 h_b^H h_b, I + p0 h_e^H h_e)`, clamped at zero.
pub fn miso_secrecy_capacity(h_b_row: &[Complex64], h_e_row: &[Complex64], p0: f64) -> Result<MisoCapacity> {
    let n = h_b_row.len();
    if h_e_row.len() != n || n == 0 {
        return Err(Error::DimensionMismatch("MISO rows must share a non-zero length".into()));
    }
    let hb = CMat::from_row_slice(1, n, h_b_row);
    let he = CMat::from_row_slice(1, n, h_e_row);
    let a = identity(n) + (hb.adjoint() * &hb).scale(p0);
    let b = identity(n) + (he.adjoint() * &he).scale(p0);
    let b_root = inv_sqrt_hpd(&b)?;
    let evd = hermitian_evd(&(&b_root * a * &b_root))?;
    let v = &b_root * evd.u.column(0);
    let vv = &v * v.adjoint();
    let scale = p0 / vv.diagonal().iter().map(|z| z.re).sum::<f64>();
    Ok(MisoCapacity {
        capacity: evd.lambda[0].max(1.0).ln(),
        covariance: TransmitCovariance::from_raw(vv.scale(scale)),
    })
}

/// `det(I + X G)` for 2x2 matrices given as `[a00, a01, a10, a11]`.
fn det_i_plus(x: &[Complex64; 4], g: &[Complex64; 4]) -> f64 {
    let m00 = x[0] * g[0] + x[1] * g[2];
    let m01 = x[0] * g[1] + x[1] * g[3];
    let m10 = x[2] * g[0] + x[3] * g[2];
    let m11 = x[2] * g[1] + x[3] * g[3];
    ((Complex64::new(1.0, 0.0) + m00) * (Complex64::new(1.0, 0.0) + m11) - m01 * m10).re
}

fn gram2(h: &CMat) -> [Complex64; 4] {
    let g = h.adjoint() * h;
    [g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]]
}

/// Point of the 2x2 trace-`p0` PSD set with Bloch radius `rho` and
/// direction `(theta, phi)`.
fn bloch(p0: f64, rho: f64, theta: f64, phi: f64) -> [Complex64; 4] {
    let (nx, ny, nz) = (theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
    let h = 0.5 * p0;
    [
        Complex64::new(h * (1.0 + rho * nz), 0.0),
        Complex64::new(h * rho * nx, -h * rho * ny),
        Complex64::new(h * rho * nx, h * rho * ny),
        Complex64::new(h * (1.0 - rho * nz), 0.0),
    ]
}

/// Additive-recurrence low-discrepancy point in `[0, 1)^3`.
fn r3(i: usize) -> [f64; 3] {
    // inverse powers of the plastic-number generalization for d = 3
    const G: f64 = 1.220_744_084_605_759_5;
    let a = [1.0 / G, 1.0 / (G * G), 1.0 / (G * G * G)];
    let k = i as f64 + 1.0;
    [(0.5 + a[0] * k).fract(), (0.5 + a[1] * k).fract(), (0.5 + a[2] * k).fract()]
}

/// Lower bound on the capacity by evaluating the secrecy rate on a
/// deterministic sweep of `{X >= 0, tr X = p0}` for at most two transmit
/// antennas.
///
/// Two thirds of the budget cover the set globally (rank-one boundary on a
/// Fibonacci sphere, interior by a low-discrepancy sequence); the rest zooms
/// in around the best point found.
pub fn brute_force_capacity(ch: &ChannelPair, p0: f64, samples: usize) -> Result<f64> {
    if samples < 10_000 {
        return Err(Error::InvalidParameter(format!(
            "brute force sweep needs at least 10^4 samples, got {samples}"
        )));
    }
    match ch.n_t() {
        1 => {
            let x = TransmitCovariance::from_raw(CMat::from_element(1, 1, Complex64::new(p0, 0.0)));
            Ok(crate::rates::secrecy_rate(ch, &x))
        }
        2 => Ok(sweep_two_antennas(ch, p0, samples)),
        n => Err(Error::DimensionMismatch(format!(
            "brute force sweep supports at most 2 transmit antennas, got {n}"
        ))),
    }
}

fn sweep_two_antennas(ch: &ChannelPair, p0: f64, samples: usize) -> f64 {
    let (gb, ge) = (gram2(ch.h_b()), gram2(ch.h_e()));
    let rate = |rho: f64, theta: f64, phi: f64| {
        let x = bloch(p0, rho, theta, phi);
        (det_i_plus(&x, &gb) / det_i_plus(&x, &ge)).ln()
    };

    let mut best = (f64::NEG_INFINITY, 0.0, 0.0, 0.0);
    let consider = |rho: f64, theta: f64, phi: f64, best: &mut (f64, f64, f64, f64)| {
        let r = rate(rho, theta, phi);
        if r > best.0 {
            *best = (r, rho, theta, phi);
        }
    };

    let global = 2 * samples / 3;
    let boundary = global / 2;
    let golden = PI * (3.0 - 5f64.sqrt());
    for i in 0..boundary {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / boundary as f64;
        let phi = (golden * i as f64).rem_euclid(TAU);
        consider(1.0, z.acos(), phi, &mut best);
    }
    for i in 0..global - boundary {
        let [u1, u2, u3] = r3(i);
        consider(u1.cbrt(), (1.0 - 2.0 * u2).acos(), TAU * u3, &mut best);
    }

    let rounds = 12;
    let per_round = (samples - global) / rounds;
    let (mut d_rho, mut d_ang) = (0.1, 0.2);
    for _ in 0..rounds {
        let (_, rho0, theta0, phi0) = best;
        for i in 0..per_round {
            let [u1, u2, u3] = r3(i);
            let rho = (rho0 + d_rho * (2.0 * u1 - 1.0)).clamp(0.0, 1.0);
            let theta = (theta0 + d_ang * (2.0 * u2 - 1.0)).clamp(0.0, PI);
            let phi = phi0 + d_ang * (2.0 * u3 - 1.0);
            consider(rho, theta, phi, &mut best);
        }
        d_rho *= 0.5;
        d_ang *= 0.5;
    }
    best.0.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::testutil::Gen;
    use crate::rates::secrecy_rate;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn scalar_examples() {
        let (x, cap) = scalar_secrecy_capacity(&[c(2.0)], &[c(1.0)], 1.0);
        assert_eq!(x, 1.0);
        assert!((cap - 2.5f64.ln()).abs() < 1e-15);
        assert_eq!(scalar_secrecy_capacity(&[c(1.0)], &[Complex64::new(0.0, 1.0)], 3.0), (0.0, 0.0));
        assert_eq!(scalar_secrecy_capacity(&[c(0.0)], &[c(0.3)], 3.0), (0.0, 0.0));
    }

    #[test]
    fn miso_examples() {
        let hb = [c(1.0), Complex64::new(0.5, -0.5)];
        let m = miso_secrecy_capacity(&hb, &[c(0.0), c(0.0)], 2.0).unwrap();
        assert!((m.capacity - (1.0 + 2.0 * 1.5f64).ln()).abs() < 1e-12);

        let he = [c(2.0), Complex64::new(1.0, -1.0)];
        let m = miso_secrecy_capacity(&hb, &he, 2.0).unwrap();
        assert!(m.capacity.abs() < 1e-12);
    }

    #[test]
    fn miso_beamformer_achieves_the_closed_form() {
        let mut g = Gen::new(41);
        for _ in 0..50 {
            let hb = g.cmat(1, 2);
            let he = g.cmat(1, 2);
            let p0 = 0.5 + 10.0 * g.uniform();
            let m = miso_secrecy_capacity(hb.as_slice(), he.as_slice(), p0).unwrap();
            let ch = ChannelPair::new(hb, he).unwrap();
            assert!((secrecy_rate(&ch, &m.covariance) - m.capacity).abs() < 1e-10);
            assert!((m.covariance.trace() - p0).abs() < 1e-12);
        }
    }

    #[test]
    fn brute_force_trivial_cases() {
        let mut g = Gen::new(42);
        let ch = ChannelPair::new(g.cmat(2, 1), g.cmat(2, 1)).unwrap();
        let col_b: Vec<_> = ch.h_b().iter().copied().collect();
        let col_e: Vec<_> = ch.h_e().iter().copied().collect();
        let (_, cap) = scalar_secrecy_capacity(&col_b, &col_e, 3.0);
        assert!((brute_force_capacity(&ch, 3.0, 10_000).unwrap() - cap).abs() < 1e-12);

        let h = g.cmat(2, 2);
        let ch = ChannelPair::new(h.clone(), h).unwrap();
        assert!(brute_force_capacity(&ch, 3.0, 10_000).unwrap().abs() < 1e-12);

        let ch = ChannelPair::new(g.cmat(2, 3), g.cmat(2, 3)).unwrap();
        assert!(brute_force_capacity(&ch, 3.0, 10_000).is_err());
        let ch = ChannelPair::new(g.cmat(2, 2), g.cmat(2, 2)).unwrap();
        assert!(brute_force_capacity(&ch, 3.0, 100).is_err());
    }

    #[test]
    fn bloch_points_are_feasible() {
        for &(rho, theta, phi) in &[(1.0, 0.3, 2.0), (0.0, 1.0, 1.0), (0.7, 3.0, 5.5)] {
            let x = bloch(2.5, rho, theta, phi);
            let m = CMat::from_row_slice(2, 2, &x);
            let cov = TransmitCovariance::new(m).unwrap();
            assert!((cov.trace() - 2.5).abs() < 1e-12);
        }
    }
}
