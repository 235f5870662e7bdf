//! Secrecy rate, minimax objective and their gradients in the covariance.
//!
//! All rates are in nats.

use crate::error::{Error, Result};
use crate::model::{ChannelPair, CouplingMatrix, TransmitCovariance};
use crate::numerics::{hermitian_part, identity, inv_hpd, logdet_hpd, CMat};

/// `ln|I + h x h^H|`, evaluated on the smaller of the two Sylvester forms.
///
/// Fails when `x` is indefinite enough to make the operand singular, which
/// can happen at extrapolated points outside the PSD cone.
pub fn try_log_det_gain(h: &CMat, x: &CMat) -> Result<f64> {
    let (m, n) = (h.nrows(), h.ncols());
    if m <= n {
        logdet_hpd(&(identity(m) + h * x * h.adjoint()))
    } else {
        // det(I + x h^H h) equals det(I + h x h^H); real positive when x >= 0
        let det = (identity(n) + x * (h.adjoint() * h)).lu().determinant();
        if det.re > 0.0 && det.re.is_finite() {
            Ok(det.re.ln())
        } else {
            Err(Error::NotPositiveDefinite("log-determinant operand"))
        }
    }
}

pub fn log_det_gain(h: &CMat, x: &CMat) -> f64 {
    try_log_det_gain(h, x).expect("I + h x h^H is positive definite for PSD x")
}

/// `f_b(x) = ln|I + h_b x h_b^H|`.
pub fn f_b(ch: &ChannelPair, x: &TransmitCovariance) -> f64 {
    log_det_gain(ch.h_b(), x.matrix())
}

/// `f_e(x) = ln|I + h_e x h_e^H|`.
pub fn f_e(ch: &ChannelPair, x: &TransmitCovariance) -> f64 {
    log_det_gain(ch.h_e(), x.matrix())
}

/// `f_b(x) - f_e(x)` without the clamp at zero.
pub fn rate_difference(ch: &ChannelPair, x: &TransmitCovariance) -> f64 {
    f_b(ch, x) - f_e(ch, x)
}

/// Achievable secrecy rate `[f_b(x) - f_e(x)]_+`.
pub fn secrecy_rate(ch: &ChannelPair, x: &TransmitCovariance) -> f64 {
    rate_difference(ch, x).max(0.0)
}

/// `ln|Q| = ln|I - q_bar q_bar^H|` by the Schur complement.
pub fn log_det_coupling(q: &CouplingMatrix) -> Result<f64> {
    check_strict(q)?;
    let qb = q.q_bar();
    logdet_hpd(&(identity(q.n_r()) - qb * qb.adjoint()))
        .map_err(|_| Error::SingularCoupling(q.sigma_max()))
}

fn check_strict(q: &CouplingMatrix) -> Result<()> {
    if q.is_strictly_feasible() {
        Ok(())
    } else {
        Err(Error::SingularCoupling(q.sigma_max()))
    }
}

fn check_dims(ch: &ChannelPair, q: &CouplingMatrix) -> Result<()> {
    if q.n_r() != ch.n_r() || q.n_e() != ch.n_e() {
        return Err(Error::DimensionMismatch(format!(
            "coupling block is {}x{} but channel has n_r={}, n_e={}",
            q.n_r(),
            q.n_e(),
            ch.n_r(),
            ch.n_e()
        )));
    }
    Ok(())
}

/// Minimax objective `f(Q, X) = ln|Q + H X H^H| - ln|Q| - ln|I + h_e X h_e^H|`
/// with `H = [h_b; h_e]`. Equal to `ln|I + Q^{-1} H X H^H| - f_e(X)`.
pub fn minimax_objective(
    ch: &ChannelPair,
    q: &CouplingMatrix,
    x: &TransmitCovariance,
) -> Result<f64> {
    check_dims(ch, q)?;
    let log_q = log_det_coupling(q)?;
    let h = ch.stacked();
    let joint = q.full() + &h * x.matrix() * h.adjoint();
    let log_joint = logdet_hpd(&joint)?;
    Ok(log_joint - log_q - try_log_det_gain(ch.h_e(), x.matrix())?)
}

/// `h^H (I + h x h^H)^{-1} h`.
fn log_gain_gradient(h: &CMat, x: &CMat) -> Result<CMat> {
    let inv = inv_hpd(&(identity(h.nrows()) + h * x * h.adjoint()))?;
    Ok(hermitian_part(&(h.adjoint() * inv * h)))
}

/// Gradient of `f_e`: `h_e^H (I + h_e x h_e^H)^{-1} h_e`.
pub fn grad_fe(ch: &ChannelPair, x: &TransmitCovariance) -> CMat {
    log_gain_gradient(ch.h_e(), x.matrix()).expect("I + h_e x h_e^H is positive definite for PSD x")
}

/// Gradient in `X` of the minimax objective:
/// `H^H (Q + H X H^H)^{-1} H - h_e^H (I + h_e X h_e^H)^{-1} h_e`.
pub fn grad_f_x(ch: &ChannelPair, q: &CouplingMatrix, x: &TransmitCovariance) -> Result<CMat> {
    check_dims(ch, q)?;
    check_strict(q)?;
    let h = ch.stacked();
    let joint = q.full() + &h * x.matrix() * h.adjoint();
    let inv = inv_hpd(&joint)?;
    let g = h.adjoint() * inv * &h - log_gain_gradient(ch.h_e(), x.matrix())?;
    Ok(hermitian_part(&g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PowerBudget;
    use crate::numerics::testutil::Gen;
    use crate::numerics::{frobenius, hermitian_evd, inner_re};
    use num_complex::Complex64;

    fn random_channel(g: &mut Gen, nt: usize, nr: usize, ne: usize) -> ChannelPair {
        ChannelPair::new(g.cmat(nr, nt), g.cmat(ne, nt)).unwrap()
    }

    fn random_cov(g: &mut Gen, n: usize, p0: f64) -> TransmitCovariance {
        let a = g.cmat(n, n);
        let x = &a * a.adjoint();
        let tr = crate::numerics::trace_re(&x);
        TransmitCovariance::new(x.scale(p0 / tr)).unwrap()
    }

    fn random_coupling(g: &mut Gen, nr: usize, ne: usize) -> CouplingMatrix {
        let q = CouplingMatrix::new(g.cmat(nr, ne));
        let s = q.sigma_max();
        CouplingMatrix::new(q.q_bar().scale(0.8 * g.uniform() / s))
    }

    #[test]
    fn secrecy_rate_examples() {
        let mut g = Gen::new(2);
        let ch = random_channel(&mut g, 3, 2, 2);
        assert_eq!(secrecy_rate(&ch, &TransmitCovariance::zeros(3)), 0.0);

        let one = CMat::from_element(1, 1, Complex64::new(1.0, 0.0));
        let zero = CMat::zeros(1, 1);
        let ch = ChannelPair::new(one.clone(), zero).unwrap();
        let x = TransmitCovariance::new(one.clone()).unwrap();
        assert!((secrecy_rate(&ch, &x) - std::f64::consts::LN_2).abs() < 1e-15);

        let h = g.cmat(2, 3);
        let ch = ChannelPair::new(h.clone(), h).unwrap();
        assert_eq!(secrecy_rate(&ch, &random_cov(&mut g, 3, 5.0)), 0.0);
    }

    #[test]
    fn sylvester_forms_agree() {
        let mut g = Gen::new(4);
        for (m, n) in [(2, 4), (4, 2), (3, 3)] {
            let h = g.cmat(m, n);
            let x = random_cov(&mut g, n, 3.0);
            let direct =
                logdet_hpd(&(identity(m) + &h * x.matrix() * h.adjoint())).unwrap();
            assert!((log_det_gain(&h, x.matrix()) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn secrecy_rate_unitary_invariance() {
        let mut g = Gen::new(8);
        for _ in 0..20 {
            let ch = random_channel(&mut g, 3, 3, 2);
            let x = random_cov(&mut g, 3, 4.0);
            let u = hermitian_evd(&g.hermitian(3)).unwrap().u;
            let ch_u = ChannelPair::new(ch.h_b() * &u, ch.h_e() * &u).unwrap();
            let x_u = TransmitCovariance::new(u.adjoint() * x.matrix() * &u).unwrap();
            let (a, b) = (rate_difference(&ch, &x), rate_difference(&ch_u, &x_u));
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn minimax_examples() {
        let mut g = Gen::new(6);
        let ch = random_channel(&mut g, 4, 3, 2);
        let q = random_coupling(&mut g, 3, 2);
        let v = minimax_objective(&ch, &q, &TransmitCovariance::zeros(4)).unwrap();
        assert!(v.abs() < 1e-12);

        let x = random_cov(&mut g, 4, 10.0);
        let eye = CouplingMatrix::identity(3, 2);
        let h = ch.stacked();
        let expected = log_det_gain(&h, x.matrix()) - f_e(&ch, &x);
        assert!((minimax_objective(&ch, &eye, &x).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn minimax_matches_explicit_inverse_formula() {
        let mut g = Gen::new(7);
        for _ in 0..50 {
            let ch = random_channel(&mut g, 3, 2, 3);
            let q = random_coupling(&mut g, 2, 3);
            let x = random_cov(&mut g, 3, 5.0);
            let h = ch.stacked();
            let qinv = q.full().try_inverse().unwrap();
            let m = identity(5) + qinv * &h * x.matrix() * h.adjoint();
            let det = m.lu().determinant();
            let oracle = det.re.ln() - f_e(&ch, &x);
            let got = minimax_objective(&ch, &q, &x).unwrap();
            assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
        }
    }

    #[test]
    fn minimax_rejects_singular_coupling() {
        let mut g = Gen::new(1);
        let ch = random_channel(&mut g, 2, 1, 1);
        let q = CouplingMatrix::new(CMat::from_element(1, 1, Complex64::new(1.0, 0.0)));
        let x = TransmitCovariance::isotropic(2, PowerBudget::new(1.0).unwrap());
        assert!(matches!(
            minimax_objective(&ch, &q, &x),
            Err(Error::SingularCoupling(_))
        ));
        assert!(grad_f_x(&ch, &q, &x).is_err());
    }

    #[test]
    fn grad_fe_examples() {
        let mut g = Gen::new(10);
        let ch = random_channel(&mut g, 3, 2, 2);
        let g0 = grad_fe(&ch, &TransmitCovariance::zeros(3));
        assert!(frobenius(&(g0 - ch.h_e().adjoint() * ch.h_e())) < 1e-12);

        let ch = ChannelPair::new(g.cmat(2, 3), CMat::zeros(2, 3)).unwrap();
        let x = random_cov(&mut g, 3, 2.0);
        assert!(frobenius(&grad_fe(&ch, &x)) == 0.0);
    }

    #[test]
    fn grad_fe_is_psd() {
        let mut g = Gen::new(12);
        for _ in 0..30 {
            let ch = random_channel(&mut g, 4, 2, 3);
            let x = random_cov(&mut g, 4, 10.0);
            assert!(hermitian_evd(&grad_fe(&ch, &x)).unwrap().min() >= -1e-10);
        }
    }

    #[test]
    fn grad_fe_directional_derivative() {
        let mut g = Gen::new(13);
        let t = 1e-6;
        for _ in 0..20 {
            let ch = random_channel(&mut g, 3, 2, 3);
            let x = random_cov(&mut g, 3, 4.0);
            let d = g.hermitian(3);
            let xt = TransmitCovariance::from_raw(x.matrix() + d.scale(t));
            let fd = (f_e(&ch, &xt) - f_e(&ch, &x)) / t;
            let an = inner_re(&grad_fe(&ch, &x), &d);
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "{fd} vs {an}");
        }
    }

    #[test]
    fn grad_f_x_examples() {
        let mut g = Gen::new(14);
        let ch = random_channel(&mut g, 3, 2, 2);
        let eye = CouplingMatrix::identity(2, 2);
        let g0 = grad_f_x(&ch, &eye, &TransmitCovariance::zeros(3)).unwrap();
        assert!(frobenius(&(g0 - ch.h_b().adjoint() * ch.h_b())) < 1e-12);

        let q = random_coupling(&mut g, 2, 2);
        let x = random_cov(&mut g, 3, 3.0);
        let gq = grad_f_x(&ch, &q, &x).unwrap();
        assert!(frobenius(&(&gq - gq.adjoint())) <= 1e-12);
    }
}
