//! Kronecker-correlated random channel pairs.
//!
//! `h_b = G_b R_b^{1/2}` and `h_e = gamma G_e R_e^{1/2}`, where the `G` have
//! i.i.d. circularly-symmetric complex Gaussian entries of unit variance and
//! `R` follows the exponential correlation model.
//!
//! Reproducibility: the generator is ChaCha8 seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`. Uniforms take the top 53 bits of each
//! `u64` output; Gaussians come from the Box-Muller transform, one complex
//! entry per pair of uniforms. Entries of `G_b` are drawn in row-major order,
//! followed by `G_e`.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ChannelPair;
use crate::numerics::{sqrt_psd, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KroneckerParams {
    /// Correlation magnitude in `[0, 1]`.
    pub r: f64,
    pub phi_b: f64,
    pub phi_e: f64,
    /// Eavesdropper channel strength relative to the main channel.
    pub gamma: f64,
}

impl Default for KroneckerParams {
    fn default() -> Self {
        KroneckerParams {
            r: 0.9,
            phi_b: 0.0,
            phi_e: FRAC_PI_2,
            gamma: 0.9,
        }
    }
}

impl KroneckerParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.r) {
            return Err(Error::InvalidParameter(format!(
                "correlation magnitude must lie in [0, 1], got {}",
                self.r
            )));
        }
        for (name, phi) in [("phi_b", self.phi_b), ("phi_e", self.phi_e)] {
            if !(0.0..TAU).contains(&phi) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0, 2pi), got {phi}"
                )));
            }
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be non-negative, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Exponential correlation matrix: `R[i][j] = (r e^{j phi})^(j - i)` above the
/// diagonal, Hermitian completion below.
pub fn exp_correlation(n: usize, r: f64, phi: f64) -> Result<CMat> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!(
            "correlation magnitude must lie in [0, 1], got {r}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("correlation size must be positive".into()));
    }
    let base = Complex64::from_polar(r, phi);
    let mut m = CMat::identity(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = base.powu((j - i) as u32);
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
    Ok(m)
}

/// Deterministic source of standard complex Gaussians.
pub struct GaussianSource {
    rng: ChaCha8Rng,
}

impl GaussianSource {
    pub fn new(seed: u64) -> Self {
        GaussianSource {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Circularly-symmetric complex Gaussian, `E|z|^2 = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let radius = (-u1.ln()).sqrt(); // sqrt(-2 ln u1) * sqrt(1/2)
        Complex64::from_polar(radius, TAU * u2)
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> CMat {
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = self.complex_normal();
            }
        }
        m
    }
}

/// Draws one channel pair of shape `(n_t, n_r, n_e)`.
pub fn sample_channels(
    dims: (usize, usize, usize),
    params: &KroneckerParams,
    seed: u64,
) -> Result<ChannelPair> {
    params.validate()?;
    let (nt, nr, ne) = dims;
    if nt == 0 || nr == 0 || ne == 0 {
        return Err(Error::InvalidParameter(format!(
            "antenna counts must be positive, got {dims:?}"
        )));
    }
    let root_b = sqrt_psd(&exp_correlation(nt, params.r, params.phi_b)?)?;
    let root_e = sqrt_psd(&exp_correlation(nt, params.r, params.phi_e)?)?;

    let mut src = GaussianSource::new(seed);
    let g_b = src.matrix(nr, nt);
    let g_e = src.matrix(ne, nt);

    let h_b = g_b * root_b;
    let h_e = (g_e * root_e).scale(params.gamma);
    ChannelPair::new(h_b, h_e)
}

/// Seed of Monte-Carlo trial `trial` under base seed `seed`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    seed ^ trial
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{frobenius, hermitian_evd};

    #[test]
    fn exp_correlation_examples() {
        let r = exp_correlation(3, 0.0, 1.3).unwrap();
        assert_eq!(r, CMat::identity(3, 3));

        let r = exp_correlation(2, 0.9, 0.0).unwrap();
        let expected = CMat::from_row_slice(
            2,
            2,
            &[1.0, 0.9, 0.9, 1.0].map(|v| Complex64::new(v, 0.0)),
        );
        assert!(frobenius(&(r - expected)) < 1e-15);

        let r = exp_correlation(4, 0.9, FRAC_PI_2).unwrap();
        assert!(hermitian_evd(&r).unwrap().min() >= 0.0);
        assert!(exp_correlation(2, 1.5, 0.0).is_err());
        assert!(exp_correlation(2, -0.1, 0.0).is_err());
    }

    #[test]
    fn exp_correlation_is_exactly_hermitian_with_unit_diagonal() {
        for n in 1..7 {
            for &(r, phi) in &[(0.3, 0.4), (0.9, FRAC_PI_2), (1.0, 5.0)] {
                let m = exp_correlation(n, r, phi).unwrap();
                assert_eq!(m, m.adjoint());
                assert!(m.diagonal().iter().all(|z| *z == Complex64::new(1.0, 0.0)));
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = KroneckerParams::default();
        let a = sample_channels((4, 3, 4), &p, 42).unwrap();
        let b = sample_channels((4, 3, 4), &p, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_channels((4, 3, 4), &p, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_gamma_silences_eve() {
        let p = KroneckerParams { gamma: 0.0, ..Default::default() };
        let ch = sample_channels((3, 2, 2), &p, 1).unwrap();
        assert!(ch.h_e().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn fully_correlated_channel_is_valid() {
        let p = KroneckerParams { r: 1.0, ..Default::default() };
        let ch = sample_channels((4, 2, 2), &p, 9).unwrap();
        assert!(ch.h_b().iter().all(|z| z.re.is_finite()));
    }

    #[test]
    fn uncorrelated_second_moment() {
        // E[h_b^H h_b] / n_r = R_b = I for r = 0
        let p = KroneckerParams { r: 0.0, ..Default::default() };
        let trials = 100_000;
        let mut acc = CMat::zeros(2, 2);
        for t in 0..trials {
            let ch = sample_channels((2, 1, 1), &p, trial_seed(77, t)).unwrap();
            acc += ch.h_b().adjoint() * ch.h_b();
        }
        let mean = acc.scale(1.0 / trials as f64);
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((mean[(i, j)] - Complex64::new(target, 0.0)).norm() < 0.02);
            }
        }
    }

    #[test]
    fn eve_entry_variance_is_unit() {
        let p = KroneckerParams { r: 0.0, gamma: 1.0, ..Default::default() };
        let n = 100_000usize;
        let samples: Vec<f64> = (0..n as u64)
            .map(|t| sample_channels((1, 1, 1), &p, trial_seed(5, t)).unwrap().h_e()[(0, 0)].norm_sqr())
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var_of_sq = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let stderr = (var_of_sq / n as f64).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * stderr, "mean {mean}, stderr {stderr}");
    }
}
