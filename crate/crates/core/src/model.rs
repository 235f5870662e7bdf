//! Domain types shared by every solver: the channel pair, the power budget,
//! transmit covariances, the coupling matrix of the minimax problem, and
//! solver configuration/results.

use nalgebra::SVD;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, frobenius, hermitian_evd, trace_re, CMat};

/// Main channel `h_b` (Alice to Bob, `n_r x n_t`) and eavesdropper channel
/// `h_e` (Alice to Eve, `n_e x n_t`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    h_b: CMat,
    h_e: CMat,
}

impl ChannelPair {
    pub fn new(h_b: CMat, h_e: CMat) -> Result<Self> {
        if h_b.ncols() != h_e.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "h_b has {} columns but h_e has {}",
                h_b.ncols(),
                h_e.ncols()
            )));
        }
        if h_b.ncols() == 0 || h_b.nrows() == 0 || h_e.nrows() == 0 {
            return Err(Error::DimensionMismatch(
                "channel matrices must be non-empty".into(),
            ));
        }
        if !h_b.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("h_b"));
        }
        if !h_e.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("h_e"));
        }
        Ok(ChannelPair { h_b, h_e })
    }

    pub fn h_b(&self) -> &CMat {
        &self.h_b
    }

    pub fn h_e(&self) -> &CMat {
        &self.h_e
    }

    /// Transmit antennas (Alice).
    pub fn n_t(&self) -> usize {
        self.h_b.ncols()
    }

    /// Receive antennas at Bob.
    pub fn n_r(&self) -> usize {
        self.h_b.nrows()
    }

    /// Receive antennas at Eve.
    pub fn n_e(&self) -> usize {
        self.h_e.nrows()
    }

    /// `[h_b; h_e]`, `(n_r + n_e) x n_t`.
    pub fn stacked(&self) -> CMat {
        let (nr, ne, nt) = (self.n_r(), self.n_e(), self.n_t());
        let mut h = CMat::zeros(nr + ne, nt);
        h.rows_mut(0, nr).copy_from(&self.h_b);
        h.rows_mut(nr, ne).copy_from(&self.h_e);
        h
    }

    /// True when `h_b^H h_b - h_e^H h_e` is positive semidefinite, i.e. the
    /// eavesdropper sees a degraded version of Bob's signal.
    pub fn is_degraded(&self) -> bool {
        let gb = self.h_b.adjoint() * &self.h_b;
        let ge = self.h_e.adjoint() * &self.h_e;
        let scale = 1.0 + frobenius(&gb);
        match hermitian_evd(&(gb - ge)) {
            Ok(evd) => evd.min() >= -1e-9 * scale,
            Err(_) => false,
        }
    }

    pub fn to_json_value(&self) -> ChannelJson {
        ChannelJson::from(self)
    }
}

/// JSON layout of a channel pair: real and imaginary parts as row-major
/// nested arrays.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChannelJson {
    pub n_t: usize,
    pub n_r: usize,
    pub n_e: usize,
    pub h_b_re: Vec<Vec<f64>>,
    pub h_b_im: Vec<Vec<f64>>,
    pub h_e_re: Vec<Vec<f64>>,
    pub h_e_im: Vec<Vec<f64>>,
}

fn split_rows(m: &CMat) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let re = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect())
        .collect();
    let im = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect())
        .collect();
    (re, im)
}

fn join_rows(re: &[Vec<f64>], im: &[Vec<f64>], what: &str) -> Result<CMat> {
    let rows = re.len();
    let cols = re.first().map_or(0, Vec::len);
    if im.len() != rows
        || re.iter().any(|r| r.len() != cols)
        || im.iter().any(|r| r.len() != cols)
    {
        return Err(Error::DimensionMismatch(format!(
            "{what}: real and imaginary parts must be equal-sized rectangular arrays"
        )));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| {
        Complex64::new(re[i][j], im[i][j])
    }))
}

impl From<&ChannelPair> for ChannelJson {
    fn from(ch: &ChannelPair) -> Self {
        let (h_b_re, h_b_im) = split_rows(&ch.h_b);
        let (h_e_re, h_e_im) = split_rows(&ch.h_e);
        ChannelJson {
            n_t: ch.n_t(),
            n_r: ch.n_r(),
            n_e: ch.n_e(),
            h_b_re,
            h_b_im,
            h_e_re,
            h_e_im,
        }
    }
}

impl TryFrom<ChannelJson> for ChannelPair {
    type Error = Error;

    fn try_from(js: ChannelJson) -> Result<Self> {
        let h_b = join_rows(&js.h_b_re, &js.h_b_im, "h_b")?;
        let h_e = join_rows(&js.h_e_re, &js.h_e_im, "h_e")?;
        let ch = ChannelPair::new(h_b, h_e)?;
        if (ch.n_t(), ch.n_r(), ch.n_e()) != (js.n_t, js.n_r, js.n_e) {
            return Err(Error::DimensionMismatch(format!(
                "declared (n_t, n_r, n_e) = ({}, {}, {}) but matrices imply ({}, {}, {})",
                js.n_t,
                js.n_r,
                js.n_e,
                ch.n_t(),
                ch.n_r(),
                ch.n_e()
            )));
        }
        Ok(ch)
    }
}

impl Serialize for ChannelPair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChannelPair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let js = ChannelJson::deserialize(d)?;
        ChannelPair::try_from(js).map_err(serde::de::Error::custom)
    }
}

/// Total transmit power. With unit noise this is also the SNR.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PowerBudget(f64);

impl PowerBudget {
    pub fn new(p0: f64) -> Result<Self> {
        if !(p0.is_finite() && p0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "power budget must be positive and finite, got {p0}"
            )));
        }
        Ok(PowerBudget(p0))
    }

    pub fn from_snr_db(db: f64) -> Result<Self> {
        Self::new(10f64.powf(db / 10.0))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Hermitian PSD transmit covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitCovariance(CMat);

impl TransmitCovariance {
    /// Wraps `x` after checking the Hermitian and PSD invariants.
    pub fn new(x: CMat) -> Result<Self> {
        if !x.is_square() {
            return Err(Error::DimensionMismatch("covariance must be square".into()));
        }
        let cov = TransmitCovariance(x);
        if !cov.is_hermitian() {
            return Err(Error::InvalidParameter("covariance is not Hermitian".into()));
        }
        if !cov.is_psd() {
            return Err(Error::InvalidParameter(
                "covariance is not positive semidefinite".into(),
            ));
        }
        Ok(cov)
    }

    /// For matrices the solvers construct and have already symmetrized.
    pub(crate) fn from_raw(x: CMat) -> Self {
        TransmitCovariance(x)
    }

    pub fn isotropic(n_t: usize, p0: PowerBudget) -> Self {
        TransmitCovariance(numerics::identity(n_t).scale(p0.get() / n_t as f64))
    }

    pub fn zeros(n_t: usize) -> Self {
        TransmitCovariance(CMat::zeros(n_t, n_t))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.0)
    }

    pub fn is_hermitian(&self) -> bool {
        frobenius(&(&self.0 - self.0.adjoint())) <= 1e-10 * (1.0 + frobenius(&self.0))
    }

    pub fn is_psd(&self) -> bool {
        match hermitian_evd(&self.0) {
            Ok(evd) => evd.min() >= -1e-9 * (1.0 + evd.max().max(0.0)),
            Err(_) => false,
        }
    }

    /// Full type invariant for budget `p0`: Hermitian, PSD, trace in
    /// `[0, p0 (1 + 1e-9)]`.
    pub fn satisfies_invariants(&self, p0: PowerBudget) -> bool {
        let tr = self.trace();
        self.is_hermitian() && self.is_psd() && tr >= -1e-12 && tr <= p0.get() * (1.0 + 1e-9)
    }

    /// Membership in the equality set `{X >= 0, tr X = p0}`.
    pub fn in_feasible_set(&self, p0: PowerBudget) -> bool {
        self.is_hermitian()
            && self.is_psd()
            && (self.trace() - p0.get()).abs() <= 1e-8 * p0.get()
    }
}

/// Off-diagonal block `q_bar` (`n_r x n_e`) of the coupling matrix
/// `Q = [I, q_bar; q_bar^H, I]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    q_bar: CMat,
}

impl CouplingMatrix {
    pub fn new(q_bar: CMat) -> Self {
        CouplingMatrix { q_bar }
    }

    /// `Q = I`.
    pub fn identity(n_r: usize, n_e: usize) -> Self {
        CouplingMatrix {
            q_bar: CMat::zeros(n_r, n_e),
        }
    }

    pub fn q_bar(&self) -> &CMat {
        &self.q_bar
    }

    pub fn n_r(&self) -> usize {
        self.q_bar.nrows()
    }

    pub fn n_e(&self) -> usize {
        self.q_bar.ncols()
    }

    pub fn full(&self) -> CMat {
        let (nr, ne) = (self.n_r(), self.n_e());
        let mut q = numerics::identity(nr + ne);
        q.view_mut((0, nr), (nr, ne)).copy_from(&self.q_bar);
        q.view_mut((nr, 0), (ne, nr)).copy_from(&self.q_bar.adjoint());
        q
    }

    pub fn sigma_max(&self) -> f64 {
        if self.q_bar.is_empty() {
            return 0.0;
        }
        SVD::new(self.q_bar.clone(), false, false)
            .singular_values
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    /// `Q >= 0`, decided from the singular values of the off-diagonal block.
    pub fn is_psd(&self) -> bool {
        self.sigma_max() <= 1.0 + 1e-9
    }

    /// `Q > 0` with margin, as required to evaluate the minimax objective.
    pub fn is_strictly_feasible(&self) -> bool {
        self.sigma_max() < 1.0 - 1e-12
    }
}

/// Tuning knobs shared by both solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Monitor depth of the accelerated DC method; 0 disables extrapolation.
    pub q_memory: usize,
    pub max_outer_iters: usize,
    /// Stop after this many consecutive outer iterations without improvement.
    pub stall_window: usize,
    /// Minimum change in the tracked objective that counts as improvement.
    pub rate_tol: f64,
    /// Relative tolerance of inner loops (projected gradient, power bisection).
    pub inner_tol: f64,
    /// Initial backtracking parameter of the projected gradient method.
    pub eta0: f64,
    /// Backtracking growth factor.
    pub theta: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            q_memory: 5,
            max_outer_iters: 1000,
            stall_window: 5,
            rate_tol: 1e-9,
            inner_tol: 1e-12,
            eta0: 1.0,
            theta: 2.0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !(self.rate_tol > 0.0 && self.inner_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.eta0 > 0.0) {
            return bad("eta0 must be positive");
        }
        if !(self.theta > 1.0) {
            return bad("theta must exceed 1");
        }
        if self.stall_window == 0 {
            return bad("stall_window must be at least 1");
        }
        if self.max_outer_iters == 0 {
            return bad("max_outer_iters must be at least 1");
        }
        Ok(())
    }
}

/// One outer iteration of a solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// Objective the solver tracks: the unclamped DC value for the
    /// DC method, `f(Q_n, X_n)` for the best-response method.
    pub objective: f64,
    pub secrecy_rate: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record; iteration indices must increase strictly and
    /// elapsed time must not go backwards.
    pub fn push(&mut self, rec: TraceRecord) {
        if let Some(last) = self.records.last() {
            assert!(rec.iter > last.iter, "trace iterations must increase");
            assert!(rec.elapsed_ms >= last.elapsed_ms, "trace time went backwards");
        }
        self.records.push(rec);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub x_opt: TransmitCovariance,
    /// Nats per channel use.
    pub secrecy_rate: f64,
    /// `f(Q_n, X_n)` at termination; best-response method only.
    pub minimax_value: Option<f64>,
    pub iterations: usize,
    pub trace: ConvergenceTrace,
    pub wall_time: f64,
}
