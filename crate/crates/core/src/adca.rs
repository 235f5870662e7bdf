//! Accelerated DC algorithm for the secrecy-rate maximization.
//!
//! The secrecy rate is `f_b - f_e`, a difference of concave functions of the
//! covariance. Each outer step linearizes `f_e` at the current anchor `W`
//! and maximizes `f_b(X) - tr(grad f_e(W) X)` over `{X >= 0, tr X = p0}`;
//! that subproblem has a water-filling solution once the trace constraint
//! is dualized, and the multiplier is found by bisection. Anchors come
//! from a Nesterov extrapolation that is accepted only when it beats the
//! worst of the last few iterates.

use std::collections::VecDeque;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{
    ChannelPair, ConvergenceTrace, PowerBudget, SolverConfig, SolverResult, TraceRecord,
    TransmitCovariance,
};
use crate::numerics::{hermitian_evd, hermitian_part, inv_sqrt_hpd, trace_re, CMat, HermitianEvd};
use crate::rates::{grad_fe, rate_difference, secrecy_rate, try_log_det_gain, f_b};

/// Smallest admissible eigenvalue of `Phi + mu I`, relative to `1 + ||Phi||`.
const RIDGE: f64 = 1e-10;
const MAX_DOUBLINGS: usize = 60;
const MAX_HALVINGS: usize = 200;

/// `X = B V diag([1 - 1/sigma_i]_+) V^H B`, where `B = phi_bar^{-1/2}` and
/// `B h_b^H h_b B = V diag(sigma) V^H`. Maximizes
/// `ln|I + h_b X h_b^H| - tr(phi_bar X)` over `X >= 0`.
pub fn waterfill_subproblem(ch: &ChannelPair, phi_bar: &CMat) -> Result<CMat> {
    if phi_bar.nrows() != ch.n_t() || phi_bar.ncols() != ch.n_t() {
        return Err(Error::DimensionMismatch(format!(
            "phi_bar must be {0}x{0}",
            ch.n_t()
        )));
    }
    let b = inv_sqrt_hpd(phi_bar)?;
    let gram = ch.h_b().adjoint() * ch.h_b();
    waterfill_with_root(&gram, &b)
}

fn waterfill_with_root(gram: &CMat, b: &CMat) -> Result<CMat> {
    let m = b * gram * b;
    let evd = hermitian_evd(&m)?;
    let inner = evd.map(|s| if s > 1.0 { 1.0 - 1.0 / s } else { 0.0 });
    Ok(hermitian_part(&(b * inner * b)))
}

/// Water-filling parametrized by the power multiplier, reusing one EVD of
/// `Phi` for every trial value of `mu`.
struct PowerSearch<'a> {
    gram: CMat,
    phi: &'a HermitianEvd,
}

impl PowerSearch<'_> {
    fn covariance(&self, mu: f64) -> Result<CMat> {
        let b = self.phi.map(|l| 1.0 / (l + mu).sqrt());
        waterfill_with_root(&self.gram, &b)
    }
}

/// Linearized objective `f_b(X) - tr(grad f_e(W) X)`.
pub fn surrogate_objective(ch: &ChannelPair, x: &TransmitCovariance, w: &TransmitCovariance) -> f64 {
    let phi = grad_fe(ch, w);
    f_b(ch, x) - crate::numerics::inner_re(&phi, x.matrix())
}

/// Solves the linearized subproblem around `w_prev` with `tr X = p0`.
///
/// The trace of the water-filling solution is continuous and non-increasing
/// in the multiplier `mu`, so `mu` is bisected on
/// `(-lambda_min(Phi), inf)` until the trace is within `tol * p0`; the
/// result is then rescaled onto the trace constraint exactly.
pub fn solve_subproblem(
    ch: &ChannelPair,
    w_prev: &TransmitCovariance,
    p0: PowerBudget,
    tol: f64,
) -> Result<TransmitCovariance> {
    let phi = grad_fe(ch, w_prev);
    solve_with_phi(ch, &phi, p0, tol)
}

pub(crate) fn solve_with_phi(
    ch: &ChannelPair,
    phi: &CMat,
    p0: PowerBudget,
    tol: f64,
) -> Result<TransmitCovariance> {
    let p0 = p0.get();
    let evd = hermitian_evd(phi)?;
    let search = PowerSearch {
        gram: ch.h_b().adjoint() * ch.h_b(),
        phi: &evd,
    };
    let trace_at = |mu: f64| -> Result<(f64, CMat)> {
        let x = search.covariance(mu)?;
        Ok((trace_re(&x), x))
    };

    let mu_floor = -evd.min() + RIDGE * (1.0 + evd.max().abs());
    let (tr_floor, x_floor) = trace_at(mu_floor)?;
    if tr_floor <= p0 {
        // Power cannot be absorbed by water-filling: the weakest eavesdropper
        // direction is invisible to Bob. Spend the remainder there.
        return Ok(top_up(x_floor, &evd, p0));
    }

    let mut lo = mu_floor;
    let mut hi = mu_floor.max(0.0) + 1.0;
    let mut step = 1.0;
    let mut found = false;
    for _ in 0..MAX_DOUBLINGS {
        if trace_at(hi)?.0 < p0 {
            found = true;
            break;
        }
        lo = hi;
        step *= 2.0;
        hi = mu_floor.max(0.0) + step;
    }
    if !found {
        return Err(Error::BracketNotFound(MAX_DOUBLINGS));
    }

    let mut best = x_floor;
    for _ in 0..MAX_HALVINGS {
        let mid = 0.5 * (lo + hi);
        let (tr, x) = trace_at(mid)?;
        best = x;
        if (tr - p0).abs() <= tol * p0 {
            break;
        }
        if tr > p0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
    }
    let tr = trace_re(&best);
    if tr > 0.0 {
        best.scale_mut(p0 / tr);
    }
    Ok(TransmitCovariance::from_raw(best))
}

fn top_up(mut x: CMat, phi: &HermitianEvd, p0: f64) -> TransmitCovariance {
    let n = phi.lambda.len();
    let missing = p0 - trace_re(&x);
    let u = phi.u.column(n - 1);
    x += (u * u.adjoint()).scale(missing);
    TransmitCovariance::from_raw(hermitian_part(&x))
}

/// Feasibility test applied to extrapolated points.
fn extrapolation_feasible(z: &CMat, p0: PowerBudget) -> bool {
    let evd = match hermitian_evd(z) {
        Ok(e) => e,
        Err(_) => return false,
    };
    evd.min() >= 0.0 && (trace_re(z) - p0.get()).abs() <= 1e-8 * p0.get()
}

/// Per-iteration bookkeeping of the accelerated DC method.
#[derive(Debug, Clone, PartialEq)]
pub struct AdcaStep {
    /// Unclamped rate difference at `X_n`.
    pub rate: f64,
    /// Minimum of the monitored rates (`+inf` when the monitor is off).
    pub gamma: f64,
    /// Rate difference at the extrapolated point, when it was evaluable.
    pub z_rate: Option<f64>,
    pub z_feasible: bool,
    /// Whether the next anchor `W_n` is the extrapolated point.
    pub extrapolated: bool,
    pub x: CMat,
}

/// Solver state: current/previous iterate, anchor, momentum and the window
/// of recent rates.
#[derive(Debug, Clone)]
pub struct AdcaState {
    pub x_curr: TransmitCovariance,
    pub x_prev: TransmitCovariance,
    pub w: TransmitCovariance,
    pub t_curr: f64,
    pub rate_history: VecDeque<f64>,
    q: usize,
}

impl AdcaState {
    pub fn new(x0: TransmitCovariance, initial_rate: f64, q: usize) -> Self {
        let mut rate_history = VecDeque::with_capacity(q + 1);
        rate_history.push_back(initial_rate);
        AdcaState {
            x_curr: x0.clone(),
            x_prev: x0.clone(),
            w: x0,
            t_curr: 0.5 * (1.0 + 5f64.sqrt()),
            rate_history,
            q,
        }
    }

    /// `min` over the last `q + 1` rates, or `+inf` when `q == 0` (plain DCA).
    pub fn gamma(&self) -> f64 {
        if self.q == 0 {
            return f64::INFINITY;
        }
        self.rate_history.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn record_rate(&mut self, rate: f64) {
        self.rate_history.push_back(rate);
        while self.rate_history.len() > self.q + 1 {
            self.rate_history.pop_front();
        }
    }

    /// Accepts a new iterate, advances the momentum and chooses the anchor.
    pub fn advance(&mut self, ch: &ChannelPair, x_new: TransmitCovariance, p0: PowerBudget) -> AdcaStep {
        self.x_prev = std::mem::replace(&mut self.x_curr, x_new);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * self.t_curr * self.t_curr).sqrt());
        let coef = (self.t_curr - 1.0) / t_next;
        self.t_curr = t_next;

        let rate = rate_difference(ch, &self.x_curr);
        self.record_rate(rate);
        let gamma = self.gamma();

        let mut z_rate = None;
        let mut z_feasible = false;
        let mut extrapolated = false;
        if self.q > 0 {
            let xc = self.x_curr.matrix();
            let z = hermitian_part(&(xc + (xc - self.x_prev.matrix()).scale(coef)));
            z_feasible = extrapolation_feasible(&z, p0);
            if z_feasible {
                let zr = try_log_det_gain(ch.h_b(), &z)
                    .and_then(|b| try_log_det_gain(ch.h_e(), &z).map(|e| b - e));
                if let Ok(zr) = zr {
                    z_rate = Some(zr);
                    if zr >= gamma {
                        extrapolated = true;
                        self.w = TransmitCovariance::from_raw(z);
                    }
                } else {
                    z_feasible = false;
                }
            }
        }
        if !extrapolated {
            self.w = self.x_curr.clone();
        }
        AdcaStep {
            rate,
            gamma,
            z_rate,
            z_feasible,
            extrapolated,
            x: self.x_curr.matrix().clone(),
        }
    }
}

/// Full run of the accelerated method with per-iteration diagnostics.
#[derive(Debug, Clone)]
pub struct AdcaRun {
    pub result: SolverResult,
    pub steps: Vec<AdcaStep>,
}

/// Tracks "no improvement over the last `window` iterations".
#[derive(Debug, Clone)]
pub(crate) struct StallMonitor {
    best: f64,
    stalls: usize,
    window: usize,
    tol: f64,
    maximize: bool,
}

impl StallMonitor {
    pub(crate) fn new(initial: f64, window: usize, tol: f64, maximize: bool) -> Self {
        StallMonitor { best: initial, stalls: 0, window, tol, maximize }
    }

    /// Feeds one value; returns `true` once the window has elapsed without
    /// an improvement larger than the tolerance.
    pub(crate) fn update(&mut self, value: f64) -> bool {
        let gain = if self.maximize { value - self.best } else { self.best - value };
        if gain > self.tol {
            self.stalls = 0;
        } else {
            self.stalls += 1;
        }
        if gain > 0.0 {
            self.best = value;
        }
        self.stalls >= self.window
    }
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn adca_solve(ch: &ChannelPair, p0: PowerBudget, cfg: &SolverConfig) -> Result<SolverResult> {
    adca_run(ch, p0, cfg).map(|run| run.result)
}

pub fn adca_run(ch: &ChannelPair, p0: PowerBudget, cfg: &SolverConfig) -> Result<AdcaRun> {
    cfg.validate()?;
    let start = Instant::now();
    let x0 = TransmitCovariance::isotropic(ch.n_t(), p0);
    let r0 = rate_difference(ch, &x0);
    let mut state = AdcaState::new(x0.clone(), r0, cfg.q_memory);
    let mut stall = StallMonitor::new(r0, cfg.stall_window, cfg.rate_tol, true);
    let (mut best_rate, mut best_x) = (r0, x0);

    let mut trace = ConvergenceTrace::new();
    let mut steps = Vec::new();
    for n in 1..=cfg.max_outer_iters {
        let x_new = solve_subproblem(ch, &state.w, p0, cfg.inner_tol)?;
        let step = state.advance(ch, x_new, p0);
        if step.rate > best_rate {
            best_rate = step.rate;
            best_x = state.x_curr.clone();
        }
        trace.push(TraceRecord {
            iter: n,
            objective: step.rate,
            secrecy_rate: step.rate.max(0.0),
            elapsed_ms: ms_since(start),
        });
        let done = stall.update(step.rate);
        steps.push(step);
        if done {
            break;
        }
    }
    let iterations = trace.len();
    Ok(AdcaRun {
        result: SolverResult {
            secrecy_rate: secrecy_rate(ch, &best_x),
            x_opt: best_x,
            minimax_value: None,
            iterations,
            trace,
            wall_time: start.elapsed().as_secs_f64(),
        },
        steps,
    })
}

/// Conventional DCA: the anchor is always the latest iterate. Returns the
/// iterate sequence alongside the result.
pub fn dca_solve(
    ch: &ChannelPair,
    p0: PowerBudget,
    cfg: &SolverConfig,
) -> Result<(SolverResult, Vec<TransmitCovariance>)> {
    cfg.validate()?;
    let start = Instant::now();
    let mut x = TransmitCovariance::isotropic(ch.n_t(), p0);
    let r0 = rate_difference(ch, &x);
    let mut stall = StallMonitor::new(r0, cfg.stall_window, cfg.rate_tol, true);
    let (mut best_rate, mut best_x) = (r0, x.clone());
    let mut trace = ConvergenceTrace::new();
    let mut iterates = Vec::new();
    for n in 1..=cfg.max_outer_iters {
        x = solve_subproblem(ch, &x, p0, cfg.inner_tol)?;
        let rate = rate_difference(ch, &x);
        if rate > best_rate {
            best_rate = rate;
            best_x = x.clone();
        }
        trace.push(TraceRecord {
            iter: n,
            objective: rate,
            secrecy_rate: rate.max(0.0),
            elapsed_ms: ms_since(start),
        });
        iterates.push(x.clone());
        if stall.update(rate) {
            break;
        }
    }
    let iterations = trace.len();
    Ok((
        SolverResult {
            secrecy_rate: secrecy_rate(ch, &best_x),
            x_opt: best_x,
            minimax_value: None,
            iterations,
            trace,
            wall_time: start.elapsed().as_secs_f64(),
        },
        iterates,
    ))
}
