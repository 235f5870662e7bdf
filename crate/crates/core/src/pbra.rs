//! Partial best response on the minimax form of the secrecy capacity.
//!
//! Each outer iteration takes the exact best response in the covariance
//! (an accelerated projected gradient ascent on a concave problem) and then
//! the best response in the coupling matrix to a linear upper bound of the
//! objective, which has a closed form.

use std::collections::VecDeque;
use std::time::Instant;

use crate::adca::StallMonitor;
use crate::error::{Error, Result};
use crate::model::{
    ChannelPair, ConvergenceTrace, CouplingMatrix, PowerBudget, SolverConfig, SolverResult,
    TraceRecord, TransmitCovariance,
};
use crate::numerics::{
    frobenius, hermitian_evd, hermitian_part, inner_re, inv_hpd, logdet_hpd, water_level, CMat,
};
use crate::rates::{grad_f_x, log_det_coupling, minimax_objective, secrecy_rate, f_e};

const APGM_MAX_ITERS: usize = 1000;
const MAX_BACKTRACKS: usize = 200;
const PLATEAU_WINDOW: usize = 10;

fn push_recent(recent: &mut VecDeque<f64>, v: f64) {
    recent.push_back(v);
    if recent.len() > PLATEAU_WINDOW + 1 {
        recent.pop_front();
    }
}

/// Euclidean projection onto `{X >= 0, tr X = p0}`.
///
/// Every eigenvalue is lowered by the common water level `tau` and clamped
/// at zero. `tau` is computed from the raw eigenvalues, negative ones
/// included, so a negative level lifts them no further than zero allows.
pub fn project_trace_simplex(x_raw: &CMat, p0: PowerBudget) -> Result<TransmitCovariance> {
    let evd = hermitian_evd(x_raw)?;
    // shifting by the smallest eigenvalue makes water_level's clamp inert
    let floor = evd.min();
    let shifted: Vec<f64> = evd.lambda.iter().map(|s| s - floor).collect();
    let tau = floor + water_level(&shifted, p0.get());
    let x = evd.map(|s| (s - tau).max(0.0));
    Ok(TransmitCovariance::from_raw(x))
}

/// Iteration state of the accelerated projected gradient method.
#[derive(Debug, Clone)]
pub struct ApgmState {
    pub y: CMat,
    pub x_curr: TransmitCovariance,
    pub x_prev: TransmitCovariance,
    pub xi: f64,
    /// Last accepted curvature estimate; the step size is `1 / eta`.
    pub eta: f64,
}

impl ApgmState {
    pub fn new(x_init: TransmitCovariance, eta0: f64) -> Self {
        ApgmState {
            y: x_init.matrix().clone(),
            x_prev: x_init.clone(),
            x_curr: x_init,
            xi: 1.0,
            eta: eta0,
        }
    }

    pub fn next_xi(xi: f64) -> f64 {
        0.5 * (1.0 + (1.0 + 4.0 * xi * xi).sqrt())
    }
}

/// Outcome of one X-update.
#[derive(Debug, Clone)]
pub struct ApgmOutcome {
    pub x: TransmitCovariance,
    pub objective: f64,
    /// Duality gap at the last accepted iterate; bounds its suboptimality.
    pub gap: f64,
    pub iterations: usize,
    /// Momentum values `xi_1, xi_2, ...` as used.
    pub xi_history: Vec<f64>,
}

/// Frank-Wolfe gap `max_Z <grad, Z - X>` over the feasible set, which is
/// `p0 * lambda_max(grad) - <grad, X>`. Upper-bounds `max f(q, .) - f(q, X)`.
pub fn duality_gap(ch: &ChannelPair, q: &CouplingMatrix, x: &TransmitCovariance, p0: PowerBudget) -> Result<f64> {
    let grad = grad_f_x(ch, q, x)?;
    let top = hermitian_evd(&grad)?.max();
    Ok((p0.get() * top - inner_re(&grad, x.matrix())).max(0.0))
}

/// Best response in `X` to a fixed coupling matrix: maximizes the concave
/// `f(q, X)` over `{X >= 0, tr X = p0}` starting from `x_init`.
pub fn apgm_x_update(
    ch: &ChannelPair,
    q: &CouplingMatrix,
    x_init: &TransmitCovariance,
    p0: PowerBudget,
    cfg: &SolverConfig,
) -> Result<TransmitCovariance> {
    apgm_run(ch, q, x_init, p0, cfg).map(|o| o.x)
}

pub fn apgm_run(
    ch: &ChannelPair,
    q: &CouplingMatrix,
    x_init: &TransmitCovariance,
    p0: PowerBudget,
    cfg: &SolverConfig,
) -> Result<ApgmOutcome> {
    if !q.is_strictly_feasible() {
        return Err(Error::SingularCoupling(q.sigma_max()));
    }
    let objective = |x: &CMat| minimax_objective(ch, q, &TransmitCovariance::from_raw(x.clone()));

    let mut st = ApgmState::new(x_init.clone(), cfg.eta0);
    let mut f_curr = objective(x_init.matrix())?;
    let (mut best_f, mut best_x) = (f_curr, x_init.clone());
    let mut gap = duality_gap(ch, q, x_init, p0)?;
    let mut xi_history = vec![st.xi];
    let mut iterations = 0;

    let mut recent = VecDeque::with_capacity(PLATEAU_WINDOW + 1);
    recent.push_back(best_f);
    while iterations < APGM_MAX_ITERS {
        let scale = 1.0 + best_f.abs();
        if gap <= cfg.inner_tol * scale {
            break;
        }
        // Near a rank-deficient optimum the gap shrinks only linearly with the
        // distance while the objective error is already at roundoff; accept a
        // plateau in value once the gap is small on that scale.
        if recent.len() > PLATEAU_WINDOW
            && best_f - recent[0] <= cfg.inner_tol * scale
            && gap <= cfg.inner_tol.sqrt() * scale
        {
            break;
        }
        iterations += 1;
        // The extrapolated point can leave the PSD cone far enough that the
        // objective is undefined there; restart the momentum in that case.
        let f_y = match objective(&st.y) {
            Ok(v) => v,
            Err(_) => {
                st.y = st.x_curr.matrix().clone();
                st.xi = 1.0;
                xi_history.push(st.xi);
                f_curr
            }
        };
        let y_cov = TransmitCovariance::from_raw(st.y.clone());
        let grad = grad_f_x(ch, q, &y_cov)?;

        // one step below the last accepted curvature, so the step can grow back
        let mut beta = st.eta / (cfg.theta * cfg.theta);
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            beta *= cfg.theta;
            let cand = project_trace_simplex(&(&st.y + grad.scale(1.0 / beta)), p0)?;
            let d = cand.matrix() - &st.y;
            let f_c = objective(cand.matrix())?;
            let model = f_y + inner_re(&grad, &d) - 0.5 * beta * frobenius(&d).powi(2);
            if f_c >= model {
                accepted = Some((cand, f_c));
                break;
            }
        }
        let (cand, f_c) = match accepted {
            Some(v) => v,
            None => break,
        };
        st.eta = beta;

        if f_c < f_curr {
            // adaptive restart: drop the momentum, keep the better iterate
            st.y = st.x_curr.matrix().clone();
            st.xi = 1.0;
            xi_history.push(st.xi);
            push_recent(&mut recent, best_f);
            continue;
        }
        let xi_next = ApgmState::next_xi(st.xi);
        let momentum = (st.xi - 1.0) / xi_next;
        st.y = hermitian_part(&(cand.matrix() + (cand.matrix() - st.x_curr.matrix()).scale(momentum)));
        st.x_prev = std::mem::replace(&mut st.x_curr, cand);
        st.xi = xi_next;
        xi_history.push(xi_next);
        f_curr = f_c;

        if f_c > best_f {
            best_f = f_c;
            best_x = st.x_curr.clone();
        }
        gap = duality_gap(ch, q, &st.x_curr, p0)?;
        push_recent(&mut recent, best_f);
    }

    Ok(ApgmOutcome {
        x: best_x,
        objective: best_f,
        gap,
        iterations,
        xi_history,
    })
}

/// `Psi` split into the `n_r`/`n_e` blocks.
#[derive(Debug, Clone)]
pub struct PsiPartition {
    pub psi: CMat,
    pub n_r: usize,
}

impl PsiPartition {
    pub fn new(psi: CMat, n_r: usize) -> Result<Self> {
        if !psi.is_square() || n_r > psi.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "cannot split a {}x{} matrix at row {n_r}",
                psi.nrows(),
                psi.ncols()
            )));
        }
        logdet_hpd(&psi).map_err(|_| Error::NotPositiveDefinite("Psi"))?;
        Ok(PsiPartition { psi, n_r })
    }

    /// `Psi = (Q + H X H^H)^{-1}`.
    pub fn at(ch: &ChannelPair, q: &CouplingMatrix, x: &TransmitCovariance) -> Result<Self> {
        let h = ch.stacked();
        let joint = q.full() + &h * x.matrix() * h.adjoint();
        Ok(PsiPartition {
            psi: inv_hpd(&joint)?,
            n_r: ch.n_r(),
        })
    }

    pub fn n_e(&self) -> usize {
        self.psi.nrows() - self.n_r
    }

    pub fn psi11(&self) -> CMat {
        self.psi.view((0, 0), (self.n_r, self.n_r)).into_owned()
    }

    pub fn psi12(&self) -> CMat {
        self.psi.view((0, self.n_r), (self.n_r, self.n_e())).into_owned()
    }

    pub fn psi22(&self) -> CMat {
        self.psi.view((self.n_r, self.n_r), (self.n_e(), self.n_e())).into_owned()
    }
}

/// Minimizer of `tr(Psi Q) - ln|Q|` over coupling matrices:
/// `q_bar = -U diag(2 / (1 + sqrt(1 + 4 sigma_i))) U^H Psi12` with
/// `Psi12 Psi12^H = U diag(sigma) U^H`.
pub fn q_update(psi: &PsiPartition) -> CouplingMatrix {
    let p12 = psi.psi12();
    let evd = hermitian_evd(&(&p12 * p12.adjoint())).expect("EVD of a small Gram matrix");
    let shrink = evd.map(|s| 2.0 / (1.0 + (1.0 + 4.0 * s.max(0.0)).sqrt()));
    let q = CouplingMatrix::new(-(shrink * p12));
    guard_strict(q)
}

fn guard_strict(q: CouplingMatrix) -> CouplingMatrix {
    let s = q.sigma_max();
    if s >= 1.0 - 1e-12 {
        CouplingMatrix::new(q.q_bar().scale((1.0 - 1e-9) / s))
    } else {
        q
    }
}

/// Objective minimized by the Q-update: `tr(Psi Q) - ln|Q|`.
pub fn q_update_objective(psi: &PsiPartition, q: &CouplingMatrix) -> Result<f64> {
    Ok(inner_re(&psi.psi, &q.full()) - log_det_coupling(q)?)
}

/// Linear upper bound of `f(., x)` around `q_prev`, evaluated at `q`.
pub fn surrogate_upper_bound(
    ch: &ChannelPair,
    q_prev: &CouplingMatrix,
    x: &TransmitCovariance,
    q: &CouplingMatrix,
) -> Result<f64> {
    let h = ch.stacked();
    let joint = q_prev.full() + &h * x.matrix() * h.adjoint();
    let psi = inv_hpd(&joint)?;
    let lin = inner_re(&psi, &(q.full() - q_prev.full()));
    Ok(logdet_hpd(&joint)? + lin - log_det_coupling(q)? - f_e(ch, x))
}

/// Full run of the best-response method with per-iteration data.
#[derive(Debug, Clone)]
pub struct PbraRun {
    pub result: SolverResult,
    /// Coupling matrix in force when each `X_n` was computed.
    pub couplings: Vec<CouplingMatrix>,
    pub iterates: Vec<TransmitCovariance>,
    pub inner_iterations: Vec<usize>,
}

pub fn pbra_solve(ch: &ChannelPair, p0: PowerBudget, cfg: &SolverConfig) -> Result<SolverResult> {
    pbra_run(ch, p0, cfg).map(|r| r.result)
}

pub fn pbra_run(ch: &ChannelPair, p0: PowerBudget, cfg: &SolverConfig) -> Result<PbraRun> {
    cfg.validate()?;
    let start = Instant::now();
    let mut q = CouplingMatrix::identity(ch.n_r(), ch.n_e());
    let mut x = TransmitCovariance::isotropic(ch.n_t(), p0);
    let mut stall = StallMonitor::new(f64::INFINITY, cfg.stall_window, cfg.rate_tol, false);
    let mut trace = ConvergenceTrace::new();
    let mut couplings = Vec::new();
    let mut iterates = Vec::new();
    let mut inner_iterations = Vec::new();
    let mut value = f64::INFINITY;

    for n in 1..=cfg.max_outer_iters {
        // X_n is the best response to Q_n, so value = f(Q_n, X_n)
        let inner = apgm_run(ch, &q, &x, p0, cfg)?;
        x = inner.x;
        value = inner.objective;
        inner_iterations.push(inner.iterations);
        let psi = PsiPartition::at(ch, &q, &x)?;
        couplings.push(std::mem::replace(&mut q, q_update(&psi)));
        iterates.push(x.clone());

        trace.push(TraceRecord {
            iter: n,
            objective: value,
            secrecy_rate: secrecy_rate(ch, &x),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if stall.update(value) {
            break;
        }
    }
    let iterations = trace.len();
    Ok(PbraRun {
        result: SolverResult {
            secrecy_rate: secrecy_rate(ch, &x),
            x_opt: x,
            minimax_value: Some(value),
            iterations,
            trace,
            wall_time: start.elapsed().as_secs_f64(),
        },
        couplings,
        iterates,
        inner_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adca::solve_with_phi;
    use crate::numerics::testutil::Gen;
    use crate::numerics::{identity, trace_re};
    use crate::rates::log_det_gain;
    use num_complex::Complex64;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn random_channel(g: &mut Gen, nt: usize, nr: usize, ne: usize) -> ChannelPair {
        ChannelPair::new(g.cmat(nr, nt), g.cmat(ne, nt)).unwrap()
    }

    #[test]
    fn projection_examples() {
        let p0 = PowerBudget::new(2.0).unwrap();
        let x = project_trace_simplex(&CMat::from_row_slice(2, 2, &[c(3.0), c(0.0), c(0.0), c(1.0)]), p0)
            .unwrap();
        let expected = CMat::from_row_slice(2, 2, &[c(2.0), c(0.0), c(0.0), c(0.0)]);
        assert!(frobenius(&(x.matrix() - expected)) < 1e-14);

        let mut g = Gen::new(31);
        let a = g.cmat(3, 3);
        let feasible = &a * a.adjoint();
        let feasible = feasible.scale(2.0 / trace_re(&feasible));
        let x = project_trace_simplex(&feasible, p0).unwrap();
        assert!(frobenius(&(x.matrix() - &feasible)) < 1e-12);

        // negative spectrum: the nearer eigenvalue takes all the power
        let x = project_trace_simplex(&CMat::from_row_slice(2, 2, &[c(-1.0), c(0.0), c(0.0), c(-3.0)]), PowerBudget::new(1.0).unwrap())
            .unwrap();
        let expected = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        assert!(frobenius(&(x.matrix() - expected)) < 1e-14);
    }

    #[test]
    fn q_update_examples() {
        let psi = PsiPartition::new(identity(3), 2).unwrap();
        assert!(frobenius(q_update(&psi).q_bar()) == 0.0);

        let psi = CMat::from_row_slice(2, 2, &[c(1.0), c(0.5), c(0.5), c(1.0)]);
        let q = q_update(&PsiPartition::new(psi, 1).unwrap());
        let expected = -2.0 * 0.5 / (1.0 + 2f64.sqrt());
        assert!((q.q_bar()[(0, 0)].re - expected).abs() < 1e-12);
        assert!((expected + 0.414_213_562_373_095).abs() < 1e-12);
    }

    #[test]
    fn q_update_is_stationary_and_strict() {
        // stationarity: q_bar = -(I - q_bar q_bar^H) Psi12
        let mut g = Gen::new(32);
        for _ in 0..50 {
            let psi = PsiPartition::new(g.hpd(5), 2).unwrap();
            let q = q_update(&psi);
            let qb = q.q_bar();
            let rhs = -(identity(2) - qb * qb.adjoint()) * psi.psi12();
            assert!(frobenius(&(qb - rhs)) < 1e-10);
            assert!(q.sigma_max() < 1.0);
        }
    }

    #[test]
    fn psi_blocks_tile() {
        let mut g = Gen::new(33);
        let psi = PsiPartition::new(g.hpd(5), 3).unwrap();
        let mut back = CMat::zeros(5, 5);
        back.view_mut((0, 0), (3, 3)).copy_from(&psi.psi11());
        back.view_mut((0, 3), (3, 2)).copy_from(&psi.psi12());
        back.view_mut((3, 0), (2, 3)).copy_from(&psi.psi12().adjoint());
        back.view_mut((3, 3), (2, 2)).copy_from(&psi.psi22());
        assert!(frobenius(&(back - &psi.psi)) < 1e-15);
        assert!(PsiPartition::new(-identity(3), 1).is_err());
    }

    #[test]
    fn apgm_without_eve_is_water_filling() {
        let mut g = Gen::new(34);
        for _ in 0..10 {
            let hb = g.cmat(3, 4);
            let ch = ChannelPair::new(hb, CMat::zeros(2, 4)).unwrap();
            let p0 = PowerBudget::new(5.0).unwrap();
            let q = CouplingMatrix::identity(3, 2);
            let cfg = SolverConfig::default();
            let x0 = TransmitCovariance::isotropic(4, p0);
            let out = apgm_run(&ch, &q, &x0, p0, &cfg).unwrap();
            let oracle = solve_with_phi(&ch, &CMat::zeros(4, 4), p0, 1e-12).unwrap();
            let h = ch.stacked();
            let want = log_det_gain(&h, oracle.matrix());
            assert!((out.objective - want).abs() < 1e-6, "{} vs {want}", out.objective);
            assert!(out.objective >= minimax_objective(&ch, &q, &x0).unwrap() - 1e-12);
        }
    }

    #[test]
    fn apgm_result_is_a_projected_gradient_fixed_point() {
        let mut g = Gen::new(35);
        let ch = random_channel(&mut g, 4, 3, 4);
        let p0 = PowerBudget::from_snr_db(10.0).unwrap();
        let q = CouplingMatrix::new(g.cmat(3, 4).scale(0.1));
        let cfg = SolverConfig::default();
        let out = apgm_run(&ch, &q, &TransmitCovariance::isotropic(4, p0), p0, &cfg).unwrap();
        let s = 1e-3;
        let grad = grad_f_x(&ch, &q, &out.x).unwrap();
        let moved = project_trace_simplex(&(out.x.matrix() + grad.scale(s)), p0).unwrap();
        let residual = frobenius(&(moved.matrix() - out.x.matrix())) / s;
        assert!(residual <= 1e-5, "residual {residual}");
        // momentum follows its recursion except at restarts
        for w in out.xi_history.windows(2) {
            assert!(w[1] == ApgmState::next_xi(w[0]) || w[1] == 1.0);
        }
        assert!(out.gap <= cfg.inner_tol.sqrt() * (1.0 + out.objective.abs()), "gap {}", out.gap);
    }

    #[test]
    fn duality_gap_bounds_suboptimality() {
        // without Eve and with Q = I the best response is water-filling
        let mut g = Gen::new(39);
        for _ in 0..20 {
            let ch = ChannelPair::new(g.cmat(3, 4), CMat::zeros(2, 4)).unwrap();
            let p0 = PowerBudget::new(0.5 + 10.0 * g.uniform()).unwrap();
            let q = CouplingMatrix::identity(3, 2);
            let best = solve_with_phi(&ch, &CMat::zeros(4, 4), p0, 1e-13).unwrap();
            let f_star = minimax_objective(&ch, &q, &best).unwrap();
            assert!(duality_gap(&ch, &q, &best, p0).unwrap() < 1e-8);

            let a = g.cmat(4, 4);
            let x = project_trace_simplex(&(&a * a.adjoint()), p0).unwrap();
            let sub = f_star - minimax_objective(&ch, &q, &x).unwrap();
            assert!(duality_gap(&ch, &q, &x, p0).unwrap() >= sub - 1e-12);
        }
    }

    #[test]
    fn surrogate_bounds_objective_and_is_tight() {
        let mut g = Gen::new(36);
        let ch = random_channel(&mut g, 3, 2, 3);
        let p0 = PowerBudget::new(4.0).unwrap();
        let x = TransmitCovariance::isotropic(3, p0);
        let q_prev = CouplingMatrix::new(g.cmat(2, 3).scale(0.2));
        let tight = surrogate_upper_bound(&ch, &q_prev, &x, &q_prev).unwrap();
        assert!((tight - minimax_objective(&ch, &q_prev, &x).unwrap()).abs() < 1e-10);
        for _ in 0..50 {
            let q = CouplingMatrix::new(g.cmat(2, 3).scale(0.25));
            if !q.is_strictly_feasible() {
                continue;
            }
            let ub = surrogate_upper_bound(&ch, &q_prev, &x, &q).unwrap();
            assert!(minimax_objective(&ch, &q, &x).unwrap() <= ub + 1e-12);
        }
    }

    #[test]
    fn identical_channels() {
        let mut g = Gen::new(37);
        let h = g.cmat(2, 3);
        let ch = ChannelPair::new(h.clone(), h).unwrap();
        let run = pbra_run(&ch, PowerBudget::new(10.0).unwrap(), &SolverConfig::default()).unwrap();
        assert_eq!(run.result.secrecy_rate, 0.0);
        // the optimal coupling is singular here, so f only decays sublinearly
        let recs = run.result.trace.records();
        for w in recs.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-10);
        }
        let f = run.result.minimax_value.unwrap();
        assert!((0.0..=1e-2).contains(&f), "{f}");
    }

    #[test]
    fn objective_sequence_upper_bounds_rate_and_decreases() {
        let mut g = Gen::new(38);
        let ch = random_channel(&mut g, 4, 3, 4);
        let p0 = PowerBudget::from_snr_db(10.0).unwrap();
        let run = pbra_run(&ch, p0, &SolverConfig::default()).unwrap();
        let recs = run.result.trace.records();
        for r in recs {
            assert!(r.objective >= r.secrecy_rate - 1e-9);
        }
        for w in recs.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-10);
        }
        let gap = run.result.minimax_value.unwrap() - run.result.secrecy_rate;
        assert!(gap <= 1e-4, "gap {gap}");
        for (q, x) in run.couplings.iter().zip(&run.iterates) {
            let tight = surrogate_upper_bound(&ch, q, x, q).unwrap();
            assert!((tight - minimax_objective(&ch, q, x).unwrap()).abs() < 1e-10);
        }
    }
}
