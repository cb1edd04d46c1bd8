//! Penalty-method minimization of the critical action for two
//! particles.
//!
//! The search space is the gauge-fixed parameterization: every point
//! block has the form `[[0, v], [u, w]]` with `u, v >= 0` real and
//! `w = x + iy`, packed as
//! `xi = (u_1..u_m, v_1..v_m, x_1..x_m, y_1..y_m)`.
//!
//! In these variables every pair determinant satisfies
//! `det A_xy = (d_x d_y) / 16 >= 0` with `d_x = -4 u_x^2 v_x^2`, so
//! real chain roots always share their sign and the critical action is
//! exactly `sum_xy Delta_xy Theta(Delta_xy) / 2` with
//! `Delta_xy = (t^2 - d_x d_y) / 4`, `t = rho_x rho_y + b_x . b_y`.
//! The column normalization gives four residuals
//! `r_1 = sum u^2 - 1`, `r_2 = sum (x^2 + y^2 - v^2) - 1`,
//! `r_3 = sum u x`, `r_4 = sum u y`, enforced by the quadratic penalty
//! `Q = S + L sum r_i^2`.
//!
//! The driver starts at `L_0 = 1000`, `tau_0 = 1e-6`, minimizes
//! `Q(.; L_k)` by Fletcher-Reeves conjugate gradients with Armijo
//! backtracking until `|grad Q|^2 < tau_k` (or the inner loop runs
//! 100000 times, or no decreasing step exists), then grows
//! `L <- 1.1 L`, shrinks `tau <- 0.9 tau` and warm-starts, stopping
//! once `sum r_i^2 <= 1e-20`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::FermionMatrix;
use crate::error::{Error, Result};
use crate::io::{PenaltyRecord, RunRow};

/// Gauge-fixed two-particle state on `m` points.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeFixedState {
    m: usize,
    /// Layout `u | v | x | y`, each slot of length `m`.
    xi: Vec<f64>,
}

impl GaugeFixedState {
    pub fn new(m: usize, xi: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Dimension("need at least one point".into()));
        }
        if xi.len() != 4 * m {
            return Err(Error::Dimension(format!(
                "state for m = {m} needs {} coordinates, got {}",
                4 * m,
                xi.len()
            )));
        }
        if xi.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteObjective);
        }
        Ok(GaugeFixedState { m, xi })
    }

    /// Random start: non-negative `u, v`, signed `x, y`, all of unit
    /// scale.
    pub fn random<R: Rng>(m: usize, rng: &mut R) -> Self {
        let mut xi = Vec::with_capacity(4 * m);
        for slot in 0..4 {
            for _ in 0..m {
                let c: f64 = rng.gen_range(-1.0..1.0);
                xi.push(if slot < 2 { c.abs() } else { c });
            }
        }
        GaugeFixedState { m, xi }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn coords(&self) -> &[f64] {
        &self.xi
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        let m = self.m;
        (
            &self.xi[0..m],
            &self.xi[m..2 * m],
            &self.xi[2 * m..3 * m],
            &self.xi[3 * m..4 * m],
        )
    }

    /// Folds the residual sign freedom into the canonical sector
    /// `u, v >= 0`. A negative `u` flips its whole bottom row `(u, w)`,
    /// a negative `v` flips alone; both are local gauge phases, so all
    /// Lagrangians and residuals are unchanged.
    pub fn folded(&self) -> GaugeFixedState {
        let m = self.m;
        let mut xi = self.xi.clone();
        for i in 0..m {
            if xi[i] < 0.0 {
                xi[i] = -xi[i];
                xi[2 * m + i] = -xi[2 * m + i];
                xi[3 * m + i] = -xi[3 * m + i];
            }
            if xi[m + i] < 0.0 {
                xi[m + i] = -xi[m + i];
            }
        }
        GaugeFixedState { m, xi }
    }

    /// The fermion matrix with point blocks `[[0, v], [u, x + iy]]`,
    /// after folding.
    pub fn to_fermion_matrix(&self) -> Result<FermionMatrix> {
        let folded = self.folded();
        let (u, v, x, y) = folded.split();
        let mut entries = ndarray::Array2::zeros((2 * self.m, 2));
        for p in 0..self.m {
            entries[(2 * p, 1)] = num_complex::Complex64::new(v[p], 0.0);
            entries[(2 * p + 1, 0)] = num_complex::Complex64::new(u[p], 0.0);
            entries[(2 * p + 1, 1)] = num_complex::Complex64::new(x[p], y[p]);
        }
        FermionMatrix::new(self.m, 2, entries)
    }
}

/// Per-point derived quantities: local trace, Bloch vector and
/// `d = rho^2 - |b|^2 = -4 u^2 v^2`.
fn point_data(state: &GaugeFixedState) -> (Vec<f64>, Vec<[f64; 3]>, Vec<f64>) {
    let (u, v, x, y) = state.split();
    let m = state.m;
    let mut rho = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    let mut d = Vec::with_capacity(m);
    for i in 0..m {
        let (ui, vi, pi, qi) = (u[i], v[i], x[i], y[i]);
        let c = pi * pi + qi * qi;
        rho.push(ui * ui - vi * vi + c);
        b.push([2.0 * ui * pi, -2.0 * ui * qi, ui * ui + vi * vi - c]);
        d.push(-4.0 * ui * ui * vi * vi);
    }
    (rho, b, d)
}

/// Critical action in the gauge-fixed variables.
pub fn action_value(state: &GaugeFixedState) -> f64 {
    let (rho, b, d) = point_data(state);
    let m = state.m;
    let mut s = 0.0;
    for x in 0..m {
        for y in 0..m {
            let t = rho[x] * rho[y] + b[x][0] * b[y][0] + b[x][1] * b[y][1] + b[x][2] * b[y][2];
            let delta = 0.25 * (t * t - d[x] * d[y]);
            if delta > 0.0 {
                s += 0.5 * delta;
            }
        }
    }
    s
}

/// Normalization residuals `(r_1, r_2, r_3, r_4)`.
pub fn residuals(state: &GaugeFixedState) -> [f64; 4] {
    let (u, v, x, y) = state.split();
    let mut r = [0.0f64; 4];
    for i in 0..state.m {
        r[0] += u[i] * u[i];
        r[1] += x[i] * x[i] + y[i] * y[i] - v[i] * v[i];
        r[2] += u[i] * x[i];
        r[3] += u[i] * y[i];
    }
    r[0] -= 1.0;
    r[1] -= 1.0;
    r
}

pub fn residual_sq(state: &GaugeFixedState) -> f64 {
    residuals(state).iter().map(|r| r * r).sum()
}

/// Quadratic penalty objective `Q = S + L sum r_i^2`.
pub fn penalty_objective(state: &GaugeFixedState, weight: f64) -> f64 {
    action_value(state) + weight * residual_sq(state)
}

/// Analytic gradient of `Q`; layout matches the state coordinates.
pub fn penalty_gradient(state: &GaugeFixedState, weight: f64) -> Vec<f64> {
    let m = state.m;
    let (rho, b, d) = point_data(state);
    // Accumulate in the (rho, b) chart first.
    let mut g_rho = vec![0.0f64; m];
    let mut g_b = vec![[0.0f64; 3]; m];
    for x in 0..m {
        for y in 0..m {
            let t = rho[x] * rho[y] + b[x][0] * b[y][0] + b[x][1] * b[y][1] + b[x][2] * b[y][2];
            let delta = 0.25 * (t * t - d[x] * d[y]);
            if delta <= 0.0 {
                continue;
            }
            // d(Delta/2)/d rho_x = (t rho_y - rho_x d_y) / 4, and the
            // mirrored term for the y slot; the diagonal picks up both.
            g_rho[x] += 0.25 * (t * rho[y] - rho[x] * d[y]);
            g_rho[y] += 0.25 * (t * rho[x] - rho[y] * d[x]);
            for c in 0..3 {
                g_b[x][c] += 0.25 * (t * b[y][c] + d[y] * b[x][c]);
                g_b[y][c] += 0.25 * (t * b[x][c] + d[x] * b[y][c]);
            }
        }
    }
    // Pull back through the Jacobian of (rho, b)(u, v, x, y).
    let (u, v, x, y) = state.split();
    let r = residuals(state);
    let mut grad = vec![0.0f64; 4 * m];
    for i in 0..m {
        let (ui, vi, pi, qi) = (u[i], v[i], x[i], y[i]);
        let (gr, gb) = (g_rho[i], g_b[i]);
        grad[i] = 2.0 * ui * gr + 2.0 * pi * gb[0] - 2.0 * qi * gb[1] + 2.0 * ui * gb[2];
        grad[m + i] = -2.0 * vi * gr + 2.0 * vi * gb[2];
        grad[2 * m + i] = 2.0 * pi * gr + 2.0 * ui * gb[0] - 2.0 * pi * gb[2];
        grad[3 * m + i] = 2.0 * qi * gr - 2.0 * ui * gb[1] - 2.0 * qi * gb[2];
        // Penalty part: 2 L sum_i r_i grad r_i.
        let w2 = 2.0 * weight;
        grad[i] += w2 * (r[0] * 2.0 * ui + r[2] * pi + r[3] * qi);
        grad[m + i] += w2 * (r[1] * -2.0 * vi);
        grad[2 * m + i] += w2 * (r[1] * 2.0 * pi + r[2] * ui);
        grad[3 * m + i] += w2 * (r[1] * 2.0 * qi + r[3] * ui);
    }
    grad
}

/// Penalty-loop schedule; defaults follow the published run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PenaltySchedule {
    /// Initial penalty weight `L_0`.
    pub weight0: f64,
    /// Outer growth factor for the weight.
    pub weight_growth: f64,
    /// Initial inner tolerance `tau_0` bounding `|grad Q|^2`.
    pub tol0: f64,
    /// Outer shrink factor for the tolerance.
    pub tol_shrink: f64,
    /// Inner iteration cap per outer step.
    pub inner_max: usize,
    /// Outer iteration cap.
    pub outer_max: usize,
    /// Stop once `sum r_i^2` falls to this value.
    pub feasibility: f64,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        PenaltySchedule {
            weight0: 1000.0,
            weight_growth: 1.1,
            tol0: 1e-6,
            tol_shrink: 0.9,
            inner_max: 100_000,
            outer_max: 500,
            feasibility: 1e-20,
        }
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum()
}

/// Armijo backtracking along `dir` from `state`; returns the accepted
/// step and new objective, or `None` when no decreasing step exists.
fn line_search(
    state: &GaugeFixedState,
    dir: &[f64],
    slope: f64,
    q0: f64,
    weight: f64,
    alpha_init: f64,
) -> Option<(f64, GaugeFixedState, f64)> {
    const C: f64 = 1e-4;
    let mut alpha = alpha_init;
    for _ in 0..60 {
        let mut xi = state.xi.clone();
        for (c, d) in xi.iter_mut().zip(dir.iter()) {
            *c += alpha * d;
        }
        let trial = GaugeFixedState { m: state.m, xi };
        let q = penalty_objective(&trial, weight);
        if q.is_finite() && q <= q0 + C * alpha * slope {
            return Some((alpha, trial, q));
        }
        alpha *= 0.5;
    }
    None
}

/// Fletcher-Reeves minimization of `Q(.; weight)`; stops when
/// `|grad|^2 < tol`, after `inner_max` iterations, or when no
/// descending step can be found. Returns the iterate and the inner
/// iteration count.
fn fletcher_reeves(
    start: GaugeFixedState,
    weight: f64,
    tol: f64,
    inner_max: usize,
) -> (GaugeFixedState, usize) {
    let n = start.xi.len();
    let mut state = start;
    let mut q = penalty_objective(&state, weight);
    let mut g = penalty_gradient(&state, weight);
    let mut g2 = norm_sq(&g);
    let mut dir: Vec<f64> = g.iter().map(|c| -c).collect();
    let mut alpha_prev = 1.0f64;
    let mut iters = 0usize;
    let mut since_reset = 0usize;
    let mut no_progress = 0usize;
    while iters < inner_max && g2 >= tol {
        iters += 1;
        since_reset += 1;
        let mut slope: f64 = dir.iter().zip(g.iter()).map(|(d, gi)| d * gi).sum();
        if slope >= 0.0 || since_reset > n {
            // Restart on a non-descent direction and periodically.
            for (di, gi) in dir.iter_mut().zip(g.iter()) {
                *di = -gi;
            }
            slope = -g2;
            since_reset = 0;
        }
        let alpha_init = (2.0 * alpha_prev).clamp(1e-12, 1.0);
        let step = line_search(&state, &dir, slope, q, weight, alpha_init);
        let (alpha, next, q_next) = match step {
            Some(hit) => hit,
            None => {
                if slope == -g2 {
                    // Even steepest descent cannot decrease: stalled.
                    break;
                }
                for (di, gi) in dir.iter_mut().zip(g.iter()) {
                    *di = -gi;
                }
                since_reset = 0;
                match line_search(&state, &dir, -g2, q, weight, 1.0) {
                    Some(hit) => hit,
                    None => break,
                }
            }
        };
        state = next;
        // Objective-progress stop: three consecutive steps below
        // round-off-scale decrease mean the inner problem is done.
        if q - q_next <= 1e-15 * (1.0 + q.abs()) {
            no_progress += 1;
            if no_progress >= 3 {
                break;
            }
        } else {
            no_progress = 0;
        }
        q = q_next;
        alpha_prev = alpha;
        let g_next = penalty_gradient(&state, weight);
        let g2_next = norm_sq(&g_next);
        let beta = g2_next / g2;
        for (di, gi) in dir.iter_mut().zip(g_next.iter()) {
            *di = -gi + beta * *di;
        }
        g = g_next;
        g2 = g2_next;
    }
    (state, iters)
}

/// Result of one penalty run.
#[derive(Debug, Clone)]
pub struct PenaltyOutcome {
    pub state: GaugeFixedState,
    pub action: f64,
    pub residual_sq: f64,
    pub feasible: bool,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// One record per outer iteration when tracing was requested.
    pub trace: Vec<PenaltyRecord>,
}

/// Full penalty loop from one start vector.
pub fn penalty_loop(
    start: GaugeFixedState,
    schedule: &PenaltySchedule,
    keep_trace: bool,
) -> PenaltyOutcome {
    let mut state = start;
    let mut weight = schedule.weight0;
    let mut tol = schedule.tol0;
    let mut trace = Vec::new();
    let mut inner_total = 0usize;
    let mut outer = 0usize;
    let mut rsq = residual_sq(&state);
    while outer < schedule.outer_max && rsq > schedule.feasibility {
        let (next, inner) = fletcher_reeves(state, weight, tol, schedule.inner_max);
        state = next;
        inner_total += inner;
        outer += 1;
        rsq = residual_sq(&state);
        if keep_trace {
            trace.push(PenaltyRecord {
                k: outer,
                weight,
                tau: tol,
                objective: penalty_objective(&state, weight),
                action: action_value(&state),
                residuals: residuals(&state),
            });
        }
        weight *= schedule.weight_growth;
        tol *= schedule.tol_shrink;
    }
    PenaltyOutcome {
        action: action_value(&state),
        residual_sq: rsq,
        feasible: rsq <= schedule.feasibility,
        outer_iters: outer,
        inner_iters: inner_total,
        trace,
        state,
    }
}

/// Published restart counts: 50 up to six points, 100 beyond.
pub fn default_restarts(m: usize) -> usize {
    if m <= 6 {
        50
    } else {
        100
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MultiStartConfig {
    pub m: usize,
    pub restarts: usize,
    pub seed: u64,
    pub schedule: PenaltySchedule,
    /// Keep per-restart outer-iteration traces.
    pub keep_traces: bool,
}

impl MultiStartConfig {
    pub fn new(m: usize, seed: u64) -> Self {
        MultiStartConfig {
            m,
            restarts: default_restarts(m),
            seed,
            schedule: PenaltySchedule::default(),
            keep_traces: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MultiStartOutcome {
    pub best: PenaltyOutcome,
    pub best_index: usize,
    pub rows: Vec<RunRow>,
    /// `(restart index, trace)` pairs when tracing was requested.
    pub traces: Vec<(usize, Vec<PenaltyRecord>)>,
}

/// Seeded multi-start: restart `i` runs from the stream seeded with
/// `seed + i`, so the outcome is independent of scheduling. Best is the
/// feasible run of least action (ties to the lower index), falling
/// back to least action overall when nothing is feasible.
pub fn multi_start(config: &MultiStartConfig) -> Result<MultiStartOutcome> {
    if config.restarts == 0 {
        return Err(Error::Parameter {
            name: "restarts".into(),
            detail: "need at least one restart".into(),
        });
    }
    let outcomes: Vec<PenaltyOutcome> = (0..config.restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(i as u64));
            let start = GaugeFixedState::random(config.m, &mut rng);
            penalty_loop(start, &config.schedule, config.keep_traces)
        })
        .collect();
    let mut best_index = 0usize;
    for i in 1..outcomes.len() {
        let (a, b) = (&outcomes[i], &outcomes[best_index]);
        let better = match (a.feasible, b.feasible) {
            (true, false) => true,
            (false, true) => false,
            _ => a.action < b.action,
        };
        if better {
            best_index = i;
        }
    }
    let rows = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| RunRow {
            m: config.m,
            restart: i,
            seed: config.seed.wrapping_add(i as u64),
            action: o.action,
            feasible: o.feasible,
            iters: o.outer_iters,
        })
        .collect();
    let traces = if config.keep_traces {
        outcomes
            .iter()
            .enumerate()
            .map(|(i, o)| (i, o.trace.clone()))
            .collect()
    } else {
        Vec::new()
    };
    let best = outcomes.into_iter().nth(best_index).expect("non-empty");
    Ok(MultiStartOutcome {
        best,
        best_index,
        rows,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_state(m: usize, seed: u64) -> GaugeFixedState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GaugeFixedState::random(m, &mut rng)
    }

    #[test]
    fn folding_preserves_action_and_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut state = sample_state(4, rng.gen());
            // Force sign mixtures.
            for c in state.xi.iter_mut() {
                if rng.gen_bool(0.5) {
                    *c = -*c;
                }
            }
            let folded = state.folded();
            assert!(folded.xi[0..8].iter().all(|c| *c >= 0.0));
            assert!((action_value(&state) - action_value(&folded)).abs() < 1e-12);
            let (r, rf) = (residuals(&state), residuals(&folded));
            for i in 0..4 {
                assert!((r[i] - rf[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let state = sample_state(3, 11);
        let weight = 37.0;
        let grad = penalty_gradient(&state, weight);
        let h = 1e-6;
        for k in 0..state.xi.len() {
            let mut lo = state.clone();
            let mut hi = state.clone();
            lo.xi[k] -= h;
            hi.xi[k] += h;
            let fd = (penalty_objective(&hi, weight) - penalty_objective(&lo, weight)) / (2.0 * h);
            let scale = 1.0 + grad[k].abs() + fd.abs();
            assert!(
                (grad[k] - fd).abs() / scale < 1e-6,
                "coordinate {k}: analytic {} vs fd {}",
                grad[k],
                fd
            );
        }
    }
}
