//! Direct entropy maximization over `M`-podal graphons with `e` and `τ` fixed.
//!
//! Each start runs in two phases. An augmented Lagrangian handles the two
//! density constraints, with each subproblem solved by a spectral projected
//! gradient method over the width simplex and the block box. Block variables
//! are scaled by `1/A_ij`, so their steps follow `S0'(p_ij) - (multiplier terms)`
//! and stay meaningful on narrow clusters. Near the constraint set the
//! penalty subproblems become badly conditioned (the entropy varies little
//! along the feasible valley), so once a start is close to feasible it
//! switches to gradient projection on the constraint set itself.
//!
//! Several starts run in parallel. The best one is reduced by merging equal
//! rows, re-run at the reduced podality, finished by Newton's method on the
//! Euler–Lagrange equations and checked against them.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};
use rayon::prelude::*;

use crate::bipodal;
use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::graphon::{entropy, s0_prime, s0_unchecked, write_graphon, MultipodalGraphon};

const P_FLOOR: f64 = 1e-9;
/// Constraint residual a start must reach to count as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Entropy band for counting agreeing restarts.
pub const AGREEMENT_TOL: f64 = 1e-6;

/// Maximize `s(g)` over `M`-podal `g` with `e(g) = e0`, `τ(g) = τ0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedProblem {
    pub model: DensityModel,
    pub e0: f64,
    pub tau0: f64,
    pub m: usize,
}

impl ConstrainedProblem {
    pub fn new(model: DensityModel, e0: f64, tau0: f64, m: usize) -> Result<Self> {
        if !(e0 > 0.0 && e0 < 1.0) {
            return Err(Error::Domain {
                what: "e",
                value: e0,
                domain: "(0, 1)",
            });
        }
        if m < 2 {
            return Err(Error::Domain {
                what: "M",
                value: m as f64,
                domain: "M >= 2",
            });
        }
        Ok(Self { model, e0, tau0, m })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Random starts, in addition to the Erdős–Rényi start and the optional bipodal one.
    pub restarts: usize,
    pub seed: u64,
    /// Also start from the bipodal solver's solution when it exists.
    pub bipodal_seed: bool,
    pub rounds: usize,
    /// Initial penalty per unit height of `τ0` above the Erdős–Rényi value.
    pub mu0: f64,
    pub mu_growth: f64,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub merge_row_tol: f64,
    pub merge_width_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            seed: 0x5eed,
            bipodal_seed: true,
            rounds: 8,
            mu0: 10.0,
            mu_growth: 10.0,
            inner_tol: 1e-9,
            inner_max_iter: 20_000,
            merge_row_tol: 1e-4,
            merge_width_tol: 1e-6,
        }
    }
}

/// Least-squares multipliers and the remaining Euler–Lagrange residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktFit {
    pub alpha: f64,
    /// Zero when `degenerate`.
    pub beta: f64,
    pub residual: f64,
    /// All block derivatives coincide, so only `α` was fitted.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerReport {
    /// Merged, polished, canonically ordered maximizer.
    pub best: MultipodalGraphon,
    /// Best start before merging.
    pub raw: MultipodalGraphon,
    pub s: f64,
    pub kkt: KktFit,
    pub kkt_residual: f64,
    /// `max(|e - e0|, |τ - τ0|)` of `best`.
    pub constraint_residual: f64,
    pub effective_podality: usize,
    pub restarts_agreeing: usize,
    /// Number of starts that reached feasibility.
    pub feasible_starts: usize,
    pub starts: usize,
    pub seed: u64,
}

fn upper_len(m: usize) -> usize {
    m * (m + 1) / 2
}

fn pack(g: &MultipodalGraphon) -> Vec<f64> {
    let mut x = g.widths().to_vec();
    x.extend(g.upper());
    x
}

fn unpack(x: &[f64], m: usize) -> MultipodalGraphon {
    let mut blocks = vec![0.0; m * m];
    let mut k = m;
    for i in 0..m {
        for j in i..m {
            blocks[i * m + j] = x[k];
            blocks[j * m + i] = x[k];
            k += 1;
        }
    }
    MultipodalGraphon::from_parts(x[..m].to_vec(), blocks).expect("iterate stays feasible")
}

/// Projection onto the probability simplex in the metric `Σ (y_i - z_i)² / w_i`:
/// `y_i = max(0, z_i + θ w_i)` with `θ` fixed by `Σ y_i = 1`.
fn project_simplex(z: &mut [f64], w: &[f64]) {
    let total = |theta: f64| -> f64 { z.iter().zip(w).map(|(z, w)| (z + theta * w).max(0.0)).sum() };
    let wmin = w.iter().copied().fold(f64::INFINITY, f64::min);
    let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let zmin = z.iter().copied().fold(f64::INFINITY, f64::min);
    // total(lo) <= 1 <= total(hi)
    let mut lo = -zmax.max(0.0) / wmin - 1.0;
    let mut hi = (1.0 - zmin.min(0.0)) / wmin + 1.0;
    while total(lo) > 1.0 {
        lo = 2.0 * lo - 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-17 * hi.abs().max(lo.abs()) {
            break;
        }
    }
    let theta = 0.5 * (lo + hi);
    for (z, w) in z.iter_mut().zip(w) {
        *z = (*z + theta * w).max(0.0);
    }
    let sum: f64 = z.iter().sum();
    for z in z.iter_mut() {
        *z /= sum;
    }
}

/// Projection onto widths-simplex × block box; `dscale` is the metric.
fn project(x: &mut [f64], m: usize, dscale: &[f64]) {
    project_simplex(&mut x[..m], &dscale[..m]);
    for p in &mut x[m..] {
        *p = p.clamp(P_FLOOR, 1.0 - P_FLOOR);
    }
}

/// Augmented Lagrangian `-s - λ·h + (μ/2)|h|²` and its gradient.
struct Lagrangian<'a> {
    problem: &'a ConstrainedProblem,
    lambda: [f64; 2],
    mu: f64,
}

impl Lagrangian<'_> {
    fn constraints(&self, g: &MultipodalGraphon) -> [f64; 2] {
        let e = crate::graphon::edge_density(g);
        [e - self.problem.e0, self.problem.model.value(g) - self.problem.tau0]
    }

    fn value(&self, x: &[f64]) -> f64 {
        let g = unpack(x, self.problem.m);
        let h = self.constraints(&g);
        -entropy(&g).value() - self.lambda[0] * h[0] - self.lambda[1] * h[1]
            + 0.5 * self.mu * (h[0] * h[0] + h[1] * h[1])
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let m = self.problem.m;
        let g = unpack(x, m);
        let h = self.constraints(&g);
        let w = [
            -self.lambda[0] + self.mu * h[0],
            -self.lambda[1] + self.mu * h[1],
        ];
        let t = self.problem.model.block_derivative(&g);
        let wg = self.problem.model.width_gradient(&g);
        let d = g.degrees().0;
        let c = g.widths();
        let mut grad = vec![0.0; x.len()];
        for i in 0..m {
            let ds = 2.0 * (0..m).map(|j| c[j] * s0_unchecked(g.p(i, j))).sum::<f64>();
            grad[i] = -ds + w[0] * 2.0 * d[i] + w[1] * wg[i];
        }
        let mut k = m;
        for i in 0..m {
            for j in i..m {
                let a = g.pair_weight(i, j);
                grad[k] = a * (-s0_prime(g.p(i, j)) + w[0] + w[1] * t[i * m + j]);
                k += 1;
            }
        }
        grad
    }

    /// Diagonal metric: `c_i` on widths and `1/A_ij` on blocks (both floored).
    ///
    /// In this metric every curvature term of the entropy, including the
    /// width-block coupling, stays bounded as a cluster narrows.
    fn scaling(&self, x: &[f64]) -> Vec<f64> {
        let m = self.problem.m;
        let mut dscale = vec![1.0; x.len()];
        for i in 0..m {
            dscale[i] = x[i].max(1e-8);
        }
        let mut k = m;
        for i in 0..m {
            for j in i..m {
                let a = if i == j { x[i] * x[i] } else { 2.0 * x[i] * x[j] };
                dscale[k] = 1.0 / a.max(1e-10);
                k += 1;
            }
        }
        dscale
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scaled projected-gradient stationarity `‖P(x - D∇f) - x‖∞`.
fn pg_norm(x: &[f64], grad: &[f64], dscale: &[f64], m: usize) -> f64 {
    let mut y: Vec<f64> = x.iter().zip(grad).zip(dscale).map(|((x, g), d)| x - d * g).collect();
    project(&mut y, m, dscale);
    y.iter().zip(x).fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
}

/// Non-monotone spectral projected gradient in the metric from [`Lagrangian::scaling`].
///
/// Close to a minimizer the decrease of `f` drops below its rounding error;
/// steps are then accepted on the approximate Wolfe test, which only uses
/// directional derivatives.
fn spg(lag: &Lagrangian, x0: Vec<f64>, tol: f64, max_iter: usize) -> Vec<f64> {
    let m = lag.problem.m;
    let mut x = x0;
    let dscale = lag.scaling(&x);
    project(&mut x, m, &dscale);
    let mut fx = lag.value(&x);
    let mut grad = lag.gradient(&x);
    let mut history: VecDeque<f64> = VecDeque::from([fx]);
    let pg0 = pg_norm(&x, &grad, &dscale, m);
    let mut step = (1.0 / pg0.max(1e-12)).clamp(1e-10, 1.0);
    for _ in 0..max_iter {
        if pg_norm(&x, &grad, &dscale, m) < tol {
            break;
        }
        let mut trial: Vec<f64> = x
            .iter()
            .zip(&grad)
            .zip(&dscale)
            .map(|((x, g), d)| x - step * d * g)
            .collect();
        project(&mut trial, m, &dscale);
        let dir: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let slope = dot(&grad, &dir);
        if slope >= 0.0 {
            break;
        }
        let fmax = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let noise = 1e-13 * fx.abs().max(1e-3);
        let mut lam = 1.0;
        let (xn, fnew, gnew) = loop {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(x, d)| x + lam * d).collect();
            let fnew = lag.value(&xn);
            if fnew <= fmax + 1e-4 * lam * slope {
                let gnew = lag.gradient(&xn);
                break (xn, fnew, gnew);
            }
            if fnew <= fx + noise {
                let gnew = lag.gradient(&xn);
                let dslope = dot(&gnew, &dir);
                if dslope >= 0.9 * slope && dslope <= -0.8 * slope {
                    break (xn, fnew, gnew);
                }
            }
            let quad = -slope * lam * lam / (2.0 * (fnew - fx - lam * slope));
            lam = if quad.is_finite() {
                quad.clamp(0.1 * lam, 0.5 * lam)
            } else {
                0.5 * lam
            };
            if lam < 1e-16 {
                return x;
            }
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let sds: f64 = s.iter().zip(&dscale).map(|(s, d)| s * s / d).sum();
        step = if sy > 0.0 { (sds / sy).clamp(1e-10, 1e10) } else { 1e10 };
        x = xn;
        fx = fnew;
        grad = gnew;
        history.push_back(fx);
        if history.len() > 10 {
            history.pop_front();
        }
    }
    x
}

/// Initial penalty for a problem: `mu0` relative to the height of `τ0` above
/// the Erdős–Rényi value, so the penalty outweighs the entropy gained by
/// flattening the graphon from the first round on.
fn initial_penalty(problem: &ConstrainedProblem, cfg: &OptimizerConfig) -> f64 {
    let height = (problem.tau0 - problem.model.er_value(problem.e0)).abs();
    cfg.mu0 / height.max(1e-4)
}

/// Penalties above `initial × growth^PENALTY_STEPS` only add rounding noise to the multipliers.
const PENALTY_STEPS: i32 = 1;
/// Constraint residual at which further multiplier updates are pure noise.
const ROUNDING_FLOOR: f64 = 1e-13;

/// One augmented-Lagrangian run; returns the final iterate and its constraint residual.
fn augmented_lagrangian(problem: &ConstrainedProblem, x0: Vec<f64>, cfg: &OptimizerConfig) -> (Vec<f64>, f64) {
    let mu_init = initial_penalty(problem, cfg);
    let mu_cap = mu_init * cfg.mu_growth.powi(PENALTY_STEPS);
    let mut lag = Lagrangian {
        problem,
        lambda: [0.0, 0.0],
        mu: mu_init,
    };
    let mut x = x0;
    let mut residual = f64::INFINITY;
    for round in 0..cfg.rounds + 8 {
        if round >= cfg.rounds && residual < FEASIBILITY_TOL {
            break;
        }
        x = spg(&lag, x, cfg.inner_tol, cfg.inner_max_iter);
        let h = lag.constraints(&unpack(&x, problem.m));
        residual = h[0].abs().max(h[1].abs());
        if residual < ROUNDING_FLOOR {
            break;
        }
        lag.lambda[0] -= lag.mu * h[0];
        lag.lambda[1] -= lag.mu * h[1];
        lag.mu = (lag.mu * cfg.mu_growth).min(mu_cap);
    }
    (x, residual)
}

/// Constraint residual below which a run switches to [`manifold_ascent`].
const ASCENT_ENTRY_TOL: f64 = 1e-4;

/// Entropy, constraints `(e - e0, τ - τ0, Σc - 1)` and their gradients, widths treated as independent.
struct Local {
    s: f64,
    grad: Vec<f64>,
    h: [f64; 3],
    jac: [Vec<f64>; 3],
}

fn local(problem: &ConstrainedProblem, x: &[f64]) -> Local {
    let m = problem.m;
    let g = unpack(x, m);
    let t = problem.model.block_derivative(&g);
    let wg = problem.model.width_gradient(&g);
    let d = g.degrees().0;
    let c = g.widths();
    let n = x.len();
    let mut grad = vec![0.0; n];
    let mut jac = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..m {
        grad[i] = 2.0 * (0..m).map(|j| c[j] * s0_unchecked(g.p(i, j))).sum::<f64>();
        jac[0][i] = 2.0 * d[i];
        jac[1][i] = wg[i];
        jac[2][i] = 1.0;
    }
    let mut k = m;
    for i in 0..m {
        for j in i..m {
            let a = g.pair_weight(i, j);
            grad[k] = a * s0_prime(g.p(i, j));
            jac[0][k] = a;
            jac[1][k] = a * t[i * m + j];
            k += 1;
        }
    }
    Local {
        s: entropy(&g).value(),
        grad,
        h: [
            crate::graphon::edge_density(&g) - problem.e0,
            problem.model.value(&g) - problem.tau0,
            x[..m].iter().sum::<f64>() - 1.0,
        ],
        jac,
    }
}

fn bounds(k: usize, m: usize) -> (f64, f64) {
    if k < m {
        (0.0, f64::INFINITY)
    } else {
        (P_FLOOR, 1.0 - P_FLOOR)
    }
}

/// Solves `(J D Jᵀ) σ = rhs` on the free variables; pseudo-inverse when the
/// constraint gradients are dependent.
fn normal_solve(jac: &[Vec<f64>; 3], dscale: &[f64], free: &[bool], rhs: [f64; 3]) -> [f64; 3] {
    let mut gram = nalgebra::Matrix3::<f64>::zeros();
    for a in 0..3 {
        for b in 0..3 {
            gram[(a, b)] = (0..dscale.len())
                .filter(|&k| free[k])
                .map(|k| jac[a][k] * dscale[k] * jac[b][k])
                .sum();
        }
    }
    let scale = gram.abs().max().max(1e-300);
    let sol = gram
        .svd(true, true)
        .solve(&nalgebra::Vector3::from(rhs), 1e-13 * scale)
        .unwrap_or_else(|_| nalgebra::Vector3::zeros());
    [sol[0], sol[1], sol[2]]
}

/// Newton restoration onto `h = 0` along `D Jᵀ σ`; `None` if it leaves the box or stalls.
fn restore(problem: &ConstrainedProblem, mut x: Vec<f64>, dscale: &[f64], free: &[bool]) -> Option<(Vec<f64>, Local)> {
    let m = problem.m;
    for _ in 0..12 {
        let loc = local(problem, &x);
        let norm = loc.h.iter().fold(0.0f64, |a, h| a.max(h.abs()));
        if norm < RESTORE_TOL {
            return Some((x, loc));
        }
        let sigma = normal_solve(&loc.jac, dscale, free, [-loc.h[0], -loc.h[1], -loc.h[2]]);
        for k in 0..x.len() {
            if free[k] {
                x[k] += dscale[k] * (0..3).map(|a| loc.jac[a][k] * sigma[a]).sum::<f64>();
                let (lo, hi) = bounds(k, m);
                if x[k] < lo || x[k] > hi {
                    return None;
                }
            }
        }
    }
    None
}

const RESTORE_TOL: f64 = 1e-13;
/// The ascent stops once the entropy has gained less than this (relative)
/// over `STAGNATION_WINDOW` iterations.
const STAGNATION: f64 = 1e-14;
const STAGNATION_WINDOW: usize = 100;

/// Gradient projection on the feasible set: ascent along the entropy gradient
/// projected onto the tangent space of the three equality constraints, with
/// Newton restoration after each step and bound constraints handled as an
/// active set.
///
/// In the scaled metric the block components of the direction are the
/// Euler–Lagrange residuals `S0'(p_ij) - α - β T_ij` themselves. Unlike the
/// penalty subproblems, the step length is set by the curvature of the
/// entropy alone, so the iteration does not stall in the narrow valley
/// around the constraint set.
fn manifold_ascent(problem: &ConstrainedProblem, x0: Vec<f64>, tol: f64, max_iter: usize) -> Option<Vec<f64>> {
    let m = problem.m;
    let n = x0.len();
    let lag = Lagrangian {
        problem,
        lambda: [0.0; 2],
        mu: 0.0,
    };
    let mut x = x0;
    for (k, v) in x.iter_mut().enumerate() {
        let (lo, hi) = bounds(k, m);
        *v = v.clamp(lo, hi);
    }
    let all_free = vec![true; n];
    let dscale = lag.scaling(&x);
    let (mut x, mut loc) = restore(problem, x, &dscale, &all_free)?;
    let mut step = 1.0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut last_gain = (loc.s, 0usize);
    for it in 0..max_iter {
        if loc.s > last_gain.0 + STAGNATION * loc.s.abs().max(1.0) {
            last_gain = (loc.s, it);
        } else if it - last_gain.1 >= STAGNATION_WINDOW {
            break;
        }
        let dscale = lag.scaling(&x);
        // active set: variables at a bound stay fixed unless the reduced gradient pulls them inside
        let at_bound: Vec<i8> = (0..n)
            .map(|k| {
                let (lo, hi) = bounds(k, m);
                if x[k] <= lo {
                    -1
                } else if x[k] >= hi {
                    1
                } else {
                    0
                }
            })
            .collect();
        let mut free: Vec<bool> = at_bound.iter().map(|&b| b == 0).collect();
        let mut reduced = vec![0.0; n];
        for _ in 0..2 {
            let rhs = [0, 1, 2].map(|a| (0..n).filter(|&k| free[k]).map(|k| loc.jac[a][k] * dscale[k] * loc.grad[k]).sum());
            let lambda = normal_solve(&loc.jac, &dscale, &free, rhs);
            for k in 0..n {
                reduced[k] = loc.grad[k] - (0..3).map(|a| loc.jac[a][k] * lambda[a]).sum::<f64>();
            }
            let mut released = false;
            for k in 0..n {
                if !free[k] && (at_bound[k] as f64) * reduced[k] < 0.0 {
                    free[k] = true;
                    released = true;
                }
            }
            if !released {
                break;
            }
        }
        let dir: Vec<f64> = (0..n).map(|k| if free[k] { dscale[k] * reduced[k] } else { 0.0 }).collect();
        // metric norm: near-empty clusters carry almost no weight
        let pg = (0..n).fold(0.0f64, |a, k| a.max((dir[k] * reduced[k]).abs().sqrt()));
        if pg < tol {
            break;
        }
        let slope: f64 = (0..n).map(|k| dir[k] * reduced[k]).sum();
        // largest step that stays in the box
        let mut t_max = f64::INFINITY;
        for k in 0..n {
            let (lo, hi) = bounds(k, m);
            if dir[k] < 0.0 {
                t_max = t_max.min((x[k] - lo) / -dir[k]);
            } else if dir[k] > 0.0 {
                t_max = t_max.min((hi - x[k]) / dir[k]);
            }
        }
        if let Some((px, pr)) = &prev {
            let dx: Vec<f64> = x.iter().zip(px).map(|(a, b)| a - b).collect();
            let dxx: f64 = (0..n).map(|k| dx[k] * dx[k] / dscale[k]).sum();
            let dxr: f64 = (0..n).map(|k| dx[k] * (pr[k] - reduced[k])).sum();
            step = if dxr > 0.0 { (dxx / dxr).clamp(1e-12, 1e6) } else { step * 4.0 };
        }
        let mut t = step.min(t_max);
        let accepted = loop {
            let trial: Vec<f64> = (0..n)
                .map(|k| {
                    let (lo, hi) = bounds(k, m);
                    (x[k] + t * dir[k]).clamp(lo, hi)
                })
                .collect();
            if let Some((xn, ln)) = restore(problem, trial, &dscale, &free) {
                if ln.s >= loc.s + 1e-4 * t * slope || (ln.s >= loc.s - 1e-15 && t * pg < 1e-9) {
                    break Some((xn, ln));
                }
            }
            t *= 0.5;
            if t < 1e-14 {
                break None;
            }
        };
        let Some((xn, ln)) = accepted else {
            break;
        };
        prev = Some((x, reduced));
        x = xn;
        loc = ln;
    }
    Some(x)
}

fn random_start(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let widths: Vec<f64> = if m == 1 {
        vec![1.0]
    } else {
        Dirichlet::new(&vec![1.0; m]).expect("valid alpha").sample(rng)
    };
    let mut x = widths;
    x.extend((0..upper_len(m)).map(|_| rng.gen::<f64>()));
    x
}

fn er_start(m: usize, e0: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = vec![1.0 / m as f64; m];
    x.extend((0..upper_len(m)).map(|_| e0 + 1e-3 * (rng.gen::<f64>() - 0.5)));
    x
}

/// Embeds a bipodal solution into `m` clusters by splitting the large cluster.
fn bipodal_start(problem: &ConstrainedProblem) -> Option<Vec<f64>> {
    if problem.m < 2 {
        return None;
    }
    let sol = bipodal::solve_at(&problem.model, problem.e0, problem.tau0).ok()?;
    let mut g = sol.graphon();
    while g.podality() < problem.m {
        g = g.split_cluster(1, 0.5);
    }
    Some(pack(&g))
}

struct Run {
    x: Vec<f64>,
    residual: f64,
    s: f64,
}

fn constraint_residual(problem: &ConstrainedProblem, g: &MultipodalGraphon) -> f64 {
    let e = crate::graphon::edge_density(g);
    (e - problem.e0).abs().max((problem.model.value(g) - problem.tau0).abs())
}

/// Maximizes entropy from random, Erdős–Rényi and (optionally) bipodal starts.
pub fn maximize(problem: &ConstrainedProblem, cfg: &OptimizerConfig) -> Result<OptimizerReport> {
    let m = problem.m;
    let mut starts: Vec<Vec<f64>> = (0..cfg.restarts)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64 + 1);
            random_start(m, &mut rng)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    starts.push(er_start(m, problem.e0, &mut rng));
    if cfg.bipodal_seed {
        if let Some(x) = bipodal_start(problem) {
            starts.push(x);
        }
    }
    let runs: Vec<Run> = starts
        .into_par_iter()
        .map(|x0| {
            let (mut x, mut residual) = augmented_lagrangian(problem, x0, cfg);
            if residual < ASCENT_ENTRY_TOL {
                if let Some(y) = manifold_ascent(problem, x.clone(), cfg.inner_tol, cfg.inner_max_iter) {
                    residual = constraint_residual(problem, &unpack(&y, m));
                    x = y;
                }
            }
            let s = entropy(&unpack(&x, m)).value();
            Run { x, residual, s }
        })
        .collect();
    let n_starts = runs.len();
    let feasible: Vec<&Run> = runs.iter().filter(|r| r.residual < FEASIBILITY_TOL).collect();
    let Some(best) = feasible.iter().max_by(|a, b| a.s.total_cmp(&b.s)) else {
        let residual = runs.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min);
        return Err(Error::Infeasible { residual });
    };
    let agreeing = feasible
        .iter()
        .filter(|r| (best.s - r.s).abs() <= AGREEMENT_TOL)
        .count();
    let raw = unpack(&best.x, m);

    // merge equal rows, re-run the ascent at the reduced podality, repeat until stable
    let mut g = raw.merged(cfg.merge_row_tol, cfg.merge_width_tol);
    for _ in 0..4 {
        if g.podality() < 2 {
            break;
        }
        let reduced = ConstrainedProblem {
            m: g.podality(),
            ..problem.clone()
        };
        let Some(x) = manifold_ascent(&reduced, pack(&g), cfg.inner_tol, cfg.inner_max_iter) else {
            break;
        };
        let polished = unpack(&x, reduced.m);
        if constraint_residual(problem, &polished) >= FEASIBILITY_TOL {
            break;
        }
        let next = polished.merged(cfg.merge_row_tol, cfg.merge_width_tol);
        let stable = next.podality() == polished.podality();
        g = next;
        if stable {
            break;
        }
    }
    if let Some(refined) = newton_polish(&g, problem) {
        g = refined;
    }
    let best_g = g.canonical();
    let kkt = kkt_residual(&best_g, problem)?;
    Ok(OptimizerReport {
        s: entropy(&best_g).value(),
        constraint_residual: constraint_residual(problem, &best_g),
        effective_podality: best_g.podality(),
        kkt_residual: kkt.residual,
        kkt,
        best: best_g,
        raw,
        restarts_agreeing: agreeing,
        feasible_starts: feasible.len(),
        starts: n_starts,
        seed: cfg.seed,
    })
}

/// Euler–Lagrange residual in the unknowns `(c_1..c_{M-1}, p_upper, α, β)`,
/// with `c_M = 1 - Σ c_i`.
fn kkt_equations(z: &[f64], m: usize, problem: &ConstrainedProblem) -> Option<Vec<f64>> {
    let mut widths: Vec<f64> = z[..m - 1].to_vec();
    widths.push(1.0 - widths.iter().sum::<f64>());
    let nu = upper_len(m);
    let upper = &z[m - 1..m - 1 + nu];
    if widths.iter().any(|&c| c <= 0.0) || upper.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return None;
    }
    let (alpha, beta) = (z[m - 1 + nu], z[m + nu]);
    let g = MultipodalGraphon::from_upper(widths, upper).ok()?;
    let t = problem.model.block_derivative(&g);
    let wg = problem.model.width_gradient(&g);
    let d = g.degrees().0;
    let c = g.widths();
    let mut f = Vec::with_capacity(z.len());
    for i in 0..m {
        for j in i..m {
            f.push(s0_prime(g.p(i, j)) - alpha - beta * t[i * m + j]);
        }
    }
    let w: Vec<f64> = (0..m)
        .map(|i| {
            let ds = 2.0 * (0..m).map(|j| c[j] * s0_unchecked(g.p(i, j))).sum::<f64>();
            ds - alpha * 2.0 * d[i] - beta * wg[i]
        })
        .collect();
    for i in 0..m - 1 {
        f.push(w[i] - w[m - 1]);
    }
    f.push(crate::graphon::edge_density(&g) - problem.e0);
    f.push(problem.model.value(&g) - problem.tau0);
    Some(f)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Damped Newton on the Euler–Lagrange system of a merged graphon.
///
/// Returns `None` when the system is degenerate (a single cluster or equal
/// block derivatives) or Newton fails to improve the residual.
fn newton_polish(g: &MultipodalGraphon, problem: &ConstrainedProblem) -> Option<MultipodalGraphon> {
    let m = g.podality();
    if m < 2 {
        return None;
    }
    let fit = kkt_residual(g, problem).ok()?;
    if fit.degenerate {
        return None;
    }
    let mut z: Vec<f64> = g.widths()[..m - 1].to_vec();
    z.extend(g.upper());
    z.push(fit.alpha);
    z.push(fit.beta);
    let n = z.len();
    let mut f = kkt_equations(&z, m, problem)?;
    let start_norm = max_abs(&f);
    for _ in 0..30 {
        let norm = max_abs(&f);
        if norm < 1e-13 {
            break;
        }
        let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let h = 1e-7 * z[k].abs().max(1e-2);
            let mut up = z.clone();
            let mut dn = z.clone();
            up[k] += h;
            dn[k] -= h;
            let (fu, fd) = (kkt_equations(&up, m, problem)?, kkt_equations(&dn, m, problem)?);
            for r in 0..n {
                jac[(r, k)] = (fu[r] - fd[r]) / (2.0 * h);
            }
        }
        let rhs = nalgebra::DVector::from_iterator(n, f.iter().map(|x| -x));
        let dz = jac.lu().solve(&rhs)?;
        let mut lam = 1.0;
        let next = loop {
            let trial: Vec<f64> = z.iter().zip(dz.iter()).map(|(a, b)| a + lam * b).collect();
            if let Some(ft) = kkt_equations(&trial, m, problem) {
                if max_abs(&ft) < (1.0 - 1e-4 * lam) * norm {
                    break Some((trial, ft));
                }
            }
            lam *= 0.5;
            if lam < 1e-6 {
                break None;
            }
        };
        let Some((zn, fn_)) = next else { break };
        z = zn;
        f = fn_;
    }
    if max_abs(&f) >= start_norm {
        return None;
    }
    let mut widths: Vec<f64> = z[..m - 1].to_vec();
    widths.push(1.0 - widths.iter().sum::<f64>());
    let refined = MultipodalGraphon::from_upper(widths, &z[m - 1..m - 1 + upper_len(m)]).ok()?;
    (constraint_residual(problem, &refined) < FEASIBILITY_TOL).then_some(refined)
}

/// Fits `(α, β)` to the block equations `S0'(p_ij) = α + β T_ij` and returns
/// the largest remaining residual, including the width equations with the
/// normalization multiplier eliminated by differencing.
pub fn kkt_residual(g: &MultipodalGraphon, problem: &ConstrainedProblem) -> Result<KktFit> {
    let m = g.podality();
    for i in 0..m {
        for j in i..m {
            crate::graphon::check_open_unit(g.p(i, j), "p_ij")?;
        }
    }
    let t = problem.model.block_derivative(g);
    let mut rows: Vec<(f64, f64)> = Vec::new(); // (T_ij, S0'(p_ij))
    for i in 0..m {
        for j in i..m {
            rows.push((t[i * m + j], s0_prime(g.p(i, j))));
        }
    }
    let n = rows.len() as f64;
    let mt = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let ms = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let stt: f64 = rows.iter().map(|r| (r.0 - mt).powi(2)).sum();
    let sts: f64 = rows.iter().map(|r| (r.0 - mt) * (r.1 - ms)).sum();
    let spread = rows.iter().map(|r| (r.0 - mt).abs()).fold(0.0, f64::max);
    let degenerate = spread <= 1e-12 * mt.abs().max(1.0);
    let (alpha, beta) = if degenerate {
        (ms, 0.0)
    } else {
        let beta = sts / stt;
        (ms - beta * mt, beta)
    };
    let mut residual = rows
        .iter()
        .map(|r| (r.1 - alpha - beta * r.0).abs())
        .fold(0.0, f64::max);

    let c = g.widths();
    let d = g.degrees().0;
    let wg = problem.model.width_gradient(g);
    let width_eq: Vec<f64> = (0..m)
        .map(|i| {
            let ds = 2.0 * (0..m).map(|j| c[j] * s0_unchecked(g.p(i, j))).sum::<f64>();
            ds - alpha * 2.0 * d[i] - beta * wg[i]
        })
        .collect();
    for i in 0..m.saturating_sub(1) {
        residual = residual.max((width_eq[i] - width_eq[m - 1]).abs());
    }
    Ok(KktFit {
        alpha,
        beta,
        residual,
        degenerate,
    })
}

/// Graphon text format followed by a `#` metadata footer.
pub fn write_report(report: &OptimizerReport) -> String {
    let mut out = write_graphon(&report.best);
    out.push_str(&format!("# s = {}\n", crate::fmt17(report.s)));
    out.push_str(&format!("# kkt_residual = {:e}\n", report.kkt_residual));
    out.push_str(&format!("# constraint_residual = {:e}\n", report.constraint_residual));
    out.push_str(&format!("# alpha = {}\n", crate::fmt17(report.kkt.alpha)));
    out.push_str(&format!("# beta = {}\n", crate::fmt17(report.kkt.beta)));
    out.push_str(&format!("# effective_podality = {}\n", report.effective_podality));
    out.push_str(&format!(
        "# restarts_agreeing = {} of {} feasible ({} starts)\n",
        report.restarts_agreeing, report.feasible_starts, report.starts
    ));
    out.push_str(&format!("# seed = {}\n", report.seed));
    out
}
