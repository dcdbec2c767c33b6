//! The bipodal optimality system and its continuation in `τ`.
//!
//! Unknowns are `x = (p11, p12, p22, c)` where `c` is the width of the small
//! cluster. With `T` the block derivative of `τ` (`∂τ/∂p_ij = A_ij T_ij`),
//! the multipliers are eliminated from the `p12` and `p22` equations:
//!
//! ```text
//! β = (S0'(p22) - S0'(p12)) / (T22 - T12),    α = S0'(p22) - β T22
//! ```
//!
//! and the remaining four equations are
//!
//! ```text
//! f1 = S0'(p11) - α - β T11
//! f2 = ∂s/∂c - α ∂e/∂c - β ∂τ/∂c
//! f3 = e(g) - e0
//! f4 = τ(g) - τ0
//! ```
//!
//! For star models `T_ij = (h'(d_i) + h'(d_j))/2`, so `f1` reduces to
//! `S0'(p11) - 2 S0'(p12) + S0'(p22)`.

use nalgebra::{Matrix4, Vector4};

use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::graphon::{entropy, s0_prime, s0_prime_inverse, s0_unchecked, MultipodalGraphon};
use crate::star::{classify, zeta, PsiMax, PsiProfile};

/// Newton stops once the residual ∞-norm is below this.
pub const NEWTON_TOL: f64 = 1e-11;
pub const MAX_NEWTON_ITERATIONS: usize = 50;
/// Finite-difference step of the Jacobian.
pub const FD_STEP: f64 = 1e-7;
/// Continuation gives up once the `τ` step falls below this.
pub const MIN_TAU_STEP: f64 = 1e-12;
const P_FLOOR: f64 = 1e-9;
const C_MAX: f64 = 0.5;

/// `(p11, p12, p22, c)`.
pub type State = [f64; 4];

fn graphon_of(x: &State) -> Result<MultipodalGraphon> {
    for (name, &p) in ["p11", "p12", "p22"].iter().zip(&x[..3]) {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain {
                what: name,
                value: p,
                domain: "(0, 1)",
            });
        }
    }
    MultipodalGraphon::bipodal(x[3], x[0], x[1], x[2])
}

/// `(α, β)` eliminated from the `p12` and `p22` equations.
pub fn multipliers(model: &DensityModel, x: &State) -> Result<(f64, f64)> {
    let g = graphon_of(x)?;
    let t = model.block_derivative(&g);
    multipliers_from(&t, x)
}

fn multipliers_from(t: &[f64], x: &State) -> Result<(f64, f64)> {
    let (t12, t22) = (t[1], t[3]);
    let denom = t22 - t12;
    if denom.abs() <= 1e-14 * t22.abs().max(t12.abs()).max(1e-300) {
        return Err(Error::EliminationSingular);
    }
    let beta = (s0_prime(x[2]) - s0_prime(x[1])) / denom;
    Ok((s0_prime(x[2]) - beta * t22, beta))
}

/// `(f1, f2, f3 - e0, f4 - τ0)`.
pub fn residual(model: &DensityModel, x: &State, e0: f64, tau0: f64) -> Result<[f64; 4]> {
    let g = graphon_of(x)?;
    let [p11, p12, p22, c] = *x;
    let t = model.block_derivative(&g);
    let (alpha, beta) = multipliers_from(&t, x)?;
    let wg = model.width_gradient(&g);

    let f1 = s0_prime(p11) - alpha - beta * t[0];
    let ds_dc = 2.0 * c * s0_unchecked(p11) + 2.0 * (1.0 - 2.0 * c) * s0_unchecked(p12)
        - 2.0 * (1.0 - c) * s0_unchecked(p22);
    let de_dc = 2.0 * c * p11 + 2.0 * (1.0 - 2.0 * c) * p12 - 2.0 * (1.0 - c) * p22;
    let dtau_dc = wg[0] - wg[1];
    let f2 = ds_dc - alpha * de_dc - beta * dtau_dc;
    let e = c * c * p11 + 2.0 * c * (1.0 - c) * p12 + (1.0 - c) * (1.0 - c) * p22;
    Ok([f1, f2, e - e0, model.value(&g) - tau0])
}

/// Finite-difference Jacobian of [`residual`]; columns ordered as the state.
///
/// Central differences with step [`FD_STEP`]; the `c` column is one-sided
/// when `c` is within a step of zero.
pub fn jacobian(model: &DensityModel, x: &State, e0: f64, tau0: f64) -> Result<Matrix4<f64>> {
    let mut jac = Matrix4::zeros();
    for col in 0..4 {
        let h = FD_STEP;
        let (lo, hi, span) = if col == 3 && x[3] < h {
            (*x, shifted(x, col, h), h)
        } else {
            (shifted(x, col, -h), shifted(x, col, h), 2.0 * h)
        };
        let fl = residual(model, &lo, e0, tau0)?;
        let fh = residual(model, &hi, e0, tau0)?;
        for row in 0..4 {
            jac[(row, col)] = (fh[row] - fl[row]) / span;
        }
    }
    Ok(jac)
}

fn shifted(x: &State, i: usize, by: f64) -> State {
    let mut y = *x;
    y[i] += by;
    y
}

fn clip(x: State) -> State {
    [
        x[0].clamp(P_FLOOR, 1.0 - P_FLOOR),
        x[1].clamp(P_FLOOR, 1.0 - P_FLOOR),
        x[2].clamp(P_FLOOR, 1.0 - P_FLOOR),
        x[3].clamp(0.0, C_MAX),
    ]
}

fn norm_inf(f: &[f64; 4]) -> f64 {
    f.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Damped Newton with Armijo halving on the residual ∞-norm.
fn newton(model: &DensityModel, x0: State, e0: f64, tau0: f64) -> Result<(State, usize, f64)> {
    let mut x = clip(x0);
    let mut f = residual(model, &x, e0, tau0)?;
    let mut norm = norm_inf(&f);
    for it in 0..MAX_NEWTON_ITERATIONS {
        if norm < NEWTON_TOL {
            return Ok((x, it, norm));
        }
        let jac = jacobian(model, &x, e0, tau0)?;
        let rhs = -Vector4::from_column_slice(&f);
        let dx = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("bipodal Jacobian".into()))?;
        let mut lambda = 1.0;
        loop {
            let trial = clip([
                x[0] + lambda * dx[0],
                x[1] + lambda * dx[1],
                x[2] + lambda * dx[2],
                x[3] + lambda * dx[3],
            ]);
            if let Ok(ft) = residual(model, &trial, e0, tau0) {
                let nt = norm_inf(&ft);
                if nt.is_finite() && nt <= (1.0 - 1e-4 * lambda) * norm {
                    x = trial;
                    f = ft;
                    norm = nt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return Err(Error::NoConvergence {
                    iterations: it + 1,
                    residual: norm,
                });
            }
        }
    }
    if norm < NEWTON_TOL {
        Ok((x, MAX_NEWTON_ITERATIONS, norm))
    } else {
        Err(Error::NoConvergence {
            iterations: MAX_NEWTON_ITERATIONS,
            residual: norm,
        })
    }
}

/// A point on the bipodal solution family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipodalSolution {
    pub e: f64,
    pub tau: f64,
    /// Width of the small cluster.
    pub c: f64,
    pub p11: f64,
    pub p12: f64,
    pub p22: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Multiplier of `Σ c_i = 1`, recovered after the solve.
    pub gamma: f64,
    pub s: f64,
    pub newton_iters: usize,
    /// Residual ∞-norm at acceptance.
    pub residual: f64,
}

impl BipodalSolution {
    pub fn state(&self) -> State {
        [self.p11, self.p12, self.p22, self.c]
    }

    pub fn graphon(&self) -> MultipodalGraphon {
        MultipodalGraphon::bipodal(self.c, self.p11, self.p12, self.p22)
            .expect("solutions are valid graphons")
    }

    /// `S0'(p11) - 2 S0'(p12) + S0'(p22)`; zero for star models.
    pub fn f1_identity(&self) -> f64 {
        s0_prime(self.p11) - 2.0 * s0_prime(self.p12) + s0_prime(self.p22)
    }

    fn assemble(model: &DensityModel, x: State, e: f64, tau: f64, iters: usize, res: f64) -> Result<Self> {
        let g = graphon_of(&x)?;
        let (alpha, beta) = multipliers(model, &x)?;
        let wg = model.width_gradient(&g);
        let d2 = x[3] * x[1] + (1.0 - x[3]) * x[2];
        let ds_dc2 = 2.0 * (x[3] * s0_unchecked(x[1]) + (1.0 - x[3]) * s0_unchecked(x[2]));
        let gamma = ds_dc2 - alpha * 2.0 * d2 - beta * wg[1];
        Ok(Self {
            e,
            tau,
            c: x[3],
            p11: x[0],
            p12: x[1],
            p22: x[2],
            alpha,
            beta,
            gamma,
            s: entropy(&g).value(),
            newton_iters: iters,
            residual: res,
        })
    }
}

/// The `c = 0` solution on the Erdős–Rényi curve: `p22 = e0`, `p12 = ζ(e0)`
/// of the reduced profile and `p11` from `f1 = 0`.
pub fn limit_point(model: &DensityModel, e0: f64) -> Result<(State, PsiMax)> {
    let profile = PsiProfile::new(model.reduced_weights(e0)?, e0)?;
    let best = zeta(&profile)?;
    let probe = [0.5, best.e_tilde, e0, 0.0];
    let g = graphon_of(&probe)?;
    // at c = 0, T11 does not depend on p11
    let t = model.block_derivative(&g);
    let (alpha, beta) = multipliers_from(&t, &probe)?;
    let p11 = s0_prime_inverse(alpha + beta * t[0]);
    Ok(([p11, best.e_tilde, e0, 0.0], best))
}

/// Fills `p22` so that the edge density equals `e0` for the given `c`, `p11`, `p12`.
fn with_edge_density(mut x: State, e0: f64) -> State {
    let c = x[3];
    let rest = (1.0 - c) * (1.0 - c);
    x[2] = (e0 - c * c * x[0] - 2.0 * c * (1.0 - c) * x[1]) / rest;
    x
}

fn check_above_er(model: &DensityModel, e0: f64, tau0: f64) -> Result<f64> {
    if !(e0 > 0.0 && e0 < 1.0) {
        return Err(Error::Domain {
            what: "e",
            value: e0,
            domain: "(0, 1)",
        });
    }
    let dtau = tau0 - model.er_value(e0);
    if dtau <= 0.0 {
        return Err(Error::Domain {
            what: "tau",
            value: tau0,
            domain: "strictly above the Erdős–Rényi value",
        });
    }
    Ok(dtau)
}

/// Refuses densities the bad-value scan flags for this model.
pub fn check_density(model: &DensityModel, e0: f64) -> Result<()> {
    let row = classify(model.reduced_weights(e0)?, e0)?;
    if row.flagged {
        Err(Error::BadDensity { e: e0 })
    } else {
        Ok(())
    }
}

/// Solves at `(e0, τ0)` from the small-cluster seed.
pub fn solve_at(model: &DensityModel, e0: f64, tau0: f64) -> Result<BipodalSolution> {
    let dtau = check_above_er(model, e0, tau0)?;
    check_density(model, e0)?;
    let seed = asymptotic_seed(model, e0, dtau)?;
    solve_from_seed(model, e0, tau0, seed)
}

/// Solves directly when the seed is close enough, otherwise by continuation
/// through log-spaced `Δτ` values from far below the target.
pub fn solve_continued(model: &DensityModel, e0: f64, tau0: f64) -> Result<BipodalSolution> {
    match solve_at(model, e0, tau0) {
        Err(Error::NoConvergence { .. }) => {}
        other => return other,
    }
    let er = model.er_value(e0);
    let taus: Vec<f64> = log_schedule((tau0 - er) * 1e-4, tau0 - er, 25)
        .into_iter()
        .map(|d| er + d)
        .collect();
    let path = continue_along(model, e0, &taus).map_err(|e| e.source)?;
    let mut last = *path.points.last().expect("non-empty schedule");
    last.tau = tau0;
    Ok(last)
}

/// Default upper end of a path: `Δτ = 0.02 D(e0, ζ(e0))`, roughly where the
/// small cluster reaches width 0.02 at leading order.
pub fn default_tau_max(model: &DensityModel, e0: f64) -> Result<f64> {
    let profile = PsiProfile::new(model.reduced_weights(e0)?, e0)?;
    let best = zeta(&profile)?;
    Ok(model.er_value(e0) + 0.02 * profile.denominator(best.e_tilde))
}

/// Starting state for `Δτ` above the curve: `c ≈ Δτ / D(e0, ζ(e0))`.
pub fn asymptotic_seed(model: &DensityModel, e0: f64, dtau: f64) -> Result<State> {
    let (limit, best) = limit_point(model, e0)?;
    let profile = PsiProfile::new(model.reduced_weights(e0)?, e0)?;
    let scale = profile.denominator(best.e_tilde);
    let mut x = limit;
    x[3] = (dtau / scale).clamp(0.0, 0.25);
    Ok(with_edge_density(x, e0))
}

/// Newton from an arbitrary state; no density gating.
pub fn solve_from_seed(model: &DensityModel, e0: f64, tau0: f64, seed: State) -> Result<BipodalSolution> {
    let (x, iters, res) = newton(model, seed, e0, tau0)?;
    BipodalSolution::assemble(model, x, e0, tau0, iters, res)
}

/// Solutions at increasing `τ`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContinuationPath {
    pub points: Vec<BipodalSolution>,
    /// Final `τ` step used to reach each point.
    pub steps: Vec<f64>,
}

/// A continuation that stopped early, with everything solved up to that point.
#[derive(Debug, Clone, PartialEq)]
pub struct PathError {
    pub partial: ContinuationPath,
    pub source: Error,
}

impl std::fmt::Display for PathError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "continuation stopped after {} points: {}",
            self.partial.points.len(),
            self.source
        )
    }
}

impl std::error::Error for PathError {}

/// Uniform steps from the Erdős–Rényi value to `tau_max`.
pub fn continue_path(
    model: &DensityModel,
    e0: f64,
    tau_max: f64,
    n_steps: usize,
) -> Result<ContinuationPath, PathError> {
    let er = model.er_value(e0);
    let taus: Vec<f64> = (1..=n_steps)
        .map(|i| er + (tau_max - er) * i as f64 / n_steps as f64)
        .collect();
    continue_along(model, e0, &taus)
}

/// Log-spaced `Δτ` values between `lo` and `hi` (inclusive).
pub fn log_schedule(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Predictor-corrector through the given `τ` values (strictly increasing).
///
/// The path starts from the `c = 0` limit point; each prediction extrapolates
/// the last two accepted states linearly in `τ`. A failed corrector halves
/// the step.
pub fn continue_along(model: &DensityModel, e0: f64, taus: &[f64]) -> Result<ContinuationPath, PathError> {
    let mut path = ContinuationPath::default();
    let fail = |path: &ContinuationPath, source: Error| PathError {
        partial: path.clone(),
        source,
    };
    if let Some(bad) = taus.windows(2).find(|w| w[1] <= w[0]) {
        return Err(fail(
            &path,
            Error::Domain {
                what: "tau",
                value: bad[1],
                domain: "strictly increasing schedule",
            },
        ));
    }
    let Some(&first) = taus.first() else {
        return Ok(path);
    };
    if let Err(err) = check_above_er(model, e0, first).and_then(|_| check_density(model, e0)) {
        return Err(fail(&path, err));
    }
    let er = model.er_value(e0);
    let (limit, _) = limit_point(model, e0).map_err(|e| fail(&path, e))?;
    // history of accepted (τ, state), starting at the limit point
    let mut prev: (f64, State) = (er, limit);
    let mut last: Option<(f64, State)> = None;

    for &target in taus {
        let mut tau_at = last.map_or(prev.0, |l| l.0);
        let mut step = target - tau_at;
        loop {
            let tau_try = (tau_at + step).min(target);
            let predicted = match last {
                None => {
                    asymptotic_seed(model, e0, tau_try - er).map_err(|e| fail(&path, e))?
                }
                Some((tb, xb)) => {
                    let (ta, xa) = prev;
                    let r = (tau_try - tb) / (tb - ta);
                    let mut x = [0.0; 4];
                    for i in 0..4 {
                        x[i] = xb[i] + r * (xb[i] - xa[i]);
                    }
                    x
                }
            };
            match newton(model, predicted, e0, tau_try) {
                Ok((x, iters, res)) => {
                    if let Some(l) = last {
                        prev = l;
                    }
                    last = Some((tau_try, x));
                    tau_at = tau_try;
                    if tau_try >= target {
                        let sol = BipodalSolution::assemble(model, x, e0, target, iters, res)
                            .map_err(|e| fail(&path, e))?;
                        path.points.push(sol);
                        path.steps.push(step);
                        break;
                    }
                    step = target - tau_at;
                }
                Err(_) => {
                    step *= 0.5;
                    if step < MIN_TAU_STEP {
                        return Err(fail(&path, Error::StepUnderflow { tau: tau_at }));
                    }
                }
            }
        }
    }
    Ok(path)
}

/// CSV for a path: `e, tau, c, p11, p12, p22, alpha, beta, s, newton_iters`.
pub fn path_csv(path: &ContinuationPath) -> String {
    use crate::fmt17;
    let mut out = String::from("e,tau,c,p11,p12,p22,alpha,beta,s,newton_iters\n");
    for p in &path.points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            fmt17(p.e),
            fmt17(p.tau),
            fmt17(p.c),
            fmt17(p.p11),
            fmt17(p.p12),
            fmt17(p.p22),
            fmt17(p.alpha),
            fmt17(p.beta),
            fmt17(p.s),
            p.newton_iters
        ));
    }
    out
}
