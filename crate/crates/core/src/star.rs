//! Star models and the ψ profile.
//!
//! A star model replaces the subgraph density by `τ = Σ_k a_k τ_k` for a
//! polynomial `h(x) = Σ_k a_k x^k` with non-negative coefficients. For a base
//! density `e`, a vanishing cluster whose degree is `ẽ` gains entropy `N(e, ẽ)`
//! and density `D(e, ẽ)` at second order:
//!
//! ```text
//! N(e, ẽ) = 2[S0(ẽ) - S0(e) - S0'(e)(ẽ - e)]
//! D(e, ẽ) = h(ẽ) - h(e) - h'(e)(ẽ - e)
//! ψ(e, ẽ) = N / D,    ψ(e, e) = 2 S0''(e) / h''(e)
//! ```
//!
//! The maximizer `ζ(e)` of `ψ(e, ·)` is the limiting off-diagonal block value
//! of the bipodal optimizer, and the maximum is the limiting multiplier `β`.
//!
//! `N` is evaluated as a negated Bernoulli KL divergence with `ln_1p`, and `D`
//! through a cancellation-free double sum, so the direct branch stays accurate
//! close to `ẽ = e`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graphon::{check_open_unit, s0_derivative_n};

/// Below this distance from `e`, ψ and its derivatives use the Taylor branch.
pub const TAYLOR_SWITCH: f64 = 1e-5;
/// Grid size for the global scan in [`zeta`].
pub const ZETA_GRID: usize = 2048;
/// Two local maxima closer than this in ψ-value make the maximizer non-unique.
pub const UNIQUENESS_GAP: f64 = 1e-9;
/// `|∂β/∂p12|` below this is numerically zero.
pub const BETA_SENSITIVITY_TOL: f64 = 1e-8;
/// `|D''N''' - D'''N''|` below this is numerically zero.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// `|ẽ - e|` below this makes `D(e, ẽ)` vanish to working precision, which
/// zeroes the lower-right block of the bipodal Jacobian.
pub const COINCIDENCE_TOL: f64 = 1e-6;

/// Non-negative polynomial weights `h(x) = Σ_k a_k x^k`, `k ≥ 1`, with some `a_k > 0` for `k ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct StarWeights {
    /// `coeffs[k] = a_k`; `coeffs[0]` is always zero.
    coeffs: Vec<f64>,
}

impl StarWeights {
    /// Builds weights from `(k, a_k)` pairs. Repeated `k` accumulate.
    pub fn new(terms: &[(u32, f64)]) -> Result<Self> {
        let kmax = terms.iter().map(|t| t.0).max().unwrap_or(0) as usize;
        let mut coeffs = vec![0.0; kmax + 1];
        for &(k, a) in terms {
            if k == 0 {
                return Err(Error::InvalidWeights("terms must have k >= 1".into()));
            }
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::InvalidWeights(format!("a_{k} = {a} must be non-negative")));
            }
            coeffs[k as usize] += a;
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.len() < 3 {
            return Err(Error::InvalidWeights(
                "degree must be at least 2 (some a_k > 0 with k >= 2)".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    /// The k-star model, `h(x) = x^k`.
    pub fn kstar(k: u32) -> Result<Self> {
        Self::new(&[(k, 1.0)])
    }

    pub fn degree(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }

    /// `(k, a_k)` for every non-zero coefficient.
    pub fn terms(&self) -> Vec<(u32, f64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(k, a)| (k as u32, *a))
            .collect()
    }

    /// Returns `Some(k)` when `h = x^k` exactly.
    pub fn as_kstar(&self) -> Option<u32> {
        let t = self.terms();
        (t.len() == 1 && t[0].1 == 1.0).then_some(t[0].0)
    }

    /// `h^(order)(x)`.
    pub fn derivative(&self, x: f64, order: u32) -> f64 {
        let mut acc = 0.0;
        for (k, &a) in self.coeffs.iter().enumerate().skip(order as usize) {
            if a == 0.0 {
                continue;
            }
            let falling: f64 = (0..order).map(|j| (k as u32 - j) as f64).product();
            acc += a * falling * x.powi((k as u32 - order) as i32);
        }
        acc
    }

    pub fn h(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    pub fn h1(&self, x: f64) -> f64 {
        self.derivative(x, 1)
    }

    pub fn h2(&self, x: f64) -> f64 {
        self.derivative(x, 2)
    }

    /// `D(e, ẽ)` without cancellation: `δ² Σ_k a_k Σ_{i≤k-2} (k-1-i) ẽ^i e^(k-2-i)`.
    pub fn gap(&self, e: f64, et: f64) -> f64 {
        let d = et - e;
        let mut acc = 0.0;
        for (k, &a) in self.coeffs.iter().enumerate().skip(2) {
            if a == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for i in 0..=(k - 2) {
                inner += (k - 1 - i) as f64 * et.powi(i as i32) * e.powi((k - 2 - i) as i32);
            }
            acc += a * inner;
        }
        d * d * acc
    }

    /// `D'(e, ẽ) = h'(ẽ) - h'(e)` without cancellation.
    pub fn gap_prime(&self, e: f64, et: f64) -> f64 {
        let d = et - e;
        let mut acc = 0.0;
        for (k, &a) in self.coeffs.iter().enumerate().skip(2) {
            if a == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for j in 0..=(k - 2) {
                inner += et.powi(j as i32) * e.powi((k - 2 - j) as i32);
            }
            acc += k as f64 * a * inner;
        }
        d * acc
    }
}

/// `N(e, ẽ) = -KL(ẽ ‖ e)` for Bernoulli distributions.
pub fn entropy_gap(e: f64, et: f64) -> f64 {
    let d = et - e;
    let first = if et == 0.0 { 0.0 } else { et * (d / e).ln_1p() };
    let second = if et == 1.0 {
        0.0
    } else {
        (1.0 - et) * (-d / (1.0 - e)).ln_1p()
    };
    -(first + second)
}

/// `N'(e, ẽ) = 2[S0'(ẽ) - S0'(e)]`.
pub fn entropy_gap_prime(e: f64, et: f64) -> f64 {
    let d = et - e;
    (-d / (1.0 - e)).ln_1p() - (d / e).ln_1p()
}

/// ψ for a fixed model and base density.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiProfile {
    weights: StarWeights,
    e: f64,
}

/// Result of the global maximization of `ψ(e, ·)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiMax {
    /// The maximizer `ζ(e)`.
    pub e_tilde: f64,
    /// The critical value `ψ(e, ζ(e))`.
    pub beta: f64,
    pub unique: bool,
    /// ψ-gap between the best and second-best local maximum (infinite when there is only one).
    pub second_max_gap: f64,
}

impl PsiProfile {
    pub fn new(weights: StarWeights, e: f64) -> Result<Self> {
        check_open_unit(e, "e").map_err(|_| Error::Domain {
            what: "e",
            value: e,
            domain: "(0, 1)",
        })?;
        Ok(Self { weights, e })
    }

    pub fn kstar(k: u32, e: f64) -> Result<Self> {
        Self::new(StarWeights::kstar(k)?, e)
    }

    pub fn e(&self) -> f64 {
        self.e
    }

    pub fn weights(&self) -> &StarWeights {
        &self.weights
    }

    /// `N(e, ẽ)`.
    pub fn numerator(&self, et: f64) -> f64 {
        entropy_gap(self.e, et)
    }

    /// `D(e, ẽ)`.
    pub fn denominator(&self, et: f64) -> f64 {
        self.weights.gap(self.e, et)
    }

    /// `ψ(e, e) = 2 S0''(e) / h''(e)`.
    pub fn diagonal_value(&self) -> f64 {
        2.0 * s0_derivative_n(self.e, 2) / self.weights.h2(self.e)
    }

    /// `ψ(e, ẽ)`.
    pub fn psi(&self, et: f64) -> Result<f64> {
        check_open_unit(et, "e_tilde").map_err(|_| Error::Domain {
            what: "e_tilde",
            value: et,
            domain: "(0, 1)",
        })?;
        Ok(if (et - self.e).abs() < TAYLOR_SWITCH {
            self.taylor(et - self.e)[0]
        } else {
            self.psi_direct(et)
        })
    }

    /// Direct `N/D` evaluation; no branch switch.
    pub fn psi_direct(&self, et: f64) -> f64 {
        self.numerator(et) / self.denominator(et)
    }

    /// First or second `ẽ`-derivative of ψ by the quotient rule.
    pub fn psi_prime(&self, et: f64, order: u32) -> Result<f64> {
        check_open_unit(et, "e_tilde").map_err(|_| Error::Domain {
            what: "e_tilde",
            value: et,
            domain: "(0, 1)",
        })?;
        if !(1..=2).contains(&order) {
            return Err(Error::Domain {
                what: "order",
                value: order as f64,
                domain: "{1, 2}",
            });
        }
        if (et - self.e).abs() < TAYLOR_SWITCH {
            return Ok(self.taylor(et - self.e)[order as usize]);
        }
        let (n, n1, n2) = (
            self.numerator(et),
            entropy_gap_prime(self.e, et),
            2.0 * s0_derivative_n(et, 2),
        );
        let (d, d1, d2) = (
            self.denominator(et),
            self.weights.gap_prime(self.e, et),
            self.weights.h2(et),
        );
        let first = (d * n1 - n * d1) / (d * d);
        Ok(if order == 1 {
            first
        } else {
            (d * n2 - n * d2) / (d * d) - 2.0 * d1 * first / d
        })
    }

    /// ψ, ψ', ψ'' from the Taylor expansions of `N` and `D` about `ẽ = e`
    /// (terms through `(ẽ - e)^6`).
    fn taylor(&self, delta: f64) -> [f64; 3] {
        const TERMS: usize = 5; // m = 2..=6
        let mut a = [0.0; TERMS];
        let mut b = [0.0; TERMS];
        let mut fact = 1.0;
        for m in 2..(2 + TERMS) {
            fact *= m as f64;
            a[m - 2] = 2.0 * s0_derivative_n(self.e, m as u32) / fact;
            b[m - 2] = self.weights.derivative(self.e, m as u32) / fact;
        }
        let poly = |c: &[f64; TERMS], order: usize| -> f64 {
            let mut acc = 0.0;
            for (j, cj) in c.iter().enumerate().skip(order) {
                let falling: f64 = (0..order).map(|t| (j - t) as f64).product();
                acc += cj * falling * delta.powi((j - order) as i32);
            }
            acc
        };
        let (p, p1, p2) = (poly(&a, 0), poly(&a, 1), poly(&a, 2));
        let (q, q1, q2) = (poly(&b, 0), poly(&b, 1), poly(&b, 2));
        let f = p / q;
        let f1 = (p1 * q - p * q1) / (q * q);
        let f2 = (p2 * q - p * q2) / (q * q) - 2.0 * q1 * f1 / q;
        [f, f1, f2]
    }

    /// `∂(N'/D')/∂ẽ = (D'N'' - N'D'') / D'²`, the sensitivity of the multiplier `β = N'/D'`.
    pub fn beta_sensitivity(&self, et: f64) -> Result<f64> {
        check_open_unit(et, "e_tilde").map_err(|_| Error::Domain {
            what: "e_tilde",
            value: et,
            domain: "(0, 1)",
        })?;
        let d1 = self.weights.gap_prime(self.e, et);
        if d1 == 0.0 {
            return Err(Error::Singular(format!("D' vanishes at e_tilde = {et}")));
        }
        let n1 = entropy_gap_prime(self.e, et);
        let n2 = 2.0 * s0_derivative_n(et, 2);
        let d2 = self.weights.h2(et);
        Ok((d1 * n2 - n1 * d2) / (d1 * d1))
    }

    /// `D''(ẽ)N'''(ẽ) - D'''(ẽ)N''(ẽ)`; depends on `e` only through the weights.
    pub fn degeneracy(&self, et: f64) -> f64 {
        degeneracy(&self.weights, et)
    }
}

/// `D''N''' - D'''N''` evaluated at `x`.
pub fn degeneracy(weights: &StarWeights, x: f64) -> f64 {
    weights.h2(x) * 2.0 * s0_derivative_n(x, 3) - weights.derivative(x, 3) * 2.0 * s0_derivative_n(x, 2)
}

/// Roots in `(0,1)` of `D''N''' = D'''N''`, located on the polynomial
/// `h''(x)(1 - 2x) + h'''(x) x(1 - x)` (the condition times `x²(1-x)²`).
pub fn degenerate_roots(weights: &StarWeights) -> Vec<f64> {
    let f = |x: f64| weights.h2(x) * (1.0 - 2.0 * x) + weights.derivative(x, 3) * x * (1.0 - x);
    let n = 4096;
    let mut roots = Vec::new();
    let mut prev_x = 1e-9;
    let mut prev = f(prev_x);
    for i in 1..=n {
        let x = if i == n { 1.0 - 1e-9 } else { i as f64 / n as f64 };
        let v = f(x);
        if v == 0.0 {
            roots.push(x);
        } else if prev != 0.0 && prev.signum() != v.signum() {
            let (mut lo, mut hi) = (prev_x, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid).signum() == f(lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev = v;
    }
    roots
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, width: f64) -> f64 {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > width {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    0.5 * (a + b)
}

/// Outermost points of the ζ search.
const EDGE: f64 = 1e-15;

/// Global maximizer of `ψ(e, ·)` on `(0,1)`.
///
/// Scans a uniform grid, refines each local-maximum bracket by golden section,
/// polishes with Newton on `ψ'`, and reports whether the best maximum is unique.
pub fn zeta(profile: &PsiProfile) -> Result<PsiMax> {
    let n = ZETA_GRID;
    let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let psi = |x: f64| profile.psi(x).unwrap_or(f64::NEG_INFINITY);
    let vals: Vec<f64> = xs.iter().map(|&x| psi(x)).collect();

    let mut brackets = Vec::new();
    for i in 0..n {
        let left = if i == 0 { f64::NEG_INFINITY } else { vals[i - 1] };
        let right = if i + 1 == n { f64::NEG_INFINITY } else { vals[i + 1] };
        if vals[i] >= left && vals[i] >= right && (vals[i] > left || vals[i] > right) {
            let lo = if i == 0 { EDGE } else { xs[i - 1] };
            let hi = if i + 1 == n { 1.0 - EDGE } else { xs[i + 1] };
            brackets.push((lo, hi));
        }
    }

    let mut maxima: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in brackets {
        // logit coordinates resolve maxima within 1e-10 of an end
        let logit = |x: f64| (x / (1.0 - x)).ln();
        let on_logit = |u: f64| psi(1.0 / (1.0 + (-u).exp()));
        let u = golden_max(&on_logit, logit(lo), logit(hi), 1e-12);
        let mut x = 1.0 / (1.0 + (-u).exp());
        for _ in 0..30 {
            let (Ok(g1), Ok(g2)) = (profile.psi_prime(x, 1), profile.psi_prime(x, 2)) else {
                break;
            };
            if g2 >= 0.0 {
                break;
            }
            let next = x - g1 / g2;
            if !(next > lo && next < hi) {
                break;
            }
            let step = (next - x).abs();
            x = next;
            if step < 1e-16 {
                break;
            }
        }
        // maxima pinned to the boundary are not interior critical points
        if x <= 10.0 * EDGE || x >= 1.0 - 10.0 * EDGE {
            continue;
        }
        let v = psi(x);
        if !maxima.iter().any(|m| (m.0 - x).abs() < 1e-7) {
            maxima.push((x, v));
        }
    }
    if maxima.is_empty() {
        return Err(Error::Profile(format!(
            "psi(e = {}, ·) has no interior maximum",
            profile.e
        )));
    }
    maxima.sort_by(|a, b| b.1.total_cmp(&a.1));
    let gap = if maxima.len() > 1 {
        maxima[0].1 - maxima[1].1
    } else {
        f64::INFINITY
    };
    Ok(PsiMax {
        e_tilde: maxima[0].0,
        beta: maxima[0].1,
        unique: gap > UNIQUENESS_GAP,
        second_max_gap: gap,
    })
}

/// One row of a bad-value scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BadValueRow {
    pub e: f64,
    pub unique_max: bool,
    pub e_tilde: f64,
    pub beta: f64,
    /// `∂β/∂p12` at `ẽ`; NaN when `ẽ` coincides with `e`.
    pub beta_sens: f64,
    /// `D''N''' - D'''N''` at `ẽ`.
    pub degeneracy: f64,
    pub flagged: bool,
    /// `ẽ` lies in the window `[1/2, (k_max-1)/k_max]` where degenerate points can occur.
    pub in_degenerate_window: bool,
}

/// The window `[1/2, (k_max - 1)/k_max]` that contains every degenerate `ẽ`.
pub fn degenerate_window(weights: &StarWeights) -> (f64, f64) {
    let k = weights.degree() as f64;
    (0.5, (k - 1.0) / k)
}

/// Classifies one density.
pub fn classify(weights: StarWeights, e: f64) -> Result<BadValueRow> {
    let profile = PsiProfile::new(weights, e)?;
    let window = degenerate_window(profile.weights());
    let best = zeta(&profile)?;
    let et = best.e_tilde;
    let coincident = (et - e).abs() < COINCIDENCE_TOL;
    let beta_sens = if coincident {
        f64::NAN
    } else {
        profile.beta_sensitivity(et).unwrap_or(f64::NAN)
    };
    let degeneracy = profile.degeneracy(et);
    let flagged = !best.unique
        || coincident
        || !beta_sens.is_finite()
        || beta_sens.abs() < BETA_SENSITIVITY_TOL
        || degeneracy.abs() < DEGENERACY_TOL;
    Ok(BadValueRow {
        e,
        unique_max: best.unique,
        e_tilde: et,
        beta: best.beta,
        beta_sens,
        degeneracy,
        flagged,
        in_degenerate_window: et >= window.0 - 1e-12 && et <= window.1 + 1e-12,
    })
}

/// Scans a density grid with `e`-dependent weights (e.g. `a_k = n_k e^(ℓ-k)`).
pub fn bad_value_scan<F>(weights_at: F, grid: &[f64]) -> Result<Vec<BadValueRow>>
where
    F: Fn(f64) -> Result<StarWeights> + Sync,
{
    grid.par_iter()
        .map(|&e| classify(weights_at(e)?, e))
        .collect()
}

/// CSV for a bad-value scan: `e, unique_max, e_tilde, beta, beta_sens, flagged`.
pub fn bad_value_csv(rows: &[BadValueRow]) -> String {
    let mut out = String::from("e,unique_max,e_tilde,beta,beta_sens,flagged\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            crate::fmt17(r.e),
            r.unique_max as u8,
            crate::fmt17(r.e_tilde),
            crate::fmt17(r.beta),
            crate::fmt17(r.beta_sens),
            r.flagged as u8
        ));
    }
    out
}
