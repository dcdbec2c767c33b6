//! Multipodal (step-function) graphons and the exact quantities on them:
//! edge and k-star densities, entropy, the degree function, and the
//! analytic partial derivatives used by every optimizer in the crate.
//!
//! An `M`-podal graphon is described by cluster widths `c_i` summing to one
//! and a symmetric matrix of block values `p_ij`. On such a graphon
//!
//! * `e(g) = Σ_ij c_i c_j p_ij`,
//! * `d_i = Σ_j c_j p_ij` is the degree of cluster `i`,
//! * `τ_k(g) = Σ_i c_i d_i^k`,
//! * `s(g) = Σ_ij c_i c_j S0(p_ij)` with `S0(w) = -½[w ln w + (1-w) ln(1-w)]`.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Tolerance on `Σ c_i = 1` after normalization.
pub const WIDTH_SUM_TOL: f64 = 1e-12;

/// The entropy density `S0(w) = -½[w ln w + (1-w) ln(1-w)]`, with `S0(0) = S0(1) = 0`.
pub fn s0(w: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::Domain {
            what: "w",
            value: w,
            domain: "[0, 1]",
        });
    }
    Ok(s0_unchecked(w))
}

pub(crate) fn s0_unchecked(w: f64) -> f64 {
    -0.5 * (xlogx(w) + xlogx(1.0 - w))
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Exact derivative of [`s0`] of order 1, 2 or 3.
///
/// Derivatives are singular at the endpoints and report an error there
/// instead of clamping.
pub fn s0_derivative(w: f64, order: u32) -> Result<f64> {
    if !(1..=3).contains(&order) {
        return Err(Error::Domain {
            what: "order",
            value: order as f64,
            domain: "{1, 2, 3}",
        });
    }
    check_open_unit(w, "w")?;
    Ok(s0_derivative_n(w, order))
}

/// Any derivative of `S0` on the open interval, no domain check.
///
/// For `m ≥ 2`: `S0^(m)(w) = -½ (m-2)! [(-1)^m / w^(m-1) + 1/(1-w)^(m-1)]`.
pub(crate) fn s0_derivative_n(w: f64, order: u32) -> f64 {
    match order {
        0 => s0_unchecked(w),
        1 => 0.5 * ((1.0 - w) / w).ln(),
        m => {
            let fact: f64 = (1..=(m - 2)).map(f64::from).product();
            let p = (m - 1) as i32;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            -0.5 * fact * (sign / w.powi(p) + 1.0 / (1.0 - w).powi(p))
        }
    }
}

/// `S0'(w)`, unchecked. Finite on the open interval only.
pub(crate) fn s0_prime(w: f64) -> f64 {
    0.5 * ((1.0 - w) / w).ln()
}

/// Inverse of `S0'`: the unique `w ∈ (0,1)` with `S0'(w) = y`.
pub fn s0_prime_inverse(y: f64) -> f64 {
    1.0 / (1.0 + (2.0 * y).exp())
}

pub(crate) fn check_open_unit(w: f64, what: &'static str) -> Result<()> {
    if w > 0.0 && w < 1.0 {
        Ok(())
    } else if w == 0.0 || w == 1.0 {
        Err(Error::Singular(format!("{what} = {w} is an endpoint of (0, 1)")))
    } else {
        Err(Error::Domain {
            what,
            value: w,
            domain: "(0, 1)",
        })
    }
}

/// A step-function graphon on `M` clusters.
///
/// Values are immutable once built; every constructor validates the
/// invariants (non-negative widths summing to one, symmetric blocks in `[0,1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct MultipodalGraphon {
    widths: Vec<f64>,
    /// Row-major `M × M`, symmetric.
    blocks: Vec<f64>,
}

impl MultipodalGraphon {
    /// Builds a graphon from widths (normalized here) and a full symmetric block matrix.
    pub fn new(widths: Vec<f64>, blocks: Vec<Vec<f64>>) -> Result<Self> {
        let m = widths.len();
        if m == 0 {
            return Err(Error::InvalidGraphon("at least one cluster is required".into()));
        }
        if blocks.len() != m || blocks.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidGraphon(format!(
                "block matrix must be {m}×{m}"
            )));
        }
        let flat: Vec<f64> = blocks.into_iter().flatten().collect();
        for i in 0..m {
            for j in 0..i {
                if flat[i * m + j] != flat[j * m + i] {
                    return Err(Error::InvalidGraphon(format!(
                        "blocks not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Self::from_parts(widths, flat)
    }

    /// Builds a graphon from widths and the upper triangle, row by row
    /// (`p_11 … p_1M, p_22 … p_2M, …, p_MM`).
    pub fn from_upper(widths: Vec<f64>, upper: &[f64]) -> Result<Self> {
        let m = widths.len();
        if upper.len() != m * (m + 1) / 2 {
            return Err(Error::InvalidGraphon(format!(
                "expected {} upper-triangle values, got {}",
                m * (m + 1) / 2,
                upper.len()
            )));
        }
        let mut flat = vec![0.0; m * m];
        let mut it = upper.iter();
        for i in 0..m {
            for j in i..m {
                let v = *it.next().expect("length checked");
                flat[i * m + j] = v;
                flat[j * m + i] = v;
            }
        }
        Self::from_parts(widths, flat)
    }

    pub(crate) fn from_parts(mut widths: Vec<f64>, blocks: Vec<f64>) -> Result<Self> {
        let m = widths.len();
        if m == 0 {
            return Err(Error::InvalidGraphon("at least one cluster is required".into()));
        }
        if let Some(w) = widths.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidGraphon(format!("negative or non-finite width {w}")));
        }
        let total: f64 = widths.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidGraphon("widths sum to zero".into()));
        }
        for w in &mut widths {
            *w /= total;
        }
        if let Some(p) = blocks.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidGraphon(format!("block value {p} outside [0, 1]")));
        }
        debug_assert!((widths.iter().sum::<f64>() - 1.0).abs() < WIDTH_SUM_TOL);
        Ok(Self { widths, blocks })
    }

    /// The constant graphon `g ≡ p`.
    pub fn constant(p: f64) -> Result<Self> {
        Self::from_parts(vec![1.0], vec![p])
    }

    /// Bipodal graphon with a first cluster of width `c`.
    pub fn bipodal(c: f64, p11: f64, p12: f64, p22: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Domain {
                what: "c",
                value: c,
                domain: "[0, 1]",
            });
        }
        Self::from_parts(vec![c, 1.0 - c], vec![p11, p12, p12, p22])
    }

    pub fn podality(&self) -> usize {
        self.widths.len()
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.blocks[i * self.widths.len() + j]
    }

    /// Upper-triangle block values, row by row.
    pub fn upper(&self) -> Vec<f64> {
        let m = self.podality();
        let mut out = Vec::with_capacity(m * (m + 1) / 2);
        for i in 0..m {
            for j in i..m {
                out.push(self.p(i, j));
            }
        }
        out
    }

    /// Degree of each cluster, `d_i = Σ_j c_j p_ij`.
    pub fn degrees(&self) -> DegreeVector {
        let m = self.podality();
        let d = (0..m)
            .map(|i| (0..m).map(|j| self.widths[j] * self.p(i, j)).sum())
            .collect();
        DegreeVector(d)
    }

    /// Value of the graphon at `(x, y) ∈ [0,1]²` with clusters laid out left to right.
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        self.p(self.cluster_of(x), self.cluster_of(y))
    }

    fn cluster_of(&self, x: f64) -> usize {
        let mut acc = 0.0;
        for (i, w) in self.widths.iter().enumerate() {
            acc += w;
            if x < acc {
                return i;
            }
        }
        self.podality() - 1
    }

    /// Same graphon with clusters sorted by descending width, ties broken by descending degree.
    pub fn canonical(&self) -> Self {
        let m = self.podality();
        let d = self.degrees();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            self.widths[b]
                .total_cmp(&self.widths[a])
                .then(d.0[b].total_cmp(&d.0[a]))
        });
        self.permuted(&order)
    }

    /// Relabels clusters: new cluster `i` is old cluster `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let m = self.podality();
        assert_eq!(order.len(), m, "permutation length");
        let widths = order.iter().map(|&i| self.widths[i]).collect();
        let mut blocks = vec![0.0; m * m];
        for (a, &i) in order.iter().enumerate() {
            for (b, &j) in order.iter().enumerate() {
                blocks[a * m + b] = self.p(i, j);
            }
        }
        Self { widths, blocks }
    }

    /// Splits cluster `i` into two clusters with identical rows; the first gets `fraction` of its width.
    pub fn split_cluster(&self, i: usize, fraction: f64) -> Self {
        let m = self.podality();
        let mut widths = self.widths.clone();
        let w = widths[i];
        widths[i] = w * fraction;
        widths.push(w * (1.0 - fraction));
        let src = |a: usize| if a == m { i } else { a };
        let n = m + 1;
        let mut blocks = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                blocks[a * n + b] = self.p(src(a), src(b));
            }
        }
        Self { widths, blocks }
    }

    /// Drops clusters narrower than `width_tol`, then merges clusters whose rows agree
    /// within `row_tol` (on the surviving columns). Merged rows are width-weighted averages.
    pub fn merged(&self, row_tol: f64, width_tol: f64) -> Self {
        let m = self.podality();
        let mut keep: Vec<usize> = (0..m).filter(|&i| self.widths[i] > width_tol).collect();
        if keep.is_empty() {
            // degenerate input; keep the widest cluster
            let widest = (0..m)
                .max_by(|&a, &b| self.widths[a].total_cmp(&self.widths[b]))
                .expect("m >= 1");
            keep.push(widest);
        }
        // Group clusters greedily by row similarity.
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for &i in &keep {
            let found = groups.iter_mut().find(|g| {
                let r = g[0];
                keep.iter()
                    .all(|&j| (self.p(i, j) - self.p(r, j)).abs() <= row_tol)
            });
            match found {
                Some(g) => g.push(i),
                None => groups.push(vec![i]),
            }
        }
        let n = groups.len();
        let gw: Vec<f64> = groups
            .iter()
            .map(|g| g.iter().map(|&i| self.widths[i]).sum())
            .collect();
        let mut blocks = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let mut acc = 0.0;
                for &i in &groups[a] {
                    for &j in &groups[b] {
                        acc += self.widths[i] * self.widths[j] * self.p(i, j);
                    }
                }
                blocks[a * n + b] = (acc / (gw[a] * gw[b])).clamp(0.0, 1.0);
            }
        }
        Self::from_parts(gw, blocks).expect("merged graphon is valid")
    }

    /// Weights `A_ij` in `∂e/∂p_ij`: `c_i²` on the diagonal, `2 c_i c_j` off it.
    pub fn pair_weight(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.widths[i] * self.widths[i]
        } else {
            2.0 * self.widths[i] * self.widths[j]
        }
    }
}

/// Cluster degrees `d_i = Σ_j c_j p_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector(pub Vec<f64>);

impl DegreeVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Graphon entropy in nats; lies in `[0, ln(2)/2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EntropyValue(pub f64);

impl EntropyValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn edge_density(g: &MultipodalGraphon) -> f64 {
    let m = g.podality();
    let c = g.widths();
    let mut e = 0.0;
    for i in 0..m {
        for j in 0..m {
            e += c[i] * c[j] * g.p(i, j);
        }
    }
    e
}

/// `τ_k(g) = Σ_i c_i d_i^k`. For `k = 1` this is the edge density.
pub fn kstar_density(g: &MultipodalGraphon, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain {
            what: "k",
            value: 0.0,
            domain: "k >= 1",
        });
    }
    let d = g.degrees();
    Ok(g
        .widths()
        .iter()
        .zip(&d.0)
        .map(|(c, d)| c * d.powi(k as i32))
        .sum())
}

pub fn entropy(g: &MultipodalGraphon) -> EntropyValue {
    let m = g.podality();
    let c = g.widths();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            s += c[i] * c[j] * s0_unchecked(g.p(i, j));
        }
    }
    EntropyValue(s)
}

/// Partial derivatives of `e`, `τ_k`, `s` and `C = Σ c_i` with respect to the
/// graphon parameters. Block derivatives are indexed by `(i, j)` with `i ≤ j`
/// meaningful (the matrices are stored symmetric).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub de_dp: Vec<Vec<f64>>,
    pub de_dc: Vec<f64>,
    pub dtau_dp: Vec<Vec<f64>>,
    pub dtau_dc: Vec<f64>,
    pub ds_dp: Vec<Vec<f64>>,
    pub ds_dc: Vec<f64>,
    pub dcsum_dc: Vec<f64>,
}

/// Analytic gradients for the edge / k-star / entropy functionals.
///
/// Requires every block value strictly inside `(0,1)` since `∂s/∂p` involves `S0'`.
pub fn gradients(g: &MultipodalGraphon, k: u32) -> Result<Gradients> {
    if k == 0 {
        return Err(Error::Domain {
            what: "k",
            value: 0.0,
            domain: "k >= 1",
        });
    }
    let m = g.podality();
    for i in 0..m {
        for j in i..m {
            check_open_unit(g.p(i, j), "p_ij")?;
        }
    }
    let c = g.widths();
    let d = g.degrees().0;
    let kf = k as f64;
    let dk1: Vec<f64> = d.iter().map(|x| x.powi(k as i32 - 1)).collect();

    let mut de_dp = vec![vec![0.0; m]; m];
    let mut dtau_dp = vec![vec![0.0; m]; m];
    let mut ds_dp = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let a = g.pair_weight(i, j);
            de_dp[i][j] = a;
            dtau_dp[i][j] = 0.5 * kf * (dk1[i] + dk1[j]) * a;
            ds_dp[i][j] = s0_prime(g.p(i, j)) * a;
        }
    }
    let mut de_dc = vec![0.0; m];
    let mut dtau_dc = vec![0.0; m];
    let mut ds_dc = vec![0.0; m];
    for i in 0..m {
        de_dc[i] = 2.0 * d[i];
        dtau_dc[i] =
            d[i].powi(k as i32) + kf * (0..m).map(|j| c[j] * dk1[j] * g.p(i, j)).sum::<f64>();
        ds_dc[i] = 2.0 * (0..m).map(|j| c[j] * s0_unchecked(g.p(i, j))).sum::<f64>();
    }
    Ok(Gradients {
        de_dp,
        de_dc,
        dtau_dp,
        dtau_dc,
        ds_dp,
        ds_dc,
        dcsum_dc: vec![1.0; m],
    })
}

/// Writes the plain-text graphon format: `M`, the widths, then the upper triangle row by row.
pub fn write_graphon(g: &MultipodalGraphon) -> String {
    let m = g.podality();
    let mut out = String::new();
    let _ = writeln!(out, "{m}");
    let widths: Vec<String> = g.widths().iter().map(|w| format!("{w:e}")).collect();
    let _ = writeln!(out, "{}", widths.join(" "));
    for i in 0..m {
        let row: Vec<String> = (i..m).map(|j| format!("{:e}", g.p(i, j))).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

/// Parses the format produced by [`write_graphon`]. Lines after the
/// `M + 2` data lines are ignored (reports append a metadata footer there).
pub fn read_graphon(text: &str) -> Result<MultipodalGraphon> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let m: usize = parse_field(lines.next(), "podality")?;
    if m == 0 {
        return Err(Error::Format("podality must be positive".into()));
    }
    let widths = parse_row(lines.next(), m, "widths")?;
    let mut upper = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        upper.extend(parse_row(lines.next(), m - i, "block row")?);
    }
    MultipodalGraphon::from_upper(widths, &upper)
}

fn parse_field<T: FromStr>(line: Option<&str>, what: &str) -> Result<T> {
    line.ok_or_else(|| Error::Format(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Format(format!("cannot parse {what}")))
}

fn parse_row(line: Option<&str>, n: usize, what: &str) -> Result<Vec<f64>> {
    let line = line.ok_or_else(|| Error::Format(format!("missing {what}")))?;
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Format(format!("{what}: {e}")))?;
    if vals.len() != n {
        return Err(Error::Format(format!(
            "{what}: expected {n} values, got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn s0_values() {
        assert_eq!(s0(0.0).unwrap(), 0.0);
        assert_eq!(s0(1.0).unwrap(), 0.0);
        assert_relative_eq!(s0(0.5).unwrap(), std::f64::consts::LN_2 / 2.0, epsilon = 1e-15);
        assert!(matches!(s0(1.5), Err(Error::Domain { .. })));
        assert!(matches!(s0(-0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn s0_derivative_values() {
        assert_eq!(s0_derivative(0.5, 1).unwrap(), 0.0);
        assert_relative_eq!(s0_derivative(0.5, 2).unwrap(), -2.0, epsilon = 1e-15);
        assert_relative_eq!(
            s0_derivative(0.3, 1).unwrap(),
            0.5 * (7.0f64 / 3.0).ln(),
            epsilon = 1e-15
        );
        // central difference of s0
        let h = 1e-6;
        let fd = (s0(0.3 + h).unwrap() - s0(0.3 - h).unwrap()) / (2.0 * h);
        assert_relative_eq!(s0_derivative(0.3, 1).unwrap(), fd, max_relative = 1e-8);
        assert_relative_eq!(s0_derivative(0.3, 1).unwrap(), 0.42364893019360184, epsilon = 1e-12);
        assert!(matches!(s0_derivative(0.0, 1), Err(Error::Singular(_))));
        assert!(matches!(s0_derivative(1.0, 2), Err(Error::Singular(_))));
    }

    #[test]
    fn higher_derivatives_match_differences() {
        for &w in &[0.1, 0.37, 0.8] {
            for m in 2..=6 {
                let h = 1e-5;
                let fd = (s0_derivative_n(w + h, m - 1) - s0_derivative_n(w - h, m - 1)) / (2.0 * h);
                assert_relative_eq!(s0_derivative_n(w, m), fd, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn s0_prime_inverse_roundtrip() {
        for &w in &[0.01, 0.3, 0.5, 0.927, 0.999] {
            assert_relative_eq!(s0_prime_inverse(s0_prime(w)), w, max_relative = 1e-12);
        }
    }

    #[test]
    fn densities_of_simple_graphons() {
        let g = MultipodalGraphon::constant(0.4).unwrap();
        assert_relative_eq!(edge_density(&g), 0.4);
        for k in 1..6 {
            assert_relative_eq!(kstar_density(&g, k).unwrap(), 0.4f64.powi(k as i32), epsilon = 1e-15);
        }
        let checker = MultipodalGraphon::bipodal(0.5, 1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(edge_density(&checker), 0.5);
        assert_relative_eq!(kstar_density(&checker, 2).unwrap(), 0.25);
        let drop = MultipodalGraphon::bipodal(0.0, 0.123, 0.9, 0.7).unwrap();
        assert_relative_eq!(edge_density(&drop), 0.7);
        assert_relative_eq!(kstar_density(&drop, 1).unwrap(), edge_density(&drop));
    }

    #[test]
    fn kstar_density_by_grid_integration() {
        let g = MultipodalGraphon::bipodal(0.5, 1.0, 0.0, 1.0).unwrap();
        let n = 1000;
        let mut acc = 0.0;
        for a in 0..n {
            let x = (a as f64 + 0.5) / n as f64;
            let d: f64 = (0..n)
                .map(|b| g.value_at(x, (b as f64 + 0.5) / n as f64))
                .sum::<f64>()
                / n as f64;
            acc += d * d;
        }
        assert_relative_eq!(acc / n as f64, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn entropy_values() {
        let half = std::f64::consts::LN_2 / 2.0;
        assert_relative_eq!(entropy(&MultipodalGraphon::constant(0.5).unwrap()).0, half);
        assert_eq!(entropy(&MultipodalGraphon::constant(0.0).unwrap()).0, 0.0);
        let g = MultipodalGraphon::bipodal(0.5, 0.5, 0.0, 0.5).unwrap();
        assert_relative_eq!(entropy(&g).0, 0.5 * half, epsilon = 1e-15);
        // midpoint quadrature on a grid aligned with the cluster boundary
        let n = 200;
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                let (x, y) = ((a as f64 + 0.5) / n as f64, (b as f64 + 0.5) / n as f64);
                acc += s0(g.value_at(x, y)).unwrap();
            }
        }
        assert_relative_eq!(acc / (n * n) as f64, 0.17328679513998632, epsilon = 1e-12);
    }

    #[test]
    fn gradient_closed_forms() {
        let g = MultipodalGraphon::from_upper(vec![0.2, 0.3, 0.5], &[0.4; 6]).unwrap();
        let gr = gradients(&g, 3).unwrap();
        for i in 0..3 {
            assert_relative_eq!(gr.de_dc[i], 0.8, epsilon = 1e-15);
            let d = g.degrees().0[i];
            let c = g.widths()[i];
            assert_relative_eq!(gr.dtau_dp[i][i], 3.0 * d * d * c * c, epsilon = 1e-15);
        }
        let edge = MultipodalGraphon::bipodal(0.3, 0.0, 0.5, 0.5).unwrap();
        assert!(matches!(gradients(&edge, 2), Err(Error::Singular(_))));
    }

    #[test]
    fn construction_errors() {
        assert!(MultipodalGraphon::new(vec![], vec![]).is_err());
        assert!(MultipodalGraphon::new(vec![0.5, 0.5], vec![vec![0.1, 0.2], vec![0.3, 0.1]]).is_err());
        assert!(MultipodalGraphon::new(vec![-0.5, 1.5], vec![vec![0.1, 0.2], vec![0.2, 0.1]]).is_err());
        assert!(MultipodalGraphon::from_upper(vec![1.0, 1.0], &[0.1, 1.2, 0.3]).is_err());
        let g = MultipodalGraphon::from_upper(vec![2.0, 6.0], &[0.1, 0.2, 0.3]).unwrap();
        assert_relative_eq!(g.widths()[0], 0.25);
        assert!((g.widths().iter().sum::<f64>() - 1.0).abs() < WIDTH_SUM_TOL);
    }

    #[test]
    fn canonical_order() {
        let g = MultipodalGraphon::from_upper(vec![0.2, 0.5, 0.3], &[0.9, 0.1, 0.2, 0.5, 0.4, 0.6]).unwrap();
        let c = g.canonical();
        assert_eq!(c.widths(), &[0.5, 0.3, 0.2]);
        assert_relative_eq!(edge_density(&c), edge_density(&g), epsilon = 1e-15);
        // ties broken by descending degree
        let t = MultipodalGraphon::bipodal(0.5, 0.1, 0.2, 0.9).unwrap().canonical();
        assert!(t.degrees().0[0] > t.degrees().0[1]);
    }

    #[test]
    fn text_format_roundtrip() {
        let g = MultipodalGraphon::from_upper(vec![0.1, 0.2, 0.7], &[0.11, 0.2, 1.0 / 3.0, 0.4, 0.5, 0.6]).unwrap();
        let text = write_graphon(&g);
        let back = read_graphon(&text).unwrap();
        for (a, b) in g.widths().iter().zip(back.widths()) {
            assert!((a - b).abs() <= 1e-15);
        }
        for (a, b) in g.upper().iter().zip(back.upper()) {
            assert!((a - b).abs() <= 1e-15);
        }
        assert!(read_graphon("2\n0.5 0.5\n0.1 0.2\n").is_err());
        assert!(read_graphon("x").is_err());
    }

    #[test]
    fn merging_identical_rows() {
        let g = MultipodalGraphon::bipodal(0.3, 0.8, 0.2, 0.4).unwrap();
        let split = g.split_cluster(1, 0.25);
        let back = split.merged(1e-12, 1e-12);
        assert_eq!(back.podality(), 2);
        assert_relative_eq!(entropy(&back).0, entropy(&g).0, epsilon = 1e-14);
    }
}
