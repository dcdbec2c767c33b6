//! Fixed subgraphs `H`: degree data, exact homomorphism densities on
//! multipodal graphons, and the reduction of `H` to a star model.
//!
//! `τ_H(g) = Σ_φ Π_v c_φ(v) Π_(u,w) p_φ(u)φ(w)` over all maps `φ` from the
//! vertices of `H` to clusters. The sum is evaluated by variable elimination
//! along a greedy (min-degree) order, which is a tensor contraction over the
//! induced tree decomposition of `H`. A brute-force assignment sum is kept as
//! an oracle.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graphon::{kstar_density, MultipodalGraphon};
use crate::star::{zeta, PsiProfile, StarWeights};

/// A simple graph `H` with at least two edges and a vertex of degree at least two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgraphSpec {
    vertices: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<u32>,
}

impl SubgraphSpec {
    pub fn new(vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        let mut degrees = vec![0u32; vertices];
        let mut norm = Vec::with_capacity(edges.len());
        for &(u, w) in edges {
            if u >= vertices || w >= vertices {
                return Err(Error::InvalidSubgraph(format!(
                    "edge ({u}, {w}) references a vertex outside 0..{vertices}"
                )));
            }
            if u == w {
                return Err(Error::InvalidSubgraph(format!("loop at vertex {u}")));
            }
            let key = (u.min(w), u.max(w));
            if !seen.insert(key) {
                return Err(Error::InvalidSubgraph(format!("repeated edge ({u}, {w})")));
            }
            degrees[u] += 1;
            degrees[w] += 1;
            norm.push(key);
        }
        if norm.len() < 2 {
            return Err(Error::InvalidSubgraph("at least two edges are required".into()));
        }
        if let Some(v) = degrees.iter().position(|&d| d == 0) {
            return Err(Error::InvalidSubgraph(format!("vertex {v} is isolated")));
        }
        if degrees.iter().all(|&d| d < 2) {
            return Err(Error::InvalidSubgraph(
                "some vertex must have degree at least 2".into(),
            ));
        }
        Ok(Self {
            vertices,
            edges: norm,
            degrees,
        })
    }

    /// Parses an edge list: one `u v` pair per line, 0-indexed, `#` comments allowed.
    /// The vertex count is the largest index plus one.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(Error::Format(format!(
                    "line {}: expected `u v`, got `{line}`",
                    lineno + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))
            };
            edges.push((parse(parts[0])?, parse(parts[1])?));
        }
        let vertices = edges.iter().map(|&(u, w)| u.max(w) + 1).max().unwrap_or(0);
        Self::new(vertices, &edges)
    }

    pub fn read_edge_file(path: &Path) -> Result<Self> {
        Self::parse_edge_list(&std::fs::read_to_string(path)?)
    }

    pub fn kstar(k: usize) -> Result<Self> {
        let edges: Vec<_> = (1..=k).map(|i| (0, i)).collect();
        Self::new(k + 1, &edges)
    }

    pub fn triangle() -> Self {
        Self::cycle(3).expect("valid")
    }

    pub fn cycle(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::new(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j));
            }
        }
        Self::new(n, &edges)
    }

    /// Path with `len` edges.
    pub fn path(len: usize) -> Result<Self> {
        let edges: Vec<_> = (0..len).map(|i| (i, i + 1)).collect();
        Self::new(len + 1, &edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `ℓ`, the number of edges.
    pub fn edge_count(&self) -> u32 {
        self.edges.len() as u32
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// `n_k`: number of vertices of each degree.
    pub fn degree_counts(&self) -> BTreeMap<u32, u32> {
        let mut out = BTreeMap::new();
        for &d in &self.degrees {
            *out.entry(d).or_insert(0) += 1;
        }
        out
    }

    pub fn max_degree(&self) -> u32 {
        *self.degrees.iter().max().expect("non-empty")
    }

    /// Every vertex has degree `k` or 1 for a single `k > 1`.
    pub fn is_kstarlike(&self) -> bool {
        let big: std::collections::BTreeSet<u32> =
            self.degrees.iter().copied().filter(|&d| d > 1).collect();
        big.len() == 1
    }

    /// Relabels vertices: vertex `i` becomes `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let edges: Vec<_> = self.edges.iter().map(|&(u, w)| (perm[u], perm[w])).collect();
        Self::new(self.vertices, &edges)
    }
}

/// Star weights `a_k = n_k e^(ℓ-k)` for every `k ≥ 2` with `n_k > 0`.
///
/// Degree-one vertices contribute no star term; their edges enter only
/// through the `e^(ℓ-k)` factors.
pub fn star_weights_for(h: &SubgraphSpec, e: f64) -> Result<StarWeights> {
    if !(e > 0.0 && e < 1.0) {
        return Err(Error::Domain {
            what: "e",
            value: e,
            domain: "(0, 1)",
        });
    }
    let l = h.edge_count() as i32;
    let terms: Vec<(u32, f64)> = h
        .degree_counts()
        .into_iter()
        .filter(|&(k, _)| k >= 2)
        .map(|(k, n)| (k, n as f64 * e.powi(l - k as i32)))
        .collect();
    StarWeights::new(&terms)
}

// ---------------------------------------------------------------------------
// Contraction engine

/// Dense tensor over a sorted set of variables, each ranging over `0..m`.
#[derive(Debug, Clone)]
struct Factor {
    vars: Vec<usize>,
    data: Vec<f64>,
}

impl Factor {
    fn vector(var: usize, data: Vec<f64>) -> Self {
        Self {
            vars: vec![var],
            data,
        }
    }

    /// Edge factor; `mat` is row-major `m × m` indexed `[a(u) * m + b(w)]`.
    fn matrix(u: usize, w: usize, mat: &[f64], m: usize) -> Self {
        if u < w {
            // index = a(u) + m * b(w)
            let mut data = vec![0.0; m * m];
            for a in 0..m {
                for b in 0..m {
                    data[a + m * b] = mat[a * m + b];
                }
            }
            Self { vars: vec![u, w], data }
        } else {
            let mut data = vec![0.0; m * m];
            for a in 0..m {
                for b in 0..m {
                    // first var is w
                    data[b + m * a] = mat[a * m + b];
                }
            }
            Self { vars: vec![w, u], data }
        }
    }
}

/// Multiplies factors and sums out `eliminate` (if any).
fn combine(factors: &[Factor], eliminate: Option<usize>, m: usize) -> Factor {
    let mut union: Vec<usize> = factors.iter().flat_map(|f| f.vars.iter().copied()).collect();
    union.sort_unstable();
    union.dedup();
    let out_vars: Vec<usize> = union.iter().copied().filter(|v| Some(*v) != eliminate).collect();
    // stride of each union position inside each factor and inside the output
    let strides: Vec<Vec<usize>> = factors
        .iter()
        .map(|f| {
            union
                .iter()
                .map(|v| match f.vars.iter().position(|x| x == v) {
                    Some(p) => m.pow(p as u32),
                    None => 0,
                })
                .collect()
        })
        .collect();
    let out_strides: Vec<usize> = union
        .iter()
        .map(|v| match out_vars.iter().position(|x| x == v) {
            Some(p) => m.pow(p as u32),
            None => 0,
        })
        .collect();
    let mut out = vec![0.0; m.pow(out_vars.len() as u32)];
    let n = union.len();
    let mut assign = vec![0usize; n];
    let mut idx = vec![0usize; factors.len()];
    let mut oidx = 0usize;
    loop {
        let mut prod = 1.0;
        for (f, &i) in factors.iter().zip(&idx) {
            prod *= f.data[i];
            if prod == 0.0 {
                break;
            }
        }
        out[oidx] += prod;
        // odometer increment, keeping all indices in sync
        let mut pos = 0;
        loop {
            if pos == n {
                return Factor {
                    vars: out_vars,
                    data: out,
                };
            }
            assign[pos] += 1;
            for (k, s) in strides.iter().enumerate() {
                idx[k] += s[pos];
            }
            oidx += out_strides[pos];
            if assign[pos] < m {
                break;
            }
            for (k, s) in strides.iter().enumerate() {
                idx[k] -= s[pos] * m;
            }
            oidx -= out_strides[pos] * m;
            assign[pos] = 0;
            pos += 1;
        }
    }
}

/// Input to a contraction: optional weight vector per vertex, optional matrix per edge.
struct Network<'a> {
    m: usize,
    vertices: usize,
    edges: &'a [(usize, usize)],
    vertex_weights: Vec<Option<&'a [f64]>>,
    edge_mats: Vec<Option<&'a [f64]>>,
}

impl Network<'_> {
    /// Contracts every vertex not in `keep`; returns a tensor over `keep`
    /// (sorted ascending; index = Σ a(keep[k]) m^k).
    fn contract(&self, keep: &[usize]) -> Factor {
        let m = self.m;
        let mut factors: Vec<Factor> = Vec::new();
        for (v, w) in self.vertex_weights.iter().enumerate() {
            if let Some(w) = w {
                factors.push(Factor::vector(v, w.to_vec()));
            }
        }
        for (k, &(u, w)) in self.edges.iter().enumerate() {
            if let Some(mat) = self.edge_mats[k] {
                factors.push(Factor::matrix(u, w, mat, m));
            }
        }
        // every vertex appears somewhere; add a ones vector for those that don't
        for v in 0..self.vertices {
            if !factors.iter().any(|f| f.vars.contains(&v)) {
                factors.push(Factor::vector(v, vec![1.0; m]));
            }
        }
        let mut remaining: Vec<usize> = (0..self.vertices).filter(|v| !keep.contains(v)).collect();
        while !remaining.is_empty() {
            // min-degree choice in the current interaction graph
            let (pos, _) = remaining
                .iter()
                .enumerate()
                .map(|(p, &v)| {
                    let mut nb: Vec<usize> = factors
                        .iter()
                        .filter(|f| f.vars.contains(&v))
                        .flat_map(|f| f.vars.iter().copied())
                        .collect();
                    nb.sort_unstable();
                    nb.dedup();
                    (p, nb.len())
                })
                .min_by_key(|&(p, deg)| (deg, p))
                .expect("non-empty");
            let v = remaining.remove(pos);
            let (touch, rest): (Vec<Factor>, Vec<Factor>) =
                factors.into_iter().partition(|f| f.vars.contains(&v));
            factors = rest;
            factors.push(combine(&touch, Some(v), m));
        }
        let mut result = combine(&factors, None, m);
        // vertices in `keep` that were never touched get a ones factor above, so
        // result.vars == keep (sorted)
        let mut sorted_keep = keep.to_vec();
        sorted_keep.sort_unstable();
        debug_assert_eq!(result.vars, sorted_keep);
        result.vars = sorted_keep;
        result
    }
}

fn check_edges(vertices: usize, edges: &[(usize, usize)]) {
    for &(u, w) in edges {
        assert!(u < vertices && w < vertices && u != w, "invalid edge ({u}, {w})");
    }
}

/// Homomorphism density of the graph `(vertices, edges)` by tensor contraction.
pub fn hom_density_edges(vertices: usize, edges: &[(usize, usize)], g: &MultipodalGraphon) -> f64 {
    check_edges(vertices, edges);
    let m = g.podality();
    let blocks = full_blocks(g);
    let net = Network {
        m,
        vertices,
        edges,
        vertex_weights: vec![Some(g.widths()); vertices],
        edge_mats: vec![Some(&blocks); edges.len()],
    };
    net.contract(&[]).data[0]
}

/// Homomorphism density by summing over all `M^v` cluster assignments.
pub fn hom_density_brute(vertices: usize, edges: &[(usize, usize)], g: &MultipodalGraphon) -> f64 {
    check_edges(vertices, edges);
    let m = g.podality();
    if vertices == 0 {
        return 1.0;
    }
    let total = (m as u64).pow(vertices as u32);
    let eval = |code: u64| -> f64 {
        let mut assign = [0usize; 32];
        let mut c = code;
        for a in assign.iter_mut().take(vertices) {
            *a = (c % m as u64) as usize;
            c /= m as u64;
        }
        let mut w: f64 = (0..vertices).map(|v| g.widths()[assign[v]]).product();
        for &(u, x) in edges {
            w *= g.p(assign[u], assign[x]);
        }
        w
    };
    if total > 100_000 {
        (0..total).into_par_iter().map(eval).sum()
    } else {
        (0..total).map(eval).sum()
    }
}

fn full_blocks(g: &MultipodalGraphon) -> Vec<f64> {
    let m = g.podality();
    (0..m * m).map(|k| g.p(k / m, k % m)).collect()
}

/// `τ_H(g)`.
pub fn homomorphism_density(h: &SubgraphSpec, g: &MultipodalGraphon) -> f64 {
    hom_density_edges(h.vertices, &h.edges, g)
}

/// Functional derivative of `τ_H` on each block: `T_ij` with `∂τ_H/∂p_ij = A_ij T_ij`.
///
/// Computed from each edge's environment (everything except the edge and
/// its endpoint weights), so it stays finite on zero-width clusters.
pub fn block_derivative(h: &SubgraphSpec, g: &MultipodalGraphon) -> Vec<f64> {
    let m = g.podality();
    let blocks = full_blocks(g);
    let mut t = vec![0.0; m * m];
    for (k, &(u, w)) in h.edges.iter().enumerate() {
        let mut vw: Vec<Option<&[f64]>> = vec![Some(g.widths()); h.vertices];
        vw[u] = None;
        vw[w] = None;
        let mut em: Vec<Option<&[f64]>> = vec![Some(&blocks); h.edges.len()];
        em[k] = None;
        let env = Network {
            m,
            vertices: h.vertices,
            edges: &h.edges,
            vertex_weights: vw,
            edge_mats: em,
        }
        .contract(&[u, w]);
        // env index = a(u) + m b(w) since u < w
        for a in 0..m {
            for b in 0..m {
                let val = 0.5 * (env.data[a + m * b] + env.data[b + m * a]);
                t[a * m + b] += val;
            }
        }
    }
    t
}

/// `∂τ_H/∂c_i` (widths treated as independent variables).
pub fn width_gradient(h: &SubgraphSpec, g: &MultipodalGraphon) -> Vec<f64> {
    let m = g.podality();
    let blocks = full_blocks(g);
    let mut out = vec![0.0; m];
    for v in 0..h.vertices {
        let mut vw: Vec<Option<&[f64]>> = vec![Some(g.widths()); h.vertices];
        vw[v] = None;
        let env = Network {
            m,
            vertices: h.vertices,
            edges: &h.edges,
            vertex_weights: vw,
            edge_mats: vec![Some(&blocks); h.edges.len()],
        }
        .contract(&[v]);
        for (o, x) in out.iter_mut().zip(&env.data) {
            *o += x;
        }
    }
    out
}

/// Remainder of the star reduction along a family of bipodal perturbations.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTauReport {
    /// `(c, Σ_k n_k e^(ℓ-k) Δτ_k, Δτ_H, remainder)` per perturbation.
    pub points: Vec<(f64, f64, f64, f64)>,
    /// Slope of `ln R` against `ln Δτ`; `None` when the remainder is at rounding level.
    pub slope: Option<f64>,
    /// The reduction is exact to rounding (e.g. `H` is a k-star).
    pub exact: bool,
}

/// Default cluster widths for [`delta_tau_check`].
pub fn default_perturbation_sizes() -> Vec<f64> {
    (0..9).map(|i| 10f64.powf(-4.0 + 0.25 * i as f64)).collect()
}

/// Measures `R = |Δτ_H - Σ_k n_k e^(ℓ-k) Δτ_k|` on edge-density-preserving
/// bipodal perturbations of the constant graphon: a cluster of width `c`
/// with `p11 = p12 = ζ(e)` of the reduced model and `p22` fixed by `e`.
pub fn delta_tau_check(h: &SubgraphSpec, e: f64, sizes: &[f64]) -> Result<DeltaTauReport> {
    let weights = star_weights_for(h, e)?;
    let et = zeta(&PsiProfile::new(weights.clone(), e)?)?.e_tilde;
    let l = h.edge_count() as i32;
    let mut points = Vec::with_capacity(sizes.len());
    for &c in sizes {
        let rest = (1.0 - c) * (1.0 - c);
        let p22 = (e - et * (1.0 - rest)) / rest;
        if !(0.0..=1.0).contains(&p22) {
            return Err(Error::Domain {
                what: "c",
                value: c,
                domain: "perturbation too large for this density",
            });
        }
        let g = MultipodalGraphon::bipodal(c, et, et, p22)?;
        let dtau_h = homomorphism_density(h, &g) - e.powi(l);
        let mut reduced = 0.0;
        for (k, a) in weights.terms() {
            reduced += a * (kstar_density(&g, k)? - e.powi(k as i32));
        }
        points.push((c, reduced, dtau_h, (dtau_h - reduced).abs()));
    }
    let scale = e.powi(l);
    let exact = points.iter().all(|p| p.3 <= 64.0 * f64::EPSILON * scale);
    let slope = if exact {
        None
    } else {
        let usable: Vec<(f64, f64)> = points
            .iter()
            .filter(|p| p.3 > 0.0 && p.1 > 0.0)
            .map(|p| (p.1.ln(), p.3.ln()))
            .collect();
        (usable.len() >= 2).then(|| linear_fit(&usable).0)
    };
    Ok(DeltaTauReport {
        points,
        slope,
        exact,
    })
}

/// Least-squares line through `(x, y)`: returns `(slope, intercept, r²)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_graphon(m: usize, seed: u64) -> MultipodalGraphon {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let widths: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
        let upper: Vec<f64> = (0..m * (m + 1) / 2).map(|_| rng.gen_range(0.01..0.99)).collect();
        MultipodalGraphon::from_upper(widths, &upper).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(SubgraphSpec::new(3, &[(0, 1)]).is_err());
        assert!(SubgraphSpec::new(3, &[(0, 1), (1, 1)]).is_err());
        assert!(SubgraphSpec::new(3, &[(0, 1), (1, 0)]).is_err());
        assert!(SubgraphSpec::new(4, &[(0, 1), (1, 2)]).is_err()); // isolated vertex 3
        assert!(SubgraphSpec::new(4, &[(0, 1), (2, 3)]).is_err()); // matching only
        let t = SubgraphSpec::triangle();
        assert_eq!(t.edge_count(), 3);
        assert_eq!(t.degree_counts().get(&2), Some(&3));
        assert!(t.is_kstarlike());
        assert!(SubgraphSpec::kstar(4).unwrap().is_kstarlike());
        assert!(!SubgraphSpec::path(3).unwrap().is_kstarlike() || SubgraphSpec::path(3).unwrap().max_degree() == 2);
        let mixed = SubgraphSpec::new(4, &[(0, 1), (0, 2), (0, 3), (1, 2)]).unwrap();
        assert!(!mixed.is_kstarlike());
    }

    #[test]
    fn edge_list_parsing() {
        let h = SubgraphSpec::parse_edge_list("# triangle\n0 1\n1 2\n\n2 0\n").unwrap();
        assert_eq!(h.vertex_count(), 3);
        assert_eq!(h, SubgraphSpec::triangle());
        assert!(SubgraphSpec::parse_edge_list("0 1 2\n").is_err());
        assert!(SubgraphSpec::parse_edge_list("0 x\n1 2\n").is_err());
    }

    #[test]
    fn reduction_weights() {
        let w = star_weights_for(&SubgraphSpec::triangle(), 0.4).unwrap();
        assert_eq!(w.terms().len(), 1);
        assert_eq!(w.terms()[0].0, 2);
        assert_relative_eq!(w.terms()[0].1, 1.2, epsilon = 1e-15);
        for k in 2..6 {
            let w = star_weights_for(&SubgraphSpec::kstar(k).unwrap(), 0.3).unwrap();
            assert_eq!(w.terms(), vec![(k as u32, 1.0)]);
        }
        let w = star_weights_for(&SubgraphSpec::cycle(4).unwrap(), 0.5).unwrap();
        assert_eq!(w.terms(), vec![(2, 1.0)]);
    }

    #[test]
    fn density_known_values() {
        let g = MultipodalGraphon::constant(0.37).unwrap();
        let h = SubgraphSpec::complete(4).unwrap();
        assert_relative_eq!(homomorphism_density(&h, &g), 0.37f64.powi(6), max_relative = 1e-14);
        let bip = MultipodalGraphon::bipodal(0.5, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(homomorphism_density(&SubgraphSpec::triangle(), &bip), 0.0);
        assert_eq!(hom_density_brute(3, SubgraphSpec::triangle().edges(), &bip), 0.0);
        let r = random_graphon(3, 1);
        assert_relative_eq!(
            hom_density_edges(2, &[(0, 1)], &r),
            crate::graphon::edge_density(&r),
            max_relative = 1e-14
        );
    }

    #[test]
    fn contraction_matches_brute_force() {
        let graphs = [
            SubgraphSpec::triangle(),
            SubgraphSpec::cycle(5).unwrap(),
            SubgraphSpec::complete(4).unwrap(),
            SubgraphSpec::path(4).unwrap(),
            SubgraphSpec::new(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)]).unwrap(),
        ];
        for (s, h) in graphs.iter().enumerate() {
            for m in 1..=4 {
                let g = random_graphon(m, s as u64 * 10 + m as u64);
                let a = homomorphism_density(h, &g);
                let b = hom_density_brute(h.vertex_count(), h.edges(), &g);
                assert!((a - b).abs() < 1e-14, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn kstar_density_consistency() {
        for k in 2..=5 {
            let h = SubgraphSpec::kstar(k).unwrap();
            for seed in 0..5 {
                let g = random_graphon(4, seed);
                assert_relative_eq!(
                    homomorphism_density(&h, &g),
                    kstar_density(&g, k as u32).unwrap(),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn block_derivative_matches_finite_differences() {
        let h = SubgraphSpec::new(4, &[(0, 1), (1, 2), (2, 0), (2, 3)]).unwrap();
        let g = random_graphon(3, 7);
        let t = block_derivative(&h, &g);
        let cw = width_gradient(&h, &g);
        let m = 3;
        let step = 1e-6;
        for i in 0..m {
            for j in i..m {
                let bump = |d: f64| {
                    let mut up = g.upper();
                    let idx = (0..i).map(|r| m - r).sum::<usize>() + (j - i);
                    up[idx] += d;
                    homomorphism_density(&h, &MultipodalGraphon::from_upper(g.widths().to_vec(), &up).unwrap())
                };
                let fd = (bump(step) - bump(-step)) / (2.0 * step);
                assert_relative_eq!(g.pair_weight(i, j) * t[i * m + j], fd, max_relative = 1e-7);
            }
        }
        // widths as free variables: compare against unnormalized brute force
        for i in 0..m {
            let eval = |d: f64| {
                let mut w = g.widths().to_vec();
                w[i] += d;
                let mut acc = 0.0;
                let v = h.vertex_count();
                for code in 0..m.pow(v as u32) {
                    let a: Vec<usize> = (0..v).map(|k| (code / m.pow(k as u32)) % m).collect();
                    let mut prod: f64 = a.iter().map(|&x| w[x]).product();
                    for &(u, x) in h.edges() {
                        prod *= g.p(a[u], a[x]);
                    }
                    acc += prod;
                }
                acc
            };
            let fd = (eval(step) - eval(-step)) / (2.0 * step);
            assert_relative_eq!(cw[i], fd, max_relative = 1e-7);
        }
    }

    #[test]
    fn block_derivative_triangle_at_vanishing_cluster() {
        // at c = 0 the triangle's T is 3 (g∘g): T11 = 3 p12², T12 = 3 p12 p22, T22 = 3 p22²
        let g = MultipodalGraphon::bipodal(0.0, 0.8, 0.6, 0.4).unwrap();
        let t = block_derivative(&SubgraphSpec::triangle(), &g);
        assert_relative_eq!(t[0], 3.0 * 0.36, epsilon = 1e-15);
        assert_relative_eq!(t[1], 3.0 * 0.24, epsilon = 1e-15);
        assert_relative_eq!(t[3], 3.0 * 0.16, epsilon = 1e-15);
    }

    #[test]
    fn remainder_for_kstar_is_exact() {
        let r = delta_tau_check(&SubgraphSpec::kstar(3).unwrap(), 0.3, &default_perturbation_sizes()).unwrap();
        assert!(r.exact);
        assert!(r.slope.is_none());
    }

    #[test]
    fn remainder_scaling_triangle() {
        let r = delta_tau_check(&SubgraphSpec::triangle(), 0.4, &default_perturbation_sizes()).unwrap();
        assert!(!r.exact);
        assert!(r.slope.unwrap() >= 1.4, "slope {:?}", r.slope);
    }

    #[test]
    fn fit_recovers_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        let (s, b, r2) = linear_fit(&pts);
        assert_relative_eq!(s, 2.0, epsilon = 1e-12);
        assert_relative_eq!(b, 1.0, epsilon = 1e-12);
        assert_relative_eq!(r2, 1.0, epsilon = 1e-12);
    }
}
