//! The constrained density `τ`: either a star model `Σ_k a_k τ_k` with fixed
//! weights or the exact homomorphism density of a graph `H`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::graphon::MultipodalGraphon;
use crate::star::StarWeights;
use crate::subgraph::{self, star_weights_for, SubgraphSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum DensityModel {
    Star(StarWeights),
    Subgraph(SubgraphSpec),
}

impl DensityModel {
    pub fn kstar(k: u32) -> Result<Self> {
        Ok(Self::Star(StarWeights::kstar(k)?))
    }

    /// Parses `kstar:K` or `H:<edge file>`.
    pub fn parse(spec: &str) -> Result<Self> {
        if let Some(k) = spec.strip_prefix("kstar:") {
            let k: u32 = k
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad star order in `{spec}`")))?;
            return Self::kstar(k);
        }
        if let Some(path) = spec.strip_prefix("H:") {
            return Ok(Self::Subgraph(SubgraphSpec::read_edge_file(Path::new(path))?));
        }
        Err(Error::Format(format!(
            "model `{spec}` is neither `kstar:K` nor `H:<edge file>`"
        )))
    }

    /// `τ(g)`.
    pub fn value(&self, g: &MultipodalGraphon) -> f64 {
        match self {
            Self::Star(w) => {
                let d = g.degrees().0;
                g.widths().iter().zip(&d).map(|(c, x)| c * w.h(*x)).sum()
            }
            Self::Subgraph(h) => subgraph::homomorphism_density(h, g),
        }
    }

    /// `T` (row-major `M × M`) with `∂τ/∂p_ij = A_ij T_ij`.
    pub fn block_derivative(&self, g: &MultipodalGraphon) -> Vec<f64> {
        match self {
            Self::Star(w) => {
                let m = g.podality();
                let h1: Vec<f64> = g.degrees().0.iter().map(|&x| w.h1(x)).collect();
                let mut t = vec![0.0; m * m];
                for i in 0..m {
                    for j in 0..m {
                        t[i * m + j] = 0.5 * (h1[i] + h1[j]);
                    }
                }
                t
            }
            Self::Subgraph(h) => subgraph::block_derivative(h, g),
        }
    }

    /// `∂τ/∂c_i` with the widths treated as independent.
    pub fn width_gradient(&self, g: &MultipodalGraphon) -> Vec<f64> {
        match self {
            Self::Star(w) => {
                let m = g.podality();
                let d = g.degrees().0;
                let c = g.widths();
                (0..m)
                    .map(|i| {
                        w.h(d[i]) + (0..m).map(|j| c[j] * w.h1(d[j]) * g.p(i, j)).sum::<f64>()
                    })
                    .collect()
            }
            Self::Subgraph(h) => subgraph::width_gradient(h, g),
        }
    }

    /// `τ` of the constant graphon `e`.
    pub fn er_value(&self, e: f64) -> f64 {
        match self {
            Self::Star(w) => w.h(e),
            Self::Subgraph(h) => e.powi(h.edge_count() as i32),
        }
    }

    /// Star weights governing the ψ profile at density `e`.
    pub fn reduced_weights(&self, e: f64) -> Result<StarWeights> {
        match self {
            Self::Star(w) => Ok(w.clone()),
            Self::Subgraph(h) => star_weights_for(h, e),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Star(w) => match w.as_kstar() {
                Some(k) => format!("kstar:{k}"),
                None => {
                    let terms: Vec<String> =
                        w.terms().iter().map(|(k, a)| format!("{a}x^{k}")).collect();
                    format!("poly:{}", terms.join("+"))
                }
            },
            Self::Subgraph(h) => format!("H:{}v{}e", h.vertex_count(), h.edge_count()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::kstar_density;
    use approx::assert_relative_eq;

    #[test]
    fn star_and_subgraph_agree_on_kstars() {
        let g = MultipodalGraphon::from_upper(vec![0.2, 0.3, 0.5], &[0.1, 0.5, 0.7, 0.3, 0.9, 0.4])
            .unwrap();
        for k in 2..5u32 {
            let a = DensityModel::kstar(k).unwrap();
            let b = DensityModel::Subgraph(SubgraphSpec::kstar(k as usize).unwrap());
            assert_relative_eq!(a.value(&g), kstar_density(&g, k).unwrap(), epsilon = 1e-14);
            assert_relative_eq!(a.value(&g), b.value(&g), epsilon = 1e-14);
            for (x, y) in a.block_derivative(&g).iter().zip(b.block_derivative(&g)) {
                assert_relative_eq!(*x, y, epsilon = 1e-13);
            }
            for (x, y) in a.width_gradient(&g).iter().zip(b.width_gradient(&g)) {
                assert_relative_eq!(*x, y, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn parse_models() {
        assert_eq!(DensityModel::parse("kstar:3").unwrap(), DensityModel::kstar(3).unwrap());
        assert!(DensityModel::parse("kstar:x").is_err());
        assert!(DensityModel::parse("triangle").is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tri.txt");
        std::fs::write(&path, "0 1\n1 2\n2 0\n").unwrap();
        let m = DensityModel::parse(&format!("H:{}", path.display())).unwrap();
        assert_eq!(m, DensityModel::Subgraph(SubgraphSpec::triangle()));
        assert_relative_eq!(m.er_value(0.4), 0.064, epsilon = 1e-15);
    }
}
