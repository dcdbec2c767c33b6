//! Entropy-maximizing graphons under edge and subgraph density constraints.
//!
//! The crate works with multipodal (step-function) graphons. Given an edge
//! density `e` and the density `τ` of a fixed graph `H` slightly above the
//! Erdős–Rényi value, the entropy maximizer is bipodal, with one small
//! cluster. The modules cover:
//!
//! - [`graphon`]: densities, entropy and gradients of multipodal graphons,
//! - [`star`]: the ψ profile of star models, its maximizer ζ, bad densities,
//! - [`subgraph`]: exact homomorphism densities and the star reduction of `H`,
//! - [`bipodal`]: the bipodal optimality system, solved by damped Newton and continuation,
//! - [`optimizer`]: direct constrained maximization over `M`-podal graphons,
//! - [`phase`]: grid scans, model comparison and plot output.
//!
//! ```
//! use graphon_entropy::star::{zeta, PsiProfile};
//!
//! let best = zeta(&PsiProfile::kstar(2, 0.3).unwrap()).unwrap();
//! assert!((best.e_tilde - 0.7).abs() < 1e-9);
//! ```

pub mod bipodal;
pub mod density;
pub mod error;
pub mod graphon;
pub mod optimizer;
pub mod phase;
pub mod star;
pub mod subgraph;

pub use density::DensityModel;
pub use error::{Error, Result};
pub use graphon::MultipodalGraphon;
pub use star::{PsiProfile, StarWeights};
pub use subgraph::SubgraphSpec;

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }
    chapter!(intro, "../../../book/src/introduction.md");
    chapter!(graphons, "../../../book/src/graphons.md");
    chapter!(psi, "../../../book/src/psi-profile.md");
    chapter!(bipodal, "../../../book/src/bipodal.md");
    chapter!(optimizer, "../../../book/src/optimizer.md");
    chapter!(subgraphs, "../../../book/src/subgraphs.md");
    chapter!(scans, "../../../book/src/scans.md");
}
