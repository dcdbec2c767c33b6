//! Shared oracles: plain double sums over unnormalized parameters.
#![allow(dead_code)]

use graphon_entropy::MultipodalGraphon;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Widths in `[0.05, 1)` (normalized) and blocks in `[0.05, 0.95]`.
pub fn random_interior(rng: &mut ChaCha8Rng, m: usize) -> MultipodalGraphon {
    let widths: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let upper: Vec<f64> = (0..m * (m + 1) / 2).map(|_| rng.gen_range(0.05..0.95)).collect();
    MultipodalGraphon::from_upper(widths, &upper).unwrap()
}

pub fn s0(w: f64) -> f64 {
    if w <= 0.0 || w >= 1.0 {
        0.0
    } else {
        -0.5 * (w * w.ln() + (1.0 - w) * (1.0 - w).ln())
    }
}

pub struct Raw {
    pub c: Vec<f64>,
    pub p: Vec<Vec<f64>>,
}

impl Raw {
    pub fn of(g: &MultipodalGraphon) -> Self {
        let m = g.podality();
        Self {
            c: g.widths().to_vec(),
            p: (0..m).map(|i| (0..m).map(|j| g.p(i, j)).collect()).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.c.len()
    }

    pub fn edge(&self) -> f64 {
        let m = self.m();
        (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| self.c[i] * self.c[j] * self.p[i][j])
            .sum()
    }

    pub fn kstar(&self, k: i32) -> f64 {
        let m = self.m();
        (0..m)
            .map(|i| self.c[i] * (0..m).map(|j| self.c[j] * self.p[i][j]).sum::<f64>().powi(k))
            .sum()
    }

    pub fn entropy(&self) -> f64 {
        let m = self.m();
        (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| self.c[i] * self.c[j] * s0(self.p[i][j]))
            .sum()
    }

    /// Copy with `p_ij = p_ji` shifted by `h`.
    pub fn shift_p(&self, i: usize, j: usize, h: f64) -> Self {
        let mut p = self.p.clone();
        p[i][j] += h;
        if i != j {
            p[j][i] += h;
        }
        Self { c: self.c.clone(), p }
    }

    pub fn shift_c(&self, i: usize, h: f64) -> Self {
        let mut c = self.c.clone();
        c[i] += h;
        Self { c, p: self.p.clone() }
    }
}

/// Central difference with step `h`.
pub fn central(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

/// `|a - b| / max(|b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

/// Largest relative deviation between the analytic partials of `gradients`
/// (edge, k-star, entropy) and central differences of the plain sums.
pub fn gradient_deviation(g: &MultipodalGraphon, k: u32) -> f64 {
    let grads = graphon_entropy::graphon::gradients(g, k).unwrap();
    let raw = Raw::of(g);
    let m = raw.m();
    let h = 1e-6;
    let ki = k as i32;
    let mut worst: f64 = 0.0;
    for i in 0..m {
        for j in i..m {
            let fd_e = central(|t| raw.shift_p(i, j, t).edge(), h);
            let fd_t = central(|t| raw.shift_p(i, j, t).kstar(ki), h);
            let fd_s = central(|t| raw.shift_p(i, j, t).entropy(), h);
            worst = worst
                .max(rel_err(grads.de_dp[i][j], fd_e, 1e-3))
                .max(rel_err(grads.dtau_dp[i][j], fd_t, 1e-3))
                .max(rel_err(grads.ds_dp[i][j], fd_s, 1e-3));
        }
        let fd_e = central(|t| raw.shift_c(i, t).edge(), h);
        let fd_t = central(|t| raw.shift_c(i, t).kstar(ki), h);
        let fd_s = central(|t| raw.shift_c(i, t).entropy(), h);
        let fd_c = central(|t| raw.shift_c(i, t).c.iter().sum::<f64>(), h);
        worst = worst
            .max(rel_err(grads.de_dc[i], fd_e, 1e-3))
            .max(rel_err(grads.dtau_dc[i], fd_t, 1e-3))
            .max(rel_err(grads.ds_dc[i], fd_s, 1e-3))
            .max(rel_err(grads.dcsum_dc[i], fd_c, 1e-3));
    }
    worst
}
