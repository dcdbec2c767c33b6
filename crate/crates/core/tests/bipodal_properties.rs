mod common;

use approx::assert_relative_eq;
use common::rng;
use graphon_entropy::bipodal::{
    continue_along, continue_path, limit_point, log_schedule, residual, solve_at, solve_from_seed,
};
use graphon_entropy::graphon::{edge_density, entropy, kstar_density};
use graphon_entropy::star::{zeta, PsiProfile};
use graphon_entropy::{DensityModel, MultipodalGraphon};
use rand::Rng;

fn star(k: u32) -> DensityModel {
    DensityModel::kstar(k).unwrap()
}

#[test]
fn f3_at_zero_width_is_p22_offset() {
    let x = [0.3, 0.8, 0.45, 0.0];
    let f = residual(&star(2), &x, 0.4, 0.1).unwrap();
    assert_relative_eq!(f[2], 0.45 - 0.4, epsilon = 1e-15);
}

#[test]
fn random_states_match_graphon_densities() {
    let mut r = rng(3);
    for _ in 0..50 {
        let x = [r.gen_range(0.05..0.95), r.gen_range(0.05..0.95), r.gen_range(0.05..0.95), r.gen_range(0.01..0.5)];
        let g = MultipodalGraphon::bipodal(x[3], x[0], x[1], x[2]).unwrap();
        for k in [2, 3] {
            let f = residual(&star(k), &x, 0.0, 0.0).unwrap();
            assert!((f[2] - edge_density(&g)).abs() < 1e-14);
            assert!((f[3] - kstar_density(&g, k).unwrap()).abs() < 1e-14);
        }
    }
}

#[test]
fn entropy_gain_matches_beta_near_the_curve() {
    for (k, e) in [(2u32, 0.3), (3, 0.3), (2, 0.7)] {
        let model = star(k);
        let beta0 = zeta(&PsiProfile::kstar(k, e).unwrap()).unwrap().beta;
        let dtau = 1e-7;
        let sol = solve_at(&model, e, model.er_value(e) + dtau).unwrap();
        let gain = sol.s - common::s0(e);
        assert!((gain / dtau - beta0).abs() < 1e-3 * beta0.abs(), "k={k} e={e}: {} vs {beta0}", gain / dtau);
    }
}

#[test]
fn multipliers_are_entropy_derivatives() {
    for (k, e) in [(2u32, 0.4), (3, 0.3)] {
        let model = star(k);
        let er = model.er_value(e);
        let taus: Vec<f64> = log_schedule(1e-5, 1e-3, 30).iter().map(|d| er + d).collect();
        let path = continue_along(&model, e, &taus).unwrap();
        for w in path.points.windows(3) {
            let fd = (w[2].s - w[0].s) / (w[2].tau - w[0].tau);
            assert!((fd - w[1].beta).abs() < 1e-3 * w[1].beta.abs(), "fd {fd} beta {}", w[1].beta);
        }
        // α from solves at shifted e and fixed τ
        let tau = er + 5e-4;
        let h = 1e-5;
        let mid = solve_at(&model, e, tau).unwrap();
        let up = solve_at(&model, e + h, tau).unwrap();
        let dn = solve_at(&model, e - h, tau).unwrap();
        let fd = (up.s - dn.s) / (2.0 * h);
        assert!((fd - mid.alpha).abs() < 1e-3 * mid.alpha.abs(), "fd {fd} alpha {}", mid.alpha);
    }
}

#[test]
fn limit_relations_along_a_shrinking_schedule() {
    for (k, e) in [(2u32, 0.2), (2, 0.7), (3, 0.8)] {
        let model = star(k);
        let er = model.er_value(e);
        let zeta_e = zeta(&PsiProfile::kstar(k, e).unwrap()).unwrap().e_tilde;
        let taus: Vec<f64> = log_schedule(1e-6, 1e-3, 16).iter().map(|d| er + d).collect();
        let path = continue_along(&model, e, &taus).unwrap();
        let first5 = &path.points[..5];
        // distances shrink monotonically as Δτ decreases
        for w in first5.windows(2) {
            assert!((w[0].p22 - e).abs() <= (w[1].p22 - e).abs());
            assert!((w[0].p12 - zeta_e).abs() <= (w[1].p12 - zeta_e).abs());
        }
        assert!((first5[0].p22 - e).abs() < 1e-3);
        assert!((first5[0].p12 - zeta_e).abs() < 1e-3);
        for p in &path.points {
            assert!(p.f1_identity().abs() < 1e-9);
            assert!(p.residual < 1e-10);
        }
    }
}

#[test]
fn beta_tends_to_the_critical_value() {
    let model = star(3);
    let e = 0.3;
    let target = zeta(&PsiProfile::kstar(3, e).unwrap()).unwrap().beta;
    let er = model.er_value(e);
    let taus: Vec<f64> = log_schedule(1e-7, 1e-3, 9).iter().map(|d| er + d).collect();
    let path = continue_along(&model, e, &taus).unwrap();
    let gaps: Vec<f64> = path.points.iter().map(|p| (p.beta - target).abs()).collect();
    assert!(gaps.windows(2).all(|w| w[0] <= w[1]));
    assert!(gaps[0] < 1e-3 * target.abs());
}

#[test]
fn smooth_uniform_path() {
    let model = star(2);
    let e = 0.4;
    let path = continue_path(&model, e, model.er_value(e) + 2e-3, 40).unwrap();
    let p12: Vec<f64> = path.points.iter().map(|p| p.p12).collect();
    let first = p12.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    let second = p12.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).abs()).fold(0.0, f64::max);
    assert!(second < 10.0 * first);
    // c is linear in Δτ near the curve
    let near = continue_path(&model, e, model.er_value(e) + 1e-5, 10).unwrap();
    let pts: Vec<(f64, f64)> = near.points.iter().map(|p| (p.tau - model.er_value(e), p.c)).collect();
    let (_, b, r2) = graphon_entropy::subgraph::linear_fit(&pts);
    assert!(b.abs() < 1e-5 && r2 > 0.999, "intercept {b:e} r2 {r2}");
}

#[test]
fn perturbed_seeds_converge_to_the_same_solution() {
    let model = star(2);
    let (e, tau) = (0.4, 0.1610);
    let reference = solve_at(&model, e, tau).unwrap();
    let mut r = rng(5);
    for _ in 0..20 {
        let mut seed = reference.state();
        for v in &mut seed {
            *v *= 1.0 + r.gen_range(-0.1..0.1);
        }
        let sol = solve_from_seed(&model, e, tau, seed).unwrap();
        for (a, b) in sol.state().iter().zip(reference.state()) {
            assert!((a - b).abs() < 1e-8, "{:?} vs {:?}", sol.state(), reference.state());
        }
    }
}

/// A random bipodal graphon with the given edge and 2-star densities, if one
/// exists for the drawn `c` and `p11`.
fn random_feasible(r: &mut rand_chacha::ChaCha8Rng, e: f64, tau: f64) -> Option<MultipodalGraphon> {
    let c: f64 = r.gen_range(0.02..0.5);
    let p11: f64 = r.gen_range(0.0..1.0);
    let p22_of = |p12: f64| (e - c * c * p11 - 2.0 * c * (1.0 - c) * p12) / ((1.0 - c) * (1.0 - c));
    let gap = |p12: f64| {
        let g = MultipodalGraphon::bipodal(c, p11, p12, p22_of(p12).clamp(0.0, 1.0)).unwrap();
        kstar_density(&g, 2).unwrap() - tau
    };
    // scan for a sign change with p22 in [0, 1]
    let n = 2000;
    let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).filter(|&x| (0.0..=1.0).contains(&p22_of(x))).collect();
    let (mut lo, mut hi) = xs.windows(2).map(|w| (w[0], w[1])).find(|&(a, b)| gap(a) * gap(b) <= 0.0)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(lo) * gap(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let g = MultipodalGraphon::bipodal(c, p11, lo, p22_of(lo)).ok()?;
    ((edge_density(&g) - e).abs() < 1e-12 && (kstar_density(&g, 2).unwrap() - tau).abs() < 1e-12).then_some(g)
}

#[test]
fn solution_dominates_random_feasible_bipodals() {
    let model = star(2);
    let (e, tau) = (0.4, 0.1620);
    let best = solve_at(&model, e, tau).unwrap();
    let mut r = rng(9);
    let mut found = 0;
    while found < 50 {
        if let Some(g) = random_feasible(&mut r, e, tau) {
            assert!(entropy(&g).value() < best.s, "random feasible graphon beats the solution");
            found += 1;
        }
    }
}

#[test]
fn limit_point_has_zero_width_and_er_block() {
    let (x, best) = limit_point(&star(3), 0.3).unwrap();
    assert_eq!(x[3], 0.0);
    assert_eq!(x[2], 0.3);
    assert_eq!(x[1], best.e_tilde);
}
