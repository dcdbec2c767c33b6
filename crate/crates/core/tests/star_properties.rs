use graphon_entropy::star::{classify, degenerate_roots, zeta, PsiProfile};
use graphon_entropy::StarWeights;
use proptest::prelude::*;

fn grid99() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

#[test]
fn criticality_along_the_grid() {
    for k in 2..=5u32 {
        for e in grid99() {
            let profile = PsiProfile::kstar(k, e).unwrap();
            if classify(StarWeights::kstar(k).unwrap(), e).unwrap().flagged {
                continue;
            }
            let best = zeta(&profile).unwrap();
            let d1 = profile.psi_prime(best.e_tilde, 1).unwrap();
            let d2 = profile.psi_prime(best.e_tilde, 2).unwrap();
            assert!(d1.abs() < 1e-8, "k={k} e={e}: psi' = {d1:e}");
            assert!(d2 < 0.0, "k={k} e={e}: psi'' = {d2:e}");
            assert!((best.beta - profile.psi(best.e_tilde).unwrap()).abs() < 1e-14);
        }
    }
}

#[test]
fn polynomial_profiles_are_involutions() {
    // e-independent weights: ζ is still an involution
    let w = StarWeights::new(&[(2, 1.0), (3, 0.5)]).unwrap();
    for e in grid99() {
        if classify(w.clone(), e).unwrap().flagged {
            continue;
        }
        let z = zeta(&PsiProfile::new(w.clone(), e).unwrap()).unwrap().e_tilde;
        if classify(w.clone(), z).unwrap().flagged {
            continue;
        }
        let back = zeta(&PsiProfile::new(w.clone(), z).unwrap()).unwrap().e_tilde;
        assert!((back - e).abs() < 1e-8, "e = {e}: ζ(ζ(e)) = {back}");
    }
}

#[test]
fn degenerate_points_lie_in_the_window() {
    for terms in [vec![(2, 1.0)], vec![(3, 1.0)], vec![(5, 1.0)], vec![(2, 1.0), (4, 2.0)], vec![(3, 0.3), (6, 1.0)]] {
        let w = StarWeights::new(&terms).unwrap();
        let kmax = w.degree() as f64;
        for root in degenerate_roots(&w) {
            assert!(root >= 0.5 - 1e-9 && root <= (kmax - 1.0) / kmax + 1e-9, "{terms:?}: {root}");
        }
    }
}

#[test]
fn maximizers_next_to_one_are_resolved() {
    // 1 - ζ from 60-digit arithmetic
    for (k, e, gap) in [(5u32, 0.01, 9.90000039204e-9), (6, 0.01, 9.9000000049e-11), (6, 0.02, 3.13600004917e-9)] {
        let z = zeta(&PsiProfile::kstar(k, e).unwrap()).unwrap().e_tilde;
        assert!(((1.0 - z) / gap - 1.0).abs() < 1e-4, "k={k} e={e}: 1 - ζ = {:e}", 1.0 - z);
    }
}

proptest! {
    #[test]
    fn sensitivity_sign_is_locally_constant(k in 2u32..6, e in 0.05f64..0.95) {
        let fixed = (k as f64 - 1.0) / k as f64;
        prop_assume!((e - fixed).abs() > 0.1);
        let profile = PsiProfile::kstar(k, e).unwrap();
        let z = zeta(&profile).unwrap().e_tilde;
        prop_assume!(z > 2e-3 && z < 1.0 - 2e-3);
        let sign = profile.beta_sensitivity(z).unwrap().signum();
        for j in -4..=4 {
            let s = profile.beta_sensitivity(z + j as f64 * 2.5e-4).unwrap();
            prop_assert_eq!(s.signum(), sign);
        }
    }
}
