use approx::assert_relative_eq;
use landau_cone::feshbach::*;
use landau_cone::linalg::{c, herm_eigvals, op_norm, CMat, ZERO};
use landau_cone::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn two_by_two(delta: f64) -> (CMat, CMat) {
    let h = CMat::from_row_slice(2, 2, &[ZERO, c(1.0, 0.0), c(1.0, 0.0), c(delta, 0.0)]);
    let pi = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), ZERO, ZERO, ZERO]);
    (h, pi)
}

fn diag(v: &[f64]) -> CMat {
    let mut m = CMat::zeros(v.len(), v.len());
    for (i, x) in v.iter().enumerate() {
        m[(i, i)] = c(*x, 0.0);
    }
    m
}

#[test]
fn block_diagonal_is_admissible_with_margin() {
    let h = diag(&[0.3, -5.0, 5.0]);
    let pi = diag(&[1.0, 0.0, 0.0]);
    let t = check_admissible(&h, &pi, (-1.0, 1.0)).unwrap();
    assert_relative_eq!(t.margin(), 4.0, epsilon = 1e-12);
    let d = dressed_hamiltonian(&t);
    // [Π,H] = 0: H̃ = ΠHΠ and Y = Π.
    assert_relative_eq!(d.matrix[(0, 0)].re, 0.3, epsilon = 1e-14);
    assert_relative_eq!(d.y_min, 1.0, epsilon = 1e-14);
}

#[test]
fn complement_eigenvalue_inside_window_is_rejected() {
    let h = diag(&[0.0, 0.5, 5.0]);
    let pi = diag(&[1.0, 0.0, 0.0]);
    match check_admissible(&h, &pi, (-1.0, 1.0)) {
        Err(Error::NotAdmissible { eigenvalue }) => assert_relative_eq!(eigenvalue, 0.5, epsilon = 1e-12),
        other => panic!("expected not-admissible, got {other:?}"),
    }
}

#[test]
fn two_by_two_closed_forms() {
    let (h, pi) = two_by_two(10.0);
    let t = check_admissible(&h, &pi, (-5.0, 5.0)).unwrap();
    let d = dressed_hamiltonian(&t);
    assert_relative_eq!(d.y[(0, 0)].re, 1.01, epsilon = 1e-14);
    assert_relative_eq!(d.matrix[(0, 0)].re, -10.0 / 101.0, epsilon = 1e-14);
    let exact = (10.0 - 104f64.sqrt()) / 2.0;
    let r = spectral_distance_bound(&t, (-0.2, 0.2)).unwrap();
    assert_relative_eq!(r.bound, 0.04 / 25.0 / 4.8, epsilon = 1e-15);
    assert_relative_eq!(r.h_to_tilde, (exact + 10.0 / 101.0).abs(), epsilon = 1e-13);
    assert!(r.h_to_tilde < 1e-5 && r.h_to_tilde > 9e-6);
    assert!(r.verified);
    // det S(e*) = 0 at the exact eigenvalue.
    let s = schur_complement(&t, exact).unwrap();
    assert!(s[(0, 0)].norm() < 1e-12);
}

#[test]
fn schur_outside_interval_is_domain_error() {
    let (h, pi) = two_by_two(10.0);
    let t = check_admissible(&h, &pi, (-5.0, 5.0)).unwrap();
    assert!(matches!(schur_complement(&t, 6.0), Err(Error::DomainError { .. })));
}

#[test]
fn homogeneity_under_scaling() {
    let (h, pi) = two_by_two(10.0);
    let t1 = check_admissible(&h, &pi, (-5.0, 5.0)).unwrap();
    let t3 = check_admissible(&(h * c(3.0, 0.0)), &pi, (-15.0, 15.0)).unwrap();
    let a = dressed_hamiltonian(&t1).matrix[(0, 0)].re;
    let b = dressed_hamiltonian(&t3).matrix[(0, 0)].re;
    assert_relative_eq!(b, 3.0 * a, epsilon = 1e-14);
}

#[test]
fn random_triple_margin_matches_direct_diagonalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = RandomTripleSpec {
        dim: 40,
        ..Default::default()
    };
    let (h, pi, iv) = random_admissible(&mut rng, &spec);
    let t = check_admissible(&h, &pi, iv).unwrap();
    // Oracle: restrict to Ran Π⊥ via an explicit basis from 𝟙 − Π.
    let comp = CMat::identity(40, 40) - &pi;
    let proj = &comp * &h * &comp;
    let ev = herm_eigvals(&proj);
    // Ran Π contributes exact zeros; everything else is the complement spectrum.
    let mut nonzero: Vec<f64> = ev.into_iter().filter(|x| x.abs() > 1e-8).collect();
    nonzero.sort_by(f64::total_cmp);
    let margin = nonzero
        .iter()
        .map(|&x| (x - iv.0).abs().min((x - iv.1).abs()))
        .fold(f64::INFINITY, f64::min);
    assert_relative_eq!(t.margin(), margin, epsilon = 1e-10);
    assert!(t.margin() >= spec.gap - 1e-10);
}

#[test]
fn feshbach_equivalence_and_inverse_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spec = RandomTripleSpec {
        dim: 30,
        rank: 3,
        ..Default::default()
    };
    let (h, pi, iv) = random_admissible(&mut rng, &spec);
    let t = check_admissible(&h, &pi, iv).unwrap();
    let norm = op_norm(&h);
    let eig = herm_eigvals(&h);
    for &e in eig.iter().filter(|&&e| e > iv.0 && e < iv.1) {
        let s = schur_complement(&t, e).unwrap();
        let smin = herm_eigvals(&s).iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
        assert!(smin <= 1e-9 * norm, "σ_min(S({e})) = {smin:e}");
    }
    // Resolvent-gap point: Π(H−e)⁻¹Π = S(e)⁻¹.
    let e = (0..200)
        .map(|k| iv.0 + (iv.1 - iv.0) * (k as f64 + 0.5) / 200.0)
        .max_by(|a, b| {
            let da = eig.iter().map(|x| (x - a).abs()).fold(f64::INFINITY, f64::min);
            let db = eig.iter().map(|x| (x - b).abs()).fold(f64::INFINITY, f64::min);
            da.total_cmp(&db)
        })
        .unwrap();
    let s = schur_complement(&t, e).unwrap();
    let mut hm = h.clone();
    for i in 0..30 {
        hm[(i, i)] -= c(e, 0.0);
    }
    let res = hm.try_inverse().unwrap();
    let p = t.basis();
    let lhs = p.adjoint() * res * p;
    let rhs = s.try_inverse().unwrap();
    assert!((lhs - rhs).norm() < 1e-9);
}

#[test]
fn resolvent_expansion_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (h, pi, iv) = random_admissible(&mut rng, &RandomTripleSpec { dim: 24, ..Default::default() });
    let t = check_admissible(&h, &pi, iv).unwrap();
    let e = 0.7;
    let r0 = t.complement_resolvent(0.0).unwrap();
    let re = t.complement_resolvent(e).unwrap();
    let rhs = &r0 + &r0 * &r0 * c(e, 0.0) + &r0 * &r0 * &re * c(e * e, 0.0);
    assert!(op_norm(&(re - rhs)) < 1e-10);
}

#[test]
fn two_hundred_random_triples_respect_the_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = 0;
    for k in 0..200 {
        let spec = RandomTripleSpec {
            dim: 60,
            rank: 2 + k % 6,
            coupling: 0.3 + (k % 5) as f64 * 0.4,
            ..Default::default()
        };
        let (h, pi, iv) = random_admissible(&mut rng, &spec);
        let t = check_admissible(&h, &pi, iv).unwrap();
        let d = dressed_hamiltonian(&t);
        assert!(d.y_min >= 1.0 - 1e-12);
        let r = compare_spectra(&t, (-0.6, 0.6)).unwrap();
        if !r.verified {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dressed_is_hermitian_and_y_dominates(seed in 0u64..10_000, rank in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h, pi, iv) = random_admissible(&mut rng, &RandomTripleSpec { dim: 20, rank, ..Default::default() });
        let t = check_admissible(&h, &pi, iv).unwrap();
        let d = dressed_hamiltonian(&t);
        prop_assert!(landau_cone::linalg::hermitian_defect(&d.matrix) < 1e-12);
        prop_assert!(d.y_min >= 1.0 - 1e-12);
        let r = compare_spectra(&t, (-1.0, 1.0)).unwrap();
        prop_assert!(r.verified);
    }
}
