use std::f64::consts::PI;
use std::sync::Arc;

use landau_cone::bloch::*;
use landau_cone::linalg::{c, herm_eig, herm_eigvals, max_abs, CMat};
use landau_cone::local_model::*;
use landau_cone::Error;
use nalgebra::{DVector, Matrix2};
use proptest::prelude::*;

const K: [f64; 2] = [2.0 * PI / 3.0, -2.0 * PI / 3.0];

fn rank1(u: &[f64]) -> CMat {
    let v = CMat::from_fn(u.len(), 1, |i, _| c(u[i], 0.0));
    &v * v.adjoint()
}

#[test]
fn nagy_identity_and_rotation() {
    let p0 = rank1(&[1.0, 0.0]);
    let u = nagy_intertwiner(&p0, &p0).unwrap();
    assert!(max_abs(&(u - CMat::identity(2, 2))) < 1e-14);

    // ‖P − P₀‖ = sin φ, so the admissible range is φ ≤ π/6.
    for phi in [0.1f64, 0.3, 0.5] {
        let p = rank1(&[phi.cos(), phi.sin()]);
        let u = nagy_intertwiner(&p, &p0).unwrap();
        let rot = CMat::from_row_slice(2, 2, &[c(phi.cos(), 0.0), c(-phi.sin(), 0.0), c(phi.sin(), 0.0), c(phi.cos(), 0.0)]);
        assert!(max_abs(&(u - rot)) < 1e-12, "phi = {phi}");
    }
    let phi = 0.6f64.asin();
    match nagy_intertwiner(&rank1(&[phi.cos(), phi.sin()]), &p0) {
        Err(Error::IntertwinerOutOfRange { norm, .. }) => assert!((norm - 0.6).abs() < 1e-12),
        other => panic!("{other:?}"),
    }
    assert!(nagy_intertwiner(&(p0.clone() * c(2.0, 0.0)), &p0).is_err());
}

fn random_hermitian(n: usize, seed: &[f64]) -> CMat {
    let mut h = CMat::from_fn(n, n, |i, j| c(seed[(i * n + j) % seed.len()], seed[(3 * i + j + 1) % seed.len()]));
    h = &h + h.adjoint();
    h
}

proptest! {
    #[test]
    fn nagy_intertwines(seed in prop::collection::vec(-1.0f64..1.0, 16), eps in 0.0f64..0.24, rank in 1usize..4) {
        let p0 = CMat::from_fn(4, 4, |i, j| if i == j && i < rank { c(1.0, 0.0) } else { c(0.0, 0.0) });
        // P = e^{iεH/‖H‖} P₀ e^{−iεH/‖H‖}, so ‖P − P₀‖ ≤ 2ε < ½.
        let h = random_hermitian(4, &seed);
        let nrm = herm_eigvals(&h).iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-9);
        let (vals, vecs) = herm_eig(&h);
        let d = CMat::from_diagonal(&DVector::from_iterator(4, vals.iter().map(|l| c(0.0, eps * l / nrm).exp())));
        let g = &vecs * d * vecs.adjoint();
        let p = &g * &p0 * g.adjoint();
        let u = nagy_intertwiner(&p, &p0).unwrap();
        prop_assert!(max_abs(&(u.adjoint() * &u - CMat::identity(4, 4))) < 1e-10);
        prop_assert!(max_abs(&(&u * &p0 - &p * &u)) < 1e-10);
    }

    #[test]
    fn pauli_roundtrip(f0 in -5.0f64..5.0, f1 in -5.0f64..5.0, f2 in -5.0f64..5.0, f3 in -5.0f64..5.0) {
        let m = Pauli::new(f0, [f1, f2, f3]).matrix();
        let p = pauli_decompose(&m).unwrap();
        prop_assert!((p.f0 - f0).abs() <= 1e-14 && (0..3).all(|l| (p.f[l] - [f1, f2, f3][l]).abs() <= 1e-14));
        prop_assert!((p.matrix() - m).iter().all(|z| z.norm() <= 1e-14));
        // λ± = F₀ ± |F| against direct diagonalization.
        let ev = herm_eigvals(&CMat::from_fn(2, 2, |i, j| m[(i, j)]));
        let (lm, lp) = p.eigenvalues();
        prop_assert!((lm - ev[0]).abs() <= 1e-12 && (lp - ev[1]).abs() <= 1e-12);
    }
}

#[test]
fn pauli_examples() {
    let s3 = Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0));
    assert_eq!(pauli_decompose(&s3).unwrap(), Pauli::new(0.0, [0.0, 0.0, 1.0]));
    assert_eq!(pauli_decompose(&Matrix2::identity()).unwrap(), Pauli::new(1.0, [0.0; 3]));
    let bad = Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
    assert!(matches!(pauli_decompose(&bad), Err(Error::InvalidInput(_))));
}

#[test]
fn symbol_eigenvalue_examples() {
    let flat = TwoBandSymbol::from_fn(|_| Pauli::new(0.7, [0.0; 3]));
    assert_eq!(symbol_eigenvalues(&flat, [0.0, 0.0]), (0.7, 0.7));
    let unit = TwoBandSymbol::from_fn(|_| Pauli::new(0.0, [0.6, 0.0, 0.8]));
    let (a, b) = symbol_eigenvalues(&unit, [0.0, 0.0]);
    assert!((a + 1.0).abs() < 1e-15 && (b - 1.0).abs() < 1e-15);
    let (a, b) = symbol_eigenvalues(&TwoBandSymbol::honeycomb(), [PI, PI]);
    assert!((a + 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
}

#[test]
fn honeycomb_linearization() {
    let lin = linearize_at_crossing(&TwoBandSymbol::honeycomb(), K, 1e-12).unwrap();
    let g = lin.gram();
    assert!(lin.f1.abs() < 1e-10 && lin.f2.abs() < 1e-10);
    assert!((g[0] - 1.0).abs() < 1e-8 && (g[2] - 1.0).abs() < 1e-8 && (g[1] + 0.5).abs() < 1e-8);
    assert!((lin.a0 - 0.5).abs() < 1e-8);
    assert!((lin.mu() + 0.5).abs() < 1e-8);
    let d = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    assert!(d(lin.v3, lin.v1).abs() < 1e-10 && d(lin.v3, lin.v2).abs() < 1e-10);
    assert!((d(lin.v3, lin.v3) - 1.0).abs() < 1e-14);
    let rep = check_ellipticity(&lin).unwrap();
    assert!((rep.worst_margin - 0.5).abs() < 1e-8);
    assert!(rep.a < 1e-8);
    assert!(linearize_at_crossing(&TwoBandSymbol::honeycomb(), [0.0, 0.0], 1e-6).is_err());
}

#[test]
fn linear_symbol_linearizes_to_itself() {
    let s = TwoBandSymbol::from_fn(|t| Pauli::new(0.0, [t[0], t[1], 0.0]));
    let lin = linearize_at_crossing(&s, [0.0, 0.0], 1e-12).unwrap();
    assert_eq!(lin, DiracLinearization::isotropic());
    assert_eq!(lin.v3, [0.0, 0.0, 1.0]);
    assert_eq!(lin.a0, 1.0);
    for (t, tau) in [(0.3, -0.4), (1.0, 0.0), (-2.0, 5.0)] {
        let want = -(t * t + tau * tau);
        assert!((lin.det(t, tau) - want).abs() <= 4.0 * f64::EPSILON * want.abs());
    }
    let flat = TwoBandSymbol::from_fn(|t| Pauli::new(0.0, [t[0] + 2.0 * t[1], 0.0, 0.0]));
    assert_eq!(linearize_at_crossing(&flat, [0.0, 0.0], 1e-12), Err(Error::DegenerateCone));
}

#[test]
fn overtilted_cone_is_not_elliptic() {
    let tilted = TwoBandSymbol::from_fn(|t| Pauli::new(1.5 * t[0], [t[0], t[1], 0.0]));
    assert!(matches!(
        linearize_at_crossing(&tilted, [0.0, 0.0], 1e-12),
        Err(Error::EllipticityViolated { .. })
    ));
    let forced = DiracLinearization {
        f1: 2.0,
        ..DiracLinearization::isotropic()
    };
    assert!(matches!(check_ellipticity(&forced), Err(Error::EllipticityViolated { .. })));
}

#[test]
fn constant_projector_gives_constant_frame() {
    let d = [-5.0, 0.0, 0.0, 5.0];
    let src = FiberFn {
        dim: 4,
        f: move |_| CMat::from_diagonal(&DVector::from_iterator(4, d.iter().map(|x| c(*x, 0.0)))),
    };
    let bands = compute_bands_with(&src, 8, 4, [-PI, -PI], true).unwrap();
    let cp = CrossingPoint {
        theta0: [0.0, 0.0],
        k0: 1,
        energy: 0.0,
        window: (1.0, 1.0),
        sigma_radius: 2.0,
        gap: 0.0,
        warnings: vec![],
    };
    let ff = build_local_frame(&src, &bands, &cp, None).unwrap();
    assert!(!ff.nodes.is_empty());
    for (_, _, fr) in &ff.nodes {
        assert!(max_abs(&(fr - &ff.seed)) < 1e-14);
    }
    assert!(ff.continuity_constant(&bands) < 1e-12);
}

fn triangular() -> (BlochProblem, BandGrid, CrossingPoint) {
    // For v = −1 the pair projector drifts past ½ already at radius 0.3;
    // v = −3 isolates the pair better (drift 0.35 at radius 0.4).
    let p = BlochProblem::triangular_cosine(-3.0, 3);
    let bands = compute_bands_with(&p, 48, 4, [-PI, -PI], true).unwrap();
    let opts = CrossingOptions {
        sigma_radius: 0.4,
        ..Default::default()
    };
    let cp = locate_crossing(&p, &bands, 1, &opts).unwrap();
    (p, bands, cp)
}

#[test]
fn triangular_frame_invariants() {
    let (p, bands, cp) = triangular();
    let ff = build_local_frame(&p, &bands, &cp, None).unwrap();
    assert!(ff.nodes.len() > 4);
    assert!(ff.orthonormality_defect() <= 1e-10);
    assert!(ff.membership_defect(&bands, 1) <= 1e-10);
    let lip = ff.continuity_constant(&bands);
    assert!(lip.is_finite() && lip < 5.0, "{lip}");
    let mats = ff.local_matrices(&p, cp.energy);
    for ((f, _, _), m) in ff.nodes.iter().zip(&mats) {
        let ev = &bands.eigenvalues[*f];
        let pl = pauli_decompose(m).unwrap();
        let (lm, lp) = pl.eigenvalues();
        assert!((lm + cp.energy - ev[1]).abs() < 1e-8 && (lp + cp.energy - ev[2]).abs() < 1e-8);
        // F₀ = λ∘ and |F| = δ.
        assert!((pl.f0 + cp.energy - 0.5 * (ev[1] + ev[2])).abs() < 1e-10);
        assert!((pl.norm_f() - 0.5 * (ev[2] - ev[1])).abs() < 1e-10);
    }
}

#[test]
fn oversized_disk_is_rejected_at_a_node() {
    let (p, bands, mut cp) = triangular();
    cp.sigma_radius = 4.0;
    match build_local_frame(&p, &bands, &cp, None) {
        Err(Error::IntertwinerOutOfRange { norm, node }) => {
            assert!(norm > 0.5);
            assert!(node.is_some());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn taylor_data_is_frame_independent() {
    let (p, _, cp) = triangular();
    let seed = seed_frame(&p, cp.theta0, 1);
    let (a, b) = (0.4f64, 1.1f64);
    let rot = CMat::from_row_slice(
        2,
        2,
        &[
            c(a.cos(), 0.0),
            c(0.0, a.sin()) * c(0.0, b).exp(),
            c(0.0, a.sin()) * c(0.0, -b).exp(),
            c(a.cos(), 0.0),
        ],
    );
    let src: Arc<dyn FiberFamily> = Arc::new(p);
    let l1 = linearize_at_crossing(&local_symbol(src.clone(), &cp, seed.clone()), cp.theta0, 1e-6).unwrap();
    let l2 = linearize_at_crossing(&local_symbol(src, &cp, &seed * rot), cp.theta0, 1e-6).unwrap();
    let (g1, g2) = (l1.gram(), l2.gram());
    assert!((l1.f1 - l2.f1).abs() < 1e-8 && (l1.f2 - l2.f2).abs() < 1e-8);
    for k in 0..3 {
        assert!((g1[k] - g2[k]).abs() < 1e-8, "{g1:?} vs {g2:?}");
    }
    assert!(l1.tilt() < 1e-6 && l1.a0 > 0.0);
}

#[test]
fn symbol_serialization() {
    let h = TwoBandSymbol::honeycomb();
    let back = TwoBandSymbol::from_json(&h.to_json().unwrap()).unwrap();
    let grid = h.sample(8, [-PI, -PI]);
    let json = serde_json::json!({ "pauli_grid": grid }).to_string();
    let interp = TwoBandSymbol::from_json(&json).unwrap();
    for t in [[0.3, -1.2], K, [2.9, 0.1]] {
        assert!((back.matrix(t) - h.matrix(t)).iter().all(|z| z.norm() < 1e-14));
        // Nearest-neighbour data is band-limited, so 8 samples reproduce it.
        assert!((interp.matrix(t) - h.matrix(t)).iter().all(|z| z.norm() < 1e-12));
    }
    assert!(TwoBandSymbol::from_fn(|_| Pauli::new(0.0, [0.0; 3])).to_json().is_err());
    assert!(TwoBandSymbol::from_json("{\"nope\": 1}").is_err());
}
