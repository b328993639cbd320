use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_relative_eq;
use landau_cone::hopping::HoppingSet;
use landau_cone::linalg::{c, hermitian_defect, herm_eigvals, op_norm, CMat, ONE, ZERO};
use landau_cone::magnetic::*;
use landau_cone::spectrum::{hausdorff, SpectrumSet};
use landau_cone::Error;
use proptest::prelude::*;

fn fl(a: [i32; 2]) -> [f64; 2] {
    [a[0] as f64, a[1] as f64]
}

#[test]
fn phase_examples() {
    assert_eq!(magnetic_phase([0.3, -1.2], [0.3, -1.2], 0.7), ONE);
    let z = magnetic_phase([1.0, 0.0], [0.0, 1.0], PI);
    assert_relative_eq!(z.re, 0.0, epsilon = 1e-15);
    assert_relative_eq!(z.im, -1.0, epsilon = 1e-15);
    // Right triangle of area ½ in flux 2π: half a flux quantum.
    let w = flux_phase([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], 2.0 * PI);
    assert_relative_eq!(w.re, -1.0, epsilon = 1e-15);
    assert_eq!(flux_phase([0.0, 0.0], [1.0, 1.0], [2.0, 2.0], 3.0), ONE);
}

proptest! {
    #[test]
    fn phases_are_unitary_antisymmetric_and_stokes(
        x in prop::array::uniform2(-20.0f64..20.0),
        y in prop::array::uniform2(-20.0f64..20.0),
        z in prop::array::uniform2(-20.0f64..20.0),
        s in prop::array::uniform2(-5.0f64..5.0),
        b in -3.0f64..3.0,
    ) {
        let l = magnetic_phase(x, y, b);
        prop_assert!((l.norm() - 1.0).abs() < 1e-14);
        prop_assert!((l * magnetic_phase(y, x, b) - ONE).norm() < 1e-12);
        // Λ(x,y)Λ(y,z)Λ(z,x) = Ω(x,y,z).
        let loop_ = magnetic_phase(x, y, b) * magnetic_phase(y, z, b) * magnetic_phase(z, x, b);
        prop_assert!((loop_ - flux_phase(x, y, z, b)).norm() < 1e-10);
        // Flux through a triangle is translation invariant.
        let sh = |p: [f64; 2]| [p[0] + s[0], p[1] + s[1]];
        prop_assert!((flux_phase(sh(x), sh(y), sh(z), b) - flux_phase(x, y, z, b)).norm() < 1e-10);
    }
}

#[test]
fn flux_rational_parsing_and_convergents() {
    let f: FluxRational = "2/5".parse().unwrap();
    assert_eq!((f.p(), f.q()), (2, 5));
    assert_eq!(f.to_string(), "2/5");
    assert!("2/4".parse::<FluxRational>().is_err());
    assert!("x".parse::<FluxRational>().is_err());
    assert!(FluxRational::new(1, 0).is_err());
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let qs: Vec<i64> = FluxRational::convergents(golden, 400).iter().map(|f| f.q()).collect();
    assert_eq!(&qs[qs.len() - 4..], &[89, 144, 233, 377]);
}

#[test]
fn point_wannier_gram_is_identity() {
    let patch = SquarePatch::new(3, 2);
    let g = gram_matrix(&PointWannier { orbitals: 2 }, 0.4, patch, 2);
    assert_eq!(g, CMat::identity(patch.dim(), patch.dim()));
}

#[test]
fn gaussian_gram_deviation_is_linear_in_flux() {
    let w = GaussianWannier::new(0.35, 8);
    let patch = SquarePatch::new(3, 1);
    let g0 = gram_matrix(&w, 0.0, patch, 3);
    assert!(gram_deviation(&g0) < 1e-10, "Löwdin family not orthonormal: {:e}", gram_deviation(&g0));
    let d: Vec<f64> = [0.01, 0.02, 0.04, 0.1]
        .iter()
        .map(|&b| gram_deviation(&gram_matrix(&w, b, patch, 3)))
        .collect();
    assert!(d[0] <= 0.05);
    // O(ε) is only an upper bound: reflection symmetry of the family cancels
    // the low orders and the measured slope is ≈ 4.
    let slope = landau_cone::linalg::loglog_slope(&[0.01, 0.02, 0.04, 0.1], &d);
    assert!(slope >= 1.0, "slope {slope}");
    assert!(d.windows(2).all(|w| w[0] < w[1]));
    let g = gram_matrix(&w, 0.1, patch, 3);
    assert!(hermitian_defect(&g) < 1e-13);
    for i in 0..patch.dim() {
        assert_eq!(g[(i, i)], ONE);
    }
}

#[test]
fn inverse_sqrt_oracles() {
    let id = CMat::identity(3, 3);
    assert!((inverse_sqrt(&id).unwrap() - &id).norm() < 1e-15);
    let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(4.0, 0.0), ONE]));
    let f = inverse_sqrt(&d).unwrap();
    assert_relative_eq!(f[(0, 0)].re, 0.5, epsilon = 1e-15);
    assert_relative_eq!(f[(1, 1)].re, 1.0, epsilon = 1e-15);
    let g = 0.2;
    let m = CMat::from_row_slice(2, 2, &[ONE, c(g, 0.0), c(g, 0.0), ONE]);
    let (a, b) = ((1.0 + g).powf(-0.5), (1.0 - g).powf(-0.5));
    let f = inverse_sqrt(&m).unwrap();
    assert_relative_eq!(f[(0, 0)].re, (a + b) / 2.0, epsilon = 1e-14);
    assert_relative_eq!(f[(0, 1)].re, (a - b) / 2.0, epsilon = 1e-14);
    assert!((&f * &m * &f - CMat::identity(2, 2)).norm() < 1e-14);
    let singular = CMat::from_element(2, 2, ONE);
    assert!(matches!(inverse_sqrt(&singular), Err(Error::GramNotPositive { .. })));
}

#[test]
fn gram_inverse_sqrt_decays() {
    let w = GaussianWannier::new(0.35, 8);
    let patch = SquarePatch::new(4, 1);
    let g = gram_matrix(&w, 0.3, patch, 3);
    let f = inverse_sqrt(&g).unwrap();
    assert!(op_norm(&(&f * &g * &f - CMat::identity(patch.dim(), patch.dim()))) < 1e-12);
    assert!(decay_profile(&f, patch, 2).is_finite());
    assert!(decay_profile(&f, patch, 0) < 1.0);
}

#[test]
fn magnetic_matrix_is_hermitian_and_gauge_covariant() {
    let hc = HoppingSet::honeycomb();
    let b = 2.0 * PI / 7.0;
    let l = 5;
    let m = build_magnetic_matrix(&hc, b, l).unwrap();
    assert!(hermitian_defect(&m) < 1e-14);
    let patch = SquarePatch::new(l, 2);
    // Entry-level oracle: Λ(α,β)𝓂(α−β).
    let a = [2, -1];
    let bb = [1, -1];
    let expect = magnetic_phase(fl(a), fl(bb), b) * hc.get([1, 0]).unwrap()[(1, 0)];
    assert!((m[(patch.index(a, 1), patch.index(bb, 0))] - expect).norm() < 1e-15);
    // Zak translations commute with 𝓜 away from the boundary.
    let w = [1, 2];
    let t = magnetic_translation(patch, w, b);
    let comm = &t * &m - &m * &t;
    for r in 0..patch.dim() {
        for col in 0..patch.dim() {
            let (x, y) = (patch.site(r / 2), patch.site(col / 2));
            if patch.depth(x) >= 3 && patch.depth(y) >= 3 {
                assert!(comm[(r, col)].norm() < 1e-13);
            }
        }
    }
}

#[test]
fn zak_cocycle_on_interior() {
    let patch = SquarePatch::new(6, 1);
    let b = 0.9;
    let (u, v) = ([1, 0], [-1, 2]);
    let lhs = magnetic_translation(patch, u, b) * magnetic_translation(patch, v, b);
    let rhs = magnetic_translation(patch, [0, 2], b) * magnetic_phase(fl(v), fl(u), b);
    for r in 0..patch.dim() {
        if patch.depth(patch.site(r)) >= 3 {
            for col in 0..patch.dim() {
                assert!((lhs[(r, col)] - rhs[(r, col)]).norm() < 1e-14);
            }
        }
    }
}

#[test]
fn magnetic_matrix_examples() {
    let s3 = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    let m = build_magnetic_matrix(&HoppingSet::onsite(s3), 1.3, 3).unwrap();
    let set = SpectrumSet::unbounded(herm_eigvals(&m));
    assert_eq!(set.clustered(1e-12), vec![(-1.0, 49), (1.0, 49)]);
    assert!(build_magnetic_matrix(&HoppingSet::honeycomb(), 1.0, 2).is_err());
    let half = build_magnetic_matrix(&HoppingSet::honeycomb(), PI, 8).unwrap();
    let ev = herm_eigvals(&half);
    let n = ev.len();
    for i in 0..n {
        assert!((ev[i] + ev[n - 1 - i]).abs() < 1e-10);
    }
}

#[test]
fn zero_flux_hofstadter_samples_the_bands() {
    let hc = HoppingSet::honeycomb();
    let f = FluxRational::new(0, 1).unwrap();
    let s = hofstadter_spectrum(&hc, f, [5, 5], (-4.0, 4.0)).unwrap();
    let band: Vec<f64> = mbz_nodes(1, [5, 5])
        .into_iter()
        .flat_map(|k| {
            let z = c(1.0, 0.0) + c(k[0].cos(), k[0].sin()) + c(k[1].cos(), k[1].sin());
            [-z.norm(), z.norm()]
        })
        .collect();
    assert!(hausdorff(&s, &SpectrumSet::new(band, (-4.0, 4.0))) < 1e-14);
}

#[test]
fn harper_half_flux_closed_form() {
    let f = FluxRational::new(1, 2).unwrap();
    for k in mbz_nodes(2, [3, 4]) {
        let ev = herm_eigvals(&magnetic_bloch_matrix(&HoppingSet::harper(), f, k));
        let e = (k[0].cos().powi(2) + (0.5 * k[1]).cos().powi(2)).sqrt();
        assert_relative_eq!(ev[0], -e, epsilon = 1e-14);
        assert_relative_eq!(ev[1], e, epsilon = 1e-14);
    }
}

#[test]
fn flux_periodicity_for_axis_hops() {
    let hp = HoppingSet::harper();
    let w = (-3.0, 3.0);
    let a = hofstadter_spectrum(&hp, FluxRational::new(1, 3).unwrap(), [4, 4], w).unwrap();
    let b = hofstadter_spectrum(&hp, FluxRational::new(4, 3).unwrap(), [4, 4], w).unwrap();
    assert!(hausdorff(&a, &b) < 1e-12);
}

#[test]
fn resource_guard() {
    let f = FluxRational::new(1, 4001).unwrap();
    assert!(matches!(
        hofstadter_spectrum(&HoppingSet::honeycomb(), f, [1, 1], (-1.0, 1.0)),
        Err(Error::Resource(_))
    ));
}

/// Band intervals from a dense Bloch sweep.
fn band_intervals(m: &HoppingSet, f: FluxRational, n: usize) -> Vec<(f64, f64)> {
    let dim = f.q() as usize * m.orbitals();
    let mut iv = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
    for k in mbz_nodes(f.q(), [n, n]) {
        for (i, e) in herm_eigvals(&magnetic_bloch_matrix(m, f, k)).into_iter().enumerate() {
            iv[i].0 = iv[i].0.min(e);
            iv[i].1 = iv[i].1.max(e);
        }
    }
    iv
}

#[test]
fn finite_patch_interior_spectrum_lies_in_bands() {
    // Small flux: the near-zero states are localized, so the interior survives the edge filter.
    let hc = HoppingSet::honeycomb();
    let f = FluxRational::new(1, 20).unwrap();
    let iv = band_intervals(&hc, f, 6);
    let patch = SquarePatch::new(11, 2);
    let m = build_magnetic_matrix(&hc, f.b(), 11).unwrap();
    let inner = interior_spectrum(&m, patch, (-0.8, 0.8), 3, 5e-2);
    assert!(inner.removed > 0);
    assert!(inner.spectrum.len() >= 10, "kept {}", inner.spectrum.len());
    // dist(e, σ) ≤ ‖(𝓜_∞ − e)ψ‖ ≤ (Σ_γ‖𝓂(γ)‖) · √(boundary weight).
    let bound = 3.0 * inner.max_boundary_weight.sqrt();
    let mut close = 0;
    for &e in inner.spectrum.values() {
        let d = iv
            .iter()
            .map(|&(lo, hi)| if e < lo { lo - e } else if e > hi { e - hi } else { 0.0 })
            .fold(f64::INFINITY, f64::min);
        assert!(d <= bound, "interior eigenvalue {e} at distance {d} from the bands");
        close += usize::from(d < 1e-3);
    }
    assert!(2 * close > inner.spectrum.len(), "{close} of {} within 1e-3", inner.spectrum.len());
}

#[test]
fn poincare_gauge_reproduces_transverse_gauge_for_constant_field() {
    let a = |x: [f64; 2]| poincare_potential(&|_| 0.8, x);
    let v = a([1.5, -2.0]);
    assert_relative_eq!(v[0], 0.8, epsilon = 1e-14);
    assert_relative_eq!(v[1], 0.6, epsilon = 1e-14);
    let (x, y) = ([1.0, 2.0], [-3.0, 1.0]);
    let phase = c(0.0, -circulation(&a, x, y)).exp();
    assert!((phase - magnetic_phase(x, y, 0.8)).norm() < 1e-13);
    // Nonconstant B: the circulation around a small loop is the enclosed flux.
    let field = |x: [f64; 2]| 1.0 + 0.5 * (x[0] * 0.7).sin() * x[1];
    let a = |x: [f64; 2]| poincare_potential(&field, x);
    let (p, q, r, s) = ([2.0, 1.0], [2.1, 1.0], [2.1, 1.1], [2.0, 1.1]);
    let circ = circulation(&a, p, q) + circulation(&a, q, r) + circulation(&a, r, s) + circulation(&a, s, p);
    let flux = 0.01 * gauss_unit(|u| gauss_unit(|v| field([2.0 + 0.1 * u, 1.0 + 0.1 * v])));
    assert!((circ - flux).abs() < 1e-12, "{circ} vs {flux}");
}

#[test]
fn zero_kappa_routes_agree_with_hofstadter() {
    let hc = HoppingSet::honeycomb();
    let q = 21;
    let f = FluxRational::new(1, q).unwrap();
    let w = (-1.2, 1.2);
    // The strip cell is q × 1: its (k₁, k₂) grid [3, 2q] covers the MBZ grid [2, 3] of the 1 × q cell.
    let hof = hofstadter_spectrum(&hc, f, [2, 3], w).unwrap();
    let mp = MagneticParams::constant(f.b(), 1.0);
    let geometry = FieldGeometry::Strip { width: q as usize, grid: [3, 2 * q as usize] };
    let strip = nonconstant_field_spectrum(&hc, &mp, geometry, w).unwrap();
    assert!(hausdorff(&hof, &strip.spectrum) < 1e-6);
    // Patch route: identical matrix to the transverse gauge.
    let patch = nonconstant_field_spectrum(&hc, &mp, FieldGeometry::Patch { extent: 6 }, (-4.0, 4.0)).unwrap();
    let direct = build_magnetic_matrix(&hc, f.b(), 6).unwrap();
    let inner = interior_spectrum(&direct, SquarePatch::new(6, 2), (-4.0, 4.0), 2, 1e-4);
    assert!(hausdorff(&patch.spectrum, &inner.spectrum) < 1e-12);
}

#[test]
fn constant_perturbation_is_a_reparametrization() {
    let hc = HoppingSet::honeycomb();
    let q = 24;
    let eps = 2.0 * PI / 36.0;
    // ε(B° + κ) = 2π/24 with B° = 1, κ = 0.5.
    let mut mp = MagneticParams::constant(eps, 1.0);
    mp.kappa = 0.5;
    mp.field = Arc::new(|_| 1.0);
    let w = (-1.0, 1.0);
    let geometry = FieldGeometry::Strip { width: q, grid: [2, 4] };
    let a = nonconstant_field_spectrum(&hc, &mp, geometry, w).unwrap();
    let b = nonconstant_field_spectrum(&hc, &MagneticParams::constant(2.0 * PI / 24.0, 1.0), geometry, w).unwrap();
    assert!(hausdorff(&a.spectrum, &b.spectrum) < 1e-10);
}

#[test]
fn strip_rejects_non_integral_flux() {
    let mp = MagneticParams::constant(0.1, 1.0);
    let r = nonconstant_field_spectrum(&HoppingSet::honeycomb(), &mp, FieldGeometry::Strip { width: 10, grid: [1, 1] }, (-1.0, 1.0));
    assert!(matches!(r, Err(Error::InvalidInput(_))));
    let mut bad = MagneticParams::constant(0.1, 1.0);
    bad.kappa = 2.0;
    assert!(bad.validate().is_err());
}

#[test]
fn peierls_symbol_roundtrip() {
    let hc = HoppingSet::honeycomb();
    let s = peierls_symbol(&hc).unwrap();
    for th in [[0.1, 0.2], [2.0 * PI / 3.0, -2.0 * PI / 3.0], [-1.0, 3.0]] {
        let a = s.matrix(th);
        let b = hc.symbol(th);
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[(i, j)] - b[(i, j)]).norm() < 1e-14);
            }
        }
    }
}

#[test]
fn symbol_distance_scales_with_flux() {
    let hc = HoppingSet::honeycomb();
    let k = |t: [f64; 2]| hc.symbol(t);
    assert_eq!(symbol_distance(&k, &k, [0, 0], 8), 0.0);
    let shifted = |t: [f64; 2]| hc.symbol(t) + CMat::identity(2, 2) * c(0.3, 0.0);
    assert_relative_eq!(symbol_distance(&shifted, &k, [0, 0], 8), 0.3, epsilon = 1e-14);
    assert!(symbol_distance(&shifted, &k, [1, 0], 8) < 1e-12);
    assert!(symbol_distance(&shifted, &k, [1, 1], 8) < 1e-10);

    // Gram-kernel symbol: O(ε) away from its ε = 0 value.
    let w = GaussianWannier::new(0.35, 8);
    let g0 = gram_kernel(&w, 0.0, 3);
    let d: Vec<f64> = [0.02, 0.01]
        .iter()
        .map(|&b| {
            let g = gram_kernel(&w, b, 3);
            symbol_distance(&|t| g.symbol(t), &|t| g0.symbol(t), [0, 0], 12)
        })
        .collect();
    assert!(d[0] > 0.0 && d[0] / d[1] >= 1.9, "ratio {}", d[0] / d[1]);
}
