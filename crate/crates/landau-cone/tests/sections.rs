use std::f64::consts::PI;

use landau_cone::linalg::{c, cis, herm_fn, CMat, CVec};
use landau_cone::local_model::{linearize_at_crossing, TwoBandSymbol};
use landau_cone::sections::*;
use landau_cone::Error;
use proptest::prelude::*;

const K: [f64; 2] = [2.0 * PI / 3.0, -2.0 * PI / 3.0];
const KP: [f64; 2] = [-2.0 * PI / 3.0, 2.0 * PI / 3.0];

fn gp() -> GapParams {
    GapParams {
        delta: 2.0,
        c_lower: 2.0,
        sigma_radius: 1.0,
    }
}

fn honeycomb_gapped() -> GappedSymbol {
    let hc = TwoBandSymbol::honeycomb();
    let lin = linearize_at_crossing(&hc, K, 1e-8).unwrap();
    open_gap(&hc, K, &lin, &gp(), 64).unwrap()
}

#[test]
fn open_gap_is_bitwise_unchanged_outside_the_bump() {
    let hc = TwoBandSymbol::honeycomb();
    let g = honeycomb_gapped();
    let r = g.support_radius();
    let mut checked = 0;
    for i in 0..40 {
        for j in 0..40 {
            let t = [2.0 * PI * i as f64 / 40.0 + 0.013, 2.0 * PI * j as f64 / 40.0 - 0.007];
            if landau_cone::bloch::torus_distance(t, K) <= r {
                continue;
            }
            let (a, b) = (hc.pauli(t), g.symbol.pauli(t));
            assert_eq!(a.f0.to_bits(), b.f0.to_bits());
            for k in 0..3 {
                assert_eq!(a.f[k].to_bits(), b.f[k].to_bits());
            }
            checked += 1;
        }
    }
    assert!(checked > 1000);
}

#[test]
fn open_gap_mass_at_the_crossing_and_gap_bound() {
    let g = honeycomb_gapped();
    // At θ₀ the honeycomb field vanishes; what is left is (δ/8) v⁽³⁾ = −(δ/8) e₃.
    let p = g.symbol.pauli(K);
    assert!((p.f[2] + 2.0 / 8.0).abs() < 1e-14);
    assert!(p.f[0].abs() < 1e-14 && p.f[1].abs() < 1e-14);
    assert!(g.min_gap >= 2.0 / 64.0);
    assert!((g.c_measured - 2.0 / g.min_gap).abs() < 1e-12);
    assert!(g.nodes_checked > 50);
    // Periodized: the translate by 2π behaves identically.
    let q = g.symbol.pauli([K[0] + 2.0 * PI, K[1] - 2.0 * PI]);
    assert!((q.f[2] - p.f[2]).abs() < 1e-12);
}

#[test]
fn open_gap_reports_failure_when_the_bump_misses_the_grid() {
    let hc = TwoBandSymbol::honeycomb();
    let lin = linearize_at_crossing(&hc, K, 1e-8).unwrap();
    let bad = GapParams {
        delta: 8.0,
        c_lower: 1000.0,
        sigma_radius: 1.0,
    };
    match open_gap(&hc, K, &lin, &bad, 64) {
        Err(Error::GapOpeningFailed { min_gap }) => assert!(min_gap < 8.0 / 64.0),
        other => panic!("expected GapOpeningFailed, got {other:?}"),
    }
}

#[test]
fn split_projectors_on_gapped_and_gapless_symbols() {
    // n = 66 puts both valleys on grid nodes.
    match split_projectors(&TwoBandSymbol::honeycomb(), 66, [0.0, 0.0], 1e-6) {
        Err(Error::SplitFailed { gap, .. }) => assert!(gap < 1e-6),
        other => panic!("expected SplitFailed, got {other:?}"),
    }
    let m = SectionModel::honeycomb(&gp()).unwrap();
    let (pm, pp) = split_projectors(&m.k_gap, 16, [0.0, 0.0], 1e-3).unwrap();
    assert_eq!((pm.rank, pp.rank), (1, 1));
    for (a, b) in pm.data.iter().zip(&pp.data) {
        assert!((a + b - CMat::identity(2, 2)).norm() < 1e-14);
        assert!((a * b).norm() < 1e-14);
    }
    assert!(pm.projector_defect() < 1e-14);
}

/// Spin-½ state along the Bloch-sphere direction (polar β, azimuth φ).
fn spinor(beta: f64, phi: f64) -> CVec {
    CVec::from_vec(vec![c((beta / 2.0).cos(), 0.0), cis(phi) * (beta / 2.0).sin()])
}

#[test]
fn parallel_transport_reproduces_the_berry_phase() {
    // Azimuth 0 → π at fixed polar angle: the transported vector picks up
    // exp(−iπ sin²(β/2)) relative to the reference gauge.
    let beta = 1.1;
    let steps = 4000;
    let path: Vec<CMat> = (0..=steps)
        .map(|k| {
            let v = spinor(beta, PI * k as f64 / steps as f64);
            &v * v.adjoint()
        })
        .collect();
    let seed = CMat::from_column_slice(2, 1, spinor(beta, 0.0).as_slice());
    let fr = parallel_transport_frame(&path, &seed).unwrap();
    let end = spinor(beta, PI);
    let phase = end.dotc(&fr[steps].column(0).into_owned());
    let expect = cis(-PI * (beta / 2.0).sin().powi(2));
    assert!((phase - expect).norm() < 1e-6, "{phase} vs {expect}");
}

#[test]
fn transport_rank_collapse_is_reported() {
    let e0 = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
    let e1 = CVec::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
    let path = vec![&e0 * e0.adjoint(), &e1 * e1.adjoint()];
    let seed = CMat::from_column_slice(2, 1, e0.as_slice());
    assert!(matches!(
        parallel_transport_frame(&path, &seed),
        Err(Error::TransportFailed { .. })
    ));
}

fn phase_loop(alpha: f64, m: usize) -> Vec<CMat> {
    let v = CMat::from_column_slice(2, 1, spinor(0.7, 0.4).as_slice());
    (0..=m)
        .map(|k| &v * cis(alpha * k as f64 / m as f64))
        .collect()
}

#[test]
fn straightening_removes_a_holonomy_phase() {
    let fr = phase_loop(0.3, 50);
    let (out, warn) = straighten_loop_unitary(&fr).unwrap();
    assert!(warn.is_none());
    assert_eq!(out[50], out[0]);
    for f in &out {
        assert!((f - &out[0]).norm() < 1e-14);
    }
}

#[test]
fn straightening_at_holonomy_minus_one_takes_the_fixed_branch() {
    let fr = phase_loop(PI, 40);
    let (out, warn) = straighten_loop_unitary(&fr).unwrap();
    assert!(warn.unwrap().contains("-1"));
    for f in &out {
        assert!((f - &out[0]).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn straightening_undoes_any_unitary_holonomy(
        a in -2.5f64..2.5, b in -2.5f64..2.5, re in -0.8f64..0.8, im in -0.8f64..0.8,
    ) {
        let mut g = CMat::zeros(2, 2);
        g[(0, 0)] = c(a, 0.0);
        g[(1, 1)] = c(b, 0.0);
        g[(0, 1)] = c(re, im);
        g[(1, 0)] = c(re, -im);
        let evs = g.clone().symmetric_eigenvalues();
        prop_assume!(evs.iter().all(|x| x.abs() < 3.0));
        let v0 = CMat::identity(2, 2);
        let m = 24;
        let fr: Vec<CMat> = (0..=m)
            .map(|k| {
                let t = k as f64 / m as f64;
                let u = unitary_exp(&g, t);
                &v0 * u
            })
            .collect();
        let (out, _) = straighten_loop_unitary(&fr).unwrap();
        for f in &out {
            prop_assert!((f - &v0).norm() < 1e-12);
        }
    }

    #[test]
    fn halton_sphere_samples_are_unit(d in 1usize..5, count in 1usize..80) {
        for z in sphere_samples(d, count) {
            prop_assert!((z.norm() - 1.0).abs() < 1e-14);
        }
    }
}

fn unitary_exp(g: &CMat, t: f64) -> CMat {
    // exp(i t G) for Hermitian G: cos and sin parts are separately Hermitian.
    let cpart = herm_fn(g, |x| (t * x).cos());
    let spart = herm_fn(g, |x| (t * x).sin());
    cpart + spart * c(0.0, 1.0)
}

#[test]
fn great_circle_contracts_to_the_pole() {
    let m = 48;
    let lp: Vec<CVec> = (0..m)
        .map(|k| {
            let p = 2.0 * PI * k as f64 / m as f64;
            CVec::from_vec(vec![c(p.cos(), 0.0), c(p.sin(), 0.0)])
        })
        .collect();
    let h = contract_sphere_loop(&lp, 8, 64, 0.0).unwrap();
    assert_eq!(h.values.len(), 9);
    assert_eq!(h.mollify_defect, 0.0);
    for (a, b) in h.values[0].iter().zip(&lp) {
        assert!((a - b).norm() < 1e-15);
    }
    for row in &h.values {
        for v in row {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }
    for v in &h.values[8] {
        assert!((v[0] - c(1.0, 0.0)).norm() < 1e-14 && v[1].norm() < 1e-14);
    }
    assert!(h.missed_distance > 0.1);
    assert!((h.target.norm() - 1.0).abs() < 1e-14);
}

#[test]
fn contraction_without_samples_fails() {
    let lp = vec![CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]); 8];
    assert!(matches!(
        contract_sphere_loop(&lp, 4, 0, 0.5),
        Err(Error::ContractionFailed { samples: 0 })
    ));
}

#[test]
fn rank_one_fields_are_rejected() {
    let m = SectionModel::honeycomb(&gp()).unwrap();
    let (pm, _) = split_projectors(&m.k_gap, 32, [0.0, 0.0], 1e-3).unwrap();
    let local = LocalFrame {
        center: [0, 0],
        radius: 2,
        reach: 6,
        frames: vec![None; 32 * 32],
    };
    assert!(matches!(
        build_global_section(&pm, &local, &SectionOptions::default()),
        Err(Error::RankTooSmall { rank: 1 })
    ));
}

#[test]
fn global_sections_of_the_rank_two_model() {
    let m = SectionModel::honeycomb(&gp()).unwrap();
    let n = 48;
    let (pm, pp) = m.projectors(n, [0.0, 0.0], 1e-3).unwrap();
    assert_eq!((pm.rank, pp.rank), (2, 2));
    let (lm, lp) = m.local_frames(n, [0.0, 0.0], 3, 7);
    let mut sections = Vec::new();
    for (p, l) in [(&pm, &lm), (&pp, &lp)] {
        let g = build_global_section(p, l, &SectionOptions::default()).unwrap();
        let ck = check_section(&g.section, p, l, 3);
        assert!(ck.norm_defect < 1e-12, "{ck:?}");
        assert!(ck.membership_defect < 1e-8, "{ck:?}");
        assert_eq!(ck.seam_defect, 0.0);
        assert_eq!(ck.local_frame_defect, 0.0);
        assert!(ck.increment_constant < 20.0, "{ck:?}");
        assert!(g.min_blend_denominator > 0.5);
        let s = smooth_section(&g.section, p, l.center, 2, 3, 1.5).unwrap();
        let cs = check_section(&s, p, l, 2);
        assert!(cs.norm_defect < 1e-12 && cs.membership_defect < 1e-8 && cs.local_frame_defect == 0.0);
        assert!(s.curvature() < g.section.curvature());
        sections.push(s);
    }
    let q = build_quasi_band_projector(&sections[0], &sections[1]).unwrap();
    assert!(q.cross_overlap < 1e-12);
    assert!(q.projector.projector_defect() < 1e-12);
    assert!((q.wannier_minus.total_weight() - 1.0).abs() < 1e-10);
    // Smoothing pays off in the Wannier tails.
    let raw = wannier_coefficients(
        &build_global_section(&pm, &lm, &SectionOptions::default()).unwrap().section,
    );
    assert!(q.wannier_minus.decay_constant(4.0) < raw.decay_constant(4.0));
}

#[test]
fn smoothing_removes_a_kink_outside_k() {
    // Trivial bundle: P = diag(1, 1, 0, 0); ψ rotates in the first plane
    // with a slope kink at θ₁ = 0 and θ₁ = π.
    let n = 64;
    let p = ProjectorField::from_fn(n, [0.0, 0.0], |_| {
        let mut m = CMat::zeros(4, 4);
        m[(0, 0)] = c(1.0, 0.0);
        m[(1, 1)] = c(1.0, 0.0);
        m
    })
    .unwrap();
    let data = (0..n * n)
        .map(|k| {
            let t = 2.0 * PI * (k / n) as f64 / n as f64;
            let f = 0.5 * (t - PI).abs();
            CVec::from_vec(vec![c(f.cos(), 0.0), c(f.sin(), 0.0), c(0.0, 0.0), c(0.0, 0.0)])
        })
        .collect();
    let psi = SectionField {
        n,
        origin: [0.0, 0.0],
        dim: 4,
        data,
    };
    let center = [n / 4, n / 2];
    let s = smooth_section(&psi, &p, center, 2, 3, 5.0).unwrap();
    assert!(psi.curvature() >= 10.0 * s.curvature(), "{} vs {}", psi.curvature(), s.curvature());
    for k in 0..n * n {
        let o = [(k / n) as i64 - center[0] as i64, (k % n) as i64 - center[1] as i64];
        if o[0].abs().max(o[1].abs()) <= 2 {
            assert_eq!(s.data[k], psi.data[k]);
        }
    }
}

#[test]
fn mollifier_wider_than_the_bundle_allows_fails() {
    // ψ flips sign across a line; the average nearly cancels there.
    let n = 16;
    let p = ProjectorField::from_fn(n, [0.0, 0.0], |_| CMat::identity(2, 2)).unwrap();
    let data = (0..n * n)
        .map(|k| {
            let s = if (k / n) < n / 2 { 1.0 } else { -1.0 };
            CVec::from_vec(vec![c(s, 0.0), c(0.0, 0.0)])
        })
        .collect();
    let psi = SectionField {
        n,
        origin: [0.0, 0.0],
        dim: 2,
        data,
    };
    assert!(matches!(
        smooth_section(&psi, &p, [n / 4, n / 4], 1, 2, 3.0),
        Err(Error::MollifierTooWide { .. })
    ));
}

#[test]
fn wannier_coefficients_of_a_plane_wave() {
    let n = 16;
    let origin = [0.3, -0.2];
    let g0 = [2i64, -3i64];
    let s = 2.0 * PI / n as f64;
    let data = (0..n * n)
        .map(|k| {
            let th = [origin[0] + s * (k / n) as f64, origin[1] + s * (k % n) as f64];
            let ph = -(g0[0] as f64 * th[0] + g0[1] as f64 * th[1]);
            CVec::from_vec(vec![cis(ph), c(0.0, 0.0)])
        })
        .collect();
    let w = wannier_coefficients(&SectionField {
        n,
        origin,
        dim: 2,
        data,
    });
    assert!((w.get(g0)[0] - c(1.0, 0.0)).norm() < 1e-12);
    assert!((w.total_weight() - 1.0).abs() < 1e-12);
    let expect = (1.0 + 13.0f64).powi(2);
    assert!((w.decay_constant(4.0) - expect).abs() < 1e-9);
}

#[test]
fn field_persistence_roundtrips_bitwise() {
    let m = SectionModel::honeycomb(&gp()).unwrap();
    let (pm, _) = m.projectors(16, [0.1, 0.2], 1e-3).unwrap();
    let mut buf = Vec::new();
    pm.write_to(&mut buf).unwrap();
    assert_eq!(ProjectorField::read_from(buf.as_slice()).unwrap(), pm);
    assert!(SectionField::read_from(buf.as_slice()).is_err());
    let psi = SectionField {
        n: 4,
        origin: [0.0, 0.0],
        dim: 2,
        data: (0..16).map(|k| CVec::from_vec(vec![c(k as f64, -0.5), c(1e-300, 3.0)])).collect(),
    };
    let mut buf = Vec::new();
    psi.write_to(&mut buf).unwrap();
    assert_eq!(SectionField::read_from(buf.as_slice()).unwrap(), psi);
    buf.truncate(buf.len() - 3);
    assert!(SectionField::read_from(buf.as_slice()).is_err());
}

#[test]
fn both_valleys_are_gapped_in_the_model() {
    let m = SectionModel::honeycomb(&gp()).unwrap();
    for t in [K, KP] {
        assert!((m.k_gap.pauli(t).norm_f() - 0.25).abs() < 1e-12);
    }
    let h = m.hamiltonian([0.4, 1.3]);
    assert!((&h - h.adjoint()).norm() < 1e-13);
}
