use std::f64::consts::PI;

use landau_cone::hopping::HoppingSet;
use landau_cone::linalg::{c, max_abs, CMat};
use proptest::prelude::*;

#[test]
fn honeycomb_symbol_closed_form() {
    let h = HoppingSet::honeycomb();
    assert_eq!(h.cutoff(), 1);
    assert_eq!(h.hermitian_defect(), 0.0);
    for t in [[0.0, 0.0], [0.4, -2.2], [PI, 1.0]] {
        let k = h.symbol(t);
        let z = c(1.0, 0.0) + c(0.0, t[0]).exp() + c(0.0, t[1]).exp();
        assert!((k[(0, 1)] - z).norm() < 1e-14);
        assert!((k[(1, 0)] - z.conj()).norm() < 1e-14);
        assert!(k[(0, 0)].norm() < 1e-14 && k[(1, 1)].norm() < 1e-14);
    }
    let harper = HoppingSet::harper();
    let k = harper.symbol([0.3, 1.2]);
    assert!((k[(0, 0)].re - (0.3f64.cos() + 1.2f64.cos())).abs() < 1e-14);
}

#[test]
fn hermiticity_check() {
    let mut h = HoppingSet::new(2);
    h.add([1, 0], CMat::identity(2, 2));
    assert!(h.check_hermitian(1e-12).is_err());
    h.add([-1, 0], CMat::identity(2, 2));
    assert!(h.check_hermitian(1e-12).is_ok());
    let mut z = HoppingSet::new(1);
    z.add_hermitian([0, 0], CMat::from_element(1, 1, c(1.0, 3.0)));
    assert_eq!(z.get([0, 0]).unwrap()[(0, 0)], c(1.0, 0.0));
}

#[test]
fn json_roundtrip_and_shape_errors() {
    let h = HoppingSet::honeycomb();
    assert_eq!(HoppingSet::from_json(&h.to_json()).unwrap(), h);
    let bad = r#"{"orbitals": 2, "hoppings": [{"gamma": [0, 0], "matrix": [[1.0, 0.0]]}]}"#;
    assert!(HoppingSet::from_json(bad).is_err());
    assert!(HoppingSet::from_json("not json").is_err());
}

#[test]
fn pruning_and_decay() {
    let mut h = HoppingSet::honeycomb();
    h.add_hermitian([3, 0], CMat::identity(2, 2) * c(1e-14, 0.0));
    assert_eq!(h.cutoff(), 3);
    let p = h.pruned(1e-12);
    assert_eq!(p, HoppingSet::honeycomb());
    // ⟨γ⟩² sup-norm: 1 at γ = 0, 2 at the unit neighbours.
    assert!((p.weighted_decay(2) - 2.0).abs() < 1e-12);
}

proptest! {
    /// Grid interpolation reproduces band-limited hopping data exactly.
    #[test]
    fn grid_interpolation_is_exact_for_short_range(
        re in prop::collection::vec(-1.0f64..1.0, 8),
        im in prop::collection::vec(-1.0f64..1.0, 8),
        shift in -1.0f64..1.0,
    ) {
        let mut h = HoppingSet::new(2);
        let m = |k: usize| CMat::from_fn(2, 2, |i, j| c(re[(k + 2 * i + j) % 8], im[(k + i + 3 * j) % 8]));
        h.add_hermitian([0, 0], m(0));
        h.add_hermitian([1, 0], m(1));
        h.add_hermitian([1, -1], m(2));
        h.add_hermitian([0, 2], m(3));
        let origin = [-PI + shift, -PI - shift];
        let n = 7;
        let s = 2.0 * PI / n as f64;
        let g = HoppingSet::from_grid(n, origin, &|i, j| h.symbol([origin[0] + s * i as f64, origin[1] + s * j as f64]));
        prop_assert!(g.hermitian_defect() < 1e-12);
        for t in [[0.1, 0.2], [2.0, -1.3], [-3.0, 3.0]] {
            prop_assert!(max_abs(&(g.symbol(t) - h.symbol(t))) < 1e-12);
        }
    }
}
