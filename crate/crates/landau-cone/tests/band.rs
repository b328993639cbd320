use landau_cone::band::BandLu;
use landau_cone::linalg::{c, CMat, CVec, C64};
use proptest::prelude::*;

fn banded(n: usize, kl: usize, ku: usize, seed: u64) -> CMat {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    CMat::from_fn(n, n, |i, j| {
        if j + kl >= i && j <= i + ku {
            c(next(), next())
        } else {
            c(0.0, 0.0)
        }
    })
}

#[test]
fn pivoted_solve_matches_dense_lu() {
    let a = banded(50, 3, 3, 1);
    let b = CVec::from_fn(50, |i, _| c(i as f64, 1.0));
    let lu = BandLu::factor(50, 3, 3, |i, j| a[(i, j)], 1e-300);
    let x = CVec::from_vec(lu.solve(b.as_slice()));
    let oracle = a.clone().lu().solve(&b).unwrap();
    assert!((x - oracle).norm() < 1e-9);
}

#[test]
fn zero_leading_entry_needs_pivoting() {
    // [[0, 1], [1, 0]] fails without row interchange.
    let a = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let lu = BandLu::factor(2, 1, 1, |i, j| a[(i, j)], 1e-300);
    let x = lu.solve(&[c(2.0, 0.0), c(3.0, 0.0)]);
    assert!((x[0] - c(3.0, 0.0)).norm() < 1e-15 && (x[1] - c(2.0, 0.0)).norm() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn residual_is_small(seed in 0u64..1000, n in 4usize..40, kl in 0usize..4, ku in 0usize..4) {
        let a = banded(n, kl, ku, seed) + CMat::identity(n, n) * c(0.1, 0.0);
        let b: Vec<C64> = (0..n).map(|i| c(1.0, i as f64 * 0.1)).collect();
        let lu = BandLu::factor(n, kl, ku, |i, j| a[(i, j)], 1e-300);
        let x = CVec::from_vec(lu.solve(&b));
        let r = &a * &x - CVec::from_vec(b);
        let cond = a.clone().try_inverse().map(|m| m.norm() * a.norm()).unwrap_or(1e16);
        prop_assert!(r.norm() <= 1e-13 * cond * (1.0 + x.norm()));
    }
}
