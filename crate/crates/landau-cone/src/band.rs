//! Banded LU with partial pivoting for complex matrices.

use crate::linalg::{c, C64, ZERO};

/// `PA = LU` of a matrix with `kl` sub- and `ku` super-diagonals.
///
/// Row interchanges widen `U` to `kl + ku` super-diagonals; storage is
/// row-major with `2kl + ku + 1` slots per row.
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<C64>,
    mult: Vec<C64>,
    piv: Vec<usize>,
}

impl BandLu {
    fn width(kl: usize, ku: usize) -> usize {
        2 * kl + ku + 1
    }

    fn at(&self, i: usize, j: usize) -> usize {
        i * Self::width(self.kl, self.ku) + (j + self.kl - i)
    }

    /// Factor `a`, given entry-wise through `entry(i, j)` for `|i − j|` in band.
    /// Exactly zero pivots are replaced by `tiny` (shifted inverse iteration).
    pub fn factor(n: usize, kl: usize, ku: usize, entry: impl Fn(usize, usize) -> C64, tiny: f64) -> Self {
        let w = Self::width(kl, ku);
        let mut lu = Self {
            n,
            kl,
            ku,
            ab: vec![ZERO; n * w],
            mult: vec![ZERO; n * kl],
            piv: vec![0; n],
        };
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                let k = lu.at(i, j);
                lu.ab[k] = entry(i, j);
            }
        }
        let span = kl + ku;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            for i in k + 1..=last {
                if lu.ab[lu.at(i, k)].norm() > lu.ab[lu.at(p, k)].norm() {
                    p = i;
                }
            }
            lu.piv[k] = p;
            let cols = k..(k + span + 1).min(n);
            if p != k {
                for j in cols.clone() {
                    let (a, b) = (lu.at(k, j), lu.at(p, j));
                    lu.ab.swap(a, b);
                }
            }
            let d = lu.at(k, k);
            if lu.ab[d].norm() == 0.0 {
                lu.ab[d] = c(tiny, 0.0);
            }
            let pivot = lu.ab[d];
            for i in k + 1..=last {
                let m = lu.ab[lu.at(i, k)] / pivot;
                lu.mult[k * kl + (i - k - 1)] = m;
                if m == ZERO {
                    continue;
                }
                let ik = lu.at(i, k);
                lu.ab[ik] = ZERO;
                for j in k + 1..(k + span + 1).min(n) {
                    let (a, b) = (lu.at(i, j), lu.at(k, j));
                    let v = lu.ab[b];
                    lu.ab[a] -= m * v;
                }
            }
        }
        lu
    }

    pub fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut b = rhs.to_vec();
        for k in 0..n {
            b.swap(k, self.piv[k]);
            for i in k + 1..(k + self.kl + 1).min(n) {
                let m = self.mult[k * self.kl + (i - k - 1)];
                let bk = b[k];
                b[i] -= m * bk;
            }
        }
        let span = self.kl + self.ku;
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..(k + span + 1).min(n) {
                s -= self.ab[self.at(k, j)] * b[j];
            }
            b[k] = s / self.ab[self.at(k, k)];
        }
        b
    }
}
