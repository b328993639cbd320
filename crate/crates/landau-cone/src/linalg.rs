//! Small dense linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cis(phi: f64) -> C64 {
    C64::from_polar(1.0, phi)
}

/// Pauli matrices σ₁, σ₂, σ₃.
pub fn pauli() -> [Matrix2<C64>; 3] {
    [
        Matrix2::new(ZERO, ONE, ONE, ZERO),
        Matrix2::new(ZERO, -I, I, ZERO),
        Matrix2::new(ONE, ZERO, ZERO, -ONE),
    ]
}

/// σ·v for a real three-vector.
pub fn sigma_dot(v: [f64; 3]) -> Matrix2<C64> {
    Matrix2::new(
        c(v[2], 0.0),
        c(v[0], -v[1]),
        c(v[0], v[1]),
        c(-v[2], 0.0),
    )
}

/// Largest entry modulus of `m - m†`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Replace `m` by `(m + m†)/2`.
pub fn symmetrize(m: &mut CMat) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let a = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = a;
            m[(j, i)] = a.conj();
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn herm_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(k));
    }
    (vals, vecs)
}

/// Eigenvalues only, ascending.
pub fn herm_eigvals(m: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// f(M) for Hermitian M by spectral calculus.
pub fn herm_fn(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = herm_eig(m);
    let n = m.nrows();
    let mut scaled = vecs.clone();
    for (j, &l) in vals.iter().enumerate() {
        let fl = f(l);
        for i in 0..n {
            scaled[(i, j)] *= fl;
        }
    }
    scaled * vecs.adjoint()
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let g = m.adjoint() * m;
    herm_eigvals(&g).last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Unitary factor of the polar decomposition `s = U |s|` for a square matrix.
///
/// Returns the unitary and the smallest singular value.
pub fn polar_unitary(s: &CMat) -> (CMat, f64) {
    let svd = s.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    (u * vt, smin)
}

/// Symmetric (Löwdin) orthonormalization of the columns of `v`.
///
/// Returns the orthonormal frame and the smallest singular value of `v`.
pub fn lowdin(v: &CMat) -> (CMat, f64) {
    let svd = v.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    (u * vt, smin)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn from_matrix2(m: &Matrix2<C64>) -> CMat {
    CMat::from_fn(2, 2, |i, j| m[(i, j)])
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Eigen-decomposition of a real symmetric 2×2 matrix: ascending eigenvalues.
pub fn sym2_eigvals(a: f64, b: f64, d: f64) -> (f64, f64) {
    let m = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (m - r, m + r)
}
