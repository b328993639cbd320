//! The linearized operator `𝔏 = Op₁(𝔩)` in a Hermite basis, its spectrum, and
//! order-by-order quasimodes of the full reduced symbol.
//!
//! Basis layout: index `2n + s` for Hermite mode `n` and spinor component `s`,
//! so a symbol `Σ X ⊗ M` is assembled as `kron(X, M)` with `X` acting on modes.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::band::BandLu;
use crate::error::{Error, Result};
use crate::hopping::HoppingSet;
use crate::linalg::{c, from_matrix2, herm_eig, kron, symmetrize, CMat, CVec, C64, I, ONE, ZERO};
use crate::local_model::{check_ellipticity, DiracLinearization};
use crate::spectrum::SpectrumSet;

/// Position and momentum in the first `n` Hermite functions, `a|n⟩ = √n|n−1⟩`.
#[derive(Clone, Debug)]
pub struct OscillatorRep {
    pub n: usize,
    pub t: CMat,
    pub p: CMat,
}

/// Truncated annihilation operator.
pub fn annihilation(n: usize) -> CMat {
    let mut a = CMat::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = c((k as f64).sqrt(), 0.0);
    }
    a
}

impl OscillatorRep {
    pub fn new(n: usize) -> Self {
        let a = annihilation(n);
        let ad = a.adjoint();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let t = (&a + &ad) * c(s, 0.0);
        let p = (&a - &ad) * c(0.0, -s);
        Self { n, t, p }
    }

    /// `max |([t,p] − i)_{jk}|` over `j, k < n − 2`.
    pub fn commutator_defect(&self) -> f64 {
        let com = &self.t * &self.p - &self.p * &self.t;
        let m = self.n.saturating_sub(2);
        let mut worst = 0.0f64;
        for j in 0..m {
            for k in 0..m {
                let target = if j == k { I } else { ZERO };
                worst = worst.max((com[(j, k)] - target).norm());
            }
        }
        worst
    }

    /// `diag((−1)ⁿ)`: `t ↦ −t`, `p ↦ −p`.
    pub fn parity(&self) -> CMat {
        CMat::from_fn(self.n, self.n, |i, j| {
            if i == j {
                c(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
            } else {
                ZERO
            }
        })
    }
}

fn embed2(m: &Matrix2<C64>) -> CMat {
    from_matrix2(m)
}

/// `𝔏 = t ⊗ A + p ⊗ B` without the ellipticity gate.
pub fn linear_operator(lin: &DiracLinearization, n: usize) -> CMat {
    let osc = OscillatorRep::new(n);
    let (a, b) = lin.coefficient_matrices();
    let mut l = kron(&osc.t, &embed2(&a)) + kron(&osc.p, &embed2(&b));
    symmetrize(&mut l);
    l
}

/// `𝔏` on `n` Hermite modes, refusing non-elliptic linearizations.
#[allow(non_snake_case)]
pub fn build_L_operator(lin: &DiracLinearization, n: usize) -> Result<CMat> {
    check_ellipticity(lin)?;
    Ok(linear_operator(lin, n))
}

/// Hermitian block-tridiagonal matrix with 2×2 blocks.
///
/// `off[k]` is the block `H_{k,k+1}`.
#[derive(Clone, Debug)]
pub struct BlockTridiagonal {
    pub diag: Vec<Matrix2<C64>>,
    pub off: Vec<Matrix2<C64>>,
}

/// Nudge a pivot that is singular relative to its own scale off zero:
/// `D ← D + ε𝟙`, i.e. `σ ← σ − ε`.
fn regularize(m: &mut Matrix2<C64>, eps: f64) {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    if scale == 0.0 || det.norm() <= (1e-13 * scale).powi(2) {
        let e = eps.max(1e-13 * scale);
        m[(0, 0)] += c(e, 0.0);
        m[(1, 1)] += c(e, 0.0);
    }
}

fn inv2(m: &Matrix2<C64>) -> Matrix2<C64> {
    let d = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / d
}

/// Number of negative eigenvalues of a Hermitian 2×2 with nonzero determinant.
fn negatives2(m: &Matrix2<C64>) -> usize {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let det = a * d - m[(0, 1)].norm_sqr();
    if det < 0.0 {
        1
    } else if a + d < 0.0 {
        2
    } else {
        0
    }
}

impl BlockTridiagonal {
    /// Block form of `t ⊗ A + p ⊗ B`.
    pub fn from_linearization(lin: &DiracLinearization, n: usize) -> Self {
        let (a, b) = lin.coefficient_matrices();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // ⟨k|t|k+1⟩ = √((k+1)/2), ⟨k|p|k+1⟩ = −i√((k+1)/2).
        let off = (0..n.saturating_sub(1))
            .map(|k| {
                let w = ((k + 1) as f64).sqrt() * s;
                a * c(w, 0.0) + b * c(0.0, -w)
            })
            .collect();
        Self {
            diag: vec![Matrix2::zeros(); n],
            off,
        }
    }

    pub fn blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.diag.len()
    }

    /// Gershgorin radius.
    pub fn bound(&self) -> f64 {
        let n = self.blocks();
        let mut r = 0.0f64;
        for k in 0..n {
            for row in 0..2 {
                let mut s = 0.0;
                for col in 0..2 {
                    s += self.diag[k][(row, col)].norm();
                    if k + 1 < n {
                        s += self.off[k][(row, col)].norm();
                    }
                    if k > 0 {
                        s += self.off[k - 1][(col, row)].norm();
                    }
                }
                r = r.max(s);
            }
        }
        r.max(1e-300)
    }

    /// Number of eigenvalues strictly below `sigma` (block Sturm count).
    pub fn count_below(&self, sigma: f64) -> usize {
        let floor = 1e-300_f64.max(1e-15 * self.bound());
        let shift = Matrix2::identity() * c(sigma, 0.0);
        let mut count = 0;
        let mut dprev_inv: Option<Matrix2<C64>> = None;
        for k in 0..self.blocks() {
            let mut dk = self.diag[k] - shift;
            if let Some(inv) = dprev_inv {
                let b = self.off[k - 1];
                dk -= b.adjoint() * inv * b;
            }
            let mut herm = (dk + dk.adjoint()) * c(0.5, 0.0);
            regularize(&mut herm, floor);
            count += negatives2(&herm);
            dprev_inv = Some(inv2(&herm));
        }
        count
    }

    /// Eigenvalue number `j` (0-based, ascending) by bisection.
    pub fn eigenvalue(&self, j: usize) -> f64 {
        let r = self.bound();
        // Asymmetric bracket keeps midpoints off the chiral point σ = 0.
        let (mut lo, mut hi) = (-r * 1.01, r * 1.0137);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * r {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Entry `(i, j)` of the dense matrix (zero outside the band).
    fn entry(&self, i: usize, j: usize) -> C64 {
        let (bi, bj) = (i / 2, j / 2);
        if bi == bj {
            self.diag[bi][(i % 2, j % 2)]
        } else if bj == bi + 1 {
            self.off[bi][(i % 2, j % 2)]
        } else if bi == bj + 1 {
            self.off[bj][(j % 2, i % 2)].conj()
        } else {
            ZERO
        }
    }

    /// Orthonormal basis of the invariant subspace for a cluster of `mult`
    /// eigenvalues at `lambda`, by subspace inverse iteration.
    pub fn eigenspace(&self, lambda: f64, mult: usize) -> CMat {
        let dim = self.dim();
        let eps = 1e-12 * self.bound();
        let mut v = CMat::from_fn(dim, mult, |i, j| {
            let x = ((i * 31 + j * 17 + 7) % 101) as f64 / 101.0 - 0.45;
            let y = ((i * 13 + j * 29 + 3) % 97) as f64 / 97.0 - 0.55;
            c(x, y)
        });
        let shift = lambda + eps;
        let lu = BandLu::factor(
            dim,
            3,
            3,
            |i, j| if i == j { self.entry(i, j) - c(shift, 0.0) } else { self.entry(i, j) },
            1e-14 * self.bound(),
        );
        for _ in 0..3 {
            let mut w = CMat::zeros(dim, mult);
            for j in 0..mult {
                let col: Vec<C64> = v.column(j).iter().copied().collect();
                w.set_column(j, &CVec::from_vec(lu.solve(&col)));
            }
            let norm = w.norm();
            if norm.is_finite() && norm > 0.0 {
                w /= c(norm, 0.0);
            }
            v = w.qr().q();
        }
        v
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.blocks();
        let mut m = CMat::zeros(2 * n, 2 * n);
        for k in 0..n {
            for r in 0..2 {
                for s in 0..2 {
                    m[(2 * k + r, 2 * k + s)] = self.diag[k][(r, s)];
                    if k + 1 < n {
                        m[(2 * k + r, 2 * k + 2 + s)] = self.off[k][(r, s)];
                        m[(2 * k + 2 + s, 2 * k + r)] = self.off[k][(r, s)].conj();
                    }
                }
            }
        }
        m
    }
}

/// Weight of a vector on Hermite modes `≥ first`.
pub fn tail_mass(v: &[C64], first_mode: usize) -> f64 {
    v.iter().skip(2 * first_mode).map(|z| z.norm_sqr()).sum()
}

fn tail_start(n: usize) -> usize {
    n - (n / 8).max(4).min(n)
}

/// Eigenvalues of the truncation that belong to the operator: spurious
/// edge states (weight on the top Hermite modes above `1e−6`) are dropped.
fn genuine_levels(bt: &BlockTridiagonal, want: usize) -> Vec<f64> {
    let dim = bt.dim();
    // Sturm counts exactly at the chiral point are ill-conditioned.
    let zero = 1e-7 * bt.bound();
    let c0 = bt.count_below(-zero);
    let m = want + 12;
    let lo = c0.saturating_sub(m);
    let hi = (c0 + m).min(dim);
    // Bisection resolves a multiple kernel of the truncation only to ~1e−8;
    // snap it to the exact chiral point so it is treated as one cluster.
    let vals: Vec<f64> = (lo..hi)
        .map(|j| bt.eigenvalue(j))
        .map(|v| if v.abs() < zero { 0.0 } else { v })
        .collect();
    let tol = 1e-9 * bt.bound().max(1.0);
    let start = tail_start(bt.blocks());
    let mut out = Vec::new();
    let mut i = 0;
    while i < vals.len() {
        let mut j = i + 1;
        while j < vals.len() && vals[j] - vals[j - 1] <= tol {
            j += 1;
        }
        let mult = j - i;
        let lambda = vals[i..j].iter().sum::<f64>() / mult as f64;
        let v = bt.eigenspace(lambda, mult);
        // Tail-weight operator restricted to the cluster.
        let tail = v.rows(2 * start, v.nrows() - 2 * start).into_owned();
        let tmat = tail.adjoint() * &tail;
        let (tv, _) = herm_eig(&tmat);
        for (k, &w) in tv.iter().enumerate() {
            if w < 1e-6 {
                out.push(vals[i + k.min(mult - 1)]);
            }
        }
        i = j;
    }
    out
}

fn closest_to_zero(mut vals: Vec<f64>, n: usize) -> Vec<f64> {
    vals.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    vals.truncate(n);
    vals.sort_by(f64::total_cmp);
    vals
}

/// Convergence evidence for a truncated spectrum.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub n: usize,
    pub n_check: usize,
    /// Largest shift of a retained level under `N → 2N`.
    pub max_shift: f64,
    pub converged: bool,
}

/// `σ(𝔏)` near zero with its checks.
#[derive(Clone, Debug)]
pub struct LSpectrum {
    pub levels: SpectrumSet,
    pub certificate: Certificate,
    /// `max_n |λ_n + λ_{−n}|` over the symmetric selection.
    pub symmetry_defect: f64,
    /// Smallest gap between consecutive levels.
    pub min_gap: f64,
}

/// The `n_levels` smallest-`|λ|` eigenvalues of `𝔏` on `n` modes, certified against `2n`.
#[allow(non_snake_case)]
pub fn spectrum_L(lin: &DiracLinearization, n_levels: usize, n: usize) -> Result<LSpectrum> {
    check_ellipticity(lin)?;
    let bt = BlockTridiagonal::from_linearization(lin, n);
    let levels = closest_to_zero(genuine_levels(&bt, n_levels), n_levels);
    if levels.len() < n_levels {
        return Err(Error::Resource(format!(
            "only {} converged levels on {n} modes; increase N",
            levels.len()
        )));
    }
    let bt2 = BlockTridiagonal::from_linearization(lin, 2 * n);
    let check = genuine_levels(&bt2, n_levels + 4);
    let max_shift = levels
        .iter()
        .map(|&x| check.iter().map(|&y| (x - y).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let k = levels.len();
    let symmetry_defect = (0..k).map(|i| (levels[i] + levels[k - 1 - i]).abs()).fold(0.0, f64::max);
    let min_gap = levels.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    Ok(LSpectrum {
        levels: SpectrumSet::unbounded(levels),
        certificate: Certificate {
            n,
            n_check: 2 * n,
            max_shift,
            converged: max_shift < 1e-8,
        },
        symmetry_defect,
        min_gap,
    })
}

/// One monomial `coeff · t^a τ^b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub t_pow: u32,
    pub tau_pow: u32,
    pub coeff: Matrix2<C64>,
}

/// 2×2-matrix valued polynomial in `(t, τ)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatrixPolynomial {
    pub terms: Vec<Monomial>,
}

impl MatrixPolynomial {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn monomial(t_pow: u32, tau_pow: u32, coeff: Matrix2<C64>) -> Self {
        Self {
            terms: vec![Monomial { t_pow, tau_pow, coeff }],
        }
    }

    pub fn push(&mut self, t_pow: u32, tau_pow: u32, coeff: Matrix2<C64>) {
        if let Some(m) = self
            .terms
            .iter_mut()
            .find(|m| m.t_pow == t_pow && m.tau_pow == tau_pow)
        {
            m.coeff += coeff;
        } else {
            self.terms.push(Monomial { t_pow, tau_pow, coeff });
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|m| m.t_pow + m.tau_pow).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|m| m.coeff.iter().all(|z| z.norm() == 0.0))
    }

    pub fn eval(&self, t: f64, tau: f64) -> Matrix2<C64> {
        self.terms.iter().fold(Matrix2::zeros(), |acc, m| {
            acc + m.coeff * c(t.powi(m.t_pow as i32) * tau.powi(m.tau_pow as i32), 0.0)
        })
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn mat_pow(m: &CMat, k: u32) -> CMat {
    let mut out = CMat::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Weyl-ordered `t^a τ^b` on `n` modes: `2^{−a} Σ_k C(a,k) t^{a−k} p^b t^k`.
pub fn weyl_monomial(a: u32, b: u32, n: usize) -> CMat {
    let big = OscillatorRep::new(n + 6);
    let pb = mat_pow(&big.p, b);
    let mut acc = CMat::zeros(n + 6, n + 6);
    for k in 0..=a {
        let term = mat_pow(&big.t, a - k) * &pb * mat_pow(&big.t, k);
        acc += term * c(binomial(a, k), 0.0);
    }
    acc *= c(0.5f64.powi(a as i32), 0.0);
    acc.view((0, 0), (n, n)).into_owned()
}

/// Weyl quantization of a matrix polynomial on `n` Hermite modes.
pub fn weyl_quantize_polynomial(poly: &MatrixPolynomial, n: usize) -> Result<CMat> {
    if poly.degree() > 6 {
        return Err(Error::InvalidInput(format!(
            "polynomial degree {} exceeds 6",
            poly.degree()
        )));
    }
    let mut out = CMat::zeros(2 * n, 2 * n);
    for m in &poly.terms {
        out += kron(&weyl_monomial(m.t_pow, m.tau_pow, n), &embed2(&m.coeff));
    }
    Ok(out)
}

/// Degree-`ℓ` Taylor term of `θ ↦ k(θ₀ + (t, τ))` for a hopping symbol:
/// `Σ_γ 𝓂(γ)e^{−i⟨θ₀,γ⟩} (−i)^ℓ/ℓ! (γ₁t + γ₂τ)^ℓ`.
pub fn taylor_term(h: &HoppingSet, theta0: [f64; 2], degree: u32) -> MatrixPolynomial {
    assert_eq!(h.orbitals(), 2, "taylor_term expects a two-band hopping set");
    let mut fact = 1.0;
    for k in 1..=degree {
        fact *= k as f64;
    }
    let pref = (0..degree).fold(ONE, |acc, _| acc * (-I)) / c(fact, 0.0);
    let mut poly = MatrixPolynomial::new();
    for (g, m) in h.iter() {
        let ph = crate::linalg::cis(-(theta0[0] * g[0] as f64 + theta0[1] * g[1] as f64)) * pref;
        let m2 = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]) * ph;
        for a in 0..=degree {
            let w = binomial(degree, a) * (g[0] as f64).powi(a as i32) * (g[1] as f64).powi((degree - a) as i32);
            if w != 0.0 {
                poly.push(a, degree - a, m2 * c(w, 0.0));
            }
        }
    }
    poly
}

/// Truncated displacement operator `D(α) = e^{αa† − ᾱa}` on `n` modes.
///
/// Built column by column from `D|n+1⟩ = (a† − ᾱ)D|n⟩/√(n+1)`; since the
/// recurrence only raises indices, the truncated block is exact.
pub fn displacement(alpha: C64, n: usize) -> CMat {
    let mut d = CMat::zeros(n, n);
    let mut col = vec![ZERO; n];
    let mut term = c((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for (k, slot) in col.iter_mut().enumerate() {
        *slot = term;
        term = term * alpha / c(((k + 1) as f64).sqrt(), 0.0);
    }
    for (j, z) in col.iter().enumerate() {
        d[(j, 0)] = *z;
    }
    for m in 0..n.saturating_sub(1) {
        let s = 1.0 / ((m + 1) as f64).sqrt();
        let mut next = vec![ZERO; n];
        for j in 0..n {
            let mut v = -alpha.conj() * col[j];
            if j > 0 {
                v += c((j as f64).sqrt(), 0.0) * col[j - 1];
            }
            next[j] = v * s;
        }
        col = next;
        for (j, z) in col.iter().enumerate() {
            d[(j, m + 1)] = *z;
        }
    }
    d
}

/// Quantization in the dilated Hermite basis: the operator `Op₁(k(θ₀ + √h(s, p)))`.
pub trait DilatedQuantize {
    fn dilated_operator(&self, theta0: [f64; 2], h: f64, n: usize) -> CMat;
}

impl DilatedQuantize for HoppingSet {
    fn dilated_operator(&self, theta0: [f64; 2], h: f64, n: usize) -> CMat {
        let orb = self.orbitals();
        let mut out = CMat::zeros(n * orb, n * orb);
        let sh = (0.5 * h).sqrt();
        for (g, m) in self.iter() {
            let alpha = c(g[1] as f64 * sh, -(g[0] as f64) * sh);
            let ph = crate::linalg::cis(-(theta0[0] * g[0] as f64 + theta0[1] * g[1] as f64));
            out += kron(&displacement(alpha, n), &(m * ph));
        }
        symmetrize(&mut out);
        out
    }
}

impl DilatedQuantize for DiracLinearization {
    /// Exact: `√h 𝔏`.
    fn dilated_operator(&self, _theta0: [f64; 2], h: f64, n: usize) -> CMat {
        linear_operator(self, n) * c(h.sqrt(), 0.0)
    }
}

/// `u = v₀ + h^{1/2}v₁ + …`, `λ = λ₁ + h^{1/2}λ₂ + …` for the normalized
/// operator `𝔏 + h^{1/2}K₂ + h K₃ + …`.
#[derive(Clone, Debug)]
pub struct QuasimodeExpansion {
    pub n_modes: usize,
    /// `λ₁, λ₂, …`.
    pub lambdas: Vec<f64>,
    /// `v₀, v₁, …`.
    pub vectors: Vec<CVec>,
    /// `⟨v₀, rhs_ℓ⟩` after choosing `λ_{ℓ+1}`.
    pub solvability: Vec<f64>,
    /// `‖(𝔏 − λ₁)v_ℓ − rhs_ℓ‖`.
    pub step_residuals: Vec<f64>,
    /// Tail weight of each `v_ℓ`.
    pub tail: Vec<f64>,
}

impl QuasimodeExpansion {
    /// `λ^{(k)}(h) = Σ_{ℓ<k} h^{(ℓ+1)/2} λ_{ℓ+1}` in unnormalized units.
    pub fn eigenvalue(&self, h: f64, k: usize) -> f64 {
        self.lambdas
            .iter()
            .take(k)
            .enumerate()
            .map(|(l, lam)| h.powf((l + 1) as f64 / 2.0) * lam)
            .sum()
    }

    /// `u^{(k−1)} = Σ_{ℓ<k} h^{ℓ/2} v_ℓ`.
    pub fn vector(&self, h: f64, k: usize) -> CVec {
        let mut u = CVec::zeros(self.vectors[0].len());
        for (l, v) in self.vectors.iter().take(k).enumerate() {
            u += v * c(h.powf(l as f64 / 2.0), 0.0);
        }
        u
    }
}

/// Dense eigenpairs with degenerate clusters rotated so that edge states
/// (supported on modes `≥ start`) separate from genuine eigenvectors.
fn separate_edge_states(l: &CMat, start: usize) -> (Vec<f64>, CMat) {
    let (vals, mut vecs) = herm_eig(l);
    let mut i = 0;
    while i < vals.len() {
        let mut j = i + 1;
        while j < vals.len() && vals[j] - vals[j - 1] <= 1e-9 {
            j += 1;
        }
        if j - i > 1 {
            let block = vecs.columns(i, j - i).into_owned();
            let tail = block.rows(2 * start, block.nrows() - 2 * start).into_owned();
            let (_, rot) = herm_eig(&(tail.adjoint() * &tail));
            vecs.columns_mut(i, j - i).copy_from(&(block * rot));
        }
        i = j;
    }
    (vals, vecs)
}

/// Signed level index: 0 is the level closest to zero, `n > 0` the n-th
/// above it, `n < 0` the n-th below.
fn pick_level(vals: &[f64], level: i64) -> Option<usize> {
    let i0 = (0..vals.len()).min_by(|&a, &b| vals[a].abs().total_cmp(&vals[b].abs()))?;
    let idx = i0 as i64 + level;
    (idx >= 0 && (idx as usize) < vals.len()).then_some(idx as usize)
}

/// Expand level `level` of `𝔏` to order `order` against Taylor terms
/// `taylor[0] = 𝓀̂², taylor[1] = 𝓀̂³, …`.
pub fn quasimode_expand(
    lin: &DiracLinearization,
    taylor: &[MatrixPolynomial],
    level: i64,
    order: usize,
    n: usize,
) -> Result<QuasimodeExpansion> {
    check_ellipticity(lin)?;
    if taylor.len() + 1 < order {
        return Err(Error::InvalidInput(format!(
            "order {order} needs {} Taylor terms, got {}",
            order - 1,
            taylor.len()
        )));
    }
    let l = linear_operator(lin, n);
    let start = tail_start(n);
    let (vals, vecs) = separate_edge_states(&l, start);
    // Genuine eigenpairs only.
    let genuine: Vec<usize> = (0..vals.len())
        .filter(|&j| {
            let col: Vec<C64> = vecs.column(j).iter().copied().collect();
            tail_mass(&col, start) < 1e-6
        })
        .collect();
    let gvals: Vec<f64> = genuine.iter().map(|&j| vals[j]).collect();
    let pick = pick_level(&gvals, level).ok_or_else(|| Error::InvalidInput(format!("level {level} not resolved")))?;
    let j0 = genuine[pick];
    let lam1 = vals[j0];
    let sep = gvals
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != pick)
        .map(|(_, v)| (v - lam1).abs())
        .fold(f64::INFINITY, f64::min);
    if sep <= 1e-6 {
        return Err(Error::FredholmFailure { order: 0, residual: sep });
    }
    let mut v0: CVec = vecs.column(j0).into_owned();
    let big = (0..v0.len()).max_by(|&a, &b| v0[a].norm().total_cmp(&v0[b].norm())).unwrap();
    let ph = v0[big].conj() / c(v0[big].norm(), 0.0);
    v0 *= ph;

    let ks: Vec<CMat> = taylor
        .iter()
        .take(order.saturating_sub(1))
        .map(|p| weyl_quantize_polynomial(p, n))
        .collect::<Result<_>>()?;
    let reduced_inverse = |rhs: &CVec| -> CVec {
        let mut x = CVec::zeros(rhs.len());
        for j in 0..vals.len() {
            // Edge states degenerate with λ₁ carry no weight of a localized rhs.
            if j == j0 || (vals[j] - lam1).abs() <= 1e-9 {
                continue;
            }
            let w = vecs.column(j);
            let coef = w.dotc(rhs) / c(vals[j] - lam1, 0.0);
            x += w * coef;
        }
        x
    };

    let mut lambdas = vec![lam1];
    let mut vectors = vec![v0.clone()];
    let mut solvability = Vec::new();
    let mut step_residuals = Vec::new();
    for ell in 1..order {
        // λ_{ℓ+1} = ⟨v₀, Σ_{j=1..ℓ} K_{j+1} v_{ℓ−j}⟩.
        let mut kv = CVec::zeros(v0.len());
        for j in 1..=ell {
            kv += &ks[j - 1] * &vectors[ell - j];
        }
        let lam_next = v0.dotc(&kv).re;
        lambdas.push(lam_next);
        // rhs_ℓ = Σ_{j=1..ℓ} (λ_{j+1} − K_{j+1}) v_{ℓ−j}.
        let mut rhs = -kv;
        for j in 1..=ell {
            rhs += &vectors[ell - j] * c(lambdas[j], 0.0);
        }
        let fred = v0.dotc(&rhs).norm();
        solvability.push(fred);
        if fred > 1e-6 {
            return Err(Error::FredholmFailure { order: ell, residual: fred });
        }
        let v = reduced_inverse(&rhs);
        let mut lv = &l * &v;
        lv -= &v * c(lam1, 0.0);
        step_residuals.push((lv - &rhs).norm());
        vectors.push(v);
    }
    let tail = vectors
        .iter()
        .map(|v| {
            let s: Vec<C64> = v.iter().copied().collect();
            tail_mass(&s, start)
        })
        .collect();
    Ok(QuasimodeExpansion {
        n_modes: n,
        lambdas,
        vectors,
        solvability,
        step_residuals,
        tail,
    })
}

/// `‖(Op₁(𝓀_h) − F₀(θ₀) − λ^{(k)}(h)) u^{(k−1)}‖` with the full symbol quantized
/// in the dilated basis.
pub fn quasimode_residual(
    exp: &QuasimodeExpansion,
    op: &dyn DilatedQuantize,
    theta0: [f64; 2],
    energy: f64,
    h: f64,
    k: usize,
) -> f64 {
    let pad = 48;
    let n = exp.n_modes;
    let m = n + pad;
    let full = op.dilated_operator(theta0, h, m);
    let u_small = exp.vector(h, k);
    let mut u = CVec::zeros(2 * m);
    u.rows_mut(0, 2 * n).copy_from(&u_small);
    let lam = energy + exp.eigenvalue(h, k);
    let r = &full * &u - &u * c(lam, 0.0);
    r.norm() / u.norm()
}
