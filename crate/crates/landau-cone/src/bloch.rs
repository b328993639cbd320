//! Bloch fiber Hamiltonians, band grids and conical crossings.
//!
//! Quasi-momenta are written in reduced coordinates: `theta = (θ₁, θ₂)` with
//! physical quasi-momentum `(θ₁ b₁ + θ₂ b₂)/2π`, so that the Bloch phase of the
//! lattice vector `γ₁a₁ + γ₂a₂` is `θ·γ` and the torus is `[-π, π)²`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd;
use crate::linalg::{c, herm_eig, herm_eigvals, hermitian_defect, symmetrize, sym2_eigvals, CMat, C64, ZERO};

/// Bravais lattice and its dual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub a1: [f64; 2],
    pub a2: [f64; 2],
    pub b1: [f64; 2],
    pub b2: [f64; 2],
}

impl LatticeSpec {
    /// Build from direct vectors; the reciprocal basis satisfies `⟨bᵢ, aⱼ⟩ = 2π δᵢⱼ`.
    pub fn new(a1: [f64; 2], a2: [f64; 2]) -> Result<Self> {
        let det = a1[0] * a2[1] - a1[1] * a2[0];
        if det.abs() < 1e-12 {
            return Err(Error::InvalidProblem("lattice vectors are parallel".into()));
        }
        let s = 2.0 * PI / det;
        let b1 = [a2[1] * s, -a2[0] * s];
        let b2 = [-a1[1] * s, a1[0] * s];
        Ok(Self { a1, a2, b1, b2 })
    }

    pub fn square() -> Self {
        Self::new([1.0, 0.0], [0.0, 1.0]).unwrap()
    }

    pub fn triangular() -> Self {
        Self::new([1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]).unwrap()
    }

    pub fn cell_area(&self) -> f64 {
        (self.a1[0] * self.a2[1] - self.a1[1] * self.a2[0]).abs()
    }

    /// Worst deviation from `⟨bᵢ, aⱼ⟩ = 2π δᵢⱼ`.
    pub fn duality_defect(&self) -> f64 {
        let dot = |u: [f64; 2], v: [f64; 2]| u[0] * v[0] + u[1] * v[1];
        let mut worst = 0.0f64;
        for (i, b) in [self.b1, self.b2].iter().enumerate() {
            for (j, a) in [self.a1, self.a2].iter().enumerate() {
                let target = if i == j { 2.0 * PI } else { 0.0 };
                worst = worst.max((dot(*b, *a) - target).abs());
            }
        }
        worst
    }

    /// Cartesian vector `n₁b₁ + n₂b₂` for real coefficients.
    pub fn reciprocal(&self, n: [f64; 2]) -> [f64; 2] {
        [
            n[0] * self.b1[0] + n[1] * self.b2[0],
            n[0] * self.b1[1] + n[1] * self.b2[1],
        ]
    }
}

/// Fourier data of a periodic Schrödinger operator `(−i∇ − A)² + V`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochProblem {
    pub lattice: LatticeSpec,
    /// Fourier coefficients `V(n)` of the potential, indexed on the dual lattice.
    pub potential: Vec<([i32; 2], C64)>,
    /// Fourier coefficients of a periodic vector potential, if any.
    #[serde(default)]
    pub vector_potential: Option<Vec<([i32; 2], [C64; 2])>>,
    /// Plane waves with `|n|_∞ ≤ truncation` are kept.
    pub truncation: usize,
}

impl BlochProblem {
    pub fn free(lattice: LatticeSpec, truncation: usize) -> Self {
        Self {
            lattice,
            potential: Vec::new(),
            vector_potential: None,
            truncation,
        }
    }

    /// Triangular-lattice potential `2v Σⱼ cos(bⱼ·x)` over the three shortest
    /// reciprocal vectors. For `v < 0` the second and third bands touch at the
    /// zone corner.
    pub fn triangular_cosine(v: f64, truncation: usize) -> Self {
        let pot = [[1, 0], [0, 1], [-1, -1], [-1, 0], [0, -1], [1, 1]]
            .iter()
            .map(|&n| (n, c(v, 0.0)))
            .collect();
        Self {
            lattice: LatticeSpec::triangular(),
            potential: pot,
            vector_potential: None,
            truncation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation < 1 {
            return Err(Error::InvalidProblem("truncation must be >= 1".into()));
        }
        if self.lattice.duality_defect() > 1e-12 {
            return Err(Error::InvalidProblem("reciprocal basis inconsistent".into()));
        }
        let lookup = |n: [i32; 2]| {
            self.potential
                .iter()
                .filter(|(m, _)| *m == n)
                .map(|(_, v)| *v)
                .fold(ZERO, |a, b| a + b)
        };
        for (n, v) in &self.potential {
            let w = lookup([-n[0], -n[1]]);
            if (w - v.conj()).norm() > 1e-12 {
                return Err(Error::InvalidProblem(format!(
                    "potential coefficient at {n:?} violates V(-n) = conj V(n)"
                )));
            }
        }
        if let Some(a) = &self.vector_potential {
            for (n, v) in a {
                let w: [C64; 2] = a
                    .iter()
                    .filter(|(m, _)| *m == [-n[0], -n[1]])
                    .map(|(_, x)| *x)
                    .fold([ZERO, ZERO], |acc, x| [acc[0] + x[0], acc[1] + x[1]]);
                for k in 0..2 {
                    if (w[k] - v[k].conj()).norm() > 1e-12 {
                        return Err(Error::InvalidProblem(format!(
                            "vector potential coefficient at {n:?} is not real"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        let m = 2 * self.truncation + 1;
        m * m
    }

    fn index(&self, n: [i32; 2]) -> Option<usize> {
        let big = self.truncation as i32;
        if n[0].abs() > big || n[1].abs() > big {
            return None;
        }
        let m = 2 * big + 1;
        Some(((n[0] + big) * m + (n[1] + big)) as usize)
    }

    fn modes(&self) -> Vec<[i32; 2]> {
        let big = self.truncation as i32;
        let mut out = Vec::with_capacity(self.dim());
        for n1 in -big..=big {
            for n2 in -big..=big {
                out.push([n1, n2]);
            }
        }
        out
    }
}

/// Anything that yields a Hermitian matrix per quasi-momentum.
pub trait FiberFamily: Send + Sync {
    fn dim(&self) -> usize;
    fn fiber(&self, theta: [f64; 2]) -> CMat;
}

impl FiberFamily for BlochProblem {
    fn dim(&self) -> usize {
        BlochProblem::dim(self)
    }
    fn fiber(&self, theta: [f64; 2]) -> CMat {
        build_fiber(self, theta)
    }
}

/// Closure-backed fiber family.
pub struct FiberFn<F: Fn([f64; 2]) -> CMat + Send + Sync> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn([f64; 2]) -> CMat + Send + Sync> FiberFamily for FiberFn<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn fiber(&self, theta: [f64; 2]) -> CMat {
        (self.f)(theta)
    }
}

fn build_fiber(problem: &BlochProblem, theta: [f64; 2]) -> CMat {
    let modes = problem.modes();
    let d = modes.len();
    let lat = &problem.lattice;
    let shift = [theta[0] / (2.0 * PI), theta[1] / (2.0 * PI)];
    let kvec: Vec<[f64; 2]> = modes
        .iter()
        .map(|n| lat.reciprocal([n[0] as f64 + shift[0], n[1] as f64 + shift[1]]))
        .collect();
    let mut h = CMat::zeros(d, d);
    for (i, k) in kvec.iter().enumerate() {
        h[(i, i)] = c(k[0] * k[0] + k[1] * k[1], 0.0);
    }
    for (i, n) in modes.iter().enumerate() {
        for (m, v) in &problem.potential {
            if let Some(j) = problem.index([n[0] - m[0], n[1] - m[1]]) {
                h[(i, j)] += *v;
            }
        }
    }
    if let Some(apot) = &problem.vector_potential {
        for (i, n) in modes.iter().enumerate() {
            for (m, a) in apot {
                if let Some(j) = problem.index([n[0] - m[0], n[1] - m[1]]) {
                    // −(p·A + A·p): A(n−n')·(k_n + k_n')
                    let kk = [kvec[i][0] + kvec[j][0], kvec[i][1] + kvec[j][1]];
                    h[(i, j)] -= a[0] * kk[0] + a[1] * kk[1];
                }
                for (m2, a2) in apot {
                    let tot = [n[0] - m[0] - m2[0], n[1] - m[1] - m2[1]];
                    if let Some(j) = problem.index(tot) {
                        h[(i, j)] += a[0] * a2[0] + a[1] * a2[1];
                    }
                }
            }
        }
    }
    h
}

/// Fiber Hamiltonian `Ĥ(θ)` in the truncated plane-wave basis.
pub fn assemble_fiber_hamiltonian(problem: &BlochProblem, theta: [f64; 2]) -> Result<CMat> {
    problem.validate()?;
    if !(theta[0].is_finite() && theta[1].is_finite()) {
        return Err(Error::InvalidInput("theta must be finite".into()));
    }
    let mut h = build_fiber(problem, theta);
    if hermitian_defect(&h) > 1e-12 {
        return Err(Error::InvalidProblem("assembled fiber is not Hermitian".into()));
    }
    symmetrize(&mut h);
    Ok(h)
}

/// Sampled Bloch eigenvalues (and optionally eigenvectors) on a torus grid.
///
/// Node `(i, j)` sits at `origin + 2π(i, j)/res`; the grid is seam-identified,
/// so periodic images are the same stored value.
#[derive(Clone, Debug)]
pub struct BandGrid {
    pub res: usize,
    pub origin: [f64; 2],
    pub eigenvalues: Vec<Vec<f64>>,
    pub eigenvectors: Option<Vec<CMat>>,
}

impl BandGrid {
    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        let s = 2.0 * PI / self.res as f64;
        [self.origin[0] + s * i as f64, self.origin[1] + s * j as f64]
    }

    pub fn flat(&self, i: usize, j: usize) -> usize {
        (i % self.res) * self.res + (j % self.res)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.res as f64
    }

    pub fn bands(&self) -> usize {
        self.eigenvalues.first().map_or(0, |v| v.len())
    }

    pub fn band(&self, k: usize) -> Vec<f64> {
        self.eigenvalues.iter().map(|v| v[k]).collect()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, [f64; 2])> + '_ {
        (0..self.res * self.res).map(move |f| (f, self.node(f / self.res, f % self.res)))
    }
}

/// Diagonalize the fiber family on a `res × res` grid starting at `(−π, −π)`.
pub fn compute_bands(source: &dyn FiberFamily, res: usize, kept: usize) -> Result<BandGrid> {
    compute_bands_with(source, res, kept, [-PI, -PI], false)
}

/// Grid diagonalization with explicit origin and optional eigenvectors.
pub fn compute_bands_with(
    source: &dyn FiberFamily,
    res: usize,
    kept: usize,
    origin: [f64; 2],
    vectors: bool,
) -> Result<BandGrid> {
    if res < 4 {
        return Err(Error::InvalidInput("grid resolution must be >= 4".into()));
    }
    let kept = kept.min(source.dim());
    let s = 2.0 * PI / res as f64;
    let results: Vec<Result<(Vec<f64>, Option<CMat>)>> = (0..res * res)
        .into_par_iter()
        .map(|f| {
            let theta = [origin[0] + s * (f / res) as f64, origin[1] + s * (f % res) as f64];
            let mut h = source.fiber(theta);
            symmetrize(&mut h);
            if vectors {
                let (vals, vecs) = herm_eig(&h);
                if vals.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NumericalFailure { node: f });
                }
                Ok((vals[..kept].to_vec(), Some(vecs.columns(0, kept).into_owned())))
            } else {
                let vals = herm_eigvals(&h);
                if vals.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NumericalFailure { node: f });
                }
                Ok((vals[..kept].to_vec(), None))
            }
        })
        .collect();
    let mut eigenvalues = Vec::with_capacity(res * res);
    let mut eigenvectors = vectors.then(Vec::new);
    for r in results {
        let (vals, vecs) = r?;
        eigenvalues.push(vals);
        if let (Some(store), Some(v)) = (eigenvectors.as_mut(), vecs) {
            store.push(v);
        }
    }
    Ok(BandGrid {
        res,
        origin,
        eigenvalues,
        eigenvectors,
    })
}

/// The two eigenvalues `(λ_{k0}, λ_{k0+1})` of the fiber at an arbitrary point.
pub fn pair_at(source: &dyn FiberFamily, theta: [f64; 2], k0: usize) -> (f64, f64) {
    let mut h = source.fiber(theta);
    symmetrize(&mut h);
    if h.nrows() == 2 {
        // Closed form keeps δ² smooth to the last digit near the crossing.
        let a = h[(0, 0)].re;
        let d = h[(1, 1)].re;
        let b = h[(0, 1)];
        let m = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        return (m - r, m + r);
    }
    let v = herm_eigvals(&h);
    (v[k0], v[k0 + 1])
}

/// Reduce a quasi-momentum to `[−π, π)²`.
pub fn wrap_torus(theta: [f64; 2]) -> [f64; 2] {
    let w = |x: f64| x - 2.0 * PI * ((x + PI) / (2.0 * PI)).floor();
    [w(theta[0]), w(theta[1])]
}

/// Shortest distance between two quasi-momenta on the torus.
pub fn torus_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = wrap_torus([a[0] - b[0], a[1] - b[1]]);
    (d[0] * d[0] + d[1] * d[1]).sqrt()
}

/// A certified conical crossing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingPoint {
    pub theta0: [f64; 2],
    /// Index (from 0) of the lower band of the touching pair.
    pub k0: usize,
    /// Crossing energy; windows below are relative to it.
    pub energy: f64,
    /// Window `[−Λ₋, Λ₊]` relative to `energy`.
    pub window: (f64, f64),
    pub sigma_radius: f64,
    /// Residual gap `λ₊ − λ₋` at `theta0`.
    pub gap: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct CrossingOptions {
    /// Largest grid gap accepted as a seed for refinement.
    pub seed_threshold: f64,
    /// Largest residual gap accepted at the refined point.
    pub gap_tol: f64,
    /// Radius of Σ_I.
    pub sigma_radius: f64,
    /// Restrict the grid scan to this disk, if given.
    pub search_center: Option<([f64; 2], f64)>,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        Self {
            seed_threshold: 0.5,
            gap_tol: 1e-7,
            sigma_radius: 1.0,
            search_center: None,
        }
    }
}

/// Grid scan for the smallest gap followed by Newton refinement of δ².
pub fn locate_crossing(
    source: &dyn FiberFamily,
    bands: &BandGrid,
    k0: usize,
    opts: &CrossingOptions,
) -> Result<CrossingPoint> {
    if bands.bands() < k0 + 2 {
        return Err(Error::InvalidInput(format!(
            "need at least {} bands, grid has {}",
            k0 + 2,
            bands.bands()
        )));
    }
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for (f, theta) in bands.nodes() {
        if let Some((ctr, rad)) = opts.search_center {
            if torus_distance(theta, ctr) > rad {
                continue;
            }
        }
        let ev = &bands.eigenvalues[f];
        let gap = ev[k0 + 1] - ev[k0];
        if gap < best.0 {
            best = (gap, theta);
        }
    }
    if best.0 > opts.seed_threshold {
        return Err(Error::NoCrossingFound { min_gap: best.0 });
    }
    let delta2 = |t: [f64; 2]| {
        let (a, b) = pair_at(source, t, k0);
        0.25 * (b - a) * (b - a)
    };
    let step = 1e-4 * bands.spacing();
    let mut theta = best.1;
    let mut value = delta2(theta);
    let mut converged = false;
    for _ in 0..100 {
        let g = fd::gradient2(&delta2, theta, step);
        if (g[0] * g[0] + g[1] * g[1]).sqrt() < 1e-12 {
            converged = true;
            break;
        }
        let hs = fd::hessian2(&delta2, theta, step);
        let det = hs[0][0] * hs[1][1] - hs[0][1] * hs[1][0];
        let mut dx = if det.abs() > 1e-300 && hs[0][0] > 0.0 && det > 0.0 {
            [
                -(hs[1][1] * g[0] - hs[0][1] * g[1]) / det,
                -(-hs[1][0] * g[0] + hs[0][0] * g[1]) / det,
            ]
        } else {
            [-g[0], -g[1]]
        };
        let mut accepted = false;
        for _ in 0..40 {
            let cand = [theta[0] + dx[0], theta[1] + dx[1]];
            let cv = delta2(cand);
            if cv <= value {
                theta = cand;
                value = cv;
                accepted = true;
                break;
            }
            dx = [0.5 * dx[0], 0.5 * dx[1]];
        }
        let len = (dx[0] * dx[0] + dx[1] * dx[1]).sqrt();
        if !accepted || len < 1e-15 {
            converged = true;
            break;
        }
        if torus_distance(theta, best.1) > 4.0 * bands.spacing() {
            return Err(Error::RefinementFailed {
                best: best.1,
                gap: best.0,
            });
        }
    }
    let (lm, lp) = pair_at(source, theta, k0);
    let gap = lp - lm;
    if !converged && gap > opts.gap_tol {
        return Err(Error::RefinementFailed {
            best: best.1,
            gap: best.0,
        });
    }
    if gap > opts.gap_tol {
        return Err(Error::NoCrossingFound { min_gap: gap });
    }
    let theta0 = wrap_torus(theta);
    let energy = 0.5 * (lm + lp);
    let window = crossing_window(bands, theta0, energy, k0, opts.sigma_radius);
    let mut warnings = Vec::new();
    match k0 {
        0 => warnings.push(
            "k0 = 0: no band below the crossing pair; global sections need an auxiliary embedding"
                .to_string(),
        ),
        1 => warnings.push("k0 = 1: accepted, although k0 >= 2 is the safe regime for the lower section".to_string()),
        _ => {}
    }
    Ok(CrossingPoint {
        theta0,
        k0,
        energy,
        window,
        sigma_radius: opts.sigma_radius,
        gap,
        warnings,
    })
}

/// Tightest window containing both touching bands over Σ_I, with a 5% margin.
fn crossing_window(bands: &BandGrid, theta0: [f64; 2], e0: f64, k0: usize, radius: f64) -> (f64, f64) {
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for (f, theta) in bands.nodes() {
        if torus_distance(theta, theta0) <= radius {
            let ev = &bands.eigenvalues[f];
            lo = lo.max(e0 - ev[k0]);
            hi = hi.max(ev[k0 + 1] - e0);
        }
    }
    (1.05 * lo.max(1e-12), 1.05 * hi.max(1e-12))
}

/// Constants of the local cone certification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// Lower and upper linear gap constants c ≤ C.
    pub c_lower: f64,
    pub c_upper: f64,
    /// Eigenvalues of Hess 𝒹(θ₀), 𝒹 = λ₋λ₊.
    pub hessian_eigenvalues: [f64; 2],
    /// Eigenvalues of Hess 𝒹 in units of Hess δ²: `(−1, a² − 1)`, both −1 for a tilt-free cone.
    pub hessian_normalized: [f64; 2],
    pub a0: f64,
    pub a: f64,
    /// Smallest eigenvalue of Hess δ²(θ₀).
    pub rho: f64,
    pub pass_h1: bool,
    pub pass_h2: bool,
    pub warnings: Vec<String>,
}

/// Certify the isolated-pair and quadratic-determinant hypotheses around a crossing.
pub fn verify_hypotheses(
    source: &dyn FiberFamily,
    bands: &BandGrid,
    crossing: &CrossingPoint,
) -> Result<HypothesisReport> {
    let k0 = crossing.k0;
    let e0 = crossing.energy;
    let (lam_m, lam_p) = crossing.window;
    for (f, theta) in bands.nodes() {
        if torus_distance(theta, crossing.theta0) > crossing.sigma_radius {
            continue;
        }
        let ev = &bands.eigenvalues[f];
        if k0 >= 1 && ev[k0 - 1] - e0 >= -lam_m {
            return Err(Error::HypothesisH1Violated { band: k0 - 1 });
        }
        if ev.len() > k0 + 2 && ev[k0 + 2] - e0 <= lam_p {
            return Err(Error::HypothesisH1Violated { band: k0 + 2 });
        }
    }
    let t0 = crossing.theta0;
    let pair = |t: [f64; 2]| {
        let (a, b) = pair_at(source, t, k0);
        (a - e0, b - e0)
    };
    let det_fn = |t: [f64; 2]| {
        let (a, b) = pair(t);
        a * b
    };
    let delta2_fn = |t: [f64; 2]| {
        let (a, b) = pair(t);
        0.25 * (b - a) * (b - a)
    };
    let lcirc = |t: [f64; 2]| {
        let (a, b) = pair(t);
        0.5 * (a + b)
    };
    let h = 1e-3;
    let hd = fd::hessian2(&det_fn, t0, h);
    let hdelta = fd::hessian2(&delta2_fn, t0, h);
    let g = fd::gradient2(&lcirc, t0, h);
    let (e1, e2) = sym2_eigvals(hd[0][0], hd[0][1], hd[1][1]);
    let (r1, r2) = sym2_eigvals(hdelta[0][0], hdelta[0][1], hdelta[1][1]);
    let rho = r1;
    let mut warnings = Vec::new();
    let (a, normalized) = if rho > 0.0 {
        // a² = 2 gᵀ (Hess δ²)⁻¹ g
        let det = hdelta[0][0] * hdelta[1][1] - hdelta[0][1] * hdelta[0][1];
        let inv = [
            [hdelta[1][1] / det, -hdelta[0][1] / det],
            [-hdelta[0][1] / det, hdelta[0][0] / det],
        ];
        let q = g[0] * (inv[0][0] * g[0] + inv[0][1] * g[1]) + g[1] * (inv[1][0] * g[0] + inv[1][1] * g[1]);
        let a = (2.0 * q).max(0.0).sqrt();
        // Eigenvalues of S⁻¹ Hess 𝒹 S⁻¹ with S² = Hess δ²: (−1, a² − 1).
        let normalized = generalized_eig2(hd, hdelta);
        (a, normalized)
    } else {
        warnings.push("Hess δ² is not positive definite".to_string());
        (f64::INFINITY, [f64::NAN, f64::NAN])
    };
    let _ = r2;
    let mut c_lower = f64::INFINITY;
    let mut c_upper = 0.0f64;
    let core = 2.0 * bands.spacing();
    for (f, theta) in bands.nodes() {
        let d = torus_distance(theta, t0);
        if d <= core || d > crossing.sigma_radius {
            continue;
        }
        let ev = &bands.eigenvalues[f];
        let ratio = (ev[k0 + 1] - ev[k0]) / d;
        c_lower = c_lower.min(ratio);
        c_upper = c_upper.max(ratio);
    }
    if !c_lower.is_finite() {
        warnings.push("no grid nodes in Σ_I outside the core; c, C unavailable".into());
        c_lower = 0.0;
    }
    let pass_h2 = e1 < 0.0 && e2 < 0.0 && a < 1.0 && c_lower > 0.0;
    Ok(HypothesisReport {
        c_lower,
        c_upper,
        hessian_eigenvalues: [e1, e2],
        hessian_normalized: normalized,
        a0: -e2,
        a,
        rho,
        pass_h1: true,
        pass_h2,
        warnings,
    })
}

/// Eigenvalues of the pencil `(A, B)` for symmetric 2×2 `A` and positive `B`.
fn generalized_eig2(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [f64; 2] {
    // det(A − λB) = 0
    let qa = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    let qb = -(a[0][0] * b[1][1] + a[1][1] * b[0][0] - a[0][1] * b[1][0] - a[1][0] * b[0][1]);
    let qc = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
    let mut r = [(-qb - disc) / (2.0 * qa), (-qb + disc) / (2.0 * qa)];
    r.sort_by(f64::total_cmp);
    r
}
