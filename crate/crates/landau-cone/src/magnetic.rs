//! Magnetic phases, Gram matrices of magnetic Wannier families, magnetic
//! matrices and their spectra at rational flux or in nonconstant fields.
//!
//! Lattice sites are integer points `α ∈ ℤ²` in reduced coordinates, so the
//! unit cell has area 1 and `b = εB°` is the flux per cell.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hopping::HoppingSet;
use crate::linalg::{c, cis, herm_eig, herm_eigvals, herm_fn, op_norm, CMat, C64, ONE, ZERO};
use crate::local_model::TwoBandSymbol;
use crate::spectrum::SpectrumSet;

fn wedge(x: [f64; 2], y: [f64; 2]) -> f64 {
    x[0] * y[1] - x[1] * y[0]
}

fn fl(a: [i32; 2]) -> [f64; 2] {
    [a[0] as f64, a[1] as f64]
}

/// `Λ(x, y) = exp(−i(b/2) x∧y)` (transverse gauge).
pub fn magnetic_phase(x: [f64; 2], y: [f64; 2], b: f64) -> C64 {
    cis(-0.5 * b * wedge(x, y))
}

/// `Ω(x, y, z) = exp(−i b·area⟨x, y, z⟩)`, the flux phase of an oriented triangle.
pub fn flux_phase(x: [f64; 2], y: [f64; 2], z: [f64; 2], b: f64) -> C64 {
    let u = [y[0] - x[0], y[1] - x[1]];
    let v = [z[0] - x[0], z[1] - x[1]];
    cis(-0.5 * b * wedge(u, v))
}

/// Flux `2πp/q` per unit cell, `gcd(p, q) = 1`, `q ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FluxRational {
    p: i64,
    q: i64,
}

impl FluxRational {
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if q < 1 {
            return Err(Error::InvalidInput(format!("flux denominator must be ≥ 1, got {q}")));
        }
        if num_integer::gcd(p, q) != 1 {
            return Err(Error::InvalidInput(format!("flux {p}/{q} is not in lowest terms")));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    /// `b = εB° = 2πp/q`.
    pub fn b(&self) -> f64 {
        2.0 * PI * self.p as f64 / self.q as f64
    }

    /// Continued-fraction convergents of `x = b/2π` with `q ≤ max_q`.
    pub fn convergents(x: f64, max_q: i64) -> Vec<FluxRational> {
        let (mut h0, mut h1) = (0i64, 1i64);
        let (mut k0, mut k1) = (1i64, 0i64);
        let mut r = x;
        let mut out = Vec::new();
        for _ in 0..64 {
            let a = r.floor();
            let (h2, k2) = (a as i64 * h1 + h0, a as i64 * k1 + k0);
            if k2 > max_q {
                break;
            }
            out.push(FluxRational { p: h2, q: k2 });
            (h0, h1, k0, k1) = (h1, h2, k1, k2);
            let frac = r - a;
            if frac.abs() < 1e-15 {
                break;
            }
            r = 1.0 / frac;
        }
        out
    }
}

impl FromStr for FluxRational {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (p, q) = s
            .split_once('/')
            .ok_or_else(|| Error::InvalidInput(format!("flux {s:?} should be \"p/q\"")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<i64>()
                .map_err(|e| Error::InvalidInput(format!("flux {s:?}: {e}")))
        };
        Self::new(parse(p)?, parse(q)?)
    }
}

impl std::fmt::Display for FluxRational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

/// Field perturbation profile `B(x)`.
pub type FieldFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Field law `B_{ε,κ}(x) = εB° + εκB(x)`.
#[derive(Clone)]
pub struct MagneticParams {
    pub epsilon: f64,
    pub kappa: f64,
    pub b0: f64,
    pub field: FieldFn,
}

impl std::fmt::Debug for MagneticParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MagneticParams")
            .field("epsilon", &self.epsilon)
            .field("kappa", &self.kappa)
            .field("b0", &self.b0)
            .finish_non_exhaustive()
    }
}

impl MagneticParams {
    pub fn constant(epsilon: f64, b0: f64) -> Self {
        Self {
            epsilon,
            kappa: 0.0,
            b0,
            field: Arc::new(|_| 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) || !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::InvalidInput(format!(
                "epsilon = {}, kappa = {} must lie in [0, 1]",
                self.epsilon, self.kappa
            )));
        }
        if self.b0 <= 0.0 {
            return Err(Error::InvalidInput(format!("B0 = {} must be positive", self.b0)));
        }
        Ok(())
    }

    /// `B_{ε,κ}(x)`.
    pub fn total(&self, x: [f64; 2]) -> f64 {
        self.epsilon * (self.b0 + self.kappa * (self.field)(x))
    }
}

fn gauss32() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(32).expect("nonzero")))
}

/// `∫₀¹ f(t) dt` by 32-point Gauss–Legendre.
pub fn gauss_unit(f: impl FnMut(f64) -> f64) -> f64 {
    gauss32().integrate(0.0, 1.0, f)
}

/// Vector potential of `B` in the Poincaré gauge anchored at the origin:
/// `A(x) = (−x₂, x₁) ∫₀¹ s B(sx) ds`, so `∂₁A₂ − ∂₂A₁ = B` for any `B`.
pub fn poincare_potential(field: &dyn Fn([f64; 2]) -> f64, x: [f64; 2]) -> [f64; 2] {
    let w = gauss_unit(|s| s * field([s * x[0], s * x[1]]));
    [-x[1] * w, x[0] * w]
}

/// `∫_{[x,y]} A` for a vector potential given pointwise.
pub fn circulation(a: &dyn Fn([f64; 2]) -> [f64; 2], x: [f64; 2], y: [f64; 2]) -> f64 {
    let d = [y[0] - x[0], y[1] - x[1]];
    gauss_unit(|t| {
        let v = a([x[0] + t * d[0], x[1] + t * d[1]]);
        d[0] * v[0] + d[1] * v[1]
    })
}

/// Overlaps `⟨τ_α Ψ_j, Ω(β, α, ·) τ_β Ψ_k⟩` of a Wannier family in flux `b`.
pub trait WannierOverlaps: Sync {
    fn orbitals(&self) -> usize;
    fn overlap(&self, j: usize, alpha: [i32; 2], k: usize, beta: [i32; 2], b: f64) -> C64;
}

/// Point-supported (tight-binding) Wannier functions: overlaps `δ_{jk}δ_{αβ}`.
#[derive(Clone, Copy, Debug)]
pub struct PointWannier {
    pub orbitals: usize,
}

impl WannierOverlaps for PointWannier {
    fn orbitals(&self) -> usize {
        self.orbitals
    }
    fn overlap(&self, j: usize, alpha: [i32; 2], k: usize, beta: [i32; 2], _b: f64) -> C64 {
        if j == k && alpha == beta {
            ONE
        } else {
            ZERO
        }
    }
}

/// One-orbital toy: Löwdin-orthonormalized Gaussians of width `s` on `ℤ²`.
///
/// `w = Σ_μ c(μ) τ_μ g`, with `c` the lattice convolution inverse square root of
/// the Gaussian overlaps; magnetic overlaps have a closed form because the flux
/// phase is linear in `x`.
#[derive(Clone, Debug)]
pub struct GaussianWannier {
    width: f64,
    coeff: Vec<([i32; 2], f64)>,
}

impl GaussianWannier {
    pub fn new(width: f64, radius: i32) -> Self {
        // ĝ(θ) = ĝ₁(θ₁)ĝ₁(θ₂), ĝ₁(t) = Σ_γ e^{−γ²/(4s²)} cos(tγ), so the Löwdin
        // coefficients factorize: c(μ) = c₁(μ₁)c₁(μ₂), c₁(m) = ⟨ĝ₁^{−1/2}, cos(m·)⟩.
        let n = 256usize;
        let s2 = width * width;
        let inv_sqrt: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                let g: f64 = (-40i32..=40)
                    .map(|k| (-(k * k) as f64 / (4.0 * s2)).exp() * (t * k as f64).cos())
                    .sum();
                (t, g.powf(-0.5))
            })
            .collect();
        let c1: Vec<f64> = (-radius..=radius)
            .map(|m| inv_sqrt.iter().map(|(t, v)| v * (t * m as f64).cos()).sum::<f64>() / n as f64)
            .collect();
        let mut coeff = Vec::new();
        for (i, a) in c1.iter().enumerate() {
            for (j, b) in c1.iter().enumerate() {
                let v = a * b;
                if v.abs() > 1e-17 {
                    coeff.push(([i as i32 - radius, j as i32 - radius], v));
                }
            }
        }
        Self { width, coeff }
    }

    /// `∫ g(x−a) g(x−c) e^{i⟨k,x⟩} dx`.
    fn pair(&self, a: [f64; 2], cc: [f64; 2], k: [f64; 2]) -> C64 {
        let s2 = self.width * self.width;
        let d2 = (a[0] - cc[0]).powi(2) + (a[1] - cc[1]).powi(2);
        let m = [(a[0] + cc[0]) / 2.0, (a[1] + cc[1]) / 2.0];
        let amp = (-d2 / (4.0 * s2) - s2 * (k[0] * k[0] + k[1] * k[1]) / 4.0).exp();
        cis(k[0] * m[0] + k[1] * m[1]) * amp
    }
}

impl WannierOverlaps for GaussianWannier {
    fn orbitals(&self) -> usize {
        1
    }

    fn overlap(&self, _j: usize, alpha: [i32; 2], _k: usize, beta: [i32; 2], b: f64) -> C64 {
        // Ω(β, α, x) = exp(−i(b/2)(α−β)∧(x−β)) = e^{i⟨k,x⟩} e^{i(b/2)α∧β}.
        let (a, bt) = (fl(alpha), fl(beta));
        let d = [a[0] - bt[0], a[1] - bt[1]];
        let k = [0.5 * b * d[1], -0.5 * b * d[0]];
        let constant = cis(0.5 * b * wedge(a, bt));
        // Pairs with e^{−d²/4s²} < e^{−40} are negligible.
        let cut = 160.0 * self.width * self.width;
        let mut acc = ZERO;
        for (mu, cm) in &self.coeff {
            for (nu, cn) in &self.coeff {
                let x = [a[0] + mu[0] as f64, a[1] + mu[1] as f64];
                let y = [bt[0] + nu[0] as f64, bt[1] + nu[1] as f64];
                if (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) > cut {
                    continue;
                }
                acc += self.pair(x, y, k) * (cm * cn);
            }
        }
        acc * constant
    }
}

/// Square patch of sites `{−L..L}²` with `d` orbitals per site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SquarePatch {
    pub extent: i32,
    pub orbitals: usize,
}

impl SquarePatch {
    pub fn new(extent: i32, orbitals: usize) -> Self {
        Self { extent, orbitals }
    }

    pub fn side(&self) -> usize {
        (2 * self.extent + 1) as usize
    }

    pub fn sites(&self) -> usize {
        self.side() * self.side()
    }

    pub fn dim(&self) -> usize {
        self.sites() * self.orbitals
    }

    pub fn contains(&self, a: [i32; 2]) -> bool {
        a[0].abs() <= self.extent && a[1].abs() <= self.extent
    }

    pub fn site_index(&self, a: [i32; 2]) -> usize {
        let l = self.extent;
        ((a[0] + l) as usize) * self.side() + (a[1] + l) as usize
    }

    pub fn index(&self, a: [i32; 2], j: usize) -> usize {
        self.site_index(a) * self.orbitals + j
    }

    pub fn site(&self, s: usize) -> [i32; 2] {
        let l = self.extent;
        [(s / self.side()) as i32 - l, (s % self.side()) as i32 - l]
    }

    pub fn iter(&self) -> impl Iterator<Item = [i32; 2]> + '_ {
        (0..self.sites()).map(|s| self.site(s))
    }

    /// Distance of a site from the boundary, `L − |α|_∞`.
    pub fn depth(&self, a: [i32; 2]) -> i32 {
        self.extent - a[0].abs().max(a[1].abs())
    }
}

/// `𝔾_{(j,α),(k,β)} = Λ(α,β)⟨τ_αΨ_j, Ω(β,α,·)τ_βΨ_k⟩` on a patch; pairs with
/// `|α−β|_∞ > radius` are dropped and diagonal blocks are exactly `𝟙`.
pub fn gram_matrix(w: &dyn WannierOverlaps, b: f64, patch: SquarePatch, radius: i32) -> CMat {
    let d = w.orbitals();
    assert_eq!(d, patch.orbitals);
    let n = patch.dim();
    let rows: Vec<Vec<(usize, C64)>> = (0..patch.sites())
        .into_par_iter()
        .map(|s| {
            let a = patch.site(s);
            let mut out = Vec::new();
            for beta in patch.iter() {
                if (a[0] - beta[0]).abs() > radius || (a[1] - beta[1]).abs() > radius {
                    continue;
                }
                let lam = magnetic_phase(fl(a), fl(beta), b);
                for j in 0..d {
                    for k in 0..d {
                        let v = if a == beta {
                            if j == k {
                                ONE
                            } else {
                                ZERO
                            }
                        } else {
                            lam * w.overlap(j, a, k, beta, b)
                        };
                        out.push((patch.index(beta, k) * d + j, v));
                    }
                }
            }
            out
        })
        .collect();
    let mut g = CMat::zeros(n, n);
    for (s, row) in rows.into_iter().enumerate() {
        for (code, v) in row {
            let (col, j) = (code / d, code % d);
            g[(s * d + j, col)] = v;
        }
    }
    g
}

/// `𝐠(γ) = 𝔾_{γ,0}/Λ(γ,0)` for a translation-invariant Wannier family.
pub fn gram_kernel(w: &dyn WannierOverlaps, b: f64, radius: i32) -> HoppingSet {
    let d = w.orbitals();
    let mut h = HoppingSet::new(d);
    for g1 in -radius..=radius {
        for g2 in -radius..=radius {
            let m = CMat::from_fn(d, d, |j, k| {
                if [g1, g2] == [0, 0] {
                    if j == k {
                        ONE
                    } else {
                        ZERO
                    }
                } else {
                    w.overlap(j, [g1, g2], k, [0, 0], b)
                }
            });
            h.add([g1, g2], m);
        }
    }
    h
}

/// `𝔽 = 𝔾^{−1/2}` with check `λ_min(𝔾) > 1e−8`.
pub fn inverse_sqrt(g: &CMat) -> Result<CMat> {
    let ev = herm_eigvals(g);
    let min = ev.first().copied().unwrap_or(1.0);
    if min <= 1e-8 {
        return Err(Error::GramNotPositive { min_eig: min });
    }
    Ok(herm_fn(g, |x| x.powf(-0.5)))
}

/// `sup ⟨α−β⟩^power |X_{(j,α),(k,β)} − δ|` over a patch.
pub fn decay_profile(x: &CMat, patch: SquarePatch, power: i32) -> f64 {
    let d = patch.orbitals;
    let mut worst = 0.0f64;
    for r in 0..x.nrows() {
        let a = patch.site(r / d);
        for col in 0..x.ncols() {
            let bb = patch.site(col / d);
            let dd = ((a[0] - bb[0]).pow(2) + (a[1] - bb[1]).pow(2)) as f64;
            let delta = if r == col { ONE } else { ZERO };
            worst = worst.max((1.0 + dd).sqrt().powi(power) * (x[(r, col)] - delta).norm());
        }
    }
    worst
}

/// Magnetic matrix on a patch; a hop only needs one evaluation of `phase(α, β)`.
fn assemble_on_patch(m: &HoppingSet, patch: SquarePatch, phase: &(dyn Fn([i32; 2], [i32; 2]) -> C64 + Sync)) -> CMat {
    let d = m.orbitals();
    let n = patch.dim();
    let hops: Vec<([i32; 2], CMat)> = m.iter().map(|(g, x)| (*g, x.clone())).collect();
    let rows: Vec<Vec<(usize, C64)>> = (0..patch.sites())
        .into_par_iter()
        .map(|s| {
            let a = patch.site(s);
            let mut out = Vec::new();
            for (g, mm) in &hops {
                let beta = [a[0] - g[0], a[1] - g[1]];
                if !patch.contains(beta) {
                    continue;
                }
                let ph = phase(a, beta);
                for j in 0..d {
                    for k in 0..d {
                        out.push((patch.index(beta, k) * d + j, ph * mm[(j, k)]));
                    }
                }
            }
            out
        })
        .collect();
    let mut h = CMat::zeros(n, n);
    for (s, row) in rows.into_iter().enumerate() {
        for (code, v) in row {
            let (col, j) = (code / d, code % d);
            h[(s * d + j, col)] += v;
        }
    }
    h
}

/// `[𝓜]_{(j,α),(k,β)} = Λ(α,β) 𝓂(α−β)_{jk}` on `{−L..L}²`.
pub fn build_magnetic_matrix(m: &HoppingSet, b: f64, extent: i32) -> Result<CMat> {
    m.check_hermitian(1e-12)?;
    if extent < 3 * m.cutoff().max(1) {
        return Err(Error::InvalidInput(format!(
            "extent {extent} below 3 × hopping cutoff {}",
            m.cutoff()
        )));
    }
    let patch = SquarePatch::new(extent, m.orbitals());
    Ok(assemble_on_patch(m, patch, &|a, bb| magnetic_phase(fl(a), fl(bb), b)))
}

/// Zak translation `(𝒯_w ψ)(α) = Λ(α, w) ψ(α − w)` on a patch (sites
/// translated out of the patch are dropped).
pub fn magnetic_translation(patch: SquarePatch, w: [i32; 2], b: f64) -> CMat {
    let d = patch.orbitals;
    let mut t = CMat::zeros(patch.dim(), patch.dim());
    for a in patch.iter() {
        let src = [a[0] - w[0], a[1] - w[1]];
        if !patch.contains(src) {
            continue;
        }
        let ph = magnetic_phase(fl(a), fl(w), b);
        for j in 0..d {
            t[(patch.index(a, j), patch.index(src, j))] = ph;
        }
    }
    t
}

/// Eigenpairs of a finite-patch operator with edge states removed.
#[derive(Clone, Debug)]
pub struct InteriorSpectrum {
    pub spectrum: SpectrumSet,
    /// Eigenvalues in the window dropped for boundary weight above threshold.
    pub removed: usize,
    /// Largest boundary weight among the kept states.
    pub max_boundary_weight: f64,
}

/// Keep eigenpairs in `window` whose weight on sites with depth `< rings` is ≤ `threshold`.
///
/// Inside a degenerate cluster the eigenbasis is first rotated to diagonalize
/// the boundary weight, so bulk and edge states separate.
pub fn interior_spectrum(h: &CMat, patch: SquarePatch, window: (f64, f64), rings: i32, threshold: f64) -> InteriorSpectrum {
    let (ev, mut vecs) = herm_eig(h);
    let d = patch.orbitals;
    let edge: Vec<usize> = (0..h.nrows()).filter(|&r| patch.depth(patch.site(r / d)) < rings).collect();
    let tol = 1e-10 * op_norm(h).max(1.0);
    let mut i = 0;
    while i < ev.len() {
        let mut j = i + 1;
        while j < ev.len() && ev[j] - ev[j - 1] <= tol {
            j += 1;
        }
        if j - i > 1 && ev[j - 1] >= window.0 && ev[i] <= window.1 {
            let block = vecs.columns(i, j - i).into_owned();
            let rows = CMat::from_fn(edge.len(), j - i, |r, k| block[(edge[r], k)]);
            let (_, rot) = herm_eig(&(rows.adjoint() * rows));
            vecs.columns_mut(i, j - i).copy_from(&(block * rot));
        }
        i = j;
    }
    let mut kept = Vec::new();
    let mut removed = 0;
    let mut max_w = 0.0f64;
    for (i, &e) in ev.iter().enumerate() {
        if e < window.0 || e > window.1 {
            continue;
        }
        let w: f64 = edge.iter().map(|&r| vecs[(r, i)].norm_sqr()).sum();
        if w > threshold {
            removed += 1;
        } else {
            kept.push(e);
            max_w = max_w.max(w);
        }
    }
    InteriorSpectrum {
        spectrum: SpectrumSet::new(kept, window),
        removed,
        max_boundary_weight: max_w,
    }
}

/// Magnetic Bloch matrix for flux `p/q` on the `1 × q` cell at the characters
/// `𝒯_{e₁} = e^{−ik₁}`, `𝒯_{(0,q)} = e^{−ik₂}` of the Zak translations.
pub fn magnetic_bloch_matrix(m: &HoppingSet, flux: FluxRational, k: [f64; 2]) -> CMat {
    let q = flux.q() as i32;
    let b = flux.b();
    let d = m.orbitals();
    let lam1 = cis(-k[0]);
    let lam2 = cis(-k[1]);
    let e1 = [1.0, 0.0];
    let qv = [0.0, q as f64];
    let mut h = CMat::zeros(q as usize * d, q as usize * d);
    for n in 0..q {
        let alpha = [0, n];
        for (g, mm) in m.iter() {
            let beta = [alpha[0] - g[0], alpha[1] - g[1]];
            // ψ(β) = factor · ψ(rep), walking from rep along Q then e₁ using
            // ψ(x − w) = λ_w Λ(w, x) ψ(x).
            let s = beta[1].div_euclid(q);
            let rep = [0, beta[1].rem_euclid(q)];
            let mut x = fl(rep);
            let mut factor = ONE;
            for _ in 0..s.abs() {
                if s > 0 {
                    // x + Q: ψ(x+Q) = conj(λ₂Λ(Q,x)) ψ(x)
                    factor *= (lam2 * magnetic_phase(qv, x, b)).conj();
                    x[1] += q as f64;
                } else {
                    factor *= lam2 * magnetic_phase(qv, x, b);
                    x[1] -= q as f64;
                }
            }
            for _ in 0..beta[0].abs() {
                if beta[0] > 0 {
                    factor *= (lam1 * magnetic_phase(e1, x, b)).conj();
                    x[0] += 1.0;
                } else {
                    factor *= lam1 * magnetic_phase(e1, x, b);
                    x[0] -= 1.0;
                }
            }
            let ph = magnetic_phase(fl(alpha), fl(beta), b) * factor;
            for j in 0..d {
                for kk in 0..d {
                    h[(n as usize * d + j, rep[1] as usize * d + kk)] += ph * mm[(j, kk)];
                }
            }
        }
    }
    h
}

/// Magnetic Brillouin-zone nodes `k₁ = 2π(i+½)/(qg₁)`, `k₂ = 2π(j+½)/g₂`.
pub fn mbz_nodes(q: i64, grid: [usize; 2]) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(grid[0] * grid[1]);
    for i in 0..grid[0] {
        for j in 0..grid[1] {
            out.push([
                2.0 * PI * (i as f64 + 0.5) / (q as f64 * grid[0] as f64),
                2.0 * PI * (j as f64 + 0.5) / grid[1] as f64,
            ]);
        }
    }
    out
}

/// Upper bound on the dense Bloch dimension (`2q` complex entries squared).
const MAX_BLOCH_DIM: usize = 4096;

/// Union over a `grid` of MBZ nodes of the magnetic Bloch spectra, windowed.
pub fn hofstadter_spectrum(m: &HoppingSet, flux: FluxRational, grid: [usize; 2], window: (f64, f64)) -> Result<SpectrumSet> {
    m.check_hermitian(1e-12)?;
    let dim = flux.q() as usize * m.orbitals();
    if dim > MAX_BLOCH_DIM {
        return Err(Error::Resource(format!("magnetic Bloch dimension {dim} exceeds {MAX_BLOCH_DIM}")));
    }
    let vals: Vec<f64> = mbz_nodes(flux.q(), grid)
        .into_par_iter()
        .flat_map_iter(|k| herm_eigvals(&magnetic_bloch_matrix(m, flux, k)))
        .collect();
    Ok(SpectrumSet::new(vals, window))
}

/// Geometry for a nonconstant field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FieldGeometry {
    /// Finite patch `{−L..L}²` in the Poincaré gauge about the centre, edge states filtered.
    Patch { extent: i32 },
    /// `B` depends on `x₁` only with period `width`; Landau-type gauge
    /// `A = (0, ∫₀^{x₁} B)` and Bloch reduction on a `width × 1` cell.
    Strip { width: usize, grid: [usize; 2] },
}

/// Spectrum of the magnetic matrix with phases `exp(−i∫_{[α,β]} A^{ε,κ})`.
pub fn nonconstant_field_spectrum(
    m: &HoppingSet,
    mp: &MagneticParams,
    geometry: FieldGeometry,
    window: (f64, f64),
) -> Result<InteriorSpectrum> {
    mp.validate()?;
    m.check_hermitian(1e-12)?;
    match geometry {
        FieldGeometry::Patch { extent } => {
            let patch = SquarePatch::new(extent, m.orbitals());
            let field = |x: [f64; 2]| mp.total(x);
            let a = |x: [f64; 2]| poincare_potential(&field, x);
            let h = assemble_on_patch(m, patch, &|al, be| cis(-circulation(&a, fl(al), fl(be))));
            Ok(interior_spectrum(&h, patch, window, 2, 1e-4))
        }
        FieldGeometry::Strip { width, grid } => {
            let w = width as f64;
            let line = |x1: f64| mp.total([x1, 0.0]);
            // a(x₁) = ∫₀^{x₁} B: composite Gauss over unit subintervals.
            let a2 = |x1: f64| -> f64 {
                let whole = x1.trunc();
                let mut acc = 0.0;
                let steps = whole.abs() as i64;
                let sgn = whole.signum();
                for i in 0..steps {
                    let lo = sgn * i as f64;
                    acc += sgn * gauss_unit(|t| line(lo + sgn * t));
                }
                let rest = x1 - whole;
                acc + rest * gauss_unit(|t| line(whole + rest * t))
            };
            let period_flux = a2(w);
            let turns = period_flux / (2.0 * PI);
            if (turns - turns.round()).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "strip flux per period {period_flux:.6} is not a multiple of 2π"
                )));
            }
            let d = m.orbitals();
            let hops: Vec<([i32; 2], CMat)> = m.iter().map(|(g, x)| (*g, x.clone())).collect();
            // Bond phases depend on (row, hop) only.
            let phases: Vec<Vec<C64>> = (0..width)
                .into_par_iter()
                .map(|n| {
                    hops.iter()
                        .map(|(g, _)| {
                            let circ = -(g[1] as f64) * gauss_unit(|t| a2(n as f64 - t * g[0] as f64));
                            cis(-circ)
                        })
                        .collect()
                })
                .collect();
            let mut nodes = Vec::new();
            for i in 0..grid[0] {
                for j in 0..grid[1] {
                    nodes.push([
                        2.0 * PI * (i as f64 + 0.5) / grid[0] as f64,
                        2.0 * PI * (j as f64 + 0.5) / grid[1] as f64,
                    ]);
                }
            }
            let vals: Vec<f64> = nodes
                .into_par_iter()
                .flat_map_iter(|k| {
                    let mut h = CMat::zeros(width * d, width * d);
                    for n in 0..width {
                        for (hi, (g, mm)) in hops.iter().enumerate() {
                            let src = n as i64 - g[0] as i64;
                            let r = src.rem_euclid(width as i64) as usize;
                            let wrap = src.div_euclid(width as i64) as f64;
                            let ph = phases[n][hi] * cis(-k[1] * g[1] as f64 + k[0] * wrap);
                            for j in 0..d {
                                for kk in 0..d {
                                    h[(n * d + j, r * d + kk)] += ph * mm[(j, kk)];
                                }
                            }
                        }
                    }
                    herm_eigvals(&h)
                })
                .collect();
            Ok(InteriorSpectrum {
                spectrum: SpectrumSet::new(vals, window),
                removed: 0,
                max_boundary_weight: 0.0,
            })
        }
    }
}

/// `k(θ) = Σ_γ e^{−i⟨θ,γ⟩} 𝓂(γ)` as a two-band symbol.
pub fn peierls_symbol(m: &HoppingSet) -> Result<TwoBandSymbol> {
    TwoBandSymbol::from_hoppings(m.clone())
}

/// `sup_θ ‖∂^a(k_ε − k₀)(θ)‖_max` on an `n × n` grid by iterated central differences.
pub fn symbol_distance(
    k_eps: &dyn Fn([f64; 2]) -> CMat,
    k_0: &dyn Fn([f64; 2]) -> CMat,
    order: [u32; 2],
    n: usize,
) -> f64 {
    let h = 2.0 * PI / n as f64;
    let diff = |t: [f64; 2]| k_eps(t) - k_0(t);
    fn deriv(f: &dyn Fn([f64; 2]) -> CMat, t: [f64; 2], order: [u32; 2], h: f64) -> CMat {
        if order[0] > 0 {
            let g = |s: [f64; 2]| deriv(f, s, [order[0] - 1, order[1]], h);
            (g([t[0] + h, t[1]]) - g([t[0] - h, t[1]])) / c(2.0 * h, 0.0)
        } else if order[1] > 0 {
            let g = |s: [f64; 2]| deriv(f, s, [0, order[1] - 1], h);
            (g([t[0], t[1] + h]) - g([t[0], t[1] - h])) / c(2.0 * h, 0.0)
        } else {
            f(t)
        }
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let t = [h * i as f64, h * j as f64];
            let m = deriv(&diff, t, order, h);
            worst = worst.max(m.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    worst
}

/// `‖𝔾 − 𝟙‖` in operator norm.
pub fn gram_deviation(g: &CMat) -> f64 {
    op_norm(&(g - CMat::identity(g.nrows(), g.ncols())))
}
