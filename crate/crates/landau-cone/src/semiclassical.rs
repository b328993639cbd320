//! One-dimensional reduction `Op₁(k(t, hτ))` with `h = εB°`, the
//! one-crossing surgery and the dual-route isospectrality check.
//!
//! The reduced operator on the grid `t_n = t₀ + nh` is
//! `(Af)(n) = Σ_γ 𝓂(γ) e^{iγ₁γ₂h/2} e^{−iγ₁t_n} f(n − γ₂)` with Floquet
//! condition `f(n + M) = e^{iκ} f(n)`; for `h = 2πp/q`, `M = q` makes the
//! periodization exact.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_integer::Integer;
use rayon::prelude::*;

use crate::dirac::DilatedQuantize;
use crate::error::{Error, Result};
use crate::hopping::HoppingSet;
use crate::linalg::{c, cis, herm_eig, herm_eigvals, kron, sigma_dot, symmetrize, CMat, C64, ZERO};
use crate::local_model::{DiracLinearization, TwoBandSymbol};
use crate::magnetic::{hofstadter_spectrum, mbz_nodes, FluxRational};
use crate::spectrum::{hausdorff, SpectrumSet};

/// Default tolerance for the dual-route comparison.
pub const ISO_TOL: f64 = 1e-8;

/// Periodized quantization of a hopping symbol on `M` grid points.
#[derive(Clone, Debug)]
pub struct Quantization1d {
    hoppings: HoppingSet,
    h: f64,
    size: usize,
    /// `t₀` has period `2π/cells`.
    cells: usize,
}

impl Quantization1d {
    /// Requires `hM ∈ 2πℤ`.
    pub fn new(hoppings: HoppingSet, h: f64, size: usize) -> Result<Self> {
        if !(h > 0.0) || size == 0 {
            return Err(Error::InvalidInput(format!("need h > 0 and M ≥ 1, got h = {h}, M = {size}")));
        }
        let turns = h * size as f64 / (2.0 * PI);
        if (turns - turns.round()).abs() > 1e-10 * turns.max(1.0) {
            return Err(Error::Commensurability { h });
        }
        hoppings.check_hermitian(1e-12)?;
        let p = turns.round() as i64;
        let g = p.gcd(&(size as i64)).max(1);
        Ok(Self {
            hoppings,
            h,
            size,
            cells: size / g as usize,
        })
    }

    /// `h = 2πp/q` on `q` points; flux 0 degenerates to the symbol itself.
    pub fn from_flux(hoppings: HoppingSet, flux: FluxRational) -> Self {
        let q = flux.q() as usize;
        Self {
            hoppings,
            h: flux.b(),
            size: q,
            cells: q,
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn hoppings(&self) -> &HoppingSet {
        &self.hoppings
    }

    /// Period of the spectrum in `t₀`.
    pub fn t_period(&self) -> f64 {
        2.0 * PI / self.cells as f64
    }

    pub fn matrix(&self, t0: f64, kappa: f64) -> CMat {
        self.matrix_with_weyl_phase(t0, kappa, 1.0)
    }

    /// `sign = 1` is the Weyl quantization; other values exist to exercise
    /// the isospectrality check.
    pub fn matrix_with_weyl_phase(&self, t0: f64, kappa: f64, sign: f64) -> CMat {
        let h = self.h;
        self.assemble(kappa, |g, n| {
            cis(sign * g[0] as f64 * g[1] as f64 * h / 2.0 - g[0] as f64 * (t0 + n as f64 * h))
        })
    }

    /// Same operator on the dilated grid `s_n = t_n/√h` with symbol
    /// `𝓀̃(√h s, √h σ)`; equal to [`matrix`](Self::matrix) up to rounding.
    pub fn symmetric_matrix(&self, t0: f64, kappa: f64) -> CMat {
        let r = self.h.sqrt();
        let s0 = if r > 0.0 { t0 / r } else { 0.0 };
        self.assemble(kappa, |g, n| {
            let s = s0 + n as f64 * r;
            let shift = g[1] as f64 * r;
            cis(g[0] as f64 * r * shift / 2.0 - g[0] as f64 * r * s)
        })
    }

    fn assemble(&self, kappa: f64, phase: impl Fn([i32; 2], usize) -> C64) -> CMat {
        let m = self.size;
        let d = self.hoppings.orbitals();
        let mut a = CMat::zeros(m * d, m * d);
        for n in 0..m {
            for (g, mm) in self.hoppings.iter() {
                let src = n as i64 - g[1] as i64;
                let r = src.rem_euclid(m as i64) as usize;
                let wrap = src.div_euclid(m as i64) as f64;
                let ph = phase(*g, n) * cis(kappa * wrap);
                for j in 0..d {
                    for k in 0..d {
                        a[(n * d + j, r * d + k)] += ph * mm[(j, k)];
                    }
                }
            }
        }
        symmetrize(&mut a);
        a
    }

    /// Matched nodes: `t₀ = t_period·(i+½)/g₁`, `κ = 2π(j+½)/g₂` (the
    /// magnetic Brillouin-zone nodes of the 2D route, bit for bit).
    pub fn nodes(&self, grid: [usize; 2]) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(grid[0] * grid[1]);
        for i in 0..grid[0] {
            for j in 0..grid[1] {
                out.push([
                    2.0 * PI * (i as f64 + 0.5) / (self.cells as f64 * grid[0] as f64),
                    2.0 * PI * (j as f64 + 0.5) / grid[1] as f64,
                ]);
            }
        }
        out
    }
}

/// `2M × 2M` quantization at `t₀ = κ = 0`.
pub fn quantize_1d(s: &TwoBandSymbol, h: f64, size: usize) -> Result<CMat> {
    let hop = s
        .hoppings()
        .ok_or_else(|| Error::InvalidInput("quantize_1d needs a finite hopping representation".into()))?;
    Ok(Quantization1d::new(hop.clone(), h, size)?.matrix(0.0, 0.0))
}

/// Union of the Floquet spectra over a `grid` of `(t₀, κ)` nodes.
pub fn spectrum_1d(q: &Quantization1d, grid: [usize; 2], window: (f64, f64)) -> SpectrumSet {
    let vals: Vec<f64> = q
        .nodes(grid)
        .into_par_iter()
        .flat_map_iter(|k| herm_eigvals(&q.matrix(k[0], k[1])))
        .collect();
    SpectrumSet::new(vals, window)
}

/// Both spectra and their windowed Hausdorff distance.
#[derive(Clone, Debug)]
pub struct IsospectralityReport {
    pub two_d: SpectrumSet,
    pub one_d: SpectrumSet,
    pub distance: f64,
    pub tol: f64,
}

pub fn cross_check_spectra(two_d: SpectrumSet, one_d: SpectrumSet, tol: f64) -> Result<IsospectralityReport> {
    let distance = hausdorff(&two_d, &one_d);
    if !(distance <= tol) {
        return Err(Error::IsospectralityViolation { distance, tol });
    }
    Ok(IsospectralityReport {
        two_d,
        one_d,
        distance,
        tol,
    })
}

/// Hofstadter (2D) vs reduced Weyl (1D) route at matched nodes.
pub fn cross_check_isospectral(
    m: &HoppingSet,
    flux: FluxRational,
    grid: [usize; 2],
    window: (f64, f64),
    tol: f64,
) -> Result<IsospectralityReport> {
    let two_d = hofstadter_spectrum(m, flux, grid, window)?;
    let q = Quantization1d::from_flux(m.clone(), flux);
    debug_assert_eq!(q.nodes(grid), mbz_nodes(flux.q(), grid));
    let one_d = spectrum_1d(&q, grid, window);
    cross_check_spectra(two_d, one_d, tol)
}

/// `g(r) = 1` on `r ≤ ½`, `0` on `r ≥ 1`, `C^∞` in between.
pub fn smooth_cutoff(r: f64) -> f64 {
    let r = r.abs();
    if r <= 0.5 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        let psi = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
        let u = 2.0 * r - 1.0;
        psi(1.0 - u) / (psi(u) + psi(1.0 - u))
    }
}

/// A crossing point of the symbol modulo `2πℤ²` with its mass direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossingSite {
    pub theta: [f64; 2],
    pub v3: [f64; 3],
}

impl CrossingSite {
    pub fn new(theta: [f64; 2], lin: &DiracLinearization) -> Self {
        Self { theta, v3: lin.v3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneCrossingParams {
    pub d0: f64,
    pub d1: f64,
    /// Kept translate `γ*` of the first crossing site.
    pub kept: [i32; 2],
}

/// `𝓀^{γ*} = 𝓀 + Σ_{α ≠ kept} (d₀/8) g(|T − α|/d₁) σ·v⁽³⁾_α` over all
/// translates of all crossing sites except the kept one.
#[derive(Clone, Debug)]
pub struct OneCrossingSymbol {
    base: HoppingSet,
    sites: Vec<CrossingSite>,
    params: OneCrossingParams,
}

/// Smallest distance between distinct crossing translates.
fn crossing_separation(sites: &[CrossingSite]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in sites.iter().enumerate() {
        for (j, b) in sites.iter().enumerate() {
            for g1 in -2..=2 {
                for g2 in -2..=2 {
                    if i == j && g1 == 0 && g2 == 0 {
                        continue;
                    }
                    let d0 = b.theta[0] + 2.0 * PI * g1 as f64 - a.theta[0];
                    let d1 = b.theta[1] + 2.0 * PI * g2 as f64 - a.theta[1];
                    best = best.min(d0.hypot(d1));
                }
            }
        }
    }
    best
}

pub fn one_crossing_symbol(s: &TwoBandSymbol, sites: &[CrossingSite], oc: OneCrossingParams) -> Result<OneCrossingSymbol> {
    let base = s
        .hoppings()
        .ok_or_else(|| Error::InvalidInput("one_crossing_symbol needs a finite hopping representation".into()))?
        .clone();
    if sites.is_empty() {
        return Err(Error::InvalidInput("at least one crossing site is required".into()));
    }
    if !(oc.d0 > 0.0 && oc.d1 > 0.0) {
        return Err(Error::InvalidInput(format!("need d0, d1 > 0, got {}, {}", oc.d0, oc.d1)));
    }
    let half = 0.5 * crossing_separation(sites);
    if oc.d1 > half {
        return Err(Error::CutoffOverlap { radius: oc.d1, half });
    }
    Ok(OneCrossingSymbol {
        base,
        sites: sites.to_vec(),
        params: oc,
    })
}

impl OneCrossingSymbol {
    pub fn params(&self) -> OneCrossingParams {
        self.params
    }

    pub fn base(&self) -> &HoppingSet {
        &self.base
    }

    pub fn kept_point(&self) -> [f64; 2] {
        let k = self.params.kept;
        [
            self.sites[0].theta[0] + 2.0 * PI * k[0] as f64,
            self.sites[0].theta[1] + 2.0 * PI * k[1] as f64,
        ]
    }

    /// Gapped translates (centre, `v⁽³⁾`) within `radius` of `center`.
    pub fn bumps_near(&self, center: [f64; 2], radius: f64) -> Vec<([f64; 2], [f64; 3])> {
        let reach = (radius / (2.0 * PI)).ceil() as i32 + 1;
        let kept = self.kept_point();
        let mut out = Vec::new();
        for site in &self.sites {
            let n0 = ((center[0] - site.theta[0]) / (2.0 * PI)).round() as i32;
            let n1 = ((center[1] - site.theta[1]) / (2.0 * PI)).round() as i32;
            for g1 in n0 - reach..=n0 + reach {
                for g2 in n1 - reach..=n1 + reach {
                    let p = [site.theta[0] + 2.0 * PI * g1 as f64, site.theta[1] + 2.0 * PI * g2 as f64];
                    if (p[0] - kept[0]).hypot(p[1] - kept[1]) < 1e-9 {
                        continue;
                    }
                    if (p[0] - center[0]).hypot(p[1] - center[1]) <= radius {
                        out.push((p, site.v3));
                    }
                }
            }
        }
        out
    }

    pub fn eval(&self, t: [f64; 2]) -> CMat {
        let mut k = self.base.symbol(t);
        for (p, v3) in self.bumps_near(t, self.params.d1) {
            let g = smooth_cutoff((t[0] - p[0]).hypot(t[1] - p[1]) / self.params.d1);
            if g > 0.0 {
                let m = sigma_dot(v3);
                for i in 0..2 {
                    for j in 0..2 {
                        k[(i, j)] += m[(i, j)] * (self.params.d0 / 8.0 * g);
                    }
                }
            }
        }
        k
    }
}

/// `h^{−1/4} ψ_n(x/√h)` for `n < modes` on the points `xs`, column-major.
fn hermite_functions(xs: &[f64], h: f64, modes: usize) -> nalgebra::DMatrix<f64> {
    let mut out = nalgebra::DMatrix::zeros(xs.len(), modes);
    let norm = h.powf(-0.25) * PI.powf(-0.25);
    for (i, &x) in xs.iter().enumerate() {
        let y = x / h.sqrt();
        let mut prev = 0.0;
        let mut cur = norm * (-0.5 * y * y).exp();
        for n in 0..modes {
            out[(i, n)] = cur;
            let next = (2.0 / (n + 1) as f64).sqrt() * y * cur - (n as f64 / (n + 1) as f64).sqrt() * prev;
            prev = cur;
            cur = next;
        }
    }
    out
}

/// Weyl quantization `⟨φ_m|Op_h(a)|φ_n⟩` in the Hermite basis of width
/// `√h` centred at the origin, for a scalar symbol supported in the box
/// `t ∈ tr`, `τ ∈ fr`. Uses the kernel
/// `K(x, y) = (2πh)⁻¹ ∫ a((x+y)/2, τ) e^{i(x−y)τ/h} dτ` by trapezoidal sums.
pub fn weyl_matrix_compact(a: &(dyn Fn(f64, f64) -> f64 + Sync), tr: (f64, f64), fr: (f64, f64), h: f64, modes: usize) -> CMat {
    let reach = h.sqrt() * (((2 * modes + 1) as f64).sqrt() + 8.0);
    let fmax = fr.0.abs().max(fr.1.abs());
    let kmax = ((2 * modes + 1) as f64).sqrt() / h.sqrt() + fmax / h + 10.0 / h.sqrt();
    let dx = PI / (1.5 * kmax);
    let npts = (2.0 * reach / dx).ceil() as usize + 1;
    let xs: Vec<f64> = (0..npts).map(|i| -reach + i as f64 * dx).collect();
    let phi = hermite_functions(&xs, h, modes);

    let vmax = 2.0 * reach;
    let ds = PI / (2.0 * vmax / h);
    let ns = ((fr.1 - fr.0) / ds).ceil() as usize + 1;
    let ds = (fr.1 - fr.0) / (ns - 1) as f64;
    let sig: Vec<f64> = (0..ns).map(|k| fr.0 + k as f64 * ds).collect();

    // Samples a(u, σ_k) on the midpoint half-grid u = (x_i + x_j)/2.
    let table: Vec<Option<Vec<f64>>> = (0..2 * npts - 1)
        .into_par_iter()
        .map(|ij| {
            let u = -reach + 0.5 * ij as f64 * dx;
            if u < tr.0 || u > tr.1 {
                return None;
            }
            let row: Vec<f64> = sig.iter().map(|&s| a(u, s)).collect();
            row.iter().any(|&x| x != 0.0).then_some(row)
        })
        .collect();

    let rows: Vec<Vec<(usize, C64)>> = (0..npts)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            for j in 0..npts {
                let Some(samples) = &table[i + j] else { continue };
                let v = xs[i] - xs[j];
                let step = cis(v * ds / h);
                let mut e = cis(v * fr.0 / h);
                let mut acc = ZERO;
                for &w in samples {
                    acc += e * w;
                    e *= step;
                }
                row.push((j, acc * (ds / (2.0 * PI * h)) * (dx * dx)));
            }
            row
        })
        .collect();

    // Φᵀ K Φ with sparse rows.
    let mut kphi = CMat::zeros(npts, modes);
    for (i, row) in rows.iter().enumerate() {
        for &(j, kij) in row {
            for n in 0..modes {
                kphi[(i, n)] += kij * phi[(j, n)];
            }
        }
    }
    let phic = phi.map(|x| c(x, 0.0));
    let mut out = phic.transpose() * kphi;
    symmetrize(&mut out);
    out
}

/// Hermite-basis quantization of the one-crossing symbol about its kept
/// crossing: the periodic part through exact displacement operators, each
/// bump through [`weyl_matrix_compact`].
pub fn quantize_one_crossing(sym: &OneCrossingSymbol, h: f64, modes: usize) -> CMat {
    let center = sym.kept_point();
    let mut out = sym.base.dilated_operator(center, h, modes);
    let reach = h.sqrt() * (((2 * modes + 1) as f64).sqrt() + 8.0) + sym.params.d1;
    let d0 = sym.params.d0;
    let d1 = sym.params.d1;
    for (p, v3) in sym.bumps_near(center, reach) {
        let rel = [p[0] - center[0], p[1] - center[1]];
        let bump = move |t: f64, s: f64| d0 / 8.0 * smooth_cutoff((t - rel[0]).hypot(s - rel[1]) / d1);
        let b = weyl_matrix_compact(&bump, (rel[0] - d1, rel[0] + d1), (rel[1] - d1, rel[1] + d1), h, modes);
        out += kron(&b, &crate::linalg::from_matrix2(&sigma_dot(v3)));
    }
    symmetrize(&mut out);
    out
}

/// Eigenvalues in `window` whose eigenvectors keep at most `threshold` of
/// their weight on the top eighth of the Hermite modes.
pub fn hermite_filtered_spectrum(op: &CMat, orbitals: usize, window: (f64, f64), threshold: f64) -> (SpectrumSet, usize) {
    let (vals, vecs) = herm_eig(op);
    let modes = op.nrows() / orbitals;
    let start = (modes - modes / 8) * orbitals;
    let mut kept = Vec::new();
    let mut removed = 0;
    for (k, &v) in vals.iter().enumerate() {
        if v <= window.0 || v >= window.1 {
            continue;
        }
        let col: DVector<C64> = vecs.column(k).into_owned();
        let tail: f64 = col.rows(start, col.len() - start).norm_squared();
        if tail <= threshold {
            kept.push(v);
        } else {
            removed += 1;
        }
    }
    (SpectrumSet::new(kept, window), removed)
}

/// Result of the one-crossing decoupling comparison.
#[derive(Clone, Debug)]
pub struct DecouplingReport {
    pub periodic: SpectrumSet,
    pub one_crossing: SpectrumSet,
    pub removed_edge_states: usize,
    pub distance: f64,
}

/// Periodic spectrum at `h = 2π/q` (reduced 1D route) vs the Hermite
/// quantization of the one-crossing symbol, both in `(−w√h, w√h)`.
pub fn decoupling_check(
    sym: &OneCrossingSymbol,
    q: i64,
    grid: [usize; 2],
    modes: usize,
    width: f64,
) -> Result<DecouplingReport> {
    let flux = FluxRational::new(1, q)?;
    let h = flux.b();
    let window = (-width * h.sqrt(), width * h.sqrt());
    let periodic = spectrum_1d(&Quantization1d::from_flux(sym.base.clone(), flux), grid, window);
    let op = quantize_one_crossing(sym, h, modes);
    let (one_crossing, removed_edge_states) = hermite_filtered_spectrum(&op, sym.base.orbitals(), window, 1e-6);
    let distance = hausdorff(&periodic, &one_crossing);
    Ok(DecouplingReport {
        periodic,
        one_crossing,
        removed_edge_states,
        distance,
    })
}
