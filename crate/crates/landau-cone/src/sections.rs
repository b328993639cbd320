//! Gap opening in a neighbourhood of the crossing and global smooth sections
//! of rank ≥ 2 projector fields on the torus.
//!
//! Fields live on an `n × n` grid `θ = origin + 2π(i, j)/n` with the seam
//! identified by storage: node `(n, j)` *is* node `(0, j)`, so periodicity
//! of anything stored here is exact.

use std::f64::consts::PI;
use std::io::{Read, Write};

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{torus_distance, wrap_torus};
use crate::error::{Error, Result};
use crate::linalg::{c, cis, herm_eig, lowdin, CMat, CVec, C64, I, ONE, ZERO};
use crate::local_model::{shift_pauli, DiracLinearization, Pauli, TwoBandSymbol};
use crate::semiclassical::smooth_cutoff;

// ---------------------------------------------------------------------------
// Gap opening

/// Parameters of the mass insertion `(δ/8) g(c(θ − θ₀)/δ) v⁽³⁾·σ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapParams {
    pub delta: f64,
    /// `c`: the bump is supported in `|θ − θ₀| ≤ δ/c`.
    pub c_lower: f64,
    /// Radius of Σ_I, where the gap bound is measured.
    pub sigma_radius: f64,
}

impl GapParams {
    /// Default strength: `δ = c·r/8`, one eighth of the linear-cone scale over Σ_I.
    pub fn from_cone(c_lower: f64, sigma_radius: f64) -> Self {
        Self {
            delta: c_lower * sigma_radius / 8.0,
            c_lower,
            sigma_radius,
        }
    }
}

/// A symbol with a gap opened at one crossing.
#[derive(Clone, Debug)]
pub struct GappedSymbol {
    pub symbol: TwoBandSymbol,
    pub theta0: [f64; 2],
    pub params: GapParams,
    /// `min 2|F_δ|` over grid nodes of Σ_I.
    pub min_gap: f64,
    /// `C` with `2|F_δ| ≥ δ/C` on those nodes.
    pub c_measured: f64,
    pub nodes_checked: usize,
}

impl GappedSymbol {
    pub fn support_radius(&self) -> f64 {
        self.params.delta / self.params.c_lower
    }
}

/// Insert the mass term at `theta0`, periodized on the torus.
///
/// Outside the bump support the returned symbol evaluates the input symbol
/// and nothing else, so it is bitwise unchanged there.
pub fn open_gap(
    s: &TwoBandSymbol,
    theta0: [f64; 2],
    lin: &DiracLinearization,
    gp: &GapParams,
    grid: usize,
) -> Result<GappedSymbol> {
    if !(gp.delta > 0.0 && gp.c_lower > 0.0 && gp.sigma_radius > 0.0) || grid == 0 {
        return Err(Error::InvalidInput("open_gap needs delta, c, sigma radius > 0".into()));
    }
    let base = s.clone();
    let (delta, cl, v3) = (gp.delta, gp.c_lower, lin.v3);
    let symbol = TwoBandSymbol::from_fn(move |t| {
        let d = wrap_torus([t[0] - theta0[0], t[1] - theta0[1]]);
        let g = smooth_cutoff(cl * d[0].hypot(d[1]) / delta);
        let p = base.pauli(t);
        if g == 0.0 {
            p
        } else {
            shift_pauli(p, v3, delta / 8.0 * g)
        }
    });
    let mut min_gap = f64::INFINITY;
    let mut count = 0;
    for i in 0..grid {
        for j in 0..grid {
            let t = [2.0 * PI * i as f64 / grid as f64, 2.0 * PI * j as f64 / grid as f64];
            if torus_distance(t, theta0) > gp.sigma_radius {
                continue;
            }
            count += 1;
            min_gap = min_gap.min(2.0 * symbol.pauli(t).norm_f());
        }
    }
    if count == 0 {
        return Err(Error::InvalidInput("no grid node inside Sigma_I".into()));
    }
    if min_gap < delta / 64.0 {
        return Err(Error::GapOpeningFailed { min_gap });
    }
    Ok(GappedSymbol {
        symbol,
        theta0,
        params: *gp,
        min_gap,
        c_measured: delta / min_gap,
        nodes_checked: count,
    })
}

// ---------------------------------------------------------------------------
// Grid fields

fn check_grid(n: usize) -> Result<()> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidInput(format!("grid size {n} must be even and >= 4")));
    }
    Ok(())
}

#[inline]
fn wrap(i: i64, n: usize) -> usize {
    i.rem_euclid(n as i64) as usize
}

/// Projector-valued field on the torus grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorField {
    pub n: usize,
    pub origin: [f64; 2],
    pub dim: usize,
    pub rank: usize,
    pub data: Vec<CMat>,
}

impl ProjectorField {
    pub fn from_fn(n: usize, origin: [f64; 2], f: impl Fn([f64; 2]) -> CMat + Sync) -> Result<Self> {
        check_grid(n)?;
        let data: Vec<CMat> = (0..n * n)
            .into_par_iter()
            .map(|k| f(node_theta(n, origin, k / n, k % n)))
            .collect();
        let dim = data[0].nrows();
        let rank = data[0].trace().re.round() as usize;
        Ok(Self { n, origin, dim, rank, data })
    }

    pub fn theta(&self, i: usize, j: usize) -> [f64; 2] {
        node_theta(self.n, self.origin, i, j)
    }

    pub fn at(&self, i: i64, j: i64) -> &CMat {
        &self.data[wrap(i, self.n) * self.n + wrap(j, self.n)]
    }

    /// `max ‖P² − P‖ + ‖P − P†‖` over nodes.
    pub fn projector_defect(&self) -> f64 {
        self.data
            .iter()
            .map(|p| (p * p - p).norm() + (p - p.adjoint()).norm())
            .fold(0.0, f64::max)
    }

    pub fn write_to(&self, w: impl Write) -> Result<()> {
        let header = FieldHeader {
            kind: "projector".into(),
            n: self.n,
            origin: self.origin,
            dim: self.dim,
            rank: self.rank,
        };
        write_field(w, &header, self.data.iter().flat_map(|m| m.iter().copied()))
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let (h, vals) = read_field(r, "projector")?;
        let per = h.dim * h.dim;
        if vals.len() != h.n * h.n * per {
            return Err(Error::InvalidInput("projector payload size mismatch".into()));
        }
        let data = vals
            .chunks(per)
            .map(|ch| CMat::from_column_slice(h.dim, h.dim, ch))
            .collect();
        Ok(Self {
            n: h.n,
            origin: h.origin,
            dim: h.dim,
            rank: h.rank,
            data,
        })
    }
}

fn node_theta(n: usize, origin: [f64; 2], i: usize, j: usize) -> [f64; 2] {
    let s = 2.0 * PI / n as f64;
    [origin[0] + s * i as f64, origin[1] + s * j as f64]
}

/// Vector-valued field (a section candidate) on the torus grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionField {
    pub n: usize,
    pub origin: [f64; 2],
    pub dim: usize,
    pub data: Vec<CVec>,
}

impl SectionField {
    pub fn at(&self, i: i64, j: i64) -> &CVec {
        &self.data[wrap(i, self.n) * self.n + wrap(j, self.n)]
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// `max |‖ψ‖ − 1|`.
    pub fn norm_defect(&self) -> f64 {
        self.data.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `max ‖Pψ − ψ‖`.
    pub fn membership_defect(&self, p: &ProjectorField) -> f64 {
        self.data
            .iter()
            .zip(&p.data)
            .map(|(v, pm)| (pm * v - v).norm())
            .fold(0.0, f64::max)
    }

    /// Largest difference between the value read across the seam
    /// (`i = n`, `j = n`) and the value at `0`.
    pub fn seam_defect(&self) -> f64 {
        let n = self.n as i64;
        let mut worst = 0.0f64;
        for k in 0..n {
            worst = worst.max((self.at(n, k) - self.at(0, k)).norm());
            worst = worst.max((self.at(k, n) - self.at(k, 0)).norm());
        }
        worst
    }

    /// `max ‖ψ(a) − ψ(b)‖ / spacing` over nearest-neighbour pairs, seam included.
    pub fn increment_constant(&self) -> f64 {
        let n = self.n as i64;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let v = self.at(i, j);
                worst = worst.max((self.at(i + 1, j) - v).norm());
                worst = worst.max((self.at(i, j + 1) - v).norm());
            }
        }
        worst / self.spacing()
    }

    /// Discrete second-difference norm `max ‖Δψ‖ / spacing²`.
    pub fn curvature(&self) -> f64 {
        let n = self.n as i64;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let v = self.at(i, j) * c(2.0, 0.0);
                worst = worst.max((self.at(i + 1, j) + self.at(i - 1, j) - &v).norm());
                worst = worst.max((self.at(i, j + 1) + self.at(i, j - 1) - &v).norm());
            }
        }
        worst / (self.spacing() * self.spacing())
    }

    /// Largest deviation from column 0 of the local frame on nodes within `radius` rings.
    pub fn local_frame_defect(&self, local: &LocalFrame, radius: usize) -> f64 {
        let mut worst = 0.0f64;
        for (k, f) in local.frames.iter().enumerate() {
            if let Some(u) = f {
                if ring_of(self.n, local.center, k) <= radius {
                    worst = worst.max((self.data[k].clone() - u.column(0)).norm());
                }
            }
        }
        worst
    }

    pub fn write_to(&self, w: impl Write) -> Result<()> {
        let header = FieldHeader {
            kind: "section".into(),
            n: self.n,
            origin: self.origin,
            dim: self.dim,
            rank: 1,
        };
        write_field(w, &header, self.data.iter().flat_map(|v| v.iter().copied()))
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let (h, vals) = read_field(r, "section")?;
        if vals.len() != h.n * h.n * h.dim {
            return Err(Error::InvalidInput("section payload size mismatch".into()));
        }
        let data = vals.chunks(h.dim).map(CVec::from_column_slice).collect();
        Ok(Self {
            n: h.n,
            origin: h.origin,
            dim: h.dim,
            data,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct FieldHeader {
    kind: String,
    n: usize,
    origin: [f64; 2],
    dim: usize,
    rank: usize,
}

const MAGIC: &[u8; 8] = b"LCFIELD1";

/// `MAGIC | u32 header length | JSON header | (re, im) f64 little-endian`.
fn write_field(mut w: impl Write, h: &FieldHeader, vals: impl Iterator<Item = C64>) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidInput(format!("write failed: {e}"));
    let json = serde_json::to_vec(h).map_err(|e| Error::InvalidInput(e.to_string()))?;
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&(json.len() as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&json).map_err(io)?;
    for z in vals {
        w.write_all(&z.re.to_le_bytes()).map_err(io)?;
        w.write_all(&z.im.to_le_bytes()).map_err(io)?;
    }
    Ok(())
}

fn read_field(mut r: impl Read, kind: &str) -> Result<(FieldHeader, Vec<C64>)> {
    let io = |e: std::io::Error| Error::InvalidInput(format!("read failed: {e}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(Error::InvalidInput("not a field file".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len).map_err(io)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json).map_err(io)?;
    let h: FieldHeader = serde_json::from_slice(&json).map_err(|e| Error::InvalidInput(e.to_string()))?;
    if h.kind != kind {
        return Err(Error::InvalidInput(format!("expected a {kind} field, found {}", h.kind)));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io)?;
    if bytes.len() % 16 != 0 {
        return Err(Error::InvalidInput("truncated payload".into()));
    }
    let vals = bytes
        .chunks_exact(16)
        .map(|b| {
            let re = f64::from_le_bytes(b[..8].try_into().unwrap());
            let im = f64::from_le_bytes(b[8..].try_into().unwrap());
            c(re, im)
        })
        .collect();
    Ok((h, vals))
}

// ---------------------------------------------------------------------------
// Splitting, transport, loop straightening

/// Spectral projectors `π_± = (𝟙 ± F̂·σ)/2` of a gapped 2×2 symbol.
pub fn split_projectors(
    s: &TwoBandSymbol,
    n: usize,
    origin: [f64; 2],
    gap_tol: f64,
) -> Result<(ProjectorField, ProjectorField)> {
    check_grid(n)?;
    for k in 0..n * n {
        let gap = 2.0 * s.pauli(node_theta(n, origin, k / n, k % n)).norm_f();
        if gap < gap_tol {
            return Err(Error::SplitFailed { node: k, gap });
        }
    }
    let proj = |sign: f64| {
        ProjectorField::from_fn(n, origin, |t| {
            let p = s.pauli(t);
            let r = p.norm_f();
            let f = p.f.map(|x| sign * x / r);
            let m = (Matrix2::identity() + crate::linalg::sigma_dot(f)) * c(0.5, 0.0);
            crate::linalg::from_matrix2(&m)
        })
    };
    Ok((proj(-1.0)?, proj(1.0)?))
}

/// Discrete parallel transport `V_{k+1} = Löwdin(P_{k+1} V_k)` along a path.
pub fn parallel_transport_frame(path: &[CMat], seed: &CMat) -> Result<Vec<CMat>> {
    let mut out = Vec::with_capacity(path.len());
    let Some(p0) = path.first() else {
        return Ok(out);
    };
    let (v0, s0) = lowdin(&(p0 * seed));
    if s0 < 1e-8 {
        return Err(Error::TransportFailed { sigma: s0 });
    }
    out.push(v0);
    for p in &path[1..] {
        let (v, smin) = lowdin(&(p * out.last().unwrap()));
        if smin < 1e-8 {
            return Err(Error::TransportFailed { sigma: smin });
        }
        out.push(v);
    }
    Ok(out)
}

/// Spectral data of a unitary: eigenvectors and principal arguments.
struct UnitaryLog {
    vecs: CMat,
    args: Vec<f64>,
    near_minus_one: bool,
}

impl UnitaryLog {
    fn new(w: &CMat) -> Self {
        let (q, t) = w.clone().schur().unpack();
        let mut near = false;
        let args = (0..w.nrows())
            .map(|k| {
                let z = t[(k, k)];
                if (z + ONE).norm() < 1e-8 {
                    near = true;
                    // Deterministic branch: rotate off −1, take the principal
                    // argument, rotate back.
                    (z * cis(PI / 16.0)).arg() - PI / 16.0
                } else {
                    z.arg()
                }
            })
            .collect();
        Self {
            vecs: q,
            args,
            near_minus_one: near,
        }
    }

    /// `exp(t · log W)`.
    fn power(&self, t: f64) -> CMat {
        let mut d = self.vecs.clone();
        for (j, a) in self.args.iter().enumerate() {
            let z = cis(t * a);
            for i in 0..d.nrows() {
                d[(i, j)] *= z;
            }
        }
        d * self.vecs.adjoint()
    }
}

/// Close a transported frame loop: `V'(t) = V(t)·exp(t·log W)`, `W = V(end)†V(start)`.
///
/// `frames[last]` must lie over the same fiber as `frames[0]`; on return it
/// equals `frames[0]` exactly. Returns a warning when `W` has an eigenvalue
/// at −1 and the deterministic branch was taken.
pub fn straighten_loop_unitary(frames: &[CMat]) -> Result<(Vec<CMat>, Option<String>)> {
    let m = frames.len();
    if m < 2 {
        return Err(Error::InvalidInput("a loop needs at least two frames".into()));
    }
    let w = frames[m - 1].adjoint() * &frames[0];
    let lg = UnitaryLog::new(&w);
    let mut out: Vec<CMat> = frames
        .iter()
        .enumerate()
        .map(|(k, v)| v * lg.power(k as f64 / (m - 1) as f64))
        .collect();
    out[m - 1] = frames[0].clone();
    let warn = lg
        .near_minus_one
        .then(|| "loop holonomy has an eigenvalue at -1; branch fixed by pi/16 pre-rotation".to_string());
    Ok((out, warn))
}

// ---------------------------------------------------------------------------
// Sphere-loop contraction

/// A homotopy from a loop in `S^{2d−1} ⊂ ℂ^d` to the constant `e₁`.
#[derive(Clone, Debug)]
pub struct SphereHomotopy {
    /// `values[l][m] = F(φ_m, l/steps)`.
    pub values: Vec<Vec<CVec>>,
    /// The point `N` the loop was pushed to before rotation to the pole.
    pub target: CVec,
    /// Distance from the loop to the missed point `−N`.
    pub missed_distance: f64,
    /// `max ‖F(·, 0) − loop‖` introduced by the mollifier.
    pub mollify_defect: f64,
}

fn primes(count: usize) -> Vec<u64> {
    let mut ps = Vec::with_capacity(count);
    let mut k = 2u64;
    while ps.len() < count {
        if ps.iter().all(|p| k % p != 0) {
            ps.push(k);
        }
        k += 1;
    }
    ps
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Halton points pushed to the unit sphere of `ℂ^d` by Box–Muller.
pub fn sphere_samples(d: usize, count: usize) -> Vec<CVec> {
    let ps = primes(2 * d);
    (1..=count as u64)
        .map(|i| {
            let mut z = CVec::zeros(d);
            for k in 0..d {
                let u1 = radical_inverse(i, ps[2 * k]).max(1e-300);
                let u2 = radical_inverse(i, ps[2 * k + 1]);
                let r = (-2.0 * u1.ln()).sqrt();
                z[k] = c(r * (2.0 * PI * u2).cos(), r * (2.0 * PI * u2).sin());
            }
            let nz = z.norm();
            z / c(nz, 0.0)
        })
        .collect()
}

/// Periodic Gaussian smoothing of a loop (σ in samples, truncated at 4σ), renormalized.
fn mollify_loop(lp: &[CVec], sigma: f64) -> Vec<CVec> {
    if sigma <= 0.0 {
        return lp.to_vec();
    }
    let m = lp.len() as i64;
    let reach = (4.0 * sigma).ceil() as i64;
    let w: Vec<f64> = (-reach..=reach)
        .map(|k| (-(k as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    (0..m)
        .map(|i| {
            let mut acc = CVec::zeros(lp[0].len());
            for (o, wk) in (-reach..=reach).zip(&w) {
                acc += &lp[wrap(i + o, m as usize)] * c(wk / total, 0.0);
            }
            let nz = acc.norm();
            acc / c(nz, 0.0)
        })
        .collect()
}

/// Contract a closed loop (`lp[0]` follows `lp[last]`) to `e₁`.
///
/// Mollify, find a sphere point `−N` the loop misses among `samples`
/// quasi-random draws, slide along the normalized segment to `N`
/// (first half of `s`), then rotate `N` to the pole (second half).
pub fn contract_sphere_loop(lp: &[CVec], steps: usize, samples: usize, sigma: f64) -> Result<SphereHomotopy> {
    if lp.is_empty() || steps < 2 {
        return Err(Error::InvalidInput("empty loop or fewer than two homotopy steps".into()));
    }
    let d = lp[0].len();
    let smooth = mollify_loop(lp, sigma);
    let mollify_defect = smooth.iter().zip(lp).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let m = smooth.len();
    // Distance to the closed polygon through the samples: the interpolated
    // loop stays on rays through these chords.
    let seg_dist = |p: &CVec| {
        (0..m)
            .map(|k| {
                let a = &smooth[k];
                let ba = &smooth[(k + 1) % m] - a;
                let pa = p - a;
                let l2 = ba.norm_squared();
                let t = if l2 > 0.0 { (ba.dotc(&pa).re / l2).clamp(0.0, 1.0) } else { 0.0 };
                (pa - ba * c(t, 0.0)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let mut best: Option<(f64, CVec)> = None;
    for p in sphere_samples(d, samples) {
        let dist = seg_dist(&p);
        if best.as_ref().map_or(true, |(b, _)| dist > *b) {
            best = Some((dist, p));
        }
    }
    let Some((missed_distance, p)) = best else {
        return Err(Error::ContractionFailed { samples });
    };
    if missed_distance <= 1e-6 {
        return Err(Error::ContractionFailed { samples });
    }
    let target = -p;
    // N = e^{iα}(cos β e₁ + sin β f), f ⊥ e₁.
    let alpha = target[0].arg();
    let beta = target[0].norm().min(1.0).acos();
    let mut f = target.clone() * cis(-alpha);
    f[0] = ZERO;
    let fnorm = f.norm();
    if fnorm > 1e-14 {
        f /= c(fnorm, 0.0);
    }
    let mut e1 = CVec::zeros(d);
    e1[0] = ONE;
    let half = steps / 2;
    let values = (0..=steps)
        .map(|l| {
            if l <= half {
                let s = l as f64 / half as f64;
                smooth
                    .iter()
                    .map(|w| {
                        let v = w * c(1.0 - s, 0.0) + &target * c(s, 0.0);
                        let nv = v.norm();
                        v / c(nv, 0.0)
                    })
                    .collect()
            } else {
                let s = (l - half) as f64 / (steps - half) as f64;
                let b = (1.0 - s) * beta;
                let v = (&e1 * c(b.cos(), 0.0) + &f * c(b.sin(), 0.0)) * cis((1.0 - s) * alpha);
                vec![v; m]
            }
        })
        .collect();
    Ok(SphereHomotopy {
        values,
        target,
        missed_distance,
        mollify_defect,
    })
}

// ---------------------------------------------------------------------------
// Global sections

/// Orthonormal frame of `Ran P` on a Chebyshev disk of grid rings around `center`.
#[derive(Clone, Debug)]
pub struct LocalFrame {
    pub center: [usize; 2],
    /// Radius of B in rings.
    pub radius: usize,
    /// The frame is available on rings `≤ reach`.
    pub reach: usize,
    /// One entry per grid node; `Some` within `reach`.
    pub frames: Vec<Option<CMat>>,
}

impl LocalFrame {
    pub fn from_fn(
        n: usize,
        origin: [f64; 2],
        center: [usize; 2],
        radius: usize,
        reach: usize,
        f: impl Fn([f64; 2]) -> CMat,
    ) -> Self {
        let frames = (0..n * n)
            .map(|k| (ring_of(n, center, k) <= reach).then(|| f(node_theta(n, origin, k / n, k % n))))
            .collect();
        Self {
            center,
            radius,
            reach,
            frames,
        }
    }
}

/// Offset of node `k` from `center` in `[−n/2, n/2)²`.
fn offset_of(n: usize, center: [usize; 2], k: usize) -> [i64; 2] {
    let h = (n / 2) as i64;
    let d = |a: usize, b: usize| (a as i64 - b as i64 + h).rem_euclid(n as i64) - h;
    [d(k / n, center[0]), d(k % n, center[1])]
}

fn ring_of(n: usize, center: [usize; 2], k: usize) -> usize {
    let o = offset_of(n, center, k);
    o[0].unsigned_abs().max(o[1].unsigned_abs()) as usize
}

fn node_at(n: usize, center: [usize; 2], o: [i64; 2]) -> usize {
    wrap(center[0] as i64 + o[0], n) * n + wrap(center[1] as i64 + o[1], n)
}

/// Knobs of [`build_global_section`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionOptions {
    /// Width `2ε` of the convex blend annulus, in rings (ε = 2 spacings).
    pub blend_rings: usize,
    /// Rings over which the boundary loop is contracted.
    pub homotopy_rings: usize,
    /// Loop mollifier width, in loop samples.
    pub mollify_sigma: f64,
    pub sphere_samples: usize,
}

impl Default for SectionOptions {
    fn default() -> Self {
        Self {
            blend_rings: 4,
            homotopy_rings: 8,
            mollify_sigma: 0.5,
            sphere_samples: 64,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GlobalSection {
    pub section: SectionField,
    pub warnings: Vec<String>,
    pub min_blend_denominator: f64,
    pub missed_distance: f64,
    pub mollify_defect: f64,
}

/// A unit section of a rank ≥ 2 projector field, equal to the first local
/// frame vector on B.
///
/// The outer frame is built on the seam (the two generating circles, each
/// transported and straightened) and carried inward ring by ring. On the
/// circle just outside the blend annulus, the coordinates of `u₁` in that
/// frame form a loop in `S^{2d−1}`, which is contracted to `e₁`; the
/// contraction is spread over the homotopy rings, so the section is the
/// first outer frame vector from there to the seam.
pub fn build_global_section(p: &ProjectorField, local: &LocalFrame, opts: &SectionOptions) -> Result<GlobalSection> {
    let n = p.n;
    check_grid(n)?;
    if p.rank < 2 {
        return Err(Error::RankTooSmall { rank: p.rank });
    }
    let d = p.rank;
    let half = n / 2;
    let k0 = local.radius + opts.blend_rings;
    let k1 = k0 + opts.homotopy_rings;
    if local.reach < k0 || local.frames.len() != n * n {
        return Err(Error::InvalidInput("local frame does not cover the blend annulus".into()));
    }
    if k1 >= half || opts.blend_rings == 0 {
        return Err(Error::InvalidInput("B, blend and homotopy rings do not fit in the grid".into()));
    }
    let mut warnings = Vec::new();
    let mut outer: Vec<Option<CMat>> = vec![None; n * n];
    let h = half as i64;

    // Seam: the circles i = c−n/2 and j = c−n/2 through the corner.
    let corner = node_at(n, local.center, [-h, -h]);
    let (_, ev) = herm_eig(&p.data[corner]);
    let seed = ev.columns(p.dim - d, d).into_owned();
    for axis in 0..2 {
        let nodes: Vec<usize> = (0..=n as i64)
            .map(|t| {
                let o = if axis == 0 { [-h, -h + t] } else { [-h + t, -h] };
                node_at(n, local.center, o)
            })
            .collect();
        let path: Vec<CMat> = nodes.iter().map(|&k| p.data[k].clone()).collect();
        let fr = parallel_transport_frame(&path, &seed)?;
        let (fr, w) = straighten_loop_unitary(&fr)?;
        warnings.extend(w);
        for (k, v) in nodes.iter().zip(fr) {
            if outer[*k].is_none() {
                outer[*k] = Some(v);
            }
        }
    }

    // Inward transport along discrete rays.
    let mut by_ring: Vec<Vec<usize>> = vec![Vec::new(); half + 1];
    for k in 0..n * n {
        by_ring[ring_of(n, local.center, k)].push(k);
    }
    for ring in (local.radius..half).rev() {
        let r = ring.max(1) as f64;
        for &k in &by_ring[ring] {
            let o = offset_of(n, local.center, k);
            let po = o.map(|x| (x as f64 * (r + 1.0) / r).round() as i64);
            let parent = node_at(n, local.center, po);
            let vp = outer[parent].as_ref().expect("parent ring is filled first");
            let (v, smin) = lowdin(&(&p.data[k] * vp));
            if smin < 1e-8 {
                return Err(Error::TransportFailed { sigma: smin });
            }
            outer[k] = Some(v);
        }
    }

    // The loop of u₁'s coordinates on ring k0, ordered by angle.
    let angle = |k: usize| {
        let o = offset_of(n, local.center, k);
        (o[1] as f64).atan2(o[0] as f64)
    };
    let mut ring0 = by_ring[k0].clone();
    ring0.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)));
    let phis: Vec<f64> = ring0.iter().map(|&k| angle(k)).collect();
    let lp: Vec<CVec> = ring0
        .iter()
        .map(|&k| {
            let u1 = local.frames[k].as_ref().unwrap().column(0).into_owned();
            let w = outer[k].as_ref().unwrap().adjoint() * u1;
            let nw = w.norm();
            w / c(nw, 0.0)
        })
        .collect();
    let hom = contract_sphere_loop(&lp, opts.homotopy_rings, opts.sphere_samples, opts.mollify_sigma)?;

    // F(φ, s_l) by periodic linear interpolation in φ.
    let coeffs = |l: usize, phi: f64| -> CVec {
        let vals = &hom.values[l];
        let m = phis.len();
        let pos = phis.partition_point(|&a| a <= phi);
        let (a, b) = ((pos + m - 1) % m, pos % m);
        let (pa, mut pb) = (phis[a], phis[b]);
        let mut x = phi;
        if pb <= pa {
            pb += 2.0 * PI;
            if x < pa {
                x += 2.0 * PI;
            }
        }
        let t = if pb > pa { (x - pa) / (pb - pa) } else { 0.0 };
        let v = &vals[a] * c(1.0 - t, 0.0) + &vals[b] * c(t, 0.0);
        let nv = v.norm();
        v / c(nv, 0.0)
    };

    let mut min_den = f64::INFINITY;
    let mut data = vec![CVec::zeros(p.dim); n * n];
    for (k, slot) in data.iter_mut().enumerate() {
        let ring = ring_of(n, local.center, k);
        if ring <= local.radius {
            *slot = local.frames[k].as_ref().unwrap().column(0).into_owned();
            continue;
        }
        let v = outer[k].as_ref().unwrap();
        if ring >= k1 {
            *slot = v.column(0).into_owned();
            continue;
        }
        let l = ring.saturating_sub(k0);
        let psi_h = v * coeffs(l, angle(k));
        if ring >= k0 {
            *slot = psi_h;
            continue;
        }
        let lam = (ring - local.radius) as f64 / opts.blend_rings as f64;
        let u1 = local.frames[k].as_ref().unwrap().column(0).into_owned();
        let mix = &p.data[k] * (u1 * c(1.0 - lam, 0.0) + psi_h * c(lam, 0.0));
        let den = mix.norm();
        min_den = min_den.min(den);
        if den < 1e-6 {
            return Err(Error::BlendFailed { denominator: den });
        }
        *slot = mix / c(den, 0.0);
    }
    Ok(GlobalSection {
        section: SectionField {
            n,
            origin: p.origin,
            dim: p.dim,
            data,
        },
        warnings,
        min_blend_denominator: min_den,
        missed_distance: hom.missed_distance,
        mollify_defect: hom.mollify_defect,
    })
}

/// Mollify a continuous section outside `B`, keeping it unchanged on `K ⊂ B`.
///
/// Periodized Gaussian of width `sigma` (in spacings) truncated at 4σ,
/// projected back into `Ran P` and renormalized; a smooth radial cutoff
/// blends the two between the rings `k_radius` and `b_radius`.
pub fn smooth_section(
    psi: &SectionField,
    p: &ProjectorField,
    center: [usize; 2],
    k_radius: usize,
    b_radius: usize,
    sigma: f64,
) -> Result<SectionField> {
    let n = psi.n;
    if b_radius <= k_radius || sigma <= 0.0 {
        return Err(Error::InvalidInput("smooth_section needs k < b and sigma > 0".into()));
    }
    let reach = (4.0 * sigma).ceil() as i64;
    let mut weights = Vec::new();
    for a in -reach..=reach {
        for b in -reach..=reach {
            weights.push((a, b, (-((a * a + b * b) as f64) / (2.0 * sigma * sigma)).exp()));
        }
    }
    let total: f64 = weights.iter().map(|w| w.2).sum();
    let smoothed: Vec<Result<CVec>> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = ((k / n) as i64, (k % n) as i64);
            let mut acc = CVec::zeros(psi.dim);
            for &(a, b, w) in &weights {
                acc += psi.at(i - a, j - b) * c(w / total, 0.0);
            }
            let pu = &p.data[k] * acc;
            let nu = pu.norm();
            if nu < 0.5 {
                return Err(Error::MollifierTooWide { node: k, norm: nu });
            }
            Ok(pu / c(nu, 0.0))
        })
        .collect();
    let mut data = Vec::with_capacity(n * n);
    for (k, sm) in smoothed.into_iter().enumerate() {
        let sm = sm?;
        let ring = ring_of(n, center, k) as f64;
        let r = 0.5 + 0.5 * (ring - k_radius as f64) / (b_radius - k_radius) as f64;
        let f = if ring <= k_radius as f64 { 1.0 } else { smooth_cutoff(r) };
        if f == 1.0 {
            data.push(psi.data[k].clone());
            continue;
        }
        let mix = &p.data[k] * (&psi.data[k] * c(f, 0.0) + sm * c(1.0 - f, 0.0));
        let den = mix.norm();
        if den < 1e-6 {
            return Err(Error::BlendFailed { denominator: den });
        }
        data.push(mix / c(den, 0.0));
    }
    Ok(SectionField {
        n,
        origin: psi.origin,
        dim: psi.dim,
        data,
    })
}

// ---------------------------------------------------------------------------
// Quasi-band projector

/// Fourier coefficients `ψ(θ) = Σ_γ c(γ) e^{−i⟨γ,θ⟩}`, `γ ∈ [−n/2, n/2)²`.
#[derive(Clone, Debug)]
pub struct WannierCoefficients {
    pub n: usize,
    pub coeffs: Vec<CVec>,
}

impl WannierCoefficients {
    pub fn get(&self, g: [i64; 2]) -> &CVec {
        let h = (self.n / 2) as i64;
        &self.coeffs[((g[0] + h) * self.n as i64 + g[1] + h) as usize]
    }

    /// `max_γ ⟨γ⟩^p ‖c(γ)‖`, `⟨γ⟩ = (1 + |γ|²)^{1/2}`.
    pub fn decay_constant(&self, power: f64) -> f64 {
        let h = (self.n / 2) as i64;
        let mut worst = 0.0f64;
        for a in -h..h {
            for b in -h..h {
                let w = (1.0 + (a * a + b * b) as f64).powf(power / 2.0);
                worst = worst.max(w * self.get([a, b]).norm());
            }
        }
        worst
    }

    /// `Σ_γ ‖c(γ)‖²` (equals the mean of ‖ψ‖² by Parseval).
    pub fn total_weight(&self) -> f64 {
        self.coeffs.iter().map(|v| v.norm_squared()).sum()
    }
}

/// Inverse DFT of a section on its grid.
pub fn wannier_coefficients(psi: &SectionField) -> WannierCoefficients {
    let n = psi.n;
    let h = (n / 2) as i64;
    let s = 2.0 * PI / n as f64;
    let norm = 1.0 / (n * n) as f64;
    let coeffs = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let g = [(k / n) as i64 - h, (k % n) as i64 - h];
            let mut acc = CVec::zeros(psi.dim);
            for i in 0..n {
                for j in 0..n {
                    let th = [psi.origin[0] + s * i as f64, psi.origin[1] + s * j as f64];
                    let ph = g[0] as f64 * th[0] + g[1] as f64 * th[1];
                    acc += &psi.data[i * n + j] * cis(ph);
                }
            }
            acc * c(norm, 0.0)
        })
        .collect();
    WannierCoefficients { n, coeffs }
}

/// `P_{I,δ} = ψ₋ψ₋† + ψ₊ψ₊†` together with the Wannier data of both sections.
#[derive(Clone, Debug)]
pub struct QuasiBandProjector {
    pub projector: ProjectorField,
    pub wannier_minus: WannierCoefficients,
    pub wannier_plus: WannierCoefficients,
    /// `max |⟨ψ₋, ψ₊⟩|`.
    pub cross_overlap: f64,
}

pub fn build_quasi_band_projector(minus: &SectionField, plus: &SectionField) -> Result<QuasiBandProjector> {
    if minus.n != plus.n || minus.dim != plus.dim {
        return Err(Error::InvalidInput("section grids differ".into()));
    }
    let n = minus.n;
    let data: Vec<CMat> = minus
        .data
        .iter()
        .zip(&plus.data)
        .map(|(a, b)| a * a.adjoint() + b * b.adjoint())
        .collect();
    let cross_overlap = minus
        .data
        .iter()
        .zip(&plus.data)
        .map(|(a, b)| a.dotc(b).norm())
        .fold(0.0, f64::max);
    Ok(QuasiBandProjector {
        projector: ProjectorField {
            n,
            origin: minus.origin,
            dim: minus.dim,
            rank: 2,
            data,
        },
        wannier_minus: wannier_coefficients(minus),
        wannier_plus: wannier_coefficients(plus),
        cross_overlap,
    })
}

// ---------------------------------------------------------------------------
// Rank-2 test model

/// `H₄(θ) = U(θ)(E_low ⊕ k_gap(θ) ⊕ E_high)U(θ)†` with a smooth periodic
/// mixing unitary. Its negative and positive spectral projectors have rank 2
/// and contain the two branches of `k_gap`.
#[derive(Clone, Debug)]
pub struct SectionModel {
    pub k_gap: TwoBandSymbol,
    pub e_low: f64,
    pub e_high: f64,
    pub theta0: [f64; 2],
    mix_x: CMat,
    mix_y: CMat,
}

impl SectionModel {
    /// Honeycomb with `open_gap` applied at both valleys.
    pub fn honeycomb(gp: &GapParams) -> Result<Self> {
        let theta0 = [2.0 * PI / 3.0, -2.0 * PI / 3.0];
        let hc = TwoBandSymbol::honeycomb();
        let lin = crate::local_model::linearize_at_crossing(&hc, theta0, 1e-8)?;
        let lin_b = crate::local_model::linearize_at_crossing(&hc, [-theta0[0], -theta0[1]], 1e-8)?;
        let g1 = open_gap(&hc, theta0, &lin, gp, 64)?;
        let g2 = open_gap(&g1.symbol, [-theta0[0], -theta0[1]], &lin_b, gp, 64)?;
        Ok(Self::new(g2.symbol, theta0))
    }

    pub fn new(k_gap: TwoBandSymbol, theta0: [f64; 2]) -> Self {
        let mut x = CMat::zeros(4, 4);
        let mut y = CMat::zeros(4, 4);
        let set = |m: &mut CMat, i: usize, j: usize, z: C64| {
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        };
        set(&mut x, 0, 1, c(0.4, 0.0));
        set(&mut x, 2, 3, c(0.3, 0.0));
        set(&mut x, 0, 3, c(0.2, 0.0));
        set(&mut y, 1, 2, I * 0.35);
        set(&mut y, 0, 2, c(0.25, 0.0));
        Self {
            k_gap,
            e_low: -4.0,
            e_high: 4.0,
            theta0,
            mix_x: x,
            mix_y: y,
        }
    }

    pub fn unitary(&self, t: [f64; 2]) -> CMat {
        let a = &self.mix_x * c(t[0].cos(), 0.0) + &self.mix_y * c(t[1].sin(), 0.0);
        let (vals, vecs) = herm_eig(&a);
        let mut d = vecs.clone();
        for (j, l) in vals.iter().enumerate() {
            let z = cis(*l);
            for i in 0..4 {
                d[(i, j)] *= z;
            }
        }
        d * vecs.adjoint()
    }

    fn block(&self, t: [f64; 2]) -> CMat {
        let mut m = CMat::zeros(4, 4);
        m[(0, 0)] = c(self.e_low, 0.0);
        m[(3, 3)] = c(self.e_high, 0.0);
        let k = self.k_gap.matrix(t);
        for i in 0..2 {
            for j in 0..2 {
                m[(1 + i, 1 + j)] = k[(i, j)];
            }
        }
        m
    }

    pub fn hamiltonian(&self, t: [f64; 2]) -> CMat {
        let u = self.unitary(t);
        &u * self.block(t) * u.adjoint()
    }

    /// `(P_{(−∞,0]}, P_{(0,∞)})` of `H₄` on the grid.
    pub fn projectors(&self, n: usize, origin: [f64; 2], gap_tol: f64) -> Result<(ProjectorField, ProjectorField)> {
        check_grid(n)?;
        for k in 0..n * n {
            let p = self.k_gap.pauli(node_theta(n, origin, k / n, k % n));
            if 2.0 * p.norm_f() < gap_tol || p.eigenvalues().0 >= 0.0 || p.eigenvalues().1 <= 0.0 {
                return Err(Error::SplitFailed {
                    node: k,
                    gap: 2.0 * p.norm_f(),
                });
            }
        }
        let proj = |lower: bool| {
            ProjectorField::from_fn(n, origin, |t| {
                let (_, v) = herm_eig(&self.hamiltonian(t));
                let e = if lower { v.columns(0, 2) } else { v.columns(2, 2) };
                &e * e.adjoint()
            })
        };
        Ok((proj(true)?, proj(false)?))
    }

    /// Local frames `(U·φ₋, U e_low)` and `(U·φ₊, U e_high)` on rings `≤ reach`
    /// around the grid node nearest `θ₀`; `φ_±` are phase-locked to their
    /// values at that node.
    pub fn local_frames(&self, n: usize, origin: [f64; 2], radius: usize, reach: usize) -> (LocalFrame, LocalFrame) {
        let s = 2.0 * PI / n as f64;
        let idx = |x: f64, o: f64| wrap(((x - o) / s).round() as i64, n);
        let center = [idx(self.theta0[0], origin[0]), idx(self.theta0[1], origin[1])];
        let tc = node_theta(n, origin, center[0], center[1]);
        let branch = |t: [f64; 2], k: usize| -> CVec {
            let (_, v) = herm_eig(&crate::linalg::from_matrix2(&self.k_gap.matrix(t)));
            v.column(k).into_owned()
        };
        let make = |k: usize, extra: usize| {
            let r = branch(tc, k);
            LocalFrame::from_fn(n, origin, center, radius, reach, |t| {
                let mut phi = branch(t, k);
                let ov = r.dotc(&phi);
                phi *= ov.conj() / ov.norm();
                let mut b = CMat::zeros(4, 2);
                b[(1, 0)] = phi[0];
                b[(2, 0)] = phi[1];
                b[(extra, 1)] = ONE;
                self.unitary(t) * b
            })
        };
        (make(0, 0), make(1, 3))
    }
}

/// Uniform check used by the acceptance suite.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectionCheck {
    pub norm_defect: f64,
    pub membership_defect: f64,
    pub seam_defect: f64,
    pub increment_constant: f64,
    pub local_frame_defect: f64,
}

pub fn check_section(psi: &SectionField, p: &ProjectorField, local: &LocalFrame, radius: usize) -> SectionCheck {
    SectionCheck {
        norm_defect: psi.norm_defect(),
        membership_defect: psi.membership_defect(p),
        seam_defect: psi.seam_defect(),
        increment_constant: psi.increment_constant(),
        local_frame_defect: psi.local_frame_defect(local, radius),
    }
}

/// `Pauli` value of the mass insertion alone (used by tests and the CLI).
pub fn mass_term(theta: [f64; 2], theta0: [f64; 2], lin: &DiracLinearization, gp: &GapParams) -> Pauli {
    let d = wrap_torus([theta[0] - theta0[0], theta[1] - theta0[1]]);
    let g = smooth_cutoff(gp.c_lower * d[0].hypot(d[1]) / gp.delta);
    Pauli::new(0.0, lin.v3.map(|x| x * gp.delta / 8.0 * g))
}
