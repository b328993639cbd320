//! Feshbach–Schur reduction of a finite Hermitian matrix onto the range of a
//! projector, and the dressed effective Hamiltonian
//! `H̃ = Y^{−1/2}(ΠHΠ − ΠHΠ⊥R⊥(0)Π⊥HΠ)Y^{−1/2}`, `Y = Π + ΠHΠ⊥R⊥(0)²Π⊥HΠ`.
//!
//! Everything is computed in coordinates: with orthonormal bases `P` of
//! `Ran Π` and `Q` of `Ran Π⊥`, write `A = P†HP`, `B = P†HQ`, `D = Q†HQ`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, herm_eig, herm_eigvals, herm_fn, op_norm, symmetrize, CMat, C64};

/// `(H, Π, I)` with the complement compression invertible on `I`.
#[derive(Clone, Debug)]
pub struct AdmissibleTriple {
    h: CMat,
    /// Orthonormal basis of `Ran Π` (n × r).
    p: CMat,
    /// Orthonormal basis of `Ran Π⊥` (n × (n−r)).
    q: CMat,
    interval: (f64, f64),
    complement_spectrum: Vec<f64>,
    margin: f64,
    /// `D⁻¹` in the `Q` basis.
    d_inv: CMat,
}

fn range_bases(pi: &CMat, tol: f64) -> Result<(CMat, CMat)> {
    let d = pi - pi * pi;
    let herm = crate::linalg::hermitian_defect(pi);
    let idem = crate::linalg::max_abs(&d);
    if herm > tol || idem > tol {
        return Err(Error::InvalidInput(format!(
            "Π is not an orthogonal projector (hermitian defect {herm:.2e}, idempotency defect {idem:.2e})"
        )));
    }
    let mut s = pi.clone();
    symmetrize(&mut s);
    let (vals, vecs) = herm_eig(&s);
    let n = pi.nrows();
    let r = vals.iter().filter(|&&v| v > 0.5).count();
    let q = vecs.columns(0, n - r).into_owned();
    let p = vecs.columns(n - r, r).into_owned();
    Ok((p, q))
}

impl AdmissibleTriple {
    pub fn h(&self) -> &CMat {
        &self.h
    }
    pub fn rank(&self) -> usize {
        self.p.ncols()
    }
    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }
    /// Distance from the complement spectrum to `I`.
    pub fn margin(&self) -> f64 {
        self.margin
    }
    pub fn complement_spectrum(&self) -> &[f64] {
        &self.complement_spectrum
    }
    /// `Λ_I = min(Λ₋, Λ₊)` for `I = (−Λ₋, Λ₊)`.
    pub fn lambda_i(&self) -> f64 {
        (-self.interval.0).min(self.interval.1)
    }
    /// `Ran Π` basis used for the reduced matrices.
    pub fn basis(&self) -> &CMat {
        &self.p
    }
    pub fn projector(&self) -> CMat {
        &self.p * self.p.adjoint()
    }

    fn a(&self) -> CMat {
        self.p.adjoint() * &self.h * &self.p
    }
    fn b(&self) -> CMat {
        self.p.adjoint() * &self.h * &self.q
    }
    fn d(&self) -> CMat {
        self.q.adjoint() * &self.h * &self.q
    }

    /// `R⊥(e) = (Π⊥HΠ⊥ − e)⁻¹` on `Ran Π⊥`, embedded (zero on `Ran Π`).
    pub fn complement_resolvent(&self, e: f64) -> Result<CMat> {
        let r = self.reduced_resolvent(e)?;
        Ok(&self.q * r * self.q.adjoint())
    }

    fn reduced_resolvent(&self, e: f64) -> Result<CMat> {
        if e == 0.0 {
            return Ok(self.d_inv.clone());
        }
        let mut d = self.d();
        for i in 0..d.nrows() {
            d[(i, i)] -= c(e, 0.0);
        }
        symmetrize(&mut d);
        if self.complement_spectrum.iter().any(|&x| (x - e).abs() < 1e-300) {
            return Err(Error::DomainError { e });
        }
        Ok(herm_fn(&d, |x| 1.0 / x))
    }

    /// `‖HΠ‖`.
    pub fn coupling_norm(&self) -> f64 {
        op_norm(&(&self.h * &self.p))
    }
}

/// Certify `(H, Π, I)` as admissible and precompute `R⊥(0)`.
pub fn check_admissible(h: &CMat, pi: &CMat, interval: (f64, f64)) -> Result<AdmissibleTriple> {
    let n = h.nrows();
    if h.ncols() != n || pi.shape() != (n, n) {
        return Err(Error::InvalidInput("H and Π must be square of equal size".into()));
    }
    if !(interval.0 < 0.0 && interval.1 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "interval {interval:?} must contain 0 in its interior"
        )));
    }
    let hd = crate::linalg::hermitian_defect(h);
    if hd > 1e-10 * (1.0 + crate::linalg::max_abs(h)) {
        return Err(Error::InvalidInput(format!("H is not Hermitian (defect {hd:.2e})")));
    }
    let (p, q) = range_bases(pi, 1e-10)?;
    let mut hs = h.clone();
    symmetrize(&mut hs);
    let mut d = q.adjoint() * &hs * &q;
    symmetrize(&mut d);
    let spec = herm_eigvals(&d);
    let mut margin = f64::INFINITY;
    for &x in &spec {
        if x > interval.0 && x < interval.1 {
            return Err(Error::NotAdmissible { eigenvalue: x });
        }
        margin = margin.min((x - interval.0).abs().min((x - interval.1).abs()));
    }
    let d_inv = herm_fn(&d, |x| 1.0 / x);
    Ok(AdmissibleTriple {
        h: hs,
        p,
        q,
        interval,
        complement_spectrum: spec,
        margin,
        d_inv,
    })
}

/// `H̃` and `Y` in the `Ran Π` basis of the triple.
#[derive(Clone, Debug)]
pub struct Dressed {
    /// r × r reduced effective Hamiltonian.
    pub matrix: CMat,
    /// r × r `Y` matrix.
    pub y: CMat,
    /// Smallest eigenvalue of `Y` (≥ 1).
    pub y_min: f64,
    basis: CMat,
}

impl Dressed {
    /// `H̃` as an n × n matrix supported on `Ran Π`.
    pub fn embedded(&self) -> CMat {
        &self.basis * &self.matrix * self.basis.adjoint()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        herm_eigvals(&self.matrix)
    }
}

pub fn dressed_hamiltonian(t: &AdmissibleTriple) -> Dressed {
    let a = t.a();
    let b = t.b();
    let bd = &b * &t.d_inv;
    let mut y = &bd * bd.adjoint();
    for i in 0..y.nrows() {
        y[(i, i)] += c(1.0, 0.0);
    }
    symmetrize(&mut y);
    let y_min = herm_eigvals(&y).first().copied().unwrap_or(1.0);
    let y_is = herm_fn(&y, |x| 1.0 / x.sqrt());
    let core = a - &bd * b.adjoint();
    let mut m = &y_is * core * &y_is;
    symmetrize(&mut m);
    Dressed {
        matrix: m,
        y,
        y_min,
        basis: t.p.clone(),
    }
}

/// `S(e) = Π(H−e)Π − ΠHΠ⊥R⊥(e)Π⊥HΠ` in the `Ran Π` basis.
pub fn schur_complement(t: &AdmissibleTriple, e: f64) -> Result<CMat> {
    if !(e > t.interval.0 && e < t.interval.1) {
        return Err(Error::DomainError { e });
    }
    let a = t.a();
    let b = t.b();
    let r = t.reduced_resolvent(e)?;
    let mut s = a - &b * r * b.adjoint();
    for i in 0..s.nrows() {
        s[(i, i)] -= c(e, 0.0);
    }
    symmetrize(&mut s);
    Ok(s)
}

/// Outcome of the two-sided spectral comparison.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    /// `‖HΠ‖²(ℓ/Λ_I)²/d`.
    pub bound: f64,
    /// `sup_{e∈σ(H)∩I′} dist(e, σ(H̃))`.
    pub h_to_tilde: f64,
    /// `sup_{e∈σ(H̃)∩I′} dist(e, σ(H))`.
    pub tilde_to_h: f64,
    pub verified: bool,
    /// `max(observed)/bound`.
    pub worst_ratio: f64,
}

fn sup_dist(from: &[f64], to: &[f64], win: (f64, f64)) -> f64 {
    from.iter()
        .filter(|&&e| e >= win.0 && e <= win.1)
        .map(|&e| to.iter().map(|&x| (x - e).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Compare `σ(H)` and `σ(H̃)` inside `I′` against the a-priori bound; no error on violation.
pub fn compare_spectra(t: &AdmissibleTriple, iprime: (f64, f64)) -> Result<BoundReport> {
    let (lo, hi) = t.interval;
    if !(iprime.0 < 0.0 && iprime.1 > 0.0 && iprime.0 > lo && iprime.1 < hi) {
        return Err(Error::InvalidInput(format!(
            "I′ = {iprime:?} must contain 0 and lie inside I = {:?}",
            t.interval
        )));
    }
    let ell = (-iprime.0).max(iprime.1);
    let d = (iprime.0 - lo).min(hi - iprime.1);
    let hp = t.coupling_norm();
    let bound = hp * hp * (ell / t.lambda_i()).powi(2) / d;
    let sh = herm_eigvals(&t.h);
    let st = dressed_hamiltonian(t).eigenvalues();
    let a = sup_dist(&sh, &st, iprime);
    let b = sup_dist(&st, &sh, iprime);
    let worst = a.max(b);
    // Absolute slack for round-off in the eigensolvers.
    let slack = 1e-12 * (1.0 + crate::linalg::max_abs(&t.h));
    Ok(BoundReport {
        bound,
        h_to_tilde: a,
        tilde_to_h: b,
        verified: worst <= bound + slack,
        worst_ratio: if bound > 0.0 { worst / bound } else { 0.0 },
    })
}

/// Like [`compare_spectra`] but a violated bound is an error.
pub fn spectral_distance_bound(t: &AdmissibleTriple, iprime: (f64, f64)) -> Result<BoundReport> {
    let r = compare_spectra(t, iprime)?;
    if !r.verified {
        return Err(Error::BoundViolated {
            observed: r.h_to_tilde.max(r.tilde_to_h),
            bound: r.bound,
        });
    }
    Ok(r)
}

/// Parameters of a random admissible triple.
#[derive(Clone, Copy, Debug)]
pub struct RandomTripleSpec {
    pub dim: usize,
    pub rank: usize,
    /// `I = (−λ, λ)`.
    pub half_width: f64,
    /// Complement eigenvalues are drawn from `±[λ + gap, λ + gap + spread]`.
    pub gap: f64,
    pub spread: f64,
    /// Spectral norm of the `Π`-block.
    pub block_norm: f64,
    /// Spectral norm of the off-diagonal coupling.
    pub coupling: f64,
}

impl Default for RandomTripleSpec {
    fn default() -> Self {
        Self {
            dim: 60,
            rank: 4,
            half_width: 2.0,
            gap: 0.5,
            spread: 4.0,
            block_norm: 0.5,
            coupling: 1.0,
        }
    }
}

fn random_complex(rng: &mut impl Rng, r: usize, cols: usize) -> CMat {
    CMat::from_fn(r, cols, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_unitary(rng: &mut impl Rng, n: usize) -> CMat {
    random_complex(rng, n, n).qr().q()
}

/// Draw `(H, Π, I)` admissible by construction.
pub fn random_admissible(rng: &mut impl Rng, spec: &RandomTripleSpec) -> (CMat, CMat, (f64, f64)) {
    let n = spec.dim;
    let r = spec.rank;
    let m = n - r;
    let mut a = random_complex(rng, r, r);
    a = &a + a.adjoint();
    let an = op_norm(&a).max(1e-300);
    a *= c(spec.block_norm / an, 0.0);
    let w = random_unitary(rng, m);
    let lam = spec.half_width + spec.gap;
    let dvals: Vec<f64> = (0..m)
        .map(|_| {
            let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            s * (lam + spec.spread * rng.gen::<f64>())
        })
        .collect();
    let mut dd = CMat::zeros(m, m);
    for (i, v) in dvals.iter().enumerate() {
        dd[(i, i)] = c(*v, 0.0);
    }
    let d = &w * dd * w.adjoint();
    let mut b = random_complex(rng, r, m);
    let bn = op_norm(&b).max(1e-300);
    b *= c(spec.coupling / bn, 0.0);
    let mut blk = CMat::zeros(n, n);
    blk.view_mut((0, 0), (r, r)).copy_from(&a);
    blk.view_mut((0, r), (r, m)).copy_from(&b);
    blk.view_mut((r, 0), (m, r)).copy_from(&b.adjoint());
    blk.view_mut((r, r), (m, m)).copy_from(&d);
    let u = random_unitary(rng, n);
    let mut h = &u * blk * u.adjoint();
    symmetrize(&mut h);
    let pb = u.columns(0, r).into_owned();
    let mut pi = &pb * pb.adjoint();
    symmetrize(&mut pi);
    (h, pi, (-spec.half_width, spec.half_width))
}
