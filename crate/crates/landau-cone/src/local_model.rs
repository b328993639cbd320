//! The local 2×2 Hamiltonian near a crossing: Pauli fields, Sz.-Nagy frames and
//! the linearized Dirac data.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::bloch::{torus_distance, BandGrid, CrossingPoint, FiberFamily};
use crate::error::{Error, Result};
use crate::fd;
use crate::hopping::HoppingSet;
use crate::linalg::{
    c, herm_eig, herm_fn, lowdin, op_norm, pauli, sigma_dot, symmetrize, CMat, C64, ZERO,
};

/// A 2×2 Hermitian matrix written as `F₀𝟙 + F·σ`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Pauli {
    pub f0: f64,
    pub f: [f64; 3],
}

impl Pauli {
    pub fn new(f0: f64, f: [f64; 3]) -> Self {
        Self { f0, f }
    }

    pub fn matrix(&self) -> Matrix2<C64> {
        sigma_dot(self.f) + Matrix2::identity() * c(self.f0, 0.0)
    }

    pub fn norm_f(&self) -> f64 {
        (self.f[0] * self.f[0] + self.f[1] * self.f[1] + self.f[2] * self.f[2]).sqrt()
    }

    /// `(λ₋, λ₊) = F₀ ∓ |F|`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let r = self.norm_f();
        (self.f0 - r, self.f0 + r)
    }

    /// `𝒹 = λ₋λ₊ = F₀² − |F|²`.
    pub fn det(&self) -> f64 {
        let r = self.norm_f();
        self.f0 * self.f0 - r * r
    }

    fn add_scaled(&self, dir: [f64; 3], s: f64) -> Self {
        Self {
            f0: self.f0,
            f: [self.f[0] + s * dir[0], self.f[1] + s * dir[1], self.f[2] + s * dir[2]],
        }
    }
}

impl std::ops::Sub for Pauli {
    type Output = Pauli;
    fn sub(self, o: Pauli) -> Pauli {
        Pauli::new(
            self.f0 - o.f0,
            [self.f[0] - o.f[0], self.f[1] - o.f[1], self.f[2] - o.f[2]],
        )
    }
}

impl std::ops::Mul<f64> for Pauli {
    type Output = Pauli;
    fn mul(self, s: f64) -> Pauli {
        Pauli::new(self.f0 * s, [self.f[0] * s, self.f[1] * s, self.f[2] * s])
    }
}

/// `F₀ = Tr M/2`, `F_ℓ = Tr(σ_ℓ M)/2`.
pub fn pauli_decompose(m: &Matrix2<C64>) -> Result<Pauli> {
    let defect = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if defect > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "matrix is not Hermitian (defect {defect:.3e})"
        )));
    }
    Ok(pauli_decompose_unchecked(m))
}

fn pauli_decompose_unchecked(m: &Matrix2<C64>) -> Pauli {
    let s = pauli();
    let tr = |a: &Matrix2<C64>| 0.5 * (a * m).trace().re;
    Pauli::new(0.5 * m.trace().re, [tr(&s[0]), tr(&s[1]), tr(&s[2])])
}

type PauliFn = dyn Fn([f64; 2]) -> Pauli + Send + Sync;

#[derive(Clone)]
enum Repr {
    Hoppings(HoppingSet),
    Field(Arc<PauliFn>),
}

/// Γ*-periodic 2×2 Hermitian symbol.
#[derive(Clone)]
pub struct TwoBandSymbol {
    repr: Repr,
}

impl std::fmt::Debug for TwoBandSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.repr {
            Repr::Hoppings(h) => write!(f, "TwoBandSymbol::Hoppings({} entries)", h.len()),
            Repr::Field(_) => write!(f, "TwoBandSymbol::Field"),
        }
    }
}

impl TwoBandSymbol {
    pub fn from_hoppings(h: HoppingSet) -> Result<Self> {
        if h.orbitals() != 2 {
            return Err(Error::InvalidInput("a two-band symbol needs 2 orbitals".into()));
        }
        h.check_hermitian(1e-12)?;
        Ok(Self {
            repr: Repr::Hoppings(h),
        })
    }

    pub fn from_fn(f: impl Fn([f64; 2]) -> Pauli + Send + Sync + 'static) -> Self {
        Self {
            repr: Repr::Field(Arc::new(f)),
        }
    }

    /// Trigonometric interpolation of Pauli samples on an `n × n` grid.
    pub fn from_pauli_grid(grid: &PauliGrid) -> Result<Self> {
        let n = grid.n;
        if grid.samples.len() != n * n {
            return Err(Error::InvalidInput("pauli_grid sample count mismatch".into()));
        }
        let h = HoppingSet::from_grid(n, grid.origin, &|i, j| {
            let p = grid.samples[i * n + j];
            crate::linalg::from_matrix2(&p.matrix())
        });
        Self::from_hoppings(h)
    }

    pub fn honeycomb() -> Self {
        Self::from_hoppings(HoppingSet::honeycomb()).expect("builtin is Hermitian")
    }

    pub fn hoppings(&self) -> Option<&HoppingSet> {
        match &self.repr {
            Repr::Hoppings(h) => Some(h),
            Repr::Field(_) => None,
        }
    }

    pub fn pauli(&self, theta: [f64; 2]) -> Pauli {
        match &self.repr {
            Repr::Hoppings(h) => {
                let k = h.symbol(theta);
                let m = Matrix2::new(k[(0, 0)], k[(0, 1)], k[(1, 0)], k[(1, 1)]);
                pauli_decompose_unchecked(&m)
            }
            Repr::Field(f) => f(theta),
        }
    }

    pub fn matrix(&self, theta: [f64; 2]) -> Matrix2<C64> {
        self.pauli(theta).matrix()
    }

    pub fn to_json(&self) -> Result<String> {
        match &self.repr {
            Repr::Hoppings(h) => {
                let j = SymbolJson::Hoppings(crate::hopping::HoppingSetJson::from(h).hoppings);
                Ok(serde_json::to_string_pretty(&j).expect("serializable"))
            }
            Repr::Field(_) => Err(Error::InvalidInput(
                "closure-backed symbols must be sampled to a pauli_grid first".into(),
            )),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: SymbolJson =
            serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("symbol JSON: {e}")))?;
        match j {
            SymbolJson::Hoppings(entries) => {
                let h = HoppingSet::try_from(crate::hopping::HoppingSetJson {
                    orbitals: 2,
                    hoppings: entries,
                })?;
                Self::from_hoppings(h)
            }
            SymbolJson::PauliGrid(g) => Self::from_pauli_grid(&g),
        }
    }

    /// Sample on an `n × n` grid.
    pub fn sample(&self, n: usize, origin: [f64; 2]) -> PauliGrid {
        let s = 2.0 * PI / n as f64;
        PauliGrid {
            n,
            origin,
            samples: (0..n * n)
                .map(|f| self.pauli([origin[0] + s * (f / n) as f64, origin[1] + s * (f % n) as f64]))
                .collect(),
        }
    }
}

impl FiberFamily for TwoBandSymbol {
    fn dim(&self) -> usize {
        2
    }
    fn fiber(&self, theta: [f64; 2]) -> CMat {
        crate::linalg::from_matrix2(&self.matrix(theta))
    }
}

/// Grid samples of `(F₀, F)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliGrid {
    pub n: usize,
    pub origin: [f64; 2],
    pub samples: Vec<Pauli>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SymbolJson {
    Hoppings(Vec<crate::hopping::HoppingEntryJson>),
    PauliGrid(PauliGrid),
}

/// `(λ₋, λ₊) = F₀ ∓ |F|`.
pub fn symbol_eigenvalues(s: &TwoBandSymbol, theta: [f64; 2]) -> (f64, f64) {
    s.pauli(theta).eigenvalues()
}

/// Sz.-Nagy unitary `Ũ = (𝟙 − (P−P₀)²)^{−1/2}(PP₀ + P⊥P₀⊥)` with `ŨP₀ = PŨ`.
pub fn nagy_intertwiner(p: &CMat, p0: &CMat) -> Result<CMat> {
    let n = p.nrows();
    for (name, q) in [("P", p), ("P0", p0)] {
        let idem = crate::linalg::max_abs(&(q * q - q));
        let herm = crate::linalg::max_abs(&(q - q.adjoint()));
        if idem > 1e-10 || herm > 1e-10 {
            return Err(Error::InvalidInput(format!("{name} is not an orthogonal projector")));
        }
    }
    let d = p - p0;
    let norm = op_norm(&d);
    if norm > 0.5 {
        return Err(Error::IntertwinerOutOfRange { norm, node: None });
    }
    let id = CMat::identity(n, n);
    let mut x = &id - &d * &d;
    symmetrize(&mut x);
    let root = herm_fn(&x, |l| 1.0 / l.sqrt());
    let pp = &id - p;
    let pp0 = &id - p0;
    Ok(root * (p * p0 + pp * pp0))
}

/// Orthonormal pair `(φ̂₋, φ̂₊)` spanning Ran Π_I at each Σ_I grid node.
#[derive(Clone, Debug)]
pub struct FrameField {
    /// `(flat grid index, θ, D×2 frame)`.
    pub nodes: Vec<(usize, [f64; 2], CMat)>,
    pub seed: CMat,
    pub theta0: [f64; 2],
}

/// Eigenvector phase convention: the largest-modulus component is real positive.
pub fn fix_phase(v: &mut CMat) {
    for j in 0..v.ncols() {
        let mut best = ZERO;
        for i in 0..v.nrows() {
            if v[(i, j)].norm() > best.norm() + 1e-14 {
                best = v[(i, j)];
            }
        }
        if best.norm() > 0.0 {
            let ph = best.conj() / best.norm();
            for i in 0..v.nrows() {
                v[(i, j)] *= ph;
            }
        }
    }
}

/// Eigenvector pair `(k0, k0+1)` at `theta` with the phase convention applied.
pub fn seed_frame(source: &dyn FiberFamily, theta: [f64; 2], k0: usize) -> CMat {
    let mut h = source.fiber(theta);
    symmetrize(&mut h);
    let (_, vecs) = herm_eig(&h);
    let mut s = vecs.columns(k0, 2).into_owned();
    fix_phase(&mut s);
    s
}

/// Nagy-transport a seed frame into `Ran E` where `E` is an orthonormal basis.
///
/// Returns the frame and `‖P − P₀‖`.
pub fn nagy_transport(e: &CMat, seed: &CMat) -> (CMat, f64) {
    let s = e.adjoint() * seed;
    let (u, smin) = lowdin(&s);
    let dist = (1.0 - smin * smin).max(0.0).sqrt();
    (e * u, dist)
}

/// Build the Σ_I frame from grid eigenvectors by Nagy transport of the seed.
pub fn build_local_frame(
    source: &dyn FiberFamily,
    bands: &BandGrid,
    crossing: &CrossingPoint,
    seed: Option<CMat>,
) -> Result<FrameField> {
    let vecs = bands
        .eigenvectors
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("band grid has no eigenvectors".into()))?;
    let k0 = crossing.k0;
    let seed = seed.unwrap_or_else(|| seed_frame(source, crossing.theta0, k0));
    let mut nodes = Vec::new();
    for (f, theta) in bands.nodes() {
        if torus_distance(theta, crossing.theta0) > crossing.sigma_radius {
            continue;
        }
        let e = vecs[f].columns(k0, 2).into_owned();
        let (frame, dist) = nagy_transport(&e, &seed);
        if dist > 0.5 {
            return Err(Error::IntertwinerOutOfRange {
                norm: dist,
                node: Some(f),
            });
        }
        nodes.push((f, theta, frame));
    }
    Ok(FrameField {
        nodes,
        seed,
        theta0: crossing.theta0,
    })
}

impl FrameField {
    /// Worst deviation from orthonormality.
    pub fn orthonormality_defect(&self) -> f64 {
        self.nodes
            .iter()
            .map(|(_, _, fr)| {
                let g = fr.adjoint() * fr - CMat::identity(2, 2);
                crate::linalg::max_abs(&g)
            })
            .fold(0.0, f64::max)
    }

    /// Worst `‖(𝟙 − Π_I)φ̂‖` against the grid eigenvectors.
    pub fn membership_defect(&self, bands: &BandGrid, k0: usize) -> f64 {
        let vecs = bands.eigenvectors.as_ref().expect("eigenvectors");
        self.nodes
            .iter()
            .map(|(f, _, fr)| {
                let e = vecs[*f].columns(k0, 2).into_owned();
                let r = fr - &e * (e.adjoint() * fr);
                r.norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest `‖φ̂(θ) − φ̂(θ′)‖ / |θ − θ′|` over adjacent nodes.
    pub fn continuity_constant(&self, bands: &BandGrid) -> f64 {
        let lookup: std::collections::HashMap<usize, &CMat> =
            self.nodes.iter().map(|(f, _, m)| (*f, m)).collect();
        let n = bands.res;
        let mut worst = 0.0f64;
        for (f, _, m) in &self.nodes {
            let (i, j) = (f / n, f % n);
            for nb in [bands.flat(i + 1, j), bands.flat(i, j + 1)] {
                if let Some(o) = lookup.get(&nb) {
                    worst = worst.max((m - *o).norm() / bands.spacing());
                }
            }
        }
        worst
    }

    /// `M_I(θ) = Φ̂(θ)†Ĥ(θ)Φ̂(θ)` at every stored node, shifted by `energy`.
    pub fn local_matrices(&self, source: &dyn FiberFamily, energy: f64) -> Vec<Matrix2<C64>> {
        self.nodes
            .iter()
            .map(|(_, theta, fr)| {
                let h = source.fiber(*theta);
                let m = fr.adjoint() * h * fr;
                Matrix2::new(m[(0, 0)] - energy, m[(0, 1)], m[(1, 0)], m[(1, 1)] - energy)
            })
            .collect()
    }
}

/// `M_I(θ)` as a symbol on Σ_I, evaluated by fresh diagonalization and Nagy
/// transport of a fixed seed frame.
pub fn local_symbol(
    source: Arc<dyn FiberFamily>,
    crossing: &CrossingPoint,
    seed: CMat,
) -> TwoBandSymbol {
    let k0 = crossing.k0;
    let e0 = crossing.energy;
    TwoBandSymbol::from_fn(move |theta| {
        let mut h = source.fiber(theta);
        symmetrize(&mut h);
        let (vals, vecs) = herm_eig(&h);
        let e = vecs.columns(k0, 2).into_owned();
        let s = e.adjoint() * &seed;
        let (u, _) = lowdin(&s);
        let lam = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(vals[k0] - e0, 0.0),
            c(vals[k0 + 1] - e0, 0.0),
        ]));
        let m = u.adjoint() * lam * &u;
        pauli_decompose_unchecked(&Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))
    })
}

/// Taylor data of the local symbol at the crossing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiracLinearization {
    pub f1: f64,
    pub f2: f64,
    pub v1: [f64; 3],
    pub v2: [f64; 3],
    pub v3: [f64; 3],
    pub a0: f64,
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

impl DiracLinearization {
    /// Assemble from the derivatives, deriving `v⁽³⁾` and `a₀`.
    pub fn from_derivatives(f1: f64, f2: f64, v1: [f64; 3], v2: [f64; 3]) -> Result<Self> {
        let w = cross3(v1, v2);
        let wn = dot3(w, w).sqrt();
        let scale = (dot3(v1, v1) * dot3(v2, v2)).sqrt().max(1e-300);
        if wn <= 1e-10 * scale {
            return Err(Error::DegenerateCone);
        }
        let v3 = [w[0] / wn, w[1] / wn, w[2] / wn];
        let g = [
            dot3(v1, v1) - f1 * f1,
            dot3(v1, v2) - f1 * f2,
            dot3(v2, v2) - f2 * f2,
        ];
        let (a0, _) = crate::linalg::sym2_eigvals(g[0], g[1], g[2]);
        if a0 <= 0.0 {
            return Err(Error::EllipticityViolated {
                angle: f64::NAN,
                margin: a0,
            });
        }
        Ok(Self { f1, f2, v1, v2, v3, a0 })
    }

    /// `𝔩 = σ₁t + σ₂τ`.
    pub fn isotropic() -> Self {
        Self::from_derivatives(0.0, 0.0, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap()
    }

    /// Honeycomb cone at `(2π/3, −2π/3)`.
    pub fn honeycomb() -> Self {
        let r = 3f64.sqrt() / 2.0;
        Self::from_derivatives(0.0, 0.0, [-r, 0.5, 0.0], [r, 0.5, 0.0]).unwrap()
    }

    /// Gram matrix `[[|v1|², v1·v2], [v1·v2, |v2|²]]`.
    pub fn gram(&self) -> [f64; 3] {
        [dot3(self.v1, self.v1), dot3(self.v1, self.v2), dot3(self.v2, self.v2)]
    }

    /// Cosine of the angle between `v⁽¹⁾` and `v⁽²⁾`.
    pub fn mu(&self) -> f64 {
        let g = self.gram();
        g[1] / (g[0] * g[2]).sqrt()
    }

    /// `a² = fᵀ G⁻¹ f` (tilt relative to the cone opening).
    pub fn tilt(&self) -> f64 {
        let g = self.gram();
        let det = g[0] * g[2] - g[1] * g[1];
        let q = (g[2] * self.f1 * self.f1 - 2.0 * g[1] * self.f1 * self.f2 + g[0] * self.f2 * self.f2) / det;
        q.max(0.0).sqrt()
    }

    /// `𝔩(t, τ)` as a Pauli field.
    pub fn symbol(&self, t: f64, tau: f64) -> Pauli {
        Pauli::new(
            self.f1 * t + self.f2 * tau,
            [
                self.v1[0] * t + self.v2[0] * tau,
                self.v1[1] * t + self.v2[1] * tau,
                self.v1[2] * t + self.v2[2] * tau,
            ],
        )
    }

    /// `det 𝔩(t, τ)`.
    pub fn det(&self, t: f64, tau: f64) -> f64 {
        self.symbol(t, tau).det()
    }

    /// Scale every slope by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            f1: self.f1 * s,
            f2: self.f2 * s,
            v1: self.v1.map(|x| x * s),
            v2: self.v2.map(|x| x * s),
            v3: self.v3,
            a0: self.a0 * s * s,
        }
    }

    /// `A = f₁𝟙 + σ_{v1}` and `B = f₂𝟙 + σ_{v2}`.
    pub fn coefficient_matrices(&self) -> (Matrix2<C64>, Matrix2<C64>) {
        (
            Pauli::new(self.f1, self.v1).matrix(),
            Pauli::new(self.f2, self.v2).matrix(),
        )
    }
}

/// Linearize a symbol at its crossing by Richardson-extrapolated central differences.
pub fn linearize_at_crossing(s: &TwoBandSymbol, theta0: [f64; 2], gap_tol: f64) -> Result<DiracLinearization> {
    let p0 = s.pauli(theta0);
    if p0.norm_f() > gap_tol {
        return Err(Error::InvalidInput(format!(
            "|F(theta0)| = {:.3e} exceeds gapTol",
            p0.norm_f()
        )));
    }
    let h = 1e-3;
    let d1 = fd::derivative(|x| s.pauli([theta0[0] + x, theta0[1]]), 0.0, h);
    let d2 = fd::derivative(|x| s.pauli([theta0[0], theta0[1] + x]), 0.0, h);
    DiracLinearization::from_derivatives(d1.f0, d2.f0, d1.f, d2.f)
}

/// Angular certification of global ellipticity.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EllipticityReport {
    /// `min_φ (−det 𝔩(cos φ, sin φ))`.
    pub worst_margin: f64,
    pub worst_angle: f64,
    pub a: f64,
}

pub fn check_ellipticity(lin: &DiracLinearization) -> Result<EllipticityReport> {
    let mut worst = (f64::INFINITY, 0.0);
    for k in 0..720 {
        let phi = 2.0 * PI * k as f64 / 720.0;
        let m = -lin.det(phi.cos(), phi.sin());
        if m < worst.0 {
            worst = (m, phi);
        }
    }
    if worst.0 <= 0.0 || worst.0 < lin.a0 * (1.0 - 1e-12) {
        return Err(Error::EllipticityViolated {
            angle: worst.1,
            margin: worst.0,
        });
    }
    Ok(EllipticityReport {
        worst_margin: worst.0,
        worst_angle: worst.1,
        a: lin.tilt(),
    })
}

/// Add `s · dir·σ` to a Pauli value (used by gap surgery).
pub(crate) fn shift_pauli(p: Pauli, dir: [f64; 3], s: f64) -> Pauli {
    p.add_scaled(dir, s)
}
