use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bloch::FiberFamily;
use crate::error::{Error, Result};
use crate::linalg::{c, cis, CMat, C64, ONE, ZERO};

/// Finite map `γ ↦ 𝓂(γ)` of lattice hopping matrices.
///
/// The associated Bloch symbol is `k(θ) = Σ_γ e^{−i⟨θ,γ⟩} 𝓂(γ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HoppingSet {
    orbitals: usize,
    entries: BTreeMap<[i32; 2], CMat>,
}

impl HoppingSet {
    pub fn new(orbitals: usize) -> Self {
        Self {
            orbitals,
            entries: BTreeMap::new(),
        }
    }

    pub fn orbitals(&self) -> usize {
        self.orbitals
    }

    /// Accumulate `m` at `γ`.
    pub fn add(&mut self, gamma: [i32; 2], m: CMat) {
        assert_eq!(m.shape(), (self.orbitals, self.orbitals));
        let e = self
            .entries
            .entry(gamma)
            .or_insert_with(|| CMat::zeros(self.orbitals, self.orbitals));
        *e += m;
    }

    /// Accumulate `m` at `γ` and `m†` at `−γ` (only `(m + m†)/2` at `γ = 0`).
    pub fn add_hermitian(&mut self, gamma: [i32; 2], m: CMat) {
        if gamma == [0, 0] {
            let h = (&m + m.adjoint()) * c(0.5, 0.0);
            self.add(gamma, h);
        } else {
            self.add([-gamma[0], -gamma[1]], m.adjoint());
            self.add(gamma, m);
        }
    }

    pub fn get(&self, gamma: [i32; 2]) -> Option<&CMat> {
        self.entries.get(&gamma)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i32; 2], &CMat)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest `|γ|_∞` with a nonzero entry.
    pub fn cutoff(&self) -> i32 {
        self.entries
            .keys()
            .map(|g| g[0].abs().max(g[1].abs()))
            .max()
            .unwrap_or(0)
    }

    /// Largest deviation from `𝓂(−γ) = 𝓂(γ)†`.
    pub fn hermitian_defect(&self) -> f64 {
        let zero = CMat::zeros(self.orbitals, self.orbitals);
        let mut worst = 0.0f64;
        for (g, m) in &self.entries {
            let partner = self.entries.get(&[-g[0], -g[1]]).unwrap_or(&zero);
            let d = m - partner.adjoint();
            worst = worst.max(d.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        worst
    }

    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        let d = self.hermitian_defect();
        if d > tol {
            return Err(Error::InvalidInput(format!(
                "hopping set is not Hermitian-symmetric (defect {d:.3e})"
            )));
        }
        Ok(())
    }

    /// `k(θ) = Σ_γ e^{−i⟨θ,γ⟩} 𝓂(γ)`.
    pub fn symbol(&self, theta: [f64; 2]) -> CMat {
        let mut k = CMat::zeros(self.orbitals, self.orbitals);
        for (g, m) in &self.entries {
            let ph = cis(-(theta[0] * g[0] as f64 + theta[1] * g[1] as f64));
            k += m * ph;
        }
        k
    }

    /// `max_γ ⟨γ⟩^p ‖𝓂(γ)‖_max` — a finite-decay certificate.
    pub fn weighted_decay(&self, power: i32) -> f64 {
        self.entries
            .iter()
            .map(|(g, m)| {
                let w = (1.0 + (g[0] * g[0] + g[1] * g[1]) as f64).sqrt().powi(power);
                w * m.iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Nearest-neighbour honeycomb model: `k₁₂(θ) = 1 + e^{iθ₁} + e^{iθ₂}`.
    pub fn honeycomb() -> Self {
        let mut h = Self::new(2);
        let hop = CMat::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO]);
        let intra = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        h.add([0, 0], intra);
        h.add_hermitian([1, 0], hop.clone());
        h.add_hermitian([0, 1], hop);
        h
    }

    /// Scalar square-lattice Harper model `cos θ₁ + cos θ₂`.
    pub fn harper() -> Self {
        let mut h = Self::new(1);
        let half = CMat::from_element(1, 1, c(0.5, 0.0));
        h.add_hermitian([1, 0], half.clone());
        h.add_hermitian([0, 1], half);
        h
    }

    /// Single on-site term.
    pub fn onsite(m: CMat) -> Self {
        let mut h = Self::new(m.nrows());
        h.add([0, 0], m);
        h
    }

    /// Trigonometric interpolation of samples on an `n × n` torus grid starting
    /// at `origin`; Nyquist modes are split evenly so the result stays Hermitian.
    pub fn from_grid(n: usize, origin: [f64; 2], samples: &dyn Fn(usize, usize) -> CMat) -> Self {
        let first = samples(0, 0);
        let orb = first.nrows();
        let s = 2.0 * PI / n as f64;
        let vals: Vec<CMat> = (0..n * n).map(|f| samples(f / n, f % n)).collect();
        let half = (n / 2) as i32;
        let even = n % 2 == 0;
        let hi = if even { half } else { half };
        let lo = -half;
        let mut out = Self::new(orb);
        for g1 in lo..=hi {
            for g2 in lo..=hi {
                let mut w = 1.0;
                if even && g1.abs() == half {
                    w *= 0.5;
                }
                if even && g2.abs() == half {
                    w *= 0.5;
                }
                let mut acc = CMat::zeros(orb, orb);
                for (f, v) in vals.iter().enumerate() {
                    let th = [origin[0] + s * (f / n) as f64, origin[1] + s * (f % n) as f64];
                    acc += v * cis(th[0] * g1 as f64 + th[1] * g2 as f64);
                }
                acc *= c(w / (n * n) as f64, 0.0);
                if acc.iter().any(|z| z.norm() > 1e-15) {
                    out.entries.insert([g1, g2], acc);
                }
            }
        }
        out
    }

    /// Drop entries whose max-norm is below `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let mut out = Self::new(self.orbitals);
        for (g, m) in &self.entries {
            if m.iter().any(|z| z.norm() > tol) {
                out.entries.insert(*g, m.clone());
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&HoppingSetJson::from(self)).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: HoppingSetJson =
            serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("hopping JSON: {e}")))?;
        j.try_into()
    }
}

impl FiberFamily for HoppingSet {
    fn dim(&self) -> usize {
        self.orbitals
    }
    fn fiber(&self, theta: [f64; 2]) -> CMat {
        self.symbol(theta)
    }
}

/// Wire format: `γ` plus a row-major list of `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HoppingSetJson {
    pub orbitals: usize,
    pub hoppings: Vec<HoppingEntryJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HoppingEntryJson {
    pub gamma: [i32; 2],
    pub matrix: Vec<[f64; 2]>,
}

impl From<&HoppingSet> for HoppingSetJson {
    fn from(h: &HoppingSet) -> Self {
        let n = h.orbitals;
        Self {
            orbitals: n,
            hoppings: h
                .entries
                .iter()
                .map(|(g, m)| HoppingEntryJson {
                    gamma: *g,
                    matrix: (0..n * n)
                        .map(|k| {
                            let z = m[(k / n, k % n)];
                            [z.re, z.im]
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<HoppingSetJson> for HoppingSet {
    type Error = Error;
    fn try_from(j: HoppingSetJson) -> Result<Self> {
        let n = j.orbitals;
        let mut h = HoppingSet::new(n);
        for e in j.hoppings {
            if e.matrix.len() != n * n {
                return Err(Error::InvalidInput(format!(
                    "hopping at {:?} has {} entries, expected {}",
                    e.gamma,
                    e.matrix.len(),
                    n * n
                )));
            }
            let m = CMat::from_fn(n, n, |r, col| {
                let [re, im] = e.matrix[r * n + col];
                C64::new(re, im)
            });
            h.add(e.gamma, m);
        }
        Ok(h)
    }
}
