//! Finite spectra and the Hausdorff distance between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted finite spectrum restricted to a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSet {
    values: Vec<f64>,
    window: (f64, f64),
}

impl SpectrumSet {
    /// Keep the values inside the closed window and sort them.
    pub fn new(values: impl IntoIterator<Item = f64>, window: (f64, f64)) -> Self {
        let mut v: Vec<f64> = values
            .into_iter()
            .filter(|x| *x >= window.0 && *x <= window.1)
            .collect();
        v.sort_by(f64::total_cmp);
        Self { values: v, window }
    }

    pub fn unbounded(values: impl IntoIterator<Item = f64>) -> Self {
        Self::new(values, (f64::NEG_INFINITY, f64::INFINITY))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Restrict to a sub-window.
    pub fn restrict(&self, window: (f64, f64)) -> Self {
        Self::new(self.values.iter().copied(), window)
    }

    /// Scale every value (and the window) by `s > 0`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|x| x * s).collect(),
            window: (self.window.0 * s, self.window.1 * s),
        }
    }

    /// Merge values closer than `tol` into cluster representatives.
    pub fn clustered(&self, tol: f64) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &x in &self.values {
            match out.last_mut() {
                Some((c, n)) if (x - *c / *n as f64).abs() <= tol => {
                    *c += x;
                    *n += 1;
                }
                _ => out.push((x, 1)),
            }
        }
        out.into_iter().map(|(s, n)| (s / n as f64, n)).collect()
    }

    /// `# window a b` header, then one value per line.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# window {:.17e} {:.17e}\n", self.window.0, self.window.1);
        for v in &self.values {
            s.push_str(&format!("{v:.17e}\n"));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut window = (f64::NEG_INFINITY, f64::INFINITY);
        let mut vals = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# window") {
                let parts: Vec<f64> = rest
                    .split_whitespace()
                    .map(|p| p.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::InvalidInput(format!("window header: {e}")))?;
                if parts.len() != 2 {
                    return Err(Error::InvalidInput("window header needs two numbers".into()));
                }
                window = (parts[0], parts[1]);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            vals.push(
                line.parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("spectrum value {line:?}: {e}")))?,
            );
        }
        Ok(Self::new(vals, window))
    }
}

/// Why a Hausdorff distance is degenerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HausdorffFlag {
    Regular,
    /// Exactly one side is empty: distance is `+∞`.
    OneEmpty,
    /// Both sides are empty: distance is `0`.
    BothEmpty,
}

/// `sup_{a∈A} inf_{b∈B} |a − b|` for sorted, nonempty inputs, by a merge sweep.
fn directed(a: &[f64], b: &[f64]) -> f64 {
    let mut j = 0;
    let mut worst = 0.0f64;
    for &x in a {
        while j + 1 < b.len() && b[j + 1] <= x {
            j += 1;
        }
        let mut d = (x - b[j]).abs();
        if j + 1 < b.len() {
            d = d.min((b[j + 1] - x).abs());
        }
        worst = worst.max(d);
    }
    worst
}

/// Hausdorff distance with degeneracy flag.
pub fn hausdorff_flagged(a: &SpectrumSet, b: &SpectrumSet) -> (f64, HausdorffFlag) {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => (0.0, HausdorffFlag::BothEmpty),
        (true, false) | (false, true) => (f64::INFINITY, HausdorffFlag::OneEmpty),
        _ => (
            directed(&a.values, &b.values).max(directed(&b.values, &a.values)),
            HausdorffFlag::Regular,
        ),
    }
}

/// Hausdorff distance between two finite spectra.
pub fn hausdorff(a: &SpectrumSet, b: &SpectrumSet) -> f64 {
    hausdorff_flagged(a, b).0
}
