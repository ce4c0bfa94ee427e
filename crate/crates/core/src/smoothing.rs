//! Gaussian smoothing of semantic likelihood vectors.
//!
//! A raw tag vector `S` is convolved along its index axis with a truncated,
//! renormalized discrete Gaussian. Boundaries are reflect-padded
//! (`d c b | a b c d | c b a`), so the output has exactly the input's length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smoothing width and truncation radius, both in index units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothing {
    pub sigma: f64,
    pub radius: usize,
}

impl Smoothing {
    pub fn new(sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Smoothing {
            sigma,
            radius: default_radius(sigma),
        })
    }

    pub fn with_radius(sigma: f64, radius: usize) -> Result<Self> {
        check_sigma(sigma)?;
        if radius == 0 {
            return Err(Error::Domain("smoothing radius must be at least 1".into()));
        }
        Ok(Smoothing { sigma, radius })
    }

    pub fn apply(&self, s: &[f64]) -> Result<Vec<f64>> {
        smooth(s, self.sigma, self.radius)
    }
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing {
            sigma: 1.0,
            radius: 3,
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// `ceil(3σ)`, at least 1.
pub fn default_radius(sigma: f64) -> usize {
    ((3.0 * sigma).ceil() as usize).max(1)
}

/// Discrete Gaussian of length `2·radius + 1`, normalized to unit sum.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    if radius == 0 {
        return Err(Error::Domain("kernel radius must be at least 1".into()));
    }
    let r = radius as f64;
    let two_var = 2.0 * sigma * sigma;
    let mut w: Vec<f64> = (0..=2 * radius)
        .map(|k| {
            let off = k as f64 - r;
            (-off * off / two_var).exp()
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Ok(w)
}

/// Maps an out-of-range index back into `0..n` by mirror reflection without
/// repeating the edge sample.
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut j = i.rem_euclid(period);
    if j >= n as isize {
        j = period - j;
    }
    j as usize
}

pub fn smooth(s: &[f64], sigma: f64, radius: usize) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Err(Error::Domain("cannot smooth an empty vector".into()));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("semantic vector is not finite".into()));
    }
    let kernel = gaussian_kernel(sigma, radius)?;
    let n = s.len();
    let r = radius as isize;
    Ok((0..n as isize)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * s[reflect(i + k as isize - r, n)])
                .sum()
        })
        .collect())
}

/// A raw tag-likelihood vector together with its smoothed counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticFeatures {
    raw: Vec<f64>,
    smoothed: Option<Vec<f64>>,
    sigma: f64,
}

impl SemanticFeatures {
    pub fn new(raw: Vec<f64>, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if raw.is_empty() {
            return Err(Error::Domain("semantic vector is empty".into()));
        }
        if let Some((i, v)) = raw
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::Domain(format!(
                "semantic likelihood {v} at index {i} is outside [0, 1]"
            )));
        }
        Ok(SemanticFeatures {
            raw,
            smoothed: None,
            sigma,
        })
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn smoothed(&self) -> Option<&[f64]> {
        self.smoothed.as_deref()
    }

    /// Computes and caches the smoothed vector.
    pub fn smoothen(&mut self, radius: usize) -> Result<&[f64]> {
        let out = smooth(&self.raw, self.sigma, radius)?;
        Ok(self.smoothed.insert(out))
    }
}
