use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    /// `½‖y − y*‖²` over the softmax output.
    SquaredError,
    /// `−ln y[target]`.
    #[default]
    CrossEntropy,
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "se" | "squared_error" | "mse" => Ok(LossKind::SquaredError),
            "xent" | "cross_entropy" | "ce" => Ok(LossKind::CrossEntropy),
            other => Err(Error::Config(format!("unknown loss {other:?}"))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::SquaredError => "se",
            LossKind::CrossEntropy => "xent",
        })
    }
}

/// Per-position loss of a probability vector against a one-hot target.
pub fn loss(y: &[f64], y_true: &[f64], kind: LossKind) -> Result<f64> {
    if y.len() != y_true.len() {
        return Err(Error::shape(&[y.len()], &[y_true.len()], "loss"));
    }
    let target = one_hot_index(y_true)?;
    Ok(token_loss(y, target, kind))
}

fn one_hot_index(y_true: &[f64]) -> Result<usize> {
    let ones: Vec<usize> = y_true
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == 1.0)
        .map(|(i, _)| i)
        .collect();
    let zeros = y_true.iter().filter(|&&v| v == 0.0).count();
    match ones.as_slice() {
        [i] if zeros + 1 == y_true.len() => Ok(*i),
        _ => Err(Error::Contract("target is not one-hot".into())),
    }
}

pub(crate) fn token_loss(p: &[f64], target: usize, kind: LossKind) -> f64 {
    match kind {
        LossKind::CrossEntropy => -p[target].ln(),
        LossKind::SquaredError => {
            0.5 * p
                .iter()
                .enumerate()
                .map(|(k, &pk)| {
                    let e = pk - if k == target { 1.0 } else { 0.0 };
                    e * e
                })
                .sum::<f64>()
        }
    }
}

/// Gradient of `token_loss` with respect to the logits that produced `p`.
pub(crate) fn logit_grad(p: &[f64], target: usize, kind: LossKind) -> Vec<f64> {
    match kind {
        LossKind::CrossEntropy => {
            let mut g = p.to_vec();
            g[target] -= 1.0;
            g
        }
        LossKind::SquaredError => {
            // dz = J_softmaxᵀ (p − e), J = diag(p) − p pᵀ
            let dp: Vec<f64> = p
                .iter()
                .enumerate()
                .map(|(k, &pk)| pk - if k == target { 1.0 } else { 0.0 })
                .collect();
            let inner: f64 = p.iter().zip(&dp).map(|(a, b)| a * b).sum();
            p.iter().zip(&dp).map(|(pk, dk)| pk * (dk - inner)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let y = [0.0, 1.0, 0.0];
        assert_eq!(loss(&y, &y, LossKind::SquaredError).unwrap(), 0.0);

        let uniform = [0.25; 4];
        let target = [0.0, 0.0, 1.0, 0.0];
        let se = loss(&uniform, &target, LossKind::SquaredError).unwrap();
        assert!((se - 0.375).abs() < 1e-15);
        let ce = loss(&uniform, &target, LossKind::CrossEntropy).unwrap();
        assert!((ce - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_one_hot() {
        let y = [0.5, 0.5];
        assert!(loss(&y, &[0.5, 0.5], LossKind::CrossEntropy).is_err());
        assert!(loss(&y, &[1.0, 1.0], LossKind::CrossEntropy).is_err());
        assert!(loss(&y, &[0.0, 0.0], LossKind::CrossEntropy).is_err());
        assert!(loss(&y, &[1.0], LossKind::CrossEntropy).is_err());
    }

    #[test]
    fn parse() {
        assert_eq!("se".parse::<LossKind>().unwrap(), LossKind::SquaredError);
        assert_eq!("xent".parse::<LossKind>().unwrap(), LossKind::CrossEntropy);
        assert!("hinge".parse::<LossKind>().is_err());
    }

    #[test]
    fn logit_grad_matches_finite_difference() {
        let z = [0.3, -1.1, 0.8, 0.05];
        for kind in [LossKind::SquaredError, LossKind::CrossEntropy] {
            let p = crate::tensor::softmax(&z).unwrap();
            let g = logit_grad(&p, 2, kind);
            for k in 0..4 {
                let mut zp = z;
                let mut zm = z;
                zp[k] += 1e-6;
                zm[k] -= 1e-6;
                let lp = token_loss(&crate::tensor::softmax(&zp).unwrap(), 2, kind);
                let lm = token_loss(&crate::tensor::softmax(&zm).unwrap(), 2, kind);
                assert!(((lp - lm) / 2e-6 - g[k]).abs() < 1e-8);
            }
        }
    }
}
