//! Dense row-major tensors and the handful of kernels the cell equations
//! are written in.
//!
//! Vectors are plain `&[f64]` slices; matrices and stored parameters are
//! [`Tensor`]s. There is no broadcasting and no autodiff graph.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor")]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<RawTensor> for Tensor {
    type Error = Error;

    fn try_from(raw: RawTensor) -> Result<Self> {
        Tensor::new(raw.shape, raw.data)
    }
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Domain(format!(
                "tensor dimensions must be positive, got {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::shape(&shape, &[data.len()], "shape vs data length"));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        assert!(
            !shape.is_empty() && !shape.contains(&0),
            "tensor dimensions must be positive"
        );
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn vector(data: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![data.len()], data)
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Column count; 1 for a vector.
    pub fn cols(&self) -> usize {
        self.shape.get(1).copied().unwrap_or(1)
    }

    pub fn row(&self, i: usize) -> Result<&[f64]> {
        if i >= self.rows() {
            return Err(Error::Index {
                index: i,
                len: self.rows(),
            });
        }
        let c = self.cols();
        Ok(&self.data[i * c..(i + 1) * c])
    }

    pub fn row_mut(&mut self, i: usize) -> Result<&mut [f64]> {
        if i >= self.rows() {
            return Err(Error::Index {
                index: i,
                len: self.rows(),
            });
        }
        let c = self.cols();
        Ok(&mut self.data[i * c..(i + 1) * c])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    fn expect_matrix(&self, context: &'static str) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            other => Err(Error::shape(other, &[0, 0], context)),
        }
    }

    /// `W · x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (rows, cols) = self.expect_matrix("matvec expects a matrix")?;
        if cols != x.len() {
            return Err(Error::shape(&self.shape, &[x.len()], "matvec inner dimension"));
        }
        Ok(self
            .data
            .chunks_exact(cols)
            .take(rows)
            .map(|row| dot(row, x))
            .collect())
    }

    /// `Wᵀ · y`.
    pub fn matvec_t(&self, y: &[f64]) -> Result<Vec<f64>> {
        let (rows, cols) = self.expect_matrix("matvec_t expects a matrix")?;
        if rows != y.len() {
            return Err(Error::shape(&self.shape, &[y.len()], "matvec_t inner dimension"));
        }
        let mut out = vec![0.0; cols];
        for (row, &yi) in self.data.chunks_exact(cols).zip(y) {
            if yi == 0.0 {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(row) {
                *o += w * yi;
            }
        }
        Ok(out)
    }

    /// `self += a · bᵀ`
    pub fn add_outer(&mut self, a: &[f64], b: &[f64]) -> Result<()> {
        let (rows, cols) = self.expect_matrix("add_outer expects a matrix")?;
        if rows != a.len() || cols != b.len() {
            return Err(Error::shape(&self.shape, &[a.len(), b.len()], "add_outer"));
        }
        for (row, &ai) in self.data.chunks_exact_mut(cols).zip(a) {
            if ai == 0.0 {
                continue;
            }
            for (w, &bj) in row.iter_mut().zip(b) {
                *w += ai * bj;
            }
        }
        Ok(())
    }

    /// `self += alpha · other`
    pub fn axpy(&mut self, alpha: f64, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape(&self.shape, &other.shape, "axpy"));
        }
        for (s, &o) in self.data.iter_mut().zip(&other.data) {
            *s += alpha * o;
        }
        Ok(())
    }

    pub fn add_assign_slice(&mut self, other: &[f64]) -> Result<()> {
        if self.data.len() != other.len() {
            return Err(Error::shape(&self.shape, &[other.len()], "add_assign_slice"));
        }
        for (s, &o) in self.data.iter_mut().zip(other) {
            *s += o;
        }
        Ok(())
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

impl fmt::Display for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor{:?}", self.shape)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn matvec(w: &Tensor, x: &[f64]) -> Result<Vec<f64>> {
    w.matvec(x)
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(y: &[f64]) -> Result<Vec<f64>> {
    if y.is_empty() {
        return Err(Error::Domain("softmax of an empty vector".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("softmax input is not finite".into()));
    }
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = y.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    Ok(out)
}

/// `log softmax(y)`, computed as `y - max - ln Σ exp(y - max)`.
pub fn log_softmax(y: &[f64]) -> Result<Vec<f64>> {
    if y.is_empty() {
        return Err(Error::Domain("log_softmax of an empty vector".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("log_softmax input is not finite".into()));
    }
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = y.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    Ok(y.iter().map(|v| v - max - lse).collect())
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn tanh(x: f64) -> f64 {
    x.tanh()
}

pub fn sigmoid_vec(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| sigmoid(v)).collect()
}

pub fn tanh_vec(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.tanh()).collect()
}

pub fn hadamard(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::shape(&[a.len()], &[b.len()], "hadamard"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).collect())
}

/// Elementwise `a + b`.
pub fn add(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::shape(&[a.len()], &[b.len()], "add"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x + y).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitScheme {
    /// Uniform in `(-r, r)` with `r = sqrt(6 / (rows + cols))`.
    Uniform,
    Constant(f64),
}

impl FromStr for InitScheme {
    type Err = Error;

    /// Accepts `uniform`, `constant` (zero) and `constant:<value>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "uniform" => Ok(InitScheme::Uniform),
            "constant" => Ok(InitScheme::Constant(0.0)),
            _ => {
                if let Some(v) = s.strip_prefix("constant:") {
                    let c: f64 = v
                        .parse()
                        .map_err(|_| Error::Config(format!("bad constant in init scheme {s:?}")))?;
                    if !c.is_finite() {
                        return Err(Error::Config(format!("non-finite constant in {s:?}")));
                    }
                    Ok(InitScheme::Constant(c))
                } else {
                    Err(Error::Config(format!("unknown init scheme {s:?}")))
                }
            }
        }
    }
}

pub fn init_weights(rows: usize, cols: usize, scheme: InitScheme, seed: u64) -> Result<Tensor> {
    if rows == 0 || cols == 0 {
        return Err(Error::Domain(format!(
            "init_weights needs positive dims, got {rows}x{cols}"
        )));
    }
    let data = match scheme {
        InitScheme::Constant(c) => vec![c; rows * cols],
        InitScheme::Uniform => {
            let r = (6.0 / (rows + cols) as f64).sqrt();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..rows * cols).map(|_| rng.gen_range(-r..r)).collect()
        }
    };
    Tensor::matrix(rows, cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn matvec_examples() {
        let eye = Tensor::identity(2);
        assert_eq!(matvec(&eye, &[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);

        let zero = Tensor::zeros(&[3, 2]);
        assert_eq!(matvec(&zero, &[5.0, -1.0]).unwrap(), vec![0.0; 3]);

        let w = Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(matvec(&w, &[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
    }

    #[test]
    fn matvec_shape_error_names_both_shapes() {
        let w = Tensor::zeros(&[2, 3]);
        let err = matvec(&w, &[1.0, 2.0]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("[2]"), "{msg}");
    }

    #[test]
    fn transpose_and_outer() {
        let w = Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(w.matvec_t(&[1.0, -1.0]).unwrap(), vec![-3.0, -3.0, -3.0]);
        let mut g = Tensor::zeros(&[2, 3]);
        g.add_outer(&[1.0, 2.0], &[1.0, 0.0, -1.0]).unwrap();
        assert_eq!(g.data(), &[1.0, 0.0, -1.0, 2.0, 0.0, -2.0]);
    }

    #[test]
    fn tensor_rejects_bad_shape() {
        assert!(Tensor::new(vec![2, 2], vec![1.0; 3]).is_err());
        assert!(Tensor::new(vec![0, 2], vec![]).is_err());
    }

    #[test]
    fn softmax_examples() {
        let p = softmax(&[0.0, 0.0, 0.0]).unwrap();
        assert!(close(&p, &[1.0 / 3.0; 3], 1e-15));

        let p = softmax(&[0.0, 2f64.ln()]).unwrap();
        assert!(close(&p, &[1.0 / 3.0, 2.0 / 3.0], 1e-15));

        // exp(-1000) underflows to 0 in f64; the oracle value is 1 - 5e-435.
        let p = softmax(&[1000.0, 0.0]).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert_eq!(p, vec![1.0, 0.0]);

        assert!(matches!(softmax(&[]), Err(Error::Domain(_))));
    }

    #[test]
    fn log_softmax_matches_softmax() {
        let y = [0.3, -1.2, 4.0, 0.0];
        let p = softmax(&y).unwrap();
        let lp = log_softmax(&y).unwrap();
        for (a, b) in p.iter().zip(&lp) {
            assert!((a.ln() - b).abs() < 1e-14);
        }
    }

    #[test]
    fn activation_examples() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(tanh(0.0), 0.0);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0).is_finite());
    }

    #[test]
    fn hadamard_examples() {
        let x = [1.5, -2.0, 7.0];
        assert_eq!(hadamard(&[1.0; 3], &x).unwrap(), x.to_vec());
        assert_eq!(hadamard(&x, &[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert_eq!(hadamard(&[2.0, 3.0], &[4.0, 5.0]).unwrap(), vec![8.0, 15.0]);
        assert!(hadamard(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn init_schemes() {
        let z = init_weights(3, 4, InitScheme::Constant(0.0), 7).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));

        let a = init_weights(5, 3, InitScheme::Uniform, 42).unwrap();
        let b = init_weights(5, 3, InitScheme::Uniform, 42).unwrap();
        assert_eq!(a.data(), b.data());

        let bound = (6.0f64 / 10.0).sqrt();
        let u = init_weights(4, 6, InitScheme::Uniform, 3).unwrap();
        assert!(u.data().iter().all(|v| v.abs() <= bound));

        assert!(matches!("xavier".parse::<InitScheme>(), Err(Error::Config(_))));
        assert_eq!(
            "constant:0.25".parse::<InitScheme>().unwrap(),
            InitScheme::Constant(0.25)
        );
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one_and_is_shift_invariant(
            y in prop::collection::vec(-50.0f64..50.0, 1..20),
            shift in -100.0f64..100.0,
        ) {
            let p = softmax(&y).unwrap();
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
            let shifted: Vec<f64> = y.iter().map(|v| v + shift).collect();
            let q = softmax(&shifted).unwrap();
            prop_assert!(close(&p, &q, 1e-12));
        }

        #[test]
        fn matvec_is_linear(
            w in prop::collection::vec(-2.0f64..2.0, 12),
            x in prop::collection::vec(-2.0f64..2.0, 4),
            y in prop::collection::vec(-2.0f64..2.0, 4),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let w = Tensor::matrix(3, 4, w).unwrap();
            let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let lhs = w.matvec(&combo).unwrap();
            let wx = w.matvec(&x).unwrap();
            let wy = w.matvec(&y).unwrap();
            let rhs: Vec<f64> = wx.iter().zip(&wy).map(|(p, q)| a * p + b * q).collect();
            prop_assert!(close(&lhs, &rhs, 1e-9));
        }

        #[test]
        fn hadamard_commutes_and_associates(
            a in prop::collection::vec(-10.0f64..10.0, 6),
            b in prop::collection::vec(-10.0f64..10.0, 6),
            c in prop::collection::vec(-10.0f64..10.0, 6),
        ) {
            prop_assert!(close(&hadamard(&a, &b).unwrap(), &hadamard(&b, &a).unwrap(), 1e-12));
            let left = hadamard(&hadamard(&a, &b).unwrap(), &c).unwrap();
            let right = hadamard(&a, &hadamard(&b, &c).unwrap()).unwrap();
            // relative: products reach 1e3 in magnitude
            prop_assert!(left.iter().zip(&right).all(|(l, r)| (l - r).abs() <= 1e-12 * l.abs().max(1.0)));
        }

        #[test]
        fn activations_bounded_and_monotone(x in -30.0f64..30.0, dx in 1e-3f64..1.0) {
            let s = sigmoid(x);
            prop_assert!(s > 0.0 && s < 1.0);
            prop_assert!(sigmoid(x + dx) > s);
            let t = tanh(x / 10.0);
            prop_assert!(t > -1.0 && t < 1.0);
            prop_assert!(tanh((x + dx) / 10.0) > t);
        }
    }
}
