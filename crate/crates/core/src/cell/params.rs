use std::collections::BTreeMap;

use crate::cell::config::{CellConfig, Variant};
use crate::error::{Error, Result};
use crate::tensor::{init_weights, InitScheme, Tensor};

/// Gate order used everywhere: input, forget, output, candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input,
    Forget,
    Output,
    Candidate,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Output, Gate::Candidate];

    pub fn name(self) -> &'static str {
        match self {
            Gate::Input => "i",
            Gate::Forget => "f",
            Gate::Output => "o",
            Gate::Candidate => "g",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateWeights {
    /// `[d × m]`, or `[d × f]` for GSSCN.
    pub w_x: Tensor,
    /// `[d × d]`, or `[d × f]` for GSSCN.
    pub w_h: Tensor,
    pub b: Tensor,
}

/// GST hidden-state revision `(W_sem·Ŝ) ⊙ (W_hid·h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TagFusion {
    pub w_sem: Tensor,
    pub w_hid: Tensor,
}

/// Per-gate GSSCN factors:
/// `x_* = (x_sem·Ŝ) ⊙ (x_in·x)` and `h_* = (h_sem·Ŝ) ⊙ (h_in·h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateFactors {
    pub x_sem: Tensor,
    pub x_in: Tensor,
    pub h_sem: Tensor,
    pub h_in: Tensor,
}

/// Single affine layer followed by tanh, mapping visual features to an
/// initial state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct InitMlp {
    pub w: Tensor,
    pub b: Tensor,
}

/// Every trainable tensor of one cell variant. The same type doubles as the
/// gradient bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct CellParams {
    config: CellConfig,
    pub gates: [GateWeights; 4],
    /// `[V × d]`
    pub w_out: Tensor,
    /// `[V × m]`, one row per token.
    pub embedding: Tensor,
    pub init_h: InitMlp,
    pub init_c: InitMlp,
    pub fusion: Option<TagFusion>,
    pub factors: Option<[GateFactors; 4]>,
}

impl CellParams {
    /// All-zero bundle shaped for `config`.
    pub fn zeros(config: &CellConfig) -> Result<Self> {
        config.validate()?;
        let d = config.hidden;
        let m = config.embed;
        let (gx, gh) = config.gate_inputs();
        let gate = || GateWeights {
            w_x: Tensor::zeros(&[d, gx]),
            w_h: Tensor::zeros(&[d, gh]),
            b: Tensor::zeros(&[d]),
        };
        let mlp = || InitMlp {
            w: Tensor::zeros(&[d, config.visual]),
            b: Tensor::zeros(&[d]),
        };
        let fusion = (config.variant == Variant::Gst).then(|| TagFusion {
            w_sem: Tensor::zeros(&[d, config.semantic_dim()]),
            w_hid: Tensor::zeros(&[d, d]),
        });
        let factors = (config.variant == Variant::Gsscn).then(|| {
            let (f, s) = (config.factor_dim(), config.semantic_dim());
            let one = || GateFactors {
                x_sem: Tensor::zeros(&[f, s]),
                x_in: Tensor::zeros(&[f, m]),
                h_sem: Tensor::zeros(&[f, s]),
                h_in: Tensor::zeros(&[f, d]),
            };
            [one(), one(), one(), one()]
        });
        Ok(CellParams {
            config: *config,
            gates: [gate(), gate(), gate(), gate()],
            w_out: Tensor::zeros(&[config.vocab, d]),
            embedding: Tensor::zeros(&[config.vocab, m]),
            init_h: mlp(),
            init_c: mlp(),
            fusion,
            factors,
        })
    }

    /// Uniform (Glorot-range) weights and zero biases. Each tensor draws from
    /// its own stream derived from `seed` and its position, so the result is
    /// reproducible.
    pub fn init(config: &CellConfig, seed: u64) -> Result<Self> {
        let mut params = CellParams::zeros(config)?;
        for (k, (name, t)) in params.named_tensors_mut().into_iter().enumerate() {
            if name.ends_with(".b") {
                continue;
            }
            let (r, c) = (t.rows(), t.cols());
            let fresh = init_weights(r, c, InitScheme::Uniform, seed.wrapping_add(k as u64 * 7919))?;
            t.data_mut().copy_from_slice(fresh.data());
        }
        Ok(params)
    }

    pub fn config(&self) -> &CellConfig {
        &self.config
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    /// Tensors under their canonical checkpoint names, in a fixed order.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (gate, w) in Gate::ALL.iter().zip(&self.gates) {
            let g = gate.name();
            out.push((format!("gate.{g}.w_x"), &w.w_x));
            out.push((format!("gate.{g}.w_h"), &w.w_h));
            out.push((format!("gate.{g}.b"), &w.b));
        }
        out.push(("out.w_hy".to_string(), &self.w_out));
        out.push(("embed.w_e".to_string(), &self.embedding));
        out.push(("init.h.w".to_string(), &self.init_h.w));
        out.push(("init.h.b".to_string(), &self.init_h.b));
        out.push(("init.c.w".to_string(), &self.init_c.w));
        out.push(("init.c.b".to_string(), &self.init_c.b));
        if let Some(fusion) = &self.fusion {
            out.push(("gst.w_sem".to_string(), &fusion.w_sem));
            out.push(("gst.w_hid".to_string(), &fusion.w_hid));
        }
        if let Some(factors) = &self.factors {
            for (gate, fac) in Gate::ALL.iter().zip(factors) {
                let g = gate.name();
                out.push((format!("gsscn.{g}.x_sem"), &fac.x_sem));
                out.push((format!("gsscn.{g}.x_in"), &fac.x_in));
                out.push((format!("gsscn.{g}.h_sem"), &fac.h_sem));
                out.push((format!("gsscn.{g}.h_in"), &fac.h_in));
            }
        }
        out
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        for (gate, w) in Gate::ALL.iter().zip(self.gates.iter_mut()) {
            let g = gate.name();
            out.push((format!("gate.{g}.w_x"), &mut w.w_x));
            out.push((format!("gate.{g}.w_h"), &mut w.w_h));
            out.push((format!("gate.{g}.b"), &mut w.b));
        }
        out.push(("out.w_hy".to_string(), &mut self.w_out));
        out.push(("embed.w_e".to_string(), &mut self.embedding));
        out.push(("init.h.w".to_string(), &mut self.init_h.w));
        out.push(("init.h.b".to_string(), &mut self.init_h.b));
        out.push(("init.c.w".to_string(), &mut self.init_c.w));
        out.push(("init.c.b".to_string(), &mut self.init_c.b));
        if let Some(fusion) = &mut self.fusion {
            out.push(("gst.w_sem".to_string(), &mut fusion.w_sem));
            out.push(("gst.w_hid".to_string(), &mut fusion.w_hid));
        }
        if let Some(factors) = &mut self.factors {
            for (gate, fac) in Gate::ALL.iter().zip(factors.iter_mut()) {
                let g = gate.name();
                out.push((format!("gsscn.{g}.x_sem"), &mut fac.x_sem));
                out.push((format!("gsscn.{g}.x_in"), &mut fac.x_in));
                out.push((format!("gsscn.{g}.h_sem"), &mut fac.h_sem));
                out.push((format!("gsscn.{g}.h_in"), &mut fac.h_in));
            }
        }
        out
    }

    /// Total number of allocated scalars.
    pub fn num_elements(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Checks every tensor against the shapes `config` implies and that all
    /// entries are finite.
    pub fn validate(&self) -> Result<()> {
        let reference = CellParams::zeros(&self.config)?;
        let expected = reference.named_tensors();
        let actual = self.named_tensors();
        if expected.len() != actual.len() {
            return Err(Error::Contract(format!(
                "parameter bundle has {} tensors, config implies {}",
                actual.len(),
                expected.len()
            )));
        }
        for ((name, want), (_, got)) in expected.iter().zip(&actual) {
            if want.shape() != got.shape() {
                return Err(Error::Shape {
                    left: got.shape().to_vec(),
                    right: want.shape().to_vec(),
                    context: "parameter shape vs config",
                });
            }
            if !got.is_finite() {
                return Err(Error::numeric(format!("parameter {name}"), 0));
            }
        }
        Ok(())
    }

    /// Rebuilds a bundle from named tensors, requiring exactly the expected
    /// name set with matching shapes.
    pub fn from_named(config: &CellConfig, mut tensors: BTreeMap<String, Tensor>) -> Result<Self> {
        let mut params = CellParams::zeros(config)?;
        for (name, slot) in params.named_tensors_mut() {
            let t = tensors
                .remove(&name)
                .ok_or_else(|| Error::Contract(format!("missing tensor {name}")))?;
            if t.shape() != slot.shape() {
                return Err(Error::Shape {
                    left: t.shape().to_vec(),
                    right: slot.shape().to_vec(),
                    context: "stored tensor vs config",
                });
            }
            *slot = t;
        }
        if let Some(extra) = tensors.keys().next() {
            return Err(Error::Contract(format!("unexpected tensor {extra}")));
        }
        params.validate()?;
        Ok(params)
    }

    /// Sum of squares over every tensor.
    pub fn sum_squares(&self) -> f64 {
        self.named_tensors().iter().map(|(_, t)| t.sum_squares()).sum()
    }

    /// `self += alpha · other`, tensor by tensor.
    pub fn axpy(&mut self, alpha: f64, other: &CellParams) -> Result<()> {
        if self.config != other.config {
            return Err(Error::Contract("bundles built for different configs".into()));
        }
        let theirs = other.named_tensors();
        for ((_, mine), (_, t)) in self.named_tensors_mut().into_iter().zip(theirs) {
            mine.axpy(alpha, t)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, t) in self.named_tensors_mut() {
            t.data_mut().iter_mut().for_each(|v| *v *= factor);
        }
    }
}
