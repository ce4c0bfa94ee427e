//! Forward equations for the three cells.
//!
//! Gate preactivations are `W_x·x̃ + W_h·h̃ + b`, where `(x̃, h̃)` is
//! `(x, h)` for LSTM, `(x, (W_sem·Ŝ) ⊙ (W_hid·h))` for GST and the per-gate
//! factored contexts for GSSCN. Memory and output updates are shared:
//! `c = f⊙c' + i⊙g`, `h = o⊙tanh(c)`.

use crate::cell::config::Variant;
use crate::cell::params::{CellParams, Gate};
use crate::error::{Error, Result};
use crate::tensor::{hadamard, sigmoid, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub t: usize,
}

impl CellState {
    pub fn zeros(hidden: usize) -> Self {
        CellState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
            t: 0,
        }
    }
}

/// Intermediate values of one GSSCN gate.
#[derive(Debug, Clone)]
pub(crate) struct FactorTrace {
    pub x_sem: Vec<f64>,
    pub x_in: Vec<f64>,
    pub xs: Vec<f64>,
    pub h_sem: Vec<f64>,
    pub h_in: Vec<f64>,
    pub hs: Vec<f64>,
}

/// Everything backpropagation needs from one forward step.
#[derive(Debug, Clone)]
pub(crate) struct StepTrace {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    /// GST only: `(W_sem·Ŝ, W_hid·h_prev)`.
    pub fusion: Option<(Vec<f64>, Vec<f64>)>,
    /// Hidden vector seen by the gate projections (LSTM and GST).
    pub h_used: Vec<f64>,
    pub factors: Option<Vec<FactorTrace>>,
    /// Activated gates in `Gate::ALL` order.
    pub acts: [Vec<f64>; 4],
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

fn check_finite(v: &[f64], what: impl FnOnce() -> String, step: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::numeric(what(), step))
    }
}

fn affine(w: &Tensor, x: &[f64], b: &Tensor) -> Result<Vec<f64>> {
    let mut out = w.matvec(x)?;
    for (o, bi) in out.iter_mut().zip(b.data()) {
        *o += bi;
    }
    Ok(out)
}

fn check_dim(v: &[f64], want: usize, context: &'static str) -> Result<()> {
    if v.len() != want {
        return Err(Error::Shape {
            left: vec![v.len()],
            right: vec![want],
            context,
        });
    }
    Ok(())
}

/// `h₀ = tanh(W_h⁰·v + b_h⁰)`, `c₀ = tanh(W_c⁰·v + b_c⁰)`.
pub fn init_state(params: &CellParams, visual: &[f64]) -> Result<CellState> {
    check_dim(visual, params.config().visual, "visual features vs config")?;
    let h: Vec<f64> = affine(&params.init_h.w, visual, &params.init_h.b)?
        .into_iter()
        .map(f64::tanh)
        .collect();
    let c: Vec<f64> = affine(&params.init_c.w, visual, &params.init_c.b)?
        .into_iter()
        .map(f64::tanh)
        .collect();
    check_finite(&h, || "initial hidden state".into(), 0)?;
    check_finite(&c, || "initial memory state".into(), 0)?;
    Ok(CellState { h, c, t: 0 })
}

pub(crate) fn step_traced(
    params: &CellParams,
    mode: Variant,
    x: &[f64],
    state: &CellState,
    s_hat: Option<&[f64]>,
) -> Result<StepTrace> {
    let cfg = params.config();
    let step = state.t;
    check_dim(x, cfg.embed, "step input vs embedding dim")?;
    check_dim(&state.h, cfg.hidden, "hidden state vs config")?;
    check_dim(&state.c, cfg.hidden, "memory state vs config")?;

    let semantic = |name: &str| -> Result<&[f64]> {
        let s = s_hat.ok_or_else(|| {
            Error::Contract(format!("{name} step needs smoothed semantic features"))
        })?;
        check_dim(s, cfg.semantic_dim(), "semantic features vs config")?;
        Ok(s)
    };

    let mut fusion = None;
    let mut factors = None;
    let mut h_used = state.h.clone();
    let mut pre: Vec<Vec<f64>> = Vec::with_capacity(4);

    match mode {
        Variant::Lstm | Variant::Gst => {
            if mode == Variant::Gst {
                let s = semantic("gst")?;
                let tag = params
                    .fusion
                    .as_ref()
                    .ok_or_else(|| Error::Contract("gst step needs tag-fusion weights".into()))?;
                let u = tag.w_sem.matvec(s)?;
                let w = tag.w_hid.matvec(&state.h)?;
                h_used = hadamard(&u, &w)?;
                check_finite(&h_used, || "revised hidden state".into(), step)?;
                fusion = Some((u, w));
            }
            for (gate, weights) in Gate::ALL.iter().zip(&params.gates) {
                let mut a = affine(&weights.w_x, x, &weights.b)?;
                for (ai, hi) in a.iter_mut().zip(weights.w_h.matvec(&h_used)?) {
                    *ai += hi;
                }
                check_finite(&a, || format!("gate {}", gate.name()), step)?;
                pre.push(a);
            }
        }
        Variant::Gsscn => {
            let s = semantic("gsscn")?;
            let facs = params
                .factors
                .as_ref()
                .ok_or_else(|| Error::Contract("gsscn step needs per-gate factors".into()))?;
            let mut traces = Vec::with_capacity(4);
            for ((gate, weights), fac) in Gate::ALL.iter().zip(&params.gates).zip(facs) {
                let x_sem = fac.x_sem.matvec(s)?;
                let x_in = fac.x_in.matvec(x)?;
                let xs = hadamard(&x_sem, &x_in)?;
                let h_sem = fac.h_sem.matvec(s)?;
                let h_in = fac.h_in.matvec(&state.h)?;
                let hs = hadamard(&h_sem, &h_in)?;
                let mut a = affine(&weights.w_x, &xs, &weights.b)?;
                for (ai, hi) in a.iter_mut().zip(weights.w_h.matvec(&hs)?) {
                    *ai += hi;
                }
                check_finite(&a, || format!("gate {}", gate.name()), step)?;
                pre.push(a);
                traces.push(FactorTrace {
                    x_sem,
                    x_in,
                    xs,
                    h_sem,
                    h_in,
                    hs,
                });
            }
            factors = Some(traces);
        }
    }

    let mut pre = pre.into_iter();
    let i: Vec<f64> = pre.next().unwrap().into_iter().map(sigmoid).collect();
    let f: Vec<f64> = pre.next().unwrap().into_iter().map(sigmoid).collect();
    let o: Vec<f64> = pre.next().unwrap().into_iter().map(sigmoid).collect();
    let g: Vec<f64> = pre.next().unwrap().into_iter().map(f64::tanh).collect();

    let c: Vec<f64> = (0..cfg.hidden)
        .map(|k| f[k] * state.c[k] + i[k] * g[k])
        .collect();
    check_finite(&c, || "memory cell".into(), step)?;
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = o.iter().zip(&tanh_c).map(|(a, b)| a * b).collect();

    Ok(StepTrace {
        x: x.to_vec(),
        h_prev: state.h.clone(),
        c_prev: state.c.clone(),
        fusion,
        h_used,
        factors,
        acts: [i, f, o, g],
        c,
        tanh_c,
        h,
    })
}

fn finish(trace: StepTrace, prev: &CellState) -> CellState {
    CellState {
        h: trace.h,
        c: trace.c,
        t: prev.t + 1,
    }
}

pub fn lstm_step(params: &CellParams, x: &[f64], state: &CellState) -> Result<CellState> {
    step_traced(params, Variant::Lstm, x, state, None).map(|t| finish(t, state))
}

pub fn gst_step(
    params: &CellParams,
    x: &[f64],
    state: &CellState,
    s_hat: Option<&[f64]>,
) -> Result<CellState> {
    step_traced(params, Variant::Gst, x, state, s_hat).map(|t| finish(t, state))
}

pub fn gsscn_step(
    params: &CellParams,
    x: &[f64],
    state: &CellState,
    s_hat: Option<&[f64]>,
) -> Result<CellState> {
    step_traced(params, Variant::Gsscn, x, state, s_hat).map(|t| finish(t, state))
}

/// Raw logits `W_hy·h`.
pub fn project_logits(params: &CellParams, h: &[f64]) -> Result<Vec<f64>> {
    params.w_out.matvec(h)
}

/// Row `token` of the embedding table.
pub fn embed(params: &CellParams, token: usize) -> Result<Vec<f64>> {
    params.embedding.row(token).map(<[f64]>::to_vec)
}

impl CellParams {
    /// Runs the step matching this bundle's variant.
    pub fn step(&self, x: &[f64], state: &CellState, s_hat: Option<&[f64]>) -> Result<CellState> {
        step_traced(self, self.variant(), x, state, s_hat).map(|t| finish(t, state))
    }
}
