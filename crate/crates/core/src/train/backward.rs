//! Teacher-forced forward pass and backpropagation through time.
//!
//! The smoothed semantic vector is treated as a constant input; no gradient
//! flows into the smoothing.

use rayon::prelude::*;

use crate::cell::{init_state, step_traced, CellParams, CellState, StepTrace, Variant};
use crate::error::{Error, Result};
use crate::tensor::{softmax, Tensor};
use crate::train::dropout::{apply, DropoutMasks};
use crate::train::loss::{logit_grad, token_loss, LossKind};

/// One teacher-forced training sequence.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub visual: &'a [f64],
    /// Smoothed semantic features; required for GST and GSSCN.
    pub semantic: Option<&'a [f64]>,
    /// `BOS w₁ … wₙ EOS`; position `t` predicts `tokens[t + 1]`.
    pub tokens: &'a [usize],
}

impl Sample<'_> {
    pub fn steps(&self) -> usize {
        self.tokens.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone)]
pub struct BatchGradient {
    /// Mean per-position loss, averaged over the batch.
    pub loss: f64,
    pub grads: CellParams,
}

struct SequenceTrace {
    visual_in: Vec<f64>,
    h0: Vec<f64>,
    c0: Vec<f64>,
    steps: Vec<StepTrace>,
    h_out: Vec<Vec<f64>>,
    probs: Vec<Vec<f64>>,
    loss: f64,
}

fn forward(
    params: &CellParams,
    sample: &Sample<'_>,
    kind: LossKind,
    masks: Option<&DropoutMasks>,
) -> Result<SequenceTrace> {
    let n = sample.steps();
    if n == 0 {
        return Err(Error::Contract("a training sequence needs at least two tokens".into()));
    }
    let variant = params.variant();
    let mut visual_in = sample.visual.to_vec();
    apply(&mut visual_in, masks.map(|m| m.visual.as_slice()));
    let init = init_state(params, &visual_in)?;
    let (h0, c0) = (init.h, init.c);
    let mut h = h0.clone();
    apply(&mut h, masks.map(|m| m.entry.as_slice()));
    let mut state = CellState { h, c: c0.clone(), t: 0 };

    let mut steps = Vec::with_capacity(n);
    let mut h_out = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(n);
    let mut loss = 0.0;
    for t in 0..n {
        let mut x = params.embedding.row(sample.tokens[t])?.to_vec();
        apply(&mut x, masks.map(|m| m.embed[t].as_slice()));
        let trace = step_traced(params, variant, &x, &state, sample.semantic)?;
        let mut out = trace.h.clone();
        apply(&mut out, masks.map(|m| m.exit[t].as_slice()));
        let p = softmax(&params.w_out.matvec(&out)?)?;
        let target = sample.tokens[t + 1];
        if target >= p.len() {
            return Err(Error::Index {
                index: target,
                len: p.len(),
            });
        }
        loss += token_loss(&p, target, kind);
        state = CellState {
            h: trace.h.clone(),
            c: trace.c.clone(),
            t: t + 1,
        };
        steps.push(trace);
        h_out.push(out);
        probs.push(p);
    }
    let loss = loss / n as f64;
    if !loss.is_finite() {
        return Err(Error::numeric("sequence loss", n));
    }
    Ok(SequenceTrace {
        visual_in,
        h0,
        c0,
        steps,
        h_out,
        probs,
        loss,
    })
}

/// Mean per-position loss of one sequence, without dropout.
pub fn sequence_loss(params: &CellParams, sample: &Sample<'_>, kind: LossKind) -> Result<f64> {
    forward(params, sample, kind, None).map(|t| t.loss)
}

/// Mean of `sequence_loss` over a batch.
pub fn batch_loss(params: &CellParams, batch: &[Sample<'_>], kind: LossKind) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Domain("empty batch".into()));
    }
    let mut total = 0.0;
    for s in batch {
        total += sequence_loss(params, s, kind)?;
    }
    Ok(total / batch.len() as f64)
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn add_bias(b: &mut Tensor, v: &[f64]) -> Result<()> {
    b.add_assign_slice(v)
}

/// Accumulates the gradient of one sequence's loss into `grads`, scaled by
/// `weight`. Returns the unscaled loss.
fn backward_sample(
    params: &CellParams,
    sample: &Sample<'_>,
    kind: LossKind,
    masks: Option<&DropoutMasks>,
    weight: f64,
    grads: &mut CellParams,
) -> Result<f64> {
    let trace = forward(params, sample, kind, masks)?;
    let d = params.config().hidden;
    let n = trace.steps.len();
    let scale = weight / n as f64;
    let variant = params.variant();

    let mut dh_next = vec![0.0; d];
    let mut dc_next = vec![0.0; d];

    for t in (0..n).rev() {
        let st = &trace.steps[t];
        let mut dz = logit_grad(&trace.probs[t], sample.tokens[t + 1], kind);
        dz.iter_mut().for_each(|v| *v *= scale);
        grads.w_out.add_outer(&dz, &trace.h_out[t])?;
        let mut dh = params.w_out.matvec_t(&dz)?;
        apply(&mut dh, masks.map(|m| m.exit[t].as_slice()));
        add_into(&mut dh, &dh_next);

        let [i, f, o, g] = &st.acts;
        let mut dc = dc_next.clone();
        for k in 0..d {
            dc[k] += dh[k] * o[k] * (1.0 - st.tanh_c[k] * st.tanh_c[k]);
        }
        let da: [Vec<f64>; 4] = [
            (0..d).map(|k| dc[k] * g[k] * i[k] * (1.0 - i[k])).collect(),
            (0..d).map(|k| dc[k] * st.c_prev[k] * f[k] * (1.0 - f[k])).collect(),
            (0..d).map(|k| dh[k] * st.tanh_c[k] * o[k] * (1.0 - o[k])).collect(),
            (0..d).map(|k| dc[k] * i[k] * (1.0 - g[k] * g[k])).collect(),
        ];
        let dc_prev = mul(&dc, f);

        let mut dx = vec![0.0; st.x.len()];
        let mut dh_prev = vec![0.0; d];
        match variant {
            Variant::Lstm | Variant::Gst => {
                let mut dh_used = vec![0.0; d];
                for (k, dak) in da.iter().enumerate() {
                    let (w, gw) = (&params.gates[k], &mut grads.gates[k]);
                    gw.w_x.add_outer(dak, &st.x)?;
                    gw.w_h.add_outer(dak, &st.h_used)?;
                    add_bias(&mut gw.b, dak)?;
                    add_into(&mut dx, &w.w_x.matvec_t(dak)?);
                    add_into(&mut dh_used, &w.w_h.matvec_t(dak)?);
                }
                match (&st.fusion, &params.fusion, &mut grads.fusion) {
                    (Some((u, w)), Some(fusion), Some(gf)) => {
                        let s_hat = sample.semantic.ok_or_else(|| {
                            Error::Contract("gst backward needs semantic features".into())
                        })?;
                        let du = mul(&dh_used, w);
                        let dw = mul(&dh_used, u);
                        gf.w_sem.add_outer(&du, s_hat)?;
                        gf.w_hid.add_outer(&dw, &st.h_prev)?;
                        dh_prev = fusion.w_hid.matvec_t(&dw)?;
                    }
                    _ => dh_prev = dh_used,
                }
            }
            Variant::Gsscn => {
                let s_hat = sample.semantic.ok_or_else(|| {
                    Error::Contract("gsscn backward needs semantic features".into())
                })?;
                let traces = st
                    .factors
                    .as_ref()
                    .ok_or_else(|| Error::Contract("missing factor trace".into()))?;
                let facs = params
                    .factors
                    .as_ref()
                    .ok_or_else(|| Error::Contract("missing factor weights".into()))?;
                let gfacs = grads
                    .factors
                    .as_mut()
                    .ok_or_else(|| Error::Contract("missing factor gradients".into()))?;
                for (k, dak) in da.iter().enumerate() {
                    let (w, gw) = (&params.gates[k], &mut grads.gates[k]);
                    let ft = &traces[k];
                    gw.w_x.add_outer(dak, &ft.xs)?;
                    gw.w_h.add_outer(dak, &ft.hs)?;
                    add_bias(&mut gw.b, dak)?;
                    let dxs = w.w_x.matvec_t(dak)?;
                    let dhs = w.w_h.matvec_t(dak)?;

                    let (fac, gfac) = (&facs[k], &mut gfacs[k]);
                    let dx_sem = mul(&dxs, &ft.x_in);
                    let dx_in = mul(&dxs, &ft.x_sem);
                    gfac.x_sem.add_outer(&dx_sem, s_hat)?;
                    gfac.x_in.add_outer(&dx_in, &st.x)?;
                    add_into(&mut dx, &fac.x_in.matvec_t(&dx_in)?);

                    let dh_sem = mul(&dhs, &ft.h_in);
                    let dh_in = mul(&dhs, &ft.h_sem);
                    gfac.h_sem.add_outer(&dh_sem, s_hat)?;
                    gfac.h_in.add_outer(&dh_in, &st.h_prev)?;
                    add_into(&mut dh_prev, &fac.h_in.matvec_t(&dh_in)?);
                }
            }
        }

        apply(&mut dx, masks.map(|m| m.embed[t].as_slice()));
        grads.embedding.row_mut(sample.tokens[t])?.iter_mut().zip(&dx).for_each(|(g, v)| *g += v);

        if dh_prev.iter().chain(&dc_prev).any(|v| !v.is_finite()) {
            return Err(Error::numeric("hidden-state gradient", t));
        }
        dh_next = dh_prev;
        dc_next = dc_prev;
    }

    apply(&mut dh_next, masks.map(|m| m.entry.as_slice()));
    let da_h: Vec<f64> = dh_next
        .iter()
        .zip(&trace.h0)
        .map(|(g, h)| g * (1.0 - h * h))
        .collect();
    let da_c: Vec<f64> = dc_next
        .iter()
        .zip(&trace.c0)
        .map(|(g, c)| g * (1.0 - c * c))
        .collect();
    grads.init_h.w.add_outer(&da_h, &trace.visual_in)?;
    add_bias(&mut grads.init_h.b, &da_h)?;
    grads.init_c.w.add_outer(&da_c, &trace.visual_in)?;
    add_bias(&mut grads.init_c.b, &da_c)?;

    Ok(trace.loss)
}

/// Gradient of the mean batch loss with respect to every parameter tensor.
///
/// Samples are processed in parallel; per-sample gradients are then summed
/// in batch order, so results do not depend on thread scheduling. `masks`,
/// when given, holds one entry per sample.
pub fn backward(
    params: &CellParams,
    batch: &[Sample<'_>],
    kind: LossKind,
    masks: Option<&[Option<DropoutMasks>]>,
) -> Result<BatchGradient> {
    if batch.is_empty() {
        return Err(Error::Domain("empty batch".into()));
    }
    if let Some(m) = masks {
        if m.len() != batch.len() {
            return Err(Error::shape(&[m.len()], &[batch.len()], "dropout masks vs batch"));
        }
    }
    let weight = 1.0 / batch.len() as f64;
    let per_sample: Vec<Result<(f64, CellParams)>> = batch
        .par_iter()
        .enumerate()
        .map(|(j, sample)| {
            let mut g = CellParams::zeros(params.config())?;
            let mask = masks.and_then(|m| m[j].as_ref());
            let loss = backward_sample(params, sample, kind, mask, weight, &mut g)?;
            Ok((loss, g))
        })
        .collect();

    let mut grads = CellParams::zeros(params.config())?;
    let mut loss = 0.0;
    for result in per_sample {
        let (l, g) = result?;
        loss += l;
        grads.axpy(1.0, &g)?;
    }
    for (name, t) in grads.named_tensors() {
        if !t.is_finite() {
            return Err(Error::numeric(format!("gradient of {name}"), 0));
        }
    }
    Ok(BatchGradient {
        loss: loss * weight,
        grads,
    })
}
