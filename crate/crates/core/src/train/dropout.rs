use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cell::CellConfig;
use crate::error::{Error, Result};

/// Inverted-dropout masks for one training sequence. Kept entries are
/// scaled by `1 / (1 - rate)` so inference runs unscaled.
///
/// Sites: image features, the initial hidden state entering the decoder,
/// each step's word embedding, and each step's hidden output before the
/// vocabulary projection.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    pub visual: Vec<f64>,
    pub entry: Vec<f64>,
    pub embed: Vec<Vec<f64>>,
    pub exit: Vec<Vec<f64>>,
}

impl DropoutMasks {
    /// `None` at rate 0, so a disabled dropout never touches the numbers.
    pub fn sample(config: &CellConfig, steps: usize, rate: f64, seed: u64) -> Result<Option<Self>> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate must lie in [0, 1), got {rate}")));
        }
        if rate == 0.0 {
            return Ok(None);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let keep = 1.0 / (1.0 - rate);
        let mut mask = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
                .collect()
        };
        let visual = mask(config.visual);
        let entry = mask(config.hidden);
        let embed = (0..steps).map(|_| mask(config.embed)).collect();
        let exit = (0..steps).map(|_| mask(config.hidden)).collect();
        Ok(Some(DropoutMasks {
            visual,
            entry,
            embed,
            exit,
        }))
    }
}

pub(crate) fn apply(v: &mut [f64], mask: Option<&[f64]>) {
    if let Some(m) = mask {
        for (x, k) in v.iter_mut().zip(m) {
            *x *= k;
        }
    }
}
