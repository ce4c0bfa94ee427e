use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Lstm,
    /// Hidden state revised by a tag fusion before every step.
    Gst,
    /// Every gate sees factored, tag-modulated input and hidden contexts.
    Gsscn,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Lstm, Variant::Gst, Variant::Gsscn];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Lstm => "lstm",
            Variant::Gst => "gst",
            Variant::Gsscn => "gsscn",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Variant::Lstm => "LSTM",
            Variant::Gst => "GST-LSTM",
            Variant::Gsscn => "GSSCN-LSTM",
        }
    }

    pub fn uses_semantics(self) -> bool {
        !matches!(self, Variant::Lstm)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lstm" => Ok(Variant::Lstm),
            "gst" | "gst-lstm" => Ok(Variant::Gst),
            "gsscn" | "gsscn-lstm" => Ok(Variant::Gsscn),
            other => Err(Error::Config(format!("unknown cell variant {other:?}"))),
        }
    }
}

/// Dimensions of one cell. `semantic` is required for GST and GSSCN,
/// `factor` only for GSSCN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub variant: Variant,
    pub hidden: usize,
    pub embed: usize,
    pub semantic: Option<usize>,
    pub visual: usize,
    pub factor: Option<usize>,
    pub vocab: usize,
}

impl CellConfig {
    pub fn lstm(hidden: usize, embed: usize, visual: usize, vocab: usize) -> Self {
        CellConfig {
            variant: Variant::Lstm,
            hidden,
            embed,
            semantic: None,
            visual,
            factor: None,
            vocab,
        }
    }

    pub fn gst(hidden: usize, embed: usize, semantic: usize, visual: usize, vocab: usize) -> Self {
        CellConfig {
            variant: Variant::Gst,
            semantic: Some(semantic),
            ..CellConfig::lstm(hidden, embed, visual, vocab)
        }
    }

    pub fn gsscn(
        hidden: usize,
        embed: usize,
        semantic: usize,
        factor: usize,
        visual: usize,
        vocab: usize,
    ) -> Self {
        CellConfig {
            variant: Variant::Gsscn,
            semantic: Some(semantic),
            factor: Some(factor),
            ..CellConfig::lstm(hidden, embed, visual, vocab)
        }
    }

    /// Builds the config for `variant`, dropping dims it does not use.
    /// A missing factor dim defaults to `hidden / 4` (at least 1).
    pub fn for_variant(
        variant: Variant,
        hidden: usize,
        embed: usize,
        semantic: usize,
        factor: Option<usize>,
        visual: usize,
        vocab: usize,
    ) -> Self {
        match variant {
            Variant::Lstm => CellConfig::lstm(hidden, embed, visual, vocab),
            Variant::Gst => CellConfig::gst(hidden, embed, semantic, visual, vocab),
            Variant::Gsscn => CellConfig::gsscn(
                hidden,
                embed,
                semantic,
                factor.unwrap_or_else(|| default_factor(hidden)),
                visual,
                vocab,
            ),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("hidden", self.hidden),
            ("embed", self.embed),
            ("visual", self.visual),
            ("vocab", self.vocab),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::Config(format!("{name} dimension must be positive")));
            }
        }
        match (self.variant.uses_semantics(), self.semantic) {
            (true, None) => {
                return Err(Error::Config(format!(
                    "{} needs a semantic dimension",
                    self.variant
                )))
            }
            (false, Some(_)) => {
                return Err(Error::Config("lstm takes no semantic dimension".into()))
            }
            (_, Some(0)) => return Err(Error::Config("semantic dimension must be positive".into())),
            _ => {}
        }
        match (self.variant, self.factor) {
            (Variant::Gsscn, None) => Err(Error::Config("gsscn needs a factor dimension".into())),
            (Variant::Gsscn, Some(0)) => {
                Err(Error::Config("factor dimension must be positive".into()))
            }
            (Variant::Gsscn, Some(_)) | (_, None) => Ok(()),
            (v, Some(_)) => Err(Error::Config(format!("{v} takes no factor dimension"))),
        }
    }

    pub(crate) fn semantic_dim(&self) -> usize {
        self.semantic.unwrap_or(0)
    }

    pub(crate) fn factor_dim(&self) -> usize {
        self.factor.unwrap_or(0)
    }

    /// Width of the vectors the gate projections consume: `(x side, h side)`.
    pub(crate) fn gate_inputs(&self) -> (usize, usize) {
        match self.variant {
            Variant::Gsscn => (self.factor_dim(), self.factor_dim()),
            _ => (self.embed, self.hidden),
        }
    }
}

pub fn default_factor(hidden: usize) -> usize {
    (hidden / 4).max(1)
}

/// Number of scalar parameters implied by `config`, from the shape formulas
/// alone.
pub fn param_count(config: &CellConfig) -> usize {
    let d = config.hidden;
    let m = config.embed;
    let v = config.visual;
    let vocab = config.vocab;
    let s = config.semantic_dim();
    let f = config.factor_dim();

    let (gx, gh) = match config.variant {
        Variant::Gsscn => (f, f),
        _ => (m, d),
    };
    let gates = 4 * (d * gx + d * gh + d);
    let output = vocab * d;
    let embedding = vocab * m;
    let init_mlp = 2 * (d * v + d);
    let extras = match config.variant {
        Variant::Lstm => 0,
        Variant::Gst => d * s + d * d,
        Variant::Gsscn => 4 * (f * s + f * m + f * s + f * d),
    };
    gates + output + embedding + init_mlp + extras
}
