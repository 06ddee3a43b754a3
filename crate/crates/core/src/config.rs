//! Run configuration: every module's settings in one TOML file.
//!
//! A file only needs the keys it changes. It is overlaid on the defaults, and
//! keys that no setting recognizes are rejected.
//!
//! ```toml
//! seed = 7
//! fs = 60.0
//! [vmd]
//! k_modes = 3
//! [label]
//! damping_ratio_threshold = 0.05
//! [encoder]
//! scale_preset = "desk"
//! epochs = 20
//! ```

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::encoder::{EncoderConfig, ScalePreset};
use crate::error::{Error, Result};
use crate::mmd::KernelConfig;
use crate::prony::{labeling_vmd_config, LabelConfig};
use crate::synth::CorpusConfig;
use crate::vmd::VmdConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds data generation, splitting and noise.
    pub seed: u64,
    /// Sampling rate assumed for CSV input, which carries none.
    pub fs: f64,
    /// Decomposition used by `decompose` and `augment`.
    pub vmd: VmdConfig,
    /// Decomposition used inside the labeler.
    pub labeling_vmd: VmdConfig,
    pub label: LabelConfig,
    pub kernel: KernelConfig,
    pub encoder: EncoderConfig,
    pub corpus: CorpusConfig,
}

impl RunConfig {
    pub fn with_scale(scale: ScalePreset) -> Self {
        Self {
            seed: 0,
            fs: 60.0,
            vmd: VmdConfig::default(),
            labeling_vmd: labeling_vmd_config(),
            label: LabelConfig::default(),
            kernel: KernelConfig::default(),
            encoder: EncoderConfig::preset(scale),
            corpus: CorpusConfig::default(),
        }
    }

    /// Defaults for `scale` (or the file's `encoder.scale_preset`, else
    /// desk), overlaid with the TOML text. Unless the file sets
    /// `encoder.seed`, the encoder shares the top-level seed.
    pub fn resolve(toml_text: Option<&str>, scale: Option<ScalePreset>) -> Result<Self> {
        let file = match toml_text {
            Some(text) => {
                let table: toml::Table =
                    toml::from_str(text).map_err(|e| Error::Config(format!("bad TOML: {e}")))?;
                serde_json::to_value(table)?
            }
            None => Value::Object(Default::default()),
        };
        let file_scale = match file.pointer("/encoder/scale_preset") {
            Some(v) => Some(
                serde_json::from_value::<ScalePreset>(v.clone())
                    .map_err(|e| Error::Config(format!("encoder.scale_preset: {e}")))?,
            ),
            None => None,
        };
        let mut merged = serde_json::to_value(Self::with_scale(scale.or(file_scale).unwrap_or(ScalePreset::Desk)))?;
        overlay(&mut merged, &file);
        if let Some(s) = scale {
            merged["encoder"]["scale_preset"] = serde_json::to_value(s)?;
        }
        let mut cfg: Self = serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))?;
        if file.pointer("/encoder/seed").is_none() {
            cfg.encoder.seed = cfg.seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::Config(format!("fs must be positive, got {}", self.fs)));
        }
        self.vmd.validate()?;
        self.labeling_vmd.validate()?;
        self.kernel.validate()?;
        self.encoder.validate()
    }
}

/// Recursively writes `top` over `base`. Keys missing from `base` are added,
/// so strict deserialization afterwards reports them.
fn overlay(base: &mut Value, top: &Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(k) {
                    Some(slot) => overlay(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}
