use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::onlstm::MasterInput;

/// Where the ON-LSTM gets its per-sentence inputs when predicting sentence `l`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextMode {
    /// The process BiLSTM is re-run on sentences `1..l-1` only, so the
    /// backward direction never sees the sentence being predicted.
    #[default]
    Prefix,
    /// One process BiLSTM pass over the whole document.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmConfig {
    pub emb_dim: usize,
    /// Per-direction size of both BiLSTMs.
    pub hidden: usize,
    pub sentence_layers: usize,
    pub onlstm_layers: usize,
    /// ON-LSTM hidden size `D_m`.
    pub d_m: usize,
    pub chunk: usize,
    pub decoder_hidden: usize,
    pub dropout: f64,
    pub lr: f64,
    pub clip: f64,
    pub epochs: usize,
    /// Documents per update.
    pub batch_size: usize,
    pub seed: u64,
    pub master_input: MasterInput,
    pub context: ContextMode,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            emb_dim: 300,
            hidden: 32,
            sentence_layers: 3,
            onlstm_layers: 3,
            d_m: 64,
            chunk: 8,
            decoder_hidden: 64,
            dropout: 0.1,
            lr: 1.0,
            clip: 0.25,
            epochs: 5,
            batch_size: 4,
            seed: 0,
            master_input: MasterInput::Independent,
            context: ContextMode::Prefix,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("emb_dim", self.emb_dim),
            ("hidden", self.hidden),
            ("sentence_layers", self.sentence_layers),
            ("onlstm_layers", self.onlstm_layers),
            ("d_m", self.d_m),
            ("chunk", self.chunk),
            ("decoder_hidden", self.decoder_hidden),
            ("batch_size", self.batch_size),
        ];
        for (name, v) in sizes {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.d_m % self.chunk != 0 {
            return Err(Error::Config(format!(
                "chunk {} does not divide d_m {}",
                self.chunk, self.d_m
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if !(self.clip > 0.0) {
            return Err(Error::Config(format!("clip norm {} must be positive", self.clip)));
        }
        Ok(())
    }
}
