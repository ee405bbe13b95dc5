//! The four inference setups behind one trait, looked up by name.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elman::{ActivationMode, ElmanModel, ElmanParams};
use crate::error::{Error, Result};
use crate::hw::CoreConfig;
use crate::linalg::argmax;
use crate::quant::QuantizedNet;
use crate::sim::{decode_counts, encode_word, run_sentence, SentenceRun, SimOptions, SpikeEncoder};

/// Rows of the comparison table, in table order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SetupKind {
    #[serde(rename = "FLOAT32_FULL")]
    Float32Full,
    #[serde(rename = "Q4_WEIGHTS")]
    Q4Weights,
    #[serde(rename = "Q4_WEIGHTS_Q4_HIDDEN")]
    Q4WeightsQ4Hidden,
    #[serde(rename = "SPIKING")]
    Spiking,
}

impl SetupKind {
    pub const ALL: [SetupKind; 4] = [
        SetupKind::Float32Full,
        SetupKind::Q4Weights,
        SetupKind::Q4WeightsQ4Hidden,
        SetupKind::Spiking,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SetupKind::Float32Full => "FLOAT32_FULL",
            SetupKind::Q4Weights => "Q4_WEIGHTS",
            SetupKind::Q4WeightsQ4Hidden => "Q4_WEIGHTS_Q4_HIDDEN",
            SetupKind::Spiking => "SPIKING",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            SetupKind::Float32Full => "ReLUs, 32bit weights, 32bit hidden state",
            SetupKind::Q4Weights => "ReLUs, scaled 4bit weights, 32bit hidden state",
            SetupKind::Q4WeightsQ4Hidden => "ReLUs, scaled 4bit weights, 4bit hidden state",
            SetupKind::Spiking => "spiking neurons, scaled 4bit weights, 4bit spiking hidden state",
        }
    }

    /// Accuracy published for the original hardware experiment, kept for
    /// orientation only.
    pub fn reference_accuracy(self) -> f64 {
        match self {
            SetupKind::Float32Full => 0.85,
            SetupKind::Q4Weights => 0.722,
            SetupKind::Q4WeightsQ4Hidden => 0.784,
            SetupKind::Spiking => 0.74,
        }
    }
}

impl fmt::Display for SetupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SetupKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown setup {s:?}")))
    }
}

/// Everything a setup may need. Setups that need an artifact that is absent
/// fail at construction.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub model: Option<ElmanModel>,
    pub quantized: Option<QuantizedNet>,
    pub core: Option<CoreConfig>,
}

impl Artifacts {
    fn model(&self, who: SetupKind) -> Result<&ElmanModel> {
        self.model
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{who} needs a trained model")))
    }

    fn quantized(&self, who: SetupKind) -> Result<&QuantizedNet> {
        self.quantized
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{who} needs a quantized network")))
    }

    fn core(&self, who: SetupKind) -> Result<&CoreConfig> {
        self.core
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{who} needs a core configuration")))
    }
}

/// A way of turning an embedded sentence into class scores.
pub trait Setup: Send + Sync {
    fn kind(&self) -> SetupKind;

    /// Class scores for one sentence. `index` is the sentence's position in
    /// its data set and seeds any randomness.
    fn scores(&self, sentence: &[Vec<f64>], index: usize, seed: u64) -> Result<Vec<f64>>;

    fn predict(&self, sentence: &[Vec<f64>], index: usize, seed: u64) -> Result<usize> {
        Ok(argmax(&self.scores(sentence, index, seed)?))
    }
}

struct Rate {
    kind: SetupKind,
    params: ElmanParams,
    mode: ActivationMode,
}

impl Setup for Rate {
    fn kind(&self) -> SetupKind {
        self.kind
    }

    fn scores(&self, sentence: &[Vec<f64>], _index: usize, _seed: u64) -> Result<Vec<f64>> {
        Ok(self.params.forward_sentence(sentence, self.mode)?.0)
    }
}

/// Projection and readout off-core, recurrent layer simulated tick by tick.
pub struct SpikingSetup {
    net: QuantizedNet,
    core: CoreConfig,
    sim: SimOptions,
    encoder: Box<dyn SpikeEncoder>,
}

impl SpikingSetup {
    pub fn new(net: QuantizedNet, core: CoreConfig, sim: SimOptions) -> Result<Self> {
        sim.validate()?;
        core.validate()?;
        if core.n_inputs != net.n_inputs() || core.neurons_used != net.n_hidden() {
            return Err(Error::Config(format!(
                "core maps {}→{} but the network is {}→{}",
                core.n_inputs,
                core.neurons_used,
                net.n_inputs(),
                net.n_hidden()
            )));
        }
        let encoder = sim.make_encoder()?;
        Ok(Self {
            net,
            core,
            sim,
            encoder,
        })
    }

    pub fn options(&self) -> &SimOptions {
        &self.sim
    }

    /// Runs the sentence on the core. The generator for sentence `index` is
    /// seeded with `seed ^ index`.
    pub fn run(&self, sentence: &[Vec<f64>], index: usize, seed: u64) -> Result<SentenceRun> {
        crate::elman::check_sentence(sentence)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index as u64);
        let c = self.net.calibration;
        let trains = sentence
            .iter()
            .map(|x| {
                let p = relu_project(&self.net.w_proj, x)?;
                encode_word(&p, c, self.sim.window, self.encoder.as_ref(), &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        run_sentence(&self.core, &trains, &self.sim)
    }

    /// Class scores from the end-of-sentence window counts alone.
    pub fn scores_from_counts(&self, final_counts: &[u8]) -> Result<Vec<f64>> {
        let h = decode_counts(final_counts, self.sim.window, self.net.calibration)?;
        let logits = self.net.w_out.mul_vec(h.as_slice())?;
        Ok(crate::linalg::softmax(&logits))
    }
}

fn relu_project(w_proj: &crate::linalg::Matrix, x: &[f64]) -> Result<Vec<f64>> {
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::Input(format!("word vector contains {v}")));
    }
    Ok(w_proj
        .mul_vec(x)?
        .into_iter()
        .map(crate::linalg::relu)
        .collect())
}

impl Setup for SpikingSetup {
    fn kind(&self) -> SetupKind {
        SetupKind::Spiking
    }

    fn scores(&self, sentence: &[Vec<f64>], index: usize, seed: u64) -> Result<Vec<f64>> {
        let run = self.run(sentence, index, seed)?;
        self.scores_from_counts(run.final_counts())
    }
}

pub type SetupFactory = fn(&Artifacts, &SimOptions) -> Result<Box<dyn Setup>>;

/// Name → constructor table for setups.
pub struct SetupRegistry {
    factories: BTreeMap<String, SetupFactory>,
}

impl SetupRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(SetupKind::Float32Full.name(), |a, _| {
            let m = a.model(SetupKind::Float32Full)?;
            Ok(Box::new(Rate {
                kind: SetupKind::Float32Full,
                params: m.params.clone(),
                mode: ActivationMode::Continuous,
            }))
        });
        reg.register(SetupKind::Q4Weights.name(), |a, _| {
            let q = a.quantized(SetupKind::Q4Weights)?;
            Ok(Box::new(Rate {
                kind: SetupKind::Q4Weights,
                params: q.dequantized_params(),
                mode: ActivationMode::Continuous,
            }))
        });
        reg.register(SetupKind::Q4WeightsQ4Hidden.name(), |a, _| {
            let q = a.quantized(SetupKind::Q4WeightsQ4Hidden)?;
            Ok(Box::new(Rate {
                kind: SetupKind::Q4WeightsQ4Hidden,
                params: q.dequantized_params(),
                mode: ActivationMode::Quantized {
                    calibration: q.calibration,
                },
            }))
        });
        reg.register(SetupKind::Spiking.name(), |a, sim| {
            let q = a.quantized(SetupKind::Spiking)?;
            let core = a.core(SetupKind::Spiking)?;
            Ok(Box::new(SpikingSetup::new(
                q.clone(),
                core.clone(),
                sim.clone(),
            )?))
        });
        reg
    }

    pub fn register(&mut self, name: &str, factory: SetupFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn create(
        &self,
        name: &str,
        artifacts: &Artifacts,
        sim: &SimOptions,
    ) -> Result<Box<dyn Setup>> {
        let f = self.factories.get(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown setup {name:?}; available: {}",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        f(artifacts, sim)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.factories.keys().map(String::as_str)
    }
}
