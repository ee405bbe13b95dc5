//! Bias-free ReLU Elman network.
//!
//! Word vector → projection layer (ReLU) → recurrent layer (ReLU, feeds back
//! into itself) → softmax readout. There are no bias terms anywhere, so every
//! hidden activation is a positively homogeneous function of the input.

mod train;

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, write_string, Error, Result};
use crate::linalg::{relu, softmax, Matrix};

pub use train::{
    bptt_train, calibrate, gradients, sentence_loss, train_from, Example, TrainConfig, TrainReport,
};

/// Number of distinct non-zero activation levels of a quantized hidden unit.
pub const ACTIVATION_LEVELS: u32 = 16;

/// Layer widths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub embedding: usize,
    pub projection: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Self {
            embedding: 64,
            projection: 48,
            hidden: 16,
            classes: 6,
        }
    }
}

impl Dims {
    pub fn parameter_count(&self) -> usize {
        self.embedding * self.projection
            + self.projection * self.hidden
            + self.hidden * self.hidden
            + self.hidden * self.classes
    }
}

/// Weight matrices of the network. Also used as the gradient container.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElmanParams {
    pub w_proj: Matrix,
    pub w_in: Matrix,
    pub w_rec: Matrix,
    pub w_out: Matrix,
}

/// How the recurrent layer turns its pre-activation into an output.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ActivationMode {
    Continuous,
    /// 16-level staircase spanning `[0, calibration]`.
    Quantized {
        calibration: f64,
    },
}

/// Post-ReLU state of the recurrent layer.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenState(Vec<f64>);

impl HiddenState {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// Rejects negative or non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Input(format!(
                "hidden activation {v} is not a finite non-negative value"
            )));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// `(c/16)·clamp(floor(16·y/c), 0, 16)`.
pub fn quantized_relu(y: f64, calibration: f64) -> Result<f64> {
    if !(calibration > 0.0 && calibration.is_finite()) {
        return Err(Error::Config(format!(
            "activation calibration must be positive, got {calibration}"
        )));
    }
    Ok(quantize_activation(y, calibration))
}

#[inline]
fn quantize_activation(y: f64, c: f64) -> f64 {
    let levels = ACTIVATION_LEVELS as f64;
    let unit = c / levels;
    let mut step = (levels * y / c).floor();
    // The division can land a hair off an exact grid value; settle the level
    // against the grid itself so that grid points map to themselves.
    if unit * (step + 1.0) <= y {
        step += 1.0;
    } else if unit * step > y {
        step -= 1.0;
    }
    unit * step.clamp(0.0, levels)
}

impl ActivationMode {
    fn validate(self) -> Result<Self> {
        if let ActivationMode::Quantized { calibration } = self {
            quantized_relu(0.0, calibration)?;
        }
        Ok(self)
    }

    #[inline]
    fn apply(self, y: f64) -> f64 {
        match self {
            ActivationMode::Continuous => relu(y),
            ActivationMode::Quantized { calibration } => quantize_activation(y, calibration),
        }
    }
}

impl ElmanParams {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            w_proj: Matrix::zeros(dims.projection, dims.embedding),
            w_in: Matrix::zeros(dims.hidden, dims.projection),
            w_rec: Matrix::zeros(dims.hidden, dims.hidden),
            w_out: Matrix::zeros(dims.classes, dims.hidden),
        }
    }

    /// Glorot-uniform initialisation.
    pub fn glorot<R: Rng + ?Sized>(dims: Dims, rng: &mut R) -> Self {
        fn init<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            Matrix::from_fn(rows, cols, |_, _| rng.random_range(-limit..limit))
        }
        Self {
            w_proj: init(dims.projection, dims.embedding, rng),
            w_in: init(dims.hidden, dims.projection, rng),
            w_rec: init(dims.hidden, dims.hidden, rng),
            w_out: init(dims.classes, dims.hidden, rng),
        }
    }

    /// Checks that the four matrices chain together and returns their widths.
    pub fn dims(&self) -> Result<Dims> {
        let dims = Dims {
            embedding: self.w_proj.cols(),
            projection: self.w_proj.rows(),
            hidden: self.w_in.rows(),
            classes: self.w_out.rows(),
        };
        let checks = [
            ("W_in columns", dims.projection, self.w_in.cols()),
            ("W_rec rows", dims.hidden, self.w_rec.rows()),
            ("W_rec columns", dims.hidden, self.w_rec.cols()),
            ("W_out columns", dims.hidden, self.w_out.cols()),
        ];
        for (context, expected, actual) in checks {
            if expected != actual {
                return Err(Error::Dimension {
                    context,
                    expected,
                    actual,
                });
            }
        }
        Ok(dims)
    }

    pub fn matrices(&self) -> [&Matrix; 4] {
        [&self.w_proj, &self.w_in, &self.w_rec, &self.w_out]
    }

    pub fn matrices_mut(&mut self) -> [&mut Matrix; 4] {
        [
            &mut self.w_proj,
            &mut self.w_in,
            &mut self.w_rec,
            &mut self.w_out,
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.matrices().iter().map(|m| m.rows() * m.cols()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.matrices().iter().all(|m| m.all_finite())
    }

    /// `ReLU(W_proj · x)`
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("word vector contains {v}")));
        }
        Ok(self.w_proj.mul_vec(x)?.into_iter().map(relu).collect())
    }

    /// Recurrent pre-activation `W_in·p + W_rec·h_prev`.
    pub fn pre_activation(&self, p: &[f64], h_prev: &HiddenState) -> Result<Vec<f64>> {
        let mut z = self.w_in.mul_vec(p)?;
        let rec = self.w_rec.mul_vec(h_prev.as_slice())?;
        for (zi, ri) in z.iter_mut().zip(rec) {
            *zi += ri;
        }
        Ok(z)
    }

    pub fn recurrent_step(
        &self,
        p: &[f64],
        h_prev: &HiddenState,
        mode: ActivationMode,
    ) -> Result<HiddenState> {
        let mode = mode.validate()?;
        let z = self.pre_activation(p, h_prev)?;
        Ok(HiddenState(z.into_iter().map(|y| mode.apply(y)).collect()))
    }

    /// Raw readout `W_out · h`.
    pub fn logits(&self, h: &HiddenState) -> Result<Vec<f64>> {
        self.w_out.mul_vec(h.as_slice())
    }

    /// `softmax(W_out · h)`
    pub fn classify(&self, h: &HiddenState) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(h)?))
    }

    /// Runs a whole sentence from a zero hidden state. The sentence must end
    /// with the all-zero end-of-sentence vector; classification reads the
    /// hidden state after that step.
    pub fn forward_sentence(
        &self,
        sentence: &[Vec<f64>],
        mode: ActivationMode,
    ) -> Result<(Vec<f64>, Vec<HiddenState>)> {
        check_sentence(sentence)?;
        let mode = mode.validate()?;
        let mut h = HiddenState::zeros(self.w_rec.rows());
        let mut states = Vec::with_capacity(sentence.len());
        for x in sentence {
            let p = self.project(x)?;
            let z = self.pre_activation(&p, &h)?;
            h = HiddenState(z.into_iter().map(|y| mode.apply(y)).collect());
            states.push(h.clone());
        }
        let probs = self.classify(&h)?;
        Ok((probs, states))
    }
}

pub(crate) fn check_sentence(sentence: &[Vec<f64>]) -> Result<()> {
    match sentence.last() {
        None => Err(Error::Input("sentence is empty".into())),
        Some(last) if last.iter().any(|&v| v != 0.0) => Err(Error::Input(
            "sentence must end with the all-zero end-of-sentence vector".into(),
        )),
        Some(_) => Ok(()),
    }
}

pub const MODEL_FORMAT: &str = "spiking-rnn/elman-v1";

/// A trained network together with the constants derived from training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElmanModel {
    pub format: String,
    /// Seed used for initialisation and shuffling.
    pub seed: u64,
    /// Largest recurrent pre-activation seen on the training set; spans the
    /// 16 activation levels.
    pub calibration: f64,
    #[serde(flatten)]
    pub params: ElmanParams,
}

impl ElmanModel {
    pub fn new(params: ElmanParams, calibration: f64, seed: u64) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            seed,
            calibration,
            params,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ElmanModel = serde_json::from_str(text)?;
        if model.format != MODEL_FORMAT {
            return Err(Error::Config(format!(
                "unsupported model format {:?} (expected {MODEL_FORMAT:?})",
                model.format
            )));
        }
        model.params.dims()?;
        if !model.params.all_finite() {
            return Err(Error::Config("model contains non-finite weights".into()));
        }
        quantized_relu(0.0, model.calibration)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_string(path, &self.to_json()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_to_string(path)?)
    }
}
