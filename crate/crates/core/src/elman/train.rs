//! Backpropagation through time with per-sentence SGD updates.

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_sentence, Dims, ElmanParams};
use crate::error::{Error, Result};
use crate::linalg::{relu, softmax, Matrix};

/// One training sentence: embedded words (ending in the zero EOS vector) and
/// the class index.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub inputs: Vec<Vec<f64>>,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Number of steps gradients flow back from the EOS step. `None` unrolls
    /// the whole sentence.
    pub bptt_horizon: Option<usize>,
    pub seed: u64,
    /// `W_in` and `W_rec` are kept strictly inside `(-weight_clip, weight_clip)`.
    pub weight_clip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 100,
            bptt_horizon: None,
            seed: 0,
            weight_clip: 1.0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be a finite non-negative number, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.bptt_horizon == Some(0) {
            return Err(Error::Config("bptt horizon must be at least 1".into()));
        }
        if self.weight_clip.is_nan() || self.weight_clip <= 0.0 {
            return Err(Error::Config("weight clip must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub params: ElmanParams,
    /// Mean cross-entropy per epoch, measured while training.
    pub epoch_loss: Vec<f64>,
}

struct Trace {
    inputs_proj: Vec<Vec<f64>>,
    proj: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    hidden: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

fn forward_trace(params: &ElmanParams, inputs: &[Vec<f64>]) -> Trace {
    let n_hid = params.w_rec.rows();
    let mut h = vec![0.0; n_hid];
    let mut trace = Trace {
        inputs_proj: Vec::with_capacity(inputs.len()),
        proj: Vec::with_capacity(inputs.len()),
        pre: Vec::with_capacity(inputs.len()),
        hidden: Vec::with_capacity(inputs.len()),
        probs: Vec::new(),
    };
    for x in inputs {
        let a = params.w_proj.mul_vec_unchecked(x);
        let p: Vec<f64> = a.iter().copied().map(relu).collect();
        let mut z = params.w_in.mul_vec_unchecked(&p);
        for (zi, ri) in z.iter_mut().zip(params.w_rec.mul_vec_unchecked(&h)) {
            *zi += ri;
        }
        h = z.iter().copied().map(relu).collect();
        trace.inputs_proj.push(a);
        trace.proj.push(p);
        trace.pre.push(z);
        trace.hidden.push(h.clone());
    }
    trace.probs = softmax(&params.w_out.mul_vec_unchecked(&h));
    trace
}

fn check_example(dims: &Dims, ex: &Example) -> Result<()> {
    check_sentence(&ex.inputs)?;
    if ex.label >= dims.classes {
        return Err(Error::Input(format!(
            "label {} out of range for {} classes",
            ex.label, dims.classes
        )));
    }
    for x in &ex.inputs {
        if x.len() != dims.embedding {
            return Err(Error::Dimension {
                context: "word vector",
                expected: dims.embedding,
                actual: x.len(),
            });
        }
    }
    Ok(())
}

/// Cross-entropy of the EOS-step prediction.
pub fn sentence_loss(params: &ElmanParams, ex: &Example) -> Result<f64> {
    let dims = params.dims()?;
    check_example(&dims, ex)?;
    let trace = forward_trace(params, &ex.inputs);
    Ok(-trace.probs[ex.label].ln())
}

/// Loss and its gradient with respect to every weight.
pub fn gradients(
    params: &ElmanParams,
    ex: &Example,
    horizon: Option<usize>,
) -> Result<(f64, ElmanParams)> {
    let dims = params.dims()?;
    check_example(&dims, ex)?;
    let trace = forward_trace(params, &ex.inputs);
    let loss = -trace.probs[ex.label].ln();

    let mut grad = ElmanParams::zeros(dims);
    let steps = ex.inputs.len();
    let last = steps - 1;

    let mut d_logits = trace.probs.clone();
    d_logits[ex.label] -= 1.0;
    grad.w_out.add_outer(&d_logits, &trace.hidden[last]);
    let mut d_h = params.w_out.mul_vec_transposed(&d_logits);

    let zero_h = vec![0.0; dims.hidden];
    let first = horizon.map_or(0, |k| steps.saturating_sub(k));
    for t in (first..steps).rev() {
        let d_z: Vec<f64> = d_h
            .iter()
            .zip(&trace.pre[t])
            .map(|(&g, &z)| if z > 0.0 { g } else { 0.0 })
            .collect();
        let h_prev = if t == 0 {
            &zero_h
        } else {
            &trace.hidden[t - 1]
        };
        grad.w_in.add_outer(&d_z, &trace.proj[t]);
        grad.w_rec.add_outer(&d_z, h_prev);

        let d_p = params.w_in.mul_vec_transposed(&d_z);
        let d_a: Vec<f64> = d_p
            .iter()
            .zip(&trace.inputs_proj[t])
            .map(|(&g, &a)| if a > 0.0 { g } else { 0.0 })
            .collect();
        grad.w_proj.add_outer(&d_a, &ex.inputs[t]);

        d_h = params.w_rec.mul_vec_transposed(&d_z);
    }
    Ok((loss, grad))
}

fn clip_open(m: &mut Matrix, bound: f64) {
    let limit = bound * (1.0 - f64::EPSILON);
    for w in m.as_mut_slice() {
        *w = w.clamp(-limit, limit);
    }
}

/// Glorot initialisation from `cfg.seed`, then [`train_from`].
pub fn bptt_train(dataset: &[Example], dims: Dims, cfg: &TrainConfig) -> Result<TrainReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut init = ElmanParams::glorot(dims, &mut rng);
    clip_open(&mut init.w_in, cfg.weight_clip);
    clip_open(&mut init.w_rec, cfg.weight_clip);
    train_with_rng(init, dataset, cfg, &mut rng)
}

/// Continues training from `initial`, shuffling with a generator seeded from
/// `cfg.seed`.
pub fn train_from(
    initial: ElmanParams,
    dataset: &[Example],
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    train_with_rng(initial, dataset, cfg, &mut rng)
}

fn train_with_rng(
    mut params: ElmanParams,
    dataset: &[Example],
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrainReport> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    let dims = params.dims()?;
    for ex in dataset {
        check_example(&dims, ex)?;
    }

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for &idx in &order {
            let (loss, grad) = gradients(&params, &dataset[idx], cfg.bptt_horizon)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    sentence: idx,
                    loss,
                });
            }
            total += loss;
            if cfg.learning_rate == 0.0 {
                continue;
            }
            for (w, g) in params.matrices_mut().into_iter().zip(grad.matrices()) {
                for (wi, gi) in w.as_mut_slice().iter_mut().zip(g.as_slice()) {
                    *wi -= cfg.learning_rate * gi;
                }
            }
            clip_open(&mut params.w_in, cfg.weight_clip);
            clip_open(&mut params.w_rec, cfg.weight_clip);
        }
        if !params.all_finite() {
            return Err(Error::Diverged {
                epoch,
                sentence: dataset.len(),
                loss: f64::NAN,
            });
        }
        let mean = total / dataset.len() as f64;
        debug!("epoch {epoch}: mean loss {mean:.5}");
        epoch_loss.push(mean);
    }
    info!(
        "trained {} epochs on {} sentences, final mean loss {:.4}",
        cfg.epochs,
        dataset.len(),
        epoch_loss.last().copied().unwrap_or(f64::NAN)
    );
    Ok(TrainReport { params, epoch_loss })
}

/// Largest recurrent pre-activation over every step of every sentence.
/// Falls back to 1.0 when nothing is positive.
pub fn calibrate(params: &ElmanParams, dataset: &[Example]) -> Result<f64> {
    let dims = params.dims()?;
    let mut max = 0.0f64;
    for ex in dataset {
        check_example(&dims, ex)?;
        let trace = forward_trace(params, &ex.inputs);
        for z in trace.pre.iter().flatten() {
            max = max.max(*z);
        }
    }
    Ok(if max > 0.0 { max } else { 1.0 })
}
