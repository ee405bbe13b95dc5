//! Tick-accurate simulation of the mapped recurrent layer.
//!
//! Each word is presented for one window of `W = delay + 1` ticks. A hidden
//! neuron that fires at tick `t` reaches its feedback rows at `t + delay + 1`,
//! i.e. at the same offset inside the next word's window, so the delay line
//! carries the previous word's hidden state.
//!
//! Per tick and per neuron the order is fixed: integrate every arrival, clamp
//! a negative membrane to zero, then fire once and subtract the threshold if
//! `V ≥ T`. Charge beyond one spike stays on the membrane for later ticks.

pub mod encode;
#[cfg(test)]
mod props;
mod raster;

use serde::{Deserialize, Serialize};

use crate::elman::HiddenState;
use crate::error::{Error, Result};
use crate::hw::{AxonSource, Bits256, CoreConfig, MAX_DELAY};

pub use encode::{
    encode_word, target_counts, Deterministic, DeterministicLeading, EncoderRegistry, Poisson,
    SpikeEncoder, SpikeTrain, MAX_WINDOW,
};
pub use raster::{render_ascii, SpikeEvent, SpikeRaster};

/// When membrane state is cleared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ResetPolicy {
    /// Clear membranes and the delay line only at the start of a sentence.
    PerSentence,
    /// Also clear membranes at every word boundary; in-flight feedback spikes
    /// are kept so the previous word's state still arrives.
    PerWord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Name in the [`EncoderRegistry`].
    pub encoder: String,
    pub seed: u64,
    pub reset: ResetPolicy,
    pub window: usize,
    pub delay: u8,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            encoder: "deterministic-leading".into(),
            seed: 0,
            reset: ResetPolicy::PerSentence,
            window: 16,
            delay: MAX_DELAY,
        }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<()> {
        if self.delay > MAX_DELAY {
            return Err(Error::Config(format!(
                "delay {} exceeds {MAX_DELAY}",
                self.delay
            )));
        }
        if self.window != self.delay as usize + 1 {
            return Err(Error::Config(format!(
                "word window ({}) must equal delay + 1 ({})",
                self.window,
                self.delay as usize + 1
            )));
        }
        Ok(())
    }

    pub fn make_encoder(&self) -> Result<Box<dyn SpikeEncoder>> {
        EncoderRegistry::builtin().create(&self.encoder)
    }
}

/// Membrane potential of one neuron.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NeuronState {
    pub potential: i32,
}

/// Advances every used neuron by one tick. `arriving` holds the axon rows
/// that deliver a spike this tick. Returns which neurons fired.
pub fn tick(core: &CoreConfig, states: &mut [NeuronState], arriving: &Bits256) -> Vec<bool> {
    debug_assert_eq!(states.len(), core.neurons_used);
    for row in arriving.ones() {
        let weight = core.axons[row].axon_type.value();
        let connections = &core.crossbar[row];
        for (j, state) in states.iter_mut().enumerate() {
            if connections.get(j) {
                state.potential += weight;
            }
        }
    }
    states
        .iter_mut()
        .map(|s| {
            if s.potential < 0 {
                s.potential = 0;
            }
            if s.potential >= core.threshold {
                s.potential -= core.threshold;
                true
            } else {
                false
            }
        })
        .collect()
}

/// Outcome of one sentence presentation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentenceRun {
    /// Spike count of every hidden neuron in every word window.
    pub counts: Vec<Vec<u8>>,
    pub raster: SpikeRaster,
    /// Membrane potentials after the last tick.
    pub residual: Vec<i32>,
}

impl SentenceRun {
    /// Counts of the last (end-of-sentence) window.
    pub fn final_counts(&self) -> &[u8] {
        self.counts.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// One line per word, comma-separated counts.
    pub fn counts_csv(&self) -> String {
        let mut out = String::new();
        for word in &self.counts {
            let line: Vec<String> = word.iter().map(u8::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

const SLOTS: usize = MAX_DELAY as usize + 2;

/// Runs one sentence through the core. `word_trains[w][i]` is the spike train
/// of input `i` during word `w`; the last word must be silent (end of sentence).
pub fn run_sentence(
    core: &CoreConfig,
    word_trains: &[Vec<SpikeTrain>],
    opts: &SimOptions,
) -> Result<SentenceRun> {
    opts.validate()?;
    core.validate()?;
    if let Some(d) = core.feedback_delay() {
        if d != opts.delay {
            return Err(Error::Config(format!(
                "core feedback delay {d} does not match simulation delay {}",
                opts.delay
            )));
        }
    } else if core
        .axons
        .iter()
        .any(|a| matches!(a.source, AxonSource::Hidden(_)))
    {
        return Err(Error::Config(
            "feedback rows disagree on their delay".into(),
        ));
    }
    match word_trains.last() {
        None => return Err(Error::Input("sentence has no words".into())),
        Some(eos) if eos.iter().any(|t| t.count() > 0) => {
            return Err(Error::Input(
                "last word must be the silent end-of-sentence window".into(),
            ))
        }
        _ => {}
    }
    for (w, trains) in word_trains.iter().enumerate() {
        if trains.len() != core.n_inputs {
            return Err(Error::Dimension {
                context: "spike trains per word",
                expected: core.n_inputs,
                actual: trains.len(),
            });
        }
        if trains
            .iter()
            .any(|t| t.ticks().any(|tick| tick >= opts.window))
        {
            return Err(Error::Input(format!(
                "word {w} has spikes outside the {}-tick window",
                opts.window
            )));
        }
    }

    let n_hid = core.neurons_used;
    let mut input_rows: Vec<Vec<(usize, usize)>> = vec![Vec::new(); core.n_inputs];
    let mut feedback_rows: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_hid];
    for (row, axon) in core.axons.iter().enumerate() {
        match axon.source {
            AxonSource::Input(i) => input_rows[i].push((row, axon.delay as usize)),
            AxonSource::Hidden(k) => feedback_rows[k].push((row, axon.delay as usize + 1)),
            AxonSource::Unused => {}
        }
    }

    let mut pending = [Bits256::default(); SLOTS];
    let mut states = vec![NeuronState::default(); n_hid];
    let mut counts = vec![vec![0u8; n_hid]; word_trains.len()];
    let mut raster = SpikeRaster::default();

    for (w, trains) in word_trains.iter().enumerate() {
        if w > 0 && opts.reset == ResetPolicy::PerWord {
            states.fill(NeuronState::default());
        }
        for offset in 0..opts.window {
            let t = w * opts.window + offset;
            for (i, train) in trains.iter().enumerate() {
                if train.spikes_at(offset) {
                    for &(row, delay) in &input_rows[i] {
                        pending[(t + delay) % SLOTS].set(row, true);
                    }
                }
            }
            let arriving = std::mem::take(&mut pending[t % SLOTS]);
            let fired = tick(core, &mut states, &arriving);
            for (k, _) in fired.iter().enumerate().filter(|(_, f)| **f) {
                raster.push(t as u64, k as u16);
                counts[w][k] += 1;
                for &(row, lag) in &feedback_rows[k] {
                    pending[(t + lag) % SLOTS].set(row, true);
                }
            }
        }
    }

    Ok(SentenceRun {
        counts,
        raster,
        residual: states.iter().map(|s| s.potential).collect(),
    })
}

/// `ĥⱼ = c · countⱼ / W`
pub fn decode_counts(counts: &[u8], window: usize, calibration: f64) -> Result<HiddenState> {
    if calibration.is_nan() || calibration <= 0.0 {
        return Err(Error::Config(format!(
            "calibration must be positive, got {calibration}"
        )));
    }
    counts
        .iter()
        .map(|&n| {
            if n as usize > window {
                Err(Error::OutOfRange {
                    value: n as i64,
                    min: 0,
                    max: window as i64,
                })
            } else {
                Ok(calibration * n as f64 / window as f64)
            }
        })
        .collect::<Result<Vec<_>>>()
        .and_then(HiddenState::new)
}
