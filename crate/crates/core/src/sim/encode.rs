//! Rate coding of projection-layer activations into per-word spike trains.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Longest word window the fabric supports (15-tick delay + 1 transmission tick).
pub const MAX_WINDOW: usize = 16;

/// Spikes of one source over one word window; bit `t` is tick `t`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SpikeTrain(u16);

impl SpikeTrain {
    pub const EMPTY: SpikeTrain = SpikeTrain(0);

    pub fn from_ticks(ticks: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = 0u16;
        for t in ticks {
            assert!(
                t < MAX_WINDOW,
                "tick {t} outside a {MAX_WINDOW}-tick window"
            );
            bits |= 1 << t;
        }
        SpikeTrain(bits)
    }

    #[inline]
    pub fn spikes_at(self, tick: usize) -> bool {
        tick < MAX_WINDOW && self.0 >> tick & 1 == 1
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn ticks(self) -> impl Iterator<Item = usize> {
        (0..MAX_WINDOW).filter(move |&t| self.spikes_at(t))
    }

    pub fn bits(self) -> u16 {
        self.0
    }
}

impl fmt::Display for SpikeTrain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in 0..MAX_WINDOW {
            f.write_str(if self.spikes_at(t) { "|" } else { "." })?;
        }
        Ok(())
    }
}

/// Turns target spike counts into spike trains for one word window.
pub trait SpikeEncoder: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether the output depends on the generator.
    fn is_stochastic(&self) -> bool;

    /// One train per entry of `counts`; each count is at most `window`.
    fn encode_counts(&self, counts: &[u8], window: usize, rng: &mut ChaCha8Rng) -> Vec<SpikeTrain>;
}

/// Exactly `n` spikes, spike at tick `t` iff `floor((t+1)·n/W) > floor(t·n/W)`.
/// Spikes fall at the end of each `W/n` interval.
#[derive(Clone, Copy, Debug, Default)]
pub struct Deterministic;

impl SpikeEncoder for Deterministic {
    fn name(&self) -> &'static str {
        "deterministic"
    }

    fn is_stochastic(&self) -> bool {
        false
    }

    fn encode_counts(
        &self,
        counts: &[u8],
        window: usize,
        _rng: &mut ChaCha8Rng,
    ) -> Vec<SpikeTrain> {
        counts
            .iter()
            .map(|&n| {
                let n = n as usize;
                SpikeTrain::from_ticks(
                    (0..window).filter(|&t| (t + 1) * n / window > t * n / window),
                )
            })
            .collect()
    }
}

/// Exactly `n` spikes, spike at tick `t` iff `ceil((t+1)·n/W) > ceil(t·n/W)`.
/// Same spacing as [`Deterministic`] but each spike opens its interval.
#[derive(Clone, Copy, Debug, Default)]
pub struct DeterministicLeading;

impl SpikeEncoder for DeterministicLeading {
    fn name(&self) -> &'static str {
        "deterministic-leading"
    }

    fn is_stochastic(&self) -> bool {
        false
    }

    fn encode_counts(
        &self,
        counts: &[u8],
        window: usize,
        _rng: &mut ChaCha8Rng,
    ) -> Vec<SpikeTrain> {
        let ceil_div = |a: usize, b: usize| a.div_ceil(b);
        counts
            .iter()
            .map(|&n| {
                let n = n as usize;
                SpikeTrain::from_ticks(
                    (0..window)
                        .filter(|&t| ceil_div((t + 1) * n, window) > ceil_div(t * n, window)),
                )
            })
            .collect()
    }
}

/// Independent per-tick Bernoulli draws with probability `n / W`. A true
/// Poisson process could put two spikes in one tick, which a binary axon
/// cannot carry.
#[derive(Clone, Copy, Debug, Default)]
pub struct Poisson;

impl SpikeEncoder for Poisson {
    fn name(&self) -> &'static str {
        "poisson"
    }

    fn is_stochastic(&self) -> bool {
        true
    }

    fn encode_counts(&self, counts: &[u8], window: usize, rng: &mut ChaCha8Rng) -> Vec<SpikeTrain> {
        counts
            .iter()
            .map(|&n| {
                let p = n as f64 / window as f64;
                SpikeTrain::from_ticks((0..window).filter(|_| rng.random_bool(p.min(1.0))))
            })
            .collect()
    }
}

type EncoderFactory = fn() -> Box<dyn SpikeEncoder>;

/// Encoders selectable by name.
pub struct EncoderRegistry {
    factories: BTreeMap<&'static str, EncoderFactory>,
}

impl EncoderRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("deterministic", || Box::new(Deterministic));
        reg.register("deterministic-leading", || Box::new(DeterministicLeading));
        reg.register("poisson", || Box::new(Poisson));
        reg
    }

    pub fn register(&mut self, name: &'static str, factory: EncoderFactory) {
        self.factories.insert(name, factory);
    }

    pub fn create(&self, name: &str) -> Result<Box<dyn SpikeEncoder>> {
        self.factories.get(name).map(|f| f()).ok_or_else(|| {
            Error::Config(format!(
                "unknown encoder {name:?}; available: {}",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }
}

/// `clamp(round(W·p/cal), 0, W)` per entry.
pub fn target_counts(p: &[f64], calibration: f64, window: usize) -> Result<Vec<u8>> {
    if !(calibration > 0.0 && calibration.is_finite()) {
        return Err(Error::Config(format!(
            "input calibration must be positive, got {calibration}"
        )));
    }
    if window == 0 || window > MAX_WINDOW {
        return Err(Error::Config(format!(
            "window must be in 1..={MAX_WINDOW}, got {window}"
        )));
    }
    p.iter()
        .map(|&v| {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::Input(format!(
                    "projection activation {v} is negative or not finite"
                )));
            }
            Ok((window as f64 * v / calibration)
                .round()
                .clamp(0.0, window as f64) as u8)
        })
        .collect()
}

/// Rate-codes one projection-layer output vector.
pub fn encode_word(
    p: &[f64],
    calibration: f64,
    window: usize,
    encoder: &dyn SpikeEncoder,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SpikeTrain>> {
    let counts = target_counts(p, calibration, window)?;
    Ok(encoder.encode_counts(&counts, window, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn zero_input_gives_no_spikes() {
        for name in ["deterministic", "deterministic-leading", "poisson"] {
            let enc = EncoderRegistry::builtin().create(name).unwrap();
            let trains = encode_word(&[0.0; 48], 1.0, 16, enc.as_ref(), &mut rng()).unwrap();
            assert!(trains.iter().all(|t| t.count() == 0), "{name}");
        }
    }

    #[test]
    fn saturated_input_fires_every_tick() {
        for name in ["deterministic", "deterministic-leading", "poisson"] {
            let enc = EncoderRegistry::builtin().create(name).unwrap();
            let trains = encode_word(&[5.0, 1.0], 1.0, 16, enc.as_ref(), &mut rng()).unwrap();
            assert!(trains.iter().all(|t| t.bits() == 0xffff), "{name}");
        }
    }

    #[test]
    fn deterministic_counts_are_exact_and_placement_matches_rule() {
        let counts: Vec<u8> = (0..=16).collect();
        let lag = Deterministic.encode_counts(&counts, 16, &mut rng());
        let lead = DeterministicLeading.encode_counts(&counts, 16, &mut rng());
        for n in 0..=16usize {
            assert_eq!(lag[n].count() as usize, n);
            assert_eq!(lead[n].count() as usize, n);
        }
        assert_eq!(lag[1].ticks().collect::<Vec<_>>(), vec![15]);
        assert_eq!(lead[1].ticks().collect::<Vec<_>>(), vec![0]);
        assert_eq!(
            lag[8].ticks().collect::<Vec<_>>(),
            (0..8).map(|k| 2 * k + 1).collect::<Vec<_>>()
        );
        assert_eq!(
            lead[8].ticks().collect::<Vec<_>>(),
            (0..8).map(|k| 2 * k).collect::<Vec<_>>()
        );
    }

    #[test]
    fn target_count_rounding_and_errors() {
        assert_eq!(
            target_counts(&[0.5, 0.03, 0.04, 2.0], 1.0, 16).unwrap(),
            vec![8, 0, 1, 16]
        );
        assert!(matches!(
            target_counts(&[-0.1], 1.0, 16),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            target_counts(&[0.1], 0.0, 16),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            target_counts(&[0.1], 1.0, 17),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unknown_encoder_lists_alternatives() {
        let err = EncoderRegistry::builtin().create("gaussian").err().unwrap();
        assert!(err.to_string().contains("poisson"));
    }

    #[test]
    fn poisson_is_reproducible_from_seed() {
        let counts = [3u8, 8, 12, 16, 0, 1];
        let a = Poisson.encode_counts(&counts, 16, &mut ChaCha8Rng::seed_from_u64(42));
        let b = Poisson.encode_counts(&counts, 16, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }
}
