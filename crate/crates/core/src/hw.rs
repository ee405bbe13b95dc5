//! One neuromorphic crossbar core.
//!
//! A core has 256 axon rows and 256 neuron columns joined by a binary
//! crossbar. Every axon row carries one axon type (`1, 2, 4` or `-8`) and a
//! delivery delay. A neuron integrates `Σᵢ Aᵢ·wᵢⱼ·Gᵢ` each tick, where `Aᵢ` is
//! the spike on row `i`, `wᵢⱼ` the crossbar bit and `Gᵢ` the row's type.
//!
//! Layout used by [`build_core`]: the external inputs come first, four rows
//! each in type order `1, 2, 4, -8` with delay 0; the recurrent feedback
//! sources follow, four rows each, with the feedback delay.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::error::{read_to_string, write_string, Error, Result};
use crate::quant::{decompose_axon, AxonType, QuantizedNet};

pub const AXONS_PER_CORE: usize = 256;
pub const NEURONS_PER_CORE: usize = 256;
pub const MAX_DELAY: u8 = 15;
/// Rows needed per logical input at 4-bit precision.
pub const AXONS_PER_INPUT: usize = 4;
pub const DEFAULT_THRESHOLD: i32 = 8;

pub const CHIP_CORES: usize = 4096;
pub const CHIP_POWER_WATTS: f64 = 0.070;

/// One broken hardware rule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub rule: String,
    pub measured: usize,
    pub limit: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return write!(f, "all core constraints satisfied");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{} ({} > {})", v.rule, v.measured, v.limit))
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks `n_in + n_hid ≤ 256 / n_bits` together with the basic sanity rules.
pub fn check_constraints(n_in: usize, n_hid: usize, n_bits: usize) -> ConstraintReport {
    let mut violations = Vec::new();
    let mut push = |rule: &str, measured: usize, limit: usize| {
        violations.push(Violation {
            rule: rule.to_string(),
            measured,
            limit,
        })
    };
    if !matches!(n_bits, 1 | 2 | 4) {
        push("weight bits must be 1, 2 or 4", n_bits, 4);
    } else if n_in + n_hid > AXONS_PER_CORE / n_bits {
        push(
            "fan-in n_in + n_hid <= 256 / n_bits",
            n_in + n_hid,
            AXONS_PER_CORE / n_bits,
        );
    }
    if n_in == 0 {
        push("at least one input", 0, 1);
    }
    if n_hid == 0 {
        push("at least one hidden neuron", 0, 1);
    }
    if n_hid > NEURONS_PER_CORE {
        push(
            "hidden neurons <= neurons per core",
            n_hid,
            NEURONS_PER_CORE,
        );
    }
    ConstraintReport {
        ok: violations.is_empty(),
        violations,
    }
}

/// Where the spikes on an axon row come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AxonSource {
    Unused,
    /// Projection-layer unit, delivered from off-core.
    Input(usize),
    /// Recurrent neuron on this core, fed back through the delay line.
    Hidden(usize),
}

impl fmt::Display for AxonSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxonSource::Unused => write!(f, "-"),
            AxonSource::Input(i) => write!(f, "in:{i}"),
            AxonSource::Hidden(k) => write!(f, "hid:{k}"),
        }
    }
}

impl AxonSource {
    fn parse(s: &str) -> Option<Self> {
        if s == "-" {
            return Some(AxonSource::Unused);
        }
        let (kind, idx) = s.split_once(':')?;
        let idx: usize = idx.parse().ok()?;
        match kind {
            "in" => Some(AxonSource::Input(idx)),
            "hid" => Some(AxonSource::Hidden(idx)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AxonRow {
    pub axon_type: AxonType,
    pub delay: u8,
    pub source: AxonSource,
}

impl AxonRow {
    const UNUSED: AxonRow = AxonRow {
        axon_type: AxonType::One,
        delay: 0,
        source: AxonSource::Unused,
    };
}

/// Fixed 256-bit set, used for crossbar rows (bit `j` connects the axon to
/// neuron `j`) and for the axon rows receiving a spike in one tick.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Bits256([u64; 4]);

pub type CrossbarRow = Bits256;

impl Bits256 {
    #[inline]
    pub fn get(&self, neuron: usize) -> bool {
        self.0[neuron / 64] >> (neuron % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, neuron: usize, on: bool) {
        let mask = 1u64 << (neuron % 64);
        if on {
            self.0[neuron / 64] |= mask;
        } else {
            self.0[neuron / 64] &= !mask;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|w| *w == 0)
    }

    pub fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of the set bits in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(word, &bits)| {
            let mut rest = bits;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(word * 64 + b)
            })
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreConfig {
    pub axons: Vec<AxonRow>,
    pub crossbar: Vec<CrossbarRow>,
    pub threshold: i32,
    pub neurons_used: usize,
    pub n_inputs: usize,
}

impl CoreConfig {
    /// Synaptic value seen by `neuron` from `row`; equal to the row's axon type.
    #[inline]
    pub fn synaptic_value(&self, row: usize, _neuron: usize) -> i32 {
        self.axons[row].axon_type.value()
    }

    pub fn used_rows(&self) -> usize {
        self.axons
            .iter()
            .filter(|a| a.source != AxonSource::Unused)
            .count()
    }

    /// Integer weight from `source` to `neuron`: the sum of connected row types.
    pub fn reconstructed_weight(&self, source: AxonSource, neuron: usize) -> i32 {
        self.axons
            .iter()
            .zip(&self.crossbar)
            .filter(|(a, x)| a.source == source && x.get(neuron))
            .map(|(a, _)| a.axon_type.value())
            .sum()
    }

    /// Delay of the feedback rows. `None` when there are none or they disagree.
    pub fn feedback_delay(&self) -> Option<u8> {
        let mut delays = self
            .axons
            .iter()
            .filter(|a| matches!(a.source, AxonSource::Hidden(_)))
            .map(|a| a.delay);
        let first = delays.next()?;
        delays.all(|d| d == first).then_some(first)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axons.len() != AXONS_PER_CORE || self.crossbar.len() != AXONS_PER_CORE {
            return Err(Error::Config(format!(
                "core must have exactly {AXONS_PER_CORE} axon rows"
            )));
        }
        if self.threshold <= 0 {
            return Err(Error::Config("threshold must be a positive integer".into()));
        }
        if self.neurons_used == 0 || self.neurons_used > NEURONS_PER_CORE {
            return Err(Error::Config(format!(
                "neurons used must be in 1..={NEURONS_PER_CORE}"
            )));
        }
        for (i, (a, x)) in self.axons.iter().zip(&self.crossbar).enumerate() {
            if a.delay > MAX_DELAY {
                return Err(Error::Config(format!(
                    "axon {i}: delay {} exceeds {MAX_DELAY}",
                    a.delay
                )));
            }
            match a.source {
                AxonSource::Input(s) if s >= self.n_inputs => {
                    return Err(Error::Config(format!("axon {i}: input {s} out of range")));
                }
                AxonSource::Hidden(s) if s >= self.neurons_used => {
                    return Err(Error::Config(format!(
                        "axon {i}: hidden source {s} out of range"
                    )));
                }
                AxonSource::Unused if !x.is_empty() => {
                    return Err(Error::Config(format!(
                        "axon {i}: unused row has connections"
                    )));
                }
                _ => {}
            }
            if (self.neurons_used..NEURONS_PER_CORE).any(|j| x.get(j)) {
                return Err(Error::Config(format!(
                    "axon {i}: connects to an unused neuron"
                )));
            }
        }
        Ok(())
    }
}

/// Maps the recurrent layer of `qnet` onto one core with feedback delay 15.
pub fn build_core(qnet: &QuantizedNet, threshold: i32) -> Result<CoreConfig> {
    build_core_with_delay(qnet, threshold, MAX_DELAY)
}

pub fn build_core_with_delay(
    qnet: &QuantizedNet,
    threshold: i32,
    feedback_delay: u8,
) -> Result<CoreConfig> {
    let n_in = qnet.n_inputs();
    let n_hid = qnet.n_hidden();
    let report = check_constraints(n_in, n_hid, AXONS_PER_INPUT);
    if !report.ok {
        return Err(Error::Mapping(report));
    }
    if qnet.q_rec.rows() != n_hid || qnet.q_rec.cols() != n_hid {
        return Err(Error::Dimension {
            context: "Q_rec",
            expected: n_hid,
            actual: qnet.q_rec.cols(),
        });
    }
    if threshold <= 0 {
        return Err(Error::Config("threshold must be a positive integer".into()));
    }
    if feedback_delay > MAX_DELAY {
        return Err(Error::Config(format!(
            "feedback delay {feedback_delay} exceeds {MAX_DELAY}"
        )));
    }

    let mut axons = vec![AxonRow::UNUSED; AXONS_PER_CORE];
    let mut crossbar = vec![CrossbarRow::default(); AXONS_PER_CORE];

    let sources = (0..n_in)
        .map(|i| (AxonSource::Input(i), 0u8))
        .chain((0..n_hid).map(|k| (AxonSource::Hidden(k), feedback_delay)));
    for (slot, (source, delay)) in sources.enumerate() {
        for (offset, axon_type) in AxonType::ALL.into_iter().enumerate() {
            let row = slot * AXONS_PER_INPUT + offset;
            axons[row] = AxonRow {
                axon_type,
                delay,
                source,
            };
            for neuron in 0..n_hid {
                let q = match source {
                    AxonSource::Input(i) => qnet.q_in.get(neuron, i),
                    AxonSource::Hidden(k) => qnet.q_rec.get(neuron, k),
                    AxonSource::Unused => unreachable!(),
                };
                if decompose_axon(q as i64)?.contains(axon_type) {
                    crossbar[row].set(neuron, true);
                }
            }
        }
    }

    Ok(CoreConfig {
        axons,
        crossbar,
        threshold,
        neurons_used: n_hid,
        n_inputs: n_in,
    })
}

/// Chip power scaled by the fraction of cores in use.
pub fn estimate_power(n_cores: usize) -> Result<f64> {
    if n_cores > CHIP_CORES {
        return Err(Error::OutOfRange {
            value: n_cores as i64,
            min: 0,
            max: CHIP_CORES as i64,
        });
    }
    Ok(n_cores as f64 * CHIP_POWER_WATTS / CHIP_CORES as f64)
}

pub const CORE_FILE_HEADER: &str = "# crossbar-core v1";

impl CoreConfig {
    /// Text dump: header, scalar fields, one `axon` line per row and one
    /// bitmap line per row over the used neuron columns.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(CORE_FILE_HEADER);
        out.push('\n');
        out.push_str(&format!("threshold {}\n", self.threshold));
        out.push_str(&format!("neurons {}\n", self.neurons_used));
        out.push_str(&format!("inputs {}\n", self.n_inputs));
        out.push_str("# axon <row> <type> <delay> <source>\n");
        for (i, a) in self.axons.iter().enumerate() {
            out.push_str(&format!(
                "axon {i} {} {} {}\n",
                a.axon_type, a.delay, a.source
            ));
        }
        out.push_str("# crossbar <row> <bit per neuron 0..n-1>\n");
        for (i, x) in self.crossbar.iter().enumerate() {
            let bits: String = (0..self.neurons_used)
                .map(|j| if x.get(j) { '1' } else { '0' })
                .collect();
            out.push_str(&format!("crossbar {i} {bits}\n"));
        }
        out
    }

    pub fn from_text(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, h)) if h == CORE_FILE_HEADER => {}
            _ => {
                return Err(Error::parse(
                    origin,
                    1,
                    format!("expected header {CORE_FILE_HEADER:?}"),
                ))
            }
        }
        let mut threshold = None;
        let mut neurons = None;
        let mut inputs = None;
        let mut axons = vec![None; AXONS_PER_CORE];
        let mut crossbar = vec![None; AXONS_PER_CORE];

        for (no, line) in lines {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |msg: &str| Error::parse(origin, no, msg.to_string());
            let row_index = |s: &str| -> Result<usize> {
                let r: usize = s.parse().map_err(|_| bad("bad row index"))?;
                if r >= AXONS_PER_CORE {
                    return Err(bad("row index out of range"));
                }
                Ok(r)
            };
            match fields.as_slice() {
                ["threshold", v] => {
                    threshold = Some(v.parse::<i32>().map_err(|_| bad("bad threshold"))?)
                }
                ["neurons", v] => {
                    neurons = Some(v.parse::<usize>().map_err(|_| bad("bad neuron count"))?)
                }
                ["inputs", v] => {
                    inputs = Some(v.parse::<usize>().map_err(|_| bad("bad input count"))?)
                }
                ["axon", r, t, d, s] => {
                    let r = row_index(r)?;
                    let t: i32 = t.parse().map_err(|_| bad("bad axon type"))?;
                    let axon_type = AxonType::from_value(t)
                        .ok_or_else(|| bad("axon type must be 1, 2, 4 or -8"))?;
                    let delay: u8 = d.parse().map_err(|_| bad("bad delay"))?;
                    let source = AxonSource::parse(s).ok_or_else(|| bad("bad axon source"))?;
                    if axons[r]
                        .replace(AxonRow {
                            axon_type,
                            delay,
                            source,
                        })
                        .is_some()
                    {
                        return Err(bad("duplicate axon row"));
                    }
                }
                ["crossbar", r, bits] => {
                    let r = row_index(r)?;
                    let mut row = CrossbarRow::default();
                    for (j, ch) in bits.chars().enumerate() {
                        match ch {
                            '1' if j < NEURONS_PER_CORE => row.set(j, true),
                            '0' => {}
                            _ => return Err(bad("crossbar bits must be 0 or 1")),
                        }
                    }
                    if bits.len() != neurons.unwrap_or(usize::MAX) {
                        return Err(bad("crossbar row width must equal the neuron count"));
                    }
                    if crossbar[r].replace(row).is_some() {
                        return Err(bad("duplicate crossbar row"));
                    }
                }
                _ => return Err(bad("unrecognised line")),
            }
        }

        let missing = |what: &str| Error::parse(origin, 0, format!("missing {what}"));
        let core = CoreConfig {
            axons: axons
                .into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| missing("axon rows"))?,
            crossbar: crossbar
                .into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| missing("crossbar rows"))?,
            threshold: threshold.ok_or_else(|| missing("threshold"))?,
            neurons_used: neurons.ok_or_else(|| missing("neuron count"))?,
            n_inputs: inputs.ok_or_else(|| missing("input count"))?,
        };
        core.validate()?;
        Ok(core)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_string(path, &self.to_text())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&read_to_string(path)?, &path.display().to_string())
    }
}
