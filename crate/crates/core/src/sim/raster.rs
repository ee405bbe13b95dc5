use std::fmt::Write as _;

/// One hidden-neuron spike.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpikeEvent {
    pub tick: u64,
    pub neuron: u16,
}

/// Spike events ordered by tick, then neuron.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpikeRaster {
    events: Vec<SpikeEvent>,
}

impl SpikeRaster {
    /// Events must be pushed in (tick, neuron) order with no duplicates.
    pub fn push(&mut self, tick: u64, neuron: u16) {
        let ev = SpikeEvent { tick, neuron };
        if let Some(last) = self.events.last() {
            assert!(
                *last < ev,
                "raster events out of order: {last:?} then {ev:?}"
            );
        }
        self.events.push(ev);
    }

    pub fn events(&self) -> &[SpikeEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `tick,neuron_id` per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.events.len() * 8);
        for e in &self.events {
            let _ = writeln!(out, "{},{}", e.tick, e.neuron);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut raster = SpikeRaster::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (t, n) = line
                .split_once(',')
                .ok_or_else(|| format!("line {}: expected tick,neuron_id", no + 1))?;
            let ev = SpikeEvent {
                tick: t
                    .trim()
                    .parse()
                    .map_err(|_| format!("line {}: bad tick", no + 1))?,
                neuron: n
                    .trim()
                    .parse()
                    .map_err(|_| format!("line {}: bad neuron id", no + 1))?,
            };
            if raster.events.last().is_some_and(|last| *last >= ev) {
                return Err(format!("line {}: events not strictly ordered", no + 1));
            }
            raster.events.push(ev);
        }
        Ok(raster)
    }
}

/// Neurons as rows, ticks as columns, `|` for a spike, word windows split by
/// a space.
pub fn render_ascii(raster: &SpikeRaster, neurons: usize, words: usize, window: usize) -> String {
    let ticks = words * window;
    let mut grid = vec![vec![false; ticks]; neurons];
    for e in raster.events() {
        if (e.neuron as usize) < neurons && (e.tick as usize) < ticks {
            grid[e.neuron as usize][e.tick as usize] = true;
        }
    }
    let mut out = String::new();
    for (n, row) in grid.iter().enumerate() {
        let _ = write!(out, "{n:>3} ");
        for (t, &spike) in row.iter().enumerate() {
            if t > 0 && t % window == 0 {
                out.push(' ');
            }
            out.push(if spike { '|' } else { '.' });
        }
        out.push('\n');
    }
    out
}
