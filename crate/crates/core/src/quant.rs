//! 4-bit weight quantization and the axon-type decomposition used by the
//! crossbar mapping.
//!
//! Weights in `(-1, 1)` are multiplied by a fixed scale of 8, rounded half
//! away from zero and clamped to the signed 4-bit range `[-8, 7]`. Each
//! integer is then its own two's-complement bit pattern over the axon types
//! `{1, 2, 4, -8}`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::elman::{ElmanModel, ElmanParams};
use crate::error::{read_to_string, write_string, Error, Result};
use crate::linalg::Matrix;

pub const WEIGHT_MIN: i8 = -8;
pub const WEIGHT_MAX: i8 = 7;
/// Integer units per unit of real weight.
pub const WEIGHT_SCALE: f64 = 8.0;

/// The rounding rule applied to `scale · w`. Swappable so that e.g.
/// stochastic rounding can be tried without touching the rest of the mapping.
pub type RoundingFn = fn(f64) -> f64;

/// `f64::round` rounds half away from zero.
pub fn round_half_away(x: f64) -> f64 {
    x.round()
}

/// `clamp(round(8·w), -8, 7)`, without the `(-1, 1)` precondition.
pub fn quantize_scalar(w: f64) -> i8 {
    quantize_scalar_with(w, round_half_away)
}

pub fn quantize_scalar_with(w: f64, round: RoundingFn) -> i8 {
    round(WEIGHT_SCALE * w).clamp(WEIGHT_MIN as f64, WEIGHT_MAX as f64) as i8
}

fn check_q(q: i64) -> Result<i8> {
    if (WEIGHT_MIN as i64..=WEIGHT_MAX as i64).contains(&q) {
        Ok(q as i8)
    } else {
        Err(Error::OutOfRange {
            value: q,
            min: WEIGHT_MIN as i64,
            max: WEIGHT_MAX as i64,
        })
    }
}

/// `q / 8`
pub fn dequantize(q: i64) -> Result<f64> {
    Ok(check_q(q)? as f64 / WEIGHT_SCALE)
}

/// A dense integer matrix with entries in `[-8, 7]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> i8,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(check_q(f(r, c) as i64)?);
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> i8 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, q: i8) -> Result<()> {
        self.data[r * self.cols + c] = check_q(q as i64)?;
        Ok(())
    }

    pub fn row(&self, r: usize) -> &[i8] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn dequantized(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |r, c| {
            self.get(r, c) as f64 / WEIGHT_SCALE
        })
    }

    fn validate(&self) -> Result<()> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Dimension {
                context: "integer matrix data",
                expected: self.rows * self.cols,
                actual: self.data.len(),
            });
        }
        for &q in &self.data {
            check_q(q as i64)?;
        }
        Ok(())
    }
}

fn quantize_matrix(name: &'static str, w: &Matrix, round: RoundingFn) -> Result<IntMatrix> {
    for r in 0..w.rows() {
        for c in 0..w.cols() {
            let value = w.get(r, c);
            if !(value > -1.0 && value < 1.0) {
                return Err(Error::WeightRange {
                    matrix: name,
                    row: r,
                    col: c,
                    value,
                });
            }
        }
    }
    IntMatrix::from_fn(w.rows(), w.cols(), |r, c| {
        quantize_scalar_with(w.get(r, c), round)
    })
}

pub const QUANTIZED_FORMAT: &str = "spiking-rnn/quantized-v1";

/// The network with its recurrent layer in 4-bit integers. Projection and
/// readout stay real-valued because they run off-core.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizedNet {
    pub format: String,
    pub q_in: IntMatrix,
    pub q_rec: IntMatrix,
    /// Integer units per unit of real weight.
    pub scale: f64,
    pub calibration: f64,
    pub w_proj: Matrix,
    pub w_out: Matrix,
}

impl QuantizedNet {
    pub fn n_inputs(&self) -> usize {
        self.q_in.cols()
    }

    pub fn n_hidden(&self) -> usize {
        self.q_in.rows()
    }

    /// Real-valued network whose recurrent weights are `q / scale`.
    pub fn dequantized_params(&self) -> ElmanParams {
        ElmanParams {
            w_proj: self.w_proj.clone(),
            w_in: self.q_in.dequantized(),
            w_rec: self.q_rec.dequantized(),
            w_out: self.w_out.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != QUANTIZED_FORMAT {
            return Err(Error::Config(format!(
                "unsupported quantized model format {:?}",
                self.format
            )));
        }
        self.q_in.validate()?;
        self.q_rec.validate()?;
        if self.scale.is_nan() || self.scale <= 0.0 {
            return Err(Error::Config("quantization scale must be positive".into()));
        }
        crate::elman::quantized_relu(0.0, self.calibration)?;
        self.dequantized_params().dims()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: QuantizedNet = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_string(path, &self.to_json()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_to_string(path)?)
    }
}

/// Quantizes `W_in` and `W_rec`; every entry must lie strictly inside `(-1, 1)`.
pub fn quantize_weights(w_in: &Matrix, w_rec: &Matrix) -> Result<(IntMatrix, IntMatrix)> {
    quantize_weights_with(w_in, w_rec, round_half_away)
}

pub fn quantize_weights_with(
    w_in: &Matrix,
    w_rec: &Matrix,
    round: RoundingFn,
) -> Result<(IntMatrix, IntMatrix)> {
    Ok((
        quantize_matrix("W_in", w_in, round)?,
        quantize_matrix("W_rec", w_rec, round)?,
    ))
}

pub fn quantize_model(model: &ElmanModel) -> Result<QuantizedNet> {
    let (q_in, q_rec) = quantize_weights(&model.params.w_in, &model.params.w_rec)?;
    Ok(QuantizedNet {
        format: QUANTIZED_FORMAT.to_string(),
        q_in,
        q_rec,
        scale: WEIGHT_SCALE,
        calibration: model.calibration,
        w_proj: model.params.w_proj.clone(),
        w_out: model.params.w_out.clone(),
    })
}

/// One of the four per-core synaptic values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AxonType {
    One,
    Two,
    Four,
    MinusEight,
}

impl AxonType {
    /// Ordered by bit position.
    pub const ALL: [AxonType; 4] = [
        AxonType::One,
        AxonType::Two,
        AxonType::Four,
        AxonType::MinusEight,
    ];

    pub fn value(self) -> i32 {
        match self {
            AxonType::One => 1,
            AxonType::Two => 2,
            AxonType::Four => 4,
            AxonType::MinusEight => -8,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            AxonType::One => 0,
            AxonType::Two => 1,
            AxonType::Four => 2,
            AxonType::MinusEight => 3,
        }
    }

    pub fn from_value(v: i32) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.value() == v)
    }
}

impl fmt::Display for AxonType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Subset of axon types whose values sum to a 4-bit weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AxonDecomposition {
    bits: u8,
}

impl AxonDecomposition {
    pub fn contains(self, t: AxonType) -> bool {
        self.bits & (1 << t.bit()) != 0
    }

    pub fn types(self) -> impl Iterator<Item = AxonType> {
        AxonType::ALL.into_iter().filter(move |t| self.contains(*t))
    }

    pub fn sum(self) -> i32 {
        self.types().map(AxonType::value).sum()
    }

    pub fn bits(self) -> u8 {
        self.bits
    }
}

/// Two's-complement bits of `q` read against the weights `1, 2, 4, -8`.
pub fn decompose_axon(q: i64) -> Result<AxonDecomposition> {
    let q = check_q(q)?;
    Ok(AxonDecomposition {
        bits: (q as u8) & 0x0f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_scalar(0.0), 0);
        assert_eq!(quantize_scalar(0.7), 6);
        assert_eq!(quantize_scalar(0.99), 7);
        assert_eq!(quantize_scalar(-0.99), -8);
        assert_eq!(quantize_scalar(0.0625), 1); // 0.5 rounds away from zero
        assert_eq!(quantize_scalar(-0.0625), -1);
    }

    #[test]
    fn dequantize_examples() {
        assert_eq!(dequantize(0).unwrap(), 0.0);
        assert_eq!(dequantize(-8).unwrap(), -1.0);
        assert_eq!(dequantize(6).unwrap(), 0.75);
        assert!(matches!(dequantize(8), Err(Error::OutOfRange { .. })));
        assert!(matches!(dequantize(-9), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn decompose_examples() {
        let set = |q| {
            decompose_axon(q)
                .unwrap()
                .types()
                .map(AxonType::value)
                .collect::<Vec<_>>()
        };
        assert_eq!(set(7), vec![1, 2, 4]);
        assert_eq!(set(-8), vec![-8]);
        assert_eq!(set(-3), vec![1, 4, -8]);
        assert_eq!(set(0), Vec::<i32>::new());
        assert!(decompose_axon(8).is_err());
    }

    #[test]
    fn decomposition_is_exhaustively_unique() {
        // Every subset of {1,2,4,-8} hits a distinct value in [-8, 7].
        let mut by_subset = std::collections::BTreeMap::new();
        for bits in 0u8..16 {
            let sum: i32 = AxonType::ALL
                .iter()
                .filter(|t| bits & (1 << t.bit()) != 0)
                .map(|t| t.value())
                .sum();
            assert!(by_subset.insert(sum, bits).is_none());
        }
        for q in -8..=7 {
            let d = decompose_axon(q).unwrap();
            assert_eq!(d.sum() as i64, q);
            assert_eq!(by_subset[&(q as i32)], d.bits());
        }
    }

    #[test]
    fn out_of_range_weight_names_its_index() {
        let mut w_in = Matrix::zeros(16, 48);
        w_in.set(3, 17, 1.0);
        let err = quantize_weights(&w_in, &Matrix::zeros(16, 16)).unwrap_err();
        match err {
            Error::WeightRange {
                matrix, row, col, ..
            } => {
                assert_eq!((matrix, row, col), ("W_in", 3, 17));
            }
            other => panic!("unexpected {other}"),
        }
        let mut w_rec = Matrix::zeros(16, 16);
        w_rec.set(0, 1, f64::NAN);
        assert!(quantize_weights(&Matrix::zeros(16, 48), &w_rec).is_err());
    }

    #[test]
    fn rounding_is_injectable() {
        let q = quantize_scalar_with(0.3, f64::floor);
        assert_eq!(q, 2);
        assert_eq!(quantize_scalar(0.3), 2);
        assert_eq!(quantize_scalar_with(0.33, f64::ceil), 3);
    }

    #[test]
    fn negation_symmetry_except_at_the_clamp() {
        // Interior: exact antisymmetry.
        for w in [0.01, 0.2, 0.4375, 0.6, 0.85] {
            assert_eq!(quantize_scalar(-w), -quantize_scalar(w));
        }
        // Boundary: -w reaches -8 while +w clamps to 7.
        assert_eq!(quantize_scalar(0.95), 7);
        assert_eq!(quantize_scalar(-0.95), -8);
    }

    #[test]
    fn quantized_net_round_trip() {
        let model = ElmanModel::new(ElmanParams::zeros(crate::elman::Dims::default()), 0.75, 3);
        let mut net = quantize_model(&model).unwrap();
        net.q_in.set(2, 5, -7).unwrap();
        net.q_rec.set(1, 1, 7).unwrap();
        let text = net.to_json().unwrap();
        assert_eq!(QuantizedNet::from_json(&text).unwrap(), net);
        let tampered = text.replacen("-7", "-9", 1);
        assert!(QuantizedNet::from_json(&tampered).is_err());
    }

    proptest::proptest! {
        #[test]
        fn quantization_is_monotone(a in -1.0f64..1.0, b in -1.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            proptest::prop_assert!(quantize_scalar(lo) <= quantize_scalar(hi));
        }

        #[test]
        fn quantization_error_is_bounded(w in -1.0f64..1.0) {
            let err = (w - quantize_scalar(w) as f64 / 8.0).abs();
            // Only the clamp at +7/8 can push the error past half a step.
            let bound = if w <= 15.0 / 16.0 { 1.0 / 16.0 } else { 1.0 / 8.0 };
            proptest::prop_assert!(err <= bound + 1e-12, "w={} err={}", w, err);
        }
    }
}
