//! Train-and-constrain conversion of a small Elman recurrent network into a
//! spiking recurrent network on a modeled neuromorphic crossbar core.
//!
//! The stages are independent modules:
//!
//! * [`elman`]: bias-free ReLU Elman network and BPTT training
//! * [`quant`]: 4-bit weights and axon-type decomposition
//! * [`hw`]: core constraints, crossbar construction, power estimate
//! * [`sim`]: tick-accurate spiking simulation with delay-line recurrence
//! * [`nlp`]: question corpus, word vectors, sentence embedding
//! * [`pipeline`]: the four inference setups and their comparison
//! * [`cli`]: command-line front end

pub mod cli;
pub mod elman;
pub mod error;
pub mod hw;
pub mod linalg;
pub mod nlp;
pub mod pipeline;
pub mod quant;
pub mod sim;

pub use error::{Error, Result};
