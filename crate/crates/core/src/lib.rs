pub mod encoder;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod io;
pub mod mmd;
pub mod preprocess;
pub mod prony;
pub mod signal;
pub mod synth;
pub mod vmd;

pub use error::{Error, Result};
pub use signal::{AngleMatrix, Label, LabeledDataset, LabeledSample, Signal};
