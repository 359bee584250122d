pub mod cli;
pub mod decision;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod label_model;
pub mod negation;
pub mod objective;
pub mod stance;
pub mod tokenizer;

pub use error::{Error, Result};
pub use stance::Stance;
