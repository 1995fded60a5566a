pub mod damage;
pub mod error;
pub mod gal;
pub mod hmm;
pub mod markov;
pub mod online;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
