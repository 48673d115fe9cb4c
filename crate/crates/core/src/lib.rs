pub mod baselines;
pub mod bb;
pub mod ccp;
pub mod conic;
pub mod envelopes;
pub mod error;
pub mod io;
pub mod model;
pub mod scenario;

pub use error::{Error, Result};
pub use model::*;
