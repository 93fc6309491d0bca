pub mod asymptotics;
pub mod dual;
pub mod error;
pub mod estimators;
pub mod mc;
#[cfg(feature = "testing")]
pub mod oracle;
pub mod optimize;
pub mod periodogram;
pub mod quadrature;
pub mod special;
pub mod spectral;
pub mod synthesis;
pub mod whittle;

pub use error::{Error, Result};
