pub mod classifiers;
mod codec;
pub mod config;
mod error;
pub mod features;
pub mod fusion;
pub mod imaging;
pub mod metrics;
pub mod scalespace;

pub use config::{Config, DescriptorConfig};
pub use error::{Error, Result};
