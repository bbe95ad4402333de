//! Discrete-event simulator for impulse-radio UWB wireless sensor networks.

pub mod apps;
pub mod channel;
pub mod error;
pub mod mac;
pub mod metrics;
pub mod network;
pub mod node;
pub mod packet;
pub mod phy;
pub mod rng;
pub mod routing;
pub mod scenario;
pub mod sensing;
pub mod sim;
pub mod sweep;

pub use error::{Result, SimError};
pub use sim::SimTime;
