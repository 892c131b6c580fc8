//! System-level simulator of RAN slicing for IEC 61850 smart-grid services.
//!
//! The crate is organized around six subsystems:
//!
//! - [`nn`]: dense feed-forward networks with reverse-mode gradients and
//!   first-order optimizers, the function approximators for the scheduler.
//! - [`radio`]: path loss, shadowing, SINR with co-channel interference,
//!   spectral efficiency, throughput and per-message latency, advanced in
//!   discrete scheduling slots.
//! - [`iec61850`]: message classes, slice profiles with latency SLAs,
//!   traffic generation, and the self-healing fault script.
//! - [`slicing`]: the RANA/RIL/RSF/RSM control elements that parameterize
//!   and supervise the environment and the scheduler.
//! - [`drl`]: the two-layer learning scheduler - a DQN for resource-block
//!   assignment feeding an actor-critic with exponentially weighted
//!   advantage estimation for transmit-power control.
//! - [`sim`]: scenario files, experiment orchestration, metrics persistence
//!   and export.

pub mod drl;
pub mod iec61850;
pub mod nn;
pub mod radio;
pub mod sim;
pub mod slicing;
pub mod stream;

pub use iec61850::{Message, SliceId, SliceProfile};
pub use radio::{DeviceKind, DeviceNode, LinkAllocation, RadioConfig, Topology};
pub use sim::{MetricsLog, RunSummary, ScenarioConfig, SetupTag};
