//! Monte Carlo evaluation of uplink network slicing: sweeps that trace the
//! eMBB/URLLC rate regions and eMBB/mMTC frontiers under OMA, NOMA and
//! RSMA, on top of the per-trial physics in `slice_sim_core`.

pub mod config;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{Scenario, ScenarioConfig, Scheme};
pub use engine::Engine;
pub use error::{Result, SimError};
pub use experiments::{FrontierPoint, TraceRequest};
