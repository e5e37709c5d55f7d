//! Larter-Breakspear coupled neural-mass network.
//!
//! Each brain region carries three states: mean excitatory membrane voltage
//! V, mean inhibitory membrane voltage Z, and the open-potassium-channel
//! fraction W. Regions couple through a connectivity-weighted average of
//! excitatory firing rates. The model is dimensionless with the time unit
//! scaled so one model time step is 1 ms.

mod connectivity;
mod dynamics;
mod params;
mod simulate;

pub use connectivity::Connectivity;
pub use dynamics::{lb_derivative, lb_derivative_into};
pub use params::{param_space, param_space_excitable, LbFixedParams, LbParams, FREE_NAMES};
pub use simulate::{
    is_oscillatory, lb_simulate, lb_simulate_recorded, LbInit, RegionTimeSeries,
    DEFAULT_DT_MS, DEFAULT_DURATION_MS,
};
