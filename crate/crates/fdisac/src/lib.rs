//! Full-duplex integrated sensing and communication transceiver design:
//! scenario synthesis, joint beamformer optimization, reference baselines,
//! link/sensing metrics, and echo-processing DSP.

pub mod baselines;
pub mod harness;
pub mod metrics;
pub mod numerics;
pub mod radar_dsp;
pub mod scenario;
pub mod solver;
