//! Discrete-event simulator for an infrastructure-mode IEEE 802.11b WLAN
//! running the DCF MAC (basic access and RTS/CTS), with an experiment harness
//! for real-time performance sweeps: effective data rate, packet loss rate
//! and RTT versus number of hosts, payload, generation interval, bitrate and
//! CWmin.
//!
//! The medium is a single ideal broadcast channel: every station hears every
//! other, packets are lost only to collisions. Hosts ping each other through
//! the central access point; the MAC below implements DIFS sensing, slotted
//! backoff with freeze/resume, CW doubling up to CWmax, retry-limit discard,
//! post-backoff, SIFS-spaced ACKs, and the optional RTS/CTS handshake with
//! NAV-based virtual carrier sense.

pub mod channel;
pub mod config;
pub mod engine;
pub mod error;
pub mod frame;
pub mod mac;
pub mod metrics;
pub mod oracle;
pub mod sim;
pub mod station;
pub mod streams;
pub mod sweep;
pub mod time;

pub use config::{parse_config, LossDenominator, RttMode, ScenarioConfig};
pub use error::{ConfigError, SimError};
pub use mac::AccessMethod;
pub use metrics::{effective_data_rate, packet_loss_rate, rtt_summary, RunMetrics};
pub use sim::{
    run_full, run_injected, run_saturated, run_scenario, saturated_throughput_bps, Injection, Jam,
    RunOptions, RunOutput,
};
pub use sweep::{run_sweep, SweepSpec};
pub use time::SimTime;
