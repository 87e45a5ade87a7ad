use crate::time::SimTime;
use thiserror::Error;

/// Internal contract violations. Any of these aborts the run: the simulation
/// never silently corrupts metrics.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("time reversal: scheduling at {at} while virtual time is {now}")]
    TimeReversal { at: SimTime, now: SimTime },

    #[error("station {station} started a transmission while one is already in flight")]
    ConcurrentTx { station: u16 },

    #[error("reception outcome queried at {now}, before transmission end {end}")]
    EarlyOutcomeQuery { now: SimTime, end: SimTime },

    #[error("illegal MAC transition at {now}: station {station} in {phase} got {input}")]
    IllegalTransition {
        now: SimTime,
        station: u16,
        phase: String,
        input: String,
    },

    #[error("malformed relay descriptor: data frame for station {station} carries no descriptor")]
    MalformedDescriptor { station: u16 },

    #[error("frame payload {payload_bytes} B exceeds macMTU {mtu} B")]
    PayloadOverMtu { payload_bytes: u32, mtu: u32 },

    #[error("zero-duration run: t_end <= t_start")]
    ZeroDuration,

    #[error("loss rate undefined: no packets were offered")]
    NoPacketsOffered,
}

/// Configuration parse/validation errors. These name the offending line when
/// the problem comes from a config document.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },

    #[error("{0}")]
    Invalid(String),
}

impl ConfigError {
    pub fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError::Line {
            line,
            message: message.into(),
        }
    }
}
