//! Per-run observations and the three headline metrics.
//!
//! Accounting is per logical application packet (a generated request or an
//! echo reply), not per MAC hop: a request that dies on the AP relay hop is
//! one dropped packet. `n_succpacket`, the effective-data-rate numerator,
//! counts generated requests delivered end-to-end; replies contribute to the
//! loss accounting and carry the RTT samples.

use crate::error::SimError;
use crate::time::SimTime;

#[derive(Debug, Clone, Default)]
pub struct RunMetrics {
    /// Generated requests delivered to their final destination.
    pub n_succpacket: u64,
    /// Logical packets offered by hosts (requests + replies).
    pub sent_total: u64,
    pub delivered_total: u64,
    pub dropped_retry: u64,
    pub dropped_overflow: u64,
    /// Packets still queued or in flight when the run hit its cutoff.
    pub unresolved_at_cutoff: u64,
    pub t_start: SimTime,
    pub t_end: SimTime,
    /// Ping round-trip samples, nanoseconds.
    pub rtt_samples: Vec<u64>,
    /// Collision-cost accounting: busy periods that contained a collision.
    pub collision_events: u64,
    pub collision_busy_ns: u64,
}

impl RunMetrics {
    /// Everything counted against the loss metric.
    pub fn dropped_total(&self) -> u64 {
        self.dropped_retry + self.dropped_overflow + self.unresolved_at_cutoff
    }

    pub fn duration_s(&self) -> f64 {
        (self.t_end.as_ns().saturating_sub(self.t_start.as_ns())) as f64 / 1e9
    }

    /// Mean channel time a collision event consumed, if any happened.
    pub fn mean_collision_cost_ns(&self) -> Option<f64> {
        if self.collision_events == 0 {
            None
        } else {
            Some(self.collision_busy_ns as f64 / self.collision_events as f64)
        }
    }
}

/// Delivered payload bits per second: n_succpacket * P * 8 / (t_end - t_start).
pub fn effective_data_rate(m: &RunMetrics, payload_bytes: u32) -> Result<f64, SimError> {
    if m.t_end <= m.t_start {
        return Err(SimError::ZeroDuration);
    }
    let bits = m.n_succpacket as f64 * payload_bytes as f64 * 8.0;
    Ok(bits / m.duration_s())
}

/// Dropped over offered, in [0, 1].
pub fn packet_loss_rate(m: &RunMetrics) -> Result<f64, SimError> {
    if m.sent_total == 0 {
        return Err(SimError::NoPacketsOffered);
    }
    Ok(m.dropped_total() as f64 / m.sent_total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RttSummary {
    pub mean_ns: f64,
    pub p50_ns: u64,
    pub p95_ns: u64,
    pub max_ns: u64,
}

/// Nearest-rank percentile over a sorted slice: the ceil(q*N)-th smallest.
fn nearest_rank(sorted: &[u64], q: f64) -> u64 {
    debug_assert!(!sorted.is_empty());
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Order statistics over the RTT samples; `None` marks a run with no data.
pub fn rtt_summary(m: &RunMetrics) -> Option<RttSummary> {
    if m.rtt_samples.is_empty() {
        return None;
    }
    let mut sorted = m.rtt_samples.clone();
    sorted.sort_unstable();
    let sum: u128 = sorted.iter().map(|&v| v as u128).sum();
    Some(RttSummary {
        mean_ns: sum as f64 / sorted.len() as f64,
        p50_ns: nearest_rank(&sorted, 0.50),
        p95_ns: nearest_rank(&sorted, 0.95),
        max_ns: *sorted.last().unwrap(),
    })
}
