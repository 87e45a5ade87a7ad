//! Independent saturation cross-check.
//!
//! A deliberately simple slot-synchronous model of the saturated contention
//! process: every station is always backlogged, counters decrement in
//! lockstep while the medium is free, the minimum counter transmits, ties
//! collide. Colliding stations re-enter contention late by their ACK timeout,
//! expressed in whole slots. The model shares nothing with the event engine
//! except the pure airtime and CW-ladder functions, so agreement between the
//! two is evidence rather than tautology.

use crate::config::ScenarioConfig;
use crate::frame::FrameKind;
use crate::mac::{ack_timeout, cw_after_failure, cw_after_success, draw_backoff, frame_airtime};
use crate::streams::{station_stream, StreamTag};

pub const MIN_HORIZON_SLOTS: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct SlotModel {
    pub n: u16,
    pub cw_min: u32,
    pub cw_max: u32,
    pub retry_limit: u32,
    pub payload_bytes: u32,
    pub slot_ns: u64,
    pub difs_ns: u64,
    pub sifs_ns: u64,
    pub data_airtime_ns: u64,
    pub ack_airtime_ns: u64,
    pub ack_timeout_ns: u64,
    pub horizon_slots: u64,
}

impl SlotModel {
    /// Derives the fixed cycle durations from the scenario's MAC parameters.
    pub fn from_config(cfg: &ScenarioConfig, horizon_slots: u64) -> Self {
        assert!(
            horizon_slots >= MIN_HORIZON_SLOTS,
            "horizon below {MIN_HORIZON_SLOTS} slots gives unstable estimates"
        );
        let p = cfg.mac_params();
        SlotModel {
            n: cfg.n_hosts,
            cw_min: cfg.cw_min,
            cw_max: cfg.cw_max,
            retry_limit: cfg.retry_limit,
            payload_bytes: cfg.payload_bytes,
            slot_ns: p.slot_ns,
            difs_ns: p.difs_ns,
            sifs_ns: p.sifs_ns,
            data_airtime_ns: frame_airtime(FrameKind::Data, cfg.payload_bytes, &p)
                .expect("payload within MTU"),
            ack_airtime_ns: frame_airtime(FrameKind::Ack, 0, &p).expect("control airtime"),
            ack_timeout_ns: ack_timeout(&p),
            horizon_slots,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleRun {
    pub throughput_bps: f64,
    pub successes: u64,
    pub collisions: u64,
    /// Fraction of transmission events that were collisions.
    pub collision_fraction: f64,
}

/// Simulates the slotted contention process and returns delivered payload
/// bits per simulated second.
pub fn slot_oracle(model: &SlotModel, seed: u64) -> OracleRun {
    assert!(model.n >= 1);
    let n = model.n as usize;
    let mut rngs: Vec<_> = (0..n)
        .map(|i| station_stream(seed, i as u16 + 1, StreamTag::Oracle))
        .collect();
    // late re-entry after a collision: the ACK timeout in whole slots
    let penalty_slots = (model.ack_timeout_ns + model.slot_ns / 2) / model.slot_ns;

    let mut counter: Vec<u64> = rngs
        .iter_mut()
        .map(|r| draw_backoff(model.cw_min, r) as u64)
        .collect();
    let mut cw = vec![model.cw_min; n];
    let mut retry = vec![0u32; n];

    let horizon_ns = model.horizon_slots * model.slot_ns;
    let mut time_ns: u64 = 0;
    let mut delivered_bits: u64 = 0;
    let mut successes = 0u64;
    let mut collisions = 0u64;

    while time_ns < horizon_ns {
        let m = *counter.iter().min().expect("at least one station");
        let winners: Vec<usize> = (0..n).filter(|&i| counter[i] == m).collect();
        time_ns += model.difs_ns + m * model.slot_ns;
        for c in counter.iter_mut() {
            *c -= m;
        }
        if winners.len() == 1 {
            let w = winners[0];
            time_ns += model.data_airtime_ns + model.sifs_ns + model.ack_airtime_ns;
            delivered_bits += 8 * model.payload_bytes as u64;
            successes += 1;
            cw[w] = cw_after_success(model.cw_min);
            retry[w] = 0;
            counter[w] = draw_backoff(cw[w], &mut rngs[w]) as u64;
        } else {
            time_ns += model.data_airtime_ns;
            collisions += 1;
            for &w in &winners {
                if retry[w] == model.retry_limit {
                    retry[w] = 0;
                    cw[w] = cw_after_success(model.cw_min);
                } else {
                    retry[w] += 1;
                    cw[w] = cw_after_failure(cw[w], model.cw_max);
                }
                counter[w] = draw_backoff(cw[w], &mut rngs[w]) as u64 + penalty_slots;
            }
        }
    }

    let events = successes + collisions;
    OracleRun {
        throughput_bps: delivered_bits as f64 / (time_ns as f64 / 1e9),
        successes,
        collisions,
        collision_fraction: if events == 0 {
            0.0
        } else {
            collisions as f64 / events as f64
        },
    }
}

pub fn slot_oracle_throughput(model: &SlotModel, seed: u64) -> f64 {
    slot_oracle(model, seed).throughput_bps
}

#[derive(Debug, Clone, Copy)]
pub struct CompareReport {
    pub engine_bps: f64,
    pub oracle_bps: f64,
    pub rel_err: f64,
    pub pass: bool,
}

/// Relative agreement check between the event engine and the slot oracle.
pub fn compare(engine_bps: f64, oracle_bps: f64, rel_tol: f64) -> CompareReport {
    let rel_err = (engine_bps - oracle_bps).abs() / oracle_bps;
    CompareReport {
        engine_bps,
        oracle_bps,
        rel_err,
        pass: rel_err <= rel_tol,
    }
}
