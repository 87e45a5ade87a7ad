//! One scenario run: wires the event engine, channel, per-station MACs and
//! the application layer together.
//!
//! A run is single-threaded and fully deterministic: identical (config, seed)
//! pairs replay the exact event sequence. Inside one engine event the world
//! applies MAC actions in a fixed order (sender first, then frame deliveries
//! and idle notifications by ascending station id), so simultaneity is
//! resolved identically every time.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::channel::{Channel, Outcome, TraceRecord};
use crate::config::{LossDenominator, RttMode, ScenarioConfig};
use crate::engine::{EventId, EventKind, EventQueue, StationId, TimerKind, PHANTOM_STATION};
use crate::error::SimError;
use crate::frame::{AppDescriptor, AppKind, Frame};
use crate::mac::{
    frame_airtime, mac_step, ChannelView, MacInput, MacParams, MacState, TxResolution,
};
use crate::metrics::RunMetrics;
use crate::station::{self, MobilityParams, MobilityState, AP};
use crate::streams::{station_stream, StreamTag};
use crate::time::SimTime;

const MOBILITY_TICK_NS: u64 = 1_000_000_000;
const TIMER_SLOTS: usize = 6;

fn timer_index(kind: TimerKind) -> usize {
    match kind {
        TimerKind::DifsEnd => 0,
        TimerKind::BackoffComplete => 1,
        TimerKind::ResponseDue => 2,
        TimerKind::DataDue => 3,
        TimerKind::AckTimeout => 4,
        TimerKind::CtsTimeout => 5,
    }
}

fn timer_input(kind: TimerKind) -> MacInput {
    match kind {
        TimerKind::DifsEnd => MacInput::DifsEnd,
        TimerKind::BackoffComplete => MacInput::BackoffComplete,
        TimerKind::ResponseDue => MacInput::ResponseDue,
        TimerKind::DataDue => MacInput::DataDue,
        TimerKind::AckTimeout => MacInput::AckTimeout,
        TimerKind::CtsTimeout => MacInput::CtsTimeout,
    }
}

/// How the application layer feeds the MAC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Periodic generation, AP relay, echo replies.
    Ping,
    /// Every host permanently backlogged with single-hop frames to the AP.
    Saturate,
    /// Only explicitly injected packets (echo semantics as in Ping).
    Injected,
}

/// A programmatic packet injection for harness-driven scenarios.
#[derive(Debug, Clone, Copy)]
pub struct Injection {
    pub at: SimTime,
    pub src: StationId,
    pub final_dst: StationId,
}

/// Raw channel interference: a frame no MAC owns, occupying the medium for
/// `airtime_ns` starting at `at`.
#[derive(Debug, Clone, Copy)]
pub struct Jam {
    pub at: SimTime,
    pub airtime_ns: u64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub collect_tx_trace: bool,
    pub collect_mac_trace: bool,
}

#[derive(Debug)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub tx_trace: Option<Vec<TraceRecord>>,
    pub mac_trace: Option<Vec<String>>,
}

struct StationRuntime {
    mac: MacState,
    timers: [Option<EventId>; TIMER_SLOTS],
    backoff_rng: ChaCha12Rng,
    traffic_rng: ChaCha12Rng,
    mobility_rng: ChaCha12Rng,
    mobility: MobilityState,
    remaining_packets: u32,
    injections: VecDeque<(SimTime, StationId)>,
}

#[derive(Default)]
struct Accounting {
    offered: u64,
    relay_offers: u64,
    delivered_requests: u64,
    delivered_total: u64,
    dropped_retry: u64,
    dropped_overflow: u64,
    outstanding: u64,
    active_generators: u32,
    first_offer: Option<SimTime>,
    last_resolution: Option<SimTime>,
    rtt_pending: HashMap<u64, SimTime>,
    rtt_samples: Vec<u64>,
}

struct World {
    cfg: ScenarioConfig,
    params: MacParams,
    mob_params: MobilityParams,
    engine: EventQueue,
    channel: Channel,
    stations: Vec<StationRuntime>,
    mode: Mode,
    cutoff_ns: u64,
    acc: Accounting,
    next_tag: u64,
    pending_jams: usize,
    mac_trace: Option<Vec<String>>,
}

impl World {
    fn new(cfg: &ScenarioConfig, mode: Mode, cutoff_ns: u64, opts: RunOptions) -> Self {
        let params = cfg.mac_params();
        let mob_params = cfg.mobility_params();
        let seed = cfg.seed;
        let n = cfg.n_hosts;
        let mut stations = Vec::with_capacity(n as usize + 1);
        for sid in 0..=n {
            let mut mobility_rng = station_stream(seed, sid, StreamTag::Mobility);
            let mobility = if sid == AP {
                MobilityState::fixed(mob_params.playground_m / 2.0, mob_params.playground_m / 2.0)
            } else {
                MobilityState::spawn(&mob_params, &mut mobility_rng)
            };
            stations.push(StationRuntime {
                mac: MacState::new(sid, &params, cfg.queue_capacity),
                timers: [None; TIMER_SLOTS],
                backoff_rng: station_stream(seed, sid, StreamTag::Backoff),
                traffic_rng: station_stream(seed, sid, StreamTag::Traffic),
                mobility_rng,
                mobility,
                remaining_packets: if sid == AP { 0 } else { cfg.packets_per_host },
                injections: VecDeque::new(),
            });
        }
        World {
            cfg: cfg.clone(),
            params,
            mob_params,
            engine: EventQueue::new(),
            channel: Channel::new(opts.collect_tx_trace),
            stations,
            mode,
            cutoff_ns,
            acc: Accounting::default(),
            next_tag: 0,
            pending_jams: 0,
            mac_trace: if opts.collect_mac_trace {
                Some(Vec::new())
            } else {
                None
            },
        }
    }

    fn seed_initial_events(
        &mut self,
        injections: &[Injection],
        jams: &[Jam],
    ) -> Result<(), SimError> {
        let n = self.cfg.n_hosts;
        match self.mode {
            Mode::Ping => {
                let interval = self.cfg.interval_ns();
                for h in 1..=n {
                    if self.stations[h as usize].remaining_packets == 0 {
                        continue;
                    }
                    // phase jitter so hosts do not start in lockstep
                    let jitter = self.stations[h as usize].traffic_rng.gen_range(0..interval);
                    self.engine
                        .schedule(SimTime(jitter), EventKind::TrafficGen { host: h })?;
                    self.acc.active_generators += 1;
                }
            }
            Mode::Saturate => {
                for h in 1..=n {
                    self.engine
                        .schedule(SimTime::ZERO, EventKind::TrafficGen { host: h })?;
                }
            }
            Mode::Injected => {
                for inj in injections {
                    self.stations[inj.src as usize]
                        .injections
                        .push_back((inj.at, inj.final_dst));
                }
                for h in 1..=n {
                    let pending: Vec<SimTime> = self.stations[h as usize]
                        .injections
                        .iter()
                        .map(|&(at, _)| at)
                        .collect();
                    if !pending.is_empty() {
                        self.acc.active_generators += 1;
                    }
                    for at in pending {
                        self.engine
                            .schedule(at, EventKind::TrafficGen { host: h })?;
                    }
                }
            }
        }
        for jam in jams {
            self.engine.schedule(
                jam.at,
                EventKind::Jam {
                    airtime_ns: jam.airtime_ns,
                },
            )?;
            self.pending_jams += 1;
        }
        for sid in 1..=n {
            self.engine.schedule(
                SimTime(MOBILITY_TICK_NS),
                EventKind::MobilityTick { station: sid },
            )?;
        }
        Ok(())
    }

    fn done(&self) -> bool {
        match self.mode {
            Mode::Saturate => false,
            Mode::Ping | Mode::Injected => {
                self.acc.outstanding == 0
                    && self.acc.active_generators == 0
                    && self.pending_jams == 0
            }
        }
    }

    fn run(&mut self) -> Result<bool, SimError> {
        let mut cutoff_hit = false;
        while let Some((t, ev)) = self.engine.pop_next() {
            if t.as_ns() > self.cutoff_ns {
                cutoff_hit = true;
                break;
            }
            self.handle(ev.kind)?;
            if self.done() {
                break;
            }
        }
        Ok(cutoff_hit)
    }

    fn handle(&mut self, kind: EventKind) -> Result<(), SimError> {
        let now = self.engine.now();
        match kind {
            EventKind::TrafficGen { host } => self.handle_traffic_gen(host, now),
            EventKind::MobilityTick { station } => {
                let st = &mut self.stations[station as usize];
                st.mobility = station::mobility_step(
                    st.mobility,
                    1.0,
                    &self.mob_params,
                    &mut st.mobility_rng,
                );
                self.engine
                    .schedule(now + MOBILITY_TICK_NS, EventKind::MobilityTick { station })?;
                Ok(())
            }
            EventKind::TxEnd { tx } => self.handle_tx_end(tx, now),
            EventKind::MacTimer { station, kind } => {
                self.stations[station as usize].timers[timer_index(kind)] = None;
                self.dispatch_mac(station, timer_input(kind))
            }
            EventKind::Jam { airtime_ns } => {
                self.pending_jams -= 1;
                let frame = Frame::ack(PHANTOM_STATION, PHANTOM_STATION);
                let (tx, went_busy) =
                    self.channel
                        .begin_tx(PHANTOM_STATION, frame, now, airtime_ns)?;
                self.engine
                    .schedule(now + airtime_ns, EventKind::TxEnd { tx })?;
                if went_busy {
                    self.broadcast(MacInput::ChannelBusy)?;
                }
                Ok(())
            }
        }
    }

    fn handle_traffic_gen(&mut self, host: StationId, now: SimTime) -> Result<(), SimError> {
        match self.mode {
            Mode::Ping => {
                let st = &mut self.stations[host as usize];
                debug_assert!(st.remaining_packets > 0);
                st.remaining_packets -= 1;
                let dst = station::pick_destination(host, self.cfg.n_hosts, &mut st.traffic_rng);
                let more = st.remaining_packets > 0;
                self.offer_and_enqueue(host, dst, AppKind::Request, now)?;
                if more {
                    self.engine
                        .schedule(now + self.cfg.interval_ns(), EventKind::TrafficGen { host })?;
                } else {
                    self.acc.active_generators -= 1;
                }
            }
            Mode::Saturate => {
                self.offer_and_enqueue(host, AP, AppKind::Request, now)?;
            }
            Mode::Injected => {
                let st = &mut self.stations[host as usize];
                let (_, final_dst) = st.injections.pop_front().expect("injection missing");
                let drained = st.injections.is_empty();
                self.offer_and_enqueue(host, final_dst, AppKind::Request, now)?;
                if drained {
                    self.acc.active_generators -= 1;
                }
            }
        }
        Ok(())
    }

    /// Offers a new application packet at `src` and pushes its first hop into
    /// the MAC queue. Requests to another host ride via the AP.
    fn offer_and_enqueue(
        &mut self,
        src: StationId,
        final_dst: StationId,
        kind: AppKind,
        now: SimTime,
    ) -> Result<(), SimError> {
        let tag = self.next_tag;
        self.next_tag += 1;
        self.acc.offered += 1;
        self.acc.outstanding += 1;
        if self.acc.first_offer.is_none() {
            self.acc.first_offer = Some(now);
        }
        if kind == AppKind::Request {
            self.acc.rtt_pending.insert(tag, now);
        }
        let descriptor = AppDescriptor {
            tag,
            origin: src,
            final_dst,
            kind,
        };
        let mac_dst = if final_dst == AP || src == AP {
            final_dst
        } else {
            AP
        };
        let frame = Frame::data(src, mac_dst, self.cfg.payload_bytes, descriptor);
        self.dispatch_mac(src, MacInput::Enqueue(frame))
    }

    fn handle_tx_end(&mut self, tx: usize, now: SimTime) -> Result<(), SimError> {
        let (tx, outcome, went_idle) = self.channel.finish_tx(tx, now)?;
        if tx.source != PHANTOM_STATION {
            self.dispatch_mac(
                tx.source,
                MacInput::TxComplete {
                    frame: tx.frame,
                    outcome,
                },
            )?;
        }
        if outcome == Outcome::Delivered {
            for sid in 0..self.stations.len() as StationId {
                if sid != tx.source {
                    self.dispatch_mac(sid, MacInput::FrameDelivered(tx.frame))?;
                }
            }
        }
        if let Some(prev_collided) = went_idle {
            self.broadcast(MacInput::ChannelIdle { prev_collided })?;
        }
        Ok(())
    }

    fn broadcast(&mut self, input: MacInput) -> Result<(), SimError> {
        for sid in 0..self.stations.len() as StationId {
            self.dispatch_mac(sid, input)?;
        }
        Ok(())
    }

    fn dispatch_mac(&mut self, sid: StationId, input: MacInput) -> Result<(), SimError> {
        let now = self.engine.now();
        let trace_before = self
            .mac_trace
            .as_ref()
            .map(|_| (self.stations[sid as usize].mac.phase.name(), input.name()));
        let view = ChannelView {
            busy: self.channel.is_busy(),
            idle_since: self.channel.idle_since(),
        };
        let st = &mut self.stations[sid as usize];
        let actions = mac_step(
            &mut st.mac,
            &self.params,
            input,
            now,
            view,
            &mut st.backoff_rng,
        )?;
        for action in actions {
            self.apply_action(sid, action, now)?;
        }
        if let Some((before, input_name)) = trace_before {
            let after = self.stations[sid as usize].mac.phase.name();
            if let Some(trace) = &mut self.mac_trace {
                trace.push(format!(
                    "{} st={sid} {input_name}: {before} -> {after}",
                    now.as_ns()
                ));
            }
        }
        Ok(())
    }

    fn apply_action(
        &mut self,
        sid: StationId,
        action: crate::mac::MacAction,
        now: SimTime,
    ) -> Result<(), SimError> {
        use crate::mac::MacAction;
        match action {
            MacAction::StartTx(frame) => {
                let airtime = frame_airtime(frame.kind, frame.payload_bytes, &self.params)?;
                let (tx, went_busy) = self.channel.begin_tx(sid, frame, now, airtime)?;
                self.engine
                    .schedule(now + airtime, EventKind::TxEnd { tx })?;
                if went_busy {
                    self.broadcast(MacInput::ChannelBusy)?;
                }
            }
            MacAction::Arm { kind, at } => {
                let id = self
                    .engine
                    .schedule(at, EventKind::MacTimer { station: sid, kind })?;
                let slot = &mut self.stations[sid as usize].timers[timer_index(kind)];
                debug_assert!(slot.is_none(), "timer {kind:?} armed twice");
                *slot = Some(id);
            }
            MacAction::Cancel(kind) => {
                let slot = &mut self.stations[sid as usize].timers[timer_index(kind)];
                let id = slot.take().expect("cancelling unarmed timer");
                self.engine.cancel(id);
            }
            MacAction::Deliver(frame) => self.app_receive(sid, frame, now)?,
            MacAction::Resolved { frame, outcome } => {
                self.app_resolved(sid, frame, outcome, now)?
            }
            MacAction::QueueRejected(frame) => {
                let desc = frame
                    .descriptor
                    .ok_or(SimError::MalformedDescriptor { station: sid })?;
                self.resolve_packet(desc, Resolution::DroppedOverflow, now)?;
            }
        }
        Ok(())
    }

    /// A data frame reached `sid` at the MAC level: relay it onward or
    /// terminate it here.
    fn app_receive(&mut self, sid: StationId, frame: Frame, now: SimTime) -> Result<(), SimError> {
        let desc = frame
            .descriptor
            .ok_or(SimError::MalformedDescriptor { station: sid })?;
        if sid == AP && desc.final_dst != AP {
            self.acc.relay_offers += 1;
            let relay = Frame::data(AP, desc.final_dst, frame.payload_bytes, desc);
            return self.dispatch_mac(AP, MacInput::Enqueue(relay));
        }
        if desc.final_dst != sid {
            return Err(SimError::MalformedDescriptor { station: sid });
        }
        self.resolve_packet(desc, Resolution::Delivered, now)?;
        match desc.kind {
            AppKind::Request => {
                if matches!(self.mode, Mode::Ping | Mode::Injected) && desc.origin != sid {
                    // echo a reply of equal size back to the originator
                    let tag = desc.tag;
                    self.acc.offered += 1;
                    self.acc.outstanding += 1;
                    let reply_desc = AppDescriptor {
                        tag,
                        origin: sid,
                        final_dst: desc.origin,
                        kind: AppKind::Reply,
                    };
                    let mac_dst = if sid == AP || desc.origin == AP {
                        desc.origin
                    } else {
                        AP
                    };
                    let reply = Frame::data(sid, mac_dst, self.cfg.payload_bytes, reply_desc);
                    self.dispatch_mac(sid, MacInput::Enqueue(reply))?;
                }
            }
            AppKind::Reply => {
                if self.cfg.rtt_mode == RttMode::Ping {
                    let sent = self
                        .acc
                        .rtt_pending
                        .remove(&desc.tag)
                        .expect("reply without pending request");
                    self.acc.rtt_samples.push(now.since(sent));
                }
            }
        }
        Ok(())
    }

    /// The sender-side MAC resolved its head frame.
    fn app_resolved(
        &mut self,
        sid: StationId,
        frame: Frame,
        outcome: TxResolution,
        now: SimTime,
    ) -> Result<(), SimError> {
        let desc = frame
            .descriptor
            .ok_or(SimError::MalformedDescriptor { station: sid })?;
        match outcome {
            TxResolution::Success => {
                if self.cfg.rtt_mode == RttMode::MacAck
                    && desc.kind == AppKind::Request
                    && desc.origin == sid
                {
                    if let Some(sent) = self.acc.rtt_pending.remove(&desc.tag) {
                        self.acc.rtt_samples.push(now.since(sent));
                    }
                }
            }
            TxResolution::DroppedRetry => {
                self.resolve_packet(desc, Resolution::DroppedRetry, now)?;
            }
        }
        if self.mode == Mode::Saturate && sid != AP && outcome != TxResolution::Success {
            // keep the station backlogged after a discard; successes refill
            // on delivery at the AP
            self.offer_and_enqueue(sid, AP, AppKind::Request, now)?;
        }
        Ok(())
    }

    fn resolve_packet(
        &mut self,
        desc: AppDescriptor,
        resolution: Resolution,
        now: SimTime,
    ) -> Result<(), SimError> {
        debug_assert!(self.acc.outstanding > 0);
        self.acc.outstanding -= 1;
        self.acc.last_resolution = Some(now);
        match resolution {
            Resolution::Delivered => {
                self.acc.delivered_total += 1;
                if desc.kind == AppKind::Request {
                    self.acc.delivered_requests += 1;
                    if self.mode == Mode::Saturate && desc.origin != AP {
                        self.offer_and_enqueue(desc.origin, AP, AppKind::Request, now)?;
                    }
                }
            }
            Resolution::DroppedRetry => self.acc.dropped_retry += 1,
            Resolution::DroppedOverflow => {
                self.acc.dropped_overflow += 1;
                if self.mode == Mode::Saturate && desc.origin != AP && desc.kind == AppKind::Request
                {
                    self.offer_and_enqueue(desc.origin, AP, AppKind::Request, now)?;
                }
            }
        }
        Ok(())
    }

    fn finalize(&mut self, cutoff_hit: bool) -> RunMetrics {
        let acc = &self.acc;
        assert_eq!(
            acc.offered,
            acc.delivered_total + acc.dropped_retry + acc.dropped_overflow + acc.outstanding,
            "packet conservation violated"
        );
        let t_start = acc.first_offer.unwrap_or(SimTime::ZERO);
        let t_end = if cutoff_hit {
            SimTime(self.cutoff_ns)
        } else {
            acc.last_resolution.unwrap_or(t_start)
        };
        let sent_total = match self.cfg.loss_denominator {
            LossDenominator::HostPackets => acc.offered,
            LossDenominator::AllHops => acc.offered + acc.relay_offers,
        };
        let collision_events = self.channel.collision_periods.len() as u64;
        let collision_busy_ns = self
            .channel
            .collision_periods
            .iter()
            .map(|p| p.end.since(p.start))
            .sum();
        RunMetrics {
            n_succpacket: acc.delivered_requests,
            sent_total,
            delivered_total: acc.delivered_total,
            dropped_retry: acc.dropped_retry,
            dropped_overflow: acc.dropped_overflow,
            unresolved_at_cutoff: if cutoff_hit { acc.outstanding } else { 0 },
            t_start,
            t_end,
            rtt_samples: acc.rtt_samples.clone(),
            collision_events,
            collision_busy_ns,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Resolution {
    Delivered,
    DroppedRetry,
    DroppedOverflow,
}

fn execute(
    cfg: &ScenarioConfig,
    mode: Mode,
    cutoff_ns: u64,
    injections: &[Injection],
    jams: &[Jam],
    opts: RunOptions,
) -> Result<RunOutput, SimError> {
    let mut world = World::new(cfg, mode, cutoff_ns, opts);
    world.seed_initial_events(injections, jams)?;
    let cutoff_hit = world.run()?;
    let metrics = world.finalize(cutoff_hit);
    Ok(RunOutput {
        metrics,
        tx_trace: world.channel.trace.take(),
        mac_trace: world.mac_trace.take(),
    })
}

/// Runs the standard scenario: periodic ping traffic relayed by the AP,
/// terminating when every offered packet resolves or at the cutoff.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunMetrics, SimError> {
    run_full(cfg, RunOptions::default()).map(|o| o.metrics)
}

pub fn run_full(cfg: &ScenarioConfig, opts: RunOptions) -> Result<RunOutput, SimError> {
    execute(cfg, Mode::Ping, cfg.max_sim_time_ns(), &[], &[], opts)
}

/// Runs with only the given packet injections and raw jams; echo semantics
/// as in the standard scenario.
pub fn run_injected(
    cfg: &ScenarioConfig,
    injections: &[Injection],
    jams: &[Jam],
    opts: RunOptions,
) -> Result<RunOutput, SimError> {
    execute(
        cfg,
        Mode::Injected,
        cfg.max_sim_time_ns(),
        injections,
        jams,
        opts,
    )
}

/// Saturation run: every host always backlogged toward the AP, no relay or
/// echo traffic, hard stop at `horizon_ns`.
pub fn run_saturated(
    cfg: &ScenarioConfig,
    horizon_ns: u64,
    opts: RunOptions,
) -> Result<RunOutput, SimError> {
    execute(cfg, Mode::Saturate, horizon_ns, &[], &[], opts)
}

/// Delivered payload bits per second under saturation.
pub fn saturated_throughput_bps(cfg: &ScenarioConfig, horizon_ns: u64) -> Result<f64, SimError> {
    let out = run_saturated(cfg, horizon_ns, RunOptions::default())?;
    let m = &out.metrics;
    Ok(m.n_succpacket as f64 * cfg.payload_bytes as f64 * 8.0 / m.duration_s())
}
