//! Per-station DCF state machine.
//!
//! The MAC is a pure state machine: `mac_step` maps (state, input, channel
//! view, rng draw) to a new state plus a list of actions for the simulation
//! harness to apply (start a transmission, arm or cancel a timer, deliver a
//! frame upward, report a resolution). It can be exercised from tests without
//! the event engine.
//!
//! Timing conventions:
//! - A station whose head-of-queue packet arrives while the medium has
//!   already been idle for DIFS (and its NAV has expired) transmits
//!   immediately, with no backoff. If the idle run is shorter than DIFS it
//!   keeps sensing and transmits the moment the run reaches DIFS.
//! - A station that found the medium busy (physically or by NAV) draws a
//!   backoff and serves it: the counter decrements at slot boundaries
//!   anchored where an idle-DIFS completes, freezes on busy, and resumes
//!   after the next idle-DIFS.
//! - Backoff decisions at a slot boundary use the channel state strictly
//!   before the boundary, so two stations reaching zero in the same slot
//!   both transmit and collide; a timer firing at the same instant a
//!   transmission starts is left to fire.
//! - After an ACK/CTS timeout the retry waits a full DIFS from the timeout
//!   instant; elapsed idle time is not credited.
//! - A receiver hands a data frame to the layer above when its own ACK
//!   transmission completes, which is also the instant the sender learns of
//!   success.

use std::collections::VecDeque;

use rand::Rng;

use crate::channel::Outcome;
use crate::engine::{StationId, TimerKind};
use crate::error::SimError;
use crate::frame::{Frame, FrameKind, MAC_MTU_BYTES};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessMethod {
    Basic,
    RtsCts,
}

#[derive(Debug, Clone)]
pub struct MacParams {
    pub slot_ns: u64,
    pub sifs_ns: u64,
    pub difs_ns: u64,
    pub cw_min: u32,
    pub cw_max: u32,
    pub retry_limit: u32,
    pub phy_header_bits: u32,
    pub mac_header_bits: u32,
    pub ack_bits: u32,
    pub cts_bits: u32,
    pub rts_bits: u32,
    pub data_bitrate_bps: u64,
    pub basic_rate_bps: u64,
    pub access_method: AccessMethod,
    pub ack_timeout_extra_ns: u64,
    pub use_eifs: bool,
}

impl Default for MacParams {
    fn default() -> Self {
        MacParams {
            slot_ns: 20_000,
            sifs_ns: 10_000,
            difs_ns: 50_000,
            cw_min: 31,
            cw_max: 1023,
            retry_limit: 7,
            phy_header_bits: 192,
            mac_header_bits: 224,
            ack_bits: 112,
            cts_bits: 112,
            rts_bits: 160,
            data_bitrate_bps: 2_000_000,
            basic_rate_bps: 1_000_000,
            access_method: AccessMethod::Basic,
            ack_timeout_extra_ns: 20_000,
            use_eifs: false,
        }
    }
}

fn div_ceil_ns(bits: u64, rate_bps: u64) -> u64 {
    let num = bits as u128 * 1_000_000_000;
    num.div_ceil(rate_bps as u128) as u64
}

/// Uniform draw on [0, cw] inclusive.
pub fn draw_backoff<R: Rng>(cw: u32, rng: &mut R) -> u32 {
    if cw == 0 {
        // consume nothing: the draw is degenerate
        return 0;
    }
    rng.gen_range(0..=cw)
}

/// Contention window after a failed attempt: doubled until CWmax.
pub fn cw_after_failure(cw: u32, cw_max: u32) -> u32 {
    (2 * cw + 1).min(cw_max)
}

/// Contention window after a success or a retry-limit discard.
pub fn cw_after_success(cw_min: u32) -> u32 {
    cw_min
}

/// On-air duration of a frame, rounded up to whole nanoseconds per
/// component. The PHY preamble/header and all control frames go out at the
/// basic rate; only the data MPDU rides the configured bitrate.
pub fn frame_airtime(kind: FrameKind, payload_bytes: u32, p: &MacParams) -> Result<u64, SimError> {
    let phy = div_ceil_ns(p.phy_header_bits as u64, p.basic_rate_bps);
    match kind {
        FrameKind::Data => {
            if payload_bytes > MAC_MTU_BYTES {
                return Err(SimError::PayloadOverMtu {
                    payload_bytes,
                    mtu: MAC_MTU_BYTES,
                });
            }
            let bits = p.mac_header_bits as u64 + 8 * payload_bytes as u64;
            Ok(phy + div_ceil_ns(bits, p.data_bitrate_bps))
        }
        FrameKind::Ack => Ok(phy + div_ceil_ns(p.ack_bits as u64, p.basic_rate_bps)),
        FrameKind::Cts => Ok(phy + div_ceil_ns(p.cts_bits as u64, p.basic_rate_bps)),
        FrameKind::Rts => Ok(phy + div_ceil_ns(p.rts_bits as u64, p.basic_rate_bps)),
    }
}

/// How long a sender waits for an ACK before declaring the attempt failed:
/// SIFS + ACK airtime + a small guard (one slot by default), the minimal
/// value that cannot fire while the ACK is still legitimately in flight.
pub fn ack_timeout(p: &MacParams) -> u64 {
    p.sifs_ns
        + frame_airtime(FrameKind::Ack, 0, p).expect("control airtime")
        + p.ack_timeout_extra_ns
}

pub fn cts_timeout(p: &MacParams) -> u64 {
    p.sifs_ns
        + frame_airtime(FrameKind::Cts, 0, p).expect("control airtime")
        + p.ack_timeout_extra_ns
}

fn eifs(p: &MacParams) -> u64 {
    p.sifs_ns + frame_airtime(FrameKind::Ack, 0, p).expect("control airtime") + p.difs_ns
}

/// What the channel looks like to a station at the instant of a step.
#[derive(Debug, Clone, Copy)]
pub struct ChannelView {
    pub busy: bool,
    pub idle_since: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    /// Sensing toward an immediate (no-backoff) transmission.
    WaitDifs,
    /// Serving a drawn backoff; `anchor` is the slot-boundary origin while
    /// counting, `None` while frozen.
    Backoff {
        anchor: Option<SimTime>,
    },
    Transmitting,
    AwaitCts,
    AwaitAck,
    /// Mandatory backoff after a transmission resolves, served before the
    /// next packet may transmit.
    PostBackoff {
        anchor: Option<SimTime>,
    },
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Idle => "Idle",
            Phase::WaitDifs => "WaitDifs",
            Phase::Backoff { .. } => "Backoff",
            Phase::Transmitting => "Transmitting",
            Phase::AwaitCts => "AwaitCts",
            Phase::AwaitAck => "AwaitAck",
            Phase::PostBackoff { .. } => "PostBackoff",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacInput {
    Enqueue(Frame),
    ChannelBusy,
    ChannelIdle { prev_collided: bool },
    DifsEnd,
    BackoffComplete,
    TxComplete { frame: Frame, outcome: Outcome },
    FrameDelivered(Frame),
    ResponseDue,
    DataDue,
    AckTimeout,
    CtsTimeout,
}

impl MacInput {
    pub fn name(&self) -> &'static str {
        match self {
            MacInput::Enqueue(_) => "Enqueue",
            MacInput::ChannelBusy => "ChannelBusy",
            MacInput::ChannelIdle { .. } => "ChannelIdle",
            MacInput::DifsEnd => "DifsEnd",
            MacInput::BackoffComplete => "BackoffComplete",
            MacInput::TxComplete { .. } => "TxComplete",
            MacInput::FrameDelivered(_) => "FrameDelivered",
            MacInput::ResponseDue => "ResponseDue",
            MacInput::DataDue => "DataDue",
            MacInput::AckTimeout => "AckTimeout",
            MacInput::CtsTimeout => "CtsTimeout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxResolution {
    Success,
    DroppedRetry,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MacAction {
    StartTx(Frame),
    Arm {
        kind: TimerKind,
        at: SimTime,
    },
    Cancel(TimerKind),
    /// Hand a received data frame to the application layer.
    Deliver(Frame),
    /// The head-of-queue frame finished its MAC lifetime.
    Resolved {
        frame: Frame,
        outcome: TxResolution,
    },
    /// Enqueue refused: transmit queue at capacity.
    QueueRejected(Frame),
}

#[derive(Debug, Clone)]
pub struct MacState {
    pub station: StationId,
    pub phase: Phase,
    pub backoff_remaining: u32,
    pub cw_current: u32,
    pub retry_count: u32,
    pub nav_until: SimTime,
    pub queue: VecDeque<Frame>,
    queue_capacity: usize,
    /// DifsEnd fire time while one is armed, for same-instant busy handling.
    difs_fire: Option<SimTime>,
    /// ACK or CTS waiting for its SIFS.
    response: Option<Frame>,
    /// Data frame to deliver upward once our own ACK transmission completes.
    deliver_after_ack: Option<Frame>,
    /// The previous busy period ended in a collision (EIFS hook).
    last_period_collided: bool,
}

impl MacState {
    pub fn new(station: StationId, params: &MacParams, queue_capacity: usize) -> Self {
        MacState {
            station,
            phase: Phase::Idle,
            backoff_remaining: 0,
            cw_current: params.cw_min,
            retry_count: 0,
            nav_until: SimTime::ZERO,
            queue: VecDeque::new(),
            queue_capacity,
            difs_fire: None,
            response: None,
            deliver_after_ack: None,
            last_period_collided: false,
        }
    }

    fn required_gap(&self, p: &MacParams) -> u64 {
        if p.use_eifs && self.last_period_collided {
            eifs(p)
        } else {
            p.difs_ns
        }
    }

    /// Virtual-carrier-aware start of the current idle run.
    fn effective_idle_start(&self, view: ChannelView) -> SimTime {
        view.idle_since.max(self.nav_until)
    }

    fn illegal(&self, now: SimTime, input: &MacInput) -> SimError {
        SimError::IllegalTransition {
            now,
            station: self.station,
            phase: self.phase.name().to_string(),
            input: input.name().to_string(),
        }
    }
}

/// Updates the NAV from an overheard RTS/CTS duration field.
pub fn nav_update(state: &mut MacState, duration_field_ns: u64, now: SimTime) {
    state.nav_until = state.nav_until.max(now + duration_field_ns);
}

fn arm_difs(state: &mut MacState, at: SimTime, actions: &mut Vec<MacAction>) {
    debug_assert!(state.difs_fire.is_none(), "DIFS timer armed twice");
    state.difs_fire = Some(at);
    actions.push(MacAction::Arm {
        kind: TimerKind::DifsEnd,
        at,
    });
}

/// Puts the head-of-queue attempt on air: the data frame itself in basic
/// mode, an RTS reserving the whole exchange in RTS/CTS mode.
fn start_attempt(
    state: &mut MacState,
    p: &MacParams,
    actions: &mut Vec<MacAction>,
) -> Result<(), SimError> {
    let head = *state.queue.front().expect("attempt without head frame");
    debug_assert_eq!(head.kind, FrameKind::Data);
    let frame = match p.access_method {
        AccessMethod::Basic => head,
        AccessMethod::RtsCts => {
            let data_air = frame_airtime(FrameKind::Data, head.payload_bytes, p)?;
            let cts_air = frame_airtime(FrameKind::Cts, 0, p)?;
            let ack_air = frame_airtime(FrameKind::Ack, 0, p)?;
            let duration = 3 * p.sifs_ns + cts_air + data_air + ack_air;
            Frame::rts(state.station, head.dst, duration)
        }
    };
    state.phase = Phase::Transmitting;
    actions.push(MacAction::StartTx(frame));
    Ok(())
}

/// Common tail for ACK and CTS timeouts: count the failure, either discard
/// the packet (resetting CW) or climb the ladder, then serve a new backoff
/// starting with a fresh DIFS measured from the timeout itself.
fn handle_failure(
    state: &mut MacState,
    p: &MacParams,
    now: SimTime,
    view: ChannelView,
    rng: &mut impl Rng,
    actions: &mut Vec<MacAction>,
) {
    if state.retry_count == p.retry_limit {
        let frame = state.queue.pop_front().expect("drop without head frame");
        actions.push(MacAction::Resolved {
            frame,
            outcome: TxResolution::DroppedRetry,
        });
        state.cw_current = cw_after_success(p.cw_min);
        state.retry_count = 0;
        state.backoff_remaining = draw_backoff(state.cw_current, rng);
        state.phase = Phase::PostBackoff { anchor: None };
    } else {
        state.retry_count += 1;
        state.cw_current = cw_after_failure(state.cw_current, p.cw_max);
        state.backoff_remaining = draw_backoff(state.cw_current, rng);
        state.phase = Phase::Backoff { anchor: None };
    }
    if !view.busy {
        let at = now.max(state.nav_until) + state.required_gap(p);
        arm_difs(state, at, actions);
    }
}

pub fn mac_step(
    state: &mut MacState,
    p: &MacParams,
    input: MacInput,
    now: SimTime,
    view: ChannelView,
    rng: &mut impl Rng,
) -> Result<Vec<MacAction>, SimError> {
    let mut actions = Vec::new();
    match input {
        MacInput::Enqueue(frame) => {
            if state.queue.len() >= state.queue_capacity {
                actions.push(MacAction::QueueRejected(frame));
                return Ok(actions);
            }
            state.queue.push_back(frame);
            if state.phase == Phase::Idle {
                debug_assert_eq!(state.queue.len(), 1);
                if view.busy || state.nav_until > now {
                    // medium busy (physically or by NAV): defer and draw
                    state.backoff_remaining = draw_backoff(state.cw_current, rng);
                    state.phase = Phase::Backoff { anchor: None };
                    if !view.busy {
                        let at = state.effective_idle_start(view) + state.required_gap(p);
                        arm_difs(state, at, &mut actions);
                    }
                } else {
                    let idle_start = state.effective_idle_start(view);
                    let gap = state.required_gap(p);
                    if now.since(idle_start) >= gap {
                        start_attempt(state, p, &mut actions)?;
                    } else {
                        state.phase = Phase::WaitDifs;
                        arm_difs(state, idle_start + gap, &mut actions);
                    }
                }
            }
        }

        MacInput::ChannelBusy => match state.phase {
            Phase::WaitDifs => {
                let fire = state.difs_fire.expect("WaitDifs without timer");
                if fire != now {
                    // busy during the DIFS: fall back to a drawn backoff
                    state.difs_fire = None;
                    actions.push(MacAction::Cancel(TimerKind::DifsEnd));
                    state.backoff_remaining = draw_backoff(state.cw_current, rng);
                    state.phase = Phase::Backoff { anchor: None };
                }
                // fire == now: the DIFS completes at this very instant on the
                // strength of the slot just observed idle; let it transmit.
            }
            Phase::Backoff { anchor } | Phase::PostBackoff { anchor } => {
                let post = matches!(state.phase, Phase::PostBackoff { .. });
                match anchor {
                    None => {
                        if let Some(fire) = state.difs_fire {
                            let zero_and_due = state.backoff_remaining == 0 && fire == now;
                            if !zero_and_due {
                                state.difs_fire = None;
                                actions.push(MacAction::Cancel(TimerKind::DifsEnd));
                            }
                        }
                    }
                    Some(t0) => {
                        let complete = t0 + state.backoff_remaining as u64 * p.slot_ns;
                        if complete != now {
                            let elapsed = (now.since(t0) / p.slot_ns) as u32;
                            debug_assert!(elapsed < state.backoff_remaining);
                            state.backoff_remaining -= elapsed;
                            actions.push(MacAction::Cancel(TimerKind::BackoffComplete));
                            state.phase = if post {
                                Phase::PostBackoff { anchor: None }
                            } else {
                                Phase::Backoff { anchor: None }
                            };
                        }
                        // complete == now: it reached zero in the slot that
                        // just ended; the pending completion transmits.
                    }
                }
            }
            _ => {}
        },

        MacInput::ChannelIdle { prev_collided } => {
            state.last_period_collided = prev_collided;
            match state.phase {
                Phase::Backoff { anchor: None } | Phase::PostBackoff { anchor: None } => {
                    if state.difs_fire.is_none() {
                        let at = now.max(state.nav_until) + state.required_gap(p);
                        arm_difs(state, at, &mut actions);
                    }
                }
                Phase::Backoff { anchor: Some(_) } | Phase::PostBackoff { anchor: Some(_) } => {
                    return Err(state.illegal(now, &input));
                }
                _ => {}
            }
        }

        MacInput::DifsEnd => {
            state.difs_fire = None;
            match state.phase {
                Phase::WaitDifs => {
                    start_attempt(state, p, &mut actions)?;
                }
                Phase::Backoff { anchor: None } => {
                    if state.backoff_remaining == 0 {
                        start_attempt(state, p, &mut actions)?;
                    } else {
                        let at = now + state.backoff_remaining as u64 * p.slot_ns;
                        state.phase = Phase::Backoff { anchor: Some(now) };
                        actions.push(MacAction::Arm {
                            kind: TimerKind::BackoffComplete,
                            at,
                        });
                    }
                }
                Phase::PostBackoff { anchor: None } => {
                    if state.backoff_remaining == 0 {
                        if state.queue.is_empty() {
                            state.phase = Phase::Idle;
                        } else {
                            start_attempt(state, p, &mut actions)?;
                        }
                    } else {
                        let at = now + state.backoff_remaining as u64 * p.slot_ns;
                        state.phase = Phase::PostBackoff { anchor: Some(now) };
                        actions.push(MacAction::Arm {
                            kind: TimerKind::BackoffComplete,
                            at,
                        });
                    }
                }
                _ => return Err(state.illegal(now, &input)),
            }
        }

        MacInput::BackoffComplete => match state.phase {
            Phase::Backoff { anchor: Some(t0) } => {
                debug_assert_eq!(now.since(t0), state.backoff_remaining as u64 * p.slot_ns);
                state.backoff_remaining = 0;
                start_attempt(state, p, &mut actions)?;
            }
            Phase::PostBackoff { anchor: Some(_) } => {
                state.backoff_remaining = 0;
                if state.queue.is_empty() {
                    state.phase = Phase::Idle;
                } else {
                    start_attempt(state, p, &mut actions)?;
                }
            }
            _ => return Err(state.illegal(now, &input)),
        },

        MacInput::TxComplete { frame, outcome } => match frame.kind {
            FrameKind::Ack => {
                // our response finished; release the frame upward only if the
                // ACK actually made it out clean
                let pending = state.deliver_after_ack.take();
                if outcome == Outcome::Delivered {
                    if let Some(data) = pending {
                        actions.push(MacAction::Deliver(data));
                    }
                }
            }
            FrameKind::Cts => {}
            FrameKind::Data => {
                if state.phase != Phase::Transmitting {
                    return Err(state.illegal(now, &input));
                }
                state.phase = Phase::AwaitAck;
                actions.push(MacAction::Arm {
                    kind: TimerKind::AckTimeout,
                    at: now + ack_timeout(p),
                });
            }
            FrameKind::Rts => {
                if state.phase != Phase::Transmitting {
                    return Err(state.illegal(now, &input));
                }
                state.phase = Phase::AwaitCts;
                actions.push(MacAction::Arm {
                    kind: TimerKind::CtsTimeout,
                    at: now + cts_timeout(p),
                });
            }
        },

        MacInput::FrameDelivered(frame) => {
            if frame.dst == state.station {
                match frame.kind {
                    FrameKind::Data => {
                        debug_assert!(state.response.is_none(), "response slot occupied");
                        state.response = Some(Frame::ack(state.station, frame.src));
                        state.deliver_after_ack = Some(frame);
                        actions.push(MacAction::Arm {
                            kind: TimerKind::ResponseDue,
                            at: now + p.sifs_ns,
                        });
                    }
                    FrameKind::Rts => {
                        // a station whose NAV is still running stays silent
                        if state.nav_until <= now {
                            debug_assert!(state.response.is_none(), "response slot occupied");
                            let cts_air = frame_airtime(FrameKind::Cts, 0, p)?;
                            let remaining =
                                frame.duration_field_ns.saturating_sub(p.sifs_ns + cts_air);
                            state.response = Some(Frame::cts(state.station, frame.src, remaining));
                            actions.push(MacAction::Arm {
                                kind: TimerKind::ResponseDue,
                                at: now + p.sifs_ns,
                            });
                        }
                    }
                    FrameKind::Cts => {
                        if state.phase != Phase::AwaitCts {
                            return Err(state.illegal(now, &input));
                        }
                        actions.push(MacAction::Cancel(TimerKind::CtsTimeout));
                        actions.push(MacAction::Arm {
                            kind: TimerKind::DataDue,
                            at: now + p.sifs_ns,
                        });
                    }
                    FrameKind::Ack => {
                        if state.phase != Phase::AwaitAck {
                            return Err(state.illegal(now, &input));
                        }
                        actions.push(MacAction::Cancel(TimerKind::AckTimeout));
                        let frame = state.queue.pop_front().expect("success without head");
                        actions.push(MacAction::Resolved {
                            frame,
                            outcome: TxResolution::Success,
                        });
                        state.cw_current = cw_after_success(p.cw_min);
                        state.retry_count = 0;
                        state.backoff_remaining = draw_backoff(state.cw_current, rng);
                        // the ChannelIdle broadcast that follows this ACK's
                        // end arms the DIFS for the post-backoff
                        state.phase = Phase::PostBackoff { anchor: None };
                    }
                }
            } else {
                // overheard traffic: RTS/CTS duration fields drive the NAV
                if matches!(frame.kind, FrameKind::Rts | FrameKind::Cts) {
                    nav_update(state, frame.duration_field_ns, now);
                }
            }
        }

        MacInput::ResponseDue => {
            let frame = state
                .response
                .take()
                .ok_or_else(|| state.illegal(now, &input))?;
            // SIFS responses go out without sensing
            actions.push(MacAction::StartTx(frame));
        }

        MacInput::DataDue => {
            if state.phase != Phase::AwaitCts {
                return Err(state.illegal(now, &input));
            }
            let head = *state.queue.front().expect("DataDue without head frame");
            state.phase = Phase::Transmitting;
            actions.push(MacAction::StartTx(head));
        }

        MacInput::AckTimeout => {
            if state.phase != Phase::AwaitAck {
                return Err(state.illegal(now, &input));
            }
            handle_failure(state, p, now, view, rng, &mut actions);
        }

        MacInput::CtsTimeout => {
            if state.phase != Phase::AwaitCts {
                return Err(state.illegal(now, &input));
            }
            handle_failure(state, p, now, view, rng, &mut actions);
        }
    }
    Ok(actions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng() -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(42)
    }

    fn idle_view(since_ns: u64) -> ChannelView {
        ChannelView {
            busy: false,
            idle_since: SimTime(since_ns),
        }
    }

    fn busy_view() -> ChannelView {
        ChannelView {
            busy: true,
            idle_since: SimTime::ZERO,
        }
    }

    fn data_frame(src: StationId, dst: StationId, payload: u32) -> Frame {
        use crate::frame::{AppDescriptor, AppKind};
        Frame::data(
            src,
            dst,
            payload,
            AppDescriptor {
                tag: 9,
                origin: src,
                final_dst: dst,
                kind: AppKind::Request,
            },
        )
    }

    // --- pure operation values, hand-checked ---

    #[test]
    fn airtime_data_512b_at_2mbps() {
        let p = MacParams::default();
        assert_eq!(
            frame_airtime(FrameKind::Data, 512, &p).unwrap(),
            2_352_000 // 192 us PHY + 2160 us MPDU
        );
    }

    #[test]
    fn airtime_header_only_frame() {
        let p = MacParams::default();
        assert_eq!(frame_airtime(FrameKind::Data, 0, &p).unwrap(), 304_000);
    }

    #[test]
    fn airtime_rounds_up_at_11mbps() {
        let p = MacParams {
            data_bitrate_bps: 11_000_000,
            ..MacParams::default()
        };
        assert_eq!(frame_airtime(FrameKind::Data, 1024, &p).unwrap(), 957_091);
    }

    #[test]
    fn airtime_control_frames_at_basic_rate() {
        let p = MacParams::default();
        assert_eq!(frame_airtime(FrameKind::Ack, 0, &p).unwrap(), 304_000);
        assert_eq!(frame_airtime(FrameKind::Cts, 0, &p).unwrap(), 304_000);
        assert_eq!(frame_airtime(FrameKind::Rts, 0, &p).unwrap(), 352_000);
    }

    #[test]
    fn airtime_rejects_oversized_payload() {
        let p = MacParams::default();
        assert!(matches!(
            frame_airtime(FrameKind::Data, 1501, &p),
            Err(SimError::PayloadOverMtu { .. })
        ));
    }

    #[test]
    fn ack_timeout_is_sifs_ack_plus_slot() {
        let p = MacParams::default();
        assert_eq!(ack_timeout(&p), 334_000);
        let p0 = MacParams {
            ack_timeout_extra_ns: 0,
            ..MacParams::default()
        };
        assert_eq!(ack_timeout(&p0), 314_000);
    }

    #[test]
    fn cw_ladder_steps() {
        assert_eq!(cw_after_failure(31, 1023), 63);
        assert_eq!(cw_after_failure(511, 1023), 1023);
        assert_eq!(cw_after_failure(1023, 1023), 1023);
        assert_eq!(cw_after_success(31), 31);
    }

    #[test]
    fn full_cw_ladder_from_defaults() {
        let mut cw = 31;
        let mut seen = vec![cw];
        for _ in 0..6 {
            cw = cw_after_failure(cw, 1023);
            seen.push(cw);
        }
        assert_eq!(seen, vec![31, 63, 127, 255, 511, 1023, 1023]);
    }

    #[test]
    fn draw_backoff_bounds() {
        let mut r = rng();
        assert_eq!(draw_backoff(0, &mut r), 0);
        for _ in 0..1000 {
            let v = draw_backoff(31, &mut r);
            assert!(v <= 31);
        }
    }

    // --- state machine behaviors ---

    #[test]
    fn immediate_transmit_when_idle_at_least_difs() {
        let p = MacParams::default();
        let mut st = MacState::new(1, &p, 50);
        let mut r = rng();
        // channel idle for 100 us >= DIFS
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::Enqueue(data_frame(1, 0, 512)),
            SimTime(100_000),
            idle_view(0),
            &mut r,
        )
        .unwrap();
        assert!(matches!(acts[0], MacAction::StartTx(f) if f.kind == FrameKind::Data));
        assert_eq!(st.phase, Phase::Transmitting);
    }

    #[test]
    fn partial_idle_waits_out_the_difs() {
        let p = MacParams::default();
        let mut st = MacState::new(1, &p, 50);
        let mut r = rng();
        // enqueue at t=0 with idle elapsed 0: transmit exactly at DIFS
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::Enqueue(data_frame(1, 0, 512)),
            SimTime(0),
            idle_view(0),
            &mut r,
        )
        .unwrap();
        assert_eq!(
            acts,
            vec![MacAction::Arm {
                kind: TimerKind::DifsEnd,
                at: SimTime(50_000)
            }]
        );
        assert_eq!(st.phase, Phase::WaitDifs);
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::DifsEnd,
            SimTime(50_000),
            idle_view(0),
            &mut r,
        )
        .unwrap();
        assert!(matches!(acts[0], MacAction::StartTx(_)));
    }

    #[test]
    fn busy_during_difs_falls_back_to_backoff() {
        let p = MacParams::default();
        let mut st = MacState::new(1, &p, 50);
        let mut r = rng();
        mac_step(
            &mut st,
            &p,
            MacInput::Enqueue(data_frame(1, 0, 512)),
            SimTime(0),
            idle_view(0),
            &mut r,
        )
        .unwrap();
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::ChannelBusy,
            SimTime(30_000),
            busy_view(),
            &mut r,
        )
        .unwrap();
        assert!(acts.contains(&MacAction::Cancel(TimerKind::DifsEnd)));
        assert_eq!(st.phase, Phase::Backoff { anchor: None });
    }

    #[test]
    fn backoff_frozen_on_busy_keeps_remaining() {
        let p = MacParams::default();
        let mut st = MacState::new(1, &p, 50);
        st.queue.push_back(data_frame(1, 0, 512));
        st.backoff_remaining = 5;
        st.phase = Phase::Backoff {
            anchor: Some(SimTime(100_000)),
        };
        let mut r = rng();
        // busy lands inside the first slot: no decrement yet
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::ChannelBusy,
            SimTime(110_000),
            busy_view(),
            &mut r,
        )
        .unwrap();
        assert_eq!(acts, vec![MacAction::Cancel(TimerKind::BackoffComplete)]);
        assert_eq!(st.backoff_remaining, 5);
        assert_eq!(st.phase, Phase::Backoff { anchor: None });
    }

    #[test]
    fn backoff_freeze_counts_whole_elapsed_slots() {
        let p = MacParams::default();
        let mut st = MacState::new(1, &p, 50);
        st.queue.push_back(data_frame(1, 0, 512));
        st.backoff_remaining = 5;
        st.phase = Phase::Backoff {
            anchor: Some(SimTime(100_000)),
        };
        let mut r = rng();
        // busy at anchor + 2.5 slots: two boundary decrements happened
        mac_step(
            &mut st,
            &p,
            MacInput::ChannelBusy,
            SimTime(150_000),
            busy_view(),
            &mut r,
        )
        .unwrap();
        assert_eq!(st.backoff_remaining, 3);
    }

    #[test]
    fn completion_at_busy_instant_still_fires() {
        // a counter that hits zero in the slot that just closed transmits even
        // though another station starts at the same boundary
        let p = MacParams::default();
        let mut st = MacState::new(1, &p, 50);
        st.queue.push_back(data_frame(1, 0, 512));
        st.backoff_remaining = 2;
        st.phase = Phase::Backoff {
            anchor: Some(SimTime(100_000)),
        };
        let mut r = rng();
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::ChannelBusy,
            SimTime(140_000),
            busy_view(),
            &mut r,
        )
        .unwrap();
        assert!(acts.is_empty());
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::BackoffComplete,
            SimTime(140_000),
            busy_view(),
            &mut r,
        )
        .unwrap();
        assert!(matches!(acts[0], MacAction::StartTx(_)));
    }

    #[test]
    fn retry_limit_drop_resets_cw_and_counter() {
        let p = MacParams::default();
        let mut st = MacState::new(1, &p, 50);
        st.queue.push_back(data_frame(1, 0, 512));
        st.phase = Phase::AwaitAck;
        st.retry_count = 7;
        st.cw_current = 1023;
        let mut r = rng();
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::AckTimeout,
            SimTime(1_000_000),
            idle_view(0),
            &mut r,
        )
        .unwrap();
        assert!(matches!(
            acts[0],
            MacAction::Resolved {
                outcome: TxResolution::DroppedRetry,
                ..
            }
        ));
        assert_eq!(st.cw_current, 31);
        assert_eq!(st.retry_count, 0);
        assert!(matches!(st.phase, Phase::PostBackoff { anchor: None }));
    }

    #[test]
    fn timeout_retry_waits_fresh_difs() {
        let p = MacParams::default();
        let mut st = MacState::new(1, &p, 50);
        st.queue.push_back(data_frame(1, 0, 512));
        st.phase = Phase::AwaitAck;
        let mut r = rng();
        // idle since 0, timeout at 334 us: the new DIFS runs from the timeout
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::AckTimeout,
            SimTime(334_000),
            idle_view(0),
            &mut r,
        )
        .unwrap();
        assert_eq!(st.retry_count, 1);
        assert_eq!(st.cw_current, 63);
        assert!(acts.iter().any(|a| matches!(
            a,
            MacAction::Arm {
                kind: TimerKind::DifsEnd,
                at
            } if *at == SimTime(384_000)
        )));
    }

    #[test]
    fn nav_update_takes_the_max() {
        let p = MacParams::default();
        let mut st = MacState::new(2, &p, 50);
        nav_update(&mut st, 3_000_000, SimTime(10_000_000));
        assert_eq!(st.nav_until, SimTime(13_000_000));
        nav_update(&mut st, 1_000_000, SimTime(10_500_000));
        assert_eq!(st.nav_until, SimTime(13_000_000));
    }

    #[test]
    fn nav_blocked_station_sends_no_cts() {
        // three stations: 3 overhears the 1 -> 2 RTS, so an RTS addressed to
        // it during the reserved window gets no CTS until the NAV runs out
        let p = MacParams {
            access_method: AccessMethod::RtsCts,
            ..MacParams::default()
        };
        let mut st = MacState::new(3, &p, 50);
        let mut r = rng();
        let overheard = Frame::rts(1, 2, 2_990_000);
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::FrameDelivered(overheard),
            SimTime(1_000_000),
            idle_view(1_000_000),
            &mut r,
        )
        .unwrap();
        assert!(acts.is_empty());
        assert_eq!(st.nav_until, SimTime(3_990_000));

        let rts_to_me = Frame::rts(2, 3, 2_990_000);
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::FrameDelivered(rts_to_me),
            SimTime(2_000_000),
            idle_view(2_000_000),
            &mut r,
        )
        .unwrap();
        assert!(acts.is_empty(), "NAV-blocked station answered an RTS");
        // after NAV expiry the same RTS gets a CTS
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::FrameDelivered(rts_to_me),
            SimTime(4_000_000),
            idle_view(4_000_000),
            &mut r,
        )
        .unwrap();
        assert!(matches!(
            acts[0],
            MacAction::Arm {
                kind: TimerKind::ResponseDue,
                ..
            }
        ));
        assert_eq!(st.response.unwrap().kind, FrameKind::Cts);
    }

    #[test]
    fn delivered_data_is_acked_after_sifs() {
        let p = MacParams::default();
        let mut st = MacState::new(2, &p, 50);
        let mut r = rng();
        let frame = data_frame(1, 2, 512);
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::FrameDelivered(frame),
            SimTime(2_402_000),
            idle_view(2_402_000),
            &mut r,
        )
        .unwrap();
        assert_eq!(
            acts,
            vec![MacAction::Arm {
                kind: TimerKind::ResponseDue,
                at: SimTime(2_412_000)
            }]
        );
        // the frame reaches the app only when our ACK finishes cleanly
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::ResponseDue,
            SimTime(2_412_000),
            idle_view(2_402_000),
            &mut r,
        )
        .unwrap();
        let ack = match acts[0] {
            MacAction::StartTx(f) => f,
            _ => panic!("expected ack tx"),
        };
        assert_eq!(ack.kind, FrameKind::Ack);
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::TxComplete {
                frame: ack,
                outcome: Outcome::Delivered,
            },
            SimTime(2_716_000),
            idle_view(2_716_000),
            &mut r,
        )
        .unwrap();
        assert_eq!(acts, vec![MacAction::Deliver(frame)]);
    }

    #[test]
    fn ack_received_resets_cw_and_enters_post_backoff() {
        let p = MacParams::default();
        let mut st = MacState::new(1, &p, 50);
        let head = data_frame(1, 0, 512);
        st.queue.push_back(head);
        st.phase = Phase::AwaitAck;
        st.cw_current = 1023;
        st.retry_count = 4;
        let mut r = rng();
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::FrameDelivered(Frame::ack(0, 1)),
            SimTime(2_716_000),
            idle_view(2_716_000),
            &mut r,
        )
        .unwrap();
        assert!(acts.contains(&MacAction::Cancel(TimerKind::AckTimeout)));
        assert!(acts.contains(&MacAction::Resolved {
            frame: head,
            outcome: TxResolution::Success
        }));
        assert_eq!(st.cw_current, 31);
        assert_eq!(st.retry_count, 0);
        assert!(matches!(st.phase, Phase::PostBackoff { anchor: None }));
        assert!(st.queue.is_empty());
    }

    #[test]
    fn slot_like_input_outside_backoff_is_illegal() {
        let p = MacParams::default();
        let mut st = MacState::new(1, &p, 50);
        let mut r = rng();
        let err = mac_step(
            &mut st,
            &p,
            MacInput::BackoffComplete,
            SimTime(0),
            idle_view(0),
            &mut r,
        )
        .unwrap_err();
        assert!(matches!(err, SimError::IllegalTransition { .. }));
    }

    #[test]
    fn queue_overflow_rejects_frame() {
        let p = MacParams::default();
        let mut st = MacState::new(1, &p, 2);
        st.phase = Phase::AwaitAck; // park the data path
        let mut r = rng();
        for i in 0..2 {
            let acts = mac_step(
                &mut st,
                &p,
                MacInput::Enqueue(data_frame(1, 0, 64 + i)),
                SimTime(0),
                busy_view(),
                &mut r,
            )
            .unwrap();
            assert!(acts.is_empty());
        }
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::Enqueue(data_frame(1, 0, 99)),
            SimTime(0),
            busy_view(),
            &mut r,
        )
        .unwrap();
        assert!(matches!(acts[0], MacAction::QueueRejected(_)));
        assert_eq!(st.queue.len(), 2);
    }

    #[test]
    fn rts_mode_attempt_sends_rts_with_exchange_duration() {
        let p = MacParams {
            access_method: AccessMethod::RtsCts,
            ..MacParams::default()
        };
        let mut st = MacState::new(1, &p, 50);
        let mut r = rng();
        let acts = mac_step(
            &mut st,
            &p,
            MacInput::Enqueue(data_frame(1, 0, 512)),
            SimTime(1_000_000),
            idle_view(0),
            &mut r,
        )
        .unwrap();
        let rts = match acts[0] {
            MacAction::StartTx(f) => f,
            _ => panic!("expected rts"),
        };
        assert_eq!(rts.kind, FrameKind::Rts);
        // 3 SIFS + CTS + DATA + ACK
        assert_eq!(
            rts.duration_field_ns,
            30_000 + 304_000 + 2_352_000 + 304_000
        );
    }

    proptest::proptest! {
        #[test]
        fn draw_backoff_always_in_range(cw in 0u32..2048, seed in 0u64..1000) {
            let mut r = ChaCha12Rng::seed_from_u64(seed);
            let v = draw_backoff(cw, &mut r);
            proptest::prop_assert!(v <= cw);
        }

        #[test]
        fn cw_ladder_stays_power_of_two_minus_one(k in 0u32..6, steps in 0usize..12) {
            let cw_min = (1u32 << (k + 1)) - 1;
            let cw_max = 1023u32.max(cw_min);
            let mut cw = cw_min;
            for _ in 0..steps {
                cw = cw_after_failure(cw, cw_max);
                proptest::prop_assert!((cw + 1).is_power_of_two());
                proptest::prop_assert!(cw <= cw_max);
            }
        }
    }
}
