//! Idealized single broadcast medium.
//!
//! Every station is in every other station's radio range, so busy/idle is one
//! global predicate, and frames are lost only by colliding: any positive
//! overlap between two transmissions destroys both. There is no capture, no
//! channel error model, and no propagation delay (the widest node separation
//! is well under a slot time).

use crate::engine::StationId;
use crate::error::SimError;
use crate::frame::{Frame, FrameKind};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Delivered,
    Collided,
}

#[derive(Debug, Clone, Copy)]
pub struct Transmission {
    pub source: StationId,
    pub frame: Frame,
    pub start: SimTime,
    pub end: SimTime,
    collided: bool,
    resolved: bool,
}

/// One line of the optional per-run transmission trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceRecord {
    pub start: SimTime,
    pub end: SimTime,
    pub source: StationId,
    pub kind: FrameKind,
    pub outcome: Outcome,
}

impl TraceRecord {
    pub fn line(&self) -> String {
        format!(
            "{} {} {} {} {}",
            self.start.as_ns(),
            self.end.as_ns(),
            self.source,
            self.kind.label(),
            match self.outcome {
                Outcome::Delivered => "delivered",
                Outcome::Collided => "collided",
            }
        )
    }
}

/// Summary of a maximal busy period that contained a collision, used for the
/// per-collision channel-cost metric.
#[derive(Debug, Clone, Copy)]
pub struct CollisionPeriod {
    pub start: SimTime,
    pub end: SimTime,
}

pub struct Channel {
    slots: Vec<Transmission>,
    /// Indices of transmissions still on air.
    active: Vec<usize>,
    idle_since: SimTime,
    /// Current busy period, if any: (start, had_collision).
    period: Option<(SimTime, bool)>,
    pub trace: Option<Vec<TraceRecord>>,
    pub collision_periods: Vec<CollisionPeriod>,
}

impl Channel {
    pub fn new(collect_trace: bool) -> Self {
        Channel {
            slots: Vec::new(),
            active: Vec::new(),
            idle_since: SimTime::ZERO,
            period: None,
            trace: if collect_trace {
                Some(Vec::new())
            } else {
                None
            },
            collision_periods: Vec::new(),
        }
    }

    pub fn is_busy(&self) -> bool {
        !self.active.is_empty()
    }

    /// Start of the current idle stretch. Meaningless while busy.
    pub fn idle_since(&self) -> SimTime {
        self.idle_since
    }

    /// Registers a transmission over `[now, now + airtime_ns)`. Marks every
    /// overlapping pair collided. Returns the transmission handle and whether
    /// the channel transitioned idle -> busy.
    pub fn begin_tx(
        &mut self,
        source: StationId,
        frame: Frame,
        now: SimTime,
        airtime_ns: u64,
    ) -> Result<(usize, bool), SimError> {
        assert!(airtime_ns > 0, "zero airtime");
        for &i in &self.active {
            if self.slots[i].source == source {
                return Err(SimError::ConcurrentTx { station: source });
            }
        }
        let was_idle = self.active.is_empty();
        let end = now + airtime_ns;
        let mut collided = false;
        // active transmissions all have end > now, so they overlap [now, end)
        for &i in &self.active {
            self.slots[i].collided = true;
            collided = true;
        }
        let id = self.slots.len();
        self.slots.push(Transmission {
            source,
            frame,
            start: now,
            end,
            collided,
            resolved: false,
        });
        self.active.push(id);
        match &mut self.period {
            None => self.period = Some((now, collided)),
            Some((_, had)) => *had |= collided,
        }
        Ok((id, was_idle))
    }

    /// Resolves a transmission at its end time. Returns the transmission, its
    /// outcome and, when the channel went busy -> idle, the collision flag of
    /// the busy period that just closed.
    pub fn finish_tx(
        &mut self,
        id: usize,
        now: SimTime,
    ) -> Result<(Transmission, Outcome, Option<bool>), SimError> {
        let tx = self.slots[id];
        if now < tx.end {
            return Err(SimError::EarlyOutcomeQuery { now, end: tx.end });
        }
        debug_assert!(!tx.resolved, "transmission resolved twice");
        self.slots[id].resolved = true;
        self.active.retain(|&i| i != id);
        let outcome = self.outcome(id);
        if let Some(trace) = &mut self.trace {
            trace.push(TraceRecord {
                start: tx.start,
                end: tx.end,
                source: tx.source,
                kind: tx.frame.kind,
                outcome,
            });
        }
        let mut period_collided = None;
        if self.active.is_empty() {
            let (start, had) = self.period.take().expect("busy period missing");
            if had {
                self.collision_periods
                    .push(CollisionPeriod { start, end: now });
            }
            self.idle_since = now;
            period_collided = Some(had);
        }
        Ok((self.slots[id], outcome, period_collided))
    }

    pub fn outcome(&self, id: usize) -> Outcome {
        if self.slots[id].collided {
            Outcome::Collided
        } else {
            Outcome::Delivered
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{AppDescriptor, AppKind};

    fn frame(src: StationId) -> Frame {
        Frame::data(
            src,
            0,
            512,
            AppDescriptor {
                tag: 1,
                origin: src,
                final_dst: 0,
                kind: AppKind::Request,
            },
        )
    }

    #[test]
    fn single_transmission_is_delivered() {
        let mut ch = Channel::new(false);
        let (id, went_busy) = ch.begin_tx(1, frame(1), SimTime(0), 1000).unwrap();
        assert!(went_busy);
        assert!(ch.is_busy());
        let (tx, outcome, idle) = ch.finish_tx(id, SimTime(1000)).unwrap();
        assert_eq!(outcome, Outcome::Delivered);
        assert_eq!(tx.end, SimTime(1000));
        assert_eq!(idle, Some(false));
        assert!(!ch.is_busy());
    }

    #[test]
    fn simultaneous_starts_collide_both() {
        let mut ch = Channel::new(false);
        let (a, _) = ch.begin_tx(1, frame(1), SimTime(0), 1000).unwrap();
        let (b, went_busy) = ch.begin_tx(2, frame(2), SimTime(0), 1000).unwrap();
        assert!(!went_busy);
        assert_eq!(ch.outcome(a), Outcome::Collided);
        assert_eq!(ch.outcome(b), Outcome::Collided);
    }

    #[test]
    fn late_overlap_collides_both() {
        // B starts one slot before A ends.
        let mut ch = Channel::new(false);
        let (a, _) = ch.begin_tx(1, frame(1), SimTime(0), 100_000).unwrap();
        let (b, _) = ch.begin_tx(2, frame(2), SimTime(80_000), 100_000).unwrap();
        assert_eq!(ch.outcome(a), Outcome::Collided);
        assert_eq!(ch.outcome(b), Outcome::Collided);
    }

    #[test]
    fn three_way_overlap_collides_all() {
        let mut ch = Channel::new(false);
        let ids: Vec<_> = (1..=3)
            .map(|s| ch.begin_tx(s, frame(s), SimTime(0), 500).unwrap().0)
            .collect();
        for id in ids {
            assert_eq!(ch.outcome(id), Outcome::Collided);
        }
    }

    #[test]
    fn touching_intervals_do_not_collide() {
        let mut ch = Channel::new(false);
        let (a, _) = ch.begin_tx(1, frame(1), SimTime(0), 1000).unwrap();
        ch.finish_tx(a, SimTime(1000)).unwrap();
        let (b, _) = ch.begin_tx(2, frame(2), SimTime(1000), 1000).unwrap();
        assert_eq!(ch.outcome(a), Outcome::Delivered);
        assert_eq!(ch.outcome(b), Outcome::Delivered);
    }

    #[test]
    fn same_station_concurrent_tx_is_a_mac_bug() {
        let mut ch = Channel::new(false);
        ch.begin_tx(1, frame(1), SimTime(0), 1000).unwrap();
        let err = ch.begin_tx(1, frame(1), SimTime(500), 1000).unwrap_err();
        assert!(matches!(err, SimError::ConcurrentTx { station: 1 }));
    }

    #[test]
    fn outcome_query_before_end_is_rejected() {
        let mut ch = Channel::new(false);
        let (a, _) = ch.begin_tx(1, frame(1), SimTime(0), 1000).unwrap();
        let err = ch.finish_tx(a, SimTime(999)).unwrap_err();
        assert!(matches!(err, SimError::EarlyOutcomeQuery { .. }));
    }

    #[test]
    fn collision_period_recorded_with_union_extent() {
        let mut ch = Channel::new(false);
        let (a, _) = ch.begin_tx(1, frame(1), SimTime(0), 1000).unwrap();
        let (b, _) = ch.begin_tx(2, frame(2), SimTime(400), 1000).unwrap();
        ch.finish_tx(a, SimTime(1000)).unwrap();
        ch.finish_tx(b, SimTime(1400)).unwrap();
        assert_eq!(ch.collision_periods.len(), 1);
        let p = ch.collision_periods[0];
        assert_eq!((p.start, p.end), (SimTime(0), SimTime(1400)));
        assert_eq!(ch.idle_since(), SimTime(1400));
    }

    // Interval-overlap oracle: enumerate start times for a pair of fixed-length
    // transmissions and check collision marking equals interval intersection.
    #[test]
    fn overlap_oracle_over_enumerated_starts() {
        let len = 10u64;
        for b_start in 0..30u64 {
            let mut ch = Channel::new(false);
            let (a, _) = ch.begin_tx(1, frame(1), SimTime(0), len).unwrap();
            let overlap = b_start < len; // [0,len) vs [b_start, b_start+len)
            if overlap {
                let (b, _) = ch.begin_tx(2, frame(2), SimTime(b_start), len).unwrap();
                assert_eq!(ch.outcome(a), Outcome::Collided, "b_start={b_start}");
                assert_eq!(ch.outcome(b), Outcome::Collided);
            } else {
                ch.finish_tx(a, SimTime(len)).unwrap();
                let (b, _) = ch.begin_tx(2, frame(2), SimTime(b_start), len).unwrap();
                assert_eq!(ch.outcome(a), Outcome::Delivered, "b_start={b_start}");
                assert_eq!(ch.outcome(b), Outcome::Delivered);
            }
        }
    }
}
