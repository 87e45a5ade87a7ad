//! MAC-layer frames.
//!
//! Frames carry sizes and addressing, never payload bytes: the simulator
//! only needs airtimes and bookkeeping. Two-hop addressing (host -> AP ->
//! host) rides in an application descriptor so the MAC itself stays
//! single-hop: the MAC destination of a host's data frame is always the AP.

use crate::engine::StationId;

pub const MAC_MTU_BYTES: u32 = 1500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Data,
    Ack,
    Rts,
    Cts,
}

impl FrameKind {
    pub fn label(self) -> &'static str {
        match self {
            FrameKind::Data => "data",
            FrameKind::Ack => "ack",
            FrameKind::Rts => "rts",
            FrameKind::Cts => "cts",
        }
    }
}

/// Whether an application packet is an outbound ping request or its echo.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppKind {
    Request,
    Reply,
}

/// End-to-end addressing and correlation for a data frame. The `tag` links a
/// request to its echo reply for RTT measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AppDescriptor {
    pub tag: u64,
    pub origin: StationId,
    pub final_dst: StationId,
    pub kind: AppKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameKind,
    pub src: StationId,
    pub dst: StationId,
    /// Data payload size; zero for control frames.
    pub payload_bytes: u32,
    /// NAV reservation carried by RTS/CTS, nanoseconds past frame end.
    pub duration_field_ns: u64,
    pub descriptor: Option<AppDescriptor>,
}

impl Frame {
    pub fn data(
        src: StationId,
        dst: StationId,
        payload_bytes: u32,
        descriptor: AppDescriptor,
    ) -> Self {
        Frame {
            kind: FrameKind::Data,
            src,
            dst,
            payload_bytes,
            duration_field_ns: 0,
            descriptor: Some(descriptor),
        }
    }

    pub fn ack(src: StationId, dst: StationId) -> Self {
        Frame {
            kind: FrameKind::Ack,
            src,
            dst,
            payload_bytes: 0,
            duration_field_ns: 0,
            descriptor: None,
        }
    }

    pub fn rts(src: StationId, dst: StationId, duration_field_ns: u64) -> Self {
        Frame {
            kind: FrameKind::Rts,
            src,
            dst,
            payload_bytes: 0,
            duration_field_ns,
            descriptor: None,
        }
    }

    pub fn cts(src: StationId, dst: StationId, duration_field_ns: u64) -> Self {
        Frame {
            kind: FrameKind::Cts,
            src,
            dst,
            payload_bytes: 0,
            duration_field_ns,
            descriptor: None,
        }
    }
}
