//! Per-frame event log and the post-hoc schedule audit.
//!
//! One record per frame on the air, exported as CSV so invariants can be
//! checked outside the process: group isolation (nobody transmits in a
//! restricted window that is not theirs) and segment containment (every
//! frame lies wholly inside its owning window).

use std::io::Write;

use crate::aid::Aid;
use crate::error::Result;
use crate::mac::schedule::RawSchedule;
use crate::phy::FrameKind;

pub const AP_ADDR: u16 = 0;
pub const BROADCAST_ADDR: u16 = 0xFFFF;
pub const NO_POSITION: u8 = u8::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentKind {
    Beacon,
    Multicast,
    Downlink,
    Uplink,
    Praw,
}

impl SegmentKind {
    pub fn label(self) -> &'static str {
        match self {
            SegmentKind::Beacon => "beacon",
            SegmentKind::Multicast => "multicast",
            SegmentKind::Downlink => "downlink",
            SegmentKind::Uplink => "uplink",
            SegmentKind::Praw => "praw",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameOutcome {
    Ok,
    Corrupted,
    Collided,
}

impl FrameOutcome {
    pub fn label(self) -> &'static str {
        match self {
            FrameOutcome::Ok => "ok",
            FrameOutcome::Corrupted => "corrupted",
            FrameOutcome::Collided => "collided",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameRecord {
    pub start_us: u64,
    pub duration_us: u64,
    /// Transmitter AID; 0 is the access point.
    pub src: u16,
    /// Receiver AID; 0 is the access point, 0xFFFF broadcast.
    pub dst: u16,
    pub kind: FrameKind,
    pub outcome: FrameOutcome,
    pub cycle: u32,
    /// Beacon position owning the segment, `NO_POSITION` outside RAW.
    pub position: u8,
    pub segment: SegmentKind,
}

fn kind_label(kind: FrameKind) -> &'static str {
    match kind {
        FrameKind::Data => "data",
        FrameKind::PsPoll => "ps-poll",
        FrameKind::Rts => "rts",
        FrameKind::Cts => "cts",
        FrameKind::Ack => "ack",
        FrameKind::NdpCtrl => "ndp-ctrl",
        FrameKind::BeaconDtim => "beacon-dtim",
        FrameKind::BeaconTim => "beacon-tim",
    }
}

pub const EVENTS_CSV_HEADER: &str =
    "time_us,duration_us,src,dst,kind,outcome,cycle,position,segment";

pub fn write_events_csv<W: Write>(records: &[FrameRecord], mut w: W) -> Result<()> {
    writeln!(w, "{EVENTS_CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.start_us,
            r.duration_us,
            r.src,
            r.dst,
            kind_label(r.kind),
            r.outcome.label(),
            r.cycle,
            if r.position == NO_POSITION { -1 } else { r.position as i32 },
            r.segment.label()
        )?;
    }
    Ok(())
}

/// Result of auditing an event log against its schedule.
#[derive(Clone, Debug, Default)]
pub struct AuditReport {
    pub frames: u64,
    pub segment_frames: u64,
    pub cross_group: u64,
    pub out_of_segment: u64,
    /// First few violations, for diagnostics.
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn clean(&self) -> bool {
        self.cross_group == 0 && self.out_of_segment == 0
    }

    fn violation(&mut self, msg: String) {
        if self.violations.len() < 20 {
            self.violations.push(msg);
        }
    }
}

/// Checks group isolation and segment containment over a full event log.
pub fn audit(records: &[FrameRecord], schedule: &RawSchedule) -> AuditReport {
    let mut report = AuditReport::default();
    for r in records {
        report.frames += 1;
        let seg = match r.segment {
            SegmentKind::Downlink | SegmentKind::Uplink => r.segment,
            _ => continue,
        };
        report.segment_frames += 1;

        let Some(pos) = schedule.positions.get(r.position as usize) else {
            report.out_of_segment += 1;
            report.violation(format!("frame at {} us references position {}", r.start_us, r.position));
            continue;
        };
        let window = match seg {
            SegmentKind::Downlink => pos.dl,
            _ => pos.ul,
        };
        let cycle_base = r.cycle as u64 * schedule.dtim_interval_us;
        let w_start = cycle_base + window.start;
        let w_end = w_start + window.len;
        if r.start_us < w_start || r.start_us + r.duration_us > w_end {
            report.out_of_segment += 1;
            report.violation(format!(
                "frame [{}, {}) outside {} segment [{}, {}) of position {}",
                r.start_us,
                r.start_us + r.duration_us,
                seg.label(),
                w_start,
                w_end,
                r.position
            ));
        }

        // The station side of the frame must belong to a group this position
        // pages; the AP transmits only toward members of those groups.
        let station_addr = if r.src == AP_ADDR { r.dst } else { r.src };
        if station_addr == AP_ADDR || station_addr == BROADCAST_ADDR {
            continue;
        }
        match Aid::new(station_addr) {
            Ok(aid) if pos.owners.contains(&aid.group()) => {}
            _ => {
                report.cross_group += 1;
                report.violation(format!(
                    "station {} active at {} us in position {} owned by {:?}",
                    station_addr, r.start_us, r.position, pos.owners
                ));
            }
        }
    }
    report
}
