//! Periodic restricted-access-window reservations for non-TIM stations and
//! the ad-hoc polling used by unscheduled stations.
//!
//! Both work on the unreserved gaps the RAW layout leaves in a cycle. A
//! grant is an exclusive window repeating every `period_cycles` cycles;
//! inside it the owner transmits without contention.

use crate::aid::Aid;
use crate::error::{Error, Result};
use crate::mac::schedule::{RawSchedule, SegmentWindow};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrawRequest {
    /// Repeat every this many DTIM cycles.
    pub period_cycles: u32,
    /// First cycle in which the window is active.
    pub phase_cycle: u32,
    /// Offset of the window within the cycle.
    pub offset_us: u64,
    pub duration_us: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrawGrant {
    pub station: Aid,
    pub period_cycles: u32,
    pub phase_cycle: u32,
    pub window: SegmentWindow,
}

impl PrawGrant {
    pub fn active_in_cycle(&self, cycle: u64) -> bool {
        cycle >= self.phase_cycle as u64
            && (cycle - self.phase_cycle as u64).is_multiple_of(self.period_cycles as u64)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Do two periodic grants ever land in the same cycle?
fn cycles_can_coincide(a: (u32, u32), b: (u32, u32)) -> bool {
    let (pa, ca) = (a.0 as u64, a.1 as i64);
    let (pb, cb) = (b.0 as u64, b.1 as i64);
    (ca - cb).unsigned_abs() % gcd(pa, pb) == 0
}

/// Reservation book for one RAW layout.
#[derive(Clone, Debug, Default)]
pub struct PrawCalendar {
    grants: Vec<PrawGrant>,
}

impl PrawCalendar {
    pub fn grants(&self) -> &[PrawGrant] {
        &self.grants
    }

    /// Grants a periodic exclusive window, rejecting anything that touches a
    /// RAW segment, a beacon, or a grant that can share a cycle with it.
    pub fn reserve_praw(
        &mut self,
        schedule: &RawSchedule,
        station: Aid,
        request: PrawRequest,
    ) -> Result<PrawGrant> {
        if request.period_cycles == 0 || request.duration_us == 0 {
            return Err(Error::ConfigInvalid(
                "PRAW period and duration must be positive".into(),
            ));
        }
        let window = SegmentWindow {
            start: request.offset_us,
            len: request.duration_us,
        };
        if window.end() > schedule.dtim_interval_us {
            return Err(Error::Conflict { start: window.start, end: window.end() });
        }
        for reserved in schedule.reserved_windows() {
            if window.overlaps(&reserved) {
                return Err(Error::Conflict { start: window.start, end: window.end() });
            }
        }
        for g in &self.grants {
            if window.overlaps(&g.window)
                && cycles_can_coincide(
                    (request.period_cycles, request.phase_cycle),
                    (g.period_cycles, g.phase_cycle),
                )
            {
                return Err(Error::Conflict { start: window.start, end: window.end() });
            }
        }
        let grant = PrawGrant {
            station,
            period_cycles: request.period_cycles,
            phase_cycle: request.phase_cycle,
            window,
        };
        self.grants.push(grant);
        Ok(grant)
    }

    fn grants_active_in_cycle(&self, cycle: u64) -> Vec<SegmentWindow> {
        let mut ws: Vec<SegmentWindow> = self
            .grants
            .iter()
            .filter(|g| g.active_in_cycle(cycle))
            .map(|g| g.window)
            .collect();
        ws.sort_by_key(|w| w.start);
        ws
    }

    /// Earliest access interval for an unscheduled station: at or after
    /// `now_us`, outside every RAW window and active grant, at least
    /// `needed_us` long, and starting within one DTIM cycle of `now_us`.
    /// Returned window is in absolute time.
    pub fn poll_unscheduled(
        &self,
        schedule: &RawSchedule,
        now_us: u64,
        needed_us: u64,
    ) -> Result<SegmentWindow> {
        let cycle_len = schedule.dtim_interval_us;
        let horizon = now_us + cycle_len;
        let first_cycle = now_us / cycle_len;
        for cycle in first_cycle..=first_cycle + 1 {
            let cycle_start = cycle * cycle_len;
            let praw = self.grants_active_in_cycle(cycle);
            for free in schedule.free_windows() {
                // Carve the active grants out of this gap.
                let mut cursor = free.start;
                let mut pieces = Vec::new();
                for g in praw.iter().filter(|g| g.overlaps(&free)) {
                    if g.start > cursor {
                        pieces.push(SegmentWindow { start: cursor, len: g.start - cursor });
                    }
                    cursor = cursor.max(g.end());
                }
                if free.end() > cursor {
                    pieces.push(SegmentWindow { start: cursor, len: free.end() - cursor });
                }
                for piece in pieces {
                    let abs_start = (cycle_start + piece.start).max(now_us);
                    let abs_end = cycle_start + piece.end();
                    if abs_start >= horizon {
                        continue;
                    }
                    if abs_end >= abs_start + needed_us {
                        return Ok(SegmentWindow { start: abs_start, len: needed_us });
                    }
                }
            }
        }
        Err(Error::NoWindow { needed: needed_us })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aid::GroupId;
    use crate::mac::schedule::{build_raw_schedule, BeaconAirtimes, SegmentCaps};
    use crate::tim::SignalingMode;

    fn capped_schedule() -> RawSchedule {
        // Two 100 ms intervals, segments capped to leave ~38 ms free tails.
        build_raw_schedule(
            &[GroupId { page: 0, block: 0 }, GroupId { page: 0, block: 1 }],
            SignalingMode::NonTimOffset,
            100_000,
            0.5,
            BeaconAirtimes { dtim_us: 1_000, tim_us: 700, multicast_us: 1_800 },
            SegmentCaps { dl_max_us: Some(30_000), ul_max_us: Some(30_000) },
            1,
            1,
        )
        .unwrap()
    }

    fn full_schedule() -> RawSchedule {
        build_raw_schedule(
            &[GroupId { page: 0, block: 0 }],
            SignalingMode::NonTimOffset,
            100_000,
            0.5,
            BeaconAirtimes { dtim_us: 1_000, tim_us: 700, multicast_us: 1_800 },
            SegmentCaps::default(),
            1,
            1,
        )
        .unwrap()
    }

    fn aid(raw: u16) -> Aid {
        Aid::new(raw).unwrap()
    }

    #[test]
    fn empty_calendar_grants_feasible_request() {
        let s = capped_schedule();
        let free = s.free_windows()[0];
        let mut cal = PrawCalendar::default();
        let grant = cal
            .reserve_praw(&s, aid(1), PrawRequest {
                period_cycles: 1,
                phase_cycle: 0,
                offset_us: free.start,
                duration_us: 5_000,
            })
            .unwrap();
        assert_eq!(grant.window.start, free.start);
        assert_eq!(grant.window.len, 5_000);
    }

    #[test]
    fn overlap_with_raw_is_conflict() {
        let s = capped_schedule();
        let mut cal = PrawCalendar::default();
        let dl = s.positions[0].dl;
        let r = cal.reserve_praw(&s, aid(1), PrawRequest {
            period_cycles: 1,
            phase_cycle: 0,
            offset_us: dl.start + 10,
            duration_us: 100,
        });
        assert!(matches!(r, Err(Error::Conflict { .. })));
    }

    #[test]
    fn disjoint_offsets_same_period_both_granted() {
        let s = capped_schedule();
        let free = s.free_windows()[0];
        let mut cal = PrawCalendar::default();
        cal.reserve_praw(&s, aid(1), PrawRequest {
            period_cycles: 2,
            phase_cycle: 0,
            offset_us: free.start,
            duration_us: 4_000,
        })
        .unwrap();
        cal.reserve_praw(&s, aid(2), PrawRequest {
            period_cycles: 2,
            phase_cycle: 0,
            offset_us: free.start + 4_000,
            duration_us: 4_000,
        })
        .unwrap();
        assert_eq!(cal.grants().len(), 2);
    }

    #[test]
    fn same_offset_disjoint_cycles_both_granted() {
        let s = capped_schedule();
        let free = s.free_windows()[0];
        let mut cal = PrawCalendar::default();
        let req = |phase| PrawRequest {
            period_cycles: 2,
            phase_cycle: phase,
            offset_us: free.start,
            duration_us: 4_000,
        };
        cal.reserve_praw(&s, aid(1), req(0)).unwrap();
        // Odd cycles never coincide with even ones at period 2.
        cal.reserve_praw(&s, aid(2), req(1)).unwrap();
        // A third at period 3 phase 0 collides with the first every 6 cycles.
        assert!(matches!(
            cal.reserve_praw(&s, aid(3), PrawRequest {
                period_cycles: 3,
                phase_cycle: 0,
                offset_us: free.start,
                duration_us: 4_000,
            }),
            Err(Error::Conflict { .. })
        ));
    }

    #[test]
    fn poll_returns_idle_tail() {
        let s = capped_schedule();
        let cal = PrawCalendar::default();
        let free = s.free_windows()[0];
        let w = cal.poll_unscheduled(&s, 0, 2_000).unwrap();
        assert_eq!(w.start, free.start);
        assert_eq!(w.len, 2_000);
    }

    #[test]
    fn poll_fully_booked_cycle() {
        let s = full_schedule();
        let cal = PrawCalendar::default();
        assert!(matches!(
            cal.poll_unscheduled(&s, 0, 1_000),
            Err(Error::NoWindow { .. })
        ));
    }

    #[test]
    fn poll_result_never_overlaps_raw_or_praw() {
        // Brute-force overlap scan against every reserved window.
        let s = capped_schedule();
        let mut cal = PrawCalendar::default();
        let free = s.free_windows();
        cal.reserve_praw(&s, aid(1), PrawRequest {
            period_cycles: 1,
            phase_cycle: 0,
            offset_us: free[0].start,
            duration_us: free[0].len - 3_000,
        })
        .unwrap();

        for now in (0..s.dtim_interval_us * 2).step_by(7_919) {
            match cal.poll_unscheduled(&s, now, 2_500) {
                Ok(w) => {
                    assert!(w.start >= now);
                    assert!(w.start < now + s.dtim_interval_us);
                    let cycle = w.start / s.dtim_interval_us;
                    let base = cycle * s.dtim_interval_us;
                    let rel = SegmentWindow { start: w.start - base, len: w.len };
                    for reserved in s.reserved_windows() {
                        assert!(!rel.overlaps(&reserved), "overlaps RAW at now={now}");
                    }
                    for g in cal.grants() {
                        if g.active_in_cycle(cycle) {
                            assert!(!rel.overlaps(&g.window), "overlaps PRAW at now={now}");
                        }
                    }
                }
                Err(Error::NoWindow { .. }) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }
}
