//! Slotted DCF execution of one restricted-access segment (or sub-slot).
//!
//! Only the stations handed in here may touch the channel: the engine feeds
//! each segment the members its beacon paged (downlink) or that hold an
//! eligible uplink packet. Contention is resolved slot by slot; ties on the
//! minimum backoff collide. A station never starts an exchange whose nominal
//! duration would cross the segment boundary; it defers to the next cycle
//! instead, keeping its backoff and retry counters.
//!
//! Downlink exchange:  PS-Poll -> SIFS -> DATA(AP) -> SIFS -> ACK
//! Uplink exchange:    RTS -> SIFS -> CTS -> SIFS -> DATA -> SIFS -> ACK
//!
//! With speed frame exchange enabled, a downlink winner holding an eligible
//! uplink packet answers the AP's data with its own data frame in place of
//! the ACK, and the AP acknowledges that.

use rand::Rng;

use crate::aid::Aid;
use crate::eventlog::{FrameOutcome, FrameRecord, SegmentKind, AP_ADDR};
use crate::mac::dcf::{dcf_draw_backoff, DcfTimings};
use crate::mac::power::PowerEvent;
use crate::mac::schedule::{assign_subslots, subslot_windows, SegmentWindow};
use crate::mac::Direction;
use crate::phy::{transmission_outcome, FrameKind, TxOutcome};

/// One station contending in this segment.
#[derive(Clone, Debug)]
pub struct SegContender {
    /// Engine-side station index, opaque here.
    pub idx: u32,
    pub aid: Aid,
    pub packet_id: u64,
    pub retries: u32,
    pub backoff: Option<u32>,
    /// Payload already reached its destination in an earlier cycle (the
    /// acknowledgment is still outstanding).
    pub delivered: bool,
    /// First time the payload got through during this segment, surviving
    /// across retry attempts.
    pub delivered_at_new: Option<u64>,
    /// PS-Poll (downlink) or RTS (uplink) airtime.
    pub req_air: u64,
    /// CTS airtime; unused downlink.
    pub grant_air: u64,
    pub data_air: u64,
    pub ack_air: u64,
    /// Reverse-direction data frame replacing the downlink ACK, when speed
    /// frame exchange is armed for this station.
    pub sfe_data_air: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExchangeOutcome {
    /// Acknowledged; the packet leaves its queue.
    Completed,
    /// Out of segment time; state persists to the next cycle.
    Deferred,
    /// Retry budget exhausted; the packet leaves its queue.
    Dropped,
}

#[derive(Clone, Debug)]
pub struct ExchangeResult {
    pub idx: u32,
    pub aid: Aid,
    pub direction: Direction,
    pub packet_id: u64,
    pub outcome: ExchangeOutcome,
    pub attempts: u32,
    /// Set if the payload first reached its destination in this segment.
    pub delivered_at: Option<u64>,
    /// Reverse-direction payload delivered via speed frame exchange.
    pub sfe_delivered_at: Option<u64>,
    /// The piggybacked uplink packet was also acknowledged.
    pub sfe_completed: bool,
    /// Final contention state, meaningful when deferred.
    pub retries: u32,
    pub backoff: Option<u32>,
    pub delivered: bool,
}

#[derive(Debug, Default)]
pub struct SegmentOutcome {
    pub results: Vec<ExchangeResult>,
    pub frames: Vec<FrameRecord>,
    /// Power transitions to replay onto the stations' trackers, in order.
    pub power: Vec<(u32, PowerEvent, u64)>,
    pub collisions: u64,
    pub retransmissions: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct SegmentParams<'a> {
    /// Absolute window of the whole segment.
    pub window: SegmentWindow,
    pub cycle: u32,
    pub position: u8,
    pub timings: &'a DcfTimings,
    pub per: f64,
    pub subslots: u32,
    /// Speed frame exchange enabled for downlink exchanges.
    pub sfe: bool,
}

/// All members of the groups owning this segment, pending or not; sub-slot
/// assignment must not depend on who currently has traffic.
pub fn run_downlink_segment(
    params: SegmentParams<'_>,
    members: &[Aid],
    contenders: Vec<SegContender>,
    rng: &mut impl Rng,
) -> SegmentOutcome {
    run_segment(Direction::Downlink, params, members, contenders, rng)
}

pub fn run_uplink_segment(
    params: SegmentParams<'_>,
    members: &[Aid],
    contenders: Vec<SegContender>,
    rng: &mut impl Rng,
) -> SegmentOutcome {
    run_segment(Direction::Uplink, params, members, contenders, rng)
}

pub fn run_segment(
    direction: Direction,
    params: SegmentParams<'_>,
    members: &[Aid],
    mut contenders: Vec<SegContender>,
    rng: &mut impl Rng,
) -> SegmentOutcome {
    contenders.sort_by_key(|c| c.aid);
    let mut out = SegmentOutcome::default();
    if params.window.len == 0 || contenders.is_empty() {
        return out;
    }
    if params.subslots <= 1 {
        run_window(direction, &params, params.window, contenders, rng, &mut out);
        return out;
    }

    let map = assign_subslots(members, params.subslots);
    let windows = subslot_windows(params.window, params.subslots);
    let mut buckets: Vec<Vec<SegContender>> = vec![Vec::new(); params.subslots as usize];
    for c in contenders {
        // Members always carry an assignment; anything else contends in the
        // last sub-slot rather than being silently dropped.
        let slot = map.get(&c.aid).copied().unwrap_or(params.subslots - 1);
        buckets[slot as usize].push(c);
    }
    for (slot, bucket) in buckets.into_iter().enumerate() {
        if !bucket.is_empty() {
            run_window(direction, &params, windows[slot], bucket, rng, &mut out);
        }
    }
    out
}

struct Books<'a> {
    out: &'a mut SegmentOutcome,
    segment: SegmentKind,
    cycle: u32,
    position: u8,
}

impl Books<'_> {
    fn frame(
        &mut self,
        start: u64,
        dur: u64,
        src: u16,
        dst: u16,
        kind: FrameKind,
        outcome: FrameOutcome,
    ) {
        self.out.frames.push(FrameRecord {
            start_us: start,
            duration_us: dur,
            src,
            dst,
            kind,
            outcome,
            cycle: self.cycle,
            position: self.position,
            segment: self.segment,
        });
    }

    fn power(&mut self, idx: u32, event: PowerEvent, at: u64) {
        self.out.power.push((idx, event, at));
    }

    /// Everyone else awake in the segment overhears a frame.
    fn overhear(&mut self, observers: &[u32], start: u64, dur: u64) {
        for &o in observers {
            self.power(o, PowerEvent::RxStart, start);
            self.power(o, PowerEvent::RxEnd { stay_awake: true }, start + dur);
        }
    }
}

fn run_window(
    direction: Direction,
    params: &SegmentParams<'_>,
    window: SegmentWindow,
    mut contenders: Vec<SegContender>,
    rng: &mut impl Rng,
    out: &mut SegmentOutcome,
) {
    let timings = params.timings;
    let seg_end = window.end();
    let mut books = Books {
        out,
        segment: match direction {
            Direction::Downlink => SegmentKind::Downlink,
            Direction::Uplink => SegmentKind::Uplink,
        },
        cycle: params.cycle,
        position: params.position,
    };

    // Everyone paged here wakes for the whole contention, dozing off as soon
    // as their exchange concludes or stops fitting.
    for c in &contenders {
        books.power(c.idx, PowerEvent::SegmentStart, window.start);
    }

    let mut t = window.start;
    let mut active: Vec<usize> = (0..contenders.len()).collect();
    let mut attempts = vec![0u32; contenders.len()];

    // Nominal (all frames clean) exchange duration; failure paths are shorter.
    let nominal = |c: &SegContender| -> u64 {
        let tail = match direction {
            Direction::Downlink => match c.sfe_data_air {
                Some(sfe) => c.data_air + timings.sifs_us + sfe + timings.sifs_us + c.ack_air,
                None => c.data_air + timings.sifs_us + c.ack_air,
            },
            Direction::Uplink => {
                c.grant_air
                    + timings.sifs_us
                    + c.data_air
                    + timings.sifs_us
                    + c.ack_air
            }
        };
        c.req_air + timings.sifs_us + tail
    };

    while !active.is_empty() {
        for &i in &active {
            if contenders[i].backoff.is_none() {
                let cw = timings.cw_for_retries(contenders[i].retries);
                contenders[i].backoff = Some(dcf_draw_backoff(rng, cw));
            }
        }
        let b_min = active
            .iter()
            .map(|&i| contenders[i].backoff.unwrap())
            .min()
            .unwrap();
        let tx_at = t + timings.difs_us + b_min as u64 * timings.slot_us;

        // Winners whose exchange cannot finish inside the segment defer to
        // the next cycle. They keep counting down idle slots until the
        // window closes, so a large draw cannot wedge a station forever.
        let deferring: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&i| {
                let c = &contenders[i];
                c.backoff.unwrap() == b_min && tx_at + nominal(c) > seg_end
            })
            .collect();
        if !deferring.is_empty() {
            let idle_slots =
                (seg_end.saturating_sub(t).saturating_sub(timings.difs_us)) / timings.slot_us;
            for &i in &deferring {
                let b = contenders[i].backoff.unwrap();
                contenders[i].backoff = Some(b.saturating_sub(idle_slots as u32));
                books.power(contenders[i].idx, PowerEvent::SegmentEnd, seg_end);
                books.out.results.push(result_of(
                    &contenders[i],
                    direction,
                    ExchangeOutcome::Deferred,
                    attempts[i],
                    None,
                    false,
                ));
            }
            active.retain(|i| !deferring.contains(i));
            continue;
        }

        let winners: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&i| contenders[i].backoff.unwrap() == b_min)
            .collect();
        for &i in &active {
            let b = contenders[i].backoff.unwrap();
            contenders[i].backoff = Some(b - b_min);
        }
        t = tx_at;

        if winners.len() == 1 {
            let w = winners[0];
            attempts[w] += 1;
            if attempts[w] > 1 || contenders[w].retries > 0 {
                books.out.retransmissions += 1;
            }
            let observers: Vec<usize> = active.iter().copied().filter(|&i| i != w).collect();
            let done = run_exchange(
                direction,
                params,
                &mut contenders,
                w,
                &observers,
                &mut t,
                rng,
                &mut books,
                attempts[w],
            );
            if done {
                active.retain(|&i| i != w);
            }
        } else {
            // Simultaneous requests: nobody decodes anything.
            books.out.collisions += 1;
            let air = winners.iter().map(|&i| contenders[i].req_air).max().unwrap();
            for &w in &winners {
                attempts[w] += 1;
                if attempts[w] > 1 || contenders[w].retries > 0 {
                    books.out.retransmissions += 1;
                }
                let c = &contenders[w];
                books.frame(t, c.req_air, c.aid.raw(), AP_ADDR, req_kind(direction), FrameOutcome::Collided);
                books.power(c.idx, PowerEvent::TxStart, t);
                books.power(c.idx, PowerEvent::TxEnd { stay_awake: true }, t + c.req_air);
            }
            let obs: Vec<u32> = active
                .iter()
                .filter(|i| !winners.contains(i))
                .map(|&i| contenders[i].idx)
                .collect();
            books.overhear(&obs, t, air);
            t += air + timings.response_timeout_us;
            let mut dropped = Vec::new();
            for &w in &winners {
                if fail_attempt(&mut contenders[w], timings) {
                    books.power(contenders[w].idx, PowerEvent::DozeStart, t);
                    books.out.results.push(result_of(
                        &contenders[w],
                        direction,
                        ExchangeOutcome::Dropped,
                        attempts[w],
                        None,
                        false,
                    ));
                    dropped.push(w);
                }
            }
            active.retain(|i| !dropped.contains(i));
        }
    }
}

fn req_kind(direction: Direction) -> FrameKind {
    match direction {
        Direction::Downlink => FrameKind::PsPoll,
        Direction::Uplink => FrameKind::Rts,
    }
}

/// Bumps the retry counter; true means the packet is out of budget.
fn fail_attempt(c: &mut SegContender, timings: &DcfTimings) -> bool {
    c.retries += 1;
    c.backoff = None;
    c.retries > timings.retry_limit
}

fn result_of(
    c: &SegContender,
    direction: Direction,
    outcome: ExchangeOutcome,
    attempts: u32,
    sfe_delivered_at: Option<u64>,
    sfe_completed: bool,
) -> ExchangeResult {
    ExchangeResult {
        idx: c.idx,
        aid: c.aid,
        direction,
        packet_id: c.packet_id,
        outcome,
        attempts,
        delivered_at: c.delivered_at_new,
        sfe_delivered_at,
        sfe_completed,
        retries: c.retries,
        backoff: c.backoff,
        delivered: c.delivered,
    }
}

/// Runs one full exchange attempt for `w`. Returns true when the contender
/// is finished (completed, dropped, or walked away), false when it retries.
#[allow(clippy::too_many_arguments)]
fn run_exchange(
    direction: Direction,
    params: &SegmentParams<'_>,
    contenders: &mut [SegContender],
    w: usize,
    observers: &[usize],
    t: &mut u64,
    rng: &mut impl Rng,
    books: &mut Books<'_>,
    attempts: u32,
) -> bool {
    let timings = params.timings;
    let obs: Vec<u32> = observers.iter().map(|&i| contenders[i].idx).collect();
    let c = &contenders[w];
    let (idx, aid) = (c.idx, c.aid.raw());
    let (req_air, grant_air, data_air, ack_air) = (c.req_air, c.grant_air, c.data_air, c.ack_air);
    let sfe_data_air = c.sfe_data_air;

    let mut sfe_delivered_at: Option<u64> = None;
    let mut sfe_completed = false;

    macro_rules! finish {
        ($outcome:expr, $sleep_at:expr) => {{
            books.power(idx, PowerEvent::DozeStart, $sleep_at);
            books.out.results.push(result_of(
                &contenders[w],
                direction,
                $outcome,
                attempts,
                sfe_delivered_at,
                sfe_completed,
            ));
            return true;
        }};
    }
    macro_rules! fail {
        () => {{
            if fail_attempt(&mut contenders[w], timings) {
                finish!(ExchangeOutcome::Dropped, *t);
            }
            return false;
        }};
    }

    // Request: PS-Poll or RTS from the station.
    let req_ok = transmission_outcome(rng, params.per) == TxOutcome::Ok;
    books.frame(*t, req_air, aid, AP_ADDR, req_kind(direction), frame_outcome(req_ok));
    books.power(idx, PowerEvent::TxStart, *t);
    books.power(idx, PowerEvent::TxEnd { stay_awake: true }, *t + req_air);
    books.overhear(&obs, *t, req_air);
    *t += req_air;
    if !req_ok {
        // The AP decoded nothing; the station times out waiting.
        *t += timings.response_timeout_us;
        fail!();
    }

    if direction == Direction::Uplink {
        // CTS from the AP.
        let grant_ok = transmission_outcome(rng, params.per) == TxOutcome::Ok;
        let start = *t + timings.sifs_us;
        books.frame(start, grant_air, AP_ADDR, aid, FrameKind::Cts, frame_outcome(grant_ok));
        books.power(idx, PowerEvent::RxStart, start);
        books.power(idx, PowerEvent::RxEnd { stay_awake: true }, start + grant_air);
        books.overhear(&obs, start, grant_air);
        *t = start + grant_air;
        if !grant_ok {
            fail!();
        }

        // Data from the station.
        let data_ok = transmission_outcome(rng, params.per) == TxOutcome::Ok;
        let start = *t + timings.sifs_us;
        books.frame(start, data_air, aid, AP_ADDR, FrameKind::Data, frame_outcome(data_ok));
        books.power(idx, PowerEvent::TxStart, start);
        books.power(idx, PowerEvent::TxEnd { stay_awake: true }, start + data_air);
        books.overhear(&obs, start, data_air);
        *t = start + data_air;
        if !data_ok {
            *t += timings.response_timeout_us;
            fail!();
        }
        if !contenders[w].delivered {
            contenders[w].delivered = true;
            contenders[w].delivered_at_new = Some(*t);
        }

        // ACK from the AP.
        let ack_ok = transmission_outcome(rng, params.per) == TxOutcome::Ok;
        let start = *t + timings.sifs_us;
        books.frame(start, ack_air, AP_ADDR, aid, FrameKind::Ack, frame_outcome(ack_ok));
        books.power(idx, PowerEvent::RxStart, start);
        books.overhear(&obs, start, ack_air);
        *t = start + ack_air;
        if ack_ok {
            books.power(idx, PowerEvent::RxEnd { stay_awake: false }, *t);
            books.out.results.push(result_of(
                &contenders[w],
                direction,
                ExchangeOutcome::Completed,
                attempts,
                None,
                false,
            ));
            true
        } else {
            books.power(idx, PowerEvent::RxEnd { stay_awake: true }, *t);
            fail!();
        }
    } else {
        // Data from the AP.
        let data_ok = transmission_outcome(rng, params.per) == TxOutcome::Ok;
        let start = *t + timings.sifs_us;
        books.frame(start, data_air, AP_ADDR, aid, FrameKind::Data, frame_outcome(data_ok));
        books.power(idx, PowerEvent::RxStart, start);
        books.power(idx, PowerEvent::RxEnd { stay_awake: true }, start + data_air);
        books.overhear(&obs, start, data_air);
        *t = start + data_air;
        if !data_ok {
            fail!();
        }
        if !contenders[w].delivered {
            contenders[w].delivered = true;
            contenders[w].delivered_at_new = Some(*t);
        }

        match sfe_data_air {
            None => {
                // Plain ACK from the station.
                let ack_ok = transmission_outcome(rng, params.per) == TxOutcome::Ok;
                let start = *t + timings.sifs_us;
                books.frame(start, ack_air, aid, AP_ADDR, FrameKind::Ack, frame_outcome(ack_ok));
                books.power(idx, PowerEvent::TxStart, start);
                books.power(idx, PowerEvent::TxEnd { stay_awake: false }, start + ack_air);
                books.overhear(&obs, start, ack_air);
                *t = start + ack_air;
                // Either way the station got its data and goes to sleep; a
                // lost ACK just leaves the packet buffered at the AP for a
                // re-signaled attempt next cycle.
                let outcome = if ack_ok {
                    ExchangeOutcome::Completed
                } else {
                    contenders[w].retries += 1;
                    contenders[w].backoff = None;
                    ExchangeOutcome::Deferred
                };
                books.out.results.push(result_of(
                    &contenders[w],
                    direction,
                    outcome,
                    attempts,
                    None,
                    false,
                ));
                true
            }
            Some(sfe_air) => {
                // Reverse-direction data frame acknowledges the reception.
                let sfe_ok = transmission_outcome(rng, params.per) == TxOutcome::Ok;
                let start = *t + timings.sifs_us;
                books.frame(start, sfe_air, aid, AP_ADDR, FrameKind::Data, frame_outcome(sfe_ok));
                books.power(idx, PowerEvent::TxStart, start);
                books.power(idx, PowerEvent::TxEnd { stay_awake: true }, start + sfe_air);
                books.overhear(&obs, start, sfe_air);
                *t = start + sfe_air;
                if !sfe_ok {
                    // The implicit ACK was lost on the AP side; the downlink
                    // packet stays buffered, the uplink payload stays queued.
                    contenders[w].retries += 1;
                    contenders[w].backoff = None;
                    finish!(ExchangeOutcome::Deferred, *t);
                }
                sfe_delivered_at = Some(*t);

                // AP acknowledges the piggybacked data.
                let ack_ok = transmission_outcome(rng, params.per) == TxOutcome::Ok;
                let start = *t + timings.sifs_us;
                books.frame(start, ack_air, AP_ADDR, aid, FrameKind::Ack, frame_outcome(ack_ok));
                books.power(idx, PowerEvent::RxStart, start);
                books.power(idx, PowerEvent::RxEnd { stay_awake: false }, start + ack_air);
                books.overhear(&obs, start, ack_air);
                *t = start + ack_air;
                sfe_completed = ack_ok;
                books.out.results.push(result_of(
                    &contenders[w],
                    direction,
                    ExchangeOutcome::Completed,
                    attempts,
                    sfe_delivered_at,
                    sfe_completed,
                ));
                true
            }
        }
    }
}

fn frame_outcome(ok: bool) -> FrameOutcome {
    if ok {
        FrameOutcome::Ok
    } else {
        FrameOutcome::Corrupted
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aid::encode_aid;
    use crate::mac::power::PowerTracker;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const PRE: u64 = 240; // NDP control airtime used in these tests
    const DATA: u64 = 616; // 100-byte payload at the top table rate

    fn contender(idx: u32, aid_raw: u16, backoff: Option<u32>) -> SegContender {
        SegContender {
            idx,
            aid: crate::aid::Aid::new(aid_raw).unwrap(),
            packet_id: aid_raw as u64,
            retries: 0,
            backoff,
            delivered: false,
            delivered_at_new: None,
            req_air: PRE,
            grant_air: PRE,
            data_air: DATA,
            ack_air: PRE,
            sfe_data_air: None,
        }
    }

    fn params<'a>(timings: &'a DcfTimings, window: SegmentWindow, per: f64) -> SegmentParams<'a> {
        SegmentParams {
            window,
            cycle: 0,
            position: 0,
            timings,
            per,
            subslots: 1,
            sfe: false,
        }
    }

    /// Replays the power transitions; panics on an illegal sequence.
    fn check_power(outcome: &SegmentOutcome, n: u32, start: u64, end: u64) {
        let mut trackers: Vec<PowerTracker> = (0..n).map(|_| PowerTracker::new(0)).collect();
        for &(idx, event, at) in &outcome.power {
            trackers[idx as usize].apply(event, at).expect("legal transition");
        }
        for mut t in trackers {
            t.finish(end);
            assert_eq!(t.ledger.total_us(), end);
            assert!(t.ledger.sleep_us >= start, "woke before the segment");
        }
    }

    #[test]
    fn lone_uplink_exchange_composition() {
        let timings = DcfTimings::default();
        let window = SegmentWindow { start: 10_000, len: 50_000 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let backoff = 5u32;
        let out = run_uplink_segment(
            params(&timings, window, 0.0),
            &[],
            vec![contender(0, 9, Some(backoff))],
            &mut rng,
        );
        assert_eq!(out.results.len(), 1);
        let r = &out.results[0];
        assert_eq!(r.outcome, ExchangeOutcome::Completed);
        assert_eq!(r.attempts, 1);
        // DIFS + backoff + RTS + SIFS + CTS + SIFS + DATA + SIFS + ACK
        let expect_end = window.start
            + timings.difs_us
            + backoff as u64 * timings.slot_us
            + PRE + timings.sifs_us + PRE + timings.sifs_us + DATA + timings.sifs_us + PRE;
        let last = out.frames.last().unwrap();
        assert_eq!(last.start_us + last.duration_us, expect_end);
        assert!(expect_end < window.end());
        assert_eq!(out.collisions, 0);
        assert_eq!(
            out.frames.iter().map(|f| f.kind).collect::<Vec<_>>(),
            vec![FrameKind::Rts, FrameKind::Cts, FrameKind::Data, FrameKind::Ack]
        );
        check_power(&out, 1, window.start, window.end());
    }

    #[test]
    fn lone_downlink_exchange() {
        let timings = DcfTimings::default();
        let window = SegmentWindow { start: 0, len: 20_000 };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = run_downlink_segment(
            params(&timings, window, 0.0),
            &[],
            vec![contender(0, 3, Some(0))],
            &mut rng,
        );
        let r = &out.results[0];
        assert_eq!(r.outcome, ExchangeOutcome::Completed);
        assert!(r.delivered_at.is_some());
        assert!(r.delivered_at.unwrap() < window.end());
        assert_eq!(
            out.frames.iter().map(|f| f.kind).collect::<Vec<_>>(),
            vec![FrameKind::PsPoll, FrameKind::Data, FrameKind::Ack]
        );
        check_power(&out, 1, window.start, window.end());
    }

    #[test]
    fn equal_backoffs_collide_and_double_cw() {
        let timings = DcfTimings::default();
        let window = SegmentWindow { start: 0, len: 200_000 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = run_uplink_segment(
            params(&timings, window, 0.0),
            &[],
            vec![contender(0, 1, Some(4)), contender(1, 2, Some(4))],
            &mut rng,
        );
        assert!(out.collisions >= 1);
        // Both finish eventually with at least one extra attempt recorded.
        assert_eq!(out.results.len(), 2);
        for r in &out.results {
            assert_eq!(r.outcome, ExchangeOutcome::Completed);
            assert!(r.attempts >= 2, "collision forces a retry");
        }
        // The colliding requests appear as collided frames.
        assert_eq!(
            out.frames.iter().filter(|f| f.outcome == FrameOutcome::Collided).count(),
            2
        );
        check_power(&out, 2, window.start, window.end());
    }

    #[test]
    fn retry_limit_exhaustion_drops() {
        let timings = DcfTimings::default();
        let window = SegmentWindow { start: 0, len: 1_000_000 };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = run_uplink_segment(
            params(&timings, window, 1.0),
            &[],
            vec![contender(0, 5, Some(2))],
            &mut rng,
        );
        let r = &out.results[0];
        assert_eq!(r.outcome, ExchangeOutcome::Dropped);
        assert_eq!(r.attempts, timings.retry_limit + 1);
        assert!(r.delivered_at.is_none());
        check_power(&out, 1, window.start, window.end());
    }

    #[test]
    fn eight_stations_with_errors_all_deliver() {
        let timings = DcfTimings::default();
        let window = SegmentWindow { start: 0, len: 2_000_000 };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let contenders: Vec<SegContender> =
            (0..8).map(|i| contender(i, i as u16 + 1, None)).collect();
        let out = run_downlink_segment(params(&timings, window, 0.1), &[], contenders, &mut rng);
        // A lost final ACK leaves an exchange deferred at the AP, but the
        // payload still got through; every station must end up served.
        let delivered = out.results.iter().filter(|r| r.delivered_at.is_some()).count();
        assert_eq!(delivered, 8);
        // Observed per-frame corruption stays near the configured rate.
        let frames = out.frames.len() as f64;
        let corrupted = out
            .frames
            .iter()
            .filter(|f| f.outcome == FrameOutcome::Corrupted)
            .count() as f64;
        assert!(
            (corrupted / frames - 0.1).abs() < 0.1,
            "corruption fraction {}",
            corrupted / frames
        );
        check_power(&out, 8, window.start, window.end());
    }

    #[test]
    fn sixteen_stations_fit_generous_segment() {
        let timings = DcfTimings::default();
        let window = SegmentWindow { start: 0, len: 2_000_000 };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let contenders: Vec<SegContender> =
            (0..16).map(|i| contender(i, i as u16 + 1, None)).collect();
        let out = run_uplink_segment(params(&timings, window, 0.0), &[], contenders, &mut rng);
        let completed = out
            .results
            .iter()
            .filter(|r| r.outcome == ExchangeOutcome::Completed)
            .count();
        assert_eq!(completed, 16);
        check_power(&out, 16, window.start, window.end());
    }

    #[test]
    fn boundary_shy_exchange_defers_and_counts_down() {
        let timings = DcfTimings::default();
        // Too small for any exchange: DIFS + frames alone exceed it.
        let window = SegmentWindow { start: 0, len: 1_200 };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let out = run_uplink_segment(
            params(&timings, window, 0.0),
            &[],
            vec![contender(0, 1, Some(30))],
            &mut rng,
        );
        let r = &out.results[0];
        assert_eq!(r.outcome, ExchangeOutcome::Deferred);
        // It burned the idle slots the window offered.
        let idle_slots = ((window.len - timings.difs_us) / timings.slot_us) as u32;
        assert_eq!(r.backoff, Some(30 - idle_slots));
        assert_eq!(r.retries, 0);
        assert!(out.frames.is_empty());
        check_power(&out, 1, window.start, window.end());
    }

    #[test]
    fn no_frame_crosses_the_segment_boundary() {
        let timings = DcfTimings::default();
        let window = SegmentWindow { start: 5_000, len: 9_000 };
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let contenders: Vec<SegContender> =
                (0..3).map(|i| contender(i, i as u16 + 1, None)).collect();
            let out = run_uplink_segment(params(&timings, window, 0.3), &[], contenders, &mut rng);
            for f in &out.frames {
                assert!(f.start_us >= window.start);
                assert!(f.start_us + f.duration_us <= window.end(), "frame over boundary");
            }
        }
    }

    #[test]
    fn one_station_per_subslot_never_collides() {
        let timings = DcfTimings::default();
        let members: Vec<crate::aid::Aid> =
            (1..=8).map(|i| encode_aid(0, 0, i / 8, i % 8).unwrap()).collect();
        let window = SegmentWindow { start: 0, len: 800_000 };
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let contenders: Vec<SegContender> = members
                .iter()
                .enumerate()
                .map(|(i, &aid)| contender(i as u32, aid.raw(), None))
                .collect();
            let p = SegmentParams { subslots: 8, ..params(&timings, window, 0.1) };
            let out = run_uplink_segment(p, &members, contenders, &mut rng);
            assert_eq!(out.collisions, 0, "seed {seed}");
        }
    }

    #[test]
    fn sfe_data_frame_replaces_downlink_ack() {
        let timings = DcfTimings::default();
        let window = SegmentWindow { start: 0, len: 50_000 };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut c = contender(0, 1, Some(0));
        c.sfe_data_air = Some(DATA);
        let p = SegmentParams { sfe: true, ..params(&timings, window, 0.0) };
        let out = run_downlink_segment(p, &[], vec![c], &mut rng);
        let r = &out.results[0];
        assert_eq!(r.outcome, ExchangeOutcome::Completed);
        assert!(r.delivered_at.is_some());
        assert!(r.sfe_delivered_at.is_some());
        assert!(r.sfe_completed);
        // PS-Poll, AP data, reverse data in place of the ACK, final AP ack.
        assert_eq!(
            out.frames.iter().map(|f| f.kind).collect::<Vec<_>>(),
            vec![FrameKind::PsPoll, FrameKind::Data, FrameKind::Data, FrameKind::Ack]
        );
        assert_eq!(out.frames[2].src, 1);
        check_power(&out, 1, window.start, window.end());
    }
}
