//! Deterministic discrete-event core.
//!
//! Time is integer microseconds. Events are processed in (time, class,
//! sequence) order with the sequence number breaking ties, so identical
//! (config, seed) pairs replay identically byte for byte.
//!
//! A run is a fixed whole number of DTIM cycles. Each cycle start builds the
//! beacon sequence from the AP's pending queues, charges every station its
//! DTIM listening time, and schedules the cycle's TIM beacons; every TIM
//! beacon charges its listeners and spawns the downlink and uplink segment
//! events that drive the contention in [`segment`].

pub mod segment;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aid::{assign_aids, groups_of, Aid, GroupId};
use crate::config::ScenarioConfig;
use crate::energy::EnergyLedger;
use crate::error::{Error, Result};
use crate::eventlog::{FrameOutcome, FrameRecord, SegmentKind, AP_ADDR, BROADCAST_ADDR};
use crate::mac::power::{PowerEvent, PowerTracker};
use crate::mac::schedule::{
    build_raw_schedule, BeaconAirtimes, RawSchedule, SegmentCaps, SegmentWindow,
};
use crate::mac::{Direction, PacketState, StationKind, StationState};
use crate::metrics::{station_metrics, DirectionMetrics, MetricsReport};
use crate::phy::{airtime, select_rate, FrameKind, FrameSpec};
use crate::scalar::Real;
use crate::tim::{build_beacon_sequence, station_may_sleep, BeaconFrame, DtimBitmap, PendingMap, SignalingMode, TimBitmap};
use crate::traffic::TrafficPlan;

use segment::{run_segment, ExchangeOutcome, SegContender, SegmentParams};

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Keep the per-frame event log in memory (and in the run output).
    pub record_events: bool,
}

#[derive(Debug)]
pub struct RunOutput<F> {
    pub report: MetricsReport<F>,
    pub events: Vec<FrameRecord>,
    pub schedule: Option<RawSchedule>,
}

/// Simulates one scenario run to completion.
pub fn run<F: Real>(cfg: &ScenarioConfig<F>, options: RunOptions) -> Result<RunOutput<F>> {
    cfg.validate()?;
    if cfg.n_stations == 0 {
        return Ok(empty_output(cfg));
    }
    Simulation::new(cfg, options)?.run()
}

fn empty_output<F: Real>(cfg: &ScenarioConfig<F>) -> RunOutput<F> {
    let mut downlink = DirectionMetrics::default();
    let mut uplink = DirectionMetrics::default();
    downlink.finalize(&[], 1);
    uplink.finalize(&[], 1);
    RunOutput {
        report: MetricsReport {
            scenario: cfg.name.clone(),
            seed: cfg.seed,
            duration_us: 0,
            dtim_interval_us: 0,
            cycles: 0,
            warmup_cycles: cfg.warmup_cycles as u64,
            downlink,
            uplink,
            collisions: 0,
            retransmissions: 0,
            stations: Vec::new(),
        },
        events: Vec::new(),
        schedule: None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EventKind {
    Arrival { station: u32, direction: Direction, k: u64 },
    CycleStart { cycle: u32 },
    TimBeacon { cycle: u32, position: u8 },
    Segment { cycle: u32, position: u8, direction: Direction },
}

#[derive(Debug, PartialEq, Eq)]
struct Event {
    time: u64,
    class: u8,
    seq: u64,
    kind: EventKind,
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.class, self.seq).cmp(&(other.time, other.class, other.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

const CLASS_ARRIVAL: u8 = 0;
const CLASS_CYCLE: u8 = 1;
const CLASS_TIM: u8 = 2;
const CLASS_SEGMENT: u8 = 3;

/// Per-station frame airtimes at that station's selected rate.
#[derive(Clone, Copy, Debug)]
struct StationAirs {
    data: u64,
    pspoll: u64,
    rts: u64,
    cts: u64,
    ack: u64,
}

#[derive(Default)]
struct DirAccum {
    generated: u64,
    delivered: u64,
    dropped: u64,
    delays_us: Vec<u64>,
    delivered_measured: u64,
}

struct Simulation<'a, F: Real> {
    cfg: &'a ScenarioConfig<F>,
    options: RunOptions,
    schedule: RawSchedule,
    groups: Vec<GroupId>,
    stations: Vec<StationState>,
    trackers: Vec<PowerTracker>,
    airs: Vec<StationAirs>,
    bits_delivered: Vec<u64>,
    /// Station indexes per beacon position, grouped by owner group.
    members_by_position: Vec<Vec<u32>>,
    member_aids_by_position: Vec<Vec<Aid>>,
    plan: TrafficPlan,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Reverse<Event>>,
    seq: u64,
    end_us: u64,
    cycles_total: u64,
    warmup_end_us: u64,
    dtim_air: u64,
    tim_air: u64,
    per: f64,
    events: Vec<FrameRecord>,
    dl: DirAccum,
    ul: DirAccum,
    collisions: u64,
    retransmissions: u64,
    packet_seq: u64,
    // Rebuilt every cycle.
    dtim_bitmap: DtimBitmap,
    tims: Vec<Vec<TimBitmap>>,
    paged: Vec<Vec<u32>>,
    ul_ready: Vec<Vec<u32>>,
}

impl<'a, F: Real> Simulation<'a, F> {
    fn new(cfg: &'a ScenarioConfig<F>, options: RunOptions) -> Result<Self> {
        let aids = assign_aids(cfg.n_stations as usize, cfg.grouping)?;
        let groups = groups_of(&aids);

        let n_positions = match cfg.signaling_mode {
            SignalingMode::NonTimOffset => {
                let mut blocks: Vec<u8> = groups.iter().map(|g| g.block).collect();
                blocks.sort_unstable();
                blocks.dedup();
                blocks.len()
            }
            SignalingMode::TimOffset => groups.len(),
        };
        let pages_per_position = match cfg.signaling_mode {
            SignalingMode::NonTimOffset => {
                let mut pages: Vec<u8> = groups.iter().map(|g| g.page).collect();
                pages.sort_unstable();
                pages.dedup();
                pages.len() as u32
            }
            SignalingMode::TimOffset => 1,
        };

        // Beacon body model: fixed sync fields, the four-page group bitmap,
        // and per-position window geometry in the DTIM; bitmap control plus
        // one 8-byte station bitmap per page in each TIM.
        let dtim_body = 26 + 2 * n_positions as u32;
        let tim_body = 5 + 9 * pages_per_position;
        let beacon_rate = cfg.phy.beacon_rate_kbps;
        let dtim_air = airtime(&FrameSpec::beacon(FrameKind::BeaconDtim, dtim_body), beacon_rate, &cfg.phy)?;
        let tim_air = airtime(&FrameSpec::beacon(FrameKind::BeaconTim, tim_body), beacon_rate, &cfg.phy)?;
        let multicast_us = airtime(&FrameSpec::data(cfg.traffic.payload_bytes), beacon_rate, &cfg.phy)?;

        let schedule = build_raw_schedule(
            &groups,
            cfg.signaling_mode,
            cfg.mac.tim_interval_us,
            cfg.beta_dl(),
            BeaconAirtimes { dtim_us: dtim_air, tim_us: tim_air, multicast_us },
            SegmentCaps { dl_max_us: cfg.mac.dl_max_us, ul_max_us: cfg.mac.ul_max_us },
            cfg.mac.subslots_dl,
            cfg.mac.subslots_ul,
        )?;
        if cfg.mac.doze_wake_guard_us >= cfg.mac.tim_interval_us {
            return Err(Error::ConfigInvalid(
                "doze_wake_guard_us must be smaller than the TIM interval".into(),
            ));
        }

        let duration_us = cfg.duration_s * 1_000_000;
        let cycles_total = duration_us / schedule.dtim_interval_us;
        let end_us = cycles_total * schedule.dtim_interval_us;
        let warmup_end_us =
            (cfg.warmup_cycles as u64).min(cycles_total) * schedule.dtim_interval_us;

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

        // Stations are uniform over the coverage disc; index order is AID order.
        let mut stations = Vec::with_capacity(aids.len());
        let mut airs = Vec::with_capacity(aids.len());
        for &aid in &aids {
            let u: f64 = rng.gen();
            let distance = (cfg.area_radius_m.as_f64() * u.sqrt()).max(1.0);
            let rate = select_rate(F::from_f64_lossy(distance), &cfg.phy)?;
            stations.push(StationState::new(aid, StationKind::Tim, distance, rate));
            let ctrl = |kind: FrameKind| -> Result<u64> {
                airtime(&FrameSpec::control(kind, cfg.mac.ndp_control), rate, &cfg.phy)
            };
            airs.push(StationAirs {
                data: airtime(&FrameSpec::data(cfg.traffic.payload_bytes), rate, &cfg.phy)?,
                pspoll: ctrl(FrameKind::PsPoll)?,
                rts: ctrl(FrameKind::Rts)?,
                cts: ctrl(FrameKind::Cts)?,
                ack: ctrl(FrameKind::Ack)?,
            });
        }

        let plan = TrafficPlan::new(
            cfg.n_stations,
            (cfg.traffic.ul_interarrival_s.as_f64() * 1e6) as u64,
            (cfg.traffic.dl_interarrival_s.as_f64() * 1e6) as u64,
            schedule.dtim_interval_us,
            end_us,
            &mut rng,
        )?;

        let mut by_group: BTreeMap<GroupId, Vec<u32>> = BTreeMap::new();
        for (i, st) in stations.iter().enumerate() {
            by_group.entry(st.aid.group()).or_default().push(i as u32);
        }
        let members_by_position: Vec<Vec<u32>> = schedule
            .positions
            .iter()
            .map(|p| {
                let mut v: Vec<u32> = p
                    .owners
                    .iter()
                    .flat_map(|g| by_group.get(g).cloned().unwrap_or_default())
                    .collect();
                v.sort_unstable();
                v
            })
            .collect();
        let member_aids_by_position: Vec<Vec<Aid>> = members_by_position
            .iter()
            .map(|idxs| idxs.iter().map(|&i| stations[i as usize].aid).collect())
            .collect();

        let n_positions = schedule.positions.len();
        let trackers = vec![PowerTracker::new(0); stations.len()];
        let bits_delivered = vec![0u64; stations.len()];
        let mut sim = Simulation {
            cfg,
            options,
            schedule,
            groups,
            stations,
            trackers,
            airs,
            bits_delivered,
            members_by_position,
            member_aids_by_position,
            plan,
            rng,
            queue: BinaryHeap::new(),
            seq: 0,
            end_us,
            cycles_total,
            warmup_end_us,
            dtim_air,
            tim_air,
            per: cfg.phy.per.as_f64(),
            events: Vec::new(),
            dl: DirAccum::default(),
            ul: DirAccum::default(),
            collisions: 0,
            retransmissions: 0,
            packet_seq: 0,
            dtim_bitmap: DtimBitmap::default(),
            tims: vec![Vec::new(); n_positions],
            paged: vec![Vec::new(); n_positions],
            ul_ready: vec![Vec::new(); n_positions],
        };

        for station in 0..sim.cfg.n_stations {
            for direction in [Direction::Uplink, Direction::Downlink] {
                if let Some(at) = sim.plan.arrival(station, direction, 0) {
                    sim.push(at, CLASS_ARRIVAL, EventKind::Arrival { station, direction, k: 0 });
                }
            }
        }
        if sim.cycles_total > 0 {
            sim.push(0, CLASS_CYCLE, EventKind::CycleStart { cycle: 0 });
        }
        Ok(sim)
    }

    fn push(&mut self, time: u64, class: u8, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Reverse(Event { time, class, seq: self.seq, kind }));
    }

    fn log_frame(&mut self, record: FrameRecord) {
        if self.options.record_events {
            self.events.push(record);
        }
    }

    fn accum(&mut self, direction: Direction) -> &mut DirAccum {
        match direction {
            Direction::Downlink => &mut self.dl,
            Direction::Uplink => &mut self.ul,
        }
    }

    fn run(mut self) -> Result<RunOutput<F>> {
        while let Some(Reverse(event)) = self.queue.pop() {
            debug_assert!(event.time <= self.end_us);
            match event.kind {
                EventKind::Arrival { station, direction, k } => {
                    self.on_arrival(event.time, station, direction, k)
                }
                EventKind::CycleStart { cycle } => self.on_cycle_start(event.time, cycle)?,
                EventKind::TimBeacon { cycle, position } => {
                    self.on_tim_beacon(event.time, cycle, position)?
                }
                EventKind::Segment { cycle, position, direction } => {
                    self.on_segment(event.time, cycle, position, direction)?
                }
            }
        }
        self.finalize()
    }

    fn on_arrival(&mut self, t: u64, station: u32, direction: Direction, k: u64) {
        self.packet_seq += 1;
        let packet = PacketState::new(self.packet_seq, t);
        self.stations[station as usize].queue(direction).push_back(packet);
        self.accum(direction).generated += 1;
        if let Some(at) = self.plan.arrival(station, direction, k + 1) {
            self.push(at, CLASS_ARRIVAL, EventKind::Arrival { station, direction, k: k + 1 });
        }
    }

    fn on_cycle_start(&mut self, t: u64, cycle: u32) -> Result<()> {
        // Group-level pending map over stations reachable this cycle.
        let mut pending = PendingMap::new();
        for st in &self.stations {
            let dozing = st.long_doze_until.is_some_and(|until| until > t);
            if !dozing && !st.dl_pending.is_empty() {
                pending.entry(st.aid.group()).or_default().push(st.aid);
            }
        }
        let beacons = build_beacon_sequence(&self.groups, self.cfg.signaling_mode, &pending)?;
        let (dtim, tims) = split_beacons(beacons);
        debug_assert_eq!(tims.len(), self.schedule.positions.len());
        self.dtim_bitmap = dtim;
        self.tims = tims;

        self.log_frame(FrameRecord {
            start_us: t,
            duration_us: self.dtim_air,
            src: AP_ADDR,
            dst: BROADCAST_ADDR,
            kind: FrameKind::BeaconDtim,
            outcome: FrameOutcome::Ok,
            cycle,
            position: crate::eventlog::NO_POSITION,
            segment: SegmentKind::Beacon,
        });

        // Every station in power-save mode listens to every DTIM beacon.
        let guard = self.cfg.mac.doze_wake_guard_us;
        let dtim_air = self.dtim_air;
        for (i, st) in self.stations.iter_mut().enumerate() {
            match st.long_doze_until {
                Some(until) if until > t => continue,
                Some(_) => {
                    st.long_doze_until = None;
                    // Guard wake never predates the doze itself.
                    let wake = t.saturating_sub(guard).max(self.trackers[i].since_us());
                    self.trackers[i].apply(PowerEvent::DozeEnd, wake)?;
                    self.trackers[i].apply(PowerEvent::RxEnd { stay_awake: false }, t + dtim_air)?;
                }
                None => {
                    self.trackers[i].apply(PowerEvent::BeaconDue, t)?;
                    self.trackers[i].apply(PowerEvent::RxEnd { stay_awake: false }, t + dtim_air)?;
                }
            }
        }

        // Stations with a quiet stretch ahead may arrange a long doze.
        if let Some(idle_cycles) = self.cfg.mac.long_doze_idle_cycles {
            let horizon = t + idle_cycles as u64 * self.schedule.dtim_interval_us;
            for i in 0..self.stations.len() {
                let st = &self.stations[i];
                if st.long_doze_until.is_some()
                    || !st.dl_pending.is_empty()
                    || !st.ul_pending.is_empty()
                {
                    continue;
                }
                let next = [Direction::Uplink, Direction::Downlink]
                    .into_iter()
                    .filter_map(|d| self.plan.next_after(i as u32, d, t))
                    .min();
                let wake_at = match next {
                    Some(at) => at / self.schedule.dtim_interval_us * self.schedule.dtim_interval_us,
                    None => u64::MAX,
                };
                if wake_at > horizon {
                    self.stations[i].long_doze_until = Some(wake_at);
                }
            }
        }

        // Contender snapshots per position. Both directions quantize to the
        // cycle: a packet rides a cycle only if it was queued before this
        // DTIM, whether the queue lives at the AP (downlink bitmap) or in
        // the station (uplink).
        for k in 0..self.schedule.positions.len() {
            self.paged[k].clear();
            self.ul_ready[k].clear();
            for &i in &self.members_by_position[k] {
                let st = &self.stations[i as usize];
                if st.long_doze_until.is_some() {
                    continue;
                }
                if self.tims[k].iter().any(|bm| bm.contains(st.aid)) {
                    self.paged[k].push(i);
                }
                if st.ul_pending.front().is_some_and(|p| p.generated_us <= t) {
                    self.ul_ready[k].push(i);
                }
            }
        }

        let base = t;
        for k in 0..self.schedule.positions.len() {
            let at = base + self.schedule.positions[k].beacon_at;
            self.push(at, CLASS_TIM, EventKind::TimBeacon { cycle, position: k as u8 });
        }
        if (cycle as u64) + 1 < self.cycles_total {
            self.push(base + self.schedule.dtim_interval_us, CLASS_CYCLE, EventKind::CycleStart {
                cycle: cycle + 1,
            });
        }
        Ok(())
    }

    fn on_tim_beacon(&mut self, t: u64, cycle: u32, position: u8) -> Result<()> {
        let k = position as usize;
        self.log_frame(FrameRecord {
            start_us: t,
            duration_us: self.tim_air,
            src: AP_ADDR,
            dst: BROADCAST_ADDR,
            kind: FrameKind::BeaconTim,
            outcome: FrameOutcome::Ok,
            cycle,
            position,
            segment: SegmentKind::Beacon,
        });

        let tim_air = self.tim_air;
        for idx in 0..self.members_by_position[k].len() {
            let i = self.members_by_position[k][idx];
            let st = &self.stations[i as usize];
            if st.long_doze_until.is_some() {
                continue;
            }
            let group_paged = self.dtim_bitmap.group_pending(st.aid.group());
            let has_uplink = self.ul_ready[k].contains(&i);
            if group_paged || has_uplink {
                self.trackers[i as usize].apply(PowerEvent::BeaconDue, t)?;
                self.trackers[i as usize]
                    .apply(PowerEvent::RxEnd { stay_awake: false }, t + tim_air)?;
            }
            if cfg!(debug_assertions) {
                let tim = self.tims[k].iter().find(|bm| bm.group == st.aid.group());
                let may_sleep = station_may_sleep(st.aid, &self.dtim_bitmap, tim, has_uplink)
                    .expect("TIM bitmap present for paged groups");
                debug_assert_eq!(may_sleep, !self.paged[k].contains(&i) && !has_uplink);
            }
        }

        let base = cycle as u64 * self.schedule.dtim_interval_us;
        let (dl, ul) = {
            let pos = &self.schedule.positions[k];
            (pos.dl, pos.ul)
        };
        if !self.paged[k].is_empty() && dl.len > 0 {
            self.push(base + dl.start, CLASS_SEGMENT, EventKind::Segment {
                cycle,
                position,
                direction: Direction::Downlink,
            });
        }
        if !self.ul_ready[k].is_empty() && ul.len > 0 {
            self.push(base + ul.start, CLASS_SEGMENT, EventKind::Segment {
                cycle,
                position,
                direction: Direction::Uplink,
            });
        }
        Ok(())
    }

    fn on_segment(&mut self, t: u64, cycle: u32, position: u8, direction: Direction) -> Result<()> {
        let k = position as usize;
        let pos = &self.schedule.positions[k];
        let base = cycle as u64 * self.schedule.dtim_interval_us;
        let (window, subslots) = match direction {
            Direction::Downlink => (pos.dl, self.schedule.subslots_dl),
            Direction::Uplink => (pos.ul, self.schedule.subslots_ul),
        };
        let window = SegmentWindow { start: base + window.start, len: window.len };
        debug_assert_eq!(window.start, t);

        let candidates = match direction {
            Direction::Downlink => &self.paged[k],
            Direction::Uplink => &self.ul_ready[k],
        };
        let mut contenders = Vec::new();
        for &i in candidates {
            let st = &self.stations[i as usize];
            let a = &self.airs[i as usize];
            let head = match direction {
                Direction::Downlink => st.dl_pending.front(),
                Direction::Uplink => st.ul_pending.front(),
            };
            let Some(head) = head else { continue };
            let cycle_start = cycle as u64 * self.schedule.dtim_interval_us;
            if head.generated_us > cycle_start {
                continue;
            }
            let sfe_data_air = (direction == Direction::Downlink
                && self.cfg.mac.speed_frame_exchange
                && st
                    .ul_pending
                    .front()
                    .is_some_and(|p| p.generated_us <= cycle_start))
            .then_some(a.data);
            contenders.push(SegContender {
                idx: i,
                aid: st.aid,
                packet_id: head.id,
                retries: head.retries,
                backoff: head.backoff,
                delivered: head.delivered_at.is_some(),
                delivered_at_new: None,
                req_air: match direction {
                    Direction::Downlink => a.pspoll,
                    Direction::Uplink => a.rts,
                },
                grant_air: a.cts,
                data_air: a.data,
                ack_air: a.ack,
                sfe_data_air,
            });
        }
        if contenders.is_empty() {
            return Ok(());
        }

        let params = SegmentParams {
            window,
            cycle,
            position,
            timings: &self.cfg.mac.dcf,
            per: self.per,
            subslots,
            sfe: self.cfg.mac.speed_frame_exchange,
        };
        let outcome = run_segment(
            direction,
            params,
            &self.member_aids_by_position[k],
            contenders,
            &mut self.rng,
        );

        for (idx, event, at) in &outcome.power {
            self.trackers[*idx as usize].apply(*event, *at)?;
        }
        if self.options.record_events {
            self.events.extend_from_slice(&outcome.frames);
        }
        self.collisions += outcome.collisions;
        self.retransmissions += outcome.retransmissions;

        for r in &outcome.results {
            let i = r.idx as usize;
            if let Some(at) = r.delivered_at {
                let generated = {
                    let st = &self.stations[i];
                    let head = match r.direction {
                        Direction::Downlink => st.dl_pending.front(),
                        Direction::Uplink => st.ul_pending.front(),
                    }
                    .expect("result for a queued packet");
                    debug_assert_eq!(head.id, r.packet_id);
                    debug_assert!(head.delivered_at.is_none());
                    head.generated_us
                };
                self.record_delivery(i, r.direction, generated, at);
                let head = self.stations[i].queue(r.direction).front_mut().unwrap();
                head.delivered_at = Some(at);
            }
            if let Some(at) = r.sfe_delivered_at {
                let head = self.stations[i]
                    .ul_pending
                    .front()
                    .copied()
                    .expect("piggybacked packet is queued");
                if head.delivered_at.is_none() {
                    self.record_delivery(i, Direction::Uplink, head.generated_us, at);
                    self.stations[i].ul_pending.front_mut().unwrap().delivered_at = Some(at);
                }
                if r.sfe_completed {
                    self.stations[i].ul_pending.pop_front();
                }
            }
            match r.outcome {
                ExchangeOutcome::Completed => {
                    let head = self.stations[i].queue(r.direction).pop_front().unwrap();
                    debug_assert_eq!(head.id, r.packet_id);
                }
                ExchangeOutcome::Deferred => {
                    let head = self.stations[i].queue(r.direction).front_mut().unwrap();
                    debug_assert_eq!(head.id, r.packet_id);
                    head.retries = r.retries;
                    head.backoff = r.backoff;
                }
                ExchangeOutcome::Dropped => {
                    let head = self.stations[i].queue(r.direction).pop_front().unwrap();
                    debug_assert_eq!(head.id, r.packet_id);
                    if head.delivered_at.is_none() {
                        self.accum(r.direction).dropped += 1;
                    }
                }
            }
        }
        Ok(())
    }

    fn record_delivery(&mut self, station: usize, direction: Direction, generated_us: u64, at: u64) {
        self.bits_delivered[station] += 8 * self.cfg.traffic.payload_bytes as u64;
        let warmup_end = self.warmup_end_us;
        let acc = self.accum(direction);
        acc.delivered += 1;
        if generated_us >= warmup_end {
            acc.delivered_measured += 1;
            acc.delays_us.push(at - generated_us);
        }
    }

    fn finalize(mut self) -> Result<RunOutput<F>> {
        for tracker in &mut self.trackers {
            tracker.finish(self.end_us);
            debug_assert_eq!(tracker.ledger.total_us(), self.end_us);
        }

        let payload = self.cfg.traffic.payload_bytes;
        let top_rate = self.cfg.phy.mcs_table.last().unwrap().rate_kbps;
        let data_top = airtime(&FrameSpec::data(payload), top_rate, &self.cfg.phy)?;
        let ctrl = |kind: FrameKind| -> Result<u64> {
            airtime(&FrameSpec::control(kind, self.cfg.mac.ndp_control), top_rate, &self.cfg.phy)
        };
        let dcf = &self.cfg.mac.dcf;
        let min_dl = dcf.difs_us
            + ctrl(FrameKind::PsPoll)?
            + dcf.sifs_us
            + data_top
            + dcf.sifs_us
            + ctrl(FrameKind::Ack)?;
        let min_ul = dcf.difs_us
            + ctrl(FrameKind::Rts)?
            + dcf.sifs_us
            + ctrl(FrameKind::Cts)?
            + dcf.sifs_us
            + data_top
            + dcf.sifs_us
            + ctrl(FrameKind::Ack)?;
        let (cap_dl_cycle, cap_ul_cycle) = self.schedule.capacity_per_cycle(min_dl, min_ul);
        let measured_cycles = self.cycles_total.saturating_sub(self.cfg.warmup_cycles as u64);
        let dtim_us = self.schedule.dtim_interval_us;

        fn finish_dir<F: Real>(
            acc: &DirAccum,
            capacity_measured: u64,
            in_flight: u64,
            dtim_us: u64,
        ) -> DirectionMetrics<F> {
            let mut m = DirectionMetrics::<F> {
                generated: acc.generated,
                delivered: acc.delivered,
                dropped: acc.dropped,
                in_flight,
                delivered_measured: acc.delivered_measured,
                capacity_measured,
                ..Default::default()
            };
            m.finalize(&acc.delays_us, dtim_us);
            m
        }

        let dl_in_flight: u64 = self
            .stations
            .iter()
            .map(|s| s.dl_pending.iter().filter(|p| p.delivered_at.is_none()).count() as u64)
            .sum();
        let ul_in_flight: u64 = self
            .stations
            .iter()
            .map(|s| s.ul_pending.iter().filter(|p| p.delivered_at.is_none()).count() as u64)
            .sum();
        let downlink = finish_dir(&self.dl, cap_dl_cycle * measured_cycles, dl_in_flight, dtim_us);
        let uplink = finish_dir(&self.ul, cap_ul_cycle * measured_cycles, ul_in_flight, dtim_us);

        let station_rows = self
            .stations
            .iter()
            .enumerate()
            .map(|(i, st)| {
                station_metrics(
                    st.aid,
                    F::from_f64_lossy(st.distance_m),
                    st.rate_kbps,
                    EnergyLedger {
                        times: self.trackers[i].ledger,
                        bits_delivered: self.bits_delivered[i],
                    },
                    &self.cfg.energy.radio,
                )
            })
            .collect();

        Ok(RunOutput {
            report: MetricsReport {
                scenario: self.cfg.name.clone(),
                seed: self.cfg.seed,
                duration_us: self.end_us,
                dtim_interval_us: self.schedule.dtim_interval_us,
                cycles: self.cycles_total,
                warmup_cycles: self.cfg.warmup_cycles as u64,
                downlink,
                uplink,
                collisions: self.collisions,
                retransmissions: self.retransmissions,
                stations: station_rows,
            },
            events: self.events,
            schedule: Some(self.schedule),
        })
    }
}

fn split_beacons(beacons: Vec<BeaconFrame>) -> (DtimBitmap, Vec<Vec<TimBitmap>>) {
    let mut dtim = DtimBitmap::default();
    let mut tims = Vec::new();
    for b in beacons {
        match b {
            BeaconFrame::Dtim(d) => dtim = d,
            BeaconFrame::Tim { bitmaps, .. } => tims.push(bitmaps),
        }
    }
    (dtim, tims)
}
