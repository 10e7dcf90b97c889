//! Deterministic discrete-event kernel: time-ordered event queue with FIFO
//! tie-breaking, replication plan, and the structured event log.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::SimError;
use crate::model::{OrderId, PalletId};
use serde::{Deserialize, Serialize};

/// Event categories dequeued by the simulation loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    PalletArrival,
    WaveRelease,
    TruckFree,
    TaskComplete,
    EndOfDay,
}

/// One scheduled event carrying an opaque payload.
#[derive(Debug, Clone)]
pub struct Event<P> {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
    pub payload: P,
}

struct HeapEntry<P>(Event<P>);

impl<P> PartialEq for HeapEntry<P> {
    fn eq(&self, other: &Self) -> bool {
        self.0.time == other.0.time && self.0.seq == other.0.seq
    }
}
impl<P> Eq for HeapEntry<P> {}
impl<P> Ord for HeapEntry<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap through reversal: earliest time first, then lowest seq.
        match self.0.time.total_cmp(&other.0.time) {
            Ordering::Equal => self.0.seq.cmp(&other.0.seq),
            ord => ord,
        }
        .reverse()
    }
}
impl<P> PartialOrd for HeapEntry<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Priority queue plus simulation clock. Events dequeue in nondecreasing
/// (time, seq) order; scheduling into the past fails fast.
pub struct EventQueue<P> {
    heap: BinaryHeap<HeapEntry<P>>,
    next_seq: u64,
    clock: f64,
}

impl<P> Default for EventQueue<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> EventQueue<P> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
            clock: 0.0,
        }
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, time: f64, kind: EventKind, payload: P) -> Result<(), SimError> {
        if time < self.clock {
            return Err(SimError::PastEvent {
                t: time,
                clock: self.clock,
            });
        }
        debug_assert!(time.is_finite());
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(HeapEntry(Event {
            time,
            seq,
            kind,
            payload,
        }));
        Ok(())
    }

    /// Pop the next event and advance the clock to it.
    pub fn pop(&mut self) -> Option<Event<P>> {
        let event = self.heap.pop()?.0;
        debug_assert!(event.time >= self.clock);
        self.clock = event.time;
        Some(event)
    }

    /// Time of the next event without popping it.
    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.0.time)
    }
}

/// Replication horizon and warm-up handling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplicationPlan {
    pub n_days: u32,
    pub warm_up_days: u32,
    /// Two 8-hour shifts per operational day.
    pub day_length_s: f64,
    pub replications: u32,
}

impl Default for ReplicationPlan {
    fn default() -> Self {
        ReplicationPlan {
            n_days: 80,
            warm_up_days: 5,
            day_length_s: 57_600.0,
            replications: 10,
        }
    }
}

impl ReplicationPlan {
    pub fn horizon_s(&self) -> f64 {
        self.n_days as f64 * self.day_length_s
    }

    /// KPIs aggregate only inside [warm-up end, horizon].
    pub fn kpi_window(&self) -> (f64, f64) {
        (
            self.warm_up_days.min(self.n_days) as f64 * self.day_length_s,
            self.horizon_s(),
        )
    }

    pub fn validate(&self, key: &str) -> Result<(), crate::error::ConfigError> {
        if self.n_days == 0 || self.replications == 0 {
            return Err(crate::error::ConfigError::invalid(
                key,
                "n_days and replications must be at least 1",
            ));
        }
        if !(self.day_length_s > 0.0) {
            return Err(crate::error::ConfigError::invalid(
                format!("{key}.day_length_s"),
                "day length must be positive",
            ));
        }
        if self.warm_up_days > self.n_days {
            return Err(crate::error::ConfigError::invalid(
                format!("{key}.warm_up_days"),
                format!(
                    "warm-up of {} days exceeds the {}-day horizon",
                    self.warm_up_days, self.n_days
                ),
            ));
        }
        Ok(())
    }
}

/// What happened, for the structured event log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogEvent {
    Arrived {
        pallet: PalletId,
        sku: u32,
        class: char,
        collars: u8,
    },
    /// Pallet put into a slot (initial store, re-slot, or relocation drop).
    Stored { pallet: PalletId, slot: u32 },
    /// Pallet taken out of a slot.
    Removed {
        pallet: PalletId,
        slot: u32,
        relocation: bool,
    },
    /// Pallet placed at outbound staging for its order.
    Staged { pallet: PalletId, order: OrderId },
    WaveReleased {
        order: OrderId,
        wave: u64,
        lines: u32,
        pallets: u32,
    },
    OrderCompleted { order: OrderId },
    TruckBusy { outbound: bool, truck: u32 },
    TruckIdle { outbound: bool, truck: u32 },
    /// One truck trip and its finalized load (inbound trips log at
    /// departure, outbound trips when the load returns to staging).
    Trip {
        outbound: bool,
        truck: u32,
        pallets: u32,
        collar_units: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogRecord {
    pub time: f64,
    #[serde(flatten)]
    pub event: LogEvent,
}

/// How much of the run to retain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogMode {
    /// Only the arrivals-channel hash (cheap; enough for CRN checks).
    Hash,
    /// Every record, for oracle reducers and dumps.
    Full,
}

/// Event log sink. The arrivals channel is always hashed so common-random-
/// number equality can be asserted without retaining full logs.
pub struct EventLog {
    mode: LogMode,
    pub records: Vec<LogRecord>,
    arrivals_hash: u64,
}

impl EventLog {
    pub fn new(mode: LogMode) -> Self {
        EventLog {
            mode,
            records: Vec::new(),
            arrivals_hash: 0xcbf2_9ce4_8422_2325,
        }
    }

    pub fn push(&mut self, time: f64, event: LogEvent) {
        if let LogEvent::Arrived {
            pallet,
            sku,
            class,
            collars,
        } = event
        {
            for word in [time.to_bits(), pallet, sku as u64, class as u64, collars as u64] {
                self.arrivals_hash = fnv_step(self.arrivals_hash, word);
            }
        }
        if self.mode == LogMode::Full {
            self.records.push(LogRecord { time, event });
        }
    }

    pub fn arrivals_hash(&self) -> u64 {
        self.arrivals_hash
    }

    /// Newline-delimited text form: `time kind field=value ...`.
    pub fn write_text<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.records {
            let value = serde_json::to_value(r.event).expect("log event serializes");
            let obj = value.as_object().unwrap();
            write!(w, "{:.3} {}", r.time, obj["kind"].as_str().unwrap())?;
            for (k, v) in obj {
                if k != "kind" {
                    write!(w, " {k}={v}")?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn fnv_step(mut hash: u64, word: u64) -> u64 {
    for byte in word.to_le_bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn earliest_time_dequeues_first() {
        let mut q: EventQueue<u32> = EventQueue::new();
        q.schedule(5.0, EventKind::TaskComplete, 1).unwrap();
        q.schedule(3.0, EventKind::TaskComplete, 2).unwrap();
        assert_eq!(q.pop().unwrap().payload, 2);
        assert_eq!(q.pop().unwrap().payload, 1);
    }

    #[test]
    fn equal_times_dequeue_in_schedule_order() {
        let mut q: EventQueue<u32> = EventQueue::new();
        q.schedule(7.0, EventKind::TaskComplete, 1).unwrap();
        q.schedule(7.0, EventKind::TaskComplete, 2).unwrap();
        q.schedule(7.0, EventKind::TaskComplete, 3).unwrap();
        let order: Vec<u32> = std::iter::from_fn(|| q.pop().map(|e| e.payload)).collect();
        assert_eq!(order, vec![1, 2, 3]);
    }

    #[test]
    fn scheduling_in_the_past_fails() {
        let mut q: EventQueue<u32> = EventQueue::new();
        q.schedule(10.0, EventKind::EndOfDay, 0).unwrap();
        q.pop();
        assert_eq!(q.clock(), 10.0);
        assert!(matches!(
            q.schedule(9.0, EventKind::EndOfDay, 1),
            Err(SimError::PastEvent { .. })
        ));
        // Scheduling exactly at the clock is allowed.
        q.schedule(10.0, EventKind::EndOfDay, 2).unwrap();
    }

    #[test]
    fn clock_never_decreases() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut q: EventQueue<u64> = EventQueue::new();
        for i in 0..200u64 {
            let t = rng.gen_range(0.0..1000.0);
            let _ = q.schedule(t, EventKind::TaskComplete, i);
        }
        let mut last = 0.0;
        let mut popped = 0;
        while let Some(e) = q.pop() {
            assert!(e.time >= last);
            last = e.time;
            popped += 1;
            // Handlers may schedule forward from the clock.
            if popped % 7 == 0 {
                q.schedule(last + rng.gen_range(0.0..50.0), EventKind::TaskComplete, 999)
                    .unwrap();
            }
        }
        assert!(popped >= 200);
    }

    #[test]
    fn window_excludes_warm_up() {
        let plan = ReplicationPlan::default();
        let (start, end) = plan.kpi_window();
        assert_eq!(start, 5.0 * 57_600.0);
        assert_eq!(end, 80.0 * 57_600.0);
        let degenerate = ReplicationPlan {
            warm_up_days: 2,
            n_days: 2,
            ..plan
        };
        let (s, e) = degenerate.kpi_window();
        assert_eq!(s, e);
    }

    #[test]
    fn arrivals_hash_tracks_only_arrivals() {
        let mut a = EventLog::new(LogMode::Hash);
        let mut b = EventLog::new(LogMode::Hash);
        a.push(1.0, LogEvent::Arrived { pallet: 1, sku: 2, class: 'A', collars: 3 });
        b.push(1.0, LogEvent::Arrived { pallet: 1, sku: 2, class: 'A', collars: 3 });
        b.push(2.0, LogEvent::Stored { pallet: 1, slot: 9 });
        assert_eq!(a.arrivals_hash(), b.arrivals_hash());
        b.push(3.0, LogEvent::Arrived { pallet: 2, sku: 2, class: 'B', collars: 1 });
        assert_ne!(a.arrivals_hash(), b.arrivals_hash());
    }

    #[test]
    fn text_log_is_newline_delimited() {
        let mut log = EventLog::new(LogMode::Full);
        log.push(0.5, LogEvent::Arrived { pallet: 7, sku: 1, class: 'C', collars: 2 });
        log.push(1.25, LogEvent::Stored { pallet: 7, slot: 42 });
        let mut out = Vec::new();
        log.write_text(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("0.500 arrived"));
        assert!(lines[1].contains("slot=42"));
    }
}
