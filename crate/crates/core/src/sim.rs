//! One replication of one scenario: the single-threaded event loop tying
//! together arrivals, inbound putaway, wave releases, outbound retrieval,
//! and KPI accumulation. Distinct replications are independent and may run
//! in parallel.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::engine::{EventKind, EventLog, EventQueue, LogEvent, LogMode};
use crate::error::ConfigError;
use crate::kpi::{self, KpiValues};
use crate::layout::{compute_area, Layout, SlotId};
use crate::model::{Order, OrderId, Pallet, PalletId, SkuCatalog};
use crate::process::{
    consolidate_batch, ArrivalGenerator, Book, PalletComposer, WaveGenerator,
};
use crate::rng::{stream, RngStreams};
use crate::routing::{sequence_inbound_tasks, InboundTask, NodeId, TravelMatrix};
use crate::scenario::Scenario;
use crate::slotting::{
    assign_slot, relocation_target, select_pallet_for_line, InventoryState, SelectOutcome,
    SlotKeys,
};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Immutable inputs shared by every replication of one scenario.
pub struct SimInputs {
    pub scenario: Scenario,
    pub layout: Arc<Layout>,
    pub matrix: Arc<TravelMatrix>,
    pub keys: Arc<SlotKeys>,
    pub catalog: Arc<SkuCatalog>,
}

impl SimInputs {
    pub fn prepare(scenario: Scenario) -> Result<SimInputs, ConfigError> {
        scenario.validate()?;
        let layout = Arc::new(scenario.build_layout()?);
        let matrix = Arc::new(TravelMatrix::build(&layout.graph, &scenario.vehicle));
        let keys = Arc::new(SlotKeys::build(&layout, &scenario.policy.params));
        let catalog = Arc::new(scenario.build_catalog()?);
        Ok(SimInputs {
            scenario,
            layout,
            matrix,
            keys,
            catalog,
        })
    }
}

/// Event payloads: the kernel's opaque reference into process state.
#[derive(Debug)]
enum Payload {
    Arrival(Box<Pallet>),
    Wave,
    Day,
    InTruck(u32),
    OutTruck(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum InStep {
    /// Loading the batch at inbound staging.
    Loading,
    /// Driving to the destination of batch item `idx`.
    ToDest { idx: usize },
    /// Lift + place at the destination of batch item `idx`.
    Placing { idx: usize },
    /// Returning empty to inbound staging.
    ToStaging,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum OutStep {
    /// Driving to the claimed target slot.
    ToPick {
        order: OrderId,
        line: usize,
        slot: SlotId,
        attempts: u8,
    },
    /// Lift + pick at the target slot.
    Picking {
        order: OrderId,
        line: usize,
        slot: SlotId,
    },
    /// Lift + pick of the blocking front pallet.
    UnblockPickFront {
        order: OrderId,
        line: usize,
        target: SlotId,
        front: SlotId,
        attempts: u8,
    },
    /// Carrying the front pallet to its relocation slot.
    RelocToDest {
        order: OrderId,
        line: usize,
        target: SlotId,
        pallet: PalletId,
        dest: SlotId,
        attempts: u8,
    },
    /// Lift + place of the relocated front pallet.
    RelocPlacing {
        order: OrderId,
        line: usize,
        target: SlotId,
        pallet: PalletId,
        dest: SlotId,
        attempts: u8,
    },
    /// Returning loaded to outbound staging.
    Return,
    /// Dropping carried pallets one by one at staging.
    Drop,
}

struct InTruck {
    node: NodeId,
    busy: bool,
    batch: Vec<(PalletId, SlotId)>,
    carry_back: Vec<PalletId>,
    step: InStep,
}

struct OutTruck {
    node: NodeId,
    busy: bool,
    carried: VecDeque<(PalletId, OrderId)>,
    carried_collars: u32,
    trip_pallets: u32,
    trip_collars: u32,
    step: OutStep,
}

struct OrderRec {
    order: Order,
    /// Pallets of each line not yet claimed by a truck.
    unclaimed: Vec<u32>,
    /// Pallets not yet staged.
    outstanding: u32,
    /// Whether a stock-out wait was already counted for a line.
    stockout_noted: Vec<bool>,
}

/// Counters that explain a replication beyond the four KPIs.
#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct Diagnostics {
    pub relocations: u64,
    pub reslots: u64,
    pub inbound_parked: u64,
    pub stockout_line_waits: u64,
    pub unblock_aborts: u64,
    pub empty_waves: u64,
    pub completed_orders: u64,
    pub incomplete_orders: u64,
    pub empty_window: bool,
    pub waves_on_takt: bool,
    pub prefilled_pallets: u64,
    pub final_stored: u64,
    pub final_in_transit: u64,
}

pub struct ReplicationResult {
    pub replication: u32,
    pub kpi: KpiValues,
    pub usage_avg: f64,
    pub arrivals_hash: u64,
    pub diagnostics: Diagnostics,
    pub daily_inbound: Vec<u64>,
    /// Per-day mean throughput over all days (warm-up included): the
    /// Welch-style warm-up inspection series.
    pub warmup_profile: Vec<f64>,
    pub completed_throughputs_s: Vec<f64>,
    pub log: Option<EventLog>,
}

struct Accum {
    window: (f64, f64),
    day_length: f64,
    n_days: usize,
    busy_count: i64,
    busy_cursor: f64,
    busy_integral: f64,
    throughputs: Vec<f64>,
    on_time: u64,
    daily_inbound: Vec<u64>,
    day_throughput: Vec<(f64, u64)>,
    waves_on_takt: bool,
}

impl Accum {
    fn new(window: (f64, f64), day_length: f64, n_days: usize) -> Accum {
        Accum {
            window,
            day_length,
            n_days,
            busy_count: 0,
            busy_cursor: window.0,
            busy_integral: 0.0,
            throughputs: Vec::new(),
            on_time: 0,
            daily_inbound: vec![0; n_days],
            day_throughput: vec![(0.0, 0); n_days],
            waves_on_takt: true,
        }
    }

    fn day_of(&self, t: f64) -> usize {
        ((t / self.day_length) as usize).min(self.n_days.saturating_sub(1))
    }

    fn busy_change(&mut self, t: f64, delta: i64) {
        let clipped = t.clamp(self.window.0, self.window.1);
        if clipped > self.busy_cursor {
            self.busy_integral += self.busy_count as f64 * (clipped - self.busy_cursor);
            self.busy_cursor = clipped;
        }
        self.busy_count += delta;
    }

    fn arrival(&mut self, t: f64) {
        let day = self.day_of(t);
        self.daily_inbound[day] += 1;
    }

    fn order_completed(&mut self, release: f64, completion: f64) {
        let day = self.day_of(release);
        let throughput = completion - release;
        self.day_throughput[day].0 += throughput;
        self.day_throughput[day].1 += 1;
        if release >= self.window.0 && release < self.window.1 {
            self.throughputs.push(throughput);
            if throughput <= kpi::ON_TIME_LIMIT_S {
                self.on_time += 1;
            }
        }
    }

    fn finish_usage(&mut self) -> f64 {
        if self.window.1 > self.busy_cursor {
            self.busy_integral += self.busy_count as f64 * (self.window.1 - self.busy_cursor);
            self.busy_cursor = self.window.1;
        }
        let span = self.window.1 - self.window.0;
        if span > 0.0 {
            self.busy_integral / span
        } else {
            0.0
        }
    }
}

struct World<'a> {
    inp: &'a SimInputs,
    queue: EventQueue<Payload>,
    log: EventLog,
    inv: InventoryState,
    book: Book,
    arrivals: ArrivalGenerator,
    waves: WaveGenerator,
    policy_rng: ChaCha8Rng,
    pallets: Vec<Pallet>,
    inbound_queue: VecDeque<PalletId>,
    in_trucks: Vec<InTruck>,
    out_trucks: Vec<OutTruck>,
    orders: Vec<OrderRec>,
    open_orders: Vec<OrderId>,
    unclaimed_total: u64,
    wave_counter: u64,
    accum: Accum,
    diag: Diagnostics,
    horizon: f64,
    staged_total: u64,
}

const INBOUND_SCAN_LIMIT: usize = 24;
const UNBLOCK_ATTEMPT_LIMIT: u8 = 3;

impl<'a> World<'a> {
    fn vehicle(&self) -> &crate::routing::VehicleProfile {
        &self.inp.scenario.vehicle
    }

    fn travel_s(&self, from: NodeId, to: NodeId) -> f64 {
        self.inp.matrix.seconds(from, to)
    }

    /// Lift plus pick/place handling at a slot.
    fn service_s(&self, slot: SlotId) -> f64 {
        let level = self.inp.layout.slot(slot).level;
        self.vehicle()
            .lift_seconds(level as u32, self.inp.layout.level_height_m)
            + self.vehicle().handling_at_level_s(level)
    }

    fn ground_handle_s(&self) -> f64 {
        self.vehicle().handling_at_level_s(0)
    }

    fn x_band(&self, slot: SlotId) -> u8 {
        let w = self.inp.layout.footprint.width_mm().max(1);
        let x = self.inp.layout.slot(slot).position.x.clamp(0, w - 1);
        ((3 * x) / w) as u8
    }

    fn assign(&mut self, pallet: PalletId) -> Result<SlotId, crate::error::SimError> {
        assign_slot(
            self.inp.scenario.effective_policy(),
            &self.pallets[pallet as usize],
            &self.inv,
            &self.inp.layout,
            &self.inp.scenario.policy.params,
            &mut self.policy_rng,
        )
    }

    // ------------------------------------------------------------------
    // Inbound side
    // ------------------------------------------------------------------

    fn handle_arrival(&mut self, t: f64, pallet: Pallet) {
        let id = pallet.id;
        self.log.push(
            t,
            LogEvent::Arrived {
                pallet: id,
                sku: pallet.sku,
                class: pallet.sku_class.letter(),
                collars: pallet.collars,
            },
        );
        self.accum.arrival(t);
        self.book.register_arrival(
            t,
            pallet.sku,
            self.inp.scenario.outbound.book_lead_s,
        );
        debug_assert_eq!(self.pallets.len(), id as usize);
        self.pallets.push(pallet);
        self.inbound_queue.push_back(id);
        // Pull the next arrival from the stream.
        let (next_t, next_pallet) = self.arrivals.next_arrival(&self.inp.catalog);
        if next_t < self.horizon {
            self.queue
                .schedule(next_t, EventKind::PalletArrival, Payload::Arrival(Box::new(next_pallet)))
                .expect("arrival in the future");
        }
        self.dispatch_inbound(t);
    }

    /// Send idle inbound trucks out with consolidated batches.
    fn dispatch_inbound(&mut self, t: f64) {
        for truck_idx in 0..self.in_trucks.len() {
            if self.in_trucks[truck_idx].busy || self.inbound_queue.is_empty() {
                continue;
            }
            // Plan destinations for the scan window, reserving each slot.
            let scan: Vec<PalletId> = self
                .inbound_queue
                .iter()
                .copied()
                .take(INBOUND_SCAN_LIMIT)
                .collect();
            let mut planned: Vec<(PalletId, SlotId)> = Vec::with_capacity(scan.len());
            for pid in scan {
                match self.assign(pid) {
                    Ok(slot) => {
                        self.inv.mark_pending(slot);
                        planned.push((pid, slot));
                    }
                    Err(_) => {
                        // Storage full for this pallet right now; stop
                        // planning (the queue retries on the next free-up).
                        self.diag.inbound_parked += 1;
                        break;
                    }
                }
            }
            if planned.is_empty() {
                return;
            }
            let items: Vec<(u8, u8)> = planned
                .iter()
                .map(|(pid, slot)| (self.pallets[*pid as usize].collars, self.x_band(*slot)))
                .collect();
            let chosen = consolidate_batch(&items, self.vehicle().capacity_collar_units);
            // Release reservations on the scanned-but-not-taken slots.
            let mut batch: Vec<(PalletId, SlotId)> = Vec::with_capacity(chosen.len());
            for (i, (pid, slot)) in planned.iter().enumerate() {
                if chosen.contains(&i) {
                    batch.push((*pid, *slot));
                } else {
                    self.inv.clear_pending(*slot);
                }
            }
            // Remove the batched pallets from the queue.
            let batched: Vec<PalletId> = batch.iter().map(|(p, _)| *p).collect();
            self.inbound_queue.retain(|pid| !batched.contains(pid));
            // Left-to-right delivery ordering.
            let mut tasks: Vec<InboundTask> = batch
                .iter()
                .map(|(pid, slot)| InboundTask {
                    pallet: *pid,
                    slot: *slot,
                    position: self.inp.layout.slot(*slot).position,
                })
                .collect();
            sequence_inbound_tasks(&mut tasks);
            let collar_units: u32 = batched
                .iter()
                .map(|p| self.pallets[*p as usize].collars as u32)
                .sum();
            debug_assert!(collar_units <= self.vehicle().capacity_collar_units);
            let truck = &mut self.in_trucks[truck_idx];
            truck.batch = tasks.iter().map(|task| (task.pallet, task.slot)).collect();
            truck.busy = true;
            truck.step = InStep::Loading;
            self.log.push(t, LogEvent::TruckBusy { outbound: false, truck: truck_idx as u32 });
            self.log.push(
                t,
                LogEvent::Trip {
                    outbound: false,
                    truck: truck_idx as u32,
                    pallets: batch.len() as u32,
                    collar_units,
                },
            );
            self.accum.busy_change(t, 1);
            let load_time = batch.len() as f64 * self.ground_handle_s();
            self.queue
                .schedule(t + load_time, EventKind::TaskComplete, Payload::InTruck(truck_idx as u32))
                .unwrap();
        }
    }

    fn handle_in_truck(&mut self, t: f64, idx: u32) {
        let i = idx as usize;
        let step = self.in_trucks[i].step;
        match step {
            InStep::Loading => {
                self.in_trucks[i].step = InStep::ToDest { idx: 0 };
                let dest = self.in_trucks[i].batch[0].1;
                let eta = t + self.travel_s(self.in_trucks[i].node, self.slot_node(dest));
                self.queue
                    .schedule(eta, EventKind::TaskComplete, Payload::InTruck(idx))
                    .unwrap();
            }
            InStep::ToDest { idx: item } => {
                let (pid, slot) = self.in_trucks[i].batch[item];
                self.in_trucks[i].node = self.slot_node(slot);
                // The reservation guarantees the slot is still free, but
                // a neighbor stored into the front of a reserved rear makes
                // it inaccessible: re-run assignment from here.
                let accessible = self.inv.is_free(slot) && {
                    let s = self.inp.layout.slot(slot);
                    s.depth_index == 0
                        || s.pair.map_or(true, |front| self.inv.is_free(front))
                };
                if !accessible {
                    self.inv.clear_pending(slot);
                    match self.assign(pid) {
                        Ok(new_slot) => {
                            self.diag.reslots += 1;
                            self.inv.mark_pending(new_slot);
                            self.in_trucks[i].batch[item].1 = new_slot;
                            let eta =
                                t + self.travel_s(self.in_trucks[i].node, self.slot_node(new_slot));
                            self.queue
                                .schedule(eta, EventKind::TaskComplete, Payload::InTruck(idx))
                                .unwrap();
                        }
                        Err(_) => {
                            // Nowhere to put it: carry it back to staging.
                            self.diag.inbound_parked += 1;
                            self.in_trucks[i].carry_back.push(pid);
                            self.advance_inbound_after_item(t, idx, item);
                        }
                    }
                    return;
                }
                self.in_trucks[i].step = InStep::Placing { idx: item };
                self.queue
                    .schedule(t + self.service_s(slot), EventKind::TaskComplete, Payload::InTruck(idx))
                    .unwrap();
            }
            InStep::Placing { idx: item } => {
                let (pid, slot) = self.in_trucks[i].batch[item];
                {
                    let pallet = &mut self.pallets[pid as usize];
                    pallet.stored_time = Some(t);
                    pallet.slot = Some(slot);
                }
                let pallet = self.pallets[pid as usize].clone();
                self.inv.occupy(&self.inp.layout, &self.inp.keys, slot, &pallet);
                self.log.push(t, LogEvent::Stored { pallet: pid, slot });
                self.advance_inbound_after_item(t, idx, item);
                // New stock may unpark waiting order lines.
                self.dispatch_outbound(t);
            }
            InStep::ToStaging => {
                self.in_trucks[i].node = self.inp.layout.inbound_staging;
                self.in_trucks[i].busy = false;
                self.in_trucks[i].batch.clear();
                let back: Vec<PalletId> = self.in_trucks[i].carry_back.drain(..).collect();
                for pid in back.into_iter().rev() {
                    self.inbound_queue.push_front(pid);
                }
                self.log.push(t, LogEvent::TruckIdle { outbound: false, truck: idx });
                self.accum.busy_change(t, -1);
                self.dispatch_inbound(t);
            }
        }
    }

    fn advance_inbound_after_item(&mut self, t: f64, idx: u32, item: usize) {
        let i = idx as usize;
        if item + 1 < self.in_trucks[i].batch.len() {
            self.in_trucks[i].step = InStep::ToDest { idx: item + 1 };
            let next = self.in_trucks[i].batch[item + 1].1;
            let eta = t + self.travel_s(self.in_trucks[i].node, self.slot_node(next));
            self.queue
                .schedule(eta, EventKind::TaskComplete, Payload::InTruck(idx))
                .unwrap();
        } else {
            self.in_trucks[i].step = InStep::ToStaging;
            let eta = t + self.travel_s(self.in_trucks[i].node, self.inp.layout.inbound_staging);
            self.queue
                .schedule(eta, EventKind::TruckFree, Payload::InTruck(idx))
                .unwrap();
        }
    }

    fn slot_node(&self, slot: SlotId) -> NodeId {
        self.inp.layout.slot(slot).access_node
    }

    // ------------------------------------------------------------------
    // Outbound side
    // ------------------------------------------------------------------

    fn handle_wave(&mut self, t: f64) {
        let wave = self.wave_counter;
        self.wave_counter += 1;
        let takt = self.inp.scenario.outbound.takt_s;
        if (t - wave as f64 * takt).abs() > 1e-9 {
            self.accum.waves_on_takt = false;
        }
        let order_id = self.orders.len() as OrderId;
        match self.waves.generate_wave(
            &self.inp.scenario.outbound,
            &self.inp.catalog,
            &mut self.book,
            order_id,
            wave,
        ) {
            Some(order) => {
                self.log.push(
                    t,
                    LogEvent::WaveReleased {
                        order: order_id,
                        wave,
                        lines: order.lines.len() as u32,
                        pallets: order.total_pallets(),
                    },
                );
                let unclaimed: Vec<u32> = order.lines.iter().map(|l| l.quantity).collect();
                let outstanding = order.total_pallets();
                self.unclaimed_total += outstanding as u64;
                self.orders.push(OrderRec {
                    stockout_noted: vec![false; order.lines.len()],
                    unclaimed,
                    outstanding,
                    order,
                });
                self.open_orders.push(order_id);
                self.dispatch_outbound(t);
            }
            None => {
                self.diag.empty_waves += 1;
            }
        }
        let next = (wave + 1) as f64 * takt;
        if next < self.horizon {
            self.queue
                .schedule(next, EventKind::WaveRelease, Payload::Wave)
                .unwrap();
        }
    }

    /// Best next retrieval for a truck at `node`: oldest open order first,
    /// unblocked candidates before blocked ones, then nearest by travel
    /// cost with slot-id ties.
    fn find_outbound_work(&mut self, node: NodeId) -> Option<(OrderId, usize, SlotId, bool)> {
        for &oid in &self.open_orders {
            let rec = &self.orders[oid as usize];
            let mut best_ready: Option<(u64, SlotId, usize)> = None;
            let mut best_blocked: Option<(u64, SlotId, usize)> = None;
            let mut stockouts: Vec<usize> = Vec::new();
            for (line_idx, line) in rec.order.lines.iter().enumerate() {
                if rec.unclaimed[line_idx] == 0 {
                    continue;
                }
                match select_pallet_for_line(
                    line.sku,
                    &self.inv,
                    &self.inp.layout,
                    &self.inp.matrix,
                    node,
                ) {
                    SelectOutcome::Ready(slot) => {
                        let key = ((self.inp.matrix.seconds(node, self.slot_node(slot)) * 1000.0)
                            .round() as u64, slot);
                        if best_ready.map_or(true, |(bk, bs, _)| (key.0, key.1) < (bk, bs)) {
                            best_ready = Some((key.0, key.1, line_idx));
                        }
                    }
                    SelectOutcome::Blocked(slot) => {
                        let key = ((self.inp.matrix.seconds(node, self.slot_node(slot)) * 1000.0)
                            .round() as u64, slot);
                        if best_blocked.map_or(true, |(bk, bs, _)| (key.0, key.1) < (bk, bs)) {
                            best_blocked = Some((key.0, key.1, line_idx));
                        }
                    }
                    SelectOutcome::Busy => {}
                    SelectOutcome::OutOfStock => stockouts.push(line_idx),
                }
            }
            for line_idx in stockouts {
                let rec = &mut self.orders[oid as usize];
                if !rec.stockout_noted[line_idx] {
                    rec.stockout_noted[line_idx] = true;
                    self.diag.stockout_line_waits += 1;
                }
            }
            if let Some((_, slot, line)) = best_ready {
                return Some((oid, line, slot, false));
            }
            if let Some((_, slot, line)) = best_blocked {
                return Some((oid, line, slot, true));
            }
        }
        None
    }

    fn dispatch_outbound(&mut self, t: f64) {
        if self.unclaimed_total == 0 {
            return;
        }
        for truck_idx in 0..self.out_trucks.len() {
            if self.out_trucks[truck_idx].busy {
                continue;
            }
            if self.unclaimed_total == 0 {
                return;
            }
            let node = self.out_trucks[truck_idx].node;
            let Some((order, line, slot, _blocked)) = self.find_outbound_work(node) else {
                return;
            };
            self.claim_line(order, line, slot);
            let truck = &mut self.out_trucks[truck_idx];
            truck.busy = true;
            truck.step = OutStep::ToPick { order, line, slot, attempts: 0 };
            self.log.push(t, LogEvent::TruckBusy { outbound: true, truck: truck_idx as u32 });
            self.accum.busy_change(t, 1);
            let eta = t + self.travel_s(node, self.slot_node(slot));
            self.queue
                .schedule(eta, EventKind::TaskComplete, Payload::OutTruck(truck_idx as u32))
                .unwrap();
        }
    }

    fn claim_line(&mut self, order: OrderId, line: usize, slot: SlotId) {
        self.inv.claim(slot);
        let rec = &mut self.orders[order as usize];
        debug_assert!(rec.unclaimed[line] > 0);
        rec.unclaimed[line] -= 1;
        self.unclaimed_total -= 1;
    }

    fn unclaim_line(&mut self, order: OrderId, line: usize, slot: SlotId) {
        self.inv.unclaim(slot);
        let rec = &mut self.orders[order as usize];
        rec.unclaimed[line] += 1;
        self.unclaimed_total += 1;
    }

    fn handle_out_truck(&mut self, t: f64, idx: u32) {
        let i = idx as usize;
        let step = self.out_trucks[i].step;
        match step {
            OutStep::ToPick { order, line, slot, attempts } => {
                self.out_trucks[i].node = self.slot_node(slot);
                if self.inv.is_blocked(&self.inp.layout, slot) {
                    self.start_unblock(t, idx, order, line, slot, attempts);
                } else {
                    self.out_trucks[i].step = OutStep::Picking { order, line, slot };
                    self.queue
                        .schedule(t + self.service_s(slot), EventKind::TaskComplete, Payload::OutTruck(idx))
                        .unwrap();
                }
            }
            OutStep::Picking { order, line, slot } => {
                let pid = self.inv.vacate(&self.inp.layout, &self.inp.keys, slot);
                self.pallets[pid as usize].slot = None;
                self.log.push(t, LogEvent::Removed { pallet: pid, slot, relocation: false });
                let collars = self.pallets[pid as usize].collars as u32;
                let truck = &mut self.out_trucks[i];
                truck.carried.push_back((pid, order));
                truck.carried_collars += collars;
                truck.trip_pallets += 1;
                truck.trip_collars += collars;
                let _ = line;
                // A freed slot may unblock rears or accept parked inbound.
                self.continue_or_return(t, idx, order);
                self.dispatch_inbound(t);
            }
            OutStep::UnblockPickFront { order, line, target, front, attempts } => {
                let pid = self.inv.vacate(&self.inp.layout, &self.inp.keys, front);
                self.pallets[pid as usize].slot = None;
                self.log.push(t, LogEvent::Removed { pallet: pid, slot: front, relocation: true });
                self.diag.relocations += 1;
                match relocation_target(&self.inv, &self.inp.layout, &self.inp.matrix, front, self.pallets[pid as usize].collars, true)
                    .or_else(|| relocation_target(&self.inv, &self.inp.layout, &self.inp.matrix, front, self.pallets[pid as usize].collars, false))
                {
                    Some(dest) => {
                        self.inv.mark_pending(dest);
                        self.out_trucks[i].step = OutStep::RelocToDest { order, line, target, pallet: pid, dest, attempts };
                        let eta = t + self.travel_s(self.out_trucks[i].node, self.slot_node(dest));
                        self.queue
                            .schedule(eta, EventKind::TaskComplete, Payload::OutTruck(idx))
                            .unwrap();
                    }
                    None => {
                        // No admissible slot anywhere: put it straight back.
                        self.inv.occupy(&self.inp.layout, &self.inp.keys, front, &self.pallets[pid as usize].clone());
                        self.pallets[pid as usize].slot = Some(front);
                        self.log.push(t, LogEvent::Stored { pallet: pid, slot: front });
                        self.abort_target(t, idx, order, line, target);
                    }
                }
            }
            OutStep::RelocToDest { order, line, target, pallet, dest, attempts } => {
                self.out_trucks[i].node = self.slot_node(dest);
                // The reservation held; place unless the front of a rear
                // dest got filled in the meantime.
                let placeable = self.inv.is_free(dest) && {
                    let s = self.inp.layout.slot(dest);
                    s.depth_index == 0
                        || s.pair.map_or(true, |front| self.inv.is_free(front))
                };
                if placeable {
                    self.out_trucks[i].step = OutStep::RelocPlacing { order, line, target, pallet, dest, attempts };
                    self.queue
                        .schedule(t + self.service_s(dest), EventKind::TaskComplete, Payload::OutTruck(idx))
                        .unwrap();
                } else {
                    self.inv.clear_pending(dest);
                    let collars = self.pallets[pallet as usize].collars;
                    match relocation_target(&self.inv, &self.inp.layout, &self.inp.matrix, dest, collars, false) {
                        Some(new_dest) => {
                            self.inv.mark_pending(new_dest);
                            self.out_trucks[i].step = OutStep::RelocToDest { order, line, target, pallet, dest: new_dest, attempts };
                            let eta = t + self.travel_s(self.out_trucks[i].node, self.slot_node(new_dest));
                            self.queue
                                .schedule(eta, EventKind::TaskComplete, Payload::OutTruck(idx))
                                .unwrap();
                        }
                        None => {
                            // Hold and retry shortly; outbound picks keep
                            // freeing slots so this cannot persist.
                            self.queue
                                .schedule(t + 60.0, EventKind::TaskComplete, Payload::OutTruck(idx))
                                .unwrap();
                        }
                    }
                }
            }
            OutStep::RelocPlacing { order, line, target, pallet, dest, attempts } => {
                let rec = self.pallets[pallet as usize].clone();
                self.inv.occupy(&self.inp.layout, &self.inp.keys, dest, &rec);
                self.pallets[pallet as usize].slot = Some(dest);
                self.log.push(t, LogEvent::Stored { pallet, slot: dest });
                // Back to the (hopefully unblocked) target.
                self.out_trucks[i].step = OutStep::ToPick { order, line, slot: target, attempts: attempts + 1 };
                let eta = t + self.travel_s(self.out_trucks[i].node, self.slot_node(target));
                self.queue
                    .schedule(eta, EventKind::TaskComplete, Payload::OutTruck(idx))
                    .unwrap();
                self.dispatch_inbound(t);
            }
            OutStep::Return => {
                self.out_trucks[i].node = self.inp.layout.outbound_staging;
                if self.out_trucks[i].trip_pallets > 0 {
                    self.log.push(
                        t,
                        LogEvent::Trip {
                            outbound: true,
                            truck: idx,
                            pallets: self.out_trucks[i].trip_pallets,
                            collar_units: self.out_trucks[i].trip_collars,
                        },
                    );
                }
                if self.out_trucks[i].carried.is_empty() {
                    self.finish_outbound_trip(t, idx);
                } else {
                    self.out_trucks[i].step = OutStep::Drop;
                    self.queue
                        .schedule(t + self.ground_handle_s(), EventKind::TaskComplete, Payload::OutTruck(idx))
                        .unwrap();
                }
            }
            OutStep::Drop => {
                let (pid, order) = self.out_trucks[i].carried.pop_front().expect("drop with cargo");
                self.out_trucks[i].carried_collars -= self.pallets[pid as usize].collars as u32;
                self.log.push(t, LogEvent::Staged { pallet: pid, order });
                self.staged_total += 1;
                let rec = &mut self.orders[order as usize];
                rec.outstanding -= 1;
                if rec.outstanding == 0 {
                    rec.order.completion_time = Some(t);
                    self.log.push(t, LogEvent::OrderCompleted { order });
                    self.accum.order_completed(rec.order.release_time, t);
                    self.open_orders.retain(|o| *o != order);
                }
                if self.out_trucks[i].carried.is_empty() {
                    self.finish_outbound_trip(t, idx);
                } else {
                    self.queue
                        .schedule(t + self.ground_handle_s(), EventKind::TaskComplete, Payload::OutTruck(idx))
                        .unwrap();
                }
            }
        }
    }

    fn start_unblock(&mut self, t: f64, idx: u32, order: OrderId, line: usize, target: SlotId, attempts: u8) {
        let i = idx as usize;
        if attempts >= UNBLOCK_ATTEMPT_LIMIT {
            self.diag.unblock_aborts += 1;
            self.abort_target(t, idx, order, line, target);
            return;
        }
        let front = self.inp.layout.slot(target).pair.expect("blocked slot has a pair");
        if self.inv.is_claimed(front) {
            // Another truck owns the front; release and replan.
            self.abort_target(t, idx, order, line, target);
            return;
        }
        self.inv.claim(front);
        self.out_trucks[i].step = OutStep::UnblockPickFront { order, line, target, front, attempts };
        self.queue
            .schedule(t + self.service_s(front), EventKind::TaskComplete, Payload::OutTruck(idx))
            .unwrap();
    }

    /// Give up on a claimed target: release the claim and either continue
    /// with other work from here or return to staging.
    fn abort_target(&mut self, t: f64, idx: u32, order: OrderId, line: usize, target: SlotId) {
        self.unclaim_line(order, line, target);
        self.continue_or_return(t, idx, order);
    }

    /// After a pick (or an abort): claim the next same-order pallet within
    /// residual capacity, else head back to staging.
    fn continue_or_return(&mut self, t: f64, idx: u32, order: OrderId) {
        let i = idx as usize;
        let node = self.out_trucks[i].node;
        let residual = self
            .vehicle()
            .capacity_collar_units
            .saturating_sub(self.out_trucks[i].carried_collars);
        let rec = &self.orders[order as usize];
        let mut best: Option<(u64, SlotId, usize, bool)> = None;
        if rec.outstanding > 0 && residual > 0 {
            for (line_idx, ol) in rec.order.lines.iter().enumerate() {
                if rec.unclaimed[line_idx] == 0 {
                    continue;
                }
                let outcome = select_pallet_for_line(
                    ol.sku,
                    &self.inv,
                    &self.inp.layout,
                    &self.inp.matrix,
                    node,
                );
                let (slot, blocked) = match outcome {
                    SelectOutcome::Ready(s) => (s, false),
                    SelectOutcome::Blocked(s) => (s, true),
                    _ => continue,
                };
                let pid = self.inv.occupant(slot).expect("stored slot");
                if self.pallets[pid as usize].collars as u32 > residual {
                    continue;
                }
                let key = (
                    (self.inp.matrix.seconds(node, self.slot_node(slot)) * 1000.0).round() as u64
                        + if blocked { 1 << 40 } else { 0 },
                    slot,
                );
                if best.map_or(true, |(bk, bs, _, _)| (key.0, key.1) < (bk, bs)) {
                    best = Some((key.0, key.1, line_idx, blocked));
                }
            }
        }
        match best {
            Some((_, slot, line, _)) => {
                self.claim_line(order, line, slot);
                self.out_trucks[i].step = OutStep::ToPick { order, line, slot, attempts: 0 };
                let eta = t + self.travel_s(node, self.slot_node(slot));
                self.queue
                    .schedule(eta, EventKind::TaskComplete, Payload::OutTruck(idx))
                    .unwrap();
            }
            None => {
                self.out_trucks[i].step = OutStep::Return;
                let eta = t + self.travel_s(node, self.inp.layout.outbound_staging);
                let kind = if self.out_trucks[i].carried.is_empty() {
                    EventKind::TruckFree
                } else {
                    EventKind::TaskComplete
                };
                self.queue.schedule(eta, kind, Payload::OutTruck(idx)).unwrap();
            }
        }
    }

    fn finish_outbound_trip(&mut self, t: f64, idx: u32) {
        let i = idx as usize;
        self.out_trucks[i].busy = false;
        self.out_trucks[i].trip_pallets = 0;
        self.out_trucks[i].trip_collars = 0;
        self.out_trucks[i].carried_collars = 0;
        self.log.push(t, LogEvent::TruckIdle { outbound: true, truck: idx });
        self.accum.busy_change(t, -1);
        self.dispatch_outbound(t);
    }

    /// Pallet conservation: everything generated is stored, in transit, or
    /// shipped. Checked cheaply during debug runs.
    #[cfg(debug_assertions)]
    fn debug_conservation(&self) {
        let generated = self.pallets.len() as u64;
        let stored = self.inv.stored_count() as u64;
        let queued = self.inbound_queue.len() as u64;
        let on_in_trucks: u64 = self
            .in_trucks
            .iter()
            .filter(|tr| tr.busy)
            .map(|tr| {
                let placed = match tr.step {
                    InStep::Loading => 0,
                    InStep::ToDest { idx } | InStep::Placing { idx } => idx,
                    InStep::ToStaging => tr.batch.len(),
                };
                (tr.batch.len() - placed + tr.carry_back.len()) as u64
            })
            .sum();
        let reloc_flight: u64 = self
            .out_trucks
            .iter()
            .filter(|tr| {
                matches!(
                    tr.step,
                    OutStep::RelocToDest { .. } | OutStep::RelocPlacing { .. }
                ) && tr.busy
            })
            .count() as u64;
        let on_out_trucks: u64 = self.out_trucks.iter().map(|tr| tr.carried.len() as u64).sum();
        let in_transit = queued + on_in_trucks + on_out_trucks + reloc_flight;
        debug_assert_eq!(
            generated,
            stored + in_transit + self.staged_total,
            "conservation breach at clock {}",
            self.queue.clock()
        );
    }
}

/// Run one replication. The caller picks the log mode; `Full` retains every
/// record for oracle checks and dumps.
pub fn run_replication(inputs: &SimInputs, replication: u32, log_mode: LogMode) -> ReplicationResult {
    let scenario = &inputs.scenario;
    let plan = scenario.replication;
    let streams = RngStreams::new(scenario.master_seed, replication as u64);
    let horizon = plan.horizon_s();
    let window = plan.kpi_window();

    let mut world = World {
        inp: inputs,
        queue: EventQueue::new(),
        log: EventLog::new(log_mode),
        inv: InventoryState::new(&inputs.layout, &inputs.keys),
        book: Book::new(inputs.catalog.len()),
        arrivals: ArrivalGenerator::new(
            &scenario.inbound,
            scenario.pallet_mix.clone(),
            plan.day_length_s,
            streams.stream(stream::ARRIVALS),
            PalletComposer {
                classes: streams.stream(stream::CLASSES),
                collars: streams.stream(stream::COLLARS),
                formats: streams.stream(stream::FORMATS),
            },
            0,
        ),
        waves: WaveGenerator::new(
            &scenario.outbound,
            streams.stream(stream::ORDER_SKUS),
            streams.stream(stream::ORDER_SIZES),
        ),
        policy_rng: streams.stream(stream::POLICY_TIES),
        pallets: Vec::new(),
        inbound_queue: VecDeque::new(),
        in_trucks: (0..scenario.inbound.truck_count)
            .map(|_| InTruck {
                node: inputs.layout.inbound_staging,
                busy: false,
                batch: Vec::new(),
                carry_back: Vec::new(),
                step: InStep::Loading,
            })
            .collect(),
        out_trucks: (0..scenario.outbound.truck_count)
            .map(|_| OutTruck {
                node: inputs.layout.outbound_staging,
                busy: false,
                carried: VecDeque::new(),
                carried_collars: 0,
                trip_pallets: 0,
                trip_collars: 0,
                step: OutStep::Return,
            })
            .collect(),
        orders: Vec::new(),
        open_orders: Vec::new(),
        unclaimed_total: 0,
        wave_counter: 0,
        accum: Accum::new(window, plan.day_length_s, plan.n_days as usize),
        diag: Diagnostics::default(),
        horizon,
        staged_total: 0,
    };

    prefill(&mut world, &streams);

    // Seed the event streams.
    let (t0, first) = world.arrivals.next_arrival(&inputs.catalog);
    if t0 < horizon {
        world
            .queue
            .schedule(t0, EventKind::PalletArrival, Payload::Arrival(Box::new(first)))
            .unwrap();
    }
    world.queue.schedule(0.0, EventKind::WaveRelease, Payload::Wave).unwrap();
    world.queue.schedule(plan.day_length_s, EventKind::EndOfDay, Payload::Day).unwrap();

    let mut day = 1u32;
    let mut events_handled: u64 = 0;
    while world.queue.peek_time().is_some_and(|t| t <= horizon) {
        let event = world.queue.pop().expect("peeked event");
        let t = event.time;
        match event.payload {
            Payload::Arrival(pallet) => world.handle_arrival(t, *pallet),
            Payload::Wave => world.handle_wave(t),
            Payload::Day => {
                day += 1;
                if (day as f64) * plan.day_length_s <= horizon {
                    world
                        .queue
                        .schedule(day as f64 * plan.day_length_s, EventKind::EndOfDay, Payload::Day)
                        .unwrap();
                }
            }
            Payload::InTruck(idx) => world.handle_in_truck(t, idx),
            Payload::OutTruck(idx) => world.handle_out_truck(t, idx),
        }
        events_handled += 1;
        #[cfg(debug_assertions)]
        if events_handled % 4096 == 0 {
            world.debug_conservation();
        }
    }
    let _ = events_handled;

    // Wrap up KPIs.
    let usage_avg = world.accum.finish_usage();
    let completed = world.accum.throughputs.len() as u64;
    let mut incomplete = 0u64;
    for rec in &world.orders {
        if rec.outstanding > 0
            && rec.order.release_time >= window.0
            && rec.order.release_time < window.1
        {
            incomplete += 1;
        }
    }
    let throughput_mean = if completed > 0 {
        Some(world.accum.throughputs.iter().sum::<f64>() / completed as f64)
    } else {
        None
    };
    let on_time_pct = kpi::on_time_pct(&world.accum.throughputs);
    let mut diag = world.diag.clone();
    diag.completed_orders = completed;
    diag.incomplete_orders = incomplete;
    diag.empty_window = window.1 <= window.0 || completed == 0;
    diag.waves_on_takt = world.accum.waves_on_takt;
    diag.final_stored = world.inv.stored_count() as u64;
    diag.final_in_transit =
        world.pallets.len() as u64 - world.inv.stored_count() as u64 - world.staged_total;

    let warmup_profile = world
        .accum
        .day_throughput
        .iter()
        .map(|(sum, n)| if *n > 0 { sum / *n as f64 } else { 0.0 })
        .collect();

    ReplicationResult {
        replication,
        kpi: KpiValues {
            throughput_s_mean: throughput_mean,
            fte: kpi::required_fte(usage_avg),
            on_time_pct,
            area_m2: compute_area(&inputs.layout),
        },
        usage_avg,
        arrivals_hash: world.log.arrivals_hash(),
        diagnostics: diag,
        daily_inbound: world.accum.daily_inbound.clone(),
        warmup_profile,
        completed_throughputs_s: world.accum.throughputs,
        log: match log_mode {
            LogMode::Full => Some(world.log),
            LogMode::Hash => None,
        },
    }
}

/// Stock the warehouse at t=0: identical pallet draws across scenarios
/// (dedicated streams), placed by the policy under test.
fn prefill(world: &mut World, streams: &RngStreams) {
    let scenario = &world.inp.scenario;
    let spec_target = world
        .inp
        .layout
        .slot_count()
        .min(scenario.layout.resolved_spec().map(|s| s.target_slot_count as usize).unwrap_or(0));
    let count = ((scenario.initial_fill_fraction * spec_target as f64).round() as usize)
        .min(world.inp.layout.slot_count());
    let mut composer = PalletComposer {
        classes: streams.stream(&format!("{}_classes", stream::PREFILL)),
        collars: streams.stream(&format!("{}_collars", stream::PREFILL)),
        formats: streams.stream(&format!("{}_formats", stream::PREFILL)),
    };
    // Compose first so the draw sequence is independent of placement.
    let pallets: Vec<Pallet> = (0..count as PalletId)
        .map(|id| composer.compose(id, 0.0, &world.inp.catalog, &scenario.pallet_mix))
        .collect();
    for pallet in pallets {
        let id = pallet.id;
        world.pallets.push(pallet);
        world.log.push(
            0.0,
            LogEvent::Arrived {
                pallet: id,
                sku: world.pallets[id as usize].sku,
                class: world.pallets[id as usize].sku_class.letter(),
                collars: world.pallets[id as usize].collars,
            },
        );
        match world.assign(id) {
            Ok(slot) => {
                world.pallets[id as usize].stored_time = Some(0.0);
                world.pallets[id as usize].slot = Some(slot);
                let rec = world.pallets[id as usize].clone();
                world.inv.occupy(&world.inp.layout, &world.inp.keys, slot, &rec);
                world.log.push(0.0, LogEvent::Stored { pallet: id, slot });
                world.book.add_initial(rec.sku);
                world.diag.prefilled_pallets += 1;
            }
            Err(_) => {
                // Full at this fill level: keep it queued like an arrival.
                world.inbound_queue.push_back(id);
                world
                    .book
                    .register_arrival(0.0, world.pallets[id as usize].sku, scenario.outbound.book_lead_s);
                world.diag.inbound_parked += 1;
            }
        }
    }
    // The arrival stream continues after the pre-filled ids.
    world.arrivals.set_next_id(count as PalletId);
}
