//! Storage policies (one per compared configuration) and the mutable
//! inventory state they operate on.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::SimError;
use crate::layout::{Layout, LayoutKind, SlotId, Zone};
use crate::model::{ClassSplit, Pallet, PalletId, SkuClass, SkuId, DEFAULT_SKU_SHARE};
use crate::routing::{NodeId, TravelMatrix};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Storage / retrieval logic variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// First-available (uniformly random) slot, no class consideration.
    Random,
    /// ABC by distance only: A nearest the outbound staging, C farthest.
    ClassDistance,
    /// Random storage on the Flying-V geometry.
    FlyingVRandom,
    /// Class bands measured along the V cross-aisle.
    FlyingVAbc,
    /// Tri-zonal: A to ground-level P, B to S, C to dense E; S takes overflow.
    CpuZone,
}

impl PolicyKind {
    pub fn compatible_with(self, kind: LayoutKind) -> bool {
        match self {
            PolicyKind::Random | PolicyKind::ClassDistance => {
                matches!(kind, LayoutKind::Conventional | LayoutKind::Current)
            }
            PolicyKind::FlyingVRandom | PolicyKind::FlyingVAbc => kind == LayoutKind::FlyingV,
            PolicyKind::CpuZone => kind == LayoutKind::Cpu,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Random => "random",
            PolicyKind::ClassDistance => "class_distance",
            PolicyKind::FlyingVRandom => "flying_v_random",
            PolicyKind::FlyingVAbc => "flying_v_abc",
            PolicyKind::CpuZone => "cpu_zone",
        }
    }

    fn randomized(self) -> bool {
        matches!(self, PolicyKind::Random | PolicyKind::FlyingVRandom)
    }
}

/// Tunable policy parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyParams {
    /// Pallets taller than this never enter ground-level P slots.
    pub p_zone_max_collars: u8,
    /// Distance-band cuts for the class policies, as slot-count fractions.
    pub band_fractions: ClassSplit,
}

impl Default for PolicyParams {
    fn default() -> Self {
        PolicyParams {
            p_zone_max_collars: 4,
            band_fractions: DEFAULT_SKU_SHARE,
        }
    }
}

/// Per-layout precomputed sort keys: distance ranks in millimeters and the
/// distance band of every slot.
#[derive(Debug, Clone)]
pub struct SlotKeys {
    dist_mm: Vec<u64>,
    band: Vec<u8>,
}

impl SlotKeys {
    pub fn build(layout: &Layout, params: &PolicyParams) -> Self {
        let n = layout.slot_count();
        let dist_mm: Vec<u64> = (0..n as SlotId)
            .map(|id| (layout.distance_rank(id) * 1000.0).round() as u64)
            .collect();
        let mut order: Vec<SlotId> = (0..n as SlotId).collect();
        order.sort_by_key(|&id| (dist_mm[id as usize], id));
        let a_cut = (params.band_fractions.a * n as f64).round() as usize;
        let b_cut = a_cut + (params.band_fractions.b * n as f64).round() as usize;
        let mut band = vec![2u8; n];
        for (pos, id) in order.iter().enumerate() {
            band[*id as usize] = if pos < a_cut {
                0
            } else if pos < b_cut {
                1
            } else {
                2
            };
        }
        SlotKeys { dist_mm, band }
    }

    pub fn dist_mm(&self, slot: SlotId) -> u64 {
        self.dist_mm[slot as usize]
    }

    pub fn band(&self, slot: SlotId) -> u8 {
        self.band[slot as usize]
    }
}

fn band_of_class(class: SkuClass) -> u8 {
    match class {
        SkuClass::A => 0,
        SkuClass::B => 1,
        SkuClass::C => 2,
    }
}

fn zone_index(zone: Zone) -> usize {
    match zone {
        Zone::P => 0,
        Zone::E => 1,
        Zone::S => 2,
        Zone::Unzoned => 3,
    }
}

/// Slot occupancy plus the free/stored indices policies search. The
/// occupancy map and per-SKU index stay mutually consistent through the
/// `occupy`/`vacate` pair, which is the only mutation path.
#[derive(Debug, Clone)]
pub struct InventoryState {
    occupant: Vec<Option<PalletId>>,
    sku_of: Vec<Option<SkuId>>,
    claimed: Vec<bool>,
    /// Free slots promised to an in-flight delivery or relocation; they do
    /// not accept further assignments until released.
    pending: Vec<bool>,
    by_sku: BTreeMap<SkuId, BTreeSet<SlotId>>,
    /// Uniform-draw pool of free slots (swap-remove vector + position map).
    free_pool: Vec<SlotId>,
    free_pos: Vec<usize>,
    /// Free slots per zone ordered by (level, distance, id) — the in-band
    /// storage preference.
    free_zone_level: [BTreeSet<(u8, u64, SlotId)>; 4],
    /// Free slots per class band ordered by (level, distance, id).
    free_band_level: [BTreeSet<(u8, u64, SlotId)>; 3],
    /// All free slots by (distance, level, id) — global spill.
    free_dist: BTreeSet<(u64, u8, SlotId)>,
    stored: usize,
}

const NO_POS: usize = usize::MAX;

impl InventoryState {
    pub fn new(layout: &Layout, keys: &SlotKeys) -> Self {
        let n = layout.slot_count();
        let mut inv = InventoryState {
            occupant: vec![None; n],
            sku_of: vec![None; n],
            claimed: vec![false; n],
            pending: vec![false; n],
            by_sku: BTreeMap::new(),
            free_pool: Vec::with_capacity(n),
            free_pos: vec![NO_POS; n],
            free_zone_level: Default::default(),
            free_band_level: Default::default(),
            free_dist: BTreeSet::new(),
            stored: 0,
        };
        for slot in &layout.slots {
            inv.insert_free(layout, keys, slot.id);
        }
        inv
    }

    fn insert_free(&mut self, layout: &Layout, keys: &SlotKeys, id: SlotId) {
        let slot = layout.slot(id);
        let (level, dist) = (slot.level, keys.dist_mm(id));
        self.free_pos[id as usize] = self.free_pool.len();
        self.free_pool.push(id);
        self.free_zone_level[zone_index(slot.zone)].insert((level, dist, id));
        self.free_band_level[keys.band(id) as usize].insert((level, dist, id));
        self.free_dist.insert((dist, level, id));
    }

    fn remove_free(&mut self, layout: &Layout, keys: &SlotKeys, id: SlotId) {
        let slot = layout.slot(id);
        let (level, dist) = (slot.level, keys.dist_mm(id));
        let pos = self.free_pos[id as usize];
        debug_assert_ne!(pos, NO_POS);
        let last = *self.free_pool.last().unwrap();
        self.free_pool.swap_remove(pos);
        if last != id {
            self.free_pos[last as usize] = pos;
        }
        self.free_pos[id as usize] = NO_POS;
        self.free_zone_level[zone_index(slot.zone)].remove(&(level, dist, id));
        self.free_band_level[keys.band(id) as usize].remove(&(level, dist, id));
        self.free_dist.remove(&(dist, level, id));
    }

    pub fn is_free(&self, id: SlotId) -> bool {
        self.occupant[id as usize].is_none()
    }

    pub fn occupant(&self, id: SlotId) -> Option<PalletId> {
        self.occupant[id as usize]
    }

    pub fn sku_at(&self, id: SlotId) -> Option<SkuId> {
        self.sku_of[id as usize]
    }

    pub fn stored_count(&self) -> usize {
        self.stored
    }

    pub fn free_count(&self) -> usize {
        self.free_pool.len()
    }

    pub fn claim(&mut self, id: SlotId) {
        debug_assert!(!self.claimed[id as usize]);
        self.claimed[id as usize] = true;
    }

    pub fn unclaim(&mut self, id: SlotId) {
        self.claimed[id as usize] = false;
    }

    pub fn is_claimed(&self, id: SlotId) -> bool {
        self.claimed[id as usize]
    }

    pub fn mark_pending(&mut self, id: SlotId) {
        debug_assert!(self.is_free(id));
        self.pending[id as usize] = true;
    }

    pub fn clear_pending(&mut self, id: SlotId) {
        self.pending[id as usize] = false;
    }

    pub fn is_pending(&self, id: SlotId) -> bool {
        self.pending[id as usize]
    }

    /// Store `pallet` in `slot`; panics if the slot is taken (callers check
    /// admissibility first and re-assign on races). Clears any pending mark.
    pub fn occupy(&mut self, layout: &Layout, keys: &SlotKeys, slot: SlotId, pallet: &Pallet) {
        assert!(self.is_free(slot), "slot {slot} already occupied");
        self.pending[slot as usize] = false;
        self.remove_free(layout, keys, slot);
        self.occupant[slot as usize] = Some(pallet.id);
        self.sku_of[slot as usize] = Some(pallet.sku);
        self.by_sku.entry(pallet.sku).or_default().insert(slot);
        self.stored += 1;
    }

    /// Remove the pallet at `slot`, returning its id.
    pub fn vacate(&mut self, layout: &Layout, keys: &SlotKeys, slot: SlotId) -> PalletId {
        let pallet = self.occupant[slot as usize].expect("vacating an empty slot");
        let sku = self.sku_of[slot as usize].unwrap();
        self.occupant[slot as usize] = None;
        self.sku_of[slot as usize] = None;
        self.claimed[slot as usize] = false;
        let set = self.by_sku.get_mut(&sku).unwrap();
        set.remove(&slot);
        if set.is_empty() {
            self.by_sku.remove(&sku);
        }
        self.insert_free(layout, keys, slot);
        self.stored -= 1;
        pallet
    }

    /// Slots currently storing `sku`.
    pub fn slots_of_sku(&self, sku: SkuId) -> impl Iterator<Item = SlotId> + '_ {
        self.by_sku.get(&sku).into_iter().flatten().copied()
    }

    pub fn stored_unclaimed_of_sku(&self, sku: SkuId) -> usize {
        self.slots_of_sku(sku)
            .filter(|s| !self.claimed[*s as usize])
            .count()
    }

    /// A rear slot is blocked while its front neighbor holds a pallet.
    pub fn is_blocked(&self, layout: &Layout, id: SlotId) -> bool {
        let slot = layout.slot(id);
        if slot.depth_index == 0 {
            return false;
        }
        match slot.pair {
            Some(front) => !self.is_free(front),
            None => false,
        }
    }

    /// Whether a pallet with `collars` may be stored into `id` right now:
    /// free, collar fit, and a rear position needs an empty front.
    pub fn admissible(&self, layout: &Layout, id: SlotId, collars: u8) -> bool {
        if !self.is_free(id) || self.pending[id as usize] {
            return false;
        }
        let slot = layout.slot(id);
        if collars > slot.max_collars {
            return false;
        }
        if slot.depth_index == 1 {
            if let Some(front) = slot.pair {
                if !self.is_free(front) {
                    return false;
                }
            }
        }
        true
    }

    /// Full cross-check of the occupancy map against every index; used by
    /// tests and debug builds.
    pub fn check_consistency(&self, layout: &Layout) -> Result<(), String> {
        let mut stored = 0usize;
        for id in 0..self.occupant.len() as SlotId {
            match self.occupant[id as usize] {
                Some(_) => {
                    stored += 1;
                    let sku = self.sku_of[id as usize].ok_or(format!("slot {id} lost its sku"))?;
                    if !self.by_sku.get(&sku).is_some_and(|s| s.contains(&id)) {
                        return Err(format!("slot {id} missing from sku index"));
                    }
                    if self.free_pos[id as usize] != NO_POS {
                        return Err(format!("occupied slot {id} still in free pool"));
                    }
                }
                None => {
                    if self.free_pos[id as usize] == NO_POS {
                        return Err(format!("free slot {id} missing from free pool"));
                    }
                    if self.sku_of[id as usize].is_some() {
                        return Err(format!("free slot {id} has a sku"));
                    }
                }
            }
            if self.pending[id as usize] && self.occupant[id as usize].is_some() {
                return Err(format!("occupied slot {id} marked pending"));
            }
        }
        if stored != self.stored {
            return Err(format!("stored count {} vs map {}", self.stored, stored));
        }
        let indexed: usize = self.by_sku.values().map(|s| s.len()).sum();
        if indexed != stored {
            return Err(format!("sku index holds {indexed} slots, map {stored}"));
        }
        let _ = layout;
        Ok(())
    }
}

/// Pick a storage slot for an arriving pallet under `policy`.
pub fn assign_slot<R: Rng>(
    policy: PolicyKind,
    pallet: &Pallet,
    inv: &InventoryState,
    layout: &Layout,
    params: &PolicyParams,
    rng: &mut R,
) -> Result<SlotId, SimError> {
    debug_assert!(policy.compatible_with(layout.kind));
    if policy.randomized() {
        return assign_random(pallet, inv, layout, rng);
    }
    match policy {
        PolicyKind::ClassDistance | PolicyKind::FlyingVAbc => {
            let band = band_of_class(pallet.sku_class) as usize;
            if let Some(id) =
                first_admissible_level(inv, layout, &inv.free_band_level[band], pallet.collars)
            {
                return Ok(id);
            }
            // Band exhausted: nearest free slot anywhere.
            first_admissible_dist(inv, layout, &inv.free_dist, pallet.collars).ok_or_else(|| {
                SimError::StorageFull {
                    class: pallet.sku_class.letter(),
                    zone: format!("band {}", pallet.sku_class.letter()),
                }
            })
        }
        PolicyKind::CpuZone => {
            let tall = pallet.collars > params.p_zone_max_collars;
            let outcome = match (pallet.sku_class, tall) {
                (SkuClass::A, false) => {
                    assign_zones(inv, layout, pallet.collars, &[Zone::P, Zone::S], 0)
                }
                // Tall A pallets skip ground-level P: upper S levels or E.
                (SkuClass::A, true) => {
                    assign_zones(inv, layout, pallet.collars, &[Zone::S, Zone::E], 1)
                        .or_else(|| assign_zones(inv, layout, pallet.collars, &[Zone::S], 0))
                }
                (SkuClass::B, _) => assign_zones(inv, layout, pallet.collars, &[Zone::S], 0),
                (SkuClass::C, _) => {
                    assign_zones(inv, layout, pallet.collars, &[Zone::E, Zone::S], 0)
                }
            };
            if let Some(id) = outcome {
                return Ok(id);
            }
            // Final fallback: any admissible slot, nearest first, except
            // that tall pallets never land in ground-level P.
            let fallback = inv.free_dist.iter().map(|&(_, _, id)| id).find(|&id| {
                inv.admissible(layout, id, pallet.collars)
                    && !(tall && layout.slot(id).zone == Zone::P)
            });
            fallback.ok_or(SimError::StorageFull {
                class: pallet.sku_class.letter(),
                zone: "any".to_string(),
            })
        }
        PolicyKind::Random | PolicyKind::FlyingVRandom => unreachable!(),
    }
}

fn assign_random<R: Rng>(
    pallet: &Pallet,
    inv: &InventoryState,
    layout: &Layout,
    rng: &mut R,
) -> Result<SlotId, SimError> {
    if !inv.free_pool.is_empty() {
        // Rejection sampling stays uniform over admissible slots; fall back
        // to an exact enumeration if the admissible fraction is tiny.
        for _ in 0..64 {
            let id = inv.free_pool[rng.gen_range(0..inv.free_pool.len())];
            if inv.admissible(layout, id, pallet.collars) {
                return Ok(id);
            }
        }
        let mut admissible: Vec<SlotId> = inv
            .free_pool
            .iter()
            .copied()
            .filter(|&id| inv.admissible(layout, id, pallet.collars))
            .collect();
        admissible.sort_unstable();
        if !admissible.is_empty() {
            return Ok(admissible[rng.gen_range(0..admissible.len())]);
        }
    }
    Err(SimError::StorageFull {
        class: pallet.sku_class.letter(),
        zone: "any".to_string(),
    })
}

fn first_admissible_level(
    inv: &InventoryState,
    layout: &Layout,
    set: &BTreeSet<(u8, u64, SlotId)>,
    collars: u8,
) -> Option<SlotId> {
    set.iter()
        .map(|&(_, _, id)| id)
        .find(|&id| inv.admissible(layout, id, collars))
}

fn first_admissible_dist(
    inv: &InventoryState,
    layout: &Layout,
    set: &BTreeSet<(u64, u8, SlotId)>,
    collars: u8,
) -> Option<SlotId> {
    set.iter()
        .map(|&(_, _, id)| id)
        .find(|&id| inv.admissible(layout, id, collars))
}

fn assign_zones(
    inv: &InventoryState,
    layout: &Layout,
    collars: u8,
    zones: &[Zone],
    min_level: u8,
) -> Option<SlotId> {
    for zone in zones {
        let found = inv.free_zone_level[zone_index(*zone)]
            .iter()
            .filter(|&&(level, _, _)| level >= min_level)
            .map(|&(_, _, id)| id)
            .find(|&id| inv.admissible(layout, id, collars));
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Outcome of choosing a physical pallet for an order line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectOutcome {
    /// Unblocked pallet, retrievable directly.
    Ready(SlotId),
    /// Only rear pallets behind occupied fronts remain; this is the nearest.
    /// The front must be relocated first.
    Blocked(SlotId),
    /// Stored pallets exist, but every candidate is claimed (or sits behind
    /// a claimed front); retry when claims resolve.
    Busy,
    /// Nothing of this SKU is stored.
    OutOfStock,
}

/// Choose the stored pallet of `sku` nearest to `truck_node` by nav
/// distance, preferring unblocked candidates.
pub fn select_pallet_for_line(
    sku: SkuId,
    inv: &InventoryState,
    layout: &Layout,
    matrix: &TravelMatrix,
    truck_node: NodeId,
) -> SelectOutcome {
    let mut best_ready: Option<(u64, SlotId)> = None;
    let mut best_blocked: Option<(u64, SlotId)> = None;
    let mut any = false;
    for id in inv.slots_of_sku(sku) {
        any = true;
        if inv.is_claimed(id) {
            continue;
        }
        let slot = layout.slot(id);
        let key = (
            (matrix.meters(truck_node, slot.access_node) * 1000.0).round() as u64,
            id,
        );
        if !inv.is_blocked(layout, id) {
            if best_ready.map_or(true, |b| key < b) {
                best_ready = Some(key);
            }
        } else {
            let front = slot.pair.expect("blocked slot without a pair");
            if inv.is_claimed(front) {
                continue;
            }
            if best_blocked.map_or(true, |b| key < b) {
                best_blocked = Some(key);
            }
        }
    }
    if let Some((_, id)) = best_ready {
        SelectOutcome::Ready(id)
    } else if let Some((_, id)) = best_blocked {
        SelectOutcome::Blocked(id)
    } else if any {
        SelectOutcome::Busy
    } else {
        SelectOutcome::OutOfStock
    }
}

/// Nearest admissible slot for relocating the pallet at `from_slot`,
/// restricted to the source slot's zone when `same_zone_only` is set.
pub fn relocation_target(
    inv: &InventoryState,
    layout: &Layout,
    matrix: &TravelMatrix,
    from_slot: SlotId,
    collars: u8,
    same_zone_only: bool,
) -> Option<SlotId> {
    let from = layout.slot(from_slot);
    let zone = from.zone;
    let mut best: Option<(u64, SlotId)> = None;
    for &id in &inv.free_pool {
        if id == from_slot {
            continue;
        }
        let slot = layout.slot(id);
        if same_zone_only && slot.zone != zone {
            continue;
        }
        // Never relocate into the rear of the pair being unblocked.
        if from.pair == Some(id) {
            continue;
        }
        if !inv.admissible(layout, id, collars) {
            continue;
        }
        let key = (
            (matrix.meters(from.access_node, slot.access_node) * 1000.0).round() as u64,
            id,
        );
        if best.map_or(true, |b| key < b) {
            best = Some(key);
        }
    }
    best.map(|(_, id)| id)
}
