//! Layout construction: slots, zones, staging points, nav graphs, and
//! footprint geometry for each layout variant.

mod build;
pub mod svg;

pub use build::{build_conventional, build_cpu, build_current, build_flying_v};

use crate::error::ConfigError;
use crate::geom::{PointMm, RectMm};
use crate::routing::{NavGraph, NodeId};
use serde::{Deserialize, Serialize};

pub type SlotId = u32;

/// Storage zone of a slot in the tri-zonal design; other layouts leave
/// slots `Unzoned` (class policies band by distance instead).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    P,
    E,
    S,
    Unzoned,
}

/// One pallet position. `depth_index` 1 is the rear half of a double-deep
/// pair and is blocked while the front (`depth_index` 0) is occupied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub id: SlotId,
    /// Pick-face coordinates: x at the rack face on the aisle side, y at the
    /// bay center. Lies exactly half an aisle from the access node.
    pub position: PointMm,
    pub level: u8,
    pub depth_index: u8,
    pub zone: Zone,
    pub max_collars: u8,
    pub access_node: NodeId,
    /// The slot at the other depth of the same bay/level, if present.
    pub pair: Option<SlotId>,
    /// Physical cell footprint (used for rendering and corridor carving).
    pub cell: RectMm,
}

/// Geometric parameters for one layout variant.
///
/// A bay is one pallet position (1.4 m pitch); two bays give the usual
/// 2.8 m "two Euro pallets plus clearance" module. Rows pair back-to-back
/// around aisles: rows 2a and 2a+1 face aisle a.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutSpec {
    pub aisle_width_mm: u32,
    /// Wide aisles used in the P-heavy central band of the tri-zonal layout.
    pub wide_aisle_width_mm: u32,
    /// Narrow aisles of the high-density E band.
    pub dense_aisle_width_mm: u32,
    /// Depth of one pallet position; a double-deep rack is twice this.
    pub rack_depth_mm: u32,
    pub bay_width_mm: u32,
    pub levels: u8,
    /// Rack rows; ceil(rows/2) aisles serve them in back-to-back pairs.
    pub rows: u32,
    pub bays_per_row: u32,
    pub level_height_m: f64,
    pub bottom_cross_aisle_mm: u32,
    pub top_cross_aisle_mm: u32,
    /// Tri-zonal slot-count fractions (P, E, S); must sum to 1.
    pub zone_fractions: ZoneFractions,
    /// Fraction of central aisles built wide / outer aisles built dense
    /// in the tri-zonal layout.
    pub wide_aisle_fraction: f64,
    pub dense_aisle_fraction: f64,
    /// Flying-V cross-aisle angle from horizontal, degrees in (0, 90].
    pub diagonal_angle_deg: f64,
    /// Width of the V corridor carved through the racks.
    pub v_corridor_width_mm: u32,
    pub target_slot_count: u32,
}

impl Default for LayoutSpec {
    fn default() -> Self {
        LayoutSpec {
            aisle_width_mm: 3200,
            wide_aisle_width_mm: 4000,
            dense_aisle_width_mm: 3000,
            rack_depth_mm: 1200,
            bay_width_mm: 1400,
            levels: 4,
            rows: 18,
            bays_per_row: 34,
            level_height_m: 1.5,
            bottom_cross_aisle_mm: 4000,
            top_cross_aisle_mm: 3200,
            zone_fractions: ZoneFractions::default(),
            wide_aisle_fraction: 0.4,
            dense_aisle_fraction: 0.3,
            diagonal_angle_deg: 45.0,
            v_corridor_width_mm: 4000,
            target_slot_count: 4800,
        }
    }
}

impl LayoutSpec {
    /// Slot count of the plain grid before any variant-specific carving.
    pub fn grid_slot_count(&self) -> u32 {
        self.rows * self.bays_per_row * self.levels as u32 * 2
    }

    pub fn aisle_count(&self) -> u32 {
        self.rows.div_ceil(2)
    }

    pub fn validate(&self, key: &str) -> Result<(), ConfigError> {
        if self.rows == 0 || self.bays_per_row == 0 || self.levels == 0 {
            return Err(ConfigError::invalid(
                key,
                "rows, bays_per_row and levels must all be at least 1",
            ));
        }
        if self.levels as u32 > 8 {
            return Err(ConfigError::invalid(
                format!("{key}.levels"),
                "more than 8 rack levels is outside the modeled range",
            ));
        }
        if self.bay_width_mm == 0 || self.rack_depth_mm == 0 {
            return Err(ConfigError::invalid(
                key,
                "bay_width_mm and rack_depth_mm must be positive",
            ));
        }
        if !(self.diagonal_angle_deg > 0.0 && self.diagonal_angle_deg <= 90.0) {
            return Err(ConfigError::invalid(
                format!("{key}.diagonal_angle_deg"),
                format!("angle {} outside (0, 90]", self.diagonal_angle_deg),
            ));
        }
        if !(self.level_height_m > 0.0) {
            return Err(ConfigError::invalid(
                format!("{key}.level_height_m"),
                "level height must be positive",
            ));
        }
        if self.grid_slot_count() < self.target_slot_count {
            return Err(ConfigError::invalid(
                format!("{key}.target_slot_count"),
                format!(
                    "spec derives {} slots, fewer than target {}",
                    self.grid_slot_count(),
                    self.target_slot_count
                ),
            ));
        }
        self.zone_fractions.validate(&format!("{key}.zone_fractions"))?;
        Ok(())
    }
}

/// P/E/S slot-count fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneFractions {
    pub p: f64,
    pub e: f64,
    pub s: f64,
}

impl Default for ZoneFractions {
    fn default() -> Self {
        ZoneFractions { p: 0.20, e: 0.50, s: 0.30 }
    }
}

impl ZoneFractions {
    pub fn validate(&self, key: &str) -> Result<(), ConfigError> {
        if self.p < 0.0 || self.e < 0.0 || self.s < 0.0 {
            return Err(ConfigError::invalid(key, "zone fractions must be nonnegative"));
        }
        let sum = self.p + self.e + self.s;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::invalid(
                key,
                format!("zone fractions sum to {sum}, expected 1"),
            ));
        }
        Ok(())
    }
}

/// Which generator produced a layout; storage policies check compatibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    Conventional,
    FlyingV,
    Cpu,
    /// The legacy warehouse: conventional geometry with its own dimensions.
    Current,
}

/// A fully built, immutable layout variant.
#[derive(Debug, Clone)]
pub struct Layout {
    pub name: String,
    pub kind: LayoutKind,
    pub slots: Vec<Slot>,
    pub graph: NavGraph,
    pub inbound_staging: NodeId,
    pub outbound_staging: NodeId,
    /// Racks plus interior aisles; staging lies outside, below y = 0.
    pub footprint: RectMm,
    pub zone_fractions: ZoneFractions,
    pub level_height_m: f64,
    /// Memoized nav distance in meters from each slot's access node to
    /// outbound staging.
    dist_to_outbound_m: Vec<f64>,
}

impl Layout {
    pub(crate) fn new(
        name: String,
        kind: LayoutKind,
        slots: Vec<Slot>,
        graph: NavGraph,
        inbound_staging: NodeId,
        outbound_staging: NodeId,
        footprint: RectMm,
        zone_fractions: ZoneFractions,
        level_height_m: f64,
    ) -> Self {
        // Any-width Dijkstra from outbound staging backs the per-slot memo.
        let all = crate::routing::one_to_all_meters(
            &graph,
            outbound_staging,
            &crate::routing::VehicleProfile {
                min_aisle_width_mm: 0,
                ..Default::default()
            },
        );
        let dist_to_outbound_m = slots
            .iter()
            .map(|s| all[s.access_node as usize])
            .collect();
        Layout {
            name,
            kind,
            slots,
            graph,
            inbound_staging,
            outbound_staging,
            footprint,
            zone_fractions,
            level_height_m,
            dist_to_outbound_m,
        }
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn slot(&self, id: SlotId) -> &Slot {
        &self.slots[id as usize]
    }

    /// Memoized shortest nav distance (meters, no turn penalties) from the
    /// slot's access node to outbound staging.
    pub fn distance_rank(&self, slot: SlotId) -> f64 {
        self.dist_to_outbound_m[slot as usize]
    }

    pub fn ground_slot_count(&self) -> usize {
        self.slots.iter().filter(|s| s.level == 0).count()
    }

    pub fn zone_count(&self, zone: Zone) -> usize {
        self.slots.iter().filter(|s| s.zone == zone).count()
    }

    /// Shift the whole layout (slots, cells, graph, footprint) by a vector.
    pub fn translated(&self, dx_mm: i64, dy_mm: i64) -> Layout {
        let mut slots = self.slots.clone();
        for s in &mut slots {
            s.position = PointMm::new(s.position.x + dx_mm, s.position.y + dy_mm);
            s.cell = s.cell.translate(dx_mm, dy_mm);
        }
        let mut builder = crate::routing::GraphBuilder::new();
        for n in 0..self.graph.node_count() as NodeId {
            let p = self.graph.position(n);
            builder.add_node(PointMm::new(p.x + dx_mm, p.y + dy_mm));
        }
        for n in 0..self.graph.node_count() as NodeId {
            for e in self.graph.neighbors(n) {
                if e.to > n {
                    builder.add_edge(n, e.to, e.width_mm);
                }
            }
        }
        Layout::new(
            self.name.clone(),
            self.kind,
            slots,
            builder.build(),
            self.inbound_staging,
            self.outbound_staging,
            self.footprint.translate(dx_mm, dy_mm),
            self.zone_fractions,
            self.level_height_m,
        )
    }

    /// Geometry sanity used by tests: every slot's access node is within
    /// one aisle half-width (plus 1 mm slack) of the slot's pick face.
    pub fn max_access_offset_mm(&self) -> f64 {
        self.slots
            .iter()
            .map(|s| {
                self.graph
                    .position(s.access_node)
                    .distance_mm(&s.position)
            })
            .fold(0.0, f64::max)
    }
}

/// Floor area of the storage footprint (racks + interior aisles) in m².
/// Staging zones and approach lanes are excluded by construction.
pub fn compute_area(layout: &Layout) -> f64 {
    layout.footprint.area_m2()
}
