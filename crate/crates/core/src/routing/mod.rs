//! Vehicle model, shortest-path routing, and task sequencing rules.

pub mod graph;
pub mod path;

pub use graph::{GraphBuilder, HalfEdge, NavGraph, NodeId};
pub use path::{
    one_to_all_meters, one_to_all_seconds, route_from_nodes, shortest_path, Route, TravelMatrix,
};

use crate::error::SimError;
use crate::geom::PointMm;
use crate::model::PalletId;
use serde::{Deserialize, Serialize};

/// Reach-truck kinematics and handling constants.
///
/// These are the main calibration levers of the model; the shipped defaults
/// are tuned so the default scenarios land in the observed KPI ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleProfile {
    /// Horizontal travel speed, m/s.
    pub travel_speed_mps: f64,
    /// Fork lift/lower speed, m/s.
    pub lift_speed_mps: f64,
    /// Fixed seconds per heading change of >= 45 degrees.
    pub turn_penalty_s: f64,
    /// Narrowest aisle the vehicle may enter, mm.
    pub min_aisle_width_mm: u32,
    /// Collar units carried per trip; one pallet of k collars uses k units.
    pub capacity_collar_units: u32,
    /// Fixed seconds per pick or place at ground level.
    pub handling_s: f64,
    /// Additional pick/place seconds when the slot sits above ground level
    /// (fork alignment at height).
    pub elevated_extra_s: f64,
}

impl Default for VehicleProfile {
    fn default() -> Self {
        VehicleProfile {
            travel_speed_mps: 1.5,
            lift_speed_mps: 0.4,
            turn_penalty_s: 4.0,
            min_aisle_width_mm: 2800,
            capacity_collar_units: 9,
            handling_s: 32.0,
            elevated_extra_s: 10.0,
        }
    }
}

impl VehicleProfile {
    pub fn validate(&self, key: &str) -> Result<(), crate::error::ConfigError> {
        let positive = [
            ("travel_speed_mps", self.travel_speed_mps),
            ("lift_speed_mps", self.lift_speed_mps),
            ("handling_s", self.handling_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(crate::error::ConfigError::invalid(
                    format!("{key}.{name}"),
                    format!("must be strictly positive, got {v}"),
                ));
            }
        }
        if self.turn_penalty_s < 0.0 || self.elevated_extra_s < 0.0 {
            return Err(crate::error::ConfigError::invalid(
                format!("{key}.turn_penalty_s"),
                "penalties must be nonnegative",
            ));
        }
        if self.capacity_collar_units == 0 {
            return Err(crate::error::ConfigError::invalid(
                format!("{key}.capacity_collar_units"),
                "capacity must be at least 1 collar unit",
            ));
        }
        Ok(())
    }

    /// Seconds to raise and later lower the forks to `levels` rack levels.
    pub fn lift_seconds(&self, levels: u32, level_height_m: f64) -> f64 {
        2.0 * (levels as f64 * level_height_m / self.lift_speed_mps)
    }

    /// Pick or place handling seconds for a slot at `level`.
    pub fn handling_at_level_s(&self, level: u8) -> f64 {
        if level == 0 {
            self.handling_s
        } else {
            self.handling_s + self.elevated_extra_s
        }
    }
}

/// Door-to-door time for one delivery leg: drive the route, lift to the
/// slot level and back down, plus the profile's fixed handling block.
pub fn travel_time(
    route: &Route,
    vehicle: &VehicleProfile,
    lift_levels: u32,
    level_height_m: f64,
) -> f64 {
    route.traversal_seconds(vehicle)
        + vehicle.lift_seconds(lift_levels, level_height_m)
        + vehicle.handling_s
}

/// One pending inbound putaway with its destination coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InboundTask {
    pub pallet: PalletId,
    pub slot: u32,
    pub position: PointMm,
}

/// Order inbound putaways left-to-right: ascending destination x, then
/// ascending y, then slot id. Stable for pre-sorted input.
pub fn sequence_inbound_tasks(pending: &mut [InboundTask]) {
    pending.sort_by_key(|t| (t.position.x, t.position.y, t.slot));
}

/// Greedy choice of the next retrieval target: the candidate slot whose
/// access node costs least from `truck_node`, ties to the lowest slot id.
///
/// `candidates` pairs each remaining slot with its access node.
pub fn next_outbound_target(
    matrix: &TravelMatrix,
    truck_node: NodeId,
    candidates: &[(u32, NodeId)],
) -> Result<u32, SimError> {
    let mut best: Option<(f64, u32)> = None;
    for &(slot, node) in candidates {
        let cost = matrix.seconds(truck_node, node);
        if !cost.is_finite() {
            continue;
        }
        let better = match best {
            None => true,
            Some((bc, bs)) => cost < bc || (cost == bc && slot < bs),
        };
        if better {
            best = Some((cost, slot));
        }
    }
    best.map(|(_, s)| s).ok_or(SimError::Unreachable {
        from: truck_node,
        to: candidates.first().map(|c| c.1).unwrap_or(truck_node),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::graph::GraphBuilder;

    fn profile(speed: f64, turn: f64, handling: f64) -> VehicleProfile {
        VehicleProfile {
            travel_speed_mps: speed,
            turn_penalty_s: turn,
            handling_s: handling,
            lift_speed_mps: 0.5,
            min_aisle_width_mm: 0,
            ..VehicleProfile::default()
        }
    }

    #[test]
    fn travel_time_arithmetic() {
        let route = Route {
            nodes: vec![0, 1],
            length_mm: 30_000.0,
            turns: 0,
        };
        // 30 m at 2 m/s, no turns, no lift, no handling.
        assert!((travel_time(&route, &profile(2.0, 3.0, 0.0), 0, 1.5) - 15.0).abs() < 1e-9);
        // Same route with 2 turns at 3 s each.
        let turned = Route { turns: 2, ..route.clone() };
        assert!((travel_time(&turned, &profile(2.0, 3.0, 0.0), 0, 1.5) - 21.0).abs() < 1e-9);
        // Level-2 pickup at 1.5 m per level and 0.5 m/s lift adds 12 s.
        assert!((travel_time(&route, &profile(2.0, 3.0, 0.0), 2, 1.5) - 27.0).abs() < 1e-9);
    }

    #[test]
    fn travel_time_additive_over_concatenation() {
        // a -> b straight, then b -> c after a 90-degree junction: the
        // junction turn is counted exactly once in the concatenation.
        let mut b = GraphBuilder::new();
        let n0 = b.add_node(PointMm::new(0, 0));
        let n1 = b.add_node(PointMm::new(10_000, 0));
        let n2 = b.add_node(PointMm::new(10_000, 10_000));
        b.add_edge(n0, n1, 3200);
        b.add_edge(n1, n2, 3200);
        let g = b.build();
        let v = profile(2.0, 3.0, 0.0);
        let whole = shortest_path(&g, n0, n2, &v).unwrap();
        let first = shortest_path(&g, n0, n1, &v).unwrap();
        let second = shortest_path(&g, n1, n2, &v).unwrap();
        let junction_turn = 1.0 * v.turn_penalty_s;
        assert!(
            (whole.traversal_seconds(&v)
                - (first.traversal_seconds(&v) + second.traversal_seconds(&v) + junction_turn))
                .abs()
                < 1e-9
        );
    }

    #[test]
    fn inbound_sequence_left_to_right() {
        let mk = |pallet, slot, x| InboundTask {
            pallet,
            slot,
            position: PointMm::new(x, 0),
        };
        let mut tasks = vec![mk(1, 10, 30_000), mk(2, 11, 10_000), mk(3, 12, 20_000)];
        sequence_inbound_tasks(&mut tasks);
        let xs: Vec<i64> = tasks.iter().map(|t| t.position.x).collect();
        assert_eq!(xs, vec![10_000, 20_000, 30_000]);

        let mut single = vec![mk(9, 1, 5_000)];
        sequence_inbound_tasks(&mut single);
        assert_eq!(single[0].pallet, 9);

        let mut sorted = vec![mk(1, 1, 1000), mk(2, 2, 2000), mk(3, 3, 3000)];
        let before = sorted.clone();
        sequence_inbound_tasks(&mut sorted);
        assert_eq!(sorted, before);
    }

    #[test]
    fn inbound_sequence_breaks_ties_by_y_then_slot() {
        let mk = |slot, x, y| InboundTask {
            pallet: slot as u64,
            slot,
            position: PointMm::new(x, y),
        };
        let mut tasks = vec![mk(5, 1000, 9000), mk(3, 1000, 2000), mk(4, 1000, 2000)];
        sequence_inbound_tasks(&mut tasks);
        let slots: Vec<u32> = tasks.iter().map(|t| t.slot).collect();
        assert_eq!(slots, vec![3, 4, 5]);
    }

    fn line_matrix() -> (NavGraph, TravelMatrix) {
        let mut b = GraphBuilder::new();
        for i in 0..6 {
            b.add_node(PointMm::new(i * 10_000, 0));
        }
        for i in 0..5u32 {
            b.add_edge(i, i + 1, 3200);
        }
        let g = b.build();
        let m = TravelMatrix::build(&g, &profile(1.0, 0.0, 0.0));
        (g, m)
    }

    #[test]
    fn next_target_picks_minimum_cost() {
        let (_, m) = line_matrix();
        // Truck at node 0; targets at nodes 1 (10 s) and 3 (30 s).
        let got = next_outbound_target(&m, 0, &[(100, 3), (200, 1)]).unwrap();
        assert_eq!(got, 200);
    }

    #[test]
    fn next_target_equidistant_prefers_lower_slot_id() {
        let (_, m) = line_matrix();
        // Truck at node 2; nodes 1 and 3 both 10 s away.
        let got = next_outbound_target(&m, 2, &[(7, 3), (4, 1)]).unwrap();
        assert_eq!(got, 4);
    }

    #[test]
    fn greedy_sequence_never_worse_than_reverse_on_a_line() {
        let (_, m) = line_matrix();
        // Targets strung along the corridor; greedy from node 0.
        let targets: Vec<(u32, NodeId)> = vec![(1, 1), (2, 2), (3, 3), (4, 4), (5, 5)];
        let tour = |order: &[(u32, NodeId)]| -> f64 {
            let mut at = 0;
            let mut total = 0.0;
            for &(_, node) in order {
                total += m.seconds(at, node);
                at = node;
            }
            total
        };
        let mut remaining = targets.clone();
        let mut greedy_order = Vec::new();
        let mut at: NodeId = 0;
        while !remaining.is_empty() {
            let slot = next_outbound_target(&m, at, &remaining).unwrap();
            let idx = remaining.iter().position(|c| c.0 == slot).unwrap();
            let picked = remaining.remove(idx);
            at = picked.1;
            greedy_order.push(picked);
        }
        let mut reverse = targets.clone();
        reverse.reverse();
        assert!(tour(&greedy_order) <= tour(&reverse) + 1e-9);
    }
}
