//! Shortest paths with vehicle constraints.
//!
//! Costs are seconds: edge length / travel speed, plus a fixed penalty per
//! heading change of >= 45 degrees. The search runs over (node, incoming
//! heading) states so turn costs are exact, and ties break deterministically
//! by (cost bits, node, heading).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::graph::{NavGraph, NodeId};
use super::VehicleProfile;
use crate::error::SimError;
use crate::geom::mm_to_m;

/// A concrete route through the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub nodes: Vec<NodeId>,
    pub length_mm: f64,
    pub turns: u32,
}

impl Route {
    pub fn empty_at(node: NodeId) -> Self {
        Route {
            nodes: vec![node],
            length_mm: 0.0,
            turns: 0,
        }
    }

    pub fn length_m(&self) -> f64 {
        mm_to_m(self.length_mm)
    }

    /// Seconds to drive the route: length/speed + turns * penalty.
    pub fn traversal_seconds(&self, vehicle: &VehicleProfile) -> f64 {
        self.length_m() / vehicle.travel_speed_mps + self.turns as f64 * vehicle.turn_penalty_s
    }
}

/// f64 cost ordered through its IEEE bits; valid for non-negative finite costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct CostBits(u64);

impl CostBits {
    fn of(cost: f64) -> Self {
        debug_assert!(cost >= 0.0 && cost.is_finite());
        CostBits(cost.to_bits())
    }
}

const NO_HEADING: u8 = u8::MAX;

struct SearchResult {
    /// Best cost per (node, heading) state.
    dist: Vec<f64>,
    /// Parent state index per state, usize::MAX when unset.
    parent: Vec<usize>,
    lanes: usize,
}

impl SearchResult {
    fn state(&self, node: NodeId, heading: u8) -> usize {
        node as usize * self.lanes + if heading == NO_HEADING { 0 } else { heading as usize + 1 }
    }

    /// Minimum cost into `node` over all arrival headings; ties prefer the
    /// smaller heading index so path reconstruction is deterministic.
    fn best_state_at(&self, node: NodeId) -> Option<(usize, f64)> {
        let base = node as usize * self.lanes;
        let mut best: Option<(usize, f64)> = None;
        for lane in 0..self.lanes {
            let d = self.dist[base + lane];
            if d.is_finite() && best.map_or(true, |(_, bd)| d < bd) {
                best = Some((base + lane, d));
            }
        }
        best
    }
}

/// Dijkstra over (node, heading) states from `from` with no initial heading.
fn search(graph: &NavGraph, from: NodeId, vehicle: &VehicleProfile) -> SearchResult {
    let lanes = graph.direction_count() + 1;
    let n_states = graph.node_count() * lanes;
    let mut result = SearchResult {
        dist: vec![f64::INFINITY; n_states],
        parent: vec![usize::MAX; n_states],
        lanes,
    };
    let start = result.state(from, NO_HEADING);
    result.dist[start] = 0.0;
    // Entries: (cost, node, heading-lane) — the latter two stabilize pop order.
    let mut heap: BinaryHeap<Reverse<(CostBits, NodeId, u8)>> = BinaryHeap::new();
    heap.push(Reverse((CostBits::of(0.0), from, NO_HEADING)));
    while let Some(Reverse((cost_bits, node, heading))) = heap.pop() {
        let state = result.state(node, heading);
        let cost = f64::from_bits(cost_bits.0);
        if cost > result.dist[state] {
            continue;
        }
        for edge in graph.neighbors(node) {
            if edge.width_mm < vehicle.min_aisle_width_mm {
                continue;
            }
            let mut step = mm_to_m(edge.length_mm) / vehicle.travel_speed_mps;
            if heading != NO_HEADING && graph.is_turn(heading, edge.dir) {
                step += vehicle.turn_penalty_s;
            }
            let next_cost = cost + step;
            let next_state = result.state(edge.to, edge.dir);
            if next_cost < result.dist[next_state] {
                result.dist[next_state] = next_cost;
                result.parent[next_state] = state;
                heap.push(Reverse((CostBits::of(next_cost), edge.to, edge.dir)));
            }
        }
    }
    result
}

/// Minimum-cost route between two nodes, or `Unreachable`.
pub fn shortest_path(
    graph: &NavGraph,
    from: NodeId,
    to: NodeId,
    vehicle: &VehicleProfile,
) -> Result<Route, SimError> {
    if from == to {
        return Ok(Route::empty_at(from));
    }
    let result = search(graph, from, vehicle);
    let (mut state, _) = result
        .best_state_at(to)
        .ok_or(SimError::Unreachable { from, to })?;
    let mut nodes = Vec::new();
    loop {
        nodes.push((state / result.lanes) as NodeId);
        let parent = result.parent[state];
        if parent == usize::MAX {
            break;
        }
        state = parent;
    }
    nodes.reverse();
    Ok(route_from_nodes(graph, &nodes))
}

/// Assemble a `Route` (length, turn count) from an explicit node sequence.
pub fn route_from_nodes(graph: &NavGraph, nodes: &[NodeId]) -> Route {
    let mut length_mm = 0.0;
    let mut turns = 0u32;
    let mut prev_dir: Option<u8> = None;
    for pair in nodes.windows(2) {
        let edge = graph
            .neighbors(pair[0])
            .iter()
            .find(|e| e.to == pair[1])
            .expect("route references a missing edge");
        length_mm += edge.length_mm;
        if let Some(d) = prev_dir {
            if graph.is_turn(d, edge.dir) {
                turns += 1;
            }
        }
        prev_dir = Some(edge.dir);
    }
    Route {
        nodes: nodes.to_vec(),
        length_mm,
        turns,
    }
}

/// Single-source costs in seconds (min over arrival headings).
pub fn one_to_all_seconds(graph: &NavGraph, from: NodeId, vehicle: &VehicleProfile) -> Vec<f64> {
    let result = search(graph, from, vehicle);
    (0..graph.node_count() as NodeId)
        .map(|n| result.best_state_at(n).map_or(f64::INFINITY, |(_, d)| d))
        .collect()
}

/// Single-source plain shortest distances in meters (no turn penalties),
/// restricted to edges the vehicle fits through.
pub fn one_to_all_meters(graph: &NavGraph, from: NodeId, vehicle: &VehicleProfile) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.node_count()];
    dist[from as usize] = 0.0;
    let mut heap: BinaryHeap<Reverse<(CostBits, NodeId)>> = BinaryHeap::new();
    heap.push(Reverse((CostBits::of(0.0), from)));
    while let Some(Reverse((cost_bits, node))) = heap.pop() {
        let cost = f64::from_bits(cost_bits.0);
        if cost > dist[node as usize] {
            continue;
        }
        for edge in graph.neighbors(node) {
            if edge.width_mm < vehicle.min_aisle_width_mm {
                continue;
            }
            let next = cost + mm_to_m(edge.length_mm);
            if next < dist[edge.to as usize] {
                dist[edge.to as usize] = next;
                heap.push(Reverse((CostBits::of(next), edge.to)));
            }
        }
    }
    dist
}

/// Dense all-pairs travel tables for one (layout, vehicle) pair. Built once
/// per scenario and shared read-only across replications.
#[derive(Debug, Clone)]
pub struct TravelMatrix {
    n: usize,
    seconds: Vec<f64>,
    meters: Vec<f64>,
}

impl TravelMatrix {
    pub fn build(graph: &NavGraph, vehicle: &VehicleProfile) -> Self {
        let n = graph.node_count();
        let mut seconds = Vec::with_capacity(n * n);
        let mut meters = Vec::with_capacity(n * n);
        for from in 0..n as NodeId {
            seconds.extend(one_to_all_seconds(graph, from, vehicle));
            meters.extend(one_to_all_meters(graph, from, vehicle));
        }
        TravelMatrix { n, seconds, meters }
    }

    pub fn seconds(&self, from: NodeId, to: NodeId) -> f64 {
        self.seconds[from as usize * self.n + to as usize]
    }

    pub fn meters(&self, from: NodeId, to: NodeId) -> f64 {
        self.meters[from as usize * self.n + to as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::PointMm;
    use crate::routing::graph::GraphBuilder;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn vehicle(speed: f64, turn: f64) -> VehicleProfile {
        VehicleProfile {
            travel_speed_mps: speed,
            turn_penalty_s: turn,
            min_aisle_width_mm: 0,
            ..VehicleProfile::default()
        }
    }

    fn corridor(n: usize, spacing_mm: i64) -> NavGraph {
        let mut b = GraphBuilder::new();
        for i in 0..n {
            b.add_node(PointMm::new(i as i64 * spacing_mm, 0));
        }
        for i in 0..n - 1 {
            b.add_edge(i as NodeId, (i + 1) as NodeId, 3200);
        }
        b.build()
    }

    #[test]
    fn straight_corridor_has_no_turns() {
        let g = corridor(10, 1000);
        let r = shortest_path(&g, 0, 9, &vehicle(2.0, 3.0)).unwrap();
        assert_eq!(r.nodes.len(), 10);
        assert!((r.length_mm - 9000.0).abs() < 1e-9);
        assert_eq!(r.turns, 0);
        assert!((r.traversal_seconds(&vehicle(2.0, 3.0)) - 4.5).abs() < 1e-9);
    }

    #[test]
    fn identity_route_is_empty() {
        let g = corridor(3, 1000);
        let r = shortest_path(&g, 1, 1, &vehicle(2.0, 3.0)).unwrap();
        assert_eq!(r.nodes, vec![1]);
        assert_eq!(r.length_mm, 0.0);
        assert_eq!(r.turns, 0);
    }

    #[test]
    fn unreachable_reports_error() {
        let mut b = GraphBuilder::new();
        b.add_node(PointMm::new(0, 0));
        b.add_node(PointMm::new(1000, 0));
        let g = b.build();
        assert!(matches!(
            shortest_path(&g, 0, 1, &vehicle(2.0, 0.0)),
            Err(SimError::Unreachable { from: 0, to: 1 })
        ));
    }

    /// Random connected geometric graph for oracle comparisons.
    fn random_graph(n: usize, seed: u64) -> NavGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = GraphBuilder::new();
        let mut points = Vec::new();
        for _ in 0..n {
            loop {
                let p = PointMm::new(rng.gen_range(0..50_000), rng.gen_range(0..50_000));
                if !points.contains(&p) {
                    points.push(p);
                    b.add_node(p);
                    break;
                }
            }
        }
        // Spanning chain keeps it connected, then extra random edges.
        for i in 1..n {
            b.add_edge((i - 1) as NodeId, i as NodeId, 3200);
        }
        let mut present: Vec<(NodeId, NodeId)> =
            (1..n).map(|i| ((i - 1) as NodeId, i as NodeId)).collect();
        for _ in 0..n * 2 {
            let a = rng.gen_range(0..n) as NodeId;
            let c = rng.gen_range(0..n) as NodeId;
            let key = (a.min(c), a.max(c));
            if a != c && !present.contains(&key) {
                present.push(key);
                b.add_edge(a, c, 3200);
            }
        }
        b.build()
    }

    /// Reference Dijkstra without turn penalties: O(n^2), cost in seconds.
    fn oracle_seconds(graph: &NavGraph, from: NodeId, speed: f64) -> Vec<f64> {
        let n = graph.node_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        dist[from as usize] = 0.0;
        for _ in 0..n {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for i in 0..n {
                if !done[i] && dist[i] < best {
                    best = dist[i];
                    u = i;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            for e in graph.neighbors(u as NodeId) {
                let alt = dist[u] + mm_to_m(e.length_mm) / speed;
                if alt < dist[e.to as usize] {
                    dist[e.to as usize] = alt;
                }
            }
        }
        dist
    }

    #[test]
    fn matches_dijkstra_oracle_without_turn_penalties() {
        let g = random_graph(50, 11);
        let v = vehicle(2.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let a = rng.gen_range(0..50) as NodeId;
            let c = rng.gen_range(0..50) as NodeId;
            let expected = oracle_seconds(&g, a, 2.0)[c as usize];
            let got = if a == c {
                0.0
            } else {
                shortest_path(&g, a, c, &v).unwrap().traversal_seconds(&v)
            };
            assert!(
                (got - expected).abs() < 1e-9,
                "pair ({a},{c}): got {got}, oracle {expected}"
            );
        }
    }

    /// Exhaustive minimum over walks that never repeat a (node, heading)
    /// state — the same search space as the turn-aware Dijkstra.
    fn enumerate_min_cost(
        graph: &NavGraph,
        node: NodeId,
        heading: Option<u8>,
        to: NodeId,
        vehicle: &VehicleProfile,
        visited: &mut Vec<(NodeId, Option<u8>)>,
    ) -> f64 {
        if node == to {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for e in graph.neighbors(node) {
            if e.width_mm < vehicle.min_aisle_width_mm {
                continue;
            }
            let state = (e.to, Some(e.dir));
            if visited.contains(&state) {
                continue;
            }
            let mut step = mm_to_m(e.length_mm) / vehicle.travel_speed_mps;
            if let Some(h) = heading {
                if graph.is_turn(h, e.dir) {
                    step += vehicle.turn_penalty_s;
                }
            }
            visited.push(state);
            let rest = enumerate_min_cost(graph, e.to, Some(e.dir), to, vehicle, visited);
            visited.pop();
            if step + rest < best {
                best = step + rest;
            }
        }
        best
    }

    #[test]
    fn turn_penalty_mode_matches_exhaustive_enumeration() {
        let v = vehicle(1.0, 5.0);
        for seed in 0..6u64 {
            let g = random_graph(8, 100 + seed);
            for a in 0..8u32 {
                for c in 0..8u32 {
                    if a == c {
                        continue;
                    }
                    let expected =
                        enumerate_min_cost(&g, a, None, c, &v, &mut vec![(a, None)]);
                    let got = shortest_path(&g, a, c, &v)
                        .unwrap()
                        .traversal_seconds(&v);
                    assert!(
                        (got - expected).abs() < 1e-9,
                        "seed {seed} pair ({a},{c}): got {got}, enum {expected}"
                    );
                }
            }
        }
    }

    #[test]
    fn triangle_property_over_sampled_triples() {
        let g = random_graph(30, 21);
        let v = vehicle(1.5, 4.0);
        let m = TravelMatrix::build(&g, &v);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let a = rng.gen_range(0..30) as NodeId;
            let b = rng.gen_range(0..30) as NodeId;
            let c = rng.gen_range(0..30) as NodeId;
            assert!(m.seconds(a, c) <= m.seconds(a, b) + m.seconds(b, c) + 1e-9);
        }
    }

    #[test]
    fn matrix_agrees_with_point_queries() {
        let g = random_graph(20, 33);
        let v = vehicle(2.0, 3.0);
        let m = TravelMatrix::build(&g, &v);
        for a in 0..20u32 {
            for c in 0..20u32 {
                let direct = if a == c {
                    0.0
                } else {
                    shortest_path(&g, a, c, &v).unwrap().traversal_seconds(&v)
                };
                assert!((m.seconds(a, c) - direct).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn route_is_deterministic() {
        let g = random_graph(40, 55);
        let v = vehicle(1.0, 2.0);
        for _ in 0..3 {
            let r1 = shortest_path(&g, 0, 39, &v).unwrap();
            let r2 = shortest_path(&g, 0, 39, &v).unwrap();
            assert_eq!(r1, r2);
        }
    }
}
