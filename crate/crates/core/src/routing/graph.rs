//! Navigation graph: nodes at aisle/cross-aisle coordinates, undirected
//! edges carrying exact lengths and a width class for vehicle admissibility.

use crate::geom::PointMm;
use serde::{Deserialize, Serialize};

pub type NodeId = u32;

/// Outgoing half-edge stored in the adjacency list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfEdge {
    pub to: NodeId,
    pub length_mm: f64,
    /// Narrowest passage along the edge; vehicles needing more cannot use it.
    pub width_mm: u32,
    /// Index into the graph's direction table (travel direction of this half-edge).
    pub dir: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NavGraph {
    positions: Vec<PointMm>,
    adjacency: Vec<Vec<HalfEdge>>,
    /// Normalized integer direction vectors; `HalfEdge::dir` indexes here.
    directions: Vec<(i64, i64)>,
    /// `turn[a][b]` is true when switching heading a -> b is a turn (>= 45 deg).
    turn_table: Vec<bool>,
}

impl NavGraph {
    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn position(&self, node: NodeId) -> PointMm {
        self.positions[node as usize]
    }

    pub fn neighbors(&self, node: NodeId) -> &[HalfEdge] {
        &self.adjacency[node as usize]
    }

    pub fn direction_count(&self) -> usize {
        self.directions.len()
    }

    /// Whether changing heading from direction index `a` to `b` costs a turn.
    pub fn is_turn(&self, a: u8, b: u8) -> bool {
        self.turn_table[a as usize * self.directions.len() + b as usize]
    }

    /// Edge count (each undirected edge counted once).
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    /// True when every node can reach every other over edges at least
    /// `min_width_mm` wide.
    pub fn connected_for_width(&self, min_width_mm: u32) -> bool {
        if self.positions.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.positions.len()];
        let mut stack = vec![0 as NodeId];
        seen[0] = true;
        let mut count = 1usize;
        while let Some(n) = stack.pop() {
            for e in self.neighbors(n) {
                if e.width_mm >= min_width_mm && !seen[e.to as usize] {
                    seen[e.to as usize] = true;
                    count += 1;
                    stack.push(e.to);
                }
            }
        }
        count == self.positions.len()
    }
}

/// Incremental graph construction; lengths and direction classes are
/// derived from node coordinates when `build` runs.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    positions: Vec<PointMm>,
    edges: Vec<(NodeId, NodeId, u32)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, pos: PointMm) -> NodeId {
        self.positions.push(pos);
        (self.positions.len() - 1) as NodeId
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn position(&self, node: NodeId) -> PointMm {
        self.positions[node as usize]
    }

    /// Undirected edge with a width class. Zero-length edges are rejected.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId, width_mm: u32) {
        assert_ne!(a, b, "self-loop edge");
        assert_ne!(
            self.positions[a as usize], self.positions[b as usize],
            "zero-length edge between coincident nodes"
        );
        self.edges.push((a, b, width_mm));
    }

    pub fn build(self) -> NavGraph {
        let mut directions: Vec<(i64, i64)> = Vec::new();
        let mut dir_index = |dx: i64, dy: i64| -> u8 {
            let g = gcd(dx.unsigned_abs(), dy.unsigned_abs()).max(1) as i64;
            let d = (dx / g, dy / g);
            if let Some(i) = directions.iter().position(|&x| x == d) {
                i as u8
            } else {
                directions.push(d);
                (directions.len() - 1) as u8
            }
        };
        let mut adjacency = vec![Vec::new(); self.positions.len()];
        for (a, b, width) in &self.edges {
            let pa = self.positions[*a as usize];
            let pb = self.positions[*b as usize];
            let length_mm = pa.distance_mm(&pb);
            let dir_ab = dir_index(pb.x - pa.x, pb.y - pa.y);
            let dir_ba = dir_index(pa.x - pb.x, pa.y - pb.y);
            adjacency[*a as usize].push(HalfEdge {
                to: *b,
                length_mm,
                width_mm: *width,
                dir: dir_ab,
            });
            adjacency[*b as usize].push(HalfEdge {
                to: *a,
                length_mm,
                width_mm: *width,
                dir: dir_ba,
            });
        }
        // Deterministic neighbor order regardless of insertion order.
        for list in &mut adjacency {
            list.sort_by_key(|e| (e.to, e.dir));
        }
        let n_dirs = directions.len();
        let mut turn_table = vec![false; n_dirs * n_dirs];
        for (i, &a) in directions.iter().enumerate() {
            for (j, &b) in directions.iter().enumerate() {
                turn_table[i * n_dirs + j] = is_turn_exact(a, b);
            }
        }
        NavGraph {
            positions: self.positions,
            adjacency,
            directions,
            turn_table,
        }
    }
}

/// Heading change of at least 45 degrees, decided in exact integer
/// arithmetic: turn iff NOT (dot > 0 and 2*dot^2 > |a|^2*|b|^2).
fn is_turn_exact(a: (i64, i64), b: (i64, i64)) -> bool {
    let dot = (a.0 * b.0 + a.1 * b.1) as i128;
    if dot <= 0 {
        return true;
    }
    let a2 = (a.0 * a.0 + a.1 * a.1) as i128;
    let b2 = (b.0 * b.0 + b.1 * b.1) as i128;
    2 * dot * dot <= a2 * b2
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
