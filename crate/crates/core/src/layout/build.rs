//! Generators for the layout variants.
//!
//! All variants share one rack-grid frame: vertical aisles, rack rows in
//! back-to-back pairs, a bottom cross-aisle carrying the staging approach
//! and a top cross-aisle closing the loop. The Flying-V variant carves a
//! V-shaped corridor toward outbound staging and extends rows to keep the
//! slot count equal; the tri-zonal variant varies aisle widths by band and
//! assigns P/E/S zones by distance.

use super::{Layout, LayoutKind, LayoutSpec, Slot, SlotId, Zone};
use crate::error::ConfigError;
use crate::geom::{segment_rect_distance_mm, PointMm, RectMm};
use crate::routing::{GraphBuilder, NavGraph, NodeId};

/// Approach lanes and dock area are open space.
const STAGING_LANE_WIDTH_MM: u32 = 10_000;
const STAGING_OFFSET_MM: i64 = 5_000;

struct Frame {
    n_aisles: u32,
    aisle_center_x: Vec<i64>,
    aisle_widths: Vec<u32>,
    width_mm: i64,
    height_mm: i64,
    bays: u32,
    /// Bay center y per bay index.
    bay_y: Vec<i64>,
    outbound_aisle: u32,
    inbound_aisle: u32,
}

impl Frame {
    fn new(spec: &LayoutSpec, aisle_widths: Vec<u32>, bays: u32) -> Frame {
        let n_aisles = spec.aisle_count();
        debug_assert_eq!(aisle_widths.len(), n_aisles as usize);
        let rack = 2 * spec.rack_depth_mm as i64;
        let mut x = 0i64;
        let mut centers = Vec::with_capacity(n_aisles as usize);
        for (a, w) in aisle_widths.iter().enumerate() {
            x += rack; // left-side rack of this aisle
            centers.push(x + *w as i64 / 2);
            x += *w as i64;
            let has_right_row = (2 * a + 1) < spec.rows as usize;
            if has_right_row {
                x += rack;
            }
        }
        let height = spec.bottom_cross_aisle_mm as i64
            + bays as i64 * spec.bay_width_mm as i64
            + spec.top_cross_aisle_mm as i64;
        let bay_y = (0..bays)
            .map(|j| {
                spec.bottom_cross_aisle_mm as i64
                    + j as i64 * spec.bay_width_mm as i64
                    + spec.bay_width_mm as i64 / 2
            })
            .collect();
        Frame {
            n_aisles,
            aisle_center_x: centers,
            aisle_widths,
            width_mm: x,
            height_mm: height,
            bays,
            bay_y,
            outbound_aisle: n_aisles / 2,
            inbound_aisle: n_aisles / 4,
        }
    }

    /// Pick-face position of a row/bay: x on the aisle side of the rack.
    fn face(&self, row: u32, bay: u32) -> PointMm {
        let aisle = (row / 2) as usize;
        let half = self.aisle_widths[aisle] as i64 / 2;
        let x = if row % 2 == 0 {
            self.aisle_center_x[aisle] - half
        } else {
            self.aisle_center_x[aisle] + half
        };
        PointMm::new(x, self.bay_y[bay as usize])
    }

    /// Physical cell of one (row, bay, depth) position.
    fn cell(&self, spec: &LayoutSpec, row: u32, bay: u32, depth: u8) -> RectMm {
        let face = self.face(row, bay);
        let d = spec.rack_depth_mm as i64;
        let y0 = face.y - spec.bay_width_mm as i64 / 2;
        let y1 = face.y + spec.bay_width_mm as i64 / 2;
        let (x0, x1) = if row % 2 == 0 {
            // Left rack: depths extend away from the aisle (to -x).
            (face.x - (depth as i64 + 1) * d, face.x - depth as i64 * d)
        } else {
            (face.x + depth as i64 * d, face.x + (depth as i64 + 1) * d)
        };
        RectMm::new(PointMm::new(x0, y0), PointMm::new(x1, y1))
    }

    fn apex(&self, spec: &LayoutSpec) -> PointMm {
        PointMm::new(
            self.aisle_center_x[self.outbound_aisle as usize],
            spec.bottom_cross_aisle_mm as i64 / 2,
        )
    }
}

/// The two diagonal segments of the V corridor, clipped to the footprint.
fn v_segments(spec: &LayoutSpec, frame: &Frame) -> [(PointMm, PointMm); 2] {
    let apex = frame.apex(spec);
    let tan = (spec.diagonal_angle_deg.to_radians()).tan();
    let top = frame.height_mm - spec.top_cross_aisle_mm as i64;
    let clip_run = |run: i64| -> (i64, i64) {
        // Horizontal run limited by the footprint top.
        let max_rise = (top - apex.y).max(0) as f64;
        let rise_at_run = run as f64 * tan;
        if rise_at_run <= max_rise {
            (run, rise_at_run.round() as i64)
        } else {
            ((max_rise / tan).round() as i64, max_rise.round() as i64)
        }
    };
    let (lrun, lrise) = clip_run(apex.x);
    let (rrun, rrise) = clip_run(frame.width_mm - apex.x);
    [
        (apex, PointMm::new(apex.x - lrun, apex.y + lrise)),
        (apex, PointMm::new(apex.x + rrun, apex.y + rrise)),
    ]
}

/// Whether the (row, bay) rack column is displaced by the V corridor.
fn displaced(spec: &LayoutSpec, frame: &Frame, segs: &[(PointMm, PointMm); 2], row: u32, bay: u32) -> bool {
    let half = spec.v_corridor_width_mm as f64 / 2.0;
    for depth in 0..2u8 {
        let cell = frame.cell(spec, row, bay, depth);
        for (a, b) in segs {
            if segment_rect_distance_mm(*a, *b, &cell) < half {
                return true;
            }
        }
    }
    false
}

struct BuiltGraph {
    graph: NavGraph,
    /// Access node per (aisle, bay).
    bay_nodes: Vec<Vec<NodeId>>,
    inbound: NodeId,
    outbound: NodeId,
}

fn build_graph(spec: &LayoutSpec, frame: &Frame, with_v: bool) -> BuiltGraph {
    let mut b = GraphBuilder::new();
    let y_bottom = spec.bottom_cross_aisle_mm as i64 / 2;
    let y_top = frame.height_mm - spec.top_cross_aisle_mm as i64 / 2;
    let segs = if with_v { Some(v_segments(spec, frame)) } else { None };
    let tan = spec.diagonal_angle_deg.to_radians().tan();

    let mut bottom_nodes = Vec::new();
    let mut top_nodes = Vec::new();
    let mut bay_nodes: Vec<Vec<NodeId>> = Vec::new();
    let mut v_nodes: Vec<Option<NodeId>> = vec![None; frame.n_aisles as usize];

    for a in 0..frame.n_aisles as usize {
        let cx = frame.aisle_center_x[a];
        let width = frame.aisle_widths[a];
        // Crossing height of the V in this aisle, if inside the rack span.
        let v_y = segs.as_ref().and_then(|s| {
            if a as u32 == frame.outbound_aisle {
                return None;
            }
            let apex_x = frame.apex(spec).x;
            let run = (cx - apex_x).abs();
            // Each branch may be clipped by the footprint top.
            let reach = if cx < apex_x {
                apex_x - s[0].1.x
            } else {
                s[1].1.x - apex_x
            };
            let y = y_bottom + (run as f64 * tan).round() as i64;
            if y < y_top && run <= reach {
                Some(y)
            } else {
                None
            }
        });
        // Node chain bottom -> bays -> top, with the V crossing spliced in.
        let mut ys: Vec<(i64, bool)> = Vec::with_capacity(frame.bays as usize + 3);
        ys.push((y_bottom, false));
        for j in 0..frame.bays as usize {
            ys.push((frame.bay_y[j], false));
        }
        ys.push((y_top, false));
        if let Some(vy) = v_y {
            match ys.iter_mut().find(|(y, _)| (*y - vy).abs() < 2) {
                Some(entry) => entry.1 = true,
                None => ys.push((vy, true)),
            }
        }
        ys.sort();
        let mut chain = Vec::with_capacity(ys.len());
        let mut this_bays = Vec::with_capacity(frame.bays as usize);
        for (y, is_v) in &ys {
            let node = b.add_node(PointMm::new(cx, *y));
            chain.push(node);
            if *y == y_bottom {
                bottom_nodes.push(node);
            }
            if *y == y_top {
                top_nodes.push(node);
            }
            if frame.bay_y.contains(y) {
                this_bays.push(node);
            }
            if *is_v {
                v_nodes[a] = Some(node);
            }
        }
        for w in chain.windows(2) {
            b.add_edge(w[0], w[1], width);
        }
        bay_nodes.push(this_bays);
    }

    for a in 0..frame.n_aisles as usize - 1 {
        b.add_edge(bottom_nodes[a], bottom_nodes[a + 1], spec.bottom_cross_aisle_mm);
        b.add_edge(top_nodes[a], top_nodes[a + 1], spec.top_cross_aisle_mm);
    }

    // Diagonal V edges chain outward from the apex on both sides.
    if segs.is_some() {
        let apex_node = bottom_nodes[frame.outbound_aisle as usize];
        let mut prev = apex_node;
        for a in (0..frame.outbound_aisle as usize).rev() {
            match v_nodes[a] {
                Some(v) => {
                    b.add_edge(prev, v, spec.v_corridor_width_mm);
                    prev = v;
                }
                None => break,
            }
        }
        prev = apex_node;
        for a in frame.outbound_aisle as usize + 1..frame.n_aisles as usize {
            match v_nodes[a] {
                Some(v) => {
                    b.add_edge(prev, v, spec.v_corridor_width_mm);
                    prev = v;
                }
                None => break,
            }
        }
    }

    // Staging sits outside the footprint, below the bottom edge.
    let out_x = frame.aisle_center_x[frame.outbound_aisle as usize];
    let mut in_x = frame.aisle_center_x[frame.inbound_aisle as usize];
    if frame.inbound_aisle == frame.outbound_aisle {
        in_x -= spec.bay_width_mm as i64;
    }
    let outbound = b.add_node(PointMm::new(out_x, -STAGING_OFFSET_MM));
    let inbound = b.add_node(PointMm::new(in_x, -STAGING_OFFSET_MM));
    b.add_edge(outbound, bottom_nodes[frame.outbound_aisle as usize], STAGING_LANE_WIDTH_MM);
    b.add_edge(inbound, bottom_nodes[frame.inbound_aisle as usize], STAGING_LANE_WIDTH_MM);

    BuiltGraph {
        graph: b.build(),
        bay_nodes,
        inbound,
        outbound,
    }
}

/// Candidate slot cell prior to id assignment, ordered rear-before-front so
/// the "lowest slot id" tie-break fills rear positions first.
struct Candidate {
    row: u32,
    bay: u32,
    level: u8,
    depth: u8,
    position: PointMm,
    access_node: NodeId,
    cell: RectMm,
}

fn candidates(
    spec: &LayoutSpec,
    frame: &Frame,
    built: &BuiltGraph,
    skip: impl Fn(u32, u32) -> bool,
) -> Vec<Candidate> {
    let mut out = Vec::with_capacity(spec.grid_slot_count() as usize);
    for row in 0..spec.rows {
        let aisle = (row / 2) as usize;
        for bay in 0..frame.bays {
            if skip(row, bay) {
                continue;
            }
            let position = frame.face(row, bay);
            let access_node = built.bay_nodes[aisle][bay as usize];
            for level in 0..spec.levels {
                for depth in [1u8, 0u8] {
                    out.push(Candidate {
                        row,
                        bay,
                        level,
                        depth,
                        position,
                        access_node,
                        cell: frame.cell(spec, row, bay, depth),
                    });
                }
            }
        }
    }
    out
}

fn finish(
    name: &str,
    kind: LayoutKind,
    spec: &LayoutSpec,
    frame: &Frame,
    built: BuiltGraph,
    cands: Vec<Candidate>,
    zone_fractions: super::ZoneFractions,
) -> Layout {
    // Pair front/rear at the same (row, bay, level).
    let mut slots: Vec<Slot> = cands
        .iter()
        .enumerate()
        .map(|(i, c)| Slot {
            id: i as SlotId,
            position: c.position,
            level: c.level,
            depth_index: c.depth,
            zone: Zone::Unzoned,
            max_collars: crate::model::MAX_COLLARS,
            access_node: c.access_node,
            pair: None,
            cell: c.cell,
        })
        .collect();
    let mut by_cell: std::collections::HashMap<(u32, u32, u8), [Option<SlotId>; 2]> =
        std::collections::HashMap::new();
    for (i, c) in cands.iter().enumerate() {
        by_cell
            .entry((c.row, c.bay, c.level))
            .or_default()[c.depth as usize] = Some(i as SlotId);
    }
    for pair in by_cell.values() {
        if let (Some(front), Some(rear)) = (pair[0], pair[1]) {
            slots[front as usize].pair = Some(rear);
            slots[rear as usize].pair = Some(front);
        }
    }
    let footprint = RectMm::new(PointMm::new(0, 0), PointMm::new(frame.width_mm, frame.height_mm));
    Layout::new(
        name.to_string(),
        kind,
        slots,
        built.graph,
        built.inbound,
        built.outbound,
        footprint,
        zone_fractions,
        spec.level_height_m,
    )
}

/// Conventional grid: straight parallel aisles, double-deep racks, no zones.
pub fn build_conventional(spec: &LayoutSpec) -> Result<Layout, ConfigError> {
    build_grid(spec, "conventional", LayoutKind::Conventional)
}

/// The legacy warehouse: the conventional generator under its own
/// dimensions, kept as a distinct kind for policy checks and reporting.
pub fn build_current(spec: &LayoutSpec) -> Result<Layout, ConfigError> {
    build_grid(spec, "current", LayoutKind::Current)
}

pub(crate) fn build_grid(
    spec: &LayoutSpec,
    name: &str,
    kind: LayoutKind,
) -> Result<Layout, ConfigError> {
    spec.validate("layout")?;
    let widths = vec![spec.aisle_width_mm; spec.aisle_count() as usize];
    let frame = Frame::new(spec, widths, spec.bays_per_row);
    let built = build_graph(spec, &frame, false);
    let cands = candidates(spec, &frame, &built, |_, _| false);
    Ok(finish(name, kind, spec, &frame, built, cands, spec.zone_fractions))
}

/// Flying-V: a conventional grid with a V-shaped cross-aisle carved toward
/// outbound staging. Displaced rack columns are compensated by extending
/// rows upward until the slot count equals the conventional build, trimming
/// the farthest excess slots for an exact match.
pub fn build_flying_v(spec: &LayoutSpec) -> Result<Layout, ConfigError> {
    spec.validate("layout")?;
    let target = spec.grid_slot_count();
    let widths = vec![spec.aisle_width_mm; spec.aisle_count() as usize];
    let mut chosen: Option<(Frame, Vec<(u32, u32)>)> = None;
    for extension in 0..=400u32 {
        let frame = Frame::new(spec, widths.clone(), spec.bays_per_row + extension);
        let segs = v_segments(spec, &frame);
        let mut removed = Vec::new();
        for row in 0..spec.rows {
            for bay in 0..frame.bays {
                if displaced(spec, &frame, &segs, row, bay) {
                    removed.push((row, bay));
                }
            }
        }
        let count = (spec.rows * frame.bays - removed.len() as u32) * spec.levels as u32 * 2;
        if count >= target {
            chosen = Some((frame, removed));
            break;
        }
    }
    let (frame, removed) = chosen.ok_or_else(|| {
        ConfigError::invalid(
            "layout.diagonal_angle_deg",
            "V corridor displaces slots faster than row extension can restore",
        )
    })?;
    let built = build_graph(spec, &frame, true);
    if !built.graph.connected_for_width(0) {
        return Err(ConfigError::invalid(
            "layout.diagonal_angle_deg",
            "V construction produced a disconnected navigation graph",
        ));
    }
    let removed_set: std::collections::HashSet<(u32, u32)> = removed.into_iter().collect();
    let mut cands = candidates(spec, &frame, &built, |row, bay| removed_set.contains(&(row, bay)));

    // Trim the excess introduced by whole-row extension: farthest bays, then
    // the far ends of the cross-aisle, upper levels and rear positions first.
    let excess = cands.len() as u32 - target;
    if excess > 0 {
        let out_x = frame.aisle_center_x[frame.outbound_aisle as usize];
        let mut order: Vec<usize> = (0..cands.len()).collect();
        order.sort_by_key(|&i| {
            let c = &cands[i];
            (
                std::cmp::Reverse(c.bay),
                std::cmp::Reverse((c.position.x - out_x).abs()),
                std::cmp::Reverse(c.level),
                std::cmp::Reverse(c.depth),
                c.row,
            )
        });
        let drop: std::collections::HashSet<usize> =
            order.into_iter().take(excess as usize).collect();
        cands = cands
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, c)| c)
            .collect();
    }
    debug_assert_eq!(cands.len() as u32, target);
    Ok(finish("flying_v", LayoutKind::FlyingV, spec, &frame, built, cands, spec.zone_fractions))
}

/// Tri-zonal layout: ground-level P slots nearest outbound staging behind
/// wide central aisles, dense far E slots behind narrow outer aisles, and
/// S slots between.
pub fn build_cpu(spec: &LayoutSpec) -> Result<Layout, ConfigError> {
    spec.validate("layout")?;
    let n_aisles = spec.aisle_count();
    // Aisle width bands by distance from the outbound aisle.
    let outbound_aisle = n_aisles / 2;
    let mut rank: Vec<u32> = (0..n_aisles).collect();
    rank.sort_by_key(|a| ((*a as i64 - outbound_aisle as i64).abs(), *a));
    let n_wide = (spec.wide_aisle_fraction * n_aisles as f64).ceil() as usize;
    let n_dense = (spec.dense_aisle_fraction * n_aisles as f64).floor() as usize;
    let mut widths = vec![spec.aisle_width_mm; n_aisles as usize];
    for (pos, aisle) in rank.iter().enumerate() {
        if pos < n_wide {
            widths[*aisle as usize] = spec.wide_aisle_width_mm;
        } else if pos >= n_aisles as usize - n_dense {
            widths[*aisle as usize] = spec.dense_aisle_width_mm;
        }
    }
    let frame = Frame::new(spec, widths, spec.bays_per_row);
    let built = build_graph(spec, &frame, false);
    let cands = candidates(spec, &frame, &built, |_, _| false);
    let mut layout = finish("cpu", LayoutKind::Cpu, spec, &frame, built, cands, spec.zone_fractions);

    // Zone assignment by slot count: P takes the nearest ground slots, S the
    // nearest remaining slots, E everything farther out.
    let n = layout.slot_count() as f64;
    let p_count = (spec.zone_fractions.p * n).round() as usize;
    let s_count = (spec.zone_fractions.s * n).round() as usize;
    let ground = layout.ground_slot_count();
    if p_count > ground {
        return Err(ConfigError::invalid(
            "layout.zone_fractions.p",
            format!(
                "{} ground-level P slots requested but only {} ground positions exist",
                p_count, ground
            ),
        ));
    }
    let dist_key = |layout: &Layout, id: SlotId| -> (u64, SlotId) {
        ((layout.distance_rank(id) * 1000.0).round() as u64, id)
    };
    let mut ground_ids: Vec<SlotId> = layout
        .slots
        .iter()
        .filter(|s| s.level == 0)
        .map(|s| s.id)
        .collect();
    ground_ids.sort_by_key(|&id| dist_key(&layout, id));
    let p_ids: std::collections::HashSet<SlotId> = ground_ids.iter().take(p_count).copied().collect();
    let mut rest: Vec<SlotId> = layout
        .slots
        .iter()
        .map(|s| s.id)
        .filter(|id| !p_ids.contains(id))
        .collect();
    rest.sort_by_key(|&id| dist_key(&layout, id));
    for (i, id) in rest.iter().enumerate() {
        layout.slots[*id as usize].zone = if i < s_count { Zone::S } else { Zone::E };
    }
    for id in &p_ids {
        layout.slots[*id as usize].zone = Zone::P;
    }
    Ok(layout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{compute_area, ZoneFractions};
    use crate::routing::{shortest_path, VehicleProfile};

    fn default_spec() -> LayoutSpec {
        LayoutSpec::default()
    }

    #[test]
    fn minimal_instance_has_two_slots() {
        let spec = LayoutSpec {
            rows: 1,
            bays_per_row: 1,
            levels: 1,
            target_slot_count: 2,
            ..default_spec()
        };
        let layout = build_conventional(&spec).unwrap();
        assert_eq!(layout.slot_count(), 2);
        let rear = layout.slots.iter().find(|s| s.depth_index == 1).unwrap();
        let front = layout.slots.iter().find(|s| s.depth_index == 0).unwrap();
        assert!(rear.id < front.id);
        assert_eq!(rear.pair, Some(front.id));
        assert_eq!(front.pair, Some(rear.id));
    }

    #[test]
    fn conventional_area_near_calibration_target() {
        let layout = build_conventional(&default_spec()).unwrap();
        let area = compute_area(&layout);
        assert!((area - 4023.0).abs() / 4023.0 < 0.10, "area {area}");
        assert_eq!(layout.slot_count() as u32, default_spec().grid_slot_count());
    }

    #[test]
    fn conventional_slots_all_unzoned() {
        let layout = build_conventional(&default_spec()).unwrap();
        assert!(layout.slots.iter().all(|s| s.zone == Zone::Unzoned));
    }

    #[test]
    fn every_access_node_reaches_outbound_staging() {
        // Breadth-first reachability oracle, independent of Dijkstra.
        let layout = build_conventional(&default_spec()).unwrap();
        let n = layout.graph.node_count();
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        seen[layout.outbound_staging as usize] = true;
        queue.push_back(layout.outbound_staging);
        while let Some(u) = queue.pop_front() {
            for e in layout.graph.neighbors(u) {
                if !seen[e.to as usize] {
                    seen[e.to as usize] = true;
                    queue.push_back(e.to);
                }
            }
        }
        assert!(layout.slots.iter().all(|s| seen[s.access_node as usize]));
    }

    #[test]
    fn access_offset_is_half_aisle() {
        for layout in [
            build_conventional(&default_spec()).unwrap(),
            build_flying_v(&default_spec()).unwrap(),
            build_cpu(&default_spec()).unwrap(),
        ] {
            // Slots sit exactly half an aisle from their access node; the V
            // splice never changes access nodes.
            assert!(layout.max_access_offset_mm() <= 2001.0, "{}", layout.name);
        }
    }

    #[test]
    fn flying_v_preserves_slot_count_and_grows_area() {
        let spec = default_spec();
        let conventional = build_conventional(&spec).unwrap();
        let fv = build_flying_v(&spec).unwrap();
        assert_eq!(fv.slot_count(), conventional.slot_count());
        let conv_area = compute_area(&conventional);
        let fv_area = compute_area(&fv);
        assert!(fv_area > conv_area, "fv {fv_area} vs conv {conv_area}");
        assert!((fv_area - 4477.0).abs() / 4477.0 < 0.10, "fv area {fv_area}");
    }

    #[test]
    fn flying_v_degenerate_vertical_angle_matches_conventional_area() {
        let spec = LayoutSpec {
            diagonal_angle_deg: 90.0,
            ..default_spec()
        };
        let conventional = build_conventional(&spec).unwrap();
        let fv = build_flying_v(&spec).unwrap();
        let ratio = compute_area(&fv) / compute_area(&conventional);
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn flying_v_never_lengthens_path_to_outbound() {
        let spec = default_spec();
        let conventional = build_conventional(&spec).unwrap();
        let fv = build_flying_v(&spec).unwrap();
        let vehicle = VehicleProfile {
            turn_penalty_s: 0.0,
            min_aisle_width_mm: 0,
            ..Default::default()
        };
        // A central slot deep in the racks: the diagonal must help (or tie).
        let mid = conventional
            .slots
            .iter()
            .find(|s| s.level == 0 && s.position.y > conventional.footprint.max.y / 2)
            .unwrap();
        let conv_cost = shortest_path(
            &conventional.graph,
            conventional.outbound_staging,
            mid.access_node,
            &vehicle,
        )
        .unwrap()
        .traversal_seconds(&vehicle);
        // Same coordinates in the FV build (same grid indices exist there).
        let fv_slot = fv
            .slots
            .iter()
            .find(|s| s.position == mid.position && s.level == 0 && s.depth_index == mid.depth_index)
            .unwrap();
        let fv_cost = shortest_path(&fv.graph, fv.outbound_staging, fv_slot.access_node, &vehicle)
            .unwrap()
            .traversal_seconds(&vehicle);
        assert!(fv_cost <= conv_cost + 1e-9, "fv {fv_cost} conv {conv_cost}");
    }

    #[test]
    fn cpu_area_between_conventional_and_flying_v() {
        let spec = default_spec();
        let conv = compute_area(&build_conventional(&spec).unwrap());
        let cpu = compute_area(&build_cpu(&spec).unwrap());
        let fv = compute_area(&build_flying_v(&spec).unwrap());
        assert!((cpu - 4112.0).abs() / 4112.0 < 0.10, "cpu area {cpu}");
        assert!(conv < cpu && cpu < fv, "conv {conv} cpu {cpu} fv {fv}");
    }

    #[test]
    fn cpu_zone_counts_match_fractions() {
        let spec = default_spec();
        let layout = build_cpu(&spec).unwrap();
        let n = layout.slot_count() as f64;
        let p = layout.zone_count(Zone::P);
        let e = layout.zone_count(Zone::E);
        let s = layout.zone_count(Zone::S);
        assert_eq!(p + e + s, layout.slot_count());
        assert_eq!(p, (spec.zone_fractions.p * n).round() as usize);
        assert_eq!(s, (spec.zone_fractions.s * n).round() as usize);
        // All P slots are ground level.
        assert!(layout
            .slots
            .iter()
            .filter(|sl| sl.zone == Zone::P)
            .all(|sl| sl.level == 0));
        // P slots are nearer than the E median.
        let mean = |zone: Zone| {
            let ids: Vec<_> = layout.slots.iter().filter(|sl| sl.zone == zone).collect();
            ids.iter().map(|sl| layout.distance_rank(sl.id)).sum::<f64>() / ids.len() as f64
        };
        assert!(mean(Zone::P) < mean(Zone::S));
        assert!(mean(Zone::S) < mean(Zone::E));
    }

    #[test]
    fn cpu_all_ground_fraction_needs_single_level() {
        let spec = LayoutSpec {
            zone_fractions: ZoneFractions { p: 1.0, e: 0.0, s: 0.0 },
            ..default_spec()
        };
        // 4 levels: only a quarter of slots are ground level, so P=1 errors.
        assert!(build_cpu(&spec).is_err());
        let single = LayoutSpec {
            levels: 1,
            target_slot_count: 1224,
            ..spec
        };
        let layout = build_cpu(&single).unwrap();
        assert!(layout.slots.iter().all(|s| s.level == 0 && s.zone == Zone::P));
    }

    #[test]
    fn enlarged_p_variant_keeps_slot_count() {
        let base = build_cpu(&default_spec()).unwrap();
        let enlarged = build_cpu(&LayoutSpec {
            zone_fractions: ZoneFractions { p: 0.24, e: 0.46, s: 0.30 },
            ..default_spec()
        })
        .unwrap();
        assert_eq!(base.slot_count(), enlarged.slot_count());
        assert!(enlarged.zone_count(Zone::P) > base.zone_count(Zone::P));
    }

    #[test]
    fn undersized_spec_rejected() {
        let spec = LayoutSpec {
            rows: 2,
            bays_per_row: 2,
            levels: 1,
            target_slot_count: 100,
            ..default_spec()
        };
        assert!(build_conventional(&spec).is_err());
    }

    #[test]
    fn bare_rack_area_example() {
        // A single double-deep rack 2.4 m deep and 10 m long, no aisles.
        let spec = LayoutSpec {
            rows: 1,
            bays_per_row: 10,
            levels: 1,
            bay_width_mm: 1000,
            aisle_width_mm: 0,
            bottom_cross_aisle_mm: 0,
            top_cross_aisle_mm: 0,
            target_slot_count: 1,
            ..default_spec()
        };
        let layout = build_conventional(&spec).unwrap();
        assert!((compute_area(&layout) - 24.0).abs() < 1e-9);
    }

    #[test]
    fn area_translation_invariant() {
        let layout = build_conventional(&default_spec()).unwrap();
        let moved = layout.translated(123_456, -77_000);
        assert!((compute_area(&layout) - compute_area(&moved)).abs() < 1e-9);
    }

    #[test]
    fn doubling_rows_and_bays_quadruples_slots() {
        let small = LayoutSpec {
            rows: 6,
            bays_per_row: 10,
            target_slot_count: 1,
            ..default_spec()
        };
        let big = LayoutSpec {
            rows: 12,
            bays_per_row: 20,
            ..small.clone()
        };
        let a = build_conventional(&small).unwrap();
        let b = build_conventional(&big).unwrap();
        assert_eq!(b.slot_count(), 4 * a.slot_count());
        // Rectangle growth: width doubles, rack span of height doubles.
        let expected_h = |spec: &LayoutSpec| {
            (spec.bottom_cross_aisle_mm + spec.top_cross_aisle_mm) as f64 / 1000.0
                + spec.bays_per_row as f64 * spec.bay_width_mm as f64 / 1000.0
        };
        let ratio = compute_area(&b) / compute_area(&a);
        let expected = 2.0 * expected_h(&big) / expected_h(&small);
        assert!((ratio - expected).abs() < 1e-9);
    }

    #[test]
    fn distance_rank_matches_dijkstra_oracle() {
        let layout = build_conventional(&default_spec()).unwrap();
        let vehicle = VehicleProfile {
            min_aisle_width_mm: 0,
            ..Default::default()
        };
        let oracle = crate::routing::one_to_all_meters(&layout.graph, layout.outbound_staging, &vehicle);
        // 100 sampled slots plus repeat queries for memo determinism.
        for i in 0..100usize {
            let id = ((i * 37) % layout.slot_count()) as SlotId;
            let slot = layout.slot(id);
            let expect = oracle[slot.access_node as usize];
            assert_eq!(layout.distance_rank(id), expect);
            assert_eq!(layout.distance_rank(id), layout.distance_rank(id));
        }
    }
}
