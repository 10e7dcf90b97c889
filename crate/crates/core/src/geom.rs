//! Millimeter-exact planar geometry used by layouts and the nav graph.

use serde::{Deserialize, Serialize};

/// A point in integer millimeters. Layout geometry is exact; lengths derived
/// from points are f64 millimeters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PointMm {
    pub x: i64,
    pub y: i64,
}

impl PointMm {
    pub const fn new(x: i64, y: i64) -> Self {
        PointMm { x, y }
    }

    /// Euclidean distance in millimeters.
    pub fn distance_mm(&self, other: &PointMm) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Axis-aligned rectangle in millimeters, used for rack cells and footprints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RectMm {
    pub min: PointMm,
    pub max: PointMm,
}

impl RectMm {
    pub fn new(min: PointMm, max: PointMm) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y);
        RectMm { min, max }
    }

    pub fn width_mm(&self) -> i64 {
        self.max.x - self.min.x
    }

    pub fn height_mm(&self) -> i64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> PointMm {
        PointMm::new((self.min.x + self.max.x) / 2, (self.min.y + self.max.y) / 2)
    }

    pub fn translate(&self, dx: i64, dy: i64) -> RectMm {
        RectMm {
            min: PointMm::new(self.min.x + dx, self.min.y + dy),
            max: PointMm::new(self.max.x + dx, self.max.y + dy),
        }
    }

    pub fn area_m2(&self) -> f64 {
        (self.width_mm() as f64 / 1000.0) * (self.height_mm() as f64 / 1000.0)
    }
}

/// Distance from point `p` to the segment `a`-`b`, in millimeters.
pub fn point_segment_distance_mm(p: PointMm, a: PointMm, b: PointMm) -> f64 {
    let (px, py) = (p.x as f64, p.y as f64);
    let (ax, ay) = (a.x as f64, a.y as f64);
    let (bx, by) = (b.x as f64, b.y as f64);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return ((px - ax).powi(2) + (py - ay).powi(2)).sqrt();
    }
    let t = (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0);
    let (cx, cy) = (ax + t * dx, ay + t * dy);
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

/// Distance between segment `a1`-`a2` and axis-aligned rectangle `rect`,
/// zero when they touch or overlap.
pub fn segment_rect_distance_mm(a1: PointMm, a2: PointMm, rect: &RectMm) -> f64 {
    if point_in_rect(a1, rect) || point_in_rect(a2, rect) {
        return 0.0;
    }
    let corners = [
        rect.min,
        PointMm::new(rect.max.x, rect.min.y),
        rect.max,
        PointMm::new(rect.min.x, rect.max.y),
    ];
    let mut best = f64::INFINITY;
    for i in 0..4 {
        let e1 = corners[i];
        let e2 = corners[(i + 1) % 4];
        best = best.min(segment_segment_distance_mm(a1, a2, e1, e2));
        if best == 0.0 {
            return 0.0;
        }
    }
    best
}

fn point_in_rect(p: PointMm, rect: &RectMm) -> bool {
    p.x >= rect.min.x && p.x <= rect.max.x && p.y >= rect.min.y && p.y <= rect.max.y
}

/// Distance between two segments; zero when they intersect.
pub fn segment_segment_distance_mm(a1: PointMm, a2: PointMm, b1: PointMm, b2: PointMm) -> f64 {
    if segments_intersect(a1, a2, b1, b2) {
        return 0.0;
    }
    point_segment_distance_mm(a1, b1, b2)
        .min(point_segment_distance_mm(a2, b1, b2))
        .min(point_segment_distance_mm(b1, a1, a2))
        .min(point_segment_distance_mm(b2, a1, a2))
}

fn orient(a: PointMm, b: PointMm, c: PointMm) -> i128 {
    let v = (b.x - a.x) as i128 * (c.y - a.y) as i128 - (b.y - a.y) as i128 * (c.x - a.x) as i128;
    v.signum()
}

fn on_segment(a: PointMm, b: PointMm, p: PointMm) -> bool {
    orient(a, b, p) == 0
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

fn segments_intersect(a1: PointMm, a2: PointMm, b1: PointMm, b2: PointMm) -> bool {
    let d1 = orient(b1, b2, a1);
    let d2 = orient(b1, b2, a2);
    let d3 = orient(a1, a2, b1);
    let d4 = orient(a1, a2, b2);
    if d1 != d2 && d3 != d4 {
        return true;
    }
    on_segment(b1, b2, a1) || on_segment(b1, b2, a2) || on_segment(a1, a2, b1) || on_segment(a1, a2, b2)
}

pub const MM_PER_M: f64 = 1000.0;

pub fn mm_to_m(mm: f64) -> f64 {
    mm / MM_PER_M
}

pub fn m_to_mm(m: f64) -> i64 {
    (m * MM_PER_M).round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_is_euclidean() {
        let a = PointMm::new(0, 0);
        let b = PointMm::new(3000, 4000);
        assert_eq!(a.distance_mm(&b), 5000.0);
    }

    #[test]
    fn rect_area_in_square_meters() {
        let r = RectMm::new(PointMm::new(0, 0), PointMm::new(2400, 10_000));
        assert!((r.area_m2() - 24.0).abs() < 1e-12);
    }

    #[test]
    fn segment_distance_clamps_to_endpoints() {
        let a = PointMm::new(0, 0);
        let b = PointMm::new(10_000, 0);
        assert_eq!(point_segment_distance_mm(PointMm::new(5000, 2000), a, b), 2000.0);
        assert_eq!(point_segment_distance_mm(PointMm::new(-3000, 4000), a, b), 5000.0);
    }

    #[test]
    fn segment_rect_distances() {
        let rect = RectMm::new(PointMm::new(0, 0), PointMm::new(1000, 1000));
        // Crossing segment touches the rect.
        assert_eq!(
            segment_rect_distance_mm(PointMm::new(-500, 500), PointMm::new(1500, 500), &rect),
            0.0
        );
        // Parallel segment 700 mm above.
        assert_eq!(
            segment_rect_distance_mm(PointMm::new(0, 1700), PointMm::new(1000, 1700), &rect),
            700.0
        );
        // Diagonal far away.
        let d = segment_rect_distance_mm(PointMm::new(2000, 2000), PointMm::new(3000, 3000), &rect);
        assert!((d - (2.0f64).sqrt() * 1000.0).abs() < 1e-6);
    }
}
