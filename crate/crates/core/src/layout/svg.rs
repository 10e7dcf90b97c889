//! SVG rendering of a layout: rack cells colored by zone, staging markers
//! as triangles, footprint outline.

use super::{Layout, Zone};
use std::fmt::Write;

/// Zone fill colors: P blue, E orange, S yellow, unzoned gray.
fn fill(zone: Zone) -> &'static str {
    match zone {
        Zone::P => "#4a7fd0",
        Zone::E => "#e8882d",
        Zone::S => "#f2d12e",
        Zone::Unzoned => "#b5b8bd",
    }
}

/// Render the layout to an SVG string. Rack cells are drawn once per
/// (position, depth) column, colored by the zone of its lowest slot.
pub fn render_svg(layout: &Layout) -> String {
    let fp = layout.footprint;
    let margin = 6_000i64;
    let min_x = fp.min.x - margin;
    let min_y = fp.min.y - margin - 6_000; // room for staging markers
    let width = fp.width_mm() + 2 * margin;
    let height = fp.height_mm() + 2 * margin + 6_000;
    let scale = 0.01; // 1 px per 100 mm

    let mut svg = String::with_capacity(64 * 1024);
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {:.1} {:.1}">"#,
        width as f64 * scale,
        height as f64 * scale
    );
    // y grows upward in layout coordinates; flip for screen space.
    let tx = |x: i64| (x - min_x) as f64 * scale;
    let ty = |y: i64| (min_y + height - y) as f64 * scale;

    let _ = write!(
        svg,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#f4f4f2" stroke="#30343a" stroke-width="0.6"/>"##,
        tx(fp.min.x),
        ty(fp.max.y),
        fp.width_mm() as f64 * scale,
        fp.height_mm() as f64 * scale
    );

    // One rectangle per ground column; upper levels share the footprint.
    for slot in &layout.slots {
        if slot.level != 0 {
            continue;
        }
        let c = slot.cell;
        let _ = write!(
            svg,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}" stroke="#5a5e66" stroke-width="0.08"/>"##,
            tx(c.min.x),
            ty(c.max.y),
            c.width_mm() as f64 * scale,
            c.height_mm() as f64 * scale,
            fill(slot.zone)
        );
    }

    // Staging markers: triangles below the bottom edge.
    for (node, label, color) in [
        (layout.inbound_staging, "IN", "#2c8c4a"),
        (layout.outbound_staging, "OUT", "#b03030"),
    ] {
        let p = layout.graph.position(node);
        let (cx, cy) = (tx(p.x), ty(p.y));
        let _ = write!(
            svg,
            r##"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{}"/>"##,
            cx,
            cy - 12.0,
            cx - 10.0,
            cy + 8.0,
            cx + 10.0,
            cy + 8.0,
            color
        );
        let _ = write!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" font-size="8" text-anchor="middle" fill="#30343a">{}</text>"##,
            cx,
            cy + 18.0,
            label
        );
    }
    svg.push_str("</svg>");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{build_conventional, build_cpu, LayoutSpec};

    #[test]
    fn cpu_svg_has_three_zone_colors() {
        let svg = render_svg(&build_cpu(&LayoutSpec::default()).unwrap());
        assert!(svg.contains(fill(Zone::P)));
        assert!(svg.contains(fill(Zone::E)));
        assert!(svg.contains(fill(Zone::S)));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>"));
    }

    #[test]
    fn conventional_svg_single_fill() {
        let svg = render_svg(&build_conventional(&LayoutSpec::default()).unwrap());
        assert!(svg.contains(fill(Zone::Unzoned)));
        assert!(!svg.contains(fill(Zone::P)));
        assert!(!svg.contains(fill(Zone::E)));
    }

    #[test]
    fn one_bay_layout_renders_well_formed_svg() {
        let spec = LayoutSpec {
            rows: 1,
            bays_per_row: 1,
            levels: 1,
            target_slot_count: 1,
            ..LayoutSpec::default()
        };
        let svg = render_svg(&build_conventional(&spec).unwrap());
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>"));
        assert_eq!(svg.matches('<').count(), svg.matches('>').count());
    }
}
