//! Static SVG rendering of packed boxes.
//!
//! 2D boxes become a single front-on drawing: one rectangle per object,
//! labeled with its index, drawn in placement order. 3D boxes become
//! three axis-aligned orthographic panels (top, front, side) drawn
//! painter-style, far to near. Colors are keyed to the object index so
//! the same object keeps its color across panels and images.
//!
//! Every placement rectangle carries `data-` attributes with its cell
//! coordinates, and all pixel coordinates are integer multiples of
//! [`CELL_PX`] offset by the margins, so a reader can recover the exact
//! placements from the geometry alone. Output bytes are a pure function
//! of the input record.

use crate::dataset::ResultRecord;
use crate::error::{Error, Result};
use std::fmt::Write;

/// Pixels per grid cell.
pub const CELL_PX: u32 = 32;
/// Outer margin on all sides, in pixels.
pub const MARGIN_PX: u32 = 20;
/// Horizontal gap between the three panels of a 3D drawing.
pub const PANEL_GAP_PX: u32 = 28;
/// Height of the caption strip above each 3D panel.
pub const TITLE_PX: u32 = 18;

/// Fill color for an object index: the hue walks the golden angle so
/// nearby indices get visibly different colors.
pub fn object_color(index: usize) -> String {
    let hue = (index as f64 * 0.618_033_988_749_895).fract() * 360.0;
    format!("hsl({hue:.1}, 65%, 62%)")
}

struct Item<'a> {
    object: usize,
    x: u32,
    y: u32,
    z: u32,
    dims: &'a [u32],
}

impl Item<'_> {
    fn l(&self) -> u32 {
        self.dims[0]
    }
    fn w(&self) -> u32 {
        if self.dims.len() == 3 { self.dims[1] } else { 1 }
    }
    fn h(&self) -> u32 {
        *self.dims.last().unwrap()
    }
}

fn items_in_box<'a>(record: &'a ResultRecord, box_index: usize) -> Vec<Item<'a>> {
    record
        .placements
        .iter()
        .filter(|p| p.box_index == box_index)
        .map(|p| Item {
            object: p.object,
            x: p.position[0],
            y: p.position[1],
            z: p.position[2],
            dims: &p.dims,
        })
        .collect()
}

/// Renders one box of a packing to an SVG document.
pub fn render_box(record: &ResultRecord, box_index: usize) -> Result<String> {
    record.validate()?;
    if box_index >= record.boxes_used() {
        return Err(Error::Contract(format!(
            "box {box_index} not present in packing of instance {}",
            record.id
        )));
    }
    let spec = record.box_spec()?;
    let items = items_in_box(record, box_index);
    match spec.m() {
        2 => render_2d(&record.id, spec.dims(), &items),
        _ => render_3d(&record.id, spec.dims(), &items),
    }
}

/// Renders every used box of a packing, in box order.
pub fn render_record(record: &ResultRecord) -> Result<Vec<String>> {
    (0..record.boxes_used()).map(|k| render_box(record, k)).collect()
}

fn svg_open(out: &mut String, width: u32, height: u32, id: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" data-instance=\"{id}\">\n\
         <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"#fafaf7\"/>\n"
    );
}

fn outline(out: &mut String, x: u32, y: u32, w: u32, h: u32) {
    let _ = writeln!(
        out,
        "<rect class=\"box\" x=\"{x}\" y=\"{y}\" width=\"{w}\" height=\"{h}\" \
         fill=\"none\" stroke=\"#555\" stroke-width=\"2\"/>"
    );
}

fn placement_rect(out: &mut String, item: &Item, px: u32, py: u32, pw: u32, ph: u32) {
    let _ = writeln!(
        out,
        "<rect data-object=\"{}\" data-x=\"{}\" data-y=\"{}\" data-z=\"{}\" \
         x=\"{px}\" y=\"{py}\" width=\"{pw}\" height=\"{ph}\" \
         fill=\"{}\" stroke=\"#333\" stroke-width=\"1\"/>",
        item.object,
        item.x,
        item.y,
        item.z,
        object_color(item.object)
    );
}

fn label(out: &mut String, cx: u32, cy: u32, text: &str) {
    let _ = writeln!(
        out,
        "<text x=\"{cx}\" y=\"{cy}\" font-family=\"sans-serif\" font-size=\"13\" \
         fill=\"#1a1a1a\" text-anchor=\"middle\" dominant-baseline=\"central\">{text}</text>"
    );
}

fn render_2d(id: &str, box_dims: &[u32], items: &[Item]) -> Result<String> {
    let (cap_l, cap_h) = (box_dims[0], box_dims[1]);
    let width = 2 * MARGIN_PX + cap_l * CELL_PX;
    let height = 2 * MARGIN_PX + cap_h * CELL_PX;
    let mut out = String::new();
    svg_open(&mut out, width, height, id);
    outline(&mut out, MARGIN_PX, MARGIN_PX, cap_l * CELL_PX, cap_h * CELL_PX);
    for item in items {
        let px = MARGIN_PX + item.x * CELL_PX;
        let py = MARGIN_PX + (cap_h - item.z - item.h()) * CELL_PX;
        let (pw, ph) = (item.l() * CELL_PX, item.h() * CELL_PX);
        placement_rect(&mut out, item, px, py, pw, ph);
        label(&mut out, px + pw / 2, py + ph / 2, &item.object.to_string());
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Geometry of one orthographic panel: pixel origin plus closures mapping
/// an item to its (horizontal, vertical, width, height) cell rectangle.
struct Panel {
    name: &'static str,
    origin_x: u32,
    cells_w: u32,
    cells_h: u32,
}

fn render_3d(id: &str, box_dims: &[u32], items: &[Item]) -> Result<String> {
    let (cap_l, cap_w, cap_h) = (box_dims[0], box_dims[1], box_dims[2]);
    let top = Panel { name: "top", origin_x: MARGIN_PX, cells_w: cap_l, cells_h: cap_w };
    let front = Panel {
        name: "front",
        origin_x: top.origin_x + top.cells_w * CELL_PX + PANEL_GAP_PX,
        cells_w: cap_l,
        cells_h: cap_h,
    };
    let side = Panel {
        name: "side",
        origin_x: front.origin_x + front.cells_w * CELL_PX + PANEL_GAP_PX,
        cells_w: cap_w,
        cells_h: cap_h,
    };
    let width = side.origin_x + side.cells_w * CELL_PX + MARGIN_PX;
    let tallest = cap_w.max(cap_h);
    let height = 2 * MARGIN_PX + TITLE_PX + tallest * CELL_PX;
    let origin_y = MARGIN_PX + TITLE_PX;

    let mut out = String::new();
    svg_open(&mut out, width, height, id);

    // One painter order per panel: draw far to near so nearer objects
    // cover farther ones, ties broken by object index.
    let mut by_top: Vec<&Item> = items.iter().collect();
    by_top.sort_by_key(|i| (i.z + i.h(), i.object));
    let mut by_front: Vec<&Item> = items.iter().collect();
    by_front.sort_by_key(|i| (std::cmp::Reverse(i.y), i.object));
    let mut by_side: Vec<&Item> = items.iter().collect();
    by_side.sort_by_key(|i| (std::cmp::Reverse(i.x), i.object));

    for (panel, ordered, with_labels) in
        [(&top, by_top, true), (&front, by_front, false), (&side, by_side, false)]
    {
        let _ = writeln!(out, "<g class=\"panel\" data-view=\"{}\">", panel.name);
        label(
            &mut out,
            panel.origin_x + panel.cells_w * CELL_PX / 2,
            MARGIN_PX + TITLE_PX / 2,
            panel.name,
        );
        outline(&mut out, panel.origin_x, origin_y, panel.cells_w * CELL_PX, panel.cells_h * CELL_PX);
        for item in ordered {
            // Per-panel projection of the cell box onto (horizontal, vertical).
            let (cx, cy, cw, ch) = match panel.name {
                "top" => (item.x, item.y, item.l(), item.w()),
                "front" => (item.x, panel.cells_h - item.z - item.h(), item.l(), item.h()),
                _ => (item.y, panel.cells_h - item.z - item.h(), item.w(), item.h()),
            };
            let px = panel.origin_x + cx * CELL_PX;
            let py = origin_y + cy * CELL_PX;
            let (pw, ph) = (cw * CELL_PX, ch * CELL_PX);
            placement_rect(&mut out, item, px, py, pw, ph);
            if with_labels {
                label(&mut out, px + pw / 2, py + ph / 2, &item.object.to_string());
            }
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{PlacementRecord, ResultRecord};
    use crate::instance::{generate_dataset, GenConfig, PackingOrder};
    use crate::placement::pack_sequence;

    /// Pulls (object, x, y, z, pixel rect) out of every placement rect.
    fn parse_rects(svg: &str) -> Vec<(usize, u32, u32, u32, [u32; 4])> {
        svg.lines()
            .filter(|l| l.contains("data-object"))
            .map(|l| {
                let attr = |name: &str| -> u32 {
                    let key = format!(" {name}=\"");
                    let start = l.find(&key).unwrap() + key.len();
                    let end = l[start..].find('"').unwrap() + start;
                    l[start..end].parse().unwrap()
                };
                (
                    attr("data-object") as usize,
                    attr("data-x"),
                    attr("data-y"),
                    attr("data-z"),
                    [attr("x"), attr("y"), attr("width"), attr("height")],
                )
            })
            .collect()
    }

    fn record_2d() -> ResultRecord {
        ResultRecord {
            id: "t-0".into(),
            box_dims: vec![10, 10],
            placements: vec![
                PlacementRecord { object: 0, box_index: 0, position: [0, 0, 0], dims: vec![5, 3] },
                PlacementRecord { object: 1, box_index: 0, position: [5, 0, 0], dims: vec![4, 2] },
                PlacementRecord { object: 2, box_index: 0, position: [0, 0, 3], dims: vec![3, 3] },
            ],
        }
    }

    #[test]
    fn geometry_inverts_to_the_placements() {
        let svg = render_box(&record_2d(), 0).unwrap();
        let rects = parse_rects(&svg);
        assert_eq!(rects.len(), 3);
        for (object, dx, _dy, dz, [px, py, pw, ph]) in rects {
            let l = pw / CELL_PX;
            let h = ph / CELL_PX;
            let x = (px - MARGIN_PX) / CELL_PX;
            let z = 10 - (py - MARGIN_PX) / CELL_PX - h;
            assert_eq!((x, z), (dx, dz), "object {object}");
            let rec = &record_2d().placements[object];
            assert_eq!([x, z], [rec.position[0], rec.position[2]]);
            assert_eq!(vec![l, h], rec.dims);
        }
    }

    #[test]
    fn output_is_deterministic() {
        let gen = GenConfig::default_3d(12);
        let inst = &generate_dataset(&gen, 1).unwrap()[0];
        let result = pack_sequence(inst, &PackingOrder::identity(inst.len())).unwrap();
        let record = ResultRecord::from_packing(inst, &result);
        let a = render_record(&record).unwrap();
        let b = render_record(&record).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), record.boxes_used());
    }

    #[test]
    fn perfect_tiling_covers_both_boxes() {
        let record = ResultRecord {
            id: "tile".into(),
            box_dims: vec![10, 10],
            placements: (0..4)
                .map(|i| PlacementRecord {
                    object: i,
                    box_index: i / 2,
                    position: [0, 0, 5 * (i as u32 % 2)],
                    dims: vec![10, 5],
                })
                .collect(),
        };
        let svgs = render_record(&record).unwrap();
        assert_eq!(svgs.len(), 2);
        for svg in &svgs {
            let covered: u32 = parse_rects(svg)
                .iter()
                .map(|(_, _, _, _, [_, _, w, h])| (w / CELL_PX) * (h / CELL_PX))
                .sum();
            assert_eq!(covered, 100);
        }
    }

    #[test]
    fn three_panels_with_painter_order() {
        let record = ResultRecord {
            id: "p".into(),
            box_dims: vec![10, 10, 10],
            placements: vec![
                PlacementRecord { object: 0, box_index: 0, position: [0, 4, 0], dims: vec![3, 3, 3] },
                PlacementRecord { object: 1, box_index: 0, position: [0, 0, 0], dims: vec![3, 3, 4] },
            ],
        };
        let svg = render_box(&record, 0).unwrap();
        for view in ["top", "front", "side"] {
            assert!(svg.contains(&format!("data-view=\"{view}\"")));
        }
        let rects = parse_rects(&svg);
        assert_eq!(rects.len(), 6);

        // Front panel must draw object 0 (farther, y=4) before object 1.
        let front_start = svg.find("data-view=\"front\"").unwrap();
        let front_panel = &svg[front_start..svg.find("data-view=\"side\"").unwrap()];
        let pos0 = front_panel.find("data-object=\"0\"").unwrap();
        let pos1 = front_panel.find("data-object=\"1\"").unwrap();
        assert!(pos0 < pos1);

        // Top panel draws the taller object 1 last.
        let top_panel = &svg[..front_start];
        let t0 = top_panel.rfind("data-object=\"0\"").unwrap();
        let t1 = top_panel.rfind("data-object=\"1\"").unwrap();
        assert!(t1 > t0);
    }

    #[test]
    fn absent_box_and_invalid_record_are_rejected() {
        assert!(render_box(&record_2d(), 1).is_err());
        let mut bad = record_2d();
        bad.placements[0].position = [8, 0, 0];
        assert!(render_box(&bad, 0).is_err());
    }

    #[test]
    fn colors_repeat_only_far_apart() {
        let colors: Vec<String> = (0..40).map(object_color).collect();
        let unique: std::collections::BTreeSet<&String> = colors.iter().collect();
        assert_eq!(unique.len(), colors.len());
    }
}
