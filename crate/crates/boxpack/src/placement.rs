//! Height-map placement engine.
//!
//! A box is represented by its height map: one column height per floor
//! cell. 2D boxes are handled as a 1 x L floor, so one code path covers
//! both modes. An object placed at a position rests on the maximum column
//! height under its footprint, must fit under the box ceiling, and needs
//! strictly more than half of its bottom cells supported at exactly that
//! height. Placements therefore never overlap, never overhang more than
//! half, and are always reachable straight from above.

use crate::error::{Error, Result};
use crate::instance::{BoxSpec, Instance, ObjectDims, PackingOrder};
use serde::{Deserialize, Serialize};

/// A candidate or final placement coordinate. `y` is always 0 in 2D mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Position {
    pub x: u32,
    pub y: u32,
    /// Resting height: the object's bottom face sits at this level.
    pub z: u32,
}

impl Position {
    /// Lexicographic key (z, y, x); in 2D y is constant so this reduces
    /// to (z, x).
    pub fn key(&self) -> (u32, u32, u32) {
        (self.z, self.y, self.x)
    }
}

/// Column heights over a box floor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightMap {
    box_spec: BoxSpec,
    floor_l: u32,
    floor_w: u32,
    ceiling: u32,
    /// Row-major: index = y * floor_l + x.
    cells: Vec<u32>,
}

impl HeightMap {
    /// Empty map (all zeros) for the given box.
    pub fn new(box_spec: &BoxSpec) -> Self {
        let (l, w) = box_spec.floor();
        Self {
            box_spec: box_spec.clone(),
            floor_l: l,
            floor_w: w,
            ceiling: box_spec.height(),
            cells: vec![0; (l * w) as usize],
        }
    }

    /// Builds a 2D map from explicit column heights; for tests and tools.
    pub fn from_columns(box_spec: &BoxSpec, columns: &[u32]) -> Result<Self> {
        if box_spec.m() != 2 {
            return Err(Error::Contract("column count must equal the 2D box length".into()));
        }
        Self::from_cells(box_spec, columns)
    }

    /// Builds a map of any dimensionality from explicit cell heights,
    /// row-major over y then x.
    pub fn from_cells(box_spec: &BoxSpec, cells: &[u32]) -> Result<Self> {
        let mut map = Self::new(box_spec);
        if cells.len() != map.cells.len() {
            return Err(Error::Contract(format!(
                "expected {} cells for this box, got {}",
                map.cells.len(),
                cells.len()
            )));
        }
        if cells.iter().any(|&h| h > map.ceiling) {
            return Err(Error::Contract("cell height exceeds box height".into()));
        }
        map.cells.copy_from_slice(cells);
        Ok(map)
    }

    pub fn box_spec(&self) -> &BoxSpec {
        &self.box_spec
    }

    /// Floor extents (L, W); W = 1 in 2D mode.
    pub fn floor(&self) -> (u32, u32) {
        (self.floor_l, self.floor_w)
    }

    pub fn height_at(&self, x: u32, y: u32) -> u32 {
        self.cells[(y * self.floor_l + x) as usize]
    }

    /// All column heights, row-major over y then x. In 2D this is the
    /// length-L array itself.
    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    pub fn max_height(&self) -> u32 {
        self.cells.iter().copied().max().unwrap_or(0)
    }

    /// Sum of all column heights: the occupied-silhouette volume.
    pub fn surface_sum(&self) -> u64 {
        self.cells.iter().map(|&h| h as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(|&h| h == 0)
    }

    /// Every floor coordinate where `obj` can rest: footprint in bounds,
    /// top face under the ceiling, and strictly more than 50% of the
    /// bottom cells supported at the resting height.
    pub fn allowable_positions(&self, obj: &ObjectDims) -> Vec<Position> {
        let (l, w) = obj.footprint();
        let h = obj.height();
        let mut out = Vec::new();
        if l > self.floor_l || w > self.floor_w {
            return out;
        }
        let footprint_cells = (l * w) as u64;
        for y in 0..=(self.floor_w - w) {
            for x in 0..=(self.floor_l - l) {
                let mut rest = 0u32;
                for yy in y..y + w {
                    let row = (yy * self.floor_l) as usize;
                    for xx in x..x + l {
                        rest = rest.max(self.cells[row + xx as usize]);
                    }
                }
                if rest + h > self.ceiling {
                    continue;
                }
                let mut supported = 0u64;
                for yy in y..y + w {
                    let row = (yy * self.floor_l) as usize;
                    for xx in x..x + l {
                        if self.cells[row + xx as usize] == rest {
                            supported += 1;
                        }
                    }
                }
                if 2 * supported > footprint_cells {
                    out.push(Position { x, y, z: rest });
                }
            }
        }
        out
    }

    /// Raises every footprint cell to `pos.z + obj.height()`. The position
    /// must come from [`Self::allowable_positions`]; anything else is a
    /// caller bug.
    pub fn place(&mut self, obj: &ObjectDims, pos: Position) -> Result<()> {
        let (l, w) = obj.footprint();
        let top = pos.z + obj.height();
        if pos.x + l > self.floor_l || pos.y + w > self.floor_w || top > self.ceiling {
            return Err(Error::Contract(format!(
                "placement at ({}, {}, {}) out of bounds",
                pos.x, pos.y, pos.z
            )));
        }
        for yy in pos.y..pos.y + w {
            let row = (yy * self.floor_l) as usize;
            for xx in pos.x..pos.x + l {
                let cell = &mut self.cells[row + xx as usize];
                if *cell > pos.z {
                    return Err(Error::Contract(format!(
                        "column ({xx}, {yy}) already higher than resting level {}",
                        pos.z
                    )));
                }
                *cell = top;
            }
        }
        Ok(())
    }
}

/// Picks the target among allowable positions: lexicographic minimum by
/// (z, y, x), which in 2D reduces to (z, x). Returns `None` on empty input.
pub fn select_target(positions: &[Position]) -> Option<Position> {
    positions.iter().copied().min_by_key(Position::key)
}

/// One object placed in one box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    /// Index into the instance's object list.
    pub object_index: usize,
    /// Box index in order of opening, 0-based.
    pub box_index: usize,
    pub position: Position,
}

/// The outcome of packing every object of an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingResult {
    /// One entry per object, in packing order.
    pub placements: Vec<Placement>,
    /// Final height map of each opened box.
    pub height_maps: Vec<HeightMap>,
}

impl PackingResult {
    pub fn boxes_used(&self) -> usize {
        self.height_maps.len()
    }
}

/// Packs objects in the given order. Open boxes are scanned in opening
/// order and the object goes to the first box that admits it (first-fit);
/// a new box is opened when none does. Deterministic.
pub fn pack_sequence(instance: &Instance, order: &PackingOrder) -> Result<PackingResult> {
    if order.len() != instance.len() {
        return Err(Error::Contract(format!(
            "order length {} does not match instance size {}",
            order.len(),
            instance.len()
        )));
    }
    for (i, obj) in instance.objects().iter().enumerate() {
        if !instance.box_spec().admits(obj) {
            return Err(Error::Instance(format!(
                "object {i} with dims {:?} violates the half-box constraint",
                obj.dims()
            )));
        }
    }

    let mut boxes: Vec<HeightMap> = Vec::new();
    let mut placements = Vec::with_capacity(instance.len());
    for &obj_idx in order.indices() {
        let obj = &instance.objects()[obj_idx];
        let mut placed = false;
        for (box_idx, hmap) in boxes.iter_mut().enumerate() {
            let candidates = hmap.allowable_positions(obj);
            if let Some(target) = select_target(&candidates) {
                hmap.place(obj, target)?;
                placements.push(Placement { object_index: obj_idx, box_index: box_idx, position: target });
                placed = true;
                break;
            }
        }
        if !placed {
            let mut hmap = HeightMap::new(instance.box_spec());
            let candidates = hmap.allowable_positions(obj);
            let target = select_target(&candidates).ok_or_else(|| {
                Error::Contract(format!(
                    "object {obj_idx} does not fit an empty box; instance validation failed"
                ))
            })?;
            hmap.place(obj, target)?;
            placements.push(Placement {
                object_index: obj_idx,
                box_index: boxes.len(),
                position: target,
            });
            boxes.push(hmap);
        }
    }
    Ok(PackingResult { placements, height_maps: boxes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::BoxSpec;

    fn box_2d(l: u32, h: u32) -> BoxSpec {
        BoxSpec::new(vec![l, h]).unwrap()
    }

    fn obj(dims: &[u32]) -> ObjectDims {
        ObjectDims::new(dims.to_vec()).unwrap()
    }

    fn positions_2d(map: &HeightMap, o: &ObjectDims) -> Vec<(u32, u32)> {
        map.allowable_positions(o).iter().map(|p| (p.x, p.z)).collect()
    }

    #[test]
    fn allowable_positions_on_stepped_map() {
        // Columns [5,5,3,2,2] in a 5-wide, 10-high box; a 2-wide object
        // can rest on the plateau at height 5 or on the ledge at height 2.
        let map = HeightMap::from_columns(&box_2d(5, 10), &[5, 5, 3, 2, 2]).unwrap();
        let got = positions_2d(&map, &obj(&[2, 1]));
        assert_eq!(got, vec![(0, 5), (3, 2)]);
    }

    #[test]
    fn allowable_positions_on_reversed_step() {
        let map = HeightMap::from_columns(&box_2d(5, 10), &[5, 5, 2, 3, 3]).unwrap();
        let got = positions_2d(&map, &obj(&[2, 1]));
        assert_eq!(got, vec![(0, 5), (3, 3)]);
    }

    #[test]
    fn flat_floor_admits_every_in_bounds_x() {
        let map = HeightMap::new(&box_2d(10, 10));
        let got = positions_2d(&map, &obj(&[3, 4]));
        let expected: Vec<(u32, u32)> = (0..=7).map(|x| (x, 0)).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn ceiling_rules_out_tall_rests() {
        // Resting the 2x5 object on the plateau would top out at 10 > 9.
        let map = HeightMap::from_columns(&box_2d(5, 9), &[5, 5, 3, 2, 2]).unwrap();
        let got = positions_2d(&map, &obj(&[2, 5]));
        assert_eq!(got, vec![(3, 2)]);
    }

    #[test]
    fn half_support_is_rejected() {
        // A 4-wide object over columns [3,0,0,3] has exactly 50% support.
        let map = HeightMap::from_columns(&box_2d(4, 10), &[3, 0, 0, 3]).unwrap();
        assert!(positions_2d(&map, &obj(&[4, 2])).is_empty());
    }

    #[test]
    fn target_prefers_low_z_then_low_x() {
        let set = vec![Position { x: 0, y: 0, z: 5 }, Position { x: 3, y: 0, z: 2 }];
        assert_eq!(select_target(&set), Some(Position { x: 3, y: 0, z: 2 }));

        let tie = vec![Position { x: 4, y: 0, z: 0 }, Position { x: 1, y: 0, z: 0 }];
        assert_eq!(select_target(&tie), Some(Position { x: 1, y: 0, z: 0 }));

        assert_eq!(select_target(&[]), None);
    }

    #[test]
    fn target_3d_orders_z_then_y_then_x() {
        let set = vec![
            Position { x: 2, y: 0, z: 3 },
            Position { x: 0, y: 1, z: 3 },
            Position { x: 4, y: 4, z: 2 },
        ];
        assert_eq!(select_target(&set), Some(Position { x: 4, y: 4, z: 2 }));
    }

    #[test]
    fn place_updates_footprint_only() {
        let mut map = HeightMap::new(&box_2d(5, 10));
        map.place(&obj(&[2, 3]), Position { x: 0, y: 0, z: 0 }).unwrap();
        assert_eq!(map.cells(), &[3, 3, 0, 0, 0]);

        let mut map = HeightMap::from_columns(&box_2d(5, 10), &[5, 5, 3, 2, 2]).unwrap();
        map.place(&obj(&[2, 1]), Position { x: 3, y: 0, z: 2 }).unwrap();
        assert_eq!(map.cells(), &[5, 5, 3, 3, 3]);
    }

    #[test]
    fn place_3d_slab_fills_floor() {
        let bx = BoxSpec::new(vec![10, 10, 10]).unwrap();
        let mut map = HeightMap::new(&bx);
        // A full-floor slab is a valid direct placement even though it
        // exceeds the generator's half-box rule.
        let slab = obj(&[10, 10, 4]);
        map.place(&slab, Position { x: 0, y: 0, z: 0 }).unwrap();
        assert!(map.cells().iter().all(|&h| h == 4));
    }

    #[test]
    fn place_rejects_out_of_contract_positions() {
        let mut map = HeightMap::from_columns(&box_2d(5, 10), &[5, 5, 3, 2, 2]).unwrap();
        // Resting level below an existing column is a caller bug.
        let err = map.place(&obj(&[2, 1]), Position { x: 1, y: 0, z: 2 });
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn perfect_tiling_uses_two_boxes() {
        // Eight 5x5 squares tile two 10x10 boxes exactly.
        let inst =
            crate::instance::Instance::new("tiling", box_2d(10, 10), vec![obj(&[5, 5]); 8])
                .unwrap();
        let result = pack_sequence(&inst, &PackingOrder::identity(8)).unwrap();
        assert_eq!(result.boxes_used(), 2);
        for map in &result.height_maps {
            assert!(map.cells().iter().all(|&h| h == 10));
        }
    }

    #[test]
    fn single_object_goes_to_origin() {
        let inst =
            crate::instance::Instance::new("one", box_2d(10, 10), vec![obj(&[3, 3])]).unwrap();
        let result = pack_sequence(&inst, &PackingOrder::identity(1)).unwrap();
        assert_eq!(result.boxes_used(), 1);
        assert_eq!(result.placements[0].position, Position { x: 0, y: 0, z: 0 });
    }

    #[test]
    fn pack_is_deterministic() {
        let cfg = crate::instance::GenConfig::default_2d(17);
        let inst = crate::instance::generate_instance(&cfg).unwrap();
        let order = PackingOrder::identity(inst.len());
        let a = pack_sequence(&inst, &order).unwrap();
        let b = pack_sequence(&inst, &order).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn heights_never_decrease_during_packing() {
        let cfg = crate::instance::GenConfig::default_3d(3);
        let inst = crate::instance::generate_instance(&cfg).unwrap();
        let order = PackingOrder::identity(inst.len());

        // Replay one placement at a time, snapshotting each box map.
        let mut boxes: Vec<HeightMap> = Vec::new();
        let result = pack_sequence(&inst, &order).unwrap();
        for pl in &result.placements {
            while boxes.len() <= pl.box_index {
                boxes.push(HeightMap::new(inst.box_spec()));
            }
            let before = boxes[pl.box_index].cells().to_vec();
            boxes[pl.box_index]
                .place(&inst.objects()[pl.object_index], pl.position)
                .unwrap();
            let after = boxes[pl.box_index].cells();
            assert!(before.iter().zip(after).all(|(b, a)| a >= b));
        }
        assert_eq!(boxes, result.height_maps);
    }
}
