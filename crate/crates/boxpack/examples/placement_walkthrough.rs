//! Walks through the placement rules on small hand-checkable cases:
//! which positions admit an object, how ties are broken, and how the
//! height map evolves while a full instance is packed.
//!
//! ```sh
//! cargo run --example placement_walkthrough
//! ```

use boxpack::instance::{BoxSpec, Instance, ObjectDims, PackingOrder};
use boxpack::placement::{pack_sequence, select_target, HeightMap};

fn show_map(map: &HeightMap) -> String {
    let cells: Vec<String> = map.cells().iter().map(u32::to_string).collect();
    format!("[{}]", cells.join(" "))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A 2D box of width 5 whose column heights step down from left to
    // right. A length-2 object can rest where both supporting cells are
    // level, the footprint stays in bounds, and over half of the bottom
    // touches; positions failing any rule are absent.
    let spec = BoxSpec::new(vec![5, 9])?;
    let map = HeightMap::from_columns(&spec, &[5, 5, 3, 2, 2])?;
    let object = ObjectDims::new(vec![2, 2])?;
    let allowed = map.allowable_positions(&object);
    println!("columns {} admit a 2x2 object at:", show_map(&map));
    for pos in &allowed {
        println!("  x={} resting on z={}", pos.x, pos.z);
    }

    let target = select_target(&allowed).expect("at least one position");
    println!("target = lowest resting level, leftmost on ties: x={} z={}", target.x, target.z);

    let mut after = map.clone();
    after.place(&object, target)?;
    println!("after placing there: {}", show_map(&after));

    // Packing a whole instance: each object goes to its target in the
    // first box that admits it, and a new box opens when none does.
    let objects = [vec![4, 3], vec![4, 3], vec![2, 2], vec![5, 4], vec![3, 5], vec![4, 4]]
        .into_iter()
        .map(ObjectDims::new)
        .collect::<Result<Vec<_>, _>>()?;
    let inst = Instance::new("walkthrough", BoxSpec::new(vec![10, 10])?, objects)?;
    let order = PackingOrder::identity(inst.len());
    let result = pack_sequence(&inst, &order)?;

    println!("\npacking six objects into 10x10 boxes, in index order:");
    for p in &result.placements {
        println!(
            "  object {} ({:?}) -> box {} at x={} z={}",
            p.object_index,
            inst.objects()[p.object_index].dims(),
            p.box_index,
            p.position.x,
            p.position.z,
        );
    }
    for (k, map) in result.height_maps.iter().enumerate() {
        println!("  box {k} final columns {}", show_map(map));
    }
    Ok(())
}
