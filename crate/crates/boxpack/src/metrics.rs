//! Packing quality metrics and the scalar training cost.
//!
//! Two ratios are measured per box, both in (0, 1]:
//!
//! * compactness: object volume over the bounding slab `floor * max
//!   column height`; 1.0 means no wasted space below the tallest point,
//! * pyramid: object volume over the height-map sum; values below 1.0
//!   indicate voids buried under overhangs, unreachable from above.
//!
//! Averages over the boxes of one packing combine into a weighted cost
//! that reinforcement and evolutionary search both minimize.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::placement::{HeightMap, PackingResult};
use serde::{Deserialize, Serialize};

/// Weights for combining the two quality ratios into one cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    /// Multiplier applied to the weighted shortfall sum.
    pub scale: f64,
    /// Weight on `1 - avg_compactness`.
    pub compactness_weight: f64,
    /// Weight on `1 - avg_pyramid`.
    pub pyramid_weight: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { scale: 5.0, compactness_weight: 0.5, pyramid_weight: 0.5 }
    }
}

/// Quality ratios of a single box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxMetrics {
    pub compactness: f64,
    pub pyramid: f64,
}

/// Ratios for one box given the packed object volume inside it.
pub fn box_metrics(map: &HeightMap, packed_volume: u64) -> Result<BoxMetrics> {
    let max_h = map.max_height();
    let surface = map.surface_sum();
    if packed_volume == 0 || max_h == 0 || surface == 0 {
        return Err(Error::Contract("metrics require a non-empty box".into()));
    }
    let (l, w) = map.floor();
    let slab = (l as u64) * (w as u64) * (max_h as u64);
    Ok(BoxMetrics {
        compactness: packed_volume as f64 / slab as f64,
        pyramid: packed_volume as f64 / surface as f64,
    })
}

/// Aggregated metrics of a full packing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingMetrics {
    pub per_box: Vec<BoxMetrics>,
    pub avg_compactness: f64,
    pub avg_pyramid: f64,
    pub boxes_used: usize,
}

impl PackingMetrics {
    /// The scalar cost the optimizers minimize; lower is better and a
    /// perfect packing scores 0.
    pub fn cost(&self, cfg: &RewardConfig) -> f64 {
        cfg.scale
            * (cfg.compactness_weight * (1.0 - self.avg_compactness)
                + cfg.pyramid_weight * (1.0 - self.avg_pyramid))
    }
}

/// Metrics of a packing result against its instance.
pub fn evaluate(instance: &Instance, result: &PackingResult) -> Result<PackingMetrics> {
    if result.placements.len() != instance.len() {
        return Err(Error::Contract(format!(
            "packing has {} placements for {} objects",
            result.placements.len(),
            instance.len()
        )));
    }
    let mut volumes = vec![0u64; result.boxes_used()];
    for pl in &result.placements {
        volumes[pl.box_index] += instance.objects()[pl.object_index].volume();
    }
    let per_box: Vec<BoxMetrics> = result
        .height_maps
        .iter()
        .zip(&volumes)
        .map(|(map, &vol)| box_metrics(map, vol))
        .collect::<Result<_>>()?;
    let n = per_box.len() as f64;
    Ok(PackingMetrics {
        avg_compactness: per_box.iter().map(|b| b.compactness).sum::<f64>() / n,
        avg_pyramid: per_box.iter().map(|b| b.pyramid).sum::<f64>() / n,
        boxes_used: per_box.len(),
        per_box,
    })
}

/// Packs `instance` in `order` and returns the scalar cost. Shorthand
/// used by every search strategy as its objective.
pub fn order_cost(
    instance: &Instance,
    order: &crate::instance::PackingOrder,
    cfg: &RewardConfig,
) -> Result<f64> {
    let result = crate::placement::pack_sequence(instance, order)?;
    Ok(evaluate(instance, &result)?.cost(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{BoxSpec, Instance, ObjectDims, PackingOrder};
    use crate::placement::pack_sequence;

    fn obj(dims: &[u32]) -> ObjectDims {
        ObjectDims::new(dims.to_vec()).unwrap()
    }

    #[test]
    fn two_flat_objects_leave_top_corner_open() {
        let bx = BoxSpec::new(vec![10, 10]).unwrap();
        let inst = Instance::new("t", bx, vec![obj(&[5, 4]), obj(&[5, 2])]).unwrap();
        let result = pack_sequence(&inst, &PackingOrder::identity(2)).unwrap();
        assert_eq!(result.boxes_used(), 1);

        let m = evaluate(&inst, &result).unwrap();
        // Volumes 20 + 10 under a 10 x 4 slab; the map itself is filled.
        assert_eq!(m.avg_compactness, 0.75);
        assert_eq!(m.avg_pyramid, 1.0);
    }

    #[test]
    fn overhang_void_lowers_pyramid_only() {
        // Two 2x3 pillars with a gap, bridged by a 4x2 beam: the cell
        // under the beam becomes an unreachable void. Built directly on
        // the map since the beam is wider than half the box.
        let bx = BoxSpec::new(vec![5, 10]).unwrap();
        let pillar = obj(&[2, 3]);
        let beam = obj(&[4, 2]);
        let mut map = crate::placement::HeightMap::new(&bx);
        map.place(&pillar, crate::placement::Position { x: 0, y: 0, z: 0 }).unwrap();
        map.place(&pillar, crate::placement::Position { x: 3, y: 0, z: 0 }).unwrap();

        let candidates = map.allowable_positions(&beam);
        let target = crate::placement::select_target(&candidates).unwrap();
        assert_eq!(target, crate::placement::Position { x: 0, y: 0, z: 3 });
        map.place(&beam, target).unwrap();

        assert_eq!(map.cells(), &[5, 5, 5, 5, 3]);
        let m = box_metrics(&map, 20).unwrap();
        assert_eq!(m.pyramid, 20.0 / 23.0);
        assert_eq!(m.compactness, 20.0 / 25.0);
    }

    #[test]
    fn perfect_tiling_scores_zero_cost() {
        let bx = BoxSpec::new(vec![10, 10]).unwrap();
        let inst = Instance::new("p", bx, vec![obj(&[5, 5]); 8]).unwrap();
        let result = pack_sequence(&inst, &PackingOrder::identity(8)).unwrap();
        let m = evaluate(&inst, &result).unwrap();
        assert_eq!(m.avg_compactness, 1.0);
        assert_eq!(m.avg_pyramid, 1.0);
        assert_eq!(m.cost(&RewardConfig::default()), 0.0);
    }

    #[test]
    fn cost_weights_shortfalls() {
        let m = PackingMetrics {
            per_box: vec![],
            avg_compactness: 0.8,
            avg_pyramid: 0.9,
            boxes_used: 1,
        };
        let cost = m.cost(&RewardConfig::default());
        assert!((cost - 0.75).abs() < 1e-12);
    }

    #[test]
    fn metrics_stay_in_unit_interval_on_random_instances() {
        for seed in 0..20 {
            let cfg = crate::instance::GenConfig::default_3d(seed);
            let inst = crate::instance::generate_instance(&cfg).unwrap();
            let order = PackingOrder::identity(inst.len());
            let result = pack_sequence(&inst, &order).unwrap();
            let m = evaluate(&inst, &result).unwrap();
            for b in &m.per_box {
                assert!(b.compactness > 0.0 && b.compactness <= 1.0);
                assert!(b.pyramid > 0.0 && b.pyramid <= 1.0);
                // Any slab waste also shows up as silhouette waste.
                assert!(b.pyramid >= b.compactness - 1e-12);
            }
            let cost = m.cost(&RewardConfig::default());
            assert!((0.0..=5.0).contains(&cost));
        }
    }

    #[test]
    fn empty_box_is_rejected() {
        let bx = BoxSpec::new(vec![10, 10]).unwrap();
        let map = crate::placement::HeightMap::new(&bx);
        assert!(box_metrics(&map, 0).is_err());
    }
}
