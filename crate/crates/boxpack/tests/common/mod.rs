//! Shared oracles for the integration suite. Everything here recomputes
//! results from first principles, without calling into the code paths
//! under test: the allowable-position oracle scans raw cell arrays, and
//! the replay verifier rasterizes placements into a voxel grid.

#![allow(dead_code)]

use boxpack::instance::Instance;
use boxpack::placement::PackingResult;
use std::collections::BTreeSet;

/// Literal rule-by-rule scan for every position where an (l, w, h) object
/// may rest on the raw height cells of an (L, W, H) box: footprint in
/// bounds, resting level = footprint maximum, top face under the ceiling,
/// strictly more than half the bottom cells level with the resting height.
pub fn oracle_allowable(
    cells: &[u32],
    floor_l: u32,
    floor_w: u32,
    ceiling: u32,
    l: u32,
    w: u32,
    h: u32,
) -> BTreeSet<(u32, u32, u32)> {
    let mut out = BTreeSet::new();
    if l > floor_l || w > floor_w {
        return out;
    }
    for y in 0..=(floor_w - w) {
        for x in 0..=(floor_l - l) {
            let mut z = 0u32;
            for yy in y..y + w {
                for xx in x..x + l {
                    z = z.max(cells[(yy * floor_l + xx) as usize]);
                }
            }
            if z + h > ceiling {
                continue;
            }
            let mut level = 0u32;
            for yy in y..y + w {
                for xx in x..x + l {
                    if cells[(yy * floor_l + xx) as usize] == z {
                        level += 1;
                    }
                }
            }
            if 2 * level > l * w {
                out.insert((x, y, z));
            }
        }
    }
    out
}

/// The target the engine must pick: lexicographic minimum (z, y, x).
pub fn oracle_target(allowed: &BTreeSet<(u32, u32, u32)>) -> Option<(u32, u32, u32)> {
    allowed.iter().min_by_key(|&&(x, y, z)| (z, y, x)).copied()
}

/// Replays a packing into an independent voxel grid, checking each
/// placement as it lands: containment, empty column above the resting
/// level (which covers both no-overlap and top-down reachability),
/// resting height equal to the footprint's column maximum, strict
/// majority support, and non-decreasing column heights. Afterwards the
/// grid's column maxima must equal the engine's final height maps.
pub fn verify_replay(inst: &Instance, result: &PackingResult) -> Result<(), String> {
    let spec = inst.box_spec();
    let (fl, fw) = spec.floor();
    let ceiling = spec.height();
    let boxes = result.placements.iter().map(|p| p.box_index + 1).max().unwrap_or(0);
    let mut voxels = vec![vec![false; (fl * fw * ceiling) as usize]; boxes];
    let vox = |x: u32, y: u32, z: u32| ((z * fw + y) * fl + x) as usize;

    for p in &result.placements {
        let obj = &inst.objects()[p.object_index];
        let (l, w) = obj.footprint();
        let h = obj.height();
        let (x, y, z) = (p.position.x, p.position.y, p.position.z);
        let ctx = format!("object {} in box {} at ({x},{y},{z})", p.object_index, p.box_index);

        if x + l > fl || y + w > fw || z + h > ceiling {
            return Err(format!("{ctx}: leaves the box"));
        }
        let grid = &mut voxels[p.box_index];

        let mut max_col = 0u32;
        let mut supported = 0u32;
        for yy in y..y + w {
            for xx in x..x + l {
                // Column height = one above the highest filled voxel.
                let mut col = 0u32;
                for zz in (0..ceiling).rev() {
                    if grid[vox(xx, yy, zz)] {
                        col = zz + 1;
                        break;
                    }
                }
                if col > z {
                    return Err(format!(
                        "{ctx}: column ({xx},{yy}) already reaches {col}, blocking descent"
                    ));
                }
                max_col = max_col.max(col);
                if col == z {
                    supported += 1;
                }
            }
        }
        if max_col != z {
            return Err(format!("{ctx}: rests at {z} but the footprint maximum is {max_col}"));
        }
        // At z = 0 every footprint cell counts as floor-supported, which
        // the col == z test already credits.
        if 2 * supported <= l * w {
            return Err(format!("{ctx}: only {supported} of {} cells supported", l * w));
        }
        for zz in z..z + h {
            for yy in y..y + w {
                for xx in x..x + l {
                    if grid[vox(xx, yy, zz)] {
                        return Err(format!("{ctx}: overlaps at ({xx},{yy},{zz})"));
                    }
                    grid[vox(xx, yy, zz)] = true;
                }
            }
        }
    }

    if result.height_maps.len() != boxes {
        return Err(format!(
            "{} height maps for {} used boxes",
            result.height_maps.len(),
            boxes
        ));
    }
    for (k, map) in result.height_maps.iter().enumerate() {
        for y in 0..fw {
            for x in 0..fl {
                let mut col = 0u32;
                for zz in (0..ceiling).rev() {
                    if voxels[k][vox(x, y, zz)] {
                        col = zz + 1;
                        break;
                    }
                }
                if map.height_at(x, y) != col {
                    return Err(format!(
                        "box {k} column ({x},{y}): engine says {}, replay says {col}",
                        map.height_at(x, y)
                    ));
                }
            }
        }
    }
    Ok(())
}

/// One-sided paired t-test: p-value for the hypothesis that the mean of
/// `diffs` is positive. Small p means the positive mean is significant.
pub fn paired_t_p_value(diffs: &[f64]) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let k = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / k;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let t = mean / (var / k).sqrt();
    let dist = StudentsT::new(0.0, 1.0, k - 1.0).expect("valid t distribution");
    1.0 - dist.cdf(t)
}
