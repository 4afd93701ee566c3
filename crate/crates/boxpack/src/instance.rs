//! Problem instances: objects, boxes, packing orders, and the random
//! instance generator.
//!
//! Everything lives on an integer grid. A 2D object is `[length, height]`,
//! a 3D object is `[length, width, height]`; the last entry is always the
//! vertical extent. Objects must fit within half the box along every axis,
//! which guarantees that an empty box always admits any object.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Dimensions of a single rectangular (2D) or cuboid (3D) object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectDims {
    dims: Vec<u32>,
}

impl ObjectDims {
    pub fn new(dims: Vec<u32>) -> Result<Self> {
        if dims.len() != 2 && dims.len() != 3 {
            return Err(Error::Config(format!(
                "object must have 2 or 3 dimensions, got {}",
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::Config("object dimensions must be >= 1".into()));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    /// Number of spatial dimensions (2 or 3).
    pub fn m(&self) -> usize {
        self.dims.len()
    }

    /// Floor footprint as (length, width); width is 1 in 2D.
    pub fn footprint(&self) -> (u32, u32) {
        match self.dims.len() {
            2 => (self.dims[0], 1),
            _ => (self.dims[0], self.dims[1]),
        }
    }

    /// Vertical extent.
    pub fn height(&self) -> u32 {
        *self.dims.last().unwrap()
    }

    /// Area (2D) or volume (3D): the product of all dimensions.
    pub fn volume(&self) -> u64 {
        self.dims.iter().map(|&d| d as u64).product()
    }
}

/// Shared box dimensions for an instance: `[L, H]` or `[L, W, H]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoxSpec {
    dims: Vec<u32>,
}

impl BoxSpec {
    pub fn new(dims: Vec<u32>) -> Result<Self> {
        if dims.len() != 2 && dims.len() != 3 {
            return Err(Error::Config(format!(
                "box must have 2 or 3 dimensions, got {}",
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::Config("box dimensions must be >= 1".into()));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn m(&self) -> usize {
        self.dims.len()
    }

    /// Floor extents as (L, W); W is 1 in 2D.
    pub fn floor(&self) -> (u32, u32) {
        match self.dims.len() {
            2 => (self.dims[0], 1),
            _ => (self.dims[0], self.dims[1]),
        }
    }

    /// Vertical capacity H.
    pub fn height(&self) -> u32 {
        *self.dims.last().unwrap()
    }

    /// Checks the half-box size constraint for one object.
    pub fn admits(&self, obj: &ObjectDims) -> bool {
        obj.m() == self.m() && obj.dims.iter().zip(&self.dims).all(|(&o, &b)| 2 * o <= b)
    }
}

/// A packing problem: `n` objects plus the box they are packed into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    id: String,
    box_spec: BoxSpec,
    objects: Vec<ObjectDims>,
}

impl Instance {
    /// Builds an instance, validating the half-box constraint for every object.
    pub fn new(id: impl Into<String>, box_spec: BoxSpec, objects: Vec<ObjectDims>) -> Result<Self> {
        if objects.is_empty() {
            return Err(Error::Instance("instance must contain at least one object".into()));
        }
        for (i, obj) in objects.iter().enumerate() {
            if obj.m() != box_spec.m() {
                return Err(Error::Instance(format!(
                    "object {} has {} dims but box has {}",
                    i,
                    obj.m(),
                    box_spec.m()
                )));
            }
            if !box_spec.admits(obj) {
                return Err(Error::Instance(format!(
                    "object {} with dims {:?} exceeds half the box {:?}",
                    i,
                    obj.dims(),
                    box_spec.dims()
                )));
            }
        }
        Ok(Self { id: id.into(), box_spec, objects })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn box_spec(&self) -> &BoxSpec {
        &self.box_spec
    }

    pub fn objects(&self) -> &[ObjectDims] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn m(&self) -> usize {
        self.box_spec.m()
    }
}

/// A permutation of `0..n` giving the order in which objects are packed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackingOrder {
    order: Vec<usize>,
}

impl PackingOrder {
    /// Validates that `order` is a permutation of `0..n`.
    pub fn new(order: Vec<usize>, n: usize) -> Result<Self> {
        if order.len() != n {
            return Err(Error::Contract(format!(
                "order has {} entries, instance has {} objects",
                order.len(),
                n
            )));
        }
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n || seen[i] {
                return Err(Error::Contract(format!("order is not a permutation of 0..{n}")));
            }
            seen[i] = true;
        }
        Ok(Self { order })
    }

    /// Identity order 0, 1, ..., n-1.
    pub fn identity(n: usize) -> Self {
        Self { order: (0..n).collect() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Configuration for the random instance generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Spatial dimensionality, 2 or 3.
    pub m: usize,
    /// Objects per instance.
    pub n: usize,
    /// Inclusive lower bound for every object dimension.
    pub dim_low: u32,
    /// Inclusive upper bound for every object dimension.
    pub dim_high: u32,
    /// Box dimensions shared by all boxes.
    pub box_dims: Vec<u32>,
    /// RNG seed; the generator is bit-for-bit reproducible per seed.
    pub seed: u64,
}

impl GenConfig {
    /// 2D defaults: 40 objects, dims 1-5, box (10, 10).
    pub fn default_2d(seed: u64) -> Self {
        Self { m: 2, n: 40, dim_low: 1, dim_high: 5, box_dims: vec![10, 10], seed }
    }

    /// 3D defaults: 70 objects, dims 2-5, box (10, 10, 10).
    pub fn default_3d(seed: u64) -> Self {
        Self { m: 3, n: 70, dim_low: 2, dim_high: 5, box_dims: vec![10, 10, 10], seed }
    }

    pub fn validate(&self) -> Result<BoxSpec> {
        if self.m != 2 && self.m != 3 {
            return Err(Error::Config(format!("m must be 2 or 3, got {}", self.m)));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if self.dim_low < 1 {
            return Err(Error::Config("dim_low must be >= 1".into()));
        }
        if self.dim_low > self.dim_high {
            return Err(Error::Config(format!(
                "dim_low {} exceeds dim_high {}",
                self.dim_low, self.dim_high
            )));
        }
        if self.box_dims.len() != self.m {
            return Err(Error::Config(format!(
                "box has {} dims but m = {}",
                self.box_dims.len(),
                self.m
            )));
        }
        let box_spec = BoxSpec::new(self.box_dims.clone())?;
        let min_side = *self.box_dims.iter().min().unwrap();
        if 2 * self.dim_high > min_side {
            return Err(Error::Config(format!(
                "dim_high {} violates the half-box rule for box {:?} (max allowed {})",
                self.dim_high,
                self.box_dims,
                min_side / 2
            )));
        }
        Ok(box_spec)
    }
}

/// Splitmix64-style mixer used to derive independent seed streams.
pub(crate) fn mix_seed(base: u64, words: &[u64]) -> u64 {
    let mut state = base ^ 0x9e37_79b9_7f4a_7c15;
    for &w in words {
        state = state.wrapping_add(w).wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        state = z ^ (z >> 31);
    }
    state
}

/// Generates one instance with every object dimension drawn independently
/// and uniformly from `[dim_low, dim_high]`. Deterministic per seed.
pub fn generate_instance(config: &GenConfig) -> Result<Instance> {
    let box_spec = config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let objects = draw_objects(config, &mut rng)?;
    Instance::new(format!("{}-0", config.seed), box_spec, objects)
}

/// Generates `count` instances. Instance `i` uses seed `mix(seed, i)` and
/// id `"<seed>-<i>"`, so datasets are reproducible and instances can be
/// regenerated individually.
pub fn generate_dataset(config: &GenConfig, count: usize) -> Result<Vec<Instance>> {
    let box_spec = config.validate()?;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, &[i as u64]));
        let objects = draw_objects(config, &mut rng)?;
        out.push(Instance::new(
            format!("{}-{}", config.seed, i),
            box_spec.clone(),
            objects,
        )?);
    }
    Ok(out)
}

fn draw_objects(config: &GenConfig, rng: &mut ChaCha8Rng) -> Result<Vec<ObjectDims>> {
    (0..config.n)
        .map(|_| {
            let dims = (0..config.m)
                .map(|_| rng.gen_range(config.dim_low..=config.dim_high))
                .collect();
            ObjectDims::new(dims)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_respects_range_and_count() {
        let cfg = GenConfig::default_2d(7);
        let inst = generate_instance(&cfg).unwrap();
        assert_eq!(inst.len(), 40);
        for obj in inst.objects() {
            assert_eq!(obj.m(), 2);
            assert!(obj.dims().iter().all(|&d| (1..=5).contains(&d)));
        }

        let cfg3 = GenConfig::default_3d(7);
        let inst3 = generate_instance(&cfg3).unwrap();
        assert_eq!(inst3.len(), 70);
        for obj in inst3.objects() {
            assert!(obj.dims().iter().all(|&d| (2..=5).contains(&d)));
        }
    }

    #[test]
    fn degenerate_uniform_range_is_constant() {
        let cfg = GenConfig {
            m: 2,
            n: 1,
            dim_low: 3,
            dim_high: 3,
            box_dims: vec![10, 10],
            seed: 991,
        };
        let inst = generate_instance(&cfg).unwrap();
        assert_eq!(inst.objects()[0].dims(), &[3, 3]);
    }

    #[test]
    fn generator_is_reproducible() {
        let cfg = GenConfig::default_3d(1234);
        let a = generate_instance(&cfg).unwrap();
        let b = generate_instance(&cfg).unwrap();
        assert_eq!(a, b);

        let da = generate_dataset(&cfg, 25).unwrap();
        let db = generate_dataset(&cfg, 25).unwrap();
        assert_eq!(da, db);
        // Distinct instances within a dataset.
        assert_ne!(da[0].objects(), da[1].objects());
    }

    #[test]
    fn generator_rejects_half_box_violation() {
        let cfg = GenConfig {
            m: 2,
            n: 10,
            dim_low: 1,
            dim_high: 6,
            box_dims: vec![10, 10],
            seed: 1,
        };
        assert!(matches!(generate_instance(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn dimension_frequencies_are_uniform() {
        // >= 1e5 samples; each value's frequency within 3 sigma of uniform.
        let cfg = GenConfig::default_2d(42);
        let instances = generate_dataset(&cfg, 1300).unwrap();
        let mut counts = [0u64; 5];
        let mut total = 0u64;
        for inst in &instances {
            for obj in inst.objects() {
                for &d in obj.dims() {
                    counts[(d - 1) as usize] += 1;
                    total += 1;
                }
            }
        }
        assert!(total >= 100_000);
        let p = 0.2;
        let sigma = (total as f64 * p * (1.0 - p)).sqrt();
        for &c in &counts {
            let dev = (c as f64 - total as f64 * p).abs();
            assert!(dev < 3.0 * sigma, "count {c} deviates more than 3 sigma ({dev} vs {sigma})");
        }
    }

    #[test]
    fn packing_order_validation() {
        assert!(PackingOrder::new(vec![2, 0, 1], 3).is_ok());
        assert!(PackingOrder::new(vec![0, 0, 1], 3).is_err());
        assert!(PackingOrder::new(vec![0, 1], 3).is_err());
        assert!(PackingOrder::new(vec![0, 3, 1], 3).is_err());
    }

    #[test]
    fn instance_rejects_oversized_objects() {
        let bx = BoxSpec::new(vec![10, 10]).unwrap();
        let objs = vec![ObjectDims::new(vec![6, 2]).unwrap()];
        assert!(Instance::new("t", bx, objs).is_err());
    }
}
