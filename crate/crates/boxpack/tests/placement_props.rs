//! Property tests: packing invariants under randomized instances and
//! orders, placement-rule agreement with the brute-force oracle on
//! arbitrary height maps, distribution guarantees of the masked softmax,
//! serialization round trips, and search monotonicity.

mod common;

use boxpack::baselines::{bbox_seq_order, brkga_order, random_order, BrkgaConfig};
use boxpack::dataset::{
    instance_from_line, instance_to_line, result_from_line, result_to_line, ResultRecord,
};
use boxpack::instance::{generate_dataset, BoxSpec, GenConfig, ObjectDims, PackingOrder};
use boxpack::metrics::{evaluate, RewardConfig};
use boxpack::placement::{pack_sequence, select_target, HeightMap};
use boxpack::policy::{decode, masked_log_softmax, DecodeMode, Model, ModelConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Configs that satisfy the generator's half-box rule by construction.
fn gen_config() -> impl Strategy<Value = GenConfig> {
    (2usize..=3, 1usize..=12, 1u32..=4, any::<u64>()).prop_flat_map(|(m, n, dim_high, seed)| {
        let side = 2 * dim_high..=2 * dim_high + 4;
        (1u32..=dim_high, proptest::collection::vec(side, m)).prop_map(
            move |(dim_low, box_dims)| GenConfig { m, n, dim_low, dim_high, box_dims, seed },
        )
    })
}

/// Arbitrary height-map cells plus an object to place on them.
fn map_and_object() -> impl Strategy<Value = (u32, u32, u32, Vec<u32>, Vec<u32>)> {
    (1u32..=5, 1u32..=5, 1u32..=6).prop_flat_map(|(fl, fw, ceiling)| {
        (
            proptest::collection::vec(0..=ceiling, (fl * fw) as usize),
            1u32..=5,
            1u32..=5,
            1u32..=6,
        )
            .prop_map(move |(cells, l, w, h)| (fl, fw, ceiling, cells, vec![l, w, h]))
    })
}

proptest! {
    /// Any order over any valid instance packs without error and the
    /// packing survives the independent voxel replay; metrics stay in
    /// range and packing is deterministic.
    #[test]
    fn packings_replay_cleanly(cfg in gen_config(), order_seed in any::<u64>()) {
        let inst = generate_dataset(&cfg, 1).unwrap().into_iter().next().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(order_seed);
        for order in [random_order(inst.len(), &mut rng), bbox_seq_order(&inst)] {
            let result = pack_sequence(&inst, &order).unwrap();
            prop_assert!(common::verify_replay(&inst, &result).is_ok());

            let again = pack_sequence(&inst, &order).unwrap();
            let line = result_to_line(&ResultRecord::from_packing(&inst, &result));
            let line_again = result_to_line(&ResultRecord::from_packing(&inst, &again));
            prop_assert_eq!(line, line_again);

            let m = evaluate(&inst, &result).unwrap();
            prop_assert!(m.avg_compactness > 0.0 && m.avg_compactness <= 1.0 + 1e-12);
            prop_assert!(m.avg_pyramid > 0.0);
            prop_assert!(m.boxes_used >= 1);
            let cost = m.cost(&RewardConfig::default());
            prop_assert!(cost.is_finite() && cost >= 0.0);
        }
    }

    /// The placement rules agree with a literal scan of the rules on
    /// arbitrary (not just reachable-by-packing) height maps.
    #[test]
    fn allowable_positions_match_the_oracle(
        (fl, fw, ceiling, cells, obj_dims) in map_and_object(),
    ) {
        let spec = BoxSpec::new(vec![fl, fw, ceiling]).unwrap();
        let map = HeightMap::from_cells(&spec, &cells).unwrap();
        let obj = ObjectDims::new(obj_dims).unwrap();
        let (l, w) = obj.footprint();

        let expected = common::oracle_allowable(&cells, fl, fw, ceiling, l, w, obj.height());
        let positions = map.allowable_positions(&obj);
        let got: BTreeSet<(u32, u32, u32)> =
            positions.iter().map(|p| (p.x, p.y, p.z)).collect();
        prop_assert_eq!(positions.len(), got.len(), "duplicate positions returned");
        prop_assert_eq!(&got, &expected);

        let target = select_target(&positions).map(|p| (p.x, p.y, p.z));
        prop_assert_eq!(target, common::oracle_target(&expected));
    }

    /// The masked softmax either errors (everything masked) or returns an
    /// exact distribution over the unmasked entries, invariant to shifting
    /// all logits by a constant.
    #[test]
    fn masked_softmax_is_a_distribution(
        logits in proptest::collection::vec(-30.0f64..30.0, 1..=8),
        mask_bits in proptest::collection::vec(any::<bool>(), 8),
        shift in -50.0f64..50.0,
    ) {
        let mask: Vec<bool> = mask_bits.into_iter().take(logits.len()).collect();
        let res = masked_log_softmax(&logits, &mask);
        if mask.iter().all(|&m| m) {
            prop_assert!(res.is_err());
            return Ok(());
        }
        let lps = res.unwrap();
        let sum: f64 = lps
            .iter()
            .zip(&mask)
            .filter(|&(_, &m)| !m)
            .map(|(lp, _)| lp.exp())
            .sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12, "probabilities sum to {sum}");
        for (lp, &m) in lps.iter().zip(&mask) {
            if m {
                prop_assert_eq!(*lp, f64::NEG_INFINITY);
            } else {
                prop_assert!(*lp <= 1e-12, "log probability {lp} above zero");
            }
        }

        let shifted: Vec<f64> = logits.iter().map(|x| x + shift).collect();
        let lps_shifted = masked_log_softmax(&shifted, &mask).unwrap();
        for ((a, b), &m) in lps.iter().zip(&lps_shifted).zip(&mask) {
            if !m {
                prop_assert!((a - b).abs() <= 1e-9, "shift changed {a} to {b}");
            }
        }
    }

    /// Orders must be exact permutations; corrupting one entry into a
    /// duplicate is rejected.
    #[test]
    fn packing_order_rejects_non_permutations(n in 2usize..=10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let order = random_order(n, &mut rng);
        let mut indices: Vec<usize> = order.indices().to_vec();
        prop_assert!(PackingOrder::new(indices.clone(), n).is_ok());
        indices[0] = indices[n - 1];
        prop_assert!(PackingOrder::new(indices, n).is_err());
    }

    /// Instance and result lines survive a parse round trip byte for byte.
    #[test]
    fn jsonl_lines_round_trip(cfg in gen_config(), order_seed in any::<u64>()) {
        let inst = generate_dataset(&cfg, 1).unwrap().into_iter().next().unwrap();
        let line = instance_to_line(&inst);
        let back = instance_from_line(&line, 1).unwrap();
        prop_assert_eq!(&line, &instance_to_line(&back));

        let mut rng = ChaCha8Rng::seed_from_u64(order_seed);
        let result = pack_sequence(&inst, &random_order(inst.len(), &mut rng)).unwrap();
        let record = ResultRecord::from_packing(&inst, &result);
        let rline = result_to_line(&record);
        let rback = result_from_line(&rline, 1).unwrap();
        prop_assert_eq!(&rline, &result_to_line(&rback));
    }

    /// Sampled decoding of a freshly initialized model always yields a
    /// valid permutation with finite, non-positive step log probabilities.
    #[test]
    fn sampled_decodes_are_valid(
        cfg in gen_config(),
        d_h in 2usize..=6,
        init_seed in any::<u64>(),
        sample_seed in any::<u64>(),
    ) {
        let inst = generate_dataset(&cfg, 1).unwrap().into_iter().next().unwrap();
        let model = Model::init(ModelConfig { m: cfg.m, d_h, init_seed }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
        let trace = decode(&inst, &model.actor, DecodeMode::Sample, &mut rng).unwrap();
        prop_assert_eq!(trace.order.len(), inst.len());
        for &lp in &trace.step_log_probs {
            prop_assert!(lp.is_finite() && lp <= 1e-12);
        }
        prop_assert!(trace.total_log_prob().is_finite());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Best-so-far cost never rises across generations and the reported
    /// best matches the end of the history.
    #[test]
    fn brkga_history_is_monotone(n in 2usize..=5, seed in any::<u64>()) {
        let gen = GenConfig { n, ..GenConfig::default_2d(seed) };
        let inst = generate_dataset(&gen, 1).unwrap().into_iter().next().unwrap();
        let cfg = BrkgaConfig { generations: 25, ..BrkgaConfig::default() };
        let outcome = brkga_order(&inst, &cfg, &RewardConfig::default(), seed).unwrap();
        prop_assert_eq!(outcome.history.len(), cfg.generations + 1);
        for pair in outcome.history.windows(2) {
            prop_assert!(pair[1] <= pair[0]);
        }
        prop_assert_eq!(outcome.best_cost, *outcome.history.last().unwrap());
    }
}
