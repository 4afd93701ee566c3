//! Conventional ordering strategies: random shuffles, volume-descending
//! order, and a biased random-key genetic algorithm over permutations.

use crate::error::{Error, Result};
use crate::instance::{Instance, PackingOrder};
use crate::metrics::RewardConfig;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Uniformly random packing order.
pub fn random_order<R: Rng>(n: usize, rng: &mut R) -> PackingOrder {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    PackingOrder::new(idx, n).expect("shuffled identity is a permutation")
}

/// Objects sorted by descending volume; equal volumes keep their index
/// order. Big pieces go down first, small ones fill the gaps.
pub fn bbox_seq_order(instance: &Instance) -> PackingOrder {
    let n = instance.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by_key(|&i| std::cmp::Reverse(instance.objects()[i].volume()));
    PackingOrder::new(idx, n).expect("sorted identity is a permutation")
}

/// Biased random-key genetic algorithm settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrkgaConfig {
    /// Individuals per generation; `None` picks `min(10 * n, 500)`.
    pub population: Option<usize>,
    /// Fraction of the population copied unchanged into the next
    /// generation, best first.
    pub elite_frac: f64,
    /// Fraction replaced by fresh random individuals each generation.
    pub mutant_frac: f64,
    /// Probability that a crossover gene comes from the elite parent.
    pub elite_inherit_prob: f64,
    pub generations: usize,
}

impl Default for BrkgaConfig {
    fn default() -> Self {
        Self {
            population: None,
            elite_frac: 0.2,
            mutant_frac: 0.15,
            elite_inherit_prob: 0.7,
            generations: 100,
        }
    }
}

impl BrkgaConfig {
    pub fn population_for(&self, n: usize) -> usize {
        self.population.unwrap_or_else(|| (10 * n).min(500))
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.elite_frac)
            || !(0.0..=1.0).contains(&self.mutant_frac)
            || self.elite_frac + self.mutant_frac >= 1.0
        {
            return Err(Error::Config(
                "elite and mutant fractions must fit inside one population".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.elite_inherit_prob) {
            return Err(Error::Config("elite inherit probability must be in [0, 1]".into()));
        }
        if self.generations == 0 {
            return Err(Error::Config("generations must be positive".into()));
        }
        Ok(())
    }
}

/// Sorting random keys ascending yields the permutation they encode;
/// equal keys resolve by index so decoding is total and deterministic.
pub fn decode_keys(keys: &[f64]) -> PackingOrder {
    let n = keys.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| keys[a].partial_cmp(&keys[b]).unwrap().then(a.cmp(&b)));
    PackingOrder::new(idx, n).expect("argsort of identity is a permutation")
}

/// Result of one evolutionary run.
#[derive(Debug, Clone)]
pub struct BrkgaOutcome {
    pub best_order: PackingOrder,
    pub best_cost: f64,
    /// Best cost seen up to and including each generation; entry 0 covers
    /// the initial random population.
    pub history: Vec<f64>,
    /// Objective evaluations performed.
    pub evaluations: usize,
}

/// Evolves random-key vectors of length `n` to minimize `objective`.
/// Deterministic for a given seed.
pub fn brkga_minimize<F>(
    n: usize,
    cfg: &BrkgaConfig,
    seed: u64,
    mut objective: F,
) -> Result<BrkgaOutcome>
where
    F: FnMut(&PackingOrder) -> Result<f64>,
{
    cfg.validate()?;
    if n == 0 {
        return Err(Error::Contract("cannot order an empty object list".into()));
    }
    let pop_size = cfg.population_for(n).max(2);
    let elite = ((pop_size as f64 * cfg.elite_frac) as usize).max(1);
    let mutants = (pop_size as f64 * cfg.mutant_frac) as usize;
    let offspring = pop_size - elite - mutants;

    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let fresh = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()
    };

    let mut evaluations = 0usize;
    let mut score = |keys: &[f64], evals: &mut usize| -> Result<(f64, PackingOrder)> {
        let order = decode_keys(keys);
        let cost = objective(&order)?;
        *evals += 1;
        Ok((cost, order))
    };

    // (cost, keys) pairs kept sorted ascending by cost, ties stable.
    let mut population: Vec<(f64, Vec<f64>)> = Vec::with_capacity(pop_size);
    for _ in 0..pop_size {
        let keys = fresh(&mut rng);
        let (cost, _) = score(&keys, &mut evaluations)?;
        population.push((cost, keys));
    }
    population.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut history = vec![population[0].0];
    for _ in 0..cfg.generations {
        let mut next: Vec<(f64, Vec<f64>)> = population[..elite].to_vec();
        for _ in 0..offspring {
            let e = rng.gen_range(0..elite);
            let o = rng.gen_range(elite..pop_size);
            let child: Vec<f64> = (0..n)
                .map(|g| {
                    if rng.gen_range(0.0..1.0) < cfg.elite_inherit_prob {
                        population[e].1[g]
                    } else {
                        population[o].1[g]
                    }
                })
                .collect();
            let (cost, _) = score(&child, &mut evaluations)?;
            next.push((cost, child));
        }
        for _ in 0..mutants {
            let keys = fresh(&mut rng);
            let (cost, _) = score(&keys, &mut evaluations)?;
            next.push((cost, keys));
        }
        next.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        population = next;
        history.push(population[0].0.min(*history.last().unwrap()));
    }

    let best_order = decode_keys(&population[0].1);
    Ok(BrkgaOutcome { best_order, best_cost: population[0].0, history, evaluations })
}

/// Evolves a packing order for `instance` against the packing cost.
pub fn brkga_order(
    instance: &Instance,
    cfg: &BrkgaConfig,
    reward: &RewardConfig,
    seed: u64,
) -> Result<BrkgaOutcome> {
    brkga_minimize(instance.len(), cfg, seed, |order| {
        crate::metrics::order_cost(instance, order, reward)
    })
}
