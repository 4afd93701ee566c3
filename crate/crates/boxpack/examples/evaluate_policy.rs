//! Loads a trained checkpoint and pits greedy decoding against the
//! Random and B-Box orderings on freshly generated instances.
//!
//! Produce a checkpoint first, for instance:
//!
//! ```sh
//! cargo run --release --example train_policy -- --seed 7 --out /tmp/desk
//! cargo run --release --example evaluate_policy -- --checkpoint /tmp/desk/epoch-3.ckpt
//! ```

use boxpack::baselines::{bbox_seq_order, random_order};
use boxpack::checkpoint::load;
use boxpack::instance::{generate_dataset, GenConfig};
use boxpack::metrics::{order_cost, RewardConfig};
use boxpack::policy::decode_greedy;
use clap::Parser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(about = "Evaluate a trained policy checkpoint against baselines")]
struct Args {
    /// Checkpoint written by training.
    #[arg(long)]
    checkpoint: PathBuf,

    /// Objects per evaluation instance (should match the training n).
    #[arg(long, default_value_t = 10)]
    n: usize,

    #[arg(long, default_value_t = 1000)]
    count: usize,

    #[arg(long, default_value_t = 99)]
    seed: u64,
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args = Args::parse();
    let (model, state) = load(&args.checkpoint)?;
    match state {
        Some(s) => println!(
            "loaded {} ({} epochs, {} optimizer steps)",
            args.checkpoint.display(),
            s.epochs_done,
            s.updates_done
        ),
        None => println!("loaded {} (no trainer state)", args.checkpoint.display()),
    }

    let gen = if model.config.m == 2 {
        GenConfig { n: args.n, ..GenConfig::default_2d(args.seed) }
    } else {
        GenConfig { n: args.n, ..GenConfig::default_3d(args.seed) }
    };
    let instances = generate_dataset(&gen, args.count)?;
    let reward = RewardConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);

    let (mut policy, mut random, mut bbox) = (0.0, 0.0, 0.0);
    let mut policy_wins = 0usize;
    for inst in &instances {
        let p = order_cost(inst, &decode_greedy(inst, &model.actor)?.order, &reward)?;
        let r = order_cost(inst, &random_order(inst.len(), &mut rng), &reward)?;
        policy += p;
        random += r;
        bbox += order_cost(inst, &bbox_seq_order(inst), &reward)?;
        if p < r {
            policy_wins += 1;
        }
    }

    let k = instances.len() as f64;
    println!("mean penalty over {} fresh {}d instances (n={}):", instances.len(), gen.m, gen.n);
    println!("  policy (greedy)  {:.4}", policy / k);
    println!("  random           {:.4}", random / k);
    println!("  b-box seq        {:.4}", bbox / k);
    println!("  policy beats random on {policy_wins} of {}", instances.len());
    Ok(())
}
