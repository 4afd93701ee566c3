//! Trains the pointer-network policy on the small 2D recipe and compares
//! the greedy-decoded policy against the Random and B-Box orderings on a
//! fresh held-out set.
//!
//! ```sh
//! cargo run --release --example train_policy -- --seed 7
//! ```

use boxpack::baselines::{bbox_seq_order, random_order};
use boxpack::instance::{generate_dataset, GenConfig};
use boxpack::metrics::order_cost;
use boxpack::policy::decode_greedy;
use boxpack::train::{train, TrainConfig, TrainRecord, TrainSinks};
use clap::Parser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(about = "Train the packing policy on the desk-scale 2D recipe")]
struct Args {
    /// Seed for datasets, initialization, and sampling.
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Objects per instance.
    #[arg(long)]
    n: Option<usize>,

    /// Training instances per epoch.
    #[arg(long)]
    train_size: Option<usize>,

    /// Number of epochs.
    #[arg(long)]
    epochs: Option<usize>,

    /// Hidden width of the policy.
    #[arg(long)]
    d_h: Option<usize>,

    /// Where to write per-epoch checkpoints and the training log.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Size of the held-out comparison set.
    #[arg(long, default_value_t = 1000)]
    holdout: usize,
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args = Args::parse();
    let mut cfg = TrainConfig::desk_2d(args.seed);
    if let Some(n) = args.n {
        cfg.gen.n = n;
    }
    if let Some(t) = args.train_size {
        cfg.train_size = t;
    }
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    if let Some(d) = args.d_h {
        cfg.d_h = d;
    }

    println!(
        "recipe: n={} d_h={} train={} val={} epochs={} batch={} lr={}",
        cfg.gen.n, cfg.d_h, cfg.train_size, cfg.val_size, cfg.epochs, cfg.batch_size,
        cfg.learning_rate
    );

    let (train_set, val_set) = cfg.make_datasets()?;
    let log_path = args.out.as_ref().map(|d| d.join("train.log"));
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
    }
    let sinks = TrainSinks {
        checkpoint_dir: args.out.as_deref(),
        log_path: log_path.as_deref(),
    };

    let start = Instant::now();
    let outcome = train(&cfg, &train_set, &val_set, sinks)?;
    let train_secs = start.elapsed().as_secs_f64();

    for rec in &outcome.log {
        match rec {
            TrainRecord::Update { epoch, batch, mean_penalty, mean_value, .. }
                if batch % 50 == 0 =>
            {
                println!(
                    "  epoch {epoch} batch {batch:4}  penalty {mean_penalty:.4}  value {mean_value:.4}"
                );
            }
            TrainRecord::Epoch { epoch, val_penalty } => {
                println!("epoch {epoch} done: greedy validation penalty {val_penalty:.4}");
            }
            _ => {}
        }
    }
    println!("trained in {train_secs:.1}s");

    // Held-out comparison on instances drawn outside the training stream.
    let holdout_gen = GenConfig { seed: args.seed ^ 0x401d, ..cfg.gen.clone() };
    let holdout = generate_dataset(&holdout_gen, args.holdout)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x5eed);
    let (mut c_policy, mut c_random, mut c_bbox) = (0.0, 0.0, 0.0);
    let mut wins = 0usize;
    for inst in &holdout {
        let p = order_cost(inst, &decode_greedy(inst, &outcome.model.actor)?.order, &cfg.reward)?;
        let r = order_cost(inst, &random_order(inst.len(), &mut rng), &cfg.reward)?;
        let b = order_cost(inst, &bbox_seq_order(inst), &cfg.reward)?;
        if p < r {
            wins += 1;
        }
        c_policy += p;
        c_random += r;
        c_bbox += b;
    }
    let k = holdout.len() as f64;
    println!("held-out mean penalty over {} instances:", holdout.len());
    println!("  policy (greedy)  {:.4}", c_policy / k);
    println!("  random           {:.4}", c_random / k);
    println!("  b-box seq        {:.4}", c_bbox / k);
    println!("  policy beats random on {wins}/{} instances", holdout.len());
    Ok(())
}
