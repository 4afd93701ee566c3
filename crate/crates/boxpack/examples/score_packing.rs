//! Scores the same instance packed in two different orders, showing how
//! compactness, pyramid, and the combined penalty react to order choice.
//!
//! ```sh
//! cargo run --example score_packing -- --seed 21
//! ```

use boxpack::baselines::bbox_seq_order;
use boxpack::instance::{generate_dataset, GenConfig, PackingOrder};
use boxpack::metrics::{evaluate, RewardConfig};
use boxpack::placement::pack_sequence;
use clap::Parser;

#[derive(Parser, Debug)]
#[command(about = "Compare packing metrics for two orders of one instance")]
struct Args {
    #[arg(long, default_value_t = 21)]
    seed: u64,
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args = Args::parse();
    let gen = GenConfig { n: 20, ..GenConfig::default_2d(args.seed) };
    let inst = generate_dataset(&gen, 1)?.into_iter().next().unwrap();
    let reward = RewardConfig::default();

    for (name, order) in [
        ("index order", PackingOrder::identity(inst.len())),
        ("biggest first", bbox_seq_order(&inst)),
    ] {
        let result = pack_sequence(&inst, &order)?;
        let metrics = evaluate(&inst, &result)?;
        println!("{name}:");
        for (k, bm) in metrics.per_box.iter().enumerate() {
            println!("  box {k}: compactness {:.3}  pyramid {:.3}", bm.compactness, bm.pyramid);
        }
        println!(
            "  {} boxes, mean compactness {:.3}, mean pyramid {:.3}, penalty {:.3}",
            metrics.boxes_used,
            metrics.avg_compactness,
            metrics.avg_pyramid,
            metrics.cost(&reward)
        );
    }

    println!(
        "\npenalty = {} * ({} * (1 - mean compactness) + {} * (1 - mean pyramid))",
        reward.scale, reward.compactness_weight, reward.pyramid_weight
    );
    Ok(())
}
