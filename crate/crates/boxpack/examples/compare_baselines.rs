//! Benchmarks the conventional ordering strategies on freshly generated
//! instances and prints a summary table.
//!
//! ```text
//! cargo run --release --example compare_baselines -- --mode 2d --count 1000
//! ```
//!
//! BRKGA is orders of magnitude slower than the one-shot orderings, so it
//! runs on a smaller slice of the dataset (`--brkga-count`, 0 disables).

use boxpack::baselines::{bbox_seq_order, brkga_order, random_order, BrkgaConfig};
use boxpack::{evaluate, pack_sequence, GenConfig, Instance, PackingOrder, RewardConfig};
use clap::Parser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

#[derive(Parser)]
struct Args {
    /// Problem dimensionality: "2d" or "3d".
    #[arg(long, default_value = "2d")]
    mode: String,
    /// Number of test instances.
    #[arg(long, default_value_t = 1000)]
    count: usize,
    /// Dataset seed.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Instances given to the evolutionary search (prefix of the dataset).
    #[arg(long, default_value_t = 50)]
    brkga_count: usize,
}

struct Row {
    name: &'static str,
    avg_compactness: f64,
    avg_pyramid: f64,
    avg_boxes: f64,
    avg_cost: f64,
    latency_ms: f64,
    instances: usize,
}

fn summarize(
    name: &'static str,
    instances: &[Instance],
    mut order_for: impl FnMut(usize, &Instance) -> PackingOrder,
) -> Row {
    let reward = RewardConfig::default();
    let (mut c, mut p, mut b, mut cost) = (0.0, 0.0, 0.0, 0.0);
    let start = Instant::now();
    for (i, inst) in instances.iter().enumerate() {
        let order = order_for(i, inst);
        let result = pack_sequence(inst, &order).expect("generated instances always pack");
        let m = evaluate(inst, &result).expect("packed boxes are non-empty");
        c += m.avg_compactness;
        p += m.avg_pyramid;
        b += m.boxes_used as f64;
        cost += m.cost(&reward);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let n = instances.len() as f64;
    Row {
        name,
        avg_compactness: c / n,
        avg_pyramid: p / n,
        avg_boxes: b / n,
        avg_cost: cost / n,
        latency_ms: elapsed * 1000.0 / n,
        instances: instances.len(),
    }
}

fn main() {
    let args = Args::parse();
    let gen = match args.mode.as_str() {
        "2d" => GenConfig::default_2d(args.seed),
        "3d" => GenConfig::default_3d(args.seed),
        other => {
            eprintln!("unknown mode {other:?}, expected 2d or 3d");
            std::process::exit(1);
        }
    };
    let instances = boxpack::instance::generate_dataset(&gen, args.count).expect("valid config");
    println!(
        "mode {} | {} instances | {} objects each | box {:?}",
        args.mode,
        instances.len(),
        gen.n,
        gen.box_dims
    );

    let mut rows = Vec::new();
    rows.push(summarize("random", &instances, |i, inst| {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ (i as u64).wrapping_mul(0x9e3779b97f4a7c15));
        random_order(inst.len(), &mut rng)
    }));
    rows.push(summarize("b-box seq", &instances, |_, inst| bbox_seq_order(inst)));

    if args.brkga_count > 0 {
        let slice = &instances[..args.brkga_count.min(instances.len())];
        let cfg = BrkgaConfig::default();
        let reward = RewardConfig::default();
        rows.push(summarize("brkga", slice, |i, inst| {
            brkga_order(inst, &cfg, &reward, args.seed ^ (i as u64)).expect("brkga runs").best_order
        }));
    }

    println!(
        "{:<10} {:>6} {:>8} {:>8} {:>8} {:>8} {:>12}",
        "strategy", "inst", "C", "P", "boxes", "cost", "ms/inst"
    );
    for r in &rows {
        println!(
            "{:<10} {:>6} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>12.3}",
            r.name, r.instances, r.avg_compactness, r.avg_pyramid, r.avg_boxes, r.avg_cost, r.latency_ms
        );
    }
}
