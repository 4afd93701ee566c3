//! Generates a dataset, writes it to disk, reads it back, and prints a
//! few instances with summary statistics.
//!
//! ```sh
//! cargo run --example generate_dataset -- --mode 3d --count 500 --seed 11
//! ```

use boxpack::dataset::{read_dataset, write_dataset};
use boxpack::instance::{generate_dataset, GenConfig};
use clap::Parser;

#[derive(Parser, Debug)]
#[command(about = "Generate random packing instances")]
struct Args {
    /// 2d or 3d.
    #[arg(long, default_value = "2d")]
    mode: String,

    #[arg(long, default_value_t = 500)]
    count: usize,

    #[arg(long, default_value_t = 11)]
    seed: u64,

    /// Where to write the dataset.
    #[arg(long, default_value = "/tmp/boxpack-dataset.jsonl")]
    out: std::path::PathBuf,
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args = Args::parse();
    let gen = match args.mode.as_str() {
        "2d" => GenConfig::default_2d(args.seed),
        "3d" => GenConfig::default_3d(args.seed),
        other => return Err(format!("unknown mode {other:?}").into()),
    };

    let instances = generate_dataset(&gen, args.count)?;
    write_dataset(&instances, &args.out)?;
    let back = read_dataset(&args.out)?;
    assert_eq!(instances, back);

    println!(
        "{} instances of {} objects each, dims {}..={}, box {:?}",
        back.len(),
        gen.n,
        gen.dim_low,
        gen.dim_high,
        gen.box_dims
    );
    println!("first two records:");
    for inst in back.iter().take(2) {
        let dims: Vec<_> = inst.objects().iter().map(|o| o.dims().to_vec()).collect();
        println!("  {}: {:?}", inst.id(), dims);
    }

    // Volume statistics say how tightly a typical instance could ever pack.
    let box_volume: f64 =
        back[0].box_spec().dims().iter().map(|&d| d as f64).product();
    let mean_volume: f64 =
        back.iter().map(|i| i.objects().iter().map(|o| o.volume()).sum::<u64>() as f64).sum::<f64>()
            / back.len() as f64;
    println!(
        "mean object volume per instance {:.1} = {:.2} boxes' worth",
        mean_volume,
        mean_volume / box_volume
    );
    println!("dataset written to {}", args.out.display());
    Ok(())
}
