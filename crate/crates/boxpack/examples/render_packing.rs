//! Packs one 2D and one 3D instance and writes an SVG per used box:
//! labeled rectangles for 2D, top/front/side orthographic panels for 3D.
//!
//! ```sh
//! cargo run --example render_packing -- --out /tmp/boxpack-svg
//! ```

use boxpack::baselines::bbox_seq_order;
use boxpack::dataset::ResultRecord;
use boxpack::instance::{generate_dataset, GenConfig};
use boxpack::placement::pack_sequence;
use boxpack::render::render_record;
use clap::Parser;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(about = "Render packed boxes to SVG files")]
struct Args {
    #[arg(long, default_value_t = 31)]
    seed: u64,

    #[arg(long, default_value = "/tmp/boxpack-svg")]
    out: PathBuf,
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args = Args::parse();
    std::fs::create_dir_all(&args.out)?;

    for gen in [GenConfig::default_2d(args.seed), GenConfig::default_3d(args.seed)] {
        let inst = generate_dataset(&gen, 1)?.into_iter().next().unwrap();
        let result = pack_sequence(&inst, &bbox_seq_order(&inst))?;
        let record = ResultRecord::from_packing(&inst, &result);
        for (k, svg) in render_record(&record)?.iter().enumerate() {
            let path = args.out.join(format!("{}d-{}-box{k}.svg", gen.m, record.id));
            std::fs::write(&path, svg)?;
            println!("{}", path.display());
        }
    }
    println!("open the files above in a browser to inspect the layouts");
    Ok(())
}
