//! Sample a bundled plant's synthetic surfaces onto a grid and write them as
//! a curve CSV.
//!
//! ```text
//! cargo run -p hydrolin --example export_curves -- francis 91 24 > curves.csv
//! ```

use hydrolin::curves::write_curve_csv;
use hydrolin::{BundledPlant, Curves};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let plant: BundledPlant = args
        .first()
        .map(String::as_str)
        .unwrap_or("francis")
        .parse()
        .expect("francis or kaplan");
    let nodes = |i: usize, d: usize| {
        args.get(i)
            .map(|s| s.parse().expect("node count"))
            .unwrap_or(d)
    };
    let Curves::Synthetic(syn) = plant.load().curves else {
        unreachable!("bundled plants are synthetic")
    };
    let set = syn
        .tabulate_uniform([nodes(1, 91), nodes(2, 24), nodes(3, 13)])
        .expect("tabulation");
    write_curve_csv(&set, std::io::stdout().lock()).expect("write");
}
