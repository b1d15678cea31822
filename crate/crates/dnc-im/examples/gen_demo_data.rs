//! Regenerates the committed demo block data under configs/demo/:
//! four alpha-stable blocks (alpha = 1.5, mu = 0, c = 0.5, beta = 0) and
//! four g-and-k blocks (mu = 3, sigma = 1, g = 2, k = 0.5, c = 0.8) of 50
//! observations each, from fixed seeds.

use dnc_im::io::write_dataset_csv;
use dnc_im::models::{sample, ModelSpec, ParameterVector};
use dnc_im::rng::{derive, tags};
use std::path::Path;

fn main() {
    let dir = Path::new("configs/demo");
    std::fs::create_dir_all(dir).unwrap();

    let stable = ModelSpec::AlphaStable { alpha: 1.5 };
    let stable_truth = ParameterVector::new(vec![0.0, 0.5, 0.0]);
    for b in 0..4u64 {
        let mut rng = derive(20240, &[tags::DATA, b]);
        let data = sample(&stable, &stable_truth, 50, &mut rng).unwrap();
        write_dataset_csv(&dir.join(format!("stable_block{}.csv", b + 1)), &data).unwrap();
    }

    let gk = ModelSpec::GandK { c: 0.8 };
    let gk_truth = ParameterVector::new(vec![3.0, 1.0, 2.0, 0.5]);
    for b in 0..4u64 {
        let mut rng = derive(20241, &[tags::DATA, b]);
        let data = sample(&gk, &gk_truth, 50, &mut rng).unwrap();
        write_dataset_csv(&dir.join(format!("gk_block{}.csv", b + 1)), &data).unwrap();
    }
    println!("wrote 8 block files under {}", dir.display());
}
