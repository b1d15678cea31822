//! Reproduces the singular-information failure in the g-and-k run.

use dnc_im::contours::ContourKind;
use dnc_im::harness::{run_experiment, BlockPlan, ExperimentConfig};
use dnc_im::models::{ModelSpec, ParameterVector};

fn main() {
    let base = ExperimentConfig {
        name: "debug".into(),
        model: ModelSpec::GandK { c: 0.8 },
        truth: ParameterVector::new(vec![3.0, 1.0, 2.0, 0.5]),
        n: 200,
        blocks: BlockPlan { count: 4, sizes: None },
        m: 500,
        n_reps: 1,
        alphas: vec![0.1, 0.5, 0.9],
        contour_kinds: vec![
            ContourKind::ValidAnchored,
            ContourKind::ProfileMarginal,
            ContourKind::LargeN,
        ],
        master_seed: 42,
        output_dir: None,
        n_schedule: vec![],
    };
    // Bisection over replicate count to find the first failing replicate.
    for reps in [10usize, 20, 40, 80, 120, 160, 200] {
        let mut config = base.clone();
        config.n_reps = reps;
        match run_experiment(&config, Some(1)) {
            Ok(out) => println!("n_reps = {reps}: ok (skipped {})", out.table.skipped_replicates),
            Err(e) => {
                println!("n_reps = {reps}: ERR {e}");
                break;
            }
        }
    }
}
