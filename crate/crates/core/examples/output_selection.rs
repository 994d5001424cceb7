// Draw the randomized output iterate with probability proportional to the
// step size.

use padam::harness::{output_weights, run, select_output, RunSpec, Schedule};
use padam::optim::{OptimizerSpec, PadamConfig};
use padam::problems::{NoiseSpec, ProblemSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> padam::Result<()> {
    let schedule = Schedule::inv_sqrt(0.1);
    let spec = RunSpec::new(
        ProblemSpec::Quadratic {
            dim: 5,
            condition_number: 10.0,
            noise: NoiseSpec::gaussian(0.2),
        },
        OptimizerSpec::padam(PadamConfig::vision()),
        schedule.clone(),
        100,
        0,
    )
    .dense();
    let trace = run(&spec)?;
    let weights = output_weights(&schedule, 100)?;
    println!("P(t=2) = {:.4}, P(t=100) = {:.4}", weights[0], weights[weights.len() - 1]);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..3 {
        let (t, x) = select_output(&trace, &schedule, &mut rng)?;
        println!("selected t={t:<3} |x|={:.4}", x.norm());
    }
    Ok(())
}

fn main() -> padam::Result<()> {
    run_example()
}
