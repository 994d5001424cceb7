// Final loss as a function of the partial-adaptivity exponent.

use padam::harness::{final_summary, repeat_runs, RunSpec, Schedule};
use padam::optim::{OptimizerSpec, PadamConfig};
use padam::problems::{NoiseSpec, ProblemSpec};

pub fn run_example() -> padam::Result<()> {
    let problem = ProblemSpec::Quadratic {
        dim: 20,
        condition_number: 100.0,
        noise: NoiseSpec::gaussian(0.1),
    };
    let built = problem.build()?;
    for p in [0.0, 0.0625, 0.125, 0.25, 0.5] {
        let cfg = PadamConfig::new(0.9, 0.999, p, 1e-8)?;
        let spec = RunSpec::new(problem.clone(), OptimizerSpec::padam(cfg), Schedule::constant(0.01), 2000, 0);
        let s = final_summary(&repeat_runs(built.as_ref(), &spec, 8)?);
        println!("p={p:<6} final loss {:.4e} +- {:.1e} ({} diverged)", s.loss_mean, s.loss_std, s.n_diverged);
    }
    Ok(())
}

fn main() -> padam::Result<()> {
    run_example()
}
