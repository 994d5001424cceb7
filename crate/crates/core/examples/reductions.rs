// Padam at the ends of its range: p = 1/2 is Amsgrad, p = 0 is heavy-ball
// SGD with the step size scaled by (1 - beta1).

use padam::cli::suites::trajectory_relative_error;
use padam::harness::{run, RunSpec, Schedule};
use padam::optim::{OptimizerSpec, PadamConfig, DEFAULT_EPSILON};
use padam::problems::{NoiseSpec, ProblemSpec};

pub fn run_example() -> padam::Result<()> {
    let rosen = ProblemSpec::Rosenbrock { dim: 10 };
    let half = OptimizerSpec::padam(PadamConfig::new(0.9, 0.999, 0.5, DEFAULT_EPSILON)?);
    let ams = OptimizerSpec::Amsgrad {
        beta1: 0.9,
        beta2: 0.999,
        epsilon: DEFAULT_EPSILON,
    };
    let a = run(&RunSpec::new(rosen.clone(), half, Schedule::constant(1e-3), 1000, 0).dense())?;
    let b = run(&RunSpec::new(rosen, ams, Schedule::constant(1e-3), 1000, 0).dense())?;
    println!("p=1/2 vs amsgrad: relative error {:.3e}", trajectory_relative_error(&a, &b)?);

    let quad = ProblemSpec::Quadratic {
        dim: 10,
        condition_number: 10.0,
        noise: NoiseSpec::gaussian(0.5),
    };
    let (alpha, beta1) = (0.01, 0.9);
    let zero = OptimizerSpec::padam(PadamConfig::new(beta1, 0.999, 0.0, DEFAULT_EPSILON)?);
    let sgdm = OptimizerSpec::Sgdm { momentum: beta1 };
    let a = run(&RunSpec::new(quad.clone(), zero, Schedule::constant(alpha), 10_000, 3).dense())?;
    let b = run(&RunSpec::new(quad, sgdm, Schedule::constant(alpha * (1.0 - beta1)), 10_000, 3).dense())?;
    println!("p=0 vs sgdm:      relative error {:.3e}", trajectory_relative_error(&a, &b)?);
    Ok(())
}

fn main() -> padam::Result<()> {
    run_example()
}
