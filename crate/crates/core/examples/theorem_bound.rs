// Compare the Monte-Carlo estimate of E||grad f(x_out)||^2 with the
// nonconvex convergence bound on a noisy quadratic.

use padam::optim::PadamConfig;
use padam::problems::{NoiseSpec, ProblemSpec};
use padam::theory::{verify_theorem, TheoremSetup};

pub fn run_example() -> padam::Result<()> {
    let problem = ProblemSpec::Quadratic {
        dim: 10,
        condition_number: 10.0,
        noise: NoiseSpec::gaussian(0.5),
    };
    for steps in [100, 1000] {
        let report = verify_theorem(&TheoremSetup::new(problem.clone(), PadamConfig::vision(), steps, 20))?;
        println!(
            "T={steps:<5} {:?}: E|grad|^2 ~ {:.3e}, bound {:.3e} (ratio {:.1e}), alpha {:.4}, s {:.2}",
            report.status, report.empirical_lhs, report.bound_41, report.ratio, report.alpha, report.s
        );
    }
    Ok(())
}

fn main() -> padam::Result<()> {
    run_example()
}
