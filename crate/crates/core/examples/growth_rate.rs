// Estimate the gradient growth exponent s on sparse problems with
// different activation decay.

use padam::harness::{run_on, RunSpec, Schedule};
use padam::optim::{OptimizerSpec, PadamConfig};
use padam::problems::{make_sparse_growth, ProblemSpec, StochasticProblem};
use padam::theory::GrowthTracker;

pub fn run_example() -> padam::Result<()> {
    for decay in [1.0, 0.5, 0.0] {
        let problem = make_sparse_growth(20, 1.0, decay, 0)?;
        let spec = RunSpec::new(
            ProblemSpec::SparseGrowth(problem.params().clone()),
            OptimizerSpec::padam(PadamConfig::vision()),
            Schedule::constant(0.01),
            20_000,
            0,
        )
        .dense();
        let trace = run_on(&problem, &spec)?;
        let g_inf = problem.constants().g_inf.unwrap_or(1.0);
        let mut tracker = GrowthTracker::new(problem.dim(), g_inf)?;
        for g in &trace.dense.as_ref().expect("dense trace").g {
            tracker.push(g)?;
        }
        let est = tracker.finish()?;
        println!(
            "decay {decay}: target s {:.2}, fitted s {:.3}, s bound {:.3}",
            problem.params().target_growth(),
            est.fitted_s,
            est.s_bound
        );
    }
    Ok(())
}

fn main() -> padam::Result<()> {
    run_example()
}
