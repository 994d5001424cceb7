// Pathwise checks of the per-step inequalities behind the convergence proof.

use padam::harness::{run_on, RunSpec, Schedule};
use padam::optim::{OptimizerSpec, PadamConfig};
use padam::problems::{make_logistic, ProblemSpec};
use padam::theory::{default_q, lemma_suite};

pub fn run_example() -> padam::Result<()> {
    let problem = make_logistic(8, 400, 1)?;
    let cfg = PadamConfig::new(0.9, 0.999, 0.25, 1e-8)?;
    let spec = RunSpec::new(
        ProblemSpec::Logistic {
            dim: 8,
            n_samples: 400,
            seed: 1,
        },
        OptimizerSpec::padam(cfg),
        Schedule::constant(0.01),
        500,
        0,
    )
    .dense();
    let trace = run_on(&problem, &spec)?;
    for (name, check) in lemma_suite(&trace, &cfg, &problem, default_q(cfg.p))? {
        println!("{name:<18} {:?} margin {:.3e} ({})", check.status, check.worst_margin, check.note);
    }
    Ok(())
}

fn main() -> padam::Result<()> {
    run_example()
}
