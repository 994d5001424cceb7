// Train the small classifier with each optimizer at its default settings.

use padam::harness::{run_on, RunSpec, Schedule};
use padam::optim::OptimizerSpec;
use padam::problems::{make_mlp, ProblemSpec};

pub fn run_example() -> padam::Result<()> {
    let mlp = make_mlp(0);
    for name in ["padam", "sgdm", "adam", "amsgrad"] {
        let optimizer = OptimizerSpec::from_name(name)?;
        let lr = optimizer.default_lr();
        let spec = RunSpec::new(ProblemSpec::Mlp { task_seed: 0 }, optimizer, Schedule::constant(lr), 300, 0);
        let trace = run_on(&mlp, &spec)?;
        let first = trace.records[0].loss;
        let last = trace.last().map_or(f64::NAN, |r| r.loss);
        println!("{name:<8} lr {lr:<6} loss {first:.4} -> {last:.4}");
    }
    Ok(())
}

fn main() -> padam::Result<()> {
    run_example()
}
