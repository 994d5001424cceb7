// Write a trace as CSV plus JSON sidecar and read it back.

use padam::harness::{read_trace, run, sidecar_path, write_trace, RunSpec, Schedule};
use padam::optim::OptimizerSpec;
use padam::problems::ProblemSpec;

pub fn run_example() -> padam::Result<()> {
    let spec = RunSpec::new(
        ProblemSpec::Rosenbrock { dim: 4 },
        OptimizerSpec::from_name("padam")?,
        Schedule::multistage(0.01, vec![100, 150], 0.1),
        200,
        5,
    );
    let trace = run(&spec)?;
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("rosenbrock_padam_seed5.csv");
    write_trace(&trace, &path)?;
    let back = read_trace(&path)?;
    println!("wrote {} rows and {}", back.len(), sidecar_path(&path).display());
    println!("round trip exact: {}", back.records == trace.records);
    println!("sidecar optimizer {}, seed {}", back.meta.optimizer, back.meta.seed);
    Ok(())
}

fn main() -> padam::Result<()> {
    run_example()
}
