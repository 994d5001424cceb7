// Check every built-in problem's analytic gradient against central
// finite differences.

use padam::cli::suites::{gradient_relative_error, oracle_problems, random_point};
use padam::problems::finite_diff_grad;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> padam::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for spec in oracle_problems() {
        let problem = spec.build()?;
        let x = random_point(problem.as_ref(), &mut rng);
        let exact = problem.exact_grad(&x);
        let fd = finite_diff_grad(problem.as_ref(), &x, 1e-5)?;
        println!("{:<14} d={:<4} relative error {:.2e}", spec.name(), problem.dim(), gradient_relative_error(&exact, &fd));
    }
    Ok(())
}

fn main() -> padam::Result<()> {
    run_example()
}
