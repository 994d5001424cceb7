// Drive the Padam update by hand on `f(x) = 0.5 * sum_i c_i x_i^2`.

use padam::optim::{init_state, padam_step, PadamConfig};
use padam::ParamVector;

pub fn run_example() -> padam::Result<()> {
    let curvature = [1.0, 10.0, 100.0];
    let cfg = PadamConfig::new(0.9, 0.999, 0.125, 1e-8)?;
    let mut state = init_state(curvature.len())?;
    let mut x = ParamVector::from(vec![1.0; 3]);
    for t in 1..=200 {
        let g = ParamVector::from_fn(3, |i| curvature[i] * x[i]);
        let (next, out) = padam_step(&state, &x, &g, 0.05, &cfg)?;
        if t == 1 || t % 50 == 0 {
            println!(
                "t={t:>3} x={:?} effective lr in [{:.4}, {:.4}]",
                out.new_x.as_slice(),
                out.effective_lr_min,
                out.effective_lr_max
            );
        }
        state = next;
        x = out.new_x;
    }
    let f: f64 = x.iter().zip(curvature).map(|(x, c)| 0.5 * c * x * x).sum();
    println!("final loss {f:.3e}");
    Ok(())
}

fn main() -> padam::Result<()> {
    run_example()
}
