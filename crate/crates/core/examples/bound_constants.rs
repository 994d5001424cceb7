// Evaluate the bound constants directly from assumed problem quantities.

use padam::theory::{
    bound_rhs, corollary_bound, default_q, m_constants, optimal_alpha, AssumptionEstimates, BoundInputs,
    EstimateSource,
};

pub fn run_example() -> padam::Result<()> {
    let est = AssumptionEstimates {
        g_inf: 1.0,
        l: 1.0,
        delta_f: 1.0,
        vhat1_inv_p_l1: 10.0,
        source: EstimateSource::Known,
    };
    let (d, s, p) = (10, 0.0, 0.125);
    for t in [100u64, 10_000, 1_000_000] {
        let inputs = BoundInputs {
            p,
            q: default_q(p),
            beta1: 0.9,
            beta2: 0.999,
            alpha: optimal_alpha(d, t, s)?,
            t,
            d,
            s,
        };
        let m = m_constants(&est, &inputs)?;
        println!(
            "T={t:<8} M1={:.3e} M2={:.3e} M3={:.3e} bound={:.3e} corollary={:.3e}",
            m.m1,
            m.m2,
            m.m3,
            bound_rhs(&est, &inputs, &m)?,
            corollary_bound(&est, &inputs)?
        );
    }
    Ok(())
}

fn main() -> padam::Result<()> {
    run_example()
}
