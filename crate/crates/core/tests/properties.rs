use approx::assert_relative_eq;
use padam::harness::{run, RunSpec, Schedule};
use padam::optim::{init_state, padam_step, OptState, OptimizerSpec, PadamConfig};
use padam::problems::{NoiseSpec, ProblemSpec};
use padam::theory::check_lemma_a4;
use padam::ParamVector;
use proptest::prelude::*;

fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, d)
}

fn state_strategy(d: usize) -> impl Strategy<Value = OptState> {
    (vec_strategy(d), prop::collection::vec(0.0f64..5.0, d), prop::collection::vec(0.0f64..5.0, d), 0u64..100)
        .prop_map(|(m, v, extra, t)| {
            let v_hat: Vec<f64> = v.iter().zip(&extra).map(|(a, b)| a + b).collect();
            OptState {
                m: m.into(),
                v: v.into(),
                v_hat: v_hat.into(),
                t,
            }
        })
}

fn config_strategy() -> impl Strategy<Value = PadamConfig> {
    (0.0f64..0.99, 0.9f64..0.9999, 0.0f64..=0.5, 1e-10f64..1e-4)
        .prop_map(|(b1, b2, p, eps)| PadamConfig::new(b1, b2, p, eps).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn step_is_linear_in_lr(
        state in state_strategy(6),
        x in vec_strategy(6),
        g in vec_strategy(6),
        cfg in config_strategy(),
        lr in 1e-4f64..1.0,
        c in 0.1f64..10.0,
    ) {
        let x = ParamVector::from(x);
        let g = ParamVector::from(g);
        let (_, a) = padam_step(&state, &x, &g, lr, &cfg).unwrap();
        let (_, b) = padam_step(&state, &x, &g, c * lr, &cfg).unwrap();
        for i in 0..6 {
            let da = a.new_x[i] - x[i];
            let db = b.new_x[i] - x[i];
            assert_relative_eq!(db, c * da, epsilon = 1e-9 * (1.0 + x[i].abs()), max_relative = 1e-9);
        }
    }

    #[test]
    fn vhat_never_decreases(
        state in state_strategy(5),
        grads in prop::collection::vec(vec_strategy(5), 1..20),
        cfg in config_strategy(),
    ) {
        let mut s = state;
        let mut x = ParamVector::zeros(5);
        for g in grads {
            let (next, out) = padam_step(&s, &x, &g.into(), 0.01, &cfg).unwrap();
            prop_assert!(next.v_hat.iter().zip(s.v_hat.iter()).all(|(a, b)| a >= b));
            prop_assert!(next.v_hat.iter().zip(next.v.iter()).all(|(h, v)| h >= v));
            s = next;
            x = out.new_x;
        }
    }

    #[test]
    fn zero_gradient_from_rest_is_absorbing(x in vec_strategy(4), cfg in config_strategy(), steps in 1usize..30) {
        let mut s = init_state(4).unwrap();
        let x0 = ParamVector::from(x);
        let mut x = x0.clone();
        for _ in 0..steps {
            let (next, out) = padam_step(&s, &x, &ParamVector::zeros(4), 0.1, &cfg).unwrap();
            s = next;
            x = out.new_x;
        }
        prop_assert_eq!(x, x0);
    }

    #[test]
    fn first_moment_stays_within_gradient_bound(seed in 0u64..1000, p in 0.0f64..=0.5, lr in 1e-3f64..2e-2) {
        let spec = RunSpec::new(
            ProblemSpec::Quadratic { dim: 5, condition_number: 10.0, noise: NoiseSpec::gaussian(0.3) },
            OptimizerSpec::padam(PadamConfig::new(0.9, 0.999, p, 1e-8).unwrap()),
            Schedule::constant(lr),
            200,
            seed,
        ).dense();
        let problem = spec.problem.build().unwrap();
        let trace = run(&spec).unwrap();
        let check = check_lemma_a4(&trace, problem.constants().g_inf).unwrap();
        prop_assert!(!check.failed(), "{}", check.note);
    }
}

#[test]
fn adam_and_amsgrad_agree_while_second_moment_grows() {
    // With beta2 = 1 - 1e-3 and |g| strictly increasing, v_t is nondecreasing.
    let d = 3;
    let (b1, b2, eps, lr) = (0.9, 0.999, 1e-8, 0.01);
    let adam = OptimizerSpec::Adam { beta1: b1, beta2: b2, epsilon: eps };
    let ams = OptimizerSpec::Amsgrad { beta1: b1, beta2: b2, epsilon: eps };
    let (mut sa, mut sb) = (init_state(d).unwrap(), init_state(d).unwrap());
    let (mut xa, mut xb) = (ParamVector::zeros(d), ParamVector::zeros(d));
    for t in 1..=500 {
        let g = ParamVector::from_fn(d, |i| (i as f64 + 1.0) * t as f64);
        let (na, oa) = adam.step(&sa, &xa, &g, lr).unwrap();
        let (nb, ob) = ams.step(&sb, &xb, &g, lr).unwrap();
        assert!(na.v.iter().zip(sa.v.iter()).all(|(a, b)| a >= b));
        for i in 0..d {
            assert_relative_eq!(oa.new_x[i], ob.new_x[i], max_relative = 1e-12);
        }
        (sa, sb, xa, xb) = (na, nb, oa.new_x, ob.new_x);
    }
}
