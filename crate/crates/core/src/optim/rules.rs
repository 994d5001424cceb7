use super::{lr_extremes, OptState, PadamConfig, StepOutcome};
use crate::{Error, ParamVector, Result};

fn check_inputs(state: &OptState, x: &ParamVector, g: &ParamVector) -> Result<()> {
    let d = state.dim();
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    x.ensure_dim(d)?;
    g.ensure_dim(d)?;
    g.ensure_finite("gradient")
}

/// `numer / denom`, where a zero denominator with a zero numerator is 0.
#[inline]
fn guarded_ratio(numer: f64, denom: f64, coordinate: usize, context: &'static str) -> Result<f64> {
    if denom == 0.0 {
        if numer == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::NonFinite {
                coordinate,
                context,
            })
        }
    } else {
        Ok(numer / denom)
    }
}

fn finish(new_x: Vec<f64>, lr_bounds: (f64, f64), context: &'static str) -> Result<StepOutcome> {
    let new_x = ParamVector::from(new_x);
    new_x.ensure_finite(context)?;
    Ok(StepOutcome {
        new_x,
        effective_lr_min: lr_bounds.0,
        effective_lr_max: lr_bounds.1,
    })
}

/// One step of the partially adaptive rule:
///
/// ```text
/// m'     = beta1 m + (1 - beta1) g
/// v'     = beta2 v + (1 - beta2) g^2
/// v_hat' = max(v_hat, v')
/// x'     = x - lr * m' / (v_hat' + eps)^p
/// ```
pub fn padam_step(
    state: &OptState,
    x: &ParamVector,
    g: &ParamVector,
    lr: f64,
    cfg: &PadamConfig,
) -> Result<(OptState, StepOutcome)> {
    check_inputs(state, x, g)?;
    let PadamConfig {
        beta1,
        beta2,
        p,
        epsilon,
    } = *cfg;
    let d = state.dim();
    let mut m = Vec::with_capacity(d);
    let mut v = Vec::with_capacity(d);
    let mut v_hat = Vec::with_capacity(d);
    let mut new_x = Vec::with_capacity(d);
    for i in 0..d {
        let gi = g[i];
        let mi = beta1 * state.m[i] + (1.0 - beta1) * gi;
        let vi = beta2 * state.v[i] + (1.0 - beta2) * gi * gi;
        let hi = state.v_hat[i].max(vi);
        let step = guarded_ratio(mi, (hi + epsilon).powf(p), i, "padam_step")?;
        new_x.push(x[i] - lr * step);
        m.push(mi);
        v.push(vi);
        v_hat.push(hi);
    }
    let bounds = lr_extremes(&v_hat, lr, p, epsilon);
    let next = OptState {
        m: m.into(),
        v: v.into(),
        v_hat: v_hat.into(),
        t: state.t + 1,
    };
    Ok((next, finish(new_x, bounds, "padam_step")?))
}

/// Amsgrad with a square-root denominator. Written independently of
/// [`padam_step`] so the two can be checked against each other at `p = 1/2`.
pub fn amsgrad_step(
    state: &OptState,
    x: &ParamVector,
    g: &ParamVector,
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
) -> Result<(OptState, StepOutcome)> {
    check_inputs(state, x, g)?;
    let m: Vec<f64> = state
        .m
        .iter()
        .zip(g.iter())
        .map(|(m, g)| beta1 * m + (1.0 - beta1) * g)
        .collect();
    let v: Vec<f64> = state
        .v
        .iter()
        .zip(g.iter())
        .map(|(v, g)| beta2 * v + (1.0 - beta2) * g * g)
        .collect();
    let v_hat: Vec<f64> = state.v_hat.iter().zip(&v).map(|(a, b)| a.max(*b)).collect();
    let new_x = x
        .iter()
        .zip(&m)
        .zip(&v_hat)
        .enumerate()
        .map(|(i, ((x, m), h))| {
            guarded_ratio(*m, (h + epsilon).sqrt(), i, "amsgrad_step").map(|r| x - lr * r)
        })
        .collect::<Result<Vec<_>>>()?;
    let bounds = lr_extremes(&v_hat, lr, 0.5, epsilon);
    let next = OptState {
        m: m.into(),
        v: v.into(),
        v_hat: v_hat.into(),
        t: state.t + 1,
    };
    Ok((next, finish(new_x, bounds, "amsgrad_step")?))
}

/// Adam without bias correction: the denominator is the current `v`, not
/// its running maximum. `v_hat` stays zero.
pub fn adam_step(
    state: &OptState,
    x: &ParamVector,
    g: &ParamVector,
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
) -> Result<(OptState, StepOutcome)> {
    check_inputs(state, x, g)?;
    let d = state.dim();
    let mut m = Vec::with_capacity(d);
    let mut v = Vec::with_capacity(d);
    let mut new_x = Vec::with_capacity(d);
    for i in 0..d {
        let mi = beta1 * state.m[i] + (1.0 - beta1) * g[i];
        let vi = beta2 * state.v[i] + (1.0 - beta2) * g[i] * g[i];
        new_x.push(x[i] - lr * guarded_ratio(mi, (vi + epsilon).sqrt(), i, "adam_step")?);
        m.push(mi);
        v.push(vi);
    }
    let bounds = lr_extremes(&v, lr, 0.5, epsilon);
    let next = OptState {
        m: m.into(),
        v: v.into(),
        v_hat: state.v_hat.clone(),
        t: state.t + 1,
    };
    Ok((next, finish(new_x, bounds, "adam_step")?))
}

/// Adam followed by decoupled weight decay on the pre-step iterate:
/// `x' = adam(x) - lr * weight_decay * x`.
#[allow(clippy::too_many_arguments)]
pub fn adamw_step(
    state: &OptState,
    x: &ParamVector,
    g: &ParamVector,
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    weight_decay: f64,
) -> Result<(OptState, StepOutcome)> {
    let (next, mut out) = adam_step(state, x, g, lr, beta1, beta2, epsilon)?;
    if weight_decay != 0.0 {
        for (nx, xi) in out.new_x.iter_mut().zip(x.iter()) {
            *nx -= lr * weight_decay * xi;
        }
        out.new_x.ensure_finite("adamw_step")?;
    }
    Ok((next, out))
}

/// Heavy-ball SGD: `b' = mu b + g`, `x' = x - lr b'`, with `b` kept in `m`.
pub fn sgd_momentum_step(
    state: &OptState,
    x: &ParamVector,
    g: &ParamVector,
    lr: f64,
    mu: f64,
) -> Result<(OptState, StepOutcome)> {
    check_inputs(state, x, g)?;
    let b: Vec<f64> = state.m.iter().zip(g.iter()).map(|(b, g)| mu * b + g).collect();
    let new_x: Vec<f64> = x.iter().zip(&b).map(|(x, b)| x - lr * b).collect();
    let next = OptState {
        m: b.into(),
        v: state.v.clone(),
        v_hat: state.v_hat.clone(),
        t: state.t + 1,
    };
    Ok((next, finish(new_x, (lr, lr), "sgd_momentum_step")?))
}

/// Adagrad in running-mean form: `v` is the arithmetic mean of the squared
/// gradients seen so far and the step is `lr / sqrt(t) * g / sqrt(v + eps)`.
pub fn adagrad_step(
    state: &OptState,
    x: &ParamVector,
    g: &ParamVector,
    lr: f64,
    epsilon: f64,
) -> Result<(OptState, StepOutcome)> {
    check_inputs(state, x, g)?;
    let t = state.t + 1;
    let inv_t = 1.0 / t as f64;
    let alpha_t = lr / (t as f64).sqrt();
    let v: Vec<f64> = state
        .v
        .iter()
        .zip(g.iter())
        .map(|(v, g)| v + (g * g - v) * inv_t)
        .collect();
    let new_x = x
        .iter()
        .zip(g.iter())
        .zip(&v)
        .enumerate()
        .map(|(i, ((x, g), v))| {
            guarded_ratio(*g, (v + epsilon).sqrt(), i, "adagrad_step").map(|r| x - alpha_t * r)
        })
        .collect::<Result<Vec<_>>>()?;
    let bounds = lr_extremes(&v, alpha_t, 0.5, epsilon);
    let next = OptState {
        m: state.m.clone(),
        v: v.into(),
        v_hat: state.v_hat.clone(),
        t,
    };
    Ok((next, finish(new_x, bounds, "adagrad_step")?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::init_state;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::from(v)
    }

    fn cfg(p: f64, eps: f64) -> PadamConfig {
        PadamConfig::new(0.9, 0.999, p, eps).unwrap()
    }

    #[test]
    fn padam_first_step_closed_form() {
        let s = init_state(1).unwrap();
        let (next, out) = padam_step(&s, &pv(&[0.0]), &pv(&[1.0]), 0.1, &cfg(0.5, 0.0)).unwrap();
        assert!((next.m[0] - 0.1).abs() < 1e-15);
        assert!((next.v[0] - 0.001).abs() < 1e-15);
        assert_eq!(next.v_hat[0], next.v[0]);
        assert_eq!(next.t, 1);
        // lr (1 - beta1) / sqrt(1 - beta2)
        let expected = 0.1 * 0.1 / 0.001f64.sqrt();
        assert!((out.new_x[0] + expected).abs() < 1e-12);
        assert!((expected - 0.316228).abs() < 1e-6);
    }

    #[test]
    fn padam_input_state_untouched() {
        let s = init_state(2).unwrap();
        let before = s.clone();
        let _ = padam_step(&s, &pv(&[1.0, 2.0]), &pv(&[0.5, -0.5]), 0.1, &cfg(0.125, 1e-8)).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let s = init_state(3).unwrap();
        let x = pv(&[1.0, -2.0, 3.0]);
        let g = pv(&[0.0; 3]);
        for eps in [0.0, 1e-8] {
            let (_, out) = padam_step(&s, &x, &g, 0.1, &cfg(0.125, eps)).unwrap();
            assert_eq!(out.new_x, x);
            let (_, out) = amsgrad_step(&s, &x, &g, 0.1, 0.9, 0.999, eps).unwrap();
            assert_eq!(out.new_x, x);
            let (_, out) = adam_step(&s, &x, &g, 0.1, 0.9, 0.999, eps).unwrap();
            assert_eq!(out.new_x, x);
            let (_, out) = adagrad_step(&s, &x, &g, 0.1, eps).unwrap();
            assert_eq!(out.new_x, x);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let s = init_state(2).unwrap();
        let r = padam_step(&s, &pv(&[1.0]), &pv(&[1.0, 1.0]), 0.1, &cfg(0.1, 0.0));
        assert!(matches!(r, Err(Error::Shape { expected: 2, got: 1 })));
        let r = sgd_momentum_step(&s, &pv(&[1.0, 1.0]), &pv(&[1.0]), 0.1, 0.9);
        assert!(matches!(r, Err(Error::Shape { .. })));
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let s = init_state(2).unwrap();
        let r = adam_step(&s, &pv(&[1.0, 1.0]), &pv(&[1.0, f64::NAN]), 0.1, 0.9, 0.999, 1e-8);
        assert!(matches!(r, Err(Error::NonFinite { coordinate: 1, .. })));
    }

    #[test]
    fn zero_denominator_with_nonzero_momentum_names_coordinate() {
        // beta2 = 1 keeps v at zero while m picks up the gradient.
        let s = init_state(2).unwrap();
        let c = PadamConfig::new(0.9, 1.0, 0.25, 0.0).unwrap();
        let r = padam_step(&s, &pv(&[0.0, 0.0]), &pv(&[0.0, 1.0]), 0.1, &c);
        assert!(matches!(r, Err(Error::NonFinite { coordinate: 1, .. })));
    }

    #[test]
    fn amsgrad_matches_padam_half_first_step() {
        let s = init_state(1).unwrap();
        let (_, a) = amsgrad_step(&s, &pv(&[0.0]), &pv(&[1.0]), 0.1, 0.9, 0.999, 0.0).unwrap();
        let (_, p) = padam_step(&s, &pv(&[0.0]), &pv(&[1.0]), 0.1, &cfg(0.5, 0.0)).unwrap();
        assert!((a.new_x[0] - p.new_x[0]).abs() <= 1e-15);
    }

    #[test]
    fn amsgrad_beta2_one_scales_by_eps() {
        let eps = 1e-4;
        let mut s = init_state(1).unwrap();
        let mut x = pv(&[0.0]);
        for _ in 0..5 {
            let g = pv(&[2.0]);
            let (next, out) = amsgrad_step(&s, &x, &g, 0.1, 0.9, 1.0, eps).unwrap();
            assert_eq!(next.v[0], 0.0);
            assert_eq!(next.v_hat[0], 0.0);
            let expected = x[0] - 0.1 * next.m[0] / eps.sqrt();
            assert!((out.new_x[0] - expected).abs() <= 1e-12 * expected.abs());
            s = next;
            x = out.new_x;
        }
    }

    #[test]
    fn adam_equals_amsgrad_when_v_grows() {
        let d = 2;
        let (mut sa, mut sb) = (init_state(d).unwrap(), init_state(d).unwrap());
        let (mut xa, mut xb) = (pv(&[1.0, -1.0]), pv(&[1.0, -1.0]));
        for t in 1..=200 {
            let g = pv(&[t as f64, -(t as f64)]);
            let (na, oa) = adam_step(&sa, &xa, &g, 0.01, 0.9, 0.999, 1e-8).unwrap();
            let (nb, ob) = amsgrad_step(&sb, &xb, &g, 0.01, 0.9, 0.999, 1e-8).unwrap();
            assert_eq!(oa.new_x, ob.new_x, "diverged at t = {t}");
            assert_eq!(na.v, nb.v);
            (sa, sb, xa, xb) = (na, nb, oa.new_x, ob.new_x);
        }
    }

    #[test]
    fn adam_effective_lr_can_rise_while_amsgrad_cannot() {
        // brute-force reference for v with beta2 = 0.999, eps = 0
        let beta2: f64 = 0.999;
        let gs: Vec<f64> = (0..10).map(|k| if k % 2 == 0 { 10.0 } else { -0.1 }).collect();
        let mut v_ref = 0.0f64;
        let mut vmax_ref = 0.0f64;
        let mut sa = init_state(1).unwrap();
        let mut sb = init_state(1).unwrap();
        let mut x = pv(&[0.0]);
        let (mut prev_a, mut prev_b) = (f64::INFINITY, f64::INFINITY);
        let mut adam_rose = false;
        for &gk in &gs {
            v_ref = beta2 * v_ref + (1.0 - beta2) * gk * gk;
            vmax_ref = vmax_ref.max(v_ref);
            let g = pv(&[gk]);
            let (na, oa) = adam_step(&sa, &x, &g, 1.0, 0.9, beta2, 0.0).unwrap();
            let (nb, ob) = amsgrad_step(&sb, &x, &g, 1.0, 0.9, beta2, 0.0).unwrap();
            assert!((oa.effective_lr_max - 1.0 / v_ref.sqrt()).abs() < 1e-12 / v_ref.sqrt());
            assert!((ob.effective_lr_max - 1.0 / vmax_ref.sqrt()).abs() < 1e-12 / vmax_ref.sqrt());
            if oa.effective_lr_max > prev_a {
                adam_rose = true;
            }
            assert!(ob.effective_lr_max <= prev_b);
            prev_a = oa.effective_lr_max;
            prev_b = ob.effective_lr_max;
            sa = na;
            sb = nb;
            x = ob.new_x;
        }
        assert!(adam_rose);
    }

    #[test]
    fn adamw_reduces_to_adam() {
        let s = init_state(2).unwrap();
        let x = pv(&[0.3, -0.7]);
        let g = pv(&[1.0, 2.0]);
        let (_, a) = adam_step(&s, &x, &g, 0.01, 0.9, 0.999, 1e-8).unwrap();
        let (_, w) = adamw_step(&s, &x, &g, 0.01, 0.9, 0.999, 1e-8, 0.0).unwrap();
        assert_eq!(a.new_x, w.new_x);
    }

    #[test]
    fn adamw_pure_decay() {
        let s = init_state(1).unwrap();
        let (_, out) = adamw_step(&s, &pv(&[1.0]), &pv(&[0.0]), 0.1, 0.9, 0.999, 1e-8, 0.1).unwrap();
        assert!((out.new_x[0] - 0.99).abs() < 1e-15);
    }

    #[test]
    fn adamw_decays_pre_step_iterate() {
        // hand unroll, eps = 0, lr = 0.1, wd = 0.5, g = 1 then 1
        let (lr, wd, b1, b2) = (0.1, 0.5, 0.9, 0.999);
        let s0 = init_state(1).unwrap();
        let x1 = pv(&[2.0]);
        let (s1, o1) = adamw_step(&s0, &x1, &pv(&[1.0]), lr, b1, b2, 0.0, wd).unwrap();
        let m1 = 0.1;
        let v1 = 0.001f64;
        let x2 = 2.0 - lr * m1 / v1.sqrt() - lr * wd * 2.0;
        assert!((o1.new_x[0] - x2).abs() < 1e-14);
        let (_, o2) = adamw_step(&s1, &o1.new_x, &pv(&[1.0]), lr, b1, b2, 0.0, wd).unwrap();
        let m2 = b1 * m1 + 0.1;
        let v2 = b2 * v1 + 0.001;
        let x3 = x2 - lr * m2 / v2.sqrt() - lr * wd * x2;
        assert!((o2.new_x[0] - x3).abs() < 1e-14);
        // decaying the post-step iterate instead gives a different answer
        let wrong = x2 - lr * m2 / v2.sqrt() - lr * wd * (x2 - lr * m2 / v2.sqrt());
        assert!((o2.new_x[0] - wrong).abs() > 1e-3);
    }

    #[test]
    fn sgd_plain_when_mu_zero() {
        let s = init_state(2).unwrap();
        let (_, out) = sgd_momentum_step(&s, &pv(&[1.0, 1.0]), &pv(&[0.5, -2.0]), 0.1, 0.0).unwrap();
        assert_eq!(out.new_x.as_slice(), &[1.0 - 0.05, 1.0 + 0.2]);
    }

    #[test]
    fn sgd_two_steps_hand_arithmetic() {
        let s = init_state(1).unwrap();
        let (s1, o1) = sgd_momentum_step(&s, &pv(&[0.0]), &pv(&[1.0]), 1.0, 0.9).unwrap();
        assert_eq!(o1.new_x[0], -1.0);
        let (_, o2) = sgd_momentum_step(&s1, &o1.new_x, &pv(&[1.0]), 1.0, 0.9).unwrap();
        assert!((o2.new_x[0] - (-2.9)).abs() < 1e-15);
    }

    #[test]
    fn adagrad_first_step_normalizes() {
        let s = init_state(1).unwrap();
        let (_, out) = adagrad_step(&s, &pv(&[0.0]), &pv(&[2.0]), 1.0, 0.0).unwrap();
        assert_eq!(out.new_x[0], -1.0);
    }

    #[test]
    fn adagrad_constant_gradient() {
        let c = 3.0;
        let mut s = init_state(1).unwrap();
        let mut x = pv(&[0.0]);
        for t in 1..=50u64 {
            let (next, out) = adagrad_step(&s, &x, &pv(&[c]), 0.5, 0.0).unwrap();
            assert_eq!(next.v[0], c * c);
            let step = x[0] - out.new_x[0];
            assert!((step - 0.5 / (t as f64).sqrt()).abs() < 1e-14);
            s = next;
            x = out.new_x;
        }
    }

    #[test]
    fn step_outcome_lr_bounds_ordered() {
        let s = init_state(3).unwrap();
        let (_, out) =
            padam_step(&s, &pv(&[0.0; 3]), &pv(&[1.0, 1e-3, 5.0]), 0.1, &cfg(0.125, 1e-8)).unwrap();
        assert!(out.effective_lr_min <= out.effective_lr_max);
        assert!(out.effective_lr_min > 0.0);
    }
}
