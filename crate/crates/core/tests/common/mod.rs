#![allow(dead_code)]

use trustaug::Signal;
use trustaug::encoder::{EncoderModel, loss};

/// Largest relative error between analytic gradients and finite differences
/// of the batch loss, over every parameter. Each derivative is a Richardson
/// combination of second-order differences at steps h and h/2, which cancels
/// the h^2 truncation term. Central differences are used while no PReLU or
/// max-pool branch flips inside [p - s, p + s]. Otherwise a one-sided stencil
/// is taken on a side that keeps the branch, and the step is halved only when
/// neither side does.
pub fn max_relative_error(model: &EncoderModel, x: &[Signal], y: &[usize], h: f64) -> f64 {
    let (_, grads) = model.backward(x, y).unwrap();
    let (probs, base) = model.forward_traced(x).unwrap();
    let l0 = loss(&probs, y).unwrap();
    let mut m = model.clone();
    let mut worst: f64 = 0.0;
    for t in 0..m.params.len() {
        for i in 0..m.params[t].data.len() {
            let orig = m.params[t].data[i];
            let mut eval = |d: f64| {
                m.params[t].data[i] = orig + d;
                let (p, pat) = m.forward_traced(x).unwrap();
                m.params[t].data[i] = orig;
                (loss(&p, y).unwrap(), pat == base)
            };
            let mut stencil = |s: f64| {
                let (lp, sp) = eval(s);
                let (lm, sm) = eval(-s);
                if sp && sm {
                    return Some((lp - lm) / (2.0 * s));
                }
                if sp && eval(2.0 * s).1 {
                    return Some((-3.0 * l0 + 4.0 * lp - eval(2.0 * s).0) / (2.0 * s));
                }
                if sm && eval(-2.0 * s).1 {
                    return Some((3.0 * l0 - 4.0 * lm + eval(-2.0 * s).0) / (2.0 * s));
                }
                None
            };
            let mut step = h;
            let num = loop {
                if let (Some(coarse), Some(fine)) = (stencil(step), stencil(step / 2.0)) {
                    break (4.0 * fine - coarse) / 3.0;
                }
                step /= 2.0;
                assert!(step > h * 1e-4, "no smooth neighbourhood for parameter {t}/{i}");
            };
            let ana = grads.0[t][i];
            let e = (num - ana).abs() / num.abs().max(ana.abs()).max(1e-6);
            worst = worst.max(e);
        }
    }
    worst
}
