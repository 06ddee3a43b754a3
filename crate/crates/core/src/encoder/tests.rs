use super::*;
use crate::signal::LabeledSample;
use std::f64::consts::PI;

fn tiny_config() -> EncoderConfig {
    EncoderConfig {
        filters: [4, 6, 8],
        kernel_sizes: [3, 5, 7],
        attention_split: 4,
        hidden_units: 5,
        batch_size: 4,
        seed: 3,
        ..EncoderConfig::desk()
    }
}

fn noise_batch(n: usize, len: usize, seed: u64) -> Vec<Signal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Signal::new((0..len).map(|_| rng.random_range(-1.0..1.0)).collect(), 60.0).unwrap())
        .collect()
}

fn ringdown(zeta: f64, phase: f64, len: usize) -> Signal {
    let w = 2.0 * PI * 0.8;
    let sigma = -zeta * w / (1.0 - zeta * zeta).sqrt();
    Signal::from_fn(len, 60.0, |t| (sigma * t).exp() * (w * t + phase).cos()).unwrap()
}

/// Largest relative error between analytic gradients and finite differences
/// of the batch loss, over every parameter. Each derivative is a Richardson
/// combination of second-order differences at steps h and h/2, which cancels
/// the h^2 truncation term. Central differences are used while no PReLU or
/// max-pool branch flips inside [p - s, p + s]. Otherwise a one-sided stencil
/// is taken on a side that keeps the branch, and the step is halved only when
/// neither side does.
fn max_relative_error(model: &EncoderModel, x: &[Signal], y: &[usize], h: f64) -> f64 {
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

/// Closed-form parameter count, written independently of the layout code.
fn expected_params(f: [usize; 3], k: [usize; 3], c: usize) -> usize {
    let conv = f[0] * k[0] + f[0] + f[1] * f[0] * k[1] + f[1] + f[2] * f[1] * k[2] + f[2];
    let norm_and_prelu = 3 * (f[0] + f[1] + f[2]);
    let h = f[2] / 2;
    conv + norm_and_prelu + (h * h + h) + 2 * h + (c * h + c)
}

#[test]
fn outputs_are_distributions() {
    let model = EncoderModel::new(EncoderConfig::desk()).unwrap();
    let probs = model.forward(&noise_batch(3, 64, 1)).unwrap();
    for p in probs {
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
    }
}

#[test]
fn zero_output_layer_gives_uniform_probabilities() {
    let mut model = EncoderModel::new(tiny_config()).unwrap();
    let lay = model.layout();
    model.params[lay.out_w].data.fill(0.0);
    model.params[lay.out_b].data.fill(0.0);
    for p in model.forward(&noise_batch(2, 32, 2)).unwrap() {
        assert!(p.iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }
}

#[test]
fn forward_is_deterministic() {
    let x = noise_batch(2, 40, 3);
    let a = EncoderModel::new(tiny_config()).unwrap().forward(&x).unwrap();
    let b = EncoderModel::new(tiny_config()).unwrap().forward(&x).unwrap();
    assert_eq!(a, b);
}

#[test]
fn short_input_is_rejected() {
    let model = EncoderModel::new(EncoderConfig::desk()).unwrap();
    assert!(matches!(model.forward(&noise_batch(1, 20, 1)), Err(Error::Argument(_))));
}

#[test]
fn loss_examples() {
    assert_eq!(loss(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[1, 0]).unwrap(), 0.0);
    let l = loss(&[vec![0.5, 0.5]], &[0]).unwrap();
    assert!((l - 2f64.ln()).abs() < 1e-15);
    let l = loss(&[vec![1.0, 0.0]], &[1]).unwrap();
    assert!((l - 27.631021115928547).abs() < 1e-9 && l.is_finite());
    assert!(matches!(loss(&[vec![0.5, 0.5]], &[0, 1]), Err(Error::Argument(_))));
    assert!(matches!(loss(&[vec![0.5, 0.5]], &[2]), Err(Error::Argument(_))));
}

#[test]
fn softmax_cross_entropy_gradient() {
    // d/dz of -ln softmax(z)[y] is softmax(z) - onehot(y).
    let z = [0.3, -1.2, 0.8];
    let p = softmax(&z);
    let h = 1e-6;
    for i in 0..3 {
        let mut zp = z;
        zp[i] += h;
        let mut zm = z;
        zm[i] -= h;
        let num = (loss(&[softmax(&zp)], &[2]).unwrap() - loss(&[softmax(&zm)], &[2]).unwrap()) / (2.0 * h);
        let ana = p[i] - if i == 2 { 1.0 } else { 0.0 };
        assert!((num - ana).abs() < 1e-8);
    }
}

#[test]
fn full_model_gradient_check_small() {
    let model = EncoderModel::new(tiny_config()).unwrap();
    let x = noise_batch(4, 32, 4);
    assert!(max_relative_error(&model, &x, &[0, 1, 1, 0], 1e-4) < 1e-4);
}

#[test]
fn gradient_check_with_blocks_disabled() {
    let mut cfg = tiny_config();
    cfg.blocks = BlockOptions { instance_norm: false, prelu: false, dropout: 0.0, max_pool: false };
    let model = EncoderModel::new(cfg).unwrap();
    let x = noise_batch(3, 16, 5);
    // Without normalization the loss surface is sharply curved, so a smaller
    // step keeps truncation error below the tolerance.
    assert!(max_relative_error(&model, &x, &[1, 0, 1], 1e-5) < 1e-4);
}

#[test]
fn layout_matches_tensor_names() {
    for blocks in [BlockOptions::default(), BlockOptions { instance_norm: false, prelu: false, dropout: 0.0, max_pool: true }] {
        let model = EncoderModel::new(EncoderConfig { blocks, ..tiny_config() }).unwrap();
        let lay = model.layout();
        let name = |i: usize| model.params[i].name.as_str();
        for (b, slots) in lay.blocks.iter().enumerate() {
            assert_eq!(name(slots.w), format!("conv{b}.weight"));
            assert_eq!(name(slots.b), format!("conv{b}.bias"));
            if let Some((g, bt)) = slots.norm {
                assert_eq!((name(g), name(bt)), (format!("norm{b}.gamma").as_str(), format!("norm{b}.beta").as_str()));
            }
            if let Some(a) = slots.prelu {
                assert_eq!(name(a), format!("prelu{b}.alpha"));
            }
        }
        assert_eq!(name(lay.dense_w), "dense.weight");
        assert_eq!(name(lay.head_beta), "head_norm.beta");
        assert_eq!(name(lay.out_b), "output.bias");
        assert_eq!(lay.out_b + 1, model.params.len());
    }
}

#[test]
fn zero_input_and_weights_give_zero_conv_gradients() {
    let mut model = EncoderModel::new(tiny_config()).unwrap();
    let lay = model.layout();
    for slots in lay.blocks {
        model.params[slots.w].data.fill(0.0);
    }
    let x = vec![Signal::zeros(32, 60.0).unwrap(); 2];
    let (_, g) = model.backward(&x, &[0, 1]).unwrap();
    for slots in lay.blocks {
        assert!(g.0[slots.w].iter().all(|&v| v == 0.0));
    }
}

#[test]
fn duplicated_sample_doubles_its_contribution() {
    let model = EncoderModel::new(tiny_config()).unwrap();
    let s = noise_batch(1, 32, 6);
    let (_, single) = model.backward(&s, &[1]).unwrap();
    let (_, double) = model.backward(&[s[0].clone(), s[0].clone()], &[1, 1]).unwrap();
    // The batch mean divides by 2, so the summed numerator is exactly twice.
    for (a, b) in single.0.iter().flatten().zip(double.0.iter().flatten()) {
        assert!((2.0 * b - 2.0 * a).abs() <= 1e-12 * a.abs().max(1e-300) + 1e-18);
    }
}

#[test]
fn adam_examples() {
    let mut model = EncoderModel::new(tiny_config()).unwrap();
    let before = model.params.clone();
    let zero = Gradients::zeros_like(&model.params);
    model.adam_step(&zero, 1e-3).unwrap();
    assert_eq!(model.params, before);

    // First step: m = 0.1 g, v = 0.001 g^2, bias-corrected ratio is g / (|g| + eps).
    let mut model = EncoderModel::new(tiny_config()).unwrap();
    let mut g = Gradients::zeros_like(&model.params);
    g.0[0][0] = 0.37;
    g.0[0][1] = -2.5;
    let lr = 1e-3;
    let mut twin = model.clone();
    model.adam_step(&g, lr).unwrap();
    let d0 = model.params[0].data[0] - before[0].data[0];
    let d1 = model.params[0].data[1] - before[0].data[1];
    assert!((d0 + lr * 0.37 / (0.37 + 1e-8)).abs() < 1e-15);
    assert!(d0.abs() <= lr * (1.0 + 1e-9) && d1 > 0.0 && d1.abs() <= lr * (1.0 + 1e-9));
    assert_eq!(model.adam.step, 1);

    twin.adam_step(&g, lr).unwrap();
    assert_eq!(model, twin);

    g.0[1][0] = f64::NAN;
    assert!(matches!(model.adam_step(&g, lr), Err(Error::Training(_))));
}

#[test]
fn classify_threshold_rule() {
    assert_eq!(label_from_probability(0.49, 0.5), Label::Stable);
    assert_eq!(label_from_probability(0.5, 0.5), Label::Unstable);
    assert_eq!(label_from_probability(0.0, 0.0), Label::Unstable);
    let model = EncoderModel::new(tiny_config()).unwrap();
    let s = &noise_batch(1, 32, 7)[0];
    assert_eq!(classify(&model, s, 0.0).unwrap(), Label::Unstable);
}

#[test]
fn parameter_counts() {
    let paper = EncoderModel::new(EncoderConfig::default()).unwrap();
    assert_eq!(paper.param_count(), expected_params([128, 256, 512], [5, 11, 21], 2));
    let desk = EncoderModel::new(EncoderConfig::desk()).unwrap();
    assert_eq!(desk.param_count(), expected_params([16, 32, 64], [5, 11, 21], 2));
}

#[test]
fn config_validation() {
    let mut c = EncoderConfig::desk();
    c.kernel_sizes = [5, 10, 21];
    assert!(c.validate().is_err());
    let mut c = EncoderConfig::desk();
    c.attention_split = 16;
    assert!(c.validate().is_err());
    assert_eq!(EncoderConfig::default().learning_rate, 1e-5);
    assert_eq!(EncoderConfig::default().attention_split, 256);
}

fn toy_dataset(n: usize, len: usize) -> LabeledDataset {
    let samples = (0..n)
        .map(|i| {
            let unstable = i % 2 == 1;
            let zeta = if unstable { 0.01 } else { 0.10 };
            let label = if unstable { Label::Unstable } else { Label::Stable };
            LabeledSample::new(ringdown(zeta, i as f64 * 0.37, len), label)
        })
        .collect();
    LabeledDataset::new(samples).unwrap()
}

#[test]
fn training_edge_cases_and_determinism() {
    let d = toy_dataset(8, 64);
    let mut cfg = tiny_config();
    cfg.epochs = 0;
    let mut model = EncoderModel::new(cfg.clone()).unwrap();
    let before = model.clone();
    let r = train(&mut model, &d, &cfg).unwrap();
    assert!(r.epoch_loss.is_empty());
    assert_eq!(model.params, before.params);

    cfg.epochs = 3;
    let mut a = EncoderModel::new(cfg.clone()).unwrap();
    let mut b = EncoderModel::new(cfg.clone()).unwrap();
    assert_eq!(train(&mut a, &d, &cfg).unwrap(), train(&mut b, &d, &cfg).unwrap());

    let single = d.subset(&[0, 2, 4]).unwrap();
    assert!(matches!(train(&mut a, &single, &cfg), Err(Error::Training(_))));
}

#[test]
fn loss_settles_on_separable_data() {
    let d = toy_dataset(32, 96);
    let mut cfg = tiny_config();
    cfg.epochs = 25;
    cfg.batch_size = 32;
    cfg.learning_rate = 1e-3;
    cfg.blocks.dropout = 0.0;
    let mut model = EncoderModel::new(cfg.clone()).unwrap();
    let r = train(&mut model, &d, &cfg).unwrap();
    for w in r.epoch_loss[5..].windows(2) {
        assert!(w[1] <= w[0], "{:?}", r.epoch_loss);
    }
}

#[test]
fn checkpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let model = EncoderModel::new(tiny_config()).unwrap();
    model.save(&path).unwrap();
    let back = EncoderModel::load(&path).unwrap();
    assert_eq!(back, model);
    std::fs::write(&path, "{}").unwrap();
    assert!(matches!(EncoderModel::load(&path), Err(Error::Format(_))));
}
