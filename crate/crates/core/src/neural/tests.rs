use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::detect::SubblockMatrix;
use num_complex::Complex64;

fn small_dims() -> ModelDims {
    ModelDims { t: 2, u: 4, p: 4, f: 3, tau: 5 }
}

fn random_batch(rng: &mut ChaCha8Rng, d: &ModelDims, n: usize) -> Vec<TrainingExample<f64>> {
    (0..n)
        .map(|_| TrainingExample {
            input: (0..d.input_len()).map(|_| rng.random_range(-2.0..2.0)).collect(),
            target: (0..d.output_len()).map(|_| f64::from(rng.random_range(0..2u8))).collect(),
        })
        .collect()
}

fn mean_sq_loss(model: &FineDetectorModel<f64>, batch: &[TrainingExample<f64>]) -> f64 {
    batch
        .iter()
        .map(|e| loss_eval(&e.target, &model.forward(&e.input).unwrap()).unwrap().powi(2))
        .sum::<f64>()
        / batch.len() as f64
}

#[test]
fn zero_model_outputs() {
    let d = small_dims();
    let model = FineDetectorModel::<f64>::zeros(d).unwrap();
    let x = vec![0.7; d.input_len()];
    assert!(model.cnn_forward(&x).unwrap().iter().all(|&v| v == 0.0));
    assert!(model.forward(&x).unwrap().iter().all(|&v| v == 0.5));
}

#[test]
fn single_kernel_reads_real_part() {
    let d = ModelDims { t: 1, u: 4, p: 1, f: 1, tau: 1 };
    let mut model = FineDetectorModel::<f64>::zeros(d).unwrap();
    model.params_mut().w = vec![1.0, 0.0];
    let psi = [
        Complex64::new(1.0, 2.0),
        Complex64::new(-3.0, 0.5),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 1.0),
    ];
    let blk = SubblockMatrix::from_rows(&[&psi]).unwrap();
    let theta = model.cnn_forward(&subblock_input(&blk)).unwrap();
    assert_eq!(theta, vec![1f64.tanh(), (-3f64).tanh(), 0.0, 0.0]);
}

#[test]
fn scalar_chain_by_hand() {
    let d = ModelDims { t: 1, u: 1, p: 1, f: 1, tau: 1 };
    let params = Params {
        w: vec![0.5, -1.0],
        c: vec![0.1],
        a1: vec![2.0],
        b1: vec![-0.3],
        a2: vec![1.5],
        b2: vec![0.2],
    };
    let model = FineDetectorModel::from_params(d, params).unwrap();
    let x = [0.8, 0.4];
    let theta = (0.5f64 * 0.8 - 0.4 + 0.1).tanh();
    let h = (2.0 * theta - 0.3).tanh();
    let s = 1.0 / (1.0 + (-(1.5 * h + 0.2)).exp());
    assert!((model.forward(&x).unwrap()[0] - s).abs() < 1e-15);
}

#[test]
fn outputs_stay_in_open_unit_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = small_dims();
    let model = FineDetectorModel::<f64>::random(d, &mut rng).unwrap();
    for ex in random_batch(&mut rng, &d, 50) {
        let x: Vec<f64> = ex.input.iter().map(|v| v * 100.0).collect();
        assert!(model.cnn_forward(&x).unwrap().iter().all(|v| v.abs() <= 1.0));
        assert!(model.forward(&x).unwrap().iter().all(|&v| v > 0.0 && v < 1.0));
    }
}

#[test]
fn convolution_is_position_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = small_dims();
    let model = FineDetectorModel::<f64>::random(d, &mut rng).unwrap();
    for _ in 0..20 {
        let x: Vec<f64> = (0..d.input_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut perm: Vec<usize> = (0..d.u).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let mut xp = vec![0.0; x.len()];
        for (dst, &src) in perm.iter().enumerate() {
            let w = 2 * d.t;
            xp[dst * w..(dst + 1) * w].copy_from_slice(&x[src * w..(src + 1) * w]);
        }
        let th = model.cnn_forward(&x).unwrap();
        let thp = model.cnn_forward(&xp).unwrap();
        for f in 0..d.f {
            for (dst, &src) in perm.iter().enumerate() {
                assert_eq!(thp[f * d.u + dst], th[f * d.u + src]);
            }
        }
    }
}

#[test]
fn batched_forward_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = ModelDims { t: 2, u: 4, p: 6, f: 7, tau: 9 };
    let model = FineDetectorModel::<f64>::random(d, &mut rng).unwrap();
    let batch = random_batch(&mut rng, &d, 13);
    let inputs: Vec<Vec<f64>> = batch.iter().map(|e| e.input.clone()).collect();
    let soft = predict_batch(&model, &inputs).unwrap();
    for (x, s) in inputs.iter().zip(&soft) {
        for (a, b) in model.forward(x).unwrap().iter().zip(s) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = small_dims();
    for _ in 0..5 {
        let model = FineDetectorModel::<f64>::random(d, &mut rng).unwrap();
        let batch = random_batch(&mut rng, &d, 6);
        let g = model_grad(&batch, &model).unwrap();
        assert!((g.loss_sq - mean_sq_loss(&model, &batch)).abs() < 1e-12);
        let step = 1e-6;
        for (gi, name) in Params::<f64>::NAMES.iter().enumerate() {
            for k in 0..g.grad.groups()[gi].len() {
                let mut plus = model.clone();
                plus.params_mut().groups_mut()[gi][k] += step;
                let mut minus = model.clone();
                minus.params_mut().groups_mut()[gi][k] -= step;
                let fd = (mean_sq_loss(&plus, &batch) - mean_sq_loss(&minus, &batch)) / (2.0 * step);
                let an = g.grad.groups()[gi][k];
                let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-4);
                assert!(rel < 1e-5, "{name}[{k}]: analytic {an}, numeric {fd}");
            }
        }
    }
}

#[test]
fn batch_gradient_is_mean_of_example_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let d = small_dims();
    let model = FineDetectorModel::<f64>::random(d, &mut rng).unwrap();
    let batch = random_batch(&mut rng, &d, 10);
    let full = model_grad(&batch, &model).unwrap().grad;
    let mut mean = Params::<f64>::zeros(&d);
    for ex in &batch {
        let g = model_grad(std::slice::from_ref(ex), &model).unwrap().grad;
        for (m, gg) in mean.groups_mut().into_iter().zip(g.groups()) {
            for (a, b) in m.iter_mut().zip(gg) {
                *a += b / batch.len() as f64;
            }
        }
    }
    for (a, b) in full.groups().iter().zip(mean.groups()) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}

#[test]
fn zero_gradient_when_prediction_is_exact() {
    // With every weight zero the output is 0.5; a 0.5 target is then exact.
    let d = small_dims();
    let model = FineDetectorModel::<f64>::zeros(d).unwrap();
    let ex = TrainingExample {
        input: vec![0.3; d.input_len()],
        target: vec![0.5; d.output_len()],
    };
    let g = model_grad(&[ex], &model).unwrap();
    assert_eq!(g.loss_sq, 0.0);
    assert!(g.grad.groups().iter().all(|grp| grp.iter().all(|&x| x == 0.0)));
}

#[test]
fn loss_values() {
    assert_eq!(loss_eval(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
    assert!((loss_eval(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    assert!(loss_eval(&[1.0], &[0.5, 0.5]).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let a: Vec<f64> = (0..5).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..5).map(|_| rng.random()).collect();
        let l = loss_eval(&a, &b).unwrap();
        assert!(l >= 0.0);
        assert_eq!(l, loss_eval(&b, &a).unwrap());
    }
}

#[test]
fn hard_decisions() {
    assert_eq!(threshold_bits(&[0.49f64, 0.51, 0.5]), vec![0, 1, 1]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = small_dims();
    let model = FineDetectorModel::<f32>::random(d, &mut rng).unwrap();
    let bits = model.detect_bits(&vec![0.1; d.input_len()]).unwrap();
    assert_eq!(bits.len(), d.output_len());
    assert!(bits.iter().all(|&b| b <= 1));
}

#[test]
fn dimension_errors() {
    let d = small_dims();
    let model = FineDetectorModel::<f64>::zeros(d).unwrap();
    assert!(model.cnn_forward(&[0.0; 3]).is_err());
    assert!(model.fcnn_forward(&[0.0; 3]).is_err());
    let bad = TrainingExample {
        input: vec![0.0; d.input_len()],
        target: vec![0.0; 3],
    };
    assert!(model_grad(&[bad], &model).is_err());
    assert!(FineDetectorModel::from_params(d, Params::<f64>::zeros(&ModelDims { tau: 6, ..d })).is_err());
}

#[test]
fn text_roundtrip_is_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let d = small_dims();
    let m64 = FineDetectorModel::<f64>::random(d, &mut rng).unwrap();
    assert_eq!(model_from_text::<f64>(&model_to_text(&m64)).unwrap(), m64);
    let m32 = m64.cast::<f32>();
    assert_eq!(model_from_text::<f32>(&model_to_text(&m32)).unwrap(), m32);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    model_save(&m64, &path).unwrap();
    assert_eq!(model_load::<f64>(&path).unwrap(), m64);
}

#[test]
fn text_section_order_follows_schema() {
    let d = ModelDims { t: 1, u: 1, p: 1, f: 1, tau: 1 };
    let text = model_to_text(&FineDetectorModel::<f64>::zeros(d).unwrap());
    let names: Vec<&str> = text.lines().filter(|l| l.chars().next().is_some_and(char::is_alphabetic)).collect();
    assert_eq!(
        names,
        ["smximodel v1", "dims t=1 u=1 p=1 f=1 tau=1", "w", "c", "a1", "b1", "a2", "b2", "end"]
    );
}

#[test]
fn corrupt_files_are_rejected() {
    let d = small_dims();
    let good = model_to_text(&FineDetectorModel::<f64>::zeros(d).unwrap());
    let cases = [
        good.replacen("smximodel v1", "smximodel v2", 1),
        good.replacen("smximodel", "model", 1),
        good.replacen("tau=5", "tau=6", 1),
        good.replacen("\nb1\n", "\nbx\n", 1),
        good.replacen("end\n", "", 1),
        good.replacen("\nc\n0 0 0", "\nc\n0 0 zero", 1),
        good.replacen("\nc\n0 0 0", "\nc\n0 0", 1),
        String::new(),
    ];
    for (i, text) in cases.iter().enumerate() {
        assert!(
            matches!(model_from_text::<f64>(text), Err(crate::Error::ModelFormat(_))),
            "case {i} accepted"
        );
    }
}

#[test]
fn training_reduces_loss_and_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let d = ModelDims { t: 1, u: 4, p: 4, f: 8, tau: 16 };
    // Learn to read the sign of each real input.
    let data: Vec<TrainingExample<f64>> = (0..400)
        .map(|_| {
            let input: Vec<f64> = (0..d.input_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let target = (0..4).map(|g| f64::from(input[d.input_index(g, 0, 0)] < 0.0)).collect();
            TrainingExample { input, target }
        })
        .collect();
    let cfg = TrainingConfig {
        lr: 0.01,
        batch: 32,
        epochs: 40,
        seed: 3,
        ..TrainingConfig::default()
    };
    let a = train_model(&data, d, &cfg).unwrap();
    assert!(a.epoch_loss.iter().all(|l| l.is_finite()));
    assert!(a.epoch_loss.last().unwrap() < &(0.5 * a.epoch_loss[0]));
    let b = train_model(&data, d, &cfg).unwrap();
    assert_eq!(model_to_text(&a.model), model_to_text(&b.model));
}

#[test]
fn training_can_overfit_small_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d = ModelDims { t: 2, u: 4, p: 4, f: 16, tau: 64 };
    let data = random_batch(&mut rng, &d, 100);
    let cfg = TrainingConfig {
        lr: 0.01,
        batch: 20,
        epochs: 400,
        seed: 1,
        ..TrainingConfig::default()
    };
    let out = train_model(&data, d, &cfg).unwrap();
    let (mut right, mut total) = (0, 0);
    for ex in &data {
        let bits = out.model.detect_bits(&ex.input).unwrap();
        for (b, t) in bits.iter().zip(&ex.target) {
            right += usize::from(f64::from(*b) == *t);
            total += 1;
        }
    }
    assert!(right as f64 / total as f64 > 0.99, "accuracy {right}/{total}");
}

#[test]
fn training_rejects_bad_inputs() {
    let d = small_dims();
    let cfg = TrainingConfig::default();
    assert!(train_model::<f64>(&[], d, &cfg).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let data = random_batch(&mut rng, &d, 2);
    assert!(train_model(&data, ModelDims { u: 3, ..d }, &cfg).is_err());
    assert!(train_model(&data, d, &TrainingConfig { lr: 0.0, ..cfg.clone() }).is_err());
    assert!(train_model(&data, d, &TrainingConfig { batch: 0, ..cfg }).is_err());
}
