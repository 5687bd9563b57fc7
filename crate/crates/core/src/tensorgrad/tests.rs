use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gradcheck::{check_gradients, GradCheckOptions};
use super::*;
use crate::error::Error;

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn matmul_identity_and_zero() {
    let mut t = Tape::new();
    let eye = t.constant(Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap());
    let m = t.constant(Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
    let p = t.matmul(eye, m).unwrap();
    assert_eq!(t.value(p), &[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(t.shape(p), &[2, 2]);

    let a = t.constant(Tensor::matrix(1, 2, vec![1.0, 2.0]).unwrap());
    let z = t.constant(Tensor::matrix(2, 1, vec![0.0, 0.0]).unwrap());
    let p = t.matmul(a, z).unwrap();
    assert_eq!(t.value(p), &[0.0]);
    assert_eq!(t.shape(p), &[1, 1]);
}

#[test]
fn matmul_shape_error_names_both_shapes() {
    let mut t = Tape::new();
    let a = t.constant(Tensor::zeros(&[2, 3]));
    let b = t.constant(Tensor::zeros(&[2, 3]));
    match t.matmul(a, b) {
        Err(Error::Shape { left, right, .. }) => {
            assert_eq!(left, vec![2, 3]);
            assert_eq!(right, vec![2, 3]);
        }
        other => panic!("expected shape error, got {other:?}"),
    }
    let msg = t.matmul(a, b).unwrap_err().to_string();
    assert!(msg.contains("[2, 3]"), "{msg}");
}

#[test]
fn matmul_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inputs = vec![rand_tensor(&mut rng, &[3, 4]), rand_tensor(&mut rng, &[4, 2])];
    let report = check_gradients(&inputs, &GradCheckOptions::default(), |t, v| {
        let p = t.matmul(v[0], v[1])?;
        Ok(t.sum(p))
    })
    .unwrap();
    assert_eq!(report.coords_checked, 20);
    assert!(report.max_rel_error < 1e-6, "{report:?}");
}

#[test]
fn sigmoid_value_and_slope_at_zero() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::scalar(0.0));
    let y = t.sigmoid(x);
    assert_eq!(t.scalar(y), 0.5);
    let g = t.backward(y).unwrap();
    assert_eq!(g.get(x).unwrap(), &[0.25]);
}

#[test]
fn cumsum_softmax_basics() {
    let mut t = Tape::new();
    let x = t.constant(Tensor::vector(vec![1.0, 2.0, 3.0]));
    let c = t.cumsum(x);
    assert_eq!(t.value(c), &[1.0, 3.0, 6.0]);
    let z = t.constant(Tensor::vector(vec![0.0, 0.0]));
    let s = t.softmax(z);
    assert_eq!(t.value(s), &[0.5, 0.5]);
}

#[test]
fn softmax_is_stable_for_large_inputs() {
    let mut t = Tape::new();
    let x = t.constant(Tensor::vector(vec![1000.0, 0.0]));
    let s = t.softmax(x);
    assert!(t.value(s).iter().all(|v| v.is_finite()));
    assert!((t.value(s)[0] - 1.0).abs() < 1e-12);
}

#[test]
fn cross_entropy_cases() {
    let mut t = Tape::new();
    let l = t.constant(Tensor::vector(vec![0.3; 4]));
    let ce = t.cross_entropy(l, 2).unwrap();
    assert!((t.scalar(ce) - 4f64.ln()).abs() < 1e-12);

    let l = t.constant(Tensor::vector(vec![20.0, 0.0, 0.0]));
    let ce = t.cross_entropy(l, 0).unwrap();
    assert!(t.scalar(ce) < 1e-6);

    assert!(matches!(
        t.cross_entropy(l, 3),
        Err(Error::Index { index: 3, bound: 3, .. })
    ));
}

#[test]
fn cross_entropy_matches_log_sum_exp_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let v: usize = rng.gen_range(2..30);
        let logits: Vec<f64> = (0..v).map(|_| rng.gen_range(-8.0..8.0)).collect();
        let target = rng.gen_range(0..v);
        // Oracle: naive log of summed exponentials (fine at this range).
        let expected = logits.iter().map(|x| x.exp()).sum::<f64>().ln() - logits[target];
        let mut t = Tape::new();
        let l = t.constant(Tensor::vector(logits));
        let ce = t.cross_entropy(l, target).unwrap();
        assert!((t.scalar(ce) - expected).abs() < 1e-10);
    }
}

#[test]
fn backward_identity_and_scalar_contract() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::scalar(2.5));
    let g = t.backward(x).unwrap();
    assert_eq!(g.get(x).unwrap(), &[1.0]);

    let v = t.leaf(Tensor::vector(vec![1.0, 2.0]));
    assert!(matches!(t.backward(v), Err(Error::Contract(_))));
}

#[test]
fn concat_narrow_repeat_shapes() {
    let mut t = Tape::new();
    let a = t.constant(Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
    let b = t.constant(Tensor::matrix(2, 1, vec![9.0, 8.0]).unwrap());
    let c = t.concat(&[a, b], 1).unwrap();
    assert_eq!(t.shape(c), &[2, 3]);
    assert_eq!(t.value(c), &[1.0, 2.0, 9.0, 3.0, 4.0, 8.0]);
    let c0 = t.concat(&[a, a], 0).unwrap();
    assert_eq!(t.shape(c0), &[4, 2]);
    assert!(t.concat(&[a, b], 0).is_err());

    let r = t.row(a, 1).unwrap();
    assert_eq!(t.value(r), &[3.0, 4.0]);
    assert!(t.row(a, 2).is_err());

    let x = t.constant(Tensor::vector(vec![1.0, 2.0]));
    let rep = t.repeat(x, 3).unwrap();
    assert_eq!(t.value(rep), &[1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
}

#[test]
fn elementwise_shape_mismatch_is_an_error() {
    let mut t = Tape::new();
    let a = t.constant(Tensor::zeros(&[3]));
    let b = t.constant(Tensor::zeros(&[4]));
    assert!(matches!(t.add(a, b), Err(Error::Shape { op: "add", .. })));
    assert!(matches!(t.mul(a, b), Err(Error::Shape { op: "mul", .. })));
}

#[test]
fn sum_of_product_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inputs = vec![rand_tensor(&mut rng, &[4, 3]), rand_tensor(&mut rng, &[3, 5])];
    let report = check_gradients(&inputs, &GradCheckOptions::default(), |t, v| {
        let p = t.matmul(v[0], v[1])?;
        Ok(t.sum(p))
    })
    .unwrap();
    assert!(report.max_rel_error < 1e-6, "{report:?}");
}

/// A random composition of every primitive, with a few hundred parameters.
fn composed(t: &mut Tape, v: &[Var], target: usize, repeat: usize) -> crate::Result<Var> {
    let (w, x, u, b) = (v[0], v[1], v[2], v[3]);
    let z = t.matmul(w, x)?; // [8]
    let z = t.add(z, b)?;
    let s = t.sigmoid(z);
    let th = t.tanh(z);
    let m = t.mul(s, th)?;
    let d = t.sub(m, s)?;
    let sm = t.softmax(d);
    let cu = t.cumsum(sm);
    let om = t.one_minus(cu);
    let head = t.narrow(om, 0, 8 / repeat)?;
    let rep = t.repeat(head, repeat)?;
    let mix = t.mul(rep, th)?;
    let cat = t.concat(&[mix, d], 0)?; // [16]
    let logits = t.matmul(u, cat)?; // [6]
    let sc = t.scale(logits, 1.7);
    let ce = t.cross_entropy(sc, target)?;
    let extra = t.sum(cu);
    let extra = t.scale(extra, 0.1);
    t.add(ce, extra)
}

#[test]
fn composed_graph_gradients_over_many_seeds() {
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = vec![
            rand_tensor(&mut rng, &[8, 5]),
            rand_tensor(&mut rng, &[5]),
            rand_tensor(&mut rng, &[6, 16]),
            rand_tensor(&mut rng, &[8]),
        ];
        let target = rng.gen_range(0..6);
        let repeat = [1, 2, 4, 8][rng.gen_range(0..4)];
        let report = check_gradients(&inputs, &GradCheckOptions::default(), |t, v| {
            composed(t, v, target, repeat)
        })
        .unwrap();
        assert!(report.max_rel_error < 1e-4, "seed {seed}: {report:?}");
    }
}

#[test]
fn replay_is_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let inputs = vec![
        rand_tensor(&mut rng, &[8, 5]),
        rand_tensor(&mut rng, &[5]),
        rand_tensor(&mut rng, &[6, 16]),
        rand_tensor(&mut rng, &[8]),
    ];
    let run = || {
        let mut t = Tape::new();
        let v: Vec<Var> = inputs.iter().map(|x| t.leaf(x.clone())).collect();
        let out = composed(&mut t, &v, 2, 2).unwrap();
        let g = t.backward(out).unwrap();
        let grads: Vec<Vec<f64>> = v.iter().map(|x| g.get_or_zeros(*x)).collect();
        (t.scalar(out).to_bits(), grads)
    };
    let (a, ga) = run();
    let (b, gb) = run();
    assert_eq!(a, b);
    for (x, y) in ga.iter().zip(&gb) {
        assert!(x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

#[test]
fn constants_receive_no_gradient() {
    let mut t = Tape::new();
    let c = t.constant(Tensor::vector(vec![1.0, 2.0]));
    let x = t.leaf(Tensor::vector(vec![3.0, 4.0]));
    let p = t.mul(c, x).unwrap();
    let s = t.sum(p);
    let g = t.backward(s).unwrap();
    assert!(g.get(c).is_none());
    assert_eq!(g.get(x).unwrap(), &[1.0, 2.0]);
}

#[test]
fn tensor_contracts() {
    assert!(Tensor::new(vec![2, 2], vec![0.0; 3]).is_err());
    assert!(Tensor::new(vec![0], vec![]).is_err());
    assert_eq!(Tensor::scalar(4.0).item(), Some(4.0));
}

#[test]
fn cross_entropy_propagates_nan() {
    let mut t = Tape::new();
    let x = t.constant(Tensor::vector(vec![0.0, f64::NAN, 1.0]));
    let l = t.cross_entropy(x, 0).unwrap();
    assert!(t.scalar(l).is_nan());
}
