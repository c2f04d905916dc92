//! Finite-difference oracle shared by unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use crate::gradcheck::rel_err;

use crate::error::Result;
use crate::tensor::{Element, Tape, Tensor, Var};

pub fn random_tensor<E: Element>(shape: &[usize], seed: u64) -> Tensor<E> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    let data = (0..n).map(|_| E::of(rng.random_range(-1.0..1.0))).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// Autodiff and central-difference gradients of `f` with respect to every
/// input that requires gradients. Returns `(autodiff, finite_difference)`
/// per such input, in input order.
pub fn gradients<E, F>(inputs: &[Tensor<E>], step: f64, f: F) -> Vec<(Vec<f64>, Vec<f64>)>
where
    E: Element,
    F: Fn(&mut Tape<E>, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t)).collect();
    let loss = f(&mut tape, &vars).unwrap();
    let grads = tape.backward(loss).unwrap();

    let eval = |ts: &[Tensor<E>]| -> f64 {
        let mut tape = Tape::no_grad();
        let vars: Vec<Var> = ts.iter().map(|t| tape.leaf(t)).collect();
        let loss = f(&mut tape, &vars).unwrap();
        tape.value(loss)[0].as_f64()
    };

    let mut out = Vec::new();
    for (i, t) in inputs.iter().enumerate() {
        if !t.requires_grad() {
            continue;
        }
        let ad: Vec<f64> = grads
            .get(vars[i])
            .map(|g| g.iter().map(|v| v.as_f64()).collect())
            .unwrap_or_else(|| vec![0.0; t.numel()]);
        let mut fd = Vec::with_capacity(t.numel());
        for j in 0..t.numel() {
            let mut probe = inputs.to_vec();
            let base = probe[i].data()[j].as_f64();
            let (hi, lo) = (E::of(base + step), E::of(base - step));
            probe[i].data_mut()[j] = hi;
            let up = eval(&probe);
            probe[i].data_mut()[j] = lo;
            let down = eval(&probe);
            fd.push((up - down) / (hi.as_f64() - lo.as_f64()));
        }
        out.push((ad, fd));
    }
    out
}
