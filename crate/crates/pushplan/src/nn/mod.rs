//! Minimal dense-tensor and MLP machinery with exact backpropagation and Adam.
//!
//! Everything is 64-bit floats and single-threaded; all randomness flows
//! through explicit RNG arguments so training is reproducible bit for bit.

mod adam;
mod io;
mod mlp;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use io::ModelFile;
pub use mlp::{Activation, ForwardCache, Layer, MlpGrads, MlpParams};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

#[cfg(test)]
mod grad_check {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1.0)
    }

    fn loss(mlp: &MlpParams, x: &[f64], target: &[f64]) -> f64 {
        let y = mlp.forward(&Tensor::from_vec(x.to_vec()).unwrap()).unwrap();
        0.5 * y.data().iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }

    /// Analytic vs. central finite-difference gradients on random small nets.
    ///
    /// Hidden layers alternate tanh and relu; for relu nets a coordinate whose
    /// pre-activation sits within the step of a kink is skipped, since finite
    /// differences are meaningless across the kink.
    #[test]
    fn analytic_matches_finite_differences_on_20_nets() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let h = 1e-5;
        for net_idx in 0..20 {
            let n_layers = rng.gen_range(1..=3usize);
            let mut dims = vec![rng.gen_range(1..=16usize)];
            for _ in 0..n_layers {
                dims.push(rng.gen_range(1..=16usize));
            }
            let hidden = if net_idx % 2 == 0 { Activation::Tanh } else { Activation::Relu };
            let acts: Vec<Activation> = (0..n_layers)
                .map(|i| if i == n_layers - 1 { Activation::Identity } else { hidden })
                .collect();
            let mlp = MlpParams::init(&dims, &acts, &mut rng).unwrap();
            let x: Vec<f64> = (0..dims[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let target: Vec<f64> = (0..*dims.last().unwrap()).map(|_| rng.gen_range(-1.0..1.0)).collect();

            // L = 0.5 * ||y - target||^2, so dL/dy = y - target.
            let xt = Tensor::from_vec(x.clone()).unwrap();
            let cache = mlp.forward_cached(&xt).unwrap();
            let y = cache.layer_outputs.last().unwrap().clone();
            let upstream: Vec<f64> = y.iter().zip(&target).map(|(a, b)| a - b).collect();
            let (grads, input_grad) =
                mlp.backward(&xt, &cache, &Tensor::from_vec(upstream).unwrap()).unwrap();

            // A perturbation is kink-free if no relu pre-activation output is
            // near zero anywhere in the cached forward pass.
            let near_kink = hidden == Activation::Relu
                && cache
                    .layer_outputs
                    .iter()
                    .zip(mlp.layers())
                    .filter(|(_, l)| l.activation == Activation::Relu)
                    .any(|(out, _)| out.iter().any(|&v| v.abs() < 1e-3));
            if near_kink {
                continue;
            }

            for li in 0..mlp.layers().len() {
                for wi in 0..mlp.layers()[li].weights.len() {
                    let num = {
                        let mut plus = mlp.clone();
                        plus.layers_mut()[li].weights[wi] += h;
                        let mut minus = mlp.clone();
                        minus.layers_mut()[li].weights[wi] -= h;
                        (loss(&plus, &x, &target) - loss(&minus, &x, &target)) / (2.0 * h)
                    };
                    let ana = grads.d_weights[li][wi];
                    assert!(
                        rel_err(ana, num) < 1e-4,
                        "net {net_idx} layer {li} w{wi}: analytic {ana} vs fd {num}"
                    );
                }
                for bi in 0..mlp.layers()[li].bias.len() {
                    let num = {
                        let mut plus = mlp.clone();
                        plus.layers_mut()[li].bias[bi] += h;
                        let mut minus = mlp.clone();
                        minus.layers_mut()[li].bias[bi] -= h;
                        (loss(&plus, &x, &target) - loss(&minus, &x, &target)) / (2.0 * h)
                    };
                    let ana = grads.d_bias[li][bi];
                    assert!(
                        rel_err(ana, num) < 1e-4,
                        "net {net_idx} layer {li} b{bi}: analytic {ana} vs fd {num}"
                    );
                }
            }
            for xi in 0..x.len() {
                let num = {
                    let mut plus = x.clone();
                    plus[xi] += h;
                    let mut minus = x.clone();
                    minus[xi] -= h;
                    (loss(&mlp, &plus, &target) - loss(&mlp, &minus, &target)) / (2.0 * h)
                };
                let ana = input_grad.data()[xi];
                assert!(
                    rel_err(ana, num) < 1e-4,
                    "net {net_idx} input {xi}: analytic {ana} vs fd {num}"
                );
            }
        }
    }
}
