use super::{MlpGrads, MlpParams, NnError};

/// Bias-corrected Adam optimizer state for one `MlpParams`.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &MlpParams, learning_rate: f64) -> Self {
        let layout: Vec<usize> = params
            .layers()
            .iter()
            .flat_map(|l| [l.weights.len(), l.bias.len()])
            .collect();
        Self {
            m: layout.iter().map(|&n| vec![0.0; n]).collect(),
            v: layout.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    fn check_layout(&self, params: &MlpParams) -> Result<(), NnError> {
        let expected: Vec<usize> = params
            .layers()
            .iter()
            .flat_map(|l| [l.weights.len(), l.bias.len()])
            .collect();
        let got: Vec<usize> = self.m.iter().map(|a| a.len()).collect();
        if expected != got {
            return Err(NnError::Shape("adam state layout does not match parameters".into()));
        }
        Ok(())
    }
}

/// One Adam update, in place. Gradients must match the parameter layout.
pub fn adam_step(params: &mut MlpParams, grads: &MlpGrads, state: &mut AdamState) -> Result<(), NnError> {
    state.check_layout(params)?;
    state.step += 1;
    let bc1 = 1.0 - state.beta1.powi(state.step as i32);
    let bc2 = 1.0 - state.beta2.powi(state.step as i32);

    let mut slot = 0;
    for (li, layer) in params.layers_mut().iter_mut().enumerate() {
        for (arr, grad) in [
            (&mut layer.weights, &grads.d_weights[li]),
            (&mut layer.bias, &grads.d_bias[li]),
        ] {
            if grad.len() != arr.len() {
                return Err(NnError::Shape(format!("gradient layout mismatch in layer {li}")));
            }
            let m = &mut state.m[slot];
            let v = &mut state.v[slot];
            for i in 0..arr.len() {
                let g = grad[i];
                m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
                v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                arr[i] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
            }
            slot += 1;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Layer, Tensor};

    fn scalar_mlp(w: f64) -> MlpParams {
        MlpParams::new(vec![Layer {
            weights: vec![w],
            bias: vec![0.0],
            activation: Activation::Identity,
            in_dim: 1,
            out_dim: 1,
        }])
        .unwrap()
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut mlp = scalar_mlp(0.7);
        let before = mlp.clone();
        let mut state = AdamState::new(&mlp, 0.1);
        let grads = MlpGrads::zeros_like(&mlp);
        adam_step(&mut mlp, &grads, &mut state).unwrap();
        assert_eq!(mlp, before);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_magnitude_is_learning_rate() {
        // With zero moments, the bias-corrected first update is lr * sign(g) up to epsilon.
        let mut mlp = scalar_mlp(0.0);
        let mut state = AdamState::new(&mlp, 0.05);
        let mut grads = MlpGrads::zeros_like(&mlp);
        grads.d_weights[0][0] = -3.2;
        adam_step(&mut mlp, &grads, &mut state).unwrap();
        let w = mlp.layers()[0].weights[0];
        assert!((w - 0.05).abs() < 1e-6, "update was {w}");
    }

    #[test]
    fn converges_on_quadratic() {
        // f(w) = (w - 3)^2 from w=0 with lr=0.1; df/dw = 2(w-3).
        let mut mlp = scalar_mlp(0.0);
        let mut state = AdamState::new(&mlp, 0.1);
        for _ in 0..100 {
            let w = mlp.layers()[0].weights[0];
            let mut grads = MlpGrads::zeros_like(&mlp);
            grads.d_weights[0][0] = 2.0 * (w - 3.0);
            adam_step(&mut mlp, &grads, &mut state).unwrap();
        }
        let w = mlp.layers()[0].weights[0];
        assert!((w - 3.0).abs() < 0.5, "w = {w}");
        let _ = Tensor::from_vec(vec![w]).unwrap();
    }
}
