use rand::Rng;

use super::{NnError, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed in terms of the activation output y.
    pub fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self, NnError> {
        match tag {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(NnError::Parse(format!("unknown activation tag `{other}`"))),
        }
    }
}

/// One dense layer: `y = act(W x + b)` with `W` stored row-major `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
    pub in_dim: usize,
    pub out_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layers: Vec<Layer>,
    input_dim: usize,
    output_dim: usize,
}

/// Per-layer parameter gradients matching the `MlpParams` layout.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub d_weights: Vec<Vec<f64>>,
    pub d_bias: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self {
            d_weights: params.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            d_bias: params.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn accumulate(&mut self, other: &MlpGrads) {
        for (a, b) in self.d_weights.iter_mut().zip(&other.d_weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.d_bias.iter_mut().zip(&other.d_bias) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in self.d_weights.iter_mut().chain(self.d_bias.iter_mut()) {
            for x in a.iter_mut() {
                *x *= s;
            }
        }
    }
}

/// Cached per-layer post-activation outputs from a forward pass, batch layout `(rows, out_dim)`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub layer_outputs: Vec<Vec<f64>>,
    pub rows: usize,
}

impl MlpParams {
    pub fn new(layers: Vec<Layer>) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::Shape("mlp needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.in_dim * l.out_dim {
                return Err(NnError::Shape(format!(
                    "layer {i}: weight len {} != {}x{}",
                    l.weights.len(),
                    l.out_dim,
                    l.in_dim
                )));
            }
            if l.bias.len() != l.out_dim {
                return Err(NnError::Shape(format!("layer {i}: bias len mismatch")));
            }
            if l.weights.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(NnError::NonFinite(format!("layer {i} parameters")));
            }
            if i > 0 && layers[i - 1].out_dim != l.in_dim {
                return Err(NnError::Shape(format!(
                    "layer {i}: in_dim {} does not chain with previous out_dim {}",
                    l.in_dim,
                    layers[i - 1].out_dim
                )));
            }
        }
        let input_dim = layers[0].in_dim;
        let output_dim = layers.last().unwrap().out_dim;
        Ok(Self { layers, input_dim, output_dim })
    }

    /// He-uniform initialisation: weights ~ U[-sqrt(6/fan_in), +sqrt(6/fan_in)], zero bias.
    pub fn init<R: Rng>(dims: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self, NnError> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(NnError::Shape(format!(
                "init needs dims (n>=2) and n-1 activations, got {} dims and {} activations",
                dims.len(),
                activations.len()
            )));
        }
        let mut layers = Vec::with_capacity(activations.len());
        for (i, &act) in activations.iter().enumerate() {
            let (in_dim, out_dim) = (dims[i], dims[i + 1]);
            let limit = (6.0 / in_dim as f64).sqrt();
            let weights = (0..in_dim * out_dim).map(|_| rng.gen_range(-limit..limit)).collect();
            layers.push(Layer {
                weights,
                bias: vec![0.0; out_dim],
                activation: act,
                in_dim,
                out_dim,
            });
        }
        Self::new(layers)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn assert_finite(&self, context: &str) -> Result<(), NnError> {
        for l in &self.layers {
            if l.weights.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(NnError::NonFinite(context.into()));
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &Tensor) -> Result<(), NnError> {
        if x.last_dim() != self.input_dim {
            return Err(NnError::Shape(format!(
                "input last dim {} != mlp input dim {}",
                x.last_dim(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// Forward pass over `[d]` or `[rows, d]` input.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor, NnError> {
        let cache = self.forward_cached(x)?;
        let out = cache.layer_outputs.last().unwrap().clone();
        let mut shape = x.shape().to_vec();
        *shape.last_mut().unwrap() = self.output_dim;
        Tensor::new(shape, out)
    }

    pub fn forward_cached(&self, x: &Tensor) -> Result<ForwardCache, NnError> {
        self.check_input(x)?;
        let rows = x.num_rows();
        let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut cur: &[f64] = x.data();
        for layer in &self.layers {
            let mut out = vec![0.0; rows * layer.out_dim];
            for r in 0..rows {
                let xin = &cur[r * layer.in_dim..(r + 1) * layer.in_dim];
                let yout = &mut out[r * layer.out_dim..(r + 1) * layer.out_dim];
                for (o, y) in yout.iter_mut().enumerate() {
                    let w = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    let mut z = layer.bias[o];
                    for (wi, xi) in w.iter().zip(xin) {
                        z += wi * xi;
                    }
                    *y = layer.activation.apply(z);
                }
            }
            outputs.push(out);
            cur = outputs.last().unwrap();
        }
        Ok(ForwardCache { layer_outputs: outputs, rows })
    }

    /// Exact reverse-mode gradients of the forward map.
    ///
    /// `upstream` has the output shape of the forward pass on `x`. Parameter
    /// gradients are summed over rows; the input gradient keeps the row layout.
    pub fn backward(
        &self,
        x: &Tensor,
        cache: &ForwardCache,
        upstream: &Tensor,
    ) -> Result<(MlpGrads, Tensor), NnError> {
        self.check_input(x)?;
        let rows = x.num_rows();
        if cache.rows != rows || cache.layer_outputs.len() != self.layers.len() {
            return Err(NnError::Shape("forward cache does not match input".into()));
        }
        if upstream.last_dim() != self.output_dim || upstream.num_rows() != rows {
            return Err(NnError::Shape(format!(
                "upstream shape {:?} does not match output ({} x {})",
                upstream.shape(),
                rows,
                self.output_dim
            )));
        }

        let mut grads = MlpGrads::zeros_like(self);
        let mut d_out: Vec<f64> = upstream.data().to_vec();

        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let y = &cache.layer_outputs[idx];
            // dL/dz = dL/dy * act'(y)
            let mut d_z = d_out;
            for (dz, &yv) in d_z.iter_mut().zip(y.iter()) {
                *dz *= layer.activation.grad_from_output(yv);
            }

            let x_in: &[f64] = if idx == 0 { x.data() } else { &cache.layer_outputs[idx - 1] };

            let dw = &mut grads.d_weights[idx];
            let db = &mut grads.d_bias[idx];
            let mut d_in = vec![0.0; rows * layer.in_dim];
            for r in 0..rows {
                let dz_r = &d_z[r * layer.out_dim..(r + 1) * layer.out_dim];
                let x_r = &x_in[r * layer.in_dim..(r + 1) * layer.in_dim];
                let din_r = &mut d_in[r * layer.in_dim..(r + 1) * layer.in_dim];
                for (o, &dz) in dz_r.iter().enumerate() {
                    db[o] += dz;
                    let w_row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    let dw_row = &mut dw[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for i in 0..layer.in_dim {
                        dw_row[i] += dz * x_r[i];
                        din_r[i] += dz * w_row[i];
                    }
                }
            }
            d_out = d_in;
        }

        let mut in_shape = x.shape().to_vec();
        *in_shape.last_mut().unwrap() = self.input_dim;
        let input_grad = Tensor::new(in_shape, d_out)?;
        Ok((grads, input_grad))
    }
}
