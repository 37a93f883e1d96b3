use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};

/// One affine layer, `y = W x + b`, with `W` stored as `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        let weight = Array2::from_shape_simple_fn((outputs, inputs), || dist.sample(rng));
        Self {
            weight,
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }
}

/// Multi-layer perceptron with tanh hidden activations and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Dense>,
}

/// Activations recorded by [`DenseNet::forward_tape`], consumed by
/// [`DenseNet::backward`].
#[derive(Debug, Clone, Default)]
pub struct Tape {
    /// `inputs[l]` is the (post-activation) input that fed layer `l`.
    inputs: Vec<Array2<f64>>,
}

impl Tape {
    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Parameter gradients shaped like a [`DenseNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub layers: Vec<Dense>,
}

impl DenseGrads {
    pub fn zero(&mut self) {
        for layer in &mut self.layers {
            layer.weight.fill(0.0);
            layer.bias.fill(0.0);
        }
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        flat_slices(&self.layers)
    }
}

impl DenseNet {
    /// Builds a network from explicit layers, checking that the dimensions chain.
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Contract("a network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::dim("layer chain", pair[0].outputs(), pair[1].inputs()));
            }
        }
        for layer in &layers {
            if layer.bias.len() != layer.outputs() {
                return Err(Error::dim("layer bias", layer.outputs(), layer.bias.len()));
            }
            if !layer.weight.iter().chain(layer.bias.iter()).all(|v| v.is_finite()) {
                return Err(Error::Contract("non-finite parameter".into()));
            }
        }
        Ok(Self { layers })
    }

    /// Random Glorot initialisation for the layer widths `sizes`
    /// (`sizes[0]` inputs, `sizes.last()` outputs).
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output widths");
        let layers = sizes
            .windows(2)
            .map(|w| Dense::glorot(w[0], w[1], rng))
            .collect();
        Self { layers }
    }

    /// Zeroes the output layer so the net initially maps everything to 0.
    pub fn zero_output_layer(&mut self) {
        let last = self.layers.last_mut().expect("non-empty");
        last.weight.fill(0.0);
        last.bias.fill(0.0);
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").outputs()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(Dense::outputs));
        sizes
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn zero_grads(&self) -> DenseGrads {
        DenseGrads {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs(), l.outputs()))
                .collect(),
        }
    }

    pub fn forward(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::dim("network input", self.input_dim(), x.len()));
        }
        let last = self.layers.len() - 1;
        let mut h = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.weight.dot(&h) + &layer.bias;
            if i < last {
                h.mapv_inplace(f64::tanh);
            }
        }
        Ok(h)
    }

    /// Batched forward pass; rows of `x` are samples.
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_batch(x)?;
        let last = self.layers.len() - 1;
        let mut h = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            h = affine(layer, h.view());
            if i < last {
                h.mapv_inplace(f64::tanh);
            }
        }
        Ok(h)
    }

    /// Batched forward pass that keeps what [`backward`](Self::backward) needs.
    pub fn forward_tape(&self, x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Tape)> {
        self.check_batch(x)?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let next = affine(layer, h.view());
            inputs.push(h);
            h = next;
            if i < last {
                h.mapv_inplace(f64::tanh);
            }
        }
        Ok((h, Tape { inputs }))
    }

    /// Reverse pass. Accumulates parameter gradients into `grads` and returns
    /// the gradient with respect to the network input.
    pub fn backward(
        &self,
        tape: &Tape,
        grad_out: ArrayView2<'_, f64>,
        grads: &mut DenseGrads,
    ) -> Result<Array2<f64>> {
        if tape.is_empty() {
            return Err(Error::Contract("backward called before forward".into()));
        }
        if tape.inputs.len() != self.layers.len() || grads.layers.len() != self.layers.len() {
            return Err(Error::Contract("tape or gradients belong to another network".into()));
        }
        if grad_out.ncols() != self.output_dim() || grad_out.nrows() != tape.inputs[0].nrows() {
            return Err(Error::dim("output gradient", self.output_dim(), grad_out.ncols()));
        }
        let last = self.layers.len() - 1;
        let mut g = grad_out.to_owned();
        for l in (0..self.layers.len()).rev() {
            if l < last {
                // tanh'(x) = 1 - tanh(x)^2, and tanh(x) is the next layer's input.
                g.zip_mut_with(&tape.inputs[l + 1], |g, &a| *g *= 1.0 - a * a);
            }
            let input = &tape.inputs[l];
            let slot = &mut grads.layers[l];
            ndarray::linalg::general_mat_mul(1.0, &g.t(), input, 1.0, &mut slot.weight);
            slot.bias += &g.sum_axis(Axis(0));
            g = g.dot(&self.layers[l].weight);
        }
        Ok(g)
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        flat_slices(&self.layers)
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for layer in &mut self.layers {
            out.push(layer.weight.as_slice_mut().expect("standard layout"));
            out.push(layer.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.param_slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    fn check_batch(&self, x: ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::dim("network input", self.input_dim(), x.ncols()));
        }
        Ok(())
    }
}

fn affine(layer: &Dense, x: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = x.dot(&layer.weight.t());
    out += &layer.bias;
    out
}

fn flat_slices(layers: &[Dense]) -> Vec<&[f64]> {
    let mut out = Vec::with_capacity(layers.len() * 2);
    for layer in layers {
        out.push(layer.weight.as_slice().expect("standard layout"));
        out.push(layer.bias.as_slice().expect("standard layout"));
    }
    out
}
