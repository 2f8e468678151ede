//! Dense feed-forward Q-value approximator with exact backpropagation.
//!
//! Hidden layers use the rectifier; the output layer is affine so it can
//! represent arbitrary Q-values.

use rand::Rng;
use std::fmt::Write as _;
use thiserror::Error;

/// Fully connected layer, weights stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Glorot-uniform weights in ±sqrt(6 / (fan_in + fan_out)), zero bias.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.bias.iter().zip(self.weights.chunks_exact(self.inputs)).map(
            |(b, row)| b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>(),
        ));
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("layer {index} expects {expected} inputs but the previous layer has {found} outputs")]
    Shape {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("network needs at least one layer")]
    Empty,
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

/// Parameter gradients, shaped like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    /// All partial derivatives flattened in `QNetwork::params` order.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    layers: Vec<Dense>,
}

impl QNetwork {
    /// Randomly initialised network with the given layer sizes,
    /// e.g. `[6, 32, 32, 2]`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need input and output sizes");
        Self {
            layers: sizes.windows(2).map(|w| Dense::glorot(w[0], w[1], rng)).collect(),
        }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "need input and output sizes");
        Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self, NetworkError> {
        if layers.is_empty() {
            return Err(NetworkError::Empty);
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(NetworkError::Checkpoint(format!(
                    "layer {i} has inconsistent parameter counts"
                )));
            }
            if i > 0 && layers[i - 1].outputs != l.inputs {
                return Err(NetworkError::Shape {
                    index: i,
                    expected: l.inputs,
                    found: layers[i - 1].outputs,
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs)
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn action_count(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    /// Q-values for every action. Panics if `state` has the wrong dimension.
    pub fn forward(&self, state: &[f64]) -> Vec<f64> {
        assert_eq!(
            state.len(),
            self.input_dim(),
            "state dimension does not match network input"
        );
        let mut x = state.to_vec();
        let mut y = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.affine(&x, &mut y);
            if i < last {
                y.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut x, &mut y);
        }
        x
    }

    /// Post-activation outputs of every layer, starting with the input.
    fn trace(&self, state: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(state.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut y = Vec::new();
            layer.affine(&acts[i], &mut y);
            if i < last {
                y.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(y);
        }
        acts
    }

    /// Mean squared error between `forward(s)[a]` and `target` over the batch
    /// of `(state, action, target)` triples, with its exact gradient.
    pub fn loss_and_gradients(&self, batch: &[(&[f64], usize, f64)]) -> (f64, Gradients) {
        assert!(!batch.is_empty(), "empty batch");
        let mut grads = Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
        };
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for &(state, action, target) in batch {
            assert_eq!(state.len(), self.input_dim(), "state dimension mismatch");
            let acts = self.trace(state);
            let q = acts[acts.len() - 1][action];
            let err = q - target;
            loss += err * err * scale;

            let mut delta = vec![0.0; self.action_count()];
            delta[action] = 2.0 * err * scale;
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                let g = &mut grads.layers[li];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    g.bias[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, &xi) in row.iter_mut().zip(input) {
                        *gw += d * xi;
                    }
                }
                if li == 0 {
                    break;
                }
                // Back through the weights, then the rectifier of layer li-1.
                let mut prev = vec![0.0; layer.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, &w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                for (p, &a) in prev.iter_mut().zip(input) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        (loss, grads)
    }

    /// w ← w − η · ∇w.
    pub fn apply_gradients(&mut self, grads: &Gradients, learning_rate: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, gw) in l.weights.iter_mut().zip(&g.weights) {
                *w -= learning_rate * gw;
            }
            for (b, gb) in l.bias.iter_mut().zip(&g.bias) {
                *b -= learning_rate * gb;
            }
        }
    }

    /// Overwrites this network's parameters with a copy of `other`'s.
    pub fn copy_from(&mut self, other: &QNetwork) {
        assert_eq!(
            self.layer_sizes(),
            other.layer_sizes(),
            "cannot copy between differently shaped networks"
        );
        self.layers.clone_from(&other.layers);
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count());
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = it.next().expect("length checked");
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Text checkpoint: a header line, the layer sizes, then one line of
    /// row-major weights and one line of biases per layer. Values use the
    /// shortest representation that parses back to the same bits.
    pub fn to_checkpoint(&self) -> String {
        let mut out = String::from("ratsteer-qnet 1\nlayers");
        for s in self.layer_sizes() {
            let _ = write!(out, " {s}");
        }
        out.push('\n');
        for l in &self.layers {
            for values in [&l.weights, &l.bias] {
                let line: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self, NetworkError> {
        let bad = |m: &str| NetworkError::Checkpoint(m.to_string());
        let mut lines = text.lines();
        if lines.next() != Some("ratsteer-qnet 1") {
            return Err(bad("missing header"));
        }
        let sizes: Vec<usize> = lines
            .next()
            .and_then(|l| l.strip_prefix("layers"))
            .ok_or_else(|| bad("missing layer sizes"))?
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad("bad layer size")))
            .collect::<Result<_, _>>()?;
        if sizes.len() < 2 {
            return Err(NetworkError::Empty);
        }
        let mut parse_line = |n: usize| -> Result<Vec<f64>, NetworkError> {
            let v: Vec<f64> = lines
                .next()
                .ok_or_else(|| bad("truncated"))?
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| bad("bad number")))
                .collect::<Result<_, _>>()?;
            if v.len() != n {
                return Err(bad("wrong parameter count"));
            }
            Ok(v)
        };
        let mut layers = Vec::new();
        for w in sizes.windows(2) {
            let weights = parse_line(w[0] * w[1])?;
            let bias = parse_line(w[1])?;
            layers.push(Dense {
                inputs: w[0],
                outputs: w[1],
                weights,
                bias,
            });
        }
        Self::from_layers(layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_zero() {
        let net = QNetwork::zeros(&[6, 32, 32, 2]);
        assert_eq!(net.forward(&[0.3, 1.0, -2.0, 0.5, 0.1, 9.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn single_affine_unit() {
        let net = QNetwork::from_layers(vec![Dense {
            inputs: 1,
            outputs: 1,
            weights: vec![2.0],
            bias: vec![1.0],
        }])
        .unwrap();
        assert_eq!(net.forward(&[3.0]), vec![7.0]);
    }

    #[test]
    #[should_panic(expected = "state dimension")]
    fn wrong_input_size_panics() {
        QNetwork::zeros(&[3, 2]).forward(&[1.0]);
    }

    /// Forward pass recomputed with explicit index loops.
    #[test]
    fn forward_matches_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let sizes = [5, 7, 4, 3];
            let net = QNetwork::new(&sizes, &mut rng);
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut a = x.clone();
            for (li, l) in net.layers().iter().enumerate() {
                let mut z = vec![0.0; l.outputs];
                for o in 0..l.outputs {
                    z[o] = l.bias[o];
                    for i in 0..l.inputs {
                        z[o] += l.weights[o * l.inputs + i] * a[i];
                    }
                    if li + 1 < net.layers().len() && z[o] < 0.0 {
                        z[o] = 0.0;
                    }
                }
                a = z;
            }
            let got = net.forward(&x);
            for (g, w) in got.iter().zip(&a) {
                assert!((g - w).abs() <= 1e-12 * w.abs().max(1.0));
            }
        }
    }

    #[test]
    fn glorot_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = Dense::glorot(6, 32, &mut rng);
        let limit = (6.0f64 / 38.0).sqrt();
        assert!(l.weights.iter().all(|w| w.abs() <= limit));
        assert!(l.bias.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        assert!(QNetwork::from_checkpoint("nope").is_err());
        let net = QNetwork::zeros(&[2, 2]);
        let text = net.to_checkpoint().replace("0.0 0.0\n", "0.0\n");
        assert!(QNetwork::from_checkpoint(&text).is_err());
    }

    proptest! {
        #[test]
        fn checkpoint_round_trip_is_exact(seed in any::<u64>(), hidden in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = QNetwork::new(&[6, hidden, 2], &mut rng);
            let back = QNetwork::from_checkpoint(&net.to_checkpoint()).unwrap();
            let a: Vec<u64> = net.params().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = back.params().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }
}
