//! Minimal dense neural-network building blocks: fully connected layer
//! stacks with rectified-linear hidden activations, exact analytic
//! backpropagation, a softmax categorical head, and an adaptive-moment
//! first-order optimizer. Everything is double precision and allocation-light
//! — just enough machinery for the actor/critic sizes this crate trains.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("non-finite gradient at parameter index {0}")]
    NonFiniteGradient(usize),
    #[error("gradient shape mismatch: expected {expected} parameters, got {got}")]
    GradientShape { expected: usize, got: usize },
    #[error("optimizer tracks {expected} parameters, network has {got}")]
    OptimizerShape { expected: usize, got: usize },
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
}

/// One dense layer. Weights are row-major: `weights[o * inputs + i]` connects
/// input `i` to output `o`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    /// Fan-in-scaled uniform init: weights and biases drawn from
    /// U(-1/sqrt(inputs), 1/sqrt(inputs)).
    fn init(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut draw = || rng.gen_range(-bound..bound);
        Self {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| draw()).collect(),
            biases: (0..outputs).map(|_| draw()).collect(),
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

/// Dense stack `dims[0] -> dims[1] -> ... -> dims[last]`. Hidden layers are
/// always rectified; the final layer is rectified only when `relu_output`
/// is set (useful for trunks that feed further layers) and linear otherwise
/// (logit and value heads).
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub dims: Vec<usize>,
    pub relu_output: bool,
    layers: Vec<Layer>,
}

/// Activations recorded by [`Mlp::forward`], consumed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Vec<f64>,
    /// Pre-activation values per layer.
    pre: Vec<Vec<f64>>,
    /// Post-activation values per layer (last entry is the network output).
    post: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.post.last().expect("cache holds at least one layer")
    }
}

/// Parameter gradients with the same shapes as the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros(net: &Mlp) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    /// Adds `other` element-wise into `self`.
    pub fn accumulate(&mut self, other: &MlpGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Multiplies every gradient entry by `factor`.
    pub fn scale(&mut self, factor: f64) {
        for a in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            for x in a.iter_mut() {
                *x *= factor;
            }
        }
    }

    fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }
}

/// Four-accumulator dot product over exact chunks plus a scalar tail. Fixed
/// association keeps results reproducible across call sites.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0_f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail_a = chunks_a.remainder();
    let tail_b = chunks_b.remainder();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in tail_a.iter().zip(tail_b) {
        sum += x * y;
    }
    sum
}

impl Mlp {
    /// Builds a network with fan-in-scaled uniform initialization. Draw order
    /// is frozen (per layer: all weights row-major, then biases) so a seeded
    /// generator yields identical networks everywhere.
    pub fn new(dims: &[usize], relu_output: bool, rng: &mut impl Rng) -> Self {
        assert!(dims.len() >= 2, "need at least an input and an output dim");
        assert!(dims.iter().all(|&d| d > 0), "all dims must be positive");
        let layers = dims
            .windows(2)
            .map(|w| Layer::init(w[0], w[1], rng))
            .collect();
        Self {
            dims: dims.to_vec(),
            relu_output,
            layers,
        }
    }

    /// All-zero parameters; handy for tests and as an optimizer target shape.
    pub fn zeros(dims: &[usize], relu_output: bool) -> Self {
        assert!(dims.len() >= 2, "need at least an input and an output dim");
        assert!(dims.iter().all(|&d| d > 0), "all dims must be positive");
        let layers = dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Self {
            dims: dims.to_vec(),
            relu_output,
            layers,
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_len(&self) -> usize {
        self.dims[0]
    }

    pub fn output_len(&self) -> usize {
        *self.dims.last().expect("dims is non-empty")
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    fn relu_at(&self, layer_idx: usize) -> bool {
        layer_idx + 1 < self.layers.len() || self.relu_output
    }

    /// Runs the stack, recording every activation for a later backward pass.
    /// Panics if `input` does not match the first dim: shapes are a
    /// construction-time contract, not a runtime condition.
    pub fn forward(&self, input: &[f64]) -> ForwardCache {
        assert_eq!(
            input.len(),
            self.dims[0],
            "input length must equal the first dim"
        );
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut x = input;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.outputs);
            for o in 0..layer.outputs {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                z.push(dot(row, x) + layer.biases[o]);
            }
            let a = if self.relu_at(li) {
                z.iter().map(|&v| v.max(0.0)).collect()
            } else {
                z.clone()
            };
            pre.push(z);
            post.push(a);
            x = post.last().expect("just pushed");
        }
        ForwardCache {
            input: input.to_vec(),
            pre,
            post,
        }
    }

    /// Convenience forward that discards the cache.
    pub fn output(&self, input: &[f64]) -> Vec<f64> {
        let cache = self.forward(input);
        cache.post.into_iter().last().expect("non-empty stack")
    }

    /// Exact analytic gradients of a scalar loss with respect to every
    /// parameter, given the loss gradient at the network output. Also returns
    /// the loss gradient at the network input so stacked networks can chain.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &[f64]) -> (MlpGrads, Vec<f64>) {
        assert_eq!(
            output_grad.len(),
            self.output_len(),
            "output gradient length must equal the last dim"
        );
        assert_eq!(
            cache.post.len(),
            self.layers.len(),
            "cache does not match this network"
        );
        let mut grads = MlpGrads::zeros(self);
        let mut dpost = output_grad.to_vec();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let dpre: Vec<f64> = if self.relu_at(li) {
                dpost
                    .iter()
                    .zip(&cache.pre[li])
                    .map(|(&g, &z)| if z > 0.0 { g } else { 0.0 })
                    .collect()
            } else {
                dpost.clone()
            };
            let x: &[f64] = if li == 0 {
                &cache.input
            } else {
                &cache.post[li - 1]
            };
            let gw = &mut grads.weights[li];
            for (o, &g) in dpre.iter().enumerate() {
                let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                for (wi, &xi) in row.iter_mut().zip(x) {
                    *wi = g * xi;
                }
            }
            grads.biases[li].copy_from_slice(&dpre);
            let mut dx = vec![0.0; layer.inputs];
            for (o, &g) in dpre.iter().enumerate() {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (dxi, &w) in dx.iter_mut().zip(row) {
                    *dxi += w * g;
                }
            }
            dpost = dx;
        }
        (grads, dpost)
    }

    /// Visits every parameter as a flat stream (per layer: weights row-major,
    /// then biases). The single source of truth for flat parameter order.
    fn for_each_param_mut(&mut self, mut f: impl FnMut(usize, &mut f64)) {
        let mut idx = 0;
        for layer in &mut self.layers {
            for p in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                f(idx, p);
                idx += 1;
            }
        }
    }

    fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.biases);
        }
        out
    }

    fn set_flat_params(&mut self, params: &[f64]) -> Result<(), NeuralError> {
        if params.len() != self.param_count() {
            return Err(NeuralError::Checkpoint(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut off = 0;
        for layer in &mut self.layers {
            let nw = layer.weights.len();
            layer.weights.copy_from_slice(&params[off..off + nw]);
            off += nw;
            let nb = layer.biases.len();
            layer.biases.copy_from_slice(&params[off..off + nb]);
            off += nb;
        }
        Ok(())
    }
}

/// Numerically stabilized softmax: subtracts the max logit before
/// exponentiating, so magnitudes up to 1e6 stay finite. Output entries are
/// non-negative (positive whenever the logit gap is inside the exponential
/// range) and sum to 1 within 1e-12; shifting all logits by a constant
/// leaves the result unchanged.
pub fn categorical_head(logits: &[f64]) -> Vec<f64> {
    assert!(!logits.is_empty(), "logits must be non-empty");
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Log-probabilities of [`categorical_head`], computed without the
/// intermediate division for better extreme-logit accuracy.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    assert!(!logits.is_empty(), "logits must be non-empty");
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits
        .iter()
        .map(|&l| (l - max).exp())
        .sum::<f64>()
        .ln();
    logits.iter().map(|&l| l - max - log_sum).collect()
}

/// Shannon entropy of a probability vector in nats (0·ln 0 := 0).
pub fn entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Samples an index from a probability vector using one uniform draw.
pub fn sample_categorical(probs: &[f64], rng: &mut impl Rng) -> usize {
    debug_assert!(!probs.is_empty());
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}

/// Adaptive-moment estimation state over one network's flattened parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(learning_rate: f64, param_count: usize) -> Self {
        assert!(learning_rate > 0.0, "learning rate must be positive");
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    pub fn for_net(learning_rate: f64, net: &Mlp) -> Self {
        Self::new(learning_rate, net.param_count())
    }
}

/// One deterministic optimizer step over the whole network. Rejects
/// non-finite gradients without touching any parameter.
pub fn optimizer_step(
    net: &mut Mlp,
    grads: &MlpGrads,
    opt: &mut OptimizerState,
) -> Result<(), NeuralError> {
    if grads.param_count() != net.param_count() {
        return Err(NeuralError::GradientShape {
            expected: net.param_count(),
            got: grads.param_count(),
        });
    }
    if opt.m.len() != net.param_count() {
        return Err(NeuralError::OptimizerShape {
            expected: opt.m.len(),
            got: net.param_count(),
        });
    }
    let flat: Vec<f64> = grads
        .weights
        .iter()
        .zip(&grads.biases)
        .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
        .collect();
    if let Some(bad) = flat.iter().position(|g| !g.is_finite()) {
        return Err(NeuralError::NonFiniteGradient(bad));
    }

    opt.step += 1;
    let bc1 = 1.0 - opt.beta1.powi(opt.step as i32);
    let bc2 = 1.0 - opt.beta2.powi(opt.step as i32);
    let (lr, b1, b2, eps) = (opt.learning_rate, opt.beta1, opt.beta2, opt.epsilon);
    let (m, v) = (&mut opt.m, &mut opt.v);
    net.for_each_param_mut(|idx, p| {
        let g = flat[idx];
        m[idx] = b1 * m[idx] + (1.0 - b1) * g;
        v[idx] = b2 * v[idx] + (1.0 - b2) * g * g;
        let m_hat = m[idx] / bc1;
        let v_hat = v[idx] / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    });
    Ok(())
}

/// Bit-exact network snapshot: dims plus every parameter as raw IEEE-754
/// bits, so a JSON round trip restores outputs exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpCheckpoint {
    pub dims: Vec<usize>,
    pub relu_output: bool,
    pub params_bits: Vec<u64>,
}

impl MlpCheckpoint {
    pub fn capture(net: &Mlp) -> Self {
        Self {
            dims: net.dims.clone(),
            relu_output: net.relu_output,
            params_bits: net.flat_params().iter().map(|p| p.to_bits()).collect(),
        }
    }

    pub fn restore(&self) -> Result<Mlp, NeuralError> {
        if self.dims.len() < 2 || self.dims.iter().any(|&d| d == 0) {
            return Err(NeuralError::Checkpoint(format!(
                "invalid dims {:?}",
                self.dims
            )));
        }
        let mut net = Mlp::zeros(&self.dims, self.relu_output);
        let params: Vec<f64> = self.params_bits.iter().map(|&b| f64::from_bits(b)).collect();
        net.set_flat_params(&params)?;
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_weight_net_outputs_final_bias() {
        let mut net = Mlp::zeros(&[3, 4, 2], false);
        let last = net.layers_mut().last_mut().unwrap();
        last.biases = vec![0.5, -1.5];
        assert_eq!(net.output(&[1.0, 2.0, 3.0]), vec![0.5, -1.5]);
    }

    #[test]
    fn one_by_one_linear_net_is_scalar_multiplication() {
        let mut net = Mlp::zeros(&[1, 1], false);
        net.layers_mut()[0].weights[0] = 2.0;
        assert_eq!(net.output(&[3.0]), vec![6.0]);
        // dL/dw for y = w*x with dL/dy = 1 is exactly x.
        let cache = net.forward(&[3.0]);
        let (grads, dx) = net.backward(&cache, &[1.0]);
        assert_eq!(grads.weights[0], vec![3.0]);
        assert_eq!(grads.biases[0], vec![1.0]);
        assert_eq!(dx, vec![2.0]);
    }

    #[test]
    fn output_shape_matches_last_dim() {
        let net = Mlp::new(&[4, 8, 3], false, &mut rng(1));
        assert_eq!(net.output(&[0.1, -0.2, 0.3, 0.4]).len(), 3);
        assert_eq!(net.param_count(), 4 * 8 + 8 + 8 * 3 + 3);
    }

    #[test]
    #[should_panic(expected = "input length")]
    fn wrong_input_length_panics() {
        let net = Mlp::zeros(&[3, 2], false);
        net.output(&[1.0, 2.0]);
    }

    #[test]
    fn softmax_uniform_extreme_and_shift_invariant() {
        assert_eq!(
            categorical_head(&[0.7, 0.7, 0.7, 0.7]),
            vec![0.25, 0.25, 0.25, 0.25]
        );
        let p = categorical_head(&[1000.0, 0.0]);
        assert!(p.iter().all(|x| x.is_finite() && *x >= 0.0));
        assert!(p[0] > 1.0 - 1e-12 && p[1] < 1e-12);
        assert_relative_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        // Integer logits shift exactly, so the outputs must be identical.
        assert_eq!(
            categorical_head(&[1.0, 2.0, 3.0]),
            categorical_head(&[8.0, 9.0, 10.0])
        );
        let q = categorical_head(&[-1e6, 0.0, 1e6]);
        assert!(q.iter().all(|x| x.is_finite()));
        assert_relative_eq!(q.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn log_softmax_matches_softmax_log() {
        let logits = [0.3, -1.2, 2.5, 0.0];
        let p = categorical_head(&logits);
        let lp = log_softmax(&logits);
        for (a, b) in p.iter().zip(&lp) {
            assert_relative_eq!(a.ln(), *b, epsilon = 1e-12);
        }
        let h = entropy(&p);
        let expected: f64 = p.iter().zip(&lp).map(|(pi, li)| -pi * li).sum();
        assert_relative_eq!(h, expected, epsilon = 1e-12);
    }

    #[test]
    fn zero_output_gradient_gives_zero_parameter_gradients() {
        let net = Mlp::new(&[3, 5, 2], false, &mut rng(2));
        let cache = net.forward(&[0.4, -0.1, 0.9]);
        let (grads, dx) = net.backward(&cache, &[0.0, 0.0]);
        assert!(grads.weights.iter().flatten().all(|&g| g == 0.0));
        assert!(grads.biases.iter().flatten().all(|&g| g == 0.0));
        assert!(dx.iter().all(|&g| g == 0.0));
    }

    /// Central finite differences on a scalar loss L = sum(output * probe).
    fn finite_diff_check(dims: &[usize], relu_output: bool, seed: u64) -> f64 {
        let mut r = rng(seed);
        let net = Mlp::new(dims, relu_output, &mut r);
        let input: Vec<f64> = (0..dims[0]).map(|_| r.gen_range(-1.0..1.0)).collect();
        let probe: Vec<f64> = (0..*dims.last().unwrap())
            .map(|_| r.gen_range(-1.0..1.0))
            .collect();
        let cache = net.forward(&input);
        let (grads, _) = net.backward(&cache, &probe);
        let loss = |n: &Mlp| -> f64 { dot(&n.output(&input), &probe) };
        let step = 1e-5;
        let mut max_rel = 0.0_f64;
        let flat_grads: Vec<f64> = grads
            .weights
            .iter()
            .zip(&grads.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect();
        for idx in 0..net.param_count() {
            let mut plus = net.clone();
            plus.for_each_param_mut(|i, p| {
                if i == idx {
                    *p += step;
                }
            });
            let mut minus = net.clone();
            minus.for_each_param_mut(|i, p| {
                if i == idx {
                    *p -= step;
                }
            });
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * step);
            let analytic = flat_grads[idx];
            let denom = analytic.abs().max(numeric.abs()).max(1e-8);
            max_rel = max_rel.max((numeric - analytic).abs() / denom);
        }
        max_rel
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        for (seed, dims, relu_out) in [
            (10, vec![2, 3, 2], false),
            (11, vec![4, 4, 4], true),
            (12, vec![3, 8, 1], false),
            (13, vec![5, 2], false),
        ] {
            let err = finite_diff_check(&dims, relu_out, seed);
            assert!(
                err <= 1e-4,
                "dims {dims:?} seed {seed}: max relative error {err}"
            );
        }
    }

    #[test]
    fn optimizer_zero_gradient_is_a_fixed_point() {
        let mut net = Mlp::new(&[2, 3], false, &mut rng(3));
        let snapshot = net.clone();
        let grads = MlpGrads::zeros(&net);
        let mut opt = OptimizerState::for_net(1e-3, &net);
        optimizer_step(&mut net, &grads, &mut opt).unwrap();
        assert_eq!(net, snapshot);
    }

    #[test]
    fn optimizer_descends_against_positive_gradient_deterministically() {
        let run = || {
            let mut net = Mlp::zeros(&[1, 1], false);
            net.layers_mut()[0].weights[0] = 1.0;
            let mut grads = MlpGrads::zeros(&net);
            grads.weights[0][0] = 0.5;
            let mut opt = OptimizerState::for_net(1e-2, &net);
            for _ in 0..3 {
                optimizer_step(&mut net, &grads, &mut opt).unwrap();
            }
            net.layers()[0].weights[0]
        };
        let w = run();
        assert!(w < 1.0, "positive gradient must decrease the parameter");
        assert_eq!(w.to_bits(), run().to_bits(), "updates must be deterministic");
    }

    #[test]
    fn optimizer_rejects_non_finite_gradients_without_mutating() {
        let mut net = Mlp::new(&[2, 2], false, &mut rng(4));
        let snapshot = net.clone();
        let mut grads = MlpGrads::zeros(&net);
        grads.biases[0][1] = f64::NAN;
        let mut opt = OptimizerState::for_net(1e-3, &net);
        let err = optimizer_step(&mut net, &grads, &mut opt).unwrap_err();
        assert!(matches!(err, NeuralError::NonFiniteGradient(_)));
        assert_eq!(net, snapshot);
        assert_eq!(opt.step, 0);
    }

    #[test]
    fn ten_thousand_bounded_steps_stay_finite() {
        let mut net = Mlp::new(&[3, 4, 2], false, &mut rng(5));
        let mut opt = OptimizerState::for_net(5e-5, &net);
        let mut r = rng(6);
        for _ in 0..10_000 {
            let mut grads = MlpGrads::zeros(&net);
            for g in grads
                .weights
                .iter_mut()
                .flatten()
                .chain(grads.biases.iter_mut().flatten())
            {
                *g = r.gen_range(-1.0..1.0);
            }
            optimizer_step(&mut net, &grads, &mut opt).unwrap();
        }
        for layer in net.layers() {
            assert!(layer.weights.iter().all(|w| w.is_finite()));
            assert!(layer.biases.iter().all(|b| b.is_finite()));
        }
    }

    #[test]
    fn checkpoint_round_trip_restores_outputs_bit_exactly() {
        let net = Mlp::new(&[4, 6, 3], false, &mut rng(7));
        let json = serde_json::to_string(&MlpCheckpoint::capture(&net)).unwrap();
        let restored: MlpCheckpoint = serde_json::from_str(&json).unwrap();
        let restored = restored.restore().unwrap();
        let input = [0.25, -0.75, 1.5, 0.0];
        let a = net.output(&input);
        let b = restored.output(&input);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn checkpoint_rejects_mismatched_parameter_count() {
        let net = Mlp::new(&[2, 2], false, &mut rng(8));
        let mut ckpt = MlpCheckpoint::capture(&net);
        ckpt.params_bits.pop();
        assert!(matches!(
            ckpt.restore(),
            Err(NeuralError::Checkpoint(_))
        ));
    }

    #[test]
    fn sampling_respects_probabilities() {
        let mut r = rng(9);
        let probs = [0.1, 0.6, 0.3];
        let mut counts = [0usize; 3];
        for _ in 0..20_000 {
            counts[sample_categorical(&probs, &mut r)] += 1;
        }
        for (c, p) in counts.iter().zip(&probs) {
            let freq = *c as f64 / 20_000.0;
            assert!(
                (freq - p).abs() < 0.02,
                "frequency {freq} too far from {p}"
            );
        }
    }

    #[test]
    fn grad_accumulate_and_scale() {
        let net = Mlp::zeros(&[2, 2], false);
        let mut a = MlpGrads::zeros(&net);
        let mut b = MlpGrads::zeros(&net);
        a.weights[0][0] = 1.0;
        b.weights[0][0] = 2.0;
        b.biases[0][1] = -4.0;
        a.accumulate(&b);
        a.scale(0.5);
        assert_eq!(a.weights[0][0], 1.5);
        assert_eq!(a.biases[0][1], -2.0);
    }
}
