//! Dense feed-forward networks with manual reverse-mode gradients, an Adam
//! optimizer, and soft target-parameter blending. Everything is f64 and
//! seeded, so training runs are bit-reproducible.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("architecture mismatch: {0}")]
    ArchMismatch(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt parameter file: {0}")]
    Corrupt(String),
}

/// Output-layer activation. Hidden layers are always ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    /// Squashes into (0, 1); used by actors.
    Sigmoid,
    /// Raw affine output; used by critics and value heads.
    Identity,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// A multilayer perceptron. Weights are stored per layer in row-major
/// `[out][in]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    output_activation: OutputActivation,
}

/// Intermediate values from one forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer (the network input, then each post-activation).
    layer_inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre_acts: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

/// Parameter gradients with the same shapes as the network, plus the
/// gradient with respect to the network input.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub d_weights: Vec<Vec<f64>>,
    pub d_biases: Vec<Vec<f64>>,
    pub d_input: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            d_weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            d_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            d_input: vec![0.0; net.dims[0]],
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.d_weights {
            for v in w.iter_mut() {
                *v *= factor;
            }
        }
        for b in &mut self.d_biases {
            for v in b.iter_mut() {
                *v *= factor;
            }
        }
        for v in &mut self.d_input {
            *v *= factor;
        }
    }

    pub fn is_all_zero(&self) -> bool {
        self.d_weights.iter().flatten().all(|&v| v == 0.0)
            && self.d_biases.iter().flatten().all(|&v| v == 0.0)
    }
}

impl Mlp {
    /// Seeded uniform init in +-sqrt(6 / (fan_in + fan_out)).
    pub fn new(dims: &[usize], output_activation: OutputActivation, seed: u64) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for layer in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[layer], dims[layer + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.gen_range(-limit..limit))
                    .collect(),
            );
            biases.push(vec![0.0; fan_out]);
        }
        Self {
            dims: dims.to_vec(),
            weights,
            biases,
            output_activation,
        }
    }

    pub fn zeros(dims: &[usize], output_activation: OutputActivation) -> Self {
        let mut net = Self::new(dims, output_activation, 0);
        for w in &mut net.weights {
            w.fill(0.0);
        }
        net
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    fn activate_hidden(x: f64) -> f64 {
        x.max(0.0)
    }

    pub fn forward(&self, input: &[f64]) -> Result<ForwardCache, NnError> {
        if input.len() != self.dims[0] {
            return Err(NnError::ShapeMismatch(format!(
                "input has {} entries, expected {}",
                input.len(),
                self.dims[0]
            )));
        }
        let n_layers = self.n_layers();
        let mut layer_inputs = Vec::with_capacity(n_layers);
        let mut pre_acts = Vec::with_capacity(n_layers);
        let mut current = input.to_vec();
        for layer in 0..n_layers {
            let (n_in, n_out) = (self.dims[layer], self.dims[layer + 1]);
            let w = &self.weights[layer];
            let b = &self.biases[layer];
            let mut pre = vec![0.0; n_out];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut acc = b[o];
                for (wi, xi) in row.iter().zip(current.iter()) {
                    acc += wi * xi;
                }
                pre[o] = acc;
            }
            let post: Vec<f64> = if layer + 1 == n_layers {
                match self.output_activation {
                    OutputActivation::Sigmoid => pre.iter().map(|&x| sigmoid(x)).collect(),
                    OutputActivation::Identity => pre.clone(),
                }
            } else {
                pre.iter().map(|&x| Self::activate_hidden(x)).collect()
            };
            layer_inputs.push(current);
            pre_acts.push(pre);
            current = post;
        }
        Ok(ForwardCache {
            layer_inputs,
            pre_acts,
            output: current,
        })
    }

    /// Exact reverse-mode gradients for the forward pass that produced
    /// `cache`, accumulated into `grads` (callers batch by accumulating).
    pub fn backward_acc(
        &self,
        cache: &ForwardCache,
        d_output: &[f64],
        grads: &mut Gradients,
    ) -> Result<(), NnError> {
        if d_output.len() != self.output_dim() {
            return Err(NnError::ShapeMismatch(format!(
                "output gradient has {} entries, expected {}",
                d_output.len(),
                self.output_dim()
            )));
        }
        let n_layers = self.n_layers();
        // Delta at the output layer: chain through the output activation.
        let mut delta: Vec<f64> = match self.output_activation {
            OutputActivation::Sigmoid => cache
                .output
                .iter()
                .zip(d_output)
                .map(|(&y, &g)| g * y * (1.0 - y))
                .collect(),
            OutputActivation::Identity => d_output.to_vec(),
        };
        for layer in (0..n_layers).rev() {
            let (n_in, n_out) = (self.dims[layer], self.dims[layer + 1]);
            let input = &cache.layer_inputs[layer];
            let w = &self.weights[layer];
            let dw = &mut grads.d_weights[layer];
            for o in 0..n_out {
                let d = delta[o];
                if d != 0.0 {
                    let row = &mut dw[o * n_in..(o + 1) * n_in];
                    for (slot, xi) in row.iter_mut().zip(input.iter()) {
                        *slot += d * xi;
                    }
                }
                grads.d_biases[layer][o] += d;
            }
            // Gradient w.r.t. the layer input.
            let mut d_in = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d != 0.0 {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    for (slot, wi) in d_in.iter_mut().zip(row.iter()) {
                        *slot += d * wi;
                    }
                }
            }
            if layer == 0 {
                for (slot, v) in grads.d_input.iter_mut().zip(d_in.iter()) {
                    *slot += v;
                }
            } else {
                // Chain through the previous layer's ReLU.
                let pre = &cache.pre_acts[layer - 1];
                delta = d_in
                    .iter()
                    .zip(pre.iter())
                    .map(|(&g, &p)| if p > 0.0 { g } else { 0.0 })
                    .collect();
            }
        }
        Ok(())
    }

    /// Single-sample convenience wrapper around `backward_acc`.
    pub fn backward(&self, cache: &ForwardCache, d_output: &[f64]) -> Result<Gradients, NnError> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_acc(cache, d_output, &mut grads)?;
        Ok(grads)
    }

    fn same_arch(&self, other: &Mlp) -> bool {
        self.dims == other.dims
    }

    /// Flat little-endian f64 parameter dump with a dims header.
    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        file.write_all(&(self.dims.len() as u32).to_le_bytes())?;
        for &d in &self.dims {
            file.write_all(&(d as u32).to_le_bytes())?;
        }
        for layer in 0..self.n_layers() {
            for &v in &self.weights[layer] {
                file.write_all(&v.to_le_bytes())?;
            }
            for &v in &self.biases[layer] {
                file.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load(path: &Path, output_activation: OutputActivation) -> Result<Self, NnError> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut u32_buf = [0u8; 4];
        file.read_exact(&mut u32_buf)?;
        let n_dims = u32::from_le_bytes(u32_buf) as usize;
        if n_dims < 2 || n_dims > 64 {
            return Err(NnError::Corrupt(format!("implausible dims count {n_dims}")));
        }
        let mut dims = Vec::with_capacity(n_dims);
        for _ in 0..n_dims {
            file.read_exact(&mut u32_buf)?;
            dims.push(u32::from_le_bytes(u32_buf) as usize);
        }
        let mut net = Mlp::zeros(&dims, output_activation);
        let mut f64_buf = [0u8; 8];
        for layer in 0..net.n_layers() {
            for slot in 0..net.weights[layer].len() {
                file.read_exact(&mut f64_buf)?;
                net.weights[layer][slot] = f64::from_le_bytes(f64_buf);
            }
            for slot in 0..net.biases[layer].len() {
                file.read_exact(&mut f64_buf)?;
                net.biases[layer][slot] = f64::from_le_bytes(f64_buf);
            }
        }
        if file.read(&mut f64_buf)? != 0 {
            return Err(NnError::Corrupt("trailing bytes after parameters".into()));
        }
        Ok(net)
    }

    /// Mutable access for tests and hand-constructed nets.
    pub fn layer_mut(&mut self, layer: usize) -> (&mut [f64], &mut [f64]) {
        (&mut self.weights[layer], &mut self.biases[layer])
    }

    pub fn for_each_param(&self, mut f: impl FnMut(f64)) {
        for layer in 0..self.n_layers() {
            self.weights[layer].iter().for_each(|&v| f(v));
            self.biases[layer].iter().for_each(|&v| f(v));
        }
    }

    /// Parameter at a flat index, for finite-difference probing.
    pub fn param(&self, flat: usize) -> f64 {
        *self.param_slot(flat)
    }

    pub fn set_param(&mut self, flat: usize, value: f64) {
        *self.param_slot_mut(flat) = value;
    }

    fn param_slot(&self, mut flat: usize) -> &f64 {
        for layer in 0..self.n_layers() {
            if flat < self.weights[layer].len() {
                return &self.weights[layer][flat];
            }
            flat -= self.weights[layer].len();
            if flat < self.biases[layer].len() {
                return &self.biases[layer][flat];
            }
            flat -= self.biases[layer].len();
        }
        panic!("flat parameter index out of range");
    }

    fn param_slot_mut(&mut self, mut flat: usize) -> &mut f64 {
        for layer in 0..self.n_layers() {
            if flat < self.weights[layer].len() {
                return &mut self.weights[layer][flat];
            }
            flat -= self.weights[layer].len();
            if flat < self.biases[layer].len() {
                return &mut self.biases[layer][flat];
            }
            flat -= self.biases[layer].len();
        }
        panic!("flat parameter index out of range");
    }

    /// Gradient value matching the `param` flat indexing.
    pub fn grad_at(grads: &Gradients, net: &Mlp, mut flat: usize) -> f64 {
        for layer in 0..net.n_layers() {
            if flat < grads.d_weights[layer].len() {
                return grads.d_weights[layer][flat];
            }
            flat -= grads.d_weights[layer].len();
            if flat < grads.d_biases[layer].len() {
                return grads.d_biases[layer][flat];
            }
            flat -= grads.d_biases[layer].len();
        }
        panic!("flat parameter index out of range");
    }
}

/// Adam accumulator state for one network.
#[derive(Debug, Clone)]
pub struct AdamState {
    m_weights: Vec<Vec<f64>>,
    v_weights: Vec<Vec<f64>>,
    m_biases: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(net: &Mlp, learning_rate: f64) -> Self {
        Self {
            m_weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            v_weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            m_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            v_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update; parameters move against the gradient.
pub fn adam_step(net: &mut Mlp, grads: &Gradients, opt: &mut AdamState) {
    opt.step += 1;
    let t = opt.step as f64;
    let bc1 = 1.0 - opt.beta1.powf(t);
    let bc2 = 1.0 - opt.beta2.powf(t);
    let update = |param: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
        *m = opt.beta1 * *m + (1.0 - opt.beta1) * g;
        *v = opt.beta2 * *v + (1.0 - opt.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *param -= opt.learning_rate * m_hat / (v_hat.sqrt() + opt.epsilon);
    };
    for layer in 0..net.n_layers() {
        for slot in 0..net.weights[layer].len() {
            update(
                &mut net.weights[layer][slot],
                grads.d_weights[layer][slot],
                &mut opt.m_weights[layer][slot],
                &mut opt.v_weights[layer][slot],
            );
        }
        for slot in 0..net.biases[layer].len() {
            update(
                &mut net.biases[layer][slot],
                grads.d_biases[layer][slot],
                &mut opt.m_biases[layer][slot],
                &mut opt.v_biases[layer][slot],
            );
        }
    }
}

/// Blends target parameters toward the source: `target = tau * source +
/// (1 - tau) * target`, elementwise.
pub fn soft_update(target: &mut Mlp, source: &Mlp, tau: f64) -> Result<(), NnError> {
    if !target.same_arch(source) {
        return Err(NnError::ArchMismatch(format!(
            "target dims {:?} vs source dims {:?}",
            target.dims, source.dims
        )));
    }
    for layer in 0..target.n_layers() {
        for (t, s) in target.weights[layer]
            .iter_mut()
            .zip(source.weights[layer].iter())
        {
            *t = tau * s + (1.0 - tau) * *t;
        }
        for (t, s) in target.biases[layer]
            .iter_mut()
            .zip(source.biases[layer].iter())
        {
            *t = tau * s + (1.0 - tau) * *t;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_zero_net_is_zero() {
        let net = Mlp::zeros(&[3, 4, 2], OutputActivation::Identity);
        let cache = net.forward(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(cache.output(), &[0.0, 0.0]);
    }

    #[test]
    fn forward_single_identity_layer_applies_activation() {
        let mut net = Mlp::zeros(&[2, 2], OutputActivation::Sigmoid);
        {
            let (w, _) = net.layer_mut(0);
            w[0] = 1.0; // out0 <- in0
            w[3] = 1.0; // out1 <- in1
        }
        let cache = net.forward(&[0.0, 2.0]).unwrap();
        assert!((cache.output()[0] - 0.5).abs() < 1e-12);
        assert!((cache.output()[1] - sigmoid(2.0)).abs() < 1e-12);
    }

    #[test]
    fn forward_is_deterministic() {
        let net = Mlp::new(&[5, 8, 3], OutputActivation::Sigmoid, 42);
        let input = [0.3, -0.7, 1.2, 0.0, 0.5];
        let a = net.forward(&input).unwrap();
        let b = net.forward(&input).unwrap();
        assert_eq!(a.output(), b.output());
    }

    #[test]
    fn forward_rejects_wrong_input_len() {
        let net = Mlp::zeros(&[3, 2], OutputActivation::Identity);
        assert!(net.forward(&[1.0]).is_err());
    }

    #[test]
    fn backward_linear_matches_closed_form() {
        // Single identity layer, squared loss: dW = 2 (W x - y) x^T.
        let mut net = Mlp::zeros(&[2, 1], OutputActivation::Identity);
        {
            let (w, b) = net.layer_mut(0);
            w[0] = 0.5;
            w[1] = -1.0;
            b[0] = 0.25;
        }
        let x = [2.0, 3.0];
        let y = 1.5;
        let cache = net.forward(&x).unwrap();
        let out = cache.output()[0];
        let grads = net.backward(&cache, &[2.0 * (out - y)]).unwrap();
        assert!((grads.d_weights[0][0] - 2.0 * (out - y) * x[0]).abs() < 1e-12);
        assert!((grads.d_weights[0][1] - 2.0 * (out - y) * x[1]).abs() < 1e-12);
        assert!((grads.d_biases[0][0] - 2.0 * (out - y)).abs() < 1e-12);
    }

    #[test]
    fn backward_zero_output_gradient_gives_zero_grads() {
        let net = Mlp::new(&[4, 6, 3], OutputActivation::Sigmoid, 7);
        let cache = net.forward(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let grads = net.backward(&cache, &[0.0, 0.0, 0.0]).unwrap();
        assert!(grads.is_all_zero());
    }

    /// Central finite differences on `n_probes` random parameters of a
    /// scalar loss L = sum(output * probe_weights).
    pub(crate) fn finite_difference_check(
        dims: &[usize],
        act: OutputActivation,
        seed: u64,
        n_probes: usize,
        tolerance: f64,
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Mlp::new(dims, act, seed ^ 0xABCD);
        let input: Vec<f64> = (0..dims[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let probe: Vec<f64> = (0..*dims.last().unwrap())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();

        let cache = net.forward(&input).unwrap();
        let grads = net.backward(&cache, &probe).unwrap();

        let n_params = net.param_count();
        let h = 1e-5;
        for _ in 0..n_probes {
            let idx = rng.gen_range(0..n_params);
            let orig = net.param(idx);
            net.set_param(idx, orig + h);
            let up: f64 = net
                .forward(&input)
                .unwrap()
                .output()
                .iter()
                .zip(&probe)
                .map(|(o, p)| o * p)
                .sum();
            net.set_param(idx, orig - h);
            let down: f64 = net
                .forward(&input)
                .unwrap()
                .output()
                .iter()
                .zip(&probe)
                .map(|(o, p)| o * p)
                .sum();
            net.set_param(idx, orig);
            let numeric = (up - down) / (2.0 * h);
            let analytic = Mlp::grad_at(&grads, &net, idx);
            let denom = numeric.abs().max(analytic.abs()).max(1e-6);
            assert!(
                (numeric - analytic).abs() / denom < tolerance,
                "param {idx}: numeric {numeric} vs analytic {analytic}"
            );
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        finite_difference_check(&[6, 10, 8, 3], OutputActivation::Sigmoid, 11, 100, 1e-4);
        finite_difference_check(&[9, 12, 1], OutputActivation::Identity, 13, 100, 1e-4);
    }

    #[test]
    fn adam_zero_gradient_keeps_parameters() {
        let mut net = Mlp::new(&[2, 3, 1], OutputActivation::Identity, 3);
        let before = net.clone();
        let grads = Gradients::zeros_like(&net);
        let mut opt = AdamState::new(&net, 3e-4);
        adam_step(&mut net, &grads, &mut opt);
        assert_eq!(net, before);
        assert_eq!(opt.step, 1);
    }

    #[test]
    fn adam_constant_gradient_moves_against_it() {
        let mut net = Mlp::zeros(&[1, 1], OutputActivation::Identity);
        let mut grads = Gradients::zeros_like(&net);
        grads.d_weights[0][0] = 2.5;
        let mut opt = AdamState::new(&net, 1e-2);
        let mut prev = net.param(0);
        for _ in 0..50 {
            adam_step(&mut net, &grads, &mut opt);
            let cur = net.param(0);
            assert!(cur < prev, "parameter must decrease against g > 0");
            prev = cur;
        }
    }

    #[test]
    fn adam_minimizes_scalar_quadratic() {
        // Minimize (w - 3)^2 from w = 0 with the default training rate.
        let mut net = Mlp::zeros(&[1, 1], OutputActivation::Identity);
        let mut opt = AdamState::new(&net, 3e-4);
        let mut grads = Gradients::zeros_like(&net);
        for _ in 0..100_000 {
            let w = net.param(0);
            grads.d_weights[0][0] = 2.0 * (w - 3.0);
            adam_step(&mut net, &grads, &mut opt);
        }
        assert!((net.param(0) - 3.0).abs() < 1e-2);
    }

    #[test]
    fn soft_update_endpoints_and_decay() {
        let source = Mlp::new(&[3, 4, 2], OutputActivation::Identity, 1);
        let mut target = Mlp::new(&[3, 4, 2], OutputActivation::Identity, 2);

        let mut full = target.clone();
        soft_update(&mut full, &source, 1.0).unwrap();
        assert_eq!(full, source);

        let mut frozen = target.clone();
        soft_update(&mut frozen, &source, 0.0).unwrap();
        assert_eq!(frozen, target);

        // tau = 0.01 shrinks the parameter gap by 0.99 per application.
        let gap = |a: &Mlp, b: &Mlp| {
            let mut acc = 0.0;
            for idx in 0..a.param_count() {
                acc += (a.param(idx) - b.param(idx)).powi(2);
            }
            acc.sqrt()
        };
        let mut prev_gap = gap(&target, &source);
        for _ in 0..20 {
            soft_update(&mut target, &source, 0.01).unwrap();
            let cur = gap(&target, &source);
            assert!((cur - 0.99 * prev_gap).abs() < 1e-9 * prev_gap.max(1.0));
            prev_gap = cur;
        }
    }

    #[test]
    fn soft_update_rejects_arch_mismatch() {
        let source = Mlp::zeros(&[2, 2], OutputActivation::Identity);
        let mut target = Mlp::zeros(&[2, 3], OutputActivation::Identity);
        assert!(soft_update(&mut target, &source, 0.5).is_err());
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.bin");
        let net = Mlp::new(&[4, 8, 2], OutputActivation::Sigmoid, 99);
        net.save(&path).unwrap();
        let loaded = Mlp::load(&path, OutputActivation::Sigmoid).unwrap();
        assert_eq!(net, loaded);
    }
}
