//! Small fully connected networks with hand-written backprop and Adam.

use rand::Rng as _;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputActivation {
    Identity,
    Tanh,
}

/// Multi-layer perceptron with ReLU hidden layers.
///
/// Parameters live in one flat vector: for each layer the row-major
/// `outputs x inputs` weight block followed by the bias block.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    output: OutputActivation,
    params: Vec<f64>,
}

/// Activations recorded by [`Mlp::forward_cached`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// `inputs[l]` is the input to layer `l`.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of every layer.
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

impl Mlp {
    /// Uniform fan-in initialization, `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn new(sizes: &[usize], output: OutputActivation, rng: &mut crate::Rng) -> Self {
        let mut net = Self::zeros(sizes, output);
        let mut offset = 0;
        for l in 0..net.layers() {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut net.params[offset..offset + fan_in * fan_out + fan_out] {
                *p = rng.random_range(-bound..bound);
            }
            offset += fan_in * fan_out + fan_out;
        }
        net
    }

    pub fn zeros(sizes: &[usize], output: OutputActivation) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0), "bad layer sizes {sizes:?}");
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Mlp {
            sizes: sizes.to_vec(),
            output,
            params: vec![0.0; n],
        }
    }

    /// Same parameters with a different output activation.
    pub fn with_output(mut self, output: OutputActivation) -> Self {
        self.output = output;
        self
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two sizes")
    }

    pub fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Offset of layer `l`'s weights, and of its biases.
    fn offsets(&self, l: usize) -> (usize, usize) {
        let w = self.sizes[..=l]
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum::<usize>();
        (w, w + self.sizes[l] * self.sizes[l + 1])
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).output
    }

    pub fn forward_cached(&self, x: &[f64]) -> ForwardCache {
        assert_eq!(x.len(), self.input_dim(), "network input dimension");
        let mut inputs = Vec::with_capacity(self.layers());
        let mut pre = Vec::with_capacity(self.layers());
        let mut h = x.to_vec();
        for l in 0..self.layers() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (wo, bo) = self.offsets(l);
            let w = &self.params[wo..bo];
            let b = &self.params[bo..bo + n_out];
            let z: Vec<f64> = (0..n_out)
                .map(|o| b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(&h).map(|(a, x)| a * x).sum::<f64>())
                .collect();
            let last = l + 1 == self.layers();
            let a = z
                .iter()
                .map(|&v| match (last, self.output) {
                    (false, _) => v.max(0.0),
                    (true, OutputActivation::Identity) => v,
                    (true, OutputActivation::Tanh) => v.tanh(),
                })
                .collect();
            inputs.push(std::mem::replace(&mut h, a));
            pre.push(z);
        }
        ForwardCache {
            inputs,
            pre,
            output: h,
        }
    }

    /// Accumulates `d loss / d params` into `grads` given `d loss / d output`,
    /// and returns `d loss / d input`.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &[f64], grads: &mut [f64]) -> Vec<f64> {
        assert_eq!(grads.len(), self.params.len());
        assert_eq!(grad_output.len(), self.output_dim());
        let mut delta: Vec<f64> = grad_output.to_vec();
        for l in (0..self.layers()).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let last = l + 1 == self.layers();
            for (o, d) in delta.iter_mut().enumerate() {
                let z = cache.pre[l][o];
                *d *= match (last, self.output) {
                    (false, _) => (z > 0.0) as u8 as f64,
                    (true, OutputActivation::Identity) => 1.0,
                    (true, OutputActivation::Tanh) => 1.0 - z.tanh().powi(2),
                };
            }
            let (wo, bo) = self.offsets(l);
            let input = &cache.inputs[l];
            let mut next = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                grads[bo + o] += d;
                let row = wo + o * n_in;
                for i in 0..n_in {
                    grads[row + i] += d * input[i];
                    next[i] += d * self.params[row + i];
                }
            }
            delta = next;
        }
        delta
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        match self.params.iter().position(|p| !p.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::Numerical(format!(
                "{what}: parameter {i} of {} is {}",
                self.params.len(),
                self.params[i]
            ))),
        }
    }
}

/// Adam optimizer over a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(num_params: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

/// One optimizer step on `net`. `loss_and_grad` returns the loss and its
/// gradient with respect to the flat parameters. Returns the pre-step loss.
pub fn dense_net_grad_step<F>(net: &mut Mlp, opt: &mut Adam, loss_and_grad: F) -> Result<f64>
where
    F: FnOnce(&Mlp) -> (f64, Vec<f64>),
{
    let (loss, grads) = loss_and_grad(net);
    if !loss.is_finite() {
        return Err(Error::Numerical(format!("loss is {loss}")));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numerical(format!("gradient {i} is {}", grads[i])));
    }
    opt.step(net.params_mut(), &grads);
    net.check_finite("after optimizer step")?;
    Ok(loss)
}

/// `target <- (1 - tau) * target + tau * online`, elementwise.
pub fn soft_update(target: &mut [f64], online: &[f64], tau: f64) {
    assert_eq!(target.len(), online.len());
    for (t, o) in target.iter_mut().zip(online) {
        *t = (1.0 - tau) * *t + tau * o;
    }
}

/// Online network with an exponentially averaged target copy.
#[derive(Clone, Debug)]
pub struct TargetPair {
    pub online: Mlp,
    pub target: Mlp,
    pub tau: f64,
}

impl TargetPair {
    pub fn new(online: Mlp, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::config(format!("tau must be in (0, 1], got {tau}")));
        }
        Ok(TargetPair {
            target: online.clone(),
            online,
            tau,
        })
    }

    pub fn soft_update(&mut self) {
        soft_update(self.target.params_mut(), self.online.params(), self.tau);
    }
}
