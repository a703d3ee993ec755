use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activation::{softmax_in_place, Activation};
use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: format!("{rows}x{cols} = {} values", rows * cols),
                got: format!("{} values", data.len()),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Rows selected by `idx`, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Fully-connected classifier: linear layers with `hidden` between them
/// and a softmax cross-entropy head on the last layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layer_dims: Vec<usize>,
    /// Layer `l` maps `layer_dims[l]` inputs to `layer_dims[l+1]` outputs and
    /// has shape `layer_dims[l+1] x layer_dims[l]`.
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub hidden: Activation,
}

/// Everything `backward` needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer; `inputs[0]` is the batch.
    pub inputs: Vec<Matrix>,
    /// Pre-activation output of each hidden layer.
    pub pre_activations: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    /// Smallest activation derivative met in this pass.
    pub min_activation_grad: f64,
}

/// Uniform Glorot initialization with zero biases.
pub fn init_network(layer_dims: &[usize], hidden: Activation, seed: u64) -> Result<Network> {
    if layer_dims.len() < 2 || layer_dims.contains(&0) {
        return Err(Error::InvalidConfig(format!(
            "need at least two positive layer sizes, got {layer_dims:?}"
        )));
    }
    let hidden = hidden.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for pair in layer_dims.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        weights.push(Matrix {
            rows: fan_out,
            cols: fan_in,
            data,
        });
        biases.push(vec![0.0; fan_out]);
    }
    Ok(Network {
        layer_dims: layer_dims.to_vec(),
        weights,
        biases,
        hidden,
    })
}

/// `out = x W^T + b`.
fn affine(x: &Matrix, w: &Matrix, b: &[f64]) -> Matrix {
    let mut out = Matrix::zeros(x.rows, w.rows);
    for r in 0..x.rows {
        let xr = x.row(r);
        let orow = out.row_mut(r);
        for (j, o) in orow.iter_mut().enumerate() {
            let wr = w.row(j);
            *o = b[j] + xr.iter().zip(wr).map(|(a, c)| a * c).sum::<f64>();
        }
    }
    out
}

impl Network {
    pub fn num_classes(&self) -> usize {
        *self.layer_dims.last().expect("at least two layers")
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    /// Logits for each row of `batch`, plus the cache for [`Network::backward`].
    pub fn forward(&self, batch: &Matrix) -> Result<(Matrix, ForwardCache)> {
        if batch.cols != self.input_dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} input columns", self.input_dim()),
                got: format!("{} columns", batch.cols),
            });
        }
        let last = self.weights.len() - 1;
        let mut inputs = vec![batch.clone()];
        let mut pre_activations = Vec::with_capacity(last);
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = affine(&inputs[l], w, b);
            if l == last {
                return Ok((
                    z,
                    ForwardCache {
                        inputs,
                        pre_activations,
                    },
                ));
            }
            let mut a = z.clone();
            for v in a.data.iter_mut() {
                *v = self.hidden.value(*v);
            }
            pre_activations.push(z);
            inputs.push(a);
        }
        unreachable!("the loop returns on the last layer")
    }

    pub fn logits(&self, batch: &Matrix) -> Result<Matrix> {
        Ok(self.forward(batch)?.0)
    }

    /// Gradients of the mean cross-entropy loss over the batch.
    pub fn backward(
        &self,
        logits: &Matrix,
        cache: &ForwardCache,
        labels: &[usize],
    ) -> Result<Gradients> {
        let n = logits.rows;
        if labels.len() != n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n} labels"),
                got: format!("{} labels", labels.len()),
            });
        }
        let classes = self.num_classes();
        // dL/dlogits = (softmax - onehot) / n
        let mut delta = logits.clone();
        for (r, &label) in labels.iter().enumerate() {
            if label >= classes {
                return Err(Error::LabelOutOfRange { label, classes });
            }
            let row = delta.row_mut(r);
            softmax_in_place(row)?;
            row[label] -= 1.0;
            for v in row.iter_mut() {
                *v /= n as f64;
            }
        }

        let layers = self.weights.len();
        let mut grad_w = vec![Matrix::zeros(0, 0); layers];
        let mut grad_b = vec![Vec::new(); layers];
        let mut min_activation_grad = f64::INFINITY;
        for l in (0..layers).rev() {
            let input = &cache.inputs[l];
            let w = &self.weights[l];
            let mut gw = Matrix::zeros(w.rows, w.cols);
            let mut gb = vec![0.0; w.rows];
            for r in 0..n {
                let d = delta.row(r);
                let x = input.row(r);
                for (j, &dj) in d.iter().enumerate() {
                    gb[j] += dj;
                    for (g, &xi) in gw.row_mut(j).iter_mut().zip(x) {
                        *g += dj * xi;
                    }
                }
            }
            grad_w[l] = gw;
            grad_b[l] = gb;
            if l == 0 {
                break;
            }
            // propagate through W then through the activation of layer l-1
            let z = &cache.pre_activations[l - 1];
            let mut next = Matrix::zeros(n, w.cols);
            for r in 0..n {
                let d = delta.row(r);
                let out = next.row_mut(r);
                for (j, &dj) in d.iter().enumerate() {
                    for (o, &wji) in out.iter_mut().zip(w.row(j)) {
                        *o += dj * wji;
                    }
                }
                for (o, &zi) in out.iter_mut().zip(z.row(r)) {
                    let g = self.hidden.grad(zi);
                    min_activation_grad = min_activation_grad.min(g);
                    *o *= g;
                }
            }
            delta = next;
        }
        Ok(Gradients {
            weights: grad_w,
            biases: grad_b,
            min_activation_grad,
        })
    }

    /// `w <- w - lr * grad` for every parameter.
    pub fn apply_sgd(&mut self, grads: &Gradients, lr: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            for (p, d) in w.data.iter_mut().zip(&g.data) {
                *p -= lr * d;
            }
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            for (p, d) in b.iter_mut().zip(g) {
                *p -= lr * d;
            }
        }
    }

    /// Flat views over all parameters, weights first, layer by layer.
    pub fn params_mut(&mut self) -> Vec<&mut f64> {
        let mut out: Vec<&mut f64> = Vec::new();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.extend(w.data.iter_mut());
            out.extend(b.iter_mut());
        }
        out
    }
}

impl Gradients {
    /// Same order as [`Network::params_mut`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(&w.data);
            out.extend_from_slice(b);
        }
        out
    }
}

/// Mean cross-entropy of softmax(logits) against `labels`.
pub fn cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<f64> {
    if labels.len() != logits.rows {
        return Err(Error::ShapeMismatch {
            expected: format!("{} labels", logits.rows),
            got: format!("{} labels", labels.len()),
        });
    }
    let mut total = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        if label >= row.len() {
            return Err(Error::LabelOutOfRange {
                label,
                classes: row.len(),
            });
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        total += log_sum - row[label];
    }
    Ok(total / labels.len() as f64)
}

/// Fraction of rows whose arg-max logit equals the label.
pub fn accuracy(logits: &Matrix, labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let correct = labels
        .iter()
        .enumerate()
        .filter(|&(r, &label)| {
            let row = logits.row(r);
            let best = (0..row.len())
                .reduce(|a, b| if row[b] > row[a] { b } else { a })
                .unwrap_or(0);
            best == label
        })
        .count();
    correct as f64 / labels.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn pass_through(act: Activation) -> Network {
        // 1 -> 1 -> 2 with unit hidden weight
        Network {
            layer_dims: vec![1, 1, 2],
            weights: vec![
                Matrix::from_vec(1, 1, vec![1.0]).unwrap(),
                Matrix::from_vec(2, 1, vec![1.0, 0.0]).unwrap(),
            ],
            biases: vec![vec![0.0], vec![0.0, 0.0]],
            hidden: act,
        }
    }

    #[test]
    fn init_shapes_and_determinism() {
        let net = init_network(&[2, 4, 2], Activation::STL, 42).unwrap();
        let shapes: Vec<_> = net.weights.iter().map(Matrix::shape).collect();
        assert_eq!(shapes, [(4, 2), (2, 4)]);
        assert!(net.biases.iter().flatten().all(|&b| b == 0.0));
        let limit = (6.0f64 / 6.0).sqrt();
        assert!(net.weights[0].data.iter().all(|w| w.abs() <= limit));
        assert_eq!(net, init_network(&[2, 4, 2], Activation::STL, 42).unwrap());
        assert_ne!(net, init_network(&[2, 4, 2], Activation::STL, 43).unwrap());
        assert!(init_network(&[2], Activation::STL, 0).is_err());
        assert!(init_network(&[2, 0, 2], Activation::STL, 0).is_err());
        assert!(init_network(&[2, 2], Activation::Stl { alpha: -1.0 }, 0).is_err());
    }

    #[test]
    fn forward_examples() {
        let net = pass_through(Activation::STL);
        let (logits, cache) = net
            .forward(&Matrix::from_vec(1, 1, vec![0.5]).unwrap())
            .unwrap();
        assert_eq!(cache.inputs[1].data, vec![0.5]);
        assert_eq!(logits.data, vec![0.5, 0.0]);
        let (_, cache) = net
            .forward(&Matrix::from_vec(1, 1, vec![E]).unwrap())
            .unwrap();
        assert!((cache.inputs[1].data[0] - 2.0).abs() < 1e-15);

        let mut zero = init_network(&[3, 5, 4], Activation::STL, 1).unwrap();
        for p in zero.params_mut() {
            *p = 0.0;
        }
        let logits = zero
            .logits(&Matrix::from_vec(2, 3, vec![0.3; 6]).unwrap())
            .unwrap();
        assert!(logits.data.iter().all(|&v| v == 0.0));
        assert!((cross_entropy(&logits, &[0, 3]).unwrap() - 4f64.ln()).abs() < 1e-15);

        assert!(net.forward(&Matrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn backward_examples() {
        let net = pass_through(Activation::STL);
        let x = Matrix::from_vec(1, 1, vec![0.0]).unwrap();
        let (logits, cache) = net.forward(&x).unwrap();
        assert_eq!(logits.data, vec![0.0, 0.0]);
        let g = net.backward(&logits, &cache, &[0]).unwrap();
        // softmax(0,0) - (1,0)
        assert_eq!(g.biases[1], vec![-0.5, 0.5]);

        let saturated = Matrix::from_vec(1, 2, vec![40.0, -40.0]).unwrap();
        let g = net.backward(&saturated, &cache, &[0]).unwrap();
        assert!(g.biases[1].iter().all(|v| v.abs() < 1e-30));

        assert!(matches!(
            net.backward(&logits, &cache, &[2]),
            Err(Error::LabelOutOfRange {
                label: 2,
                classes: 2
            })
        ));
    }

    #[test]
    fn accuracy_counts_argmax() {
        let logits = Matrix::from_vec(3, 2, vec![1.0, 0.0, 0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(accuracy(&logits, &[0, 1, 0]), 2.0 / 3.0);
    }
}
