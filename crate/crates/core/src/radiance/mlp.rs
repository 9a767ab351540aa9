use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::encoding::encode_into;
use super::grid::{INIT_COLOR_PRE, INIT_DENSITY_PRE};
use super::{sigmoid, softplus, Aabb, EncodingConfig, FieldSample, RadianceField, TrainableField};
use crate::{Error, Result};

const OUTPUTS: usize = 4;

/// Small fully connected field: `gamma(p), gamma(d) -> hidden -> hidden -> (r, g, b, sigma)`
/// with ReLU hidden activations.
///
/// Positions are normalized to `[-1, 1]` by the bounds before encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpField {
    bounds: Aabb,
    position_encoding: EncodingConfig,
    direction_encoding: EncodingConfig,
    width: usize,
    input_dim: usize,
    /// W1, b1, W2, b2, W3, b3 (row-major, output-major).
    params: Vec<f64>,
}

struct Activations {
    input: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    out: [f64; OUTPUTS],
}

impl MlpField {
    pub const DEFAULT_WIDTH: usize = 64;

    pub fn new(
        bounds: Aabb,
        position_encoding: EncodingConfig,
        direction_encoding: EncodingConfig,
        width: usize,
        seed: u64,
    ) -> Result<Self> {
        if !bounds.is_valid() {
            return Err(Error::InvalidParameter(format!("bounds {bounds:?}")));
        }
        if width == 0 {
            return Err(Error::InvalidParameter("hidden width must be positive".into()));
        }
        let input_dim = position_encoding.output_dim(3) + direction_encoding.output_dim(3);
        if input_dim == 0 {
            return Err(Error::InvalidParameter("empty network input".into()));
        }
        let mut field = Self {
            bounds,
            position_encoding,
            direction_encoding,
            width,
            input_dim,
            params: vec![0.0; Self::param_count(input_dim, width)],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = [(input_dim, width), (width, width), (width, OUTPUTS)];
        let mut offset = 0;
        for (fan_in, fan_out) in layers {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in &mut field.params[offset..offset + fan_in * fan_out] {
                *w = rng.gen_range(-limit..limit);
            }
            offset += fan_in * fan_out + fan_out;
        }
        // output biases start at the grid's empty-space initialization
        let b3 = field.params.len() - OUTPUTS;
        field.params[b3..b3 + 3].fill(INIT_COLOR_PRE);
        field.params[b3 + 3] = INIT_DENSITY_PRE;
        Ok(field)
    }

    /// Two hidden layers of 64, six position and two direction frequencies.
    pub fn with_defaults(bounds: Aabb, seed: u64) -> Result<Self> {
        Self::new(
            bounds,
            EncodingConfig::new(6, true),
            EncodingConfig::new(2, true),
            Self::DEFAULT_WIDTH,
            seed,
        )
    }

    fn param_count(input_dim: usize, width: usize) -> usize {
        input_dim * width + width + width * width + width + width * OUTPUTS + OUTPUTS
    }

    fn encode(&self, p: &Vector3<f64>, dir: &Vector3<f64>) -> Vec<f64> {
        let mut input = Vec::with_capacity(self.input_dim);
        encode_into(&self.bounds.normalize(p), &self.position_encoding, &mut input);
        encode_into(dir.as_slice(), &self.direction_encoding, &mut input);
        input
    }

    fn forward(&self, p: &Vector3<f64>, dir: &Vector3<f64>) -> Activations {
        let (n_in, w) = (self.input_dim, self.width);
        let input = self.encode(p, dir);
        let mut o = 0;
        let h1 = dense(&self.params, &mut o, &input, n_in, w, true);
        let h2 = dense(&self.params, &mut o, &h1, w, w, true);
        let out = dense(&self.params, &mut o, &h2, w, OUTPUTS, false);
        Activations {
            input,
            h1,
            h2,
            out: [out[0], out[1], out[2], out[3]],
        }
    }
}

fn dense(params: &[f64], offset: &mut usize, x: &[f64], n_in: usize, n_out: usize, relu: bool) -> Vec<f64> {
    let weights = &params[*offset..*offset + n_in * n_out];
    let bias = &params[*offset + n_in * n_out..*offset + n_in * n_out + n_out];
    *offset += n_in * n_out + n_out;
    weights
        .chunks_exact(n_in)
        .zip(bias)
        .map(|(row, b)| {
            let v = row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b;
            if relu {
                v.max(0.0)
            } else {
                v
            }
        })
        .collect()
}

/// Accumulates weight/bias gradients of one layer and returns dL/dx.
fn dense_backward(
    params: &[f64],
    grad: &mut [f64],
    offset: usize,
    x: &[f64],
    d_y: &[f64],
    n_in: usize,
    want_input_grad: bool,
) -> Vec<f64> {
    let n_out = d_y.len();
    let mut d_x = vec![0.0; if want_input_grad { n_in } else { 0 }];
    for (j, &dy) in d_y.iter().enumerate() {
        if dy == 0.0 {
            continue;
        }
        let row = offset + j * n_in;
        for i in 0..n_in {
            grad[row + i] += dy * x[i];
        }
        grad[offset + n_in * n_out + j] += dy;
        if want_input_grad {
            for i in 0..n_in {
                d_x[i] += dy * params[row + i];
            }
        }
    }
    d_x
}

impl RadianceField for MlpField {
    fn bounds(&self) -> Aabb {
        self.bounds
    }

    fn query(&self, p: &Vector3<f64>, dir: &Vector3<f64>) -> Option<FieldSample> {
        if !self.bounds.contains(p) {
            return None;
        }
        let a = self.forward(p, dir);
        Some(FieldSample {
            rgb: [sigmoid(a.out[0]), sigmoid(a.out[1]), sigmoid(a.out[2])],
            sigma: softplus(a.out[3]),
        })
    }
}

impl TrainableField for MlpField {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn accumulate_grad(&self, p: &Vector3<f64>, dir: &Vector3<f64>, d_rgb: [f64; 3], d_sigma: f64, grad: &mut [f64]) {
        if !self.bounds.contains(p) {
            return;
        }
        let (n_in, w) = (self.input_dim, self.width);
        let a = self.forward(p, dir);
        let mut d_out = [0.0; OUTPUTS];
        for k in 0..3 {
            let s = sigmoid(a.out[k]);
            d_out[k] = d_rgb[k] * s * (1.0 - s);
        }
        d_out[3] = d_sigma * sigmoid(a.out[3]);

        let o1 = 0;
        let o2 = n_in * w + w;
        let o3 = o2 + w * w + w;
        let mut d_h2 = dense_backward(&self.params, grad, o3, &a.h2, &d_out, w, true);
        for (d, h) in d_h2.iter_mut().zip(&a.h2) {
            if *h <= 0.0 {
                *d = 0.0;
            }
        }
        let mut d_h1 = dense_backward(&self.params, grad, o2, &a.h1, &d_h2, w, true);
        for (d, h) in d_h1.iter_mut().zip(&a.h1) {
            if *h <= 0.0 {
                *d = 0.0;
            }
        }
        dense_backward(&self.params, grad, o1, &a.input, &d_h1, n_in, false);
    }
}
